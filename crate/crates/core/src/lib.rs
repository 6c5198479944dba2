//! Executable combinatorics of better quasi orders at window scale.
//!
//! The crate works with finite truncations of the infinite objects of the
//! theory: relations on finite carriers, blocks restricted to a finite
//! window of the base, and arrays given as value maps on such blocks.
//! Searches that are non-constructive in the infinite setting are replaced
//! by exhaustive enumeration under explicit budgets.

pub mod arrays;
pub mod blocks;
pub mod enumerate;
pub mod error;
pub mod format;
pub mod gadget;
pub mod relations;
pub mod search;

pub use arrays::{BlockArray, Target};
pub use blocks::{FinSeq, Window, WindowedBlock};
pub use error::{Error, Result};
pub use relations::{Enumeration, FiniteRelation, PartialRanking};
