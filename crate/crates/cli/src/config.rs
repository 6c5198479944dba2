use std::str::FromStr;

use bqo_core::search::SearchContext;
use bqo_core::{Error, Result, Window};

/// Environment variable holding the global enumeration cap.
pub const CAP_VAR: &str = "BQO_ENUM_CAP";

const DEFAULT_CAP: u64 = 100_000_000;
/// Largest gadget carrier materialized regardless of the cap.
const GADGET_CARRIER_LIMIT: u64 = 50_000;

/// Settings shared by every command of one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub json: bool,
    pub budget: u64,
    pub jobs: usize,
    pub seed: u64,
    pub fixed_window: bool,
}

impl RunConfig {
    pub fn new(json: bool, budget: Option<u64>, jobs: usize, seed: u64, fixed_window: bool) -> Result<Self> {
        let cap = match std::env::var(CAP_VAR) {
            Ok(v) => v
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::Domain(format!("{CAP_VAR} must be a positive integer, got `{v}`")))?,
            Err(_) => DEFAULT_CAP,
        };
        // Budgets appear in TOML output, whose integers are signed.
        let cap = cap.min(i64::MAX as u64);
        let budget = budget.unwrap_or(cap);
        if budget == 0 || cap == 0 {
            return Err(Error::Domain("budgets must be positive".into()));
        }
        if jobs == 0 {
            return Err(Error::Domain("--jobs must be positive".into()));
        }
        Ok(RunConfig {
            json,
            budget: budget.min(cap),
            jobs,
            seed,
            fixed_window,
        })
    }

    pub fn search(&self) -> SearchContext {
        let ctx = SearchContext::new(self.budget, self.jobs);
        if self.fixed_window {
            ctx.with_fixed_window()
        } else {
            ctx
        }
    }

    pub fn gadget_cap(&self) -> u64 {
        self.budget.min(GADGET_CARRIER_LIMIT)
    }
}

/// `a..b` for `{a, …, b}`, or an explicit comma-separated list of points.
#[derive(Debug, Clone)]
pub struct WindowSpec(pub Window);

impl FromStr for WindowSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| format!("`{t}` is not a natural number"))
        };
        if let Some((a, b)) = s.split_once("..") {
            let (a, b) = (num(a)?, num(b)?);
            if a > b {
                return Err(format!("empty window {s}"));
            }
            return Ok(WindowSpec(Window::range(a, b)));
        }
        let points = s.split(',').map(num).collect::<std::result::Result<Vec<_>, _>>()?;
        Window::new(points)
            .map(WindowSpec)
            .map_err(|_| "window points must be strictly increasing".to_string())
    }
}
