use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::interval::MAX_GRANULARITY;

/// Constants of the exponential depth-to-count fit `alpha * e^(beta * d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConstants {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for FitConstants {
    fn default() -> Self {
        FitConstants {
            alpha: 1.0593,
            beta: 0.5266,
        }
    }
}

/// Parameters of one partitioning run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceConfig {
    /// Number of workers to balance across.
    pub p: usize,
    /// Probing stop criterion: relative range of the fast estimates in the window.
    pub psc: f64,
    /// Adaptive stop criterion, in percent of one worker's share of the work.
    pub asc: f64,
    /// Length of the sliding window of fast estimates.
    pub window: usize,
    /// Boundaries are snapped to multiples of `2^-granularity`.
    pub granularity: u32,
    pub seed: u64,
    pub max_probes: u64,
    /// Re-probe budget per boundary.
    pub max_reprobes: u32,
    pub fit: FitConstants,
    /// Upper bound on probing threads; `None` uses one thread per subtree.
    pub threads: Option<usize>,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        BalanceConfig {
            p: 1,
            psc: 0.1,
            asc: 10.0,
            window: 10,
            granularity: 16,
            seed: 42,
            max_probes: 100_000,
            max_reprobes: 32,
            fit: FitConstants::default(),
            threads: None,
        }
    }
}

impl BalanceConfig {
    pub fn with_workers(p: usize) -> Self {
        BalanceConfig {
            p,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 1 {
            return Err(invalid_arg("worker count p must be >= 1"));
        }
        if !(self.psc > 0.0 && self.psc < 1.0) {
            return Err(invalid_arg(format!(
                "psc must be in (0, 1), got {}",
                self.psc
            )));
        }
        if !(self.asc > 0.0) || !self.asc.is_finite() {
            return Err(invalid_arg(format!("asc must be > 0, got {}", self.asc)));
        }
        if self.window < 1 {
            return Err(invalid_arg("window length must be >= 1"));
        }
        if self.granularity < 1 || self.granularity > MAX_GRANULARITY {
            return Err(invalid_arg(format!(
                "granularity must be in 1..={MAX_GRANULARITY}, got {}",
                self.granularity
            )));
        }
        if self.max_probes < 1 {
            return Err(invalid_arg("max_probes must be >= 1"));
        }
        if !(self.fit.alpha > 0.0 && self.fit.beta > 0.0) {
            return Err(invalid_arg("fit constants must be positive"));
        }
        if self.threads == Some(0) {
            return Err(invalid_arg("thread cap must be >= 1"));
        }
        Ok(())
    }
}
