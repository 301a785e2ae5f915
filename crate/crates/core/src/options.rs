use serde::{Deserialize, Serialize};

/// Stopping rule shared by the alternating solvers: stop once an iteration
/// improves the objective by at most `eps` times its current value, or after
/// `max_iter` iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub eps: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            max_iter: 500,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(crate::Error::Precondition(format!("eps must be positive, got {}", self.eps)));
        }
        if self.max_iter == 0 {
            return Err(crate::Error::Precondition("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn converged(&self, prev: f64, cur: f64) -> bool {
        cur - prev <= self.eps * cur.abs()
    }
}
