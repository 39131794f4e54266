/// Numerical tolerances and capacity caps shared by every analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    /// Row and column sums must be within this distance of 1.
    pub tol_stoch: f64,
    /// Flows and entries at or below this value count as zero.
    pub tol_zero: f64,
    /// Largest dimension accepted by subset-enumerating analyses.
    pub max_dim: usize,
    /// Largest dimension accepted by zero-flow graph construction.
    pub max_switching_dim: usize,
    /// Largest eventual period a derived presentation may have.
    pub max_period: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tol_stoch: 1e-9,
            tol_zero: 1e-12,
            max_dim: 16,
            max_switching_dim: 12,
            max_period: 1_000_000,
        }
    }
}

impl Settings {
    pub fn with_tol_zero(mut self, tol: f64) -> Self {
        self.tol_zero = tol;
        self
    }

    pub fn with_tol_stoch(mut self, tol: f64) -> Self {
        self.tol_stoch = tol;
        self
    }

    pub(crate) fn check_dim(&self, dim: usize) -> crate::Result<()> {
        if dim > self.max_dim {
            return Err(crate::Error::Capacity {
                what: "dimension",
                found: dim,
                limit: self.max_dim,
            });
        }
        Ok(())
    }
}
