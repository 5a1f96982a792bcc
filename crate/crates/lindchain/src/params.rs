use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest chain length accepted by the dense operator machinery (dim 4096).
pub const MAX_SITES: usize = 12;

/// Physical and model parameters of the chain. All energies are in units of
/// the decay rate `gamma`, which is kept explicit but conventionally 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    /// Number of sites, periodic boundary. Sublattice diagnostics and the
    /// negativity partitions require an even value; single-site oracle runs
    /// use `n = 1`.
    pub n: usize,
    /// Detuning.
    pub delta: f64,
    /// Rabi frequency.
    pub omega: f64,
    /// Nearest-neighbor interaction strength.
    pub v: f64,
    /// Decay rate (unit of energy).
    pub gamma: f64,
    /// Interpolation weight between the quantum interaction (1) and its
    /// mean-field decoupling (0).
    pub lambda: f64,
}

impl ChainParams {
    pub fn new(n: usize, delta: f64, omega: f64, v: f64, gamma: f64, lambda: f64) -> Result<Self> {
        let p = ChainParams {
            n,
            delta,
            omega,
            v,
            gamma,
            lambda,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("chain length must be >= 1".into()));
        }
        if self.n > MAX_SITES {
            return Err(Error::ChainTooLong {
                n: self.n,
                max: MAX_SITES,
            });
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidParams(format!(
                "lambda = {} outside [0, 1]",
                self.lambda
            )));
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "gamma = {} must be positive",
                self.gamma
            )));
        }
        for (name, x) in [("delta", self.delta), ("omega", self.omega), ("v", self.v)] {
            if !x.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        Ok(())
    }

    /// Hilbert-space dimension `2^n`.
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Requires even `n` (sublattice observables, negativity partitions).
    pub fn require_even(&self) -> Result<()> {
        if self.n % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "operation requires an even chain length, got n = {}",
                self.n
            )));
        }
        Ok(())
    }
}

impl Default for ChainParams {
    fn default() -> Self {
        ChainParams {
            n: 6,
            delta: 2.0,
            omega: 1.5,
            v: 5.0,
            gamma: 1.0,
            lambda: 0.1,
        }
    }
}
