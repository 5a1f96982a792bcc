//! Density matrices and initial-state construction.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::CMat;

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = 1e-6;

/// A `2^N x 2^N` density matrix. Hermiticity and unit trace are enforced on
/// construction; positivity is a diagnostic check only.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(pub CMat);

impl DensityMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        let rho = DensityMatrix(m);
        rho.check_hermitian(HERMITICITY_TOL)?;
        rho.check_trace(TRACE_TOL)?;
        Ok(rho)
    }

    /// Wrap without validation (internal fast path).
    pub(crate) fn new_unchecked(m: CMat) -> Self {
        DensityMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn trace(&self) -> C64 {
        self.0.diag().sum()
    }

    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        let d = hermiticity_defect(&self.0);
        if d > tol {
            return Err(Error::InvalidState(format!(
                "Hermiticity defect {d:.3e} exceeds {tol:.1e}"
            )));
        }
        Ok(())
    }

    pub fn check_trace(&self, tol: f64) -> Result<()> {
        let t = self.trace();
        if (t.re - 1.0).abs() > tol || t.im.abs() > tol {
            return Err(Error::InvalidState(format!(
                "trace {t} deviates from 1 beyond {tol:.1e}"
            )));
        }
        Ok(())
    }

    /// Smallest eigenvalue; used as a positivity diagnostic.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let (w, _) = self.0.eigh(UPLO::Lower)?;
        Ok(w.iter().cloned().fold(f64::INFINITY, f64::min))
    }

    /// Replace by `(rho + rho^dag)/2` and renormalize the trace.
    pub fn hermitize(&mut self) {
        let adj = self.0.t().mapv(|z| z.conj());
        self.0 = (&self.0 + &adj) * C64::new(0.5, 0.0);
        let t = self.trace().re;
        self.0.mapv_inplace(|z| z / t);
    }
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    let mut s = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let d = m[(i, j)] - m[(j, i)].conj();
            s += d.norm_sqr();
        }
    }
    s.sqrt()
}

pub fn frobenius_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Product initial state: each site `j` carries the pure state
/// `cos(theta_j/2)|down> + sin(theta_j/2)|up>` with
/// `theta_j = theta0 + (-1)^j * epsilon (+ random term if seeded)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialStateSpec {
    /// Base polar angle.
    pub theta0: f64,
    /// Staggered perturbation amplitude.
    pub epsilon: f64,
    /// Optional uniform random angle perturbation amplitude.
    pub random_amp: f64,
    /// RNG seed for the random perturbation.
    pub seed: u64,
}

impl Default for InitialStateSpec {
    fn default() -> Self {
        // All spins down with a small staggered seed so that spontaneous
        // sublattice symmetry breaking is reproducible.
        InitialStateSpec {
            theta0: 0.0,
            epsilon: 1e-3,
            random_amp: 0.0,
            seed: 0,
        }
    }
}

impl InitialStateSpec {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon < 0.0 || self.random_amp < 0.0 {
            return Err(Error::InvalidParams(
                "perturbation amplitudes must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Per-site polar angles for an `n`-site chain.
    pub fn angles(&self, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (1..=n)
            .map(|j| {
                let stag = if j % 2 == 0 { self.epsilon } else { -self.epsilon };
                let random = if self.random_amp > 0.0 {
                    rng.gen_range(-self.random_amp..=self.random_amp)
                } else {
                    0.0
                };
                self.theta0 + stag + random
            })
            .collect()
    }
}

/// Build the pure product density matrix for the given spec.
pub fn initial_state(spec: &InitialStateSpec, n: usize) -> Result<DensityMatrix> {
    spec.validate()?;
    let dim = 1usize << n;
    let angles = spec.angles(n);
    // amplitude of basis state b = prod_j (cos or sin of theta_j / 2)
    let mut psi = vec![C64::new(0.0, 0.0); dim];
    for (b, amp) in psi.iter_mut().enumerate() {
        let mut a = 1.0;
        for (j, th) in angles.iter().enumerate() {
            let bit = (b >> j) & 1;
            a *= if bit == 1 {
                (th / 2.0).sin()
            } else {
                (th / 2.0).cos()
            };
        }
        *amp = C64::new(a, 0.0);
    }
    let mut rho: CMat = Array2::zeros((dim, dim));
    for a in 0..dim {
        for b in 0..dim {
            rho[(a, b)] = psi[a] * psi[b].conj();
        }
    }
    // exact unit trace by construction, renormalize against rounding
    let t: f64 = rho.diag().iter().map(|z| z.re).sum();
    rho.mapv_inplace(|z| z / t);
    DensityMatrix::new(rho)
}
