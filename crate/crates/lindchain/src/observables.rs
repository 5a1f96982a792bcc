//! Steady-state and trajectory diagnostics: site populations, the pooled
//! population variance `D`, the correlation function `C_r`, and entanglement
//! negativity via odd/even partial transposes.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::operators::{site_bit, CMat, OperatorCache};
use crate::state::DensityMatrix;

/// Eigenvalues of a partial transpose smaller than this in magnitude are
/// treated as zero when summing the negativity.
pub const NEGATIVITY_EIG_TOL: f64 = 1e-12;

const POP_TOL: f64 = 1e-6;

/// `n_j^r = Re Tr(n_j rho)` for every site.
pub fn site_populations(rho: &DensityMatrix, cache: &OperatorCache) -> Result<Vec<f64>> {
    let n = cache.n();
    let dim = cache.dim;
    let mut pops = vec![0.0; n];
    for b in 0..dim {
        let z = rho.0[(b, b)].re;
        for (j, p) in pops.iter_mut().enumerate() {
            if (b >> j) & 1 == 1 {
                *p += z;
            }
        }
    }
    for &p in &pops {
        if !(-POP_TOL..=1.0 + POP_TOL).contains(&p) {
            return Err(Error::InvalidState(format!(
                "population {p} outside [0, 1]"
            )));
        }
    }
    Ok(pops)
}

/// `(n_odd, n_even)` sublattice averages; the chain length must be even.
pub fn sublattice_averages(populations: &[f64]) -> Result<(f64, f64)> {
    let n = populations.len();
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidParams(format!(
            "sublattice averages require an even site count, got {n}"
        )));
    }
    let half = (n / 2) as f64;
    let odd = populations.iter().step_by(2).sum::<f64>() / half;
    let even = populations.iter().skip(1).step_by(2).sum::<f64>() / half;
    Ok((odd, even))
}

/// Late-time window over which `D` is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceWindow {
    /// Window start time.
    pub t_start: f64,
    /// Window length.
    pub length: f64,
    /// Sample spacing used when pooling (must be a multiple of the
    /// trajectory's own sample interval).
    pub sample_interval: f64,
}

impl Default for VarianceWindow {
    fn default() -> Self {
        VarianceWindow {
            t_start: 300.0,
            length: 100.0,
            sample_interval: 0.1,
        }
    }
}

impl VarianceWindow {
    pub fn validate(&self) -> Result<()> {
        if self.length <= 0.0 || self.sample_interval <= 0.0 {
            return Err(Error::InvalidParams(
                "variance window length and spacing must be positive".into(),
            ));
        }
        if self.length / self.sample_interval < 100.0 - 1e-9 {
            return Err(Error::InvalidParams(
                "variance window must contain at least 100 samples".into(),
            ));
        }
        Ok(())
    }
}

/// Population variance of the pooled multiset
/// `{n_j^r(t_i) : j = 1..N, t_i in window}` (normalized by count).
pub fn variance_d(trajectory: &Trajectory, window: &VarianceWindow) -> Result<f64> {
    window.validate()?;
    let t_end = window.t_start + window.length;
    let traj_end = *trajectory.times.last().ok_or_else(|| {
        Error::InvalidParams("empty trajectory".into())
    })?;
    if t_end > traj_end + 1e-9 {
        return Err(Error::InvalidParams(format!(
            "variance window end {t_end} exceeds trajectory end {traj_end}"
        )));
    }
    let dt = trajectory.sample_interval();
    let stride = if dt > 0.0 {
        (window.sample_interval / dt).round().max(1.0) as usize
    } else {
        1
    };
    let mut count = 0usize;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (k, &t) in trajectory.times.iter().enumerate() {
        if t < window.t_start - 1e-9 || t > t_end + 1e-9 || k % stride != 0 {
            continue;
        }
        for &p in &trajectory.site_pops[k] {
            count += 1;
            sum += p;
            sum_sq += p * p;
        }
    }
    if count == 0 {
        return Err(Error::InvalidParams(
            "variance window contains no samples".into(),
        ));
    }
    let mean = sum / count as f64;
    Ok((sum_sq / count as f64 - mean * mean).max(0.0))
}

/// `C_r = (1/N) sum_i |<sz_i sz_{i+r}> - <sz_i><sz_{i+r}>|` with periodic
/// wrap. All operators are diagonal, so only the state's diagonal enters.
pub fn correlation_function(rho: &DensityMatrix, cache: &OperatorCache, r: usize) -> Result<f64> {
    let n = cache.n();
    if r == 0 || r > n / 2 {
        return Err(Error::InvalidParams(format!(
            "correlation distance r = {r} outside 1..N/2"
        )));
    }
    let dim = cache.dim;
    // <sz_i> and <sz_i sz_j> from the diagonal
    let mut sz = vec![0.0; n];
    let mut szsz = vec![0.0; n];
    for b in 0..dim {
        let w = rho.0[(b, b)].re;
        for i in 0..n {
            let zi = 2.0 * site_bit(b, i + 1) as f64 - 1.0;
            sz[i] += w * zi;
            let j = (i + r) % n + 1;
            let zj = 2.0 * site_bit(b, j) as f64 - 1.0;
            szsz[i] += w * zi * zj;
        }
    }
    let mut c = 0.0;
    for i in 0..n {
        let j = (i + r) % n;
        c += (szsz[i] - sz[i] * sz[j]).abs();
    }
    Ok(c / n as f64)
}

/// Partial transpose over the sites in `site_set` (1-based): element
/// `(a, b)` of the result is element `(a', b')` of the input where `a'`,
/// `b'` swap the `site_set` bits of `a` and `b`.
pub fn partial_transpose(rho: &CMat, site_set: &[usize], n: usize) -> CMat {
    let mut mask = 0usize;
    for &s in site_set {
        assert!(s >= 1 && s <= n, "site {s} outside 1..{n}");
        mask |= 1 << (s - 1);
    }
    let dim = 1usize << n;
    let mut out = Array2::zeros((dim, dim));
    for a in 0..dim {
        for b in 0..dim {
            let ap = (a & !mask) | (b & mask);
            let bp = (b & !mask) | (a & mask);
            out[(a, b)] = rho[(ap, bp)];
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NegativityResult {
    /// Sum over both sublattice transposes of the absolute negative
    /// eigenvalues.
    pub total: f64,
    pub eigenvalues_odd: Vec<f64>,
    pub eigenvalues_even: Vec<f64>,
}

/// Entanglement negativity summed over the odd-site and even-site partial
/// transposes.
pub fn negativity(rho: &DensityMatrix, n: usize) -> Result<NegativityResult> {
    if n % 2 != 0 {
        return Err(Error::InvalidParams(
            "negativity partitions require an even chain length".into(),
        ));
    }
    let odd_sites: Vec<usize> = (1..=n).step_by(2).collect();
    let even_sites: Vec<usize> = (2..=n).step_by(2).collect();
    let mut total = 0.0;
    let mut spectra = Vec::with_capacity(2);
    for sites in [&odd_sites, &even_sites] {
        let pt = partial_transpose(&rho.0, sites, n);
        let (w, _) = pt.eigh(UPLO::Lower)?;
        let mut eigs: Vec<f64> = w.to_vec();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        total += eigs
            .iter()
            .filter(|&&e| e < -NEGATIVITY_EIG_TOL)
            .map(|e| e.abs())
            .sum::<f64>();
        spectra.push(eigs);
    }
    let eigenvalues_even = spectra.pop().unwrap();
    let eigenvalues_odd = spectra.pop().unwrap();
    Ok(NegativityResult {
        total,
        eigenvalues_odd,
        eigenvalues_even,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ChainParams;
    use crate::state::{initial_state, InitialStateSpec};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64 as C64;

    fn bell_state() -> DensityMatrix {
        // (|dd> + |uu>)/sqrt(2) on 2 sites: basis indices 0 and 3
        let mut m: CMat = Array2::zeros((4, 4));
        let h = C64::new(0.5, 0.0);
        m[(0, 0)] = h;
        m[(0, 3)] = h;
        m[(3, 0)] = h;
        m[(3, 3)] = h;
        DensityMatrix::new(m).unwrap()
    }

    fn cache(n: usize) -> OperatorCache {
        OperatorCache::build(ChainParams::new(n, 2.0, 1.5, 5.0, 1.0, 0.5).unwrap()).unwrap()
    }

    #[test]
    fn populations_known_states() {
        let c = cache(4);
        let down = initial_state(
            &InitialStateSpec {
                theta0: 0.0,
                epsilon: 0.0,
                random_amp: 0.0,
                seed: 0,
            },
            4,
        )
        .unwrap();
        assert_eq!(site_populations(&down, &c).unwrap(), vec![0.0; 4]);

        let mixed = DensityMatrix::new(CMat::eye(16) / C64::new(16.0, 0.0)).unwrap();
        for p in site_populations(&mixed, &c).unwrap() {
            assert_abs_diff_eq!(p, 0.5, epsilon = 1e-12);
        }

        // |up down up down>
        let mut m: CMat = Array2::zeros((16, 16));
        m[(0b0101, 0b0101)] = C64::new(1.0, 0.0);
        let alt = DensityMatrix::new(m).unwrap();
        assert_eq!(site_populations(&alt, &c).unwrap(), vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn sublattice_average_arithmetic() {
        assert_eq!(sublattice_averages(&[1.0, 0.0, 1.0, 0.0]).unwrap(), (1.0, 0.0));
        assert_eq!(sublattice_averages(&[0.7, 0.7]).unwrap(), (0.7, 0.7));
        let (o, e) = sublattice_averages(&[0.2, 0.8, 0.4, 0.6]).unwrap();
        assert_abs_diff_eq!(o, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(e, 0.7, epsilon = 1e-15);
        assert!(sublattice_averages(&[0.1, 0.2, 0.3]).is_err());
    }

    fn synthetic_trajectory(times: Vec<f64>, pops: Vec<Vec<f64>>) -> Trajectory {
        let n_odd = pops
            .iter()
            .map(|p| sublattice_averages(p).map(|x| x.0).unwrap_or(p[0]))
            .collect();
        let n_even = pops
            .iter()
            .map(|p| sublattice_averages(p).map(|x| x.1).unwrap_or(p[0]))
            .collect();
        let dim = 1 << pops[0].len();
        Trajectory {
            times,
            site_pops: pops,
            n_odd,
            n_even,
            final_state: DensityMatrix::new_unchecked(
                CMat::eye(dim) / C64::new(dim as f64, 0.0),
            ),
            converged: false,
            residual: f64::NAN,
        }
    }

    #[test]
    fn variance_constant_and_alternating() {
        let times: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.1).collect();
        let uniform = synthetic_trajectory(
            times.clone(),
            times.iter().map(|_| vec![0.4; 4]).collect(),
        );
        let w = VarianceWindow {
            t_start: 50.0,
            length: 100.0,
            sample_interval: 0.5,
        };
        assert_abs_diff_eq!(variance_d(&uniform, &w).unwrap(), 0.0, epsilon = 1e-15);

        let alternating = synthetic_trajectory(
            times.clone(),
            times.iter().map(|_| vec![0.0, 1.0, 0.0, 1.0]).collect(),
        );
        assert_abs_diff_eq!(variance_d(&alternating, &w).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn variance_window_bounds_checked() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let traj = synthetic_trajectory(
            times.clone(),
            times.iter().map(|_| vec![0.4; 2]).collect(),
        );
        let w = VarianceWindow {
            t_start: 5.0,
            length: 100.0,
            sample_interval: 0.5,
        };
        assert!(variance_d(&traj, &w).is_err());
    }

    #[test]
    fn correlation_product_state_vanishes() {
        let c = cache(4);
        let rho = initial_state(
            &InitialStateSpec {
                theta0: 0.8,
                epsilon: 0.2,
                random_amp: 0.0,
                seed: 0,
            },
            4,
        )
        .unwrap();
        for r in 1..=2 {
            assert_abs_diff_eq!(
                correlation_function(&rho, &c, r).unwrap(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn correlation_bell_state() {
        let c = cache(2);
        let rho = bell_state();
        assert_abs_diff_eq!(
            correlation_function(&rho, &c, 1).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn correlation_invariant_under_cyclic_shift() {
        use crate::model::shift_state;
        let c = cache(4);
        let p = ChainParams::new(4, 2.0, 1.5, 5.0, 1.0, 0.3).unwrap();
        let rho0 = initial_state(&InitialStateSpec::default(), 4).unwrap();
        let cfg = crate::integrator::EvolveConfig {
            t_max: 5.0,
            ..Default::default()
        };
        let traj = crate::integrator::evolve(&rho0, &p, &c, &cfg).unwrap();
        let rho = traj.final_state;
        let shifted = DensityMatrix::new(shift_state(&rho.0, 4)).unwrap();
        for r in 1..=2 {
            let a = correlation_function(&rho, &c, r).unwrap();
            let b = correlation_function(&shifted, &c, r).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn partial_transpose_identities() {
        let rho = bell_state();
        // S = {} is the identity map
        let pt0 = partial_transpose(&rho.0, &[], 2);
        assert_eq!(&pt0, rho.matrix());
        // applying twice returns the input
        let pt = partial_transpose(&rho.0, &[1], 2);
        let ptpt = partial_transpose(&pt, &[1], 2);
        assert_eq!(&ptpt, rho.matrix());
        // trace preserved, Hermitian
        let tr: C64 = pt.diag().sum();
        assert_abs_diff_eq!(tr.re, 1.0, epsilon = 1e-14);
        assert!(crate::state::hermiticity_defect(&pt) < 1e-14);
    }

    #[test]
    fn partial_transpose_bell_spectrum() {
        let rho = bell_state();
        let pt = partial_transpose(&rho.0, &[1], 2);
        let (w, _) = pt.eigh(UPLO::Lower).unwrap();
        let mut eigs = w.to_vec();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [-0.5, 0.5, 0.5, 0.5];
        for (e, x) in eigs.iter().zip(expect) {
            assert_abs_diff_eq!(*e, x, epsilon = 1e-12);
        }
    }

    #[test]
    fn negativity_bell_and_product() {
        let rho = bell_state();
        let neg = negativity(&rho, 2).unwrap();
        // both transposes contribute 1/2 each
        assert_abs_diff_eq!(neg.total, 1.0, epsilon = 1e-10);
        let sum_odd: f64 = neg.eigenvalues_odd.iter().sum();
        let sum_even: f64 = neg.eigenvalues_even.iter().sum();
        assert_abs_diff_eq!(sum_odd, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sum_even, 1.0, epsilon = 1e-12);

        let prod = initial_state(
            &InitialStateSpec {
                theta0: 1.1,
                epsilon: 0.3,
                random_amp: 0.0,
                seed: 0,
            },
            4,
        )
        .unwrap();
        assert!(negativity(&prod, 4).unwrap().total < 1e-10);
    }

    #[test]
    fn negativity_invariant_under_two_site_shift() {
        use crate::model::shift_state;
        let c = cache(4);
        let p = ChainParams::new(4, 2.0, 1.5, 5.0, 1.0, 0.6).unwrap();
        let rho0 = initial_state(&InitialStateSpec::default(), 4).unwrap();
        let cfg = crate::integrator::EvolveConfig {
            t_max: 5.0,
            ..Default::default()
        };
        let traj = crate::integrator::evolve(&rho0, &p, &c, &cfg).unwrap();
        let rho = traj.final_state;
        let shifted2 =
            DensityMatrix::new(shift_state(&shift_state(&rho.0, 4), 4)).unwrap();
        let a = negativity(&rho, 4).unwrap().total;
        let b = negativity(&shifted2, 4).unwrap().total;
        assert_abs_diff_eq!(a, b, epsilon = 1e-10);
    }
}
