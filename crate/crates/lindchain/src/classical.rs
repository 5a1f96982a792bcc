//! Mean-field (`lambda = 0`) oracle: per-site Bloch equations obtained by
//! substituting a product state into the master equation. Each site sees a
//! single-site Lindblad problem with a self-consistent detuning
//! `delta_j = Delta - V (m_{j-1} + m_{j+1})`, `m_j = (s^z_j + 1)/2`.
//!
//! Cost is linear in the chain length, so this module doubles as a fast
//! explorer of the classical limit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{EvolveConfig, Method};
use crate::params::ChainParams;

/// Per-site Bloch vectors `(s^x_j, s^y_j, s^z_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochState(pub Vec<[f64; 3]>);

impl BlochState {
    /// Product state with per-site polar angles (phase-free, as produced by
    /// [`crate::state::InitialStateSpec`]): `s = (sin theta, 0, -cos theta)`.
    pub fn from_angles(angles: &[f64]) -> Self {
        BlochState(
            angles
                .iter()
                .map(|&th| [th.sin(), 0.0, -th.cos()])
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    /// Spin-up occupations `(s^z + 1)/2`.
    pub fn populations(&self) -> Vec<f64> {
        self.0.iter().map(|s| (s[2] + 1.0) / 2.0).collect()
    }

    pub fn max_bloch_norm(&self) -> f64 {
        self.0
            .iter()
            .map(|s| (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Time derivative of the Bloch vectors:
/// `ds^x = delta_j s^y - (gamma/2) s^x`,
/// `ds^y = -delta_j s^x - Omega s^z - (gamma/2) s^y`,
/// `ds^z = Omega s^y - gamma (s^z + 1)`.
pub fn bloch_rhs(state: &BlochState, params: &ChainParams) -> BlochState {
    let n = state.n();
    let m: Vec<f64> = state.populations();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let (left, right) = if n == 1 {
            // single site wraps onto itself twice
            (m[0], m[0])
        } else {
            (m[(j + n - 1) % n], m[(j + 1) % n])
        };
        let delta_j = params.delta - params.v * (left + right);
        let [sx, sy, sz] = state.0[j];
        let g2 = params.gamma / 2.0;
        out.push([
            delta_j * sy - g2 * sx,
            -delta_j * sx - params.omega * sz - g2 * sy,
            params.omega * sy - params.gamma * (sz + 1.0),
        ]);
    }
    BlochState(out)
}

/// Trajectory of the classical system, sampled like the full integrator and
/// exported with the same CSV schema.
#[derive(Debug, Clone)]
pub struct BlochTrajectory {
    pub times: Vec<f64>,
    pub site_pops: Vec<Vec<f64>>,
    pub n_odd: Vec<f64>,
    pub n_even: Vec<f64>,
    pub final_state: BlochState,
}

impl BlochTrajectory {
    pub fn to_csv(&self) -> String {
        let n = self.site_pops.first().map_or(0, |p| p.len());
        let mut out = String::from("t");
        for j in 1..=n {
            out.push_str(&format!(",n_{j}"));
        }
        out.push_str(",n_odd,n_even\n");
        for (k, t) in self.times.iter().enumerate() {
            out.push_str(&format!("{t:.11e}"));
            for p in &self.site_pops[k] {
                out.push_str(&format!(",{p:.11e}"));
            }
            out.push_str(&format!(",{:.11e},{:.11e}\n", self.n_odd[k], self.n_even[k]));
        }
        out
    }
}

fn axpy(y: &mut BlochState, a: f64, x: &BlochState) {
    for (yj, xj) in y.0.iter_mut().zip(&x.0) {
        for c in 0..3 {
            yj[c] += a * xj[c];
        }
    }
}

fn rk4_step(state: &mut BlochState, h: f64, params: &ChainParams) {
    let k1 = bloch_rhs(state, params);
    let mut t = state.clone();
    axpy(&mut t, h / 2.0, &k1);
    let k2 = bloch_rhs(&t, params);
    t = state.clone();
    axpy(&mut t, h / 2.0, &k2);
    let k3 = bloch_rhs(&t, params);
    t = state.clone();
    axpy(&mut t, h, &k3);
    let k4 = bloch_rhs(&t, params);
    axpy(state, h / 6.0, &k1);
    axpy(state, h / 3.0, &k2);
    axpy(state, h / 3.0, &k3);
    axpy(state, h / 6.0, &k4);
}

fn sublattice(pops: &[f64]) -> (f64, f64) {
    let n = pops.len();
    if n == 1 {
        return (pops[0], pops[0]);
    }
    let half = (n / 2) as f64;
    (
        pops.iter().step_by(2).sum::<f64>() / half,
        pops.iter().skip(1).step_by(2).sum::<f64>() / half,
    )
}

/// Integrate the Bloch equations. The adaptive method falls back to RK4 with
/// a step chosen from the tolerances; the defining accuracy check is the
/// equivalence with the full density-matrix evolution at `lambda = 0`.
pub fn evolve_bloch(
    state0: &BlochState,
    params: &ChainParams,
    config: &EvolveConfig,
) -> Result<BlochTrajectory> {
    params.validate()?;
    config.validate()?;
    let dt = match config.method {
        Method::Rk4 => config.dt,
        Method::Rk45 => config.dt.min(0.002),
    };
    let steps_per_sample = (config.sample_interval / dt).round().max(1.0) as usize;
    let n_samples = (config.t_max / (dt * steps_per_sample as f64)).round() as usize;
    let mut state = state0.clone();
    let mut times = Vec::with_capacity(n_samples + 1);
    let mut site_pops = Vec::with_capacity(n_samples + 1);
    let mut n_odd = Vec::with_capacity(n_samples + 1);
    let mut n_even = Vec::with_capacity(n_samples + 1);
    let mut record = |t: f64, s: &BlochState| {
        let pops = s.populations();
        let (o, e) = sublattice(&pops);
        times.push(t);
        site_pops.push(pops);
        n_odd.push(o);
        n_even.push(e);
    };
    record(0.0, &state);
    for s in 1..=n_samples {
        for _ in 0..steps_per_sample {
            rk4_step(&mut state, dt, params);
        }
        if state.0.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NumericalFailure {
                t: (s * steps_per_sample) as f64 * dt,
                reason: "NaN in Bloch state".into(),
            });
        }
        record((s * steps_per_sample) as f64 * dt, &state);
    }
    Ok(BlochTrajectory {
        times,
        site_pops,
        n_odd,
        n_even,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::single_site_steady_population;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dark_fixed_point() {
        let p = ChainParams::new(4, 2.0, 0.0, 5.0, 1.0, 0.0).unwrap();
        let down = BlochState::from_angles(&[0.0; 4]);
        let rhs = bloch_rhs(&down, &p);
        for s in rhs.0 {
            assert_eq!(s, [0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn single_site_fixed_point_matches_analytic() {
        // V = 0, N = 1: integrate to the fixed point, compare populations
        let p = ChainParams::new(1, 2.0, 1.5, 0.0, 1.0, 0.0).unwrap();
        let cfg = EvolveConfig {
            t_max: 100.0,
            ..Default::default()
        };
        let traj = evolve_bloch(&BlochState::from_angles(&[0.0]), &p, &cfg).unwrap();
        let expect = single_site_steady_population(2.0, 1.5, 1.0);
        assert_abs_diff_eq!(
            traj.site_pops.last().unwrap()[0],
            expect,
            epsilon = 1e-8
        );
    }

    #[test]
    fn pure_decay_without_drive() {
        let p = ChainParams::new(2, 1.0, 0.0, 3.0, 1.0, 0.0).unwrap();
        let up = BlochState::from_angles(&[std::f64::consts::PI; 2]);
        let cfg = EvolveConfig {
            t_max: 5.0,
            ..Default::default()
        };
        let traj = evolve_bloch(&up, &p, &cfg).unwrap();
        for (k, &t) in traj.times.iter().enumerate() {
            for &pop in &traj.site_pops[k] {
                assert_abs_diff_eq!(pop, (-t).exp(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn uniform_state_stays_uniform() {
        let p = ChainParams::new(6, 2.0, 1.5, 5.0, 1.0, 0.0).unwrap();
        let cfg = EvolveConfig {
            t_max: 20.0,
            ..Default::default()
        };
        let traj = evolve_bloch(&BlochState::from_angles(&[0.3; 6]), &p, &cfg).unwrap();
        for pops in &traj.site_pops {
            for &v in pops {
                assert!((v - pops[0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bloch_ball_containment() {
        let p = ChainParams::new(4, 2.0, 1.5, 5.0, 1.0, 0.0).unwrap();
        let cfg = EvolveConfig {
            t_max: 30.0,
            ..Default::default()
        };
        let s0 = BlochState::from_angles(&[0.0, 1e-3, 0.0, 1e-3]);
        let traj = evolve_bloch(&s0, &p, &cfg).unwrap();
        assert!(traj.final_state.max_bloch_norm() <= 1.0 + 1e-9);
    }

    #[test]
    fn matches_full_evolution_at_lambda_zero() {
        // the module's defining property, small-size version
        use crate::integrator::evolve;
        use crate::operators::OperatorCache;
        use crate::state::{initial_state, InitialStateSpec};
        let p = ChainParams::new(4, 2.0, 1.5, 5.0, 1.0, 0.0).unwrap();
        let cache = OperatorCache::build(p).unwrap();
        let spec = InitialStateSpec::default();
        let rho0 = initial_state(&spec, 4).unwrap();
        let cfg = EvolveConfig {
            t_max: 10.0,
            ..Default::default()
        };
        let full = evolve(&rho0, &p, &cache, &cfg).unwrap();
        let bloch0 = BlochState::from_angles(&spec.angles(4));
        let cl = evolve_bloch(&bloch0, &p, &cfg).unwrap();
        assert_eq!(full.times.len(), cl.times.len());
        let mut max_diff = 0.0f64;
        for k in 0..full.times.len() {
            for j in 0..4 {
                max_diff = max_diff.max((full.site_pops[k][j] - cl.site_pops[k][j]).abs());
            }
        }
        assert!(max_diff < 1e-6, "max population mismatch {max_diff:.3e}");
    }
}
