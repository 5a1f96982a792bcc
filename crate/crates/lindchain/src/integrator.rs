//! Time evolution of the density matrix under the nonlinear Lindblad
//! generator: fixed-step RK4, adaptive embedded RK45 (Dormand-Prince), a
//! steady-state search, and the exact Liouvillian null-space oracle at
//! `lambda = 1`.

use ndarray::{Array1, Array2};
use ndarray_linalg::Eig;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{lindblad_rhs_into, RhsWorkspace};
use crate::operators::{CMat, OperatorCache};
use crate::params::ChainParams;
use crate::state::{frobenius_norm, DensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Fixed-step classical Runge-Kutta.
    Rk4,
    /// Adaptive Dormand-Prince 5(4) with embedded error estimate.
    Rk45,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub method: Method,
    /// Step size for RK4; initial step for RK45. Units of 1/gamma.
    pub dt: f64,
    /// Total evolution time.
    pub t_max: f64,
    /// Sampling interval (rounded to a whole number of RK4 steps).
    pub sample_interval: f64,
    /// Re-hermitize and trace-renormalize every this many steps.
    pub hermitize_interval: usize,
    /// Absolute and relative tolerances for the adaptive method.
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Abort threshold on `|Tr rho - 1|`.
    pub trace_tol: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            method: Method::Rk4,
            dt: 0.005,
            t_max: 500.0,
            sample_interval: 0.05,
            hermitize_interval: 100,
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            trace_tol: 1e-8,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dt <= 0.0 || self.t_max <= 0.0 {
            return Err(Error::InvalidParams("dt and t_max must be positive".into()));
        }
        if self.sample_interval < self.dt {
            return Err(Error::InvalidParams(
                "sample_interval must be >= dt".into(),
            ));
        }
        if self.abs_tol <= 0.0 || self.rel_tol <= 0.0 || self.trace_tol <= 0.0 {
            return Err(Error::InvalidParams("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Sampled run of the master equation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `site_pops[k][j]` = population of site `j + 1` at sample `k`.
    pub site_pops: Vec<Vec<f64>>,
    pub n_odd: Vec<f64>,
    pub n_even: Vec<f64>,
    pub final_state: DensityMatrix,
    /// True when a steady-state search hit its residual target.
    pub converged: bool,
    /// Final `||rhs||_F`.
    pub residual: f64,
}

impl Trajectory {
    pub fn sample_interval(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// CSV export: `t,n_1,...,n_N,n_odd,n_even` with 12 significant digits.
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

    /// Restrict a signal to samples with `t_start <= t <= t_end`.
    pub fn window_indices(&self, t_start: f64, t_end: f64) -> Vec<usize> {
        self.times
            .iter()
            .enumerate()
            .filter(|(_, &t)| t >= t_start - 1e-9 && t <= t_end + 1e-9)
            .map(|(k, _)| k)
            .collect()
    }
}

fn site_populations_fast(rho: &CMat, n: usize) -> Vec<f64> {
    let dim = 1usize << n;
    let mut m = vec![0.0; n];
    for b in 0..dim {
        let z = rho[(b, b)].re;
        for (j, mj) in m.iter_mut().enumerate() {
            if (b >> j) & 1 == 1 {
                *mj += z;
            }
        }
    }
    m
}

fn sublattice(pops: &[f64]) -> (f64, f64) {
    let n = pops.len();
    if n == 1 {
        return (pops[0], pops[0]);
    }
    let half = (n / 2) as f64;
    let odd = pops.iter().step_by(2).sum::<f64>() / half;
    let even = pops.iter().skip(1).step_by(2).sum::<f64>() / half;
    (odd, even)
}

struct StepBuffers {
    /// Stage derivatives; RK4 uses the first four, RK45 all seven.
    ks: Vec<CMat>,
    tmp: CMat,
    ws: RhsWorkspace,
}

impl StepBuffers {
    fn new(dim: usize) -> Self {
        StepBuffers {
            ks: (0..7).map(|_| Array2::zeros((dim, dim))).collect(),
            tmp: Array2::zeros((dim, dim)),
            ws: RhsWorkspace::default(),
        }
    }
}

fn rk4_step(
    rho: &mut CMat,
    h: f64,
    params: &ChainParams,
    cache: &OperatorCache,
    buf: &mut StepBuffers,
) -> Result<()> {
    let hh = C64::new(h, 0.0);
    let [k1, k2, k3, k4] = &mut buf.ks[..4] else {
        unreachable!()
    };
    lindblad_rhs_into(rho, params, cache, &mut buf.ws, k1)?;
    buf.tmp.assign(rho);
    buf.tmp.scaled_add(hh * 0.5, k1);
    lindblad_rhs_into(&buf.tmp, params, cache, &mut buf.ws, k2)?;
    buf.tmp.assign(rho);
    buf.tmp.scaled_add(hh * 0.5, k2);
    lindblad_rhs_into(&buf.tmp, params, cache, &mut buf.ws, k3)?;
    buf.tmp.assign(rho);
    buf.tmp.scaled_add(hh, k3);
    lindblad_rhs_into(&buf.tmp, params, cache, &mut buf.ws, k4)?;
    rho.scaled_add(hh / 6.0, k1);
    rho.scaled_add(hh / 3.0, k2);
    rho.scaled_add(hh / 3.0, k3);
    rho.scaled_add(hh / 6.0, k4);
    Ok(())
}

// Dormand-Prince 5(4) tableau
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One attempted Dormand-Prince step; returns the scaled error estimate.
fn rk45_attempt(
    rho: &CMat,
    h: f64,
    params: &ChainParams,
    cache: &OperatorCache,
    buf: &mut StepBuffers,
    out: &mut CMat,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    let _ = DP_C;
    for s in 0..7 {
        buf.tmp.assign(rho);
        let (done, rest) = buf.ks.split_at_mut(s);
        for (j, kj) in done.iter().enumerate() {
            let a = DP_A[s][j];
            if a != 0.0 {
                buf.tmp.scaled_add(C64::new(h * a, 0.0), kj);
            }
        }
        lindblad_rhs_into(&buf.tmp, params, cache, &mut buf.ws, &mut rest[0])?;
    }
    out.assign(rho);
    for (j, b) in DP_B5.iter().enumerate() {
        if *b != 0.0 {
            out.scaled_add(C64::new(h * b, 0.0), &buf.ks[j]);
        }
    }
    // error = h * sum (b5 - b4) k_j, scaled by abs/rel tolerance
    let mut err_sq = 0.0;
    let scale_ref = frobenius_norm(rho).max(frobenius_norm(out));
    let denom = abs_tol + rel_tol * scale_ref;
    let dim = rho.nrows();
    for a in 0..dim {
        for bcol in 0..dim {
            let mut e = C64::new(0.0, 0.0);
            for (j, k) in buf.ks.iter().enumerate() {
                let d = DP_B5[j] - DP_B4[j];
                if d != 0.0 {
                    e += C64::new(h * d, 0.0) * k[(a, bcol)];
                }
            }
            err_sq += e.norm_sqr();
        }
    }
    Ok(err_sq.sqrt() / denom)
}

/// Internal driver shared by [`evolve`] and [`find_steady_state`].
/// `stop_tol`, when set, ends the run as soon as `||rhs||_F` at a sample time
/// drops below it.
fn evolve_inner(
    rho0: &DensityMatrix,
    params: &ChainParams,
    cache: &OperatorCache,
    config: &EvolveConfig,
    stop_tol: Option<f64>,
) -> Result<Trajectory> {
    params.validate()?;
    config.validate()?;
    rho0.check_hermitian(crate::state::HERMITICITY_TOL)?;
    rho0.check_trace(config.trace_tol)?;
    let dim = cache.dim;
    let mut rho = rho0.0.clone();
    let mut buf = StepBuffers::new(dim);
    let mut rhs_buf: CMat = Array2::zeros((dim, dim));

    let mut times = Vec::new();
    let mut site_pops = Vec::new();
    let mut n_odd = Vec::new();
    let mut n_even = Vec::new();

    let mut record = |t: f64, rho: &CMat| {
        let pops = site_populations_fast(rho, params.n);
        let (o, e) = sublattice(&pops);
        times.push(t);
        site_pops.push(pops);
        n_odd.push(o);
        n_even.push(e);
    };
    record(0.0, &rho);

    let mut converged = false;
    let mut residual = f64::NAN;
    let check_sample = |t: f64,
                            rho: &mut CMat,
                            buf_ws: &mut RhsWorkspace,
                            rhs_buf: &mut CMat|
     -> Result<Option<bool>> {
        // health checks at every sample time
        let tr: C64 = rho.diag().sum();
        if !tr.re.is_finite() || !tr.im.is_finite() {
            return Err(Error::NumericalFailure {
                t,
                reason: "NaN detected in state".into(),
            });
        }
        if (tr.re - 1.0).abs() > config.trace_tol || tr.im.abs() > config.trace_tol {
            return Err(Error::NumericalFailure {
                t,
                reason: format!("trace drift {:.3e}", (tr.re - 1.0).abs().max(tr.im.abs())),
            });
        }
        let hd = crate::state::hermiticity_defect(rho);
        if hd > 1e-8 {
            return Err(Error::NumericalFailure {
                t,
                reason: format!("Hermiticity drift {hd:.3e}"),
            });
        }
        if let Some(tol) = stop_tol {
            lindblad_rhs_into(rho, params, cache, buf_ws, rhs_buf)?;
            let r = frobenius_norm(rhs_buf);
            if r < tol {
                return Ok(Some(true));
            }
            return Ok(Some(false));
        }
        Ok(None)
    };

    match config.method {
        Method::Rk4 => {
            let steps_per_sample = (config.sample_interval / config.dt).round().max(1.0) as usize;
            let dt = config.dt;
            let n_samples = (config.t_max / (dt * steps_per_sample as f64)).round() as usize;
            let mut step_count: usize = 0;
            'outer: for s in 1..=n_samples {
                for _ in 0..steps_per_sample {
                    rk4_step(&mut rho, dt, params, cache, &mut buf)?;
                    step_count += 1;
                    if config.hermitize_interval > 0 && step_count % config.hermitize_interval == 0
                    {
                        hermitize_in_place(&mut rho);
                    }
                }
                let t = (s * steps_per_sample) as f64 * dt;
                record(t, &rho);
                match check_sample(t, &mut rho, &mut buf.ws, &mut rhs_buf)? {
                    Some(true) => {
                        converged = true;
                        residual = frobenius_norm(&rhs_buf);
                        break 'outer;
                    }
                    Some(false) => {
                        residual = frobenius_norm(&rhs_buf);
                    }
                    None => {}
                }
            }
        }
        Method::Rk45 => {
            let mut t = 0.0;
            let mut h = config.dt;
            let mut next_sample = config.sample_interval;
            let mut out: CMat = Array2::zeros((dim, dim));
            let mut steps: usize = 0;
            while t < config.t_max - 1e-12 {
                let target = next_sample.min(config.t_max);
                let h_try = h.min(target - t);
                let err = rk45_attempt(
                    &rho,
                    h_try,
                    params,
                    cache,
                    &mut buf,
                    &mut out,
                    config.abs_tol,
                    config.rel_tol,
                )?;
                if !err.is_finite() {
                    return Err(Error::NumericalFailure {
                        t,
                        reason: "NaN in adaptive step".into(),
                    });
                }
                if err <= 1.0 {
                    t += h_try;
                    rho.assign(&out);
                    steps += 1;
                    if config.hermitize_interval > 0 && steps % config.hermitize_interval == 0 {
                        hermitize_in_place(&mut rho);
                    }
                    if (t - target).abs() < 1e-12 && (target - next_sample).abs() < 1e-12 {
                        record(t, &rho);
                        next_sample += config.sample_interval;
                        match check_sample(t, &mut rho, &mut buf.ws, &mut rhs_buf)? {
                            Some(true) => {
                                converged = true;
                                residual = frobenius_norm(&rhs_buf);
                                break;
                            }
                            Some(false) => {
                                residual = frobenius_norm(&rhs_buf);
                            }
                            None => {}
                        }
                    }
                }
                // standard PI-free step-size update with safety factor
                let factor = if err > 0.0 {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                } else {
                    5.0
                };
                let proposed = (h_try * factor).min(config.sample_interval).max(1e-10);
                // a step clamped to a sample boundary must not shrink the
                // persistent step size, or leftovers erode it to nothing
                h = if err <= 1.0 { proposed.max(h) } else { proposed };
                if h < 1e-9 {
                    return Err(Error::NumericalFailure {
                        t,
                        reason: "adaptive step underflow".into(),
                    });
                }
            }
        }
    }

    if stop_tol.is_none() {
        lindblad_rhs_into(&rho, params, cache, &mut buf.ws, &mut rhs_buf)?;
        residual = frobenius_norm(&rhs_buf);
    }
    let final_state = DensityMatrix::new_unchecked(rho);
    Ok(Trajectory {
        times,
        site_pops,
        n_odd,
        n_even,
        final_state,
        converged,
        residual,
    })
}

fn hermitize_in_place(rho: &mut CMat) {
    let dim = rho.nrows();
    for a in 0..dim {
        for b in (a + 1)..dim {
            let avg = (rho[(a, b)] + rho[(b, a)].conj()) * 0.5;
            rho[(a, b)] = avg;
            rho[(b, a)] = avg.conj();
        }
    }
    let mut tr = 0.0;
    for a in 0..dim {
        let d = rho[(a, a)];
        rho[(a, a)] = C64::new(d.re, 0.0);
        tr += d.re;
    }
    rho.mapv_inplace(|z| z / tr);
}

/// Integrate the nonlinear master equation and record samples.
pub fn evolve(
    rho0: &DensityMatrix,
    params: &ChainParams,
    cache: &OperatorCache,
    config: &EvolveConfig,
) -> Result<Trajectory> {
    evolve_inner(rho0, params, cache, config, None)
}

/// Evolve until `||rhs||_F < tol_rhs` or `t_max` is reached. A false
/// `converged` flag is a physical outcome inside the limit-cycle phase.
pub fn find_steady_state(
    rho0: &DensityMatrix,
    params: &ChainParams,
    cache: &OperatorCache,
    config: &EvolveConfig,
    tol_rhs: f64,
    t_max: f64,
) -> Result<Trajectory> {
    let mut cfg = *config;
    cfg.t_max = t_max;
    evolve_inner(rho0, params, cache, &cfg, Some(tol_rhs))
}

/// Default guard on the superoperator dimension `4^N`.
pub const LIOUVILLIAN_MAX_SITES: usize = 4;

/// Exact steady state at `lambda = 1` from the null space of the linear
/// Liouvillian, built column by column by applying the generator to basis
/// matrices.
pub fn liouvillian_steady_state(
    params: &ChainParams,
    cache: &OperatorCache,
) -> Result<DensityMatrix> {
    params.validate()?;
    if params.lambda != 1.0 {
        return Err(Error::InvalidParams(
            "Liouvillian null-space solve requires lambda = 1 (linear generator)".into(),
        ));
    }
    if params.n > LIOUVILLIAN_MAX_SITES {
        return Err(Error::ChainTooLong {
            n: params.n,
            max: LIOUVILLIAN_MAX_SITES,
        });
    }
    let dim = cache.dim;
    let sdim = dim * dim;
    let mut sup: CMat = Array2::zeros((sdim, sdim));
    let mut basis: CMat = Array2::zeros((dim, dim));
    let mut col: CMat = Array2::zeros((dim, dim));
    let mut ws = RhsWorkspace::default();
    for c in 0..dim {
        for d in 0..dim {
            basis[(c, d)] = C64::new(1.0, 0.0);
            lindblad_rhs_into(&basis, params, cache, &mut ws, &mut col)?;
            basis[(c, d)] = C64::new(0.0, 0.0);
            let j = c * dim + d;
            for a in 0..dim {
                for b in 0..dim {
                    sup[(a * dim + b, j)] = col[(a, b)];
                }
            }
        }
    }
    let (eigvals, eigvecs) = sup.eig()?;
    let null_tol = 1e-8;
    let null_idx: Vec<usize> = eigvals
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() < null_tol)
        .map(|(i, _)| i)
        .collect();
    if null_idx.is_empty() {
        return Err(Error::Linalg("no null eigenvalue found".into()));
    }
    if null_idx.len() > 1 {
        return Err(Error::DegenerateNullSpace {
            dim: null_idx.len(),
        });
    }
    let vec: Array1<C64> = eigvecs.column(null_idx[0]).to_owned();
    let mut rho: CMat = Array2::zeros((dim, dim));
    for a in 0..dim {
        for b in 0..dim {
            rho[(a, b)] = vec[a * dim + b];
        }
    }
    // hermitize and trace-normalize the raw eigenvector
    let adj = rho.t().mapv(|z| z.conj());
    rho = (&rho + &adj) * C64::new(0.5, 0.0);
    let tr: C64 = rho.diag().sum();
    rho.mapv_inplace(|z| z / tr);
    let state = DensityMatrix::new(rho)?;
    // verify fixed point
    let mut rhs: CMat = Array2::zeros((dim, dim));
    lindblad_rhs_into(&state.0, params, cache, &mut ws, &mut rhs)?;
    let r = frobenius_norm(&rhs);
    if r > 1e-10 {
        return Err(Error::Linalg(format!(
            "null-space candidate has residual {r:.3e}"
        )));
    }
    Ok(state)
}

/// Analytic single-site optical-Bloch steady population, used as an oracle.
pub fn single_site_steady_population(delta: f64, omega: f64, gamma: f64) -> f64 {
    (omega * omega / 4.0) / (delta * delta + gamma * gamma / 4.0 + omega * omega / 2.0)
}
