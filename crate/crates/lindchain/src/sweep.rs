//! Parallel 2D parameter-grid sweeps: per-cell trajectories, the variance
//! field `D`, directional derivatives, boundary detection, and phase-diagram
//! assembly. Cells are independent work units merged deterministically by
//! cell index, so results do not depend on execution order or thread count.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{evolve, EvolveConfig};
use crate::observables::{variance_d, VarianceWindow};
use crate::operators::OperatorCache;
use crate::params::ChainParams;
use crate::spectral::{classify_phase, fft_spectrum, ClassifierConfig, PhaseLabel, SignalSelector};
use crate::state::{initial_state, InitialStateSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisId {
    Lambda,
    Delta,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub axis: AxisId,
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step).round() as usize + 1;
        (0..count).map(|k| self.min + k as f64 * self.step).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.step <= 0.0 || self.max < self.min {
            return Err(Error::InvalidParams(
                "axis requires step > 0 and max >= min".into(),
            ));
        }
        if self.axis == AxisId::Lambda && (self.min < 0.0 || self.max > 1.0) {
            return Err(Error::InvalidParams("lambda axis outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// A 2D grid in parameter space; degenerate (single-value) axes are allowed,
/// which turns the sweep into a 1D scan or a single point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid2D {
    pub x: AxisSpec,
    pub y: AxisSpec,
    /// Parameters not owned by either axis.
    pub base: ChainParams,
    /// Base seed; combined with the cell index when the initial state has a
    /// random perturbation.
    pub seed: u64,
}

impl Grid2D {
    pub fn validate(&self) -> Result<()> {
        self.x.validate()?;
        self.y.validate()?;
        if self.x.axis == self.y.axis {
            return Err(Error::InvalidParams("grid axes must differ".into()));
        }
        self.base.validate()
    }

    pub fn params_at(&self, x: f64, y: f64) -> ChainParams {
        let mut p = self.base;
        for (axis, v) in [(self.x.axis, x), (self.y.axis, y)] {
            match axis {
                AxisId::Lambda => p.lambda = v,
                AxisId::Delta => p.delta = v,
                AxisId::V => p.v = v,
            }
        }
        p
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub init: InitialStateSpec,
    pub evolve: EvolveConfig,
    pub window: VarianceWindow,
    pub classifier: ClassifierConfig,
    /// Start of the spectral analysis window; the window ends at `t_max`.
    pub analysis_start: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            init: InitialStateSpec::default(),
            evolve: EvolveConfig::default(),
            window: VarianceWindow::default(),
            classifier: ClassifierConfig::default(),
            analysis_start: 300.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResult {
    pub ix: usize,
    pub iy: usize,
    pub lambda: f64,
    pub delta: f64,
    pub v: f64,
    #[serde(rename = "D")]
    pub d: Option<f64>,
    pub label: Option<String>,
    pub fine_label: Option<String>,
    pub converged: bool,
    pub n_odd_mean: Option<f64>,
    pub n_even_mean: Option<f64>,
    pub peak_f: Option<f64>,
    pub peak_amp: Option<f64>,
    pub residual: Option<f64>,
    /// Set when the cell's simulation failed; the sweep itself carries on.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepMeta {
    pub config: SweepConfig,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub grid: Grid2D,
    pub cells: Vec<CellResult>,
    pub meta: SweepMeta,
}

/// Single-cell evaluation shared by [`run_sweep`] and the CLI's one-shot
/// commands: evolve, variance over the window, classification, peak readout.
pub fn evaluate_cell(
    params: &ChainParams,
    init: &InitialStateSpec,
    config: &SweepConfig,
) -> Result<(f64, PhaseLabel, bool, f64, f64, f64)> {
    let cache = OperatorCache::build(*params)?;
    let rho0 = initial_state(init, params.n)?;
    let traj = evolve(&rho0, params, &cache, &config.evolve)?;
    let d = variance_d(&traj, &config.window)?;
    let spectrum = fft_spectrum(
        &traj,
        config.analysis_start,
        config.evolve.t_max,
        SignalSelector::NEven,
    )?;
    let label = classify_phase(&traj, &spectrum, &config.classifier)?;
    let idx = traj.window_indices(config.analysis_start, config.evolve.t_max);
    let n_odd_mean =
        idx.iter().map(|&k| traj.n_odd[k]).sum::<f64>() / idx.len() as f64;
    let n_even_mean =
        idx.iter().map(|&k| traj.n_even[k]).sum::<f64>() / idx.len() as f64;
    let converged = traj.residual < 1e-6;
    Ok((d, label, converged, n_odd_mean, n_even_mean, traj.residual))
}

fn run_cell(grid: &Grid2D, config: &SweepConfig, ix: usize, iy: usize, x: f64, y: f64) -> CellResult {
    let params = grid.params_at(x, y);
    let mut init = config.init;
    if init.random_amp > 0.0 {
        init.seed = grid
            .seed
            .wrapping_mul(0x9e3779b97f4a7c15)
            .wrapping_add((iy as u64) << 32 | ix as u64);
    }
    let mut cell = CellResult {
        ix,
        iy,
        lambda: params.lambda,
        delta: params.delta,
        v: params.v,
        d: None,
        label: None,
        fine_label: None,
        converged: false,
        n_odd_mean: None,
        n_even_mean: None,
        peak_f: None,
        peak_amp: None,
        residual: None,
        error: None,
    };
    match evaluate_cell(&params, &init, config) {
        Ok((d, label, converged, n_odd_mean, n_even_mean, residual)) => {
            cell.d = Some(d);
            cell.label = Some(label.coarse.to_string());
            cell.fine_label = Some(label.fine.to_string());
            cell.converged = converged;
            cell.n_odd_mean = Some(n_odd_mean);
            cell.n_even_mean = Some(n_even_mean);
            if let Some(&(f, a)) = label.peaks.first() {
                cell.peak_f = Some(f);
                cell.peak_amp = Some(a);
            }
            cell.residual = Some(residual);
        }
        Err(e) => cell.error = Some(e.to_string()),
    }
    cell
}

/// Run every cell of the grid. `jobs = 0` uses the global rayon pool;
/// otherwise a dedicated pool of that many workers is used. The result is a
/// deterministic merge by cell index either way.
pub fn run_sweep(grid: &Grid2D, config: &SweepConfig, jobs: usize) -> Result<SweepResult> {
    grid.validate()?;
    config.evolve.validate()?;
    let xs = grid.x.values();
    let ys = grid.y.values();
    let indices: Vec<(usize, usize)> = ys
        .iter()
        .enumerate()
        .flat_map(|(iy, _)| xs.iter().enumerate().map(move |(ix, _)| (ix, iy)))
        .collect();
    let work = |(ix, iy): &(usize, usize)| run_cell(grid, config, *ix, *iy, xs[*ix], ys[*iy]);
    let cells: Vec<CellResult> = if jobs == 1 {
        indices.iter().map(work).collect()
    } else if jobs == 0 {
        indices.par_iter().map(work).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidParams(e.to_string()))?;
        pool.install(|| indices.par_iter().map(work).collect())
    };
    Ok(SweepResult {
        grid: grid.clone(),
        cells,
        meta: SweepMeta {
            config: config.clone(),
            seed: grid.seed,
            version: crate::VERSION.to_string(),
        },
    })
}

impl SweepResult {
    pub fn nx(&self) -> usize {
        self.grid.x.values().len()
    }

    pub fn ny(&self) -> usize {
        self.grid.y.values().len()
    }

    /// `D` values as a `(ny, nx)` matrix; failed cells become NaN.
    pub fn d_field(&self) -> Array2<f64> {
        let mut out = Array2::from_elem((self.ny(), self.nx()), f64::NAN);
        for c in &self.cells {
            out[(c.iy, c.ix)] = c.d.unwrap_or(f64::NAN);
        }
        out
    }

    /// Coarse labels as a `(ny, nx)` matrix of strings.
    pub fn label_field(&self) -> Vec<Vec<String>> {
        let mut out = vec![vec![String::new(); self.nx()]; self.ny()];
        for c in &self.cells {
            out[c.iy][c.ix] = c.label.clone().unwrap_or_else(|| "ERR".into());
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep result serializes")
    }

    /// CSV matrix export (rows = y axis, columns = x axis).
    pub fn matrix_csv(field: &Array2<f64>) -> String {
        let mut out = String::new();
        for row in field.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.11e}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Central-difference directional derivative of a `(ny, nx)` field along the
/// unit vector `d = (d_x, d_y)` in parameter space; one-sided at the edges.
pub fn directional_derivative(
    field: &Array2<f64>,
    hx: f64,
    hy: f64,
    d: (f64, f64),
) -> Result<Array2<f64>> {
    if hx <= 0.0 || hy <= 0.0 {
        return Err(Error::InvalidParams("grid spacing must be positive".into()));
    }
    let (ny, nx) = field.dim();
    let norm = (d.0 * d.0 + d.1 * d.1).sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidParams("zero direction vector".into()));
    }
    let (dx, dy) = (d.0 / norm, d.1 / norm);
    let mut out = Array2::zeros((ny, nx));
    for iy in 0..ny {
        for ix in 0..nx {
            let ddx = if nx == 1 {
                0.0
            } else if ix == 0 {
                (field[(iy, 1)] - field[(iy, 0)]) / hx
            } else if ix == nx - 1 {
                (field[(iy, nx - 1)] - field[(iy, nx - 2)]) / hx
            } else {
                (field[(iy, ix + 1)] - field[(iy, ix - 1)]) / (2.0 * hx)
            };
            let ddy = if ny == 1 {
                0.0
            } else if iy == 0 {
                (field[(1, ix)] - field[(0, ix)]) / hy
            } else if iy == ny - 1 {
                (field[(ny - 1, ix)] - field[(ny - 2, ix)]) / hy
            } else {
                (field[(iy + 1, ix)] - field[(iy - 1, ix)]) / (2.0 * hy)
            };
            out[(iy, ix)] = dx * ddx + dy * ddy;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryEstimate {
    /// Adjacent cell pairs `((ix, iy), (ix', iy'))` straddling a jump.
    pub pairs: Vec<((usize, usize), (usize, usize))>,
    /// Jump magnitude per pair.
    pub jumps: Vec<f64>,
    /// Threshold actually used.
    pub threshold: f64,
}

/// Flag adjacent-cell pairs whose derivative difference exceeds the
/// threshold. With `threshold = None`, 5x the median absolute adjacent
/// difference over the grid is used.
pub fn detect_boundaries(deriv: &Array2<f64>, threshold: Option<f64>) -> BoundaryEstimate {
    let (ny, nx) = deriv.dim();
    let mut diffs: Vec<(f64, (usize, usize), (usize, usize))> = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            if ix + 1 < nx {
                let d = (deriv[(iy, ix + 1)] - deriv[(iy, ix)]).abs();
                diffs.push((d, (ix, iy), (ix + 1, iy)));
            }
            if iy + 1 < ny {
                let d = (deriv[(iy + 1, ix)] - deriv[(iy, ix)]).abs();
                diffs.push((d, (ix, iy), (ix, iy + 1)));
            }
        }
    }
    let threshold = threshold.unwrap_or_else(|| {
        let mut mags: Vec<f64> = diffs.iter().map(|(d, _, _)| *d).filter(|d| d.is_finite()).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if mags.is_empty() {
            0.0
        } else {
            mags[mags.len() / 2]
        };
        5.0 * median
    });
    let mut pairs = Vec::new();
    let mut jumps = Vec::new();
    for (d, a, b) in diffs {
        if d.is_finite() && threshold > 0.0 && d > threshold {
            pairs.push((a, b));
            jumps.push(d);
        }
    }
    BoundaryEstimate {
        pairs,
        jumps,
        threshold,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    pub labels: Vec<Vec<String>>,
    pub boundary: BoundaryEstimate,
}

/// Per-cell coarse labels with a boundary overlay from the `D`-field
/// directional derivative along `d`.
pub fn phase_diagram(result: &SweepResult, d: (f64, f64)) -> Result<PhaseDiagram> {
    let field = result.d_field();
    let deriv = directional_derivative(&field, result.grid.x.step, result.grid.y.step, d)?;
    let boundary = detect_boundaries(&deriv, None);
    Ok(PhaseDiagram {
        x_values: result.grid.x.values(),
        y_values: result.grid.y.values(),
        labels: result.label_field(),
        boundary,
    })
}
