use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use lindchain::classical::{evolve_bloch, BlochState};
use lindchain::config::{RunConfig, OUTPUT_DIR_ENV};
use lindchain::error::Error;
use lindchain::integrator::{
    evolve, find_steady_state, liouvillian_steady_state, single_site_steady_population,
    EvolveConfig, Method,
};
use lindchain::model::{
    effective_hamiltonian, ensemble_hamiltonian, MeanFields, PartitionDistribution,
};
use lindchain::observables::{
    correlation_function, negativity, site_populations, sublattice_averages, variance_d,
};
use lindchain::operators::OperatorCache;
use lindchain::params::ChainParams;
use lindchain::spectral::{
    classify_phase, detect_bifurcations, dominant_peaks, fft_spectrum, CoarsePhase, FinePhase,
    PhaseLabel, SignalSelector,
};
use lindchain::state::{initial_state, InitialStateSpec};
use lindchain::sweep::{run_sweep, AxisId, AxisSpec, Grid2D, SweepConfig, SweepResult};

const EXIT_INVALID_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_VALIDATION: u8 = 4;

#[derive(Parser)]
#[command(name = "lindchain", version, about = "Dissipative Ising chain simulator with an interpolated quantum/mean-field Hamiltonian")]
struct Cli {
    /// Output directory (default: $LINDCHAIN_OUTPUT_DIR or the current dir).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a single trajectory; writes a CSV and a summary JSON.
    Evolve(CommonOpts),
    /// Search for a steady state and report populations, correlations, and
    /// negativity.
    Steady(SteadyOpts),
    /// FFT spectrum of the late-time sublattice signal.
    Spectrum(CommonOpts),
    /// 2D parameter-grid sweep with phase classification.
    Sweep(SweepOpts),
    /// Run the built-in oracle cross-check suite.
    Validate,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    v: Option<f64>,
    /// Decay rate; kept at 1 by convention (energies are in units of gamma).
    #[arg(long)]
    gamma: Option<f64>,
    /// Base polar angle; accepts a float or "pi"-expressions like "pi/2".
    #[arg(long)]
    theta0: Option<String>,
    /// Staggered perturbation amplitude.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Random perturbation amplitude.
    #[arg(long)]
    random_amp: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Integration method: rk4 or rk45.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    sample_interval: Option<f64>,
    /// Start of the late-time analysis window.
    #[arg(long)]
    analysis_start: Option<f64>,
    /// Use the classical Bloch-equation path (lambda = 0 semantics).
    #[arg(long, default_value_t = false)]
    classical: bool,
    /// Output file prefix.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SteadyOpts {
    #[command(flatten)]
    common: CommonOpts,
    /// Residual target on ||rhs||_F.
    #[arg(long)]
    tol_rhs: Option<f64>,
}

#[derive(Args, Clone)]
struct SweepOpts {
    #[command(flatten)]
    common: CommonOpts,
    #[arg(long, default_value = "lambda")]
    x_axis: String,
    #[arg(long, default_value_t = 0.0)]
    x_min: f64,
    #[arg(long, default_value_t = 0.6)]
    x_max: f64,
    #[arg(long, default_value_t = 0.01)]
    x_step: f64,
    #[arg(long, default_value = "delta")]
    y_axis: String,
    #[arg(long, default_value_t = 2.0)]
    y_min: f64,
    #[arg(long, default_value_t = 2.0)]
    y_max: f64,
    #[arg(long, default_value_t = 0.1)]
    y_step: f64,
    /// Worker threads; 0 = all cores. Does not affect results.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Sweep-level seed combined with cell indices.
    #[arg(long, default_value_t = 0)]
    sweep_seed: u64,
    /// Also write CSV matrices for D, its directional derivative, and labels.
    #[arg(long, default_value_t = false)]
    matrices: bool,
}

fn parse_angle(s: &str) -> Result<f64, Error> {
    let t = s.trim().to_lowercase();
    if let Ok(x) = t.parse::<f64>() {
        return Ok(x);
    }
    if let Some(rest) = t.strip_suffix("pi") {
        let coef = if rest.is_empty() {
            1.0
        } else {
            rest.parse::<f64>()
                .map_err(|_| Error::InvalidParams(format!("bad angle {s}")))?
        };
        return Ok(coef * std::f64::consts::PI);
    }
    if let Some(denom) = t.strip_prefix("pi/") {
        let d: f64 = denom
            .parse()
            .map_err(|_| Error::InvalidParams(format!("bad angle {s}")))?;
        return Ok(std::f64::consts::PI / d);
    }
    Err(Error::InvalidParams(format!("bad angle {s}")))
}

fn load_config(opts: &CommonOpts) -> Result<RunConfig, Error> {
    let mut cfg = match &opts.config {
        Some(path) => RunConfig::from_toml_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(n) = opts.n {
        cfg.params.n = n;
    }
    if let Some(x) = opts.lambda {
        cfg.params.lambda = x;
    }
    if let Some(x) = opts.delta {
        cfg.params.delta = x;
    }
    if let Some(x) = opts.omega {
        cfg.params.omega = x;
    }
    if let Some(x) = opts.v {
        cfg.params.v = x;
    }
    if let Some(x) = opts.gamma {
        cfg.params.gamma = x;
    }
    if let Some(s) = &opts.theta0 {
        cfg.init.theta0 = parse_angle(s)?;
    }
    if let Some(x) = opts.epsilon {
        cfg.init.epsilon = x;
    }
    if let Some(x) = opts.random_amp {
        cfg.init.random_amp = x;
    }
    if let Some(x) = opts.seed {
        cfg.init.seed = x;
    }
    if let Some(m) = &opts.method {
        cfg.evolve.method = match m.as_str() {
            "rk4" => Method::Rk4,
            "rk45" => Method::Rk45,
            other => {
                return Err(Error::InvalidParams(format!(
                    "unknown method {other} (expected rk4 or rk45)"
                )))
            }
        };
    }
    if let Some(x) = opts.dt {
        cfg.evolve.dt = x;
    }
    if let Some(x) = opts.t_max {
        cfg.evolve.t_max = x;
        // keep dependent windows inside the run when t_max shrinks
        if cfg.analysis_start >= x {
            cfg.analysis_start = x / 2.0;
        }
        if cfg.window.t_start + cfg.window.length > x {
            cfg.window.t_start = x / 2.0;
            cfg.window.length = x / 2.0;
            cfg.window.sample_interval = (x / 2.0 / 200.0).min(0.1);
        }
    }
    if let Some(x) = opts.sample_interval {
        cfg.evolve.sample_interval = x;
    }
    if let Some(x) = opts.analysis_start {
        cfg.analysis_start = x;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_prefix(opts: &CommonOpts, output_dir: &Option<PathBuf>, default_name: &str) -> PathBuf {
    if let Some(p) = &opts.out {
        return p.clone();
    }
    let dir = output_dir
        .clone()
        .or_else(|| std::env::var(OUTPUT_DIR_ENV).ok().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    dir.join(default_name)
}

/// Append `.ext` to a prefix without `Path::with_extension` semantics, which
/// would eat anything after a dot already present in the file name.
fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write_file(path: &Path, content: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, content)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn run_trajectory(
    cfg: &RunConfig,
) -> Result<(lindchain::integrator::Trajectory, OperatorCache), Error> {
    let cache = OperatorCache::build(cfg.params)?;
    let rho0 = initial_state(&cfg.init, cfg.params.n)?;
    let traj = evolve(&rho0, &cfg.params, &cache, &cfg.evolve)?;
    Ok((traj, cache))
}

fn summarize(cfg: &RunConfig, traj: &lindchain::integrator::Trajectory) -> serde_json::Value {
    let spectrum = fft_spectrum(
        traj,
        cfg.analysis_start,
        cfg.evolve.t_max,
        SignalSelector::NEven,
    )
    .ok();
    let label = spectrum
        .as_ref()
        .and_then(|sp| classify_phase(traj, sp, &cfg.classifier).ok());
    let d = variance_d(traj, &cfg.window).ok();
    json!({
        "config": cfg,
        "version": lindchain::VERSION,
        "final_n_odd": traj.n_odd.last(),
        "final_n_even": traj.n_even.last(),
        "D": d,
        "label": label.as_ref().map(|l| l.coarse.to_string()),
        "fine_label": label.as_ref().map(|l| l.fine.to_string()),
        "osc_amplitude": label.as_ref().map(|l| l.osc_amplitude),
        "sublattice_gap": label.as_ref().map(|l| l.sublattice_gap),
        "residual": traj.residual,
        "converged": traj.converged,
    })
}

fn cmd_evolve(opts: &CommonOpts, output_dir: &Option<PathBuf>) -> Result<(), Error> {
    let cfg = load_config(opts)?;
    let prefix = out_prefix(opts, output_dir, "evolve");
    if opts.classical {
        if cfg.params.lambda != 0.0 {
            return Err(Error::InvalidParams(
                "--classical represents lambda = 0 semantics only".into(),
            ));
        }
        let s0 = BlochState::from_angles(&cfg.init.angles(cfg.params.n));
        let traj = evolve_bloch(&s0, &cfg.params, &cfg.evolve)?;
        write_file(&with_suffix(&prefix, "csv"), &traj.to_csv())?;
        let summary = json!({
            "config": cfg,
            "version": lindchain::VERSION,
            "final_n_odd": traj.n_odd.last(),
            "final_n_even": traj.n_even.last(),
            "classical": true,
        });
        write_file(
            &with_suffix(&prefix, "summary.json"),
            &serde_json::to_string_pretty(&summary).unwrap(),
        )?;
        return Ok(());
    }
    let (traj, _) = run_trajectory(&cfg)?;
    write_file(&with_suffix(&prefix, "csv"), &traj.to_csv())?;
    let summary = summarize(&cfg, &traj);
    write_file(
        &with_suffix(&prefix, "summary.json"),
        &serde_json::to_string_pretty(&summary).unwrap(),
    )?;
    Ok(())
}

fn cmd_steady(opts: &SteadyOpts, output_dir: &Option<PathBuf>) -> Result<(), Error> {
    let mut cfg = load_config(&opts.common)?;
    if let Some(t) = opts.tol_rhs {
        cfg.tol_rhs = t;
    }
    let cache = OperatorCache::build(cfg.params)?;
    let rho0 = initial_state(&cfg.init, cfg.params.n)?;
    let traj = find_steady_state(
        &rho0,
        &cfg.params,
        &cache,
        &cfg.evolve,
        cfg.tol_rhs,
        cfg.evolve.t_max,
    )?;
    let rho = &traj.final_state;
    let pops = site_populations(rho, &cache)?;
    let sub = sublattice_averages(&pops).ok();
    let correlations: Vec<f64> = if cfg.params.n >= 2 {
        (1..=cfg.params.n / 2)
            .map(|r| correlation_function(rho, &cache, r))
            .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    let neg = if cfg.params.n % 2 == 0 {
        Some(negativity(rho, cfg.params.n)?)
    } else {
        None
    };
    let report = json!({
        "config": cfg,
        "version": lindchain::VERSION,
        "converged": traj.converged,
        "residual": traj.residual,
        "populations": pops,
        "n_odd": sub.map(|s| s.0),
        "n_even": sub.map(|s| s.1),
        "correlations": correlations,
        "negativity": neg,
    });
    let prefix = out_prefix(&opts.common, output_dir, "steady");
    write_file(
        &with_suffix(&prefix, "steady.json"),
        &serde_json::to_string_pretty(&report).unwrap(),
    )?;
    Ok(())
}

fn cmd_spectrum(opts: &CommonOpts, output_dir: &Option<PathBuf>) -> Result<(), Error> {
    let cfg = load_config(opts)?;
    let (traj, _) = run_trajectory(&cfg)?;
    let spectrum = fft_spectrum(
        &traj,
        cfg.analysis_start,
        cfg.evolve.t_max,
        SignalSelector::NEven,
    )?;
    let prefix = out_prefix(opts, output_dir, "spectrum");
    write_file(&with_suffix(&prefix, "spectrum.csv"), &spectrum.to_csv())?;
    let peaks = dominant_peaks(&spectrum, cfg.classifier.peak_prominence);
    let label = classify_phase(&traj, &spectrum, &cfg.classifier)?;
    let sidecar = json!({
        "config": cfg,
        "version": lindchain::VERSION,
        "peaks": peaks,
        "label": label.coarse.to_string(),
        "fine_label": label.fine.to_string(),
        "alternation": label.alternation,
        "irregularity": label.irregularity,
    });
    write_file(
        &with_suffix(&prefix, "peaks.json"),
        &serde_json::to_string_pretty(&sidecar).unwrap(),
    )?;
    Ok(())
}

fn parse_axis(s: &str) -> Result<AxisId, Error> {
    match s.to_lowercase().as_str() {
        "lambda" => Ok(AxisId::Lambda),
        "delta" => Ok(AxisId::Delta),
        "v" => Ok(AxisId::V),
        other => Err(Error::InvalidParams(format!("unknown axis {other}"))),
    }
}

/// Rebuild just enough of a phase label from a sweep record to drive
/// bifurcation detection.
fn label_from_cell(fine: &str) -> Option<PhaseLabel> {
    let fine_phase = match fine {
        "FM" => FinePhase::Fm,
        "AFM" => FinePhase::Afm,
        "LC1" => FinePhase::Lc1,
        "LC2" => FinePhase::Lc2,
        "nC" => FinePhase::Nc,
        _ => return None,
    };
    let coarse = match fine_phase {
        FinePhase::Fm => CoarsePhase::Fm,
        FinePhase::Afm => CoarsePhase::Afm,
        _ => CoarsePhase::Lc,
    };
    Some(PhaseLabel {
        coarse,
        fine: fine_phase,
        osc_amplitude: 0.0,
        sublattice_gap: 0.0,
        peaks: vec![],
        alternation: 0.0,
        irregularity: 0.0,
    })
}

fn sweep_bifurcations(result: &SweepResult) -> Option<serde_json::Value> {
    // only for a single-row lambda scan
    if result.ny() != 1 || result.grid.x.axis != AxisId::Lambda {
        return None;
    }
    let mut scan = Vec::new();
    for c in &result.cells {
        let label = label_from_cell(c.fine_label.as_deref()?)?;
        scan.push((c.lambda, label));
    }
    let bifs = detect_bifurcations(&scan).ok()?;
    Some(json!(bifs
        .iter()
        .map(|(x, k)| json!({"lambda": x, "kind": format!("{k:?}")}))
        .collect::<Vec<_>>()))
}

fn cmd_sweep(opts: &SweepOpts, output_dir: &Option<PathBuf>) -> Result<(), Error> {
    let cfg = load_config(&opts.common)?;
    let grid = Grid2D {
        x: AxisSpec {
            axis: parse_axis(&opts.x_axis)?,
            min: opts.x_min,
            max: opts.x_max,
            step: opts.x_step,
        },
        y: AxisSpec {
            axis: parse_axis(&opts.y_axis)?,
            min: opts.y_min,
            max: opts.y_max,
            step: opts.y_step,
        },
        base: cfg.params,
        seed: opts.sweep_seed,
    };
    let sweep_cfg = SweepConfig {
        init: cfg.init,
        evolve: cfg.evolve,
        window: cfg.window,
        classifier: cfg.classifier,
        analysis_start: cfg.analysis_start,
    };
    let started = std::time::Instant::now();
    let result = run_sweep(&grid, &sweep_cfg, opts.jobs)?;
    eprintln!(
        "sweep finished: {} cells in {:.1} s",
        result.cells.len(),
        started.elapsed().as_secs_f64()
    );
    let prefix = out_prefix(&opts.common, output_dir, "sweep");
    write_file(&with_suffix(&prefix, "sweep.json"), &result.to_json())?;
    if let Some(bifs) = sweep_bifurcations(&result) {
        write_file(
            &with_suffix(&prefix, "bifurcations.json"),
            &serde_json::to_string_pretty(&bifs).unwrap(),
        )?;
    }
    if opts.matrices {
        let d_field = result.d_field();
        write_file(
            &with_suffix(&prefix, "D.csv"),
            &SweepResult::matrix_csv(&d_field),
        )?;
        let deriv = lindchain::sweep::directional_derivative(
            &d_field,
            result.grid.x.step,
            result.grid.y.step,
            (1.0, 0.0),
        )?;
        write_file(
            &with_suffix(&prefix, "dD.csv"),
            &SweepResult::matrix_csv(&deriv),
        )?;
        let labels = result.label_field();
        let mut label_csv = String::new();
        for row in labels {
            label_csv.push_str(&row.join(","));
            label_csv.push('\n');
        }
        write_file(&with_suffix(&prefix, "labels.csv"), &label_csv)?;
    }
    Ok(())
}

struct Check {
    name: &'static str,
    residual: f64,
    tolerance: f64,
}

impl Check {
    fn passed(&self) -> bool {
        self.residual.is_finite() && self.residual < self.tolerance
    }
}

fn validation_checks() -> Result<Vec<Check>, Error> {
    let mut checks = Vec::new();

    // 1. single-site Liouvillian vs analytic optical-Bloch population
    {
        let p = ChainParams::new(1, 2.0, 1.5, 0.0, 1.0, 1.0)?;
        let cache = OperatorCache::build(p)?;
        let rho = liouvillian_steady_state(&p, &cache)?;
        let expect = single_site_steady_population(2.0, 1.5, 1.0);
        checks.push(Check {
            name: "single_site_analytic_population",
            residual: (rho.matrix()[(1, 1)].re - expect).abs(),
            tolerance: 1e-10,
        });
    }

    // 2. lambda = 0: full evolution vs Bloch oracle (N=4)
    {
        let p = ChainParams::new(4, 2.0, 1.5, 5.0, 1.0, 0.0)?;
        let cache = OperatorCache::build(p)?;
        let spec = InitialStateSpec::default();
        let cfg = EvolveConfig {
            t_max: 20.0,
            ..Default::default()
        };
        let full = evolve(&initial_state(&spec, 4)?, &p, &cache, &cfg)?;
        let cl = evolve_bloch(&BlochState::from_angles(&spec.angles(4)), &p, &cfg)?;
        let mut max_diff = 0.0f64;
        for k in 0..full.times.len() {
            for j in 0..4 {
                max_diff = max_diff.max((full.site_pops[k][j] - cl.site_pops[k][j]).abs());
            }
        }
        checks.push(Check {
            name: "lambda0_bloch_equivalence",
            residual: max_diff,
            tolerance: 1e-6,
        });
    }

    // 3. lambda = 1: time evolution vs Liouvillian null space (N=4)
    {
        let p = ChainParams::new(4, 2.0, 1.5, 5.0, 1.0, 1.0)?;
        let cache = OperatorCache::build(p)?;
        let exact = liouvillian_steady_state(&p, &cache)?;
        let cfg = EvolveConfig::default();
        let traj = find_steady_state(
            &initial_state(&InitialStateSpec::default(), 4)?,
            &p,
            &cache,
            &cfg,
            1e-9,
            400.0,
        )?;
        let pe = site_populations(&exact, &cache)?;
        let pt = site_populations(&traj.final_state, &cache)?;
        let max_diff = pe
            .iter()
            .zip(&pt)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        checks.push(Check {
            name: "lambda1_nullspace_equivalence",
            residual: max_diff,
            tolerance: 1e-6,
        });
    }

    // 4. ensemble Hamiltonian identity, uniform P at N=4
    {
        let p = ChainParams::new(4, 2.0, 1.5, 5.0, 1.0, 0.5)?;
        let cache = OperatorCache::build(p)?;
        let m = MeanFields(vec![0.3, 0.7, 0.2, 0.5]);
        let pd = PartitionDistribution::uniform(4)?;
        let ens = ensemble_hamiltonian(&pd, &cache, &m)?;
        let eff = effective_hamiltonian(&p, &cache, &m)?;
        let res = (&ens - &eff).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        checks.push(Check {
            name: "ensemble_identity_uniform",
            residual: res,
            tolerance: 1e-12,
        });
    }

    // 5. negativity of the two-site Bell state equals 1
    {
        use ndarray::Array2;
        use num_complex::Complex64 as C64;
        let mut m: lindchain::operators::CMat = Array2::zeros((4, 4));
        let h = C64::new(0.5, 0.0);
        m[(0, 0)] = h;
        m[(0, 3)] = h;
        m[(3, 0)] = h;
        m[(3, 3)] = h;
        let bell = lindchain::state::DensityMatrix::new(m)?;
        let neg = negativity(&bell, 2)?;
        checks.push(Check {
            name: "bell_negativity",
            residual: (neg.total - 1.0).abs(),
            tolerance: 1e-10,
        });
    }

    // 6. product state: negativity and correlations vanish
    {
        let p = ChainParams::new(4, 2.0, 1.5, 5.0, 1.0, 0.5)?;
        let cache = OperatorCache::build(p)?;
        let rho = initial_state(
            &InitialStateSpec {
                theta0: 0.9,
                epsilon: 0.2,
                random_amp: 0.0,
                seed: 0,
            },
            4,
        )?;
        let neg = negativity(&rho, 4)?.total;
        let c1 = correlation_function(&rho, &cache, 1)?;
        checks.push(Check {
            name: "product_state_uncorrelated",
            residual: neg.max(c1),
            tolerance: 1e-8,
        });
    }

    // 7. state-validity suite along a driven run
    {
        let p = ChainParams::new(4, 2.0, 1.5, 5.0, 1.0, 0.3)?;
        let cache = OperatorCache::build(p)?;
        let cfg = EvolveConfig {
            t_max: 20.0,
            ..Default::default()
        };
        let traj = evolve(&initial_state(&InitialStateSpec::default(), 4)?, &p, &cache, &cfg)?;
        let trace_dev = (traj.final_state.trace().re - 1.0).abs();
        let herm = lindchain::state::hermiticity_defect(traj.final_state.matrix());
        let min_eig = traj.final_state.min_eigenvalue()?;
        checks.push(Check {
            name: "trace_conservation",
            residual: trace_dev,
            tolerance: 1e-8,
        });
        checks.push(Check {
            name: "hermiticity",
            residual: herm,
            tolerance: 1e-10,
        });
        checks.push(Check {
            name: "positivity",
            residual: (-min_eig).max(0.0),
            tolerance: 1e-6,
        });
    }

    Ok(checks)
}

fn cmd_validate() -> Result<bool, Error> {
    let checks = validation_checks()?;
    let mut all_ok = true;
    let mut report = Vec::new();
    for c in &checks {
        let ok = c.passed();
        all_ok &= ok;
        println!(
            "{} {} (residual {:.3e}, tolerance {:.1e})",
            if ok { "PASS" } else { "FAIL" },
            c.name,
            c.residual,
            c.tolerance
        );
        report.push(json!({
            "name": c.name,
            "passed": ok,
            "residual": c.residual,
            "tolerance": c.tolerance,
        }));
    }
    println!(
        "{}",
        serde_json::to_string(&json!({"version": lindchain::VERSION, "checks": report})).unwrap()
    );
    Ok(all_ok)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::NumericalFailure { .. } | Error::DegenerateNullSpace { .. } => EXIT_NUMERICAL,
        _ => EXIT_INVALID_CONFIG,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<Option<bool>, Error> = match &cli.command {
        Command::Evolve(opts) => cmd_evolve(opts, &cli.output_dir).map(|_| None),
        Command::Steady(opts) => cmd_steady(opts, &cli.output_dir).map(|_| None),
        Command::Spectrum(opts) => cmd_spectrum(opts, &cli.output_dir).map(|_| None),
        Command::Sweep(opts) => cmd_sweep(opts, &cli.output_dir).map(|_| None),
        Command::Validate => cmd_validate().map(Some),
    };
    match result {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(true)) => ExitCode::SUCCESS,
        Ok(Some(false)) => ExitCode::from(EXIT_VALIDATION),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
