//! Frequency-domain analysis of long-time trajectories: FFT spectra of the
//! sublattice population signal, peak extraction, dynamical-phase
//! classification (FM / AFM / LC with LC1 / LC2 / nC refinement), and
//! bifurcation detection along parameter scans.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Trajectory;

/// Which trajectory signal feeds the FFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalSelector {
    NEven,
    NOdd,
    Site(usize),
}

/// Positive-frequency amplitude spectrum of a windowed, mean-subtracted
/// signal. Amplitudes are scaled so that their squared sum equals the
/// windowed signal variance (Parseval).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub amps: Vec<f64>,
    pub log_amps: Vec<f64>,
    pub window_start: f64,
    pub window_length: f64,
    pub sample_interval: f64,
}

impl Spectrum {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("f,amplitude,log_amplitude\n");
        for k in 0..self.freqs.len() {
            out.push_str(&format!(
                "{:.11e},{:.11e},{:.11e}\n",
                self.freqs[k], self.amps[k], self.log_amps[k]
            ));
        }
        out
    }

    /// Geometric mean over arithmetic mean of the power spectrum; 1 for a
    /// flat spectrum, near 0 for a line spectrum.
    pub fn spectral_flatness(&self) -> f64 {
        if self.amps.is_empty() {
            return 0.0;
        }
        let floor = 1e-30;
        let mut log_sum = 0.0;
        let mut sum = 0.0;
        for &a in &self.amps {
            let p = (a * a).max(floor);
            log_sum += p.ln();
            sum += p;
        }
        let n = self.amps.len() as f64;
        ((log_sum / n).exp()) / (sum / n)
    }
}

fn extract_signal(trajectory: &Trajectory, selector: SignalSelector, idx: &[usize]) -> Vec<f64> {
    idx.iter()
        .map(|&k| match selector {
            SignalSelector::NEven => trajectory.n_even[k],
            SignalSelector::NOdd => trajectory.n_odd[k],
            SignalSelector::Site(j) => trajectory.site_pops[k][j - 1],
        })
        .collect()
}

/// FFT of the selected signal over `[t_start, t_end]`. Rectangular window
/// with mean subtraction; sampling must be uniform.
pub fn fft_spectrum(
    trajectory: &Trajectory,
    t_start: f64,
    t_end: f64,
    selector: SignalSelector,
) -> Result<Spectrum> {
    let idx = trajectory.window_indices(t_start, t_end);
    if idx.len() < 4 {
        return Err(Error::InvalidParams(
            "analysis window contains fewer than 4 samples".into(),
        ));
    }
    let dt = trajectory.times[idx[1]] - trajectory.times[idx[0]];
    for w in idx.windows(2) {
        let step = trajectory.times[w[1]] - trajectory.times[w[0]];
        if (step - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::InvalidParams("non-uniform sampling".into()));
        }
    }
    let mut signal = extract_signal(trajectory, selector, &idx);
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    for x in &mut signal {
        *x -= mean;
    }
    let n = signal.len();
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    // positive-frequency bins k = 1..n/2, scaled so that sum(a_k^2) equals
    // the signal variance for a real mean-free input
    let half = n / 2;
    let mut freqs = Vec::with_capacity(half);
    let mut amps = Vec::with_capacity(half);
    let nf = n as f64;
    for k in 1..=half {
        let scale = if 2 * k == n { 1.0 } else { std::f64::consts::SQRT_2 };
        freqs.push(k as f64 / (nf * dt));
        amps.push(scale * buf[k].norm() / nf);
    }
    let log_amps = amps.iter().map(|&a| a.max(1e-300).ln()).collect();
    Ok(Spectrum {
        freqs,
        amps,
        log_amps,
        window_start: t_start,
        window_length: t_end - t_start,
        sample_interval: dt,
    })
}

/// Local spectral maxima with amplitude at least `prominence`, sorted by
/// amplitude descending.
pub fn dominant_peaks(spectrum: &Spectrum, prominence: f64) -> Vec<(f64, f64)> {
    let a = &spectrum.amps;
    let mut peaks = Vec::new();
    for k in 0..a.len() {
        let left = if k == 0 { 0.0 } else { a[k - 1] };
        let right = if k + 1 == a.len() { 0.0 } else { a[k + 1] };
        if a[k] >= prominence && a[k] > left && a[k] >= right {
            peaks.push((spectrum.freqs[k], a[k]));
        }
    }
    peaks.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap());
    peaks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoarsePhase {
    Fm,
    Afm,
    Lc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FinePhase {
    Fm,
    Afm,
    /// Single-frequency limit cycle.
    Lc1,
    /// Period-doubled limit cycle (resolved peak near half the dominant
    /// frequency).
    Lc2,
    /// Near-chaotic: broadband spectrum.
    Nc,
}

impl std::fmt::Display for CoarsePhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CoarsePhase::Fm => "FM",
            CoarsePhase::Afm => "AFM",
            CoarsePhase::Lc => "LC",
        };
        write!(f, "{s}")
    }
}

impl std::fmt::Display for FinePhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FinePhase::Fm => "FM",
            FinePhase::Afm => "AFM",
            FinePhase::Lc1 => "LC1",
            FinePhase::Lc2 => "LC2",
            FinePhase::Nc => "nC",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseLabel {
    pub coarse: CoarsePhase,
    pub fine: FinePhase,
    /// Peak-to-peak oscillation amplitude of `n_even` over the window.
    pub osc_amplitude: f64,
    /// `|mean(n_odd) - mean(n_even)|` over the window.
    pub sublattice_gap: f64,
    /// Spectral peaks above the classifier prominence, amplitude-descending.
    pub peaks: Vec<(f64, f64)>,
    /// Peak-to-peak spread of successive oscillation maxima, normalized by
    /// the oscillation amplitude; grows from zero at a period-doubling.
    pub alternation: f64,
    /// Residual spread of oscillation maxima after allowing period-4
    /// alternation; large when the signal has no short periodicity at all.
    pub irregularity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    /// Oscillation threshold on the peak-to-peak amplitude of `n_even`.
    pub a_osc: f64,
    /// Sublattice-gap threshold separating AFM from FM.
    pub a_afm: f64,
    /// Absolute amplitude threshold for spectral peaks.
    pub peak_prominence: f64,
    /// Normalized alternation of successive maxima above which a limit
    /// cycle counts as period-doubled (LC2).
    pub alternation_threshold: f64,
    /// Normalized residual spread (after allowing period-4 alternation)
    /// above which a limit cycle counts as near-chaotic.
    pub irregularity_threshold: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            a_osc: 1e-4,
            a_afm: 1e-3,
            peak_prominence: 1e-6,
            alternation_threshold: 0.05,
            irregularity_threshold: 0.05,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("a_osc", self.a_osc),
            ("a_afm", self.a_afm),
            ("peak_prominence", self.peak_prominence),
            ("alternation_threshold", self.alternation_threshold),
            ("irregularity_threshold", self.irregularity_threshold),
        ] {
            if x <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "classifier threshold {name} must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Classify the long-time dynamics from the trajectory window the spectrum
/// was computed on: persistent oscillation -> LC (refined to nC / LC2 / LC1),
/// otherwise a staggered steady state -> AFM, otherwise FM.
pub fn classify_phase(
    trajectory: &Trajectory,
    spectrum: &Spectrum,
    config: &ClassifierConfig,
) -> Result<PhaseLabel> {
    config.validate()?;
    let t_start = spectrum.window_start;
    let t_end = spectrum.window_start + spectrum.window_length;
    let idx = trajectory.window_indices(t_start, t_end);
    if idx.is_empty() {
        return Err(Error::InvalidParams(
            "trajectory does not cover the analysis window".into(),
        ));
    }
    let even: Vec<f64> = idx.iter().map(|&k| trajectory.n_even[k]).collect();
    let odd: Vec<f64> = idx.iter().map(|&k| trajectory.n_odd[k]).collect();
    let ptp = even.iter().cloned().fold(f64::MIN, f64::max)
        - even.iter().cloned().fold(f64::MAX, f64::min);
    let mean_even = even.iter().sum::<f64>() / even.len() as f64;
    let mean_odd = odd.iter().sum::<f64>() / odd.len() as f64;
    let gap = (mean_odd - mean_even).abs();
    let peaks = dominant_peaks(spectrum, config.peak_prominence);
    let (alternation, irregularity) = maxima_alternation(&even, ptp);

    let (coarse, fine) = if ptp > config.a_osc {
        let fine = if irregularity > config.irregularity_threshold {
            FinePhase::Nc
        } else if alternation > config.alternation_threshold {
            FinePhase::Lc2
        } else {
            FinePhase::Lc1
        };
        (CoarsePhase::Lc, fine)
    } else if gap > config.a_afm {
        (CoarsePhase::Afm, FinePhase::Afm)
    } else {
        (CoarsePhase::Fm, FinePhase::Fm)
    };
    Ok(PhaseLabel {
        coarse,
        fine,
        osc_amplitude: ptp,
        sublattice_gap: gap,
        peaks,
        alternation,
        irregularity,
    })
}

/// Heights of the local maxima of `signal`, refined by a parabolic fit
/// through the three samples around each maximum.
fn refined_maxima(signal: &[f64]) -> Vec<f64> {
    let mut heights = Vec::new();
    for i in 1..signal.len().saturating_sub(1) {
        if signal[i] > signal[i - 1] && signal[i] >= signal[i + 1] {
            let (a, b, c) = (signal[i - 1], signal[i], signal[i + 1]);
            let d = a - 2.0 * b + c;
            let h = if d != 0.0 { b - (a - c).powi(2) / (8.0 * d) } else { b };
            heights.push(h);
        }
    }
    heights
}

/// Normalized spreads of the maxima sequence: a clean limit cycle repeats
/// its maximum exactly, a period-doubled one repeats every second maximum,
/// and a near-chaotic signal never settles at any small stride.
///
/// Returns `(stride-1 spread, best spread over strides 1/2/4)`, both
/// normalized by `ptp`.
fn maxima_alternation(signal: &[f64], ptp: f64) -> (f64, f64) {
    let heights = refined_maxima(signal);
    if heights.len() < 8 || ptp <= 0.0 {
        return (0.0, 0.0);
    }
    let spread = |stride: usize| -> f64 {
        let mut worst = 0.0f64;
        for r in 0..stride {
            let group: Vec<f64> = heights[r..].iter().step_by(stride).copied().collect();
            if group.len() >= 3 {
                let hi = group.iter().cloned().fold(f64::MIN, f64::max);
                let lo = group.iter().cloned().fold(f64::MAX, f64::min);
                worst = worst.max(hi - lo);
            }
        }
        worst
    };
    let s1 = spread(1) / ptp;
    let s2 = spread(2) / ptp;
    let s4 = spread(4) / ptp;
    (s1, s1.min(s2).min(s4))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BifurcationKind {
    Hopf,
    PeriodDoubling,
    NcBoundary,
}

/// Locate bifurcations along a sorted, uniformly spaced `lambda` scan of
/// phase labels. Each reported point is the midpoint of the bracketing grid
/// cells.
pub fn detect_bifurcations(scan: &[(f64, PhaseLabel)]) -> Result<Vec<(f64, BifurcationKind)>> {
    if scan.len() < 2 {
        return Ok(Vec::new());
    }
    let step = scan[1].0 - scan[0].0;
    if step <= 0.0 {
        return Err(Error::InvalidParams("scan must be sorted ascending".into()));
    }
    for w in scan.windows(2) {
        let d = w[1].0 - w[0].0;
        if d <= 0.0 || (d - step).abs() > 1e-9 * step.max(1.0) {
            return Err(Error::InvalidParams(
                "scan must be uniformly spaced and sorted".into(),
            ));
        }
    }
    let mut out = Vec::new();
    for w in scan.windows(2) {
        let (x0, a) = (&w[0].0, &w[0].1);
        let (x1, b) = (&w[1].0, &w[1].1);
        let mid = (x0 + x1) / 2.0;
        if a.coarse == CoarsePhase::Lc && b.coarse != CoarsePhase::Lc {
            out.push((mid, BifurcationKind::Hopf));
        }
        if a.fine == FinePhase::Lc2 && b.fine == FinePhase::Lc1 {
            out.push((mid, BifurcationKind::PeriodDoubling));
        }
        if a.fine == FinePhase::Nc && b.fine != FinePhase::Nc {
            out.push((mid, BifurcationKind::NcBoundary));
        }
    }
    Ok(out)
}
