//! The interpolated generator: effective Hamiltonian, nonlinear Lindblad
//! right-hand side, and the partition-ensemble validator.
//!
//! The coherent part is `H_eff = H0 + lambda V sum_i n_i n_{i+1}
//! + (1 - lambda) V sum_i (m_i n_{i+1} + n_i m_{i+1} - m_i m_{i+1})`
//! with mean fields `m_i = <n_i>` recomputed from the state passed to the
//! generator, which makes the master equation an autonomous nonlinear ODE in
//! `rho`. At `lambda = 1` the generator is linear.
//!
//! Everything except the local drive `(Omega/2) sigma_x_j` is diagonal in the
//! occupation basis, so the right-hand side is evaluated with bit-indexed
//! diagonal and bit-flip kernels instead of dense matrix products.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operators::{CMat, OperatorCache};
use crate::params::ChainParams;
use crate::state::DensityMatrix;

/// Tolerance on the imaginary part of population expectation values; larger
/// values signal a corrupted (non-Hermitian) state.
pub const MEAN_FIELD_IM_TOL: f64 = 1e-8;

/// Per-site mean occupations `m_i = <n_i>`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFields(pub Vec<f64>);

impl MeanFields {
    pub fn uniform(value: f64, n: usize) -> Self {
        MeanFields(vec![value; n])
    }
}

/// Mean occupations of the given state. Populations live on the diagonal, so
/// this is a bit-test sum over diagonal elements.
pub fn mean_fields(rho: &DensityMatrix, cache: &OperatorCache) -> Result<MeanFields> {
    let n = cache.n();
    let diag = rho.0.diag();
    let mut m = vec![0.0; n];
    let mut im_max = 0.0f64;
    for (b, z) in diag.iter().enumerate() {
        im_max = im_max.max(z.im.abs());
        for (j, mj) in m.iter_mut().enumerate() {
            if (b >> j) & 1 == 1 {
                *mj += z.re;
            }
        }
    }
    if im_max > MEAN_FIELD_IM_TOL {
        return Err(Error::InvalidState(format!(
            "population imaginary part {im_max:.3e} exceeds {MEAN_FIELD_IM_TOL:.1e}"
        )));
    }
    Ok(MeanFields(m))
}

/// Dense interpolated Hamiltonian. The constant term
/// `-(1-lambda) V sum_i m_i m_{i+1}` is retained even though it cancels in
/// the commutator, so the matrix matches the ensemble average exactly.
pub fn effective_hamiltonian(
    params: &ChainParams,
    cache: &OperatorCache,
    m: &MeanFields,
) -> Result<CMat> {
    params.validate()?;
    let n = params.n;
    assert_eq!(m.0.len(), n, "mean-field vector length mismatch");
    let lam = params.lambda;
    let v = params.v;
    let mut h = cache.h0.clone();
    for bond in &cache.bonds {
        h.scaled_add(C64::new(lam * v, 0.0), bond);
    }
    let mf = C64::new((1.0 - lam) * v, 0.0);
    let mut const_term = 0.0;
    for i in 0..n {
        let ip1 = (i + 1) % n;
        h.scaled_add(mf * m.0[i], &cache.num[ip1]);
        h.scaled_add(mf * m.0[ip1], &cache.num[i]);
        const_term += m.0[i] * m.0[ip1];
    }
    let shift = -mf * const_term;
    for d in 0..cache.dim {
        h[(d, d)] += shift;
    }
    Ok(h)
}

/// Diagonal of `H_eff` in the occupation basis (all terms except the drive).
fn h_eff_diagonal(params: &ChainParams, m: &[f64], diag: &mut Vec<f64>) {
    let n = params.n;
    let dim = 1usize << n;
    diag.clear();
    let lam = params.lambda;
    let v = params.v;
    let mf = (1.0 - lam) * v;
    let mut shift = 0.0;
    for i in 0..n {
        shift -= mf * m[i] * m[(i + 1) % n];
    }
    for b in 0..dim {
        let mut d = shift;
        for i in 0..n {
            let bi = ((b >> i) & 1) as f64;
            let bip1 = ((b >> ((i + 1) % n)) & 1) as f64;
            d += -params.delta * bi + lam * v * bi * bip1 + mf * (m[i] * bip1 + bi * m[(i + 1) % n]);
        }
        diag.push(d);
    }
}

/// Reusable buffers for repeated right-hand-side evaluation.
#[derive(Debug, Default)]
pub struct RhsWorkspace {
    diag: Vec<f64>,
}

/// Evaluate `drho/dt` into `out`:
/// `-i [H_eff(rho), rho] + gamma sum_j (sm_j rho sp_j - 1/2 {n_j, rho})`.
pub fn lindblad_rhs_into(
    rho: &CMat,
    params: &ChainParams,
    cache: &OperatorCache,
    ws: &mut RhsWorkspace,
    out: &mut CMat,
) -> Result<()> {
    let n = params.n;
    let dim = cache.dim;
    debug_assert_eq!(rho.dim(), (dim, dim));
    debug_assert_eq!(out.dim(), (dim, dim));

    // mean fields from the diagonal of the current state
    let mut m = vec![0.0; n];
    for b in 0..dim {
        let z = rho[(b, b)].re;
        for (j, mj) in m.iter_mut().enumerate() {
            if (b >> j) & 1 == 1 {
                *mj += z;
            }
        }
    }
    h_eff_diagonal(params, &m, &mut ws.diag);
    let diag = &ws.diag;

    let gamma = params.gamma;
    let half_omega = params.omega / 2.0;
    let r = rho.as_slice().expect("rho must be contiguous row-major");
    let o = out.as_slice_mut().expect("out must be contiguous row-major");

    // diagonal commutator and number-operator anticommutator
    for a in 0..dim {
        let pa = cache.popcount[a] as f64;
        let da = diag[a];
        let row = a * dim;
        for b in 0..dim {
            let z = r[row + b];
            let com = C64::new(0.0, -(da - diag[b])) * z;
            let damp = -0.5 * gamma * (pa + cache.popcount[b] as f64);
            o[row + b] = com + damp * z;
        }
    }

    for j in 0..n {
        let e = 1usize << j;
        // drive: -i (Omega/2) (sigma_x_j rho - rho sigma_x_j)
        for a in 0..dim {
            let row = a * dim;
            let flip_row = (a ^ e) * dim;
            for b in 0..dim {
                let t = r[flip_row + b] - r[row + (b ^ e)];
                o[row + b] += C64::new(0.0, -half_omega) * t;
            }
        }
        // jump gain: gamma * (sm_j rho sp_j), nonzero only where bit j of
        // both indices is clear
        for a in 0..dim {
            if a & e != 0 {
                continue;
            }
            let row = a * dim;
            let src_row = (a | e) * dim;
            for b in 0..dim {
                if b & e != 0 {
                    continue;
                }
                o[row + b] += gamma * r[src_row + (b | e)];
            }
        }
    }
    Ok(())
}

/// Allocating wrapper around [`lindblad_rhs_into`].
pub fn lindblad_rhs(
    rho: &DensityMatrix,
    params: &ChainParams,
    cache: &OperatorCache,
) -> Result<CMat> {
    rho.check_hermitian(crate::state::HERMITICITY_TOL)?;
    let mut out = Array2::zeros(rho.0.dim());
    let mut ws = RhsWorkspace::default();
    lindblad_rhs_into(&rho.0, params, cache, &mut ws, &mut out)?;
    Ok(out)
}

/// Probability distribution over the `2^N` bond partitions. Bond `i`
/// (1-based) is decoupled in partition `c` iff bit `i - 1` of `c` is set.
#[derive(Debug, Clone)]
pub struct PartitionDistribution {
    pub probs: Vec<f64>,
    pub n_bonds: usize,
}

impl PartitionDistribution {
    pub fn new(probs: Vec<f64>, n_bonds: usize) -> Result<Self> {
        if n_bonds > 8 {
            return Err(Error::InvalidParams(
                "partition enumeration is guarded to n <= 8".into(),
            ));
        }
        if probs.len() != 1 << n_bonds {
            return Err(Error::InvalidParams(format!(
                "expected {} partition probabilities, got {}",
                1 << n_bonds,
                probs.len()
            )));
        }
        if probs.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidParams("negative partition probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "partition probabilities sum to {total}, not 1"
            )));
        }
        Ok(PartitionDistribution { probs, n_bonds })
    }

    /// Uniform distribution over all partitions (lambda = 1/2).
    pub fn uniform(n_bonds: usize) -> Result<Self> {
        let count = 1usize << n_bonds;
        Self::new(vec![1.0 / count as f64; count], n_bonds)
    }

    /// Point mass on a single partition mask.
    pub fn point(mask: usize, n_bonds: usize) -> Result<Self> {
        let mut probs = vec![0.0; 1 << n_bonds];
        probs[mask] = 1.0;
        Self::new(probs, n_bonds)
    }

    fn rotate(&self, mask: usize) -> usize {
        let full = (1usize << self.n_bonds) - 1;
        ((mask << 1) | (mask >> (self.n_bonds - 1))) & full
    }

    pub fn is_translation_invariant(&self, tol: f64) -> bool {
        (0..self.probs.len()).all(|c| (self.probs[c] - self.probs[self.rotate(c)]).abs() <= tol)
    }

    /// `lambda = sum_C P(C) xi_{i,C}` for any fixed bond `i`; `xi = 1` when
    /// the bond is kept quantum (not in `C`).
    pub fn lambda(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(c, _)| c & 1 == 0)
            .map(|(_, p)| p)
            .sum()
    }
}

/// Brute-force ensemble average `sum_C P(C) H(C)` over all bond partitions.
/// For translation-invariant `P` this equals [`effective_hamiltonian`] at
/// `lambda = P.lambda()`.
pub fn ensemble_hamiltonian(
    p: &PartitionDistribution,
    cache: &OperatorCache,
    m: &MeanFields,
) -> Result<CMat> {
    let n = cache.n();
    if p.n_bonds != n {
        return Err(Error::InvalidParams(format!(
            "partition distribution over {} bonds does not match chain of {} sites",
            p.n_bonds, n
        )));
    }
    if !p.is_translation_invariant(1e-12) {
        return Err(Error::NotTranslationInvariant);
    }
    let v = C64::new(cache.params.v, 0.0);
    // decoupled bond terms h^MF_{i,i+1}
    let mut h_mf = Vec::with_capacity(n);
    for i in 0..n {
        let ip1 = (i + 1) % n;
        let mut t: CMat = Array2::zeros((cache.dim, cache.dim));
        t.scaled_add(v * m.0[i], &cache.num[ip1]);
        t.scaled_add(v * m.0[ip1], &cache.num[i]);
        let shift = -v * m.0[i] * m.0[ip1];
        for d in 0..cache.dim {
            t[(d, d)] += shift;
        }
        h_mf.push(t);
    }
    let mut h: CMat = Array2::zeros((cache.dim, cache.dim));
    for (c, &prob) in p.probs.iter().enumerate() {
        if prob == 0.0 {
            continue;
        }
        let pc = C64::new(prob, 0.0);
        h.scaled_add(pc, &cache.h0);
        for i in 0..n {
            if (c >> i) & 1 == 0 {
                h.scaled_add(pc * v, &cache.bonds[i]);
            } else {
                h.scaled_add(pc, &h_mf[i]);
            }
        }
    }
    Ok(h)
}

/// Cyclically shift the state by one site (site j -> j + 1).
pub fn shift_state(rho: &CMat, n: usize) -> CMat {
    let dim = 1usize << n;
    let full = dim - 1;
    let perm = |b: usize| ((b << 1) | (b >> (n - 1))) & full;
    let mut out = Array2::zeros((dim, dim));
    for a in 0..dim {
        for b in 0..dim {
            out[(perm(a), perm(b))] = rho[(a, b)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{initial_state, InitialStateSpec};
    use approx::assert_abs_diff_eq;
    use ndarray_linalg::Trace;

    fn frob(m: &CMat) -> f64 {
        m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn params(n: usize, lambda: f64) -> ChainParams {
        ChainParams::new(n, 2.0, 1.5, 5.0, 1.0, lambda).unwrap()
    }

    fn random_density(n: usize, seed: u64) -> DensityMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let dim = 1usize << n;
        let mut g: CMat = Array2::zeros((dim, dim));
        for a in 0..dim {
            for b in 0..dim {
                g[(a, b)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let gd = g.t().mapv(|z| z.conj());
        let mut rho = g.dot(&gd);
        let t = rho.diag().iter().map(|z| z.re).sum::<f64>();
        rho.mapv_inplace(|z| z / t);
        DensityMatrix::new(rho).unwrap()
    }

    #[test]
    fn mean_fields_known_states() {
        let p = params(4, 0.3);
        let cache = OperatorCache::build(p).unwrap();
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
        assert_eq!(mean_fields(&down, &cache).unwrap().0, vec![0.0; 4]);

        let up = initial_state(
            &InitialStateSpec {
                theta0: std::f64::consts::PI,
                epsilon: 0.0,
                random_amp: 0.0,
                seed: 0,
            },
            4,
        )
        .unwrap();
        for m in mean_fields(&up, &cache).unwrap().0 {
            assert_abs_diff_eq!(m, 1.0, epsilon = 1e-12);
        }

        let mixed = DensityMatrix::new(CMat::eye(16) / C64::new(16.0, 0.0)).unwrap();
        for m in mean_fields(&mixed, &cache).unwrap().0 {
            assert_abs_diff_eq!(m, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn effective_hamiltonian_limits() {
        let cache = OperatorCache::build(params(4, 1.0)).unwrap();
        // lambda = 1: H0 + V sum bonds, independent of m
        let p1 = params(4, 1.0);
        let ma = MeanFields::uniform(0.3, 4);
        let mb = MeanFields::uniform(0.9, 4);
        let ha = effective_hamiltonian(&p1, &cache, &ma).unwrap();
        let hb = effective_hamiltonian(&p1, &cache, &mb).unwrap();
        assert!(frob(&(&ha - &hb)) < 1e-14);
        let mut expect = cache.h0.clone();
        for bond in &cache.bonds {
            expect.scaled_add(C64::new(5.0, 0.0), bond);
        }
        assert!(frob(&(&ha - &expect)) < 1e-14);

        // lambda = 0 with m = 0: exactly H0
        let p0 = params(4, 0.0);
        let h0 = effective_hamiltonian(&p0, &cache, &MeanFields::uniform(0.0, 4)).unwrap();
        assert!(frob(&(&h0 - &cache.h0)) < 1e-14);
    }

    #[test]
    fn effective_hamiltonian_two_site_hand_assembly() {
        // N=2, lambda=0.5, V=5, m=(1,0): assemble Eq.-by-hand on the 4-dim basis
        let p = ChainParams::new(2, 2.0, 1.5, 5.0, 1.0, 0.5).unwrap();
        let cache = OperatorCache::build(p).unwrap();
        let m = MeanFields(vec![1.0, 0.0]);
        let h = effective_hamiltonian(&p, &cache, &m).unwrap();

        // both bonds of the 2-chain connect sites 1 and 2
        let mut expect = cache.h0.clone();
        // quantum part: 0.5 * 5 * (n1 n2 + n2 n1)
        expect.scaled_add(C64::new(2.5, 0.0), &cache.bonds[0]);
        expect.scaled_add(C64::new(2.5, 0.0), &cache.bonds[1]);
        // mean-field part: 0.5 * 5 * [ (m1 n2 + n1 m2 - m1 m2) + (m2 n1 + n2 m1 - m2 m1) ]
        // with m = (1, 0): 2.5 * (n2 + n2) = 5 n2
        expect.scaled_add(C64::new(5.0, 0.0), &cache.num[1]);
        assert!(frob(&(&h - &expect)) < 1e-13);
        // Hermitian
        let defect = crate::state::hermiticity_defect(&h);
        assert!(defect < 1e-13);
    }

    #[test]
    fn h_eff_diagonal_matches_dense() {
        let p = params(4, 0.37);
        let cache = OperatorCache::build(p).unwrap();
        let m = MeanFields(vec![0.12, 0.7, 0.33, 0.5]);
        let dense = effective_hamiltonian(&p, &cache, &m).unwrap();
        let mut diag = Vec::new();
        h_eff_diagonal(&p, &m.0, &mut diag);
        for b in 0..16 {
            assert_abs_diff_eq!(dense[(b, b)].re, diag[b], epsilon = 1e-12);
        }
    }

    #[test]
    fn rhs_matches_dense_oracle() {
        // fast bit-kernel path vs literal matrix assembly of the generator
        for (n, lambda, seed) in [(2usize, 0.0, 1u64), (3, 0.4, 2), (4, 1.0, 3)] {
            let p = ChainParams::new(n, 2.0, 1.5, 5.0, 1.0, lambda).unwrap();
            let cache = OperatorCache::build(p).unwrap();
            let rho = random_density(n, seed);
            let fast = lindblad_rhs(&rho, &p, &cache).unwrap();

            let m = mean_fields(&rho, &cache).unwrap();
            let h = effective_hamiltonian(&p, &cache, &m).unwrap();
            let i = C64::new(0.0, 1.0);
            let mut dense = (h.dot(&rho.0) - rho.0.dot(&h)) * (-i);
            for j in 0..n {
                let sp = cache.sm[j].t().mapv(|z| z.conj());
                let gain = cache.sm[j].dot(&rho.0).dot(&sp);
                let anti = cache.num[j].dot(&rho.0) + rho.0.dot(&cache.num[j]);
                dense = dense + gain - anti * C64::new(0.5, 0.0);
            }
            let d = frob(&(&fast - &dense));
            assert!(d < 1e-12, "n={n} lambda={lambda}: defect {d:.3e}");
        }
    }

    #[test]
    fn rhs_dark_state_and_trace() {
        // all-down with Omega = 0 is a fixed point
        let p = ChainParams::new(3, 2.0, 0.0, 5.0, 1.0, 0.5).unwrap();
        let cache = OperatorCache::build(p).unwrap();
        let down = initial_state(
            &InitialStateSpec {
                theta0: 0.0,
                epsilon: 0.0,
                random_amp: 0.0,
                seed: 0,
            },
            3,
        )
        .unwrap();
        let rhs = lindblad_rhs(&down, &p, &cache).unwrap();
        assert!(frob(&rhs) < 1e-14);

        // any state: Tr(rhs) = 0 and rhs Hermitian
        let p = params(4, 0.3);
        let cache = OperatorCache::build(p).unwrap();
        let rho = random_density(4, 11);
        let rhs = lindblad_rhs(&rho, &p, &cache).unwrap();
        assert!(rhs.trace().unwrap().norm() < 1e-12);
        assert!(crate::state::hermiticity_defect(&rhs) < 1e-12);
    }

    #[test]
    fn rhs_single_site_decay() {
        // N=1, rho = |up><up|, Omega=0: d rho_upup / dt = -gamma
        let p = ChainParams::new(1, 2.0, 0.0, 0.0, 1.0, 1.0).unwrap();
        let cache = OperatorCache::build(p).unwrap();
        let mut m: CMat = Array2::zeros((2, 2));
        m[(1, 1)] = C64::new(1.0, 0.0);
        let rho = DensityMatrix::new(m).unwrap();
        let rhs = lindblad_rhs(&rho, &p, &cache).unwrap();
        assert_abs_diff_eq!(rhs[(1, 1)].re, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rhs[(0, 0)].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rhs_linear_at_lambda_one_nonlinear_below() {
        let cache = OperatorCache::build(params(3, 1.0)).unwrap();
        let r1 = random_density(3, 21);
        let r2 = random_density(3, 22);
        let alpha = 0.3;
        let mix = DensityMatrix::new(
            &r1.0 * C64::new(alpha, 0.0) + &r2.0 * C64::new(1.0 - alpha, 0.0),
        )
        .unwrap();

        for (lambda, expect_linear) in [(1.0, true), (0.3, false)] {
            let p = params(3, lambda);
            let f_mix = lindblad_rhs(&mix, &p, &cache).unwrap();
            let f1 = lindblad_rhs(&r1, &p, &cache).unwrap();
            let f2 = lindblad_rhs(&r2, &p, &cache).unwrap();
            let combo = f1 * C64::new(alpha, 0.0) + f2 * C64::new(1.0 - alpha, 0.0);
            let defect = frob(&(&f_mix - &combo));
            if expect_linear {
                assert!(defect < 1e-12, "lambda=1 should be linear, defect {defect:.3e}");
            } else {
                assert!(defect > 1e-6, "lambda<1 should be nonlinear, defect {defect:.3e}");
            }
        }
    }

    #[test]
    fn rhs_translation_covariance() {
        let p = params(4, 0.35);
        let cache = OperatorCache::build(p).unwrap();
        let rho = random_density(4, 31);
        let rhs_then_shift = shift_state(&lindblad_rhs(&rho, &p, &cache).unwrap(), 4);
        let shifted = DensityMatrix::new(shift_state(&rho.0, 4)).unwrap();
        let shift_then_rhs = lindblad_rhs(&shifted, &p, &cache).unwrap();
        assert!(frob(&(&rhs_then_shift - &shift_then_rhs)) < 1e-12);
    }

    #[test]
    fn h_eff_affine_in_mean_fields() {
        // finite differences in one m_i are exactly linear
        let p = params(4, 0.4);
        let cache = OperatorCache::build(p).unwrap();
        let base = MeanFields(vec![0.2, 0.5, 0.7, 0.1]);
        for i in 0..4 {
            let mut lo = base.clone();
            let mut hi = base.clone();
            lo.0[i] -= 0.05;
            hi.0[i] += 0.05;
            let h_lo = effective_hamiltonian(&p, &cache, &lo).unwrap();
            let h_hi = effective_hamiltonian(&p, &cache, &hi).unwrap();
            let h_mid = effective_hamiltonian(&p, &cache, &base).unwrap();
            let lin_defect = frob(&((&h_lo + &h_hi) * C64::new(0.5, 0.0) - &h_mid));
            assert!(lin_defect < 1e-12);
        }
    }

    #[test]
    fn ensemble_limits() {
        let cache = OperatorCache::build(params(4, 0.5)).unwrap();
        let m = MeanFields(vec![0.3, 0.7, 0.2, 0.5]);

        // P(empty) = 1: quantum limit
        let p_empty = PartitionDistribution::point(0, 4).unwrap();
        let h = ensemble_hamiltonian(&p_empty, &cache, &m).unwrap();
        let expect = effective_hamiltonian(&params(4, 1.0), &cache, &m).unwrap();
        assert!(frob(&(&h - &expect)) < 1e-13);

        // P(all bonds) = 1: classical limit
        let p_full = PartitionDistribution::point(0b1111, 4).unwrap();
        let h = ensemble_hamiltonian(&p_full, &cache, &m).unwrap();
        let expect = effective_hamiltonian(&params(4, 0.0), &cache, &m).unwrap();
        assert!(frob(&(&h - &expect)) < 1e-13);
    }

    #[test]
    fn ensemble_uniform_equals_lambda_half() {
        let cache = OperatorCache::build(params(4, 0.5)).unwrap();
        let m = MeanFields(vec![0.3, 0.7, 0.2, 0.5]);
        let p = PartitionDistribution::uniform(4).unwrap();
        assert_abs_diff_eq!(p.lambda(), 0.5, epsilon = 1e-15);
        let h = ensemble_hamiltonian(&p, &cache, &m).unwrap();
        let expect = effective_hamiltonian(&params(4, 0.5), &cache, &m).unwrap();
        assert!(frob(&(&h - &expect)) < 1e-12);
    }

    #[test]
    fn ensemble_alternating_support() {
        // P supported on the two alternating bond subsets: lambda = 1/2
        let mut probs = vec![0.0; 16];
        probs[0b0101] = 0.5;
        probs[0b1010] = 0.5;
        let p = PartitionDistribution::new(probs, 4).unwrap();
        assert!(p.is_translation_invariant(1e-15));
        assert_abs_diff_eq!(p.lambda(), 0.5, epsilon = 1e-15);
        let cache = OperatorCache::build(params(4, 0.5)).unwrap();
        let m = MeanFields(vec![0.3, 0.7, 0.2, 0.5]);
        let h = ensemble_hamiltonian(&p, &cache, &m).unwrap();
        let expect = effective_hamiltonian(&params(4, 0.5), &cache, &m).unwrap();
        assert!(frob(&(&h - &expect)) < 1e-12);
    }

    #[test]
    fn ensemble_rejects_non_invariant() {
        let mut probs = vec![0.0; 16];
        probs[0b0001] = 1.0;
        let p = PartitionDistribution::new(probs, 4).unwrap();
        assert!(!p.is_translation_invariant(1e-15));
        let cache = OperatorCache::build(params(4, 0.5)).unwrap();
        let m = MeanFields::uniform(0.4, 4);
        assert!(matches!(
            ensemble_hamiltonian(&p, &cache, &m),
            Err(Error::NotTranslationInvariant)
        ));
    }
}
