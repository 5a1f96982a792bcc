//! Dense many-body operators on the `2^N`-dimensional Hilbert space.
//!
//! Basis convention: site `j` (1-based) maps to bit `j - 1` of the basis
//! index, with bit value 1 meaning spin-up. Local 2x2 matrices are therefore
//! ordered (|down>, |up>), so `n = diag(0, 1)` and `sigma_z = diag(-1, 1)`.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::params::{ChainParams, MAX_SITES};

pub type CMat = Array2<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// 2x2 Pauli-x in (down, up) ordering.
pub fn sigma_x() -> CMat {
    ndarray::arr2(&[[ZERO, ONE], [ONE, ZERO]])
}

/// 2x2 Pauli-y.
pub fn sigma_y() -> CMat {
    let i = C64::new(0.0, 1.0);
    ndarray::arr2(&[[ZERO, i], [-i, ZERO]])
}

/// 2x2 Pauli-z, `diag(-1, 1)`.
pub fn sigma_z() -> CMat {
    ndarray::arr2(&[[-ONE, ZERO], [ZERO, ONE]])
}

/// Lowering operator: maps |up> to |down>.
pub fn sigma_minus() -> CMat {
    ndarray::arr2(&[[ZERO, ONE], [ZERO, ZERO]])
}

/// Number operator `(sigma_z + 1)/2 = diag(0, 1)`.
pub fn number_op() -> CMat {
    ndarray::arr2(&[[ZERO, ZERO], [ZERO, ONE]])
}

/// Value of bit `j - 1` of basis index `b` (site `j` occupation).
#[inline]
pub fn site_bit(b: usize, j: usize) -> usize {
    (b >> (j - 1)) & 1
}

/// Embed a single-site 2x2 operator at site `j` (1-based) of an `n`-site
/// chain. The result acts as `op` on bit `j - 1` and as identity elsewhere.
pub fn embed_single_site(op: &CMat, j: usize, n: usize) -> Result<CMat> {
    if n == 0 || n > MAX_SITES {
        return Err(Error::ChainTooLong { n, max: MAX_SITES });
    }
    if j == 0 || j > n {
        return Err(Error::SiteOutOfRange { site: j, n });
    }
    assert_eq!(op.dim(), (2, 2), "local operator must be 2x2");
    let dim = 1 << n;
    let k = j - 1;
    let mut m = Array2::zeros((dim, dim));
    for b in 0..dim {
        let rest = b & !(1 << k);
        let col_bit = (b >> k) & 1;
        for row_bit in 0..2 {
            let a = rest | (row_bit << k);
            let val = op[(row_bit, col_bit)];
            if val != ZERO {
                m[(a, b)] = val;
            }
        }
    }
    Ok(m)
}

/// Precomputed many-body operators for one parameter set. Immutable after
/// construction; shared read-only across threads.
#[derive(Debug, Clone)]
pub struct OperatorCache {
    pub params: ChainParams,
    pub dim: usize,
    /// Per-site sigma_x.
    pub sx: Vec<CMat>,
    /// Per-site sigma_z.
    pub sz: Vec<CMat>,
    /// Per-site lowering operator.
    pub sm: Vec<CMat>,
    /// Per-site number operator.
    pub num: Vec<CMat>,
    /// Bond products `n_i n_{i+1}` for i = 1..N with periodic wrap.
    pub bonds: Vec<CMat>,
    /// Non-interacting Hamiltonian `sum_j (-Delta n_j + (Omega/2) sigma_x_j)`.
    pub h0: CMat,
    /// Diagonal of `-Delta sum_j n_j` plus nothing else: per-basis-state
    /// occupation counts, used by the fast generator path.
    pub popcount: Vec<u32>,
}

impl OperatorCache {
    pub fn build(params: ChainParams) -> Result<Self> {
        params.validate()?;
        let n = params.n;
        let dim = params.dim();
        let mut sx = Vec::with_capacity(n);
        let mut sz = Vec::with_capacity(n);
        let mut sm = Vec::with_capacity(n);
        let mut num = Vec::with_capacity(n);
        for j in 1..=n {
            sx.push(embed_single_site(&sigma_x(), j, n)?);
            sz.push(embed_single_site(&sigma_z(), j, n)?);
            sm.push(embed_single_site(&sigma_minus(), j, n)?);
            num.push(embed_single_site(&number_op(), j, n)?);
        }
        // Bond operators are diagonal: element (b, b) is bit_i(b) * bit_{i+1}(b).
        let mut bonds = Vec::with_capacity(n);
        for i in 1..=n {
            let ip1 = i % n + 1;
            let mut m: CMat = Array2::zeros((dim, dim));
            for b in 0..dim {
                if site_bit(b, i) == 1 && site_bit(b, ip1) == 1 {
                    m[(b, b)] = ONE;
                }
            }
            bonds.push(m);
        }
        let mut h0: CMat = Array2::zeros((dim, dim));
        for j in 0..n {
            h0.scaled_add(C64::new(-params.delta, 0.0), &num[j]);
            h0.scaled_add(C64::new(params.omega / 2.0, 0.0), &sx[j]);
        }
        let popcount = (0..dim).map(|b| (b as u64).count_ones()).collect();
        Ok(OperatorCache {
            params,
            dim,
            sx,
            sz,
            sm,
            num,
            bonds,
            h0,
            popcount,
        })
    }

    pub fn n(&self) -> usize {
        self.params.n
    }
}
