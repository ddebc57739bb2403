//! Finite-dimensional commuting-tuple linear algebra: commutation and
//! normality checks, joint diagonalization of commuting normal tuples,
//! symmetrization of operator tuples, and compression to invariant
//! subspaces.

use crate::error::{Error, Result};
use crate::linalg;
use crate::poly::{CPoint, MultiPoly};
use crate::{defaults, C64};
use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A square complex matrix standing in for a bounded operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CMatrixWire", into = "CMatrixWire")]
pub struct CMatrix(pub(crate) Array2<C64>);

#[derive(Serialize, Deserialize)]
struct CMatrixWire {
    dim: usize,
    entries: Vec<C64>,
}

impl TryFrom<CMatrixWire> for CMatrix {
    type Error = Error;
    fn try_from(w: CMatrixWire) -> Result<Self> {
        if w.entries.len() != w.dim * w.dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} matrix",
                w.entries.len(),
                dim = w.dim
            )));
        }
        let a = Array2::from_shape_vec((w.dim, w.dim), w.entries)
            .map_err(|e| Error::Invalid(e.to_string()))?;
        Ok(CMatrix(a))
    }
}

impl From<CMatrix> for CMatrixWire {
    fn from(m: CMatrix) -> Self {
        let dim = m.dim();
        CMatrixWire { dim, entries: m.0.into_iter().collect() }
    }
}

impl CMatrix {
    pub fn from_array(a: Array2<C64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!("{}x{} matrix is not square", a.nrows(), a.ncols())));
        }
        Ok(CMatrix(a))
    }

    pub fn zeros(dim: usize) -> Self {
        CMatrix(Array2::zeros((dim, dim)))
    }

    pub fn identity(dim: usize) -> Self {
        CMatrix(Array2::eye(dim))
    }

    pub fn diagonal(d: &[C64]) -> Self {
        let mut a = Array2::zeros((d.len(), d.len()));
        for (i, &v) in d.iter().enumerate() {
            a[(i, i)] = v;
        }
        CMatrix(a)
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let flat: Vec<C64> = rows.iter().flatten().copied().collect();
        Ok(CMatrix(Array2::from_shape_vec((dim, dim), flat).unwrap()))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn array(&self) -> &Array2<C64> {
        &self.0
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix(linalg::adjoint(&self.0))
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        CMatrix(self.0.dot(&other.0))
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        CMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        CMatrix(&self.0 - &other.0)
    }

    pub fn scale(&self, c: C64) -> CMatrix {
        CMatrix(self.0.mapv(|z| z * c))
    }

    /// Spectral (operator) norm.
    pub fn norm(&self) -> f64 {
        linalg::spectral_norm(&self.0)
    }

    pub fn commutator_norm(&self, other: &CMatrix) -> f64 {
        linalg::spectral_norm(&(self.0.dot(&other.0) - other.0.dot(&self.0)))
    }
}

/// An n-tuple of commuting square matrices of a common dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixTupleWire", into = "MatrixTupleWire")]
pub struct MatrixTuple {
    mats: Vec<CMatrix>,
}

#[derive(Serialize, Deserialize)]
struct MatrixTupleWire {
    n: usize,
    mats: Vec<CMatrix>,
}

impl TryFrom<MatrixTupleWire> for MatrixTuple {
    type Error = Error;
    fn try_from(w: MatrixTupleWire) -> Result<Self> {
        if w.n != w.mats.len() {
            return Err(Error::DimensionMismatch(format!("n = {} against {} matrices", w.n, w.mats.len())));
        }
        MatrixTuple::new(w.mats)
    }
}

impl From<MatrixTuple> for MatrixTupleWire {
    fn from(t: MatrixTuple) -> Self {
        MatrixTupleWire { n: t.mats.len(), mats: t.mats }
    }
}

impl MatrixTuple {
    pub fn new(mats: Vec<CMatrix>) -> Result<Self> {
        if mats.is_empty() {
            return Err(Error::Invalid("a tuple needs n ≥ 1".into()));
        }
        let dim = mats[0].dim();
        if mats.iter().any(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch("tuple matrices have differing dimensions".into()));
        }
        Ok(MatrixTuple { mats })
    }

    /// A 1x1 tuple standing in for a scalar point; unifies point and operator
    /// code paths.
    pub fn from_point(s: &[C64]) -> Self {
        MatrixTuple { mats: s.iter().map(|&c| CMatrix::diagonal(&[c])).collect() }
    }

    pub fn n(&self) -> usize {
        self.mats.len()
    }

    pub fn dim(&self) -> usize {
        self.mats[0].dim()
    }

    pub fn mats(&self) -> &[CMatrix] {
        &self.mats
    }

    pub fn mat(&self, i: usize) -> &CMatrix {
        &self.mats[i]
    }

    pub fn adjoint(&self) -> MatrixTuple {
        MatrixTuple { mats: self.mats.iter().map(|m| m.adjoint()).collect() }
    }

    /// Largest operator norm among the entries, floored at 1 for use as a
    /// relative scale.
    pub fn scale(&self) -> f64 {
        self.mats.iter().map(|m| m.norm()).fold(1.0, f64::max)
    }

    /// Evaluate a polynomial in n variables on the tuple, with per-variable
    /// power caching.
    pub fn eval_poly(&self, q: &MultiPoly) -> Result<CMatrix> {
        if q.n_vars() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "{}-variable polynomial on a {}-tuple",
                q.n_vars(),
                self.n()
            )));
        }
        let d = self.dim();
        let max_exp: Vec<u32> = (0..self.n())
            .map(|i| q.terms().map(|(e, _)| e[i]).max().unwrap_or(0))
            .collect();
        let powers: Vec<Vec<Array2<C64>>> = (0..self.n())
            .map(|i| {
                let mut p = vec![Array2::eye(d)];
                for k in 1..=max_exp[i] as usize {
                    let next = p[k - 1].dot(self.mats[i].array());
                    p.push(next);
                }
                p
            })
            .collect();
        let mut acc: Array2<C64> = Array2::zeros((d, d));
        for (e, &c) in q.terms() {
            let mut m = Array2::eye(d);
            for (i, &exp) in e.iter().enumerate() {
                if exp > 0 {
                    m = m.dot(&powers[i][exp as usize]);
                }
            }
            acc = acc + m.mapv(|z| z * c);
        }
        CMatrix::from_array(acc)
    }
}

/// Maximum spectral norm of a pairwise commutator.
pub fn commutation_defect(t: &MatrixTuple) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..t.n() {
        for j in i + 1..t.n() {
            worst = worst.max(t.mat(i).commutator_norm(t.mat(j)));
        }
    }
    worst
}

/// Normality of every entry: max_i ‖T_i T_i* − T_i* T_i‖ ≤ tol.
pub fn is_normal_tuple(t: &MatrixTuple, tol: f64) -> crate::Verdict {
    let defect = t
        .mats()
        .iter()
        .map(|m| m.commutator_norm(&m.adjoint()))
        .fold(0.0, f64::max);
    crate::Verdict::from_defect(defect, tol)
}

/// Elementary symmetric functions of the tuple via the product recurrence
/// on ∏(I + t·T_i); defined for any tuple, meaningful for commuting ones.
pub fn symmetrize_tuple(t: &MatrixTuple) -> MatrixTuple {
    let d = t.dim();
    let n = t.n();
    let mut e: Vec<Array2<C64>> = (0..=n).map(|_| Array2::zeros((d, d))).collect();
    e[0] = Array2::eye(d);
    for (i, m) in t.mats().iter().enumerate() {
        for k in (1..=i + 1).rev() {
            let update = m.array().dot(&e[k - 1]);
            e[k] = &e[k] + &update;
        }
    }
    MatrixTuple { mats: e.into_iter().skip(1).map(CMatrix).collect() }
}

/// Joint spectrum of a commuting normal tuple: the multiset of joint
/// eigenvalue vectors, computed by simultaneous diagonalization.
///
/// A random Hermitian combination of the real and imaginary parts of the
/// entries is eigendecomposed; eigenvalue clusters closer than the split
/// threshold are refined recursively with fresh coefficients until every
/// block is scalar. The result is sorted lexicographically.
pub fn joint_spectrum(t: &MatrixTuple, tol: f64) -> Result<Vec<CPoint>> {
    let (mut points, _) = joint_diagonalize(t, tol)?;
    points.sort_by(|a, b| {
        a.coords()
            .iter()
            .flat_map(|z| [z.re, z.im])
            .partial_cmp(b.coords().iter().flat_map(|z| [z.re, z.im]))
            .unwrap()
    });
    Ok(points)
}

/// Joint diagonalization: returns (points, Q) with Q unitary and point k
/// attached to column k of Q, so that Q*·T_i·Q is diagonal for every entry.
pub fn joint_diagonalize(t: &MatrixTuple, tol: f64) -> Result<(Vec<CPoint>, Array2<C64>)> {
    let scale = t.scale();
    let cdef = commutation_defect(t);
    if cdef > tol.max(defaults::COMMUTE_TOL * scale) {
        return Err(Error::Precondition(format!("tuple does not commute (defect {:.3e})", cdef)));
    }
    let ndef = is_normal_tuple(t, tol.max(defaults::COMMUTE_TOL * scale));
    if !ndef.holds {
        return Err(Error::Precondition(format!("tuple is not normal (defect {:.3e})", ndef.defect)));
    }
    let d = t.dim();
    let validation_tol = (1e-9 * scale).max(10.0 * cdef);
    let mut last_residual = f64::INFINITY;
    for attempt in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9 ^ attempt);
        let mut points: Vec<CPoint> = Vec::new();
        let mut q: Array2<C64> = Array2::zeros((d, d));
        let mut next_col = 0usize;
        let restricted: Vec<Array2<C64>> = t.mats().iter().map(|m| m.array().clone()).collect();
        if split_block(&restricted, &Array2::eye(d), &mut rng, scale, 0, &mut points, &mut q, &mut next_col).is_err() {
            continue;
        }
        // validate: all entries diagonal in the common basis
        let mut residual = 0.0f64;
        for m in t.mats() {
            let conj = linalg::adjoint(&q).dot(m.array()).dot(&q);
            let mut off = conj.clone();
            for i in 0..d {
                off[(i, i)] = C64::new(0.0, 0.0);
            }
            residual = residual.max(linalg::spectral_norm(&off));
        }
        last_residual = residual;
        if residual <= validation_tol {
            return Ok((points, q));
        }
    }
    Err(Error::RefinementFailed { retries: 5, residual: last_residual })
}

/// Recursive refinement step for `joint_diagonalize`.
#[allow(clippy::too_many_arguments)]
fn split_block(
    mats: &[Array2<C64>],
    basis: &Array2<C64>, // d x k, orthonormal columns
    rng: &mut ChaCha8Rng,
    scale: f64,
    depth: usize,
    points: &mut Vec<CPoint>,
    q: &mut Array2<C64>,
    next_col: &mut usize,
) -> Result<()> {
    let k = basis.ncols();
    let d = basis.nrows();
    if k == 0 {
        return Ok(());
    }
    if depth > 4 * d + 16 {
        return Err(Error::RefinementFailed { retries: 0, residual: f64::NAN });
    }
    let bh = linalg::adjoint(basis);
    let restricted: Vec<Array2<C64>> = mats.iter().map(|m| bh.dot(m).dot(basis)).collect();

    // scalar block: every restricted entry is ≈ c_i I
    let mut means = Vec::with_capacity(restricted.len());
    let mut scalar_defect = 0.0f64;
    for b in &restricted {
        let mean = (0..k).map(|i| b[(i, i)]).sum::<C64>() / k as f64;
        let dev = b - &(Array2::eye(k).mapv(|z: C64| z * mean));
        scalar_defect = scalar_defect.max(linalg::spectral_norm(&dev));
        means.push(mean);
    }
    if k == 1 || scalar_defect <= 1e-9 * scale {
        for c in 0..k {
            let col = basis.slice(s![.., c]);
            q.slice_mut(s![.., *next_col]).assign(&col);
            *next_col += 1;
            points.push(CPoint::new(means.clone()));
        }
        return Ok(());
    }

    // random Hermitian combination of real/imaginary parts
    let mut tried = 0usize;
    loop {
        tried += 1;
        let mut h: Array2<C64> = Array2::zeros((k, k));
        for b in &restricted {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let c: f64 = rng.gen_range(-1.0..1.0);
            let badj = linalg::adjoint(b);
            let re = (b + &badj).mapv(|z| z * 0.5);
            let im = (b - &badj).mapv(|z| z * C64::new(0.0, -0.5));
            h = h + re.mapv(|z| z * a) + im.mapv(|z| z * c);
        }
        let (w, v) = linalg::eigh_pairs(&h);
        // group eigenvalues into clusters split by more than the threshold
        let mut groups: Vec<(usize, usize)> = Vec::new();
        let mut start = 0usize;
        for i in 1..k {
            if (w[i] - w[i - 1]).abs() > defaults::CLUSTER_SPLIT * scale.max(1.0) {
                groups.push((start, i));
                start = i;
            }
        }
        groups.push((start, k));
        if groups.len() == 1 {
            if tried >= 5 {
                return Err(Error::RefinementFailed { retries: tried, residual: scalar_defect });
            }
            continue;
        }
        for (a, b) in groups {
            let sub = v.slice(s![.., a..b]).to_owned();
            let new_basis = basis.dot(&sub);
            split_block(mats, &new_basis, rng, scale, depth + 1, points, q, next_col)?;
        }
        return Ok(());
    }
}

/// How far the span of `basis` (orthonormal columns) is from being jointly
/// invariant: max_i ‖(I − P)T_i P‖ on the subspace.
pub fn invariant_defect(t: &MatrixTuple, basis: &Array2<C64>) -> Result<f64> {
    check_orthonormal(basis)?;
    let p_residual = Array2::eye(basis.nrows()) - basis.dot(&linalg::adjoint(basis));
    Ok(t.mats()
        .iter()
        .map(|m| linalg::spectral_norm(&p_residual.dot(&m.array().dot(basis))))
        .fold(0.0, f64::max))
}

/// Compression (B* T_i B) of the tuple to the subspace spanned by the
/// orthonormal columns of `basis`; a restriction when the subspace is
/// invariant.
pub fn compress(t: &MatrixTuple, basis: &Array2<C64>, tol: f64) -> Result<MatrixTuple> {
    let defect = invariant_defect(t, basis)?;
    if defect > tol {
        return Err(Error::Precondition(format!("subspace is not invariant (defect {:.3e})", defect)));
    }
    let bh = linalg::adjoint(basis);
    let mats = t
        .mats()
        .iter()
        .map(|m| CMatrix(bh.dot(m.array()).dot(basis)))
        .collect();
    MatrixTuple::new(mats)
}

fn check_orthonormal(basis: &Array2<C64>) -> Result<()> {
    let g = linalg::adjoint(basis).dot(basis);
    let eye: Array2<C64> = Array2::eye(basis.ncols());
    let defect = linalg::spectral_norm(&(g - eye));
    if defect > 1e-8 {
        return Err(Error::BasisNotOrthonormal(defect));
    }
    Ok(())
}
