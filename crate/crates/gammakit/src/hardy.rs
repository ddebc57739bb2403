//! The symbolic model of pure Γ_n-isometries on vector Hardy space:
//! matrix-polynomial symbols and their calculus, the builder and checker for
//! admissible symbol tuples, degree-graded truncations, the degree-zero
//! invariant, and Wold decomposition into unitary and pure parts.
//!
//! A pure Γ_n-isometry is represented symbolically — by the parameter
//! matrices A_1,…,A_{n-1} and the degree-one symbols Φ_i(z) = A_i + A_{n-i}*z
//! together with the shift — rather than by matrix truncations, because a
//! finite-dimensional isometry is automatically unitary. Truncations exist
//! as cross-check oracles only.

use crate::classify::{contraction_verdict, is_gamma_unitary, sup_cached, Budget};
use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{joint_diagonalize, CMatrix, MatrixTuple};
use crate::poly::MultiPoly;
use crate::verdict::{Certificate, Verdict};
use crate::{defaults, C64};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A matrix-polynomial symbol Φ(z) = Σ C_k z^k with square d×d coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixSymbolWire", into = "MatrixSymbolWire")]
pub struct MatrixSymbol {
    d: usize,
    coeffs: Vec<CMatrix>,
}

#[derive(Serialize, Deserialize)]
struct MatrixSymbolWire {
    d: usize,
    coeffs: Vec<CMatrix>,
}

impl TryFrom<MatrixSymbolWire> for MatrixSymbol {
    type Error = Error;
    fn try_from(w: MatrixSymbolWire) -> Result<Self> {
        MatrixSymbol::new(w.d, w.coeffs)
    }
}

impl From<MatrixSymbol> for MatrixSymbolWire {
    fn from(s: MatrixSymbol) -> Self {
        MatrixSymbolWire { d: s.d, coeffs: s.coeffs }
    }
}

impl MatrixSymbol {
    pub fn new(d: usize, coeffs: Vec<CMatrix>) -> Result<Self> {
        if coeffs.iter().any(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch("symbol coefficients must be d×d".into()));
        }
        let mut coeffs = coeffs;
        let scale = coeffs.iter().map(|c| c.norm()).fold(1.0, f64::max);
        while coeffs.len() > 1 && coeffs.last().map(|c| c.norm() <= 1e-14 * scale).unwrap_or(false) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(CMatrix::zeros(d));
        }
        Ok(MatrixSymbol { d, coeffs })
    }

    pub fn zero(d: usize) -> Self {
        MatrixSymbol { d, coeffs: vec![CMatrix::zeros(d)] }
    }

    pub fn constant(c: CMatrix) -> Self {
        MatrixSymbol { d: c.dim(), coeffs: vec![c] }
    }

    /// The symbol z·I, i.e. the shift.
    pub fn shift(d: usize) -> Self {
        MatrixSymbol { d, coeffs: vec![CMatrix::zeros(d), CMatrix::identity(d)] }
    }

    /// Degree-one symbol a + b·z.
    pub fn linear(a: CMatrix, b: CMatrix) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch("linear symbol coefficients differ in size".into()));
        }
        MatrixSymbol::new(a.dim(), vec![a, b])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// k-th coefficient matrix, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> CMatrix {
        self.coeffs.get(k).cloned().unwrap_or_else(|| CMatrix::zeros(self.d))
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    pub fn eval(&self, z: C64) -> CMatrix {
        let mut acc = CMatrix::zeros(self.d);
        for c in self.coeffs.iter().rev() {
            acc = acc.scale(z).add(c);
        }
        acc
    }

    pub fn add(&self, other: &MatrixSymbol) -> Result<MatrixSymbol> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch("symbol dimensions differ".into()));
        }
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len).map(|k| self.coeff(k).add(&other.coeff(k))).collect();
        MatrixSymbol::new(self.d, coeffs)
    }

    pub fn sub(&self, other: &MatrixSymbol) -> Result<MatrixSymbol> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> MatrixSymbol {
        MatrixSymbol {
            d: self.d,
            coeffs: self.coeffs.iter().map(|m| m.scale(c)).collect(),
        }
    }

    /// Cauchy product of the coefficient sequences.
    pub fn mul(&self, other: &MatrixSymbol) -> Result<MatrixSymbol> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch("symbol dimensions differ".into()));
        }
        let deg = self.degree() + other.degree();
        let mut coeffs = vec![CMatrix::zeros(self.d); deg + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        MatrixSymbol::new(self.d, coeffs)
    }

    /// Largest coefficient norm of the symbol commutator [Φ, Ψ].
    pub fn commutator_defect(&self, other: &MatrixSymbol) -> f64 {
        let ab = self.mul(other).expect("same dimension");
        let ba = other.mul(self).expect("same dimension");
        let diff = ab.sub(&ba).expect("same dimension");
        diff.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// sup over the circle of the spectral norm ‖Φ(z)‖: equispaced sampling
    /// followed by golden-section refinement around the best brackets. The
    /// derivative bound Σ k‖C_k‖ certifies the sample error.
    pub fn sup_norm(&self, samples: usize, refine: usize) -> SupNorm {
        let m = samples.max(8).max(8 * (self.degree() + 1));
        let tau = std::f64::consts::TAU;
        let f = |t: f64| linalg::spectral_norm(self.eval(C64::from_polar(1.0, t)).array());
        let mut best: Vec<(f64, f64)> = Vec::new(); // (value, theta)
        for i in 0..m {
            let t = tau * i as f64 / m as f64;
            best.push((f(t), t));
        }
        best.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        best.truncate(3);
        let h = tau / m as f64;
        let mut value = best[0].0;
        let mut arg = best[0].1;
        for &(_, t0) in &best {
            let (mut lo, mut hi) = (t0 - h, t0 + h);
            for _ in 0..refine.max(1) {
                const INVPHI: f64 = 0.618_033_988_749_894_9;
                let c = hi - INVPHI * (hi - lo);
                let d = lo + INVPHI * (hi - lo);
                if f(c) > f(d) {
                    hi = d;
                } else {
                    lo = c;
                }
                if hi - lo < 1e-13 {
                    break;
                }
            }
            let mid = 0.5 * (lo + hi);
            let v = f(mid);
            if v > value {
                value = v;
                arg = mid;
            }
        }
        let derivative_bound: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| k as f64 * c.norm())
            .sum();
        SupNorm { value, argmax_theta: arg, derivative_bound, samples: m }
    }
}

/// Result of a circle supremum of a symbol norm. The true supremum is at
/// most `value + derivative_bound · π / samples`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupNorm {
    pub value: f64,
    pub argmax_theta: f64,
    pub derivative_bound: f64,
    pub samples: usize,
}

/// The parameter matrices A_1,…,A_{n-1} of a degree-one symbol tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymbolTupleWire", into = "SymbolTupleWire")]
pub struct SymbolTuple {
    d: usize,
    a: Vec<CMatrix>,
}

#[derive(Serialize, Deserialize)]
struct SymbolTupleWire {
    d: usize,
    #[serde(rename = "A")]
    a: Vec<CMatrix>,
}

impl TryFrom<SymbolTupleWire> for SymbolTuple {
    type Error = Error;
    fn try_from(w: SymbolTupleWire) -> Result<Self> {
        SymbolTuple::new(w.d, w.a)
    }
}

impl From<SymbolTuple> for SymbolTupleWire {
    fn from(s: SymbolTuple) -> Self {
        SymbolTupleWire { d: s.d, a: s.a }
    }
}

impl SymbolTuple {
    pub fn new(d: usize, a: Vec<CMatrix>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::Invalid("a symbol tuple needs n ≥ 2, i.e. at least A_1".into()));
        }
        if a.iter().any(|m| m.dim() != d) {
            return Err(Error::DimensionMismatch("all A_i must be d×d".into()));
        }
        Ok(SymbolTuple { d, a })
    }

    /// Number of operator coordinates n of the modeled tuple (= #A + 1).
    pub fn n(&self) -> usize {
        self.a.len() + 1
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn mats(&self) -> &[CMatrix] {
        &self.a
    }

    /// A_i for i = 1..n-1 (one-based, as in the model).
    pub fn a(&self, i: usize) -> &CMatrix {
        &self.a[i - 1]
    }

    /// The symbol Φ_i(z) = A_i + A_{n-i}* z.
    pub fn symbol(&self, i: usize) -> MatrixSymbol {
        let n = self.n();
        MatrixSymbol::linear(self.a(i).clone(), self.a(n - i).adjoint()).expect("same d")
    }

    pub fn conjugate(&self, w: &Array2<C64>) -> SymbolTuple {
        let wh = linalg::adjoint(w);
        SymbolTuple {
            d: self.d,
            a: self
                .a
                .iter()
                .map(|m| CMatrix::from_array(w.dot(m.array()).dot(&wh)).expect("square"))
                .collect(),
        }
    }
}

/// Admissibility check for a symbol tuple, following the pure-isometry
/// characterization: (iv) the commutator identities [A_i, A_j] = 0 and
/// [A_i, A_{n-j}*] = [A_j, A_{n-i}*]; (ii) for sampled z on the circle the
/// rescaled tuple (γ_1 Φ_1(z),…,γ_{n-1} Φ_{n-1}(z)) passes
/// [`contraction_verdict`] for Γ_{n-1} at the given budget. Condition (iii)
/// is structural: the symbols are built as A_i + A_{n-i}* z.
pub fn check_symbol_conditions(a: &SymbolTuple, tol: f64, budget: &Budget) -> Verdict {
    let n = a.n();
    let mut v = Verdict::from_defect(0.0, tol);
    for i in 1..n {
        for j in i..n {
            if i < j {
                let c = a.a(i).commutator_norm(a.a(j));
                let mut vi = Verdict::from_defect(c, tol);
                if !vi.holds {
                    vi = vi.with_certificate(Certificate::Identity(format!("[A_{}, A_{}] = 0", i, j)));
                }
                v = v.and(vi);
            }
            // [A_i, A_{n-j}*] = [A_j, A_{n-i}*]; trivial when i = j
            if i < j {
                let lhs = commutator(a.a(i), &a.a(n - j).adjoint());
                let rhs = commutator(a.a(j), &a.a(n - i).adjoint());
                let r = lhs.sub(&rhs).norm();
                let mut vi = Verdict::from_defect(r, tol);
                if !vi.holds {
                    vi = vi.with_certificate(Certificate::Identity(format!(
                        "[A_{}, A_{}*] = [A_{}, A_{}*]",
                        i,
                        n - j,
                        j,
                        n - i
                    )));
                }
                v = v.and(vi);
            }
        }
    }
    if !v.holds {
        return v;
    }
    let gammas = gamma_weights(n);
    let z_samples = 16usize;
    for k in 0..z_samples {
        let z = C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / z_samples as f64);
        let mats: Vec<CMatrix> = (1..n).map(|i| a.symbol(i).eval(z).scale(gammas[i - 1])).collect();
        let tuple = MatrixTuple::new(mats).expect("n >= 2");
        let cv = contraction_verdict(&tuple, budget, 0x5afe ^ k as u64, tol.max(defaults::MARGIN_TOL));
        if !cv.holds {
            return cv.with_diagnostic(format!("contraction check failed at z = exp({:.4}i)", z.arg()));
        }
    }
    v
}

fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.mul(b).sub(&b.mul(a))
}

fn gamma_weights(n: usize) -> Vec<C64> {
    (1..n).map(|i| C64::new((n - i) as f64 / n as f64, 0.0)).collect()
}

/// The model tuple (M_{Φ_1},…,M_{Φ_{n-1}}, M_z) of a pure Γ_n-isometry,
/// held symbolically through its parameter tuple (and serialized as one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelTuple {
    a: SymbolTuple,
}

impl ModelTuple {
    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn params(&self) -> &SymbolTuple {
        &self.a
    }

    /// Symbols of the first n-1 coordinates; the last coordinate is the shift.
    pub fn symbol(&self, i: usize) -> MatrixSymbol {
        self.a.symbol(i)
    }

    /// All n symbols including the shift slot.
    pub fn symbols_with_shift(&self) -> Vec<MatrixSymbol> {
        let n = self.n();
        let mut out: Vec<MatrixSymbol> = (1..n).map(|i| self.symbol(i)).collect();
        out.push(MatrixSymbol::shift(self.dim()));
        out
    }

    /// Exact residual of the isometry relations at symbol level: the Laurent
    /// coefficients of conj(z)·Φ_i(z) − Φ_{n-i}(z)* must vanish identically.
    pub fn symbol_identity_defect(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for i in 1..n {
            let phi = self.symbol(i);
            let psi = self.symbol(n - i);
            // degree m of conj(z)Φ_i is C^{(i)}_{m+1}; of Φ_{n-i}* is (C^{(n-i)}_{-m})*
            let kmax = phi.degree().max(psi.degree()) as i64;
            for m in -kmax..=kmax {
                let lhs = if m + 1 >= 0 { phi.coeff((m + 1) as usize) } else { CMatrix::zeros(self.dim()) };
                let rhs = if m <= 0 { psi.coeff((-m) as usize).adjoint() } else { CMatrix::zeros(self.dim()) };
                worst = worst.max(lhs.sub(&rhs).norm());
            }
        }
        worst
    }

    /// Γ_n-isometry test at the model level. The operator identities hold
    /// exactly by the symbol relations (their residual is still reported);
    /// commutation is checked on symbol products; the Γ_{n-1}-contraction
    /// leg uses ‖q(M_{γΦ})‖ = sup_z ‖q(γΦ(z))‖, so the quantification over
    /// z collapses into a one-angle symbol supremum per battery polynomial.
    pub fn is_gamma_isometry(&self, tol: f64, grid: usize) -> Verdict {
        let n = self.n();
        let mut v = Verdict::from_defect(self.symbol_identity_defect(), tol);
        if !v.holds {
            v = v.with_certificate(Certificate::Identity("conj(z)·Φ_i(z) = Φ_{n-i}(z)*".into()));
        }
        // commutation of the multiplication tuple at symbol level
        let symbols: Vec<MatrixSymbol> = (1..n).map(|i| self.symbol(i)).collect();
        let mut cdef = 0.0f64;
        for i in 0..symbols.len() {
            for j in i + 1..symbols.len() {
                cdef = cdef.max(symbols[i].commutator_defect(&symbols[j]));
            }
        }
        let mut vc = Verdict::from_defect(cdef, tol);
        if !vc.holds {
            vc = vc.with_certificate(Certificate::Identity("[M_{Φ_i}, M_{Φ_j}] = 0".into()));
        }
        v = v.and(vc);
        if n == 1 {
            return v;
        }
        // battery margins against sup over Γ_{n-1}
        let budget = Budget { max_degree: 3, random_polys: 24, grid: if grid >= 4 { grid } else { 32 } };
        let gammas = gamma_weights(n);
        let scaled: Vec<MatrixSymbol> = symbols
            .iter()
            .zip(&gammas)
            .map(|(s, &g)| s.scale(g))
            .collect();
        let margin_tol = tol.max(defaults::MARGIN_TOL);
        let mut battery: Vec<(String, MultiPoly)> = Vec::new();
        let m = n - 1;
        for i in 0..m {
            battery.push((format!("x{}", i + 1), MultiPoly::var(m, i)));
            let mut e = vec![0u32; m];
            e[i] = 2;
            battery.push((format!("x{}^2", i + 1), MultiPoly::from_terms(m, vec![(e, C64::new(1.0, 0.0))]).unwrap()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0xcafe);
        for k in 0..budget.random_polys {
            battery.push((format!("random#{k}"), random_poly_for_model(m, budget.max_degree, &mut rng)));
        }
        for (label, q) in battery {
            let symbol = eval_poly_on_symbols(&scaled, &q).expect("dims agree");
            let sup_model = symbol.sup_norm(256, 80).value;
            let sup_gamma = match sup_cached(&q, m, budget.grid, defaults::REFINE_ITERS) {
                Ok(v) => v,
                Err(_) => {
                    return v.and(
                        Verdict::from_defect(f64::INFINITY, margin_tol)
                            .with_certificate(Certificate::Polynomial(label)),
                    )
                }
            };
            let margin = sup_model - sup_gamma;
            if margin > margin_tol {
                let vm = Verdict::from_defect(margin, margin_tol)
                    .with_certificate(Certificate::Polynomial(label.clone()))
                    .with_diagnostic(format!("symbol sup {} vs Γ_{} sup {}", sup_model, m, sup_gamma));
                return v.and(vm);
            }
        }
        v
    }
}

fn random_poly_for_model(n: usize, max_degree: u32, rng: &mut ChaCha8Rng) -> MultiPoly {
    use rand_distr::StandardNormal;
    fn monomials(n: usize, deg: u32) -> Vec<Vec<u32>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for d in 0..=deg {
            for rest in monomials(n - 1, deg - d) {
                let mut e = vec![d];
                e.extend(rest);
                out.push(e);
            }
        }
        out
    }
    let terms = monomials(n, max_degree)
        .into_iter()
        .map(|e| (e, C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))));
    MultiPoly::from_terms(n, terms).unwrap()
}

/// Evaluate a polynomial on a list of commuting symbols, with power caching.
pub(crate) fn eval_poly_on_symbols(symbols: &[MatrixSymbol], q: &MultiPoly) -> Result<MatrixSymbol> {
    if q.n_vars() != symbols.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}-variable polynomial on {} symbols",
            q.n_vars(),
            symbols.len()
        )));
    }
    let d = symbols.first().map(|s| s.dim()).ok_or_else(|| Error::Invalid("empty symbol list".into()))?;
    let max_exp: Vec<u32> = (0..symbols.len())
        .map(|i| q.terms().map(|(e, _)| e[i]).max().unwrap_or(0))
        .collect();
    let mut powers: Vec<Vec<MatrixSymbol>> = Vec::with_capacity(symbols.len());
    for (i, s) in symbols.iter().enumerate() {
        let mut p = vec![MatrixSymbol::constant(CMatrix::identity(d))];
        for k in 1..=max_exp[i] as usize {
            let next = p[k - 1].mul(s)?;
            p.push(next);
        }
        powers.push(p);
    }
    let mut acc = MatrixSymbol::zero(d);
    for (e, &c) in q.terms() {
        let mut m = MatrixSymbol::constant(CMatrix::identity(d).scale(c));
        for (i, &exp) in e.iter().enumerate() {
            if exp > 0 {
                m = m.mul(&powers[i][exp as usize])?;
            }
        }
        acc = acc.add(&m)?;
    }
    Ok(acc)
}

/// Symbol of q(M_{Φ_1},…,M_{Φ_{n-1}}, M_z): polynomial functional calculus
/// for the multiplication tuple is symbol arithmetic.
pub fn apply_poly(model: &ModelTuple, q: &MultiPoly) -> Result<MatrixSymbol> {
    eval_poly_on_symbols(&model.symbols_with_shift(), q)
}

/// Build the model of a pure Γ_n-isometry from an admissible symbol tuple.
/// The symbol identities hold exactly by construction; admissibility is
/// verified first and rejected inputs are an error.
pub fn build_pure_isometry(a: &SymbolTuple, tol: f64, budget: &Budget) -> Result<ModelTuple> {
    let check = check_symbol_conditions(a, tol, budget);
    if !check.holds {
        return Err(Error::Precondition(format!(
            "symbol tuple is not admissible (defect {:.3e}{})",
            check.defect,
            check
                .certificate
                .as_ref()
                .map(|c| format!(", certificate {:?}", c))
                .unwrap_or_default()
        )));
    }
    Ok(ModelTuple { a: a.clone() })
}

/// Degree-graded finite section of the model at degree N: block matrices of
/// size (N+1)d, block-subdiagonal shift for M_z and banded block-Toeplitz
/// for the M_{Φ_i}. The truncation of M_z is not an isometry on the top
/// block, so truncation-based assertions must state the N they need.
pub fn truncate(model: &ModelTuple, n_degree: usize) -> Result<MatrixTuple> {
    if n_degree < 1 {
        return Err(Error::Invalid("truncation needs N ≥ 1".into()));
    }
    let d = model.dim();
    let blocks = n_degree + 1;
    let dim = blocks * d;
    let mut mats = Vec::with_capacity(model.n());
    for i in 1..model.n() {
        let phi = model.symbol(i);
        let mut m: Array2<C64> = Array2::zeros((dim, dim));
        for col in 0..blocks {
            for k in 0..=phi.degree() {
                let row = col + k;
                if row >= blocks {
                    break;
                }
                let c = phi.coeff(k);
                for a in 0..d {
                    for b in 0..d {
                        m[(row * d + a, col * d + b)] = c.array()[(a, b)];
                    }
                }
            }
        }
        mats.push(CMatrix::from_array(m)?);
    }
    let mut shift: Array2<C64> = Array2::zeros((dim, dim));
    for col in 0..blocks - 1 {
        for a in 0..d {
            shift[((col + 1) * d + a, col * d + a)] = C64::new(1.0, 0.0);
        }
    }
    mats.push(CMatrix::from_array(shift)?);
    MatrixTuple::new(mats)
}

/// The degree-zero invariant: compressions of S_{n-i}* − S_i S_n* to the
/// degree-0 block, which equal A_{n-i}* — on the Hardy space these
/// operators are P_0 ⊗ A_{n-i}*. Computed from the block algebra of a
/// truncation (operator data), which reproduces the parameters exactly.
pub fn fundamental_invariant(model: &ModelTuple) -> Vec<CMatrix> {
    let n = model.n();
    let d = model.dim();
    let trunc = truncate(model, 2).expect("N = 2");
    let shift = trunc.mat(n - 1);
    let mut out = Vec::with_capacity(n - 1);
    for i in 1..n {
        let g = trunc.mat(n - i - 1).adjoint().sub(&trunc.mat(i - 1).mul(&shift.adjoint()));
        // top-left d×d block
        let mut top: Array2<C64> = Array2::zeros((d, d));
        for a in 0..d {
            for b in 0..d {
                top[(a, b)] = g.array()[(a, b)];
            }
        }
        out.push(CMatrix::from_array(top).expect("square"));
    }
    out
}

/// Direct sum of a Γ_n-unitary part and a pure part. Parts are validated on
/// construction; either may be absent, not both.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructuredTuple {
    pub unitary_part: Option<MatrixTuple>,
    pub pure_part: Option<ModelTuple>,
}

/// Assemble a structured Γ_n-isometry from its Wold pieces, verifying each.
pub fn make_direct_sum(u: Option<MatrixTuple>, p: Option<ModelTuple>, tol: f64) -> Result<StructuredTuple> {
    if u.is_none() && p.is_none() {
        return Err(Error::Invalid("direct sum needs at least one part".into()));
    }
    if let (Some(u), Some(p)) = (&u, &p) {
        if u.n() != p.n() {
            return Err(Error::DimensionMismatch(format!(
                "unitary part has n = {}, pure part n = {}",
                u.n(),
                p.n()
            )));
        }
    }
    if let Some(u) = &u {
        let v = is_gamma_unitary(u, tol.max(defaults::SPECTRAL_TOL), 32);
        if !v.holds {
            return Err(Error::Precondition(format!(
                "unitary part is not a Γ_n-unitary (defect {:.3e})",
                v.defect
            )));
        }
    }
    if let Some(p) = &p {
        let v = p.is_gamma_isometry(tol.max(defaults::SPECTRAL_TOL), 32);
        if !v.holds {
            return Err(Error::Precondition(format!(
                "pure part is not a Γ_n-isometry (defect {:.3e})",
                v.defect
            )));
        }
    }
    Ok(StructuredTuple { unitary_part: u, pure_part: p })
}

/// Wold decomposition of a structured tuple: the unitary part is re-verified
/// and returned in joint-diagonal canonical form; the pure part's parameters
/// are re-derived from operator data via the degree-zero invariant and the
/// model rebuilt and re-verified. Recovery is up to unitary equivalence of
/// the parts.
pub fn wold_decompose(t: &StructuredTuple, tol: f64) -> Result<(Option<MatrixTuple>, Option<ModelTuple>)> {
    if t.unitary_part.is_none() && t.pure_part.is_none() {
        return Err(Error::Invalid("structured tuple has no parts".into()));
    }
    let unitary = match &t.unitary_part {
        None => None,
        Some(u) => {
            let v = is_gamma_unitary(u, tol.max(defaults::SPECTRAL_TOL), 32);
            if !v.holds {
                return Err(Error::Precondition(format!(
                    "unitary part fails the Γ_n-unitary checks (defect {:.3e})",
                    v.defect
                )));
            }
            let (points, _) = joint_diagonalize(u, tol.max(defaults::SPECTRAL_TOL))?;
            let n = u.n();
            let mats = (0..n)
                .map(|k| CMatrix::diagonal(&points.iter().map(|p| p.coords()[k]).collect::<Vec<_>>()))
                .collect();
            Some(MatrixTuple::new(mats)?)
        }
    };
    let pure = match &t.pure_part {
        None => None,
        Some(p) => {
            let inv = fundamental_invariant(p);
            let n = p.n();
            // inv[i-1] = A_{n-i}*, so A_j = inv[n-j-1]*
            let a: Vec<CMatrix> = (1..n).map(|j| inv[n - j - 1].adjoint()).collect();
            let tuple = SymbolTuple::new(p.dim(), a)?;
            Some(build_pure_isometry(&tuple, tol.max(defaults::SPECTRAL_TOL), &Budget::embedded())?)
        }
    };
    Ok((unitary, pure))
}

/// Wold decomposition of a plain matrix tuple: in finite dimension an
/// isometry is unitary, so a tuple passing the Γ_n-isometry identities has
/// no pure part. Inputs failing the checks are rejected.
pub fn wold_decompose_matrix(t: &MatrixTuple, tol: f64) -> Result<(MatrixTuple, Option<ModelTuple>)> {
    let iso = crate::classify::is_gamma_isometry(t, tol.max(defaults::SPECTRAL_TOL), 32);
    if !iso.holds {
        return Err(Error::Precondition(format!(
            "input passes neither the structured nor the finite-isometry route (defect {:.3e})",
            iso.defect
        )));
    }
    let uni = is_gamma_unitary(t, tol.max(defaults::SPECTRAL_TOL), 32);
    if !uni.holds {
        return Err(Error::Precondition(format!(
            "S_n is an isometry but the tuple fails the Γ_n-unitary checks (defect {:.3e})",
            uni.defect
        )));
    }
    Ok((t.clone(), None))
}

/// Admissible diagonal symbol tuples: each diagonal entry carries its own
/// parameter point w ∈ T^{n-1} with a_i = s_i(w); the induced boundary curve
/// (a_1 + conj(a_{n-1})z, …, a_{n-1} + conj(a_1)z, z) is
/// s(w_1,…,w_{n-1}, z·∏ conj(w_j)) ∈ s(T^n) for every z on the circle, so
/// admissibility is exact rather than sampled.
pub fn admissible_diagonal(n: usize, d: usize, rng: &mut ChaCha8Rng) -> SymbolTuple {
    let mut diag: Vec<Vec<C64>> = vec![Vec::with_capacity(d); n - 1];
    for _ in 0..d {
        let w: Vec<C64> = (0..n - 1)
            .map(|_| C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let s = crate::poly::symmetrize_coords(&w);
        for (i, &si) in s.iter().enumerate() {
            diag[i].push(si);
        }
    }
    SymbolTuple::new(d, diag.into_iter().map(|v| CMatrix::diagonal(&v)).collect()).expect("square")
}

/// Simultaneous Haar-unitary conjugation of an admissible diagonal tuple;
/// conjugation preserves all four model conditions.
pub fn admissible_conjugated(n: usize, d: usize, rng: &mut ChaCha8Rng) -> SymbolTuple {
    let base = admissible_diagonal(n, d, rng);
    let w = linalg::haar_unitary(d, rng);
    base.conjugate(&w)
}
