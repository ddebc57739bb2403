//! Geometry of the symmetrized polydisc Γ_n: characteristic polynomials,
//! membership, the three distinguished-boundary routes, fibers, the
//! projection into Γ_{n-1} and the embedding into Γ_{n+1}, boundary
//! reconstruction from a lower boundary point, and samplers.

use crate::error::{Error, Result};
use crate::linalg;
use crate::poly::{symmetrize_coords, CPoint};
use crate::verdict::{Certificate, Verdict};
use crate::{defaults, C64};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Relative trim threshold for trailing (leading-degree) coefficients.
const TRIM_REL: f64 = 1e-12;

/// A univariate complex polynomial, coefficients ascending in degree.
#[derive(Debug, Clone, PartialEq)]
pub struct UniPoly {
    coeffs: Vec<C64>,
}

impl UniPoly {
    /// Build from ascending coefficients, trimming trailing coefficients
    /// whose modulus is below `TRIM_REL` times the largest one.
    pub fn new(coeffs: Vec<C64>) -> Self {
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs.last().map(|c| c.norm() <= TRIM_REL * scale).unwrap_or(false) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(C64::new(0.0, 0.0));
        }
        UniPoly { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    pub fn eval(&self, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn derivative(&self) -> UniPoly {
        if self.coeffs.len() <= 1 {
            return UniPoly::new(vec![C64::new(0.0, 0.0)]);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| c * i as f64)
            .collect();
        UniPoly::new(coeffs)
    }

    /// All complex roots, by companion-matrix eigenvalues with a guarded
    /// Newton polish. Multiset accuracy is eigen-solver accuracy: for an
    /// m-fold root the computed roots split by O(eps^{1/m}); use
    /// [`UniPoly::refined_roots`] when that matters.
    pub fn roots(&self) -> Result<Vec<C64>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let n = self.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = self.coeffs[n];
        let monic: Vec<C64> = self.coeffs[..n].iter().map(|&c| c / lead).collect();
        let mut comp: Array2<C64> = Array2::zeros((n, n));
        for i in 0..n {
            comp[(i, n - 1)] = -monic[i];
            if i + 1 < n {
                comp[(i + 1, i)] = C64::new(1.0, 0.0);
            }
        }
        let (vals, _) = linalg::eig_pairs(&comp);
        Ok(vals)
    }

    /// Root multiset refined for repeated roots: companion eigenvalues are
    /// clustered by single linkage, a cluster of size m is collapsed to its
    /// centroid when its radius is consistent with an m-fold root
    /// (eigenvalues of an m-fold root split symmetrically, so the centroid
    /// recovers the root to O(eps^{2/m})), and simple roots get a guarded
    /// Newton polish. Returns the multiset and collapse diagnostics.
    pub fn refined_roots(&self) -> Result<(Vec<C64>, Vec<String>)> {
        let raw = self.roots()?;
        let n = raw.len();
        let mut diags = Vec::new();
        if n <= 1 {
            return Ok((raw.into_iter().map(|r| self.polish(r)).collect(), diags));
        }
        let scale = raw.iter().map(|r| r.norm()).fold(1.0, f64::max);
        let kappa = |m: usize| 25.0 * (n as f64 * f64::EPSILON).powf(1.0 / m as f64) * scale;

        // single linkage at the most permissive radius
        let link = kappa(n);
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            let mut i = i;
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for i in 0..n {
            for j in i + 1..n {
                if (raw[i] - raw[j]).norm() <= link {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
        }
        let mut clusters: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            let root = find(&mut parent, i);
            clusters.entry(root).or_default().push(i);
        }

        let mut out = Vec::with_capacity(n);
        for members in clusters.values() {
            let m = members.len();
            if m == 1 {
                out.push(self.polish(raw[members[0]]));
                continue;
            }
            let centroid = members.iter().map(|&i| raw[i]).sum::<C64>() / m as f64;
            let radius = members.iter().map(|&i| (raw[i] - centroid).norm()).fold(0.0, f64::max);
            if radius <= kappa(m) {
                diags.push(format!(
                    "collapsed a cluster of {} roots near {:.6}{:+.6}i (radius {:.2e}) to its centroid",
                    m, centroid.re, centroid.im, radius
                ));
                out.extend(std::iter::repeat(centroid).take(m));
            } else {
                // close but not multiple-root tight; keep members as-is
                out.extend(members.iter().map(|&i| self.polish(raw[i])));
            }
        }
        Ok((out, diags))
    }

    /// Up to three Newton steps, each kept only if it reduces |p|.
    fn polish(&self, z0: C64) -> C64 {
        let dp = self.derivative();
        let mut z = z0;
        let mut val = self.eval(z).norm();
        for _ in 0..3 {
            let d = dp.eval(z);
            if d.norm() == 0.0 {
                break;
            }
            let step = self.eval(z) / d;
            let cand = z - step;
            let cand_val = self.eval(cand).norm();
            if cand_val < val {
                z = cand;
                val = cand_val;
            } else {
                break;
            }
        }
        z
    }

    /// Self-inversiveness test: is the conjugate-reversed coefficient vector
    /// a unimodular multiple ω of the coefficients? ω is estimated from the
    /// largest-modulus coefficient pair and projected to the circle; the
    /// defect is the normalized residual.
    pub fn is_self_inversive(&self, tol: f64) -> Verdict {
        let d = self.degree();
        let rev: Vec<C64> = (0..=d).map(|i| self.coeffs[d - i].conj()).collect();
        let scale: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if scale == 0.0 {
            return Verdict::from_defect(0.0, tol);
        }
        let j = (0..=d)
            .max_by(|&a, &b| self.coeffs[a].norm().partial_cmp(&self.coeffs[b].norm()).unwrap())
            .unwrap();
        let omega_raw = rev[j] / self.coeffs[j];
        let omega = if omega_raw.norm() > 0.0 { omega_raw / omega_raw.norm() } else { C64::new(1.0, 0.0) };
        let residual: f64 = (0..=d)
            .map(|i| (rev[i] - omega * self.coeffs[i]).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / scale;
        let mut v = Verdict::from_defect(residual, tol);
        v.diagnostics.push(format!("omega = {:.12}{:+.12}i", omega.re, omega.im));
        v
    }
}

/// A candidate point (s_1,…,s_n) of Γ_n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GammaPointWire", into = "GammaPointWire")]
pub struct GammaPoint {
    s: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct GammaPointWire {
    n: usize,
    s: Vec<C64>,
}

impl TryFrom<GammaPointWire> for GammaPoint {
    type Error = Error;
    fn try_from(w: GammaPointWire) -> Result<Self> {
        if w.n != w.s.len() || w.n == 0 {
            return Err(Error::DimensionMismatch(format!("n = {} against {} coordinates", w.n, w.s.len())));
        }
        GammaPoint::new(w.s)
    }
}

impl From<GammaPoint> for GammaPointWire {
    fn from(g: GammaPoint) -> Self {
        GammaPointWire { n: g.s.len(), s: g.s }
    }
}

impl GammaPoint {
    pub fn new(s: Vec<C64>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Invalid("a Γ_n point needs n ≥ 1".into()));
        }
        if s.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Invalid("non-finite coordinate".into()));
        }
        Ok(GammaPoint { s })
    }

    pub fn from_reals(s: &[f64]) -> Self {
        GammaPoint { s: s.iter().map(|&x| C64::new(x, 0.0)).collect() }
    }

    pub fn n(&self) -> usize {
        self.s.len()
    }

    pub fn coords(&self) -> &[C64] {
        &self.s
    }

    /// Symmetrization of a point of ℂ^n: (s_1(z),…,s_n(z)).
    pub fn symmetrize(z: &CPoint) -> Result<Self> {
        GammaPoint::new(symmetrize_coords(z.coords()))
    }

    /// The characteristic polynomial p(z) = Σ_{i=0}^n (-1)^{n-i} s_{n-i} z^i,
    /// monic of degree n, whose roots form the fiber over this point.
    pub fn char_poly(&self) -> UniPoly {
        let n = self.n();
        let mut coeffs = vec![C64::new(0.0, 0.0); n + 1];
        coeffs[n] = C64::new(1.0, 0.0);
        for i in 0..n {
            let sign = if (n - i) % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[i] = self.s[n - i - 1] * sign;
        }
        UniPoly::new(coeffs)
    }

    /// Membership in Γ_n: all characteristic roots in the closed unit disc,
    /// within `tol`. The defect is max(0, max|root| - 1) of the refined root
    /// multiset; the certificate is the offending root.
    pub fn in_gamma(&self, tol: f64) -> Verdict {
        let (roots, diags) = self.char_poly().refined_roots().expect("monic char_poly");
        let worst = roots
            .iter()
            .cloned()
            .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
            .expect("degree n >= 1");
        let defect = (worst.norm() - 1.0).max(0.0);
        let mut v = Verdict::from_defect(defect, tol);
        v.diagnostics = diags;
        if !v.holds {
            v = v.with_certificate(Certificate::Root(worst));
        }
        v
    }

    /// A fiber point: a root multiset λ of the characteristic polynomial with
    /// s(λ) ≈ s, deterministically ordered by (argument, modulus).
    pub fn fiber(&self) -> CPoint {
        let (mut roots, _) = self.char_poly().refined_roots().expect("monic char_poly");
        roots.sort_by(|a, b| {
            let ka = (a.arg(), a.norm());
            let kb = (b.arg(), b.norm());
            ka.partial_cmp(&kb).unwrap()
        });
        CPoint::new(roots)
    }

    /// Projection π(s) = (γ_1 s_1,…,γ_{n-1} s_{n-1}), γ_i = (n-i)/n; maps
    /// Γ_n into Γ_{n-1}.
    pub fn project(&self) -> Result<GammaPoint> {
        let n = self.n();
        if n < 2 {
            return Err(Error::Precondition("project needs n ≥ 2".into()));
        }
        let s = (0..n - 1)
            .map(|i| self.s[i] * ((n - i - 1) as f64 / n as f64))
            .collect();
        GammaPoint::new(s)
    }

    /// Embedding π_α(s) = (α+s_1, αs_1+s_2, …, αs_{n-1}+s_n, αs_n); maps Γ_n
    /// into Γ_{n+1} when |α| ≤ 1.
    pub fn embed(&self, alpha: C64) -> GammaPoint {
        let n = self.n();
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let prev = if i == 0 { C64::new(1.0, 0.0) } else { self.s[i - 1] };
            let cur = if i == n { C64::new(0.0, 0.0) } else { self.s[i] };
            out.push(alpha * prev + cur);
        }
        GammaPoint { s: out }
    }

    /// Distinguished-boundary test along the chosen route(s).
    pub fn on_boundary(&self, tol: f64, route: BoundaryRoute) -> Verdict {
        match route {
            BoundaryRoute::Fiber => self.boundary_fiber(tol),
            BoundaryRoute::Recursive => self.boundary_recursive(tol),
            BoundaryRoute::Closure => self.boundary_closure(tol),
            BoundaryRoute::All => self.boundary_all(tol),
        }
    }

    /// Route (fiber): every characteristic root is unimodular within tol.
    fn boundary_fiber(&self, tol: f64) -> Verdict {
        let (roots, diags) = self.char_poly().refined_roots().expect("monic char_poly");
        let (worst, defect) = roots
            .iter()
            .map(|r| (*r, (r.norm() - 1.0).abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("degree n >= 1");
        let mut v = Verdict::from_defect(defect, tol);
        v.diagnostics = diags;
        if !v.holds {
            v = v.with_certificate(Certificate::Root(worst));
        }
        v
    }

    /// Route (recursive): |s_n| = 1, conj(s_n)·s_i = conj(s_{n-i}), and the
    /// projection lies in Γ_{n-1}; base case n = 1 is |s_1| = 1.
    fn boundary_recursive(&self, tol: f64) -> Verdict {
        let n = self.n();
        let sn = self.s[n - 1];
        let d_mod = (sn.norm() - 1.0).abs();
        if n == 1 {
            let mut v = Verdict::from_defect(d_mod, tol);
            if !v.holds {
                v = v.with_certificate(Certificate::Root(sn));
            }
            return v;
        }
        let mut d_sym = 0.0f64;
        let mut worst_i = 0usize;
        for i in 1..n {
            let r = (sn.conj() * self.s[i - 1] - self.s[n - i - 1].conj()).norm();
            if r > d_sym {
                d_sym = r;
                worst_i = i;
            }
        }
        let proj = self.project().expect("n >= 2");
        let inner = proj.in_gamma(tol);
        let defect = d_mod.max(d_sym).max(inner.defect);
        let mut v = Verdict::from_defect(defect, tol);
        v.diagnostics = inner.diagnostics;
        if !v.holds {
            v.certificate = if d_sym >= d_mod && d_sym >= inner.defect {
                Some(Certificate::Identity(format!("conj(s_n)·s_{} = conj(s_{})", worst_i, n - worst_i)))
            } else if inner.defect >= d_mod {
                inner.certificate
            } else {
                Some(Certificate::Root(sn))
            };
        }
        v
    }

    /// Route (closure): membership in Γ_n together with |s_n| = 1.
    fn boundary_closure(&self, tol: f64) -> Verdict {
        let n = self.n();
        let d_mod = (self.s[n - 1].norm() - 1.0).abs();
        let inner = self.in_gamma(tol);
        let defect = d_mod.max(inner.defect);
        let mut v = Verdict::from_defect(defect, tol);
        v.diagnostics = inner.diagnostics;
        if !v.holds {
            v.certificate = if inner.defect >= d_mod { inner.certificate } else { Some(Certificate::Root(self.s[n - 1])) };
        }
        v
    }

    /// All three routes, with tolerance escalation on disagreement: the
    /// routes are re-run at 10x, 100x, 1000x the tolerance, and the first
    /// level at which they agree decides, recorded in the diagnostics.
    /// Persistent disagreement is reported as an inconsistency, not
    /// silently resolved.
    fn boundary_all(&self, tol: f64) -> Verdict {
        for (level, factor) in [1.0, 10.0, 100.0, 1000.0].iter().enumerate() {
            let t = tol * factor;
            let f = self.boundary_fiber(t);
            let r = self.boundary_recursive(t);
            let c = self.boundary_closure(t);
            if f.holds == r.holds && r.holds == c.holds {
                let defect = f.defect.max(r.defect).max(c.defect);
                let mut v = Verdict { holds: f.holds, defect, certificate: None, diagnostics: Vec::new() };
                if !v.holds {
                    v.certificate = f.certificate.or(r.certificate).or(c.certificate);
                }
                if level > 0 {
                    v.diagnostics.push(format!(
                        "routes agreed only after tolerance escalation to {:.1e}",
                        t
                    ));
                }
                return v;
            }
        }
        let f = self.boundary_fiber(tol);
        let r = self.boundary_recursive(tol);
        let c = self.boundary_closure(tol);
        Verdict {
            holds: false,
            defect: f.defect.max(r.defect).max(c.defect),
            certificate: f.certificate.clone().or(r.certificate.clone()).or(c.certificate.clone()),
            diagnostics: vec![format!(
                "route disagreement persists through escalation: fiber(holds={}, defect={:.3e}) recursive(holds={}, defect={:.3e}) closure(holds={}, defect={:.3e})",
                f.holds, f.defect, r.holds, r.defect, c.holds, c.defect
            )],
        }
    }
}

/// Which distinguished-boundary characterization to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryRoute {
    /// All characteristic roots unimodular.
    Fiber,
    /// |s_n| = 1, the conjugate symmetry relations, and projection into Γ_{n-1}.
    Recursive,
    /// Membership in Γ_n together with |s_n| = 1.
    Closure,
    /// Every route, with agreement reporting.
    All,
}

impl std::str::FromStr for BoundaryRoute {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fiber" => Ok(BoundaryRoute::Fiber),
            "recursive" => Ok(BoundaryRoute::Recursive),
            "closure" => Ok(BoundaryRoute::Closure),
            "all" => Ok(BoundaryRoute::All),
            other => Err(Error::Invalid(format!("unknown route `{}`", other))),
        }
    }
}

/// Boundary reconstruction: from μ ∈ bΓ_{n-1} and an angle θ, the point
/// s_j = μ_j + μ_{n-j} e^{iθ} (conventions μ_0 = 1, μ_n = 0) lies on bΓ_n.
pub fn boundary_from_mu(mu: &GammaPoint, theta: f64) -> Result<GammaPoint> {
    let check = mu.on_boundary(defaults::MEMBERSHIP_TOL * 10.0, BoundaryRoute::All);
    if !check.holds {
        return Err(Error::Precondition(format!(
            "μ is not on bΓ_{} (defect {:.3e})",
            mu.n(),
            check.defect
        )));
    }
    let m = mu.n(); // constructing a point of Γ_{m+1}
    let n = m + 1;
    let e = C64::from_polar(1.0, theta);
    let coord = |j: usize| -> C64 {
        // μ_0 = 1, μ_n = 0
        if j == 0 {
            C64::new(1.0, 0.0)
        } else if j == n {
            C64::new(0.0, 0.0)
        } else {
            mu.coords()[j - 1]
        }
    };
    let s = (1..=n).map(|j| coord(j) + coord(n - j) * e).collect();
    GammaPoint::new(s)
}

/// Deterministic sampler: symmetrizations of i.i.d. uniform points of the
/// closed polydisc (or of the torus when `boundary` is set).
pub fn sample(n: usize, count: usize, boundary: bool, seed: u64) -> Vec<GammaPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let z: Vec<C64> = (0..n)
                .map(|_| {
                    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                    let r = if boundary { 1.0 } else { rng.gen_range(0.0f64..1.0).sqrt() };
                    C64::from_polar(r, phase)
                })
                .collect();
            GammaPoint::new(symmetrize_coords(&z)).expect("finite")
        })
        .collect()
}
