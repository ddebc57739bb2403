//! Sparse multivariate complex polynomials, elementary symmetric functions,
//! and the reduction of symmetric polynomials to polynomials in s_1,…,s_n.

use crate::error::{Error, Result};
use crate::{defaults, C64};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Coefficients with modulus at or below this are dropped from term maps.
const DROP_TOL: f64 = 1e-300;

/// A point of ℂ^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CPoint(pub Vec<C64>);

impl CPoint {
    pub fn new(coords: Vec<C64>) -> Self {
        CPoint(coords)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coords(&self) -> &[C64] {
        &self.0
    }
}

impl From<Vec<C64>> for CPoint {
    fn from(v: Vec<C64>) -> Self {
        CPoint(v)
    }
}

/// Elementary symmetric function s_k(z_1,…,z_n), with s_0 = 1.
///
/// Computed by coefficient extraction from the product ∏(1 + z_i t): the
/// running vector e holds (s_0,…,s_n) and each factor updates it in place
/// from the top down, which is the numerically stable direction.
pub fn elem_sym(k: usize, z: &CPoint) -> Result<C64> {
    let n = z.len();
    if k > n {
        return Err(Error::IndexOutOfRange { index: k, n, context: "elem_sym" });
    }
    Ok(elem_sym_all(z.coords())[k])
}

/// All elementary symmetric functions (s_0,…,s_n) of the given values.
pub(crate) fn elem_sym_all(z: &[C64]) -> Vec<C64> {
    let n = z.len();
    let mut e = vec![C64::new(0.0, 0.0); n + 1];
    e[0] = C64::new(1.0, 0.0);
    for (i, &zi) in z.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            let prev = e[k - 1];
            e[k] += zi * prev;
        }
    }
    e
}

/// Symmetrization (s_1(z),…,s_n(z)) as raw coordinates.
pub(crate) fn symmetrize_coords(z: &[C64]) -> Vec<C64> {
    elem_sym_all(z)[1..].to_vec()
}

/// A sparse multivariate polynomial in ℂ[z_1,…,z_n].
///
/// Terms are keyed by exponent multi-index; `Vec<u32>` ordering is the
/// lexicographic order with z_1 > z_2 > … > z_n, so the last key in the map
/// is the lex-leading monomial.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    n_vars: usize,
    terms: BTreeMap<Vec<u32>, C64>,
}

impl MultiPoly {
    pub fn zero(n_vars: usize) -> Self {
        MultiPoly { n_vars, terms: BTreeMap::new() }
    }

    pub fn constant(n_vars: usize, c: C64) -> Self {
        let mut p = Self::zero(n_vars);
        p.add_term(vec![0; n_vars], c);
        p
    }

    /// The coordinate polynomial z_{i+1} (zero-based index).
    pub fn var(n_vars: usize, i: usize) -> Self {
        assert!(i < n_vars, "variable index out of range");
        let mut e = vec![0u32; n_vars];
        e[i] = 1;
        let mut p = Self::zero(n_vars);
        p.add_term(e, C64::new(1.0, 0.0));
        p
    }

    pub fn from_terms(n_vars: usize, terms: impl IntoIterator<Item = (Vec<u32>, C64)>) -> Result<Self> {
        let mut p = Self::zero(n_vars);
        for (e, c) in terms {
            if e.len() != n_vars {
                return Err(Error::DimensionMismatch(format!(
                    "multi-index of length {} in a {}-variable polynomial",
                    e.len(),
                    n_vars
                )));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &C64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn coeff(&self, exps: &[u32]) -> C64 {
        self.terms.get(exps).copied().unwrap_or_else(|| C64::new(0.0, 0.0))
    }

    pub fn add_term(&mut self, exps: Vec<u32>, c: C64) {
        use std::collections::btree_map::Entry;
        debug_assert_eq!(exps.len(), self.n_vars);
        match self.terms.entry(exps) {
            Entry::Vacant(slot) => {
                if c.norm() > DROP_TOL {
                    slot.insert(c);
                }
            }
            Entry::Occupied(mut slot) => {
                let v = *slot.get() + c;
                if v.norm() > DROP_TOL {
                    *slot.get_mut() = v;
                } else {
                    slot.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &MultiPoly) -> MultiPoly {
        assert_eq!(self.n_vars, other.n_vars);
        let mut out = self.clone();
        for (e, c) in other.terms.iter() {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &MultiPoly) -> MultiPoly {
        assert_eq!(self.n_vars, other.n_vars);
        let mut out = self.clone();
        for (e, c) in other.terms.iter() {
            out.add_term(e.clone(), -*c);
        }
        out
    }

    pub fn scale(&self, c: C64) -> MultiPoly {
        let mut out = Self::zero(self.n_vars);
        if c.norm() <= DROP_TOL {
            return out;
        }
        for (e, v) in self.terms.iter() {
            out.terms.insert(e.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &MultiPoly) -> MultiPoly {
        assert_eq!(self.n_vars, other.n_vars);
        let mut out = Self::zero(self.n_vars);
        for (ea, ca) in self.terms.iter() {
            for (eb, cb) in other.terms.iter() {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    /// Drop terms with |coefficient| ≤ tol.
    pub fn pruned(&self, tol: f64) -> MultiPoly {
        let mut out = Self::zero(self.n_vars);
        for (e, c) in self.terms.iter() {
            if c.norm() > tol {
                out.terms.insert(e.clone(), *c);
            }
        }
        out
    }

    /// Largest coefficient modulus; 0 for the zero polynomial.
    pub fn coeff_scale(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Evaluate at a point, with per-variable power caching.
    pub fn eval(&self, z: &CPoint) -> Result<C64> {
        if z.len() != self.n_vars {
            return Err(Error::DimensionMismatch(format!(
                "point of dimension {} against {}-variable polynomial",
                z.len(),
                self.n_vars
            )));
        }
        Ok(self.eval_unchecked(z.coords()))
    }

    /// Allocation-free evaluation; degrees at desk scale are small enough
    /// that per-term repeated multiplication beats a powers cache.
    pub(crate) fn eval_unchecked(&self, z: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (e, c) in self.terms.iter() {
            let mut m = *c;
            for (i, &exp) in e.iter().enumerate() {
                for _ in 0..exp {
                    m *= z[i];
                }
            }
            acc += m;
        }
        acc
    }

    /// Apply a permutation of the variables: z_i ↦ z_{perm[i]}.
    pub(crate) fn permute_vars(&self, perm: &[usize]) -> MultiPoly {
        let mut out = Self::zero(self.n_vars);
        for (e, c) in self.terms.iter() {
            let mut pe = vec![0u32; self.n_vars];
            for (i, &exp) in e.iter().enumerate() {
                pe[perm[i]] = exp;
            }
            out.add_term(pe, *c);
        }
        out
    }

    /// True iff the polynomial is invariant under every adjacent
    /// transposition of variables (generators of the symmetric group),
    /// coefficientwise within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.symmetry_residual().map(|(_, _, r)| r <= tol).unwrap_or(true)
    }

    /// Worst adjacent-transposition residual, if any transposition moves the
    /// polynomial by more than exact zero. Returns (i, j, residual).
    fn symmetry_residual(&self) -> Option<(usize, usize, f64)> {
        let mut worst: Option<(usize, usize, f64)> = None;
        for i in 0..self.n_vars.saturating_sub(1) {
            let mut perm: Vec<usize> = (0..self.n_vars).collect();
            perm.swap(i, i + 1);
            let diff = self.sub(&self.permute_vars(&perm));
            let r = diff.coeff_scale();
            if worst.map(|(_, _, w)| r > w).unwrap_or(true) {
                worst = Some((i, i + 1, r));
            }
        }
        worst
    }

    /// The elementary symmetric polynomial s_k as a `MultiPoly` in n variables.
    pub fn elem_sym_poly(n_vars: usize, k: usize) -> MultiPoly {
        assert!(k <= n_vars);
        let mut out = Self::zero(n_vars);
        if k == 0 {
            return Self::constant(n_vars, C64::new(1.0, 0.0));
        }
        // iterate k-subsets of {0,…,n-1}
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let mut e = vec![0u32; n_vars];
            for &i in &idx {
                e[i] = 1;
            }
            out.add_term(e, C64::new(1.0, 0.0));
            // next combination
            let mut i = k;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if idx[i] != i + n_vars - k {
                    break;
                }
                if i == 0 {
                    return out;
                }
            }
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }

    /// Substitute s_1,…,s_n for the variables: returns self ∘ s expanded.
    pub fn compose_with_sym(&self) -> MultiPoly {
        let n = self.n_vars;
        let s: Vec<MultiPoly> = (1..=n).map(|k| Self::elem_sym_poly(n, k)).collect();
        let mut acc = Self::zero(n);
        for (e, c) in self.terms.iter() {
            let mut m = Self::constant(n, *c);
            for (i, &exp) in e.iter().enumerate() {
                for _ in 0..exp {
                    m = m.mul(&s[i]);
                }
            }
            acc = acc.add(&m);
        }
        acc
    }

    /// Reduce a symmetric polynomial p to the unique q with q ∘ s = p, by
    /// lexicographic leading-term elimination: the lex-leading exponent
    /// (a_1 ≥ … ≥ a_n) of a symmetric polynomial is killed by subtracting
    /// c·s_1^{a_1-a_2}·s_2^{a_2-a_3}⋯s_n^{a_n}.
    pub fn reduce_symmetric(&self) -> Result<MultiPoly> {
        let tol = defaults::COEFF_TOL * self.coeff_scale().max(1.0);
        if let Some((i, j, r)) = self.symmetry_residual() {
            if r > tol {
                return Err(Error::NotSymmetric { i, j, residual: r });
            }
        }
        let n = self.n_vars;
        let s: Vec<MultiPoly> = (1..=n).map(|k| Self::elem_sym_poly(n, k)).collect();
        let mut rem = self.pruned(tol);
        let mut q = Self::zero(n);
        let bound = monomial_count(self.degree(), n).saturating_add(self.num_terms());
        let mut steps = 0usize;
        while let Some((lead, c)) = rem.terms.iter().next_back().map(|(e, c)| (e.clone(), *c)) {
            steps += 1;
            if steps > bound {
                return Err(Error::ReductionStalled { bound });
            }
            // symmetric lex-leading exponents are non-increasing
            if lead.windows(2).any(|w| w[0] < w[1]) {
                return Err(Error::NotSymmetric { i: 0, j: 0, residual: f64::INFINITY });
            }
            let mut q_exp = vec![0u32; n];
            for i in 0..n {
                q_exp[i] = lead[i] - if i + 1 < n { lead[i + 1] } else { 0 };
            }
            q.add_term(q_exp.clone(), c);
            let mut m = Self::constant(n, c);
            for (i, &exp) in q_exp.iter().enumerate() {
                for _ in 0..exp {
                    m = m.mul(&s[i]);
                }
            }
            rem = rem.sub(&m).pruned(tol);
        }
        Ok(q)
    }

    /// Parse the one-term-per-line text format `re im : e1 e2 … en`.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<MultiPoly> {
        let mut n_vars: Option<usize> = None;
        let mut terms = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (coef_part, exp_part) = line.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                msg: "expected `re im : e1 e2 … en`".into(),
            })?;
            let coefs: Vec<f64> = coef_part
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: lineno + 1, msg: e.to_string() })?;
            if coefs.len() != 2 {
                return Err(Error::Parse { line: lineno + 1, msg: "expected two real coefficients".into() });
            }
            let exps: Vec<u32> = exp_part
                .split_whitespace()
                .map(|t| t.parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: lineno + 1, msg: e.to_string() })?;
            match n_vars {
                None => n_vars = Some(exps.len()),
                Some(n) if n != exps.len() => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: format!("expected {} exponents, found {}", n, exps.len()),
                    })
                }
                _ => {}
            }
            terms.push((exps, C64::new(coefs[0], coefs[1])));
        }
        let n = n_vars.ok_or(Error::Parse { line: 0, msg: "no terms".into() })?;
        Self::from_terms(n, terms)
    }

    /// Render in the text format accepted by [`MultiPoly::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (e, c) in self.terms.iter() {
            out.push_str(&format!("{:.17e} {:.17e} :", c.re, c.im));
            for exp in e {
                out.push_str(&format!(" {}", exp));
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if e.iter().all(|&x| x == 0) {
                write!(f, "({:.4}{:+.4}i)", c.re, c.im)?;
                continue;
            }
            if (c.re - 1.0).abs() > 1e-12 || c.im.abs() > 1e-12 {
                write!(f, "({:.4}{:+.4}i)*", c.re, c.im)?;
            }
            let mut firstv = true;
            for (i, &exp) in e.iter().enumerate() {
                if exp == 0 {
                    continue;
                }
                if !firstv {
                    write!(f, "*")?;
                }
                firstv = false;
                if exp == 1 {
                    write!(f, "x{}", i + 1)?;
                } else {
                    write!(f, "x{}^{}", i + 1, exp)?;
                }
            }
        }
        Ok(())
    }
}

/// Number of monomials of total degree ≤ d in n variables: C(d+n, n).
fn monomial_count(d: u32, n: usize) -> usize {
    let mut acc: u128 = 1;
    for i in 1..=n as u128 {
        acc = acc * (d as u128 + i) / i;
    }
    acc.min(usize::MAX as u128) as usize
}
