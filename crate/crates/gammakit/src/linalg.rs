//! Thin wrappers over the LAPACK-backed kernels used across the crate.

use crate::error::{Error, Result};
use crate::C64;
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Eigh, Inverse, SVD, UPLO};
use rand::Rng;
use rand_distr::StandardNormal;

/// Spectral norm (largest singular value); 0 for empty matrices.
pub fn spectral_norm(a: &Array2<C64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    let (_, s, _) = a.svd(false, false).expect("SVD failed");
    s.iter().cloned().fold(0.0, f64::max)
}

/// Full SVD, always with U and V^H.
pub fn svd_full(a: &Array2<C64>) -> (Array2<C64>, Array1<f64>, Array2<C64>) {
    let (u, s, vt) = a.svd(true, true).expect("SVD failed");
    (u.unwrap(), s, vt.unwrap())
}

/// Eigenvalues and right eigenvectors of a general complex matrix.
pub fn eig_pairs(a: &Array2<C64>) -> (Vec<C64>, Array2<C64>) {
    let (vals, vecs) = a.eig().expect("eigendecomposition failed");
    (vals.to_vec(), vecs)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// Hermitian matrix. The wrapped `eigh` hands back conjugated eigenvectors
/// for complex input, so the result is conjugated here; the convention
/// `a = v · diag(w) · v^H` is pinned by a test.
pub fn eigh_pairs(a: &Array2<C64>) -> (Vec<f64>, Array2<C64>) {
    let (vals, vecs) = a.eigh(UPLO::Lower).expect("Hermitian eigendecomposition failed");
    (vals.to_vec(), vecs.mapv(|z| z.conj()))
}

pub fn inverse(a: &Array2<C64>) -> Result<Array2<C64>> {
    a.inv().map_err(|_| Error::Invalid("matrix is singular".into()))
}

/// Smallest singular value; +inf for empty matrices.
pub fn smallest_singular_value(a: &Array2<C64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return f64::INFINITY;
    }
    let (_, s, _) = a.svd(false, false).expect("SVD failed");
    s.iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Unitary polar factor: for X = UΣV^H returns UV^H.
pub fn polar_unitary(x: &Array2<C64>) -> Array2<C64> {
    let (u, _, vt) = svd_full(x);
    u.dot(&vt)
}

/// Haar-distributed random unitary: QR of a complex Ginibre matrix with the
/// phase convention that makes R's diagonal positive.
pub fn haar_unitary<R: Rng>(d: usize, rng: &mut R) -> Array2<C64> {
    let g = Array2::from_shape_fn((d, d), |_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let (q, r) = qr(&g);
    let mut out = q;
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            out[(i, j)] *= phase.conj();
        }
    }
    out
}

/// Modified Gram-Schmidt QR; adequate at desk scale and dependency-free.
pub fn qr(a: &Array2<C64>) -> (Array2<C64>, Array2<C64>) {
    let (m, n) = a.dim();
    let mut q = a.clone();
    let mut r = Array2::zeros((n, n));
    for j in 0..n {
        for i in 0..j {
            let mut dot = C64::new(0.0, 0.0);
            for k in 0..m {
                dot += q[(k, i)].conj() * q[(k, j)];
            }
            r[(i, j)] = dot;
            for k in 0..m {
                let v = q[(k, i)];
                q[(k, j)] -= dot * v;
            }
        }
        let norm = (0..m).map(|k| q[(k, j)].norm_sqr()).sum::<f64>().sqrt();
        r[(j, j)] = C64::new(norm, 0.0);
        if norm > 0.0 {
            for k in 0..m {
                q[(k, j)] /= C64::new(norm, 0.0);
            }
        }
    }
    (q, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;

    #[test]
    fn eig_and_eigh_conventions() {
        let c = |re: f64, im: f64| C64::new(re, im);
        let h = array![[c(2., 0.), c(0., 1.)], [c(0., -1.), c(1., 0.)]];
        let (w, v) = eigh_pairs(&h);
        // columns are eigenvectors: h = v diag(w) v^H
        let mut recon: Array2<C64> = Array2::zeros((2, 2));
        for j in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    recon[(a, b)] += v[(a, j)] * C64::new(w[j], 0.0) * v[(b, j)].conj();
                }
            }
        }
        assert!(spectral_norm(&(recon - &h)) < 1e-12);

        let a = array![[c(1., 2.), c(0., 1.)], [c(0.5, 0.), c(0., -2.)]];
        let (vals, vecs) = eig_pairs(&a);
        for j in 0..2 {
            let col = vecs.column(j);
            let mut res = 0.0;
            for i in 0..2 {
                let av: C64 = (0..2).map(|k| a[(i, k)] * col[k]).sum();
                res += (av - col[i] * vals[j]).norm();
            }
            assert!(res < 1e-12, "eig column convention violated: {}", res);
        }
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for d in [1usize, 3, 6] {
            let u = haar_unitary(d, &mut rng);
            let eye: Array2<C64> = Array2::eye(d);
            let defect = spectral_norm(&(adjoint(&u).dot(&u) - eye));
            assert!(defect < 1e-12, "d={} defect={}", d, defect);
        }
    }

    #[test]
    fn polar_factor_of_unitary_times_positive() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let u = haar_unitary(4, &mut rng);
        // X = U * diag(positive) has polar unitary factor U
        let mut x = u.clone();
        for j in 0..4 {
            for i in 0..4 {
                x[(i, j)] *= C64::new(1.0 + j as f64, 0.0);
            }
        }
        let w = polar_unitary(&x);
        assert!(spectral_norm(&(w - &u)) < 1e-10);
    }
}
