//! Property tests for the module invariants that the acceptance suite does
//! not already exercise at scale.

use gammakit::{
    classify, compress, contraction_verdict, hardy, invariant_defect, joint_spectrum, sample,
    symmetrize_tuple, truncate, vn_margin, BoundaryRoute, Budget, CMatrix, CPoint, GammaPoint,
    InnerSymbol, MatrixTuple, MultiPoly, C64,
};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Round trip through the text format preserves coefficients.
    #[test]
    fn multipoly_text_round_trip(seed in 0u64..1_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=4usize);
        let mut p = MultiPoly::zero(n);
        for _ in 0..rng.gen_range(1..8usize) {
            let e: Vec<u32> = (0..n).map(|_| rng.gen_range(0..4u32)).collect();
            p.add_term(e, C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)));
        }
        let back = MultiPoly::parse(&p.to_text()).unwrap();
        prop_assert!(back.sub(&p).coeff_scale() == 0.0);
    }

    /// Reduction inverts composition with the symmetrization exactly in
    /// coefficients, not just in evaluation.
    #[test]
    fn reduce_inverts_compose(seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=4usize);
        let mut q0 = MultiPoly::zero(n);
        for _ in 0..rng.gen_range(1..4usize) {
            let mut e = vec![0u32; n];
            let mut weight = 0usize;
            for (i, slot) in e.iter_mut().enumerate() {
                let cap = (5 - weight) / (i + 1);
                if cap == 0 { continue; }
                *slot = rng.gen_range(0..=cap) as u32;
                weight += (i + 1) * *slot as usize;
            }
            q0.add_term(e, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        prop_assume!(!q0.is_zero());
        let p = q0.compose_with_sym();
        let q = p.reduce_symmetric().unwrap();
        prop_assert!(q.sub(&q0).coeff_scale() < 1e-9 * (1.0 + q0.coeff_scale()));
    }

    /// Elementary symmetric functions agree with brute-force subset sums.
    #[test]
    fn elem_sym_matches_subset_sums(seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=5usize);
        let z: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        for k in 1..=n {
            // brute force over all k-subsets
            let mut total = C64::new(0.0, 0.0);
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize != k {
                    continue;
                }
                let mut prod = C64::new(1.0, 0.0);
                for (i, &zi) in z.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        prod *= zi;
                    }
                }
                total += prod;
            }
            let got = gammakit::elem_sym(k, &CPoint::new(z.clone())).unwrap();
            prop_assert!((got - total).norm() < 1e-12);
        }
    }
}

#[test]
fn boundary_embed_heredity() {
    // sampled s ∈ bΓ_n with |α| = 1 embeds into bΓ_{n+1}
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 2..=4usize {
        for p in sample(n, 50, true, 600 + n as u64) {
            let alpha = C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            let e = p.embed(alpha);
            let v = e.on_boundary(1e-8, BoundaryRoute::All);
            assert!(v.holds, "n={} defect={}", n, v.defect);
        }
        // interior α stays in Γ_{n+1} but off the boundary when |α| < 1
        for p in sample(n, 20, true, 700 + n as u64) {
            let alpha = C64::from_polar(0.5, rng.gen_range(0.0..std::f64::consts::TAU));
            let e = p.embed(alpha);
            assert!(e.in_gamma(1e-9).holds);
            assert!(!e.on_boundary(1e-8, BoundaryRoute::All).holds);
        }
    }
}

#[test]
fn cohn_consistency_iff() {
    // for |s_n| = 1: on the boundary ⟺ self-inversive with derivative roots
    // in the closed disc
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut on_count = 0usize;
    let mut off_count = 0usize;
    for k in 0..400usize {
        let n = 2 + k % 4;
        let on_boundary_case = k % 2 == 0;
        let fiber: Vec<C64> = if on_boundary_case {
            (0..n).map(|_| C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))).collect()
        } else {
            let t = 1.2 + rng.gen_range(0.0..0.4);
            let mut f: Vec<C64> = (0..n)
                .map(|_| C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect();
            let mu = f[0];
            f[0] = mu * t;
            f[1] = mu / t;
            f
        };
        let s = GammaPoint::symmetrize(&CPoint::new(fiber)).unwrap();
        let on = s.on_boundary(1e-8, BoundaryRoute::All).holds;
        let cp = s.char_poly();
        let cohn = cp.is_self_inversive(1e-8).holds
            && cp.derivative().roots().unwrap().iter().all(|z| z.norm() <= 1.0 + 1e-8);
        assert_eq!(on, cohn, "k={} mismatch", k);
        if on {
            on_count += 1;
        } else {
            off_count += 1;
        }
    }
    assert!(on_count > 0 && off_count > 0, "both branches must be exercised");
}

#[test]
fn restriction_heredity_under_compression() {
    // a tuple passing the battery keeps passing after compression to an
    // invariant (spectral) subspace, at the same budget
    let budget = Budget { max_degree: 3, random_polys: 12, grid: 24 };
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for k in 0..10usize {
        let n = 2 + k % 3;
        let dim = 4 + k % 3;
        let u = classify::random_commuting_unitaries(n, dim, &mut rng);
        let s = symmetrize_tuple(&u);
        assert!(contraction_verdict(&s, &budget, 99, 1e-7).holds);
        // spectral subspaces of commuting normal tuples are invariant:
        // pick a block of joint eigenvectors
        let (_, q) = gammakit::joint_diagonalize(&s, 1e-8).unwrap();
        let keep = 2 + k % 2;
        let basis: Array2<C64> = q.slice(ndarray::s![.., 0..keep]).to_owned();
        assert!(invariant_defect(&s, &basis).unwrap() < 1e-9);
        let comp = compress(&s, &basis, 1e-8).unwrap();
        let v = contraction_verdict(&comp, &budget, 99, 1e-7);
        assert!(v.holds, "compressed tuple failed at the same budget (k={}): {}", k, v.defect);
    }
}

#[test]
fn projection_and_embedding_heredity_for_operators() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for k in 0..10usize {
        let n = 2 + k % 3;
        let dim = 2 + k % 4;
        let s = symmetrize_tuple(&classify::random_commuting_unitaries(n, dim, &mut rng));

        // projection heredity: margins of the image battery {q ∘ π}
        if n >= 2 {
            let m = n - 1;
            let projected = MatrixTuple::new(
                (1..n)
                    .map(|i| s.mat(i - 1).scale(r((n - i) as f64 / n as f64)))
                    .collect(),
            )
            .unwrap();
            for i in 0..m {
                let q = MultiPoly::var(m, i);
                let margin = vn_margin(&projected, &q, 32).unwrap();
                assert!(margin <= 1e-7, "projection heredity margin {} (k={})", margin, k);
            }
        }

        // embedding heredity: (αI+S_1, αS_1+S_2, …, αS_n) against Γ_{n+1}
        let alpha = C64::from_polar(rng.gen_range(0.0f64..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
        let dim_id = CMatrix::identity(s.dim());
        let mut mats = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let prev = if i == 0 { dim_id.clone() } else { s.mat(i - 1).clone() };
            let cur = if i == n { CMatrix::zeros(s.dim()) } else { s.mat(i).clone() };
            mats.push(prev.scale(alpha).add(&cur));
        }
        let embedded = MatrixTuple::new(mats).unwrap();
        for i in [0usize, n] {
            let q = MultiPoly::var(n + 1, i);
            let margin = vn_margin(&embedded, &q, 24).unwrap();
            assert!(margin <= 1e-7, "embedding heredity margin {} (k={})", margin, k);
        }
    }
}

#[test]
fn joint_spectrum_functional_calculus() {
    // p(T) has joint eigenvalues p(joint eigenvalue)
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for k in 0..8usize {
        let n = 2 + k % 2;
        let dim = 3 + k % 4;
        let u = classify::random_commuting_unitaries(n, dim, &mut rng);
        let q = MultiPoly::from_terms(
            n,
            vec![
                ({ let mut e = vec![0u32; n]; e[0] = 2; e }, C64::new(0.5, 0.25)),
                ({ let mut e = vec![0u32; n]; e[n - 1] = 1; e }, r(-1.0)),
            ],
        )
        .unwrap();
        let qt = u.eval_poly(&q).unwrap();
        let spec_u = joint_spectrum(&u, 1e-8).unwrap();
        // q(U) is normal here (polynomial in commuting normals); compare its
        // spectrum against q applied to the joint spectrum, as multisets
        let qt_tuple = MatrixTuple::new(vec![qt]).unwrap();
        let mut spec_qt: Vec<C64> = joint_spectrum(&qt_tuple, 1e-7)
            .unwrap()
            .into_iter()
            .map(|p| p.coords()[0])
            .collect();
        let mut expected: Vec<C64> = spec_u
            .iter()
            .map(|p| q.eval(&CPoint::new(p.coords().to_vec())).unwrap())
            .collect();
        let sort_key = |z: &C64| (z.re, z.im);
        spec_qt.sort_by(|a, b| sort_key(a).partial_cmp(&sort_key(b)).unwrap());
        expected.sort_by(|a, b| sort_key(a).partial_cmp(&sort_key(b)).unwrap());
        for (a, b) in spec_qt.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-7, "k={}", k);
        }
    }
}

#[test]
fn truncation_norms_approach_symbol_sup() {
    // finite sections are bounded by the symbol supremum and increase to it.
    // For the scalar symbol 1+z the finite section at degree N is the
    // (N+1)-square lower-bidiagonal ones matrix, whose norm is exactly
    // 2·cos(π/(2N+3)): the supremum 2 is attained only in the limit, at the
    // explicit rate this formula gives.
    let a = gammakit::SymbolTuple::new(1, vec![CMatrix::diagonal(&[r(1.0)])]).unwrap();
    let model = gammakit::build_pure_isometry(&a, 1e-9, &Budget { max_degree: 2, random_polys: 4, grid: 16 }).unwrap();
    let phi = model.symbol(1);
    let sup = phi.sup_norm(256, 60).value;
    assert!((sup - 2.0).abs() < 1e-10);
    let section_norm = |n: usize| 2.0 * (std::f64::consts::PI / (2.0 * n as f64 + 3.0)).cos();
    let mut last = 0.0f64;
    for n_trunc in [4usize, 16, 48] {
        let t = truncate(&model, n_trunc).unwrap();
        let norm = t.mat(0).norm();
        assert!(norm <= sup + 1e-9, "finite section exceeded the symbol norm");
        assert!(norm >= last - 1e-12, "finite section norms must be non-decreasing");
        assert!((norm - section_norm(n_trunc)).abs() < 1e-12, "formula mismatch at N={}", n_trunc);
        last = norm;
    }
    // with the formula validated, the N reaching the 1e-6 band is explicit
    assert!(2.0 - section_norm(1568) < 1.1e-6);
    assert!(2.0 - section_norm(1000) > 1e-6, "band should not be reached much earlier");

    // a polynomial through the calculus on a richer model: same behavior at
    // moderate N, with the gap shrinking at the expected quadratic rate
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let adm = hardy::admissible_diagonal(3, 1, &mut rng);
    let model = gammakit::build_pure_isometry(&adm, 1e-8, &Budget { max_degree: 2, random_polys: 4, grid: 16 }).unwrap();
    let q = MultiPoly::from_terms(
        3,
        vec![
            (vec![1, 0, 1], C64::new(0.3, 0.4)),
            (vec![0, 1, 0], r(1.0)),
            (vec![0, 0, 2], C64::new(-0.2, 0.1)),
        ],
    )
    .unwrap();
    let symbol = gammakit::hardy::apply_poly(&model, &q).unwrap();
    let sup = symbol.sup_norm(512, 60).value;
    let gap = |n_trunc: usize| {
        let t = truncate(&model, n_trunc).unwrap();
        let qt = t.eval_poly(&q).unwrap();
        let norm = qt.norm();
        assert!(norm <= sup + 1e-9, "finite section exceeded the symbol supremum");
        sup - norm
    };
    let (g1, g2) = (gap(50), gap(200));
    assert!(g2 < g1, "gap must shrink with N: {} vs {}", g1, g2);
    assert!(g2 < 1e-3, "gap at N=200 too large: {}", g2);
}

#[test]
fn inner_composition() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let w = gammakit::test_support::haar_unitary(2, &mut rng);
    let t1 = InnerSymbol::shift(2);
    let t2 = InnerSymbol::constant(w).unwrap();
    let composed = t1.compose(&t2).unwrap();
    assert!(gammakit::innerness_defect(&composed, 128) < 1e-12);

    let b = InnerSymbol::blaschke(C64::new(0.3, -0.1), 2).unwrap();
    let composed = b.compose(&t1).unwrap();
    assert!(gammakit::innerness_defect(&composed, 128) < 1e-11);

    // the invariant-subspace verdict composes: if it holds stepwise it holds
    // for the product
    let a = hardy::admissible_conjugated(2, 2, &mut rng);
    let budget = Budget { max_degree: 2, random_polys: 6, grid: 16 };
    let model = gammakit::build_pure_isometry(&a, 1e-8, &budget).unwrap();
    let w2 = gammakit::test_support::haar_unitary(2, &mut rng);
    let step1 = InnerSymbol::shift(2);
    let step2 = InnerSymbol::constant(w2).unwrap();
    let v1 = gammakit::invariant_subspace_verdict(&model, &step1, 1e-8, &budget).unwrap();
    let v2 = gammakit::invariant_subspace_verdict(&model, &step2, 1e-8, &budget).unwrap();
    let v12 = gammakit::invariant_subspace_verdict(&model, &step1.compose(&step2).unwrap(), 1e-8, &budget).unwrap();
    assert!(v1.holds && v2.holds && v12.holds);
}
