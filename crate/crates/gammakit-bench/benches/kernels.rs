//! Benchmarks for the hot kernels: membership batches, torus suprema,
//! joint diagonalization, and symmetric reduction.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use gammakit::{joint_spectrum, sample, sup_on_gamma, symmetrize_tuple, BoundaryRoute, MultiPoly, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn bench_membership(c: &mut Criterion) {
    let points = sample(4, 256, true, 11);
    c.bench_function("on_boundary_all_routes_n4_x256", |b| {
        b.iter(|| {
            let mut holds = 0usize;
            for p in &points {
                if p.on_boundary(1e-8, BoundaryRoute::All).holds {
                    holds += 1;
                }
            }
            black_box(holds)
        })
    });
}

fn bench_sup(c: &mut Criterion) {
    let kv = MultiPoly::from_terms(
        3,
        vec![
            (vec![2, 0, 0], C64::new(1.0, 0.0)),
            (vec![0, 1, 0], C64::new(-4.0, 0.0)),
        ],
    )
    .unwrap();
    c.bench_function("sup_on_gamma_kv_grid48", |b| {
        b.iter(|| black_box(sup_on_gamma(&kv, 3, 48, 24).unwrap().value))
    });
}

fn bench_joint_spectrum(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = gammakit::classify::random_commuting_unitaries(3, 10, &mut rng);
    let s = symmetrize_tuple(&u);
    c.bench_function("joint_spectrum_n3_dim10", |b| {
        b.iter(|| black_box(joint_spectrum(&s, 1e-8).unwrap().len()))
    });
}

fn bench_reduce(c: &mut Criterion) {
    // power sum p_4 in 4 variables, a symmetric degree-4 input
    let mut terms = Vec::new();
    for i in 0..4 {
        let mut e = vec![0u32; 4];
        e[i] = 4;
        terms.push((e, C64::new(1.0, 0.0)));
    }
    let p = MultiPoly::from_terms(4, terms).unwrap();
    c.bench_function("reduce_symmetric_power_sum_4", |b| {
        b.iter_batched(|| p.clone(), |p| black_box(p.reduce_symmetric().unwrap()), BatchSize::SmallInput)
    });
}

criterion_group!(benches, bench_membership, bench_sup, bench_joint_spectrum, bench_reduce);
criterion_main!(benches);
