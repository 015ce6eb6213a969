use std::hint::black_box;

use casimir_lateral::scattering::reduced_integrand;
use casimir_lateral::special_functions::bessel_k_all;
use casimir_lateral::{kernels_vdw, Permittivity};
use criterion::{criterion_group, criterion_main, Criterion};

fn bessel(c: &mut Criterion) {
    c.bench_function("bessel_k_all series", |b| b.iter(|| bessel_k_all(black_box(0.7))));
    c.bench_function("bessel_k_all continued fraction", |b| {
        b.iter(|| bessel_k_all(black_box(7.5)))
    });
    c.bench_function("kernels_vdw", |b| b.iter(|| kernels_vdw(black_box(2.1))));
}

fn integrand(c: &mut Criterion) {
    let k = [0.4, 0.3];
    let kp = [-0.8, 0.3];
    let nk = f64::hypot(k[0], k[1]);
    let nkp = f64::hypot(kp[0], kp[1]);
    let eps = Permittivity::Finite(9.0);
    c.bench_function("reduced_integrand", |b| {
        b.iter(|| reduced_integrand(black_box(k), nk, black_box(kp), nkp, black_box(0.7), eps))
    });
}

criterion_group!(benches, bessel, integrand);
criterion_main!(benches);
