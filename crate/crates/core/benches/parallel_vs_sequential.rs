//! The same workloads on a one-thread pool and on the default pool. Built
//! without the `parallel` feature only the sequential variant exists.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use specgeo::moyal_plane::{hs_product_norm, HsQuadrature, MoyalMatrix};
use specgeo::nc_torus::{golden_theta, two_path_batch};
use specgeo::par;

fn chunked_sum() -> f64 {
    par::sum(2_000_000, |i| 1.0 / (1.0 + i as f64).powf(1.5))
}

fn two_path() -> usize {
    let theta = golden_theta(4).unwrap();
    two_path_batch(&theta, 64, 3, 2, 1).unwrap().len()
}

fn hs_norm() -> f64 {
    let f = MoyalMatrix::basis(1, 1.0, 2, &[1], &[0]).unwrap();
    hs_product_norm(&f, |r: f64| (-r * r).exp(), HsQuadrature::default()).unwrap().lhs
}

type Workload = (&'static str, fn() -> f64);

const WORKLOADS: [Workload; 3] = [
    ("chunked_sum", chunked_sum),
    ("two_path_batch", || two_path() as f64),
    ("hs_product_norm", hs_norm),
];

fn bench(c: &mut Criterion) {
    for (name, work) in WORKLOADS {
        let mut group = c.benchmark_group(name);
        group.sample_size(10);
        #[cfg(feature = "parallel")]
        {
            let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            group.bench_function("sequential", |b| b.iter(|| single.install(|| black_box(work()))));
            group.bench_function(format!("parallel_{}", par::threads()), |b| b.iter(|| black_box(work())));
        }
        #[cfg(not(feature = "parallel"))]
        group.bench_function("sequential", |b| b.iter(|| black_box(work())));
        group.finish();
    }
}

criterion_group!(benches, bench);
criterion_main!(benches);
