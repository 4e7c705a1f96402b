use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qvlab::quadrature::Region;
use qvlab::suite;
use qvlab::variational::dirichlet_energy;
use qvlab::{par, FieldSpec, QuadratureSpec};

fn backends(c: &mut Criterion) {
    let quad = QuadratureSpec::reference().doubled();
    let wound = "wound:3,3,4,2"
        .parse::<FieldSpec>()
        .unwrap()
        .build()
        .unwrap();
    let region = Region::ball(&[0.0, 0.0], 1.0);
    let mut g = c.benchmark_group("dirichlet_energy");
    for (name, on) in [("serial", false), ("parallel", true)] {
        g.bench_function(name, |b| {
            b.iter(|| {
                par::with_parallel(on, || {
                    dirichlet_energy(black_box(&wound), &region, &quad).unwrap()
                })
            })
        });
    }
    g.finish();

    let fields: Vec<_> = suite::library()
        .unwrap()
        .into_iter()
        .map(|e| e.field)
        .filter(|f| f.n() == 2)
        .collect();
    let cutoffs = suite::sweep_cutoffs();
    let quad = QuadratureSpec::reference();
    let mut g = c.benchmark_group("carleman_sweep");
    g.sample_size(10);
    for (name, on) in [("serial", false), ("parallel", true)] {
        g.bench_function(name, |b| {
            b.iter(|| {
                par::with_parallel(on, || {
                    suite::carleman_sweep(black_box(&fields), &[1.0, 10.0], &cutoffs, &quad)
                        .unwrap()
                })
            })
        });
    }
    g.finish();
}

criterion_group!(benches, backends);
criterion_main!(benches);
