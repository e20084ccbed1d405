//! End-to-end timings for the expensive kernels: L-value evaluation by both
//! methods, the bottom layer unit order, class group computation, the tower
//! norm relation, and Tate cohomology of sampled modules.

use criterion::{criterion_group, criterion_main, Criterion};

use cyclounits::cohomology::{sample_module, tate_cohomology};
use cyclounits::{
    b0_order, bn_model_cohomology, eta, lp_at_one_interpolate, lp_at_one_log, norm_relation_holds,
    quadratic_character, ClassGroup, IwasawaPoly,
};

fn bench_lvalues(c: &mut Criterion) {
    let chi = quadratic_character(13).unwrap();
    c.bench_function("lp_log_d13_p3_k10", |b| {
        b.iter(|| lp_at_one_log(&chi, 3, 10).unwrap())
    });
    c.bench_function("lp_interp_d13_p3_k10", |b| {
        b.iter(|| lp_at_one_interpolate(&chi, 3, 10, 6).unwrap())
    });
}

fn bench_units(c: &mut Criterion) {
    c.bench_function("b0_order_d13_p3_k10", |b| {
        b.iter(|| b0_order(13, 3, 10).unwrap())
    });
    c.bench_function("norm_relation_d13_p3_level1", |b| {
        let upper = eta(1, 13, 3).unwrap();
        let lower = eta(0, 13, 3).unwrap();
        b.iter(|| assert!(norm_relation_holds(&upper, &lower).unwrap()))
    });
}

fn bench_classgroup(c: &mut Criterion) {
    c.bench_function("classgroup_d229", |b| {
        b.iter(|| ClassGroup::compute(229).unwrap())
    });
}

fn bench_cohomology(c: &mut Criterion) {
    c.bench_function("tate_sampled_p3", |b| {
        let m = sample_module(3, 8, 3, 4, false, 7).unwrap();
        b.iter(|| {
            for q in [-1i64, 0] {
                tate_cohomology(q, &m, 0).unwrap();
            }
        })
    });
    c.bench_function("tower_model_e2_n4", |b| {
        let f = IwasawaPoly::from_i64(3, 12, 1 << 12, &[-9, 1]).unwrap();
        b.iter(|| bn_model_cohomology(&f, 4, 0, 0).unwrap())
    });
}

criterion_group!(
    benches,
    bench_lvalues,
    bench_units,
    bench_classgroup,
    bench_cohomology
);
criterion_main!(benches);
