use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nullfield_core::catalog::{
    harmonic_power, pp_wave_metric, robinson_trautman_box, robinson_trautman_chart, robinson_trautman_metric,
    PpWaveParams, RtParams,
};
use nullfield_core::expr::gen::ExprGen;
use nullfield_core::geometry::{ChartMetric, Geometry};
use nullfield_core::transport::{CurveSpec, Transporter};
use nullfield_core::verify::{parallel_null_space, ricci_flat_check};
use nullfield_core::{is_probably_zero, parse, Chart, Expr, SampleBox};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pp_wave() -> ChartMetric {
    let c = Chart::standard();
    let f = parse::<&str>("sin(x1)*x2*x3 + x2^2*x3", &c, &[]).unwrap();
    let params = PpWaveParams::new(f, Expr::ratio(1, 2), harmonic_power(3, Expr::coord(1).cos(), false));
    pp_wave_metric(&params, SampleBox::cube(-1.0, 1.0), 1e-9).unwrap().metric
}

fn robinson_trautman() -> ChartMetric {
    let c = robinson_trautman_chart();
    let params = RtParams {
        p: parse::<&str>("1 + (xi^2 + eta^2)/4", &c, &[]).unwrap(),
        m: Expr::ratio(1, 2),
    };
    robinson_trautman_metric(&params, robinson_trautman_box()).unwrap().metric
}

fn curvature(c: &mut Criterion) {
    let mut group = c.benchmark_group("curvature");
    for (name, metric) in [("pp_wave", pp_wave()), ("robinson_trautman", robinson_trautman())] {
        group.bench_function(name, |b| {
            b.iter(|| {
                let geo = Geometry::new(metric.clone());
                black_box(geo.scalar().clone())
            })
        });
    }
    group.finish();
}

fn zero_test(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let e = ExprGen::new(&mut rng).expr(5);
    let identity = (&e * &e).diff(2) - Expr::int(2) * &e * e.diff(2);
    let b = SampleBox::cube(-1.0, 1.0);
    c.bench_function("zero_test/product_rule", |bench| {
        bench.iter(|| black_box(is_probably_zero(&identity, &b, 1e-9)))
    });
    let geo = Geometry::new(pp_wave());
    geo.ricci();
    c.bench_function("zero_test/ricci_flat", |bench| {
        bench.iter(|| black_box(ricci_flat_check(&geo, &b, 1e-9)))
    });
    c.bench_function("null_space/pp_wave", |bench| {
        bench.iter(|| black_box(parallel_null_space(&geo, &b, 1e-9).unwrap()))
    });
}

fn transport(c: &mut Criterion) {
    let geo = Geometry::new(pp_wave());
    let t = Transporter::new(&geo).unwrap();
    let loop_ = CurveSpec::rectangle([0.0, -0.4, -0.4, 0.1], 1, 2, 0.8, 0.8);
    c.bench_function("transport/square_1024", |b| {
        b.iter(|| black_box(t.transport(&loop_, [0.0, 0.0, 1.0, 0.0], 1024).unwrap()))
    });
}

criterion_group!(benches, curvature, zero_test, transport);
criterion_main!(benches);
