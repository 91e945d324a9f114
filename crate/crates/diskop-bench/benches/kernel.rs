//! Criterion benchmarks for the hot paths: ball predicates, map algebra,
//! membership validation, divisibility, tree evaluation with core
//! normalization, and closed-form entry times.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use diskop_bench::star_config;
use diskop_core::coreform::random_core_form;
use diskop_core::gen::{trial_rng, GenContext};
use diskop_core::{
    ball_relations, criticality, core_normal_form, divides, entry_time, is_valid, tree_evaluate,
    BlockStructure, DilationMap, FlowKind, MembershipLevel, NumericMode, Params, ProductBall,
    Scalar,
};

fn bench_ball_relations(c: &mut Criterion) {
    let mut group = c.benchmark_group("ball_relations");
    for mode in [NumericMode::Exact, NumericMode::Float] {
        let x = star_config(mode, 3, 1);
        let images = x.images();
        let label = match mode {
            NumericMode::Exact => "exact",
            NumericMode::Float => "float",
        };
        group.bench_with_input(BenchmarkId::from_parameter(label), &images, |b, images| {
            b.iter(|| {
                let mut hits = 0;
                for a in images {
                    for bb in images {
                        if ball_relations(a, bb, 1e-9).intersects {
                            hits += 1;
                        }
                    }
                }
                hits
            })
        });
    }
    group.finish();
}

fn bench_map_compose(c: &mut Criterion) {
    let mut group = c.benchmark_group("map_compose");
    for mode in [NumericMode::Exact, NumericMode::Float] {
        let x = star_config(mode, 2, 2);
        let f = x.map(0).clone();
        let g = x.map(1).clone();
        let label = match mode {
            NumericMode::Exact => "exact",
            NumericMode::Float => "float",
        };
        group.bench_with_input(BenchmarkId::from_parameter(label), &(f, g), |b, (f, g)| {
            b.iter(|| f.compose(g).invert())
        });
    }
    group.finish();
}

fn bench_validate(c: &mut Criterion) {
    let params = Params::default();
    let x = star_config(NumericMode::Exact, 4, 3);
    c.bench_function("validate_star_arity4_exact", |b| {
        b.iter(|| is_valid(&x, MembershipLevel::Star, &params))
    });
}

fn bench_divides(c: &mut Criterion) {
    let params = Params::default();
    let x = star_config(NumericMode::Exact, 3, 4);
    let quotients: Vec<_> = (0..3)
        .map(|k| star_config(NumericMode::Exact, 1, 10 + k))
        .collect();
    let y = diskop_core::compose_standard(&x, &quotients).expect("composes");
    c.bench_function("divides_arity3_exact", |b| {
        b.iter(|| divides(&x, &y, None, &params).unwrap().is_some())
    });
}

fn bench_core_round_trip(c: &mut Criterion) {
    let params = Params::default();
    let ctx_v = GenContext::plane(NumericMode::Exact);
    let ctx_w = GenContext::line(NumericMode::Exact);
    let mut rng = trial_rng(5, "bench-core", 0);
    let form = random_core_form(&mut rng, &ctx_v, &ctx_w, &params).expect("fixture");
    let tree = form.to_tree();
    c.bench_function("core_round_trip", |b| {
        b.iter(|| {
            let w = tree_evaluate(&tree, &params).unwrap();
            let witness = criticality(&w, 1, &params).unwrap();
            core_normal_form(&w, &witness, &params).unwrap()
        })
    });
}

fn bench_entry_time(c: &mut Criterion) {
    let params = Params::default();
    let structure = BlockStructure::spherical(2);
    let outer = ProductBall::origin(structure.clone(), Scalar::one(NumericMode::Exact));
    let inner = ProductBall::origin(structure.clone(), Scalar::ratio(1, 2, NumericMode::Exact));
    let group = diskop_core::GroupRep::trivial(structure.clone(), NumericMode::Exact);
    let m = DilationMap::scale_translate(
        structure,
        vec![Scalar::ratio(1, 2, NumericMode::Exact)],
        vec![
            Scalar::ratio(2, 5, NumericMode::Exact),
            Scalar::ratio(0, 1, NumericMode::Exact),
        ],
    )
    .unwrap();
    let x = diskop_core::Config::new(vec![m], outer.clone(), group).unwrap();
    c.bench_function("entry_time_shrink_left_exact", |b| {
        b.iter(|| entry_time(&x, FlowKind::ShrinkLeft, &inner, &outer, &params).unwrap())
    });
}

criterion_group!(
    benches,
    bench_ball_relations,
    bench_map_compose,
    bench_validate,
    bench_divides,
    bench_core_round_trip,
    bench_entry_time
);
criterion_main!(benches);
