use std::hint::black_box;

use brickjam_core::analytics::report;
use brickjam_core::backpack::merge_projects;
use brickjam_core::fixtures::{alice_records, bird_demo};
use brickjam_core::formula::{evaluate, parse_formula, Environment, EvalContext, SensorKind};
use brickjam_core::project::{load_project_bytes, pack_project};
use brickjam_core::rng::Rng;
use brickjam_core::runtime::{run, RunConfig, SensorTrace};
use criterion::{criterion_group, criterion_main, Criterion};

const FORMULA: &str = "sin(compass_direction) * 10 + (x - 3) * 2 / (1 + abs(y)) > 4 AND NOT (x = y OR y >= 12)";

struct Env;

impl Environment for Env {
    fn sensor(&self, kind: SensorKind) -> f64 {
        match kind {
            SensorKind::CompassDirection => 90.0,
            _ => 0.5,
        }
    }

    fn variable(&self, name: &str) -> Option<f64> {
        match name {
            "x" => Some(7.0),
            "y" => Some(-2.5),
            _ => None,
        }
    }
}

fn formula(c: &mut Criterion) {
    c.bench_function("formula parse", |b| b.iter(|| parse_formula(black_box(FORMULA)).unwrap()));
    let f = parse_formula(FORMULA).unwrap();
    let mut rng = Rng::seed_from_u64(1);
    c.bench_function("formula eval", |b| {
        b.iter(|| evaluate(black_box(&f), &mut EvalContext::new(&Env, &mut rng)).unwrap())
    });
}

fn runtime(c: &mut Criterion) {
    let bird = bird_demo();
    c.bench_function("bird demo 600 ticks", |b| {
        b.iter(|| {
            let cfg = RunConfig::ticks(600).with_sensors(SensorTrace::constant(SensorKind::CompassDirection, 45.0));
            run(black_box(&bird), cfg).unwrap()
        })
    });
}

fn bundles(c: &mut Criterion) {
    let bird = bird_demo();
    let bytes = pack_project(&bird).unwrap();
    c.bench_function("pack bundle", |b| b.iter(|| pack_project(black_box(&bird)).unwrap()));
    c.bench_function("load bundle", |b| b.iter(|| load_project_bytes(black_box(&bytes)).unwrap()));
    c.bench_function("merge projects", |b| b.iter(|| merge_projects(black_box(&bird), black_box(&bird))));
}

fn analytics(c: &mut Criterion) {
    let records = alice_records();
    c.bench_function("alice report", |b| b.iter(|| report(black_box(&records))));
}

criterion_group!(benches, formula, runtime, bundles, analytics);
criterion_main!(benches);
