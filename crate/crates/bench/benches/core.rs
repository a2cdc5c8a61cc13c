use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use frag_core::carpet::cumulant_limit;
use frag_core::explore::{sample_disk_policy, Bounds, PolicyEngine};
use frag_core::tree::grow_tree;
use frag_core::{derive_relations, PolicyOptions, StreamKey, Variant};
use frag_explore_bench::{floor_tree, rates};

fn engine(c: &mut Criterion) {
    let r = rates(3.0);
    let engine = PolicyEngine::new(&r, PolicyOptions::default()).unwrap();
    let bounds = Bounds::interval(0.25, 4.0);
    let mut i = 0u64;
    c.bench_function("engine run to exit of (1/4, 4)", |b| {
        b.iter(|| {
            i += 1;
            let mut rng = StreamKey::replicate(i).rng(1);
            black_box(engine.run(1.0, 0.0, &bounds, &mut rng, &mut ()).unwrap())
        })
    });
    c.bench_function("sample_disk_policy, horizon 1, cutoff 0.01", |b| {
        b.iter(|| {
            i += 1;
            let mut rng = StreamKey::replicate(i).rng(1);
            black_box(sample_disk_policy(&r, 1.0, 1.0, 0.0, 0.01, &mut rng).unwrap())
        })
    });
}

fn trees(c: &mut Criterion) {
    let r = rates(3.0);
    for (name, variant) in [("T", Variant::T), ("Ttilde", Variant::TTilde)] {
        let cfg = floor_tree(variant, 1.0 / 64.0);
        let mut i = 0u64;
        c.bench_function(&format!("grow_tree {name}, floor 1/64"), |b| {
            b.iter(|| {
                i += 1;
                black_box(grow_tree(&r, &cfg, 1, StreamKey::replicate(i)).unwrap())
            })
        });
    }
}

fn cumulant(c: &mut Criterion) {
    let rel = derive_relations(3.0).unwrap();
    c.bench_function("cumulant_limit at q = 1.9", |b| {
        b.iter(|| black_box(cumulant_limit(black_box(1.9), &rel).unwrap()))
    });
}

criterion_group!(benches, engine, trees, cumulant);
criterion_main!(benches);
