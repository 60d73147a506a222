use std::hint::black_box;

use arbor_core::dynamics::fixed_tree;
use arbor_core::experiment::{haar_gof, HaarGofConfig};
use arbor_core::prf::derive_seed;
use arbor_core::{classify, haar_at, RootedAut, Tree, Vertex};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

fn image_vertex(c: &mut Criterion) {
    let a = RootedAut::haar(3, 1).into_aut();
    let ball = Tree::new(3).unwrap().ball_vertices(8);
    c.bench_function("image_vertex ball(8)", |b| {
        b.iter(|| ball.iter().map(|x| a.image_vertex(black_box(x)).depth()).sum::<usize>())
    });
}

fn compose(c: &mut Criterion) {
    let x = Vertex::parse("o.1.2.1.2.1.2.1.2.1.2").unwrap();
    c.bench_function("compose and evaluate depth 10", |b| {
        b.iter_batched(
            || {
                let a = haar_at(3, &Vertex::parse("o.1").unwrap(), 3).unwrap();
                let g = RootedAut::haar(3, 4).into_aut();
                (a, g)
            },
            |(a, g)| a.compose(&g).compose(&a.inverse()).image_vertex(&x),
            BatchSize::SmallInput,
        )
    });
}

fn classify_and_fix(c: &mut Criterion) {
    let elements: Vec<_> = (0..64)
        .map(|i| haar_at(3, &Vertex::parse("o.2").unwrap(), derive_seed(5, i)).unwrap())
        .collect();
    c.bench_function("classify 64 elements", |b| {
        b.iter(|| elements.iter().map(|a| classify(a).delta).sum::<usize>())
    });
    let rooted: Vec<_> = (0..64).map(|i| RootedAut::haar(3, derive_seed(6, i)).into_aut()).collect();
    c.bench_function("fixed tree depth 16, 64 elements", |b| {
        b.iter(|| rooted.iter().map(|a| fixed_tree(a, 16).unwrap().len()).sum::<usize>())
    });
}

fn sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("haar_gof");
    group.sample_size(10);
    group.bench_function("4800 samples depth 2", |b| {
        b.iter(|| {
            haar_gof(&HaarGofConfig {
                d: 3,
                depth: 2,
                samples: 4800,
                seed: 7,
            })
            .unwrap()
            .report
            .gof
            .p_value
        })
    });
    group.finish();
}

criterion_group!(benches, image_vertex, compose, classify_and_fix, sampling);
criterion_main!(benches);
