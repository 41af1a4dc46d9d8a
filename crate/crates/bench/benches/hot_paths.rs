use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curvefill::corpus::synth_corpus;
use curvefill::*;

fn walk(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point2> {
    let mut p = Point2::ORIGIN;
    let mut h = 0.0f64;
    (0..n)
        .map(|_| {
            h += rng.random_range(-0.3..0.3);
            p = p + Point2::from_angle(h);
            p
        })
        .collect()
}

fn frechet(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (a, b) = (walk(&mut rng, 16), walk(&mut rng, 16));
    c.bench_function("discrete_frechet 16x16", |bch| bch.iter(|| discrete_frechet(black_box(&a), black_box(&b))));
    let (a, b) = (walk(&mut rng, 128), walk(&mut rng, 128));
    c.bench_function("discrete_frechet 128x128", |bch| bch.iter(|| discrete_frechet(black_box(&a), black_box(&b))));
}

fn prior() -> Prior {
    Prior::build(
        synth_corpus(3, 1000, SynthFamily::SmoothedRandomWalks),
        CorpusConfig::default(),
        BucketParams::default(),
    )
    .unwrap()
}

fn queries(n: usize) -> Vec<RelativeConfiguration> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    (0..n)
        .map(|_| {
            RelativeConfiguration::from_chord_angles(rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI))
                .scaled(rng.random_range(10.0..120.0))
        })
        .collect()
}

fn index(c: &mut Criterion) {
    let prior = prior();
    let tol = QueryTolerances::default();
    let qs = queries(64);
    let mut g = c.benchmark_group("index");
    g.bench_function("query_same_scale x64", |bch| {
        bch.iter(|| qs.iter().map(|q| prior.index.query_same_scale(q, &tol).len()).sum::<usize>())
    });
    g.bench_function("query_scale_invariant x64", |bch| {
        bch.iter(|| qs.iter().map(|q| prior.index.query_scale_invariant(q, &tol).len()).sum::<usize>())
    });
    g.sample_size(10);
    g.bench_function("build 1000 walks", |bch| {
        bch.iter_batched(
            || synth_corpus(3, 1000, SynthFamily::SmoothedRandomWalks),
            |curves| Prior::build(curves, CorpusConfig::default(), BucketParams::default()).unwrap(),
            BatchSize::LargeInput,
        )
    });
    g.finish();
}

fn reconstruction(c: &mut Criterion) {
    let prior = prior();
    let qs = queries(16);
    let pairs: Vec<(Inducer, Inducer)> = qs
        .iter()
        .map(|q| (Inducer::new(Point2::ORIGIN, 0.0), Inducer::new(q.p, q.theta)))
        .collect();
    let direct = ReconstructOptions { midway: false, ..ReconstructOptions::default() };
    let full = ReconstructOptions::default();
    let mut g = c.benchmark_group("reconstruct");
    g.sample_size(20);
    g.bench_function("direct x16", |bch| {
        bch.iter(|| pairs.iter().filter(|(a, b)| reconstruct(&prior, a, b, &direct).is_ok()).count())
    });
    g.bench_function("with midway x16", |bch| {
        bch.iter(|| pairs.iter().filter(|(a, b)| reconstruct(&prior, a, b, &full).is_ok()).count())
    });
    g.finish();
}

fn clothoid(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pairs: Vec<(Inducer, Inducer)> = (0..32)
        .map(|_| {
            let p = Point2::from_angle(rng.random_range(0.0..2.0 * PI)) * rng.random_range(5.0..100.0);
            (
                Inducer::new(Point2::ORIGIN, rng.random_range(-PI..PI)),
                Inducer::new(p, rng.random_range(-PI..PI)),
            )
        })
        .collect();
    c.bench_function("fit_clothoid x32", |bch| {
        bch.iter(|| pairs.iter().filter(|(a, b)| fit_clothoid(a, b).is_ok()).count())
    });
    c.bench_function("euler_spiral_complete n=16", |bch| {
        bch.iter(|| euler_spiral_complete(black_box(&pairs[0].0), black_box(&pairs[0].1), 16))
    });
}

criterion_group!(benches, frechet, index, reconstruction, clothoid);
criterion_main!(benches);
