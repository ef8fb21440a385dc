use clubsim::{run_ensemble, run_episode, PolicySpec, Variant};
use clubsim_bench::{club, fixture};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn episodes(c: &mut Criterion) {
    let mut g = c.benchmark_group("episode");
    g.sample_size(10);
    for (name, variant, policy) in [
        ("none_fixed", Variant::NoProtocol, "fixed:0"),
        ("bc_fixed", club(false), "fixed:7"),
        ("bc_random", club(false), "random"),
        ("bc_greedy", club(false), "greedy"),
        ("bcdd_greedy", club(true), "greedy"),
    ] {
        let cfg = fixture(variant, policy.parse::<PolicySpec>().unwrap());
        g.bench_function(name, |b| b.iter(|| run_episode(black_box(&cfg)).unwrap()));
    }
    let cfg = fixture(club(true), PolicySpec::default());
    let seeds = clubsim::rng::seed_schedule(1, 8);
    g.bench_function("ensemble_8_greedy", |b| b.iter(|| run_ensemble(black_box(&cfg), &seeds, 0)));
    g.finish();
}

criterion_group!(benches, episodes);
criterion_main!(benches);
