use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pqeval_core::device::{DeviceOptions, Platform, SoftwareBackend};
use pqeval_core::drbg::default_kat_entropy;
use pqeval_core::kat::{generate_kat, run_kat};
use pqeval_core::nist_api::{registry_lookup, Family};
use pqeval_core::par::Exec;

const CASES: usize = 32;

fn modes() -> Vec<(&'static str, Exec)> {
    let mut m = vec![("sequential", Exec::Sequential)];
    if Exec::Parallel.is_parallel() {
        m.push(("parallel", Exec::Parallel));
    }
    m
}

fn kat_generation(c: &mut Criterion) {
    let mut g = c.benchmark_group("generate_kat");
    g.sample_size(10);
    let entropy = default_kat_entropy();
    for (family, level) in [(Family::Kyber, 3), (Family::Dilithium, 3)] {
        let entry = registry_lookup(family, level).unwrap();
        for (name, exec) in modes() {
            g.bench_with_input(BenchmarkId::new(entry.name(), name), &exec, |b, &exec| {
                b.iter(|| black_box(generate_kat(entry, CASES, &entropy, exec).unwrap()))
            });
        }
    }
    g.finish();
}

fn kat_verification(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_kat");
    g.sample_size(10);
    let entropy = default_kat_entropy();
    let backend = SoftwareBackend::new(Platform::Vc709, DeviceOptions::default()).unwrap();
    for (family, level) in [(Family::Kyber, 3), (Family::Dilithium, 3)] {
        let entry = registry_lookup(family, level).unwrap();
        let file = generate_kat(entry, CASES, &entropy, Exec::default()).unwrap();
        for (name, exec) in modes() {
            g.bench_with_input(BenchmarkId::new(entry.name(), name), &exec, |b, &exec| {
                b.iter(|| {
                    let r = run_kat(&backend, entry, &file, exec).unwrap();
                    assert!(r.all_passed());
                    black_box(r)
                })
            });
        }
    }
    g.finish();
}

criterion_group!(benches, kat_generation, kat_verification);
criterion_main!(benches);
