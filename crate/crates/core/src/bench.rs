//! Repeated-invocation measurement: phase means over `n` sequential jobs and
//! the matching direct-call software baseline.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::device::{execute, timer_overhead_ns, Backend, JobArgs, JobOutput, PeDescriptor};
use crate::drbg::DrbgState;
use crate::error::CryptoError;
use crate::nist_api::{self, AlgorithmId, Operation};
use crate::par::{self, Exec};

/// Message length for signature workloads (the first KAT message size).
pub const WORKLOAD_MSG_LEN: usize = 33;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    /// PE name, e.g. `kyber2_enc`.
    pub id: String,
    /// Board name, or `host` for the software baseline.
    pub platform: String,
    pub backend: String,
    pub runs: usize,
    pub mean_total_us: f64,
    pub mean_start_ns: f64,
    pub mean_wait_ns: f64,
    pub mean_release_ns: f64,
    /// Population standard deviation of the per-run totals.
    pub stddev_total_us: f64,
    /// Mean rejection-loop iterations; signing only.
    pub mean_attempts: Option<f64>,
    /// False when a job fault cut the run short.
    pub valid: bool,
    pub error: Option<String>,
}

#[derive(Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn stddev(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.m2 / self.n as f64).sqrt()
        }
    }
}

#[derive(Default)]
struct Accumulator {
    total_ns: Welford,
    start: Welford,
    wait: Welford,
    release: Welford,
    attempts: Welford,
}

impl Accumulator {
    fn finish(self, id: &str, platform: &str, backend: &str, error: Option<String>) -> BenchRecord {
        BenchRecord {
            id: id.to_string(),
            platform: platform.to_string(),
            backend: backend.to_string(),
            runs: self.total_ns.n,
            mean_total_us: self.total_ns.mean / 1000.0,
            mean_start_ns: self.start.mean,
            mean_wait_ns: self.wait.mean,
            mean_release_ns: self.release.mean,
            stddev_total_us: self.total_ns.stddev() / 1000.0,
            mean_attempts: (self.attempts.n > 0).then_some(self.attempts.mean),
            valid: error.is_none(),
            error,
        }
    }
}

/// Precomputed job inputs: one key pair, fresh per-iteration material.
#[derive(Debug, Clone)]
pub struct Workload {
    pub id: AlgorithmId,
    pub inputs: Vec<JobArgs>,
}

/// Builds `n` inputs for `id` from `entropy`.
///
/// The master generator yields the key pair and then one 48-byte seed per
/// iteration; each iteration expands its own seed, so the result does not
/// depend on `exec`.
pub fn workload(id: AlgorithmId, n: usize, entropy: &[u8], exec: Exec) -> Result<Workload, CryptoError> {
    if !id.operation.is_device_op() {
        return Err(CryptoError::InvalidArgument(format!("{id} is not benchmarked")));
    }
    if n == 0 {
        return Err(CryptoError::InvalidArgument("workload needs at least one input".into()));
    }
    let entry = id.entry();
    let mut master = DrbgState::new(entropy)?;
    let (pk, sk) = entry.keypair_from_rng(&mut master)?;
    let seeds: Vec<[u8; 48]> = (0..n).map(|_| master.generate_array()).collect();
    let inputs: Result<Vec<JobArgs>, CryptoError> = par::map_slice(exec, &seeds, |seed| {
        let mut rng = DrbgState::new(seed)?;
        Ok(match id.operation {
            Operation::Encapsulate => JobArgs::Encapsulate {
                pk: pk.clone(),
                coins: entry.kem_coins_from_rng(&mut rng)?,
            },
            Operation::Decapsulate => {
                let coins = entry.kem_coins_from_rng(&mut rng)?;
                let (ct, _) = nist_api::kem_apply(entry, &pk, Some(&coins))?;
                JobArgs::Decapsulate { sk: sk.clone(), ct }
            }
            Operation::Sign => JobArgs::Sign {
                sk: sk.clone(),
                msg: rng.generate(WORKLOAD_MSG_LEN),
            },
            Operation::Verify => {
                let msg = rng.generate(WORKLOAD_MSG_LEN);
                JobArgs::Verify {
                    pk: pk.clone(),
                    sm: nist_api::sig_apply(entry, &sk, &msg)?,
                }
            }
            Operation::Keypair => unreachable!("rejected above"),
        })
    })
    .into_iter()
    .collect();
    Ok(Workload { id, inputs: inputs? })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchOptions {
    pub runs: usize,
    /// Run one uncounted job first.
    pub warmup: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { runs: 1000, warmup: true }
    }
}

fn attempts_of(out: &JobOutput) -> Option<u32> {
    match out {
        JobOutput::Signed { attempts, .. } => Some(*attempts),
        _ => None,
    }
}

/// `opts.runs` sequential jobs on `pe`, cycling through the workload.
pub fn run_bench(backend: &dyn Backend, pe: &PeDescriptor, workload: &Workload, opts: BenchOptions) -> BenchRecord {
    let mut acc = Accumulator::default();
    let platform = pe.platform.to_string();
    let backend_name = backend.kind().to_string();
    let fail = |acc: Accumulator, e: String| acc.finish(&pe.pe_name, &platform, &backend_name, Some(e));
    if workload.inputs.is_empty() || workload.id != pe.id() {
        return fail(acc, format!("workload for {} does not match {}", workload.id, pe.pe_name));
    }
    if opts.runs == 0 {
        return fail(acc, "runs must be at least 1".into());
    }
    if opts.warmup {
        if let Err(e) = backend.run_job(pe, &workload.inputs[0]) {
            return fail(acc, format!("warmup: {e}"));
        }
    }
    for i in 0..opts.runs {
        let args = &workload.inputs[i % workload.inputs.len()];
        match backend.run_job(pe, args) {
            Ok((out, t)) => {
                acc.total_ns.push(t.total_ns);
                acc.start.push(t.start_ns);
                acc.wait.push(t.wait_ns);
                acc.release.push(t.release_ns);
                if let Some(a) = attempts_of(&out) {
                    acc.attempts.push(f64::from(a));
                }
            }
            Err(e) => return fail(acc, format!("run {i}: {e}")),
        }
    }
    acc.finish(&pe.pe_name, &platform, &backend_name, None)
}

/// Times direct engine calls with no device lifecycle; only the wait phase
/// is populated.
pub fn run_software_baseline(workload: &Workload, opts: BenchOptions) -> BenchRecord {
    let id = workload.id.kernel_name();
    let mut acc = Accumulator::default();
    let overhead = timer_overhead_ns();
    if opts.runs == 0 || workload.inputs.is_empty() {
        return acc.finish(&id, "host", "baseline", Some("empty workload or zero runs".into()));
    }
    if opts.warmup {
        if let Err(e) = execute(workload.id, &workload.inputs[0]) {
            return acc.finish(&id, "host", "baseline", Some(format!("warmup: {e}")));
        }
    }
    for i in 0..opts.runs {
        let args = &workload.inputs[i % workload.inputs.len()];
        let t0 = Instant::now();
        let out = execute(workload.id, args);
        let ns = ((t0.elapsed().as_nanos() as f64) - overhead).max(0.0);
        match out {
            Ok(out) => {
                acc.total_ns.push(ns);
                acc.start.push(0.0);
                acc.wait.push(ns);
                acc.release.push(0.0);
                if let Some(a) = attempts_of(&out) {
                    acc.attempts.push(f64::from(a));
                }
            }
            Err(e) => return acc.finish(&id, "host", "baseline", Some(format!("run {i}: {e}"))),
        }
    }
    acc.finish(&id, "host", "baseline", None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub total_ratio: f64,
    pub overhead_ratio: f64,
    /// Start plus release alone take at least as long as the baseline.
    pub overhead_dominated: bool,
}

/// Ratios of a PE record to a baseline for the same kernel.
pub fn compare(record: &BenchRecord, baseline: &BenchRecord) -> Result<Comparison, CryptoError> {
    if record.id != baseline.id {
        return Err(CryptoError::InvalidArgument(format!(
            "cannot compare {} with {}",
            record.id, baseline.id
        )));
    }
    Ok(ratios(
        record.mean_total_us * 1000.0,
        record.mean_start_ns + record.mean_release_ns,
        baseline.mean_total_us * 1000.0,
    ))
}

/// The arithmetic behind [`compare`], on nanosecond quantities.
pub fn ratios(total_ns: f64, overhead_ns: f64, baseline_ns: f64) -> Comparison {
    let overhead_ratio = overhead_ns / baseline_ns;
    Comparison {
        total_ratio: total_ns / baseline_ns,
        overhead_ratio,
        overhead_dominated: overhead_ratio >= 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, start: f64, wait: f64, release: f64) -> BenchRecord {
        BenchRecord {
            id: id.into(),
            platform: "VC709".into(),
            backend: "modeled".into(),
            runs: 1,
            mean_total_us: (start + wait + release) / 1000.0,
            mean_start_ns: start,
            mean_wait_ns: wait,
            mean_release_ns: release,
            stddev_total_us: 0.0,
            mean_attempts: None,
            valid: true,
            error: None,
        }
    }

    #[test]
    fn overhead_flagging() {
        let c = compare(&rec("x", 10_000.0, 0.0, 5_000.0), &rec("x", 0.0, 12_000.0, 0.0)).unwrap();
        assert!((c.overhead_ratio - 1.25).abs() < 1e-12);
        assert!(c.overhead_dominated);
        let c = compare(&rec("x", 0.0, 7.0, 0.0), &rec("x", 0.0, 12.0, 0.0)).unwrap();
        assert_eq!(c.overhead_ratio, 0.0);
        assert!(!c.overhead_dominated);
        assert!(compare(&rec("x", 0.0, 1.0, 0.0), &rec("y", 0.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn welford_constant_is_exact() {
        let mut w = Welford::default();
        for _ in 0..1000 {
            w.push(683862.819);
        }
        assert_eq!(w.mean, 683862.819);
        assert_eq!(w.stddev(), 0.0);
    }
}
