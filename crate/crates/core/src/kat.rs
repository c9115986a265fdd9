//! NIST `.rsp` known-answer files: parsing, writing, generation and the
//! apply/verify conformance run against a backend.

// Case outcomes travel through `Err` to short-circuit the checks.
#![allow(clippy::result_large_err)]

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::device::{Backend, BackendKind, JobArgs, JobOutput, JobTiming, Platform};
use crate::drbg::{kat_seed_schedule, kat_sign_schedule, DrbgState, SEED_LEN};
use crate::error::{CryptoError, DeviceError, KatParseError};
use crate::nist_api::{self, SchemeEntry};
use crate::par::{self, Exec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KatKemCase {
    pub count: usize,
    pub seed: Vec<u8>,
    pub pk: Vec<u8>,
    pub sk: Vec<u8>,
    pub ct: Vec<u8>,
    pub ss: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KatSignCase {
    pub count: usize,
    pub seed: Vec<u8>,
    pub mlen: usize,
    pub msg: Vec<u8>,
    pub pk: Vec<u8>,
    pub sk: Vec<u8>,
    pub smlen: usize,
    pub sm: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KatCase {
    Kem(KatKemCase),
    Sign(KatSignCase),
}

impl KatCase {
    pub fn count(&self) -> usize {
        match self {
            KatCase::Kem(c) => c.count,
            KatCase::Sign(c) => c.count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KatFile {
    /// Algorithm name from the `# name` line.
    pub header: String,
    pub cases: Vec<KatCase>,
}

const KEM_FIELDS: [&str; 6] = ["count", "seed", "pk", "sk", "ct", "ss"];
const SIGN_FIELDS: [&str; 8] = ["count", "seed", "mlen", "msg", "pk", "sk", "smlen", "sm"];

#[derive(Default)]
struct PendingCase {
    line: usize,
    fields: Vec<(&'static str, String, usize)>,
}

impl PendingCase {
    fn get(&self, name: &str) -> Option<(&str, usize)> {
        self.fields
            .iter()
            .find(|(n, _, _)| *n == name)
            .map(|(_, v, l)| (v.as_str(), *l))
    }

    fn is_sign(&self) -> bool {
        ["mlen", "msg", "smlen", "sm"].iter().any(|f| self.get(f).is_some())
    }

    fn require(&self, name: &str) -> Result<(&str, usize), KatParseError> {
        self.get(name).ok_or_else(|| KatParseError {
            line: self.line,
            message: format!("case starting here is missing field `{name}`"),
        })
    }

    fn int(&self, name: &str) -> Result<usize, KatParseError> {
        let (v, line) = self.require(name)?;
        v.parse().map_err(|_| KatParseError {
            line,
            message: format!("`{name}` is not an integer: `{v}`"),
        })
    }

    /// Hex field; `declared` is the matching length field, which lets the
    /// placeholder `00` of an empty value decode to nothing.
    fn bytes(&self, name: &str, declared: Option<usize>) -> Result<Vec<u8>, KatParseError> {
        let (v, line) = self.require(name)?;
        let bytes = hex::decode(v).map_err(|e| KatParseError {
            line,
            message: format!("`{name}` is not valid hex: {e}"),
        })?;
        match declared {
            Some(0) if bytes == [0] => Ok(Vec::new()),
            Some(n) if bytes.len() != n => Err(KatParseError {
                line,
                message: format!("`{name}` has {} bytes, its length field says {n}", bytes.len()),
            }),
            _ => Ok(bytes),
        }
    }

    fn finish(self) -> Result<KatCase, KatParseError> {
        let count = self.int("count")?;
        let seed = self.bytes("seed", Some(SEED_LEN))?;
        if self.is_sign() {
            let mlen = self.int("mlen")?;
            let smlen = self.int("smlen")?;
            Ok(KatCase::Sign(KatSignCase {
                count,
                mlen,
                msg: self.bytes("msg", Some(mlen))?,
                pk: self.bytes("pk", None)?,
                sk: self.bytes("sk", None)?,
                smlen,
                sm: self.bytes("sm", Some(smlen))?,
                seed,
            }))
        } else {
            Ok(KatCase::Kem(KatKemCase {
                count,
                pk: self.bytes("pk", None)?,
                sk: self.bytes("sk", None)?,
                ct: self.bytes("ct", None)?,
                ss: self.bytes("ss", None)?,
                seed,
            }))
        }
    }
}

fn known_field(name: &str) -> Option<&'static str> {
    SIGN_FIELDS.iter().chain(&KEM_FIELDS).copied().find(|f| *f == name)
}

/// Parses a response file. Accepts LF or CRLF, any number of blank lines and
/// hex in either case.
pub fn parse_rsp(text: &str) -> Result<KatFile, KatParseError> {
    let mut header = None;
    let mut cases = Vec::new();
    let mut pending: Option<PendingCase> = None;
    let flush = |p: Option<PendingCase>, cases: &mut Vec<KatCase>| -> Result<(), KatParseError> {
        let Some(p) = p else { return Ok(()) };
        let line = p.line;
        let case = p.finish()?;
        let expected = cases.len();
        if case.count() != expected {
            return Err(KatParseError {
                line,
                message: format!("count {} out of sequence, expected {expected}", case.count()),
            });
        }
        if let Some(first) = cases.first() {
            if std::mem::discriminant(first) != std::mem::discriminant(&case) {
                return Err(KatParseError {
                    line,
                    message: "file mixes KEM and signature cases".into(),
                });
            }
        }
        cases.push(case);
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if header.is_none() && pending.is_none() && cases.is_empty() {
                header = Some(rest.trim().to_string());
            }
            continue;
        }
        let (name, value) = line.split_once('=').ok_or_else(|| KatParseError {
            line: line_no,
            message: format!("expected `name = value`, got `{line}`"),
        })?;
        let name = name.trim();
        let value = value.trim();
        let field = known_field(name).ok_or_else(|| KatParseError {
            line: line_no,
            message: format!("unknown field `{name}`"),
        })?;
        if field == "count" {
            flush(pending.take(), &mut cases)?;
            pending = Some(PendingCase {
                line: line_no,
                fields: Vec::new(),
            });
        }
        let case = pending.as_mut().ok_or_else(|| KatParseError {
            line: line_no,
            message: format!("`{name}` before the first `count`"),
        })?;
        if case.get(field).is_some() {
            return Err(KatParseError {
                line: line_no,
                message: format!("duplicate field `{name}`"),
            });
        }
        case.fields.push((field, value.to_string(), line_no));
    }
    flush(pending.take(), &mut cases)?;

    Ok(KatFile {
        header: header.unwrap_or_default(),
        cases,
    })
}

fn hex_field(out: &mut String, name: &str, bytes: &[u8]) {
    if bytes.is_empty() {
        let _ = writeln!(out, "{name} = 00");
    } else {
        let _ = writeln!(out, "{name} = {}", hex::encode_upper(bytes));
    }
}

/// Serializes in the layout of the NIST generator programs.
pub fn write_rsp(file: &KatFile) -> String {
    let mut out = format!("# {}\n\n", file.header);
    for case in &file.cases {
        match case {
            KatCase::Kem(c) => {
                let _ = writeln!(out, "count = {}", c.count);
                hex_field(&mut out, "seed", &c.seed);
                hex_field(&mut out, "pk", &c.pk);
                hex_field(&mut out, "sk", &c.sk);
                hex_field(&mut out, "ct", &c.ct);
                hex_field(&mut out, "ss", &c.ss);
            }
            KatCase::Sign(c) => {
                let _ = writeln!(out, "count = {}", c.count);
                hex_field(&mut out, "seed", &c.seed);
                let _ = writeln!(out, "mlen = {}", c.mlen);
                hex_field(&mut out, "msg", &c.msg);
                hex_field(&mut out, "pk", &c.pk);
                hex_field(&mut out, "sk", &c.sk);
                let _ = writeln!(out, "smlen = {}", c.smlen);
                hex_field(&mut out, "sm", &c.sm);
            }
        }
        out.push('\n');
    }
    out
}

/// Generates `n` cases from `master_entropy` with the reference engines.
///
/// The master stream is drawn sequentially; the cases themselves are
/// independent and computed under `exec`.
pub fn generate_kat(
    entry: &SchemeEntry,
    n: usize,
    master_entropy: &[u8],
    exec: Exec,
) -> Result<KatFile, CryptoError> {
    let cases: Result<Vec<KatCase>, CryptoError> = if entry.is_kem() {
        let seeds = kat_seed_schedule(master_entropy, n)?;
        par::map_indexed(exec, n, |count| {
            let mut rng = DrbgState::new(&seeds[count])?;
            let (pk, sk) = entry.keypair_from_rng(&mut rng)?;
            let coins = entry.kem_coins_from_rng(&mut rng)?;
            let (ct, ss) = nist_api::kem_apply(entry, &pk, Some(&coins))?;
            Ok(KatCase::Kem(KatKemCase {
                count,
                seed: seeds[count].to_vec(),
                pk,
                sk,
                ct,
                ss,
            }))
        })
        .into_iter()
        .collect()
    } else {
        let schedule = kat_sign_schedule(master_entropy, n)?;
        par::map_indexed(exec, n, |count| {
            let (seed, msg) = &schedule[count];
            let mut rng = DrbgState::new(seed)?;
            let (pk, sk) = entry.keypair_from_rng(&mut rng)?;
            let sm = nist_api::sig_apply(entry, &sk, msg)?;
            Ok(KatCase::Sign(KatSignCase {
                count,
                seed: seed.to_vec(),
                mlen: msg.len(),
                msg: msg.clone(),
                pk,
                sk,
                smlen: sm.len(),
                sm,
            }))
        })
        .into_iter()
        .collect()
    };
    Ok(KatFile {
        header: entry.name().to_string(),
        cases: cases?,
    })
}

/// Encapsulation coins for a case, re-derived from its seed: the generator
/// is re-seeded, key generation draws are skipped, then the next draw is
/// taken.
pub fn kem_coins_from_seed(entry: &SchemeEntry, seed: &[u8]) -> Result<Vec<u8>, CryptoError> {
    let mut rng = DrbgState::new(seed)?;
    for &n in entry.keypair_draws {
        rng.generate(n);
    }
    entry.kem_coins_from_rng(&mut rng)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseFailure {
    /// First field that did not match, or `backend` for a job fault.
    pub field: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub count: usize,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<CaseFailure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub apply_timing: Option<JobTiming>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify_timing: Option<JobTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KatReport {
    pub scheme: String,
    pub backend: BackendKind,
    pub platform: Platform,
    pub apply_pe: String,
    pub verify_pe: String,
    pub total: usize,
    pub passed: usize,
    pub cases: Vec<CaseReport>,
}

impl KatReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.total
    }

    pub fn pass_vector(&self) -> Vec<bool> {
        self.cases.iter().map(|c| c.passed).collect()
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseReport> {
        self.cases.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Error)]
pub enum KatRunError {
    #[error("{file} file does not fit {scheme}")]
    KindMismatch { file: &'static str, scheme: String },
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

struct Outcome {
    failure: Option<CaseFailure>,
    apply_timing: Option<JobTiming>,
    verify_timing: Option<JobTiming>,
}

impl Outcome {
    fn fail(field: &str, detail: impl Into<String>) -> Self {
        Self {
            failure: Some(CaseFailure {
                field: field.to_string(),
                detail: detail.into(),
            }),
            apply_timing: None,
            verify_timing: None,
        }
    }
}

fn check_len(field: &str, bytes: &[u8], expected: usize) -> Result<(), Outcome> {
    if bytes.len() == expected {
        Ok(())
    } else {
        Err(Outcome::fail(
            field,
            format!("{} bytes, parameter set needs {expected}", bytes.len()),
        ))
    }
}

fn compare(field: &str, got: &[u8], expected: &[u8], stage: &str) -> Result<(), Outcome> {
    if got == expected {
        Ok(())
    } else {
        Err(Outcome::fail(field, format!("{stage} output differs from file")))
    }
}

fn unexpected_output(o: &JobOutput) -> Outcome {
    Outcome::fail("backend", format!("unexpected job output {o:?}"))
}

type Pes = (crate::device::PeDescriptor, crate::device::PeDescriptor);

fn run_kem_case(backend: &dyn Backend, entry: &SchemeEntry, pes: &Pes, c: &KatKemCase) -> Result<Outcome, Outcome> {
    let p = entry.kem_params().expect("kem entry");
    check_len("seed", &c.seed, SEED_LEN)?;
    check_len("pk", &c.pk, p.pk_len)?;
    check_len("sk", &c.sk, p.sk_len)?;
    check_len("ct", &c.ct, p.ct_len)?;
    check_len("ss", &c.ss, p.ss_len)?;
    let coins = kem_coins_from_seed(entry, &c.seed).map_err(|e| Outcome::fail("seed", e.to_string()))?;

    let args = JobArgs::Encapsulate {
        pk: c.pk.clone(),
        coins,
    };
    let (out, apply_timing) = backend
        .run_job(&pes.0, &args)
        .map_err(|e| Outcome::fail("backend", e.to_string()))?;
    let JobOutput::Encapsulated { ct, ss } = out else {
        return Err(unexpected_output(&out));
    };
    compare("ct", &ct, &c.ct, "apply")?;
    compare("ss", &ss, &c.ss, "apply")?;

    let args = JobArgs::Decapsulate { sk: c.sk.clone(), ct };
    let (out, verify_timing) = backend
        .run_job(&pes.1, &args)
        .map_err(|e| Outcome::fail("backend", e.to_string()))?;
    let JobOutput::Decapsulated { ss } = out else {
        return Err(unexpected_output(&out));
    };
    compare("ss", &ss, &c.ss, "verify")?;
    Ok(Outcome {
        failure: None,
        apply_timing: Some(apply_timing),
        verify_timing: Some(verify_timing),
    })
}

fn run_sign_case(backend: &dyn Backend, entry: &SchemeEntry, pes: &Pes, c: &KatSignCase) -> Result<Outcome, Outcome> {
    let p = entry.sig_params().expect("signature entry");
    check_len("seed", &c.seed, SEED_LEN)?;
    check_len("pk", &c.pk, p.pk_len)?;
    check_len("sk", &c.sk, p.sk_len)?;
    check_len("sm", &c.sm, p.sig_len + c.mlen)?;

    let args = JobArgs::Sign {
        sk: c.sk.clone(),
        msg: c.msg.clone(),
    };
    let (out, apply_timing) = backend
        .run_job(&pes.0, &args)
        .map_err(|e| Outcome::fail("backend", e.to_string()))?;
    let JobOutput::Signed { sm, .. } = out else {
        return Err(unexpected_output(&out));
    };
    compare("sm", &sm, &c.sm, "apply")?;

    let args = JobArgs::Verify { pk: c.pk.clone(), sm };
    let (out, verify_timing) = backend
        .run_job(&pes.1, &args)
        .map_err(|e| Outcome::fail("backend", e.to_string()))?;
    let JobOutput::Opened(opened) = out else {
        return Err(unexpected_output(&out));
    };
    match opened {
        Ok(msg) => compare("msg", &msg, &c.msg, "verify")?,
        Err(rej) => return Err(Outcome::fail("msg", format!("verify rejected: {rej}"))),
    }
    Ok(Outcome {
        failure: None,
        apply_timing: Some(apply_timing),
        verify_timing: Some(verify_timing),
    })
}

/// Feeds every case to the apply PE and its output to the verify PE, and
/// compares both against the file. Job faults become case failures.
pub fn run_kat(
    backend: &dyn Backend,
    entry: &SchemeEntry,
    file: &KatFile,
    exec: Exec,
) -> Result<KatReport, KatRunError> {
    let kind_ok = file.cases.iter().all(|c| matches!(c, KatCase::Kem(_)) == entry.is_kem());
    if !kind_ok {
        return Err(KatRunError::KindMismatch {
            file: if entry.is_kem() { "signature" } else { "KEM" },
            scheme: entry.name().to_string(),
        });
    }
    let pes = (
        backend.find_pe(entry.id(entry.apply_op())?)?,
        backend.find_pe(entry.id(entry.verify_op())?)?,
    );

    let cases = par::map_slice(exec, &file.cases, |case| {
        let outcome = match case {
            KatCase::Kem(c) => run_kem_case(backend, entry, &pes, c),
            KatCase::Sign(c) => run_sign_case(backend, entry, &pes, c),
        }
        .unwrap_or_else(|o| o);
        CaseReport {
            count: case.count(),
            passed: outcome.failure.is_none(),
            failure: outcome.failure,
            apply_timing: outcome.apply_timing,
            verify_timing: outcome.verify_timing,
        }
    });
    let passed = cases.iter().filter(|c| c.passed).count();
    Ok(KatReport {
        scheme: entry.name().to_string(),
        backend: backend.kind(),
        platform: backend.platform(),
        apply_pe: pes.0.pe_name,
        verify_pe: pes.1.pe_name,
        total: cases.len(),
        passed,
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "# Toy\n\ncount = 0\nseed = 00\npk = AB\nsk = CD\nct = EF\nss = 01\n\n";

    #[test]
    fn seed_length_enforced() {
        let err = parse_rsp(MINIMAL).unwrap_err();
        assert_eq!(err.line, 4);
    }

    #[test]
    fn empty_file_is_header_only() {
        let f = KatFile {
            header: "Kyber512".into(),
            cases: vec![],
        };
        assert_eq!(write_rsp(&f), "# Kyber512\n\n");
        assert_eq!(parse_rsp("# Kyber512\n\n").unwrap(), f);
    }
}
