use std::fmt;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use pqeval_core::bench::{compare, run_bench, run_software_baseline, workload, BenchOptions, BenchRecord};
use pqeval_core::device::{
    calibration_from_source, make_backend, BackendKind, Calibration, DeviceOptions, PhaseOverrides,
};
use pqeval_core::drbg::{default_kat_entropy, ENTROPY_LEN};
use pqeval_core::error::{CryptoError, DataError, DeviceError, KatParseError};
use pqeval_core::kat::{generate_kat, parse_rsp, run_kat, write_rsp, KatReport, KatRunError};
use pqeval_core::nist_api::{registry, registry_lookup, AlgorithmId, Family, SchemeEntry};
use pqeval_core::par::Exec;
use pqeval_core::report::{
    area_time_rows, builtin_resources, emit, fig1_rows, fig4_rows, fig6_rows, load_resources, read_resource_csv,
    records_from_calibration, Report, ResourceRecord, BENCH_HEADER,
};
use serde_json::{json, Value};

use crate::{BenchArgs, Cli, Command, DeviceArgs, KatGenArgs, KatVerifyArgs, KernelArgs, ReportArgs, ReportKind, SchemeArgs};

/// Distinct input sets per benchmark; runs cycle through them.
const WORKLOAD_INPUTS: usize = 100;

pub const KERNEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Data(m) => write!(f, "{m}"),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Precondition(m) => CliError::Usage(m),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<KatParseError> for CliError {
    fn from(e: KatParseError) -> Self {
        CliError::Data(format!("malformed response file: {e}"))
    }
}

fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    match &cli.command {
        Command::KatGen(a) => kat_gen(a, cli.pretty),
        Command::KatVerify(a) => kat_verify(a, cli.pretty),
        Command::Bench(a) => bench(a, cli.pretty),
        Command::Report(a) => report(a, cli.pretty),
        Command::KernelDescriptor(a) => kernel_descriptor(a, cli.pretty),
    }
}

fn scheme(a: &SchemeArgs) -> Result<&'static SchemeEntry, CliError> {
    registry_lookup(a.family.into(), a.level).map_err(|_| {
        let valid: Vec<String> = registry().iter().map(|e| format!("{} {}", e.family, e.nist_level)).collect();
        CliError::Usage(format!(
            "no scheme {} level {}; registered: {}",
            Family::from(a.family),
            a.level,
            valid.join(", ")
        ))
    })
}

fn entropy(hex_arg: Option<&str>) -> Result<Vec<u8>, CliError> {
    let Some(h) = hex_arg else {
        return Ok(default_kat_entropy().to_vec());
    };
    let bytes = hex::decode(h.trim()).map_err(|e| usage(format!("--entropy: {e}")))?;
    if bytes.len() != ENTROPY_LEN {
        return Err(usage(format!("--entropy must be {ENTROPY_LEN} bytes, got {}", bytes.len())));
    }
    Ok(bytes)
}

fn exec(sequential: bool) -> Exec {
    if sequential {
        Exec::Sequential
    } else {
        Exec::default()
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values serialize"));
}

fn kat_gen(a: &KatGenArgs, pretty: bool) -> Result<ExitCode, CliError> {
    let entry = scheme(&a.scheme)?;
    if a.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    let seed = entropy(a.entropy.as_deref())?;
    let file = generate_kat(entry, a.count, &seed, exec(a.sequential)).map_err(usage)?;
    fs::create_dir_all(&a.out_dir)?;
    let path = a.out_dir.join(entry.kat_file_name());
    fs::write(&path, write_rsp(&file))?;
    if pretty {
        println!("wrote {} cases of {} to {}", a.count, entry.name(), path.display());
    } else {
        print_json(&json!({
            "scheme": entry.name(),
            "cases": a.count,
            "file": path.display().to_string(),
        }));
    }
    Ok(ExitCode::SUCCESS)
}

fn device_options(d: &DeviceArgs) -> DeviceOptions {
    DeviceOptions {
        simulate_deadlock_ms: d.simulate_deadlock,
        ..DeviceOptions::default()
    }
}

fn load_calibration(d: &DeviceArgs, overrides: PhaseOverrides) -> Result<Option<Calibration>, CliError> {
    match (&d.calibration, BackendKind::from(d.backend)) {
        (Some(src), _) => Ok(Some(calibration_from_source(src)?.with_overrides(overrides))),
        (None, BackendKind::Modeled) => Err(usage(
            "the modeled backend needs --calibration <path|builtin> or PQEVAL_CALIBRATION",
        )),
        (None, BackendKind::Software) => Ok(None),
    }
}

fn mean_total_us<'a>(timings: impl Iterator<Item = Option<&'a pqeval_core::device::JobTiming>>) -> Option<f64> {
    let (sum, n) = timings.flatten().fold((0.0, 0usize), |(s, n), t| (s + t.total_ns, n + 1));
    (n > 0).then(|| sum / n as f64 / 1000.0)
}

fn kat_summary(r: &KatReport) -> Value {
    let failures: Vec<Value> = r
        .failures()
        .map(|c| {
            let (field, detail) = c
                .failure
                .as_ref()
                .map_or(("", ""), |f| (f.field.as_str(), f.detail.as_str()));
            json!({ "count": c.count, "field": field, "detail": detail })
        })
        .collect();
    json!({
        "scheme": r.scheme,
        "backend": r.backend,
        "platform": r.platform,
        "apply_pe": r.apply_pe,
        "verify_pe": r.verify_pe,
        "total": r.total,
        "passed": r.passed,
        "mean_apply_us": mean_total_us(r.cases.iter().map(|c| c.apply_timing.as_ref())),
        "mean_verify_us": mean_total_us(r.cases.iter().map(|c| c.verify_timing.as_ref())),
        "failures": failures,
    })
}

fn kat_verify(a: &KatVerifyArgs, pretty: bool) -> Result<ExitCode, CliError> {
    let entry = scheme(&a.scheme)?;
    let cal = load_calibration(&a.device, PhaseOverrides::default())?;
    let backend = make_backend(a.device.backend.into(), a.device.platform, cal.as_ref(), device_options(&a.device))?;
    let text = fs::read_to_string(&a.path).map_err(|e| CliError::Data(format!("{}: {e}", a.path.display())))?;
    let file = parse_rsp(&text)?;
    let report = run_kat(backend.as_ref(), entry, &file, exec(a.sequential)).map_err(|e| match e {
        KatRunError::Device(DeviceError::NotFound(pe)) => usage(format!("no PE {pe} on this backend")),
        e => CliError::Data(e.to_string()),
    })?;
    if let Some(path) = &a.report {
        let body = serde_json::to_string_pretty(&report).expect("report serializes");
        fs::write(path, body + "\n")?;
    }
    if pretty {
        println!(
            "{} on {} {} ({} / {}): {}/{} passed",
            report.scheme, report.backend, report.platform, report.apply_pe, report.verify_pe, report.passed, report.total
        );
        for c in report.failures() {
            if let Some(f) = &c.failure {
                println!("  count {}: {} ({})", c.count, f.field, f.detail);
            }
        }
    } else {
        print_json(&kat_summary(&report));
    }
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn overrides(start_ns: Option<f64>, release_ns: Option<f64>) -> Result<PhaseOverrides, CliError> {
    for v in [start_ns, release_ns].into_iter().flatten() {
        if !(v.is_finite() && v >= 0.0) {
            return Err(usage(format!("phase override {v} must be a non-negative number")));
        }
    }
    Ok(PhaseOverrides {
        start_ns,
        wait_ns: None,
        release_ns,
    })
}

fn baseline_for(id: AlgorithmId, runs: usize, warmup: bool, seed: &[u8]) -> Result<BenchRecord, CliError> {
    let w = workload(id, runs.min(WORKLOAD_INPUTS), seed, Exec::default()).map_err(usage)?;
    Ok(run_software_baseline(&w, BenchOptions { runs, warmup }))
}

fn bench(a: &BenchArgs, pretty: bool) -> Result<ExitCode, CliError> {
    let entry = scheme(&a.scheme)?;
    let id = AlgorithmId::new(entry.family, entry.nist_level, a.operation.into()).map_err(usage)?;
    if !id.operation.is_device_op() {
        return Err(usage(format!("{id} runs in software only and has no PE to benchmark")));
    }
    if a.runs == 0 {
        return Err(usage("--runs must be at least 1"));
    }
    let ov = overrides(a.override_start_ns, a.override_release_ns)?;
    if ov != PhaseOverrides::default() && a.device.backend == crate::BackendArg::Software {
        log::warn!("phase overrides only affect the modeled backend");
    }
    let cal = load_calibration(&a.device, ov)?;
    let backend = make_backend(a.device.backend.into(), a.device.platform, cal.as_ref(), device_options(&a.device))?;
    let pe = backend
        .find_pe(id)
        .map_err(|e| usage(format!("{e} on {}", a.device.platform)))?;
    let seed = entropy(a.entropy.as_deref())?;
    let w = workload(id, a.runs.min(WORKLOAD_INPUTS), &seed, Exec::default()).map_err(usage)?;
    let opts = BenchOptions {
        runs: a.runs,
        warmup: !a.no_warmup,
    };
    let record = run_bench(backend.as_ref(), &pe, &w, opts);
    let mut records = vec![record.clone()];
    let mut out = json!({ "record": record });
    if a.baseline {
        let base = run_software_baseline(&w, opts);
        if record.valid && base.valid {
            out["comparison"] = json!(compare(&record, &base).map_err(usage)?);
        }
        out["baseline"] = json!(base);
        records.push(base);
    }
    if let Some(dir) = &a.out_dir {
        let paths = emit(&Report::Bench(records.clone()), dir)?;
        out["files"] = json!(paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>());
    }
    if pretty {
        for r in &records {
            println!(
                "{} {} {}: {} runs, mean {:.6} us (start {:.3} ns, wait {:.3} ns, release {:.3} ns){}",
                r.id,
                r.platform,
                r.backend,
                r.runs,
                r.mean_total_us,
                r.mean_start_ns,
                r.mean_wait_ns,
                r.mean_release_ns,
                r.error.as_ref().map(|e| format!(" INVALID: {e}")).unwrap_or_default()
            );
        }
        if let Some(c) = out.get("comparison") {
            println!("comparison: {c}");
        }
    } else {
        print_json(&out);
    }
    Ok(if records.iter().all(|r| r.valid) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn resources_from_source(src: &str) -> Result<Vec<ResourceRecord>, CliError> {
    if src == "builtin" {
        return Ok(builtin_resources()?);
    }
    let f = fs::File::open(src).map_err(|e| CliError::Data(format!("{src}: {e}")))?;
    Ok(load_resources(&read_resource_csv(f)?)?)
}

fn read_bench_csv(path: &Path) -> Result<Vec<BenchRecord>, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Data(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != BENCH_HEADER {
        return Err(CliError::Data(format!(
            "{}: unexpected header `{}`",
            path.display(),
            header.join(",")
        )));
    }
    rdr.deserialize()
        .collect::<Result<Vec<BenchRecord>, _>>()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn id_of_kernel(name: &str) -> Option<AlgorithmId> {
    registry()
        .iter()
        .flat_map(|e| e.operations().iter().filter_map(move |&op| e.id(op).ok()))
        .find(|id| id.kernel_name() == name)
}

fn measured_baselines(records: &[BenchRecord], runs: usize) -> Result<Vec<BenchRecord>, CliError> {
    let mut names: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    let seed = default_kat_entropy();
    names
        .into_iter()
        .map(|n| {
            let id = id_of_kernel(n).ok_or_else(|| CliError::Data(format!("unknown kernel {n}")))?;
            log::info!("measuring baseline for {n}");
            baseline_for(id, runs, true, &seed)
        })
        .collect()
}

fn report(a: &ReportArgs, pretty: bool) -> Result<ExitCode, CliError> {
    let ov = overrides(a.override_start_ns, a.override_release_ns)?;
    let rep = match a.kind {
        ReportKind::Fig1 => Report::Fig1(fig1_rows(&resources_from_source(&a.resources)?)),
        ReportKind::AreaTime => {
            let cal = calibration_from_source(&a.calibration)?.with_overrides(ov);
            Report::AreaTime(area_time_rows(&resources_from_source(&a.resources)?, &cal)?)
        }
        ReportKind::Fig4 | ReportKind::Fig6 => {
            if a.runs == 0 {
                return Err(usage("--runs must be at least 1"));
            }
            let cal = calibration_from_source(&a.calibration)?.with_overrides(ov);
            let records = records_from_calibration(&cal);
            let baselines = match &a.baseline_csv {
                Some(p) => read_bench_csv(p)?,
                None => measured_baselines(&records, a.runs)?,
            };
            if a.kind == ReportKind::Fig4 {
                Report::Fig4(fig4_rows(&records, &baselines))
            } else {
                Report::Fig6(fig6_rows(&records, &baselines))
            }
        }
    };
    let paths = emit(&rep, &a.out_dir)?;
    if pretty {
        println!("{}: {} rows", rep.name(), rep.len());
        for p in &paths {
            println!("  {}", p.display());
        }
    } else {
        print_json(&json!({
            "report": rep.name(),
            "rows": rep.len(),
            "files": paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        }));
    }
    Ok(ExitCode::SUCCESS)
}

/// The kernel descriptor for one PE.
pub fn descriptor(id: AlgorithmId) -> Value {
    let entry = id.entry();
    let (param, value) = entry.compile_parameter();
    json!({
        "Name": id.kernel_name(),
        "Description": format!("{} {}", entry.name(), id.operation),
        "Id": id.kernel_id(),
        "CompilerFlags": [format!("-D{param}={value}")],
        "SchemaVersion": KERNEL_SCHEMA_VERSION,
    })
}

fn kernel_descriptor(a: &KernelArgs, pretty: bool) -> Result<ExitCode, CliError> {
    let entry = scheme(&a.scheme)?;
    let id = AlgorithmId::new(entry.family, entry.nist_level, a.operation.into())
        .map_err(|e: CryptoError| usage(e))?;
    if !id.operation.is_device_op() {
        return Err(usage(format!("{id} runs in software only and has no kernel")));
    }
    let d = descriptor(id);
    let body = serde_json::to_string_pretty(&d).expect("json values serialize") + "\n";
    match &a.out {
        Some(path) => {
            fs::write(path, &body)?;
            if pretty {
                println!("wrote {} to {}", id.kernel_name(), path.display());
            } else {
                print_json(&json!({ "kernel": id.kernel_name(), "file": path.display().to_string() }));
            }
        }
        None => print!("{body}"),
    }
    Ok(ExitCode::SUCCESS)
}
