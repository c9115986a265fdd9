//! Processing elements and the job lifecycle around them.
//!
//! A job goes through acquire, start (argument transfer), wait (compute) and
//! release (result transfer). The software backend runs the engine and times
//! each phase with a monotonic clock. The modeled backend also runs the
//! engine, so outputs are real, but reports the phase durations from a
//! calibration table instead of host time.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Condvar, Mutex, OnceLock};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{CryptoError, DataError, DeviceError};
use crate::keccak::sha3_256;
use crate::nist_api::{self, AlgorithmId, Family, OpenResult, Operation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Platform {
    #[serde(rename = "VC709")]
    Vc709,
    #[serde(rename = "AU280")]
    Au280,
}

impl Platform {
    pub const ALL: [Platform; 2] = [Platform::Vc709, Platform::Au280];

    pub fn as_str(self) -> &'static str {
        match self {
            Platform::Vc709 => "VC709",
            Platform::Au280 => "AU280",
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Platform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "VC709" => Ok(Platform::Vc709),
            "AU280" | "U280" => Ok(Platform::Au280),
            _ => Err(format!("unknown platform `{s}` (expected VC709 or AU280)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Functionality {
    Working,
    Deadlock,
}

impl FromStr for Functionality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Working" => Ok(Functionality::Working),
            "Deadlock" => Ok(Functionality::Deadlock),
            _ => Err(format!("unknown functionality `{s}`")),
        }
    }
}

/// One accelerator kernel on one board.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeDescriptor {
    pub pe_name: String,
    pub family: Family,
    pub nist_level: u8,
    pub operation: Operation,
    pub platform: Platform,
    pub freq_mhz: u32,
    pub functionality: Functionality,
}

impl PeDescriptor {
    /// Builds a descriptor and checks the name against the kernel naming
    /// rule.
    pub fn new(
        id: AlgorithmId,
        pe_name: &str,
        platform: Platform,
        freq_mhz: u32,
        functionality: Functionality,
    ) -> Result<Self, String> {
        if !id.operation.is_device_op() {
            return Err(format!("{id} is software-only"));
        }
        let expected = id.kernel_name();
        if pe_name != expected {
            return Err(format!("PE name `{pe_name}` does not match `{expected}`"));
        }
        Ok(Self {
            pe_name: pe_name.to_string(),
            family: id.family,
            nist_level: id.nist_level,
            operation: id.operation,
            platform,
            freq_mhz,
            functionality,
        })
    }

    pub fn id(&self) -> AlgorithmId {
        AlgorithmId::new(self.family, self.nist_level, self.operation).expect("validated on construction")
    }

    pub fn key(&self) -> PeKey {
        PeKey {
            pe_name: self.pe_name.clone(),
            platform: self.platform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PeKey {
    pub pe_name: String,
    pub platform: Platform,
}

impl fmt::Display for PeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.pe_name, self.platform)
    }
}

/// Replacement phase values, e.g. to explore smaller per-phase overheads
/// than the calibration table reports.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseOverrides {
    pub start_ns: Option<f64>,
    pub wait_ns: Option<f64>,
    pub release_ns: Option<f64>,
}

/// Per-phase costs of one job, in nanoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OverheadModel {
    pub start_ns: f64,
    pub wait_ns: f64,
    pub release_ns: f64,
    #[serde(default)]
    pub overrides: PhaseOverrides,
}

impl OverheadModel {
    pub fn new(start_ns: f64, wait_ns: f64, release_ns: f64) -> Self {
        Self {
            start_ns,
            wait_ns,
            release_ns,
            overrides: PhaseOverrides::default(),
        }
    }

    pub fn with_overrides(mut self, overrides: PhaseOverrides) -> Self {
        self.overrides = overrides;
        self
    }

    /// Phase timing after applying overrides.
    pub fn timing(&self) -> JobTiming {
        JobTiming::from_phases(
            self.overrides.start_ns.unwrap_or(self.start_ns),
            self.overrides.wait_ns.unwrap_or(self.wait_ns),
            self.overrides.release_ns.unwrap_or(self.release_ns),
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct JobTiming {
    pub start_ns: f64,
    pub wait_ns: f64,
    pub release_ns: f64,
    pub total_ns: f64,
}

impl JobTiming {
    pub fn from_phases(start_ns: f64, wait_ns: f64, release_ns: f64) -> Self {
        Self {
            start_ns,
            wait_ns,
            release_ns,
            total_ns: start_ns + wait_ns + release_ns,
        }
    }
}

/// Mean job duration in microseconds implied by a model.
pub fn modeled_mean_us(model: &OverheadModel) -> f64 {
    model.timing().total_ns / 1000.0
}

/// One row of the overhead table, with the table's column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    #[serde(rename = "Algorithm")]
    pub algorithm: String,
    #[serde(rename = "Platform")]
    pub platform: String,
    #[serde(rename = "Security Level")]
    pub security_level: u8,
    #[serde(rename = "Operation")]
    pub operation: String,
    #[serde(rename = "PE Name")]
    pub pe_name: String,
    #[serde(rename = "Functionality")]
    pub functionality: String,
    #[serde(rename = "Frequency [MHz]")]
    pub freq_mhz: u32,
    #[serde(rename = "PE Start [ns]")]
    pub start_ns: f64,
    #[serde(rename = "PE Wait [ns]")]
    pub wait_ns: f64,
    #[serde(rename = "PE Release [ns]")]
    pub release_ns: f64,
    #[serde(rename = "Mean Duration [µs]")]
    pub mean_duration_us: f64,
}

pub const CALIBRATION_HEADER: [&str; 11] = [
    "Algorithm",
    "Platform",
    "Security Level",
    "Operation",
    "PE Name",
    "Functionality",
    "Frequency [MHz]",
    "PE Start [ns]",
    "PE Wait [ns]",
    "PE Release [ns]",
    "Mean Duration [µs]",
];

const BUILTIN_CALIBRATION: &str = include_str!("../data/table2_overhead.csv");
const BUILTIN_CALIBRATION_SHA3: &str = "153e40ddf2bca48279172d9423c5a017621b815d773f99da43aead0157ea1780";
pub const BUILTIN_ROWS: usize = 24;

/// Reads a delimited table and checks the header against `expected`.
pub(crate) fn read_table<T, R>(reader: R, expected: &[&str]) -> Result<Vec<T>, DataError>
where
    T: serde::de::DeserializeOwned,
    R: Read,
{
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if got != expected {
        return Err(DataError::Header {
            expected: expected.join(","),
            got: got.join(","),
        });
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| DataError::Row {
                row: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub(crate) fn check_pinned(text: &str, pin: &str, rows: usize, what: &str) -> Result<(), DataError> {
    let digest = hex::encode(sha3_256(text.as_bytes()));
    if digest != pin {
        return Err(DataError::Integrity(format!("{what}: SHA3-256 {digest} != {pin}")));
    }
    let data_rows = text.lines().skip(1).filter(|l| !l.trim().is_empty()).count();
    if data_rows != rows {
        return Err(DataError::Integrity(format!("{what}: {data_rows} rows, expected {rows}")));
    }
    Ok(())
}

pub fn read_calibration_csv<R: Read>(reader: R) -> Result<Vec<CalibrationRow>, DataError> {
    read_table(reader, &CALIBRATION_HEADER)
}

/// Builds a descriptor from the descriptive columns shared by both tables.
#[allow(clippy::too_many_arguments)]
pub(crate) fn descriptor_from_columns(
    row: usize,
    algorithm: &str,
    platform: &str,
    level: u8,
    operation: &str,
    pe_name: &str,
    functionality: &str,
    freq_mhz: u32,
) -> Result<PeDescriptor, DataError> {
    let bad = |message: String| DataError::Row { row, message };
    let family: Family = algorithm.parse().map_err(|e: CryptoError| bad(e.to_string()))?;
    let operation: Operation = operation.parse().map_err(|e: CryptoError| bad(e.to_string()))?;
    let platform: Platform = platform.parse().map_err(bad)?;
    let functionality: Functionality = functionality.parse().map_err(bad)?;
    let id = AlgorithmId::new(family, level, operation).map_err(|e| bad(e.to_string()))?;
    PeDescriptor::new(id, pe_name, platform, freq_mhz, functionality).map_err(bad)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationEntry {
    pub pe: PeDescriptor,
    pub model: OverheadModel,
    /// The table's own mean column, kept for cross-checking.
    pub table_mean_us: f64,
}

/// Overhead models keyed by (PE name, platform).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Calibration {
    pub entries: BTreeMap<PeKey, CalibrationEntry>,
}

impl Calibration {
    pub fn get(&self, pe_name: &str, platform: Platform) -> Option<&CalibrationEntry> {
        self.entries.get(&PeKey {
            pe_name: pe_name.to_string(),
            platform,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Applies `overrides` to every model.
    pub fn with_overrides(mut self, overrides: PhaseOverrides) -> Self {
        for e in self.entries.values_mut() {
            e.model = e.model.with_overrides(overrides);
        }
        self
    }
}

pub fn load_calibration(rows: &[CalibrationRow]) -> Result<Calibration, DataError> {
    let mut entries = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        let pe = descriptor_from_columns(
            i + 1,
            &r.algorithm,
            &r.platform,
            r.security_level,
            &r.operation,
            &r.pe_name,
            &r.functionality,
            r.freq_mhz,
        )?;
        let key = pe.key();
        for (column, v) in [
            ("PE Start [ns]", r.start_ns),
            ("PE Wait [ns]", r.wait_ns),
            ("PE Release [ns]", r.release_ns),
            ("Mean Duration [µs]", r.mean_duration_us),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(DataError::Negative {
                    key: key.to_string(),
                    column: column.to_string(),
                });
            }
        }
        let entry = CalibrationEntry {
            pe,
            model: OverheadModel::new(r.start_ns, r.wait_ns, r.release_ns),
            table_mean_us: r.mean_duration_us,
        };
        if entries.insert(key.clone(), entry).is_some() {
            return Err(DataError::Duplicate(key.to_string()));
        }
    }
    Ok(Calibration { entries })
}

/// The shipped overhead table, hash-checked before parsing.
pub fn builtin_calibration_rows() -> Result<Vec<CalibrationRow>, DataError> {
    check_pinned(BUILTIN_CALIBRATION, BUILTIN_CALIBRATION_SHA3, BUILTIN_ROWS, "overhead table")?;
    read_calibration_csv(BUILTIN_CALIBRATION.as_bytes())
}

pub fn builtin_calibration() -> Result<Calibration, DataError> {
    load_calibration(&builtin_calibration_rows()?)
}

pub fn builtin_calibration_csv() -> &'static str {
    BUILTIN_CALIBRATION
}

/// Loads `builtin` or a CSV path.
pub fn calibration_from_source(source: &str) -> Result<Calibration, DataError> {
    if source == "builtin" {
        return builtin_calibration();
    }
    let file = std::fs::File::open(source)?;
    load_calibration(&read_calibration_csv(file)?)
}

/// Inputs of one job.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JobArgs {
    Encapsulate { pk: Vec<u8>, coins: Vec<u8> },
    Decapsulate { sk: Vec<u8>, ct: Vec<u8> },
    Sign { sk: Vec<u8>, msg: Vec<u8> },
    Verify { pk: Vec<u8>, sm: Vec<u8> },
}

impl JobArgs {
    pub fn operation(&self) -> Operation {
        match self {
            JobArgs::Encapsulate { .. } => Operation::Encapsulate,
            JobArgs::Decapsulate { .. } => Operation::Decapsulate,
            JobArgs::Sign { .. } => Operation::Sign,
            JobArgs::Verify { .. } => Operation::Verify,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JobOutput {
    Encapsulated { ct: Vec<u8>, ss: Vec<u8> },
    Decapsulated { ss: Vec<u8> },
    Signed { sm: Vec<u8>, attempts: u32 },
    Opened(OpenResult),
}

/// Runs the engine for `id` directly, with no device lifecycle.
pub fn execute(id: AlgorithmId, args: &JobArgs) -> Result<JobOutput, CryptoError> {
    let entry = id.entry();
    Ok(match args {
        JobArgs::Encapsulate { pk, coins } => {
            let (ct, ss) = nist_api::kem_apply(entry, pk, Some(coins))?;
            JobOutput::Encapsulated { ct, ss }
        }
        JobArgs::Decapsulate { sk, ct } => JobOutput::Decapsulated {
            ss: nist_api::kem_verify(entry, sk, ct)?,
        },
        JobArgs::Sign { sk, msg } => {
            let (sm, attempts) = nist_api::sig_apply_counted(entry, sk, msg)?;
            JobOutput::Signed { sm, attempts }
        }
        JobArgs::Verify { pk, sm } => JobOutput::Opened(nist_api::sig_verify(entry, pk, sm)?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeviceOptions {
    /// Deadlock-flagged PEs time out after this many milliseconds instead
    /// of completing.
    pub simulate_deadlock_ms: Option<u64>,
    /// Instances per PE; each instance runs at most one job at a time.
    pub instances_per_pe: usize,
}

impl Default for DeviceOptions {
    fn default() -> Self {
        Self {
            simulate_deadlock_ms: None,
            instances_per_pe: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Software,
    Modeled,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Software => "software",
            BackendKind::Modeled => "modeled",
        })
    }
}

pub trait Backend: Send + Sync {
    fn kind(&self) -> BackendKind;
    fn platform(&self) -> Platform;
    fn pes(&self) -> Vec<PeDescriptor>;
    /// The PE implementing `id` on this backend's platform.
    fn find_pe(&self, id: AlgorithmId) -> Result<PeDescriptor, DeviceError>;
    fn run_job(&self, pe: &PeDescriptor, args: &JobArgs) -> Result<(JobOutput, JobTiming), DeviceError>;
}

/// Counting semaphore over the instances of one PE.
struct InstancePool {
    free: Mutex<usize>,
    cv: Condvar,
}

struct InstanceGuard<'a>(&'a InstancePool);

impl InstancePool {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> InstanceGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        InstanceGuard(self)
    }
}

impl Drop for InstanceGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

struct Slot {
    pe: PeDescriptor,
    model: OverheadModel,
    pool: InstancePool,
    warned: AtomicBool,
}

/// PEs of one platform, keyed by name.
struct PeTable {
    platform: Platform,
    slots: BTreeMap<String, Slot>,
    opts: DeviceOptions,
}

impl PeTable {
    fn new(platform: Platform, calibration: &Calibration, opts: DeviceOptions) -> Self {
        let slots = calibration
            .entries
            .values()
            .filter(|e| e.pe.platform == platform)
            .map(|e| {
                let slot = Slot {
                    pe: e.pe.clone(),
                    model: e.model,
                    pool: InstancePool::new(opts.instances_per_pe),
                    warned: AtomicBool::new(false),
                };
                (e.pe.pe_name.clone(), slot)
            })
            .collect();
        Self { platform, slots, opts }
    }

    fn find(&self, id: AlgorithmId) -> Result<PeDescriptor, DeviceError> {
        if !id.operation.is_device_op() {
            return Err(DeviceError::SoftwareOnly(id.to_string()));
        }
        let name = id.kernel_name();
        self.slots
            .get(&name)
            .map(|s| s.pe.clone())
            .ok_or_else(|| DeviceError::NotFound(format!("{name}/{}", self.platform)))
    }

    /// Runs the lifecycle around `body`, which gets the slot and returns
    /// output plus timing.
    fn run<F>(&self, pe: &PeDescriptor, args: &JobArgs, body: F) -> Result<(JobOutput, JobTiming), DeviceError>
    where
        F: FnOnce(&Slot) -> Result<(JobOutput, JobTiming), DeviceError>,
    {
        let slot = self
            .slots
            .get(&pe.pe_name)
            .filter(|s| s.pe.platform == pe.platform)
            .ok_or_else(|| DeviceError::NotFound(pe.key().to_string()))?;
        if args.operation() != slot.pe.operation {
            return Err(DeviceError::ArgumentMismatch(pe.key().to_string()));
        }
        let _instance = slot.pool.acquire();
        if slot.pe.functionality == Functionality::Deadlock {
            if let Some(ms) = self.opts.simulate_deadlock_ms {
                std::thread::sleep(Duration::from_millis(ms));
                return Err(DeviceError::Timeout {
                    pe: pe.key().to_string(),
                    timeout_ms: ms,
                });
            }
            if !slot.warned.swap(true, Ordering::Relaxed) {
                log::warn!("{} is flagged Deadlock; running it normally", pe.key());
            }
        }
        body(slot)
    }
}

/// Executes on the host CPU and measures each phase.
pub struct SoftwareBackend {
    table: PeTable,
}

impl SoftwareBackend {
    /// Serves the PEs of the shipped table for `platform`.
    pub fn new(platform: Platform, opts: DeviceOptions) -> Result<Self, DataError> {
        Ok(Self::with_catalog(platform, &builtin_calibration()?, opts))
    }

    /// Serves the PEs listed in `catalog`; its timing columns are ignored.
    pub fn with_catalog(platform: Platform, catalog: &Calibration, opts: DeviceOptions) -> Self {
        Self {
            table: PeTable::new(platform, catalog, opts),
        }
    }
}

/// Cost of one `Instant::now()` pair, measured once per process.
pub fn timer_overhead_ns() -> f64 {
    static OVERHEAD: OnceLock<f64> = OnceLock::new();
    *OVERHEAD.get_or_init(|| {
        let mut samples: Vec<u128> = (0..1001)
            .map(|_| {
                let a = Instant::now();
                let b = Instant::now();
                (b - a).as_nanos()
            })
            .collect();
        samples.sort_unstable();
        samples[samples.len() / 2] as f64
    })
}

fn phase_ns(a: Instant, b: Instant, overhead: f64) -> f64 {
    ((b - a).as_nanos() as f64 - overhead).max(0.0)
}

impl Backend for SoftwareBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Software
    }

    fn platform(&self) -> Platform {
        self.table.platform
    }

    fn pes(&self) -> Vec<PeDescriptor> {
        self.table.slots.values().map(|s| s.pe.clone()).collect()
    }

    fn find_pe(&self, id: AlgorithmId) -> Result<PeDescriptor, DeviceError> {
        self.table.find(id)
    }

    fn run_job(&self, pe: &PeDescriptor, args: &JobArgs) -> Result<(JobOutput, JobTiming), DeviceError> {
        let overhead = timer_overhead_ns();
        self.table.run(pe, args, |slot| {
            let t0 = Instant::now();
            let staged = args.clone();
            let t1 = Instant::now();
            let result = execute(slot.pe.id(), &staged);
            let t2 = Instant::now();
            let output = result?.clone();
            let t3 = Instant::now();
            let timing = JobTiming::from_phases(
                phase_ns(t0, t1, overhead),
                phase_ns(t1, t2, overhead),
                phase_ns(t2, t3, overhead),
            );
            Ok((output, timing))
        })
    }
}

/// Executes on the host for correctness and reports calibration timing.
pub struct ModeledBackend {
    table: PeTable,
}

impl ModeledBackend {
    pub fn new(platform: Platform, calibration: &Calibration, opts: DeviceOptions) -> Self {
        Self {
            table: PeTable::new(platform, calibration, opts),
        }
    }

    pub fn model(&self, pe_name: &str) -> Option<OverheadModel> {
        self.table.slots.get(pe_name).map(|s| s.model)
    }
}

impl Backend for ModeledBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Modeled
    }

    fn platform(&self) -> Platform {
        self.table.platform
    }

    fn pes(&self) -> Vec<PeDescriptor> {
        self.table.slots.values().map(|s| s.pe.clone()).collect()
    }

    fn find_pe(&self, id: AlgorithmId) -> Result<PeDescriptor, DeviceError> {
        self.table.find(id)
    }

    fn run_job(&self, pe: &PeDescriptor, args: &JobArgs) -> Result<(JobOutput, JobTiming), DeviceError> {
        self.table.run(pe, args, |slot| {
            let output = execute(slot.pe.id(), args)?;
            Ok((output, slot.model.timing()))
        })
    }
}

/// Either backend, chosen at run time.
pub fn make_backend(
    kind: BackendKind,
    platform: Platform,
    calibration: Option<&Calibration>,
    opts: DeviceOptions,
) -> Result<Box<dyn Backend>, DataError> {
    match kind {
        BackendKind::Software => Ok(Box::new(SoftwareBackend::new(platform, opts)?)),
        BackendKind::Modeled => {
            let cal = calibration
                .ok_or_else(|| DataError::Precondition("the modeled backend needs a calibration table".into()))?;
            Ok(Box::new(ModeledBackend::new(platform, cal, opts)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_rows() {
        let cal = builtin_calibration().unwrap();
        assert_eq!(cal.len(), 24);
        let e = cal.get("kyber2_enc", Platform::Vc709).unwrap();
        assert_eq!(e.model, OverheadModel::new(33879.021, 625722.209, 24261.589));
        assert!((modeled_mean_us(&e.model) - 683.862819).abs() < 1e-9);
        let e = cal.get("dilithium5_sign", Platform::Au280).unwrap();
        assert_eq!(e.model.wait_ns, 17644266.313);
        assert!((modeled_mean_us(&cal.get("kyber2_dec", Platform::Au280).unwrap().model) - 562.625529).abs() < 1e-9);
    }

    #[test]
    fn empty_and_zero() {
        assert!(load_calibration(&[]).unwrap().is_empty());
        assert_eq!(modeled_mean_us(&OverheadModel::default()), 0.0);
    }

    #[test]
    fn rejects_duplicates_and_negatives() {
        let mut rows = builtin_calibration_rows().unwrap();
        rows.push(rows[0].clone());
        assert!(matches!(load_calibration(&rows), Err(DataError::Duplicate(_))));
        let mut rows = builtin_calibration_rows().unwrap();
        rows[3].release_ns = -1.0;
        assert!(matches!(load_calibration(&rows), Err(DataError::Negative { .. })));
    }

    #[test]
    fn rejects_misnamed_pe() {
        let mut rows = builtin_calibration_rows().unwrap();
        rows[0].pe_name = "kyber1_enc".into();
        assert!(matches!(load_calibration(&rows), Err(DataError::Row { row: 1, .. })));
    }

    #[test]
    fn overrides_replace_phases() {
        let m = OverheadModel::new(10.0, 20.0, 30.0).with_overrides(PhaseOverrides {
            start_ns: Some(1.0),
            wait_ns: None,
            release_ns: Some(2.0),
        });
        assert_eq!(m.timing(), JobTiming::from_phases(1.0, 20.0, 2.0));
    }
}
