//! Resource data, the arithmetic applied to it, and figure data series
//! written as CSV plus a JSON mirror.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench::{ratios, BenchRecord};
use crate::device::{check_pinned, descriptor_from_columns, read_table, Calibration, Functionality, Platform};
use crate::error::DataError;
use crate::nist_api::{Family, Operation};

/// One row of the resource table, with the table's column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceRow {
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
    #[serde(rename = "kLUTs")]
    pub klut: f64,
    #[serde(rename = "kFFs")]
    pub kff: f64,
    #[serde(rename = "BRAM")]
    pub bram: f64,
    #[serde(rename = "DSPs")]
    pub dsp: f64,
}

pub const RESOURCE_HEADER: [&str; 11] = [
    "Algorithm",
    "Platform",
    "Security Level",
    "Operation",
    "PE Name",
    "Functionality",
    "Frequency [MHz]",
    "kLUTs",
    "kFFs",
    "BRAM",
    "DSPs",
];

const BUILTIN_RESOURCES: &str = include_str!("../data/table1_resources.csv");
const BUILTIN_RESOURCES_SHA3: &str = "9443c9a188d39572b834ad22afd89f3eb2d1739e9b33866996ae2a5562879618";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResourceRecord {
    pub pe_name: String,
    pub family: Family,
    pub platform: Platform,
    pub security_level: u8,
    pub operation: Operation,
    pub freq_mhz: u32,
    pub klut: f64,
    pub kff: f64,
    pub bram: f64,
    pub dsp: f64,
    pub functionality: Functionality,
}

pub fn read_resource_csv<R: Read>(reader: R) -> Result<Vec<ResourceRow>, DataError> {
    read_table(reader, &RESOURCE_HEADER)
}

pub fn load_resources(rows: &[ResourceRow]) -> Result<Vec<ResourceRecord>, DataError> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::with_capacity(rows.len());
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
        for (column, v) in [("kLUTs", r.klut), ("kFFs", r.kff), ("BRAM", r.bram), ("DSPs", r.dsp)] {
            if !v.is_finite() || v < 0.0 {
                return Err(DataError::Negative {
                    key: key.to_string(),
                    column: column.to_string(),
                });
            }
        }
        if seen.insert(key.clone(), ()).is_some() {
            return Err(DataError::Duplicate(key.to_string()));
        }
        out.push(ResourceRecord {
            pe_name: pe.pe_name,
            family: pe.family,
            platform: pe.platform,
            security_level: pe.nist_level,
            operation: pe.operation,
            freq_mhz: pe.freq_mhz,
            klut: r.klut,
            kff: r.kff,
            bram: r.bram,
            dsp: r.dsp,
            functionality: pe.functionality,
        });
    }
    Ok(out)
}

/// The shipped resource table, hash-checked before parsing.
pub fn builtin_resources() -> Result<Vec<ResourceRecord>, DataError> {
    check_pinned(BUILTIN_RESOURCES, BUILTIN_RESOURCES_SHA3, 24, "resource table")?;
    load_resources(&read_resource_csv(BUILTIN_RESOURCES.as_bytes())?)
}

pub fn builtin_resources_csv() -> &'static str {
    BUILTIN_RESOURCES
}

/// Sum of kLUTs, kFFs, BRAM and DSPs; LUTs and FFs count in thousands.
pub fn resource_total(rec: &ResourceRecord) -> f64 {
    rec.klut + rec.kff + rec.bram + rec.dsp
}

/// Label value for a total: rounded half up.
pub fn display_total(total: f64) -> i64 {
    (total + 0.5).floor() as i64
}

/// Resource total times mean duration. A stand-in for an area-time
/// product; the weighting of resource kinds is not canonical.
pub fn area_time(rec: &ResourceRecord, mean_us: f64) -> Result<f64, DataError> {
    if mean_us.is_nan() || mean_us <= 0.0 {
        return Err(DataError::Precondition(format!("mean duration must be positive, got {mean_us}")));
    }
    Ok(resource_total(rec) * mean_us)
}

/// Per family, the geometric mean over PEs of `a.freq / b.freq`. Both sets
/// must contain the same PE names.
pub fn frequency_ratio(a: &[ResourceRecord], b: &[ResourceRecord]) -> Result<BTreeMap<Family, f64>, DataError> {
    let index: BTreeMap<&str, &ResourceRecord> = b.iter().map(|r| (r.pe_name.as_str(), r)).collect();
    if index.len() != a.len() {
        return Err(DataError::Precondition(format!(
            "PE sets differ in size: {} vs {}",
            a.len(),
            index.len()
        )));
    }
    let mut logs: BTreeMap<Family, (f64, usize)> = BTreeMap::new();
    for ra in a {
        let rb = index
            .get(ra.pe_name.as_str())
            .ok_or_else(|| DataError::Precondition(format!("{} missing from second set", ra.pe_name)))?;
        if ra.freq_mhz == 0 || rb.freq_mhz == 0 {
            return Err(DataError::Precondition(format!("{} has zero frequency", ra.pe_name)));
        }
        let e = logs.entry(ra.family).or_default();
        e.0 += (f64::from(ra.freq_mhz) / f64::from(rb.freq_mhz)).ln();
        e.1 += 1;
    }
    Ok(logs.into_iter().map(|(f, (s, n))| (f, (s / n as f64).exp())).collect())
}

/// Records of one platform, in input order.
pub fn on_platform(records: &[ResourceRecord], platform: Platform) -> Vec<ResourceRecord> {
    records.iter().filter(|r| r.platform == platform).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Row {
    #[serde(rename = "PE Name")]
    pub pe_name: String,
    #[serde(rename = "Algorithm")]
    pub algorithm: String,
    #[serde(rename = "Security Level")]
    pub security_level: u8,
    #[serde(rename = "Operation")]
    pub operation: String,
    #[serde(rename = "Platform")]
    pub platform: Platform,
    #[serde(rename = "Frequency [MHz]")]
    pub freq_mhz: u32,
    #[serde(rename = "kLUTs")]
    pub klut: f64,
    #[serde(rename = "kFFs")]
    pub kff: f64,
    #[serde(rename = "BRAM")]
    pub bram: f64,
    #[serde(rename = "DSPs")]
    pub dsp: f64,
    #[serde(rename = "Total")]
    pub total: f64,
    #[serde(rename = "Total (rounded)")]
    pub total_rounded: i64,
}

pub const FIG1_HEADER: [&str; 12] = [
    "PE Name",
    "Algorithm",
    "Security Level",
    "Operation",
    "Platform",
    "Frequency [MHz]",
    "kLUTs",
    "kFFs",
    "BRAM",
    "DSPs",
    "Total",
    "Total (rounded)",
];

/// One bar per (PE, platform), the two platforms of a PE adjacent.
pub fn fig1_rows(records: &[ResourceRecord]) -> Vec<Fig1Row> {
    let mut sorted: Vec<&ResourceRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.family, r.security_level, r.operation, r.platform));
    sorted
        .into_iter()
        .map(|r| {
            let total = resource_total(r);
            Fig1Row {
                pe_name: r.pe_name.clone(),
                algorithm: r.family.table_name().to_string(),
                security_level: r.security_level,
                operation: r.operation.table_name().to_string(),
                platform: r.platform,
                freq_mhz: r.freq_mhz,
                klut: r.klut,
                kff: r.kff,
                bram: r.bram,
                dsp: r.dsp,
                total,
                total_rounded: display_total(total),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig4Row {
    #[serde(rename = "PE Name")]
    pub pe_name: String,
    #[serde(rename = "Platform")]
    pub platform: String,
    #[serde(rename = "Mean Duration [µs]")]
    pub mean_us: f64,
    #[serde(rename = "Baseline [µs]")]
    pub baseline_us: f64,
    #[serde(rename = "Ratio")]
    pub ratio: f64,
    #[serde(rename = "Log Scale")]
    pub log_scale: bool,
}

pub const FIG4_HEADER: [&str; 6] = [
    "PE Name",
    "Platform",
    "Mean Duration [µs]",
    "Baseline [µs]",
    "Ratio",
    "Log Scale",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig6Row {
    #[serde(rename = "PE Name")]
    pub pe_name: String,
    #[serde(rename = "Platform")]
    pub platform: String,
    #[serde(rename = "PE Start [ns]")]
    pub start_ns: f64,
    #[serde(rename = "PE Release [ns]")]
    pub release_ns: f64,
    #[serde(rename = "Overhead [ns]")]
    pub overhead_ns: f64,
    #[serde(rename = "Baseline [ns]")]
    pub baseline_ns: f64,
    #[serde(rename = "Overhead Ratio")]
    pub overhead_ratio: f64,
    #[serde(rename = "Overhead Dominated")]
    pub overhead_dominated: bool,
}

pub const FIG6_HEADER: [&str; 8] = [
    "PE Name",
    "Platform",
    "PE Start [ns]",
    "PE Release [ns]",
    "Overhead [ns]",
    "Baseline [ns]",
    "Overhead Ratio",
    "Overhead Dominated",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaTimeRow {
    #[serde(rename = "PE Name")]
    pub pe_name: String,
    #[serde(rename = "Platform")]
    pub platform: Platform,
    #[serde(rename = "Total")]
    pub total: f64,
    #[serde(rename = "Mean Duration [µs]")]
    pub mean_us: f64,
    #[serde(rename = "Area-Time")]
    pub area_time: f64,
}

pub const AREA_TIME_HEADER: [&str; 5] = ["PE Name", "Platform", "Total", "Mean Duration [µs]", "Area-Time"];

pub const BENCH_HEADER: [&str; 12] = [
    "id",
    "platform",
    "backend",
    "runs",
    "mean_total_us",
    "mean_start_ns",
    "mean_wait_ns",
    "mean_release_ns",
    "stddev_total_us",
    "mean_attempts",
    "valid",
    "error",
];

/// Records replaying the calibration table, one per PE, in key order.
pub fn records_from_calibration(cal: &Calibration) -> Vec<BenchRecord> {
    cal.entries
        .values()
        .map(|e| {
            let t = e.model.timing();
            BenchRecord {
                id: e.pe.pe_name.clone(),
                platform: e.pe.platform.to_string(),
                backend: "calibration".into(),
                runs: 1000,
                mean_total_us: t.total_ns / 1000.0,
                mean_start_ns: t.start_ns,
                mean_wait_ns: t.wait_ns,
                mean_release_ns: t.release_ns,
                stddev_total_us: 0.0,
                mean_attempts: None,
                valid: true,
                error: None,
            }
        })
        .collect()
}

fn baseline_index(baselines: &[BenchRecord]) -> BTreeMap<&str, &BenchRecord> {
    baselines.iter().map(|b| (b.id.as_str(), b)).collect()
}

/// PE mean against the baseline of the same kernel. PEs without a baseline
/// are left out.
pub fn fig4_rows(records: &[BenchRecord], baselines: &[BenchRecord]) -> Vec<Fig4Row> {
    let base = baseline_index(baselines);
    records
        .iter()
        .filter_map(|r| {
            let b = base.get(r.id.as_str())?;
            let c = ratios(r.mean_total_us, 0.0, b.mean_total_us);
            Some(Fig4Row {
                pe_name: r.id.clone(),
                platform: r.platform.clone(),
                mean_us: r.mean_total_us,
                baseline_us: b.mean_total_us,
                ratio: c.total_ratio,
                log_scale: true,
            })
        })
        .collect()
}

/// Start and release phases against the baseline of the same kernel.
pub fn fig6_rows(records: &[BenchRecord], baselines: &[BenchRecord]) -> Vec<Fig6Row> {
    let base = baseline_index(baselines);
    records
        .iter()
        .filter_map(|r| {
            let b = base.get(r.id.as_str())?;
            let overhead_ns = r.mean_start_ns + r.mean_release_ns;
            let baseline_ns = b.mean_total_us * 1000.0;
            let c = ratios(r.mean_total_us * 1000.0, overhead_ns, baseline_ns);
            Some(Fig6Row {
                pe_name: r.id.clone(),
                platform: r.platform.clone(),
                start_ns: r.mean_start_ns,
                release_ns: r.mean_release_ns,
                overhead_ns,
                baseline_ns,
                overhead_ratio: c.overhead_ratio,
                overhead_dominated: c.overhead_dominated,
            })
        })
        .collect()
}

/// Area-time for every PE present in both tables.
pub fn area_time_rows(resources: &[ResourceRecord], cal: &Calibration) -> Result<Vec<AreaTimeRow>, DataError> {
    let mut rows = Vec::new();
    for r in resources {
        let Some(e) = cal.get(&r.pe_name, r.platform) else {
            continue;
        };
        let mean_us = e.model.timing().total_ns / 1000.0;
        rows.push(AreaTimeRow {
            pe_name: r.pe_name.clone(),
            platform: r.platform,
            total: resource_total(r),
            mean_us,
            area_time: area_time(r, mean_us)?,
        });
    }
    Ok(rows)
}

/// A figure's data series.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Fig1(Vec<Fig1Row>),
    Fig4(Vec<Fig4Row>),
    Fig6(Vec<Fig6Row>),
    AreaTime(Vec<AreaTimeRow>),
    Bench(Vec<BenchRecord>),
}

impl Report {
    pub fn name(&self) -> &'static str {
        match self {
            Report::Fig1(_) => "fig1",
            Report::Fig4(_) => "fig4",
            Report::Fig6(_) => "fig6",
            Report::AreaTime(_) => "area_time",
            Report::Bench(_) => "bench",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Report::Fig1(r) => r.len(),
            Report::Fig4(r) => r.len(),
            Report::Fig6(r) => r.len(),
            Report::AreaTime(r) => r.len(),
            Report::Bench(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn csv_of<T: Serialize>(header: &[&str], rows: &[T]) -> Result<String, DataError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| DataError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render_csv(report: &Report) -> Result<String, DataError> {
    match report {
        Report::Fig1(r) => csv_of(&FIG1_HEADER, r),
        Report::Fig4(r) => csv_of(&FIG4_HEADER, r),
        Report::Fig6(r) => csv_of(&FIG6_HEADER, r),
        Report::AreaTime(r) => csv_of(&AREA_TIME_HEADER, r),
        Report::Bench(r) => csv_of(&BENCH_HEADER, r),
    }
}

#[derive(Serialize)]
struct Fig1Bar {
    #[serde(rename = "Platform")]
    platform: Platform,
    #[serde(rename = "Frequency [MHz]")]
    freq_mhz: u32,
    #[serde(rename = "Total")]
    total: f64,
    #[serde(rename = "Total (rounded)")]
    total_rounded: i64,
}

#[derive(Serialize)]
struct Fig1Group<'a> {
    #[serde(rename = "PE Name")]
    pe_name: &'a str,
    #[serde(rename = "Algorithm")]
    algorithm: &'a str,
    #[serde(rename = "Security Level")]
    security_level: u8,
    #[serde(rename = "Operation")]
    operation: &'a str,
    bars: Vec<Fig1Bar>,
}

fn fig1_groups(rows: &[Fig1Row]) -> Vec<Fig1Group<'_>> {
    let mut groups: Vec<Fig1Group<'_>> = Vec::new();
    for r in rows {
        let bar = Fig1Bar {
            platform: r.platform,
            freq_mhz: r.freq_mhz,
            total: r.total,
            total_rounded: r.total_rounded,
        };
        match groups.last_mut() {
            Some(g) if g.pe_name == r.pe_name => g.bars.push(bar),
            _ => groups.push(Fig1Group {
                pe_name: &r.pe_name,
                algorithm: &r.algorithm,
                security_level: r.security_level,
                operation: &r.operation,
                bars: vec![bar],
            }),
        }
    }
    groups
}

pub fn render_json(report: &Report) -> Result<String, DataError> {
    let mut s = match report {
        Report::Fig1(r) => serde_json::to_string_pretty(&fig1_groups(r))?,
        Report::Fig4(r) => serde_json::to_string_pretty(&serde_json::json!({ "log_scale": true, "rows": r }))?,
        Report::Fig6(r) => serde_json::to_string_pretty(r)?,
        Report::AreaTime(r) => serde_json::to_string_pretty(r)?,
        Report::Bench(r) => serde_json::to_string_pretty(r)?,
    };
    s.push('\n');
    Ok(s)
}

/// Writes `<name>.csv` and `<name>.json` into `dir`.
pub fn emit(report: &Report, dir: &Path) -> Result<Vec<PathBuf>, DataError> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", report.name()));
    let json_path = dir.join(format!("{}.json", report.name()));
    std::fs::write(&csv_path, render_csv(report)?)?;
    std::fs::write(&json_path, render_json(report)?)?;
    Ok(vec![csv_path, json_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero() -> ResourceRecord {
        ResourceRecord {
            pe_name: "kyber2_enc".into(),
            family: Family::Kyber,
            platform: Platform::Vc709,
            security_level: 1,
            operation: Operation::Encapsulate,
            freq_mhz: 100,
            klut: 0.0,
            kff: 0.0,
            bram: 0.0,
            dsp: 0.0,
            functionality: Functionality::Working,
        }
    }

    #[test]
    fn totals() {
        let recs = builtin_resources().unwrap();
        assert_eq!(recs.len(), 24);
        assert!((resource_total(&recs[0]) - 304.712).abs() < 1e-9);
        assert_eq!(display_total(resource_total(&recs[0])), 305);
        assert_eq!(display_total(resource_total(&recs[6])), 285);
        assert_eq!(resource_total(&zero()), 0.0);
        assert_eq!(display_total(2.5), 3);
    }

    #[test]
    fn area_time_arithmetic() {
        let mut r = zero();
        r.dsp = 300.0;
        assert!((area_time(&r, 683.862819).unwrap() - 205158.8457).abs() < 1e-6);
        assert_eq!(area_time(&r, 2.0).unwrap(), 2.0 * area_time(&r, 1.0).unwrap());
        assert!(matches!(area_time(&r, 0.0), Err(DataError::Precondition(_))));
    }

    #[test]
    fn same_platform_ratio_is_one() {
        let vc = on_platform(&builtin_resources().unwrap(), Platform::Vc709);
        for v in frequency_ratio(&vc, &vc).unwrap().values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    fn field_names<T: Serialize>(row: &T) -> Vec<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(row).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        rdr.headers().unwrap().iter().map(str::to_string).collect()
    }

    fn owned(h: &[&str]) -> Vec<String> {
        h.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn headers_match_serde_names() {
        let res = builtin_resources().unwrap();
        let cal = crate::device::builtin_calibration().unwrap();
        let recs = records_from_calibration(&cal);
        assert_eq!(field_names(&fig1_rows(&res)[0]), owned(&FIG1_HEADER));
        assert_eq!(field_names(&fig4_rows(&recs, &recs)[0]), owned(&FIG4_HEADER));
        assert_eq!(field_names(&fig6_rows(&recs, &recs)[0]), owned(&FIG6_HEADER));
        assert_eq!(field_names(&area_time_rows(&res, &cal).unwrap()[0]), owned(&AREA_TIME_HEADER));
        assert_eq!(field_names(&recs[0]), owned(&BENCH_HEADER));
    }
}
