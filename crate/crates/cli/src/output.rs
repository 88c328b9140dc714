use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use isrs_gn::gn_engine::{LaunchSweep, NliReport};
use isrs_gn::units::w_to_dbm;

#[derive(Serialize)]
struct ReportRow<'a> {
    channel_index: usize,
    f_thz: f64,
    power_dbm: f64,
    sigma2_nli_dbm: f64,
    snr_nli_db: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    source: Option<&'a str>,
}

#[derive(Serialize)]
pub struct CompareRow {
    pub channel_index: usize,
    pub f_thz: f64,
    pub power_dbm: f64,
    pub snr_model_db: f64,
    pub snr_ssfm_db: f64,
    pub deviation_db: f64,
    pub mean_abs_dev_db: f64,
}

#[derive(Serialize)]
struct SweepRow {
    channel_index: usize,
    power_dbm: f64,
    sigma2_ase_dbm: f64,
    sigma2_nli_dbm: f64,
    snr_db: f64,
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Report rows sorted by channel index.
pub fn write_report(path: &Path, report: &NliReport, source: Option<&str>) -> Result<()> {
    let mut rows: Vec<ReportRow> = report
        .entries
        .iter()
        .map(|e| ReportRow {
            channel_index: e.channel_index,
            f_thz: e.f_thz,
            power_dbm: e.power_dbm(),
            sigma2_nli_dbm: e.sigma2_nli_dbm(),
            snr_nli_db: e.snr_nli_db,
            source,
        })
        .collect();
    rows.sort_by_key(|r| r.channel_index);
    write_rows(path, &rows)
}

pub fn write_sweep(path: &Path, sweep: &LaunchSweep) -> Result<()> {
    let rows: Vec<SweepRow> = sweep
        .points
        .iter()
        .map(|p| SweepRow {
            channel_index: sweep.channel_index,
            power_dbm: p.power_dbm,
            sigma2_ase_dbm: w_to_dbm(p.sigma2_ase_w),
            sigma2_nli_dbm: w_to_dbm(p.sigma2_nli_w),
            snr_db: p.snr_db,
        })
        .collect();
    write_rows(path, &rows)
}

/// Everything needed to rerun a job: the resolved configuration, its hash,
/// the seed and the tool version. No timestamps, so reruns are byte-identical.
#[derive(Serialize)]
pub struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    seed: u64,
    config_sha256: String,
    config: serde_json::Value,
    output: String,
    output_sha256: String,
    summary: serde_json::Value,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value, out: &Path, summary: serde_json::Value) -> Result<Self> {
        let data = fs::read(out).with_context(|| format!("reading back {}", out.display()))?;
        Ok(Self {
            tool: "isrs-gn",
            version: isrs_gn::VERSION,
            command: command.into(),
            seed,
            config_sha256: sha256_hex(&serde_json::to_vec(&config)?),
            config,
            output: out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            output_sha256: sha256_hex(&data),
            summary,
        })
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn write_manifest(out: &Path, manifest: &Manifest) -> Result<()> {
    let path = manifest_path(out);
    let text = serde_json::to_string_pretty(manifest)? + "\n";
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}
