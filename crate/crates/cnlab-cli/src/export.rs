//! Deterministic file exports: CSV at 40 significant digits plus JSON
//! mirrors carrying a schema_version field.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use cnlab::lab::Pipeline;
use cnlab::numerics::real::MpReal;
use cnlab::report::Verdict;
use cnlab::toeplitz::CurveScan;

pub const SIG_DIGITS: usize = 40;

pub fn fmt(v: &MpReal) -> String {
    v.to_decimal_string(SIG_DIGITS)
}

pub fn write_text(path: &Path, content: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, content)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut doc = serde_json::to_value(value).expect("serializable");
    if let serde_json::Value::Object(map) = &mut doc {
        map.insert("schema_version".into(), serde_json::json!(1));
    }
    write_text(path, &serde_json::to_string_pretty(&doc).expect("serializable"))
}

pub fn recurrence_csv(pipe: &Pipeline) -> String {
    let mut out = String::from("n,j,a_value\n");
    for (n, row) in pipe.rec_table.rows().iter().enumerate() {
        for (d, v) in row.iter().enumerate() {
            out.push_str(&format!("{n},{},{}\n", n - d, fmt(v)));
        }
    }
    out
}

pub fn limits_csv(pipe: &Pipeline) -> String {
    let mut out = String::from("i,j,value,error,drift\n");
    for ((i, j), v, e) in pipe.limits_raw.entries() {
        out.push_str(&format!(
            "{i},{j},{},{},{}\n",
            fmt(&v),
            fmt(&e),
            fmt(pipe.limits_raw.drift(i as i64, j as i64))
        ));
    }
    out
}

pub fn gamma_csv(scan: &CurveScan) -> String {
    let mut out = String::from("re,im,k,tie_gap\n");
    for pt in &scan.points {
        for (k, gap) in pt.gaps.iter().enumerate() {
            out.push_str(&format!("{:.17e},{:.17e},{},{:.17e}\n", pt.re, pt.im, k + 1, gap));
        }
    }
    out
}

pub fn arcs_csv(pipe: &Pipeline) -> String {
    let mut out = String::from("k,arc_lo,arc_hi,delta_lo,delta_hi\n");
    for k in 1..=pipe.p() {
        let arc = &pipe.arcs[k - 1];
        let delta = pipe.system.delta(k);
        out.push_str(&format!(
            "{k},{},{},{},{}\n",
            fmt(&arc.a),
            fmt(&arc.b),
            fmt(&delta.a),
            fmt(&delta.b)
        ));
    }
    out
}

pub fn density_csv(pipe: &Pipeline) -> String {
    let mut out = String::from("x,value,layer,j\n");
    for table in pipe.nu_tables.iter().chain(&pipe.rho_tables) {
        for (x, v) in table.xs.iter().zip(&table.values) {
            out.push_str(&format!("{},{},{},{}\n", fmt(x), fmt(v), table.layer, table.index));
        }
    }
    out
}

#[derive(Serialize)]
pub struct Manifest {
    pub version: String,
    pub config_hash: String,
    pub created_unix: u64,
}

#[derive(Serialize)]
pub struct VerdictFile {
    pub manifest: Manifest,
    pub experiment: String,
    pub verdicts: Vec<Verdict>,
    pub files: Vec<String>,
}

pub fn manifest_for(config_bytes: &[u8]) -> Manifest {
    let mut hasher = Sha256::new();
    hasher.update(config_bytes);
    let digest = hasher.finalize();
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: hex,
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    }
}

pub fn verdict_path(out_dir: &Path, experiment: &str) -> PathBuf {
    out_dir.join(format!("verdicts-{experiment}.json"))
}

pub fn write_verdicts(
    out_dir: &Path,
    experiment: &str,
    config_bytes: &[u8],
    verdicts: &[Verdict],
    files: Vec<String>,
) -> std::io::Result<()> {
    let doc = VerdictFile {
        manifest: manifest_for(config_bytes),
        experiment: experiment.to_string(),
        verdicts: verdicts.to_vec(),
        files,
    };
    write_json(&verdict_path(out_dir, experiment), &doc)
}
