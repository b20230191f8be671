use std::path::{Path, PathBuf};

use anyhow::Result;
use lmg_core::zne::ZneSeries;

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "LMG_OUTPUT_DIR";

/// Flag beats environment beats config.
pub fn resolve_output_dir(flag: Option<&Path>, configured: &Path) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => configured.to_path_buf(),
    }
}

pub fn write_zne_csv(path: &Path, series: &ZneSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "insertions", "r", "cz_count", "energy", "std_error", "circuits"])?;
    for p in &series.points {
        w.write_record([
            series.method.to_string(),
            p.insertions.to_string(),
            p.r.to_string(),
            p.cz_count.to_string(),
            p.energy.to_string(),
            p.std_error.to_string(),
            p.samples.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Plain numeric table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
