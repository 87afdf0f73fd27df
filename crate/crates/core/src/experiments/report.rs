//! CSV output for study results and training histories.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::ResultRow;
use crate::unfolding_net::EpochStats;
use crate::Result;

pub const RESULT_HEADER: [&str; 4] = ["curve", "test_snr_db", "nmse", "n_samples"];
pub const HISTORY_HEADER: [&str; 3] = ["epoch", "learning_rate", "train_nmse"];

/// Scientific notation with 10 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.9e}")
}

pub fn write_results(rows: &[ResultRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RESULT_HEADER)?;
    for r in rows {
        out.write_record([
            r.curve.clone(),
            format_float(r.test_snr_db),
            format_float(r.nmse),
            r.n_samples.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_history(history: &[EpochStats], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HISTORY_HEADER)?;
    for e in history {
        out.write_record([
            e.epoch.to_string(),
            format_float(e.learning_rate),
            format_float(e.mean_nmse),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `<stem>_<UTC timestamp>.csv` inside `dir`.
pub fn timestamped_path(dir: &Path, stem: &str) -> PathBuf {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    dir.join(format!("{stem}_{stamp}.csv"))
}

/// Writes `rows` to a fresh timestamped file and returns its path.
pub fn write_results_file(dir: &Path, stem: &str, rows: &[ResultRow]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = timestamped_path(dir, stem);
    write_results(rows, fs::File::create(&path)?)?;
    Ok(path)
}
