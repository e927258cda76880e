//! Deterministic CSV and summary writers. Fixed column order, header first,
//! period decimal separator, money to four decimals.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

use wgsp::scorer::TraceRow;

pub fn money(x: f64) -> String {
    format!("{x:.4}")
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// `t, score-times-bid per advertiser, rank per advertiser, revenue,
/// unrevealed count` — one row per score adjustment.
pub fn write_trace(path: &Path, rows: &[TraceRow<f64>], n: usize) -> Result<()> {
    let mut w = create(path)?;
    let mut header = String::from("t");
    for i in 1..=n {
        header.push_str(&format!(",score_times_bid_{i}"));
    }
    for i in 1..=n {
        header.push_str(&format!(",rank_{i}"));
    }
    header.push_str(",revenue,unrevealed");
    writeln!(w, "{header}")?;
    for row in rows {
        let mut line = row.adjustments.to_string();
        for eb in &row.score_times_bid {
            line.push(',');
            line.push_str(&money(*eb));
        }
        for rank in &row.rank_of {
            line.push(',');
            line.push_str(&rank.to_string());
        }
        line.push(',');
        line.push_str(&money(row.revenue));
        line.push(',');
        line.push_str(&row.unrevealed.to_string());
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Simple `key,value` summary file.
pub fn write_summary(path: &Path, pairs: &[(String, String)]) -> Result<()> {
    let mut w = create(path)?;
    for (key, value) in pairs {
        writeln!(w, "{key},{value}")?;
    }
    w.flush()?;
    Ok(())
}
