//! On-disk beat bundle: `beats.csv` (one beat per row) and `manifest.json`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wscec::ingest::{GroundTruthLabel, Heartbeat, HEARTBEAT_LEN};

use crate::Failure;

pub const BEATS_FILE: &str = "beats.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
pub struct IngestManifest {
    pub version: String,
    pub count: usize,
    pub source: String,
    pub format: String,
    pub parameters: serde_json::Value,
}

pub fn write_beats(path: &Path, beats: &[Heartbeat]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let mut header = vec!["source_id".to_string(), "r_index".into(), "label".into()];
    header.extend((0..HEARTBEAT_LEN).map(|i| format!("s{i}")));
    w.write_record(&header).map_err(Failure::io)?;
    for b in beats {
        let mut row = vec![
            b.source_id.clone(),
            b.r_index.to_string(),
            b.annotation.code().to_string(),
        ];
        row.extend(b.samples.iter().map(f64::to_string));
        w.write_record(&row).map_err(Failure::io)?;
    }
    w.flush().map_err(|e| Failure::input(e.to_string()))
}

/// Accepts a bundle directory or a `beats.csv` path.
pub fn beats_path(input: &Path) -> PathBuf {
    if input.is_dir() {
        input.join(BEATS_FILE)
    } else {
        input.to_path_buf()
    }
}

pub fn read_beats(path: &Path) -> Result<Vec<Heartbeat>, Failure> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let mut beats = Vec::new();
    for (i, row) in r.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let bad = |what: &str| Failure::input(format!("{} line {line}: {what}", path.display()));
        if row.len() != 3 + HEARTBEAT_LEN {
            return Err(bad(&format!(
                "expected {} fields, found {}",
                3 + HEARTBEAT_LEN,
                row.len()
            )));
        }
        let r_index: usize = row[1].parse().map_err(|_| bad("bad r_index"))?;
        let label = GroundTruthLabel::parse(&row[2]).ok_or_else(|| bad("unknown label"))?;
        let samples = (3..row.len())
            .map(|j| row[j].parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad("non-numeric sample"))?;
        beats.push(Heartbeat::new(samples, r_index, label, &row[0]).map_err(|e| bad(&e.to_string()))?);
    }
    if beats.is_empty() {
        return Err(Failure::input(format!("{}: no beats", path.display())));
    }
    Ok(beats)
}

/// File-name-safe stem for a beat.
pub fn beat_stem(index: usize, source_id: &str) -> String {
    let safe: String = source_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect();
    format!("beat_{index:05}_{safe}")
}
