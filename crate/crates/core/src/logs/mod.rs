//! Event log ingestion and synthesis.

mod synth;

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use synth::{sample, synthesize, DistributionSpec, LogSpec};

use crate::shs::{EventKind, ShsEvent};

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: {kind} for patient {patient} precedes its ER event")]
    Order { line: u64, patient: String, kind: EventKind },
    #[error("invalid log spec: {0}")]
    Spec(String),
}

#[derive(Deserialize, Serialize)]
struct Row {
    timestamp: u64,
    patient_id: String,
    event: String,
}

/// Reads a `timestamp,patient_id,event` CSV log, sorted by timestamp.
pub fn ingest(path: impl AsRef<Path>) -> Result<Vec<ShsEvent>, LogError> {
    read_log(std::fs::File::open(path)?)
}

pub fn read_log(input: impl Read) -> Result<Vec<ShsEvent>, LogError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut rows: Vec<(u64, ShsEvent)> = Vec::new();
    for rec in reader.deserialize::<Row>() {
        let row = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            LogError::Malformed { line, message: e.to_string() }
        })?;
        let line = rows.len() as u64 + 2;
        let kind = row.event.parse().map_err(|message| LogError::Malformed { line, message })?;
        rows.push((line, ShsEvent::new(kind, row.patient_id, row.timestamp)));
    }
    rows.sort_by_key(|(_, e)| e.timestamp);
    let mut admitted: HashSet<&str> = HashSet::new();
    for (line, e) in &rows {
        if e.kind == EventKind::ER {
            admitted.insert(&e.patient_id);
        } else if !admitted.contains(e.patient_id.as_str()) {
            return Err(LogError::Order { line: *line, patient: e.patient_id.clone(), kind: e.kind });
        }
    }
    Ok(rows.into_iter().map(|(_, e)| e).collect())
}

pub fn write_log(out: impl Write, events: &[ShsEvent]) -> Result<(), LogError> {
    let mut w = csv::Writer::from_writer(out);
    for e in events {
        w.serialize(Row { timestamp: e.timestamp, patient_id: e.patient_id.clone(), event: e.kind.to_string() })
            .map_err(|e| LogError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

/// Mean gap between consecutive ER events.
pub fn mean_er_gap(events: &[ShsEvent]) -> Option<f64> {
    let ers: Vec<u64> = events.iter().filter(|e| e.kind == EventKind::ER).map(|e| e.timestamp).collect();
    (ers.len() >= 2).then(|| (ers[ers.len() - 1] - ers[0]) as f64 / (ers.len() - 1) as f64)
}

pub fn trajectory_count(events: &[ShsEvent]) -> usize {
    events.iter().filter(|e| e.kind == EventKind::ER).map(|e| &e.patient_id).collect::<HashSet<_>>().len()
}
