//! Append-only vehicle event log and its JSON-lines form.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Spawn,
    Depart,
    Arrive,
    Pickup,
    Dropoff,
    Park,
    RelocateStart,
}

/// One log record. Only `Arrive` records carry miles: the leg just driven,
/// flagged occupied when at least one rider was aboard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub day: u8,
    pub minute: f64,
    pub vehicle: u32,
    pub kind: EventKind,
    pub zone: String,
    pub miles: f64,
    pub occupied: bool,
    #[serde(default)]
    pub trips: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EventLog {
    pub records: Vec<EventRecord>,
}

impl EventLog {
    pub fn push(&mut self, record: EventRecord) {
        self.records.push(record);
    }

    pub fn day(&self, day: u8) -> impl Iterator<Item = &EventRecord> {
        self.records.iter().filter(move |r| r.day == day)
    }

    /// Records of one day as a standalone log.
    pub fn filter_day(&self, day: u8) -> EventLog {
        EventLog {
            records: self.day(day).cloned().collect(),
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("event records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), ScenarioError> {
        let io = |source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut w = BufWriter::new(std::fs::File::create(path).map_err(io)?);
        for r in &self.records {
            serde_json::to_writer(&mut w, r).map_err(|e| ScenarioError::Json {
                file: path.display().to_string(),
                message: e.to_string(),
            })?;
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_jsonl(path: &Path) -> Result<Self, ScenarioError> {
        let io = |source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        };
        let reader = BufReader::new(std::fs::File::open(path).map_err(io)?);
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let rec = serde_json::from_str(&line).map_err(|e| ScenarioError::Schema {
                file: path.display().to_string(),
                row: i + 1,
                message: e.to_string(),
            })?;
            records.push(rec);
        }
        Ok(Self { records })
    }
}
