//! Append-only JSON Lines event log. Each line is one applied event with
//! its position in the stream and the time it took.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shapmat_core::maintenance::StreamEvent;

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub index: usize,
    /// Wall-clock seconds spent applying the event; ignored on replay.
    pub seconds: f64,
    pub utility_evaluations: u64,
    pub event: StreamEvent,
}

pub struct EventLog {
    path: PathBuf,
    out: BufWriter<File>,
}

impl EventLog {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
        Ok(EventLog {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        })
    }

    pub fn append(&mut self, record: &EventRecord) -> Result<()> {
        let line = serde_json::to_string(record).expect("serializable record");
        writeln!(self.out, "{line}").map_err(|e| HarnessError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| HarnessError::io(&self.path, e))
    }
}

pub fn read_events<R: Read>(input: R) -> Result<Vec<EventRecord>> {
    let mut records = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::parse(i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EventRecord =
            serde_json::from_str(&line).map_err(|e| HarnessError::parse(i + 1, e.to_string()))?;
        records.push(rec);
    }
    Ok(records)
}

pub fn load_events(path: &Path) -> Result<Vec<EventRecord>> {
    read_events(File::open(path).map_err(|e| HarnessError::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use shapmat_core::{DataPoint, PlayerId};

    #[test]
    fn log_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let mut log = EventLog::create(&path).unwrap();
        let records = vec![
            EventRecord {
                index: 0,
                seconds: 0.25,
                utility_evaluations: 64,
                event: StreamEvent::PlayerAdd {
                    player: DataPoint::new(40, vec![0.1 + 0.2, -1.0 / 3.0], 1),
                },
            },
            EventRecord {
                index: 1,
                seconds: 0.0,
                utility_evaluations: 0,
                event: StreamEvent::PlayerDelete { player: PlayerId(3) },
            },
        ];
        for r in &records {
            log.append(r).unwrap();
        }
        log.finish().unwrap();
        assert_eq!(load_events(&path).unwrap(), records);
    }

    #[test]
    fn bad_lines_are_reported() {
        let text = "{\"index\":0,\"seconds\":0,\"utility_evaluations\":0,\"event\":{\"kind\":\"task_delete\",\"task\":4}}\nnot json\n";
        assert!(matches!(read_events(text.as_bytes()), Err(HarnessError::Parse { line: 2, .. })));
    }
}
