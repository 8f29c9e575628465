//! Event stream input formats.
//!
//! CSV with header `i,timestamp,subject_id,group,y` or NDJSON with the same
//! field names, one object per line. Timestamps are RFC 3339; `group` is the
//! literal `control` or `treatment`.

use std::io::Read;

use chrono::{DateTime, Utc};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::monitor::{Event, Group};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Csv,
    Ndjson,
}

#[derive(Debug, Deserialize)]
struct EventRecord {
    i: u64,
    timestamp: DateTime<Utc>,
    subject_id: String,
    group: Group,
    y: f64,
}

impl EventRecord {
    fn into_event(self, line: usize) -> Result<Event> {
        if !self.y.is_finite() {
            return Err(Error::Data(format!("line {line}: non-finite outcome")));
        }
        Ok(Event {
            index: self.i,
            timestamp: self.timestamp,
            subject_id: self.subject_id,
            group: self.group,
            outcome: self.y,
        })
    }
}

pub fn read_events_csv<R: Read>(reader: R) -> Result<Vec<Event>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut events = Vec::new();
    for result in rdr.deserialize::<EventRecord>() {
        let record = result.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line().to_string())
                .unwrap_or_else(|| "?".into());
            Error::Data(format!("line {line}: {e}"))
        })?;
        let line = events.len() + 2; // header occupies line 1
        events.push(record.into_event(line)?);
    }
    Ok(events)
}

pub fn read_events_ndjson<R: Read>(mut reader: R) -> Result<Vec<Event>> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::Data(format!("read failure: {e}")))?;
    let mut events = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: EventRecord = serde_json::from_str(line)
            .map_err(|e| Error::Data(format!("line {}: {e}", idx + 1)))?;
        events.push(record.into_event(idx + 1)?);
    }
    Ok(events)
}

pub fn read_events<R: Read>(reader: R, format: EventFormat) -> Result<Vec<Event>> {
    match format {
        EventFormat::Csv => read_events_csv(reader),
        EventFormat::Ndjson => read_events_ndjson(reader),
    }
}

/// One row of the per-step trajectory emitted for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub n: u64,
    pub s: f64,
    pub threshold: f64,
    pub flag: bool,
}

/// Renders trajectory rows as `n,s,threshold,flag` CSV (flag as 0/1).
pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::from("n,s,threshold,flag\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.n,
            r.s,
            r.threshold,
            u8::from(r.flag)
        ));
    }
    out
}
