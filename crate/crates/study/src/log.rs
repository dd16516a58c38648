//! Append-only JSONL event log and replay.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::config::StudyConfig;
use crate::error::{Result, StudyError};
use crate::scoring::{finalize, SessionRecord};
use crate::session::{LogEntry, StudySession};

/// Appends whole lines and syncs them before returning.
#[derive(Debug)]
pub struct EventLog {
    file: File,
}

impl EventLog {
    pub fn open(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(EventLog { file })
    }

    pub fn append(&mut self, entry: &LogEntry) -> Result<()> {
        let mut line = serde_json::to_vec(entry).map_err(|e| StudyError::Log(e.to_string()))?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        Ok(())
    }
}

/// Reads every entry. A final line without a newline is a torn write from a
/// crash and is ignored; any other malformed line is an error.
pub fn read_log(path: &Path) -> Result<Vec<LogEntry>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut reader = BufReader::new(File::open(path)?);
    let mut entries = Vec::new();
    let mut line = String::new();
    let mut number = 0;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        number += 1;
        let complete = line.ends_with('\n');
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line.trim_end()) {
            Ok(e) => entries.push(e),
            Err(_) if !complete => break,
            Err(e) => return Err(StudyError::Log(format!("line {number}: {e}"))),
        }
    }
    Ok(entries)
}

/// Rebuilds every session from interleaved entries, keyed by id, together
/// with the order in which the sessions were created.
pub fn replay(entries: &[LogEntry]) -> Result<(BTreeMap<String, StudySession>, Vec<String>)> {
    let mut sessions: BTreeMap<String, StudySession> = BTreeMap::new();
    let mut order = Vec::new();
    for e in entries {
        match sessions.get_mut(&e.session_id) {
            Some(s) => s.apply(e)?,
            None => {
                sessions.insert(e.session_id.clone(), StudySession::replay([e])?);
                order.push(e.session_id.clone());
            }
        }
    }
    Ok((sessions, order))
}

/// Export records for every session in the log that has reached a terminal
/// stage, in creation order. Sessions still in progress are skipped.
pub fn finished_records(entries: &[LogEntry], config: &StudyConfig) -> Result<Vec<SessionRecord>> {
    let (sessions, order) = replay(entries)?;
    order
        .iter()
        .map(|id| &sessions[id])
        .filter(|s| s.stage.is_terminal())
        .map(|s| finalize(s, config))
        .collect()
}
