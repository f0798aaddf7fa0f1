//! Short-term session buffer and the append-only long-term interaction log.
//!
//! The log is JSON lines behind a `#afeng-log v1` header. Existing bytes are
//! never rewritten: a partial trailing line left by a crash is terminated
//! with a newline on open and skipped (with a warning) on replay.

use std::collections::VecDeque;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::affect::{AppraisalResult, BehaviorSet, EmotionDistribution};

pub const LOG_HEADER: &str = "#afeng-log v1";
pub const DEFAULT_CAPACITY: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum MemoryError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("storage full while appending record {0}")]
    StorageFull(u64),
    #[error("record id {id} is not greater than the last id {last}")]
    NonIncreasingId { id: u64, last: u64 },
    #[error("{path}: not an interaction log (header {found:?})")]
    BadHeader { path: PathBuf, found: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub id: u64,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    pub distribution: EmotionDistribution,
    pub appraisal: AppraisalResult,
    pub behaviors: BehaviorSet,
    pub bml_id: String,
}

/// Most-recent-first, bounded.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionBuffer {
    capacity: usize,
    records: VecDeque<InteractionRecord>,
}

impl Default for SessionBuffer {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY)
    }
}

impl SessionBuffer {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "session buffer capacity must be positive");
        Self {
            capacity,
            records: VecDeque::with_capacity(capacity),
        }
    }

    /// Keeps the newest `capacity` of `records` (given in id order).
    pub fn from_log(capacity: usize, records: &[InteractionRecord]) -> Self {
        let mut buffer = Self::new(capacity);
        let start = records.len().saturating_sub(capacity);
        for r in &records[start..] {
            buffer.records.push_front(r.clone());
        }
        buffer
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last_id(&self) -> Option<u64> {
        self.records.front().map(|r| r.id)
    }

    fn push(&mut self, record: InteractionRecord) {
        if self.records.len() == self.capacity {
            self.records.pop_back();
        }
        self.records.push_front(record);
    }

    /// Up to `n` records, most recent first.
    pub fn recent(&self, n: usize) -> Vec<&InteractionRecord> {
        self.records.iter().take(n).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Replay {
    pub records: Vec<InteractionRecord>,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub struct LongTermStore {
    log_path: PathBuf,
    checkpoint_dir: PathBuf,
    file: File,
    last_id: Option<u64>,
}

impl LongTermStore {
    /// Opens (creating if needed) the log and replays it.
    pub fn open(log_path: &Path, checkpoint_dir: &Path) -> Result<(Self, Replay), MemoryError> {
        if let Some(parent) = log_path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(log_path)?;
        let len = file.metadata()?.len();
        if len == 0 {
            writeln!(file, "{LOG_HEADER}")?;
            file.sync_data()?;
        } else {
            file.seek(SeekFrom::Start(len - 1))?;
            let mut last = [0u8; 1];
            file.read_exact(&mut last)?;
            if last[0] != b'\n' {
                file.write_all(b"\n")?;
                file.sync_data()?;
            }
        }
        let replay = replay(log_path)?;
        for w in &replay.warnings {
            log::warn!("{w}");
        }
        let store = Self {
            log_path: log_path.to_path_buf(),
            checkpoint_dir: checkpoint_dir.to_path_buf(),
            file,
            last_id: replay.records.last().map(|r| r.id),
        };
        Ok((store, replay))
    }

    pub fn log_path(&self) -> &Path {
        &self.log_path
    }

    pub fn checkpoint_dir(&self) -> &Path {
        &self.checkpoint_dir
    }

    pub fn last_id(&self) -> Option<u64> {
        self.last_id
    }

    pub fn next_id(&self) -> u64 {
        self.last_id.map_or(1, |id| id + 1)
    }

    /// Appends one line. On failure the log holds at most a partial trailing
    /// line, which replay ignores.
    pub fn append(&mut self, record: &InteractionRecord) -> Result<(), MemoryError> {
        if let Some(last) = self.last_id {
            if record.id <= last {
                return Err(MemoryError::NonIncreasingId { id: record.id, last });
            }
        }
        let mut line = serde_json::to_string(record).expect("records serialize");
        line.push('\n');
        let written = self.file.write_all(line.as_bytes()).and_then(|_| self.file.sync_data());
        match written {
            Ok(()) => {
                self.last_id = Some(record.id);
                Ok(())
            }
            Err(e) if e.kind() == std::io::ErrorKind::StorageFull => Err(MemoryError::StorageFull(record.id)),
            Err(e) => Err(e.into()),
        }
    }
}

/// Reads every complete record in id order. Unparsable lines and records
/// whose id does not increase are skipped with a warning.
pub fn replay(log_path: &Path) -> Result<Replay, MemoryError> {
    let reader = BufReader::new(File::open(log_path)?);
    let mut out = Replay::default();
    let mut lines = reader.lines();
    match lines.next().transpose()? {
        None => return Ok(out),
        Some(h) if h == LOG_HEADER => {}
        Some(h) => {
            return Err(MemoryError::BadHeader {
                path: log_path.to_path_buf(),
                found: h,
            })
        }
    }
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<InteractionRecord>(&line) {
            Ok(r) => {
                if let Some(last) = out.records.last() {
                    if r.id <= last.id {
                        out.warnings
                            .push(format!("{}:{line_no}: skipping non-increasing id {}", log_path.display(), r.id));
                        continue;
                    }
                }
                out.records.push(r);
            }
            Err(e) => out
                .warnings
                .push(format!("{}:{line_no}: skipping incomplete record ({e})", log_path.display())),
        }
    }
    Ok(out)
}

/// Persists `record` and pushes it onto the session buffer.
pub fn record(store: &mut LongTermStore, buffer: &mut SessionBuffer, record: InteractionRecord) -> Result<(), MemoryError> {
    store.append(&record)?;
    buffer.push(record);
    Ok(())
}

pub fn recent(buffer: &SessionBuffer, n: usize) -> Vec<&InteractionRecord> {
    buffer.recent(n)
}
