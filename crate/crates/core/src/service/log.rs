use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::event::Event;
use super::state::PlatformState;
use crate::model::ModelConfig;
use crate::policy::PolicyConfig;
use crate::{Error, Result};

/// Append-only JSONL writer. After the first storage error every further
/// append is refused.
pub struct EventLog<W: Write> {
    sink: W,
    failed: bool,
    appended: u64,
}

impl EventLog<File> {
    pub fn open_append(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self::new(file))
    }
}

impl<W: Write> EventLog<W> {
    pub fn new(sink: W) -> Self {
        Self {
            sink,
            failed: false,
            appended: 0,
        }
    }

    pub fn is_failed(&self) -> bool {
        self.failed
    }

    pub fn appended(&self) -> u64 {
        self.appended
    }

    /// Write one line and flush it.
    pub fn append(&mut self, event: &Event) -> Result<()> {
        if self.failed {
            return Err(Error::WriteRefused);
        }
        let mut line = event.to_line();
        line.push('\n');
        let res = self
            .sink
            .write_all(line.as_bytes())
            .and_then(|()| self.sink.flush());
        if let Err(e) = res {
            self.failed = true;
            return Err(Error::Storage(e));
        }
        self.appended += 1;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.sink
    }
}

/// Rebuild platform state by folding every event of a JSONL log.
pub fn replay_log<R: BufRead>(
    reader: R,
    model: ModelConfig,
    policy: PolicyConfig,
) -> Result<PlatformState> {
    let mut state = PlatformState::new(model, policy);
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Replay {
            line: line_no,
            reason: e.to_string(),
        })?;
        let event = Event::from_line(&line).map_err(|e| Error::Replay {
            line: line_no,
            reason: e.to_string(),
        })?;
        if event.seq != state.last_seq() + 1 {
            return Err(Error::Replay {
                line: line_no,
                reason: format!(
                    "sequence gap: expected {}, found {}",
                    state.last_seq() + 1,
                    event.seq
                ),
            });
        }
        state.apply(&event).map_err(|e| Error::Replay {
            line: line_no,
            reason: e.to_string(),
        })?;
    }
    Ok(state)
}

pub fn replay_file(path: &Path, model: ModelConfig, policy: PolicyConfig) -> Result<PlatformState> {
    let file = File::open(path)?;
    replay_log(BufReader::new(file), model, policy)
}
