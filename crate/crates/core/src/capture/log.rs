//! JSONL capture log: one [`CaptureEvent`] per line, fields in declaration
//! order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use super::CaptureEvent;

#[derive(Debug, Error)]
pub enum CaptureLogError {
    #[error("capture log line {line}: {message}")]
    MalformedLog { line: usize, message: String },
    #[error("capture log io: {0}")]
    Io(#[from] std::io::Error),
}

pub fn event_to_line(event: &CaptureEvent) -> String {
    serde_json::to_string(event).expect("capture events always serialize")
}

pub fn write_capture_log_to<W: Write>(mut out: W, events: &[CaptureEvent]) -> std::io::Result<()> {
    for event in events {
        out.write_all(event_to_line(event).as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_capture_log(path: impl AsRef<Path>, events: &[CaptureEvent]) -> Result<(), CaptureLogError> {
    let file = File::create(path)?;
    write_capture_log_to(BufWriter::new(file), events)?;
    Ok(())
}

/// Parses a log body. Blank lines are skipped; line numbers are 1-based.
pub fn parse_capture_log(text: &str) -> Result<Vec<CaptureEvent>, CaptureLogError> {
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event: CaptureEvent =
            serde_json::from_str(line).map_err(|e| CaptureLogError::MalformedLog {
                line: i + 1,
                message: e.to_string(),
            })?;
        if let Err(e) = event.media.check_path() {
            return Err(CaptureLogError::MalformedLog {
                line: i + 1,
                message: e.to_string(),
            });
        }
        events.push(event);
    }
    Ok(events)
}

pub fn read_capture_log(path: impl AsRef<Path>) -> Result<Vec<CaptureEvent>, CaptureLogError> {
    parse_capture_log(&std::fs::read_to_string(path)?)
}
