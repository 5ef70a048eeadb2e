//! Append-only calibration store: one JSON `CalibrationRecord` per line.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use wayfinder_core::distance::CalibrationRecord;

use crate::error::AppError;

/// Name of the first-launch marker written next to the store.
pub const INTRO_FLAG_FILE: &str = "intro_seen";

/// Writer half. Appends from any number of threads are serialized, and each
/// batch is issued as a single write.
#[derive(Debug)]
pub struct CalibrationStore {
    path: PathBuf,
    file: Mutex<File>,
}

impl CalibrationStore {
    pub fn open(path: &Path) -> Result<Self, AppError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
        }
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(|e| AppError::io(path, e))?;
        // a crash may have left a partial line; keep new records on their own lines
        let len = file.metadata().map_err(|e| AppError::io(path, e))?.len();
        if len > 0 {
            let mut last = [0u8; 1];
            file.seek(SeekFrom::End(-1))
                .and_then(|_| file.read_exact(&mut last))
                .map_err(|e| AppError::io(path, e))?;
            if last[0] != b'\n' {
                file.write_all(b"\n").map_err(|e| AppError::io(path, e))?;
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, records: &[CalibrationRecord]) -> Result<(), AppError> {
        if records.is_empty() {
            return Ok(());
        }
        let mut buf = Vec::new();
        for r in records {
            serde_json::to_writer(&mut buf, r).map_err(AppError::runtime)?;
            buf.push(b'\n');
        }
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        f.write_all(&buf).and_then(|_| f.flush()).map_err(|e| AppError::io(&self.path, e))
    }

    /// Marker recording that the introduction has been shown.
    pub fn intro_flag_path(&self) -> PathBuf {
        intro_flag_path(&self.path)
    }
}

pub fn intro_flag_path(store: &Path) -> PathBuf {
    store.with_file_name(INTRO_FLAG_FILE)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    pub records: Vec<CalibrationRecord>,
    /// 1-based numbers of lines that did not parse.
    pub corrupt_lines: Vec<usize>,
    /// The last line had no newline and did not parse: an interrupted append.
    pub truncated_tail: bool,
}

/// Read every valid record. A missing file is an empty store.
pub fn load(path: &Path) -> Result<LoadReport, AppError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(LoadReport::default()),
        Err(e) => return Err(AppError::io(path, e)),
    };
    Ok(parse(&text, path))
}

pub fn parse(text: &str, path: &Path) -> LoadReport {
    let mut report = LoadReport::default();
    let ends_clean = text.is_empty() || text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CalibrationRecord>(line) {
            Ok(r) => report.records.push(r),
            Err(_) if i + 1 == lines.len() && !ends_clean => {
                log::warn!("{}:{}: ignoring truncated final record", path.display(), i + 1);
                report.truncated_tail = true;
            }
            Err(e) => {
                log::warn!("{}:{}: skipping corrupt record: {e}", path.display(), i + 1);
                report.corrupt_lines.push(i + 1);
            }
        }
    }
    report
}
