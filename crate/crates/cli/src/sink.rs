//! Append-only results CSV with crash-resume.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const COLUMNS: [&str; 10] = [
    "experiment_id",
    "family",
    "class_id",
    "hyperparams_json",
    "metric",
    "value",
    "stderr",
    "reps",
    "seed",
    "wallclock_ms",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment_id: String,
    pub family: String,
    pub class_id: String,
    pub hyperparams_json: String,
    pub metric: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub reps: Option<usize>,
    pub seed: u64,
    pub wallclock_ms: Option<u64>,
}

/// Identifies one (cell, metric) row.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RowKey {
    pub family: String,
    pub class_id: String,
    pub hyperparams_json: String,
    pub metric: String,
}

impl ResultRow {
    pub fn key(&self) -> RowKey {
        RowKey {
            family: self.family.clone(),
            class_id: self.class_id.clone(),
            hyperparams_json: self.hyperparams_json.clone(),
            metric: self.metric.clone(),
        }
    }
}

pub struct ResultSink {
    writer: csv::Writer<File>,
    done: BTreeMap<RowKey, ResultRow>,
}

impl ResultSink {
    /// Opens `path`. With `resume`, a trailing partial line is cut off and
    /// the rows already present are kept and reported as done; otherwise
    /// the file is truncated.
    pub fn open(path: &Path, resume: bool) -> CliResult<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut done = BTreeMap::new();
        let existing = resume && path.exists();
        let file = if existing {
            let mut file = OpenOptions::new().read(true).write(true).open(path)?;
            let mut text = String::new();
            file.read_to_string(&mut text)
                .map_err(|e| CliError::config(format!("{} is not a results file: {e}", path.display())))?;
            let keep = text.rfind('\n').map_or(0, |i| i + 1);
            file.set_len(keep as u64)?;
            file.seek(SeekFrom::End(0))?;
            let mut reader = csv::Reader::from_reader(&text.as_bytes()[..keep]);
            if keep > 0 && reader.headers()?.iter().ne(COLUMNS) {
                return Err(CliError::config(format!("{} has unexpected columns", path.display())));
            }
            for row in reader.deserialize::<ResultRow>() {
                let row = row?;
                done.insert(row.key(), row);
            }
            file
        } else {
            File::create(path)?
        };
        let header_needed = file.metadata()?.len() == 0;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        if header_needed {
            writer.write_record(COLUMNS)?;
            writer.flush()?;
        }
        Ok(ResultSink { writer, done })
    }

    pub fn get(&self, key: &RowKey) -> Option<&ResultRow> {
        self.done.get(key)
    }

    /// Appends `row` unless its key is already present; returns the stored row.
    pub fn push(&mut self, row: ResultRow) -> CliResult<ResultRow> {
        let key = row.key();
        if let Some(old) = self.done.get(&key) {
            return Ok(old.clone());
        }
        self.writer.serialize(&row)?;
        self.writer.flush()?;
        self.done.insert(key, row.clone());
        Ok(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(metric: &str, value: f64) -> ResultRow {
        ResultRow {
            experiment_id: "e".into(),
            family: "tree".into(),
            class_id: "tree-000".into(),
            hyperparams_json: "{\"max_depth\":1}".into(),
            metric: metric.into(),
            value,
            stderr: Some(0.25),
            reps: Some(3),
            seed: 7,
            wallclock_ms: None,
        }
    }

    #[test]
    fn resume_cuts_partial_line_and_skips_done_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        {
            let mut sink = ResultSink::open(&path, false).unwrap();
            sink.push(row("a", 0.1)).unwrap();
            sink.push(row("b", 0.2)).unwrap();
        }
        let full = std::fs::read_to_string(&path).unwrap();
        assert!(full.starts_with("experiment_id,family,class_id,hyperparams_json,metric,value,stderr,reps,seed,wallclock_ms\n"));
        std::fs::write(&path, &full[..full.len() - 5]).unwrap();

        let mut sink = ResultSink::open(&path, true).unwrap();
        assert!(sink.get(&row("a", 0.0).key()).is_some());
        assert!(sink.get(&row("b", 0.0).key()).is_none());
        assert_eq!(sink.push(row("a", 9.0)).unwrap().value, 0.1);
        sink.push(row("b", 0.2)).unwrap();
        drop(sink);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), full);
    }
}
