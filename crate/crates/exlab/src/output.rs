use std::fmt::Display;
use std::path::{Path, PathBuf};

use crate::schema::Schema;

/// Rows of one CSV file, checked against its schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: &'static Schema,
    /// File name relative to the output directory; differs from the schema
    /// name only for numbered dumps.
    pub file: String,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: &'static Schema) -> Self {
        Self {
            schema,
            file: schema.file.to_string(),
            rows: Vec::new(),
        }
    }

    pub fn named(schema: &'static Schema, file: String) -> Self {
        Self {
            schema,
            file,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.schema.columns.len(), "row width for {}", self.file);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(self.schema.header()).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// One artifact of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Table(Table),
    /// Free-form text such as configuration dumps or JSON sidecars.
    Text { file: String, body: String, rows: u64 },
}

impl Output {
    pub fn file(&self) -> &str {
        match self {
            Output::Table(t) => &t.file,
            Output::Text { file, .. } => file,
        }
    }

    pub fn rows(&self) -> u64 {
        match self {
            Output::Table(t) => t.rows.len() as u64,
            Output::Text { rows, .. } => *rows,
        }
    }

    pub fn columns(&self) -> Option<Vec<&'static str>> {
        match self {
            Output::Table(t) => Some(t.schema.header()),
            Output::Text { .. } => None,
        }
    }

    pub fn bytes(&self) -> Vec<u8> {
        match self {
            Output::Table(t) => t.to_csv(),
            Output::Text { body, .. } => body.clone().into_bytes(),
        }
    }
}

/// Writes outputs into `dir`; if any write fails, files already written are
/// removed again.
pub fn write_all(dir: &Path, outputs: &[Output]) -> std::io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for o in outputs {
        let path = dir.join(o.file());
        let res = path
            .parent()
            .map_or(Ok(()), std::fs::create_dir_all)
            .and_then(|_| std::fs::write(&path, o.bytes()));
        if let Err(e) = res {
            remove_all(&written);
            return Err(e);
        }
        written.push(path);
    }
    Ok(written)
}

pub fn remove_all(paths: &[PathBuf]) {
    for p in paths {
        let _ = std::fs::remove_file(p);
    }
}

/// Formats a cell. Floats use the shortest representation that reads back
/// to the same value, which is locale-free and platform-independent.
pub fn cell(v: impl Display) -> String {
    v.to_string()
}

/// Empty cell for a missing value.
pub fn opt(v: Option<impl Display>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::cell($x)),*] };
}
pub(crate) use row;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::ENDPOINT_TAIL;

    #[test]
    fn csv_has_header_and_dot_decimals() {
        let mut t = Table::new(&ENDPOINT_TAIL);
        t.push(row![0.25, 0.5, 0.01, 100, 500.0]);
        let s = String::from_utf8(t.to_csv()).unwrap();
        assert_eq!(s, "M,exceed_prob,stderr,replicas,t\r\n0.25,0.5,0.01,100,500\r\n");
    }

    #[test]
    #[should_panic]
    fn width_mismatch_panics() {
        Table::new(&ENDPOINT_TAIL).push(row![1, 2]);
    }

    #[test]
    fn failed_write_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("blocker"), "").unwrap();
        let outs = vec![
            Output::Text { file: "a.txt".into(), body: "x".into(), rows: 1 },
            Output::Text { file: "blocker/b.txt".into(), body: "y".into(), rows: 1 },
        ];
        assert!(write_all(dir.path(), &outs).is_err());
        assert!(!dir.path().join("a.txt").exists());
    }
}
