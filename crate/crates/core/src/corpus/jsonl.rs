use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{AnnotationRecord, NewsDocument, ParticipantProfile, RawArticle};
use crate::{Error, Result};

/// A record type stored one JSON object per line.
pub trait JsonlRecord: Serialize + DeserializeOwned {
    /// Schema checks beyond what deserialization enforces.
    fn check(&self) -> Result<(), String> {
        Ok(())
    }
}

impl JsonlRecord for RawArticle {
    fn check(&self) -> Result<(), String> {
        if self.doc_id.is_empty() {
            return Err("empty doc_id".into());
        }
        Ok(())
    }
}

impl JsonlRecord for NewsDocument {
    fn check(&self) -> Result<(), String> {
        if self.doc_id.is_empty() {
            return Err("empty doc_id".into());
        }
        if self.title.trim().is_empty() || self.body.trim().is_empty() {
            return Err(format!("document `{}` has an empty title or body", self.doc_id));
        }
        Ok(())
    }
}

impl JsonlRecord for AnnotationRecord {
    fn check(&self) -> Result<(), String> {
        self.validate(None)
    }
}

impl JsonlRecord for ParticipantProfile {
    fn check(&self) -> Result<(), String> {
        self.validate()
    }
}

impl JsonlRecord for serde_json::Value {}

pub fn load_jsonl<T: JsonlRecord>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| Error::Schema { path: path.to_path_buf(), line: i + 1, message };
        let record: T = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        record.check().map_err(schema)?;
        out.push(record);
    }
    Ok(out)
}

pub fn save_jsonl<T: JsonlRecord>(path: impl AsRef<Path>, records: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Country;

    fn record(i: usize) -> AnnotationRecord {
        AnnotationRecord {
            annotator_id: format!("a{i}"),
            doc_id: format!("d{}", i % 7),
            ratings: [("fun_to_read".to_string(), (i % 5 + 1) as u8), ("overstated".to_string(), 2)].into(),
            country: if i % 2 == 0 { Country::US } else { Country::UK },
            extra: Default::default(),
        }
    }

    #[test]
    fn round_trip_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("annotations.jsonl");
        let records: Vec<_> = (0..100).map(record).collect();
        save_jsonl(&path, &records).unwrap();
        let back: Vec<AnnotationRecord> = load_jsonl(&path).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn out_of_range_rating_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let good = serde_json::to_string(&record(0)).unwrap();
        let bad = good.replace("\"overstated\":2", "\"overstated\":7");
        std::fs::write(&path, format!("{good}\n{bad}\n")).unwrap();
        let err = load_jsonl::<AnnotationRecord>(&path).unwrap_err();
        match err {
            Error::Schema { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains('7'));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_empty_list() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(load_jsonl::<AnnotationRecord>(&path).unwrap().is_empty());
    }

    #[test]
    fn unknown_fields_survive_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("extra.jsonl");
        let line = r#"{"annotator_id":"a","doc_id":"d","ratings":{"fun_to_read":4},"country":"UK","batch":"b7","meta":{"x":1}}"#;
        std::fs::write(&path, format!("{line}\n")).unwrap();
        let records: Vec<AnnotationRecord> = load_jsonl(&path).unwrap();
        assert_eq!(records[0].extra["batch"], "b7");
        save_jsonl(&path, &records).unwrap();
        let written = std::fs::read_to_string(&path).unwrap();
        let value: serde_json::Value = serde_json::from_str(written.trim()).unwrap();
        assert_eq!(value["meta"]["x"], 1);
        assert_eq!(value["batch"], "b7");
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_jsonl::<AnnotationRecord>("/nonexistent/x.jsonl"), Err(Error::Io(_))));
    }
}
