use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{ArticleRecord, IngestError};

/// A problem found on one line of a store file. Loading continues past it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoreDiagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for StoreDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Append-ordered article collection persisted as one JSON object per line.
#[derive(Debug, Clone)]
pub struct ArticleStore {
    path: PathBuf,
    records: Vec<ArticleRecord>,
    ids: HashSet<String>,
}

impl PartialEq for ArticleStore {
    fn eq(&self, other: &Self) -> bool {
        self.path == other.path && self.records == other.records
    }
}

impl ArticleStore {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            records: Vec::new(),
            ids: HashSet::new(),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn records(&self) -> &[ArticleRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.ids.contains(id)
    }

    pub fn get(&self, id: &str) -> Option<&ArticleRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Appends unless a record with the same id is already stored. Returns
    /// whether the record was added.
    pub fn append(&mut self, record: ArticleRecord) -> bool {
        if !self.ids.insert(record.id.clone()) {
            return false;
        }
        self.records.push(record);
        true
    }

    /// Writes every record to `path`, replacing the file atomically.
    pub fn save(&self) -> Result<(), IngestError> {
        let io_err = |source| IngestError::Io {
            path: self.path.display().to_string(),
            source,
        };
        let mut buf = Vec::new();
        for r in &self.records {
            serde_json::to_writer(&mut buf, r)?;
            buf.push(b'\n');
        }
        if let Some(parent) = self.path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
        let tmp = self.path.with_extension("tmp");
        let mut f = fs::File::create(&tmp).map_err(io_err)?;
        f.write_all(&buf).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
        fs::rename(&tmp, &self.path).map_err(io_err)
    }

    /// Reads a store file. Lines that fail to deserialize (or repeat an id)
    /// are reported as diagnostics and skipped.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, Vec<StoreDiagnostic>), IngestError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut store = Self::new(path);
        let mut diagnostics = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<ArticleRecord>(line) {
                Ok(record) => {
                    let id = record.id.clone();
                    if !store.append(record) {
                        diagnostics.push(StoreDiagnostic {
                            line: i + 1,
                            message: format!("duplicate record id {id}"),
                        });
                    }
                }
                Err(e) => diagnostics.push(StoreDiagnostic {
                    line: i + 1,
                    message: format!("corrupt record: {e}"),
                }),
            }
        }
        Ok((store, diagnostics))
    }

    /// Like [`ArticleStore::load`], but a missing file yields an empty store.
    pub fn load_or_new(path: impl AsRef<Path>) -> Result<(Self, Vec<StoreDiagnostic>), IngestError> {
        let path = path.as_ref();
        if path.exists() {
            Self::load(path)
        } else {
            Ok((Self::new(path), Vec::new()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn record(url: &str, body: &str) -> ArticleRecord {
        ArticleRecord::from_parts(
            "H".into(),
            vec!["A".into()],
            "S".into(),
            url.into(),
            Some(Utc.with_ymd_and_hms(2023, 6, 18, 0, 0, 0).unwrap()),
            vec![body.into()],
            vec![],
            Utc.with_ymd_and_hms(2023, 6, 19, 12, 30, 0).unwrap(),
        )
    }

    #[test]
    fn two_record_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        let mut s = ArticleStore::new(&path);
        assert!(s.append(record("http://x/1", "One.")));
        assert!(s.append(record("http://x/2", "Two.")));
        s.save().unwrap();
        let (loaded, diags) = ArticleStore::load(&path).unwrap();
        assert!(diags.is_empty());
        assert_eq!(loaded, s);
    }

    #[test]
    fn empty_store_is_a_zero_byte_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        let s = ArticleStore::new(&path);
        s.save().unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len(), 0);
        let (loaded, diags) = ArticleStore::load(&path).unwrap();
        assert!(loaded.is_empty() && diags.is_empty());
    }

    #[test]
    fn corrupt_line_is_reported_and_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        let good = serde_json::to_string(&record("http://x/1", "One.")).unwrap();
        fs::write(&path, format!("{good}\n{{\"id\": 5, broken\n")).unwrap();
        let (loaded, diags) = ArticleStore::load(&path).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].line, 2);
    }

    #[test]
    fn duplicate_ids_are_not_appended() {
        let mut s = ArticleStore::new("x");
        assert!(s.append(record("http://x/1", "One.")));
        assert!(!s.append(record("http://x/1", "One.")));
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn missing_file_is_io_failure() {
        assert!(matches!(ArticleStore::load("/nonexistent/store.jsonl"), Err(IngestError::Io { .. })));
        let (s, _) = ArticleStore::load_or_new("/nonexistent/store.jsonl").unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn field_names_are_stable() {
        let v: serde_json::Value = serde_json::to_value(record("http://x/1", "One.")).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        for k in [
            "id", "headline", "authors", "source", "url", "published", "body_text", "paragraphs", "media_links",
            "fetched_at",
        ] {
            assert!(keys.iter().any(|x| x == k), "missing {k}");
        }
    }
}
