use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
    Unassigned,
}

impl Split {
    fn parse(s: &str, row: usize) -> Result<Self> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            "" | "unassigned" => Ok(Split::Unassigned),
            other => Err(Error::Manifest {
                row,
                message: format!("unknown split {other:?}"),
            }),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub video_path: String,
    pub mos: f64,
    pub split: Split,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.video_path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("path,mos,split\n");
        for e in &self.entries {
            s.push_str(&format!(
                "{},{},{}\n",
                e.video_path,
                e.mos,
                e.split.as_str()
            ));
        }
        s
    }
}

/// Parses manifest text; `row` numbers in errors count data rows from 1.
pub fn parse_manifest(text: &str) -> Result<DatasetManifest> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Manifest {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    let has_split = match cols.as_slice() {
        ["path", "mos"] => false,
        ["path", "mos", "split"] => true,
        _ => {
            return Err(Error::Manifest {
                row: 0,
                message: format!("header must be path,mos[,split], got {}", cols.join(",")),
            })
        }
    };

    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Manifest {
            row,
            message: e.to_string(),
        })?;
        let field = |k: usize| record.get(k).unwrap_or("");
        let path = field(0).to_string();
        if path.is_empty() {
            return Err(Error::Manifest {
                row,
                message: "empty path".into(),
            });
        }
        let mos: f64 = field(1).parse().map_err(|_| Error::Manifest {
            row,
            message: format!("MOS {:?} is not a number", field(1)),
        })?;
        if !mos.is_finite() {
            return Err(Error::Manifest {
                row,
                message: "MOS must be finite".into(),
            });
        }
        let split = if has_split {
            Split::parse(field(2), row)?
        } else {
            Split::Unassigned
        };
        if !seen.insert(path.clone()) {
            return Err(Error::Manifest {
                row,
                message: format!("duplicate path {path}"),
            });
        }
        entries.push(ManifestEntry {
            video_path: path,
            mos,
            split,
        });
    }
    Ok(DatasetManifest {
        entries,
        base_dir: PathBuf::new(),
    })
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut m = parse_manifest(&text)?;
    m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_with_splits() {
        let m = parse_manifest("path,mos,split\na.y4m,3.5,train\nb.y4m,2,val\nc.y4m,4.1,test\n")
            .unwrap();
        assert_eq!(m.entries.len(), 3);
        assert_eq!(m.entries[1].split, Split::Val);
        assert_eq!(m.entries[2].mos, 4.1);
    }

    #[test]
    fn missing_split_column_means_unassigned() {
        let m = parse_manifest("path,mos\na.y4m,1\nb.y4m,2\n").unwrap();
        assert!(m.entries.iter().all(|e| e.split == Split::Unassigned));
    }

    #[test]
    fn non_numeric_mos_reports_row() {
        let err = parse_manifest("path,mos\nvid.y4m,abc\n").unwrap_err();
        assert!(matches!(err, Error::Manifest { row: 1, .. }));
    }

    #[test]
    fn duplicate_paths_rejected() {
        let err = parse_manifest("path,mos\na,1\nb,2\na,3\n").unwrap_err();
        assert!(matches!(err, Error::Manifest { row: 3, .. }));
    }

    #[test]
    fn bad_header_rejected() {
        assert!(parse_manifest("file,score\na,1\n").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = parse_manifest("path,mos,split\na,1.5,train\nb,2,unassigned\n").unwrap();
        assert_eq!(parse_manifest(&m.to_csv()).unwrap().entries, m.entries);
    }
}
