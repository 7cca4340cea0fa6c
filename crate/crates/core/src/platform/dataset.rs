//! Corpus files: one SMILES per line with an optional tab-separated name.
//! Lines starting with `#` and blank lines are skipped.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::molgraph::{parse_smiles, MolecularGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub id: usize,
    pub name: Option<String>,
    pub smiles: String,
    pub graph: MolecularGraph,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based line number in the source file.
    pub line: usize,
    pub text: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub entries: Vec<DatasetEntry>,
    pub rejects: Vec<Rejection>,
}

#[derive(Debug, Error)]
#[error("cannot read dataset {path}: {source}")]
pub struct DatasetError {
    pub path: String,
    #[source]
    pub source: std::io::Error,
}

pub fn ingest_str(text: &str, n_max: usize) -> IngestReport {
    let mut report = IngestReport::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (smiles, name) = match line.split_once('\t') {
            Some((s, n)) => (s.trim(), Some(n.trim()).filter(|n| !n.is_empty()).map(str::to_string)),
            None => (line.trim(), None),
        };
        let reject = |reason: String| Rejection { line: i + 1, text: line.to_string(), reason };
        match parse_smiles(smiles) {
            Err(e) => report.rejects.push(reject(e.to_string())),
            Ok(g) if g.atom_count() > n_max => {
                report.rejects.push(reject(format!("{} heavy atoms exceeds n_max = {n_max}", g.atom_count())))
            }
            Ok(graph) => {
                let id = report.entries.len();
                report.entries.push(DatasetEntry { id, name, smiles: smiles.to_string(), graph });
            }
        }
    }
    report
}

pub fn ingest_dataset(path: &Path, n_max: usize) -> Result<IngestReport, DatasetError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| DatasetError { path: path.display().to_string(), source })?;
    Ok(ingest_str(&text, n_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_plain_entries() {
        let r = ingest_str("CCO\nC\n", 9);
        assert_eq!(r.entries.len(), 2);
        assert!(r.rejects.is_empty());
        assert_eq!((r.entries[1].id, r.entries[1].smiles.as_str()), (1, "C"));
    }

    #[test]
    fn names_comments_and_rejects() {
        let text = "# corpus\nCCO\tethanol\n\nC1CC\nCCCCCCCCCC\tdecane\r\nO=C=O\t carbon dioxide \n";
        let r = ingest_str(text, 9);
        let names: Vec<_> = r.entries.iter().map(|e| e.name.as_deref()).collect();
        assert_eq!(names, vec![Some("ethanol"), Some("carbon dioxide")]);
        assert_eq!(r.entries.iter().map(|e| e.id).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(r.rejects.iter().map(|x| x.line).collect::<Vec<_>>(), vec![4, 5]);
        assert!(r.rejects[0].reason.contains("ring"), "{}", r.rejects[0].reason);
        assert!(r.rejects[1].reason.contains("n_max"));
    }

    #[test]
    fn empty_and_missing_files() {
        assert_eq!(ingest_str("", 9), IngestReport::default());
        assert!(ingest_dataset(Path::new("/nonexistent/corpus.smi"), 9).is_err());
    }
}
