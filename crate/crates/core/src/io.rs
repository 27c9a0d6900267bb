//! Prediction, reference and label files (JSON Lines).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatorLabels, LabeledExample};
use crate::error::{Error, Result};
use crate::set_metrics::{ReferenceSets, UsageOptionSet};

/// `{"review_id": ..., "usage_options": [...]}`. Label records have the same
/// two fields and can be read as predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub review_id: String,
    pub usage_options: UsageOptionSet,
}

/// `{"review_id": ..., "reference_sets": [[...], ...]}`; an empty inner list
/// means "no usage options".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub review_id: String,
    pub reference_sets: ReferenceSets,
}

trait HasId {
    fn id(&self) -> &str;
}

impl HasId for PredictionRecord {
    fn id(&self) -> &str {
        &self.review_id
    }
}

impl HasId for ReferenceRecord {
    fn id(&self) -> &str {
        &self.review_id
    }
}

/// Parses a JSON Lines file, skipping blank lines. Errors name the line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::format(Some(&name), i + 1, e.to_string()))?);
    }
    Ok(out)
}

fn read_unique<T: DeserializeOwned + HasId>(path: &Path) -> Result<Vec<T>> {
    let records: Vec<T> = read_jsonl(path)?;
    let mut seen = HashSet::new();
    let dups: Vec<&str> = records.iter().map(HasId::id).filter(|id| !seen.insert(*id)).collect();
    if !dups.is_empty() {
        return Err(Error::contract(format!(
            "{}: duplicate review_ids: {}",
            path.display(),
            dups.join(", ")
        )));
    }
    Ok(records)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    read_unique(path)
}

pub fn read_references(path: &Path) -> Result<Vec<ReferenceRecord>> {
    read_unique(path)
}

/// Pairs predictions with references, in reference order. Every prediction
/// must have references and every reference a prediction.
pub fn join_corpus(predictions: Vec<PredictionRecord>, references: Vec<ReferenceRecord>) -> Result<Vec<LabeledExample>> {
    let ref_ids: HashSet<&str> = references.iter().map(|r| r.review_id.as_str()).collect();
    let unknown: Vec<&str> = predictions
        .iter()
        .map(|p| p.review_id.as_str())
        .filter(|id| !ref_ids.contains(id))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::contract(format!(
            "predictions for review_ids without references: {}",
            unknown.join(", ")
        )));
    }
    let mut by_id: HashMap<String, UsageOptionSet> =
        predictions.into_iter().map(|p| (p.review_id, p.usage_options)).collect();
    let missing: Vec<&str> = references
        .iter()
        .map(|r| r.review_id.as_str())
        .filter(|id| !by_id.contains_key(*id))
        .collect();
    if !missing.is_empty() {
        return Err(Error::contract(format!(
            "review_ids without predictions: {}",
            missing.join(", ")
        )));
    }
    Ok(references
        .into_iter()
        .map(|r| {
            let prediction = by_id.remove(&r.review_id).expect("checked above");
            LabeledExample::new(r.review_id, prediction, r.reference_sets)
        })
        .collect())
}

pub fn load_corpus(predictions: &Path, references: &Path) -> Result<Vec<LabeledExample>> {
    join_corpus(read_predictions(predictions)?, read_references(references)?)
}

/// Reads every `*.jsonl` file in `dir` as one annotator's labels, named by
/// the file stem, in file name order.
pub fn read_annotator_dir(dir: &Path) -> Result<Vec<AnnotatorLabels>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "jsonl") {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .iter()
        .map(|path| {
            let annotator = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_owned();
            let labels: BTreeMap<String, UsageOptionSet> = read_predictions(path)?
                .into_iter()
                .map(|p| (p.review_id, p.usage_options))
                .collect();
            Ok(AnnotatorLabels { annotator, labels })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn joins_in_reference_order() {
        let dir = tempfile::tempdir().unwrap();
        let preds = write(
            dir.path(),
            "p.jsonl",
            "{\"review_id\":\"b\",\"usage_options\":[]}\n\n{\"review_id\":\"a\",\"usage_options\":[\"x\"],\"source\":\"m\"}\n",
        );
        let refs = write(
            dir.path(),
            "r.jsonl",
            "{\"review_id\":\"a\",\"reference_sets\":[[\"x\"],[]]}\n{\"review_id\":\"b\",\"reference_sets\":[[]]}\n",
        );
        let corpus = load_corpus(&preds, &refs).unwrap();
        assert_eq!(corpus[0].review_id, "a");
        assert_eq!(corpus[0].references.len(), 2);
        assert!(corpus[1].prediction.is_empty());
    }

    #[test]
    fn id_mismatches_are_listed() {
        let refs = vec![ReferenceRecord {
            review_id: "a".into(),
            reference_sets: ReferenceSets::single(UsageOptionSet::empty()),
        }];
        let pred = |id: &str| PredictionRecord {
            review_id: id.into(),
            usage_options: UsageOptionSet::empty(),
        };
        let err = join_corpus(vec![pred("a"), pred("zz"), pred("yy")], refs.clone()).unwrap_err();
        assert!(err.to_string().contains("zz, yy"), "{err}");
        let err = join_corpus(vec![], refs).unwrap_err();
        assert!(err.to_string().contains("without predictions: a"), "{err}");
    }

    #[test]
    fn malformed_line_is_located() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "p.jsonl", "{\"review_id\":\"a\",\"usage_options\":[]}\n{\"review_id\":\n");
        match read_predictions(&p) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let r = write(dir.path(), "r.jsonl", "{\"review_id\":\"a\",\"reference_sets\":[]}\n");
        assert!(matches!(read_references(&r), Err(Error::Format { line: 1, .. })));
        let d = write(dir.path(), "d.jsonl", "{\"review_id\":\"a\",\"usage_options\":[]}\n{\"review_id\":\"a\",\"usage_options\":[]}\n");
        assert!(read_predictions(&d).is_err());
    }

    #[test]
    fn annotator_directory() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "bob.jsonl", "{\"review_id\":\"1\",\"usage_options\":[\"x\"]}\n");
        write(dir.path(), "alice.jsonl", "{\"review_id\":\"1\",\"usage_options\":[]}\n");
        write(dir.path(), "notes.txt", "ignored");
        let labels = read_annotator_dir(dir.path()).unwrap();
        let names: Vec<&str> = labels.iter().map(|l| l.annotator.as_str()).collect();
        assert_eq!(names, ["alice", "bob"]);
    }
}
