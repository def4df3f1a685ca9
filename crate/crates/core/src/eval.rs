//! Pairwise model comparison over a manifest of reference/candidate files.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::graph::FlowGraph;
use crate::ir::{parse_process, validate};
use crate::par::{map_ordered, ExecMode};
use crate::similarity::{compare, ratio_to_f64, to_flow_graph, CostModel};
use crate::xml::import_flow_graph;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("cannot read manifest {path}: {source}")]
    Manifest {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest line {line}: expected `reference,candidate`")]
    ManifestLine { line: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSpec {
    pub id: String,
    pub reference: PathBuf,
    pub candidate: PathBuf,
}

/// Reads `reference,candidate` lines. Blank lines and `#` comments are
/// skipped; relative paths resolve against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<PairSpec>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Manifest {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((reference, candidate)) = line.split_once(',') else {
            return Err(EvalError::ManifestLine { line: n + 1 });
        };
        let (reference, candidate) = (reference.trim(), candidate.trim());
        if reference.is_empty() || candidate.is_empty() {
            return Err(EvalError::ManifestLine { line: n + 1 });
        }
        pairs.push(PairSpec {
            id: format!("pair-{:03}", pairs.len() + 1),
            reference: base.join(reference),
            candidate: base.join(candidate),
        });
    }
    Ok(pairs)
}

/// Parses an IR JSON document or a BPMN XML document, sniffing the first
/// non-blank character.
pub fn graph_from_text(text: &str) -> Result<FlowGraph, String> {
    if text.trim_start().starts_with('<') {
        import_flow_graph(text).map_err(|e| e.to_string())
    } else {
        let model = parse_process(text).map_err(|e| e.to_string())?;
        let report = validate(&model);
        if !report.ok {
            return Err(format!("invalid model: {}", report.summary()));
        }
        to_flow_graph(&model).map_err(|e| e.to_string())
    }
}

pub fn load_graph(path: &Path) -> Result<FlowGraph, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    graph_from_text(&text).map_err(|e| format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRow {
    pub pair_id: String,
    pub reference: String,
    pub candidate: String,
    pub ged: Option<u64>,
    pub rged: Option<f64>,
    pub similarity: Option<f64>,
    pub exact: Option<bool>,
    pub include_joins: bool,
    pub failed: u64,
    pub error: Option<String>,
}

impl PairRow {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

/// Compares two loaded graphs. Joins are contracted first unless
/// `include_joins`.
pub fn compare_graphs(
    reference: &FlowGraph,
    candidate: &FlowGraph,
    include_joins: bool,
) -> Result<crate::similarity::Comparison, String> {
    let (a, b) = if include_joins {
        (reference.clone(), candidate.clone())
    } else {
        (reference.without_joins(), candidate.without_joins())
    };
    compare(&a, &b, &CostModel::default()).map_err(|e| e.to_string())
}

pub fn evaluate_pair(pair: &PairSpec, include_joins: bool) -> PairRow {
    let mut row = PairRow {
        pair_id: pair.id.clone(),
        reference: pair.reference.display().to_string(),
        candidate: pair.candidate.display().to_string(),
        ged: None,
        rged: None,
        similarity: None,
        exact: None,
        include_joins,
        failed: 1,
        error: None,
    };
    let result = load_graph(&pair.reference)
        .and_then(|a| load_graph(&pair.candidate).map(|b| (a, b)))
        .and_then(|(a, b)| compare_graphs(&a, &b, include_joins));
    match result {
        Ok(c) => {
            row.ged = Some(c.ged);
            row.rged = Some(ratio_to_f64(c.rged));
            row.similarity = Some(ratio_to_f64(c.similarity));
            row.exact = Some(c.exact);
            row.failed = 0;
        }
        Err(e) => row.error = Some(e),
    }
    row
}

/// Evaluates every pair; rows keep manifest order in both execution modes.
pub fn evaluate_pairs(pairs: &[PairSpec], include_joins: bool, mode: ExecMode) -> Vec<PairRow> {
    map_ordered(mode, pairs, |p| evaluate_pair(p, include_joins))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub pairs: usize,
    /// Mean similarity over successfully evaluated pairs.
    pub average_score: Option<f64>,
    pub total_failures: u64,
}

pub fn summarize(rows: &[PairRow]) -> EvalSummary {
    let scores: Vec<f64> = rows.iter().filter_map(|r| r.similarity).collect();
    EvalSummary {
        pairs: rows.len(),
        average_score: (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64),
        total_failures: rows.iter().map(|r| r.failed).sum(),
    }
}

pub const PAIR_COLUMNS: &[&str] = &[
    "pair_id",
    "reference",
    "candidate",
    "ged",
    "rged",
    "similarity",
    "exact",
    "include_joins",
    "failed",
    "error",
];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// Writes one row per pair and a closing `summary` row whose similarity is
/// the average score and whose `failed` column is the total failure count.
pub fn write_pairs_csv<W: Write>(out: W, rows: &[PairRow]) -> Result<EvalSummary, EvalError> {
    let summary = summarize(rows);
    let include_joins = rows.first().is_some_and(|r| r.include_joins);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PAIR_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.pair_id.clone(),
            r.reference.clone(),
            r.candidate.clone(),
            opt(&r.ged),
            opt(&r.rged),
            opt(&r.similarity),
            opt(&r.exact),
            r.include_joins.to_string(),
            r.failed.to_string(),
            opt(&r.error),
        ])?;
    }
    w.write_record([
        "summary".to_string(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        opt(&summary.average_score),
        String::new(),
        include_joins.to_string(),
        summary.total_failures.to_string(),
        String::new(),
    ])?;
    w.flush()?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_parsing() {
        let dir = std::env::temp_dir().join(format!("bpmn-eval-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let manifest = dir.join("pairs.txt");
        std::fs::write(&manifest, "# comment\n\na.json, b.json\nsub/c.bpmn,d.bpmn\n").unwrap();
        let pairs = read_manifest(&manifest).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].reference, dir.join("a.json"));
        assert_eq!(pairs[1].id, "pair-002");
        std::fs::write(&manifest, "only-one-path\n").unwrap();
        assert!(matches!(read_manifest(&manifest), Err(EvalError::ManifestLine { line: 1 })));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn missing_files_count_as_failures() {
        let pair = PairSpec {
            id: "p".into(),
            reference: "/nonexistent/a.json".into(),
            candidate: "/nonexistent/b.json".into(),
        };
        let rows = evaluate_pairs(&[pair], false, ExecMode::Sequential);
        assert_eq!(rows[0].failed, 1);
        let mut buf = Vec::new();
        let summary = write_pairs_csv(&mut buf, &rows).unwrap();
        assert_eq!(summary.total_failures, 1);
        assert_eq!(summary.average_score, None);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().last().unwrap().starts_with("summary,"));
    }
}
