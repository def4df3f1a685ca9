//! Generation and editing suites run in both modalities, reported in the
//! shapes of the published comparison tables.
//!
//! A task directory holds `*.task.json` files:
//!
//! ```json
//! {"id": "gen-01", "kind": "generation", "description": "...", "reference": "gen-01.reference.json"}
//! {"id": "edit-01", "kind": "editing", "input": "in.json", "instruction": "...", "expected": "out.json"}
//! ```
//!
//! Paths are relative to the directory. References may be IR JSON or BPMN
//! XML; editing inputs and expectations are IR JSON.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use bpmn_core::eval::{compare_graphs, load_graph};
use bpmn_core::par::{map_ordered, ExecMode};
use bpmn_core::similarity::{normalize_label, ratio_to_f64, to_flow_graph};
use bpmn_core::xml::{import_flow_graph, to_bpmn_xml};
use bpmn_core::{parse_process, validate, FlowGraph, ProcessModel};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assistant::{usage, Artifact, Assistant, AssistantError, Attempt, Modality};
use crate::catalog::ModelInfo;
use crate::provider::ProviderError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("cannot read task directory {path}: {source}")]
    Dir { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TaskSpec {
    Generation {
        id: String,
        description: String,
        reference: PathBuf,
    },
    Editing {
        id: String,
        input: PathBuf,
        instruction: String,
        expected: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Generation,
    Editing,
}

/// A task file, or the reason it could not be read (which is then reported
/// as a failed task).
#[derive(Debug, Clone, PartialEq)]
pub struct TaskEntry {
    pub id: String,
    pub dir: PathBuf,
    pub spec: Result<TaskSpec, String>,
}

impl TaskEntry {
    pub fn kind(&self) -> TaskKind {
        match &self.spec {
            Ok(TaskSpec::Editing { .. }) => TaskKind::Editing,
            // Unreadable files count against generation unless named otherwise.
            Err(_) if self.id.starts_with("edit") => TaskKind::Editing,
            _ => TaskKind::Generation,
        }
    }
}

pub const TASK_SUFFIX: &str = ".task.json";

/// Task files sorted by id. A missing directory is an error; an empty one
/// yields no tasks.
pub fn load_tasks(dir: &Path) -> Result<Vec<TaskEntry>, BenchError> {
    let read = std::fs::read_dir(dir).map_err(|source| BenchError::Dir { path: dir.to_path_buf(), source })?;
    let mut tasks = Vec::new();
    for entry in read {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(stem) = name.strip_suffix(TASK_SUFFIX) else { continue };
        let spec = std::fs::read_to_string(&path)
            .map_err(|e| e.to_string())
            .and_then(|text| serde_json::from_str::<TaskSpec>(&text).map_err(|e| e.to_string()));
        let id = match &spec {
            Ok(TaskSpec::Generation { id, .. } | TaskSpec::Editing { id, .. }) => id.clone(),
            Err(_) => stem.to_string(),
        };
        tasks.push(TaskEntry { id, dir: dir.to_path_buf(), spec });
    }
    tasks.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(tasks)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskRow {
    pub task_id: String,
    pub kind: TaskKind,
    pub modality: Modality,
    pub model: String,
    pub success: bool,
    pub attempts: usize,
    /// Generation only.
    pub similarity: Option<f64>,
    pub latency_s: f64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub error: Option<String>,
}

pub const TASK_COLUMNS: &[&str] = &[
    "task_id",
    "kind",
    "modality",
    "model",
    "outcome",
    "attempts",
    "similarity",
    "latency_s",
    "input_tokens",
    "output_tokens",
    "error",
];

fn read_model(path: &Path) -> Result<ProcessModel, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let model = parse_process(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let report = validate(&model);
    if !report.ok {
        return Err(format!("{}: invalid model: {}", path.display(), report.summary()));
    }
    Ok(model)
}

/// Node and flow multisets, ignoring flow ids. XML edits must keep element
/// ids, so this is how an edited document is checked against the expected
/// model.
pub fn same_graph(a: &FlowGraph, b: &FlowGraph) -> bool {
    type Triples = Vec<(String, String, String)>;
    fn key(g: &FlowGraph) -> (Triples, Triples) {
        let mut nodes: Vec<_> = g
            .nodes
            .iter()
            .map(|n| (n.id.clone(), n.kind.clone(), normalize_label(&n.label)))
            .collect();
        let mut edges: Vec<_> = g
            .edges
            .iter()
            .map(|e| (e.source.clone(), e.target.clone(), normalize_label(e.label.as_deref().unwrap_or(""))))
            .collect();
        nodes.sort();
        edges.sort();
        (nodes, edges)
    }
    key(a) == key(b)
}

struct Outcome {
    success: bool,
    similarity: Option<f64>,
    attempts: Vec<Attempt>,
    error: Option<String>,
}

impl Outcome {
    fn failed(error: String, attempts: Vec<Attempt>) -> Self {
        Outcome { success: false, similarity: None, attempts, error: Some(error) }
    }

    fn from_error(e: AssistantError) -> Self {
        let attempts = e.attempts().to_vec();
        Outcome::failed(format!("{}: {e}", e.code()), attempts)
    }
}

fn run_generation(assistant: &Assistant, dir: &Path, description: &str, reference: &Path, modality: Modality, include_joins: bool) -> Outcome {
    let reference = match load_graph(&dir.join(reference)) {
        Ok(g) => g,
        Err(e) => return Outcome::failed(e, Vec::new()),
    };
    let generated = match assistant.generate_process(description, modality) {
        Ok(g) => g,
        Err(e) => return Outcome::from_error(e),
    };
    let candidate = match &generated.artifact {
        Artifact::Model(m) => to_flow_graph(m).map_err(|e| e.to_string()),
        Artifact::Document(xml) => import_flow_graph(xml).map_err(|e| e.to_string()),
    };
    match candidate.and_then(|c| compare_graphs(&reference, &c, include_joins)) {
        Ok(c) => Outcome {
            success: true,
            similarity: Some(ratio_to_f64(c.similarity)),
            attempts: generated.attempts,
            error: None,
        },
        Err(e) => Outcome::failed(e, generated.attempts),
    }
}

fn run_editing(assistant: &Assistant, dir: &Path, input: &Path, instruction: &str, expected: &Path, modality: Modality) -> Outcome {
    let loaded = read_model(&dir.join(input)).and_then(|i| read_model(&dir.join(expected)).map(|e| (i, e)));
    let (input, expected) = match loaded {
        Ok(pair) => pair,
        Err(e) => return Outcome::failed(e, Vec::new()),
    };
    match modality {
        Modality::Json => match assistant.propose_edits(&input, instruction) {
            Ok(p) if p.result.model == expected => Outcome { success: true, similarity: None, attempts: p.attempts, error: None },
            Ok(p) => Outcome::failed("the edited model differs from the expected one".into(), p.attempts),
            Err(e) => Outcome::from_error(e),
        },
        Modality::Xml => {
            let xml = match to_bpmn_xml(&input) {
                Ok(x) => x,
                Err(e) => return Outcome::failed(e.to_string(), Vec::new()),
            };
            match assistant.edit_xml_direct(&xml, instruction) {
                Ok(g) => {
                    let Artifact::Document(edited) = &g.artifact else { unreachable!("xml edits return documents") };
                    let matches = import_flow_graph(edited)
                        .map_err(|e| e.to_string())
                        .and_then(|got| to_flow_graph(&expected).map(|want| same_graph(&got, &want)).map_err(|e| e.to_string()));
                    match matches {
                        Ok(true) => Outcome { success: true, similarity: None, attempts: g.attempts, error: None },
                        Ok(false) => Outcome::failed("the edited document differs from the expected model".into(), g.attempts),
                        Err(e) => Outcome::failed(e, g.attempts),
                    }
                }
                Err(e) => Outcome::from_error(e),
            }
        }
    }
}

pub struct BenchmarkOptions<'a> {
    pub models: Vec<&'static ModelInfo>,
    pub modalities: Vec<Modality>,
    pub include_joins: bool,
    pub mode: ExecMode,
    /// Builds the assistant for one task run. Scripted providers should be
    /// fresh per call so runs do not depend on scheduling.
    pub assistant: &'a (dyn Fn(&'static ModelInfo) -> Result<Assistant, ProviderError> + Sync),
}

/// Runs every task for every model and modality. Rows are ordered by model,
/// modality and task id whatever the execution mode.
pub fn run_benchmark(tasks: &[TaskEntry], options: &BenchmarkOptions<'_>) -> Vec<TaskRow> {
    let mut jobs = Vec::new();
    for &model in &options.models {
        for &modality in &options.modalities {
            for task in tasks {
                jobs.push((model, modality, task));
            }
        }
    }
    map_ordered(options.mode, &jobs, |&(model, modality, task)| {
        let outcome = match (&task.spec, (options.assistant)(model)) {
            (Err(e), _) => Outcome::failed(format!("unreadable task: {e}"), Vec::new()),
            (_, Err(e)) => Outcome::failed(format!("ProviderUnavailable: {e}"), Vec::new()),
            (Ok(TaskSpec::Generation { description, reference, .. }), Ok(assistant)) => {
                run_generation(&assistant, &task.dir, description, reference, modality, options.include_joins)
            }
            (Ok(TaskSpec::Editing { input, instruction, expected, .. }), Ok(assistant)) => {
                run_editing(&assistant, &task.dir, input, instruction, expected, modality)
            }
        };
        let u = usage(&outcome.attempts);
        TaskRow {
            task_id: task.id.clone(),
            kind: task.kind(),
            modality,
            model: model.name.to_string(),
            success: outcome.success,
            attempts: u.attempts,
            similarity: outcome.similarity,
            latency_s: u.latency_ms as f64 / 1000.0,
            input_tokens: u.input_tokens,
            output_tokens: u.output_tokens,
            error: outcome.error,
        }
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

/// Aggregates over rows of one kind and modality. Means use successful
/// tasks only; failures are counted separately.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Aggregate {
    pub tasks: usize,
    pub failures: usize,
    pub average_score: Option<f64>,
    pub success_rate: Option<f64>,
    pub mean_latency_s: Option<f64>,
    pub mean_input_tokens: Option<f64>,
    pub mean_output_tokens: Option<f64>,
}

pub fn aggregate<'a>(rows: impl Iterator<Item = &'a TaskRow> + Clone) -> Aggregate {
    let ok = rows.clone().filter(|r| r.success);
    let tasks = rows.clone().count();
    let successes = ok.clone().count();
    Aggregate {
        tasks,
        failures: tasks - successes,
        average_score: mean(ok.clone().filter_map(|r| r.similarity)),
        success_rate: (tasks > 0).then(|| successes as f64 / tasks as f64),
        mean_latency_s: mean(ok.clone().map(|r| r.latency_s)),
        mean_input_tokens: mean(ok.clone().map(|r| r.input_tokens as f64)),
        mean_output_tokens: mean(ok.map(|r| r.output_tokens as f64)),
    }
}

pub struct Report {
    pub rows: Vec<TaskRow>,
}

/// Report files and their fixed columns.
pub const GENERATION_SCORES: (&str, &[&str]) =
    ("generation_scores.csv", &["Model", "JSON", "XML", "Failures (JSON)", "Failures (XML)"]);
pub const GENERATION_SUMMARY: (&str, &[&str]) = ("generation_summary.csv", &["Modality", "Average Score", "Total Failures"]);
pub const GENERATION_PERFORMANCE: (&str, &[&str]) = ("generation_performance.csv", &["Metric", "JSON", "XML"]);
pub const EDITING_SUCCESS: (&str, &[&str]) = ("editing_success.csv", &["Model", "JSON", "XML"]);
pub const EDITING_PERFORMANCE: (&str, &[&str]) = ("editing_performance.csv", &["Metric", "JSON", "XML"]);
pub const TASKS_FILE: &str = "tasks.csv";

impl Report {
    fn select(&self, kind: TaskKind, modality: Modality, model: Option<&str>) -> Aggregate {
        aggregate(
            self.rows
                .iter()
                .filter(move |r| r.kind == kind && r.modality == modality && model.is_none_or(|m| r.model == m)),
        )
    }

    fn models(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !seen.contains(&r.model.as_str()) {
                seen.push(&r.model);
            }
        }
        seen
    }

    fn ran(&self, kind: TaskKind, modality: Modality) -> bool {
        self.rows.iter().any(|r| r.kind == kind && r.modality == modality)
    }

    pub fn tables(&self) -> BTreeMap<&'static str, Vec<Vec<String>>> {
        use Modality::{Json, Xml};
        use TaskKind::{Editing, Generation};
        let mut out = BTreeMap::new();
        let count = |kind, modality, a: Aggregate| if self.ran(kind, modality) { a.failures.to_string() } else { String::new() };

        let mut scores = Vec::new();
        let mut success = Vec::new();
        for model in self.models() {
            let (gj, gx) = (self.select(Generation, Json, Some(model)), self.select(Generation, Xml, Some(model)));
            scores.push(vec![
                model.to_string(),
                cell(gj.average_score),
                cell(gx.average_score),
                count(Generation, Json, gj),
                count(Generation, Xml, gx),
            ]);
            let (ej, ex) = (self.select(Editing, Json, Some(model)), self.select(Editing, Xml, Some(model)));
            success.push(vec![model.to_string(), cell(ej.success_rate), cell(ex.success_rate)]);
        }
        out.insert(GENERATION_SCORES.0, scores);
        out.insert(EDITING_SUCCESS.0, success);

        let (gj, gx) = (self.select(Generation, Json, None), self.select(Generation, Xml, None));
        out.insert(
            GENERATION_SUMMARY.0,
            vec![
                vec!["JSON".into(), cell(gj.average_score), count(Generation, Json, gj)],
                vec!["XML".into(), cell(gx.average_score), count(Generation, Xml, gx)],
            ],
        );
        out.insert(
            GENERATION_PERFORMANCE.0,
            vec![
                vec!["Mean Latency (seconds)".into(), cell(gj.mean_latency_s), cell(gx.mean_latency_s)],
                vec!["Average Input Tokens".into(), cell(gj.mean_input_tokens), cell(gx.mean_input_tokens)],
                vec!["Average Output Tokens".into(), cell(gj.mean_output_tokens), cell(gx.mean_output_tokens)],
            ],
        );
        let (ej, ex) = (self.select(Editing, Json, None), self.select(Editing, Xml, None));
        out.insert(
            EDITING_PERFORMANCE.0,
            vec![
                vec!["Average Latency (s)".into(), cell(ej.mean_latency_s), cell(ex.mean_latency_s)],
                vec!["Average Input Tokens".into(), cell(ej.mean_input_tokens), cell(ex.mean_input_tokens)],
                vec!["Average Output Tokens".into(), cell(ej.mean_output_tokens), cell(ex.mean_output_tokens)],
            ],
        );
        out
    }

    pub fn write_tasks_csv<W: Write>(&self, out: W) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TASK_COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.task_id.clone(),
                format!("{:?}", r.kind).to_lowercase(),
                r.modality.to_string(),
                r.model.clone(),
                if r.success { "success" } else { "failure" }.to_string(),
                r.attempts.to_string(),
                r.similarity.map(|s| s.to_string()).unwrap_or_default(),
                r.latency_s.to_string(),
                r.input_tokens.to_string(),
                r.output_tokens.to_string(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `tasks.csv` and the five summary tables into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let tasks = dir.join(TASKS_FILE);
        self.write_tasks_csv(std::fs::File::create(&tasks)?)?;
        written.push(tasks);
        let tables = self.tables();
        for (name, header) in [GENERATION_SCORES, GENERATION_SUMMARY, GENERATION_PERFORMANCE, EDITING_SUCCESS, EDITING_PERFORMANCE] {
            let path = dir.join(name);
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(header)?;
            for row in &tables[name] {
                w.write_record(row)?;
            }
            w.flush()?;
            written.push(path);
        }
        Ok(written)
    }
}
