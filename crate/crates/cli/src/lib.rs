//! `bpmn-assist`: every pipeline stage from the command line.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 the operation itself
//! failed (invalid output, failed edit, invalid document).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use bpmn_assistant::benchmark::{load_tasks, run_benchmark, BenchmarkOptions, Report};
use bpmn_assistant::catalog::{resolve, ModelInfo, ProviderKind};
use bpmn_assistant::{
    Artifact, Assistant, AssistantConfig, AssistantError, Attempt, MockProvider, MockScript, Modality, Providers,
};
use bpmn_core::eval::{compare_graphs, evaluate_pairs, load_graph, read_manifest, write_pairs_csv};
use bpmn_core::layout::layout_xml;
use bpmn_core::par::ExecMode;
use bpmn_core::similarity::ratio_to_f64;
use bpmn_core::xml::{import_flow_graph, reconstruct_ir, to_bpmn_xml, validate_xml_structure};
use bpmn_core::{parse_process, serialize_process, validate, ProcessModel, ValidationReport};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Failed(_) => 2,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

type CliResult = Result<(), CliError>;

#[derive(Debug, Parser)]
#[command(name = "bpmn-assist", version, about = "Generate, edit, lay out and compare BPMN process models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModalityArg {
    Json,
    Xml,
}

impl From<ModalityArg> for Modality {
    fn from(m: ModalityArg) -> Self {
        match m {
            ModalityArg::Json => Modality::Json,
            ModalityArg::Xml => Modality::Xml,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModalitySet {
    Json,
    Xml,
    Both,
}

#[derive(Debug, Args)]
pub struct ProviderArgs {
    /// Model or provider name, e.g. `mock`, `GPT-4o`, `claude-3-5-sonnet`, `openai`.
    #[arg(long, default_value = "mock")]
    pub provider: String,
    /// Scripted responses for the mock provider.
    #[arg(long)]
    pub mock_script: Option<PathBuf>,
    /// Provider calls allowed per operation, first try included.
    #[arg(long, default_value_t = 3)]
    pub retries: usize,
    /// HTTP timeout for remote providers, in seconds.
    #[arg(long, default_value_t = 120)]
    pub timeout: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a process from a text description.
    Generate {
        description: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        modality: ModalityArg,
        #[command(flatten)]
        provider: ProviderArgs,
        /// Output directory for `process.json` and `process.bpmn`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a natural language edit to a model file.
    Edit {
        /// IR JSON or BPMN XML.
        model: PathBuf,
        instruction: String,
        #[arg(long, value_enum, default_value = "json")]
        modality: ModalityArg,
        #[command(flatten)]
        provider: ProviderArgs,
        /// Output file: IR JSON for the json modality, BPMN XML for xml.
        /// Printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare reference/candidate pairs listed in a manifest.
    Evaluate {
        #[arg(long)]
        pairs: PathBuf,
        /// Keep synthesized join gateways when comparing.
        #[arg(long)]
        include_joins: bool,
        /// CSV output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
    /// Run generation and editing suites and write the report tables.
    Benchmark {
        #[arg(long)]
        tasks: PathBuf,
        #[command(flatten)]
        provider: ProviderArgs,
        /// Additional models to run, by name.
        #[arg(long = "model")]
        models: Vec<String>,
        #[arg(long, value_enum, default_value = "both")]
        modality: ModalitySet,
        #[arg(long)]
        include_joins: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sequential: bool,
    },
    /// Check an IR JSON or BPMN XML file.
    Validate { file: PathBuf },
    /// Compile IR JSON to BPMN XML with diagram information.
    Convert {
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave out the diagram section.
        #[arg(long)]
        no_layout: bool,
    },
    /// Print the flow graph of a BPMN XML file as JSON.
    Import { file: PathBuf },
    /// Recover the block-structured IR from BPMN XML.
    Reconstruct {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute (or recompute) the diagram section of a BPMN XML file.
    Layout {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Graph edit distance and similarity between two models.
    Ged {
        reference: PathBuf,
        candidate: PathBuf,
        #[arg(long)]
        include_joins: bool,
    },
    /// Start the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: std::net::SocketAddr,
        #[arg(long)]
        mock_script: Option<PathBuf>,
        #[arg(long, default_value = "mock")]
        default_model: String,
        #[arg(long, value_enum, default_value = "json")]
        modality: ModalityArg,
        /// Keep sessions as JSON files in this directory.
        #[arg(long)]
        persist_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 5 * 1024 * 1024)]
        upload_limit: usize,
        #[arg(long, default_value_t = 120)]
        timeout: u64,
    },
}

pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> ExitCode {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn execute(command: Command) -> CliResult {
    match command {
        Command::Generate { description, modality, provider, out } => generate(&description, modality.into(), &provider, &out),
        Command::Edit { model, instruction, modality, provider, out } => {
            edit(&model, &instruction, modality.into(), &provider, out.as_deref())
        }
        Command::Evaluate { pairs, include_joins, out, sequential } => evaluate(&pairs, include_joins, out.as_deref(), sequential),
        Command::Benchmark { tasks, provider, models, modality, include_joins, out, sequential } => {
            benchmark(&tasks, &provider, &models, modality, include_joins, &out, sequential)
        }
        Command::Validate { file } => validate_file(&file),
        Command::Convert { model, out, no_layout } => {
            let model = read_ir(&model)?;
            let xml = to_bpmn_xml(&model).map_err(|e| CliError::Failed(e.to_string()))?;
            let xml = if no_layout { xml } else { layout_xml(&xml).map_err(|e| CliError::Failed(e.to_string()))? };
            emit(out.as_deref(), &xml)
        }
        Command::Import { file } => {
            let graph = import_flow_graph(&read(&file)?).map_err(|e| CliError::Failed(e.to_string()))?;
            emit(None, &serde_json::to_string_pretty(&graph).expect("graphs serialize"))
        }
        Command::Reconstruct { file, out } => {
            let model = reconstruct_ir(&read(&file)?).map_err(|e| CliError::Failed(e.to_string()))?;
            emit(out.as_deref(), &serialize_process(&model))
        }
        Command::Layout { file, out } => {
            let xml = layout_xml(&read(&file)?).map_err(|e| CliError::Failed(e.to_string()))?;
            emit(out.as_deref(), &xml)
        }
        Command::Ged { reference, candidate, include_joins } => {
            let a = load_graph(&reference).map_err(usage)?;
            let b = load_graph(&candidate).map_err(usage)?;
            let c = compare_graphs(&a, &b, include_joins).map_err(CliError::Failed)?;
            let out = json!({
                "ged": c.ged,
                "exact": c.exact,
                "rged": c.rged.to_string(),
                "similarity": c.similarity.to_string(),
                "rged_value": ratio_to_f64(c.rged),
                "similarity_value": ratio_to_f64(c.similarity),
                "include_joins": include_joins,
            });
            emit(None, &serde_json::to_string_pretty(&out).expect("json"))
        }
        Command::Serve { addr, mock_script, default_model, modality, persist_dir, upload_limit, timeout } => {
            let script = load_script(mock_script.as_deref())?;
            let default_model = bpmn_assistant::find_model(&default_model)
                .ok_or_else(|| usage(format!("unknown model `{default_model}`")))?
                .name
                .to_string();
            let providers = Providers::new(script, Duration::from_secs(timeout), AssistantConfig::default());
            let config = bpmn_server::ServerConfig { default_model, default_modality: modality.into(), upload_limit, persist_dir };
            let state = bpmn_server::AppState::new(providers, config).map_err(usage)?;
            let runtime = tokio::runtime::Runtime::new().map_err(usage)?;
            runtime.block_on(bpmn_server::serve(state, addr)).map_err(usage)
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_ir(path: &Path) -> Result<ProcessModel, CliError> {
    let text = read(path)?;
    if text.trim_start().starts_with('<') {
        return reconstruct_ir(&text).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())));
    }
    let model = parse_process(&text).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
    let report = validate(&model);
    if !report.ok {
        return Err(CliError::Failed(format!("{}: invalid model:\n{}", path.display(), report.summary())));
    }
    Ok(model)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    let text = if text.ends_with('\n') { text.to_string() } else { format!("{text}\n") };
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(usage)?;
            }
            std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
        }
        None => std::io::stdout().write_all(text.as_bytes()).map_err(usage),
    }
}

fn load_script(path: Option<&Path>) -> Result<MockScript, CliError> {
    match path {
        Some(p) => MockScript::from_file(p).map_err(usage),
        None => Ok(MockScript::echo()),
    }
}

fn model_for(args: &ProviderArgs) -> Result<&'static ModelInfo, CliError> {
    resolve(&args.provider).ok_or_else(|| usage(format!("unknown provider or model `{}`", args.provider)))
}

fn config(args: &ProviderArgs) -> AssistantConfig {
    AssistantConfig { retry_limit: args.retries.max(1), ..AssistantConfig::default() }
}

fn single_assistant(args: &ProviderArgs) -> Result<Assistant, CliError> {
    let model = model_for(args)?;
    let config = config(args);
    if model.provider == ProviderKind::Mock {
        let script = load_script(args.mock_script.as_deref())?;
        return Ok(Assistant::new(Arc::new(MockProvider::new(script)), model, config));
    }
    let providers = Providers::new(MockScript::echo(), Duration::from_secs(args.timeout), config);
    providers.assistant(model.name).map_err(usage)
}

fn report_usage(attempts: &[Attempt]) {
    let u = bpmn_assistant::assistant::usage(attempts);
    eprintln!(
        "attempts: {}  latency: {:.3} s  input tokens: {}  output tokens: {}",
        u.attempts,
        u.latency_ms as f64 / 1000.0,
        u.input_tokens,
        u.output_tokens
    );
}

fn failed(e: AssistantError) -> CliError {
    report_usage(e.attempts());
    match e {
        AssistantError::ProviderUnavailable { .. } | AssistantError::EmptyInput => usage(e),
        other => CliError::Failed(other.to_string()),
    }
}

fn generate(description: &Path, modality: Modality, args: &ProviderArgs, out: &Path) -> CliResult {
    let text = read(description)?;
    let assistant = single_assistant(args)?;
    let generated = assistant.generate_process(&text, modality).map_err(failed)?;
    report_usage(&generated.attempts);
    let xml = match &generated.artifact {
        Artifact::Model(m) => {
            emit(Some(&out.join("process.json")), &serialize_process(m))?;
            to_bpmn_xml(m).map_err(|e| CliError::Failed(e.to_string()))?
        }
        Artifact::Document(xml) => xml.clone(),
    };
    let xml = layout_xml(&xml).map_err(|e| CliError::Failed(e.to_string()))?;
    emit(Some(&out.join("process.bpmn")), &xml)?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn edit(model_path: &Path, instruction: &str, modality: Modality, args: &ProviderArgs, out: Option<&Path>) -> CliResult {
    let text = read(model_path)?;
    let assistant = single_assistant(args)?;
    match modality {
        Modality::Json => {
            let model = read_ir(model_path)?;
            let proposed = assistant.propose_edits(&model, instruction).map_err(failed)?;
            report_usage(&proposed.attempts);
            emit(out, &serialize_process(&proposed.result.model))
        }
        Modality::Xml => {
            let xml = if text.trim_start().starts_with('<') {
                text
            } else {
                to_bpmn_xml(&read_ir(model_path)?).map_err(|e| CliError::Failed(e.to_string()))?
            };
            let generated = assistant.edit_xml_direct(&xml, instruction).map_err(failed)?;
            report_usage(&generated.attempts);
            let Artifact::Document(edited) = generated.artifact else { unreachable!("xml edits return documents") };
            emit(out, &layout_xml(&edited).map_err(|e| CliError::Failed(e.to_string()))?)
        }
    }
}

fn mode(sequential: bool) -> ExecMode {
    if sequential {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    }
}

fn evaluate(manifest: &Path, include_joins: bool, out: Option<&Path>, sequential: bool) -> CliResult {
    let pairs = read_manifest(manifest).map_err(usage)?;
    let rows = evaluate_pairs(&pairs, include_joins, mode(sequential));
    let summary = match out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            write_pairs_csv(file, &rows).map_err(usage)?
        }
        None => write_pairs_csv(std::io::stdout().lock(), &rows).map_err(usage)?,
    };
    eprintln!(
        "pairs: {}  average similarity: {}  failures: {}  joins: {}",
        summary.pairs,
        summary.average_score.map(|s| format!("{s:.4}")).unwrap_or_else(|| "n/a".into()),
        summary.total_failures,
        if include_joins { "included" } else { "excluded" }
    );
    Ok(())
}

fn benchmark(
    tasks_dir: &Path,
    args: &ProviderArgs,
    extra_models: &[String],
    modality: ModalitySet,
    include_joins: bool,
    out: &Path,
    sequential: bool,
) -> CliResult {
    let tasks = load_tasks(tasks_dir).map_err(usage)?;
    let mut models = vec![model_for(args)?];
    for name in extra_models {
        let m = bpmn_assistant::find_model(name).ok_or_else(|| usage(format!("unknown model `{name}`")))?;
        if !models.contains(&m) {
            models.push(m);
        }
    }
    let script_path = args.mock_script.clone().or_else(|| {
        let default = tasks_dir.join("mock_script.json");
        default.exists().then_some(default)
    });
    let mock = MockProvider::new(load_script(script_path.as_deref())?);
    let config = config(args);
    let providers = Providers::new(MockScript::echo(), Duration::from_secs(args.timeout), config);
    // Each run gets its own copy of the script so results do not depend on
    // scheduling.
    let make = |model: &'static ModelInfo| {
        if model.provider == ProviderKind::Mock {
            Ok(Assistant::new(Arc::new(mock.fresh()), model, config))
        } else {
            providers.assistant(model.name)
        }
    };
    let modalities = match modality {
        ModalitySet::Json => vec![Modality::Json],
        ModalitySet::Xml => vec![Modality::Xml],
        ModalitySet::Both => vec![Modality::Json, Modality::Xml],
    };
    let options = BenchmarkOptions { models, modalities, include_joins, mode: mode(sequential), assistant: &make };
    let report = Report { rows: run_benchmark(&tasks, &options) };
    let written = report.write_all(out).map_err(usage)?;
    let successes = report.rows.iter().filter(|r| r.success).count();
    eprintln!("tasks run: {}  succeeded: {}  reports: {}", report.rows.len(), successes, written.len());
    for path in written {
        eprintln!("  {}", path.display());
    }
    Ok(())
}

fn print_report(report: &ValidationReport) -> CliResult {
    emit(None, &serde_json::to_string_pretty(report).expect("reports serialize"))?;
    if report.ok {
        Ok(())
    } else {
        Err(CliError::Failed(format!("invalid:\n{}", report.summary())))
    }
}

fn validate_file(path: &Path) -> CliResult {
    let text = read(path)?;
    if text.trim_start().starts_with('<') {
        return print_report(&validate_xml_structure(&text));
    }
    match parse_process(&text) {
        Ok(model) => print_report(&validate(&model)),
        Err(e) => Err(CliError::Failed(format!("{}: {e}", path.display()))),
    }
}
