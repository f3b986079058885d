//! Command-line front end. `dispatch` never panics on bad input: every
//! failure maps to an exit code.
//!
//! Exit codes: 0 success or verified, 1 verification failure (budget
//! exhausted, FAIL verdict, agent contract failure), 2 usage error, 3
//! environment error (missing files, compiler, provider, transcript).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ds2sc_core::oracles::{
    compression_point_1db, curve_max_error_db, dft, fit_smoothness, la_transfer, rapp_pout_dbm, ComplexSample,
    CurvePoint, LaParams, RappParams,
};
use ds2sc_core::verdicts::{cross_check, parse_csv_log, parse_report, Verdict};
use ds2sc_core::{ArtifactOrigin, GeneratedArtifact};

use crate::agents::{
    run_code_generation, run_debugging, run_spec_parsing, run_testbench_generation, AgentError, DebugContext,
    DebugVariant, SpecParsingOptions,
};
use crate::ingest::{denoise, ingest_bytes, SourceFormat};
use crate::llm::{parse_transcript, Gateway, LlmResponse, ProviderConfig, Source};
use crate::pipeline::{run_pipeline, PipelineConfig, PipelineInputs, PipelineVerdict};
use crate::plot::{emit_plot_data, Figure};
use crate::spec_ir::{parse_template, test_scenarios, Provenance, SpecIrDocument, SpecIrTemplate};
use crate::toolchain::{classify, materialize_workspace, Toolchain, ToolchainMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ENV: i32 = 3;

const EXIT_CODES: &str = "Exit codes: 0 ok/verified, 1 verification failure, 2 usage error, 3 environment error";

#[derive(Debug, Parser)]
#[command(name = "ds2sc", version, about = "Datasheet to behavioral model pipeline", after_help = EXIT_CODES)]
pub struct Cli {
    /// JSON pipeline configuration; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory for every file the command writes [default: ./ds2sc-out/<unix-seconds>]
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the whole pipeline: parse, generate, build, simulate, repair.
    #[command(after_help = EXIT_CODES)]
    Run(RunArgs),
    /// Run the pipeline against a recorded transcript with no network access.
    #[command(after_help = EXIT_CODES)]
    Replay(ReplayArgs),
    /// Fill a Spec IR template from a datasheet.
    #[command(after_help = EXIT_CODES)]
    Parse(ParseArgs),
    /// Generate the model header from a filled Spec IR.
    #[command(after_help = EXIT_CODES)]
    Codegen(CodegenArgs),
    /// Generate the testbench from a filled Spec IR and model header.
    #[command(after_help = EXIT_CODES)]
    Tbgen(TbgenArgs),
    /// Ask the debugging agent to repair sources.
    #[command(after_help = EXIT_CODES)]
    Debug(DebugArgs),
    /// Build and run a model/testbench pair once.
    #[command(after_help = EXIT_CODES)]
    Simulate(SimulateArgs),
    /// Check a simulation log and report against the Spec IR scenarios.
    #[command(after_help = EXIT_CODES)]
    Verify(VerifyArgs),
    /// Evaluate the reference models.
    #[command(subcommand, after_help = EXIT_CODES)]
    Oracle(OracleCommand),
    /// Fit the PA smoothness factor to sampled curve points.
    #[command(name = "fit-pa", after_help = EXIT_CODES)]
    FitPa(FitPaArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TranscriptKind {
    /// Look responses up by request digest.
    Replay,
    /// Hand responses out in file order.
    Scripted,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Recorded transcript (JSON lines); without it the live provider is used.
    #[arg(long, value_name = "FILE")]
    pub transcript: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "replay")]
    pub transcript_mode: TranscriptKind,
    /// Append every exchange to this transcript file.
    #[arg(long, value_name = "FILE")]
    pub record: Option<PathBuf>,
    /// Chat-completions base URL for live calls.
    #[arg(long)]
    pub base_url: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ToolchainKind {
    Real,
    Stub,
}

#[derive(Debug, Clone, Args)]
pub struct ToolchainArgs {
    #[arg(long, value_enum)]
    pub toolchain: Option<ToolchainKind>,
    /// Directive file for the stub toolchain.
    #[arg(long, value_name = "FILE")]
    pub stub_behavior: Option<PathBuf>,
    #[arg(long)]
    pub compiler: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub include: Vec<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub lib_dir: Vec<PathBuf>,
    #[arg(long, value_name = "NAME")]
    pub link: Vec<String>,
    #[arg(long)]
    pub sim_timeout_s: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub datasheet: PathBuf,
    #[arg(long)]
    pub template: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub toolchain: ToolchainArgs,
    /// Let the oracle cross-check overrule the generated report.
    #[arg(long)]
    pub strict_oracle: bool,
    #[arg(long)]
    pub max_syntax_iters: Option<u32>,
    #[arg(long)]
    pub max_functional_iters: Option<u32>,
    /// Keep packaging, manufacturing and timing sections.
    #[arg(long)]
    pub no_denoise: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub transcript: PathBuf,
    #[arg(long)]
    pub datasheet: PathBuf,
    #[arg(long)]
    pub template: PathBuf,
    #[command(flatten)]
    pub toolchain: ToolchainArgs,
    #[arg(long)]
    pub strict_oracle: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ParseArgs {
    #[arg(long)]
    pub datasheet: PathBuf,
    #[arg(long)]
    pub template: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Datasheets longer than this many characters are sent in chunks.
    #[arg(long)]
    pub char_budget: Option<usize>,
    #[arg(long)]
    pub no_denoise: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CodegenArgs {
    /// Filled Spec IR.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub template: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TbgenArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub template: PathBuf,
    /// Model header the testbench drives.
    #[arg(long)]
    pub header: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Syntax,
    Functional,
}

#[derive(Debug, Clone, Args)]
pub struct DebugArgs {
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    /// Current source files (header and testbench).
    #[arg(long = "source", required = true, value_name = "FILE")]
    pub sources: Vec<PathBuf>,
    #[arg(long)]
    pub error_log: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub template: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long = "source", required = true, value_name = "FILE")]
    pub sources: Vec<PathBuf>,
    #[command(flatten)]
    pub toolchain: ToolchainArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub template: PathBuf,
    /// Fail on an oracle mismatch even if the report passes.
    #[arg(long)]
    pub strict_oracle: bool,
    /// Also write a plot-ready data file.
    #[arg(long, value_enum)]
    pub emit_plot: Option<Figure>,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Spectrum of a sequence as `re,im` rows.
    #[command(after_help = EXIT_CODES)]
    Fft(FftArgs),
    /// Limiting amplifier output for one input.
    #[command(after_help = EXIT_CODES)]
    La(LaArgs),
    /// Rapp PA output power, one value or a sweep.
    #[command(after_help = EXIT_CODES)]
    Rapp(RappArgs),
    /// 1 dB compression point of a Rapp PA.
    #[command(after_help = EXIT_CODES)]
    P1db(P1dbArgs),
}

#[derive(Debug, Clone, Args)]
pub struct FftArgs {
    /// Use the ramp 1..=N as input.
    #[arg(long, requires = "n")]
    pub ramp: bool,
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated real samples.
    #[arg(long, value_delimiter = ',', conflicts_with = "ramp")]
    pub values: Vec<f64>,
    #[arg(long)]
    pub inverse: bool,
}

#[derive(Debug, Clone, Args)]
pub struct LaArgs {
    #[arg(long)]
    pub gain: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub v_out_max: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub v_out_min: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub quiescent: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub vin: f64,
    #[arg(long)]
    pub disabled: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RappArgs {
    #[arg(long)]
    pub g: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub psat: f64,
    #[arg(long)]
    pub s: f64,
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["from", "to"])]
    pub pin: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "to")]
    pub from: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "from")]
    pub to: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
}

#[derive(Debug, Clone, Args)]
pub struct P1dbArgs {
    #[arg(long)]
    pub g: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub psat: f64,
    #[arg(long)]
    pub s: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FitPaArgs {
    /// CSV with a `pin_dbm,pout_dbm` header.
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub g: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub psat: f64,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn env(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_ENV,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn failed(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_FAILED,
            message: message.into(),
        }
    }
}

impl From<AgentError> for Failure {
    fn from(e: AgentError) -> Self {
        if e.is_environmental() {
            Failure::env(e.to_string())
        } else {
            Failure::failed(e.to_string())
        }
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `argv` (program name first) and runs the command.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default())
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
    match execute(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: &Cli) -> CmdResult {
    let cfg = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Run(a) => cmd_run(cli, cfg, a),
        Command::Replay(a) => {
            let run = RunArgs {
                datasheet: a.datasheet.clone(),
                template: a.template.clone(),
                model: ModelArgs {
                    transcript: Some(a.transcript.clone()),
                    transcript_mode: TranscriptKind::Replay,
                    record: None,
                    base_url: None,
                    model: None,
                },
                toolchain: a.toolchain.clone(),
                strict_oracle: a.strict_oracle,
                max_syntax_iters: None,
                max_functional_iters: None,
                no_denoise: false,
            };
            cmd_run(cli, cfg, &run)
        }
        Command::Parse(a) => cmd_parse(cli, cfg, a),
        Command::Codegen(a) => cmd_codegen(cli, cfg, a),
        Command::Tbgen(a) => cmd_tbgen(cli, cfg, a),
        Command::Debug(a) => cmd_debug(cli, cfg, a),
        Command::Simulate(a) => cmd_simulate(cli, cfg, a),
        Command::Verify(a) => cmd_verify(cli, a),
        Command::Oracle(o) => cmd_oracle(o),
        Command::FitPa(a) => cmd_fit_pa(a),
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::env(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, content: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Failure::env(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, content).map_err(|e| Failure::env(format!("{}: {e}", path.display())))
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out_dir.clone().unwrap_or_else(|| {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or_default();
        PathBuf::from("ds2sc-out").join(secs.to_string())
    })
}

fn apply_toolchain(cfg: &mut PipelineConfig, a: &ToolchainArgs) {
    let tc = &mut cfg.toolchain;
    if let Some(kind) = a.toolchain {
        tc.mode = match kind {
            ToolchainKind::Real => ToolchainMode::Real,
            ToolchainKind::Stub => ToolchainMode::Stub,
        };
    }
    if let Some(p) = &a.stub_behavior {
        tc.stub_behavior = Some(p.clone());
        if a.toolchain.is_none() {
            tc.mode = ToolchainMode::Stub;
        }
    }
    if let Some(c) = &a.compiler {
        tc.compiler_cmd = c.clone();
    }
    tc.include_paths.extend(a.include.iter().cloned());
    tc.library_paths.extend(a.lib_dir.iter().cloned());
    tc.link_libraries.extend(a.link.iter().cloned());
    if let Some(t) = a.sim_timeout_s {
        tc.sim_timeout_s = t;
    }
}

fn gateway(model: &ModelArgs, provider: &ProviderConfig, out: &Path) -> Result<Gateway, Failure> {
    let gw = match &model.transcript {
        Some(path) => {
            let entries = parse_transcript(&read_text(path)?).map_err(|e| Failure::env(format!("{}: {e}", path.display())))?;
            match model.transcript_mode {
                TranscriptKind::Replay => Gateway::new(Source::Replay(entries)),
                TranscriptKind::Scripted => {
                    Gateway::new(Source::Scripted(entries.into_iter().map(|e| e.response).collect::<Vec<LlmResponse>>()))
                }
            }
        }
        None => {
            let mut p = provider.clone();
            if let Some(u) = &model.base_url {
                p.base_url = u.clone();
            }
            if let Some(m) = &model.model {
                p.model = m.clone();
            }
            // live runs always keep a transcript so they can be replayed
            let record = model.record.clone().unwrap_or_else(|| out.join("transcript.jsonl"));
            return Ok(Gateway::new(Source::Live(p)).with_record_path(record));
        }
    };
    Ok(match &model.record {
        Some(r) => gw.with_record_path(r),
        None => gw,
    })
}

fn cmd_run(cli: &Cli, mut cfg: PipelineConfig, a: &RunArgs) -> CmdResult {
    apply_toolchain(&mut cfg, &a.toolchain);
    cfg.strict_oracle |= a.strict_oracle;
    if let Some(n) = a.max_syntax_iters {
        cfg.max_syntax_iters = n;
    }
    if let Some(n) = a.max_functional_iters {
        cfg.max_functional_iters = n;
    }
    if a.no_denoise {
        cfg.denoise = false;
    }
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let out = out_dir(cli);
    std::fs::create_dir_all(&out).map_err(|e| Failure::env(format!("{}: {e}", out.display())))?;
    let mut gw = gateway(&a.model, &cfg.provider, &out)?;
    let inputs = PipelineInputs {
        datasheet_path: &a.datasheet,
        template_path: &a.template,
        out_dir: &out,
    };
    let res = run_pipeline(&inputs, &cfg, &mut gw).map_err(|e| match e {
        crate::pipeline::PipelineError::Config(m) => Failure::usage(m),
        other => Failure::env(other.to_string()),
    })?;
    println!(
        "{} ({} syntax, {} functional iteration(s)); manifest: {}",
        res.verdict.as_str(),
        res.syntax_iterations(),
        res.functional_iterations(),
        res.outputs.run_json.display()
    );
    if let Some(e) = &res.error {
        eprintln!("error: {e}");
    }
    Ok(match res.verdict {
        PipelineVerdict::Verified => EXIT_OK,
        PipelineVerdict::BudgetExhausted | PipelineVerdict::AgentFailure => EXIT_FAILED,
        PipelineVerdict::EnvironmentFailure => EXIT_ENV,
    })
}

fn load_template(path: &Path) -> Result<SpecIrTemplate, Failure> {
    parse_template(&read_text(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_spec(spec: &Path, template: &Path) -> Result<SpecIrDocument, Failure> {
    let tpl = load_template(template)?;
    SpecIrDocument::from_candidate(&tpl, &read_text(spec)?, Provenance::Manual)
        .map_err(|r| Failure::failed(format!("{} does not match its template:\n{}", spec.display(), r.render())))
}

fn load_artifact(path: &Path, origin: ArtifactOrigin) -> Result<GeneratedArtifact, Failure> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .ok_or_else(|| Failure::usage(format!("{} has no file name", path.display())))?;
    GeneratedArtifact::new(name, read_text(path)?, origin).map_err(|e| Failure::usage(e.to_string()))
}

fn cmd_parse(cli: &Cli, cfg: PipelineConfig, a: &ParseArgs) -> CmdResult {
    let tpl = load_template(&a.template)?;
    let raw = std::fs::read(&a.datasheet).map_err(|e| Failure::env(format!("{}: {e}", a.datasheet.display())))?;
    let mut ds = ingest_bytes(&raw, SourceFormat::from_path(&a.datasheet)).map_err(|e| Failure::usage(e.to_string()))?;
    if !a.no_denoise && cfg.denoise {
        ds = denoise(&ds, tpl.domain, &cfg.noise).datasheet;
    }
    let out = out_dir(cli);
    let mut gw = gateway(&a.model, &cfg.provider, &out)?;
    let opts = SpecParsingOptions {
        char_budget: a.char_budget.unwrap_or(cfg.char_budget),
    };
    let run = run_spec_parsing(&ds, &tpl, &mut gw, &cfg.agent(crate::llm::AgentKind::SpecParsing), opts)?;
    let path = out.join("spec_ir.json");
    write_file(&path, &(run.value.to_json_pretty() + "\n"))?;
    println!("{}", path.display());
    Ok(EXIT_OK)
}

fn cmd_codegen(cli: &Cli, cfg: PipelineConfig, a: &CodegenArgs) -> CmdResult {
    let spec = load_spec(&a.spec, &a.template)?;
    let out = out_dir(cli);
    let mut gw = gateway(&a.model, &cfg.provider, &out)?;
    let run = run_code_generation(&spec, &mut gw, &cfg.agent(crate::llm::AgentKind::CodeGen), cfg.file_names())?;
    let path = out.join(&run.value.file_name);
    write_file(&path, &run.value.content)?;
    println!("{}", path.display());
    Ok(EXIT_OK)
}

fn cmd_tbgen(cli: &Cli, cfg: PipelineConfig, a: &TbgenArgs) -> CmdResult {
    let spec = load_spec(&a.spec, &a.template)?;
    let header = load_artifact(&a.header, ArtifactOrigin::CodeGen)?;
    let out = out_dir(cli);
    let mut gw = gateway(&a.model, &cfg.provider, &out)?;
    let names = crate::agents::FileNames {
        header: &header.file_name,
        ..cfg.file_names()
    };
    let run = run_testbench_generation(&spec, &header, &mut gw, &cfg.agent(crate::llm::AgentKind::TbGen), names)?;
    let path = out.join(&run.value.file_name);
    write_file(&path, &run.value.content)?;
    println!("{}", path.display());
    Ok(EXIT_OK)
}

fn cmd_debug(cli: &Cli, cfg: PipelineConfig, a: &DebugArgs) -> CmdResult {
    let sources = a
        .sources
        .iter()
        .map(|p| load_artifact(p, ArtifactOrigin::Fixture))
        .collect::<Result<Vec<_>, _>>()?;
    let opt_text = |p: &Option<PathBuf>| p.as_deref().map(read_text).transpose();
    let spec_ir = match (&a.spec, &a.template) {
        (Some(s), Some(t)) => Some(load_spec(s, t)?),
        (None, None) => None,
        _ => return Err(Failure::usage("--spec and --template go together")),
    };
    let ctx = DebugContext {
        variant: match a.variant {
            VariantArg::Syntax => DebugVariant::Syntax,
            VariantArg::Functional => DebugVariant::Functional,
        },
        sources,
        error_log: opt_text(&a.error_log)?,
        csv_text: opt_text(&a.csv)?,
        report_text: opt_text(&a.report)?,
        spec_ir,
        notes: Vec::new(),
    };
    ctx.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let out = out_dir(cli);
    let mut gw = gateway(&a.model, &cfg.provider, &out)?;
    let run = run_debugging(&ctx, &mut gw, &cfg.agent(crate::llm::AgentKind::Debug), cfg.file_names())?;
    for f in &run.value {
        let path = out.join(&f.file_name);
        write_file(&path, &f.content)?;
        println!("{} (revision {})", path.display(), f.revision);
    }
    Ok(EXIT_OK)
}

fn cmd_simulate(cli: &Cli, mut cfg: PipelineConfig, a: &SimulateArgs) -> CmdResult {
    apply_toolchain(&mut cfg, &a.toolchain);
    let sources = a
        .sources
        .iter()
        .map(|p| load_artifact(p, ArtifactOrigin::Fixture))
        .collect::<Result<Vec<_>, _>>()?;
    let tc = Toolchain::new(cfg.toolchain.clone()).map_err(|e| Failure::env(e.to_string()))?;
    let out = out_dir(cli);
    let mut ws = materialize_workspace(&out.join("work"), 1, &sources).map_err(|e| {
        if e.is_environmental() {
            Failure::env(e.to_string())
        } else {
            Failure::usage(e.to_string())
        }
    })?;
    let compile = tc.compile(&mut ws).map_err(|e| Failure::env(e.to_string()))?;
    let run = match compile.status {
        crate::toolchain::SimStatus::Ok => Some(tc.simulate(&mut ws).map_err(|e| Failure::env(e.to_string()))?),
        _ => None,
    };
    let report = run
        .as_ref()
        .and_then(|_| ws.read_output(ws.outputs.report_path.as_ref()))
        .and_then(|t| parse_report(&t).ok());
    let signal = classify(&compile, run.as_ref(), report.as_ref());
    let summary = json!({
        "signal": signal,
        "workspace": ws.root,
        "compile": compile,
        "run": run,
        "outputs": ws.outputs,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&out.join("simulate.json"), &(text.clone() + "\n"))?;
    println!("{text}");
    Ok(if signal == crate::toolchain::PipelineSignal::Pass {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs) -> CmdResult {
    let spec = load_spec(&a.spec, &a.template)?;
    let csv_text = read_text(&a.csv)?;
    let log = parse_csv_log(&csv_text).map_err(|e| Failure::failed(format!("{}: {e}", a.csv.display())))?;
    let scenarios = test_scenarios(&spec).map_err(|e| Failure::usage(e.to_string()))?;
    let report = match &a.report {
        Some(p) => Some(parse_report(&read_text(p)?).map_err(|e| Failure::failed(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let mut results = Vec::new();
    let mut oracle_ok = true;
    for s in &scenarios {
        match cross_check(&log, s) {
            Ok(checks) => {
                let passed = checks.iter().all(|c| c.passed);
                oracle_ok &= passed;
                results.push(json!({"scenario": s.name, "passed": passed, "checks": checks}));
            }
            Err(e) => {
                oracle_ok = false;
                results.push(json!({"scenario": s.name, "passed": false, "error": e.to_string()}));
            }
        }
    }
    let report_ok = report.as_ref().map(|r| r.verdict == Verdict::Pass);
    let passed = if a.strict_oracle {
        oracle_ok
    } else {
        report_ok.unwrap_or(oracle_ok)
    };
    let out = out_dir(cli);
    let summary = json!({
        "passed": passed,
        "report": report.as_ref().map(|r| r.verdict.as_str()),
        "oracle_passed": oracle_ok,
        "scenarios": results,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&out.join("cross_check.json"), &(text + "\n"))?;
    if let Some(fig) = a.emit_plot {
        let data = emit_plot_data(fig, &log, &scenarios).map_err(|e| Failure::env(e.to_string()))?;
        let name = match fig {
            Figure::LaWaveforms => "la_waveforms.csv",
            Figure::PaCurve => "pa_curve.csv",
        };
        write_file(&out.join(name), &data)?;
        println!("{}", out.join(name).display());
    }
    println!(
        "{} (report: {}, oracle: {})",
        if passed { "PASS" } else { "FAIL" },
        report.as_ref().map(|r| r.verdict.as_str()).unwrap_or("none"),
        if oracle_ok { "agrees" } else { "disagrees" }
    );
    Ok(if passed { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_oracle(o: &OracleCommand) -> CmdResult {
    match o {
        OracleCommand::Fft(a) => {
            let input: Vec<ComplexSample> = if a.ramp {
                (1..=a.n.unwrap_or(0)).map(|i| ComplexSample::real(i as f64)).collect()
            } else {
                a.values.iter().map(|v| ComplexSample::real(*v)).collect()
            };
            if input.is_empty() {
                return Err(Failure::usage("give --ramp --n N or --values"));
            }
            let out = dft(&input, a.inverse).map_err(|e| Failure::usage(e.to_string()))?;
            println!("re,im");
            for x in out {
                println!("{},{}", x.re, x.im);
            }
        }
        OracleCommand::La(a) => {
            let p = LaParams {
                gain: a.gain,
                v_out_max: a.v_out_max,
                v_out_min: a.v_out_min,
                quiescent: a.quiescent,
                enabled: !a.disabled,
            };
            p.validate().map_err(|e| Failure::usage(e.to_string()))?;
            println!("{}", la_transfer(a.vin, &p));
        }
        OracleCommand::Rapp(a) => {
            let p = RappParams::new(a.g, a.psat, a.s);
            p.validate().map_err(|e| Failure::usage(e.to_string()))?;
            let pins: Vec<f64> = match (a.pin, a.from, a.to) {
                (Some(pin), _, _) => vec![pin],
                (None, Some(from), Some(to)) if a.step > 0.0 && to >= from => {
                    let n = ((to - from) / a.step + 1e-9).floor() as usize;
                    (0..=n).map(|i| from + a.step * i as f64).collect()
                }
                _ => return Err(Failure::usage("give --pin or --from/--to with a positive --step")),
            };
            println!("pin_dbm,pout_dbm");
            for pin in pins {
                println!("{pin},{}", rapp_pout_dbm(pin, &p));
            }
        }
        OracleCommand::P1db(a) => {
            let p = RappParams::new(a.g, a.psat, a.s);
            p.validate().map_err(|e| Failure::usage(e.to_string()))?;
            let (pin, pout) = compression_point_1db(&p).map_err(|e| Failure::usage(e.to_string()))?;
            println!("pin_dbm,pout_dbm");
            println!("{pin},{pout}");
        }
    }
    Ok(EXIT_OK)
}

/// Reads `pin_dbm,pout_dbm` rows after a header line.
pub fn parse_curve_points(text: &str) -> Result<Vec<CurvePoint>, String> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or("empty points file")?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["pin_dbm", "pout_dbm"] {
        return Err(format!("expected header `pin_dbm,pout_dbm`, found `{header}`"));
    }
    let mut points = Vec::new();
    for (i, l) in lines {
        let mut cells = l.split(',').map(|c| c.trim().parse::<f64>());
        match (cells.next(), cells.next(), cells.next()) {
            (Some(Ok(pin)), Some(Ok(pout)), None) if pin.is_finite() && pout.is_finite() => {
                points.push(CurvePoint::new(pin, pout))
            }
            _ => return Err(format!("line {}: expected two numbers, found `{l}`", i + 1)),
        }
    }
    points.sort_by(|a, b| a.pin_dbm.total_cmp(&b.pin_dbm));
    Ok(points)
}

fn cmd_fit_pa(a: &FitPaArgs) -> CmdResult {
    let points = parse_curve_points(&read_text(&a.points)?).map_err(|e| Failure::usage(format!("{}: {e}", a.points.display())))?;
    let s = fit_smoothness(&points, a.g, a.psat).map_err(|e| Failure::failed(e.to_string()))?;
    let model = RappParams::new(a.g, a.psat, s);
    let (lo, hi) = (points[0].pin_dbm, points[points.len() - 1].pin_dbm);
    let steps = (((hi - lo) / 0.01).ceil() as usize).max(1);
    let dense: Vec<CurvePoint> = (0..=steps)
        .map(|i| {
            let pin = if i == steps { hi } else { lo + (hi - lo) * i as f64 / steps as f64 };
            CurvePoint::new(pin, rapp_pout_dbm(pin, &model))
        })
        .collect();
    let err = curve_max_error_db(&points, &dense).map_err(|e| Failure::failed(e.to_string()))?;
    println!("s={s:.6}");
    println!("max_error_db={err:.6}");
    Ok(if err < 1.0 { EXIT_OK } else { EXIT_FAILED })
}
