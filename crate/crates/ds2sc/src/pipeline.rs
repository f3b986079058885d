//! The end-to-end run: parse the datasheet into a Spec IR, generate the model
//! and testbench, then build, simulate and repair until the report passes or
//! a loop runs out of budget.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use ds2sc_core::verdicts::{cross_check, parse_csv_log, parse_report, CheckOutcome, Report};
use ds2sc_core::GeneratedArtifact;

use crate::agents::{
    run_code_generation, run_debugging, run_spec_parsing, run_testbench_generation, AgentConfig, AgentError,
    DebugContext, DebugVariant, FileNames, SpecParsingOptions,
};
use crate::ingest::{denoise, ingest_bytes, NoiseConfig, RemovedSection, SourceFormat, DEFAULT_CHAR_BUDGET};
use crate::llm::{AgentKind, Gateway, ProviderConfig, TranscriptMode};
use crate::spec_ir::{parse_template, test_scenarios, SpecIrDocument};
use crate::toolchain::{
    classify, materialize_workspace, PipelineSignal, SimOutcome, SimStatus, Toolchain, ToolchainConfig,
    ToolchainError, Workspace,
};

pub const DEFAULT_STDERR_BUDGET: usize = 200 * 1024;
pub const DEFAULT_CSV_ROW_BUDGET: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub max_syntax_iters: u32,
    pub max_functional_iters: u32,
    pub agent_configs: BTreeMap<AgentKind, AgentConfig>,
    pub toolchain: ToolchainConfig,
    pub provider: ProviderConfig,
    /// Let the oracle cross-check overrule the generated report.
    pub strict_oracle: bool,
    pub denoise: bool,
    pub noise: NoiseConfig,
    pub char_budget: usize,
    pub stderr_budget_bytes: usize,
    pub csv_row_budget: usize,
    pub header_name: String,
    pub testbench_name: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            max_syntax_iters: 5,
            max_functional_iters: 3,
            agent_configs: AgentKind::ALL.iter().map(|k| (*k, AgentConfig::default_for(*k))).collect(),
            toolchain: ToolchainConfig::default(),
            provider: ProviderConfig::default(),
            strict_oracle: false,
            denoise: true,
            noise: NoiseConfig::default(),
            char_budget: DEFAULT_CHAR_BUDGET,
            stderr_budget_bytes: DEFAULT_STDERR_BUDGET,
            csv_row_budget: DEFAULT_CSV_ROW_BUDGET,
            header_name: "chiplet_core.h".into(),
            testbench_name: "main.cpp".into(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.max_syntax_iters == 0 || self.max_functional_iters == 0 {
            return Err(PipelineError::Config("iteration budgets must be at least 1".into()));
        }
        if self.csv_row_budget < 2 {
            return Err(PipelineError::Config("csv_row_budget must be at least 2".into()));
        }
        Ok(())
    }

    pub fn agent(&self, kind: AgentKind) -> AgentConfig {
        self.agent_configs.get(&kind).cloned().unwrap_or_else(|| AgentConfig::default_for(kind))
    }

    pub fn file_names(&self) -> FileNames<'_> {
        FileNames {
            header: &self.header_name,
            testbench: &self.testbench_name,
            csv: &self.toolchain.csv_name,
            report: &self.toolchain.report_name,
        }
    }
}

/// Problems with the invocation itself, before any stage runs.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Parsing,
    Generating,
    TbGenerating,
    Building,
    Simulating,
    SyntaxRepair,
    FunctionalRepair,
    Done,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopKind {
    Syntax,
    Functional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineVerdict {
    Verified,
    BudgetExhausted,
    AgentFailure,
    EnvironmentFailure,
}

impl PipelineVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            PipelineVerdict::Verified => "verified",
            PipelineVerdict::BudgetExhausted => "budget_exhausted",
            PipelineVerdict::AgentFailure => "agent_failure",
            PipelineVerdict::EnvironmentFailure => "environment_failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: u32,
    #[serde(rename = "loop")]
    pub loop_kind: LoopKind,
    pub signal_before: PipelineSignal,
    pub files_changed: Vec<String>,
    /// Signal of the rebuilt attempt; absent when the run stopped first.
    pub signal_after: Option<PipelineSignal>,
    pub transcript_refs: Vec<String>,
    pub attempt_before: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attempt: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agent_attempts: Option<u32>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub digests: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<SimStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal: Option<PipelineSignal>,
    pub duration_ms: u64,
}

impl StageRecord {
    fn new(stage: Stage) -> Self {
        Self {
            stage,
            attempt: None,
            agent_attempts: None,
            digests: Vec::new(),
            status: None,
            signal: None,
            duration_ms: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioCheck {
    pub scenario: String,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub passed: bool,
    pub scenarios: Vec<ScenarioCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub attempt: u32,
    pub workspace: String,
    pub revisions: BTreeMap<String, u32>,
    pub compile: SimStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<SimStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ds2sc_core::verdicts::Verdict>,
    pub signal: PipelineSignal,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactSummary {
    pub file_name: String,
    pub revision: u32,
    pub origin: ds2sc_core::ArtifactOrigin,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSummary {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineOutputs {
    pub out_dir: PathBuf,
    pub run_json: PathBuf,
    pub spec_ir: Option<PathBuf>,
    pub final_dir: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub verdict: PipelineVerdict,
    pub final_signal: Option<PipelineSignal>,
    pub final_artifacts: Vec<GeneratedArtifact>,
    pub iterations: Vec<IterationRecord>,
    pub attempts: Vec<AttemptRecord>,
    pub stages: Vec<StageRecord>,
    pub outputs: PipelineOutputs,
    pub error: Option<String>,
}

impl PipelineResult {
    pub fn syntax_iterations(&self) -> usize {
        self.iterations.iter().filter(|i| i.loop_kind == LoopKind::Syntax).count()
    }

    pub fn functional_iterations(&self) -> usize {
        self.iterations.iter().filter(|i| i.loop_kind == LoopKind::Functional).count()
    }
}

/// The manifest written to `run.json`. Paths are relative to the output
/// directory and nothing depends on the wall clock, so two runs over the
/// same inputs, transcript and stub directives produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub verdict: PipelineVerdict,
    pub final_signal: Option<PipelineSignal>,
    pub transcript_mode: TranscriptMode,
    pub inputs: BTreeMap<String, InputSummary>,
    pub template_id: Option<String>,
    pub removed_sections: Vec<RemovedSection>,
    pub budgets: BTreeMap<String, u32>,
    pub strict_oracle: bool,
    pub stages: Vec<StageRecord>,
    pub attempts: Vec<AttemptRecord>,
    pub iterations: Vec<IterationRecord>,
    pub artifacts: Vec<ArtifactSummary>,
    pub outputs: BTreeMap<String, String>,
    pub error: Option<String>,
}

pub struct PipelineInputs<'a> {
    pub datasheet_path: &'a Path,
    pub template_path: &'a Path,
    pub out_dir: &'a Path,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn rel(base: &Path, p: &Path) -> String {
    p.strip_prefix(base).unwrap_or(p).to_string_lossy().replace('\\', "/")
}

fn read(path: &Path) -> Result<Vec<u8>, PipelineError> {
    std::fs::read(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, content: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| PipelineError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, content).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// How a run stopped early.
enum Halt {
    Agent(AgentError),
    Toolchain(ToolchainError),
    Io(PipelineError),
}

impl From<AgentError> for Halt {
    fn from(e: AgentError) -> Self {
        Halt::Agent(e)
    }
}

impl From<ToolchainError> for Halt {
    fn from(e: ToolchainError) -> Self {
        Halt::Toolchain(e)
    }
}

impl From<PipelineError> for Halt {
    fn from(e: PipelineError) -> Self {
        Halt::Io(e)
    }
}

impl Halt {
    fn verdict(&self) -> PipelineVerdict {
        match self {
            Halt::Agent(e) if !e.is_environmental() => PipelineVerdict::AgentFailure,
            Halt::Toolchain(e) if !e.is_environmental() => PipelineVerdict::AgentFailure,
            _ => PipelineVerdict::EnvironmentFailure,
        }
    }

    fn message(&self) -> String {
        match self {
            Halt::Agent(e) => e.to_string(),
            Halt::Toolchain(e) => e.to_string(),
            Halt::Io(e) => e.to_string(),
        }
    }
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    gw: &'a mut Gateway,
    out_dir: PathBuf,
    stages: Vec<StageRecord>,
    attempts: Vec<AttemptRecord>,
    iterations: Vec<IterationRecord>,
    artifacts: Vec<GeneratedArtifact>,
    spec: Option<SpecIrDocument>,
    final_signal: Option<PipelineSignal>,
    last_workspace: Option<Workspace>,
}

/// Runs every stage. Errors are returned only for unusable inputs or
/// configuration; anything that goes wrong once the run starts is reported
/// through the result's verdict, and `run.json` is always written.
pub fn run_pipeline(
    inputs: &PipelineInputs<'_>,
    cfg: &PipelineConfig,
    gw: &mut Gateway,
) -> Result<PipelineResult, PipelineError> {
    cfg.validate()?;
    let ds_bytes = read(inputs.datasheet_path)?;
    let tpl_bytes = read(inputs.template_path)?;
    let tpl_text = String::from_utf8(tpl_bytes.clone()).map_err(|_| PipelineError::Input {
        path: inputs.template_path.to_path_buf(),
        message: "template is not UTF-8".into(),
    })?;
    let template = parse_template(&tpl_text).map_err(|e| PipelineError::Input {
        path: inputs.template_path.to_path_buf(),
        message: e.to_string(),
    })?;
    let datasheet =
        ingest_bytes(&ds_bytes, SourceFormat::from_path(inputs.datasheet_path)).map_err(|e| PipelineError::Input {
            path: inputs.datasheet_path.to_path_buf(),
            message: e.to_string(),
        })?;
    std::fs::create_dir_all(inputs.out_dir).map_err(|source| PipelineError::Io {
        path: inputs.out_dir.to_path_buf(),
        source,
    })?;

    let (datasheet, removed) = if cfg.denoise {
        let d = denoise(&datasheet, template.domain, &cfg.noise);
        for r in &d.removed {
            log::info!("dropped section `{}`: {}", r.heading, r.reason);
        }
        (d.datasheet, d.removed)
    } else {
        (datasheet, Vec::new())
    };

    let mut run = Run {
        cfg,
        gw,
        out_dir: inputs.out_dir.to_path_buf(),
        stages: Vec::new(),
        attempts: Vec::new(),
        iterations: Vec::new(),
        artifacts: Vec::new(),
        spec: None,
        final_signal: None,
        last_workspace: None,
    };
    let outcome = run.execute(&datasheet, &template);
    let (verdict, error) = match outcome {
        Ok(v) => (v, None),
        Err(h) => {
            log::error!("{}", h.message());
            (h.verdict(), Some(h.message()))
        }
    };
    run.stages.push(StageRecord::new(if verdict == PipelineVerdict::Verified {
        Stage::Done
    } else {
        Stage::Failed
    }));

    let out = inputs.out_dir;
    let mut outputs = PipelineOutputs {
        out_dir: out.to_path_buf(),
        run_json: out.join("run.json"),
        spec_ir: None,
        final_dir: None,
        csv: None,
        report: None,
    };
    let mut out_map = BTreeMap::new();
    if run.spec.is_some() {
        outputs.spec_ir = Some(out.join("spec_ir.json"));
        out_map.insert("spec_ir".to_string(), "spec_ir.json".to_string());
    }
    if !run.artifacts.is_empty() {
        let final_dir = out.join("final");
        for a in &run.artifacts {
            write(&final_dir.join(&a.file_name), &a.content)?;
        }
        if let Some(ws) = &run.last_workspace {
            for (src, key) in [(&ws.outputs.csv_path, "csv"), (&ws.outputs.report_path, "report")] {
                if let Some(src) = src {
                    let dst = final_dir.join(src.file_name().expect("output file name"));
                    std::fs::copy(src, &dst).map_err(|source| PipelineError::Io { path: dst.clone(), source })?;
                    out_map.insert(key.to_string(), rel(out, &dst));
                    match key {
                        "csv" => outputs.csv = Some(dst),
                        _ => outputs.report = Some(dst),
                    }
                }
            }
        }
        out_map.insert("final_dir".to_string(), "final".to_string());
        outputs.final_dir = Some(final_dir);
    }
    out_map.insert("run_json".to_string(), "run.json".to_string());

    let file_name = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let manifest = RunManifest {
        verdict,
        final_signal: run.final_signal,
        transcript_mode: run.gw.mode(),
        inputs: BTreeMap::from([
            (
                "datasheet".to_string(),
                InputSummary {
                    name: file_name(inputs.datasheet_path),
                    sha256: sha256_hex(&ds_bytes),
                },
            ),
            (
                "template".to_string(),
                InputSummary {
                    name: file_name(inputs.template_path),
                    sha256: sha256_hex(&tpl_bytes),
                },
            ),
        ]),
        template_id: Some(template.template_id.clone()),
        removed_sections: removed,
        budgets: BTreeMap::from([
            ("max_syntax_iters".to_string(), cfg.max_syntax_iters),
            ("max_functional_iters".to_string(), cfg.max_functional_iters),
        ]),
        strict_oracle: cfg.strict_oracle,
        stages: run.stages.clone(),
        attempts: run.attempts.clone(),
        iterations: run.iterations.clone(),
        artifacts: run
            .artifacts
            .iter()
            .map(|a| ArtifactSummary {
                file_name: a.file_name.clone(),
                revision: a.revision,
                origin: a.origin,
                sha256: sha256_hex(a.content.as_bytes()),
            })
            .collect(),
        outputs: out_map,
        error: error.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&outputs.run_json, json + "\n")?;

    Ok(PipelineResult {
        verdict,
        final_signal: run.final_signal,
        final_artifacts: run.artifacts,
        iterations: run.iterations,
        attempts: run.attempts,
        stages: run.stages,
        outputs,
        error,
    })
}

impl Run<'_> {
    fn elapsed_since(&self, exchange: usize) -> u64 {
        self.gw.exchanges()[exchange..].iter().map(|e| e.response.elapsed_ms).sum()
    }

    fn execute(
        &mut self,
        datasheet: &crate::ingest::Datasheet,
        template: &crate::spec_ir::SpecIrTemplate,
    ) -> Result<PipelineVerdict, Halt> {
        let cfg = self.cfg;
        // A missing compiler should stop the run before any model call.
        let toolchain = Toolchain::new(cfg.toolchain.clone())?;
        let names = cfg.file_names();

        let mark = self.gw.exchanges().len();
        let opts = SpecParsingOptions {
            char_budget: cfg.char_budget,
        };
        let parsed = run_spec_parsing(datasheet, template, self.gw, &cfg.agent(AgentKind::SpecParsing), opts)?;
        self.stages.push(StageRecord {
            agent_attempts: Some(parsed.attempts),
            digests: parsed.digests,
            duration_ms: self.elapsed_since(mark),
            ..StageRecord::new(Stage::Parsing)
        });
        let spec = parsed.value;
        write(&self.out_dir.join("spec_ir.json"), spec.to_json_pretty() + "\n")?;
        self.spec = Some(spec.clone());

        let mark = self.gw.exchanges().len();
        let header = run_code_generation(&spec, self.gw, &cfg.agent(AgentKind::CodeGen), names)?;
        self.stages.push(StageRecord {
            agent_attempts: Some(header.attempts),
            digests: header.digests,
            duration_ms: self.elapsed_since(mark),
            ..StageRecord::new(Stage::Generating)
        });
        self.artifacts.push(header.value.clone());

        let mark = self.gw.exchanges().len();
        let tb = run_testbench_generation(&spec, &header.value, self.gw, &cfg.agent(AgentKind::TbGen), names)?;
        self.stages.push(StageRecord {
            agent_attempts: Some(tb.attempts),
            digests: tb.digests,
            duration_ms: self.elapsed_since(mark),
            ..StageRecord::new(Stage::TbGenerating)
        });
        self.artifacts.push(tb.value);

        let work = self.out_dir.join("work");
        let (mut syntax_iters, mut functional_iters) = (0u32, 0u32);
        for attempt in 1.. {
            let mut ws = materialize_workspace(&work, attempt, &self.artifacts)?;
            let compile = toolchain.compile(&mut ws)?;
            self.stages.push(StageRecord {
                attempt: Some(attempt),
                status: Some(compile.status),
                duration_ms: compile.duration_ms,
                ..StageRecord::new(Stage::Building)
            });
            let run = if compile.status == SimStatus::Ok {
                let r = toolchain.simulate(&mut ws)?;
                self.stages.push(StageRecord {
                    attempt: Some(attempt),
                    status: Some(r.status),
                    duration_ms: r.duration_ms,
                    ..StageRecord::new(Stage::Simulating)
                });
                Some(r)
            } else {
                None
            };

            let report_text = run.as_ref().and_then(|_| ws.read_output(ws.outputs.report_path.as_ref()));
            let csv_text = run.as_ref().and_then(|_| ws.read_output(ws.outputs.csv_path.as_ref()));
            let mut notes = Vec::new();
            let report = match report_text.as_deref().map(parse_report) {
                Some(Ok(r)) => Some(r),
                Some(Err(e)) => {
                    notes.push(format!("The report file does not follow the required grammar: {e}"));
                    None
                }
                None => None,
            };
            let mut signal = classify(&compile, run.as_ref(), report.as_ref());
            let oracle = match signal {
                PipelineSignal::Pass | PipelineSignal::FunctionalFail => oracle_check(&spec, csv_text.as_deref()),
                _ => None,
            };
            if let Some(o) = &oracle {
                if !o.passed {
                    log::warn!("oracle cross-check disagrees with the simulation log");
                    notes.extend(oracle_notes(o));
                }
                if cfg.strict_oracle {
                    signal = if o.passed {
                        PipelineSignal::Pass
                    } else {
                        PipelineSignal::FunctionalFail
                    };
                }
            }
            log::info!("attempt {attempt}: {signal}");
            if let Some(prev) = self.iterations.last_mut() {
                if prev.signal_after.is_none() {
                    prev.signal_after = Some(signal);
                }
            }
            self.attempts.push(AttemptRecord {
                attempt,
                workspace: rel(&self.out_dir, &ws.root),
                revisions: self.artifacts.iter().map(|a| (a.file_name.clone(), a.revision)).collect(),
                compile: compile.status,
                run: run.as_ref().map(|r| r.status),
                report: report.as_ref().map(|r| r.verdict),
                signal,
                oracle,
            });
            self.final_signal = Some(signal);
            self.last_workspace = Some(ws);

            let (variant, stage, loop_kind) = match signal {
                PipelineSignal::Pass => return Ok(PipelineVerdict::Verified),
                PipelineSignal::SyntaxFail => {
                    if syntax_iters >= cfg.max_syntax_iters {
                        return Ok(PipelineVerdict::BudgetExhausted);
                    }
                    syntax_iters += 1;
                    (DebugVariant::Syntax, Stage::SyntaxRepair, LoopKind::Syntax)
                }
                _ => {
                    if functional_iters >= cfg.max_functional_iters {
                        return Ok(PipelineVerdict::BudgetExhausted);
                    }
                    functional_iters += 1;
                    (DebugVariant::Functional, Stage::FunctionalRepair, LoopKind::Functional)
                }
            };
            let ctx = match variant {
                DebugVariant::Syntax => package_syntax_context(&self.artifacts, &compile, cfg.stderr_budget_bytes),
                DebugVariant::Functional => {
                    let evidence = FunctionalEvidence {
                        signal,
                        run: run.as_ref(),
                        csv_text: csv_text.as_deref(),
                        report_text: report_text.as_deref(),
                        extra_notes: notes,
                    };
                    package_functional_context(&self.artifacts, &spec, &evidence, cfg)
                }
            };
            let mark = self.gw.exchanges().len();
            let fixed = run_debugging(&ctx, self.gw, &cfg.agent(AgentKind::Debug), names)?;
            self.stages.push(StageRecord {
                attempt: Some(attempt),
                agent_attempts: Some(fixed.attempts),
                digests: fixed.digests.clone(),
                duration_ms: self.elapsed_since(mark),
                ..StageRecord::new(stage)
            });
            let mut changed = Vec::new();
            for a in fixed.value {
                changed.push(a.file_name.clone());
                let slot = self
                    .artifacts
                    .iter_mut()
                    .find(|s| s.file_name == a.file_name)
                    .expect("debug output names are checked against the sources");
                *slot = a;
            }
            let index = self.iterations.len() as u32 + 1;
            self.iterations.push(IterationRecord {
                index,
                loop_kind,
                signal_before: signal,
                files_changed: changed,
                signal_after: None,
                transcript_refs: fixed.digests,
                attempt_before: attempt,
            });
        }
        unreachable!("the attempt loop only exits by returning")
    }
}

fn oracle_check(spec: &SpecIrDocument, csv: Option<&str>) -> Option<OracleSummary> {
    let scenarios = match test_scenarios(spec) {
        Ok(s) if !s.is_empty() => s,
        Ok(_) => return None,
        Err(e) => {
            log::warn!("scenarios unavailable for cross-check: {e}");
            return None;
        }
    };
    let log = csv.ok_or_else(|| "no CSV log was produced".to_string()).and_then(|t| {
        parse_csv_log(t).map_err(|e| format!("CSV log does not parse: {e}"))
    });
    let mut out = Vec::new();
    for s in &scenarios {
        let check = match &log {
            Ok(log) => cross_check(log, s).map_err(|e| e.to_string()),
            Err(e) => Err(e.clone()),
        };
        out.push(match check {
            Ok(checks) => ScenarioCheck {
                scenario: s.name.clone(),
                passed: checks.iter().all(|c| c.passed),
                checks,
                error: None,
            },
            Err(e) => ScenarioCheck {
                scenario: s.name.clone(),
                passed: false,
                checks: Vec::new(),
                error: Some(e),
            },
        });
    }
    Some(OracleSummary {
        passed: out.iter().all(|s| s.passed),
        scenarios: out,
    })
}

fn oracle_notes(o: &OracleSummary) -> Vec<String> {
    let mut notes = Vec::new();
    for s in &o.scenarios {
        if let Some(e) = &s.error {
            notes.push(format!("Independent check of scenario `{}` could not run: {e}", s.scenario));
        }
        for c in s.checks.iter().filter(|c| !c.passed) {
            notes.push(format!(
                "Independent check `{}` of scenario `{}` failed: measured {}, expected {} (tolerance {}).",
                c.name, s.scenario, c.measured, c.expected, c.tolerance
            ));
        }
    }
    notes
}

/// Keeps the last `budget` bytes, cut at a line start where possible.
fn tail_truncate(text: &str, budget: usize) -> (String, Option<usize>) {
    if text.len() <= budget {
        return (text.to_string(), None);
    }
    let mut start = text.len() - budget;
    while !text.is_char_boundary(start) {
        start += 1;
    }
    if let Some(nl) = text[start..].find('\n') {
        if nl + 1 < text.len() - start {
            start += nl + 1;
        }
    }
    let banner = format!("[... {start} bytes of earlier output truncated ...]\n");
    (banner + &text[start..], Some(start))
}

pub fn package_syntax_context(sources: &[GeneratedArtifact], compile: &SimOutcome, stderr_budget: usize) -> DebugContext {
    let mut notes = Vec::new();
    let log = if compile.stderr.trim().is_empty() {
        notes.push(format!(
            "The compiler wrote nothing to stderr but exited with code {}.",
            compile.exit_code
        ));
        let mut l = format!("(no compiler diagnostics; exit code {})\n", compile.exit_code);
        if !compile.stdout.trim().is_empty() {
            l.push_str(&compile.stdout);
        }
        l
    } else {
        let (log, cut) = tail_truncate(&compile.stderr, stderr_budget);
        if let Some(cut) = cut {
            notes.push(format!("The compiler log was {} bytes; the first {cut} bytes were dropped.", compile.stderr.len()));
        }
        log
    };
    DebugContext {
        variant: DebugVariant::Syntax,
        sources: sources.to_vec(),
        error_log: Some(log),
        csv_text: None,
        report_text: None,
        spec_ir: None,
        notes,
    }
}

/// Keeps the header and at most `max_rows` data rows, chosen at evenly
/// spaced indices so the first and last rows always survive.
pub fn downsample_csv(text: &str, max_rows: usize) -> (String, Option<usize>) {
    let mut lines = text.lines();
    let Some(header) = lines.next() else {
        return (String::new(), None);
    };
    let rows: Vec<&str> = lines.filter(|l| !l.trim().is_empty()).collect();
    let n = rows.len();
    if n <= max_rows || max_rows < 2 {
        return (text.to_string(), None);
    }
    let mut out = String::with_capacity(header.len() + max_rows * 32);
    out.push_str(header);
    out.push('\n');
    for i in 0..max_rows {
        out.push_str(rows[i * (n - 1) / (max_rows - 1)]);
        out.push('\n');
    }
    (out, Some(n))
}

/// What the simulation left behind for a functional repair.
pub struct FunctionalEvidence<'a> {
    pub signal: PipelineSignal,
    pub run: Option<&'a SimOutcome>,
    pub csv_text: Option<&'a str>,
    pub report_text: Option<&'a str>,
    pub extra_notes: Vec<String>,
}

pub fn package_functional_context(
    sources: &[GeneratedArtifact],
    spec: &SpecIrDocument,
    ev: &FunctionalEvidence<'_>,
    cfg: &PipelineConfig,
) -> DebugContext {
    let mut notes = Vec::new();
    match (ev.signal, ev.run) {
        (PipelineSignal::Timeout, Some(r)) => notes.push(format!(
            "The simulation did not finish within {} s and was terminated.",
            r.timeout_s.unwrap_or(cfg.toolchain.sim_timeout_s)
        )),
        (PipelineSignal::RuntimeFail, Some(r)) if r.status != SimStatus::Ok => {
            notes.push(format!("The simulator exited abnormally with code {}.", r.exit_code))
        }
        _ => {}
    }
    let stderr = ev.run.map(|r| r.stderr.as_str()).unwrap_or_default();
    let csv = match ev.csv_text {
        Some(text) => {
            let (csv, total) = downsample_csv(text, cfg.csv_row_budget);
            if let Some(total) = total {
                notes.push(format!(
                    "The CSV log had {total} rows; {} evenly spaced rows are shown, first and last included.",
                    cfg.csv_row_budget
                ));
            }
            csv
        }
        None => {
            notes.push("No CSV log was produced; the simulator's stderr stands in for it.".into());
            let (log, _) = tail_truncate(stderr, cfg.stderr_budget_bytes);
            if log.trim().is_empty() {
                "(empty stderr)\n".into()
            } else {
                log
            }
        }
    };
    let report = match ev.report_text {
        Some(r) => r.to_string(),
        None => {
            notes.push("No verification report was produced.".into());
            "(no report file)\n".into()
        }
    };
    notes.extend(ev.extra_notes.iter().cloned());
    DebugContext {
        variant: DebugVariant::Functional,
        sources: sources.to_vec(),
        error_log: (!stderr.trim().is_empty() && ev.csv_text.is_some())
            .then(|| tail_truncate(stderr, cfg.stderr_budget_bytes).0),
        csv_text: Some(csv),
        report_text: Some(report),
        spec_ir: Some(spec.clone()),
        notes,
    }
}

/// Parses the report left in a workspace, if any.
pub fn workspace_report(ws: &Workspace) -> Option<Result<Report, ds2sc_core::verdicts::ReportError>> {
    ws.read_output(ws.outputs.report_path.as_ref()).map(|t| parse_report(&t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolchain::Phase;
    use ds2sc_core::ArtifactOrigin;

    fn sources() -> Vec<GeneratedArtifact> {
        vec![
            GeneratedArtifact::new("chiplet_core.h", "#pragma once\n", ArtifactOrigin::CodeGen).unwrap(),
            GeneratedArtifact::new("main.cpp", "int sc_main() {}\n", ArtifactOrigin::TbGen).unwrap(),
        ]
    }

    fn compile_fail(stderr: &str, code: i32) -> SimOutcome {
        SimOutcome {
            phase: Phase::Compile,
            status: SimStatus::CompileError,
            exit_code: code,
            stdout: String::new(),
            stderr: stderr.into(),
            duration_ms: 0,
            timeout_s: None,
        }
    }

    #[test]
    fn syntax_context_carries_both_sources_and_the_log() {
        let ctx = package_syntax_context(&sources(), &compile_fail("main.cpp:3:1: error: x", 1), DEFAULT_STDERR_BUDGET);
        assert_eq!(ctx.variant, DebugVariant::Syntax);
        assert_eq!(ctx.sources.len(), 2);
        assert_eq!(ctx.error_log.as_deref(), Some("main.cpp:3:1: error: x"));
        assert!(ctx.notes.is_empty());
        ctx.validate().unwrap();
    }

    #[test]
    fn empty_stderr_gets_an_exit_code_note() {
        let ctx = package_syntax_context(&sources(), &compile_fail("  \n", 4), DEFAULT_STDERR_BUDGET);
        assert!(ctx.error_log.unwrap().contains("exit code 4"));
        assert!(ctx.notes[0].contains("code 4"));
    }

    #[test]
    fn long_stderr_is_tail_truncated_with_a_banner() {
        let line = "main.cpp:1:1: error: something went wrong here\n";
        let stderr = line.repeat(300 * 1024 / line.len()) + "main.cpp:99:1: error: the last one\n";
        let ctx = package_syntax_context(&sources(), &compile_fail(&stderr, 1), DEFAULT_STDERR_BUDGET);
        let log = ctx.error_log.unwrap();
        assert!(log.starts_with("[... "));
        assert!(log.contains("bytes of earlier output truncated"));
        assert!(log.ends_with("main.cpp:99:1: error: the last one\n"));
        let body = &log[log.find('\n').unwrap() + 1..];
        assert!(body.len() <= DEFAULT_STDERR_BUDGET);
        assert!(body.starts_with("main.cpp:1:1"));
        assert_eq!(ctx.notes.len(), 1);
    }

    #[test]
    fn downsampling_keeps_endpoints() {
        let mut csv = String::from("time_ns,x\n");
        for i in 0..1_000_000u32 {
            csv.push_str(&format!("{i},{}\n", i % 7));
        }
        let (small, total) = downsample_csv(&csv, 2000);
        assert_eq!(total, Some(1_000_000));
        let lines: Vec<&str> = small.lines().collect();
        assert_eq!(lines.len(), 2001);
        assert_eq!(lines[0], "time_ns,x");
        assert_eq!(lines[1], "0,0");
        assert_eq!(lines[2000], format!("999999,{}", 999_999 % 7));
        let ts: Vec<u64> = lines[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
        assert!(ts.windows(2).all(|w| w[0] < w[1]));

        let (same, none) = downsample_csv("t,x\n0,1\n1,2\n", 2000);
        assert_eq!((same.as_str(), none), ("t,x\n0,1\n1,2\n", None));
    }

    #[test]
    fn budgets_must_be_positive() {
        let cfg = PipelineConfig {
            max_functional_iters: 0,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
        PipelineConfig::default().validate().unwrap();
    }
}
