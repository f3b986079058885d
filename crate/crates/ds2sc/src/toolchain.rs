//! Workspace materialization, compile and simulate, and outcome
//! classification. The real mode shells out to a C++ compiler and runs the
//! produced binary; the stub mode replays declared outcomes from a
//! `stub_behavior.json` directive file so the loops run without SystemC.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitStatus, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

use ds2sc_core::verdicts::{Report, Verdict};
use ds2sc_core::{ArtifactKind, GeneratedArtifact};

/// Captured output beyond this many bytes per stream keeps only the tail.
const CAPTURE_LIMIT: usize = 4 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolchainMode {
    #[default]
    Real,
    Stub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToolchainConfig {
    /// Compiler command, split on whitespace (`"ccache g++"` works).
    pub compiler_cmd: String,
    pub include_paths: Vec<PathBuf>,
    pub library_paths: Vec<PathBuf>,
    pub link_libraries: Vec<String>,
    pub extra_flags: Vec<String>,
    pub compile_timeout_s: u64,
    pub sim_timeout_s: u64,
    pub mode: ToolchainMode,
    /// Directive file for stub mode.
    pub stub_behavior: Option<PathBuf>,
    pub csv_name: String,
    pub report_name: String,
}

impl Default for ToolchainConfig {
    fn default() -> Self {
        Self {
            compiler_cmd: "g++".into(),
            include_paths: Vec::new(),
            library_paths: Vec::new(),
            link_libraries: Vec::new(),
            extra_flags: vec!["-std=c++17".into()],
            compile_timeout_s: 300,
            sim_timeout_s: 120,
            mode: ToolchainMode::Real,
            stub_behavior: None,
            csv_name: "results.csv".into(),
            report_name: "report.txt".into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ToolchainError {
    #[error("compiler `{0}` not found")]
    CompilerMissing(String),
    #[error("stub mode needs a stub_behavior file")]
    StubMissing,
    #[error("stub behavior {path}: {message}")]
    StubBehavior { path: PathBuf, message: String },
    #[error("artifact `{0}` appears more than once")]
    DuplicateFile(String),
    #[error("exactly one testbench main is required, found {0}")]
    Testbench(usize),
    #[error("workspace {0} already has content")]
    WorkspaceNotEmpty(PathBuf),
    #[error("no simulator binary; compile first")]
    BinaryMissing,
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl ToolchainError {
    /// Failures of the machine rather than of the generated code.
    pub fn is_environmental(&self) -> bool {
        !matches!(self, ToolchainError::DuplicateFile(_) | ToolchainError::Testbench(_))
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> ToolchainError {
    let context = context.into();
    move |source| ToolchainError::Io { context, source }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOutputs {
    pub csv_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
    pub vcd_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workspace {
    pub root: PathBuf,
    pub attempt: u32,
    pub files: Vec<GeneratedArtifact>,
    pub binary: Option<PathBuf>,
    pub outputs: SimOutputs,
}

impl Workspace {
    pub fn read_output(&self, path: Option<&PathBuf>) -> Option<String> {
        path.and_then(|p| std::fs::read(p).ok()).map(|b| String::from_utf8_lossy(&b).into_owned())
    }
}

/// Writes the artifacts into `<base>/attempt-<attempt>`, which must not
/// already hold files.
pub fn materialize_workspace(
    base: &Path,
    attempt: u32,
    artifacts: &[GeneratedArtifact],
) -> Result<Workspace, ToolchainError> {
    let mut names = BTreeSet::new();
    for a in artifacts {
        if !names.insert(a.file_name.as_str()) {
            return Err(ToolchainError::DuplicateFile(a.file_name.clone()));
        }
    }
    let mains = artifacts.iter().filter(|a| a.kind == ArtifactKind::TestbenchMain).count();
    if mains != 1 {
        return Err(ToolchainError::Testbench(mains));
    }
    let root = base.join(format!("attempt-{attempt}"));
    std::fs::create_dir_all(&root).map_err(io_err(root.display().to_string()))?;
    let occupied = std::fs::read_dir(&root)
        .map_err(io_err(root.display().to_string()))?
        .next()
        .is_some();
    if occupied {
        return Err(ToolchainError::WorkspaceNotEmpty(root));
    }
    for a in artifacts {
        let path = root.join(&a.file_name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io_err(parent.display().to_string()))?;
        }
        std::fs::write(&path, &a.content).map_err(io_err(path.display().to_string()))?;
    }
    Ok(Workspace {
        root,
        attempt,
        files: artifacts.to_vec(),
        binary: None,
        outputs: SimOutputs::default(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Compile,
    Run,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimStatus {
    Ok,
    CompileError,
    RuntimeError,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub phase: Phase,
    pub status: SimStatus,
    /// Process exit code; -1 when killed or terminated by a signal.
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
    pub duration_ms: u64,
    /// Wall-clock budget that was exceeded, for timeouts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timeout_s: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineSignal {
    Pass,
    FunctionalFail,
    SyntaxFail,
    RuntimeFail,
    Timeout,
}

impl PipelineSignal {
    pub fn as_str(self) -> &'static str {
        match self {
            PipelineSignal::Pass => "pass",
            PipelineSignal::FunctionalFail => "functional_fail",
            PipelineSignal::SyntaxFail => "syntax_fail",
            PipelineSignal::RuntimeFail => "runtime_fail",
            PipelineSignal::Timeout => "timeout",
        }
    }
}

impl std::fmt::Display for PipelineSignal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Routes one build/simulate attempt. A build that produced no binary is a
/// syntax failure unless it ran out of time; a run that ended cleanly is
/// judged by its report, and a missing report breaches the testbench
/// contract.
pub fn classify(compile: &SimOutcome, run: Option<&SimOutcome>, report: Option<&Report>) -> PipelineSignal {
    match compile.status {
        SimStatus::Ok => {}
        SimStatus::Timeout => return PipelineSignal::Timeout,
        SimStatus::CompileError | SimStatus::RuntimeError => return PipelineSignal::SyntaxFail,
    }
    let Some(run) = run else {
        return PipelineSignal::RuntimeFail;
    };
    match run.status {
        SimStatus::Timeout => PipelineSignal::Timeout,
        SimStatus::RuntimeError | SimStatus::CompileError => PipelineSignal::RuntimeFail,
        SimStatus::Ok => match report.map(|r| r.verdict) {
            Some(Verdict::Pass) => PipelineSignal::Pass,
            Some(Verdict::Fail) => PipelineSignal::FunctionalFail,
            None => PipelineSignal::RuntimeFail,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StubCompileStatus {
    #[default]
    Ok,
    CompileError,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StubCompile {
    pub status: StubCompileStatus,
    pub exit_code: Option<i32>,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StubRunStatus {
    #[default]
    Ok,
    RuntimeError,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StubRun {
    pub status: StubRunStatus,
    pub exit_code: Option<i32>,
    pub stdout: String,
    pub stderr: String,
    /// CSV content to leave in the workspace, inline or from a file
    /// relative to the directive file.
    pub csv: Option<String>,
    pub csv_file: Option<PathBuf>,
    pub report: Option<String>,
    pub report_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StubAttempt {
    pub compile: StubCompile,
    pub run: StubRun,
}

/// Outcomes per attempt number; attempts past the end repeat the last entry.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StubBehavior {
    pub attempts: Vec<StubAttempt>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl StubBehavior {
    pub fn load(path: &Path) -> Result<Self, ToolchainError> {
        let bad = |message: String| ToolchainError::StubBehavior {
            path: path.to_path_buf(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        let mut b: StubBehavior = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if b.attempts.is_empty() {
            return Err(bad("no attempts declared".into()));
        }
        b.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(b)
    }

    fn attempt(&self, n: u32) -> &StubAttempt {
        let i = (n.max(1) as usize - 1).min(self.attempts.len() - 1);
        &self.attempts[i]
    }

    fn content(&self, inline: &Option<String>, file: &Option<PathBuf>) -> Result<Option<String>, ToolchainError> {
        match (inline, file) {
            (Some(s), _) => Ok(Some(s.clone())),
            (None, Some(f)) => {
                let p = self.base_dir.join(f);
                std::fs::read_to_string(&p).map(Some).map_err(io_err(p.display().to_string()))
            }
            (None, None) => Ok(None),
        }
    }
}

#[derive(Debug)]
enum Backend {
    Real(PathBuf),
    Stub(StubBehavior),
}

/// A checked configuration ready to build and run workspaces.
#[derive(Debug)]
pub struct Toolchain {
    cfg: ToolchainConfig,
    backend: Backend,
}

impl Toolchain {
    pub fn new(cfg: ToolchainConfig) -> Result<Self, ToolchainError> {
        let backend = match cfg.mode {
            ToolchainMode::Real => {
                let program = cfg.compiler_cmd.split_whitespace().next().unwrap_or_default();
                let resolved =
                    which::which(program).map_err(|_| ToolchainError::CompilerMissing(cfg.compiler_cmd.clone()))?;
                Backend::Real(resolved)
            }
            ToolchainMode::Stub => {
                let path = cfg.stub_behavior.as_deref().ok_or(ToolchainError::StubMissing)?;
                Backend::Stub(StubBehavior::load(path)?)
            }
        };
        Ok(Self { cfg, backend })
    }

    pub fn config(&self) -> &ToolchainConfig {
        &self.cfg
    }

    /// The argument list handed to the compiler, after the program itself.
    pub fn compile_args(&self) -> Vec<String> {
        let mut args: Vec<String> = self.cfg.compiler_cmd.split_whitespace().skip(1).map(String::from).collect();
        args.push("main.cpp".into());
        args.extend(self.cfg.include_paths.iter().map(|p| format!("-I{}", p.display())));
        args.extend(self.cfg.library_paths.iter().map(|p| format!("-L{}", p.display())));
        args.extend(self.cfg.link_libraries.iter().map(|l| format!("-l{l}")));
        args.extend(self.cfg.extra_flags.iter().cloned());
        args.extend(["-o".into(), "sim".into()]);
        args
    }

    pub fn compile(&self, ws: &mut Workspace) -> Result<SimOutcome, ToolchainError> {
        match &self.backend {
            Backend::Real(program) => {
                let mut cmd = Command::new(program);
                cmd.args(self.compile_args()).current_dir(&ws.root);
                let limit = self.cfg.compile_timeout_s;
                let run = supervise(cmd, limit).map_err(io_err(format!("spawning {}", program.display())))?;
                let status = match run.status {
                    None => SimStatus::Timeout,
                    Some(s) if s.success() => SimStatus::Ok,
                    Some(_) => SimStatus::CompileError,
                };
                if status == SimStatus::Ok {
                    ws.binary = Some(ws.root.join("sim"));
                }
                Ok(run.outcome(Phase::Compile, status, limit))
            }
            Backend::Stub(b) => {
                let c = &b.attempt(ws.attempt).compile;
                let (status, default_code) = match c.status {
                    StubCompileStatus::Ok => (SimStatus::Ok, 0),
                    StubCompileStatus::CompileError => (SimStatus::CompileError, 1),
                    StubCompileStatus::Timeout => (SimStatus::Timeout, -1),
                };
                if status == SimStatus::Ok {
                    ws.binary = Some(ws.root.join("sim"));
                }
                Ok(SimOutcome {
                    phase: Phase::Compile,
                    status,
                    exit_code: c.exit_code.unwrap_or(default_code),
                    stdout: c.stdout.clone(),
                    stderr: c.stderr.clone(),
                    duration_ms: 0,
                    timeout_s: (status == SimStatus::Timeout).then_some(self.cfg.compile_timeout_s),
                })
            }
        }
    }

    pub fn simulate(&self, ws: &mut Workspace) -> Result<SimOutcome, ToolchainError> {
        let binary = ws.binary.clone().ok_or(ToolchainError::BinaryMissing)?;
        let outcome = match &self.backend {
            Backend::Real(_) => {
                if !binary.is_file() {
                    return Err(ToolchainError::BinaryMissing);
                }
                let mut cmd = Command::new(&binary);
                cmd.current_dir(&ws.root);
                let limit = self.cfg.sim_timeout_s;
                let run = supervise(cmd, limit).map_err(io_err(format!("running {}", binary.display())))?;
                let status = match run.status {
                    None => SimStatus::Timeout,
                    Some(s) if s.success() => SimStatus::Ok,
                    Some(_) => SimStatus::RuntimeError,
                };
                run.outcome(Phase::Run, status, limit)
            }
            Backend::Stub(b) => {
                let r = &b.attempt(ws.attempt).run;
                for (content, name) in [
                    (b.content(&r.csv, &r.csv_file)?, &self.cfg.csv_name),
                    (b.content(&r.report, &r.report_file)?, &self.cfg.report_name),
                ] {
                    if let Some(text) = content {
                        let p = ws.root.join(name);
                        std::fs::write(&p, text).map_err(io_err(p.display().to_string()))?;
                    }
                }
                let (status, default_code) = match r.status {
                    StubRunStatus::Ok => (SimStatus::Ok, 0),
                    StubRunStatus::RuntimeError => (SimStatus::RuntimeError, 1),
                    StubRunStatus::Timeout => (SimStatus::Timeout, -1),
                };
                SimOutcome {
                    phase: Phase::Run,
                    status,
                    exit_code: r.exit_code.unwrap_or(default_code),
                    stdout: r.stdout.clone(),
                    stderr: r.stderr.clone(),
                    duration_ms: 0,
                    timeout_s: (status == SimStatus::Timeout).then_some(self.cfg.sim_timeout_s),
                }
            }
        };
        ws.outputs = collect_outputs(&ws.root, &self.cfg)?;
        Ok(outcome)
    }
}

/// Finds the run's CSV, report and VCD. The configured names win; otherwise
/// the first `*.csv` / `*.txt` / `*.vcd` in name order is taken.
fn collect_outputs(root: &Path, cfg: &ToolchainConfig) -> Result<SimOutputs, ToolchainError> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(io_err(root.display().to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    entries.sort();
    let pick = |preferred: Option<&str>, ext: &str| -> Option<PathBuf> {
        if let Some(name) = preferred {
            let p = root.join(name);
            if p.is_file() {
                return Some(p);
            }
        }
        entries.iter().find(|p| p.extension().is_some_and(|e| e == ext)).cloned()
    };
    Ok(SimOutputs {
        csv_path: pick(Some(&cfg.csv_name), "csv"),
        report_path: pick(Some(&cfg.report_name), "txt"),
        vcd_path: pick(None, "vcd"),
    })
}

struct Supervised {
    /// None when the process was killed at the deadline.
    status: Option<ExitStatus>,
    stdout: String,
    stderr: String,
    elapsed: Duration,
}

impl Supervised {
    fn outcome(self, phase: Phase, status: SimStatus, limit_s: u64) -> SimOutcome {
        SimOutcome {
            phase,
            status,
            exit_code: self.status.and_then(|s| s.code()).unwrap_or(-1),
            stdout: self.stdout,
            stderr: self.stderr,
            duration_ms: self.elapsed.as_millis() as u64,
            timeout_s: (status == SimStatus::Timeout).then_some(limit_s),
        }
    }
}

fn drain(mut r: impl Read + Send + 'static) -> std::thread::JoinHandle<String> {
    std::thread::spawn(move || {
        let mut kept: Vec<u8> = Vec::new();
        let mut buf = [0u8; 8192];
        loop {
            match r.read(&mut buf) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    kept.extend_from_slice(&buf[..n]);
                    if kept.len() > CAPTURE_LIMIT {
                        let cut = kept.len() - CAPTURE_LIMIT;
                        kept.drain(..cut);
                    }
                }
            }
        }
        String::from_utf8_lossy(&kept).into_owned()
    })
}

/// Runs a process to completion or kills it after `timeout_s` seconds.
fn supervise(mut cmd: Command, timeout_s: u64) -> std::io::Result<Supervised> {
    let start = Instant::now();
    let mut child = cmd.stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn()?;
    let out = drain(child.stdout.take().expect("piped stdout"));
    let err = drain(child.stderr.take().expect("piped stderr"));
    let status = match child.wait_timeout(Duration::from_secs(timeout_s))? {
        Some(s) => Some(s),
        None => {
            child.kill()?;
            child.wait()?;
            None
        }
    };
    let elapsed = start.elapsed();
    Ok(Supervised {
        status,
        stdout: out.join().unwrap_or_default(),
        stderr: err.join().unwrap_or_default(),
        elapsed,
    })
}
