//! Real-mode builds with the host C++ compiler. Skipped with a notice when
//! no `g++` is on PATH.

use ds2sc::toolchain::{
    classify, materialize_workspace, PipelineSignal, SimStatus, Toolchain, ToolchainConfig, ToolchainError,
};
use ds2sc_core::verdicts::parse_report;
use ds2sc_core::{ArtifactOrigin, GeneratedArtifact};

const HEADER: &str = "#pragma once\ninline double gain(double v) { return 10.0 * v; }\n";

const MAIN_OK: &str = r#"#include "chiplet_core.h"
#include <fstream>
int main() {
  std::ofstream csv("results.csv");
  csv << "time_ns,vin,vout\n";
  for (int i = 0; i < 4; ++i) csv << i << "," << 0.01 * i << "," << gain(0.01 * i) << "\n";
  std::ofstream rpt("report.txt");
  rpt << "VERIFICATION RESULT: PASS\nCHECK gain: PASS\n";
  return 0;
}
"#;

fn toolchain(sim_timeout_s: u64) -> Option<Toolchain> {
    match Toolchain::new(ToolchainConfig { sim_timeout_s, ..Default::default() }) {
        Ok(tc) => Some(tc),
        Err(ToolchainError::CompilerMissing(c)) => {
            eprintln!("skipping: {c} not available");
            None
        }
        Err(e) => panic!("{e}"),
    }
}

fn files(main: &str) -> Vec<GeneratedArtifact> {
    vec![
        GeneratedArtifact::new("chiplet_core.h", HEADER, ArtifactOrigin::Fixture).unwrap(),
        GeneratedArtifact::new("main.cpp", main, ArtifactOrigin::Fixture).unwrap(),
    ]
}

#[test]
fn compiles_runs_and_passes() {
    let Some(tc) = toolchain(30) else { return };
    let dir = tempfile::tempdir().unwrap();
    let mut ws = materialize_workspace(dir.path(), 1, &files(MAIN_OK)).unwrap();
    let c = tc.compile(&mut ws).unwrap();
    assert_eq!(c.status, SimStatus::Ok, "{}", c.stderr);
    assert!(ws.binary.as_ref().unwrap().is_file());
    let r = tc.simulate(&mut ws).unwrap();
    assert_eq!(r.status, SimStatus::Ok);
    let report = parse_report(&ws.read_output(ws.outputs.report_path.as_ref()).unwrap()).unwrap();
    assert!(ws.read_output(ws.outputs.csv_path.as_ref()).unwrap().starts_with("time_ns,vin,vout"));
    assert_eq!(classify(&c, Some(&r), Some(&report)), PipelineSignal::Pass);
}

#[test]
fn missing_semicolon_is_a_compile_error_with_line_numbers() {
    let Some(tc) = toolchain(30) else { return };
    let dir = tempfile::tempdir().unwrap();
    let broken = MAIN_OK.replace("csv << \"time_ns,vin,vout\\n\";", "csv << \"time_ns,vin,vout\\n\"");
    let mut ws = materialize_workspace(dir.path(), 1, &files(&broken)).unwrap();
    let c = tc.compile(&mut ws).unwrap();
    assert_eq!(c.status, SimStatus::CompileError);
    assert_ne!(c.exit_code, 0);
    assert!(c.stderr.contains("main.cpp:5:"), "{}", c.stderr);
    assert!(ws.binary.is_none());
    assert_eq!(classify(&c, None, None), PipelineSignal::SyntaxFail);
}

#[test]
fn infinite_loop_times_out() {
    let Some(tc) = toolchain(1) else { return };
    let dir = tempfile::tempdir().unwrap();
    let spin = "#include \"chiplet_core.h\"\nint main() { volatile bool go = true; while (go) {} return 0; }\n";
    let mut ws = materialize_workspace(dir.path(), 1, &files(spin)).unwrap();
    let c = tc.compile(&mut ws).unwrap();
    assert_eq!(c.status, SimStatus::Ok, "{}", c.stderr);
    let start = std::time::Instant::now();
    let r = tc.simulate(&mut ws).unwrap();
    assert!(start.elapsed().as_secs_f64() < 10.0);
    assert_eq!(r.status, SimStatus::Timeout);
    assert_eq!(r.timeout_s, Some(1));
    assert_eq!(classify(&c, Some(&r), None), PipelineSignal::Timeout);
}

#[test]
fn nonzero_exit_is_a_runtime_error() {
    let Some(tc) = toolchain(30) else { return };
    let dir = tempfile::tempdir().unwrap();
    let crash = "#include \"chiplet_core.h\"\n#include <cstdio>\nint main() { std::fprintf(stderr, \"bad state\\n\"); return 3; }\n";
    let mut ws = materialize_workspace(dir.path(), 1, &files(crash)).unwrap();
    tc.compile(&mut ws).unwrap();
    let r = tc.simulate(&mut ws).unwrap();
    assert_eq!((r.status, r.exit_code), (SimStatus::RuntimeError, 3));
    assert_eq!(r.stderr, "bad state\n");
    assert!(ws.outputs.csv_path.is_none());
}

#[test]
fn concurrent_runs_use_disjoint_workspaces() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let wa = materialize_workspace(a.path(), 1, &files(MAIN_OK)).unwrap();
    let wb = materialize_workspace(b.path(), 1, &files(MAIN_OK)).unwrap();
    assert_ne!(wa.root, wb.root);
}
