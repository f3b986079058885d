mod common;

use std::path::{Path, PathBuf};

use common::*;
use ds2sc::llm::{parse_transcript, Gateway, Source};
use ds2sc::pipeline::{
    package_functional_context, run_pipeline, FunctionalEvidence, LoopKind, PipelineConfig, PipelineInputs,
    PipelineVerdict,
};
use ds2sc::toolchain::{PipelineSignal, SimOutcome, SimStatus, Phase, ToolchainConfig, ToolchainMode};
use proptest::prelude::*;

fn stub_cfg(behavior: &Path) -> PipelineConfig {
    PipelineConfig {
        toolchain: ToolchainConfig {
            mode: ToolchainMode::Stub,
            stub_behavior: Some(behavior.to_path_buf()),
            ..Default::default()
        },
        ..Default::default()
    }
}

/// Parse, generate, testbench, then `fixes` debug answers.
fn script(fixes: usize) -> Gateway {
    let mut r = vec![
        format!("```json\n{}\n```", la_filled_text()),
        response_with(&[("chiplet_core.h", HEADER)]),
        response_with(&[("main.cpp", TESTBENCH)]),
    ];
    for i in 0..fixes {
        if i % 2 == 0 {
            r.push(response_with(&[("chiplet_core.h", HEADER)]));
        } else {
            r.push(response_with(&[("main.cpp", TESTBENCH)]));
        }
    }
    Gateway::scripted(r)
}

fn run(out: &Path, cfg: &PipelineConfig, gw: &mut Gateway) -> ds2sc::pipeline::PipelineResult {
    let ds = data_path("la_datasheet.md");
    let tpl = data_path("la_template.json");
    run_pipeline(
        &PipelineInputs {
            datasheet_path: &ds,
            template_path: &tpl,
            out_dir: out,
        },
        cfg,
        gw,
    )
    .unwrap()
}

fn manifest(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("run.json")).unwrap()).unwrap()
}

#[test]
fn golden_path_verifies_without_repairs() {
    let dir = tempfile::tempdir().unwrap();
    let mut gw = script(0);
    let res = run(dir.path(), &stub_cfg(&data_path("stub_pass.json")), &mut gw);
    assert_eq!(res.verdict, PipelineVerdict::Verified);
    assert!(res.iterations.is_empty());
    assert_eq!(res.final_signal, Some(PipelineSignal::Pass));
    assert_eq!(res.attempts.len(), 1);
    assert!(res.attempts[0].oracle.as_ref().unwrap().passed, "{:?}", res.attempts[0].oracle);
    for f in ["spec_ir.json", "run.json", "final/chiplet_core.h", "final/main.cpp", "final/results.csv", "final/report.txt"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let m = manifest(dir.path());
    assert_eq!(m["verdict"], "verified");
    assert_eq!(m["transcript_mode"], "scripted");
    let removed: Vec<&str> = m["removed_sections"].as_array().unwrap().iter().map(|r| r["heading"].as_str().unwrap()).collect();
    assert!(removed.iter().any(|h| h.contains("Package")), "{removed:?}");
    assert!(removed.iter().any(|h| h.contains("Setup and Hold")), "{removed:?}");
    assert!(!removed.iter().any(|h| h.contains("Pin")), "{removed:?}");
}

#[test]
fn closed_loop_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = stub_cfg(&data_path("stub_closed_loop.json"));
    let ra = run(a.path(), &cfg, &mut script(2));
    let rb = run(b.path(), &cfg, &mut script(2));
    for r in [&ra, &rb] {
        assert_eq!(r.verdict, PipelineVerdict::Verified);
        assert_eq!(r.syntax_iterations(), 1);
        assert_eq!(r.functional_iterations(), 1);
        let it = &r.iterations;
        assert_eq!((it[0].signal_before, it[0].signal_after), (PipelineSignal::SyntaxFail, Some(PipelineSignal::FunctionalFail)));
        assert_eq!((it[1].signal_before, it[1].signal_after), (PipelineSignal::FunctionalFail, Some(PipelineSignal::Pass)));
        assert_eq!(it[0].files_changed, ["chiplet_core.h"]);
        assert_eq!(it[1].files_changed, ["main.cpp"]);
        let revs: Vec<(String, u32)> = r.final_artifacts.iter().map(|a| (a.file_name.clone(), a.revision)).collect();
        assert_eq!(revs, [("chiplet_core.h".to_string(), 1), ("main.cpp".to_string(), 1)]);
    }
    let ja = std::fs::read(a.path().join("run.json")).unwrap();
    let jb = std::fs::read(b.path().join("run.json")).unwrap();
    assert_eq!(ja, jb);
    // every attempt kept for audit
    for n in 1..=3 {
        assert!(a.path().join(format!("work/attempt-{n}/main.cpp")).is_file());
    }
}

#[test]
fn always_fail_exhausts_the_functional_budget() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = stub_cfg(&data_path("stub_always_fail.json"));
    let res = run(dir.path(), &cfg, &mut script(10));
    assert_eq!(res.verdict, PipelineVerdict::BudgetExhausted);
    assert_eq!(res.functional_iterations(), cfg.max_functional_iters as usize);
    assert_eq!(res.syntax_iterations(), 0);
    assert_eq!(res.attempts.len(), cfg.max_functional_iters as usize + 1);
    assert_eq!(manifest(dir.path())["verdict"], "budget_exhausted");
}

#[test]
fn strict_oracle_overrules_a_passing_report() {
    let behavior = data_path("stub_pass_wrong_log.json");
    let dir = tempfile::tempdir().unwrap();
    let advisory = run(dir.path(), &stub_cfg(&behavior), &mut script(1));
    assert_eq!(advisory.verdict, PipelineVerdict::Verified);
    assert!(!advisory.attempts[0].oracle.as_ref().unwrap().passed);

    let dir = tempfile::tempdir().unwrap();
    let strict = PipelineConfig {
        strict_oracle: true,
        ..stub_cfg(&behavior)
    };
    let res = run(dir.path(), &strict, &mut script(1));
    assert_eq!(res.verdict, PipelineVerdict::Verified);
    assert_eq!(res.attempts[0].signal, PipelineSignal::FunctionalFail);
    assert_eq!(res.functional_iterations(), 1);
    assert!(res.attempts[1].oracle.as_ref().unwrap().passed);
}

#[test]
fn functional_repair_that_breaks_the_build_costs_a_syntax_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let pass = data_path("la_pass.csv");
    let behavior = serde_json::json!({"attempts": [
        {"run": {"csv_file": pass, "report": "VERIFICATION RESULT: FAIL\n"}},
        {"compile": {"status": "compile_error", "stderr": "main.cpp:2:1: error: oops\n"}},
        {"run": {"csv_file": pass, "report": "VERIFICATION RESULT: PASS\n"}}
    ]});
    let path = dir.path().join("stub_behavior.json");
    std::fs::write(&path, behavior.to_string()).unwrap();
    let res = run(&dir.path().join("out"), &stub_cfg(&path), &mut script(2));
    assert_eq!(res.verdict, PipelineVerdict::Verified);
    let loops: Vec<LoopKind> = res.iterations.iter().map(|i| i.loop_kind).collect();
    assert_eq!(loops, [LoopKind::Functional, LoopKind::Syntax]);
}

#[test]
fn agent_failure_still_writes_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let bad = format!("{HEADER}\nint sc_main(int, char**) {{ return 0; }}\n");
    let mut gw = Gateway::scripted(vec![
        la_filled_text(),
        response_with(&[("chiplet_core.h", &bad)]),
        response_with(&[("chiplet_core.h", &bad)]),
        response_with(&[("chiplet_core.h", &bad)]),
    ]);
    let res = run(dir.path(), &stub_cfg(&data_path("stub_pass.json")), &mut gw);
    assert_eq!(res.verdict, PipelineVerdict::AgentFailure);
    assert!(res.error.as_ref().unwrap().contains("tb_in_model"));
    let m = manifest(dir.path());
    assert_eq!(m["verdict"], "agent_failure");
    assert_eq!(m["outputs"]["spec_ir"], "spec_ir.json");
}

#[test]
fn environment_failures() {
    // the script runs dry right after spec parsing
    let dir = tempfile::tempdir().unwrap();
    let res = run(dir.path(), &stub_cfg(&data_path("stub_pass.json")), &mut Gateway::scripted([la_filled_text()]));
    assert_eq!(res.verdict, PipelineVerdict::EnvironmentFailure);

    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        toolchain: ToolchainConfig {
            compiler_cmd: "no-such-compiler-anywhere".into(),
            ..Default::default()
        },
        ..Default::default()
    };
    let mut gw = script(0);
    let res = run(dir.path(), &cfg, &mut gw);
    assert_eq!(res.verdict, PipelineVerdict::EnvironmentFailure);
    assert!(res.error.unwrap().contains("no-such-compiler-anywhere"));
    assert!(gw.exchanges().is_empty());
}

#[test]
fn recorded_transcript_replays_to_the_same_manifest() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = stub_cfg(&data_path("stub_closed_loop.json"));
    let transcript = a.path().join("transcript.jsonl");
    let mut rec = script(2).with_record_path(&transcript);
    run(&a.path().join("out"), &cfg, &mut rec);
    let entries = parse_transcript(&std::fs::read_to_string(&transcript).unwrap()).unwrap();
    assert_eq!(entries.len(), 5);
    let mut replay = Gateway::new(Source::Replay(entries));
    let res = run(b.path(), &cfg, &mut replay);
    assert_eq!(res.verdict, PipelineVerdict::Verified);
    assert_eq!(replay.live_calls(), 0);
    let ma = manifest(&a.path().join("out"));
    let mb = manifest(b.path());
    assert_eq!(ma["attempts"], mb["attempts"]);
    assert_eq!(ma["iterations"], mb["iterations"]);
    assert_eq!(ma["stages"], mb["stages"]);
}

#[test]
fn functional_context_variants() {
    let spec = la_spec();
    let cfg = PipelineConfig::default();
    let sources = vec![header_artifact(), testbench_artifact()];
    let ok_run = SimOutcome {
        phase: Phase::Run,
        status: SimStatus::Ok,
        exit_code: 0,
        stdout: String::new(),
        stderr: String::new(),
        duration_ms: 0,
        timeout_s: None,
    };
    let csv = data("la_fail.csv");
    let ev = FunctionalEvidence {
        signal: PipelineSignal::FunctionalFail,
        run: Some(&ok_run),
        csv_text: Some(&csv),
        report_text: Some("VERIFICATION RESULT: FAIL\n"),
        extra_notes: vec![],
    };
    let ctx = package_functional_context(&sources, &spec, &ev, &cfg);
    ctx.validate().unwrap();
    assert_eq!(ctx.csv_text.as_ref().unwrap().lines().count(), 2001);
    assert!(ctx.notes[0].contains("3000 rows"));
    assert_eq!(ctx.report_text.as_deref(), Some("VERIFICATION RESULT: FAIL\n"));
    assert!(ctx.spec_ir.is_some());
    assert_eq!(ctx.sources.len(), 2);

    let crash = SimOutcome {
        status: SimStatus::RuntimeError,
        exit_code: 139,
        stderr: "Segmentation fault\n".into(),
        ..ok_run
    };
    let ev = FunctionalEvidence {
        signal: PipelineSignal::RuntimeFail,
        run: Some(&crash),
        csv_text: None,
        report_text: None,
        extra_notes: vec![],
    };
    let ctx = package_functional_context(&sources, &spec, &ev, &cfg);
    ctx.validate().unwrap();
    assert_eq!(ctx.csv_text.as_deref(), Some("Segmentation fault\n"));
    assert!(ctx.notes.iter().any(|n| n.contains("stderr stands in")));
    assert!(ctx.notes.iter().any(|n| n.contains("code 139")));
}

#[derive(Debug, Clone)]
enum Step {
    CompileError,
    CompileTimeout,
    Crash,
    RunTimeout,
    Fail,
    NoReport,
    Pass,
}

fn step_json(s: &Step, csv: &PathBuf) -> serde_json::Value {
    use serde_json::json;
    match s {
        Step::CompileError => json!({"compile": {"status": "compile_error", "stderr": "x.cpp:1:1: error\n"}}),
        Step::CompileTimeout => json!({"compile": {"status": "timeout"}}),
        Step::Crash => json!({"run": {"status": "runtime_error", "exit_code": 2, "stderr": "abort\n"}}),
        Step::RunTimeout => json!({"run": {"status": "timeout"}}),
        Step::Fail => json!({"run": {"csv_file": csv, "report": "VERIFICATION RESULT: FAIL\n"}}),
        Step::NoReport => json!({"run": {"csv_file": csv}}),
        Step::Pass => json!({"run": {"csv_file": csv, "report": "VERIFICATION RESULT: PASS\n"}}),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn every_run_terminates_within_budget(
        steps in prop::collection::vec(prop_oneof![
            Just(Step::CompileError), Just(Step::CompileTimeout), Just(Step::Crash),
            Just(Step::RunTimeout), Just(Step::Fail), Just(Step::NoReport), Just(Step::Pass)
        ], 1..12),
        syn in 1u32..4,
        func in 1u32..4,
    ) {
        let dir = tempfile::tempdir().unwrap();
        let csv = data_path("la_pass.csv");
        let behavior = serde_json::json!({"attempts": steps.iter().map(|s| step_json(s, &csv)).collect::<Vec<_>>()});
        let path = dir.path().join("stub_behavior.json");
        std::fs::write(&path, behavior.to_string()).unwrap();
        let cfg = PipelineConfig { max_syntax_iters: syn, max_functional_iters: func, ..stub_cfg(&path) };
        let res = run(&dir.path().join("out"), &cfg, &mut script(40));
        prop_assert!(res.attempts.len() as u32 <= 1 + syn + func);
        prop_assert!(matches!(res.verdict, PipelineVerdict::Verified | PipelineVerdict::BudgetExhausted));
        prop_assert_eq!(res.verdict == PipelineVerdict::Verified, res.final_signal == Some(PipelineSignal::Pass));
        for it in &res.iterations {
            let syntax = it.signal_before == PipelineSignal::SyntaxFail;
            prop_assert_eq!(syntax, it.loop_kind == LoopKind::Syntax);
            let attempt = &res.attempts[it.attempt_before as usize - 1];
            prop_assert_eq!(attempt.signal, it.signal_before);
        }
        // counters never exceed their budgets
        prop_assert!(res.syntax_iterations() as u32 <= syn);
        prop_assert!(res.functional_iterations() as u32 <= func);
    }
}
