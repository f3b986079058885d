#![allow(dead_code)]

pub mod mutate;

use std::path::PathBuf;

use ds2sc::ingest::{ingest_text, Datasheet, SourceFormat};
use ds2sc::spec_ir::{parse_template, Provenance, SpecIrDocument, SpecIrTemplate};
use ds2sc_core::{ArtifactOrigin, GeneratedArtifact};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn data(name: &str) -> String {
    std::fs::read_to_string(data_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn la_template() -> SpecIrTemplate {
    parse_template(&data("la_template.json")).unwrap()
}

pub fn la_filled_text() -> String {
    data("la_filled.json")
}

pub fn la_spec() -> SpecIrDocument {
    SpecIrDocument::from_candidate(&la_template(), &la_filled_text(), Provenance::Manual).unwrap()
}

pub fn la_datasheet() -> Datasheet {
    ingest_text(&data("la_datasheet.md"), SourceFormat::Markdown).unwrap()
}

pub const HEADER: &str = r#"#pragma once
#include <systemc.h>

SC_MODULE(limiting_amp) {
  sc_in<double> vin;
  sc_in<bool> en;
  sc_out<double> vout;

  void step() {
    double v = en.read() ? 10.0 * vin.read() : 0.0;
    if (v > 0.4) v = 0.4;
    if (v < -0.4) v = -0.4;
    vout.write(v);
  }

  SC_CTOR(limiting_amp) {
    SC_METHOD(step);
    sensitive << vin << en;
  }
};
"#;

pub const TESTBENCH: &str = r#"#include "chiplet_core.h"
#include <fstream>

int sc_main(int argc, char* argv[]) {
  std::ofstream csv("results.csv");
  std::ofstream rpt("report.txt");
  csv << "time_ns,vin,vout\n";
  sc_start(3, SC_US);
  rpt << "VERIFICATION RESULT: PASS\n";
  return 0;
}
"#;

pub fn header_artifact() -> GeneratedArtifact {
    GeneratedArtifact::new("chiplet_core.h", HEADER, ArtifactOrigin::CodeGen).unwrap()
}

pub fn testbench_artifact() -> GeneratedArtifact {
    GeneratedArtifact::new("main.cpp", TESTBENCH, ArtifactOrigin::TbGen).unwrap()
}

/// Wraps a file in a chatty response the way a model would.
pub fn response_with(files: &[(&str, &str)]) -> String {
    let mut out = String::from("Here is the complete file.\n\n");
    for (name, content) in files {
        out.push_str(&GeneratedArtifact::new(*name, *content, ArtifactOrigin::CodeGen).unwrap().render());
        out.push('\n');
    }
    out
}
