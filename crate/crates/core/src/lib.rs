//! Pure building blocks for the datasheet-to-behavioral-model pipeline.
//!
//! This crate is `no_std` (with `alloc`) and carries everything that does not
//! touch the filesystem, processes or the network:
//!
//! * [`oracles`]: reference numerics for the three case-study chiplets (DFT
//!   round trip, limiting amplifier, Rapp power amplifier and its smoothness fit).
//! * [`artifact`]: the fenced-block + `// === FILE: <name> ===` grammar used to
//!   pull full-file sources out of model output.
//! * [`lint`]: token-level contract checks on generated sources.
//! * [`verdicts`]: the CSV log and verification report grammars, and
//!   oracle cross-checks of simulation logs against [`scenario`] expectations.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod artifact;
pub mod lint;
pub mod oracles;
pub mod scenario;
pub mod verdicts;

pub use artifact::{ArtifactKind, ArtifactOrigin, CodeBlock, GeneratedArtifact};
pub use oracles::{ComplexSample, CurvePoint, LaParams, RappParams};
pub use scenario::{Domain, TestScenario};
