pub mod agents;
pub mod cli;
pub mod ingest;
pub mod llm;
pub mod pipeline;
pub mod plot;
pub mod spec_ir;
pub mod toolchain;
