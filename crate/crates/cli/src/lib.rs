//! Library side of the mosaic CLI: metadata ingestion, synthetic scene
//! generation, the end-to-end composition pipeline and the evaluation
//! harness. The `mosaic` binary is a thin wrapper over this crate.

pub mod pipeline;
pub mod record;
pub mod report;
pub mod synth;
