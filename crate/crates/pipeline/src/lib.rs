//! Pipeline engine for the voxseg operators.
//!
//! An XML document lists processing items and the outputs they read; a run
//! configuration names the input images, the document and the output
//! directory. Items execute in dependency order and the results can be
//! scored against a generated benchmark.

pub mod commands;
pub mod config;
pub mod engine;
pub mod error;
pub mod evaluate;
pub mod registry;
pub mod xml;

pub use config::{parse_run_config, InputSpec, RunConfig};
pub use engine::{execute, execute_pipeline, run_config_file, Execution, RunReport, Value};
pub use error::{DocFault, Error, Result};
pub use evaluate::{evaluate, EvalOptions, EvalReport};
pub use xml::{parse_pipeline, InputKind, InputRef, Item, PipelineDoc};
