//! Instance files, reports and the pipeline behind the `subres` command.

pub mod instance;
pub mod pipeline;
pub mod report;

pub use pipeline::{run, Command, Outcome, Overrides, Status, PARSE_EXIT};
