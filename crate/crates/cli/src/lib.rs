//! Library half of the `gibbslab` command-line runner: a flat key-value
//! configuration format, deterministic CSV/JSON/SVG writers, and the
//! dispatcher that maps each subcommand onto a frozen experiment preset.

pub mod config;
pub mod output;
pub mod run;

pub use config::{apply_overrides, parse_overrides, Overrides};
pub use run::{execute, Options, Outcome, Task};
