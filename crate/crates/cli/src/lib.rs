//! Library behind the `cce` binary: file formats and the four commands.
//!
//! Each `run_*` function computes everything in memory and returns an
//! [`io::OutputSet`]; nothing touches the output directory until a command
//! has fully succeeded.

pub mod bench;
pub mod cli;
pub mod config;
pub mod eval;
pub mod io;
pub mod rankeval;
pub mod synth;

pub use cli::{run, Cli};
pub use io::exit_code;
