//! The `chutok` command-line tool.
//!
//! Every subcommand reads and writes the file formats of the core library and
//! records its resolved configuration in a run manifest beside its outputs.
//! Exit codes: 0 success, 1 data or validation failure, 2 usage error.

pub mod args;
mod commands;
pub mod query;
pub mod run;
pub mod server;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use commands::label_surface;

/// Parses `argv` (program name first), runs the command, and returns the exit
/// code. Reports go to `out`; errors go to stderr.
pub fn execute<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::dispatch(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
