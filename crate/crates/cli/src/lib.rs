//! The `treesum` command-line tool: corpus preparation, training,
//! evaluation and summarization with tree-LSTM summarizers.

mod args;
mod error;
mod eval;
mod io;
mod prepare;
mod summarize;
mod train;

use std::ffi::OsString;

use clap::Parser;

pub use args::{Cli, Command};
pub use error::CliError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Prepare(a) => prepare::run(a),
        Command::Train(a) => train::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Summarize(a) => summarize::summarize(a),
        Command::InspectAttention(a) => summarize::inspect(a),
        Command::Synth(a) => prepare::synth(a),
    }
}
