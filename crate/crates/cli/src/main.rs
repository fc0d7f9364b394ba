use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(treesum_cli::run(std::env::args_os()))
}
