use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(fuzzyseg::cli::run(std::env::args_os()))
}
