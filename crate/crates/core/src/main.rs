use std::process::ExitCode;

fn main() -> ExitCode {
    chainflow::cli::run(std::env::args_os())
}
