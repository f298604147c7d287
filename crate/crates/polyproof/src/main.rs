use std::process::ExitCode;

fn main() -> ExitCode {
    polyproof::cli::main_with_args(std::env::args_os())
}
