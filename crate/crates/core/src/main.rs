use std::process::ExitCode;

fn main() -> ExitCode {
    contactnet::cli::main_with_args(std::env::args_os())
}
