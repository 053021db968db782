use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(picdna_gateway::cli::main_with(std::env::args_os()))
}
