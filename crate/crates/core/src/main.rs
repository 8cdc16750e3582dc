use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(graphon_isfe::cli::main_with(std::env::args_os()))
}
