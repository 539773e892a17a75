use std::process::ExitCode;

fn main() -> ExitCode {
    let code = edg::cli::run_command(std::env::args_os());
    ExitCode::from(code as u8)
}
