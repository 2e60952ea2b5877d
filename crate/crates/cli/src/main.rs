use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(diffcurv_cli::execute(std::env::args_os()))
}
