use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(prefkit::cli::run(std::env::args_os()))
}
