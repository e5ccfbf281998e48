use std::process::ExitCode;

fn main() -> ExitCode {
    paternalism::cli::run()
}
