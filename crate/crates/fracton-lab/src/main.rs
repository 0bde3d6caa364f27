use std::process::ExitCode;

fn main() -> ExitCode {
    fracton_lab::cli::main()
}
