use std::process::ExitCode;

fn main() -> ExitCode {
    hfvar::cli::main()
}
