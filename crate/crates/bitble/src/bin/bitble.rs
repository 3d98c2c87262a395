use std::process::ExitCode;

fn main() -> ExitCode {
    bitble::cli::main_entry()
}
