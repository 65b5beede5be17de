use progmeas_cli::{run, CliError};
use std::process::ExitCode;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    match run(&argv, std::io::stdout().lock()) {
        Ok(_) => ExitCode::SUCCESS,
        Err(CliError::Usage(e)) => e.exit(),
        Err(CliError::Run(e)) => {
            eprintln!("progmeas: {e}");
            ExitCode::FAILURE
        }
    }
}
