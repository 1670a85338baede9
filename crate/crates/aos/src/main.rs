use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = aos::cli::Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match aos::cli::execute(cli, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
