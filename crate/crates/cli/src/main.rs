use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use harmosc_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match execute(cli, &mut out) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{}", err.to_json());
            err.exit_code()
        }
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
