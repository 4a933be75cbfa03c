use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use kobasket::error::EXIT_CONFIG;
use kobasket::{execute, out_path, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(outcome) => {
            let written = match out_path(&cli.command) {
                Some(path) => std::fs::write(path, &outcome.text)
                    .map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => std::io::stdout()
                    .write_all(outcome.text.as_bytes())
                    .map_err(|e| e.to_string()),
            };
            if let Err(msg) = written {
                eprintln!("error [config]: {msg}");
                return ExitCode::from(EXIT_CONFIG as u8);
            }
            eprintln!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error [{}]: {e}", e.class());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
