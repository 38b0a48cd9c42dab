use std::io::Write;
use std::process::ExitCode;

use adscribe_cli::{run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(report) => {
            let body = if cli.json {
                format!("{}\n", serde_json::to_string_pretty(&report.json).expect("report serializes"))
            } else {
                report.text.clone()
            };
            // A closed pipe (`| head`) is not an error worth reporting.
            let _ = std::io::stdout().lock().write_all(body.as_bytes());
            ExitCode::from(report.exit_code())
        }
        Err(e) => {
            if cli.json {
                let code = if e.exit_code() == 2 { "USAGE" } else { "FAILED" };
                println!("{}", serde_json::json!({ "error": { "code": code, "message": e.message() } }));
            }
            eprintln!("adscribe: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
