use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use mflab_cli::args::{Cli, Command};
use mflab_cli::run::{self, ExitStatus};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = cli.command.args();
    if let Some(jobs) = args.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    let config = match args.resolve(cli.command.kind()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(ExitStatus::Config.code() as u8);
        }
    };
    if let Command::Validate(a) = &cli.command {
        let checked = if a.config.is_some() { config.validate() } else { config.diagnostics() };
        return match checked {
            Ok(d) => {
                let mut text = format!(
                    "alpha(Omega) = {}\n4*pi*(1-alpha) = {}\n8*pi*(1-alpha) = {}\nmu_plus = {}\nestimated nodes = {}\n",
                    d.alpha, d.threshold_half, d.threshold, d.mu_plus, d.n_nodes_estimate
                );
                for n in &d.notes {
                    text.push_str(&format!("note: {n}\n"));
                }
                emit(&text);
                ExitCode::SUCCESS
            }
            Err(e) => {
                emit(&format!("rejected: {e}\n"));
                ExitCode::from(ExitStatus::Config.code() as u8)
            }
        };
    }
    let (status, result) = run::execute(&config);
    match result {
        Ok(outcome) => {
            let mut text: String =
                outcome.checks.iter().map(|c| format!("{} {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name)).collect();
            text.push_str(&format!("artifacts in {}\n", config.output.dir.display()));
            emit(&text);
        }
        Err(e) => eprintln!("error: {e:#}"),
    }
    ExitCode::from(status.code() as u8)
}

/// Writes to stdout, ignoring a closed pipe: the artifacts are already on disk.
fn emit(text: &str) {
    let _ = io::stdout().lock().write_all(text.as_bytes());
}
