use std::fs;
use std::process::ExitCode;

use clap::Parser;
use fsc::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.args.threads).build() {
        Ok(p) => p,
        Err(e) => return fail(&CliError::Validation(format!("thread pool: {e}"))),
    };
    let out = match pool.install(|| run(&cli)) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    let mut text = out.text().to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &cli.args.out {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                return fail(&CliError::Validation(format!("cannot write {}: {e}", path.display())));
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
