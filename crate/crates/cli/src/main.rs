use std::process::ExitCode;

use clap::Parser;
use fracshape_cli::{configure_threads, run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let threads = std::env::var("FRACSHAPE_THREADS").ok();
    let result = configure_threads(threads.as_deref())
        .and_then(|_| cli.into_config())
        .and_then(|cfg| run(&cfg));
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fracshape: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
