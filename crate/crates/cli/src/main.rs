use std::process::ExitCode;

use clap::Parser;
use phaselip_cli::{run, Cli, EXIT_ERROR};

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("PHASELIP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("PHASELIP_THREADS = `{raw}` is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_ERROR);
    }
    let outcome = cli.experiment().and_then(|(spec, base)| run(&spec, &base));
    match outcome {
        Ok(o) => {
            eprintln!("{}", o.summary);
            ExitCode::from(o.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
