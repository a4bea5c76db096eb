use std::process::ExitCode;

use clap::Parser;
use groundstate_cli::{run, Cli, RunConfig};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = RunConfig::from_cli(&cli).and_then(|cfg| run(&cfg));
    match outcome {
        Ok((report, _)) if report.failures == 0 => ExitCode::SUCCESS,
        Ok((report, _)) => {
            log::error!("{} failed point(s) or check(s)", report.failures);
            ExitCode::from(1)
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
