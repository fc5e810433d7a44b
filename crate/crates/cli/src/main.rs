use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = gaudy_cli::cli::Args::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if args.quiet {
        "warn"
    } else {
        "info"
    }))
    .init();
    match gaudy_cli::cli::execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
