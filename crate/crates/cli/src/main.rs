use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dssh_cli::{run, CliError, Command, Format, RunConfig};

/// Figure datasets for dissipatively coupled SSH lattices.
#[derive(Parser, Debug)]
#[command(name = "dssh", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        _ => Err(format!("unknown format `{s}` (csv|json)")),
    }
}

fn main_inner(args: Args) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    if let Some(n) = args.threads.or(cfg.threads) {
        if n == 0 {
            return Err(CliError::Config("threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    for path in run(args.command, &cfg, args.out.as_deref(), args.format)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match main_inner(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dssh: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
