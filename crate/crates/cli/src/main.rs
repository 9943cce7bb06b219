use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;

use secat_cli::run::{run, RunError, RunOptions};
use secat_core::instance::parse_instance;

/// Exact relative sectional category of cospans of finite T0 spaces.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    /// Instance file (JSON); `-` reads standard input.
    instance: PathBuf,
    /// Cover by arbitrary subsets instead of open sets.
    #[arg(long)]
    generalized: bool,
    /// Largest level (number of classes minus one) the search may try.
    #[arg(long, value_name = "N")]
    max_level: Option<usize>,
    /// Largest number of maps a single homotopy search may visit.
    #[arg(long, value_name = "M")]
    budget: Option<usize>,
    /// Wall-clock limit in seconds.
    #[arg(long, value_name = "S")]
    timeout: Option<f64>,
    /// Seed for `fuzz` problems.
    #[arg(long)]
    seed: Option<u64>,
    /// Instance count for `fuzz` problems.
    #[arg(long)]
    count: Option<usize>,
    /// Neither read nor write the on-disk memo cache.
    #[arg(long)]
    no_cache: bool,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "PATH")]
    report_path: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("secat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<u8, RunError> {
    let text = if args.instance.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| RunError::Io(e.to_string()))?;
        s
    } else {
        std::fs::read_to_string(&args.instance).map_err(|e| RunError::Io(format!("{}: {e}", args.instance.display())))?
    };
    let inst = parse_instance(&text).map_err(|e| RunError::Input(e.to_string()))?;
    if let Some(t) = args.timeout {
        if !(t.is_finite() && t > 0.0) {
            return Err(RunError::Input(format!("timeout must be positive, got {t}")));
        }
    }
    if args.jobs > 0 {
        // an already-initialized global pool is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(args.jobs).build_global();
    }
    let opts = RunOptions {
        generalized: args.generalized,
        max_level: args.max_level,
        budget: args.budget,
        timeout: args.timeout.map(Duration::from_secs_f64),
        seed: args.seed,
        count: args.count,
        use_cache: !args.no_cache,
        jobs: args.jobs,
    };
    let report = run(&inst, &opts)?;
    let json = report.to_json();
    match &args.report_path {
        Some(path) => std::fs::write(path, json).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{json}"),
    }
    let failures = report.fuzz.as_ref().map_or(0, |f| f.hard_failures);
    Ok(if failures > 0 { 4 } else { 0 })
}
