use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use concmat::config::{parse_config, parse_config_str, ConfigFile, PRESETS};
use concmat::report::run_config;
use concmat::Error;

/// Run concentration experiments on bounded-entry random matrices.
#[derive(Debug, Parser)]
#[command(name = "concmat", version)]
struct Cli {
    /// Experiment file (TOML); may be repeated.
    #[arg(long = "config", value_name = "PATH")]
    configs: Vec<PathBuf>,
    /// Shipped preset to run; may be repeated.
    #[arg(long = "preset", value_name = "NAME")]
    presets: Vec<String>,
    /// Directory receiving one JSON and one CSV file per entry.
    #[arg(long, value_name = "DIR", default_value = "concmat-out")]
    out: PathBuf,
    /// Worker threads (defaults to the available parallelism).
    #[arg(long, env = "CONCMAT_JOBS", value_name = "N")]
    jobs: Option<usize>,
    /// Replace the seed of every entry.
    #[arg(long, value_name = "U64")]
    seed_override: Option<u64>,
    /// Print the names of the shipped presets and exit.
    #[arg(long)]
    list_presets: bool,
}

fn load(cli: &Cli) -> Result<ConfigFile, Error> {
    let mut all = ConfigFile::default();
    for name in &cli.presets {
        let text = concmat::config::preset(name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown preset {name:?} (see --list-presets)")))?;
        all.merge(parse_config_str(text)?);
    }
    for path in &cli.configs {
        all.merge(parse_config(path)?);
    }
    if let Some(seed) = cli.seed_override {
        all.experiments.iter_mut().for_each(|e| e.seed = seed);
        all.studies.iter_mut().for_each(|s| s.seed = seed);
    }
    let errors = concmat::config::validate(&all, &[], &[]);
    if !errors.is_empty() {
        return Err(Error::Config(concmat::error::ConfigErrors(errors)));
    }
    Ok(all)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.list_presets {
        for (name, text) in PRESETS {
            let about = text.lines().next().unwrap_or("").trim_start_matches('#').trim();
            println!("{name:<26} {about}");
        }
        return ExitCode::SUCCESS;
    }
    if cli.configs.is_empty() && cli.presets.is_empty() {
        eprintln!("error: nothing to run; pass --config <PATH> or --preset <NAME>");
        return ExitCode::from(1);
    }
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    let result = pool.install(|| run_config(&cfg, Some(&cli.out), |r| println!("{}", r.summary())));
    match result {
        Ok(reports) => {
            let failed = reports.iter().filter(|r| !r.pass()).count();
            println!("{} entries, {} failed; reports in {}", reports.len(), failed, cli.out.display());
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
