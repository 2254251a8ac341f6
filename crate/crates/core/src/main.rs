use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use rayon::prelude::*;

use formica::config::{from_raw, parse_raw, Mode, RawConfig, RunConfig, Value};
use formica::execute::{execute, output_root, run_dir};
use formica::{presets, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "formica", version, about = "Trail-forming agents on the torus")]
struct Cli {
    /// particles, fd, fd2state, azimuthal or kernels
    #[arg(value_parser = parse_mode, required_unless_present = "list_presets")]
    mode: Option<Mode>,

    /// Config file; repeat to run a sweep, one run per file.
    #[arg(long = "config", value_name = "PATH")]
    configs: Vec<PathBuf>,

    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Output root (FORMICA_OUT takes precedence).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Stored parameter set, applied under each config.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    /// Runs executed concurrently in a sweep.
    #[arg(long, default_value_t = 1)]
    jobs: usize,

    /// Print the preset catalog and exit.
    #[arg(long)]
    list_presets: bool,
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse()
}

fn load(path: Option<&Path>, cli: &Cli, mode: Mode) -> Result<RunConfig> {
    let mut raw = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            parse_raw(&text)?
        }
        None => RawConfig::default(),
    };
    if let Some(name) = &cli.preset {
        match raw.entries.get("preset") {
            Some((Value::Str(existing), line)) if existing != name => {
                return Err(Error::Config(vec![format!(
                    "--preset '{name}' conflicts with preset '{existing}' on line {line}"
                )]));
            }
            _ => {
                raw.entries.insert("preset".into(), (Value::Str(name.clone()), 0));
            }
        }
    }
    let mut cfg = from_raw(&raw, Some(mode))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run_one(path: Option<&Path>, cli: &Cli, mode: Mode) -> Result<PathBuf> {
    let cfg = load(path, cli, mode)?;
    let dir = run_dir(&output_root(cli.out.as_deref(), &cfg), &cfg);
    execute(&cfg, &dir)?;
    Ok(dir)
}

fn report(label: &str, result: &Result<PathBuf>) -> i32 {
    match result {
        Ok(dir) => {
            println!("{}", dir.display());
            0
        }
        Err(Error::Config(list)) => {
            for msg in list {
                eprintln!("{label}: {msg}");
            }
            2
        }
        Err(e) => {
            eprintln!("{label}: {e}");
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_presets {
        for p in presets::catalog() {
            println!("{:<20} {}", p.name, p.about);
        }
        return ExitCode::SUCCESS;
    }
    let Some(mode) = cli.mode else {
        return ExitCode::from(2);
    };

    let paths: Vec<Option<&Path>> = if cli.configs.is_empty() {
        vec![None]
    } else {
        cli.configs.iter().map(|p| Some(p.as_path())).collect()
    };
    let results: Vec<Result<PathBuf>> = if paths.len() == 1 {
        vec![run_one(paths[0], &cli, mode)]
    } else {
        let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build() {
            Ok(pool) => pool,
            Err(e) => {
                eprintln!("cannot start {} workers: {e}", cli.jobs);
                return ExitCode::from(4);
            }
        };
        pool.install(|| paths.par_iter().map(|p| run_one(*p, &cli, mode)).collect())
    };

    let mut code = 0;
    for (path, result) in paths.iter().zip(&results) {
        let label = path.map_or_else(|| "formica".to_string(), |p| p.display().to_string());
        let c = report(&label, result);
        if code == 0 {
            code = c;
        }
    }
    ExitCode::from(code as u8)
}
