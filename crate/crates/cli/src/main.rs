use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use nonlocal_core::experiments::{run_experiment, verify, ExperimentConfig};
use nonlocal_core::slicing_nd::{c_gamma, c_np};

#[derive(Parser, Debug)]
#[command(name = "nonlocal", version, about = "Evaluate non-local functionals and run experiment configs")]
struct Cli {
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output stem; `<out>.csv` and `<out>.json` are written.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Print C_(N,p) and c_gamma.
    Constants {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
    /// Run the built-in property corpus.
    Verify,
}

fn output_stem(cli_out: Option<&Path>, cfg: &ExperimentConfig, config_path: &Path) -> PathBuf {
    if let Some(out) = cli_out {
        return out.to_path_buf();
    }
    match &cfg.output {
        // Relative paths in the config resolve against the config's directory.
        Some(o) => config_path.parent().unwrap_or(Path::new("")).join(o),
        None => PathBuf::from(config_path.file_stem().unwrap_or_default()),
    }
}

fn run(cli: &Cli, config: &Path) -> Result<bool> {
    let mut cfg = ExperimentConfig::from_file(config).with_context(|| format!("loading {}", config.display()))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let report = run_experiment(&cfg)?;
    let stem = output_stem(cli.out.as_deref(), &cfg, config);
    let (csv, json) = report.write(&stem)?;
    let failures = report.failures();
    println!("{}: {} rows, {} failures", report.kind, report.rows.len(), failures);
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(failures == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match &cli.command {
        Command::Run { config } => run(&cli, config),
        Command::Constants { gamma, p, dim } => (|| {
            let cnp = c_np(*dim, *p)?;
            let cg = c_gamma(*gamma)?;
            println!("C_(N,p) = {cnp}  (N = {dim}, p = {p})");
            println!("c_gamma = {cg}  (gamma = {gamma})");
            Ok(true)
        })(),
        Command::Verify => (|| {
            let lines = verify::run_verify(cli.seed.unwrap_or(0))?;
            for l in &lines {
                println!("{} {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.name, l.detail);
            }
            Ok(lines.iter().all(|l| l.passed))
        })(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
