use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mfscale::exponents::Family;
use mfscale::harness::{
    geometry_table, run_experiment, ExperimentConfig, Mode, Overrides, Preset, Sampling,
};

#[derive(Parser)]
#[command(name = "mfscale", version, about = "Multifractal random measure and walk simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write measure (and walk) paths for every replicate.
    Simulate(RunArgs),
    /// Write structure functions of every replicate.
    Structure(RunArgs),
    /// Structure functions plus slope fits against the predicted limits.
    Estimate(RunArgs),
    /// Compare closed-form cone measures with quadrature.
    VerifyGeometry(GeometryArgs),
    /// Run one of the canned experiments.
    Experiment {
        /// fine-resolution, mixed, zeta-regimes or chi-infinity
        preset: String,
        #[command(flatten)]
        args: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Key-value config file, or a manifest.json from an earlier run.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the ω grid of replicate 0 here.
    #[arg(long)]
    dump_omega: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    chi: Option<f64>,
    /// Comma-separated, e.g. 6,8,10
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    q_values: Option<Vec<f64>>,
    #[arg(long)]
    oversampling: Option<u32>,
    /// shared or per-scale
    #[arg(long)]
    sampling: Option<String>,
    #[arg(long)]
    walk: Option<bool>,
}

#[derive(Args)]
struct GeometryArgs {
    /// Optional config; only the integral scale and the largest n are used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    integral_scale: f64,
    #[arg(long, default_value_t = 6)]
    n: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn overrides(a: &RunArgs, mode: Mode) -> Result<Overrides> {
    let sampling = match a.sampling.as_deref() {
        None => None,
        Some("shared") => Some(Sampling::Shared),
        Some("per-scale") => Some(Sampling::PerScale),
        Some(other) => bail!("unknown sampling {other:?}, expected shared or per-scale"),
    };
    Ok(Overrides {
        mode: Some(mode),
        master_seed: a.seed,
        replicates: a.replicates,
        output_dir: a.out.clone(),
        dump_omega: a.dump_omega.clone(),
        threads: a.threads,
        t: a.t,
        chi: a.chi,
        n_values: a.n_values.clone(),
        q_values: a.q_values.clone(),
        oversampling: a.oversampling,
        sampling,
        walk: a.walk,
        fit: None,
    })
}

fn run(args: &RunArgs, mode: Mode) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    cfg.apply(&overrides(args, mode)?);
    let outcome = run_experiment(&cfg)?;
    match &cfg.output_dir {
        Some(dir) => println!("wrote {} files to {}", outcome.files.len() + 1, dir.display()),
        None => {
            for (name, bytes) in &outcome.files {
                if name.ends_with(".json") || name == "report.csv" {
                    println!("{}", String::from_utf8_lossy(bytes));
                }
            }
        }
    }
    if let Some(report) = &outcome.report {
        for b in &report.blocks {
            for r in b.sigma.iter().chain(&b.s) {
                for e in &r.entries {
                    eprintln!(
                        "chi={:<5} t={:<6} {:?} q={:<5} slope={:.4} (+/- {:.4}) theory={:.4} {:?}",
                        b.chi, b.t, r.kind, e.q, e.slope_hat, e.stderr, e.theory_slope, e.regime
                    );
                }
            }
            for f in b.fixed_resolution.iter().flatten() {
                eprintln!(
                    "t={:<6} {:?} q={:<5} estimate={:.4} limit={:.4}",
                    b.t, f.kind, f.q, f.estimate, f.limit
                );
            }
        }
    }
    Ok(())
}

fn verify_geometry(a: &GeometryArgs) -> Result<()> {
    let (scale, n) = match &a.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            (cfg.integral_scale, cfg.n_values.iter().copied().max().unwrap_or(a.n))
        }
        None => (a.integral_scale, a.n),
    };
    if let Some(dir) = &a.out {
        let mut cfg = ExperimentConfig::new(Family::Gaussian { variance: 1.0 });
        cfg.mode = Mode::VerifyGeometry;
        cfg.integral_scale = scale;
        cfg.n_values = vec![n];
        cfg.output_dir = Some(dir.clone());
        run_experiment(&cfg)?;
    }
    println!(
        "{:<11} {:<40} {:>22} {:>22} {:>10}",
        "quantity", "parameters", "closed form", "oracle", "abs error"
    );
    let mut worst: f64 = 0.0;
    for r in geometry_table(scale, n)? {
        worst = worst.max(r.abs_error());
        println!(
            "{:<11} {:<40} {:>22.15} {:>22.15} {:>10.2e}",
            r.quantity,
            r.parameters,
            r.closed_form,
            r.oracle,
            r.abs_error()
        );
    }
    println!("largest abs error {worst:.2e}");
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(a) => run(&a, Mode::Simulate),
        Command::Structure(a) => run(&a, Mode::Structure),
        Command::Estimate(a) => run(&a, Mode::Estimate),
        Command::VerifyGeometry(a) => verify_geometry(&a),
        Command::Experiment { preset, args } => {
            let preset: Preset = preset.parse()?;
            run(&args, Mode::Experiment(preset))
        }
    }
}
