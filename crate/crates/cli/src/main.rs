use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use supercrit::harness::{run_experiment, ExperimentConfig, ExperimentKind, Status};

#[derive(Parser)]
#[command(name = "supercrit", version, about = "Non-local drift-diffusion laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the symbol of a Lévy model and fit its coercivity bound.
    Symbol(Common),
    /// Littlewood-Paley blocks and Besov norms of a field.
    Lp(Common),
    /// Solve the non-local parabolic equation.
    Pde(Common),
    /// Simulate the jump SDE.
    Simulate(Common),
    /// Run one of the verification studies.
    Verify {
        kind: VerifyKind,
        #[command(flatten)]
        common: Common,
    },
    /// Compare laws under drift mollification.
    RegimeStudy(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyKind {
    Apriori,
    Krylov,
    FeynmanKac,
    Zvonkin,
    Maxprinciple,
    Coercivity,
    Commutator,
}

impl VerifyKind {
    fn kind(self) -> ExperimentKind {
        match self {
            VerifyKind::Apriori => ExperimentKind::VerifyApriori,
            VerifyKind::Krylov => ExperimentKind::VerifyKrylov,
            VerifyKind::FeynmanKac => ExperimentKind::VerifyFeynmanKac,
            VerifyKind::Zvonkin => ExperimentKind::VerifyZvonkin,
            VerifyKind::Maxprinciple => ExperimentKind::VerifyMaxprinciple,
            VerifyKind::Coercivity => ExperimentKind::VerifyCoercivity,
            VerifyKind::Commutator => ExperimentKind::VerifyCommutator,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of simulated paths.
    #[arg(long)]
    paths: Option<usize>,
    /// Worker threads.
    #[arg(long, env = "SUPERCRIT_THREADS")]
    threads: Option<usize>,
}

fn run(kind: ExperimentKind, c: Common) -> Result<Status, String> {
    let mut cfg = ExperimentConfig::from_file(&c.config).map_err(|e| e.to_string())?;
    if cfg.kind != kind {
        return Err(format!(
            "configuration is for '{}' but '{}' was requested",
            cfg.kind, kind
        ));
    }
    if let Some(seed) = c.seed {
        cfg.seed = Some(seed);
    }
    if let Some(paths) = c.paths {
        cfg.sim.paths = paths;
    }
    let out = c
        .out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .ok_or("no output directory: pass --out or set `output`")?;
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    let summary = run_experiment(&cfg, &out).map_err(|e| e.to_string())?;
    for check in &summary.checks {
        println!("{:<11} {}: {}", check.status.label(), check.name, check.detail);
    }
    println!("{} {} -> {}", summary.status, kind, out.display());
    Ok(summary.status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match cli.command {
        Command::Symbol(c) => (ExperimentKind::Symbol, c),
        Command::Lp(c) => (ExperimentKind::Lp, c),
        Command::Pde(c) => (ExperimentKind::Pde, c),
        Command::Simulate(c) => (ExperimentKind::Simulate, c),
        Command::Verify { kind, common } => (kind.kind(), common),
        Command::RegimeStudy(c) => (ExperimentKind::RegimeStudy, c),
    };
    match run(kind, common) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
