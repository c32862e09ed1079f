use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ffdyn_cli::{assemble_config, run_experiment, Experiment, Format};

#[derive(Parser)]
#[command(name = "ffdyn", version, about = "Experiments on diagonal flows over Laurent-series fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Δ(g_t Λ_A) along sampled trajectories
    DeltaFlow(Common),
    /// Khintchine–Groshev dichotomy by Monte Carlo
    KgMc(Common),
    /// Multiplicative correspondence over a box of drifts
    MultMc(Common),
    /// Hit counts against expected mass along a threshold ladder
    StrongBc(Common),
    /// Cusp-volume tail against its comparator
    CuspVolume(Common),
    /// Logarithm law for geodesics on the quotient ray
    TreeLoglaw(Common),
    /// Exact and sampled Ξ(g_t) with a decay fit
    XiDecay(Common),
    /// One-shot reduction of a matrix file (`matrix=PATH`)
    Reduce(Common),
}

#[derive(Args)]
struct Common {
    /// key=value or JSON config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads; artifacts do not depend on this
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// key=value overrides applied after the config file
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common) = match cli.command {
        Command::DeltaFlow(c) => (Experiment::DeltaFlow, c),
        Command::KgMc(c) => (Experiment::KgMc, c),
        Command::MultMc(c) => (Experiment::MultMc, c),
        Command::StrongBc(c) => (Experiment::StrongBc, c),
        Command::CuspVolume(c) => (Experiment::CuspVolume, c),
        Command::TreeLoglaw(c) => (Experiment::TreeLoglaw, c),
        Command::XiDecay(c) => (Experiment::XiDecay, c),
        Command::Reduce(c) => (Experiment::Reduce, c),
    };
    let text = match &common.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("expcli: reading {}: {e}", path.display());
                return ExitCode::from(1);
            }
        },
        None => None,
    };
    let format = common.format.as_deref().map(|f| f.parse::<Format>().expect("clap-checked"));
    let cfg = match assemble_config(experiment, text.as_deref(), &common.overrides, common.seed, format) {
        Ok(cfg) => cfg,
        Err(errors) => {
            eprintln!("expcli: invalid configuration");
            for e in errors {
                eprintln!("  {e}");
            }
            return ExitCode::from(1);
        }
    };
    print!("{}", cfg.echo());
    let outcome = match run_experiment(&cfg, common.threads) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = outcome.write_to(&common.out) {
        eprintln!("expcli: writing to {}: {e}", common.out.display());
        return ExitCode::from(1);
    }
    let r = &outcome.report;
    println!("summary = {}", r.summary);
    for d in &r.degradations {
        println!("degraded: {d}");
    }
    println!("result = {}", if r.pass { "PASS" } else { "FAIL" });
    eprintln!("wall clock: {:.3} s", r.wall_clock.as_secs_f64());
    ExitCode::from(r.exit_code() as u8)
}
