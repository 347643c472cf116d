//! Command-line front end: run experiments from config files, print sizing
//! plans, and sweep seeds into a combined CSV.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fedfreq::config::{ExperimentConfig, SizingMode};
use fedfreq::data::{exact_oracle, load_items, plan_from_stream, zipf_plan};
use fedfreq::error::{Error, Result};
use fedfreq::experiment::run_experiment;
use fedfreq::metrics::write_csv;
use fedfreq_core::{
    comm_cost_bits, oracle_width, two_phase_plan, GroupParams, Strategy,
    TargetSpec,
};

#[derive(Parser)]
#[command(name = "fedfreq", version, about = "Federated frequency estimation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file and write metrics CSV.
    Run(RunArgs),
    /// Print width recommendations for a tau grid as JSON.
    Plan(PlanArgs),
    /// Rerun one config across consecutive seeds into a combined CSV.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Override the strategy (shared, fresh, hybrid).
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Override the run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the round count.
    #[arg(long)]
    rounds: Option<usize>,
    /// Override the sketch width.
    #[arg(long)]
    width: Option<usize>,
    /// Override the sketch row count.
    #[arg(long)]
    rows: Option<usize>,
    /// Aggregate in plaintext instead of masking clients.
    #[arg(long)]
    no_secsum: bool,
    /// Override the summation group size in bits.
    #[arg(long)]
    group_bits: Option<u32>,
    /// Override the tau grid (comma-separated targets).
    #[arg(long, value_delimiter = ',')]
    tau_grid: Vec<f64>,
    /// Write metrics CSV here instead of the config's output (or stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write per-item estimates to this file.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    /// Domain size d.
    #[arg(long)]
    domain: usize,
    /// Total clients across all rounds.
    #[arg(long)]
    clients: usize,
    /// Zipf exponent for a synthetic item distribution.
    #[arg(long)]
    zipf_a: Option<f64>,
    /// Item file to plan for instead of a synthetic distribution.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Failure probability target.
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    /// Comma-separated tau targets; defaults to a geometric grid.
    #[arg(long, value_delimiter = ',')]
    tau_grid: Vec<f64>,
    /// Seed for the pilot subsample.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment config file (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Number of consecutive seeds, starting from the config's seed.
    #[arg(long)]
    seeds: u64,
    /// Override the tau grid (comma-separated targets).
    #[arg(long, value_delimiter = ',')]
    tau_grid: Vec<f64>,
    /// Write the combined CSV here instead of the config's output (or stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    ExperimentConfig::parse(&text)
}

fn apply_overrides(cfg: &mut ExperimentConfig, args: &RunArgs) {
    if let Some(s) = args.strategy {
        cfg.strategy = s;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = args.rounds {
        cfg.rounds = m;
    }
    if let Some(w) = args.width {
        cfg.width = Some(w);
        cfg.sizing = SizingMode::Fixed;
    }
    if let Some(l) = args.rows {
        cfg.rows = Some(l);
    }
    if args.no_secsum {
        cfg.secsum = false;
    }
    if let Some(b) = args.group_bits {
        cfg.group_bits = Some(b);
    }
    if !args.tau_grid.is_empty() {
        cfg.tau_grid = args.tau_grid.clone();
    }
    if let Some(path) = &args.output {
        cfg.output = Some(path.clone());
    }
    if let Some(path) = &args.dump {
        cfg.dump_estimates = Some(path.clone());
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    apply_overrides(&mut cfg, &args);
    let result = run_experiment(&cfg)?;
    for warning in &result.warnings {
        eprintln!("warning: {warning}");
    }
    emit_csv(&cfg.output, &result.metrics)?;
    if let Some(path) = &cfg.dump_estimates {
        dump_estimates(path, &result)?;
        eprintln!("wrote estimates to {}", path.display());
    }
    Ok(())
}

/// Metrics go to the given file, or to stdout when there is none.
fn emit_csv(output: &Option<PathBuf>, rows: &[fedfreq::MetricsRow]) -> Result<()> {
    match output {
        Some(path) => {
            let mut file = fs::File::create(path)?;
            write_csv(rows, &mut file)?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => write_csv(rows, &mut std::io::stdout().lock())?,
    }
    Ok(())
}

fn dump_estimates(path: &PathBuf, result: &fedfreq::RunResult) -> Result<()> {
    let mut text = String::from("tau_target,item,estimate,exact\n");
    for cell in &result.estimates {
        for (item, (&est, &exact)) in cell
            .estimate
            .values()
            .iter()
            .zip(&result.exact)
            .enumerate()
        {
            text.push_str(&format!("{},{item},{est},{exact}\n", cell.tau_target));
        }
    }
    fs::write(path, text)?;
    Ok(())
}

/// Geometric grid of five targets between 1e-3 and 0.1, floored at
/// `20 / clients` so no target asks for precision below the count noise.
fn default_tau_grid(clients: usize) -> Vec<f64> {
    let lo = (20.0 / clients as f64).max(1e-3);
    let hi = 0.1_f64.max((8.0 * lo).min(0.9));
    let points = 5;
    let ratio = (hi / lo).powf(1.0 / (points - 1) as f64);
    (0..points).map(|i| lo * ratio.powi(i)).collect()
}

fn cmd_plan(args: PlanArgs) -> Result<()> {
    let plan = match (&args.input, args.zipf_a) {
        (Some(path), None) => {
            let (items, d) = load_items(path, Some(args.domain))?;
            if items.len() != args.clients {
                return Err(Error::Validation(format!(
                    "file holds {} items but --clients is {}",
                    items.len(),
                    args.clients
                )));
            }
            plan_from_stream(&items, 1, d)?
        }
        (None, Some(a)) => zipf_plan(args.domain, a, 1, args.clients, args.seed)?,
        _ => {
            return Err(Error::Validation(
                "give exactly one of --zipf-a and --input".into(),
            ))
        }
    };
    let taus = if args.tau_grid.is_empty() {
        default_tau_grid(args.clients)
    } else {
        args.tau_grid.clone()
    };
    let (f_global, _) = exact_oracle(&plan);
    let group = GroupParams::for_clients(args.clients, 1)?;

    let mut rows = 0usize;
    let mut fit_json = String::from("null");
    let mut widths = Vec::new();
    for &tau in &taus {
        let spec = TargetSpec::new(tau, args.p)?;
        rows = spec.rows_for_domain(args.domain);
        let report = two_phase_plan(&plan, &spec, (16, 100), 20, args.clients, args.seed)?;
        if let Some(fit) = &report.fit {
            fit_json = format!(
                "{{\"alpha\": {}, \"beta\": {}, \"i_star\": {}}}",
                fit.alpha, fit.beta, fit.i_star
            );
        }
        widths.push(format!(
            "    {{\"tau\": {}, \"w_oracle\": {}, \"w_worst\": {}, \"w_two_phase\": {}, \"fallback\": {}, \"bits_per_client\": {}}}",
            tau,
            oracle_width(&f_global, &spec, args.clients),
            report.w_worst,
            report.width,
            report.fallback,
            comm_cost_bits(rows, report.width, &group),
        ));
    }
    println!(
        "{{\n  \"domain\": {},\n  \"clients\": {},\n  \"p\": {},\n  \"rows\": {rows},\n  \"fit\": {fit_json},\n  \"widths\": [\n{}\n  ]\n}}",
        args.domain,
        args.clients,
        args.p,
        widths.join(",\n"),
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    if args.seeds == 0 {
        return Err(Error::Validation("--seeds must be at least 1".into()));
    }
    let mut cfg = load_config(&args.config)?;
    if !args.tau_grid.is_empty() {
        cfg.tau_grid = args.tau_grid.clone();
    }
    if let Some(path) = &args.output {
        cfg.output = Some(path.clone());
    }
    let base_seed = cfg.seed;
    let mut rows = Vec::new();
    for offset in 0..args.seeds {
        cfg.seed = base_seed + offset;
        let result = run_experiment(&cfg)?;
        for warning in &result.warnings {
            eprintln!("warning: seed {}: {warning}", cfg.seed);
        }
        rows.extend(result.metrics);
    }
    emit_csv(&cfg.output, &rows)?;
    Ok(())
}
