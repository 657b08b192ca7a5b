//! `ldrg`: two-sample test, probability estimation and simulation runs for
//! latent distance random graphs.
//!
//! Exit status: 0 on success, 2 for invalid input, arguments or
//! configuration, 3 when the requested calibration cannot be applied, and 4
//! when rank selection fails on the data.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ldrg::estimator::{
    average_adjacency, discretize, estimate_prob_matrix, EstimatorConfig, RankSelection, DEFAULT_C0,
};
use ldrg::io::{read_graphs, read_run_config, report_to_json, write_prob_matrix};
use ldrg::resampling::{bootstrap_test, permutation_test, TestReport};
use ldrg::{Error, ProbMatrix};

#[derive(Parser)]
#[command(name = "ldrg", version, about = "Two-sample test for latent distance random graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test whether two samples of graphs share latent positions up to
    /// similarity.
    Test(TestArgs),
    /// Run a simulation experiment from a JSON configuration and write the
    /// power table as CSV.
    Simulate(SimulateArgs),
    /// Write the estimated edge-probability matrix of a sample.
    Estimate(EstimateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Permutation,
    Bootstrap,
}

#[derive(Clone, Copy)]
enum RankArg {
    Fixed(usize),
    Threshold,
    Profile,
}

fn parse_rank(s: &str) -> Result<RankArg, String> {
    match s {
        "auto-threshold" => Ok(RankArg::Threshold),
        "auto-profile" => Ok(RankArg::Profile),
        _ => match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(RankArg::Fixed(k)),
            _ => Err("expected a positive integer, `auto-threshold` or `auto-profile`".into()),
        },
    }
}

#[derive(Clone, Copy)]
struct EtaArg(Option<f64>);

fn parse_eta(s: &str) -> Result<EtaArg, String> {
    if s == "none" {
        return Ok(EtaArg(None));
    }
    match s.parse::<f64>() {
        Ok(eta) if eta > 0.0 && eta <= 1.0 => Ok(EtaArg(Some(eta))),
        _ => Err("expected a number in (0, 1] or `none`".into()),
    }
}

#[derive(Args)]
struct EstimatorArgs {
    /// Truncation rank: an integer, `auto-threshold` or `auto-profile`.
    #[arg(long, default_value = "auto-threshold", value_parser = parse_rank)]
    k: RankArg,
    /// Discretisation step in (0, 1], or `none`.
    #[arg(long, default_value = "none", value_parser = parse_eta)]
    eta: EtaArg,
    /// Constant of the `auto-threshold` rule `c0 sqrt(n rho_hat)`.
    #[arg(long, default_value_t = DEFAULT_C0)]
    c0: f64,
}

impl EstimatorArgs {
    fn config(&self) -> EstimatorConfig {
        let rank = match self.k {
            RankArg::Fixed(k) => RankSelection::Fixed(k),
            RankArg::Threshold => RankSelection::Threshold { c0: self.c0 },
            RankArg::Profile => RankSelection::ProfileLikelihood { max_rank: None },
        };
        EstimatorConfig {
            rank,
            clip: true,
            eta: self.eta.0,
        }
    }
}

#[derive(Args)]
struct TestArgs {
    /// Graph files of the first sample (edge list or dense).
    #[arg(long, num_args = 1.., required = true)]
    a: Vec<PathBuf>,
    /// Graph files of the second sample.
    #[arg(long, num_args = 1.., required = true)]
    b: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "bootstrap")]
    method: MethodArg,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Resampling replications.
    #[arg(long, default_value_t = 200)]
    reps: usize,
    /// Seed of all randomness; drawn from the OS when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    threads: Option<usize>,
    /// Write the JSON report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print the JSON report on standard output instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV output; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write every row with its per-trial records as JSON.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Overrides the thread count of the configuration.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long, num_args = 1.., required = true)]
    a: Vec<PathBuf>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Output matrix; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Calibration(_) => 3,
        Error::Estimation { .. } => 4,
        _ => 2,
    }
}

fn init_threads(threads: Option<usize>) -> Result<(), Error> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Parameter("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Parameter(format!("cannot start thread pool: {e}")))?;
    }
    Ok(())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_report(r: &TestReport, alpha: f64) -> io::Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "method      {}", r.method)?;
    writeln!(out, "n           {}", r.n)?;
    writeln!(out, "K_A K_B     {} {}", r.k_a, r.k_b)?;
    writeln!(out, "t           {:.6}{}", r.t_observed, if r.observed_degenerate { " (degenerate)" } else { "" })?;
    writeln!(out, "p_value     {:.6}", r.p_value)?;
    writeln!(out, "replicates  {} (degenerate: {})", r.n_reps, r.degenerate_replicates)?;
    writeln!(out, "seed        {}", r.seed)?;
    writeln!(out, "reject      {} at alpha = {alpha}", if r.p_value < alpha { "yes" } else { "no" })
}

fn run_test(args: TestArgs) -> Result<(), Error> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::Parameter(format!("--alpha {} outside (0, 1)", args.alpha)));
    }
    init_threads(args.threads)?;
    let a = read_graphs(&args.a)?;
    let b = read_graphs(&args.b)?;
    if a[0].n() != b[0].n() {
        return Err(Error::Input(format!(
            "samples have different vertex counts ({} and {})",
            a[0].n(),
            b[0].n()
        )));
    }
    let seed = args.seed.unwrap_or_else(|| {
        let s: u64 = rand::random();
        eprintln!("seed: {s}");
        s
    });
    let cfg = args.estimator.config();
    let report = match args.method {
        MethodArg::Permutation => permutation_test::<f64>(&a, &b, &cfg, args.reps, seed)?,
        MethodArg::Bootstrap => bootstrap_test::<f64>(&a, &b, &cfg, args.reps, seed)?,
    };
    let json = report_to_json(&report);
    if let Some(path) = &args.report {
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, &json).map_err(io::Error::other)?;
        writeln!(f)?;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&json).map_err(io::Error::other)?);
    } else {
        print_report(&report, args.alpha)?;
    }
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<(), Error> {
    let cfg = read_run_config(&args.config)?;
    init_threads(args.threads.or(cfg.threads))?;
    let start = Instant::now();
    let table = ldrg::harness::run_experiment(&cfg.experiment)?;
    for row in &table.rows {
        match (&row.error, row.power) {
            (Some(e), _) => eprintln!("{} n={} eps={}: failed: {e}", row.setting, row.n, row.eps),
            (None, Some(p)) => eprintln!(
                "{} n={} eps={}: power {p} ({:.1}s for this n)",
                row.setting, row.n, row.eps, row.wall_clock_secs
            ),
            _ => {}
        }
    }
    eprintln!("total {:.1}s", start.elapsed().as_secs_f64());
    let mut out = output(args.out.as_deref())?;
    table.write_csv(&mut out)?;
    out.flush()?;
    if let Some(path) = &args.records {
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, &table).map_err(io::Error::other)?;
        writeln!(f)?;
    }
    Ok(())
}

fn run_estimate(args: EstimateArgs) -> Result<(), Error> {
    let graphs = read_graphs(&args.a)?;
    let cfg = args.estimator.config();
    let abar: ProbMatrix = average_adjacency(&graphs)?;
    let est = estimate_prob_matrix(&abar, &cfg)?;
    let p = match cfg.eta {
        Some(eta) => discretize(&est.p, eta)?,
        None => est.p,
    };
    eprintln!("K = {}, rho_hat = {:.6}", est.rank, est.rho_hat);
    let mut out = output(args.out.as_deref())?;
    write_prob_matrix(&p, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(a) => run_test(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Estimate(a) => run_estimate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Estimation { spectrum, .. } = &e {
                let head: Vec<String> = spectrum.iter().take(10).map(|x| format!("{x:.4}")).collect();
                eprintln!("leading eigenvalues: {}", head.join(" "));
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
