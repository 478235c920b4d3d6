use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bellfilter::harness::{
    analyze, render_report, run_sweep, sweep_csv, AnalyzeOptions, Computation, StateFamily,
    SweepSpec,
};
use bellfilter::lhv::{lhv_report, random_pairs, LhvModel};
use bellfilter::{rho1, rho2, werner, DensityMatrix, Error, StateFile, VertesiOptions};

#[derive(Parser)]
#[command(name = "bellfilter", about = "CHSH and Vértesi violation of two-qubit states under local filtering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report the violation figures of a single state.
    Analyze(AnalyzeArgs),
    /// Sweep a state family and write CSV.
    Sweep(SweepArgs),
    /// Check the explicit LHV model against the exact statistics.
    Lhv(LhvArgs),
    /// Print the version.
    Version,
}

#[derive(Args, Clone, Copy)]
struct SearchArgs {
    /// Quadrature resolution used for the final Vértesi polish.
    #[arg(long, default_value_t = 24)]
    quad_n: usize,
    /// Optimizer restarts.
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SearchArgs {
    fn options(&self) -> VertesiOptions {
        let mut o = VertesiOptions::default().with_quad_n(self.quad_n);
        o.optimizer.restarts = self.restarts;
        o.optimizer.seed = self.seed;
        o
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct StateSource {
    /// Werner state with singlet weight p.
    #[arg(long, value_name = "P", allow_negative_numbers = true)]
    werner: Option<f64>,
    /// rho1 family with parameters p and r.
    #[arg(long, num_args = 2, value_names = ["P", "R"], allow_negative_numbers = true)]
    rho1: Option<Vec<f64>>,
    /// rho2 family with parameter p.
    #[arg(long, value_name = "P", allow_negative_numbers = true)]
    rho2: Option<f64>,
    /// JSON state file with `re` and `im` 4x4 arrays.
    #[arg(long, value_name = "PATH")]
    file: Option<PathBuf>,
}

impl StateSource {
    fn load(&self) -> Result<DensityMatrix, Error> {
        if let Some(p) = self.werner {
            return werner(p);
        }
        if let Some(v) = &self.rho1 {
            return rho1(v[0], v[1]);
        }
        if let Some(p) = self.rho2 {
            return rho2(p);
        }
        let path = self.file.as_ref().expect("clap enforces one state source");
        let text = fs::read_to_string(path)
            .map_err(|e| Error::StateFile(format!("{}: {e}", path.display())))?;
        StateFile::from_json(&text)
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    state: StateSource,
    /// Also maximize over local filters.
    #[arg(long)]
    filtered: bool,
    /// Also compute the Vértesi lower bound.
    #[arg(long)]
    vertesi: bool,
    #[command(flatten)]
    search: SearchArgs,
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
    /// Write the report to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Werner,
    Rho1,
    Rho2,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Fixed r for the rho1 family.
    #[arg(long, default_value_t = 0.3)]
    r: f64,
    #[arg(long, allow_negative_numbers = true)]
    start: f64,
    #[arg(long, allow_negative_numbers = true)]
    stop: f64,
    #[arg(long)]
    steps: usize,
    /// chsh | chsh-filtered | vertesi | vertesi-filtered
    #[arg(long)]
    computation: String,
    /// Bisection tolerance for the violation onset.
    #[arg(long, default_value_t = 1e-4)]
    onset_tol: f64,
    #[command(flatten)]
    search: SearchArgs,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LhvArgs {
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 1_000_000)]
    n: u64,
    #[arg(long, default_value_t = 20)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pass threshold in standard deviations.
    #[arg(long, default_value_t = 4.0)]
    sigmas: f64,
}

enum Failure {
    Input(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), Failure> {
    let rho = args.state.load()?;
    let opts = AnalyzeOptions {
        filtered: args.filtered,
        vertesi: args.vertesi,
        vertesi_options: args.search.options(),
    };
    let report = analyze(&rho, &opts)?;
    let text = if args.json {
        let mut s = serde_json::to_string_pretty(&report)
            .map_err(|e| Failure::Numerical(format!("cannot serialize report: {e}")))?;
        s.push('\n');
        s
    } else {
        render_report(&report)
    };
    emit(&text, args.out.as_ref())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let family = match args.family {
        Family::Werner => StateFamily::Werner,
        Family::Rho1 => StateFamily::Rho1 { r: args.r },
        Family::Rho2 => StateFamily::Rho2,
    };
    let computation: Computation = args.computation.parse()?;
    if !(args.onset_tol > 0.0) {
        return Err(Failure::Input(format!("onset tolerance must be positive, got {}", args.onset_tol)));
    }
    let spec = SweepSpec {
        family,
        start: args.start,
        stop: args.stop,
        steps: args.steps,
        computation,
        options: args.search.options(),
        onset_tol: args.onset_tol,
    };
    let out = run_sweep(&spec)?;
    emit(&sweep_csv(&spec, &out), args.out.as_ref())
}

fn cmd_lhv(args: &LhvArgs) -> Result<(), Failure> {
    let model = LhvModel::new(args.q)?;
    let pairs = random_pairs(args.pairs, args.seed);
    let report = lhv_report(&model, &pairs, args.n, args.seed)?;
    let verdict = if report.passes(args.sigmas) { "PASS" } else { "FAIL" };
    println!(
        "q {}  pairs {}  trials {}  max deviation {:.3e}  max sigma {:.2}  {} at {}σ",
        args.q, report.pairs, report.trials, report.max_abs_deviation, report.max_sigma, verdict, args.sigmas
    );
    if report.passes(args.sigmas) {
        Ok(())
    } else {
        Err(Failure::Numerical("simulated statistics deviate beyond threshold".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Lhv(a) => cmd_lhv(a),
        Command::Version => {
            println!("bellfilter {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
