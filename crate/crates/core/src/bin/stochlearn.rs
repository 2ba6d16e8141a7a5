use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stochlearn::coverage::{coverage_config, Placement};
use stochlearn::experiment::{run, ExperimentConfig, GameSpec, Operation};
use stochlearn::{Error, Kernel};

#[derive(Parser)]
#[command(name = "stochlearn", version, about = "Log-linear and Metropolis learning on potential games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every operation listed in a config file
    Run(Common),
    /// Sample traces (and optional first-equilibrium statistics)
    Simulate(Common),
    /// Stationary distributions against the Gibbs measure
    Stationary(Common),
    /// Exact and Monte-Carlo hitting times to the Nash set, with bounds
    Hitting(Common),
    /// Zero-cost path statistics
    Zerocost(Common),
    /// Cycle decomposition with DOT export
    Cda(Common),
    /// LLL versus ML hierarchy comparison
    Compare(Common),
    /// Regularity checks and optional exit-time regression
    Validate(Common),
    /// Emit a random coverage-game fixture
    CoverageGen(CoverageGen),
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Lll,
    Ml,
    Both,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in game: g2, g3, case-study, random-potential, coverage
    #[arg(long, conflicts_with = "fixture")]
    game: Option<String>,
    /// TOML game fixture
    #[arg(long)]
    fixture: Option<PathBuf>,
    /// Seed of a random built-in game
    #[arg(long)]
    game_seed: Option<u64>,
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    /// Temperature; repeat for several
    #[arg(short = 't', long = "temperature")]
    temperatures: Vec<f64>,
    /// Simulation seed; repeat for several
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    /// Initial profile as comma-separated actions
    #[arg(long, value_delimiter = ',')]
    initial: Option<Vec<usize>>,
    #[arg(long)]
    first_nash_trials: Option<usize>,
    #[arg(long)]
    mc_traces: Option<usize>,
    /// Largest enumerable state space
    #[arg(long)]
    cap: Option<usize>,
    /// Exit with status 3 when any verdict fails
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct CoverageGen {
    #[arg(long)]
    d: u32,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    alpha: f64,
    /// Radius list starting with 0, comma-separated
    #[arg(long, value_delimiter = ',', required = true)]
    radii: Vec<f64>,
    #[arg(long)]
    seed: u64,
    /// Output file; stdout when absent
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn build_config(c: &Common, op: Option<Operation>) -> stochlearn::Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::for_game(GameSpec::default()),
    };
    if let Some(g) = &c.game {
        cfg.game.builtin = Some(g.clone());
        cfg.game.path = None;
    }
    if let Some(p) = &c.fixture {
        cfg.game.path = Some(p.clone());
        cfg.game.builtin = None;
    }
    if let Some(s) = c.game_seed {
        cfg.game.seed = Some(s);
    }
    match c.kernel {
        Some(KernelArg::Lll) => cfg.kernels = vec![Kernel::LogLinear],
        Some(KernelArg::Ml) => cfg.kernels = vec![Kernel::Metropolis],
        Some(KernelArg::Both) => cfg.kernels = Kernel::BOTH.to_vec(),
        None => {}
    }
    if !c.temperatures.is_empty() {
        cfg.temperatures = c.temperatures.clone();
    }
    if !c.seeds.is_empty() {
        cfg.seeds = c.seeds.clone();
    }
    if let Some(o) = &c.output {
        cfg.output = o.clone();
    }
    if let Some(s) = c.steps {
        cfg.simulate.steps = s;
    }
    if let Some(a) = &c.initial {
        cfg.simulate.initial = Some(a.clone());
    }
    if let Some(n) = c.first_nash_trials {
        cfg.simulate.first_nash_trials = n;
    }
    if let Some(n) = c.mc_traces {
        cfg.hitting.mc_traces = n;
    }
    if let Some(cap) = c.cap {
        cfg.cap = cap;
    }
    if let Some(op) = op {
        cfg.operations = vec![op];
    }
    Ok(cfg)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Argument(_) | Error::Io(_) => 1,
        _ => 2,
    }
}

fn execute(common: &Common, op: Option<Operation>) -> Result<ExitCode, Error> {
    let cfg = build_config(common, op)?;
    let manifest = run(&cfg)?;
    for entry in &manifest.outputs {
        for f in &entry.files {
            println!("{}", manifest.directory.join(f).display());
        }
    }
    for (op, d) in &manifest.timing {
        eprintln!("{op}: {:.3}s", d.as_secs_f64());
    }
    if !manifest.passed {
        eprintln!("one or more verdicts failed; see report.json");
        if common.strict {
            return Ok(ExitCode::from(3));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn coverage_gen(args: &CoverageGen) -> Result<ExitCode, Error> {
    let cfg = coverage_config(
        args.d,
        &args.radii,
        args.alpha,
        Placement::Random {
            n: args.n,
            seed: args.seed,
        },
    );
    cfg.validate()?;
    let text = cfg.to_toml_string();
    match &args.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => execute(c, None),
        Command::Simulate(c) => execute(c, Some(Operation::Simulate)),
        Command::Stationary(c) => execute(c, Some(Operation::Stationary)),
        Command::Hitting(c) => execute(c, Some(Operation::Hitting)),
        Command::Zerocost(c) => execute(c, Some(Operation::Zerocost)),
        Command::Cda(c) => execute(c, Some(Operation::Cda)),
        Command::Compare(c) => execute(c, Some(Operation::Compare)),
        Command::Validate(c) => execute(c, Some(Operation::Validate)),
        Command::CoverageGen(a) => coverage_gen(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
