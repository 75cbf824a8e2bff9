use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use dqcmap::bench::BenchKind;
use dqcmap::cost::CostParams;
use dqcmap::experiment::{self, ExperimentConfig};
use dqcmap::hardware::{cluster_to_json, gen_topology, load_cluster, ClusterTopology, TopologyKind};
use dqcmap::seed::{derive_seed, SEED_ENV};
use dqcmap::{parse_qasm, serialize_qasm, Circuit, Error};

const EXIT_INVALID: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(name = "dqcmap", version, about = "Pattern-aware qubit mapping for distributed quantum clusters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile one circuit and report the plan against a random-placement baseline.
    Map(RunArgs),
    /// Compare the baseline, L1, L2 and L3 arms on one circuit.
    Ablate(RunArgs),
    /// Recompile under several inter:intra cost ratios.
    SweepRatio {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated inter:intra ratios.
        #[arg(long, value_delimiter = ',', default_value = "5,4,3,2,1")]
        ratios: Vec<f64>,
    },
    /// Write a benchmark circuit as OpenQASM 2.0.
    GenBench {
        #[arg(long)]
        bench: BenchKind,
        #[arg(long)]
        size: usize,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a generated cluster topology as JSON.
    GenTopology {
        #[arg(long = "gen")]
        kind: TopologyKind,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    /// OpenQASM 2.0 input.
    #[arg(long, conflicts_with = "bench", required_unless_present = "bench")]
    circuit: Option<PathBuf>,
    #[arg(long, requires = "size")]
    bench: Option<BenchKind>,
    #[arg(long)]
    size: Option<usize>,

    /// Cluster description (JSON).
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    topology: Option<PathBuf>,
    /// Coupling family for a generated cluster.
    #[arg(long = "gen", requires = "sizes")]
    gen: Option<TopologyKind>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,

    /// JSON file with an optional "costs" block.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,

    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    /// Segment decay rate for the interaction graph.
    #[arg(long)]
    lambda: Option<f64>,

    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    #[arg(long)]
    gamma3: Option<f64>,
    /// Remote and teleport cost as a multiple of a local CNOT.
    #[arg(long)]
    ratio: Option<f64>,

    /// Annealing iterations per segment.
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    cooling_rate: Option<f64>,

    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn read_input(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Param(format!("cannot read {}: {e}", path.display())))
}

fn load_costs(path: &Path) -> Result<CostParams, Error> {
    let v: Value = serde_json::from_str(&read_input(path)?)
        .map_err(|e| Error::Param(format!("{}: {e}", path.display())))?;
    match v.get("costs") {
        None => Ok(CostParams::default()),
        Some(c) => serde_json::from_value(c.clone())
            .map_err(|e| Error::Param(format!("{}: costs: {e}", path.display()))),
    }
}

impl RunArgs {
    fn circuit(&self) -> Result<Circuit, Error> {
        match (&self.circuit, self.bench, self.size) {
            (Some(path), _, _) => parse_qasm(&read_input(path)?),
            (None, Some(kind), Some(size)) => kind.generate(size, derive_seed(self.seed, "bench")),
            _ => Err(Error::Param("need --circuit or --bench with --size".into())),
        }
    }

    fn cluster(&self) -> Result<ClusterTopology, Error> {
        match (&self.topology, self.gen, &self.sizes) {
            (Some(path), _, _) => load_cluster(&read_input(path)?),
            (None, Some(kind), Some(sizes)) => gen_topology(kind, sizes, derive_seed(self.seed, "topology")),
            _ => Err(Error::Param("need --topology or --gen with --sizes".into())),
        }
    }

    fn config(&self) -> Result<ExperimentConfig, Error> {
        let mut cost = match &self.config {
            Some(path) => load_costs(path)?,
            None => CostParams::default(),
        };
        if let Some(r) = self.ratio {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Param(format!("ratio {r} must be positive")));
            }
            cost.set_ratio(r);
        }
        if let Some(g) = self.gamma1 {
            cost.gamma1 = g;
        }
        if let Some(g) = self.gamma2 {
            cost.gamma2 = g;
        }
        if let Some(g) = self.gamma3 {
            cost.gamma3 = g;
        }
        cost.validate()?;
        Ok(ExperimentConfig {
            seed: self.seed,
            window: self.window,
            top_k: self.top_k,
            theta: self.theta,
            decay: self.lambda,
            partitions: None,
            cost,
            t0: self.t0,
            cooling_rate: self.cooling_rate,
            iters_per_segment: self.iters,
        })
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(Error::Io),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, Error> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn map_csv(r: &experiment::Report) -> String {
    let mut s = String::from("segment,from_layer,to_layer,two_qubit_gates,e_inter,e_local,e_move,total,epr_pairs,assignment\n");
    for row in &r.segments {
        let a: Vec<String> = row.assignment.as_slice().iter().map(|p| p.to_string()).collect();
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            row.index,
            row.from_layer,
            row.to_layer,
            row.two_qubit_gates,
            row.cost.e_inter,
            row.cost.e_local,
            row.cost.e_move,
            row.cost.e_total,
            row.cost.epr_pairs,
            a.join(" ")
        ));
    }
    s
}

fn ablate_csv(r: &experiment::AblationReport) -> String {
    let mut s = String::from("arm,n_segments,e_inter,e_local,e_move,total,epr_pairs,reduction\n");
    for a in &r.arms {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            a.arm.label(),
            a.n_segments,
            a.totals.e_inter,
            a.totals.e_local,
            a.totals.e_move,
            a.totals.e_total,
            a.totals.epr_pairs,
            a.reduction
        ));
    }
    s
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Map(args) => {
            let report = experiment::run_map(&args.circuit()?, &args.cluster()?, &args.config()?)?;
            let text = match args.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&report)?,
                Format::Csv => map_csv(&report),
            };
            emit(args.out.as_deref(), &text)
        }
        Command::Ablate(args) => {
            let report = experiment::run_ablate(&args.circuit()?, &args.cluster()?, &args.config()?)?;
            let text = match args.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&report)?,
                Format::Csv => ablate_csv(&report),
            };
            emit(args.out.as_deref(), &text)
        }
        Command::SweepRatio { run, ratios } => {
            let rows = experiment::run_sweep_ratio(&run.circuit()?, &run.cluster()?, &run.config()?, &ratios)?;
            let text = match run.format.unwrap_or(Format::Csv) {
                Format::Csv => experiment::sweep_csv(&rows),
                Format::Json => to_json(&rows)?,
            };
            emit(run.out.as_deref(), &text)
        }
        Command::GenBench { bench, size, seed, out } => {
            let c = bench.generate(size, derive_seed(seed, "bench"))?;
            emit(out.as_deref(), &serialize_qasm(&c))
        }
        Command::GenTopology { kind, sizes, seed, out } => {
            let cluster = gen_topology(kind, &sizes, derive_seed(seed, "topology"))?;
            let mut s = cluster_to_json(&cluster);
            s.push('\n');
            emit(out.as_deref(), &s)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INVALID) } else { ExitCode::SUCCESS };
        }
    };
    // a panic is a bug in the mapper, not bad input
    let outcome = match std::panic::catch_unwind(|| run(cli)) {
        Ok(r) => r,
        Err(_) => return ExitCode::from(EXIT_INTERNAL),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_infeasible() {
                EXIT_INFEASIBLE
            } else if e.is_invalid_input() {
                EXIT_INVALID
            } else {
                EXIT_INTERNAL
            })
        }
    }
}
