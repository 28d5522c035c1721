//! Command-line front end. Each command builds a [`Table`] whose metadata
//! records the canonical command line that regenerates it.
//!
//! Exit codes: 0 success, 2 usage error, 1 domain or computation error.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::cost::{Multiplicity, Prevalence};
use crate::error::PoolError;
use crate::optimizer::{integer_optimum, SearchBounds, DEFAULT_S_MAX};
use crate::output::{Cell, Format, Metadata, Table, TOOL_NAME};
use crate::simulator::{run_simulation, InfectionModel, SimConfig, SimReport};
use crate::sweep::{self, GridKind, GridSpec, SweepRow};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] PoolError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "poolplan", version, about = "Pool sizes, expected costs and protocol simulation for pooled testing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal pool size and expected cost for each k at one prevalence.
    Optimize(OptimizeArgs),
    /// Optima and savings over a grid of prevalences.
    Sweep(SweepArgs),
    /// Monte-Carlo run of the pooling protocol.
    Simulate(SimulateArgs),
    /// Data series for the optimum-size, cost and savings curves (1-4).
    FigureData(FigureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

impl FormatArg {
    fn name(self) -> &'static str {
        match self {
            FormatArg::Csv => "csv",
            FormatArg::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridArg {
    Lin,
    Log,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = DEFAULT_S_MAX)]
    pub s_max: u32,
    #[arg(long)]
    pub practical_cap: Option<u32>,
}

impl BoundsArgs {
    fn bounds(&self) -> SearchBounds {
        SearchBounds {
            s_max: self.s_max,
            practical_cap: self.practical_cap,
            ..SearchBounds::default()
        }
    }

    fn canonical(&self) -> String {
        let mut s = format!(" --s-max {}", self.s_max);
        if let Some(c) = self.practical_cap {
            s += &format!(" --practical-cap {c}");
        }
        s
    }

    fn config(&self) -> serde_json::Value {
        json!({ "s_max": self.s_max, "practical_cap": self.practical_cap })
    }
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = sweep::DEFAULT_P_MIN)]
    pub p_min: f64,
    #[arg(long, default_value_t = sweep::DEFAULT_P_MAX)]
    pub p_max: f64,
    #[arg(long, value_enum, default_value = "log")]
    pub grid: GridArg,
    #[arg(long, default_value_t = sweep::DEFAULT_POINTS)]
    pub points: usize,
}

impl GridArgs {
    fn spec(&self) -> Result<GridSpec, CliError> {
        let spec = GridSpec {
            p_min: self.p_min,
            p_max: self.p_max,
            points: self.points,
            kind: match self.grid {
                GridArg::Lin => GridKind::Lin,
                GridArg::Log => GridKind::Log,
            },
        };
        spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(spec)
    }

    fn canonical(&self) -> String {
        let grid = match self.grid {
            GridArg::Lin => "lin",
            GridArg::Log => "log",
        };
        format!(" --p-min {} --p-max {} --grid {grid} --points {}", self.p_min, self.p_max, self.points)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    /// Prevalence as a decimal probability, e.g. 0.01112.
    #[arg(long)]
    pub p: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub k: Vec<u32>,
    #[command(flatten)]
    pub bounds: BoundsArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub k: Vec<u32>,
    #[command(flatten)]
    pub bounds: BoundsArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("infection").required(true).args(["p", "fixed_positives"])))]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    /// Bernoulli infection with this prevalence.
    #[arg(long)]
    pub p: Option<f64>,
    /// Exactly this many infected patients, placed uniformly at random.
    #[arg(long)]
    pub fixed_positives: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    #[arg(long)]
    pub s: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Probability that an infected pool reads negative.
    #[arg(long, default_value_t = 0.0)]
    pub fn_rate: f64,
    /// Also write one CSV row per trial to this path.
    #[arg(long)]
    pub emit_trials: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    /// 1: optimum s1; 2: optimum s2; 3: costs; 4: savings percent.
    #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
    pub which: u8,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub bounds: BoundsArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// A rendered command result: the main document plus any side files.
#[derive(Debug)]
pub struct Rendered {
    pub body: String,
    pub out: Option<PathBuf>,
    pub side_files: Vec<(PathBuf, String)>,
}

fn join_ks(ks: &[u32]) -> String {
    ks.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

pub fn optimize_table(args: &OptimizeArgs) -> Result<Table, CliError> {
    let p = Prevalence::new(args.p)?;
    let bounds = args.bounds.bounds();
    bounds.validate()?;
    if args.k.is_empty() {
        return Err(CliError::Usage("--k needs at least one value".into()));
    }
    let ks = args.k.iter().map(|&k| Multiplicity::new(k)).collect::<Result<Vec<_>, _>>()?;

    let command = format!(
        "{TOOL_NAME} optimize --p {} --k {}{} --format {}",
        args.p,
        join_ks(&args.k),
        args.bounds.canonical(),
        args.output.format.name()
    );
    let config = json!({ "p": args.p, "k": args.k, "bounds": args.bounds.config() });
    let mut table = Table::new(
        Metadata::new(command, config),
        &[
            "p",
            "k",
            "s_integer",
            "s_continuous",
            "expected_cost",
            "baseline_cost",
            "beneficial",
            "cap_binding",
            "savings_vs_single_percent",
            "savings_vs_individual_percent",
        ],
    );
    let single = integer_optimum(p, Multiplicity::SINGLE, &bounds)?;
    for k in ks {
        let plan = integer_optimum(p, k, &bounds)?;
        table.push(vec![
            plan.p.into(),
            plan.k.into(),
            plan.s_integer.into(),
            plan.s_continuous.into(),
            plan.expected_cost.into(),
            plan.baseline_cost.into(),
            plan.beneficial.into(),
            plan.cap_binding.into(),
            (100.0 * (single.expected_cost - plan.expected_cost) / single.expected_cost).into(),
            (100.0 * (plan.baseline_cost - plan.expected_cost) / plan.baseline_cost).into(),
        ]);
    }
    Ok(table)
}

pub fn sweep_table(args: &SweepArgs) -> Result<Table, CliError> {
    let grid = args.grid.spec()?;
    let bounds = args.bounds.bounds();
    let ks: Vec<u32> = sweep::normalize_ks(&args.k)?.into_iter().map(u32::from).collect();
    let rows = sweep::sweep(&grid, &ks, &bounds)?;

    let command = format!(
        "{TOOL_NAME} sweep{} --k {}{} --format {}",
        args.grid.canonical(),
        join_ks(&args.k),
        args.bounds.canonical(),
        args.output.format.name()
    );
    let config = json!({ "grid": grid, "k": ks, "bounds": args.bounds.config() });
    let mut columns = vec!["p".to_owned()];
    columns.extend(ks.iter().map(|k| format!("s{k}_opt")));
    columns.extend(ks.iter().map(|k| format!("cost_{k}")));
    columns.push("savings_percent".to_owned());
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = Table::new(Metadata::new(command, config), &cols);
    for row in rows {
        let mut cells: Vec<Cell> = vec![row.p.into()];
        cells.extend(row.entries.iter().map(|e| Cell::from(e.s_opt)));
        cells.extend(row.entries.iter().map(|e| Cell::from(e.cost)));
        cells.push(row.savings_percent.into());
        table.push(cells);
    }
    Ok(table)
}

pub fn figure_table(args: &FigureArgs) -> Result<Table, CliError> {
    let grid = args.grid.spec()?;
    let bounds = args.bounds.bounds();
    let rows: Vec<SweepRow> = sweep::sweep(&grid, &[1, 2], &bounds)?;
    let command = format!(
        "{TOOL_NAME} figure-data {}{}{} --format {}",
        args.which,
        args.grid.canonical(),
        args.bounds.canonical(),
        args.output.format.name()
    );
    let config = json!({ "figure": args.which, "grid": grid, "bounds": args.bounds.config() });
    let columns: &[&str] = match args.which {
        1 => &["p", "s1_opt"],
        2 => &["p", "s2_opt"],
        3 => &["p", "cost_1", "cost_2"],
        4 => &["p", "savings_percent"],
        other => return Err(CliError::Usage(format!("unknown figure {other}"))),
    };
    let mut table = Table::new(Metadata::new(command, config), columns);
    for row in rows {
        let (e1, e2) = (row.entry(1).expect("k=1 present"), row.entry(2).expect("k=2 present"));
        let cells = match args.which {
            1 => vec![row.p.into(), e1.s_opt.into()],
            2 => vec![row.p.into(), e2.s_opt.into()],
            3 => vec![row.p.into(), e1.cost.into(), e2.cost.into()],
            _ => vec![row.p.into(), row.savings_percent.into()],
        };
        table.push(cells);
    }
    Ok(table)
}

fn sim_config(args: &SimulateArgs) -> Result<SimConfig, CliError> {
    let infection = match (args.p, args.fixed_positives) {
        (Some(p), None) => InfectionModel::Bernoulli { p: Prevalence::new(p)? },
        (None, Some(m)) => InfectionModel::FixedCount { m },
        _ => return Err(CliError::Usage("exactly one of --p and --fixed-positives is required".into())),
    };
    let config = SimConfig::new(args.n, infection, Multiplicity::new(args.k)?, args.s)
        .trials(args.trials)
        .seed(args.seed)
        .fn_rate(args.fn_rate)
        .keep_trials(args.emit_trials.is_some());
    config.validate()?;
    Ok(config)
}

fn simulate_metadata(args: &SimulateArgs, config: &SimConfig) -> Metadata {
    let infection = match (args.p, args.fixed_positives) {
        (Some(p), _) => format!("--p {p}"),
        (_, Some(m)) => format!("--fixed-positives {m}"),
        _ => unreachable!("validated by sim_config"),
    };
    let command = format!(
        "{TOOL_NAME} simulate --n {} {infection} --k {} --s {} --trials {} --seed {} --fn-rate {} --format {}",
        args.n,
        args.k,
        args.s,
        args.trials,
        args.seed,
        args.fn_rate,
        args.output.format.name()
    );
    let mut cfg = config.clone();
    cfg.keep_trials = false;
    Metadata::new(command, serde_json::to_value(cfg).expect("config serializes"))
}

pub fn simulate_tables(args: &SimulateArgs) -> Result<(Table, Option<Table>), CliError> {
    let config = sim_config(args)?;
    let report: SimReport = run_simulation(&config)?;
    let metadata = simulate_metadata(args, &config);

    let mut table = Table::new(
        metadata.clone(),
        &[
            "n_patients",
            "p",
            "fixed_positives",
            "k",
            "s",
            "trials",
            "seed",
            "fn_rate",
            "mean_tests_per_patient",
            "std_error",
            "mean_total_tests",
            "analytic_cost",
            "excess_over_analytic",
            "sensitivity",
            "total_positives",
            "total_detected",
            "total_missed",
        ],
    );
    table.push(vec![
        args.n.into(),
        args.p.into(),
        args.fixed_positives.into(),
        args.k.into(),
        args.s.into(),
        args.trials.into(),
        args.seed.into(),
        args.fn_rate.into(),
        report.mean_tests_per_patient.into(),
        report.std_error.into(),
        report.mean_total_tests.into(),
        report.analytic_cost.into(),
        report.excess_over_analytic().into(),
        report.empirical_sensitivity.into(),
        report.total_positives.into(),
        report.total_detected.into(),
        report.total_missed.into(),
    ]);

    let trials = report.outcomes.as_ref().map(|outcomes| {
        let mut t = Table::new(
            metadata,
            &[
                "trial_index",
                "pool_tests",
                "individual_retests",
                "total_tests",
                "positives",
                "detected_positives",
                "missed_positives",
                "suspect_negatives",
            ],
        );
        for o in outcomes {
            t.push(vec![
                o.trial_index.into(),
                o.pool_tests.into(),
                o.individual_retests.into(),
                o.total_tests.into(),
                o.positives.into(),
                o.detected_positives.into(),
                o.missed_positives.into(),
                o.suspect_negatives.into(),
            ]);
        }
        t
    });
    Ok((table, trials))
}

pub fn execute(cli: &Cli) -> Result<Rendered, CliError> {
    match &cli.command {
        Command::Optimize(a) => Ok(Rendered {
            body: optimize_table(a)?.render(a.output.format.into()),
            out: a.output.out.clone(),
            side_files: Vec::new(),
        }),
        Command::Sweep(a) => Ok(Rendered {
            body: sweep_table(a)?.render(a.output.format.into()),
            out: a.output.out.clone(),
            side_files: Vec::new(),
        }),
        Command::FigureData(a) => Ok(Rendered {
            body: figure_table(a)?.render(a.output.format.into()),
            out: a.output.out.clone(),
            side_files: Vec::new(),
        }),
        Command::Simulate(a) => {
            let (report, trials) = simulate_tables(a)?;
            let side_files = match (&a.emit_trials, trials) {
                (Some(path), Some(t)) => vec![(path.clone(), t.to_csv())],
                _ => Vec::new(),
            };
            Ok(Rendered {
                body: report.render(a.output.format.into()),
                out: a.output.out.clone(),
                side_files,
            })
        }
    }
}

/// Writes a rendered result to its destinations.
pub fn emit(rendered: &Rendered) -> Result<(), CliError> {
    use std::io::Write;
    for (path, text) in &rendered.side_files {
        std::fs::write(path, text)?;
    }
    match &rendered.out {
        Some(path) => std::fs::write(path, &rendered.body)?,
        None => std::io::stdout().lock().write_all(rendered.body.as_bytes())?,
    }
    Ok(())
}
