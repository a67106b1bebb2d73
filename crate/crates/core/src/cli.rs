//! Command-line front end: `generate`, `solve`, `batch` and `stats`.
//!
//! Exit codes: 0 success, 2 invalid input, 3 infeasible or construction
//! failure, 4 I/O error. `MFL_THREADS` caps the worker pool.

use std::fs;
use std::io::{self, Write};
use std::path::{Path as FsPath, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::experiment::{run_batch, write_csv, ExperimentSpec};
use crate::generator::{generate, max_local_for, DensityClass, FixedClass, GeneratorParams};
use crate::model::{check_feasible, Instance, ModelError};
use crate::stats::{Measure, ResultMatrix, StatReport, StatsError};
use crate::vnd::{solve, ClockKind, SearchError, Variant, VndConfig};

#[derive(Debug, Parser)]
#[command(name = "mfl", version, about = "Multi-level facility location: generate, solve, batch, stats")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random instance.
    Generate(GenerateArgs),
    /// Solve an instance file with one or all variants.
    Solve(SolveArgs),
    /// Run a seeded grid of instances and write a results CSV.
    Batch(BatchArgs),
    /// Rank-based comparison of the columns of a results CSV.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DensityArg {
    Low,
    Medium,
    High,
}

impl From<DensityArg> for DensityClass {
    fn from(d: DensityArg) -> Self {
        match d {
            DensityArg::Low => DensityClass::Low,
            DensityArg::Medium => DensityClass::Medium,
            DensityArg::High => DensityClass::High,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FixedArg {
    Small,
    Medium,
    Large,
}

impl From<FixedArg> for FixedClass {
    fn from(f: FixedArg) -> Self {
        match f {
            FixedArg::Small => FixedClass::Small,
            FixedArg::Medium => FixedClass::Medium,
            FixedArg::Large => FixedClass::Large,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Bvnd,
    Pvnd,
    Cvnd,
    Uvnd,
    All,
}

impl VariantArg {
    fn variants(self) -> Vec<Variant> {
        match self {
            VariantArg::Bvnd => vec![Variant::Bvnd],
            VariantArg::Pvnd => vec![Variant::Pvnd],
            VariantArg::Cvnd => vec![Variant::Cvnd],
            VariantArg::Uvnd => vec![Variant::Uvnd],
            VariantArg::All => Variant::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MeasureArg {
    Ofv,
    Time,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
pub enum ClockArg {
    #[default]
    Wall,
    Evals,
}

impl From<ClockArg> for ClockKind {
    fn from(c: ClockArg) -> Self {
        match c {
            ClockArg::Wall => ClockKind::Wall,
            ClockArg::Evals => ClockKind::Evaluations,
        }
    }
}

#[derive(Debug, Args)]
pub struct SizeArgs {
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(4..=5))]
    pub levels: u8,
    #[arg(long = "R", default_value_t = 2000)]
    pub retailers: usize,
    #[arg(long = "D")]
    pub distribution_centers: Option<usize>,
    #[arg(long = "W")]
    pub warehouses: Option<usize>,
    #[arg(long = "P")]
    pub plants: Option<usize>,
    #[arg(long = "S")]
    pub suppliers: Option<usize>,
}

impl SizeArgs {
    fn params(&self, density: DensityClass, fixed: FixedClass, seed: u64) -> GeneratorParams {
        let mut p = GeneratorParams::new(self.levels, self.retailers, density, fixed, seed);
        if let Some(d) = self.distribution_centers {
            p.distribution_centers = d;
        }
        if let Some(w) = self.warehouses {
            p.warehouses = w;
        }
        if let Some(pl) = self.plants {
            p.plants = pl;
        }
        if let Some(s) = self.suppliers {
            p.suppliers = s;
        }
        p
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub size: SizeArgs,
    #[arg(long, value_enum, default_value = "high")]
    pub density: DensityArg,
    #[arg(long, value_enum, default_value = "large")]
    pub fixed: FixedArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Instance JSON path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance JSON file.
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Multi-start count; defaults to the value for the instance's density class.
    #[arg(long)]
    pub max_local: Option<usize>,
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, value_enum, default_value = "wall")]
    pub clock: ClockArg,
    /// Directory for `<variant>.json` and `<variant>.trace.csv`; summary on stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// JSON experiment description; replaces the grid flags.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[command(flatten)]
    pub size: SizeArgs,
    /// Restrict the grid to one density class.
    #[arg(long, value_enum)]
    pub density: Option<DensityArg>,
    /// Restrict the grid to one fixed-cost class.
    #[arg(long, value_enum)]
    pub fixed: Option<FixedArg>,
    #[arg(long, default_value_t = 3)]
    pub replicates: usize,
    #[arg(long, value_enum, default_value = "all")]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_local: Option<usize>,
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, value_enum, default_value = "wall")]
    pub clock: ClockArg,
    /// Give every variant its own multi-start phase.
    #[arg(long)]
    pub rerun_multistart: bool,
    /// Results CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Results CSV (batch output, or one column per algorithm).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "ofv")]
    pub measure: MeasureArg,
    /// Directory for `stats-<measure>.json` and `stats-<measure>.txt`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::ConstructionFailed { .. } => CliError::Infeasible(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

fn write_output(path: Option<&FsPath>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)?;
        }
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read_file(path: &FsPath) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_instance(path: &FsPath) -> Result<Instance, CliError> {
    Instance::from_json(&read_file(path)?).map_err(|e| match e {
        ModelError::NoFeasiblePath(_) => CliError::Infeasible(e.to_string()),
        other => CliError::Invalid(other.to_string()),
    })
}

fn density(m: &crate::model::Matrix<f64>) -> f64 {
    let s = m.as_slice();
    if s.is_empty() {
        return 0.0;
    }
    s.iter().filter(|&&x| x > 0.0).count() as f64 / s.len() as f64
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let params = args.size.params(args.density.into(), args.fixed.into(), args.seed);
    let inst = generate(&params).map_err(|e| CliError::Invalid(e.to_string()))?;
    write_output(args.out.as_deref(), &inst.to_json())?;
    let mut summary = format!("{} levels, {} retailers", inst.num_levels(), inst.num_retailers());
    for &l in inst.levels() {
        summary.push_str(&format!(
            "\n  {l}: size {} ub {} arc density {:.3}",
            inst.size(l),
            inst.upper_bound(l),
            density(inst.arc_matrix(l))
        ));
    }
    eprintln!("{summary}");
    Ok(())
}

pub fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.instance)?;
    let max_local = match args.max_local {
        Some(m) => m,
        None => inst
            .meta()
            .density_class
            .as_deref()
            .and_then(|c| c.parse::<DensityClass>().ok())
            .map(max_local_for)
            .unwrap_or(max_local_for(DensityClass::Medium)),
    };
    if args.time_limit.is_some_and(|t| !(t >= 0.0 && t.is_finite())) {
        return Err(CliError::Invalid("time limit must be a non-negative number".into()));
    }
    let mut summary = Vec::new();
    for variant in args.variant.variants() {
        let mut config = VndConfig::new(variant, max_local, args.seed);
        config.time_limit = args.time_limit.map(Duration::from_secs_f64);
        config.clock = args.clock.into();
        let (solution, trace) = solve(&inst, &config)?;
        let violations = check_feasible(&inst, &solution);
        if !violations.is_empty() {
            return Err(CliError::Infeasible(format!("{variant}: {violations:?}")));
        }
        let mut result = solution.to_json(&inst);
        result["variant"] = json!(variant.name());
        result["time_to_best"] = json!(trace.time_to_best);
        result["truncated"] = json!(trace.truncated);
        result["moves"] = json!(trace.moves);
        result["evaluations"] = json!(trace.evaluations);
        result["seed"] = json!(args.seed);
        result["max_local"] = json!(max_local);
        if let Some(dir) = &args.out {
            fs::create_dir_all(dir)?;
            let text = serde_json::to_string_pretty(&result).expect("json");
            fs::write(dir.join(format!("{}.json", variant.name())), text + "\n")?;
            fs::write(dir.join(format!("{}.trace.csv", variant.name())), trace.to_csv())?;
        }
        summary.push(json!({
            "variant": variant.name(),
            "objective": solution.objective(),
            "time_to_best": trace.time_to_best,
            "truncated": trace.truncated,
        }));
    }
    println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
    Ok(())
}

pub fn batch_spec(args: &BatchArgs) -> Result<ExperimentSpec, CliError> {
    let spec = match &args.spec {
        Some(path) => serde_json::from_str(&read_file(path)?).map_err(|e| CliError::Invalid(e.to_string()))?,
        None => {
            let base = args.size.params(DensityClass::High, FixedClass::Large, 0);
            let mut spec = ExperimentSpec::grid(&base, args.replicates, args.variant.variants(), args.seed);
            let (d, f) = (args.density.map(DensityClass::from), args.fixed.map(FixedClass::from));
            spec.cells
                .retain(|c| d.is_none_or(|d| c.params.density == d) && f.is_none_or(|f| c.params.fixed == f));
            spec.time_limit = args.time_limit;
            spec.max_local = args.max_local;
            spec.clock = args.clock.into();
            spec.rerun_multistart = args.rerun_multistart;
            spec
        }
    };
    spec.validate().map_err(CliError::Invalid)?;
    Ok(spec)
}

pub fn cmd_batch(args: &BatchArgs) -> Result<(), CliError> {
    let spec = batch_spec(args)?;
    let rows = run_batch(&spec, None);
    let mut buf = Vec::new();
    write_csv(&rows, &spec.variants, &mut buf).map_err(|e| CliError::Io(e.to_string()))?;
    write_output(args.out.as_deref(), &String::from_utf8(buf).expect("utf8"))?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    eprintln!("{} rows, {failed} failed", rows.len());
    Ok(())
}

pub fn cmd_stats(args: &StatsArgs) -> Result<StatReport, CliError> {
    let measure = match args.measure {
        MeasureArg::Ofv => Measure::Ofv,
        MeasureArg::Time => Measure::Time,
    };
    let text = read_file(&args.input)?;
    let matrix = ResultMatrix::from_csv(text.as_bytes(), Some(measure))?;
    let report = StatReport::compute(&matrix);
    let name = match measure {
        Measure::Ofv => "stats-ofv",
        Measure::Time => "stats-time",
    };
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{name}.json")), report.to_json() + "\n")?;
        fs::write(dir.join(format!("{name}.txt")), report.to_string())?;
    }
    print!("{report}");
    Ok(report)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Stats(a) => cmd_stats(a).map(|_| ()),
    }
}

/// Worker count from `MFL_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("MFL_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Invalid(format!("MFL_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = thread_cap().and_then(|cap| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cap {
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(|e| CliError::Io(e.to_string()))?;
        pool.install(|| run(&cli))
    });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mfl: {e}");
            e.exit_code()
        }
    }
}
