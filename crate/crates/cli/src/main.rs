//! `artiflow` command-line interface.

mod catalog_cmds;
mod config;
mod flow_cmds;
mod output;
mod query_cmds;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::Config;
use output::fail;

#[derive(Parser, Debug)]
#[command(name = "artiflow", version, about = "Register, optimize, schedule and run dataflows over an artifact catalog")]
pub struct Cli {
    /// Catalog file (overridden by GYP_CATALOG).
    #[arg(long, global = true)]
    pub catalog: Option<PathBuf>,
    /// JSON config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker count for partitioned execution (overridden by GYP_WORKERS).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Register a dataset, model, function or dataflow.
    Register(RegisterArgs),
    /// Manage platforms and bandwidth.
    #[command(subcommand)]
    Platforms(PlatformCmd),
    /// Move a dataset to the next bucket.
    Promote { gid: String, bucket: String },
    /// Print one artifact.
    Show { gid: String },
    /// List artifacts.
    List {
        #[arg(long)]
        kind: Option<String>,
    },
    /// Bind placeholders and parameters of a flow.
    Bind(BindArgs),
    /// Rewrite a flow by rank ordering and filter pushdown.
    Optimize(OptimizeArgs),
    /// Fragment a flow and assign fragments to platforms.
    Schedule(ScheduleArgs),
    /// Execute a scheduled plan.
    Run(RunArgs),
    /// Bind, optimize, schedule and run in one step.
    Pipeline(PipelineArgs),
    /// Datalog over catalog facts.
    #[command(subcommand)]
    Kg(KgCmd),
    /// Provenance export and statistics.
    #[command(subcommand)]
    Prov(ProvCmd),
    /// Model registry queries.
    #[command(subcommand)]
    Models(ModelsCmd),
    /// Classify a model change as a new version or a new model.
    ClassifyChange {
        gid: String,
        /// Comma-separated change flags.
        #[arg(long, value_delimiter = ',')]
        flags: Vec<String>,
    },
    /// Apply the replication policy to recorded accesses.
    Replicate,
    /// Time both executors on the radar cleaning pipeline.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Dataset,
    Model,
    Function,
    Dataflow,
}

#[derive(Args, Debug)]
pub struct RegisterArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Data file, model JSON, function descriptor or flow document.
    #[arg(long)]
    pub file: PathBuf,
    #[arg(long)]
    pub name: Option<String>,
    /// Dataset schema such as "k:int64, v:float64".
    #[arg(long)]
    pub schema: Option<String>,
    #[arg(long)]
    pub platform: Option<String>,
    #[arg(long, default_value = "landing")]
    pub bucket: String,
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long, default_value = "regression")]
    pub task: String,
    #[arg(long, default_value = "local")]
    pub scope: String,
    #[arg(long)]
    pub training_dataset: Option<String>,
    #[arg(long)]
    pub version_of: Option<String>,
    /// Extra metadata as key=value; values that parse as JSON are stored as JSON.
    #[arg(long = "meta")]
    pub meta: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum PlatformCmd {
    Add {
        #[arg(long)]
        id: String,
        #[arg(long, default_value_t = 1)]
        cpus: u32,
        #[arg(long, default_value_t = 0)]
        gpus: u32,
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        #[arg(long)]
        root: PathBuf,
        #[arg(long, value_enum, default_value = "single")]
        executor: Backend,
    },
    List,
    /// Set directed bandwidth in MB/s.
    Bandwidth {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        mbps: f64,
        /// Also set the reverse direction.
        #[arg(long)]
        both: bool,
    },
    /// Load platforms and bandwidth from a registry file.
    Load { file: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Single,
    Partitioned,
}

#[derive(Args, Debug, Clone, Default)]
pub struct BindingArgs {
    /// Placeholder binding as name=GID.
    #[arg(long = "bind")]
    pub bind: Vec<String>,
    /// Parameter value as name=value.
    #[arg(long = "param")]
    pub param: Vec<String>,
}

#[derive(Args, Debug)]
pub struct BindArgs {
    pub flow: PathBuf,
    #[command(flatten)]
    pub binding: BindingArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    pub flow: PathBuf,
    #[command(flatten)]
    pub binding: BindingArgs,
    /// Use selectivity and cost observed in recorded runs.
    #[arg(long)]
    pub stats_from_provenance: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Write the rewrite trace here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScheduleArgs {
    pub flow: PathBuf,
    #[command(flatten)]
    pub binding: BindingArgs,
    /// Registry file merged into the catalog before planning.
    #[arg(long)]
    pub platforms: Option<PathBuf>,
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long)]
    pub stats_from_provenance: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    pub plan: PathBuf,
    /// Run every node on this backend instead of each platform's own.
    #[arg(long, value_enum)]
    pub backend: Option<Backend>,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    pub flow: PathBuf,
    #[command(flatten)]
    pub binding: BindingArgs,
    #[arg(long)]
    pub platforms: Option<PathBuf>,
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long)]
    pub stats_from_provenance: bool,
    #[arg(long, value_enum)]
    pub backend: Option<Backend>,
    /// Also write the scheduled plan.
    #[arg(long)]
    pub plan_out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum KgCmd {
    /// Evaluate the standard rules plus an optional rule file.
    Eval {
        rules: Option<PathBuf>,
        /// Print every fact, not only counts.
        #[arg(long)]
        facts: bool,
    },
    /// Answer a conjunctive query such as "?- is_activity(A).".
    Query {
        query: String,
        #[arg(long)]
        rules: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum ProvCmd {
    /// Export the provenance of an artifact and its upstream closure.
    Export {
        gid: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Observed selectivity and cost of a function.
    Stats { alias: String },
    /// Upstream artifacts of a GID.
    Lineage { gid: String },
}

#[derive(Subcommand, Debug)]
pub enum ModelsCmd {
    /// Rank registered models by metadata similarity.
    Select {
        #[arg(long)]
        task: String,
        #[arg(long)]
        domain: String,
        /// Input schema such as "dbz:float64, elev:float64".
        #[arg(long)]
        schema: String,
        #[arg(short, long, default_value_t = 5)]
        k: usize,
    },
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// File counts as start:end:step.
    #[arg(long, default_value = "10:70:10")]
    pub files: String,
    #[arg(long, default_value_t = 10_000)]
    pub rows: usize,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Write measurements as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn dispatch(cli: Cli) -> anyhow::Result<output::Report> {
    let cfg = Config::resolve(cli.config.as_deref(), cli.catalog.clone(), cli.workers)?;
    match cli.command {
        Command::Register(a) => catalog_cmds::register(&cfg, a),
        Command::Platforms(c) => catalog_cmds::platforms(&cfg, c),
        Command::Promote { gid, bucket } => catalog_cmds::promote(&cfg, &gid, &bucket),
        Command::Show { gid } => catalog_cmds::show(&cfg, &gid),
        Command::List { kind } => catalog_cmds::list(&cfg, kind.as_deref()),
        Command::ClassifyChange { gid, flags } => catalog_cmds::classify_change(&cfg, &gid, &flags),
        Command::Models(ModelsCmd::Select { task, domain, schema, k }) => catalog_cmds::select(&cfg, &task, &domain, &schema, k),
        Command::Replicate => catalog_cmds::replicate(&cfg),
        Command::Bind(a) => flow_cmds::bind_cmd(&cfg, a),
        Command::Optimize(a) => flow_cmds::optimize(&cfg, a),
        Command::Schedule(a) => flow_cmds::schedule_cmd(&cfg, a),
        Command::Run(a) => flow_cmds::run_cmd(&cfg, a),
        Command::Pipeline(a) => flow_cmds::pipeline(&cfg, a),
        Command::Bench(a) => flow_cmds::bench(&cfg, a),
        Command::Kg(c) => query_cmds::kg(&cfg, c),
        Command::Prov(c) => query_cmds::prov(&cfg, c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let as_json = cli.json;
    match dispatch(cli) {
        Ok(report) => {
            report.print(as_json);
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
