//! The `riskpath` command-line front end.
//!
//! Exit codes: 0 on success, 1 on bad input (unreadable or malformed files,
//! invalid arguments), 2 when the input is fine but has no solution (no path,
//! a node sequence that is not a connected path).

use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use thiserror::Error;

use crate::env::{default_environment, load_environment_file, load_mission_file, Graph, NodeId};
use crate::human::{apply_heat, build_heat_map, HeatParams, HumanState};
use crate::planner::{case_study_mission, MissionSpec, Path, PlanError};
use crate::sim::{
    default_levels, run_sweep, summarize, EpisodeConfig, SimError, Simulator, DEFAULT_MAX_TICKS,
    DEFAULT_REDIRECT_AFTER,
};
use crate::verify::{
    build_chain, closed_form_probability, evaluate_chain, export_prism, linear_solve_probability,
    plan_validated_path, PathChoice,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    NoSolution(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::NoSolution(_) => 2,
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        if e.is_no_path() {
            CliError::NoSolution(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Plan(p) => p.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn io_error(path: &FsPath, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "riskpath", version, about = "Risk-aware path planning and mission simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find, validate and select a path between two nodes.
    Plan(PlanArgs),
    /// Evaluate the success probability of a given node sequence.
    Validate(PathArgs),
    /// Write a PRISM model and property file for a node sequence.
    ExportPrism(ExportArgs),
    /// Run mission episodes at one uncertainty level; one CSV row per episode.
    Simulate(SimArgs),
    /// Run an uncertainty sweep and print the summary CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct EnvArg {
    /// Environment file (defaults to the bundled case-study map).
    #[arg(long)]
    pub env: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub env: EnvArg,
    #[arg(long)]
    pub start: usize,
    #[arg(long)]
    pub goal: usize,
    /// Human position; with --human-goal, plans on the heated map.
    #[arg(long, requires = "human_goal")]
    pub human_start: Option<usize>,
    #[arg(long, requires = "human_start")]
    pub human_goal: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub uncertainty: f64,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub env: EnvArg,
    /// Comma-separated node sequence, e.g. `25,10,11`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub path: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub path: PathArgs,
    /// Output prefix; writes `<out>.nm` and `<out>.props`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub env: EnvArg,
    #[arg(long)]
    pub mission: Option<PathBuf>,
    /// Simulator configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub episodes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = 0.0)]
    pub uncertainty: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated uncertainty levels (default 0, 0.1, ..., 1).
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Also write the CSV to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeatDoc {
    path_heat: Option<f64>,
    neighbor_heat: Option<f64>,
}

/// Simulator configuration file. Relative file paths resolve against the
/// configuration file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    environment: Option<PathBuf>,
    mission: Option<PathBuf>,
    #[serde(default)]
    heat: HeatDoc,
    threshold: Option<f64>,
    hold_limit: Option<u32>,
    redirect_after: Option<u32>,
    max_ticks: Option<u32>,
    levels: Option<Vec<f64>>,
    episodes_per_level: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
}

impl SimConfig {
    pub fn load(path: &FsPath) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        let mut cfg: SimConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(FsPath::new(""));
        for p in [&mut cfg.environment, &mut cfg.mission].into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }
}

fn load_graph(path: Option<&FsPath>) -> Result<Graph<f64>, CliError> {
    match path {
        Some(p) => load_environment_file(p).map_err(|e| match e {
            crate::env::EnvError::Io { .. } => CliError::Input(e.to_string()),
            other => CliError::Input(format!("{}: {other}", p.display())),
        }),
        None => Ok(default_environment()),
    }
}

fn load_mission(path: Option<&FsPath>, g: &Graph<f64>) -> Result<MissionSpec<f64>, CliError> {
    match path {
        Some(p) => load_mission_file(p, g).map_err(|e| match e {
            crate::env::EnvError::Io { .. } => CliError::Input(e.to_string()),
            other => CliError::Input(format!("{}: {other}", p.display())),
        }),
        None => Ok(case_study_mission(g)),
    }
}

fn node_list(path: &[usize]) -> String {
    path.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ")
}

fn fmt_path(p: &Path<f64>) -> String {
    node_list(&p.nodes().iter().map(|n| n.0).collect::<Vec<_>>())
}

fn parse_path(g: &Graph<f64>, nodes: &[usize]) -> Result<Path<f64>, CliError> {
    for &n in nodes {
        g.check_node(NodeId(n)).map_err(|e| CliError::Input(e.to_string()))?;
    }
    Ok(Path::from_nodes(g, nodes.iter().map(|&n| NodeId(n)).collect())?)
}

/// Writes `bytes` to `dest` through a sibling temporary file, so a failed run
/// never leaves a partial file behind.
fn write_atomic(dest: &FsPath, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match dest.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => FsPath::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(dest, e))?;
    tmp.write_all(bytes).map_err(|e| io_error(dest, e))?;
    tmp.persist(dest).map_err(|e| io_error(dest, e.error))?;
    Ok(())
}

fn cmd_plan<W: Write>(a: &PlanArgs, out: &mut W) -> Result<(), CliError> {
    let g = load_graph(a.env.env.as_deref())?;
    let (start, goal) = (NodeId(a.start), NodeId(a.goal));
    for n in [start, goal] {
        g.check_node(n).map_err(|e| CliError::Input(e.to_string()))?;
    }
    if !(0.0..=1.0).contains(&a.uncertainty) {
        return Err(CliError::Input(format!("uncertainty {} outside [0, 1]", a.uncertainty)));
    }
    let human = match (a.human_start, a.human_goal) {
        (Some(hs), Some(hg)) => {
            for n in [hs, hg] {
                g.check_node(NodeId(n)).map_err(|e| CliError::Input(e.to_string()))?;
            }
            Some(HumanState::resting(NodeId(hs), a.uncertainty).with_goal(&g, NodeId(hg))?)
        }
        _ => None,
    };
    let heated = human
        .as_ref()
        .map(|h| apply_heat(&g, &build_heat_map(&g, h, &HeatParams::default())));
    let v = plan_validated_path(&g, start, goal, heated.as_ref())?;

    let w = |e: std::io::Error| CliError::Input(e.to_string());
    if let (Some(h), Some(heated)) = (&human, &heated) {
        let predicted = h.predicted_path.as_ref().expect("goal set");
        writeln!(out, "human path:       {}", fmt_path(predicted)).map_err(w)?;
        writeln!(out, "heated edges:     {}", heated.heat().len()).map_err(w)?;
    }
    writeln!(
        out,
        "distance path:    {}  (distance {:.2}, r_dist {:.6})",
        fmt_path(&v.distance_path),
        v.distance_path.total_distance(),
        v.r_dist
    )
    .map_err(w)?;
    writeln!(
        out,
        "probability path: {}  (distance {:.2}, r_prob {:.6})",
        fmt_path(&v.probability_path),
        v.probability_path.total_distance(),
        v.r_prob
    )
    .map_err(w)?;
    let which = match v.choice {
        PathChoice::Distance => "distance",
        PathChoice::Probability => "probability",
    };
    writeln!(
        out,
        "selected ({which}): {}  (probability {:.6})",
        fmt_path(v.selected()),
        v.selected_probability()
    )
    .map_err(w)?;
    Ok(())
}

fn cmd_validate<W: Write>(a: &PathArgs, out: &mut W) -> Result<(), CliError> {
    let g = load_graph(a.env.env.as_deref())?;
    let path = parse_path(&g, &a.path)?;
    let chain = build_chain(&g, &path)?;
    let w = |e: std::io::Error| CliError::Input(e.to_string());
    writeln!(out, "path:        {}", fmt_path(&path)).map_err(w)?;
    writeln!(out, "distance:    {:.2}", path.total_distance()).map_err(w)?;
    writeln!(out, "closed form: {:.12}", closed_form_probability(&chain)).map_err(w)?;
    writeln!(out, "linear:      {:.12}", linear_solve_probability(&chain)).map_err(w)?;
    Ok(())
}

fn cmd_export<W: Write>(a: &ExportArgs, out: &mut W) -> Result<(), CliError> {
    let g = load_graph(a.path.env.env.as_deref())?;
    let path = parse_path(&g, &a.path.path)?;
    let chain = build_chain(&g, &path)?;
    let export = export_prism(&chain, &fmt_path(&path));
    let mut nm = a.out.clone().into_os_string();
    nm.push(".nm");
    let mut props = a.out.clone().into_os_string();
    props.push(".props");
    let (nm, props) = (PathBuf::from(nm), PathBuf::from(props));
    write_atomic(&nm, export.model.as_bytes())?;
    write_atomic(&props, export.properties.as_bytes())?;
    log::info!("wrote {} and {}", nm.display(), props.display());
    writeln!(out, "{:.12}", evaluate_chain(&chain)).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(())
}

struct Prepared {
    graph: Graph<f64>,
    mission: MissionSpec<f64>,
    cfg: SimConfig,
}

fn prepare(a: &RunArgs) -> Result<Prepared, CliError> {
    let cfg = match &a.config {
        Some(p) => SimConfig::load(p)?,
        None => SimConfig::default(),
    };
    let env_path = a.env.env.clone().or_else(|| cfg.environment.clone());
    let graph = load_graph(env_path.as_deref())?;
    let mission_path = a.mission.clone().or_else(|| cfg.mission.clone());
    let mut mission = load_mission(mission_path.as_deref(), &graph)?;
    if let Some(t) = cfg.threshold {
        mission.threshold = t;
    }
    if let Some(h) = cfg.hold_limit {
        mission.hold_limit = h;
    }
    mission.validate(&graph)?;
    Ok(Prepared { graph, mission, cfg })
}

fn episode_config<'g>(p: &'g Prepared, seed: Option<u64>) -> Result<EpisodeConfig<'g, f64>, CliError> {
    let mut ec = EpisodeConfig::new(&p.graph, p.mission.clone());
    let defaults = HeatParams::<f64>::default();
    ec.heat = HeatParams::new(
        p.cfg.heat.path_heat.unwrap_or(defaults.path_heat),
        p.cfg.heat.neighbor_heat.unwrap_or(defaults.neighbor_heat),
    )
    .map_err(|e| CliError::Input(e.to_string()))?;
    ec.seed = seed.or(p.cfg.seed).unwrap_or(0);
    ec.max_ticks = p.cfg.max_ticks.unwrap_or(DEFAULT_MAX_TICKS);
    ec.redirect_after = p.cfg.redirect_after.unwrap_or(DEFAULT_REDIRECT_AFTER);
    Ok(ec)
}

fn cmd_simulate<W: Write>(a: &SimArgs, out: &mut W) -> Result<(), CliError> {
    let p = prepare(&a.run)?;
    let ec = episode_config(&p, a.run.seed)?;
    let episodes = a.run.episodes.unwrap_or(1);
    let sim = Simulator::new(&ec)?;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::Input(e.to_string());
    w.write_record(["episode", "seed", "success", "failure_cause", "steps", "redirects", "final_node"])
        .map_err(csv_err)?;
    for i in 0..episodes {
        let seed = crate::sim::episode_seed(ec.seed, 0, i);
        let o = sim.run(a.uncertainty, seed)?;
        w.write_record([
            i.to_string(),
            seed.to_string(),
            o.success.to_string(),
            o.failure_cause.map(|c| c.as_str()).unwrap_or("none").to_string(),
            o.steps.to_string(),
            o.redirects.to_string(),
            o.final_robot_node.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(())
}

fn cmd_sweep<W: Write>(a: &SweepArgs, out: &mut W) -> Result<(), CliError> {
    let p = prepare(&a.run)?;
    let ec = episode_config(&p, a.run.seed)?;
    let levels = a
        .levels
        .clone()
        .or_else(|| p.cfg.levels.clone())
        .unwrap_or_else(default_levels);
    let episodes = a.run.episodes.or(p.cfg.episodes_per_level).unwrap_or(1000);
    let workers = a
        .workers
        .or(p.cfg.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    log::info!("sweeping {} levels x {episodes} episodes on {workers} workers", levels.len());
    let report = run_sweep(&ec, &levels, episodes, workers)?;
    let csv = summarize(&report);
    if let Some(dest) = &a.out {
        write_atomic(dest, csv.as_bytes())?;
    }
    out.write_all(csv.as_bytes()).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(())
}

/// Runs a parsed invocation, writing results to `out`.
pub fn run<W: Write>(cli: &Cli, out: &mut W) -> Result<(), CliError> {
    match &cli.command {
        Command::Plan(a) => cmd_plan(a, out),
        Command::Validate(a) => cmd_validate(a, out),
        Command::ExportPrism(a) => cmd_export(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
/// Errors are reported on standard error.
pub fn main_with_args<I, S, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
