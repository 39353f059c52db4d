//! Monte-Carlo mission simulation: single episodes with hold / redirect
//! mechanics, uncertainty sweeps and the CSV summary.
//!
//! One tick:
//! 1. the robot re-plans to its current objective on the heated graph and
//!    either commits to the next edge or holds; a hold that persists for
//!    `redirect_after` ticks and involves the human sends the human to a safe
//!    location;
//! 2. the human steps;
//! 3. a committed traversal resolves (advance / stay / catastrophic) against
//!    the heat at the human's new position.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::env::{EdgeModel, Graph, NodeId};
use crate::human::{apply_heat, build_heat_map, heat_outcome, step_human, HeatError, HeatParams, HumanState};
use crate::planner::{
    plan_tour, shortest_distance_path, LegTable, MissionSpec, OrderingMode, Path, PlanError, StartPosition,
};
use crate::scalar::Scalar;
use crate::verify::validate_paths;

/// Tick budget after which a still-running episode counts as stalled.
pub const DEFAULT_MAX_TICKS: u32 = 2_000;

/// Consecutive hold ticks before the robot asks the human to move.
pub const DEFAULT_REDIRECT_AFTER: u32 = 2;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Heat(#[from] HeatError),
}

#[derive(Clone, Debug)]
pub struct EpisodeConfig<'g, T> {
    pub environment: &'g Graph<T>,
    pub mission: MissionSpec<T>,
    pub heat: HeatParams<T>,
    pub uncertainty: T,
    pub seed: u64,
    pub max_ticks: u32,
    pub redirect_after: u32,
}

impl<'g, T: Scalar> EpisodeConfig<'g, T> {
    pub fn new(environment: &'g Graph<T>, mission: MissionSpec<T>) -> Self {
        Self {
            environment,
            mission,
            heat: HeatParams::default(),
            uncertainty: T::zero(),
            seed: 0,
            max_ticks: DEFAULT_MAX_TICKS,
            redirect_after: DEFAULT_REDIRECT_AFTER,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FailureCause {
    HoldTimeout,
    Catastrophic,
}

impl FailureCause {
    pub fn as_str(&self) -> &'static str {
        match self {
            FailureCause::HoldTimeout => "hold_timeout",
            FailureCause::Catastrophic => "catastrophic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpisodeOutcome {
    pub success: bool,
    pub failure_cause: Option<FailureCause>,
    pub steps: u32,
    pub redirects: u32,
    pub final_robot_node: NodeId,
}

/// Episode runner with the mission's leg table precomputed once; shareable
/// across threads.
pub struct Simulator<'g, T> {
    graph: &'g Graph<T>,
    mission: MissionSpec<T>,
    heat: HeatParams<T>,
    max_ticks: u32,
    redirect_after: u32,
    legs: LegTable<T>,
}

enum Attempt {
    Advance,
    Stay,
    Dead,
}

impl<'g, T: Scalar> Simulator<'g, T> {
    pub fn new(cfg: &EpisodeConfig<'g, T>) -> Result<Self, SimError> {
        let g = cfg.environment;
        cfg.mission.validate(g)?;
        HeatParams::new(cfg.heat.path_heat, cfg.heat.neighbor_heat)?;
        if cfg.max_ticks == 0 {
            return Err(SimError::Config("max_ticks must be positive".into()));
        }
        let legs = LegTable::all_pairs(g);
        let starts: Vec<NodeId> = match cfg.mission.start {
            StartPosition::Node(n) => vec![n],
            StartPosition::Random => g.nodes().collect(),
        };
        for &s in &starts {
            for &t in cfg.mission.tasks.iter().chain(std::iter::once(&cfg.mission.end)) {
                if legs.get(s, t).is_none() {
                    return Err(SimError::Config(format!(
                        "mission node {t} is unreachable from possible start {s}"
                    )));
                }
            }
        }
        Ok(Self {
            graph: g,
            mission: cfg.mission.clone(),
            heat: cfg.heat,
            max_ticks: cfg.max_ticks,
            redirect_after: cfg.redirect_after.max(1),
            legs,
        })
    }

    pub fn graph(&self) -> &'g Graph<T> {
        self.graph
    }

    pub fn mission(&self) -> &MissionSpec<T> {
        &self.mission
    }

    /// Runs one episode. Deterministic in `(uncertainty, seed)`.
    pub fn run(&self, uncertainty: T, seed: u64) -> Result<EpisodeOutcome, SimError> {
        if !(uncertainty >= T::zero() && uncertainty <= T::one()) {
            return Err(SimError::Config(format!("uncertainty {uncertainty} outside [0, 1]")));
        }
        let g = self.graph;
        let m = &self.mission;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut robot = match m.start {
            StartPosition::Node(n) => n,
            StartPosition::Random => NodeId(rng.gen_range(0..g.node_count())),
        };
        let mut human = HumanState::resting(NodeId(rng.gen_range(0..g.node_count())), uncertainty);
        expect_idle_to_stay(&mut human);

        let mut remaining: BTreeSet<NodeId> = m.tasks.clone();
        remaining.remove(&robot);
        let pending: Vec<NodeId> = remaining.iter().copied().collect();
        let plan = plan_tour(&self.legs, robot, &pending, m.end, OrderingMode::Auto)?;
        let mut objectives: VecDeque<NodeId> = plan.ordered_tasks.into();

        let mut hold = 0u32;
        let mut redirected_this_hold = false;
        let mut redirects = 0u32;
        let mut steps = 0u32;

        let finish = |success, cause, steps, redirects, robot| EpisodeOutcome {
            success,
            failure_cause: cause,
            steps,
            redirects,
            final_robot_node: robot,
        };

        loop {
            while let Some(&front) = objectives.front() {
                if front != m.end && !remaining.contains(&front) {
                    objectives.pop_front();
                } else {
                    break;
                }
            }
            let objective = *objectives.front().expect("end node stays queued");
            if objective == m.end && robot == m.end {
                return Ok(finish(true, None, steps, redirects, robot));
            }
            if steps >= self.max_ticks {
                return Ok(finish(false, Some(FailureCause::HoldTimeout), steps, redirects, robot));
            }
            steps += 1;

            let heat = build_heat_map(g, &human, &self.heat);
            let heated = apply_heat(g, &heat);
            let validated = validate_paths(&heated, robot, objective)?;
            let path = validated.selected();
            let next = path.nodes()[1];
            let edge = g.edge_between(robot, next).expect("planned edge exists");

            let blocked = human.position == robot || human.position == next;
            let unsafe_edge = heated.effective_success(edge) < m.threshold;

            if blocked || unsafe_edge {
                hold += 1;
                let involves_human = blocked || heat.get(edge) > T::zero();
                if involves_human && !redirected_this_hold && hold >= self.redirect_after {
                    let mut keep_clear: BTreeSet<NodeId> = path.nodes().iter().copied().collect();
                    keep_clear.extend(remaining.iter().copied());
                    keep_clear.insert(m.end);
                    keep_clear.insert(human.position);
                    if let Some(target) = self.safe_location(human.position, &keep_clear) {
                        if human.goal != Some(target) {
                            human = human.with_goal(g, target)?;
                            redirects += 1;
                        }
                        redirected_this_hold = true;
                    }
                }
                human = self.advance_human(&human, &mut rng);
                if hold >= m.hold_limit {
                    return Ok(finish(false, Some(FailureCause::HoldTimeout), steps, redirects, robot));
                }
                continue;
            }

            hold = 0;
            redirected_this_hold = false;
            human = self.advance_human(&human, &mut rng);

            let during = build_heat_map(g, &human, &self.heat);
            let outcome = heat_outcome(g.outcome(edge), during.get(edge));
            let x: f64 = rng.gen();
            let attempt = if x < outcome.success().as_f64() {
                Attempt::Advance
            } else if x < (outcome.success() + outcome.retry()).as_f64() {
                Attempt::Stay
            } else {
                Attempt::Dead
            };
            match attempt {
                Attempt::Advance => {
                    robot = next;
                    remaining.remove(&robot);
                }
                Attempt::Stay => {}
                Attempt::Dead => {
                    return Ok(finish(false, Some(FailureCause::Catastrophic), steps, redirects, robot));
                }
            }
        }
    }

    fn advance_human(&self, h: &HumanState<T>, rng: &mut ChaCha8Rng) -> HumanState<T> {
        let mut next = step_human(self.graph, h, rng);
        if next.at_goal() {
            next.clear_goal();
        }
        expect_idle_to_stay(&mut next);
        next
    }

    /// Nearest safe location (by walking distance, then id) outside `keep_clear`.
    fn safe_location(&self, from: NodeId, keep_clear: &BTreeSet<NodeId>) -> Option<NodeId> {
        self.mission
            .safe_locations
            .iter()
            .filter(|s| !keep_clear.contains(s))
            .filter_map(|&s| {
                shortest_distance_path(self.graph, from, s)
                    .ok()
                    .map(|p| (p.total_distance(), s))
            })
            .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distance").then(a.1.cmp(&b.1)))
            .map(|(_, s)| s)
    }
}

/// A human without a goal is predicted to stay where it is.
fn expect_idle_to_stay<T: Scalar>(h: &mut HumanState<T>) {
    if h.goal.is_none() {
        h.predicted_path = Some(Path::trivial(h.position));
    }
}

/// Runs a single configured episode.
pub fn run_episode<T: Scalar>(cfg: &EpisodeConfig<'_, T>) -> Result<EpisodeOutcome, SimError> {
    Simulator::new(cfg)?.run(cfg.uncertainty, cfg.seed)
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of episode `index` at sweep level `level`.
pub fn episode_seed(base: u64, level: usize, index: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ level as u64) ^ index as u64)
}

/// Statistics of one uncertainty level.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub uncertainty: f64,
    pub success_percent: f64,
    pub success_count: u64,
    pub fail_count: u64,
    pub total_redirects: u64,
    pub redirect_episode_percent: f64,
    pub max_redirects: u32,
}

impl SweepRow {
    pub fn from_outcomes(uncertainty: f64, outcomes: &[EpisodeOutcome]) -> Self {
        let n = outcomes.len() as f64;
        let success_count = outcomes.iter().filter(|o| o.success).count() as u64;
        let redirected = outcomes.iter().filter(|o| o.redirects > 0).count() as f64;
        Self {
            uncertainty,
            success_percent: 100.0 * success_count as f64 / n,
            success_count,
            fail_count: outcomes.len() as u64 - success_count,
            total_redirects: outcomes.iter().map(|o| o.redirects as u64).sum(),
            redirect_episode_percent: 100.0 * redirected / n,
            max_redirects: outcomes.iter().map(|o| o.redirects).max().unwrap_or(0),
        }
    }

    pub fn episodes(&self) -> u64 {
        self.success_count + self.fail_count
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

/// Levels `0, 0.1, ..., 1.0`.
pub fn default_levels() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// Runs `episodes_per_level` episodes per uncertainty level on `workers`
/// threads. The report depends only on the configuration, the levels and
/// the episode count.
pub fn run_sweep<T: Scalar>(
    base: &EpisodeConfig<'_, T>,
    levels: &[T],
    episodes_per_level: usize,
    workers: usize,
) -> Result<SweepReport, SimError> {
    if episodes_per_level == 0 {
        return Err(SimError::Config("episodes_per_level must be at least 1".into()));
    }
    if let Some(bad) = levels.iter().find(|u| !(**u >= T::zero() && **u <= T::one())) {
        return Err(SimError::Config(format!("uncertainty level {bad} outside [0, 1]")));
    }
    let sim = Simulator::new(base)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SimError::Config(format!("cannot start worker pool: {e}")))?;

    let mut rows = Vec::with_capacity(levels.len());
    for (li, &u) in levels.iter().enumerate() {
        let outcomes: Vec<EpisodeOutcome> = pool.install(|| {
            (0..episodes_per_level)
                .into_par_iter()
                .map(|i| sim.run(u, episode_seed(base.seed, li, i)))
                .collect::<Result<_, _>>()
        })?;
        rows.push(SweepRow::from_outcomes(u.as_f64(), &outcomes));
    }
    Ok(SweepReport { rows })
}

pub const CSV_HEADER: [&str; 7] = [
    "uncertainty",
    "success_pct",
    "success",
    "fail",
    "total_redirects",
    "redirect_pct",
    "max_redirects",
];

fn format_level(u: f64) -> String {
    format!("{}", (u * 1e6).round() / 1e6)
}

/// CSV rendering of a report, one row per level.
pub fn summarize(report: &SweepReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in &report.rows {
        w.write_record([
            format_level(r.uncertainty),
            format!("{:.2}", r.success_percent),
            r.success_count.to_string(),
            r.fail_count.to_string(),
            r.total_redirects.to_string(),
            format!("{:.2}", r.redirect_episode_percent),
            r.max_redirects.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
