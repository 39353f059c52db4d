//! Shortest-distance and maximum-success Dijkstra variants, plus
//! single-phase mission task ordering.
//!
//! Path costs are compared on fixed-point integer keys (see [`keys`]) so that
//! summation is exact and associative; ties are then broken
//! deterministically on the lexicographic node sequence.

use std::cmp::{Ordering, Reverse};
use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::iter;

use itertools::Itertools;
use thiserror::Error;

use crate::env::{EdgeId, EdgeModel, EnvError, Graph, NodeId};
use crate::scalar::Scalar;

pub const DEFAULT_THRESHOLD: f64 = 0.9;
pub const DEFAULT_HOLD_LIMIT: u32 = 10;

/// Largest task count ordered by exhaustive permutation search in
/// [`OrderingMode::Auto`].
pub const EXHAUSTIVE_LIMIT: usize = 8;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("no path from {start} to {goal}")]
    NoPath { start: NodeId, goal: NodeId },
    #[error("nodes {a} and {b} are not connected by an edge")]
    MissingEdge { a: NodeId, b: NodeId },
    #[error("a path needs at least one node")]
    EmptyPath,
    #[error("task {task} is unreachable")]
    UnreachableTask { task: NodeId },
    #[error("human has no goal to predict a path towards")]
    MissingGoal,
    #[error("invalid mission: {0}")]
    InvalidMission(String),
}

impl PlanError {
    /// True for "no solution exists" outcomes, as opposed to bad input.
    pub fn is_no_path(&self) -> bool {
        matches!(
            self,
            PlanError::NoPath { .. } | PlanError::UnreachableTask { .. } | PlanError::MissingEdge { .. }
        )
    }
}

/// Fixed-point cost keys used for every path comparison.
pub mod keys {
    use crate::scalar::Scalar;

    const DISTANCE_SCALE: f64 = 4_294_967_296.0; // 2^32
    const LOG_SCALE: f64 = 1_099_511_627_776.0; // 2^40

    /// Additive risk weight of an edge, `-ln(effective_success)`.
    pub fn risk_weight<T: Scalar>(effective_success: T) -> T {
        let w = -effective_success.ln();
        if w > T::zero() {
            w
        } else {
            T::zero()
        }
    }

    /// Quantized distance; at least 1 so every edge strictly lengthens a path.
    pub fn distance_key<T: Scalar>(distance: T) -> u64 {
        ((distance.as_f64() * DISTANCE_SCALE).round() as u64).max(1)
    }

    /// Quantized `-ln(effective_success)`.
    pub fn risk_key<T: Scalar>(effective_success: T) -> u64 {
        (risk_weight(effective_success).as_f64() * LOG_SCALE).round() as u64
    }
}

/// A node sequence with its cached length and success probability.
#[derive(Clone, Debug, PartialEq)]
pub struct Path<T> {
    nodes: Vec<NodeId>,
    total_distance: T,
    success_probability: T,
}

impl<T: Scalar> Path<T> {
    /// The zero-length path `[n]`.
    pub fn trivial(n: NodeId) -> Self {
        Self {
            nodes: vec![n],
            total_distance: T::zero(),
            success_probability: T::one(),
        }
    }

    /// Builds a path over `model`, accumulating distance and
    /// `Π effective_success` in path order.
    pub fn from_nodes<M: EdgeModel<T>>(model: &M, nodes: Vec<NodeId>) -> Result<Self, PlanError> {
        let g = model.graph();
        let first = *nodes.first().ok_or(PlanError::EmptyPath)?;
        g.check_node(first)?;
        let mut total_distance = T::zero();
        let mut success_probability = T::one();
        for (&a, &b) in nodes.iter().tuple_windows() {
            g.check_node(b)?;
            let e = g.edge_between(a, b).ok_or(PlanError::MissingEdge { a, b })?;
            total_distance = total_distance + g.edge(e).distance;
            success_probability = success_probability * model.effective_success(e);
        }
        Ok(Self {
            nodes,
            total_distance,
            success_probability,
        })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn start(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn end(&self) -> NodeId {
        *self.nodes.last().expect("paths are non-empty")
    }

    pub fn total_distance(&self) -> T {
        self.total_distance
    }

    pub fn success_probability(&self) -> T {
        self.success_probability
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.nodes.contains(&n)
    }

    /// Edge ids along the path. Panics if the path is not valid in `g`.
    pub fn edge_ids<'a>(&'a self, g: &'a Graph<T>) -> impl Iterator<Item = EdgeId> + 'a {
        self.nodes
            .iter()
            .tuple_windows()
            .map(move |(&a, &b)| g.edge_between(a, b).expect("path edge exists"))
    }

    /// The same node sequence re-evaluated against another edge model.
    pub fn reevaluate<M: EdgeModel<T>>(&self, model: &M) -> Result<Self, PlanError> {
        Self::from_nodes(model, self.nodes.clone())
    }
}

/// Lexicographic Dijkstra over a two-level integer key; equal keys resolve
/// to the lexicographically smallest node sequence.
fn keyed_dijkstra<T, M, W>(model: &M, start: NodeId, goal: NodeId, weight: W) -> Result<Vec<NodeId>, PlanError>
where
    T: Scalar,
    M: EdgeModel<T>,
    W: Fn(EdgeId) -> (u64, u64),
{
    let g = model.graph();
    g.check_node(start)?;
    g.check_node(goal)?;
    let n = g.node_count();
    let mut best: Vec<Option<(u64, u64)>> = vec![None; n];
    let mut pred: Vec<Option<NodeId>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();

    best[start.0] = Some((0, 0));
    heap.push(Reverse((0u64, 0u64, start.0)));

    while let Some(Reverse((p, s, u))) = heap.pop() {
        if settled[u] || best[u] != Some((p, s)) {
            continue;
        }
        settled[u] = true;
        if u == goal.0 {
            break;
        }
        for &(v, e) in g.adjacent(NodeId(u)) {
            if settled[v.0] {
                continue;
            }
            let (wp, ws) = weight(e);
            let cand = (p.saturating_add(wp), s.saturating_add(ws));
            match best[v.0] {
                Some(cur) if cand > cur => {}
                Some(cur) if cand == cur => {
                    let mut via_u = trace(&pred, start, NodeId(u));
                    via_u.push(v);
                    if via_u < trace(&pred, start, v) {
                        pred[v.0] = Some(NodeId(u));
                    }
                }
                _ => {
                    best[v.0] = Some(cand);
                    pred[v.0] = Some(NodeId(u));
                    heap.push(Reverse((cand.0, cand.1, v.0)));
                }
            }
        }
    }

    if !settled[goal.0] {
        return Err(PlanError::NoPath { start, goal });
    }
    Ok(trace(&pred, start, goal))
}

fn trace(pred: &[Option<NodeId>], start: NodeId, to: NodeId) -> Vec<NodeId> {
    let mut out = vec![to];
    let mut cur = to;
    while cur != start {
        cur = pred[cur.0].expect("predecessor chain reaches start");
        out.push(cur);
    }
    out.reverse();
    out
}

/// Minimum total distance path; equal distances resolve lexicographically.
pub fn shortest_distance_path<T: Scalar, M: EdgeModel<T>>(
    model: &M,
    start: NodeId,
    goal: NodeId,
) -> Result<Path<T>, PlanError> {
    let g = model.graph();
    let nodes = keyed_dijkstra(model, start, goal, |e| (keys::distance_key(g.edge(e).distance), 0))?;
    Path::from_nodes(model, nodes)
}

/// Path maximizing `Π effective_success`, found as a Dijkstra search over
/// `-ln(effective_success)`; ties go to the shorter, then lexicographically
/// smaller path.
pub fn max_success_path<T: Scalar, M: EdgeModel<T>>(
    model: &M,
    start: NodeId,
    goal: NodeId,
) -> Result<Path<T>, PlanError> {
    let g = model.graph();
    let nodes = keyed_dijkstra(model, start, goal, |e| {
        (
            keys::risk_key(model.effective_success(e)),
            keys::distance_key(g.edge(e).distance),
        )
    })?;
    Path::from_nodes(model, nodes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StartPosition {
    Node(NodeId),
    Random,
}

/// A single-phase mission: an un-ordered task set followed by one ordered
/// end node.
#[derive(Clone, Debug, PartialEq)]
pub struct MissionSpec<T> {
    pub start: StartPosition,
    pub tasks: BTreeSet<NodeId>,
    pub end: NodeId,
    pub safe_locations: BTreeSet<NodeId>,
    pub threshold: T,
    pub hold_limit: u32,
}

impl<T: Scalar> MissionSpec<T> {
    pub fn validate(&self, g: &Graph<T>) -> Result<(), PlanError> {
        let invalid = |m: String| Err(PlanError::InvalidMission(m));
        if let StartPosition::Node(n) = self.start {
            g.check_node(n)?;
        }
        for &n in self.tasks.iter().chain(&self.safe_locations).chain(iter::once(&self.end)) {
            g.check_node(n)?;
        }
        if self.tasks.contains(&self.end) {
            return invalid(format!("end node {} must not also be a task", self.end));
        }
        if !(self.threshold > T::zero() && self.threshold <= T::one()) {
            return invalid(format!("threshold {} must lie in (0, 1]", self.threshold));
        }
        if self.hold_limit == 0 {
            return invalid("hold_limit must be at least 1".into());
        }
        Ok(())
    }
}

/// The bundled case-study mission.
pub fn case_study_mission<T: Scalar>(g: &Graph<T>) -> MissionSpec<T> {
    crate::env::load_mission(crate::env::DEFAULT_MISSION_JSON, g).expect("bundled mission is valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderingMode {
    /// Exhaustive up to [`EXHAUSTIVE_LIMIT`] tasks, greedy above.
    Auto,
    Exhaustive,
    Greedy,
}

/// Ordered tasks (ending with the mission end node) and the legs between them.
#[derive(Clone, Debug, PartialEq)]
pub struct MissionPlan<T> {
    pub ordered_tasks: Vec<NodeId>,
    pub legs: Vec<Path<T>>,
    pub plan_probability: T,
    pub plan_distance: T,
}

/// Memoized maximum-success legs between node pairs.
#[derive(Clone, Debug, Default)]
pub struct LegTable<T> {
    legs: HashMap<(NodeId, NodeId), Path<T>>,
}

impl<T: Scalar> LegTable<T> {
    pub fn new() -> Self {
        Self { legs: HashMap::new() }
    }

    /// Every reachable ordered pair of the graph.
    pub fn all_pairs<M: EdgeModel<T>>(model: &M) -> Self {
        let g = model.graph();
        let mut table = Self::new();
        for a in g.nodes() {
            for b in g.nodes() {
                if let Ok(p) = max_success_path(model, a, b) {
                    table.legs.insert((a, b), p);
                }
            }
        }
        table
    }

    /// Fills in every leg needed to tour `tasks` from `from` and finish at `end`.
    pub fn fill<M: EdgeModel<T>>(&mut self, model: &M, from: NodeId, tasks: &[NodeId], end: NodeId) {
        let sources: BTreeSet<NodeId> = iter::once(from).chain(tasks.iter().copied()).collect();
        let targets: BTreeSet<NodeId> = tasks.iter().copied().chain(iter::once(end)).collect();
        for &a in &sources {
            for &b in &targets {
                if let Entry::Vacant(slot) = self.legs.entry((a, b)) {
                    if let Ok(p) = max_success_path(model, a, b) {
                        slot.insert(p);
                    }
                }
            }
        }
    }

    pub fn get(&self, a: NodeId, b: NodeId) -> Option<&Path<T>> {
        self.legs.get(&(a, b))
    }
}

/// Orders `spec.tasks` starting from `from` so that the chained
/// maximum-success legs have the highest overall success probability.
pub fn order_tasks<T: Scalar, M: EdgeModel<T>>(
    model: &M,
    spec: &MissionSpec<T>,
    from: NodeId,
) -> Result<MissionPlan<T>, PlanError> {
    order_tasks_with(model, spec, from, OrderingMode::Auto)
}

pub fn order_tasks_with<T: Scalar, M: EdgeModel<T>>(
    model: &M,
    spec: &MissionSpec<T>,
    from: NodeId,
    mode: OrderingMode,
) -> Result<MissionPlan<T>, PlanError> {
    let g = model.graph();
    g.check_node(from)?;
    let tasks: Vec<NodeId> = spec.tasks.iter().copied().collect();
    let mut table = LegTable::new();
    table.fill(model, from, &tasks, spec.end);
    plan_tour(&table, from, &tasks, spec.end, mode)
}

/// Orders `tasks` using precomputed legs. `tasks` may be in any order.
pub fn plan_tour<T: Scalar>(
    table: &LegTable<T>,
    from: NodeId,
    tasks: &[NodeId],
    end: NodeId,
    mode: OrderingMode,
) -> Result<MissionPlan<T>, PlanError> {
    let mut tasks: Vec<NodeId> = tasks.to_vec();
    tasks.sort_unstable();
    tasks.dedup();
    for &t in &tasks {
        if table.get(from, t).is_none() {
            return Err(PlanError::UnreachableTask { task: t });
        }
    }
    if table.get(from, end).is_none() {
        return Err(PlanError::NoPath { start: from, goal: end });
    }

    let exhaustive = match mode {
        OrderingMode::Exhaustive => true,
        OrderingMode::Greedy => false,
        OrderingMode::Auto => {
            if tasks.len() > EXHAUSTIVE_LIMIT {
                log::warn!(
                    "{} tasks exceed the exhaustive ordering limit of {}; using greedy ordering",
                    tasks.len(),
                    EXHAUSTIVE_LIMIT
                );
            }
            tasks.len() <= EXHAUSTIVE_LIMIT
        }
    };

    let order = if exhaustive {
        exhaustive_order(table, from, &tasks, end)
    } else {
        greedy_order(table, from, &tasks)
    };
    assemble(table, from, order, end)
}

fn score<T: Scalar>(table: &LegTable<T>, from: NodeId, order: &[NodeId], end: NodeId) -> (T, T) {
    let mut prob = T::one();
    let mut dist = T::zero();
    let mut cur = from;
    for &t in order.iter().chain(iter::once(&end)) {
        let leg = table.get(cur, t).expect("leg present");
        prob = prob * leg.success_probability();
        dist = dist + leg.total_distance();
        cur = t;
    }
    (prob, dist)
}

/// Higher probability wins, then shorter distance, then the lexicographically
/// smaller order.
fn better<T: Scalar>(a: (T, T, &[NodeId]), b: (T, T, &[NodeId])) -> bool {
    match a.0.partial_cmp(&b.0) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Less) => false,
        _ => match a.1.partial_cmp(&b.1) {
            Some(Ordering::Less) => true,
            Some(Ordering::Greater) => false,
            _ => a.2 < b.2,
        },
    }
}

fn exhaustive_order<T: Scalar>(table: &LegTable<T>, from: NodeId, tasks: &[NodeId], end: NodeId) -> Vec<NodeId> {
    let mut best: Option<(T, T, Vec<NodeId>)> = None;
    for perm in tasks.iter().copied().permutations(tasks.len()) {
        let (p, d) = score(table, from, &perm, end);
        let improves = match &best {
            None => true,
            Some((bp, bd, border)) => better((p, d, &perm), (*bp, *bd, border)),
        };
        if improves {
            best = Some((p, d, perm));
        }
    }
    best.map(|b| b.2).unwrap_or_default()
}

fn greedy_order<T: Scalar>(table: &LegTable<T>, from: NodeId, tasks: &[NodeId]) -> Vec<NodeId> {
    let mut remaining: Vec<NodeId> = tasks.to_vec();
    let mut order = Vec::with_capacity(tasks.len());
    let mut cur = from;
    while !remaining.is_empty() {
        let mut pick = 0;
        for i in 1..remaining.len() {
            let a = table.get(cur, remaining[i]).expect("leg present");
            let b = table.get(cur, remaining[pick]).expect("leg present");
            let (ka, kb) = ([remaining[i]], [remaining[pick]]);
            if better(
                (a.success_probability(), a.total_distance(), &ka),
                (b.success_probability(), b.total_distance(), &kb),
            ) {
                pick = i;
            }
        }
        cur = remaining.remove(pick);
        order.push(cur);
    }
    order
}

fn assemble<T: Scalar>(table: &LegTable<T>, from: NodeId, order: Vec<NodeId>, end: NodeId) -> Result<MissionPlan<T>, PlanError> {
    let mut ordered_tasks = order;
    ordered_tasks.push(end);
    let mut legs = Vec::with_capacity(ordered_tasks.len());
    let mut cur = from;
    let mut plan_probability = T::one();
    let mut plan_distance = T::zero();
    for &t in &ordered_tasks {
        let leg = table
            .get(cur, t)
            .ok_or(PlanError::UnreachableTask { task: t })?
            .clone();
        plan_probability = plan_probability * leg.success_probability();
        plan_distance = plan_distance + leg.total_distance();
        legs.push(leg);
        cur = t;
    }
    Ok(MissionPlan {
        ordered_tasks,
        legs,
        plan_probability,
        plan_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{default_environment, default_risk_table, Edge, RiskClass};

    fn graph(n: usize, edges: &[(usize, usize, f64, RiskClass)]) -> Graph<f64> {
        Graph::new(
            n,
            default_risk_table(),
            edges.iter().map(|&(a, b, d, r)| Edge::new(a, b, d, r)).collect(),
        )
        .unwrap()
    }

    /// Every simple path from `s` to `t`, by depth-first enumeration.
    fn simple_paths(g: &Graph<f64>, s: NodeId, t: NodeId) -> Vec<Vec<NodeId>> {
        fn go(g: &Graph<f64>, t: NodeId, cur: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
            let u = *cur.last().unwrap();
            if u == t {
                out.push(cur.clone());
                return;
            }
            for &(v, _) in g.adjacent(u) {
                if !cur.contains(&v) {
                    cur.push(v);
                    go(g, t, cur, out);
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(g, t, &mut vec![s], &mut out);
        out
    }

    #[test]
    fn identity_path() {
        let g = default_environment::<f64>();
        let p = shortest_distance_path(&g, NodeId(7), NodeId(7)).unwrap();
        assert_eq!(p.nodes(), &[NodeId(7)]);
        assert_eq!(p.total_distance(), 0.0);
        assert_eq!(p.success_probability(), 1.0);
        let q = max_success_path(&g, NodeId(7), NodeId(7)).unwrap();
        assert_eq!(q, p);
    }

    #[test]
    fn square_with_diagonal() {
        use RiskClass::Low;
        let g = graph(4, &[(0, 1, 1.0, Low), (1, 3, 1.0, Low), (0, 2, 1.0, Low), (2, 3, 1.0, Low), (0, 3, 1.5, Low)]);
        let best = simple_paths(&g, NodeId(0), NodeId(3))
            .into_iter()
            .map(|p| Path::from_nodes(&g, p).unwrap())
            .min_by(|a, b| a.total_distance().partial_cmp(&b.total_distance()).unwrap())
            .unwrap();
        assert_eq!(best.nodes(), &[NodeId(0), NodeId(3)]);
        let p = shortest_distance_path(&g, NodeId(0), NodeId(3)).unwrap();
        assert_eq!(p.nodes(), best.nodes());
        assert_eq!(p.total_distance(), 1.5);
    }

    #[test]
    fn equal_distance_ties_go_lexicographic() {
        use RiskClass::Low;
        let g = graph(4, &[(0, 2, 1.0, Low), (2, 3, 1.0, Low), (0, 1, 1.0, Low), (1, 3, 1.0, Low)]);
        let p = shortest_distance_path(&g, NodeId(0), NodeId(3)).unwrap();
        assert_eq!(p.nodes(), &[NodeId(0), NodeId(1), NodeId(3)]);
        let p = shortest_distance_path(&g, NodeId(3), NodeId(0)).unwrap();
        assert_eq!(p.nodes(), &[NodeId(3), NodeId(1), NodeId(0)]);
    }

    #[test]
    fn disconnected_is_no_path() {
        use RiskClass::Low;
        let g = graph(4, &[(0, 1, 1.0, Low), (2, 3, 1.0, Low)]);
        let err = shortest_distance_path(&g, NodeId(0), NodeId(3)).unwrap_err();
        assert!(matches!(err, PlanError::NoPath { .. }));
        assert!(err.is_no_path());
        assert!(matches!(max_success_path(&g, NodeId(0), NodeId(2)), Err(PlanError::NoPath { .. })));
        assert!(matches!(shortest_distance_path(&g, NodeId(0), NodeId(9)), Err(PlanError::Env(_))));
    }

    #[test]
    fn safe_detour_beats_severe_shortcut() {
        use RiskClass::{Low, Severe};
        // route A: 0-1-5 over two Severe edges; route B: 0-2-3-4-5 over four Low edges
        let g = graph(
            6,
            &[(0, 1, 1.0, Severe), (1, 5, 1.0, Severe), (0, 2, 1.0, Low), (2, 3, 1.0, Low), (3, 4, 1.0, Low), (4, 5, 1.0, Low)],
        );
        let all: Vec<Path<f64>> = simple_paths(&g, NodeId(0), NodeId(5))
            .into_iter()
            .map(|p| Path::from_nodes(&g, p).unwrap())
            .collect();
        let oracle = all
            .iter()
            .max_by(|a, b| a.success_probability().partial_cmp(&b.success_probability()).unwrap())
            .unwrap();
        let p = max_success_path(&g, NodeId(0), NodeId(5)).unwrap();
        assert_eq!(p.nodes(), oracle.nodes());
        assert_eq!(p.nodes(), &[NodeId(0), NodeId(2), NodeId(3), NodeId(4), NodeId(5)]);
        assert!((p.success_probability() - (0.999f64 / 0.9991).powi(4)).abs() < 1e-12);
        assert!((p.success_probability() - 0.9996).abs() < 1e-4);
        let severe = Path::from_nodes(&g, vec![NodeId(0), NodeId(1), NodeId(5)]).unwrap();
        assert!((severe.success_probability() - (0.9f64 / 0.91).powi(2)).abs() < 1e-12);
        assert!((severe.success_probability() - 0.9782).abs() < 1e-4);

        let shortest = shortest_distance_path(&g, NodeId(0), NodeId(5)).unwrap();
        assert_eq!(shortest, severe);
    }

    #[test]
    fn single_high_edge() {
        let g = graph(2, &[(0, 1, 2.0, RiskClass::High)]);
        let p = max_success_path(&g, NodeId(0), NodeId(1)).unwrap();
        assert_eq!(p.nodes(), &[NodeId(0), NodeId(1)]);
        assert!((p.success_probability() - 0.95 / 0.955).abs() < 1e-15);
        assert!((p.success_probability() - 0.99476).abs() < 1e-5);
    }

    #[test]
    fn from_nodes_rejects_gaps() {
        let g = graph(3, &[(0, 1, 1.0, RiskClass::Low)]);
        assert!(matches!(
            Path::from_nodes(&g, vec![NodeId(0), NodeId(2)]),
            Err(PlanError::MissingEdge { .. })
        ));
        assert!(matches!(Path::<f64>::from_nodes(&g, vec![]), Err(PlanError::EmptyPath)));
    }

    fn line_mission(tasks: &[usize], end: usize) -> MissionSpec<f64> {
        MissionSpec {
            start: StartPosition::Node(NodeId(0)),
            tasks: tasks.iter().map(|&t| NodeId(t)).collect(),
            end: NodeId(end),
            safe_locations: BTreeSet::new(),
            threshold: 0.9,
            hold_limit: 10,
        }
    }

    #[test]
    fn empty_task_set_is_single_leg() {
        let g = default_environment::<f64>();
        let spec = MissionSpec {
            tasks: BTreeSet::new(),
            ..case_study_mission(&g)
        };
        let plan = order_tasks(&g, &spec, NodeId(10)).unwrap();
        assert_eq!(plan.ordered_tasks, vec![NodeId(22)]);
        assert_eq!(plan.legs.len(), 1);
        assert_eq!(plan.legs[0].start(), NodeId(10));
        assert_eq!(plan.legs[0].end(), NodeId(22));
    }

    #[test]
    fn line_graph_matches_permutation_oracle() {
        use RiskClass::*;
        let g = graph(5, &[(0, 1, 1.0, Low), (1, 2, 2.0, High), (2, 3, 1.0, Medium), (3, 4, 1.5, Severe)]);
        let spec = line_mission(&[1, 3, 4], 2);
        let plan = order_tasks(&g, &spec, NodeId(0)).unwrap();

        let mut best: Option<(f64, f64, Vec<usize>)> = None;
        for perm in [1usize, 3, 4].into_iter().permutations(3) {
            let mut seq = vec![0];
            seq.extend(&perm);
            seq.push(2);
            let (mut p, mut d) = (1.0, 0.0);
            for w in seq.windows(2) {
                let leg = max_success_path(&g, NodeId(w[0]), NodeId(w[1])).unwrap();
                p *= leg.success_probability();
                d += leg.total_distance();
            }
            let take = match &best {
                None => true,
                Some((bp, bd, bo)) => p > *bp || (p == *bp && (d < *bd || (d == *bd && perm < *bo))),
            };
            if take {
                best = Some((p, d, perm));
            }
        }
        let (bp, bd, bo) = best.unwrap();
        let got: Vec<usize> = plan.ordered_tasks.iter().map(|n| n.0).collect();
        assert_eq!(&got[..3], &bo[..]);
        assert_eq!(plan.plan_probability, bp);
        assert_eq!(plan.plan_distance, bd);
        assert_eq!(plan.legs.len(), 4);
    }

    #[test]
    fn unreachable_task_is_named() {
        use RiskClass::Low;
        let g = graph(5, &[(0, 1, 1.0, Low), (1, 2, 1.0, Low), (3, 4, 1.0, Low)]);
        let spec = line_mission(&[1, 3], 2);
        let err = order_tasks(&g, &spec, NodeId(0)).unwrap_err();
        assert!(matches!(err, PlanError::UnreachableTask { task: NodeId(3) }));
        assert!(err.to_string().contains('3'));
    }

    #[test]
    fn greedy_visits_every_task() {
        let g = default_environment::<f64>();
        let spec = case_study_mission(&g);
        let plan = order_tasks_with(&g, &spec, NodeId(0), OrderingMode::Greedy).unwrap();
        let exhaustive = order_tasks_with(&g, &spec, NodeId(0), OrderingMode::Exhaustive).unwrap();
        assert_eq!(plan.ordered_tasks.len(), 8);
        assert!(exhaustive.plan_probability >= plan.plan_probability);
        let visited: BTreeSet<NodeId> = plan.ordered_tasks[..7].iter().copied().collect();
        assert_eq!(visited, spec.tasks);
    }

    #[test]
    fn case_study_plan_shape() {
        let g = default_environment::<f64>();
        let spec = case_study_mission(&g);
        let plan = order_tasks(&g, &spec, NodeId(10)).unwrap();
        assert_eq!(plan.legs.len(), 8);
        assert_eq!(*plan.ordered_tasks.last().unwrap(), NodeId(22));
        let visited: BTreeSet<NodeId> = plan.ordered_tasks[..7].iter().copied().collect();
        assert_eq!(visited, spec.tasks);
        assert_eq!(plan.legs[0].start(), NodeId(10));
        for (a, b) in plan.legs.iter().tuple_windows() {
            assert_eq!(a.end(), b.start());
        }
        let p: f64 = plan.legs.iter().map(|l| l.success_probability()).product();
        let d: f64 = plan.legs.iter().map(|l| l.total_distance()).sum();
        assert!((p - plan.plan_probability).abs() < 1e-12);
        assert!((d - plan.plan_distance).abs() < 1e-9);
    }

    #[test]
    fn mission_validation() {
        let g = default_environment::<f64>();
        let mut m = case_study_mission(&g);
        assert!(m.validate(&g).is_ok());
        m.threshold = 0.0;
        assert!(m.validate(&g).is_err());
        m.threshold = 0.9;
        m.hold_limit = 0;
        assert!(m.validate(&g).is_err());
        m.hold_limit = 10;
        m.tasks.insert(NodeId(22));
        assert!(m.validate(&g).is_err());
    }
}
