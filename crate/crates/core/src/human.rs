//! Human entity model: movement prediction, the uncertainty variable and the
//! heat map that turns the human's expected presence into edge risk.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use thiserror::Error;

use crate::env::{EdgeId, EdgeModel, Graph, NodeId, OutcomeProbs};
use crate::planner::{shortest_distance_path, Path, PlanError};
use crate::scalar::Scalar;

pub const DEFAULT_PATH_HEAT: f64 = 0.35;
pub const DEFAULT_NEIGHBOR_HEAT: f64 = 0.25;

#[derive(Debug, Error, PartialEq)]
pub enum HeatError {
    #[error("{name} must lie in [0, 1), got {value}")]
    OutOfRange { name: &'static str, value: f64 },
}

/// Heat magnitudes applied to predicted-path edges and to edges around the
/// human's current position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatParams<T> {
    pub path_heat: T,
    pub neighbor_heat: T,
}

impl<T: Scalar> HeatParams<T> {
    pub fn new(path_heat: T, neighbor_heat: T) -> Result<Self, HeatError> {
        for (name, v) in [("path_heat", path_heat), ("neighbor_heat", neighbor_heat)] {
            if !(v >= T::zero() && v < T::one()) {
                return Err(HeatError::OutOfRange { name, value: v.as_f64() });
            }
        }
        Ok(Self { path_heat, neighbor_heat })
    }
}

impl<T: Scalar> Default for HeatParams<T> {
    fn default() -> Self {
        Self {
            path_heat: T::lit(DEFAULT_PATH_HEAT),
            neighbor_heat: T::lit(DEFAULT_NEIGHBOR_HEAT),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HumanState<T> {
    pub position: NodeId,
    pub goal: Option<NodeId>,
    /// Per-step probability of diverging from the predicted path.
    pub uncertainty: T,
    pub predicted_path: Option<Path<T>>,
}

impl<T: Scalar> HumanState<T> {
    /// A human with no goal, resting at `position`.
    pub fn resting(position: NodeId, uncertainty: T) -> Self {
        Self {
            position,
            goal: None,
            uncertainty,
            predicted_path: None,
        }
    }

    /// Sets a new goal and predicts the path towards it.
    pub fn with_goal(mut self, g: &Graph<T>, goal: NodeId) -> Result<Self, PlanError> {
        self.goal = Some(goal);
        self.predicted_path = Some(predict_human_path(g, &self)?);
        Ok(self)
    }

    /// Drops the goal and prediction; the human rests where it is.
    pub fn clear_goal(&mut self) {
        self.goal = None;
        self.predicted_path = None;
    }

    pub fn at_goal(&self) -> bool {
        self.goal == Some(self.position)
    }
}

/// The human is assumed to walk the minimum-distance route to its goal.
pub fn predict_human_path<T: Scalar>(g: &Graph<T>, h: &HumanState<T>) -> Result<Path<T>, PlanError> {
    let goal = h.goal.ok_or(PlanError::MissingGoal)?;
    shortest_distance_path(g, h.position, goal)
}

/// Per-edge heat in `[0, 1)`; unlisted edges carry no heat.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HeatMap<T> {
    heat: BTreeMap<EdgeId, T>,
}

impl<T: Scalar> HeatMap<T> {
    pub fn new() -> Self {
        Self { heat: BTreeMap::new() }
    }

    /// Raises the heat of `edge` to at least `value`. Zero is a no-op.
    pub fn raise(&mut self, edge: EdgeId, value: T) {
        if value <= T::zero() {
            return;
        }
        let slot = self.heat.entry(edge).or_insert(value);
        if value > *slot {
            *slot = value;
        }
    }

    pub fn get(&self, edge: EdgeId) -> T {
        self.heat.get(&edge).copied().unwrap_or_else(T::zero)
    }

    pub fn is_empty(&self) -> bool {
        self.heat.is_empty()
    }

    pub fn len(&self) -> usize {
        self.heat.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (EdgeId, T)> + '_ {
        self.heat.iter().map(|(&e, &h)| (e, h))
    }
}

/// Heat from the human's predicted path (every edge touching a path node gets
/// `path_heat`) combined by maximum with uncertainty heat on the edges at the
/// human's position (`neighbor_heat * uncertainty`).
pub fn build_heat_map<T: Scalar>(g: &Graph<T>, h: &HumanState<T>, params: &HeatParams<T>) -> HeatMap<T> {
    let mut map = HeatMap::new();
    if let Some(path) = &h.predicted_path {
        let on_path: BTreeSet<NodeId> = path.nodes().iter().copied().collect();
        for &n in &on_path {
            for &(_, e) in g.adjacent(n) {
                map.raise(e, params.path_heat);
            }
        }
    }
    let local = params.neighbor_heat * h.uncertainty;
    for &(_, e) in g.adjacent(h.position) {
        map.raise(e, local);
    }
    map
}

/// An environment whose heated edges have had success mass moved into
/// catastrophic failure. Shares the base graph.
#[derive(Clone, Debug)]
pub struct HeatedGraph<'g, T> {
    base: &'g Graph<T>,
    overrides: Vec<Option<OutcomeProbs<T>>>,
    heat: HeatMap<T>,
}

impl<'g, T: Scalar> HeatedGraph<'g, T> {
    pub fn base(&self) -> &'g Graph<T> {
        self.base
    }

    pub fn heat(&self) -> &HeatMap<T> {
        &self.heat
    }

    pub fn overrides(&self) -> impl Iterator<Item = (EdgeId, OutcomeProbs<T>)> + '_ {
        self.overrides
            .iter()
            .enumerate()
            .filter_map(|(i, o)| o.map(|p| (EdgeId(i), p)))
    }
}

impl<T: Scalar> EdgeModel<T> for HeatedGraph<'_, T> {
    fn graph(&self) -> &Graph<T> {
        self.base
    }

    fn outcome(&self, edge: EdgeId) -> OutcomeProbs<T> {
        match self.overrides[edge.0] {
            Some(p) => p,
            None => self.base.outcome(edge),
        }
    }
}

/// Heated outcome of one edge: `success' = success * (1 - heat)`, retry
/// unchanged, the removed mass added to failure.
pub fn heat_outcome<T: Scalar>(base: OutcomeProbs<T>, heat: T) -> OutcomeProbs<T> {
    let success = base.success() * (T::one() - heat);
    OutcomeProbs::new(success, base.retry()).expect("heat below one keeps success positive")
}

pub fn apply_heat<'g, T: Scalar>(g: &'g Graph<T>, m: &HeatMap<T>) -> HeatedGraph<'g, T> {
    let mut overrides = vec![None; g.edges().len()];
    for (e, h) in m.iter() {
        overrides[e.0] = Some(heat_outcome(g.outcome(e), h));
    }
    HeatedGraph {
        base: g,
        overrides,
        heat: m.clone(),
    }
}

/// Advances the human one tick. With probability `uncertainty` it moves to a
/// uniformly random neighbor and re-predicts towards its goal; otherwise it
/// takes the next step of its predicted path, or stays put without one.
pub fn step_human<T: Scalar, R: Rng + ?Sized>(g: &Graph<T>, h: &HumanState<T>, rng: &mut R) -> HumanState<T> {
    let mut next = h.clone();
    let x: f64 = rng.gen();
    if x < h.uncertainty.as_f64() {
        let adj = g.adjacent(h.position);
        if !adj.is_empty() {
            next.position = adj[rng.gen_range(0..adj.len())].0;
        }
        next.predicted_path = match h.goal {
            Some(goal) => shortest_distance_path(g, next.position, goal).ok(),
            None => None,
        };
    } else if let Some(path) = &h.predicted_path {
        if path.nodes().len() > 1 {
            next.position = path.nodes()[1];
            let tail = path.nodes()[1..].to_vec();
            next.predicted_path = Some(Path::from_nodes(g, tail).expect("tail of a valid path"));
        }
    }
    next
}
