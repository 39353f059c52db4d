//! Fixed-policy validation of candidate paths.
//!
//! Committing the robot to a path turns the environment MDP into a Markov
//! chain: one transient state per path position, each with an advance / stay
//! / dead branch, plus absorbing `done` and `dead` states. Its probability of
//! eventually reaching `done` is what the distance path and the probability
//! path are compared on.

use std::fmt::Write as _;

use rand::Rng;

use crate::env::{EdgeModel, Graph, NodeId, OutcomeProbs};
use crate::human::HeatedGraph;
use crate::planner::{max_success_path, shortest_distance_path, Path, PlanError};
use crate::scalar::Scalar;

/// Markov chain induced by following one path under a fixed policy.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPolicyChain<T> {
    nodes: Vec<NodeId>,
    steps: Vec<OutcomeProbs<T>>,
}

impl<T: Scalar> FixedPolicyChain<T> {
    /// Chain over the given per-step outcome distributions. `nodes` must be
    /// one longer than `steps`.
    pub fn from_steps(nodes: Vec<NodeId>, steps: Vec<OutcomeProbs<T>>) -> Self {
        assert_eq!(nodes.len(), steps.len() + 1, "one node per state plus the final node");
        Self { nodes, steps }
    }

    pub fn path_nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn steps(&self) -> &[OutcomeProbs<T>] {
        &self.steps
    }

    pub fn transient_count(&self) -> usize {
        self.steps.len()
    }

    pub fn state_count(&self) -> usize {
        self.steps.len() + 2
    }

    pub fn done_state(&self) -> usize {
        self.steps.len()
    }

    pub fn dead_state(&self) -> usize {
        self.steps.len() + 1
    }

    /// Outgoing `(target, probability)` pairs of `state`, zero branches omitted.
    pub fn transitions(&self, state: usize) -> Vec<(usize, T)> {
        if state >= self.steps.len() {
            return vec![(state, T::one())];
        }
        let p = &self.steps[state];
        [(state + 1, p.success()), (state, p.retry()), (self.dead_state(), p.fail())]
            .into_iter()
            .filter(|&(_, w)| w > T::zero())
            .collect()
    }
}

/// Builds the fixed-policy chain of `path` over `model`.
pub fn build_chain<T: Scalar, M: EdgeModel<T>>(model: &M, path: &Path<T>) -> Result<FixedPolicyChain<T>, PlanError> {
    build_chain_from_nodes(model, path.nodes())
}

pub fn build_chain_from_nodes<T: Scalar, M: EdgeModel<T>>(
    model: &M,
    nodes: &[NodeId],
) -> Result<FixedPolicyChain<T>, PlanError> {
    let g = model.graph();
    let first = *nodes.first().ok_or(PlanError::EmptyPath)?;
    g.check_node(first)?;
    let mut steps = Vec::with_capacity(nodes.len().saturating_sub(1));
    for w in nodes.windows(2) {
        g.check_node(w[1])?;
        let e = g
            .edge_between(w[0], w[1])
            .ok_or(PlanError::MissingEdge { a: w[0], b: w[1] })?;
        steps.push(model.outcome(e));
    }
    Ok(FixedPolicyChain {
        nodes: nodes.to_vec(),
        steps,
    })
}

/// Closed form of the absorption probability: `Π effective_success`.
pub fn closed_form_probability<T: Scalar>(chain: &FixedPolicyChain<T>) -> T {
    chain.steps.iter().map(|p| p.effective_success()).fold(T::one(), |acc, x| acc * x)
}

/// Absorption probability into `done` from the initial state, by solving
/// `(I - Q) x = r` over the transient states with Gaussian elimination.
pub fn linear_solve_probability<T: Scalar>(chain: &FixedPolicyChain<T>) -> T {
    let n = chain.transient_count();
    if n == 0 {
        return T::one();
    }
    let done = chain.done_state();
    // augmented matrix [I - Q | r]
    let mut a = vec![vec![T::zero(); n + 1]; n];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = T::one();
        for (j, p) in chain.transitions(i) {
            if j < n {
                row[j] = row[j] - p;
            } else if j == done {
                row[n] = row[n] + p;
            }
        }
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).expect("finite"))
            .expect("non-empty range");
        a.swap(col, pivot);
        let p = a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] / p;
            if factor == T::zero() {
                continue;
            }
            let (upper, lower) = a.split_at_mut(row);
            for (x, &y) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x = *x - factor * y;
            }
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut acc = a[i][n];
        for j in i + 1..n {
            acc = acc - a[i][j] * x[j];
        }
        x[i] = acc / a[i][i];
    }
    x[0]
}

/// Probability of eventually reaching `done`.
///
/// Computes both the closed form and the linear-system solution, asserts they
/// agree, and returns the closed form.
pub fn evaluate_chain<T: Scalar>(chain: &FixedPolicyChain<T>) -> T {
    let closed = closed_form_probability(chain);
    let solved = linear_solve_probability(chain);
    let tol = T::tolerance() * T::lit((chain.transient_count() + 1) as f64);
    assert!(
        (closed - solved).abs() <= tol,
        "closed form {closed} and linear solve {solved} disagree"
    );
    closed
}

/// Samples the chain `trials` times and counts absorptions into `done`.
pub fn simulate_chain<T: Scalar, R: Rng + ?Sized>(chain: &FixedPolicyChain<T>, trials: u64, rng: &mut R) -> u64 {
    let mut successes = 0;
    'trial: for _ in 0..trials {
        for p in &chain.steps {
            let (s, r) = (p.success().as_f64(), p.retry().as_f64());
            loop {
                let x: f64 = rng.gen();
                if x < s {
                    break;
                } else if x < s + r {
                    continue;
                } else {
                    continue 'trial;
                }
            }
        }
        successes += 1;
    }
    successes
}

/// A PRISM model of a fixed-policy chain and its reachability property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrismExport {
    pub model: String,
    pub properties: String,
}

/// Property checked against every exported model.
pub const PRISM_PROPERTY: &str = "Pmax=? [ F (\"end\" & state=final) ]";

/// Renders the chain as a single-module PRISM `mdp` with an integer `state`
/// variable. Output is byte-stable for identical chains and labels.
pub fn export_prism<T: Scalar>(chain: &FixedPolicyChain<T>, path_label: &str) -> PrismExport {
    let n = chain.transient_count();
    let done = chain.done_state();
    let dead = chain.dead_state();
    let label: String = path_label.chars().map(|c| if c.is_control() { ' ' } else { c }).collect();
    let path: Vec<String> = chain.nodes.iter().map(|n| n.to_string()).collect();

    let mut m = String::new();
    writeln!(m, "// fixed-policy path model: {label}").unwrap();
    writeln!(m, "// path: {}", path.join(" ")).unwrap();
    writeln!(m, "// {n} path states, {done} = done, {dead} = dead").unwrap();
    writeln!(m).unwrap();
    writeln!(m, "mdp").unwrap();
    writeln!(m).unwrap();
    writeln!(m, "const int final = {done};").unwrap();
    writeln!(m).unwrap();
    writeln!(m, "module robot").unwrap();
    writeln!(m, "  state : [0..{dead}] init 0;").unwrap();
    writeln!(m).unwrap();
    for i in 0..n {
        let branches: Vec<String> = chain
            .transitions(i)
            .into_iter()
            .map(|(j, p)| format!("{} : (state'={j})", p.as_f64()))
            .collect();
        writeln!(
            m,
            "  // {} -> {}\n  [] state={i} -> {};",
            chain.nodes[i],
            chain.nodes[i + 1],
            branches.join(" + ")
        )
        .unwrap();
    }
    writeln!(m, "  [] state={done} -> 1 : (state'={done});").unwrap();
    writeln!(m, "  [] state={dead} -> 1 : (state'={dead});").unwrap();
    writeln!(m, "endmodule").unwrap();
    writeln!(m).unwrap();
    writeln!(m, "label \"end\" = state={done};").unwrap();

    PrismExport {
        model: m,
        properties: format!("{PRISM_PROPERTY}\n"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathChoice {
    Distance,
    Probability,
}

/// `Distance` only when it is strictly more likely to succeed.
pub fn choose<T: Scalar>(r_dist: T, r_prob: T) -> PathChoice {
    if r_dist > r_prob {
        PathChoice::Distance
    } else {
        PathChoice::Probability
    }
}

/// Returns `dist` iff `r_dist > r_prob`, otherwise `prob`.
pub fn select_path<T: Scalar>(dist: Path<T>, prob: Path<T>, r_dist: T, r_prob: T) -> Path<T> {
    match choose(r_dist, r_prob) {
        PathChoice::Distance => dist,
        PathChoice::Probability => prob,
    }
}

/// Both candidate paths, their validated success probabilities and the winner.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedPath<T> {
    pub distance_path: Path<T>,
    pub probability_path: Path<T>,
    pub r_dist: T,
    pub r_prob: T,
    pub choice: PathChoice,
}

impl<T: Scalar> ValidatedPath<T> {
    pub fn selected(&self) -> &Path<T> {
        match self.choice {
            PathChoice::Distance => &self.distance_path,
            PathChoice::Probability => &self.probability_path,
        }
    }

    pub fn selected_probability(&self) -> T {
        match self.choice {
            PathChoice::Distance => self.r_dist,
            PathChoice::Probability => self.r_prob,
        }
    }

    pub fn into_selected(self) -> Path<T> {
        select_path(self.distance_path, self.probability_path, self.r_dist, self.r_prob)
    }
}

/// Finds, validates and selects a path on `model`.
pub fn validate_paths<T: Scalar, M: EdgeModel<T>>(
    model: &M,
    start: NodeId,
    goal: NodeId,
) -> Result<ValidatedPath<T>, PlanError> {
    let distance_path = shortest_distance_path(model, start, goal)?;
    let probability_path = max_success_path(model, start, goal)?;
    let r_dist = evaluate_chain(&build_chain(model, &distance_path)?);
    let r_prob = if probability_path.nodes() == distance_path.nodes() {
        r_dist
    } else {
        evaluate_chain(&build_chain(model, &probability_path)?)
    };
    Ok(ValidatedPath {
        choice: choose(r_dist, r_prob),
        distance_path,
        probability_path,
        r_dist,
        r_prob,
    })
}

/// Full path finding, validation and selection. When `heated` is given, every
/// stage runs against it instead of `g`.
pub fn plan_validated_path<T: Scalar>(
    g: &Graph<T>,
    start: NodeId,
    goal: NodeId,
    heated: Option<&HeatedGraph<'_, T>>,
) -> Result<ValidatedPath<T>, PlanError> {
    match heated {
        Some(h) => validate_paths(h, start, goal),
        None => validate_paths(g, start, goal),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{default_environment, default_risk_table, Edge, RiskClass};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn probs(s: f64, r: f64, f: f64) -> OutcomeProbs<f64> {
        OutcomeProbs::from_triple(s, r, f).unwrap()
    }

    fn two_edge_chain() -> FixedPolicyChain<f64> {
        FixedPolicyChain::from_steps(
            vec![NodeId(0), NodeId(1), NodeId(2)],
            vec![probs(0.90, 0.05, 0.05), probs(0.90, 0.05, 0.05)],
        )
    }

    #[test]
    fn single_node_chain_is_done() {
        let g = default_environment::<f64>();
        let c = build_chain(&g, &Path::trivial(NodeId(5))).unwrap();
        assert_eq!(c.transient_count(), 0);
        assert_eq!(c.done_state(), 0);
        assert_eq!(evaluate_chain(&c), 1.0);
        assert_eq!(linear_solve_probability(&c), 1.0);
    }

    #[test]
    fn high_edge_branches() {
        let g = Graph::<f64>::new(3, default_risk_table(), vec![Edge::new(0, 1, 1.0, RiskClass::High), Edge::new(1, 2, 1.0, RiskClass::Low)]).unwrap();
        let p = Path::from_nodes(&g, vec![NodeId(0), NodeId(1)]).unwrap();
        let c = build_chain(&g, &p).unwrap();
        assert_eq!(c.transient_count(), 1);
        let t = c.transitions(0);
        assert_eq!(t[0], (1, 0.95));
        assert_eq!(t[1], (0, 0.045));
        assert_eq!(t[2].0, 2);
        assert!((t[2].1 - 0.005).abs() < 1e-15);
        for s in 0..c.state_count() {
            let sum: f64 = c.transitions(s).iter().map(|x| x.1).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }

        let p3 = Path::from_nodes(&g, vec![NodeId(0), NodeId(1), NodeId(2)]).unwrap();
        let c3 = build_chain(&g, &p3).unwrap();
        assert_eq!(c3.transient_count(), 2);
        assert_eq!(c3.transitions(0)[0].0, 1);
        assert_eq!(c3.transitions(1)[0].0, c3.done_state());
        assert_eq!(c3.transitions(c3.done_state()), vec![(2, 1.0)]);
        assert_eq!(c3.transitions(c3.dead_state()), vec![(3, 1.0)]);

        assert!(matches!(
            build_chain_from_nodes(&g, &[NodeId(0), NodeId(2)]),
            Err(PlanError::MissingEdge { .. })
        ));
    }

    #[test]
    fn two_edge_value() {
        let c = two_edge_chain();
        let v = evaluate_chain(&c);
        assert!((v - (0.9f64 / 0.95).powi(2)).abs() < 1e-15);
        assert!((v - 0.897_506_925_207_756_2).abs() < 1e-12);
        assert!((linear_solve_probability(&c) - v).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_agrees() {
        let c = two_edge_chain();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 100_000;
        let hits = simulate_chain(&c, trials, &mut rng) as f64;
        let p = evaluate_chain(&c);
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((hits / trials as f64 - p).abs() < 3.0 * se);
    }

    #[test]
    fn prism_export_is_stable() {
        let c = two_edge_chain();
        let a = export_prism(&c, "two edges");
        let b = export_prism(&c, "two edges");
        assert_eq!(a, b);
        assert!(a.model.contains("\nmdp\n"));
        assert!(a.model.contains("module robot"));
        assert!(a.model.contains("state : [0..3] init 0;"));
        assert!(a.model.contains("[] state=0 -> 0.9 : (state'=1) + 0.05 : (state'=0)"));
        assert!(a.model.contains("label \"end\" = state=2;"));
        assert!(a.model.contains("const int final = 2;"));
        assert_eq!(a.properties, "Pmax=? [ F (\"end\" & state=final) ]\n");
        assert_eq!(a.model.matches("endmodule").count(), 1);

        let trivial = FixedPolicyChain::<f64>::from_steps(vec![NodeId(5)], vec![]);
        let t = export_prism(&trivial, "stay");
        assert!(t.model.contains("state : [0..1] init 0;"));
        assert!(t.model.contains("label \"end\" = state=0;"));
    }

    #[test]
    fn selection_branches() {
        let a = Path::<f64>::trivial(NodeId(1));
        let b = Path::<f64>::trivial(NodeId(2));
        assert_eq!(select_path(a.clone(), b.clone(), 0.99, 0.95), a);
        assert_eq!(select_path(a.clone(), b.clone(), 0.95, 0.95), b);
        assert_eq!(select_path(a.clone(), b.clone(), 0.40, 0.96), b);
    }

    #[test]
    fn trivial_validation() {
        let g = default_environment::<f64>();
        let v = plan_validated_path(&g, NodeId(3), NodeId(3), None).unwrap();
        assert_eq!(v.selected().nodes(), &[NodeId(3)]);
        assert_eq!(v.r_dist, 1.0);
        assert_eq!(v.r_prob, 1.0);
        assert_eq!(v.choice, PathChoice::Probability);
    }
}
