#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use riskpath::env::{default_risk_table, Edge, EdgeModel, Graph, NodeId, OutcomeProbs};
use riskpath::planner::keys;
use riskpath::RiskClass;

pub type EdgeKey = dyn Fn(&Graph<f64>, usize) -> (u64, u64);
pub type Best = Vec<Option<((u64, u64), Vec<NodeId>)>>;

/// Connected graph with 2..=max_nodes nodes: a random spanning tree plus a
/// few extra edges. Distances come from a small set so that ties happen.
pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> Graph<f64> {
    let n = rng.gen_range(2..=max_nodes);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut pairs = Vec::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        pairs.push((order[i].min(order[j]), order[i].max(order[j])));
    }
    for _ in 0..rng.gen_range(0..=n) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let p = (a.min(b), a.max(b));
        if a != b && !pairs.contains(&p) {
            pairs.push(p);
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(a, b)| {
            let d = [1.0, 1.5, 2.0, 3.0][rng.gen_range(0..4)];
            Edge::new(a, b, d, RiskClass::ALL[rng.gen_range(0..4)])
        })
        .collect();
    Graph::new(n, default_risk_table(), edges).expect("generated graph is valid")
}

/// Like [`random_graph`], with a random risk table.
pub fn random_table_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> Graph<f64> {
    let base = random_graph(rng, max_nodes);
    let table: BTreeMap<RiskClass, OutcomeProbs<f64>> = RiskClass::ALL
        .iter()
        .map(|&c| {
            let s: f64 = rng.gen_range(0.5..1.0);
            let r: f64 = rng.gen_range(0.0..(1.0 - s));
            (c, OutcomeProbs::new(s, r).unwrap())
        })
        .collect();
    Graph::new(base.node_count(), table, base.edges().to_vec()).unwrap()
}

/// Random simple path obtained by a self-avoiding walk of at most `max_edges`.
pub fn random_walk<R: Rng>(rng: &mut R, g: &Graph<f64>, max_edges: usize) -> Vec<NodeId> {
    let mut path = vec![NodeId(rng.gen_range(0..g.node_count()))];
    for _ in 0..max_edges {
        let here = *path.last().unwrap();
        let options: Vec<NodeId> = g
            .adjacent(here)
            .iter()
            .map(|&(n, _)| n)
            .filter(|n| !path.contains(n))
            .collect();
        match options.choose(rng) {
            Some(&n) => path.push(n),
            None => break,
        }
    }
    path
}

/// Cost of a node sequence under a per-edge key.
pub fn path_key(g: &Graph<f64>, nodes: &[NodeId], key: &EdgeKey) -> (u64, u64) {
    nodes.windows(2).fold((0, 0), |acc, w| {
        let e = g.edge_between(w[0], w[1]).unwrap();
        let k = key(g, e.0);
        (acc.0 + k.0, acc.1 + k.1)
    })
}

pub fn distance_key(g: &Graph<f64>, e: usize) -> (u64, u64) {
    (keys::distance_key(g.edges()[e].distance), 0)
}

pub fn risk_key(g: &Graph<f64>, e: usize) -> (u64, u64) {
    let edge = riskpath::EdgeId(e);
    (
        keys::risk_key(g.outcome(edge).effective_success()),
        keys::distance_key(g.edges()[e].distance),
    )
}

/// Brute force: the best simple path from `start` to every node, by
/// (key, node sequence). `None` for unreachable nodes.
pub fn brute_force(
    g: &Graph<f64>,
    start: NodeId,
    key: &EdgeKey,
) -> Best {
    let mut best: Best = vec![None; g.node_count()];
    let mut stack = vec![start];
    fn dfs(
        g: &Graph<f64>,
        stack: &mut Vec<NodeId>,
        cost: (u64, u64),
        key: &EdgeKey,
        best: &mut Best,
    ) {
        let here = *stack.last().unwrap();
        let cand = (cost, stack.clone());
        match &best[here.0] {
            Some(cur) if *cur <= cand => {}
            _ => best[here.0] = Some(cand),
        }
        for &(n, e) in g.adjacent(here) {
            if stack.contains(&n) {
                continue;
            }
            let k = key(g, e.0);
            stack.push(n);
            dfs(g, stack, (cost.0 + k.0, cost.1 + k.1), key, best);
            stack.pop();
        }
    }
    dfs(g, &mut stack, (0, 0), key, &mut best);
    best
}
