//! JSON environment and mission documents.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Edge, EnvError, Graph, NodeId, NodeInfo, OutcomeProbs, RiskClass};
use crate::planner::{MissionSpec, StartPosition};
use crate::scalar::Scalar;

/// Bundled 30-node case-study environment.
pub const DEFAULT_ENVIRONMENT_JSON: &str = include_str!("../../data/default_environment.json");

/// Bundled surveillance mission for the case-study environment.
pub const DEFAULT_MISSION_JSON: &str = include_str!("../../data/case_study_mission.json");

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvironmentDoc {
    nodes: NodesDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    risk_table: Option<BTreeMap<RiskClass, Vec<f64>>>,
    edges: Vec<(usize, usize, f64, RiskClass)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum NodesDoc {
    Count(usize),
    List(Vec<NodeDoc>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    xy: Option<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MissionDoc {
    start: StartDoc,
    tasks: Vec<usize>,
    end: usize,
    #[serde(default)]
    safe_locations: Vec<usize>,
    #[serde(default = "default_threshold")]
    threshold: f64,
    #[serde(default = "default_hold_limit")]
    hold_limit: u32,
}

fn default_threshold() -> f64 {
    crate::planner::DEFAULT_THRESHOLD
}

fn default_hold_limit() -> u32 {
    crate::planner::DEFAULT_HOLD_LIMIT
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum StartDoc {
    Node(usize),
    Marker(String),
}

/// Parses and validates an environment document.
pub fn load_environment<T: Scalar>(source: &str) -> Result<Graph<T>, EnvError> {
    let doc: EnvironmentDoc = serde_json::from_str(source)?;

    let table = match doc.risk_table {
        None => super::default_risk_table(),
        Some(rows) => {
            let mut table = BTreeMap::new();
            for (class, row) in rows {
                let probs = match row.as_slice() {
                    [s, r] => OutcomeProbs::new(T::lit(*s), T::lit(*r)),
                    [s, r, f] => OutcomeProbs::from_triple(T::lit(*s), T::lit(*r), T::lit(*f)),
                    _ => {
                        return Err(EnvError::RiskRowLength {
                            class,
                            len: row.len(),
                        })
                    }
                }
                .map_err(|source| EnvError::BadRiskRow { class, source })?;
                table.insert(class, probs);
            }
            table
        }
    };

    let edges = doc
        .edges
        .into_iter()
        .map(|(a, b, d, class)| Edge::new(a, b, T::lit(d), class))
        .collect();

    match doc.nodes {
        NodesDoc::Count(n) => Graph::new(n, table, edges),
        NodesDoc::List(list) => {
            let info: Vec<NodeInfo> = list
                .into_iter()
                .map(|n| NodeInfo {
                    label: n.label,
                    xy: n.xy,
                })
                .collect();
            Graph::new(info.len(), table, edges)?.with_node_info(info)
        }
    }
}

pub fn load_environment_file<T: Scalar>(path: impl AsRef<Path>) -> Result<Graph<T>, EnvError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| EnvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_environment(&text)
}

/// The bundled case-study environment.
pub fn default_environment<T: Scalar>() -> Graph<T> {
    load_environment(DEFAULT_ENVIRONMENT_JSON).expect("bundled environment is valid")
}

/// Serializes a graph so that `load_environment(save_environment(g)) == g`.
/// The risk table is always written out explicitly.
pub fn save_environment<T: Scalar>(g: &Graph<T>) -> String {
    let has_info = g.nodes.iter().any(|n| n.label.is_some() || n.xy.is_some());
    let nodes = if has_info {
        NodesDoc::List(
            g.nodes
                .iter()
                .map(|n| NodeDoc {
                    label: n.label.clone(),
                    xy: n.xy,
                })
                .collect(),
        )
    } else {
        NodesDoc::Count(g.node_count())
    };
    let risk_table = g
        .risk_table()
        .iter()
        .map(|(class, p)| (*class, vec![p.success().as_f64(), p.retry().as_f64()]))
        .collect();
    let edges = g
        .edges()
        .iter()
        .map(|e| (e.a.0, e.b.0, e.distance.as_f64(), e.risk))
        .collect();
    let doc = EnvironmentDoc {
        nodes,
        risk_table: Some(risk_table),
        edges,
    };
    serde_json::to_string_pretty(&doc).expect("environment serializes")
}

/// Parses a mission document and validates it against `g`.
pub fn load_mission<T: Scalar>(source: &str, g: &Graph<T>) -> Result<MissionSpec<T>, EnvError> {
    let doc: MissionDoc = serde_json::from_str(source)?;
    let start = match doc.start {
        StartDoc::Node(n) => StartPosition::Node(NodeId(n)),
        StartDoc::Marker(m) if m == "random" => StartPosition::Random,
        StartDoc::Marker(m) => {
            return Err(EnvError::Mission(format!(
                "start must be a node id or \"random\", got {m:?}"
            )))
        }
    };
    let spec = MissionSpec {
        start,
        tasks: doc.tasks.into_iter().map(NodeId).collect::<BTreeSet<_>>(),
        end: NodeId(doc.end),
        safe_locations: doc.safe_locations.into_iter().map(NodeId).collect(),
        threshold: T::lit(doc.threshold),
        hold_limit: doc.hold_limit,
    };
    spec.validate(g)
        .map_err(|e| EnvError::Mission(e.to_string()))?;
    Ok(spec)
}

pub fn load_mission_file<T: Scalar>(
    path: impl AsRef<Path>,
    g: &Graph<T>,
) -> Result<MissionSpec<T>, EnvError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| EnvError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_mission(&text, g)
}

pub fn save_mission<T: Scalar>(m: &MissionSpec<T>) -> String {
    let doc = MissionDoc {
        start: match m.start {
            StartPosition::Node(n) => StartDoc::Node(n.0),
            StartPosition::Random => StartDoc::Marker("random".to_string()),
        },
        tasks: m.tasks.iter().map(|n| n.0).collect(),
        end: m.end.0,
        safe_locations: m.safe_locations.iter().map(|n| n.0).collect(),
        threshold: m.threshold.as_f64(),
        hold_limit: m.hold_limit,
    };
    serde_json::to_string_pretty(&doc).expect("mission serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = r#"{
        "nodes": 3,
        "risk_table": { "Low": [0.99, 0.009, 0.001] },
        "edges": [[0, 1, 1.0, "Low"], [1, 2, 2.0, "Low"], [0, 2, 2.5, "Low"]]
    }"#;

    #[test]
    fn triangle_fields() {
        let g: Graph<f64> = load_environment(TRIANGLE).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edges().len(), 3);
        assert!(g.edges().iter().all(|e| e.risk == RiskClass::Low));
        assert_eq!(g.edges()[1], Edge::new(1, 2, 2.0, RiskClass::Low));
        let low = g.class_probs(RiskClass::Low).unwrap();
        assert_eq!(low.success(), 0.99);
        assert_eq!(low.retry(), 0.009);
        assert!((low.fail() - 0.001).abs() < 1e-12);
        assert_eq!(g.risk_table().len(), 1);

        let again: Graph<f64> = load_environment(&save_environment(&g)).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn default_environment_has_thirty_nodes() {
        let g = default_environment::<f64>();
        assert_eq!(g.node_count(), 30);
        for n in g.nodes() {
            for (_, e) in g.neighbors(n).unwrap() {
                assert!(e.touches(n));
            }
        }
        let g32 = default_environment::<f32>();
        assert_eq!(g32.edges().len(), g.edges().len());
    }

    #[test]
    fn rejects_bad_documents() {
        let self_loop = r#"{"nodes": 2, "edges": [[0, 0, 1.0, "Low"]]}"#;
        let err = load_environment::<f64>(self_loop).unwrap_err();
        assert!(err.to_string().contains("self-loop edge"), "{err}");

        let unknown = r#"{"nodes": 2, "edges": [], "colour": "red"}"#;
        let err = load_environment::<f64>(unknown).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");

        let bad_row = r#"{"nodes": 2, "risk_table": {"Low": [0.9, 0.2]}, "edges": []}"#;
        let err = load_environment::<f64>(bad_row).unwrap_err();
        assert!(matches!(err, EnvError::BadRiskRow { class: RiskClass::Low, .. }));

        let bad_triple = r#"{"nodes": 2, "risk_table": {"Low": [0.9, 0.05, 0.01]}, "edges": []}"#;
        assert!(load_environment::<f64>(bad_triple).is_err());

        let undeclared = r#"{"nodes": 2, "risk_table": {"Low": [0.9, 0.05]}, "edges": [[0, 1, 1.0, "High"]]}"#;
        let err = load_environment::<f64>(undeclared).unwrap_err();
        assert!(matches!(err, EnvError::UndeclaredClass { index: 0, class: RiskClass::High }));

        let dangling = r#"{"nodes": 2, "edges": [[0, 7, 1.0, "Low"]]}"#;
        let err = load_environment::<f64>(dangling).unwrap_err();
        assert!(err.to_string().contains("node 7"), "{err}");

        let dup = r#"{"nodes": 2, "edges": [[0, 1, 1.0, "Low"], [1, 0, 1.0, "Low"]]}"#;
        let err = load_environment::<f64>(dup).unwrap_err();
        assert!(err.to_string().contains("duplicate edge"), "{err}");
    }

    #[test]
    fn node_list_form() {
        let doc = r#"{"nodes": [{"label": "door", "xy": [0.0, 1.0]}, {}],
                      "edges": [[0, 1, 3.0, "Medium"]]}"#;
        let g: Graph<f64> = load_environment(doc).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.node_info(NodeId(0)).unwrap().label.as_deref(), Some("door"));
        assert_eq!(g.risk_table().len(), 4);
        let again: Graph<f64> = load_environment(&save_environment(&g)).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn mission_document() {
        let g = default_environment::<f64>();
        let m = load_mission(DEFAULT_MISSION_JSON, &g).unwrap();
        assert_eq!(m.end, NodeId(22));
        assert_eq!(m.tasks.len(), 7);
        assert_eq!(m.threshold, 0.9);
        assert_eq!(m.hold_limit, 10);
        assert_eq!(m.start, StartPosition::Random);
        let again = load_mission(&save_mission(&m), &g).unwrap();
        assert_eq!(again, m);

        let bad = r#"{"start": "somewhere", "tasks": [], "end": 1}"#;
        assert!(load_mission(bad, &g).is_err());
        let end_in_tasks = r#"{"start": 0, "tasks": [1, 2], "end": 2}"#;
        assert!(load_mission(end_in_tasks, &g).is_err());
        let extra = r#"{"start": 0, "tasks": [], "end": 2, "speed": 3}"#;
        assert!(load_mission(extra, &g).is_err());
    }
}
