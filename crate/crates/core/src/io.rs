//! Network ingestion: whitespace edge lists and a small JSON format.
//!
//! Edge lists carry one edge per line, `u v [c]`, with `#` comments. When
//! every endpoint is a non-negative integer the integers are used as vertex
//! ids directly; otherwise endpoints are treated as labels and numbered in
//! order of first appearance.

use std::collections::{BTreeMap, HashMap};

use serde::Deserialize;

use crate::error::NetworkError;
use crate::network::{Network, VertexId};

pub fn parse_edge_list(text: &str) -> Result<Network, NetworkError> {
    let mut raw: Vec<(String, String, f64)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let parse_err = |message: String| NetworkError::Parse {
            line: line_no,
            message,
        };
        let c = match fields.len() {
            2 => 1.0,
            3 => fields[2]
                .parse::<f64>()
                .map_err(|_| parse_err(format!("bad conductance '{}'", fields[2])))?,
            k => return Err(parse_err(format!("expected 2 or 3 fields, found {k}"))),
        };
        raw.push((fields[0].to_string(), fields[1].to_string(), c));
    }

    let numeric: Option<Vec<(VertexId, VertexId, f64)>> = raw
        .iter()
        .map(|(u, v, c)| Some((u.parse().ok()?, v.parse().ok()?, *c)))
        .collect();
    if let Some(edges) = numeric {
        return Network::from_edges(edges);
    }

    let mut ids: HashMap<String, VertexId> = HashMap::new();
    let mut labels = Vec::new();
    let mut id_of = |name: &str| -> VertexId {
        *ids.entry(name.to_string()).or_insert_with(|| {
            labels.push(name.to_string());
            labels.len() - 1
        })
    };
    let edges: Vec<_> = raw
        .iter()
        .map(|(u, v, c)| (id_of(u), id_of(v), *c))
        .collect();
    let net = Network::with_vertex_count(labels.len(), edges)?;
    net.with_labels(labels)
}

#[derive(Deserialize)]
struct JsonNetwork {
    edges: Vec<JsonEdge>,
    #[serde(default)]
    labels: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonEdge {
    Weighted(VertexId, VertexId, f64),
    Unit(VertexId, VertexId),
}

/// Parses `{"edges": [[u, v, c], ...], "labels": {"0": "name", ...}}`.
pub fn parse_json(text: &str) -> Result<Network, NetworkError> {
    let doc: JsonNetwork = serde_json::from_str(text).map_err(|e| NetworkError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let edges = doc.edges.into_iter().map(|e| match e {
        JsonEdge::Weighted(u, v, c) => (u, v, c),
        JsonEdge::Unit(u, v) => (u, v, 1.0),
    });
    let net = Network::from_edges(edges)?;
    if doc.labels.is_empty() {
        return Ok(net);
    }
    let mut labels: Vec<String> = (0..net.n()).map(|x| x.to_string()).collect();
    for (key, name) in doc.labels {
        let id: VertexId = key.parse().map_err(|_| NetworkError::Parse {
            line: 0,
            message: format!("label key '{key}' is not a vertex id"),
        })?;
        if id >= net.n() {
            return Err(NetworkError::VertexOutOfRange {
                vertex: id,
                n: net.n(),
            });
        }
        labels[id] = name;
    }
    net.with_labels(labels)
}

/// Picks the parser from the file contents: JSON if it starts with `{`.
pub fn parse_network(text: &str) -> Result<Network, NetworkError> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_edge_list(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_edge_list() {
        let net = parse_edge_list("# path\n0 1\n\n1 2 2.5 # heavy\n").unwrap();
        assert_eq!(net.n(), 3);
        assert_eq!(net.edge_conductance(1, 2), 2.5);
        assert!(net.labels().is_none());
    }

    #[test]
    fn labelled_edge_list() {
        let net = parse_edge_list("a b\nb c 3\n").unwrap();
        assert_eq!(net.labels().unwrap(), ["a", "b", "c"]);
        assert_eq!(net.edge_conductance(1, 2), 3.0);
    }

    #[test]
    fn edge_list_errors() {
        assert!(matches!(
            parse_edge_list("0 1\n1 2 x\n"),
            Err(NetworkError::Parse { line: 2, .. })
        ));
        assert_eq!(
            parse_edge_list("0 1\n1 1\n").unwrap_err(),
            NetworkError::SelfLoop(1)
        );
    }

    #[test]
    fn json_network() {
        let net =
            parse_json(r#"{"edges": [[0, 1, 2.0], [1, 2]], "labels": {"2": "end"}}"#).unwrap();
        assert_eq!(net.edge_conductance(0, 1), 2.0);
        assert_eq!(net.edge_conductance(1, 2), 1.0);
        assert_eq!(net.label(2), "end");
        assert_eq!(net.label(0), "0");
        assert!(matches!(parse_json("{"), Err(NetworkError::Parse { .. })));
    }
}
