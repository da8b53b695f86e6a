//! Geometric network generation and interference-graph construction under
//! the primary, K-hop, and PHY-graph models.

use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::graph::{GraphError, InterferenceGraph};
use crate::streams;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("link density must be in (0, 1], got {0}")]
    BadDensity(f64),
    #[error("khop parameter K must be at least 1, got {0}")]
    BadHops(usize),
    #[error("link {link}: transmitter and receiver are the same node")]
    DegenerateLink { link: usize },
    #[error("link {link}: endpoint distance {dist} exceeds the transmission range {range}")]
    LinkOutOfRange { link: usize, dist: f64, range: f64 },
    #[error("node index {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Pairwise interference model used to turn a geometric network into a
/// conflict graph.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InterferenceModel {
    /// Two links conflict iff they share a node.
    Primary,
    /// Two links conflict iff some endpoint of one is within `K * r` of
    /// some endpoint of the other (strict inequality at the threshold).
    KHop { k: usize },
    /// Two links `i`, `j` conflict iff `dist(tx_i, rx_j) < c * l_j` or
    /// `dist(tx_j, rx_i) < c * l_i`, with `c = SNR_t^(1/kappa)`.
    Phy { snr_t: f64, kappa: f64 },
}

/// Nodes in the plane plus directed transmitter-receiver links, every link
/// no longer than the transmission range.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricNetwork {
    nodes: Vec<(f64, f64)>,
    links: Vec<(usize, usize)>,
    tx_range: f64,
}

impl GeometricNetwork {
    pub fn new(
        nodes: Vec<(f64, f64)>,
        links: Vec<(usize, usize)>,
        tx_range: f64,
    ) -> Result<Self, GeometryError> {
        if !(tx_range > 0.0) {
            return Err(GeometryError::NonPositive {
                what: "tx_range",
                value: tx_range,
            });
        }
        for (idx, &(tx, rx)) in links.iter().enumerate() {
            for &v in &[tx, rx] {
                if v >= nodes.len() {
                    return Err(GeometryError::NodeOutOfRange {
                        node: v,
                        n: nodes.len(),
                    });
                }
            }
            if tx == rx {
                return Err(GeometryError::DegenerateLink { link: idx });
            }
            let d = dist(nodes[tx], nodes[rx]);
            if d > tx_range {
                return Err(GeometryError::LinkOutOfRange {
                    link: idx,
                    dist: d,
                    range: tx_range,
                });
            }
        }
        Ok(Self {
            nodes,
            links,
            tx_range,
        })
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn tx_range(&self) -> f64 {
        self.tx_range
    }

    pub fn link_length(&self, link: usize) -> f64 {
        let (tx, rx) = self.links[link];
        dist(self.nodes[tx], self.nodes[rx])
    }

    /// Text form: `node <id> <x> <y>` lines then `link <id> <tx> <rx>`
    /// lines, all ids 1-based. A leading `range <r>` line records the
    /// transmission range; on input it may be omitted, in which case the
    /// range is inferred as the longest link length.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "range {}", self.tx_range);
        for (i, (x, y)) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "node {} {} {}", i + 1, x, y);
        }
        for (i, (tx, rx)) in self.links.iter().enumerate() {
            let _ = writeln!(out, "link {} {} {}", i + 1, tx + 1, rx + 1);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, GeometryError> {
        let mut nodes: Vec<(f64, f64)> = Vec::new();
        let mut links: Vec<(usize, usize)> = Vec::new();
        let mut range: Option<f64> = None;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |msg: String| GeometryError::Parse { line: lineno, msg };
            match fields[0] {
                "range" => {
                    if fields.len() != 2 {
                        return Err(bad("expected `range <r>`".into()));
                    }
                    range = Some(
                        fields[1]
                            .parse()
                            .map_err(|_| bad("malformed range value".into()))?,
                    );
                }
                "node" => {
                    if fields.len() != 4 {
                        return Err(bad("expected `node <id> <x> <y>`".into()));
                    }
                    let id: usize = fields[1]
                        .parse()
                        .map_err(|_| bad("malformed node id".into()))?;
                    if id != nodes.len() + 1 {
                        return Err(bad(format!(
                            "node ids must be contiguous from 1; expected {}",
                            nodes.len() + 1
                        )));
                    }
                    let x: f64 = fields[2]
                        .parse()
                        .map_err(|_| bad("malformed x coordinate".into()))?;
                    let y: f64 = fields[3]
                        .parse()
                        .map_err(|_| bad("malformed y coordinate".into()))?;
                    nodes.push((x, y));
                }
                "link" => {
                    if fields.len() != 4 {
                        return Err(bad("expected `link <id> <tx> <rx>`".into()));
                    }
                    let id: usize = fields[1]
                        .parse()
                        .map_err(|_| bad("malformed link id".into()))?;
                    if id != links.len() + 1 {
                        return Err(bad(format!(
                            "link ids must be contiguous from 1; expected {}",
                            links.len() + 1
                        )));
                    }
                    let tx: usize = fields[2]
                        .parse()
                        .map_err(|_| bad("malformed tx node".into()))?;
                    let rx: usize = fields[3]
                        .parse()
                        .map_err(|_| bad("malformed rx node".into()))?;
                    if tx == 0 || tx > nodes.len() || rx == 0 || rx > nodes.len() {
                        return Err(bad(format!("link endpoint out of range 1..{}", nodes.len())));
                    }
                    links.push((tx - 1, rx - 1));
                }
                other => return Err(bad(format!("unknown directive `{other}`"))),
            }
        }
        let tx_range = match range {
            Some(r) => r,
            None => {
                // No recorded range: take the longest link, which is the
                // tightest value satisfying the link-length invariant.
                let mut r: f64 = 0.0;
                for &(tx, rx) in &links {
                    r = r.max(dist(nodes[tx], nodes[rx]));
                }
                if r == 0.0 {
                    1.0
                } else {
                    r
                }
            }
        };
        Self::new(nodes, links, tx_range)
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Places `n_nodes` uniformly in an `area_side` square and samples directed
/// links among in-range ordered pairs at probability `link_density`.
/// Deterministic in `seed`. The result may have zero links; callers decide
/// whether that warrants a warning.
pub fn generate_network(
    n_nodes: usize,
    area_side: f64,
    tx_range: f64,
    link_density: f64,
    seed: u64,
) -> Result<GeometricNetwork, GeometryError> {
    if !(tx_range > 0.0) {
        return Err(GeometryError::NonPositive {
            what: "tx_range",
            value: tx_range,
        });
    }
    if !(area_side > 0.0) {
        return Err(GeometryError::NonPositive {
            what: "area_side",
            value: area_side,
        });
    }
    if !(link_density > 0.0 && link_density <= 1.0) {
        return Err(GeometryError::BadDensity(link_density));
    }
    let mut rng = streams::substream(seed, streams::DOM_GEOMETRY, 0);
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let x = rng.random::<f64>() * area_side;
        let y = rng.random::<f64>() * area_side;
        nodes.push((x, y));
    }
    let mut links = Vec::new();
    for tx in 0..n_nodes {
        for rx in 0..n_nodes {
            if tx == rx || dist(nodes[tx], nodes[rx]) > tx_range {
                continue;
            }
            if rng.random::<f64>() < link_density {
                links.push((tx, rx));
            }
        }
    }
    GeometricNetwork::new(nodes, links, tx_range)
}

/// Builds the conflict graph of `net` under the chosen interference model.
pub fn build_interference(
    net: &GeometricNetwork,
    model: InterferenceModel,
) -> Result<InterferenceGraph, GeometryError> {
    match model {
        InterferenceModel::KHop { k } if k == 0 => return Err(GeometryError::BadHops(0)),
        InterferenceModel::Phy { snr_t, .. } if !(snr_t > 0.0) => {
            return Err(GeometryError::NonPositive {
                what: "SNR_t",
                value: snr_t,
            })
        }
        InterferenceModel::Phy { kappa, .. } if !(kappa > 0.0) => {
            return Err(GeometryError::NonPositive {
                what: "kappa",
                value: kappa,
            })
        }
        _ => {}
    }
    let n = net.link_count();
    if n == 0 {
        return Err(GraphError::Empty.into());
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if conflicts(net, i, j, model) {
                edges.push((i, j));
            }
        }
    }
    Ok(InterferenceGraph::new(n, &edges)?)
}

fn conflicts(net: &GeometricNetwork, i: usize, j: usize, model: InterferenceModel) -> bool {
    let (txi, rxi) = net.links[i];
    let (txj, rxj) = net.links[j];
    match model {
        InterferenceModel::Primary => txi == txj || txi == rxj || rxi == txj || rxi == rxj,
        InterferenceModel::KHop { k } => {
            let threshold = k as f64 * net.tx_range;
            let pi = [net.nodes[txi], net.nodes[rxi]];
            let pj = [net.nodes[txj], net.nodes[rxj]];
            pi.iter()
                .any(|&a| pj.iter().any(|&b| dist(a, b) < threshold))
        }
        InterferenceModel::Phy { snr_t, kappa } => {
            let c = snr_t.powf(1.0 / kappa);
            let li = net.link_length(i);
            let lj = net.link_length(j);
            dist(net.nodes[txi], net.nodes[rxj]) < c * lj
                || dist(net.nodes[txj], net.nodes[rxi]) < c * li
        }
    }
}
