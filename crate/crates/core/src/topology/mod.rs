//! Network topologies: random generation, capacity and weight configuration,
//! and k-shortest loopless paths.
//!
//! A [`Topology`] is a connected directed graph in which every link has a
//! reverse twin with identical capacity and weight. Links are stored in pair
//! order: link `2i` is `pairs[i]` in the forward (`u < v`) direction and link
//! `2i + 1` is its reverse.

mod betweenness;
mod generate;
mod ksp;

pub use betweenness::edge_betweenness;
pub use generate::{generate_topology, DEFAULT_MAX_ATTEMPTS};
pub use ksp::{k_shortest_paths, shortest_path, weight_cmp};

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("invalid size: n={n}, link_pairs={link_pairs} (allowed {min}..={max})")]
    InvalidSize {
        n: usize,
        link_pairs: usize,
        min: usize,
        max: usize,
    },
    #[error("no connected topology after {attempts} attempts")]
    ConnectivityFailure { attempts: usize },
    #[error("topology is not connected")]
    Disconnected,
    #[error("invalid link pair ({0}, {1})")]
    InvalidPair(usize, usize),
    #[error("unsupported setting '{0}'")]
    UnsupportedSetting(String),
    #[error("invalid capacity set: {0}")]
    InvalidCapacitySet(String),
    #[error("no path from {src} to {dst}")]
    NoPath { src: NodeId, dst: NodeId },
}

/// Index of a node, `0..n`.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i)
    }
}

/// A directed link. Unconfigured links carry unit capacity and unit weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub src: NodeId,
    pub dst: NodeId,
    pub capacity: f64,
    pub weight: f64,
}

/// How link capacities are derived. Only edge betweenness is supported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CapacityType {
    #[serde(rename = "EDGE_BETWEENNESS")]
    EdgeBetweenness,
}

impl FromStr for CapacityType {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "EDGE_BETWEENNESS" => Ok(CapacityType::EdgeBetweenness),
            _ => Err(TopologyError::UnsupportedSetting(s.to_string())),
        }
    }
}

/// How link weights are derived from capacities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightSetting {
    /// weight = 1 / capacity
    #[serde(rename = "INV_CAP")]
    InvCap,
}

impl FromStr for WeightSetting {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "INV_CAP" => Ok(WeightSetting::InvCap),
            _ => Err(TopologyError::UnsupportedSetting(s.to_string())),
        }
    }
}

/// A loopless path between two nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    /// Link indices into [`Topology::links`], in traversal order.
    pub links: Vec<usize>,
    pub total_weight: f64,
}

impl Path {
    pub fn src(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn dst(&self) -> NodeId {
        *self.nodes.last().expect("path has at least one node")
    }

    pub fn hops(&self) -> usize {
        self.links.len()
    }

    pub fn uses_link(&self, link: usize) -> bool {
        self.links.contains(&link)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    n: usize,
    pairs: Vec<(NodeId, NodeId)>,
    links: Vec<Link>,
    adjacency: Vec<Vec<(NodeId, usize)>>,
}

pub(crate) fn max_pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

pub(crate) fn check_size(n: usize, link_pairs: usize) -> Result<(), TopologyError> {
    let max = max_pairs(n);
    let min = n.saturating_sub(1);
    if n < 2 || link_pairs < min || link_pairs > max {
        return Err(TopologyError::InvalidSize {
            n,
            link_pairs,
            min,
            max,
        });
    }
    Ok(())
}

/// Union-find connectivity check over undirected pairs.
pub(crate) fn pairs_connected(n: usize, pairs: &[(usize, usize)]) -> bool {
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut parent: Vec<usize> = (0..n).collect();
    let mut components = n;
    for &(u, v) in pairs {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components == 1
}

impl Topology {
    /// Builds a connected topology from undirected node pairs. Pairs are
    /// normalized to `(min, max)` and sorted; links get unit capacity and weight.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self, TopologyError> {
        check_size(n, pairs.len())?;
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(pairs.len());
        for &(u, v) in pairs {
            if u == v || u >= n || v >= n {
                return Err(TopologyError::InvalidPair(u, v));
            }
            norm.push((u.min(v), u.max(v)));
        }
        norm.sort_unstable();
        if norm.windows(2).any(|w| w[0] == w[1]) {
            let dup = norm.windows(2).find(|w| w[0] == w[1]).unwrap()[0];
            return Err(TopologyError::InvalidPair(dup.0, dup.1));
        }
        if !pairs_connected(n, &norm) {
            return Err(TopologyError::Disconnected);
        }
        let links = norm
            .iter()
            .flat_map(|&(u, v)| {
                [
                    Link {
                        src: NodeId(u),
                        dst: NodeId(v),
                        capacity: 1.0,
                        weight: 1.0,
                    },
                    Link {
                        src: NodeId(v),
                        dst: NodeId(u),
                        capacity: 1.0,
                        weight: 1.0,
                    },
                ]
            })
            .collect();
        let pairs = norm
            .into_iter()
            .map(|(u, v)| (NodeId(u), NodeId(v)))
            .collect();
        let mut topo = Topology {
            n,
            pairs,
            links,
            adjacency: Vec::new(),
        };
        topo.rebuild_adjacency();
        Ok(topo)
    }

    fn rebuild_adjacency(&mut self) {
        let mut adjacency = vec![Vec::new(); self.n];
        for (i, l) in self.links.iter().enumerate() {
            adjacency[l.src.0].push((l.dst, i));
        }
        for row in &mut adjacency {
            row.sort_unstable();
        }
        self.adjacency = adjacency;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn link_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(NodeId, NodeId)] {
        &self.pairs
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, index: usize) -> &Link {
        &self.links[index]
    }

    /// Outgoing `(neighbour, link index)` entries of `node`, sorted by neighbour.
    pub fn out_links(&self, node: NodeId) -> &[(NodeId, usize)] {
        &self.adjacency[node.0]
    }

    pub fn link_index(&self, src: NodeId, dst: NodeId) -> Option<usize> {
        let row = self.adjacency.get(src.0)?;
        row.binary_search_by_key(&dst, |&(v, _)| v)
            .ok()
            .map(|i| row[i].1)
    }

    pub fn pair_index(&self, u: NodeId, v: NodeId) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.pairs.binary_search(&key).ok()
    }

    pub fn total_capacity(&self) -> f64 {
        self.links.iter().map(|l| l.capacity).sum()
    }

    /// Sets both directions of every pair to the given capacity (indexed by pair).
    pub fn with_pair_capacities(&self, capacities: &[f64]) -> Topology {
        assert_eq!(capacities.len(), self.pairs.len());
        let mut out = self.clone();
        for (pair, &c) in capacities.iter().enumerate() {
            out.links[2 * pair].capacity = c;
            out.links[2 * pair + 1].capacity = c;
        }
        out
    }

    /// Multiplies every capacity by `factor`, leaving weights unchanged.
    pub fn scale_capacities(&self, factor: f64) -> Topology {
        let mut out = self.clone();
        for l in &mut out.links {
            l.capacity *= factor;
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([NodeId(0)]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in self.out_links(u) {
                if !seen[v.0] {
                    seen[v.0] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Capacity assignment by edge-betweenness rank.
///
/// Pairs are ranked by ascending betweenness (ties by pair id) and split into
/// `capacity_set.len()` contiguous groups of near-equal size, the remainder
/// going to the lowest groups. Group `i` gets `capacity_set[i]`.
pub fn assign_capacities(topo: &Topology, capacity_set: &[f64]) -> Result<Topology, TopologyError> {
    if capacity_set.is_empty() {
        return Err(TopologyError::InvalidCapacitySet("empty".into()));
    }
    if capacity_set.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(TopologyError::InvalidCapacitySet(
            "capacities must be positive and finite".into(),
        ));
    }
    if capacity_set.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TopologyError::InvalidCapacitySet(
            "capacities must be strictly increasing".into(),
        ));
    }

    let betweenness = edge_betweenness(topo);
    // Brandes sums carry rounding noise; snap to a grid so exact ties compare equal.
    let key = |b: f64| (b * 1e9).round();
    let mut order: Vec<usize> = (0..topo.link_pairs()).collect();
    order.sort_by(|&a, &b| key(betweenness[a]).total_cmp(&key(betweenness[b])));

    let groups = capacity_set.len();
    let m = order.len();
    let (base, rem) = (m / groups, m % groups);
    let mut capacities = vec![0.0; m];
    let mut pos = 0;
    for (g, &cap) in capacity_set.iter().enumerate() {
        let size = base + usize::from(g < rem);
        for &pair in &order[pos..pos + size] {
            capacities[pair] = cap;
        }
        pos += size;
    }
    Ok(topo.with_pair_capacities(&capacities))
}

pub fn assign_weights(topo: &Topology, setting: WeightSetting) -> Topology {
    let mut out = topo.clone();
    match setting {
        WeightSetting::InvCap => {
            for l in &mut out.links {
                l.weight = 1.0 / l.capacity;
            }
        }
    }
    out
}

pub fn avg_nodal_degree(topo: &Topology) -> f64 {
    2.0 * topo.link_pairs() as f64 / topo.n() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3() -> Topology {
        // triangle 0-1-3 with node 2 hanging off node 3
        Topology::from_pairs(4, &[(0, 1), (0, 3), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn links_come_in_reverse_pairs() {
        let t = fig3();
        assert_eq!(t.links().len(), 2 * t.link_pairs());
        for (i, l) in t.links().iter().enumerate() {
            let r = t.link(i ^ 1);
            assert_eq!((l.src, l.dst), (r.dst, r.src));
            assert_eq!(t.link_index(l.src, l.dst), Some(i));
        }
    }

    #[test]
    fn from_pairs_rejects_bad_input() {
        assert_eq!(
            Topology::from_pairs(3, &[(0, 0), (1, 2)]),
            Err(TopologyError::InvalidPair(0, 0))
        );
        assert_eq!(
            Topology::from_pairs(4, &[(0, 1), (2, 3), (1, 0)]),
            Err(TopologyError::InvalidPair(0, 1))
        );
        assert_eq!(
            Topology::from_pairs(4, &[(0, 1), (0, 2), (1, 2)]),
            Err(TopologyError::Disconnected)
        );
    }

    #[test]
    fn cut_link_gets_largest_capacity() {
        let t = assign_capacities(&fig3(), &[30.0, 35.0, 40.0]).unwrap();
        let cut = t.link_index(NodeId(2), NodeId(3)).unwrap();
        assert_eq!(t.link(cut).capacity, 40.0);
        assert_eq!(t.link(cut ^ 1).capacity, 40.0);
        // 4 pairs over 3 groups: sizes 2, 1, 1
        let caps: Vec<f64> = (0..4).map(|p| t.link(2 * p).capacity).collect();
        assert_eq!(caps, vec![30.0, 30.0, 35.0, 40.0]);
    }

    #[test]
    fn single_capacity_everywhere() {
        let t = assign_capacities(&fig3(), &[50.0]).unwrap();
        assert!(t.links().iter().all(|l| l.capacity == 50.0));
    }

    #[test]
    fn path_graph_tie_goes_to_lower_pair_id() {
        let t = Topology::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
        let t = assign_capacities(&t, &[30.0, 40.0]).unwrap();
        assert_eq!(
            t.link(t.link_index(NodeId(0), NodeId(1)).unwrap()).capacity,
            30.0
        );
        assert_eq!(
            t.link(t.link_index(NodeId(1), NodeId(2)).unwrap()).capacity,
            40.0
        );
    }

    #[test]
    fn capacity_set_validation() {
        assert!(assign_capacities(&fig3(), &[]).is_err());
        assert!(assign_capacities(&fig3(), &[40.0, 30.0]).is_err());
        assert!(assign_capacities(&fig3(), &[30.0, 30.0]).is_err());
        assert!(assign_capacities(&fig3(), &[0.0, 30.0]).is_err());
    }

    #[test]
    fn inverse_capacity_weights() {
        let t = assign_capacities(&fig3(), &[30.0, 35.0, 40.0]).unwrap();
        let t = assign_weights(&t, WeightSetting::InvCap);
        for l in t.links() {
            assert_eq!(l.weight, 1.0 / l.capacity);
        }
        let cut = t.link_index(NodeId(2), NodeId(3)).unwrap();
        assert_eq!(t.link(cut).weight, 0.025);
    }

    #[test]
    fn unknown_settings_rejected() {
        assert_eq!(
            "inv_cap".parse::<WeightSetting>(),
            Ok(WeightSetting::InvCap)
        );
        assert_eq!(
            "HOP_COUNT".parse::<WeightSetting>(),
            Err(TopologyError::UnsupportedSetting("HOP_COUNT".into()))
        );
        assert!("DEGREE".parse::<CapacityType>().is_err());
    }

    #[test]
    fn nodal_degree() {
        let t = Topology::from_pairs(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(avg_nodal_degree(&t), 1.5);
        let all: Vec<(usize, usize)> = (0..5)
            .flat_map(|u| (u + 1..5).map(move |v| (u, v)))
            .collect();
        assert_eq!(
            avg_nodal_degree(&Topology::from_pairs(5, &all).unwrap()),
            4.0
        );
        let t = generate_topology(25, 100, 7, DEFAULT_MAX_ATTEMPTS).unwrap();
        assert_eq!(avg_nodal_degree(&t), 8.0);
    }
}
