//! Yen's k-shortest loopless paths with deterministic tie-breaking.
//!
//! Paths are ordered by total weight; weights within a relative `1e-9` of
//! each other count as equal and are then ordered lexicographically by node
//! sequence. The spur search returns the lexicographically smallest among
//! the minimum-weight spur paths, which keeps the whole ranking
//! deterministic and makes `k`-results prefixes of `k'`-results.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::{NodeId, Path, Topology, TopologyError};

const WEIGHT_RTOL: f64 = 1e-9;

/// Compares path weights, treating values within a relative 1e-9 as equal.
pub fn weight_cmp(a: f64, b: f64) -> Ordering {
    let scale = a.abs().max(b.abs()).max(1.0);
    if (a - b).abs() <= WEIGHT_RTOL * scale {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

fn path_cmp(a: &Path, b: &Path) -> Ordering {
    weight_cmp(a.total_weight, b.total_weight).then_with(|| a.nodes.cmp(&b.nodes))
}

#[derive(Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct Blocked {
    nodes: Vec<bool>,
    links: Vec<bool>,
}

impl Blocked {
    fn none(topo: &Topology) -> Self {
        Blocked {
            nodes: vec![false; topo.n()],
            links: vec![false; topo.links().len()],
        }
    }
}

fn path_from_nodes(topo: &Topology, nodes: Vec<NodeId>) -> Path {
    let links: Vec<usize> = nodes
        .windows(2)
        .map(|w| {
            topo.link_index(w[0], w[1])
                .expect("consecutive nodes are adjacent")
        })
        .collect();
    let total_weight = links.iter().map(|&l| topo.link(l).weight).sum();
    Path {
        nodes,
        links,
        total_weight,
    }
}

/// Lexicographically smallest minimum-weight path avoiding blocked nodes/links.
fn spur_search(
    topo: &Topology,
    src: NodeId,
    dst: NodeId,
    blocked: &Blocked,
) -> Option<Vec<NodeId>> {
    if blocked.nodes[src.0] || blocked.nodes[dst.0] {
        return None;
    }
    // distances to dst over reversed links
    let n = topo.n();
    let mut to_dst = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    to_dst[dst.0] = 0.0;
    heap.push(Reverse((Dist(0.0), dst.0)));
    while let Some(Reverse((Dist(d), v))) = heap.pop() {
        if d > to_dst[v] {
            continue;
        }
        // incoming links of v are the reverses of its outgoing links
        for &(u, out) in topo.out_links(NodeId(v)) {
            let incoming = out ^ 1;
            if blocked.links[incoming] || blocked.nodes[u.0] {
                continue;
            }
            let nd = d + topo.link(incoming).weight;
            if nd < to_dst[u.0] {
                to_dst[u.0] = nd;
                heap.push(Reverse((Dist(nd), u.0)));
            }
        }
    }
    if !to_dst[src.0].is_finite() {
        return None;
    }

    let mut nodes = vec![src];
    let mut cur = src;
    while cur != dst {
        let next = topo.out_links(cur).iter().find(|&&(v, link)| {
            !blocked.links[link]
                && !blocked.nodes[v.0]
                && to_dst[v.0].is_finite()
                && !nodes.contains(&v)
                && weight_cmp(topo.link(link).weight + to_dst[v.0], to_dst[cur.0])
                    == Ordering::Equal
        })?;
        cur = next.0;
        nodes.push(cur);
        if nodes.len() > n {
            return None;
        }
    }
    Some(nodes)
}

/// Minimum-weight path from `src` to `dst` (lexicographically smallest on ties).
pub fn shortest_path(topo: &Topology, src: NodeId, dst: NodeId) -> Result<Path, TopologyError> {
    spur_search(topo, src, dst, &Blocked::none(topo))
        .map(|nodes| path_from_nodes(topo, nodes))
        .ok_or(TopologyError::NoPath { src, dst })
}

/// Up to `k` loopless paths from `src` to `dst` in non-decreasing weight.
pub fn k_shortest_paths(
    topo: &Topology,
    src: NodeId,
    dst: NodeId,
    k: usize,
) -> Result<Vec<Path>, TopologyError> {
    assert_ne!(src, dst, "k_shortest_paths needs distinct endpoints");
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut accepted = vec![shortest_path(topo, src, dst)?];
    let mut candidates: Vec<Path> = Vec::new();
    let mut blocked = Blocked::none(topo);

    while accepted.len() < k {
        let last = accepted.last().unwrap().clone();
        for i in 0..last.nodes.len() - 1 {
            let spur = last.nodes[i];
            let root = &last.nodes[..=i];

            blocked.nodes.fill(false);
            blocked.links.fill(false);
            for &v in &root[..i] {
                blocked.nodes[v.0] = true;
            }
            for p in &accepted {
                if p.nodes.len() > i + 1 && p.nodes[..=i] == *root {
                    blocked.links[p.links[i]] = true;
                }
            }

            if let Some(tail) = spur_search(topo, spur, dst, &blocked) {
                let mut nodes = root[..i].to_vec();
                nodes.extend(tail);
                if !candidates.iter().any(|c| c.nodes == nodes)
                    && !accepted.iter().any(|a| a.nodes == nodes)
                {
                    candidates.push(path_from_nodes(topo, nodes));
                }
            }
        }
        let Some(best) =
            (0..candidates.len()).min_by(|&a, &b| path_cmp(&candidates[a], &candidates[b]))
        else {
            break;
        };
        accepted.push(candidates.swap_remove(best));
    }
    Ok(accepted)
}
