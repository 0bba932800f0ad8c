//! Edge betweenness via Brandes' accumulation on the unweighted graph.

use std::collections::VecDeque;

use super::{NodeId, Topology};

/// Edge betweenness of every undirected pair, indexed like [`Topology::pairs`].
///
/// Counts shortest hop-count paths over all ordered node pairs `(s, t)`;
/// when several shortest paths exist each gets an equal fraction.
pub fn edge_betweenness(topo: &Topology) -> Vec<f64> {
    let n = topo.n();
    let mut scores = vec![0.0; topo.link_pairs()];

    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut preds: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut stack = Vec::with_capacity(n);
    let mut queue = VecDeque::with_capacity(n);

    for s in 0..n {
        sigma.fill(0.0);
        dist.fill(usize::MAX);
        delta.fill(0.0);
        preds.iter_mut().for_each(Vec::clear);
        stack.clear();

        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &(w, link) in topo.out_links(NodeId(v)) {
                let w = w.0;
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push((v, link / 2));
                }
            }
        }

        while let Some(w) = stack.pop() {
            for &(v, pair) in &preds[w] {
                let c = sigma[v] / sigma[w] * (1.0 + delta[w]);
                scores[pair] += c;
                delta[v] += c;
            }
        }
    }
    scores
}
