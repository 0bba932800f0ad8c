use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_size, max_pairs, pairs_connected, Topology, TopologyError};

pub const DEFAULT_MAX_ATTEMPTS: usize = 1000;

/// Samples a connected G(n, M) topology with exactly `link_pairs` undirected
/// pairs, each realized as two directed links.
///
/// Every attempt draws `link_pairs` distinct pairs uniformly from the
/// `n(n-1)/2` possible ones; disconnected samples are discarded and redrawn
/// from the same RNG stream, up to `max_attempts` draws.
pub fn generate_topology(
    n: usize,
    link_pairs: usize,
    seed: u64,
    max_attempts: usize,
) -> Result<Topology, TopologyError> {
    check_size(n, link_pairs)?;
    let all: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    debug_assert_eq!(all.len(), max_pairs(n));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..max_attempts {
        let mut chosen: Vec<(usize, usize)> = index::sample(&mut rng, all.len(), link_pairs)
            .into_iter()
            .map(|i| all[i])
            .collect();
        chosen.sort_unstable();
        if pairs_connected(n, &chosen) {
            return Topology::from_pairs(n, &chosen);
        }
    }
    Err(TopologyError::ConnectivityFailure {
        attempts: max_attempts,
    })
}
