//! Static traffic matrices: gravity, bimodal and lognormal generators, plus
//! scaling to a target shortest-path utilization.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{shortest_path, NodeId, Topology, TopologyError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrafficError {
    #[error("traffic matrix has no positive volume")]
    DegenerateMatrix,
    #[error("invalid traffic parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown traffic matrix model '{0}'")]
    UnknownModel(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TmModel {
    Gravity,
    Bimodal,
    Lognormal,
}

impl fmt::Display for TmModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TmModel::Gravity => "gravity",
            TmModel::Bimodal => "bimodal",
            TmModel::Lognormal => "lognormal",
        })
    }
}

impl FromStr for TmModel {
    type Err = TrafficError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gravity" => Ok(TmModel::Gravity),
            "bimodal" => Ok(TmModel::Bimodal),
            "lognormal" => Ok(TmModel::Lognormal),
            _ => Err(TrafficError::UnknownModel(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub src: NodeId,
    pub dst: NodeId,
    pub volume: f64,
}

/// One demand per ordered node pair, `s`-major then ascending `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficMatrix {
    n: usize,
    model: TmModel,
    demands: Vec<Demand>,
}

impl TrafficMatrix {
    /// Builds a complete matrix with `volume(s, t)` for every ordered pair.
    pub fn from_fn(
        n: usize,
        model: TmModel,
        mut volume: impl FnMut(NodeId, NodeId) -> f64,
    ) -> Self {
        let demands = ordered_pairs(n)
            .map(|(s, t)| Demand {
                src: s,
                dst: t,
                volume: volume(s, t),
            })
            .collect();
        TrafficMatrix { n, model, demands }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn model(&self) -> TmModel {
        self.model
    }

    pub fn demands(&self) -> &[Demand] {
        &self.demands
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }

    pub fn index_of(&self, src: NodeId, dst: NodeId) -> usize {
        assert_ne!(src, dst);
        src.0 * (self.n - 1) + if dst.0 < src.0 { dst.0 } else { dst.0 - 1 }
    }

    pub fn volume(&self, src: NodeId, dst: NodeId) -> f64 {
        self.demands[self.index_of(src, dst)].volume
    }

    pub fn total_volume(&self) -> f64 {
        self.demands.iter().map(|d| d.volume).sum()
    }

    pub fn scaled(&self, factor: f64) -> TrafficMatrix {
        let mut out = self.clone();
        for d in &mut out.demands {
            d.volume *= factor;
        }
        out
    }
}

fn ordered_pairs(n: usize) -> impl Iterator<Item = (NodeId, NodeId)> {
    (0..n).flat_map(move |s| {
        (0..n)
            .filter(move |&t| t != s)
            .map(move |t| (NodeId(s), NodeId(t)))
    })
}

/// Sum of capacities of all links entering or leaving each node.
fn combined_capacity(topo: &Topology) -> Vec<f64> {
    let mut mass = vec![0.0; topo.n()];
    for l in topo.links() {
        mass[l.src.0] += l.capacity;
        mass[l.dst.0] += l.capacity;
    }
    mass
}

/// Capacity-based gravity model: `h(s,t) = M(s) M(t) / sum_{u != s} M(u)`.
///
/// Deterministic; `_seed` is accepted so every generator shares one signature.
pub fn gravity_tm(topo: &Topology, _seed: u64) -> TrafficMatrix {
    let mass = combined_capacity(topo);
    let total: f64 = mass.iter().sum();
    TrafficMatrix::from_fn(topo.n(), TmModel::Gravity, |s, t| {
        mass[s.0] * mass[t.0] / (total - mass[s.0])
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BimodalParams {
    /// Share of ordered pairs that carry a large flow; the count is rounded up.
    pub large_fraction: f64,
    pub small_range: (f64, f64),
    pub large_range: (f64, f64),
}

impl Default for BimodalParams {
    fn default() -> Self {
        BimodalParams {
            large_fraction: 0.1,
            small_range: (1.0, 10.0),
            large_range: (50.0, 100.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LognormalParams {
    pub mu: f64,
    pub sigma: f64,
}

impl Default for LognormalParams {
    fn default() -> Self {
        LognormalParams {
            mu: 1.0,
            sigma: 1.0,
        }
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<(), TrafficError> {
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
        return Err(TrafficError::InvalidParameter(format!(
            "{name} must satisfy 0 <= lo <= hi, got ({lo}, {hi})"
        )));
    }
    Ok(())
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// A few uniformly chosen pairs get volumes from `large_range`, the rest from `small_range`.
pub fn bimodal_tm(
    topo: &Topology,
    seed: u64,
    params: &BimodalParams,
) -> Result<TrafficMatrix, TrafficError> {
    check_range("small_range", params.small_range)?;
    check_range("large_range", params.large_range)?;
    if !(0.0..1.0).contains(&params.large_fraction) {
        return Err(TrafficError::InvalidParameter(format!(
            "large_fraction must lie in [0, 1), got {}",
            params.large_fraction
        )));
    }
    let n = topo.n();
    let count = n * (n - 1);
    let large = ((params.large_fraction * count as f64).ceil() as usize).min(count);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_large = vec![false; count];
    for i in index::sample(&mut rng, count, large) {
        is_large[i] = true;
    }
    let mut d = 0;
    Ok(TrafficMatrix::from_fn(n, TmModel::Bimodal, |_, _| {
        let range = if is_large[d] {
            params.large_range
        } else {
            params.small_range
        };
        d += 1;
        uniform(&mut rng, range)
    }))
}

/// Independent `LogNormal(mu, sigma)` volume per ordered pair.
pub fn lognormal_tm(
    topo: &Topology,
    seed: u64,
    params: &LognormalParams,
) -> Result<TrafficMatrix, TrafficError> {
    let dist = LogNormal::new(params.mu, params.sigma).map_err(|e| {
        TrafficError::InvalidParameter(format!(
            "lognormal(mu={}, sigma={}): {e}",
            params.mu, params.sigma
        ))
    })?;
    if !(params.sigma > 0.0) {
        return Err(TrafficError::InvalidParameter(
            "sigma must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(TrafficMatrix::from_fn(
        topo.n(),
        TmModel::Lognormal,
        |_, _| dist.sample(&mut rng),
    ))
}

/// Per-link load when every demand follows its single shortest path.
pub fn shortest_path_loads(tm: &TrafficMatrix, topo: &Topology) -> Result<Vec<f64>, TrafficError> {
    let mut loads = vec![0.0; topo.links().len()];
    for d in tm.demands() {
        if d.volume == 0.0 {
            continue;
        }
        let path = shortest_path(topo, d.src, d.dst)?;
        for &l in &path.links {
            loads[l] += d.volume;
        }
    }
    Ok(loads)
}

/// Maximum link utilization under single shortest-path routing.
pub fn shortest_path_utilization(tm: &TrafficMatrix, topo: &Topology) -> Result<f64, TrafficError> {
    let loads = shortest_path_loads(tm, topo)?;
    Ok(loads
        .iter()
        .zip(topo.links())
        .map(|(y, l)| y / l.capacity)
        .fold(0.0, f64::max))
}

/// Scales `tm` uniformly so shortest-path routing peaks at utilization `max_u`.
pub fn scale_to_max_utilization(
    tm: &TrafficMatrix,
    topo: &Topology,
    max_u: f64,
) -> Result<TrafficMatrix, TrafficError> {
    if !(max_u > 0.0 && max_u <= 1.0) {
        return Err(TrafficError::InvalidParameter(format!(
            "max utilization must lie in (0, 1], got {max_u}"
        )));
    }
    let current = shortest_path_utilization(tm, topo)?;
    if !(current > 0.0) {
        return Err(TrafficError::DegenerateMatrix);
    }
    Ok(tm.scaled(max_u / current))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{assign_capacities, assign_weights, generate_topology, WeightSetting};
    use proptest::prelude::*;

    fn path3(cap: f64) -> Topology {
        let t = Topology::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
        assign_weights(
            &assign_capacities(&t, &[cap]).unwrap(),
            WeightSetting::InvCap,
        )
    }

    fn configured(n: usize, pairs: usize, seed: u64) -> Topology {
        let t = generate_topology(n, pairs, seed, 10_000).unwrap();
        assign_weights(
            &assign_capacities(&t, &[30.0, 35.0, 40.0]).unwrap(),
            WeightSetting::InvCap,
        )
    }

    #[test]
    fn demand_indexing() {
        let tm = TrafficMatrix::from_fn(4, TmModel::Gravity, |s, t| (10 * s.0 + t.0) as f64);
        assert_eq!(tm.len(), 12);
        for s in 0..4 {
            for t in 0..4 {
                if s != t {
                    let d = tm.demands()[tm.index_of(NodeId(s), NodeId(t))];
                    assert_eq!((d.src, d.dst), (NodeId(s), NodeId(t)));
                }
            }
        }
    }

    #[test]
    fn gravity_path_ratio() {
        let tm = gravity_tm(&path3(10.0), 0);
        // M(a) = M(c) = 2c, M(b) = 4c
        let ratio = tm.volume(NodeId(0), NodeId(1)) / tm.volume(NodeId(0), NodeId(2));
        assert!((ratio - 2.0).abs() < 1e-12);
        assert!((tm.volume(NodeId(0), NodeId(1)) - 20.0 * 40.0 / 60.0).abs() < 1e-12);
    }

    #[test]
    fn gravity_symmetric_when_masses_equal() {
        let t = Topology::from_pairs(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let t = assign_capacities(&t, &[25.0]).unwrap();
        let tm = gravity_tm(&t, 1);
        let v0 = tm.demands()[0].volume;
        assert!(tm.demands().iter().all(|d| (d.volume - v0).abs() < 1e-12));
    }

    #[test]
    fn gravity_is_homogeneous() {
        let t = configured(8, 12, 3);
        let a = gravity_tm(&t, 0);
        let b = gravity_tm(&t.scale_capacities(2.0), 0);
        for (x, y) in a.demands().iter().zip(b.demands()) {
            assert!((2.0 * x.volume - y.volume).abs() < 1e-9 * y.volume);
        }
    }

    #[test]
    fn bimodal_point_ranges() {
        let t = Topology::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
        let params = BimodalParams {
            large_fraction: 0.1,
            small_range: (1.0, 1.0),
            large_range: (100.0, 100.0),
        };
        for seed in 0..10 {
            let tm = bimodal_tm(&t, seed, &params).unwrap();
            let big = tm.demands().iter().filter(|d| d.volume == 100.0).count();
            let small = tm.demands().iter().filter(|d| d.volume == 1.0).count();
            assert_eq!((big, small), (1, 5));
        }
    }

    #[test]
    fn bimodal_zero_fraction_all_small() {
        let t = configured(6, 9, 1);
        let params = BimodalParams {
            large_fraction: 0.0,
            ..BimodalParams::default()
        };
        let tm = bimodal_tm(&t, 4, &params).unwrap();
        assert!(tm
            .demands()
            .iter()
            .all(|d| (1.0..=10.0).contains(&d.volume)));
    }

    #[test]
    fn bimodal_rejects_bad_params() {
        let t = configured(4, 4, 1);
        let bad = BimodalParams {
            small_range: (5.0, 1.0),
            ..BimodalParams::default()
        };
        assert!(bimodal_tm(&t, 0, &bad).is_err());
        let bad = BimodalParams {
            large_fraction: 1.5,
            ..BimodalParams::default()
        };
        assert!(bimodal_tm(&t, 0, &bad).is_err());
    }

    #[test]
    fn bimodal_mean_monte_carlo() {
        // n = 6: 30 pairs, fraction 0.1 -> exactly 3 large
        let t = configured(6, 9, 2);
        let p = BimodalParams::default();
        let expect = 0.1 * 75.0 + 0.9 * 5.5;
        let means: Vec<f64> = (0..2000)
            .map(|seed| bimodal_tm(&t, seed, &p).unwrap().total_volume() / 30.0)
            .collect();
        let m = means.iter().sum::<f64>() / means.len() as f64;
        let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
        let se = (var / means.len() as f64).sqrt();
        assert!((m - expect).abs() < 3.0 * se, "{m} vs {expect} (se {se})");
    }

    #[test]
    fn lognormal_degenerate_sigma() {
        let t = configured(5, 6, 0);
        let tm = lognormal_tm(
            &t,
            9,
            &LognormalParams {
                mu: 1.0,
                sigma: 1e-9,
            },
        )
        .unwrap();
        let e = 1.0f64.exp();
        assert!(tm
            .demands()
            .iter()
            .all(|d| ((d.volume - e) / e).abs() < 1e-6));
        assert!(lognormal_tm(
            &t,
            9,
            &LognormalParams {
                mu: 1.0,
                sigma: 0.0
            }
        )
        .is_err());
    }

    #[test]
    fn lognormal_median() {
        let t = configured(30, 60, 0);
        let (mu, sigma) = (0.5, 1.0);
        let tm = lognormal_tm(&t, 17, &LognormalParams { mu, sigma }).unwrap();
        let mut v: Vec<f64> = tm.demands().iter().map(|d| d.volume).collect();
        assert!(v.iter().all(|&x| x > 0.0));
        v.sort_by(f64::total_cmp);
        let median = v[v.len() / 2];
        let m = mu.exp();
        // asymptotic s.e. of a sample median: 1 / (2 f(m) sqrt(N))
        let density = 1.0 / (m * sigma * (2.0 * std::f64::consts::PI).sqrt());
        let se = 1.0 / (2.0 * density * (v.len() as f64).sqrt());
        assert!((median - m).abs() < 3.0 * se, "{median} vs {m}");
    }

    #[test]
    fn two_node_scaling() {
        let t = Topology::from_pairs(2, &[(0, 1)]).unwrap();
        let t = assign_weights(
            &assign_capacities(&t, &[100.0]).unwrap(),
            WeightSetting::InvCap,
        );
        let tm = TrafficMatrix::from_fn(2, TmModel::Gravity, |_, _| 10.0);
        let scaled = scale_to_max_utilization(&tm, &t, 0.07).unwrap();
        for d in scaled.demands() {
            assert!((d.volume - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let t = configured(4, 4, 0);
        let tm = TrafficMatrix::from_fn(4, TmModel::Gravity, |_, _| 0.0);
        assert_eq!(
            scale_to_max_utilization(&tm, &t, 0.5),
            Err(TrafficError::DegenerateMatrix)
        );
        assert!(scale_to_max_utilization(&gravity_tm(&t, 0), &t, 1.5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn scaling_contract(n in 3usize..9, extra in 0usize..8, seed in any::<u64>(), max_u in 0.01f64..1.0, model in 0usize..3) {
            let pairs = (n - 1 + extra).min(n * (n - 1) / 2);
            let t = configured(n, pairs, seed);
            let tm = match model {
                0 => gravity_tm(&t, seed),
                1 => bimodal_tm(&t, seed, &BimodalParams::default()).unwrap(),
                _ => lognormal_tm(&t, seed, &LognormalParams::default()).unwrap(),
            };
            prop_assert_eq!(tm.len(), n * (n - 1));
            prop_assert!(tm.demands().iter().all(|d| d.volume.is_finite() && d.volume >= 0.0));

            let scaled = scale_to_max_utilization(&tm, &t, max_u).unwrap();
            let u = shortest_path_utilization(&scaled, &t).unwrap();
            prop_assert!((u - max_u).abs() < 1e-9);
            // uniform multiplication keeps ratios
            let f = scaled.demands()[0].volume / tm.demands()[0].volume;
            for (a, b) in tm.demands().iter().zip(scaled.demands()) {
                prop_assert!((b.volume - f * a.volume).abs() <= 1e-12 * b.volume.max(1.0));
            }
            // idempotent
            let again = scale_to_max_utilization(&scaled, &t, max_u).unwrap();
            for (a, b) in scaled.demands().iter().zip(again.demands()) {
                prop_assert!((a.volume - b.volume).abs() <= 1e-12 * a.volume.max(1e-300));
            }
            // deterministic
            prop_assert_eq!(&tm, &match model {
                0 => gravity_tm(&t, seed),
                1 => bimodal_tm(&t, seed, &BimodalParams::default()).unwrap(),
                _ => lognormal_tm(&t, seed, &LognormalParams::default()).unwrap(),
            });
        }
    }
}
