use serde::{Deserialize, Serialize};

use super::{
    flow_var_name, pla_delay, CandidatePathSet, FormulationError, ObjectiveKind, RoutingStrategy,
};
use crate::lp::LpSolution;
use crate::topology::Topology;
use crate::traffic::TrafficMatrix;

/// Flow below this is treated as an unused path.
const FLOW_EPS: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowAllocation {
    pub objective: ObjectiveKind,
    pub strategy: RoutingStrategy,
    pub objective_value: f64,
    /// `flows[d][p]`: flow of demand `d` on its `p`-th candidate path.
    pub flows: Vec<Vec<f64>>,
}

impl FlowAllocation {
    /// Flow summed over demands for each path index (shortest first), `k` entries.
    pub fn per_path_index(&self, k: usize) -> Vec<f64> {
        let mut agg = vec![0.0; k];
        for xs in &self.flows {
            for (a, x) in agg.iter_mut().zip(xs) {
                *a += x;
            }
        }
        agg
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkLoad {
    pub src: usize,
    pub dst: usize,
    pub capacity: f64,
    pub load: f64,
    pub utilization: f64,
    /// `capacity - load`; negative when a link is overloaded.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkLoadVector {
    pub links: Vec<LinkLoad>,
}

impl LinkLoadVector {
    pub fn from_loads(topo: &Topology, loads: &[f64]) -> Self {
        LinkLoadVector {
            links: topo
                .links()
                .iter()
                .zip(loads)
                .map(|(l, &y)| LinkLoad {
                    src: l.src.0,
                    dst: l.dst.0,
                    capacity: l.capacity,
                    load: y,
                    utilization: y / l.capacity,
                    residual: l.capacity - y,
                })
                .collect(),
        }
    }

    pub fn max_utilization(&self) -> f64 {
        self.links.iter().map(|l| l.utilization).fold(0.0, f64::max)
    }

    pub fn total_capacity(&self) -> f64 {
        self.links.iter().map(|l| l.capacity).sum()
    }

    pub fn total_residual(&self) -> f64 {
        self.links.iter().map(|l| l.residual).sum()
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= FLOW_EPS * (1.0 + a.abs().max(b.abs()))
}

/// Reads path flows out of an optimal solution and derives per-link loads.
pub fn decode_solution(
    sol: &LpSolution,
    paths: &CandidatePathSet,
    tm: &TrafficMatrix,
    topo: &Topology,
    objective: ObjectiveKind,
    strategy: RoutingStrategy,
) -> Result<(FlowAllocation, LinkLoadVector), FormulationError> {
    if !sol.is_optimal() {
        return Err(FormulationError::InfeasibleInstance(sol.status));
    }
    let violation = |what: String| Err(FormulationError::InvariantViolation(what));

    let mut loads = vec![0.0; topo.links().len()];
    let mut flows = Vec::with_capacity(tm.len());
    for (d, (ps, demand)) in paths.per_demand().iter().zip(tm.demands()).enumerate() {
        let mut xs = Vec::with_capacity(ps.len());
        for (p, path) in ps.iter().enumerate() {
            let name = flow_var_name(d, p);
            let Some(x) = sol.value(&name) else {
                return violation(format!("missing variable {name}"));
            };
            let x = x.max(0.0);
            for &l in &path.links {
                loads[l] += x;
            }
            xs.push(x);
        }
        let total: f64 = xs.iter().sum();
        if !close(total, demand.volume) {
            return violation(format!("demand {d}: routed {total} of {}", demand.volume));
        }
        if strategy == RoutingStrategy::Singlepath {
            let used = xs.iter().filter(|&&x| x > FLOW_EPS).count();
            if used > 1 || (used == 0 && demand.volume > FLOW_EPS) {
                return violation(format!("demand {d} uses {used} paths"));
            }
        }
        flows.push(xs);
    }

    let links = LinkLoadVector::from_loads(topo, &loads);
    for (l, link) in links.links.iter().enumerate() {
        let limit = match objective {
            ObjectiveKind::Mcr => link.capacity,
            ObjectiveKind::Lb => sol.objective_value * link.capacity,
            ObjectiveKind::Ad => {
                if let Some(y) = sol.value(&format!("y_{l}")) {
                    if !close(y, link.load) {
                        return violation(format!(
                            "link {l}: load {y} vs recomputed {}",
                            link.load
                        ));
                    }
                    let r = sol.value(&format!("r_{l}")).unwrap_or(0.0);
                    let tight = link.capacity * pla_delay(link.load / link.capacity);
                    if !close(r, tight) {
                        return violation(format!("link {l}: delay {r} vs {tight}"));
                    }
                }
                f64::INFINITY
            }
        };
        if link.load > limit && !close(link.load, limit) {
            return violation(format!("link {l}: load {} above {limit}", link.load));
        }
    }

    Ok((
        FlowAllocation {
            objective,
            strategy,
            objective_value: sol.objective_value,
            flows,
        },
        links,
    ))
}
