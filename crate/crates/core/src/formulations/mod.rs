//! Path-based routing models.
//!
//! Every builder creates the flow variables `x_{d}_{p}` first, in demand
//! order and then path order (`p` counts from 1), so [`decode_solution`]
//! can read them back by name. Demands are indexed like
//! [`TrafficMatrix::demands`]. Links that no candidate path crosses carry no
//! load and get no rows.

mod decode;
mod heuristic;
mod pla;

pub use decode::{decode_solution, FlowAllocation, LinkLoad, LinkLoadVector};
pub use heuristic::{single_path_choice, single_path_start};
pub use pla::{pla_delay, PLA_BREAKPOINTS, PLA_PIECES};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LpModel, LpStatus, Relation, Sense, VarId};
use crate::topology::{k_shortest_paths, Path, Topology, TopologyError};
use crate::traffic::TrafficMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormulationError {
    #[error("path budget must be at least 1")]
    InvalidBudget,
    #[error("instance has no optimal solution (status {0:?})")]
    InfeasibleInstance(LpStatus),
    #[error("solution violates {0}")]
    InvariantViolation(String),
    #[error("unknown objective '{0}'")]
    UnknownObjective(String),
    #[error("unknown routing strategy '{0}'")]
    UnknownStrategy(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObjectiveKind {
    #[serde(rename = "MCR")]
    Mcr,
    #[serde(rename = "LB")]
    Lb,
    #[serde(rename = "AD")]
    Ad,
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectiveKind::Mcr => "MCR",
            ObjectiveKind::Lb => "LB",
            ObjectiveKind::Ad => "AD",
        })
    }
}

impl FromStr for ObjectiveKind {
    type Err = FormulationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "MCR" => Ok(ObjectiveKind::Mcr),
            "LB" => Ok(ObjectiveKind::Lb),
            "AD" => Ok(ObjectiveKind::Ad),
            _ => Err(FormulationError::UnknownObjective(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RoutingStrategy {
    Multipath,
    Singlepath,
}

impl fmt::Display for RoutingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoutingStrategy::Multipath => "MULTIPATH",
            RoutingStrategy::Singlepath => "SINGLEPATH",
        })
    }
}

impl FromStr for RoutingStrategy {
    type Err = FormulationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "MULTIPATH" => Ok(RoutingStrategy::Multipath),
            "SINGLEPATH" => Ok(RoutingStrategy::Singlepath),
            _ => Err(FormulationError::UnknownStrategy(s.to_string())),
        }
    }
}

/// Up to `k` shortest paths for every demand, shortest first.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidatePathSet {
    k: usize,
    paths: Vec<Vec<Path>>,
}

impl CandidatePathSet {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Paths of demand `d`.
    pub fn paths(&self, d: usize) -> &[Path] {
        &self.paths[d]
    }

    pub fn per_demand(&self) -> &[Vec<Path>] {
        &self.paths
    }

    /// The candidate set a smaller budget would produce.
    pub fn truncated(&self, k: usize) -> CandidatePathSet {
        assert!(k >= 1 && k <= self.k, "can only shrink a path budget");
        CandidatePathSet {
            k,
            paths: self
                .paths
                .iter()
                .map(|p| p[..p.len().min(k)].to_vec())
                .collect(),
        }
    }

    /// Path cost `ξ_dp`: the total link weight of each path.
    pub fn costs(&self) -> Vec<Vec<f64>> {
        self.paths
            .iter()
            .map(|ps| ps.iter().map(|p| p.total_weight).collect())
            .collect()
    }
}

pub fn build_candidate_paths(
    topo: &Topology,
    tm: &TrafficMatrix,
    k: usize,
) -> Result<CandidatePathSet, FormulationError> {
    if k == 0 {
        return Err(FormulationError::InvalidBudget);
    }
    let paths = tm
        .demands()
        .iter()
        .map(|d| k_shortest_paths(topo, d.src, d.dst, k))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CandidatePathSet { k, paths })
}

pub(crate) fn flow_var_name(d: usize, p: usize) -> String {
    format!("x_{d}_{}", p + 1)
}

/// Flow variables plus demand rows, and the flow terms crossing each link.
struct FlowSkeleton {
    model: LpModel,
    x: Vec<Vec<VarId>>,
    link_terms: Vec<Vec<(VarId, f64)>>,
}

fn flow_skeleton(
    name: &str,
    paths: &CandidatePathSet,
    tm: &TrafficMatrix,
    topo: &Topology,
) -> FlowSkeleton {
    assert_eq!(
        paths.per_demand().len(),
        tm.len(),
        "one path list per demand"
    );
    let mut model = LpModel::new(name);
    let mut link_terms = vec![Vec::new(); topo.links().len()];
    let x: Vec<Vec<VarId>> = paths
        .per_demand()
        .iter()
        .enumerate()
        .map(|(d, ps)| {
            ps.iter()
                .enumerate()
                .map(|(p, path)| {
                    let v = model
                        .add_continuous(flow_var_name(d, p), 0.0, f64::INFINITY)
                        .expect("generated names are unique");
                    for &l in &path.links {
                        link_terms[l].push((v, 1.0));
                    }
                    v
                })
                .collect()
        })
        .collect();
    for (d, demand) in tm.demands().iter().enumerate() {
        let terms = x[d].iter().map(|&v| (v, 1.0)).collect();
        model
            .add_constraint(format!("dem_{d}"), terms, Relation::Eq, demand.volume)
            .expect("finite volume");
    }
    FlowSkeleton {
        model,
        x,
        link_terms,
    }
}

/// Minimum cost routing: `min Σ ξ_dp x_dp` under demand and capacity rows.
pub fn build_mcr(paths: &CandidatePathSet, tm: &TrafficMatrix, topo: &Topology) -> LpModel {
    let FlowSkeleton {
        mut model,
        x,
        link_terms,
    } = flow_skeleton("mcr", paths, tm, topo);
    for (l, terms) in link_terms.into_iter().enumerate() {
        if !terms.is_empty() {
            model
                .add_constraint(
                    format!("cap_{l}"),
                    terms,
                    Relation::Le,
                    topo.link(l).capacity,
                )
                .expect("finite capacity");
        }
    }
    let objective = paths
        .per_demand()
        .iter()
        .zip(&x)
        .flat_map(|(ps, xs)| ps.iter().zip(xs).map(|(p, &v)| (v, p.total_weight)))
        .collect();
    model
        .set_objective(Sense::Minimize, objective)
        .expect("known variables");
    model
}

/// Load balancing: `min r` with every link load at most `c_l * r`.
pub fn build_lb(paths: &CandidatePathSet, tm: &TrafficMatrix, topo: &Topology) -> LpModel {
    let FlowSkeleton {
        mut model,
        link_terms,
        ..
    } = flow_skeleton("lb", paths, tm, topo);
    let r = model
        .add_continuous("r", 0.0, f64::INFINITY)
        .expect("unique name");
    for (l, mut terms) in link_terms.into_iter().enumerate() {
        if !terms.is_empty() {
            terms.push((r, -topo.link(l).capacity));
            model
                .add_constraint(format!("cap_{l}"), terms, Relation::Le, 0.0)
                .expect("finite capacity");
        }
    }
    model
        .set_objective(Sense::Minimize, vec![(r, 1.0)])
        .expect("known variable");
    model
}

/// Average delay: `min Σ r_l / c_l` with `r_l` above every delay piece at load `y_l`.
pub fn build_ad(paths: &CandidatePathSet, tm: &TrafficMatrix, topo: &Topology) -> LpModel {
    let FlowSkeleton {
        mut model,
        link_terms,
        ..
    } = flow_skeleton("ad", paths, tm, topo);
    let mut objective = Vec::new();
    for (l, mut terms) in link_terms.into_iter().enumerate() {
        if terms.is_empty() {
            continue;
        }
        let c = topo.link(l).capacity;
        let y = model
            .add_continuous(format!("y_{l}"), 0.0, f64::INFINITY)
            .expect("unique name");
        let r = model
            .add_continuous(format!("r_{l}"), 0.0, f64::INFINITY)
            .expect("unique name");
        terms.iter_mut().for_each(|t| t.1 = -1.0);
        terms.push((y, 1.0));
        model
            .add_constraint(format!("load_{l}"), terms, Relation::Eq, 0.0)
            .expect("known variables");
        for (i, &(a, b)) in PLA_PIECES.iter().enumerate() {
            model
                .add_constraint(
                    format!("pla_{l}_{i}"),
                    vec![(r, 1.0), (y, -a)],
                    Relation::Ge,
                    -b * c,
                )
                .expect("finite coefficients");
        }
        objective.push((r, 1.0 / c));
    }
    model
        .set_objective(Sense::Minimize, objective)
        .expect("known variables");
    model
}

pub fn build_model(
    objective: ObjectiveKind,
    paths: &CandidatePathSet,
    tm: &TrafficMatrix,
    topo: &Topology,
) -> LpModel {
    match objective {
        ObjectiveKind::Mcr => build_mcr(paths, tm, topo),
        ObjectiveKind::Lb => build_lb(paths, tm, topo),
        ObjectiveKind::Ad => build_ad(paths, tm, topo),
    }
}

/// Adds a binary `u_{d}_{p}` per path with `x_dp <= h_d u_dp` and `Σ_p u_dp = 1`.
///
/// Demands with zero volume or a single candidate path have nothing to
/// choose and get no binaries.
pub fn apply_single_path(model: &LpModel, paths: &CandidatePathSet, tm: &TrafficMatrix) -> LpModel {
    let mut model = model.clone();
    for (d, (ps, demand)) in paths.per_demand().iter().zip(tm.demands()).enumerate() {
        if demand.volume == 0.0 || ps.len() < 2 {
            continue;
        }
        let mut pick = Vec::with_capacity(ps.len());
        for p in 0..ps.len() {
            let x = model
                .var_id(&flow_var_name(d, p))
                .expect("model was built from the same path set");
            let u = model
                .add_binary(format!("u_{d}_{}", p + 1))
                .expect("unique name");
            model
                .add_constraint(
                    format!("use_{d}_{}", p + 1),
                    vec![(x, 1.0), (u, -demand.volume)],
                    Relation::Le,
                    0.0,
                )
                .expect("finite volume");
            pick.push((u, 1.0));
        }
        model
            .add_constraint(format!("pick_{d}"), pick, Relation::Eq, 1.0)
            .expect("known variables");
    }
    model
}
