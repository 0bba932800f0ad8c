use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{expand_instances, ConfigError, Dataset, ExperimentConfig, InstanceSpec};
use crate::formulations::{
    apply_single_path, build_candidate_paths, build_model, decode_solution, single_path_choice,
    single_path_start, CandidatePathSet, FlowAllocation, LinkLoadVector, ObjectiveKind,
    RoutingStrategy,
};
use crate::lp::{solve_lp, solve_milp_report, LpModel, LpStatus, MilpOptions};
use crate::topology::{
    assign_capacities, assign_weights, avg_nodal_degree, generate_topology, Topology,
};
use crate::traffic::{
    bimodal_tm, gravity_tm, lognormal_tm, scale_to_max_utilization, TmModel, TrafficMatrix,
};

/// Relative gap at which single-path branch-and-bound stops.
const MILP_REL_GAP: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    /// Solved to optimality (within the branch-and-bound gap).
    Optimal,
    /// Single-path incumbent found, but the node limit stopped the proof.
    Feasible,
    Infeasible,
    /// Node limit reached before any single-path solution was found.
    NodeLimit,
    /// Instance could not be built or solved; see `error`.
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub capacity: f64,
    pub load: f64,
    pub utilization: f64,
    pub residual: f64,
}

/// One solved instance. Metrics are empty unless a routing was found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub n: usize,
    pub l: usize,
    pub avg_nodal_degree: Option<f64>,
    pub network_load: f64,
    pub tm_type: TmModel,
    pub obj_type: ObjectiveKind,
    pub obj_val: Option<f64>,
    pub k: usize,
    pub routing_strategy: RoutingStrategy,
    /// Percent of total capacity left unused.
    pub residual_cap: Option<f64>,
    /// Keyed `"src-dst"`.
    pub links_utilization_and_residual: BTreeMap<String, LinkMetrics>,
    /// Entry `i` aggregates flow on every demand's `(i+1)`-th shortest path.
    pub flow_agg_per_path: Vec<f64>,
    pub status: RecordStatus,
    /// Seconds spent building, solving and decoding the routing model.
    pub solve_time: f64,
    pub topo_index: usize,
    pub tm_index: usize,
    pub topo_seed: u64,
    pub tm_seed: u64,
    /// Proven objective bound when `status` is `feasible` or `node_limit`.
    pub best_bound: Option<f64>,
    pub error: Option<String>,
}

impl InstanceRecord {
    fn empty(spec: &InstanceSpec, status: RecordStatus) -> Self {
        InstanceRecord {
            n: spec.n,
            l: spec.l,
            avg_nodal_degree: None,
            network_load: spec.network_load,
            tm_type: spec.tm_type,
            obj_type: spec.objective,
            obj_val: None,
            k: spec.k,
            routing_strategy: spec.strategy,
            residual_cap: None,
            links_utilization_and_residual: BTreeMap::new(),
            flow_agg_per_path: Vec::new(),
            status,
            solve_time: 0.0,
            topo_index: spec.topo_index,
            tm_index: spec.tm_index,
            topo_seed: spec.topo_seed,
            tm_seed: spec.tm_seed,
            best_bound: None,
            error: None,
        }
    }

    fn failed(spec: &InstanceSpec, avg_degree: Option<f64>, error: String) -> Self {
        InstanceRecord {
            avg_nodal_degree: avg_degree,
            error: Some(error),
            ..Self::empty(spec, RecordStatus::Error)
        }
    }

    /// Copy with `solve_time` zeroed, for comparisons across runs.
    pub fn without_timing(&self) -> Self {
        InstanceRecord {
            solve_time: 0.0,
            ..self.clone()
        }
    }
}

/// `100 * Σ (c_l - y_l) / Σ c_l`.
pub fn residual_capacity_pct(links: &LinkLoadVector) -> f64 {
    100.0 * links.total_residual() / links.total_capacity()
}

/// Flow summed over demands per path index, shortest first, `k` entries.
pub fn flow_agg_per_path(alloc: &FlowAllocation, k: usize) -> Vec<f64> {
    alloc.per_path_index(k)
}

/// Objects shared by every instance on one traffic matrix.
struct Prepared {
    topo: Topology,
    tm: TrafficMatrix,
    /// Candidate paths at the largest budget in the grid.
    paths: CandidatePathSet,
}

fn build_topology(cfg: &ExperimentConfig, spec: &InstanceSpec) -> Result<Topology, String> {
    let t = generate_topology(spec.n, spec.l, spec.topo_seed, cfg.max_attempts)
        .map_err(|e| e.to_string())?;
    let t = assign_capacities(&t, &cfg.capacity_set).map_err(|e| e.to_string())?;
    Ok(assign_weights(&t, spec.weight_setting))
}

fn prepare(
    cfg: &ExperimentConfig,
    spec: &InstanceSpec,
    topo: &Topology,
    k_max: usize,
) -> Result<Prepared, String> {
    let raw = match spec.tm_type {
        TmModel::Gravity => Ok(gravity_tm(topo, spec.tm_seed)),
        TmModel::Bimodal => bimodal_tm(topo, spec.tm_seed, &cfg.bimodal),
        TmModel::Lognormal => lognormal_tm(topo, spec.tm_seed, &cfg.lognormal),
    }
    .map_err(|e| e.to_string())?;
    let tm = scale_to_max_utilization(&raw, topo, spec.network_load).map_err(|e| e.to_string())?;
    let paths = build_candidate_paths(topo, &tm, k_max).map_err(|e| e.to_string())?;
    Ok(Prepared {
        topo: topo.clone(),
        tm,
        paths,
    })
}

fn solve(cfg: &ExperimentConfig, spec: &InstanceSpec, prep: &Prepared) -> InstanceRecord {
    let Prepared { topo, tm, paths } = prep;
    let degree = Some(avg_nodal_degree(topo));
    let paths = paths.truncated(spec.k.min(paths.k()));
    let start = Instant::now();
    let lp = build_model(spec.objective, &paths, tm, topo);
    let multipath = match solve_lp(&lp) {
        Ok(s) => s,
        Err(e) => return InstanceRecord::failed(spec, degree, e.to_string()),
    };
    let empty = |status| InstanceRecord {
        avg_nodal_degree: degree,
        solve_time: start.elapsed().as_secs_f64(),
        ..InstanceRecord::empty(spec, status)
    };
    if multipath.status != LpStatus::Optimal {
        // a single-path restriction of an infeasible multipath model stays infeasible
        return empty(RecordStatus::Infeasible);
    }
    let (solution, status, best_bound) = match spec.strategy {
        RoutingStrategy::Multipath => (multipath, RecordStatus::Optimal, None),
        RoutingStrategy::Singlepath => {
            let hint = decode_solution(
                &multipath,
                &paths,
                tm,
                topo,
                spec.objective,
                RoutingStrategy::Multipath,
            )
            .map(|(alloc, _)| alloc.flows)
            .ok();
            let choice = single_path_choice(spec.objective, &paths, tm, topo, hint.as_deref());
            let milp = apply_single_path(&lp, &paths, tm);
            let opts = MilpOptions {
                node_limit: cfg.node_limit,
                rel_gap: MILP_REL_GAP,
                ..MilpOptions::default()
            };
            match solve_milp_report(&milp, &opts, Some(&single_path_start(&milp, &choice))) {
                Ok(r) if r.solution.status != LpStatus::Optimal => {
                    return empty(RecordStatus::Infeasible);
                }
                Ok(r) if r.proven => (r.solution, RecordStatus::Optimal, None),
                Ok(r) => (r.solution, RecordStatus::Feasible, Some(r.best_bound)),
                Err(crate::lp::LpError::NodeLimitExceeded(_)) => {
                    return empty(RecordStatus::NodeLimit);
                }
                Err(e) => return InstanceRecord::failed(spec, degree, e.to_string()),
            }
        }
    };
    let decoded = decode_solution(&solution, &paths, tm, topo, spec.objective, spec.strategy);
    let solve_time = start.elapsed().as_secs_f64();
    let (alloc, links) = match decoded {
        Ok(d) => d,
        Err(e) => return InstanceRecord::failed(spec, degree, e.to_string()),
    };
    InstanceRecord {
        avg_nodal_degree: degree,
        obj_val: Some(alloc.objective_value),
        residual_cap: Some(residual_capacity_pct(&links)),
        links_utilization_and_residual: links
            .links
            .iter()
            .map(|l| {
                (
                    format!("{}-{}", l.src, l.dst),
                    LinkMetrics {
                        capacity: l.capacity,
                        load: l.load,
                        utilization: l.utilization,
                        residual: l.residual,
                    },
                )
            })
            .collect(),
        flow_agg_per_path: flow_agg_per_path(&alloc, spec.k),
        solve_time,
        best_bound,
        ..InstanceRecord::empty(spec, status)
    }
}

/// Runs one instance end to end. Failures are recorded, never returned.
pub fn run_instance(cfg: &ExperimentConfig, spec: &InstanceSpec) -> InstanceRecord {
    let topo = match build_topology(cfg, spec) {
        Ok(t) => t,
        Err(e) => return InstanceRecord::failed(spec, None, e),
    };
    match prepare(cfg, spec, &topo, spec.k) {
        Ok(p) => solve(cfg, spec, &p),
        Err(e) => InstanceRecord::failed(spec, Some(avg_nodal_degree(&topo)), e),
    }
}

/// The routing model an instance solves, for export to other solvers.
pub fn instance_model(cfg: &ExperimentConfig, spec: &InstanceSpec) -> Result<LpModel, String> {
    let topo = build_topology(cfg, spec)?;
    let Prepared { topo, tm, paths } = prepare(cfg, spec, &topo, spec.k)?;
    let model = build_model(spec.objective, &paths, &tm, &topo);
    Ok(match spec.strategy {
        RoutingStrategy::Multipath => model,
        RoutingStrategy::Singlepath => apply_single_path(&model, &paths, &tm),
    })
}

/// Runs the whole grid on at most `workers` threads. Records come back in
/// expansion order whatever the scheduling.
pub fn run_all(cfg: &ExperimentConfig, workers: usize) -> Result<Dataset, RunError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    let specs = expand_instances(cfg);
    let k_max = *cfg
        .candidate_paths
        .iter()
        .max()
        .expect("validated non-empty");

    let records = pool.install(|| {
        let mut topo_keys: Vec<&InstanceSpec> = Vec::new();
        let mut topo_index = HashMap::new();
        let mut tm_keys: Vec<&InstanceSpec> = Vec::new();
        let mut tm_index = HashMap::new();
        for s in &specs {
            topo_index.entry(s.topology_key()).or_insert_with(|| {
                topo_keys.push(s);
                topo_keys.len() - 1
            });
            tm_index.entry(s.traffic_key()).or_insert_with(|| {
                tm_keys.push(s);
                tm_keys.len() - 1
            });
        }
        let topologies: Vec<Result<Topology, String>> = topo_keys
            .par_iter()
            .map(|s| build_topology(cfg, s))
            .collect();
        let prepared: Vec<Result<Prepared, (String, Option<f64>)>> = tm_keys
            .par_iter()
            .map(|s| match &topologies[topo_index[&s.topology_key()]] {
                Ok(topo) => {
                    prepare(cfg, s, topo, k_max).map_err(|e| (e, Some(avg_nodal_degree(topo))))
                }
                Err(e) => Err((e.clone(), None)),
            })
            .collect();
        specs
            .par_iter()
            .map(|s| match &prepared[tm_index[&s.traffic_key()]] {
                Ok(p) => solve(cfg, s, p),
                Err((e, degree)) => InstanceRecord::failed(s, *degree, e.clone()),
            })
            .collect::<Vec<_>>()
    });
    Ok(Dataset {
        config: cfg.clone(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::LinkLoad;

    fn cfg(objective: ObjectiveKind, k: usize, strategy: RoutingStrategy) -> ExperimentConfig {
        ExperimentConfig::single(6, 9, TmModel::Gravity, 0.6, objective, k, strategy)
    }

    fn link(capacity: f64, load: f64) -> LinkLoad {
        LinkLoad {
            src: 0,
            dst: 1,
            capacity,
            load,
            utilization: load / capacity,
            residual: capacity - load,
        }
    }

    #[test]
    fn residual_percentages() {
        let idle = LinkLoadVector {
            links: vec![link(10.0, 0.0), link(30.0, 0.0)],
        };
        assert_eq!(residual_capacity_pct(&idle), 100.0);
        let half = LinkLoadVector {
            links: vec![link(10.0, 5.0), link(30.0, 15.0)],
        };
        assert_eq!(residual_capacity_pct(&half), 50.0);
    }

    #[test]
    fn record_is_self_consistent() {
        for obj in [ObjectiveKind::Lb, ObjectiveKind::Ad, ObjectiveKind::Mcr] {
            for strategy in [RoutingStrategy::Multipath, RoutingStrategy::Singlepath] {
                let c = cfg(obj, 3, strategy);
                let spec = &expand_instances(&c)[0];
                let r = run_instance(&c, spec);
                assert!(
                    matches!(r.status, RecordStatus::Optimal | RecordStatus::Feasible),
                    "{obj} {strategy}: {r:?}"
                );
                let links = r.links_utilization_and_residual.values();
                let cap: f64 = links.clone().map(|m| m.capacity).sum();
                let res: f64 = links.map(|m| m.residual).sum();
                let pct = r.residual_cap.unwrap();
                assert!((pct - 100.0 * res / cap).abs() <= 1e-9);
                assert!((0.0..=100.0).contains(&pct));
                assert_eq!(r.flow_agg_per_path.len(), 3);
                assert!(r.avg_nodal_degree.unwrap() == 3.0);
            }
        }
    }

    #[test]
    fn repeat_runs_match() {
        let c = cfg(ObjectiveKind::Lb, 2, RoutingStrategy::Singlepath);
        let spec = &expand_instances(&c)[0];
        assert_eq!(
            run_instance(&c, spec).without_timing(),
            run_instance(&c, spec).without_timing()
        );
    }

    #[test]
    fn single_path_budget_one_matches_multipath() {
        let multi = run_instance(
            &cfg(ObjectiveKind::Lb, 1, RoutingStrategy::Multipath),
            &expand_instances(&cfg(ObjectiveKind::Lb, 1, RoutingStrategy::Multipath))[0],
        );
        let c = cfg(ObjectiveKind::Lb, 1, RoutingStrategy::Singlepath);
        let single = run_instance(&c, &expand_instances(&c)[0]);
        assert_eq!(multi.residual_cap, single.residual_cap);
        assert_eq!(multi.obj_val, single.obj_val);
    }

    #[test]
    fn exported_model_matches_record() {
        let c = cfg(ObjectiveKind::Ad, 2, RoutingStrategy::Multipath);
        let spec = &expand_instances(&c)[0];
        let model = instance_model(&c, spec).unwrap();
        let solved = solve_lp(&model).unwrap().objective_value;
        assert!((solved - run_instance(&c, spec).obj_val.unwrap()).abs() < 1e-9);
        let c = cfg(ObjectiveKind::Lb, 2, RoutingStrategy::Singlepath);
        assert!(
            instance_model(&c, &expand_instances(&c)[0])
                .unwrap()
                .num_binaries()
                > 0
        );
    }

    #[test]
    fn errors_are_recorded() {
        let mut c = cfg(ObjectiveKind::Lb, 2, RoutingStrategy::Multipath);
        c.max_attempts = 1;
        c.n = vec![12];
        c.l = vec![11];
        // a random spanning tree on 12 nodes is rare enough to fail in one draw
        let r = run_instance(&c, &expand_instances(&c)[0]);
        assert_eq!(r.status, RecordStatus::Error);
        assert!(r.error.unwrap().contains("connected"));
        assert!(r.obj_val.is_none() && r.links_utilization_and_residual.is_empty());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut c = cfg(ObjectiveKind::Lb, 2, RoutingStrategy::Multipath);
        c.objectives = vec![ObjectiveKind::Lb, ObjectiveKind::Mcr];
        c.candidate_paths = vec![1, 3];
        c.nu_of_topos_per_n_l = 2;
        let strip = |d: Dataset| {
            d.records
                .iter()
                .map(|r| r.without_timing())
                .collect::<Vec<_>>()
        };
        let one = strip(run_all(&c, 1).unwrap());
        assert_eq!(one.len(), 8);
        assert_eq!(one, strip(run_all(&c, 3).unwrap()));
        // shared objects give the same answer as isolated runs
        let specs = expand_instances(&c);
        assert_eq!(one[5], run_instance(&c, &specs[5]).without_timing());
    }
}
