//! Experiment grids: configuration, instance expansion, parallel execution
//! and the resulting dataset.
//!
//! Instances that differ only in objective, path budget or routing strategy
//! share one topology, one traffic matrix and one candidate path set.

mod config;
mod dataset;
mod run;

pub use config::{
    parse_config, parse_config_str, ConfigError, ExperimentConfig, DEFAULT_NODE_LIMIT,
};
pub use dataset::{read_jsonl, write_csv, write_jsonl, Dataset, DatasetError, CSV_COLUMNS};
pub use run::{
    flow_agg_per_path, instance_model, residual_capacity_pct, run_all, run_instance,
    InstanceRecord, LinkMetrics, RecordStatus, RunError,
};

use serde::{Deserialize, Serialize};

use crate::formulations::{ObjectiveKind, RoutingStrategy};
use crate::topology::{CapacityType, WeightSetting};
use crate::traffic::TmModel;

/// One concrete choice from every configuration dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub l: usize,
    /// Topology repetition within its `(n, l)` cell.
    pub topo_index: usize,
    pub capacity_type: CapacityType,
    pub weight_setting: WeightSetting,
    pub tm_type: TmModel,
    /// Traffic matrix repetition within its topology.
    pub tm_index: usize,
    pub network_load: f64,
    pub objective: ObjectiveKind,
    pub k: usize,
    pub strategy: RoutingStrategy,
    pub topo_seed: u64,
    pub tm_seed: u64,
}

impl InstanceSpec {
    /// Identifies the shared topology.
    pub(crate) fn topology_key(&self) -> (usize, usize, usize) {
        (self.n, self.l, self.topo_index)
    }

    /// Identifies the shared scaled traffic matrix.
    pub(crate) fn traffic_key(&self) -> (usize, usize, usize, TmModel, usize, u64) {
        (
            self.n,
            self.l,
            self.topo_index,
            self.tm_type,
            self.tm_index,
            self.network_load.to_bits(),
        )
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of a sequence of words.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0, |h, &p| splitmix64(h ^ splitmix64(p)))
}

fn tm_code(tm: TmModel) -> u64 {
    match tm {
        TmModel::Gravity => 0,
        TmModel::Bimodal => 1,
        TmModel::Lognormal => 2,
    }
}

/// Seed of topology `topo_index` in cell `(n, l)`.
pub fn topology_seed(master_seed: u64, n: usize, l: usize, topo_index: usize) -> u64 {
    derive_seed(&[master_seed, n as u64, l as u64, topo_index as u64])
}

/// Seed of traffic matrix `tm_index` of model `tm` on a topology.
pub fn traffic_seed(topo_seed: u64, tm: TmModel, tm_index: usize) -> u64 {
    derive_seed(&[topo_seed, tm_code(tm), tm_index as u64])
}

/// Full cartesian product of the configuration, in a fixed nesting order:
/// n, l, topology, capacity type, weight setting, TM model, TM, load,
/// objective, path budget, routing strategy.
pub fn expand_instances(cfg: &ExperimentConfig) -> Vec<InstanceSpec> {
    let mut out = Vec::new();
    for &n in &cfg.n {
        for &l in &cfg.l {
            for topo_index in 0..cfg.nu_of_topos_per_n_l {
                let topo_seed = topology_seed(cfg.master_seed, n, l, topo_index);
                for &capacity_type in &cfg.capacity_type {
                    for &weight_setting in &cfg.weight_setting {
                        for &tm_type in &cfg.tm_types {
                            for tm_index in 0..cfg.nu_of_tms_per_topo {
                                let tm_seed = traffic_seed(topo_seed, tm_type, tm_index);
                                for &network_load in &cfg.network_load {
                                    for &objective in &cfg.objectives {
                                        for &k in &cfg.candidate_paths {
                                            for &strategy in &cfg.routing_strategies {
                                                out.push(InstanceSpec {
                                                    n,
                                                    l,
                                                    topo_index,
                                                    capacity_type,
                                                    weight_setting,
                                                    tm_type,
                                                    tm_index,
                                                    network_load,
                                                    objective,
                                                    k,
                                                    strategy,
                                                    topo_seed,
                                                    tm_seed,
                                                });
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Number of instances [`expand_instances`] produces.
pub fn instance_count(cfg: &ExperimentConfig) -> usize {
    [
        cfg.n.len(),
        cfg.l.len(),
        cfg.nu_of_topos_per_n_l,
        cfg.capacity_type.len(),
        cfg.weight_setting.len(),
        cfg.tm_types.len(),
        cfg.nu_of_tms_per_topo,
        cfg.network_load.len(),
        cfg.objectives.len(),
        cfg.candidate_paths.len(),
        cfg.routing_strategies.len(),
    ]
    .iter()
    .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig::single(
            5,
            6,
            TmModel::Gravity,
            0.5,
            ObjectiveKind::Lb,
            2,
            RoutingStrategy::Multipath,
        )
    }

    #[test]
    fn singleton_grid() {
        let specs = expand_instances(&base());
        assert_eq!(specs.len(), 1);
        assert_eq!(specs[0].topo_seed, topology_seed(0, 5, 6, 0));
    }

    #[test]
    fn seeds_depend_on_their_inputs_only() {
        let a = topology_seed(1, 10, 20, 3);
        assert_eq!(a, topology_seed(1, 10, 20, 3));
        assert_ne!(a, topology_seed(2, 10, 20, 3));
        assert_ne!(a, topology_seed(1, 10, 20, 4));
        assert_ne!(a, topology_seed(1, 20, 10, 3));
        assert_ne!(
            traffic_seed(a, TmModel::Gravity, 0),
            traffic_seed(a, TmModel::Bimodal, 0)
        );
    }

    #[test]
    fn adding_a_value_keeps_existing_seeds() {
        let mut wide = base();
        wide.n = vec![4, 5];
        wide.l = vec![6];
        let narrow: Vec<_> = expand_instances(&base());
        let kept: Vec<_> = expand_instances(&wide)
            .into_iter()
            .filter(|s| s.n == 5)
            .collect();
        assert_eq!(narrow, kept);
    }

    proptest! {
        #[test]
        fn count_is_product_of_dimensions(
            ns in 1usize..3, ls in 1usize..3, topos in 1usize..3, tms in 1usize..3,
            models in 1usize..4, loads in 1usize..3, objs in 1usize..4, ks in 1usize..3, strats in 1usize..3,
        ) {
            let cfg = ExperimentConfig {
                n: (5..5 + ns).collect(),
                l: (6..6 + ls).collect(),
                nu_of_topos_per_n_l: topos,
                nu_of_tms_per_topo: tms,
                tm_types: [TmModel::Gravity, TmModel::Bimodal, TmModel::Lognormal][..models].to_vec(),
                network_load: [0.3, 0.6][..loads].to_vec(),
                objectives: [ObjectiveKind::Lb, ObjectiveKind::Ad, ObjectiveKind::Mcr][..objs].to_vec(),
                candidate_paths: (1..=ks).collect(),
                routing_strategies: [RoutingStrategy::Multipath, RoutingStrategy::Singlepath][..strats].to_vec(),
                ..base()
            };
            let specs = expand_instances(&cfg);
            prop_assert_eq!(specs.len(), ns * ls * topos * tms * models * loads * objs * ks * strats);
            prop_assert_eq!(specs.len(), instance_count(&cfg));
            let mut doubled = cfg.clone();
            doubled.routing_strategies = vec![RoutingStrategy::Multipath, RoutingStrategy::Singlepath];
            doubled.objectives = cfg.objectives.clone();
            prop_assert_eq!(instance_count(&doubled) * strats, specs.len() * 2);
        }
    }
}
