//! Read-only analyses over dataset records, with plot-ready exports.
//!
//! Records are paired only when they agree on every field except the one
//! being contrasted. Only records with a routing (status `optimal`, or
//! `feasible` for single-path incumbents where noted) take part.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiment::{InstanceRecord, RecordStatus};
use crate::formulations::{ObjectiveKind, RoutingStrategy};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no paired records for {0}")]
    MissingPairs(String),
    #[error("no records match {0}")]
    EmptySelection(String),
    #[error("export: {0}")]
    Io(#[from] std::io::Error),
    #[error("export: {0}")]
    Csv(#[from] csv::Error),
    #[error("export: {0}")]
    Json(#[from] serde_json::Error),
}

/// Everything that identifies an instance apart from objective, budget and strategy.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Origin {
    n: usize,
    l: usize,
    topo_index: usize,
    tm_index: usize,
    topo_seed: u64,
    tm_seed: u64,
    tm_type: String,
    load_bits: u64,
}

impl Origin {
    fn of(r: &InstanceRecord) -> Self {
        Origin {
            n: r.n,
            l: r.l,
            topo_index: r.topo_index,
            tm_index: r.tm_index,
            topo_seed: r.topo_seed,
            tm_seed: r.tm_seed,
            tm_type: r.tm_type.to_string(),
            load_bits: r.network_load.to_bits(),
        }
    }
}

/// `100 (opt_lo - opt_hi) / opt_lo`.
pub fn gap_pct(opt_lo: f64, opt_hi: f64) -> f64 {
    100.0 * (opt_lo - opt_hi) / opt_lo
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCell {
    pub n: usize,
    pub l: usize,
    pub mean_gap_pct: f64,
    pub pairs: usize,
    /// Pairs dropped because the smaller budget's optimum is zero.
    pub excluded_zero: usize,
}

/// Mean optimality gap between two path budgets per `(n, l)` cell, row-major in `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapMatrix {
    pub objective: ObjectiveKind,
    pub k_lo: usize,
    pub k_hi: usize,
    pub cells: Vec<GapCell>,
}

impl GapMatrix {
    pub fn cell(&self, n: usize, l: usize) -> Option<&GapCell> {
        self.cells.iter().find(|c| (c.n, c.l) == (n, l))
    }
}

/// Every paired gap for `objective` between budgets `k_lo` and `k_hi`,
/// grouped by `(n, l)`; second element counts pairs with a zero `opt_lo`.
pub fn gap_pairs(
    records: &[InstanceRecord],
    k_lo: usize,
    k_hi: usize,
    objective: ObjectiveKind,
) -> BTreeMap<(usize, usize), (Vec<f64>, usize)> {
    type Key = (Origin, RoutingStrategy);
    let mut lo: BTreeMap<Key, f64> = BTreeMap::new();
    let mut hi: BTreeMap<Key, f64> = BTreeMap::new();
    let mut cells: BTreeMap<(usize, usize), (Vec<f64>, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.obj_type == objective) {
        if r.k == k_lo || r.k == k_hi {
            cells.entry((r.n, r.l)).or_default();
        }
        let (Some(v), RecordStatus::Optimal) = (r.obj_val, r.status) else {
            continue;
        };
        let key = (Origin::of(r), r.routing_strategy);
        if r.k == k_lo {
            lo.insert(key.clone(), v);
        }
        if r.k == k_hi {
            hi.insert(key, v);
        }
    }
    for (key, a) in &lo {
        let Some(&b) = hi.get(key) else { continue };
        let cell = cells.entry((key.0.n, key.0.l)).or_default();
        if *a == 0.0 {
            cell.1 += 1;
        } else {
            cell.0.push(gap_pct(*a, b));
        }
    }
    cells
}

pub fn analyze_gap(
    records: &[InstanceRecord],
    k_lo: usize,
    k_hi: usize,
    objective: ObjectiveKind,
) -> Result<GapMatrix, AnalysisError> {
    let groups = gap_pairs(records, k_lo, k_hi, objective);
    if groups.is_empty() {
        return Err(AnalysisError::EmptySelection(format!(
            "{objective} at k = {k_lo} or k = {k_hi}"
        )));
    }
    let mut cells = Vec::with_capacity(groups.len());
    for ((n, l), (gaps, excluded_zero)) in groups {
        if gaps.is_empty() && excluded_zero == 0 {
            return Err(AnalysisError::MissingPairs(format!(
                "n = {n}, l = {l}, k = {k_lo} vs {k_hi}"
            )));
        }
        let mean_gap_pct = if gaps.is_empty() {
            0.0
        } else {
            gaps.iter().sum::<f64>() / gaps.len() as f64
        };
        cells.push(GapCell {
            n,
            l,
            mean_gap_pct,
            pairs: gaps.len(),
            excluded_zero,
        });
    }
    Ok(GapMatrix {
        objective,
        k_lo,
        k_hi,
        cells,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
}

impl Summary {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if count % 2 == 1 {
            sorted[count / 2]
        } else {
            (sorted[count / 2 - 1] + sorted[count / 2]) / 2.0
        };
        Some(Summary {
            count,
            mean,
            std: var.sqrt(),
            min: sorted[0],
            max: sorted[count - 1],
            median,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathFlowRow {
    /// 1 for the shortest path.
    pub path_index: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Statistics of the aggregated flow per path index across records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathFlowStats {
    pub objective: ObjectiveKind,
    pub rows: Vec<PathFlowRow>,
}

impl PathFlowStats {
    /// Row for 1-based `path_index`.
    pub fn row(&self, path_index: usize) -> Option<&PathFlowRow> {
        self.rows.iter().find(|r| r.path_index == path_index)
    }
}

/// Uses records with status `optimal` or `feasible`.
pub fn analyze_pathflow(
    records: &[InstanceRecord],
    objective: ObjectiveKind,
) -> Result<PathFlowStats, AnalysisError> {
    let mut per_index: Vec<Vec<f64>> = Vec::new();
    for r in records.iter().filter(|r| r.obj_type == objective) {
        if !matches!(r.status, RecordStatus::Optimal | RecordStatus::Feasible) {
            continue;
        }
        for (i, &f) in r.flow_agg_per_path.iter().enumerate() {
            if per_index.len() <= i {
                per_index.resize(i + 1, Vec::new());
            }
            per_index[i].push(f);
        }
    }
    if per_index.is_empty() {
        return Err(AnalysisError::EmptySelection(format!(
            "{objective} with path flows"
        )));
    }
    let rows = per_index
        .iter()
        .enumerate()
        .map(|(i, values)| {
            let s = Summary::of(values).expect("indices are only created with a value");
            PathFlowRow {
                path_index: i + 1,
                mean: s.mean,
                std: s.std,
                min: s.min,
                max: s.max,
                count: s.count,
            }
        })
        .collect();
    Ok(PathFlowStats { objective, rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualGapGroup {
    pub l: usize,
    /// `residual_cap(multipath) - residual_cap(singlepath)` per pair, in percentage points.
    pub gaps: Vec<f64>,
    /// `(multipath, singlepath)` load-balancing objectives of the pairs that have them.
    pub lb_objectives: Vec<(f64, f64)>,
}

/// Residual-capacity gaps between routing strategies, grouped by link-pair count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualGapSeries {
    pub groups: Vec<ResidualGapGroup>,
}

impl ResidualGapSeries {
    pub fn group(&self, l: usize) -> Option<&ResidualGapGroup> {
        self.groups.iter().find(|g| g.l == l)
    }
}

/// Pairs each multipath record with the single-path record of the same
/// instance, objective and budget. Single-path incumbents (`feasible`) count.
pub fn analyze_residual_gap(
    records: &[InstanceRecord],
) -> Result<ResidualGapSeries, AnalysisError> {
    type Key = (Origin, ObjectiveKind, usize);
    let mut multi: BTreeMap<Key, &InstanceRecord> = BTreeMap::new();
    let mut single: BTreeMap<Key, &InstanceRecord> = BTreeMap::new();
    for r in records {
        let usable = match r.routing_strategy {
            RoutingStrategy::Multipath => r.status == RecordStatus::Optimal,
            RoutingStrategy::Singlepath => {
                matches!(r.status, RecordStatus::Optimal | RecordStatus::Feasible)
            }
        };
        if !usable || r.residual_cap.is_none() {
            continue;
        }
        let key = (Origin::of(r), r.obj_type, r.k);
        match r.routing_strategy {
            RoutingStrategy::Multipath => multi.insert(key, r),
            RoutingStrategy::Singlepath => single.insert(key, r),
        };
    }
    let mut groups: BTreeMap<usize, ResidualGapGroup> = BTreeMap::new();
    for (key, m) in &multi {
        let Some(s) = single.get(key) else { continue };
        let g = groups.entry(m.l).or_insert_with(|| ResidualGapGroup {
            l: m.l,
            gaps: Vec::new(),
            lb_objectives: Vec::new(),
        });
        g.gaps
            .push(m.residual_cap.expect("filtered") - s.residual_cap.expect("filtered"));
        if key.1 == ObjectiveKind::Lb {
            if let (Some(a), Some(b)) = (m.obj_val, s.obj_val) {
                g.lb_objectives.push((a, b));
            }
        }
    }
    if groups.is_empty() {
        return Err(AnalysisError::MissingPairs(
            "multipath and single-path records".into(),
        ));
    }
    Ok(ResidualGapSeries {
        groups: groups.into_values().collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            _ => Err(format!("unknown format '{s}' (expected csv or json)")),
        }
    }
}

/// An analysis result that flattens to one table row per cell, index or group.
pub trait Table: Serialize {
    fn header(&self) -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<String>>;

    fn write_csv(&self, out: impl Write) -> Result<(), AnalysisError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for row in self.rows() {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_json(&self, out: impl Write) -> Result<(), AnalysisError> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    fn export(&self, format: ExportFormat, out: impl Write) -> Result<(), AnalysisError> {
        match format {
            ExportFormat::Csv => self.write_csv(out),
            ExportFormat::Json => self.write_json(out),
        }
    }
}

impl Table for GapMatrix {
    fn header(&self) -> Vec<&'static str> {
        vec!["n", "l", "mean_gap_pct"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.cells
            .iter()
            .map(|c| vec![c.n.to_string(), c.l.to_string(), c.mean_gap_pct.to_string()])
            .collect()
    }
}

impl Table for PathFlowStats {
    fn header(&self) -> Vec<&'static str> {
        vec!["path_index", "mean", "std", "min", "max"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.path_index.to_string(),
                    r.mean.to_string(),
                    r.std.to_string(),
                    r.min.to_string(),
                    r.max.to_string(),
                ]
            })
            .collect()
    }
}

impl Table for ResidualGapSeries {
    fn header(&self) -> Vec<&'static str> {
        vec![
            "l",
            "pairs",
            "mean_gap",
            "median_gap",
            "std_gap",
            "min_gap",
            "max_gap",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.groups
            .iter()
            .map(|g| {
                let s = Summary::of(&g.gaps).expect("groups hold at least one pair");
                vec![
                    g.l.to_string(),
                    s.count.to_string(),
                    s.mean.to_string(),
                    s.median.to_string(),
                    s.std.to_string(),
                    s.min.to_string(),
                    s.max.to_string(),
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{read_jsonl, run_all, write_jsonl, ExperimentConfig};
    use crate::traffic::TmModel;
    use proptest::prelude::*;

    fn record(
        n: usize,
        l: usize,
        k: usize,
        obj: ObjectiveKind,
        strategy: RoutingStrategy,
        val: f64,
    ) -> InstanceRecord {
        InstanceRecord {
            n,
            l,
            avg_nodal_degree: Some(2.0 * l as f64 / n as f64),
            network_load: 0.5,
            tm_type: TmModel::Gravity,
            obj_type: obj,
            obj_val: Some(val),
            k,
            routing_strategy: strategy,
            residual_cap: Some(100.0 - 10.0 * val),
            links_utilization_and_residual: BTreeMap::new(),
            flow_agg_per_path: vec![val; k],
            status: RecordStatus::Optimal,
            solve_time: 0.0,
            topo_index: 0,
            tm_index: 0,
            topo_seed: 1,
            tm_seed: 2,
            best_bound: None,
            error: None,
        }
    }

    #[test]
    fn gap_formula() {
        assert!((gap_pct(0.5, 0.4) - 20.0).abs() < 1e-12);
        let rs = [
            record(5, 6, 3, ObjectiveKind::Lb, RoutingStrategy::Multipath, 0.5),
            record(5, 6, 7, ObjectiveKind::Lb, RoutingStrategy::Multipath, 0.4),
        ];
        let m = analyze_gap(&rs, 3, 7, ObjectiveKind::Lb).unwrap();
        assert!((m.cell(5, 6).unwrap().mean_gap_pct - 20.0).abs() < 1e-12);
        let same = analyze_gap(&rs, 3, 3, ObjectiveKind::Lb).unwrap();
        assert_eq!(same.cell(5, 6).unwrap().mean_gap_pct, 0.0);
    }

    #[test]
    fn gap_errors_and_zero_optima() {
        let rs = [
            record(5, 6, 3, ObjectiveKind::Lb, RoutingStrategy::Multipath, 0.5),
            record(5, 7, 3, ObjectiveKind::Lb, RoutingStrategy::Multipath, 0.5),
            record(5, 7, 7, ObjectiveKind::Lb, RoutingStrategy::Multipath, 0.5),
        ];
        assert!(matches!(
            analyze_gap(&rs, 3, 7, ObjectiveKind::Lb),
            Err(AnalysisError::MissingPairs(_))
        ));
        assert!(matches!(
            analyze_gap(&rs, 3, 7, ObjectiveKind::Ad),
            Err(AnalysisError::EmptySelection(_))
        ));
        let zero = [
            record(5, 6, 3, ObjectiveKind::Mcr, RoutingStrategy::Multipath, 0.0),
            record(5, 6, 7, ObjectiveKind::Mcr, RoutingStrategy::Multipath, 0.0),
        ];
        let m = analyze_gap(&zero, 3, 7, ObjectiveKind::Mcr).unwrap();
        assert_eq!((m.cells[0].pairs, m.cells[0].excluded_zero), (0, 1));
    }

    #[test]
    fn gap_never_pairs_other_instances() {
        let mut other = record(5, 6, 7, ObjectiveKind::Lb, RoutingStrategy::Multipath, 0.4);
        other.tm_seed = 99;
        let rs = [
            record(5, 6, 3, ObjectiveKind::Lb, RoutingStrategy::Multipath, 0.5),
            other,
            record(5, 6, 7, ObjectiveKind::Lb, RoutingStrategy::Singlepath, 0.4),
        ];
        assert!(matches!(
            analyze_gap(&rs, 3, 7, ObjectiveKind::Lb),
            Err(AnalysisError::MissingPairs(_))
        ));
    }

    #[test]
    fn pathflow_single_record() {
        let rs = [record(
            5,
            6,
            3,
            ObjectiveKind::Mcr,
            RoutingStrategy::Multipath,
            2.0,
        )];
        let s = analyze_pathflow(&rs, ObjectiveKind::Mcr).unwrap();
        assert_eq!(s.rows.len(), 3);
        for r in &s.rows {
            assert_eq!((r.mean, r.min, r.max, r.std), (2.0, 2.0, 2.0, 0.0));
        }
        assert!(matches!(
            analyze_pathflow(&rs, ObjectiveKind::Lb),
            Err(AnalysisError::EmptySelection(_))
        ));
    }

    #[test]
    fn population_std() {
        let s = Summary::of(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!((s.mean, s.std, s.median), (5.0, 2.0, 4.5));
    }

    #[test]
    fn residual_gap_pairs() {
        let mut s = record(5, 6, 3, ObjectiveKind::Lb, RoutingStrategy::Singlepath, 0.6);
        s.status = RecordStatus::Feasible;
        let rs = [
            record(5, 6, 3, ObjectiveKind::Lb, RoutingStrategy::Multipath, 0.5),
            s,
        ];
        let series = analyze_residual_gap(&rs).unwrap();
        let g = series.group(6).unwrap();
        assert_eq!(g.gaps.len(), 1);
        assert!((g.gaps[0] - 1.0).abs() < 1e-9);
        assert_eq!(g.lb_objectives, vec![(0.5, 0.6)]);
        assert!(matches!(
            analyze_residual_gap(&rs[..1]),
            Err(AnalysisError::MissingPairs(_))
        ));
    }

    #[test]
    fn csv_schemas() {
        let rs = [
            record(5, 6, 3, ObjectiveKind::Lb, RoutingStrategy::Multipath, 0.5),
            record(5, 6, 7, ObjectiveKind::Lb, RoutingStrategy::Multipath, 0.4),
        ];
        let mut out = Vec::new();
        analyze_pathflow(&rs, ObjectiveKind::Lb)
            .unwrap()
            .write_csv(&mut out)
            .unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("path_index,mean,std,min,max\n1,0.45,"));
        let mut out = Vec::new();
        analyze_gap(&rs, 3, 7, ObjectiveKind::Lb)
            .unwrap()
            .write_csv(&mut out)
            .unwrap();
        assert!(String::from_utf8(out)
            .unwrap()
            .starts_with("n,l,mean_gap_pct\n5,6,"));
    }

    #[test]
    fn json_round_trip() {
        let rs = [
            record(5, 6, 3, ObjectiveKind::Lb, RoutingStrategy::Multipath, 0.3),
            record(5, 6, 7, ObjectiveKind::Lb, RoutingStrategy::Multipath, 0.1),
        ];
        let m = analyze_gap(&rs, 3, 7, ObjectiveKind::Lb).unwrap();
        let mut out = Vec::new();
        m.write_json(&mut out).unwrap();
        assert_eq!(serde_json::from_slice::<GapMatrix>(&out).unwrap(), m);
    }

    #[test]
    fn analysis_survives_reload() {
        let mut cfg = ExperimentConfig::single(
            5,
            7,
            TmModel::Gravity,
            0.5,
            ObjectiveKind::Lb,
            1,
            RoutingStrategy::Multipath,
        );
        cfg.candidate_paths = vec![1, 3];
        cfg.routing_strategies.push(RoutingStrategy::Singlepath);
        let data = run_all(&cfg, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        write_jsonl(&data.records, &path).unwrap();
        let back = read_jsonl(&path).unwrap();
        assert_eq!(
            analyze_gap(&data.records, 1, 3, ObjectiveKind::Lb).unwrap(),
            analyze_gap(&back, 1, 3, ObjectiveKind::Lb).unwrap()
        );
        assert_eq!(
            analyze_residual_gap(&data.records).unwrap(),
            analyze_residual_gap(&back).unwrap()
        );
        // one candidate path leaves nothing to choose
        let k1: Vec<_> = back.into_iter().filter(|r| r.k == 1).collect();
        assert_eq!(analyze_residual_gap(&k1).unwrap().groups[0].gaps, vec![0.0]);
    }

    proptest! {
        #[test]
        fn summary_orders(values in proptest::collection::vec(-1e6f64..1e6, 1..40)) {
            let s = Summary::of(&values).unwrap();
            prop_assert!(s.min <= s.mean + 1e-9 && s.mean <= s.max + 1e-9);
            prop_assert!(s.min <= s.median && s.median <= s.max);
            prop_assert!(s.std >= 0.0);
        }
    }
}
