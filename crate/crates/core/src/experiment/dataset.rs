use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ExperimentConfig, InstanceRecord};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("dataset csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Records in expansion order plus the config that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub config: ExperimentConfig,
    pub records: Vec<InstanceRecord>,
}

/// Scalar columns of the flat CSV companion, in order.
pub const CSV_COLUMNS: [&str; 18] = [
    "n",
    "l",
    "avg_nodal_degree",
    "network_load",
    "tm_type",
    "obj_type",
    "obj_val",
    "k",
    "routing_strategy",
    "residual_cap",
    "status",
    "solve_time",
    "topo_index",
    "tm_index",
    "topo_seed",
    "tm_seed",
    "best_bound",
    "error",
];

/// One JSON object per line.
pub fn write_jsonl(records: &[InstanceRecord], path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<InstanceRecord>, DatasetError> {
    let mut records = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line).map_err(|source| DatasetError::Json {
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(records)
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// Scalar fields only; nested per-link and per-path fields are left to the JSONL.
pub fn write_csv(records: &[InstanceRecord], path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        let status = serde_json::to_value(r.status).expect("plain enum");
        w.write_record([
            r.n.to_string(),
            r.l.to_string(),
            opt(r.avg_nodal_degree),
            r.network_load.to_string(),
            r.tm_type.to_string(),
            r.obj_type.to_string(),
            opt(r.obj_val),
            r.k.to_string(),
            r.routing_strategy.to_string(),
            opt(r.residual_cap),
            status.as_str().unwrap_or_default().to_string(),
            r.solve_time.to_string(),
            r.topo_index.to_string(),
            r.tm_index.to_string(),
            r.topo_seed.to_string(),
            r.tm_seed.to_string(),
            opt(r.best_bound),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{expand_instances, run_instance};
    use crate::formulations::{ObjectiveKind, RoutingStrategy};
    use crate::traffic::TmModel;

    fn records() -> Vec<InstanceRecord> {
        let mut cfg = ExperimentConfig::single(
            5,
            7,
            TmModel::Bimodal,
            0.4,
            ObjectiveKind::Ad,
            2,
            RoutingStrategy::Multipath,
        );
        cfg.routing_strategies.push(RoutingStrategy::Singlepath);
        expand_instances(&cfg)
            .iter()
            .map(|s| run_instance(&cfg, s))
            .collect()
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let rs = records();
        write_jsonl(&rs, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(read_jsonl(&path).unwrap(), rs);
    }

    #[test]
    fn csv_has_scalar_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let rs = records();
        write_csv(&rs, &path).unwrap();
        let mut reader = csv::Reader::from_path(&path).unwrap();
        assert_eq!(
            reader.headers().unwrap().iter().collect::<Vec<_>>(),
            CSV_COLUMNS
        );
        let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(&rows[1][8], "SINGLEPATH");
        assert_eq!(rows[0][6].parse::<f64>().unwrap(), rs[0].obj_val.unwrap());
    }

    #[test]
    fn bad_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        std::fs::write(&path, "\n{\"n\": 1}\n").unwrap();
        assert!(matches!(
            read_jsonl(&path),
            Err(DatasetError::Json { line: 2, .. })
        ));
    }
}
