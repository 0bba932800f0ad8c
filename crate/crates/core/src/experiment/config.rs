//! Experiment configuration files.
//!
//! One `key = value` per line; keys are case-insensitive, `#` starts a
//! comment. Values are scalars, quoted or bare words, `{...}` sets or
//! `[...]` lists. Sets keep first-occurrence order and drop repeats.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulations::{ObjectiveKind, RoutingStrategy};
use crate::topology::{check_size, CapacityType, WeightSetting, DEFAULT_MAX_ATTEMPTS};
use crate::traffic::{BimodalParams, LognormalParams, TmModel};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config: {0}")]
    Validation(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: Vec<usize>,
    pub l: Vec<usize>,
    pub nu_of_tms_per_topo: usize,
    pub nu_of_topos_per_n_l: usize,
    pub capacity_type: Vec<CapacityType>,
    pub capacity_set: Vec<f64>,
    pub weight_setting: Vec<WeightSetting>,
    pub tm_types: Vec<TmModel>,
    pub network_load: Vec<f64>,
    pub objectives: Vec<ObjectiveKind>,
    pub candidate_paths: Vec<usize>,
    pub routing_strategies: Vec<RoutingStrategy>,
    pub master_seed: u64,
    /// Topology draws before a connectivity failure is reported.
    pub max_attempts: usize,
    /// Branch-and-bound relaxations per single-path instance.
    pub node_limit: usize,
    pub bimodal: BimodalParams,
    pub lognormal: LognormalParams,
}

impl ExperimentConfig {
    /// A config with one value per dimension and default settings.
    pub fn single(
        n: usize,
        l: usize,
        tm: TmModel,
        load: f64,
        objective: ObjectiveKind,
        k: usize,
        strategy: RoutingStrategy,
    ) -> Self {
        ExperimentConfig {
            n: vec![n],
            l: vec![l],
            nu_of_tms_per_topo: 1,
            nu_of_topos_per_n_l: 1,
            capacity_type: vec![CapacityType::EdgeBetweenness],
            capacity_set: vec![30.0, 35.0, 40.0],
            weight_setting: vec![WeightSetting::InvCap],
            tm_types: vec![tm],
            network_load: vec![load],
            objectives: vec![objective],
            candidate_paths: vec![k],
            routing_strategies: vec![strategy],
            master_seed: 0,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            node_limit: DEFAULT_NODE_LIMIT,
            bimodal: BimodalParams::default(),
            lognormal: LognormalParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError::Validation(m));
        let empty = [
            ("N", self.n.is_empty()),
            ("L", self.l.is_empty()),
            ("capacity_type", self.capacity_type.is_empty()),
            ("capacity_set", self.capacity_set.is_empty()),
            ("weight_setting", self.weight_setting.is_empty()),
            ("tm_types", self.tm_types.is_empty()),
            ("network_load", self.network_load.is_empty()),
            ("objectives", self.objectives.is_empty()),
            ("candidate_paths", self.candidate_paths.is_empty()),
            ("routing_strategies", self.routing_strategies.is_empty()),
        ];
        if let Some((key, _)) = empty.iter().find(|(_, e)| *e) {
            return fail(format!("{key} must not be empty"));
        }
        for &n in &self.n {
            for &l in &self.l {
                if let Err(e) = check_size(n, l) {
                    return fail(format!("N = {n}, L = {l}: {e}"));
                }
            }
        }
        if self.nu_of_tms_per_topo == 0 {
            return fail("nu_of_tms_per_topo must be at least 1".into());
        }
        if self.nu_of_topos_per_n_l == 0 {
            return fail("nu_of_topos_per_n_l must be at least 1".into());
        }
        if let Some(c) = self
            .capacity_set
            .iter()
            .find(|c| !(c.is_finite() && **c > 0.0))
        {
            return fail(format!("capacity_set entry {c} must be positive"));
        }
        if let Some(u) = self
            .network_load
            .iter()
            .find(|u| !(**u > 0.0 && **u <= 1.0))
        {
            return fail(format!("network_load entry {u} must lie in (0, 1]"));
        }
        if self.candidate_paths.contains(&0) {
            return fail("candidate_paths entries must be at least 1".into());
        }
        if self.max_attempts == 0 {
            return fail("max_attempts must be at least 1".into());
        }
        if self.node_limit == 0 {
            return fail("node_limit must be at least 1".into());
        }
        Ok(())
    }
}

pub const DEFAULT_NODE_LIMIT: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
enum Value {
    Scalar(String),
    Set(Vec<String>),
    List(Vec<String>),
}

fn unquote(s: &str) -> Result<String, String> {
    let s = s.trim();
    for q in ['\'', '"'] {
        if let Some(rest) = s.strip_prefix(q) {
            return match rest.strip_suffix(q) {
                Some(inner) if !inner.contains(q) => Ok(inner.to_string()),
                _ => Err(format!("unterminated string {s}")),
            };
        }
    }
    if s.is_empty() {
        return Err("empty value".into());
    }
    Ok(s.to_string())
}

fn parse_items(body: &str) -> Result<Vec<String>, String> {
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut items = Vec::new();
    let mut current = String::new();
    let mut quote: Option<char> = None;
    for c in body.chars() {
        match (quote, c) {
            (None, ',') => {
                items.push(unquote(&current)?);
                current.clear();
            }
            (None, '\'' | '"') => {
                quote = Some(c);
                current.push(c);
            }
            (Some(q), _) if c == q => {
                quote = None;
                current.push(c);
            }
            _ => current.push(c),
        }
    }
    if quote.is_some() {
        return Err(format!("unterminated string in {body}"));
    }
    items.push(unquote(&current)?);
    Ok(items)
}

fn strip_comment(line: &str) -> &str {
    let mut quote: Option<char> = None;
    for (i, c) in line.char_indices() {
        match (quote, c) {
            (None, '#') => return &line[..i],
            (None, '\'' | '"') => quote = Some(c),
            (Some(q), _) if c == q => quote = None,
            _ => {}
        }
    }
    line
}

fn parse_value(raw: &str) -> Result<Value, String> {
    let raw = raw.trim();
    let inner = |open: char, close: char| {
        raw.strip_prefix(open).map(|r| {
            r.strip_suffix(close)
                .ok_or_else(|| format!("missing closing '{close}'"))
        })
    };
    if let Some(body) = inner('{', '}') {
        let mut items = Vec::new();
        for item in parse_items(body?)? {
            if !items.contains(&item) {
                items.push(item);
            }
        }
        return Ok(Value::Set(items));
    }
    if let Some(body) = inner('[', ']') {
        return Ok(Value::List(parse_items(body?)?));
    }
    Ok(Value::Scalar(unquote(raw)?))
}

/// Canonical key for each accepted spelling.
fn canonical_key(key: &str) -> Option<&'static str> {
    Some(match key.to_ascii_lowercase().as_str() {
        "n" => "n",
        "l" => "l",
        "nu_of_tms_per_topo" | "nu_of_tms_per_n_l" => "nu_of_tms_per_topo",
        "nu_of_topos_per_n_l" => "nu_of_topos_per_n_l",
        "capacity_type" => "capacity_type",
        "capacity_set" => "capacity_set",
        "weight_setting" => "weight_setting",
        "tm_types" => "tm_types",
        "network_load" => "network_load",
        "objectives" => "objectives",
        "candidate_paths" => "candidate_paths",
        "routing_strategies" => "routing_strategies",
        "master_seed" => "master_seed",
        "max_attempts" => "max_attempts",
        "node_limit" => "node_limit",
        "bimodal_large_fraction" => "bimodal_large_fraction",
        "bimodal_small_range" => "bimodal_small_range",
        "bimodal_large_range" => "bimodal_large_range",
        "lognormal_mu" => "lognormal_mu",
        "lognormal_sigma" => "lognormal_sigma",
        _ => return None,
    })
}

struct Entries {
    values: BTreeMap<&'static str, (usize, Value)>,
}

impl Entries {
    fn take(&mut self, key: &'static str) -> Option<(usize, Value)> {
        self.values.remove(key)
    }

    fn items<T>(&mut self, key: &'static str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some((line, value)) = self.take(key) else {
            return Ok(None);
        };
        let raw = match value {
            Value::Set(items) | Value::List(items) => items,
            Value::Scalar(s) => vec![s],
        };
        raw.iter()
            .map(|s| {
                s.parse::<T>().map_err(|e| ConfigError::Parse {
                    line,
                    message: format!("{key}: bad entry '{s}': {e}"),
                })
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    fn required<T>(&mut self, key: &'static str) -> Result<Vec<T>, ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.items(key)?
            .ok_or_else(|| ConfigError::Validation(format!("missing key {key}")))
    }

    fn scalar<T>(&mut self, key: &'static str) -> Result<Option<T>, ConfigError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some((line, value)) = self.take(key) else {
            return Ok(None);
        };
        let Value::Scalar(s) = value else {
            return Err(ConfigError::Parse {
                line,
                message: format!("{key} expects a single value"),
            });
        };
        s.parse::<T>().map(Some).map_err(|e| ConfigError::Parse {
            line,
            message: format!("{key}: bad value '{s}': {e}"),
        })
    }

    fn range(&mut self, key: &'static str) -> Result<Option<(f64, f64)>, ConfigError> {
        let line = self.values.get(key).map_or(0, |(l, _)| *l);
        match self.items::<f64>(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 => Ok(Some((v[0], v[1]))),
            Some(_) => Err(ConfigError::Parse {
                line,
                message: format!("{key} expects [lo, hi]"),
            }),
        }
    }
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut values = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError::Parse { line, message };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, got '{content}'")))?;
        let key = key.trim();
        let canon = canonical_key(key).ok_or_else(|| err(format!("unknown key {key}")))?;
        let value = parse_value(value).map_err(|m| err(format!("{key}: {m}")))?;
        if values.insert(canon, (line, value)).is_some() {
            return Err(err(format!("duplicate key {key}")));
        }
    }
    let mut e = Entries { values };

    let count = |e: &mut Entries, key| {
        e.scalar::<usize>(key)?
            .ok_or_else(|| ConfigError::Validation(format!("missing key {key}")))
    };
    let mut bimodal = BimodalParams::default();
    let mut lognormal = LognormalParams::default();
    let cfg = ExperimentConfig {
        n: e.required("n")?,
        l: e.required("l")?,
        nu_of_tms_per_topo: count(&mut e, "nu_of_tms_per_topo")?,
        nu_of_topos_per_n_l: count(&mut e, "nu_of_topos_per_n_l")?,
        capacity_type: e
            .items("capacity_type")?
            .unwrap_or(vec![CapacityType::EdgeBetweenness]),
        capacity_set: e.required("capacity_set")?,
        weight_setting: e
            .items("weight_setting")?
            .unwrap_or(vec![WeightSetting::InvCap]),
        tm_types: e.required("tm_types")?,
        network_load: e.required("network_load")?,
        objectives: e.required("objectives")?,
        candidate_paths: e.required("candidate_paths")?,
        routing_strategies: e.required("routing_strategies")?,
        master_seed: e.scalar("master_seed")?.unwrap_or(0),
        max_attempts: e.scalar("max_attempts")?.unwrap_or(DEFAULT_MAX_ATTEMPTS),
        node_limit: e.scalar("node_limit")?.unwrap_or(DEFAULT_NODE_LIMIT),
        bimodal: {
            if let Some(f) = e.scalar("bimodal_large_fraction")? {
                bimodal.large_fraction = f;
            }
            if let Some(r) = e.range("bimodal_small_range")? {
                bimodal.small_range = r;
            }
            if let Some(r) = e.range("bimodal_large_range")? {
                bimodal.large_range = r;
            }
            bimodal
        },
        lognormal: {
            if let Some(mu) = e.scalar("lognormal_mu")? {
                lognormal.mu = mu;
            }
            if let Some(sigma) = e.scalar("lognormal_sigma")? {
                lognormal.sigma = sigma;
            }
            lognormal
        },
    };
    debug_assert!(e.values.is_empty(), "every canonical key is consumed");
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    parse_config_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "N = {5}\nL = {6}\nNu_of_TMs_Per_TOPO = 1\nNu_of_TOPOs_Per_N_L = 1\n\
        capacity_set = {30}\ntm_types = {'GRAVITY'}\nNetwork_Load = [0.5]\n\
        objectives = {'LB'}\ncandidate_paths = {2}\nrouting_strategies = {'MULTIPATH'}\n";

    #[test]
    fn minimal_with_defaults() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.master_seed, 0);
        assert_eq!(cfg.capacity_type, vec![CapacityType::EdgeBetweenness]);
        assert_eq!(cfg.weight_setting, vec![WeightSetting::InvCap]);
        assert_eq!(cfg.node_limit, DEFAULT_NODE_LIMIT);
        assert_eq!(
            cfg,
            ExperimentConfig {
                capacity_set: vec![30.0],
                ..ExperimentConfig::single(
                    5,
                    6,
                    TmModel::Gravity,
                    0.5,
                    ObjectiveKind::Lb,
                    2,
                    RoutingStrategy::Multipath
                )
            }
        );
    }

    #[test]
    fn sets_drop_repeats_and_comments_are_ignored() {
        let text = MINIMAL.replace("{2}", "{3, 2, 3}  # budgets") + "# trailing\nMASTER_SEED = 7\n";
        let cfg = parse_config_str(&text).unwrap();
        assert_eq!(cfg.candidate_paths, vec![3, 2]);
        assert_eq!(cfg.master_seed, 7);
    }

    #[test]
    fn extra_settings() {
        let text = format!(
            "{MINIMAL}bimodal_small_range = [2, 4]\nbimodal_large_fraction = 0.2\n\
             lognormal_sigma = 0.5\nnode_limit = 50\nmax_attempts = 9\n"
        );
        let cfg = parse_config_str(&text).unwrap();
        assert_eq!(cfg.bimodal.small_range, (2.0, 4.0));
        assert_eq!(cfg.bimodal.large_fraction, 0.2);
        assert_eq!(cfg.lognormal.sigma, 0.5);
        assert_eq!((cfg.node_limit, cfg.max_attempts), (50, 9));
    }

    fn parse_line(text: &str) -> Option<usize> {
        match parse_config_str(text) {
            Err(ConfigError::Parse { line, .. }) => Some(line),
            _ => None,
        }
    }

    #[test]
    fn parse_errors_carry_line() {
        assert_eq!(parse_line(&format!("{MINIMAL}bogus = 1\n")), Some(11));
        assert_eq!(parse_line(&format!("{MINIMAL}N = {{6}}\n")), Some(11));
        assert_eq!(parse_line("N = {5\n"), Some(1));
        assert_eq!(parse_line(&MINIMAL.replace("'LB'", "'XX'")), Some(8));
        assert_eq!(
            parse_line(&MINIMAL.replace("{'GRAVITY'}", "{'GRAVITY}")),
            Some(6)
        );
        assert_eq!(parse_line("just words\n"), Some(1));
        let err = parse_config_str(&format!("{MINIMAL}bogus = 1\n")).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    fn validation(text: &str) -> String {
        match parse_config_str(text) {
            Err(ConfigError::Validation(m)) => m,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn validation_errors_name_the_bound() {
        assert!(validation(&MINIMAL.replace("L = {6}", "L = {20}")).contains("L = 20"));
        assert!(validation(&MINIMAL.replace("{'LB'}", "{}")).contains("objectives"));
        assert!(validation(&MINIMAL.replace("[0.5]", "[1.5]")).contains("network_load"));
        assert!(validation(&MINIMAL.replace("{2}", "{0}")).contains("candidate_paths"));
        assert!(validation(&MINIMAL.replace("L = {6}\n", "")).contains("missing key l"));
    }

    #[test]
    fn both_tm_count_spellings_collide() {
        let text = format!("{MINIMAL}Nu_of_TMs_Per_N_L = 2\n");
        assert_eq!(parse_line(&text), Some(11));
    }
}
