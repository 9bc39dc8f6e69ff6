//! Experiment configuration: a JSON document with a closed schema.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::environment::WeightDistribution;
use crate::error::{LabError, Result};
use crate::estimators::ensemble::{EnsembleSpec, Model};
use crate::estimators::excess::FeReference;
use crate::estimators::kappa::default_offsets;
use crate::estimators::stats::FitWindow;
use crate::estimators::{ChiOptions, XiOptions};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "POLYMER_LAB_WORKERS";

fn default_beta() -> f64 {
    1.0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("polymer-lab-out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    pub dimension: usize,
    pub distribution: WeightDistribution,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub sizes: Vec<u64>,
    pub replicates: usize,
    pub master_seed: u64,
    /// Constant added to every generated weight.
    #[serde(default)]
    pub shift: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; falls back to `POLYMER_LAB_WORKERS`, then to the
    /// number of available cores.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Largest box, in vertices, any single replicate may allocate.
    #[serde(default)]
    pub max_field_vertices: Option<u64>,
    pub estimators: EstimatorSelection,
}

/// Estimators to run; absent entries are skipped.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSelection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<ChiOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<XiOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<KappaOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<RelationOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_f: Option<DeltaFOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_excess: Option<MeanExcessOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concentration: Option<ConcentrationOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub containment: Option<ContainmentOptions>,
}

impl EstimatorSelection {
    pub fn names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut add = |on: bool, name| {
            if on {
                out.push(name)
            }
        };
        add(self.chi.is_some(), "chi");
        add(self.xi.is_some(), "xi");
        add(self.shape.is_some(), "shape");
        add(self.kappa.is_some(), "kappa");
        add(self.relation.is_some(), "relation");
        add(self.delta_f.is_some(), "delta_f");
        add(self.mean_excess.is_some(), "mean_excess");
        add(self.concentration.is_some(), "concentration");
        add(self.containment.is_some(), "containment");
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaOptions {
    /// Signed anti-diagonal offsets `s`; the fan holds `e + s (1, -1, 0, ..)`.
    #[serde(default)]
    pub offsets: Option<Vec<f64>>,
}

impl KappaOptions {
    pub fn offsets(&self) -> Vec<f64> {
        self.offsets.clone().unwrap_or_else(default_offsets)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeOptions {
    /// Directions in the nonnegative orthant; defaults to the anti-diagonal
    /// fan around the diagonal.
    #[serde(default)]
    pub directions: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationOptions {}

fn default_xi_prime() -> f64 {
    0.7
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaFOptions {
    /// Size `n`; defaults to the largest configured size.
    #[serde(default)]
    pub n: Option<u64>,
    #[serde(default = "default_xi_prime")]
    pub xi_prime: f64,
}

impl Default for DeltaFOptions {
    fn default() -> Self {
        Self { n: None, xi_prime: default_xi_prime() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanExcessOptions {
    /// Reference `f(e)`; defaults to the closed form for constant
    /// environments and to a largest-size estimate otherwise.
    #[serde(default)]
    pub reference: Option<FeReference>,
    #[serde(default)]
    pub window: FitWindow,
}

fn default_ts() -> Vec<f64> {
    vec![1.0, 2.0, 3.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationOptions {
    /// Endpoint `z`; defaults to `n e` at the largest size.
    #[serde(default)]
    pub z: Option<Vec<i64>>,
    #[serde(default = "default_ts")]
    pub t: Vec<f64>,
}

impl Default for ConcentrationOptions {
    fn default() -> Self {
        Self { z: None, t: default_ts() }
    }
}

fn default_epsilon() -> f64 {
    0.02
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContainmentOptions {
    /// Level `t` of the sublevel set `B_t`.
    pub t: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

/// Where the value of a configuration key came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamSource {
    Config,
    Default,
    Flag,
    Environment,
}

/// Top-level configuration keys, in schema order.
pub const CONFIG_KEYS: [&str; 12] = [
    "model",
    "dimension",
    "distribution",
    "beta",
    "sizes",
    "replicates",
    "master_seed",
    "shift",
    "output_dir",
    "workers",
    "max_field_vertices",
    "estimators",
];

/// A configuration document under construction: the raw JSON plus the
/// source of every top-level key.
#[derive(Clone, Debug)]
pub struct ConfigDraft {
    doc: serde_json::Map<String, Value>,
    provenance: BTreeMap<String, ParamSource>,
}

impl ConfigDraft {
    pub fn empty() -> Self {
        Self { doc: serde_json::Map::new(), provenance: BTreeMap::new() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| LabError::Config(format!("not valid JSON: {e}")))?;
        let Value::Object(doc) = value else {
            return Err(LabError::Config("the configuration must be a JSON object".into()));
        };
        let provenance = doc.keys().map(|k| (k.clone(), ParamSource::Config)).collect();
        Ok(Self { doc, provenance })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Sets a top-level key, recording `source` as its provenance.
    pub fn set(&mut self, key: &str, value: Value, source: ParamSource) {
        self.doc.insert(key.to_string(), value);
        self.provenance.insert(key.to_string(), source);
    }

    pub fn set_if_absent(&mut self, key: &str, value: Value, source: ParamSource) {
        if !self.doc.contains_key(key) {
            self.set(key, value, source);
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.doc.contains_key(key)
    }

    /// Parses and validates the document.
    pub fn finish(self) -> Result<(ExperimentConfig, BTreeMap<String, ParamSource>)> {
        let config: ExperimentConfig = serde_json::from_value(Value::Object(self.doc))
            .map_err(|e| LabError::Config(format!("schema violation: {e}")))?;
        config.validate()?;
        let mut provenance = self.provenance;
        for key in CONFIG_KEYS {
            provenance.entry(key.to_string()).or_insert(ParamSource::Default);
        }
        Ok((config, provenance))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(ConfigDraft::from_json(text)?.finish()?.0)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(ConfigDraft::from_file(path)?.finish()?.0)
    }

    pub fn ensemble(&self) -> EnsembleSpec {
        EnsembleSpec {
            dimension: self.dimension,
            dist: self.distribution.clone(),
            beta: self.beta,
            model: self.model,
            sizes: self.sizes.clone(),
            replicates: self.replicates,
            master_seed: self.master_seed,
            shift: self.shift,
            max_field_vertices: self.max_field_vertices,
        }
    }

    /// Schema-level checks; every failure is a configuration error.
    pub fn validate(&self) -> Result<()> {
        let cfg = |e: LabError| LabError::Config(e.to_string());
        let est = &self.estimators;
        if est.names().is_empty() {
            return Err(LabError::Config("no estimator selected".into()));
        }
        let needs_spread = est.chi.is_some()
            || est.xi.is_some()
            || est.delta_f.is_some()
            || est.mean_excess.is_some()
            || est.concentration.is_some();
        self.ensemble().validate_with(if needs_spread { 2 } else { 1 }).map_err(cfg)?;
        if self.workers == Some(0) {
            return Err(LabError::Config("workers must be at least 1".into()));
        }
        if est.relation.is_some() && (est.chi.is_none() || est.xi.is_none() || est.kappa.is_none()) {
            return Err(LabError::Config("relation needs chi, xi and kappa to be selected".into()));
        }
        if let Some(xi) = &est.xi {
            if !(xi.q > 0.0 && xi.q < 1.0) {
                return Err(LabError::Config(format!("xi.q must lie in (0, 1), got {}", xi.q)));
            }
        }
        if let Some(k) = &est.kappa {
            if self.dimension < 2 {
                return Err(LabError::Config("kappa needs dimension >= 2".into()));
            }
            if k.offsets().iter().any(|s| !(s.abs() < 1.0) || *s == 0.0) {
                return Err(LabError::Config("kappa offsets must be nonzero with |s| < 1".into()));
            }
        }
        if let Some(s) = &est.shape {
            if let Some(dirs) = &s.directions {
                if dirs.is_empty() || dirs.iter().any(|x| x.len() != self.dimension) {
                    return Err(LabError::Config(format!(
                        "shape directions must be nonempty {}-vectors",
                        self.dimension
                    )));
                }
            } else if self.dimension < 2 {
                return Err(LabError::Config("the default shape fan needs dimension >= 2".into()));
            }
        }
        if let Some(df) = &est.delta_f {
            if self.dimension < 2 || !(df.xi_prime > 0.0 && df.xi_prime < 1.0) {
                return Err(LabError::Config("delta_f needs dimension >= 2 and xi_prime in (0, 1)".into()));
            }
            if df.n == Some(0) {
                return Err(LabError::Config("delta_f.n must be positive".into()));
            }
        }
        if let Some(c) = &est.concentration {
            if self.distribution.upper_bound().is_none() {
                return Err(LabError::Config(format!(
                    "concentration needs a bounded distribution, got {}",
                    self.distribution
                )));
            }
            if c.z.as_ref().is_some_and(|z| z.len() != self.dimension || z.iter().any(|&v| v < 0)) {
                return Err(LabError::Config("concentration.z must be a nonnegative vertex".into()));
            }
            if c.t.is_empty() || c.t.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return Err(LabError::Config("concentration.t must be nonnegative reals".into()));
            }
        }
        if let Some(c) = &est.containment {
            if !self.distribution.is_constant() {
                return Err(LabError::Config(
                    "containment compares against the closed form and needs a constant distribution".into(),
                ));
            }
            if !(c.t > 0.0 && c.t.is_finite()) || !(c.epsilon > 0.0 && c.epsilon < 1.0) {
                return Err(LabError::Config("containment needs t > 0 and epsilon in (0, 1)".into()));
            }
        }
        Ok(())
    }

    /// Worker count and where it came from.
    pub fn resolve_workers(&self) -> Result<(usize, ParamSource)> {
        if let Some(w) = self.workers {
            return Ok((w, ParamSource::Config));
        }
        if let Ok(text) = std::env::var(WORKERS_ENV) {
            let w: usize =
                text.trim().parse().ok().filter(|&w| w > 0).ok_or_else(|| {
                    LabError::Config(format!("{WORKERS_ENV} must be a positive integer, got {text:?}"))
                })?;
            return Ok((w, ParamSource::Environment));
        }
        let w = std::thread::available_parallelism().map_or(1, |n| n.get());
        Ok((w, ParamSource::Default))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "model": "polymer",
        "dimension": 2,
        "distribution": {"kind": "constant", "value": 1.0},
        "sizes": [8],
        "replicates": 1,
        "master_seed": 1,
        "estimators": {"shape": {}}
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let (cfg, prov) = ConfigDraft::from_json(MINIMAL).unwrap().finish().unwrap();
        assert_eq!(cfg.beta, 1.0);
        assert_eq!(cfg.estimators.names(), vec!["shape"]);
        assert_eq!(prov["beta"], ParamSource::Default);
        assert_eq!(prov["model"], ParamSource::Config);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let typo = MINIMAL.replace("\"master_seed\"", "\"master_sed\"");
        let err = ExperimentConfig::from_json(&typo).unwrap_err();
        assert!(matches!(err, LabError::Config(_)));
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("master_sed"), "{err}");
        let unknown_estimator = MINIMAL.replace("\"shape\": {}", "\"curvature\": {}");
        assert!(matches!(ExperimentConfig::from_json(&unknown_estimator), Err(LabError::Config(_))));
    }

    #[test]
    fn cross_field_checks() {
        let no_parts = MINIMAL.replace("\"shape\": {}", "\"relation\": {}");
        assert!(ExperimentConfig::from_json(&no_parts).unwrap_err().to_string().contains("relation"));
        let chi_one_rep = MINIMAL.replace("\"shape\": {}", "\"chi\": {}");
        assert!(matches!(ExperimentConfig::from_json(&chi_one_rep), Err(LabError::Config(_))));
    }

    #[test]
    fn overrides_record_provenance() {
        let mut draft = ConfigDraft::from_json(MINIMAL).unwrap();
        draft.set("master_seed", Value::from(9u64), ParamSource::Flag);
        let (cfg, prov) = draft.finish().unwrap();
        assert_eq!(cfg.master_seed, 9);
        assert_eq!(prov["master_seed"], ParamSource::Flag);
    }
}
