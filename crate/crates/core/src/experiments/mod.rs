//! Named experiments with embedded acceptance thresholds.
//!
//! Every experiment reads its options from the `options` object of an
//! [`ExperimentConfig`], fills in defaults, runs, and returns checks and
//! tables. The resolved configuration reproduces the run exactly.

mod bulk_side;
mod duality;
mod edge_side;
mod sweep;
mod thermo;
mod topological;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::edge::CutoffSpec;
use crate::ensemble::{resolve_threads, task_seed};
use crate::error::{config, Error, Result};

pub use bulk_side::{BirkhoffOptions, EquilibriumOptions};
pub use duality::{CleanDuality, DisorderedDuality, DualityOptions};
pub use edge_side::{EdgePerturbOptions, GIndependenceOptions, ProfileOptions};
pub use sweep::SweepOptions;
pub use thermo::{LandauCheckOptions, Lattice, MEqualsIOptions};
pub use topological::{GapWindow, SpectralFlowOptions, StredaOptions, ZeroTOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    LandauCheck,
    Duality,
    Mequalsi,
    GIndependence,
    Equilibrium,
    ZeroT,
    Streda,
    SpectralFlow,
    EdgePerturb,
    Profile,
    Birkhoff,
    Sweep,
}

impl ExperimentId {
    pub const ALL: [Self; 12] = [
        Self::LandauCheck,
        Self::Duality,
        Self::Mequalsi,
        Self::GIndependence,
        Self::Equilibrium,
        Self::ZeroT,
        Self::Streda,
        Self::SpectralFlow,
        Self::EdgePerturb,
        Self::Profile,
        Self::Birkhoff,
        Self::Sweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::LandauCheck => "landau-check",
            Self::Duality => "duality",
            Self::Mequalsi => "mequalsi",
            Self::GIndependence => "g-independence",
            Self::Equilibrium => "equilibrium",
            Self::ZeroT => "zero-t",
            Self::Streda => "streda",
            Self::SpectralFlow => "spectral-flow",
            Self::EdgePerturb => "edge-perturb",
            Self::Profile => "profile",
            Self::Birkhoff => "birkhoff",
            Self::Sweep => "sweep",
        }
    }

    fn default_thresholds(self) -> Vec<(&'static str, f64)> {
        match self {
            Self::LandauCheck => thermo::LANDAU_THRESHOLDS.to_vec(),
            Self::Duality => duality::THRESHOLDS.to_vec(),
            Self::Mequalsi => thermo::MEQUALSI_THRESHOLDS.to_vec(),
            Self::GIndependence => edge_side::G_THRESHOLDS.to_vec(),
            Self::Equilibrium => bulk_side::EQUILIBRIUM_THRESHOLDS.to_vec(),
            Self::ZeroT => topological::ZERO_T_THRESHOLDS.to_vec(),
            Self::Streda => topological::STREDA_THRESHOLDS.to_vec(),
            Self::SpectralFlow => topological::FLOW_THRESHOLDS.to_vec(),
            Self::EdgePerturb => edge_side::PERTURB_THRESHOLDS.to_vec(),
            Self::Profile => edge_side::PROFILE_THRESHOLDS.to_vec(),
            Self::Birkhoff => bulk_side::BIRKHOFF_THRESHOLDS.to_vec(),
            Self::Sweep => sweep::THRESHOLDS.to_vec(),
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// One config file. Options not given take the acceptance defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentId>,
    /// Master seed; every disorder sample is derived from it and a stable label.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<CutoffSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_count: Option<usize>,
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
    #[serde(default)]
    pub options: serde_json::Value,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentId) -> Self {
        Self {
            experiment: Some(experiment),
            ..Self::default()
        }
    }

    /// Parses a config file, or the `resolved_config` of a previous summary.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::Config(format!("config is not valid JSON: {e}")))?;
        let v = match v {
            serde_json::Value::Object(mut m) if m.contains_key("resolved_config") && m.contains_key("checks") => {
                m.remove("resolved_config").unwrap()
            }
            other => other,
        };
        serde_json::from_value(v).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json_str(&s)
    }
}

/// Threshold values of one experiment after applying overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct Thresholds(BTreeMap<String, f64>);

impl Thresholds {
    fn resolve(id: ExperimentId, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        let mut m: BTreeMap<String, f64> = id
            .default_thresholds()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        for (k, v) in overrides {
            if !m.contains_key(k) {
                let known: Vec<&str> = m.keys().map(String::as_str).collect();
                return config(format!("unknown threshold `{k}` for {id} (known: {})", known.join(", ")));
            }
            if !v.is_finite() {
                return config(format!("threshold `{k}` must be finite"));
            }
            m.insert(k.clone(), *v);
        }
        Ok(Self(m))
    }

    pub fn get(&self, name: &str) -> f64 {
        *self
            .0
            .get(name)
            .unwrap_or_else(|| panic!("threshold `{name}` is not declared"))
    }

    pub fn as_map(&self) -> &BTreeMap<String, f64> {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, threshold: f64) -> Self {
        let pass = match relation {
            Relation::AtMost => value <= threshold,
            Relation::Below => value < threshold,
            Relation::AtLeast => value >= threshold,
        };
        Self {
            name: name.into(),
            value,
            threshold,
            relation,
            pass,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::AtMost, threshold)
    }

    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::Below, threshold)
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::AtLeast, threshold)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = match self.relation {
            Relation::AtMost => "<=",
            Relation::Below => "<",
            Relation::AtLeast => ">=",
        };
        write!(
            f,
            "{} {}: {:e} {rel} {:e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.threshold
        )
    }
}

/// A CSV artifact; cells are preformatted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(f64::to_string).collect());
    }

    pub fn push_strings(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let out = std::fs::File::create(path).map_err(|source| Error::Output {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub experiment: ExperimentId,
    pub resolved_config: ExperimentConfig,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl ExperimentOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// `summary.json` plus one CSV per table, in `dir` (created if needed).
    pub fn write_artifacts(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Output {
            path: dir.to_path_buf(),
            source,
        })?;
        for t in &self.tables {
            t.write_csv(&dir.join(format!("{}.csv", t.name)))?;
        }
        let path = dir.join("summary.json");
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, s + "\n").map_err(|source| Error::Output { path, source })
    }
}

/// Shared settings handed to every experiment body.
pub struct Context {
    pub seed: u64,
    pub cutoff: Option<CutoffSpec>,
    pub window: Option<[f64; 2]>,
    pub k_count: Option<usize>,
    pub threads: usize,
    pub thresholds: Thresholds,
}

impl Context {
    /// Seed for the sample labelled `label`, independent across labels.
    pub fn derive_seed(&self, label: &str) -> u64 {
        task_seed(self.seed, label)
    }
}

/// Result of an experiment body before the resolved config is attached.
pub struct Outcome {
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

fn parse_options<T: DeserializeOwned + Default>(v: &serde_json::Value) -> Result<T> {
    if v.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("invalid options: {e}")))
}

/// Options of `id` with defaults filled in, as JSON.
pub fn resolved_options(id: ExperimentId, options: &serde_json::Value) -> Result<serde_json::Value> {
    fn go<T: DeserializeOwned + Default + Serialize>(v: &serde_json::Value) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(parse_options::<T>(v)?)?)
    }
    match id {
        ExperimentId::LandauCheck => go::<LandauCheckOptions>(options),
        ExperimentId::Duality => go::<DualityOptions>(options),
        ExperimentId::Mequalsi => go::<MEqualsIOptions>(options),
        ExperimentId::GIndependence => go::<GIndependenceOptions>(options),
        ExperimentId::Equilibrium => go::<EquilibriumOptions>(options),
        ExperimentId::ZeroT => go::<ZeroTOptions>(options),
        ExperimentId::Streda => go::<StredaOptions>(options),
        ExperimentId::SpectralFlow => go::<SpectralFlowOptions>(options),
        ExperimentId::EdgePerturb => go::<EdgePerturbOptions>(options),
        ExperimentId::Profile => go::<ProfileOptions>(options),
        ExperimentId::Birkhoff => go::<BirkhoffOptions>(options),
        ExperimentId::Sweep => go::<SweepOptions>(options),
    }
}

/// Validates the whole config without running anything.
pub fn resolve(id: ExperimentId, cfg: &ExperimentConfig) -> Result<(ExperimentConfig, Context)> {
    if let Some(e) = cfg.experiment {
        if e != id {
            return config(format!("config is for `{e}`, not `{id}`"));
        }
    }
    if let Some(c) = &cfg.cutoff {
        c.validate()?;
    }
    if let Some([lo, hi]) = cfg.window {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return config(format!("window needs finite E- < E+, got [{lo}, {hi}]"));
        }
    }
    if cfg.k_count.is_some_and(|k| k < 3) {
        return config("k_count must be at least 3");
    }
    let thresholds = Thresholds::resolve(id, &cfg.thresholds)?;
    let options = resolved_options(id, &cfg.options)?;
    let threads = resolve_threads(cfg.threads)?;
    let resolved = ExperimentConfig {
        experiment: Some(id),
        thresholds: thresholds.as_map().clone(),
        options,
        ..cfg.clone()
    };
    let ctx = Context {
        seed: cfg.seed,
        cutoff: cfg.cutoff.clone(),
        window: cfg.window,
        k_count: cfg.k_count,
        threads,
        thresholds,
    };
    Ok((resolved, ctx))
}

/// Runs `id` on a pool of the configured width.
pub fn run_experiment(id: ExperimentId, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (resolved, ctx) = resolve(id, cfg)?;
    let opts = &resolved.options;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let outcome = pool.install(|| match id {
        ExperimentId::LandauCheck => thermo::landau_check(&parse_options(opts)?, &ctx),
        ExperimentId::Duality => duality::run(&parse_options(opts)?, &ctx),
        ExperimentId::Mequalsi => thermo::mequalsi(&parse_options(opts)?, &ctx),
        ExperimentId::GIndependence => edge_side::g_independence(&parse_options(opts)?, &ctx),
        ExperimentId::Equilibrium => bulk_side::equilibrium(&parse_options(opts)?, &ctx),
        ExperimentId::ZeroT => topological::zero_t(&parse_options(opts)?, &ctx),
        ExperimentId::Streda => topological::streda(&parse_options(opts)?, &ctx),
        ExperimentId::SpectralFlow => topological::spectral_flow(&parse_options(opts)?, &ctx),
        ExperimentId::EdgePerturb => edge_side::edge_perturb(&parse_options(opts)?, &ctx),
        ExperimentId::Profile => edge_side::profile(&parse_options(opts)?, &ctx),
        ExperimentId::Birkhoff => bulk_side::birkhoff(&parse_options(opts)?, &ctx),
        ExperimentId::Sweep => sweep::run(&parse_options(opts)?, &ctx),
    })?;
    Ok(ExperimentOutput {
        experiment: id,
        resolved_config: resolved,
        checks: outcome.checks,
        tables: outcome.tables,
    })
}

/// `|a − b| / |b|`, or the absolute gap when `b` vanishes.
pub(crate) fn relative(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if b == 0.0 {
        d
    } else {
        d / b.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in ExperimentId::ALL {
            assert_eq!(id.as_str().parse::<ExperimentId>().unwrap(), id);
            let j = serde_json::to_string(&id).unwrap();
            assert_eq!(j, format!("\"{id}\""));
        }
        assert!("dualty".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn every_experiment_resolves_defaults() {
        for id in ExperimentId::ALL {
            let (r, _) = resolve(id, &ExperimentConfig::new(id)).unwrap();
            assert!(r.options.is_object(), "{id}");
            assert!(!r.thresholds.is_empty(), "{id}");
            // The resolved config resolves to itself.
            let (again, _) = resolve(id, &r).unwrap();
            assert_eq!(again, r);
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_json_str(r#"{"sed": 1}"#).is_err());
        let cfg = ExperimentConfig::from_json_str(r#"{"options": {"bogus": 1}}"#).unwrap();
        assert!(resolve(ExperimentId::Duality, &cfg).is_err());
        let cfg = ExperimentConfig::from_json_str(r#"{"thresholds": {"bogus": 1}}"#).unwrap();
        assert!(resolve(ExperimentId::Duality, &cfg).is_err());
        let cfg = ExperimentConfig::new(ExperimentId::Profile);
        assert!(resolve(ExperimentId::Duality, &cfg).is_err());
    }

    #[test]
    fn summary_is_accepted_as_config() {
        let (r, _) = resolve(ExperimentId::Streda, &ExperimentConfig::new(ExperimentId::Streda)).unwrap();
        let out = ExperimentOutput {
            experiment: ExperimentId::Streda,
            resolved_config: r.clone(),
            checks: vec![Check::at_most("x", 0.0, 1.0)],
            tables: Vec::new(),
        };
        let s = serde_json::to_string(&out).unwrap();
        assert_eq!(ExperimentConfig::from_json_str(&s).unwrap(), r);
    }

    #[test]
    fn check_relations() {
        assert!(Check::at_most("a", 1.0, 1.0).pass);
        assert!(!Check::below("a", 1.0, 1.0).pass);
        assert!(Check::at_least("a", 1.0, 1.0).pass);
        assert!(!Check::at_most("a", f64::NAN, 1.0).pass);
    }
}
