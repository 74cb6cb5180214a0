//! Seeded parameter sweeps: task enumeration, per-task seeds, a sized worker
//! pool, CSV output and grouped statistics.

pub mod observables;

use std::collections::BTreeMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bulk::mean_and_error;
use crate::edge::CutoffSpec;
use crate::error::{config, Error, Result};
use crate::model::{Bump, DisorderLaw, ModelParams};

pub use observables::{
    BulkDensityObservable, EdgeCurrentObservable, EquilibriumCurrentObservable,
    LandauObservable, PressureObservable,
};

/// Environment variable consulted for the worker count when no flag is given.
pub const THREADS_ENV: &str = "BULKEDGE_THREADS";

/// Cylinder shared by every task; `height` is the half-height of a bulk
/// cylinder or the top of an edge cylinder, as the observable requires.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGeometry {
    pub h: f64,
    pub circumference: f64,
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderTemplate {
    #[serde(default)]
    pub law: DisorderLaw,
    #[serde(default)]
    pub bump: Bump,
    #[serde(default)]
    pub x1_period: Option<usize>,
}

impl Default for DisorderTemplate {
    fn default() -> Self {
        Self {
            law: DisorderLaw::Uniform,
            bump: Bump::SiteDelta,
            x1_period: Some(1),
        }
    }
}

fn one(v: f64) -> Vec<f64> {
    vec![v]
}

/// Cartesian sweep over `b × μ × T × L × replica`. Axes left at their default
/// hold the single value of `base` (and L = 20).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub observable: String,
    pub base: ModelParams,
    pub geometry: SweepGeometry,
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(default)]
    pub mu: Vec<f64>,
    #[serde(default, rename = "T")]
    pub temperature: Vec<f64>,
    #[serde(default, rename = "L")]
    pub l: Vec<f64>,
    /// Replica labels; each label and the master seed determine a task seed.
    #[serde(default = "default_replicas")]
    pub replicas: Vec<u64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub cutoff: CutoffSpec,
    #[serde(default)]
    pub disorder: DisorderTemplate,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_replicas() -> Vec<u64> {
    vec![0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub index: usize,
    pub key: String,
    pub b: f64,
    pub mu: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub replica: u64,
    pub seed: u64,
}

impl Task {
    pub fn params(&self, base: &ModelParams) -> ModelParams {
        base.with_b(self.b)
            .with_mu(self.mu)
            .with_temperature(self.temperature)
    }
}

/// First eight bytes (little endian) of `sha256(master_seed_le ‖ key)`.
pub fn task_seed(master_seed: u64, key: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(key.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 yields 32 bytes"))
}

impl SweepPlan {
    pub fn new(observable: &str, base: ModelParams, geometry: SweepGeometry) -> Self {
        Self {
            observable: observable.to_string(),
            base,
            geometry,
            b: Vec::new(),
            mu: Vec::new(),
            temperature: Vec::new(),
            l: Vec::new(),
            replicas: default_replicas(),
            master_seed: 0,
            cutoff: CutoffSpec::default(),
            disorder: DisorderTemplate::default(),
            threads: None,
        }
    }

    fn axes(&self) -> [Vec<f64>; 4] {
        let pick = |v: &Vec<f64>, d: f64| if v.is_empty() { one(d) } else { v.clone() };
        [
            pick(&self.b, self.base.b),
            pick(&self.mu, self.base.mu),
            pick(&self.temperature, self.base.temperature),
            pick(&self.l, 20.0),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas.is_empty() {
            return config("sweep needs at least one replica");
        }
        let mut seen = std::collections::BTreeSet::new();
        if !self.replicas.iter().all(|r| seen.insert(*r)) {
            return config("replica labels must be distinct");
        }
        for (name, axis) in ["b", "mu", "T", "L"].iter().zip(self.axes()) {
            if axis.iter().any(|v| !v.is_finite()) {
                return config(format!("axis {name} holds a non-finite value"));
            }
        }
        let g = self.geometry;
        if !(g.h > 0.0 && g.circumference > 0.0 && g.height > 0.0) {
            return config("sweep geometry needs positive h, circumference and height");
        }
        if self.threads == Some(0) {
            return config("threads must be at least 1");
        }
        self.base.validate()?;
        self.cutoff.validate()
    }

    /// Tasks in row-major order, replicas varying fastest.
    pub fn tasks(&self) -> Vec<Task> {
        let [bs, mus, ts, ls] = self.axes();
        let mut out = Vec::with_capacity(bs.len() * mus.len() * ts.len() * ls.len() * self.replicas.len());
        for &b in &bs {
            for &mu in &mus {
                for &t in &ts {
                    for &l in &ls {
                        for &r in &self.replicas {
                            let key = format!("b={b}|mu={mu}|T={t}|L={l}|replica={r}");
                            out.push(Task {
                                index: out.len(),
                                seed: task_seed(self.master_seed, &key),
                                key,
                                b,
                                mu,
                                temperature: t,
                                l,
                                replica: r,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// A scalar-tuple quantity evaluated once per task.
pub trait Observable: Send + Sync {
    fn name(&self) -> &str;
    fn columns(&self) -> Vec<String>;
    fn evaluate(&self, plan: &SweepPlan, task: &Task) -> Result<Vec<f64>>;
}

pub struct ObservableRegistry {
    entries: BTreeMap<String, Box<dyn Observable>>,
}

impl ObservableRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(LandauObservable));
        r.register(Box::new(BulkDensityObservable));
        r.register(Box::new(PressureObservable));
        r.register(Box::new(EdgeCurrentObservable));
        r.register(Box::new(EquilibriumCurrentObservable));
        r
    }

    pub fn register(&mut self, obs: Box<dyn Observable>) {
        self.entries.insert(obs.name().to_string(), obs);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Observable> {
        self.entries
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownObservable(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub task: Task,
    pub values: std::result::Result<Vec<f64>, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub observable: String,
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

/// Worker count: explicit flag, then `BULKEDGE_THREADS`, then the machine.
pub fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        if n == 0 {
            return config("threads must be at least 1");
        }
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => config(format!("{THREADS_ENV} must be a positive integer, got `{s}`")),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "task panicked".into())
}

fn evaluate_row(obs: &dyn Observable, plan: &SweepPlan, task: &Task, width: usize) -> SweepRow {
    let r = catch_unwind(AssertUnwindSafe(|| obs.evaluate(plan, task)));
    let values = match r {
        Ok(Ok(v)) if v.len() != width => Err(format!(
            "observable returned {} values for {width} columns",
            v.len()
        )),
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(e.to_string()),
        Err(p) => Err(panic_message(p)),
    };
    SweepRow {
        task: task.clone(),
        values,
    }
}

/// Runs every task on a pool of `threads` workers (see [`resolve_threads`]).
/// Rows come back in task order; a failing task only marks its own row.
pub fn run_sweep(plan: &SweepPlan, registry: &ObservableRegistry) -> Result<SweepTable> {
    plan.validate()?;
    let obs = registry.get(&plan.observable)?;
    let threads = resolve_threads(plan.threads)?;
    let tasks = plan.tasks();
    let columns = obs.columns();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let rows = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| evaluate_row(obs, plan, t, columns.len()))
            .collect::<Vec<_>>()
    });
    Ok(SweepTable {
        observable: plan.observable.clone(),
        columns,
        rows,
    })
}

impl SweepTable {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["key", "b", "mu", "T", "L", "replica", "seed", "status"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend(self.columns.iter().cloned());
        h.push("error".into());
        h
    }

    /// Data rows as written to CSV; floats use their shortest round-trip form.
    pub fn records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let t = &r.task;
                let mut rec = vec![
                    t.key.clone(),
                    t.b.to_string(),
                    t.mu.to_string(),
                    t.temperature.to_string(),
                    t.l.to_string(),
                    t.replica.to_string(),
                    t.seed.to_string(),
                ];
                match &r.values {
                    Ok(v) => {
                        rec.push("ok".into());
                        rec.extend(v.iter().map(f64::to_string));
                        rec.push(String::new());
                    }
                    Err(e) => {
                        rec.push("error".into());
                        rec.extend(self.columns.iter().map(|_| String::new()));
                        rec.push(e.clone());
                    }
                }
                rec
            })
            .collect()
    }

    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for rec in self.records() {
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv_to(&mut buf)?;
        Ok(buf)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| Error::Output {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv_to(std::io::BufWriter::new(file))
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.values.is_err()).count()
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Config(format!("no column `{name}` in {}", self.observable)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    B,
    Mu,
    T,
    L,
}

impl Axis {
    fn of(self, t: &Task) -> f64 {
        match self {
            Self::B => t.b,
            Self::Mu => t.mu,
            Self::T => t.temperature,
            Self::L => t.l,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupStat {
    /// Axis values of the group, in `group_by` order.
    pub group: Vec<f64>,
    pub column: String,
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Grouped mean and standard error (sample std / √N) of every column over the
/// successful rows. Groups appear in first-occurrence order.
pub fn aggregate(table: &SweepTable, group_by: &[Axis]) -> Result<Vec<GroupStat>> {
    let mut order: Vec<Vec<f64>> = Vec::new();
    let mut members: Vec<Vec<&Vec<f64>>> = Vec::new();
    for r in &table.rows {
        let g: Vec<f64> = group_by.iter().map(|a| a.of(&r.task)).collect();
        let idx = match order.iter().position(|o| o == &g) {
            Some(i) => i,
            None => {
                order.push(g);
                members.push(Vec::new());
                order.len() - 1
            }
        };
        if let Ok(v) = &r.values {
            members[idx].push(v);
        }
    }
    let mut out = Vec::new();
    for (g, rows) in order.into_iter().zip(members) {
        if rows.is_empty() {
            return Err(Error::EmptyGroup(format!("{g:?}")));
        }
        for (c, name) in table.columns.iter().enumerate() {
            let vals: Vec<f64> = rows.iter().map(|v| v[c]).collect();
            let (mean, std_error) = mean_and_error(&vals)?;
            out.push(GroupStat {
                group: g.clone(),
                column: name.clone(),
                mean,
                std_error,
                n: vals.len(),
            });
        }
    }
    Ok(out)
}
