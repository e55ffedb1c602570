//! Reproducible scenarios with flat key=value configs and CSV/JSON outputs.
//!
//! A run resolves its parameters (scenario defaults, then the config file,
//! then overrides), executes, and writes into its output directory:
//! one CSV per result table, `verdicts.json` with one entry per assertion,
//! `manifest.json` echoing the resolved config, and any JSON reports.

mod scenarios;
mod sweep;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};

pub use sweep::sweep;

/// Keys accepted by every scenario.
const GLOBAL_KEYS: [&str; 2] = ["seed", "workers"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    Getoor,
    HeatKernel,
    TailFit,
    Evolve,
    Rescaled,
    BarenblattTrack,
    Propagation,
    SmoothingFit,
    Model1Contrast,
    Obstacle,
    SwarmFlock,
    DiskMinimizer,
    ElCheck,
    Sweep,
}

impl Scenario {
    pub const ALL: [Scenario; 14] = [
        Scenario::Getoor,
        Scenario::HeatKernel,
        Scenario::TailFit,
        Scenario::Evolve,
        Scenario::Rescaled,
        Scenario::BarenblattTrack,
        Scenario::Propagation,
        Scenario::SmoothingFit,
        Scenario::Model1Contrast,
        Scenario::Obstacle,
        Scenario::SwarmFlock,
        Scenario::DiskMinimizer,
        Scenario::ElCheck,
        Scenario::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Getoor => "getoor",
            Scenario::HeatKernel => "heat-kernel",
            Scenario::TailFit => "tail-fit",
            Scenario::Evolve => "evolve",
            Scenario::Rescaled => "rescaled",
            Scenario::BarenblattTrack => "barenblatt-track",
            Scenario::Propagation => "propagation",
            Scenario::SmoothingFit => "smoothing-fit",
            Scenario::Model1Contrast => "model1-contrast",
            Scenario::Obstacle => "obstacle",
            Scenario::SwarmFlock => "swarm-flock",
            Scenario::DiskMinimizer => "disk-minimizer",
            Scenario::ElCheck => "el-check",
            Scenario::Sweep => "sweep",
        }
    }

    /// Recognized keys and their default values.
    pub fn defaults(self) -> &'static [(&'static str, &'static str)] {
        scenarios::defaults(self)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Explicitly set parameters; defaults fill in the rest.
    pub params: BTreeMap<String, String>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            scenario,
            params: BTreeMap::new(),
            output_dir: output_dir.into(),
        }
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn with_file(mut self, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = split_pair(line).map_err(|_| {
                Error::Config(format!(
                    "{}:{}: expected key = value",
                    path.display(),
                    n + 1
                ))
            })?;
            self.params.insert(k, v);
        }
        Ok(self)
    }

    /// Applies one `key=value` override.
    pub fn set(mut self, pair: &str) -> Result<Self> {
        let (k, v) = split_pair(pair)?;
        self.params.insert(k, v);
        Ok(self)
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    /// Defaults overlaid with the explicit parameters; unknown keys are
    /// rejected.
    pub fn resolved(&self) -> Result<Params> {
        let mut map: BTreeMap<String, String> = self
            .scenario
            .defaults()
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let extra = if self.scenario == Scenario::Sweep {
            let child = self
                .params
                .get("scenario")
                .map(String::as_str)
                .unwrap_or(scenarios::default_of(Scenario::Sweep, "scenario"));
            let child: Scenario = child.parse()?;
            child.defaults().iter().map(|(k, _)| *k).collect()
        } else {
            Vec::new()
        };
        for (k, v) in &self.params {
            let known = map.contains_key(k)
                || GLOBAL_KEYS.contains(&k.as_str())
                || extra.contains(&k.as_str());
            if !known {
                return Err(Error::Config(format!(
                    "unknown key `{k}` for scenario {}",
                    self.scenario
                )));
            }
            map.insert(k.clone(), v.clone());
        }
        Ok(Params(map))
    }
}

fn split_pair(pair: &str) -> Result<(String, String)> {
    let (k, v) = pair
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected key=value, got `{pair}`")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(Error::Config(format!("empty key in `{pair}`")));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

/// Resolved parameters with typed accessors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Params(BTreeMap<String, String>);

impl Params {
    pub fn get(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.parse(key)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.parse(key)
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.parse(key)
    }

    /// `None` when the value is `auto`.
    pub fn auto_f64(&self, key: &str) -> Result<Option<f64>> {
        if self.get(key)? == "auto" {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    pub fn auto_usize(&self, key: &str) -> Result<Option<usize>> {
        if self.get(key)? == "auto" {
            Ok(None)
        } else {
            self.usize(key).map(Some)
        }
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| Error::Config(format!("cannot parse `{key}` = `{raw}`")))
    }

    pub fn map(&self) -> &BTreeMap<String, String> {
        &self.0
    }
}

/// One table cell: an integer id or a real number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Id(usize),
    Real(f64),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Id(v)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Id(i) => write!(f, "{i}"),
            Cell::Real(v) => write!(f, "{v:.16e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem; the table is written to `<name>.csv`.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_reals(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| Cell::Real(v)).collect());
    }

    /// Column `name` as reals; ids are converted.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match r[k] {
                    Cell::Id(i) => i as f64,
                    Cell::Real(v) => v,
                })
                .collect(),
        )
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Above,
    Finite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub passed: bool,
}

impl Verdict {
    pub fn new(name: &str, value: f64, relation: Relation, bound: f64) -> Self {
        let passed = match relation {
            Relation::AtMost => value <= bound,
            Relation::AtLeast => value >= bound,
            Relation::Above => value > bound,
            Relation::Finite => value.is_finite(),
        };
        Self {
            name: name.to_string(),
            value,
            relation,
            bound,
            passed,
        }
    }

    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self::new(name, value, Relation::AtMost, bound)
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self::new(name, value, Relation::AtLeast, bound)
    }

    /// `|value / target - 1| ≤ tol`, recorded as the relative deviation.
    pub fn relative(name: &str, value: f64, target: f64, tol: f64) -> Self {
        Self::at_most(name, (value / target - 1.0).abs(), tol)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = match self.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Above => ">",
            Relation::Finite => "finite",
        };
        let tag = if self.passed { "PASS" } else { "FAIL" };
        if self.relation == Relation::Finite {
            write!(f, "{tag} {}: {:.6e} {rel}", self.name, self.value)
        } else {
            write!(
                f,
                "{tag} {}: {:.6e} {rel} {:.6e}",
                self.name, self.value, self.bound
            )
        }
    }
}

/// Everything a scenario produces, before it is written to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub scenario: Scenario,
    pub params: Params,
    pub tables: Vec<Table>,
    /// Named JSON reports, written to `<name>.json`.
    pub reports: Vec<(String, serde_json::Value)>,
    pub verdicts: Vec<Verdict>,
    /// Scalar summaries used by sweeps.
    pub metrics: Vec<(String, f64)>,
    pub wall_time: f64,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| *v)
    }

    /// Writes tables, reports, verdicts and the manifest into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        for t in &self.tables {
            let name = format!("{}.csv", t.name);
            t.write(&dir.join(&name))?;
            files.push(name);
        }
        for (name, value) in &self.reports {
            let name = format!("{name}.json");
            write_json(&dir.join(&name), value)?;
            files.push(name);
        }
        write_json(&dir.join("verdicts.json"), &self.verdicts)?;
        files.push("verdicts.json".into());
        let manifest = json!({
            "scenario": self.scenario.name(),
            "config": self.params,
            "build": build_id(),
            "wall_time_seconds": self.wall_time,
            "passed": self.passed(),
            "files": files,
        });
        write_json(&dir.join("manifest.json"), &manifest)
    }
}

pub fn build_id() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Runs one scenario without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    if cfg.scenario == Scenario::Sweep {
        return Err(Error::Config(
            "sweep writes per-child outputs; use `sweep`".into(),
        ));
    }
    let params = cfg.resolved()?;
    let start = Instant::now();
    let mut out = scenarios::dispatch(cfg.scenario, &params)?;
    out.wall_time = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Runs one scenario and writes its artifacts to `cfg.output_dir`. Failures
/// leave an `error.json` with the diagnostic.
pub fn run_scenario(cfg: &ExperimentConfig) -> Result<Outcome> {
    let result = execute(cfg).and_then(|out| {
        out.write(&cfg.output_dir)?;
        Ok(out)
    });
    if let Err(e) = &result {
        write_error(cfg, e);
    }
    result
}

pub(crate) fn write_error(cfg: &ExperimentConfig, e: &Error) {
    let payload = json!({
        "scenario": cfg.scenario.name(),
        "config": cfg.params,
        "build": build_id(),
        "error": e.to_string(),
    });
    if fs::create_dir_all(&cfg.output_dir).is_ok() {
        let _ = write_json(&cfg.output_dir.join("error.json"), &payload);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_names_round_trip() {
        for sc in Scenario::ALL {
            assert_eq!(sc.name().parse::<Scenario>().unwrap(), sc);
        }
        assert!("nope".parse::<Scenario>().is_err());
    }

    #[test]
    fn overrides_beat_file_and_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.txt");
        fs::write(&path, "# comment\ns = 0.25\nwidth = 3 # trailing\n\n").unwrap();
        let cfg = ExperimentConfig::new(Scenario::Evolve, dir.path())
            .with_file(&path)
            .unwrap()
            .set("s=0.75")
            .unwrap();
        let p = cfg.resolved().unwrap();
        assert_eq!(p.f64("s").unwrap(), 0.75);
        assert_eq!(p.f64("width").unwrap(), 3.0);
        assert_eq!(p.usize("steps").unwrap(), 1000);
        assert!(cfg.clone().set("garbage").is_err());
        assert!(cfg.clone().set("bogus=1").unwrap().resolved().is_err());
        assert!(cfg
            .set("s=abc")
            .unwrap()
            .resolved()
            .unwrap()
            .f64("s")
            .is_err());
    }

    #[test]
    fn cells_use_scientific_notation() {
        assert_eq!(Cell::Real(0.5).to_string(), "5.0000000000000000e-1");
        assert_eq!(Cell::Id(7).to_string(), "7");
    }

    #[test]
    fn verdict_relations() {
        assert!(Verdict::at_most("a", 1.0, 1.0).passed);
        assert!(!Verdict::new("b", 0.0, Relation::Above, 0.0).passed);
        assert!(!Verdict::new("c", f64::INFINITY, Relation::Finite, 0.0).passed);
        let r = Verdict::relative("d", 1.04, 1.0, 0.05);
        assert!(r.passed && (r.value - 0.04).abs() < 1e-12);
    }
}
