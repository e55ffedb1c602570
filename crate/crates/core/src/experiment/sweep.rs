use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use super::{
    build_id, execute, write_error, write_json, Cell, ExperimentConfig, Outcome, Scenario, Table,
};
use crate::error::{Error, Result};

const SWEEP_KEYS: [&str; 4] = ["scenario", "axis", "values", "workers"];

/// Runs the child scenario once per value of `axis`, each into
/// `<out>/<axis>-<value>/`, and aggregates the metrics into `sweep.csv`.
/// At most `workers` children run at once. A failing child aborts the sweep
/// after the finished children and the partial table have been written.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Table> {
    if cfg.scenario != Scenario::Sweep {
        return Err(Error::Config(format!("{} is not a sweep", cfg.scenario)));
    }
    let params = cfg.resolved()?;
    let child: Scenario = params.get("scenario")?.parse()?;
    if child == Scenario::Sweep {
        return Err(Error::Config("sweeps do not nest".into()));
    }
    let axis = params.get("axis")?.to_string();
    if !child.defaults().iter().any(|(k, _)| *k == axis) {
        return Err(Error::Config(format!(
            "`{axis}` is not a parameter of {child}"
        )));
    }
    let values: Vec<String> = params
        .get("values")?
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(String::from)
        .collect();
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let workers = match params.map().get("workers") {
        Some(w) => w
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("cannot parse `workers` = `{w}`")))?
            .max(1),
        None => 1,
    };

    let children: Vec<ExperimentConfig> = values
        .iter()
        .map(|v| {
            let mut c = ExperimentConfig::new(child, cfg.output_dir.join(format!("{axis}-{v}")));
            for (k, val) in &cfg.params {
                if !SWEEP_KEYS.contains(&k.as_str()) {
                    c.params.insert(k.clone(), val.clone());
                }
            }
            c.params.insert(axis.clone(), v.clone());
            c
        })
        .collect();
    for c in &children {
        c.resolved()?;
    }

    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<Outcome>> = pool.install(|| {
        children
            .par_iter()
            .map(|c| {
                let r = execute(c).and_then(|o| {
                    o.write(&c.output_dir)?;
                    Ok(o)
                });
                if let Err(e) = &r {
                    write_error(c, e);
                }
                r
            })
            .collect()
    });

    let mut table: Option<Table> = None;
    let mut first_error = None;
    for (v, r) in values.iter().zip(results) {
        match r {
            Ok(o) => {
                let t = table.get_or_insert_with(|| {
                    let mut header = vec![axis.as_str(), "passed"];
                    header.extend(o.metrics.iter().map(|(k, _)| k.as_str()));
                    Table::new("sweep", &header)
                });
                let mut row = vec![
                    Cell::Real(v.parse().unwrap_or(f64::NAN)),
                    Cell::Id(o.passed() as usize),
                ];
                row.extend(o.metrics.iter().map(|(_, m)| Cell::Real(*m)));
                t.push(row);
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let table = table.unwrap_or_else(|| Table::new("sweep", &[axis.as_str(), "passed"]));
    std::fs::create_dir_all(&cfg.output_dir)?;
    table.write(&cfg.output_dir.join("sweep.csv"))?;
    let dirs: Vec<PathBuf> = children.iter().map(|c| c.output_dir.clone()).collect();
    write_json(
        &cfg.output_dir.join("manifest.json"),
        &json!({
            "scenario": "sweep",
            "config": params,
            "build": build_id(),
            "wall_time_seconds": start.elapsed().as_secs_f64(),
            "children": dirs,
            "complete": first_error.is_none(),
        }),
    )?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(table),
    }
}
