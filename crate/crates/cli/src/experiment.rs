//! Running a resolved [`ExperimentSpec`] and writing its CSV/SVG outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use grantfree_aoi::markov::analyze;
use grantfree_aoi::sim::{empirical_aoi, simulate};
use grantfree_aoi::{AoiError, Config, Power, Scheme};
use rayon::prelude::*;
use serde::Serialize;

use crate::plot::{Chart, Line};
use crate::spec::{ExperimentSpec, Preset};
use crate::validate;

/// Variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "GFAOI_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Evaluator {
    Analytical,
    Simulated,
}

impl Evaluator {
    pub fn name(self) -> &'static str {
        match self {
            Evaluator::Analytical => "analytical",
            Evaluator::Simulated => "simulated",
        }
    }
}

/// One CSV data row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub evaluator: Evaluator,
    /// `inf` where the AoI diverges.
    pub aoi_mean_seconds: f64,
    pub aoi_stderr: Option<f64>,
    pub p_fail: f64,
    /// Transmission probability with no user delivered yet.
    pub ptx_used: f64,
    pub seed: Option<u64>,
    pub frames: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub series: String,
    pub evaluator: Evaluator,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub sweep_value: f64,
    pub series: String,
    pub evaluator: Evaluator,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Results {
    pub curves: Vec<Curve>,
    pub ratios: Vec<RatioRow>,
}

impl Results {
    pub fn curve(&self, series: &str, evaluator: Evaluator) -> Option<&Curve> {
        self.curves.iter().find(|c| c.series == series && c.evaluator == evaluator)
    }

    /// AoI of `series` at `sweep_value`.
    pub fn aoi(&self, series: &str, evaluator: Evaluator, sweep_value: f64) -> Option<f64> {
        let curve = self.curve(series, evaluator)?;
        curve.rows.iter().find(|r| r.sweep_value == sweep_value).map(|r| r.aoi_mean_seconds)
    }
}

fn diverged(e: &AoiError) -> Option<f64> {
    match e {
        AoiError::NoAbsorption { p_fail } => Some(*p_fail),
        AoiError::Divergent(_) => Some(1.0),
        _ => None,
    }
}

fn analytical_row(cfg: &Config) -> Result<Row> {
    // the NOMA chain only exists at high SNR
    let chain_cfg = match cfg.scheme {
        Scheme::Noma => cfg.clone().with_power(Power::Infinite),
        Scheme::Oma => cfg.clone(),
    };
    let (aoi, p_fail) = match analyze(&chain_cfg) {
        Ok(a) => (a.for_model(cfg.generation), a.moments.p_fail),
        Err(e) => match diverged(&e) {
            Some(p) => (f64::INFINITY, p),
            None => return Err(e.into()),
        },
    };
    Ok(Row {
        sweep_value: 0.0,
        scheme: cfg.scheme,
        evaluator: Evaluator::Analytical,
        aoi_mean_seconds: aoi,
        aoi_stderr: None,
        p_fail,
        ptx_used: cfg.ptx(0)?,
        seed: None,
        frames: None,
    })
}

fn simulated_row(cfg: &Config, frames: u64, seed: u64) -> Result<Row> {
    let stats = simulate(cfg, frames, seed)?;
    let est = empirical_aoi(&stats)?;
    Ok(Row {
        sweep_value: 0.0,
        scheme: cfg.scheme,
        evaluator: Evaluator::Simulated,
        aoi_mean_seconds: est.mean,
        aoi_stderr: Some(est.stderr).filter(|s| s.is_finite()),
        p_fail: 1.0 - stats.tagged_deliveries as f64 / stats.frames_run as f64,
        ptx_used: cfg.ptx(0)?,
        seed: Some(seed),
        frames: Some(frames),
    })
}

/// Evaluates every (series, evaluator, sweep point) of a resolved spec.
pub fn compute(spec: &ExperimentSpec) -> Result<Results> {
    let (Some(base), Some(sweep)) = (&spec.base, &spec.sweep) else {
        bail!("experiment is not resolved");
    };
    let mut evaluators = Vec::new();
    if spec.evaluator.analytical() {
        evaluators.push(Evaluator::Analytical);
    }
    if spec.evaluator.simulated() {
        evaluators.push(Evaluator::Simulated);
    }
    let mut results = Results::default();
    for series in &spec.series {
        let configs =
            sweep.values.iter().map(|&v| series.config_at(base, sweep.variable, v)).collect::<Result<Vec<_>>>()?;
        for &evaluator in &evaluators {
            let rows = configs
                .par_iter()
                .zip(&sweep.values)
                .map(|(cfg, &v)| {
                    let row = match evaluator {
                        Evaluator::Analytical => analytical_row(cfg),
                        Evaluator::Simulated => simulated_row(cfg, spec.frames, spec.seed),
                    };
                    row.map(|r| Row { sweep_value: v, ..r })
                })
                .collect::<Result<Vec<_>>>()
                .with_context(|| format!("series {}", series.label))?;
            results.curves.push(Curve { series: series.label.clone(), evaluator, rows });
        }
    }
    if results.curves.iter().flat_map(|c| &c.rows).all(|r| !r.aoi_mean_seconds.is_finite()) {
        bail!("the AoI diverges at every sweep point");
    }
    for pair in &spec.ratios {
        for &evaluator in &evaluators {
            let (Some(num), Some(den)) =
                (results.curve(&pair.numerator, evaluator), results.curve(&pair.denominator, evaluator))
            else {
                continue;
            };
            let rows: Vec<RatioRow> = num
                .rows
                .iter()
                .zip(&den.rows)
                .map(|(n, d)| RatioRow {
                    sweep_value: n.sweep_value,
                    series: pair.label.clone(),
                    evaluator,
                    ratio: n.aoi_mean_seconds / d.aoi_mean_seconds,
                })
                .collect();
            results.ratios.extend(rows);
        }
    }
    Ok(results)
}

/// `--out` if given, else `$GFAOI_OUT_DIR/<preset>`, else `out/<preset>`.
pub fn output_prefix(spec: &ExperimentSpec) -> PathBuf {
    match &spec.out {
        Some(p) => PathBuf::from(p),
        None => {
            let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"));
            dir.join(spec.preset.name())
        }
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    prefix.with_file_name(name)
}

fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn chart(spec: &ExperimentSpec, results: &Results) -> Chart {
    let variable = spec.sweep.as_ref().map(|s| format!("{:?}", s.variable).to_lowercase()).unwrap_or_default();
    let lines = results
        .curves
        .iter()
        .map(|c| Line {
            label: format!("{} ({})", c.series, c.evaluator.name()),
            points: c.rows.iter().map(|r| (r.sweep_value, r.aoi_mean_seconds)).collect(),
            markers: c.evaluator == Evaluator::Simulated,
        })
        .collect();
    Chart { title: spec.preset.name().to_string(), x_label: variable, y_label: "average AoI (s)".into(), lines }
}

fn ratio_chart(results: &Results) -> Chart {
    let mut lines: Vec<Line> = Vec::new();
    for r in &results.ratios {
        let label = format!("{} ({})", r.series, r.evaluator.name());
        match lines.iter_mut().find(|l| l.label == label) {
            Some(line) => line.points.push((r.sweep_value, r.ratio)),
            None => lines.push(Line {
                label,
                points: vec![(r.sweep_value, r.ratio)],
                markers: r.evaluator == Evaluator::Simulated,
            }),
        }
    }
    Chart { title: "NOMA / OMA AoI ratio".into(), x_label: "users".into(), y_label: "ratio".into(), lines }
}

/// Runs the experiment and writes its files; returns the paths written.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    let prefix = output_prefix(spec);
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let mut written = Vec::new();
    if spec.preset == Preset::ValidateOracle {
        let path = with_suffix(&prefix, "-oracle.csv");
        write_csv(&path, &validate::oracle_table()?)?;
        written.push(path);
        return Ok(written);
    }
    let results = compute(spec)?;
    for curve in &results.curves {
        let path = with_suffix(&prefix, &format!("-{}-{}.csv", curve.series, curve.evaluator.name()));
        write_csv(&path, &curve.rows)?;
        written.push(path);
    }
    if !results.ratios.is_empty() {
        let path = with_suffix(&prefix, "-ratio.csv");
        write_csv(&path, &results.ratios)?;
        written.push(path);
    }
    if spec.svg {
        let path = with_suffix(&prefix, ".svg");
        fs::write(&path, chart(spec, &results).render())?;
        written.push(path);
        if !results.ratios.is_empty() {
            let path = with_suffix(&prefix, "-ratio.svg");
            fs::write(&path, ratio_chart(&results).render())?;
            written.push(path);
        }
    }
    Ok(written)
}
