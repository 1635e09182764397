//! Trial reports and their JSON / CSV / SVG emission.

use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::median;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub ratio: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub max: f64,
    pub median: f64,
    pub min: f64,
}

impl Summary {
    pub fn of(rows: &[TrialRow]) -> Summary {
        let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
        Summary {
            count: rows.len(),
            max: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(if rows.is_empty() { 0.0 } else { f64::NEG_INFINITY }),
            median: median(&ratios),
            min: ratios.iter().copied().fold(f64::INFINITY, f64::min).min(if rows.is_empty() { 0.0 } else { f64::INFINITY }),
        }
    }
}

/// Empirical constant against a sweep variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub log_log: bool,
    /// Least-squares slope of `ln y` against `ln x` when `log_log`.
    pub slope: Option<f64>,
}

impl Trajectory {
    pub fn new(x_label: &str, y_label: &str, x: Vec<f64>, y: Vec<f64>, log_log: bool) -> Trajectory {
        let slope = log_log.then(|| {
            let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
            let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
            least_squares_slope(&lx, &ly)
        });
        Trajectory {
            x_label: x_label.into(),
            y_label: y_label.into(),
            x,
            y,
            log_log,
            slope,
        }
    }
}

pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// One pass/fail tolerance check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: String,
}

impl Check {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Check {
        Check {
            name: name.into(),
            passed: value <= bound,
            value,
            bound: format!("<= {bound}"),
        }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Check {
        Check {
            name: name.into(),
            passed: value >= bound,
            value,
            bound: format!(">= {bound}"),
        }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Check {
        Check {
            name: name.into(),
            passed: value >= lo && value <= hi,
            value,
            bound: format!("in [{lo}, {hi}]"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub experiment: String,
    /// Constants are maxima over trials: lower bounds, not proofs.
    pub evidence: String,
    pub rows: Vec<TrialRow>,
    pub summary: Summary,
    pub trajectory: Option<Trajectory>,
    pub checks: Vec<Check>,
    pub details: serde_json::Value,
}

impl TrialReport {
    pub fn new(experiment: &str, rows: Vec<TrialRow>) -> TrialReport {
        TrialReport {
            experiment: experiment.into(),
            evidence: "empirical".into(),
            summary: Summary::of(&rows),
            rows,
            trajectory: None,
            checks: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_json(report: &TrialReport, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::Serialize(e.to_string()))?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn write_csv(rows: &[TrialRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Serialize(format!("{}: {e}", path.display())))?;
    w.write_record(["trial", "seed", "ratio", "lhs", "rhs"])
        .map_err(|e| Error::Serialize(e.to_string()))?;
    for r in rows {
        w.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            format!("{:e}", r.ratio),
            format!("{:e}", r.lhs),
            format!("{:e}", r.rhs),
        ])
        .map_err(|e| Error::Serialize(e.to_string()))?;
    }
    w.flush().map_err(io_err(path))
}

fn padded_range(v: &[f64], log: bool) -> (f64, f64) {
    let (lo, hi) = v
        .iter()
        .copied()
        .filter(|x| x.is_finite() && (!log || *x > 0.0))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (1.0, 10.0);
    }
    if log {
        (lo / 1.2, hi * 1.2)
    } else {
        let pad = ((hi - lo) * 0.05).max(1e-9 * hi.abs().max(1.0));
        (lo - pad, hi + pad)
    }
}

pub fn write_svg(traj: &Trajectory, title: &str, path: &Path) -> Result<()> {
    let mut svg = String::new();
    let plot_err = |e: String| Error::Serialize(format!("plot {}: {e}", path.display()));
    {
        let root = SVGBackend::with_string(&mut svg, (720, 480)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| plot_err(e.to_string()))?;
        let (x0, x1) = padded_range(&traj.x, traj.log_log);
        let (y0, y1) = padded_range(&traj.y, traj.log_log);
        let points: Vec<(f64, f64)> = traj.x.iter().copied().zip(traj.y.iter().copied()).collect();
        let mut builder = ChartBuilder::on(&root);
        builder
            .caption(title, ("sans-serif", 18))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(60);
        if traj.log_log {
            let mut chart = builder
                .build_cartesian_2d((x0..x1).log_scale(), (y0..y1).log_scale())
                .map_err(|e| plot_err(e.to_string()))?;
            chart
                .configure_mesh()
                .x_desc(&traj.x_label)
                .y_desc(&traj.y_label)
                .draw()
                .map_err(|e| plot_err(e.to_string()))?;
            chart
                .draw_series(LineSeries::new(points.clone(), &BLUE))
                .map_err(|e| plot_err(e.to_string()))?;
            chart
                .draw_series(points.iter().map(|p| Circle::new(*p, 2, BLUE.filled())))
                .map_err(|e| plot_err(e.to_string()))?;
        } else {
            let mut chart = builder
                .build_cartesian_2d(x0..x1, y0..y1)
                .map_err(|e| plot_err(e.to_string()))?;
            chart
                .configure_mesh()
                .x_desc(&traj.x_label)
                .y_desc(&traj.y_label)
                .draw()
                .map_err(|e| plot_err(e.to_string()))?;
            chart
                .draw_series(LineSeries::new(points.clone(), &BLUE))
                .map_err(|e| plot_err(e.to_string()))?;
        }
        root.present().map_err(|e| plot_err(e.to_string()))?;
    }
    fs::write(path, svg).map_err(io_err(path))
}

/// Paths written by [`emit`].
#[derive(Clone, Debug, PartialEq)]
pub struct Emitted {
    pub json: PathBuf,
    pub csv: PathBuf,
    pub svg: Option<PathBuf>,
}

/// Writes `result.json`, `trials.csv` and, with `plot` and a trajectory,
/// `trajectory.svg` into `dir`.
pub fn emit(report: &TrialReport, dir: &Path, plot: bool) -> Result<Emitted> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let json = dir.join("result.json");
    let csv = dir.join("trials.csv");
    write_json(report, &json)?;
    write_csv(&report.rows, &csv)?;
    let svg = match (&report.trajectory, plot) {
        (Some(t), true) => {
            let p = dir.join("trajectory.svg");
            write_svg(t, &report.experiment, &p)?;
            Some(p)
        }
        _ => None,
    };
    Ok(Emitted { json, csv, svg })
}
