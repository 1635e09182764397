//! Calibration of the Fourier constants and lattice verification.

use serde_json::json;

use super::config::{ExperimentConfig, ExperimentKind};
use super::report::{Check, TrialReport, TrialRow};
use crate::error::{Error, Result};
use crate::lattice::{ball_cloud, build_lattice_with, verify_lattice, LatticeReport};
use crate::nilgroup::Grid;
use crate::spectral::{calibrate_constants, fit_grid, CALIBRATION_TOLERANCE};

/// Measures the inversion and Plancherel constants; a residual above
/// tolerance is an error.
pub fn run_calibrate(cfg: &ExperimentConfig) -> Result<TrialReport> {
    let siegel = cfg.siegel()?;
    let grid = match cfg.calibrate.as_ref().and_then(|c| c.grid.as_ref()) {
        Some(g) => Grid::uniform(siegel.n, siegel.m, g.e_count, g.e_half, g.f_count, g.f_half)
            .map_err(|e| Error::config(e.to_string()))?,
        None => fit_grid(&siegel, &ball_cloud(&siegel.cone, 0.5), &cfg.plan())?,
    };
    let cal = calibrate_constants(&siegel, &grid)?;
    let row = TrialRow {
        trial: 0,
        seed: cfg.seed,
        ratio: cal.c_plancherel / cal.closed_form,
        lhs: cal.c_plancherel,
        rhs: cal.closed_form,
    };
    let mut report = TrialReport::new(ExperimentKind::Calibrate.name(), vec![row]);
    report
        .checks
        .push(Check::at_most("inversion residual", cal.inversion_residual, CALIBRATION_TOLERANCE));
    report
        .checks
        .push(Check::at_most("Plancherel residual", cal.plancherel_residual, CALIBRATION_TOLERANCE));
    if siegel.is_abelian() {
        let expected = (2.0 * std::f64::consts::PI).powi(-(siegel.m as i32));
        report.checks.push(Check::at_most(
            "inversion constant against (2π)^-m",
            (cal.c_inversion - expected).abs() / expected,
            1e-6,
        ));
    }
    report.details = json!({
        "calibration": {
            "c_inversion": cal.c_inversion,
            "c_plancherel": cal.c_plancherel,
            "closed_form": cal.closed_form,
            "inversion_residual": cal.inversion_residual,
            "plancherel_residual": cal.plancherel_residual,
        },
        "grid": grid,
    });
    Ok(report)
}

fn row(trial: usize, seed: u64, rep: &LatticeReport) -> TrialRow {
    TrialRow {
        trial,
        seed,
        ratio: rep.max_cover_distance / rep.delta,
        lhs: rep.min_separation / rep.delta,
        rhs: rep.r,
    }
}

/// Separation, coverage and overlap of the configured lattice; with a
/// comparison region the overlap counts must agree.
pub fn run_lattice(cfg: &ExperimentConfig) -> Result<TrialReport> {
    let cone = cfg.cone.build()?;
    let opts = cfg.lattice.options(cfg.seed);
    let spec = build_lattice_with(&cone, cfg.lattice.delta, &cfg.lattice.region, &opts)?;
    let main = verify_lattice(&cone, &spec)?;
    let mut reports = vec![main.clone()];
    let check = cfg.lattice_check.clone().unwrap_or_default();
    if let Some(region) = &check.compare_region {
        region.validate().map_err(|e| Error::config(e.to_string()))?;
        let other = build_lattice_with(&cone, cfg.lattice.delta, region, &opts)?;
        reports.push(verify_lattice(&cone, &other)?);
    }
    let rows = reports.iter().enumerate().map(|(i, r)| row(i, cfg.seed, r)).collect();
    let mut report = TrialReport::new(ExperimentKind::Lattice.name(), rows);
    for (i, r) in reports.iter().enumerate() {
        report.checks.push(Check::at_most(
            &format!("separation violations (region {i})"),
            r.separation_violations.len() as f64,
            0.0,
        ));
        report.checks.push(Check::at_most(
            &format!("covering violations (region {i})"),
            r.covering_violations as f64,
            0.0,
        ));
    }
    if reports.len() == 2 {
        let diff = (reports[0].max_overlap as f64 - reports[1].max_overlap as f64).abs();
        report
            .checks
            .push(Check::at_most("overlap difference", diff, check.overlap_slack as f64));
    }
    report.details = json!({
        "reports": reports,
        "points": spec.points,
    });
    Ok(report)
}
