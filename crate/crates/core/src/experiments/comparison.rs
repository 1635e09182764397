//! Analytic norm with smoothness `s` against the classical dyadic norm with
//! smoothness `Σ_j s_j`.

use rayon::prelude::*;
use serde_json::json;

use super::blowup::{blowup_family, per_axis};
use super::config::{ComparisonConfig, ComparisonMode, ExperimentConfig, ExperimentKind};
use super::report::{Check, TrialReport, TrialRow, Trajectory};
use super::{ball_support, lattice_and_bumps, random_symbol, random_symbol_at, running_max, trial_rng};
use crate::besov::{besov_analytic, besov_analytic_in_box, besov_classical_in_box, besov_classical_symbol, BesovParams, Decomposition};
use crate::cone::{PowerExponent, Side};
use crate::error::{Error, Result};
use crate::lattice::{ball_cloud, BumpMode, LatticeSpec};
use crate::nilgroup::SiegelData;
use crate::spectral::n_lambda;

pub fn run_comparison(cfg: &ExperimentConfig) -> Result<TrialReport> {
    let cc = cfg.comparison.clone().unwrap_or_default();
    let siegel = cfg.siegel()?;
    let s = cfg.besov.smoothness(siegel.cone.rank)?;
    let params = BesovParams::new(s, cfg.besov.p, cfg.besov.q).map_err(|e| Error::config(e.to_string()))?;
    match cc.mode {
        ComparisonMode::Band => band(cfg, &cc, &siegel, &params),
        ComparisonMode::SingleTerm => single_term(cfg, &cc, &siegel, &params),
        ComparisonMode::Blowup => degradation(cfg, &cc, &siegel, &params),
    }
}

fn trial_trajectory(report: &mut TrialReport) {
    let trials: Vec<f64> = (1..=report.rows.len()).map(|t| t as f64).collect();
    report.trajectory = Some(Trajectory::new("trials", "running max ratio", trials, running_max(&report.rows), false));
}

/// Random symbols in one chart ball; two-sided band.
fn band(cfg: &ExperimentConfig, cc: &ComparisonConfig, siegel: &SiegelData, params: &BesovParams) -> Result<TrialReport> {
    let cone = &siegel.cone;
    let (spec, bumps) = lattice_and_bumps(cfg, cone, &cfg.lattice.region, cfg.lattice.delta)?;
    let plan = cfg.plan();
    let dec = Decomposition::new(siegel, &spec, bumps, &plan)?;
    let sum_s = params.s.sum();
    let sc = &cfg.symbol;
    let rows = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<TrialRow> {
            let mut rng = trial_rng(cfg.seed, trial);
            let sigma = random_symbol(cone, sc.center, sc.radius, sc.terms, sc.spread, &mut rng)?;
            let lhs = besov_analytic(&dec, &sigma, params, false)?.total;
            let rhs = besov_classical_symbol(siegel, &sigma, sum_s, params.p, params.q, &plan)?.total;
            Ok(TrialRow {
                trial,
                seed: cfg.seed,
                ratio: lhs / rhs,
                lhs,
                rhs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = TrialReport::new(ExperimentKind::Comparison.name(), rows);
    let spread = report.summary.max / report.summary.min;
    report.checks.push(Check::at_most("ratio max/min", spread, cc.band_limit));
    trial_trajectory(&mut report);
    report.details = json!({
        "mode": "band",
        "s": params.s.0,
        "classical_s": sum_s,
        "band": spread,
        "lattice_points": spec.len(),
    });
    Ok(report)
}

/// Lattice index `k` and dyadic index `j` such that the chart ball of
/// `radius` around `λ_k` lies inside the plateau `4^j [3/4, 2] N(e′)`;
/// among the admissible pairs the one with the largest `|ln Δ^s(λ_k) − Σs·j ln 2|`.
pub fn single_term_pair(siegel: &SiegelData, spec: &LatticeSpec, s: &PowerExponent, radius: f64) -> Option<(usize, i32, f64)> {
    let cone = &siegel.cone;
    let ne = n_lambda(siegel, cone.base_point(Side::Dual));
    let ball = ball_cloud(cone, radius);
    let mut best: Option<(usize, i32, f64)> = None;
    for k in 0..spec.len() {
        let t = &spec.transports[k];
        if !ball_support(cone, t, radius).is_ok_and(|r| r.is_subset_of(&spec.region)) {
            continue;
        }
        let (lo, hi) = ball
            .iter()
            .map(|l| n_lambda(siegel, &t.act_dual(l)) / ne)
            .fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
        let j = (hi / 2.0).log(4.0).ceil() as i32;
        if lo < 0.75 * 4f64.powi(j) {
            continue;
        }
        let expected = t.character(s) / 2f64.powf(s.sum() * j as f64);
        if best.map_or(true, |b| expected.ln().abs() > b.2.ln().abs() + 1e-12) {
            best = Some((k, j, expected));
        }
    }
    best
}

/// One bump, one dyadic plateau: the ratio is `Δ^s(λ_k)/2^{Σs·j}`.
fn single_term(cfg: &ExperimentConfig, cc: &ComparisonConfig, siegel: &SiegelData, params: &BesovParams) -> Result<TrialReport> {
    let cone = &siegel.cone;
    if cfg.lattice.bumps == BumpMode::Cover {
        return Err(Error::config("single-term comparison needs partition bumps (φ_k = 1 near λ_k)"));
    }
    let (spec, bumps) = lattice_and_bumps(cfg, cone, &cfg.lattice.region, cfg.lattice.delta)?;
    if !(spec.r < 2.0) {
        return Err(Error::config(format!(
            "single-term comparison needs R < 2 so that a ball around λ_k meets one bump; R = {}",
            spec.r
        )));
    }
    let radius = 0.9 * (2.0 - spec.r.max(1.0)) * spec.delta;
    let (k, j, expected) = single_term_pair(siegel, &spec, &params.s, radius)
        .ok_or_else(|| Error::config("no lattice ball fits inside one dyadic plateau; widen the region"))?;
    let plan = cfg.plan();
    let dec = Decomposition::new(siegel, &spec, bumps, &plan)?;
    let sc = &cfg.symbol;
    let t = spec.transports[k].clone();
    let rows = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<TrialRow> {
            let mut rng = trial_rng(cfg.seed, trial);
            let sigma = random_symbol_at(cone, &t, radius, sc.terms, sc.spread, &mut rng)?;
            let analytic = besov_analytic(&dec, &sigma, params, false)?;
            let lhs = analytic.total;
            let rhs = besov_classical_symbol(siegel, &sigma, params.s.sum(), params.p, params.q, &plan)?.total;
            Ok(TrialRow {
                trial,
                seed: cfg.seed,
                ratio: lhs / rhs,
                lhs,
                rhs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = TrialReport::new(ExperimentKind::Comparison.name(), rows);
    let deviation = report
        .rows
        .iter()
        .map(|r| (r.ratio / expected - 1.0).abs())
        .fold(0.0, f64::max);
    report.checks.push(Check::at_most(
        "relative deviation from Δ^s(λ_k)/2^{Σs·j}",
        deviation,
        cc.tolerance,
    ));
    trial_trajectory(&mut report);
    report.details = json!({
        "mode": "single_term",
        "k": k,
        "lambda_k": spec.points[k],
        "j": j,
        "ball_radius": radius,
        "expected_ratio": expected,
        "max_relative_deviation": deviation,
    });
    Ok(report)
}

/// Ratio along the blow-up family; it must degrade by `min_degradation`.
fn degradation(cfg: &ExperimentConfig, cc: &ComparisonConfig, siegel: &SiegelData, params: &BesovParams) -> Result<TrialReport> {
    let cone = &siegel.cone;
    if cc.coordinate == 0 {
        return Err(Error::config("comparison.coordinate is 1-based"));
    }
    let family = blowup_family(cone, cc.coordinate - 1, cc.symbol_radius, &cc.k_values)?;
    let (spec, bumps) = lattice_and_bumps(cfg, cone, &family.region, cfg.lattice.delta)?;
    let plan = cfg.plan();
    let dec = Decomposition::new(siegel, &spec, bumps, &plan)?;
    let fine = per_axis(&plan);
    let rows = (0..family.ks.len())
        .into_par_iter()
        .map(|i| -> Result<TrialRow> {
            let sigma = family.symbol(siegel, i, &params.s, params.p);
            let (lo, hi) = &family.boxes[i];
            let lhs = besov_analytic_in_box(&dec, &sigma, lo, hi, params, false)?.total;
            let rhs = besov_classical_in_box(siegel, &sigma, lo, hi, params.s.sum(), params.p, params.q, &fine)?.total;
            Ok(TrialRow {
                trial: i,
                seed: cfg.seed,
                ratio: lhs / rhs,
                lhs,
                rhs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = TrialReport::new(ExperimentKind::Comparison.name(), rows);
    let spread = report.summary.max / report.summary.min;
    report
        .checks
        .push(Check::at_least("ratio max/min along t_k", spread, cc.min_degradation));
    let x: Vec<f64> = family.ks.iter().map(|&k| k as f64 + 1.0).collect();
    let y: Vec<f64> = report.rows.iter().map(|r| r.ratio).collect();
    report.trajectory = Some(Trajectory::new("k+1", "analytic / classical", x, y, true));
    report.details = json!({
        "mode": "blowup",
        "s": params.s.0,
        "k_values": family.ks,
        "degradation": spread,
        "lattice_points": spec.len(),
    });
    Ok(report)
}
