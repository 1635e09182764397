//! Shell decoupling: `‖Σ_k u_k * ψ_k‖_p` against
//! `‖(w_k ‖u_k * ψ_k‖_p)_k‖_{ℓ^q}`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde_json::json;

use super::config::{DecouplingConfig, ExperimentConfig, ExperimentKind};
use super::report::{Check, TrialReport, TrialRow, Trajectory};
use super::{lattice_and_bumps, running_max, siegel_and_cone, trial_rng, widen_f_axis};
use crate::besov::{lp_norm, lq_norm, Decomposition};
use crate::cone::Side;
use crate::error::{Error, Result};
use crate::lattice::{shell_indices, support_cloud};
use crate::nilgroup::SiegelData;
use crate::spectral::{fit_grid, synthesize, ScalarSymbol};

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };

struct Sweep {
    rows: Vec<TrialRow>,
    details: serde_json::Value,
}

/// Random coefficients `u_k`: a complex Gaussian amplitude times a central
/// translation of the base bump, translations `separation / min|λ_k|` apart
/// along the first `F` axis.
pub fn run_decoupling(cfg: &ExperimentConfig) -> Result<TrialReport> {
    let dc = cfg.decoupling.clone().unwrap_or_default();
    let (siegel, _) = siegel_and_cone(cfg)?;
    let base = sweep(cfg, &dc, &siegel, cfg.lattice.delta)?;
    let mut report = TrialReport::new(ExperimentKind::Decoupling.name(), base.rows);
    let trials: Vec<f64> = (1..=report.rows.len()).map(|t| t as f64).collect();
    report.trajectory = Some(Trajectory::new("trials", "running max ratio", trials, running_max(&report.rows), false));
    if let Some((lo, hi)) = dc.ratio_band {
        report.checks.push(Check::at_least("min ratio", report.summary.min, lo));
        report.checks.push(Check::at_most("max ratio", report.summary.max, hi));
    }
    let mut constants = vec![(cfg.lattice.delta, report.summary.max)];
    let mut sweeps = vec![base.details];
    for &delta in &dc.deltas {
        let s = sweep(cfg, &dc, &siegel, delta)?;
        let best = s.rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
        constants.push((delta, best));
        sweeps.push(s.details);
    }
    if constants.len() > 1 {
        let hi = constants.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        let lo = constants.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        report.checks.push(Check::at_most("constant spread across δ", hi / lo, 2.0));
    }
    report.details = json!({
        "p": cfg.besov.p,
        "q": cfg.besov.q,
        "s": cfg.besov.smoothness(siegel.cone.rank)?.0,
        "weighted_c": dc.weighted_c,
        "constants_by_delta": constants,
        "lattices": sweeps,
    });
    Ok(report)
}

fn sweep(cfg: &ExperimentConfig, dc: &DecouplingConfig, siegel: &SiegelData, delta: f64) -> Result<Sweep> {
    let cone = &siegel.cone;
    let s = cfg.besov.smoothness(cone.rank)?;
    let (p, q) = (cfg.besov.p, cfg.besov.q);
    let (spec, bumps) = lattice_and_bumps(cfg, cone, &cfg.lattice.region, delta)?;
    let plan = cfg.plan();
    let dec = Decomposition::new(siegel, &spec, bumps, &plan)?;
    let active: Vec<usize> = match (&dc.active, cfg.lattice.shell_c) {
        (Some(a), _) => a.clone(),
        (None, Some(c)) => shell_indices(siegel, &dec.bumps, c)?,
        (None, None) => (0..dec.len()).collect(),
    };
    if active.is_empty() {
        return Err(Error::config("the shell contains no lattice index"));
    }
    if let Some(&k) = active.iter().find(|&&k| k >= dec.len()) {
        return Err(Error::config(format!("active index {k} exceeds the lattice size {}", dec.len())));
    }
    let unit = |_: &[f64]| Complex64::new(1.0, 0.0);
    let norms = active
        .par_iter()
        .map(|&k| {
            dec.piece_norm(k, &unit, p, 1)?
                .ok_or_else(|| Error::precondition(format!("bump {k} has an empty piece")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let e = cone.base_point(Side::Primal);
    let weights: Vec<f64> = active
        .iter()
        .map(|&k| {
            let lam = &spec.points[k];
            let pair: f64 = lam.iter().zip(e).map(|(a, b)| a * b).sum();
            spec.transports[k].character(&s) * dc.weighted_c.map_or(1.0, |c| (c * pair).exp())
        })
        .collect();

    let cloud: Vec<Vec<f64>> = active
        .iter()
        .flat_map(|&k| support_cloud(cone, &dec.bumps, k))
        .collect();
    let m = cone.dim;
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for c in &cloud {
        for a in 0..m {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    let min_norm = active
        .iter()
        .map(|&k| spec.points[k].iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min);
    let gap = dc.separation / min_norm;
    let count = active.len();
    let grid = widen_f_axis(&fit_grid(siegel, &cloud, &plan)?, 0, (count + 1) as f64 * gap)?;
    let layout = ScalarSymbol::sample_region(cone, &grid, &lo, &hi, |_| Complex64::new(1.0, 0.0))?;
    // bump values are shared by all trials
    let table: Vec<Vec<(usize, f64)>> = (0..layout.len())
        .into_par_iter()
        .map(|i| {
            if layout.values[i] == C0 {
                return Vec::new();
            }
            let lam = layout.lambda_at(i);
            active
                .iter()
                .enumerate()
                .filter_map(|(slot, &k)| {
                    let v = dec.bumps.value(k, &lam);
                    (v != 0.0).then_some((slot, v))
                })
                .collect()
        })
        .collect();

    let rows = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<TrialRow> {
            let mut rng = trial_rng(cfg.seed, trial);
            let coeffs: Vec<(Complex64, f64)> = (0..count)
                .map(|i| {
                    let a = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                    let x = (i as f64 - 0.5 * (count as f64 - 1.0)) * gap + rng.gen_range(-0.25..0.25) * gap;
                    (a, x)
                })
                .collect();
            let values = (0..layout.len())
                .map(|i| {
                    let l0 = layout.lambda_at(i)[0];
                    table[i]
                        .iter()
                        .map(|&(slot, v)| coeffs[slot].0 * Complex64::from_polar(v, -l0 * coeffs[slot].1))
                        .sum()
                })
                .collect();
            let sym = ScalarSymbol {
                values,
                ..layout.clone()
            };
            let u = synthesize(siegel, &sym, &grid)?;
            let lhs = lp_norm(&u, p);
            let seq: Vec<f64> = coeffs
                .iter()
                .zip(&norms)
                .zip(&weights)
                .map(|((c, n), w)| w * c.0.norm() * n)
                .collect();
            let rhs = lq_norm(&seq, q);
            Ok(TrialRow {
                trial,
                seed: cfg.seed,
                ratio: lhs / rhs,
                lhs,
                rhs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep {
        rows,
        details: serde_json::json!({
            "delta": delta,
            "r": spec.r,
            "lattice_points": spec.len(),
            "active": active,
            "translation_gap": gap,
            "grid_f_counts": grid.f_counts,
            "grid_e_counts": grid.e_counts,
        }),
    })
}
