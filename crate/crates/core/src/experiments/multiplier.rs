//! Symbol multipliers `Ψ(M)` and the Mihlin-type seminorm
//! `sup_t ‖φ M(·t)‖_{B^{m(1/p₀−1/2)}_{q₀, min(p₀,1)}(F′)}`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use super::config::{ExperimentConfig, ExperimentKind, MultiplierConfig, MultiplierKind};
use super::report::{Check, TrialReport, TrialRow, Trajectory};
use super::{chart_window, random_symbol, running_max, trial_rng};
use crate::besov::{besov_analytic, besov_classical_grid, BesovParams, Decomposition};
use crate::cone::{Cone, Side};
use crate::error::{Error, Result};
use crate::lattice::ball_cloud;
use crate::nilgroup::{Grid, GridFunction};
use crate::spectral::{smooth_even, SymbolFn};

/// Streams for the seminorm's sampled `t` sit far above the trial streams.
const SEMINORM_STREAM: usize = 1 << 40;

pub fn multiplier_symbol(cone: &Cone, kind: &MultiplierKind) -> Result<SymbolFn> {
    Ok(match kind {
        MultiplierKind::Identity => Arc::new(|_: &[f64]| Complex64::new(1.0, 0.0)),
        MultiplierKind::DeltaPower { tau } => {
            if tau.len() != cone.rank {
                return Err(Error::config(format!(
                    "tau has {} entries, the cone has rank {}",
                    tau.len(),
                    cone.rank
                )));
            }
            let (cone, tau) = (cone.clone(), tau.clone());
            Arc::new(move |l: &[f64]| match cone.delta_power(Side::Dual, &tau, l) {
                Ok(v) => Complex64::from_polar(1.0, v.ln()),
                Err(_) => Complex64::new(0.0, 0.0),
            })
        }
        MultiplierKind::Angular { amplitude, frequency } => {
            if cone.dim < 2 {
                return Err(Error::config("angular multipliers need at least two coordinates"));
            }
            let (a, f) = (*amplitude, *frequency);
            Arc::new(move |l: &[f64]| Complex64::new(1.0 + a * (f * l[1].atan2(l[0])).cos(), 0.0))
        }
    })
}

/// `(q₀, smoothness, microindex)` of the seminorm for `p₀ ∈ (0, 2)`.
pub fn seminorm_indices(m: usize, p0: f64) -> Result<(f64, f64, f64)> {
    if !(p0 > 0.0 && p0 < 2.0) {
        return Err(Error::config(format!("p0 = {p0} must lie in (0, 2)")));
    }
    let inv_q0 = 1.0 / p0.max(1.0) - 0.5;
    Ok((1.0 / inv_q0, m as f64 * (1.0 / p0 - 0.5), p0.min(1.0)))
}

/// Largest classical norm of `φ M(·t)` over `t_samples` random `t`, and the
/// individual values. `φ` is a window on the chart ball of `cutoff_radius`
/// at `e′`; `F′` is sampled on a box twice the size of its support.
pub fn mihlin_seminorm(cone: &Cone, mc: &MultiplierConfig, seed: u64) -> Result<(f64, Vec<f64>)> {
    let m = cone.dim;
    let (q0, smooth, micro) = seminorm_indices(m, mc.p0)?;
    let mult = multiplier_symbol(cone, &mc.multiplier)?;
    let cloud = ball_cloud(cone, mc.cutoff_radius);
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for c in &cloud {
        for a in 0..m {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect();
    let count = smooth_even(2 * mc.cutoff_samples);
    let grid = Grid::new(vec![], vec![], vec![count; m], hi.iter().zip(&lo).map(|(h, l)| h - l).collect())?;
    let phi = chart_window(cone, &cone.dilation(1.0), mc.cutoff_radius);
    let ts: Vec<_> = (0..mc.t_samples)
        .map(|i| cone.sample_triangular(&mut trial_rng(seed, SEMINORM_STREAM + i), mc.t_spread))
        .collect();
    let values = ts
        .par_iter()
        .map(|t| -> Result<f64> {
            let u = GridFunction::from_fn(&grid, |g| {
                let xi: Vec<f64> = g.x.iter().zip(&center).map(|(x, c)| x + c).collect();
                if !cone.contains(Side::Dual, &xi) {
                    return Complex64::new(0.0, 0.0);
                }
                let w = phi(&xi);
                if w == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                w * mult(&t.act_dual(&xi))
            });
            Ok(besov_classical_grid(&u, smooth, q0, micro, 1.0)?.total)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((values.iter().copied().fold(0.0, f64::max), values))
}

/// `‖Ψ(M)u‖_{B^s_{p,q}} / ‖u‖_{B^s_{p,q}}` over random band-limited `u`.
pub fn run_multiplier(cfg: &ExperimentConfig) -> Result<TrialReport> {
    let mc = cfg
        .multiplier
        .clone()
        .ok_or_else(|| Error::config("the multiplier experiment needs a [multiplier] table"))?;
    let siegel = cfg.siegel()?;
    let cone = siegel.cone.clone();
    let p = cfg.besov.p;
    let (lo_p, hi_p) = if mc.p0 <= 1.0 {
        (mc.p0, f64::INFINITY)
    } else {
        (mc.p0, mc.p0 / (mc.p0 - 1.0))
    };
    if p < lo_p - 1e-12 || p > hi_p + 1e-12 {
        return Err(Error::config(format!("p = {p} lies outside [p0, p0′] = [{lo_p}, {hi_p}]")));
    }
    let s = cfg.besov.smoothness(cone.rank)?;
    let params = BesovParams::new(s, p, cfg.besov.q).map_err(|e| Error::config(e.to_string()))?;
    let mult = multiplier_symbol(&cone, &mc.multiplier)?;
    let (seminorm, semivalues) = mihlin_seminorm(&cone, &mc, cfg.seed)?;
    let (spec, bumps) = super::lattice_and_bumps(cfg, &cone, &cfg.lattice.region, cfg.lattice.delta)?;
    let dec = Decomposition::new(&siegel, &spec, bumps, &cfg.plan())?;
    let sc = &cfg.symbol;
    let rows = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<TrialRow> {
            let mut rng = trial_rng(cfg.seed, trial);
            let sigma = random_symbol(&cone, sc.center, sc.radius, sc.terms, sc.spread, &mut rng)?;
            let m = mult.clone();
            let image = sigma.times(move |l| m(l));
            let lhs = besov_analytic(&dec, &image, &params, false)?.total;
            let rhs = besov_analytic(&dec, &sigma, &params, false)?.total;
            Ok(TrialRow {
                trial,
                seed: cfg.seed,
                ratio: lhs / rhs,
                lhs,
                rhs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = TrialReport::new(ExperimentKind::Multiplier.name(), rows);
    let deviation = report.rows.iter().map(|r| (r.ratio - 1.0).abs()).fold(0.0, f64::max);
    let exact = match &mc.multiplier {
        MultiplierKind::Identity => true,
        MultiplierKind::DeltaPower { .. } => p == 2.0 && cfg.besov.q == 2.0,
        MultiplierKind::Angular { .. } => false,
    };
    if exact {
        report
            .checks
            .push(Check::at_most("max |ratio − 1|", deviation, mc.exact_tolerance));
    }
    report
        .checks
        .push(Check::at_most("max ratio / seminorm", report.summary.max / seminorm, mc.bound_factor));
    let trials: Vec<f64> = (1..=report.rows.len()).map(|t| t as f64).collect();
    report.trajectory = Some(Trajectory::new("trials", "running max ratio", trials, running_max(&report.rows), false));
    let (q0, smooth, micro) = seminorm_indices(cone.dim, mc.p0)?;
    report.details = json!({
        "multiplier": mc.multiplier,
        "p0": mc.p0,
        "seminorm": seminorm,
        "seminorm_samples": semivalues,
        "seminorm_indices": { "q0": q0, "smoothness": smooth, "microindex": micro },
        "max_abs_deviation_from_one": deviation,
        "lattice_points": spec.len(),
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seminorm_indices_match_closed_form() {
        let (q0, s, micro) = seminorm_indices(2, 1.5).unwrap();
        assert!((q0 - 6.0).abs() < 1e-12);
        assert!((s - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(micro, 1.0);
        assert!(seminorm_indices(2, 2.0).is_err());
    }

    #[test]
    fn delta_power_is_unimodular() {
        let cone = Cone::product(2).unwrap();
        let m = multiplier_symbol(&cone, &MultiplierKind::DeltaPower { tau: vec![1.0, -0.5] }).unwrap();
        for l in [[0.3, 2.0], [1.0, 1.0], [5.0, 0.1]] {
            assert!((m(&l).norm() - 1.0).abs() < 1e-14);
        }
    }
}
