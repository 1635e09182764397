//! The degenerating family `t_k = (e − e_j) + e_j/(k+1)`.
//!
//! `σ_k(λ) = Δ^{−s}(t_k) J(t_k)^{−(1−1/p)} σ(λ·t_k⁻¹)` has
//! `‖φ_k‖_p = Δ^{−s}(t_k) ‖φ‖_p` while its analytic Besov norm stays
//! bounded, so the single-function decoupling ratio grows like
//! `(k+1)^{s_j}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use super::config::{ExperimentConfig, ExperimentKind};
use super::report::{Check, TrialReport, TrialRow, Trajectory};
use super::{ball_support, chart_window, lattice_and_bumps, siegel_and_cone};
use crate::besov::{besov_analytic_in_box, jacobian, lp_norm, BesovParams, Decomposition};
use crate::cone::{Cone, ConeKind, PowerExponent, Region, Triangular};
use crate::error::{Error, Result};
use crate::lattice::ball_cloud;
use crate::nilgroup::SiegelData;
use crate::spectral::{fit_grid, synthesize, GridPlan, ScalarSymbol, Symbol};

/// `t_k` for each `k`, with the chart-ball supports of `σ(·t_k⁻¹)`.
#[derive(Clone, Debug)]
pub struct BlowupFamily {
    /// 0-based cone coordinate.
    pub coordinate: usize,
    pub radius: f64,
    pub ks: Vec<usize>,
    pub transports: Vec<Triangular>,
    pub supports: Vec<Region>,
    /// Per-`k` bounding boxes of the supports in `Ω′`.
    pub boxes: Vec<(Vec<f64>, Vec<f64>)>,
    /// Hull of the supports.
    pub region: Region,
}

fn degenerate(cone: &Cone, coordinate: usize, k: usize) -> Result<Triangular> {
    let f = 1.0 / (k as f64 + 1.0);
    let mut params = vec![0.0; cone.dim];
    match cone.kind {
        ConeKind::Product => {
            params.iter_mut().for_each(|p| *p = 1.0);
            params[coordinate] = f;
        }
        ConeKind::Lorentz => {
            params[0] = 1.0;
            params[1] = 1.0;
            params[coordinate] = f.sqrt();
        }
    }
    cone.triangular(&params)
}

pub fn blowup_family(cone: &Cone, coordinate: usize, radius: f64, ks: &[usize]) -> Result<BlowupFamily> {
    if cone.rank < 2 {
        return Err(Error::config("the blow-up family needs a cone of rank > 1"));
    }
    if coordinate >= cone.rank {
        return Err(Error::config(format!(
            "coordinate {} is out of range for rank {}",
            coordinate + 1,
            cone.rank
        )));
    }
    if ks.is_empty() {
        return Err(Error::config("the blow-up family needs at least one k"));
    }
    let base = ball_cloud(cone, radius);
    let mut transports = Vec::with_capacity(ks.len());
    let mut supports = Vec::with_capacity(ks.len());
    let mut boxes = Vec::with_capacity(ks.len());
    for &k in ks {
        let t = degenerate(cone, coordinate, k)?;
        let cloud: Vec<Vec<f64>> = base.iter().map(|l| t.act_dual(l)).collect();
        boxes.push(bounding_box(&cloud));
        supports.push(ball_support(cone, &t, radius)?);
        transports.push(t);
    }
    let region = supports.iter().skip(1).fold(supports[0].clone(), |a, b| a.hull(b));
    Ok(BlowupFamily {
        coordinate,
        radius,
        ks: ks.to_vec(),
        transports,
        supports,
        boxes,
        region,
    })
}

pub(crate) fn bounding_box(cloud: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let m = cloud[0].len();
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for c in cloud {
        for a in 0..m {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    (lo, hi)
}

impl BlowupFamily {
    /// `σ_k` normalized for `L^p` with smoothness `s`.
    pub fn symbol(&self, siegel: &SiegelData, i: usize, s: &PowerExponent, p: f64) -> Symbol {
        let t = &self.transports[i];
        let scale = if p.is_infinite() { 1.0 } else { 1.0 - 1.0 / p };
        let amp = t.character(&s.neg()) * jacobian(siegel, t).powf(-scale);
        let env = chart_window(&siegel.cone, t, self.radius);
        Symbol::new(self.supports[i].clone(), move |l| Complex64::new(amp * env(l), 0.0))
    }

    /// `‖F⁻¹σ_k‖_p` on a grid fitted to the support of `σ_k` axis by axis.
    pub fn direct_norm(&self, siegel: &SiegelData, i: usize, s: &PowerExponent, p: f64, plan: &GridPlan) -> Result<f64> {
        let (lo, hi) = &self.boxes[i];
        let sigma = self.symbol(siegel, i, s, p);
        let grid = fit_grid(siegel, &bounding_cloud(lo, hi), &per_axis(plan))?;
        let cone = &siegel.cone;
        let sym = ScalarSymbol::sample_region(cone, &grid, lo, hi, |l| sigma.eval(cone, l))?;
        Ok(lp_norm(&synthesize(siegel, &sym, &grid)?, p))
    }
}

pub(crate) fn per_axis(plan: &GridPlan) -> GridPlan {
    GridPlan {
        per_axis: true,
        ..*plan
    }
}

pub(crate) fn bounding_cloud(lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    vec![lo.to_vec(), hi.to_vec()]
}

/// Slope of `ln ratio` against `ln(k+1)` for the single-function ratio
/// `‖φ_k‖_p / ‖φ_k‖_{B^s_{p,q}}`.
pub fn run_blowup(cfg: &ExperimentConfig) -> Result<TrialReport> {
    let bc = cfg.blowup.clone().unwrap_or_default();
    let (siegel, cone) = siegel_and_cone(cfg)?;
    if cone.rank < 2 {
        return Err(Error::config("blow-up needs a cone of rank > 1; rank one has no degenerate direction"));
    }
    if bc.coordinate == 0 || bc.k_step == 0 || bc.k_max == 0 {
        return Err(Error::config("blowup.coordinate, k_step and k_max are 1-based and positive"));
    }
    let j = bc.coordinate - 1;
    let s = cfg.besov.smoothness(cone.rank)?;
    let params = BesovParams::new(s.clone(), cfg.besov.p, cfg.besov.q).map_err(|e| Error::config(e.to_string()))?;
    let ks: Vec<usize> = (1..=bc.k_max).step_by(bc.k_step).collect();
    let family = blowup_family(&cone, j, bc.symbol_radius, &ks)?;
    let (spec, bumps) = lattice_and_bumps(cfg, &cone, &family.region, cfg.lattice.delta)?;
    let plan = cfg.plan();
    let dec = Decomposition::new(&siegel, &spec, bumps, &plan)?;

    let p = cfg.besov.p;
    let reference = blowup_family(&cone, j, bc.symbol_radius, &[0])?;
    let base_norm = reference.direct_norm(&siegel, 0, &s, p, &plan)?;
    let results = (0..ks.len())
        .into_par_iter()
        .map(|i| -> Result<(f64, f64, f64)> {
            let direct = family.direct_norm(&siegel, i, &s, p, &plan)?;
            let expected = family.transports[i].character(&s.neg()) * base_norm;
            let besov = besov_analytic_in_box(&dec, &family.symbol(&siegel, i, &s, p), &family.boxes[i].0, &family.boxes[i].1, &params, false)?.total;
            Ok((direct, besov, (direct - expected).abs() / expected))
        })
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<TrialRow> = results
        .iter()
        .enumerate()
        .map(|(i, &(direct, besov, _))| TrialRow {
            trial: i,
            seed: cfg.seed,
            ratio: direct / besov,
            lhs: direct,
            rhs: besov,
        })
        .collect();
    let x: Vec<f64> = ks.iter().map(|&k| k as f64 + 1.0).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let trajectory = Trajectory::new("k+1", "decoupling ratio", x, y.clone(), true);
    let slope = trajectory.slope.unwrap_or(f64::NAN);
    let norm_err = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let mut report = TrialReport::new(ExperimentKind::Blowup.name(), rows);
    let sj = s[j];
    report
        .checks
        .push(Check::at_most("‖φ_k‖_p against Δ^{-s}(t_k)‖φ‖_p", norm_err, bc.norm_tolerance));
    if sj == 0.0 {
        let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
        report.checks.push(Check::at_most("flatness max/min − 1", hi / lo - 1.0, bc.flat_tolerance));
    } else {
        report.checks.push(Check::within(
            "log-log slope",
            slope,
            sj - bc.slope_tolerance,
            sj + bc.slope_tolerance,
        ));
    }
    let growth = y.last().copied().unwrap_or(f64::NAN) / y.first().copied().unwrap_or(f64::NAN);
    report.trajectory = Some(trajectory);
    report.details = json!({
        "coordinate": bc.coordinate,
        "s": s.0,
        "s_j": sj,
        "slope": slope,
        "growth": growth,
        "max_norm_error": norm_err,
        "lattice_points": spec.len(),
        "region": family.region,
        "conclusion": if sj > 0.0 && report.passed() {
            "ratio unbounded along t_k: decoupling forces s_j <= 0"
        } else {
            "no growth along t_k"
        },
    });
    Ok(report)
}
