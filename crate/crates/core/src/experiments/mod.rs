//! Desk-scale experiments: decoupling constants, the blow-up family, Fourier
//! multipliers, analytic versus classical norms, calibration and lattice
//! checks.
//!
//! Every constant reported here is a maximum of observed ratios and so only
//! a lower bound for the best constant; reports are labelled `empirical`.

mod blowup;
mod calibrate;
mod comparison;
pub mod config;
mod decoupling;
mod multiplier;
pub mod report;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cone::{Cone, Region, Triangular};
use crate::error::{Error, Result};
use crate::lattice::{ball_cloud, build_bumps_with, build_lattice_with, BumpFamily, LatticeSpec};
use crate::nilgroup::{Grid, SiegelData};
use crate::sampling::window;
use crate::spectral::Symbol;

pub use blowup::{blowup_family, run_blowup, BlowupFamily};
pub use calibrate::{run_calibrate, run_lattice};
pub use comparison::run_comparison;
pub use config::{ExperimentConfig, ExperimentKind};
pub use decoupling::run_decoupling;
pub use multiplier::{mihlin_seminorm, multiplier_symbol, run_multiplier};
pub use report::{emit, Check, Emitted, Summary, TrialReport, TrialRow, Trajectory};

/// Independent stream for one trial.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Dispatches on `kind` after checking it against the file's own key.
pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<TrialReport> {
    cfg.check_kind(kind)?;
    match kind {
        ExperimentKind::Decoupling => run_decoupling(cfg),
        ExperimentKind::Blowup => run_blowup(cfg),
        ExperimentKind::Multiplier => run_multiplier(cfg),
        ExperimentKind::Comparison => run_comparison(cfg),
        ExperimentKind::Calibrate => run_calibrate(cfg),
        ExperimentKind::Lattice => run_lattice(cfg),
    }
}

/// Lattice and bump family over `region` as configured.
pub(crate) fn lattice_and_bumps(cfg: &ExperimentConfig, cone: &Cone, region: &Region, delta: f64) -> Result<(LatticeSpec, BumpFamily)> {
    let spec = build_lattice_with(cone, delta, region, &cfg.lattice.options(cfg.seed))?;
    let bumps = build_bumps_with(cone, &spec, cfg.lattice.bumps, cfg.lattice.profile)?;
    Ok((spec, bumps))
}

/// Chart ball of `radius` around `e′·t`.
pub(crate) fn ball_support(cone: &Cone, t: &Triangular, radius: f64) -> Result<Region> {
    let cloud: Vec<Vec<f64>> = ball_cloud(cone, radius).iter().map(|l| t.act_dual(l)).collect();
    Region::enclosing(cone, &cloud, 1e-9)
}

/// `window(|chart⁻¹(λ·t⁻¹)| / radius)`, a smooth bump on the chart ball
/// around `e′·t`.
pub(crate) fn chart_window(cone: &Cone, t: &Triangular, radius: f64) -> impl Fn(&[f64]) -> f64 + Send + Sync + 'static {
    let cone = cone.clone();
    let inv = t.inverse();
    move |lambda: &[f64]| {
        let y = cone.chart_inverse(&inv.act_dual(lambda));
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt() / radius;
        window(r)
    }
}

/// `E(λ) Σ_k a_k e^{−i⟨λ,x_k⟩}` with `E` a chart window around
/// `center·e′`, complex Gaussian `a_k` and central translations `x_k`
/// uniform in `[−spread, spread]^m`.
pub fn random_symbol<R: Rng + ?Sized>(cone: &Cone, center: f64, radius: f64, terms: usize, spread: f64, rng: &mut R) -> Result<Symbol> {
    random_symbol_at(cone, &cone.dilation(center), radius, terms, spread, rng)
}

/// As [`random_symbol`] with the window centred at `e′·t`.
pub fn random_symbol_at<R: Rng + ?Sized>(
    cone: &Cone,
    t: &Triangular,
    radius: f64,
    terms: usize,
    spread: f64,
    rng: &mut R,
) -> Result<Symbol> {
    if terms == 0 {
        return Err(Error::config("random symbols need at least one term"));
    }
    let support = ball_support(cone, t, radius)?;
    let env = chart_window(cone, t, radius);
    let m = cone.dim;
    let terms: Vec<(Complex64, Vec<f64>)> = (0..terms)
        .map(|_| {
            let a = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            let x = (0..m)
                .map(|_| if spread > 0.0 { rng.gen_range(-spread..spread) } else { 0.0 })
                .collect();
            (a, x)
        })
        .collect();
    Ok(Symbol::new(support, move |lambda| {
        let e = env(lambda);
        if e == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        terms
            .iter()
            .map(|(a, x)| {
                let phase: f64 = lambda.iter().zip(x).map(|(l, y)| l * y).sum();
                a * Complex64::from_polar(e, -phase)
            })
            .sum()
    }))
}

/// `grid` with `F` axis `axis` lengthened, at unchanged spacing, to a period
/// of at least `period`.
pub(crate) fn widen_f_axis(grid: &Grid, axis: usize, period: f64) -> Result<Grid> {
    let h = grid.f_spacing(axis);
    let mut counts = grid.f_counts.clone();
    let mut half = grid.f_half.clone();
    if 2.0 * half[axis] < period {
        counts[axis] = crate::spectral::smooth_even((period / h).ceil() as usize);
        half[axis] = 0.5 * counts[axis] as f64 * h;
    }
    Grid::new(grid.e_counts.clone(), grid.e_half.clone(), counts, half)
}

pub(crate) fn siegel_and_cone(cfg: &ExperimentConfig) -> Result<(SiegelData, Cone)> {
    let siegel = cfg.siegel()?;
    let cone = siegel.cone.clone();
    Ok((siegel, cone))
}

pub(crate) fn running_max(rows: &[TrialRow]) -> Vec<f64> {
    rows.iter()
        .scan(f64::NEG_INFINITY, |m, r| {
            *m = m.max(r.ratio);
            Some(*m)
        })
        .collect()
}
