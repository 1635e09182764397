//! Maximal functions, ball sampling of band-limited functions and Young-type
//! convolution checks on the torus grid.
//!
//! Grid geometry: `F` axes are periodic, `E` axes are not (functions of
//! analytic type decay like `e^{−⟨λ,Φ(ζ)⟩}` there).

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::besov::{lp_norm, lp_norm_values};
use crate::cone::Cone;
use crate::error::{Error, Result};
use crate::fft::{signed_index, Direction, NdFft};
use crate::nilgroup::{Grid, GridFunction, GroupPoint, SiegelData};
use crate::spectral::{convolve_grid, convolve_symbols, synthesize, ScalarSymbol};

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Samples required per `δ` along every axis.
pub const SAMPLES_PER_DELTA: f64 = 4.0;

/// Points of `𝒩` whose `δ`-balls are disjoint and whose `Rδ`-balls cover the
/// grid box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupLattice {
    pub points: Vec<GroupPoint>,
    pub delta: f64,
    pub r: f64,
}

impl GroupLattice {
    /// Square lattice on an abelian `F = R^m` tiling the periodic box.
    ///
    /// A quasi-ball of radius `δ` is a Euclidean ball of radius `δ²`, so the
    /// spacing is the smallest divisor of the period that is at least `2δ²`.
    pub fn regular(siegel: &SiegelData, grid: &Grid, delta: f64) -> Result<GroupLattice> {
        if siegel.n != 0 {
            return Err(Error::precondition("regular lattices need an abelian group"));
        }
        check_delta(delta)?;
        let m = grid.m();
        let mut axes = Vec::with_capacity(m);
        let mut worst: f64 = 0.0;
        for a in 0..m {
            let period = 2.0 * grid.f_half[a];
            let count = (period / (2.0 * delta * delta)).floor().max(1.0) as usize;
            let step = period / count as f64;
            worst = worst.max(step);
            axes.push((0..count).map(|j| -grid.f_half[a] + (j as f64 + 0.5) * step).collect::<Vec<_>>());
        }
        let cover = worst * (m as f64).sqrt() / 2.0;
        let r = (cover.sqrt() / delta).max(1.0) * (1.0 + 1e-9);
        let mut points = Vec::new();
        cartesian(&axes.iter().map(|v| (0, v.len() as i64 - 1)).collect::<Vec<_>>(), |idx| {
            points.push(GroupPoint {
                zeta: Vec::new(),
                x: idx.iter().enumerate().map(|(a, &j)| axes[a][j as usize]).collect(),
            });
        });
        Ok(GroupLattice { points, delta, r })
    }

    /// Greedy `2δ`-separated net over a subgrid of nodes; `R` is the measured
    /// covering radius of the full grid over `δ`.
    pub fn greedy(siegel: &SiegelData, grid: &Grid, delta: f64) -> Result<GroupLattice> {
        check_delta(delta)?;
        let e_stride: Vec<usize> = (0..grid.e_counts.len())
            .map(|a| ((delta / 2.0) / grid.e_spacing(a)).floor().max(1.0) as usize)
            .collect();
        let f_stride: Vec<usize> = (0..grid.m())
            .map(|a| ((delta * delta / 2.0) / grid.f_spacing(a)).floor().max(1.0) as usize)
            .collect();
        let mut chosen: Vec<GroupPoint> = Vec::new();
        for idx in 0..grid.len() {
            let fl = grid.f_len();
            let em = grid.e_multi(idx / fl);
            let fm = grid.f_multi(idx % fl);
            if em.iter().zip(&e_stride).any(|(i, s)| i % s != 0) || fm.iter().zip(&f_stride).any(|(i, s)| i % s != 0) {
                continue;
            }
            let g = grid.point(idx);
            if chosen.iter().all(|h| torus_distance(siegel, grid, h, &g) >= 2.0 * delta) {
                chosen.push(g);
            }
        }
        let cover = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let g = grid.point(idx);
                chosen
                    .iter()
                    .map(|h| torus_distance(siegel, grid, h, &g))
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| 0.0, f64::max);
        Ok(GroupLattice {
            points: chosen,
            delta,
            r: (cover / delta).max(1.0) * (1.0 + 1e-9),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The lattice of `ρ·g_j` with `δ` replaced by `ρ^{1/2}δ`.
    pub fn dilated(&self, rho: f64) -> GroupLattice {
        GroupLattice {
            points: self.points.iter().map(|g| crate::nilgroup::dilate(rho, g)).collect(),
            delta: self.delta * rho.sqrt(),
            r: self.r,
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::domain(format!("delta = {delta} must be positive")));
    }
    Ok(())
}

/// Rejects grids with fewer than [`SAMPLES_PER_DELTA`] samples per `δ`
/// (per `δ²` along `F`).
pub fn check_resolution(grid: &Grid, delta: f64) -> Result<()> {
    check_delta(delta)?;
    for a in 0..grid.e_counts.len() {
        if grid.e_spacing(a) * SAMPLES_PER_DELTA > delta * (1.0 + 1e-12) {
            return Err(Error::precondition(format!(
                "E spacing {} is coarser than delta/{SAMPLES_PER_DELTA} = {}",
                grid.e_spacing(a),
                delta / SAMPLES_PER_DELTA
            )));
        }
    }
    for a in 0..grid.m() {
        if grid.f_spacing(a) * SAMPLES_PER_DELTA > delta * delta * (1.0 + 1e-12) {
            return Err(Error::precondition(format!(
                "F spacing {} is coarser than delta^2/{SAMPLES_PER_DELTA} = {}",
                grid.f_spacing(a),
                delta * delta / SAMPLES_PER_DELTA
            )));
        }
    }
    Ok(())
}

fn wrap(v: f64, half: f64) -> f64 {
    let period = 2.0 * half;
    v - period * ((v + half) / period).floor()
}

/// Quasi-distance with the `F` coordinates of `g⁻¹h` wrapped to the box.
pub fn torus_distance(siegel: &SiegelData, grid: &Grid, g: &GroupPoint, h: &GroupPoint) -> f64 {
    let dz: Vec<Complex64> = h.zeta.iter().zip(&g.zeta).map(|(a, b)| a - b).collect();
    let shift = siegel.twisted_shift(&g.zeta.iter().map(|z| -z).collect::<Vec<_>>(), &h.zeta);
    let z2: f64 = dz.iter().map(|z| z.norm_sqr()).sum();
    let x2: f64 = (0..grid.m())
        .map(|a| wrap(h.x[a] - g.x[a] + shift[a], grid.f_half[a]).powi(2))
        .sum();
    (z2 * z2 + x2).sqrt().sqrt()
}

fn cartesian(ranges: &[(i64, i64)], mut f: impl FnMut(&[i64])) {
    if ranges.iter().any(|(lo, hi)| hi < lo) {
        return;
    }
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&idx);
        let mut a = ranges.len();
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            if idx[a] < ranges[a].1 {
                idx[a] += 1;
                break;
            }
            idx[a] = ranges[a].0;
        }
    }
}

/// Grid indices of the closed ball `{h : d(center, h) ≤ radius}`.
pub fn ball_indices(siegel: &SiegelData, grid: &Grid, center: &GroupPoint, radius: f64) -> Vec<usize> {
    let r2 = radius * radius;
    let r4 = r2 * r2;
    let e_ranges: Vec<(i64, i64)> = (0..grid.e_counts.len())
        .map(|a| {
            let z = center.zeta[a / 2];
            let c = if a % 2 == 0 { z.re } else { z.im };
            let h = grid.e_spacing(a);
            let mid = (grid.e_counts[a] / 2) as i64;
            let lo = ((c - radius) / h - 1e-9).ceil() as i64 + mid;
            let hi = ((c + radius) / h + 1e-9).floor() as i64 + mid;
            (lo.max(0), hi.min(grid.e_counts[a] as i64 - 1))
        })
        .collect();
    let neg: Vec<Complex64> = center.zeta.iter().map(|z| -z).collect();
    let mut out = Vec::new();
    cartesian(&e_ranges, |em| {
        let multi: Vec<usize> = em.iter().map(|&i| i as usize).collect();
        let e = grid.e_flat(&multi);
        let zeta = grid.zeta_at(e);
        let dz2: f64 = zeta.iter().zip(&center.zeta).map(|(a, b)| (a - b).norm_sqr()).sum();
        let rest = r4 - dz2 * dz2;
        if rest < 0.0 {
            return;
        }
        let w = rest.sqrt();
        let shift = siegel.twisted_shift(&neg, &zeta);
        let centre_x: Vec<f64> = (0..grid.m()).map(|a| center.x[a] - shift[a]).collect();
        let f_ranges: Vec<(i64, i64)> = (0..grid.m())
            .map(|a| {
                let h = grid.f_spacing(a);
                let n = grid.f_counts[a] as i64;
                let lo = ((centre_x[a] - w) / h - 1e-9).ceil() as i64;
                let hi = ((centre_x[a] + w) / h + 1e-9).floor() as i64;
                if hi - lo + 1 > n {
                    let base = (centre_x[a] / h).round() as i64 - n / 2;
                    (base, base + n - 1)
                } else {
                    (lo, hi)
                }
            })
            .collect();
        cartesian(&f_ranges, |fj| {
            let mut d2 = 0.0;
            let mut multi = Vec::with_capacity(fj.len());
            for (a, &j) in fj.iter().enumerate() {
                let h = grid.f_spacing(a);
                let n = grid.f_counts[a] as i64;
                d2 += (j as f64 * h - centre_x[a]).powi(2);
                multi.push((j + n / 2).rem_euclid(n) as usize);
            }
            if d2 <= w * w * (1.0 + 1e-12) + 1e-300 {
                out.push(e * grid.f_len() + grid.f_flat(&multi));
            }
        });
    });
    out
}

/// `2^{−3}, …, 2^{3}` times `scale`.
pub fn radius_menu(scale: f64) -> Vec<f64> {
    (-3..=3).map(|k| scale * 2f64.powi(k)).collect()
}

/// `sup_r (⨍_{B(g,r)} |u|^p)^{1/p}` over the radius menu, with ball averages
/// normalized by the discrete ball volume.
pub fn maximal_function(siegel: &SiegelData, u: &GridFunction, p: f64, radii: &[f64]) -> Result<GridFunction> {
    if !(p > 0.0) {
        return Err(Error::domain(format!("p = {p} must lie in (0, ∞]")));
    }
    if p.is_infinite() {
        let top = u.max_abs();
        return Ok(GridFunction {
            grid: u.grid.clone(),
            values: vec![Complex64::new(top, 0.0); u.values.len()],
        });
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::domain("radius menu must be nonempty and positive"));
    }
    let grid = &u.grid;
    let powered = GridFunction {
        grid: grid.clone(),
        values: u.values.iter().map(|v| Complex64::new(v.norm().powf(p), 0.0)).collect(),
    };
    let origin = GroupPoint::identity(grid.n(), grid.m());
    let mut best = vec![0.0f64; grid.len()];
    for &r in radii {
        let ball = ball_indices(siegel, grid, &origin, r);
        let mut chi = GridFunction::zeros(grid);
        for &i in &ball {
            chi.values[i] = Complex64::new(1.0, 0.0);
        }
        let volume = ball.len() as f64 * grid.cell_measure();
        let conv = convolve_grid(siegel, &powered, &chi)?;
        best.par_iter_mut().zip(&conv.values).for_each(|(b, c)| {
            *b = b.max(c.re / volume);
        });
    }
    Ok(GridFunction {
        grid: grid.clone(),
        values: best.into_iter().map(|v| Complex64::new(v.max(0.0).powf(1.0 / p), 0.0)).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBounds {
    pub delta: f64,
    pub p: f64,
    /// `δ^{2Q/p} ‖max_{B̄(g_j,Rδ)} |u|‖_{ℓ^p}`.
    pub upper: f64,
    /// Same with ball minima.
    pub lower: f64,
    pub true_norm: f64,
}

/// Ball maxima and minima of `|u|` over `B̄(g_j, Rδ)`.
pub fn ball_extrema(siegel: &SiegelData, u: &GridFunction, lattice: &GroupLattice) -> Result<Vec<(f64, f64)>> {
    check_resolution(&u.grid, lattice.delta)?;
    let radius = lattice.r * lattice.delta;
    Ok(lattice
        .points
        .par_iter()
        .map(|g| {
            ball_indices(siegel, &u.grid, g, radius)
                .into_iter()
                .map(|i| u.values[i].norm())
                .fold((0.0f64, f64::INFINITY), |(hi, lo), v| (hi.max(v), lo.min(v)))
        })
        .map(|(hi, lo)| (hi, if lo.is_finite() { lo } else { 0.0 }))
        .collect())
}

pub fn sample_bounds(siegel: &SiegelData, u: &GridFunction, lattice: &GroupLattice, p: f64) -> Result<SampleBounds> {
    if !(p > 0.0) {
        return Err(Error::domain(format!("p = {p} must lie in (0, ∞]")));
    }
    let ext = ball_extrema(siegel, u, lattice)?;
    let scale = if p.is_infinite() {
        1.0
    } else {
        lattice.delta.powf(2.0 * siegel.homogeneous_dim() / p)
    };
    let seq = |sel: fn(&(f64, f64)) -> f64| -> f64 {
        let v: Vec<Complex64> = ext.iter().map(|e| Complex64::new(sel(e), 0.0)).collect();
        lp_norm_values(&v, 1.0, p)
    };
    Ok(SampleBounds {
        delta: lattice.delta,
        p,
        upper: scale * seq(|e| e.0),
        lower: scale * seq(|e| e.1),
        true_norm: lp_norm(u, p),
    })
}

/// Largest `δ` in `deltas` for which every function keeps `lower ≥ floor·upper`.
pub fn working_delta_minus(
    siegel: &SiegelData,
    functions: &[GridFunction],
    deltas: &[f64],
    p: f64,
    floor: f64,
    build: impl Fn(f64) -> Result<GroupLattice>,
) -> Result<Option<f64>> {
    let mut best = None;
    for &delta in deltas {
        let lattice = build(delta)?;
        let mut ok = true;
        for u in functions {
            let b = sample_bounds(siegel, u, &lattice, p)?;
            if b.lower < floor * b.upper {
                ok = false;
                break;
            }
        }
        if ok {
            best = Some(best.map_or(delta, |d: f64| d.max(delta)));
        }
    }
    Ok(best)
}

/// Left-invariant derivative applied in [`pointwise_bound_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Derivative {
    Identity,
    /// `∂/∂x_a` along the centre, computed spectrally.
    Central(usize),
    /// The left-invariant field extending `∂/∂ζ_a` at the identity
    /// (`a` indexes real `E` axes); finite differences along `E`.
    Horizontal(usize),
}

fn x_gradient(u: &GridFunction, axis: usize) -> GridFunction {
    let grid = &u.grid;
    let fl = grid.f_len();
    let plan = NdFft::new(&grid.f_counts);
    let n_axis = grid.f_counts[axis];
    let factor: Vec<Complex64> = (0..fl)
        .map(|k| {
            let b = grid.f_multi(k)[axis];
            let j = signed_index(b, n_axis);
            if 2 * j.unsigned_abs() as usize == n_axis {
                C0
            } else {
                Complex64::new(0.0, j as f64 * grid.dual_spacing(axis) / fl as f64)
            }
        })
        .collect();
    let mut values = u.values.clone();
    values.par_chunks_mut(fl).for_each(|block| {
        plan.process(block, Direction::Forward);
        block.iter_mut().zip(&factor).for_each(|(v, f)| *v *= f);
        plan.process(block, Direction::Inverse);
    });
    GridFunction {
        grid: grid.clone(),
        values,
    }
}

fn e_difference(u: &GridFunction, axis: usize) -> GridFunction {
    let grid = &u.grid;
    let fl = grid.f_len();
    let h = grid.e_spacing(axis);
    let n = grid.e_counts[axis] as i64;
    let coeffs = [(-2i64, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
    let mut values = vec![C0; grid.len()];
    values.par_chunks_mut(fl).enumerate().for_each(|(e, block)| {
        let multi = grid.e_multi(e);
        for &(off, c) in &coeffs {
            let j = multi[axis] as i64 + off;
            if j < 0 || j >= n {
                continue;
            }
            let mut m2 = multi.clone();
            m2[axis] = j as usize;
            let src = grid.e_flat(&m2) * fl;
            for k in 0..fl {
                block[k] += u.values[src + k] * (c / h);
            }
        }
    });
    GridFunction {
        grid: grid.clone(),
        values,
    }
}

pub fn apply_derivative(siegel: &SiegelData, u: &GridFunction, d: Derivative) -> Result<GridFunction> {
    let grid = &u.grid;
    match d {
        Derivative::Identity => Ok(u.clone()),
        Derivative::Central(a) => {
            if a >= grid.m() {
                return Err(Error::domain(format!("no central axis {a}")));
            }
            Ok(x_gradient(u, a))
        }
        Derivative::Horizontal(a) => {
            if a >= grid.e_counts.len() {
                return Err(Error::domain(format!("no horizontal axis {a}")));
            }
            let mut unit = vec![C0; siegel.n];
            unit[a / 2] = if a % 2 == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 1.0)
            };
            let mut out = e_difference(u, a);
            let fl = grid.f_len();
            for b in 0..grid.m() {
                let dx = x_gradient(u, b);
                out.values.par_chunks_mut(fl).enumerate().for_each(|(e, block)| {
                    // g·(t e_a, 0) moves x by t·2ImΦ(ζ, e_a)
                    let s = siegel.twisted_shift(&grid.zeta_at(e), &unit)[b];
                    for k in 0..fl {
                        block[k] += dx.values[e * fl + k] * s;
                    }
                });
            }
            Ok(out)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseOptions {
    pub p: f64,
    pub derivative: Derivative,
    pub samples: usize,
    /// Maximal Euclidean offset of `g′` from `g` per coordinate; 0 gives `g′ = g`.
    pub max_offset: f64,
    pub radius_scale: f64,
    pub seed: u64,
}

impl Default for PointwiseOptions {
    fn default() -> Self {
        PointwiseOptions {
            p: 1.0,
            derivative: Derivative::Identity,
            samples: 1000,
            max_offset: 0.0,
            radius_scale: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseReport {
    pub samples: usize,
    /// `sup |Xu(g)| / ((1 + d(g,g′))^{2Q/p} ℳ_p u(g′))`, the empirical constant.
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub max_lhs: f64,
}

/// Evaluates `|Xu(g)| ≤ C (1 + d(g,g′))^{2Q/p} ℳ_p u(g′)` on random pairs.
pub fn pointwise_bound_check(
    siegel: &SiegelData,
    sigma: &ScalarSymbol,
    grid: &Grid,
    opts: &PointwiseOptions,
) -> Result<PointwiseReport> {
    let u = synthesize(siegel, sigma, grid)?;
    pointwise_bound_grid(siegel, &u, opts)
}

pub fn pointwise_bound_grid(siegel: &SiegelData, u: &GridFunction, opts: &PointwiseOptions) -> Result<PointwiseReport> {
    let grid = &u.grid;
    let xu = apply_derivative(siegel, u, opts.derivative)?;
    let maximal = maximal_function(siegel, u, opts.p, &radius_menu(opts.radius_scale))?;
    let exponent = if opts.p.is_infinite() {
        0.0
    } else {
        2.0 * siegel.homogeneous_dim() / opts.p
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let fl = grid.f_len();
    let e_axes = grid.e_counts.len();
    let mut ratios = Vec::with_capacity(opts.samples);
    let mut max_lhs: f64 = 0.0;
    for _ in 0..opts.samples {
        let i = rng.gen_range(0..grid.len());
        let mut em = grid.e_multi(i / fl);
        let mut fm = grid.f_multi(i % fl);
        for a in 0..e_axes {
            let k = (opts.max_offset / grid.e_spacing(a)).floor() as i64;
            let off = if k > 0 { rng.gen_range(-k..=k) } else { 0 };
            em[a] = (em[a] as i64 + off).clamp(0, grid.e_counts[a] as i64 - 1) as usize;
        }
        for a in 0..grid.m() {
            let k = (opts.max_offset / grid.f_spacing(a)).floor() as i64;
            let off = if k > 0 { rng.gen_range(-k..=k) } else { 0 };
            let n = grid.f_counts[a] as i64;
            fm[a] = (fm[a] as i64 + off).rem_euclid(n) as usize;
        }
        let j = grid.e_flat(&em) * fl + grid.f_flat(&fm);
        let lhs = xu.values[i].norm();
        max_lhs = max_lhs.max(lhs);
        let d = torus_distance(siegel, grid, &grid.point(i), &grid.point(j));
        let rhs = (1.0 + d).powf(exponent) * maximal.values[j].re;
        ratios.push(if lhs == 0.0 { 0.0 } else { lhs / rhs });
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(PointwiseReport {
        samples: opts.samples,
        max_ratio,
        median_ratio: median(&ratios),
        max_lhs,
    })
}

pub(crate) fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Rejects exponents outside `p₁,p₂ ≤ p₃`, `1/p₁′ + 1/p₂′ ≤ 1/p₃′`, with
/// `p′` the conjugate of `max(1,p)`.
pub fn check_young_exponents(p1: f64, p2: f64, p3: f64) -> Result<()> {
    for (name, p) in [("p1", p1), ("p2", p2), ("p3", p3)] {
        if !(p > 0.0) {
            return Err(Error::domain(format!("{name} = {p} must lie in (0, ∞]")));
        }
    }
    let inv_conj = |p: f64| 1.0 - 1.0 / p.max(1.0);
    if p1 > p3 || p2 > p3 || inv_conj(p1) + inv_conj(p2) > inv_conj(p3) + 1e-12 {
        return Err(Error::precondition(format!(
            "exponents ({p1}, {p2}, {p3}) violate the Young relation"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YoungReport {
    pub p: [f64; 3],
    pub lhs: f64,
    pub norm_u: f64,
    pub norm_v: f64,
    /// `‖u*v‖_{p₃} / (‖u‖_{p₁}‖v‖_{p₂})`.
    pub ratio: f64,
}

fn young_report(p: [f64; 3], u: &GridFunction, v: &GridFunction, w: &GridFunction) -> YoungReport {
    let norm_u = lp_norm(u, p[0]);
    let norm_v = lp_norm(v, p[1]);
    let lhs = lp_norm(w, p[2]);
    let denom = norm_u * norm_v;
    YoungReport {
        p,
        lhs,
        norm_u,
        norm_v,
        ratio: if lhs == 0.0 { 0.0 } else { lhs / denom },
    }
}

/// Young check for analytic-type factors; `u*v` is synthesized from the
/// product symbol.
pub fn young_check(
    siegel: &SiegelData,
    sigma_u: &ScalarSymbol,
    sigma_v: &ScalarSymbol,
    grid: &Grid,
    p1: f64,
    p2: f64,
    p3: f64,
) -> Result<YoungReport> {
    check_young_exponents(p1, p2, p3)?;
    let u = synthesize(siegel, sigma_u, grid)?;
    let v = synthesize(siegel, sigma_v, grid)?;
    let w = synthesize(siegel, &convolve_symbols(sigma_u, sigma_v)?, grid)?;
    Ok(young_report([p1, p2, p3], &u, &v, &w))
}

/// Young check for arbitrary grid functions via grid convolution.
pub fn young_check_grid(siegel: &SiegelData, u: &GridFunction, v: &GridFunction, p1: f64, p2: f64, p3: f64) -> Result<YoungReport> {
    check_young_exponents(p1, p2, p3)?;
    let w = convolve_grid(siegel, u, v)?;
    Ok(young_report([p1, p2, p3], u, v, &w))
}

/// `e^{1 − 1/(1−t²)}` on `(−1,1)`.
pub fn window(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Band-limited random symbol `A(λ) Σ_k a_k e^{−i⟨λ,x_k⟩}` on the box
/// `[lo, hi]`: complex Gaussian amplitudes `a_k` and central translations
/// `x_k` uniform in `[−spread, spread]^m`. `A` is a product of windows.
#[allow(clippy::too_many_arguments)]
pub fn translated_bumps_symbol<R: Rng + ?Sized>(
    cone: &Cone,
    grid: &Grid,
    lo: &[f64],
    hi: &[f64],
    terms: usize,
    spread: f64,
    rng: &mut R,
) -> Result<ScalarSymbol> {
    let m = grid.m();
    let terms: Vec<(Complex64, Vec<f64>)> = (0..terms)
        .map(|_| {
            let a = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            let x: Vec<f64> = (0..m)
                .map(|_| if spread > 0.0 { rng.gen_range(-spread..spread) } else { 0.0 })
                .collect();
            (a, x)
        })
        .collect();
    let lo = lo.to_vec();
    let hi = hi.to_vec();
    let (blo, bhi) = (lo.clone(), hi.clone());
    ScalarSymbol::sample_region(cone, grid, &blo, &bhi, move |lam| {
        let mut env = 1.0;
        for a in 0..lam.len() {
            let c = 0.5 * (lo[a] + hi[a]);
            let w = 0.5 * (hi[a] - lo[a]);
            env *= window((lam[a] - c) / w);
        }
        if env == 0.0 {
            return C0;
        }
        terms
            .iter()
            .map(|(a, x)| {
                let phase: f64 = lam.iter().zip(x).map(|(l, y)| l * y).sum();
                a * Complex64::from_polar(env, -phase)
            })
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::Cone;
    use approx::assert_relative_eq;

    fn plane() -> SiegelData {
        SiegelData::abelian(Cone::product(2).unwrap())
    }

    #[test]
    fn ball_on_plane_is_euclidean_disc() {
        let siegel = plane();
        let grid = Grid::uniform(0, 2, 2, 1.0, 64, 4.0).unwrap();
        let c = GroupPoint {
            zeta: vec![],
            x: vec![0.0, 0.0],
        };
        let ball = ball_indices(&siegel, &grid, &c, 1.0);
        // radius 1 in quasi-distance = Euclidean radius 1, spacing 1/8
        let area = ball.len() as f64 * grid.cell_measure();
        assert!((area - std::f64::consts::PI).abs() < 0.1, "{area}");
        for &i in &ball {
            let p = grid.point(i);
            assert!(p.x[0].hypot(p.x[1]) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn ball_wraps_across_the_period() {
        let siegel = SiegelData::abelian(Cone::product(1).unwrap());
        let grid = Grid::uniform(0, 1, 2, 1.0, 16, 1.0).unwrap();
        let c = GroupPoint {
            zeta: vec![],
            x: vec![0.875],
        };
        let ball = ball_indices(&siegel, &grid, &c, 0.5);
        let mut xs: Vec<f64> = ball.iter().map(|&i| grid.point(i).x[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(ball.len(), 5);
        assert!(xs.contains(&-1.0) && xs.contains(&0.625));
    }

    #[test]
    fn heisenberg_ball_respects_distance() {
        let siegel = SiegelData::heisenberg(1).unwrap();
        let grid = Grid::uniform(1, 1, 16, 2.0, 32, 4.0).unwrap();
        let c = grid.point(grid.len() / 2 + 37);
        let ball = ball_indices(&siegel, &grid, &c, 0.9);
        assert!(!ball.is_empty());
        for &i in &ball {
            assert!(torus_distance(&siegel, &grid, &c, &grid.point(i)) <= 0.9 + 1e-9);
        }
        let count = (0..grid.len())
            .filter(|&i| torus_distance(&siegel, &grid, &c, &grid.point(i)) <= 0.9)
            .count();
        assert_eq!(count, ball.len());
    }

    #[test]
    fn maximal_of_constant_is_constant() {
        let siegel = SiegelData::heisenberg(1).unwrap();
        let grid = Grid::uniform(1, 1, 8, 2.0, 16, 2.0).unwrap();
        let u = GridFunction {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 3.0); grid.len()],
        };
        for p in [0.5, 1.0, 2.0, f64::INFINITY] {
            let mf = maximal_function(&siegel, &u, p, &radius_menu(0.5)).unwrap();
            for v in &mf.values {
                assert_relative_eq!(v.re, 3.0, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn maximal_dominates_and_is_monotone() {
        let siegel = plane();
        let grid = Grid::uniform(0, 2, 2, 1.0, 32, 4.0).unwrap();
        let u = GridFunction::from_fn(&grid, |g| Complex64::new((-(g.x[0].powi(2) + g.x[1].powi(2))).exp(), 0.0));
        let v = GridFunction {
            grid: grid.clone(),
            values: u.values.iter().map(|z| z * 2.0).collect(),
        };
        let mu = maximal_function(&siegel, &u, 1.0, &radius_menu(0.5)).unwrap();
        let mv = maximal_function(&siegel, &v, 1.0, &radius_menu(0.5)).unwrap();
        for i in 0..grid.len() {
            assert!(mu.values[i].re >= u.values[i].norm() * (1.0 - 1e-9));
            assert!(mv.values[i].re >= mu.values[i].re * (1.0 - 1e-9));
        }
    }

    #[test]
    fn regular_lattice_packs_and_covers() {
        let siegel = plane();
        let grid = Grid::uniform(0, 2, 2, 1.0, 64, 4.0).unwrap();
        let lat = GroupLattice::regular(&siegel, &grid, 0.7).unwrap();
        // δ-balls are Euclidean discs of radius δ², disjoint iff d ≥ √2 δ
        for (i, g) in lat.points.iter().enumerate() {
            for h in &lat.points[..i] {
                assert!(torus_distance(&siegel, &grid, g, h) >= 2f64.sqrt() * lat.delta - 1e-12);
            }
        }
        for idx in 0..grid.len() {
            let g = grid.point(idx);
            let near = lat.points.iter().map(|h| torus_distance(&siegel, &grid, h, &g)).fold(f64::INFINITY, f64::min);
            assert!(near <= lat.r * lat.delta);
        }
    }

    #[test]
    fn greedy_lattice_on_heisenberg_packs() {
        let siegel = SiegelData::heisenberg(1).unwrap();
        let grid = Grid::uniform(1, 1, 16, 2.0, 32, 4.0).unwrap();
        let lat = GroupLattice::greedy(&siegel, &grid, 0.8).unwrap();
        assert!(lat.len() > 1);
        for (i, g) in lat.points.iter().enumerate() {
            for h in &lat.points[..i] {
                assert!(torus_distance(&siegel, &grid, g, h) >= 1.6 - 1e-12);
            }
        }
        assert!(lat.r >= 1.0 && lat.r < 3.0, "{}", lat.r);
    }

    #[test]
    fn constant_function_samples_proportionally() {
        let siegel = plane();
        let grid = Grid::uniform(0, 2, 2, 1.0, 128, 4.0).unwrap();
        let lat = GroupLattice::regular(&siegel, &grid, 0.5).unwrap();
        let u = GridFunction {
            grid: grid.clone(),
            values: vec![Complex64::new(2.0, 0.0); grid.len()],
        };
        let b = sample_bounds(&siegel, &u, &lat, 1.5).unwrap();
        assert_relative_eq!(b.upper, b.lower, max_relative = 1e-12);
        let expect = 0.5f64.powf(4.0 / 1.5) * (lat.len() as f64).powf(1.0 / 1.5) * 2.0;
        assert_relative_eq!(b.upper, expect, max_relative = 1e-12);
        assert_relative_eq!(b.true_norm, 2.0 * 64f64.powf(1.0 / 1.5), max_relative = 1e-12);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let siegel = plane();
        let grid = Grid::uniform(0, 2, 2, 1.0, 16, 4.0).unwrap();
        let lat = GroupLattice::regular(&siegel, &grid, 0.5).unwrap();
        let u = GridFunction::zeros(&grid);
        assert!(matches!(sample_bounds(&siegel, &u, &lat, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn central_derivative_of_plane_wave() {
        let siegel = SiegelData::abelian(Cone::product(1).unwrap());
        let grid = Grid::uniform(0, 1, 2, 1.0, 64, std::f64::consts::PI).unwrap();
        let u = GridFunction::from_fn(&grid, |g| Complex64::from_polar(1.0, 3.0 * g.x[0]));
        let du = apply_derivative(&siegel, &u, Derivative::Central(0)).unwrap();
        for i in 0..grid.len() {
            assert!((du.values[i] - u.values[i] * Complex64::new(0.0, 3.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn horizontal_field_matches_group_difference() {
        let siegel = SiegelData::heisenberg(1).unwrap();
        let grid = Grid::uniform(1, 1, 64, 3.0, 64, 6.0).unwrap();
        let f = |g: &GroupPoint| {
            let r2 = g.zeta[0].norm_sqr();
            Complex64::new((-r2 - 0.5 * g.x[0] * g.x[0]).exp(), 0.0) * Complex64::from_polar(1.0, 0.3 * g.x[0])
        };
        let u = GridFunction::from_fn(&grid, f);
        let xu = apply_derivative(&siegel, &u, Derivative::Horizontal(0)).unwrap();
        let probe = grid.e_flat(&[36, 30]) * grid.f_len() + grid.f_flat(&[35]);
        let g = grid.point(probe);
        let t = 1e-5;
        let step = GroupPoint {
            zeta: vec![Complex64::new(t, 0.0)],
            x: vec![0.0],
        };
        let back = GroupPoint {
            zeta: vec![Complex64::new(-t, 0.0)],
            x: vec![0.0],
        };
        let fd = (f(&siegel.multiply(&g, &step).unwrap()) - f(&siegel.multiply(&g, &back).unwrap())) / (2.0 * t);
        assert!((xu.values[probe] - fd).norm() < 1e-3 * fd.norm().max(1e-3), "{} vs {}", xu.values[probe], fd);
    }

    #[test]
    fn pointwise_bound_on_zero_is_zero() {
        let siegel = plane();
        let grid = Grid::uniform(0, 2, 2, 1.0, 32, 4.0).unwrap();
        let rep = pointwise_bound_grid(&siegel, &GridFunction::zeros(&grid), &PointwiseOptions::default()).unwrap();
        assert_eq!(rep.max_ratio, 0.0);
        assert_eq!(rep.max_lhs, 0.0);
    }

    #[test]
    fn young_exponents_are_checked() {
        assert!(check_young_exponents(1.0, 1.0, 1.0).is_ok());
        assert!(check_young_exponents(0.5, 0.5, 0.5).is_ok());
        assert!(check_young_exponents(2.0, 2.0, f64::INFINITY).is_ok());
        assert!(check_young_exponents(2.0, 1.0, 1.0).is_err());
        assert!(check_young_exponents(2.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn young_l1_ratio_at_most_one() {
        let siegel = SiegelData::abelian(Cone::product(1).unwrap());
        let grid = Grid::uniform(0, 1, 2, 1.0, 512, 40.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let su = translated_bumps_symbol(&siegel.cone, &grid, &[1.0], &[2.0], 4, 10.0, &mut rng).unwrap();
        let sv = translated_bumps_symbol(&siegel.cone, &grid, &[1.0], &[2.0], 4, 10.0, &mut rng).unwrap();
        let rep = young_check(&siegel, &su, &sv, &grid, 1.0, 1.0, 1.0).unwrap();
        assert!(rep.ratio <= 1.0 + 1e-6 && rep.ratio > 0.0, "{}", rep.ratio);
        let u = synthesize(&siegel, &su, &grid).unwrap();
        let v = synthesize(&siegel, &sv, &grid).unwrap();
        let direct = young_check_grid(&siegel, &u, &v, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(direct.lhs, rep.lhs, max_relative = 1e-8);
    }

    #[test]
    fn disjoint_spectra_convolve_to_zero() {
        let siegel = SiegelData::abelian(Cone::product(1).unwrap());
        let grid = Grid::uniform(0, 1, 2, 1.0, 256, 20.0).unwrap();
        let at = |c: f64| {
            ScalarSymbol::sample_region(&siegel.cone, &grid, &[0.5], &[4.5], move |l| Complex64::new(window(2.0 * (l[0] - c)), 0.0))
                .unwrap()
        };
        let rep = young_check(&siegel, &at(1.5), &at(3.5), &grid, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(rep.ratio, 0.0);
    }
}
