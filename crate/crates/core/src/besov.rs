//! Besov quasi-norms: analytic type over a lattice of `Ω′`, and the classical
//! dyadic scale driven by `N(λ)`.
//!
//! Pieces are evaluated at the base scale: for `t ∈ T₊`,
//! `‖F⁻¹[τ(·t⁻¹)]‖_p = J(t)^{1−1/p} ‖F⁻¹[τ]‖_p` with `J = Δ^{−(b+d)}`, so each
//! lattice piece is synthesized on one grid fitted to `B(e′, Rδ)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::{Cone, PowerExponent, Region, Side, Triangular};
use crate::error::{ensure_dim, Error, Result};
use crate::fft::{signed_index, Direction, NdFft};
use crate::lattice::{ball_cloud, region_samples, support_cloud, BumpFamily, BumpMode, LatticeSpec, TransportKind};
use crate::nilgroup::{Grid, GridFunction, SiegelData};
use crate::spectral::{fit_grid, n_lambda, synthesize, GridPlan, ScalarSymbol, Symbol};

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `(Σ |v|^p · cell)^{1/p}`, or the max for `p = ∞`.
pub fn lp_norm_values(values: &[Complex64], cell: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    let s: f64 = values.iter().map(|v| v.norm().powf(p)).sum::<f64>() * cell;
    s.powf(1.0 / p)
}

pub fn lp_norm(u: &GridFunction, p: f64) -> f64 {
    lp_norm_values(&u.values, u.grid.cell_measure(), p)
}

/// `ℓ^q` quasi-norm of a finite nonnegative sequence.
pub fn lq_norm(seq: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return seq.iter().copied().fold(0.0, f64::max);
    }
    seq.iter().map(|a| a.powf(q)).sum::<f64>().powf(1.0 / q)
}

fn check_exponent(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) {
        return Err(Error::domain(format!("{name} = {v} must lie in (0, ∞]")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub s: PowerExponent,
    pub p: f64,
    pub q: f64,
}

impl BesovParams {
    pub fn new(s: PowerExponent, p: f64, q: f64) -> Result<BesovParams> {
        check_exponent("p", p)?;
        check_exponent("q", q)?;
        Ok(BesovParams { s, p, q })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceRecord {
    pub k: usize,
    pub lambda_k: Vec<f64>,
    pub weight: f64,
    pub lp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovReport {
    pub params: BesovParams,
    pub per_index: Vec<PieceRecord>,
    pub total: f64,
}

/// `J(t) = Δ^{−(b+d)}(t)`, the Jacobian factor of `u ↦ F⁻¹[σ(·t⁻¹)]`.
pub fn jacobian(siegel: &SiegelData, t: &Triangular) -> f64 {
    t.character(&siegel.b.add(&siegel.cone.d).neg())
}

/// A lattice, its bumps and a base-scale grid: everything needed to cut a
/// symbol into Littlewood–Paley pieces.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub siegel: SiegelData,
    pub spec: LatticeSpec,
    pub bumps: BumpFamily,
    pub grid: Grid,
    /// Region enclosing the support of each bump.
    pub supports: Vec<Region>,
    /// Coordinate box in `Ω′` enclosing the support of each bump.
    pub boxes: Vec<(Vec<f64>, Vec<f64>)>,
    base_lo: Vec<f64>,
    base_hi: Vec<f64>,
}

impl Decomposition {
    pub fn new(siegel: &SiegelData, spec: &LatticeSpec, bumps: BumpFamily, plan: &GridPlan) -> Result<Decomposition> {
        if spec.transport == TransportKind::Quadratic && !siegel.is_abelian() {
            return Err(Error::precondition(
                "base-scale pieces need T₊ transports when E is nontrivial",
            ));
        }
        let cloud = ball_cloud(&siegel.cone, bumps.r * bumps.delta);
        let grid = fit_grid(siegel, &cloud, plan)?;
        let m = siegel.m;
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for p in &cloud {
            for a in 0..m {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let reach = bumps.r * bumps.delta;
        let (supports, boxes): (Vec<Region>, Vec<(Vec<f64>, Vec<f64>)>) = (0..bumps.len())
            .into_par_iter()
            .map(|k| -> Result<(Region, (Vec<f64>, Vec<f64>))> {
                let cloud = support_cloud(&siegel.cone, &bumps, k);
                let region = Region::enclosing(&siegel.cone, &cloud, 0.02 * reach + 1e-9)?;
                let mut blo = vec![f64::INFINITY; m];
                let mut bhi = vec![f64::NEG_INFINITY; m];
                for p in &cloud {
                    for a in 0..m {
                        blo[a] = blo[a].min(p[a]);
                        bhi[a] = bhi[a].max(p[a]);
                    }
                }
                // the cloud samples the sphere; widen to stay conservative
                for a in 0..m {
                    let pad = 0.02 * (bhi[a] - blo[a]) + 1e-12;
                    blo[a] -= pad;
                    bhi[a] += pad;
                }
                Ok((region, (blo, bhi)))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        Ok(Decomposition {
            siegel: siegel.clone(),
            spec: spec.clone(),
            bumps,
            grid,
            supports,
            boxes,
            base_lo: lo,
            base_hi: hi,
        })
    }

    pub fn len(&self) -> usize {
        self.spec.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec.is_empty()
    }

    /// Base-scale symbol `μ ↦ f(μ·t_k) φ_k(μ·t_k)^{power}`.
    pub fn base_symbol(&self, k: usize, power: i32, f: &(dyn Fn(&[f64]) -> Complex64 + Sync)) -> Result<ScalarSymbol> {
        let t = &self.spec.transports[k];
        let bumps = &self.bumps;
        ScalarSymbol::sample_region(&self.siegel.cone, &self.grid, &self.base_lo, &self.base_hi, |mu| {
            let lam = t.act_dual(mu);
            let phi = bumps.value(k, &lam);
            if phi == 0.0 {
                return C0;
            }
            f(&lam) * phi.powi(power)
        })
    }

    /// `u * ψ_k` at base scale, or `None` when the piece vanishes.
    pub fn base_piece(&self, k: usize, power: i32, f: &(dyn Fn(&[f64]) -> Complex64 + Sync)) -> Result<Option<GridFunction>> {
        let sym = self.base_symbol(k, power, f)?;
        if sym.values.iter().all(|v| *v == C0) {
            return Ok(None);
        }
        Ok(Some(synthesize(&self.siegel, &sym, &self.grid)?))
    }

    pub fn jacobian(&self, k: usize) -> f64 {
        jacobian(&self.siegel, &self.spec.transports[k])
    }

    /// `‖u * ψ_k‖_p` (or `‖ψ_k * u * ψ_k‖_p` with `power = 2`) for every `k`
    /// with a nonzero piece.
    pub fn piece_norms(&self, f: &(dyn Fn(&[f64]) -> Complex64 + Sync), p: f64, power: i32) -> Result<Vec<(usize, f64)>> {
        self.piece_norms_within(f, p, power, None)
    }

    /// As [`Decomposition::piece_norms`], skipping bumps whose support misses
    /// `support`.
    pub fn piece_norms_within(
        &self,
        f: &(dyn Fn(&[f64]) -> Complex64 + Sync),
        p: f64,
        power: i32,
        support: Option<&Region>,
    ) -> Result<Vec<(usize, f64)>> {
        self.piece_norms_filtered(f, p, power, &|k| support.map_or(true, |s| overlaps(s, &self.supports[k])))
    }

    /// As [`Decomposition::piece_norms`] over the indices accepted by `keep`.
    pub fn piece_norms_filtered(
        &self,
        f: &(dyn Fn(&[f64]) -> Complex64 + Sync),
        p: f64,
        power: i32,
        keep: &(dyn Fn(usize) -> bool + Sync),
    ) -> Result<Vec<(usize, f64)>> {
        check_exponent("p", p)?;
        let out: Vec<Option<(usize, f64)>> = (0..self.len())
            .into_par_iter()
            .map(|k| -> Result<Option<(usize, f64)>> {
                if !keep(k) {
                    return Ok(None);
                }
                Ok(self.piece_norm(k, f, p, power)?.map(|v| (k, v)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(out.into_iter().flatten().collect())
    }

    /// `J_k^{1−1/p} ‖u * ψ_k‖_p` computed at base scale.
    pub fn piece_norm(&self, k: usize, f: &(dyn Fn(&[f64]) -> Complex64 + Sync), p: f64, power: i32) -> Result<Option<f64>> {
        let scale = if p.is_infinite() { 1.0 } else { 1.0 - 1.0 / p };
        Ok(self
            .base_piece(k, power, f)?
            .map(|u| self.jacobian(k).powf(scale) * lp_norm(&u, p)))
    }

    fn check_support(&self, sigma: &Symbol) -> Result<()> {
        if !sigma.support.is_subset_of(&self.spec.region) {
            return Err(Error::precondition(format!(
                "symbol support {:?} escapes the lattice region {:?}",
                sigma.support, self.spec.region
            )));
        }
        Ok(())
    }
}

fn overlaps(a: &Region, b: &Region) -> bool {
    a.scale.0 <= b.scale.1 * (1.0 + 1e-12) && b.scale.0 <= a.scale.1 * (1.0 + 1e-12)
}

/// `‖(Δ^s(λ_k) ‖u * ψ_k‖_p)_k‖_{ℓ^q}`; with `symmetrized` the pieces are
/// `ψ_k * u * ψ_k`.
pub fn besov_analytic(dec: &Decomposition, sigma: &Symbol, params: &BesovParams, symmetrized: bool) -> Result<BesovReport> {
    dec.check_support(sigma)?;
    besov_analytic_within(
        dec,
        &|l: &[f64]| sigma.eval(&dec.siegel.cone, l),
        params,
        symmetrized,
        Some(&sigma.support),
    )
}

/// As [`besov_analytic`] with the spectrum known to lie in the coordinate box
/// `[lo, hi]`; pieces whose bump box misses it are skipped.
pub fn besov_analytic_in_box(
    dec: &Decomposition,
    sigma: &Symbol,
    lo: &[f64],
    hi: &[f64],
    params: &BesovParams,
    symmetrized: bool,
) -> Result<BesovReport> {
    dec.check_support(sigma)?;
    ensure_dim(dec.siegel.cone.dim, lo.len())?;
    ensure_dim(dec.siegel.cone.dim, hi.len())?;
    let keep = |k: usize| {
        let (blo, bhi) = &dec.boxes[k];
        overlaps(&sigma.support, &dec.supports[k]) && (0..lo.len()).all(|a| blo[a] <= hi[a] && lo[a] <= bhi[a])
    };
    finish_analytic(
        dec,
        &|l: &[f64]| sigma.eval(&dec.siegel.cone, l),
        params,
        symmetrized,
        &keep,
    )
}

/// As [`besov_analytic`] for a symbol given by a bare function (no support
/// check).
pub fn besov_analytic_fn(
    dec: &Decomposition,
    f: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    params: &BesovParams,
    symmetrized: bool,
) -> Result<BesovReport> {
    ensure_dim(dec.siegel.cone.rank, params.s.rank())?;
    check_exponent("q", params.q)?;
    besov_analytic_within(dec, f, params, symmetrized, None)
}

fn besov_analytic_within(
    dec: &Decomposition,
    f: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    params: &BesovParams,
    symmetrized: bool,
    support: Option<&Region>,
) -> Result<BesovReport> {
    finish_analytic(dec, f, params, symmetrized, &|k| {
        support.map_or(true, |s| overlaps(s, &dec.supports[k]))
    })
}

fn finish_analytic(
    dec: &Decomposition,
    f: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    params: &BesovParams,
    symmetrized: bool,
    keep: &(dyn Fn(usize) -> bool + Sync),
) -> Result<BesovReport> {
    ensure_dim(dec.siegel.cone.rank, params.s.rank())?;
    check_exponent("q", params.q)?;
    let power = if symmetrized { 2 } else { 1 };
    let per_index: Vec<PieceRecord> = dec
        .piece_norms_filtered(f, params.p, power, keep)?
        .into_iter()
        .map(|(k, lp)| PieceRecord {
            k,
            lambda_k: dec.spec.points[k].clone(),
            weight: dec.spec.transports[k].character(&params.s),
            lp,
        })
        .collect();
    let seq: Vec<f64> = per_index.iter().map(|r| r.weight * r.lp).collect();
    Ok(BesovReport {
        params: params.clone(),
        total: lq_norm(&seq, params.q),
        per_index,
    })
}

/// `Σ_k ⟨u * ψ_k, v * ψ_k⟩` over a `partition_sq` family.
pub fn duality_pairing(dec: &Decomposition, sigma_u: &Symbol, sigma_v: &Symbol) -> Result<Complex64> {
    if dec.bumps.mode != BumpMode::PartitionSq {
        return Err(Error::precondition("the duality pairing needs partition_sq bumps"));
    }
    let cone = &dec.siegel.cone;
    let terms = (0..dec.len())
        .into_par_iter()
        .map(|k| -> Result<Complex64> {
            let a = dec.base_piece(k, 1, &|l| sigma_u.eval(cone, l))?;
            let b = dec.base_piece(k, 1, &|l| sigma_v.eval(cone, l))?;
            Ok(match (a, b) {
                (Some(a), Some(b)) => {
                    let ip: Complex64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y.conj()).sum();
                    ip * (a.grid.cell_measure() * dec.jacobian(k))
                }
                _ => C0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(terms.into_iter().sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub target: f64,
    pub source: f64,
    pub ratio: f64,
}

/// `‖u‖_{B^{s₂}_{p₂,q₂}} / ‖u‖_{B^{s₁}_{p₁,q₁}}` with
/// `s₂ = s₁ + (1/p₁ − 1/p₂)(b+d)`.
pub fn embedding_ratio(dec: &Decomposition, sigma: &Symbol, source: &BesovParams, target: &BesovParams) -> Result<EmbeddingReport> {
    if source.p > target.p || source.q > target.q {
        return Err(Error::domain("embedding needs p₁ ≤ p₂ and q₁ ≤ q₂"));
    }
    let inv = |p: f64| if p.is_infinite() { 0.0 } else { 1.0 / p };
    let bd = dec.siegel.b.add(&dec.siegel.cone.d);
    let expected = source.s.add(&bd.scale(inv(source.p) - inv(target.p)));
    if expected.iter().zip(target.s.iter()).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::domain(format!(
            "target smoothness {:?} violates s₂ = s₁ + (1/p₁ − 1/p₂)(b+d) = {:?}",
            target.s, expected
        )));
    }
    let a = besov_analytic(dec, sigma, target, false)?.total;
    let b = besov_analytic(dec, sigma, source, false)?.total;
    Ok(EmbeddingReport {
        target: a,
        source: b,
        ratio: a / b,
    })
}

/// Dyadic cutoff: `η = 1` on `[3/4, 2]`, support `[1/2, 3]`,
/// `Σ_j η(4^{−j} y) = 1` on `(0, ∞)`.
pub fn eta(y: f64) -> f64 {
    step_down(y) - step_down(4.0 * y)
}

/// Smooth `1` on `(−∞, 2]`, `0` on `[3, ∞)`.
fn step_down(y: f64) -> f64 {
    if y <= 2.0 {
        return 1.0;
    }
    if y >= 3.0 {
        return 0.0;
    }
    let f = |x: f64| (-1.0 / x).exp();
    let (a, b) = (f(3.0 - y), f(y - 2.0));
    a / (a + b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicRecord {
    pub j: i32,
    pub weight: f64,
    pub lp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalReport {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub per_scale: Vec<DyadicRecord>,
    pub total: f64,
}

fn finish_classical(s: f64, p: f64, q: f64, per_scale: Vec<DyadicRecord>) -> ClassicalReport {
    let seq: Vec<f64> = per_scale.iter().map(|r| r.weight * r.lp).collect();
    ClassicalReport {
        s,
        p,
        q,
        total: lq_norm(&seq, q),
        per_scale,
    }
}

/// Classical norm `‖(2^{sj} ‖u * ψ_j‖_p)_j‖_{ℓ^q}` of an analytic-type
/// function, `ψ_j` acting by `η(4^{−j} N(λ)/N(e′))`.
pub fn besov_classical_symbol(
    siegel: &SiegelData,
    sigma: &Symbol,
    s: f64,
    p: f64,
    q: f64,
    plan: &GridPlan,
) -> Result<ClassicalReport> {
    let (lo, hi) = sigma.support.lambda_box(&siegel.cone);
    besov_classical_in_box(siegel, sigma, &lo, &hi, s, p, q, plan)
}

/// As [`besov_classical_symbol`] with the spectrum known to lie in the box
/// `[lo, hi]`, which may be much thinner than the support region.
#[allow(clippy::too_many_arguments)]
pub fn besov_classical_in_box(
    siegel: &SiegelData,
    sigma: &Symbol,
    lo: &[f64],
    hi: &[f64],
    s: f64,
    p: f64,
    q: f64,
    plan: &GridPlan,
) -> Result<ClassicalReport> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    let cone = &siegel.cone;
    ensure_dim(cone.dim, lo.len())?;
    ensure_dim(cone.dim, hi.len())?;
    let ne = n_lambda(siegel, cone.base_point(Side::Dual));
    let (lo, hi) = (lo.to_vec(), hi.to_vec());
    let corners = box_corners(&lo, &hi);
    let nvals: Vec<f64> = corners
        .iter()
        .filter(|c| cone.contains(Side::Dual, c))
        .map(|c| n_lambda(siegel, c))
        .chain(std::iter::once(
            n_lambda(siegel, &lo.iter().map(|v| v.max(0.0)).collect::<Vec<_>>()),
        ))
        .collect();
    let nmin = nvals.iter().copied().fold(f64::INFINITY, f64::min).max(
        // the support stays away from 0; its scale bounds N from below
        sigma.support.scale.0.powi(2) * ne * 1e-3,
    );
    let nmax = corners.iter().map(|c| n_lambda(siegel, c)).fold(0.0, f64::max);
    let j_lo = ((nmin / (3.0 * ne)).log(4.0)).floor() as i32 - 1;
    let j_hi = ((2.0 * nmax / ne).log(4.0)).ceil() as i32 + 1;
    // each scale gets its own grid fitted to 2^{−j}·box clipped to the annulus
    let radius = (3.0 * ne).sqrt();
    let inner: Vec<Vec<f64>> = region_samples(cone, &sigma.support, 64, 0x5ca1e)
        .into_iter()
        .filter(|c| c.iter().zip(&lo).zip(&hi).all(|((v, l), h)| v >= l && v <= h))
        .collect();
    let records = (j_lo..=j_hi)
        .into_par_iter()
        .map(|j| -> Result<Option<DyadicRecord>> {
            let rho = 2f64.powi(j);
            let blo: Vec<f64> = lo.iter().map(|v| (v / rho).max(-radius)).collect();
            let bhi: Vec<f64> = hi.iter().map(|v| (v / rho).min(radius)).collect();
            if blo.iter().zip(&bhi).any(|(l, h)| l > h) {
                return Ok(None);
            }
            let mut cloud = box_corners(&blo, &bhi);
            cloud.extend(inner.iter().map(|c| c.iter().map(|v| v / rho).collect::<Vec<_>>()));
            if !cloud.iter().any(|c| cone.contains(Side::Dual, c)) {
                return Ok(None);
            }
            let grid = fit_grid(siegel, &cloud, plan)?;
            let sym = ScalarSymbol::sample_region(cone, &grid, &blo, &bhi, |mu| {
                let e = eta(n_lambda(siegel, mu) / ne);
                if e == 0.0 {
                    return C0;
                }
                let lam: Vec<f64> = mu.iter().map(|v| v * rho).collect();
                sigma.eval(cone, &lam) * e
            })?;
            if sym.values.iter().all(|v| *v == C0) {
                return Ok(None);
            }
            let u = synthesize(siegel, &sym, &grid)?;
            let scale = if p.is_infinite() { 1.0 } else { 1.0 - 1.0 / p };
            Ok(Some(DyadicRecord {
                j,
                weight: 2f64.powf(s * j as f64),
                lp: jacobian(siegel, &cone.dilation(rho)).powf(scale) * lp_norm(&u, p),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish_classical(s, p, q, records.into_iter().flatten().collect()))
}

fn box_corners(lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let d = lo.len();
    (0..(1usize << d))
        .map(|mask| (0..d).map(|a| if mask >> a & 1 == 1 { hi[a] } else { lo[a] }).collect())
        .collect()
}

/// Classical norm of a function on the abelian group `R^m`, with
/// `ψ_j` acting by `η(4^{−j}|κ|²/n_unit)` on its Fourier transform.
pub fn besov_classical_grid(u: &GridFunction, s: f64, p: f64, q: f64, n_unit: f64) -> Result<ClassicalReport> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    let grid = &u.grid;
    if grid.n() != 0 {
        return Err(Error::precondition(
            "grid-based classical norms need an abelian group; pass a symbol instead",
        ));
    }
    let plan = NdFft::new(&grid.f_counts);
    let mut spec = u.values.clone();
    plan.process(&mut spec, Direction::Forward);
    let k2: Vec<f64> = (0..grid.f_len())
        .map(|i| {
            grid.f_multi(i)
                .iter()
                .enumerate()
                .map(|(a, &b)| (signed_index(b, grid.f_counts[a]) as f64 * grid.dual_spacing(a)).powi(2))
                .sum()
        })
        .collect();
    let kmax = k2.iter().copied().fold(0.0, f64::max);
    let kmin = k2.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    if !kmin.is_finite() {
        return Ok(finish_classical(s, p, q, Vec::new()));
    }
    let j_lo = ((kmin / (3.0 * n_unit)).log(4.0)).floor() as i32;
    let j_hi = ((2.0 * kmax / n_unit).log(4.0)).ceil() as i32;
    let n = grid.f_len() as f64;
    let records: Vec<DyadicRecord> = (j_lo..=j_hi)
        .into_par_iter()
        .filter_map(|j| {
            let scale = 4f64.powi(-j) / n_unit;
            let mut piece: Vec<Complex64> = spec
                .iter()
                .zip(&k2)
                .map(|(v, &k)| v * eta(k * scale))
                .collect();
            if piece.iter().all(|v| *v == C0) {
                return None;
            }
            plan.process(&mut piece, Direction::Inverse);
            piece.iter_mut().for_each(|v| *v /= n);
            Some(DyadicRecord {
                j,
                weight: 2f64.powf(s * j as f64),
                lp: lp_norm_values(&piece, grid.cell_measure(), p),
            })
        })
        .collect();
    Ok(finish_classical(s, p, q, records))
}

/// Whether the cone's characters are those of homotheties only (rank 1).
pub fn is_rank_one(cone: &Cone) -> bool {
    cone.rank == 1
}
