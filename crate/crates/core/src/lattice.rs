//! `(δ,R)`-lattices on `Ω′` and the bump families subordinate to them.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::{Cone, ConeKind, Region, Side, Triangular};
use crate::error::{Error, Result};
use crate::nilgroup::SiegelData;
use crate::spectral::n_lambda;

/// How a lattice point `λ_k` is reached from `e′`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportKind {
    /// The element of `T₊` from `transport_solve`.
    #[default]
    Triangular,
    /// The quadratic representation `P(λ_k^{1/2})` (Lorentz cones only).
    Quadratic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub delta: f64,
    pub r: f64,
    pub points: Vec<Vec<f64>>,
    pub region: Region,
    pub transport: TransportKind,
    #[serde(skip)]
    pub transports: Vec<Triangular>,
}

impl LatticeSpec {
    /// Build a spec from explicit points, solving for the transports.
    pub fn from_points(
        cone: &Cone,
        delta: f64,
        r: f64,
        region: Region,
        points: Vec<Vec<f64>>,
        transport: TransportKind,
    ) -> Result<LatticeSpec> {
        let transports = points
            .iter()
            .map(|p| transport_to(cone, p, transport))
            .collect::<Result<Vec<_>>>()?;
        Ok(LatticeSpec {
            delta,
            r,
            points,
            region,
            transport,
            transports,
        })
    }

    /// Recompute transports after deserialization.
    pub fn restore(&mut self, cone: &Cone) -> Result<()> {
        self.transports = self
            .points
            .iter()
            .map(|p| transport_to(cone, p, self.transport))
            .collect::<Result<Vec<_>>>()?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Apply `t` to every point (`λ_k ↦ λ_k·t`).
    pub fn transported(&self, cone: &Cone, t: &Triangular) -> Result<LatticeSpec> {
        let points = self.points.iter().map(|p| t.act_dual(p)).collect();
        LatticeSpec::from_points(cone, self.delta, self.r, self.region.clone(), points, self.transport)
    }
}

fn transport_to(cone: &Cone, lambda: &[f64], kind: TransportKind) -> Result<Triangular> {
    match (kind, cone.kind) {
        (TransportKind::Triangular, _) | (TransportKind::Quadratic, ConeKind::Product) => cone.transport_solve(lambda),
        (TransportKind::Quadratic, ConeKind::Lorentz) => {
            let delta = cone.power_coordinates(Side::Dual, lambda)?;
            let a = lorentz_sqrt(lambda);
            Ok(Triangular {
                matrix: lorentz_quadratic(&a),
                delta,
            })
        }
    }
}

/// Square root in the spin factor with unit `(1,0,…,0)`.
fn lorentz_sqrt(lambda: &[f64]) -> Vec<f64> {
    let tail = &lambda[1..];
    let nt = tail.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (s1, s2) = ((lambda[0] + nt).sqrt(), (lambda[0] - nt).sqrt());
    let mut out = vec![0.5 * (s1 + s2)];
    if nt > 0.0 {
        out.extend(tail.iter().map(|v| 0.5 * (s1 - s2) * v / nt));
    } else {
        out.extend(tail.iter().map(|_| 0.0));
    }
    out
}

/// `P(a)x = 2⟨a,x⟩a − Q(a) x̄` with `x̄ = (x₀, −x′)`.
fn lorentz_quadratic(a: &[f64]) -> DMatrix<f64> {
    let n = a.len();
    let q = a[0] * a[0] - a[1..].iter().map(|v| v * v).sum::<f64>();
    DMatrix::from_fn(n, n, |i, j| {
        let conj = if j == 0 { 1.0 } else { -1.0 };
        2.0 * a[i] * a[j] - if i == j { q * conj } else { 0.0 }
    })
}

/// Point prepared for repeated invariant-distance evaluation.
pub struct Prepared(Vec<f64>);

/// Distances `d(λ_k, ·)` to a fixed list of centres.
#[derive(Clone, Debug)]
pub struct DistanceKernel {
    kind: ConeKind,
    /// Product cones: log-coordinates of the centres.
    logs: Vec<Vec<f64>>,
    /// Lorentz cones: `(M_k⁻¹)ᵀ` so that `λ·t_k⁻¹ = inv[k] λ`.
    inv: Vec<DMatrix<f64>>,
}

impl DistanceKernel {
    pub fn new(cone: &Cone, transports: &[Triangular], points: &[Vec<f64>]) -> DistanceKernel {
        match cone.kind {
            ConeKind::Product => DistanceKernel {
                kind: cone.kind,
                logs: points.iter().map(|p| p.iter().map(|v| v.ln()).collect()).collect(),
                inv: Vec::new(),
            },
            ConeKind::Lorentz => DistanceKernel {
                kind: cone.kind,
                logs: Vec::new(),
                inv: transports
                    .iter()
                    .map(|t| t.inverse().matrix.transpose())
                    .collect(),
            },
        }
    }

    pub fn prepare(&self, lambda: &[f64]) -> Prepared {
        match self.kind {
            ConeKind::Product => Prepared(lambda.iter().map(|v| v.ln()).collect()),
            ConeKind::Lorentz => Prepared(lambda.to_vec()),
        }
    }

    /// `d(λ_k, λ)`; infinite outside the cone.
    pub fn distance(&self, k: usize, p: &Prepared) -> f64 {
        match self.kind {
            ConeKind::Product => {
                let s: f64 = self.logs[k].iter().zip(&p.0).map(|(a, b)| (a - b) * (a - b)).sum();
                if s.is_nan() {
                    f64::INFINITY
                } else {
                    s.sqrt()
                }
            }
            ConeKind::Lorentz => {
                let rel = &self.inv[k] * DVector::from_column_slice(&p.0);
                let nt = rel.iter().skip(1).map(|v| v * v).sum::<f64>().sqrt();
                let (a, b) = (rel[0] + nt, rel[0] - nt);
                if a <= 0.0 || b <= 0.0 {
                    return f64::INFINITY;
                }
                (a.ln().powi(2) + b.ln().powi(2)).sqrt()
            }
        }
    }
}

/// Options for [`build_lattice_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeOptions {
    /// Fixed `R`; `None` takes `max(2, 1.05 × measured covering radius / δ)`.
    pub r: Option<f64>,
    pub transport: TransportKind,
    /// Random region samples used to measure coverage.
    pub cover_samples: usize,
    pub seed: u64,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        LatticeOptions {
            r: None,
            transport: TransportKind::Triangular,
            cover_samples: 4000,
            seed: 0x1a77_1ce5,
        }
    }
}

/// Chart-mesh candidates at spacing `δ/4`, ordered by distance from `e′`.
fn candidates(cone: &Cone, delta: f64, region: &Region) -> Vec<(Vec<f64>, Vec<f64>)> {
    let h = delta / 4.0;
    let (lo, hi) = region.chart_box(cone);
    let ranges: Vec<(i64, i64)> = lo
        .iter()
        .zip(&hi)
        .map(|(l, u)| ((l / h).floor() as i64, (u / h).ceil() as i64))
        .collect();
    let mut out = Vec::new();
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        let y: Vec<f64> = idx.iter().map(|&i| i as f64 * h).collect();
        let lam = cone.chart(&y);
        if region.contains(cone, &lam) {
            out.push((y, lam));
        }
        let mut a = 0;
        loop {
            if a == idx.len() {
                out.sort_by(|p, q| {
                    let np: f64 = p.0.iter().map(|v| v * v).sum();
                    let nq: f64 = q.0.iter().map(|v| v * v).sum();
                    np.total_cmp(&nq).then_with(|| {
                        p.0.iter()
                            .zip(&q.0)
                            .map(|(a, b)| a.total_cmp(b))
                            .find(|o| o.is_ne())
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
                });
                return out;
            }
            idx[a] += 1;
            if idx[a] <= ranges[a].1 {
                break;
            }
            idx[a] = ranges[a].0;
            a += 1;
        }
    }
}

fn check_region(cone: &Cone, region: &Region) -> Result<()> {
    region.validate()?;
    if cone.kind == ConeKind::Product && cone.rank == 1 {
        return Ok(());
    }
    let (lo, hi) = region.lambda_box(cone);
    if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
        return Err(Error::domain("region is not bounded away from the cone boundary"));
    }
    Ok(())
}

/// Greedy maximal `2δ`-separated family; `R = 2` unless the measured
/// coverage of the candidate mesh needs more.
pub fn build_lattice(cone: &Cone, delta: f64, region: &Region) -> Result<LatticeSpec> {
    build_lattice_with(cone, delta, region, &LatticeOptions::default())
}

pub fn build_lattice_with(cone: &Cone, delta: f64, region: &Region, opts: &LatticeOptions) -> Result<LatticeSpec> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::domain(format!("δ must be positive, got {delta}")));
    }
    check_region(cone, region)?;
    let cands = candidates(cone, delta, region);
    if cands.is_empty() {
        return Err(Error::domain("region contains no candidate points"));
    }
    let mut chosen_logs: Vec<Vec<f64>> = Vec::new();
    let mut chosen: Vec<Vec<f64>> = Vec::new();
    let mut kernel_inv: Vec<DMatrix<f64>> = Vec::new();
    let threshold = 2.0 * delta - 1e-12;
    for (_, lam) in &cands {
        let ok = match cone.kind {
            ConeKind::Product => {
                let l: Vec<f64> = lam.iter().map(|v| v.ln()).collect();
                chosen_logs
                    .iter()
                    .all(|c| c.iter().zip(&l).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() >= threshold)
            }
            ConeKind::Lorentz => {
                let v = DVector::from_column_slice(lam);
                kernel_inv.iter().all(|inv| {
                    let rel = inv * &v;
                    let nt = rel.iter().skip(1).map(|x| x * x).sum::<f64>().sqrt();
                    ((rel[0] + nt).ln().powi(2) + (rel[0] - nt).ln().powi(2)).sqrt() >= threshold
                })
            }
        };
        if ok {
            match cone.kind {
                ConeKind::Product => chosen_logs.push(lam.iter().map(|v| v.ln()).collect()),
                ConeKind::Lorentz => kernel_inv.push(cone.transport_solve(lam)?.inverse().matrix.transpose()),
            }
            chosen.push(lam.clone());
        }
    }
    let mut spec = LatticeSpec::from_points(cone, delta, 2.0, region.clone(), chosen, opts.transport)?;
    spec.r = match opts.r {
        Some(r) => r,
        None => {
            let samples = region_samples(cone, region, opts.cover_samples, opts.seed);
            let kernel = DistanceKernel::new(cone, &spec.transports, &spec.points);
            let cover = covering_distances(&kernel, spec.len(), &samples)
                .into_iter()
                .chain(cands.iter().map(|(_, l)| nearest(&kernel, spec.len(), l)))
                .fold(0.0, f64::max);
            (1.05 * cover / delta).max(2.0)
        }
    };
    Ok(spec)
}

fn nearest(kernel: &DistanceKernel, count: usize, lambda: &[f64]) -> f64 {
    let p = kernel.prepare(lambda);
    (0..count).map(|k| kernel.distance(k, &p)).fold(f64::INFINITY, f64::min)
}

fn covering_distances(kernel: &DistanceKernel, count: usize, samples: &[Vec<f64>]) -> Vec<f64> {
    samples.par_iter().map(|s| nearest(kernel, count, s)).collect()
}

/// Seeded uniform-in-chart samples of a region.
pub fn region_samples(cone: &Cone, region: &Region, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| region.sample(cone, &mut rng)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeReport {
    pub points: usize,
    pub delta: f64,
    pub r: f64,
    pub min_separation: f64,
    pub separation_violations: Vec<(usize, usize)>,
    pub max_cover_distance: f64,
    pub covering_violations: usize,
    pub samples: usize,
    pub max_overlap: usize,
    pub passed: bool,
}

/// Check separation, coverage of a dense region sample, and overlap.
pub fn verify_lattice(cone: &Cone, spec: &LatticeSpec) -> Result<LatticeReport> {
    let samples = region_samples(cone, &spec.region, 4000, 0x7e51);
    verify_lattice_with_samples(cone, spec, &samples)
}

pub fn verify_lattice_with_samples(cone: &Cone, spec: &LatticeSpec, samples: &[Vec<f64>]) -> Result<LatticeReport> {
    if spec.transports.len() != spec.points.len() {
        return Err(Error::precondition("lattice transports missing; call restore"));
    }
    let kernel = DistanceKernel::new(cone, &spec.transports, &spec.points);
    let k = spec.len();
    let pair: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|i| {
            let p = kernel.prepare(&spec.points[i]);
            (0..k).map(|j| kernel.distance(j, &p)).collect()
        })
        .collect();
    let mut min_sep = f64::INFINITY;
    let mut violations = Vec::new();
    let mut max_overlap = 0;
    for i in 0..k {
        let mut overlap = 0;
        for j in 0..k {
            if i == j {
                continue;
            }
            let d = pair[i][j];
            if j > i {
                min_sep = min_sep.min(d);
                if d < 2.0 * spec.delta - 1e-9 {
                    violations.push((i, j));
                }
            }
            if d < 2.0 * spec.r * spec.delta {
                overlap += 1;
            }
        }
        max_overlap = max_overlap.max(overlap);
    }
    let cover = covering_distances(&kernel, k, samples);
    let radius = spec.r * spec.delta;
    let covering_violations = cover.iter().filter(|&&d| d > radius).count();
    let max_cover_distance = cover.iter().copied().fold(0.0, f64::max);
    Ok(LatticeReport {
        points: k,
        delta: spec.delta,
        r: spec.r,
        min_separation: min_sep,
        passed: violations.is_empty() && covering_violations == 0,
        separation_violations: violations,
        max_cover_distance,
        covering_violations,
        samples: samples.len(),
        max_overlap,
    })
}

/// Radial profile `h(ρ)`, `ρ = d/δ`: 1 for `ρ ≤ 1`, 0 for `ρ ≥ R`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `f(R−ρ)/(f(R−ρ)+f(ρ−1))` with `f(x) = e^{−1/x}`; C^∞.
    #[default]
    Smooth,
    /// Quintic smoothstep; C².
    C2,
}

impl ProfileKind {
    pub fn smoothness(&self) -> &'static str {
        match self {
            ProfileKind::Smooth => "C-infinity",
            ProfileKind::C2 => "C2",
        }
    }

    pub fn eval(&self, rho: f64, r: f64) -> f64 {
        if rho <= 1.0 {
            return 1.0;
        }
        if rho >= r {
            return 0.0;
        }
        match self {
            ProfileKind::Smooth => {
                let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
                let (a, b) = (f((r - rho) / (r - 1.0)), f((rho - 1.0) / (r - 1.0)));
                a / (a + b)
            }
            ProfileKind::C2 => {
                let t = (r - rho) / (r - 1.0);
                t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpMode {
    /// `Σ φ_k ≥ 1` on the region.
    Cover,
    /// `Σ φ_k = 1`.
    #[default]
    Partition,
    /// `Σ φ_k² = 1`.
    PartitionSq,
}

/// Bumps `φ_k(·t_k⁻¹)` built from one radial profile.
#[derive(Clone, Debug)]
pub struct BumpFamily {
    pub mode: BumpMode,
    pub profile: ProfileKind,
    pub delta: f64,
    pub r: f64,
    pub points: Vec<Vec<f64>>,
    pub transports: Vec<Triangular>,
    kernel: DistanceKernel,
    /// Indices whose supports can meet that of `k` (including `k`).
    neighbors: Vec<Vec<usize>>,
    /// Cover mode: `1 / min Σ raw` over the region sample (at least 1).
    pub cover_scale: f64,
}

pub fn build_bumps(cone: &Cone, spec: &LatticeSpec, mode: BumpMode) -> Result<BumpFamily> {
    build_bumps_with(cone, spec, mode, ProfileKind::Smooth)
}

pub fn build_bumps_with(cone: &Cone, spec: &LatticeSpec, mode: BumpMode, profile: ProfileKind) -> Result<BumpFamily> {
    if spec.is_empty() {
        return Err(Error::precondition("empty lattice"));
    }
    if spec.transports.len() != spec.len() {
        return Err(Error::precondition("lattice transports missing; call restore"));
    }
    let kernel = DistanceKernel::new(cone, &spec.transports, &spec.points);
    let reach = 2.0 * spec.r * spec.delta;
    let neighbors = (0..spec.len())
        .into_par_iter()
        .map(|k| {
            let p = kernel.prepare(&spec.points[k]);
            (0..spec.len()).filter(|&j| kernel.distance(j, &p) < reach).collect()
        })
        .collect();
    let mut fam = BumpFamily {
        mode,
        profile,
        delta: spec.delta,
        r: spec.r,
        points: spec.points.clone(),
        transports: spec.transports.clone(),
        kernel,
        neighbors,
        cover_scale: 1.0,
    };
    let samples = region_samples(cone, &spec.region, 2000, 0xb0b5);
    let min_sum = samples
        .par_iter()
        .map(|s| {
            let p = fam.kernel.prepare(s);
            (0..fam.len()).map(|k| fam.raw_prepared(k, &p)).sum::<f64>()
        })
        .reduce(|| f64::INFINITY, f64::min);
    if min_sum < 1e-12 {
        return Err(Error::precondition(format!(
            "bump sum {min_sum:.3e} vanishes on the region: lattice does not cover it"
        )));
    }
    if mode == BumpMode::Cover && min_sum < 1.0 {
        fam.cover_scale = 1.0 / min_sum;
    }
    Ok(fam)
}

impl BumpFamily {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn neighbors(&self, k: usize) -> &[usize] {
        &self.neighbors[k]
    }

    pub fn prepare(&self, lambda: &[f64]) -> Prepared {
        self.kernel.prepare(lambda)
    }

    fn raw_prepared(&self, k: usize, p: &Prepared) -> f64 {
        self.profile.eval(self.kernel.distance(k, p) / self.delta, self.r)
    }

    /// The un-normalized transported profile `h(d(λ, λ_k)/δ)`.
    pub fn raw(&self, k: usize, lambda: &[f64]) -> f64 {
        self.raw_prepared(k, &self.kernel.prepare(lambda))
    }

    /// `φ_k(λ t_k⁻¹)` after the mode's normalization.
    pub fn value(&self, k: usize, lambda: &[f64]) -> f64 {
        let p = self.kernel.prepare(lambda);
        let own = self.raw_prepared(k, &p);
        if own == 0.0 {
            return 0.0;
        }
        match self.mode {
            BumpMode::Cover => own * self.cover_scale,
            BumpMode::Partition => {
                let total: f64 = self.neighbors[k].iter().map(|&j| self.raw_prepared(j, &p)).sum();
                own / total
            }
            BumpMode::PartitionSq => {
                // scaled by the largest term: tiny edge values would underflow when squared
                let raws: Vec<f64> = self.neighbors[k].iter().map(|&j| self.raw_prepared(j, &p)).collect();
                let top = raws.iter().copied().fold(own, f64::max);
                let total: f64 = raws.iter().map(|v| (v / top).powi(2)).sum();
                (own / top) / total.sqrt()
            }
        }
    }

    /// `(Σ_k φ_k(λ t_k⁻¹), Σ_k φ_k(λ t_k⁻¹)²)`.
    pub fn sums(&self, lambda: &[f64]) -> (f64, f64) {
        (0..self.len())
            .map(|k| self.value(k, lambda))
            .fold((0.0, 0.0), |(a, b), v| (a + v, b + v * v))
    }
}

/// Points of the closed chart ball of radius `radius` at `e′`: the centre,
/// interior shells and the bounding sphere.
pub fn ball_cloud(cone: &Cone, radius: f64) -> Vec<Vec<f64>> {
    let dim = cone.dim;
    let dirs: Vec<Vec<f64>> = match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..48)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / 48.0;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            // quasi-uniform directions from a seeded Gaussian sample
            let mut rng = ChaCha8Rng::seed_from_u64(0xd1 + dim as u64);
            let normal = rand_distr::StandardNormal;
            (0..96 * dim)
                .map(|_| {
                    let v: Vec<f64> = (0..dim).map(|_| rand::Rng::sample(&mut rng, normal)).collect();
                    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.iter().map(|x| x / n).collect()
                })
                .collect()
        }
    };
    let mut out = vec![cone.chart(&vec![0.0; dim])];
    for frac in [0.25, 0.5, 0.75, 1.0] {
        for d in &dirs {
            let y: Vec<f64> = d.iter().map(|v| v * radius * frac).collect();
            out.push(cone.chart(&y));
        }
    }
    out
}

/// Samples of the support `B(λ_k, Rδ)` of bump `k`.
pub fn support_cloud(cone: &Cone, family: &BumpFamily, k: usize) -> Vec<Vec<f64>> {
    ball_cloud(cone, family.r * family.delta)
        .iter()
        .map(|l| family.transports[k].act_dual(l))
        .collect()
}

/// Indices whose bump support meets `N⁻¹([1/c, c])`.
pub fn shell_indices(siegel: &SiegelData, family: &BumpFamily, c: f64) -> Result<Vec<usize>> {
    if !(c > 1.0) {
        return Err(Error::domain(format!("shell parameter c = {c} must exceed 1")));
    }
    let cloud = ball_cloud(&siegel.cone, family.r * family.delta);
    Ok((0..family.len())
        .filter(|&k| {
            let (lo, hi) = cloud
                .iter()
                .map(|l| n_lambda(siegel, &family.transports[k].act_dual(l)))
                .fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
            lo <= c && hi >= 1.0 / c
        })
        .collect())
}
