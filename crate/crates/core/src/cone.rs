//! Homogeneous cone geometry.
//!
//! Two families are implemented: the product cone `(R₊*)^r` and the Lorentz
//! cone `{x₁ > |(x₂,…,x_m)|}`. Both are self-dual once `F′` is identified with
//! `F` through the standard inner product, so primal and dual points share a
//! single representation (`&[f64]` of length `m`).
//!
//! The triangular group `T₊` acts on the left on `Ω` by `x ↦ M x` and on the
//! right on `Ω′` by `λ ↦ Mᵀ λ`. For the Lorentz cone we work in the light-cone
//! coordinates `u = x₁ + x_m`, `v = x₁ − x_m`, `w = (x₂,…,x_{m−1})`, where an
//! element with parameters `(a₁, a₂, z)` acts by
//!
//! ```text
//! u ↦ a₁² u
//! w ↦ a₁ (u z + a₂ w)
//! v ↦ |z|² u + 2 a₂ ⟨z, w⟩ + a₂² v
//! ```
//!
//! and has character vector `(a₁², a₂²)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{ensure_dim, Error, Result};

/// Which of the two cones a point is taken in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Primal,
    Dual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeKind {
    Product,
    Lorentz,
}

/// Real exponent vector `s ∈ R^r` for the generalized power `Δ^s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerExponent(pub Vec<f64>);

impl PowerExponent {
    pub fn zeros(rank: usize) -> Self {
        PowerExponent(vec![0.0; rank])
    }

    pub fn splat(rank: usize, value: f64) -> Self {
        PowerExponent(vec![value; rank])
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn add(&self, other: &PowerExponent) -> PowerExponent {
        PowerExponent(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, factor: f64) -> PowerExponent {
        PowerExponent(self.0.iter().map(|a| a * factor).collect())
    }

    pub fn neg(&self) -> PowerExponent {
        self.scale(-1.0)
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl std::ops::Deref for PowerExponent {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for PowerExponent {
    fn from(v: Vec<f64>) -> Self {
        PowerExponent(v)
    }
}

/// An element of `T₊`, stored as its matrix on `F` together with its
/// character vector `(Δ₁(t),…,Δ_r(t))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Triangular {
    pub matrix: DMatrix<f64>,
    pub delta: Vec<f64>,
}

impl Triangular {
    pub fn identity(dim: usize, rank: usize) -> Self {
        Triangular {
            matrix: DMatrix::identity(dim, dim),
            delta: vec![1.0; rank],
        }
    }

    /// `self · other`: act by `other` first, then by `self`.
    pub fn compose(&self, other: &Triangular) -> Triangular {
        Triangular {
            matrix: &self.matrix * &other.matrix,
            delta: self.delta.iter().zip(&other.delta).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn inverse(&self) -> Triangular {
        let matrix = self
            .matrix
            .clone()
            .try_inverse()
            .expect("elements of T₊ are invertible");
        Triangular {
            matrix,
            delta: self.delta.iter().map(|a| 1.0 / a).collect(),
        }
    }

    /// The character `Δ^s(t) = ∏ Δ_j(t)^{s_j}`.
    pub fn character(&self, s: &[f64]) -> f64 {
        self.delta.iter().zip(s).map(|(d, e)| d.powf(*e)).product()
    }

    /// Left action on `Ω`: `x ↦ t·x`.
    pub fn act(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.matrix * DVector::from_column_slice(x);
        v.iter().copied().collect()
    }

    /// Right action on `Ω′`: `λ ↦ λ·t`.
    pub fn act_dual(&self, lambda: &[f64]) -> Vec<f64> {
        let v = self.matrix.tr_mul(&DVector::from_column_slice(lambda));
        v.iter().copied().collect()
    }

    pub fn det(&self) -> f64 {
        self.matrix.determinant()
    }
}

/// Descriptor of a concrete homogeneous cone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub kind: ConeKind,
    pub rank: usize,
    pub dim: usize,
    pub base: Vec<f64>,
    pub dual_base: Vec<f64>,
    /// Exponent of the invariant measure `ν = Δ^d · Lebesgue`.
    pub d: PowerExponent,
    pub m_vec: Vec<f64>,
    pub m_prime_vec: Vec<f64>,
    /// `Γ_Ω(s) = gamma_const · pairing_scale^{Σ s_j} · ∏ Γ(s_j − m_j/2)`.
    pub gamma_const: f64,
    pub pairing_scale: f64,
}

impl Cone {
    /// `product(r)` is `(R₊*)^r`; `lorentz(m)` is the quadric cone in `R^m`.
    pub fn new(kind: ConeKind, rank_or_dim: usize) -> Result<Cone> {
        let (rank, dim) = match kind {
            ConeKind::Product => {
                if rank_or_dim < 1 {
                    return Err(Error::domain("product cone needs rank >= 1"));
                }
                (rank_or_dim, rank_or_dim)
            }
            ConeKind::Lorentz => {
                if rank_or_dim < 3 {
                    return Err(Error::domain("lorentz cone needs dimension >= 3"));
                }
                (2, rank_or_dim)
            }
        };
        let mut base = vec![0.0; dim];
        match kind {
            ConeKind::Product => base.iter_mut().for_each(|b| *b = 1.0),
            ConeKind::Lorentz => base[0] = 1.0,
        }
        let (m_vec, m_prime_vec, gamma_const, pairing_scale) = match kind {
            ConeKind::Product => (vec![0.0; rank], vec![0.0; rank], 1.0, 1.0),
            ConeKind::Lorentz => {
                let peirce = (dim - 2) as f64;
                let c = (2.0 * std::f64::consts::PI).powf(peirce / 2.0)
                    * 2f64.powf(-(dim as f64) / 2.0);
                (vec![0.0, peirce], vec![peirce, 0.0], c, 2.0)
            }
        };
        let mut cone = Cone {
            kind,
            rank,
            dim,
            dual_base: base.clone(),
            base,
            d: PowerExponent::zeros(rank),
            m_vec,
            m_prime_vec,
            gamma_const,
            pairing_scale,
        };
        cone.d = derive_d_vector(&cone)?;
        Ok(cone)
    }

    pub fn product(rank: usize) -> Result<Cone> {
        Cone::new(ConeKind::Product, rank)
    }

    pub fn lorentz(dim: usize) -> Result<Cone> {
        Cone::new(ConeKind::Lorentz, dim)
    }

    pub fn base_point(&self, side: Side) -> &[f64] {
        match side {
            Side::Primal => &self.base,
            Side::Dual => &self.dual_base,
        }
    }

    /// Strict membership in the open cone; boundary points are rejected.
    pub fn contains(&self, _side: Side, v: &[f64]) -> bool {
        if v.len() != self.dim || v.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match self.kind {
            ConeKind::Product => v.iter().all(|&x| x > 0.0),
            ConeKind::Lorentz => v[0] > 0.0 && v[0] * v[0] - tail_norm_sq(v) > 0.0,
        }
    }

    fn check_member(&self, side: Side, v: &[f64]) -> Result<()> {
        ensure_dim(self.dim, v.len())?;
        if !self.contains(side, v) {
            return Err(Error::domain(format!("{v:?} is not in the open {side:?} cone")));
        }
        Ok(())
    }

    /// Multiplicative coordinates `p` with `Δ^s(v) = ∏ p_j^{s_j}`; they equal
    /// the character vector of the transport of `v`.
    pub fn power_coordinates(&self, side: Side, v: &[f64]) -> Result<Vec<f64>> {
        self.check_member(side, v)?;
        Ok(match self.kind {
            ConeKind::Product => v.to_vec(),
            ConeKind::Lorentz => {
                let q = v[0] * v[0] - tail_norm_sq(v);
                let last = v[self.dim - 1];
                match side {
                    // Δ₁ = x₁ + x_m, Δ₂ = x₁² − |x′|², Δ^s = Δ₁^{s₁−s₂} Δ₂^{s₂}
                    Side::Primal => {
                        let u = v[0] + last;
                        vec![u, q / u]
                    }
                    // Δ′^s = Q^{s₁} V^{s₂−s₁} with V = λ₁ − λ_m
                    Side::Dual => {
                        let vv = v[0] - last;
                        vec![q / vv, vv]
                    }
                }
            }
        })
    }

    /// The generalized power `Δ_Ω^s(v)` or `Δ_{Ω′}^s(v)`.
    pub fn delta_power(&self, side: Side, s: &[f64], v: &[f64]) -> Result<f64> {
        ensure_dim(self.rank, s.len())?;
        let p = self.power_coordinates(side, v)?;
        Ok(p.iter().zip(s).map(|(a, e)| a.powf(*e)).product())
    }

    /// Build the element of `T₊` from its group parameters.
    ///
    /// Product cones take `r` positive scalings; Lorentz cones take
    /// `(a₁, a₂, z₁, …, z_{m−2})` with `a₁, a₂ > 0`.
    pub fn triangular(&self, params: &[f64]) -> Result<Triangular> {
        ensure_dim(self.dim, params.len())?;
        match self.kind {
            ConeKind::Product => {
                if params.iter().any(|&a| a <= 0.0) {
                    return Err(Error::domain("product-cone scalings must be positive"));
                }
                Ok(Triangular {
                    matrix: DMatrix::from_diagonal(&DVector::from_column_slice(params)),
                    delta: params.to_vec(),
                })
            }
            ConeKind::Lorentz => {
                let (a1, a2) = (params[0], params[1]);
                if a1 <= 0.0 || a2 <= 0.0 {
                    return Err(Error::domain("lorentz diagonal parameters must be positive"));
                }
                let z = &params[2..];
                let m = self.dim;
                let mut matrix = DMatrix::zeros(m, m);
                for col in 0..m {
                    let mut e = vec![0.0; m];
                    e[col] = 1.0;
                    let image = lorentz_action(a1, a2, z, &e);
                    for row in 0..m {
                        matrix[(row, col)] = image[row];
                    }
                }
                Ok(Triangular {
                    matrix,
                    delta: vec![a1 * a1, a2 * a2],
                })
            }
        }
    }

    /// Pure homothety `x ↦ ρ x`.
    pub fn dilation(&self, rho: f64) -> Triangular {
        let mut params = vec![0.0; self.dim];
        match self.kind {
            ConeKind::Product => params.iter_mut().for_each(|p| *p = rho),
            ConeKind::Lorentz => {
                params[0] = rho.sqrt();
                params[1] = rho.sqrt();
            }
        }
        self.triangular(&params).expect("positive homothety")
    }

    /// Random element of `T₊` with parameters of moderate size.
    pub fn sample_triangular<R: Rng + ?Sized>(&self, rng: &mut R, spread: f64) -> Triangular {
        let mut params = vec![0.0; self.dim];
        match self.kind {
            ConeKind::Product => {
                for p in params.iter_mut() {
                    *p = rng.gen_range(-spread..spread).exp();
                }
            }
            ConeKind::Lorentz => {
                params[0] = rng.gen_range(-spread..spread).exp();
                params[1] = rng.gen_range(-spread..spread).exp();
                for p in params[2..].iter_mut() {
                    *p = rng.gen_range(-spread..spread);
                }
            }
        }
        self.triangular(&params).expect("sampled parameters are admissible")
    }

    /// Solve `e_{Ω′}·t = λ` for `t ∈ T₊`.
    pub fn transport_solve(&self, lambda: &[f64]) -> Result<Triangular> {
        self.check_member(Side::Dual, lambda)?;
        let t = match self.kind {
            ConeKind::Product => self.triangular(lambda)?,
            ConeKind::Lorentz => {
                let m = self.dim;
                let big_u = lambda[0] + lambda[m - 1];
                let big_v = lambda[0] - lambda[m - 1];
                let w = &lambda[1..m - 1];
                let q = lambda[0] * lambda[0] - tail_norm_sq(lambda);
                if big_v <= 0.0 || q <= 0.0 || big_u <= 0.0 {
                    return Err(Error::Convergence(format!(
                        "degenerate transport for {lambda:?} (near the boundary)"
                    )));
                }
                let a2 = big_v.sqrt();
                let a1 = (q / big_v).sqrt();
                let mut params = vec![a1, a2];
                params.extend(w.iter().map(|wi| wi / a2));
                self.triangular(&params)?
            }
        };
        let image = t.act_dual(&self.dual_base);
        let scale = lambda.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
        let err = image
            .iter()
            .zip(lambda)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if err > 1e-10 * scale {
            return Err(Error::Convergence(format!(
                "transport residual {err:.3e} for {lambda:?}"
            )));
        }
        Ok(t)
    }

    /// Solve `t·e_Ω = x` for `t ∈ T₊`.
    pub fn transport_solve_primal(&self, x: &[f64]) -> Result<Triangular> {
        self.check_member(Side::Primal, x)?;
        match self.kind {
            ConeKind::Product => self.triangular(x),
            ConeKind::Lorentz => {
                let m = self.dim;
                let u = x[0] + x[m - 1];
                let v = x[0] - x[m - 1];
                let w = &x[1..m - 1];
                let a1 = u.sqrt();
                let z: Vec<f64> = w.iter().map(|wi| wi / a1).collect();
                let a2 = (v - z.iter().map(|zi| zi * zi).sum::<f64>()).sqrt();
                let mut params = vec![a1, a2];
                params.extend(z);
                self.triangular(&params)
            }
        }
    }

    /// Jordan spectrum of a point (relative to the base point).
    pub fn spectrum(&self, v: &[f64]) -> Vec<f64> {
        match self.kind {
            ConeKind::Product => v.to_vec(),
            ConeKind::Lorentz => {
                let r = tail_norm_sq(v).sqrt();
                vec![v[0] + r, v[0] - r]
            }
        }
    }

    /// `T₊`-invariant distance: the norm of the log-spectrum of `y` moved by
    /// the transport that sends `x` to the base point.
    pub fn invariant_distance(&self, side: Side, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_member(side, y)?;
        let relative = match side {
            Side::Dual => self.transport_solve(x)?.inverse().act_dual(y),
            Side::Primal => self.transport_solve_primal(x)?.inverse().act(y),
        };
        let spec = self.spectrum(&relative);
        if spec.iter().any(|&e| e <= 0.0) {
            return Err(Error::domain("relative element left the cone"));
        }
        Ok(spec.iter().map(|e| e.ln().powi(2)).sum::<f64>().sqrt())
    }

    /// Tangent chart at the dual base point with `d(e_{Ω′}, chart(y)) = |y|`.
    ///
    /// Product cones use componentwise logarithms; Lorentz cones use
    /// `(√2 ln ρ, √2 b)` for `λ = ρ (cosh|b|, sinh|b| b/|b|)`.
    pub fn chart(&self, y: &[f64]) -> Vec<f64> {
        match self.kind {
            ConeKind::Product => y.iter().map(|v| v.exp()).collect(),
            ConeKind::Lorentz => {
                let s2 = std::f64::consts::SQRT_2;
                let rho = (y[0] / s2).exp();
                let b: Vec<f64> = y[1..].iter().map(|v| v / s2).collect();
                let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                let mut out = Vec::with_capacity(self.dim);
                out.push(rho * nb.cosh());
                let factor = if nb > 0.0 { rho * nb.sinh() / nb } else { rho };
                // with |b| = 0 the tail vanishes regardless of the factor
                out.extend(b.iter().map(|v| factor * v));
                out
            }
        }
    }

    /// Inverse of [`Cone::chart`].
    pub fn chart_inverse(&self, lambda: &[f64]) -> Vec<f64> {
        match self.kind {
            ConeKind::Product => lambda.iter().map(|v| v.ln()).collect(),
            ConeKind::Lorentz => {
                let s2 = std::f64::consts::SQRT_2;
                let spec = self.spectrum(lambda);
                let rho = (spec[0] * spec[1]).sqrt();
                let nb = 0.5 * (spec[0] / spec[1]).ln();
                let tail = &lambda[1..];
                let nt = tail.iter().map(|v| v * v).sum::<f64>().sqrt();
                let mut out = vec![s2 * rho.ln()];
                if nt > 0.0 {
                    out.extend(tail.iter().map(|v| s2 * nb * v / nt));
                } else {
                    out.extend(tail.iter().map(|_| 0.0));
                }
                out
            }
        }
    }

    /// `(log of the geometric mean of the spectrum, distance to the ray R₊ e)`.
    pub fn scale_and_spread(&self, lambda: &[f64]) -> (f64, f64) {
        let logs: Vec<f64> = self.spectrum(lambda).iter().map(|e| e.ln()).collect();
        let mean = logs.iter().sum::<f64>() / logs.len() as f64;
        let spread = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>().sqrt();
        (mean, spread)
    }

    /// `Γ_Ω(s)`, normalized so that `∫ e^{−⟨λ,x⟩} Δ^s(x) dν(x) = Γ_Ω(s) Δ_{Ω′}^{−s}(λ)`.
    pub fn gamma_cone(&self, s: &[f64]) -> Result<f64> {
        ensure_dim(self.rank, s.len())?;
        let mut value = self.gamma_const * self.pairing_scale.powf(s.iter().sum());
        for (sj, mj) in s.iter().zip(&self.m_vec) {
            let arg = sj - mj / 2.0;
            if arg <= 0.0 {
                return Err(Error::domain(format!(
                    "Γ_Ω diverges: s_j = {sj} must exceed m_j/2 = {}",
                    mj / 2.0
                )));
            }
            value *= gamma(arg);
        }
        Ok(value)
    }
}

/// Bounded sub-region of `Ω′` described by the geometric mean of the
/// spectrum (`scale`) and the distance of the log-spectrum from the ray
/// through the base point (`spread`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub scale: (f64, f64),
    pub spread: f64,
}

impl Region {
    pub fn new(lo: f64, hi: f64, spread: f64) -> Result<Region> {
        let r = Region {
            scale: (lo, hi),
            spread,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.scale;
        if !(lo > 0.0 && hi >= lo && hi.is_finite() && self.spread >= 0.0 && self.spread.is_finite()) {
            return Err(Error::domain(format!(
                "region {self:?} must satisfy 0 < lo <= hi < ∞ and 0 <= spread < ∞ (compact in Ω′)"
            )));
        }
        Ok(())
    }

    pub fn contains(&self, cone: &Cone, lambda: &[f64]) -> bool {
        if !cone.contains(Side::Dual, lambda) {
            return false;
        }
        let (mean, spread) = cone.scale_and_spread(lambda);
        let tol = 1e-12;
        mean >= self.scale.0.ln() - tol && mean <= self.scale.1.ln() + tol && spread <= self.spread + tol
    }

    /// Chart coordinates from a log-scale and a perpendicular offset.
    fn compose(cone: &Cone, log_scale: f64, perp: &[f64]) -> Vec<f64> {
        match cone.kind {
            ConeKind::Product => perp.iter().map(|p| p + log_scale).collect(),
            ConeKind::Lorentz => {
                let mut y = vec![std::f64::consts::SQRT_2 * log_scale];
                y.extend_from_slice(perp);
                y
            }
        }
    }

    /// Axis-aligned box in chart coordinates containing the region.
    pub fn chart_box(&self, cone: &Cone) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = (self.scale.0.ln(), self.scale.1.ln());
        match cone.kind {
            ConeKind::Product => {
                let spread = if cone.rank == 1 { 0.0 } else { self.spread };
                (vec![a - spread; cone.dim], vec![b + spread; cone.dim])
            }
            ConeKind::Lorentz => {
                let s2 = std::f64::consts::SQRT_2;
                let mut lo = vec![-self.spread; cone.dim];
                let mut hi = vec![self.spread; cone.dim];
                lo[0] = s2 * a;
                hi[0] = s2 * b;
                (lo, hi)
            }
        }
    }

    /// Uniform-in-chart random point of the region.
    pub fn sample<R: Rng + ?Sized>(&self, cone: &Cone, rng: &mut R) -> Vec<f64> {
        let (a, b) = (self.scale.0.ln(), self.scale.1.ln());
        let log_scale = if b > a { rng.gen_range(a..=b) } else { a };
        let perp_dim = match cone.kind {
            ConeKind::Product => cone.dim,
            ConeKind::Lorentz => cone.dim - 1,
        };
        let mut perp = vec![0.0; perp_dim];
        if self.spread > 0.0 && !(cone.kind == ConeKind::Product && cone.rank == 1) {
            loop {
                for p in perp.iter_mut() {
                    *p = rng.gen_range(-self.spread..=self.spread);
                }
                if cone.kind == ConeKind::Product {
                    let mean = perp.iter().sum::<f64>() / perp_dim as f64;
                    perp.iter_mut().for_each(|p| *p -= mean);
                }
                if perp.iter().map(|p| p * p).sum::<f64>().sqrt() <= self.spread {
                    break;
                }
            }
        } else if cone.kind == ConeKind::Product {
            perp.iter_mut().for_each(|p| *p = 0.0);
        }
        cone.chart(&Region::compose(cone, log_scale, &perp))
    }

    /// Axis-aligned box in `F′` coordinates containing the region.
    pub fn lambda_box(&self, cone: &Cone) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.scale;
        match cone.kind {
            ConeKind::Product => {
                let spread = if cone.rank == 1 { 0.0 } else { self.spread };
                (vec![lo * (-spread).exp(); cone.dim], vec![hi * spread.exp(); cone.dim])
            }
            ConeKind::Lorentz => {
                let b = self.spread / std::f64::consts::SQRT_2;
                let mut l = vec![-hi * b.sinh(); cone.dim];
                let mut h = vec![hi * b.sinh(); cone.dim];
                l[0] = lo;
                h[0] = hi * b.cosh();
                (l, h)
            }
        }
    }

    /// Largest region contained in both, if any.
    pub fn intersection(&self, other: &Region) -> Option<Region> {
        let lo = self.scale.0.max(other.scale.0);
        let hi = self.scale.1.min(other.scale.1);
        (lo <= hi).then(|| Region {
            scale: (lo, hi),
            spread: self.spread.min(other.spread),
        })
    }

    /// Smallest region containing both.
    pub fn hull(&self, other: &Region) -> Region {
        Region {
            scale: (self.scale.0.min(other.scale.0), self.scale.1.max(other.scale.1)),
            spread: self.spread.max(other.spread),
        }
    }

    /// Smallest region containing every point of `cloud`, widened by
    /// `margin` (log-scale and spread).
    pub fn enclosing(cone: &Cone, cloud: &[Vec<f64>], margin: f64) -> Result<Region> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut spread: f64 = 0.0;
        for p in cloud {
            if !cone.contains(Side::Dual, p) {
                return Err(Error::domain(format!("point {p:?} lies outside Ω′")));
            }
            let (mean, sp) = cone.scale_and_spread(p);
            lo = lo.min(mean);
            hi = hi.max(mean);
            spread = spread.max(sp);
        }
        if cloud.is_empty() {
            return Err(Error::domain("cannot enclose an empty cloud"));
        }
        let spread = if cone.kind == ConeKind::Product && cone.rank == 1 {
            0.0
        } else {
            spread + margin
        };
        Region::new((lo - margin).exp(), (hi + margin).exp(), spread)
    }

    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.scale.0 >= other.scale.0 * (1.0 - 1e-12)
            && self.scale.1 <= other.scale.1 * (1.0 + 1e-12)
            && self.spread <= other.spread + 1e-12
    }
}

fn tail_norm_sq(v: &[f64]) -> f64 {
    v[1..].iter().map(|x| x * x).sum()
}

fn lorentz_action(a1: f64, a2: f64, z: &[f64], x: &[f64]) -> Vec<f64> {
    let m = x.len();
    let u = x[0] + x[m - 1];
    let v = x[0] - x[m - 1];
    let w = &x[1..m - 1];
    let zz: f64 = z.iter().map(|zi| zi * zi).sum();
    let zw: f64 = z.iter().zip(w).map(|(a, b)| a * b).sum();
    let u2 = a1 * a1 * u;
    let v2 = zz * u + 2.0 * a2 * zw + a2 * a2 * v;
    let mut out = vec![0.0; m];
    out[0] = 0.5 * (u2 + v2);
    out[m - 1] = 0.5 * (u2 - v2);
    for (i, (zi, wi)) in z.iter().zip(w).enumerate() {
        out[i + 1] = a1 * (u * zi + a2 * wi);
    }
    out
}

/// Fit the invariant-measure exponent from the Jacobian of the action.
///
/// Pushing `Δ^d · Lebesgue` forward by `t` multiplies it by
/// `Δ^{−d}(t) / |det t|`, so invariance is the linear system
/// `Σ_j d_j log Δ_j(t) = −log |det t|` over sampled `t`.
pub fn derive_d_vector(cone: &Cone) -> Result<PowerExponent> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_d0);
    let samples = 4 * cone.rank + 4;
    let mut a = DMatrix::zeros(samples, cone.rank);
    let mut rhs = DVector::zeros(samples);
    for row in 0..samples {
        let t = cone.sample_triangular(&mut rng, 1.0);
        for (j, dj) in t.delta.iter().enumerate() {
            a[(row, j)] = dj.ln();
        }
        rhs[row] = -t.det().abs().ln();
    }
    let svd = a.clone().svd(true, true);
    let d = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Convergence(format!("d-vector fit: {e}")))?;
    let residual = (&a * &d - &rhs).amax();
    if residual > 1e-6 {
        return Err(Error::Tolerance {
            what: "invariant measure fit".into(),
            residual,
            tolerance: 1e-6,
        });
    }
    Ok(PowerExponent(d.iter().map(|&x| rationalize(x, 1e-6)).collect()))
}

/// Snap to a rational with denominator at most 12 when within `tol`.
pub(crate) fn rationalize(x: f64, tol: f64) -> f64 {
    for q in 1..=12 {
        let qf = q as f64;
        let p = (x * qf).round();
        if (x - p / qf).abs() < tol {
            return p / qf;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn rng() -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn constructors_validate() {
        assert!(Cone::product(0).is_err());
        assert!(Cone::lorentz(2).is_err());
        let c = Cone::product(2).unwrap();
        assert_eq!(c.d.0, vec![-1.0, -1.0]);
        let l = Cone::lorentz(3).unwrap();
        assert_eq!(l.rank, 2);
        assert_eq!(l.d.0, vec![-1.5, -1.5]);
    }

    #[test]
    fn d_matches_gamma_shifts() {
        for cone in [Cone::product(3).unwrap(), Cone::lorentz(3).unwrap(), Cone::lorentz(5).unwrap()] {
            for j in 0..cone.rank {
                let expected = -(1.0 + cone.m_vec[j] / 2.0 + cone.m_prime_vec[j] / 2.0);
                assert_relative_eq!(cone.d[j], expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn membership_examples() {
        let l = Cone::lorentz(3).unwrap();
        assert!(l.contains(Side::Primal, &[2.0, 1.0, 0.0]));
        assert!(!l.contains(Side::Primal, &[1.0, 1.0, 0.0]));
        let p = Cone::product(2).unwrap();
        assert!(!p.contains(Side::Dual, &[1.0, -1.0]));
    }

    #[test]
    fn delta_power_examples() {
        let p = Cone::product(2).unwrap();
        assert_relative_eq!(p.delta_power(Side::Primal, &[1.0, 1.0], &[2.0, 3.0]).unwrap(), 6.0);
        let p1 = Cone::product(1).unwrap();
        assert_relative_eq!(p1.delta_power(Side::Primal, &[0.7], &[3.0]).unwrap(), 3f64.powf(0.7));
        let l = Cone::lorentz(3).unwrap();
        assert_relative_eq!(l.delta_power(Side::Primal, &[1.0, 1.0], &[2.0, 0.0, 0.0]).unwrap(), 4.0);
        assert_relative_eq!(l.delta_power(Side::Primal, &[0.0, 1.0], &[2.0, 0.0, 0.0]).unwrap(), 2.0);
        // Δ₂ is the Lorentz quadratic form
        let x = [3.0, 1.0, 0.5];
        assert_relative_eq!(
            l.delta_power(Side::Primal, &[1.0, 1.0], &x).unwrap(),
            9.0 - 1.0 - 0.25,
            epsilon = 1e-12
        );
        for cone in [p, l] {
            for side in [Side::Primal, Side::Dual] {
                let e = cone.base_point(side).to_vec();
                assert_relative_eq!(cone.delta_power(side, &[0.3, -1.2], &e).unwrap(), 1.0);
            }
        }
        assert!(p1.delta_power(Side::Primal, &[1.0], &[-1.0]).is_err());
    }

    #[test]
    fn transport_examples() {
        let p = Cone::product(2).unwrap();
        let t = p.transport_solve(&[2.0, 5.0]).unwrap();
        assert_eq!(t.delta, vec![2.0, 5.0]);
        assert_relative_eq!(t.matrix[(0, 0)], 2.0);
        assert_relative_eq!(t.matrix[(1, 0)], 0.0);
        let l = Cone::lorentz(3).unwrap();
        let id = l.transport_solve(&[1.0, 0.0, 0.0]).unwrap();
        assert!((id.matrix.clone() - DMatrix::identity(3, 3)).amax() < 1e-14);
        let t2 = l.transport_solve(&[2.0, 0.0, 0.0]).unwrap();
        assert!((t2.matrix.clone() - DMatrix::identity(3, 3) * 2.0).amax() < 1e-12);
        for s in [[1.0, 0.0], [0.0, 1.0], [0.4, -2.0]] {
            assert_relative_eq!(
                t2.character(&s),
                l.delta_power(Side::Dual, &s, &[2.0, 0.0, 0.0]).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn distance_examples() {
        let p = Cone::product(2).unwrap();
        let e = std::f64::consts::E;
        assert_relative_eq!(
            p.invariant_distance(Side::Dual, &[1.0, 1.0], &[e, e * e]).unwrap(),
            5f64.sqrt(),
            epsilon = 1e-12
        );
        let l = Cone::lorentz(3).unwrap();
        let a = l.invariant_distance(Side::Dual, &[1.0, 0.0, 0.0], &[4.0, 0.0, 0.0]).unwrap();
        let b = l.invariant_distance(Side::Dual, &[2.0, 0.0, 0.0], &[8.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-12);
        let x = [1.3, 0.2, -0.4];
        assert!(l.invariant_distance(Side::Dual, &x, &x).unwrap() < 1e-12);
    }

    #[test]
    fn chart_is_isometric_from_base() {
        let mut r = rng();
        for cone in [Cone::product(2).unwrap(), Cone::lorentz(3).unwrap(), Cone::lorentz(4).unwrap()] {
            for _ in 0..20 {
                let y: Vec<f64> = (0..cone.dim).map(|_| r.gen_range(-1.5..1.5)).collect();
                let lam = cone.chart(&y);
                let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                let d = cone.invariant_distance(Side::Dual, &cone.dual_base, &lam).unwrap();
                assert_relative_eq!(d, norm, epsilon = 1e-10);
                let back = cone.chart_inverse(&lam);
                for (a, b) in back.iter().zip(&y) {
                    assert_relative_eq!(a, b, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn gamma_examples() {
        let p = Cone::product(2).unwrap();
        assert_relative_eq!(p.gamma_cone(&[2.0, 3.0]).unwrap(), 2.0, epsilon = 1e-12);
        let p1 = Cone::product(1).unwrap();
        assert_relative_eq!(p1.gamma_cone(&[1.0]).unwrap(), 1.0, epsilon = 1e-12);
        let l = Cone::lorentz(3).unwrap();
        assert!(l.gamma_cone(&[1.0, 0.5]).is_err());
    }

    #[test]
    fn region_sampling_stays_inside() {
        let mut r = rng();
        for cone in [Cone::product(1).unwrap(), Cone::product(3).unwrap(), Cone::lorentz(4).unwrap()] {
            let region = Region::new(0.5, 3.0, 0.8).unwrap();
            let (lo, hi) = region.chart_box(&cone);
            for _ in 0..200 {
                let lam = region.sample(&cone, &mut r);
                assert!(region.contains(&cone, &lam), "{lam:?}");
                let y = cone.chart_inverse(&lam);
                for i in 0..cone.dim {
                    assert!(y[i] >= lo[i] - 1e-9 && y[i] <= hi[i] + 1e-9);
                }
            }
        }
        assert!(Region::new(0.0, 1.0, 0.1).is_err());
        assert!(Region::new(1.0, 2.0, f64::INFINITY).is_err());
    }

    #[test]
    fn rationalize_snaps_small_denominators() {
        assert_eq!(rationalize(-1.4999999999, 1e-6), -1.5);
        assert_eq!(rationalize(0.3333333334, 1e-6), 1.0 / 3.0);
        assert_eq!(rationalize(0.123456789, 1e-6), 0.123456789);
    }
}
