//! The 2-step nilpotent group `𝒩 = E × F` attached to a Siegel domain.
//!
//! Points are `(ζ, x)` with `ζ ∈ Cⁿ`, `x ∈ R^m`, multiplied by
//! `(ζ,x)(ζ′,x′) = (ζ+ζ′, x+x′+2 Im Φ(ζ,ζ′))` and dilated by
//! `ρ·(ζ,x) = (ρ^{1/2}ζ, ρx)`.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{DMatrix, DVector, Dyn, Owned};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::cone::{rationalize, Cone, ConeKind, PowerExponent, Side, Triangular};
use crate::error::{ensure_dim, Error, Result};

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Hermitian data `Φ: E × E → F_C` together with its cone and `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiegelData {
    pub n: usize,
    pub m: usize,
    /// `phi[a][b]` is the vector `Φ_{ab} ∈ C^m`.
    pub phi: Vec<Vec<Vec<Complex64>>>,
    pub cone: Cone,
    pub b: PowerExponent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    pub zeta: Vec<Complex64>,
    pub x: Vec<f64>,
}

impl GroupPoint {
    pub fn identity(n: usize, m: usize) -> Self {
        GroupPoint {
            zeta: vec![C0; n],
            x: vec![0.0; m],
        }
    }

    pub fn inverse(&self) -> GroupPoint {
        GroupPoint {
            zeta: self.zeta.iter().map(|z| -z).collect(),
            x: self.x.iter().map(|v| -v).collect(),
        }
    }
}

impl SiegelData {
    /// Validate `Φ` and derive `b`.
    pub fn new(cone: Cone, phi: Vec<Vec<Vec<Complex64>>>) -> Result<SiegelData> {
        let n = phi.len();
        let m = cone.dim;
        for row in &phi {
            ensure_dim(n, row.len())?;
            for entry in row {
                ensure_dim(m, entry.len())?;
            }
        }
        let mut data = SiegelData {
            n,
            m,
            phi,
            cone,
            b: PowerExponent::zeros(0),
        };
        data.b = PowerExponent::zeros(data.cone.rank);
        data.validate()?;
        data.b = derive_b(&data)?;
        Ok(data)
    }

    /// `E = 0`: the abelian group `F`.
    pub fn abelian(cone: Cone) -> SiegelData {
        let rank = cone.rank;
        SiegelData {
            n: 0,
            m: cone.dim,
            phi: Vec::new(),
            cone,
            b: PowerExponent::zeros(rank),
        }
    }

    /// The Heisenberg group `H^n` with `Φ(ζ,ζ′) = Σ ζ_a ζ̄′_a` over `R₊*`.
    pub fn heisenberg(n: usize) -> Result<SiegelData> {
        let one = Complex64::new(1.0, 0.0);
        let phi = (0..n)
            .map(|a| (0..n).map(|b| vec![if a == b { one } else { C0 }]).collect())
            .collect();
        SiegelData::new(Cone::product(1)?, phi)
    }

    /// `Φ(ζ,ζ′)_j = ζ_j ζ̄′_j` over the product cone of rank `n`.
    pub fn product_heisenberg(n: usize) -> Result<SiegelData> {
        let phi = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        let mut v = vec![C0; n];
                        if a == b {
                            v[a] = Complex64::new(1.0, 0.0);
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        SiegelData::new(Cone::product(n)?, phi)
    }

    pub fn is_abelian(&self) -> bool {
        self.n == 0
    }

    /// Homogeneous dimension `Q = n + m`.
    pub fn homogeneous_dim(&self) -> f64 {
        (self.n + self.m) as f64
    }

    pub fn phi_pair(&self, zeta: &[Complex64], zeta2: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![C0; self.m];
        for a in 0..self.n {
            for b in 0..self.n {
                let coeff = zeta[a] * zeta2[b].conj();
                if coeff == C0 {
                    continue;
                }
                for (o, p) in out.iter_mut().zip(&self.phi[a][b]) {
                    *o += coeff * p;
                }
            }
        }
        out
    }

    /// `Φ(ζ) = Φ(ζ,ζ) ∈ F`.
    pub fn phi_quad(&self, zeta: &[Complex64]) -> Vec<f64> {
        self.phi_pair(zeta, zeta).iter().map(|c| c.re).collect()
    }

    /// `2 Im Φ(ζ,ζ′)`.
    pub fn twisted_shift(&self, zeta: &[Complex64], zeta2: &[Complex64]) -> Vec<f64> {
        self.phi_pair(zeta, zeta2).iter().map(|c| 2.0 * c.im).collect()
    }

    /// Hermitian matrix `H_λ` with `⟨λ,Φ(ζ,ζ′)⟩ = Σ ζ_a ζ̄′_b (H_λ)_{ab}`.
    pub fn form_at(&self, lambda: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n, self.n, |a, b| {
            self.phi[a][b]
                .iter()
                .zip(lambda)
                .map(|(p, l)| p * *l)
                .sum::<Complex64>()
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_abelian() {
            return Ok(());
        }
        let scale = self
            .phi
            .iter()
            .flatten()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        for a in 0..self.n {
            for b in 0..self.n {
                for k in 0..self.m {
                    if (self.phi[a][b][k] - self.phi[b][a][k].conj()).norm() > 1e-12 * scale.max(1.0) {
                        return Err(Error::domain("Φ is not hermitian"));
                    }
                }
            }
        }
        // ζ′ ↦ Φ(·,ζ′) must be injective
        let stacked = DMatrix::from_fn(self.n * self.m, self.n, |row, b| {
            self.phi[row / self.m][b][row % self.m]
        });
        let rank = stacked.svd(false, false).rank(1e-10 * scale.max(1.0));
        if rank < self.n {
            return Err(Error::domain("Φ is degenerate"));
        }
        let worst = self.worst_positivity(64);
        if worst < -1e-12 * scale.max(1.0) {
            return Err(Error::domain(format!(
                "Φ is not Ω̄-positive (eigenvalue {worst:.3e}); check the cone orientation"
            )));
        }
        Ok(())
    }

    /// Smallest eigenvalue of `H_λ` over sampled unit-scale `λ ∈ Ω′`.
    pub fn worst_positivity(&self, samples: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xc0ffee);
        let mut worst = f64::INFINITY;
        for lambda in sample_dual_points(&self.cone, &mut rng, samples) {
            let h = self.form_at(&lambda);
            let eig = h.symmetric_eigenvalues();
            worst = worst.min(eig.iter().copied().fold(f64::INFINITY, f64::min));
        }
        worst
    }

    pub fn multiply(&self, g: &GroupPoint, h: &GroupPoint) -> Result<GroupPoint> {
        self.check_point(g)?;
        self.check_point(h)?;
        let shift = self.twisted_shift(&g.zeta, &h.zeta);
        Ok(GroupPoint {
            zeta: g.zeta.iter().zip(&h.zeta).map(|(a, b)| a + b).collect(),
            x: g
                .x
                .iter()
                .zip(&h.x)
                .zip(&shift)
                .map(|((a, b), s)| a + b + s)
                .collect(),
        })
    }

    fn check_point(&self, g: &GroupPoint) -> Result<()> {
        ensure_dim(self.n, g.zeta.len())?;
        ensure_dim(self.m, g.x.len())
    }

    /// Homogeneous norm `(|ζ|⁴ + |x|²)^{1/2}`, of degree 1 under dilations.
    pub fn homogeneous_norm(&self, g: &GroupPoint) -> f64 {
        let z2: f64 = g.zeta.iter().map(|z| z.norm_sqr()).sum();
        let x2: f64 = g.x.iter().map(|v| v * v).sum();
        (z2 * z2 + x2).sqrt()
    }

    /// `‖g⁻¹h‖^{1/2}`: left-invariant, symmetric, homogeneous of degree 1/2.
    pub fn quasi_distance(&self, g: &GroupPoint, h: &GroupPoint) -> Result<f64> {
        let rel = self.multiply(&g.inverse(), h)?;
        Ok(self.homogeneous_norm(&rel).sqrt())
    }

    /// Lebesgue volume of `{h: quasi_distance(0,h) < r}`, which is `r^{2Q}` times the unit ball.
    pub fn ball_volume(&self, r: f64) -> f64 {
        unit_ball_volume(self.n, self.m) * r.powf(2.0 * self.homogeneous_dim())
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> GroupPoint {
        GroupPoint {
            zeta: (0..self.n)
                .map(|_| Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)))
                .collect(),
            x: (0..self.m).map(|_| rng.gen_range(-scale..scale)).collect(),
        }
    }

    /// Real `2n×2n` bracket tensor and the complex structure inducing `Φ`.
    pub fn bracket(&self) -> Bracket {
        let dim = 2 * self.n;
        let mut coeffs = vec![vec![vec![0.0; self.m]; dim]; dim];
        let basis = |i: usize| {
            let mut z = vec![C0; self.n];
            z[i / 2] = if i % 2 == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 1.0)
            };
            z
        };
        for i in 0..dim {
            for j in 0..dim {
                // [X,Y] = 4 Im Φ(X,Y)
                let v = self.phi_pair(&basis(i), &basis(j));
                for k in 0..self.m {
                    coeffs[i][j][k] = 4.0 * v[k].im;
                }
            }
        }
        let mut j = DMatrix::zeros(dim, dim);
        for a in 0..self.n {
            j[(2 * a + 1, 2 * a)] = 1.0;
            j[(2 * a, 2 * a + 1)] = -1.0;
        }
        Bracket { coeffs, j }
    }
}

/// `Γ`-function volume of `{|ζ|⁴ + |x|² < 1} ⊂ Cⁿ × R^m`.
pub fn unit_ball_volume(n: usize, m: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let mf = m as f64;
    let omega_m = pi.powf(mf / 2.0) / gamma(mf / 2.0 + 1.0);
    if n == 0 {
        return omega_m;
    }
    let nf = n as f64;
    let sphere = 2.0 * pi.powf(nf) / gamma(nf);
    let beta = gamma(nf / 2.0) * gamma(mf / 2.0 + 1.0) / gamma(nf / 2.0 + mf / 2.0 + 1.0);
    omega_m * sphere * beta / 4.0
}

/// Points of `Ω′` spread over a box in the tangent chart at the base point.
pub fn sample_dual_points<R: Rng + ?Sized>(cone: &Cone, rng: &mut R, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            if i == 0 {
                cone.dual_base.clone()
            } else {
                let y: Vec<f64> = (0..cone.dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
                cone.chart(&y)
            }
        })
        .collect()
}

/// A 2-step Lie bracket on `𝔫/𝔷 = R^{2n}` with values in `𝔷 = R^m`, and a
/// complex structure `J` on `R^{2n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bracket {
    /// `[X_i, X_j] = Σ_k coeffs[i][j][k] Z_k`.
    pub coeffs: Vec<Vec<Vec<f64>>>,
    pub j: DMatrix<f64>,
}

impl Bracket {
    pub fn heisenberg() -> Bracket {
        // [X,Y] = Z, JX = Y
        Bracket {
            coeffs: vec![vec![vec![0.0], vec![1.0]], vec![vec![-1.0], vec![0.0]]],
            j: DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
        }
    }

    pub fn with_j(&self, j: DMatrix<f64>) -> Bracket {
        Bracket {
            coeffs: self.coeffs.clone(),
            j,
        }
    }

    fn dim(&self) -> usize {
        self.coeffs.len()
    }

    fn center_dim(&self) -> usize {
        self.coeffs.first().and_then(|r| r.first()).map_or(0, |v| v.len())
    }

    fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.center_dim()];
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let c = x[i] * y[j];
                if c != 0.0 {
                    for (o, v) in out.iter_mut().zip(&self.coeffs[i][j]) {
                        *o += c * v;
                    }
                }
            }
        }
        out
    }

    fn check_structure(&self) -> Result<()> {
        let dim = self.dim();
        if dim % 2 != 0 || self.j.nrows() != dim || self.j.ncols() != dim {
            return Err(Error::precondition("J must be a square map on an even-dimensional space"));
        }
        let j2 = &self.j * &self.j + DMatrix::identity(dim, dim);
        if j2.amax() > 1e-10 {
            return Err(Error::precondition("J² ≠ −I"));
        }
        for i in 0..dim {
            ensure_dim(dim, self.coeffs[i].len())?;
            for j in 0..dim {
                ensure_dim(self.center_dim(), self.coeffs[i][j].len())?;
                for k in 0..self.center_dim() {
                    if (self.coeffs[i][j][k] + self.coeffs[j][i][k]).abs() > 1e-12 {
                        return Err(Error::precondition("bracket is not antisymmetric"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Complex basis `v_a` such that `{v_a, J v_a}` is a real basis.
    fn complex_basis(&self) -> Vec<DVector<f64>> {
        let dim = self.dim();
        let mut chosen: Vec<DVector<f64>> = Vec::new();
        let mut span: Vec<DVector<f64>> = Vec::new();
        for i in 0..dim {
            if span.len() == dim {
                break;
            }
            let e = DVector::from_fn(dim, |r, _| if r == i { 1.0 } else { 0.0 });
            let mut trial = span.clone();
            trial.push(e.clone());
            trial.push(&self.j * &e);
            let mat = DMatrix::from_columns(&trial);
            if mat.rank(1e-10) == trial.len() {
                span = trial;
                chosen.push(e);
            }
        }
        chosen
    }
}

/// Outcome of the admissibility test on `(X,Y) ↦ ⟨λ,[JX,Y]⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub worst_eigenvalue: f64,
    pub max_asymmetry: f64,
}

/// Check that `⟨λ,[JX,Y]⟩` is symmetric and positive definite for sampled `λ ∈ Ω′`.
pub fn check_admissible(bracket: &Bracket, cone: &Cone, sample_count: usize) -> Result<AdmissibilityReport> {
    bracket.check_structure()?;
    ensure_dim(cone.dim, bracket.center_dim())?;
    let dim = bracket.dim();
    let scale = bracket
        .coeffs
        .iter()
        .flatten()
        .flatten()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut rng = ChaCha8Rng::seed_from_u64(0xad_0155);
    let mut worst = f64::INFINITY;
    let mut asym: f64 = 0.0;
    let cols: Vec<DVector<f64>> = (0..dim)
        .map(|i| DVector::from_fn(dim, |r, _| if r == i { 1.0 } else { 0.0 }))
        .collect();
    for lambda in sample_dual_points(cone, &mut rng, sample_count.max(1)) {
        let form = DMatrix::from_fn(dim, dim, |i, j| {
            let v = bracket.apply(&(&bracket.j * &cols[i]), &cols[j]);
            v.iter().zip(&lambda).map(|(a, b)| a * b).sum::<f64>()
        });
        asym = asym.max((&form - form.transpose()).amax());
        let sym = (&form + form.transpose()) * 0.5;
        let eig = sym.symmetric_eigenvalues();
        worst = worst.min(eig.iter().copied().fold(f64::INFINITY, f64::min));
    }
    Ok(AdmissibilityReport {
        admissible: dim > 0 && asym <= 1e-10 * scale && worst > 1e-10 * scale,
        worst_eigenvalue: worst,
        max_asymmetry: asym,
    })
}

/// Build `Φ(ζ,ζ′) = ¼[Jζ,ζ′] + (i/4)[ζ,ζ′]` in a complex basis adapted to `J`.
pub fn phi_from_bracket(bracket: &Bracket, cone: Cone) -> Result<SiegelData> {
    bracket.check_structure()?;
    ensure_dim(cone.dim, bracket.center_dim())?;
    let basis = bracket.complex_basis();
    let n = basis.len();
    let m = cone.dim;
    let mut phi = vec![vec![vec![C0; m]; n]; n];
    for a in 0..n {
        for b in 0..n {
            let re = bracket.apply(&(&bracket.j * &basis[a]), &basis[b]);
            let im = bracket.apply(&basis[a], &basis[b]);
            for k in 0..m {
                phi[a][b][k] = Complex64::new(re[k] / 4.0, im[k] / 4.0);
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            for k in 0..m {
                if (phi[a][b][k] - phi[b][a][k].conj()).norm() > 1e-10 {
                    return Err(Error::domain("Φ is not hermitian: J is incompatible with the bracket"));
                }
            }
        }
    }
    SiegelData::new(cone, phi)
}

/// Generators of `T₊` used to pin down characters.
fn generators(cone: &Cone) -> Vec<Triangular> {
    let mut params = Vec::new();
    match cone.kind {
        ConeKind::Product => {
            for j in 0..cone.dim {
                let mut p = vec![1.0; cone.dim];
                p[j] = 2.0;
                params.push(p);
            }
        }
        ConeKind::Lorentz => {
            let mut base = vec![0.0; cone.dim];
            base[0] = 1.0;
            base[1] = 1.0;
            for j in 0..2 {
                let mut p = base.clone();
                p[j] = 2.0;
                params.push(p);
            }
            for i in 2..cone.dim {
                let mut p = base.clone();
                p[i] = 0.7;
                params.push(p);
            }
        }
    }
    params
        .iter()
        .map(|p| cone.triangular(p).expect("generator parameters are admissible"))
        .collect()
}

struct Equivariance<'a> {
    siegel: &'a SiegelData,
    target: Vec<Vec<Vec<Complex64>>>,
    params: DVector<f64>,
}

impl Equivariance<'_> {
    fn g(&self, p: &DVector<f64>) -> DMatrix<Complex64> {
        let n = self.siegel.n;
        DMatrix::from_fn(n, n, |r, c| Complex64::new(p[2 * (r * n + c)], p[2 * (r * n + c) + 1]))
    }

    fn residual_at(&self, p: &DVector<f64>) -> DVector<f64> {
        let s = self.siegel;
        let (n, m) = (s.n, s.m);
        let g = self.g(p);
        let mut out = DVector::zeros(2 * n * n * m);
        for a in 0..n {
            for b in 0..n {
                for k in 0..m {
                    let mut acc = C0;
                    for c in 0..n {
                        for d in 0..n {
                            acc += g[(c, a)] * g[(d, b)].conj() * s.phi[c][d][k];
                        }
                    }
                    let diff = self.target[a][b][k] - acc;
                    let idx = 2 * ((a * n + b) * m + k);
                    out[idx] = diff.re;
                    out[idx + 1] = diff.im;
                }
            }
        }
        out
    }
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for Equivariance<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.params.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.params.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        Some(self.residual_at(&self.params))
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        // the residual is quadratic, so central differences are exact up to rounding
        let h = 1e-4;
        let base = &self.params;
        let cols: Vec<DVector<f64>> = (0..base.len())
            .map(|i| {
                let mut plus = base.clone();
                let mut minus = base.clone();
                plus[i] += h;
                minus[i] -= h;
                (self.residual_at(&plus) - self.residual_at(&minus)) / (2.0 * h)
            })
            .collect();
        Some(DMatrix::from_columns(&cols))
    }
}

/// Solve `t·Φ = Φ∘(g×g)` for `g ∈ GL(E)`; returns `g` and the residual.
pub fn equivariant_g(siegel: &SiegelData, t: &Triangular) -> Result<(DMatrix<Complex64>, f64)> {
    let (n, m) = (siegel.n, siegel.m);
    let target: Vec<Vec<Vec<Complex64>>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    (0..m)
                        .map(|row| {
                            (0..m)
                                .map(|col| siegel.phi[a][b][col] * t.matrix[(row, col)])
                                .sum()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    // Cholesky guess from H_{λ·t} = gᵀ H_λ ḡ at λ = e′
    let e = siegel.cone.dual_base.clone();
    let h0 = siegel.form_at(&e);
    let h1 = siegel.form_at(&t.act_dual(&e));
    let guess = match (h0.cholesky(), h1.cholesky()) {
        (Some(c0), Some(c1)) => {
            let l0_adj_inv = c0
                .l()
                .adjoint()
                .try_inverse()
                .ok_or_else(|| Error::Convergence("singular Φ form".into()))?;
            (l0_adj_inv * c1.l().adjoint()).map(|z| z.conj())
        }
        _ => DMatrix::identity(n, n),
    };
    let mut start = DVector::zeros(2 * n * n);
    for r in 0..n {
        for c in 0..n {
            start[2 * (r * n + c)] = guess[(r, c)].re;
            start[2 * (r * n + c) + 1] = guess[(r, c)].im;
        }
    }
    let problem = Equivariance {
        siegel,
        target,
        params: start,
    };
    let (solved, _) = LevenbergMarquardt::new()
        .with_ftol(1e-15)
        .with_xtol(1e-15)
        .with_gtol(1e-15)
        .minimize(problem);
    let residual = solved.residual_at(&solved.params).amax();
    let scale = siegel
        .phi
        .iter()
        .flatten()
        .flatten()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
        .max(1.0);
    if residual > 1e-8 * scale {
        return Err(Error::Tolerance {
            what: "no equivariant g for this (Φ, T₊) pair".into(),
            residual,
            tolerance: 1e-8,
        });
    }
    Ok((solved.g(&solved.params), residual))
}

/// `b` with `Δ^{−b}(t) = |det_C g_t|²`, fitted on generators of `T₊`.
pub fn derive_b(siegel: &SiegelData) -> Result<PowerExponent> {
    let rank = siegel.cone.rank;
    if siegel.is_abelian() {
        return Ok(PowerExponent::zeros(rank));
    }
    let gens = generators(&siegel.cone);
    let mut a = DMatrix::zeros(gens.len(), rank);
    let mut rhs = DVector::zeros(gens.len());
    for (row, t) in gens.iter().enumerate() {
        let (g, _) = equivariant_g(siegel, t)?;
        let det = g.determinant().norm_sqr();
        for j in 0..rank {
            a[(row, j)] = -t.delta[j].ln();
        }
        rhs[row] = det.ln();
    }
    let svd = a.clone().svd(true, true);
    let b = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Convergence(format!("b fit: {e}")))?;
    let residual = (&a * &b - &rhs).amax();
    if residual > 1e-8 {
        return Err(Error::Tolerance {
            what: "b fit".into(),
            residual,
            tolerance: 1e-8,
        });
    }
    Ok(PowerExponent(b.iter().map(|&x| rationalize(x, 1e-6)).collect()))
}

/// Uniform grid on the torus `E × F`.
///
/// Axis `i` has `counts[i]` points `x_j = (j − N/2) h` with `h = 2·half/N`.
/// The first `2n` axes are `(Re ζ₁, Im ζ₁, …)`, the last `m` are `F`; the
/// layout is row-major with `F` innermost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub e_counts: Vec<usize>,
    pub e_half: Vec<f64>,
    pub f_counts: Vec<usize>,
    pub f_half: Vec<f64>,
}

impl Grid {
    pub fn new(e_counts: Vec<usize>, e_half: Vec<f64>, f_counts: Vec<usize>, f_half: Vec<f64>) -> Result<Grid> {
        ensure_dim(e_counts.len(), e_half.len())?;
        ensure_dim(f_counts.len(), f_half.len())?;
        if e_counts.len() % 2 != 0 {
            return Err(Error::config("E axes come in (Re, Im) pairs"));
        }
        for (&c, &h) in e_counts.iter().zip(&e_half).chain(f_counts.iter().zip(&f_half)) {
            if c < 2 || c % 2 != 0 || !(h > 0.0) {
                return Err(Error::config(format!(
                    "grid axes need an even count >= 2 and positive half-width (got {c}, {h})"
                )));
            }
        }
        Ok(Grid {
            e_counts,
            e_half,
            f_counts,
            f_half,
        })
    }

    /// Same count and half-width on all `E` axes, and likewise on `F`.
    pub fn uniform(n: usize, m: usize, e_count: usize, e_half: f64, f_count: usize, f_half: f64) -> Result<Grid> {
        Grid::new(vec![e_count; 2 * n], vec![e_half; 2 * n], vec![f_count; m], vec![f_half; m])
    }

    pub fn n(&self) -> usize {
        self.e_counts.len() / 2
    }

    pub fn m(&self) -> usize {
        self.f_counts.len()
    }

    pub fn e_len(&self) -> usize {
        self.e_counts.iter().product()
    }

    pub fn f_len(&self) -> usize {
        self.f_counts.iter().product()
    }

    pub fn len(&self) -> usize {
        self.e_len() * self.f_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn e_spacing(&self, axis: usize) -> f64 {
        2.0 * self.e_half[axis] / self.e_counts[axis] as f64
    }

    pub fn f_spacing(&self, axis: usize) -> f64 {
        2.0 * self.f_half[axis] / self.f_counts[axis] as f64
    }

    pub fn e_cell(&self) -> f64 {
        (0..self.e_counts.len()).map(|a| self.e_spacing(a)).product()
    }

    pub fn f_cell(&self) -> f64 {
        (0..self.f_counts.len()).map(|a| self.f_spacing(a)).product()
    }

    pub fn cell_measure(&self) -> f64 {
        self.e_cell() * self.f_cell()
    }

    /// Spacing of the dual lattice on `F′` along `axis`.
    pub fn dual_spacing(&self, axis: usize) -> f64 {
        2.0 * std::f64::consts::PI / (2.0 * self.f_half[axis])
    }

    pub fn box_volume(&self) -> f64 {
        self.e_half.iter().chain(&self.f_half).map(|h| 2.0 * h).product()
    }

    fn unravel(counts: &[usize], mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; counts.len()];
        for (slot, &c) in out.iter_mut().zip(counts).rev() {
            *slot = idx % c;
            idx /= c;
        }
        out
    }

    fn ravel(counts: &[usize], multi: &[usize]) -> usize {
        multi.iter().zip(counts).fold(0, |acc, (&i, &c)| acc * c + i)
    }

    pub fn e_multi(&self, idx: usize) -> Vec<usize> {
        Grid::unravel(&self.e_counts, idx)
    }

    pub fn f_multi(&self, idx: usize) -> Vec<usize> {
        Grid::unravel(&self.f_counts, idx)
    }

    pub fn e_flat(&self, multi: &[usize]) -> usize {
        Grid::ravel(&self.e_counts, multi)
    }

    pub fn f_flat(&self, multi: &[usize]) -> usize {
        Grid::ravel(&self.f_counts, multi)
    }

    pub fn zeta_at(&self, e_idx: usize) -> Vec<Complex64> {
        let multi = self.e_multi(e_idx);
        let coord = |axis: usize| (multi[axis] as f64 - (self.e_counts[axis] / 2) as f64) * self.e_spacing(axis);
        (0..self.n()).map(|a| Complex64::new(coord(2 * a), coord(2 * a + 1))).collect()
    }

    pub fn x_at(&self, f_idx: usize) -> Vec<f64> {
        let multi = self.f_multi(f_idx);
        multi
            .iter()
            .enumerate()
            .map(|(axis, &j)| (j as f64 - (self.f_counts[axis] / 2) as f64) * self.f_spacing(axis))
            .collect()
    }

    pub fn point(&self, idx: usize) -> GroupPoint {
        let fl = self.f_len();
        GroupPoint {
            zeta: self.zeta_at(idx / fl),
            x: self.x_at(idx % fl),
        }
    }

    /// Index of `ζ_a − ζ_b` on the `E` torus.
    pub fn e_difference(&self, a: usize, b: usize) -> usize {
        let ma = self.e_multi(a);
        let mb = self.e_multi(b);
        let diff: Vec<usize> = ma
            .iter()
            .zip(&mb)
            .zip(&self.e_counts)
            .map(|((&i, &j), &c)| (i + c + c / 2 - j) % c)
            .collect();
        self.e_flat(&diff)
    }

    pub fn compatible(&self, other: &Grid) -> bool {
        self == other
    }
}

/// Complex samples on a [`Grid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<GridFunction> {
        ensure_dim(grid.len(), values.len())?;
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: &Grid) -> GridFunction {
        GridFunction {
            values: vec![C0; grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&GroupPoint) -> Complex64) -> GridFunction {
        GridFunction {
            values: (0..grid.len()).map(|i| f(&grid.point(i))).collect(),
            grid: grid.clone(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Riemann sum `Σ f · cell_measure` (Haar measure on `𝒩`).
pub fn integrate(f: &GridFunction) -> Complex64 {
    f.values.iter().sum::<Complex64>() * f.grid.cell_measure()
}

/// `ρ·(ζ,x) = (ρ^{1/2}ζ, ρx)`.
pub fn dilate(rho: f64, g: &GroupPoint) -> GroupPoint {
    let s = rho.sqrt();
    GroupPoint {
        zeta: g.zeta.iter().map(|z| z * s).collect(),
        x: g.x.iter().map(|v| v * rho).collect(),
    }
}

/// Random point of `Ω′` used for spot checks: `e′·t` for a sampled `t`.
pub fn random_dual_point<R: Rng + ?Sized>(cone: &Cone, rng: &mut R) -> Vec<f64> {
    let t = cone.sample_triangular(rng, 1.0);
    t.act_dual(cone.base_point(Side::Dual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pt(z: Complex64, x: f64) -> GroupPoint {
        GroupPoint { zeta: vec![z], x: vec![x] }
    }

    #[test]
    fn heisenberg_product_example() {
        let h = SiegelData::heisenberg(1).unwrap();
        let g = h.multiply(&pt(c(1.0, 0.0), 0.0), &pt(c(0.0, 1.0), 0.0)).unwrap();
        assert_eq!(g.zeta, vec![c(1.0, 1.0)]);
        assert_relative_eq!(g.x[0], -2.0);
        let a = pt(c(0.3, -1.2), 0.7);
        assert_eq!(h.multiply(&a, &GroupPoint::identity(1, 1)).unwrap(), a);
        let id = h.multiply(&a, &a.inverse()).unwrap();
        assert!(h.homogeneous_norm(&id) < 1e-15);
    }

    #[test]
    fn b_examples() {
        assert_eq!(SiegelData::heisenberg(1).unwrap().b.0, vec![-1.0]);
        assert_eq!(SiegelData::heisenberg(2).unwrap().b.0, vec![-2.0]);
        assert_eq!(SiegelData::abelian(Cone::product(2).unwrap()).b.0, vec![0.0, 0.0]);
        assert_eq!(SiegelData::product_heisenberg(2).unwrap().b.0, vec![-1.0, -1.0]);
    }

    #[test]
    fn b_consistency_on_sampled_t() {
        let h = SiegelData::heisenberg(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let t = h.cone.sample_triangular(&mut rng, 1.0);
            let (g, _) = equivariant_g(&h, &t).unwrap();
            let ratio = t.character(&h.b.neg()) / g.determinant().norm_sqr();
            assert_relative_eq!(ratio, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn lorentz_siegel_data() {
        // Φ(ζ) = (|ζ₁|² + |ζ₂|², |ζ₁|² − |ζ₂|², 2 Re ζ₁ζ̄₂): the spin factor over lorentz(3)
        let one = c(1.0, 0.0);
        let phi = vec![
            vec![vec![one, one, C0], vec![C0, C0, one]],
            vec![vec![C0, C0, one], vec![one, -one, C0]],
        ];
        let s = SiegelData::new(Cone::lorentz(3).unwrap(), phi).unwrap();
        assert_eq!(s.b.rank(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let t = s.cone.sample_triangular(&mut rng, 0.8);
            let (g, _) = equivariant_g(&s, &t).unwrap();
            assert_relative_eq!(t.character(&s.b.neg()), g.determinant().norm_sqr(), max_relative = 1e-8);
        }
    }

    #[test]
    fn admissibility_and_bracket_roundtrip() {
        let cone = Cone::product(1).unwrap();
        let br = Bracket::heisenberg();
        let report = check_admissible(&br, &cone, 8).unwrap();
        assert!(!report.admissible);
        assert!(phi_from_bracket(&br, cone.clone()).is_err());
        let flipped = br.with_j(-br.j.clone());
        assert!(check_admissible(&flipped, &cone, 8).unwrap().admissible);
        let s = phi_from_bracket(&flipped, cone.clone()).unwrap();
        assert_relative_eq!(s.phi[0][0][0].re, 0.25, epsilon = 1e-14);

        let h = SiegelData::heisenberg(1).unwrap();
        let back = phi_from_bracket(&h.bracket(), cone.clone()).unwrap();
        assert!((back.phi[0][0][0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(check_admissible(&h.bracket(), &cone, 8).unwrap().admissible);

        let bad = br.with_j(DMatrix::identity(2, 2));
        assert!(matches!(check_admissible(&bad, &cone, 4), Err(Error::Precondition(_))));
        let abelian = Bracket {
            coeffs: vec![vec![vec![0.0]; 2]; 2],
            j: flipped.j.clone(),
        };
        assert!(phi_from_bracket(&abelian, cone).is_err());
    }

    #[test]
    fn dilation_and_ball_volume() {
        let h = SiegelData::heisenberg(1).unwrap();
        let g = pt(c(0.5, 0.25), 1.0);
        let d = dilate(4.0, &g);
        assert_eq!(d.zeta, vec![c(1.0, 0.5)]);
        assert_eq!(d.x, vec![4.0]);
        // unit ball of (|ζ|⁴+x²)^{1/2} in C×R has volume π²/2
        assert_relative_eq!(unit_ball_volume(1, 1), std::f64::consts::PI.powi(2) / 2.0, epsilon = 1e-12);
        assert_relative_eq!(unit_ball_volume(0, 2), std::f64::consts::PI, epsilon = 1e-12);
        assert_relative_eq!(h.ball_volume(2.0), 2f64.powi(4) * unit_ball_volume(1, 1), epsilon = 1e-12);
    }

    #[test]
    fn grid_integration() {
        let grid = Grid::uniform(0, 2, 0, 0.0, 64, 8.0).unwrap();
        let ones = GridFunction::from_fn(&grid, |_| c(1.0, 0.0));
        assert_relative_eq!(integrate(&ones).re, 256.0, epsilon = 1e-9);
        let sigma: f64 = 1.0;
        let gauss = GridFunction::from_fn(&grid, |p| {
            c((-(p.x[0].powi(2) + p.x[1].powi(2)) / (2.0 * sigma * sigma)).exp(), 0.0)
        });
        assert_relative_eq!(integrate(&gauss).re, 2.0 * std::f64::consts::PI, epsilon = 1e-8);
    }

    #[test]
    fn haar_shift_invariance() {
        let h = SiegelData::heisenberg(1).unwrap();
        let grid = Grid::uniform(1, 1, 32, 4.0, 64, 8.0).unwrap();
        // vanishes to 1e−27 at the box edge, so it is compactly supported numerically
        let bump = |p: &GroupPoint| (-h.homogeneous_norm(p).powi(2)).exp();
        let shift = pt(c(0.25, -0.5), 0.75);
        let f = GridFunction::from_fn(&grid, |p| c(bump(p), 0.0));
        let g = GridFunction::from_fn(&grid, |p| c(bump(&h.multiply(&shift, p).unwrap()), 0.0));
        let (a, b) = (integrate(&f).re, integrate(&g).re);
        assert!((a - b).abs() / a < 1e-6, "{a} vs {b}");
    }
}
