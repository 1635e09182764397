//! Scalar Fourier calculus for functions of analytic type.
//!
//! A function of analytic type is determined by a scalar symbol `σ` on `Ω′`:
//!
//! ```text
//! u(ζ,x) = c ∫_{Ω′} σ(λ) Δ_{Ω′}^{−b}(λ) e^{−⟨λ,Φ(ζ)⟩ + i⟨λ,x⟩} dλ
//! ```
//!
//! with `c = (2π)^{−m} (2/π)^n det H_{e′}`. With this `c` the read-back
//! `∫ u e^{−⟨λ,Φ(ζ)⟩ − i⟨λ,x⟩}` returns `σ`, convolution multiplies symbols,
//! and `‖u‖₂² = c ∫ |σ|² Δ^{−b}`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::{Cone, ConeKind, PowerExponent, Region, Side};
use crate::error::{ensure_dim, Error, Result};
use crate::fft::{signed_index, Direction, NdFft};
use crate::nilgroup::{Grid, GridFunction, SiegelData};

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };

pub type SymbolFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// A symbol given as a function on `Ω′`, vanishing outside `support`.
#[derive(Clone)]
pub struct Symbol {
    pub support: Region,
    f: SymbolFn,
}

impl std::fmt::Debug for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Symbol").field("support", &self.support).finish_non_exhaustive()
    }
}

impl Symbol {
    pub fn new(support: Region, f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static) -> Symbol {
        Symbol {
            support,
            f: Arc::new(f),
        }
    }

    pub fn zero(support: Region) -> Symbol {
        Symbol::new(support, |_| C0)
    }

    /// Value at `λ`, zero outside the support.
    pub fn eval(&self, cone: &Cone, lambda: &[f64]) -> Complex64 {
        if self.support.contains(cone, lambda) {
            (self.f)(lambda)
        } else {
            C0
        }
    }

    /// The underlying function without the support mask.
    pub fn raw(&self, lambda: &[f64]) -> Complex64 {
        (self.f)(lambda)
    }

    /// Pointwise multiplication by `g`; the support is kept.
    pub fn times(&self, g: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static) -> Symbol {
        let f = self.f.clone();
        Symbol::new(self.support.clone(), move |l| f(l) * g(l))
    }

    /// Pointwise product; the support is the intersection.
    pub fn product(&self, other: &Symbol) -> Symbol {
        match self.support.intersection(&other.support) {
            Some(region) => {
                let (f, g) = (self.f.clone(), other.f.clone());
                Symbol::new(region, move |l| f(l) * g(l))
            }
            None => Symbol::zero(self.support.clone()),
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Symbol {
        self.times(move |_| factor)
    }

    /// Sum of symbols; the support is the hull.
    pub fn sum(terms: &[Symbol]) -> Result<Symbol> {
        let first = terms
            .first()
            .ok_or_else(|| Error::precondition("sum of an empty symbol list"))?;
        let support = terms.iter().skip(1).fold(first.support.clone(), |acc, t| acc.hull(&t.support));
        let parts: Vec<(Region, SymbolFn)> = terms.iter().map(|t| (t.support.clone(), t.f.clone())).collect();
        let cone_free = move |l: &[f64]| parts.iter().map(|(_, f)| f(l)).sum::<Complex64>();
        Ok(Symbol::new(support, cone_free))
    }
}

/// Samples of a symbol on a box of the lattice `Π_a spacing_a Z`.
///
/// Sample `i` along axis `a` sits at `λ_a = (lo_a + i) · spacing_a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarSymbol {
    pub spacing: Vec<f64>,
    pub lo: Vec<i64>,
    pub shape: Vec<usize>,
    pub values: Vec<Complex64>,
    /// Tensor trapezoid weights (1 inside, ½ on box faces).
    pub weights: Vec<f64>,
}

impl ScalarSymbol {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_at(&self, flat: usize) -> Vec<i64> {
        let mut out = vec![0i64; self.shape.len()];
        let mut rest = flat;
        for a in (0..self.shape.len()).rev() {
            out[a] = self.lo[a] + (rest % self.shape[a]) as i64;
            rest /= self.shape[a];
        }
        out
    }

    pub fn lambda_at(&self, flat: usize) -> Vec<f64> {
        self.index_at(flat)
            .iter()
            .zip(&self.spacing)
            .map(|(&k, h)| k as f64 * h)
            .collect()
    }

    pub fn cell(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Sample `f` on the lattice box `[lo, hi]` (inclusive indices), masked to
    /// the closed cone.
    pub fn sample_box(
        cone: &Cone,
        spacing: Vec<f64>,
        lo: Vec<i64>,
        hi: Vec<i64>,
        f: impl Fn(&[f64]) -> Complex64 + Sync,
    ) -> Result<ScalarSymbol> {
        ensure_dim(cone.dim, spacing.len())?;
        ensure_dim(cone.dim, lo.len())?;
        ensure_dim(cone.dim, hi.len())?;
        if lo.iter().zip(&hi).any(|(l, h)| h < l) {
            return Err(Error::precondition("empty symbol box"));
        }
        let shape: Vec<usize> = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).collect();
        let total: usize = shape.iter().product();
        let mut sym = ScalarSymbol {
            spacing,
            lo,
            shape,
            values: vec![C0; total],
            weights: vec![1.0; total],
        };
        let values: Vec<(Complex64, f64)> = (0..total)
            .into_par_iter()
            .map(|i| {
                let idx = sym.index_at(i);
                let lambda: Vec<f64> = idx.iter().zip(&sym.spacing).map(|(&k, h)| k as f64 * h).collect();
                let mut w = 1.0;
                for a in 0..idx.len() {
                    if sym.shape[a] > 1 && (idx[a] == sym.lo[a] || idx[a] == sym.lo[a] + sym.shape[a] as i64 - 1) {
                        w *= 0.5;
                    }
                }
                let v = if in_closed_cone(cone, &lambda) { f(&lambda) } else { C0 };
                (v, w)
            })
            .collect();
        for (i, (v, w)) in values.into_iter().enumerate() {
            sym.values[i] = v;
            sym.weights[i] = w;
        }
        Ok(sym)
    }

    /// Sample `f` on the dual lattice of `grid` over the real box `[lo, hi]`,
    /// padded by one sample on each side.
    pub fn sample_region(
        cone: &Cone,
        grid: &Grid,
        lo: &[f64],
        hi: &[f64],
        f: impl Fn(&[f64]) -> Complex64 + Sync,
    ) -> Result<ScalarSymbol> {
        ensure_dim(grid.m(), cone.dim)?;
        let spacing: Vec<f64> = (0..cone.dim).map(|a| grid.dual_spacing(a)).collect();
        let ilo = lo.iter().zip(&spacing).map(|(l, h)| (l / h).floor() as i64 - 1).collect();
        let ihi = hi.iter().zip(&spacing).map(|(l, h)| (l / h).ceil() as i64 + 1).collect();
        ScalarSymbol::sample_box(cone, spacing, ilo, ihi, f)
    }

    /// Sample a [`Symbol`] over the bounding box of its support.
    pub fn from_symbol(cone: &Cone, grid: &Grid, sigma: &Symbol) -> Result<ScalarSymbol> {
        let (lo, hi) = sigma.support.lambda_box(cone);
        ScalarSymbol::sample_region(cone, grid, &lo, &hi, |l| sigma.eval(cone, l))
    }

    pub fn same_layout(&self, other: &ScalarSymbol) -> bool {
        self.lo == other.lo
            && self.shape == other.shape
            && self
                .spacing
                .iter()
                .zip(&other.spacing)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs())
    }

    pub fn map(&self, f: impl Fn(&[f64], Complex64) -> Complex64 + Sync) -> ScalarSymbol {
        let values = (0..self.len())
            .into_par_iter()
            .map(|i| f(&self.lambda_at(i), self.values[i]))
            .collect();
        ScalarSymbol {
            values,
            ..self.clone()
        }
    }

    /// `Σ |σ|^2 w(λ) · cell` for a weight function `w`.
    pub fn weighted_l2_sq(&self, w: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.len())
            .filter(|&i| self.values[i] != C0)
            .map(|i| self.values[i].norm_sqr() * self.weights[i] * w(&self.lambda_at(i)))
            .sum::<f64>()
            * self.cell()
    }
}

fn in_closed_cone(cone: &Cone, v: &[f64]) -> bool {
    match cone.kind {
        ConeKind::Product => v.iter().all(|&x| x >= 0.0),
        ConeKind::Lorentz => v[0] >= 0.0 && v[0] * v[0] >= v[1..].iter().map(|x| x * x).sum::<f64>(),
    }
}

/// `Δ_{Ω′}^{s}(λ)` with the convention that it is 1 for `s = 0` everywhere on
/// the closed cone and 0 on the boundary otherwise.
pub fn dual_power_or_zero(cone: &Cone, s: &[f64], lambda: &[f64]) -> f64 {
    if s.iter().all(|&e| e == 0.0) {
        return 1.0;
    }
    cone.delta_power(Side::Dual, s, lambda).unwrap_or(0.0)
}

/// `N(λ) = (tr H_λ)² + |λ|²`, the eigenvalue of the Rockland operator on the
/// analytic-type component.
pub fn n_lambda(siegel: &SiegelData, lambda: &[f64]) -> f64 {
    let tr: f64 = (0..siegel.n)
        .map(|a| {
            siegel.phi[a][a]
                .iter()
                .zip(lambda)
                .map(|(p, l)| p.re * l)
                .sum::<f64>()
        })
        .sum();
    tr * tr + lambda.iter().map(|l| l * l).sum::<f64>()
}

/// Same as [`n_lambda`] with the trace taken in an arbitrary orthonormal
/// basis, given as the columns of a unitary matrix.
pub fn n_lambda_in_basis(siegel: &SiegelData, lambda: &[f64], basis: &nalgebra::DMatrix<Complex64>) -> f64 {
    let h = siegel.form_at(lambda);
    let tr: f64 = (0..siegel.n)
        .map(|j| {
            let v = basis.column(j);
            (v.transpose() * &h * v.conjugate())[(0, 0)].re
        })
        .sum();
    tr * tr + lambda.iter().map(|l| l * l).sum::<f64>()
}

/// Closed-form inversion constant `(2π)^{−m} (2/π)^n det H_{e′}`.
pub fn inversion_constant(siegel: &SiegelData) -> f64 {
    let m = siegel.m as f64;
    let n = siegel.n as i32;
    let det = if siegel.n == 0 {
        1.0
    } else {
        siegel.form_at(siegel.cone.base_point(Side::Dual)).determinant().re
    };
    (2.0 * std::f64::consts::PI).powf(-m) * (2.0 / std::f64::consts::PI).powi(n) * det
}

fn check_layout(siegel: &SiegelData, sigma: &ScalarSymbol, grid: &Grid) -> Result<()> {
    ensure_dim(siegel.m, grid.m())?;
    ensure_dim(2 * siegel.n, grid.e_counts.len())?;
    ensure_dim(siegel.m, sigma.spacing.len())?;
    for a in 0..siegel.m {
        let want = grid.dual_spacing(a);
        if (sigma.spacing[a] - want).abs() > 1e-12 * want {
            return Err(Error::precondition(format!(
                "symbol spacing {} on axis {a} is not the grid's dual spacing {want}",
                sigma.spacing[a]
            )));
        }
        if sigma.shape[a] > grid.f_counts[a] {
            return Err(Error::precondition(format!(
                "Nyquist: symbol spans {} samples on axis {a} but the grid has only {}",
                sigma.shape[a], grid.f_counts[a]
            )));
        }
    }
    Ok(())
}

fn bin_flat(grid: &Grid, idx: &[i64]) -> usize {
    idx.iter()
        .zip(&grid.f_counts)
        .fold(0usize, |acc, (&k, &n)| acc * n + k.rem_euclid(n as i64) as usize)
}

fn parity_sign(idx: impl IntoIterator<Item = i64>) -> f64 {
    if idx.into_iter().sum::<i64>().rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `(−1)^{Σ k}` for the FFT bin `flat`; converts plain DFTs into transforms
/// centred on the grid's middle point.
fn bin_sign(grid: &Grid, flat: usize) -> f64 {
    parity_sign(grid.f_multi(flat).into_iter().map(|b| b as i64))
}

fn plan_for(grid: &Grid) -> NdFft {
    NdFft::new(&grid.f_counts)
}

/// `u = c ∫ σ Δ^{−b} e^{−⟨λ,Φ(ζ)⟩ + i⟨λ,x⟩} dλ` on the grid.
pub fn synthesize(siegel: &SiegelData, sigma: &ScalarSymbol, grid: &Grid) -> Result<GridFunction> {
    check_layout(siegel, sigma, grid)?;
    let c = inversion_constant(siegel) * sigma.cell();
    let minus_b = siegel.b.neg();
    let terms: Vec<(usize, Vec<f64>, Complex64)> = (0..sigma.len())
        .filter(|&i| sigma.values[i] != C0)
        .map(|i| {
            let idx = sigma.index_at(i);
            let lambda = sigma.lambda_at(i);
            let amp = sigma.values[i]
                * (c * sigma.weights[i] * dual_power_or_zero(&siegel.cone, &minus_b, &lambda) * parity_sign(idx.iter().copied()));
            (bin_flat(grid, &idx), lambda, amp)
        })
        .collect();
    let plan = plan_for(grid);
    let fl = grid.f_len();
    let mut values = vec![C0; grid.len()];
    values.par_chunks_mut(fl).enumerate().for_each(|(e, block)| {
        let phi = if siegel.n == 0 {
            Vec::new()
        } else {
            siegel.phi_quad(&grid.zeta_at(e))
        };
        for (bin, lambda, amp) in &terms {
            let damp = if phi.is_empty() {
                1.0
            } else {
                (-dot(lambda, &phi)).exp()
            };
            block[*bin] += amp * damp;
        }
        plan.process(block, Direction::Inverse);
    });
    GridFunction::new(grid.clone(), values)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `∫ u(ζ,x) e^{−⟨λ,Φ(ζ)⟩ − i⟨λ,x⟩}` on the layout of `like`; inverts
/// [`synthesize`].
pub fn read_back(siegel: &SiegelData, u: &GridFunction, like: &ScalarSymbol) -> Result<ScalarSymbol> {
    let grid = &u.grid;
    check_layout(siegel, like, grid)?;
    let plan = plan_for(grid);
    let fl = grid.f_len();
    let cell = grid.cell_measure();
    let lambdas: Vec<Vec<f64>> = (0..like.len()).map(|i| like.lambda_at(i)).collect();
    let bins: Vec<(usize, f64)> = (0..like.len())
        .map(|i| {
            let idx = like.index_at(i);
            (bin_flat(grid, &idx), parity_sign(idx.iter().copied()))
        })
        .collect();
    let acc = u
        .values
        .par_chunks(fl)
        .enumerate()
        .fold(
            || vec![C0; like.len()],
            |mut acc, (e, block)| {
                let mut buf = block.to_vec();
                plan.process(&mut buf, Direction::Forward);
                let phi = if siegel.n == 0 {
                    Vec::new()
                } else {
                    siegel.phi_quad(&grid.zeta_at(e))
                };
                for (i, (bin, sign)) in bins.iter().enumerate() {
                    let damp = if phi.is_empty() {
                        1.0
                    } else {
                        (-dot(&lambdas[i], &phi)).exp()
                    };
                    acc[i] += buf[*bin] * (sign * damp);
                }
                acc
            },
        )
        .reduce(
            || vec![C0; like.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let values = acc
        .iter()
        .zip(&like.weights)
        .map(|(v, w)| v * (cell / w))
        .collect();
    Ok(ScalarSymbol {
        values,
        ..like.clone()
    })
}

/// Symbol-side convolution: the pointwise product.
pub fn convolve_symbols(a: &ScalarSymbol, b: &ScalarSymbol) -> Result<ScalarSymbol> {
    if !a.same_layout(b) {
        return Err(Error::precondition("symbol convolution needs a common quadrature"));
    }
    Ok(ScalarSymbol {
        values: a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect(),
        ..a.clone()
    })
}

/// Group convolution `(u*v)(g) = ∫ u(h) v(h⁻¹g) dh` on the torus grid: FFT
/// along `F`, direct summation along `E`.
pub fn convolve_grid(siegel: &SiegelData, u: &GridFunction, v: &GridFunction) -> Result<GridFunction> {
    if !u.grid.compatible(&v.grid) {
        return Err(Error::precondition("grid convolution needs identical grids"));
    }
    let grid = &u.grid;
    ensure_dim(siegel.m, grid.m())?;
    ensure_dim(2 * siegel.n, grid.e_counts.len())?;
    let plan = plan_for(grid);
    let fl = grid.f_len();
    let el = grid.e_len();
    let signs: Vec<f64> = (0..fl).map(|k| bin_sign(grid, k)).collect();
    let centered = |f: &GridFunction| -> Vec<Complex64> {
        let mut out = f.values.clone();
        out.par_chunks_mut(fl).for_each(|block| {
            plan.process(block, Direction::Forward);
            block.iter_mut().zip(&signs).for_each(|(x, s)| *x *= s);
        });
        out
    };
    let uh = centered(u);
    let vh = centered(v);
    let kappa: Vec<Vec<f64>> = (0..grid.m())
        .map(|a| {
            let n = grid.f_counts[a];
            (0..n).map(|b| signed_index(b, n) as f64 * grid.dual_spacing(a)).collect()
        })
        .collect();
    let zetas: Vec<Vec<Complex64>> = (0..el).map(|e| grid.zeta_at(e)).collect();
    let scale = grid.cell_measure() / fl as f64;
    let mut out = vec![C0; grid.len()];
    out.par_chunks_mut(fl).enumerate().for_each(|(z, block)| {
        let mut tables: Vec<Vec<Complex64>> = kappa.iter().map(|k| vec![C0; k.len()]).collect();
        for eta in 0..el {
            let d = grid.e_difference(z, eta);
            let ub = &uh[eta * fl..(eta + 1) * fl];
            let vb = &vh[d * fl..(d + 1) * fl];
            if siegel.n == 0 {
                for k in 0..fl {
                    block[k] += ub[k] * vb[k];
                }
                continue;
            }
            let shift = siegel.twisted_shift(&zetas[eta], &zetas[z]);
            for (a, table) in tables.iter_mut().enumerate() {
                for (slot, k) in table.iter_mut().zip(&kappa[a]) {
                    *slot = Complex64::from_polar(1.0, -k * shift[a]);
                }
            }
            for k in 0..fl {
                let mut phase = Complex64::new(1.0, 0.0);
                let mut rest = k;
                for a in (0..tables.len()).rev() {
                    let n = grid.f_counts[a];
                    phase *= tables[a][rest % n];
                    rest /= n;
                }
                block[k] += ub[k] * vb[k] * phase;
            }
        }
        block.iter_mut().zip(&signs).for_each(|(x, s)| *x *= s * scale);
        plan.process(block, Direction::Inverse);
    });
    GridFunction::new(grid.clone(), out)
}

/// Which power function the Riemann–Liouville factor uses on `Ω′`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerReading {
    /// `Δ_{Ω′}^{−s}(λ)`.
    #[default]
    DualPower,
    /// `Δ_Ω^{−s}(λ)`, the primal power evaluated on the (self-dual) set.
    PrimalPower,
}

/// `e^{−iπ Σs/2} Δ^{−s}(λ)`; zero off the open cone.
pub fn riemann_liouville_factor(cone: &Cone, s: &PowerExponent, reading: PowerReading, lambda: &[f64]) -> Complex64 {
    if s.iter().all(|&e| e == 0.0) {
        return Complex64::new(1.0, 0.0);
    }
    let side = match reading {
        PowerReading::DualPower => Side::Dual,
        PowerReading::PrimalPower => Side::Primal,
    };
    match cone.delta_power(side, &s.neg(), lambda) {
        Ok(p) => Complex64::from_polar(p, -std::f64::consts::FRAC_PI_2 * s.sum()),
        Err(_) => C0,
    }
}

pub fn riemann_liouville(cone: &Cone, sigma: &ScalarSymbol, s: &PowerExponent, reading: PowerReading) -> Result<ScalarSymbol> {
    ensure_dim(cone.rank, s.rank())?;
    Ok(sigma.map(|l, v| {
        if v == C0 {
            v
        } else {
            v * riemann_liouville_factor(cone, s, reading, l)
        }
    }))
}

/// Constants measured on a grid, next to the closed form in use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub c_inversion: f64,
    pub c_plancherel: f64,
    pub closed_form: f64,
    pub inversion_residual: f64,
    pub plancherel_residual: f64,
}

pub const CALIBRATION_TOLERANCE: f64 = 1e-3;

fn calibration_cache() -> &'static Mutex<HashMap<String, Calibration>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Calibration>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Reference symbol for calibration: a smooth bump around `e′` with radius
/// `width` in the chart.
pub fn reference_symbol(cone: &Cone, width: f64) -> Symbol {
    let c = cone.clone();
    let region = Region {
        scale: ((-width).exp(), width.exp()),
        spread: width,
    };
    Symbol::new(region, move |l| {
        let y = c.chart_inverse(l);
        let r2 = y.iter().map(|v| v * v).sum::<f64>() / (width * width);
        if r2 < 1.0 {
            Complex64::new((-1.0 / (1.0 - r2)).exp(), 0.0)
        } else {
            C0
        }
    })
}

/// Measure the inversion and Plancherel constants on `grid`.
///
/// `c_inversion` is the factor by which synthesize-then-read-back with unit
/// constant must be divided to return the input; `c_plancherel` is
/// `‖u‖₂² / ∫|σ|² Δ^{−b}` for `u` synthesized with the closed form. Both must
/// match the closed form within [`CALIBRATION_TOLERANCE`].
pub fn calibrate_constants(siegel: &SiegelData, grid: &Grid) -> Result<Calibration> {
    let key = serde_json::to_string(&(siegel, grid)).map_err(|e| Error::Serialize(e.to_string()))?;
    if let Some(hit) = calibration_cache().lock().expect("calibration cache").get(&key) {
        return Ok(*hit);
    }
    let cone = &siegel.cone;
    let closed = inversion_constant(siegel);
    let sigma = ScalarSymbol::from_symbol(cone, grid, &reference_symbol(cone, 0.5))?;
    let u = synthesize(siegel, &sigma, grid)?;
    let back = read_back(siegel, &u, &sigma)?;
    let (num, den) = back
        .values
        .iter()
        .zip(&sigma.values)
        .fold((C0, 0.0), |(n, d), (b, s)| (n + b * s.conj(), d + s.norm_sqr()));
    let ratio = num / den;
    let c_inversion = closed / ratio.re;
    let inversion_residual = back
        .values
        .iter()
        .zip(&sigma.values)
        .map(|(b, s)| (b - s).norm_sqr())
        .sum::<f64>()
        .sqrt()
        / den.sqrt();
    let minus_b = siegel.b.neg();
    let weighted = sigma.weighted_l2_sq(|l| dual_power_or_zero(cone, &minus_b, l));
    let norm_sq = u.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.cell_measure();
    let c_plancherel = norm_sq / weighted;
    let plancherel_residual = (c_plancherel - closed).abs() / closed;
    let cal = Calibration {
        c_inversion,
        c_plancherel,
        closed_form: closed,
        inversion_residual,
        plancherel_residual,
    };
    if inversion_residual > CALIBRATION_TOLERANCE {
        return Err(Error::Tolerance {
            what: "inversion calibration".into(),
            residual: inversion_residual,
            tolerance: CALIBRATION_TOLERANCE,
        });
    }
    if plancherel_residual > CALIBRATION_TOLERANCE {
        return Err(Error::Tolerance {
            what: "Plancherel calibration".into(),
            residual: plancherel_residual,
            tolerance: CALIBRATION_TOLERANCE,
        });
    }
    calibration_cache().lock().expect("calibration cache").insert(key, cal);
    Ok(cal)
}

/// Resolution targets for [`fit_grid`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPlan {
    /// Symbol samples across the widest extent of the support, per axis.
    pub symbol_samples: usize,
    /// Ratio of FFT length to symbol extent along `F`.
    pub oversample: f64,
    /// Minimum number of samples per `E` axis.
    pub e_samples: usize,
    /// Gaussian decay `e^{−⟨λ,Φ(ζ)⟩}` required at the `E` box edge.
    pub e_decay: f64,
    /// Resolve each `F′` axis separately instead of at the widest extent;
    /// needed for thin, strongly anisotropic supports.
    #[serde(default)]
    pub per_axis: bool,
}

impl Default for GridPlan {
    fn default() -> Self {
        GridPlan {
            symbol_samples: 32,
            oversample: 3.0,
            e_samples: 24,
            e_decay: 1e-10,
            per_axis: false,
        }
    }
}

impl GridPlan {
    /// Resolution giving roughly 1e−5 relative accuracy on L^p norms of
    /// lattice pieces, scaled down with the dimension of `F`.
    pub fn for_dim(m: usize) -> GridPlan {
        let (symbol_samples, oversample) = match m {
            0 | 1 => (256, 8.0),
            2 => (96, 4.0),
            _ => (40, 3.0),
        };
        GridPlan {
            symbol_samples,
            oversample,
            ..GridPlan::default()
        }
    }
}

/// Smallest even integer `>= n` with no prime factor above 7.
pub fn smooth_even(n: usize) -> usize {
    let mut k = n.max(2);
    loop {
        if k % 2 == 0 {
            let mut r = k;
            for p in [2, 3, 5, 7] {
                while r % p == 0 {
                    r /= p;
                }
            }
            if r == 1 {
                return k;
            }
        }
        k += 1;
    }
}

/// Grid resolving symbols supported in the bounding box of `cloud` ⊂ `Ω′`.
pub fn fit_grid(siegel: &SiegelData, cloud: &[Vec<f64>], plan: &GridPlan) -> Result<Grid> {
    let m = siegel.m;
    if cloud.is_empty() {
        return Err(Error::precondition("cannot fit a grid to an empty support"));
    }
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for p in cloud {
        ensure_dim(m, p.len())?;
        for a in 0..m {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let width = (0..m).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
    if !(width > 0.0) {
        return Err(Error::precondition("support has no extent"));
    }
    let spacing: Vec<f64> = (0..m)
        .map(|a| {
            let extent = if plan.per_axis { (hi[a] - lo[a]).max(width * 1e-6) } else { width };
            extent / plan.symbol_samples as f64
        })
        .collect();
    let f_half: Vec<f64> = spacing.iter().map(|h| std::f64::consts::PI / h).collect();
    let f_counts: Vec<usize> = (0..m)
        .map(|a| smooth_even((plan.oversample * ((hi[a] - lo[a]) / spacing[a] + 4.0)).ceil() as usize))
        .collect();
    let (mut e_counts, mut e_half) = (Vec::new(), Vec::new());
    if siegel.n > 0 {
        let mut mu_min = f64::INFINITY;
        let mut mu_max: f64 = 0.0;
        for p in cloud.iter().filter(|p| siegel.cone.contains(Side::Dual, p)) {
            let h = siegel.form_at(p);
            let eig = nalgebra::DMatrix::from_fn(2 * siegel.n, 2 * siegel.n, |i, j| {
                // real form of the hermitian matrix
                let (a, b) = (i / 2, j / 2);
                let z = h[(a, b)];
                match (i % 2, j % 2) {
                    (0, 0) | (1, 1) => z.re,
                    (0, 1) => -z.im,
                    _ => z.im,
                }
            })
            .symmetric_eigenvalues();
            mu_min = mu_min.min(eig.min());
            mu_max = mu_max.max(eig.max());
        }
        if !(mu_min > 0.0) {
            return Err(Error::domain("Φ-form degenerate on the support"));
        }
        let half = ((1.0 / plan.e_decay).ln() / mu_min).sqrt();
        let resolve = (2.0 * half * mu_max.sqrt() / 0.5).ceil() as usize;
        let count = smooth_even(plan.e_samples.max(resolve));
        e_counts = vec![count; 2 * siegel.n];
        e_half = vec![half; 2 * siegel.n];
    }
    Grid::new(e_counts, e_half, f_counts, f_half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nilgroup::integrate;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn laplace_pair_on_the_line() {
        let siegel = SiegelData::abelian(Cone::product(1).unwrap());
        let grid = Grid::new(vec![], vec![], vec![32768], vec![PI / 0.002]).unwrap();
        let h = grid.dual_spacing(0);
        let top = (36.0 / h).ceil() as i64;
        let sigma = ScalarSymbol::sample_box(&siegel.cone, vec![h], vec![0], vec![top], |l| c((-l[0]).exp())).unwrap();
        let u = synthesize(&siegel, &sigma, &grid).unwrap();
        let cst = inversion_constant(&siegel);
        let mut worst: f64 = 0.0;
        for j in 0..grid.len() {
            let x = grid.x_at(j)[0];
            if x.abs() > 10.0 {
                continue;
            }
            let exact = cst / Complex64::new(1.0, -x);
            worst = worst.max((u.values[j] - exact).norm() / exact.norm());
        }
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn constants_closed_form() {
        for m in 1..4 {
            let s = SiegelData::abelian(Cone::product(m).unwrap());
            assert_relative_eq!(inversion_constant(&s), (2.0 * PI).powi(-(m as i32)), max_relative = 1e-14);
        }
        let h = SiegelData::heisenberg(1).unwrap();
        assert_relative_eq!(inversion_constant(&h), 1.0 / (PI * PI), max_relative = 1e-14);
    }

    #[test]
    fn n_lambda_examples() {
        let h = SiegelData::heisenberg(1).unwrap();
        assert_relative_eq!(n_lambda(&h, &[1.7]), 2.0 * 1.7 * 1.7, max_relative = 1e-14);
        let a = SiegelData::abelian(Cone::product(2).unwrap());
        assert_relative_eq!(n_lambda(&a, &[3.0, 4.0]), 25.0);
        let h2 = SiegelData::heisenberg(2).unwrap();
        let th = 0.3_f64;
        let u = nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(th.cos(), 0.0),
                Complex64::new(0.0, th.sin()),
                Complex64::new(0.0, th.sin()),
                Complex64::new(th.cos(), 0.0),
            ],
        );
        assert_relative_eq!(n_lambda_in_basis(&h2, &[1.3], &u), n_lambda(&h2, &[1.3]), max_relative = 1e-12);
    }

    #[test]
    fn zero_symbol_gives_zero() {
        let siegel = SiegelData::heisenberg(1).unwrap();
        let grid = Grid::uniform(1, 1, 8, 3.0, 16, 10.0).unwrap();
        let sigma = ScalarSymbol::sample_region(&siegel.cone, &grid, &[0.5], &[1.5], |_| C0).unwrap();
        assert_eq!(synthesize(&siegel, &sigma, &grid).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn nyquist_is_enforced() {
        let siegel = SiegelData::abelian(Cone::product(1).unwrap());
        let grid = Grid::new(vec![], vec![], vec![8], vec![PI]).unwrap();
        let sigma = ScalarSymbol::sample_region(&siegel.cone, &grid, &[0.5], &[20.0], |_| c(1.0)).unwrap();
        assert!(matches!(synthesize(&siegel, &sigma, &grid), Err(Error::Precondition(_))));
    }

    fn h1_setup() -> (SiegelData, Grid, ScalarSymbol) {
        let siegel = SiegelData::heisenberg(1).unwrap();
        let grid = Grid::uniform(1, 1, 32, 5.0, 64, 40.0).unwrap();
        let sigma = ScalarSymbol::from_symbol(&siegel.cone, &grid, &reference_symbol(&siegel.cone, 0.5)).unwrap();
        (siegel, grid, sigma)
    }

    #[test]
    fn heisenberg_calibration() {
        let (siegel, grid, _) = h1_setup();
        let cal = calibrate_constants(&siegel, &grid).unwrap();
        assert!(cal.plancherel_residual < 1e-3, "{cal:?}");
        assert!(cal.inversion_residual < 1e-3, "{cal:?}");
        assert_relative_eq!(cal.c_inversion, 1.0 / (PI * PI), max_relative = 1e-3);
        let again = calibrate_constants(&siegel, &grid).unwrap();
        assert_eq!(cal, again);
    }

    #[test]
    fn heisenberg_plancherel_with_linear_weight() {
        let (siegel, grid, sigma) = h1_setup();
        let u = synthesize(&siegel, &sigma, &grid).unwrap();
        let lhs = u.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.cell_measure();
        let rhs = inversion_constant(&siegel) * sigma.weighted_l2_sq(|l| l[0]);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-3);
    }

    #[test]
    fn heisenberg_decay_in_zeta() {
        let (siegel, grid, sigma) = h1_setup();
        let u = synthesize(&siegel, &sigma, &grid).unwrap();
        let lam_min = (-0.5f64).exp();
        let total = sigma.values.iter().zip(&sigma.weights).map(|(v, w)| v.norm() * w).sum::<f64>()
            * sigma.cell()
            * inversion_constant(&siegel)
            * 1.7;
        for i in (0..grid.len()).step_by(37) {
            let g = grid.point(i);
            let r2 = g.zeta[0].norm_sqr();
            assert!(u.values[i].norm() <= total * (-lam_min * r2).exp() + 1e-14);
        }
    }

    #[test]
    fn grid_and_symbol_convolution_agree_on_heisenberg() {
        let (siegel, grid, sigma) = h1_setup();
        let tau = sigma.map(|l, v| v * Complex64::new(0.0, l[0]).exp());
        let u = synthesize(&siegel, &sigma, &grid).unwrap();
        let v = synthesize(&siegel, &tau, &grid).unwrap();
        let direct = convolve_grid(&siegel, &u, &v).unwrap();
        let via = synthesize(&siegel, &convolve_symbols(&sigma, &tau).unwrap(), &grid).unwrap();
        let num: f64 = direct.values.iter().zip(&via.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = via.values.iter().map(|b| b.norm_sqr()).sum();
        assert!((num / den).sqrt() < 1e-3, "{}", (num / den).sqrt());
    }

    #[test]
    fn gaussian_convolution_on_the_plane() {
        let siegel = SiegelData::abelian(Cone::product(2).unwrap());
        let grid = Grid::uniform(0, 2, 0, 1.0, 128, 12.0).unwrap();
        let gauss = |s2: f64| {
            move |g: &crate::nilgroup::GroupPoint| {
                c((-(g.x[0] * g.x[0] + g.x[1] * g.x[1]) / (2.0 * s2)).exp() / (2.0 * PI * s2))
            }
        };
        let u = GridFunction::from_fn(&grid, gauss(1.0));
        let v = GridFunction::from_fn(&grid, gauss(0.5));
        let w = convolve_grid(&siegel, &u, &v).unwrap();
        let exact = GridFunction::from_fn(&grid, gauss(1.5));
        let err = w.values.iter().zip(&exact.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        assert_relative_eq!(integrate(&w).re, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn riemann_liouville_group_law() {
        let cone = Cone::lorentz(3).unwrap();
        let grid = Grid::uniform(0, 3, 0, 1.0, 16, 20.0).unwrap();
        let sigma = ScalarSymbol::from_symbol(&cone, &grid, &reference_symbol(&cone, 0.6)).unwrap();
        let s = PowerExponent(vec![0.7, -0.4]);
        let there = riemann_liouville(&cone, &sigma, &s, PowerReading::DualPower).unwrap();
        let back = riemann_liouville(&cone, &there, &s.neg(), PowerReading::DualPower).unwrap();
        for (a, b) in back.values.iter().zip(&sigma.values) {
            assert!((a - b).norm() <= 1e-14 * b.norm().max(1e-300) + 1e-300);
        }
        let same = riemann_liouville(&cone, &sigma, &PowerExponent::zeros(2), PowerReading::DualPower).unwrap();
        assert_eq!(same, sigma);
        let line = Cone::product(1).unwrap();
        let f = riemann_liouville_factor(&line, &PowerExponent(vec![1.0]), PowerReading::DualPower, &[2.5]);
        assert_relative_eq!(f.norm(), 0.4, max_relative = 1e-14);
    }

    #[test]
    fn read_back_inverts_synthesis() {
        let siegel = SiegelData::abelian(Cone::product(2).unwrap());
        let cone = siegel.cone.clone();
        let grid = fit_grid(
            &siegel,
            &[vec![0.5, 0.5], vec![2.0, 2.0]],
            &GridPlan::default(),
        )
        .unwrap();
        let sigma = ScalarSymbol::from_symbol(&cone, &grid, &reference_symbol(&cone, 0.6)).unwrap();
        let back = read_back(&siegel, &synthesize(&siegel, &sigma, &grid).unwrap(), &sigma).unwrap();
        for (a, b) in back.values.iter().zip(&sigma.values) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_even(97), 98);
        assert_eq!(smooth_even(127), 128);
        assert_eq!(smooth_even(1), 2);
    }
}
