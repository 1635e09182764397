//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cone::{Cone, ConeKind, PowerExponent, Region};
use crate::error::{Error, Result};
use crate::lattice::{BumpMode, LatticeOptions, ProfileKind, TransportKind};
use crate::nilgroup::SiegelData;
use crate::spectral::GridPlan;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Decoupling,
    Blowup,
    Multiplier,
    Comparison,
    Calibrate,
    Lattice,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Decoupling => "decoupling",
            ExperimentKind::Blowup => "blowup",
            ExperimentKind::Multiplier => "multiplier",
            ExperimentKind::Comparison => "comparison",
            ExperimentKind::Calibrate => "calibrate",
            ExperimentKind::Lattice => "lattice",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "decoupling" => ExperimentKind::Decoupling,
            "blowup" => ExperimentKind::Blowup,
            "multiplier" => ExperimentKind::Multiplier,
            "comparison" => ExperimentKind::Comparison,
            "calibrate" => ExperimentKind::Calibrate,
            "lattice" => ExperimentKind::Lattice,
            other => return Err(Error::config(format!("unknown experiment {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeConfig {
    pub kind: ConeKind,
    /// Rank for product cones, ambient dimension for Lorentz cones.
    pub dim: usize,
}

impl ConeConfig {
    pub fn build(&self) -> Result<Cone> {
        Cone::new(self.kind, self.dim).map_err(|e| Error::config(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    #[default]
    Abelian,
    /// `Φ(ζ,ζ′) = Σ ζ_j ζ̄′_j` over the rank-one cone.
    Heisenberg,
    /// One Heisenberg factor per coordinate of a product cone.
    ProductHeisenberg,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    #[serde(default)]
    pub kind: GroupKind,
    /// Complex dimension of `E` (Heisenberg only).
    #[serde(default = "one")]
    pub n: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub delta: f64,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default = "default_region")]
    pub region: Region,
    #[serde(default)]
    pub shell_c: Option<f64>,
    #[serde(default)]
    pub bumps: BumpMode,
    #[serde(default)]
    pub profile: ProfileKind,
    #[serde(default)]
    pub transport: TransportKind,
}

fn default_region() -> Region {
    Region {
        scale: (0.5, 2.0),
        spread: 0.0,
    }
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig {
            delta: 0.3,
            r: None,
            region: default_region(),
            shell_c: None,
            bumps: BumpMode::default(),
            profile: ProfileKind::default(),
            transport: TransportKind::default(),
        }
    }
}

impl LatticeConfig {
    pub fn options(&self, seed: u64) -> LatticeOptions {
        LatticeOptions {
            r: self.r,
            transport: self.transport,
            seed,
            ..LatticeOptions::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesovConfig {
    /// Defaults to zeros of the cone's rank.
    #[serde(default)]
    pub s: Option<Vec<f64>>,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "two")]
    pub q: f64,
}

fn two() -> f64 {
    2.0
}

impl Default for BesovConfig {
    fn default() -> Self {
        BesovConfig { s: None, p: 2.0, q: 2.0 }
    }
}

impl BesovConfig {
    pub fn smoothness(&self, rank: usize) -> Result<PowerExponent> {
        match &self.s {
            None => Ok(PowerExponent::zeros(rank)),
            Some(s) if s.len() == rank => Ok(PowerExponent(s.clone())),
            Some(s) => Err(Error::config(format!("besov.s has {} entries, the cone has rank {rank}", s.len()))),
        }
    }
}

/// Overrides of [`GridPlan::for_dim`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub symbol_samples: Option<usize>,
    pub oversample: Option<f64>,
    pub e_samples: Option<usize>,
    pub e_decay: Option<f64>,
    pub per_axis: Option<bool>,
}

impl GridConfig {
    pub fn plan(&self, m: usize) -> GridPlan {
        let base = GridPlan::for_dim(m);
        GridPlan {
            symbol_samples: self.symbol_samples.unwrap_or(base.symbol_samples),
            oversample: self.oversample.unwrap_or(base.oversample),
            e_samples: self.e_samples.unwrap_or(base.e_samples),
            e_decay: self.e_decay.unwrap_or(base.e_decay),
            per_axis: self.per_axis.unwrap_or(base.per_axis),
        }
    }
}

/// Random band-limited symbols `E(λ) Σ_k a_k e^{−i⟨λ,x_k⟩}` with `E` a
/// window on the chart ball of `radius` around `center · e′`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolConfig {
    #[serde(default = "half")]
    pub radius: f64,
    #[serde(default = "one_f")]
    pub center: f64,
    #[serde(default = "four")]
    pub terms: usize,
    #[serde(default = "five")]
    pub spread: f64,
}

fn half() -> f64 {
    0.5
}

fn one_f() -> f64 {
    1.0
}

fn four() -> usize {
    4
}

fn five() -> f64 {
    5.0
}

impl Default for SymbolConfig {
    fn default() -> Self {
        SymbolConfig {
            radius: 0.5,
            center: 1.0,
            terms: 4,
            spread: 5.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecouplingConfig {
    /// Property (D) weight `e^{c⟨λ_k, e⟩}`; absent for (D′).
    #[serde(default)]
    pub weighted_c: Option<f64>,
    /// Spacing of the translations in units of `1/min_k |λ_k|`.
    #[serde(default = "forty")]
    pub separation: f64,
    /// Restrict to these lattice indices instead of the shell.
    #[serde(default)]
    pub active: Option<Vec<usize>>,
    /// Extra `δ` values; the best constant must stay within 2× across them.
    #[serde(default)]
    pub deltas: Vec<f64>,
    /// Every trial ratio must land in this band.
    #[serde(default)]
    pub ratio_band: Option<(f64, f64)>,
}

fn forty() -> f64 {
    40.0
}

impl Default for DecouplingConfig {
    fn default() -> Self {
        DecouplingConfig {
            weighted_c: None,
            separation: 40.0,
            active: None,
            deltas: Vec::new(),
            ratio_band: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupConfig {
    /// 1-based cone coordinate that degenerates.
    #[serde(default = "one")]
    pub coordinate: usize,
    #[serde(default = "hundred")]
    pub k_max: usize,
    #[serde(default = "one")]
    pub k_step: usize,
    /// Chart radius of the base symbol.
    #[serde(default = "one_f")]
    pub symbol_radius: f64,
    #[serde(default = "slope_tol")]
    pub slope_tolerance: f64,
    /// Relative tolerance for `‖φ_k‖_p = Δ^{−s}(t_k) ‖φ‖_p`.
    #[serde(default = "norm_tol")]
    pub norm_tolerance: f64,
    /// Allowed `max/min − 1` when the selected `s_j` vanishes.
    #[serde(default = "slope_tol")]
    pub flat_tolerance: f64,
}

fn hundred() -> usize {
    100
}

fn slope_tol() -> f64 {
    0.05
}

fn norm_tol() -> f64 {
    1e-3
}

impl Default for BlowupConfig {
    fn default() -> Self {
        BlowupConfig {
            coordinate: 1,
            k_max: 100,
            k_step: 1,
            symbol_radius: 1.0,
            slope_tolerance: 0.05,
            norm_tolerance: 1e-3,
            flat_tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MultiplierKind {
    Identity,
    /// `Δ_{Ω′}^{iτ}`.
    DeltaPower { tau: Vec<f64> },
    /// `1 + amplitude · cos(frequency · θ)`, `θ` the polar angle of the first
    /// two coordinates; homogeneous of degree 0.
    Angular { amplitude: f64, frequency: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierConfig {
    pub multiplier: MultiplierKind,
    #[serde(default = "p0_default")]
    pub p0: f64,
    #[serde(default = "twenty")]
    pub t_samples: usize,
    #[serde(default = "one_f")]
    pub t_spread: f64,
    /// Chart radius of the cutoff `φ` in the seminorm.
    #[serde(default = "half")]
    pub cutoff_radius: f64,
    /// Samples per axis across the cutoff support.
    #[serde(default = "sixty_four")]
    pub cutoff_samples: usize,
    /// Ratios must stay below `bound_factor × seminorm`.
    #[serde(default = "five")]
    pub bound_factor: f64,
    /// Tolerance for `|ratio − 1|` when the ratio is known to be 1.
    #[serde(default = "exact_tol")]
    pub exact_tolerance: f64,
}

fn p0_default() -> f64 {
    1.5
}

fn twenty() -> usize {
    20
}

fn sixty_four() -> usize {
    64
}

fn exact_tol() -> f64 {
    1e-10
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonMode {
    /// Random shell-supported symbols; two-sided ratio band.
    #[default]
    Band,
    /// One bump, one dyadic shell: ratio `Δ^s(λ_k)/2^{Σs·j}`.
    SingleTerm,
    /// Ratio along the degenerating family `t_k`.
    Blowup,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonConfig {
    #[serde(default)]
    pub mode: ComparisonMode,
    /// Band mode: required `max/min` bound.
    #[serde(default = "ten")]
    pub band_limit: f64,
    /// Single-term mode: relative tolerance on the exact ratio.
    #[serde(default = "norm_tol")]
    pub tolerance: f64,
    /// Blow-up mode: indices `k` of `t_k`.
    #[serde(default = "k_values_default")]
    pub k_values: Vec<usize>,
    #[serde(default = "one")]
    pub coordinate: usize,
    #[serde(default = "one_f")]
    pub symbol_radius: f64,
    /// Blow-up mode: required `max/min` of the ratio trajectory.
    #[serde(default = "three")]
    pub min_degradation: f64,
}

fn ten() -> f64 {
    10.0
}

fn three() -> f64 {
    3.0
}

fn k_values_default() -> Vec<usize> {
    vec![1, 2, 5, 10, 20, 50, 100]
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        ComparisonConfig {
            mode: ComparisonMode::Band,
            band_limit: 10.0,
            tolerance: 1e-3,
            k_values: k_values_default(),
            coordinate: 1,
            symbol_radius: 1.0,
            min_degradation: 3.0,
        }
    }
}

/// Explicit calibration grid: `e_count`/`e_half` per real `E` axis,
/// `f_count`/`f_half` per `F` axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitGrid {
    pub e_count: usize,
    pub e_half: f64,
    pub f_count: usize,
    pub f_half: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    #[serde(default)]
    pub grid: Option<ExplicitGrid>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeCheckConfig {
    /// A second region; the bump overlap count must agree within `overlap_slack`.
    #[serde(default)]
    pub compare_region: Option<Region>,
    #[serde(default = "one")]
    pub overlap_slack: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "trials_default")]
    pub trials: usize,
    pub cone: ConeConfig,
    #[serde(default)]
    pub group: GroupConfig,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub besov: BesovConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub symbol: SymbolConfig,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub decoupling: Option<DecouplingConfig>,
    #[serde(default)]
    pub blowup: Option<BlowupConfig>,
    #[serde(default)]
    pub multiplier: Option<MultiplierConfig>,
    #[serde(default)]
    pub comparison: Option<ComparisonConfig>,
    #[serde(default)]
    pub calibrate: Option<CalibrateConfig>,
    #[serde(default)]
    pub lattice_check: Option<LatticeCheckConfig>,
}

fn trials_default() -> usize {
    50
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let cone = self.cone.build()?;
        self.lattice.region.validate().map_err(|e| Error::config(e.to_string()))?;
        if !(self.lattice.delta > 0.0 && self.lattice.delta.is_finite()) {
            return Err(Error::config(format!("lattice.delta = {} must be positive", self.lattice.delta)));
        }
        if let Some(c) = self.lattice.shell_c {
            if !(c > 1.0) {
                return Err(Error::config(format!("lattice.shell_c = {c} must exceed 1")));
            }
        }
        self.besov.smoothness(cone.rank)?;
        for (name, v) in [("besov.p", self.besov.p), ("besov.q", self.besov.q)] {
            if !(v > 0.0) {
                return Err(Error::config(format!("{name} = {v} must lie in (0, ∞]")));
            }
        }
        if self.symbol.radius <= 0.0 || self.symbol.center <= 0.0 || self.symbol.spread < 0.0 {
            return Err(Error::config("symbol radius and centre must be positive, spread nonnegative"));
        }
        if self.group.kind == GroupKind::Heisenberg && !(cone.kind == ConeKind::Product && cone.rank == 1) {
            return Err(Error::config("the Heisenberg group lives over the rank-one product cone"));
        }
        if self.group.kind == GroupKind::ProductHeisenberg && cone.kind != ConeKind::Product {
            return Err(Error::config("product Heisenberg groups need a product cone"));
        }
        Ok(())
    }

    /// Checks that the file's `experiment` key, if any, agrees with `kind`.
    pub fn check_kind(&self, kind: ExperimentKind) -> Result<()> {
        match self.experiment {
            Some(k) if k != kind => Err(Error::config(format!(
                "config is for {:?}, requested {:?}",
                k.name(),
                kind.name()
            ))),
            _ => Ok(()),
        }
    }

    pub fn siegel(&self) -> Result<SiegelData> {
        let cone = self.cone.build()?;
        let s = match self.group.kind {
            GroupKind::Abelian => Ok(SiegelData::abelian(cone)),
            GroupKind::Heisenberg => SiegelData::heisenberg(self.group.n),
            GroupKind::ProductHeisenberg => SiegelData::product_heisenberg(cone.rank),
        };
        s.map_err(|e| Error::config(e.to_string()))
    }

    pub fn plan(&self) -> GridPlan {
        self.grid.plan(self.cone.dim)
    }
}
