//! Experiment configuration in TOML syntax.
//!
//! Every section is optional; omitted keys take the defaults below. The
//! callables (kernel, drift, source) come from a small closed family so that
//! a configuration file fully determines an experiment.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{LevyModel, RadialProfile, SphericalMeasure, TailMeasure};
use crate::lp::{Grid, GridField};
use crate::nonlocal::{DriftField, JumpKernel};
use crate::pde::{Direction, Source};
use crate::sde::{CompensatorMode, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Symbol,
    Lp,
    Pde,
    Simulate,
    VerifyApriori,
    VerifyKrylov,
    VerifyFeynmanKac,
    VerifyZvonkin,
    VerifyMaxprinciple,
    VerifyCoercivity,
    VerifyCommutator,
    RegimeStudy,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 12] = [
        ExperimentKind::Symbol,
        ExperimentKind::Lp,
        ExperimentKind::Pde,
        ExperimentKind::Simulate,
        ExperimentKind::VerifyApriori,
        ExperimentKind::VerifyKrylov,
        ExperimentKind::VerifyFeynmanKac,
        ExperimentKind::VerifyZvonkin,
        ExperimentKind::VerifyMaxprinciple,
        ExperimentKind::VerifyCoercivity,
        ExperimentKind::VerifyCommutator,
        ExperimentKind::RegimeStudy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Symbol => "symbol",
            ExperimentKind::Lp => "lp",
            ExperimentKind::Pde => "pde",
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::VerifyApriori => "verify-apriori",
            ExperimentKind::VerifyKrylov => "verify-krylov",
            ExperimentKind::VerifyFeynmanKac => "verify-feynman-kac",
            ExperimentKind::VerifyZvonkin => "verify-zvonkin",
            ExperimentKind::VerifyMaxprinciple => "verify-maxprinciple",
            ExperimentKind::VerifyCoercivity => "verify-coercivity",
            ExperimentKind::VerifyCommutator => "verify-commutator",
            ExperimentKind::RegimeStudy => "regime-study",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            ExperimentKind::Simulate
                | ExperimentKind::VerifyApriori
                | ExperimentKind::VerifyKrylov
                | ExperimentKind::VerifyFeynmanKac
                | ExperimentKind::VerifyZvonkin
                | ExperimentKind::VerifyMaxprinciple
                | ExperimentKind::VerifyCoercivity
                | ExperimentKind::VerifyCommutator
                | ExperimentKind::RegimeStudy
        )
    }

    pub fn is_verification(self) -> bool {
        self.name().starts_with("verify-") || self == ExperimentKind::RegimeStudy
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Directions {
    /// `±e_i`, one pair per axis.
    Axes,
    /// `count` equally spaced unit vectors in the plane.
    Circle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailKind {
    None,
    Power,
    /// Pure stable measure on all radii.
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub alpha: f64,
    pub dim: usize,
    pub directions: Directions,
    /// Number of directions for `circle`.
    pub count: usize,
    /// Mass of each direction (`axes`) or total mass (`circle`).
    pub weight: f64,
    pub tail: TailKind,
    pub r_max: f64,
    /// `κ(θ, r) = 1 + a cos(π r)` on the unit ball; `|a| < 1`.
    pub profile_amplitude: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            dim: 1,
            directions: Directions::Axes,
            count: 8,
            weight: 1.0,
            tail: TailKind::Power,
            r_max: crate::levy::DEFAULT_TAIL_RADIUS,
            profile_amplitude: 0.0,
        }
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<LevyModel> {
        let sph = match self.directions {
            Directions::Axes => SphericalMeasure::axes(self.dim, self.weight)?,
            Directions::Circle => {
                if self.dim != 2 {
                    return Err(Error::Config("circle directions need dim = 2".into()));
                }
                SphericalMeasure::uniform_circle(self.count, self.weight)?
            }
        };
        let a = self.profile_amplitude;
        if !(a.abs() < 1.0) {
            return Err(Error::Config(format!("profile amplitude {a} must satisfy |a| < 1")));
        }
        let profile = if a == 0.0 {
            RadialProfile::Constant(1.0)
        } else {
            RadialProfile::function(move |_, r| 1.0 + a * (PI * r).cos(), 1.0 - a.abs(), 1.0 + a.abs())
        };
        match self.tail {
            TailKind::Infinite => {
                if a != 0.0 {
                    return Err(Error::Config("an infinite tail needs a constant profile".into()));
                }
                LevyModel::pure_stable(self.alpha, sph)
            }
            TailKind::None => LevyModel::new(self.alpha, sph, profile, TailMeasure::Empty),
            TailKind::Power => LevyModel::new(self.alpha, sph, profile, TailMeasure::PowerLaw { r_max: self.r_max }),
        }
    }
}

/// `σ(t, x, z) = base + amplitude · cos(frequency · x_1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSpec {
    pub base: f64,
    pub amplitude: f64,
    pub frequency: f64,
    /// Attach the constant modulus `ϱ` that makes the difference bound hold.
    pub modulus: bool,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            base: 1.0,
            amplitude: 0.0,
            frequency: 1.0,
            modulus: false,
        }
    }
}

impl KernelSpec {
    pub fn build(&self, model: &LevyModel, grid: Grid) -> Result<JumpKernel> {
        let (b, a, w) = (self.base, self.amplitude, self.frequency);
        let kernel = if a == 0.0 {
            JumpKernel::constant(b)?
        } else {
            let lip = (a * w).abs();
            JumpKernel::space(move |_, x| b + a * (w * x[0]).cos(), b - a.abs(), b + a.abs(), lip.max(1.0), 1.0)?
        };
        if self.modulus {
            // |σ(x) − σ(y)| ≤ |a w| |x − y|, so ϱ = |a w| m / 2 with m = ∫ (|z| ∧ 1) ν(dz).
            let rho = if a == 0.0 {
                0.0
            } else {
                let m = model.small_moment_bound(1.0, 1) + model.tail_mass();
                if !m.is_finite() {
                    return Err(Error::Config(
                        "an x-dependent kernel has no finite modulus when alpha >= 1".into(),
                    ));
                }
                0.5 * (a * w).abs() * m
            };
            return Ok(kernel.with_modulus(GridField::constant(grid, rho)));
        }
        Ok(kernel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftKind {
    Zero,
    /// `b_i = offset`.
    Constant,
    /// `b_i = offset + amplitude · sin(frequency · x_i)`.
    Sine,
    /// `b = slope · x`.
    Linear,
    /// `b_i = amplitude · sign(sin x_i) |sin x_i|^β`, Hölder of order `β`.
    Holder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftSpec {
    pub kind: DriftKind,
    pub amplitude: f64,
    pub frequency: f64,
    pub offset: f64,
    pub slope: f64,
    /// Declared regularity; defaults to 1 for smooth kinds and to `holder`
    /// for the Hölder kind.
    pub beta: Option<f64>,
    /// Hölder exponent of the `holder` kind.
    pub holder: f64,
    pub p: f64,
    /// Declared norm; defaults to the amplitude-based sup bound.
    pub norm: Option<f64>,
}

impl Default for DriftSpec {
    fn default() -> Self {
        Self {
            kind: DriftKind::Zero,
            amplitude: 0.0,
            frequency: 1.0,
            offset: 0.0,
            slope: 0.0,
            beta: None,
            holder: 0.5,
            p: f64::INFINITY,
            norm: None,
        }
    }
}

impl DriftSpec {
    pub fn build(&self, dim: usize) -> Result<DriftField> {
        let (a, w, c, s) = (self.amplitude, self.frequency, self.offset, self.slope);
        let sup = a.abs() + c.abs();
        let drift = match self.kind {
            DriftKind::Zero => return Ok(DriftField::zero(dim)),
            DriftKind::Constant => DriftField::constant(vec![c; dim]),
            DriftKind::Sine => DriftField::from_fn(
                dim,
                move |_, x| x.iter().map(|v| c + a * (w * v).sin()).collect(),
                self.beta.unwrap_or(1.0),
                self.p,
                self.norm.unwrap_or(sup),
            )
            .with_lipschitz((a * w).abs()),
            DriftKind::Linear => DriftField::from_fn(
                dim,
                move |_, x| x.iter().map(|v| s * v).collect(),
                self.beta.unwrap_or(1.0),
                self.p,
                self.norm.unwrap_or(s.abs()),
            )
            .with_lipschitz(s.abs()),
            DriftKind::Holder => {
                let h = self.holder;
                if !(h > 0.0 && h <= 1.0) {
                    return Err(Error::Config(format!("holder exponent {h} not in (0, 1]")));
                }
                DriftField::from_fn(
                    dim,
                    move |_, x| x.iter().map(|v| a * v.sin().signum() * v.sin().abs().powf(h)).collect(),
                    self.beta.unwrap_or(h),
                    self.p,
                    // sup norm plus Hölder seminorm
                    self.norm.unwrap_or(a.abs() * (1.0 + 2f64.powf(1.0 - h))),
                )
            }
        };
        Ok(drift)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Zero,
    Constant,
    /// `offset + amplitude · cos(frequency · x_1)`.
    Cosine,
    /// Gaussian Fourier coefficients on `lo ≤ |ξ| ≤ hi`, drawn from the seed.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub value: f64,
    pub amplitude: f64,
    pub frequency: f64,
    pub offset: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self {
            kind: SourceKind::Zero,
            value: 1.0,
            amplitude: 1.0,
            frequency: 1.0,
            offset: 0.0,
            lo: 1.0,
            hi: 4.0,
        }
    }
}

impl SourceSpec {
    pub fn build(&self, grid: Grid, seed: u64) -> Source {
        let (a, w, c) = (self.amplitude, self.frequency, self.offset);
        match self.kind {
            SourceKind::Zero => Source::Zero,
            SourceKind::Constant => Source::Constant(self.value),
            SourceKind::Cosine => Source::function(move |_, x| c + a * (w * x[0]).cos()),
            SourceKind::Random => {
                let mut rng = crate::rng::domain_stream(seed, "source", 0);
                Source::Static(crate::lp::random_band_limited(grid, self.lo, self.hi, &mut rng))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub length: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: 32, length: 2.0 * PI }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionSpec {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeSpec {
    pub direction: DirectionSpec,
    pub horizon: f64,
    pub dt: f64,
    pub lambda: f64,
    pub quasilinear_kappa: f64,
    pub reference_kappa: Option<f64>,
    pub source: SourceSpec,
}

impl Default for PdeSpec {
    fn default() -> Self {
        Self {
            direction: DirectionSpec::Forward,
            horizon: 1.0,
            dt: 0.01,
            lambda: 0.0,
            quasilinear_kappa: 0.0,
            reference_kappa: None,
            source: SourceSpec::default(),
        }
    }
}

impl PdeSpec {
    pub fn direction(&self) -> Direction {
        match self.direction {
            DirectionSpec::Forward => Direction::Forward,
            DirectionSpec::Backward => Direction::Backward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompensatorSpec {
    SymmetricZero,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSpec {
    pub horizon: f64,
    pub dt: f64,
    pub eps: f64,
    /// Defaults to the kernel's upper bound.
    pub thinning_bound: Option<f64>,
    pub paths: usize,
    /// Defaults to the origin.
    pub x0: Option<Vec<f64>>,
    pub compensator: CompensatorSpec,
    /// Number of full path records written by `simulate`.
    pub record_paths: usize,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            dt: 0.01,
            eps: 0.01,
            thinning_bound: None,
            paths: 1000,
            x0: None,
            compensator: CompensatorSpec::SymmetricZero,
            record_paths: 5,
        }
    }
}

impl SimSpec {
    pub fn build(&self, dim: usize, kernel: &JumpKernel, seed: u64) -> SimConfig {
        SimConfig {
            x0: self.x0.clone().unwrap_or_else(|| vec![0.0; dim]),
            horizon: self.horizon,
            dt: self.dt,
            eps: self.eps,
            thinning_bound: self.thinning_bound.unwrap_or(kernel.kappa1),
            n_paths: self.paths,
            seed,
            compensator: match self.compensator {
                CompensatorSpec::SymmetricZero => CompensatorMode::SymmetricZero,
                CompensatorSpec::Quadrature => CompensatorMode::Quadrature,
            },
        }
    }
}

/// Knobs of the individual studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySpec {
    pub lambdas: Vec<f64>,
    pub js: Vec<i32>,
    pub trials: usize,
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    pub eta: Option<f64>,
    pub thetabar: f64,
    pub sources: usize,
    pub x_points: Option<Vec<Vec<f64>>>,
    pub dts: Vec<f64>,
    /// Mollification scales of the regime study, coarse to fine.
    pub mollifications: Vec<f64>,
    pub replicas: usize,
    pub pairs: usize,
    pub pde_grid: Option<usize>,
    pub pde_dt: Option<f64>,
    pub schedule: Option<Vec<f64>>,
}

impl Default for StudySpec {
    fn default() -> Self {
        Self {
            lambdas: vec![1.0, 10.0, 100.0],
            js: vec![2, 3, 4, 5],
            trials: 100,
            p: 2.0,
            q: 2.0,
            gamma: 0.0,
            eta: None,
            thetabar: 1.0,
            sources: 10,
            x_points: None,
            dts: vec![0.02, 0.01, 0.005],
            mollifications: vec![0.4, 0.2, 0.1, 0.05],
            replicas: 20,
            pairs: 10_000,
            pde_grid: None,
            pde_dt: None,
            schedule: None,
        }
    }
}

/// Statistical pass thresholds shared by all experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Multiple of the Monte Carlo standard error.
    pub sigma: f64,
    /// Significance level of distribution tests.
    pub ks: f64,
    /// Relative change allowed under refinement.
    pub refinement: f64,
    /// Allowed spread (max/min) of fitted constants across scales.
    pub spread: f64,
    /// Allowed relative deviation of a halving ratio from 2.
    pub halving: f64,
    /// Allowed excess of a fitted decay slope over its prediction.
    pub slope: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            sigma: 3.0,
            ks: 0.01,
            refinement: 0.2,
            spread: 3.0,
            halving: 0.3,
            slope: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub drift: DriftSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub pde: PdeSpec,
    #[serde(default)]
    pub sim: SimSpec,
    #[serde(default)]
    pub study: StudySpec,
    #[serde(default)]
    pub thresholds: Thresholds,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            seed: None,
            output: None,
            model: ModelSpec::default(),
            kernel: KernelSpec::default(),
            drift: DriftSpec::default(),
            grid: GridSpec::default(),
            pde: PdeSpec::default(),
            sim: SimSpec::default(),
            study: StudySpec::default(),
            thresholds: Thresholds::default(),
        }
    }

    /// Parse and validate.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg = Self::from_toml(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse without validation, for callers that apply overrides first.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file<P: AsRef<std::path::Path>>(path: P) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Canonical TOML text; its hash identifies the run.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.is_stochastic() && self.seed.is_none() {
            return Err(Error::Config(format!("experiment '{}' needs a seed", self.kind)));
        }
        if self.grid.n < 4 || !self.grid.n.is_power_of_two() {
            return Err(Error::Config(format!("grid size {} must be a power of two >= 4", self.grid.n)));
        }
        if !(self.model.dim >= 1 && self.model.dim <= 3) {
            return Err(Error::Config(format!("dimension {} not in 1..=3", self.model.dim)));
        }
        if let Some(x0) = &self.sim.x0 {
            if x0.len() != self.model.dim {
                return Err(Error::Config("sim.x0 must have one entry per dimension".into()));
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.model.dim, self.grid.n, self.grid.length)
    }
}
