//! Pseudo-spectral solver for `∂_t u = ℒ^σ_ν u − λu + b·∇u + f`.
//!
//! One step is exponential Euler: the constant-coefficient part
//! `κ_ref ψ(D) − λ` is integrated exactly as a Fourier multiplier and the
//! remainder `(ℒ^σ_ν − κ_ref ψ(D)) u + b·∇u + f` is frozen at the left end
//! point. Backward problems `∂_t u + ℒ_t u − λu + f = 0, u(T) = 0` are solved
//! by reversing time.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::lp::{self, besov_norm, DyadicPartition, Grid, GridField};
use crate::nonlocal::{DriftField, JumpKernel, NonlocalOperator, OperatorOptions};

type SourceFn = dyn Fn(f64, &[f64]) -> f64 + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `u(0) = 0`, integrate up to `T`.
    Forward,
    /// `u(T) = 0`, integrate down to `0`.
    Backward,
}

/// Source term `f(t, ·)`.
#[derive(Clone)]
pub enum Source {
    Zero,
    Constant(f64),
    Static(GridField),
    /// Piecewise-linear interpolation between snapshots at increasing times.
    Indexed { times: Vec<f64>, fields: Vec<GridField> },
    Function(Arc<SourceFn>),
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Zero => write!(f, "Zero"),
            Source::Constant(c) => write!(f, "Constant({c})"),
            Source::Static(g) => write!(f, "Static({:?})", g.grid()),
            Source::Indexed { times, .. } => write!(f, "Indexed({} snapshots)", times.len()),
            Source::Function(_) => write!(f, "Function"),
        }
    }
}

impl Source {
    pub fn function<F>(f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        Source::Function(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Source::Zero)
    }

    /// `f(t, ·)` on `grid`. Grid fields on a coarser grid of the same domain
    /// are zero-padded.
    pub fn at(&self, t: f64, grid: Grid) -> Result<GridField> {
        match self {
            Source::Zero => Ok(GridField::zeros(grid)),
            Source::Constant(c) => Ok(GridField::constant(grid, *c)),
            Source::Static(f) => regrid(f, grid),
            Source::Indexed { times, fields } => {
                if times.is_empty() || times.len() != fields.len() {
                    return Err(Error::InvalidArgument("indexed source needs matching times and fields".into()));
                }
                let k = times.partition_point(|s| *s <= t);
                if k == 0 {
                    return regrid(&fields[0], grid);
                }
                if k == times.len() {
                    return regrid(&fields[k - 1], grid);
                }
                let w = (t - times[k - 1]) / (times[k] - times[k - 1]);
                let a = regrid(&fields[k - 1], grid)?;
                let b = regrid(&fields[k], grid)?;
                a.zip_with(&b, |x, y| (1.0 - w) * x + w * y)
            }
            Source::Function(f) => Ok(GridField::from_fn(grid, |x| f(t, x))),
        }
    }

    /// `f` evaluated at a point (spectral interpolation for grid sources).
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            Source::Zero => 0.0,
            Source::Constant(c) => *c,
            Source::Static(f) => f.eval_spectral(x),
            Source::Indexed { times, fields } => {
                let k = times.partition_point(|s| *s <= t);
                if k == 0 {
                    return fields[0].eval_spectral(x);
                }
                if k == times.len() {
                    return fields[k - 1].eval_spectral(x);
                }
                let w = (t - times[k - 1]) / (times[k] - times[k - 1]);
                (1.0 - w) * fields[k - 1].eval_spectral(x) + w * fields[k].eval_spectral(x)
            }
            Source::Function(f) => f(t, x),
        }
    }
}

fn regrid(f: &GridField, grid: Grid) -> Result<GridField> {
    let g = f.grid();
    if g == grid {
        return Ok(f.clone());
    }
    if g.dim == grid.dim && g.length == grid.length && grid.n > g.n {
        return f.upsample(grid.n / g.n);
    }
    Err(Error::GridMismatch(format!("source grid {g:?} cannot be mapped onto {grid:?}")))
}

/// Problem data.
#[derive(Debug, Clone)]
pub struct PdeProblem {
    pub direction: Direction,
    pub lambda: f64,
    pub model: LevyModel,
    pub kernel: JumpKernel,
    pub drift: DriftField,
    pub source: Source,
    /// Coefficient of the `κ|∇u|` term; zero for the linear equation.
    pub quasilinear_kappa: f64,
    pub horizon: f64,
    pub dt: f64,
    pub grid: Grid,
    pub cfl: f64,
    /// Coefficient of the implicit reference operator; defaults to `κ₀`.
    pub reference_kappa: Option<f64>,
    pub operator: OperatorOptions,
    /// Regularity index `γ` and integrability `q` of the per-step Besov
    /// ratio `‖u‖_{B^{α+γ}_{q,∞}} / ‖f‖_{B^γ_{q,∞}}`; `None` skips it.
    pub diagnostics: Option<(f64, f64)>,
}

impl PdeProblem {
    pub fn new(
        direction: Direction,
        model: LevyModel,
        kernel: JumpKernel,
        drift: DriftField,
        source: Source,
        horizon: f64,
        dt: f64,
        grid: Grid,
    ) -> Self {
        Self {
            direction,
            lambda: 0.0,
            model,
            kernel,
            drift,
            source,
            quasilinear_kappa: 0.0,
            horizon,
            dt,
            grid,
            cfl: 0.5,
            reference_kappa: None,
            operator: OperatorOptions::default(),
            diagnostics: None,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_grid(mut self, grid: Grid) -> Self {
        self.grid = grid;
        self
    }

    fn steps(&self) -> usize {
        (self.horizon / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.dt > 0.0) {
            return Err(Error::Config(format!(
                "horizon {} and dt {} must be positive",
                self.horizon, self.dt
            )));
        }
        if !(self.lambda >= 0.0) || !(self.quasilinear_kappa >= 0.0) {
            return Err(Error::Config("lambda and the quasi-linear coefficient must be >= 0".into()));
        }
        if self.model.alpha() > 1.0 {
            return Err(Error::InvalidModel(format!(
                "the solver handles alpha in (0, 1], got {}",
                self.model.alpha()
            )));
        }
        let ts = [0.0, 0.5 * self.horizon, self.horizon];
        let bmax = self.drift.sup_on_grid(&ts, self.grid);
        let dt = self.horizon / self.steps() as f64;
        if bmax > 0.0 && dt > self.cfl * self.grid.spacing() / bmax {
            return Err(Error::Config(format!(
                "dt = {dt:.3e} violates the CFL bound {:.3e} (max |b| = {bmax:.3e})",
                self.cfl * self.grid.spacing() / bmax
            )));
        }
        Ok(())
    }
}

/// One record of the per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub t: f64,
    pub besov_ratio: f64,
    pub remainder_bound: f64,
    pub dt: f64,
}

/// Snapshots at increasing times `t_0 = 0 < … < t_n = T`.
#[derive(Debug, Clone)]
pub struct PdeSolution {
    pub direction: Direction,
    pub times: Vec<f64>,
    pub snapshots: Vec<GridField>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Largest number of step halvings used by the quasi-linear iteration.
    pub halvings: u32,
}

impl PdeSolution {
    pub fn grid(&self) -> Grid {
        self.snapshots[0].grid()
    }

    /// Snapshot nearest in time, linearly interpolated.
    pub fn at(&self, t: f64) -> GridField {
        let k = self.times.partition_point(|s| *s <= t);
        if k == 0 {
            return self.snapshots[0].clone();
        }
        if k >= self.times.len() {
            return self.snapshots[self.times.len() - 1].clone();
        }
        let w = (t - self.times[k - 1]) / (self.times[k] - self.times[k - 1]);
        if w <= 0.0 {
            return self.snapshots[k - 1].clone();
        }
        self.snapshots[k - 1]
            .zip_with(&self.snapshots[k], |a, b| (1.0 - w) * a + w * b)
            .expect("snapshots share a grid")
    }

    /// Largest `‖u(t)‖_∞` over the snapshots.
    pub fn sup_norm(&self) -> f64 {
        self.snapshots.iter().map(|s| s.max_abs()).fold(0.0, f64::max)
    }

    /// CSV with columns `t,besov_ratio,remainder_bound,dt`.
    pub fn diagnostics_csv(&self) -> String {
        let mut s = String::from("t,besov_ratio,remainder_bound,dt\n");
        for d in &self.diagnostics {
            s.push_str(&format!("{},{},{},{}\n", d.t, d.besov_ratio, d.remainder_bound, d.dt));
        }
        s
    }

    /// Write every snapshot as `u_<k>.csv` plus `times.csv`.
    pub fn write_snapshots<P: AsRef<Path>>(&self, dir: P) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut times = String::from("k,t\n");
        for (k, (t, f)) in self.times.iter().zip(&self.snapshots).enumerate() {
            f.write_csv(dir.join(format!("u_{k:05}.csv")))?;
            times.push_str(&format!("{k},{t}\n"));
        }
        std::fs::write(dir.join("times.csv"), times)?;
        Ok(())
    }
}

/// `(e^z − 1) / z`.
fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-5 {
        Complex64::new(1.0, 0.0) + z * 0.5 + z * z / 6.0
    } else {
        (z.exp() - 1.0) / z
    }
}

struct Stepper {
    op: NonlocalOperator,
    kref: f64,
    /// `κ_ref ψ(ξ) − λ` in spectral order.
    a: Vec<Complex64>,
    kernel_is_reference: bool,
}

impl Stepper {
    fn new(p: &PdeProblem) -> Result<Self> {
        let op = NonlocalOperator::with_options(
            p.model.clone(),
            p.kernel.clone(),
            p.drift.clone(),
            p.grid,
            p.operator.clone(),
        )?;
        let kref = p.reference_kappa.unwrap_or(p.kernel.kappa0);
        let psi = op.symbol_on_grid()?;
        let a = psi.iter().map(|v| v * kref - p.lambda).collect();
        let kernel_is_reference = p.kernel.is_constant() && p.kernel.kappa0 == kref;
        Ok(Self {
            op,
            kref,
            a,
            kernel_is_reference,
        })
    }

    /// Explicit part `(ℒ^σ_ν − κ_ref ψ(D)) u + b·∇u + f` at physical time `t`.
    fn explicit(&self, u: &GridField, t: f64, f: &GridField) -> Result<(GridField, f64)> {
        let grid = u.grid();
        let mut rem = 0.0;
        let mut out = if self.kernel_is_reference {
            GridField::zeros(grid)
        } else {
            let (lu, rep) = self.op.jump_part(u, t)?;
            rem = rep.remainder;
            lu.sub(&self.op.reference(u)?.scale(self.kref))?
        };
        if !self.op.drift().is_zero() {
            let b = self.op.drift().on_grid(t, grid);
            let g = u.gradient();
            let mut v = out.values().to_vec();
            for (ba, ga) in b.iter().zip(&g) {
                for ((o, x), y) in v.iter_mut().zip(ba.values()).zip(ga.values()) {
                    *o += x * y;
                }
            }
            out = GridField::new(grid, v)?;
        }
        Ok((out.add(f)?, rem))
    }

    /// `e^{A h} û + h φ1(A h) N̂`.
    fn advance(&self, u: &GridField, n: &GridField, h: f64) -> GridField {
        let su = u.spectrum();
        let sn = n.spectrum();
        let out: Vec<Complex64> = self
            .a
            .iter()
            .zip(su.iter().zip(sn))
            .map(|(a, (x, y))| {
                let z = a * h;
                z.exp() * x + phi1(z) * h * y
            })
            .collect();
        GridField::from_spectrum(u.grid(), out)
    }
}

/// Solve the linear equation; a non-zero `quasilinear_kappa` is delegated to
/// [`solve_quasilinear`].
pub fn solve(problem: &PdeProblem) -> Result<PdeSolution> {
    if problem.quasilinear_kappa > 0.0 {
        return solve_quasilinear(problem);
    }
    run(problem, 0.0)
}

/// `∂_t u + ℒ^σ_ν u + κ|∇u| − λu + f = 0` (backward) or its forward analogue.
/// The `κ|∇u|` term is evaluated at the new time level by Picard iteration;
/// when the iteration does not contract the step is halved, up to 8 times.
pub fn solve_quasilinear(problem: &PdeProblem) -> Result<PdeSolution> {
    run(problem, problem.quasilinear_kappa)
}

const PICARD_TOL: f64 = 1e-10;
const MAX_HALVINGS: u32 = 8;

fn run(problem: &PdeProblem, kappa: f64) -> Result<PdeSolution> {
    problem.validate()?;
    let grid = problem.grid;
    let stepper = Stepper::new(problem)?;
    let steps = problem.steps();
    let dt = problem.horizon / steps as f64;
    let big_t = problem.horizon;
    let phys = |tau: f64| match problem.direction {
        Direction::Forward => tau,
        Direction::Backward => big_t - tau,
    };
    let diag_ctx = match problem.diagnostics {
        Some((gamma, q)) => Some((gamma, q, DyadicPartition::for_grid(grid)?)),
        None => None,
    };

    let mut u = GridField::zeros(grid);
    let mut states = vec![u.clone()];
    let mut diags = Vec::with_capacity(steps + 1);
    let mut halvings = 0u32;
    let ratio = |u: &GridField, t: f64| -> Result<f64> {
        match &diag_ctx {
            None => Ok(f64::NAN),
            Some((gamma, q, part)) => {
                let f = problem.source.at(t, grid)?;
                let fn_ = besov_norm(&f, *gamma, *q, f64::INFINITY, part)?.value;
                if fn_ == 0.0 {
                    return Ok(0.0);
                }
                let un = besov_norm(u, problem.model.alpha() + gamma, *q, f64::INFINITY, part)?.value;
                Ok(un / fn_)
            }
        }
    };
    diags.push(StepDiagnostics {
        t: phys(0.0),
        besov_ratio: ratio(&u, phys(0.0))?,
        remainder_bound: 0.0,
        dt,
    });

    for k in 0..steps {
        let tau = k as f64 * dt;
        let (next, rem, used) = if kappa == 0.0 {
            let f = problem.source.at(phys(tau), grid)?;
            let (n, rem) = stepper.explicit(&u, phys(tau), &f)?;
            (stepper.advance(&u, &n, dt), rem, 0)
        } else {
            quasilinear_interval(&stepper, problem, &u, tau, dt, kappa, &phys)?
        };
        halvings = halvings.max(used);
        if next.values().iter().any(|v| !v.is_finite() || v.abs() > 1e150) {
            return Err(Error::Instability {
                step: k + 1,
                time: phys(tau + dt),
            });
        }
        u = next;
        diags.push(StepDiagnostics {
            t: phys(tau + dt),
            besov_ratio: ratio(&u, phys(tau + dt))?,
            remainder_bound: rem,
            dt,
        });
        states.push(u.clone());
    }

    let (times, snapshots, diagnostics) = match problem.direction {
        Direction::Forward => ((0..=steps).map(|k| k as f64 * dt).collect(), states, diags),
        Direction::Backward => {
            states.reverse();
            diags.reverse();
            ((0..=steps).map(|k| big_t - (steps - k) as f64 * dt).collect(), states, diags)
        }
    };
    Ok(PdeSolution {
        direction: problem.direction,
        times,
        snapshots,
        diagnostics,
        halvings,
    })
}

/// Advance over `[tau, tau + dt]` with `2^h` sub-steps, raising `h` until
/// every sub-step's Picard iteration contracts.
fn quasilinear_interval<F: Fn(f64) -> f64>(
    stepper: &Stepper,
    problem: &PdeProblem,
    u0: &GridField,
    tau: f64,
    dt: f64,
    kappa: f64,
    phys: &F,
) -> Result<(GridField, f64, u32)> {
    let grid = u0.grid();
    'outer: for h in 0..=MAX_HALVINGS {
        let sub = 1usize << h;
        let hstep = dt / sub as f64;
        let mut u = u0.clone();
        let mut rem: f64 = 0.0;
        for s in 0..sub {
            let t0 = tau + s as f64 * hstep;
            let f = problem.source.at(phys(t0), grid)?;
            let (n, r) = stepper.explicit(&u, phys(t0), &f)?;
            rem = rem.max(r);
            let mut iterate = stepper.advance(&u, &n, hstep);
            let mut last_diff = f64::INFINITY;
            let mut converged = false;
            for _ in 0..60 {
                let grad = lp::derivative_tensor_norm(&iterate, 1).scale(kappa);
                let next = stepper.advance(&u, &n.add(&grad)?, hstep);
                let diff = next.sub(&iterate)?.max_abs();
                let scale = next.max_abs().max(1.0);
                iterate = next;
                if diff <= PICARD_TOL * scale {
                    converged = true;
                    break;
                }
                if diff >= last_diff {
                    continue 'outer;
                }
                last_diff = diff;
            }
            if !converged {
                continue 'outer;
            }
            u = iterate;
        }
        return Ok((u, rem, h));
    }
    Err(Error::NonContraction(format!(
        "Picard iteration failed on [{tau}, {}] after {MAX_HALVINGS} halvings",
        tau + dt
    )))
}

/// Does the drift metadata satisfy `β > 1 − α` and `d / (α + β − 1) < p`?
pub fn drift_regime_warnings(model: &LevyModel, drift: &DriftField) -> Vec<String> {
    let a = model.alpha();
    let d = model.dim() as f64;
    let mut w = Vec::new();
    if !(drift.beta > 1.0 - a) {
        w.push(format!("drift regularity beta = {} does not exceed 1 - alpha = {}", drift.beta, 1.0 - a));
    } else if !(drift.p > d / (a + drift.beta - 1.0)) {
        w.push(format!(
            "drift integrability p = {} does not exceed d / (alpha + beta - 1) = {}",
            drift.p,
            d / (a + drift.beta - 1.0)
        ));
    }
    w
}

/// Settings of [`verify_apriori`].
#[derive(Debug, Clone)]
pub struct AprioriConfig {
    pub gamma: f64,
    pub q: f64,
    /// Index `η < α + γ` of the λ-decay norm.
    pub eta: f64,
    pub lambdas: Vec<f64>,
    /// Evaluate the norms on every `stride`-th snapshot.
    pub stride: usize,
}

#[derive(Debug, Clone)]
pub struct AprioriReport {
    /// Per source: ratio on the base grid and on the refined grid (`None`
    /// for a vanishing source).
    pub ratios: Vec<Option<(f64, f64)>>,
    pub max_coarse: f64,
    pub max_fine: f64,
    /// `|max_fine / max_coarse − 1|`.
    pub refinement_change: f64,
    /// `sup_t ‖u‖_{B^η_{q,∞}} / sup_t ‖f‖_{B^γ_{q,∞}}` along the λ list.
    pub lambda_ratios: Vec<f64>,
    pub lambda_decreasing: bool,
    pub warnings: Vec<String>,
}

fn sup_besov(sol: &PdeSolution, s: f64, q: f64, stride: usize) -> Result<f64> {
    let part = DyadicPartition::for_grid(sol.grid())?;
    let mut m: f64 = 0.0;
    for (k, u) in sol.snapshots.iter().enumerate() {
        if k % stride == 0 || k + 1 == sol.snapshots.len() {
            m = m.max(besov_norm(u, s, q, f64::INFINITY, &part)?.value);
        }
    }
    Ok(m)
}

fn sup_source_besov(problem: &PdeProblem, s: f64, q: f64, times: &[f64]) -> Result<f64> {
    let part = DyadicPartition::for_grid(problem.grid)?;
    let mut m: f64 = 0.0;
    for &t in times {
        m = m.max(besov_norm(&problem.source.at(t, problem.grid)?, s, q, f64::INFINITY, &part)?.value);
    }
    Ok(m)
}

/// A-priori ratio `R = ‖u‖_{L^∞_T B^{α+γ}_{q,∞}} / ‖f‖_{L^∞_T B^γ_{q,∞}}` for
/// each source on the base grid and on a grid with twice the points, plus
/// the λ-decay of the `B^η` ratio for the first non-zero source.
pub fn verify_apriori(base: &PdeProblem, sources: &[Source], cfg: &AprioriConfig) -> Result<AprioriReport> {
    let alpha = base.model.alpha();
    let mut warnings = drift_regime_warnings(&base.model, &base.drift);
    if !(cfg.eta < alpha + cfg.gamma) {
        return Err(Error::InvalidArgument(format!(
            "eta = {} must be below alpha + gamma = {}",
            cfg.eta,
            alpha + cfg.gamma
        )));
    }
    let stride = cfg.stride.max(1);
    let fine_grid = Grid::new(base.grid.dim, base.grid.n * 2, base.grid.length)?;
    let mut ratios = Vec::with_capacity(sources.len());
    let mut lambda_source = None;
    for src in sources {
        let mut pair = [0.0; 2];
        let mut vanishing = false;
        for (slot, grid) in [base.grid, fine_grid].into_iter().enumerate() {
            let mut p = base.clone().with_grid(grid);
            p.source = src.clone();
            p.diagnostics = None;
            let times: Vec<f64> = (0..=4).map(|k| k as f64 * p.horizon / 4.0).collect();
            let fnorm = sup_source_besov(&p, cfg.gamma, cfg.q, &times)?;
            if fnorm == 0.0 {
                vanishing = true;
                break;
            }
            let sol = solve(&p)?;
            pair[slot] = sup_besov(&sol, alpha + cfg.gamma, cfg.q, stride)? / fnorm;
        }
        if vanishing {
            ratios.push(None);
        } else {
            if lambda_source.is_none() {
                lambda_source = Some(src.clone());
            }
            ratios.push(Some((pair[0], pair[1])));
        }
    }
    let max_coarse = ratios.iter().flatten().map(|r| r.0).fold(0.0, f64::max);
    let max_fine = ratios.iter().flatten().map(|r| r.1).fold(0.0, f64::max);
    let refinement_change = if max_coarse > 0.0 { (max_fine / max_coarse - 1.0).abs() } else { 0.0 };

    let mut lambda_ratios = Vec::new();
    if let Some(src) = lambda_source {
        if cfg.lambdas.iter().any(|l| *l <= 0.0) {
            warnings.push("lambda-decay report expects positive lambdas".into());
        }
        for &l in &cfg.lambdas {
            let mut p = base.clone().with_lambda(l);
            p.source = src.clone();
            p.diagnostics = None;
            let times: Vec<f64> = (0..=4).map(|k| k as f64 * p.horizon / 4.0).collect();
            let fnorm = sup_source_besov(&p, cfg.gamma, cfg.q, &times)?;
            let sol = solve(&p)?;
            lambda_ratios.push(sup_besov(&sol, cfg.eta, cfg.q, stride)? / fnorm);
        }
    }
    let lambda_decreasing = lambda_ratios.windows(2).all(|w| w[1] < w[0]);
    Ok(AprioriReport {
        ratios,
        max_coarse,
        max_fine,
        refinement_change,
        lambda_ratios,
        lambda_decreasing,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct H1qReport {
    /// `(‖∂_t u‖_{L^∞_q} + ‖u‖_{L^∞_T H^{1,q}}) / ‖f‖_{L^∞_q}` on the base
    /// and the refined grid.
    pub ratio_coarse: f64,
    pub ratio_fine: f64,
    pub refinement_change: f64,
    pub warnings: Vec<String>,
}

/// The `H^{1,q}` estimate for `α = 1`.
pub fn verify_h1q(problem: &PdeProblem, q: f64, smallness: f64) -> Result<H1qReport> {
    if problem.model.alpha() != 1.0 {
        return Err(Error::Precondition(format!(
            "the H^(1,q) estimate needs alpha = 1, got {}",
            problem.model.alpha()
        )));
    }
    if !(q >= 2.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("q = {q} must be finite and >= 2")));
    }
    let mut warnings = Vec::new();
    let ts = [0.0, 0.5 * problem.horizon, problem.horizon];
    let bmax = problem.drift.sup_on_grid(&ts, problem.grid);
    if bmax > smallness {
        warnings.push(format!("sup |b| = {bmax:.3e} exceeds the smallness threshold {smallness:.3e}"));
    }
    let fine = Grid::new(problem.grid.dim, problem.grid.n * 2, problem.grid.length)?;
    let mut out = [0.0; 2];
    for (slot, grid) in [problem.grid, fine].into_iter().enumerate() {
        let mut p = problem.clone().with_grid(grid);
        p.diagnostics = None;
        let sol = solve(&p)?;
        let mut dtu: f64 = 0.0;
        let mut h1: f64 = 0.0;
        let mut fq: f64 = 0.0;
        for k in 0..sol.snapshots.len() {
            h1 = h1.max(lp::bessel_norm(&sol.snapshots[k], 1.0, q)?);
            fq = fq.max(p.source.at(sol.times[k], grid)?.lp_norm(q));
            if k + 1 < sol.snapshots.len() {
                let h = sol.times[k + 1] - sol.times[k];
                let d = sol.snapshots[k + 1].sub(&sol.snapshots[k])?.scale(1.0 / h);
                dtu = dtu.max(d.lp_norm(q));
            }
        }
        out[slot] = if fq > 0.0 { (dtu + h1) / fq } else { 0.0 };
    }
    Ok(H1qReport {
        ratio_coarse: out[0],
        ratio_fine: out[1],
        refinement_change: if out[0] > 0.0 { (out[1] / out[0] - 1.0).abs() } else { 0.0 },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::SphericalMeasure;

    fn stable_1d(alpha: f64) -> LevyModel {
        LevyModel::pure_stable(alpha, SphericalMeasure::axes(1, 1.0).unwrap()).unwrap()
    }

    fn problem(source: Source, dir: Direction) -> PdeProblem {
        PdeProblem::new(
            dir,
            stable_1d(0.5),
            JumpKernel::constant(1.0).unwrap(),
            DriftField::zero(1),
            source,
            1.0,
            0.01,
            Grid::periodic(1, 32).unwrap(),
        )
    }

    #[test]
    fn zero_source_gives_zero() {
        let sol = solve(&problem(Source::Zero, Direction::Forward)).unwrap();
        assert_eq!(sol.snapshots.len(), 101);
        assert!(sol.snapshots.iter().all(|s| s.max_abs() == 0.0));
    }

    #[test]
    fn constant_source_closed_form() {
        let kernel = JumpKernel::space(|_, x: &[f64]| 1.5 + 0.5 * x[0].sin(), 1.0, 2.0, 1.0, 1.0).unwrap();
        let drift = DriftField::from_fn(1, |_, x: &[f64]| vec![0.3 * x[0].cos()], 1.0, f64::INFINITY, 0.3);
        let mut p = problem(Source::Constant(2.0), Direction::Forward).with_lambda(0.7);
        p.kernel = kernel;
        p.drift = drift;
        let sol = solve(&p).unwrap();
        for (t, u) in sol.times.iter().zip(&sol.snapshots) {
            let exact = 2.0 * (1.0 - (-0.7 * t).exp()) / 0.7;
            assert!(u.values().iter().all(|v| (v - exact).abs() < 1e-8), "t = {t}");
        }
    }

    #[test]
    fn multiplier_oracle_steady_state() {
        let f = GridField::from_fn(Grid::periodic(1, 32).unwrap(), |x| x[0].cos());
        let mut p = problem(Source::Static(f), Direction::Forward).with_lambda(1.0);
        p.horizon = 5.0;
        p.dt = 0.05;
        let sol = solve(&p).unwrap();
        let psi = -2.0 * (2.0 * std::f64::consts::PI).sqrt();
        for (t, u) in sol.times.iter().zip(&sol.snapshots) {
            let amp = (1.0 - ((psi - 1.0) * t).exp()) / (1.0 - psi);
            let err = u.values().iter().enumerate().map(|(i, v)| {
                let x = i as f64 * u.grid().spacing();
                (v - amp * x.cos()).abs()
            });
            assert!(err.fold(0.0, f64::max) < 1e-7, "t = {t}");
        }
        let last = sol.snapshots.last().unwrap();
        assert!((last.values()[0] - 0.1663).abs() < 1e-4);
    }

    #[test]
    fn backward_is_time_reversed_forward() {
        let src = Source::function(|t, x: &[f64]| (1.0 + t) * x[0].sin());
        let back = solve(&problem(src, Direction::Backward)).unwrap();
        let src_rev = Source::function(|t, x: &[f64]| (2.0 - t) * x[0].sin());
        let fwd = solve(&problem(src_rev, Direction::Forward)).unwrap();
        let n = back.snapshots.len();
        for k in 0..n {
            let d = back.snapshots[k].sub(&fwd.snapshots[n - 1 - k]).unwrap().max_abs();
            assert!(d < 1e-12);
        }
        assert_eq!(back.snapshots[n - 1].max_abs(), 0.0);
        assert_eq!(back.times[0], 0.0);
    }

    #[test]
    fn cfl_violation_is_a_config_error() {
        let mut p = problem(Source::Constant(1.0), Direction::Forward);
        p.drift = DriftField::constant(vec![100.0]);
        assert!(matches!(solve(&p), Err(Error::Config(_))));
    }

    #[test]
    fn quasilinear_with_zero_kappa_matches_linear() {
        let src = Source::function(|t, x: &[f64]| (1.0 + t) * x[0].sin());
        let p = problem(src, Direction::Backward);
        let a = solve(&p).unwrap();
        let b = solve_quasilinear(&p).unwrap();
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn quasilinear_constant_source() {
        let mut p = problem(Source::Constant(1.0), Direction::Backward).with_lambda(0.5);
        p.quasilinear_kappa = 0.2;
        let sol = solve(&p).unwrap();
        let u0 = &sol.snapshots[0];
        let exact = (1.0 - (-0.5f64).exp()) / 0.5;
        assert!(u0.values().iter().all(|v| (v - exact).abs() < 1e-8));
    }

    #[test]
    fn quasilinear_second_difference_is_quadratic() {
        let run = |kappa: f64| {
            let mut p = problem(Source::function(|_, x: &[f64]| x[0].sin() + 0.5), Direction::Backward);
            p.quasilinear_kappa = kappa;
            p.dt = 0.02;
            solve(&p).unwrap().snapshots[0].clone()
        };
        let u0 = run(0.0);
        let d = |k: f64| run(2.0 * k).sub(&run(k).scale(2.0)).unwrap().add(&u0).unwrap().max_abs();
        let (d1, d2) = (d(0.04), d(0.02));
        assert!(d2 / d1 < 0.35, "{d1} {d2}");
    }

    #[test]
    fn instability_names_the_step() {
        // σ ranges over [1, 4] with κ_ref = 1: the explicit part is too stiff.
        let mut p = problem(Source::function(|_, x: &[f64]| (15.0 * x[0]).cos()), Direction::Forward);
        p.kernel = JumpKernel::space(|_, x: &[f64]| 2.5 + 1.5 * x[0].sin(), 1.0, 4.0, 1.0, 1.0).unwrap();
        p.horizon = 1000.0;
        p.dt = 0.5;
        assert!(matches!(solve(&p), Err(Error::Instability { .. })));
    }

    #[test]
    fn h1q_requires_alpha_one() {
        let p = problem(Source::Constant(1.0), Direction::Forward);
        assert!(matches!(verify_h1q(&p, 2.0, 0.1), Err(Error::Precondition(_))));
    }
}
