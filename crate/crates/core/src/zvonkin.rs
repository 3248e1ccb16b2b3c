//! Zvonkin transform `Φ_t = id + u`, where `u` solves
//! `∂_t u + ℒ^σ_ν u + b·∇u − λu + b = 0`, `u(T) = 0` componentwise.
//!
//! `λ` is chosen from a schedule until `‖u‖_∞ + ‖∇u‖_∞ ≤ 1/2`, which makes
//! `Φ_t` bi-Lipschitz with constants `1/2` and `3/2`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::levy::{norm, JumpNode, LevyModel};
use crate::lp::{Grid, GridField};
use crate::nonlocal::{DriftField, JumpKernel, NonlocalOperator};
use crate::pde::{self, Direction, PdeProblem, Source};
use crate::sde::{Proposal, SimConfig, Simulator};

/// Smallness required of `‖u‖_∞ + ‖∇u‖_∞`.
pub const SMALLNESS: f64 = 0.5;

const INVERSE_TOL: f64 = 1e-12;
const INVERSE_MAX_ITER: usize = 60;

/// `{1, 2, 4, ..., 256}`.
pub fn doubling_schedule() -> Vec<f64> {
    (0..=8).map(|k| f64::from(1u32 << k)).collect()
}

/// Discretization of the backward equation defining `u`.
#[derive(Debug, Clone, Copy)]
pub struct MapConfig {
    pub grid: Grid,
    pub horizon: f64,
    pub dt: f64,
    pub reference_kappa: Option<f64>,
}

/// Norms measured for one `λ` of the schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaTrial {
    pub lambda: f64,
    pub sup_u: f64,
    pub sup_grad: f64,
}

impl LambdaTrial {
    pub fn certificate(&self) -> f64 {
        self.sup_u + self.sup_grad
    }
}

/// A certified transform. Immutable once built.
#[derive(Debug, Clone)]
pub struct ZvonkinMap {
    lambda: f64,
    times: Vec<f64>,
    /// `u[k][i]`: component `i` at `times[k]`.
    u: Vec<Vec<GridField>>,
    /// `grad[k][i][a] = ∂_a u_i` at `times[k]`.
    grad: Vec<Vec<Vec<GridField>>>,
    sup_u: f64,
    sup_grad: f64,
    trials: Vec<LambdaTrial>,
    pub warnings: Vec<String>,
}

fn gradients(u: &[Vec<GridField>]) -> Vec<Vec<Vec<GridField>>> {
    u.par_iter()
        .map(|comps| comps.iter().map(GridField::gradient).collect())
        .collect()
}

/// `(sup |u|, sup ‖∇u‖_F)` over snapshots. The snapshot attaining the grid
/// maximum is re-measured on a finer grid to catch off-node peaks.
fn measure(u: &[Vec<GridField>], grad: &[Vec<Vec<GridField>>]) -> Result<(f64, f64)> {
    let pointwise = |comps: &[GridField], g: &[Vec<GridField>]| -> (f64, f64) {
        let n = comps[0].values().len();
        let (mut su, mut sg) = (0.0f64, 0.0f64);
        for p in 0..n {
            let a: f64 = comps.iter().map(|c| c.values()[p].powi(2)).sum();
            let b: f64 = g.iter().flat_map(|row| row.iter()).map(|c| c.values()[p].powi(2)).sum();
            su = su.max(a.sqrt());
            sg = sg.max(b.sqrt());
        }
        (su, sg)
    };
    let per: Vec<(f64, f64)> = u.par_iter().zip(grad).map(|(c, g)| pointwise(c, g)).collect();
    let (mut su, mut sg) = per.iter().fold((0.0f64, 0.0f64), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let worst = per
        .iter()
        .enumerate()
        .max_by(|a, b| (a.1 .0 + a.1 .1).total_cmp(&(b.1 .0 + b.1 .1)))
        .map(|(k, _)| k);
    if let Some(k) = worst {
        let factor = if u[k][0].grid().dim == 1 { 4 } else { 2 };
        let fine: Vec<GridField> = u[k].iter().map(|c| c.upsample(factor)).collect::<Result<_>>()?;
        let fine_grad = gradients(std::slice::from_ref(&fine));
        let (a, b) = pointwise(&fine, &fine_grad[0]);
        su = su.max(a);
        sg = sg.max(b);
    }
    Ok((su, sg))
}

/// Index pair and weight for linear interpolation in time.
fn bracket(times: &[f64], t: f64) -> (usize, usize, f64) {
    let k = times.partition_point(|s| *s <= t);
    if k == 0 {
        return (0, 0, 0.0);
    }
    if k >= times.len() {
        let last = times.len() - 1;
        return (last, last, 0.0);
    }
    let w = (t - times[k - 1]) / (times[k] - times[k - 1]);
    (k - 1, k, w)
}

fn interp(a: &GridField, b: &GridField, w: f64, x: &[f64]) -> f64 {
    let va = a.eval_spectral(x);
    if w == 0.0 {
        return va;
    }
    (1.0 - w) * va + w * b.eval_spectral(x)
}

impl ZvonkinMap {
    /// Map from given snapshots of `u` (`u[k][i]` is component `i` at
    /// `times[k]`). Fails when the smallness certificate does not hold.
    pub fn from_snapshots(times: Vec<f64>, u: Vec<Vec<GridField>>, lambda: f64) -> Result<Self> {
        if times.is_empty() || times.len() != u.len() {
            return Err(Error::InvalidArgument("times and snapshots must be non-empty and matching".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("snapshot times must increase".into()));
        }
        let dim = u[0].len();
        for comps in &u {
            if comps.len() != dim || comps.iter().any(|c| c.grid().dim != dim) {
                return Err(Error::GridMismatch("u must have one component per dimension".into()));
            }
        }
        let grad = gradients(&u);
        let (sup_u, sup_grad) = measure(&u, &grad)?;
        if sup_u + sup_grad > SMALLNESS {
            return Err(Error::CertificateViolation(format!(
                "‖u‖ + ‖∇u‖ = {:.6} exceeds {SMALLNESS}",
                sup_u + sup_grad
            )));
        }
        Ok(Self {
            lambda,
            times,
            u,
            grad,
            sup_u,
            sup_grad,
            trials: vec![LambdaTrial { lambda, sup_u, sup_grad }],
            warnings: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.u[0].len()
    }

    pub fn grid(&self) -> Grid {
        self.u[0][0].grid()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Snapshots of component `i`.
    pub fn component(&self, i: usize) -> Vec<GridField> {
        self.u.iter().map(|c| c[i].clone()).collect()
    }

    /// `(‖u‖_∞, ‖∇u‖_∞)`.
    pub fn norms(&self) -> (f64, f64) {
        (self.sup_u, self.sup_grad)
    }

    pub fn certificate(&self) -> f64 {
        self.sup_u + self.sup_grad
    }

    /// Every `λ` tried while building, in schedule order.
    pub fn trials(&self) -> &[LambdaTrial] {
        &self.trials
    }

    pub fn u(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let (a, b, w) = bracket(&self.times, t);
        (0..self.dim()).map(|i| interp(&self.u[a][i], &self.u[b][i], w, x)).collect()
    }

    /// `∂_a u_i(t, x)` as rows `i`.
    pub fn jacobian(&self, t: f64, x: &[f64]) -> Vec<Vec<f64>> {
        let (a, b, w) = bracket(&self.times, t);
        (0..self.dim())
            .map(|i| {
                (0..self.dim())
                    .map(|ax| interp(&self.grad[a][i][ax], &self.grad[b][i][ax], w, x))
                    .collect()
            })
            .collect()
    }

    /// `Φ_t(x) = x + u(t, x)`.
    pub fn forward(&self, t: f64, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.u(t, x)).map(|(a, b)| a + b).collect()
    }

    /// `Φ_t^{-1}(y)` by the fixed-point iteration `x ← y − u(t, x)`.
    pub fn inverse(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let mut x = y.to_vec();
        for _ in 0..INVERSE_MAX_ITER {
            let next: Vec<f64> = y.iter().zip(self.u(t, &x)).map(|(a, b)| a - b).collect();
            let step = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            x = next;
            if step <= INVERSE_TOL {
                return Ok(x);
            }
        }
        Err(Error::CertificateViolation(format!(
            "inverse iteration at t = {t} did not converge in {INVERSE_MAX_ITER} steps"
        )))
    }

    /// Snapshots in `dir/u_<i>/` and a `manifest.txt` with `λ` and the
    /// certificate norms.
    pub fn write<P: AsRef<Path>>(&self, dir: P) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for i in 0..self.dim() {
            let sub = dir.join(format!("u_{}", i + 1));
            fs::create_dir_all(&sub)?;
            let mut index = String::from("k,t\n");
            for (k, (t, comps)) in self.times.iter().zip(&self.u).enumerate() {
                comps[i].write_raw(sub.join(format!("{k:06}.bin")))?;
                let _ = writeln!(index, "{k},{t}");
            }
            fs::write(sub.join("times.csv"), index)?;
        }
        fs::write(dir.join("manifest.txt"), self.manifest())?;
        Ok(())
    }

    pub fn manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "sup_u = {}", self.sup_u);
        let _ = writeln!(s, "sup_grad_u = {}", self.sup_grad);
        let _ = writeln!(s, "certificate = {}", self.certificate());
        let _ = writeln!(s, "snapshots = {}", self.times.len());
        let sched: Vec<String> = self
            .trials
            .iter()
            .map(|t| format!("{}:{:.6e}", t.lambda, t.certificate()))
            .collect();
        let _ = writeln!(s, "schedule = \"{}\"", sched.join(" "));
        for w in &self.warnings {
            let _ = writeln!(s, "# warning: {w}");
        }
        s
    }
}

/// Solve the backward equation for each `λ` of `schedule` until the
/// certificate holds.
pub fn build(
    model: &LevyModel,
    kernel: &JumpKernel,
    drift: &DriftField,
    schedule: &[f64],
    cfg: &MapConfig,
) -> Result<ZvonkinMap> {
    let d = model.dim();
    if drift.dim() != d || cfg.grid.dim != d {
        return Err(Error::InvalidArgument("model, drift and grid dimensions differ".into()));
    }
    let mut warnings = Vec::new();
    let threshold = 1.0 - 0.5 * model.alpha();
    if drift.beta <= threshold {
        warnings.push(format!(
            "drift regularity beta = {} does not exceed 1 - alpha/2 = {threshold}",
            drift.beta
        ));
    }
    let mut trials = Vec::new();
    for &lambda in schedule {
        let solutions: Vec<pde::PdeSolution> = (0..d)
            .map(|i| {
                let b = drift.clone();
                let source = Source::function(move |t, x| b.eval(t, x)[i]);
                let mut p = PdeProblem::new(
                    Direction::Backward,
                    model.clone(),
                    kernel.clone(),
                    drift.clone(),
                    source,
                    cfg.horizon,
                    cfg.dt,
                    cfg.grid,
                )
                .with_lambda(lambda);
                p.reference_kappa = cfg.reference_kappa;
                pde::solve(&p)
            })
            .collect::<Result<_>>()?;
        let times = solutions[0].times.clone();
        let u: Vec<Vec<GridField>> = (0..times.len())
            .map(|k| solutions.iter().map(|s| s.snapshots[k].clone()).collect())
            .collect();
        let grad = gradients(&u);
        let (sup_u, sup_grad) = measure(&u, &grad)?;
        trials.push(LambdaTrial { lambda, sup_u, sup_grad });
        if sup_u + sup_grad <= SMALLNESS {
            return Ok(ZvonkinMap {
                lambda,
                times,
                u,
                grad,
                sup_u,
                sup_grad,
                trials,
                warnings,
            });
        }
    }
    let last = trials
        .last()
        .map(|t| format!("last lambda {} gave ‖u‖ = {:.4}, ‖∇u‖ = {:.4}", t.lambda, t.sup_u, t.sup_grad))
        .unwrap_or_else(|| "empty schedule".into());
    Err(Error::SmallnessUnattainable(last))
}

/// Tail nodes `|z| > 1` used for the large-jump integral of `b̃`.
pub fn tail_nodes(model: &LevyModel, grid: Grid, tail_cut: f64) -> Result<(Vec<JumpNode>, f64)> {
    if model.restricted_mass(1.0)? == 0.0 {
        return Ok((Vec::new(), 0.0));
    }
    let (nodes, dropped) = model.jump_nodes(0.5, grid.nyquist(), tail_cut)?;
    Ok((nodes.into_iter().filter(|n| norm(&n.z) > 1.0).collect(), dropped))
}

/// Coefficients of the transformed equation at `(t, y)`.
#[derive(Debug, Clone)]
pub struct TransformedCoefficients<'a> {
    map: &'a ZvonkinMap,
    kernel: &'a JumpKernel,
    pub t: f64,
    pub y: Vec<f64>,
    /// `Φ_t^{-1}(y)`.
    pub x_hat: Vec<f64>,
    /// `λ u(t, x̂) − ∫_{|z|>1} [u(t, x̂ + z) − u(t, x̂)] σ̃(t, y, z) ν(dz)`.
    pub b_tilde: Vec<f64>,
    /// Tail mass beyond the quadrature cutoff.
    pub dropped_mass: f64,
}

impl TransformedCoefficients<'_> {
    /// `g_t(y, z) = Φ_t(x̂ + z) − y`.
    pub fn g(&self, z: &[f64]) -> Vec<f64> {
        let p: Vec<f64> = self.x_hat.iter().zip(z).map(|(a, b)| a + b).collect();
        self.map.forward(self.t, &p).iter().zip(&self.y).map(|(a, b)| a - b).collect()
    }

    /// `σ̃(t, y, z) = σ(t, x̂, z)`.
    pub fn sigma_tilde(&self, z: &[f64]) -> f64 {
        self.kernel.eval(self.t, &self.x_hat, z)
    }
}

pub fn transformed_coefficients<'a>(
    map: &'a ZvonkinMap,
    model: &LevyModel,
    kernel: &'a JumpKernel,
    t: f64,
    y: &[f64],
) -> Result<TransformedCoefficients<'a>> {
    let (nodes, dropped) = tail_nodes(model, map.grid(), 1000.0)?;
    transformed_with_nodes(map, kernel, &nodes, dropped, t, y)
}

/// As [`transformed_coefficients`] with precomputed tail nodes.
pub fn transformed_with_nodes<'a>(
    map: &'a ZvonkinMap,
    kernel: &'a JumpKernel,
    nodes: &[JumpNode],
    dropped_mass: f64,
    t: f64,
    y: &[f64],
) -> Result<TransformedCoefficients<'a>> {
    let x_hat = map.inverse(t, y)?;
    let u0 = map.u(t, &x_hat);
    let mut b: Vec<f64> = u0.iter().map(|v| map.lambda * v).collect();
    for node in nodes {
        let p: Vec<f64> = x_hat.iter().zip(&node.z).map(|(a, z)| a + z).collect();
        let s = kernel.eval(t, &x_hat, &node.z);
        for (bi, (ui, u0i)) in b.iter_mut().zip(map.u(t, &p).iter().zip(&u0)) {
            *bi -= node.weight * s * (ui - u0i);
        }
    }
    Ok(TransformedCoefficients {
        map,
        kernel,
        t,
        y: y.to_vec(),
        x_hat,
        b_tilde: b,
        dropped_mass,
    })
}

/// Pathwise comparison of `Φ_t(X_t)` with the directly simulated `Y_t`.
#[derive(Debug, Clone)]
pub struct TransformReport {
    /// `max_t |Φ_t(X_t) − Y_t|` per replica.
    pub per_path: Vec<f64>,
    pub max: f64,
    pub mean: f64,
    pub dt: f64,
}

/// Simulate `X` and, with the same proposals, `Y` from the transformed
/// equation; report the largest gap `|Φ_t(X_t) − Y_t|` over the knots.
///
/// The drift of `Y` is `b̃ − ∫_{|z|≤1} g σ̃ dν` in the convention of the
/// simulator (small jumps uncompensated for `α < 1`), which reduces to
/// `λu − ℒ^σ u + (I + ∇u) c` at `x̂`, `c` being the simulator's compensator.
/// The generator term is evaluated on the grid for every snapshot.
pub fn verify_transform(
    model: &LevyModel,
    kernel: &JumpKernel,
    drift: &DriftField,
    map: &ZvonkinMap,
    cfg: &SimConfig,
) -> Result<TransformReport> {
    let sim = Simulator::new(model, kernel, drift, cfg)?;
    let d = map.dim();
    let op = NonlocalOperator::new(model.clone(), kernel.clone(), DriftField::zero(d), map.grid())?;
    let lambda = map.lambda;
    let gen: Vec<Vec<GridField>> = map
        .times
        .par_iter()
        .zip(&map.u)
        .map(|(&t, comps)| {
            comps
                .iter()
                .map(|c| {
                    let (lu, _) = op.jump_part(c, t)?;
                    c.zip_with(&lu, |a, b| lambda * a - b)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let compensated = sim.compensator(0.0, &cfg.x0).iter().any(|v| *v != 0.0) || model.compensated();

    let y_velocity = |t: f64, y: &[f64]| -> Result<Option<Vec<f64>>> {
        let x = map.inverse(t, y)?;
        let (a, b, w) = bracket(&map.times, t);
        let mut v: Vec<f64> = (0..d).map(|i| interp(&gen[a][i], &gen[b][i], w, &x)).collect();
        if compensated {
            let c = sim.compensator(t, &x);
            let jac = map.jacobian(t, &x);
            for i in 0..d {
                v[i] += c[i] + (0..d).map(|a| jac[i][a] * c[a]).sum::<f64>();
            }
        }
        Ok(Some(v))
    };
    let y_jump = |t: f64, y: &[f64], p: &Proposal| -> Result<Option<Vec<f64>>> {
        let x = map.inverse(t, y)?;
        let s = kernel.eval(t, &x, &p.z);
        if s > cfg.thinning_bound {
            return Err(Error::ThinningViolation {
                bound: cfg.thinning_bound,
                value: s,
                time: t,
            });
        }
        if p.r > s {
            return Ok(None);
        }
        let shifted: Vec<f64> = x.iter().zip(&p.z).map(|(a, z)| a + z).collect();
        Ok(Some(map.forward(t, &shifted)))
    };

    let y0 = map.forward(0.0, &cfg.x0);
    let per_path = sim.map_paths(cfg.n_paths, |_, props| {
        let mut xs: Vec<(f64, Vec<f64>)> = Vec::new();
        sim.integrate(&cfg.x0, props, |_, _, _| {}, |t, x, _| xs.push((t, x.to_vec())))?;
        let mut ys: Vec<Vec<f64>> = Vec::with_capacity(xs.len());
        sim.drive(&y0, props, y_velocity, y_jump, |_, _, _| {}, |_, y, _| ys.push(y.to_vec()))?;
        let mut worst: f64 = 0.0;
        for ((t, x), y) in xs.iter().zip(&ys) {
            let phi = map.forward(*t, x);
            let gap = phi.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(gap);
        }
        Ok(worst)
    })?;
    let max = per_path.iter().copied().fold(0.0, f64::max);
    let mean = crate::quad::pairwise_sum(&per_path) / per_path.len().max(1) as f64;
    Ok(TransformReport {
        per_path,
        max,
        mean,
        dt: cfg.dt,
    })
}
