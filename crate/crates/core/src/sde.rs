//! Thinning simulation of
//! `dX = b(t, X) dt + ∫∫ z 1_{[0, σ(t, X_{t−}, z)]}(r) N(dt, dz, dr)`.
//!
//! Proposals form a Poisson process of rate `Λ = bound · ν(|z| > ε)` with
//! marks `z ~ ν|_{|z|>ε} / ν(|z| > ε)` and `r ~ U[0, bound]`; a proposal is
//! accepted when `r ≤ σ(t, X_{t−}, z)`. Between proposals the drift is
//! integrated by explicit Euler. Jumps below `ε` are dropped; for `α = 1`
//! the compensator of the `(ε, 1]` jumps is added to the drift.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::levy::{norm, JumpNode, JumpSampler, LevyModel};
use crate::lp::{besov_norm, DyadicPartition, Grid};
use crate::nonlocal::{DriftField, JumpKernel};
use crate::pde::{self, Direction, PdeProblem, Source};
use crate::quad::pairwise_sum;
use crate::rng::{domain_stream, Stream};
use crate::stats::mean_and_stderr;

/// How the `α = 1` compensator `∫_{ε<|z|≤1} z σ ν(dz)` is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompensatorMode {
    /// Assume the compensator vanishes (symmetric `ν`, even kernel).
    SymmetricZero,
    Quadrature,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub dt: f64,
    pub eps: f64,
    pub thinning_bound: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub compensator: CompensatorMode,
}

impl SimConfig {
    fn validate(&self, kernel: &JumpKernel) -> Result<()> {
        if !(self.horizon > 0.0 && self.dt > 0.0) {
            return Err(Error::Config("horizon and dt must be positive".into()));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::Config(format!("eps = {} not in (0, 1]", self.eps)));
        }
        if self.thinning_bound < kernel.kappa1 {
            return Err(Error::Config(format!(
                "thinning bound {} is below the kernel bound {}",
                self.thinning_bound, kernel.kappa1
            )));
        }
        Ok(())
    }
}

/// A proposal of the dominating Poisson measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub t: f64,
    pub z: Vec<f64>,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: f64,
    pub z: Vec<f64>,
    pub r: f64,
    pub accepted: bool,
}

/// Trajectory sampled at the Euler grid and at every proposal time.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Index into `events` for knots that are proposal times.
    pub event_at: Vec<Option<usize>>,
    pub events: Vec<Event>,
}

impl PathRecord {
    pub fn terminal(&self) -> &[f64] {
        self.states.last().expect("non-empty path")
    }

    /// CSV with columns `t,x_1..x_d,event,accepted`.
    pub fn to_csv(&self) -> String {
        let d = self.states.first().map_or(0, Vec::len);
        let mut s = String::from("t");
        for a in 1..=d {
            let _ = write!(s, ",x_{a}");
        }
        s.push_str(",event,accepted\n");
        for ((t, x), e) in self.times.iter().zip(&self.states).zip(&self.event_at) {
            let _ = write!(s, "{t}");
            for v in x {
                let _ = write!(s, ",{v}");
            }
            match e {
                Some(i) => {
                    let _ = writeln!(s, ",1,{}", u8::from(self.events[*i].accepted));
                }
                None => s.push_str(",0,0\n"),
            }
        }
        s
    }
}

/// Model, kernel and drift bound to a simulation configuration.
#[derive(Debug, Clone)]
pub struct Simulator {
    model: LevyModel,
    kernel: JumpKernel,
    drift: DriftField,
    cfg: SimConfig,
    sampler: Option<JumpSampler>,
    comp_nodes: Vec<JumpNode>,
}

impl Simulator {
    pub fn new(model: &LevyModel, kernel: &JumpKernel, drift: &DriftField, cfg: &SimConfig) -> Result<Self> {
        cfg.validate(kernel)?;
        if model.alpha() > 1.0 {
            return Err(Error::InvalidModel(format!(
                "the simulator handles alpha in (0, 1], got {}",
                model.alpha()
            )));
        }
        if cfg.x0.len() != model.dim() || drift.dim() != model.dim() {
            return Err(Error::InvalidArgument("dimensions of x0, drift and model differ".into()));
        }
        let mass = model.restricted_mass(cfg.eps)?;
        let sampler = if mass > 0.0 { Some(JumpSampler::new(model, cfg.eps)?) } else { None };
        let comp_nodes = if model.compensated() && cfg.compensator == CompensatorMode::Quadrature && cfg.eps < 1.0 {
            let (nodes, _) = model.jump_nodes(cfg.eps, 1.0, 1.0)?;
            nodes.into_iter().filter(|n| norm(&n.z) <= 1.0).collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            model: model.clone(),
            kernel: kernel.clone(),
            drift: drift.clone(),
            cfg: cfg.clone(),
            sampler,
            comp_nodes,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn with_dt(&self, dt: f64) -> Self {
        let mut s = self.clone();
        s.cfg.dt = dt;
        s
    }

    /// Rate of the dominating proposal process.
    pub fn proposal_rate(&self) -> f64 {
        self.sampler.as_ref().map_or(0.0, |s| s.mass() * self.cfg.thinning_bound)
    }

    /// Random stream of path `index`.
    pub fn path_stream(&self, index: u64) -> Stream {
        domain_stream(self.cfg.seed, "paths", index)
    }

    /// Proposals on `[0, T]` in increasing time.
    pub fn proposals<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Proposal> {
        let mut out = Vec::new();
        let Some(sampler) = &self.sampler else {
            return out;
        };
        let rate = self.proposal_rate();
        let exp = Exp::new(rate).expect("positive rate");
        let mut t = 0.0;
        loop {
            t += exp.sample(rng);
            if t > self.cfg.horizon {
                break;
            }
            let z = sampler.sample(rng);
            let r = rng.random::<f64>() * self.cfg.thinning_bound;
            out.push(Proposal { t, z, r });
        }
        out
    }

    /// Compensator drift `−∫_{ε<|z|≤1} z σ(t, x, z) ν(dz)`; zero unless
    /// `α = 1` in quadrature mode.
    pub fn compensator(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; x.len()];
        for node in &self.comp_nodes {
            let s = self.kernel.eval(t, x, &node.z);
            for (a, z) in v.iter_mut().zip(&node.z) {
                *a -= node.weight * s * z;
            }
        }
        v
    }

    fn velocity(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut v = self.drift.eval(t, x);
        if !self.comp_nodes.is_empty() {
            for (a, c) in v.iter_mut().zip(self.compensator(t, x)) {
                *a += c;
            }
        }
        v
    }

    /// Integrate one path against the given proposals. `on_step(t0, t1, x)`
    /// sees every Euler step with its left state; `on_knot(t, x, event)`
    /// sees the state after every step end and every proposal.
    pub fn integrate<S, K>(&self, x0: &[f64], proposals: &[Proposal], on_step: S, on_knot: K) -> Result<()>
    where
        S: FnMut(f64, f64, &[f64]),
        K: FnMut(f64, &[f64], Option<(usize, bool)>),
    {
        let moving = !self.drift.is_zero() || !self.comp_nodes.is_empty();
        self.drive(
            x0,
            proposals,
            |t, x| Ok(if moving { Some(self.velocity(t, x)) } else { None }),
            |t, x, p| {
                let s = self.kernel.eval(t, x, &p.z);
                if s > self.cfg.thinning_bound {
                    return Err(Error::ThinningViolation {
                        bound: self.cfg.thinning_bound,
                        value: s,
                        time: t,
                    });
                }
                Ok((p.r <= s).then(|| x.iter().zip(&p.z).map(|(a, z)| a + z).collect()))
            },
            on_step,
            on_knot,
        )
    }

    /// Generic driver on the simulator's time grid: Euler steps with
    /// `velocity` (None means no motion) and, at each proposal, the
    /// post-jump state returned by `jump` (None when rejected).
    pub fn drive<V, J, S, K>(
        &self,
        x0: &[f64],
        proposals: &[Proposal],
        mut velocity: V,
        mut jump: J,
        mut on_step: S,
        mut on_knot: K,
    ) -> Result<()>
    where
        V: FnMut(f64, &[f64]) -> Result<Option<Vec<f64>>>,
        J: FnMut(f64, &[f64], &Proposal) -> Result<Option<Vec<f64>>>,
        S: FnMut(f64, f64, &[f64]),
        K: FnMut(f64, &[f64], Option<(usize, bool)>),
    {
        let big_t = self.cfg.horizon;
        let n = (big_t / self.cfg.dt - 1e-9).ceil().max(1.0) as usize;
        let h = big_t / n as f64;
        let mut x = x0.to_vec();
        let mut t = 0.0;
        let mut next = 0usize;
        on_knot(0.0, &x, None);
        let mut euler = |x: &mut Vec<f64>, t0: f64, t1: f64, on_step: &mut S| -> Result<()> {
            if t1 > t0 {
                on_step(t0, t1, x);
                if let Some(v) = velocity(t0, x)? {
                    for (a, b) in x.iter_mut().zip(&v) {
                        *a += b * (t1 - t0);
                    }
                }
            }
            Ok(())
        };
        for k in 0..n {
            let t_end = if k + 1 == n { big_t } else { (k + 1) as f64 * h };
            while next < proposals.len() && proposals[next].t <= t_end {
                let p = &proposals[next];
                euler(&mut x, t, p.t, &mut on_step)?;
                t = p.t;
                let accepted = match jump(t, &x, p)? {
                    Some(y) => {
                        x = y;
                        true
                    }
                    None => false,
                };
                on_knot(t, &x, Some((next, accepted)));
                next += 1;
            }
            euler(&mut x, t, t_end, &mut on_step)?;
            t = t_end;
            on_knot(t, &x, None);
        }
        Ok(())
    }

    /// Full record of one path.
    pub fn record(&self, x0: &[f64], proposals: &[Proposal]) -> Result<PathRecord> {
        let mut times = Vec::new();
        let mut states = Vec::new();
        let mut event_at = Vec::new();
        let mut events: Vec<Event> = proposals
            .iter()
            .map(|p| Event {
                t: p.t,
                z: p.z.clone(),
                r: p.r,
                accepted: false,
            })
            .collect();
        self.integrate(
            x0,
            proposals,
            |_, _, _| {},
            |t, x, e| {
                times.push(t);
                states.push(x.to_vec());
                event_at.push(e.map(|(i, acc)| {
                    events[i].accepted = acc;
                    i
                }));
            },
        )?;
        Ok(PathRecord {
            times,
            states,
            event_at,
            events,
        })
    }

    /// `X_T` of one path.
    pub fn terminal(&self, x0: &[f64], proposals: &[Proposal]) -> Result<Vec<f64>> {
        let mut last = x0.to_vec();
        self.integrate(x0, proposals, |_, _, _| {}, |_, x, _| last.copy_from_slice(x))?;
        Ok(last)
    }

    /// `∫_0^T f(s, X_s) ds` by the left-point rule on every Euler step.
    pub fn path_integral(&self, x0: &[f64], proposals: &[Proposal], f: &Source) -> Result<f64> {
        let mut parts = Vec::new();
        self.integrate(x0, proposals, |t0, t1, x| parts.push(f.eval(t0, x) * (t1 - t0)), |_, _, _| {})?;
        Ok(pairwise_sum(&parts))
    }

    /// Per-path values `g(index, proposals)` evaluated in parallel, returned
    /// in path order.
    pub fn map_paths<T, G>(&self, n_paths: usize, g: G) -> Result<Vec<T>>
    where
        T: Send,
        G: Fn(u64, &[Proposal]) -> Result<T> + Sync,
    {
        (0..n_paths as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = self.path_stream(i);
                let props = self.proposals(&mut rng);
                g(i, &props)
            })
            .collect()
    }
}

/// One path driven by `rng`.
pub fn simulate<R: Rng + ?Sized>(
    model: &LevyModel,
    kernel: &JumpKernel,
    drift: &DriftField,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<PathRecord> {
    let sim = Simulator::new(model, kernel, drift, cfg)?;
    let props = sim.proposals(rng);
    sim.record(&cfg.x0, &props)
}

/// Two solutions driven by the same Poisson random measure.
pub fn simulate_coupled<R: Rng + ?Sized>(
    model: &LevyModel,
    kernel: &JumpKernel,
    drift: &DriftField,
    cfg: &SimConfig,
    x0_a: &[f64],
    x0_b: &[f64],
    rng: &mut R,
) -> Result<(PathRecord, PathRecord)> {
    let sim = Simulator::new(model, kernel, drift, cfg)?;
    let props = sim.proposals(rng);
    Ok((sim.record(x0_a, &props)?, sim.record(x0_b, &props)?))
}

/// Bound on `|E e^{iξ·X_t} − e^{t κ ψ(ξ)}|` caused by dropping the jumps
/// below `ε` for a constant kernel `κ`.
pub fn cutoff_allowance(model: &LevyModel, kappa: f64, eps: f64, t: f64, xi: &[f64]) -> f64 {
    let k = norm(xi);
    let first = k * model.small_moment_bound(eps, 1);
    let second = 0.5 * k * k * model.small_moment_bound(eps, 2);
    let bound = if model.is_symmetric() || model.compensated() { second.min(first) } else { first };
    t * kappa * bound
}

/// One row of a Monte Carlo report.
#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub x: Vec<f64>,
    pub estimate: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

pub fn mc_csv(rows: &[McRow]) -> String {
    let mut s = String::from("x,estimate,stderr,n_paths\n");
    for r in rows {
        let x: Vec<String> = r.x.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "\"{}\",{},{},{}", x.join(" "), r.estimate, r.stderr, r.n_paths);
    }
    s
}

fn mc_rows(sim: &Simulator, f: &Source, xs: &[Vec<f64>], n_paths: usize) -> Result<Vec<McRow>> {
    xs.iter()
        .map(|x| {
            let vals = sim.map_paths(n_paths, |_, props| sim.path_integral(x, props, f))?;
            let (m, se) = mean_and_stderr(&vals);
            Ok(McRow {
                x: x.clone(),
                estimate: m,
                stderr: se,
                n_paths,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct KrylovReport {
    pub rows: Vec<McRow>,
    pub sup: f64,
    /// `sup_t ‖f(t)‖_{B^0_{q,∞}}` over the sampled times.
    pub f_norm: f64,
    pub ratio: f64,
}

/// Monte Carlo `E ∫_0^T f(s, X_s(x)) ds` on `x_grid`, with the ratio of its
/// supremum to `‖f‖_{L^∞_T B^0_{q,∞}}` evaluated on `norm_grid`.
#[allow(clippy::too_many_arguments)]
pub fn krylov_estimate(
    model: &LevyModel,
    kernel: &JumpKernel,
    drift: &DriftField,
    f: &Source,
    x_grid: &[Vec<f64>],
    cfg: &SimConfig,
    q: f64,
    norm_grid: Grid,
) -> Result<KrylovReport> {
    let sim = Simulator::new(model, kernel, drift, cfg)?;
    let rows = mc_rows(&sim, f, x_grid, cfg.n_paths)?;
    let sup = rows.iter().map(|r| r.estimate).fold(f64::NEG_INFINITY, f64::max);
    let part = DyadicPartition::for_grid(norm_grid)?;
    let mut f_norm: f64 = 0.0;
    for k in 0..=8 {
        let t = cfg.horizon * k as f64 / 8.0;
        f_norm = f_norm.max(besov_norm(&f.at(t, norm_grid)?, 0.0, q, f64::INFINITY, &part)?.value);
    }
    Ok(KrylovReport {
        ratio: if f_norm > 0.0 { sup / f_norm } else { f64::NAN },
        rows,
        sup,
        f_norm,
    })
}

/// Discretization of the PDE side of the Feynman–Kac check.
#[derive(Debug, Clone, Copy)]
pub struct FkPdeConfig {
    pub grid: Grid,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FkRow {
    pub x: Vec<f64>,
    pub pde: f64,
    pub mc: f64,
    pub stderr: f64,
    pub discrepancy: f64,
    pub allowance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct FkReport {
    pub rows: Vec<FkRow>,
    /// Components of the allowance: PDE `dt`, PDE grid, simulation `dt`,
    /// small-jump cutoff.
    pub allowance_parts: [f64; 4],
    pub warnings: Vec<String>,
}

/// Compare `u(0, x)` for `∂_t u + ℒ^σ_ν u + b·∇u + f = 0, u(T) = 0` with
/// `E ∫_0^T f(s, X_s(x)) ds`.
///
/// The allowance adds the halving differences of the PDE in `dt` and in the
/// grid, of the simulation in `dt` (same proposals), and the Taylor bound of
/// the dropped jumps `T sup|(ℒ − ℒ_ε) u|`.
#[allow(clippy::too_many_arguments)]
pub fn feynman_kac_check(
    model: &LevyModel,
    kernel: &JumpKernel,
    drift: &DriftField,
    f: &Source,
    x_grid: &[Vec<f64>],
    cfg: &SimConfig,
    pde_cfg: FkPdeConfig,
) -> Result<FkReport> {
    let mut warnings = Vec::new();
    if model.alpha() + drift.beta < 1.0 {
        warnings.push(format!(
            "alpha + beta = {} is below the balance threshold 1",
            model.alpha() + drift.beta
        ));
    }
    let solve = |grid: Grid, dt: f64| {
        let p = PdeProblem::new(
            Direction::Backward,
            model.clone(),
            kernel.clone(),
            drift.clone(),
            f.clone(),
            cfg.horizon,
            dt,
            grid,
        );
        pde::solve(&p).map(|s| s.snapshots[0].clone())
    };
    let g = pde_cfg.grid;
    let u0 = solve(g, pde_cfg.dt)?;
    let u_dt = solve(g, 0.5 * pde_cfg.dt)?;
    let u_h = solve(Grid::new(g.dim, g.n * 2, g.length)?, pde_cfg.dt)?;

    let sim = Simulator::new(model, kernel, drift, cfg)?;
    let sim_half = sim.with_dt(0.5 * cfg.dt);
    let second_order = model.compensated() || model.is_symmetric();
    let cutoff = if second_order {
        0.5 * crate::lp::derivative_tensor_norm(&u0, 2).max_abs() * model.small_moment_bound(cfg.eps, 2)
    } else {
        crate::lp::derivative_tensor_norm(&u0, 1).max_abs() * model.small_moment_bound(cfg.eps, 1)
    } * kernel.kappa1
        * cfg.horizon;

    let mut rows = Vec::new();
    let mut parts = [0.0f64; 4];
    parts[3] = cutoff;
    for x in x_grid {
        let pairs = sim.map_paths(cfg.n_paths, |_, props| {
            Ok((sim.path_integral(x, props, f)?, sim_half.path_integral(x, props, f)?))
        })?;
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let (mc, se) = mean_and_stderr(&a);
        let (mc_half, _) = mean_and_stderr(&b);
        let pde_val = u0.eval_spectral(x);
        let a_pde_dt = (pde_val - u_dt.eval_spectral(x)).abs();
        let a_pde_h = (pde_val - u_h.eval_spectral(x)).abs();
        let a_sim = (mc - mc_half).abs();
        parts[0] = parts[0].max(a_pde_dt);
        parts[1] = parts[1].max(a_pde_h);
        parts[2] = parts[2].max(a_sim);
        let allowance = a_pde_dt + a_pde_h + a_sim + cutoff;
        let discrepancy = (pde_val - mc).abs();
        rows.push(FkRow {
            x: x.clone(),
            pde: pde_val,
            mc,
            stderr: se,
            discrepancy,
            allowance,
            pass: discrepancy <= 3.0 * se + allowance,
        });
    }
    Ok(FkReport {
        rows,
        allowance_parts: parts,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{RadialProfile, SphericalMeasure, TailMeasure};
    use crate::rng::stream;
    use crate::stats::poisson_chi_square;

    fn cfg(x0: f64, horizon: f64, eps: f64, bound: f64) -> SimConfig {
        SimConfig {
            x0: vec![x0],
            horizon,
            dt: 0.01,
            eps,
            thinning_bound: bound,
            n_paths: 1000,
            seed: 7,
            compensator: CompensatorMode::SymmetricZero,
        }
    }

    fn truncated(alpha: f64) -> LevyModel {
        LevyModel::new(
            alpha,
            SphericalMeasure::axes(1, 1.0).unwrap(),
            RadialProfile::Constant(1.0),
            TailMeasure::Empty,
        )
        .unwrap()
    }

    #[test]
    fn zero_mass_is_an_ode() {
        let model = truncated(0.5);
        let path = simulate(
            &model,
            &JumpKernel::constant(1.0).unwrap(),
            &DriftField::constant(vec![1.0]),
            &cfg(0.0, 1.0, 1.0, 1.0),
            &mut stream(0, 0),
        )
        .unwrap();
        assert!(path.events.is_empty());
        assert!((path.terminal()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn acceptance_rate_matches_kernel_ratio() {
        let model = truncated(0.5);
        let c = cfg(0.0, 200.0, 0.05, 2.0);
        let path = simulate(&model, &JumpKernel::constant(0.5).unwrap(), &DriftField::zero(1), &c, &mut stream(1, 0))
            .unwrap();
        let n = path.events.len() as f64;
        let acc = path.events.iter().filter(|e| e.accepted).count() as f64;
        let p = 0.25;
        assert!(n > 1000.0);
        assert!((acc / n - p).abs() <= 3.0 * (p * (1.0 - p) / n).sqrt());
    }

    #[test]
    fn event_counts_are_poisson() {
        let model = truncated(0.5);
        let c = cfg(0.0, 1.0, 0.25, 1.5);
        let sim = Simulator::new(&model, &JumpKernel::constant(1.0).unwrap(), &DriftField::zero(1), &c).unwrap();
        let counts = sim.map_paths(5000, |_, p| Ok(p.len() as u64)).unwrap();
        let (_, _, p) = poisson_chi_square(&counts, sim.proposal_rate() * c.horizon).unwrap();
        assert!(p > 0.01, "p = {p}");
    }

    #[test]
    fn coupled_paths_share_noise() {
        let model = truncated(0.5);
        let c = cfg(0.0, 1.0, 0.1, 1.0);
        let k = JumpKernel::constant(1.0).unwrap();
        let b = DriftField::from_fn(1, |_, x: &[f64]| vec![x[0].sin()], 1.0, f64::INFINITY, 1.0);
        let (a, bb) = simulate_coupled(&model, &k, &b, &c, &[0.3], &[0.3], &mut stream(2, 0)).unwrap();
        assert_eq!(a, bb);
        let (a, bb) = simulate_coupled(&model, &k, &b, &c, &[0.3], &[0.4], &mut stream(2, 0)).unwrap();
        assert_eq!(a.events, bb.events);
        assert_eq!(a.times, bb.times);
    }

    #[test]
    fn thinning_violation_is_reported() {
        let model = truncated(0.5);
        let k = JumpKernel::general(|_, x: &[f64], _| 1.0 + x[0].abs(), 1.0, 1.5, 1.0, 1.0).unwrap();
        let c = cfg(5.0, 1.0, 0.1, 1.5);
        let err = simulate(&model, &k, &DriftField::zero(1), &c, &mut stream(3, 0));
        assert!(matches!(err, Err(Error::ThinningViolation { .. })));
    }

    #[test]
    fn constant_source_integral_is_exact() {
        let model = truncated(0.5);
        let c = cfg(0.0, 1.0, 0.1, 1.0);
        let sim = Simulator::new(&model, &JumpKernel::constant(1.0).unwrap(), &DriftField::zero(1), &c).unwrap();
        let v = sim.map_paths(50, |_, p| sim.path_integral(&[0.0], p, &Source::Constant(1.0))).unwrap();
        assert!(v.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn paths_do_not_depend_on_thread_count() {
        let model = truncated(0.5);
        let c = cfg(0.0, 1.0, 0.1, 1.0);
        let sim = Simulator::new(&model, &JumpKernel::constant(1.0).unwrap(), &DriftField::zero(1), &c).unwrap();
        let a = sim.map_paths(64, |_, p| sim.terminal(&[0.0], p)).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sim.map_paths(64, |_, p| sim.terminal(&[0.0], p)).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn path_csv_has_header() {
        let model = truncated(0.5);
        let p = simulate(
            &model,
            &JumpKernel::constant(1.0).unwrap(),
            &DriftField::zero(1),
            &cfg(0.0, 0.1, 0.5, 1.0),
            &mut stream(4, 0),
        )
        .unwrap();
        assert!(p.to_csv().starts_with("t,x_1,event,accepted\n"));
    }
}
