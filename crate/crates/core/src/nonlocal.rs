//! The non-local generator `ℒ_t u = ℒ^σ_ν u + b·∇u` on periodic grids.
//!
//! Two evaluation routes are available. When the jump kernel does not depend
//! on the jump `z`, `ℒ^σ_ν u(x) = σ(t, x) (ψ(D) u)(x)` is applied exactly
//! through the symbol table of the model. Otherwise the `z`-integral is
//! discretized by quadrature nodes and every shift `u(· + z)` is an exact
//! Fourier phase.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::levy::{norm, JumpNode, LevyModel, DEFAULT_TAIL_RADIUS};
use crate::lp::{self, besov_norm, derivative_tensor_norm, fft_nd, DyadicPartition, Grid, GridField};
use crate::stats::linear_fit;

type KernelFn = dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync;
type DriftFn = dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync;

/// Jump intensity `σ(t, x, z)` with its declared constants.
#[derive(Clone)]
pub struct JumpKernel {
    eval: Arc<KernelFn>,
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub theta: f64,
    depends_on_x: bool,
    depends_on_z: bool,
    even_in_z: bool,
    /// Modulus `ϱ` of the integrated Lipschitz condition, if declared.
    pub modulus: Option<GridField>,
}

impl fmt::Debug for JumpKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JumpKernel")
            .field("kappa0", &self.kappa0)
            .field("kappa1", &self.kappa1)
            .field("kappa2", &self.kappa2)
            .field("theta", &self.theta)
            .field("depends_on_x", &self.depends_on_x)
            .field("depends_on_z", &self.depends_on_z)
            .finish()
    }
}

impl JumpKernel {
    /// `σ ≡ κ`.
    pub fn constant(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidArgument(format!("kernel constant {kappa} must be positive")));
        }
        Ok(Self {
            eval: Arc::new(move |_, _, _| kappa),
            kappa0: kappa,
            kappa1: kappa,
            kappa2: 1.0,
            theta: 1.0,
            depends_on_x: false,
            depends_on_z: false,
            even_in_z: true,
            modulus: None,
        })
    }

    /// `σ(t, x)`, independent of the jump.
    pub fn space<F>(f: F, kappa0: f64, kappa1: f64, kappa2: f64, theta: f64) -> Result<Self>
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        let mut k = Self::general(move |t, x, _| f(t, x), kappa0, kappa1, kappa2, theta)?;
        k.depends_on_z = false;
        k.even_in_z = true;
        Ok(k)
    }

    /// General `σ(t, x, z)`.
    pub fn general<F>(f: F, kappa0: f64, kappa1: f64, kappa2: f64, theta: f64) -> Result<Self>
    where
        F: Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        if !(kappa0 > 0.0 && kappa0 <= kappa1 && kappa1.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "kernel bounds must satisfy 0 < kappa0 <= kappa1 < inf, got ({kappa0}, {kappa1})"
            )));
        }
        if !(kappa2 >= 1.0) || !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "Hölder data must satisfy kappa2 >= 1 and theta in (0, 1], got ({kappa2}, {theta})"
            )));
        }
        Ok(Self {
            eval: Arc::new(f),
            kappa0,
            kappa1,
            kappa2,
            theta,
            depends_on_x: true,
            depends_on_z: true,
            even_in_z: false,
            modulus: None,
        })
    }

    /// Declare `σ(t, x, −z) = σ(t, x, z)`.
    pub fn with_even_in_z(mut self) -> Self {
        self.even_in_z = true;
        self
    }

    pub fn with_modulus(mut self, modulus: GridField) -> Self {
        self.modulus = Some(modulus);
        self
    }

    pub fn eval(&self, t: f64, x: &[f64], z: &[f64]) -> f64 {
        (self.eval)(t, x, z)
    }

    pub fn depends_on_x(&self) -> bool {
        self.depends_on_x
    }

    pub fn depends_on_z(&self) -> bool {
        self.depends_on_z
    }

    pub fn is_constant(&self) -> bool {
        !self.depends_on_x && !self.depends_on_z
    }

    /// Sample `(t, x, z)` triples in `[0, horizon] × [0, L)^d × B_2` and
    /// pairs with `|x − y| ≤ 1`, reporting the observed range and the
    /// largest Hölder quotient `|σ(x) − σ(y)| / |x − y|^ϑ`.
    pub fn sample_check<R: Rng + ?Sized>(
        &self,
        dim: usize,
        length: f64,
        horizon: f64,
        samples: usize,
        rng: &mut R,
    ) -> KernelCheck {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut quotient: f64 = 0.0;
        for _ in 0..samples {
            let t = rng.random::<f64>() * horizon;
            let x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * length).collect();
            let z: Vec<f64> = (0..dim).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
            let v = self.eval(t, &x, &z);
            lo = lo.min(v);
            hi = hi.max(v);
            let dir: Vec<f64> = (0..dim).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            let scale = rng.random::<f64>() / norm(&dir).max(1e-12);
            let y: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + scale * b).collect();
            let dist = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if dist > 0.0 && dist <= 1.0 {
                let w = self.eval(t, &y, &z);
                quotient = quotient.max((v - w).abs() / dist.powf(self.theta));
            }
        }
        KernelCheck {
            observed_min: lo,
            observed_max: hi,
            holder_quotient: quotient,
            bounds_hold: lo >= self.kappa0 && hi <= self.kappa1,
            holder_holds: quotient <= self.kappa2,
        }
    }
}

/// Outcome of [`JumpKernel::sample_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCheck {
    pub observed_min: f64,
    pub observed_max: f64,
    pub holder_quotient: f64,
    pub bounds_hold: bool,
    pub holder_holds: bool,
}

/// Drift `b(t, x)` with regularity metadata.
#[derive(Clone)]
pub struct DriftField {
    eval: Arc<DriftFn>,
    dim: usize,
    zero: bool,
    pub beta: f64,
    pub p: f64,
    pub declared_norm: f64,
    pub lipschitz: Option<f64>,
}

impl fmt::Debug for DriftField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftField")
            .field("dim", &self.dim)
            .field("beta", &self.beta)
            .field("p", &self.p)
            .field("declared_norm", &self.declared_norm)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl DriftField {
    pub fn zero(dim: usize) -> Self {
        Self {
            eval: Arc::new(move |_, _| vec![0.0; dim]),
            dim,
            zero: true,
            beta: 1.0,
            p: f64::INFINITY,
            declared_norm: 0.0,
            lipschitz: Some(0.0),
        }
    }

    pub fn constant(v: Vec<f64>) -> Self {
        let dim = v.len();
        let n = norm(&v);
        Self {
            eval: Arc::new(move |_, _| v.clone()),
            dim,
            zero: n == 0.0,
            beta: 1.0,
            p: f64::INFINITY,
            declared_norm: n,
            lipschitz: Some(0.0),
        }
    }

    pub fn from_fn<F>(dim: usize, f: F, beta: f64, p: f64, declared_norm: f64) -> Self
    where
        F: Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            dim,
            zero: false,
            beta,
            p,
            declared_norm,
            lipschitz: None,
        }
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Vec<f64> {
        (self.eval)(t, x)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Component fields of `b(t, ·)` on a grid.
    pub fn on_grid(&self, t: f64, grid: Grid) -> Vec<GridField> {
        let vals: Vec<Vec<f64>> = (0..grid.len()).map(|i| self.eval(t, &grid.point(i))).collect();
        (0..self.dim)
            .map(|a| GridField::new(grid, vals.iter().map(|v| v[a]).collect()).expect("grid length"))
            .collect()
    }

    /// Largest `|b(t, x)|` over the grid points and the given times.
    pub fn sup_on_grid(&self, times: &[f64], grid: Grid) -> f64 {
        let mut m: f64 = 0.0;
        for &t in times {
            for i in 0..grid.len() {
                m = m.max(norm(&self.eval(t, &grid.point(i))));
            }
        }
        m
    }
}

/// How the jump part is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Spectral when the kernel does not depend on `z`, quadrature otherwise.
    Auto,
    Spectral,
    Quadrature,
}

#[derive(Debug, Clone)]
pub struct OperatorOptions {
    /// Small-jump cutoff of the quadrature; defaults to `2^{−(j_max+1)} L / 2π`.
    pub eps_q: Option<f64>,
    /// Cut of an infinite power-law tail.
    pub tail_cut: f64,
    /// Allowed ratio of the reported remainder to `max(‖ℒu‖_∞, ‖u‖_∞)`.
    pub remainder_tol: f64,
    pub route: Route,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        Self {
            eps_q: None,
            tail_cut: 10.0 * DEFAULT_TAIL_RADIUS,
            remainder_tol: 0.25,
            route: Route::Auto,
        }
    }
}

/// Error budget of one application.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorReport {
    /// Taylor bound for the dropped `|z| ≤ ε_q` part plus the dropped tail.
    pub remainder: f64,
    pub route: Route,
    pub eps_q: f64,
}

/// `ℒ_t = ℒ^σ_ν + b·∇` bound to a grid.
#[derive(Debug, Clone)]
pub struct NonlocalOperator {
    model: LevyModel,
    kernel: JumpKernel,
    drift: DriftField,
    grid: Grid,
    opts: OperatorOptions,
    wavevectors: Arc<Vec<Vec<f64>>>,
    points: Arc<Vec<Vec<f64>>>,
    symbol: OnceLock<Arc<Vec<Complex64>>>,
    nodes: OnceLock<Arc<(Vec<JumpNode>, f64)>>,
}

impl NonlocalOperator {
    pub fn new(model: LevyModel, kernel: JumpKernel, drift: DriftField, grid: Grid) -> Result<Self> {
        Self::with_options(model, kernel, drift, grid, OperatorOptions::default())
    }

    pub fn with_options(
        model: LevyModel,
        kernel: JumpKernel,
        drift: DriftField,
        grid: Grid,
        opts: OperatorOptions,
    ) -> Result<Self> {
        if model.dim() != grid.dim || drift.dim() != grid.dim {
            return Err(Error::InvalidArgument(format!(
                "model dimension {}, drift dimension {} and grid dimension {} differ",
                model.dim(),
                drift.dim(),
                grid.dim
            )));
        }
        if model.alpha() > 1.0 {
            return Err(Error::InvalidModel(format!(
                "the generator is implemented for alpha in (0, 1], got {}",
                model.alpha()
            )));
        }
        if opts.route == Route::Spectral && kernel.depends_on_z() {
            return Err(Error::InvalidArgument(
                "the spectral route needs a kernel that does not depend on z".into(),
            ));
        }
        Ok(Self {
            model,
            kernel,
            drift,
            grid,
            opts,
            wavevectors: Arc::new(grid.wavevectors()),
            points: Arc::new((0..grid.len()).map(|i| grid.point(i)).collect()),
            symbol: OnceLock::new(),
            nodes: OnceLock::new(),
        })
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn kernel(&self) -> &JumpKernel {
        &self.kernel
    }

    pub fn drift(&self) -> &DriftField {
        &self.drift
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn route(&self) -> Route {
        match self.opts.route {
            Route::Auto if self.kernel.depends_on_z() => Route::Quadrature,
            Route::Auto => Route::Spectral,
            r => r,
        }
    }

    pub fn eps_q(&self) -> f64 {
        self.opts
            .eps_q
            .unwrap_or_else(|| 2f64.powi(-(self.grid.j_max() + 1)) * self.grid.length / (2.0 * PI))
    }

    /// `ψ_ν` at every grid wavevector, in spectral order.
    pub fn symbol_on_grid(&self) -> Result<Arc<Vec<Complex64>>> {
        if let Some(v) = self.symbol.get() {
            return Ok(v.clone());
        }
        let v = Arc::new(self.model.symbol_table(&self.wavevectors)?);
        Ok(self.symbol.get_or_init(|| v).clone())
    }

    fn quadrature_nodes(&self) -> Result<Arc<(Vec<JumpNode>, f64)>> {
        if let Some(v) = self.nodes.get() {
            return Ok(v.clone());
        }
        let max_freq = self.grid.nyquist() * (self.grid.dim as f64).sqrt();
        let v = Arc::new(self.model.jump_nodes(self.eps_q(), max_freq, self.opts.tail_cut)?);
        Ok(self.nodes.get_or_init(|| v).clone())
    }

    /// `ψ_ν(D) u`, the constant-kernel jump part with `σ ≡ 1`.
    pub fn reference(&self, u: &GridField) -> Result<GridField> {
        self.check_grid(u)?;
        Ok(u.multiplier_table(&self.symbol_on_grid()?))
    }

    /// `ℒ_t u`.
    pub fn apply(&self, u: &GridField, t: f64) -> Result<GridField> {
        self.apply_with_report(u, t).map(|(v, _)| v)
    }

    pub fn apply_with_report(&self, u: &GridField, t: f64) -> Result<(GridField, GeneratorReport)> {
        let (mut out, report) = self.jump_part(u, t)?;
        if !self.drift.is_zero() {
            let grad = u.gradient();
            let b = self.drift.on_grid(t, self.grid);
            out = add_products(&out, &b, &grad);
        }
        Ok((out, report))
    }

    /// `ℒ^σ_ν u` alone.
    pub fn jump_part(&self, u: &GridField, t: f64) -> Result<(GridField, GeneratorReport)> {
        self.check_grid(u)?;
        match self.route() {
            Route::Quadrature => self.jump_quadrature(u, t),
            _ => {
                let base = self.reference(u)?;
                let out = if self.kernel.is_constant() {
                    base.scale(self.kernel.eval(t, &self.points[0], &vec![0.0; self.grid.dim]))
                } else {
                    let zero = vec![0.0; self.grid.dim];
                    let vals = base
                        .values()
                        .iter()
                        .zip(self.points.iter())
                        .map(|(v, x)| v * self.kernel.eval(t, x, &zero))
                        .collect();
                    GridField::new(self.grid, vals)?
                };
                Ok((
                    out,
                    GeneratorReport {
                        remainder: 0.0,
                        route: Route::Spectral,
                        eps_q: 0.0,
                    },
                ))
            }
        }
    }

    fn jump_quadrature(&self, u: &GridField, t: f64) -> Result<(GridField, GeneratorReport)> {
        let nodes = self.quadrature_nodes()?;
        let (nodes, dropped) = (&nodes.0, nodes.1);
        let grid = self.grid;
        let comp = self.model.compensated();
        let spec = u.spectrum();
        let grad = if comp { Some(u.gradient()) } else { None };
        let base = u.values();
        let n = grid.len();
        let kernel = &self.kernel;
        let points = &self.points;
        let wv = &self.wavevectors;

        const CHUNK: usize = 64;
        let partials: Vec<Vec<f64>> = nodes
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = vec![0.0; n];
                let mut buf = vec![Complex64::new(0.0, 0.0); n];
                for node in chunk {
                    for ((b, c), k) in buf.iter_mut().zip(spec).zip(wv.iter()) {
                        let ph: f64 = k.iter().zip(&node.z).map(|(a, b)| a * b).sum();
                        *b = c * Complex64::new(ph.cos(), ph.sin());
                    }
                    fft_nd(&mut buf, grid, true);
                    let small = norm(&node.z) <= 1.0;
                    let sig_z = if kernel.depends_on_x() {
                        None
                    } else {
                        Some(kernel.eval(t, &points[0], &node.z))
                    };
                    for i in 0..n {
                        let mut diff = buf[i].re - base[i];
                        if small {
                            if let Some(g) = &grad {
                                let zg: f64 = g.iter().zip(&node.z).map(|(f, z)| f.values()[i] * z).sum();
                                diff -= zg;
                            }
                        }
                        let s = sig_z.unwrap_or_else(|| kernel.eval(t, &points[i], &node.z));
                        acc[i] += node.weight * s * diff;
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![0.0; n];
        for p in &partials {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v;
            }
        }
        let out = GridField::new(grid, out)?;

        let eps = self.eps_q();
        let second_order = comp || (self.model.is_symmetric() && self.kernel.even_in_z);
        let small = if second_order {
            0.5 * derivative_tensor_norm(u, 2).max_abs() * self.kernel.kappa1 * self.model.small_moment_bound(eps, 2)
        } else {
            derivative_tensor_norm(u, 1).max_abs() * self.kernel.kappa1 * self.model.small_moment_bound(eps, 1)
        };
        let remainder = small + 2.0 * u.max_abs() * self.kernel.kappa1 * dropped;
        let scale = out.max_abs().max(u.max_abs());
        if remainder > self.opts.remainder_tol * scale {
            return Err(Error::Refinement {
                remainder,
                allowed: self.opts.remainder_tol * scale,
            });
        }
        Ok((
            out,
            GeneratorReport {
                remainder,
                route: Route::Quadrature,
                eps_q: eps,
            },
        ))
    }

    fn check_grid(&self, u: &GridField) -> Result<()> {
        if u.grid() != self.grid {
            return Err(Error::GridMismatch(format!(
                "operator grid {:?} but field grid {:?}",
                self.grid,
                u.grid()
            )));
        }
        Ok(())
    }
}

/// `out + Σ_a b_a ∂_a u`.
fn add_products(out: &GridField, b: &[GridField], grad: &[GridField]) -> GridField {
    let mut v = out.values().to_vec();
    for (ba, ga) in b.iter().zip(grad) {
        for ((o, x), y) in v.iter_mut().zip(ba.values()).zip(ga.values()) {
            *o += x * y;
        }
    }
    GridField::new(out.grid(), v).expect("same grid")
}

/// Smallest grid that resolves the shell `2^{j−1} ≤ |ξ| ≤ 2^{j+1}` below its
/// top dyadic block.
fn grid_for_block(dim: usize, j: i32) -> Result<Grid> {
    let n = 2usize.pow((j + 3).max(5) as u32);
    Grid::periodic(dim, n)
}

/// For each trial, a random field band-limited to `2^{j−1} ≤ |ξ| ≤ 2^{j+1}`
/// is generated and `sign(u(x₀)) ℒ^κ_ν u(x₀) / (2^{αj} ‖u‖_∞)` is returned at
/// the point `x₀` of largest modulus. The maximum is searched on a 4× finer
/// grid by exact trigonometric interpolation.
pub fn maxprinciple_check<R: Rng + ?Sized>(
    model: &LevyModel,
    kappa: f64,
    j: i32,
    trials: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if j < 0 {
        return Err(Error::InvalidArgument(format!("block index {j} must be >= 0")));
    }
    let grid = grid_for_block(model.dim(), j)?;
    let op = NonlocalOperator::new(
        model.clone(),
        JumpKernel::constant(kappa)?,
        DriftField::zero(model.dim()),
        grid,
    )?;
    let factor = if model.dim() == 1 { 4 } else { 2 };
    let lo = 2f64.powi(j - 1);
    let hi = 2f64.powi(j + 1);
    let mut out = Vec::with_capacity(trials);
    for _ in 0..trials {
        let u = lp::random_band_limited(grid, lo, hi, rng);
        if u.max_abs() < 1e-300 {
            continue;
        }
        let lu = op.apply(&u, 0.0)?;
        let fine_u = u.upsample(factor)?;
        let fine_lu = lu.upsample(factor)?;
        let (idx, &m) = fine_u
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("non-empty grid");
        let val = m.signum() * fine_lu.values()[idx] / (2f64.powf(model.alpha() * j as f64) * m.abs());
        out.push(val);
    }
    Ok(out)
}

/// One evaluation of the `L^p` energy identity for a single block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coercivity {
    /// `∫ |Λ_j f|^{p−2} Λ_j f · ℒ^κ_ν Λ_j f`.
    pub lhs: f64,
    /// `2^{αj} ‖Λ_j f‖_p^p`.
    pub rhs_scale: f64,
    /// `‖Λ_j f‖_p^p`.
    pub norm_pp: f64,
}

pub fn coercivity_check(
    f: &GridField,
    j: i32,
    p: f64,
    model: &LevyModel,
    kappa: f64,
) -> Result<Coercivity> {
    if j < 0 || !(p >= 2.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "coercivity needs j >= 0 and finite p >= 2, got j = {j}, p = {p}"
        )));
    }
    let grid = f.grid();
    let partition = DyadicPartition::for_grid(grid)?;
    let block = lp::project(f, j, &partition)?;
    let norm_pp = block.lp_norm(p).powf(p);
    if !(norm_pp > 0.0) || block.max_abs() <= 1e-13 * f.max_abs() {
        return Err(Error::UndefinedRatio(format!("block {j} of the field vanishes")));
    }
    let op = NonlocalOperator::new(
        model.clone(),
        JumpKernel::constant(kappa)?,
        DriftField::zero(grid.dim),
        grid,
    )?;
    let lb = op.apply(&block, 0.0)?;
    let terms: Vec<f64> = block
        .values()
        .iter()
        .zip(lb.values())
        .map(|(v, l)| v.abs().powf(p - 2.0) * v * l)
        .collect();
    let lhs = crate::quad::pairwise_sum(&terms) * grid.cell_volume();
    Ok(Coercivity {
        lhs,
        rhs_scale: 2f64.powf(model.alpha() * j as f64) * norm_pp,
        norm_pp,
    })
}

/// Fit `lhs / ‖Λ_j f‖_p^p ≤ −C0 2^{αj} + C1` over samples from several
/// blocks: `C0` is the negated regression slope and `C1` the smallest
/// non-negative offset that makes every sample satisfy the bound.
pub fn fit_coercivity(samples: &[Coercivity]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let x: Vec<f64> = samples.iter().map(|s| s.rhs_scale / s.norm_pp).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.lhs / s.norm_pp).collect();
    let (_, slope) = linear_fit(&x, &y);
    let c0 = -slope;
    let c1 = x.iter().zip(&y).map(|(a, b)| b + c0 * a).fold(0.0, f64::max);
    Ok((c0, c1))
}

/// `[Λ_j, ℒ^σ_ν] u` and its `L^p` norm.
#[allow(clippy::too_many_arguments)]
pub fn commutator_op(
    j: i32,
    u: &GridField,
    model: &LevyModel,
    kernel: &JumpKernel,
    thetabar: f64,
    gamma: f64,
    p: f64,
) -> Result<(GridField, f64)> {
    check_commutator_params(kernel.theta, thetabar, gamma)?;
    let grid = u.grid();
    let op = NonlocalOperator::new(model.clone(), kernel.clone(), DriftField::zero(grid.dim), grid)?;
    commutator_with(&op, j, u, p)
}

fn commutator_with(op: &NonlocalOperator, j: i32, u: &GridField, p: f64) -> Result<(GridField, f64)> {
    let partition = DyadicPartition::for_grid(u.grid())?;
    let lu = op.jump_part(u, 0.0)?.0;
    let a = lp::project(&lu, j, &partition)?;
    let b = op.jump_part(&lp::project(u, j, &partition)?, 0.0)?.0;
    let field = a.sub(&b)?;
    let n = field.lp_norm(p);
    Ok((field, n))
}

fn check_commutator_params(theta: f64, thetabar: f64, gamma: f64) -> Result<()> {
    if !(thetabar > 0.0 && thetabar - theta < gamma && gamma <= thetabar) {
        return Err(Error::Precondition(format!(
            "need thetabar > 0 and thetabar - theta < gamma <= thetabar, got theta = {theta}, thetabar = {thetabar}, gamma = {gamma}"
        )));
    }
    Ok(())
}

/// Decay fit for the operator commutator.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorFit {
    pub norms: Vec<f64>,
    /// Slope of `log₂(‖[Λ_j, ℒ]u‖_p / (‖σ‖_∞ ‖u‖_{B^{α−ϑ̄+γ}_{p,∞}}))` in `j`.
    pub slope: f64,
    /// Predicted slope `−(ϑ − ϑ̄ + γ)`.
    pub predicted: f64,
}

pub fn commutator_decay(
    js: &[i32],
    u: &GridField,
    model: &LevyModel,
    kernel: &JumpKernel,
    thetabar: f64,
    gamma: f64,
    p: f64,
) -> Result<CommutatorFit> {
    check_commutator_params(kernel.theta, thetabar, gamma)?;
    let partition = DyadicPartition::for_grid(u.grid())?;
    let bn = besov_norm(u, model.alpha() - thetabar + gamma, p, f64::INFINITY, &partition)?.value;
    let scale = kernel.kappa1 * bn;
    let op = NonlocalOperator::new(model.clone(), kernel.clone(), DriftField::zero(u.grid().dim), u.grid())?;
    let norms: Vec<f64> = js
        .iter()
        .map(|&j| commutator_with(&op, j, u, p).map(|r| r.1))
        .collect::<Result<_>>()?;
    let x: Vec<f64> = js.iter().map(|&j| j as f64).collect();
    let y: Vec<f64> = norms.iter().map(|v| (v / scale).log2()).collect();
    Ok(CommutatorFit {
        slope: linear_fit(&x, &y).1,
        predicted: -(kernel.theta - thetabar + gamma),
        norms,
    })
}
