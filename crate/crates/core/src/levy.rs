//! Stable-like Lévy measures.
//!
//! A measure is parameterized as `κ(θ, r) Σ(dθ) r^{-1-α} dr` on the unit ball
//! plus a finite measure on `{|z| > 1}`. The spherical part `Σ` is a finite
//! list of weighted unit directions; isotropic measures are represented by a
//! quasi-uniform set of directions.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::quad::{adaptive, GaussLegendre};

const UNIT_TOL: f64 = 1e-12;

/// One weighted direction of the spherical measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub direction: Vec<f64>,
    pub weight: f64,
}

/// Finite symmetric measure on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalMeasure {
    dim: usize,
    atoms: Vec<Atom>,
    symmetric: bool,
}

impl SphericalMeasure {
    /// Symmetric measure from `(direction, weight)` pairs.
    pub fn new(dim: usize, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let m = Self::new_unchecked_symmetry(dim, atoms)?;
        if !m.symmetric {
            return Err(Error::InvalidModel(
                "spherical measure is not symmetric: every atom needs its antipode".into(),
            ));
        }
        Ok(m)
    }

    /// Like [`SphericalMeasure::new`] but accepts asymmetric atom sets, for
    /// the compensator-by-quadrature mode.
    pub fn new_unchecked_symmetry(dim: usize, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        let mut out = Vec::with_capacity(atoms.len());
        for (direction, weight) in atoms {
            if direction.len() != dim {
                return Err(Error::InvalidModel(format!(
                    "direction {direction:?} is not {dim}-dimensional"
                )));
            }
            let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidModel(format!(
                    "direction {direction:?} has norm {norm}, expected 1"
                )));
            }
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "atom weight {weight} must be positive and finite"
                )));
            }
            out.push(Atom { direction, weight });
        }
        let symmetric = out.iter().all(|a| {
            out.iter().any(|b| {
                (a.weight - b.weight).abs() <= 1e-12 * a.weight
                    && a.direction
                        .iter()
                        .zip(&b.direction)
                        .all(|(x, y)| (x + y).abs() <= UNIT_TOL)
            })
        });
        Ok(Self {
            dim,
            atoms: out,
            symmetric,
        })
    }

    /// `±e_i` for every coordinate axis, each with weight `w` (the cylindrical case).
    pub fn axes(dim: usize, w: f64) -> Result<Self> {
        let mut atoms = Vec::new();
        for i in 0..dim {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; dim];
                e[i] = s;
                atoms.push((e, w));
            }
        }
        Self::new(dim, atoms)
    }

    /// `m` equally spaced directions on the circle with total mass `total`
    /// (`m` must be even so the set is symmetric).
    pub fn uniform_circle(m: usize, total: f64) -> Result<Self> {
        if m == 0 || m % 2 != 0 {
            return Err(Error::InvalidModel(
                "uniform circle needs an even, positive number of directions".into(),
            ));
        }
        let atoms = (0..m)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / m as f64;
                (vec![a.cos(), a.sin()], total / m as f64)
            })
            .collect();
        Self::new(2, atoms)
    }

    /// The zero measure; valid as a value, rejected by every operation that
    /// needs mass.
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            atoms: Vec::new(),
            symmetric: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }
}

/// Radial profile `κ(θ, r)` on `S^{d-1} × (0, 1]` with declared bounds.
#[derive(Clone)]
pub enum RadialProfile {
    Constant(f64),
    Function {
        f: Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>,
        low: f64,
        high: f64,
    },
}

impl RadialProfile {
    pub fn function<F>(f: F, low: f64, high: f64) -> Self
    where
        F: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    {
        RadialProfile::Function {
            f: Arc::new(f),
            low,
            high,
        }
    }

    pub fn eval(&self, dir: &[f64], r: f64) -> f64 {
        match self {
            RadialProfile::Constant(c) => *c,
            RadialProfile::Function { f, .. } => f(dir, r),
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            RadialProfile::Constant(c) => (*c, *c),
            RadialProfile::Function { low, high, .. } => (*low, *high),
        }
    }
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialProfile::Constant(c) => write!(f, "Constant({c})"),
            RadialProfile::Function { low, high, .. } => {
                write!(f, "Function {{ low: {low}, high: {high} }}")
            }
        }
    }
}

/// Finite measure on `{|z| > 1}`.
#[derive(Debug, Clone, PartialEq)]
pub enum TailMeasure {
    Empty,
    /// `Σ(dθ) r^{-1-α} dr` on `(1, r_max]`; `r_max` may be infinite.
    PowerLaw { r_max: f64 },
    /// Explicit `(point, mass)` list.
    Atoms(Vec<(Vec<f64>, f64)>),
}

/// Default truncation radius of the power-law tail.
pub const DEFAULT_TAIL_RADIUS: f64 = 100.0;

/// Stable-like Lévy measure.
#[derive(Debug, Clone)]
pub struct LevyModel {
    alpha: f64,
    spherical: SphericalMeasure,
    profile: RadialProfile,
    tail: TailMeasure,
    pure_stable: bool,
    warnings: Vec<String>,
    /// Radial integrals by (atom, projection), shared between clones.
    radial_cache: Arc<Mutex<HashMap<(usize, u64), Complex64>>>,
}

/// One node of a discretized jump measure.
#[derive(Debug, Clone)]
pub struct JumpNode {
    pub z: Vec<f64>,
    pub weight: f64,
}

impl LevyModel {
    pub fn new(
        alpha: f64,
        spherical: SphericalMeasure,
        profile: RadialProfile,
        tail: TailMeasure,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidModel(format!("alpha = {alpha} not in (0, 2)")));
        }
        let (low, high) = profile.bounds();
        if !(low > 0.0 && high.is_finite() && low <= high) {
            return Err(Error::InvalidModel(format!(
                "radial profile bounds ({low}, {high}) must satisfy 0 < low <= high < inf"
            )));
        }
        match &tail {
            TailMeasure::Empty => {}
            TailMeasure::PowerLaw { r_max } => {
                if r_max.is_infinite() {
                    return Err(Error::InvalidModel(
                        "an infinite power-law tail is only available through LevyModel::pure_stable"
                            .into(),
                    ));
                }
                if !(*r_max > 1.0) {
                    return Err(Error::InvalidModel(format!("tail radius {r_max} must exceed 1")));
                }
            }
            TailMeasure::Atoms(list) => {
                for (z, m) in list {
                    let r = norm(z);
                    if z.len() != spherical.dim() || r <= 1.0 || !(*m > 0.0 && m.is_finite()) {
                        return Err(Error::InvalidModel(format!(
                            "tail atom {z:?} with mass {m} must lie outside the unit ball with finite positive mass"
                        )));
                    }
                }
            }
        }
        let mut warnings = Vec::new();
        if alpha > 1.0 {
            warnings.push(format!(
                "alpha = {alpha} is in the subcritical range; regime-specific operations expect alpha <= 1"
            ));
        }
        if !spherical.is_symmetric() {
            warnings.push("asymmetric spherical measure: compensator drift is computed by quadrature".into());
        }
        Ok(Self {
            alpha,
            spherical,
            profile,
            tail,
            pure_stable: false,
            warnings,
            radial_cache: Arc::default(),
        })
    }

    /// The `α`-stable measure `Σ(dθ) r^{-1-α} dr` on all of `(0, ∞)`.
    pub fn pure_stable(alpha: f64, spherical: SphericalMeasure) -> Result<Self> {
        let mut m = Self::new(
            alpha,
            spherical,
            RadialProfile::Constant(1.0),
            TailMeasure::Empty,
        )?;
        m.tail = TailMeasure::PowerLaw { r_max: f64::INFINITY };
        m.pure_stable = true;
        Ok(m)
    }

    /// Constant profile `κ ≡ 1` on the unit ball with the default power-law tail.
    pub fn stable_like(alpha: f64, spherical: SphericalMeasure) -> Result<Self> {
        Self::new(
            alpha,
            spherical,
            RadialProfile::Constant(1.0),
            TailMeasure::PowerLaw {
                r_max: DEFAULT_TAIL_RADIUS,
            },
        )
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.spherical.dim()
    }

    pub fn spherical(&self) -> &SphericalMeasure {
        &self.spherical
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn tail(&self) -> &TailMeasure {
        &self.tail
    }

    pub fn is_pure_stable(&self) -> bool {
        self.pure_stable
    }

    pub fn is_symmetric(&self) -> bool {
        self.spherical.is_symmetric()
            && match &self.tail {
                TailMeasure::Atoms(list) => list.iter().all(|(z, m)| {
                    list.iter().any(|(y, n)| {
                        (m - n).abs() <= 1e-12 * m
                            && z.iter().zip(y).all(|(a, b)| (a + b).abs() <= 1e-12)
                    })
                }),
                _ => true,
            }
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Whether `α ≥ 1`, i.e. the small jumps carry the `iξ·z` compensator.
    pub fn compensated(&self) -> bool {
        self.alpha >= 1.0
    }

    fn ensure_mass(&self) -> Result<()> {
        if self.spherical.atoms().is_empty() {
            return Err(Error::InvalidModel("spherical measure is empty".into()));
        }
        Ok(())
    }

    fn radial_density(&self, dir: &[f64], r: f64) -> f64 {
        let k = if self.pure_stable || r > 1.0 {
            1.0
        } else {
            self.profile.eval(dir, r)
        };
        k * r.powf(-1.0 - self.alpha)
    }

    /// Upper end of the radial support along atom directions.
    fn radial_max(&self) -> f64 {
        match &self.tail {
            TailMeasure::PowerLaw { r_max } => *r_max,
            _ => 1.0,
        }
    }

    /// Minimum over a quasi-uniform direction grid of `Σ_k w_k |θ₀·θ_k|^α`.
    pub fn check_nondegeneracy(&self, resolution: usize) -> Result<f64> {
        self.ensure_mass()?;
        let dirs = direction_grid(self.dim(), resolution.max(1))?;
        let alpha = self.alpha;
        Ok(dirs
            .iter()
            .map(|t0| {
                self.spherical
                    .atoms()
                    .iter()
                    .map(|a| a.weight * dot(t0, &a.direction).abs().powf(alpha))
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min))
    }

    /// Lévy symbol `ψ(ξ) = ∫ (e^{iξ·z} − 1 − 1_{α≥1} 1_{|z|≤1} iξ·z) ν(dz)`.
    pub fn symbol(&self, xi: &[f64]) -> Result<Complex64> {
        self.symbol_with(xi, &SymbolOptions::default())
    }

    pub fn symbol_with(&self, xi: &[f64], opts: &SymbolOptions) -> Result<Complex64> {
        if xi.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "frequency {xi:?} does not match dimension {}",
                self.dim()
            )));
        }
        if xi.iter().all(|v| *v == 0.0) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let rule = GaussLegendre::new(opts.gauss_points);
        let mut total = Complex64::new(0.0, 0.0);
        for atom in self.spherical.atoms() {
            let a = dot(xi, &atom.direction);
            if a == 0.0 {
                continue;
            }
            let radial = self.radial_symbol(&rule, &atom.direction, a, opts)?;
            total += radial * atom.weight;
        }
        if let TailMeasure::Atoms(list) = &self.tail {
            for (z, m) in list {
                let phase = dot(xi, z);
                total += Complex64::new(cos_m1(phase), phase.sin()) * *m;
            }
        }
        Ok(total)
    }

    /// `∫_0^{r_max} (e^{iar} − 1 − comp) κ(θ,r) r^{-1-α} dr` along one direction.
    fn radial_symbol(
        &self,
        rule: &GaussLegendre,
        dir: &[f64],
        a: f64,
        opts: &SymbolOptions,
    ) -> Result<Complex64> {
        let alpha = self.alpha;
        let comp = self.compensated();
        let (k_low, k_high) = if self.pure_stable { (1.0, 1.0) } else { self.profile.bounds() };
        let abs_a = a.abs();
        // Symmetric measures have real symbols; the odd part cancels pairwise.
        let want_im = !self.is_symmetric();

        let mut re = 0.0;
        let mut im = 0.0;
        let mut residual = 0.0;

        // Unit ball, by dyadic shells downward from r = 1.
        let mut hi: f64 = 1.0;
        let mut shells = 0;
        loop {
            let lo = 0.5 * hi;
            let (r_part, i_part, res) = self.integrate_panels(rule, dir, a, lo, hi, comp, want_im, opts)?;
            re += r_part;
            im += i_part;
            residual += res;
            hi = lo;
            shells += 1;
            // Bounds on what is left in (0, hi].
            let re_rest = k_high * a * a * hi.powf(2.0 - alpha) / (2.0 * (2.0 - alpha));
            let im_rest = if !want_im {
                0.0
            } else if comp {
                k_high * abs_a.powi(3) * hi.powf(3.0 - alpha) / (6.0 * (3.0 - alpha))
            } else {
                // leading term a∫_0^δ κ r^{-α} dr is added below; what remains
                // is the cubic Taylor term and the profile variation
                k_high * abs_a.powi(3) * hi.powf(3.0 - alpha) / (6.0 * (3.0 - alpha))
                    + (k_high - k_low) * abs_a * hi.powf(1.0 - alpha) / (1.0 - alpha)
            };
            let scale = re.abs().max(1e-300);
            if (re_rest <= opts.rel_tol * 1e-3 * scale && im_rest <= opts.rel_tol * 1e-3 * scale)
                || shells > 400
            {
                if want_im && !comp {
                    let k_mid = if self.pure_stable { 1.0 } else { self.profile.eval(dir, 0.5 * hi) };
                    im += k_mid * a * hi.powf(1.0 - alpha) / (1.0 - alpha);
                }
                residual += re_rest + im_rest;
                break;
            }
        }

        // Radial continuation beyond the unit ball.
        let r_max = self.radial_max();
        if r_max > 1.0 {
            if r_max.is_finite() {
                let (r_part, i_part, res) = self.integrate_panels(rule, dir, a, 1.0, r_max, false, want_im, opts)?;
                re += r_part;
                im += i_part;
                residual += res;
            } else {
                let (r_part, i_part, res) = self.infinite_tail(rule, a, opts)?;
                re += r_part;
                im += i_part;
                residual += res;
            }
        }

        let tol = opts.rel_tol * re.abs().max(opts.abs_floor);
        if residual > tol.max(1e-13) * 10.0 {
            return Err(Error::Tolerance {
                residual,
                tolerance: tol,
            });
        }
        Ok(Complex64::new(re, im))
    }

    /// Panels of width at most a fraction of the oscillation period, each
    /// integrated adaptively.
    #[allow(clippy::too_many_arguments)]
    fn integrate_panels(
        &self,
        rule: &GaussLegendre,
        dir: &[f64],
        a: f64,
        lo: f64,
        hi: f64,
        comp: bool,
        want_im: bool,
        opts: &SymbolOptions,
    ) -> Result<(f64, f64, f64)> {
        let width = hi - lo;
        let n = ((width * a.abs() / PI).ceil() as usize).max(1);
        let h = width / n as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        let mut res = 0.0;
        for p in 0..n {
            let a0 = lo + p as f64 * h;
            let b0 = if p + 1 == n { hi } else { a0 + h };
            let mut fr = |r: f64| cos_m1(a * r) * self.radial_density(dir, r);
            let ir = adaptive(rule, a0, b0, opts.rel_tol * 1e-2, 1e-16, 30, &mut fr)?;
            let mut fi = |r: f64| {
                let s = if comp && r <= 1.0 {
                    sin_m_id(a * r)
                } else {
                    (a * r).sin()
                };
                s * self.radial_density(dir, r)
            };
            re += ir.value;
            res += ir.residual;
            if want_im {
                let ii = adaptive(rule, a0, b0, opts.rel_tol * 1e-2, 1e-16, 30, &mut fi)?;
                im += ii.value;
                res += ii.residual;
            }
        }
        Ok((re, im, res))
    }

    /// `∫_1^∞ (e^{iar} − 1) r^{-1-α} dr` for the pure-stable tail: finite
    /// panels up to a multiple of the period, then an asymptotic remainder.
    fn infinite_tail(
        &self,
        rule: &GaussLegendre,
        a: f64,
        opts: &SymbolOptions,
    ) -> Result<(f64, f64, f64)> {
        let alpha = self.alpha;
        let beta = 1.0 + alpha;
        let abs_a = a.abs();
        let sign = a.signum();
        // Substitute s = |a| r: ∫_{|a|}^∞ (cos s + i sign sin s) s^{-β} ds · |a|^α
        let periods = 400.0;
        let s_end = 2.0 * PI * ((abs_a / (2.0 * PI)).ceil() + periods);
        let n = ((s_end - abs_a) / PI).ceil() as usize;
        let h = (s_end - abs_a) / n as f64;
        let mut c = 0.0;
        let mut s = 0.0;
        let mut res = 0.0;
        for p in 0..n {
            let a0 = abs_a + p as f64 * h;
            let b0 = if p + 1 == n { s_end } else { a0 + h };
            let ic = adaptive(rule, a0, b0, opts.rel_tol * 1e-2, 1e-17, 30, &mut |x: f64| {
                x.cos() * x.powf(-beta)
            })?;
            let is = adaptive(rule, a0, b0, opts.rel_tol * 1e-2, 1e-17, 30, &mut |x: f64| {
                x.sin() * x.powf(-beta)
            })?;
            c += ic.value;
            s += is.value;
            res += ic.residual + is.residual;
        }
        // Integration by parts on [S, ∞) with S a multiple of 2π.
        c += beta * s_end.powf(-beta - 1.0) - beta * (beta + 1.0) * (beta + 2.0) * s_end.powf(-beta - 3.0);
        s += s_end.powf(-beta) - beta * (beta + 1.0) * s_end.powf(-beta - 2.0);
        res += beta * (beta + 1.0) * (beta + 2.0) * (beta + 3.0) * (beta + 4.0) * s_end.powf(-beta - 5.0);
        let scale = abs_a.powf(alpha);
        let re = scale * c - 1.0 / alpha;
        let im = sign * scale * s;
        Ok((re, im, res * scale))
    }

    /// `ψ` at many frequencies, sharing radial integrals between frequencies
    /// with equal projections on an atom.
    pub fn symbol_table(&self, xis: &[Vec<f64>]) -> Result<Vec<Complex64>> {
        let opts = SymbolOptions::default();
        let rule = GaussLegendre::new(opts.gauss_points);
        let mut memo = self.radial_cache.lock().unwrap_or_else(|e| e.into_inner());
        let mut out = Vec::with_capacity(xis.len());
        for xi in xis {
            if xi.len() != self.dim() {
                return Err(Error::InvalidArgument(format!(
                    "frequency {xi:?} does not match dimension {}",
                    self.dim()
                )));
            }
            let mut total = Complex64::new(0.0, 0.0);
            for (k, atom) in self.spherical.atoms().iter().enumerate() {
                let a = dot(xi, &atom.direction);
                if a == 0.0 {
                    continue;
                }
                let key = (k, a.to_bits());
                let radial = match memo.get(&key) {
                    Some(v) => *v,
                    None => {
                        let v = self.radial_symbol(&rule, &atom.direction, a, &opts)?;
                        memo.insert(key, v);
                        v
                    }
                };
                total += radial * atom.weight;
            }
            if let TailMeasure::Atoms(list) = &self.tail {
                for (z, m) in list {
                    let phase = dot(xi, z);
                    total += Complex64::new(cos_m1(phase), phase.sin()) * *m;
                }
            }
            out.push(total);
        }
        Ok(out)
    }

    /// Fit `Re ψ(ξ) ≤ −C0 |ξ|^α + C1` on the given samples.
    ///
    /// `C0` is the smallest ratio `−Re ψ / |ξ|^α` among the samples in the
    /// top quarter of the sampled `|ξ|` range, and `C1` the smallest
    /// non-negative offset that makes the bound hold on every sample.
    pub fn symbol_bound_fit(&self, xi_samples: &[Vec<f64>]) -> Result<SymbolBound> {
        if self.spherical.atoms().is_empty() {
            return Err(Error::Degenerate("zero-mass model has no coercive symbol".into()));
        }
        if xi_samples.is_empty() {
            return Err(Error::InvalidArgument("no frequency samples".into()));
        }
        let mut pts = Vec::with_capacity(xi_samples.len());
        for xi in xi_samples {
            let n = norm(xi);
            if n == 0.0 {
                continue;
            }
            let re = self.symbol(xi)?.re;
            pts.push((n, n.powf(self.alpha), -re));
        }
        let n_max = pts.iter().map(|p| p.0).fold(0.0, f64::max);
        let c0 = pts
            .iter()
            .filter(|p| p.0 >= 0.25 * n_max)
            .map(|p| p.2 / p.1)
            .fold(f64::INFINITY, f64::min);
        if !(c0 > 0.0) {
            return Err(Error::Degenerate(format!("fitted C0 = {c0} is not positive")));
        }
        let c1 = pts
            .iter()
            .map(|p| c0 * p.1 - p.2)
            .fold(0.0, f64::max);
        Ok(SymbolBound { c0, c1 })
    }

    /// `ν({|z| > ε})`.
    pub fn restricted_mass(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidArgument(format!("eps = {eps} not in (0, 1]")));
        }
        let small: f64 = self
            .spherical
            .atoms()
            .iter()
            .map(|a| a.weight * self.shell_mass(&a.direction, eps))
            .sum();
        Ok(small + self.tail_mass())
    }

    /// `∫_ε^1 κ(θ, r) r^{-1-α} dr` along one direction.
    fn shell_mass(&self, dir: &[f64], eps: f64) -> f64 {
        if eps >= 1.0 {
            return 0.0;
        }
        let alpha = self.alpha;
        match &self.profile {
            RadialProfile::Constant(c) if !self.pure_stable => c * (eps.powf(-alpha) - 1.0) / alpha,
            _ if self.pure_stable => (eps.powf(-alpha) - 1.0) / alpha,
            _ => {
                // Substitute r = e^s to tame the singular weight.
                let rule = GaussLegendre::new(12);
                let lo = eps.ln();
                let mut f = |s: f64| {
                    let r = s.exp();
                    self.profile.eval(dir, r) * r.powf(-alpha)
                };
                adaptive(&rule, lo, 0.0, 1e-12, 1e-15, 30, &mut f)
                    .map(|i| i.value)
                    .unwrap_or_else(|e| match e {
                        Error::Tolerance { .. } => rule.integrate(lo, 0.0, f),
                        _ => f64::NAN,
                    })
            }
        }
    }

    /// `ν({|z| > 1})`.
    pub fn tail_mass(&self) -> f64 {
        let alpha = self.alpha;
        match &self.tail {
            TailMeasure::Empty => 0.0,
            TailMeasure::PowerLaw { r_max } => {
                self.spherical.total_mass() * (1.0 - r_max.powf(-alpha)) / alpha
            }
            TailMeasure::Atoms(list) => list.iter().map(|(_, m)| m).sum(),
        }
    }

    /// Upper bound for `∫_{|z|≤ε} |z|^k ν(dz)`, `k ∈ {1, 2}`.
    pub fn small_moment_bound(&self, eps: f64, k: i32) -> f64 {
        let (_, high) = self.profile.bounds();
        let kk = k as f64;
        if kk <= self.alpha {
            return f64::INFINITY;
        }
        self.spherical.total_mass() * high * eps.powf(kk - self.alpha) / (kk - self.alpha)
    }

    /// Compensator `∫_{ε<|z|≤1} z ν(dz)`; zero for symmetric measures.
    pub fn small_jump_mean(&self, eps: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for a in self.spherical.atoms() {
            let m1 = self.radial_moment1(&a.direction, eps);
            for (o, d) in out.iter_mut().zip(&a.direction) {
                *o += a.weight * m1 * d;
            }
        }
        out
    }

    fn radial_moment1(&self, dir: &[f64], eps: f64) -> f64 {
        let alpha = self.alpha;
        let rule = GaussLegendre::new(12);
        let lo = eps.ln();
        let mut f = |s: f64| {
            let r = s.exp();
            let k = if self.pure_stable { 1.0 } else { self.profile.eval(dir, r) };
            k * r.powf(1.0 - alpha)
        };
        adaptive(&rule, lo, 0.0, 1e-12, 1e-15, 30, &mut f)
            .map(|i| i.value)
            .unwrap_or(f64::NAN)
    }

    /// Quadrature nodes for `ν` restricted to `{|z| > eps_q}`.
    ///
    /// Radial panels are narrower than `panel_scale / max_freq` so that
    /// plane waves up to `max_freq` are integrated accurately. Infinite tails
    /// are cut at `tail_cut`; the dropped mass is returned alongside.
    pub fn jump_nodes(&self, eps_q: f64, max_freq: f64, tail_cut: f64) -> Result<(Vec<JumpNode>, f64)> {
        self.ensure_mass()?;
        if !(eps_q > 0.0 && eps_q < 1.0) {
            return Err(Error::InvalidArgument(format!("cutoff {eps_q} not in (0, 1)")));
        }
        let rule = GaussLegendre::new(8);
        let max_width = 4.0 / max_freq.max(1.0);
        let mut nodes = Vec::new();
        for atom in self.spherical.atoms() {
            let dir = &atom.direction;
            let push_range = |lo: f64, hi: f64, nodes: &mut Vec<JumpNode>| {
                let n = (((hi - lo) / max_width).ceil() as usize).max(1);
                let h = (hi - lo) / n as f64;
                for p in 0..n {
                    let a0 = lo + p as f64 * h;
                    for (r, w) in rule.mapped(a0, a0 + h) {
                        nodes.push(JumpNode {
                            z: dir.iter().map(|d| d * r).collect(),
                            weight: atom.weight * w * self.radial_density(dir, r),
                        });
                    }
                }
            };
            let mut hi: f64 = 1.0;
            while hi > eps_q {
                let lo = (0.5 * hi).max(eps_q);
                push_range(lo, hi, &mut nodes);
                hi = lo;
            }
            let r_max = self.radial_max();
            if r_max > 1.0 {
                let cut = r_max.min(tail_cut.max(1.0));
                if cut > 1.0 {
                    push_range(1.0, cut, &mut nodes);
                }
            }
        }
        if let TailMeasure::Atoms(list) = &self.tail {
            for (z, m) in list {
                nodes.push(JumpNode {
                    z: z.clone(),
                    weight: *m,
                });
            }
        }
        let dropped = match &self.tail {
            TailMeasure::PowerLaw { r_max } if *r_max > tail_cut && tail_cut >= 1.0 => {
                self.spherical.total_mass() * (tail_cut.powf(-self.alpha) - r_max.powf(-self.alpha))
                    / self.alpha
            }
            _ => 0.0,
        };
        Ok((nodes, dropped))
    }
}

/// Fitted constants of the coercivity bound `Re ψ(ξ) ≤ −C0 |ξ|^α + C1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolBound {
    pub c0: f64,
    pub c1: f64,
}

/// Quadrature controls for [`LevyModel::symbol_with`].
#[derive(Debug, Clone)]
pub struct SymbolOptions {
    pub rel_tol: f64,
    pub gauss_points: usize,
    /// Floor on the magnitude used to turn the relative tolerance into an
    /// absolute one.
    pub abs_floor: f64,
}

impl Default for SymbolOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            gauss_points: 10,
            abs_floor: 1e-6,
        }
    }
}

/// Draws from `ν` restricted to `{|z| > ε}` and normalized.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    model: LevyModel,
    eps: f64,
    /// Cumulative mass per atom of the `(ε, 1]` part.
    small_cdf: Vec<f64>,
    small_mass: f64,
    tail_mass: f64,
    tail_cdf: Vec<f64>,
}

impl JumpSampler {
    pub fn new(model: &LevyModel, eps: f64) -> Result<Self> {
        let total = model.restricted_mass(eps)?;
        if !(total > 0.0) {
            return Err(Error::Sampling(format!(
                "no mass outside the ball of radius {eps}"
            )));
        }
        let mut small_cdf = Vec::new();
        let mut acc = 0.0;
        for a in model.spherical().atoms() {
            acc += a.weight * model.shell_mass(&a.direction, eps);
            small_cdf.push(acc);
        }
        let tail_mass = model.tail_mass();
        let tail_cdf = match model.tail() {
            TailMeasure::PowerLaw { .. } => {
                let mut acc = 0.0;
                model
                    .spherical()
                    .atoms()
                    .iter()
                    .map(|a| {
                        acc += a.weight;
                        acc
                    })
                    .collect()
            }
            TailMeasure::Atoms(list) => {
                let mut acc = 0.0;
                list.iter()
                    .map(|(_, m)| {
                        acc += m;
                        acc
                    })
                    .collect()
            }
            TailMeasure::Empty => Vec::new(),
        };
        Ok(Self {
            model: model.clone(),
            eps,
            small_cdf,
            small_mass: acc,
            tail_mass,
            tail_cdf,
        })
    }

    /// Total mass `λ_ε` of the restricted measure.
    pub fn mass(&self) -> f64 {
        self.small_mass + self.tail_mass
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let alpha = self.model.alpha;
        let u: f64 = rng.random::<f64>() * self.mass();
        if u < self.small_mass {
            let k = pick(&self.small_cdf, u);
            let atom = &self.model.spherical().atoms()[k];
            let r = loop {
                let v: f64 = rng.random();
                let e = self.eps.powf(-alpha);
                let r = (e - v * (e - 1.0)).powf(-1.0 / alpha);
                if self.model.pure_stable {
                    break r;
                }
                match &self.model.profile {
                    RadialProfile::Constant(_) => break r,
                    RadialProfile::Function { f, high, .. } => {
                        let acc: f64 = rng.random();
                        if acc * high <= f(&atom.direction, r) {
                            break r;
                        }
                    }
                }
            };
            atom.direction.iter().map(|d| d * r).collect()
        } else {
            let v = u - self.small_mass;
            match self.model.tail() {
                TailMeasure::PowerLaw { r_max } => {
                    let total = self.model.spherical().total_mass();
                    let k = pick(&self.tail_cdf, v / self.tail_mass * total);
                    let dir = &self.model.spherical().atoms()[k].direction;
                    let w: f64 = rng.random();
                    let lo = r_max.powf(-alpha);
                    let r = (1.0 - w * (1.0 - lo)).powf(-1.0 / alpha);
                    dir.iter().map(|d| d * r).collect()
                }
                TailMeasure::Atoms(list) => list[pick(&self.tail_cdf, v)].0.clone(),
                TailMeasure::Empty => unreachable!("tail has zero mass"),
            }
        }
    }

    /// Analytic CDF of `|z|` for the constant-profile case.
    pub fn radial_cdf(&self, r: f64) -> f64 {
        let alpha = self.model.alpha;
        let total = self.mass();
        let s = self.model.spherical().total_mass();
        let k = if self.model.pure_stable {
            1.0
        } else {
            match self.model.profile {
                RadialProfile::Constant(c) => c,
                _ => f64::NAN,
            }
        };
        if r <= self.eps {
            return 0.0;
        }
        let small = |x: f64| s * k * (self.eps.powf(-alpha) - x.powf(-alpha)) / alpha;
        if r <= 1.0 {
            return small(r) / total;
        }
        let head = small(1.0);
        match self.model.tail() {
            TailMeasure::PowerLaw { r_max } => {
                let x = r.min(*r_max);
                (head + s * (1.0 - x.powf(-alpha)) / alpha) / total
            }
            TailMeasure::Atoms(list) => {
                (head + list.iter().filter(|(z, _)| norm(z) <= r).map(|(_, m)| m).sum::<f64>())
                    / total
            }
            TailMeasure::Empty => 1.0,
        }
    }
}

fn pick(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|c| *c <= u).min(cdf.len() - 1)
}

/// Convenience wrapper: one draw from `ν|_{|z|>ε}` normalized.
pub fn sample_jump<R: Rng + ?Sized>(model: &LevyModel, eps: f64, rng: &mut R) -> Result<Vec<f64>> {
    Ok(JumpSampler::new(model, eps)?.sample(rng))
}

/// Quasi-uniform unit directions: both signs in 1-d, `n` angles on the
/// circle, a Fibonacci lattice of `n` points on the 2-sphere.
pub fn direction_grid(dim: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    match dim {
        1 => Ok(vec![vec![1.0], vec![-1.0]]),
        2 => Ok((0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                // exact zeros on the axes
                let snap = |v: f64| if v.abs() < 1e-14 { 0.0 } else { v };
                vec![snap(a.cos()), snap(a.sin())]
            })
            .collect()),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            Ok((0..n)
                .map(|k| {
                    let y = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let r = (1.0 - y * y).sqrt();
                    let t = golden * k as f64;
                    vec![r * t.cos(), y, r * t.sin()]
                })
                .collect())
        }
        _ => Err(Error::InvalidArgument(format!(
            "direction grids are provided for d <= 3, got {dim}"
        ))),
    }
}

/// `cos x − 1` without cancellation.
fn cos_m1(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    -2.0 * s * s
}

/// `sin x − x` without cancellation.
fn sin_m_id(x: f64) -> f64 {
    if x.abs() > 0.5 {
        return x.sin() - x;
    }
    let x2 = x * x;
    let mut term = -x * x2 / 6.0;
    let mut sum = term;
    let mut k = 3.0;
    while term.abs() > 1e-18 * sum.abs() {
        term *= -x2 / ((k + 1.0) * (k + 2.0));
        sum += term;
        k += 2.0;
    }
    sum
}

/// Write `(xi_1..xi_d, re_psi, im_psi)` rows as CSV.
pub fn symbol_table_csv(model: &LevyModel, xis: &[Vec<f64>]) -> Result<String> {
    let d = model.dim();
    let mut out = String::new();
    let header: Vec<String> = (1..=d)
        .map(|i| format!("xi_{i}"))
        .chain(["re_psi".to_string(), "im_psi".to_string()])
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for xi in xis {
        let psi = model.symbol(xi)?;
        let row: Vec<String> = xi
            .iter()
            .map(|v| format!("{v}"))
            .chain([format!("{}", psi.re), format!("{}", psi.im)])
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::ks_statistic;

    fn two_atom(alpha: f64) -> LevyModel {
        LevyModel::new(
            alpha,
            SphericalMeasure::axes(1, 1.0).unwrap(),
            RadialProfile::Constant(1.0),
            TailMeasure::Empty,
        )
        .unwrap()
    }

    #[test]
    fn spherical_validation() {
        assert!(SphericalMeasure::new(1, vec![(vec![1.0], 1.0)]).is_err());
        assert!(SphericalMeasure::new(2, vec![(vec![1.0, 1.0], 1.0), (vec![-1.0, -1.0], 1.0)]).is_err());
        assert!(SphericalMeasure::new(1, vec![(vec![1.0], 1.0), (vec![-1.0], 2.0)]).is_err());
        let m = SphericalMeasure::new_unchecked_symmetry(1, vec![(vec![1.0], 1.0)]).unwrap();
        assert!(!m.is_symmetric());
    }

    #[test]
    fn model_validation() {
        let s = SphericalMeasure::axes(1, 1.0).unwrap();
        assert!(LevyModel::new(0.0, s.clone(), RadialProfile::Constant(1.0), TailMeasure::Empty).is_err());
        assert!(LevyModel::new(0.5, s.clone(), RadialProfile::Constant(0.0), TailMeasure::Empty).is_err());
        assert!(LevyModel::new(
            0.5,
            s.clone(),
            RadialProfile::Constant(1.0),
            TailMeasure::PowerLaw { r_max: f64::INFINITY }
        )
        .is_err());
        let sub = LevyModel::new(1.5, s, RadialProfile::Constant(1.0), TailMeasure::Empty).unwrap();
        assert_eq!(sub.warnings().len(), 1);
    }

    #[test]
    fn nondegeneracy_examples() {
        assert_eq!(two_atom(0.5).check_nondegeneracy(10).unwrap(), 2.0);
        let cyl = LevyModel::stable_like(1.0, SphericalMeasure::axes(2, 1.0).unwrap()).unwrap();
        assert!((cyl.check_nondegeneracy(10_000).unwrap() - 2.0).abs() < 1e-12);
        let deg = LevyModel::new(
            0.5,
            SphericalMeasure::new(2, vec![(vec![1.0, 0.0], 1.0), (vec![-1.0, 0.0], 1.0)]).unwrap(),
            RadialProfile::Constant(1.0),
            TailMeasure::Empty,
        )
        .unwrap();
        assert!(deg.check_nondegeneracy(4).unwrap().abs() < 1e-12);
        let empty = LevyModel::new(0.5, SphericalMeasure::empty(1), RadialProfile::Constant(1.0), TailMeasure::Empty)
            .unwrap();
        assert!(matches!(empty.check_nondegeneracy(4), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn symbol_at_zero_and_symmetry() {
        let m = LevyModel::stable_like(0.7, SphericalMeasure::uniform_circle(6, 1.0).unwrap()).unwrap();
        assert_eq!(m.symbol(&[0.0, 0.0]).unwrap(), Complex64::new(0.0, 0.0));
        let a = m.symbol(&[1.3, -2.1]).unwrap();
        let b = m.symbol(&[-1.3, 2.1]).unwrap();
        assert!((a - b).norm() < 1e-10);
        assert!(a.im.abs() < 1e-10);
        assert!(a.re < 0.0);
    }

    #[test]
    fn pure_stable_closed_form() {
        // ∫_0^∞ (cos r − 1) r^{-3/2} dr = −√(2π), doubled by the two atoms.
        let m = LevyModel::pure_stable(0.5, SphericalMeasure::axes(1, 1.0).unwrap()).unwrap();
        let psi = m.symbol(&[1.0]).unwrap();
        let expected = -2.0 * (2.0 * PI).sqrt();
        assert!((psi.re - expected).abs() < 1e-7 * expected.abs(), "{psi}");
        assert!(psi.im.abs() < 1e-9);
    }

    #[test]
    fn pure_stable_alpha_one_closed_form() {
        // ∫_0^∞ (1 − cos r) r^{-2} dr = π/2.
        let m = LevyModel::pure_stable(1.0, SphericalMeasure::axes(1, 1.0).unwrap()).unwrap();
        let psi = m.symbol(&[3.0]).unwrap();
        assert!((psi.re + 3.0 * PI).abs() < 1e-6, "{psi}");
    }

    #[test]
    fn asymmetric_symbol_has_imaginary_part() {
        let s = SphericalMeasure::new_unchecked_symmetry(1, vec![(vec![1.0], 1.0)]).unwrap();
        let m = LevyModel::new(0.5, s, RadialProfile::Constant(1.0), TailMeasure::Empty).unwrap();
        let psi = m.symbol(&[2.0]).unwrap();
        // ∫_0^1 sin(2r) r^{-3/2} dr > 0
        assert!(psi.im > 0.1);
        assert!(!m.is_symmetric());
        assert!(m.small_jump_mean(0.1)[0] > 0.0);
    }

    #[test]
    fn restricted_mass_examples() {
        let m = two_atom(0.5);
        assert!((m.restricted_mass(0.25).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(m.restricted_mass(1.0).unwrap(), 0.0);
        assert!(m.restricted_mass(0.0).is_err());
        let mut prev = f64::INFINITY;
        for k in 1..20 {
            let e = k as f64 / 20.0;
            let v = m.restricted_mass(e).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn restricted_mass_with_profile_matches_quadrature() {
        let prof = RadialProfile::function(|_, r| 1.0 + 0.5 * r, 1.0, 1.5);
        let m = LevyModel::new(0.5, SphericalMeasure::axes(1, 1.0).unwrap(), prof, TailMeasure::Empty).unwrap();
        // 2 ∫_ε^1 (1 + r/2) r^{-3/2} dr = 2[(2ε^{-1/2} − 2) + (1 − ε^{1/2})]
        let e: f64 = 0.09;
        let exact = 2.0 * ((2.0 / e.sqrt() - 2.0) + (1.0 - e.sqrt()));
        assert!((m.restricted_mass(e).unwrap() - exact).abs() < 1e-9);
    }

    #[test]
    fn sampler_radial_law() {
        let m = LevyModel::stable_like(0.5, SphericalMeasure::axes(1, 1.0).unwrap()).unwrap();
        let s = JumpSampler::new(&m, 0.1).unwrap();
        let mut rng = stream(11, 0);
        let radii: Vec<f64> = (0..100_000).map(|_| s.sample(&mut rng)[0].abs()).collect();
        let ks = ks_statistic(&radii, |r| s.radial_cdf(r));
        assert!(ks < 0.01, "KS = {ks}");
    }

    #[test]
    fn sampler_direction_frequencies() {
        let sph = SphericalMeasure::new(1, vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)]).unwrap();
        let m = LevyModel::new(0.5, sph, RadialProfile::Constant(1.0), TailMeasure::Empty).unwrap();
        let s = JumpSampler::new(&m, 0.2).unwrap();
        let mut rng = stream(5, 0);
        let n = 20_000;
        let pos = (0..n).filter(|_| s.sample(&mut rng)[0] > 0.0).count() as f64;
        let sd = (n as f64 * 0.25).sqrt();
        assert!((pos - 0.5 * n as f64).abs() < 3.0 * sd);
    }

    #[test]
    fn sampler_rejects_empty_mass() {
        let m = two_atom(0.5);
        assert!(matches!(JumpSampler::new(&m, 1.0), Err(Error::Sampling(_))));
    }

    #[test]
    fn symbol_table_has_header() {
        let m = two_atom(0.5);
        let csv = symbol_table_csv(&m, &[vec![1.0], vec![2.0]]).unwrap();
        assert!(csv.starts_with("xi_1,re_psi,im_psi\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
