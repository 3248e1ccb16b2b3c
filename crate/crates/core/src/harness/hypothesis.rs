//! Sampled certification of the standing hypotheses on `ν`, `σ` and `b`.

use rand::Rng;

use super::regime::classify_regime;
use super::report::{Check, Status};
use crate::levy::LevyModel;
use crate::lp::{self, DyadicPartition, Grid};
use crate::nonlocal::{DriftField, JumpKernel};
use crate::rng::domain_stream;
use crate::stats::linear_fit;

/// Declared drift regularity may exceed the measured decay rate by this much.
pub const DECAY_SLACK: f64 = 0.25;

const MODULUS_EPS: f64 = 1e-4;

/// One PASS/WARN line per hypothesis.
pub fn hypothesis_check(
    model: &LevyModel,
    kernel: &JumpKernel,
    drift: &DriftField,
    grid: Grid,
    samples: usize,
    seed: u64,
) -> Vec<Check> {
    let mut out = Vec::new();
    let dim = model.dim();

    match model.check_nondegeneracy(64) {
        Ok(m) => out.push(Check::new(
            "nondegeneracy",
            Status::Pass,
            format!("min over directions of the projected mass {m:.4e}"),
        )),
        Err(e) => out.push(Check::new("nondegeneracy", Status::Warn, e.to_string())),
    }

    let mut rng = domain_stream(seed, "hypothesis", 0);
    let kc = kernel.sample_check(dim, grid.length, 1.0, samples, &mut rng);
    out.push(Check::new(
        "kernel bounds",
        Status::warn_unless(kc.bounds_hold),
        format!(
            "observed [{:.6}, {:.6}] within declared [{}, {}]",
            kc.observed_min, kc.observed_max, kernel.kappa0, kernel.kappa1
        ),
    ));
    out.push(Check::new(
        "kernel holder",
        Status::warn_unless(kc.holder_holds),
        format!(
            "largest quotient {:.6} against kappa2 = {} at theta = {}",
            kc.holder_quotient, kernel.kappa2, kernel.theta
        ),
    ));

    out.push(modulus_check(model, kernel, grid, samples, seed));
    out.push(drift_check(drift, grid));

    match classify_regime(model.alpha(), drift.beta.clamp(0.0, 1.0)) {
        Ok((regime, balance)) => {
            let a = model.alpha();
            let b = drift.beta;
            out.push(Check::new(
                "regime",
                Status::warn_unless(balance),
                format!("{regime}, alpha + beta = {}", a + b),
            ));
            let need = 1.0 - 0.5 * a;
            out.push(Check::new(
                "drift regularity for the transform",
                Status::warn_unless(b > need),
                format!("beta = {b} against 1 - alpha/2 = {need}"),
            ));
            let s = a + b - 1.0;
            let p_ok = s > 0.0 && (drift.p.is_infinite() || drift.p > dim as f64 / s);
            out.push(Check::new(
                "drift integrability",
                Status::warn_unless(p_ok),
                if s > 0.0 {
                    format!("p = {} against d / (alpha + beta - 1) = {}", drift.p, dim as f64 / s)
                } else {
                    format!("no admissible p since alpha + beta = {} <= 1", a + b)
                },
            ));
        }
        Err(e) => out.push(Check::new("regime", Status::Warn, e.to_string())),
    }
    out
}

fn modulus_check(model: &LevyModel, kernel: &JumpKernel, grid: Grid, samples: usize, seed: u64) -> Check {
    const NAME: &str = "kernel modulus";
    if !kernel.depends_on_x() {
        return Check::new(NAME, Status::Pass, "kernel does not depend on x");
    }
    let Some(rho) = &kernel.modulus else {
        return Check::new(NAME, Status::Warn, "x-dependent kernel without a declared modulus");
    };
    let nodes = match model.jump_nodes(MODULUS_EPS, 1.0, 1e3) {
        Ok((n, _)) => n,
        Err(e) => return Check::new(NAME, Status::Warn, e.to_string()),
    };
    // jumps below the cutoff are left out of the sum, which can only hide a
    // violation of size (κ₁ − κ₀) ∫_{|z|≤ε} |z| dν
    let below = (kernel.kappa1 - kernel.kappa0) * model.small_moment_bound(MODULUS_EPS, 1);
    if !below.is_finite() {
        return Check::new(NAME, Status::Warn, "∫ (|z| ∧ 1) dν diverges");
    }
    let dim = grid.dim;
    let mut rng = domain_stream(seed, "hypothesis", 1);
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..samples {
        let t: f64 = rng.random();
        let x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * grid.length).collect();
        let y: Vec<f64> = x.iter().map(|v| v + (2.0 * rng.random::<f64>() - 1.0)).collect();
        let dist = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if dist == 0.0 {
            continue;
        }
        let lhs: f64 = nodes
            .iter()
            .map(|n| {
                let r = n.z.iter().map(|v| v * v).sum::<f64>().sqrt();
                (kernel.eval(t, &x, &n.z) - kernel.eval(t, &y, &n.z)).abs() * r.min(1.0) * n.weight
            })
            .sum();
        let rhs = dist * (rho.eval_spectral(&x) + rho.eval_spectral(&y));
        if lhs > rhs * (1.0 + 1e-9) + 1e-14 {
            violations += 1;
        }
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        } else if lhs > 0.0 {
            worst = f64::INFINITY;
        }
    }
    Check::new(
        NAME,
        Status::warn_unless(violations == 0),
        format!("{violations} violations in {samples} pairs, largest lhs/rhs {worst:.4}, sub-cutoff bound {below:.2e}"),
    )
}

/// Measured decay of the dyadic blocks of each drift component.
pub fn drift_decay(drift: &DriftField, grid: Grid, p: f64) -> crate::Result<f64> {
    let part = DyadicPartition::for_grid(grid)?;
    let mut rate = f64::INFINITY;
    for comp in drift.on_grid(0.0, grid) {
        let norms: Vec<(f64, f64)> = part
            .blocks()
            .filter(|j| *j >= 0)
            .map(|j| lp::project(&comp, j, &part).map(|b| (j as f64, b.lp_norm(p))))
            .collect::<crate::Result<_>>()?;
        let top = norms.iter().map(|n| n.1).fold(0.0, f64::max);
        let used: Vec<&(f64, f64)> = norms.iter().filter(|n| n.1 > 1e-10 * top.max(1e-300)).collect();
        if used.len() < 3 || top == 0.0 {
            continue;
        }
        // the lowest blocks see the profile, the decay shows at high j
        let tail = &used[used.len() / 2..];
        if tail.len() < 2 {
            continue;
        }
        let xs: Vec<f64> = tail.iter().map(|n| n.0).collect();
        let ys: Vec<f64> = tail.iter().map(|n| n.1.log2()).collect();
        let slope = linear_fit(&xs, &ys).1;
        rate = rate.min(-slope);
    }
    Ok(rate)
}

fn drift_check(drift: &DriftField, grid: Grid) -> Check {
    const NAME: &str = "drift besov";
    if drift.is_zero() {
        return Check::new(NAME, Status::Pass, "zero drift");
    }
    let p = drift.p;
    let part = match DyadicPartition::for_grid(grid) {
        Ok(p) => p,
        Err(e) => return Check::new(NAME, Status::Warn, e.to_string()),
    };
    let mut measured: f64 = 0.0;
    for comp in drift.on_grid(0.0, grid) {
        match lp::besov_norm(&comp, drift.beta, p, f64::INFINITY, &part) {
            Ok(n) => measured = measured.max(n.value),
            Err(e) => return Check::new(NAME, Status::Warn, e.to_string()),
        }
    }
    let decay = match drift_decay(drift, grid, p) {
        Ok(d) => d,
        Err(e) => return Check::new(NAME, Status::Warn, e.to_string()),
    };
    let norm_ok = measured <= drift.declared_norm * (1.0 + 1e-9);
    let decay_ok = drift.beta <= decay + DECAY_SLACK;
    let decay_text = if decay.is_finite() { format!("{decay:.3}") } else { "band-limited".into() };
    Check::new(
        NAME,
        Status::warn_unless(norm_ok && decay_ok),
        format!(
            "measured norm {measured:.4} vs declared {}; block decay {decay_text} vs declared beta {}",
            drift.declared_norm, drift.beta
        ),
    )
}
