//! Regime classification and the mollification study.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::nonlocal::{DriftField, JumpKernel};
use crate::sde::{SimConfig, Simulator};
use crate::stats::ks_two_sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        })
    }
}

/// Regime by the stability index and whether `α + β ≥ 1`.
pub fn classify_regime(alpha: f64, beta: f64) -> Result<(Regime, bool)> {
    if !(alpha > 0.0 && alpha < 2.0) || !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!(
            "need alpha in (0, 2) and beta in [0, 1], got ({alpha}, {beta})"
        )));
    }
    let regime = if alpha > 1.0 {
        Regime::Subcritical
    } else if alpha == 1.0 {
        Regime::Critical
    } else {
        Regime::Supercritical
    };
    Ok((regime, alpha + beta >= 1.0))
}

/// Smooth approximation of `a · sign(sin x) |sin x|^β`:
/// `a · sin x · (sin² x + δ²)^{(β−1)/2}`, exact at `δ = 0`.
pub fn mollified_holder_drift(dim: usize, amplitude: f64, beta: f64, delta: f64) -> DriftField {
    let d2 = delta * delta;
    let f = move |_: f64, x: &[f64]| {
        x.iter()
            .map(|v| {
                let s = v.sin();
                if d2 == 0.0 {
                    amplitude * s.signum() * s.abs().powf(beta)
                } else {
                    amplitude * s * (s * s + d2).powf(0.5 * (beta - 1.0))
                }
            })
            .collect()
    };
    DriftField::from_fn(dim, f, beta, f64::INFINITY, amplitude.abs() * (1.0 + 2f64.powf(1.0 - beta)))
}

/// Terminal laws under a sequence of drift mollifications.
#[derive(Debug, Clone)]
pub struct RegimeStudy {
    pub regime: Regime,
    pub balance: bool,
    pub deltas: Vec<f64>,
    /// First coordinate of `X_T` per level, path-aligned across levels.
    pub terminals: Vec<Vec<f64>>,
    /// KS distance between consecutive levels.
    pub ks: Vec<f64>,
    /// Whether the distances decrease along the refinement.
    pub decreasing: bool,
}

/// Simulate `X_T` for every mollification scale with common random numbers
/// (the same proposals for all levels) and compare consecutive laws.
pub fn regime_study(
    model: &LevyModel,
    kernel: &JumpKernel,
    amplitude: f64,
    beta: f64,
    deltas: &[f64],
    cfg: &SimConfig,
) -> Result<RegimeStudy> {
    if deltas.len() < 3 {
        return Err(Error::Config("the regime study needs at least three mollification scales".into()));
    }
    if deltas.windows(2).any(|w| !(w[1] < w[0])) || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Config("mollification scales must be positive and decreasing".into()));
    }
    let (regime, balance) = classify_regime(model.alpha(), beta)?;
    let d = model.dim();
    let sims: Vec<Simulator> = deltas
        .iter()
        .map(|&delta| Simulator::new(model, kernel, &mollified_holder_drift(d, amplitude, beta, delta), cfg))
        .collect::<Result<_>>()?;
    // proposals depend on the model, kernel bound and seed only
    let per_path: Vec<Vec<f64>> = sims[0].map_paths(cfg.n_paths, |_, props| {
        sims.iter()
            .map(|s| s.terminal(&cfg.x0, props).map(|x| x[0]))
            .collect::<Result<Vec<f64>>>()
    })?;
    let terminals: Vec<Vec<f64>> = (0..deltas.len())
        .map(|k| per_path.iter().map(|row| row[k]).collect())
        .collect();
    let ks: Vec<f64> = terminals.windows(2).map(|w| ks_two_sample(&w[0], &w[1])).collect();
    let decreasing = ks.windows(2).all(|w| w[1] < w[0]);
    Ok(RegimeStudy {
        regime,
        balance,
        deltas: deltas.to_vec(),
        terminals,
        ks,
        decreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regimes_by_alpha() {
        assert_eq!(classify_regime(1.5, 0.0).unwrap().0, Regime::Subcritical);
        assert_eq!(classify_regime(1.0, 0.0).unwrap(), (Regime::Critical, true));
        assert_eq!(classify_regime(0.5, 0.4).unwrap(), (Regime::Supercritical, false));
        assert_eq!(classify_regime(0.5, 0.5).unwrap(), (Regime::Supercritical, true));
    }

    #[test]
    fn out_of_range_is_rejected() {
        assert!(classify_regime(0.0, 0.5).is_err());
        assert!(classify_regime(2.0, 0.5).is_err());
        assert!(classify_regime(0.5, 1.5).is_err());
        assert!(classify_regime(0.5, -0.1).is_err());
    }

    #[test]
    fn mollification_converges_pointwise() {
        let exact = mollified_holder_drift(1, 0.7, 0.3, 0.0);
        let fine = mollified_holder_drift(1, 0.7, 0.3, 1e-9);
        for x in [0.1, 1.0, 2.5, 4.0, 6.0] {
            let a = exact.eval(0.0, &[x])[0];
            let b = fine.eval(0.0, &[x])[0];
            assert!((a - b).abs() < 1e-9, "{a} {b}");
        }
    }
}
