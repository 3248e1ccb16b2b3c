//! Littlewood–Paley decomposition on periodic grids.
//!
//! All norms are torus surrogates of the whole-space quantities: blocks are
//! Fourier multipliers on the grid's discrete spectrum and `L^p` norms are
//! cell-volume weighted sums (`p = ∞` is the exact grid maximum).

mod field;
mod partition;

pub use field::{fft_nd, lp_norm, Grid, GridField};
pub use partition::DyadicPartition;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::levy::norm;
use crate::stats::linear_fit;

/// `Λ_j f = ρ_j(D) f` (`χ(D) f` for `j = −1`).
pub fn project(f: &GridField, j: i32, partition: &DyadicPartition) -> Result<GridField> {
    partition.check_block(f.grid(), j)?;
    Ok(f.real_multiplier(|xi| DyadicPartition::block(j, norm(xi))))
}

/// `S_j f = Σ_{i ≤ j−1} Λ_i f`.
pub fn low_pass(f: &GridField, j: i32) -> GridField {
    f.real_multiplier(|xi| DyadicPartition::low_pass(j, norm(xi)))
}

/// All blocks `Λ_{−1} f, …, Λ_{j_max} f`.
pub fn blocks(f: &GridField, partition: &DyadicPartition) -> Result<Vec<GridField>> {
    partition.blocks().map(|j| project(f, j, partition)).collect()
}

/// Truncated Besov norm together with the weighted contribution of the top
/// block, which indicates how much the truncation may hide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovNorm {
    pub value: f64,
    pub top_block: f64,
}

/// `‖f‖_{B^β_{p,q}}` summed over `j = −1..=j_max`.
pub fn besov_norm(
    f: &GridField,
    beta: f64,
    p: f64,
    q: f64,
    partition: &DyadicPartition,
) -> Result<BesovNorm> {
    check_exponent(p)?;
    check_exponent(q)?;
    let weighted: Vec<f64> = partition
        .blocks()
        .map(|j| project(f, j, partition).map(|b| 2f64.powf(beta * j as f64) * b.lp_norm(p)))
        .collect::<Result<_>>()?;
    let value = if q.is_infinite() {
        weighted.iter().fold(0.0, |m: f64, v| m.max(*v))
    } else {
        weighted.iter().map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    };
    Ok(BesovNorm {
        value,
        top_block: *weighted.last().unwrap(),
    })
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("exponent {p} must lie in [1, ∞]")));
    }
    Ok(())
}

/// `Δ^{β/2} f`, the multiplier `|ξ|^β`.
pub fn fractional_laplacian(f: &GridField, beta: f64) -> GridField {
    f.real_multiplier(|xi| {
        let r = norm(xi);
        if r == 0.0 {
            0.0
        } else {
            r.powf(beta)
        }
    })
}

/// `‖f‖_p + ‖Δ^{β/2} f‖_p`.
pub fn bessel_norm(f: &GridField, beta: f64, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if !(beta > 0.0 && beta <= 2.0) {
        return Err(Error::InvalidArgument(format!("beta = {beta} not in (0, 2]")));
    }
    Ok(f.lp_norm(p) + fractional_laplacian(f, beta).lp_norm(p))
}

/// Paraproduct `𝒯_f g = Σ_i S_{i−1} f · Λ_i g`.
pub fn paraproduct(f: &GridField, g: &GridField) -> Result<GridField> {
    f.check_same_grid(g)?;
    let partition = DyadicPartition::for_grid(f.grid())?;
    let fb = blocks(f, &partition)?;
    let gb = blocks(g, &partition)?;
    let grid = f.grid();
    let mut out = vec![0.0; grid.len()];
    // S_{i−1} f = Σ_{k ≤ i−2} Λ_k f; index 0 of `fb` is block −1.
    let mut low = vec![0.0; grid.len()];
    for (pos, i) in partition.blocks().enumerate() {
        let k = i - 2;
        if k >= -1 {
            let kpos = (k + 1) as usize;
            for (l, v) in low.iter_mut().zip(fb[kpos].values()) {
                *l += v;
            }
        }
        for ((o, l), g) in out.iter_mut().zip(&low).zip(gb[pos].values()) {
            *o += l * g;
        }
    }
    GridField::new(grid, out)
}

/// Remainder `ℛ(f, g) = Σ_i Σ_{|j|≤1} Λ_i f · Λ_{i−j} g`.
pub fn remainder(f: &GridField, g: &GridField) -> Result<GridField> {
    f.check_same_grid(g)?;
    let partition = DyadicPartition::for_grid(f.grid())?;
    let fb = blocks(f, &partition)?;
    let gb = blocks(g, &partition)?;
    let grid = f.grid();
    let nb = fb.len() as isize;
    let mut out = vec![0.0; grid.len()];
    for i in 0..nb {
        for j in -1..=1isize {
            let k = i - j;
            if k < 0 || k >= nb {
                continue;
            }
            for ((o, a), b) in out
                .iter_mut()
                .zip(fb[i as usize].values())
                .zip(gb[k as usize].values())
            {
                *o += a * b;
            }
        }
    }
    GridField::new(grid, out)
}

/// `[Λ_j, f] g = Λ_j(f g) − f Λ_j g`.
pub fn commutator_lp(j: i32, f: &GridField, g: &GridField) -> Result<GridField> {
    f.check_same_grid(g)?;
    let partition = DyadicPartition::for_grid(f.grid())?;
    let fg = f.mul(g)?;
    project(&fg, j, &partition)?.sub(&f.mul(&project(g, j, &partition)?)?)
}

/// Regression of `log₂ ‖[Λ_j, f] g‖_p` on `j`; returns `(slope, norms)`.
pub fn commutator_decay(f: &GridField, g: &GridField, js: &[i32], p: f64) -> Result<(f64, Vec<f64>)> {
    let norms: Vec<f64> = js
        .iter()
        .map(|&j| commutator_lp(j, f, g).map(|c| c.lp_norm(p)))
        .collect::<Result<_>>()?;
    let x: Vec<f64> = js.iter().map(|&j| j as f64).collect();
    let y: Vec<f64> = norms.iter().map(|v| v.log2()).collect();
    Ok((linear_fit(&x, &y).1, norms))
}

/// Random real field with Gaussian Fourier coefficients on the shell
/// `lo ≤ |ξ| ≤ hi`.
pub fn random_band_limited<R: Rng + ?Sized>(grid: Grid, lo: f64, hi: f64, rng: &mut R) -> GridField {
    let spec: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let (re, im): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            let r = norm(&grid.wavevector(i));
            if grid.is_nyquist(i) || r < lo || r > hi {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(re, im)
            }
        })
        .collect();
    GridField::from_spectrum(grid, spec)
}

/// Random field whose dyadic shells `2^k ≤ |ξ| < 2^{k+1}` have sup norm
/// exactly `2^{−s k}` before the whole is normalized to unit sup norm.
pub fn random_field<R: Rng + ?Sized>(grid: Grid, s: f64, rng: &mut R) -> GridField {
    let top = grid.nyquist();
    let mut acc = GridField::constant(grid, rng.sample::<f64, _>(StandardNormal));
    let mut k = 0;
    while 2f64.powi(k) < top {
        let lo = 2f64.powi(k);
        let shell = random_band_limited(grid, lo, (2.0 * lo).min(top) - 1e-9, rng);
        let m = shell.max_abs();
        if m > 0.0 {
            acc = acc.add(&shell.scale(2f64.powf(-s * k as f64) / m)).expect("same grid");
        }
        k += 1;
    }
    let m = acc.max_abs();
    if m > 0.0 { acc.scale(1.0 / m) } else { acc }
}

/// Pointwise `|∇^k g|` (Euclidean norm over all ordered `k`-tuples of axes).
pub fn derivative_tensor_norm(g: &GridField, k: u32) -> GridField {
    if k == 0 {
        return g.map(f64::abs);
    }
    let mut layer = vec![g.clone()];
    for _ in 0..k {
        layer = layer
            .iter()
            .flat_map(|h| (0..g.grid().dim).map(move |a| h.derivative(a)))
            .collect();
    }
    let mut sq = vec![0.0; g.grid().len()];
    for h in &layer {
        for (s, v) in sq.iter_mut().zip(h.values()) {
            *s += v * v;
        }
    }
    GridField::new(g.grid(), sq.into_iter().map(f64::sqrt).collect()).expect("same grid")
}

/// `‖∇^k Λ_j f‖_q / (2^{(k + d(1/p − 1/q)) j} ‖Λ_j f‖_p)`.
pub fn bernstein_ratio(f: &GridField, j: i32, k: u32, p: f64, q: f64) -> Result<f64> {
    check_exponent(p)?;
    check_exponent(q)?;
    let partition = DyadicPartition::for_grid(f.grid())?;
    let block = project(f, j, &partition)?;
    let denom_norm = block.lp_norm(p);
    if !(denom_norm > 1e-14 * f.lp_norm(p).max(f64::MIN_POSITIVE)) {
        return Err(Error::UndefinedRatio(format!("block {j} of the field vanishes")));
    }
    let d = f.grid().dim as f64;
    let expo = k as f64 + d * (1.0 / p - 1.0 / q);
    let num = derivative_tensor_norm(&block, k).lp_norm(q);
    Ok(num / (2f64.powf(expo * j as f64) * denom_norm))
}

/// Centered maximal function over periodic grid balls of radius `m h`,
/// `m = 0..n/2`. Quadratic cost; meant for small diagnostic grids.
pub fn maximal_function(f: &GridField) -> GridField {
    let grid = f.grid();
    let n = grid.n as isize;
    let total = grid.len();
    let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let max_r = grid.n / 2;
    let mut out = vec![0.0; total];
    for (idx, o) in out.iter_mut().enumerate() {
        let c = grid.multi_index(idx);
        // accumulate by squared distance bucket
        let mut sums = vec![0.0; max_r * max_r * grid.dim + 1];
        let mut counts = vec![0usize; sums.len()];
        for (jdx, v) in abs.iter().enumerate() {
            let m = grid.multi_index(jdx);
            let mut d2 = 0usize;
            for a in 0..grid.dim {
                let mut diff = (m[a] as isize - c[a] as isize).rem_euclid(n);
                if diff > n / 2 {
                    diff = n - diff;
                }
                d2 += (diff * diff) as usize;
            }
            if d2 < sums.len() {
                sums[d2] += v;
                counts[d2] += 1;
            }
        }
        let mut s = 0.0;
        let mut cnt = 0usize;
        let mut best: f64 = 0.0;
        for r in 0..=max_r {
            let lo = if r == 0 { 0 } else { (r - 1) * (r - 1) + 1 };
            for b in lo..=(r * r).min(sums.len() - 1) {
                s += sums[b];
                cnt += counts[b];
            }
            if cnt > 0 {
                best = best.max(s / cnt as f64);
            }
        }
        *o = best;
    }
    GridField::new(grid, out).expect("same grid")
}
