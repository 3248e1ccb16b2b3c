use crate::error::{Error, Result};
use crate::lp::field::Grid;

/// C^∞ step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Dyadic partition of unity `(χ, ρ)` with `χ = 1` on `B_{1/2}`,
/// `supp χ ⊆ B_1` and `ρ(ξ) = χ(ξ/2) − χ(ξ)`, so `supp ρ ⊆ B_2 \ B_{1/2}`.
/// The transition is a smooth step in `log₂|ξ|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicPartition {
    pub j_max: i32,
}

impl DyadicPartition {
    pub fn new(j_max: i32) -> Result<Self> {
        if j_max < 0 {
            return Err(Error::InvalidArgument(format!("j_max = {j_max} must be >= 0")));
        }
        Ok(Self { j_max })
    }

    /// The finest partition the grid resolves.
    pub fn for_grid(grid: Grid) -> Result<Self> {
        Self::new(grid.j_max())
    }

    /// Low-frequency profile `χ(|ξ|)`.
    pub fn chi(r: f64) -> f64 {
        if r <= 0.5 {
            1.0
        } else if r >= 1.0 {
            0.0
        } else {
            1.0 - smooth_step(r.log2() + 1.0)
        }
    }

    /// Annulus profile `ρ(|ξ|)`.
    pub fn rho(r: f64) -> f64 {
        Self::chi(0.5 * r) - Self::chi(r)
    }

    /// Multiplier `ρ_j(|ξ|)` of block `j ≥ −1`.
    pub fn block(j: i32, r: f64) -> f64 {
        match j {
            j if j < -1 => 0.0,
            -1 => Self::chi(r),
            j => Self::rho(r * 2f64.powi(-j)),
        }
    }

    /// Multiplier of `S_j = Σ_{i ≤ j−1} Λ_i`.
    pub fn low_pass(j: i32, r: f64) -> f64 {
        if j <= -1 {
            0.0
        } else {
            Self::chi(r * 2f64.powi(-j))
        }
    }

    pub fn blocks(&self) -> impl Iterator<Item = i32> {
        -1..=self.j_max
    }

    /// Sum of all block multipliers up to `j_max`.
    pub fn coverage(&self, r: f64) -> f64 {
        self.blocks().map(|j| Self::block(j, r)).sum()
    }

    pub fn check_block(&self, grid: Grid, j: i32) -> Result<()> {
        let limit = grid.j_max().min(self.j_max);
        if j < -1 || j > limit {
            return Err(Error::Resolution { block: j, limit });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supports() {
        for k in 0..2000 {
            let r = k as f64 * 0.01;
            let c = DyadicPartition::chi(r);
            let p = DyadicPartition::rho(r);
            assert!((0.0..=1.0).contains(&c) && (0.0..=1.0).contains(&p));
            if r >= 1.0 {
                assert_eq!(c, 0.0);
            }
            if r <= 0.5 || r >= 2.0 {
                assert_eq!(p, 0.0);
            }
        }
    }

    #[test]
    fn partition_identity_holds_below_top_block() {
        let p = DyadicPartition::new(5).unwrap();
        for k in 0..=3200 {
            let r = k as f64 * 0.01;
            assert!((p.coverage(r) - 1.0).abs() < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn non_adjacent_blocks_are_disjoint() {
        for k in 0..4000 {
            let r = k as f64 * 0.01;
            for j in -1..6 {
                for i in (j + 2)..8 {
                    assert_eq!(DyadicPartition::block(j, r) * DyadicPartition::block(i, r), 0.0);
                }
            }
        }
    }
}
