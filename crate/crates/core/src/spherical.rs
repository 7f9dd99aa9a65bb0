//! Spherical Landau levels: the spectrum of the angular operator `K_m`.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Largest supported `k_max`; keeps `k(k+2)` far from overflow.
pub const K_MAX_LIMIT: u32 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub k: u32,
    pub lambda: Rational64,
    pub multiplicity: u64,
}

impl Level {
    pub fn lambda_f64(&self) -> f64 {
        *self.lambda.numer() as f64 / *self.lambda.denom() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphericalSpectrum {
    pub m: i64,
    pub levels: Vec<Level>,
}

impl SphericalSpectrum {
    pub fn ground(&self) -> &Level {
        &self.levels[0]
    }
}

/// `λ_k = (k(k+2) - m²)/4` with multiplicity `k+1`, for `k = |m|, |m|+2, …, k_max`.
pub fn spectrum(m: i64, k_max: u32) -> Result<SphericalSpectrum> {
    let am = m.unsigned_abs();
    if k_max > K_MAX_LIMIT {
        return Err(validation(format!("k_max must not exceed {K_MAX_LIMIT}")));
    }
    if (k_max as u64) < am {
        return Err(validation(format!("k_max = {k_max} is below |m| = {am}")));
    }
    if (k_max as u64 - am) % 2 != 0 {
        return Err(validation(format!("k_max = {k_max} must have the parity of m = {m}")));
    }
    let levels = (am as u32..=k_max)
        .step_by(2)
        .map(|k| {
            let k64 = k as i64;
            Level {
                k,
                lambda: Rational64::new(k64 * (k64 + 2) - m * m, 4),
                multiplicity: k as u64 + 1,
            }
        })
        .collect();
    Ok(SphericalSpectrum { m, levels })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRow {
    pub k: u32,
    /// `Σ_{m'} mult_k(m')` over `m' = -k, -k+2, …, k`.
    pub total: u64,
    pub expected: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountingCheck {
    pub rows: Vec<CountRow>,
    pub ok: bool,
}

/// For every `k ≤ k_max`, adds the multiplicity of level `k` over all charges
/// `m' ≡ k (mod 2)` with `|m'| ≤ k` and compares with `(k+1)²`.
pub fn counting_check(k_max: u32) -> Result<CountingCheck> {
    let mut rows = Vec::with_capacity(k_max as usize + 1);
    for k in 0..=k_max {
        let mut total = 0;
        for mp in (-(k as i64)..=k as i64).step_by(2) {
            let spec = spectrum(mp, k)?;
            let level = spec.levels.last().expect("k_max ≥ |m'|");
            debug_assert_eq!(level.k, k);
            total += level.multiplicity;
        }
        rows.push(CountRow { k, total, expected: (k as u64 + 1).pow(2) });
    }
    let ok = rows.iter().all(|r| r.total == r.expected);
    Ok(CountingCheck { rows, ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncharged_levels_are_the_sphere_laplacian() {
        let s = spectrum(0, 4).unwrap();
        let got: Vec<_> = s.levels.iter().map(|l| (l.k, l.lambda, l.multiplicity)).collect();
        // l(l+1) with multiplicity 2l+1, k = 2l
        let want: Vec<_> =
            (0..=2).map(|l: i64| (2 * l as u32, Rational64::from(l * (l + 1)), 2 * l as u64 + 1)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn ground_levels() {
        let g1 = spectrum(1, 1).unwrap();
        assert_eq!(g1.ground().lambda, Rational64::new(1, 2));
        assert_eq!(g1.ground().multiplicity, 2);
        let g2 = spectrum(2, 2).unwrap();
        assert_eq!(g2.ground().lambda, Rational64::from(1));
        assert_eq!(g2.ground().multiplicity, 3);
    }

    #[test]
    fn ground_is_half_the_charge() {
        for m in -20i64..=20 {
            let s = spectrum(m, m.unsigned_abs() as u32 + 10).unwrap();
            assert_eq!(s.ground().lambda, Rational64::new(m.abs(), 2));
        }
    }

    #[test]
    fn gap_above_ground() {
        for m in -12i64..=12 {
            let s = spectrum(m, m.unsigned_abs() as u32 + 2).unwrap();
            let k = m.abs();
            // ((k+2)(k+4) - k(k+2))/4
            let want = Rational64::new((k + 2) * (k + 4) - k * (k + 2), 4);
            assert_eq!(s.levels[1].lambda - s.levels[0].lambda, want);
            assert_eq!(want, Rational64::from(k + 2));
        }
    }

    #[test]
    fn parity_and_range_violations() {
        assert!(spectrum(1, 4).is_err());
        assert!(spectrum(3, 1).is_err());
        assert!(spectrum(0, 3).is_err());
    }

    #[test]
    fn counts_fill_the_three_sphere_harmonics() {
        let c = counting_check(20).unwrap();
        assert!(c.ok);
        assert_eq!(c.rows[0].total, 1);
        assert_eq!(c.rows[2].total, 9);
        assert_eq!(c.rows[5].total, 36);
    }
}
