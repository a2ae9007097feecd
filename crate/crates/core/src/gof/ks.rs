use std::cmp::Ordering;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

const MIN_POINTS: usize = 10;
const SERIES_TERMS: usize = 100;
const SERIES_TOL: f64 = 1e-12;

/// `sup_x |F_k(x) - Φ(x)|` for the empirical CDF of `z`.
pub fn ks_statistic_normal(z: &[f64]) -> Result<f64> {
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in KS input".into()));
    }
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::Internal(e.to_string()))?;
    let k = sorted.len() as f64;
    Ok(sorted.iter().enumerate().fold(0.0f64, |d, (i, &v)| {
        let f = normal.cdf(v);
        d.max((i + 1) as f64 / k - f).max(f - i as f64 / k)
    }))
}

/// `P(K > λ)` for the Kolmogorov distribution.
///
/// Alternating series `2 Σ (-1)^{j-1} exp(-2 j^2 λ^2)` for moderate and
/// large `λ`; the Jacobi theta form for small `λ`, where the alternating
/// series converges slowly.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let pi2 = std::f64::consts::PI.powi(2);
        let mut sum = 0.0;
        for j in 1..=SERIES_TERMS {
            let odd = (2 * j - 1) as f64;
            let term = (-odd * odd * pi2 / (8.0 * lambda * lambda)).exp();
            sum += term;
            if term < SERIES_TOL {
                break;
            }
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * sum;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for j in 1..=SERIES_TERMS {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < SERIES_TOL {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic one-sample Kolmogorov-Smirnov p-value against `N(0, 1)`.
pub fn ks_normality_pvalue(z: &[f64]) -> Result<f64> {
    if z.len() < MIN_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_POINTS,
            got: z.len(),
        });
    }
    let d = ks_statistic_normal(z)?;
    Ok(kolmogorov_survival((z.len() as f64).sqrt() * d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn series_branches_agree_at_switch() {
        for lambda in [1.1, 1.18, 1.25] {
            let pi2 = std::f64::consts::PI.powi(2);
            let theta: f64 = (1..=100)
                .map(|j| {
                    let o = (2 * j - 1) as f64;
                    (-o * o * pi2 / (8.0 * lambda * lambda)).exp()
                })
                .sum();
            let alt: f64 = (1..=100)
                .map(|j| {
                    let s = if j % 2 == 1 { 1.0 } else { -1.0 };
                    s * (-2.0 * (j * j) as f64 * lambda * lambda).exp()
                })
                .sum();
            assert_abs_diff_eq!(1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * theta, 2.0 * alt, epsilon = 1e-12);
        }
        // tabulated 95% quantile of the Kolmogorov distribution
        assert_abs_diff_eq!(kolmogorov_survival(1.358), 0.05, epsilon = 5e-4);
    }

    #[test]
    fn perfect_fit_scores_near_one() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let k = 1000;
        let z: Vec<f64> = (0..k).map(|i| normal.inverse_cdf((i as f64 + 0.5) / k as f64)).collect();
        assert!(ks_normality_pvalue(&z).unwrap() > 0.999);
    }

    #[test]
    fn zeros_are_rejected() {
        let z = vec![0.0; 50];
        assert_abs_diff_eq!(ks_statistic_normal(&z).unwrap(), 0.5, epsilon = 1e-15);
        assert!(ks_normality_pvalue(&z).unwrap() < 1e-6);
    }

    #[test]
    fn uniform_is_rejected() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let z: Vec<f64> = (0..1000).map(|_| rng.gen()).collect();
        assert!(ks_normality_pvalue(&z).unwrap() < 0.01);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(ks_normality_pvalue(&[0.0; 9]), Err(Error::InsufficientData { .. })));
    }
}
