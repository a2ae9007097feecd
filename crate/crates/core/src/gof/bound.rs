use super::{require_plane, Method, TestReport};
use crate::error::{Error, Result};
use crate::ot::solve_ot;
use crate::torus::TorusSample;

/// `min(1, exp(-8 nm/(n+m) t^2))`, the concentration bound on
/// `P(T_2(P_n, Q_m) >= t)` under the null with the mean neglected.
pub fn upper_bound_pvalue(t: f64, n: usize, m: usize) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("threshold must be finite and >= 0, got {t}")));
    }
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("sample sizes must be positive".into()));
    }
    let h = (n as f64 * m as f64) / (n as f64 + m as f64);
    Ok((-8.0 * h * t * t).exp().min(1.0))
}

/// Exact `T_2` between the samples, scored by [`upper_bound_pvalue`].
///
/// Conservative: the mean `E T_2(P_n, Q_m)` is neglected, which the
/// `O(log n / n)` decay of that mean under the null justifies.
pub fn upper_bound_test(p: &TorusSample, q: &TorusSample) -> Result<TestReport> {
    require_plane(p, q)?;
    let t = solve_ot(p, q)?.cost;
    let pv = upper_bound_pvalue(t, p.len(), q.len())?;
    let h = (p.len() as f64 * q.len() as f64) / (p.len() + q.len()) as f64;
    Ok(TestReport::new(Method::UpperBound, t, pv, p.len(), q.len())
        .with("effective_size", h)
        .with("expectation_neglected", true))
}

/// The one-sample McDiarmid bound `φ(n, t) = exp(-8 n t^2)`, the limit of
/// the two-sample bound as one sample becomes the population.
pub fn mcdiarmid_one_sample(n: usize, t: f64) -> f64 {
    (-8.0 * n as f64 * t * t).exp()
}

const QUAD_TOL: f64 = 1e-8;
const PROBE_POINTS: usize = 64;
const BISECT_STEPS: usize = 200;
const BRACKET_LIMIT: f64 = 1e6;

/// Two-sample tail bound composed from a one-sample bound `φ`:
/// `∫_0^1 φ(n, (t^{1/p} - φ⁻¹(m, s)^{1/p})_+^p) ds`.
///
/// `φ(k, ·)` must be non-increasing; `φ⁻¹(m, s)` is the generalized inverse
/// `inf {u >= 0 : φ(m, u) <= s}` found by bisection, and is infinite when
/// `φ(m, ·)` never drops to `s`. The integrand is clamped to `[0, 1]` and
/// integrated by adaptive Simpson quadrature to absolute tolerance `1e-8`.
pub fn composed_one_sample_bound<F>(phi: F, n: usize, m: usize, t: f64, p: u32) -> Result<f64>
where
    F: Fn(usize, f64) -> f64,
{
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("threshold must be finite and >= 0, got {t}")));
    }
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("sample sizes must be positive".into()));
    }
    if p == 0 {
        return Err(Error::InvalidParameter("exponent p must be >= 1".into()));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let span = t.max(1.0);
    for k in [n, m] {
        probe_monotone(&phi, k, span)?;
    }

    let inv_p = 1.0 / p as f64;
    let root_t = t.powf(inv_p);
    let integrand = |s: f64| -> f64 {
        let u = generalized_inverse(&phi, m, s);
        let arg = if u.is_finite() {
            (root_t - u.powf(inv_p)).max(0.0).powi(p as i32)
        } else {
            0.0
        };
        let v = phi(n, arg);
        if v.is_nan() {
            1.0
        } else {
            v.clamp(0.0, 1.0)
        }
    };
    Ok(adaptive_simpson(&integrand, 0.0, 1.0, QUAD_TOL).clamp(0.0, 1.0))
}

fn probe_monotone<F: Fn(usize, f64) -> f64>(phi: &F, k: usize, span: f64) -> Result<()> {
    let mut prev = phi(k, 0.0);
    for i in 1..=PROBE_POINTS {
        let u = span * i as f64 / PROBE_POINTS as f64;
        let v = phi(k, u);
        if v.is_nan() || prev.is_nan() {
            return Err(Error::InvalidBound(format!("phi({k}, {u}) is not a number")));
        }
        if v > prev + 1e-12 * prev.abs().max(1.0) {
            return Err(Error::InvalidBound(format!(
                "phi({k}, .) increases on [{}, {u}]",
                span * (i - 1) as f64 / PROBE_POINTS as f64
            )));
        }
        prev = v;
    }
    Ok(())
}

fn generalized_inverse<F: Fn(usize, f64) -> f64>(phi: &F, m: usize, s: f64) -> f64 {
    if phi(m, 0.0) <= s {
        return 0.0;
    }
    let mut hi = 1.0;
    while phi(m, hi) > s {
        hi *= 2.0;
        if hi > BRACKET_LIMIT {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..BISECT_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(m, mid) <= s {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let c = 0.5 * (a + b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let (d, e) = (0.5 * (a + c), 0.5 * (c + b));
    let (fd, fe) = (f(d), f(e));
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
        + simpson_step(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pvalue_examples() {
        assert_eq!(upper_bound_pvalue(0.0, 10, 10).unwrap(), 1.0);
        assert_abs_diff_eq!(upper_bound_pvalue(0.1, 100, 100).unwrap(), (-4.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(upper_bound_pvalue(0.1, 200, 200).unwrap(), (-8.0f64).exp(), epsilon = 1e-15);
        assert!(upper_bound_pvalue(-0.1, 10, 10).is_err());
        assert!(upper_bound_pvalue(0.1, 0, 10).is_err());
    }

    #[test]
    fn pvalue_decreases_in_size() {
        let a = upper_bound_pvalue(0.05, 50, 50).unwrap();
        let b = upper_bound_pvalue(0.05, 50, 80).unwrap();
        assert!(b < a);
    }

    #[test]
    fn identical_samples_score_one() {
        let p = TorusSample::from_rows(&[[0.1, 0.2], [0.5, 0.9], [0.7, 0.3]]).unwrap();
        let r = upper_bound_test(&p, &p).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn composed_trivial_cases() {
        assert_abs_diff_eq!(composed_one_sample_bound(|_, _| 1.0, 10, 10, 0.3, 2).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(composed_one_sample_bound(mcdiarmid_one_sample, 10, 10, 0.0, 2).unwrap(), 1.0);
    }

    #[test]
    fn composed_rejects_increasing_phi() {
        let r = composed_one_sample_bound(|_, t| t, 10, 10, 0.3, 2);
        assert!(matches!(r, Err(Error::InvalidBound(_))));
    }

    #[test]
    fn composed_matches_closed_form_for_step_bound() {
        // φ(k, u) = 1 for u < 0.01 else 0: φ⁻¹(m, s) = 0.01 for s < 1.
        // Integrand is φ(n, (√t - 0.1)^2), i.e. 1 iff (√t - 0.1)^2 < 0.01.
        let step = |_: usize, u: f64| if u < 0.01 { 1.0 } else { 0.0 };
        assert_abs_diff_eq!(composed_one_sample_bound(step, 5, 5, 0.03, 2).unwrap(), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(composed_one_sample_bound(step, 5, 5, 0.2, 2).unwrap(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn composed_is_weaker_than_direct_bound() {
        let c = composed_one_sample_bound(mcdiarmid_one_sample, 100, 100, 0.1, 2).unwrap();
        assert!(c >= upper_bound_pvalue(0.1, 100, 100).unwrap());
        assert!(c <= 1.0);
    }
}
