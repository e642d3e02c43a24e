//! Scalar special functions behind the closed forms: Gaussian tail `Q` and its
//! inverse, the real secondary branch of the Lambert W function, and the upper
//! incomplete gamma function.
//!
//! All functions are pure and deterministic. Accuracy targets:
//!
//! * `q_function`: relative error <= 1e-12 for |x| <= 8 (delegates to `erfc`,
//!   which is good to a few ulp over that range);
//! * `q_inverse`: |Q(Q^-1(p)) - p| <= 1e-10, one Halley step past a rational
//!   initial estimate;
//! * `lambert_w_m1`: |w e^w - x| <= 1e-12 |x| over the real branch domain;
//! * `upper_incomplete_gamma`: relative error <= 1e-9 for x >= 0.

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const FRAC_1_E: f64 = 1.0 / std::f64::consts::E;

/// Tail probability of the standard normal distribution,
/// Q(x) = integral from x to infinity of (2*pi)^{-1/2} exp(-u^2/2) du.
///
/// Strictly decreasing; Q(0) = 1/2, Q(-inf) = 1, Q(inf) = 0.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Inverse of [`q_function`] on (0, 1).
///
/// Returns the x with Q(x) = p. Errors for p outside the open unit interval.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("q_inverse", format!("p = {p} not in (0, 1)")));
    }
    // Rational estimate of the probit (Acklam's approximation), then Halley
    // refinement against q_function. q_inverse(p) = -probit(p).
    let mut x = -probit_estimate(p);
    // Two corrector steps; each uses the exact residual through erfc so the
    // limit is set by q_function itself (~1e-15), well inside 1e-10.
    for _ in 0..2 {
        let err = q_function(x) - p;
        let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if pdf == 0.0 {
            break;
        }
        // Q'(x) = -pdf; Halley step with Q''(x) = x * pdf.
        let u = err / pdf;
        x += u / (1.0 - 0.5 * x * u);
    }
    Ok(x)
}

/// Acklam's rational approximation to the inverse standard normal CDF.
/// Absolute error ~1e-9 before refinement.
fn probit_estimate(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -probit_estimate(1.0 - p)
    }
}

/// Real secondary branch W_{-1} of the Lambert W function on [-1/e, 0).
///
/// Returns the w <= -1 with w e^w = x. This is the branch that carries the
/// nonzero solution of the per-attempt outage identity (the principal branch
/// collapses it to the trivial root; see the optimizer's alpha_of_delta).
pub fn lambert_w_m1(x: f64) -> Result<f64> {
    if !(-FRAC_1_E..0.0).contains(&x) {
        return Err(Error::domain(
            "lambert_w_m1",
            format!("x = {x} outside [-1/e, 0)"),
        ));
    }
    // Branch point: W(-1/e) = -1. Near it the defining equation loses a digit
    // per halving, so use the series in p = sqrt(2(1 + e x)) directly.
    let p2 = 2.0 * (1.0 + std::f64::consts::E * x);
    if p2 <= 0.0 {
        return Ok(-1.0);
    }
    let p = p2.sqrt();
    let mut w = if p < 1e-3 {
        // w = -1 - p - p^2/3 - 11 p^3/72 - ...
        return Ok(-1.0 - p - p2 / 3.0 - 11.0 / 72.0 * p2 * p);
    } else if x > -0.27 {
        // Asymptotic start toward the w -> -inf end of the branch.
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    } else {
        -1.0 - p - p2 / 3.0
    };

    // Halley iteration on f(w) = w e^w - x.
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let fp = ew * (w + 1.0);
        let step = f / (fp - f * (w + 2.0) / (2.0 * (w + 1.0)));
        w -= step;
        if step.abs() <= 1e-15 * w.abs() {
            break;
        }
    }
    let residual = (w * w.exp() - x).abs();
    if residual > 1e-12 * x.abs() {
        return Err(Error::NonConvergence {
            op: "lambert_w_m1",
            msg: format!("residual {residual:e} at x = {x}"),
        });
    }
    Ok(w)
}

/// Upper incomplete gamma function Gamma(s, x) = integral from x to infinity
/// of t^{s-1} e^{-t} dt, for s > 0 and x >= 0.
///
/// Negative x is rejected: the analytic continuation needed by the mean-SINR
/// closed form is real only through the scaled series
/// [`scaled_lower_gamma_series`], which callers use directly.
pub fn upper_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::domain("upper_incomplete_gamma", format!("s = {s} <= 0")));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(
            "upper_incomplete_gamma",
            format!("x = {x} < 0; use scaled_lower_gamma_series for the continued form"),
        ));
    }
    if x == 0.0 {
        return Ok(libm::tgamma(s));
    }
    let ln_gamma_s = libm::lgamma(s);
    // Regularized split: series for P(s,x) when x < s + 1, Lentz continued
    // fraction for Q(s,x) otherwise (avoids cancellation on both sides).
    let log_prefactor = s * x.ln() - x - ln_gamma_s;
    if x < s + 1.0 {
        let mut term = 1.0 / s;
        let mut sum = term;
        let mut a = s;
        for _ in 0..500 {
            a += 1.0;
            term *= x / a;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        let p = sum * log_prefactor.exp();
        Ok((1.0 - p) * libm::tgamma(s))
    } else {
        // Q(s,x) = prefactor * 1/(x+1-s- 1*(1-s)/(x+3-s- ...)) (Lentz).
        let tiny = 1e-300;
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        Ok((log_prefactor + ln_gamma_s).exp() * h)
    }
}

/// The everywhere-convergent series S(s, nu) = sum_{j>=0} nu^j / (j! (j+s)),
/// equal to gamma(s, -nu) / (-nu)^s by analytic continuation of the lower
/// incomplete gamma function.
///
/// All terms are positive, so the evaluation is cancellation-free for any
/// nu >= 0; this is the real-valued route to the incomplete-gamma expression
/// of the mean first-attempt SINR.
pub fn scaled_lower_gamma_series(s: f64, nu: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::domain("scaled_lower_gamma_series", format!("s = {s} <= 0")));
    }
    if !(nu >= 0.0) {
        return Err(Error::domain("scaled_lower_gamma_series", format!("nu = {nu} < 0")));
    }
    let mut term = 1.0; // nu^j / j!
    let mut sum = 0.0;
    for j in 0..100_000u64 {
        let contrib = term / (j as f64 + s);
        sum += contrib;
        term *= nu / (j as f64 + 1.0);
        if j as f64 > nu && contrib < sum * 1e-17 {
            break;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: composite-Simpson quadrature of the Gaussian tail
    /// over [x, x+12] (the remainder is below 1e-30 relative); negative x by
    /// reflection so the truncated range never swallows the bulk.
    fn q_quadrature(x: f64) -> f64 {
        if x < 0.0 {
            return 1.0 - q_quadrature(-x);
        }
        let a = x;
        let b = x + 12.0;
        let n = 240_000usize; // even
        let h = (b - a) / n as f64;
        let phi = |u: f64| (-0.5 * u * u).exp();
        let mut acc = phi(a) + phi(b);
        for i in 1..n {
            let u = a + h * i as f64;
            acc += phi(u) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0 / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn q_at_zero_is_half() {
        assert_eq!(q_function(0.0), 0.5);
    }

    #[test]
    fn q_limits() {
        assert!(q_function(40.0) == 0.0 || q_function(40.0) < 1e-300);
        assert!((q_function(-40.0) - 1.0).abs() < 1e-15);
        assert!(q_function(f64::INFINITY) == 0.0);
        assert!((q_function(f64::NEG_INFINITY) - 1.0).abs() == 0.0);
    }

    #[test]
    fn q_matches_quadrature_oracle() {
        // Relative error <= 1e-12 for |x| <= 8.
        for &x in &[-8.0, -5.0, -2.0, -1.0, -0.3, 0.1, 0.5, 1.2816, 2.0, 3.5, 5.0, 6.5, 8.0] {
            let oracle = q_quadrature(x);
            let got = q_function(x);
            let rel = ((got - oracle) / oracle).abs();
            assert!(rel <= 1e-12, "x={x}: got {got:e}, oracle {oracle:e}, rel {rel:e}");
        }
        // The spec's spot value.
        assert!((q_function(1.2816) - 0.1).abs() < 2e-5);
    }

    #[test]
    fn q_strictly_decreasing_on_grid() {
        // Left end capped where 1 - Q(x) is still representable in f64.
        let mut prev = q_function(-7.0);
        let mut x = -7.0;
        while x < 10.0 {
            x += 0.01;
            let q = q_function(x);
            assert!(q < prev, "Q not strictly decreasing at x = {x}");
            prev = q;
        }
    }

    #[test]
    fn chernoff_bound_holds() {
        let mut x = 1e-3;
        while x < 12.0 {
            assert!(
                q_function(x) <= (-0.5 * x * x).exp(),
                "Chernoff bound violated at x = {x}"
            );
            x *= 1.15;
        }
    }

    #[test]
    fn q_inverse_median_and_oracle_points() {
        assert_eq!(q_inverse(0.5).unwrap(), 0.0);
        // Bisection oracle on q_function for p = 0.1.
        let (mut lo, mut hi) = (0.0, 4.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if q_function(mid) > 0.1 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!((q_inverse(0.1).unwrap() - oracle).abs() < 1e-10);
        assert!((oracle - 1.2816).abs() < 1e-3);
    }

    #[test]
    fn q_inverse_round_trips() {
        assert!((q_inverse(q_function(2.0)).unwrap() - 2.0).abs() <= 1e-9);
        for &p in &[1e-9, 1e-6, 1e-3, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 1.0 - 1e-6] {
            let x = q_inverse(p).unwrap();
            assert!(
                (q_function(x) - p).abs() <= 1e-10,
                "round trip failed at p = {p}"
            );
        }
    }

    #[test]
    fn q_inverse_domain_errors() {
        assert!(q_inverse(0.0).is_err());
        assert!(q_inverse(1.0).is_err());
        assert!(q_inverse(-0.2).is_err());
        assert!(q_inverse(f64::NAN).is_err());
    }

    #[test]
    fn lambert_branch_point_and_asymptote() {
        assert_eq!(lambert_w_m1(-FRAC_1_E).unwrap(), -1.0);
        // x -> 0- drives w -> -inf.
        assert!(lambert_w_m1(-1e-12).unwrap() < -25.0);
        assert!(lambert_w_m1(-0.5).is_err());
        assert!(lambert_w_m1(0.0).is_err());
    }

    #[test]
    fn lambert_residual_on_log_grid() {
        // Newton/Halley residual check across the branch domain.
        let mut t = 1e-10f64;
        while t < 1.0 {
            let x = -FRAC_1_E * (1.0 - t).max(1e-12) - 1e-300;
            let x = x.max(-FRAC_1_E);
            let w = lambert_w_m1(x).unwrap();
            assert!(w <= -1.0 + 1e-12, "w = {w} above -1 at x = {x}");
            assert!(
                (w * w.exp() - x).abs() <= 1e-12 * x.abs(),
                "residual too large at x = {x}"
            );
            t *= 3.7;
        }
        // Dense log-spaced |x| grid too.
        let mut x = -1e-10;
        while x > -FRAC_1_E + 1e-9 {
            let w = lambert_w_m1(x).unwrap();
            assert!((w * w.exp() - x).abs() <= 1e-12 * x.abs(), "x = {x}");
            x *= 2.9;
        }
    }

    #[test]
    fn lambert_specific_value() {
        let w = lambert_w_m1(-0.2).unwrap();
        assert!(w <= -1.0);
        assert!((w * w.exp() + 0.2).abs() <= 1e-13);
    }

    /// Adaptive-free quadrature oracle for the upper incomplete gamma.
    fn gamma_quadrature(s: f64, x: f64) -> f64 {
        let a = x;
        let b = x + 80.0 + 10.0 * s;
        let n = 400_000usize;
        let h = (b - a) / n as f64;
        let f = |t: f64| if t <= 0.0 { 0.0 } else { t.powf(s - 1.0) * (-t).exp() };
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn gamma_trivial_and_closed_forms() {
        assert!((upper_incomplete_gamma(1.0, 0.0).unwrap() - 1.0).abs() < 1e-14);
        for &x in &[0.1, 0.7, 2.0, 9.0] {
            assert!(
                (upper_incomplete_gamma(1.0, x).unwrap() - (-x).exp()).abs()
                    < 1e-12 * (-x).exp(),
                "Gamma(1, x) != e^-x at x = {x}"
            );
        }
    }

    #[test]
    fn gamma_matches_quadrature() {
        let got = upper_incomplete_gamma(2.5, 1.3).unwrap();
        let oracle = gamma_quadrature(2.5, 1.3);
        assert!((got - oracle).abs() <= 1e-8 * oracle.abs());
        for &(s, x) in &[(0.5, 0.2), (3.0, 7.5), (1.7, 0.01), (6.0, 2.0)] {
            let got = upper_incomplete_gamma(s, x).unwrap();
            let oracle = gamma_quadrature(s, x);
            assert!(
                ((got - oracle) / oracle).abs() <= 1e-9,
                "s={s} x={x}: got {got}, oracle {oracle}"
            );
        }
    }

    #[test]
    fn gamma_at_zero_equals_complete() {
        for &s in &[0.3, 1.0, 2.5, 7.0] {
            let got = upper_incomplete_gamma(s, 0.0).unwrap();
            let complete = libm::tgamma(s);
            assert!(((got - complete) / complete).abs() <= 1e-9);
        }
    }

    #[test]
    fn gamma_domain_errors() {
        assert!(upper_incomplete_gamma(0.0, 1.0).is_err());
        assert!(upper_incomplete_gamma(-1.0, 1.0).is_err());
        assert!(upper_incomplete_gamma(2.0, -0.5).is_err());
    }

    #[test]
    fn scaled_series_matches_term_sums() {
        // S(1, nu) = (e^nu - 1)/nu exactly.
        for &nu in &[0.1, 1.0, 4.0, 20.0] {
            let s = scaled_lower_gamma_series(1.0, nu).unwrap();
            let expect = libm::expm1(nu) / nu;
            assert!(((s - expect) / expect).abs() < 1e-13, "nu = {nu}");
        }
        // S(2, 1) = sum 1/(j!(j+2)) = 1 (telescoping).
        let s = scaled_lower_gamma_series(2.0, 1.0).unwrap();
        assert!((s - 1.0).abs() < 1e-14);
    }
}
