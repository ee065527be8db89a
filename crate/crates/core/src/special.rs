//! Distribution functions used throughout: chi-square tails for Gaussian
//! possibility and Wilks contours, standard normal and Student-t tails.

use statrs::function::{beta, erf, gamma};

/// Upper tail `1 - F_d(q)` of the chi-square distribution with `dof` degrees
/// of freedom, via the regularized upper incomplete gamma function
/// `Q(d/2, q/2)`.
pub fn chi_square_sf(q: f64, dof: usize) -> f64 {
    assert!(dof > 0, "chi-square needs at least one degree of freedom");
    if q.is_nan() {
        return f64::NAN;
    }
    if q <= 0.0 {
        return 1.0;
    }
    if q.is_infinite() {
        return 0.0;
    }
    gamma::gamma_ur(dof as f64 / 2.0, q / 2.0)
}

pub fn chi_square_cdf(q: f64, dof: usize) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    if q.is_infinite() {
        return 1.0;
    }
    gamma::gamma_lr(dof as f64 / 2.0, q / 2.0)
}

/// Quantile `F_d^{-1}(p)` by bracketing and bisection on the tail function.
pub fn chi_square_quantile(p: f64, dof: usize) -> f64 {
    assert!((0.0..=1.0).contains(&p), "probability out of range: {p}");
    if p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let target = 1.0 - p;
    let mut lo = 0.0;
    let mut hi = (dof as f64).max(1.0);
    while chi_square_sf(hi, dof) > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi_square_sf(mid, dof) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse of [`normal_cdf`]: a starting value from `erfc_inv`, polished by
/// Newton steps on the accurate tail.
pub fn normal_quantile(p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "probability out of range: {p}");
    let mut x = -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p);
    if !x.is_finite() {
        return x;
    }
    for _ in 0..3 {
        let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if density <= 0.0 {
            break;
        }
        // work on the smaller tail to keep relative accuracy
        let residual = if x > 0.0 { (1.0 - p) - normal_sf(x) } else { normal_cdf(x) - p };
        x -= residual / density;
    }
    x
}

/// Two-sided Student-t tail `P(|T| >= |t|)` with `dof` degrees of freedom.
pub fn student_t_two_sided(t: f64, dof: f64) -> f64 {
    let x = dof / (dof + t * t);
    beta::beta_reg(dof / 2.0, 0.5, x)
}

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

pub fn digamma(x: f64) -> f64 {
    gamma::digamma(x)
}

/// Trigamma function for `x > 0`: recurrence up to `x >= 10`, then the
/// asymptotic series.
pub fn trigamma(mut x: f64) -> f64 {
    assert!(x > 0.0, "trigamma needs a positive argument");
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    // 1/x + 1/(2x^2) + 1/(6x^3) - 1/(30x^5) + 1/(42x^7) - 1/(30x^9) + 5/(66x^11)
    let tail = 1.0 / x
        + x2 / 2.0
        + (1.0 / x) * x2 * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 * (1.0 / 30.0 - x2 * 5.0 / 66.0))));
    acc + tail
}
