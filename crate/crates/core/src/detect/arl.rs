use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::stat::normalize;
use crate::error::{Error, Result};

/// `4 [sum_i s_i^2 p_i^2 (1 - p_i)^2 + sum_{i != j} s_i s_j p_i^2 p_j^2]`.
pub fn sigma_p_squared(p: &[f64], sigma: &[f64]) -> Result<f64> {
    if p.len() != sigma.len() {
        return Err(Error::DimensionMismatch { expected: sigma.len(), found: p.len() });
    }
    let own: f64 = p.iter().zip(sigma).map(|(p, s)| (s * p * (1.0 - p)).powi(2)).sum();
    // sum_{i != j} a_i a_j = (sum a)^2 - sum a^2, with a_i = s_i p_i^2.
    let a: Vec<f64> = p.iter().zip(sigma).map(|(p, s)| s * p * p).collect();
    let total: f64 = a.iter().sum();
    let cross = total * total - a.iter().map(|x| x * x).sum::<f64>();
    Ok(4.0 * (own + cross))
}

/// Siegmund's overshoot correction `nu(y)`.
pub fn nu(y: f64) -> f64 {
    if y <= 0.0 {
        return 1.0;
    }
    let n = Normal::standard();
    let h = y / 2.0;
    let cdf = n.cdf(h);
    (2.0 / y) * (cdf - 0.5) / (h * cdf + n.pdf(h))
}

/// Large-threshold approximation of the average run length for threshold `b`:
///
/// `ARL ~ (1/2) b^-1 exp(b^2 / (2 s^2)) sqrt(2 pi s^2) / int_{2b/(s sqrt m1)}^{2b/(s sqrt m0)} y nu(y)^2 dy`
///
/// with `s^2 = sigma_p_squared(p_pre, sigma)`. Returns `+inf` when the value
/// overflows.
pub fn arl_approximation(b: f64, p_pre: &[f64], sigma: &[f64], m0: usize, m1: usize) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::invalid(format!("threshold must be positive and finite, got {b}")));
    }
    if m0 == 0 || m1 <= m0 {
        return Err(Error::invalid(format!("need 0 < m0 < m1, got m0 = {m0}, m1 = {m1}")));
    }
    if p_pre.iter().any(|x| !x.is_finite() || *x < 0.0) || p_pre.iter().sum::<f64>() <= 0.0 {
        return Err(Error::invalid("p_pre must be a nonzero nonnegative vector"));
    }
    if sigma.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::invalid("weights must be finite and nonnegative"));
    }
    let p = normalize(p_pre.to_vec());
    let s2 = sigma_p_squared(&p, sigma)?;
    if !(s2 > 0.0) {
        return Err(Error::invalid("degenerate pre-change distribution: sigma_p^2 = 0"));
    }
    let s = s2.sqrt();
    let lo = 2.0 * b / (s * (m1 as f64).sqrt());
    let hi = 2.0 * b / (s * (m0 as f64).sqrt());
    let f = |y: f64| y * nu(y).powi(2);
    let integral = adaptive_simpson(&f, lo, hi, 1e-12 * (hi - lo).max(1e-300), 50);
    let log_arl = b * b / (2.0 * s2) - b.ln() + 0.5 * (std::f64::consts::TAU * s2).ln() - 2f64.ln() - integral.ln();
    Ok(log_arl.exp())
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}
