use num_rational::Ratio;

use crate::error::{Error, Result};

type Q = Ratio<i64>;

/// Coefficients (power basis) of the generalized Laguerre polynomial
/// `L_n^{(-1)}(s) = Σ_k (-1)^k C(n-1, n-k) s^k / k!`.
pub fn laguerre_minus_one(n: usize) -> Vec<Q> {
    let binom = |a: i64, b: i64| -> i64 {
        if b < 0 || b > a {
            return 0;
        }
        (0..b).fold(1, |acc, i| acc * (a - i) / (i + 1))
    };
    let mut fact = 1i64;
    (0..=n)
        .map(|k| {
            if k > 0 {
                fact *= k as i64;
            }
            let sign = if k % 2 == 0 { 1 } else { -1 };
            Q::new(sign * binom(n as i64 - 1, (n - k) as i64), fact)
        })
        .collect()
}

fn derivative(p: &[Q]) -> Vec<Q> {
    p.iter().enumerate().skip(1).map(|(k, c)| c * Q::from_integer(k as i64)).collect()
}

/// `s(p'' - p') + n p` in exact arithmetic.
fn residual_polynomial(p: &[Q], n: usize) -> Vec<Q> {
    let d1 = derivative(p);
    let d2 = derivative(&d1);
    let mut out = vec![Q::from_integer(0); p.len() + 1];
    for (k, c) in d2.iter().enumerate() {
        out[k + 1] += c;
    }
    for (k, c) in d1.iter().enumerate() {
        out[k + 1] -= c;
    }
    for (k, c) in p.iter().enumerate() {
        out[k] += c * Q::from_integer(n as i64);
    }
    out
}

fn eval(p: &[Q], s: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * s + *c.numer() as f64 / *c.denom() as f64)
}

/// Eigen-relation `s(e_n'' - e_n') = -n e_n` for `e_n = L_n^{(-1)}`.
///
/// The relation is first verified exactly on the rational coefficients; the
/// returned value is the floating-point residual `max |s(e'' - e') + n e|`
/// over 301 points of `[0, 10]`, which must stay below `1e-10` times the
/// size of the individual terms.
pub fn laguerre_eigen_check(n: usize) -> Result<f64> {
    if !(1..=6).contains(&n) {
        return Err(Error::Domain(format!("Laguerre check supports 1 ≤ n ≤ 6, got {n}")));
    }
    let p = laguerre_minus_one(n);
    if residual_polynomial(&p, n).iter().any(|c| *c != Q::from_integer(0)) {
        return Err(Error::Contract(format!("exact Laguerre residual is nonzero for n = {n}")));
    }
    let d1 = derivative(&p);
    let d2 = derivative(&d1);
    let (mut residual, mut scale) = (0.0f64, 0.0f64);
    for i in 0..=300 {
        let s = 10.0 * i as f64 / 300.0;
        let (e, e1, e2) = (eval(&p, s), eval(&d1, s), eval(&d2, s));
        residual = residual.max((s * (e2 - e1) + n as f64 * e).abs());
        scale = scale.max((s * e2).abs() + (s * e1).abs() + (n as f64 * e).abs());
    }
    if residual > 1e-10 * scale.max(1.0) {
        return Err(Error::Contract(format!("Laguerre residual {residual:e} exceeds 1e-10 x {scale}")));
    }
    Ok(residual)
}
