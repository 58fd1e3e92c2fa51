//! Special functions needed by the counting-statistics asymptotics.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const BERNOULLI_EVEN: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

/// Riemann zeta for real `s > 1`, by Euler-Maclaurin summation.
pub fn riemann_zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::Domain(format!("zeta is only implemented for s > 1, got {s}")));
    }
    const HEAD: usize = 12;
    let cut = HEAD as f64;
    let mut sum: f64 = (1..HEAD).rev().map(|n| (n as f64).powf(-s)).sum();
    sum += cut.powf(1.0 - s) / (s - 1.0) + 0.5 * cut.powf(-s);
    // Σ_j B_{2j}/(2j)! · s(s+1)...(s+2j-2) · cut^{-s-2j+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut power = cut.powf(-s - 1.0);
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        sum += b / fact * rising * power;
        let m = 2.0 * (j as f64 + 1.0);
        rising *= (s + m - 1.0) * (s + m);
        fact *= (m + 1.0) * (m + 2.0);
        power /= cut * cut;
    }
    Ok(sum)
}

/// Natural log of the Barnes G-function, `ln G(1 + z)`, for `z` in
/// `[-1/2, 2]`. Uses the Taylor series about `z = 0` inside `|z| <= 1/2`
/// and `G(1 + z) = Γ(z) G(z)` to step larger arguments into that window.
pub fn barnes_log_g(z: f64) -> Result<f64> {
    if !(-0.5..=2.0).contains(&z) {
        return Err(Error::Domain(format!(
            "ln G(1+z) is supported for z in [-1/2, 2], got {z}"
        )));
    }
    let mut z = z;
    let mut shift = 0.0;
    while z > 0.5 {
        shift += ln_gamma(z);
        z -= 1.0;
    }
    Ok(shift + barnes_log_g_series(z))
}

fn barnes_log_g_series(z: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let mut sum = 0.5 * z * ((2.0 * PI).ln() - 1.0) - 0.5 * (1.0 + EULER_GAMMA) * z * z;
    let mut zpow = z * z * z;
    for k in 2..200 {
        let zeta = riemann_zeta(k as f64).expect("k >= 2");
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * zeta * zpow / (k as f64 + 1.0);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
        zpow *= z;
    }
    sum
}
