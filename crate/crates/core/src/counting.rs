//! Full counting statistics of impenetrable bosons (free fermions) in an
//! arc of the ring.
//!
//! The characteristic function of the particle number in an arc of
//! fraction `ell` is the determinant `f(α) = det(1 - (1 - e^{iα}) Γ)` of the
//! single-particle overlap matrix
//! `Γ_ij = δ_ij ell + (1 - δ_ij) sin(π (i-j) ell) / (π (i-j))`.
//! Because `f` is a degree-`N` polynomial in `e^{iα}`, sampling it at the
//! `N + 1` roots of unity and applying a discrete Fourier transform recovers
//! `p(k)` exactly. The large-`N` Fisher-Hartwig form, the cumulant expansion
//! and the Gaussian approximation of the balanced probability are provided
//! for comparison.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{barnes_log_g, riemann_zeta, EULER_GAMMA};

/// Largest imaginary residue tolerated after Fourier inversion.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-10;

/// Single-particle overlap matrix of the `N` lowest ring orbitals restricted
/// to an arc of fraction `ell`, in its real symmetric form.
pub fn overlap_matrix(n: usize, ell: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            ell
        } else {
            let d = i as f64 - j as f64;
            (PI * d * ell).sin() / (PI * d)
        }
    })
}

/// `det(1 - (1 - e^{iα}) Γ)` by LU decomposition with partial pivoting.
pub fn characteristic_function(gamma: &DMatrix<f64>, alpha: f64) -> Complex64 {
    let n = gamma.nrows();
    let t = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, alpha);
    let m = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        Complex64::new(id, 0.0) - t * gamma[(i, j)]
    });
    m.lu().determinant()
}

/// First four cumulants of a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cumulants {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

/// Counting statistics of `n` free fermions in an arc of fraction `ell`.
#[derive(Debug, Clone)]
pub struct CountingModel {
    pub n: usize,
    pub ell: f64,
    pub gamma: DMatrix<f64>,
    /// Sample points `2πm/(N+1)` folded into `(-π, π]`.
    pub alpha: Vec<f64>,
    pub f_samples: Vec<Complex64>,
    pub pk: Vec<f64>,
    pub cumulants: Cumulants,
    pub sigma2: f64,
}

impl CountingModel {
    pub fn new(n: usize, ell: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("particle number must be at least 1".into()));
        }
        if !(ell > 0.0 && ell <= 1.0) {
            return Err(Error::InvalidParams(format!("arc fraction must lie in (0, 1], got {ell}")));
        }
        let gamma = overlap_matrix(n, ell);
        let samples = n + 1;
        let alpha: Vec<f64> = (0..samples)
            .map(|m| {
                let a = 2.0 * PI * m as f64 / samples as f64;
                if a > PI {
                    a - 2.0 * PI
                } else {
                    a
                }
            })
            .collect();
        // Γ is real, so f(-α) = conj f(α): evaluate one half of the circle.
        let mut f_samples = vec![Complex64::new(0.0, 0.0); samples];
        for m in 0..samples {
            let mirror = (samples - m) % samples;
            if mirror < m {
                f_samples[m] = f_samples[mirror].conj();
            } else {
                f_samples[m] = characteristic_function(&gamma, alpha[m]);
            }
        }
        let pk = invert_characteristic(&f_samples, &alpha)?;
        let cumulants = distribution_cumulants(&pk);
        let sigma2 = cumulants.k2;
        Ok(Self {
            n,
            ell,
            gamma,
            alpha,
            f_samples,
            pk,
            cumulants,
            sigma2,
        })
    }

    pub fn characteristic_function(&self, alpha: f64) -> Complex64 {
        characteristic_function(&self.gamma, alpha)
    }

    /// Same characteristic function through the eigenvalues `γ_j` of Γ:
    /// `Π_j (1 - (1 - e^{iα}) γ_j)`.
    pub fn characteristic_function_spectral(&self, alpha: f64) -> Complex64 {
        let t = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, alpha);
        self.gamma
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|&g| Complex64::new(1.0, 0.0) - t * g)
            .product()
    }

    pub fn counting_distribution(&self) -> &[f64] {
        &self.pk
    }

    /// Asymptotic cumulants from the small-α expansion of the Fisher-Hartwig form.
    pub fn asymptotic_cumulants(&self) -> Cumulants {
        asymptotic_cumulants(self.n, self.ell)
    }
}

/// Inverse discrete Fourier transform of equally spaced samples of the
/// characteristic function.
fn invert_characteristic(f: &[Complex64], alpha: &[f64]) -> Result<Vec<f64>> {
    let samples = f.len();
    let mut pk = Vec::with_capacity(samples);
    for k in 0..samples {
        let v: Complex64 = f
            .iter()
            .zip(alpha)
            .map(|(fv, &a)| fv * Complex64::from_polar(1.0, -a * k as f64))
            .sum::<Complex64>()
            / samples as f64;
        if v.im.abs() > IMAGINARY_RESIDUE_TOL {
            return Err(Error::Consistency(format!(
                "inverted p({k}) has imaginary part {:e}",
                v.im
            )));
        }
        if v.re < -IMAGINARY_RESIDUE_TOL {
            return Err(Error::Consistency(format!("inverted p({k}) = {:e} is negative", v.re)));
        }
        pk.push(v.re.max(0.0));
    }
    Ok(pk)
}

/// Exact probability distribution of the particle number in the arc.
pub fn counting_distribution(model: &CountingModel) -> Vec<f64> {
    model.pk.clone()
}

/// Cumulants of a distribution over `k = 0, 1, ...`.
pub fn distribution_cumulants(pk: &[f64]) -> Cumulants {
    let mean: f64 = pk.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let central = |r: i32| -> f64 {
        pk.iter()
            .enumerate()
            .map(|(k, p)| (k as f64 - mean).powi(r) * p)
            .sum()
    };
    let m2 = central(2);
    let m3 = central(3);
    let m4 = central(4);
    Cumulants {
        k1: mean,
        k2: m2,
        k3: m3,
        k4: m4 - 3.0 * m2 * m2,
    }
}

/// Cumulants read off `ln f(α) ≈ iNℓα - ln[2N e^{γ+1} sin πℓ] α²/(2π²) - ζ(3) α⁴/(2π)⁴`.
pub fn asymptotic_cumulants(n: usize, ell: f64) -> Cumulants {
    let zeta3 = riemann_zeta(3.0).expect("zeta(3)");
    Cumulants {
        k1: n as f64 * ell,
        k2: variance_asymptotic(n, ell),
        k3: 0.0,
        k4: -3.0 * zeta3 / (2.0 * PI.powi(4)),
    }
}

/// `π⁻² ln[2N e^{γ+1} sin(πℓ)]`.
pub fn variance_asymptotic(n: usize, ell: f64) -> f64 {
    ((2.0 * n as f64 * (PI * ell).sin()).ln() + EULER_GAMMA + 1.0) / (PI * PI)
}

/// Fisher-Hartwig asymptotic form of the characteristic function,
/// `e^{iαNℓ} [G(1+α/2π) G(1-α/2π)]² / [2N sin(πℓ)]^{α²/(2π²)}`, for `|α| < π`.
pub fn fisher_hartwig_f(n: usize, ell: f64, alpha: f64) -> Result<Complex64> {
    if !(alpha.abs() < PI) {
        return Err(Error::Domain(format!("Fisher-Hartwig form needs |α| < π, got {alpha}")));
    }
    let x = alpha / (2.0 * PI);
    let log_g = 2.0 * (barnes_log_g(x)? + barnes_log_g(-x)?);
    let log_denominator = alpha * alpha / (2.0 * PI * PI) * (2.0 * n as f64 * (PI * ell).sin()).ln();
    Ok(Complex64::from_polar((log_g - log_denominator).exp(), alpha * n as f64 * ell))
}

/// Gaussian approximation to the half-ring distribution,
/// `exp(-(k - N/2)² / 2σ²) / sqrt(2πσ²)` with `σ² = π⁻² ln(2N e^{γ+1})`.
pub fn gaussian_pk(n: usize, k: usize) -> f64 {
    gaussian_pk_arc(n, 0.5, k)
}

/// Gaussian with the asymptotic mean `Nℓ` and variance of an arc `ell`.
pub fn gaussian_pk_arc(n: usize, ell: f64, k: usize) -> f64 {
    let sigma2 = variance_asymptotic(n, ell);
    let d = k as f64 - n as f64 * ell;
    (-d * d / (2.0 * sigma2)).exp() / (2.0 * PI * sigma2).sqrt()
}

/// Binomial distribution `C(N,k) ℓ^k (1-ℓ)^{N-k}` of uncorrelated
/// particles, built by the ratio recurrence so large `N` does not overflow.
pub fn free_boson_distribution(n: usize, ell: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut p = (1.0 - ell).powi(n as i32);
    for k in 0..=n {
        out.push(p);
        p *= (n - k) as f64 / (k + 1) as f64 * ell / (1.0 - ell);
    }
    out
}

/// Large-`N` balanced probability `sqrt(π / (2 ln(2N e^{γ+1})))`.
pub fn balanced_probability_asymptotic(n: usize) -> f64 {
    let log = (2.0 * n as f64).ln() + EULER_GAMMA + 1.0;
    (PI / (2.0 * log)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_boson_reference() {
        let p = free_boson_distribution(4, 0.5);
        assert_eq!(p, vec![0.0625, 0.25, 0.375, 0.25, 0.0625]);
        let big = free_boson_distribution(400, 0.3);
        assert!((big.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_matrix_entries() {
        let g = overlap_matrix(4, 1.0);
        assert!((g - DMatrix::identity(4, 4)).norm() < 1e-15);
        let g = overlap_matrix(5, 0.3);
        assert!((0..5).all(|i| g[(i, i)] == 0.3));
        let g = overlap_matrix(2, 0.5);
        assert!((g[(0, 1)] - 1.0 / PI).abs() < 1e-16);
        assert_eq!(g[(0, 1)], g[(1, 0)]);
    }

    #[test]
    fn characteristic_function_special_values() {
        let g = overlap_matrix(5, 0.37);
        assert!((characteristic_function(&g, 0.0) - 1.0).norm() < 1e-14);
        let g = overlap_matrix(4, 1.0);
        let want = Complex64::from_polar(1.0, 4.0 * 0.9);
        assert!((characteristic_function(&g, 0.9) - want).norm() < 1e-14);
    }

    #[test]
    fn two_particle_half_ring_expansion() {
        let g = overlap_matrix(2, 0.5);
        for &alpha in &[0.3, -1.7, 2.9] {
            let z = Complex64::from_polar(1.0, alpha);
            let want = ((1.0 + z) / 2.0).powi(2) - (1.0 - z).powi(2) / (PI * PI);
            assert!((characteristic_function(&g, alpha) - want).norm() < 1e-14);
        }
        let model = CountingModel::new(2, 0.5).unwrap();
        assert!((model.pk[1] - (0.5 + 2.0 / (PI * PI))).abs() < 1e-14);
        assert!((model.pk[0] - model.pk[2]).abs() < 1e-14);
    }

    #[test]
    fn distribution_normalized_and_mean_is_n_ell() {
        let model = CountingModel::new(7, 0.3).unwrap();
        assert!((model.pk.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((model.cumulants.k1 - 7.0 * 0.3).abs() < 1e-12);
        let model = CountingModel::new(6, 0.5).unwrap();
        assert!(model.cumulants.k3.abs() < 1e-12);
    }

    #[test]
    fn fisher_hartwig_basic_properties() {
        assert!((fisher_hartwig_f(10, 0.5, 0.0).unwrap() - 1.0).norm() < 1e-15);
        let a = fisher_hartwig_f(30, 0.4, 1.2).unwrap();
        let b = fisher_hartwig_f(30, 0.4, -1.2).unwrap();
        assert!((a.norm() - b.norm()).abs() < 1e-14);
        assert!(fisher_hartwig_f(30, 0.4, PI).is_err());
    }

    #[test]
    fn gaussian_and_balanced_asymptote() {
        let n = 100;
        assert!((variance_asymptotic(n, 0.5) - 0.6967).abs() < 1e-4);
        assert!((balanced_probability_asymptotic(n) - 0.478).abs() < 5e-4);
        let peak = gaussian_pk(n, 50);
        assert!(peak > gaussian_pk(n, 49) && peak > gaussian_pk(n, 51));
        assert!((gaussian_pk(n, 47) - gaussian_pk(n, 53)).abs() < 1e-16);
        assert!((peak - balanced_probability_asymptotic(n)).abs() < 1e-14);
        let seq: Vec<f64> = [10, 20, 50, 100, 1000].iter().map(|&n| balanced_probability_asymptotic(n)).collect();
        assert!(seq.windows(2).all(|w| w[1] < w[0]));
    }
}
