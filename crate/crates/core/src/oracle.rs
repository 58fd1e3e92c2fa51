//! Brute-force validators for the exact engine.
//!
//! Nothing here shares code paths with [`crate::projection`] or
//! [`crate::simplex`] beyond the literal wavefunction: Monte Carlo samples
//! `|χ|²` directly, the grid oracle discretizes the reduced density matrix
//! with the midpoint rule, and simplex integrals are checked by nested
//! adaptive Gauss-Kronrod quadrature.
//!
//! Monte Carlo streams are ChaCha8 keyed by `seed_from_u64(seed)`, one
//! stream id per substream (`0..MC_SUBSTREAMS`), so any substream can be
//! regenerated on its own.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bethe::{BetheRoots, Wavefunction};
use crate::error::{Error, Result};
use crate::numeric::{binomial, entropy_bits};
use crate::projection::{entropy_upper_bound, EntanglementSpectrum, NEGATIVE_EIGENVALUE_TOL, RANK_THRESHOLD};
use crate::simplex::OrderedExpIntegralKey;

pub const MC_SUBSTREAMS: u64 = 64;
pub const MC_MIN_SAMPLES: u64 = 1_000;
pub const GRID_MAX_PARTICLES: usize = 3;
pub const GRID_MAX_POINTS: usize = 200;
pub const QUAD_MAX_DIM: usize = 4;
pub const QUAD_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Distance to `value` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        (self.mean - value).abs() / self.std_error
    }
}

#[derive(Debug, Clone, Default)]
struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    total: f64,
    total_sq: f64,
}

impl Moments {
    fn new(bins: usize) -> Self {
        Self {
            sum: vec![0.0; bins],
            sum_sq: vec![0.0; bins],
            ..Default::default()
        }
    }

    fn merge(&mut self, other: &Moments) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self.total += other.total;
        self.total_sq += other.total_sq;
    }
}

fn estimate(sum: f64, sum_sq: f64, samples: u64, seed: u64) -> McEstimate {
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
    McEstimate {
        mean,
        std_error: (var / n).sqrt().max(f64::MIN_POSITIVE),
        samples,
        seed,
    }
}

fn sample_moments(roots: &BetheRoots, ell: f64, samples: u64, seed: u64) -> Result<Moments> {
    if samples < MC_MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "Monte Carlo needs at least {MC_MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let wf = Wavefunction::new(roots)?;
    let n = roots.n();
    let per = samples / MC_SUBSTREAMS;
    let extra = samples % MC_SUBSTREAMS;
    let parts: Vec<Moments> = (0..MC_SUBSTREAMS)
        .into_par_iter()
        .map(|stream| {
            let count = per + u64::from(stream < extra);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let mut m = Moments::new(n + 1);
            let mut x = vec![0.0; n];
            for _ in 0..count {
                for v in x.iter_mut() {
                    *v = rng.gen::<f64>();
                }
                let w = wf.eval_unchecked(&x).norm_sqr();
                let k = x.iter().filter(|&&v| v <= ell).count();
                m.sum[k] += w;
                m.sum_sq[k] += w * w;
                m.total += w;
                m.total_sq += w * w;
            }
            m
        })
        .collect();
    let mut all = Moments::new(n + 1);
    for p in &parts {
        all.merge(p);
    }
    Ok(all)
}

/// Monte Carlo estimate of `p(k)` by uniform sampling of `[0,1]^N`.
pub fn mc_projection_probability(roots: &BetheRoots, k: usize, ell: f64, samples: u64, seed: u64) -> Result<McEstimate> {
    if k > roots.n() {
        return Err(Error::InvalidInput(format!("k = {k} exceeds N = {}", roots.n())));
    }
    let m = sample_moments(roots, ell, samples, seed)?;
    Ok(estimate(m.sum[k], m.sum_sq[k], samples, seed))
}

/// Estimates of every `p(k)`, all from the same samples.
pub fn mc_projection_distribution(roots: &BetheRoots, ell: f64, samples: u64, seed: u64) -> Result<Vec<McEstimate>> {
    let m = sample_moments(roots, ell, samples, seed)?;
    Ok((0..=roots.n())
        .map(|k| estimate(m.sum[k], m.sum_sq[k], samples, seed))
        .collect())
}

/// Estimate of `∫|χ|²` over `[0,1]^N`, which is 1 for a normalized state.
pub fn mc_norm(roots: &BetheRoots, samples: u64, seed: u64) -> Result<McEstimate> {
    let m = sample_moments(roots, 0.5, samples, seed)?;
    Ok(estimate(m.total, m.total_sq, samples, seed))
}

/// Grid-discretized spectrum of `ρ_A(k)` at two resolutions.
#[derive(Debug, Clone, Serialize)]
pub struct GridDensity {
    pub points: usize,
    pub fine: EntanglementSpectrum,
    pub coarse: EntanglementSpectrum,
    /// `p(k)` from the fine grid.
    pub probability: f64,
}

impl GridDensity {
    /// Entropy extrapolated assuming `O(h²)` midpoint error.
    pub fn richardson_entropy(&self) -> f64 {
        (4.0 * self.fine.entropy_bits - self.coarse.entropy_bits) / 3.0
    }

    /// Eigenvalues extrapolated the same way, index by index.
    pub fn richardson_eigenvalues(&self) -> Vec<f64> {
        self.fine
            .eigenvalues
            .iter()
            .zip(self.coarse.eigenvalues.iter().chain(std::iter::repeat(&0.0)))
            .map(|(f, c)| (4.0 * f - c) / 3.0)
            .collect()
    }
}

fn midpoints(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let h = (hi - lo) / points as f64;
    (0..points).map(|i| lo + (i as f64 + 0.5) * h).collect()
}

/// Row-major tensor grid of `dim` copies of `axis`.
fn tensor_grid(axis: &[f64], dim: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

fn grid_spectrum(wf: &Wavefunction, n: usize, k: usize, ell: f64, points: usize) -> Result<(EntanglementSpectrum, f64)> {
    let xa = tensor_grid(&midpoints(0.0, ell, points), k);
    let xb = tensor_grid(&midpoints(ell, 1.0, points), n - k);
    let cell = (ell / points as f64).powi(k as i32) * ((1.0 - ell) / points as f64).powi((n - k) as i32);
    let scale = cell.sqrt();
    let rows: Vec<Vec<Complex64>> = xa
        .par_iter()
        .map(|a| {
            let mut x = a.clone();
            x.resize(n, 0.0);
            xb.iter()
                .map(|b| {
                    x[k..].copy_from_slice(b);
                    wf.eval_unchecked(&x) * scale
                })
                .collect()
        })
        .collect();
    let psi = DMatrix::from_fn(xa.len(), xb.len(), |i, j| rows[i][j]);
    let gram = if psi.nrows() <= psi.ncols() {
        &psi * psi.adjoint()
    } else {
        psi.adjoint() * &psi
    };
    let weight = binomial(n, k) as f64;
    let p = weight * gram.trace().re;
    let kernel = (&gram + gram.adjoint()) * Complex64::new(0.5 * weight / p, 0.0);
    let mut eigenvalues: Vec<f64> = kernel.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let min_raw = eigenvalues.last().copied().unwrap_or(0.0).min(0.0);
    if min_raw < -NEGATIVE_EIGENVALUE_TOL {
        return Err(Error::Numerical(format!("grid kernel has eigenvalue {min_raw:e}")));
    }
    for a in eigenvalues.iter_mut() {
        *a = a.max(0.0);
    }
    let spectrum = EntanglementSpectrum {
        entropy_bits: entropy_bits(&eigenvalues),
        rank: eigenvalues.iter().filter(|&&a| a > RANK_THRESHOLD).count(),
        eigenvalues,
        upper_bound_bits: entropy_upper_bound(n, k),
        min_raw_eigenvalue: min_raw,
    };
    Ok((spectrum, p))
}

/// Midpoint-rule discretization of `ρ_A(x_A, x_A')` with the B trace done
/// on the same grid, at `points` and `points / 2` cells per dimension.
pub fn grid_reduced_density(roots: &BetheRoots, k: usize, ell: f64, points: usize) -> Result<GridDensity> {
    let n = roots.n();
    if n > GRID_MAX_PARTICLES {
        return Err(Error::Size {
            what: "grid oracle particle number",
            value: n,
            max: GRID_MAX_PARTICLES,
        });
    }
    if points > GRID_MAX_POINTS {
        return Err(Error::Size {
            what: "grid points per dimension",
            value: points,
            max: GRID_MAX_POINTS,
        });
    }
    if k > n || points < 2 || !(ell > 0.0 && ell < 1.0) {
        return Err(Error::InvalidInput(format!(
            "bad grid request: k = {k}, N = {n}, points = {points}, ell = {ell}"
        )));
    }
    let wf = Wavefunction::new(roots)?;
    let (fine, probability) = grid_spectrum(&wf, n, k, ell, points)?;
    let (coarse, _) = grid_spectrum(&wf, n, k, ell, points / 2)?;
    Ok(GridDensity {
        points,
        fine,
        coarse,
        probability,
    })
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1]; odd Kronrod nodes are the Gauss ones.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const QUAD_MAX_DEPTH: u32 = 40;

fn gk15<F>(f: &F, a: f64, b: f64) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = f(mid)? * WGK[7];
    let mut gauss = f(mid)? * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(mid - dx)? + f(mid + dx)?;
        kron += pair * WGK[i];
        if i % 2 == 1 {
            gauss += pair * WG[i / 2];
        }
    }
    Ok((kron * half, ((kron - gauss) * half).norm()))
}

/// Bisects until each piece meets its share `tol * h / (b - a)` of the
/// absolute tolerance, or the Kronrod/Gauss gap hits round-off.
fn adaptive<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let density = tol / (b - a);
    let mut stack = vec![(a, b, 0u32)];
    let mut total = crate::numeric::CompensatedSum::new();
    while let Some((lo, hi, depth)) = stack.pop() {
        let (value, err) = gk15(f, lo, hi)?;
        if err <= density * (hi - lo) || err <= 1e-15 * value.norm() {
            total.add(value);
            continue;
        }
        if depth >= QUAD_MAX_DEPTH {
            return Err(Error::Accuracy {
                tolerance: tol,
                estimate: err,
            });
        }
        let mid = 0.5 * (lo + hi);
        stack.push((mid, hi, depth + 1));
        stack.push((lo, mid, depth + 1));
    }
    Ok(total.value())
}

/// `∫_t^b e^{iμ_0 x} F(x) dx` where `F` is the same integral over the
/// remaining exponents; empty `mu` gives 1. Inner levels use the same
/// absolute tolerance, so the total error is at most `len(mu) * tol`.
fn nested(mu: &[f64], t: f64, b: f64, tol: f64) -> Result<Complex64> {
    let Some((&first, rest)) = mu.split_first() else {
        return Ok(Complex64::new(1.0, 0.0));
    };
    if t >= b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let integrand = |x: f64| -> Result<Complex64> { Ok(Complex64::from_polar(1.0, first * x) * nested(rest, x, b, tol)?) };
    adaptive(&integrand, t, b, tol)
}

/// Ordered-simplex exponential integral by nested adaptive quadrature.
pub fn quad_ordered_exp_integral(key: &OrderedExpIntegralKey) -> Result<Complex64> {
    key.validate()?;
    if key.dim() > QUAD_MAX_DIM {
        return Err(Error::Size {
            what: "quadrature dimension",
            value: key.dim(),
            max: QUAD_MAX_DIM,
        });
    }
    nested(&key.mu, key.a, key.b, QUAD_TOLERANCE / key.dim() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bethe::{solve_bethe_roots, Coupling, ModelParams, DEFAULT_TOLERANCE};

    fn roots(n: usize, coupling: Coupling) -> BetheRoots {
        solve_bethe_roots(&ModelParams::balanced(n, coupling).unwrap(), DEFAULT_TOLERANCE).unwrap()
    }

    #[test]
    fn quadrature_trivial_keys() {
        let v = quad_ordered_exp_integral(&OrderedExpIntegralKey::new(vec![0.0], 0.0, 0.5)).unwrap();
        assert!((v - 0.5).norm() < 1e-14);
        let v = quad_ordered_exp_integral(&OrderedExpIntegralKey::new(vec![0.0, 0.0], 0.0, 0.5)).unwrap();
        assert!((v - 0.125).norm() < 1e-14);
        assert!(quad_ordered_exp_integral(&OrderedExpIntegralKey::new(vec![0.0; 5], 0.0, 1.0)).is_err());
    }

    #[test]
    fn quadrature_single_exponent() {
        let mu = 7.3;
        let v = quad_ordered_exp_integral(&OrderedExpIntegralKey::new(vec![mu], 0.2, 0.9)).unwrap();
        let i = Complex64::i();
        let want = ((i * mu * 0.9).exp() - (i * mu * 0.2).exp()) / (i * mu);
        assert!((v - want).norm() < 1e-13);
    }

    #[test]
    fn mc_free_bosons() {
        let r = roots(2, Coupling::Finite(0.0));
        let est = mc_projection_probability(&r, 1, 0.5, 100_000, 7).unwrap();
        assert!(est.z_score(0.5) < 3.0, "{est:?}");
        let again = mc_projection_probability(&r, 1, 0.5, 100_000, 7).unwrap();
        assert_eq!(est.mean.to_bits(), again.mean.to_bits());
        assert!(mc_norm(&r, 999, 1).is_err());
    }

    #[test]
    fn grid_free_bosons_unentangled() {
        let r = roots(2, Coupling::Finite(0.0));
        let g = grid_reduced_density(&r, 1, 0.5, 40).unwrap();
        assert_eq!(g.fine.rank, 1);
        assert!(g.fine.entropy_bits.abs() < 1e-10);
        assert!((g.probability - 0.5).abs() < 1e-12);
    }

    #[test]
    fn grid_limits() {
        let r = roots(4, Coupling::Finite(1.0));
        assert!(matches!(grid_reduced_density(&r, 2, 0.5, 10), Err(Error::Size { .. })));
        let r = roots(2, Coupling::Finite(1.0));
        assert!(matches!(grid_reduced_density(&r, 1, 0.5, 201), Err(Error::Size { .. })));
    }
}
