//! Exact integrals of pure exponentials over ordered simplices,
//!
//! ```text
//! I(mu; a, b) = ∫_{a < x_1 < ... < x_m < b} exp(i Σ_j mu_j x_j) dx,
//! ```
//!
//! the single quadrature primitive behind every probability and density
//! matrix element in [`crate::projection`].
//!
//! Writing the exponent in terms of the gaps `x_r - x_{r-1}` (with `x_0 = a`)
//! and the tail sums `nu_r = mu_r + ... + mu_m` turns the integral into a
//! scaled Dirichlet average of `exp`, which by the Hermite-Genocchi formula
//! equals
//!
//! ```text
//! I = exp(i a nu_1) T^m exp[z_1, ..., z_m, 0],   z_r = i T nu_r,  T = b - a,
//! ```
//!
//! a divided difference of the exponential. Divided differences are
//! evaluated as the first row of the exponential of the bidiagonal matrix
//! `diag(z) + superdiag(1)` by scaling and squaring, with the scaled block
//! summed from its power series. Coincident and nearly coincident tail sums
//! need no special casing.

use std::hash::{Hash, Hasher};
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use lru::LruCache;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of memoized integrals.
pub const DEFAULT_CACHE_CAPACITY: usize = 1 << 20;

/// Maximum modulus of the scaled nodes summed by power series.
const SERIES_RADIUS: f64 = 0.5;

/// Exponents and interval of one ordered-simplex integral. Equality and
/// hashing use the exact bit patterns of all fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderedExpIntegralKey {
    pub mu: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl OrderedExpIntegralKey {
    pub fn new(mu: Vec<f64>, a: f64, b: f64) -> Self {
        Self { mu, a, b }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite()) || self.a >= self.b {
            return Err(Error::Domain(format!(
                "simplex interval must satisfy a < b, got [{}, {}]",
                self.a, self.b
            )));
        }
        if let Some(bad) = self.mu.iter().find(|m| !m.is_finite()) {
            return Err(Error::Domain(format!("non-finite exponent {bad}")));
        }
        Ok(())
    }
}

impl PartialEq for OrderedExpIntegralKey {
    fn eq(&self, other: &Self) -> bool {
        self.a.to_bits() == other.a.to_bits()
            && self.b.to_bits() == other.b.to_bits()
            && self.mu.len() == other.mu.len()
            && self
                .mu
                .iter()
                .zip(&other.mu)
                .all(|(x, y)| x.to_bits() == y.to_bits())
    }
}

impl Eq for OrderedExpIntegralKey {}

impl Hash for OrderedExpIntegralKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.a.to_bits().hash(state);
        self.b.to_bits().hash(state);
        self.mu.len().hash(state);
        for m in &self.mu {
            m.to_bits().hash(state);
        }
    }
}

/// Evaluate one ordered-simplex integral. Returns 1 for an empty exponent list.
pub fn ordered_exp_integral(key: &OrderedExpIntegralKey) -> Result<Complex64> {
    key.validate()?;
    Ok(ordered_exp_integral_unchecked(&key.mu, key.a, key.b))
}

pub(crate) fn ordered_exp_integral_unchecked(mu: &[f64], a: f64, b: f64) -> Complex64 {
    let m = mu.len();
    if m == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let t = b - a;
    let mut nodes = vec![Complex64::new(0.0, 0.0); m + 1];
    let mut tail = 0.0;
    for r in (0..m).rev() {
        tail += mu[r];
        nodes[r] = Complex64::new(0.0, t * tail);
    }
    let phase = Complex64::from_polar(1.0, a * tail);
    phase * t.powi(m as i32) * exp_divided_difference(&nodes)
}

/// Divided difference `exp[z_0, ..., z_n]` of the exponential at arbitrary
/// (possibly repeated) complex nodes.
pub fn exp_divided_difference(z: &[Complex64]) -> Complex64 {
    let n = z.len();
    assert!(n > 0, "divided difference needs at least one node");
    let radius = z.iter().map(|w| w.norm()).fold(0.0_f64, f64::max);
    let squarings = if radius > SERIES_RADIUS {
        (radius / SERIES_RADIUS).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let scale = 2f64.powi(squarings as i32);
    let w: Vec<Complex64> = z.iter().map(|&v| v / scale).collect();

    // E[i][j] = scale^{-(j-i)} exp[w_i..w_j] is exp of the scaled bidiagonal matrix.
    let mut e = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        let dd = series_divided_differences(&w[i..]);
        let mut factor = 1.0;
        for (off, value) in dd.into_iter().enumerate() {
            e[i][i + off] = value * factor;
            factor /= scale;
        }
    }
    for _ in 0..squarings {
        let mut next = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in i..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in i..=j {
                    acc += e[i][k] * e[k][j];
                }
                next[i][j] = acc;
            }
        }
        e = next;
    }
    e[0][n - 1]
}

/// `exp[w_0..w_j]` for every prefix `j`, summed from the power series
/// `Σ_q h_q(w_0..w_j) / (q + j)!`, where `h_q` are complete homogeneous
/// symmetric polynomials. Accurate for `|w| <= 1/2`.
fn series_divided_differences(w: &[Complex64]) -> Vec<Complex64> {
    const TERMS: usize = 32;
    let n = w.len();
    let mut out = Vec::with_capacity(n);
    // h[q] holds h_q over the current prefix of nodes
    let mut h = vec![Complex64::new(0.0, 0.0); TERMS];
    h[0] = Complex64::new(1.0, 0.0);
    for j in 0..n {
        // extend the node set by w_j: h_q <- h_q + w_j h_{q-1} (in place, ascending q)
        for q in 1..TERMS {
            let prev = h[q - 1];
            h[q] += w[j] * prev;
        }
        let mut inv_fact = 1.0 / factorial_f64(j);
        let mut acc = Complex64::new(0.0, 0.0);
        for (q, hq) in h.iter().enumerate() {
            if q > 0 {
                inv_fact /= (q + j) as f64;
            }
            acc += hq * inv_fact;
        }
        out.push(acc);
    }
    out
}

fn factorial_f64(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Memoizing front end for [`ordered_exp_integral`], bounded with
/// least-recently-used eviction. Results are identical with or without the
/// cache.
pub struct SimplexCache {
    cache: Option<Mutex<LruCache<OrderedExpIntegralKey, Complex64>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl Default for SimplexCache {
    fn default() -> Self {
        Self::with_capacity(DEFAULT_CACHE_CAPACITY)
    }
}

impl std::fmt::Debug for SimplexCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimplexCache")
            .field("enabled", &self.cache.is_some())
            .field("hits", &self.hits())
            .field("misses", &self.misses())
            .finish()
    }
}

impl SimplexCache {
    /// A capacity of zero disables memoization.
    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            cache: NonZeroUsize::new(capacity).map(|c| Mutex::new(LruCache::new(c))),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn disabled() -> Self {
        Self::with_capacity(0)
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.cache
            .as_ref()
            .map_or(0, |c| c.lock().expect("simplex cache poisoned").len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn integral(&self, key: &OrderedExpIntegralKey) -> Result<Complex64> {
        key.validate()?;
        let Some(cache) = &self.cache else {
            self.misses.fetch_add(1, Ordering::Relaxed);
            return Ok(ordered_exp_integral_unchecked(&key.mu, key.a, key.b));
        };
        if let Some(v) = cache.lock().expect("simplex cache poisoned").get(key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(*v);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let value = ordered_exp_integral_unchecked(&key.mu, key.a, key.b);
        cache
            .lock()
            .expect("simplex cache poisoned")
            .put(key.clone(), value);
        Ok(value)
    }

    /// Elementwise [`SimplexCache::integral`]; outputs follow input order.
    pub fn batch_integrals(&self, keys: &[OrderedExpIntegralKey]) -> Result<Vec<Complex64>> {
        keys.iter().map(|k| self.integral(k)).collect()
    }
}

/// Uncached batch evaluation.
pub fn batch_integrals(keys: &[OrderedExpIntegralKey]) -> Result<Vec<Complex64>> {
    keys.iter().map(ordered_exp_integral).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn key(mu: &[f64], a: f64, b: f64) -> OrderedExpIntegralKey {
        OrderedExpIntegralKey::new(mu.to_vec(), a, b)
    }

    #[test]
    fn trivial_values() {
        let v = ordered_exp_integral(&key(&[], 0.0, 1.0)).unwrap();
        assert_eq!(v, Complex64::new(1.0, 0.0));
        let v = ordered_exp_integral(&key(&[0.0], 0.0, 0.5)).unwrap();
        assert!((v - 0.5).norm() < 1e-15);
        let v = ordered_exp_integral(&key(&[0.0, 0.0], 0.0, 0.5)).unwrap();
        assert!((v - 0.125).norm() < 1e-15);
        let v = ordered_exp_integral(&key(&[2.0 * PI], 0.0, 1.0)).unwrap();
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn single_exponent_closed_form() {
        for &(mu, a, b) in &[(1.7, 0.2, 0.9), (-40.0, 0.0, 0.5), (1e-9, 0.5, 1.0), (300.0, 0.1, 1.0)] {
            let got = ordered_exp_integral(&key(&[mu], a, b)).unwrap();
            // e^{iμ(a+b)/2} sin(μh/2) / (μ/2), free of cancellation
            let half = 0.5 * mu * (b - a);
            let want = Complex64::from_polar(1.0, 0.5 * mu * (a + b)) * (half.sin() / (0.5 * mu));
            assert!((got - want).norm() < 1e-14 * (1.0 + want.norm()), "mu={mu}: {got} vs {want}");
        }
    }

    #[test]
    fn cancelling_pair_closed_form() {
        // mu = (nu, -nu) on [0, T]: (T - (1 - e^{-i nu T}) / (i nu)) / (i nu)
        for &nu in &[3.0, 0.25, 1e-3] {
            let t: f64 = 0.5;
            let inu = Complex64::new(0.0, nu);
            let want = if nu > 0.1 {
                (t - (1.0 - (-inu * t).exp()) / inu) / inu
            } else {
                // Σ_{n≥1} (-1)^{n+1} (iν)^{n-1} T^{n+1} / (n+1)!
                let mut sum = Complex64::new(0.0, 0.0);
                let mut term = Complex64::new(t * t / 2.0, 0.0);
                for n in 1..30 {
                    sum += term;
                    term *= -inu * t / (n as f64 + 2.0);
                }
                sum
            };
            let got = ordered_exp_integral(&key(&[nu, -nu], 0.0, t)).unwrap();
            assert!((got - want).norm() < 1e-12 * want.norm(), "nu={nu}");
        }
    }

    #[test]
    fn rejects_bad_keys() {
        assert!(matches!(ordered_exp_integral(&key(&[f64::NAN], 0.0, 1.0)), Err(Error::Domain(_))));
        assert!(matches!(ordered_exp_integral(&key(&[1.0], 1.0, 1.0)), Err(Error::Domain(_))));
        assert!(matches!(ordered_exp_integral(&key(&[f64::INFINITY], 0.0, 1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn cache_serves_identical_values() {
        let cache = SimplexCache::with_capacity(4);
        let k = key(&[1.3, -0.4, 2.2], 0.5, 1.0);
        let first = cache.integral(&k).unwrap();
        let second = cache.integral(&k).unwrap();
        assert_eq!(first.re.to_bits(), second.re.to_bits());
        assert_eq!(first.im.to_bits(), second.im.to_bits());
        assert_eq!(cache.hits(), 1);
        assert_eq!(first, ordered_exp_integral(&k).unwrap());
        // eviction keeps the cache bounded
        for i in 0..10 {
            cache.integral(&key(&[i as f64], 0.0, 1.0)).unwrap();
        }
        assert_eq!(cache.len(), 4);
    }

    #[test]
    fn divided_difference_of_repeated_node_is_scaled_exponential() {
        // exp[z, z, z] = exp(z) / 2
        let z = Complex64::new(0.0, 7.3);
        let got = exp_divided_difference(&[z, z, z]);
        assert!((got - z.exp() / 2.0).norm() < 1e-14);
    }
}
