//! Oracles shared between test targets.

use llproj_core::OrderedExpIntegralKey;
use num_complex::Complex64;

/// Volume of the ordered simplex, the natural magnitude scale of a key.
pub fn volume(key: &OrderedExpIntegralKey) -> f64 {
    let m = key.mu.len() as i32;
    (key.b - key.a).powi(m) / (1..=m).map(f64::from).product::<f64>()
}

/// Nested integration with every exponential replaced by its Taylor
/// polynomial. Polynomials in `t` are stored as coefficient vectors, and
/// each level is integrated exactly from `t` to `b`.
pub fn taylor_oracle(key: &OrderedExpIntegralKey) -> Complex64 {
    const TERMS: usize = 60;
    let b = key.b;
    let mut inner: Vec<Complex64> = vec![Complex64::new(1.0, 0.0)];
    for &mu in key.mu.iter().rev() {
        let mut exp_poly = Vec::with_capacity(TERMS);
        let mut term = Complex64::new(1.0, 0.0);
        for n in 0..TERMS {
            exp_poly.push(term);
            term *= Complex64::new(0.0, mu) / (n as f64 + 1.0);
        }
        let mut product = vec![Complex64::new(0.0, 0.0); exp_poly.len() + inner.len() - 1];
        for (i, e) in exp_poly.iter().enumerate() {
            for (j, f) in inner.iter().enumerate() {
                product[i + j] += e * f;
            }
        }
        // ∫_t^b x^n dx = (b^{n+1} - t^{n+1}) / (n+1)
        let mut next = vec![Complex64::new(0.0, 0.0); product.len() + 1];
        for (n, coef) in product.iter().enumerate() {
            let q = coef / (n as f64 + 1.0);
            next[0] += q * b.powi(n as i32 + 1);
            next[n + 1] -= q;
        }
        inner = next;
    }
    inner
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * key.a + c)
}
