//! Small numerical helpers shared across modules: compensated summation,
//! binomials, permutation parity and a pivoted Cholesky factorization for
//! Hermitian positive semidefinite matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Neumaier-compensated accumulator for complex sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
}

#[inline]
fn two_sum(sum: f64, comp: &mut f64, x: f64) -> f64 {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *comp += (sum - t) + x;
    } else {
        *comp += (x - t) + sum;
    }
    t
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: Complex64) {
        self.sum.re = two_sum(self.sum.re, &mut self.comp.re, x.re);
        self.sum.im = two_sum(self.sum.im, &mut self.comp.im, x.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

impl Extend<Complex64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = Complex64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Compensated sum of real values.
pub fn compensated_real_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(values.into_iter().map(|v| Complex64::new(v, 0.0)));
    acc.value().re
}

/// Binomial coefficient as an exact integer (panics on overflow, which needs n > 120).
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Parity of the permutation that sorts `seq` ascending: +1 for even, -1 for odd.
pub fn parity(seq: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Pivoted Cholesky factorization `A = L L^H` of a Hermitian positive
/// semidefinite matrix. Returns `L` with as many columns as the numerical
/// rank: elimination stops once the largest remaining diagonal entry drops
/// below `rel_tol * max_diag`.
pub fn pivoted_cholesky(a: &DMatrix<Complex64>, rel_tol: f64) -> DMatrix<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "pivoted_cholesky needs a square matrix");
    let mut work = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let max_diag = (0..n).map(|i| a[(i, i)].re).fold(0.0_f64, f64::max);
    let threshold = rel_tol * max_diag;
    let mut l = DMatrix::<Complex64>::zeros(n, n);
    let mut rank = 0;

    for col in 0..n {
        // pivot on the largest remaining diagonal entry
        let (piv, piv_val) = (col..n)
            .map(|i| (i, work[(i, i)].re))
            .fold((col, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_val <= threshold || piv_val <= 0.0 {
            break;
        }
        if piv != col {
            work.swap_rows(col, piv);
            work.swap_columns(col, piv);
            l.swap_rows(col, piv);
            perm.swap(col, piv);
        }
        let d = piv_val.sqrt();
        l[(col, col)] = Complex64::new(d, 0.0);
        for i in col + 1..n {
            l[(i, col)] = work[(i, col)] / d;
        }
        for j in col + 1..n {
            for i in col + 1..n {
                let update = l[(i, col)] * l[(j, col)].conj();
                work[(i, j)] -= update;
            }
        }
        rank += 1;
    }

    // undo the symmetric permutation: row perm[i] of the result is row i of l
    let mut out = DMatrix::<Complex64>::zeros(n, rank);
    for i in 0..n {
        for j in 0..rank {
            out[(perm[i], j)] = l[(i, j)];
        }
    }
    out
}

/// Entropy in bits of a spectrum, with `0 log 0 = 0`.
pub fn entropy_bits(eigenvalues: &[f64]) -> f64 {
    let s = compensated_real_sum(
        eigenvalues
            .iter()
            .filter(|&&a| a > 0.0)
            .map(|&a| -a * a.log2()),
    );
    s.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let mut acc = CompensatedSum::new();
        for x in [1e16, 1.0, -1e16, 1.0] {
            acc.add(Complex64::new(x, -x));
        }
        assert_eq!(acc.value(), Complex64::new(2.0, -2.0));
    }

    #[test]
    fn binomials_and_parity() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(4, 0), 1);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(factorial(5), 120);
        assert_eq!(parity(&[0, 1, 2]), 1.0);
        assert_eq!(parity(&[1, 0, 2]), -1.0);
        assert_eq!(parity(&[2, 0, 1]), 1.0);
        assert_eq!(parity(&[3, 7]), 1.0);
    }

    #[test]
    fn pivoted_cholesky_reconstructs_rank_deficient_matrix() {
        let v1 = [Complex64::new(1.0, 0.5), Complex64::new(0.0, 1.0), Complex64::new(2.0, 0.0)];
        let v2 = [Complex64::new(0.3, 0.0), Complex64::new(-1.0, 0.2), Complex64::new(0.0, 0.7)];
        let a = DMatrix::from_fn(3, 3, |i, j| v1[i] * v1[j].conj() + v2[i] * v2[j].conj());
        let l = pivoted_cholesky(&a, 1e-13);
        assert_eq!(l.ncols(), 2);
        let back = &l * l.adjoint();
        assert!((back - a).norm() < 1e-12);
    }

    #[test]
    fn entropy_of_flat_spectrum() {
        assert!((entropy_bits(&[0.25; 4]) - 2.0).abs() < 1e-15);
        assert_eq!(entropy_bits(&[1.0, 0.0]), 0.0);
    }
}
