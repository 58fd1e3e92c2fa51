//! Ground state of the Lieb-Liniger gas on a ring of unit circumference:
//! Bethe roots, the Gaudin (Yang-action Hessian) matrix, and the
//! normalized coordinate Bethe wavefunction.
//!
//! The roots solve the logarithmic Bethe equations
//!
//! ```text
//! lambda_j + 2 Σ_k arctan((lambda_j - lambda_k) / c) = 2π I_j,   I_j = j - (N+1)/2,
//! ```
//!
//! whose Jacobian is the Gaudin matrix. Newton's method with backtracking is
//! run along a geometric continuation path in `c`, starting from the
//! strong-coupling roots. The free (`c = 0`) and Tonks-Girardeau (`c = ∞`)
//! points are explicit modes and never go through the solver.

use std::f64::consts::PI;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{factorial, parity};

/// Default residual tolerance of the Bethe solver.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
/// Newton steps allowed per continuation stage.
pub const MAX_NEWTON_STEPS: usize = 200;
/// Default cap on the particle number for permutation sums.
pub const DEFAULT_MAX_PARTICLES: usize = 8;

/// Ratio between consecutive couplings on the continuation path.
const CONTINUATION_RATIO: f64 = 0.5;

/// Interaction strength: a finite `c >= 0` or the impenetrable limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Coupling {
    Finite(f64),
    TonksGirardeau,
}

impl Coupling {
    pub fn is_free(&self) -> bool {
        matches!(self, Coupling::Finite(c) if *c == 0.0)
    }

    pub fn is_tg(&self) -> bool {
        matches!(self, Coupling::TonksGirardeau)
    }

    /// The finite coupling value, `None` in TG mode.
    pub fn value(&self) -> Option<f64> {
        match self {
            Coupling::Finite(c) => Some(*c),
            Coupling::TonksGirardeau => None,
        }
    }
}

impl std::fmt::Display for Coupling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Coupling::Finite(c) => write!(f, "{c}"),
            Coupling::TonksGirardeau => write!(f, "TG"),
        }
    }
}

/// Particle number, coupling and partition arc fraction (ring length 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub coupling: Coupling,
    pub ell: f64,
}

impl ModelParams {
    pub fn new(n: usize, coupling: Coupling, ell: f64) -> Result<Self> {
        let params = Self { n, coupling, ell };
        params.validate()?;
        Ok(params)
    }

    /// Half-ring partition.
    pub fn balanced(n: usize, coupling: Coupling) -> Result<Self> {
        Self::new(n, coupling, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("particle number must be at least 1".into()));
        }
        if !(self.ell > 0.0 && self.ell < 1.0) {
            return Err(Error::InvalidParams(format!(
                "arc fraction must lie strictly inside (0, 1), got {}",
                self.ell
            )));
        }
        if let Coupling::Finite(c) = self.coupling {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "coupling must be finite and non-negative, got {c}"
                )));
            }
        }
        Ok(())
    }
}

/// Ground-state quantum numbers `I_j = j - (N+1)/2`, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumNumbers(pub Vec<f64>);

impl QuantumNumbers {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn ground_state_quantum_numbers(n: usize) -> QuantumNumbers {
    let shift = (n as f64 + 1.0) / 2.0;
    QuantumNumbers((1..=n).map(|j| j as f64 - shift).collect())
}

/// Solved rapidities together with the parameters that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheRoots {
    pub params: ModelParams,
    pub quantum_numbers: QuantumNumbers,
    pub lambda: Vec<f64>,
    /// Max absolute defect of the logarithmic Bethe equations.
    pub residual: f64,
}

impl BetheRoots {
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn coupling(&self) -> Coupling {
        self.params.coupling
    }

    /// Same roots with a different partition fraction.
    pub fn with_ell(&self, ell: f64) -> Result<Self> {
        let mut out = self.clone();
        out.params = ModelParams::new(self.params.n, self.params.coupling, ell)?;
        Ok(out)
    }

    /// Max defect of the product form `e^{iλ_j} = Π_{k≠j} (λ_j-λ_k+ic)/(λ_j-λ_k-ic)`.
    pub fn product_form_residual(&self) -> f64 {
        let lam = &self.lambda;
        match self.params.coupling {
            Coupling::TonksGirardeau => lam
                .iter()
                .map(|&l| (Complex64::from_polar(1.0, l) - (PI * (lam.len() - 1) as f64).cos()).norm())
                .fold(0.0, f64::max),
            Coupling::Finite(c) if c == 0.0 => 0.0,
            Coupling::Finite(c) => (0..lam.len())
                .map(|j| {
                    let rhs: Complex64 = (0..lam.len())
                        .filter(|&k| k != j)
                        .map(|k| {
                            let d = lam[j] - lam[k];
                            Complex64::new(d, c) / Complex64::new(d, -c)
                        })
                        .product();
                    (Complex64::from_polar(1.0, lam[j]) - rhs).norm()
                })
                .fold(0.0, f64::max),
        }
    }
}

/// Residual vector of the logarithmic Bethe equations.
fn log_bethe_residual(lambda: &[f64], qn: &[f64], c: f64) -> Vec<f64> {
    (0..lambda.len())
        .map(|j| {
            let phase: f64 = lambda
                .iter()
                .map(|&lk| 2.0 * ((lambda[j] - lk) / c).atan())
                .sum();
            lambda[j] + phase - 2.0 * PI * qn[j]
        })
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn gaudin_matrix(lambda: &[f64], c: f64) -> DMatrix<f64> {
    let n = lambda.len();
    let kernel = |u: f64| 2.0 * c / (u * u + c * c);
    DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            1.0 + (0..n)
                .filter(|&l| l != j)
                .map(|l| kernel(lambda[j] - lambda[l]))
                .sum::<f64>()
        } else {
            -kernel(lambda[j] - lambda[k])
        }
    })
}

fn symmetrize(lambda: &mut [f64]) {
    let n = lambda.len();
    for j in 0..n / 2 {
        let v = 0.5 * (lambda[n - 1 - j] - lambda[j]);
        lambda[j] = -v;
        lambda[n - 1 - j] = v;
    }
    if n % 2 == 1 {
        lambda[n / 2] = 0.0;
    }
}

/// Damped Newton iteration on the logarithmic equations at fixed `c`.
fn newton_stage(lambda: &mut Vec<f64>, qn: &[f64], c: f64, tol: f64) -> Result<f64> {
    let mut phi = log_bethe_residual(lambda, qn, c);
    let mut res = max_abs(&phi);
    let norm2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    for _ in 0..MAX_NEWTON_STEPS {
        if res < tol {
            return Ok(res);
        }
        let jac = gaudin_matrix(lambda, c);
        let step = jac
            .cholesky()
            .map(|ch| ch.solve(&DVector::from_column_slice(&phi)))
            .ok_or_else(|| Error::Numerical(format!("Gaudin matrix not positive definite at c = {c}")))?;
        let base = norm2(&phi);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = lambda.iter().zip(step.iter()).map(|(l, s)| l - t * s).collect();
            if norm2(&log_bethe_residual(&trial, qn, c)) <= (1.0 - 1e-4 * t) * base || t < 1e-6 {
                *lambda = trial;
                break;
            }
            t *= 0.5;
        }
        symmetrize(lambda);
        phi = log_bethe_residual(lambda, qn, c);
        let next = max_abs(&phi);
        if next >= res && res < 1e3 * tol {
            // round-off floor reached
            res = next.min(res);
            break;
        }
        res = next;
    }
    if res < tol {
        Ok(res)
    } else {
        Err(Error::SolverFailure {
            coupling: c,
            iterations: MAX_NEWTON_STEPS,
            residual: res,
            last_iterate: lambda.clone(),
        })
    }
}

/// Solve for the ground-state rapidities. Free and TG modes return their
/// exact roots (all zero, and `2π I_j`) with zero residual.
pub fn solve_bethe_roots(params: &ModelParams, tol: f64) -> Result<BetheRoots> {
    params.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {tol}")));
    }
    let qn = ground_state_quantum_numbers(params.n);
    let lambda = match params.coupling {
        Coupling::TonksGirardeau => qn.0.iter().map(|i| 2.0 * PI * i).collect(),
        Coupling::Finite(c) if c == 0.0 => vec![0.0; params.n],
        Coupling::Finite(c) => {
            let (lambda, residual) = solve_finite(&qn.0, c, tol)?;
            return Ok(BetheRoots {
                params: *params,
                quantum_numbers: qn,
                lambda,
                residual,
            });
        }
    };
    Ok(BetheRoots {
        params: *params,
        quantum_numbers: qn,
        lambda,
        residual: 0.0,
    })
}

fn solve_finite(qn: &[f64], c: f64, tol: f64) -> Result<(Vec<f64>, f64)> {
    let n = qn.len();
    let c_high = 20.0 * n as f64;
    let c_start = c.max(c_high);
    // first-order strong-coupling guess: λ_j (1 + 2N/c) = 2π I_j
    let mut lambda: Vec<f64> = qn
        .iter()
        .map(|i| 2.0 * PI * i / (1.0 + 2.0 * n as f64 / c_start))
        .collect();
    let mut stage_c = c_start;
    loop {
        let stage_tol = if stage_c == c { tol } else { tol.max(1e-8) };
        let res = newton_stage(&mut lambda, qn, stage_c, stage_tol)?;
        if stage_c == c {
            return Ok((lambda, res));
        }
        let next = stage_c * CONTINUATION_RATIO;
        // rescale the iterate along the path; roots scale like sqrt(c) at weak coupling
        let ratio = if next <= c { c / stage_c } else { CONTINUATION_RATIO };
        if stage_c < 1.0 {
            let s = ratio.sqrt();
            lambda.iter_mut().for_each(|l| *l *= s);
        }
        stage_c = if next <= c { c } else { next };
    }
}

/// Gaudin matrix and squared norm of the Bethe wavefunction.
#[derive(Debug, Clone, PartialEq)]
pub struct GaudinData {
    pub matrix: DMatrix<f64>,
    pub norm_squared: f64,
}

pub fn gaudin_data(roots: &BetheRoots) -> Result<GaudinData> {
    match roots.params.coupling {
        Coupling::TonksGirardeau => Ok(GaudinData {
            matrix: DMatrix::identity(roots.n(), roots.n()),
            norm_squared: 1.0,
        }),
        Coupling::Finite(c) => {
            let matrix = gaudin_matrix(&roots.lambda, c);
            if matrix.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "Gaudin matrix has non-finite entries at c = {c} (coincident roots)"
                )));
            }
            let norm_squared = matrix
                .clone()
                .cholesky()
                .map(|ch| ch.determinant())
                .ok_or_else(|| Error::InvalidInput("Gaudin matrix is not positive definite".into()))?;
            Ok(GaudinData { matrix, norm_squared })
        }
    }
}

/// Squared norm `|𝒩|²` in every mode (1 for free and TG).
pub(crate) fn norm_squared(roots: &BetheRoots) -> Result<f64> {
    if roots.params.coupling.is_free() {
        Ok(1.0)
    } else {
        gaudin_data(roots).map(|g| g.norm_squared)
    }
}

/// Unit-modulus two-body amplitude factor
/// `(d - i c s) / sqrt(d² + c²)` for a rapidity difference `d` and
/// coordinate ordering sign `s`, and its `c → ∞` limit `-i s`.
#[inline]
pub(crate) fn pair_factor(coupling: Coupling, d: f64, s: f64) -> Complex64 {
    match coupling {
        Coupling::TonksGirardeau => Complex64::new(0.0, -s),
        Coupling::Finite(c) => Complex64::new(d, -c * s) / (d * d + c * c).sqrt(),
    }
}

/// Precomputed tables for repeated evaluation of the Bethe wavefunction.
#[derive(Debug, Clone)]
pub struct Wavefunction {
    n: usize,
    coupling: Coupling,
    lambda: Vec<f64>,
    perms: Vec<Vec<usize>>,
    signs: Vec<f64>,
    /// pair_table[(a * n + b) * 3 + (s + 1)] = pair_factor(λ_b - λ_a, s)
    pair_table: Vec<Complex64>,
    prefactor: f64,
}

impl Wavefunction {
    pub fn new(roots: &BetheRoots) -> Result<Self> {
        Self::with_max_particles(roots, DEFAULT_MAX_PARTICLES)
    }

    pub fn with_max_particles(roots: &BetheRoots, max_particles: usize) -> Result<Self> {
        let n = roots.n();
        if n > max_particles {
            return Err(Error::Size {
                what: "particle number",
                value: n,
                max: max_particles,
            });
        }
        let coupling = roots.params.coupling;
        let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
        let signs = perms.iter().map(|p| parity(p)).collect();
        let mut pair_table = Vec::with_capacity(n * n * 3);
        for a in 0..n {
            for b in 0..n {
                for s in [-1.0, 0.0, 1.0] {
                    let d = roots.lambda[b] - roots.lambda[a];
                    pair_table.push(if coupling.is_free() {
                        Complex64::new(1.0, 0.0)
                    } else {
                        pair_factor(coupling, d, s)
                    });
                }
            }
        }
        let norm = norm_squared(roots)?.sqrt();
        let prefactor = 1.0 / ((factorial(n) as f64).sqrt() * norm);
        Ok(Self {
            n,
            coupling,
            lambda: roots.lambda.clone(),
            perms,
            signs,
            pair_table,
            prefactor,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// χ(x) for coordinates in `[0, 1]`. The free mode is the constant 1;
    /// the TG mode uses the limiting amplitudes, which make χ real and
    /// nonnegative (equal to |det e^{iλ_j x_k}| / √N!).
    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "expected {} coordinates, got {}",
                self.n,
                x.len()
            )));
        }
        if let Some(bad) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("coordinate {bad} outside [0, 1]")));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> Complex64 {
        if self.coupling.is_free() {
            return Complex64::new(1.0, 0.0);
        }
        let n = self.n;
        let mut plane = [Complex64::new(0.0, 0.0); DEFAULT_MAX_PARTICLES * DEFAULT_MAX_PARTICLES];
        let mut plane_vec;
        let plane: &mut [Complex64] = if n <= DEFAULT_MAX_PARTICLES {
            &mut plane[..n * n]
        } else {
            plane_vec = vec![Complex64::new(0.0, 0.0); n * n];
            &mut plane_vec
        };
        // plane[j * n + p] = exp(i λ_j x_p)
        for j in 0..n {
            for p in 0..n {
                plane[j * n + p] = Complex64::from_polar(1.0, self.lambda[j] * x[p]);
            }
        }
        let sgn = |d: f64| -> usize {
            if d > 0.0 {
                2
            } else if d < 0.0 {
                0
            } else {
                1
            }
        };
        let mut total = Complex64::new(0.0, 0.0);
        for (perm, &sign) in self.perms.iter().zip(&self.signs) {
            let mut term = Complex64::new(sign, 0.0);
            for q in 0..n {
                for p in 0..q {
                    let idx = (perm[p] * n + perm[q]) * 3 + sgn(x[q] - x[p]);
                    term *= self.pair_table[idx];
                }
                term *= plane[perm[q] * n + q];
            }
            total += term;
        }
        total * self.prefactor
    }
}

/// Evaluate χ(x) once; see [`Wavefunction::eval`].
pub fn wavefunction_value(roots: &BetheRoots, x: &[f64]) -> Result<Complex64> {
    Wavefunction::new(roots)?.eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roots(n: usize, coupling: Coupling) -> BetheRoots {
        solve_bethe_roots(&ModelParams::balanced(n, coupling).unwrap(), DEFAULT_TOLERANCE).unwrap()
    }

    #[test]
    fn quantum_numbers() {
        assert_eq!(ground_state_quantum_numbers(2).0, vec![-0.5, 0.5]);
        assert_eq!(ground_state_quantum_numbers(3).0, vec![-1.0, 0.0, 1.0]);
        assert_eq!(ground_state_quantum_numbers(4).0, vec![-1.5, -0.5, 0.5, 1.5]);
        assert_eq!(ground_state_quantum_numbers(5).0.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0, Coupling::Finite(1.0), 0.5).is_err());
        assert!(ModelParams::new(2, Coupling::Finite(-1.0), 0.5).is_err());
        assert!(ModelParams::new(2, Coupling::Finite(f64::INFINITY), 0.5).is_err());
        assert!(ModelParams::new(2, Coupling::Finite(1.0), 1.0).is_err());
        assert!(ModelParams::new(2, Coupling::Finite(1.0), 0.0).is_err());
        assert!(ModelParams::new(2, Coupling::TonksGirardeau, 0.3).is_ok());
    }

    #[test]
    fn strong_coupling_approaches_free_fermion_roots() {
        let r = roots(2, Coupling::Finite(1e6));
        // λ + 2 arctan(2λ/c) = π  =>  λ = π / (1 + 4/c) + O(c^-3)
        let want = PI / (1.0 + 4e-6);
        assert!((r.lambda[1] - want).abs() < 1e-12, "{:?}", r.lambda);
        assert_eq!(r.lambda[0], -r.lambda[1]);
        let g = gaudin_data(&r).unwrap();
        assert!((g.norm_squared - 1.0).abs() < 1e-5);
    }

    #[test]
    fn weak_coupling_roots_scale_like_sqrt_c() {
        let r = roots(2, Coupling::Finite(0.01));
        assert!((r.lambda[1] - 0.1).abs() < 0.01, "{:?}", r.lambda);
        assert!(r.residual < DEFAULT_TOLERANCE);
    }

    #[test]
    fn residuals_symmetry_and_ordering() {
        for n in 1..=8 {
            for &c in &[0.01, 0.3, 1.0, 7.0, 100.0, 1e4] {
                let r = roots(n, Coupling::Finite(c));
                assert!(r.residual < DEFAULT_TOLERANCE, "n={n} c={c}");
                assert!(r.product_form_residual() < 10.0 * DEFAULT_TOLERANCE, "n={n} c={c}");
                assert!(r.lambda.windows(2).all(|w| w[0] < w[1]));
                assert!(r.lambda.iter().sum::<f64>().abs() < 1e-10);
                for j in 0..n {
                    assert!((r.lambda[j] + r.lambda[n - 1 - j]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn free_and_tg_modes_bypass_solver() {
        let r = roots(3, Coupling::Finite(0.0));
        assert_eq!(r.lambda, vec![0.0; 3]);
        let r = roots(3, Coupling::TonksGirardeau);
        assert_eq!(r.lambda, vec![-2.0 * PI, 0.0, 2.0 * PI]);
        assert!(r.product_form_residual() < 1e-12);
        assert!(matches!(gaudin_data(&roots(2, Coupling::Finite(0.0))), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn gaudin_matrix_is_spd() {
        let r = roots(5, Coupling::Finite(2.0));
        let g = gaudin_data(&r).unwrap();
        assert!((&g.matrix - g.matrix.transpose()).norm() < 1e-15);
        assert!(g.norm_squared > 0.0);
        assert!(g.matrix.clone().symmetric_eigen().eigenvalues.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn wavefunction_basics() {
        let r = roots(1, Coupling::Finite(3.0));
        assert!((wavefunction_value(&r, &[0.37]).unwrap() - 1.0).norm() < 1e-14);
        let r = roots(3, Coupling::Finite(0.0));
        assert_eq!(wavefunction_value(&r, &[0.1, 0.2, 0.3]).unwrap(), Complex64::new(1.0, 0.0));

        let r = roots(3, Coupling::Finite(2.0));
        assert!(matches!(wavefunction_value(&r, &[0.1, 1.2, 0.3]), Err(Error::Domain(_))));
        let a = wavefunction_value(&r, &[0.1, 0.7, 0.4]).unwrap();
        let b = wavefunction_value(&r, &[0.4, 0.1, 0.7]).unwrap();
        assert!((a - b).norm() < 1e-12);
        let a = wavefunction_value(&r, &[0.0, 0.7, 0.4]).unwrap();
        let b = wavefunction_value(&r, &[1.0, 0.7, 0.4]).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn tg_wavefunction_is_slater_modulus() {
        let r = roots(3, Coupling::TonksGirardeau);
        let x = [0.12, 0.83, 0.45];
        let m = nalgebra::Matrix3::from_fn(|j, k| Complex64::from_polar(1.0, r.lambda[j] * x[k]));
        let want = m.determinant().norm() / 6f64.sqrt();
        let got = wavefunction_value(&r, &x).unwrap();
        assert!((got.re - want).abs() < 1e-12 && got.im.abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn size_limit() {
        let r = roots(9, Coupling::Finite(1.0));
        assert!(matches!(Wavefunction::new(&r), Err(Error::Size { .. })));
    }
}
