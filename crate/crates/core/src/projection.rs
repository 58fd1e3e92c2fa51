//! Projection probabilities, reduced density matrices and entanglement of
//! the fixed-number projections of the ground state.
//!
//! With `k` particles in `A = [0, ell]` and the rest in `B = [ell, 1]`, the
//! wavefunction is symmetric within each region, so every integral reduces
//! to the ordered sector `x_1 < ... < x_k < ell < x_{k+1} < ... < x_N`
//! (multiplicity `k! (N-k)!`). On that sector every `sgn(x_j - x_k)` is
//! fixed, so each permutation amplitude is a constant.
//!
//! Grouping permutations by the set `S` of rapidities assigned to `A`
//! factorizes the projected state as a finite sum `Σ_S u_S(x_A) v_S(x_B)`,
//! one term per momentum split. Then
//!
//! * `gram[S', S''] = <u_S'|u_S''>_A` is the Gram matrix of the A-side split
//!   functions, and
//! * `coeff[S, S'] = <v_S'|v_S>_B`, scaled by the projection normalization,
//!   is the B-trace coupling with shared B coordinates,
//!
//! so that `ρ_A = Σ coeff[S,S'] |u_S><u_S'|`. Its nonzero spectrum is that of
//! `L^H coeff L` with `gram = L L^H`, which makes the rank bound `C(N,k)`
//! explicit. All matrix elements are finite sums of ordered-simplex
//! exponential integrals, evaluated exactly by [`crate::simplex`].

use std::sync::Arc;

use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bethe::{norm_squared, pair_factor, BetheRoots, Coupling, ModelParams, DEFAULT_MAX_PARTICLES};
use crate::error::{Error, Result};
use crate::numeric::{binomial, entropy_bits, factorial, parity, pivoted_cholesky, CompensatedSum};
use crate::simplex::{OrderedExpIntegralKey, SimplexCache};

/// Imaginary residue of `p(k)` tolerated before it is discarded.
pub const PROBABILITY_IMAG_TOL: f64 = 1e-10;
/// Negative eigenvalues down to this are clipped to zero; below it the
/// assembly is treated as inconsistent.
pub const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-10;
/// Eigenvalues above this count towards the rank.
pub const RANK_THRESHOLD: f64 = 1e-10;

const GRAM_PIVOT_TOL: f64 = 1e-14;

/// Root indices assigned to partition A (sorted); the complement goes to B.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MomentumSplit {
    pub a_indices: Vec<usize>,
    pub b_indices: Vec<usize>,
}

/// All size-`k` splits of `0..n` in lexicographic order.
pub fn momentum_splits(n: usize, k: usize) -> Vec<MomentumSplit> {
    (0..n)
        .combinations(k)
        .map(|a| {
            let b = (0..n).filter(|i| !a.contains(i)).collect();
            MomentumSplit { a_indices: a, b_indices: b }
        })
        .collect()
}

/// Constant value of `(-1)^P F_P` on the ordered sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorAmplitude(pub Complex64);

/// Reduced-density data for one outcome `k`.
#[derive(Debug, Clone)]
pub struct ProjectionOutcome {
    pub n: usize,
    pub k: usize,
    pub ell: f64,
    pub probability: f64,
    pub splits: Vec<MomentumSplit>,
    /// B-trace coefficients, normalized so that `tr(coeff * gram) = 1`.
    pub coeff: DMatrix<Complex64>,
    /// Gram matrix of the A-side split functions over `A^k`.
    pub gram: DMatrix<Complex64>,
}

impl ProjectionOutcome {
    pub fn trace(&self) -> Complex64 {
        (&self.coeff * &self.gram).trace()
    }
}

/// Spectrum and von Neumann entropy of `ρ_A(k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntanglementSpectrum {
    /// Descending, clipped to be nonnegative.
    pub eigenvalues: Vec<f64>,
    pub entropy_bits: f64,
    pub rank: usize,
    pub upper_bound_bits: f64,
    /// Most negative eigenvalue before clipping (0 if none).
    pub min_raw_eigenvalue: f64,
}

/// One row of an [`EntanglementReport`].
#[derive(Debug, Clone, Serialize)]
pub struct OutcomeSummary {
    pub k: usize,
    pub probability: f64,
    pub spectrum: EntanglementSpectrum,
    /// `p(k) S_A(k)`.
    pub weighted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntanglementReport {
    pub params: ModelParams,
    pub outcomes: Vec<OutcomeSummary>,
    /// `max_k p(k) S_A(k)`.
    pub epp: f64,
    pub argmax_k: usize,
}

impl EntanglementReport {
    pub fn probabilities(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.probability).collect()
    }

    pub fn entropies(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.spectrum.entropy_bits).collect()
    }

    pub fn weighted(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.weighted).collect()
    }
}

/// `log2 C(N, k)`: entropy of a flat spectrum of maximal rank.
pub fn entropy_upper_bound(n: usize, k: usize) -> f64 {
    (binomial(n, k) as f64).log2()
}

/// One ordering of the rapidities on one side of a split.
#[derive(Debug, Clone)]
struct OrderedTerm {
    exponents: Vec<f64>,
    amplitude: Complex64,
}

/// Evaluates probabilities and reduced density matrices for one set of roots.
pub struct ProjectionEngine {
    roots: BetheRoots,
    norm_squared: f64,
    cache: Arc<SimplexCache>,
}

impl std::fmt::Debug for ProjectionEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProjectionEngine")
            .field("params", &self.roots.params)
            .field("norm_squared", &self.norm_squared)
            .finish()
    }
}

impl ProjectionEngine {
    pub fn new(roots: &BetheRoots) -> Result<Self> {
        Self::with_cache(roots, Arc::new(SimplexCache::default()))
    }

    pub fn with_cache(roots: &BetheRoots, cache: Arc<SimplexCache>) -> Result<Self> {
        let n = roots.n();
        if n > DEFAULT_MAX_PARTICLES {
            return Err(Error::Size {
                what: "particle number",
                value: n,
                max: DEFAULT_MAX_PARTICLES,
            });
        }
        Ok(Self {
            roots: roots.clone(),
            norm_squared: norm_squared(roots)?,
            cache,
        })
    }

    pub fn roots(&self) -> &BetheRoots {
        &self.roots
    }

    pub fn cache(&self) -> &SimplexCache {
        &self.cache
    }

    pub fn norm_squared(&self) -> f64 {
        self.norm_squared
    }

    fn n(&self) -> usize {
        self.roots.n()
    }

    fn is_free(&self) -> bool {
        self.roots.params.coupling.is_free()
    }

    fn pair(&self, lower: usize, upper: usize) -> Complex64 {
        let d = self.roots.lambda[upper] - self.roots.lambda[lower];
        pair_factor(self.roots.params.coupling, d, 1.0)
    }

    /// `(-1)^P F_P` on the ordered sector, for `perm[p]` = root index at position `p`.
    pub fn sector_amplitude(&self, perm: &[usize]) -> SectorAmplitude {
        let n = perm.len();
        let mut amp = Complex64::new(parity(perm) / (factorial(n) as f64).sqrt(), 0.0);
        for q in 0..n {
            for p in 0..q {
                amp *= self.pair(perm[p], perm[q]);
            }
        }
        SectorAmplitude(amp)
    }

    fn side_terms(&self, indices: &[usize]) -> Vec<OrderedTerm> {
        indices
            .iter()
            .copied()
            .permutations(indices.len())
            .map(|seq| {
                let mut amplitude = Complex64::new(parity(&seq), 0.0);
                for q in 0..seq.len() {
                    for p in 0..q {
                        amplitude *= self.pair(seq[p], seq[q]);
                    }
                }
                let exponents = seq.iter().map(|&i| self.roots.lambda[i]).collect();
                OrderedTerm { exponents, amplitude }
            })
            .collect()
    }

    /// Sign of the split shuffle times the A-B cross amplitudes, over √N!.
    fn cross_factor(&self, split: &MomentumSplit) -> Complex64 {
        let order: Vec<usize> = split.a_indices.iter().chain(&split.b_indices).copied().collect();
        let mut amp = Complex64::new(parity(&order) / (factorial(self.n()) as f64).sqrt(), 0.0);
        for &a in &split.a_indices {
            for &b in &split.b_indices {
                amp *= self.pair(a, b);
            }
        }
        amp
    }

    /// `M[i][j] = ∫ conj(f_i) f_j` over the ordered simplex on `[a, b]`,
    /// where `f_i = Σ_terms amplitude · exp(i exponents · x)`.
    fn overlap_matrix(&self, sides: &[Vec<OrderedTerm>], a: f64, b: f64) -> Result<DMatrix<Complex64>> {
        let m = sides.len();
        let rows: Vec<Vec<Complex64>> = (0..m)
            .into_par_iter()
            .map(|i| {
                (i..m)
                    .map(|j| {
                        let mut acc = CompensatedSum::new();
                        for s in &sides[i] {
                            for t in &sides[j] {
                                let mu = t
                                    .exponents
                                    .iter()
                                    .zip(&s.exponents)
                                    .map(|(x, y)| x - y)
                                    .collect();
                                let integral = self.cache.integral(&OrderedExpIntegralKey::new(mu, a, b))?;
                                acc.add(s.amplitude.conj() * t.amplitude * integral);
                            }
                        }
                        Ok(acc.value())
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = DMatrix::zeros(m, m);
        for (i, row) in rows.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                let j = i + off;
                if i == j {
                    out[(i, i)] = Complex64::new(v.re, 0.0);
                } else {
                    out[(i, j)] = v;
                    out[(j, i)] = v.conj();
                }
            }
        }
        Ok(out)
    }

    /// Unnormalized ordered-sector matrices `(C_raw, G_raw)` for outcome `k`.
    fn raw_matrices(&self, k: usize, ell: f64) -> Result<(Vec<MomentumSplit>, DMatrix<Complex64>, DMatrix<Complex64>)> {
        let splits = momentum_splits(self.n(), k);
        let a_sides: Vec<Vec<OrderedTerm>> = splits.iter().map(|s| self.side_terms(&s.a_indices)).collect();
        let b_sides: Vec<Vec<OrderedTerm>> = splits.iter().map(|s| self.side_terms(&s.b_indices)).collect();
        let cross: Vec<Complex64> = splits.iter().map(|s| self.cross_factor(s)).collect();

        let mut gram = self.overlap_matrix(&a_sides, 0.0, ell)?;
        for i in 0..splits.len() {
            for j in 0..splits.len() {
                gram[(i, j)] *= cross[i].conj() * cross[j];
            }
        }
        // coeff[S, S'] = <v_S'|v_S>
        let coeff = self.overlap_matrix(&b_sides, ell, 1.0)?.transpose();
        Ok((splits, coeff, gram))
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k > self.n() {
            return Err(Error::InvalidInput(format!("k = {k} exceeds N = {}", self.n())));
        }
        Ok(())
    }

    fn check_ell(ell: f64) -> Result<()> {
        if !(ell > 0.0 && ell < 1.0) {
            return Err(Error::InvalidParams(format!("arc fraction must lie in (0, 1), got {ell}")));
        }
        Ok(())
    }

    fn free_probability(&self, k: usize, ell: f64) -> f64 {
        let n = self.n();
        binomial(n, k) as f64 * ell.powi(k as i32) * (1.0 - ell).powi((n - k) as i32)
    }

    fn probability_from_raw(&self, k: usize, coeff: &DMatrix<Complex64>, gram: &DMatrix<Complex64>) -> Result<f64> {
        let m = coeff.nrows();
        let mut acc = CompensatedSum::new();
        for i in 0..m {
            for j in 0..m {
                acc.add(coeff[(i, j)] * gram[(j, i)]);
            }
        }
        let p = acc.value() * (factorial(self.n()) as f64 / self.norm_squared);
        if p.im.abs() > PROBABILITY_IMAG_TOL {
            return Err(Error::Consistency(format!(
                "p({k}) has imaginary residue {:e}",
                p.im
            )));
        }
        Ok(p.re)
    }

    /// Probability of finding exactly `k` particles in `[0, ell]`.
    pub fn projection_probability(&self, k: usize, ell: f64) -> Result<f64> {
        self.check_k(k)?;
        Self::check_ell(ell)?;
        if self.is_free() {
            return Ok(self.free_probability(k, ell));
        }
        let (_, coeff, gram) = self.raw_matrices(k, ell)?;
        self.probability_from_raw(k, &coeff, &gram)
    }

    /// `p(0), ..., p(N)`.
    pub fn probability_distribution(&self, ell: f64) -> Result<Vec<f64>> {
        (0..=self.n()).map(|k| self.projection_probability(k, ell)).collect()
    }

    pub fn build_reduced_density(&self, k: usize, ell: f64) -> Result<ProjectionOutcome> {
        self.check_k(k)?;
        Self::check_ell(ell)?;
        let n = self.n();
        if self.is_free() {
            let p = self.free_probability(k, ell);
            let gram = DMatrix::from_element(1, 1, Complex64::new(ell.powi(k as i32), 0.0));
            let c = binomial(n, k) as f64 * (1.0 - ell).powi((n - k) as i32) / p;
            return Ok(ProjectionOutcome {
                n,
                k,
                ell,
                probability: p,
                splits: vec![MomentumSplit {
                    a_indices: (0..k).collect(),
                    b_indices: (k..n).collect(),
                }],
                coeff: DMatrix::from_element(1, 1, Complex64::new(c, 0.0)),
                gram,
            });
        }
        let (splits, coeff, gram) = self.raw_matrices(k, ell)?;
        let p = self.probability_from_raw(k, &coeff, &gram)?;
        if !(p > 0.0) {
            return Err(Error::Numerical(format!("p({k}) = {p:e} is not positive")));
        }
        let coeff_scale = binomial(n, k) as f64 * factorial(n - k) as f64 / (p * self.norm_squared);
        let gram_scale = factorial(k) as f64;
        Ok(ProjectionOutcome {
            n,
            k,
            ell,
            probability: p,
            splits,
            coeff: coeff * Complex64::new(coeff_scale, 0.0),
            gram: gram * Complex64::new(gram_scale, 0.0),
        })
    }

    pub fn entanglement_report(&self, ell: f64) -> Result<EntanglementReport> {
        Self::check_ell(ell)?;
        let outcomes = (0..=self.n())
            .map(|k| {
                let outcome = self.build_reduced_density(k, ell)?;
                let spectrum = entanglement_spectrum(&outcome)?;
                Ok(OutcomeSummary {
                    k,
                    probability: outcome.probability,
                    weighted: outcome.probability * spectrum.entropy_bits,
                    spectrum,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let (argmax_k, epp) = weighted_argmax(&outcomes, self.n());
        Ok(EntanglementReport {
            params: ModelParams {
                ell,
                ..self.roots.params
            },
            outcomes,
            epp,
            argmax_k,
        })
    }
}

/// Maximum of `p S` with ties (to 1e-12 relative) going to the most balanced `k`.
fn weighted_argmax(outcomes: &[OutcomeSummary], n: usize) -> (usize, f64) {
    let max = outcomes.iter().map(|o| o.weighted).fold(0.0, f64::max);
    let tie = 1e-12 * max.abs().max(f64::MIN_POSITIVE);
    let best = outcomes
        .iter()
        .filter(|o| o.weighted >= max - tie)
        .min_by_key(|o| ((2 * o.k) as isize - n as isize).unsigned_abs() * (n + 1) + o.k)
        .expect("at least one outcome");
    (best.k, max)
}

/// Spectrum of `ρ_A` from its split representation: factor `gram = L L^H`,
/// diagonalize the Hermitian `L^H coeff L`.
pub fn entanglement_spectrum(outcome: &ProjectionOutcome) -> Result<EntanglementSpectrum> {
    let l = pivoted_cholesky(&outcome.gram, GRAM_PIVOT_TOL);
    let reduced = l.adjoint() * &outcome.coeff * &l;
    let hermitian = (&reduced + reduced.adjoint()) * Complex64::new(0.5, 0.0);
    let mut eigenvalues: Vec<f64> = hermitian.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let min_raw = eigenvalues.last().copied().unwrap_or(0.0).min(0.0);
    if min_raw < -NEGATIVE_EIGENVALUE_TOL {
        return Err(Error::Numerical(format!(
            "reduced density matrix for k = {} has eigenvalue {min_raw:e}",
            outcome.k
        )));
    }
    for a in eigenvalues.iter_mut() {
        if *a < 0.0 {
            *a = 0.0;
        }
    }
    let rank = eigenvalues.iter().filter(|&&a| a > RANK_THRESHOLD).count();
    if rank == 0 {
        return Err(Error::Consistency(format!(
            "reduced density matrix for k = {} has rank 0 with p = {:e}",
            outcome.k, outcome.probability
        )));
    }
    Ok(EntanglementSpectrum {
        entropy_bits: entropy_bits(&eigenvalues),
        eigenvalues,
        rank,
        upper_bound_bits: entropy_upper_bound(outcome.n, outcome.k),
        min_raw_eigenvalue: min_raw,
    })
}

/// Full report for the roots at partition fraction `ell`.
pub fn entanglement_report(roots: &BetheRoots, ell: f64) -> Result<EntanglementReport> {
    ProjectionEngine::new(roots)?.entanglement_report(ell)
}

pub fn projection_probability(roots: &BetheRoots, k: usize, ell: f64) -> Result<f64> {
    ProjectionEngine::new(roots)?.projection_probability(k, ell)
}

pub fn probability_distribution(roots: &BetheRoots, ell: f64) -> Result<Vec<f64>> {
    ProjectionEngine::new(roots)?.probability_distribution(ell)
}

pub fn build_reduced_density(roots: &BetheRoots, k: usize, ell: f64) -> Result<ProjectionOutcome> {
    ProjectionEngine::new(roots)?.build_reduced_density(k, ell)
}

/// Whether the coupling is the exact impenetrable limit.
pub fn is_tg(roots: &BetheRoots) -> bool {
    matches!(roots.params.coupling, Coupling::TonksGirardeau)
}
