use itertools::Itertools;
use llproj_core::numeric::binomial;
use llproj_core::oracle::{grid_reduced_density, quad_ordered_exp_integral};
use llproj_core::{
    entanglement_spectrum, gaudin_data, ordered_exp_integral, solve_bethe_roots, BetheRoots,
    Coupling, ModelParams, OrderedExpIntegralKey, ProjectionEngine, Wavefunction,
};
use num_complex::Complex64;

fn roots(n: usize, coupling: Coupling, ell: f64) -> BetheRoots {
    solve_bethe_roots(&ModelParams::new(n, coupling, ell).unwrap(), 1e-12).unwrap()
}

/// The ungrouped double permutation sum over ordered-sector amplitudes,
/// with each simplex factor supplied by `integral`.
fn double_sum<F>(r: &BetheRoots, k: usize, ell: f64, integral: F) -> Complex64
where
    F: Fn(&OrderedExpIntegralKey) -> Complex64,
{
    let n = r.n();
    let engine = ProjectionEngine::new(r).unwrap();
    let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let amps: Vec<Complex64> = perms.iter().map(|p| engine.sector_amplitude(p).0).collect();
    let mut total = Complex64::new(0.0, 0.0);
    for (p, ap) in perms.iter().zip(&amps) {
        for (q, aq) in perms.iter().zip(&amps) {
            let mu: Vec<f64> = p.iter().zip(q).map(|(&i, &j)| r.lambda[i] - r.lambda[j]).collect();
            let ia = integral(&OrderedExpIntegralKey::new(mu[..k].to_vec(), 0.0, ell));
            let ib = integral(&OrderedExpIntegralKey::new(mu[k..].to_vec(), ell, 1.0));
            total += ap * aq.conj() * ia * ib;
        }
    }
    let mult = (binomial(n, k) as f64)
        * (1..=k).product::<usize>() as f64
        * (1..=n - k).product::<usize>() as f64;
    total * mult / gaudin_data(r).unwrap().norm_squared
}

fn simplex_or_one(key: &OrderedExpIntegralKey) -> Complex64 {
    if key.mu.is_empty() {
        Complex64::new(1.0, 0.0)
    } else {
        ordered_exp_integral(key).unwrap()
    }
}

fn quad_or_one(key: &OrderedExpIntegralKey) -> Complex64 {
    if key.mu.is_empty() {
        Complex64::new(1.0, 0.0)
    } else {
        quad_ordered_exp_integral(key).unwrap()
    }
}

#[test]
fn grouped_probability_matches_double_permutation_sum() {
    for n in 1..=4 {
        for &c in &[0.3, 2.0, 25.0] {
            for &ell in &[0.3, 0.5, 0.71] {
                let r = roots(n, Coupling::Finite(c), ell);
                let engine = ProjectionEngine::new(&r).unwrap();
                for k in 0..=n {
                    let want = double_sum(&r, k, ell, simplex_or_one);
                    assert!(want.im.abs() < 1e-12);
                    let got = engine.projection_probability(k, ell).unwrap();
                    assert!((got - want.re).abs() < 1e-12, "n={n} c={c} ell={ell} k={k}: {got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn probability_matches_quadrature_double_sum() {
    for &(n, c) in &[(2, 1.0), (3, 4.0)] {
        let r = roots(n, Coupling::Finite(c), 0.4);
        let engine = ProjectionEngine::new(&r).unwrap();
        for k in 0..=n {
            let want = double_sum(&r, k, 0.4, quad_or_one);
            let got = engine.projection_probability(k, 0.4).unwrap();
            assert!((got - want.re).abs() < 1e-9, "n={n} k={k}: {got} vs {want}");
        }
    }
}

#[test]
fn sector_amplitudes_reproduce_wavefunction() {
    let r = roots(4, Coupling::Finite(1.7), 0.5);
    let engine = ProjectionEngine::new(&r).unwrap();
    let wf = Wavefunction::new(&r).unwrap();
    let norm = gaudin_data(&r).unwrap().norm_squared.sqrt();
    let x = [0.05, 0.31, 0.62, 0.97];
    let mut sum = Complex64::new(0.0, 0.0);
    for p in (0..4).permutations(4) {
        let phase: f64 = p.iter().zip(&x).map(|(&i, xi)| r.lambda[i] * xi).sum();
        sum += engine.sector_amplitude(&p).0 * Complex64::from_polar(1.0, phase);
    }
    let direct = wf.eval(&x).unwrap();
    assert!((sum / norm - direct).norm() < 1e-13, "{} vs {direct}", sum / norm);
}

#[test]
fn sector_amplitude_modulus_bound() {
    let r = roots(5, Coupling::Finite(0.8), 0.5);
    let engine = ProjectionEngine::new(&r).unwrap();
    let bound = 1.0 / (120f64).sqrt();
    for p in (0..5).permutations(5) {
        assert!(engine.sector_amplitude(&p).0.norm() <= bound * (1.0 + 1e-14));
    }
}

#[test]
fn spectrum_matches_grid_oracle() {
    let r = roots(2, Coupling::Finite(2.0), 0.5);
    let exact = entanglement_spectrum(&ProjectionEngine::new(&r).unwrap().build_reduced_density(1, 0.5).unwrap()).unwrap();
    let grid = grid_reduced_density(&r, 1, 0.5, 200).unwrap();
    let extrapolated = grid.richardson_eigenvalues();
    for (a, b) in exact.eigenvalues.iter().zip(&extrapolated) {
        assert!((a - b).abs() < 1e-6, "{:?} vs {extrapolated:?}", exact.eigenvalues);
    }
}

#[test]
fn tg_entropy_matches_grid_oracle() {
    let r = roots(2, Coupling::TonksGirardeau, 0.5);
    let exact = entanglement_spectrum(&ProjectionEngine::new(&r).unwrap().build_reduced_density(1, 0.5).unwrap()).unwrap();
    let grid = grid_reduced_density(&r, 1, 0.5, 200).unwrap();
    assert!((exact.entropy_bits - grid.fine.entropy_bits).abs() < 1e-4);
    let coarse_gap = (exact.entropy_bits - grid.coarse.entropy_bits).abs();
    let fine_gap = (exact.entropy_bits - grid.fine.entropy_bits).abs();
    assert!(fine_gap < coarse_gap);
}

#[test]
fn grid_converges_towards_exact_entropy() {
    for &c in &[0.5, 3.0, 40.0] {
        let r = roots(2, Coupling::Finite(c), 0.5);
        let exact = entanglement_spectrum(&ProjectionEngine::new(&r).unwrap().build_reduced_density(1, 0.5).unwrap()).unwrap();
        let grid = grid_reduced_density(&r, 1, 0.5, 120).unwrap();
        let coarse_gap = (exact.entropy_bits - grid.coarse.entropy_bits).abs();
        let fine_gap = (exact.entropy_bits - grid.fine.entropy_bits).abs();
        let rich_gap = (exact.entropy_bits - grid.richardson_entropy()).abs();
        assert!(fine_gap < coarse_gap && rich_gap < fine_gap, "c={c}: {coarse_gap} {fine_gap} {rich_gap}");
    }
}

#[test]
fn three_particle_grid_spectrum_is_normalized_and_close() {
    let r = roots(3, Coupling::Finite(2.0), 0.5);
    let exact = entanglement_spectrum(&ProjectionEngine::new(&r).unwrap().build_reduced_density(1, 0.5).unwrap()).unwrap();
    let grid = grid_reduced_density(&r, 1, 0.5, 100).unwrap();
    assert!((grid.fine.eigenvalues.iter().sum::<f64>() - 1.0).abs() < 2e-4);
    assert!((grid.fine.entropy_bits - exact.entropy_bits).abs() < 1e-3);
    assert!(grid.fine.rank >= exact.rank);
}

#[test]
fn free_grid_has_no_entanglement() {
    let r = roots(3, Coupling::Finite(0.0), 0.5);
    for pts in [20, 60] {
        let grid = grid_reduced_density(&r, 2, 0.5, pts).unwrap();
        assert_eq!(grid.fine.rank, 1);
        assert!(grid.fine.entropy_bits.abs() < 1e-9);
    }
}

#[test]
fn assembled_operator_has_unit_trace() {
    for &c in &[0.1, 1.0, 10.0] {
        let r = roots(5, Coupling::Finite(c), 0.37);
        let engine = ProjectionEngine::new(&r).unwrap();
        for k in 0..=5 {
            let out = engine.build_reduced_density(k, 0.37).unwrap();
            assert!((out.trace() - 1.0).norm() < 1e-8);
            assert_eq!(out.gram.nrows() as u128, binomial(5, k));
            let herm = &out.gram - out.gram.adjoint();
            assert!(herm.norm() < 1e-12 * out.gram.norm());
        }
    }
}
