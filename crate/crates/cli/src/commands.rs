use std::path::PathBuf;

use llproj_core::counting::{
    balanced_probability_asymptotic, distribution_cumulants, free_boson_distribution,
    gaussian_pk_arc, variance_asymptotic,
};
use llproj_core::oracle::{grid_reduced_density, mc_projection_distribution, quad_ordered_exp_integral};
use llproj_core::{
    entanglement_spectrum, entropy_upper_bound, gaudin_data, ordered_exp_integral, solve_bethe_roots,
    BetheRoots, Coupling, CountingModel, Error, ModelParams, OrderedExpIntegralKey, ProjectionEngine,
};
use rayon::prelude::*;
use serde_json::json;

use crate::args::{
    Command, GridArgs, KSelect, McArgs, OracleCommand, OutcomeArgs, Outputs, PointArgs, SimplexArgs,
    SweepArgs, TgArgs,
};
use crate::output::{Cell, Report, Row, STANDARD_COLUMNS};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_)
            | CliError::Core(Error::InvalidParams(_) | Error::InvalidInput(_) | Error::Size { .. }) => 2,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                Error::InvalidParams(_) => "invalid_params",
                Error::InvalidInput(_) => "invalid_input",
                Error::Domain(_) => "domain",
                Error::Size { .. } => "size",
                Error::SolverFailure { .. } => "solver_failure",
                Error::Consistency(_) => "consistency",
                Error::Numerical(_) => "numerical",
                Error::Accuracy { .. } => "accuracy",
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Runs a command, returning its results and the requested output file.
pub fn run(command: &Command) -> CliResult<(Report, Option<PathBuf>)> {
    match command {
        Command::Roots(a) => Ok((roots(a)?, None)),
        Command::Prob(a) => Ok((outcomes(a, false)?, None)),
        Command::Entropy(a) => Ok((outcomes(a, true)?, None)),
        Command::Report(a) => Ok((report(a)?, None)),
        Command::Sweep(a) => Ok((sweep(a)?, a.out.clone())),
        Command::Tg(a) => Ok((tg(a)?, a.out.clone())),
        Command::Oracle(OracleCommand::Mc(a)) => Ok((oracle_mc(a)?, None)),
        Command::Oracle(OracleCommand::Grid(a)) => Ok((oracle_grid(a)?, None)),
        Command::Oracle(OracleCommand::Simplex(a)) => Ok((oracle_simplex(a)?, None)),
    }
}

fn solve(n: usize, coupling: Coupling, ell: f64, tol: f64) -> CliResult<BetheRoots> {
    Ok(solve_bethe_roots(&ModelParams::new(n, coupling, ell)?, tol)?)
}

fn point_params(p: &PointArgs) -> serde_json::Value {
    json!({
        "N": p.n,
        "c": p.c.0.value(),
        "is_TG": p.c.0.is_tg(),
        "ell": p.ell,
        "tol": p.tol,
    })
}

fn resolve_k(k: KSelect, n: usize) -> CliResult<Vec<usize>> {
    let ks = k.resolve(n);
    match ks.iter().find(|&&k| k > n) {
        Some(k) => Err(CliError::Usage(format!("k = {k} exceeds N = {n}"))),
        None => Ok(ks),
    }
}

/// One row of the standard schema; `None` leaves a column empty.
struct StandardRow {
    n: usize,
    coupling: Coupling,
    ell: f64,
    k: usize,
    p: Option<f64>,
    entropy: Option<f64>,
    e_pp: Option<f64>,
    residual: f64,
}

impl StandardRow {
    fn into_row(self) -> Row {
        let e_k = self.p.zip(self.entropy).map(|(p, s)| p * s);
        Row::new(vec![
            Cell::from(self.n),
            Cell::opt(self.coupling.value()),
            Cell::from(self.ell),
            Cell::from(self.k),
            Cell::opt(self.p),
            Cell::opt(self.entropy),
            Cell::from(entropy_upper_bound(self.n, self.k)),
            Cell::opt(e_k),
            Cell::opt(self.e_pp),
            Cell::from(usize::from(self.coupling.is_tg())),
            Cell::from(self.residual),
        ])
    }
}

fn roots(a: &PointArgs) -> CliResult<Report> {
    let r = solve(a.n, a.c.0, a.ell, a.tol)?;
    let norm = if r.coupling().is_free() {
        1.0
    } else {
        gaudin_data(&r)?.norm_squared
    };
    let mut out = Report::new(
        "roots",
        point_params(a),
        &["N", "c", "ell", "j", "I_j", "lambda_j", "norm_squared", "is_TG", "residual"],
    );
    for (j, (lambda, qn)) in r.lambda.iter().zip(r.quantum_numbers.as_slice()).enumerate() {
        out.rows.push(Row::new(vec![
            Cell::from(a.n),
            Cell::opt(a.c.0.value()),
            Cell::from(a.ell),
            Cell::from(j),
            Cell::from(*qn),
            Cell::from(*lambda),
            Cell::from(norm),
            Cell::from(usize::from(a.c.0.is_tg())),
            Cell::from(r.residual),
        ]));
    }
    out.residual = r.residual;
    Ok(out)
}

fn outcomes(a: &OutcomeArgs, with_entropy: bool) -> CliResult<Report> {
    let p = &a.point;
    let ks = resolve_k(a.k, p.n)?;
    let r = solve(p.n, p.c.0, p.ell, p.tol)?;
    let engine = ProjectionEngine::new(&r)?;
    let mut params = point_params(p);
    params["k"] = json!(ks);
    let mut out = Report::new(if with_entropy { "entropy" } else { "prob" }, params, &STANDARD_COLUMNS);
    for k in ks {
        let row = StandardRow {
            n: p.n,
            coupling: p.c.0,
            ell: p.ell,
            k,
            p: None,
            entropy: None,
            e_pp: None,
            residual: r.residual,
        };
        if with_entropy {
            let outcome = engine.build_reduced_density(k, p.ell)?;
            let spectrum = entanglement_spectrum(&outcome)?;
            out.rows.push(
                StandardRow {
                    p: Some(outcome.probability),
                    entropy: Some(spectrum.entropy_bits),
                    ..row
                }
                .into_row()
                .with_extra("eigenvalues", json!(spectrum.eigenvalues))
                .with_extra("rank", json!(spectrum.rank)),
            );
        } else {
            let prob = engine.projection_probability(k, p.ell)?;
            out.rows.push(StandardRow { p: Some(prob), ..row }.into_row());
        }
    }
    out.residual = r.residual;
    out.cache_hits = engine.cache().hits();
    Ok(out)
}

fn report(a: &PointArgs) -> CliResult<Report> {
    let r = solve(a.n, a.c.0, a.ell, a.tol)?;
    let engine = ProjectionEngine::new(&r)?;
    let rep = engine.entanglement_report(a.ell)?;
    let mut params = point_params(a);
    params["argmax_k"] = json!(rep.argmax_k);
    let mut out = Report::new("report", params, &STANDARD_COLUMNS);
    for o in &rep.outcomes {
        out.rows.push(
            StandardRow {
                n: a.n,
                coupling: a.c.0,
                ell: a.ell,
                k: o.k,
                p: Some(o.probability),
                entropy: Some(o.spectrum.entropy_bits),
                e_pp: Some(rep.epp),
                residual: r.residual,
            }
            .into_row()
            .with_extra("eigenvalues", json!(o.spectrum.eigenvalues))
            .with_extra("rank", json!(o.spectrum.rank)),
        );
    }
    out.residual = r.residual;
    out.cache_hits = engine.cache().hits();
    Ok(out)
}

struct PointResult {
    rows: Vec<Row>,
    residual: f64,
    cache_hits: u64,
}

fn sweep_point(n: usize, coupling: Coupling, a: &SweepArgs) -> CliResult<PointResult> {
    let ks = resolve_k(a.k, n)?;
    let r = solve(n, coupling, a.ell, a.tol)?;
    let engine = ProjectionEngine::new(&r)?;
    let base = |k| StandardRow {
        n,
        coupling,
        ell: a.ell,
        k,
        p: None,
        entropy: None,
        e_pp: None,
        residual: r.residual,
    };
    let mut rows = Vec::with_capacity(ks.len());
    match a.outputs {
        Outputs::Prob => {
            for k in ks {
                let p = engine.projection_probability(k, a.ell)?;
                rows.push(StandardRow { p: Some(p), ..base(k) }.into_row());
            }
        }
        Outputs::Entropy => {
            for k in ks {
                let outcome = engine.build_reduced_density(k, a.ell)?;
                let s = entanglement_spectrum(&outcome)?.entropy_bits;
                rows.push(
                    StandardRow {
                        p: Some(outcome.probability),
                        entropy: Some(s),
                        ..base(k)
                    }
                    .into_row(),
                );
            }
        }
        Outputs::Epp | Outputs::All => {
            let rep = engine.entanglement_report(a.ell)?;
            for k in ks {
                let o = &rep.outcomes[k];
                rows.push(
                    StandardRow {
                        p: Some(o.probability),
                        entropy: Some(o.spectrum.entropy_bits),
                        e_pp: Some(rep.epp),
                        ..base(k)
                    }
                    .into_row(),
                );
            }
        }
    }
    Ok(PointResult {
        rows,
        residual: r.residual,
        cache_hits: engine.cache().hits(),
    })
}

fn sweep(a: &SweepArgs) -> CliResult<Report> {
    let grid = a.c_grid.values();
    let mut points = Vec::new();
    for &n in &a.n {
        points.extend(grid.iter().map(|&c| (n, Coupling::Finite(c))));
        if !a.no_tg {
            points.push((n, Coupling::TonksGirardeau));
        }
    }
    let results: Vec<PointResult> = points
        .par_iter()
        .map(|&(n, c)| sweep_point(n, c, a))
        .collect::<CliResult<_>>()?;
    let params = json!({
        "N": a.n,
        "c_grid": a.c_grid.to_string(),
        "tg": !a.no_tg,
        "ell": a.ell,
        "k": format!("{:?}", a.k).to_lowercase(),
        "outputs": format!("{:?}", a.outputs).to_lowercase(),
        "tol": a.tol,
    });
    let mut out = Report::new("sweep", params, &STANDARD_COLUMNS);
    for res in results {
        out.residual = out.residual.max(res.residual);
        out.cache_hits += res.cache_hits;
        out.rows.extend(res.rows);
    }
    Ok(out)
}

fn tg(a: &TgArgs) -> CliResult<Report> {
    let mut out = Report::new(
        "tg",
        json!({ "N": a.n, "ell": a.ell, "k": format!("{:?}", a.k).to_lowercase() }),
        &["N", "ell", "k", "p_k", "p_free", "p_gauss", "kappa2", "kappa2_asym", "p_half_asym"],
    );
    let models: Vec<CountingModel> = a
        .n
        .par_iter()
        .map(|&n| CountingModel::new(n, a.ell))
        .collect::<Result<_, _>>()?;
    for (model, &n) in models.iter().zip(&a.n) {
        let ks = resolve_k(a.k, n)?;
        let pk = model.counting_distribution();
        let free = free_boson_distribution(n, a.ell);
        let kappa2 = distribution_cumulants(pk).k2;
        for k in ks {
            out.rows.push(Row::new(vec![
                Cell::from(n),
                Cell::from(a.ell),
                Cell::from(k),
                Cell::from(pk[k]),
                Cell::from(free[k]),
                Cell::from(gaussian_pk_arc(n, a.ell, k)),
                Cell::from(kappa2),
                Cell::from(variance_asymptotic(n, a.ell)),
                Cell::from(balanced_probability_asymptotic(n)),
            ]));
        }
    }
    Ok(out)
}

fn oracle_mc(a: &McArgs) -> CliResult<Report> {
    let p = &a.point;
    let ks = resolve_k(a.k, p.n)?;
    let r = solve(p.n, p.c.0, p.ell, p.tol)?;
    let exact = ProjectionEngine::new(&r)?.probability_distribution(p.ell)?;
    let mc = mc_projection_distribution(&r, p.ell, a.samples, a.seed)?;
    let mut params = point_params(p);
    params["samples"] = json!(a.samples);
    params["seed"] = json!(a.seed);
    let mut out = Report::new(
        "oracle mc",
        params,
        &["N", "c", "ell", "k", "p_exact", "p_mc", "std_error", "z_score", "samples", "seed", "residual"],
    );
    for k in ks {
        let est = mc[k];
        out.rows.push(Row::new(vec![
            Cell::from(p.n),
            Cell::opt(p.c.0.value()),
            Cell::from(p.ell),
            Cell::from(k),
            Cell::from(exact[k]),
            Cell::from(est.mean),
            Cell::from(est.std_error),
            Cell::from(est.z_score(exact[k])),
            Cell::from(est.samples),
            Cell::Text(est.seed.to_string()),
            Cell::from(r.residual),
        ]));
    }
    out.residual = r.residual;
    Ok(out)
}

fn oracle_grid(a: &GridArgs) -> CliResult<Report> {
    let p = &a.point;
    let ks = resolve_k(a.k, p.n)?;
    let r = solve(p.n, p.c.0, p.ell, p.tol)?;
    let engine = ProjectionEngine::new(&r)?;
    let mut params = point_params(p);
    params["points"] = json!(a.points);
    let mut out = Report::new(
        "oracle grid",
        params,
        &[
            "N", "c", "ell", "k", "p_exact", "p_grid", "S_exact", "S_grid_fine", "S_grid_coarse",
            "S_richardson", "points", "residual",
        ],
    );
    for k in ks {
        let exact_outcome = engine.build_reduced_density(k, p.ell)?;
        let exact = entanglement_spectrum(&exact_outcome)?;
        let grid = grid_reduced_density(&r, k, p.ell, a.points)?;
        out.rows.push(
            Row::new(vec![
                Cell::from(p.n),
                Cell::opt(p.c.0.value()),
                Cell::from(p.ell),
                Cell::from(k),
                Cell::from(exact_outcome.probability),
                Cell::from(grid.probability),
                Cell::from(exact.entropy_bits),
                Cell::from(grid.fine.entropy_bits),
                Cell::from(grid.coarse.entropy_bits),
                Cell::from(grid.richardson_entropy()),
                Cell::from(a.points),
                Cell::from(r.residual),
            ])
            .with_extra("eigenvalues_exact", json!(exact.eigenvalues))
            .with_extra("eigenvalues_grid", json!(grid.fine.eigenvalues.iter().take(exact.eigenvalues.len()).collect::<Vec<_>>())),
        );
    }
    out.residual = r.residual;
    Ok(out)
}

fn oracle_simplex(a: &SimplexArgs) -> CliResult<Report> {
    let key = OrderedExpIntegralKey::new(a.mu.clone(), a.a, a.b);
    let exact = ordered_exp_integral(&key)?;
    let quad = quad_ordered_exp_integral(&key)?;
    let mut out = Report::new(
        "oracle simplex",
        json!({ "mu": a.mu, "a": a.a, "b": a.b }),
        &["m", "a", "b", "re_exact", "im_exact", "re_quad", "im_quad", "abs_diff"],
    );
    out.rows.push(Row::new(vec![
        Cell::from(a.mu.len()),
        Cell::from(a.a),
        Cell::from(a.b),
        Cell::from(exact.re),
        Cell::from(exact.im),
        Cell::from(quad.re),
        Cell::from(quad.im),
        Cell::from((exact - quad).norm()),
    ]));
    Ok(out)
}
