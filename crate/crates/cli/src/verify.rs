//! Invariant suite behind `schur-cmv verify`.

use std::path::Path;

use schur_cmv::cmv::{assemble, finite_cmv, CapChoice, CmvAssembly};
use schur_cmv::defect::elementary_rotation;
use schur_cmv::linalg::{self, c, max_abs_diff, operator_norm, ComplexMatrix};
use schur_cmv::realization::{certify_schur_norm, taylor_extract, SchurEvaluator};
use schur_cmv::sequence::{
    build_toeplitz, classify, krein_short, params_to_taylor_recursive, shorted_via_params, taylor_to_params,
    ChoiceSequence, Side,
};
use schur_cmv::solution::{compression_check, resolvent_update, CoefficientFunction, SchurSolver};
use schur_cmv::{Complex64, Tolerances};
use serde_json::{Map, Value};

use crate::error::CliError;
use crate::io::{self, num, Problem};
use crate::Report;

const SAMPLE_POINTS: [(f64, f64); 4] = [(0.3, 0.0), (-0.5, 0.2), (0.1, 0.7), (0.0, -0.9)];

fn samples() -> impl Iterator<Item = Complex64> {
    SAMPLE_POINTS.iter().map(|&(re, im)| c(re, im))
}

struct Check {
    name: &'static str,
    residual: f64,
    tolerance: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.residual.is_finite() && self.residual <= self.tolerance
    }
}

#[derive(Default)]
struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn add(&mut self, name: &'static str, residual: f64, tolerance: f64) {
        self.checks.push(Check {
            name,
            residual,
            tolerance,
        });
    }

    /// Records `f`'s residual; an error counts as an infinite residual.
    fn try_add(&mut self, name: &'static str, tolerance: f64, f: impl FnOnce() -> schur_cmv::Result<f64>) {
        self.add(name, f().unwrap_or(f64::INFINITY), tolerance);
    }
}

/// A fixed contraction of the given shape: `0.5` on the leading diagonal, `0.1i` on the next.
fn fixed_contraction(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |i, j| {
        if i == j {
            c(0.5, 0.0)
        } else if j == i + 1 {
            c(0.0, 0.1)
        } else {
            c(0.0, 0.0)
        }
    })
}

fn unitarity(m: &ComplexMatrix) -> f64 {
    let a = (m.adjoint() * m - linalg::identity(m.ncols())).norm();
    let b = (m * m.adjoint() - linalg::identity(m.nrows())).norm();
    a.max(b)
}

fn max_over<I: IntoIterator<Item = schur_cmv::Result<f64>>>(it: I) -> schur_cmv::Result<f64> {
    it.into_iter().try_fold(0.0f64, |acc, r| Ok(acc.max(r?)))
}

fn run_suite(p: &Problem) -> Result<Suite, CliError> {
    let tol = p.tol;
    let cl = classify(&p.data, &tol)?;
    if !cl.solvable {
        return Err(CliError::Unsolvable(format!(
            "Toeplitz norm {:.6e} exceeds 1 + {:e}",
            cl.toeplitz_norm, tol.contraction_slack
        )));
    }
    let order = p.data.order();
    let cs = taylor_to_params(&p.data, &tol)?;
    let mut s = Suite::default();

    s.add("toeplitz_contraction", (cl.toeplitz_norm - 1.0).max(0.0), tol.contraction_slack);
    let back = params_to_taylor_recursive(&cs, order);
    s.add(
        "parameter_round_trip",
        back.iter().zip(&p.data.coeffs).map(|(a, b)| max_abs_diff(a, b)).fold(0.0, f64::max),
        1e-9,
    );
    if let Some(given) = &p.given {
        let r = (0..given.len().min(cs.len()))
            .map(|k| max_abs_diff(given.gamma(k), cs.gamma(k)))
            .fold(if given.len() == cs.len() { 0.0 } else { f64::INFINITY }, f64::max);
        s.add("given_parameters_recovered", r, 1e-9);
    }
    s.add(
        "defect_intertwining",
        cs.entries
            .iter()
            .map(|e| {
                let a = (&e.gamma * &e.d_gamma - &e.d_gamma_star * &e.gamma).norm();
                let b = (e.gamma.adjoint() * &e.d_gamma_star - &e.d_gamma * e.gamma.adjoint()).norm();
                a.max(b)
            })
            .fold(0.0, f64::max),
        1e-10,
    );
    s.add(
        "rotation_unitarity",
        cs.entries.iter().map(|e| unitarity(&elementary_rotation(e).matrix)).fold(0.0, f64::max),
        1e-11,
    );
    for (name, side, adjoint, corner) in [
        ("shorted_operator_m", Side::M, false, p.data.dim_m),
        ("shorted_operator_n", Side::N, true, p.data.dim_n),
    ] {
        s.try_add(name, 1e-9, || {
            let t = build_toeplitz(&p.data, adjoint);
            let sm = linalg::identity(t.ncols()) - t.adjoint() * &t;
            let basis = linalg::block(&linalg::identity(t.ncols()), 0, 0, t.ncols(), corner);
            let krein = krein_short(&sm, &basis, tol.rank_tol)?;
            let product = shorted_via_params(&cs, order, side)?;
            Ok(max_abs_diff(&linalg::block(&krein, 0, 0, corner, corner), &product))
        });
    }
    s.add(
        "uniqueness_consistency",
        if cl.unique == cs.terminated.is_some() { 0.0 } else { 1.0 },
        0.0,
    );

    let solver = SchurSolver::new(&p.data, &tol)?;
    s.try_add("central_interpolation", 1e-8, || {
        let coeffs = taylor_extract(|z| Ok(solver.central(z)?.value), order)?;
        Ok(coeffs.iter().zip(&p.data.coeffs).map(|(a, b)| max_abs_diff(a, b)).fold(0.0, f64::max))
    });
    s.try_add("central_schur_bound", tol.cert_tol, || {
        Ok((certify_schur_norm(|z| Ok(solver.central(z)?.value), &[0.3, 0.6, 0.9], 64)? - 1.0).max(0.0))
    });
    if let Some(cf) = solver.coefficient_function() {
        let (rows, cols) = cf.parameter_shape();
        let e = fixed_contraction(rows, cols);
        s.try_add("fractional_forms", 1e-11, || {
            max_over(samples().map(|z| {
                let q = cf.eval(z)?;
                Ok(max_abs_diff(&q.apply(&e)?, &q.apply_left(&e)?))
            }))
        });
        s.try_add("coefficient_contraction", tol.cert_tol, || {
            max_over(samples().map(|z| Ok((operator_norm(&cf.eval(z)?.stacked()) - 1.0).max(0.0))))
        });
        let f = SchurEvaluator::constant(e, &tol)?;
        s.try_add("parameter_interpolation", 1e-8, || {
            let coeffs = taylor_extract(|z| Ok(solver.theta(&f, z)?.value), order)?;
            Ok(coeffs.iter().zip(&p.data.coeffs).map(|(a, b)| max_abs_diff(a, b)).fold(0.0, f64::max))
        });
        s.try_add("parameter_schur_bound", tol.cert_tol, || {
            Ok((certify_schur_norm(|z| Ok(solver.theta(&f, z)?.value), &[0.3, 0.6, 0.9], 64)? - 1.0).max(0.0))
        });
    }
    s.try_add("evaluator_adjoint_symmetry", 1e-10, || {
        let f = SchurEvaluator::from_sequence(&cs)?;
        let g = SchurEvaluator::from_sequence(&cs.adjoint())?;
        max_over(samples().map(|z| Ok(max_abs_diff(&g.eval(z.conj())?.adjoint(), &f.eval(z)?))))
    });
    s.try_add("extraction_inverts_parameter_map", 1e-10, || {
        let f = SchurEvaluator::from_sequence(&cs)?;
        let got = taylor_extract(|z| f.eval(z), order + 2)?;
        let want = params_to_taylor_recursive(&cs, order + 2);
        Ok(got.iter().zip(&want).map(|(a, b)| max_abs_diff(a, b)).fold(0.0, f64::max))
    });

    cmv_checks(&mut s, &cs)?;
    Ok(s)
}

fn largest_assembly(cs: &ChoiceSequence) -> Option<CmvAssembly> {
    if cs.len() >= 3 {
        if let Ok(a) = assemble(cs, (cs.len() - 3) / 2, CapChoice::Actual) {
            return Some(a);
        }
    }
    if cs.len() >= 2 {
        return assemble(cs, (cs.len() - 2) / 2, CapChoice::Zero).ok();
    }
    None
}

fn cmv_checks(s: &mut Suite, cs: &ChoiceSequence) -> Result<(), CliError> {
    if let Some(a) = largest_assembly(cs) {
        s.add("cmv_v_unitary", unitarity(&a.v_n), 1e-11);
        s.add(
            "cmv_factorization",
            max_abs_diff(&a.s_n, &(&a.w_n * &a.v_n)).max(max_abs_diff(&a.s_tilde_n, &(&a.v_n * &a.w_n))),
            1e-11,
        );
        s.add(
            "cmv_unitary_equivalence",
            max_abs_diff(&(&a.v_n * &a.s_n), &(&a.s_tilde_n * &a.v_n)),
            1e-11,
        );
        let cap = if a.cap.norm() > 0.0 {
            CapChoice::Actual
        } else {
            CapChoice::Zero
        };
        s.try_add("cmv_adjoint_law", 1e-12, || {
            let adj = assemble(&cs.adjoint(), a.level, cap)?;
            Ok(max_abs_diff(&a.s_tilde_n.adjoint(), &adj.s_n).max(max_abs_diff(&a.s_tilde_n0.adjoint(), &adj.s_n0)))
        });
        let b = a.boundary();
        let rows = linalg::block(&a.s_n0, b.d_star_last.0, 0, b.d_star_last.1, a.dim());
        let kt = a.s_tilde_n0.nrows();
        let cols = linalg::block(&a.s_tilde_n0, 0, b.d_last_tilde.0, kt, b.d_last_tilde.1);
        s.add("cmv_zero_row_column_law", rows.norm().max(cols.norm()), 1e-14);
        s.add(
            "cmv_contraction",
            (operator_norm(&a.s_n).max(operator_norm(&a.s_n0)) - 1.0).max(0.0),
            1e-10,
        );
        let g = fixed_contraction(a.cap.nrows(), a.cap.ncols());
        s.try_add("resolvent_update", 1e-10, || {
            let sg = a.s_with_cap(&g)?;
            let k = a.dim();
            max_over(samples().map(|z| {
                let z = z * 0.95 / z.norm().max(0.95);
                let direct = linalg::solve(&(linalg::identity(k) - &sg * z), &linalg::identity(k))?;
                Ok(max_abs_diff(&resolvent_update(&a, &g, z)?, &direct))
            }))
        });
    }
    let unitary_end = cs
        .terminated
        .is_some_and(|t| t.reason == schur_cmv::defect::ContractionClass::Unitary);
    if cs.len() >= 3 && (cs.terminated.is_none() || unitary_end) {
        let n = (cs.len() - 2) / 2;
        s.try_add("compression_identity", 1e-9, || max_over(samples().map(|z| compression_check(cs, n, z))));
    }
    if unitary_end {
        s.try_add("finite_cmv_unitary", 1e-11, || {
            let f = finite_cmv(cs)?;
            Ok(unitarity(&f.u0).max(unitarity(&f.u0_tilde)))
        });
        let p = cs.len() - 1;
        if p >= 1 {
            // transfer function against the coefficient function capped with Γ_p
            s.try_add("finite_cmv_transfer", 1e-10, || {
                let f = finite_cmv(cs)?;
                let cf = CoefficientFunction::new(cs, p - 1)?;
                max_over(samples().map(|z| Ok(max_abs_diff(&f.transfer(z)?, &cf.eval(z)?.apply(cs.gamma(p))?))))
            });
        }
    }
    Ok(())
}

/// The problems checked when `verify` gets no file.
pub fn builtin_problems(tol: Tolerances) -> Vec<(&'static str, Problem)> {
    let r = |x: f64| c(x, 0.0);
    let data_problem = |values: &[f64]| {
        let data = schur_cmv::sequence::SchurProblemData::scalar(values).expect("non-empty");
        Problem {
            data,
            given: None,
            tol,
        }
    };
    let params = |m: usize, n: usize, gammas: Vec<ComplexMatrix>| {
        io::problem_from_params(ChoiceSequence::new(m, n, gammas, tol).expect("built-in parameters are valid"))
    };
    let mat = |rows: usize, cols: usize, v: &[Complex64]| ComplexMatrix::from_row_slice(rows, cols, v);
    vec![
        ("scalar_family", data_problem(&[0.5, 0.375])),
        ("scalar_unique", data_problem(&[0.5, 0.75])),
        (
            "matrix_family",
            params(
                2,
                2,
                vec![
                    mat(2, 2, &[r(0.3), c(0.0, 0.1), r(-0.2), r(0.4)]),
                    mat(2, 2, &[r(0.1), r(0.2), r(0.0), r(-0.3)]),
                    mat(2, 2, &[c(0.0, 0.25), r(0.0), r(0.1), r(0.2)]),
                    mat(2, 2, &[r(0.1), r(-0.1), r(0.2), r(0.05)]),
                ],
            ),
        ),
        (
            "rectangular_isometric",
            params(1, 2, vec![mat(2, 1, &[r(0.3), c(0.0, 0.4)]), mat(2, 1, &[r(0.6), r(0.8)])]),
        ),
        (
            "matrix_unitary",
            params(
                2,
                2,
                vec![
                    mat(2, 2, &[r(0.2), r(0.1), c(0.0, -0.3), r(0.25)]),
                    mat(2, 2, &[r(0.1), r(0.0), r(0.3), c(0.2, 0.1)]),
                    mat(2, 2, &[r(0.0), r(1.0), c(0.0, 1.0), r(0.0)]),
                ],
            ),
        ),
    ]
}

fn problem_json(name: &str, p: &Problem, suite: &Suite) -> Value {
    let checks = suite
        .checks
        .iter()
        .map(|ch| {
            let mut o = Map::new();
            o.insert("name".into(), ch.name.into());
            o.insert("residual".into(), num(ch.residual));
            o.insert("tolerance".into(), num(ch.tolerance));
            o.insert("pass".into(), ch.pass().into());
            Value::Object(o)
        })
        .collect();
    let mut o = Map::new();
    o.insert("problem".into(), name.into());
    o.insert("dim_m".into(), p.data.dim_m.into());
    o.insert("dim_n".into(), p.data.dim_n.into());
    o.insert("order".into(), p.data.order().into());
    o.insert("checks".into(), Value::Array(checks));
    Value::Object(o)
}

pub(crate) fn cmd_verify(path: Option<&Path>, tol_flags: &[String]) -> Result<Report, CliError> {
    let problems = match path {
        Some(path) => vec![(path.display().to_string(), io::load_problem(path, tol_flags)?)],
        None => {
            let mut tol = Tolerances::default();
            io::apply_tol_flags(&mut tol, tol_flags)?;
            builtin_problems(tol)
                .into_iter()
                .map(|(name, p)| (name.to_string(), p))
                .collect()
        }
    };
    let mut reports = Vec::with_capacity(problems.len());
    let mut failed = Vec::new();
    let mut total = 0;
    for (name, p) in &problems {
        let suite = run_suite(p)?;
        total += suite.checks.len();
        failed.extend(suite.checks.iter().filter(|ch| !ch.pass()).map(|ch| format!("{name}:{}", ch.name)));
        reports.push(problem_json(name, p, &suite));
    }
    let mut o = Map::new();
    o.insert("problems".into(), Value::Array(reports));
    o.insert("checks".into(), total.into());
    o.insert("failed".into(), failed.len().into());
    o.insert("passed".into(), failed.is_empty().into());
    let failure = (!failed.is_empty())
        .then(|| CliError::Verify(format!("{} of {total} checks failed: {}", failed.len(), failed.join(", "))));
    Ok(Report {
        value: Value::Object(o),
        failure,
    })
}
