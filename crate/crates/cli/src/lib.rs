//! Command-line front end for the `schur-cmv` library.
//!
//! [`run`] parses arguments, executes one subcommand and returns the exit
//! code with the captured standard output and error text; `main` only prints.

pub mod error;
pub mod io;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use schur_cmv::cmv::{assemble, finite_cmv, BlockIndex, CapChoice};
use schur_cmv::linalg::operator_norm;
use schur_cmv::sequence::{classify, taylor_to_params, ChoiceSequence};
use schur_cmv::solution::{SchurSolver, SolutionReport};
use schur_cmv::{Complex64, SchurError};
use serde_json::{Map, Value};

pub use error::CliError;
use io::{complex, matrix, num, shape, Problem};

#[derive(Parser, Debug)]
#[command(name = "schur-cmv", version, about = "Operator Schur interpolation through Schur parameters and CMV blocks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solvability and uniqueness report.
    Check(Common),
    /// Schur parameters of the data.
    Params(Common),
    /// Central solution (or the unique one) at the requested points.
    Central(EvalArgs),
    /// Solution for a given free parameter.
    Solve(SolveArgs),
    /// CMV blocks of the parameters.
    Cmv(CmvArgs),
    /// Runs the invariant suite on a problem, or on the built-in problems.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Problem file (JSON).
    problem: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Tolerance override, NAME=VALUE (repeatable).
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Also write the report to this file.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Points re+imi, comma separated.
    #[arg(long, value_name = "Z[,Z...]", value_delimiter = ',', allow_hyphen_values = true)]
    eval: Vec<String>,
    /// Circles R1,R2,.../K with K points each.
    #[arg(long, value_name = "R1,R2/K")]
    grid: Option<String>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    eval: EvalArgs,
    /// Free parameter file (JSON).
    #[arg(long, value_name = "PATH")]
    param: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cap {
    Zero,
    Actual,
}

#[derive(Args, Debug)]
struct CmvArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "zero")]
    cap: Cap,
    /// Level n (uses Γ_0..Γ_{2n+1}); defaults to the largest available.
    #[arg(long)]
    level: Option<usize>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Problem file; the built-in problems are used when omitted.
    problem: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// A report together with an optional error that sets the exit code.
struct Report {
    value: Value,
    failure: Option<CliError>,
}

impl From<Value> for Report {
    fn from(value: Value) -> Self {
        Report { value, failure: None }
    }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    code: 0,
                    stdout: e.to_string(),
                    stderr: String::new(),
                },
                _ => {
                    let first = e.to_string().lines().next().unwrap_or("invalid arguments").to_string();
                    let first = first.trim_start_matches("error: ").to_string();
                    failure_outcome(&CliError::Usage(first))
                }
            };
        }
    };
    let (result, out) = match cli.command {
        Command::Check(a) => (cmd_check(&a), a.output.out),
        Command::Params(a) => (cmd_params(&a), a.output.out),
        Command::Central(a) => (cmd_central(&a), a.common.output.out),
        Command::Solve(a) => (cmd_solve(&a), a.eval.common.output.out),
        Command::Cmv(a) => (cmd_cmv(&a), a.common.output.out),
        Command::Verify(a) => (verify::cmd_verify(a.problem.as_deref(), &a.output.tol), a.output.out),
    };
    match result {
        Ok(report) => {
            let mut text = serde_json::to_string_pretty(&report.value).expect("report serializes");
            text.push('\n');
            if let Some(path) = out {
                if let Err(e) = std::fs::write(&path, &text) {
                    return failure_outcome(&CliError::Io(format!("{}: {e}", path.display())));
                }
            }
            match report.failure {
                None => Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                },
                Some(err) => Outcome {
                    code: err.code(),
                    stdout: text,
                    stderr: err.diagnostic() + "\n",
                },
            }
        }
        Err(err) => failure_outcome(&err),
    }
}

fn failure_outcome(err: &CliError) -> Outcome {
    Outcome {
        code: err.code(),
        stdout: String::new(),
        stderr: err.diagnostic() + "\n",
    }
}

fn load(common: &Common) -> Result<Problem, CliError> {
    io::load_problem(&common.problem, &common.output.tol)
}

fn index_json(index: &BlockIndex) -> Value {
    Value::Array(
        index
            .spaces
            .iter()
            .map(|(label, dim)| {
                let mut o = Map::new();
                o.insert("space".into(), label.clone().into());
                o.insert("dim".into(), (*dim).into());
                Value::Object(o)
            })
            .collect(),
    )
}

fn cmd_check(a: &Common) -> Result<Report, CliError> {
    let p = load(a)?;
    let cl = classify(&p.data, &p.tol)?;
    let mut o = Map::new();
    o.insert("solvable".into(), cl.solvable.into());
    o.insert("unique".into(), cl.unique.into());
    o.insert("p".into(), cl.first_degenerate_index.map_or(Value::Null, Value::from));
    o.insert("order".into(), p.data.order().into());
    o.insert("shorted_m".into(), cl.shorted_m.as_ref().map_or(Value::Null, matrix));
    o.insert("shorted_n".into(), cl.shorted_n.as_ref().map_or(Value::Null, matrix));
    o.insert("toeplitz_norm".into(), num(cl.toeplitz_norm));
    let mut th = Map::new();
    th.insert("m".into(), num(cl.threshold_m));
    th.insert("n".into(), num(cl.threshold_n));
    o.insert("degeneracy_threshold".into(), Value::Object(th));
    o.insert("tolerances".into(), io::tolerances(&p.tol));
    let failure = (!cl.solvable).then(|| {
        CliError::Unsolvable(format!(
            "Toeplitz norm {:.6e} exceeds 1 + {:e}",
            cl.toeplitz_norm, p.tol.contraction_slack
        ))
    });
    Ok(Report {
        value: Value::Object(o),
        failure,
    })
}

/// The parameters: as given in the file, or recovered from solvable data.
fn parameters(p: &Problem) -> Result<ChoiceSequence, CliError> {
    if let Some(cs) = &p.given {
        return Ok(cs.clone());
    }
    let cl = classify(&p.data, &p.tol)?;
    if !cl.solvable {
        return Err(CliError::Unsolvable(format!(
            "Toeplitz norm {:.6e} exceeds 1 + {:e}",
            cl.toeplitz_norm, p.tol.contraction_slack
        )));
    }
    Ok(taylor_to_params(&p.data, &p.tol)?)
}

fn cmd_params(a: &Common) -> Result<Report, CliError> {
    let p = load(a)?;
    let cs = parameters(&p)?;
    let list = cs
        .entries
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let mut o = Map::new();
            o.insert("index".into(), k.into());
            o.insert("shape".into(), shape(e.gamma.shape()));
            o.insert("class".into(), e.class.name().into());
            o.insert("rank".into(), e.rank().into());
            o.insert("rank_star".into(), e.rank_star().into());
            o.insert("norm".into(), num(operator_norm(&e.gamma)));
            o.insert("gamma".into(), matrix(&e.gamma));
            Value::Object(o)
        })
        .collect();
    let mut o = Map::new();
    o.insert("dim_m".into(), cs.dim_m.into());
    o.insert("dim_n".into(), cs.dim_n.into());
    o.insert("parameters".into(), Value::Array(list));
    o.insert("terminated".into(), termination_json(&cs));
    Ok(Value::Object(o).into())
}

fn termination_json(cs: &ChoiceSequence) -> Value {
    match cs.terminated {
        None => Value::Null,
        Some(t) => {
            let mut o = Map::new();
            o.insert("index".into(), t.index.into());
            o.insert("reason".into(), t.reason.name().into());
            Value::Object(o)
        }
    }
}

struct Points {
    points: Vec<Complex64>,
    grid: Option<(Vec<f64>, usize)>,
}

fn points(a: &EvalArgs) -> Result<Points, CliError> {
    let mut points = a.eval.iter().map(|s| io::parse_point(s)).collect::<Result<Vec<_>, _>>()?;
    let grid = a.grid.as_deref().map(io::parse_grid).transpose()?;
    if let Some((radii, count)) = &grid {
        points.extend(io::grid_points(radii, *count));
    }
    if points.is_empty() {
        return Err(CliError::Usage("no evaluation points: pass --eval or --grid".into()));
    }
    Ok(Points { points, grid })
}

fn evaluation_report<F>(solver: &SchurSolver, pts: &Points, parameter: Value, eval: F) -> Result<Report, CliError>
where
    F: Fn(Complex64) -> schur_cmv::Result<SolutionReport>,
{
    let mut evals = Vec::with_capacity(pts.points.len());
    let mut max_grid: f64 = 0.0;
    let first_grid = pts.points.len() - pts.grid.as_ref().map_or(0, |(r, k)| r.len() * k);
    for (i, &z) in pts.points.iter().enumerate() {
        let rep = eval(z)?;
        if i >= first_grid {
            max_grid = max_grid.max(rep.certified_norm);
        }
        let mut o = Map::new();
        o.insert("z".into(), complex(z));
        o.insert("theta".into(), matrix(&rep.value));
        o.insert("norm".into(), num(rep.certified_norm));
        evals.push(Value::Object(o));
    }
    let mut o = Map::new();
    o.insert("unique".into(), solver.is_unique().into());
    o.insert("parameter".into(), parameter);
    o.insert(
        "parameter_shape".into(),
        solver.parameter_shape().map_or(Value::Null, shape),
    );
    o.insert("evaluations".into(), Value::Array(evals));
    if let Some((radii, count)) = &pts.grid {
        let mut g = Map::new();
        g.insert("radii".into(), Value::Array(radii.iter().map(|&r| num(r)).collect()));
        g.insert("points".into(), (*count).into());
        g.insert("max_norm".into(), num(max_grid));
        o.insert("grid".into(), Value::Object(g));
    }
    Ok(Value::Object(o).into())
}

fn solver_for(p: &Problem) -> Result<SchurSolver, CliError> {
    SchurSolver::new(&p.data, &p.tol).map_err(|e| match e {
        SchurError::NotSolvable => CliError::Unsolvable("the Toeplitz matrix of the data is not a contraction".into()),
        other => other.into(),
    })
}

fn cmd_central(a: &EvalArgs) -> Result<Report, CliError> {
    let p = load(&a.common)?;
    let pts = points(a)?;
    let solver = solver_for(&p)?;
    let label = if solver.is_unique() { "none (unique)" } else { "zero" };
    evaluation_report(&solver, &pts, label.into(), |z| solver.central(z))
}

fn cmd_solve(a: &SolveArgs) -> Result<Report, CliError> {
    let p = load(&a.eval.common)?;
    let pts = points(&a.eval)?;
    let solver = solver_for(&p)?;
    match (solver.parameter_shape(), &a.param) {
        (None, None) => evaluation_report(&solver, &pts, "none (unique)".into(), |z| solver.unique(z)),
        (None, Some(_)) => Err(CliError::Usage(
            "the problem has a unique solution; --param is not accepted".into(),
        )),
        (Some(expected), None) => Err(CliError::Usage(format!(
            "--param is required: the solutions are parametrized by functions of shape {expected:?}"
        ))),
        (Some(expected), Some(path)) => {
            let e = io::load_parameter(path, expected, &p.tol)?;
            evaluation_report(&solver, &pts, e.describe().into(), |z| solver.theta(&e, z))
        }
    }
}

fn cmd_cmv(a: &CmvArgs) -> Result<Report, CliError> {
    let p = load(&a.common)?;
    let cs = parameters(&p)?;
    let extra = match a.cap {
        Cap::Zero => 2,
        Cap::Actual => 3,
    };
    let max_level = (cs.len() >= extra).then(|| (cs.len() - extra) / 2);
    let level = match (a.level, max_level) {
        (Some(n), Some(max)) if n <= max => Some(n),
        (Some(n), _) => {
            return Err(CliError::Usage(format!(
                "level {n} needs {} parameters, only {} available",
                2 * n + extra,
                cs.len()
            )))
        }
        (None, m) => m,
    };
    let assembly = match level {
        Some(n) => {
            let cap = match a.cap {
                Cap::Zero => CapChoice::Zero,
                Cap::Actual => CapChoice::Actual,
            };
            match assemble(&cs, n, cap) {
                Ok(asm) => Some(asm),
                // a terminated sequence still has its finite CMV matrices
                Err(SchurError::DegenerateTail { .. }) if cs.terminated.is_some() && a.level.is_none() => None,
                Err(e) => return Err(e.into()),
            }
        }
        None if cs.terminated.is_some() => None,
        None => {
            return Err(CliError::Usage(format!(
                "the CMV blocks need at least {extra} parameters, only {} available",
                cs.len()
            )))
        }
    };
    let mut o = Map::new();
    o.insert("terminated".into(), termination_json(&cs));
    o.insert(
        "assembly".into(),
        match &assembly {
            None => Value::Null,
            Some(asm) => {
                let mut m = Map::new();
                m.insert("level".into(), asm.level.into());
                m.insert(
                    "cap".into(),
                    match a.cap {
                        Cap::Zero => "zero",
                        Cap::Actual => "actual",
                    }
                    .into(),
                );
                m.insert("index".into(), index_json(&asm.index));
                m.insert("index_tilde".into(), index_json(&asm.index_tilde));
                m.insert("v_n".into(), matrix(&asm.v_n));
                m.insert("w_n".into(), matrix(&asm.w_n));
                m.insert("w_n0".into(), matrix(&asm.w_n0));
                m.insert("s_n".into(), matrix(&asm.s_n));
                m.insert("s_tilde_n".into(), matrix(&asm.s_tilde_n));
                m.insert("s_n0".into(), matrix(&asm.s_n0));
                m.insert("s_tilde_n0".into(), matrix(&asm.s_tilde_n0));
                Value::Object(m)
            }
        },
    );
    o.insert(
        "finite_cmv".into(),
        match cs.terminated {
            None => Value::Null,
            Some(_) => {
                let f = finite_cmv(&cs)?;
                let mut m = Map::new();
                m.insert("reason".into(), f.reason.name().into());
                m.insert("tail_arity".into(), f.tail_arity.into());
                m.insert("index".into(), index_json(&f.index));
                m.insert("index_tilde".into(), index_json(&f.index_tilde));
                m.insert("u0".into(), matrix(&f.u0));
                m.insert("u0_tilde".into(), matrix(&f.u0_tilde));
                Value::Object(m)
            }
        },
    );
    Ok(Value::Object(o).into())
}
