//! File formats and JSON output.
//!
//! Matrices are row-major nested arrays of `[re, im]` pairs. Every float is
//! written with 17 significant digits so identical inputs give identical bytes.

use std::path::Path;

use schur_cmv::linalg::{self, ComplexMatrix};
use schur_cmv::realization::SchurEvaluator;
use schur_cmv::sequence::{params_to_taylor_recursive, ChoiceSequence, SchurProblemData};
use schur_cmv::{Complex64, Tolerances};
use serde::Deserialize;
use serde_json::{Map, Number, Value};

use crate::error::CliError;

pub type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dim_m: usize,
    pub dim_n: usize,
    #[serde(default)]
    pub coefficients: Option<Vec<RawMatrix>>,
    /// Schur parameters in place of Taylor data.
    #[serde(default)]
    pub parameters: Option<Vec<RawMatrix>>,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub rank_tol: Option<f64>,
    pub contraction_slack: Option<f64>,
    pub cert_tol: Option<f64>,
    pub consistency_tol: Option<f64>,
    pub degeneracy_tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterKind {
    Constant,
    Central,
    Terminated,
}

/// `kind: constant` takes `matrix`; `central` and `terminated` take `parameters`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterFile {
    pub kind: ParameterKind,
    #[serde(default)]
    pub matrix: Option<RawMatrix>,
    #[serde(default)]
    pub parameters: Option<Vec<RawMatrix>>,
}

/// A loaded problem: the data, the parameters when the file supplied them, and tolerances.
#[derive(Clone, Debug)]
pub struct Problem {
    pub data: SchurProblemData,
    pub given: Option<ChoiceSequence>,
    pub tol: Tolerances,
}

fn set_tol(tol: &mut Tolerances, name: &str, value: f64) -> Result<(), CliError> {
    if !(value.is_finite() && value > 0.0) {
        return Err(CliError::Format(format!("tolerance {name} must be a positive finite number, got {value}")));
    }
    let slot = match name {
        "rank_tol" => &mut tol.rank_tol,
        "contraction_slack" => &mut tol.contraction_slack,
        "cert_tol" => &mut tol.cert_tol,
        "consistency_tol" => &mut tol.consistency_tol,
        "degeneracy_tol" => &mut tol.degeneracy_tol,
        _ => return Err(CliError::Format(format!("unknown tolerance `{name}`"))),
    };
    *slot = value;
    Ok(())
}

impl ToleranceOverrides {
    fn apply(&self, tol: &mut Tolerances) -> Result<(), CliError> {
        let pairs = [
            ("rank_tol", self.rank_tol),
            ("contraction_slack", self.contraction_slack),
            ("cert_tol", self.cert_tol),
            ("consistency_tol", self.consistency_tol),
            ("degeneracy_tol", self.degeneracy_tol),
        ];
        for (name, value) in pairs {
            if let Some(v) = value {
                set_tol(tol, name, v).map_err(|e| CliError::Format(format!("tolerances.{name}: {e}")))?;
            }
        }
        Ok(())
    }
}

/// Applies `--tol NAME=VALUE` flags on top of `tol`.
pub fn apply_tol_flags(tol: &mut Tolerances, flags: &[String]) -> Result<(), CliError> {
    for flag in flags {
        let (name, value) = flag
            .split_once('=')
            .ok_or_else(|| CliError::Format(format!("--tol expects NAME=VALUE, got `{flag}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Format(format!("--tol {name}: `{value}` is not a number")))?;
        set_tol(tol, name.trim(), value)?;
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

fn raw_shape(raw: &RawMatrix, field: &str) -> Result<(usize, usize), CliError> {
    let cols = raw.first().map_or(0, Vec::len);
    if let Some(i) = raw.iter().position(|row| row.len() != cols) {
        return Err(CliError::Format(format!("{field}: row {i} has {} entries, row 0 has {cols}", raw[i].len())));
    }
    Ok((raw.len(), cols))
}

fn to_matrix(raw: &RawMatrix, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |i, j| Complex64::new(raw[i][j][0], raw[i][j][1]))
}

/// Converts `raw`, requiring the shape `expected`. A matrix with no rows takes the expected column count.
fn checked_matrix(raw: &RawMatrix, expected: (usize, usize), field: &str) -> Result<ComplexMatrix, CliError> {
    let (rows, mut cols) = raw_shape(raw, field)?;
    if rows == 0 {
        cols = expected.1;
    }
    if (rows, cols) != expected {
        return Err(CliError::Format(format!(
            "{field}: expected a {}x{} matrix, found {rows}x{cols}",
            expected.0, expected.1
        )));
    }
    if raw.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(CliError::Format(format!("{field}: entries must be finite")));
    }
    Ok(to_matrix(raw, rows, cols))
}

fn sequence_from_raw(
    dim_m: usize,
    dim_n: usize,
    raws: &[RawMatrix],
    tol: Tolerances,
    field: &str,
) -> Result<ChoiceSequence, CliError> {
    let mut cs = ChoiceSequence::new(dim_m, dim_n, Vec::new(), tol)?;
    for (k, raw) in raws.iter().enumerate() {
        let name = format!("{field}[{k}]");
        let g = checked_matrix(raw, (cs.next_out_dim(), cs.next_in_dim()), &name)?;
        cs.push(g).map_err(|e| CliError::Format(format!("{name}: {e}")))?;
    }
    Ok(cs)
}

pub fn load_problem(path: &Path, tol_flags: &[String]) -> Result<Problem, CliError> {
    let file: ProblemFile = read_json(path)?;
    let mut tol = Tolerances::default();
    file.tolerances.apply(&mut tol)?;
    apply_tol_flags(&mut tol, tol_flags)?;
    match (&file.coefficients, &file.parameters) {
        (Some(coeffs), None) => {
            if coeffs.is_empty() {
                return Err(CliError::Format("coefficients: at least one matrix is required".into()));
            }
            let mats = coeffs
                .iter()
                .enumerate()
                .map(|(k, raw)| checked_matrix(raw, (file.dim_n, file.dim_m), &format!("coefficients[{k}]")))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Problem {
                data: SchurProblemData::new(file.dim_m, file.dim_n, mats)?,
                given: None,
                tol,
            })
        }
        (None, Some(params)) => {
            if params.is_empty() {
                return Err(CliError::Format("parameters: at least one matrix is required".into()));
            }
            let cs = sequence_from_raw(file.dim_m, file.dim_n, params, tol, "parameters")?;
            Ok(problem_from_params(cs))
        }
        _ => Err(CliError::Format(
            "exactly one of `coefficients` and `parameters` must be given".into(),
        )),
    }
}

/// The problem whose data are the first `len` Taylor coefficients of the function with parameters `cs`.
pub fn problem_from_params(cs: ChoiceSequence) -> Problem {
    let coeffs = params_to_taylor_recursive(&cs, cs.len() - 1);
    Problem {
        data: SchurProblemData::new(cs.dim_m, cs.dim_n, coeffs).expect("shapes follow the parameters"),
        tol: cs.tol,
        given: Some(cs),
    }
}

/// Loads a free parameter and checks it against `expected = (rows, cols)`.
pub fn load_parameter(path: &Path, expected: (usize, usize), tol: &Tolerances) -> Result<SchurEvaluator, CliError> {
    let file: ParameterFile = read_json(path)?;
    let mismatch = |found| CliError::Shape {
        what: "free parameter".into(),
        expected,
        found,
    };
    let layout = || {
        CliError::Format(format!(
            "{}: kind constant takes only `matrix`; central and terminated take only `parameters`",
            path.display()
        ))
    };
    match (file.kind, &file.matrix, &file.parameters) {
        (ParameterKind::Constant, Some(matrix), None) => {
            let (rows, mut cols) = raw_shape(matrix, "matrix")?;
            if rows == 0 {
                cols = expected.1;
            }
            if (rows, cols) != expected {
                return Err(mismatch((rows, cols)));
            }
            let m = checked_matrix(matrix, expected, "matrix")?;
            Ok(SchurEvaluator::constant(m, tol)?)
        }
        (ParameterKind::Central, None, Some(parameters)) => {
            let cs = parameter_sequence(parameters, expected, tol, mismatch)?;
            if let Some(t) = cs.terminated {
                return Err(CliError::Format(format!(
                    "parameters terminate at index {} ({}); use kind \"terminated\"",
                    t.index, t.reason
                )));
            }
            Ok(SchurEvaluator::from_sequence(&cs)?)
        }
        (ParameterKind::Terminated, None, Some(parameters)) => {
            let cs = parameter_sequence(parameters, expected, tol, mismatch)?;
            if cs.terminated.is_none() {
                return Err(CliError::Format(
                    "parameters: kind \"terminated\" needs a last parameter that is isometric, co-isometric or unitary"
                        .into(),
                ));
            }
            Ok(SchurEvaluator::from_sequence(&cs)?)
        }
        _ => Err(layout()),
    }
}

fn parameter_sequence(
    raws: &[RawMatrix],
    expected: (usize, usize),
    tol: &Tolerances,
    mismatch: impl Fn((usize, usize)) -> CliError,
) -> Result<ChoiceSequence, CliError> {
    let first = raws
        .first()
        .ok_or_else(|| CliError::Format("parameters: at least one matrix is required".into()))?;
    let (rows, mut cols) = raw_shape(first, "parameters[0]")?;
    if rows == 0 {
        cols = expected.1;
    }
    if (rows, cols) != expected {
        return Err(mismatch((rows, cols)));
    }
    sequence_from_raw(expected.1, expected.0, raws, *tol, "parameters")
}

pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(format!("{x:.16e}").parse::<Number>().expect("formatted float is a JSON number"))
    } else {
        Value::Null
    }
}

pub fn complex(z: Complex64) -> Value {
    Value::Array(vec![num(z.re), num(z.im)])
}

pub fn matrix(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn shape(s: (usize, usize)) -> Value {
    Value::Array(vec![s.0.into(), s.1.into()])
}

pub fn tolerances(tol: &Tolerances) -> Value {
    let mut o = Map::new();
    o.insert("rank_tol".into(), num(tol.rank_tol));
    o.insert("contraction_slack".into(), num(tol.contraction_slack));
    o.insert("cert_tol".into(), num(tol.cert_tol));
    o.insert("consistency_tol".into(), num(tol.consistency_tol));
    o.insert("degeneracy_tol".into(), num(tol.degeneracy_tol));
    Value::Object(o)
}

/// Parses `re`, `re+imi`, `re-imi`, `imi`, `i`.
pub fn parse_point(text: &str) -> Result<Complex64, CliError> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || CliError::Format(format!("cannot parse complex point `{text}` (expected re+imi)"));
    let number = |t: &str| -> Result<f64, CliError> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|_| bad()),
        }
    };
    let z = if let Some(body) = s.strip_suffix('i') {
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        match split {
            Some(k) => Complex64::new(body[..k].parse::<f64>().map_err(|_| bad())?, number(&body[k..])?),
            None => Complex64::new(0.0, number(body)?),
        }
    } else {
        Complex64::new(s.parse::<f64>().map_err(|_| bad())?, 0.0)
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(bad());
    }
    Ok(z)
}

/// `R1,R2,.../K`: `K` equispaced points on each circle.
pub fn parse_grid(text: &str) -> Result<(Vec<f64>, usize), CliError> {
    let bad = |why: &str| CliError::Format(format!("--grid `{text}`: {why} (expected R1,R2/K)"));
    let (radii, count) = text.split_once('/').ok_or_else(|| bad("missing `/K`"))?;
    let count: usize = count.trim().parse().map_err(|_| bad("K is not a count"))?;
    if count == 0 {
        return Err(bad("K must be positive"));
    }
    let radii = radii
        .split(',')
        .map(|r| r.trim().parse::<f64>().map_err(|_| bad("radius is not a number")))
        .collect::<Result<Vec<_>, _>>()?;
    if radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(bad("radii must be non-negative"));
    }
    Ok((radii, count))
}

pub fn grid_points(radii: &[f64], count: usize) -> Vec<Complex64> {
    radii
        .iter()
        .flat_map(|&r| {
            (0..count).map(move |j| Complex64::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / count as f64))
        })
        .collect()
}

pub fn zero_matrix(shape: (usize, usize)) -> ComplexMatrix {
    linalg::zeros(shape.0, shape.1)
}
