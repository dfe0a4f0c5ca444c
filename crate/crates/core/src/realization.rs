//! Point evaluation of Schur-class functions from their parameters, Taylor
//! extraction by contour sums, and grid certification of the Schur bound.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::cmv::{finite_cmv, FiniteCmv};
use crate::defect::ContractionClass;
use crate::error::{Result, SchurError};
use crate::linalg::{self, c, ComplexMatrix};
use crate::sequence::ChoiceSequence;
use crate::solution::CoefficientFunction;
use crate::{check_disk, Tolerances};

#[derive(Clone, Debug)]
pub enum SchurEvaluator {
    Constant(ComplexMatrix),
    /// Parameters followed by zeros; evaluated as `Θ⁽⁰⁾` of the padded sequence.
    Central {
        params: ChoiceSequence,
        cf: Box<CoefficientFunction>,
    },
    /// Sequence ending in a unitary parameter: transfer function of the finite CMV system.
    TerminatedUnitary { params: ChoiceSequence, cmv: FiniteCmv },
    /// Sequence ending in an isometric or co-isometric `Γ_p`: the level `p − 1`
    /// coefficient function capped with `Γ_p`.
    TerminatedDegenerate {
        params: ChoiceSequence,
        cf: Box<CoefficientFunction>,
        cap: ComplexMatrix,
    },
}

impl SchurEvaluator {
    pub fn constant(m: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        let norm = linalg::operator_norm(&m);
        if norm > 1.0 + tol.contraction_slack {
            return Err(SchurError::NotContraction { norm });
        }
        Ok(SchurEvaluator::Constant(m))
    }

    /// The function whose Schur parameters are `cs` (continued by zeros unless terminated).
    pub fn from_sequence(cs: &ChoiceSequence) -> Result<Self> {
        match cs.terminated {
            Some(t) if t.index == 0 => Ok(SchurEvaluator::Constant(cs.gamma(0).clone())),
            Some(t) if t.reason == ContractionClass::Unitary => Ok(SchurEvaluator::TerminatedUnitary {
                params: cs.clone(),
                cmv: finite_cmv(cs)?,
            }),
            Some(t) => Ok(SchurEvaluator::TerminatedDegenerate {
                params: cs.clone(),
                cf: Box::new(CoefficientFunction::new(cs, t.index - 1)?),
                cap: cs.gamma(t.index).clone(),
            }),
            None => {
                let mut len = cs.len().max(2);
                if len % 2 == 1 {
                    len += 1;
                }
                let padded = cs.zero_padded(len);
                Ok(SchurEvaluator::Central {
                    params: cs.clone(),
                    cf: Box::new(CoefficientFunction::new(&padded, len - 1)?),
                })
            }
        }
    }

    /// `(out_dim, in_dim)`.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            SchurEvaluator::Constant(m) => m.shape(),
            SchurEvaluator::Central { params, .. }
            | SchurEvaluator::TerminatedUnitary { params, .. }
            | SchurEvaluator::TerminatedDegenerate { params, .. } => (params.dim_n, params.dim_m),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SchurEvaluator::Constant(_) => "constant".into(),
            SchurEvaluator::Central { params, .. } => format!("central ({} parameters)", params.len()),
            SchurEvaluator::TerminatedUnitary { params, .. } | SchurEvaluator::TerminatedDegenerate { params, .. } => {
                let t = params.terminated.expect("terminated kinds carry a termination");
                format!("terminated {} at {}", t.reason, t.index)
            }
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<ComplexMatrix> {
        check_disk(z)?;
        match self {
            SchurEvaluator::Constant(m) => Ok(m.clone()),
            SchurEvaluator::Central { cf, .. } => Ok(cf.eval(z)?.theta0),
            SchurEvaluator::TerminatedUnitary { cmv, .. } => cmv.transfer(z),
            SchurEvaluator::TerminatedDegenerate { cf, cap, .. } => cf.eval(z)?.apply(cap),
        }
    }
}

pub const DEFAULT_RADIUS: f64 = 0.5;
pub const DEFAULT_NODES: usize = 128;

/// `C_0..C_order` of `f` from `r⁻ᵏ·(1/K)·Σ_j f(r·e^{iθ_j})·e^{−ikθ_j}` with `r = 0.5`, `K = 128`.
pub fn taylor_extract<F>(f: F, order: usize) -> Result<Vec<ComplexMatrix>>
where
    F: Fn(Complex64) -> Result<ComplexMatrix>,
{
    taylor_extract_with(f, order, DEFAULT_RADIUS, DEFAULT_NODES)
}

pub fn taylor_extract_with<F>(f: F, order: usize, radius: f64, nodes: usize) -> Result<Vec<ComplexMatrix>>
where
    F: Fn(Complex64) -> Result<ComplexMatrix>,
{
    let samples: Vec<(f64, ComplexMatrix)> = (0..nodes)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / nodes as f64;
            f(Complex64::from_polar(radius, theta)).map(|v| (theta, v))
        })
        .collect::<Result<_>>()?;
    let (rows, cols) = samples[0].1.shape();
    Ok((0..=order)
        .map(|k| {
            let mut acc = linalg::zeros(rows, cols);
            for (theta, v) in &samples {
                acc += v * Complex64::from_polar(1.0, -(k as f64) * theta);
            }
            acc * c(1.0 / (nodes as f64 * radius.powi(k as i32)), 0.0)
        })
        .collect())
}

/// Largest operator norm of `f` over `points` equispaced samples on each circle.
///
/// This certifies the Schur bound on the grid only.
pub fn certify_schur_norm<F>(f: F, radii: &[f64], points: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Result<ComplexMatrix>,
{
    let mut worst: f64 = 0.0;
    for &r in radii {
        for j in 0..points {
            let z = Complex64::from_polar(r, 2.0 * PI * j as f64 / points as f64);
            worst = worst.max(linalg::operator_norm(&f(z)?));
        }
    }
    Ok(worst)
}
