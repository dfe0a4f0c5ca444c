//! Coefficient functions and the fractional linear parametrization of all
//! solutions.
//!
//! For data `C_0..C_N` with Schur parameters `Γ_0..Γ_N` every solution is
//!
//! ```text
//! Θ(z) = Θ⁽⁰⁾(z) + C(z)·E(z)·(I − A(z)·E(z))⁻¹·B(z)
//! ```
//!
//! with `E` ranging over the Schur class `𝐒(𝔇_{Γ_N}, 𝔇_{Γ*_N})`.

use num_complex::Complex64;

use crate::cmv::{assemble, CapChoice, CmvAssembly};
use crate::defect::DefectData;
use crate::error::{Result, SchurError};
use crate::linalg::{self, ComplexMatrix};
use crate::realization::SchurEvaluator;
use crate::sequence::{classify, taylor_to_params, ChoiceSequence, ProblemClassification, SchurProblemData};
use crate::{check_disk, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// `N = 2n + 1`, built on `S_{n,0}` of the sequence itself.
    Odd,
    /// `N = 2n`, built on the hat-lifted sequence `0, Γ_0, ..., Γ_N`.
    Even,
}

/// `Q(z) = [[Θ⁽⁰⁾, C], [B, A]] : 𝔐 ⊕ 𝔇_{Γ*_N} → 𝔑 ⊕ 𝔇_{Γ_N}`.
#[derive(Clone, Debug)]
pub struct CoefficientBlocks {
    pub theta0: ComplexMatrix,
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub c: ComplexMatrix,
}

impl CoefficientBlocks {
    pub fn stacked(&self) -> ComplexMatrix {
        let (nn, m) = self.theta0.shape();
        let (r, rs) = self.a.shape();
        let mut q = linalg::zeros(nn + r, m + rs);
        linalg::paste(&mut q, 0, 0, &self.theta0);
        linalg::paste(&mut q, 0, m, &self.c);
        linalg::paste(&mut q, nn, 0, &self.b);
        linalg::paste(&mut q, nn, m, &self.a);
        q
    }

    /// `Θ⁽⁰⁾ + C·E·(I − A·E)⁻¹·B`.
    pub fn apply(&self, e: &ComplexMatrix) -> Result<ComplexMatrix> {
        let expected = (self.a.ncols(), self.a.nrows());
        if e.shape() != expected {
            return Err(SchurError::ShapeMismatch {
                what: "free parameter".into(),
                expected,
                found: e.shape(),
            });
        }
        let r = self.a.nrows();
        let lhs = linalg::identity(r) - &self.a * e;
        let x = linalg::lu_solve(&lhs, &self.b)?;
        Ok(&self.theta0 + &self.c * e * x)
    }

    /// The other form `Θ⁽⁰⁾ + C·(I − E·A)⁻¹·E·B`.
    pub fn apply_left(&self, e: &ComplexMatrix) -> Result<ComplexMatrix> {
        let rs = self.a.ncols();
        let lhs = linalg::identity(rs) - e * &self.a;
        let x = linalg::lu_solve(&lhs, &(e * &self.b))?;
        Ok(&self.theta0 + &self.c * x)
    }
}

/// The unitary colligation `[[N, M], [L, S_{n,0}]]` whose transfer function is `Q`.
#[derive(Clone, Debug)]
pub struct CoefficientFunction {
    pub level: usize,
    pub parity: Parity,
    pub assembly: CmvAssembly,
    pub dim_m: usize,
    pub dim_n: usize,
    /// `Γ_N` with its defect data.
    pub terminal: DefectData,
    n_block: ComplexMatrix,
    m_block: ComplexMatrix,
    l_block: ComplexMatrix,
}

impl CoefficientFunction {
    /// Coefficient function at level `level` from `Γ_0..Γ_level`.
    pub fn new(cs: &ChoiceSequence, level: usize) -> Result<Self> {
        if cs.len() <= level {
            return Err(SchurError::IndexOutOfRange {
                index: level,
                available: cs.len(),
            });
        }
        let base = cs.truncated(level + 1);
        let (parity, seq) = if level % 2 == 1 {
            (Parity::Odd, base)
        } else {
            (Parity::Even, base.hat_lift())
        };
        let n = (seq.len() - 2) / 2;
        let assembly = assemble(&seq, n, CapChoice::Zero)?;
        let (m, nn) = (cs.dim_m, cs.dim_n);
        let head = &assembly.head;
        let tail = &assembly.tail;
        let (r, rs) = (tail.rank(), tail.rank_star());
        let k = assembly.dim();
        let bd = assembly.boundary();

        let mut n_block = linalg::zeros(nn + r, m + rs);
        if parity == Parity::Odd {
            linalg::paste(&mut n_block, 0, 0, &head.gamma);
        }

        let j1 = &assembly.j_first;
        let j1_top = linalg::block(j1, 0, 0, head.rank_star(), j1.ncols());
        let top = head.defect_star_leg() * j1_top;
        let jl = &assembly.j_last;
        let bottom = linalg::block(jl, jl.nrows() - r, 0, r, jl.ncols());
        let mut m_block = linalg::zeros(nn + r, k);
        linalg::paste(&mut m_block, 0, bd.h1.0, &top);
        linalg::paste(&mut m_block, nn, bd.h_last.0, &bottom);

        let mut l_block = linalg::zeros(k, m + rs);
        linalg::paste(&mut l_block, bd.d0.0, 0, &head.defect_leg());
        linalg::paste(&mut l_block, bd.d_star_last.0, m, &linalg::identity(rs));

        Ok(Self {
            level,
            parity,
            terminal: cs.entries[level].clone(),
            assembly,
            dim_m: m,
            dim_n: nn,
            n_block,
            m_block,
            l_block,
        })
    }

    /// Shape `(dim 𝔇_{Γ*_N}, dim 𝔇_{Γ_N})` required of the free parameter.
    pub fn parameter_shape(&self) -> (usize, usize) {
        (self.terminal.rank_star(), self.terminal.rank())
    }

    /// The colligation matrix `[[N, M], [L, S_{n,0}]]` (odd parity only; the
    /// even-parity blocks carry no `z` factor on the top rows).
    pub fn colligation(&self) -> ComplexMatrix {
        let (rows, cols) = self.n_block.shape();
        let k = self.assembly.dim();
        let mut out = linalg::zeros(rows + k, cols + k);
        linalg::paste(&mut out, 0, 0, &self.n_block);
        linalg::paste(&mut out, 0, cols, &self.m_block);
        linalg::paste(&mut out, rows, 0, &self.l_block);
        linalg::paste(&mut out, rows, cols, &self.assembly.s_n0);
        out
    }

    pub fn eval(&self, z: Complex64) -> Result<CoefficientBlocks> {
        check_disk(z)?;
        let k = self.assembly.dim();
        let lhs = linalg::identity(k) - &self.assembly.s_n0 * z;
        let x = linalg::lu_solve(&lhs, &self.l_block)?;
        let mut q = &self.m_block * x;
        let nn = self.dim_n;
        match self.parity {
            Parity::Odd => q *= z,
            Parity::Even => {
                let mut bottom = q.rows_mut(nn, q.nrows() - nn);
                bottom *= z;
            }
        }
        q += &self.n_block;
        let m = self.dim_m;
        let (r, rs) = (self.terminal.rank(), self.terminal.rank_star());
        Ok(CoefficientBlocks {
            theta0: linalg::block(&q, 0, 0, nn, m),
            c: linalg::block(&q, 0, m, nn, rs),
            b: linalg::block(&q, nn, 0, r, m),
            a: linalg::block(&q, nn, m, r, rs),
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolutionReport {
    pub value: ComplexMatrix,
    pub parameter_used: String,
    pub z: Complex64,
    pub certified_norm: f64,
}

fn report(value: ComplexMatrix, parameter_used: String, z: Complex64, tol: &Tolerances) -> Result<SolutionReport> {
    let certified_norm = linalg::operator_norm(&value);
    if certified_norm > 1.0 + tol.cert_tol || !linalg::is_finite(&value) {
        return Err(SchurError::Certification { norm: certified_norm });
    }
    Ok(SolutionReport {
        value,
        parameter_used,
        z,
        certified_norm,
    })
}

#[derive(Clone, Debug)]
enum Mode {
    Family(Box<CoefficientFunction>),
    Unique(Box<SchurEvaluator>),
}

/// Solver for one data set: parameters, classification and the cached
/// coefficient function.
#[derive(Clone, Debug)]
pub struct SchurSolver {
    pub data: SchurProblemData,
    pub params: ChoiceSequence,
    pub classification: ProblemClassification,
    pub tol: Tolerances,
    mode: Mode,
}

impl SchurSolver {
    pub fn new(data: &SchurProblemData, tol: &Tolerances) -> Result<Self> {
        let classification = classify(data, tol)?;
        if !classification.solvable {
            return Err(SchurError::NotSolvable);
        }
        let params = taylor_to_params(data, tol)?;
        // the rank decision on the parameters settles the mode; it agrees with
        // the shorted-operator classification away from tolerance boundaries
        let mode = if params.terminated.is_some() {
            Mode::Unique(Box::new(SchurEvaluator::from_sequence(&params)?))
        } else {
            Mode::Family(Box::new(CoefficientFunction::new(&params, data.order())?))
        };
        Ok(Self {
            data: data.clone(),
            params,
            classification,
            tol: *tol,
            mode,
        })
    }

    pub fn is_unique(&self) -> bool {
        matches!(self.mode, Mode::Unique(_))
    }

    pub fn coefficient_function(&self) -> Option<&CoefficientFunction> {
        match &self.mode {
            Mode::Family(cf) => Some(cf),
            Mode::Unique(_) => None,
        }
    }

    /// Shape the free parameter must have, `(dim 𝔇_{Γ*_N}, dim 𝔇_{Γ_N})`.
    pub fn parameter_shape(&self) -> Option<(usize, usize)> {
        self.coefficient_function().map(|cf| cf.parameter_shape())
    }

    /// `Θ_E(z)`.
    pub fn theta(&self, e: &SchurEvaluator, z: Complex64) -> Result<SolutionReport> {
        check_disk(z)?;
        let cf = match &self.mode {
            Mode::Family(cf) => cf,
            Mode::Unique(_) => return Err(SchurError::UniqueProblem),
        };
        let expected = cf.parameter_shape();
        if e.shape() != expected {
            return Err(SchurError::ShapeMismatch {
                what: "free parameter".into(),
                expected,
                found: e.shape(),
            });
        }
        let blocks = cf.eval(z)?;
        let value = blocks.apply(&e.eval(z)?)?;
        report(value, e.describe(), z, &self.tol)
    }

    /// The central solution `Θ⁽⁰⁾_N(z)` (free parameter zero); for unique
    /// problems the unique solution.
    pub fn central(&self, z: Complex64) -> Result<SolutionReport> {
        check_disk(z)?;
        match &self.mode {
            Mode::Family(cf) => report(cf.eval(z)?.theta0, "zero".into(), z, &self.tol),
            Mode::Unique(f) => report(f.eval(z)?, "none (unique)".into(), z, &self.tol),
        }
    }

    pub fn unique(&self, z: Complex64) -> Result<SolutionReport> {
        check_disk(z)?;
        match &self.mode {
            Mode::Unique(f) => report(f.eval(z)?, "none (unique)".into(), z, &self.tol),
            Mode::Family(_) => Err(SchurError::NotUnique),
        }
    }
}

/// `Θ_E(z)` for the data.
pub fn solve_theta(data: &SchurProblemData, e: &SchurEvaluator, z: Complex64, tol: &Tolerances) -> Result<SolutionReport> {
    SchurSolver::new(data, tol)?.theta(e, z)
}

/// The solution of a problem with a unique solution.
pub fn unique_solution(data: &SchurProblemData, z: Complex64, tol: &Tolerances) -> Result<SolutionReport> {
    SchurSolver::new(data, tol)?.unique(z)
}

/// `(I − z·S_{n,Γ})⁻¹` from `(I − z·S_{n,0})⁻¹` and a correction of rank `dim 𝔇_{Γ*_{2n+1}}`.
pub fn resolvent_update(assembly: &CmvAssembly, gamma_cap: &ComplexMatrix, z: Complex64) -> Result<ComplexMatrix> {
    check_disk(z)?;
    let expected = (assembly.tail.rank_star(), assembly.tail.rank());
    if gamma_cap.shape() != expected {
        return Err(SchurError::ShapeMismatch {
            what: "cap parameter".into(),
            expected,
            found: gamma_cap.shape(),
        });
    }
    let k = assembly.dim();
    let r0 = linalg::lu_solve(&(linalg::identity(k) - &assembly.s_n0 * z), &linalg::identity(k))?;
    let bd = assembly.boundary();
    let rs = bd.d_star_last.1;
    let r0_j = linalg::block(&r0, 0, bd.d_star_last.0, k, rs);
    let g = assembly.cap_row(gamma_cap);
    let inner = linalg::identity(rs) - &g * &r0_j * z;
    let corr = linalg::lu_solve(&inner, &(&g * &r0))?;
    Ok(&r0 + r0_j * corr * z)
}

/// `‖P_{K_n}(I − z·T_0)⁻¹|K_n − (I − z·S_{n,Θ_{2n+2}(z)})⁻¹‖` for a sequence
/// whose tail past `2n + 1` is finitely supported or ends in a unitary parameter.
pub fn compression_check(cs: &ChoiceSequence, n: usize, z: Complex64) -> Result<f64> {
    check_disk(z)?;
    let last = 2 * n + 1;
    if cs.len() <= last {
        return Err(SchurError::IndexOutOfRange {
            index: last,
            available: cs.len(),
        });
    }
    let head = cs.truncated(last + 1);
    let small = assemble(&head, n, CapChoice::Zero)?;
    let k = small.dim();

    let lhs_full = match cs.terminated {
        None => {
            let mut big_n = n + 1;
            while 2 * big_n + 1 < cs.len() {
                big_n += 1;
            }
            let padded = cs.zero_padded(2 * big_n + 2);
            let big = assemble(&padded, big_n, CapChoice::Zero)?;
            let dim = big.dim();
            linalg::lu_solve(&(linalg::identity(dim) - &big.s_n0 * z), &linalg::identity(dim))?
        }
        Some(t) if t.reason == crate::defect::ContractionClass::Unitary => {
            let f = crate::cmv::finite_cmv(cs)?;
            let t0 = f.truncated();
            let dim = t0.nrows();
            linalg::lu_solve(&(linalg::identity(dim) - t0 * z), &linalg::identity(dim))?
        }
        Some(_) => {
            return Err(SchurError::Unsupported(
                "compression of a semi-infinite isometric or co-isometric tail".into(),
            ))
        }
    };
    if lhs_full.nrows() < k {
        return Err(SchurError::IndexOutOfRange {
            index: last + 1,
            available: cs.len(),
        });
    }
    let lhs = linalg::block(&lhs_full, 0, 0, k, k);

    let tail_gammas: Vec<ComplexMatrix> = cs.entries[last + 1..].iter().map(|e| e.gamma.clone()).collect();
    let tail_seq = ChoiceSequence::new(small.tail.rank(), small.tail.rank_star(), tail_gammas, cs.tol)?;
    let theta_tail = SchurEvaluator::from_sequence(&tail_seq)?.eval(z)?;
    let s = small.s_with_cap(&theta_tail)?;
    let rhs = linalg::lu_solve(&(linalg::identity(k) - s * z), &linalg::identity(k))?;
    Ok((lhs - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_real, max_abs_diff, scalar};
    use crate::linalg::c;
    use crate::testutil;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn scalars(v: &[f64]) -> ChoiceSequence {
        ChoiceSequence::new(1, 1, v.iter().map(|&x| scalar(x)).collect(), tol()).unwrap()
    }

    fn re(x: f64) -> Complex64 {
        c(x, 0.0)
    }

    #[test]
    fn coefficient_at_zero() {
        let mut rng = testutil::rng(4);
        for level in 0..4 {
            let cs = testutil::random_sequence(&mut rng, 2, 2, level + 1);
            let q = CoefficientFunction::new(&cs, level).unwrap().eval(re(0.0)).unwrap();
            assert!(max_abs_diff(&q.theta0, cs.gamma(0)) < 1e-14);
            assert!(q.a.norm() < 1e-15 && q.b.norm() < 1e-15);
            if level % 2 == 1 {
                assert!(q.c.norm() < 1e-15);
            }
        }
    }

    #[test]
    fn coefficient_all_zero_odd() {
        let q = CoefficientFunction::new(&scalars(&[0.0, 0.0]), 1).unwrap().eval(re(0.3)).unwrap();
        assert!(q.theta0.norm() < 1e-15 && q.a.norm() < 1e-15);
        assert!((q.b[(0, 0)] - re(0.3)).norm() < 1e-15);
        assert!((q.c[(0, 0)] - re(0.3)).norm() < 1e-15);
    }

    #[test]
    fn solve_examples() {
        let e = SchurEvaluator::constant(scalar(0.5), &tol()).unwrap();
        let d = SchurProblemData::scalar(&[0.0]).unwrap();
        let r = solve_theta(&d, &e, re(0.2), &tol()).unwrap();
        assert!((r.value[(0, 0)] - re(0.1)).norm() < 1e-14);

        let e = SchurEvaluator::constant(scalar(1.0), &tol()).unwrap();
        let d = SchurProblemData::scalar(&[0.0, 0.5]).unwrap();
        let r = solve_theta(&d, &e, re(0.4), &tol()).unwrap();
        assert!((r.value[(0, 0)] - re(0.3)).norm() < 1e-14);

        let solver = SchurSolver::new(&SchurProblemData::scalar(&[0.3, 0.2, -0.1]).unwrap(), &tol()).unwrap();
        let zero = SchurEvaluator::constant(scalar(0.0), &tol()).unwrap();
        let z = c(0.2, 0.3);
        assert!(max_abs_diff(&solver.theta(&zero, z).unwrap().value, &solver.central(z).unwrap().value) < 1e-15);
    }

    #[test]
    fn unique_examples() {
        let r = unique_solution(&SchurProblemData::scalar(&[0.5, 0.75]).unwrap(), re(0.5), &tol()).unwrap();
        assert!((r.value[(0, 0)] - re(0.8)).norm() < 1e-10);
        let r = unique_solution(&SchurProblemData::scalar(&[1.0]).unwrap(), c(0.3, -0.4), &tol()).unwrap();
        assert!((r.value[(0, 0)] - re(1.0)).norm() < 1e-15);
        let d = SchurProblemData::new(1, 2, vec![from_real(2, 1, &[1.0, 0.0])]).unwrap();
        let r = unique_solution(&d, re(0.6), &tol()).unwrap();
        assert!(max_abs_diff(&r.value, &d.coeffs[0]) < 1e-15);

        let d = SchurProblemData::scalar(&[0.5, 0.375]).unwrap();
        assert_eq!(unique_solution(&d, re(0.1), &tol()).unwrap_err(), SchurError::NotUnique);
        let d = SchurProblemData::scalar(&[0.5, 0.75]).unwrap();
        let e = SchurEvaluator::constant(scalar(0.0), &tol()).unwrap();
        assert_eq!(solve_theta(&d, &e, re(0.1), &tol()).unwrap_err(), SchurError::UniqueProblem);
    }

    #[test]
    fn wrong_parameter_shape() {
        let d = SchurProblemData::scalar(&[0.1, 0.2]).unwrap();
        let e = SchurEvaluator::constant(linalg::zeros(2, 1), &tol()).unwrap();
        assert!(matches!(
            solve_theta(&d, &e, re(0.1), &tol()).unwrap_err(),
            SchurError::ShapeMismatch { expected: (1, 1), found: (2, 1), .. }
        ));
    }

    #[test]
    fn outside_disk_refused() {
        let d = SchurProblemData::scalar(&[0.1]).unwrap();
        let solver = SchurSolver::new(&d, &tol()).unwrap();
        assert!(matches!(solver.central(re(1.0)), Err(SchurError::OutsideDisk { .. })));
    }

    #[test]
    fn resolvent_update_examples() {
        let a = assemble(&scalars(&[0.3, 0.4]), 0, CapChoice::Zero).unwrap();
        let r = resolvent_update(&a, &scalar(0.7), re(0.0)).unwrap();
        assert!(max_abs_diff(&r, &linalg::identity(2)) < 1e-15);
        let r = resolvent_update(&a, &scalar(0.0), re(0.5)).unwrap();
        let direct = linalg::solve(&(linalg::identity(2) - &a.s_n0 * re(0.5)), &linalg::identity(2)).unwrap();
        assert!(max_abs_diff(&r, &direct) < 1e-15);
        let r = resolvent_update(&a, &scalar(0.7), re(0.5)).unwrap();
        let s = a.s_with_cap(&scalar(0.7)).unwrap();
        let direct = linalg::solve(&(linalg::identity(2) - s * re(0.5)), &linalg::identity(2)).unwrap();
        assert!(max_abs_diff(&r, &direct) < 1e-10);
    }

    #[test]
    fn compression_examples() {
        let r = compression_check(&scalars(&[0.3, 0.4]), 0, re(0.5)).unwrap();
        assert!(r < 1e-12);
        let r = compression_check(&scalars(&[0.3, 0.4, 0.5, 0.6]), 0, re(0.5)).unwrap();
        assert!(r < 1e-9, "{r}");
        let r = compression_check(&scalars(&[0.3, 0.4, 0.5, -0.2, 1.0]), 0, re(0.7)).unwrap();
        assert!(r < 1e-9, "{r}");
    }
}
