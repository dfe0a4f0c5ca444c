//! Toeplitz matrices, Kreĭn shorted operators and the passage between Taylor
//! data and Schur parameters.

use crate::defect::{ContractionClass, DefectData};
use crate::error::{Result, SchurError};
use crate::linalg::{self, c, ComplexMatrix};
use crate::realization::{taylor_extract, SchurEvaluator};
use crate::Tolerances;

/// Taylor data `C_0, ..., C_N`, each `dim_n × dim_m`.
#[derive(Clone, Debug)]
pub struct SchurProblemData {
    pub dim_m: usize,
    pub dim_n: usize,
    pub coeffs: Vec<ComplexMatrix>,
}

impl SchurProblemData {
    pub fn new(dim_m: usize, dim_n: usize, coeffs: Vec<ComplexMatrix>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(SchurError::Empty("no Taylor coefficients".into()));
        }
        for (k, ck) in coeffs.iter().enumerate() {
            if ck.shape() != (dim_n, dim_m) {
                return Err(SchurError::ShapeMismatch {
                    what: format!("coefficient {k}"),
                    expected: (dim_n, dim_m),
                    found: ck.shape(),
                });
            }
        }
        Ok(Self { dim_m, dim_n, coeffs })
    }

    /// Scalar data from real values.
    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::new(1, 1, values.iter().map(|&v| linalg::scalar(v)).collect())
    }

    /// Index of the last coefficient.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// The data `C_k*` of the adjoint problem.
    pub fn adjoint(&self) -> Self {
        Self {
            dim_m: self.dim_n,
            dim_n: self.dim_m,
            coeffs: self.coeffs.iter().map(|m| m.adjoint()).collect(),
        }
    }

    pub fn truncated(&self, len: usize) -> Self {
        Self {
            dim_m: self.dim_m,
            dim_n: self.dim_n,
            coeffs: self.coeffs[..len].to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Termination {
    pub index: usize,
    pub reason: ContractionClass,
}

/// Schur parameters `Γ_0, Γ_1, ...` stored in defect-basis coordinates.
///
/// `Γ_0` is `dim_n × dim_m`; `Γ_k` for `k ≥ 1` maps the coordinates of
/// 𝔇_{Γ_{k-1}} to those of 𝔇_{Γ*_{k-1}}.
#[derive(Clone, Debug)]
pub struct ChoiceSequence {
    pub dim_m: usize,
    pub dim_n: usize,
    pub entries: Vec<DefectData>,
    pub terminated: Option<Termination>,
    pub tol: Tolerances,
}

impl ChoiceSequence {
    pub fn new(dim_m: usize, dim_n: usize, gammas: Vec<ComplexMatrix>, tol: Tolerances) -> Result<Self> {
        let mut cs = Self {
            dim_m,
            dim_n,
            entries: Vec::with_capacity(gammas.len()),
            terminated: None,
            tol,
        };
        for g in gammas {
            cs.push(g)?;
        }
        Ok(cs)
    }

    /// Appends the next parameter.
    pub fn push(&mut self, gamma: ComplexMatrix) -> Result<()> {
        let k = self.entries.len();
        if let Some(t) = self.terminated {
            return Err(SchurError::TrailingParameters { index: t.index });
        }
        let expected = (self.next_out_dim(), self.next_in_dim());
        if gamma.shape() != expected {
            return Err(SchurError::ShapeMismatch {
                what: format!("parameter {k}"),
                expected,
                found: gamma.shape(),
            });
        }
        let dd = DefectData::analyze(&gamma, &self.tol)?;
        if dd.class.terminates() {
            self.terminated = Some(Termination {
                index: k,
                reason: dd.class,
            });
        }
        self.entries.push(dd);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn gamma(&self, k: usize) -> &ComplexMatrix {
        &self.entries[k].gamma
    }

    pub fn gammas(&self) -> Vec<ComplexMatrix> {
        self.entries.iter().map(|e| e.gamma.clone()).collect()
    }

    /// Input dimension a further parameter would need.
    pub fn next_in_dim(&self) -> usize {
        self.entries.last().map_or(self.dim_m, |e| e.rank())
    }

    /// Output dimension a further parameter would need.
    pub fn next_out_dim(&self) -> usize {
        self.entries.last().map_or(self.dim_n, |e| e.rank_star())
    }

    /// The parameters `Γ_k*` of the adjoint function.
    pub fn adjoint(&self) -> Self {
        let gammas = self.entries.iter().map(|e| e.gamma.adjoint()).collect();
        Self::new(self.dim_n, self.dim_m, gammas, self.tol).expect("adjoint of a valid sequence")
    }

    pub fn truncated(&self, len: usize) -> Self {
        let len = len.min(self.len());
        let terminated = self.terminated.filter(|t| t.index < len);
        Self {
            dim_m: self.dim_m,
            dim_n: self.dim_n,
            entries: self.entries[..len].to_vec(),
            terminated,
            tol: self.tol,
        }
    }

    /// Sequence `0, Γ_0, Γ_1, ...` whose function is `z·Θ(z)`.
    ///
    /// The zero head has identity defects, and with the identity basis kept
    /// for full-rank defects no re-basing of later parameters is needed.
    pub fn hat_lift(&self) -> Self {
        let mut gammas = vec![linalg::zeros(self.dim_n, self.dim_m)];
        gammas.extend(self.gammas());
        Self::new(self.dim_m, self.dim_n, gammas, self.tol).expect("hat lift of a valid sequence")
    }

    /// Extends with zero parameters up to `len` entries; terminated sequences are returned as is.
    pub fn zero_padded(&self, len: usize) -> Self {
        let mut out = self.clone();
        while out.terminated.is_none() && out.len() < len {
            let z = linalg::zeros(out.next_out_dim(), out.next_in_dim());
            out.push(z).expect("zero parameter always fits");
        }
        out
    }
}

/// Block lower-triangular Toeplitz matrix with `C_{i-j}` in block `(i, j)`.
///
/// With `adjoint` set the blocks are `C_{i-j}*`.
pub fn build_toeplitz(data: &SchurProblemData, adjoint: bool) -> ComplexMatrix {
    let (bo, bi) = if adjoint {
        (data.dim_m, data.dim_n)
    } else {
        (data.dim_n, data.dim_m)
    };
    let len = data.coeffs.len();
    let mut t = linalg::zeros(len * bo, len * bi);
    for i in 0..len {
        for j in 0..=i {
            let blk = &data.coeffs[i - j];
            let blk = if adjoint { blk.adjoint() } else { blk.clone() };
            linalg::paste(&mut t, i * bo, j * bi, &blk);
        }
    }
    t
}

/// Kreĭn shorted operator `S_𝒦 = S^{1/2} P_Ω S^{1/2}` with
/// `Ω = cran S ⊖ clos(S^{1/2} 𝒦^⊥)`.
pub fn krein_short(s: &ComplexMatrix, k_basis: &ComplexMatrix, rel_tol: f64) -> Result<ComplexMatrix> {
    let n = s.nrows();
    if k_basis.nrows() != n {
        return Err(SchurError::ShapeMismatch {
            what: "subspace basis".into(),
            expected: (n, k_basis.ncols()),
            found: k_basis.shape(),
        });
    }
    let scale = linalg::operator_norm(s).max(1.0);
    let root = linalg::psd_sqrt_scaled(s, scale)?;
    let (values, _) = linalg::hermitian_eigen_scaled(s, scale)?;
    let lambda_max = values.first().copied().unwrap_or(0.0);
    if lambda_max <= rel_tol * scale {
        return Ok(linalg::zeros(n, n));
    }
    let q = linalg::range_basis_above(s, rel_tol * lambda_max, scale)?;
    let k_perp_proj = linalg::identity(n) - k_basis * k_basis.adjoint();
    let k_perp = linalg::range_basis_above(&k_perp_proj, 0.5, 1.0)?;
    let y = q.adjoint() * &root * k_perp;
    let yy = &y * y.adjoint();
    let yy_max = linalg::operator_norm(&yy);
    let z = if yy_max > 0.0 {
        linalg::range_basis_above(&yy, rel_tol * yy_max, yy_max)?
    } else {
        linalg::zeros(q.ncols(), 0)
    };
    let omega = linalg::identity(q.ncols()) - &z * z.adjoint();
    let p = &q * omega * q.adjoint();
    let out = &root * p * &root;
    Ok((&out + out.adjoint()) * c(0.5, 0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    M,
    N,
}

/// Shorted defect operator through the product of defect operators:
/// `D_{Γ_0}···D_{Γ_{n-1}} D²_{Γ_n} D_{Γ_{n-1}}···D_{Γ_0}` (side `M`) or its
/// adjoint analogue (side `N`).
pub fn shorted_via_params(cs: &ChoiceSequence, n: usize, side: Side) -> Result<ComplexMatrix> {
    let last = if n < cs.len() {
        n
    } else {
        match cs.terminated {
            Some(t) => {
                let vanishes = match side {
                    Side::M => t.reason != ContractionClass::CoIsometric,
                    Side::N => t.reason != ContractionClass::Isometric,
                };
                if vanishes {
                    let d = if side == Side::M { cs.dim_m } else { cs.dim_n };
                    return Ok(linalg::zeros(d, d));
                }
                t.index
            }
            None => {
                return Err(SchurError::IndexOutOfRange {
                    index: n,
                    available: cs.len(),
                })
            }
        }
    };
    let e = &cs.entries[last];
    let mut x = match side {
        Side::M => &e.d_gamma * &e.d_gamma,
        Side::N => &e.d_gamma_star * &e.d_gamma_star,
    };
    for e in cs.entries[..last].iter().rev() {
        x = match side {
            Side::M => {
                let leg = e.defect_leg();
                leg.adjoint() * x * leg
            }
            Side::N => {
                let leg = e.defect_star_leg();
                &leg * x * leg.adjoint()
            }
        };
    }
    Ok(x)
}

/// Recovers the Schur parameters of the data level by level.
pub fn taylor_to_params(data: &SchurProblemData, tol: &Tolerances) -> Result<ChoiceSequence> {
    let norm = linalg::operator_norm(&build_toeplitz(data, false));
    if norm > 1.0 + tol.contraction_slack {
        return Err(SchurError::NotASchurSequence { norm });
    }
    let scale = data
        .coeffs
        .iter()
        .map(linalg::operator_norm)
        .fold(1.0, f64::max);
    let bound = tol.consistency_tol * scale;
    let mut cs = ChoiceSequence::new(data.dim_m, data.dim_n, Vec::new(), *tol)?;
    let mut level_coeffs = data.coeffs.clone();
    let mut level = 0;
    while let Some(head) = level_coeffs.first() {
        let head = head.clone();
        cs.push(head).map_err(|e| match e {
            SchurError::NotContraction { norm } => SchurError::NotASchurSequence { norm },
            other => other,
        })?;
        let dd = cs.entries.last().unwrap().clone();
        let star_leg = dd.defect_star_leg();
        let leg = dd.defect_leg();
        let star_pinv = linalg::pseudo_inverse(&star_leg, 1e-14);
        let leg_pinv = linalg::pseudo_inverse(&leg, 1e-14);
        let mut b = Vec::with_capacity(level_coeffs.len());
        for (k, ck) in level_coeffs.iter().enumerate().skip(1) {
            let bk = &star_pinv * ck * &leg_pinv;
            let residual = (&star_leg * &bk * &leg - ck).norm();
            if residual > bound {
                return Err(SchurError::InconsistentData {
                    level,
                    index: k,
                    residual,
                });
            }
            b.push(bk);
        }
        if cs.terminated.is_some() {
            break;
        }
        let g_star = dd.adjoint_compressed();
        let mut next: Vec<ComplexMatrix> = Vec::with_capacity(b.len());
        for j in 0..b.len() {
            let mut cj = b[j].clone();
            for i in 0..j {
                cj += &next[i] * &g_star * &b[j - 1 - i];
            }
            next.push(cj);
        }
        level_coeffs = next;
        level += 1;
    }
    Ok(cs)
}

/// Taylor coefficients `C_0..C_order` of the function with parameters `cs`
/// (zero beyond the list unless terminated), by running the level recursion upwards.
pub fn params_to_taylor_recursive(cs: &ChoiceSequence, order: usize) -> Vec<ComplexMatrix> {
    if cs.is_empty() {
        return vec![linalg::zeros(cs.dim_n, cs.dim_m); order + 1];
    }
    let last = cs.len() - 1;
    let mut coeffs: Vec<ComplexMatrix> = (0..=order)
        .map(|k| {
            if k == 0 {
                cs.gamma(last).clone()
            } else {
                linalg::zeros(cs.gamma(last).nrows(), cs.gamma(last).ncols())
            }
        })
        .collect();
    for e in cs.entries[..last].iter().rev() {
        let g_star = e.adjoint_compressed();
        let star_leg = e.defect_star_leg();
        let leg = e.defect_leg();
        // B_1..B_order from the lower level
        let mut b: Vec<ComplexMatrix> = Vec::with_capacity(order);
        for j in 0..order {
            let mut bj = coeffs[j].clone();
            for i in 0..j {
                bj -= &coeffs[i] * &g_star * &b[j - 1 - i];
            }
            b.push(bj);
        }
        let mut up = vec![e.gamma.clone()];
        up.extend(b.iter().map(|bj| &star_leg * bj * &leg));
        coeffs = up;
    }
    coeffs
}

/// Taylor coefficients of the function with parameters `cs`, extracted by
/// contour sums from its realization.
pub fn params_to_taylor(cs: &ChoiceSequence, order: usize) -> Result<Vec<ComplexMatrix>> {
    let f = SchurEvaluator::from_sequence(cs)?;
    taylor_extract(|z| f.eval(z), order)
}

#[derive(Clone, Debug)]
pub struct ProblemClassification {
    pub solvable: bool,
    pub unique: bool,
    pub first_degenerate_index: Option<usize>,
    /// `(D²_{T_N})_𝔐`; absent for unsolvable data.
    pub shorted_m: Option<ComplexMatrix>,
    /// `(D²_{T̃_N})_𝔑`; absent for unsolvable data.
    pub shorted_n: Option<ComplexMatrix>,
    pub toeplitz_norm: f64,
    /// Norm below which a shorted operator counts as zero, per side.
    pub threshold_m: f64,
    pub threshold_n: f64,
}

fn corner_basis(total: usize, corner: usize) -> ComplexMatrix {
    linalg::block(&linalg::identity(total), 0, 0, total, corner)
}

fn shorted_corner(data: &SchurProblemData, adjoint: bool, tol: &Tolerances) -> Result<ComplexMatrix> {
    let t = build_toeplitz(data, adjoint);
    let s = linalg::identity(t.ncols()) - t.adjoint() * &t;
    let corner = if adjoint { data.dim_n } else { data.dim_m };
    let full = krein_short(&s, &corner_basis(t.ncols(), corner), tol.rank_tol)?;
    Ok(linalg::block(&full, 0, 0, corner, corner))
}

/// Solvability and uniqueness of the interpolation problem.
pub fn classify(data: &SchurProblemData, tol: &Tolerances) -> Result<ProblemClassification> {
    let toeplitz_norm = linalg::operator_norm(&build_toeplitz(data, false));
    let threshold_m = tol.degeneracy_tol * data.dim_m.max(1) as f64;
    let threshold_n = tol.degeneracy_tol * data.dim_n.max(1) as f64;
    let mut out = ProblemClassification {
        solvable: toeplitz_norm <= 1.0 + tol.contraction_slack,
        unique: false,
        first_degenerate_index: None,
        shorted_m: None,
        shorted_n: None,
        toeplitz_norm,
        threshold_m,
        threshold_n,
    };
    if !out.solvable {
        return Ok(out);
    }
    for p in 0..data.coeffs.len() {
        let sub = data.truncated(p + 1);
        let sm = shorted_corner(&sub, false, tol)?;
        let sn = shorted_corner(&sub, true, tol)?;
        let degenerate = linalg::operator_norm(&sm) <= threshold_m || linalg::operator_norm(&sn) <= threshold_n;
        if degenerate && out.first_degenerate_index.is_none() {
            out.first_degenerate_index = Some(p);
        }
        if p == data.order() {
            out.unique = degenerate;
            out.shorted_m = Some(sm);
            out.shorted_n = Some(sn);
        }
    }
    Ok(out)
}
