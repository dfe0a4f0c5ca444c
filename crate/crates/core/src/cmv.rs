//! Block CMV factors and the finite sub-matrices `S_n`, `S̃_n`, `S_{n,0}`.
//!
//! Coordinates of `K_n = H_1 ⊕ ... ⊕ H_{n+1}` are the defect coordinates
//! `r_0, r*_1, r_2, r*_3, ..., r_{2n}, r*_{2n+1}` and those of `K̃_n` are
//! `r*_0, r_1, ..., r*_{2n}, r_{2n+1}`, where `r_k = dim 𝔇_{Γ_k}` and
//! `r*_k = dim 𝔇_{Γ*_k}`. Zero-dimensional pieces are legal everywhere.

use crate::defect::{elementary_rotation, ContractionClass, DefectData};
use crate::error::{Result, SchurError};
use crate::linalg::{self, c, ComplexMatrix};
use crate::sequence::ChoiceSequence;

/// Ordered direct sum of labelled coordinate blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockIndex {
    pub spaces: Vec<(String, usize)>,
}

impl BlockIndex {
    pub fn total(&self) -> usize {
        self.spaces.iter().map(|s| s.1).sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.spaces
            .iter()
            .map(|s| {
                let o = acc;
                acc += s.1;
                o
            })
            .collect()
    }

    /// `(offset, dim)` of the space with this label.
    pub fn locate(&self, label: &str) -> Option<(usize, usize)> {
        let offsets = self.offsets();
        self.spaces
            .iter()
            .position(|s| s.0 == label)
            .map(|i| (offsets[i], self.spaces[i].1))
    }
}

/// Defect coordinate of index `j` in `K`-type order: `r_j` for even `j`, `r*_j` for odd `j`.
fn k_coord(entries: &[DefectData], j: usize) -> (String, usize) {
    let e = &entries[j];
    if j.is_multiple_of(2) {
        (format!("D{j}"), e.rank())
    } else {
        (format!("D*{j}"), e.rank_star())
    }
}

/// The `K̃`-type counterpart: `r*_j` for even `j`, `r_j` for odd `j`.
fn k_tilde_coord(entries: &[DefectData], j: usize) -> (String, usize) {
    let e = &entries[j];
    if j.is_multiple_of(2) {
        (format!("D*{j}"), e.rank_star())
    } else {
        (format!("D{j}"), e.rank())
    }
}

#[derive(Clone, Debug)]
pub enum CapChoice {
    Zero,
    /// `Γ_{2n+2}` taken from the sequence.
    Actual,
    Given(ComplexMatrix),
}

#[derive(Clone, Debug)]
pub struct CmvAssembly {
    pub level: usize,
    pub v_n: ComplexMatrix,
    pub w_n: ComplexMatrix,
    pub w_n0: ComplexMatrix,
    pub s_n: ComplexMatrix,
    pub s_tilde_n: ComplexMatrix,
    pub s_n0: ComplexMatrix,
    pub s_tilde_n0: ComplexMatrix,
    pub index: BlockIndex,
    pub index_tilde: BlockIndex,
    /// The cap `Γ_{2n+2}` used in `w_n`, `s_n`, `s_tilde_n`.
    pub cap: ComplexMatrix,
    /// `𝐉_{Γ_1}` and `𝐉_{Γ_{2n+1}}`, the rotations touching the boundary spaces.
    pub j_first: ComplexMatrix,
    pub j_last: ComplexMatrix,
    /// Defect data of `Γ_0` and `Γ_{2n+1}`.
    pub head: DefectData,
    pub tail: DefectData,
}

/// Offsets and dimensions of the boundary pieces of `K_n` and `K̃_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Boundary {
    /// `𝔇_{Γ_0}` at the start of `K_n`.
    pub d0: (usize, usize),
    pub h1: (usize, usize),
    pub h_last: (usize, usize),
    /// `𝔇_{Γ*_{2n+1}}` at the end of `K_n`.
    pub d_star_last: (usize, usize),
    /// `𝔇_{Γ*_0}` at the start of `K̃_n`.
    pub d_star0_tilde: (usize, usize),
    pub h_last_tilde: (usize, usize),
    /// `𝔇_{Γ_{2n+1}}` at the end of `K̃_n`.
    pub d_last_tilde: (usize, usize),
}

impl CmvAssembly {
    pub fn dim(&self) -> usize {
        self.index.total()
    }

    pub fn boundary(&self) -> Boundary {
        let k = self.index.total();
        let kt = self.index_tilde.total();
        let r0 = self.head.rank();
        let rs1 = self.j_first.ncols() - self.head.rank();
        let (r_2n, rs_last) = (self.j_last.ncols() - self.tail.rank_star(), self.tail.rank_star());
        let (rs_2n, r_last) = (self.j_last.nrows() - self.tail.rank(), self.tail.rank());
        Boundary {
            d0: (0, r0),
            h1: (0, r0 + rs1),
            h_last: (k - r_2n - rs_last, r_2n + rs_last),
            d_star_last: (k - rs_last, rs_last),
            d_star0_tilde: (0, self.head.rank_star()),
            h_last_tilde: (kt - rs_2n - r_last, rs_2n + r_last),
            d_last_tilde: (kt - r_last, r_last),
        }
    }

    /// `Γ·[D_{Γ_{2n+1}}, −Γ*_{2n+1}]` placed on the `H_{n+1}` columns: the rank part of `S_{n,Γ} − S_{n,0}`.
    pub(crate) fn cap_row(&self, gamma: &ComplexMatrix) -> ComplexMatrix {
        let b = self.boundary();
        let bottom = linalg::block(
            &self.j_last,
            self.j_last.nrows() - self.tail.rank(),
            0,
            self.tail.rank(),
            self.j_last.ncols(),
        );
        let mut row = linalg::zeros(gamma.nrows(), self.dim());
        linalg::paste(&mut row, 0, b.h_last.0, &(gamma * bottom));
        row
    }

    fn check_cap(&self, gamma: &ComplexMatrix) -> Result<()> {
        let expected = (self.tail.rank_star(), self.tail.rank());
        if gamma.shape() != expected {
            return Err(SchurError::ShapeMismatch {
                what: "cap parameter".into(),
                expected,
                found: gamma.shape(),
            });
        }
        Ok(())
    }

    /// `S_{n,Γ} = S_{n,0} + j·Γ·[D_{Γ_{2n+1}}, −Γ*_{2n+1}]·P_{H_{n+1}}`.
    pub fn s_with_cap(&self, gamma: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_cap(gamma)?;
        let b = self.boundary();
        let mut s = self.s_n0.clone();
        let row = self.cap_row(gamma);
        let mut view = s.rows_mut(b.d_star_last.0, b.d_star_last.1);
        view += row;
        Ok(s)
    }

    /// `S̃_{n,Γ} = S̃_{n,0} + j̃·[D_{Γ*_{2n+1}}; −Γ*_{2n+1}]·Γ·P_{𝔇_{Γ_{2n+1}}}`.
    pub fn s_tilde_with_cap(&self, gamma: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_cap(gamma)?;
        let b = self.boundary();
        let right = linalg::block(
            &self.j_last,
            0,
            self.j_last.ncols() - self.tail.rank_star(),
            self.j_last.nrows(),
            self.tail.rank_star(),
        );
        let mut s = self.s_tilde_n0.clone();
        let upd = right * gamma;
        let mut view = s.view_mut((b.h_last_tilde.0, b.d_last_tilde.0), (b.h_last_tilde.1, b.d_last_tilde.1));
        view += upd;
        Ok(s)
    }
}

/// Builds `V_n`, `W_n`, `W_{n,0}` and their products from `Γ_0..Γ_{2n+1}`.
pub fn assemble(cs: &ChoiceSequence, n: usize, cap: CapChoice) -> Result<CmvAssembly> {
    let last = 2 * n + 1;
    if cs.len() <= last {
        return Err(SchurError::IndexOutOfRange {
            index: last,
            available: cs.len(),
        });
    }
    let entries = &cs.entries[..=last];
    let tail = entries[last].clone();
    let cap = match cap {
        CapChoice::Zero => {
            if tail.rank() == 0 || tail.rank_star() == 0 {
                return Err(SchurError::DegenerateTail {
                    index: last,
                    rank: tail.rank(),
                    rank_star: tail.rank_star(),
                });
            }
            linalg::zeros(tail.rank_star(), tail.rank())
        }
        CapChoice::Actual => {
            if cs.len() <= last + 1 {
                return Err(SchurError::IndexOutOfRange {
                    index: last + 1,
                    available: cs.len(),
                });
            }
            cs.gamma(last + 1).clone()
        }
        CapChoice::Given(g) => g,
    };
    let expected = (tail.rank_star(), tail.rank());
    if cap.shape() != expected {
        return Err(SchurError::ShapeMismatch {
            what: "cap parameter".into(),
            expected,
            found: cap.shape(),
        });
    }

    let rotations: Vec<ComplexMatrix> = entries.iter().map(|e| elementary_rotation(e).matrix).collect();
    let odd: Vec<&ComplexMatrix> = (0..=n).map(|k| &rotations[2 * k + 1]).collect();
    let v_n = linalg::block_diag(&odd);

    let head = entries[0].clone();
    let head_block = head.adjoint_compressed() * c(-1.0, 0.0);
    let zero_cap = linalg::zeros(cap.nrows(), cap.ncols());
    let mut w_blocks: Vec<&ComplexMatrix> = vec![&head_block];
    w_blocks.extend((1..=n).map(|k| &rotations[2 * k]));
    w_blocks.push(&zero_cap);
    let w_n0 = linalg::block_diag(&w_blocks);
    w_blocks.pop();
    w_blocks.push(&cap);
    let w_n = linalg::block_diag(&w_blocks);

    let index = BlockIndex {
        spaces: (0..=last).map(|j| k_coord(entries, j)).collect(),
    };
    let index_tilde = BlockIndex {
        spaces: (0..=last).map(|j| k_tilde_coord(entries, j)).collect(),
    };
    if v_n.ncols() != index.total() || v_n.nrows() != index_tilde.total() || w_n.shape() != (index.total(), index_tilde.total()) {
        return Err(SchurError::ShapeMismatch {
            what: "chained defect dimensions".into(),
            expected: (index.total(), index_tilde.total()),
            found: w_n.shape(),
        });
    }

    Ok(CmvAssembly {
        level: n,
        s_n: &w_n * &v_n,
        s_tilde_n: &v_n * &w_n,
        s_n0: &w_n0 * &v_n,
        s_tilde_n0: &v_n * &w_n0,
        v_n,
        w_n,
        w_n0,
        index,
        index_tilde,
        cap,
        j_first: rotations[1].clone(),
        j_last: rotations[last].clone(),
        head,
        tail,
    })
}

/// Sequence `0, Γ_0, Γ_1, ...` of the function `z·Θ(z)`.
pub fn hat_lift(cs: &ChoiceSequence) -> ChoiceSequence {
    cs.hat_lift()
}

/// Finite CMV unitaries `U_0 = L_0 M_0` and `Ũ_0 = M̃_0 L_0` of a terminated sequence.
///
/// For isometric or co-isometric termination the matrices are the north-west
/// sections through the last defect block; the semi-infinite shift tail is
/// recorded only by its arity.
#[derive(Clone, Debug)]
pub struct FiniteCmv {
    pub u0: ComplexMatrix,
    pub u0_tilde: ComplexMatrix,
    pub dim_m: usize,
    pub dim_n: usize,
    /// Coordinates of `H_0` and `H̃_0`.
    pub index: BlockIndex,
    pub index_tilde: BlockIndex,
    pub reason: ContractionClass,
    /// Dimension of the defect space the omitted tail acts on (0 for unitary termination).
    pub tail_arity: usize,
}

impl FiniteCmv {
    /// `T_0`: the compression of `U_0` to `H_0`.
    pub fn truncated(&self) -> ComplexMatrix {
        let h = self.index.total();
        linalg::block(&self.u0, self.dim_n, self.dim_m, h, h)
    }

    /// Transfer function `U_00 + z·U_01·(I − z·T_0)⁻¹·U_10` of the conservative system.
    pub fn transfer(&self, z: num_complex::Complex64) -> Result<ComplexMatrix> {
        let h = self.index.total();
        let (m, nn) = (self.dim_m, self.dim_n);
        let u00 = linalg::block(&self.u0, 0, 0, nn, m);
        let u01 = linalg::block(&self.u0, 0, m, nn, h);
        let u10 = linalg::block(&self.u0, nn, 0, h, m);
        let a = linalg::identity(h) - self.truncated() * z;
        let x = linalg::lu_solve(&a, &u10)?;
        Ok(u00 + u01 * x * z)
    }
}

pub fn finite_cmv(cs: &ChoiceSequence) -> Result<FiniteCmv> {
    let t = cs.terminated.ok_or(SchurError::NotTerminated)?;
    let entries = &cs.entries[..=t.index];
    let rotations: Vec<ComplexMatrix> = entries.iter().map(|e| elementary_rotation(e).matrix).collect();
    let index = BlockIndex {
        spaces: (0..=t.index).map(|j| k_coord(entries, j)).collect(),
    };
    let index_tilde = BlockIndex {
        spaces: (0..=t.index).map(|j| k_tilde_coord(entries, j)).collect(),
    };
    let (m, nn) = (cs.dim_m, cs.dim_n);
    let h = index.total();
    let ht = index_tilde.total();

    // M_0 = I ⊕ J_1 ⊕ J_3 ⊕ ... : 𝔐 ⊕ H_0 → 𝔐 ⊕ H̃_0, zero-filled past the last block
    let eye_m = linalg::identity(m);
    let mut odd: Vec<&ComplexMatrix> = vec![&eye_m];
    odd.extend(rotations.iter().skip(1).step_by(2));
    let m0 = fill(linalg::block_diag(&odd), m + ht, m + h);
    let eye_n = linalg::identity(nn);
    let mut odd_n: Vec<&ComplexMatrix> = vec![&eye_n];
    odd_n.extend(rotations.iter().skip(1).step_by(2));
    let m0_tilde = fill(linalg::block_diag(&odd_n), nn + ht, nn + h);
    // L_0 = J_0 ⊕ J_2 ⊕ ... : 𝔐 ⊕ H̃_0 → 𝔑 ⊕ H_0
    let even: Vec<&ComplexMatrix> = rotations.iter().step_by(2).collect();
    let l0 = fill(linalg::block_diag(&even), nn + h, m + ht);

    let reason = t.reason;
    let last = &entries[t.index];
    let tail_arity = match reason {
        ContractionClass::Isometric => last.rank_star(),
        ContractionClass::CoIsometric => last.rank(),
        _ => 0,
    };
    Ok(FiniteCmv {
        u0: &l0 * &m0,
        u0_tilde: &m0_tilde * &l0,
        dim_m: m,
        dim_n: nn,
        index,
        index_tilde,
        reason,
        tail_arity,
    })
}

fn fill(m: ComplexMatrix, rows: usize, cols: usize) -> ComplexMatrix {
    let mut out = linalg::zeros(rows, cols);
    let r = m.nrows().min(rows);
    let cc = m.ncols().min(cols);
    linalg::paste(&mut out, 0, 0, &linalg::block(&m, 0, 0, r, cc));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_real, max_abs_diff, scalar};
    use crate::Tolerances;

    fn scalars(v: &[f64]) -> ChoiceSequence {
        ChoiceSequence::new(1, 1, v.iter().map(|&x| scalar(x)).collect(), Tolerances::default()).unwrap()
    }

    #[test]
    fn all_zero_level_zero() {
        let a = assemble(&scalars(&[0.0, 0.0]), 0, CapChoice::Zero).unwrap();
        assert!(max_abs_diff(&a.v_n, &from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])) < 1e-15);
        assert!(a.w_n0.norm() == 0.0);
        assert_eq!(a.s_n0.shape(), (2, 2));
        assert!(a.s_n0.norm() == 0.0);
    }

    #[test]
    fn hand_product() {
        let a = assemble(&scalars(&[0.6, 0.8]), 0, CapChoice::Zero).unwrap();
        assert!(max_abs_diff(&a.v_n, &from_real(2, 2, &[0.8, 0.6, 0.6, -0.8])) < 1e-15);
        assert!(max_abs_diff(&a.w_n0, &from_real(2, 2, &[-0.6, 0.0, 0.0, 0.0])) < 1e-15);
        assert!(max_abs_diff(&a.s_n0, &from_real(2, 2, &[-0.48, -0.36, 0.0, 0.0])) < 1e-15);
    }

    #[test]
    fn degenerate_tail_rejected_for_zero_cap() {
        let err = assemble(&scalars(&[0.5, 1.0]), 0, CapChoice::Zero).unwrap_err();
        assert!(matches!(err, SchurError::DegenerateTail { index: 1, .. }));
        // an explicit empty cap is fine
        let a = assemble(&scalars(&[0.5, 1.0]), 0, CapChoice::Given(linalg::zeros(0, 0))).unwrap();
        assert_eq!(a.dim(), 1);
    }

    #[test]
    fn cap_formula_matches_product() {
        let cs = scalars(&[0.3, -0.4, 0.5, 0.2, 0.7]);
        let a = assemble(&cs, 1, CapChoice::Actual).unwrap();
        assert!(max_abs_diff(&a.s_with_cap(&a.cap).unwrap(), &a.s_n) < 1e-15);
        assert!(max_abs_diff(&a.s_tilde_with_cap(&a.cap).unwrap(), &a.s_tilde_n) < 1e-15);
    }

    #[test]
    fn finite_cmv_examples() {
        let f = finite_cmv(&scalars(&[0.5, 1.0])).unwrap();
        let s = 0.75f64.sqrt();
        assert!(max_abs_diff(&f.u0, &from_real(2, 2, &[0.5, s, s, -0.5])) < 1e-15);
        let z = num_complex::Complex64::new(0.3, 0.2);
        let want = (z + 0.5) / (z * 0.5 + 1.0);
        assert!((f.transfer(z).unwrap()[(0, 0)] - want).norm() < 1e-14);

        let f = finite_cmv(&scalars(&[1.0])).unwrap();
        assert!(max_abs_diff(&f.u0, &scalar(1.0)) < 1e-15);

        let h = 0.5f64.sqrt();
        let u = from_real(2, 2, &[h, h, -h, h]);
        let cs = ChoiceSequence::new(2, 2, vec![u.clone()], Tolerances::default()).unwrap();
        assert!(max_abs_diff(&finite_cmv(&cs).unwrap().u0, &u) < 1e-15);

        assert_eq!(finite_cmv(&scalars(&[0.5])).unwrap_err(), SchurError::NotTerminated);
    }

    #[test]
    fn isometric_tail_arity() {
        let cs = ChoiceSequence::new(1, 2, vec![from_real(2, 1, &[1.0, 0.0])], Tolerances::default()).unwrap();
        let f = finite_cmv(&cs).unwrap();
        assert_eq!(f.reason, ContractionClass::Isometric);
        assert_eq!(f.tail_arity, 1);
    }
}
