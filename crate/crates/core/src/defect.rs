//! Defect operators, defect subspaces and elementary rotations.
//!
//! For a contraction `Γ: 𝔐 → 𝔑` the defect operators are
//! `D_Γ = (I − Γ*Γ)^{1/2}` and `D_{Γ*} = (I − ΓΓ*)^{1/2}`. The defect
//! subspaces are carried as explicit orthonormal bases so that every operator
//! acting between them becomes a concrete matrix.

use std::fmt;

use crate::error::Result;
use crate::linalg::{self, c, ComplexMatrix};
use crate::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ContractionClass {
    Strict,
    Isometric,
    CoIsometric,
    Unitary,
}

impl ContractionClass {
    pub fn name(self) -> &'static str {
        match self {
            ContractionClass::Strict => "strict",
            ContractionClass::Isometric => "isometric",
            ContractionClass::CoIsometric => "co_isometric",
            ContractionClass::Unitary => "unitary",
        }
    }

    /// True when the sequence of Schur parameters must stop here.
    pub fn terminates(self) -> bool {
        self != ContractionClass::Strict
    }
}

impl fmt::Display for ContractionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct DefectData {
    pub gamma: ComplexMatrix,
    pub d_gamma: ComplexMatrix,
    pub d_gamma_star: ComplexMatrix,
    /// `n_in × r` orthonormal basis of 𝔇_Γ.
    pub basis_d: ComplexMatrix,
    /// `n_out × r*` orthonormal basis of 𝔇_{Γ*}.
    pub basis_d_star: ComplexMatrix,
    pub class: ContractionClass,
}

impl DefectData {
    /// Analyzes a contraction.
    ///
    /// Singular values in `(1, 1 + contraction_slack]` are clamped to 1 and the
    /// clamped matrix is stored. A defect direction is kept when its eigenvalue
    /// in `I − Γ*Γ` exceeds `rank_tol` (absolute, since the operator has norm ≤ 1);
    /// smaller eigenvalues count as zero in the defect operators as well.
    pub fn analyze(gamma: &ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        let gamma = linalg::clamp_to_contraction(gamma, tol.contraction_slack)?;
        let (n_out, n_in) = gamma.shape();
        let h = linalg::identity(n_in) - gamma.adjoint() * &gamma;
        let h_star = linalg::identity(n_out) - &gamma * gamma.adjoint();
        // directions dropped from the defect bases are dropped from the roots too,
        // which keeps the intertwining relations exact to rounding
        let d_gamma = linalg::psd_sqrt_cut(&h, tol.rank_tol, 1.0)?;
        let d_gamma_star = linalg::psd_sqrt_cut(&h_star, tol.rank_tol, 1.0)?;
        let basis_d = linalg::range_basis_above(&h, tol.rank_tol, 1.0)?;
        let basis_d_star = linalg::range_basis_above(&h_star, tol.rank_tol, 1.0)?;
        let class = match (basis_d.ncols(), basis_d_star.ncols()) {
            (0, 0) => ContractionClass::Unitary,
            (0, _) => ContractionClass::Isometric,
            (_, 0) => ContractionClass::CoIsometric,
            _ => ContractionClass::Strict,
        };
        Ok(Self {
            gamma,
            d_gamma,
            d_gamma_star,
            basis_d,
            basis_d_star,
            class,
        })
    }

    pub fn n_in(&self) -> usize {
        self.gamma.ncols()
    }

    pub fn n_out(&self) -> usize {
        self.gamma.nrows()
    }

    /// dim 𝔇_Γ
    pub fn rank(&self) -> usize {
        self.basis_d.ncols()
    }

    /// dim 𝔇_{Γ*}
    pub fn rank_star(&self) -> usize {
        self.basis_d_star.ncols()
    }

    /// `D_Γ` as a map from the input space onto 𝔇_Γ coordinates (`r × n_in`).
    pub fn defect_leg(&self) -> ComplexMatrix {
        self.basis_d.adjoint() * &self.d_gamma
    }

    /// `D_{Γ*}` restricted to 𝔇_{Γ*} coordinates (`n_out × r*`).
    pub fn defect_star_leg(&self) -> ComplexMatrix {
        &self.d_gamma_star * &self.basis_d_star
    }

    /// `Γ*` compressed to a map 𝔇_{Γ*} → 𝔇_Γ (`r × r*`).
    pub fn adjoint_compressed(&self) -> ComplexMatrix {
        self.basis_d.adjoint() * self.gamma.adjoint() * &self.basis_d_star
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RotationKind {
    Full,
    Row,
    Column,
    UnitaryCore,
}

impl RotationKind {
    fn of(class: ContractionClass) -> Self {
        match class {
            ContractionClass::Strict => RotationKind::Full,
            ContractionClass::Isometric => RotationKind::Row,
            ContractionClass::CoIsometric => RotationKind::Column,
            ContractionClass::Unitary => RotationKind::UnitaryCore,
        }
    }
}

/// The unitary `𝐉_Γ : 𝔐 ⊕ 𝔇_{Γ*} → 𝔑 ⊕ 𝔇_Γ`.
#[derive(Clone, Debug)]
pub struct RotationBlock {
    pub matrix: ComplexMatrix,
    pub kind: RotationKind,
    /// `(n_in, r*)`
    pub input_split: (usize, usize),
    /// `(n_out, r)`
    pub output_split: (usize, usize),
}

/// `𝐉_Γ = [[Γ, D_{Γ*}], [D_Γ, −Γ*]]` with compressed legs.
///
/// Empty defect spaces give zero-width legs, so the row, column and bare
/// forms fall out of the same layout.
pub fn elementary_rotation(dd: &DefectData) -> RotationBlock {
    let (n_out, n_in) = dd.gamma.shape();
    let (r, rs) = (dd.rank(), dd.rank_star());
    let mut m = linalg::zeros(n_out + r, n_in + rs);
    linalg::paste(&mut m, 0, 0, &dd.gamma);
    linalg::paste(&mut m, 0, n_in, &dd.defect_star_leg());
    linalg::paste(&mut m, n_out, 0, &dd.defect_leg());
    linalg::paste(&mut m, n_out, n_in, &(dd.adjoint_compressed() * c(-1.0, 0.0)));
    RotationBlock {
        matrix: m,
        kind: RotationKind::of(dd.class),
        input_split: (n_in, rs),
        output_split: (n_out, r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_real, identity, max_abs_diff, operator_norm, scalar};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn unitarity_defect(m: &ComplexMatrix) -> f64 {
        let a = (m.adjoint() * m - identity(m.ncols())).norm();
        let b = (m * m.adjoint() - identity(m.nrows())).norm();
        a.max(b)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    /// Random contraction of a requested flavour: 0 strict, 1 with a unit singular value.
    fn random_contraction(rng: &mut ChaCha8Rng, rows: usize, cols: usize, flavour: u8) -> ComplexMatrix {
        let a = random_matrix(rng, rows, cols);
        let norm = operator_norm(&a);
        match flavour {
            0 => a * c(rng.gen_range(0.1..0.95) / norm, 0.0),
            _ => {
                let svd = a.svd(true, true);
                let mut s = svd.singular_values.clone();
                s[0] = 1.0;
                for k in 1..s.len() {
                    s[k] = rng.gen_range(0.0..1.0);
                }
                let u = svd.u.unwrap();
                let v_t = svd.v_t.unwrap();
                let d = ComplexMatrix::from_diagonal(&s.map(|x| c(x, 0.0)));
                u * d * v_t
            }
        }
    }

    #[test]
    fn scalar_half() {
        let dd = DefectData::analyze(&scalar(0.5), &tol()).unwrap();
        assert!((dd.d_gamma[(0, 0)].re - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((dd.d_gamma_star[(0, 0)].re - 0.75f64.sqrt()).abs() < 1e-15);
        assert_eq!(dd.class, ContractionClass::Strict);
        assert_eq!((dd.rank(), dd.rank_star()), (1, 1));
    }

    #[test]
    fn column_isometry() {
        let dd = DefectData::analyze(&from_real(2, 1, &[1.0, 0.0]), &tol()).unwrap();
        assert_eq!(dd.d_gamma.shape(), (1, 1));
        assert!(dd.d_gamma[(0, 0)].norm() < 1e-15);
        assert_eq!(dd.rank(), 0);
        assert!(max_abs_diff(&dd.basis_d_star, &from_real(2, 1, &[0.0, 1.0])) < 1e-15);
        assert_eq!(dd.class, ContractionClass::Isometric);

        let rot = elementary_rotation(&dd);
        assert_eq!(rot.kind, RotationKind::Row);
        assert!(max_abs_diff(&rot.matrix, &identity(2)) < 1e-15);
    }

    #[test]
    fn unitary_has_empty_defects() {
        let s = 0.5f64.sqrt();
        let u = from_real(2, 2, &[s, s, -s, s]);
        let dd = DefectData::analyze(&u, &tol()).unwrap();
        assert_eq!(dd.class, ContractionClass::Unitary);
        assert_eq!((dd.rank(), dd.rank_star()), (0, 0));
        assert_eq!(elementary_rotation(&dd).kind, RotationKind::UnitaryCore);
    }

    #[test]
    fn rotation_examples() {
        let rot = elementary_rotation(&DefectData::analyze(&scalar(0.0), &tol()).unwrap());
        assert!(max_abs_diff(&rot.matrix, &from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])) < 1e-15);
        let rot = elementary_rotation(&DefectData::analyze(&scalar(0.6), &tol()).unwrap());
        assert!(max_abs_diff(&rot.matrix, &from_real(2, 2, &[0.6, 0.8, 0.8, -0.6])) < 1e-15);
    }

    #[test]
    fn rejects_expansions_and_clamps_slack() {
        assert!(DefectData::analyze(&scalar(1.01), &tol()).is_err());
        let dd = DefectData::analyze(&scalar(1.0 + 1e-10), &tol()).unwrap();
        assert_eq!(dd.class, ContractionClass::Unitary);
        assert!((dd.gamma[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    fn contraction_strategy() -> impl Strategy<Value = ComplexMatrix> {
        (1usize..=4, 1usize..=4, 0u8..2, any::<u64>()).prop_map(|(r, cc, fl, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_contraction(&mut rng, r, cc, fl)
        })
    }

    proptest! {
        #[test]
        fn rotation_is_unitary(g in contraction_strategy()) {
            let dd = DefectData::analyze(&g, &tol()).unwrap();
            prop_assert!(unitarity_defect(&elementary_rotation(&dd).matrix) < 1e-11);
        }

        #[test]
        fn defect_intertwining(g in contraction_strategy()) {
            let dd = DefectData::analyze(&g, &tol()).unwrap();
            let g = &dd.gamma;
            prop_assert!((g * &dd.d_gamma - &dd.d_gamma_star * g).norm() < 1e-10);
            prop_assert!((g.adjoint() * &dd.d_gamma_star - &dd.d_gamma * g.adjoint()).norm() < 1e-10);
        }

        #[test]
        fn rank_nullity_bookkeeping(g in contraction_strategy()) {
            let dd = DefectData::analyze(&g, &tol()).unwrap();
            let lhs = dd.rank() as i64 - dd.rank_star() as i64;
            prop_assert_eq!(lhs, dd.n_in() as i64 - dd.n_out() as i64);
        }

        #[test]
        fn class_invariant_under_unitary_conjugation(g in contraction_strategy(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_matrix(&mut rng, g.nrows(), g.nrows()).qr().q();
            let v = random_matrix(&mut rng, g.ncols(), g.ncols()).qr().q();
            let a = DefectData::analyze(&g, &tol()).unwrap();
            let b = DefectData::analyze(&(&u * &g * &v), &tol()).unwrap();
            prop_assert_eq!(a.class, b.class);
        }
    }
}
