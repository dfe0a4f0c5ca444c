//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schur_cmv::defect::{ContractionClass, DefectData};
use schur_cmv::linalg::{self, c, ComplexMatrix};
use schur_cmv::sequence::ChoiceSequence;
use schur_cmv::{Complex64, Tolerances};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn tol() -> Tolerances {
    Tolerances::default()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    if n == 0 {
        return linalg::zeros(0, 0);
    }
    random_matrix(rng, n, n).qr().q()
}

/// `U·diag(σ)·V*` with the given singular values (padded with zeros).
pub fn with_singular_values(rng: &mut ChaCha8Rng, rows: usize, cols: usize, sigma: &[f64]) -> ComplexMatrix {
    let u = random_unitary(rng, rows);
    let v = random_unitary(rng, cols);
    let mut d = linalg::zeros(rows, cols);
    for (k, s) in sigma.iter().enumerate().take(rows.min(cols)) {
        d[(k, k)] = c(*s, 0.0);
    }
    u * d * v.adjoint()
}

pub fn random_strict(rng: &mut ChaCha8Rng, rows: usize, cols: usize, max_norm: f64) -> ComplexMatrix {
    let k = rows.min(cols);
    let sigma: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..max_norm)).collect();
    with_singular_values(rng, rows, cols, &sigma)
}

/// A contraction of the requested class, or `None` when the shape does not allow it.
pub fn random_of_class(rng: &mut ChaCha8Rng, rows: usize, cols: usize, class: ContractionClass) -> Option<ComplexMatrix> {
    let k = rows.min(cols);
    match class {
        ContractionClass::Strict => Some(random_strict(rng, rows, cols, 0.9)),
        ContractionClass::Isometric if rows > cols => Some(with_singular_values(rng, rows, cols, &vec![1.0; k])),
        ContractionClass::CoIsometric if rows < cols => Some(with_singular_values(rng, rows, cols, &vec![1.0; k])),
        ContractionClass::Unitary if rows == cols && rows > 0 => Some(random_unitary(rng, rows)),
        _ => None,
    }
}

/// Strict choice sequence of `len` parameters with entries of norm below `max_norm`.
pub fn strict_sequence(rng: &mut ChaCha8Rng, dim_m: usize, dim_n: usize, len: usize, max_norm: f64) -> ChoiceSequence {
    let mut cs = ChoiceSequence::new(dim_m, dim_n, vec![], tol()).unwrap();
    for _ in 0..len {
        let g = random_strict(rng, cs.next_out_dim(), cs.next_in_dim(), max_norm);
        cs.push(g).unwrap();
    }
    cs
}

/// Strict sequence that sometimes contains parameters with a unit singular
/// value (shrinking later defect spaces without terminating).
pub fn mixed_sequence(rng: &mut ChaCha8Rng, dim_m: usize, dim_n: usize, len: usize) -> ChoiceSequence {
    let mut cs = ChoiceSequence::new(dim_m, dim_n, vec![], tol()).unwrap();
    for _ in 0..len {
        let (rows, cols) = (cs.next_out_dim(), cs.next_in_dim());
        let k = rows.min(cols);
        let g = if k >= 2 && rng.gen_bool(0.3) {
            let mut sigma: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..0.9)).collect();
            sigma[0] = 1.0;
            with_singular_values(rng, rows, cols, &sigma)
        } else {
            random_strict(rng, rows, cols, 0.9)
        };
        cs.push(g).unwrap();
    }
    cs
}

/// Strict prefix of `len` parameters followed by a terminating parameter of
/// whichever non-strict class fits the shape (unitary preferred when asked).
pub fn terminated_sequence(
    rng: &mut ChaCha8Rng,
    dim_m: usize,
    dim_n: usize,
    len: usize,
    prefer: ContractionClass,
) -> ChoiceSequence {
    let mut cs = strict_sequence(rng, dim_m, dim_n, len, 0.9);
    let (rows, cols) = (cs.next_out_dim(), cs.next_in_dim());
    let classes = [prefer, ContractionClass::Unitary, ContractionClass::Isometric, ContractionClass::CoIsometric];
    let g = classes
        .iter()
        .find_map(|&cl| random_of_class(rng, rows, cols, cl))
        .expect("some terminating class fits");
    cs.push(g).unwrap();
    assert!(cs.terminated.is_some());
    cs
}

pub fn random_point(rng: &mut ChaCha8Rng, max_radius: f64) -> Complex64 {
    let r = max_radius * rng.gen_range(0.0f64..1.0).sqrt();
    Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
}

/// Recursive Möbius reconstruction
/// `Θ_k = Γ_k + z·D_{Γ*_k}·Θ_{k+1}·(I + z·Γ*_k·Θ_{k+1})⁻¹·D_{Γ_k}`,
/// with zero parameters past the list unless the list ends in a terminating one.
pub fn mobius_eval(cs: &ChoiceSequence, z: Complex64) -> ComplexMatrix {
    if cs.is_empty() {
        return linalg::zeros(cs.dim_n, cs.dim_m);
    }
    let mut theta = linalg::zeros(cs.next_out_dim(), cs.next_in_dim());
    if cs.terminated.is_some() {
        theta = cs.entries.last().unwrap().gamma.clone();
        return mobius_fold(&cs.entries[..cs.len() - 1], theta, z);
    }
    theta = mobius_fold(&cs.entries, theta, z);
    theta
}

fn mobius_fold(entries: &[DefectData], mut theta: ComplexMatrix, z: Complex64) -> ComplexMatrix {
    for e in entries.iter().rev() {
        let adj = e.adjoint_compressed();
        let inner = linalg::identity(adj.nrows()) + &adj * &theta * z;
        let inv = inner.try_inverse().expect("Möbius denominator invertible");
        theta = &e.gamma + e.defect_star_leg() * &theta * inv * e.defect_leg() * z;
    }
    theta
}

/// Classical scalar Schur algorithm on a truncated power series.
pub fn scalar_schur(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut f: Vec<Complex64> = coeffs.to_vec();
    let mut gammas = Vec::new();
    while !f.is_empty() {
        let g = f[0];
        gammas.push(g);
        if g.norm() >= 1.0 - 1e-12 || f.len() == 1 {
            break;
        }
        // f_next = (f − γ) / (z·(1 − γ̄ f))
        let num: Vec<Complex64> = f[1..].to_vec();
        let mut den: Vec<Complex64> = f.iter().map(|x| -g.conj() * x).collect();
        den[0] += 1.0;
        let len = num.len();
        let mut q = vec![Complex64::new(0.0, 0.0); len];
        for k in 0..len {
            let mut acc = num[k];
            for j in 0..k {
                acc -= q[j] * den[k - j];
            }
            q[k] = acc / den[0];
        }
        f = q;
    }
    gammas
}

/// Scalar continued-fraction reconstruction `f = (γ + z·f₁)/(1 + γ̄·z·f₁)`, closing with `tail`.
pub fn scalar_fraction(gammas: &[Complex64], tail: Complex64, z: Complex64) -> Complex64 {
    let mut f = tail;
    for g in gammas.iter().rev() {
        f = (g + z * f) / (1.0 + g.conj() * z * f);
    }
    f
}

/// Entrywise three-diagonal `S_n` from the block formulas (`cap` = `Γ_{2n+2}`).
pub fn blokit_s_n(cs: &ChoiceSequence, n: usize, cap: &ComplexMatrix) -> ComplexMatrix {
    let e = |k: usize| &cs.entries[k];
    let gamma = |k: usize| -> ComplexMatrix {
        if k == 2 * n + 2 {
            cap.clone()
        } else {
            e(k).gamma.clone()
        }
    };
    let adj = |k: usize| e(k).adjoint_compressed();
    let leg = |k: usize| e(k).defect_leg();
    let sleg = |k: usize| e(k).defect_star_leg();
    // H_k = r_{2k-2} ⊕ r*_{2k-1}
    let dims: Vec<(usize, usize)> = (1..=n + 1).map(|k| (e(2 * k - 2).rank(), e(2 * k - 1).rank_star())).collect();
    let offs: Vec<usize> = dims.iter().scan(0, |acc, d| {
        let o = *acc;
        *acc += d.0 + d.1;
        Some(o)
    }).collect();
    let total: usize = dims.iter().map(|d| d.0 + d.1).sum();
    let mut s = linalg::zeros(total, total);
    let neg = c(-1.0, 0.0);
    for k in 1..=n + 1 {
        let o = offs[k - 1];
        let (a, _) = dims[k - 1];
        linalg::paste(&mut s, o, o, &(adj(2 * k - 2) * gamma(2 * k - 1) * neg));
        linalg::paste(&mut s, o, o + a, &(adj(2 * k - 2) * sleg(2 * k - 1) * neg));
        linalg::paste(&mut s, o + a, o, &(gamma(2 * k) * leg(2 * k - 1)));
        linalg::paste(&mut s, o + a, o + a, &(gamma(2 * k) * adj(2 * k - 1) * neg));
        if k <= n {
            let o2 = offs[k];
            let (a2, _) = dims[k];
            // C_k : H_{k+1} → H_k, bottom row only
            linalg::paste(&mut s, o + a, o2, &(sleg(2 * k) * gamma(2 * k + 1)));
            linalg::paste(&mut s, o + a, o2 + a2, &(sleg(2 * k) * sleg(2 * k + 1)));
            // A_k : H_k → H_{k+1}, top row only
            linalg::paste(&mut s, o2, o, &(leg(2 * k) * leg(2 * k - 1)));
            linalg::paste(&mut s, o2, o + a, &(leg(2 * k) * adj(2 * k - 1) * neg));
        }
    }
    s
}

/// Generalized Schur complement `S11 − S12·S22⁺·S21` onto the leading `k` coordinates.
pub fn schur_complement(s: &ComplexMatrix, k: usize) -> ComplexMatrix {
    let n = s.nrows();
    let s11 = linalg::block(s, 0, 0, k, k);
    let s12 = linalg::block(s, 0, k, k, n - k);
    let s21 = linalg::block(s, k, 0, n - k, k);
    let s22 = linalg::block(s, k, k, n - k, n - k);
    s11 - s12 * linalg::pseudo_inverse(&s22, 1e-12) * s21
}

pub fn unitarity_defect(m: &ComplexMatrix) -> f64 {
    let a = (m.adjoint() * m - linalg::identity(m.ncols())).norm();
    let b = (m * m.adjoint() - linalg::identity(m.nrows())).norm();
    a.max(b)
}
