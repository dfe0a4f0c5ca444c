use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{c, operator_norm, ComplexMatrix};
use crate::sequence::ChoiceSequence;
use crate::Tolerances;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_strict(rng: &mut ChaCha8Rng, rows: usize, cols: usize, max_norm: f64) -> ComplexMatrix {
    let a = random_matrix(rng, rows, cols);
    let norm = operator_norm(&a);
    if norm == 0.0 {
        return a;
    }
    a * c(rng.gen_range(0.05..max_norm) / norm, 0.0)
}

/// Strict choice sequence Γ_0..Γ_len-1 over `dim_n × dim_m`.
pub fn random_sequence(rng: &mut ChaCha8Rng, dim_m: usize, dim_n: usize, len: usize) -> ChoiceSequence {
    // strict parameters have full-rank defects, so every Γ_k is dim_n × dim_m
    let gammas = (0..len).map(|_| random_strict(rng, dim_n, dim_m, 0.9)).collect();
    ChoiceSequence::new(dim_m, dim_n, gammas, Tolerances::default()).unwrap()
}
