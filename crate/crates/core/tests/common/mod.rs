#![allow(dead_code)]

use lorank_core::linalg::DenseMatrix;
use lorank_core::rng::{stream, Purpose};
use lorank_oracle::Mat;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    // Synth streams are never used by the code under test with these seeds.
    stream(seed ^ 0x5eed_7e57, Purpose::Synth, 999)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Random matrix of rank at most `rank`.
pub fn low_rank_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, rank: usize) -> DenseMatrix {
    let a = random_matrix(rng, rows, rank);
    let b = random_matrix(rng, rank, cols);
    a.matmul(&b).unwrap()
}

pub fn to_mat(m: &DenseMatrix) -> Mat {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn binary_labels(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| if rng.random_bool(0.5) { 1.0 } else { 0.0 })
}

pub fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
