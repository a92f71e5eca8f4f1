#![allow(dead_code)]

use kaczlab::linalg::{normalize_rows, DenseMatrix, LinearSystem};
use kaczlab::rng;
use proptest::prelude::*;
use rand::Rng as _;
use rand_distr::StandardNormal;

pub fn gaussian_vec(seed: u64, stream: u64, n: usize) -> Vec<f64> {
    let mut rng = rng::split(seed, stream);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Consistent system with unit rows; `rank < min(m, n)` gives a rank-deficient matrix.
pub fn random_system(m: usize, n: usize, rank: usize, seed: u64) -> LinearSystem {
    let left = gaussian_vec(seed, 0, m * rank);
    let right = gaussian_vec(seed, 1, rank * n);
    let mut data = vec![0.0; m * n];
    for i in 0..m {
        for t in 0..rank {
            for j in 0..n {
                data[i * n + j] += left[i * rank + t] * right[t * n + j];
            }
        }
    }
    let a = DenseMatrix::new(m, n, data).unwrap();
    let x = gaussian_vec(seed, 2, n);
    let b = a.matvec(&x);
    normalize_rows(&LinearSystem::new(a, b).unwrap()).unwrap().0
}

/// `(m, n, rank, seed)` with `rank ≤ min(m, n)`.
pub fn system_shape() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (2usize..9, 1usize..7, any::<u64>()).prop_flat_map(|(m, n, seed)| {
        (Just(m), Just(n), 1..=m.min(n), Just(seed))
    })
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
