#![allow(dead_code)]

use rai_core::stochastic::{RowStochasticMatrix, SubstochasticMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nonnegative rows with each entry present with probability `density`.
pub fn sparse_rows(rng: &mut impl Rng, n: usize, density: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..n).map(|_| if rng.gen_bool(density) { rng.gen_range(0.1..1.0) } else { 0.0 }).collect())
        .collect()
}

/// Row-stochastic matrix; empty rows become self-loops.
pub fn stochastic(rng: &mut impl Rng, n: usize, density: f64) -> RowStochasticMatrix {
    let mut rows = sparse_rows(rng, n, density);
    for (i, row) in rows.iter_mut().enumerate() {
        let s: f64 = row.iter().sum();
        if s == 0.0 {
            row[i] = 1.0;
        } else {
            row.iter_mut().for_each(|v| *v /= s);
        }
    }
    RowStochasticMatrix::from_rows(rows).unwrap()
}

/// Primitive matrix: positive diagonal on top of a ring.
pub fn primitive(rng: &mut impl Rng, n: usize) -> RowStochasticMatrix {
    let mut rows = sparse_rows(rng, n, 0.4);
    for i in 0..n {
        rows[i][i] += 0.5;
        rows[i][(i + n - 1) % n] += 0.3;
        let s: f64 = rows[i].iter().sum();
        rows[i].iter_mut().for_each(|v| *v /= s);
    }
    RowStochasticMatrix::from_rows(rows).unwrap()
}

/// Substochastic matrix where each row is scaled down with probability `leak`.
pub fn substochastic(rng: &mut impl Rng, n: usize, density: f64, leak: f64) -> SubstochasticMatrix {
    let w = stochastic(rng, n, density);
    let rows = (0..n)
        .map(|i| {
            let f = if rng.gen_bool(leak) { rng.gen_range(0.2..0.9) } else { 1.0 };
            w.matrix().row(i).iter().map(|v| v * f).collect()
        })
        .collect();
    SubstochasticMatrix::from_rows(rows).unwrap()
}

pub fn uniform_vec(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Consistent square system `A x = b` whose row-normalized `A` has condition number at most `kappa`.
pub fn conditioned_system(rng: &mut impl Rng, d: usize, kappa: f64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    loop {
        let a: Vec<Vec<f64>> = (0..d).map(|_| uniform_vec(rng, d, -1.0, 1.0)).collect();
        let normed = nalgebra::DMatrix::from_fn(d, d, |i, j| a[i][j] / a[i].iter().map(|v| v * v).sum::<f64>().sqrt());
        let sv = normed.singular_values();
        if sv.max() / sv.min() > kappa {
            continue;
        }
        let x = uniform_vec(rng, d, -1.0, 1.0);
        let b = a.iter().map(|r| r.iter().zip(&x).map(|(u, v)| u * v).sum()).collect();
        return (a, x, b);
    }
}
