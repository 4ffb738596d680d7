//! Shared fixtures and the brute-force oracle for integration tests.
#![allow(dead_code)]

use rand::Rng;
use respval::{DenseMatrix, DiscountFactor, ImpactVector, PlayerSet, RowStochasticMatrix};

pub fn players(n: usize) -> PlayerSet {
    PlayerSet::numbered(n).unwrap()
}

pub fn matrix(rows: &[Vec<f64>]) -> RowStochasticMatrix {
    RowStochasticMatrix::validate(DenseMatrix::from_rows(rows).unwrap(), players(rows.len()), 1e-9)
        .unwrap()
}

pub fn gamma(g: f64) -> DiscountFactor {
    DiscountFactor::new(g).unwrap()
}

pub fn four_player() -> (RowStochasticMatrix, ImpactVector, DiscountFactor) {
    let a = matrix(&[
        vec![0.1, 0.0, 0.1, 0.8],
        vec![0.2, 0.0, 0.2, 0.6],
        vec![0.1, 0.0, 0.1, 0.8],
        vec![0.5, 0.0, 0.5, 0.0],
    ]);
    let iota = ImpactVector::new(players(4), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    (a, iota, gamma(0.6))
}

pub fn two_player() -> (RowStochasticMatrix, ImpactVector) {
    let a = matrix(&[vec![0.0, 1.0], vec![0.0, 1.0]]);
    let iota = ImpactVector::new(players(2), vec![1.0, 0.0]).unwrap();
    (a, iota)
}

/// Exact four-player value at γ = 0.6, hand-solved: (283, 198, 481, 688) / 165.
pub const FOUR_PLAYER_EXACT: [f64; 4] = [283.0 / 165.0, 198.0 / 165.0, 481.0 / 165.0, 688.0 / 165.0];

/// Random row-stochastic matrix; each entry is zeroed with probability
/// `sparsity`, and every row keeps at least one positive entry.
pub fn random_matrix<R: Rng>(rng: &mut R, n: usize, sparsity: f64) -> RowStochasticMatrix {
    let mut rows = vec![vec![0.0; n]; n];
    for row in rows.iter_mut() {
        for x in row.iter_mut() {
            if !rng.gen_bool(sparsity) {
                *x = rng.gen_range(0.01..1.0);
            }
        }
        if row.iter().all(|&x| x == 0.0) {
            row[rng.gen_range(0..n)] = 1.0;
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }
    RowStochasticMatrix::validate(DenseMatrix::from_rows(&rows).unwrap(), players(n), 1e-9).unwrap()
}

/// Copy of `a` with column `col` zeroed and the removed mass moved to the
/// next column of each row.
pub fn with_zero_column(a: &RowStochasticMatrix, col: usize) -> RowStochasticMatrix {
    let n = a.dim();
    assert!(n >= 2);
    let target = (col + 1) % n;
    let mut rows = a.entries().to_rows();
    for row in rows.iter_mut() {
        row[target] += row[col];
        row[col] = 0.0;
    }
    RowStochasticMatrix::validate(DenseMatrix::from_rows(&rows).unwrap(), a.players().clone(), 1e-9)
        .unwrap()
}

pub fn random_impacts<R: Rng>(rng: &mut R, n: usize, signed: bool) -> ImpactVector {
    let lo = if signed { -10.0 } else { 0.0 };
    ImpactVector::new(players(n), (0..n).map(|_| rng.gen_range(lo..10.0)).collect()).unwrap()
}

/// Explicit `A^k` by triple loops, independent of the library's products.
pub fn naive_power(a: &RowStochasticMatrix, k: usize) -> Vec<Vec<f64>> {
    let n = a.dim();
    let mut p: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..k {
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for m in 0..n {
                    s += p[i][m] * a.get(m, j);
                }
                next[i][j] = s;
            }
        }
        p = next;
    }
    p
}

/// The defining series summed term by term from explicit matrix powers
/// until the remaining geometric tail is below `1e-17·Σ|ι|`.
pub fn brute_force_value(a: &RowStochasticMatrix, iota: &ImpactVector, g: DiscountFactor) -> Vec<f64> {
    let n = a.dim();
    let r = g.complement();
    let mut terms = 0;
    while r.powi(terms + 1) > 1e-17 {
        terms += 1;
    }
    let mut power: Vec<Vec<f64>> = naive_power(a, 0);
    let mut rho = vec![0.0; n];
    let mut weight = g.value();
    for _ in 0..=terms {
        for i in 0..n {
            let s: f64 = (0..n).map(|p| power[p][i] * iota.values()[p]).sum();
            rho[i] += weight * s;
        }
        weight *= r;
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                next[i][j] = (0..n).map(|m| power[i][m] * a.get(m, j)).sum();
            }
        }
        power = next;
    }
    rho
}

pub fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}
