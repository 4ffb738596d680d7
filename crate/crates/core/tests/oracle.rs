mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use respval::solver::{
    decompose, exact_value, gamma_sweep, interior_gamma_grid, propagation_matrix, truncated_value,
    value_via_propagation, SweepMethod,
};
use respval::ImpactVector;

#[test]
fn brute_force_agrees_with_exact_on_four_player() {
    let (a, iota, g) = four_player();
    let brute = brute_force_value(&a, &iota, g);
    assert!(max_abs_diff(&brute, &FOUR_PLAYER_EXACT) < 1e-13, "{brute:?}");
    let exact = exact_value(&a, &iota, g).unwrap();
    assert!(max_abs_diff(&exact.total, &FOUR_PLAYER_EXACT) < 1e-13);
}

#[test]
fn brute_force_agrees_with_exact_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 2..=9 {
        for g in [0.15, 0.5, 0.85] {
            let a = random_matrix(&mut rng, n, 0.4);
            let iota = random_impacts(&mut rng, n, true);
            let brute = brute_force_value(&a, &iota, gamma(g));
            let exact = exact_value(&a, &iota, gamma(g)).unwrap();
            assert!(max_abs_diff(&brute, &exact.total) < 1e-11, "n={n} g={g}");
        }
    }
}

#[test]
fn series_at_depth_thirty_matches_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let a = random_matrix(&mut rng, 6, 0.3);
    let iota = random_impacts(&mut rng, 6, false);
    let g = gamma(0.5);
    let exact = exact_value(&a, &iota, g).unwrap();
    let series = truncated_value(&a, &iota, g, 30).unwrap();
    assert!(max_abs_diff(&exact.total, &series.total) <= 1e-8);
}

#[test]
fn two_paths_agree_at_depth_twelve() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_matrix(&mut rng, 5, 0.2);
    let iota = random_impacts(&mut rng, 5, true);
    let g = gamma(0.3);
    let v = truncated_value(&a, &iota, g, 12).unwrap();
    let p = value_via_propagation(&a, &iota, g, 12).unwrap();
    assert!(max_abs_diff(&v.total, &p.total) <= 1e-10);
}

#[test]
fn propagation_matrix_matches_naive_powers() {
    let (a, _, g) = four_player();
    let q = 5;
    let mut expected = vec![vec![0.0; 4]; 4];
    for k in 0..=q {
        let pk = naive_power(&a, k);
        let w = g.complement().powi(k as i32);
        for i in 0..4 {
            for j in 0..4 {
                expected[i][j] += w * pk[i][j];
            }
        }
    }
    let p = propagation_matrix(&a, g, q);
    for i in 0..4 {
        for j in 0..4 {
            assert!((p[(i, j)] - expected[i][j]).abs() < 1e-14);
        }
    }
}

#[test]
fn exact_is_efficient_on_eight_players() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = random_matrix(&mut rng, 8, 0.5);
    let iota = random_impacts(&mut rng, 8, true);
    let r = exact_value(&a, &iota, gamma(0.42)).unwrap();
    assert!((r.sum_total() - iota.total()).abs() <= 1e-10);
}

#[test]
fn four_player_decomposition() {
    let (a, iota, g) = four_player();
    let exact = exact_value(&a, &iota, g).unwrap();
    // exact indirect parts of the symmetric pair are 184/165
    assert!((exact.indirect[0] - 184.0 / 165.0).abs() < 1e-13);
    assert!((exact.indirect[2] - 184.0 / 165.0).abs() < 1e-13);
    assert!(exact.indirect[1].abs() < 1e-13);
    // the worked example's 1.104 is the depth-five truncation
    let t = truncated_value(&a, &iota, g, 5).unwrap();
    assert!((t.indirect[0] - 1.104).abs() < 1e-3);
    assert!((t.indirect[2] - 1.104).abs() < 1e-3);
    let (direct, indirect) = decompose(&[0.0; 4], &ImpactVector::zeros(players(4)), g);
    assert_eq!(direct, vec![0.0; 4]);
    assert_eq!(indirect, vec![0.0; 4]);
}

#[test]
fn four_player_sweep_rows_are_efficient() {
    let (a, iota, _) = four_player();
    let table = gamma_sweep(&a, &iota, &interior_gamma_grid(9).unwrap(), SweepMethod::Exact).unwrap();
    assert_eq!(table.rows.len(), 9);
    for row in &table.rows {
        assert!((row.sum_total() - 10.0).abs() <= 1e-9);
    }
}
