mod common;

use common::*;
use proptest::prelude::*;
use respval::io::{parse_instance_json, parse_report_json, write_instance_json, write_report_json,
    InstanceMetadata};
use respval::solver::{exact_value, truncated_value, truncation_error_bound, value_via_propagation};
use respval::{DenseMatrix, DiscountFactor, ImpactVector, RawWeightMatrix, RowStochasticMatrix,
    ZeroRowPolicy};

#[derive(Debug, Clone)]
struct Instance {
    a: RowStochasticMatrix,
    iota: ImpactVector,
    gamma: DiscountFactor,
}

/// Raw weights with roughly half the entries zeroed, normalized with
/// self-loop completion so zero columns and zero rows both occur.
fn instance(max_n: usize, signed: bool) -> impl Strategy<Value = Instance> {
    (2..=max_n).prop_flat_map(move |n| {
        let weight = prop_oneof![Just(0.0), 0.0..1.0f64];
        let lo = if signed { -10.0 } else { 0.0 };
        (
            prop::collection::vec(prop::collection::vec(weight, n), n),
            prop::collection::vec(lo..10.0f64, n),
            0.05..0.95f64,
        )
            .prop_map(move |(rows, impacts, g)| {
                let raw = RawWeightMatrix::new(players(n), DenseMatrix::from_rows(&rows).unwrap())
                    .unwrap();
                Instance {
                    a: RowStochasticMatrix::normalize(&raw, ZeroRowPolicy::SelfLoop).unwrap(),
                    iota: ImpactVector::new(players(n), impacts).unwrap(),
                    gamma: DiscountFactor::new(g).unwrap(),
                }
            })
    })
}

fn scale(x: &ImpactVector) -> f64 {
    x.abs_total().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rows_sum_to_one_after_normalization(inst in instance(10, true)) {
        let n = inst.a.dim() as f64;
        for row in inst.a.entries().rows() {
            let s: f64 = row.iter().sum();
            prop_assert!((s - 1.0).abs() <= 4.0 * n * f64::EPSILON);
        }
    }

    #[test]
    fn efficiency(inst in instance(12, true)) {
        let r = exact_value(&inst.a, &inst.iota, inst.gamma).unwrap();
        prop_assert!((r.sum_total() - inst.iota.total()).abs() <= 1e-9 * scale(&inst.iota));
    }

    #[test]
    fn truncated_mass_identity(inst in instance(10, true), q in 0usize..40) {
        let r = truncated_value(&inst.a, &inst.iota, inst.gamma, q).unwrap();
        let target = (1.0 - inst.gamma.complement().powi(q as i32 + 1)) * inst.iota.total();
        prop_assert!((r.sum_total() - target).abs() <= 1e-9 * scale(&inst.iota));
    }

    #[test]
    fn additivity_and_homogeneity(inst in instance(10, true), c in -5.0..5.0f64, q in 0usize..20) {
        let other = inst.iota.with_values(inst.iota.values().iter().rev().map(|v| v * 0.5 - 1.0).collect()).unwrap();
        let sum = inst.iota.try_add(&other).unwrap();
        let r1 = exact_value(&inst.a, &inst.iota, inst.gamma).unwrap();
        let r2 = exact_value(&inst.a, &other, inst.gamma).unwrap();
        let r12 = exact_value(&inst.a, &sum, inst.gamma).unwrap();
        for i in 0..inst.a.dim() {
            prop_assert!((r1.total[i] + r2.total[i] - r12.total[i]).abs() <= 1e-9);
        }
        let t1 = truncated_value(&inst.a, &inst.iota, inst.gamma, q).unwrap();
        let t2 = truncated_value(&inst.a, &other, inst.gamma, q).unwrap();
        let t12 = truncated_value(&inst.a, &sum, inst.gamma, q).unwrap();
        for i in 0..inst.a.dim() {
            prop_assert!((t1.total[i] + t2.total[i] - t12.total[i]).abs() <= 1e-9);
        }
        let rc = exact_value(&inst.a, &inst.iota.scaled(c).unwrap(), inst.gamma).unwrap();
        for i in 0..inst.a.dim() {
            prop_assert!((rc.total[i] - c * r1.total[i]).abs() <= 1e-9);
        }
    }

    #[test]
    fn independent_players_keep_direct_share(inst in instance(10, true), col in 0usize..10) {
        let a = with_zero_column(&inst.a, col % inst.a.dim());
        let independent = a.independent_players();
        prop_assert!(independent.contains(&(col % a.dim())));
        for k in 1..=6 {
            let p = naive_power(&a, k);
            for &i in &independent {
                prop_assert!(p.iter().all(|row| row[i] == 0.0));
            }
        }
        let r = exact_value(&a, &inst.iota, inst.gamma).unwrap();
        for &i in &independent {
            prop_assert!((r.total[i] - inst.gamma.value() * inst.iota.values()[i]).abs() <= 1e-9);
        }
    }

    #[test]
    fn symmetric_players_share_indirect(inst in instance(8, true)) {
        // force players 0 and 1 to be symmetric: equal rows, and equal
        // columns by averaging the two columns
        let n = inst.a.dim();
        let mut rows = inst.a.entries().to_rows();
        rows[1] = rows[0].clone();
        for row in rows.iter_mut() {
            let m = 0.5 * (row[0] + row[1]);
            row[0] = m;
            row[1] = m;
        }
        let a = RowStochasticMatrix::validate(DenseMatrix::from_rows(&rows).unwrap(), players(n), 1e-9).unwrap();
        let pairs = a.symmetric_pairs(0.0);
        prop_assert!(pairs.contains(&(0, 1)));
        // A^0 = I separates the pair, so the identity starts at k = 1
        for k in 1..=5usize {
            let p = naive_power(&a, k);
            let tol = (k * n) as f64 * f64::EPSILON * 4.0;
            for m in 0..n {
                prop_assert!((p[0][m] - p[1][m]).abs() <= tol);
                prop_assert!((p[m][0] - p[m][1]).abs() <= tol);
            }
        }
        let r = exact_value(&a, &inst.iota, inst.gamma).unwrap();
        for (i, j) in pairs {
            prop_assert!((r.indirect[i] - r.indirect[j]).abs() <= 1e-9);
        }
    }

    #[test]
    fn boundedness_and_monotone_truncation(inst in instance(10, false)) {
        let r = exact_value(&inst.a, &inst.iota, inst.gamma).unwrap();
        let total = inst.iota.total();
        for &t in &r.total {
            prop_assert!(t >= -1e-12 && t <= total + 1e-9 * scale(&inst.iota));
        }
        let mut previous = truncated_value(&inst.a, &inst.iota, inst.gamma, 0).unwrap().total;
        for q in 1..25 {
            let current = truncated_value(&inst.a, &inst.iota, inst.gamma, q).unwrap().total;
            for (c, p) in current.iter().zip(&previous) {
                prop_assert!(c >= p);
            }
            previous = current;
        }
    }

    #[test]
    fn error_bound_is_sound(inst in instance(10, true), q in 0usize..25) {
        let exact = exact_value(&inst.a, &inst.iota, inst.gamma).unwrap();
        let t = truncated_value(&inst.a, &inst.iota, inst.gamma, q).unwrap();
        let bound = truncation_error_bound(inst.gamma, inst.iota.abs_total(), q);
        let noise = 64.0 * f64::EPSILON * scale(&inst.iota);
        prop_assert!(max_abs_diff(&exact.total, &t.total) <= bound + noise);
    }

    #[test]
    fn two_paths_agree(inst in instance(20, true), q in 0usize..=50) {
        let v = truncated_value(&inst.a, &inst.iota, inst.gamma, q).unwrap();
        let p = value_via_propagation(&inst.a, &inst.iota, inst.gamma, q).unwrap();
        prop_assert!(max_abs_diff(&v.total, &p.total) <= 1e-10);
    }

    #[test]
    fn relabeling_permutes_everything(inst in instance(8, true), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let n = inst.a.dim();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let pa = inst.a.permuted(&perm);
        let pi = inst.iota.permuted(&perm);
        let mut inverse = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            inverse[p] = k;
        }
        let mut ind: Vec<usize> = pa.independent_players().into_iter().map(|k| perm[k]).collect();
        ind.sort_unstable();
        prop_assert_eq!(ind, inst.a.independent_players());
        let mut pairs: Vec<(usize, usize)> = pa.symmetric_pairs(0.0).into_iter()
            .map(|(x, y)| (perm[x].min(perm[y]), perm[x].max(perm[y]))).collect();
        pairs.sort_unstable();
        prop_assert_eq!(pairs, inst.a.symmetric_pairs(0.0));
        let r = exact_value(&inst.a, &inst.iota, inst.gamma).unwrap();
        let rp = exact_value(&pa, &pi, inst.gamma).unwrap();
        for i in 0..n {
            prop_assert!((rp.total[inverse[i]] - r.total[i]).abs() <= 1e-9);
            prop_assert!((rp.indirect[inverse[i]] - r.indirect[i]).abs() <= 1e-9);
        }
    }

    #[test]
    fn instance_json_round_trip(inst in instance(9, true)) {
        let meta = InstanceMetadata { name: Some("p".into()), period: Some("2024-Q1".into()), gamma: Some(inst.gamma) };
        let text = write_instance_json(&inst.a, &inst.iota, &meta);
        let back = parse_instance_json(&text).unwrap();
        let a = back.matrix.resolve(respval::graph::DEFAULT_ROW_TOLERANCE, ZeroRowPolicy::Reject).unwrap();
        prop_assert_eq!(a.players(), inst.a.players());
        for (x, y) in a.entries().rows().flatten().zip(inst.a.entries().rows().flatten()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in back.impacts.values().iter().zip(inst.iota.values()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
        prop_assert_eq!(back.metadata, meta);
    }

    #[test]
    fn report_json_round_trip(inst in instance(9, true), q in proptest::option::of(0usize..30)) {
        let r = match q {
            Some(q) => truncated_value(&inst.a, &inst.iota, inst.gamma, q).unwrap(),
            None => exact_value(&inst.a, &inst.iota, inst.gamma).unwrap(),
        };
        let back = parse_report_json(&write_report_json(&r)).unwrap();
        prop_assert_eq!(back, r);
    }
}
