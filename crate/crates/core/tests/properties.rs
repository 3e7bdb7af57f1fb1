//! Randomized properties of masking, measures, reconstruction and TVD.

use proptest::prelude::*;

use mask_advisor::data::{joint, Column, MarginalDistribution};
use mask_advisor::evaluation::tvd;
use mask_advisor::masking::{
    aggregate_joint, inverse_image, masked_joint, masked_marginal, materialize_masked, GeneralizeRules, RangeRule,
};
use mask_advisor::reconstruction::{randomized_round, reconstruct, sampling_reconstruct, ConstraintSet};
use mask_advisor::utility::{chi_square, g3, mutual_information};
use mask_advisor::{
    AttributeDomain, Dataset, Error, IpfSettings, JointDistribution, MaskingConfiguration, MaskingFunction,
};

fn numeric_function() -> impl Strategy<Value = MaskingFunction> {
    prop_oneof![
        Just(MaskingFunction::Identity),
        Just(MaskingFunction::Suppress),
        (1u32..40, -5i32..5).prop_map(|(w, o)| MaskingFunction::Bucketize {
            width: w as f64,
            origin: o as f64
        }),
        (1u32..30).prop_map(|m| MaskingFunction::BlurNumeric { multiple: m as f64 }),
        (0usize..3).prop_map(|keep| MaskingFunction::BlurPrefix { keep }),
        (1i32..99).prop_map(|cut| MaskingFunction::Generalize(GeneralizeRules::Ranges(vec![
            RangeRule::new(None, Some(cut as f64), "low"),
            RangeRule::new(Some(cut as f64), None, "high"),
        ]))),
    ]
}

/// A dataset with two numeric attributes over 0..100 and a label with up to
/// four classes.
fn dataset(max_rows: usize) -> impl Strategy<Value = Dataset> {
    (1..=max_rows).prop_flat_map(|n| {
        (
            prop::collection::vec(0u32..100, n),
            prop::collection::vec(0u32..100, n),
            prop::collection::vec(0u32..4, n),
        )
            .prop_map(|(a, b, y)| {
                let col = |name: &str, v: &[u32], prefix: &str| {
                    let raw: Vec<String> = v.iter().map(|x| format!("{prefix}{x}")).collect();
                    Column::from_values(name, &raw).unwrap()
                };
                Dataset::from_columns(vec![col("A", &a, ""), col("B", &b, "")], col("Y", &y, "y")).unwrap()
            })
    })
}

fn table(max_rows: usize, max_cols: usize, max_cell: u32) -> impl Strategy<Value = JointDistribution> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(move |(r, c)| {
        prop::collection::vec(0..=max_cell, r * c)
            .prop_filter("needs mass", |v| v.iter().any(|&x| x > 0))
            .prop_map(move |cells| {
                let dom = |name: &str, n: usize| AttributeDomain::new(name, (0..n).map(|i| format!("{name}{i}")).collect()).unwrap();
                JointDistribution::new(dom("a", r), dom("y", c), cells.into_iter().map(f64::from).collect()).unwrap()
            })
    })
}

/// Random joint over domain 0..n, a bucketize mask, and whether to fit with the
/// joint's own histogram.
fn instance(max_a: usize, max_y: usize, max_n: u32) -> impl Strategy<Value = (JointDistribution, MaskingFunction, bool)> {
    (table(max_a, max_y, max_n), 1u32..8, any::<bool>()).prop_map(|(t, width, with_marginal)| {
        // Rows are named a0.. ; rename them to their index so bucketize applies.
        let rows = AttributeDomain::new("a", (0..t.n_rows()).map(|i| i.to_string()).collect()).unwrap();
        let t = JointDistribution::new(rows, t.col_domain().clone(), t.cells().to_vec()).unwrap();
        (t, MaskingFunction::Bucketize { width: width as f64, origin: 0.0 }, with_marginal)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn preimages_partition_the_domain(values in prop::collection::btree_set(0u32..100, 1..30), f in numeric_function()) {
        let dom = AttributeDomain::new("A", values.iter().map(|v| v.to_string()).collect()).unwrap();
        let inv = inverse_image(&f, &dom).unwrap();
        let mut seen = vec![0usize; dom.len()];
        for (g, pre) in inv.preimages().iter().enumerate() {
            prop_assert!(!pre.is_empty());
            for &i in pre {
                seen[i] += 1;
                prop_assert_eq!(inv.group_of(i), g);
                prop_assert_eq!(f.apply(dom.value(i)).unwrap(), inv.masked_domain().value(g));
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn masking_is_pure(v in 0u32..1000, f in numeric_function()) {
        let s = v.to_string();
        prop_assert_eq!(f.apply(&s).unwrap(), f.apply(&s).unwrap());
    }

    #[test]
    fn masked_joint_matches_row_by_row_masking(d in dataset(200), fa in numeric_function(), fb in numeric_function()) {
        let cfg = MaskingConfiguration::new("c", vec![("A".into(), fa.clone()), ("B".into(), fb.clone())]);
        let masked = materialize_masked(&d, &cfg).unwrap();
        for (name, f) in [("A", &fa), ("B", &fb)] {
            let fast = masked_joint(&d, name, f).unwrap();
            let slow = joint(&masked, name).unwrap();
            prop_assert_eq!(&fast, &slow);
            prop_assert_eq!(fast.total(), d.len() as f64);

            // Aggregation consistency.
            let inv = inverse_image(f, d.feature(name).unwrap().domain()).unwrap();
            let orig = joint(&d, name).unwrap();
            prop_assert_eq!(&aggregate_joint(&orig, &inv).unwrap(), &fast);
            let m = masked_marginal(&orig.row_marginal().unwrap(), &inv).unwrap();
            for (g, s) in fast.row_sums().into_iter().enumerate() {
                prop_assert_eq!(m.count(fast.row_domain().value(g)) as f64, s);
            }
        }
    }

    #[test]
    fn masking_never_increases_mutual_information(d in dataset(150), f in numeric_function()) {
        let orig = mutual_information(&joint(&d, "A").unwrap()).unwrap();
        let masked = mutual_information(&masked_joint(&d, "A", &f).unwrap()).unwrap();
        prop_assert!(masked <= orig + 1e-12, "{} > {}", masked, orig);
    }

    #[test]
    fn measures_ignore_label_and_row_order(t in table(6, 4, 20), seed in any::<u64>()) {
        // Reverse labels and rotate rows by a seed-dependent amount.
        let (r, c) = (t.n_rows(), t.n_cols());
        let shift = (seed as usize) % r;
        let mut cells = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                cells[((i + shift) % r) * c + (c - 1 - j)] = t.get(i, j);
            }
        }
        let p = t.with_cells(cells).unwrap();
        prop_assert!((mutual_information(&t).unwrap() - mutual_information(&p).unwrap()).abs() < 1e-12);
        prop_assert!((chi_square(&t).unwrap() - chi_square(&p).unwrap()).abs() < 1e-9);
        prop_assert_eq!(g3(&t).unwrap(), g3(&p).unwrap());
    }

    #[test]
    fn scaling_counts(t in table(6, 4, 20), c in 1u32..50) {
        let s = t.scaled(c as f64).unwrap();
        prop_assert!((mutual_information(&t).unwrap() - mutual_information(&s).unwrap()).abs() < 1e-9);
        prop_assert!((g3(&t).unwrap() - g3(&s).unwrap()).abs() < 1e-9);
        let (x, y) = (chi_square(&t).unwrap(), chi_square(&s).unwrap());
        prop_assert!((x * c as f64 - y).abs() <= 1e-9 * y.max(1.0));
    }

    #[test]
    fn tvd_is_a_metric(p in table(4, 3, 10), q in table(4, 3, 10), r in table(4, 3, 10)) {
        let d = |a: &JointDistribution, b: &JointDistribution| tvd(a, b).unwrap();
        prop_assert_eq!(d(&p, &p), 0.0);
        prop_assert!((d(&p, &q) - d(&q, &p)).abs() < 1e-15);
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-12);
        prop_assert!((0.0..=1.0).contains(&d(&p, &q)));
    }

    #[test]
    fn ipf_meets_its_constraints((t, f, with_marginal) in instance(20, 10, 500)) {
        let inv = inverse_image(&f, t.row_domain()).unwrap();
        let masked = aggregate_joint(&t, &inv).unwrap();
        let hist = t.row_marginal().unwrap();
        let c = ConstraintSet::new(&masked, &inv, with_marginal.then_some(&hist)).unwrap();
        let r = reconstruct(&c, &IpfSettings::default()).unwrap();
        let n = t.total();

        prop_assert!(r.converged);
        prop_assert!((r.fractional.total() - n).abs() <= 1e-9 * n);
        prop_assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        let back = aggregate_joint(&r.fractional, &inv).unwrap();
        for (x, y) in back.cells().iter().zip(masked.cells()) {
            prop_assert!((x - y).abs() <= 1e-9 * n);
        }
        if with_marginal {
            for (x, y) in r.fractional.row_sums().iter().zip(t.row_sums()) {
                prop_assert!((x - y).abs() <= 1e-9 * n);
            }
        } else {
            // Zero up to floating-point rounding of the block sums.
            prop_assert_eq!(r.iterations, 1);
            prop_assert!(r.residual <= 1e-12);
        }
        for (x, y) in r.integral.cells().iter().zip(r.fractional.cells()) {
            prop_assert!(*x == y.floor() || *x == y.ceil());
        }
    }

    #[test]
    fn sampling_preserves_blocks((t, f, _) in instance(12, 5, 50), seed in any::<u64>()) {
        let inv = inverse_image(&f, t.row_domain()).unwrap();
        let masked = aggregate_joint(&t, &inv).unwrap();
        let s = sampling_reconstruct(&masked, &inv, seed).unwrap();
        prop_assert_eq!(aggregate_joint(&s, &inv).unwrap(), masked);
    }

    #[test]
    fn rounding_picks_floor_or_ceiling(t in table(5, 4, 1000), seed in any::<u64>()) {
        let frac = t.scaled(0.37).unwrap();
        let r = randomized_round(&frac, seed).unwrap();
        for (x, y) in r.cells().iter().zip(frac.cells()) {
            prop_assert!(*x == y.floor() || *x == y.ceil());
        }
        prop_assert_eq!(r, randomized_round(&frac, seed).unwrap());
    }
}

/// Whether some non-negative integer matrix has the given row and column sums.
fn transport_exists(rows: &[u64], cols: &mut [u64]) -> bool {
    let Some((&first, rest)) = rows.split_first() else {
        return cols.iter().all(|&c| c == 0);
    };
    fn fill(row: u64, j: usize, cols: &mut [u64], rest: &[u64]) -> bool {
        if j == cols.len() {
            return row == 0 && transport_exists(rest, cols);
        }
        for take in 0..=row.min(cols[j]) {
            cols[j] -= take;
            let ok = fill(row - take, j + 1, cols, rest);
            cols[j] += take;
            if ok {
                return true;
            }
        }
        false
    }
    fill(first, 0, cols, rest)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn feasibility_check_matches_exhaustive_search(
        cells in prop::collection::vec(0u64..2, 4 * 3),
        moves in prop::collection::vec((0usize..4, 0usize..4), 0..3),
        width in 1u32..5,
    ) {
        let t = JointDistribution::new(
            AttributeDomain::new("A", (0..4).map(|i| i.to_string()).collect()).unwrap(),
            AttributeDomain::new("Y", vec!["p".into(), "q".into(), "r".into()]).unwrap(),
            cells.iter().map(|&c| c as f64).collect(),
        ).unwrap();
        prop_assume!(t.total() > 0.0);
        // Start from the true histogram and move a few units around; moves
        // across masked groups make it infeasible.
        let mut hist: Vec<u64> = t.row_sums().iter().map(|&x| x as u64).collect();
        for (from, to) in moves {
            if hist[from] > 0 {
                hist[from] -= 1;
                hist[to] += 1;
            }
        }
        let f = MaskingFunction::Bucketize { width: width as f64, origin: 0.0 };
        let inv = inverse_image(&f, t.row_domain()).unwrap();
        let masked = aggregate_joint(&t, &inv).unwrap();
        let m = MarginalDistribution::new(t.row_domain().clone(), hist.clone()).unwrap();

        let exists = inv.preimages().iter().enumerate().all(|(g, pre)| {
            let rows: Vec<u64> = pre.iter().map(|&a| hist[a]).collect();
            let mut cols: Vec<u64> = masked.row(g).iter().map(|&x| x as u64).collect();
            transport_exists(&rows, &mut cols)
        });
        match ConstraintSet::new(&masked, &inv, Some(&m)) {
            Ok(_) => prop_assert!(exists),
            Err(Error::Infeasible { .. }) => prop_assert!(!exists),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }
}
