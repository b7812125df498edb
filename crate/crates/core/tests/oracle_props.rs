use hyh_core::oracle::{reference_cholesky, residual_fro, solve_right_upper, sym_low_rank_form};
use hyh_core::probgen::{gen_spd_factor, gen_update, GenConfig};
use hyh_core::{DenseMatrix, Error, SignedDiagonal, TriFactor};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cholesky_of_random_spd(seed in any::<u64>(), n in 1usize..=128) {
        let l = gen_spd_factor(&GenConfig::new(seed), n).unwrap();
        let h = l.gram();
        let c = reference_cholesky(&h).unwrap();
        prop_assert!(residual_fro(&c, &h).unwrap() <= 1e-12);
        prop_assert!(c.has_positive_diagonal());
    }

    #[test]
    fn right_upper_solve_round_trips(seed in any::<u64>(), rows in 0usize..10, k in 1usize..16) {
        let mix = |i: usize, j: usize| ((seed as usize ^ (i * 131 + j * 71)) % 19) as f64 / 9.0 - 1.0;
        let t = DenseMatrix::from_fn(k, k, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => mix(i, j),
            std::cmp::Ordering::Equal => 1.0 + mix(i, j).abs(),
            std::cmp::Ordering::Greater => 0.0,
        });
        let x = DenseMatrix::from_fn(rows, k, |i, j| mix(i + 40, j));
        let w = solve_right_upper(&x, &t).unwrap();
        let back = w.matmul(&t).unwrap();
        prop_assert!(back.sub(&x).unwrap().fro_norm() <= 1e-12 * (1.0 + x.fro_norm()));
    }

    #[test]
    fn low_rank_form_is_exactly_symmetric(seed in any::<u64>(), n in 1usize..24, m in 0usize..6) {
        let cfg = GenConfig::new(seed);
        let l = gen_spd_factor(&cfg, n).unwrap();
        let signs: Vec<f64> = (0..m).map(|p| if p % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let (a, sigma) = gen_update(&cfg, &l, &signs).unwrap();
        let h = sym_low_rank_form(&l, &a, &sigma).unwrap();
        prop_assert_eq!(&h, &h.transpose());
    }
}

#[test]
fn documented_examples() {
    let h = DenseMatrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
    let l = reference_cholesky(&h).unwrap();
    assert_eq!(l.get(0, 0), 2.0);
    assert_eq!(l.get(1, 0), 1.0);
    assert!((l.get(1, 1) - 2f64.sqrt()).abs() < 1e-15);

    let bad = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
    assert_eq!(reference_cholesky(&bad), Err(Error::NotPositiveDefinite { index: 1 }));

    let a = DenseMatrix::from_rows(&[[1.0], [1.0]]).unwrap();
    let ht = sym_low_rank_form(&l, &a, &SignedDiagonal::ones(1)).unwrap();
    let expect = DenseMatrix::from_rows(&[[5.0, 3.0], [3.0, 4.0]]).unwrap();
    assert!(ht.sub(&expect).unwrap().max_abs() < 1e-14);

    let x = DenseMatrix::from_rows(&[[2.0, 3.0]]).unwrap();
    let t = DenseMatrix::from_rows(&[[1.0, 1.0], [0.0, 2.0]]).unwrap();
    assert_eq!(solve_right_upper(&x, &t).unwrap(), DenseMatrix::from_rows(&[[2.0, 0.5]]).unwrap());

    let two = TriFactor::from_rows(&[[2.0]]).unwrap();
    let five = DenseMatrix::from_rows(&[[5.0]]).unwrap();
    assert!((residual_fro(&two, &five).unwrap() - 0.2).abs() < 1e-15);
}
