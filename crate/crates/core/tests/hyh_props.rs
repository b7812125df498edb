use hyh_core::hyh::{hyh_apply_block, hyh_update, hyh_update_block, reconstruct_q};
use hyh_core::oracle::{reference_cholesky, residual_fro, sym_low_rank_form};
use hyh_core::probgen::{gen_spd_factor, gen_update, GenConfig};
use hyh_core::{DenseMatrix, SignedDiagonal, TriFactor};
use proptest::prelude::*;

struct Case {
    l: TriFactor,
    a: DenseMatrix,
    sigma: SignedDiagonal,
}

/// Random PD-preserving update. `scale` spreads the weights away from ±1 while
/// keeping `AΣAᵀ` fixed.
fn case(seed: u64, n: usize, signs: &[bool], scale: f64) -> Case {
    let cfg = GenConfig::new(seed);
    let l = gen_spd_factor(&cfg, n).unwrap();
    let signs: Vec<f64> = signs.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect();
    let (mut a, mut sigma) = gen_update(&cfg, &l, &signs).unwrap();
    for (p, s) in sigma.entries_mut().iter_mut().enumerate() {
        let c = scale.powi(p as i32 % 3);
        *s *= c;
        for v in a.col_mut(p) {
            *v /= c.sqrt();
        }
    }
    Case { l, a, sigma }
}

fn aug(l: &TriFactor, a: &DenseMatrix) -> DenseMatrix {
    let (n, m) = (l.n(), a.cols());
    let mut out = DenseMatrix::zeros(n, n + m);
    out.set_block(0, 0, &l.to_lower_dense());
    out.set_block(0, n, a);
    out
}

fn block_sizes() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![1usize, 2, 3, 4, 8])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn update_reconstructs_and_matches_oracle(
        seed in any::<u64>(),
        n in 1usize..48,
        signs in prop::collection::vec(any::<bool>(), 0..12),
        r in block_sizes(),
        scale in 0.1f64..10.0,
    ) {
        let c = case(seed, n, &signs, scale);
        let h = sym_low_rank_form(&c.l, &c.a, &c.sigma).unwrap();
        let lt = hyh_update(&c.l, &c.a, &c.sigma, r).unwrap();
        prop_assert!(residual_fro(&lt, &h).unwrap() <= 1e-10);
        let reference = reference_cholesky(&h).unwrap();
        prop_assert!(lt.rel_max_diff(&reference) <= 1e-9);
        prop_assert!(lt.has_positive_diagonal());
    }

    #[test]
    fn block_size_does_not_matter(
        seed in any::<u64>(),
        n in 1usize..40,
        signs in prop::collection::vec(any::<bool>(), 1..10),
    ) {
        let c = case(seed, n, &signs, 1.0);
        let base = hyh_update(&c.l, &c.a, &c.sigma, 1).unwrap();
        for r in [2, 4, 8, 16] {
            let other = hyh_update(&c.l, &c.a, &c.sigma, r).unwrap();
            prop_assert!(other.rel_max_diff(&base) <= 1e-10, "r = {}", r);
        }
    }

    #[test]
    fn update_then_downdate_restores(
        seed in any::<u64>(),
        n in 1usize..32,
        signs in prop::collection::vec(any::<bool>(), 1..8),
        r in block_sizes(),
    ) {
        let c = case(seed, n, &signs, 1.0);
        let lt = hyh_update(&c.l, &c.a, &c.sigma, r).unwrap();
        let back = hyh_update(&lt, &c.a, &c.sigma.negated(), r).unwrap();
        prop_assert!(back.rel_max_diff(&c.l) <= 1e-8);
    }

    #[test]
    fn block_transformation_is_orthogonal_and_annihilates(
        seed in any::<u64>(),
        k in 1usize..33,
        signs in prop::collection::vec(any::<bool>(), 0..8),
        scale in 0.1f64..10.0,
    ) {
        let c = case(seed, k, &signs, scale);
        let before = aug(&c.l, &c.a);
        let mut l = c.l.clone();
        let mut a = c.a.clone();
        let w = hyh_update_block(&mut l, &mut a, &c.sigma).unwrap();
        let q = reconstruct_q(&w, &c.sigma).unwrap();

        let s = c.sigma.augmented(k);
        let mut qs = q.clone();
        for (j, sj) in s.entries().iter().enumerate() {
            for v in qs.col_mut(j) {
                *v *= sj;
            }
        }
        let mut gap = qs.matmul(&q.transpose()).unwrap();
        for (j, sj) in s.entries().iter().enumerate() {
            gap[(j, j)] -= sj;
        }
        prop_assert!(gap.fro_norm() <= 1e-11 * (1.0 + s.fro_norm()));

        let after = before.matmul(&q).unwrap();
        let target = aug(&l, &DenseMatrix::zeros(k, c.a.cols()));
        prop_assert!(after.sub(&target).unwrap().fro_norm() <= 1e-11 * before.fro_norm());
    }

    #[test]
    fn apply_block_matches_dense_transformation(
        seed in any::<u64>(),
        k in 1usize..12,
        rows in 0usize..20,
        signs in prop::collection::vec(any::<bool>(), 1..8),
    ) {
        let c = case(seed, k, &signs, 1.0);
        let mut l = c.l.clone();
        let mut a1 = c.a.clone();
        let w = hyh_update_block(&mut l, &mut a1, &c.sigma).unwrap();
        let q = reconstruct_q(&w, &c.sigma).unwrap();

        let m = c.a.cols();
        let f = |i: usize, j: usize| (((i * 31 + j * 17 + seed as usize % 97) % 23) as f64 - 11.0) / 7.0;
        let l21 = DenseMatrix::from_fn(rows, k, f);
        let a2 = DenseMatrix::from_fn(rows, m, |i, j| f(i + 5, j + 3));
        let mut stacked = DenseMatrix::zeros(rows, k + m);
        stacked.set_block(0, 0, &l21);
        stacked.set_block(0, k, &a2);
        let expect = stacked.matmul(&q).unwrap();

        let (mut l21, mut a2) = (l21, a2);
        hyh_apply_block(&mut l21, &mut a2, &c.sigma, &w).unwrap();
        let mut got = DenseMatrix::zeros(rows, k + m);
        got.set_block(0, 0, &l21);
        got.set_block(0, k, &a2);
        prop_assert!(got.sub(&expect).unwrap().fro_norm() <= 1e-11 * (1.0 + expect.fro_norm()));
    }
}

#[test]
fn wide_random_update_at_order_64() {
    let cfg = GenConfig::new(7);
    let l = gen_spd_factor(&cfg, 64).unwrap();
    let signs: Vec<f64> = (0..8).map(|p| if p % 3 == 0 { -1.0 } else { 1.0 }).collect();
    let (a, sigma) = gen_update(&cfg, &l, &signs).unwrap();
    let h = sym_low_rank_form(&l, &a, &sigma).unwrap();
    for r in [1, 2, 4, 8] {
        let lt = hyh_update(&l, &a, &sigma, r).unwrap();
        assert!(residual_fro(&lt, &h).unwrap() <= 1e-10, "r = {r}");
    }
}

#[test]
fn zero_weights_and_zero_columns_are_bitwise_no_ops() {
    let cfg = GenConfig::new(11);
    let l = gen_spd_factor(&cfg, 20).unwrap();
    let (a, _) = gen_update(&cfg, &l, &[1.0, -1.0, 1.0]).unwrap();
    for r in [1, 4, 8] {
        assert!(hyh_update(&l, &a, &SignedDiagonal::zeros(3), r).unwrap().lower_bits_eq(&l));
        let zero = DenseMatrix::zeros(20, 3);
        assert!(hyh_update(&l, &zero, &SignedDiagonal::ones(3), r).unwrap().lower_bits_eq(&l));
        let empty = DenseMatrix::zeros(20, 0);
        assert!(hyh_update(&l, &empty, &SignedDiagonal::ones(0), r).unwrap().lower_bits_eq(&l));
    }
}
