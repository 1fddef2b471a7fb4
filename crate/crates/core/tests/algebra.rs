mod common;

use common::*;
use ndarray::Array2;
use proptest::prelude::*;
use ttinv_core::algebra::*;
use ttinv_core::{DenseTensor, TTTensor, C64};

fn dense_mode_product(a: &DenseTensor, u: &Array2<C64>, mode: usize) -> DenseTensor {
    let mut shape = a.shape().to_vec();
    let k = mode - 1;
    shape[k] = u.nrows();
    DenseTensor::from_fn(shape, |idx| {
        let mut src = idx.to_vec();
        (0..a.shape()[k])
            .map(|j| {
                src[k] = j;
                u[[idx[k], j]] * a.at(&src)
            })
            .sum()
    })
    .unwrap()
}

#[test]
fn add_negation_is_zero_with_doubled_ranks() {
    let a = random_tt(&[3, 4, 3], &[1, 2, 2, 1], 1);
    let z = add(&a, &scale(&a, c(-1.0, 0.0))).unwrap();
    assert_eq!(z.ranks(), vec![1, 4, 4, 1]);
    assert!(z.to_dense().unwrap().frobenius_norm() <= 1e-12 * a.frobenius_norm());
}

#[test]
fn add_rank_law_and_dense_oracle() {
    let a = random_tt(&[3, 4, 3], &[1, 2, 2, 1], 2);
    let b = random_tt(&[3, 4, 3], &[1, 3, 3, 1], 3);
    let s = add(&a, &b).unwrap();
    assert_eq!(s.ranks(), vec![1, 5, 5, 1]);
    let expect = a.to_dense().unwrap().zip_with(&b.to_dense().unwrap(), |x, y| x + y).unwrap();
    assert!(max_dev(&s.to_dense().unwrap(), &expect) <= 1e-12);
}

#[test]
fn shape_mismatch_is_argument_error() {
    let a = random_tt(&[3, 4], &[1, 2, 1], 2);
    let b = random_tt(&[3, 3], &[1, 2, 1], 3);
    assert!(add(&a, &b).is_err());
    assert!(hadamard(&a, &b).is_err());
    assert!(inner(&a, &b).is_err());
    let c3 = random_tt(&[3, 3, 3], &[1, 2, 2, 1], 3);
    assert!(kronecker(&a, &c3).is_err());
}

#[test]
fn scale_cases() {
    let a = random_tt(&[2, 3, 2], &[1, 2, 2, 1], 4);
    assert_eq!(scale(&a, c(1.0, 0.0)), a);
    assert_eq!(scale(&a, c(0.0, 0.0)).to_dense().unwrap().max_abs(), 0.0);
    let s = c(2.0, 1.0);
    let got = scale(&a, s).to_dense().unwrap();
    let expect = a.to_dense().unwrap().map(|z| z * s);
    assert!(max_dev(&got, &expect) <= 1e-15);
    assert_eq!(scale(&a, s).ranks(), a.ranks());
}

#[test]
fn hadamard_rank_law_and_oracle() {
    let a = random_tt(&[3, 4, 3], &[1, 2, 2, 1], 5);
    let b = random_tt(&[3, 4, 3], &[1, 3, 3, 1], 6);
    let h = hadamard(&a, &b).unwrap();
    assert_eq!(h.ranks(), vec![1, 6, 6, 1]);
    let expect = a.to_dense().unwrap().zip_with(&b.to_dense().unwrap(), |x, y| x * y).unwrap();
    assert!(max_dev(&h.to_dense().unwrap(), &expect) <= 1e-12);
    let ones = TTTensor::ones(&[3, 4, 3]).unwrap();
    assert!(max_dev(&hadamard(&a, &ones).unwrap().to_dense().unwrap(), &a.to_dense().unwrap()) <= 1e-15);
}

#[test]
fn kronecker_cases() {
    let a = random_tt(&[2, 3], &[1, 2, 1], 7);
    let unit = TTTensor::ones(&[1, 1]).unwrap();
    assert!(max_dev(&kronecker(&a, &unit).unwrap().to_dense().unwrap(), &a.to_dense().unwrap()) == 0.0);
    let o = kronecker(&TTTensor::ones(&[2, 2]).unwrap(), &TTTensor::ones(&[3, 3]).unwrap()).unwrap();
    assert_eq!(o.mode_sizes(), vec![6, 6]);
    assert!(o.to_dense().unwrap().data().iter().all(|&z| z == c(1.0, 0.0)));

    let b = random_tt(&[4, 2], &[1, 3, 1], 8);
    let k = kronecker(&a, &b).unwrap();
    assert_eq!(k.ranks(), vec![1, 6, 1]);
    let (da, db) = (a.to_dense().unwrap(), b.to_dense().unwrap());
    let expect = DenseTensor::from_fn(vec![8, 6], |s| {
        let (i1, j1) = (s[0] % 2, s[0] / 2);
        let (i2, j2) = (s[1] % 3, s[1] / 3);
        da.at(&[i1, i2]) * db.at(&[j1, j2])
    })
    .unwrap();
    assert!(max_dev(&k.to_dense().unwrap(), &expect) <= 1e-12);
}

#[test]
fn mode_products() {
    let a = random_tt(&[3, 4, 2], &[1, 2, 2, 1], 9);
    let id = ttinv_core::linalg::identity(4);
    assert!(max_dev(&mode_k_product(&a, &id.view(), 2).unwrap().to_dense().unwrap(), &a.to_dense().unwrap()) == 0.0);
    let u = random_matrix(5, 4, 10);
    let got = mode_k_product(&a, &u.view(), 2).unwrap();
    assert_eq!(got.mode_sizes(), vec![3, 5, 2]);
    assert!(max_dev(&got.to_dense().unwrap(), &dense_mode_product(&a.to_dense().unwrap(), &u, 2)) <= 1e-12);
    assert!(mode_k_product(&a, &u.view(), 1).is_err());
    assert!(mode_k_product(&a, &u.view(), 4).is_err());

    let v = random_tt(&[4], &[1, 1], 11);
    let m = random_matrix(3, 4, 12);
    let mv = mode_k_product(&v, &m.view(), 1).unwrap().to_dense().unwrap();
    let vd = ndarray::Array1::from(v.to_dense().unwrap().data().to_vec());
    let expect = m.dot(&vd);
    for i in 0..3 {
        assert!((mv.at(&[i]) - expect[i]).norm() < 1e-13);
    }
}

#[test]
fn ttmc_cases() {
    let a = random_tt(&[3, 4, 2], &[1, 2, 2, 1], 13);
    assert_eq!(ttmc(&a, &[]).unwrap(), a);
    let ids = vec![(ttinv_core::linalg::identity(3), 1), (ttinv_core::linalg::identity(2), 3)];
    assert!(max_dev(&ttmc(&a, &ids).unwrap().to_dense().unwrap(), &a.to_dense().unwrap()) == 0.0);
    let u1 = random_matrix(2, 3, 14);
    let u3 = random_matrix(5, 2, 15);
    let x = ttmc(&a, &[(u1.clone(), 1), (u3.clone(), 3)]).unwrap().to_dense().unwrap();
    let y = ttmc(&a, &[(u3.clone(), 3), (u1.clone(), 1)]).unwrap().to_dense().unwrap();
    assert!(max_dev(&x, &y) <= 1e-12);
    assert!(ttmc(&a, &[(u1.clone(), 1), (u1, 1)]).is_err());
}

#[test]
fn ttmc_with_unitary_factors_preserves_norm() {
    let a = random_tt(&[4, 4, 4], &[1, 3, 3, 1], 16);
    let (q1, _) = ttinv_core::linalg::qr_thin(&random_matrix(4, 4, 17).view()).unwrap();
    let (q2, _) = ttinv_core::linalg::qr_thin(&random_matrix(4, 4, 18).view()).unwrap();
    let b = ttmc(&a, &[(q1, 1), (q2, 3)]).unwrap();
    assert!((b.frobenius_norm() - a.frobenius_norm()).abs() <= 1e-12 * a.frobenius_norm());
}

#[test]
fn inner_matches_dense() {
    let a = random_tt(&[3, 2, 3], &[1, 2, 2, 1], 19);
    let b = random_tt(&[3, 2, 3], &[1, 3, 2, 1], 20);
    let got = inner(&a, &b).unwrap();
    let expect: C64 = a.to_dense().unwrap().data().iter().zip(b.to_dense().unwrap().data()).map(|(x, y)| x.conj() * y).sum();
    assert!((got - expect).norm() <= 1e-12 * expect.norm().max(1.0));
}

#[test]
fn round_duplicate_content_recovers_ranks() {
    let a = random_tt(&[3, 4, 3], &[1, 2, 2, 1], 21);
    let r = round(&add(&a, &scale(&a, c(1.0, 0.0))).unwrap(), 1e-12, None).unwrap();
    assert_eq!(r.ranks(), vec![1, 2, 2, 1]);
    let expect = a.to_dense().unwrap().map(|z| z * 2.0);
    assert!(rel_dev(&r.to_dense().unwrap(), &expect) <= 1e-12);
}

#[test]
fn round_drops_small_perturbation() {
    let a = random_tt(&[3, 3, 3, 3], &[1, 1, 1, 1, 1], 22);
    let p = scale(&random_tt(&[3, 3, 3, 3], &[1, 2, 2, 2, 1], 23), c(1e-9 * a.frobenius_norm(), 0.0));
    let r = round(&add(&a, &p).unwrap(), 1e-6, None).unwrap();
    assert_eq!(r.ranks(), vec![1; 5]);
}

#[test]
fn round_zero_gives_canonical_zero() {
    let a = random_tt(&[2, 2, 2], &[1, 2, 2, 1], 24);
    let z = round(&add(&scale(&a, c(0.0, 0.0)), &scale(&a, c(0.0, 0.0))).unwrap(), 1e-8, None).unwrap();
    assert_eq!(z.ranks(), vec![1; 4]);
    assert_eq!(z.frobenius_norm(), 0.0);
}

#[test]
fn round_cap_is_reported() {
    let a = random_tt(&[4, 4, 4], &[1, 4, 4, 1], 25);
    let (r, hit) = round_with_report(&a, 1e-12, Some(2)).unwrap();
    assert!(hit);
    assert!(r.max_rank() <= 2);
    let (_, hit) = round_with_report(&a, 1e-12, Some(10)).unwrap();
    assert!(!hit);
    assert!(round(&a, -1.0, None).is_err());
}

#[test]
fn round_random_trials_meet_contract() {
    for trial in 0..200u64 {
        let eps = if trial % 2 == 0 { 1e-2 } else { 1e-6 };
        let tail = c(10f64.powf(-((trial % 7) as f64 + 1.0)), 0.0);
        let a = add(&random_tt(&[5, 4, 5, 4], &[1, 3, 4, 3, 1], trial), &scale(&random_tt(&[5, 4, 5, 4], &[1, 2, 3, 2, 1], 1000 + trial), tail)).unwrap();
        let r = round(&a, eps, None).unwrap();
        let da = a.to_dense().unwrap();
        assert!(rel_dev(&r.to_dense().unwrap(), &da) <= eps, "trial {trial}");
        assert!(r.ranks().iter().zip(a.ranks()).all(|(x, y)| *x <= y));
    }
}

#[test]
fn hadamard_round_matches_round_of_product() {
    for (ra, rb) in [(3, 4), (12, 12)] {
        let a = random_tt(&[6, 6, 6, 6], &[1, ra, ra, ra, 1], 26);
        let b = random_tt(&[6, 6, 6, 6], &[1, rb, rb, rb, 1], 27);
        let (h, _) = hadamard_round(&a, &b, 1e-8, None, 7).unwrap();
        let expect = a.to_dense().unwrap().zip_with(&b.to_dense().unwrap(), |x, y| x * y).unwrap();
        assert!(rel_dev(&h.to_dense().unwrap(), &expect) <= 1e-7, "ranks {ra} {rb}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn prop_rank_growth_laws(r1 in 1usize..4, r2 in 1usize..4, s1 in 1usize..4, s2 in 1usize..4, seed in 0u64..10_000) {
        let a = random_tt(&[3, 2, 3], &[1, r1, r2, 1], seed);
        let b = random_tt(&[3, 2, 3], &[1, s1, s2, 1], seed + 1);
        prop_assert_eq!(add(&a, &b).unwrap().ranks(), vec![1, r1 + s1, r2 + s2, 1]);
        prop_assert_eq!(hadamard(&a, &b).unwrap().ranks(), vec![1, r1 * s1, r2 * s2, 1]);
        prop_assert_eq!(kronecker(&a, &b).unwrap().ranks(), vec![1, r1 * s1, r2 * s2, 1]);
    }

    #[test]
    fn prop_round_contract(eps in prop::sample::select(vec![1e-1, 1e-2, 1e-4, 1e-8]), seed in 0u64..10_000) {
        let a = random_tt(&[3, 3, 3, 3], &[1, 3, 4, 3, 1], seed);
        let r = round(&a, eps, None).unwrap();
        prop_assert!(rel_dev(&r.to_dense().unwrap(), &a.to_dense().unwrap()) <= eps);
        prop_assert!(r.ranks().iter().zip(a.ranks()).all(|(x, y)| *x <= y));
    }

    #[test]
    fn prop_binary_ops_match_dense(seed in 0u64..10_000) {
        let a = random_tt(&[2, 3, 2], &[1, 2, 3, 1], seed);
        let b = random_tt(&[2, 3, 2], &[1, 3, 2, 1], seed + 7);
        let (da, db) = (a.to_dense().unwrap(), b.to_dense().unwrap());
        let m = da.max_abs().max(db.max_abs());
        let sum = da.zip_with(&db, |x, y| x + y).unwrap();
        let prod = da.zip_with(&db, |x, y| x * y).unwrap();
        prop_assert!(max_dev(&add(&a, &b).unwrap().to_dense().unwrap(), &sum) <= 1e-12 * m);
        prop_assert!(max_dev(&hadamard(&a, &b).unwrap().to_dense().unwrap(), &prod) <= 1e-12 * m * m);
    }
}
