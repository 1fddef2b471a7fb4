#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ttinv_core::{DenseTensor, TTTensor, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn random_tt(modes: &[usize], ranks: &[usize], seed: u64) -> TTTensor {
    TTTensor::random(modes, ranks, &mut rng(seed)).unwrap()
}

pub fn random_dense(shape: &[usize], seed: u64) -> DenseTensor {
    let mut r = rng(seed);
    DenseTensor::from_fn(shape.to_vec(), |_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<C64> {
    let mut r = rng(seed);
    Array2::from_shape_fn((rows, cols), |_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

/// Entry-by-entry contraction, independent of `to_dense`.
pub fn brute_dense(t: &TTTensor) -> DenseTensor {
    DenseTensor::from_fn(t.mode_sizes(), |idx| {
        let mut row = vec![c(1.0, 0.0)];
        for (k, core) in t.cores().iter().enumerate() {
            let (_, _, r2) = core.dim();
            row = (0..r2).map(|b| row.iter().enumerate().map(|(a, &x)| x * core[[a, idx[k], b]]).sum()).collect();
        }
        row[0]
    })
    .unwrap()
}

pub fn max_dev(a: &DenseTensor, b: &DenseTensor) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn rel_dev(a: &DenseTensor, b: &DenseTensor) -> f64 {
    let num: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.data().iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Random TT whose entries all have magnitude in `[1, 2]`: a rank-one tensor
/// of unit-modulus phases times a positive rank-`r` perturbation of 1.5.
pub fn bounded_tt(modes: &[usize], rank: usize, seed: u64) -> TTTensor {
    use ttinv_core::algebra::{add, hadamard, scale};
    let mut r = rng(seed);
    let d = modes.len();
    let phases: Vec<ndarray::Array1<C64>> = modes
        .iter()
        .map(|&n| (0..n).map(|_| C64::from_polar(1.0, r.random_range(0.0..std::f64::consts::TAU))).collect())
        .collect();
    let phase = TTTensor::rank_one(&phases).unwrap();
    let mut ranks = vec![rank; d + 1];
    ranks[0] = 1;
    ranks[d] = 1;
    let pert = TTTensor::random(modes, &ranks, &mut r).unwrap();
    let m = pert.to_dense().unwrap().max_abs();
    let pert = scale(&pert, c(0.45 / m, 0.0));
    let base = TTTensor::constant(modes, c(1.5, 0.0)).unwrap();
    let mag = add(&base, &pert).unwrap();
    hadamard(&phase, &mag).unwrap()
}

/// Real TT with entries in `[1.05, 1.95]`.
pub fn positive_tt(modes: &[usize], rank: usize, seed: u64) -> TTTensor {
    use ttinv_core::algebra::{add, scale};
    let d = modes.len();
    let mut ranks = vec![rank; d + 1];
    ranks[0] = 1;
    ranks[d] = 1;
    let t = random_tt(modes, &ranks, seed);
    let re = TTTensor::new(t.cores().iter().map(|c| c.mapv(|z| C64::new(z.re, 0.0))).collect()).unwrap();
    let m = re.to_dense().unwrap().max_abs();
    add(&TTTensor::constant(modes, c(1.5, 0.0)).unwrap(), &scale(&re, c(0.45 / m, 0.0))).unwrap()
}
