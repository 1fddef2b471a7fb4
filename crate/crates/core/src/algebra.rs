//! Arithmetic on TT tensors and TT-rounding.

use ndarray::{s, Array2, Array3, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TtError};
use crate::linalg::{adjoint, qr_thin, svd_thin, truncation_rank, NOISE_FLOOR};
use crate::tt::{fold, right_orthogonalize, unfold_left, unfold_right, TTTensor};
use crate::C64;

fn same_modes(a: &TTTensor, b: &TTTensor) -> Result<()> {
    if a.mode_sizes() != b.mode_sizes() {
        return Err(TtError::Argument(format!(
            "mode sizes differ: {:?} vs {:?}",
            a.mode_sizes(),
            b.mode_sizes()
        )));
    }
    Ok(())
}

/// Elementwise sum. Interior ranks add.
pub fn add(a: &TTTensor, b: &TTTensor) -> Result<TTTensor> {
    same_modes(a, b)?;
    let d = a.order();
    if d == 1 {
        return TTTensor::new(vec![a.core(0) + b.core(0)]);
    }
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let (ra, n, ra2) = a.core(k).dim();
        let (rb, _, rb2) = b.core(k).dim();
        let core = if k == 0 {
            let mut c = Array3::zeros((1, n, ra2 + rb2));
            c.slice_mut(s![.., .., ..ra2]).assign(a.core(k));
            c.slice_mut(s![.., .., ra2..]).assign(b.core(k));
            c
        } else if k == d - 1 {
            let mut c = Array3::zeros((ra + rb, n, 1));
            c.slice_mut(s![..ra, .., ..]).assign(a.core(k));
            c.slice_mut(s![ra.., .., ..]).assign(b.core(k));
            c
        } else {
            let mut c = Array3::zeros((ra + rb, n, ra2 + rb2));
            c.slice_mut(s![..ra, .., ..ra2]).assign(a.core(k));
            c.slice_mut(s![ra.., .., ra2..]).assign(b.core(k));
            c
        };
        cores.push(core);
    }
    TTTensor::new(cores)
}

/// `a - b`.
pub fn sub(a: &TTTensor, b: &TTTensor) -> Result<TTTensor> {
    add(a, &scale(b, C64::new(-1.0, 0.0)))
}

/// Multiply by a scalar; absorbed into the first core.
pub fn scale(a: &TTTensor, s: C64) -> TTTensor {
    let mut cores = a.cores().to_vec();
    cores[0].mapv_inplace(|z| z * s);
    TTTensor::from_cores_unchecked(cores)
}

/// Elementwise product. Ranks multiply.
pub fn hadamard(a: &TTTensor, b: &TTTensor) -> Result<TTTensor> {
    same_modes(a, b)?;
    let cores = a
        .cores()
        .iter()
        .zip(b.cores())
        .map(|(ca, cb)| {
            let (ra, n, ra2) = ca.dim();
            let (rb, _, rb2) = cb.dim();
            let mut c = Array3::zeros((ra * rb, n, ra2 * rb2));
            for p in 0..ra {
                for q in 0..rb {
                    for i in 0..n {
                        for p2 in 0..ra2 {
                            let x = ca[[p, i, p2]];
                            for q2 in 0..rb2 {
                                c[[p * rb + q, i, p2 * rb2 + q2]] = x * cb[[q, i, q2]];
                            }
                        }
                    }
                }
            }
            c
        })
        .collect();
    TTTensor::new(cores)
}

/// Kronecker product. Mode k of the result has size `n_k * m_k`; the index of
/// `a` runs fastest, so entry `i + j*n_k` pairs `a(i)` with `b(j)`.
pub fn kronecker(a: &TTTensor, b: &TTTensor) -> Result<TTTensor> {
    if a.order() != b.order() {
        return Err(TtError::Argument("Kronecker product needs equal orders".into()));
    }
    let cores = a
        .cores()
        .iter()
        .zip(b.cores())
        .map(|(ca, cb)| {
            let (ra, n, ra2) = ca.dim();
            let (rb, m, rb2) = cb.dim();
            let mut c = Array3::zeros((ra * rb, n * m, ra2 * rb2));
            for p in 0..ra {
                for q in 0..rb {
                    for j in 0..m {
                        for i in 0..n {
                            for p2 in 0..ra2 {
                                let x = ca[[p, i, p2]];
                                for q2 in 0..rb2 {
                                    c[[p * rb + q, i + j * n, p2 * rb2 + q2]] = x * cb[[q, j, q2]];
                                }
                            }
                        }
                    }
                }
            }
            c
        })
        .collect();
    TTTensor::new(cores)
}

/// Apply `u` (m x n_k) along a 3-way core's middle index.
pub(crate) fn core_mode_product(core: &Array3<C64>, u: &ArrayView2<C64>) -> Array3<C64> {
    let (r, _, r2) = core.dim();
    let m = u.nrows();
    let mut out = Array3::zeros((r, m, r2));
    for a in 0..r {
        out.index_axis_mut(Axis(0), a).assign(&u.dot(&core.index_axis(Axis(0), a)));
    }
    out
}

/// Mode-k product `a x_k u` with a 1-based mode.
pub fn mode_k_product(a: &TTTensor, u: &ArrayView2<C64>, mode: usize) -> Result<TTTensor> {
    let d = a.order();
    if mode < 1 || mode > d {
        return Err(TtError::Argument(format!("mode {mode} outside 1..={d}")));
    }
    let k = mode - 1;
    if u.ncols() != a.core(k).dim().1 {
        return Err(TtError::Argument(format!(
            "factor has {} columns, mode {mode} has size {}",
            u.ncols(),
            a.core(k).dim().1
        )));
    }
    if u.nrows() == 0 {
        return Err(TtError::Argument("factor has no rows".into()));
    }
    let mut cores = a.cores().to_vec();
    cores[k] = core_mode_product(&cores[k], u);
    TTTensor::new(cores)
}

/// Chain of mode products with distinct 1-based modes.
pub fn ttmc(a: &TTTensor, factors: &[(Array2<C64>, usize)]) -> Result<TTTensor> {
    let mut seen = vec![false; a.order() + 1];
    for (_, mode) in factors {
        if *mode < 1 || *mode > a.order() {
            return Err(TtError::Argument(format!("mode {mode} outside 1..={}", a.order())));
        }
        if seen[*mode] {
            return Err(TtError::Argument(format!("mode {mode} appears twice")));
        }
        seen[*mode] = true;
    }
    let mut out = a.clone();
    for (u, mode) in factors {
        out = mode_k_product(&out, &u.view(), *mode)?;
    }
    Ok(out)
}

/// Inner product `sum conj(a) * b`.
pub fn inner(a: &TTTensor, b: &TTTensor) -> Result<C64> {
    same_modes(a, b)?;
    let mut env = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
    for (ca, cb) in a.cores().iter().zip(b.cores()) {
        let n = ca.dim().1;
        let mut next = Array2::zeros((ca.dim().2, cb.dim().2));
        for i in 0..n {
            let ai = ca.index_axis(Axis(1), i);
            let bi = cb.index_axis(Axis(1), i);
            next += &adjoint(&ai).dot(&env.dot(&bi));
        }
        env = next;
    }
    Ok(env[[0, 0]])
}

/// TT-rounding with relative accuracy `eps` and an optional rank cap.
pub fn round(a: &TTTensor, eps: f64, max_rank: Option<usize>) -> Result<TTTensor> {
    Ok(round_with_report(a, eps, max_rank)?.0)
}

/// TT-rounding; the flag reports whether `max_rank`, rather than `eps`, decided some rank.
pub fn round_with_report(a: &TTTensor, eps: f64, max_rank: Option<usize>) -> Result<(TTTensor, bool)> {
    if !(eps >= 0.0) {
        return Err(TtError::Argument("eps must be nonnegative".into()));
    }
    let d = a.order();
    let mut cores = a.cores().to_vec();
    let norm = right_orthogonalize(&mut cores)?;
    if !norm.is_finite() {
        return Err(TtError::NumericFailure("non-finite norm while rounding".into()));
    }
    if norm == 0.0 {
        return Ok((TTTensor::zeros(&a.mode_sizes())?, false));
    }
    if d == 1 {
        return Ok((TTTensor::new(cores)?, false));
    }
    let delta = (eps / ((d - 1) as f64).sqrt()).max(NOISE_FLOOR) * norm;
    let mut cap_hit = false;
    for k in 0..d - 1 {
        let (r, n, _) = cores[k].dim();
        let (u, sv, vt) = svd_thin(&unfold_left(&cores[k]).view())?;
        let (rk, capped) = truncation_rank(sv.as_slice().unwrap(), delta, max_rank);
        cap_hit |= capped;
        cores[k] = fold(u.slice(s![.., ..rk]).to_owned(), r, n, rk);
        let mut svt = vt.slice(s![..rk, ..]).to_owned();
        for (mut row, &sigma) in svt.rows_mut().into_iter().zip(sv.iter()) {
            row.mapv_inplace(|z| z * sigma);
        }
        let (_, n1, r3) = cores[k + 1].dim();
        cores[k + 1] = fold(svt.dot(&unfold_right(&cores[k + 1])), rk, n1, r3);
    }
    Ok((TTTensor::new(cores)?, cap_hit))
}

/// Extra sketch columns beyond the target rank.
const OVERSAMPLE: usize = 12;
/// Products whose exact ranks stay below this are formed explicitly.
const EXACT_RANK_LIMIT: usize = 96;
/// Left environments are cached when they hold fewer entries than this.
const CACHE_LIMIT: usize = 20_000_000;

/// `round(hadamard(a, b), eps, max_rank)` without forming the full-rank product.
///
/// Large products are compressed through a Gaussian TT sketch of the right
/// interfaces followed by a left-to-right QR pass; the sketch rank doubles
/// until it exceeds every rounded rank by a margin. Deterministic for a given seed.
pub fn hadamard_round(
    a: &TTTensor,
    b: &TTTensor,
    eps: f64,
    max_rank: Option<usize>,
    seed: u64,
) -> Result<(TTTensor, bool)> {
    same_modes(a, b)?;
    let d = a.order();
    let ra = a.ranks();
    let rb = b.ranks();
    let exact: Vec<usize> = ra.iter().zip(&rb).map(|(x, y)| x * y).collect();
    if d == 1 || exact.iter().all(|&r| r <= EXACT_RANK_LIMIT) {
        return round_with_report(&hadamard(a, b)?, eps, max_rank);
    }
    let modes = a.mode_sizes();
    let mut full = vec![1usize; d + 1];
    for k in 1..d {
        let left = modes[..k].iter().fold(1usize, |acc, &n| acc.saturating_mul(n));
        let right = modes[k..].iter().fold(1usize, |acc, &n| acc.saturating_mul(n));
        full[k] = exact[k].min(left).min(right);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut l = ra.iter().chain(&rb).cloned().max().unwrap_or(1) + OVERSAMPLE;
    loop {
        let ls: Vec<usize> = (0..=d).map(|k| if k == 0 || k == d { 1 } else { l.min(full[k]) }).collect();
        let omega = TTTensor::random(&modes, &ls, &mut rng)?;
        let y = sketch_product(a, b, &omega)?;
        let (z, cap_hit) = round_with_report(&y, eps, max_rank)?;
        let zr = z.ranks();
        let enough = (1..d).all(|k| ls[k] >= full[k] || zr[k] + OVERSAMPLE / 2 <= ls[k]);
        if enough || cap_hit {
            return Ok((z, cap_hit));
        }
        l *= 2;
    }
}

/// Projects `a ⊙ b` onto nested left bases obtained from `(a ⊙ b) * omega_{>k}`.
fn sketch_product(a: &TTTensor, b: &TTTensor, omega: &TTTensor) -> Result<TTTensor> {
    let d = a.order();
    let modes = a.mode_sizes();
    // Right interfaces W[k]: (ra_k, rb_k, l_k), k = 1..d.
    let mut w: Vec<Array3<C64>> = vec![Array3::zeros((0, 0, 0)); d + 1];
    w[d] = Array3::from_elem((1, 1, 1), C64::new(1.0, 0.0));
    for k in (1..d).rev() {
        let (ak, n, ak2) = a.core(k).dim();
        let (bk, _, bk2) = b.core(k).dim();
        let (lk, _, lk2) = omega.core(k).dim();
        let wm = w[k + 1].view().into_shape_with_order((ak2 * bk2, lk2))?;
        let mut acc = Array2::<C64>::zeros((ak, bk * lk));
        for i in 0..n {
            let om = omega.core(k).index_axis(Axis(1), i);
            let t1 = wm.dot(&om.t()).into_shape_with_order((ak2, bk2, lk))?;
            let t1p = t1.permuted_axes([1, 0, 2]).as_standard_layout().into_owned();
            let t2 = b
                .core(k)
                .index_axis(Axis(1), i)
                .dot(&t1p.into_shape_with_order((bk2, ak2 * lk))?)
                .into_shape_with_order((bk, ak2, lk))?;
            let t2p = t2.permuted_axes([1, 0, 2]).as_standard_layout().into_owned();
            let t3 = a.core(k).index_axis(Axis(1), i).dot(&t2p.into_shape_with_order((ak2, bk * lk))?);
            acc += &t3;
        }
        w[k] = acc.into_shape_with_order((ak, bk, lk))?;
        debug_assert_eq!(modes[k], n);
    }

    let mut cores = Vec::with_capacity(d);
    let mut env = Array3::from_elem((1, 1, 1), C64::new(1.0, 0.0));
    for k in 0..d {
        let (ak, n, ak2) = a.core(k).dim();
        let (bk, _, bk2) = b.core(k).dim();
        let s_dim = env.dim().0;
        // env permuted to (s, rb, ra) so A contracts as a single product.
        let envp = env
            .permuted_axes([0, 2, 1])
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((s_dim * bk, ak))?;
        let left_env = |i: usize| -> Result<Array2<C64>> {
            let p1 = envp.dot(&a.core(k).index_axis(Axis(1), i)).into_shape_with_order((s_dim, bk, ak2))?;
            let p1p = p1
                .permuted_axes([0, 2, 1])
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((s_dim * ak2, bk))?;
            Ok(p1p.dot(&b.core(k).index_axis(Axis(1), i)).into_shape_with_order((s_dim, ak2 * bk2))?)
        };
        if k == d - 1 {
            let mut core = Array3::zeros((s_dim, n, 1));
            for i in 0..n {
                let kk = left_env(i)?;
                core.slice_mut(s![.., i, 0]).assign(&kk.column(0));
            }
            cores.push(core);
            break;
        }
        let lk2 = w[k + 1].dim().2;
        let wm = w[k + 1].view().into_shape_with_order((ak2 * bk2, lk2))?;
        let cache = s_dim * n * ak2 * bk2 <= CACHE_LIMIT;
        let mut stored = Vec::new();
        let mut y = Array3::zeros((s_dim, n, lk2));
        for i in 0..n {
            let kk = left_env(i)?;
            y.slice_mut(s![.., i, ..]).assign(&kk.dot(&wm));
            if cache {
                stored.push(kk);
            }
        }
        let (q, _) = qr_thin(&y.into_shape_with_order((s_dim * n, lk2))?.view())?;
        let lnew = q.ncols();
        let q3 = q.into_shape_with_order((s_dim, n, lnew))?;
        let mut next = Array2::<C64>::zeros((lnew, ak2 * bk2));
        for i in 0..n {
            let kk = if cache { std::mem::take(&mut stored[i]) } else { left_env(i)? };
            next += &adjoint(&q3.index_axis(Axis(1), i)).dot(&kk);
        }
        env = next.into_shape_with_order((lnew, ak2, bk2))?;
        cores.push(q3);
    }
    TTTensor::new(cores)
}
