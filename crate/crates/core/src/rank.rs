//! Disk-condition certificates for the singular-value decay of matricizations
//! of the Hadamard inverse, rank bounds, and a dense singular-value oracle.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{add, hadamard, scale};
use crate::error::{Result, TtError};
use crate::kron::SpectralFactorization;
use crate::linalg::singular_values;
use crate::tt::{TTTensor, DEFAULT_DENSE_CAP};
use crate::C64;

/// Default number of index tuples the exact search may cover.
pub const DEFAULT_BUDGET: u128 = 10_000_000;
const HEURISTIC_STARTS: usize = 20;
const HEURISTIC_SEED: u64 = 0x00c0_ffee;
const HEURISTIC_SWEEPS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionVariant {
    /// Disk around the leading block `1..=k`.
    Cond1,
    /// Disk around the trailing block `k+1..=d`.
    Cond2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    ExactEnumeration,
    SeparableBound,
    AlternatingHeuristic,
}

/// Requested strategy for the minimum of `C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodRequest {
    Exact,
    Heuristic,
    /// Box lower bound on the minimum; sound but possibly pessimistic.
    Bound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskCertificate {
    pub split_k: usize,
    pub order: usize,
    pub center: C64,
    pub radius: f64,
    pub gap: f64,
    /// `D / (D + D')`; absent when the condition was not verified.
    pub decay_q: Option<f64>,
    pub uncertified: bool,
    pub tau: Option<f64>,
    pub rank_bound: Option<usize>,
    /// Matricization size used inside the rank bound.
    pub rank_bound_n: Option<usize>,
    pub condition_variant: ConditionVariant,
    pub min_c: f64,
    pub method: SearchMethod,
    pub sound: bool,
}

/// Per-block extremes of the real and imaginary parts of the ratio sums.
fn block_extremes(ratios: &[Vec<C64>]) -> (f64, f64, f64, f64) {
    let mut out = (0.0, 0.0, 0.0, 0.0);
    for vals in ratios {
        let (lo_r, hi_r, lo_i, hi_i) = vals.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), z| (a.min(z.re), b.max(z.re), c.min(z.im), d.max(z.im)),
        );
        out.0 += lo_r;
        out.1 += hi_r;
        out.2 += lo_i;
        out.3 += hi_i;
    }
    out
}

fn check_split(fact: &SpectralFactorization, k: usize) -> Result<()> {
    let d = fact.order();
    if k < 1 || k >= d {
        return Err(TtError::Argument(format!("split index {k} outside 1..={}", d.saturating_sub(1))));
    }
    Ok(())
}

/// `(alpha1, beta1, alpha2, beta2)`: extremes of the real and imaginary parts of
/// `sum_{s<=k} mu_s / lambda_s`.
pub fn ratio_extremes(fact: &SpectralFactorization, k: usize) -> Result<(f64, f64, f64, f64)> {
    check_split(fact, k)?;
    Ok(block_extremes(&fact.ratios()?[..k]))
}

/// Smallest disk containing the rectangle `[alpha1, beta1] x [alpha2, beta2]`.
pub fn make_disk(alpha1: f64, beta1: f64, alpha2: f64, beta2: f64) -> (C64, f64) {
    let c = C64::new((alpha1 + beta1) / 2.0, (alpha2 + beta2) / 2.0);
    let dd = (((beta1 - alpha1) / 2.0).powi(2) + ((beta2 - alpha2) / 2.0).powi(2)).sqrt();
    (c, dd)
}

struct Boxes {
    // suffix[s] = (min re, max re, min im, max im) of sums over modes s..
    suffix: Vec<(f64, f64, f64, f64)>,
}

impl Boxes {
    fn new(values: &[Vec<C64>]) -> Self {
        let m = values.len();
        let mut suffix = vec![(0.0, 0.0, 0.0, 0.0); m + 1];
        for s in (0..m).rev() {
            let e = block_extremes(&values[s..s + 1]);
            let t = suffix[s + 1];
            suffix[s] = (e.0 + t.0, e.1 + t.1, e.2 + t.2, e.3 + t.3);
        }
        Boxes { suffix }
    }

    fn min_dist2(&self, s: usize, p: C64) -> f64 {
        let (a, b, c, d) = self.suffix[s];
        let dx = if p.re + a > 0.0 { p.re + a } else if p.re + b < 0.0 { -(p.re + b) } else { 0.0 };
        let dy = if p.im + c > 0.0 { p.im + c } else if p.im + d < 0.0 { -(p.im + d) } else { 0.0 };
        dx * dx + dy * dy
    }

    fn max_dist2(&self, s: usize, p: C64) -> f64 {
        let (a, b, c, d) = self.suffix[s];
        let dx = (p.re + a).abs().max((p.re + b).abs());
        let dy = (p.im + c).abs().max((p.im + d).abs());
        dx * dx + dy * dy
    }
}

/// Exact `min |shift + sum_s v_s(j_s)|^2` by depth-first branch and bound.
/// Returns `None` when more than `node_budget` nodes would be visited.
pub fn min_abs2_separable(values: &[Vec<C64>], shift: C64, node_budget: u128) -> Option<(f64, Vec<usize>)> {
    let boxes = Boxes::new(values);
    let mut best = (f64::INFINITY, vec![0; values.len()]);
    let mut path = vec![0; values.len()];
    let mut nodes: u128 = 0;
    fn rec(
        s: usize,
        p: C64,
        values: &[Vec<C64>],
        boxes: &Boxes,
        path: &mut Vec<usize>,
        best: &mut (f64, Vec<usize>),
        nodes: &mut u128,
        budget: u128,
    ) -> bool {
        *nodes += 1;
        if *nodes > budget {
            return false;
        }
        if s == values.len() {
            let v = p.norm_sqr();
            if v < best.0 {
                *best = (v, path.clone());
            }
            return true;
        }
        let mut cand: Vec<(f64, usize)> =
            values[s].iter().enumerate().map(|(j, &v)| (boxes.min_dist2(s + 1, p + v), j)).collect();
        cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        for (lb, j) in cand {
            if lb >= best.0 {
                break;
            }
            path[s] = j;
            if !rec(s + 1, p + values[s][j], values, boxes, path, best, nodes, budget) {
                return false;
            }
        }
        true
    }
    if rec(0, shift, values, &boxes, &mut path, &mut best, &mut nodes, node_budget) {
        Some(best)
    } else {
        None
    }
}

/// Exact `max |shift + sum_s v_s(j_s)|^2` by branch and bound.
pub fn max_abs2_separable(values: &[Vec<C64>], shift: C64, node_budget: u128) -> Option<f64> {
    let boxes = Boxes::new(values);
    let mut best = f64::NEG_INFINITY;
    let mut nodes: u128 = 0;
    fn rec(s: usize, p: C64, values: &[Vec<C64>], boxes: &Boxes, best: &mut f64, nodes: &mut u128, budget: u128) -> bool {
        *nodes += 1;
        if *nodes > budget {
            return false;
        }
        if s == values.len() {
            *best = best.max(p.norm_sqr());
            return true;
        }
        let mut cand: Vec<(f64, usize)> =
            values[s].iter().enumerate().map(|(j, &v)| (boxes.max_dist2(s + 1, p + v), j)).collect();
        cand.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        for (ub, j) in cand {
            if ub <= *best {
                break;
            }
            if !rec(s + 1, p + values[s][j], values, boxes, best, nodes, budget) {
                return false;
            }
        }
        true
    }
    if rec(0, shift, values, &boxes, &mut best, &mut nodes, node_budget) {
        Some(best)
    } else {
        None
    }
}

/// Lower bound on `min |l|` and upper bound on `max |l|` over the eigenvalue tensor.
/// Exact when every lambda is one and the search fits in `budget` nodes.
pub fn magnitude_extremes(fact: &SpectralFactorization, budget: u128) -> Result<(f64, f64)> {
    let ratios = fact.ratios()?;
    let zero = C64::new(0.0, 0.0);
    let boxes = Boxes::new(&ratios);
    let lo = match min_abs2_separable(&ratios, zero, budget) {
        Some((v, _)) => v.sqrt(),
        None => boxes.min_dist2(0, zero).sqrt(),
    };
    let hi = match max_abs2_separable(&ratios, zero, budget) {
        Some(v) => v.sqrt(),
        None => boxes.max_dist2(0, zero).sqrt(),
    };
    if fact.unit_lambda() {
        return Ok((lo, hi));
    }
    let (mut pmin, mut pmax) = (1.0, 1.0);
    for l in &fact.lambda {
        pmin *= l.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        pmax *= l.iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    Ok((lo * pmin, hi * pmax))
}

/// TT tensor of `c + sum_s v_s(j_s)` with ranks `(1, 3, ..., 3, 1)`.
fn shifted_sum_tt(values: &[Vec<C64>], c: C64) -> Result<TTTensor> {
    let m = values.len();
    let one = C64::new(1.0, 0.0);
    let cores = (0..m)
        .map(|s| {
            let v = &values[s];
            let n = v.len();
            if m == 1 {
                ndarray::Array3::from_shape_fn((1, n, 1), |(_, j, _)| v[j])
            } else if s == 0 {
                ndarray::Array3::from_shape_fn((1, n, 2), |(_, j, b)| if b == 0 { one } else { v[j] })
            } else if s == m - 1 {
                ndarray::Array3::from_shape_fn((2, n, 1), |(a, j, _)| if a == 0 { v[j] } else { one })
            } else {
                ndarray::Array3::from_shape_fn((2, n, 2), |(a, j, b)| match (a, b) {
                    (0, 0) | (1, 1) => one,
                    (0, 1) => v[j],
                    _ => C64::new(0.0, 0.0),
                })
            }
        })
        .collect();
    let sum = TTTensor::new(cores)?;
    let modes: Vec<usize> = values.iter().map(|v| v.len()).collect();
    add(&sum, &scale(&TTTensor::ones(&modes)?, c))
}

/// Multistart coordinate descent for `min C` on the TT form `C = B ⊙ conj(B)`.
fn heuristic_min(values: &[Vec<C64>], c: C64) -> Result<f64> {
    let b = shifted_sum_tt(values, c)?;
    let ct = hadamard(&b, &b.conjugate())?;
    let m = values.len();
    let modes = ct.mode_sizes();
    let mut rng = ChaCha8Rng::seed_from_u64(HEURISTIC_SEED);
    let mut best = f64::INFINITY;
    for _ in 0..HEURISTIC_STARTS {
        let mut idx: Vec<usize> = modes.iter().map(|&n| rng.random_range(0..n)).collect();
        let mut current = ct.entry(&idx).re;
        for _ in 0..HEURISTIC_SWEEPS {
            let mut improved = false;
            for s in 0..m {
                let mut left = Array1::from_elem(1, C64::new(1.0, 0.0));
                for t in 0..s {
                    left = left.dot(&ct.core(t).index_axis(Axis(1), idx[t]));
                }
                let mut right = Array1::from_elem(1, C64::new(1.0, 0.0));
                for t in (s + 1..m).rev() {
                    right = ct.core(t).index_axis(Axis(1), idx[t]).dot(&right);
                }
                for j in 0..modes[s] {
                    let val = left.dot(&ct.core(s).index_axis(Axis(1), j).dot(&right)).re;
                    if val < current {
                        current = val;
                        idx[s] = j;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        best = best.min(current);
    }
    Ok(best.max(0.0))
}

fn tuple_count(values: &[Vec<C64>]) -> u128 {
    values.iter().fold(1u128, |acc, v| acc.saturating_mul(v.len() as u128))
}

fn try_variant(
    inside: &[Vec<C64>],
    outside: &[Vec<C64>],
    method: MethodRequest,
    budget: u128,
) -> Result<(C64, f64, f64, SearchMethod, bool)> {
    let (a1, b1, a2, b2) = block_extremes(inside);
    let (c, dd) = make_disk(a1, b1, a2, b2);
    match method {
        MethodRequest::Exact => {
            let needed = tuple_count(outside);
            if needed > budget {
                return Err(TtError::Budget { needed, budget });
            }
            let (v, _) = min_abs2_separable(outside, c, u128::MAX).expect("unbounded search");
            Ok((c, dd, v, SearchMethod::ExactEnumeration, true))
        }
        MethodRequest::Bound => {
            let v = Boxes::new(outside).min_dist2(0, c);
            Ok((c, dd, v, SearchMethod::SeparableBound, true))
        }
        MethodRequest::Heuristic => {
            let v = heuristic_min(outside, c)?;
            Ok((c, dd, v, SearchMethod::AlternatingHeuristic, false))
        }
    }
}

/// Check the disk condition at split `k`, trying the leading block first and
/// the trailing block if that fails.
pub fn verify_condition(
    fact: &SpectralFactorization,
    k: usize,
    method: MethodRequest,
    budget: u128,
) -> Result<DiskCertificate> {
    check_split(fact, k)?;
    let ratios = fact.ratios()?;
    let (lead, trail) = ratios.split_at(k);
    let mut first = None;
    for (variant, inside, outside) in
        [(ConditionVariant::Cond1, lead, trail), (ConditionVariant::Cond2, trail, lead)]
    {
        let (c, dd, min_c, used, sound) = try_variant(inside, outside, method, budget)?;
        let cert = build_certificate(k, fact.order(), variant, c, dd, min_c, used, sound);
        if !cert.uncertified {
            return Ok(cert);
        }
        first.get_or_insert(cert);
    }
    Ok(first.expect("at least one variant"))
}

#[allow(clippy::too_many_arguments)]
fn build_certificate(
    k: usize,
    d: usize,
    variant: ConditionVariant,
    c: C64,
    dd: f64,
    min_c: f64,
    method: SearchMethod,
    sound: bool,
) -> DiskCertificate {
    let verified = min_c > dd * dd;
    let gap = (min_c.sqrt() - dd).max(0.0);
    // A heuristic minimum is not a proof, so no decay claim is made from it.
    let q = if verified && sound { Some(if dd == 0.0 { 0.0 } else { dd / (dd + gap) }) } else { None };
    DiskCertificate {
        split_k: k,
        order: d,
        center: c,
        radius: dd,
        gap,
        decay_q: q,
        uncertified: q.is_none(),
        tau: q,
        rank_bound: None,
        rank_bound_n: None,
        condition_variant: variant,
        min_c,
        method,
        sound,
    }
}

/// `q = D / (D + D')`.
pub fn decay_factor(cert: &DiskCertificate) -> Result<f64> {
    cert.decay_q
        .ok_or_else(|| TtError::State(format!("split {} is not certified", cert.split_k)))
}

/// Rank sufficient for accuracy `eps` at the certified split, with the inner
/// size taken as `min(rows, cols)` of the full matricization.
pub fn rank_bound(cert: &DiskCertificate, eps: f64, split_dims: (usize, usize)) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(TtError::Argument("eps must lie in (0, 1)".into()));
    }
    let tau = cert
        .tau
        .ok_or_else(|| TtError::State(format!("split {} is not certified", cert.split_k)))?;
    if tau >= 1.0 {
        return Err(TtError::State(format!("tau = {tau} is not below one")));
    }
    if tau == 0.0 {
        return Ok(1);
    }
    let d = cert.order.max(2) as f64;
    let n = split_dims.0.min(split_dims.1) as f64;
    let t2 = tau * tau;
    let x = (1.0 - t2) * eps * eps / (d - 1.0) + t2.powf(n);
    let r = (x.ln() / t2.ln()).ceil();
    Ok(if r.is_finite() && r >= 1.0 { r as usize } else { 1 })
}

/// Fill the rank bound of a certificate in place (no-op when uncertified).
pub fn attach_rank_bound(cert: &mut DiskCertificate, eps: f64, modes: &[usize]) -> Result<()> {
    if cert.uncertified {
        return Ok(());
    }
    let rows: usize = modes[..cert.split_k].iter().product();
    let cols: usize = modes[cert.split_k..].iter().product();
    cert.rank_bound = Some(rank_bound(cert, eps, (rows, cols))?);
    cert.rank_bound_n = Some(rows.min(cols));
    Ok(())
}

/// Singular values (descending) of the split-`k` matricization of the dense
/// elementwise reciprocal of `l`.
pub fn empirical_sv_decay(l: &TTTensor, k: usize) -> Result<Vec<f64>> {
    empirical_sv_decay_capped(l, k, DEFAULT_DENSE_CAP)
}

pub fn empirical_sv_decay_capped(l: &TTTensor, k: usize, cap: usize) -> Result<Vec<f64>> {
    let dense = l.to_dense_capped(cap)?;
    if dense.data().iter().any(|z| *z == C64::new(0.0, 0.0)) {
        return Err(TtError::Degenerate("tensor has a zero entry".into()));
    }
    let inv = dense.map(|z| C64::new(1.0, 0.0) / z);
    let m: Array2<C64> = inv.matricize(k)?;
    let mut s = singular_values(&m.view())?.to_vec();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(s)
}

/// Smallest rank whose discarded singular-value tail is within `eps * |A| / sqrt(d-1)`.
pub fn epsilon_rank(sv: &[f64], eps: f64, d: usize) -> usize {
    let norm = sv.iter().map(|s| s * s).sum::<f64>().sqrt();
    let delta = eps * norm / ((d.max(2) - 1) as f64).sqrt();
    crate::linalg::truncation_rank(sv, delta, None).0
}

/// Parameters of the closed-form decay factors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TheoremParams {
    Poisson { k: usize, d: usize, kappa: f64 },
    Bgk { k: usize, dt_over_h: f64, mu_max1: f64, mu_min1: f64, mu_max2: f64, mu_min2: f64 },
    Fp { k: usize, d: usize, dt: f64, h: f64, mu1: f64, mun: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremDecay {
    pub q: f64,
    pub uncertified: bool,
}

/// Closed-form decay factors for the three model problems.
pub fn theorem_decay_factor(params: TheoremParams) -> TheoremDecay {
    let q = match params {
        TheoremParams::Poisson { k, d, kappa } => {
            let (k, d) = (k as f64, d as f64);
            (k * kappa - k) / (k * kappa + 2.0 * d - k)
        }
        TheoremParams::Bgk { k, dt_over_h, mu_max1, mu_min1, mu_max2, mu_min2 } => {
            let k = k as f64;
            let spread = ((mu_max1 - mu_min1).powi(2) + (mu_max2 - mu_min2).powi(2)).sqrt();
            k * dt_over_h * spread / (4.0 + k * mu_max1 * dt_over_h + 2.0 * k * mu_min1 * dt_over_h)
        }
        TheoremParams::Fp { k, d, dt, h, mu1, mun } => {
            let (k, d) = (k as f64, d as f64);
            let r = dt / h;
            d * (mu1 - mun) * r / (4.0 * d - 2.0 * d * dt - 2.0 * d * dt / (h * h) - (k * mu1 + (2.0 * d - k) * mun) * r)
        }
    };
    let uncertified = !(q.is_finite() && (0.0..1.0).contains(&q));
    TheoremDecay { q, uncertified }
}
