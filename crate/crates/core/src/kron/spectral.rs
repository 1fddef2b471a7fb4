use std::sync::Arc;

use ndarray::{Array1, Array2, Array3};
use ndarray_linalg::Cholesky;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::factor::Factor;
use super::operator::KroneckerSumOperator;
use crate::error::{Result, TtError};
use crate::linalg::{adjoint, cond2, eig, eigh, fro_norm, inverse, is_hermitian};
use crate::C64;

/// Largest accepted condition number of an eigenvector matrix.
pub const MAX_EIGVEC_COND: f64 = 1e8;
/// Residual check is skipped for structured transforms above this size.
const RESIDUAL_CHECK_LIMIT: usize = 256;

/// Dense or block-DFT change of basis.
#[derive(Clone)]
pub enum Transform {
    Dense(Array2<C64>),
    /// `blocks` copies of the unitary DFT of size `len` on the fast index.
    /// Forward applies `F^*` (unnormalized FFT over `sqrt(len)`); backward applies `F`.
    BlockDft { len: usize, blocks: usize, forward: bool, plan: Arc<dyn Fft<f64>> },
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Transform::Dense(m) => write!(f, "Dense({:?})", m.dim()),
            Transform::BlockDft { len, blocks, forward, .. } => {
                write!(f, "BlockDft {{ len: {len}, blocks: {blocks}, forward: {forward} }}")
            }
        }
    }
}

impl Transform {
    pub fn block_dft(len: usize, blocks: usize, forward: bool) -> Self {
        let mut planner = FftPlanner::new();
        let plan = if forward { planner.plan_fft_forward(len) } else { planner.plan_fft_inverse(len) };
        Transform::BlockDft { len, blocks, forward, plan }
    }

    pub fn dim(&self) -> usize {
        match self {
            Transform::Dense(m) => m.nrows(),
            Transform::BlockDft { len, blocks, .. } => len * blocks,
        }
    }

    pub fn is_unitary_dft(&self) -> bool {
        matches!(self, Transform::BlockDft { .. })
    }

    pub fn inverse(&self) -> Result<Transform> {
        match self {
            Transform::Dense(m) => Ok(Transform::Dense(inverse(&m.view())?)),
            Transform::BlockDft { len, blocks, forward, .. } => Ok(Transform::block_dft(*len, *blocks, !forward)),
        }
    }

    pub fn to_dense(&self) -> Array2<C64> {
        match self {
            Transform::Dense(m) => m.clone(),
            Transform::BlockDft { len, blocks, forward, .. } => {
                let n = *len;
                let sign = if *forward { -1.0 } else { 1.0 };
                let scale = 1.0 / (n as f64).sqrt();
                let mut m = Array2::zeros((n * blocks, n * blocks));
                for b in 0..*blocks {
                    for j in 0..n {
                        for p in 0..n {
                            let theta = sign * 2.0 * std::f64::consts::PI * ((j * p) % n) as f64 / n as f64;
                            m[[b * n + j, b * n + p]] = C64::from_polar(scale, theta);
                        }
                    }
                }
                m
            }
        }
    }

    pub fn cond(&self) -> Result<f64> {
        match self {
            Transform::Dense(m) => cond2(&m.view()),
            Transform::BlockDft { .. } => Ok(1.0),
        }
    }

    /// Product along the middle index of a core `(r, n, r')`.
    pub fn apply_core(&self, core: &Array3<C64>) -> Array3<C64> {
        match self {
            Transform::Dense(m) => crate::algebra::core_mode_product(core, &m.view()),
            Transform::BlockDft { len, blocks, plan, .. } => {
                let n = *len;
                let (r, _, r2) = core.dim();
                let scale = 1.0 / (n as f64).sqrt();
                let mut out = Array3::zeros(core.dim());
                let mut buf = vec![C64::new(0.0, 0.0); n];
                let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
                for a in 0..r {
                    for b in 0..*blocks {
                        for t in 0..r2 {
                            for p in 0..n {
                                buf[p] = core[[a, b * n + p, t]];
                            }
                            plan.process_with_scratch(&mut buf, &mut scratch);
                            for p in 0..n {
                                out[[a, b * n + p, t]] = buf[p] * scale;
                            }
                        }
                    }
                }
                out
            }
        }
    }

    /// Dense product `T x` for a vector.
    pub fn apply_vec(&self, x: &Array1<C64>) -> Array1<C64> {
        let core = x.clone().into_shape_with_order((1, x.len(), 1)).expect("vector shape");
        self.apply_core(&core).into_shape_with_order(x.len()).expect("vector shape")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalizationMethod {
    HermitianIdentityMass,
    GeneralizedHermitian,
    GenericPencil,
    Circulant,
}

/// Joint diagonalization `U_k S_k V_k = diag(mu_k)`, `U_k M_k V_k = diag(lambda_k)`.
#[derive(Clone, Debug)]
pub struct SpectralFactorization {
    pub u: Vec<Transform>,
    pub v: Vec<Transform>,
    pub u_inv: Vec<Transform>,
    pub v_inv: Vec<Transform>,
    pub mu: Vec<Array1<C64>>,
    pub lambda: Vec<Array1<C64>>,
    pub unitary: Vec<bool>,
    pub cond_u: Vec<f64>,
    pub cond_v: Vec<f64>,
    /// Relative residuals of both diagonalizations, when checked.
    pub residual_s: Vec<Option<f64>>,
    pub residual_m: Vec<Option<f64>>,
    pub methods: Vec<DiagonalizationMethod>,
}

impl SpectralFactorization {
    pub fn order(&self) -> usize {
        self.mu.len()
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.mu.iter().map(|m| m.len()).collect()
    }

    /// Per-mode ratios `mu / lambda`.
    pub fn ratios(&self) -> Result<Vec<Vec<C64>>> {
        self.mu
            .iter()
            .zip(&self.lambda)
            .enumerate()
            .map(|(k, (mu, la))| {
                mu.iter()
                    .zip(la.iter())
                    .map(|(&m, &l)| {
                        if l == C64::new(0.0, 0.0) {
                            Err(TtError::Degenerate(format!("zero lambda entry in factor {}", k + 1)))
                        } else {
                            Ok(m / l)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Whether every lambda entry equals one.
    pub fn unit_lambda(&self) -> bool {
        self.lambda.iter().all(|l| l.iter().all(|&z| z == C64::new(1.0, 0.0)))
    }
}

struct FactorDiag {
    u: Transform,
    v: Transform,
    u_inv: Transform,
    v_inv: Transform,
    mu: Array1<C64>,
    lambda: Array1<C64>,
    unitary: bool,
    method: DiagonalizationMethod,
}

/// Diagonalize every factor pair, trying in order: circulant, identity mass with
/// Hermitian stiffness, Hermitian positive-definite mass, generic pencil.
pub fn joint_diagonalize(op: &KroneckerSumOperator, tol: f64) -> Result<SpectralFactorization> {
    let d = op.order();
    let mut out = SpectralFactorization {
        u: Vec::with_capacity(d),
        v: Vec::with_capacity(d),
        u_inv: Vec::with_capacity(d),
        v_inv: Vec::with_capacity(d),
        mu: Vec::with_capacity(d),
        lambda: Vec::with_capacity(d),
        unitary: Vec::with_capacity(d),
        cond_u: Vec::with_capacity(d),
        cond_v: Vec::with_capacity(d),
        residual_s: Vec::with_capacity(d),
        residual_m: Vec::with_capacity(d),
        methods: Vec::with_capacity(d),
    };
    for (k, (s, m)) in op.factors().iter().enumerate() {
        let fd = diagonalize_pair(k, s, m)?;
        let (cu, cv) = if fd.unitary { (1.0, 1.0) } else { (fd.u.cond()?, fd.v.cond()?) };
        if cv > MAX_EIGVEC_COND || !cv.is_finite() {
            return Err(TtError::Diagonalization {
                factor: k + 1,
                reason: format!("eigenvector matrix condition number {cv:.3e} exceeds {MAX_EIGVEC_COND:.0e}"),
            });
        }
        let (rs, rm) = if s.dim() <= RESIDUAL_CHECK_LIMIT {
            let rs = diag_residual(&fd.u, &s.to_dense(), &fd.v, &fd.mu);
            let rm = diag_residual(&fd.u, &m.to_dense(), &fd.v, &fd.lambda);
            for (name, r) in [("S", rs), ("M", rm)] {
                if !(r <= tol) {
                    return Err(TtError::Diagonalization {
                        factor: k + 1,
                        reason: format!("{name} residual {r:.3e} above tolerance {tol:.1e}"),
                    });
                }
            }
            (Some(rs), Some(rm))
        } else {
            (None, None)
        };
        out.u.push(fd.u);
        out.v.push(fd.v);
        out.u_inv.push(fd.u_inv);
        out.v_inv.push(fd.v_inv);
        out.mu.push(fd.mu);
        out.lambda.push(fd.lambda);
        out.unitary.push(fd.unitary);
        out.cond_u.push(cu);
        out.cond_v.push(cv);
        out.residual_s.push(rs);
        out.residual_m.push(rm);
        out.methods.push(fd.method);
    }
    Ok(out)
}

fn diag_residual(u: &Transform, a: &Array2<C64>, v: &Transform, diag: &Array1<C64>) -> f64 {
    let prod = u.to_dense().dot(a).dot(&v.to_dense());
    let mut diff = prod;
    for (i, &z) in diag.iter().enumerate() {
        diff[[i, i]] -= z;
    }
    let scale = fro_norm(&a.view()).max(f64::MIN_POSITIVE);
    fro_norm(&diff.view()) / scale
}

fn circulant_columns(f: &Factor) -> Option<(usize, Vec<Vec<C64>>)> {
    match f {
        Factor::BlockCirculant { len, columns } => Some((*len, columns.clone())),
        Factor::Dense(m) => {
            let n = m.nrows();
            if n < 2 {
                return None;
            }
            let circulant = (0..n).all(|i| (0..n).all(|j| m[[i, j]] == m[[(i + 1) % n, (j + 1) % n]]));
            circulant.then(|| (n, vec![m.column(0).to_vec()]))
        }
        Factor::Identity(_) => None,
    }
}

fn diagonalize_pair(k: usize, s: &Factor, m: &Factor) -> Result<FactorDiag> {
    let n = s.dim();
    if m.is_identity() {
        if let Some((len, columns)) = circulant_columns(s) {
            let blocks = columns.len();
            let mut planner = FftPlanner::new();
            let plan = planner.plan_fft_forward(len);
            let mut mu = Vec::with_capacity(n);
            for col in columns {
                let mut buf = col.clone();
                plan.process(&mut buf);
                mu.extend(buf);
            }
            return Ok(FactorDiag {
                u: Transform::block_dft(len, blocks, true),
                v: Transform::block_dft(len, blocks, false),
                u_inv: Transform::block_dft(len, blocks, false),
                v_inv: Transform::block_dft(len, blocks, true),
                mu: Array1::from(mu),
                lambda: Array1::from_elem(n, C64::new(1.0, 0.0)),
                unitary: true,
                method: DiagonalizationMethod::Circulant,
            });
        }
    }
    let sd = s.to_dense();
    let md = m.to_dense();
    let herm_tol = 1e-13;
    if m.is_identity() && is_hermitian(&sd.view(), herm_tol) {
        let (w, q) = eigh(&sd.view())?;
        let mu: Array1<C64> = w.mapv(|x| C64::new(x, 0.0));
        let (mu, q) = sort_and_normalize(mu, q);
        let qh = adjoint(&q.view());
        return Ok(FactorDiag {
            u: Transform::Dense(qh.clone()),
            v: Transform::Dense(q.clone()),
            u_inv: Transform::Dense(q),
            v_inv: Transform::Dense(qh),
            mu,
            lambda: Array1::from_elem(n, C64::new(1.0, 0.0)),
            unitary: true,
            method: DiagonalizationMethod::HermitianIdentityMass,
        });
    }
    if is_hermitian(&sd.view(), herm_tol) && is_hermitian(&md.view(), herm_tol) {
        if let Ok(l) = md.cholesky(ndarray_linalg::UPLO::Lower) {
            let linv = inverse(&l.view())?;
            let c = linv.dot(&sd).dot(&adjoint(&linv.view()));
            let c = (&c + &adjoint(&c.view())).mapv(|z| z * 0.5);
            let (theta, w) = eigh(&c.view())?;
            let vmat = adjoint(&linv.view()).dot(&w);
            let (_, vmat) = sort_and_normalize(theta.mapv(|x| C64::new(x, 0.0)), vmat);
            let uh = adjoint(&vmat.view());
            let mu = diag_of(&uh.dot(&sd).dot(&vmat)).mapv(|z| C64::new(z.re, 0.0));
            let lambda = diag_of(&uh.dot(&md).dot(&vmat)).mapv(|z| C64::new(z.re, 0.0));
            debug_assert_eq!(mu.len(), n);
            return Ok(FactorDiag {
                u_inv: Transform::Dense(inverse(&uh.view())?),
                v_inv: Transform::Dense(inverse(&vmat.view())?),
                u: Transform::Dense(uh),
                v: Transform::Dense(vmat),
                mu,
                lambda,
                unitary: false,
                method: DiagonalizationMethod::GeneralizedHermitian,
            });
        }
    }
    let minv = if m.is_identity() {
        crate::linalg::identity(n)
    } else {
        inverse(&md.view()).map_err(|e| TtError::Diagonalization { factor: k + 1, reason: format!("singular M: {e}") })?
    };
    let (w, vmat) = eig(&minv.dot(&sd).view())
        .map_err(|e| TtError::Diagonalization { factor: k + 1, reason: e.to_string() })?;
    let (mu, vmat) = sort_and_normalize(w, vmat);
    let cv = cond2(&vmat.view())?;
    if cv > MAX_EIGVEC_COND || !cv.is_finite() {
        return Err(TtError::Diagonalization {
            factor: k + 1,
            reason: format!("eigenvector matrix condition number {cv:.3e} exceeds {MAX_EIGVEC_COND:.0e}"),
        });
    }
    let mv = md.dot(&vmat);
    let u = inverse(&mv.view())
        .map_err(|e| TtError::Diagonalization { factor: k + 1, reason: format!("singular MV: {e}") })?;
    let v_inv = u.dot(&md);
    Ok(FactorDiag {
        u: Transform::Dense(u),
        v: Transform::Dense(vmat),
        u_inv: Transform::Dense(mv),
        v_inv: Transform::Dense(v_inv),
        mu,
        lambda: Array1::from_elem(n, C64::new(1.0, 0.0)),
        unitary: false,
        method: DiagonalizationMethod::GenericPencil,
    })
}

fn diag_of(a: &Array2<C64>) -> Array1<C64> {
    a.diag().to_owned()
}

/// Sort eigenpairs by descending real part (ties: descending imaginary part) and scale eigenvectors to unit 2-norm with the first nonzero entry real positive.
fn sort_and_normalize(mu: Array1<C64>, vecs: Array2<C64>) -> (Array1<C64>, Array2<C64>) {
    let n = mu.len();
    let ratio = &mu;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        ratio[b]
            .re
            .partial_cmp(&ratio[a].re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ratio[b].im.partial_cmp(&ratio[a].im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let mut out_mu = Array1::zeros(n);
    let mut out_v = Array2::zeros(vecs.dim());
    for (dst, &src) in order.iter().enumerate() {
        out_mu[dst] = mu[src];
        let col = vecs.column(src);
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let peak = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let pivot = col.iter().find(|z| z.norm() > 1e-12 * peak).cloned().unwrap_or(C64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        out_v.column_mut(dst).assign(&col.mapv(|z| z * phase / norm));
    }
    (out_mu, out_v)
}

/// Apply a per-mode transform list to a TT tensor.
pub fn transform_tt(t: &crate::tt::TTTensor, transforms: &[Transform]) -> Result<crate::tt::TTTensor> {
    if t.mode_sizes() != transforms.iter().map(|x| x.dim()).collect::<Vec<_>>() {
        return Err(TtError::Argument("transform sizes do not match the tensor modes".into()));
    }
    let cores = t.cores().iter().zip(transforms).map(|(c, x)| x.apply_core(c)).collect();
    crate::tt::TTTensor::new(cores)
}

