use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ttinv_core::kron::{joint_diagonalize, lambda_tensor, KronSumInverse, DEFAULT_DIAG_TOL};
use ttinv_core::linalg::{fro_norm, identity};
use ttinv_core::pde::{self, FPState, FpOperators};
use ttinv_core::rank::{
    attach_rank_bound, decay_factor, empirical_sv_decay_capped, theorem_decay_factor, verify_condition, TheoremParams,
};
use ttinv_core::tt::io::{read_tt, write_tt, write_tt_matrix};
use ttinv_core::TTTensor;

use crate::config::{Problem, Resolved};
use crate::report::{write_csv, Cell, RunReport};
use crate::CliError;

/// Largest system whose assembled inverse is checked against the dense operator.
const VERIFY_DIM: usize = 2048;

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

pub fn invert(r: &mut RunReport, out: &Path) -> Result<(), CliError> {
    let s = r.settings.clone();
    let op = s.operator(None)?;
    let start = Instant::now();
    let inv = KronSumInverse::compute(&op, &s.inversion())?;
    r.runtime("inversion", secs(start));
    r.runtime("diagonalize", inv.times.diagonalize);
    r.runtime("lambda", inv.times.lambda);
    r.runtime("hadamard_inverse", inv.times.invert);
    let start = Instant::now();
    let x = inv.assemble()?;
    r.runtime("assemble", secs(start));
    let path = out.join("inverse.ttj");
    write_tt_matrix(&path, &x)?;
    r.outputs.push(path);

    r.metric("mode_sizes", op.mode_sizes());
    r.metric("newton_iterations", inv.report.iterations);
    r.metric("newton_converged", inv.report.converged);
    r.metric("final_relative_residual", inv.report.final_residual());
    r.metric("averaged_rank", inv.xinv.averaged_rank());
    r.metric("inverse_ranks", x.ranks());
    r.metric("diagonalization_methods", &inv.fact.methods);
    r.metric("kappa_l", inv.kappa_l());
    r.metric("accuracy_bound", inv.accuracy_bound());
    let size: usize = op.mode_sizes().iter().product();
    if size <= VERIFY_DIM.min(s.dense_cap) {
        let dense = x.to_dense_matrix()?;
        let l = op.to_dense_matrix(s.dense_cap)?;
        let resid = fro_norm(&(dense.dot(&l) - identity(size)).view()) / (size as f64).sqrt();
        r.metric("dense_residual", resid);
    }
    Ok(())
}

pub fn solve(r: &mut RunReport, out: &Path) -> Result<(), CliError> {
    match r.settings.config.problem {
        Problem::Poisson => solve_poisson(r, out),
        Problem::Fp => solve_fp(r, out),
        Problem::Bgk => solve_bgk(r, out),
        Problem::File => Err(CliError::Usage("solve needs problem = poisson, bgk or fp".into())),
    }
}

fn solve_poisson(r: &mut RunReport, out: &Path) -> Result<(), CliError> {
    let s = r.settings.clone();
    let ns = match &s.config.ns {
        Some(ns) => ns.clone(),
        None => vec![s.n()?],
    };
    let mut rows = Vec::new();
    for n in ns {
        let grid = s.grid(n)?;
        let start = Instant::now();
        let inv = KronSumInverse::compute(&pde::poisson_operator(&grid)?, &s.inversion())?;
        let u = inv.solve(&pde::poisson_rhs(&grid)?, s.round_eps)?;
        r.runtime(&format!("n={n}"), secs(start));
        let err = pde::relative_error(&u, &pde::poisson_exact(&grid)?)?;
        rows.push(vec![Some(n as f64), Some(err), Some(inv.xinv.averaged_rank() as f64), Some(inv.report.iterations as f64)]);
    }
    if let Some(last) = rows.last() {
        r.metric("relative_error", last[1]);
        r.metric("averaged_rank", last[2]);
    }
    let path = out.join("poisson.csv");
    write_csv(&path, &["n", "relative_error", "averaged_rank", "newton_iterations"], &rows)?;
    r.outputs.push(path);
    Ok(())
}

fn steps(dt: f64, t_end: f64) -> usize {
    if dt == 0.0 {
        return 1;
    }
    (t_end / dt).round() as usize
}

fn solve_fp(r: &mut RunReport, out: &Path) -> Result<(), CliError> {
    let s = r.settings.clone();
    let grid = s.grid(s.n()?)?;
    let dt = s.dt();
    let every = s.config.record_every.unwrap_or(1).max(1);
    let start = Instant::now();
    let ops = FpOperators::new(&grid, dt, &s.inversion())?;
    r.runtime("setup", secs(start));
    let mut st = FPState::initial(&grid)?;
    let mut rows = Vec::new();
    let mut max_err: f64 = 0.0;
    let start = Instant::now();
    let count = steps(dt, s.config.t_end.unwrap_or(1.0));
    for i in 1..=count {
        st = pde::fp_step(&st, &ops, s.round_eps)?;
        let err = pde::relative_error(&st.rho_tt, &pde::fp_exact(&grid, st.t)?)?;
        max_err = max_err.max(err);
        if i % every == 0 || i == count {
            rows.push(vec![Some(st.t), Some(err), Some(st.rho_tt.averaged_rank() as f64), Some(pde::mass(&st.rho_tt, &grid)?)]);
        }
    }
    r.runtime("stepping", secs(start));
    if let Some(last) = rows.last() {
        r.metric("final_relative_error", last[1]);
    }
    r.metric("max_relative_error", max_err);
    r.metric("steps", count);
    let path = out.join("fp.csv");
    write_csv(&path, &["t", "relative_error", "averaged_rank", "mass"], &rows)?;
    r.outputs.push(path);
    Ok(())
}

fn solve_bgk(r: &mut RunReport, out: &Path) -> Result<(), CliError> {
    let s = r.settings.clone();
    let n = s.n()?;
    let gx = s.grid(n)?;
    let gv = s.velocity_grid(n)?;
    let params = s.bgk_params(&gx)?;
    let every = s.config.record_every.unwrap_or(1).max(1);
    let start = Instant::now();
    let ops = pde::BgkOperators::new(&gx, &gv, &params, &s.inversion())?;
    r.runtime("setup", secs(start));
    let f0 = pde::maxwellian(&pde::initial_fields(&gx)?, &gx, &gv, params.bo)?;
    let mut f = f0.clone();
    let mut rows = Vec::new();
    let count = steps(params.dt, s.config.t_end.unwrap_or(1.0));
    let start = Instant::now();
    for i in 1..=count {
        f = pde::bgk_step(&f, &ops, s.round_eps)?;
        if i % every == 0 || i == count {
            let rho = pde::moments(&f, &gx, &gv, params.bo)?.rho;
            let total: f64 = rho.data().iter().map(|z| z.re).sum::<f64>() * (0..gx.d).map(|k| gx.h(k)).product::<f64>();
            rows.push(vec![
                Some(i as f64 * params.dt),
                Some(pde::relative_error(&f, &f0)?),
                Some(f.averaged_rank() as f64),
                Some(total),
            ]);
        }
    }
    r.runtime("stepping", secs(start));
    r.metric("dt", params.dt);
    r.metric("steps", count);
    let path = out.join("bgk.csv");
    write_csv(&path, &["t", "relative_change", "averaged_rank", "total_density"], &rows)?;
    r.outputs.push(path);
    Ok(())
}

fn splits(s: &Resolved, d: usize) -> Result<Vec<usize>, CliError> {
    let ks = s.config.k.clone().unwrap_or_else(|| (1..d).collect());
    if let Some(&k) = ks.iter().find(|&&k| k < 1 || k >= d) {
        return Err(CliError::Usage(format!("split k = {k} is outside 1..={}", d.saturating_sub(1))));
    }
    Ok(ks)
}

pub fn certify(r: &mut RunReport, out: &Path) -> Result<(), CliError> {
    let s = r.settings.clone();
    let op = s.operator(None)?;
    let d = op.order();
    let ks = splits(&s, d)?;
    let eps = s.config.eps.unwrap_or(1e-6);
    let start = Instant::now();
    let fact = joint_diagonalize(&op, DEFAULT_DIAG_TOL)?;
    r.runtime("diagonalize", secs(start));
    let start = Instant::now();
    let mut theorem = Vec::new();
    for &k in &ks {
        let mut cert = verify_condition(&fact, k, s.method(), s.budget())?;
        attach_rank_bound(&mut cert, eps, &op.mode_sizes())?;
        if s.config.problem == Problem::Poisson {
            let re: Vec<f64> = fact.mu[0].iter().map(|z| z.re).collect();
            let kappa = re.iter().cloned().fold(f64::MIN, f64::max) / re.iter().cloned().fold(f64::MAX, f64::min);
            theorem.push(theorem_decay_factor(TheoremParams::Poisson { k, d, kappa }).q);
        }
        r.certificates.push(cert);
    }
    r.runtime("verify", secs(start));
    r.metric("eps", eps);
    r.metric("splits", &ks);
    r.metric("certified", r.certificates.iter().map(|c| !c.uncertified).collect::<Vec<_>>());
    if !theorem.is_empty() {
        r.metric("theorem_q", theorem);
    }
    let path = out.join("certificates.json");
    std::fs::write(&path, serde_json::to_string_pretty(&r.certificates).map_err(|e| CliError::Numeric(e.to_string()))?)
        .map_err(|e| CliError::Io(e.to_string()))?;
    r.outputs.push(path);
    Ok(())
}

pub fn svd_decay(r: &mut RunReport, out: &Path) -> Result<(), CliError> {
    let s = r.settings.clone();
    let op = s.operator(None)?;
    let d = op.order();
    let k = *splits(&s, d)?.first().ok_or_else(|| CliError::Usage("empty split list".into()))?;
    let fact = joint_diagonalize(&op, DEFAULT_DIAG_TOL)?;
    let l = lambda_tensor(&fact)?;
    let start = Instant::now();
    let sv = empirical_sv_decay_capped(&l, k, s.dense_cap)?;
    r.runtime("svd", secs(start));
    let cert = verify_condition(&fact, k, s.method(), s.budget())?;
    let q = decay_factor(&cert).ok();
    let rows: Vec<Vec<Cell>> = sv
        .iter()
        .enumerate()
        .map(|(j, &sigma)| vec![Some((j + 1) as f64), Some(sigma), Some(sigma / sv[0]), q.map(|q| q.powi(j as i32))])
        .collect();
    r.metric("split", k);
    r.metric("decay_q", q);
    r.certificates.push(cert);
    let path = out.join("svd_decay.csv");
    write_csv(&path, &["j", "sigma", "ratio", "envelope"], &rows)?;
    r.outputs.push(path);
    Ok(())
}

pub fn roundtrip(r: &mut RunReport, out: &Path) -> Result<(), CliError> {
    let s = r.settings.clone();
    let t = match &s.config.input {
        Some(p) => read_tt(p)?,
        None => {
            let d = s.config.d.unwrap_or(3);
            let n = s.config.n.unwrap_or(4);
            let rank = s.config.rank.unwrap_or(2);
            let mut ranks = vec![rank; d + 1];
            ranks[0] = 1;
            ranks[d] = 1;
            TTTensor::random(&vec![n; d], &ranks, &mut ChaCha8Rng::seed_from_u64(s.seed))?
        }
    };
    let dense = t.to_dense_capped(s.dense_cap)?;
    let back = TTTensor::from_dense(&dense, 0.0)?;
    let dense_err = pde::dense_relative_error(&back.to_dense_capped(s.dense_cap)?, &dense)?;
    let path = out.join("roundtrip.ttj");
    write_tt(&path, &t)?;
    let reread = read_tt(&path)?;
    let identical = reread.cores() == t.cores();
    r.outputs.push(path);
    r.metric("mode_sizes", t.mode_sizes());
    r.metric("ranks", t.ranks());
    r.metric("dense_roundtrip_relative_error", dense_err);
    r.metric("file_roundtrip_identical", identical);
    r.metric("frobenius_norm", t.frobenius_norm());
    if !identical {
        return Err(CliError::Numeric("file round trip changed the cores".into()));
    }
    Ok(())
}
