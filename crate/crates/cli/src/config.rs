use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ttinv_core::hadamard::InversionConfig;
use ttinv_core::kron::io::OperatorFile;
use ttinv_core::kron::KroneckerSumOperator;
use ttinv_core::pde::{self, BGKParams, Boundary, GridSpec};
use ttinv_core::rank::{MethodRequest, DEFAULT_BUDGET};
use ttinv_core::{TtError, DEFAULT_DENSE_CAP};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Poisson,
    Bgk,
    Fp,
    /// Operator read from a JSON file given by `operator`.
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Bound,
    Heuristic,
}

impl From<Method> for MethodRequest {
    fn from(m: Method) -> Self {
        match m {
            Method::Exact => MethodRequest::Exact,
            Method::Bound => MethodRequest::Bound,
            Method::Heuristic => MethodRequest::Heuristic,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub tol: Option<f64>,
    pub round_eps: Option<f64>,
    pub max_rank: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BgkSection {
    #[serde(default = "one")]
    pub kn: f64,
    #[serde(default = "bo")]
    pub bo: f64,
    #[serde(default = "one")]
    pub k: f64,
    #[serde(default = "half")]
    pub mu_exp: f64,
}

fn one() -> f64 {
    1.0
}
fn bo() -> f64 {
    3.65
}
fn half() -> f64 {
    0.5
}

impl Default for BgkSection {
    fn default() -> Self {
        BgkSection { kn: 1.0, bo: 3.65, k: 1.0, mu_exp: 0.5 }
    }
}

/// Contents of the `--config` TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub problem: Problem,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub n: Option<usize>,
    /// Grid sizes for a Poisson sweep; defaults to `[n]`.
    #[serde(default)]
    pub ns: Option<Vec<usize>>,
    /// BGK velocity points per dimension; defaults to `n`.
    #[serde(default)]
    pub nv: Option<usize>,
    #[serde(default)]
    pub domain: Option<(f64, f64)>,
    #[serde(default)]
    pub dt: Option<f64>,
    /// Alternative to `dt` for BGK: the step as a multiple of the spatial mesh width.
    #[serde(default)]
    pub dt_over_h: Option<f64>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub record_every: Option<usize>,
    #[serde(default)]
    pub operator: Option<PathBuf>,
    /// TT file for `roundtrip`; a random tensor is used when absent.
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub rank: Option<usize>,
    #[serde(default)]
    pub k: Option<Vec<usize>>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub method: Option<Method>,
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub bgk: BgkSection,
}

/// Command-line values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub round_eps: Option<f64>,
    pub max_rank: Option<usize>,
    pub dense_cap: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Fully resolved settings, echoed into the report.
#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub config: Config,
    pub tol: f64,
    pub round_eps: f64,
    pub max_rank: Option<usize>,
    pub dense_cap: usize,
    pub seed: u64,
    pub threads: usize,
    pub threads_source: &'static str,
}

pub fn load(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: Config = toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
    Ok(cfg)
}

pub fn resolve(config: Config, o: &Overrides, env_threads: Option<String>) -> Result<Resolved, CliError> {
    // The Fokker-Planck runs need tighter tolerances than the other problems.
    let (tol0, eps0) = if config.problem == Problem::Fp { (1e-10, 1e-12) } else { (1e-6, 1e-8) };
    let (threads, threads_source) = match env_threads {
        Some(v) => (
            v.trim().parse().map_err(|_| CliError::Usage(format!("TTINV_THREADS must be a positive integer, got {v:?}")))?,
            "TTINV_THREADS",
        ),
        None => match o.threads {
            Some(t) => (t, "--threads"),
            None => (1, "default"),
        },
    };
    if threads == 0 {
        return Err(CliError::Usage("thread count must be positive".into()));
    }
    Ok(Resolved {
        tol: o.tol.or(config.tolerances.tol).unwrap_or(tol0),
        round_eps: o.round_eps.or(config.tolerances.round_eps).unwrap_or(eps0),
        max_rank: o.max_rank.or(config.tolerances.max_rank),
        dense_cap: o.dense_cap.unwrap_or(DEFAULT_DENSE_CAP),
        seed: o.seed.unwrap_or(0),
        threads,
        threads_source,
        config,
    })
}

impl Resolved {
    pub fn inversion(&self) -> InversionConfig {
        InversionConfig {
            tol: self.tol,
            round_eps: self.round_eps,
            max_rank: self.max_rank,
            seed: self.seed,
            ..InversionConfig::default()
        }
    }

    pub fn d(&self) -> Result<usize, CliError> {
        let d = self.config.d.ok_or_else(|| CliError::Usage("config needs `d`".into()))?;
        if self.config.problem == Problem::Bgk && !(1..=2).contains(&d) {
            return Err(CliError::Usage("BGK runs support d = 1 or d = 2 only".into()));
        }
        Ok(d)
    }

    pub fn n(&self) -> Result<usize, CliError> {
        self.config.n.ok_or_else(|| CliError::Usage("config needs `n`".into()))
    }

    pub fn method(&self) -> MethodRequest {
        self.config.method.unwrap_or(Method::Exact).into()
    }

    pub fn budget(&self) -> u128 {
        self.config.budget.map(u128::from).unwrap_or(DEFAULT_BUDGET)
    }

    pub fn grid(&self, n: usize) -> Result<GridSpec, CliError> {
        let d = self.d()?;
        let (interval, boundary) = match self.config.problem {
            Problem::Poisson => ((-1.0, 1.0), Boundary::Dirichlet),
            Problem::Fp => ((-5.0, 5.0), Boundary::Dirichlet),
            Problem::Bgk => ((-std::f64::consts::PI, std::f64::consts::PI), Boundary::Periodic),
            Problem::File => return Err(CliError::Usage("file operators have no grid".into())),
        };
        Ok(GridSpec::uniform(d, n, self.config.domain.unwrap_or(interval), boundary)?)
    }

    pub fn velocity_grid(&self, n: usize) -> Result<GridSpec, CliError> {
        let nv = self.config.nv.unwrap_or(n);
        let pi = std::f64::consts::PI;
        Ok(GridSpec::uniform(self.d()?, nv, (-pi, pi), Boundary::Periodic)?)
    }

    pub fn bgk_params(&self, grid_x: &GridSpec) -> Result<BGKParams, CliError> {
        let b = &self.config.bgk;
        let dt = match (self.config.dt, self.config.dt_over_h) {
            (Some(_), Some(_)) => return Err(CliError::Usage("give either `dt` or `dt_over_h`, not both".into())),
            (Some(dt), None) => dt,
            (None, Some(r)) => r * grid_x.h(0),
            (None, None) => 0.0025,
        };
        let p = BGKParams { kn: b.kn, bo: b.bo, k: b.k, mu_exp: b.mu_exp, dt };
        p.validate()?;
        Ok(p)
    }

    pub fn dt(&self) -> f64 {
        self.config.dt.unwrap_or(0.0025)
    }

    /// The left-hand operator of the configured problem at grid size `n`.
    pub fn operator(&self, n: Option<usize>) -> Result<KroneckerSumOperator, CliError> {
        match self.config.problem {
            Problem::File => {
                let path = self.config.operator.as_ref().ok_or_else(|| CliError::Usage("config needs `operator`".into()))?;
                Ok(OperatorFile::read(path)?.to_operator()?)
            }
            Problem::Poisson => Ok(pde::poisson_operator(&self.grid(n.map_or_else(|| self.n(), Ok)?)?)?),
            Problem::Fp => Ok(pde::fp_operator(&self.grid(n.map_or_else(|| self.n(), Ok)?)?, self.dt())?),
            Problem::Bgk => {
                let n = n.map_or_else(|| self.n(), Ok)?;
                let gx = self.grid(n)?;
                let gv = self.velocity_grid(n)?;
                Ok(pde::bgk_operator(&gx, &gv, &self.bgk_params(&gx)?)?)
            }
        }
    }
}

impl From<TtError> for CliError {
    fn from(e: TtError) -> Self {
        match e {
            TtError::Size { .. } | TtError::Budget { .. } => CliError::Resource(e.to_string()),
            TtError::Argument(_)
            | TtError::Bounds(_)
            | TtError::Parse(_)
            | TtError::Io(_)
            | TtError::UnsupportedBoundary(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}
