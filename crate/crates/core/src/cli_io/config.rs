//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::blowup::Thresholds;
use crate::data::InitialData;
use crate::domain_grid::DomainSpec;
use crate::error::{Result, SdwError};
use crate::evolver::SolverConfig;
use crate::nonlinearity::NonlinKind;
use crate::picard::PicardConfig;
use crate::sweep::SweepPlan;

pub const OUT_DIR_ENV: &str = "SDW_OUT_DIR";
pub const WORKERS_ENV: &str = "SDW_WORKERS";

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub j_max: usize,
    pub solver: SolverConfig,
    pub nonlinearity: NonlinKind,
    pub data: InitialData,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub picard: Option<PicardConfig>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Seed for randomized checks.
    #[serde(default)]
    pub seed: u32,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.nonlinearity.validate()?;
        self.data.validate()?;
        self.thresholds.validate()?;
        if let Some(p) = &self.picard {
            p.validate()?;
        }
        // SolverConfig::validate needs dx; check it against the spacing the grid will have
        let dx = (self.domain.r_out - self.domain.r_obs) / self.j_max.max(1) as f64;
        if !(self.solver.dt > 0.0 && self.solver.dt <= dx + 1e-12) {
            return Err(SdwError::config(format!(
                "dt = {} must lie in (0, dx = {dx}]",
                self.solver.dt
            )));
        }
        if !(0.5..=1.0).contains(&self.solver.theta) || !(self.solver.t_end > 0.0) || self.solver.store_every == 0 {
            return Err(SdwError::config(
                "solver needs theta in [1/2, 1], t_end > 0, store_every >= 1",
            ));
        }
        Ok(())
    }
}

pub fn parse_toml<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| SdwError::config(format!("{what}: {e}")))
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| SdwError::config(format!("serialize: {e}")))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| SdwError::config(format!("cannot read {}: {e}", path.display())))
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let cfg: RunConfig = parse_toml(&read(path)?, &path.display().to_string())?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_sweep_plan(path: &Path) -> Result<SweepPlan> {
    let plan: SweepPlan = parse_toml(&read(path)?, &path.display().to_string())?;
    plan.validate()?;
    Ok(plan)
}

/// Flag, then `SDW_OUT_DIR`, then the configured value.
pub fn resolve_out_dir(flag: Option<&Path>, configured: &Path) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => configured.to_path_buf(),
    }
}

/// Flag, then `SDW_WORKERS`, then 0 (rayon's default).
pub fn resolve_workers(flag: Option<usize>) -> Result<usize> {
    if let Some(w) = flag {
        return Ok(w);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) if !v.is_empty() => v
            .parse()
            .map_err(|_| SdwError::config(format!("{WORKERS_ENV} must be a non-negative integer, got {v:?}"))),
        _ => Ok(0),
    }
}

pub fn example_run_config() -> RunConfig {
    RunConfig {
        domain: DomainSpec {
            n: 1,
            r_obs: 0.0,
            r_out: 60.0,
        },
        j_max: 600,
        solver: SolverConfig {
            dt: 0.01,
            theta: 0.5,
            t_end: 20.0,
            store_every: 10,
        },
        nonlinearity: NonlinKind::Mixed { p: 2.0, q: 1.2 },
        data: InitialData {
            u0: None,
            u1: crate::data::Profile::bump(20.0, 8.0),
            amplitude: 1.0,
        },
        thresholds: Thresholds::default(),
        picard: None,
        out_dir: default_out_dir(),
        seed: 7,
    }
}
