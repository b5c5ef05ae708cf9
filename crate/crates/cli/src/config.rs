//! Flat TOML run configuration.
//!
//! Every physical key is optional; each command fills the gaps from the
//! defaults of the parameter set it builds, so one file format serves the
//! lattice, circuit and photonic commands alike.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use dssh_core::circuit::CircuitParams;
use dssh_core::hamiltonians::{Boundary, ChainTermination, LatticeParams, ModelKind};
use dssh_core::photonic::{Elimination, PhotonicParams};

use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelKind>,
    pub termination: Option<ChainTermination>,

    pub n_cells: Option<usize>,
    pub boundary: Option<Boundary>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub gamma: Option<f64>,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub g_mag: Option<f64>,
    pub alpha: Option<f64>,

    /// Lattice key scanned by `spectrum`, e.g. `"gamma1"`.
    pub sweep_param: Option<String>,
    /// Explicit sweep values.
    pub sweep: Option<Vec<f64>>,
    /// `[start, stop, step]`, inclusive of `stop` up to rounding.
    pub sweep_range: Option<[f64; 3]>,
    pub n_k: Option<usize>,
    /// Distance to `-iΓr` below which a mode counts as a Γr-mode.
    pub mode_tol: Option<f64>,

    /// `[min, max, points]`
    pub alpha_grid: Option<[f64; 3]>,
    pub g_grid: Option<[f64; 3]>,

    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub rc1: Option<f64>,
    pub rc2: Option<f64>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub record_every: Option<usize>,

    pub g: Option<f64>,
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
    pub elimination: Option<Elimination>,

    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

pub const SWEEPABLE: [&str; 9] = ["t1", "t2", "gamma1", "gamma2", "gamma", "delta1", "delta2", "g_mag", "alpha"];

/// Inclusive grid `min..=max` with `points` samples.
fn linspace(spec: [f64; 3], what: &str) -> Result<Vec<f64>, CliError> {
    let [lo, hi, n] = spec;
    if !(lo.is_finite() && hi.is_finite()) || n < 1.0 || n.fract() != 0.0 {
        return Err(CliError::Config(format!("{what}: need finite bounds and a positive integer point count")));
    }
    let n = n as usize;
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural checks that do not depend on the command.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(name) = &self.sweep_param {
            if !SWEEPABLE.contains(&name.as_str()) {
                return Err(CliError::Config(format!("sweep_param `{name}` is not one of {SWEEPABLE:?}")));
            }
        }
        if self.sweep.is_some() && self.sweep_range.is_some() {
            return Err(CliError::Config("give either sweep or sweep_range, not both".into()));
        }
        if (self.sweep.is_some() || self.sweep_range.is_some()) && self.sweep_param.is_none() {
            return Err(CliError::Config("a sweep needs sweep_param".into()));
        }
        if self.sweep_param.is_some() && self.sweep_values()?.is_empty() {
            return Err(CliError::Config("sweep is empty".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be positive".into()));
        }
        if let Some(t) = self.mode_tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Config("mode_tol must be finite and positive".into()));
            }
        }
        Ok(())
    }

    pub fn sweep_values(&self) -> Result<Vec<f64>, CliError> {
        if let Some(v) = &self.sweep {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(CliError::Config("sweep values must be finite".into()));
            }
            return Ok(v.clone());
        }
        match self.sweep_range {
            None => Ok(Vec::new()),
            Some([start, stop, step]) => {
                if !(start.is_finite() && stop.is_finite() && step > 0.0 && step.is_finite()) {
                    return Err(CliError::Config("sweep_range needs finite start/stop and a positive step".into()));
                }
                if stop < start {
                    return Ok(Vec::new());
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                Ok((0..=n).map(|j| start + step * j as f64).collect())
            }
        }
    }

    pub fn model(&self) -> ModelKind {
        self.model.unwrap_or(ModelKind::Dssh)
    }

    pub fn lattice(&self) -> LatticeParams {
        let d = LatticeParams::default();
        LatticeParams {
            n_cells: self.n_cells.unwrap_or(d.n_cells),
            t1: self.t1.unwrap_or(d.t1),
            t2: self.t2.unwrap_or(d.t2),
            gamma1: self.gamma1.unwrap_or(d.gamma1),
            gamma2: self.gamma2.unwrap_or(d.gamma2),
            gamma: self.gamma.unwrap_or(d.gamma),
            delta1: self.delta1.unwrap_or(d.delta1),
            delta2: self.delta2.unwrap_or(d.delta2),
            g_mag: self.g_mag.unwrap_or(d.g_mag),
            alpha: self.alpha.unwrap_or(d.alpha),
            boundary: self.boundary.unwrap_or(d.boundary),
        }
    }

    pub fn circuit(&self) -> CircuitParams {
        let d = CircuitParams::default();
        CircuitParams {
            n_cells: self.n_cells.unwrap_or(d.n_cells),
            l1: self.l1.unwrap_or(d.l1),
            l2: self.l2.unwrap_or(d.l2),
            c1: self.c1.unwrap_or(d.c1),
            c2: self.c2.unwrap_or(d.c2),
            r1: self.r1.unwrap_or(d.r1),
            r2: self.r2.unwrap_or(d.r2),
            rc1: self.rc1.unwrap_or(d.rc1),
            rc2: self.rc2.unwrap_or(d.rc2),
            boundary: self.boundary.unwrap_or(d.boundary),
        }
    }

    pub fn photonic(&self) -> PhotonicParams {
        let d = PhotonicParams::default();
        PhotonicParams {
            n_cells: self.n_cells.unwrap_or(d.n_cells),
            g: self.g.unwrap_or(d.g),
            kappa1: self.kappa1.unwrap_or(d.kappa1),
            kappa2: self.kappa2.unwrap_or(d.kappa2),
            gamma: self.gamma.unwrap_or(d.gamma),
            delta1: self.delta1.unwrap_or(d.delta1),
            delta2: self.delta2.unwrap_or(d.delta2),
            g_mag: self.g_mag.unwrap_or(d.g_mag),
            alpha: self.alpha.unwrap_or(d.alpha),
            boundary: self.boundary.unwrap_or(d.boundary),
        }
    }

    pub fn alpha_grid(&self) -> Result<Vec<f64>, CliError> {
        linspace(self.alpha_grid.unwrap_or([0.0, std::f64::consts::PI, 101.0]), "alpha_grid")
    }

    pub fn g_grid(&self) -> Result<Vec<f64>, CliError> {
        linspace(self.g_grid.unwrap_or([0.0, 4.0, 101.0]), "g_grid")
    }

    pub fn n_k(&self) -> usize {
        self.n_k.unwrap_or(256)
    }

    pub fn mode_tol(&self) -> f64 {
        self.mode_tol.unwrap_or(1e-3)
    }
}

/// Copy of `p` with the named key replaced.
pub fn set_lattice_key(p: &LatticeParams, key: &str, value: f64) -> LatticeParams {
    let mut q = p.clone();
    match key {
        "t1" => q.t1 = value,
        "t2" => q.t2 = value,
        "gamma1" => q.gamma1 = value,
        "gamma2" => q.gamma2 = value,
        "gamma" => q.gamma = value,
        "delta1" => q.delta1 = value,
        "delta2" => q.delta2 = value,
        "g_mag" => q.g_mag = value,
        "alpha" => q.alpha = value,
        _ => unreachable!("sweep_param is validated against SWEEPABLE"),
    }
    q
}
