//! Browser bindings: a parameter set plus three operations (spectrum,
//! phase diagram, skin profiles). Everything crosses the boundary as flat
//! `f64`/`u8` arrays so the page can draw straight onto a canvas.

use dssh_core::edgeskin::skin_report;
use dssh_core::eigen::eigenvalues;
use dssh_core::hamiltonians::{build, Boundary, LatticeParams, ModelKind};
use dssh_core::spectral::eig_biorthogonal_lenient;
use dssh_core::topology::{phase_diagram, Region};
use wasm_bindgen::prelude::*;

fn model_kind(name: &str) -> Result<ModelKind, String> {
    match name {
        "hermitian_ssh" => Ok(ModelKind::HermitianSsh),
        "dssh" => Ok(ModelKind::Dssh),
        "antipt_dssh" => Ok(ModelKind::AntiptDssh),
        "nonreciprocal_dssh" => Ok(ModelKind::NonreciprocalDssh),
        other => Err(format!("unknown model {other:?}")),
    }
}

fn linspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![min],
        _ => (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Lattice parameters as edited on the page.
#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct Lattice {
    model: ModelKind,
    pub n_cells: usize,
    pub t1: f64,
    pub t2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma: f64,
    pub g_mag: f64,
    pub alpha: f64,
}

impl Default for Lattice {
    fn default() -> Self {
        let p = LatticeParams::default();
        Lattice {
            model: ModelKind::NonreciprocalDssh,
            n_cells: p.n_cells,
            t1: p.t1,
            t2: p.t2,
            gamma1: p.gamma1,
            gamma2: p.gamma2,
            gamma: p.gamma,
            g_mag: 3.0,
            alpha: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl Lattice {
    fn params(&self, boundary: Boundary) -> LatticeParams {
        LatticeParams {
            n_cells: self.n_cells,
            t1: self.t1,
            t2: self.t2,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            gamma: self.gamma,
            g_mag: self.g_mag,
            alpha: self.alpha,
            boundary,
            ..LatticeParams::default()
        }
    }
}

#[wasm_bindgen]
impl Lattice {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Lattice {
        Lattice::default()
    }

    #[wasm_bindgen(getter)]
    pub fn model(&self) -> String {
        match self.model {
            ModelKind::HermitianSsh => "hermitian_ssh",
            ModelKind::Dssh => "dssh",
            ModelKind::AntiptDssh => "antipt_dssh",
            ModelKind::NonreciprocalDssh => "nonreciprocal_dssh",
        }
        .to_string()
    }

    pub fn set_model(&mut self, name: &str) -> Result<(), String> {
        self.model = model_kind(name)?;
        Ok(())
    }

    /// `Γr = γ + Γ1 + Γ2`, the radius edge modes sit on.
    pub fn gamma_r(&self) -> f64 {
        self.params(Boundary::Open).gamma_r()
    }

    /// Eigenvalues as `[re0, im0, re1, im1, ...]`.
    pub fn spectrum(&self, periodic: bool) -> Result<Vec<f64>, String> {
        let b = if periodic { Boundary::Periodic } else { Boundary::Open };
        let h = build(self.model, &self.params(b)).map_err(|e| e.to_string())?;
        let ev = eigenvalues(&h).map_err(|e| e.to_string())?;
        Ok(ev.iter().flat_map(|z| [z.re, z.im]).collect())
    }

    /// Region codes over `α ∈ [0, π]` (rows) and `|G| ∈ [0, g_max]`
    /// (columns): 0 single boundary, 1 double boundary, 2 no topology.
    pub fn phase_diagram(&self, n_alpha: usize, n_g: usize, g_max: f64) -> Result<Vec<u8>, String> {
        let alphas = linspace(0.0, std::f64::consts::PI, n_alpha);
        let gs = linspace(0.0, g_max, n_g);
        let pts = phase_diagram(&alphas, &gs, self.gamma2).map_err(|e| e.to_string())?;
        Ok(pts
            .iter()
            .map(|p| match p.boundaries.region {
                Region::SingleBoundary => 0,
                Region::DoubleBoundary => 1,
                Region::NoTopology => 2,
            })
            .collect())
    }

    /// Unit-normalized `|R_n(j)|` for every OBC mode, mode-major
    /// (`modes × sites`), modes ordered by real part.
    pub fn skin_profiles(&self) -> Result<Vec<f64>, String> {
        let h = build(self.model, &self.params(Boundary::Open)).map_err(|e| e.to_string())?;
        let spec = eig_biorthogonal_lenient(&h).map_err(|e| e.to_string())?;
        let mut order: Vec<usize> = (0..spec.len()).collect();
        order.sort_by(|&a, &b| spec.eigenvalues[a].re.total_cmp(&spec.eigenvalues[b].re));
        Ok(order.iter().flat_map(|&n| spec.right_unit(n).into_iter().map(|z| z.norm())).collect())
    }

    /// Fraction of OBC modes whose weight centroid is in the left quarter.
    pub fn left_localized_fraction(&self) -> Result<f64, String> {
        let h = build(self.model, &self.params(Boundary::Open)).map_err(|e| e.to_string())?;
        let spec = eig_biorthogonal_lenient(&h).map_err(|e| e.to_string())?;
        Ok(skin_report(&spec).fraction_left_localized)
    }
}
