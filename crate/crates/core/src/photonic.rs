//! Four-sublattice bosonic chain and elimination of its fast modes.
//!
//! Modes are ordered slow first, `(b_1, c_1, b_2, c_2, ..., a_1, d_1, a_2, d_2, ...)`,
//! and the generator acts as `ẋ = -i M x` in the frame rotating at `(Δ1+Δ2)/2`
//! relative to the `a` resonance. Decay rates are amplitude rates: a mode with
//! rate `κ` carries `-iκ` on the diagonal.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::eigen::eig;
use crate::error::{Error, Result};
use crate::hamiltonians::{bloch, Boundary, LatticeParams, ModelKind};
use crate::matrix::{c, ComplexMatrix, Lu, C64};

pub const WEAK_COUPLING_RATIO: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhotonicParams {
    pub n_cells: usize,
    /// `g1 = -g2 = g`
    pub g: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub gamma: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub g_mag: f64,
    pub alpha: f64,
    pub boundary: Boundary,
}

impl Default for PhotonicParams {
    /// `g/κ2 = 0.01` with `Γ1 = g²/κ1 = 5e-5`, `Γ2 = g²/κ2 = 1e-4`.
    fn default() -> Self {
        PhotonicParams {
            n_cells: 25,
            g: 0.01,
            kappa1: 2.0,
            kappa2: 1.0,
            gamma: 1.5e-4,
            delta1: 0.0,
            delta2: 0.0,
            g_mag: 0.0,
            alpha: 0.0,
            boundary: Boundary::Periodic,
        }
    }
}

impl PhotonicParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_cells < 1 {
            return Err(Error::invalid("n_cells must be at least 1"));
        }
        let all = [self.g, self.kappa1, self.kappa2, self.gamma, self.delta1, self.delta2, self.g_mag, self.alpha];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("photonic parameters must be finite"));
        }
        if !(self.kappa1 > self.kappa2 && self.kappa2 > 0.0) {
            return Err(Error::invalid(format!(
                "need kappa1 > kappa2 > 0, got kappa1={}, kappa2={}",
                self.kappa1, self.kappa2
            )));
        }
        if self.gamma < 0.0 || self.g_mag < 0.0 {
            return Err(Error::invalid("gamma and g_mag must be nonnegative"));
        }
        Ok(())
    }

    pub fn weak_coupling(&self) -> bool {
        let m = [self.g.abs(), self.g_mag, self.gamma, self.delta1.abs(), self.delta2.abs()]
            .into_iter()
            .fold(0.0, f64::max);
        m / self.kappa1.min(self.kappa2) <= WEAK_COUPLING_RATIO
    }

    /// `Γ1 = g²/κ1`
    pub fn big_gamma1(&self) -> f64 {
        self.g * self.g / self.kappa1
    }

    pub fn big_gamma2(&self) -> f64 {
        self.g * self.g / self.kappa2
    }

    /// Fast-mode frequency offset in the rotating frame.
    pub fn fast_detuning(&self) -> f64 {
        -0.5 * (self.delta1 + self.delta2)
    }

    /// Effective lattice parameters predicted by elimination.
    pub fn lattice_params(&self) -> LatticeParams {
        LatticeParams {
            n_cells: self.n_cells,
            gamma1: self.big_gamma1(),
            gamma2: self.big_gamma2(),
            gamma: self.gamma,
            delta1: self.delta1,
            delta2: self.delta2,
            g_mag: self.g_mag,
            alpha: self.alpha,
            boundary: self.boundary,
            ..LatticeParams::default()
        }
    }

    pub fn slow_indices(&self) -> Vec<usize> {
        (0..2 * self.n_cells).collect()
    }

    pub fn fast_indices(&self) -> Vec<usize> {
        (2 * self.n_cells..4 * self.n_cells).collect()
    }

    fn coherent(&self) -> C64 {
        C64::from_polar(self.g_mag, self.alpha)
    }

    fn model(&self) -> ModelKind {
        if self.g_mag == 0.0 {
            ModelKind::AntiptDssh
        } else {
            ModelKind::NonreciprocalDssh
        }
    }
}

/// Full `4N × 4N` generator.
pub fn build_full_linear(p: &PhotonicParams) -> Result<ComplexMatrix> {
    p.validate()?;
    let n = p.n_cells;
    let db = 0.5 * (p.delta1 - p.delta2);
    let ds = p.fast_detuning();
    let g = c(p.g, 0.0);
    let gc = p.coherent();
    let (b, cc) = (|i: usize| 2 * i, |i: usize| 2 * i + 1);
    let (a, d) = (|i: usize| 2 * n + 2 * i, |i: usize| 2 * n + 2 * i + 1);
    let mut m = ComplexMatrix::zeros(4 * n, 4 * n);
    let couple = |m: &mut ComplexMatrix, x: usize, y: usize, v: C64| {
        m[(x, y)] += v;
        m[(y, x)] += v.conj();
    };
    for i in 0..n {
        m[(b(i), b(i))] = c(db, -p.gamma);
        m[(cc(i), cc(i))] = c(-db, -p.gamma);
        m[(a(i), a(i))] = c(ds, -p.kappa1);
        m[(d(i), d(i))] = c(ds, -p.kappa2);
        couple(&mut m, b(i), a(i), g);
        couple(&mut m, cc(i), a(i), -g);
        couple(&mut m, cc(i), d(i), -g);
        if i > 0 || p.boundary == Boundary::Periodic {
            couple(&mut m, b(i), d((i + n - 1) % n), g);
        }
        couple(&mut m, b(i), cc(i), gc);
    }
    Ok(m)
}

/// Zeroth-order elimination `M_ss - M_sf M_ff⁻¹ M_fs`.
pub fn adiabatic_eliminate(m_full: &ComplexMatrix, slow: &[usize], fast: &[usize]) -> Result<ComplexMatrix> {
    if !m_full.is_square() {
        return Err(Error::DimensionMismatch { expected: "square matrix".into(), found: format!("{}x{}", m_full.rows(), m_full.cols()) });
    }
    let n = m_full.rows();
    if slow.iter().chain(fast).any(|&i| i >= n) {
        return Err(Error::invalid("index out of range"));
    }
    let mss = m_full.select(slow, slow);
    if fast.is_empty() {
        return Ok(mss);
    }
    let lu = Lu::new(&m_full.select(fast, fast))?;
    if lu.min_pivot() < 1e-14 * m_full.norm_max().max(f64::MIN_POSITIVE) {
        return Err(Error::Singular { pivot: lu.min_pivot() });
    }
    let x = lu.solve_matrix(&m_full.select(fast, slow));
    Ok(mss.sub(&m_full.select(slow, fast).matmul(&x)))
}

/// Bloch block of a translation-invariant two-sublattice matrix, read from the
/// first cell's rows. Needs at least three cells so that `±1` neighbors differ.
pub fn bloch_block(m: &ComplexMatrix, k: f64) -> Result<ComplexMatrix> {
    if !m.is_square() || m.rows() % 2 != 0 {
        return Err(Error::invalid("expected a square matrix over two-site cells"));
    }
    let cells = m.rows() / 2;
    if cells < 3 {
        return Err(Error::invalid("Bloch block extraction needs n_cells >= 3"));
    }
    Ok(ComplexMatrix::from_fn(2, 2, |a, b| {
        (0..cells)
            .map(|j| {
                let shift = if j <= cells / 2 { j as f64 } else { j as f64 - cells as f64 };
                m[(a, 2 * j + b)] * C64::from_polar(1.0, k * shift)
            })
            .sum()
    }))
}

/// `4 × 4` Bloch block of the full chain on `(b, c, a, d)`.
pub fn full_bloch(p: &PhotonicParams, k: f64) -> Result<ComplexMatrix> {
    p.validate()?;
    let db = 0.5 * (p.delta1 - p.delta2);
    let ds = p.fast_detuning();
    let g = c(p.g, 0.0);
    let gc = p.coherent();
    let e = C64::from_polar(1.0, -k);
    let mut m = ComplexMatrix::zeros(4, 4);
    m[(0, 0)] = c(db, -p.gamma);
    m[(1, 1)] = c(-db, -p.gamma);
    m[(2, 2)] = c(ds, -p.kappa1);
    m[(3, 3)] = c(ds, -p.kappa2);
    let mut couple = |x: usize, y: usize, v: C64| {
        m[(x, y)] += v;
        m[(y, x)] += v.conj();
    };
    couple(0, 2, g);
    couple(0, 3, g * e);
    couple(1, 2, -g);
    couple(1, 3, -g);
    couple(0, 1, gc);
    Ok(m)
}

/// Exact slow-sector generator at `k`: `X Λ X⁻¹` with `Λ` the two least
/// damped eigenvalues of [`full_bloch`] and `X` the slow components of their
/// eigenvectors.
pub fn projected_bloch(p: &PhotonicParams, k: f64) -> Result<ComplexMatrix> {
    let e = eig(&full_bloch(p, k)?)?;
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| e.values[j].im.total_cmp(&e.values[i].im));
    let (i, j) = (order[0], order[1]);
    let x = ComplexMatrix::from_rows(&[
        vec![e.vectors[(0, i)], e.vectors[(0, j)]],
        vec![e.vectors[(1, i)], e.vectors[(1, j)]],
    ]);
    let lam = ComplexMatrix::from_rows(&[vec![e.values[i], c(0.0, 0.0)], vec![c(0.0, 0.0), e.values[j]]]);
    Ok(x.matmul(&lam).matmul(&x.inverse()?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Elimination {
    /// Real-space Schur complement at the slow central frequency.
    Schur,
    /// Exact slow-sector projection per `k`.
    SpectralProjection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryComparison {
    pub k: f64,
    /// `"bb"`, `"bc"`, `"cb"` or `"cc"`.
    pub entry: String,
    pub numeric: C64,
    pub analytic: C64,
    pub abs_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochErrorReport {
    pub max_abs_error: f64,
    /// `max_abs_error` over the largest analytic entry.
    pub max_rel_error: f64,
    pub table: Vec<EntryComparison>,
}

const ENTRY_NAMES: [&str; 4] = ["bb", "bc", "cb", "cc"];

/// Numeric effective Bloch blocks at `k = 2πj/n_k`.
pub fn effective_blocks(p: &PhotonicParams, n_k: usize, method: Elimination) -> Result<Vec<(f64, ComplexMatrix)>> {
    if p.boundary != Boundary::Periodic {
        return Err(Error::invalid("effective Bloch comparison needs periodic boundary"));
    }
    if n_k < 1 {
        return Err(Error::invalid("n_k must be at least 1"));
    }
    let ks: Vec<f64> = (0..n_k).map(|j| 2.0 * PI * j as f64 / n_k as f64).collect();
    match method {
        Elimination::Schur => {
            let meff = adiabatic_eliminate(&build_full_linear(p)?, &p.slow_indices(), &p.fast_indices())?;
            ks.into_iter().map(|k| Ok((k, bloch_block(&meff, k)?))).collect()
        }
        Elimination::SpectralProjection => ks.into_iter().map(|k| Ok((k, projected_bloch(p, k)?))).collect(),
    }
}

/// Entrywise comparison of the numeric effective Bloch matrix with the
/// analytic dissipative (or non-reciprocal) Bloch matrix.
pub fn effective_bloch_error(p: &PhotonicParams, n_k: usize, method: Elimination) -> Result<BlochErrorReport> {
    let lp = p.lattice_params();
    let mut table = Vec::with_capacity(4 * n_k);
    let (mut max_abs, mut max_ref) = (0.0f64, 0.0f64);
    for (k, num) in effective_blocks(p, n_k, method)? {
        let ana = bloch(p.model(), &lp, k)?;
        for (e, name) in ENTRY_NAMES.iter().enumerate() {
            let (r, col) = (e / 2, e % 2);
            let abs_err = (num[(r, col)] - ana[(r, col)]).norm();
            max_abs = max_abs.max(abs_err);
            max_ref = max_ref.max(ana[(r, col)].norm());
            table.push(EntryComparison { k, entry: name.to_string(), numeric: num[(r, col)], analytic: ana[(r, col)], abs_err });
        }
    }
    let max_rel_error = if max_ref > 0.0 { max_abs / max_ref } else { max_abs };
    Ok(BlochErrorReport { max_abs_error: max_abs, max_rel_error, table })
}

/// Dissipative couplings read off the effective Bloch matrix at `k = 0, π`.
/// The coherent term only shifts the real part of `(bc + cb)/2`.
pub fn fit_gammas(p: &PhotonicParams, method: Elimination) -> Result<(f64, f64)> {
    let sym = |m: &ComplexMatrix| ((m[(0, 1)] + m[(1, 0)]) * 0.5).im;
    let (s0, spi) = match method {
        Elimination::Schur => {
            if p.boundary != Boundary::Periodic {
                return Err(Error::invalid("fit needs periodic boundary"));
            }
            let meff = adiabatic_eliminate(&build_full_linear(p)?, &p.slow_indices(), &p.fast_indices())?;
            (sym(&bloch_block(&meff, 0.0)?), sym(&bloch_block(&meff, PI)?))
        }
        Elimination::SpectralProjection => (sym(&projected_bloch(p, 0.0)?), sym(&projected_bloch(p, PI)?)),
    };
    Ok((0.5 * (s0 + spi), 0.5 * (s0 - spi)))
}
