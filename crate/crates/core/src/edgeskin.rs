//! Analytic Γr-modes of broken and full non-reciprocal chains, biorthogonal
//! unit-cell projections, and localization metrics for the skin effect.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{build_nonreciprocal, Boundary, ChainTermination, LatticeParams};
use crate::matrix::{inner, norm2, C64, I, ONE, ZERO};
use crate::spectral::Spectrum;

#[derive(Clone, Debug, PartialEq)]
pub struct BrokenChainState {
    pub right: Vec<C64>,
    pub left: Vec<C64>,
    /// `Γ- Γ+ / Γ2²`
    pub z: C64,
    /// `N_L^* N_R = Z^{N+1} (Z^{-1} - 1) / (1 - Z^N)`
    pub norm_product: C64,
}

fn check_regime(p: &LatticeParams) -> Result<C64> {
    p.validate()?;
    if p.boundary != Boundary::Open {
        return Err(Error::invalid("edge states are defined for open chains"));
    }
    if p.delta_bar() != 0.0 {
        return Err(Error::OutOfRegime("analytic Γr-modes require Δ̄ = 0".into()));
    }
    if p.gamma2 == 0.0 {
        return Err(Error::invalid("gamma2 must be nonzero"));
    }
    let tiny = 1e-12 * p.scale();
    if p.gamma_plus().norm() < tiny {
        return Err(Error::MaximallyNonreciprocal("Γ+ = 0".into()));
    }
    if p.gamma_minus().norm() < tiny {
        return Err(Error::MaximallyNonreciprocal("Γ- = 0".into()));
    }
    let z = p.z().expect("gamma2 checked");
    let zn = z.powu(p.n_cells as u32);
    if (zn - ONE).norm() < 1e-12 {
        return Err(Error::NormalizationSingular { z_re: z.re, z_im: z.im });
    }
    Ok(z)
}

pub fn norm_product(z: C64, n_cells: usize) -> C64 {
    let zn = z.powu(n_cells as u32);
    z.powu(n_cells as u32 + 1) * (z.inv() - ONE) / (ONE - zn)
}

/// Exact `-iΓr` eigenstates of the chain missing `c_N` (`BrokenB`) or `b_1`
/// (`BrokenC`), scaled so that `<L|R> = 1`.
pub fn broken_chain_states(p: &LatticeParams, which: ChainTermination) -> Result<BrokenChainState> {
    if which == ChainTermination::Full {
        return Err(Error::invalid("broken_chain_states needs a broken termination"));
    }
    let z = check_regime(p)?;
    let n = p.n_cells;
    let np = norm_product(z, n);
    let nr = np.sqrt();
    let nl = nr.conj();
    let (gp, gm, g2) = (p.gamma_plus(), p.gamma_minus(), p.gamma2);
    let mut right = vec![ZERO; 2 * n - 1];
    let mut left = vec![ZERO; 2 * n - 1];
    match which {
        ChainTermination::BrokenB => {
            let r = -g2 / gp;
            let l = -g2 / gm.conj();
            for m in 1..=n {
                let e = (n - m + 1) as u32;
                right[2 * (m - 1)] = nr * r.powu(e);
                left[2 * (m - 1)] = nl * l.powu(e);
            }
        }
        ChainTermination::BrokenC => {
            let r = -g2 / gm;
            let l = -g2 / gp.conj();
            for m in 1..=n {
                // c_m sits at 2m - 2 once b_1 is dropped
                right[2 * m - 2] = nr * r.powu(m as u32);
                left[2 * m - 2] = nl * l.powu(m as u32);
            }
        }
        ChainTermination::Full => unreachable!(),
    }
    Ok(BrokenChainState { right, left, z, norm_product: np })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeStateSet {
    pub psi_r_plus: Vec<C64>,
    pub psi_r_minus: Vec<C64>,
    pub psi_l_plus: Vec<C64>,
    pub psi_l_minus: Vec<C64>,
    pub r_b: Vec<C64>,
    pub l_b: Vec<C64>,
    pub r_c: Vec<C64>,
    pub l_c: Vec<C64>,
    pub z: C64,
    pub norm_product: C64,
    /// `max_± ||(H_full + iΓr) ψ_R^±||`
    pub residual_norm: f64,
    /// `|Z| < 1`: the states become exact as `N → ∞`.
    pub eigenstate_valid: bool,
}

/// `(r_b ⊕ 0 ± 0 ⊕ r_c) / √2` on the full `2N` chain.
pub fn full_chain_states(p: &LatticeParams) -> Result<EdgeStateSet> {
    let b = broken_chain_states(p, ChainTermination::BrokenB)?;
    let cst = broken_chain_states(p, ChainTermination::BrokenC)?;
    let d = 2 * p.n_cells;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let combine = |x: &[C64], y: &[C64], sign: f64| -> Vec<C64> {
        let mut v = vec![ZERO; d];
        for (i, &xi) in x.iter().enumerate() {
            v[i] += xi * s;
        }
        for (i, &yi) in y.iter().enumerate() {
            v[i + 1] += yi * s * sign;
        }
        v
    };
    let psi_r_plus = combine(&b.right, &cst.right, 1.0);
    let psi_r_minus = combine(&b.right, &cst.right, -1.0);
    let psi_l_plus = combine(&b.left, &cst.left, 1.0);
    let psi_l_minus = combine(&b.left, &cst.left, -1.0);

    // Each broken-chain state is exact on its own sub-chain, so on the full
    // chain only the link to the added site leaks: row c_N picks up b_N and
    // row b_1 picks up c_1. A direct matvec would lose everything to
    // cancellation between entries of size |Γ2/Γ±|^N.
    let h = build_nonreciprocal(p, ChainTermination::Full)?.shift(I * p.gamma_r());
    let leak_b = h[(d - 1, d - 2)] * b.right[d - 2] * s;
    let leak_c = h[(0, 1)] * cst.right[0] * s;
    let residual_norm = (leak_b.norm_sqr() + leak_c.norm_sqr()).sqrt();
    Ok(EdgeStateSet {
        psi_r_plus,
        psi_r_minus,
        psi_l_plus,
        psi_l_minus,
        r_b: b.right,
        l_b: b.left,
        r_c: cst.right,
        l_c: cst.left,
        z: b.z,
        norm_product: b.norm_product,
        residual_norm,
        eigenstate_valid: b.z.norm() < 1.0,
    })
}

/// Unit-cell projections `π_n = <L|P_n|R> / <L|R>` for a full (`2N`) or
/// `BrokenB` (`2N - 1`) chain; see [`projection_profile_for`] for `BrokenC`.
pub fn projection_profile(left: &[C64], right: &[C64], n_cells: usize) -> Result<Vec<C64>> {
    let term = if left.len() == 2 * n_cells { ChainTermination::Full } else { ChainTermination::BrokenB };
    projection_profile_for(left, right, n_cells, term)
}

pub fn projection_profile_for(
    left: &[C64],
    right: &[C64],
    n_cells: usize,
    term: ChainTermination,
) -> Result<Vec<C64>> {
    let want = match term {
        ChainTermination::Full => 2 * n_cells,
        _ => 2 * n_cells - 1,
    };
    if left.len() != want || right.len() != want || n_cells == 0 {
        return Err(Error::DimensionMismatch {
            expected: format!("{want} components"),
            found: format!("{} and {}", left.len(), right.len()),
        });
    }
    let o = inner(left, right);
    // zero within the rounding of the sum itself; skin modes have
    // |<L|R>| far below |L||R| yet a perfectly resolved overlap
    let bound: f64 = left.iter().zip(right).map(|(l, r)| l.norm() * r.norm()).sum();
    if o.norm() <= 64.0 * f64::EPSILON * bound {
        return Err(Error::SelfOrthogonal);
    }
    // site index of (cell, sublattice) or None when absent
    let offset = usize::from(term == ChainTermination::BrokenC);
    let site = |cell: usize, sub: usize| -> Option<usize> {
        let full = 2 * cell + sub;
        match term {
            ChainTermination::Full => Some(full),
            ChainTermination::BrokenB => (full < want).then_some(full),
            ChainTermination::BrokenC => (full >= 1).then(|| full - offset),
        }
    };
    Ok((0..n_cells)
        .map(|cell| {
            let mut acc = ZERO;
            for sub in 0..2 {
                if let Some(i) = site(cell, sub) {
                    acc += left[i].conj() * right[i];
                }
            }
            acc / o
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeLocalization {
    pub center_of_mass: f64,
    pub edge_weight_left: f64,
    pub edge_weight_right: f64,
    pub participation_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub modes: Vec<ModeLocalization>,
    /// Fraction of modes with `center_of_mass < LEFT_CENTROID`.
    pub fraction_left_localized: f64,
}

pub const LEFT_CENTROID: f64 = 0.25;
pub const EDGE_FRACTION: f64 = 0.1;

/// Metrics of one vector using weights `|v_j|²` on sites `x_j = j / (D - 1)`.
pub fn localization(v: &[C64]) -> ModeLocalization {
    let d = v.len();
    let w: Vec<f64> = v.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = w.iter().sum();
    if d == 0 || total == 0.0 {
        return ModeLocalization {
            center_of_mass: 0.0,
            edge_weight_left: 0.0,
            edge_weight_right: 0.0,
            participation_ratio: 0.0,
        };
    }
    let x = |j: usize| if d > 1 { j as f64 / (d - 1) as f64 } else { 0.0 };
    let center_of_mass = w.iter().enumerate().map(|(j, wj)| wj * x(j)).sum::<f64>() / total;
    let window = ((EDGE_FRACTION * d as f64).ceil() as usize).min(d / 2).max(usize::from(d == 1));
    let edge_weight_left = w[..window].iter().sum::<f64>() / total;
    let edge_weight_right = if d > 1 { w[d - window..].iter().sum::<f64>() / total } else { 0.0 };
    let sum4: f64 = w.iter().map(|wj| wj * wj).sum();
    let participation_ratio = total * total / (d as f64 * sum4);
    ModeLocalization { center_of_mass, edge_weight_left, edge_weight_right, participation_ratio }
}

/// Localization of every unit-norm right eigenvector.
pub fn skin_report(spec: &Spectrum) -> LocalizationReport {
    let modes: Vec<ModeLocalization> = (0..spec.len()).map(|n| localization(&spec.right(n))).collect();
    let left = modes.iter().filter(|m| m.center_of_mass < LEFT_CENTROID).count();
    let fraction_left_localized = if modes.is_empty() { 0.0 } else { left as f64 / modes.len() as f64 };
    LocalizationReport { modes, fraction_left_localized }
}

/// Symmetric Hausdorff distance between two point sets in the complex plane.
pub fn hausdorff(a: &[C64], b: &[C64]) -> f64 {
    let directed = |x: &[C64], y: &[C64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() { 0.0 } else { f64::INFINITY };
    }
    directed(a, b).max(directed(b, a))
}

/// Largest normalized overlap `|<ψ̂|v̂>|` between `psi` and the right
/// eigenvectors of `spec` listed in `indices`.
pub fn best_overlap(psi: &[C64], spec: &Spectrum, indices: &[usize]) -> f64 {
    let pn = norm2(psi);
    indices
        .iter()
        .map(|&i| {
            let v = spec.right(i);
            inner(psi, &v).norm() / (pn * norm2(&v))
        })
        .fold(0.0, f64::max)
}
