//! Bloch eigenvectors, biorthogonal Berry connection, winding numbers and
//! the `(|G|, α)` phase diagram of the non-reciprocal chain.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{bloch, LatticeParams, ModelKind};
use crate::matrix::{c, inner, normalized, ComplexMatrix, C64, I, ONE};
use crate::spectral::eig_biorthogonal;

/// Biorthonormal eigenpairs of a 2×2 Bloch matrix; `+` is the branch with
/// the larger `Re E + Im E`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochPairs {
    pub e_plus: C64,
    pub e_minus: C64,
    pub r_plus: [C64; 2],
    pub r_minus: [C64; 2],
    pub l_plus: [C64; 2],
    pub l_minus: [C64; 2],
}

/// `L` to unit norm, `R` rescaled so `<L|R> = 1`.
fn biorthonormalize(r: [C64; 2], l: [C64; 2]) -> Result<([C64; 2], [C64; 2])> {
    let l = normalized(&l);
    let o = inner(&l, &r);
    if o.norm() < 1e-14 * crate::matrix::norm2(&r) {
        return Err(Error::SelfOrthogonal);
    }
    Ok(([r[0] / o, r[1] / o], [l[0], l[1]]))
}

/// Closed-form eigenvectors for the Hermitian, DSSH and anti-PT families;
/// the generic 2×2 formula for the non-reciprocal one.
pub fn analytic_bloch_vectors(model: ModelKind, p: &LatticeParams, k: f64) -> Result<BlochPairs> {
    let h = bloch(model, p, k)?;
    match model {
        ModelKind::HermitianSsh => {
            let (re, im) = (p.t1 + p.t2 * k.cos(), p.t2 * k.sin());
            let r = re.hypot(im);
            let phi = im.atan2(re);
            let ep = C64::from_polar(1.0, phi);
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let plus = [c(s, 0.0), ep * s];
            let minus = [c(-s, 0.0), ep * s];
            Ok(BlochPairs {
                e_plus: c(r, 0.0),
                e_minus: c(-r, 0.0),
                r_plus: plus,
                r_minus: minus,
                l_plus: plus,
                l_minus: minus,
            })
        }
        ModelKind::Dssh => {
            if p.delta1 != p.delta2 {
                return Err(Error::OutOfRegime(
                    "unequal detunings break the anti-Hermitian form; use antipt_dssh".into(),
                ));
            }
            let (bx, by) = pseudo_field(p, k);
            let rho = bx.hypot(by);
            let phi = by.atan2(bx);
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let ie = I * C64::from_polar(1.0, phi);
            let plus = [c(s, 0.0), ie * s];
            let minus = [c(s, 0.0), -ie * s];
            let base = c(-p.delta1, -p.gamma_r());
            Ok(BlochPairs {
                e_plus: base + I * rho,
                e_minus: base - I * rho,
                r_plus: plus,
                r_minus: minus,
                l_plus: plus,
                l_minus: minus,
            })
        }
        ModelKind::AntiptDssh => {
            let (bx, by) = pseudo_field(p, k);
            let db = p.delta_bar();
            let h2 = bx * bx + by * by;
            if db * db >= h2 {
                return Err(Error::OutOfRegime(format!(
                    "|Δ̄| = {} is not below |h(k)| = {} at k = {k}",
                    db.abs(),
                    h2.sqrt()
                )));
            }
            let r = (h2 - db * db).sqrt();
            let sh = db / r;
            let ch = (1.0 + sh * sh).sqrt();
            let phi = by.atan2(bx);
            let top = -I * ch * C64::from_polar(1.0, -phi);
            let (rp, lp) = biorthonormalize([top, c(1.0, sh)], [top, c(1.0, -sh)])?;
            let (rm, lm) = biorthonormalize([top, -c(1.0, -sh)], [top, -c(1.0, sh)])?;
            let gr = p.gamma_r();
            Ok(BlochPairs {
                e_plus: c(0.0, r - gr),
                e_minus: c(0.0, -r - gr),
                r_plus: rp,
                r_minus: rm,
                l_plus: lp,
                l_minus: lm,
            })
        }
        ModelKind::NonreciprocalDssh => generic_pairs(&h),
    }
}

/// `B_x = Γ2 sin k`, `B_y = -(Γ1 + Γ2 cos k)`, so that `iΓ1 + iΓ2 e^{-ik} = B_x - i B_y`.
pub fn pseudo_field(p: &LatticeParams, k: f64) -> (f64, f64) {
    (p.gamma2 * k.sin(), -(p.gamma1 + p.gamma2 * k.cos()))
}

fn generic_pairs(h: &ComplexMatrix) -> Result<BlochPairs> {
    let (a, b, cc, d) = (h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]);
    let (ep, em) = crate::hamiltonians::eig2(h);
    if (ep - em).norm() < 1e-12 * (1.0 + h.norm_max()) {
        return Err(Error::Defective { overlap: 0.0 });
    }
    let right = |lam: C64| -> [C64; 2] {
        let v1 = [b, lam - a];
        let v2 = [lam - d, cc];
        if crate::matrix::norm2(&v1) >= crate::matrix::norm2(&v2) {
            v1
        } else {
            v2
        }
    };
    let left = |lam: C64| -> [C64; 2] {
        // eigenvector of H^† for conj(lam)
        let v1 = [cc.conj(), (lam - a).conj()];
        let v2 = [(lam - d).conj(), b.conj()];
        if crate::matrix::norm2(&v1) >= crate::matrix::norm2(&v2) {
            v1
        } else {
            v2
        }
    };
    let (rp, lp) = biorthonormalize(right(ep), left(ep))?;
    let (rm, lm) = biorthonormalize(right(em), left(em))?;
    Ok(BlochPairs { e_plus: ep, e_minus: em, r_plus: rp, r_minus: rm, l_plus: lp, l_minus: lm })
}

/// `max |σz H σz + H|`; zero for a chiral-symmetric 2×2 matrix.
pub fn chirality_violation(h: &ComplexMatrix) -> f64 {
    let mut m = h.clone();
    m[(0, 1)] = -m[(0, 1)];
    m[(1, 0)] = -m[(1, 0)];
    m.add(h).norm_max()
}

/// `max |(PT) H (PT) + H|` with `PT = σx K`.
pub fn anti_pt_violation(h: &ComplexMatrix) -> f64 {
    let sx = ComplexMatrix::from_rows(&[vec![c(0.0, 0.0), ONE], vec![ONE, c(0.0, 0.0)]]);
    sx.matmul(&h.conj()).matmul(&sx).add(h).norm_max()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindingResult {
    pub nu: f64,
    pub k_samples: usize,
    /// Distance of `nu` to the nearest integer.
    pub residual: f64,
}

/// Right/left eigenvector field of one band on the closed grid
/// `k_j = 2πj/n`, `j = 0..n`, in a smooth periodic gauge with `<L_j|R_j> = 1`.
#[derive(Clone, Debug)]
pub struct BlochField {
    pub k: Vec<f64>,
    pub right: Vec<[C64; 2]>,
    pub left: Vec<[C64; 2]>,
}

/// Builds the `+` band field: numeric eigenpairs, nearest-eigenvalue branch
/// continuation, parallel transport and a uniform twist closing the loop.
pub fn bloch_field(model: ModelKind, p: &LatticeParams, n_k: usize) -> Result<BlochField> {
    let dk = 2.0 * PI / n_k as f64;
    let mut ks = Vec::with_capacity(n_k);
    let mut right: Vec<[C64; 2]> = Vec::with_capacity(n_k + 1);
    let mut left: Vec<[C64; 2]> = Vec::with_capacity(n_k + 1);
    let mut prev_e: Option<C64> = None;
    for j in 0..=n_k {
        let k = j as f64 * dk;
        let spec = eig_biorthogonal(&bloch(model, p, k)?)?;
        let (e0, e1) = (spec.eigenvalues[0], spec.eigenvalues[1]);
        let gap = (e0 - e1).norm() * 0.5;
        if gap < 1e-9 {
            return Err(Error::GapClosed { k, gap });
        }
        let idx = match prev_e {
            None => usize::from(e1.re + e1.im > e0.re + e0.im),
            Some(pe) => usize::from((e1 - pe).norm() < (e0 - pe).norm()),
        };
        prev_e = Some(spec.eigenvalues[idx]);
        let r = spec.right(idx);
        let l = spec.left(idx);
        let (mut r, mut l) = ([r[0], r[1]], [l[0], l[1]]);
        if let Some(lp) = left.last() {
            let o = inner(lp, &r);
            if o.norm() > 0.0 {
                let ph = o / o.norm();
                r = [r[0] / ph, r[1] / ph];
                l = [l[0] * ph.conj(), l[1] * ph.conj()];
            }
        }
        if j < n_k {
            ks.push(k);
        }
        right.push(r);
        left.push(l);
    }
    // R_n = c R_0 after transport; spread c^{-1} uniformly over the loop
    let closure = inner(&left[0], &right[n_k]);
    let log_c = closure.ln();
    right.pop();
    left.pop();
    for j in 0..n_k {
        let f = (-log_c * (j as f64 / n_k as f64)).exp();
        right[j] = [right[j][0] * f, right[j][1] * f];
        let g = f.inv().conj();
        left[j] = [left[j][0] * g, left[j][1] * g];
    }
    Ok(BlochField { k: ks, right, left })
}

/// `ν = (1/π) ∮ Re i<L|∂_k R> dk`, discretized as the loop of overlap phases
/// `ν = -(1/π) Σ_j arg <L_j|R_{j+1}>`, which is invariant under any
/// k-dependent rescaling of the field. Reduced modulo 2 into `[-1/2, 3/2)`.
pub fn winding_from_field(field: &BlochField) -> WindingResult {
    let n = field.right.len();
    let sum: f64 = (0..n).map(|j| inner(&field.left[j], &field.right[(j + 1) % n]).arg()).sum();
    let raw = -sum / PI;
    let nu = (raw + 0.5).rem_euclid(2.0) - 0.5;
    WindingResult { nu, k_samples: n, residual: (nu - nu.round()).abs() }
}

pub fn winding_number(model: ModelKind, p: &LatticeParams, n_k: usize) -> Result<WindingResult> {
    if n_k < 64 {
        return Err(Error::invalid("winding_number needs n_k >= 64"));
    }
    Ok(winding_from_field(&bloch_field(model, p, n_k)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    SingleBoundary,
    DoubleBoundary,
    NoTopology,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::SingleBoundary => "single_boundary",
            Region::DoubleBoundary => "double_boundary",
            Region::NoTopology => "no_topology",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseBoundaries {
    pub a_plus: C64,
    pub a_minus: C64,
    pub region: Region,
    pub x_plus: Option<f64>,
    pub x_minus: Option<f64>,
}

/// `A± = -|G|² cos 2α ± sqrt(Γ2⁴ - |G|⁴ sin² 2α)`.
pub fn phase_boundaries(g_mag: f64, alpha: f64, gamma2: f64) -> Result<PhaseBoundaries> {
    if !(gamma2 > 0.0) || !gamma2.is_finite() {
        return Err(Error::invalid("gamma2 must be positive"));
    }
    if !(g_mag.is_finite() && alpha.is_finite()) || g_mag < 0.0 {
        return Err(Error::invalid("g_mag must be finite and nonnegative, alpha finite"));
    }
    let g2 = g_mag * g_mag;
    let s2 = (2.0 * alpha).sin();
    let disc = gamma2.powi(4) - g2 * g2 * s2 * s2;
    let root = c(disc, 0.0).sqrt();
    let base = c(-g2 * (2.0 * alpha).cos(), 0.0);
    let (a_plus, a_minus) = (base + root, base - root);
    let region = if disc < 0.0 {
        Region::NoTopology
    } else if a_minus.re >= 0.0 {
        Region::DoubleBoundary
    } else {
        Region::SingleBoundary
    };
    let x = |a: C64| (disc >= 0.0 && a.re >= 0.0).then(|| a.re.sqrt());
    Ok(PhaseBoundaries { a_plus, a_minus, region, x_plus: x(a_plus), x_minus: x(a_minus) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseClassification {
    pub a_plus: C64,
    pub a_minus: C64,
    pub region: Region,
    pub x_plus: Option<f64>,
    pub x_minus: Option<f64>,
    pub gamma_r_modes_predicted: bool,
}

/// Edge-mode existence inequality
/// `sqrt((Γ1² - |G|²)² + 4|G|²Γ1² cos²α) < Γ2²`.
pub fn edge_mode_condition(gamma1: f64, g_mag: f64, alpha: f64, gamma2: f64) -> bool {
    let (g1s, gs) = (gamma1 * gamma1, g_mag * g_mag);
    let ca = alpha.cos();
    ((g1s - gs).powi(2) + 4.0 * gs * g1s * ca * ca).sqrt() < gamma2 * gamma2
}

pub fn classify_point(p: &LatticeParams) -> Result<PhaseClassification> {
    p.validate()?;
    let b = phase_boundaries(p.g_mag, p.alpha, p.gamma2)?;
    Ok(PhaseClassification {
        a_plus: b.a_plus,
        a_minus: b.a_minus,
        region: b.region,
        x_plus: b.x_plus,
        x_minus: b.x_minus,
        gamma_r_modes_predicted: edge_mode_condition(p.gamma1, p.g_mag, p.alpha, p.gamma2),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub alpha: f64,
    pub g_mag: f64,
    pub boundaries: PhaseBoundaries,
}

/// Row-major over `alpha_grid` (outer) and `g_grid` (inner).
pub fn phase_diagram(alpha_grid: &[f64], g_grid: &[f64], gamma2: f64) -> Result<Vec<PhasePoint>> {
    if alpha_grid.is_empty() || g_grid.is_empty() {
        return Err(Error::invalid("phase diagram grids must be nonempty"));
    }
    let mut out = Vec::with_capacity(alpha_grid.len() * g_grid.len());
    for &alpha in alpha_grid {
        for &g_mag in g_grid {
            out.push(PhasePoint { alpha, g_mag, boundaries: phase_boundaries(g_mag, alpha, gamma2)? });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dssh() -> LatticeParams {
        LatticeParams { gamma1: 1.0, gamma2: 2.0, gamma: 3.0, ..Default::default() }
    }

    fn residual(h: &ComplexMatrix, e: C64, v: &[C64; 2]) -> f64 {
        let hv = h.matvec(v);
        ((hv[0] - e * v[0]).norm_sqr() + (hv[1] - e * v[1]).norm_sqr()).sqrt()
    }

    #[test]
    fn hermitian_vectors_solve_bloch() {
        let p = LatticeParams { t1: 0.7, t2: 1.3, ..Default::default() };
        for k in [0.0, 0.4, 2.0, PI, 5.5] {
            let h = bloch(ModelKind::HermitianSsh, &p, k).unwrap();
            let v = analytic_bloch_vectors(ModelKind::HermitianSsh, &p, k).unwrap();
            assert!(residual(&h, v.e_plus, &v.r_plus) < 1e-12);
            assert!(residual(&h, v.e_minus, &v.r_minus) < 1e-12);
        }
    }

    #[test]
    fn dssh_left_equals_right() {
        for k in [0.1, 1.0, 3.0] {
            let v = analytic_bloch_vectors(ModelKind::Dssh, &dssh(), k).unwrap();
            assert_eq!(v.r_plus, v.l_plus);
            assert_eq!(v.r_minus, v.l_minus);
            let h = bloch(ModelKind::Dssh, &dssh(), k).unwrap();
            assert!(residual(&h, v.e_plus, &v.r_plus) < 1e-12);
            assert!(residual(&h, v.e_minus, &v.r_minus) < 1e-12);
        }
    }

    #[test]
    fn antipt_vectors_at_quarter_turn() {
        let p = LatticeParams { delta1: 0.5, delta2: -0.5, ..dssh() };
        let k = PI / 2.0;
        let h = bloch(ModelKind::AntiptDssh, &p, k).unwrap();
        let v = analytic_bloch_vectors(ModelKind::AntiptDssh, &p, k).unwrap();
        assert!(residual(&h, v.e_plus, &v.r_plus) < 1e-10);
        assert!(residual(&h, v.e_minus, &v.r_minus) < 1e-10);
        let ha = h.adjoint();
        assert!(residual(&ha, v.e_plus.conj(), &v.l_plus) < 1e-10);
        assert!(residual(&ha, v.e_minus.conj(), &v.l_minus) < 1e-10);
        assert!((inner(&v.l_plus, &v.r_minus)).norm() < 1e-12);
    }

    #[test]
    fn antipt_reduces_to_dssh_form() {
        let p = dssh();
        for k in [0.3, 2.2] {
            let a = analytic_bloch_vectors(ModelKind::AntiptDssh, &p, k).unwrap();
            let d = analytic_bloch_vectors(ModelKind::Dssh, &p, k).unwrap();
            // equal up to a global phase
            let ov = inner(&d.r_plus, &a.r_plus).norm() / crate::matrix::norm2(&a.r_plus);
            assert!((ov - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn antipt_out_of_regime() {
        let p = LatticeParams { delta1: 5.0, delta2: -5.0, ..dssh() };
        assert!(matches!(
            analytic_bloch_vectors(ModelKind::AntiptDssh, &p, 0.0),
            Err(Error::OutOfRegime(_))
        ));
    }

    #[test]
    fn windings() {
        let herm = |t1, t2| LatticeParams { t1, t2, ..Default::default() };
        let w = winding_number(ModelKind::HermitianSsh, &herm(0.5, 1.0), 256).unwrap();
        assert!((w.nu - 1.0).abs() < 1e-6, "{w:?}");
        let w = winding_number(ModelKind::HermitianSsh, &herm(2.0, 1.0), 256).unwrap();
        assert!(w.nu.abs() < 1e-6, "{w:?}");
        let w = winding_number(ModelKind::Dssh, &dssh(), 256).unwrap();
        assert!((w.nu - 1.0).abs() < 1e-6, "{w:?}");
    }

    #[test]
    fn winding_at_boundary_errors() {
        let p = LatticeParams { t1: 1.0, t2: 1.0, ..Default::default() };
        assert!(matches!(winding_number(ModelKind::HermitianSsh, &p, 64), Err(Error::GapClosed { .. })));
        assert!(winding_number(ModelKind::HermitianSsh, &p, 10).is_err());
    }

    #[test]
    fn boundaries_at_quarter_turn() {
        let b = phase_boundaries(3.0, PI / 2.0, 2.0).unwrap();
        assert!((b.a_plus.re - 13.0).abs() < 1e-12 && (b.a_minus.re - 5.0).abs() < 1e-12);
        assert!((b.x_plus.unwrap() - 13f64.sqrt()).abs() < 1e-12);
        assert!((b.x_minus.unwrap() - 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(b.region, Region::DoubleBoundary);
        assert_eq!(phase_boundaries(3.0, PI / 4.0, 2.0).unwrap().region, Region::NoTopology);
        let z = phase_boundaries(0.0, 1.234, 2.0).unwrap();
        assert_eq!(z.region, Region::SingleBoundary);
        assert!((z.a_plus.re - 4.0).abs() < 1e-12 && (z.a_minus.re + 4.0).abs() < 1e-12);
    }

    #[test]
    fn chirality_broken_by_detuning() {
        let p = LatticeParams { delta1: 0.5, delta2: -0.5, gamma: 0.0, gamma1: 0.0, gamma2: 0.0, ..dssh() };
        let h = bloch(ModelKind::AntiptDssh, &p, 0.7).unwrap();
        assert!(chirality_violation(&h) > 0.0);
        assert!(anti_pt_violation(&h.shift(c(0.0, p.gamma_r()))) < 1e-15);
    }
}
