//! Biorthogonal eigendecomposition, Γr-mode detection and band sweeps.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::eigen::eig;
use crate::error::{Error, Result};
use crate::hamiltonians::{bloch, eig2, LatticeParams, ModelKind};
use crate::matrix::{inner, norm2, ComplexMatrix, C64, ONE, ZERO};

/// Pair overlaps `|<L|R>|` of unit vectors below this are treated as defective.
pub const DEFECTIVE_OVERLAP: f64 = 1e-10;
const CLUSTER_REL_TOL: f64 = 1e-6;
const SORT_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    /// Column `n` is `R_n`.
    pub right_vectors: ComplexMatrix,
    /// Column `n` is `L_n`, unit norm, with `<L_n|R_n> = 1`.
    pub left_vectors: ComplexMatrix,
    pub biorthonormal: bool,
    /// Smallest `|<L|R>|` between unit-norm partners; small values flag
    /// proximity to an exceptional point.
    pub min_pair_overlap: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn right(&self, n: usize) -> Vec<C64> {
        self.right_vectors.column(n)
    }

    pub fn left(&self, n: usize) -> Vec<C64> {
        self.left_vectors.column(n)
    }

    /// `R_n` rescaled to unit Euclidean norm.
    pub fn right_unit(&self, n: usize) -> Vec<C64> {
        crate::matrix::normalized(&self.right(n))
    }

    /// `max |<L_m|R_n> - δ_mn|`.
    pub fn biorthogonality_error(&self) -> f64 {
        let g = self.left_vectors.adjoint().matmul(&self.right_vectors);
        g.max_abs_diff(&ComplexMatrix::identity(self.len()))
    }

    /// `max |Σ_n R_n L_n^† - 1|`.
    pub fn completeness_error(&self) -> f64 {
        let p = self.right_vectors.matmul(&self.left_vectors.adjoint());
        p.max_abs_diff(&ComplexMatrix::identity(self.len()))
    }
}

struct Pairing {
    values: Vec<C64>,
    right: Vec<Vec<C64>>,
    left: Vec<Vec<C64>>,
    overlaps: Vec<f64>,
    singular_cluster: bool,
}

fn pair_up(h: &ComplexMatrix) -> Result<Pairing> {
    let n = h.rows();
    let scale = h.norm_fro().max(1.0);
    let re = eig(h)?;
    let le = eig(&h.adjoint())?;
    let mut right: Vec<Vec<C64>> = (0..n).map(|j| re.vectors.column(j)).collect();
    let left_raw: Vec<Vec<C64>> = (0..n).map(|j| le.vectors.column(j)).collect();

    // greedy matching: nearest conjugate eigenvalue, ties by largest overlap
    let tie = CLUSTER_REL_TOL * scale;
    let mut used = vec![false; n];
    let mut left = vec![Vec::new(); n];
    for i in 0..n {
        let lam = re.values[i];
        let dist = |j: usize| (le.values[j].conj() - lam).norm();
        let best = (0..n).filter(|&j| !used[j]).map(dist).fold(f64::INFINITY, f64::min);
        let j = (0..n)
            .filter(|&j| !used[j] && dist(j) <= best + tie)
            .max_by(|&a, &b| {
                let oa = inner(&left_raw[a], &right[i]).norm();
                let ob = inner(&left_raw[b], &right[i]).norm();
                oa.total_cmp(&ob)
            })
            .expect("unmatched eigenvalue");
        used[j] = true;
        left[i] = left_raw[j].clone();
    }

    // clusters of nearly equal eigenvalues (single linkage)
    let mut cluster = vec![usize::MAX; n];
    let mut n_clusters = 0;
    for i in 0..n {
        if cluster[i] != usize::MAX {
            continue;
        }
        cluster[i] = n_clusters;
        let mut stack = vec![i];
        while let Some(a) = stack.pop() {
            for b in 0..n {
                if cluster[b] == usize::MAX && (re.values[a] - re.values[b]).norm() <= tie {
                    cluster[b] = n_clusters;
                    stack.push(b);
                }
            }
        }
        n_clusters += 1;
    }

    let mut singular_cluster = false;
    for cl in 0..n_clusters {
        let members: Vec<usize> = (0..n).filter(|&i| cluster[i] == cl).collect();
        if members.len() < 2 {
            continue;
        }
        let rc = ComplexMatrix::from_columns(&members.iter().map(|&i| right[i].clone()).collect::<Vec<_>>());
        let lc = ComplexMatrix::from_columns(&members.iter().map(|&i| left[i].clone()).collect::<Vec<_>>());
        let s = lc.adjoint().matmul(&rc);
        let lu = match s.lu() {
            Ok(lu) if lu.min_pivot() >= DEFECTIVE_OVERLAP => lu,
            _ => {
                singular_cluster = true;
                continue;
            }
        };
        let s_inv = lu.solve_matrix(&ComplexMatrix::identity(members.len()));
        let l_new = lc.matmul(&s_inv.adjoint());
        for (t, &i) in members.iter().enumerate() {
            left[i] = l_new.column(t);
        }
    }

    let mut overlaps = Vec::with_capacity(n);
    for i in 0..n {
        let ln = norm2(&left[i]);
        let rn = norm2(&right[i]);
        let o = inner(&left[i], &right[i]);
        let unit_overlap = if ln > 0.0 && rn > 0.0 { o.norm() / (ln * rn) } else { 0.0 };
        overlaps.push(unit_overlap);
        if ln > 0.0 {
            left[i].iter_mut().for_each(|z| *z /= ln);
        }
        let o = inner(&left[i], &right[i]);
        if o.norm() > 0.0 && o.norm().is_finite() {
            right[i].iter_mut().for_each(|z| *z /= o);
        }
    }

    Ok(Pairing { values: re.values, right, left, overlaps, singular_cluster })
}

fn assemble(p: Pairing, scale: f64, biorthonormal: bool) -> Spectrum {
    let n = p.values.len();
    let tol = SORT_REL_TOL * scale;
    let mut order: Vec<usize> = (0..n).collect();
    let key = |z: C64| ((z.re / tol).round(), z.im);
    order.sort_by(|&a, &b| {
        let (ka, kb) = (key(p.values[a]), key(p.values[b]));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    let eigenvalues = order.iter().map(|&i| p.values[i]).collect();
    let right_vectors =
        ComplexMatrix::from_columns(&order.iter().map(|&i| p.right[i].clone()).collect::<Vec<_>>());
    let left_vectors =
        ComplexMatrix::from_columns(&order.iter().map(|&i| p.left[i].clone()).collect::<Vec<_>>());
    let min_pair_overlap = p.overlaps.iter().copied().fold(f64::INFINITY, f64::min);
    Spectrum {
        eigenvalues,
        right_vectors,
        left_vectors,
        biorthonormal,
        min_pair_overlap: if n == 0 { 1.0 } else { min_pair_overlap },
    }
}

fn check_square(h: &ComplexMatrix) -> Result<()> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch {
            expected: "square matrix".into(),
            found: format!("{}x{}", h.rows(), h.cols()),
        });
    }
    if !h.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    Ok(())
}

/// Right and left eigenvectors paired by conjugate eigenvalue and scaled so
/// that `<L_m|R_n> = δ_mn`. Eigenvalues are sorted by real then imaginary
/// part. Fails with [`Error::Defective`] near an exceptional point.
pub fn eig_biorthogonal(h: &ComplexMatrix) -> Result<Spectrum> {
    check_square(h)?;
    let p = pair_up(h)?;
    let worst = p.overlaps.iter().copied().fold(f64::INFINITY, f64::min);
    if p.singular_cluster || worst < DEFECTIVE_OVERLAP {
        return Err(Error::Defective { overlap: if p.singular_cluster { 0.0 } else { worst } });
    }
    Ok(assemble(p, h.norm_fro().max(1.0), true))
}

/// As [`eig_biorthogonal`], but a nearly defective input yields a spectrum
/// with `biorthonormal = false` instead of an error. Eigenvalues and unit
/// right vectors remain meaningful; the left vectors may not be.
pub fn eig_biorthogonal_lenient(h: &ComplexMatrix) -> Result<Spectrum> {
    check_square(h)?;
    let p = pair_up(h)?;
    let worst = p.overlaps.iter().copied().fold(f64::INFINITY, f64::min);
    let ok = !p.singular_cluster && worst >= DEFECTIVE_OVERLAP;
    Ok(assemble(p, h.norm_fro().max(1.0), ok))
}

/// Indices of eigenvalues within `tol` of `-iΓr`.
pub fn gamma_r_modes(spec: &Spectrum, gamma_r: f64, tol: f64) -> Result<Vec<usize>> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::invalid(format!("tolerance must be finite and positive, got {tol}")));
    }
    let target = C64::new(0.0, -gamma_r);
    Ok((0..spec.len()).filter(|&n| (spec.eigenvalues[n] - target).norm() < tol).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub k: f64,
    pub e_plus: C64,
    pub e_minus: C64,
}

/// Bloch eigenvalues on `k_j = 2πj/n_k`, `j = 0..=n_k`, continued branch by
/// branch through nearest-eigenvalue matching.
pub fn band_sweep(model: ModelKind, params: &LatticeParams, n_k: usize) -> Result<Vec<BandPoint>> {
    if n_k < 2 {
        return Err(Error::invalid("band_sweep needs n_k >= 2"));
    }
    let mut out: Vec<BandPoint> = Vec::with_capacity(n_k + 1);
    for j in 0..=n_k {
        let k = 2.0 * PI * j as f64 / n_k as f64;
        let (a, b) = eig2(&bloch(model, params, k)?);
        let (e_plus, e_minus) = match out.last() {
            None => (a, b),
            Some(prev) => {
                let direct = (a - prev.e_plus).norm() + (b - prev.e_minus).norm();
                let swapped = (b - prev.e_plus).norm() + (a - prev.e_minus).norm();
                if swapped < direct {
                    (b, a)
                } else {
                    (a, b)
                }
            }
        };
        out.push(BandPoint { k, e_plus, e_minus });
    }
    Ok(out)
}

/// Smallest `|E+ - E-|` over a sweep.
pub fn min_band_gap(bands: &[BandPoint]) -> f64 {
    bands.iter().map(|b| (b.e_plus - b.e_minus).norm()).fold(f64::INFINITY, f64::min)
}

/// Tridiagonal matrix stored by diagonals.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<C64>,
    /// `sub[i] = T[i+1][i]`
    pub sub: Vec<C64>,
    /// `sup[i] = T[i][i+1]`
    pub sup: Vec<C64>,
}

impl Tridiagonal {
    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        let n = m.rows();
        if !m.is_square() {
            return Err(Error::invalid("tridiagonal input must be square"));
        }
        for i in 0..n {
            for j in 0..n {
                if (i as isize - j as isize).abs() > 1 && m[(i, j)] != ZERO {
                    return Err(Error::invalid(format!("entry ({i},{j}) outside the tridiagonal band")));
                }
            }
        }
        Ok(Tridiagonal {
            diag: (0..n).map(|i| m[(i, i)]).collect(),
            sub: (0..n.saturating_sub(1)).map(|i| m[(i + 1, i)]).collect(),
            sup: (0..n.saturating_sub(1)).map(|i| m[(i, i + 1)]).collect(),
        })
    }

    /// Pivots of `T - λ` from the continuant recurrence; `det = Π q_k`.
    fn pivots(&self, lam: C64, out: &mut Vec<C64>) {
        out.clear();
        let tiny = f64::EPSILON * 1e-3;
        for k in 0..self.diag.len() {
            let mut q = self.diag[k] - lam;
            if k > 0 {
                let mut prev = out[k - 1];
                if prev == ZERO {
                    prev = C64::new(tiny, 0.0);
                }
                q -= self.sub[k - 1] * self.sup[k - 1] / prev;
            }
            out.push(q);
        }
    }

    /// Number of eigenvalues strictly inside the circle `|λ - center| < radius`,
    /// by the argument principle on `det(T - λ)`. Works for dimensions where a
    /// dense eigensolve would be wasteful; the circle must not pass through an
    /// eigenvalue.
    pub fn count_in_disk(&self, center: C64, radius: f64) -> Result<usize> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid("radius must be finite and positive"));
        }
        let point = |t: f64| center + C64::from_polar(radius, t);
        let mut qa = Vec::with_capacity(self.diag.len());
        let mut qb = Vec::with_capacity(self.diag.len());
        // argument increment of det along the chord between two angles
        let step_arg = |ta: f64, tb: f64, qa: &mut Vec<C64>, qb: &mut Vec<C64>| -> f64 {
            self.pivots(point(ta), qa);
            self.pivots(point(tb), qb);
            let mut acc = ONE;
            for (x, y) in qb.iter().zip(qa.iter()) {
                acc *= x / y;
                let n = acc.norm();
                if n > 0.0 && n.is_finite() {
                    acc /= n;
                }
            }
            acc.arg()
        };
        let base = 64;
        let mut total = 0.0;
        let mut stack: Vec<(f64, f64, u32)> = (0..base)
            .rev()
            .map(|j| (2.0 * PI * j as f64 / base as f64, 2.0 * PI * (j + 1) as f64 / base as f64, 0))
            .collect();
        while let Some((ta, tb, depth)) = stack.pop() {
            let d = step_arg(ta, tb, &mut qa, &mut qb);
            if d.abs() > PI / 2.0 && depth < 40 {
                let tm = 0.5 * (ta + tb);
                stack.push((tm, tb, depth + 1));
                stack.push((ta, tm, depth + 1));
            } else {
                total += d;
            }
        }
        let w = total / (2.0 * PI);
        Ok(w.round().max(0.0) as usize)
    }
}
