//! Dense complex eigensolver: balancing, Householder reduction to Hessenberg
//! form, shifted complex QR to Schur form, triangular back-substitution for
//! eigenvectors.

use crate::error::{Error, Result};
use crate::matrix::{norm2, ComplexMatrix, C64, ONE, ZERO};

const RADIX: f64 = 2.0;
const MAX_SCALE_EXP: i32 = 500;

#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<C64>,
    /// Right eigenvectors as columns, unit Euclidean norm.
    pub vectors: ComplexMatrix,
}

#[inline]
fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Diagonal similarity `D^{-1} A D` equalizing row and column norms.
/// Returns the balanced matrix and the diagonal of `D`.
pub fn balance(a: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>) {
    let n = a.rows();
    let mut b = a.clone();
    let mut d = vec![1.0; n];
    let sqrdx = RADIX * RADIX;
    let lo = RADIX.powi(-MAX_SCALE_EXP);
    let hi = RADIX.powi(MAX_SCALE_EXP);
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs1(b[(j, i)]);
                    r += abs1(b[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g && d[i] * f < hi {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c >= g && d[i] * f > lo {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                d[i] *= f;
                let ginv = 1.0 / f;
                for j in 0..n {
                    b[(i, j)] *= ginv;
                }
                for j in 0..n {
                    b[(j, i)] *= f;
                }
            }
        }
    }
    (b, d)
}

/// Householder reduction `A = Q H Q^H` with `H` upper Hessenberg.
pub fn hessenberg(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = ComplexMatrix::identity(n);
    if n < 3 {
        return (h, q);
    }
    for k in 0..n - 2 {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = norm2(&x);
        if xnorm == 0.0 {
            continue;
        }
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let phase = if x[0] == ZERO { ONE } else { x[0] / x[0].norm() };
        let alpha = -phase * xnorm;
        let mut v = x.clone();
        v[0] -= alpha;
        let vn = norm2(&v);
        for z in v.iter_mut() {
            *z /= vn;
        }
        // H <- (I - 2vv^H) H
        for j in k..n {
            let mut s = ZERO;
            for (t, vi) in v.iter().enumerate() {
                s += vi.conj() * h[(k + 1 + t, j)];
            }
            s *= 2.0;
            for (t, vi) in v.iter().enumerate() {
                h[(k + 1 + t, j)] -= vi * s;
            }
        }
        // H <- H (I - 2vv^H), Q <- Q (I - 2vv^H)
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let mut s = ZERO;
                for (t, vi) in v.iter().enumerate() {
                    s += m[(i, k + 1 + t)] * vi;
                }
                s *= 2.0;
                for (t, vi) in v.iter().enumerate() {
                    m[(i, k + 1 + t)] -= s * vi.conj();
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

/// Rotation `G = [[c, s], [-conj(s), c]]` with `G [x; y] = [r; 0]`.
#[inline]
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let rho = ax.hypot(ay);
    (ax / rho, (x / ax) * y.conj() / rho)
}

fn wilkinson(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let p = (a - d) * 0.5;
    let bc = b * c;
    let disc = (p * p + bc).sqrt();
    let den1 = p + disc;
    let den2 = p - disc;
    let den = if den1.norm() >= den2.norm() { den1 } else { den2 };
    if den.norm() == 0.0 {
        d
    } else {
        d - bc / den
    }
}

/// Schur form of an upper Hessenberg matrix. When `z` is given the full
/// triangular factor is produced and rotations are accumulated into `z`;
/// otherwise only the active window is updated (eigenvalues only).
fn hqr(h: &mut ComplexMatrix, mut z: Option<&mut ComplexMatrix>) -> Result<()> {
    let n = h.rows();
    if n < 2 {
        return Ok(());
    }
    let full = z.is_some();
    let eps = f64::EPSILON;
    let small = f64::MIN_POSITIVE / eps;
    let max_iter = 30 * n.max(10);
    let mut total = 0usize;
    let mut its = 0usize;
    let mut hi = n - 1;
    let mut rot: Vec<(f64, C64)> = Vec::with_capacity(n);

    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = abs1(h[(l, l - 1)]);
            if sub <= small {
                h[(l, l - 1)] = ZERO;
                break;
            }
            let mut s = abs1(h[(l - 1, l - 1)]) + abs1(h[(l, l)]);
            if s == 0.0 {
                s = (l.saturating_sub(2)..=hi.min(l + 1))
                    .map(|i| abs1(h[(i, l - 1)]))
                    .sum::<f64>();
            }
            if sub <= eps * s {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        total += 1;
        its += 1;
        if total > max_iter {
            return Err(Error::NoConvergence { iterations: total });
        }

        let mu = if its % 10 == 0 {
            let e = abs1(h[(hi, hi - 1)]) + if hi >= 2 { abs1(h[(hi - 1, hi - 2)]) } else { 0.0 };
            h[(hi, hi)] + C64::new(0.75 * e, 0.4 * e)
        } else {
            wilkinson(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        for i in l..=hi {
            h[(i, i)] -= mu;
        }
        let col_end = if full { n } else { hi + 1 };
        rot.clear();
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            rot.push((c, s));
            for j in k..col_end {
                let u = h[(k, j)];
                let v = h[(k + 1, j)];
                h[(k, j)] = u * c + s * v;
                h[(k + 1, j)] = -s.conj() * u + v * c;
            }
            h[(k + 1, k)] = ZERO;
        }
        let row_start = if full { 0 } else { l };
        for (idx, &(c, s)) in rot.iter().enumerate() {
            let k = l + idx;
            for i in row_start..=(k + 1).min(hi) {
                let p = h[(i, k)];
                let q = h[(i, k + 1)];
                h[(i, k)] = p * c + q * s.conj();
                h[(i, k + 1)] = -p * s + q * c;
            }
            if let Some(zm) = z.as_deref_mut() {
                for i in 0..n {
                    let p = zm[(i, k)];
                    let q = zm[(i, k + 1)];
                    zm[(i, k)] = p * c + q * s.conj();
                    zm[(i, k + 1)] = -p * s + q * c;
                }
            }
        }
        for i in l..=hi {
            h[(i, i)] += mu;
        }
    }
    Ok(())
}

fn check_input(a: &ComplexMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: "square matrix".into(),
            found: format!("{}x{}", a.rows(), a.cols()),
        });
    }
    if !a.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    Ok(())
}

/// Complex Schur decomposition `A = Z T Z^H` (no balancing).
pub fn schur(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    check_input(a)?;
    let (mut t, mut z) = hessenberg(a);
    hqr(&mut t, Some(&mut z))?;
    Ok((t, z))
}

pub fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<C64>> {
    check_input(a)?;
    let (b, _) = balance(a);
    let (mut h, _) = hessenberg(&b);
    hqr(&mut h, None)?;
    Ok((0..a.rows()).map(|i| h[(i, i)]).collect())
}

/// Eigenvalues and unit-norm right eigenvectors.
pub fn eig(a: &ComplexMatrix) -> Result<Eigen> {
    check_input(a)?;
    let n = a.rows();
    let (b, d) = balance(a);
    let (mut t, mut z) = hessenberg(&b);
    hqr(&mut t, Some(&mut z))?;
    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();

    let tnorm = t.norm_max().max(f64::MIN_POSITIVE);
    let smin = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE * 1e10);
    let big = 1e100;
    let mut vectors = ComplexMatrix::zeros(n, n);
    let mut x = vec![ZERO; n];
    for k in 0..n {
        let lam = values[k];
        x[..=k].iter_mut().for_each(|v| *v = ZERO);
        x[k] = ONE;
        for j in (0..k).rev() {
            let mut s = ZERO;
            for m in j + 1..=k {
                s += t[(j, m)] * x[m];
            }
            let mut den = t[(j, j)] - lam;
            if den.norm() < smin {
                den = C64::new(smin, 0.0);
            }
            x[j] = -s / den;
            if x[j].norm() > big {
                let f = 1.0 / x[j].norm();
                x[j..=k].iter_mut().for_each(|v| *v *= f);
            }
        }
        let mut v = vec![ZERO; n];
        for (i, vi) in v.iter_mut().enumerate() {
            let mut s = ZERO;
            for m in 0..=k {
                s += z[(i, m)] * x[m];
            }
            *vi = s * d[i];
        }
        let vn = norm2(&v);
        if vn > 0.0 && vn.is_finite() {
            v.iter_mut().for_each(|c| *c /= vn);
        }
        vectors.set_column(k, &v);
    }
    Ok(Eigen { values, vectors })
}
