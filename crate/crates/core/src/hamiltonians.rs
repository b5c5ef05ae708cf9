//! Real-space and Bloch matrices for the four lattice families.
//!
//! Sites are interleaved, `(A1, B1, A2, B2, ...)`; for the non-reciprocal
//! chain the sublattices are called `b` and `c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{c, ComplexMatrix, C64, I};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    HermitianSsh,
    Dssh,
    AntiptDssh,
    NonreciprocalDssh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChainTermination {
    #[default]
    Full,
    /// `c_N` removed; the chain ends on `b` sites at both ends.
    BrokenB,
    /// `b_1` removed; the chain ends on `c` sites at both ends.
    BrokenC,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatticeParams {
    pub n_cells: usize,
    pub t1: f64,
    pub t2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub g_mag: f64,
    pub alpha: f64,
    pub boundary: Boundary,
}

impl Default for LatticeParams {
    fn default() -> Self {
        LatticeParams {
            n_cells: 25,
            t1: 0.5,
            t2: 1.0,
            gamma1: 1.0,
            gamma2: 2.0,
            gamma: 3.0,
            delta1: 0.0,
            delta2: 0.0,
            g_mag: 0.0,
            alpha: 0.0,
            boundary: Boundary::Open,
        }
    }
}

impl LatticeParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_cells < 1 {
            return Err(Error::invalid("n_cells must be at least 1"));
        }
        let finite = [
            self.t1, self.t2, self.gamma1, self.gamma2, self.gamma, self.delta1, self.delta2,
            self.g_mag, self.alpha,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("lattice parameters must be finite"));
        }
        for (name, v) in [
            ("gamma", self.gamma),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("g_mag", self.g_mag),
        ] {
            if v < 0.0 {
                return Err(Error::invalid(format!("{name} must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    /// Common diagonal damping `γ + Γ1 + Γ2`.
    pub fn gamma_r(&self) -> f64 {
        self.gamma + self.gamma1 + self.gamma2
    }

    pub fn delta_bar(&self) -> f64 {
        0.5 * (self.delta1 - self.delta2)
    }

    pub fn gamma_plus(&self) -> C64 {
        c(
            self.gamma1 - self.g_mag * self.alpha.sin(),
            -self.g_mag * self.alpha.cos(),
        )
    }

    pub fn gamma_minus(&self) -> C64 {
        c(
            self.gamma1 + self.g_mag * self.alpha.sin(),
            -self.g_mag * self.alpha.cos(),
        )
    }

    /// `Γ- Γ+ / Γ2²`; `None` when `Γ2 = 0`.
    pub fn z(&self) -> Option<C64> {
        if self.gamma2 == 0.0 {
            None
        } else {
            Some(self.gamma_minus() * self.gamma_plus() / (self.gamma2 * self.gamma2))
        }
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Self {
        LatticeParams { boundary, ..self.clone() }
    }

    /// Scale used by relative tolerances: the largest coupling or rate.
    pub fn scale(&self) -> f64 {
        [
            self.t1.abs(),
            self.t2.abs(),
            self.gamma1,
            self.gamma2,
            self.gamma,
            self.delta1.abs(),
            self.delta2.abs(),
            self.g_mag,
        ]
        .into_iter()
        .fold(1.0, f64::max)
    }
}

pub fn build_hermitian_ssh(p: &LatticeParams) -> Result<ComplexMatrix> {
    p.validate()?;
    let n = p.n_cells;
    let mut h = ComplexMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let (a, b) = (2 * i, 2 * i + 1);
        h[(a, b)] += c(p.t1, 0.0);
        h[(b, a)] += c(p.t1, 0.0);
        if i + 1 < n {
            h[(b, a + 2)] += c(p.t2, 0.0);
            h[(a + 2, b)] += c(p.t2, 0.0);
        }
    }
    if p.boundary == Boundary::Periodic {
        let (last_b, first_a) = (2 * n - 1, 0);
        h[(last_b, first_a)] += c(p.t2, 0.0);
        h[(first_a, last_b)] += c(p.t2, 0.0);
    }
    Ok(h)
}

pub fn build_dssh(p: &LatticeParams) -> Result<ComplexMatrix> {
    p.validate()?;
    let n = p.n_cells;
    let gr = p.gamma_r();
    let mut h = ComplexMatrix::zeros(2 * n, 2 * n);
    let g1 = I * p.gamma1;
    let g2 = I * p.gamma2;
    for i in 0..n {
        let (a, b) = (2 * i, 2 * i + 1);
        h[(a, a)] = c(-p.delta1, -gr);
        h[(b, b)] = c(-p.delta2, -gr);
        h[(a, b)] += g1;
        h[(b, a)] += g1;
        if i + 1 < n {
            h[(b, a + 2)] += g2;
            h[(a + 2, b)] += g2;
        }
    }
    if p.boundary == Boundary::Periodic {
        h[(2 * n - 1, 0)] += g2;
        h[(0, 2 * n - 1)] += g2;
    }
    Ok(h)
}

/// Full or broken non-reciprocal chain. The `b → c` (upper) intra-cell entry
/// is `iΓ-`, the `c → b` entry `iΓ+`; inter-cell links are `iΓ2` both ways.
pub fn build_nonreciprocal(p: &LatticeParams, term: ChainTermination) -> Result<ComplexMatrix> {
    p.validate()?;
    if term != ChainTermination::Full && p.boundary == Boundary::Periodic {
        return Err(Error::invalid("broken chain terminations require open boundary"));
    }
    let n = p.n_cells;
    let gr = p.gamma_r();
    let db = p.delta_bar();
    let gm = I * p.gamma_minus();
    let gp = I * p.gamma_plus();
    let g2 = I * p.gamma2;
    let mut h = ComplexMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let (b, cc) = (2 * i, 2 * i + 1);
        h[(b, b)] = c(db, -gr);
        h[(cc, cc)] = c(-db, -gr);
        h[(b, cc)] += gm;
        h[(cc, b)] += gp;
        if i + 1 < n {
            h[(cc, b + 2)] += g2;
            h[(b + 2, cc)] += g2;
        }
    }
    if p.boundary == Boundary::Periodic {
        h[(2 * n - 1, 0)] += g2;
        h[(0, 2 * n - 1)] += g2;
    }
    Ok(match term {
        ChainTermination::Full => h,
        ChainTermination::BrokenB => {
            let keep: Vec<usize> = (0..2 * n - 1).collect();
            h.select(&keep, &keep)
        }
        ChainTermination::BrokenC => {
            let keep: Vec<usize> = (1..2 * n).collect();
            h.select(&keep, &keep)
        }
    })
}

/// Real-space matrix of any family (the anti-PT chain is the non-reciprocal
/// chain at `|G| = 0`).
pub fn build(model: ModelKind, p: &LatticeParams) -> Result<ComplexMatrix> {
    match model {
        ModelKind::HermitianSsh => build_hermitian_ssh(p),
        ModelKind::Dssh => build_dssh(p),
        ModelKind::AntiptDssh => {
            let q = LatticeParams { g_mag: 0.0, ..p.clone() };
            build_nonreciprocal(&q, ChainTermination::Full)
        }
        ModelKind::NonreciprocalDssh => build_nonreciprocal(p, ChainTermination::Full),
    }
}

/// 2×2 Bloch matrix at momentum `k`.
pub fn bloch(model: ModelKind, p: &LatticeParams, k: f64) -> Result<ComplexMatrix> {
    p.validate()?;
    if !k.is_finite() {
        return Err(Error::invalid("k must be finite"));
    }
    let e_m = C64::from_polar(1.0, -k);
    let e_p = C64::from_polar(1.0, k);
    let gr = p.gamma_r();
    let m = match model {
        ModelKind::HermitianSsh => {
            let h = p.t1 + p.t2 * e_m;
            [[c(0.0, 0.0), h], [h.conj(), c(0.0, 0.0)]]
        }
        ModelKind::Dssh => [
            [c(-p.delta1, -gr), I * (p.gamma1 + p.gamma2 * e_m)],
            [I * (p.gamma1 + p.gamma2 * e_p), c(-p.delta2, -gr)],
        ],
        ModelKind::AntiptDssh => {
            let db = p.delta_bar();
            let h = I * (p.gamma1 + p.gamma2 * e_m);
            [[c(db, -gr), h], [-h.conj(), c(-db, -gr)]]
        }
        ModelKind::NonreciprocalDssh => {
            let db = p.delta_bar();
            [
                [c(db, -gr), I * (p.gamma_minus() + p.gamma2 * e_m)],
                [I * (p.gamma_plus() + p.gamma2 * e_p), c(-db, -gr)],
            ]
        }
    };
    Ok(ComplexMatrix::from_rows(&[m[0].to_vec(), m[1].to_vec()]))
}

/// Eigenvalues of a 2×2 matrix, `(tr ± sqrt(disc)) / 2`, larger `Re + Im` first.
pub fn eig2(m: &ComplexMatrix) -> (C64, C64) {
    let (a, b, cc, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * (a - d) * 0.25 + b * cc).sqrt();
    let (e1, e2) = (half_tr + disc, half_tr - disc);
    if e1.re + e1.im >= e2.re + e2.im {
        (e1, e2)
    } else {
        (e2, e1)
    }
}
