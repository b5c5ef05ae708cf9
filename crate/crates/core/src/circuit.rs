//! Resistively coupled LCR lattice: Kirchhoff dynamics in first-order form,
//! fixed-step integration, envelope generator and pole extraction.
//!
//! State layout is `(V_1, V̇_1, V̄_1, V̄̇_1, V_2, ...)`; voltages are the even
//! entries. Open ends are terminated by an `Rc2` shunt to ground so every
//! node sees the same damping `γ + Γ1 + Γ2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::eigen::{eig, eigenvalues};
use crate::error::{Error, Result};
use crate::hamiltonians::Boundary;
use crate::matrix::{c, ComplexMatrix, C64, I};

/// Relative threshold for the weak-coupling flag.
pub const WEAK_COUPLING_RATIO: f64 = 0.05;
/// `dt · max|λ|` must stay below this.
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CircuitParams {
    pub n_cells: usize,
    pub l1: f64,
    pub l2: f64,
    pub c1: f64,
    pub c2: f64,
    /// Loss resistances; `inf` means no loss.
    pub r1: f64,
    pub r2: f64,
    /// Coupling resistances; `inf` means the link is open.
    pub rc1: f64,
    pub rc2: f64,
    pub boundary: Boundary,
}

impl Default for CircuitParams {
    /// About 1 MHz resonators with `Γ/ω ≈ 0.01` and `γ/ω ≈ 0.001`.
    fn default() -> Self {
        CircuitParams {
            n_cells: 1,
            l1: 25.330_295_910_584_44e-6,
            l2: 25.330_295_910_584_44e-6,
            c1: 1e-9,
            c2: 1e-9,
            r1: 159.154_943_091_895_3e3,
            r2: 159.154_943_091_895_3e3,
            rc1: 15.915_494_309_189_53e3,
            rc2: 15.915_494_309_189_53e3,
            boundary: Boundary::Open,
        }
    }
}

fn rate(r: f64, cap: f64) -> f64 {
    if r.is_infinite() {
        0.0
    } else {
        1.0 / (r * cap)
    }
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_cells < 1 {
            return Err(Error::invalid("n_cells must be at least 1"));
        }
        for (name, v) in [("l1", self.l1), ("l2", self.l2), ("c1", self.c1), ("c2", self.c2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and positive, got {v}")));
            }
        }
        for (name, v) in [("r1", self.r1), ("r2", self.r2), ("rc1", self.rc1), ("rc2", self.rc2)] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::invalid(format!("{name} must be positive (inf for open), got {v}")));
            }
        }
        if (self.c1 - self.c2).abs() > 1e-12 * self.c1.max(self.c2) {
            return Err(Error::Unsupported("circuit model requires c1 == c2".into()));
        }
        Ok(())
    }

    pub fn omega1(&self) -> f64 {
        1.0 / (self.l1 * self.c1).sqrt()
    }

    pub fn omega2(&self) -> f64 {
        1.0 / (self.l2 * self.c2).sqrt()
    }

    pub fn omega0(&self) -> f64 {
        0.5 * (self.omega1() + self.omega2())
    }

    pub fn delta_bar(&self) -> f64 {
        0.5 * (self.omega1() - self.omega2())
    }

    /// `Γ1 = 1/(Rc1 C1)`
    pub fn big_gamma1(&self) -> f64 {
        rate(self.rc1, self.c1)
    }

    pub fn big_gamma2(&self) -> f64 {
        rate(self.rc2, self.c2)
    }

    /// `γ1 = 1/(R1 C1)`
    pub fn small_gamma1(&self) -> f64 {
        rate(self.r1, self.c1)
    }

    pub fn small_gamma2(&self) -> f64 {
        rate(self.r2, self.c2)
    }

    /// Total damping on the `V` and `V̄` nodes.
    pub fn damping(&self) -> (f64, f64) {
        let g = self.big_gamma1() + self.big_gamma2();
        (self.small_gamma1() + g, self.small_gamma2() + g)
    }

    pub fn weak_coupling(&self) -> bool {
        let wmin = self.omega1().min(self.omega2());
        let gmax = self.big_gamma1().max(self.big_gamma2());
        gmax / wmin <= WEAK_COUPLING_RATIO
            && (self.omega1() - self.omega2()).abs() / self.omega0() <= WEAK_COUPLING_RATIO
    }

    /// FNV-1a over the debug representation (shortest round-trip floats).
    pub fn hash(&self) -> u64 {
        fnv1a(format!("{self:?}").as_bytes())
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Real `4N × 4N` matrix `M` of `ẋ = M x`.
pub fn build_circuit_system(p: &CircuitParams) -> Result<ComplexMatrix> {
    p.validate()?;
    let n = p.n_cells;
    let (w1s, w2s) = (p.omega1().powi(2), p.omega2().powi(2));
    let (d1, d2) = p.damping();
    let (g1, g2) = (p.big_gamma1(), p.big_gamma2());
    let periodic = p.boundary == Boundary::Periodic;
    let mut m = ComplexMatrix::zeros(4 * n, 4 * n);
    let v = |cell: usize| 4 * cell;
    let vd = |cell: usize| 4 * cell + 1;
    let w = |cell: usize| 4 * cell + 2;
    let wd = |cell: usize| 4 * cell + 3;
    for i in 0..n {
        m[(v(i), vd(i))] = c(1.0, 0.0);
        m[(w(i), wd(i))] = c(1.0, 0.0);
        m[(vd(i), v(i))] = c(-w1s, 0.0);
        m[(vd(i), vd(i))] = c(-d1, 0.0);
        m[(vd(i), wd(i))] += c(g1, 0.0);
        m[(wd(i), w(i))] = c(-w2s, 0.0);
        m[(wd(i), wd(i))] = c(-d2, 0.0);
        m[(wd(i), vd(i))] += c(g1, 0.0);
        // V̈_n ← Γ2 V̄̇_{n-1},  V̄̈_n ← Γ2 V̇_{n+1}
        if i > 0 || periodic {
            let prev = (i + n - 1) % n;
            m[(vd(i), wd(prev))] += c(g2, 0.0);
        }
        if i + 1 < n || periodic {
            let next = (i + 1) % n;
            m[(wd(i), vd(next))] += c(g2, 0.0);
        }
    }
    Ok(m)
}

/// Envelope generator `H` with `v̇ = -i H v` on `(v_1, v̄_1, v_2, ...)`,
/// in the frame rotating at `ω0`.
pub fn envelope_matrix(p: &CircuitParams) -> Result<ComplexMatrix> {
    p.validate()?;
    let n = p.n_cells;
    let db = p.delta_bar();
    let (d1, d2) = p.damping();
    let h1 = I * (p.big_gamma1() / 2.0);
    let h2 = I * (p.big_gamma2() / 2.0);
    let mut h = ComplexMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let (a, b) = (2 * i, 2 * i + 1);
        h[(a, a)] = c(db, -d1 / 2.0);
        h[(b, b)] = c(-db, -d2 / 2.0);
        h[(a, b)] += h1;
        h[(b, a)] += h1;
        if i + 1 < n {
            h[(b, a + 2)] += h2;
            h[(a + 2, b)] += h2;
        }
    }
    if p.boundary == Boundary::Periodic {
        h[(2 * n - 1, 0)] += h2;
        h[(0, 2 * n - 1)] += h2;
    }
    Ok(h)
}

/// Fourier transform of the periodic envelope generator.
pub fn circuit_bloch(p: &CircuitParams, k: f64) -> Result<ComplexMatrix> {
    p.validate()?;
    let db = p.delta_bar();
    let (d1, d2) = p.damping();
    let (g1, g2) = (p.big_gamma1(), p.big_gamma2());
    Ok(ComplexMatrix::from_rows(&[
        vec![c(db, -d1 / 2.0), I * (g1 + g2 * C64::from_polar(1.0, -k)) / 2.0],
        vec![I * (g1 + g2 * C64::from_polar(1.0, k)) / 2.0, c(-db, -d2 / 2.0)],
    ]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    /// Angular frequency (rad/s).
    pub frequency: f64,
    /// Amplitude decay rate (1/s).
    pub decay_rate: f64,
}

/// Envelope eigenvalues mapped back to the lab frame: `ω0 + Re λ`, `-Im λ`.
pub fn envelope_poles(p: &CircuitParams) -> Result<Vec<Pole>> {
    let w0 = p.omega0();
    let mut poles: Vec<Pole> = eigenvalues(&envelope_matrix(p)?)?
        .into_iter()
        .map(|l| Pole { frequency: w0 + l.re, decay_rate: -l.im })
        .collect();
    sort_poles(&mut poles);
    Ok(poles)
}

/// Positive-frequency poles of the full Kirchhoff system.
pub fn system_poles(p: &CircuitParams) -> Result<Vec<Pole>> {
    let mut poles: Vec<Pole> = eigenvalues(&build_circuit_system(p)?)?
        .into_iter()
        .filter(|s| s.im > 0.0)
        .map(|s| Pole { frequency: s.im, decay_rate: -s.re })
        .collect();
    sort_poles(&mut poles);
    Ok(poles)
}

fn sort_poles(p: &mut [Pole]) {
    p.sort_by(|a, b| a.frequency.total_cmp(&b.frequency).then(a.decay_rate.total_cmp(&b.decay_rate)));
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryData {
    pub times: Vec<f64>,
    /// One series per node, ordered `V_1, V̄_1, V_2, V̄_2, ...`.
    pub voltages: Vec<Vec<f64>>,
    pub dt: f64,
    pub params_hash: u64,
}

impl TrajectoryData {
    pub fn channel_names(&self) -> Vec<String> {
        (0..self.voltages.len())
            .map(|j| if j % 2 == 0 { format!("V_{}", j / 2 + 1) } else { format!("Vb_{}", j / 2 + 1) })
            .collect()
    }

    /// RMS of the full voltage vector over consecutive windows of `window` samples.
    pub fn windowed_rms(&self, window: usize) -> Vec<f64> {
        let n = self.times.len();
        let window = window.max(1);
        (0..n / window)
            .map(|w| {
                let mut s = 0.0;
                for t in w * window..(w + 1) * window {
                    s += self.voltages.iter().map(|ch| ch[t] * ch[t]).sum::<f64>();
                }
                (s / window as f64).sqrt()
            })
            .collect()
    }
}

fn real_system(system: &ComplexMatrix) -> Result<Vec<f64>> {
    if !system.is_square() || system.rows() % 2 != 0 {
        return Err(Error::invalid("system must be square with (value, derivative) pairs"));
    }
    if system.data().iter().any(|z| z.im != 0.0 || !z.re.is_finite()) {
        return Err(Error::invalid("time-domain integration expects a real, finite system"));
    }
    Ok(system.data().iter().map(|z| z.re).collect())
}

fn matvec(m: &[f64], n: usize, x: &[f64], out: &mut [f64]) {
    for i in 0..n {
        out[i] = m[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

/// Classical fourth-order Runge-Kutta at fixed step, recording every step.
pub fn integrate(system: &ComplexMatrix, x0: &[f64], t_end: f64, dt: f64) -> Result<TrajectoryData> {
    integrate_sampled(system, x0, t_end, dt, 1, 0)
}

/// As [`integrate`], keeping every `every`-th step; `params_hash` is stored
/// as metadata.
pub fn integrate_sampled(
    system: &ComplexMatrix,
    x0: &[f64],
    t_end: f64,
    dt: f64,
    every: usize,
    params_hash: u64,
) -> Result<TrajectoryData> {
    let n = system.rows();
    let m = real_system(system)?;
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: format!("{n} states"), found: format!("{}", x0.len()) });
    }
    if !(dt > 0.0 && dt.is_finite()) || !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::invalid("dt must be positive and t_end nonnegative"));
    }
    let lmax = eigenvalues(system)?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dt * lmax >= STABILITY_LIMIT {
        return Err(Error::StepSize { dt, product: dt * lmax });
    }
    let every = every.max(1);
    let steps = (t_end / dt).round() as usize;
    let channels = n / 2;
    let mut times = Vec::with_capacity(steps / every + 1);
    let mut voltages = vec![Vec::with_capacity(steps / every + 1); channels];
    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for step in 0..=steps {
        if step % every == 0 {
            times.push(step as f64 * dt);
            for (ch, series) in voltages.iter_mut().enumerate() {
                series.push(x[2 * ch]);
            }
        }
        if step == steps {
            break;
        }
        matvec(&m, n, &x, &mut k1);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        matvec(&m, n, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        matvec(&m, n, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + dt * k3[i];
        }
        matvec(&m, n, &tmp, &mut k4);
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(TrajectoryData { times, voltages, dt: dt * every as f64, params_hash })
}

/// Unit voltage on the first node, everything else at rest.
pub fn default_initial_state(p: &CircuitParams) -> Vec<f64> {
    let mut x = vec![0.0; 4 * p.n_cells];
    x[0] = 1.0;
    x
}

/// Complex Householder reflector annihilating `x[1..]`; returns `(v, alpha)`
/// with `(I - 2 v v†/(v†v)) x = alpha e_1`.
fn reflector(x: &[C64]) -> (Vec<C64>, C64) {
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { c(1.0, 0.0) };
    let alpha = -phase * norm;
    let mut v = x.to_vec();
    v[0] -= alpha;
    (v, alpha)
}

fn apply_reflector(v: &[C64], col: &mut [C64]) {
    let vn: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if vn == 0.0 {
        return;
    }
    let s: C64 = v.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum::<C64>() * (2.0 / vn);
    for (x, a) in col.iter_mut().zip(v) {
        *x -= s * a;
    }
}

/// Householder QR with column pivoting on column-major data; returns the
/// numerical rank at relative tolerance `tol`.
fn pivoted_rank(cols: &[Vec<C64>], tol: f64) -> usize {
    let mut a = cols.to_vec();
    let ncols = a.len();
    let rows = a.first().map_or(0, Vec::len);
    let mut r00 = None;
    for k in 0..ncols.min(rows) {
        let norms: Vec<f64> = a[k..].iter().map(|col| col[k..].iter().map(|z| z.norm_sqr()).sum()).collect();
        let p = k + norms.iter().enumerate().fold(0, |best, (i, v)| if *v > norms[best] { i } else { best });
        a.swap(k, p);
        let (v, alpha) = reflector(&a[k][k..]);
        let r = *r00.get_or_insert(alpha.norm());
        if r == 0.0 || alpha.norm() <= tol * r {
            return k;
        }
        for col in a[k..].iter_mut() {
            apply_reflector(&v, &mut col[k..]);
        }
    }
    ncols.min(rows)
}

/// Least squares `min ||A x - b||` by Householder QR, `A` column-major with
/// full column rank.
fn least_squares(cols: &[Vec<C64>], b: &[C64]) -> Result<Vec<C64>> {
    let mut a = cols.to_vec();
    let mut b = b.to_vec();
    let n = a.len();
    let mut diag = Vec::with_capacity(n);
    for k in 0..n {
        let (v, alpha) = reflector(&a[k][k..]);
        if alpha.norm() == 0.0 {
            return Err(Error::Singular { pivot: 0.0 });
        }
        for col in a[k..].iter_mut() {
            apply_reflector(&v, &mut col[k..]);
        }
        apply_reflector(&v, &mut b[k..]);
        diag.push(a[k][k]);
    }
    let mut x = vec![c(0.0, 0.0); n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= a[j][k] * x[j];
        }
        x[k] = s / diag[k];
    }
    Ok(x)
}

/// Running mean over `width` samples (output shorter by `width - 1`).
fn boxcar(x: &[C64], width: usize) -> Vec<C64> {
    if width <= 1 || x.len() < width {
        return x.to_vec();
    }
    let mut out = Vec::with_capacity(x.len() + 1 - width);
    let mut acc: C64 = x[..width].iter().sum();
    out.push(acc / width as f64);
    for i in width..x.len() {
        acc += x[i] - x[i - width];
        out.push(acc / width as f64);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractedPoles {
    pub poles: Vec<Pole>,
    /// Set when the record is too short to separate the closest poles.
    pub resolution_warning: bool,
    pub model_order: usize,
    /// Carrier used for demodulation (rad/s).
    pub carrier: f64,
    pub sample_step: f64,
}

impl ExtractedPoles {
    fn empty(warning: bool) -> Self {
        ExtractedPoles { poles: Vec::new(), resolution_warning: warning, model_order: 0, carrier: 0.0, sample_step: 0.0 }
    }
}

/// Positive-frequency poles of a trajectory. Each channel is mixed down by a
/// carrier read off zero crossings, smoothed by four one-period running
/// means (linear filters leave pole positions untouched), decimated, and fed
/// to multichannel linear prediction. The model order is the numerical rank
/// of the prediction matrix, capped at one pole per channel.
pub fn spectral_extract(traj: &TrajectoryData) -> Result<ExtractedPoles> {
    spectral_extract_with_order(traj, traj.voltages.len())
}

pub fn spectral_extract_with_order(traj: &TrajectoryData, max_order: usize) -> Result<ExtractedPoles> {
    let len = traj.times.len();
    if traj.voltages.iter().any(|ch| ch.len() != len) {
        return Err(Error::invalid("trajectory channels and times differ in length"));
    }
    let peak = traj.voltages.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 || max_order == 0 {
        return Ok(ExtractedPoles::empty(false));
    }
    if len < 8 {
        return Ok(ExtractedPoles::empty(true));
    }
    let span = (len - 1) as f64 * traj.dt;
    let strongest = traj
        .voltages
        .iter()
        .enumerate()
        .map(|(i, ch)| (i, ch.iter().map(|v| v * v).sum::<f64>()))
        .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a })
        .0;
    let crossings = traj.voltages[strongest].windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count();
    if crossings < 4 {
        return Ok(ExtractedPoles::empty(true));
    }
    let carrier = PI * crossings as f64 / span;
    let period = ((2.0 * PI / carrier) / traj.dt).round().max(1.0) as usize;

    let baseband: Vec<Vec<C64>> = traj
        .voltages
        .iter()
        .filter(|ch| ch.iter().any(|v| *v != 0.0))
        .map(|ch| {
            let mixed: Vec<C64> = ch
                .iter()
                .enumerate()
                .map(|(n, v)| C64::from_polar(v / peak, -carrier * n as f64 * traj.dt))
                .collect();
            (0..4).fold(mixed, |x, _| boxcar(&x, period))
        })
        .collect();
    let avail = baseband[0].len();
    // coarse enough to spread the pole cluster, fine enough that offsets up
    // to the weak-coupling detuning bound do not alias
    let target = (8 * max_order).max(60);
    let decim = (avail / target).min(5 * period).max(1);
    let series: Vec<Vec<C64>> = baseband.iter().map(|s| s.iter().step_by(decim).copied().collect()).collect();
    let step = traj.dt * decim as f64;
    let m = series[0].len();
    let cap = max_order.min(m / 3);
    if cap == 0 {
        return Ok(ExtractedPoles::empty(true));
    }

    let build = |p: usize| -> (Vec<Vec<C64>>, Vec<C64>) {
        let mut cols = vec![Vec::new(); p];
        let mut b = Vec::new();
        for s in &series {
            for t in p..m {
                for (j, col) in cols.iter_mut().enumerate() {
                    col.push(s[t - j - 1]);
                }
                b.push(s[t]);
            }
        }
        (cols, b)
    };
    let order = pivoted_rank(&build(cap).0, 1e-8);
    if order == 0 {
        return Ok(ExtractedPoles::empty(false));
    }
    let (cols, b) = build(order);
    let coef = least_squares(&cols, &b)?;
    let mut comp = ComplexMatrix::zeros(order, order);
    for (j, a) in coef.iter().enumerate() {
        comp[(0, j)] = *a;
    }
    for i in 1..order {
        comp[(i, i - 1)] = c(1.0, 0.0);
    }
    let mut poles: Vec<Pole> = eig(&comp)?
        .values
        .iter()
        .filter(|z| z.norm() > 0.0)
        .map(|z| z.ln() / step + I * carrier)
        .filter(|s| s.im > 0.0)
        .map(|s| Pole { frequency: s.im, decay_rate: -s.re })
        .collect();
    sort_poles(&mut poles);
    let mut min_sep = f64::INFINITY;
    for i in 0..poles.len() {
        for j in i + 1..poles.len() {
            let d = c(poles[i].frequency - poles[j].frequency, poles[i].decay_rate - poles[j].decay_rate).norm();
            min_sep = min_sep.min(d);
        }
    }
    let resolution_warning = min_sep * span < 2.0 * PI;
    Ok(ExtractedPoles { poles, resolution_warning, model_order: order, carrier, sample_step: step })
}

/// Step with `ω_max · dt = 0.02`, comfortably inside the stability limit.
pub fn suggested_dt(p: &CircuitParams) -> f64 {
    0.02 / p.omega1().max(p.omega2())
}

/// Record length resolving the coupling-scale splittings.
pub fn suggested_t_end(p: &CircuitParams) -> f64 {
    let g = [p.big_gamma1(), p.big_gamma2()].into_iter().filter(|g| *g > 0.0).fold(f64::INFINITY, f64::min);
    if g.is_finite() {
        20.0 / g
    } else {
        200.0 * PI / p.omega0()
    }
}
