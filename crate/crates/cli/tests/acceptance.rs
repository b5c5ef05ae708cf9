//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use dssh_core::circuit::{circuit_bloch, envelope_matrix, CircuitParams};
use dssh_core::edgeskin::{
    best_overlap, broken_chain_states, full_chain_states, hausdorff, projection_profile, skin_report,
};
use dssh_core::eigen::eigenvalues;
use dssh_core::hamiltonians::{
    build, build_nonreciprocal, eig2, Boundary, ChainTermination, LatticeParams, ModelKind,
};
use dssh_core::matrix::{c, norm2, I};
use dssh_core::photonic::{effective_bloch_error, fit_gammas, Elimination, PhotonicParams};
use dssh_core::spectral::{band_sweep, eig_biorthogonal_lenient, gamma_r_modes, min_band_gap, Tridiagonal};
use dssh_core::topology::{bloch_field, edge_mode_condition, phase_boundaries, winding_from_field, winding_number};
use dssh_core::{ComplexMatrix, C64};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn nr(n: usize, g1: f64, gm: f64, alpha: f64) -> LatticeParams {
    LatticeParams { n_cells: n, gamma1: g1, gamma2: 2.0, gamma: 3.0, g_mag: gm, alpha, ..Default::default() }
}

fn dssh_bin() -> &'static str {
    env!("CARGO_BIN_EXE_dssh")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.toml"))
}

fn run_cli(cmd: &str, cfg: &str, out: &Path, extra: &[&str]) -> Result<(), String> {
    let st = Command::new(dssh_bin())
        .args([cmd, "--config"])
        .arg(config(cfg))
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .map_err(|e| e.to_string())?;
    if st.status.success() {
        Ok(())
    } else {
        Err(format!("{cmd} {cfg}: {}", String::from_utf8_lossy(&st.stderr).trim()))
    }
}

/// Rows of a CSV file written by the CLI, header dropped.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn list(xs: &[f64]) -> String {
    match xs {
        [] => "none".into(),
        [x] => format!("{x:.2}"),
        [a, .., b] => format!("{} values in [{a:.2}, {b:.2}]", xs.len()),
    }
}

fn c1() -> Outcome {
    let near_zero = |t1: f64| {
        let p = LatticeParams { n_cells: 25, t1, t2: 1.0, ..Default::default() };
        eigenvalues(&build(ModelKind::HermitianSsh, &p).unwrap()).unwrap().iter().filter(|z| z.norm() < 1e-6).count()
    };
    let (a, b) = (near_zero(0.5), near_zero(1.5));
    outcome(a == 2 && b == 0, format!("|E|<1e-6 count: {a} at t1=0.5, {b} at t1=1.5"))
}

fn c2() -> Outcome {
    let step = 0.05;
    let (mut missing, mut spurious, mut closed) = (Vec::new(), Vec::new(), Vec::new());
    for j in 0..=80 {
        let g1 = step * j as f64;
        let p = LatticeParams { n_cells: 25, gamma1: g1, gamma2: 2.0, gamma: 3.0, ..Default::default() };
        let target = C64::new(0.0, -p.gamma_r());
        let count = eigenvalues(&build(ModelKind::Dssh, &p).unwrap())
            .unwrap()
            .iter()
            .filter(|z| (**z - target).norm() < 1e-3)
            .count();
        if g1 < 2.0 * (1.0 - step) && count != 2 {
            missing.push(g1);
        }
        if g1 > 2.0 * (1.0 + step) && count != 0 {
            spurious.push(g1);
        }
        if min_band_gap(&band_sweep(ModelKind::Dssh, &p, 512).unwrap()) < 1e-3 {
            closed.push(g1);
        }
    }
    let bbc = !closed.is_empty() && closed.iter().all(|g| (g - 2.0).abs() <= 2.0 * step + 1e-12);
    outcome(
        missing.is_empty() && spurious.is_empty() && bbc,
        format!(
            "Γ1 below boundary without 2 Γr-modes: {}; above with Γr-modes: {}; PBC gap closed at Γ1 = {}",
            list(&missing),
            list(&spurious),
            list(&closed)
        ),
    )
}

fn c3() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2024);
    let (mut worst, mut wrong, mut draws) = (0.0f64, 0usize, 0usize);
    let mut gauge_err = 0.0f64;
    while draws < 200 {
        let (model, p, expected) = if draws % 2 == 0 {
            let (t1, t2): (f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            if (0.95..1.05).contains(&(t1 / t2).abs()) || t2.abs() < 1e-3 {
                continue;
            }
            let p = LatticeParams { t1, t2, ..Default::default() };
            (ModelKind::HermitianSsh, p, f64::from(u8::from(t1.abs() < t2.abs())))
        } else {
            let (g1, g2): (f64, f64) = (rng.gen_range(0.0..4.0), rng.gen_range(0.05..4.0));
            if (0.95..1.05).contains(&(g1 / g2)) {
                continue;
            }
            let p = LatticeParams { gamma1: g1, gamma2: g2, gamma: rng.gen_range(0.0..4.0), ..Default::default() };
            (ModelKind::Dssh, p, f64::from(u8::from(g1 < g2)))
        };
        let w = winding_number(model, &p, 256).unwrap();
        worst = worst.max(w.residual);
        wrong += usize::from(w.nu.round() != expected);
        if draws % 10 == 1 {
            let field = bloch_field(model, &p, 256).unwrap();
            let coeffs: Vec<(f64, f64)> = (1..4).map(|_| (rng.gen_range(-1.5..1.5), rng.gen_range(0.0..2.0 * PI))).collect();
            let mut f = field.clone();
            for (j, &k) in field.k.iter().enumerate() {
                let phi: f64 = coeffs.iter().enumerate().map(|(m, (a, b))| a * ((m + 1) as f64 * k + b).sin()).sum();
                let ph = C64::from_polar(1.0, phi);
                f.right[j] = [f.right[j][0] * ph, f.right[j][1] * ph];
                f.left[j] = [f.left[j][0] * ph, f.left[j][1] * ph];
            }
            gauge_err = gauge_err.max((winding_from_field(&f).nu - w.nu).abs());
        }
        draws += 1;
    }
    outcome(
        worst < 1e-6 && wrong == 0 && gauge_err < 1e-6,
        format!("200 draws: {wrong} wrong, max residual {worst:.1e}, max gauge shift {gauge_err:.1e}"),
    )
}

/// Γr-modes detected on a long chain by counting eigenvalues in a small
/// disk around `-iΓr` with the tridiagonal argument principle.
fn gamma_r_detected(g1: f64, alpha: f64) -> usize {
    let p = nr(1000, g1, 3.0, alpha);
    let t = Tridiagonal::from_matrix(&build_nonreciprocal(&p, ChainTermination::Full).unwrap()).unwrap();
    t.count_in_disk(C64::new(0.0, -p.gamma_r()), 1e-3).unwrap()
}

fn c4() -> Outcome {
    let b = phase_boundaries(3.0, FRAC_PI_2, 2.0).unwrap();
    let (xm, xp) = (b.x_minus.unwrap_or(f64::NAN), b.x_plus.unwrap_or(f64::NAN));
    let analytic = (xm - 5f64.sqrt()).abs() < 1e-12 && (xp - 13f64.sqrt()).abs() < 1e-12;
    let step = 0.02;
    let mut bad = Vec::new();
    let mut quarter = 0usize;
    for j in 0..=250 {
        let g1 = step * j as f64;
        let n = gamma_r_detected(g1, FRAC_PI_2);
        let inside = g1 > xm + step && g1 < xp - step;
        let outside = g1 < xm - step || g1 > xp + step;
        if (inside && n != 2) || (outside && n != 0) {
            bad.push(g1);
        }
        quarter += gamma_r_detected(g1, FRAC_PI_4);
    }
    let mut rng = StdRng::seed_from_u64(32);
    let mut disagree = 0;
    for _ in 0..1000 {
        let (g1, gm, a, g2) =
            (rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0), rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.05..4.0));
        let p = LatticeParams { gamma1: g1, gamma2: g2, g_mag: gm, alpha: a, ..Default::default() };
        let z = p.z().unwrap().norm();
        disagree += usize::from(edge_mode_condition(g1, gm, a, g2) != (z < 1.0));
    }
    outcome(
        analytic && bad.is_empty() && quarter == 0 && disagree == 0,
        format!(
            "x- = {xm:.12}, x+ = {xp:.12}; grid points off by more than one step: {}; modes at α=π/4: {quarter}; inequality vs |Z|<1 disagreements: {disagree}/1000",
            list(&bad)
        ),
    )
}

fn shifted_residual(p: &LatticeParams, term: ChainTermination, v: &[C64], adjoint: bool) -> f64 {
    let mut h = build_nonreciprocal(p, term).unwrap().shift(I * p.gamma_r());
    if adjoint {
        h = h.adjoint();
    }
    norm2(&h.matvec(v)) / norm2(v)
}

fn c5() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let mut broken_worst = 0.0f64;
    let mut checked = 0;
    while checked < 100 {
        let p = LatticeParams {
            n_cells: rng.gen_range(2..30),
            gamma1: rng.gen_range(0.0..4.0),
            gamma2: rng.gen_range(0.3..3.0),
            g_mag: rng.gen_range(0.0..4.0),
            alpha: rng.gen_range(0.0..2.0 * PI),
            ..Default::default()
        };
        let n = p.n_cells as f64;
        let representable = [p.gamma_plus(), p.gamma_minus()].iter().all(|g| (p.gamma2 / g.norm()).ln().abs() * n < 27.0);
        if !representable {
            continue;
        }
        for term in [ChainTermination::BrokenB, ChainTermination::BrokenC] {
            let Ok(s) = broken_chain_states(&p, term) else { continue };
            let r = shifted_residual(&p, term, &s.right, false).max(shifted_residual(&p, term, &s.left, true));
            broken_worst = broken_worst.max(r / p.scale());
        }
        checked += 1;
    }
    let p = nr(25, 2.7, 3.0, FRAC_PI_2);
    let set = full_chain_states(&p).unwrap();
    let spec = eig_biorthogonal_lenient(&build(ModelKind::NonreciprocalDssh, &p).unwrap()).unwrap();
    let modes = gamma_r_modes(&spec, p.gamma_r(), 1e-3).unwrap();
    let overlap = [&set.psi_r_plus, &set.psi_r_minus].iter().map(|v| best_overlap(v, &spec, &modes)).fold(1.0, f64::min);
    let r = |n: usize| full_chain_states(&nr(n, 2.7, 3.0, FRAC_PI_2)).unwrap().residual_norm;
    let rate = (r(40) / r(20)).powf(1.0 / 20.0);
    let expected = set.z.norm().sqrt();
    let rate_ok = (rate / expected - 1.0).abs() < 0.2;
    outcome(
        broken_worst < 1e-10 && set.residual_norm < 1e-4 && modes.len() == 2 && overlap > 0.999 && rate_ok,
        format!(
            "broken-chain residual/scale {broken_worst:.1e}; full-chain residual {:.2e}; overlap {overlap:.6}; decay per cell {rate:.4} vs |Z|^1/2 {expected:.4}",
            set.residual_norm
        ),
    )
}

fn c6(tmp: &Path) -> Outcome {
    let mut worst_sum = 0.0f64;
    for g1 in [0.5, 2.7] {
        let p = nr(25, g1, 3.0, FRAC_PI_2);
        let spec = eig_biorthogonal_lenient(&build(ModelKind::NonreciprocalDssh, &p).unwrap()).unwrap();
        for m in 0..spec.len() {
            let total: C64 = projection_profile(&spec.left(m), &spec.right(m), 25).unwrap().iter().sum();
            worst_sum = worst_sum.max((total - 1.0).norm());
        }
    }
    let p = nr(25, 2.7, 3.0, FRAC_PI_2);
    let s = broken_chain_states(&p, ChainTermination::BrokenB).unwrap();
    let prof = projection_profile(&s.left, &s.right, 25).unwrap();
    let ratio_err = prof.windows(2).map(|w| (w[1] / w[0] - s.z).norm()).fold(0.0, f64::max);

    let mut flagged = Vec::new();
    let mut edge_peaked = true;
    for name in ["edge_no_modes", "edge_two_modes"] {
        let out = tmp.join(name);
        if let Err(e) = run_cli("edge-modes", name, &out, &[]) {
            return outcome(false, e);
        }
        flagged.push(csv_rows(&out.join("edge_spectrum.csv")).iter().filter(|r| r[3] == "true").count());
        let rows = csv_rows(&out.join("edge_profiles.csv"));
        let mut peaks = std::collections::BTreeMap::<String, (usize, f64)>::new();
        for r in rows.iter().filter(|r| r[3] == "true") {
            let (cell, v): (usize, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
            let e = peaks.entry(r[0].clone()).or_insert((0, -1.0));
            if v > e.1 {
                *e = (cell, v);
            }
        }
        edge_peaked &= peaks.values().all(|&(cell, _)| cell == 1 || cell == 25);
    }
    outcome(
        worst_sum < 1e-10 && ratio_err < 1e-8 && flagged == [0, 2] && edge_peaked,
        format!(
            "max |Σπ - 1| {worst_sum:.1e}; max |π_(n+1)/π_n - Z| {ratio_err:.1e}; edge-flagged modes (Γ1=0.5, 2.7): {flagged:?}; flagged profiles peak at an edge: {edge_peaked}"
        ),
    )
}

fn c7() -> Outcome {
    let report = |g1: f64, gm: f64, a: f64| {
        let p = nr(25, g1, gm, a);
        skin_report(&eig_biorthogonal_lenient(&build(ModelKind::NonreciprocalDssh, &p).unwrap()).unwrap())
    };
    let spread = |a: f64| {
        let p = nr(25, 0.5, 3.0, a);
        let obc = eigenvalues(&build(ModelKind::NonreciprocalDssh, &p).unwrap()).unwrap();
        let pbc = eigenvalues(&build(ModelKind::NonreciprocalDssh, &p.with_boundary(Boundary::Periodic)).unwrap()).unwrap();
        hausdorff(&obc, &pbc)
    };
    let skin = report(0.5, 3.0, FRAC_PI_2);
    let reciprocal = report(0.5, 3.0, 0.0);
    let extreme = report(3.0, 3.0, FRAC_PI_2);
    // rank-wise: the k-th smallest weight must grow for every k
    let sorted = |r: &dssh_core::edgeskin::LocalizationReport| {
        let mut w: Vec<f64> = r.modes.iter().map(|m| m.edge_weight_left).collect();
        w.sort_by(f64::total_cmp);
        w
    };
    let grows = sorted(&extreme).iter().zip(sorted(&skin)).all(|(e, b)| *e > b);
    let (hs, hr) = (spread(FRAC_PI_2), spread(0.0));
    let ratio = hs / hr;
    outcome(
        skin.fraction_left_localized == 1.0 && reciprocal.fraction_left_localized < 0.2 && grows && ratio >= 10.0,
        format!(
            "left-localized fraction {:.2} at α=π/2, {:.2} at α=0; |G|=Γ1 weights exceed Γ1=0.5 rank-wise: {grows}; Hausdorff OBC-PBC {hs:.3} vs {hr:.3} (ratio {ratio:.2})",
            skin.fraction_left_localized, reciprocal.fraction_left_localized
        ),
    )
}

fn c8(tmp: &Path) -> Outcome {
    let dimer = CircuitParams { rc2: f64::INFINITY, l2: 26e-6, r2: 1e5, ..Default::default() };
    let h = envelope_matrix(&dimer).unwrap();
    let (w1, w2) = (dimer.omega1(), dimer.omega2());
    let (g1, ga, gb) = (dimer.big_gamma1(), dimer.small_gamma1(), dimer.small_gamma2());
    let a6 = ComplexMatrix::from_rows(&[vec![c(w1 - w2, -(ga + g1)), c(0.0, g1)], vec![c(0.0, g1), c(w2 - w1, -(gb + g1))]])
        .scale(c(0.5, 0.0));
    let a6_err = h.max_abs_diff(&a6) / w1;

    // pole error relative to the carrier and to the coupling scale
    let (mut vs_omega, mut vs_gamma) = (0.0f64, 0.0f64);
    let mut ratio = 0.0f64;
    for name in ["circuit_dimer", "circuit_chain"] {
        let out = tmp.join(name);
        if let Err(e) = run_cli("circuit", name, &out, &[]) {
            return outcome(false, e);
        }
        let p = CircuitParams { n_cells: if name == "circuit_dimer" { 1 } else { 4 }, ..Default::default() };
        ratio = p.big_gamma1().max(p.big_gamma2()) / p.omega0();
        let rows = csv_rows(&out.join("poles.csv"));
        if rows.len() != 2 * p.n_cells {
            return outcome(false, format!("{name}: {} poles for {} envelope modes", rows.len(), 2 * p.n_cells));
        }
        for r in rows {
            let v: Vec<f64> = r[1..5].iter().map(|x| x.parse().unwrap()).collect();
            let d = C64::new(v[0] - v[2], v[1] - v[3]).norm();
            vs_omega = vs_omega.max(d / p.omega0());
            vs_gamma = vs_gamma.max(d / p.big_gamma1());
        }
    }

    let bloch_gap = |rc1: f64, k: f64| {
        let p = CircuitParams { rc1, ..Default::default() };
        let (a, b) = eig2(&circuit_bloch(&p, k).unwrap());
        (a - b).norm() / p.big_gamma2()
    };
    let rc = CircuitParams::default().rc2;
    let closed = bloch_gap(rc, PI);
    let open = (0..=64).map(|j| bloch_gap(1.25 * rc, PI * j as f64 / 32.0)).fold(f64::INFINITY, f64::min);
    let elsewhere = (0..=64).filter(|&j| j != 32).map(|j| bloch_gap(rc, PI * j as f64 / 32.0)).fold(f64::INFINITY, f64::min);
    outcome(
        a6_err < 1e-15 && vs_omega < 5.0 * ratio && vs_gamma < 5.0 * ratio && closed < 1e-12 && open > 0.1 && elsewhere > 1e-3,
        format!(
            "dimer envelope vs reference {a6_err:.1e}·ω; pole error {vs_omega:.2e}·ω0 and {vs_gamma:.2e}·Γ1 vs bound {:.2e}; gap/Γ2 at k=π {closed:.1e} (Γ1=Γ2), min {open:.3} (Γ1≠Γ2)",
            5.0 * ratio
        ),
    )
}

fn c9() -> Outcome {
    let params = |ratio: f64, gm: f64, alpha: f64| {
        let gamma1 = ratio * ratio / 2.0;
        PhotonicParams {
            n_cells: 25,
            g: ratio,
            kappa1: 2.0,
            kappa2: 1.0,
            gamma: 3.0 * gamma1,
            delta1: 0.4 * gamma1,
            delta2: -0.2 * gamma1,
            g_mag: gm * gamma1,
            alpha,
            boundary: Boundary::Periodic,
        }
    };
    let rel_d = effective_bloch_error(&params(0.01, 0.0, 0.0), 25, Elimination::Schur).unwrap().max_rel_error;
    let rel_n = effective_bloch_error(&params(0.01, 0.8, FRAC_PI_2), 25, Elimination::Schur).unwrap().max_rel_error;
    let ladder: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&x| effective_bloch_error(&params(x, 0.0, 0.0), 25, Elimination::Schur).unwrap().max_abs_error)
        .collect();
    let halves = ladder.windows(2).all(|w| w[1] <= 0.5 * w[0]);
    let p = params(0.01, 0.0, 0.0);
    let (f1, f2) = fit_gammas(&p, Elimination::Schur).unwrap();
    let fit = ((f1 / p.big_gamma1() - 1.0).abs()).max((f2 / p.big_gamma2() - 1.0).abs());
    outcome(
        rel_d < 0.02 && rel_n < 0.02 && halves && fit < 0.02,
        format!(
            "relative entry error {rel_d:.1e} (dissipative), {rel_n:.1e} (non-reciprocal); ladder {:.1e} > {:.1e} > {:.1e}; fitted Γ off by {fit:.1e}",
            ladder[0], ladder[1], ladder[2]
        ),
    )
}

fn c10(tmp: &Path) -> Outcome {
    let jobs = [
        ("spectrum", "dssh_sweep"),
        ("spectrum", "nonreciprocal_sweep"),
        ("phase-diagram", "phase_diagram"),
        ("edge-modes", "edge_two_modes"),
        ("edge-modes", "edge_broken_chain"),
        ("skin", "skin_nonreciprocal"),
        ("circuit", "circuit_dimer"),
        ("eliminate", "eliminate_nonreciprocal"),
    ];
    let mut files = 0;
    for (cmd, name) in jobs {
        for fmt in ["csv", "json"] {
            let (a, b) = (tmp.join(format!("{name}_{fmt}_a")), tmp.join(format!("{name}_{fmt}_b")));
            for (dir, threads) in [(&a, "1"), (&b, "4")] {
                if let Err(e) = run_cli(cmd, name, dir, &["--format", fmt, "--threads", threads]) {
                    return outcome(false, e);
                }
            }
            let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
            names.sort();
            for f in names {
                let (x, y) = (std::fs::read(a.join(&f)).unwrap(), std::fs::read(b.join(&f)));
                if y.ok().as_ref() != Some(&x) {
                    return outcome(false, format!("{name}/{} differs between runs", f.to_string_lossy()));
                }
                files += 1;
            }
        }
    }
    outcome(true, format!("{files} files byte-identical across repeated runs (csv and json, 1 vs 4 threads)"))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let t = tmp.path();
    let criteria: Vec<(u32, &str, Duration, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, "Hermitian edge modes", Duration::from_secs(1), Box::new(c1)),
        (2, "DSSH edge modes and bulk-boundary correspondence", Duration::from_secs(30), Box::new(c2)),
        (3, "winding quantization", Duration::from_secs(30), Box::new(c3)),
        (4, "phase boundaries", Duration::from_secs(120), Box::new(c4)),
        (5, "analytic edge states", Duration::from_secs(30), Box::new(c5)),
        (6, "projection completeness and profiles", Duration::from_secs(30), Box::new(move || c6(t))),
        (7, "skin effect", Duration::from_secs(60), Box::new(c7)),
        (8, "circuit equivalence", Duration::from_secs(120), Box::new(move || c8(t))),
        (9, "adiabatic elimination", Duration::from_secs(60), Box::new(c9)),
        (10, "determinism", Duration::from_secs(300), Box::new(move || c10(t))),
    ];
    let mut failed = Vec::new();
    for (n, title, limit, f) in &criteria {
        let start = Instant::now();
        let o = f();
        let dt = start.elapsed();
        let pass = o.pass && dt <= *limit;
        let timing = if dt <= *limit { String::new() } else { format!("; over the {}s budget", limit.as_secs()) };
        println!(
            "criterion {n:>2} {}: {title}: {}{timing} ({:.2}s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            dt.as_secs_f64()
        );
        if !pass {
            failed.push(*n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
