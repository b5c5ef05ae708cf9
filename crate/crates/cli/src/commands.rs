use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use dssh_core::circuit::{
    build_circuit_system, default_initial_state, envelope_poles, integrate_sampled, spectral_extract, suggested_dt,
    suggested_t_end, Pole,
};
use dssh_core::edgeskin::{
    broken_chain_states, full_chain_states, hausdorff, localization, projection_profile_for, LEFT_CENTROID,
};
use dssh_core::eigen::eigenvalues;
use dssh_core::hamiltonians::{build, build_nonreciprocal, Boundary, ChainTermination, LatticeParams, ModelKind};
use dssh_core::photonic::{effective_bloch_error, fit_gammas, Elimination};
use dssh_core::spectral::{band_sweep, eig_biorthogonal_lenient, gamma_r_modes, min_band_gap, Spectrum};
use dssh_core::topology::phase_diagram;
use dssh_core::{ComplexMatrix, C64};

use crate::config::{set_lattice_key, Format, RunConfig};
use crate::output::{Cell, Sink, Table};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Spectrum,
    PhaseDiagram,
    EdgeModes,
    Skin,
    Circuit,
    Eliminate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::PhaseDiagram => "phase-diagram",
            Command::EdgeModes => "edge-modes",
            Command::Skin => "skin",
            Command::Circuit => "circuit",
            Command::Eliminate => "eliminate",
        }
    }
}

/// Runs `cmd` and returns the paths written, in write order.
pub fn run(cmd: Command, cfg: &RunConfig, out: Option<&Path>, format: Option<Format>) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    let dir = out.map(Path::to_path_buf).or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    let mut sink = Sink::new(&dir, format.or(cfg.format).unwrap_or_default())?;
    let params = match cmd {
        Command::Spectrum => spectrum(cfg, &mut sink)?,
        Command::PhaseDiagram => phase(cfg, &mut sink)?,
        Command::EdgeModes => edge_modes(cfg, &mut sink)?,
        Command::Skin => skin(cfg, &mut sink)?,
        Command::Circuit => circuit(cfg, &mut sink)?,
        Command::Eliminate => eliminate(cfg, &mut sink)?,
    };
    sink.summary("run", &json!({ "command": cmd.name(), "seed": cfg.seed, "params": params }))?;
    Ok(sink.written)
}

fn by_value(a: &C64, b: &C64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn sorted(mut v: Vec<C64>) -> Vec<C64> {
    v.sort_by(by_value);
    v
}

/// Mode indices of `spec` in eigenvalue order.
fn mode_order(spec: &Spectrum) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..spec.len()).collect();
    idx.sort_by(|&i, &j| by_value(&spec.eigenvalues[i], &spec.eigenvalues[j]));
    idx
}

fn matrix(model: ModelKind, p: &LatticeParams, term: ChainTermination) -> Result<ComplexMatrix, CliError> {
    let m = match (model, p.boundary, term) {
        (ModelKind::NonreciprocalDssh, Boundary::Open, t) => build_nonreciprocal(p, t)?,
        (_, _, ChainTermination::Full) => build(model, p)?,
        _ => return Err(CliError::Config("broken terminations need model = nonreciprocal_dssh and open boundary".into())),
    };
    Ok(m)
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("parameters serialize")
}

fn spectrum_table(name: &str, values: &[C64]) -> Table {
    let mut t = Table::new(name, &["index", "re", "im", "abs"]);
    for (i, z) in values.iter().enumerate() {
        t.push(vec![i.into(), z.re.into(), z.im.into(), z.norm().into()]);
    }
    t
}

fn spectrum(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let model = cfg.model();
    let term = cfg.termination.unwrap_or_default();
    let p = cfg.lattice();
    let tol = cfg.mode_tol();
    let obc = sorted(eigenvalues(&matrix(model, &p.with_boundary(Boundary::Open), term)?)?);
    let pbc = sorted(eigenvalues(&matrix(model, &p.with_boundary(Boundary::Periodic), ChainTermination::Full)?)?);
    sink.table(&spectrum_table("spectrum_obc", &obc))?;
    sink.table(&spectrum_table("spectrum_pbc", &pbc))?;

    if let Some(key) = &cfg.sweep_param {
        let values = cfg.sweep_values()?;
        let n_k = cfg.n_k();
        let points: Vec<(f64, Vec<C64>, f64)> = values
            .par_iter()
            .map(|&v| -> Result<_, CliError> {
                let q = set_lattice_key(&p, key, v).with_boundary(Boundary::Open);
                let e = sorted(eigenvalues(&matrix(model, &q, term)?)?);
                let gap = min_band_gap(&band_sweep(model, &q, n_k)?);
                Ok((v, e, gap))
            })
            .collect::<Result<_, _>>()?;
        let mut sweep = Table::new("sweep", &["param", "index", "re", "im", "abs"]);
        let mut summary = Table::new("sweep_summary", &["param", "gamma_r_modes", "pbc_min_gap"]);
        for (v, e, gap) in &points {
            let q = set_lattice_key(&p, key, *v);
            let target = C64::new(0.0, -q.gamma_r());
            for (i, z) in e.iter().enumerate() {
                sweep.push(vec![(*v).into(), i.into(), z.re.into(), z.im.into(), z.norm().into()]);
            }
            let count = e.iter().filter(|z| (**z - target).norm() < tol).count();
            summary.push(vec![(*v).into(), count.into(), (*gap).into()]);
        }
        sink.table(&sweep)?;
        sink.table(&summary)?;
    }
    Ok(json!({ "model": model, "termination": term, "lattice": to_value(&p), "sweep_param": cfg.sweep_param, "mode_tol": tol }))
}

fn phase(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let (alphas, gs) = (cfg.alpha_grid()?, cfg.g_grid()?);
    let gamma2 = cfg.lattice().gamma2;
    let mut t = Table::new("phase_diagram", &["alpha", "g", "a_plus", "a_minus", "region"]);
    for pt in phase_diagram(&alphas, &gs, gamma2)? {
        let b = pt.boundaries;
        t.push(vec![pt.alpha.into(), pt.g_mag.into(), b.a_plus.re.into(), b.a_minus.re.into(), b.region.as_str().into()]);
    }
    sink.table(&t)?;
    Ok(json!({ "gamma2": gamma2, "alpha_points": alphas.len(), "g_points": gs.len() }))
}

fn profile_rows(t: &mut Table, label: Cell, prof: &[C64], edge: bool) {
    for (cell, pi) in prof.iter().enumerate() {
        t.push(vec![label.clone(), (cell + 1).into(), pi.norm().into(), edge.into()]);
    }
}

fn edge_modes(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let model = cfg.model.unwrap_or(ModelKind::NonreciprocalDssh);
    let term = cfg.termination.unwrap_or_default();
    let p = cfg.lattice().with_boundary(Boundary::Open);
    let tol = cfg.mode_tol();
    let spec = eig_biorthogonal_lenient(&matrix(model, &p, term)?)?;
    let edge = gamma_r_modes(&spec, p.gamma_r(), tol)?;

    let mut modes = Table::new("edge_spectrum", &["mode", "re", "im", "edge"]);
    let mut profiles = Table::new("edge_profiles", &["mode", "cell", "abs_pi", "edge"]);
    for (rank, &m) in mode_order(&spec).iter().enumerate() {
        let flag = edge.contains(&m);
        let z = spec.eigenvalues[m];
        modes.push(vec![rank.into(), z.re.into(), z.im.into(), flag.into()]);
        let prof = projection_profile_for(&spec.left(m), &spec.right(m), p.n_cells, term)?;
        profile_rows(&mut profiles, rank.into(), &prof, flag);
    }
    sink.table(&modes)?;
    sink.table(&profiles)?;

    let mut analytic = json!(null);
    if model == ModelKind::NonreciprocalDssh && p.delta_bar() == 0.0 {
        let mut t = Table::new("edge_analytic_profiles", &["mode", "cell", "abs_pi", "edge"]);
        let result = match term {
            ChainTermination::Full => full_chain_states(&p).map(|s| {
                for (label, l, r) in [("plus", &s.psi_l_plus, &s.psi_r_plus), ("minus", &s.psi_l_minus, &s.psi_r_minus)] {
                    if let Ok(prof) = projection_profile_for(l, r, p.n_cells, term) {
                        profile_rows(&mut t, label.into(), &prof, s.eigenstate_valid);
                    }
                }
                json!({
                    "z": [s.z.re, s.z.im],
                    "norm_product": [s.norm_product.re, s.norm_product.im],
                    "residual_norm": s.residual_norm,
                    "eigenstate_valid": s.eigenstate_valid,
                })
            }),
            broken => broken_chain_states(&p, broken).map(|s| {
                if let Ok(prof) = projection_profile_for(&s.left, &s.right, p.n_cells, broken) {
                    profile_rows(&mut t, "broken".into(), &prof, true);
                }
                json!({ "z": [s.z.re, s.z.im], "norm_product": [s.norm_product.re, s.norm_product.im] })
            }),
        };
        analytic = match result {
            Ok(v) => {
                sink.table(&t)?;
                v
            }
            // degenerate points have no analytic state; the numeric data stands alone
            Err(e) => json!({ "unavailable": e.to_string() }),
        };
    }
    sink.summary(
        "edge_summary",
        &json!({
            "edge_modes": edge.len(),
            "biorthonormal": spec.biorthonormal,
            "min_pair_overlap": spec.min_pair_overlap,
            "analytic": analytic,
        }),
    )?;
    Ok(json!({ "model": model, "termination": term, "lattice": to_value(&p), "mode_tol": tol }))
}

fn skin(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let model = cfg.model.unwrap_or(ModelKind::NonreciprocalDssh);
    let p = cfg.lattice().with_boundary(Boundary::Open);
    let spec = eig_biorthogonal_lenient(&matrix(model, &p, ChainTermination::Full)?)?;
    let pbc = eigenvalues(&matrix(model, &p.with_boundary(Boundary::Periodic), ChainTermination::Full)?)?;

    let mut comps = Table::new("skin_components", &["mode", "site", "abs_component"]);
    let mut stats = Vec::with_capacity(spec.len());
    let mut left = 0usize;
    for (rank, &m) in mode_order(&spec).iter().enumerate() {
        let r = spec.right_unit(m);
        for (site, z) in r.iter().enumerate() {
            comps.push(vec![rank.into(), (site + 1).into(), z.norm().into()]);
        }
        let loc = localization(&r);
        left += usize::from(loc.center_of_mass < LEFT_CENTROID);
        let e = spec.eigenvalues[m];
        stats.push(json!({
            "mode": rank,
            "re": e.re,
            "im": e.im,
            "center_of_mass": loc.center_of_mass,
            "edge_weight_left": loc.edge_weight_left,
            "edge_weight_right": loc.edge_weight_right,
            "participation_ratio": loc.participation_ratio,
        }));
    }
    sink.table(&comps)?;
    let fraction = if spec.is_empty() { 0.0 } else { left as f64 / spec.len() as f64 };
    sink.summary(
        "skin_summary",
        &json!({
            "fraction_left_localized": fraction,
            "left_centroid_threshold": LEFT_CENTROID,
            "hausdorff_obc_pbc": hausdorff(&spec.eigenvalues, &pbc),
            "modes": stats,
        }),
    )?;
    Ok(json!({ "model": model, "lattice": to_value(&p) }))
}

/// Pairs each extracted pole with the nearest unused envelope pole.
fn match_poles(extracted: &[Pole], envelope: &[Pole]) -> Vec<(Option<Pole>, Option<Pole>)> {
    let s = |p: &Pole| C64::new(p.frequency, p.decay_rate);
    let mut used = vec![false; envelope.len()];
    let mut out = Vec::new();
    for e in extracted {
        let best = (0..envelope.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (s(&envelope[a]) - s(e)).norm().total_cmp(&(s(&envelope[b]) - s(e)).norm()));
        if let Some(j) = best {
            used[j] = true;
        }
        out.push((Some(*e), best.map(|j| envelope[j])));
    }
    out.extend((0..envelope.len()).filter(|&j| !used[j]).map(|j| (None, Some(envelope[j]))));
    out
}

fn circuit(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let p = cfg.circuit();
    p.validate()?;
    let dt = cfg.dt.unwrap_or_else(|| suggested_dt(&p));
    let t_end = cfg.t_end.unwrap_or_else(|| suggested_t_end(&p));
    let every = cfg.record_every.unwrap_or(1).max(1);
    let system = build_circuit_system(&p)?;
    let traj = integrate_sampled(&system, &default_initial_state(&p), t_end, dt, every, p.hash())?;

    let mut cols = vec!["t".to_string()];
    cols.extend(traj.channel_names());
    let mut t = Table::with_columns("trajectory", cols);
    for (i, &time) in traj.times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![time.into()];
        row.extend(traj.voltages.iter().map(|ch| Cell::Num(ch[i])));
        t.push(row);
    }
    sink.table(&t)?;

    let ext = spectral_extract(&traj)?;
    let env = envelope_poles(&p)?;
    let w0 = p.omega0();
    let mut poles = Table::new(
        "poles",
        &["index", "extracted_frequency", "extracted_decay", "envelope_frequency", "envelope_decay", "rel_error"],
    );
    let (mut worst, mut unmatched) = (0.0f64, 0usize);
    for (i, (e, v)) in match_poles(&ext.poles, &env).into_iter().enumerate() {
        let nan = f64::NAN;
        let (ef, ed) = e.map_or((nan, nan), |x| (x.frequency, x.decay_rate));
        let (vf, vd) = v.map_or((nan, nan), |x| (x.frequency, x.decay_rate));
        let rel = C64::new(ef - vf, ed - vd).norm() / w0;
        if rel.is_nan() {
            unmatched += 1;
        } else {
            worst = worst.max(rel);
        }
        poles.push(vec![i.into(), ef.into(), ed.into(), vf.into(), vd.into(), rel.into()]);
    }
    sink.table(&poles)?;
    sink.summary(
        "circuit_summary",
        &json!({
            "params_hash": format!("{:016x}", traj.params_hash),
            "omega0": w0,
            "gamma_over_omega": p.big_gamma1().max(p.big_gamma2()) / w0,
            "weak_coupling": p.weak_coupling(),
            "dt": dt,
            "t_end": t_end,
            "record_every": every,
            "model_order": ext.model_order,
            "resolution_warning": ext.resolution_warning,
            "max_rel_error": worst,
            "unmatched_poles": unmatched,
        }),
    )?;
    Ok(json!({ "circuit": to_value(&p) }))
}

fn eliminate(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let p = cfg.photonic();
    let method = cfg.elimination.unwrap_or(Elimination::Schur);
    let n_k = cfg.n_k.unwrap_or(p.n_cells);
    let report = effective_bloch_error(&p, n_k, method)?;
    let mut t =
        Table::new("eliminate", &["k", "entry", "numeric_re", "numeric_im", "analytic_re", "analytic_im", "abs_err"]);
    for e in &report.table {
        t.push(vec![
            e.k.into(),
            e.entry.as_str().into(),
            e.numeric.re.into(),
            e.numeric.im.into(),
            e.analytic.re.into(),
            e.analytic.im.into(),
            e.abs_err.into(),
        ]);
    }
    sink.table(&t)?;
    let (g1, g2) = fit_gammas(&p, method)?;
    sink.summary(
        "eliminate_summary",
        &json!({
            "method": method,
            "weak_coupling": p.weak_coupling(),
            "max_abs_error": report.max_abs_error,
            "max_rel_error": report.max_rel_error,
            "fitted_gamma1": g1,
            "fitted_gamma2": g2,
            "expected_gamma1": p.big_gamma1(),
            "expected_gamma2": p.big_gamma2(),
        }),
    )?;
    Ok(json!({ "photonic": to_value(&p), "n_k": n_k }))
}
