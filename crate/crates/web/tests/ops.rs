use dssh_web::Lattice;

fn points(flat: &[f64]) -> Vec<(f64, f64)> {
    flat.chunks(2).map(|c| (c[0], c[1])).collect()
}

#[test]
fn spectrum_sizes_and_edge_pair() {
    let mut l = Lattice::new();
    l.gamma1 = 2.7;
    let obc = points(&l.spectrum(false).unwrap());
    let pbc = points(&l.spectrum(true).unwrap());
    assert_eq!(obc.len(), 2 * l.n_cells);
    assert_eq!(pbc.len(), 2 * l.n_cells);
    // inside the window two OBC eigenvalues sit on |E| = Γr
    let gr = l.gamma_r();
    let pinned = obc.iter().filter(|(x, y)| (x.hypot(*y) - gr).abs() < 1e-3).count();
    assert_eq!(pinned, 2);
}

#[test]
fn hermitian_spectrum_is_real() {
    let mut l = Lattice::new();
    l.set_model("hermitian_ssh").unwrap();
    for (_, im) in points(&l.spectrum(false).unwrap()) {
        assert!(im.abs() < 1e-10);
    }
}

#[test]
fn phase_diagram_codes() {
    let l = Lattice::new();
    let (na, ng) = (5, 4);
    let codes = l.phase_diagram(na, ng, 3.0).unwrap();
    assert_eq!(codes.len(), na * ng);
    // |G| = 0 is single boundary for every α
    for a in 0..na {
        assert_eq!(codes[a * ng], 0);
    }
    // α = π/2, |G| = 3: double boundary; α = π/4, |G| = 3: no topology
    assert_eq!(codes[2 * ng + 3], 1);
    assert_eq!(codes[ng + 3], 2);
    assert!(l.phase_diagram(0, 4, 3.0).is_err());
}

#[test]
fn skin_profiles_are_unit_and_left_heavy() {
    let l = Lattice::new();
    let d = 2 * l.n_cells;
    let prof = l.skin_profiles().unwrap();
    assert_eq!(prof.len(), d * d);
    for mode in prof.chunks(d) {
        let norm: f64 = mode.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-9);
    }
    assert!(l.left_localized_fraction().unwrap() > 0.5);

    let mut r = Lattice::new();
    r.alpha = 0.0;
    assert!(r.left_localized_fraction().unwrap() < 0.2);
}

#[test]
fn invalid_parameters_are_reported() {
    let mut l = Lattice::new();
    l.n_cells = 0;
    assert!(l.spectrum(false).is_err());
    l.n_cells = 5;
    l.gamma2 = -1.0;
    assert!(l.skin_profiles().is_err());
}
