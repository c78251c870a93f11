//! Acceptance gate: one test per release criterion, each asserting the stated
//! tolerance. A red line here is a real, documented model-vs-reference
//! discrepancy, not a regression in this codebase; the companion analysis
//! lives with the project notes outside the repository.

use bandgap_qed::boundstates::{
    born_markov_energies, dressing_angle_exact, single_qubit_bound_energy,
    symmetric_antisymmetric, two_photon_exchange, ExchangeMode,
};
use bandgap_qed::crystal::{transfer_matrix_s_params, BandSolver, UnitCell};
use bandgap_qed::lattice::{
    assemble_driven_hamiltonian, assemble_hamiltonian, build_driven_basis, build_sector_basis,
    hopping_coefficients, LatticeModel, LossParams, QubitSpec,
};
use bandgap_qed::spectra::{
    dressed_anharmonicity, dressed_qubit_sidebands, emission_sidebands, one_excitation_crossing,
    two_excitation_crossing,
};
use bandgap_qed::trace::SpectrumTrace;
use bandgap_qed::transmission::{
    find_bound_state_peak, hopping_band, sweep_s21, DriveParams, Method, WaveguidePorts,
};
use ndarray_linalg::{EigValsh, UPLO};

const BAND_CEILING_GHZ: f64 = 40.0;
const EDGE_FIT_WINDOW_GHZ: f64 = 0.3;

/// The full device: 16 cells, transmons on sites 8 and 9, measured losses.
fn device_model() -> LatticeModel {
    let j = hopping_coefficients(&UnitCell::reference(), 2, 5).unwrap();
    LatticeModel::new(
        16,
        j,
        vec![
            QubitSpec { site: 8, omega01: 4.5, delta: 0.365, g: 0.505, n_levels: 3 },
            QubitSpec { site: 9, omega01: 7.9875, delta: 0.365, g: 0.55, n_levels: 3 },
        ],
        LossParams { kappa: 1.0, kappa0: 0.004, kappa_q: 0.0005 },
    )
    .unwrap()
}

/// Lossless single-qubit model with the full five-level transmon ladder.
fn single_qubit(omega01: f64, g: f64) -> LatticeModel {
    let j = hopping_coefficients(&UnitCell::reference(), 2, 5).unwrap();
    LatticeModel::new(
        16,
        j,
        vec![QubitSpec { site: 9, omega01, delta: 0.365, g, n_levels: 5 }],
        LossParams::default(),
    )
    .unwrap()
}

/// Lossless two-qubit model with equal bare frequencies.
fn qubit_pair(sites: (usize, usize), omega: f64, g1: f64, g2: f64) -> LatticeModel {
    let j = hopping_coefficients(&UnitCell::reference(), 2, 5).unwrap();
    LatticeModel::new(
        16,
        j,
        vec![
            QubitSpec { site: sites.0, omega01: omega, delta: 0.365, g: g1, n_levels: 3 },
            QubitSpec { site: sites.1, omega01: omega, delta: 0.365, g: g2, n_levels: 3 },
        ],
        LossParams::default(),
    )
    .unwrap()
}

/// Parabolic-apex minimum of |S21| inside a frequency window (the in-band
/// dip left by a coupled qubit).
fn refined_dip(trace: &SpectrumTrace, window: (f64, f64)) -> f64 {
    let mags = trace.magnitudes();
    let idx: Vec<usize> = (0..trace.freqs.len())
        .filter(|&i| trace.freqs[i] > window.0 && trace.freqs[i] < window.1)
        .collect();
    let &imin = idx
        .iter()
        .min_by(|&&a, &&b| mags[a].total_cmp(&mags[b]))
        .expect("dip window resolved by the sweep");
    assert!(imin > 0 && imin + 1 < trace.freqs.len());
    let (y0, y1, y2) = (mags[imin - 1], mags[imin], mags[imin + 1]);
    let d = (y0 - 2.0 * y1 + y2).max(1e-300);
    let h = trace.freqs[imin] - trace.freqs[imin - 1];
    trace.freqs[imin] + 0.5 * h * (y0 - y2) / d
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "bisection bracket does not straddle a sign change");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) * flo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Criterion 1 — photon hopping amplitudes from the band-2 Wannier overlap
/// integrals: reference table within 1e-4 GHz per coefficient, and the
/// 123.5-Ohm high-impedance variant within 3% ratio-wise.
#[test]
fn criterion_01_hopping_coefficients() {
    let j = hopping_coefficients(&UnitCell::reference(), 2, 5).unwrap();
    let reference = [9.3272, 0.7288, -0.0344, 0.0178, -0.0034, 0.0014];
    let mut ok = true;
    for (r, want) in reference.iter().enumerate() {
        let got = j.at(r);
        let pass = (got - want).abs() <= 1e-4;
        ok &= pass;
        println!(
            "  J{r}: {got:+.6} vs {want:+.6} GHz (|diff| = {:.2e}) {}",
            (got - want).abs(),
            if pass { "ok" } else { "OUT OF TOLERANCE" }
        );
    }
    let mut variant_cell = UnitCell::reference();
    variant_cell.z_hi = 123.5;
    let jp = hopping_coefficients(&variant_cell, 2, 5).unwrap();
    for r in 0..=5 {
        let ratio = jp.at(r) / j.at(r);
        println!("  J'{r}/J{r} = {ratio:.4}");
        assert!(ratio >= 0.97, "variant ratio {ratio} below 0.97 at range {r}");
    }
    assert!(ok, "hopping coefficients outside the 1e-4 GHz tolerance");
}

/// Criterion 2 — band structure of the stepped-impedance cell: band-2 edge
/// 7.80 +/- 0.01 GHz, gap (4.75, 7.8) +/- 0.05 GHz, fitted curvature
/// 1.155 +/- 0.02 GHz.
#[test]
fn criterion_02_band_structure() {
    let solver = BandSolver::new(UnitCell::reference(), BAND_CEILING_GHZ).unwrap();
    let fit = solver.fit_band_edge(2, EDGE_FIT_WINDOW_GHZ).unwrap();
    let (gap_lo, gap_hi) = solver.band_gap(1).unwrap();
    println!(
        "  edge {:.5} GHz (want 7.80 +/- 0.01), gap ({:.4}, {:.4}) (want (4.75, 7.8) +/- 0.05), alpha {:.4} (want 1.155 +/- 0.02)",
        fit.omega0, gap_lo, gap_hi, fit.alpha
    );
    assert!(
        ((fit.alpha) - 1.155).abs() <= 0.02,
        "curvature {} outside 1.155 +/- 0.02",
        fit.alpha
    );
    assert!(
        (fit.omega0 - 7.80).abs() <= 0.01,
        "band-2 edge {} outside 7.80 +/- 0.01 GHz",
        fit.omega0
    );
    assert!(
        (gap_lo - 4.75).abs() <= 0.05 && (gap_hi - 7.8).abs() <= 0.05,
        "gap ({gap_lo}, {gap_hi}) outside (4.75, 7.8) +/- 0.05 GHz"
    );
}

/// Criterion 3 — transmission anchor: in-gap bound-state peak at
/// 7.605 +/- 0.005 GHz, and the two independent transmission methods agree
/// on peak and dip frequencies within 1 MHz.
#[test]
fn criterion_03_bound_state_anchor() {
    let m = device_model();
    let (band_lo, _) = hopping_band(&m);
    let ports = WaveguidePorts::default();
    let t1 = sweep_s21(&m, Method::SteadyState, ports, 7.0, 8.6, 3201).unwrap();
    let t2 = sweep_s21(&m, Method::Scattering, ports, 7.0, 8.6, 3201).unwrap();
    let (p1, _) = find_bound_state_peak(&t1, (4.805, band_lo)).unwrap();
    let (p2, _) = find_bound_state_peak(&t2, (4.805, band_lo)).unwrap();
    let d1 = refined_dip(&t1, (7.8, 8.3));
    let d2 = refined_dip(&t2, (7.8, 8.3));
    println!(
        "  peak {p1:.5} GHz (want 7.605 +/- 0.005); methods: peak diff {:.3} MHz, dip diff {:.3} MHz (< 1 MHz)",
        (p1 - p2).abs() * 1e3,
        (d1 - d2).abs() * 1e3
    );
    assert!((p1 - 7.605).abs() <= 0.005, "peak {p1} outside 7.605 +/- 0.005 GHz");
    assert!((p1 - p2).abs() <= 1e-3, "methods disagree on peak: {p1} vs {p2}");
    assert!((d1 - d2).abs() <= 1e-3, "methods disagree on dip: {d1} vs {d2}");
}

/// Criterion 4 — strong-coupling benchmark: qubit resonant with the band
/// edge gives a bound state about 250 MHz (+/- 10%) below the edge with a
/// full width of about 4 MHz (+/- 50%).
#[test]
fn criterion_04_edge_resonant_separation() {
    let mut m = device_model();
    let (band_lo, _) = hopping_band(&m);
    m.qubits[0].omega01 = band_lo;
    m.qubits[1].omega01 = 4.5;
    let tr = sweep_s21(&m, Method::SteadyState, WaveguidePorts::default(), 7.0, 7.9, 9001).unwrap();
    let (pk, fwhm) = find_bound_state_peak(&tr, (4.805, band_lo)).unwrap();
    let sep = (band_lo - pk) * 1e3;
    println!("  separation {sep:.1} MHz (want 250 +/- 25), fwhm {:.2} MHz (want 4 +/- 2)", fwhm * 1e3);
    assert!((sep - 250.0).abs() <= 25.0, "separation {sep} MHz outside 250 +/- 25 MHz");
    assert!((fwhm * 1e3 - 4.0).abs() <= 2.0, "fwhm {} MHz outside 4 +/- 2 MHz", fwhm * 1e3);
}

/// Criterion 5 — dressed anharmonicity: 0.11 +/- 0.01 GHz when the bound
/// state sits at 7.59 GHz, recovering the bare 0.365 GHz deep in the gap,
/// collapsing to zero in the passband, monotone throughout.
#[test]
fn criterion_05_anharmonicity_curve() {
    // place the bound state at 7.59 GHz by tuning the bare frequency
    let bound_energy = |w: f64| {
        let m = single_qubit(w, 0.55);
        let b = build_sector_basis(&m, 1);
        let h = assemble_hamiltonian(&m, &b).unwrap();
        h.eigvalsh(UPLO::Lower).unwrap().iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let w_at_759 = bisect(|w| bound_energy(w) - 7.59, 7.6, 8.4, 1e-6);
    let anh = dressed_anharmonicity(&single_qubit(w_at_759, 0.55), w_at_759).unwrap();
    let deep = dressed_anharmonicity(&single_qubit(5.0, 0.55), 5.0).unwrap();
    let passband = dressed_anharmonicity(&single_qubit(9.0, 0.55), 9.0).unwrap();
    println!(
        "  at bound state 7.59 GHz (bare {w_at_759:.4}): anharmonicity {anh:.4} GHz (want 0.11 +/- 0.01); deep-gap {deep:.4} -> 0.365, passband {passband:.4} -> 0"
    );
    let mut prev = f64::INFINITY;
    for w in [5.0, 6.0, 6.5, 7.0, 7.5, w_at_759, 9.0] {
        let a = dressed_anharmonicity(&single_qubit(w, 0.55), w).unwrap();
        assert!(a < prev, "anharmonicity not monotone decreasing at {w}");
        prev = a;
    }
    assert!((deep - 0.365).abs() <= 0.02, "deep-gap value {deep} does not approach 0.365");
    assert!(passband.abs() <= 0.005, "passband value {passband} does not approach 0");
    assert!((anh - 0.11).abs() <= 0.01, "anharmonicity {anh} outside 0.11 +/- 0.01 GHz");
}

/// Criterion 6 — two-qubit existence threshold: with g = 0.5275 GHz,
/// alpha = 1.155 GHz and one-site separation, the merging branch disappears
/// when the qubits sit 120 +/- 2 MHz above the edge.
#[test]
fn criterion_06_existence_threshold() {
    let (g, alpha, omega0) = (0.5275, 1.155, 7.8);
    let thr = bisect(
        |det| {
            let (sym, _) = symmetric_antisymmetric(omega0 + det, g, omega0, alpha, 1).unwrap();
            if sym.exists { 1.0 } else { -1.0 }
        },
        0.02,
        0.5,
        1e-9,
    );
    println!("  symmetric-branch threshold {:.3} MHz (want 120 +/- 2)", thr * 1e3);
    assert!((thr * 1e3 - 120.0).abs() <= 2.0, "threshold {} MHz outside 120 +/- 2", thr * 1e3);
}

/// Criterion 7 — avoided crossings: one-excitation minimum gap about
/// 240 MHz (+/- 15%) with the fixed qubit at 7.73 GHz, monotone shrinking
/// deeper into the gap; in the two-excitation sector the doubly-excited
/// exchange gap exceeds 10 MHz and the gap to the shared state is at least
/// five times larger.
#[test]
fn criterion_07_avoided_crossings() {
    let m = qubit_pair((8, 9), 7.5, 0.55, 0.505);
    let sc = one_excitation_crossing(&m, 7.73, (7.3, 8.2), 181).unwrap();
    let gap_mhz = sc.min_gap * 1e3;
    println!("  one-excitation min gap {gap_mhz:.1} MHz at {:.4} GHz (want 240 +/- 36)", sc.gap_location);
    assert!((gap_mhz - 240.0).abs() <= 36.0, "gap {gap_mhz} MHz outside 240 +/- 15%");

    let mut prev = f64::INFINITY;
    for wf in [7.7, 7.5, 7.3, 7.1, 6.7, 6.3] {
        let m = qubit_pair((8, 9), wf, 0.55, 0.505);
        let sc = one_excitation_crossing(&m, wf, (wf - 0.35, wf + 0.35), 141).unwrap();
        assert!(sc.min_gap < prev, "gap does not shrink deeper in the gap at {wf}");
        prev = sc.min_gap;
    }

    let m2 = qubit_pair((8, 9), 7.27, 0.55, 0.505);
    let sc2 = two_excitation_crossing(&m2, 7.27, (7.1, 7.45), 141).unwrap();
    let exch = sc2.branch_gaps["doubly-excited-exchange"];
    let shared = sc2.branch_gaps["doubly-excited-to-shared"];
    println!("  two-excitation gaps: exchange {:.1} MHz (> 10), shared {:.1} MHz (>= 5x)", exch * 1e3, shared * 1e3);
    assert!(exch > 0.010, "exchange gap {} MHz below 10 MHz", exch * 1e3);
    assert!(shared >= 5.0 * exch, "shared gap {} not 5x the exchange gap {}", shared, exch);
}

/// Criterion 8 — dressing angle: cos(theta) = 0.68 +/- 0.01 for the
/// 7.59 GHz bound state; the reduced-drive ladder tracks all driven
/// transition frequencies among the three lowest levels within 5 MHz across
/// the Rabi range, while the undressed amplitude misses by over 20 MHz.
#[test]
fn criterion_08_dressing_angle() {
    let m = single_qubit(7.97, 0.55);
    let mut lv = vec![0.0];
    for n in 1..=3 {
        let b = build_sector_basis(&m, n);
        let h = assemble_hamiltonian(&m, &b).unwrap();
        lv.push(h.eigvalsh(UPLO::Lower).unwrap().iter().cloned().fold(f64::INFINITY, f64::min));
    }
    let wd = lv[1];
    let ct = dressing_angle_exact(&m, 0).unwrap();
    println!("  bound state {wd:.5} GHz, cos(theta) = {ct:.4} (want 0.68 +/- 0.01)");
    assert!((ct - 0.68).abs() <= 0.01, "cos(theta) {ct} outside 0.68 +/- 0.01");

    let low_pairs = |a: &[f64], b: &[f64]| -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    worst = worst.max(((a[i] - a[j]) - (b[i] - b[j])).abs());
                }
            }
        }
        worst
    };
    let mut worst_reduced = 0.0f64;
    let mut best_bare = 0.0f64;
    for om in [0.01, 0.03, 0.05] {
        let full = emission_sidebands(&m, DriveParams { omega_d: wd, epsilon: 0.0, rabi: om }, 2).unwrap();
        let reduced = dressed_qubit_sidebands(&lv, wd, om * ct).unwrap();
        let bare = dressed_qubit_sidebands(&lv, wd, om).unwrap();
        let err_r = low_pairs(&full.selected_energies, &reduced.selected_energies);
        let err_b = low_pairs(&full.selected_energies, &bare.selected_energies);
        println!("  drive {om:.2} GHz: reduced-model error {:.2} MHz, undressed error {:.2} MHz", err_r * 1e3, err_b * 1e3);
        worst_reduced = worst_reduced.max(err_r);
        best_bare = best_bare.max(err_b);
    }
    assert!(worst_reduced <= 5e-3, "reduced model off by {} MHz", worst_reduced * 1e3);
    assert!(best_bare > 20e-3, "undressed amplitude never deviates past 20 MHz");
}

/// Criterion 9 — emission ladder values: the drive-frame offsets of the
/// three- and four-excitation ladder levels, -0.48 and -1.78 GHz, within
/// 10 MHz of the full-model diagonalization.
#[test]
fn criterion_09_emission_ladder_values() {
    let m = single_qubit(7.97, 0.55);
    let mut lv = vec![0.0];
    for n in 1..=4 {
        let b = build_sector_basis(&m, n);
        let h = assemble_hamiltonian(&m, &b).unwrap();
        lv.push(h.eigvalsh(UPLO::Lower).unwrap().iter().cloned().fold(f64::INFINITY, f64::min));
    }
    let wd = lv[1];
    let off3 = lv[3] - 3.0 * wd;
    let off4 = lv[4] - 4.0 * wd;
    println!(
        "  full model: third-level offset {off3:.4} GHz (reference -0.48), fourth-level offset {off4:.4} GHz (reference -1.78)"
    );
    assert!((off3 - (-0.48)).abs() <= 0.010, "third-level offset {off3} vs -0.48 outside 10 MHz");
    assert!((off4 - (-1.78)).abs() <= 0.010, "fourth-level offset {off4} vs -1.78 outside 10 MHz");
}

/// Criterion 10 — property suites, deterministic spot checks of each
/// invariant (the randomized versions run in the library property tests).
#[test]
fn criterion_10_property_suites() {
    // Hermiticity of the two-excitation device Hamiltonian.
    let m = device_model();
    let b2 = build_sector_basis(&m, 2);
    let h2 = assemble_hamiltonian(&m, &b2).unwrap();
    for i in 0..h2.nrows() {
        for j in 0..i {
            assert!((h2[[i, j]] - h2[[j, i]]).abs() <= 1e-12, "asymmetry at ({i}, {j})");
        }
    }
    println!("  hermiticity: ok");

    // Excitation-number block structure of the undriven product-space matrix.
    let single = m.retain_qubits(&[1]).unwrap();
    let db = build_driven_basis(&single, 2);
    let hd = assemble_driven_hamiltonian(&single, 7.5, 0.0, &db).unwrap();
    for i in 0..hd.nrows() {
        for j in 0..i {
            if db.states[i].total_excitations() != db.states[j].total_excitations() {
                assert!(hd[[i, j]].abs() <= 1e-14, "excitation block broken at ({i}, {j})");
            }
        }
    }
    println!("  excitation-block structure: ok");

    // Lossless transfer-matrix flux conservation to 1e-10.
    for freq in [1.0, 4.5, 6.2, 7.9, 11.3, 18.8] {
        let (s11, s21) = transfer_matrix_s_params(&UnitCell::reference(), 16, freq, 50.0).unwrap();
        let total = s11.norm_sqr() + s21.norm_sqr();
        assert!((total - 1.0).abs() <= 1e-10, "flux {total} at {freq} GHz");
    }
    println!("  transfer-matrix flux conservation (1e-10): ok");

    // g -> 0 factorization of the one-excitation spectrum to 1e-12.
    let mut decoupled = m.clone();
    for q in &mut decoupled.qubits {
        q.g = 0.0;
    }
    let b1 = build_sector_basis(&decoupled, 1);
    let h1 = assemble_hamiltonian(&decoupled, &b1).unwrap();
    let mut vals = h1.eigvalsh(UPLO::Lower).unwrap().to_vec();
    let photons =
        LatticeModel::new(16, m.hoppings.clone(), vec![], LossParams::default()).unwrap();
    let pb = build_sector_basis(&photons, 1);
    let ph = assemble_hamiltonian(&photons, &pb).unwrap();
    let mut expected = ph.eigvalsh(UPLO::Lower).unwrap().to_vec();
    expected.extend(m.qubits.iter().map(|q| q.omega01));
    expected.sort_by(f64::total_cmp);
    vals.sort_by(f64::total_cmp);
    for (a, b) in vals.iter().zip(&expected) {
        assert!((a - b).abs() <= 1e-12, "factorization broken: {a} vs {b}");
    }
    println!("  zero-coupling factorization (1e-12): ok");

    // Second-order elimination converges on the exact bound energy deep in
    // the gap, with the residual shrinking like g^4.
    let (omega0, alpha, w) = (7.75515, 1.1464, 6.3);
    // at large separation the two-qubit second-order energies reduce to the
    // isolated-qubit shift, which is what the exact solver must approach
    let err_at = |g: f64| {
        let exact = single_qubit_bound_energy(w, g, omega0, alpha).unwrap().energy;
        let (pert, _, _) = born_markov_energies(w, g, omega0, alpha, 40).unwrap();
        (exact - pert).abs()
    };
    let (e_small, e_large) = (err_at(0.1), err_at(0.3));
    assert!(e_small < 1e-4, "perturbative energy off by {e_small} GHz at g = 0.1");
    assert!(e_large / e_small > 20.0, "residual not shrinking like g^4");
    println!("  second-order elimination converges deep in gap: ok");

    // Two-photon exchange scales as g^4: log-log slope 4.0 +/- 0.2.
    let (w02, w12) = (14.5, 7.0);
    let e1 = two_photon_exchange(omega0, alpha, 0.1, w02, w12, 1, ExchangeMode::ExactQuadrature)
        .unwrap()
        .abs();
    let e2 = two_photon_exchange(omega0, alpha, 0.2, w02, w12, 1, ExchangeMode::ExactQuadrature)
        .unwrap()
        .abs();
    let slope = (e2 / e1).ln() / 2.0_f64.ln();
    assert!((slope - 4.0).abs() <= 0.2, "log-log slope {slope} outside 4.0 +/- 0.2");
    println!("  two-photon exchange g^4 scaling (slope {slope:.3}): ok");

    // Round-trip fit identifiability on a noiseless synthetic trace.
    let truth = device_model();
    let (band_lo, _) = hopping_band(&truth);
    let tr = sweep_s21(&truth, Method::SteadyState, WaveguidePorts::default(), 7.0, 8.6, 3201)
        .unwrap();
    let (peak, _) = find_bound_state_peak(&tr, (4.805, band_lo)).unwrap();
    let dip = refined_dip(&tr, (7.78, 8.3));
    let mut start = truth.clone();
    start.qubits[1].g = 0.4;
    start.qubits[1].omega01 = 8.2;
    let (g_fit, w_fit) = bandgap_qed::fitting::fit_coupling(peak, dip, &start, 1)
        .map(|(a, b)| (a.value, b.value))
        .unwrap();
    assert!((g_fit - 0.55).abs() <= 2e-3, "coupling round-trip {g_fit} vs 0.55");
    assert!((w_fit - 7.9875).abs() <= 2e-3, "frequency round-trip {w_fit} vs 7.9875");
    println!("  round-trip fit identifiability (g {g_fit:.4}, omega {w_fit:.4}): ok");

    // CLI outputs are byte-identical across repeated runs.
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("config.json");
    std::fs::write(
        &cfg_path,
        serde_json::json!({
            "unit_cell": { "z_lo": 25.0, "z_hi": 124.0, "l_lo": 1.2e-3, "l_hi": 7.8e-3, "v_p": 1.248e8 },
            "n_cells": 8,
            "qubits": [{ "site": 5, "omega01": 7.9, "delta": 0.365, "g": 0.55, "n_levels": 3 }],
            "losses": { "kappa": 1.0, "kappa0": 0.004, "kappa_q": 0.0005 },
            "ports": { "v_g": 1.0, "g_w": 2.0 },
            "sweep": { "f_start": 7.0, "f_stop": 8.6, "n_points": 201 }
        })
        .to_string(),
    )
    .unwrap();
    let mut contents = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}"));
        std::fs::create_dir(&out).unwrap();
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_bandgap-qed"))
            .args(["dispersion", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        let mut files: Vec<_> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        let blob: Vec<(String, Vec<u8>)> = files
            .iter()
            .map(|p| {
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    std::fs::read(p).unwrap(),
                )
            })
            .collect();
        contents.push(blob);
    }
    assert_eq!(contents[0], contents[1], "CLI outputs differ between identical runs");
    println!("  CLI output determinism: ok");
}
