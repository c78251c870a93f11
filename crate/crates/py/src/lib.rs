//! Python bindings: a thin functional layer over the simulator core.
//! Experiment descriptions cross the boundary as JSON strings with the same
//! schema the command-line tool consumes.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bandgap_qed::boundstates::{
    dressing_angle_exact, single_qubit_bound_energy, symmetric_antisymmetric,
};
use bandgap_qed::config::ExperimentConfig;
use bandgap_qed::crystal::BandSolver;
use bandgap_qed::fitting::{fit_coupling, FitReport};
use bandgap_qed::lattice::LatticeModel;
use bandgap_qed::spectra::{
    dressed_anharmonicity as core_dressed_anharmonicity, dressed_qubit_sidebands,
    one_excitation_crossing, two_excitation_crossing,
};
use bandgap_qed::transmission::{
    find_bound_state_peak, hopping_band, sweep_s21, Method,
};

fn to_py_err(e: bandgap_qed::Error) -> PyErr {
    match e {
        bandgap_qed::Error::InvalidParameter(_) | bandgap_qed::Error::Domain(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse_config(config_json: &str) -> PyResult<ExperimentConfig> {
    ExperimentConfig::from_json_str(config_json).map_err(to_py_err)
}

fn build(config_json: &str) -> PyResult<(ExperimentConfig, LatticeModel)> {
    let cfg = parse_config(config_json)?;
    let model = cfg.build_model().map_err(to_py_err)?;
    Ok((cfg, model))
}

/// JSON text of the default device: 16 cells, two transmons on the central
/// sites, the standard loss model and sweep window.
#[pyfunction]
fn default_device_json() -> PyResult<String> {
    ExperimentConfig::reference_device()
        .to_json_pretty()
        .map_err(to_py_err)
}

/// Band edges, gap, and quadratic edge curvature of the configured crystal.
#[pyfunction]
fn band_structure(py: Python<'_>, config_json: &str) -> PyResult<Py<PyDict>> {
    let cfg = parse_config(config_json)?;
    let solver = BandSolver::new(cfg.unit_cell.clone(), 40.0).map_err(to_py_err)?;
    let b = cfg.band_index;
    let (f_min, f_max) = solver.band_edges(b).map_err(to_py_err)?;
    let fit = solver.fit_band_edge(b, 0.3).map_err(to_py_err)?;
    let d = PyDict::new_bound(py);
    d.set_item("band_index", b)?;
    d.set_item("f_min_ghz", f_min)?;
    d.set_item("f_max_ghz", f_max)?;
    d.set_item("edge_ghz", fit.omega0)?;
    d.set_item("alpha_ghz", fit.alpha)?;
    if b > 1 {
        let (lo, _) = solver.band_edges(b - 1).map_err(to_py_err)?;
        d.set_item("gap_ghz", (lo, f_min))?;
    }
    Ok(d.into())
}

/// Photon hopping amplitudes J_0..J_r of the configured band (GHz).
#[pyfunction]
fn hopping_amplitudes(config_json: &str) -> PyResult<Vec<f64>> {
    let (_, model) = build(config_json)?;
    Ok((0..=model.hoppings.max_range())
        .map(|r| model.hoppings.at(r))
        .collect())
}

/// Transmission sweep over the configured grid.
/// Returns (frequencies_ghz, |s21|) lists; method is "steady" or "scatter".
#[pyfunction]
#[pyo3(signature = (config_json, method = "steady"))]
fn transmission(config_json: &str, method: &str) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let (cfg, model) = build(config_json)?;
    let m = match method {
        "steady" => Method::SteadyState,
        "scatter" => Method::Scattering,
        other => {
            return Err(PyValueError::new_err(format!(
                "method must be 'steady' or 'scatter', got {other:?}"
            )))
        }
    };
    let trace = sweep_s21(
        &model,
        m,
        cfg.ports,
        cfg.sweep.f_start,
        cfg.sweep.f_stop,
        cfg.sweep.n_points,
    )
    .map_err(to_py_err)?;
    Ok((trace.freqs.clone(), trace.magnitudes()))
}

/// In-gap bound-state peak of the steady-state trace: (peak_ghz, fwhm_ghz).
#[pyfunction]
fn bound_state_peak(config_json: &str) -> PyResult<(f64, f64)> {
    let (cfg, model) = build(config_json)?;
    let trace = sweep_s21(
        &model,
        Method::SteadyState,
        cfg.ports,
        cfg.sweep.f_start,
        cfg.sweep.f_stop,
        cfg.sweep.n_points,
    )
    .map_err(to_py_err)?;
    let gap_hi = hopping_band(&model).0;
    find_bound_state_peak(&trace, (cfg.sweep.f_start, gap_hi)).map_err(to_py_err)
}

/// Infinite-crystal bound-state energy below a quadratic band edge (GHz).
#[pyfunction]
fn bound_energy(omega01: f64, g: f64, edge: f64, alpha: f64) -> PyResult<f64> {
    single_qubit_bound_energy(omega01, g, edge, alpha)
        .map(|s| s.energy)
        .map_err(to_py_err)
}

/// Symmetric/antisymmetric pair energies for two equal qubits
/// `distance` sites apart; absent branches come back as None.
#[pyfunction]
fn pair_energies(
    omega01: f64,
    g: f64,
    edge: f64,
    alpha: f64,
    distance: usize,
) -> PyResult<(Option<f64>, Option<f64>)> {
    let (s, a) = symmetric_antisymmetric(omega01, g, edge, alpha, distance).map_err(to_py_err)?;
    let pick = |b: bandgap_qed::boundstates::BoundStateSolution| b.exists.then_some(b.energy);
    Ok((pick(s), pick(a)))
}

/// Dressed anharmonicity 2 E1 - E2 of the configured single-qubit device at
/// bare frequency `omega01` (GHz).
#[pyfunction]
fn dressed_anharmonicity(config_json: &str, omega01: f64) -> PyResult<f64> {
    let (_, model) = build(config_json)?;
    core_dressed_anharmonicity(&model, omega01).map_err(to_py_err)
}

/// cos(theta) of the qubit weight in the dressed bound state.
#[pyfunction]
#[pyo3(signature = (config_json, which_qubit = 0))]
fn dressing_cosine(config_json: &str, which_qubit: usize) -> PyResult<f64> {
    let (_, model) = build(config_json)?;
    dressing_angle_exact(&model, which_qubit).map_err(to_py_err)
}

/// Avoided-crossing scan: sweep qubit 0 over (start, stop) with the partner
/// fixed. Returns a dict with the minimum gap, its location, per-branch
/// gaps, and any branch-tracking warnings.
#[pyfunction]
#[pyo3(signature = (config_json, fixed_ghz, start_ghz, stop_ghz, n_points, manifold = 1))]
fn crossing_scan(
    py: Python<'_>,
    config_json: &str,
    fixed_ghz: f64,
    start_ghz: f64,
    stop_ghz: f64,
    n_points: usize,
    manifold: usize,
) -> PyResult<Py<PyDict>> {
    let (_, model) = build(config_json)?;
    let scan = match manifold {
        1 => one_excitation_crossing(&model, fixed_ghz, (start_ghz, stop_ghz), n_points),
        2 => two_excitation_crossing(&model, fixed_ghz, (start_ghz, stop_ghz), n_points),
        other => {
            return Err(PyValueError::new_err(format!(
                "manifold must be 1 or 2, got {other}"
            )))
        }
    }
    .map_err(to_py_err)?;
    let d = PyDict::new_bound(py);
    d.set_item("min_gap_ghz", scan.min_gap)?;
    d.set_item("gap_location_ghz", scan.gap_location)?;
    d.set_item("sweep_values_ghz", scan.sweep_values)?;
    d.set_item("eigen_traces_ghz", scan.eigen_traces)?;
    d.set_item(
        "branch_gaps_ghz",
        scan.branch_gaps.into_iter().collect::<Vec<_>>(),
    )?;
    d.set_item("warnings", scan.warnings)?;
    Ok(d.into())
}

/// Lab-frame sideband frequencies of a resonantly driven dressed-qubit
/// ladder with absolute level energies `levels_ghz` (level 0 at zero).
#[pyfunction]
fn ladder_sidebands(levels_ghz: Vec<f64>, drive_ghz: f64, rabi_ghz: f64) -> PyResult<Vec<f64>> {
    dressed_qubit_sidebands(&levels_ghz, drive_ghz, rabi_ghz)
        .map(|s| s.sidebands)
        .map_err(to_py_err)
}

/// Fit coupling and bare frequency of one qubit from a measured in-gap peak
/// and in-band dip. Returns {"g": ..., "omega01": ...} in GHz.
#[pyfunction]
#[pyo3(signature = (config_json, bound_ghz, dip_ghz, which_qubit = 0))]
fn fit_qubit_coupling(
    py: Python<'_>,
    config_json: &str,
    bound_ghz: f64,
    dip_ghz: f64,
    which_qubit: usize,
) -> PyResult<Py<PyDict>> {
    let (_, model) = build(config_json)?;
    let (g, omega01): (FitReport, FitReport) =
        fit_coupling(bound_ghz, dip_ghz, &model, which_qubit).map_err(to_py_err)?;
    let d = PyDict::new_bound(py);
    d.set_item("g", g.value)?;
    d.set_item("omega01", omega01.value)?;
    Ok(d.into())
}

#[pymodule]
fn bandgap_qed_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(default_device_json, m)?)?;
    m.add_function(wrap_pyfunction!(band_structure, m)?)?;
    m.add_function(wrap_pyfunction!(hopping_amplitudes, m)?)?;
    m.add_function(wrap_pyfunction!(transmission, m)?)?;
    m.add_function(wrap_pyfunction!(bound_state_peak, m)?)?;
    m.add_function(wrap_pyfunction!(bound_energy, m)?)?;
    m.add_function(wrap_pyfunction!(pair_energies, m)?)?;
    m.add_function(wrap_pyfunction!(dressed_anharmonicity, m)?)?;
    m.add_function(wrap_pyfunction!(dressing_cosine, m)?)?;
    m.add_function(wrap_pyfunction!(crossing_scan, m)?)?;
    m.add_function(wrap_pyfunction!(ladder_sidebands, m)?)?;
    m.add_function(wrap_pyfunction!(fit_qubit_coupling, m)?)?;
    Ok(())
}
