//! Command-line driver: binds a JSON experiment configuration to the library
//! operations and writes figure-ready CSV/JSON files.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use bandgap_qed::boundstates::{single_qubit_bound_energy, symmetric_antisymmetric};
use bandgap_qed::config::ExperimentConfig;
use bandgap_qed::crystal::BandSolver;
use bandgap_qed::fitting::{
    fit_anharmonicity, fit_coupling, fit_edge_loss, fit_qubit_halfwidth, FitReport,
};
use bandgap_qed::lattice::{assemble_hamiltonian, build_sector_basis};
use bandgap_qed::spectra::{
    dressed_anharmonicity, emission_sidebands, one_excitation_crossing, two_excitation_crossing,
};
use bandgap_qed::trace::SpectrumTrace;
use bandgap_qed::transmission::{
    find_bound_state_peak, hopping_band, sweep_s21, DriveParams, Method,
};
use num_complex::Complex64 as C64;

const BAND_CEILING_GHZ: f64 = 40.0;

/// Frequency window above the edge for the quadratic curvature fit (GHz).
const EDGE_FIT_WINDOW_GHZ: f64 = 0.3;

#[derive(Parser)]
#[command(name = "bandgap-qed", version, about = "Photonic-crystal bound-state simulator")]
struct Cli {
    /// Worker-thread cap (also settable via BANDGAP_QED_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Steady,
    Scatter,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Crystal dispersion (k, omega) data plus band-edge and curvature summary.
    Dispersion {
        #[arg(long)]
        config: PathBuf,
        /// Bands to tabulate (1-based); defaults to the configured band.
        #[arg(long)]
        band: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Transmission sweep(s) with an in-gap peak report.
    Transmission {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "steady")]
        method: MethodArg,
        /// Decouple all qubits (saturated reference trace).
        #[arg(long)]
        saturated: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bound-state energy vs bare qubit frequency from exact diagonalization.
    Boundstate {
        #[arg(long)]
        config: PathBuf,
        /// Add the infinite-crystal analytic bound-state energy column.
        #[arg(long)]
        analytic: bool,
        /// Index of the swept qubit.
        #[arg(long, default_value_t = 0)]
        sweep_qubit: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Avoided-crossing scan of a two-qubit device.
    Crossing {
        #[arg(long)]
        config: PathBuf,
        /// Excitation manifold (1 or 2).
        #[arg(long, default_value_t = 1)]
        manifold: usize,
        /// Bare frequency of the fixed qubit (GHz).
        #[arg(long)]
        fixed_qubit: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Driven-emission sideband frequencies over a Rabi-amplitude grid.
    Emission {
        #[arg(long)]
        config: PathBuf,
        /// Drive frequency (GHz).
        #[arg(long)]
        drive: f64,
        /// Rabi grid as start:stop:n (GHz).
        #[arg(long)]
        rabi_grid: String,
        /// Photon-number cutoff of the driven basis.
        #[arg(long, default_value_t = 3)]
        photon_cutoff: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Staged parameter fit driven by a measurement manifest.
    Fit {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Errors partitioned by exit code.
enum CliError {
    Config(String),
    Numeric(String),
}

impl From<bandgap_qed::Error> for CliError {
    fn from(e: bandgap_qed::Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("BANDGAP_QED_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if n > 0 {
            // ignore failure: the pool may already be initialized in tests
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    match run(cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(3)
        }
    }
}

fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cfg = ExperimentConfig::from_json_str(&text)
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

/// Content-derived output stem: `<command>-<12 hex chars of sha256>`.
fn output_stem(command: &str, config_json: &str, flags: &[String]) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(config_json.as_bytes());
    for f in flags {
        h.update([0]);
        h.update(f.as_bytes());
    }
    let digest = h.finalize();
    let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    format!("{command}-{hex}")
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Numeric(e.to_string()))?;
    w.write_record(header)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    for row in rows {
        w.write_record(row)
            .map_err(|e| CliError::Numeric(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Numeric(e.to_string()))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Numeric(e.to_string()))?;
    Ok(())
}

fn ensure_out_dir(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| CliError::Config(format!("{}: {e}", out.display())))
}

fn run(command: Command) -> CliResult<Vec<PathBuf>> {
    match command {
        Command::Dispersion { config, band, out } => cmd_dispersion(&config, &band, &out),
        Command::Transmission { config, method, saturated, out } => {
            cmd_transmission(&config, method, saturated, &out)
        }
        Command::Boundstate { config, analytic, sweep_qubit, out } => {
            cmd_boundstate(&config, analytic, sweep_qubit, &out)
        }
        Command::Crossing { config, manifold, fixed_qubit, out } => {
            cmd_crossing(&config, manifold, fixed_qubit, &out)
        }
        Command::Emission { config, drive, rabi_grid, photon_cutoff, out } => {
            cmd_emission(&config, drive, &rabi_grid, photon_cutoff, &out)
        }
        Command::Fit { manifest, out } => cmd_fit(&manifest, &out),
    }
}

#[derive(Serialize)]
struct BandSummary {
    band_index: usize,
    f_min_ghz: f64,
    f_max_ghz: f64,
    edge_fit_alpha_ghz: Option<f64>,
    edge_fit_omega0_ghz: Option<f64>,
    gap_to_next_ghz: Option<(f64, f64)>,
}

fn cmd_dispersion(config: &Path, bands: &[usize], out: &Path) -> CliResult<Vec<PathBuf>> {
    let cfg = load_config(config)?;
    let cfg_json = cfg.to_json_pretty().map_err(CliError::from)?;
    ensure_out_dir(out)?;
    let bands: Vec<usize> = if bands.is_empty() {
        vec![cfg.band_index]
    } else {
        bands.to_vec()
    };
    let solver = BandSolver::new(cfg.unit_cell.clone(), BAND_CEILING_GHZ)?;
    let k_edge = cfg.unit_cell.k_edge();
    let n = cfg.sweep.n_points;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &b in &bands {
        for i in 0..n {
            let k = k_edge * i as f64 / (n - 1) as f64;
            let w = solver.dispersion(b, k)?;
            rows.push(vec![b.to_string(), fmt(k), fmt(w)]);
        }
        let (f_min, f_max) = solver.band_edges(b)?;
        let fit = solver.fit_band_edge(b, EDGE_FIT_WINDOW_GHZ).ok();
        summaries.push(BandSummary {
            band_index: b,
            f_min_ghz: f_min,
            f_max_ghz: f_max,
            edge_fit_alpha_ghz: fit.map(|f| f.alpha),
            edge_fit_omega0_ghz: fit.map(|f| f.omega0),
            gap_to_next_ghz: solver.band_gap(b).ok(),
        });
    }
    let flags: Vec<String> = bands.iter().map(|b| format!("band={b}")).collect();
    let stem = output_stem("dispersion", &cfg_json, &flags);
    let csv_path = out.join(format!("{stem}.csv"));
    let json_path = out.join(format!("{stem}.json"));
    write_csv(&csv_path, &["band", "k_rad_per_m", "frequency_ghz"], &rows)?;
    write_json(&json_path, &summaries)?;
    Ok(vec![csv_path, json_path])
}

#[derive(Serialize)]
struct PeakReport {
    method: String,
    peak_ghz: Option<f64>,
    fwhm_ghz: Option<f64>,
    note: Option<String>,
}

fn gap_window(cfg: &ExperimentConfig) -> CliResult<(f64, f64)> {
    let solver = BandSolver::new(cfg.unit_cell.clone(), BAND_CEILING_GHZ)?;
    let below = cfg.band_index.saturating_sub(1).max(1);
    let model = cfg.build_model().map_err(CliError::from)?;
    let upper = hopping_band(&model).0;
    let lower = if cfg.band_index > 1 {
        solver.band_edges(below)?.1
    } else {
        0.0
    };
    Ok((lower, upper))
}

fn cmd_transmission(
    config: &Path,
    method: MethodArg,
    saturated: bool,
    out: &Path,
) -> CliResult<Vec<PathBuf>> {
    let cfg = load_config(config)?;
    let cfg_json = cfg.to_json_pretty().map_err(CliError::from)?;
    ensure_out_dir(out)?;
    let mut model = cfg.build_model().map_err(CliError::from)?;
    if saturated {
        for q in &mut model.qubits {
            q.g = 0.0;
        }
    }
    let gap = gap_window(&cfg)?;
    let methods: Vec<Method> = match method {
        MethodArg::Steady => vec![Method::SteadyState],
        MethodArg::Scatter => vec![Method::Scattering],
        MethodArg::Both => vec![Method::SteadyState, Method::Scattering],
    };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut peaks = Vec::new();
    for m in &methods {
        let trace = sweep_s21(
            &model,
            *m,
            cfg.ports,
            cfg.sweep.f_start,
            cfg.sweep.f_stop,
            cfg.sweep.n_points,
        )?;
        for (f, v) in trace.freqs.iter().zip(&trace.values) {
            let mag = v.norm();
            rows.push(vec![
                m.name().to_string(),
                fmt(*f),
                fmt(v.re),
                fmt(v.im),
                fmt(mag),
                fmt(20.0 * mag.max(1e-300).log10()),
            ]);
        }
        match find_bound_state_peak(&trace, gap) {
            Ok((pk, fwhm)) => {
                peaks.push(pk);
                reports.push(PeakReport {
                    method: m.name().to_string(),
                    peak_ghz: Some(pk),
                    fwhm_ghz: Some(fwhm),
                    note: None,
                });
            }
            Err(e) => reports.push(PeakReport {
                method: m.name().to_string(),
                peak_ghz: None,
                fwhm_ghz: None,
                note: Some(e.to_string()),
            }),
        }
    }
    let mut summary = BTreeMap::new();
    summary.insert("peaks".to_string(), serde_json::to_value(&reports).unwrap());
    if peaks.len() == 2 {
        summary.insert(
            "cross_method_peak_difference_ghz".to_string(),
            serde_json::json!((peaks[0] - peaks[1]).abs()),
        );
    }
    let flags = vec![
        format!("method={}", methods.iter().map(|m| m.name()).collect::<Vec<_>>().join("+")),
        format!("saturated={saturated}"),
    ];
    let stem = output_stem("transmission", &cfg_json, &flags);
    let csv_path = out.join(format!("{stem}.csv"));
    let json_path = out.join(format!("{stem}.json"));
    write_csv(
        &csv_path,
        &["method", "frequency_ghz", "s21_re", "s21_im", "s21_abs", "s21_db"],
        &rows,
    )?;
    write_json(&json_path, &summary)?;
    Ok(vec![csv_path, json_path])
}

fn cmd_boundstate(
    config: &Path,
    analytic: bool,
    sweep_qubit: usize,
    out: &Path,
) -> CliResult<Vec<PathBuf>> {
    use ndarray_linalg::{Eigh, UPLO};
    let cfg = load_config(config)?;
    let cfg_json = cfg.to_json_pretty().map_err(CliError::from)?;
    ensure_out_dir(out)?;
    let base = cfg.build_model().map_err(CliError::from)?;
    if sweep_qubit >= base.qubits.len() {
        return Err(CliError::Config(format!(
            "sweep_qubit {sweep_qubit} out of range for {} qubit(s)",
            base.qubits.len()
        )));
    }
    let solver = BandSolver::new(cfg.unit_cell.clone(), BAND_CEILING_GHZ)?;
    let fit = solver.fit_band_edge(cfg.band_index, EDGE_FIT_WINDOW_GHZ)?;
    let band_lo = hopping_band(&base).0;
    let mut rows = Vec::new();
    for i in 0..cfg.sweep.n_points {
        let w = cfg.sweep.f_start
            + (cfg.sweep.f_stop - cfg.sweep.f_start) * i as f64
                / (cfg.sweep.n_points - 1) as f64;
        let mut m = base.clone();
        m.qubits[sweep_qubit].omega01 = w;
        let basis = build_sector_basis(&m, 1);
        let h = assemble_hamiltonian(&m, &basis)?;
        let (vals, _) = h.eigh(UPLO::Lower).map_err(bandgap_qed::Error::from)?;
        let e_bound = vals
            .iter()
            .cloned()
            .filter(|&e| e < band_lo)
            .fold(f64::INFINITY, f64::min);
        let mut row = vec![
            fmt(w),
            if e_bound.is_finite() { fmt(e_bound) } else { String::new() },
        ];
        if analytic {
            let g = base.qubits[sweep_qubit].g;
            let sol = single_qubit_bound_energy(w, g, fit.omega0, fit.alpha)?;
            row.push(fmt(sol.energy));
        }
        rows.push(row);
    }
    let mut summary = BTreeMap::new();
    summary.insert("band_edge_ghz".to_string(), serde_json::json!(fit.omega0));
    summary.insert("curvature_alpha_ghz".to_string(), serde_json::json!(fit.alpha));
    if base.qubits.len() == 2 {
        let d = base.qubits[0].site.abs_diff(base.qubits[1].site);
        let g2 = base.qubits[0].g * base.qubits[1].g;
        summary.insert(
            "pair_merging_threshold_ghz".to_string(),
            serde_json::json!(0.5 * g2 * d as f64 / fit.alpha),
        );
        let (s, a) = symmetric_antisymmetric(
            base.qubits[0].omega01,
            g2.sqrt(),
            fit.omega0,
            fit.alpha,
            d,
        )?;
        summary.insert(
            "pair_energies_ghz".to_string(),
            serde_json::json!({
                "symmetric": if s.exists { Some(s.energy) } else { None },
                "antisymmetric": if a.exists { Some(a.energy) } else { None },
            }),
        );
    }
    let flags = vec![format!("analytic={analytic}"), format!("sweep_qubit={sweep_qubit}")];
    let stem = output_stem("boundstate", &cfg_json, &flags);
    let csv_path = out.join(format!("{stem}.csv"));
    let json_path = out.join(format!("{stem}.json"));
    let header: Vec<&str> = if analytic {
        vec!["qubit_frequency_ghz", "bound_energy_ghz", "analytic_energy_ghz"]
    } else {
        vec!["qubit_frequency_ghz", "bound_energy_ghz"]
    };
    write_csv(&csv_path, &header, &rows)?;
    write_json(&json_path, &summary)?;
    Ok(vec![csv_path, json_path])
}

fn cmd_crossing(
    config: &Path,
    manifold: usize,
    fixed_qubit: f64,
    out: &Path,
) -> CliResult<Vec<PathBuf>> {
    let cfg = load_config(config)?;
    let cfg_json = cfg.to_json_pretty().map_err(CliError::from)?;
    ensure_out_dir(out)?;
    let model = cfg.build_model().map_err(CliError::from)?;
    let sweep = (cfg.sweep.f_start, cfg.sweep.f_stop);
    let scan = match manifold {
        1 => one_excitation_crossing(&model, fixed_qubit, sweep, cfg.sweep.n_points)?,
        2 => two_excitation_crossing(&model, fixed_qubit, sweep, cfg.sweep.n_points)?,
        other => {
            return Err(CliError::Config(format!(
                "manifold must be 1 or 2, got {other}"
            )))
        }
    };
    let mut rows = Vec::new();
    for (v, trace) in scan.sweep_values.iter().zip(&scan.eigen_traces) {
        for (i, e) in trace.iter().enumerate() {
            rows.push(vec![fmt(*v), i.to_string(), fmt(*e)]);
        }
    }
    let mut summary = BTreeMap::new();
    summary.insert("min_gap_ghz".to_string(), serde_json::json!(scan.min_gap));
    summary.insert("gap_location_ghz".to_string(), serde_json::json!(scan.gap_location));
    summary.insert("branch_gaps_ghz".to_string(), serde_json::to_value(&scan.branch_gaps).unwrap());
    summary.insert("warnings".to_string(), serde_json::to_value(&scan.warnings).unwrap());
    let flags = vec![format!("manifold={manifold}"), format!("fixed_qubit={fixed_qubit:.9}")];
    let stem = output_stem("crossing", &cfg_json, &flags);
    let csv_path = out.join(format!("{stem}.csv"));
    let json_path = out.join(format!("{stem}.json"));
    write_csv(&csv_path, &["swept_frequency_ghz", "branch", "energy_ghz"], &rows)?;
    write_json(&json_path, &summary)?;
    Ok(vec![csv_path, json_path])
}

fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "rabi_grid must be start:stop:n, got {spec:?}"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::Config(format!("rabi_grid start {:?} is not a number", parts[0])))?;
    let stop: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Config(format!("rabi_grid stop {:?} is not a number", parts[1])))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| CliError::Config(format!("rabi_grid n {:?} is not an integer", parts[2])))?;
    if n == 0 || (n > 1 && start >= stop) {
        return Err(CliError::Config(
            "rabi_grid needs n >= 1 and start < stop".into(),
        ));
    }
    Ok((0..n)
        .map(|i| {
            if n == 1 {
                start
            } else {
                start + (stop - start) * i as f64 / (n - 1) as f64
            }
        })
        .collect())
}

fn cmd_emission(
    config: &Path,
    drive: f64,
    rabi_grid: &str,
    photon_cutoff: usize,
    out: &Path,
) -> CliResult<Vec<PathBuf>> {
    let cfg = load_config(config)?;
    let cfg_json = cfg.to_json_pretty().map_err(CliError::from)?;
    let rabis = parse_grid(rabi_grid)?;
    ensure_out_dir(out)?;
    let model = cfg.build_model().map_err(CliError::from)?;
    let mut rows = Vec::new();
    let mut selected = Vec::new();
    for &rabi in &rabis {
        let set = emission_sidebands(
            &model,
            DriveParams { omega_d: drive, epsilon: 0.0, rabi },
            photon_cutoff,
        )?;
        for (i, f) in set.sidebands.iter().enumerate() {
            rows.push(vec![fmt(rabi), i.to_string(), fmt(*f)]);
        }
        selected.push(serde_json::json!({
            "rabi_ghz": rabi,
            "selected_energies_ghz": set.selected_energies,
        }));
    }
    let mut summary = BTreeMap::new();
    summary.insert("drive_ghz".to_string(), serde_json::json!(drive));
    summary.insert("photon_cutoff".to_string(), serde_json::json!(photon_cutoff));
    summary.insert("points".to_string(), serde_json::Value::Array(selected));
    let flags = vec![
        format!("drive={drive:.9}"),
        format!("rabi_grid={rabi_grid}"),
        format!("photon_cutoff={photon_cutoff}"),
    ];
    let stem = output_stem("emission", &cfg_json, &flags);
    let csv_path = out.join(format!("{stem}.csv"));
    let json_path = out.join(format!("{stem}.json"));
    write_csv(&csv_path, &["rabi_ghz", "sideband", "frequency_ghz"], &rows)?;
    write_json(&json_path, &summary)?;
    Ok(vec![csv_path, json_path])
}

/// Measurement manifest for the staged fitting pipeline. Absent observations
/// skip their stage; `synthetic: true` generates every observation from the
/// config itself (round-trip mode).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitManifest {
    config: ExperimentConfig,
    #[serde(default)]
    which_qubit: usize,
    #[serde(default)]
    synthetic: bool,
    #[serde(default)]
    observations: Observations,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Observations {
    /// CSV with frequency_ghz, s21_re, s21_im columns (saturated passband trace).
    trace_csv: Option<PathBuf>,
    bound_state_ghz: Option<f64>,
    dip_ghz: Option<f64>,
    fwhm_ghz: Option<f64>,
    anharmonicity_ghz: Option<f64>,
}

fn read_trace_csv(path: &Path) -> CliResult<SpectrumTrace> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Config(e.to_string()))?;
    let mut freqs = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let r = record.map_err(|e| CliError::Config(e.to_string()))?;
        let parse = |i: usize| -> CliResult<f64> {
            r.get(i)
                .ok_or_else(|| CliError::Config(format!("{}: short row", path.display())))?
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{}: non-numeric field", path.display())))
        };
        freqs.push(parse(0)?);
        values.push(C64::new(parse(1)?, parse(2)?));
    }
    SpectrumTrace::new(freqs, values).map_err(CliError::from)
}

fn cmd_fit(manifest: &Path, out: &Path) -> CliResult<Vec<PathBuf>> {
    let text = fs::read_to_string(manifest)
        .map_err(|e| CliError::Config(format!("{}: {e}", manifest.display())))?;
    let man: FitManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    man.config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let cfg_json = man.config.to_json_pretty().map_err(CliError::from)?;
    ensure_out_dir(out)?;
    let model = man.config.build_model().map_err(CliError::from)?;
    if man.which_qubit >= model.qubits.len() {
        return Err(CliError::Config(format!(
            "which_qubit {} out of range for {} qubit(s)",
            man.which_qubit,
            model.qubits.len()
        )));
    }
    let mut obs = man.observations;
    let mut synthetic_trace = None;
    if man.synthetic {
        let band = hopping_band(&model);
        let mut sat = model.clone();
        for q in &mut sat.qubits {
            q.g = 0.0;
        }
        synthetic_trace = Some(sweep_s21(
            &sat,
            Method::SteadyState,
            man.config.ports,
            band.0 - 0.1,
            band.1 + 0.1,
            1601,
        )?);
        let gap = gap_window(&man.config)?;
        let trace = sweep_s21(
            &model,
            Method::SteadyState,
            man.config.ports,
            gap.1 - 0.8,
            gap.1 - 1e-4,
            2401,
        )?;
        let (pk, fwhm) = find_bound_state_peak(&trace, gap)?;
        obs.bound_state_ghz = Some(pk);
        obs.fwhm_ghz = Some(fwhm);
        let band_trace = sweep_s21(
            &model,
            Method::SteadyState,
            man.config.ports,
            gap.1 + 0.01,
            gap.1 + 0.9,
            2401,
        )?;
        let mags = band_trace.magnitudes();
        let imin = (0..mags.len())
            .min_by(|&a, &b| mags[a].total_cmp(&mags[b]))
            .unwrap();
        obs.dip_ghz = Some(band_trace.freqs[imin]);
        if model.qubits.len() == 1 && model.qubits[man.which_qubit].n_levels >= 3 {
            obs.anharmonicity_ghz = Some(dressed_anharmonicity(
                &model,
                model.qubits[man.which_qubit].omega01,
            )?);
        }
    }
    let mut reports: Vec<FitReport> = Vec::new();
    let mut fitted = model.clone();
    let measured_trace = match (&synthetic_trace, &obs.trace_csv) {
        (Some(t), _) => Some(t.clone()),
        (None, Some(p)) => Some(read_trace_csv(p)?),
        (None, None) => None,
    };
    if let Some(trace) = &measured_trace {
        let (kappa, kappa0) = fit_edge_loss(trace, &fitted)?;
        fitted.losses.kappa = kappa.value;
        fitted.losses.kappa0 = kappa0.value;
        reports.push(kappa);
        reports.push(kappa0);
    }
    if let (Some(bound), Some(dip)) = (obs.bound_state_ghz, obs.dip_ghz) {
        let (g, omega01) = fit_coupling(bound, dip, &fitted, man.which_qubit)?;
        fitted.qubits[man.which_qubit].g = g.value;
        fitted.qubits[man.which_qubit].omega01 = omega01.value;
        reports.push(g);
        reports.push(omega01);
    }
    if let Some(fwhm) = obs.fwhm_ghz {
        let kq = fit_qubit_halfwidth(fwhm, &fitted)?;
        fitted.losses.kappa_q = kq.value;
        reports.push(kq);
    }
    if let Some(anh) = obs.anharmonicity_ghz {
        let delta = fit_anharmonicity(anh, &fitted)?;
        fitted.qubits[man.which_qubit].delta = delta.value;
        reports.push(delta);
    }
    if reports.is_empty() {
        return Err(CliError::Config(
            "manifest provides no observations; nothing to fit".into(),
        ));
    }
    let flags = vec![
        format!("which_qubit={}", man.which_qubit),
        format!("synthetic={}", man.synthetic),
    ];
    let stem = output_stem("fit", &cfg_json, &flags);
    let json_path = out.join(format!("{stem}.json"));
    write_json(&json_path, &reports)?;
    Ok(vec![json_path])
}
