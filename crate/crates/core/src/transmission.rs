//! Two independent transmission calculations through the qubit-loaded
//! crystal: a driven non-Hermitian steady state with phenomenological losses,
//! and a loss-free waveguide-scattering expression built from the
//! single-excitation eigenpairs.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, Solve, UPLO};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{assemble_hamiltonian, build_sector_basis, LatticeModel};
use crate::trace::SpectrumTrace;

/// Probe/drive parameters. `epsilon` is the weak linear probe of the
/// steady-state method; `rabi` is the strong emission drive used by the
/// sideband calculations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DriveParams {
    pub omega_d: f64,
    pub epsilon: f64,
    pub rabi: f64,
}

impl DriveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_d > 0.0) {
            return Err(Error::InvalidParameter("omega_d must be positive".into()));
        }
        if self.epsilon < 0.0 || self.rabi < 0.0 {
            return Err(Error::InvalidParameter(
                "drive amplitudes must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Linear-dispersion waveguide attached at both ends of the crystal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveguidePorts {
    /// velocity-like rate parameter of the waveguide (GHz)
    pub v_g: f64,
    /// crystal-waveguide coupling (GHz)
    pub g_w: f64,
}

impl Default for WaveguidePorts {
    fn default() -> Self {
        WaveguidePorts { v_g: 1.0, g_w: 2.0 }
    }
}

impl WaveguidePorts {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_g > 0.0) || !(self.g_w > 0.0) {
            return Err(Error::InvalidParameter(
                "waveguide parameters must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    SteadyState,
    Scattering,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::SteadyState => "steady-state",
            Method::Scattering => "scattering",
        }
    }
}

/// S21 (up to the global normalization constant) from the driven
/// non-Hermitian steady state: photon amplitudes on every site plus one
/// two-level coherence per qubit, solved as a complex linear system of
/// dimension N + n_qubits. Returns <a_N>/epsilon.
pub fn s21_steady_state(model: &LatticeModel, omega_d: f64) -> Result<C64> {
    let n = model.n_sites;
    let nq = model.qubits.len();
    let dim = n + nq;
    let losses = model.losses;
    let mut h = Array2::<C64>::zeros((dim, dim));
    // photon block: hoppings minus drive frequency, uniform loss, end loss
    for y in 0..n {
        let mut diag = C64::new(model.hoppings.at(0) - omega_d, -losses.kappa0);
        if y == 0 || y == n - 1 {
            diag.im -= losses.kappa;
        }
        h[[y, y]] = diag;
        for r in 1..model.hoppings.max_range() + 1 {
            if y + r < n {
                let j = C64::new(model.hoppings.at(r), 0.0);
                h[[y, y + r]] = j;
                h[[y + r, y]] = j;
            }
        }
    }
    for (qi, q) in model.qubits.iter().enumerate() {
        let row = n + qi;
        h[[row, row]] = C64::new(q.omega01 - omega_d, -losses.kappa_q);
        let site = q.site - 1;
        h[[row, site]] = C64::new(q.g, 0.0);
        h[[site, row]] = C64::new(q.g, 0.0);
    }
    // steady state: 0 = -i H x - i eps e_1  =>  H x = -eps e_1; S21 = x_N/eps
    let mut rhs = Array1::<C64>::zeros(dim);
    rhs[0] = C64::new(-1.0, 0.0);
    let sol = h.solve(&rhs).map_err(|_| {
        // exactly singular only happens with all losses zero at a real
        // eigenvalue; report the drive frequency as the offending eigenvalue
        Error::SingularSystem {
            omega_d,
            eigenvalue: omega_d,
        }
    })?;
    Ok(sol[n - 1])
}

/// Single-excitation eigenpairs of the loss-free model plus the end-site
/// photon weights, precomputed once per model so a frequency sweep is cheap.
pub struct ScatteringSolver {
    eigenvalues: Vec<f64>,
    /// V_n^{l,r} / sqrt(2 v_g) = sqrt(g_w/2) * <0|a_{1,N}|n>; v_g drops out
    v_left: Vec<f64>,
    v_right: Vec<f64>,
}

impl ScatteringSolver {
    pub fn new(model: &LatticeModel, ports: WaveguidePorts) -> Result<Self> {
        ports.validate()?;
        let basis = build_sector_basis(model, 1);
        let h = assemble_hamiltonian(model, &basis)?;
        let (vals, vecs) = h.eigh(UPLO::Lower).map_err(Error::from)?;
        // photon-at-site states come first in the enumeration; locate them
        let mut left = None;
        let mut right = None;
        for (i, st) in basis.states.iter().enumerate() {
            if st.qubit_levels.iter().all(|&l| l == 0) {
                if st.photons[0] == 1 {
                    left = Some(i);
                }
                if st.photons[model.n_sites - 1] == 1 {
                    right = Some(i);
                }
            }
        }
        let (left, right) = (left.unwrap(), right.unwrap());
        let amp = (0.5 * ports.g_w).sqrt();
        let n_states = vals.len();
        let mut eigenvalues = Vec::with_capacity(n_states);
        let mut v_left = Vec::with_capacity(n_states);
        let mut v_right = Vec::with_capacity(n_states);
        for nidx in 0..n_states {
            eigenvalues.push(vals[nidx]);
            v_left.push(amp * vecs[[left, nidx]]);
            v_right.push(amp * vecs[[right, nidx]]);
        }
        Ok(ScatteringSolver {
            eigenvalues,
            v_left,
            v_right,
        })
    }

    /// |T(omega)|^2. Within 1e-9 of an eigenvalue the pole is regularized by
    /// an imaginary frequency offset of 1e-6.
    pub fn transmission(&self, omega: f64) -> f64 {
        let near_pole = self
            .eigenvalues
            .iter()
            .any(|&ev| (omega - ev).abs() < 1e-9);
        let z = if near_pole {
            C64::new(omega, 1e-6)
        } else {
            C64::new(omega, 0.0)
        };
        let mut gamma_l = C64::new(1.0, 0.0);
        let mut gamma_r = C64::new(1.0, 0.0);
        let mut beta = C64::new(0.0, 0.0);
        for n in 0..self.eigenvalues.len() {
            let denom = z - self.eigenvalues[n];
            gamma_l += C64::i() * self.v_left[n] * self.v_left[n] / denom;
            gamma_r += C64::i() * self.v_right[n] * self.v_right[n] / denom;
            // eigenvectors are real, so V_l (V_r)^* is the signed product
            beta += self.v_left[n] * self.v_right[n] / denom;
        }
        let t = C64::new(0.0, -2.0) * beta / (gamma_l * gamma_r + beta.norm_sqr());
        t.norm_sqr()
    }
}

/// Reference amplitude for the dB normalization: the maximum steady-state
/// |S21| over the hopping-model passband with every qubit decoupled
/// (saturated-qubit reference).
pub fn saturated_passband_max(model: &LatticeModel) -> Result<f64> {
    let mut saturated = model.clone();
    for q in &mut saturated.qubits {
        q.g = 0.0;
    }
    let (lo, hi) = hopping_band(model);
    let n = 801;
    let vals: Result<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let f = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            s21_steady_state(&saturated, f).map(|s| s.norm())
        })
        .collect();
    let m = vals?.into_iter().fold(0.0_f64, f64::max);
    if m <= 0.0 {
        return Err(Error::Domain("saturated reference has zero response".into()));
    }
    Ok(m)
}

/// Frequency span of the hopping-model band: J0 + 2 sum_r J_r cos(kr)
/// extremized over k.
pub fn hopping_band(model: &LatticeModel) -> (f64, f64) {
    let n = 2001;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let k = std::f64::consts::PI * i as f64 / (n - 1) as f64;
        let mut w = model.hoppings.at(0);
        for r in 1..model.hoppings.max_range() + 1 {
            w += 2.0 * model.hoppings.at(r) * (k * r as f64).cos();
        }
        lo = lo.min(w);
        hi = hi.max(w);
    }
    (lo, hi)
}

/// Frequency sweep of either method on a uniform grid. Steady-state values
/// are normalized so the saturated-qubit passband maximum is 1; scattering
/// values are stored as the (real) amplitude |T|.
pub fn sweep_s21(
    model: &LatticeModel,
    method: Method,
    ports: WaveguidePorts,
    f_start: f64,
    f_stop: f64,
    n_points: usize,
) -> Result<SpectrumTrace> {
    if !(f_start < f_stop) || n_points < 2 {
        return Err(Error::InvalidParameter(
            "sweep needs f_start < f_stop and at least two points".into(),
        ));
    }
    let freqs: Vec<f64> = (0..n_points)
        .map(|i| f_start + (f_stop - f_start) * i as f64 / (n_points - 1) as f64)
        .collect();
    let mut meta = std::collections::BTreeMap::new();
    meta.insert("method".to_string(), method.name().to_string());
    meta.insert("model_hash".to_string(), format!("{:016x}", model.stable_hash()));
    let values = match method {
        Method::SteadyState => {
            let norm = saturated_passband_max(model)?;
            meta.insert("normalization".to_string(), format!("{norm:.12e}"));
            let vals: Result<Vec<C64>> = freqs
                .par_iter()
                .map(|&f| s21_steady_state(model, f).map(|s| s / norm))
                .collect();
            vals?
        }
        Method::Scattering => {
            let solver = ScatteringSolver::new(model, ports)?;
            meta.insert("normalization".to_string(), "1".to_string());
            freqs
                .par_iter()
                .map(|&f| C64::new(solver.transmission(f).sqrt(), 0.0))
                .collect()
        }
    };
    let mut trace = SpectrumTrace::new(freqs, values)?;
    trace.meta = meta;
    Ok(trace)
}

/// Locate the in-gap bound-state peak of a trace: discrete maximum refined by
/// quadratic interpolation through its three neighbors, FWHM from linearly
/// interpolated half-maximum crossings of |S21|.
pub fn find_bound_state_peak(trace: &SpectrumTrace, gap: (f64, f64)) -> Result<(f64, f64)> {
    let mags = trace.magnitudes();
    let in_gap: Vec<usize> = (0..trace.freqs.len())
        .filter(|&i| trace.freqs[i] > gap.0 && trace.freqs[i] < gap.1)
        .collect();
    if in_gap.len() < 5 {
        return Err(Error::InvalidParameter(
            "trace does not resolve the gap window".into(),
        ));
    }
    let &imax = in_gap
        .iter()
        .max_by(|&&a, &&b| mags[a].total_cmp(&mags[b]))
        .unwrap();
    let mut floor: Vec<f64> = in_gap.iter().map(|&i| mags[i]).collect();
    floor.sort_by(f64::total_cmp);
    let median = floor[floor.len() / 2];
    let ratio = mags[imax] / median.max(1e-300);
    if ratio < 3.0 {
        return Err(Error::NoPeak { ratio });
    }
    // a maximum at the window boundary is a rising floor, not a resonance
    if imax == *in_gap.first().unwrap() || imax == *in_gap.last().unwrap() {
        return Err(Error::NoPeak { ratio });
    }
    // quadratic apex through the three points around the discrete maximum
    let (freq, peak_mag) = if imax == 0 || imax == trace.freqs.len() - 1 {
        (trace.freqs[imax], mags[imax])
    } else {
        let (x0, x1, _) = (
            trace.freqs[imax - 1],
            trace.freqs[imax],
            trace.freqs[imax + 1],
        );
        let (y0, y1, y2) = (mags[imax - 1], mags[imax], mags[imax + 1]);
        let d = (y0 - 2.0 * y1 + y2).min(-1e-300);
        let h = x1 - x0;
        let shift = 0.5 * h * (y0 - y2) / d;
        let apex = y1 - 0.125 * (y0 - y2).powi(2) / d;
        (x1 + shift, apex)
    };
    let half = 0.5 * peak_mag;
    // walk outward from the maximum to the half-maximum crossings
    let cross = |dir: isize| -> Option<f64> {
        let mut i = imax as isize;
        loop {
            let j = i + dir;
            if j < 0 || j as usize >= mags.len() {
                return None;
            }
            if mags[j as usize] <= half {
                let (fa, fb) = (trace.freqs[i as usize], trace.freqs[j as usize]);
                let (ya, yb) = (mags[i as usize], mags[j as usize]);
                let t = (ya - half) / (ya - yb);
                return Some(fa + t * (fb - fa));
            }
            i = j;
        }
    };
    let lo = cross(-1).ok_or(Error::Domain(
        "half-maximum not reached below the peak".into(),
    ))?;
    let hi = cross(1).ok_or(Error::Domain(
        "half-maximum not reached above the peak".into(),
    ))?;
    Ok((freq, hi - lo))
}
