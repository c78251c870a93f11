//! Coupled-cavity hopping model with attached multilevel qubits: basis
//! enumeration for fixed-excitation sectors and Hamiltonian assembly.

use std::collections::HashMap;
use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::crystal::{BandSolver, UnitCell, DEFAULT_CEILING_GHZ};
use crate::error::{Error, Result};
use crate::numeric::adaptive_quad;

/// Real hopping amplitudes J_0..J_max (GHz), indexed by site distance.
/// J_0 is the on-site frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoppingCoefficients {
    pub j: Vec<f64>,
}

impl HoppingCoefficients {
    pub fn max_range(&self) -> usize {
        self.j.len().saturating_sub(1)
    }

    pub fn on_site(&self) -> f64 {
        self.j[0]
    }

    /// J_r for a site distance r, zero beyond the stored range.
    pub fn at(&self, r: usize) -> f64 {
        self.j.get(r).copied().unwrap_or(0.0)
    }
}

/// A multilevel transmon attached to one lattice site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitSpec {
    /// 1-based lattice site index.
    pub site: usize,
    /// Bare |0> to |1> transition frequency (GHz).
    pub omega01: f64,
    /// Bare anharmonicity (GHz, positive); level n sits at
    /// n*omega01 - n(n-1)/2 * delta.
    pub delta: f64,
    /// Coupling amplitude g to the qubit's own site (GHz); the
    /// |n-1> to |n> matrix element is sqrt(n) * g.
    pub g: f64,
    /// Number of retained levels (2..=5).
    pub n_levels: usize,
}

impl QubitSpec {
    /// Bare energy of level `n`.
    pub fn level_energy(&self, n: usize) -> f64 {
        let nf = n as f64;
        nf * self.omega01 - nf * (nf - 1.0) / 2.0 * self.delta
    }
}

/// Loss halfwidths for the steady-state transmission method (GHz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LossParams {
    /// End-site photonic decay halfwidth.
    pub kappa: f64,
    /// Uniform photonic halfwidth.
    pub kappa0: f64,
    /// Qubit halfwidth.
    pub kappa_q: f64,
}

impl LossParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kappa", self.kappa), ("kappa0", self.kappa0), ("kappa_q", self.kappa_q)] {
            if !(v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// The N-site hopping model with attached qubits; the single source of truth
/// for every Hamiltonian built in this crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeModel {
    pub n_sites: usize,
    pub hoppings: HoppingCoefficients,
    pub qubits: Vec<QubitSpec>,
    pub losses: LossParams,
}

impl LatticeModel {
    pub fn new(
        n_sites: usize,
        hoppings: HoppingCoefficients,
        qubits: Vec<QubitSpec>,
        losses: LossParams,
    ) -> Result<Self> {
        let model = LatticeModel {
            n_sites,
            hoppings,
            qubits,
            losses,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::InvalidParameter("n_sites must be >= 1".into()));
        }
        if self.hoppings.j.is_empty() {
            return Err(Error::InvalidParameter(
                "hoppings must at least contain J_0".into(),
            ));
        }
        if self.hoppings.max_range() >= self.n_sites {
            return Err(Error::InvalidParameter(format!(
                "hopping range {} must be below n_sites {}",
                self.hoppings.max_range(),
                self.n_sites
            )));
        }
        for (i, q) in self.qubits.iter().enumerate() {
            if q.site == 0 || q.site > self.n_sites {
                return Err(Error::InvalidParameter(format!(
                    "qubit {i} site {} outside 1..={}",
                    q.site, self.n_sites
                )));
            }
            if !(2..=5).contains(&q.n_levels) {
                return Err(Error::InvalidParameter(format!(
                    "qubit {i} n_levels {} outside 2..=5",
                    q.n_levels
                )));
            }
            for other in &self.qubits[..i] {
                if other.site == q.site {
                    return Err(Error::InvalidParameter(format!(
                        "duplicate qubit site {}",
                        q.site
                    )));
                }
            }
        }
        self.losses.validate()
    }

    /// The same model with only the listed qubits retained (used to drop a
    /// far-detuned qubit from driven or anharmonicity simulations).
    pub fn retain_qubits(&self, keep: &[usize]) -> Result<Self> {
        let qubits = keep
            .iter()
            .map(|&i| {
                self.qubits.get(i).copied().ok_or_else(|| {
                    Error::InvalidParameter(format!("qubit index {i} out of range"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LatticeModel::new(self.n_sites, self.hoppings.clone(), qubits, self.losses)
    }

    /// Stable FNV-1a hash of the serialized model, for trace provenance.
    pub fn stable_hash(&self) -> u64 {
        let json = serde_json::to_string(self).expect("model serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in json.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

/// Hopping coefficients from an arbitrary band dispersion, given as a
/// function of the dimensionless momentum on [0, pi] (frequency in GHz):
/// J_r is the r-th Fourier cosine coefficient of the dispersion.
pub fn hopping_coefficients_from<F: Fn(f64) -> f64>(
    dispersion: F,
    max_range: usize,
) -> Result<HoppingCoefficients> {
    let tol = 1e-7;
    let mut j = Vec::with_capacity(max_range + 1);
    for r in 0..=max_range {
        let rf = r as f64;
        // real and imaginary parts of int_{-pi}^{pi} dk/2pi e^{ikr} w(k),
        // with w even in k
        let re = adaptive_quad(|k| (rf * k).cos() * dispersion(k.abs()), -PI, PI, tol)?
            / (2.0 * PI);
        let im = adaptive_quad(|k| (rf * k).sin() * dispersion(k.abs()), -PI, PI, tol)?
            / (2.0 * PI);
        if im.abs() > 1e-8 {
            return Err(Error::NonRealHopping { range: r, imag: im });
        }
        j.push(re);
    }
    Ok(HoppingCoefficients { j })
}

/// Hopping coefficients for one band of a unit cell (band 2 for this device).
pub fn hopping_coefficients(cell: &UnitCell, band_index: usize, max_range: usize) -> Result<HoppingCoefficients> {
    let solver = BandSolver::new(*cell, DEFAULT_CEILING_GHZ)?;
    let a = cell.period();
    let disp = |k_tilde: f64| {
        solver
            .dispersion(band_index, k_tilde / a)
            .expect("dispersion inside band")
    };
    hopping_coefficients_from(disp, max_range)
}

/// One basis configuration: per-qubit level and per-site photon occupation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub qubit_levels: Vec<u8>,
    pub photons: Vec<u8>,
}

impl Configuration {
    pub fn total_excitations(&self) -> usize {
        self.qubit_levels.iter().map(|&n| n as usize).sum::<usize>()
            + self.photons.iter().map(|&n| n as usize).sum::<usize>()
    }
}

/// Enumerated basis of either a fixed-total-excitation subspace
/// (`n_excitations = Some(n)`) or the photon-truncated driven product space
/// (`n_excitations = None`).
#[derive(Debug, Clone)]
pub struct SectorBasis {
    pub states: Vec<Configuration>,
    pub n_excitations: Option<usize>,
    pub n_sites: usize,
    lookup: HashMap<Configuration, usize>,
}

impl SectorBasis {
    fn from_states(states: Vec<Configuration>, n_excitations: Option<usize>, n_sites: usize) -> Self {
        let lookup = states
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, c)| (c, i))
            .collect();
        SectorBasis {
            states,
            n_excitations,
            n_sites,
            lookup,
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, config: &Configuration) -> Option<usize> {
        self.lookup.get(config).copied()
    }
}

fn push_photon_configs(
    n_sites: usize,
    remaining: usize,
    site: usize,
    photons: &mut Vec<u8>,
    qubit_levels: &[u8],
    out: &mut Vec<Configuration>,
) {
    if site == n_sites {
        if remaining == 0 {
            out.push(Configuration {
                qubit_levels: qubit_levels.to_vec(),
                photons: photons.clone(),
            });
        }
        return;
    }
    if site == n_sites - 1 {
        photons.push(remaining as u8);
        push_photon_configs(n_sites, 0, site + 1, photons, qubit_levels, out);
        photons.pop();
        return;
    }
    for n in 0..=remaining {
        photons.push(n as u8);
        push_photon_configs(n_sites, remaining - n, site + 1, photons, qubit_levels, out);
        photons.pop();
    }
}

fn push_qubit_levels(
    model: &LatticeModel,
    qubit: usize,
    remaining: usize,
    levels: &mut Vec<u8>,
    out: &mut Vec<Configuration>,
    photons_free: bool,
    photon_cap: usize,
) {
    if qubit == model.qubits.len() {
        if photons_free {
            for total in 0..=photon_cap {
                push_photon_configs(model.n_sites, total, 0, &mut Vec::new(), levels, out);
            }
        } else {
            push_photon_configs(model.n_sites, remaining, 0, &mut Vec::new(), levels, out);
        }
        return;
    }
    let cap = (model.qubits[qubit].n_levels - 1).min(if photons_free {
        model.qubits[qubit].n_levels - 1
    } else {
        remaining
    });
    for n in 0..=cap {
        levels.push(n as u8);
        push_qubit_levels(
            model,
            qubit + 1,
            remaining - if photons_free { 0 } else { n },
            levels,
            out,
            photons_free,
            photon_cap,
        );
        levels.pop();
    }
}

/// Enumerate every configuration with a fixed total excitation number, in
/// deterministic lexicographic order (qubit levels outermost).
pub fn build_sector_basis(model: &LatticeModel, n_excitations: usize) -> SectorBasis {
    let mut out = Vec::new();
    push_qubit_levels(model, 0, n_excitations, &mut Vec::new(), &mut out, false, 0);
    SectorBasis::from_states(out, Some(n_excitations), model.n_sites)
}

/// Enumerate the photon-truncated product space for driven simulations:
/// every qubit level up to n_levels - 1 combined with every photon
/// configuration of total occupation <= `photon_cutoff`.
pub fn build_driven_basis(model: &LatticeModel, photon_cutoff: usize) -> SectorBasis {
    let mut out = Vec::new();
    push_qubit_levels(
        model,
        0,
        0,
        &mut Vec::new(),
        &mut out,
        true,
        photon_cutoff,
    );
    SectorBasis::from_states(out, None, model.n_sites)
}

/// Assemble the excitation-conserving Hamiltonian of the model in a basis.
/// Open boundary conditions; hoppings up to the stored range; diagonal qubit
/// ladder energies; sqrt(n)-scaled couplings at each qubit's own site.
/// Hermitian by construction: every off-diagonal amplitude is generated from
/// the identical arithmetic expression on both sides.
pub fn assemble_hamiltonian(model: &LatticeModel, basis: &SectorBasis) -> Result<Array2<f64>> {
    if basis.n_sites != model.n_sites {
        return Err(Error::BasisMismatch {
            expected: model.n_sites,
            got: basis.n_sites,
        });
    }
    let dim = basis.dim();
    let mut h = Array2::<f64>::zeros((dim, dim));
    apply_conserving_terms(model, basis, &mut h);
    Ok(h)
}

fn apply_conserving_terms(model: &LatticeModel, basis: &SectorBasis, h: &mut Array2<f64>) {
    let n = model.n_sites;
    let range = model.hoppings.max_range();
    let j0 = model.hoppings.on_site();
    for (s, config) in basis.states.iter().enumerate() {
        // diagonal: on-site photon energy + bare qubit ladder
        let mut diag = 0.0;
        for &np in &config.photons {
            diag += np as f64 * j0;
        }
        for (q, &lvl) in config.qubit_levels.iter().enumerate() {
            diag += model.qubits[q].level_energy(lvl as usize);
        }
        h[[s, s]] += diag;

        // hopping: move one photon from site j to site i, both directions
        for src in 0..n {
            if config.photons[src] == 0 {
                continue;
            }
            for r in 1..=range {
                let mut targets = [usize::MAX; 2];
                if src >= r {
                    targets[0] = src - r;
                }
                if src + r < n {
                    targets[1] = src + r;
                }
                for dst in targets {
                    if dst == usize::MAX {
                        continue;
                    }
                    let mut next = config.clone();
                    next.photons[src] -= 1;
                    next.photons[dst] += 1;
                    if let Some(t) = basis.index_of(&next) {
                        let amp = model.hoppings.at(r)
                            * ((config.photons[src] as f64)
                                * (config.photons[dst] as f64 + 1.0))
                                .sqrt();
                        h[[s, t]] += amp;
                    }
                }
            }
        }

        // qubit-site coupling: both lowering (emit photon) and raising (absorb)
        for (q, spec) in model.qubits.iter().enumerate() {
            let z = spec.site - 1;
            let lvl = config.qubit_levels[q] as usize;
            if lvl > 0 {
                let mut next = config.clone();
                next.qubit_levels[q] -= 1;
                next.photons[z] += 1;
                if let Some(t) = basis.index_of(&next) {
                    let amp =
                        spec.g * (lvl as f64).sqrt() * (config.photons[z] as f64 + 1.0).sqrt();
                    h[[s, t]] += amp;
                }
            }
            if lvl + 1 < spec.n_levels && config.photons[z] > 0 {
                let mut next = config.clone();
                next.qubit_levels[q] += 1;
                next.photons[z] -= 1;
                if let Some(t) = basis.index_of(&next) {
                    let amp = spec.g * (lvl as f64 + 1.0).sqrt() * (config.photons[z] as f64).sqrt();
                    h[[s, t]] += amp;
                }
            }
        }
    }
}

/// Rotating-frame driven Hamiltonian for a single-qubit model: the
/// excitation-conserving terms plus a diagonal shift of -n omega_d per total
/// excitation and a drive term `rabi` on the qubit ladder.
pub fn assemble_driven_hamiltonian(
    model: &LatticeModel,
    omega_d: f64,
    rabi: f64,
    basis: &SectorBasis,
) -> Result<Array2<f64>> {
    if model.qubits.len() != 1 {
        return Err(Error::InvalidParameter(
            "driven assembly requires a single-qubit model (drop or retain qubits first)".into(),
        ));
    }
    if basis.n_sites != model.n_sites {
        return Err(Error::BasisMismatch {
            expected: model.n_sites,
            got: basis.n_sites,
        });
    }
    let dim = basis.dim();
    let mut h = Array2::<f64>::zeros((dim, dim));
    apply_conserving_terms(model, basis, &mut h);
    let spec = &model.qubits[0];
    for (s, config) in basis.states.iter().enumerate() {
        h[[s, s]] -= config.total_excitations() as f64 * omega_d;
        let lvl = config.qubit_levels[0] as usize;
        // drive lowers and raises the qubit ladder without a photon
        if lvl > 0 {
            let mut next = config.clone();
            next.qubit_levels[0] -= 1;
            if let Some(t) = basis.index_of(&next) {
                h[[s, t]] += rabi * (lvl as f64).sqrt();
            }
        }
        if lvl + 1 < spec.n_levels {
            let mut next = config.clone();
            next.qubit_levels[0] += 1;
            if let Some(t) = basis.index_of(&next) {
                h[[s, t]] += rabi * (lvl as f64 + 1.0).sqrt();
            }
        }
    }
    Ok(h)
}
