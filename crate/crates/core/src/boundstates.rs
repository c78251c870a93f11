//! Analytic and semi-analytic bound-state solvers for the infinite crystal
//! with quadratic band-edge dispersion w_k = w0 + alpha (a k - pi)^2: one- and
//! two-qubit single-excitation states, the second-order (Born-Markov)
//! comparison, the drive-matrix-element dressing angle, the two-photon bound
//! state, and the fourth-order two-photon exchange strength.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{assemble_hamiltonian, build_sector_basis, HoppingCoefficients, LatticeModel};
use crate::numeric::{adaptive_quad, bisect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Single,
    Symmetric,
    Antisymmetric,
}

/// One in-gap eigenstate of the coupled qubit-crystal system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundStateSolution {
    /// Energy in GHz; NaN when `exists` is false.
    pub energy: f64,
    pub parity: Parity,
    /// Photonic decay length in unit cells, sqrt(alpha/(omega0 - E)).
    pub localization_length: f64,
    /// Real qubit amplitudes (a1, a2); a2 = 0 for a single qubit.
    pub qubit_amplitudes: (f64, f64),
    pub exists: bool,
    /// Residual of the defining transcendental equation at the root.
    pub residual: f64,
}

impl BoundStateSolution {
    fn absent(parity: Parity) -> Self {
        BoundStateSolution {
            energy: f64::NAN,
            parity,
            localization_length: f64::NAN,
            qubit_amplitudes: (f64::NAN, f64::NAN),
            exists: false,
            residual: 0.0,
        }
    }
}

/// F(E) is monotone increasing with F -> +inf at the band edge, so the root
/// below `omega0` is bracketed by stepping the lower end down until the sign
/// flips.
fn solve_below<F: Fn(f64) -> f64>(f: F, ceiling: f64, scale: f64) -> f64 {
    let hi = ceiling - 1e-12;
    let mut lo = ceiling - scale.max(1e-6);
    let mut steps = 0;
    while f(lo) > 0.0 && steps < 200 {
        lo = ceiling - 2.0 * (ceiling - lo);
        steps += 1;
    }
    bisect(f, lo, hi, 1e-14)
}

/// E - omega01 = -g^2 / (2 sqrt(alpha (omega0 - E))), unique root E < omega0.
pub fn single_qubit_bound_energy(
    omega01: f64,
    g: f64,
    omega0: f64,
    alpha: f64,
) -> Result<BoundStateSolution> {
    if g <= 0.0 || alpha <= 0.0 {
        return Err(Error::InvalidParameter(
            "coupling and curvature must be positive".into(),
        ));
    }
    let f = |e: f64| e - omega01 + 0.5 * g * g / (alpha * (omega0 - e)).sqrt();
    let scale = 10.0 * (g * g + (omega0 - omega01).abs() + 1e-3);
    let e = solve_below(f, omega0, scale);
    Ok(BoundStateSolution {
        energy: e,
        parity: Parity::Single,
        localization_length: (alpha / (omega0 - e)).sqrt(),
        qubit_amplitudes: (1.0, 0.0),
        exists: true,
        residual: f(e).abs(),
    })
}

/// All roots E < omega0 of the general two-qubit equation
/// (E - w1 + S1)(E - w2 + S2) = g1^2 g2^2 exp(-2 kappa d) / (4 alpha (w0-E)),
/// with Si = gi^2 / (2 sqrt(alpha (w0-E))) and kappa = sqrt((w0-E)/alpha).
/// Qubit amplitude ratios come from back-substitution.
pub fn two_qubit_bound_energies(
    q1: (f64, f64),
    q2: (f64, f64),
    omega0: f64,
    alpha: f64,
    distance: usize,
) -> Result<Vec<BoundStateSolution>> {
    if distance == 0 {
        return Err(Error::InvalidParameter(
            "qubit distance must be at least one cell".into(),
        ));
    }
    let (w1, g1) = q1;
    let (w2, g2) = q2;
    let d = distance as f64;
    let f = |e: f64| {
        let s = (alpha * (omega0 - e)).sqrt();
        let kappa = ((omega0 - e) / alpha).sqrt();
        (e - w1 + 0.5 * g1 * g1 / s) * (e - w2 + 0.5 * g2 * g2 / s)
            - g1 * g1 * g2 * g2 * (-2.0 * kappa * d).exp() / (4.0 * alpha * (omega0 - e))
    };
    let scale = 10.0 * (g1 * g1 + g2 * g2 + (omega0 - w1).abs() + (omega0 - w2).abs() + 1e-3);
    let lo = omega0 - scale;
    let hi = omega0 - 1e-9;
    let n = 10_000;
    let mut roots = Vec::new();
    let mut prev_e = lo;
    let mut prev_f = f(lo);
    for i in 1..=n {
        let e = lo + (hi - lo) * i as f64 / n as f64;
        let fe = f(e);
        if prev_f * fe <= 0.0 && prev_f != 0.0 {
            roots.push(bisect(&f, prev_e, e, 1e-14));
        }
        prev_e = e;
        prev_f = fe;
    }
    let cos_d = if distance % 2 == 0 { 1.0 } else { -1.0 };
    Ok(roots
        .into_iter()
        .map(|e| {
            let s = (alpha * (omega0 - e)).sqrt();
            let kappa = ((omega0 - e) / alpha).sqrt();
            let cross = 0.5 * g1 * g2 * cos_d * (-kappa * d).exp() / s;
            // (E - w1 + S1) a1 = -cross a2
            let a1 = 1.0;
            let a2 = -(e - w1 + 0.5 * g1 * g1 / s) / cross;
            let norm = (a1 * a1 + a2 * a2).sqrt();
            let (a1, a2) = (a1 / norm, a2 / norm);
            let parity = if a1 * a2 > 0.0 {
                Parity::Symmetric
            } else {
                Parity::Antisymmetric
            };
            BoundStateSolution {
                energy: e,
                parity,
                localization_length: (alpha / (omega0 - e)).sqrt(),
                qubit_amplitudes: (a1, a2),
                exists: true,
                residual: f(e).abs(),
            }
        })
        .collect())
}

/// Equal-parameter symmetric/antisymmetric pair. The branch whose
/// self-energy at the edge stays finite only binds when the detuning above
/// the edge is below its threshold; the divergent branch always binds.
pub fn symmetric_antisymmetric(
    omega01: f64,
    g: f64,
    omega0: f64,
    alpha: f64,
    distance: usize,
) -> Result<(BoundStateSolution, BoundStateSolution)> {
    if distance == 0 || g <= 0.0 || alpha <= 0.0 {
        return Err(Error::InvalidParameter(
            "need distance >= 1, g > 0, alpha > 0".into(),
        ));
    }
    let detuning = omega01 - omega0;
    let solve_branch = |symmetric: bool| -> BoundStateSolution {
        let parity = if symmetric {
            Parity::Symmetric
        } else {
            Parity::Antisymmetric
        };
        // finite edge limit of this branch's self-energy (divergent branch:
        // -inf, binds unconditionally)
        let sign = if distance % 2 == 0 { 1.0 } else { -1.0 };
        let branch_sign = if symmetric { sign } else { -sign };
        if branch_sign < 0.0 {
            // Sigma(0) = -g^2 d / (2 alpha): existence threshold
            let threshold = 0.5 * g * g * distance as f64 / alpha;
            if detuning >= threshold {
                return BoundStateSolution::absent(parity);
            }
        }
        // Substitute x = sqrt(-dE/alpha): stable when the root hugs the edge
        // (finite-self-energy branch near its threshold). exp_m1 keeps the
        // (1 - e^(-xd))/x factor accurate for x -> 0.
        let d = distance as f64;
        let f = |x: f64| {
            let sigma = if branch_sign < 0.0 {
                -0.5 * g * g / alpha * (-(-x * d).exp_m1()) / x.max(f64::MIN_POSITIVE)
            } else {
                -0.5 * g * g / alpha * (1.0 + (-x * d).exp()) / x
            };
            -alpha * x * x - detuning - sigma
        };
        // f(0+) is +inf for the divergent branch and the (positive) threshold
        // margin for the finite one, so the root is bracketed from above
        let lo = 1e-12;
        let mut hi = 1.0;
        while f(hi) > 0.0 {
            hi *= 2.0;
            if hi > 1e6 {
                break;
            }
        }
        let x = bisect(&f, lo, hi, 1e-15);
        let de = -alpha * x * x;
        let amp = std::f64::consts::FRAC_1_SQRT_2;
        BoundStateSolution {
            energy: omega0 + de,
            parity,
            localization_length: (alpha / (-de)).sqrt(),
            qubit_amplitudes: if symmetric { (amp, amp) } else { (amp, -amp) },
            exists: true,
            residual: f(x).abs(),
        }
    };
    Ok((solve_branch(true), solve_branch(false)))
}

/// Photon amplitudes c_j over `sites`, L2-normalized:
/// c_j ~ sum_i a_i g_i cos(pi (j - z_i)) exp(-sqrt((w0-E)/alpha) |j - z_i|).
pub fn bound_state_wavefunction(
    energy: f64,
    omega0: f64,
    alpha: f64,
    qubits: &[(i64, f64, f64)], // (site z_i, coupling g_i, amplitude a_i)
    sites: std::ops::RangeInclusive<i64>,
) -> Result<Vec<f64>> {
    if energy >= omega0 {
        return Err(Error::Domain("bound state must lie below the edge".into()));
    }
    let kappa = ((omega0 - energy) / alpha).sqrt();
    let mut c: Vec<f64> = sites
        .map(|j| {
            qubits
                .iter()
                .map(|&(z, g, a)| {
                    let dj = j - z;
                    let parity = if dj.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    a * g * parity * (-kappa * dj.abs() as f64).exp()
                })
                .sum()
        })
        .collect();
    let norm: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut c {
            *x /= norm;
        }
    }
    Ok(c)
}

/// Second-order (Born-Markov) pair energies and the photon-mediated
/// excitation-exchange amplitude. Only valid below the edge.
pub fn born_markov_energies(
    omega01: f64,
    g: f64,
    omega0: f64,
    alpha: f64,
    distance: usize,
) -> Result<(f64, f64, f64)> {
    if omega01 >= omega0 {
        return Err(Error::Domain(format!(
            "second-order elimination requires omega01 < omega0 (got {omega01} >= {omega0})"
        )));
    }
    let s = (alpha * (omega0 - omega01)).sqrt();
    let x = ((omega0 - omega01) / alpha).sqrt() * distance as f64;
    let e1 = omega01 - g * g * (-0.5 * x).exp() / s * (0.5 * x).sinh();
    let e2 = omega01 - g * g * (-0.5 * x).exp() / s * (0.5 * x).cosh();
    let cos_d = if distance % 2 == 0 { 1.0 } else { -1.0 };
    let j_flipflop = -0.5 * g * g / s * cos_d * (-x).exp();
    Ok((e1, e2, j_flipflop))
}

/// Dressing angle of the drive matrix element from the finite hopping-model
/// photon modes: tan^2(theta) = g^2 sum_n |phi_n(z)|^2 / (E - W_n)^2 with
/// open-boundary mode amplitudes phi_n at the qubit site. Returns cos(theta).
pub fn dressing_angle_finite(
    hoppings: &HoppingCoefficients,
    n_sites: usize,
    qubit_site: usize,
    g: f64,
    e1b: f64,
) -> Result<f64> {
    if qubit_site == 0 || qubit_site > n_sites {
        return Err(Error::InvalidParameter("qubit site out of range".into()));
    }
    let mut h = Array2::<f64>::zeros((n_sites, n_sites));
    for i in 0..n_sites {
        h[[i, i]] = hoppings.at(0);
        for r in 1..hoppings.max_range() + 1 {
            if i + r < n_sites {
                h[[i, i + r]] = hoppings.at(r);
                h[[i + r, i]] = hoppings.at(r);
            }
        }
    }
    let (vals, vecs) = h.eigh(UPLO::Lower).map_err(Error::from)?;
    let z = qubit_site - 1;
    let tan2: f64 = (0..n_sites)
        .map(|n| {
            let amp = vecs[[z, n]];
            g * g * amp * amp / (e1b - vals[n]).powi(2)
        })
        .sum();
    Ok((1.0 / (1.0 + tan2)).sqrt())
}

/// Infinite-crystal closed form tan^2(theta) = g^2 / (4 (w0-E)^(3/2) sqrt(alpha)).
pub fn dressing_angle_analytic(g: f64, e1b: f64, omega0: f64, alpha: f64) -> Result<f64> {
    if e1b >= omega0 {
        return Err(Error::Domain("bound state must lie below the edge".into()));
    }
    let tan2 = 0.25 * g * g / ((omega0 - e1b).powf(1.5) * alpha.sqrt());
    Ok((1.0 / (1.0 + tan2)).sqrt())
}

/// Dressing angle straight from the exact single-excitation eigenvector:
/// cos(theta) = |<qubit excited, no photon | bound state>|.
pub fn dressing_angle_exact(model: &LatticeModel, which_qubit: usize) -> Result<f64> {
    let basis = build_sector_basis(model, 1);
    let h = assemble_hamiltonian(model, &basis)?;
    let (vals, vecs) = h.eigh(UPLO::Lower).map_err(Error::from)?;
    // bound state: eigenvector with the largest weight on the chosen qubit
    let qubit_idx = basis
        .states
        .iter()
        .position(|st| {
            st.qubit_levels[which_qubit] == 1
                && st.photons.iter().all(|&p| p == 0)
                && st
                    .qubit_levels
                    .iter()
                    .enumerate()
                    .all(|(i, &l)| i == which_qubit || l == 0)
        })
        .ok_or_else(|| Error::Domain("qubit-excited state missing from sector".into()))?;
    let best = (0..vals.len())
        .max_by(|&a, &b| {
            vecs[[qubit_idx, a]]
                .abs()
                .total_cmp(&vecs[[qubit_idx, b]].abs())
        })
        .unwrap();
    Ok(vecs[[qubit_idx, best]].abs())
}

/// Two-photon bound state in the zero-two-photon-continuum ansatz.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoPhotonSolution {
    /// E_2B in GHz.
    pub energy: f64,
    /// Photon amplitudes d_j on the requested site range.
    pub photon_profile: Vec<f64>,
    /// Amplitude of the doubly-excited-qubit component.
    pub qubit2_amplitude: f64,
    /// Decay length of the photon profile in unit cells.
    pub localization_length: f64,
}

/// Solves E - omega02 = -g^2 / sqrt(omega0 + omega01 - E) exactly as printed
/// in the source derivation. Note: compared with the single-excitation energy
/// equation the right-hand side lacks both the 1/2 prefactor and the
/// sqrt(alpha) inside the root; we keep the printed form and let the exact
/// finite-size diagonalization adjudicate its accuracy.
pub fn two_photon_bound_energy(
    omega01: f64,
    omega02: f64,
    g: f64,
    omega0: f64,
    alpha: f64,
    qubit_site: i64,
    sites: std::ops::RangeInclusive<i64>,
) -> Result<TwoPhotonSolution> {
    let ceiling = omega0 + omega01;
    if omega02 >= ceiling {
        return Err(Error::Domain(
            "no sub-threshold root: omega02 above the one-photon continuum floor".into(),
        ));
    }
    let f = |e: f64| e - omega02 + g * g / (ceiling - e).sqrt();
    let scale = 10.0 * (g * g + (ceiling - omega02).abs() + 1e-3);
    let e = solve_below(f, ceiling, scale);
    let kappa = ((ceiling - e) / alpha).sqrt();
    // |b|^2 (1 + 2 g^2 / (4 sqrt(alpha) (ceiling - E)^(3/2))) = 1
    let tan2 = 0.5 * g * g / (alpha.sqrt() * (ceiling - e).powf(1.5));
    let b = (1.0 / (1.0 + tan2)).sqrt();
    let photon_weight = (1.0 - b * b).sqrt();
    let mut d: Vec<f64> = sites
        .map(|j| {
            let dj = j - qubit_site;
            let parity = if dj.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            parity * (-kappa * dj.abs() as f64).exp()
        })
        .collect();
    let norm: f64 = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut d {
        *x *= photon_weight / norm;
    }
    Ok(TwoPhotonSolution {
        energy: e,
        photon_profile: d,
        qubit2_amplitude: b,
        localization_length: (alpha / (ceiling - e)).sqrt(),
    })
}

/// Qubit-level populations (p0, p1, p2) of the exact two-excitation ground
/// state of a single-qubit model with the bare frequency overridden.
pub fn qubit_level_populations(model: &LatticeModel, omega01: f64) -> Result<(f64, f64, f64)> {
    if model.qubits.len() != 1 {
        return Err(Error::InvalidParameter(
            "level populations are defined for a single-qubit model".into(),
        ));
    }
    let mut m = model.clone();
    m.qubits[0].omega01 = omega01;
    let basis = build_sector_basis(&m, 2);
    let h = assemble_hamiltonian(&m, &basis)?;
    let (vals, vecs) = h.eigh(UPLO::Lower).map_err(Error::from)?;
    let ground = (0..vals.len())
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap();
    let mut p = [0.0_f64; 3];
    for (i, st) in basis.states.iter().enumerate() {
        let level = st.qubit_levels[0] as usize;
        if level < 3 {
            p[level] += vecs[[i, ground]] * vecs[[i, ground]];
        }
    }
    Ok((p[0], p[1], p[2]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExchangeMode {
    /// Closed-form approximation with the delta-k window heuristic.
    ClosedForm,
    /// Direct 2D adaptive quadrature of the fourth-order double integral.
    ExactQuadrature,
}

/// Fourth-order photon-mediated |2,0> <-> |0,2> exchange strength (GHz,
/// magnitude of the off-diagonal matrix element). `omega02` and `omega12` are
/// the bare 0-2 and 1-2 transition frequencies; requires 2 w0 > w02 and
/// w0 > w12.
pub fn two_photon_exchange(
    omega0: f64,
    alpha: f64,
    g: f64,
    omega02: f64,
    omega12: f64,
    distance: usize,
    mode: ExchangeMode,
) -> Result<f64> {
    if 2.0 * omega0 <= omega02 || omega0 <= omega12 {
        return Err(Error::Domain(
            "need 2*omega0 > omega02 and omega0 > omega12".into(),
        ));
    }
    if omega0 + omega12 <= omega02 {
        return Err(Error::Domain(
            "need omega0 + omega12 > omega02 (bare 0-1 transition below the edge)".into(),
        ));
    }
    if distance == 0 {
        return Err(Error::InvalidParameter("distance must be >= 1".into()));
    }
    let d = distance as f64;
    let a = 2.0 * omega0 - omega02; // two-photon-continuum detuning
    let b = omega0 - omega12; // one-photon intermediate detuning
    let g4 = g.powi(4);
    match mode {
        ExchangeMode::ClosedForm => {
            let dk2 = 1.0 / (d * d) - a / alpha;
            if dk2 < 0.0 {
                return Err(Error::NegativeWindow {
                    dk2,
                    distance,
                });
            }
            let dk = 2.0 * dk2.sqrt();
            let c = omega0 + omega12 - omega02;
            let term1 = -2.0 * g4 / b * (dk / (2.0 * std::f64::consts::PI))
                * (-d * (a / alpha).sqrt()).exp()
                / (alpha.sqrt() * a.sqrt())
                * (1.0 / b - 1.0 / c);
            let term2 = g4 / (alpha.sqrt() * (omega02 - 2.0 * omega12))
                * ((-d * (b / alpha).sqrt()).exp() / b.sqrt()
                    - (-d * (c / alpha).sqrt()).exp() / c.sqrt())
                * (-d * (b / alpha).sqrt()).exp()
                / (alpha.sqrt() * b.sqrt());
            Ok((term1 + term2).abs())
        }
        ExchangeMode::ExactQuadrature => {
            // -4 g^4 int dk dp / (2 pi)^2 cos((k+p) d)
            //   / ((alpha (k^2+p^2) + a)(alpha k^2 + b)) (1/(alpha k^2 + b) + 1/(alpha p^2 + b))
            // Integrand is even in k and p separately, so cos((k+p)d) ->
            // cos(kd)cos(pd) and the domain folds to the positive quadrant.
            let cutoff = 40.0 * (1.0 + (a.max(b) / alpha).sqrt());
            let tol = 1e-9;
            let inner = |k: f64| -> Result<f64> {
                let ak = alpha * k * k;
                adaptive_quad(
                    |p: f64| {
                        let ap = alpha * p * p;
                        (k * d).cos() * (p * d).cos() / ((ak + ap + a) * (ak + b))
                            * (1.0 / (ak + b) + 1.0 / (ap + b))
                    },
                    0.0,
                    cutoff,
                    tol,
                )
            };
            let outer = adaptive_quad(|k: f64| inner(k).unwrap_or(f64::NAN), 0.0, cutoff, tol)?;
            if !outer.is_finite() {
                return Err(Error::QuadratureFailure {
                    tol,
                    err: f64::NAN,
                });
            }
            let two_pi = 2.0 * std::f64::consts::PI;
            let coupling = -4.0 * g4 * 4.0 * outer / (two_pi * two_pi);
            Ok(coupling.abs())
        }
    }
}
