//! Infinite-crystal dispersion, band edges, quadratic band-edge fits, and
//! finite-crystal transfer-matrix transmission for a stepped-impedance line.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect, golden_min};

/// One period of the stepped-impedance crystal: a high-impedance section of
/// length `l_hi` between two low-impedance half-sections of total length `l_lo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitCell {
    /// Low impedance (Ohm).
    pub z_lo: f64,
    /// High impedance (Ohm).
    pub z_hi: f64,
    /// Low-impedance section length (m).
    pub l_lo: f64,
    /// High-impedance section length (m).
    pub l_hi: f64,
    /// Phase velocity, shared by both sections (m/s).
    pub v_p: f64,
}

impl UnitCell {
    pub fn new(z_lo: f64, z_hi: f64, l_lo: f64, l_hi: f64, v_p: f64) -> Result<Self> {
        let cell = UnitCell {
            z_lo,
            z_hi,
            l_lo,
            l_hi,
            v_p,
        };
        cell.validate()?;
        Ok(cell)
    }

    /// Parameters of the device studied here: Z_lo = 25 Ohm, Z_hi = 124 Ohm,
    /// L_lo = 1.2 mm, L_hi = 7.8 mm, v_p = 1.248e8 m/s.
    pub fn reference() -> Self {
        UnitCell {
            z_lo: 25.0,
            z_hi: 124.0,
            l_lo: 1.2e-3,
            l_hi: 7.8e-3,
            v_p: 1.248e8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("z_lo", self.z_lo),
            ("z_hi", self.z_hi),
            ("l_lo", self.l_lo),
            ("l_hi", self.l_hi),
            ("v_p", self.v_p),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "unit cell field {name} must be finite and positive, got {v}"
                )));
            }
        }
        // Allow z_hi == z_lo: the uniform line is a legitimate degenerate case
        // (zero-width gaps); only the inverted labeling is rejected.
        if self.z_hi < self.z_lo {
            return Err(Error::InvalidParameter(format!(
                "z_hi ({}) must not be below z_lo ({})",
                self.z_hi, self.z_lo
            )));
        }
        Ok(())
    }

    /// Unit cell size a = L_lo + L_hi (m).
    pub fn period(&self) -> f64 {
        self.l_lo + self.l_hi
    }

    /// Brillouin-zone boundary momentum pi/a (rad/m).
    pub fn k_edge(&self) -> f64 {
        PI / self.period()
    }

    /// Left-hand side of the dispersion relation as a function of frequency
    /// in GHz. Bands are the frequency intervals where this lies in [-1, 1].
    pub fn characteristic(&self, freq_ghz: f64) -> f64 {
        let w = 2.0 * PI * freq_ghz * 1e9;
        let phi_lo = w * self.l_lo / self.v_p;
        let phi_hi = w * self.l_hi / self.v_p;
        let ratio = 0.5 * (self.z_hi / self.z_lo + self.z_lo / self.z_hi);
        phi_lo.cos() * phi_hi.cos() - ratio * phi_lo.sin() * phi_hi.sin()
    }
}

/// Quadratic fit of a band extremum: omega_k = omega0 + alpha a^2 (k - k0)^2.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BandFit {
    /// Band-edge frequency omega0 (GHz).
    pub omega0: f64,
    /// Curvature alpha (GHz).
    pub alpha: f64,
    /// Momentum of the extremum (rad/m).
    pub k0: f64,
    /// 1-based band index.
    pub band_index: usize,
}

/// Default ceiling for the band scan (GHz).
pub const DEFAULT_CEILING_GHZ: f64 = 40.0;

/// Pre-scan step for band-interval location (GHz); 1 MHz.
const SCAN_STEP_GHZ: f64 = 1e-3;

/// Resolves band intervals of a unit cell once so that repeated dispersion
/// evaluations reduce to a single bisection each.
#[derive(Debug, Clone)]
pub struct BandSolver {
    cell: UnitCell,
    bands: Vec<(f64, f64)>,
}

impl BandSolver {
    pub fn new(cell: UnitCell, ceiling_ghz: f64) -> Result<Self> {
        cell.validate()?;
        let bands = band_intervals(&cell, ceiling_ghz);
        Ok(BandSolver { cell, bands })
    }

    pub fn cell(&self) -> &UnitCell {
        &self.cell
    }

    pub fn n_bands(&self) -> usize {
        self.bands.len()
    }

    fn band(&self, band_index: usize) -> Result<(f64, f64)> {
        if band_index == 0 {
            return Err(Error::InvalidParameter(
                "band_index is 1-based and must be >= 1".into(),
            ));
        }
        self.bands
            .get(band_index - 1)
            .copied()
            .ok_or(Error::NoRoot {
                band: band_index,
                ceiling_ghz: DEFAULT_CEILING_GHZ,
            })
    }

    /// Frequency range (f_min, f_max) of a band in GHz.
    pub fn band_edges(&self, band_index: usize) -> Result<(f64, f64)> {
        self.band(band_index)
    }

    /// The gap between `band_index` and the next band: (top of lower band,
    /// bottom of upper band), in GHz.
    pub fn band_gap(&self, band_index: usize) -> Result<(f64, f64)> {
        let lower = self.band(band_index)?;
        let upper = self.band(band_index + 1)?;
        Ok((lower.1, upper.0))
    }

    /// Dispersion frequency (GHz) of band `band_index` at momentum `k` (rad/m).
    ///
    /// `k` may lie anywhere in the first Brillouin zone; the relation depends
    /// on cos(ka) only, so negative momenta are reflected.
    pub fn dispersion(&self, band_index: usize, k: f64) -> Result<f64> {
        let k_max = self.cell.k_edge();
        if k.abs() > k_max * (1.0 + 1e-12) {
            return Err(Error::InvalidMomentum { k, k_max });
        }
        let target = (k * self.cell.period()).cos();
        let (f_lo, f_hi) = self.band(band_index)?;
        let g = |f: f64| self.cell.characteristic(f) - target;
        let (g_lo, g_hi) = (g(f_lo), g(f_hi));
        // Band endpoints sit at characteristic = +-1; when the target is one of
        // those values the root is the endpoint itself.
        if g_lo.abs() < 1e-9 && g_lo.abs() <= g_hi.abs() {
            return Ok(f_lo);
        }
        if g_hi.abs() < 1e-9 {
            return Ok(f_hi);
        }
        if g_lo * g_hi > 0.0 {
            return Err(Error::NoRoot {
                band: band_index,
                ceiling_ghz: f_hi,
            });
        }
        Ok(bisect(g, f_lo, f_hi, 1e-15))
    }

    /// Least-squares quadratic fit of the band extremum at the zone boundary,
    /// sampled over `fit_window` GHz above the edge.
    pub fn fit_band_edge(&self, band_index: usize, fit_window: f64) -> Result<BandFit> {
        let (f_min, f_max) = self.band(band_index)?;
        let k0 = self.cell.k_edge();
        // This device's band minima sit at k = pi/a; confirm and bail out
        // loudly if the extremum is at the zone center instead.
        let at_edge = self.dispersion(band_index, k0)?;
        let (edge, k_ref, sign) = if (at_edge - f_min).abs() < (at_edge - f_max).abs() {
            (f_min, k0, 1.0)
        } else {
            // band maximum at pi/a; fit the minimum at k = 0 instead
            (f_min, 0.0, 1.0)
        };
        let window = fit_window.min((f_max - f_min) * 0.9);
        // momentum where the band has risen `window` above its minimum
        let a = self.cell.period();
        let target = edge + window;
        let g = |k: f64| self.dispersion(band_index, k).unwrap_or(f64::NAN) - target;
        let (k_in, k_out) = if k_ref == k0 { (k0, 0.0) } else { (0.0, k0) };
        let k_limit = bisect(g, k_out, k_in, 1e-12);
        let n = 41;
        let mut pts = Vec::with_capacity(n);
        for i in 0..n {
            let k = k_ref + (k_limit - k_ref) * (i as f64 / (n - 1) as f64);
            let f = self.dispersion(band_index, k)?;
            let x = (a * (k - k_ref)).powi(2);
            pts.push((x, f));
        }
        // Fit omega0 + alpha*x + beta*x^2 + gamma*x^3 in x = (a dk)^2; the
        // higher terms absorb band softening away from the edge so alpha is
        // the edge curvature, not a window average. Powers of x are scaled to
        // order one before forming the normal equations.
        let x_max = pts.iter().fold(0.0_f64, |m, &(x, _)| m.max(x)).max(1e-300);
        let order = 4;
        let mut m = Array2::<f64>::zeros((order, order));
        let mut rhs = Array1::<f64>::zeros(order);
        for &(x, f) in &pts {
            let u = x / x_max;
            let basis: Vec<f64> = (0..order).map(|p| u.powi(p as i32)).collect();
            for (r, &br) in basis.iter().enumerate() {
                for (c, &bc) in basis.iter().enumerate() {
                    m[[r, c]] += br * bc;
                }
                rhs[r] += br * f;
            }
        }
        let coeffs = m
            .solve(&rhs)
            .map_err(|_| Error::Domain("degenerate band-edge fit system".into()))?;
        let omega0 = coeffs[0];
        let alpha = coeffs[1] / x_max;
        let mut sse = 0.0;
        for &(x, f) in &pts {
            let u = x / x_max;
            let model: f64 = (0..order).map(|p| coeffs[p] * u.powi(p as i32)).sum();
            sse += (model - f).powi(2);
        }
        let residual = (sse / n as f64).sqrt() / window;
        if residual > 1e-2 {
            return Err(Error::PoorFit {
                residual,
                tol: 1e-2,
            });
        }
        Ok(BandFit {
            omega0,
            alpha: alpha * sign,
            k0: k_ref,
            band_index,
        })
    }
}

/// Locate band intervals (|characteristic| <= 1) below `ceiling_ghz` by a
/// 1 MHz pre-scan with bisection refinement of each edge. Tangency points
/// (uniform-impedance limit, zero-width gaps) split bands without a gap.
fn band_intervals(cell: &UnitCell, ceiling_ghz: f64) -> Vec<(f64, f64)> {
    let env = |f: f64| cell.characteristic(f).abs() - 1.0;
    let n = (ceiling_ghz / SCAN_STEP_GHZ).ceil() as usize;
    let mut bands = Vec::new();
    let mut start: Option<f64> = Some(0.0); // characteristic(0) = 1, band 1 starts at dc
    let mut prev = 0.0_f64;
    let mut prev_env = env(0.0);
    let mut prev_abs = 1.0_f64;
    let mut prev_prev_abs = 1.0_f64;
    for i in 1..=n {
        let f = SCAN_STEP_GHZ * i as f64;
        let e = env(f);
        let abs = e + 1.0;
        if let Some(s) = start {
            if e > 0.0 {
                // leaving a band
                let edge = bisect(env, prev, f, 1e-15);
                bands.push((s, edge));
                start = None;
            } else if i >= 2 && prev_abs > prev_prev_abs && prev_abs > abs && prev_env > -1e-7 {
                // interior tangency with the band boundary: split here
                let (split, _) = golden_min(|x| -env(x), f - 2.0 * SCAN_STEP_GHZ, f, 1e-12);
                bands.push((s, split));
                start = Some(split);
            }
        } else if e <= 0.0 {
            // entering a band
            let edge = bisect(env, prev, f, 1e-15);
            start = Some(edge);
        }
        prev = f;
        prev_env = e;
        prev_prev_abs = prev_abs;
        prev_abs = abs;
    }
    if let Some(s) = start {
        bands.push((s, ceiling_ghz));
    }
    bands
}

/// ABCD matrix of an ideal lossless transmission-line section.
fn line_abcd(z: f64, length: f64, v_p: f64, freq_ghz: f64) -> [[C64; 2]; 2] {
    let beta_l = 2.0 * PI * freq_ghz * 1e9 * length / v_p;
    let (s, c) = beta_l.sin_cos();
    [
        [C64::new(c, 0.0), C64::new(0.0, z * s)],
        [C64::new(0.0, s / z), C64::new(c, 0.0)],
    ]
}

fn mat_mul(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Forward transmission S21 of `n_cells` symmetric unit cells
/// (L_lo/2 | L_hi | L_lo/2) in a `port_impedance` environment.
pub fn transfer_matrix_s21(
    cell: &UnitCell,
    n_cells: usize,
    freq_ghz: f64,
    port_impedance: f64,
) -> Result<C64> {
    transfer_matrix_s_params(cell, n_cells, freq_ghz, port_impedance).map(|(_, s21)| s21)
}

/// Both reflection S11 and transmission S21 of the finite crystal.
pub fn transfer_matrix_s_params(
    cell: &UnitCell,
    n_cells: usize,
    freq_ghz: f64,
    port_impedance: f64,
) -> Result<(C64, C64)> {
    cell.validate()?;
    if n_cells == 0 {
        return Err(Error::InvalidParameter("n_cells must be >= 1".into()));
    }
    if !(freq_ghz > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "frequency must be positive, got {freq_ghz}"
        )));
    }
    if !(port_impedance > 0.0) {
        return Err(Error::InvalidParameter(
            "port impedance must be positive".into(),
        ));
    }
    let half_lo = line_abcd(cell.z_lo, 0.5 * cell.l_lo, cell.v_p, freq_ghz);
    let hi = line_abcd(cell.z_hi, cell.l_hi, cell.v_p, freq_ghz);
    let cell_abcd = mat_mul(&mat_mul(&half_lo, &hi), &half_lo);
    let mut total = [
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
    ];
    for _ in 0..n_cells {
        total = mat_mul(&total, &cell_abcd);
    }
    let z0 = C64::new(port_impedance, 0.0);
    let [a, b] = total[0];
    let [c, d] = total[1];
    let denom = a + b / z0 + c * z0 + d;
    let s11 = (a + b / z0 - c * z0 - d) / denom;
    let s21 = C64::new(2.0, 0.0) / denom;
    Ok((s11, s21))
}
