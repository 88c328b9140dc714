//! Power evolution along a span under inter-channel stimulated Raman
//! scattering, using the triangular (linear-slope) gain approximation.
//!
//! The PSD at distance `z` is `G(f) * rho(z, f)` with
//!
//! ```text
//! rho(z, f) = P * exp(-alpha z) * exp(-P Cr Leff(z) f) / ∫ G(v) exp(-P Cr Leff(z) v) dv
//! ```
//!
//! Frequencies are relative to the grid center. The denominator is evaluated
//! in closed form per channel since the PSD is piecewise constant.

use crate::error::{invalid, Error, Result};
use crate::gauss::rule;
use crate::scenario::{FiberSpec, SpectralLoad};
use crate::units::lin_to_db;

/// `(1 - exp(-alpha z)) / alpha`, in km.
pub fn effective_length(z_km: f64, alpha_np_per_km: f64) -> Result<f64> {
    if z_km < 0.0 || !z_km.is_finite() {
        return Err(invalid("z_km", "distance must be finite and non-negative"));
    }
    if alpha_np_per_km <= 0.0 {
        return Err(invalid("alpha", "attenuation must be positive"));
    }
    Ok(leff(z_km, alpha_np_per_km))
}

#[inline]
pub(crate) fn leff(z_km: f64, alpha: f64) -> f64 {
    -(-alpha * z_km).exp_m1() / alpha
}

/// `sinh(x) / x`.
#[inline]
pub(crate) fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RamanProfileParams<'a> {
    pub total_power_w: f64,
    pub cr: f64,
    pub alpha_np_per_km: f64,
    pub load: &'a SpectralLoad,
}

impl<'a> RamanProfileParams<'a> {
    pub fn new(load: &'a SpectralLoad, fiber: &FiberSpec) -> Self {
        Self {
            total_power_w: load.total_power_w(),
            cr: fiber.raman_slope_cr,
            alpha_np_per_km: fiber.alpha_np_per_km(),
            load,
        }
    }

    /// `P Cr / alpha`, in 1/THz: the Raman exponent per unit of `1 - exp(-alpha z)`.
    pub fn kappa(&self) -> f64 {
        self.total_power_w * self.cr / self.alpha_np_per_km
    }

    /// `∫ G(v) exp(-t v) dv` for the exponent slope `t = P Cr Leff` (1/THz).
    pub fn weighted_power(&self, t: f64) -> f64 {
        let grid = self.load.grid();
        let half_b = 0.5 * grid.bandwidth_thz();
        let s = sinhc(t * half_b);
        self.load
            .occupied_indices()
            .map(|i| self.load.power_w(i) * (-t * grid.center(i)).exp() * s)
            .sum()
    }

    /// Taylor coefficients `q_m` of `P / ∫ G(v) exp(-kappa w v) dv` in
    /// powers of `s = w0 - w`, where `w = 1 - exp(-alpha z)`.
    pub(crate) fn normalization_series(&self, w0: f64, order: usize) -> Vec<f64> {
        let mut q = vec![0.0; order];
        if order == 0 {
            return q;
        }
        let p = self.total_power_w;
        if p <= 0.0 {
            q[0] = 1.0;
            return q;
        }
        let kappa = self.kappa();
        let grid = self.load.grid();
        let half_b = 0.5 * grid.bandwidth_thz();
        let gl = rule(8);
        // d_m = ∫ G(v) exp(-kappa w0 v) (kappa v)^m / m! dv / P
        let mut d = vec![0.0; order];
        for i in self.load.occupied_indices() {
            let g = self.load.channel_psd(i) / p;
            for (x, wt) in gl.nodes.iter().zip(&gl.weights) {
                let v = grid.center(i) + half_b * x;
                let mut term = g * wt * half_b * (-kappa * w0 * v).exp();
                for (m, dm) in d.iter_mut().enumerate() {
                    if m > 0 {
                        term *= kappa * v / m as f64;
                    }
                    *dm += term;
                }
            }
        }
        q[0] = 1.0 / d[0];
        for m in 1..order {
            q[m] = -(1..=m).map(|j| d[j] * q[m - j]).sum::<f64>() / d[0];
        }
        q
    }
}

/// Ratio `rho(z, f)` of the PSD at distance `z` to the span-input PSD.
pub fn isrs_gain(params: &RamanProfileParams<'_>, f_thz: f64, z_km: f64) -> Result<f64> {
    let le = effective_length(z_km, params.alpha_np_per_km)?;
    let atten = (-params.alpha_np_per_km * z_km).exp();
    let p = params.total_power_w;
    if p <= 0.0 || params.cr == 0.0 {
        return Ok(atten);
    }
    let t = p * params.cr * le;
    Ok(p * atten * (-t * f_thz).exp() / params.weighted_power(t))
}

/// Power ratio in dB between the lowest and highest occupied channel
/// centers after `z_km`; positive when power has moved toward low frequencies.
pub fn tilt_db(params: &RamanProfileParams<'_>, z_km: f64) -> Result<f64> {
    let mut occupied = params.load.occupied_indices();
    let lo = occupied.next();
    let hi = occupied.last();
    match (lo, hi) {
        (Some(lo), Some(hi)) => {
            let grid = params.load.grid();
            let r_lo = isrs_gain(params, grid.center(lo), z_km)?;
            let r_hi = isrs_gain(params, grid.center(hi), z_km)?;
            Ok(lin_to_db(r_lo / r_hi))
        }
        _ => Err(Error::TooFewChannels {
            found: params.load.occupied_count(),
        }),
    }
}
