use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::scenario::FiberSpec;
use crate::units::C_NM_PER_PS;

/// Group-velocity dispersion and its slope at the grid center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionCoeffs {
    /// ps²/km
    pub beta2: f64,
    /// ps³/km
    pub beta3: f64,
}

/// Convert `(D, S)` at the reference wavelength to `(beta2, beta3)`.
///
/// `beta2 = -D λ² / (2πc)` and `beta3 = (λ² / (2πc))² (S + 2D/λ)`, with λ in
/// nm and c in nm/ps so that the results come out in ps²/km and ps³/km.
pub fn dispersion_coeffs(fiber: &FiberSpec) -> DispersionCoeffs {
    let lambda = fiber.ref_wavelength_nm;
    let k = lambda * lambda / (2.0 * PI * C_NM_PER_PS);
    DispersionCoeffs {
        beta2: -fiber.dispersion_d * k,
        beta3: k * k * (fiber.slope_s + 2.0 * fiber.dispersion_d / lambda),
    }
}

impl DispersionCoeffs {
    /// Phase-mismatch rate of the triple `(f1, f2, f1 + f2 - f)` onto `f`, rad/km.
    #[inline]
    pub fn mismatch_rate(&self, f1: f64, f2: f64, f: f64) -> f64 {
        // grouped so that swapping f1 and f2 is exact in floating point
        -4.0 * PI * PI * ((f1 - f) * (f2 - f)) * (self.beta2 + PI * self.beta3 * (f1 + f2))
    }

    /// Same as [`mismatch_rate`](Self::mismatch_rate) given offsets from `f`.
    #[inline]
    pub(crate) fn mismatch_rate_offsets(&self, nu1: f64, nu2: f64, f: f64) -> f64 {
        -4.0 * PI * PI * (nu1 * nu2) * (self.beta2 + PI * self.beta3 * (2.0 * f + (nu1 + nu2)))
    }

    /// Largest `|beta2 + pi beta3 s|` for `s` in `[s_lo, s_hi]`.
    pub(crate) fn max_effective(&self, s_lo: f64, s_hi: f64) -> f64 {
        (self.beta2 + PI * self.beta3 * s_lo)
            .abs()
            .max((self.beta2 + PI * self.beta3 * s_hi).abs())
    }

    /// Smallest `|beta2 + pi beta3 s|` over `[s_lo, s_hi]`; zero if it changes sign.
    pub(crate) fn min_effective(&self, s_lo: f64, s_hi: f64) -> f64 {
        let a = self.beta2 + PI * self.beta3 * s_lo;
        let b = self.beta2 + PI * self.beta3 * s_hi;
        if a * b <= 0.0 {
            0.0
        } else {
            a.abs().min(b.abs())
        }
    }
}

/// Dispersion phase `phi(f1, f2, f, z)` accumulated over `z_km`.
pub fn phase_mismatch(f1: f64, f2: f64, f: f64, z_km: f64, disp: &DispersionCoeffs) -> f64 {
    disp.mismatch_rate(f1, f2, f) * z_km
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ssmf_coefficients() {
        let d = dispersion_coeffs(&FiberSpec::ssmf());
        // -17 * 1550^2 / (2 pi 299792.458)
        assert!((d.beta2 + 21.682).abs() < 1e-3, "{}", d.beta2);
        // (1550^2 / (2 pi c))^2 * (0.067 + 34/1550)
        assert!((d.beta3 - 0.14466).abs() < 1e-4, "{}", d.beta3);
    }

    #[test]
    fn zero_dispersion() {
        let mut f = FiberSpec::ssmf();
        f.dispersion_d = 0.0;
        f.slope_s = 0.0;
        let d = dispersion_coeffs(&f);
        assert_eq!(d.beta2, 0.0);
        assert_eq!(d.beta3, 0.0);
    }

    #[test]
    fn beta2_round_trips_to_d() {
        let f = FiberSpec::ssmf();
        let d = dispersion_coeffs(&f);
        let back = -d.beta2 * 2.0 * PI * C_NM_PER_PS / (f.ref_wavelength_nm * f.ref_wavelength_nm);
        assert!((back - f.dispersion_d).abs() < 1e-12);
    }

    #[test]
    fn phase_values() {
        let d = DispersionCoeffs {
            beta2: -21.7,
            beta3: 0.0,
        };
        assert_eq!(phase_mismatch(0.3, 0.1, 0.3, 100.0, &d), 0.0);
        assert_eq!(phase_mismatch(0.4, 0.1, 0.3, 0.0, &d), 0.0);
        // THz * THz * ps²/km * km is dimensionless: -4π² (0.1)(-0.1)(-21.7)(100)
        let phi = phase_mismatch(0.1, -0.1, 0.0, 100.0, &d);
        assert!((phi + 856.68).abs() < 0.01, "{phi}");
    }

    #[test]
    fn phase_is_symmetric_in_f1_f2() {
        let d = dispersion_coeffs(&FiberSpec::ssmf());
        let a = phase_mismatch(1.3, -2.2, 0.4, 77.0, &d);
        let b = phase_mismatch(-2.2, 1.3, 0.4, 77.0, &d);
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }
}
