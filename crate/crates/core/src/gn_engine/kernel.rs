//! Per-span link function: the `zeta` integral of the ISRS power profile
//! against the dispersion phase, and the PSD coupling factor `S_k`.
//!
//! With `u = exp(-alpha zeta)` the span integral becomes
//!
//! ```text
//! ∫_0^L rho(zeta, f3) e^{j Phi zeta} dzeta = (1/alpha) ∫_{u_L}^1 h(u) u^{-j Phi/alpha} du
//! ```
//!
//! where `h = rho / u` is a smooth function of `u` alone. Expanding `h` as a
//! polynomial in `u` makes every monomial integrable in closed form for any
//! `Phi`, so no oscillation has to be sampled along the span. For `Cr = 0`
//! the expansion is the constant 1 and the textbook link function is exact.

use num_complex::Complex64;

use super::dispersion::{dispersion_coeffs, DispersionCoeffs};
use crate::error::{Error, Result};
use crate::raman::RamanProfileParams;
use crate::scenario::{Link, Span, SpectralLoad};

/// Highest polynomial order tried for the profile expansion.
const MAX_ORDER: usize = 64;

/// `S_k(f1, f2, f) = sqrt(G(f1) G(f2) G(f1 + f2 - f) / G(f))`; zero when
/// `G(f) = 0` or any of the three pump frequencies is unoccupied.
pub fn coupling_factor(load: &SpectralLoad, f1: f64, f2: f64, f: f64) -> f64 {
    let g = load.psd(f);
    if g <= 0.0 {
        return 0.0;
    }
    let prod = load.psd(f1) * load.psd(f2) * load.psd(f1 + f2 - f);
    if prod <= 0.0 {
        0.0
    } else {
        (prod / g).sqrt()
    }
}

/// Precomputed per-span data for fast kernel evaluation.
#[derive(Debug, Clone)]
pub(crate) struct SpanModel {
    pub gamma: f64,
    pub alpha: f64,
    pub length: f64,
    pub disp: DispersionCoeffs,
    /// PSD per slot, W/THz.
    pub psd: Vec<f64>,
    u_l: f64,
    u_mid: f64,
    /// `(1 - u_mid)^n`
    top: Vec<f64>,
    /// `(u_L - u_mid)^n u_L`
    bottom: Vec<f64>,
    order: usize,
    /// Row-major table of Taylor coefficients of `h` around `u_mid`, on an `f3` grid.
    table: Vec<f64>,
    f3_lo: f64,
    f3_inv_step: f64,
    rows: usize,
}

/// Taylor coefficients of `h(u_mid + v) = exp(-kappa f3 (w0 - v)) Q(w0 - v)`
/// in `v`, with `q` the coefficients of `Q`.
fn taylor_coefficients(q: &[f64], kappa: f64, w0: f64, f3: f64, out: &mut Vec<f64>) {
    let order = q.len();
    let mut e = vec![0.0; order];
    e[0] = (-kappa * f3 * w0).exp();
    for i in 1..order {
        e[i] = e[i - 1] * kappa * f3 / i as f64;
    }
    out.extend((0..order).map(|n| (0..=n).map(|i| e[i] * q[n - i]).sum::<f64>()));
}

impl SpanModel {
    /// `band` is the frequency range over which `f3` has to be supported.
    pub fn new(span: &Span, band: (f64, f64), target_rel_error: f64) -> Result<Self> {
        let fiber = &span.fiber;
        let alpha = fiber.alpha_np_per_km();
        let u_l = (-alpha * span.length_km).exp();
        let u_mid = 0.5 * (1.0 + u_l);
        let half = 0.5 * (1.0 - u_l);
        let w0 = 1.0 - u_mid;
        let params = RamanProfileParams::new(&span.load, fiber);
        let kappa = params.kappa();
        let psd = (0..span.load.grid().channel_count())
            .map(|i| span.load.channel_psd(i))
            .collect();

        let tol = 0.05 * target_rel_error;
        let q_full = params.normalization_series(w0, MAX_ORDER);
        let mut order = 1;
        if kappa > 0.0 {
            // Truncate where the worst band edge has converged.
            let mut row = Vec::with_capacity(MAX_ORDER);
            for &f3 in &[band.0, band.1] {
                row.clear();
                taylor_coefficients(&q_full, kappa, w0, f3, &mut row);
                let terms: Vec<f64> = row.iter().enumerate().map(|(n, c)| c.abs() * half.powi(n as i32)).collect();
                let total: f64 = terms.iter().sum();
                let mut tail = 0.0;
                let mut needed = MAX_ORDER;
                for n in (0..MAX_ORDER).rev() {
                    tail += terms[n];
                    if tail > tol * total {
                        needed = n + 1;
                        break;
                    }
                }
                if needed >= MAX_ORDER - 1 {
                    return Err(Error::NonConvergence(format!(
                        "ISRS profile expansion needs more than {MAX_ORDER} terms (kappa = {kappa:.3} /THz)"
                    )));
                }
                order = order.max(needed + 1);
            }
        }
        let q = &q_full[..order];

        // Linear interpolation in f3: error ~ (step kappa)^2 / 8.
        let width = (band.1 - band.0).max(1e-12);
        let rows = if kappa > 0.0 {
            let step_target = (8.0 * tol).sqrt() / kappa;
            ((width / step_target).ceil() as usize + 1).clamp(2, 200_000)
        } else {
            2
        };
        let step = width / (rows - 1) as f64;
        let mut table = Vec::with_capacity(rows * order);
        for r in 0..rows {
            taylor_coefficients(q, kappa, w0, band.0 + r as f64 * step, &mut table);
        }
        Ok(Self {
            gamma: fiber.gamma,
            alpha,
            length: span.length_km,
            disp: dispersion_coeffs(fiber),
            psd,
            u_l,
            u_mid,
            top: (0..order).map(|n| half.powi(n as i32)).collect(),
            bottom: (0..order).map(|n| (-half).powi(n as i32) * u_l).collect(),
            order,
            table,
            f3_lo: band.0,
            f3_inv_step: 1.0 / step,
            rows,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Start and end terms of the span integral:
    /// `∫_0^L rho e^{j Phi zeta} dzeta = start - end * e^{j Phi L}`.
    /// `recip[n] = 1 / (n + 1 - j Phi / alpha)`.
    #[inline]
    pub fn integrals(&self, f3: f64, recip: &[Complex64]) -> (Complex64, Complex64) {
        let inv_a = 1.0 / self.alpha;
        let pos = ((f3 - self.f3_lo) * self.f3_inv_step).clamp(0.0, (self.rows - 1) as f64);
        let row = (pos as usize).min(self.rows - 2);
        let t = pos - row as f64;
        let lo = &self.table[row * self.order..(row + 1) * self.order];
        let hi = &self.table[(row + 1) * self.order..(row + 2) * self.order];
        // moments of (u - u_mid)^n u^(s - 1) split into their two end points
        let mut m_start = recip[0];
        let mut m_end = recip[0] * self.u_l;
        let c0 = lo[0] + t * (hi[0] - lo[0]);
        let mut start = m_start * c0;
        let mut end = m_end * c0;
        for n in 1..self.order {
            let nu = n as f64 * self.u_mid;
            m_start = recip[n] * (self.top[n] - m_start * nu);
            m_end = recip[n] * (self.bottom[n] - m_end * nu);
            let c = lo[n] + t * (hi[n] - lo[n]);
            start += m_start * c;
            end += m_end * c;
        }
        (start * inv_a, end * inv_a)
    }

    /// `∫_0^L rho(zeta, f3) e^{j Phi zeta} dzeta` for a phase-mismatch rate `Phi`.
    pub fn profile_integral(&self, f3: f64, phi_rate: f64) -> Complex64 {
        let b = -phi_rate / self.alpha;
        let recip: Vec<Complex64> = (0..self.order).map(|n| 1.0 / Complex64::new((n + 1) as f64, b)).collect();
        let (start, end) = self.integrals(f3, &recip);
        start - end * Complex64::from_polar(1.0, phi_rate * self.length)
    }
}

/// Band covering every occupied channel of every span.
pub(crate) fn occupied_band(link: &Link) -> Option<(f64, f64)> {
    let grid = link.grid();
    let half = 0.5 * grid.bandwidth_thz();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in link.spans() {
        for i in s.load.occupied_indices() {
            lo = lo.min(grid.center(i) - half);
            hi = hi.max(grid.center(i) + half);
        }
    }
    (lo < hi).then_some((lo, hi))
}

/// Contribution of span `k` to the coherent span sum, without the `gamma`
/// prefactor: `S_k ∫_0^{L_k} rho_k(zeta, f1+f2-f) e^{j phi(f1, f2, f, L~_k + zeta)} dzeta`.
pub fn span_kernel(link: &Link, k: usize, f1: f64, f2: f64, f: f64) -> Result<Complex64> {
    let span = link.span(k)?;
    let s = coupling_factor(&span.load, f1, f2, f);
    if s == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let band = occupied_band(link).unwrap_or((f, f));
    let model = SpanModel::new(span, band, 1e-9)?;
    let accumulated: f64 = link.spans()[..k]
        .iter()
        .map(|sp| dispersion_coeffs(&sp.fiber).mismatch_rate(f1, f2, f) * sp.length_km)
        .sum();
    let rate = model.disp.mismatch_rate(f1, f2, f);
    let integral = model.profile_integral(f1 + f2 - f, rate);
    Ok(Complex64::from_polar(s, accumulated) * integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raman::{isrs_gain, leff};
    use crate::scenario::{build_ptp_scenario, ChannelGrid, FiberSpec};

    /// Composite Simpson integration of rho(zeta) e^{j phi zeta} fine enough
    /// to resolve the oscillation.
    fn brute_force(span: &Span, f3: f64, rate: f64) -> Complex64 {
        let params = RamanProfileParams::new(&span.load, &span.fiber);
        let per_rad = (rate.abs() * span.length_km / 0.05).ceil() as usize;
        let n = 2 * (4000usize.max(per_rad) / 2);
        let h = span.length_km / n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..=n {
            let z = i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += Complex64::from_polar(w * isrs_gain(&params, f3, z).unwrap(), rate * z);
        }
        acc * (h / 3.0)
    }

    fn cl_span(length: f64, cr: f64) -> Span {
        let mut fiber = FiberSpec::ssmf();
        fiber.raman_slope_cr = cr;
        build_ptp_scenario(&ChannelGrid::c_plus_l(), 0.0, &[length], fiber)
            .unwrap()
            .spans()[0]
            .clone()
    }

    #[test]
    fn no_raman_matches_closed_form() {
        let span = cl_span(100.0, 0.0);
        let model = SpanModel::new(&span, (-5.02, 5.02), 1e-9).unwrap();
        assert_eq!(model.order(), 1);
        let alpha = span.fiber.alpha_np_per_km();
        for rate in [0.0, 0.3, -4.0, 55.0, 2e4] {
            let got = model.profile_integral(1.0, rate);
            let s = Complex64::new(-alpha, rate);
            let want = ((s * span.length_km).exp() - 1.0) / s;
            assert!((got - want).norm() < 1e-12 * want.norm().max(1e-3), "{rate}: {got} {want}");
        }
        let at_zero = model.profile_integral(0.0, 0.0);
        assert!((at_zero.re - leff(100.0, alpha)).abs() < 1e-12);
    }

    #[test]
    fn raman_profile_matches_brute_force() {
        let span = cl_span(100.0, 0.028);
        let model = SpanModel::new(&span, (-5.02, 5.02), 1e-9).unwrap();
        assert!(model.order() > 1);
        for (f3, rate) in [(-4.9, 0.0), (4.9, 0.7), (0.37, -12.0), (-2.2, 180.0), (3.1, 0.05)] {
            let got = model.profile_integral(f3, rate);
            let want = brute_force(&span, f3, rate);
            let rel = (got - want).norm() / want.norm();
            assert!(rel < 1e-6, "f3={f3} rate={rate}: {got} vs {want} ({rel:e})");
        }
    }

    #[test]
    fn long_span_heavy_load_still_converges() {
        let mut span = cl_span(150.0, 0.028);
        span.load = span.load.scaled(4.0);
        let model = SpanModel::new(&span, (-5.02, 5.02), 1e-9).unwrap();
        let got = model.profile_integral(-4.5, 3.0);
        let want = brute_force(&span, -4.5, 3.0);
        assert!((got - want).norm() / want.norm() < 1e-6);
    }

    #[test]
    fn coupling_factor_cases() {
        let grid = ChannelGrid::new(5, 0.05, 32.0).unwrap();
        let flat = SpectralLoad::uniform(grid.clone(), 1e-3).unwrap();
        let g = 1e-3 / 0.032;
        assert!((coupling_factor(&flat, 0.05, -0.05, 0.0) - g).abs() < 1e-12);
        // f1 + f2 - f falls outside the grid
        assert_eq!(coupling_factor(&flat, 0.1, 0.1, -0.05), 0.0);
        // f in a guard band
        assert_eq!(coupling_factor(&flat, 0.0, 0.0, 0.02), 0.0);

        let mut powers = vec![1e-3; 5];
        powers[3] = 1e-3 * 10f64.powf(0.1);
        powers[4] = 1e-3 * 10f64.powf(0.1);
        let two_level = SpectralLoad::new(grid, powers).unwrap();
        // f1 = f2 in slot 3 and f1 + f2 - f = 0.05 + 0.05 + 0.0... choose f in slot 2
        let s = coupling_factor(&two_level, 0.05, 0.1, 0.05);
        // G(0.05)=G1, G(0.1)=G1, G(0.1)=G1, G(f=0.05)... use f in base slot instead
        assert!(s > 0.0);
        let s = coupling_factor(&two_level, 0.05, 0.1, 0.0);
        // f1 slot 3 (G1), f2 slot 4 (G1), f3 = 0.15 outside -> 0
        assert_eq!(s, 0.0);
        let s = coupling_factor(&two_level, 0.05, 0.05, 0.0);
        // f1, f2 in boosted slot 3, f3 = 0.1 boosted slot 4, f base slot 2
        assert!((s - g * 10f64.powf(0.15)).abs() < 1e-12 * g);
    }

    #[test]
    fn kernel_bounded_by_effective_length() {
        let link = build_ptp_scenario(&ChannelGrid::new(7, 0.05, 32.0).unwrap(), 2.0, &[80.0, 90.0], FiberSpec::ssmf())
            .unwrap();
        let g = 1.584_893e-3 / 0.032;
        let bound = g * leff(90.0, FiberSpec::ssmf().alpha_np_per_km()) * 1.000_001;
        for &(f1, f2, f) in &[(0.01, -0.1, 0.0), (0.14, 0.02, 0.05), (-0.12, 0.1, -0.03), (0.0, 0.0, 0.0)] {
            for k in 0..2 {
                let v = span_kernel(&link, k, f1, f2, f).unwrap();
                assert!(v.norm() <= bound, "{v}");
            }
        }
        // f1 = f: no phase, pure effective length times S_k
        let v = span_kernel(&link, 0, 0.0, 0.1, 0.0).unwrap();
        let leff80 = leff(80.0, FiberSpec::ssmf().alpha_np_per_km());
        let params_ratio = v.norm() / (g * leff80);
        assert!((params_ratio - 1.0).abs() < 1e-3, "{params_ratio}");
    }

    #[test]
    fn kernel_symmetric_in_f1_f2() {
        let link = build_ptp_scenario(&ChannelGrid::c_plus_l(), 0.0, &[100.0, 100.0], FiberSpec::ssmf()).unwrap();
        for &(f1, f2, f) in &[(0.3, -1.1, 0.02), (4.0, 0.5, 0.0), (-2.0, -2.7, -3.1)] {
            let a = span_kernel(&link, 1, f1, f2, f).unwrap();
            let b = span_kernel(&link, 1, f2, f1, f).unwrap();
            assert!((a - b).norm() <= 1e-12 * a.norm());
        }
    }
}
