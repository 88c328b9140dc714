use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{bin_frequencies, channel_bins, Field, Fourier};
use crate::error::{invalid, Result};
use crate::gn_engine::dispersion_coeffs;
use crate::raman::{leff, sinhc};
use crate::scenario::{ChannelGrid, FiberSpec, Span};

/// Dual-polarization Kerr factor of the Manakov equation.
pub const MANAKOV_FACTOR: f64 = 8.0 / 9.0;

/// Step boundaries `z_0 = 0 < … < z_M = L` giving every step the same
/// share of the effective length.
pub fn log_step_boundaries(length_km: f64, alpha_np_per_km: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(invalid("steps_per_span", "step plan needs at least one step"));
    }
    if !(length_km > 0.0 && alpha_np_per_km > 0.0) {
        return Err(invalid("span", "length and attenuation must be positive"));
    }
    let loss = -(-alpha_np_per_km * length_km).exp_m1();
    let mut z: Vec<f64> = (0..=steps)
        .map(|m| -(-(m as f64 / steps as f64) * loss).ln_1p() / alpha_np_per_km)
        .collect();
    z[steps] = length_km;
    Ok(z)
}

/// `β2 ω²/2 + β3 ω³/6` per bin, rad/km.
pub(crate) fn dispersion_phase(fiber: &FiberSpec, freqs: &[f64]) -> Vec<f64> {
    let d = dispersion_coeffs(fiber);
    freqs
        .iter()
        .map(|f| {
            let w = 2.0 * std::f64::consts::PI * f;
            w * w * (0.5 * d.beta2 + d.beta3 * w / 6.0)
        })
        .collect()
}

struct Stepper<'a> {
    fiber: &'a FiberSpec,
    alpha: f64,
    freqs: &'a [f64],
    theta: &'a [f64],
    fourier: &'a Fourier,
    scratch: Vec<Complex64>,
    gain: Vec<Complex64>,
}

impl Stepper<'_> {
    /// Dispersion, attenuation and ISRS over `dz`, on the spectrum.
    fn linear(&mut self, x: &mut [Complex64], y: &mut [Complex64], dz: f64) {
        let atten = (-self.alpha * dz).exp();
        let cr = self.fiber.raman_slope_cr;
        let power: f64 = x.iter().zip(y.iter()).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).sum();
        let mut c = 0.0;
        let mut norm = 1.0;
        if cr > 0.0 && power > 0.0 {
            c = cr * power * leff(dz, self.alpha);
            let weighted: f64 = x
                .iter()
                .zip(y.iter())
                .zip(self.freqs)
                .map(|((a, b), f)| (a.norm_sqr() + b.norm_sqr()) * (-c * f).exp())
                .sum();
            norm = power / weighted;
        }
        self.gain.clear();
        self.gain.extend(self.freqs.iter().zip(self.theta).map(|(f, th)| {
            let g = atten * norm * (-c * f).exp();
            Complex64::from_polar(g.sqrt(), -th * dz)
        }));
        for ((a, b), g) in x.iter_mut().zip(y.iter_mut()).zip(&self.gain) {
            *a *= g;
            *b *= g;
        }
    }

    /// Kerr rotation over a step of length `h`, with the field at its midpoint.
    fn nonlinear(&self, x: &mut [Complex64], y: &mut [Complex64], h: f64) {
        let le = h * sinhc(0.5 * self.alpha * h);
        let k = -MANAKOV_FACTOR * self.fiber.gamma * le;
        for (a, b) in x.iter_mut().zip(y.iter_mut()) {
            let rot = Complex64::from_polar(1.0, k * (a.norm_sqr() + b.norm_sqr()));
            *a *= rot;
            *b *= rot;
        }
    }
}

/// Symmetric split-step propagation over one span with `steps` logarithmic
/// steps. ISRS acts as a per-step loss computed from the current spectrum.
pub fn propagate_span(field: &mut Field, span: &Span, steps: usize) -> Result<()> {
    let fourier = Fourier::new(field.len());
    let freqs = bin_frequencies(field.len(), field.sample_rate_thz());
    let theta = dispersion_phase(&span.fiber, &freqs);
    propagate_with(field, span, steps, &fourier, &freqs, &theta)
}

pub(crate) fn propagate_with(
    field: &mut Field,
    span: &Span,
    steps: usize,
    fourier: &Fourier,
    freqs: &[f64],
    theta: &[f64],
) -> Result<()> {
    let alpha = span.fiber.alpha_np_per_km();
    let z = log_step_boundaries(span.length_km, alpha, steps)?;
    let h: Vec<f64> = z.windows(2).map(|w| w[1] - w[0]).collect();
    let mut st = Stepper {
        fiber: &span.fiber,
        alpha,
        freqs,
        theta,
        fourier,
        scratch: Vec::new(),
        gain: Vec::with_capacity(freqs.len()),
    };
    let (x, y) = (&mut field.x, &mut field.y);
    st.fourier.forward(x, &mut st.scratch);
    st.fourier.forward(y, &mut st.scratch);
    if span.fiber.gamma == 0.0 {
        for &dz in &h {
            st.linear(x, y, dz);
        }
    } else {
        st.linear(x, y, 0.5 * h[0]);
        for m in 0..h.len() {
            st.fourier.inverse(x, &mut st.scratch);
            st.fourier.inverse(y, &mut st.scratch);
            st.nonlinear(x, y, h[m]);
            st.fourier.forward(x, &mut st.scratch);
            st.fourier.forward(y, &mut st.scratch);
            let next = h.get(m + 1).map_or(0.0, |n| 0.5 * n);
            st.linear(x, y, 0.5 * h[m] + next);
        }
    }
    st.fourier.inverse(x, &mut st.scratch);
    st.fourier.inverse(y, &mut st.scratch);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMode {
    /// One gain for the whole band, restoring total power.
    Flat,
    /// Per-channel gain restoring every channel to its span-input power.
    #[default]
    IsrsCompensating,
}

/// Powers at a span input, the target of the following amplifier.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSnapshot {
    pub total_w: f64,
    pub channels_w: Vec<f64>,
}

impl PowerSnapshot {
    pub fn of(field: &Field, grid: &ChannelGrid) -> Self {
        Self {
            total_w: field.total_power_w(),
            channels_w: field.channel_powers_w(grid),
        }
    }
}

/// Amplifier after a span. In `IsrsCompensating` mode, spectrum outside the
/// channel bands gets the flat gain.
pub fn gain_stage(field: &mut Field, grid: &ChannelGrid, target: &PowerSnapshot, mode: GainMode) {
    let now = field.total_power_w();
    if now <= 0.0 {
        return;
    }
    let flat = (target.total_w / now).sqrt();
    match mode {
        GainMode::Flat => {
            field.x.iter_mut().chain(field.y.iter_mut()).for_each(|v| *v *= flat);
        }
        GainMode::IsrsCompensating => {
            let n = field.len();
            let df = field.bin_spacing_thz();
            let fourier = Fourier::new(n);
            let mut scratch = Vec::new();
            fourier.forward(&mut field.x, &mut scratch);
            fourier.forward(&mut field.y, &mut scratch);
            let mut g = vec![flat; n];
            for (i, &want) in target.channels_w.iter().enumerate() {
                let bins: Vec<usize> = channel_bins(n, df, grid, i).collect();
                let have: f64 = bins.iter().map(|&k| field.x[k].norm_sqr() + field.y[k].norm_sqr()).sum();
                let gi = if have > 0.0 { (want / have).sqrt() } else { 0.0 };
                bins.iter().for_each(|&k| g[k] = gi);
            }
            for ((a, b), gk) in field.x.iter_mut().zip(field.y.iter_mut()).zip(&g) {
                *a *= gk;
                *b *= gk;
            }
            fourier.inverse(&mut field.x, &mut scratch);
            fourier.inverse(&mut field.y, &mut scratch);
        }
    }
}
