use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::scenario::ChannelGrid;

/// Sampled dual-polarization field. Samples are in √W, so `|x|² + |y|²`
/// is the instantaneous power.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    sample_rate_thz: f64,
}

impl Field {
    pub fn zeros(len: usize, sample_rate_thz: f64) -> Self {
        Self {
            x: vec![Complex64::new(0.0, 0.0); len],
            y: vec![Complex64::new(0.0, 0.0); len],
            sample_rate_thz,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn sample_rate_thz(&self) -> f64 {
        self.sample_rate_thz
    }

    pub fn bin_spacing_thz(&self) -> f64 {
        self.sample_rate_thz / self.len() as f64
    }

    /// Mean power over the record, W.
    pub fn total_power_w(&self) -> f64 {
        let s: f64 = self.x.iter().chain(&self.y).map(|a| a.norm_sqr()).sum();
        s / self.len() as f64
    }

    /// Power inside the signal band of each grid slot, W.
    pub fn channel_powers_w(&self, grid: &ChannelGrid) -> Vec<f64> {
        let spec = Spectrum::of(self);
        (0..grid.channel_count())
            .map(|i| spec.band_power(grid, i))
            .collect()
    }
}

/// Bin frequency in THz for FFT index `k`, centered on zero.
pub(crate) fn bin_frequencies(n: usize, sample_rate_thz: f64) -> Vec<f64> {
    let df = sample_rate_thz / n as f64;
    (0..n)
        .map(|k| if k < n / 2 { k as f64 * df } else { (k as f64 - n as f64) * df })
        .collect()
}

/// Forward and inverse transforms of one length.
#[derive(Clone)]
pub(crate) struct Fourier {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fourier {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    /// Time samples to spectrum, scaled so that `Σ|X_k|²` is the mean power.
    pub fn forward(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        scratch.resize(self.fwd.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
        self.fwd.process_with_scratch(buf, scratch);
        let s = 1.0 / buf.len() as f64;
        buf.iter_mut().for_each(|v| *v *= s);
    }

    pub fn inverse(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        scratch.resize(self.inv.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
        self.inv.process_with_scratch(buf, scratch);
    }
}

/// Spectrum of both polarizations; `|X_k|² + |Y_k|²` is the power in bin `k`.
pub(crate) struct Spectrum {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub df: f64,
}

impl Spectrum {
    pub fn of(field: &Field) -> Self {
        let fourier = Fourier::new(field.len());
        let mut scratch = Vec::new();
        let mut x = field.x.clone();
        let mut y = field.y.clone();
        fourier.forward(&mut x, &mut scratch);
        fourier.forward(&mut y, &mut scratch);
        Self {
            x,
            y,
            df: field.bin_spacing_thz(),
        }
    }

    pub fn band_power(&self, grid: &ChannelGrid, i: usize) -> f64 {
        channel_bins(self.x.len(), self.df, grid, i)
            .map(|k| self.x[k].norm_sqr() + self.y[k].norm_sqr())
            .sum()
    }
}

/// FFT indices of the signal band of slot `i`, lowest frequency first.
pub(crate) fn channel_bins(
    n: usize,
    df: f64,
    grid: &ChannelGrid,
    i: usize,
) -> impl Iterator<Item = usize> {
    let center = (grid.center(i) / df).round() as i64;
    let width = (grid.bandwidth_thz() / df).round() as i64;
    let n = n as i64;
    (center - width / 2..center - width / 2 + width).map(move |k| k.rem_euclid(n) as usize)
}
