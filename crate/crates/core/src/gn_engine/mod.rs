//! NLI power spectral density of a multi-span link with ISRS and
//! span-dependent loads, and the per-channel SNR it implies.
//!
//! ```text
//! G(f) = 16/27 G_1(f) ∫∫ |Σ_k γ_k S_k(f1, f2, f) ∫_0^{L_k} ρ_k(ζ, f1 + f2 - f) e^{jφ(f1, f2, f, L~_k + ζ)} dζ|² df1 df2
//! ```

mod cartesian;
mod dispersion;
mod hyperbolic;
mod integrand;
mod kernel;
mod launch;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dispersion::{dispersion_coeffs, phase_mismatch, DispersionCoeffs};
pub use kernel::{coupling_factor, span_kernel};
pub use launch::{edfa_noise_psd, optimal_launch, LaunchPoint, LaunchSweep};

use crate::error::{invalid, Error, Result};
use crate::scenario::{ChannelGrid, Link};
use crate::units::{lin_to_db, w_to_dbm};
use integrand::Evaluator;
use kernel::{occupied_band, SpanModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureScheme {
    Hyperbolic,
    /// Uniform Cartesian panels, fully coherent. Reference only.
    CartesianOracle,
}

/// Controls for one `G(f)` evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: QuadratureScheme,
    /// Resolution knob. Hyperbolic: panel width `12 / nodes` in `ln x` and
    /// `θ`. Cartesian: panels per axis.
    pub nodes: usize,
    /// Accuracy target of the span integral.
    pub target_rel_error: f64,
    /// Integration band `(lo, hi)` in THz; defaults to the occupied band.
    pub band: Option<(f64, f64)>,
    /// Coherent span interference is integrated exactly up to this many
    /// periods of the slowest inter-span beat; beyond it the beat terms are
    /// averaged out. `None` keeps every term coherent.
    pub coherent_periods: Option<f64>,
    /// Gauss-Legendre points across each channel band.
    pub channel_points: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::production()
    }
}

impl QuadratureSpec {
    pub fn production() -> Self {
        Self {
            scheme: QuadratureScheme::Hyperbolic,
            nodes: 64,
            target_rel_error: 1e-6,
            band: None,
            coherent_periods: Some(16.0),
            channel_points: 3,
        }
    }

    /// Coarser setting for sweeps over many loads.
    pub fn reduced() -> Self {
        Self {
            nodes: 16,
            ..Self::production()
        }
    }

    pub fn cartesian_oracle(nodes: usize) -> Self {
        Self {
            scheme: QuadratureScheme::CartesianOracle,
            nodes,
            coherent_periods: None,
            ..Self::production()
        }
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn with_channel_points(mut self, m: usize) -> Self {
        self.channel_points = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 8 {
            return Err(invalid("nodes", format!("{} is below the minimum of 8", self.nodes)));
        }
        if self.channel_points == 0 {
            return Err(invalid("channel_points", "need at least one point"));
        }
        if !(self.target_rel_error > 0.0 && self.target_rel_error < 0.1) {
            return Err(invalid("target_rel_error", "must lie in (0, 0.1)"));
        }
        if let Some(p) = self.coherent_periods {
            if !(p > 0.0) {
                return Err(invalid("coherent_periods", "must be positive"));
            }
        }
        if let Some((lo, hi)) = self.band {
            if !(lo < hi) {
                return Err(invalid("band", "lower limit must be below upper limit"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct FiberGroup {
    pub alpha: f64,
    pub order: usize,
}

/// A link prepared for repeated `G(f)` evaluation. Spans with identical
/// fiber, length and load share one precomputed span model.
#[derive(Debug, Clone)]
pub struct NliModel {
    pub(crate) quad: QuadratureSpec,
    pub(crate) grid: ChannelGrid,
    pub(crate) classes: Vec<SpanModel>,
    pub(crate) class_group: Vec<usize>,
    pub(crate) fiber_groups: Vec<FiberGroup>,
    /// Class of each span, in link order.
    pub(crate) seq: Vec<usize>,
    pub(crate) lengths: Vec<f64>,
    /// Every span has the same class and length.
    pub(crate) uniform: bool,
    pub(crate) band: (f64, f64),
    /// Frequencies where some span's PSD steps.
    pub(crate) jumps: Vec<f64>,
    pub(crate) total_length: f64,
    pub(crate) beta3_max: f64,
    pub(crate) x_floor: f64,
    pub(crate) x_coherent: f64,
    pub(crate) coherent_dx: f64,
    first_span_psd: Vec<f64>,
}

fn psd_steps(link: &Link) -> Vec<f64> {
    let grid = link.grid();
    let b = grid.bandwidth_thz();
    let packed = (grid.spacing_thz() - b).abs() <= 1e-12 * grid.spacing_thz();
    let n = grid.channel_count();
    let mut out = Vec::new();
    for span in link.spans() {
        let load = &span.load;
        for i in 0..n {
            let p = load.channel_psd(i);
            let left = if packed && i > 0 { load.channel_psd(i - 1) } else { 0.0 };
            if p != left {
                out.push(grid.center(i) - 0.5 * b);
            }
            let right = if packed && i + 1 < n { load.channel_psd(i + 1) } else { 0.0 };
            if p != right && !(packed && i + 1 < n) {
                out.push(grid.center(i) + 0.5 * b);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    out
}

impl NliModel {
    pub fn new(link: &Link, quad: &QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        let occupied = occupied_band(link).ok_or(Error::TooFewChannels { found: 0 })?;
        let band = match quad.band {
            Some((lo, hi)) => {
                if lo > occupied.0 + 1e-12 || hi < occupied.1 - 1e-12 {
                    return Err(invalid(
                        "band",
                        format!("({lo}, {hi}) THz does not cover the occupied band ({}, {}) THz", occupied.0, occupied.1),
                    ));
                }
                (lo, hi)
            }
            None => occupied,
        };

        let mut classes: Vec<SpanModel> = Vec::new();
        let mut class_span: Vec<usize> = Vec::new();
        let mut seq = Vec::with_capacity(link.span_count());
        for (k, span) in link.spans().iter().enumerate() {
            let found = class_span.iter().position(|&j| link.spans()[j] == *span);
            let c = match found {
                Some(c) => c,
                None => {
                    classes.push(SpanModel::new(span, band, quad.target_rel_error)?);
                    class_span.push(k);
                    classes.len() - 1
                }
            };
            seq.push(c);
        }

        let mut fiber_groups: Vec<FiberGroup> = Vec::new();
        let mut group_key: Vec<(f64, DispersionCoeffs)> = Vec::new();
        let mut class_group = Vec::with_capacity(classes.len());
        for c in &classes {
            let key = (c.alpha, c.disp);
            let g = match group_key.iter().position(|k| *k == key) {
                Some(g) => g,
                None => {
                    group_key.push(key);
                    fiber_groups.push(FiberGroup { alpha: c.alpha, order: 0 });
                    fiber_groups.len() - 1
                }
            };
            fiber_groups[g].order = fiber_groups[g].order.max(c.order());
            class_group.push(g);
        }

        let lengths: Vec<f64> = link.spans().iter().map(|s| s.length_km).collect();
        let total_length: f64 = lengths.iter().sum();
        let uniform = seq.iter().all(|&c| c == 0) && lengths.iter().all(|&l| l == lengths[0]);

        let (s_lo, s_hi) = (2.0 * band.0, 2.0 * band.1);
        let beta_max = classes
            .iter()
            .map(|c| c.disp.max_effective(s_lo, s_hi))
            .fold(0.0, f64::max);
        let beta_min = classes
            .iter()
            .map(|c| c.disp.min_effective(s_lo, s_hi))
            .fold(f64::INFINITY, f64::min);
        let beta3_max = classes.iter().map(|c| c.disp.beta3.abs()).fold(0.0, f64::max);
        let alpha_min = classes.iter().map(|c| c.alpha).fold(f64::INFINITY, f64::min);
        let width = band.1 - band.0;

        // below this |ν1 ν2| the integrand is flat in x and the remainder is negligible
        let x_scale = if beta_max > 0.0 {
            (alpha_min / (4.0 * PI * PI * beta_max)).min(width * width)
        } else {
            width * width
        };
        let x_floor = 1e-7 * x_scale;
        let x_coherent = match quad.coherent_periods {
            Some(p) if beta_min > 0.0 => p / (2.0 * PI * beta_min * total_length),
            _ => f64::INFINITY,
        };
        let phase_step = 16.0 * PI / quad.nodes as f64;
        let coherent_dx = if beta_max > 0.0 {
            phase_step / (4.0 * PI * PI * beta_max * total_length)
        } else {
            f64::INFINITY
        };

        let first = &link.spans()[0].load;
        Ok(Self {
            quad: quad.clone(),
            grid: link.grid().clone(),
            first_span_psd: (0..first.grid().channel_count()).map(|i| first.channel_psd(i)).collect(),
            classes,
            class_group,
            fiber_groups,
            seq,
            lengths,
            uniform,
            band,
            jumps: psd_steps(link),
            total_length,
            beta3_max,
            x_floor,
            x_coherent,
            coherent_dx,
        })
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub(crate) fn step(&self) -> f64 {
        12.0 / self.quad.nodes as f64
    }

    /// Largest phase change of the inter-span beat allowed across one panel.
    pub(crate) fn phase_step(&self) -> f64 {
        16.0 * PI / self.quad.nodes as f64
    }

    pub(crate) fn class_psd(&self, c: &SpanModel, f: f64) -> f64 {
        self.grid.slot_of(f).map_or(0.0, |i| c.psd[i])
    }

    /// `G(f)` in W/THz.
    pub fn psd(&self, f: f64) -> Result<f64> {
        let g1 = self.grid.slot_of(f).map_or(0.0, |i| self.first_span_psd[i]);
        if g1 <= 0.0 {
            return Err(Error::Unoccupied { f_thz: f });
        }
        let mut ev = Evaluator::new(self, f);
        let integral = match self.quad.scheme {
            QuadratureScheme::Hyperbolic => hyperbolic::integrate(self, &mut ev),
            QuadratureScheme::CartesianOracle => cartesian::integrate(self, &mut ev),
        };
        if !integral.is_finite() {
            return Err(Error::NonConvergence(format!("non-finite NLI integral at {f} THz")));
        }
        Ok(16.0 / 27.0 * g1 * integral)
    }

    /// `σ²_NLI` of channel `i`: `G(f)` integrated over the channel band.
    pub fn channel_nli(&self, i: usize) -> Result<f64> {
        let n = self.grid.channel_count();
        if i >= n {
            return Err(Error::ChannelOutOfRange { index: i, count: n });
        }
        let c = self.grid.center(i);
        if self.first_span_psd[i] <= 0.0 {
            return Err(Error::Unoccupied { f_thz: c });
        }
        let half = 0.5 * self.grid.bandwidth_thz();
        let gl = crate::gauss::rule(self.quad.channel_points);
        let mut acc = 0.0;
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            acc += w * self.psd(c + half * x)?;
        }
        Ok(half * acc)
    }

    /// SNR report for the given channels, evaluated in parallel.
    pub fn report(&self, channels: &[usize]) -> Result<NliReport> {
        let entries = channels
            .par_iter()
            .map(|&i| {
                let sigma2 = self.channel_nli(i)?;
                let p = self.first_span_psd[i] * self.grid.bandwidth_thz();
                Ok(NliEntry {
                    channel_index: i,
                    f_thz: self.grid.center(i),
                    power_w: p,
                    sigma2_nli_w: sigma2,
                    snr_nli_db: lin_to_db(p / sigma2),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NliReport { entries })
    }
}

/// `G(f)` of the link in W/THz.
pub fn nli_psd(link: &Link, f: f64, quad: &QuadratureSpec) -> Result<f64> {
    NliModel::new(link, quad)?.psd(f)
}

/// `σ²_NLI` of channel `i` in W.
pub fn integrate_channel(link: &Link, i: usize, quad: &QuadratureSpec) -> Result<f64> {
    NliModel::new(link, quad)?.channel_nli(i)
}

/// Report for every channel occupied at the link input.
pub fn snr_report(link: &Link, quad: &QuadratureSpec) -> Result<NliReport> {
    let channels: Vec<usize> = link.spans()[0].load.occupied_indices().collect();
    snr_report_for(link, &channels, quad)
}

pub fn snr_report_for(link: &Link, channels: &[usize], quad: &QuadratureSpec) -> Result<NliReport> {
    NliModel::new(link, quad)?.report(channels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliEntry {
    pub channel_index: usize,
    pub f_thz: f64,
    pub power_w: f64,
    pub sigma2_nli_w: f64,
    pub snr_nli_db: f64,
}

impl NliEntry {
    pub fn power_dbm(&self) -> f64 {
        w_to_dbm(self.power_w)
    }

    pub fn sigma2_nli_dbm(&self) -> f64 {
        w_to_dbm(self.sigma2_nli_w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliReport {
    pub entries: Vec<NliEntry>,
}

impl NliReport {
    pub fn snr_db(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.snr_nli_db).collect()
    }

    pub fn get(&self, channel_index: usize) -> Option<&NliEntry> {
        self.entries.iter().find(|e| e.channel_index == channel_index)
    }
}
