//! Split-step Fourier reference simulation of a WDM link.
//!
//! Dual-polarization Manakov propagation with the engineering sign
//! convention: the linear operator is `exp(-j(β2 ω²/2 + β3 ω³/6) z)` and the
//! Kerr rotation `exp(-j (8/9) γ (|x|² + |y|²) z)`. Frequencies are offsets
//! from the grid center, like everywhere else in the crate.

mod field;
mod modulation;
mod propagate;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gn_engine::{NliEntry, NliReport};
use crate::scenario::{
    build_ptp_scenario, ChannelGrid, FiberSpec, Link, NetworkLoadPlan, ScenarioConfig, SpectralLoad,
};
use crate::units::lin_to_db;

pub use field::Field;
pub use modulation::{mb_shaping, Constellation, MbShaping, ModulationKind, ModulationSpec};
pub use propagate::{
    gain_stage, log_step_boundaries, propagate_span, GainMode, PowerSnapshot, MANAKOV_FACTOR,
};

use field::{bin_frequencies, channel_bins, Fourier};
use modulation::draw_symbols;
use propagate::{dispersion_phase, propagate_with};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub symbols_per_run: usize,
    pub realizations: usize,
    pub samples_per_symbol: usize,
    pub steps_per_span: usize,
    pub seed: u64,
    #[serde(default)]
    pub gain: GainMode,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self::desk()
    }
}

impl SimulationSpec {
    /// 2^14 symbols, 4 realizations, 16 samples per symbol, 200 steps per span.
    pub fn desk() -> Self {
        Self {
            symbols_per_run: 1 << 14,
            realizations: 4,
            samples_per_symbol: 16,
            steps_per_span: 200,
            seed: 1,
            gain: GainMode::IsrsCompensating,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.symbols_per_run < 2 || !self.symbols_per_run.is_power_of_two() {
            return Err(invalid("symbols_per_run", "must be a power of two >= 2"));
        }
        if self.samples_per_symbol == 0 || !self.samples_per_symbol.is_power_of_two() {
            return Err(invalid("samples_per_symbol", "must be a power of two"));
        }
        if self.realizations == 0 {
            return Err(invalid("realizations", "must be at least 1"));
        }
        if self.steps_per_span == 0 {
            return Err(invalid("steps_per_span", "step plan needs at least one step"));
        }
        Ok(())
    }

    pub fn samples(&self) -> usize {
        self.symbols_per_run * self.samples_per_symbol
    }

    pub fn sample_rate_thz(&self, grid: &ChannelGrid) -> f64 {
        grid.bandwidth_thz() * self.samples_per_symbol as f64
    }
}

/// Desk-scale point-to-point link: `channels` × 10 GBd on a 12.5 GHz grid,
/// `spans` × 80 km of SSMF.
pub fn desk_scale_link(channels: usize, power_dbm: f64, spans: usize) -> Result<Link> {
    let desk = ScenarioConfig::desk_scale();
    let grid = ChannelGrid::new(channels, desk.grid.spacing_thz(), desk.grid.symbol_rate_gbd())?;
    build_ptp_scenario(&grid, power_dbm, &vec![desk.spans[0]; spans], desk.fiber)
}

/// Checks that `sim` can represent every load of `link` without aliasing.
pub fn check_sampling(link: &Link, sim: &SimulationSpec) -> Result<()> {
    sim.validate()?;
    let grid = link.grid();
    let fs = sim.sample_rate_thz(grid);
    let n = sim.samples();
    let df = fs / n as f64;
    for c in grid.center_frequencies() {
        let k = c / df;
        if (k - k.round()).abs() > 1e-6 {
            return Err(invalid(
                "samples_per_symbol",
                format!("channel at {c} THz is not on the {df} THz bin grid"),
            ));
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in link.spans() {
        for i in s.load.occupied_indices() {
            let half = 0.5 * grid.bandwidth_thz();
            lo = lo.min(grid.center(i) - half);
            hi = hi.max(grid.center(i) + half);
        }
    }
    if lo > hi {
        return Err(Error::TooFewChannels { found: 0 });
    }
    if lo < -0.5 * fs || hi > 0.5 * fs - df {
        return Err(Error::Aliasing(format!(
            "band [{lo:.4}, {hi:.4}] THz exceeds the sampled range ±{:.4} THz",
            0.5 * fs
        )));
    }
    let nonlinear = link.spans().iter().any(|s| s.fiber.gamma > 0.0);
    if nonlinear && fs < 2.0 * (hi - lo) {
        return Err(Error::Aliasing(format!(
            "{fs:.4} THz sampling folds mixing products of a {:.4} THz band back onto it",
            hi - lo
        )));
    }
    Ok(())
}

/// Field launched into the first span plus the symbols of every channel in it.
#[derive(Debug, Clone)]
pub struct Transmitted {
    pub field: Field,
    /// Per slot: symbols on (x, y), or `None` if the slot is dark.
    pub symbols: Vec<Option<[Vec<Complex64>; 2]>>,
}

/// Writes a Nyquist channel into the spectrum of slot `i`. Each polarization
/// carries half of `power_w`.
#[allow(clippy::too_many_arguments)]
fn write_channel(
    sx: &mut [Complex64],
    sy: &mut [Complex64],
    df: f64,
    grid: &ChannelGrid,
    i: usize,
    power_w: f64,
    symbols: &[Vec<Complex64>; 2],
    predispersion: Option<&[f64]>,
) {
    let ns = symbols[0].len();
    let sym_fft = Fourier::new(ns);
    let mut scratch = Vec::new();
    let amp = (0.5 * power_w).sqrt();
    for (pol, out) in [(0, &mut *sx), (1, &mut *sy)] {
        let mut s = symbols[pol].clone();
        sym_fft.forward(&mut s, &mut scratch);
        for (j, k) in channel_bins(out.len(), df, grid, i).enumerate() {
            // offset j - ns/2 from the channel center, in symbol-spectrum order
            let m = (j + ns / 2) % ns;
            let mut v = s[m] * amp;
            if let Some(th) = predispersion {
                v *= Complex64::from_polar(1.0, -th[k]);
            }
            out[k] = v;
        }
    }
}

fn clear_channel(sx: &mut [Complex64], sy: &mut [Complex64], df: f64, grid: &ChannelGrid, i: usize) {
    for k in channel_bins(sx.len(), df, grid, i) {
        sx[k] = Complex64::new(0.0, 0.0);
        sy[k] = Complex64::new(0.0, 0.0);
    }
}

/// Draws fresh symbols for every occupied slot of `load` and builds the
/// launched field. `predispersion_km[i]` pre-distorts slot `i` as if it had
/// already travelled that far over `fiber`; pass an empty slice for none.
pub fn transmit(
    load: &SpectralLoad,
    modulation: &ModulationSpec,
    sim: &SimulationSpec,
    realization: u64,
    predispersion_km: &[f64],
    fiber: &FiberSpec,
) -> Result<Transmitted> {
    sim.validate()?;
    let grid = load.grid();
    let fs = sim.sample_rate_thz(grid);
    let n = sim.samples();
    let df = fs / n as f64;
    if !predispersion_km.is_empty() && predispersion_km.len() != grid.channel_count() {
        return Err(invalid("predispersion_km", "one entry per slot is required"));
    }
    let (lo, hi) = grid.band_edges();
    if lo < -0.5 * fs || hi > 0.5 * fs - df {
        return Err(Error::Aliasing(format!("grid [{lo:.4}, {hi:.4}] THz exceeds ±{:.4} THz", 0.5 * fs)));
    }
    let constellation = modulation.constellation()?;
    let mut rng = rng_for(sim.seed, realization);
    let theta = dispersion_phase(fiber, &bin_frequencies(n, fs));
    let mut field = Field::zeros(n, fs);
    let mut symbols = vec![None; grid.channel_count()];
    for i in load.occupied_indices() {
        let pair = [
            draw_symbols(constellation.as_ref(), sim.symbols_per_run, &mut rng),
            draw_symbols(constellation.as_ref(), sim.symbols_per_run, &mut rng),
        ];
        let pre = predispersion_km.get(i).copied().unwrap_or(0.0);
        let th: Option<Vec<f64>> = (pre != 0.0).then(|| theta.iter().map(|t| t * pre).collect());
        write_channel(&mut field.x, &mut field.y, df, grid, i, load.power_w(i), &pair, th.as_deref());
        symbols[i] = Some(pair);
    }
    let fourier = Fourier::new(n);
    let mut scratch = Vec::new();
    fourier.inverse(&mut field.x, &mut scratch);
    fourier.inverse(&mut field.y, &mut scratch);
    Ok(Transmitted { field, symbols })
}

fn rng_for(seed: u64, realization: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization);
    rng
}

/// Received symbol energy and equalized error energy of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelSnr {
    pub signal: f64,
    pub error: f64,
}

impl ChannelSnr {
    pub fn snr_db(&self) -> f64 {
        lin_to_db(self.signal / self.error)
    }

    fn add(&mut self, other: ChannelSnr) {
        self.signal += other.signal;
        self.error += other.error;
    }
}

/// Ideal receiver for slot `channel`: full dispersion compensation of
/// `link`, rectangular matched filter, symbol-rate sampling and a
/// least-squares complex gain per polarization against the sent symbols.
pub fn receive_snr(field: &Field, channel: usize, link: &Link, tx: &Transmitted) -> Result<ChannelSnr> {
    let grid = link.grid();
    let count = grid.channel_count();
    if channel >= count {
        return Err(Error::ChannelOutOfRange { index: channel, count });
    }
    let sent = tx.symbols.get(channel).and_then(|s| s.as_ref()).ok_or(Error::UnknownReference(channel))?;
    let n = field.len();
    let freqs = bin_frequencies(n, field.sample_rate_thz());
    let mut total_theta = vec![0.0; n];
    for s in link.spans() {
        for (t, th) in total_theta.iter_mut().zip(dispersion_phase(&s.fiber, &freqs)) {
            *t += th * s.length_km;
        }
    }
    let fourier = Fourier::new(n);
    let mut scratch = Vec::new();
    let mut out = ChannelSnr::default();
    let ns = sent[0].len();
    let sym_fft = Fourier::new(ns);
    for (pol, samples) in [&field.x, &field.y].into_iter().enumerate() {
        let mut spec = samples.clone();
        fourier.forward(&mut spec, &mut scratch);
        let mut y = vec![Complex64::new(0.0, 0.0); ns];
        for (j, k) in channel_bins(n, field.bin_spacing_thz(), grid, channel).enumerate() {
            y[(j + ns / 2) % ns] = spec[k] * Complex64::from_polar(1.0, total_theta[k]);
        }
        sym_fft.inverse(&mut y, &mut scratch);
        let x = &sent[pol];
        let num: Complex64 = y.iter().zip(x).map(|(a, b)| a * b.conj()).sum();
        let den: f64 = x.iter().map(|b| b.norm_sqr()).sum();
        let h = num / den;
        if h.norm_sqr() == 0.0 {
            return Err(invalid("channel", format!("slot {channel} carries no signal at the receiver")));
        }
        out.signal += den;
        out.error += y.iter().zip(x).map(|(a, b)| (a / h - b).norm_sqr()).sum::<f64>();
    }
    Ok(out)
}

/// Whether slot `i` carries the same signal into span `k` as into span `k - 1`.
fn continues(link: &Link, plan: Option<&NetworkLoadPlan>, k: usize, i: usize) -> bool {
    let (a, b) = (&link.spans()[k - 1].load, &link.spans()[k].load);
    if !(a.is_occupied(i) && b.is_occupied(i)) {
        return false;
    }
    match plan {
        Some(p) => p.spans[k - 1].lightpath[i].is_some() && p.spans[k - 1].lightpath[i] == p.spans[k].lightpath[i],
        None => true,
    }
}

/// One transmission realization over the whole link.
pub fn run_realization(
    link: &Link,
    plan: Option<&NetworkLoadPlan>,
    channels: &[usize],
    modulation: &ModulationSpec,
    sim: &SimulationSpec,
    realization: u64,
) -> Result<Vec<ChannelSnr>> {
    let grid = link.grid();
    let spans = link.spans();
    if let Some(p) = plan {
        if p.spans.len() != spans.len() {
            return Err(invalid("plan", "span count differs from the link"));
        }
    }
    for &c in channels {
        if c >= grid.channel_count() {
            return Err(Error::ChannelOutOfRange { index: c, count: grid.channel_count() });
        }
        if !spans[0].load.is_occupied(c) || !(1..spans.len()).all(|k| continues(link, plan, k, c)) {
            return Err(Error::UnknownReference(c));
        }
    }
    let predisp = |k: usize| plan.map(|p| p.spans[k].predispersion_km.clone()).unwrap_or_default();
    let fiber0 = spans[0].fiber;
    let tx = transmit(&spans[0].load, modulation, sim, realization, &predisp(0), &fiber0)?;

    let n = sim.samples();
    let fs = sim.sample_rate_thz(grid);
    let df = fs / n as f64;
    let freqs = bin_frequencies(n, fs);
    let fourier = Fourier::new(n);
    let constellation = modulation.constellation()?;
    // interferers added along the link use their own random stream
    let mut add_rng = rng_for(sim.seed ^ 0x5eed_ad05, realization);
    let base_theta = dispersion_phase(&fiber0, &freqs);
    let mut field = tx.field.clone();
    let mut scratch = Vec::new();
    for (k, span) in spans.iter().enumerate() {
        if k > 0 {
            let changed: Vec<usize> = (0..grid.channel_count())
                .filter(|&i| !continues(link, plan, k, i))
                .filter(|&i| spans[k - 1].load.is_occupied(i) || span.load.is_occupied(i))
                .collect();
            if !changed.is_empty() {
                let pre = predisp(k);
                fourier.forward(&mut field.x, &mut scratch);
                fourier.forward(&mut field.y, &mut scratch);
                for &i in &changed {
                    clear_channel(&mut field.x, &mut field.y, df, grid, i);
                    if span.load.is_occupied(i) {
                        let pair = [
                            draw_symbols(constellation.as_ref(), sim.symbols_per_run, &mut add_rng),
                            draw_symbols(constellation.as_ref(), sim.symbols_per_run, &mut add_rng),
                        ];
                        let d = pre.get(i).copied().unwrap_or(0.0);
                        let th: Option<Vec<f64>> = (d != 0.0).then(|| base_theta.iter().map(|t| t * d).collect());
                        write_channel(&mut field.x, &mut field.y, df, grid, i, span.load.power_w(i), &pair, th.as_deref());
                    }
                }
                fourier.inverse(&mut field.x, &mut scratch);
                fourier.inverse(&mut field.y, &mut scratch);
            }
        }
        let target = PowerSnapshot::of(&field, grid);
        let theta = dispersion_phase(&span.fiber, &freqs);
        propagate_with(&mut field, span, sim.steps_per_span, &fourier, &freqs, &theta)?;
        gain_stage(&mut field, grid, &target, sim.gain);
    }
    channels.iter().map(|&c| receive_snr(&field, c, link, &tx)).collect()
}

/// SNR of `channels` averaged over `sim.realizations` runs, in the same
/// layout as the model report. Realizations run in parallel.
pub fn simulate_link(
    link: &Link,
    plan: Option<&NetworkLoadPlan>,
    channels: &[usize],
    modulation: &ModulationSpec,
    sim: &SimulationSpec,
) -> Result<NliReport> {
    check_sampling(link, sim)?;
    let runs: Vec<Vec<ChannelSnr>> = (0..sim.realizations as u64)
        .into_par_iter()
        .map(|r| run_realization(link, plan, channels, modulation, sim, r))
        .collect::<Result<_>>()?;
    let grid = link.grid();
    let load = &link.spans()[0].load;
    let entries = channels
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let mut acc = ChannelSnr::default();
            runs.iter().for_each(|r| acc.add(r[j]));
            let snr = acc.signal / acc.error;
            NliEntry {
                channel_index: c,
                f_thz: grid.center(c),
                power_w: load.power_w(c),
                sigma2_nli_w: load.power_w(c) / snr,
                snr_nli_db: lin_to_db(snr),
            }
        })
        .collect();
    Ok(NliReport { entries })
}
