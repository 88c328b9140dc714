//! Physical and spectral data model: fibers, channel grids, per-span loads
//! and links, plus the point-to-point and randomized network load builders.

mod config;
mod network;

pub use config::{LoadConfig, LoadMode, ScenarioConfig};
pub use network::{build_network_plan, load_at_span, NetworkLoadPlan, SpanTraffic, RNG_ALGORITHM};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::units::{alpha_db_to_np, dbm_to_w};

fn default_ref_wavelength() -> f64 {
    1550.0
}

/// Physical fiber constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    pub alpha_db_per_km: f64,
    /// Chromatic dispersion, ps/(nm·km).
    #[serde(rename = "D")]
    pub dispersion_d: f64,
    /// Dispersion slope, ps/(nm²·km).
    #[serde(rename = "S")]
    pub slope_s: f64,
    /// Nonlinearity coefficient, 1/(W·km).
    pub gamma: f64,
    /// Slope of the triangular Raman gain approximation, 1/(W·THz·km).
    #[serde(rename = "Cr")]
    pub raman_slope_cr: f64,
    #[serde(default = "default_ref_wavelength")]
    pub ref_wavelength_nm: f64,
}

impl FiberSpec {
    /// Standard single-mode fiber used for the C+L band studies.
    pub fn ssmf() -> Self {
        Self {
            alpha_db_per_km: 0.2,
            dispersion_d: 17.0,
            slope_s: 0.067,
            gamma: 1.2,
            raman_slope_cr: 0.028,
            ref_wavelength_nm: 1550.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.alpha_db_per_km,
            self.dispersion_d,
            self.slope_s,
            self.gamma,
            self.raman_slope_cr,
            self.ref_wavelength_nm,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("fiber", "all constants must be finite"));
        }
        if self.alpha_db_per_km <= 0.0 {
            return Err(invalid("alpha_db_per_km", "must be positive"));
        }
        if self.gamma < 0.0 {
            return Err(invalid("gamma", "must be non-negative"));
        }
        if self.raman_slope_cr < 0.0 {
            return Err(invalid("Cr", "must be non-negative"));
        }
        if self.ref_wavelength_nm <= 0.0 {
            return Err(invalid("ref_wavelength_nm", "must be positive"));
        }
        Ok(())
    }

    /// Power attenuation in 1/km.
    pub fn alpha_np_per_km(&self) -> f64 {
        alpha_db_to_np(self.alpha_db_per_km)
    }

    pub fn without_raman(mut self) -> Self {
        self.raman_slope_cr = 0.0;
        self
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct GridConfig {
    count: usize,
    spacing_thz: f64,
    symbol_rate_gbd: f64,
}

/// Uniform WDM slot layout, symmetric about 0 THz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridConfig", into = "GridConfig")]
pub struct ChannelGrid {
    spacing_thz: f64,
    symbol_rate_gbd: f64,
    center_frequencies: Vec<f64>,
}

impl TryFrom<GridConfig> for ChannelGrid {
    type Error = Error;

    fn try_from(c: GridConfig) -> Result<Self> {
        ChannelGrid::new(c.count, c.spacing_thz, c.symbol_rate_gbd)
    }
}

impl From<ChannelGrid> for GridConfig {
    fn from(g: ChannelGrid) -> Self {
        GridConfig {
            count: g.channel_count(),
            spacing_thz: g.spacing_thz,
            symbol_rate_gbd: g.symbol_rate_gbd,
        }
    }
}

impl ChannelGrid {
    pub fn new(count: usize, spacing_thz: f64, symbol_rate_gbd: f64) -> Result<Self> {
        if count == 0 {
            return Err(invalid("count", "grid needs at least one channel"));
        }
        if !(spacing_thz > 0.0 && spacing_thz.is_finite()) {
            return Err(invalid("spacing_thz", "must be positive"));
        }
        if !(symbol_rate_gbd > 0.0 && symbol_rate_gbd.is_finite()) {
            return Err(invalid("symbol_rate_gbd", "must be positive"));
        }
        // Allow rounding noise when the grid is Nyquist-packed.
        if symbol_rate_gbd > spacing_thz * 1000.0 * (1.0 + 1e-12) {
            return Err(invalid(
                "symbol_rate_gbd",
                format!("{symbol_rate_gbd} GBd overlaps on a {spacing_thz} THz grid"),
            ));
        }
        let mid = (count as f64 - 1.0) / 2.0;
        let center_frequencies = (0..count)
            .map(|i| (i as f64 - mid) * spacing_thz)
            .collect();
        Ok(Self {
            spacing_thz,
            symbol_rate_gbd,
            center_frequencies,
        })
    }

    /// The 251 × 40 GBd grid filling 10.04 THz of C+L band.
    pub fn c_plus_l() -> Self {
        Self::new(251, 0.04, 40.0).expect("static grid is valid")
    }

    pub fn channel_count(&self) -> usize {
        self.center_frequencies.len()
    }

    pub fn spacing_thz(&self) -> f64 {
        self.spacing_thz
    }

    pub fn symbol_rate_gbd(&self) -> f64 {
        self.symbol_rate_gbd
    }

    /// Occupied bandwidth of one channel in THz.
    pub fn bandwidth_thz(&self) -> f64 {
        self.symbol_rate_gbd / 1000.0
    }

    pub fn center_frequencies(&self) -> &[f64] {
        &self.center_frequencies
    }

    pub fn center(&self, i: usize) -> f64 {
        self.center_frequencies[i]
    }

    /// Slot whose signal band `[f_i - B/2, f_i + B/2)` contains `f_thz`.
    pub fn slot_of(&self, f_thz: f64) -> Option<usize> {
        let first = self.center_frequencies[0];
        let pos = ((f_thz - first) / self.spacing_thz).round();
        if pos < 0.0 || pos >= self.channel_count() as f64 {
            return None;
        }
        let i = pos as usize;
        let half = 0.5 * self.bandwidth_thz();
        let d = f_thz - self.center_frequencies[i];
        if d >= -half && d < half {
            Some(i)
        } else {
            None
        }
    }

    /// Lower and upper edge of the outermost channel bands.
    pub fn band_edges(&self) -> (f64, f64) {
        let half = 0.5 * self.bandwidth_thz();
        (
            self.center_frequencies[0] - half,
            self.center_frequencies[self.channel_count() - 1] + half,
        )
    }
}

/// Per-slot launch powers at one span input; a zero entry is an empty slot.
///
/// The implied PSD is piecewise constant: `P_i / B` across each occupied
/// channel band and zero elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralLoad {
    grid: ChannelGrid,
    launch_power_w: Vec<f64>,
}

impl SpectralLoad {
    pub fn new(grid: ChannelGrid, launch_power_w: Vec<f64>) -> Result<Self> {
        if launch_power_w.len() != grid.channel_count() {
            return Err(invalid(
                "launch_power_w",
                format!(
                    "{} entries for {} slots",
                    launch_power_w.len(),
                    grid.channel_count()
                ),
            ));
        }
        if launch_power_w.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(invalid("launch_power_w", "powers must be finite and >= 0"));
        }
        Ok(Self {
            grid,
            launch_power_w,
        })
    }

    /// Every slot occupied at the same power.
    pub fn uniform(grid: ChannelGrid, power_w: f64) -> Result<Self> {
        if !(power_w > 0.0 && power_w.is_finite()) {
            return Err(invalid("power", "per-channel power must be positive"));
        }
        let n = grid.channel_count();
        Self::new(grid, vec![power_w; n])
    }

    pub fn grid(&self) -> &ChannelGrid {
        &self.grid
    }

    pub fn powers_w(&self) -> &[f64] {
        &self.launch_power_w
    }

    pub fn power_w(&self, i: usize) -> f64 {
        self.launch_power_w[i]
    }

    pub fn is_occupied(&self, i: usize) -> bool {
        self.launch_power_w[i] > 0.0
    }

    pub fn occupancy(&self) -> Vec<bool> {
        self.launch_power_w.iter().map(|&p| p > 0.0).collect()
    }

    pub fn occupied_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.launch_power_w.len()).filter(move |&i| self.is_occupied(i))
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied_indices().count()
    }

    /// Total launch power `P_k`.
    pub fn total_power_w(&self) -> f64 {
        self.launch_power_w.iter().sum()
    }

    /// PSD of slot `i` in W/THz.
    pub fn channel_psd(&self, i: usize) -> f64 {
        self.launch_power_w[i] / self.grid.bandwidth_thz()
    }

    /// `G_k(f)` in W/THz.
    pub fn psd(&self, f_thz: f64) -> f64 {
        match self.grid.slot_of(f_thz) {
            Some(i) => self.channel_psd(i),
            None => 0.0,
        }
    }

    /// Same load with every power multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            launch_power_w: self.launch_power_w.iter().map(|p| p * factor).collect(),
        }
    }
}

/// One fiber span with the spectral load at its input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub length_km: f64,
    pub fiber: FiberSpec,
    pub load: SpectralLoad,
}

/// Ordered spans of a transparent lightpath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    spans: Vec<Span>,
}

impl Link {
    pub fn new(spans: Vec<Span>) -> Result<Self> {
        let first = spans.first().ok_or(Error::EmptyLink)?;
        for s in &spans {
            s.fiber.validate()?;
            if !(s.length_km > 0.0 && s.length_km.is_finite()) {
                return Err(invalid("length_km", "span lengths must be positive"));
            }
            if s.load.grid() != first.load.grid() {
                return Err(invalid("load", "all spans must share one channel grid"));
            }
        }
        Ok(Self { spans })
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn span(&self, k: usize) -> Result<&Span> {
        self.spans.get(k).ok_or(Error::SpanOutOfRange {
            index: k,
            count: self.spans.len(),
        })
    }

    pub fn span_count(&self) -> usize {
        self.spans.len()
    }

    pub fn grid(&self) -> &ChannelGrid {
        self.spans[0].load.grid()
    }

    /// Distance from the link input to the start of span `k`.
    pub fn cumulative_km(&self, k: usize) -> f64 {
        self.spans[..k].iter().map(|s| s.length_km).sum()
    }

    pub fn total_length_km(&self) -> f64 {
        self.cumulative_km(self.spans.len())
    }

    /// First `n` spans of this link.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.spans.len() {
            return Err(invalid("spans", format!("cannot keep {n} of {}", self.spans.len())));
        }
        Ok(Self {
            spans: self.spans[..n].to_vec(),
        })
    }

    /// Copy with every span's fiber passed through `f`.
    pub fn map_fiber(&self, f: impl Fn(FiberSpec) -> FiberSpec) -> Self {
        Self {
            spans: self
                .spans
                .iter()
                .map(|s| Span {
                    fiber: f(s.fiber),
                    ..s.clone()
                })
                .collect(),
        }
    }

    /// Copy with every span load scaled by `factor`.
    pub fn scale_power(&self, factor: f64) -> Self {
        Self {
            spans: self
                .spans
                .iter()
                .map(|s| Span {
                    load: s.load.scaled(factor),
                    ..s.clone()
                })
                .collect(),
        }
    }
}

/// Split `total_km` into `count` equal spans.
pub fn even_spans(total_km: f64, count: usize) -> Vec<f64> {
    vec![total_km / count as f64; count]
}

/// Default span profile of the emulated network link: 6 spans, 742 km.
pub fn default_span_profile() -> Vec<f64> {
    even_spans(742.0, 6)
}

/// Fully loaded point-to-point link: every slot of every span at the same power.
pub fn build_ptp_scenario(
    grid: &ChannelGrid,
    per_channel_power_dbm: f64,
    span_lengths_km: &[f64],
    fiber: FiberSpec,
) -> Result<Link> {
    if span_lengths_km.is_empty() {
        return Err(Error::EmptyLink);
    }
    if !per_channel_power_dbm.is_finite() {
        return Err(invalid("power_dbm", "must be finite"));
    }
    let load = SpectralLoad::uniform(grid.clone(), dbm_to_w(per_channel_power_dbm))?;
    Link::new(
        span_lengths_km
            .iter()
            .map(|&length_km| Span {
                length_km,
                fiber,
                load: load.clone(),
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::w_to_dbm;

    #[test]
    fn full_cl_grid_total_power() {
        let link = build_ptp_scenario(&ChannelGrid::c_plus_l(), 0.0, &[100.0], FiberSpec::ssmf())
            .unwrap();
        let p = link.spans()[0].load.total_power_w();
        assert!((p - 0.251).abs() < 1e-12);
        assert!((w_to_dbm(p) - 24.0).abs() < 0.01);
    }

    #[test]
    fn single_and_three_channel_totals() {
        let g1 = ChannelGrid::new(1, 0.05, 32.0).unwrap();
        let l1 = build_ptp_scenario(&g1, 0.0, &[80.0], FiberSpec::ssmf()).unwrap();
        assert!((l1.spans()[0].load.total_power_w() - 1e-3).abs() < 1e-15);

        let g3 = ChannelGrid::new(3, 0.05, 32.0).unwrap();
        let l3 = build_ptp_scenario(&g3, 3.0, &[80.0], FiberSpec::ssmf()).unwrap();
        assert!((l3.spans()[0].load.total_power_w() * 1e3 - 5.985).abs() < 1e-3);
    }

    #[test]
    fn ptp_errors() {
        let g = ChannelGrid::new(3, 0.05, 32.0).unwrap();
        assert!(matches!(
            build_ptp_scenario(&g, 0.0, &[], FiberSpec::ssmf()),
            Err(Error::EmptyLink)
        ));
        assert!(build_ptp_scenario(&g, f64::NAN, &[80.0], FiberSpec::ssmf()).is_err());
        assert!(build_ptp_scenario(&g, 0.0, &[80.0, -1.0], FiberSpec::ssmf()).is_err());
    }

    #[test]
    fn grid_is_symmetric_and_increasing() {
        let g = ChannelGrid::c_plus_l();
        let f = g.center_frequencies();
        assert!(f.windows(2).all(|w| w[1] > w[0]));
        assert!(f[125].abs() < 1e-12);
        assert!((f[0] + f[250]).abs() < 1e-12);
        let (lo, hi) = g.band_edges();
        assert!((hi - lo - 10.04).abs() < 1e-9);
    }

    #[test]
    fn grid_rejects_overlap() {
        assert!(ChannelGrid::new(5, 0.0125, 12.6).is_err());
        assert!(ChannelGrid::new(5, 0.01, 10.0).is_ok());
        assert!(ChannelGrid::new(0, 0.01, 10.0).is_err());
    }

    #[test]
    fn slot_lookup_respects_guard_bands() {
        let g = ChannelGrid::new(3, 0.05, 32.0).unwrap();
        assert_eq!(g.slot_of(0.0), Some(1));
        assert_eq!(g.slot_of(0.015), Some(1));
        assert_eq!(g.slot_of(0.02), None);
        assert_eq!(g.slot_of(-0.05), Some(0));
        assert_eq!(g.slot_of(0.2), None);
    }

    #[test]
    fn cumulative_offsets() {
        let link =
            build_ptp_scenario(&ChannelGrid::c_plus_l(), 0.0, &[80.0, 100.0, 60.0], FiberSpec::ssmf())
                .unwrap();
        assert_eq!(link.cumulative_km(0), 0.0);
        assert_eq!(link.cumulative_km(1), 80.0);
        assert_eq!(link.cumulative_km(2), 180.0);
        assert_eq!(link.total_length_km(), 240.0);
    }

    #[test]
    fn fiber_validation() {
        let mut f = FiberSpec::ssmf();
        assert!(f.validate().is_ok());
        f.alpha_db_per_km = 0.0;
        assert!(f.validate().is_err());
        let mut f = FiberSpec::ssmf();
        f.raman_slope_cr = -1.0;
        assert!(f.validate().is_err());
    }
}
