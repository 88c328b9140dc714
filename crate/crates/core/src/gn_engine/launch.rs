use serde::{Deserialize, Serialize};

use super::{NliModel, QuadratureSpec};
use crate::error::{invalid, Error, Result};
use crate::scenario::Link;
use crate::units::{db_to_lin, dbm_to_w, lin_to_db, C_NM_PER_PS, PLANCK};

/// ASE PSD of one amplifier in W/Hz, both polarizations:
/// `(G - 1) 10^(NF/10) h f`.
pub fn edfa_noise_psd(gain_db: f64, nf_db: f64, f_abs_hz: f64) -> Result<f64> {
    if !(gain_db >= 0.0) {
        return Err(invalid("gain_db", format!("{gain_db} dB is below unity gain")));
    }
    if !(f_abs_hz > 0.0) {
        return Err(invalid("f_abs_hz", "optical frequency must be positive"));
    }
    Ok((db_to_lin(gain_db) - 1.0) * db_to_lin(nf_db) * PLANCK * f_abs_hz)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaunchPoint {
    pub power_dbm: f64,
    pub sigma2_ase_w: f64,
    pub sigma2_nli_w: f64,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaunchSweep {
    pub channel_index: usize,
    pub points: Vec<LaunchPoint>,
    pub optimum_dbm: f64,
}

/// Sweep a uniform per-channel launch power over `power_grid_dbm` and return
/// the power maximizing `P / (σ²_ASE + σ²_NLI)` of `channel`.
///
/// Every span ends in an amplifier compensating its loss; the template's
/// relative channel powers are kept and rescaled so that `channel` sits at
/// the swept power.
pub fn optimal_launch(
    template: &Link,
    nf_db: f64,
    channel: usize,
    power_grid_dbm: &[f64],
    quad: &QuadratureSpec,
) -> Result<LaunchSweep> {
    if power_grid_dbm.is_empty() {
        return Err(invalid("power_grid_dbm", "empty sweep"));
    }
    let grid = template.grid();
    if channel >= grid.channel_count() {
        return Err(Error::ChannelOutOfRange {
            index: channel,
            count: grid.channel_count(),
        });
    }
    let p_ref = template.spans()[0].load.power_w(channel);
    if p_ref <= 0.0 {
        return Err(Error::Unoccupied { f_thz: grid.center(channel) });
    }
    let bandwidth_hz = grid.bandwidth_thz() * 1e12;
    let mut sigma2_ase = 0.0;
    for span in template.spans() {
        let f_abs_thz = C_NM_PER_PS / span.fiber.ref_wavelength_nm + grid.center(channel);
        let gain_db = span.fiber.alpha_db_per_km * span.length_km;
        sigma2_ase += edfa_noise_psd(gain_db, nf_db, f_abs_thz * 1e12)? * bandwidth_hz;
    }

    let mut points = Vec::with_capacity(power_grid_dbm.len());
    for &p_dbm in power_grid_dbm {
        let p = dbm_to_w(p_dbm);
        let link = template.scale_power(p / p_ref);
        let sigma2_nli = NliModel::new(&link, quad)?.channel_nli(channel)?;
        points.push(LaunchPoint {
            power_dbm: p_dbm,
            sigma2_ase_w: sigma2_ase,
            sigma2_nli_w: sigma2_nli,
            snr_db: lin_to_db(p / (sigma2_ase + sigma2_nli)),
        });
    }
    Ok(LaunchSweep {
        channel_index: channel,
        optimum_dbm: best_power(&points),
        points,
    })
}

/// First grid point with the highest SNR.
pub(crate) fn best_power(points: &[LaunchPoint]) -> f64 {
    let mut best = &points[0];
    for p in &points[1..] {
        if p.snr_db > best.snr_db {
            best = p;
        }
    }
    best.power_dbm
}
