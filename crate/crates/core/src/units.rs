//! Unit conversions shared across the crate.
//!
//! Internal units: frequency in THz, time in ps, distance in km, power in W,
//! power spectral density in W/THz.

/// Speed of light in nm/ps.
pub const C_NM_PER_PS: f64 = 299_792.458;

/// Planck constant in J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// 10·log10(e), the dB value of one neper of power.
pub const DB_PER_NEPER: f64 = 4.342_944_819_032_518;

pub fn dbm_to_w(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Power attenuation coefficient in 1/km from a loss figure in dB/km.
pub fn alpha_db_to_np(alpha_db_per_km: f64) -> f64 {
    alpha_db_per_km / DB_PER_NEPER
}
