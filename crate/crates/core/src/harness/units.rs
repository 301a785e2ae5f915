//! Conversions between the engineering units used in files and the SI units
//! used by the solvers.

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) / 1000.0
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w * 1000.0)
}

pub fn mhz_to_hz(mhz: f64) -> f64 {
    mhz * 1e6
}

pub fn hz_to_mhz(hz: f64) -> f64 {
    hz / 1e6
}

pub fn mbps_to_bps(mbps: f64) -> f64 {
    mbps * 1e6
}

pub fn bps_to_mbps(bps: f64) -> f64 {
    bps / 1e6
}

/// Noise power in watts over `bandwidth_hz` for a PSD in dBm/Hz plus a noise
/// figure in dB.
pub fn noise_power_watts(psd_dbm_hz: f64, noise_figure_db: f64, bandwidth_hz: f64) -> f64 {
    dbm_to_watts(psd_dbm_hz + noise_figure_db) * bandwidth_hz
}

/// Log-distance path loss `intercept + slope log10(d)` in dB.
pub fn path_loss_db(intercept_db: f64, slope_db: f64, distance_m: f64) -> f64 {
    intercept_db + slope_db * distance_m.log10()
}
