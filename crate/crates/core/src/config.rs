//! Run configuration: flat TOML, unit-suffixed keys, unknown keys rejected.
//!
//! Values are converted to SI once, by the accessors on [`RunConfig`].

use crate::dispersion::{FibreSpec, ModeModel, SellmeierModel};
use crate::error::{Error, Result};
use crate::montecarlo::{ExperimentTruth, PairStatistics};
use crate::phasematch::{PumpPulse, PumpRegime};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Configuration matching the bundled measurement.
pub const BUNDLED_CONFIG: &str = include_str!("../data/reference.cfg");

/// Random generator used by the simulator; part of the reproducibility contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RngAlgorithm {
    /// ChaCha with 8 rounds, one 64-bit stream per pulse block.
    #[default]
    Chacha8,
}

fn default_satellites() -> usize {
    4
}
fn default_histogram_peaks() -> usize {
    8
}
fn default_dispersion_start() -> f64 {
    500.0
}
fn default_dispersion_stop() -> f64 {
    1100.0
}
fn default_dispersion_points() -> usize {
    121
}
fn default_pm_start() -> f64 {
    700.0
}
fn default_pm_stop() -> f64 {
    720.0
}
fn default_pm_points() -> usize {
    41
}
fn default_projection_power() -> f64 {
    6.0
}
fn default_filter_bandwidth() -> f64 {
    0.2
}
fn default_filter_transmission() -> f64 {
    0.4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub core_diameter_um: f64,
    pub cladding_index: f64,
    pub n2_m2_per_w: f64,
    pub length_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective_area_um2: Option<f64>,
    #[serde(default)]
    pub mode_model: ModeModel,

    pub pump_wavelength_nm: f64,
    pub average_power_uw: f64,
    pub repetition_rate_hz: f64,
    pub pulse_fwhm_ps: f64,
    #[serde(default)]
    pub pump_regime: PumpRegime,

    pub detector_eff_s: f64,
    pub detector_eff_i: f64,
    pub coupling_s: f64,
    pub coupling_i: f64,
    pub dead_time_ns: f64,
    pub bin_width_ps: f64,
    pub jitter_ps: f64,
    pub dark_rate_s_hz: f64,
    pub dark_rate_i_hz: f64,
    /// Detected pulse-synchronous background per µW of pump.
    pub background_s_hz_per_uw: f64,
    pub background_i_hz_per_uw: f64,

    /// Correct singles for dead time before analysis.
    #[serde(default)]
    pub dead_time_correction: bool,
    #[serde(default = "default_satellites")]
    pub accidental_peaks: usize,
    #[serde(default = "default_histogram_peaks")]
    pub histogram_peaks: usize,

    pub duration_s: f64,
    pub seed: u64,
    #[serde(default)]
    pub rng_algorithm: RngAlgorithm,
    #[serde(default)]
    pub pair_statistics: PairStatistics,
    /// Overrides the model pair rate in `simulate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_rate_hz: Option<f64>,

    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep_powers_uw: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep_lengths_m: Vec<f64>,

    #[serde(default = "default_dispersion_start")]
    pub dispersion_start_nm: f64,
    #[serde(default = "default_dispersion_stop")]
    pub dispersion_stop_nm: f64,
    #[serde(default = "default_dispersion_points")]
    pub dispersion_points: usize,
    #[serde(default = "default_pm_start")]
    pub phasematch_start_nm: f64,
    #[serde(default = "default_pm_stop")]
    pub phasematch_stop_nm: f64,
    #[serde(default = "default_pm_points")]
    pub phasematch_points: usize,

    #[serde(default = "default_projection_power")]
    pub projection_power_mw: f64,
    #[serde(default = "default_filter_bandwidth")]
    pub filter_bandwidth_nm: f64,
    #[serde(default = "default_filter_transmission")]
    pub filter_transmission: f64,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn bundled() -> Self {
        Self::from_toml_str(BUNDLED_CONFIG).expect("bundled config is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(Error::Config(format!("`{key}` {why}")));
        let positive = [
            ("core_diameter_um", self.core_diameter_um),
            ("length_m", self.length_m),
            ("pump_wavelength_nm", self.pump_wavelength_nm),
            ("repetition_rate_hz", self.repetition_rate_hz),
            ("pulse_fwhm_ps", self.pulse_fwhm_ps),
            ("bin_width_ps", self.bin_width_ps),
            ("duration_s", self.duration_s),
            ("projection_power_mw", self.projection_power_mw),
            ("filter_bandwidth_nm", self.filter_bandwidth_nm),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(k, "must be > 0");
            }
        }
        let nonneg = [
            ("n2_m2_per_w", self.n2_m2_per_w),
            ("average_power_uw", self.average_power_uw),
            ("dead_time_ns", self.dead_time_ns),
            ("jitter_ps", self.jitter_ps),
            ("dark_rate_s_hz", self.dark_rate_s_hz),
            ("dark_rate_i_hz", self.dark_rate_i_hz),
            ("background_s_hz_per_uw", self.background_s_hz_per_uw),
            ("background_i_hz_per_uw", self.background_i_hz_per_uw),
        ];
        for (k, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(k, "must be >= 0");
            }
        }
        let fractions = [
            ("detector_eff_s", self.detector_eff_s),
            ("detector_eff_i", self.detector_eff_i),
            ("coupling_s", self.coupling_s),
            ("coupling_i", self.coupling_i),
            ("filter_transmission", self.filter_transmission),
        ];
        for (k, v) in fractions {
            if !(0.0..=1.0).contains(&v) {
                return bad(k, "must lie in [0, 1]");
            }
        }
        if !(self.cladding_index >= 1.0) {
            return bad("cladding_index", "must be >= 1");
        }
        if self.effective_area_um2.is_some_and(|a| !(a > 0.0)) {
            return bad("effective_area_um2", "must be > 0");
        }
        if self.pair_rate_hz.is_some_and(|r| !(r >= 0.0)) {
            return bad("pair_rate_hz", "must be >= 0");
        }
        if self.sweep_powers_uw.iter().any(|p| !(*p > 0.0)) {
            return bad("sweep_powers_uw", "entries must be > 0");
        }
        if self.sweep_lengths_m.iter().any(|l| !(*l > 0.0)) {
            return bad("sweep_lengths_m", "entries must be > 0");
        }
        if !(self.dispersion_start_nm > 0.0 && self.dispersion_start_nm < self.dispersion_stop_nm) || self.dispersion_points < 2 {
            return bad("dispersion_start_nm", "must be > 0 and below `dispersion_stop_nm`, with at least 2 points");
        }
        if !(self.phasematch_start_nm > 0.0 && self.phasematch_start_nm <= self.phasematch_stop_nm) || self.phasematch_points < 1 {
            return bad("phasematch_start_nm", "must be > 0 and not above `phasematch_stop_nm`, with at least 1 point");
        }
        if self.accidental_peaks == 0 || self.histogram_peaks == 0 {
            return bad("accidental_peaks", "and `histogram_peaks` must be >= 1");
        }
        if self.bin_width_ps * 1e-12 >= 1.0 / self.repetition_rate_hz {
            return bad("bin_width_ps", "must be shorter than the pulse period");
        }
        Ok(())
    }

    pub fn fibre(&self) -> FibreSpec {
        FibreSpec {
            core_diameter: self.core_diameter_um * 1e-6,
            cladding_index: self.cladding_index,
            n2: self.n2_m2_per_w,
            length: self.length_m,
            effective_area_override: self.effective_area_um2.map(|a| a * 1e-12),
            mode_model: self.mode_model,
            material: SellmeierModel::fused_silica(),
        }
    }

    pub fn pump(&self) -> PumpPulse {
        PumpPulse {
            lambda_p: self.pump_wavelength_nm * 1e-9,
            average_power: self.average_power_uw * 1e-6,
            repetition_rate: self.repetition_rate_hz,
            duration_fwhm: self.pulse_fwhm_ps * 1e-12,
            regime: self.pump_regime,
        }
    }

    /// Detector efficiency times coupling, per arm.
    pub fn lumped_efficiencies(&self) -> (f64, f64) {
        (self.detector_eff_s * self.coupling_s, self.detector_eff_i * self.coupling_i)
    }

    /// Simulator truth at `power` (W) with the given pair rate (1/s).
    pub fn truth(&self, pair_rate: f64, power: f64) -> ExperimentTruth {
        let (eff_s, eff_i) = self.lumped_efficiencies();
        let p_uw = power * 1e6;
        ExperimentTruth {
            pairs_per_pulse_mean: pair_rate / self.repetition_rate_hz,
            pair_statistics: self.pair_statistics,
            background_rate_s: self.background_s_hz_per_uw * p_uw,
            background_rate_i: self.background_i_hz_per_uw * p_uw,
            dark_rate_s: self.dark_rate_s_hz,
            dark_rate_i: self.dark_rate_i_hz,
            eff_s,
            eff_i,
            dead_time: self.dead_time_ns * 1e-9,
            repetition_rate: self.repetition_rate_hz,
            bin_width: self.bin_width_ps * 1e-12,
            jitter: self.jitter_ps * 1e-12,
            histogram_peaks: self.histogram_peaks,
            accidental_peaks: self.accidental_peaks,
            duration: self.duration_s,
            seed: self.seed,
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    RunConfig::from_toml_str(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}
