//! Phase matching of degenerate-pump four-wave mixing, `2ω_p → ω_s + ω_i`.

use crate::constants::{omega_to_wavelength, wavelength_to_omega};
use crate::dispersion::{propagation_constant, FibreSpec};
use crate::error::{Error, Result};
use crate::numerics::roots::{bisect, linspace, scan_brackets};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PumpRegime {
    #[default]
    Pulsed,
    Cw,
}

/// Pump laser, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpPulse {
    /// m
    pub lambda_p: f64,
    /// W
    pub average_power: f64,
    /// Hz
    pub repetition_rate: f64,
    /// Intensity FWHM, s.
    pub duration_fwhm: f64,
    pub regime: PumpRegime,
}

impl PumpPulse {
    /// 708.4 nm, 80 MHz, 2 ps pulses at the given average power.
    pub fn picosecond(average_power: f64) -> Self {
        Self {
            lambda_p: 708.4e-9,
            average_power,
            repetition_rate: 80e6,
            duration_fwhm: 2e-12,
            regime: PumpRegime::Pulsed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_p > 0.0 && self.lambda_p.is_finite()) {
            return Err(Error::InvalidParameter(format!("pump wavelength must be > 0, got {}", self.lambda_p)));
        }
        if !(self.average_power >= 0.0 && self.average_power.is_finite()) {
            return Err(Error::InvalidParameter(format!("average power must be >= 0, got {}", self.average_power)));
        }
        if !(self.repetition_rate > 0.0) {
            return Err(Error::InvalidParameter(format!("repetition rate must be > 0, got {}", self.repetition_rate)));
        }
        if self.regime == PumpRegime::Pulsed && !(self.duration_fwhm > 0.0) {
            return Err(Error::InvalidParameter(format!("pulse duration must be > 0, got {}", self.duration_fwhm)));
        }
        Ok(())
    }

    /// Rectangular-pulse equivalent peak power, W.
    pub fn peak_power(&self) -> f64 {
        match self.regime {
            PumpRegime::Pulsed => self.average_power / (self.repetition_rate * self.duration_fwhm),
            PumpRegime::Cw => self.average_power,
        }
    }

    pub fn omega_p(&self) -> f64 {
        wavelength_to_omega(self.lambda_p)
    }

    pub fn with_average_power(self, average_power: f64) -> Self {
        Self { average_power, ..self }
    }

    pub fn with_wavelength(self, lambda_p: f64) -> Self {
        Self { lambda_p, ..self }
    }
}

/// Phase-matched triplet; `ω_i = 2ω_p − ω_s` holds exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatchSolution {
    /// m
    pub lambda_p: f64,
    /// m
    pub lambda_s: f64,
    /// m
    pub lambda_i: f64,
    pub omega_p: f64,
    pub omega_s: f64,
    pub omega_i: f64,
    /// rad/m
    pub delta_k_residual: f64,
    /// γ·P_peak, rad/m
    pub gamma_p: f64,
}

impl PhaseMatchSolution {
    /// `|2/λ_p − 1/λ_s − 1/λ_i| · λ_p / 2`.
    pub fn energy_residual(&self) -> f64 {
        (2.0 / self.lambda_p - 1.0 / self.lambda_s - 1.0 / self.lambda_i).abs() * self.lambda_p / 2.0
    }
}

/// `γ = 2π n2 / (λ_p A_eff)`, 1/(W·m).
pub fn nonlinear_coefficient(fibre: &FibreSpec, lambda_p: f64) -> Result<f64> {
    fibre.validate()?;
    if !(lambda_p > 0.0) {
        return Err(Error::InvalidParameter(format!("pump wavelength must be > 0, got {lambda_p}")));
    }
    Ok(2.0 * PI * fibre.n2 / (lambda_p * fibre.effective_area()))
}

/// `Δk = 2k(ω_p) − k(ω_s) − k(ω_i) − 2γP`, rad/m.
pub fn phase_mismatch(fibre: &FibreSpec, omega_p: f64, omega_s: f64, omega_i: f64, peak_power: f64) -> Result<f64> {
    let gamma = nonlinear_coefficient(fibre, omega_to_wavelength(omega_p))?;
    let kp = propagation_constant(fibre, omega_p)?;
    let ks = propagation_constant(fibre, omega_s)?;
    let ki = propagation_constant(fibre, omega_i)?;
    Ok(2.0 * kp - ks - ki - 2.0 * gamma * peak_power)
}

/// Shortest signal wavelength searched, m.
pub const SIGNAL_SEARCH_START: f64 = 500e-9;
/// Closest approach of the signal to the pump, m.
pub const SIGNAL_SEARCH_GAP: f64 = 0.5e-9;
/// Scan panels across the signal window.
pub const SIGNAL_SEARCH_PANELS: usize = 104;
/// Root tolerance on `|Δk|`, rad/m.
pub const DELTA_K_TOLERANCE: f64 = 1e-3;

/// Non-degenerate root farthest from the pump.
pub fn solve_phase_matching(fibre: &FibreSpec, pump: &PumpPulse) -> Result<PhaseMatchSolution> {
    solve_phase_matching_near(fibre, pump, None)
}

/// Non-degenerate root nearest `previous_lambda_s`, or farthest from the pump
/// when no previous solution is known.
pub fn solve_phase_matching_near(
    fibre: &FibreSpec,
    pump: &PumpPulse,
    previous_lambda_s: Option<f64>,
) -> Result<PhaseMatchSolution> {
    pump.validate()?;
    fibre.validate()?;
    let lambda_p = pump.lambda_p;
    let hi = lambda_p - SIGNAL_SEARCH_GAP;
    if hi <= SIGNAL_SEARCH_START {
        return Err(Error::NoPhaseMatch { lambda_p_nm: lambda_p * 1e9 });
    }
    let omega_p = pump.omega_p();
    let peak = pump.peak_power();
    let gamma = nonlinear_coefficient(fibre, lambda_p)?;
    let kp = propagation_constant(fibre, omega_p)?;
    let mismatch = |lambda_s: f64| -> Result<f64> {
        let ws = wavelength_to_omega(lambda_s);
        let wi = 2.0 * omega_p - ws;
        Ok(2.0 * kp - propagation_constant(fibre, ws)? - propagation_constant(fibre, wi)? - 2.0 * gamma * peak)
    };
    let brackets = scan_brackets(mismatch, &linspace(SIGNAL_SEARCH_START, hi, SIGNAL_SEARCH_PANELS))?;
    let chosen = match previous_lambda_s {
        Some(prev) => brackets.iter().min_by(|a, b| {
            let da = (0.5 * (a.lo + a.hi) - prev).abs();
            let db = (0.5 * (b.lo + b.hi) - prev).abs();
            da.total_cmp(&db)
        }),
        None => brackets.first(),
    }
    .copied()
    .ok_or(Error::NoPhaseMatch { lambda_p_nm: lambda_p * 1e9 })?;
    let root = bisect(mismatch, chosen, 0.0, DELTA_K_TOLERANCE)?;
    if root.f_x.abs() >= DELTA_K_TOLERANCE {
        return Err(Error::ModeSolver(format!(
            "phase-matching bisection stalled at |Δk| = {:.3e} rad/m",
            root.f_x.abs()
        )));
    }
    let omega_s = wavelength_to_omega(root.x);
    let omega_i = 2.0 * omega_p - omega_s;
    Ok(PhaseMatchSolution {
        lambda_p,
        lambda_s: omega_to_wavelength(omega_s),
        lambda_i: omega_to_wavelength(omega_i),
        omega_p,
        omega_s,
        omega_i,
        delta_k_residual: root.f_x,
        gamma_p: gamma * peak,
    })
}

/// One entry per pump wavelength, `None` where no root exists. Each solve is
/// seeded with the previous solution to stay on one branch.
pub fn phase_matching_curve(
    fibre: &FibreSpec,
    lambda_p_values: &[f64],
    pump: &PumpPulse,
) -> Result<Vec<Option<PhaseMatchSolution>>> {
    let mut out = Vec::with_capacity(lambda_p_values.len());
    let mut previous = None;
    for &lambda_p in lambda_p_values {
        match solve_phase_matching_near(fibre, &pump.with_wavelength(lambda_p), previous) {
            Ok(sol) => {
                previous = Some(sol.lambda_s);
                out.push(Some(sol));
            }
            Err(Error::NoPhaseMatch { .. }) => out.push(None),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
