//! Pair-number prediction for a transform-limited Gaussian pump.
//!
//! Spectral offsets are taken from the phase-matched centre frequencies, the
//! mismatch is linearised,
//! `Δk = [(𝒩_p − 𝒩_s) Δω_s + (𝒩_p − 𝒩_i) Δω_i] / c`, and the pump enters
//! through `G_p(ω) = exp(−ω²σ²/2)`.

use crate::constants::{omega_width_to_wavelength_width, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::dispersion::{dispersion_sample, DispersionSample, FibreSpec};
use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate, integrate_real_line, Tolerance};
use crate::phasematch::{solve_phase_matching, PhaseMatchSolution, PumpPulse, PumpRegime};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::f64::consts::{LN_2, PI};

/// Gaussian pump spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpectrum {
    /// s
    pub sigma: f64,
    /// FWHM of `G_p`, rad/s; `2√ln4 / σ`.
    pub delta_omega_p: f64,
    /// Squared spectral amplitude, V²·s² for a mode normalised to unit area.
    pub e_p0_sq: f64,
}

/// σ such that the intensity envelope `exp(−t²/σ²)` has FWHM `duration_fwhm`.
pub fn sigma_from_duration(duration_fwhm: f64) -> f64 {
    duration_fwhm / (2.0 * LN_2.sqrt())
}

/// `2√ln4 / σ`.
pub fn pump_bandwidth(sigma: f64) -> f64 {
    2.0 * (2.0 * LN_2).sqrt() / sigma
}

/// Spectral amplitude `E_p0²` carrying peak power `peak_power` in a mode of
/// unit-normalised transverse profile: `P = ½ ε0 n c A(0)²` with
/// `A(0) = E_p0 √(2π) / σ`.
pub fn spectral_amplitude_squared(peak_power: f64, sigma: f64, n_p: f64) -> f64 {
    peak_power * sigma * sigma / (PI * VACUUM_PERMITTIVITY * n_p * SPEED_OF_LIGHT)
}

impl PulseSpectrum {
    pub fn new(pump: &PumpPulse, n_p: f64) -> Result<Self> {
        pump.validate()?;
        if pump.regime != PumpRegime::Pulsed {
            return Err(Error::InvalidParameter("pair prediction requires a pulsed pump".into()));
        }
        let sigma = sigma_from_duration(pump.duration_fwhm);
        Ok(Self {
            sigma,
            delta_omega_p: pump_bandwidth(sigma),
            e_p0_sq: spectral_amplitude_squared(pump.peak_power(), sigma, n_p),
        })
    }
}

/// `χ(3) = (4/3) ε0 c n0² n2`, m²/V².
pub fn chi3_from_n2(n2: f64, n0: f64) -> f64 {
    4.0 / 3.0 * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * n0 * n0 * n2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainParameter {
    /// m²/V²
    pub chi3: f64,
    pub e_p0_sq: f64,
    /// Gain parameter S.
    pub s: f64,
    /// Mode overlap I = 1/A_eff, 1/m².
    pub overlap: f64,
    pub si: f64,
}

/// Dispersion samples at the three centre frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletSamples {
    pub pump: DispersionSample,
    pub signal: DispersionSample,
    pub idler: DispersionSample,
}

pub fn triplet_samples(fibre: &FibreSpec, solution: &PhaseMatchSolution) -> Result<TripletSamples> {
    Ok(TripletSamples {
        pump: dispersion_sample(fibre, solution.omega_p)?,
        signal: dispersion_sample(fibre, solution.omega_s)?,
        idler: dispersion_sample(fibre, solution.omega_i)?,
    })
}

fn gain_from_samples(fibre: &FibreSpec, pump: &PumpPulse, t: &TripletSamples) -> Result<GainParameter> {
    let spectrum = PulseSpectrum::new(pump, t.pump.n_eff)?;
    let n0 = fibre.core_index(pump.lambda_p)?;
    let chi3 = chi3_from_n2(fibre.n2, n0);
    let eps_s = VACUUM_PERMITTIVITY * t.signal.n_eff.powi(2);
    let eps_i = VACUUM_PERMITTIVITY * t.idler.n_eff.powi(2);
    let s = VACUUM_PERMITTIVITY
        * chi3
        * spectrum.e_p0_sq
        / 4.0
        * (t.signal.omega * t.idler.omega / (4.0 * eps_s * eps_i)).sqrt();
    let overlap = 1.0 / fibre.effective_area();
    Ok(GainParameter { chi3, e_p0_sq: spectrum.e_p0_sq, s, overlap, si: s * overlap })
}

/// Gain parameter S and the product S·I at a phase-matched point.
pub fn gain_parameter(fibre: &FibreSpec, pump: &PumpPulse, solution: &PhaseMatchSolution) -> Result<GainParameter> {
    let t = triplet_samples(fibre, solution)?;
    gain_from_samples(fibre, pump, &t)
}

/// Everything the pair-number integral depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairInputs {
    /// s
    pub sigma: f64,
    /// rad/s
    pub delta_omega_p: f64,
    /// m
    pub length: f64,
    /// s
    pub duration_fwhm: f64,
    pub group_index_p: f64,
    pub group_index_s: f64,
    pub group_index_i: f64,
    pub si: f64,
}

impl PairInputs {
    /// `(S I L / 2)²`.
    pub fn gain_prefactor_sq(&self) -> f64 {
        (0.5 * self.si * self.length).powi(2)
    }

    fn velocity_product(&self) -> f64 {
        SPEED_OF_LIGHT * SPEED_OF_LIGHT / (self.group_index_s * self.group_index_i)
    }

    fn check_geometry(&self) -> Result<f64> {
        let dn = self.group_index_s - self.group_index_i;
        if dn.abs() <= 1e-12 * self.group_index_s.abs() {
            return Err(Error::DegenerateGeometry(dn));
        }
        if !(self.sigma > 0.0 && self.length > 0.0) {
            return Err(Error::InvalidParameter("pulse width and length must be > 0".into()));
        }
        Ok(dn)
    }
}

pub fn pair_inputs(fibre: &FibreSpec, pump: &PumpPulse, solution: &PhaseMatchSolution) -> Result<PairInputs> {
    let t = triplet_samples(fibre, solution)?;
    inputs_from_samples(fibre, pump, &t)
}

fn inputs_from_samples(fibre: &FibreSpec, pump: &PumpPulse, t: &TripletSamples) -> Result<PairInputs> {
    let gain = gain_from_samples(fibre, pump, t)?;
    let sigma = sigma_from_duration(pump.duration_fwhm);
    Ok(PairInputs {
        sigma,
        delta_omega_p: pump_bandwidth(sigma),
        length: fibre.length,
        duration_fwhm: pump.duration_fwhm,
        group_index_p: t.pump.group_index,
        group_index_s: t.signal.group_index,
        group_index_i: t.idler.group_index,
        si: gain.si,
    })
}

/// Closed-form mean pair number per pulse.
///
/// `(SIL/2)² (π/σ²)^{3/2} · 2√2 π c / (|𝒩_s − 𝒩_i| L) / (v_gs v_gi)`, the
/// exact value of the double integral under the linearised mismatch.
pub fn closed_form_pairs(inputs: &PairInputs) -> Result<f64> {
    let dn = inputs.check_geometry()?;
    let c = SPEED_OF_LIGHT;
    Ok(inputs.gain_prefactor_sq()
        * (PI / (inputs.sigma * inputs.sigma)).powf(1.5)
        * (2.0 * 2f64.sqrt() * PI * c / (dn.abs() * inputs.length))
        / inputs.velocity_product())
}

/// Relative accuracy demanded of the pair-number quadrature.
pub const PAIR_QUADRATURE_TOLERANCE: f64 = 1e-3;
/// Half-width of the inner window in units of the Gaussian standard deviation.
const INNER_HALF_WIDTH: f64 = 12.0;

fn sinc(x: f64) -> f64 {
    if x == 0.0 { 1.0 } else { x.sin() / x }
}

/// Mean pair number by 2D adaptive quadrature of the spectral integral.
///
/// In `x = σΔω_s`, `z = σ(Δω_s + Δω_i)` the integrand is
/// `sinc²(A x + B z) exp(−z²/2)`; `z` is integrated over ±12, `x` over the
/// real line.
pub fn numeric_pairs(inputs: &PairInputs) -> Result<f64> {
    let dn = inputs.check_geometry()?;
    let scale = inputs.length / (2.0 * SPEED_OF_LIGHT * inputs.sigma);
    let a = scale * (-dn);
    let b = scale * (inputs.group_index_p - inputs.group_index_i);
    let oscillations = 2.0 * INNER_HALF_WIDTH * b.abs() / PI;
    let inner_panels = ((oscillations.ceil() as usize) + 8).min(4000);
    let inner_breaks: Vec<f64> = (0..=inner_panels)
        .map(|k| -INNER_HALF_WIDTH + 2.0 * INNER_HALF_WIDTH * k as f64 / inner_panels as f64)
        .collect();
    let inner_tol = Tolerance { rel: 1e-7, abs: 1e-15, max_intervals: 20 * inner_panels + 200 };
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner = |x: f64| -> f64 {
        let f = |z: f64| {
            let s = sinc(a * x + b * z);
            s * s * (-0.5 * z * z).exp()
        };
        match integrate(f, &inner_breaks, inner_tol) {
            Ok(e) => e.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let half_width = (2.0 * PI + 3.0 * b.abs()) / a.abs();
    let outer_tol = Tolerance { rel: 0.1 * PAIR_QUADRATURE_TOLERANCE, abs: 0.0, max_intervals: 4000 };
    let outer = integrate_real_line(inner, 0.0, half_width, 16, outer_tol);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let est = outer.map_err(|e| match e {
        Error::Quadrature { achieved, .. } => Error::Quadrature { achieved, requested: PAIR_QUADRATURE_TOLERANCE },
        other => other,
    })?;
    if est.relative_error() > PAIR_QUADRATURE_TOLERANCE {
        return Err(Error::Quadrature { achieved: est.relative_error(), requested: PAIR_QUADRATURE_TOLERANCE });
    }
    let sigma2 = inputs.sigma * inputs.sigma;
    Ok(inputs.gain_prefactor_sq() * (PI / sigma2) / sigma2 * est.value / inputs.velocity_product())
}

/// Quadrature evaluation at a phase-matched point; pairs per pulse.
pub fn mean_pairs_numeric(fibre: &FibreSpec, pump: &PumpPulse, solution: &PhaseMatchSolution) -> Result<f64> {
    numeric_pairs(&pair_inputs(fibre, pump, solution)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidths {
    /// rad/s
    pub signal: f64,
    /// rad/s
    pub idler: f64,
    /// m
    pub signal_wavelength: f64,
    /// m
    pub idler_wavelength: f64,
    /// Length entering the phase-matching term, m.
    pub effective_length: f64,
}

/// Pump-to-photon walk-off length, or `None` without group-delay mismatch.
pub fn walk_off_from_group_indices(duration_fwhm: f64, n_p: f64, n_s: f64, n_i: f64) -> Option<f64> {
    let dn = (n_p - n_s).abs().max((n_p - n_i).abs());
    (dn > 0.0).then(|| duration_fwhm * SPEED_OF_LIGHT / dn)
}

pub fn walk_off_length(fibre: &FibreSpec, pump: &PumpPulse, solution: &PhaseMatchSolution) -> Result<Option<f64>> {
    let i = pair_inputs(fibre, pump, solution)?;
    Ok(walk_off_from_group_indices(pump.duration_fwhm, i.group_index_p, i.group_index_s, i.group_index_i))
}

/// FWHM of each photon for fibre length `length`, capped at the walk-off length.
pub fn bandwidths_from_inputs(inputs: &PairInputs, solution: &PhaseMatchSolution, length: f64) -> Result<Bandwidths> {
    let dn = inputs.check_geometry()?;
    if !(length > 0.0) {
        return Err(Error::InvalidParameter(format!("length must be > 0, got {length}")));
    }
    let (np, ns, ni) = (inputs.group_index_p, inputs.group_index_s, inputs.group_index_i);
    let l_eff = walk_off_from_group_indices(inputs.duration_fwhm, np, ns, ni).map_or(length, |w| length.min(w));
    let natural = 2.0 * PI * SPEED_OF_LIGHT / (dn.abs() * l_eff);
    let signal = natural + 2.0 * ((ni - np) / dn).abs() * inputs.delta_omega_p;
    let idler = natural + 2.0 * ((ns - np) / dn).abs() * inputs.delta_omega_p;
    Ok(Bandwidths {
        signal,
        idler,
        signal_wavelength: omega_width_to_wavelength_width(signal, solution.lambda_s),
        idler_wavelength: omega_width_to_wavelength_width(idler, solution.lambda_i),
        effective_length: l_eff,
    })
}

pub fn bandwidths(fibre: &FibreSpec, pump: &PumpPulse, solution: &PhaseMatchSolution, length: f64) -> Result<Bandwidths> {
    bandwidths_from_inputs(&pair_inputs(fibre, pump, solution)?, solution, length)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairPrediction {
    /// m
    pub lambda_p: f64,
    /// m
    pub lambda_s: f64,
    /// m
    pub lambda_i: f64,
    /// W
    pub average_power: f64,
    /// Hz
    pub repetition_rate: f64,
    /// m
    pub length: f64,
    pub mean_pairs_per_pulse: f64,
    /// 1/s
    pub pair_rate: f64,
    /// rad/s
    pub signal_bandwidth: f64,
    /// rad/s
    pub idler_bandwidth: f64,
    /// m
    pub signal_bandwidth_wavelength: f64,
    /// m
    pub idler_bandwidth_wavelength: f64,
    /// m; `None` without group-delay mismatch.
    pub walk_off_length: Option<f64>,
    /// m
    pub effective_length: f64,
    /// S·I·L/2
    pub gain_prefactor: f64,
    pub group_index_p: f64,
    pub group_index_s: f64,
    pub group_index_i: f64,
}

impl PairPrediction {
    /// Same source with a different pair rate, e.g. a measured one.
    pub fn with_pair_rate(self, pair_rate: f64) -> Self {
        Self { pair_rate, mean_pairs_per_pulse: pair_rate / self.repetition_rate, ..self }
    }
}

/// Closed-form pair number, bandwidths and walk-off at a phase-matched point.
pub fn mean_pairs_closed_form(fibre: &FibreSpec, pump: &PumpPulse, solution: &PhaseMatchSolution) -> Result<PairPrediction> {
    let inputs = pair_inputs(fibre, pump, solution)?;
    let mean = closed_form_pairs(&inputs)?;
    let bw = bandwidths_from_inputs(&inputs, solution, fibre.length)?;
    Ok(PairPrediction {
        lambda_p: solution.lambda_p,
        lambda_s: solution.lambda_s,
        lambda_i: solution.lambda_i,
        average_power: pump.average_power,
        repetition_rate: pump.repetition_rate,
        length: fibre.length,
        mean_pairs_per_pulse: mean,
        pair_rate: mean * pump.repetition_rate,
        signal_bandwidth: bw.signal,
        idler_bandwidth: bw.idler,
        signal_bandwidth_wavelength: bw.signal_wavelength,
        idler_bandwidth_wavelength: bw.idler_wavelength,
        walk_off_length: walk_off_from_group_indices(
            pump.duration_fwhm,
            inputs.group_index_p,
            inputs.group_index_s,
            inputs.group_index_i,
        ),
        effective_length: bw.effective_length,
        gain_prefactor: 0.5 * inputs.si * inputs.length,
        group_index_p: inputs.group_index_p,
        group_index_s: inputs.group_index_s,
        group_index_i: inputs.group_index_i,
    })
}

/// Solves phase matching for `pump` and returns the closed-form prediction.
pub fn predict(fibre: &FibreSpec, pump: &PumpPulse) -> Result<(PhaseMatchSolution, PairPrediction)> {
    let solution = solve_phase_matching(fibre, pump)?;
    let prediction = mean_pairs_closed_form(fibre, pump, &solution)?;
    Ok((solution, prediction))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiPairProjection {
    /// Generated pairs at the new power, 1/s.
    pub pair_rate: f64,
    /// Filter width over signal photon width, at most 1.
    pub spectral_fraction: f64,
    /// Detected, filtered pairs, 1/s.
    pub filtered_pair_rate: f64,
    pub detected_pairs_per_pulse: f64,
    /// 1/s
    pub four_photon_rate: f64,
    /// Set when the filter is at least as wide as the photon.
    pub filter_wider_than_photon: bool,
}

/// Detected pair and four-photon rates behind narrowband filters at a new pump power.
///
/// `efficiencies` are the lumped per-arm detection probabilities (signal, idler).
pub fn multi_pair_projection(
    prediction: &PairPrediction,
    filter_bandwidth: f64,
    filter_transmission: f64,
    efficiencies: (f64, f64),
    pump_power_new: f64,
) -> Result<MultiPairProjection> {
    let in_unit = |v: f64| (0.0..=1.0).contains(&v);
    if !(filter_bandwidth > 0.0) || !in_unit(filter_transmission) || !in_unit(efficiencies.0) || !in_unit(efficiencies.1) {
        return Err(Error::InvalidParameter(
            "filter width must be > 0; transmission and efficiencies must lie in [0, 1]".into(),
        ));
    }
    if !(pump_power_new >= 0.0 && prediction.average_power > 0.0) {
        return Err(Error::InvalidParameter("pump powers must be positive".into()));
    }
    let pair_rate = prediction.pair_rate * (pump_power_new / prediction.average_power).powi(2);
    let ratio = filter_bandwidth / prediction.signal_bandwidth_wavelength;
    let wider = ratio >= 1.0;
    let spectral_fraction = ratio.min(1.0);
    let filtered = pair_rate * spectral_fraction * filter_transmission.powi(2) * efficiencies.0 * efficiencies.1;
    let per_pulse = filtered / prediction.repetition_rate;
    Ok(MultiPairProjection {
        pair_rate,
        spectral_fraction,
        filtered_pair_rate: filtered,
        detected_pairs_per_pulse: per_pulse,
        four_photon_rate: prediction.repetition_rate * per_pulse * per_pulse,
        filter_wider_than_photon: wider,
    })
}
