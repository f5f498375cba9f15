//! Refractive index, guided-mode effective index and frequency derivatives of
//! the propagation constant for a step-index model of the fibre.
//!
//! The microstructured cladding is replaced by a homogeneous medium of
//! effective index `cladding_index`; the core is fused silica. Wavelengths are
//! vacuum wavelengths in metres, frequencies are angular in rad/s.

use crate::constants::{omega_to_wavelength, wavelength_to_omega, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::numerics::roots::{bisect, linspace, scan_brackets, Bracket};
use puruspe::bessel::{besselik, besseljy};
use serde::{Deserialize, Serialize};

/// Three-term Sellmeier fit `n² = 1 + Σ Bᵢλ²/(λ² − Cᵢ²)`, λ and Cᵢ in µm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SellmeierModel {
    pub strengths: [f64; 3],
    pub resonances_um: [f64; 3],
    /// Open interval of validity, µm.
    pub valid_um: (f64, f64),
}

impl SellmeierModel {
    /// Room-temperature fused silica (Malitson, 1965).
    pub fn fused_silica() -> Self {
        Self {
            strengths: [0.696_166_3, 0.407_942_6, 0.897_479_4],
            resonances_um: [0.068_404_3, 0.116_241_4, 9.896_161],
            valid_um: (0.21, 3.71),
        }
    }
}

impl Default for SellmeierModel {
    fn default() -> Self {
        Self::fused_silica()
    }
}

/// Bulk index of the core material at vacuum wavelength `lambda` (m).
pub fn sellmeier_index(model: &SellmeierModel, lambda: f64) -> Result<f64> {
    let um = lambda * 1e6;
    let (lo, hi) = model.valid_um;
    if !(um > lo && um < hi) {
        return Err(Error::Domain {
            quantity: "wavelength (um)",
            value: um,
            range: format!("({lo}, {hi})"),
        });
    }
    let l2 = um * um;
    let n2 = 1.0
        + model
            .strengths
            .iter()
            .zip(model.resonances_um.iter())
            .map(|(b, c)| b * l2 / (l2 - c * c))
            .sum::<f64>();
    Ok(n2.sqrt())
}

/// Which characteristic equation supplies the effective index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeModel {
    /// Exact HE11 eigenvalue equation of a step-index guide.
    #[default]
    VectorHe11,
    /// Weak-guidance LP01 equation.
    ScalarLp01,
    /// No waveguide contribution; `n_eff` is the material index.
    Bulk,
}

/// Step-index fibre description, SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FibreSpec {
    /// m
    pub core_diameter: f64,
    pub cladding_index: f64,
    /// Nonlinear refractive index, m²/W.
    pub n2: f64,
    /// m
    pub length: f64,
    /// m²; `None` means the geometric core area.
    pub effective_area_override: Option<f64>,
    pub mode_model: ModeModel,
    pub material: SellmeierModel,
}

impl FibreSpec {
    /// 2 µm silica core in an air-filled honeycomb of effective index 1.05, 20 cm long.
    pub fn fitted_pcf() -> Self {
        Self {
            core_diameter: 2.0e-6,
            cladding_index: 1.05,
            n2: 2.0e-20,
            length: 0.2,
            effective_area_override: None,
            mode_model: ModeModel::VectorHe11,
            material: SellmeierModel::fused_silica(),
        }
    }

    /// Same core suspended in air.
    pub fn air_clad_strand() -> Self {
        Self { cladding_index: 1.0, ..Self::fitted_pcf() }
    }

    pub fn with_mode_model(self, mode_model: ModeModel) -> Self {
        Self { mode_model, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.core_diameter > 0.0 && self.core_diameter.is_finite()) {
            return Err(Error::InvalidParameter(format!("core diameter must be > 0, got {}", self.core_diameter)));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidParameter(format!("fibre length must be > 0, got {}", self.length)));
        }
        if !(self.cladding_index >= 1.0) {
            return Err(Error::InvalidParameter(format!("cladding index must be >= 1, got {}", self.cladding_index)));
        }
        if !(self.n2 >= 0.0) {
            return Err(Error::InvalidParameter(format!("n2 must be >= 0, got {}", self.n2)));
        }
        if let Some(a) = self.effective_area_override {
            if !(a > 0.0) {
                return Err(Error::InvalidParameter(format!("effective area must be > 0, got {a}")));
            }
        }
        Ok(())
    }

    pub fn core_index(&self, lambda: f64) -> Result<f64> {
        sellmeier_index(&self.material, lambda)
    }

    /// Effective mode area, m².
    pub fn effective_area(&self) -> f64 {
        self.effective_area_override.unwrap_or_else(|| {
            let r = 0.5 * self.core_diameter;
            std::f64::consts::PI * r * r
        })
    }
}

/// Panels used to bracket the fundamental mode between the two indices.
pub const MODE_SCAN_PANELS: usize = 512;
const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;
const J1_FIRST_ZERO: f64 = 3.831_705_970_207_512;
/// Distance kept from the guidance bounds when scanning, in index units.
pub const MODE_SCAN_MARGIN: f64 = 1e-9;

struct ModeGeometry {
    n_core: f64,
    n_clad: f64,
    a_k0: f64,
}

impl ModeGeometry {
    fn new(fibre: &FibreSpec, lambda: f64) -> Result<Self> {
        fibre.validate()?;
        let n_core = fibre.core_index(lambda)?;
        if fibre.cladding_index >= n_core {
            return Err(Error::InvalidParameter(format!(
                "cladding index {} is not below the core index {n_core:.6} at {:.1} nm",
                fibre.cladding_index,
                lambda * 1e9
            )));
        }
        Ok(Self {
            n_core,
            n_clad: fibre.cladding_index,
            a_k0: 0.5 * fibre.core_diameter * 2.0 * std::f64::consts::PI / lambda,
        })
    }

    fn uw(&self, n: f64) -> (f64, f64) {
        let u = self.a_k0 * (self.n_core * self.n_core - n * n).max(0.0).sqrt();
        let w = self.a_k0 * (n * n - self.n_clad * self.n_clad).max(0.0).sqrt();
        (u, w)
    }

    /// `u J1(u)/J0(u) − w K1(w)/K0(w)`.
    fn scalar(&self, n: f64) -> f64 {
        let (u, w) = self.uw(n);
        let (j1, _, dj1, _) = besseljy(1.0, u);
        let (_, k1, _, dk1) = besselik(1.0, w);
        let j0 = dj1 + j1 / u;
        let k0 = -dk1 - k1 / w;
        u * j1 / j0 - w * k1 / k0
    }

    fn vector(&self, n: f64) -> f64 {
        let (u, w) = self.uw(n);
        let (j1, _, dj1, _) = besseljy(1.0, u);
        let (_, k1, _, dk1) = besselik(1.0, w);
        let jt = dj1 / (u * j1);
        let kt = dk1 / (w * k1);
        let ratio = (self.n_clad / self.n_core).powi(2);
        let s = 1.0 / (u * u) + 1.0 / (w * w);
        (jt + kt) * (jt + ratio * kt) - (n / self.n_core).powi(2) * s * s
    }

    /// Scans `u` upward from the core side and returns the first sign change
    /// that is a root rather than a pole. The fundamental mode has
    /// `u < u_cap`, the first pole of the characteristic function, so the
    /// scan stops there.
    fn fundamental<F: Fn(&Self, f64) -> f64>(&self, f: F, u_cap: f64, lambda: f64) -> Result<f64> {
        let hi = self.n_core - MODE_SCAN_MARGIN;
        let n_of = |u: f64| (self.n_core * self.n_core - (u / self.a_k0).powi(2)).sqrt();
        let lo = (self.n_clad + MODE_SCAN_MARGIN).max(n_of(u_cap * (1.0 - 1e-12)));
        let u_of = |n: f64| self.a_k0 * (self.n_core * self.n_core - n * n).sqrt();
        let grid: Vec<f64> = linspace(u_of(hi), u_of(lo), MODE_SCAN_PANELS)
            .into_iter()
            .map(n_of)
            .collect();
        let mut prev = (hi, f(self, hi));
        for &n in &grid[1..] {
            let n = n.clamp(lo, hi);
            let fx = f(self, n);
            if prev.1.is_finite() && fx.is_finite() && prev.1.signum() != fx.signum() {
                let br = Bracket { lo: n, hi: prev.0, f_lo: fx, f_hi: prev.1 };
                let root = bisect(|x| Ok(f(self, x)), br, 0.0, 0.0)?;
                if root.f_x.abs() < br.f_lo.abs().min(br.f_hi.abs()) {
                    return Ok(root.x);
                }
            }
            prev = (n, fx);
        }
        Err(Error::ModeSolver(format!(
            "no fundamental-mode root between n_clad = {} and n_core = {:.6} at {:.2} nm (V = {:.3})",
            self.n_clad,
            self.n_core,
            lambda * 1e9,
            self.a_k0 * (self.n_core.powi(2) - self.n_clad.powi(2)).sqrt()
        )))
    }
}

/// LP01 effective index from the weak-guidance characteristic equation.
pub fn lp01_effective_index(fibre: &FibreSpec, lambda: f64) -> Result<f64> {
    let g = ModeGeometry::new(fibre, lambda)?;
    g.fundamental(ModeGeometry::scalar, J0_FIRST_ZERO, lambda)
}

/// HE11 effective index from the full step-index eigenvalue equation.
pub fn he11_effective_index(fibre: &FibreSpec, lambda: f64) -> Result<f64> {
    let g = ModeGeometry::new(fibre, lambda)?;
    g.fundamental(ModeGeometry::vector, J1_FIRST_ZERO, lambda)
}

/// Effective index under the fibre's configured mode model.
pub fn effective_index(fibre: &FibreSpec, lambda: f64) -> Result<f64> {
    match fibre.mode_model {
        ModeModel::VectorHe11 => he11_effective_index(fibre, lambda),
        ModeModel::ScalarLp01 => lp01_effective_index(fibre, lambda),
        ModeModel::Bulk => fibre.core_index(lambda),
    }
}

/// `k(ω) = n_eff ω / c`, rad/m.
pub fn propagation_constant(fibre: &FibreSpec, omega: f64) -> Result<f64> {
    Ok(effective_index(fibre, omega_to_wavelength(omega))? * omega / SPEED_OF_LIGHT)
}

/// Default relative finite-difference step, as a fraction of ω.
pub const DERIVATIVE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionSample {
    /// rad/s
    pub omega: f64,
    pub n_eff: f64,
    /// rad/m
    pub k: f64,
    pub group_index: f64,
    /// m/s
    pub group_velocity: f64,
    /// d²k/dω², s²/m
    pub gvd: f64,
}

impl DispersionSample {
    /// m
    pub fn wavelength(&self) -> f64 {
        omega_to_wavelength(self.omega)
    }

    /// Inverse group velocity, s/m.
    pub fn group_delay(&self) -> f64 {
        self.group_index / SPEED_OF_LIGHT
    }
}

/// Central differences with step `rel_step · ω` on `n_eff(ω)` and `k(ω)`.
pub fn dispersion_sample_with_step(fibre: &FibreSpec, omega: f64, rel_step: f64) -> Result<DispersionSample> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter(format!("angular frequency must be > 0, got {omega}")));
    }
    if !(rel_step > 0.0 && rel_step < 0.1) {
        return Err(Error::InvalidParameter(format!("relative step must lie in (0, 0.1), got {rel_step}")));
    }
    let h = rel_step * omega;
    let n_at = |w: f64| effective_index(fibre, omega_to_wavelength(w));
    let n0 = n_at(omega)?;
    let n_plus = n_at(omega + h)?;
    let n_minus = n_at(omega - h)?;
    let dn = (n_plus - n_minus) / (2.0 * h);
    let group_index = n0 + omega * dn;
    let c = SPEED_OF_LIGHT;
    let k0 = n0 * omega / c;
    let kp = n_plus * (omega + h) / c;
    let km = n_minus * (omega - h) / c;
    Ok(DispersionSample {
        omega,
        n_eff: n0,
        k: k0,
        group_index,
        group_velocity: c / group_index,
        gvd: (kp - 2.0 * k0 + km) / (h * h),
    })
}

pub fn dispersion_sample(fibre: &FibreSpec, omega: f64) -> Result<DispersionSample> {
    dispersion_sample_with_step(fibre, omega, DERIVATIVE_STEP)
}

/// Group index and GVD at steps `h`, `h/2`, `h/4` with the observed
/// convergence order and Richardson-extrapolated values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RichardsonCheck {
    pub group_index: [f64; 3],
    pub gvd: [f64; 3],
    pub group_index_order: f64,
    pub gvd_order: f64,
    pub group_index_extrapolated: f64,
    pub gvd_extrapolated: f64,
}

pub fn richardson_check(fibre: &FibreSpec, omega: f64, rel_step: f64) -> Result<RichardsonCheck> {
    let s: Vec<DispersionSample> = [1.0, 0.5, 0.25]
        .iter()
        .map(|f| dispersion_sample_with_step(fibre, omega, rel_step * f))
        .collect::<Result<_>>()?;
    let order = |a: f64, b: f64, c: f64| ((a - b) / (b - c)).abs().log2();
    let g = [s[0].group_index, s[1].group_index, s[2].group_index];
    let d = [s[0].gvd, s[1].gvd, s[2].gvd];
    Ok(RichardsonCheck {
        group_index: g,
        gvd: d,
        group_index_order: order(g[0], g[1], g[2]),
        gvd_order: order(d[0], d[1], d[2]),
        group_index_extrapolated: (4.0 * g[2] - g[1]) / 3.0,
        gvd_extrapolated: (4.0 * d[2] - d[1]) / 3.0,
    })
}

/// Zero of the GVD inside the default 500–1100 nm window.
pub fn zero_dispersion_wavelength(fibre: &FibreSpec) -> Result<f64> {
    zero_dispersion_wavelength_within(fibre, 500e-9, 1100e-9)
}

/// Shortest-wavelength GVD zero in `[lo, hi]` (m), by a 10 nm-or-finer scan
/// and bisection to 1 pm.
pub fn zero_dispersion_wavelength_within(fibre: &FibreSpec, lo: f64, hi: f64) -> Result<f64> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!("invalid ZDW window [{lo}, {hi}]")));
    }
    let panels = (((hi - lo) / 10e-9).ceil() as usize).max(4);
    let gvd = |lambda: f64| Ok(dispersion_sample(fibre, wavelength_to_omega(lambda))?.gvd);
    let brackets = scan_brackets(gvd, &linspace(lo, hi, panels))?;
    let first: Bracket = *brackets.first().ok_or(Error::NoZeroDispersion {
        lo_nm: lo * 1e9,
        hi_nm: hi * 1e9,
    })?;
    Ok(bisect(gvd, first, 1e-12, 0.0)?.x)
}
