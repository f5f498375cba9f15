//! Physical constants (CODATA 2018, SI).

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Converts a vacuum wavelength in metres to angular frequency in rad/s.
#[inline]
pub fn wavelength_to_omega(lambda: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / lambda
}

/// Converts an angular frequency in rad/s to a vacuum wavelength in metres.
#[inline]
pub fn omega_to_wavelength(omega: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / omega
}

/// Converts an angular-frequency width at centre wavelength `lambda` into a wavelength width.
///
/// Both widths are small-signal, i.e. `Δλ = λ² Δω / (2πc)`.
#[inline]
pub fn omega_width_to_wavelength_width(delta_omega: f64, lambda: f64) -> f64 {
    lambda * lambda * delta_omega / (2.0 * std::f64::consts::PI * SPEED_OF_LIGHT)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavelength_omega_round_trip() {
        let lambda = 708.4e-9;
        let back = omega_to_wavelength(wavelength_to_omega(lambda));
        assert!((back - lambda).abs() / lambda < 1e-15);
    }

    #[test]
    fn width_conversion_at_708nm() {
        // 1 THz (angular 2π·1e12) around 708.4 nm is ~1.674 nm.
        let dl = omega_width_to_wavelength_width(2.0 * std::f64::consts::PI * 1e12, 708.4e-9);
        assert!((dl - 708.4e-9 * 708.4e-9 * 1e12 / SPEED_OF_LIGHT).abs() < 1e-24);
    }
}
