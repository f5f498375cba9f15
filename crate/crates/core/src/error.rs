use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the toolkit.
///
/// Variants split into validation problems (bad inputs, bad config, bad data)
/// and numerical failures (no root, no convergence). The CLI maps them to
/// exit codes 2 and 3 respectively.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{quantity} = {value} outside valid range {range}")]
    Domain {
        quantity: &'static str,
        value: f64,
        range: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mode solver found no guided root: {0}")]
    ModeSolver(String),

    #[error("no zero-dispersion wavelength in [{lo_nm:.1}, {hi_nm:.1}] nm")]
    NoZeroDispersion { lo_nm: f64, hi_nm: f64 },

    #[error("no phase-matched solution for pump at {lambda_p_nm:.2} nm")]
    NoPhaseMatch { lambda_p_nm: f64 },

    #[error("degenerate geometry: signal and idler group indices are equal ({0:e})")]
    DegenerateGeometry(f64),

    #[error("quadrature did not converge: achieved relative error {achieved:.3e}, requested {requested:.1e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("detector saturated: rate × dead time = {0:.3} ≥ 1")]
    Saturation(f64),

    #[error("no excess coincidences: C_raw = {c_raw} Hz ≤ C_b = {cb} Hz")]
    NoExcessCoincidences { c_raw: f64, cb: f64 },

    #[error("background-subtracted {channel} singles are not positive ({value} Hz)")]
    NonPositiveNetSingles { channel: &'static str, value: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the error stems from the numerics rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ModeSolver(_)
                | Error::NoZeroDispersion { .. }
                | Error::NoPhaseMatch { .. }
                | Error::DegenerateGeometry(_)
                | Error::Quadrature { .. }
                | Error::Saturation(_)
                | Error::NoExcessCoincidences { .. }
                | Error::NonPositiveNetSingles { .. }
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::ModeSolver(_) => "mode_solver",
            Error::NoZeroDispersion { .. } => "no_zero_dispersion",
            Error::NoPhaseMatch { .. } => "no_phase_match",
            Error::DegenerateGeometry(_) => "degenerate_geometry",
            Error::Quadrature { .. } => "quadrature",
            Error::Saturation(_) => "saturation",
            Error::NoExcessCoincidences { .. } => "no_excess_coincidences",
            Error::NonPositiveNetSingles { .. } => "non_positive_net_singles",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Config(_) => "config",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }
}
