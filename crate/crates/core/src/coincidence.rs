//! Pair-rate extraction from singles and coincidence counting rates.
//!
//! With lumped efficiencies `μη` per arm and total backgrounds `B`,
//! `N_raw = μη r + B` per arm and `C_raw = μ_sη_s μ_iη_i r + C_b`, so
//! `r = (N_s − B_s)(N_i − B_i) / (C_raw − C_b)` independently of the losses.

use crate::error::{Error, Result};
use crate::numerics::fit::polyfit;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Counting rates at one pump power, all in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    /// W
    pub average_power: f64,
    pub ns_raw: f64,
    pub ni_raw: f64,
    pub c_raw: f64,
    pub cb: f64,
    pub ns_cw: f64,
    pub ni_cw: f64,
    pub dark_s: f64,
    pub dark_i: f64,
}

/// Slack allowed when a pulsed singles rate sits below its CW counterpart, Hz.
pub const CW_EXCESS_TOLERANCE: f64 = 1.0;

impl CountRecord {
    pub fn validate(&self) -> Result<()> {
        let rates = [self.ns_raw, self.ni_raw, self.c_raw, self.cb, self.ns_cw, self.ni_cw, self.dark_s, self.dark_i];
        if !(self.average_power >= 0.0) || rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidParameter("power and counting rates must be finite and >= 0".into()));
        }
        if self.ns_raw < self.ns_cw - CW_EXCESS_TOLERANCE || self.ni_raw < self.ni_cw - CW_EXCESS_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "pulsed singles below CW singles at {:.0} uW",
                self.average_power * 1e6
            )));
        }
        Ok(())
    }

    /// Copy with singles corrected for detector dead time.
    pub fn deadtime_corrected(&self, dead_time: f64) -> Result<Self> {
        let c = |r: f64| deadtime_correct(r, dead_time);
        Ok(Self {
            ns_raw: c(self.ns_raw)?,
            ni_raw: c(self.ni_raw)?,
            ns_cw: c(self.ns_cw)?,
            ni_cw: c(self.ni_cw)?,
            ..*self
        })
    }
}

/// Non-paralysable dead-time correction `R / (1 − R τ)`.
pub fn deadtime_correct(rate: f64, dead_time: f64) -> Result<f64> {
    if !(rate >= 0.0 && dead_time >= 0.0) {
        return Err(Error::InvalidParameter(format!("rate {rate} and dead time {dead_time} must be >= 0")));
    }
    let x = rate * dead_time;
    if x >= 1.0 {
        return Err(Error::Saturation(x));
    }
    Ok(rate / (1.0 - x))
}

/// Mean pair number above which dropped multi-pair terms are no longer small.
pub const MULTIPAIR_WARNING_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    /// W
    pub average_power: f64,
    /// Hz
    pub pair_rate: f64,
    pub pairs_per_pulse: f64,
    /// μ_sη_s
    pub eff_signal: f64,
    /// μ_iη_i
    pub eff_idler: f64,
    /// `(C_raw − C_b)/C_b`; `None` when `C_b = 0`.
    pub contrast: Option<f64>,
    pub multipair_warning: bool,
}

/// Pair rate, lumped efficiencies and contrast for one record, with the CW
/// singles as total backgrounds.
pub fn pair_rate(record: &CountRecord, repetition_rate: f64) -> Result<AnalysisResult> {
    record.validate()?;
    if !(repetition_rate > 0.0) {
        return Err(Error::InvalidParameter(format!("repetition rate must be > 0, got {repetition_rate}")));
    }
    let excess = record.c_raw - record.cb;
    if !(excess > 0.0) {
        return Err(Error::NoExcessCoincidences { c_raw: record.c_raw, cb: record.cb });
    }
    let net_s = record.ns_raw - record.ns_cw;
    let net_i = record.ni_raw - record.ni_cw;
    if !(net_s > 0.0) {
        return Err(Error::NonPositiveNetSingles { channel: "signal", value: net_s });
    }
    if !(net_i > 0.0) {
        return Err(Error::NonPositiveNetSingles { channel: "idler", value: net_i });
    }
    let r = net_s * net_i / excess;
    let n = r / repetition_rate;
    Ok(AnalysisResult {
        average_power: record.average_power,
        pair_rate: r,
        pairs_per_pulse: n,
        eff_signal: excess / net_i,
        eff_idler: excess / net_s,
        contrast: (record.cb > 0.0).then(|| excess / record.cb),
        multipair_warning: n > MULTIPAIR_WARNING_THRESHOLD,
    })
}

/// Poisson standard error of the pair rate for rates accumulated over
/// `counting_time`, with CW backgrounds measured for the same time and `C_b`
/// averaged over `satellite_peaks` peaks. Covariances are neglected.
pub fn pair_rate_standard_error(record: &CountRecord, counting_time: f64, satellite_peaks: usize) -> Result<f64> {
    if !(counting_time > 0.0) || satellite_peaks == 0 {
        return Err(Error::InvalidParameter("counting time and satellite count must be positive".into()));
    }
    let t = counting_time;
    let s = record.ns_raw - record.ns_cw;
    let i = record.ni_raw - record.ni_cw;
    let c = record.c_raw - record.cb;
    if !(s > 0.0 && i > 0.0 && c > 0.0) {
        return Err(Error::NoExcessCoincidences { c_raw: record.c_raw, cb: record.cb });
    }
    let var_s = (record.ns_raw + record.ns_cw) / t;
    let var_i = (record.ni_raw + record.ni_cw) / t;
    let var_c = record.c_raw / t + record.cb / (t * satellite_peaks as f64);
    let r = s * i / c;
    Ok(r * (var_s / (s * s) + var_i / (i * i) + var_c / (c * c)).sqrt())
}

/// Linear background model for one detector, `B(P) = dark + offset + slope·P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelBackground {
    /// Hz/W
    pub slope: f64,
    /// Hz, dark-subtracted.
    pub offset: f64,
    /// Hz
    pub dark: f64,
    /// Hz
    pub residual_norm: f64,
    /// Hz/W², from a separate quadratic fit.
    pub quadratic_coefficient: f64,
    /// `None` with fewer than four points.
    pub quadratic_standard_error: Option<f64>,
}

impl ChannelBackground {
    /// Total background including darks, Hz.
    pub fn total_at(&self, power: f64) -> f64 {
        self.dark + self.offset + self.slope * power
    }

    /// Quadratic coefficient in units of its standard error.
    pub fn quadratic_significance(&self) -> Option<f64> {
        self.quadratic_standard_error
            .filter(|se| *se > 0.0)
            .map(|se| self.quadratic_coefficient / se)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundModel {
    pub signal: ChannelBackground,
    pub idler: ChannelBackground,
}

fn fit_channel(power: &[f64], rate: &[f64], dark: f64) -> Result<ChannelBackground> {
    let net: Vec<f64> = rate.iter().map(|r| r - dark).collect();
    let line = polyfit(power, &net, 1)?;
    let (quad, quad_se) = if power.len() >= 3 {
        let q = polyfit(power, &net, 2)?;
        (q.coefficients[2], q.standard_errors.map(|se| se[2]))
    } else {
        (0.0, None)
    };
    Ok(ChannelBackground {
        slope: line.coefficients[1],
        offset: line.coefficients[0],
        dark,
        residual_norm: line.residual_sum_squares.sqrt(),
        quadratic_coefficient: quad,
        quadratic_standard_error: quad_se,
    })
}

/// Least-squares line through `(P, CW − dark)` per channel, plus a quadratic
/// fit for the linearity check. Records at zero power are ignored.
pub fn fit_background(cw_records: &[CountRecord]) -> Result<BackgroundModel> {
    let used: Vec<&CountRecord> = cw_records.iter().filter(|r| r.average_power > 0.0).collect();
    if used.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "background fit needs at least 2 powered CW points, got {}",
            used.len()
        )));
    }
    let power: Vec<f64> = used.iter().map(|r| r.average_power).collect();
    let s: Vec<f64> = used.iter().map(|r| r.ns_cw).collect();
    let i: Vec<f64> = used.iter().map(|r| r.ni_cw).collect();
    Ok(BackgroundModel {
        signal: fit_channel(&power, &s, used[0].dark_s)?,
        idler: fit_channel(&power, &i, used[0].dark_i)?,
    })
}

/// Histogram from a time-interval analyser, one start channel and one stop
/// channel, the window spanning several pump periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TIAHistogram {
    /// s
    pub bin_width: f64,
    /// Delay of the first bin's left edge relative to the start, s.
    pub window_start: f64,
    /// s
    pub window: f64,
    /// Pump period, s.
    pub period: f64,
    pub counts: Vec<u64>,
    pub starts_total: u64,
    /// Acquisition time, s.
    pub duration: f64,
}

impl TIAHistogram {
    /// Left edge of bin `j`, s.
    pub fn bin_start(&self, j: usize) -> f64 {
        self.window_start + j as f64 * self.bin_width
    }

    /// Stop probability per bin.
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.starts_total.max(1) as f64;
        self.counts.iter().map(|c| *c as f64 / n).collect()
    }

    /// Counts integrated over the half-period around delay `k·period`.
    pub fn peak_counts(&self, k: i64) -> u64 {
        let centre = k as f64 * self.period;
        let half = 0.5 * self.period;
        self.counts
            .iter()
            .enumerate()
            .filter(|(j, _)| {
                let mid = self.bin_start(*j) + 0.5 * self.bin_width;
                (mid - centre).abs() < half
            })
            .map(|(_, c)| *c)
            .sum()
    }

    /// Peak indices fully inside the window.
    pub fn peak_range(&self) -> (i64, i64) {
        let lo = ((self.window_start + 0.5 * self.period) / self.period).ceil() as i64;
        let hi = ((self.window_start + self.window - 0.5 * self.period) / self.period).floor() as i64;
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccidentalEstimate {
    /// Hz
    pub rate: f64,
    /// Poisson standard error, Hz.
    pub standard_error: f64,
    pub peaks_used: usize,
    pub low_statistics: bool,
}

/// Mean satellite-peak rate, excluding the central peak and any peak within
/// `exclude` periods of it.
pub fn accidentals_from_histogram(hist: &TIAHistogram, exclude: i64) -> AccidentalEstimate {
    let (lo, hi) = hist.peak_range();
    let peaks: Vec<u64> = (lo..=hi).filter(|k| k.abs() > exclude.max(0)).map(|k| hist.peak_counts(k)).collect();
    let total: u64 = peaks.iter().sum();
    if peaks.len() < 2 || total == 0 || !(hist.duration > 0.0) {
        return AccidentalEstimate { rate: 0.0, standard_error: 0.0, peaks_used: peaks.len(), low_statistics: true };
    }
    let m = peaks.len() as f64;
    AccidentalEstimate {
        rate: total as f64 / m / hist.duration,
        standard_error: (total as f64).sqrt() / m / hist.duration,
        peaks_used: peaks.len(),
        low_statistics: total < 10,
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[allow(non_snake_case)]
struct CountRow {
    power_uW: f64,
    ns_raw_hz: f64,
    ns_cw_hz: f64,
    ni_raw_hz: f64,
    ni_cw_hz: f64,
    c_raw_hz: f64,
    cb_hz: f64,
}

/// Reads count records; darks come from a zero-power row when present,
/// otherwise from `default_dark`.
pub fn read_count_records<R: Read>(reader: R, default_dark: (f64, f64)) -> Result<Vec<CountRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let rows: Vec<CountRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    if rows.is_empty() {
        return Err(Error::InsufficientData("count table has no rows".into()));
    }
    let dark = rows
        .iter()
        .find(|r| r.power_uW == 0.0)
        .map_or(default_dark, |r| (r.ns_raw_hz, r.ni_raw_hz));
    let records: Vec<CountRecord> = rows
        .iter()
        .map(|r| CountRecord {
            average_power: r.power_uW / 1e6,
            ns_raw: r.ns_raw_hz,
            ni_raw: r.ni_raw_hz,
            c_raw: r.c_raw_hz,
            cb: r.cb_hz,
            ns_cw: r.ns_cw_hz,
            ni_cw: r.ni_cw_hz,
            dark_s: dark.0,
            dark_i: dark.1,
        })
        .collect();
    for r in &records {
        r.validate()?;
    }
    Ok(records)
}

pub fn write_count_records<W: Write>(writer: W, records: &[CountRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(CountRow {
            power_uW: r.average_power * 1e6,
            ns_raw_hz: r.ns_raw,
            ns_cw_hz: r.ns_cw,
            ni_raw_hz: r.ni_raw,
            ni_cw_hz: r.ni_cw,
            c_raw_hz: r.c_raw,
            cb_hz: r.cb,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Analyses every powered record; zero-power rows only supply darks.
pub fn analyze_records(records: &[CountRecord], repetition_rate: f64) -> Result<Vec<AnalysisResult>> {
    let out: Vec<AnalysisResult> = records
        .iter()
        .filter(|r| r.average_power > 0.0)
        .map(|r| pair_rate(r, repetition_rate))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::InsufficientData("no powered rows to analyse".into()));
    }
    Ok(out)
}

pub fn write_analysis<W: Write>(writer: W, results: &[AnalysisResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["power_uW", "r_hz", "n_per_pulse", "contrast", "eff_s", "eff_i"])?;
    for a in results {
        w.write_record([
            format!("{}", a.average_power * 1e6),
            format!("{}", a.pair_rate),
            format!("{}", a.pairs_per_pulse),
            a.contrast.map_or(String::new(), |c| format!("{c}")),
            format!("{}", a.eff_signal),
            format!("{}", a.eff_idler),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The measured counting table bundled with the crate (rates in Hz).
pub const BUNDLED_TABLE: &str = include_str!("../data/counting_table.csv");

pub fn bundled_records() -> Result<Vec<CountRecord>> {
    read_count_records(BUNDLED_TABLE.as_bytes(), (400.0, 400.0))
}
