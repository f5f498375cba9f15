//! Pulse-by-pulse simulation of the coincidence-counting experiment.
//!
//! Every pulse emits a random number of pairs; each photon reaches its
//! detector with the arm's lumped efficiency. Pulse-synchronous background
//! photons and unsynchronised dark counts are added per channel. A detector
//! registers at most one click per pulse (the earliest), then stays dead for
//! `dead_time`. Timing jitter is Gaussian.
//!
//! Randomness: ChaCha8 seeded from `seed`, one stream per block of
//! [`BLOCK_PULSES`] pulses. Blocks are generated in parallel but the block
//! size is fixed, so the output depends only on the truth and the seed.

use crate::coincidence::{CountRecord, TIAHistogram};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Pulses drawn from one RNG stream.
pub const BLOCK_PULSES: u64 = 1 << 16;
const CW_STREAM_OFFSET: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PairStatistics {
    #[default]
    Poisson,
    Thermal,
}

/// Ground truth of one simulated acquisition, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTruth {
    pub pairs_per_pulse_mean: f64,
    pub pair_statistics: PairStatistics,
    /// Detected pulse-synchronous background, Hz.
    pub background_rate_s: f64,
    pub background_rate_i: f64,
    /// Hz
    pub dark_rate_s: f64,
    pub dark_rate_i: f64,
    pub eff_s: f64,
    pub eff_i: f64,
    /// s
    pub dead_time: f64,
    /// Hz
    pub repetition_rate: f64,
    /// TIA bin, s.
    pub bin_width: f64,
    /// Gaussian timing jitter σ, s.
    pub jitter: f64,
    /// Histogram spans delays within ±(K + ½) periods.
    pub histogram_peaks: usize,
    /// Satellite peaks per side averaged for `C_b`.
    pub accidental_peaks: usize,
    /// s
    pub duration: f64,
    pub seed: u64,
}

impl ExperimentTruth {
    /// 80 MHz, 50 ns dead time, 156 ps bins, 300 ps jitter, 400 Hz darks.
    pub fn reference_setup(pairs_per_pulse_mean: f64, eff_s: f64, eff_i: f64, duration: f64, seed: u64) -> Self {
        Self {
            pairs_per_pulse_mean,
            pair_statistics: PairStatistics::Poisson,
            background_rate_s: 0.0,
            background_rate_i: 0.0,
            dark_rate_s: 400.0,
            dark_rate_i: 400.0,
            eff_s,
            eff_i,
            dead_time: 50e-9,
            repetition_rate: 80e6,
            bin_width: 156e-12,
            jitter: 300e-12,
            histogram_peaks: 8,
            accidental_peaks: 4,
            duration,
            seed,
        }
    }

    pub fn period(&self) -> f64 {
        1.0 / self.repetition_rate
    }

    pub fn pulses(&self) -> u64 {
        (self.duration * self.repetition_rate).round() as u64
    }

    /// Nearest satellite unaffected by dead time.
    pub fn first_accidental_peak(&self) -> usize {
        (self.dead_time * self.repetition_rate).floor() as usize + 1
    }

    fn max_lag(&self) -> usize {
        self.histogram_peaks.max(self.first_accidental_peak() + self.accidental_peaks - 1)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let nonneg = [
            self.pairs_per_pulse_mean,
            self.background_rate_s,
            self.background_rate_i,
            self.dark_rate_s,
            self.dark_rate_i,
            self.dead_time,
            self.jitter,
        ];
        if nonneg.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter("means, rates, dead time and jitter must be >= 0".into()));
        }
        if !unit(self.eff_s) || !unit(self.eff_i) {
            return Err(Error::InvalidParameter("efficiencies must lie in [0, 1]".into()));
        }
        if !(self.repetition_rate > 0.0) || !(self.bin_width > 0.0 && self.bin_width < self.period()) {
            return Err(Error::InvalidParameter("need repetition rate > 0 and 0 < bin width < period".into()));
        }
        if self.pulses() < 10_000 {
            return Err(Error::InvalidParameter(format!("{} pulses is below the 10^4 minimum", self.pulses())));
        }
        if self.accidental_peaks == 0 || self.histogram_peaks == 0 {
            return Err(Error::InvalidParameter("need at least one satellite and one histogram peak per side".into()));
        }
        Ok(())
    }

    fn with_pairs(self, pairs_per_pulse_mean: f64) -> Self {
        Self { pairs_per_pulse_mean, ..self }
    }
}

/// Raw event totals behind a simulated record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCounts {
    pub pulses: u64,
    pub signal_clicks: u64,
    pub idler_clicks: u64,
    /// Coincidences between signal at pulse `n` and idler at `n + k`, indexed by `k + max_lag`.
    pub coincidences_by_lag: Vec<u64>,
    pub max_lag: usize,
    pub signal_clicks_cw: u64,
    pub idler_clicks_cw: u64,
    /// Satellite peaks (both sides) averaged into `C_b`.
    pub satellites_used: usize,
}

impl RawCounts {
    pub fn at_lag(&self, k: i64) -> u64 {
        self.coincidences_by_lag[(k + self.max_lag as i64) as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub record: CountRecord,
    pub histogram: TIAHistogram,
    pub counts: RawCounts,
}

/// Click at pulse index with time offset from the pulse centre, s.
type Click = (u64, f64);

struct ChannelModel {
    eff: f64,
    background: Option<Poisson<f64>>,
    dark: Option<Poisson<f64>>,
}

fn poisson(mean: f64) -> Option<Poisson<f64>> {
    (mean > 0.0).then(|| Poisson::new(mean).expect("positive finite mean"))
}

fn draw_clicks(truth: &ExperimentTruth, pairs_mean: f64, stream_offset: u64) -> Vec<(Vec<Click>, Vec<Click>)> {
    let n = truth.pulses();
    let blocks = n.div_ceil(BLOCK_PULSES);
    let period = truth.period();
    let per_pulse = |rate: f64| rate / truth.repetition_rate;
    let s_model = ChannelModel {
        eff: truth.eff_s,
        background: poisson(per_pulse(truth.background_rate_s)),
        dark: poisson(per_pulse(truth.dark_rate_s)),
    };
    let i_model = ChannelModel {
        eff: truth.eff_i,
        background: poisson(per_pulse(truth.background_rate_i)),
        dark: poisson(per_pulse(truth.dark_rate_i)),
    };
    let jitter = Normal::new(0.0, truth.jitter).expect("jitter is finite and >= 0");
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(truth.seed);
            rng.set_stream(stream_offset + b);
            let pair_poisson = poisson(pairs_mean);
            let pair_thermal = (pairs_mean > 0.0).then(|| Geometric::new(1.0 / (1.0 + pairs_mean)).expect("p in (0, 1]"));
            let (start, end) = (b * BLOCK_PULSES, ((b + 1) * BLOCK_PULSES).min(n));
            let mut s_clicks = Vec::new();
            let mut i_clicks = Vec::new();
            for pulse in start..end {
                let pairs = match truth.pair_statistics {
                    PairStatistics::Poisson => pair_poisson.map_or(0, |d| d.sample(&mut rng) as u64),
                    PairStatistics::Thermal => pair_thermal.map_or(0, |d| d.sample(&mut rng)),
                };
                let mut s_first = f64::INFINITY;
                let mut i_first = f64::INFINITY;
                for _ in 0..pairs {
                    if rng.gen::<f64>() < s_model.eff {
                        s_first = s_first.min(jitter.sample(&mut rng));
                    }
                    if rng.gen::<f64>() < i_model.eff {
                        i_first = i_first.min(jitter.sample(&mut rng));
                    }
                }
                for (model, first) in [(&s_model, &mut s_first), (&i_model, &mut i_first)] {
                    if let Some(d) = &model.background {
                        for _ in 0..(d.sample(&mut rng) as u64) {
                            *first = first.min(jitter.sample(&mut rng));
                        }
                    }
                    if let Some(d) = &model.dark {
                        for _ in 0..(d.sample(&mut rng) as u64) {
                            *first = first.min((rng.gen::<f64>() - 0.5) * period);
                        }
                    }
                }
                if s_first.is_finite() {
                    s_clicks.push((pulse, s_first));
                }
                if i_first.is_finite() {
                    i_clicks.push((pulse, i_first));
                }
            }
            (s_clicks, i_clicks)
        })
        .collect()
}

/// Non-paralysable dead time: a click is kept if it comes at least
/// `dead_time` after the previous kept click.
fn apply_dead_time(clicks: impl Iterator<Item = Click>, period: f64, dead_time: f64) -> Vec<Click> {
    let mut last = f64::NEG_INFINITY;
    let mut kept = Vec::new();
    for (n, off) in clicks {
        let t = n as f64 * period + off;
        if t - last >= dead_time {
            kept.push((n, off));
            last = t;
        }
    }
    kept
}

fn detected(truth: &ExperimentTruth, pairs_mean: f64, stream_offset: u64) -> (Vec<Click>, Vec<Click>) {
    let blocks = draw_clicks(truth, pairs_mean, stream_offset);
    let period = truth.period();
    let s = apply_dead_time(blocks.iter().flat_map(|b| b.0.iter().copied()), period, truth.dead_time);
    let i = apply_dead_time(blocks.iter().flat_map(|b| b.1.iter().copied()), period, truth.dead_time);
    (s, i)
}

fn count_lags(s: &[Click], i: &[Click], max_lag: usize) -> Vec<u64> {
    let k = max_lag as u64;
    let mut lags = vec![0u64; 2 * max_lag + 1];
    let mut lo = 0usize;
    for &(n, _) in s {
        while lo < i.len() && i[lo].0 + k < n {
            lo += 1;
        }
        let mut j = lo;
        while j < i.len() && i[j].0 <= n + k {
            lags[(i[j].0 as i64 - n as i64 + max_lag as i64) as usize] += 1;
            j += 1;
        }
    }
    lags
}

fn tia_histogram(truth: &ExperimentTruth, s: &[Click], i: &[Click], duration: f64) -> TIAHistogram {
    let period = truth.period();
    let window_start = -(truth.histogram_peaks as f64 + 0.5) * period;
    let bins = ((2 * truth.histogram_peaks + 1) as f64 * period / truth.bin_width).ceil() as usize;
    let window = bins as f64 * truth.bin_width;
    let mut counts = vec![0u64; bins];
    let time = |c: &Click| c.0 as f64 * period + c.1;
    let mut lo = 0usize;
    for start in s {
        let t0 = time(start);
        while lo < i.len() && time(&i[lo]) - t0 < window_start {
            lo += 1;
        }
        if let Some(stop) = i.get(lo) {
            let d = time(stop) - t0 - window_start;
            if d < window {
                counts[((d / truth.bin_width) as usize).min(bins - 1)] += 1;
            }
        }
    }
    TIAHistogram {
        bin_width: truth.bin_width,
        window_start,
        window,
        period,
        counts,
        starts_total: s.len() as u64,
        duration,
    }
}

/// One pulsed acquisition plus a CW companion run (no pairs, same background)
/// of equal length.
pub fn simulate_experiment(truth: &ExperimentTruth) -> Result<SimulationOutput> {
    truth.validate()?;
    let pulses = truth.pulses();
    let duration = pulses as f64 / truth.repetition_rate;
    let (s, i) = detected(truth, truth.pairs_per_pulse_mean, 0);
    let (s_cw, i_cw) = detected(truth, 0.0, CW_STREAM_OFFSET);
    let max_lag = truth.max_lag();
    let lags = count_lags(&s, &i, max_lag);
    let first = truth.first_accidental_peak() as i64;
    let sats: Vec<i64> = (first..first + truth.accidental_peaks as i64).flat_map(|k| [k, -k]).collect();
    let at = |k: i64| lags[(k + max_lag as i64) as usize];
    let sat_total: u64 = sats.iter().map(|&k| at(k)).sum();
    let record = CountRecord {
        average_power: 0.0,
        ns_raw: s.len() as f64 / duration,
        ni_raw: i.len() as f64 / duration,
        c_raw: at(0) as f64 / duration,
        cb: sat_total as f64 / sats.len() as f64 / duration,
        ns_cw: s_cw.len() as f64 / duration,
        ni_cw: i_cw.len() as f64 / duration,
        dark_s: truth.dark_rate_s,
        dark_i: truth.dark_rate_i,
    };
    let histogram = tia_histogram(truth, &s, &i, duration);
    Ok(SimulationOutput {
        record,
        histogram,
        counts: RawCounts {
            pulses,
            signal_clicks: s.len() as u64,
            idler_clicks: i.len() as u64,
            coincidences_by_lag: lags,
            max_lag,
            signal_clicks_cw: s_cw.len() as u64,
            idler_clicks_cw: i_cw.len() as u64,
            satellites_used: sats.len(),
        },
    })
}

/// Records at each power: pair mean scales as `(P/P_ref)²`, backgrounds as
/// `P/P_ref`. Each power gets its own seed derived from the template's.
pub fn sweep_power(template: &ExperimentTruth, reference_power: f64, powers: &[f64]) -> Result<Vec<CountRecord>> {
    if !(reference_power > 0.0) || powers.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::InvalidParameter("powers must be > 0".into()));
    }
    powers
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let x = p / reference_power;
            let truth = ExperimentTruth {
                background_rate_s: template.background_rate_s * x,
                background_rate_i: template.background_rate_i * x,
                seed: template.seed.wrapping_add((k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                ..template.with_pairs(template.pairs_per_pulse_mean * x * x)
            };
            let out = simulate_experiment(&truth)?;
            Ok(CountRecord { average_power: p, ..out.record })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coincidence::{accidentals_from_histogram, pair_rate, pair_rate_standard_error};

    fn base(mu: f64, seed: u64) -> ExperimentTruth {
        ExperimentTruth::reference_setup(mu, 0.25, 0.10, 0.02, seed)
    }

    #[test]
    fn deterministic_given_seed() {
        let t = ExperimentTruth { background_rate_i: 5e4, ..base(0.05, 7) };
        let a = simulate_experiment(&t).unwrap();
        let b = simulate_experiment(&t).unwrap();
        assert_eq!(a, b);
        let c = simulate_experiment(&ExperimentTruth { seed: 8, ..t }).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn no_pairs_means_flat_peaks() {
        let t = ExperimentTruth { background_rate_s: 2e5, background_rate_i: 3e5, ..base(0.0, 3) };
        let out = simulate_experiment(&t).unwrap();
        let c0 = out.counts.at_lag(0) as f64;
        let mean_sat = out.record.cb * out.histogram.duration;
        assert!((c0 - mean_sat).abs() < 4.0 * mean_sat.sqrt() + 1.0, "{c0} {mean_sat}");
    }

    #[test]
    fn round_trip_at_four_million() {
        let r_true = 4e6;
        let t = ExperimentTruth { background_rate_s: 5e3, background_rate_i: 5e4, ..base(r_true / 80e6, 11) };
        let out = simulate_experiment(&t).unwrap();
        let a = pair_rate(&out.record, 80e6).unwrap();
        let se = pair_rate_standard_error(&out.record, out.histogram.duration, out.counts.satellites_used).unwrap();
        assert!((a.pair_rate - r_true).abs() < 3.0 * se, "{} ± {se}", a.pair_rate);
    }

    #[test]
    fn satellites_sit_one_period_apart() {
        let t = ExperimentTruth { background_rate_s: 1e7, background_rate_i: 1e7, dead_time: 0.0, ..base(0.0, 5) };
        let out = simulate_experiment(&t).unwrap();
        let h = &out.histogram;
        let centroid = |k: i64| {
            let centre = k as f64 * h.period;
            let (mut w, mut m) = (0.0, 0.0);
            for j in 0..h.counts.len() {
                let t = h.bin_start(j) + 0.5 * h.bin_width;
                if (t - centre).abs() < 0.5 * h.period {
                    w += h.counts[j] as f64;
                    m += h.counts[j] as f64 * t;
                }
            }
            m / w
        };
        for k in -3..3 {
            let spacing = centroid(k + 1) - centroid(k);
            assert!((spacing - 12.5e-9).abs() < 0.2 * h.bin_width, "{spacing}");
        }
        assert!(h.counts.iter().sum::<u64>() <= h.starts_total);
        let acc = accidentals_from_histogram(h, 0);
        assert!(acc.rate > 0.0 && !acc.low_statistics);
    }

    #[test]
    fn coincidences_bounded_by_singles() {
        let out = simulate_experiment(&base(0.1, 2)).unwrap();
        let c = &out.counts;
        for &v in &c.coincidences_by_lag {
            assert!(v <= c.signal_clicks.min(c.idler_clicks));
        }
    }

    #[test]
    fn contrast_falls_with_pair_mean() {
        let lo = pair_rate(&simulate_experiment(&base(0.01, 4)).unwrap().record, 80e6).unwrap();
        let hi = pair_rate(&simulate_experiment(&base(0.1, 4)).unwrap().record, 80e6).unwrap();
        assert!(hi.contrast.unwrap() < lo.contrast.unwrap());
    }

    #[test]
    fn sparse_pairs_without_background_have_no_accidentals() {
        let t = ExperimentTruth { dark_rate_s: 0.0, dark_rate_i: 0.0, ..base(2e-3, 9) };
        let r = simulate_experiment(&t).unwrap().record;
        assert!(r.cb < 0.01 * r.c_raw, "{} {}", r.cb, r.c_raw);
    }

    #[test]
    fn click_probability_follows_pair_statistics() {
        let t = ExperimentTruth { eff_s: 1.0, dark_rate_s: 0.0, dark_rate_i: 0.0, dead_time: 0.0, ..base(1.0, 6) };
        let frac = |t: &ExperimentTruth| {
            let c = simulate_experiment(t).unwrap().counts;
            c.signal_clicks as f64 / c.pulses as f64
        };
        assert!((frac(&t) - (1.0 - (-1.0f64).exp())).abs() < 2e-3);
        let thermal = ExperimentTruth { pair_statistics: PairStatistics::Thermal, ..t };
        assert!((frac(&thermal) - 0.5).abs() < 2e-3);
    }

    #[test]
    fn sweep_scales_pairs_and_background() {
        let t = ExperimentTruth { background_rate_s: 2e3, background_rate_i: 4e4, ..base(0.02, 1) };
        let recs = sweep_power(&t, 1e-3, &[0.5e-3, 1e-3]).unwrap();
        let excess = |r: &CountRecord| r.c_raw - r.cb;
        let ratio = excess(&recs[1]) / excess(&recs[0]);
        assert!((ratio - 4.0).abs() < 0.4, "{ratio}");
        let cw_ratio = (recs[1].ni_cw - 400.0) / (recs[0].ni_cw - 400.0);
        assert!((cw_ratio - 2.0).abs() < 0.1, "{cw_ratio}");
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn invariants_hold_for_any_truth(
            mu in 0.0f64..0.3,
            eff_s in 0.0f64..1.0,
            eff_i in 0.0f64..1.0,
            bg in 0.0f64..2e6,
            seed in proptest::prelude::any::<u64>(),
        ) {
            let t = ExperimentTruth { background_rate_i: bg, duration: 3e-4, ..ExperimentTruth::reference_setup(mu, eff_s, eff_i, 3e-4, seed) };
            let a = simulate_experiment(&t).unwrap();
            let c = &a.counts;
            for &v in &c.coincidences_by_lag {
                proptest::prop_assert!(v <= c.signal_clicks.min(c.idler_clicks));
            }
            proptest::prop_assert!(a.histogram.counts.iter().sum::<u64>() <= a.histogram.starts_total);
            proptest::prop_assert!(c.signal_clicks <= c.pulses && c.idler_clicks <= c.pulses);
            proptest::prop_assert_eq!(&a, &simulate_experiment(&t).unwrap());
        }
    }

    #[test]
    fn rejects_bad_truth() {
        assert!(simulate_experiment(&ExperimentTruth { eff_s: 1.5, ..base(0.1, 1) }).is_err());
        assert!(simulate_experiment(&ExperimentTruth { duration: 1e-6, ..base(0.1, 1) }).is_err());
    }
}
