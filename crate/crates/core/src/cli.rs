//! Command-line entry point. Each subcommand computes all of its artifacts in
//! memory and writes them only once everything succeeded.

use crate::coincidence::{
    analyze_records, fit_background, read_count_records, write_count_records, CountRecord, BUNDLED_TABLE,
};
use crate::config::{load_config, RunConfig};
use crate::constants::wavelength_to_omega;
use crate::dispersion::dispersion_sample;
use crate::error::{Error, Result};
use crate::montecarlo::{simulate_experiment, sweep_power};
use crate::numerics::roots::linspace;
use crate::pairgen::{mean_pairs_closed_form, multi_pair_projection, predict, PairPrediction};
use crate::phasematch::{phase_matching_curve, solve_phase_matching};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "fwm-pairs", version, about = "Four-wave-mixing photon-pair source modelling and analysis")]
pub struct Cli {
    /// Run configuration; the bundled setup when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the configured simulation seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Format of tabular artifacts.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Effective index, group index and GVD over a wavelength grid.
    Dispersion,
    /// Signal and idler wavelengths over a pump-wavelength grid.
    Phasematch,
    /// Pair number, bandwidths and walk-off at the configured pump.
    Predict,
    /// Pair rate and efficiencies from a counting table.
    Analyze {
        /// Counting-table CSV; the bundled table when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Monte Carlo counting experiment.
    Simulate {
        /// Prediction JSON supplying the pair rate.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

/// A named output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Column-oriented table; `None` cells render empty in CSV and null in JSON.
struct Table {
    headers: &'static [&'static str],
    rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(self.headers)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(|c| c.map_or(String::new(), |v| v.to_string())))?;
                }
                w.into_inner().map_err(|e| Error::Io(e.into_error()))
            }
            Format::Json => {
                let objects: Vec<serde_json::Map<String, serde_json::Value>> = self
                    .rows
                    .iter()
                    .map(|row| {
                        self.headers
                            .iter()
                            .zip(row)
                            .map(|(h, c)| (h.to_string(), c.map_or(serde_json::Value::Null, |v| serde_json::json!(v))))
                            .collect()
                    })
                    .collect();
                json_bytes(&objects)
            }
        }
    }

    fn artifact(&self, stem: &str, format: Format) -> Result<Artifact> {
        let ext = match format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        Ok(Artifact { name: format!("{stem}.{ext}"), bytes: self.render(format)? })
    }
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        vec![start]
    } else {
        linspace(start, stop, points - 1)
    }
}

fn run_dispersion(cfg: &RunConfig, format: Format) -> Result<Vec<Artifact>> {
    let fibre = cfg.fibre();
    let rows = grid(cfg.dispersion_start_nm, cfg.dispersion_stop_nm, cfg.dispersion_points)
        .into_iter()
        .map(|nm| {
            let s = dispersion_sample(&fibre, wavelength_to_omega(nm * 1e-9))?;
            Ok(vec![Some(nm), Some(s.n_eff), Some(s.k), Some(s.group_index), Some(s.group_velocity), Some(s.gvd)])
        })
        .collect::<Result<_>>()?;
    let table = Table {
        headers: &["lambda_nm", "n_eff", "k_rad_per_m", "group_index", "vg_m_per_s", "gvd_s2_per_m"],
        rows,
    };
    Ok(vec![table.artifact("dispersion", format)?])
}

fn run_phasematch(cfg: &RunConfig, format: Format) -> Result<Vec<Artifact>> {
    let pumps_nm = grid(cfg.phasematch_start_nm, cfg.phasematch_stop_nm, cfg.phasematch_points);
    let pumps: Vec<f64> = pumps_nm.iter().map(|nm| nm * 1e-9).collect();
    let curve = phase_matching_curve(&cfg.fibre(), &pumps, &cfg.pump())?;
    let rows = pumps_nm
        .iter()
        .zip(curve)
        .map(|(&nm, sol)| match sol {
            Some(s) => vec![Some(nm), Some(s.lambda_s * 1e9), Some(s.lambda_i * 1e9), Some(s.delta_k_residual), Some(s.gamma_p)],
            None => vec![Some(nm), None, None, None, None],
        })
        .collect();
    let table = Table {
        headers: &["lambda_p_nm", "lambda_s_nm", "lambda_i_nm", "delta_k_residual", "gamma_P"],
        rows,
    };
    Ok(vec![table.artifact("phasematch", format)?])
}

fn run_predict(cfg: &RunConfig, format: Format) -> Result<Vec<Artifact>> {
    let fibre = cfg.fibre();
    let pump = cfg.pump();
    let (_, prediction) = predict(&fibre, &pump)?;
    let projection = multi_pair_projection(
        &prediction,
        cfg.filter_bandwidth_nm * 1e-9,
        cfg.filter_transmission,
        cfg.lumped_efficiencies(),
        cfg.projection_power_mw * 1e-3,
    )?;
    let mut out = vec![
        Artifact { name: "prediction.json".into(), bytes: json_bytes(&prediction)? },
        Artifact { name: "projection.json".into(), bytes: json_bytes(&projection)? },
    ];
    if !cfg.sweep_powers_uw.is_empty() || !cfg.sweep_lengths_m.is_empty() {
        let powers = if cfg.sweep_powers_uw.is_empty() { vec![cfg.average_power_uw] } else { cfg.sweep_powers_uw.clone() };
        let lengths = if cfg.sweep_lengths_m.is_empty() { vec![cfg.length_m] } else { cfg.sweep_lengths_m.clone() };
        let mut rows = Vec::new();
        for &p_uw in &powers {
            let pump_p = pump.with_average_power(p_uw * 1e-6);
            let solution = solve_phase_matching(&fibre, &pump_p)?;
            for &length in &lengths {
                let f = crate::dispersion::FibreSpec { length, ..fibre };
                let pr = mean_pairs_closed_form(&f, &pump_p, &solution)?;
                rows.push(vec![
                    Some(p_uw),
                    Some(length),
                    Some(pr.lambda_s * 1e9),
                    Some(pr.lambda_i * 1e9),
                    Some(pr.mean_pairs_per_pulse),
                    Some(pr.pair_rate),
                    Some(pr.signal_bandwidth_wavelength * 1e9),
                    Some(pr.idler_bandwidth_wavelength * 1e9),
                    pr.walk_off_length,
                ]);
            }
        }
        let table = Table {
            headers: &[
                "power_uW",
                "length_m",
                "lambda_s_nm",
                "lambda_i_nm",
                "n_per_pulse",
                "r_hz",
                "signal_fwhm_nm",
                "idler_fwhm_nm",
                "walk_off_m",
            ],
            rows,
        };
        out.push(table.artifact("predict_sweep", format)?);
    }
    Ok(out)
}

fn run_analyze(cfg: &RunConfig, format: Format, input: Option<&Path>) -> Result<Vec<Artifact>> {
    let dark = (cfg.dark_rate_s_hz, cfg.dark_rate_i_hz);
    let mut records = match input {
        Some(path) => read_count_records(std::fs::File::open(path)?, dark)?,
        None => read_count_records(BUNDLED_TABLE.as_bytes(), dark)?,
    };
    if cfg.dead_time_correction {
        records = records
            .iter()
            .map(|r| r.deadtime_corrected(cfg.dead_time_ns * 1e-9))
            .collect::<Result<_>>()?;
    }
    let results = analyze_records(&records, cfg.repetition_rate_hz)?;
    let rows = results
        .iter()
        .map(|a| {
            vec![
                Some(a.average_power * 1e6),
                Some(a.pair_rate),
                Some(a.pairs_per_pulse),
                a.contrast,
                Some(a.eff_signal),
                Some(a.eff_idler),
            ]
        })
        .collect();
    let table = Table { headers: &["power_uW", "r_hz", "n_per_pulse", "contrast", "eff_s", "eff_i"], rows };
    let mut out = vec![table.artifact("analysis", format)?];
    let powered: Vec<CountRecord> = records.iter().filter(|r| r.average_power > 0.0).copied().collect();
    if powered.len() >= 2 {
        out.push(Artifact { name: "background.json".into(), bytes: json_bytes(&fit_background(&powered)?)? });
    }
    Ok(out)
}

fn run_simulate(cfg: &RunConfig, format: Format, input: Option<&Path>) -> Result<Vec<Artifact>> {
    let power = cfg.average_power_uw * 1e-6;
    if !(power > 0.0) {
        return Err(Error::Config("`average_power_uw` must be > 0 to simulate".into()));
    }
    let pair_rate = match (input, cfg.pair_rate_hz) {
        (Some(path), _) => {
            let p: PairPrediction = serde_json::from_slice(&std::fs::read(path)?)?;
            if !(p.average_power > 0.0) {
                return Err(Error::InvalidParameter("prediction has no pump power".into()));
            }
            p.pair_rate * (power / p.average_power).powi(2)
        }
        (None, Some(r)) => r,
        (None, None) => predict(&cfg.fibre(), &cfg.pump())?.1.pair_rate,
    };
    let truth = cfg.truth(pair_rate, power);
    let sim = simulate_experiment(&truth)?;
    let mut records = vec![CountRecord {
        average_power: 0.0,
        ns_raw: truth.dark_rate_s,
        ni_raw: truth.dark_rate_i,
        c_raw: 0.0,
        cb: 0.0,
        ns_cw: truth.dark_rate_s,
        ni_cw: truth.dark_rate_i,
        dark_s: truth.dark_rate_s,
        dark_i: truth.dark_rate_i,
    }];
    if cfg.sweep_powers_uw.is_empty() {
        records.push(CountRecord { average_power: power, ..sim.record });
    } else {
        let powers: Vec<f64> = cfg.sweep_powers_uw.iter().map(|p| p * 1e-6).collect();
        records.extend(sweep_power(&truth, power, &powers)?);
    }
    let hist = &sim.histogram;
    let rows = hist
        .probabilities()
        .into_iter()
        .enumerate()
        .map(|(j, p)| vec![Some(hist.bin_start(j) * 1e12), Some(p)])
        .collect();
    let histogram = Table { headers: &["bin_start_ps", "probability"], rows };
    let counts = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_count_records(&mut buf, &records)?;
            Artifact { name: "counts.csv".into(), bytes: buf }
        }
        Format::Json => Artifact { name: "counts.json".into(), bytes: json_bytes(&records)? },
    };
    Ok(vec![
        counts,
        histogram.artifact("histogram", format)?,
        Artifact { name: "truth.json".into(), bytes: json_bytes(&truth)? },
    ])
}

/// Runs one subcommand and returns its artifacts without touching the disk.
pub fn run_subcommand(command: &Command, cfg: &RunConfig, format: Format) -> Result<Vec<Artifact>> {
    match command {
        Command::Dispersion => run_dispersion(cfg, format),
        Command::Phasematch => run_phasematch(cfg, format),
        Command::Predict => run_predict(cfg, format),
        Command::Analyze { input } => run_analyze(cfg, format, input.as_deref()),
        Command::Simulate { input } => run_simulate(cfg, format, input.as_deref()),
    }
}

/// Writes every artifact to a temporary name first, then renames them all.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let staged: Vec<(PathBuf, PathBuf)> = artifacts
        .iter()
        .map(|a| (dir.join(format!(".{}.partial", a.name)), dir.join(&a.name)))
        .collect();
    for ((tmp, _), a) in staged.iter().zip(artifacts) {
        if let Err(e) = std::fs::write(tmp, &a.bytes) {
            for (t, _) in &staged {
                let _ = std::fs::remove_file(t);
            }
            return Err(e.into());
        }
    }
    for (tmp, dest) in &staged {
        std::fs::rename(tmp, dest)?;
    }
    Ok(())
}

pub fn exit_code(error: &Error) -> i32 {
    if error.is_numerical() {
        3
    } else {
        2
    }
}

fn error_json(error: &Error) -> String {
    serde_json::json!({
        "error": error.kind(),
        "message": error.to_string(),
        "exit_code": exit_code(error),
    })
    .to_string()
}

pub fn run(cli: &Cli) -> Result<Vec<Artifact>> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::bundled(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let artifacts = run_subcommand(&cli.command, &cfg, cli.format)?;
    write_artifacts(&cli.out, &artifacts)?;
    Ok(artifacts)
}

/// Parses `args`, runs, reports errors as JSON on stderr; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(artifacts) => {
            for a in &artifacts {
                println!("{}", cli.out.join(&a.name).display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::omega_to_wavelength;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("fwm-pairs").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_parse_in_any_position() {
        let cli = parse(&["analyze", "--format", "json", "--seed", "3", "--input", "x.csv"]);
        assert_eq!(cli.format, Format::Json);
        assert_eq!(cli.seed, Some(3));
        assert!(matches!(cli.command, Command::Analyze { input: Some(_) }));
    }

    #[test]
    fn analyze_bundled_table() {
        let out = run_subcommand(&Command::Analyze { input: None }, &RunConfig::bundled(), Format::Csv).unwrap();
        let text = String::from_utf8(out[0].bytes.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("power_uW,r_hz,n_per_pulse,contrast,eff_s,eff_i"));
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().last().unwrap().split(',').nth(3) == Some(""));
        assert_eq!(out[1].name, "background.json");
    }

    #[test]
    fn phasematch_marks_missing_branch() {
        let cfg = RunConfig { phasematch_start_nm: 650.0, phasematch_stop_nm: 708.4, phasematch_points: 2, ..RunConfig::bundled() };
        let out = run_subcommand(&Command::Phasematch, &cfg, Format::Csv).unwrap();
        let text = String::from_utf8(out[0].bytes.clone()).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows[0], "lambda_p_nm,lambda_s_nm,lambda_i_nm,delta_k_residual,gamma_P");
        assert_eq!(rows[1], "650,,,,");
        assert!(rows[2].starts_with("708.4,5"));
    }

    #[test]
    fn dispersion_json_has_schema_keys() {
        let cfg = RunConfig { dispersion_points: 3, ..RunConfig::bundled() };
        let out = run_subcommand(&Command::Dispersion, &cfg, Format::Json).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out[0].bytes).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 3);
        for key in ["lambda_nm", "n_eff", "k_rad_per_m", "group_index", "vg_m_per_s", "gvd_s2_per_m"] {
            assert!(v[0].get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn exit_codes_split_validation_and_numerics() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::NoPhaseMatch { lambda_p_nm: 650.0 }), 3);
        let j: serde_json::Value = serde_json::from_str(&error_json(&Error::InsufficientData("empty".into()))).unwrap();
        assert_eq!(j["error"], "insufficient_data");
        assert_eq!(j["exit_code"], 2);
    }

    #[test]
    fn wavelength_helpers_agree() {
        let nm = 708.4;
        assert!((omega_to_wavelength(wavelength_to_omega(nm * 1e-9)) * 1e9 - nm).abs() < 1e-9);
    }
}
