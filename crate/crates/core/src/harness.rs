//! Monte Carlo sweeps, convergence studies and CSV export.
//!
//! Every trial is seeded from `(master_seed, trial, snr_index)` through
//! [`trial_seed`], so a sweep is fully reproducible and independent of the
//! worker count. Records come back sorted by `(snr_index, trial)` and means
//! are accumulated by pairwise summation over seed-sorted values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, ChannelSet};
use crate::config::SystemConfig;
use crate::digital::{self, DesignParams, DesignTrace};
use crate::metrics::{self, flops};
use crate::{Error, Result};

/// Schemes compared in every trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Proposed,
    AllDigital,
    SvdBaseline,
    HalfDuplex,
    UpperBound,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Proposed,
        Scheme::AllDigital,
        Scheme::SvdBaseline,
        Scheme::HalfDuplex,
        Scheme::UpperBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::AllDigital => "all_digital",
            Scheme::SvdBaseline => "svd_baseline",
            Scheme::HalfDuplex => "half_duplex",
            Scheme::UpperBound => "upper_bound",
        }
    }

    pub fn from_name(name: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|s| s.name() == name)
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Outcome of one scheme in one trial. `sum_se` is `None` when the design
/// failed on this realisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeResult {
    pub sum_se: Option<f64>,
    pub iterations: usize,
    pub flops: u64,
    pub converged: bool,
}

impl SchemeResult {
    fn closed_form(sum_se: f64) -> Self {
        SchemeResult {
            sum_se: Some(sum_se),
            iterations: 0,
            flops: 0,
            converged: true,
        }
    }

    fn failed() -> Self {
        SchemeResult {
            sum_se: None,
            iterations: 0,
            flops: 0,
            converged: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub snr_index: usize,
    pub seed: u64,
    pub snr_db: f64,
    pub results: [SchemeResult; 5],
    /// Analog SI power of the proposed design before and after the loop.
    pub si_initial: Option<f64>,
    pub si_final: Option<f64>,
    /// Design errors, one message per failed scheme.
    pub errors: Vec<String>,
}

impl TrialRecord {
    pub fn get(&self, scheme: Scheme) -> &SchemeResult {
        &self.results[scheme.index()]
    }

    pub fn sum_se(&self, scheme: Scheme) -> Option<f64> {
        self.get(scheme).sum_se
    }

    pub fn flagged(&self) -> bool {
        !self.errors.is_empty()
    }

    /// `upper_bound ≥ all_digital ≥ proposed ≥ 0` within `tol`; `None` for
    /// flagged records.
    pub fn ordering_holds(&self, tol: f64) -> Option<bool> {
        let ub = self.sum_se(Scheme::UpperBound)?;
        let ad = self.sum_se(Scheme::AllDigital)?;
        let pr = self.sum_se(Scheme::Proposed)?;
        if self.flagged() {
            return None;
        }
        Some(ub + tol >= ad && ad + tol >= pr && pr >= 0.0)
    }
}

/// Stable per-trial seed: three rounds of the SplitMix64 finaliser over the
/// master seed, the trial index and the SNR index.
pub fn trial_seed(master_seed: u64, trial: usize, snr_index: usize) -> u64 {
    let mut h = splitmix64(master_seed);
    h = splitmix64(h ^ (trial as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    splitmix64(h ^ (snr_index as u64).wrapping_mul(0x8CB9_2BA7_2F3D_8DD7))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs every scheme on one channel realisation.
pub fn evaluate_trial(
    channels: &ChannelSet,
    params: &DesignParams,
) -> ([SchemeResult; 5], Option<DesignTrace>, Vec<String>) {
    let point = params.point;
    let mut results = [SchemeResult::failed(); 5];
    let mut errors = Vec::new();
    let mut note = |scheme: Scheme, e: Error| errors.push(format!("{}: {e}", scheme.name()));

    let mut proposed_trace = None;
    match digital::hybrid_design(channels, params).and_then(|(beams, trace)| {
        metrics::link_rates(&beams, channels, &point).map(|r| (r, trace))
    }) {
        Ok((rates, trace)) => {
            results[Scheme::Proposed.index()] = SchemeResult {
                sum_se: Some(rates.sum),
                iterations: trace.iterations,
                flops: trace.flops_estimate,
                converged: trace.converged,
            };
            results[Scheme::UpperBound.index()] = SchemeResult::closed_form(rates.bound_sum());
            proposed_trace = Some(trace);
        }
        Err(e) => note(Scheme::Proposed, e),
    }

    match digital::all_digital_design(channels, params).and_then(|(beams, trace)| {
        metrics::link_rates(&beams, channels, &point).map(|r| (r, trace))
    }) {
        Ok((rates, trace)) => {
            results[Scheme::AllDigital.index()] = SchemeResult {
                sum_se: Some(rates.sum),
                iterations: trace.iterations,
                flops: trace.flops_estimate,
                converged: trace.converged,
            };
            if results[Scheme::UpperBound.index()].sum_se.is_none() {
                results[Scheme::UpperBound.index()] = SchemeResult::closed_form(rates.bound_sum());
            }
        }
        Err(e) => note(Scheme::AllDigital, e),
    }

    match digital::svd_baseline_design(channels, params)
        .and_then(|beams| metrics::link_rates(&beams, channels, &point))
    {
        Ok(rates) => results[Scheme::SvdBaseline.index()] = SchemeResult::closed_form(rates.sum),
        Err(e) => note(Scheme::SvdBaseline, e),
    }

    match digital::half_duplex_evaluate(channels, params) {
        Ok(se) => results[Scheme::HalfDuplex.index()] = SchemeResult::closed_form(se),
        Err(e) => note(Scheme::HalfDuplex, e),
    }

    if results[Scheme::UpperBound.index()].sum_se.is_none() {
        let n_s = params.num_streams;
        let bound = metrics::upper_bound(&channels.backhaul, point.backhaul_snr(), n_s)
            + metrics::upper_bound(&channels.access, point.access_snr(), n_s);
        results[Scheme::UpperBound.index()] = SchemeResult::closed_form(bound);
    }
    (results, proposed_trace, errors)
}

pub fn run_trial(
    cfg: &SystemConfig,
    model: &ChannelModel,
    snr_index: usize,
    trial: usize,
) -> TrialRecord {
    let snr_db = cfg.snr_db[snr_index];
    let seed = trial_seed(cfg.master_seed, trial, snr_index);
    let params = cfg.design_params(snr_db, seed);
    let mut record = TrialRecord {
        trial,
        snr_index,
        seed,
        snr_db,
        results: [SchemeResult::failed(); 5],
        si_initial: None,
        si_final: None,
        errors: Vec::new(),
    };
    match model.realize(seed) {
        Ok(channels) => {
            let (results, trace, errors) = evaluate_trial(&channels, &params);
            record.results = results;
            record.si_initial = trace.as_ref().map(|t| t.initial_analog_si);
            record.si_final = trace.as_ref().map(|t| t.final_analog_si());
            record.errors = errors;
        }
        Err(e) => record.errors.push(format!("channel: {e}")),
    }
    record
}

/// All trials of the configured sweep, ordered by `(snr_index, trial)`.
pub fn run_sweep(cfg: &SystemConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let model = cfg.channel_model();
    let jobs: Vec<(usize, usize)> = (0..cfg.snr_db.len())
        .flat_map(|s| (0..cfg.trials).map(move |t| (s, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|&(s, t)| run_trial(cfg, &model, s, t))
            .collect()
    }))
}

/// Per-SNR, per-scheme aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub snr_db: f64,
    pub scheme: String,
    pub mean_sum_se_bits: f64,
    pub ci95_half_width: f64,
    pub trials: usize,
    pub failures: usize,
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (lo, hi) = values.split_at(values.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut snrs: Vec<(usize, f64)> = records.iter().map(|r| (r.snr_index, r.snr_db)).collect();
    snrs.sort_by_key(|a| a.0);
    snrs.dedup_by_key(|s| s.0);

    let mut rows = Vec::new();
    for (snr_index, snr_db) in snrs {
        let at_snr: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| r.snr_index == snr_index)
            .collect();
        for scheme in Scheme::ALL {
            let mut samples: Vec<(u64, f64)> = at_snr
                .iter()
                .filter_map(|r| r.sum_se(scheme).map(|v| (r.seed, v)))
                .collect();
            samples.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
            let n = values.len();
            let failures = at_snr.len() - n;
            let (mean, half_width) = if n == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let mean = pairwise_sum(&values) / n as f64;
                let half_width = if n > 1 {
                    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
                    let var = pairwise_sum(&sq) / (n - 1) as f64;
                    1.96 * (var / n as f64).sqrt()
                } else {
                    0.0
                };
                (mean, half_width)
            };
            rows.push(SummaryRow {
                snr_db,
                scheme: scheme.name().to_string(),
                mean_sum_se_bits: mean,
                ci95_half_width: half_width,
                trials: n,
                failures,
            });
        }
    }
    rows
}

/// One line of the per-trial CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub snr_db: f64,
    pub seed: u64,
    pub scheme: String,
    /// NaN when the design failed.
    pub sum_se_bits: f64,
    pub iterations: usize,
    pub flops: u64,
    pub converged: bool,
}

pub fn trial_rows(records: &[TrialRecord]) -> Vec<TrialRow> {
    records
        .iter()
        .flat_map(|r| {
            Scheme::ALL.into_iter().map(move |s| {
                let res = r.get(s);
                TrialRow {
                    snr_db: r.snr_db,
                    seed: r.seed,
                    scheme: s.name().to_string(),
                    sum_se_bits: res.sum_se.unwrap_or(f64::NAN),
                    iterations: res.iterations,
                    flops: res.flops,
                    converged: res.converged,
                }
            })
        })
        .collect()
}

pub const TRIALS_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

/// Writes `trials.csv` and `summary.csv` into `dir` and returns their paths.
pub fn export_results(
    records: &[TrialRecord],
    dir: impl AsRef<Path>,
) -> Result<(PathBuf, PathBuf)> {
    if records.is_empty() {
        return Err(Error::Config("no records to export".into()));
    }
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let trials = dir.join(TRIALS_FILE);
    let summary = dir.join(SUMMARY_FILE);
    write_csv(&trials, &trial_rows(records))?;
    write_csv(&summary, &summarize(records))?;
    Ok((trials, summary))
}

/// Published mean gains at 5 dB SNR, for side-by-side reporting only.
pub const PUBLISHED_GAPS_AT_5DB: [(Scheme, f64); 2] =
    [(Scheme::SvdBaseline, 4.71), (Scheme::HalfDuplex, 8.62)];

/// Measured mean gain of the proposed scheme over a comparator.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub snr_db: f64,
    pub versus: Scheme,
    pub measured: f64,
    pub published: f64,
}

impl GapReport {
    /// Inside ±50 % of the published value.
    pub fn within_advisory_band(&self) -> bool {
        (self.measured - self.published).abs() <= 0.5 * self.published
    }
}

pub fn gap_reports(summary: &[SummaryRow], snr_db: f64) -> Vec<GapReport> {
    let mean = |scheme: Scheme| {
        summary
            .iter()
            .find(|r| r.snr_db == snr_db && r.scheme == scheme.name())
            .map(|r| r.mean_sum_se_bits)
    };
    let Some(proposed) = mean(Scheme::Proposed) else {
        return Vec::new();
    };
    PUBLISHED_GAPS_AT_5DB
        .iter()
        .filter_map(|&(versus, published)| {
            mean(versus).map(|m| GapReport {
                snr_db,
                versus,
                measured: proposed - m,
                published,
            })
        })
        .collect()
}

/// SNR and SI power of the single-realisation convergence study.
pub const CONVERGENCE_SNR_DB: f64 = 0.0;

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub seed: u64,
    pub trace: DesignTrace,
}

/// Hybrid design trace on one realisation at 0 dB SNR and the configured SI
/// power.
pub fn run_convergence_study(cfg: &SystemConfig, seed: u64) -> Result<ConvergenceStudy> {
    cfg.validate()?;
    let channels = cfg.channel_model().realize(seed)?;
    let params = cfg.design_params(CONVERGENCE_SNR_DB, seed);
    let (_, trace) = digital::hybrid_design(&channels, &params)?;
    Ok(ConvergenceStudy { seed, trace })
}

/// Whitespace-separated columns, one row per pass; row 0 is the initial
/// state.
pub fn write_trace(study: &ConvergenceStudy, mut out: impl Write) -> std::io::Result<()> {
    let t = &study.trace;
    writeln!(
        out,
        "# seed {} converged {} flops {}",
        study.seed, t.converged, t.flops_estimate
    )?;
    writeln!(out, "iteration analog_si hybrid_si objective")?;
    writeln!(
        out,
        "0 {:?} {:?} {:?}",
        t.initial_analog_si, t.initial_hybrid_si, t.initial_objective
    )?;
    for i in 0..t.iterations {
        writeln!(
            out,
            "{} {:?} {:?} {:?}",
            i + 1,
            t.analog_si[i],
            t.hybrid_si[i],
            t.objective[i]
        )?;
    }
    Ok(())
}

pub fn export_trace(study: &ConvergenceStudy, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_trace(study, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Closed-form flop counts at the configured dimensions.
pub fn flop_report(cfg: &SystemConfig) -> Result<flops::FlopReport> {
    cfg.validate()?;
    Ok(flops::flop_model(&cfg.dimensions()))
}
