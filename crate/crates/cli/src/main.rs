use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fdiab::config::{parse_snr_range, SystemConfig};
use fdiab::harness;
use fdiab::matfile;

/// Full-duplex IAB hybrid beamforming simulator.
#[derive(Parser)]
#[command(name = "fdiab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// TOML config; reference parameters when omitted.
    #[arg(long, env = "FDIAB_CONFIG")]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<SystemConfig> {
        match &self.config {
            Some(path) => {
                SystemConfig::load(path).with_context(|| format!("loading {}", path.display()))
            }
            None => Ok(SystemConfig::default()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo spectral-efficiency sweep over SNR.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        trials: Option<usize>,
        /// `start:stop:step` in dB, or a single value.
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory for trials.csv and summary.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-iteration SI trace of one design at 0 dB SNR.
    Converge {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form flop counts per beamformer.
    Flops {
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Writes one channel realisation as text matrices.
    ExportChannels {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate {
            config,
            trials,
            snr,
            seed,
            threads,
            out,
        } => {
            let mut cfg = config.load()?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = snr {
                cfg.snr_db = parse_snr_range(&s)?;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(t) = threads {
                cfg.threads = t;
            }
            simulate(&cfg, out)
        }
        Command::Converge { config, seed, out } => {
            let cfg = config.load()?;
            let study = harness::run_convergence_study(&cfg, seed)?;
            harness::export_trace(&study, &out)?;
            let t = &study.trace;
            println!(
                "seed {seed}: {} passes, converged {}, analog SI {:.3} -> {:.3} ({:.1}x)",
                t.iterations,
                t.converged,
                t.initial_analog_si,
                t.final_analog_si(),
                t.analog_reduction()
            );
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Flops { config } => {
            let report = harness::flop_report(&config.load()?)?;
            println!(
                "{:<10} {:>10} {:>10}  dominant",
                "beamformer", "flops", "published"
            );
            for e in &report.entries {
                let published = e
                    .published
                    .map_or_else(|| "-".to_string(), |p| p.to_string());
                println!(
                    "{:<10} {:>10} {:>10}  {} ({:.1}% of row, {:.1}% of total)",
                    e.beamformer,
                    e.flops,
                    published,
                    e.dominant_term,
                    100.0 * e.dominant_share,
                    100.0 * e.dominant_share_of_total
                );
            }
            println!("{:<10} {:>10}", "total", report.total);
            Ok(())
        }
        Command::ExportChannels { config, seed, out } => {
            let cfg = config.load()?;
            let channels = cfg.channel_model().realize(seed)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for (name, h) in [
                ("backhaul", &channels.backhaul),
                ("access", &channels.access),
                ("self_interference", &channels.self_interference),
            ] {
                matfile::write(out.join(format!("{name}.txt")), h)?;
            }
            println!("wrote channels for seed {seed} to {}", out.display());
            Ok(())
        }
    }
}

fn simulate(cfg: &SystemConfig, out: PathBuf) -> Result<()> {
    eprintln!("note: the svd_baseline scheme stands in for the external comparator of the reference study");
    let records = harness::run_sweep(cfg)?;
    let flagged = records.iter().filter(|r| r.flagged()).count();
    let (trials, summary) = harness::export_results(&records, &out)?;
    let rows = harness::summarize(&records);
    println!(
        "{:>7} {:<13} {:>9} {:>8}",
        "snr_db", "scheme", "mean", "ci95"
    );
    for r in &rows {
        println!(
            "{:>7.1} {:<13} {:>9.3} {:>8.3}",
            r.snr_db, r.scheme, r.mean_sum_se_bits, r.ci95_half_width
        );
    }
    for gap in harness::gap_reports(&rows, 5.0) {
        println!(
            "gain over {} at 5 dB: {:.2} bits (published {:.2}, {})",
            gap.versus.name(),
            gap.measured,
            gap.published,
            if gap.within_advisory_band() {
                "within ±50%"
            } else {
                "outside ±50%"
            }
        );
    }
    if flagged > 0 {
        eprintln!("{flagged} of {} records had design failures", records.len());
    }
    println!("wrote {} and {}", trials.display(), summary.display());
    Ok(())
}
