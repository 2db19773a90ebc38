use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::channel::{format_snr, ChannelConfig, ChannelKind};
use crate::error::{Error, Result};
use crate::framework::Framework;

use super::config::ExperimentConfig;
use super::trial::{RunRecord, Session};

pub const RUNS_HEADER: [&str; 15] = [
    "framework", "channel", "snr_db", "seed", "frame", "kpe_px", "chamfer_m2", "p2point_m", "t_s",
    "t_w", "t_o", "t_g", "total_s", "payload_bits", "status",
];

pub const SUMMARY_HEADER: [&str; 12] = [
    "framework", "channel", "snr_db", "n_ok", "kpe_median", "kpe_iqr", "chamfer_median",
    "chamfer_iqr", "p2point_median", "p2point_iqr", "total_median", "total_iqr",
];

/// One cell of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSpec {
    pub framework: Framework,
    pub channel: ChannelConfig,
    pub frame: u64,
}

/// Grid in output order: framework, channel, SNR, trial, frame.
pub fn trial_specs(cfg: &ExperimentConfig) -> Vec<TrialSpec> {
    let mut specs = Vec::new();
    for &framework in &cfg.frameworks {
        for &kind in &cfg.channels {
            for &snr in &cfg.snr_list_db {
                for trial in 0..cfg.trials {
                    for frame in 0..cfg.frames {
                        let mut channel = ChannelConfig::new(kind, snr, cfg.seed.wrapping_add(trial as u64));
                        channel.rician_k = cfg.rician_k;
                        specs.push(TrialSpec { framework, channel, frame });
                    }
                }
            }
        }
    }
    specs
}

/// Runs every trial of the grid on `workers` threads. Rows come back in
/// grid order whatever the scheduling.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let session = Session::new(cfg)?;
    let specs = trial_specs(cfg);
    let run = || -> Vec<RunRecord> {
        specs
            .par_iter()
            .map(|s| session.run_trial(s.framework, s.channel, s.frame))
            .collect()
    };
    let rows = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(format!("cannot start {n} workers: {e}")))?
            .install(run),
        None => run(),
    };
    Ok(rows)
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn write_runs_csv<W: Write>(rows: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUNS_HEADER)?;
    for r in rows {
        let mut rec = vec![
            r.framework.to_string(),
            r.channel.to_string(),
            format_snr(r.snr_db),
            r.seed.to_string(),
            r.frame.to_string(),
        ];
        match &r.metrics {
            Some(m) => rec.extend([
                num(m.kpe),
                num(m.chamfer),
                num(m.p2point),
                num(m.latency.t_semantic),
                num(m.latency.t_wireless),
                num(m.latency.t_ot),
                num(m.latency.t_generation),
                num(m.latency.total),
                m.payload_bits.to_string(),
            ]),
            None => rec.extend(std::iter::repeat_n(String::new(), 9)),
        }
        rec.push(r.status_text());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median and interquartile range.
pub fn median_iqr(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    (quantile(&v, 0.5), quantile(&v, 0.75) - quantile(&v, 0.25))
}

/// Aggregate statistics of the successful rows in one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub framework: Framework,
    pub channel: ChannelKind,
    pub snr_db: f64,
    pub n_ok: usize,
    pub kpe: (f64, f64),
    pub chamfer: (f64, f64),
    pub p2point: (f64, f64),
    pub total: (f64, f64),
}

/// Groups rows by (framework, channel, SNR) in first-appearance order.
pub fn summarize(rows: &[RunRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Framework, ChannelKind, u64)> = Vec::new();
    for r in rows {
        let k = (r.framework, r.channel, r.snr_db.to_bits());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(framework, channel, snr_bits)| {
            let ok: Vec<_> = rows
                .iter()
                .filter(|r| r.framework == framework && r.channel == channel && r.snr_db.to_bits() == snr_bits)
                .filter_map(|r| r.metrics.filter(|_| r.is_success()))
                .collect();
            let col = |f: fn(&crate::metrics::MetricsReport) -> f64| median_iqr(&ok.iter().map(f).collect::<Vec<_>>());
            SummaryRow {
                framework,
                channel,
                snr_db: f64::from_bits(snr_bits),
                n_ok: ok.len(),
                kpe: col(|m| m.kpe),
                chamfer: col(|m| m.chamfer),
                p2point: col(|m| m.p2point),
                total: col(|m| m.latency.total),
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for s in rows {
        w.write_record([
            s.framework.to_string(),
            s.channel.to_string(),
            format_snr(s.snr_db),
            s.n_ok.to_string(),
            num(s.kpe.0),
            num(s.kpe.1),
            num(s.chamfer.0),
            num(s.chamfer.1),
            num(s.p2point.0),
            num(s.p2point.1),
            num(s.total.0),
            num(s.total.1),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<RunRecord>,
    pub ok_rows: usize,
    pub runs_csv: PathBuf,
    pub summary_csv: PathBuf,
}

/// Runs the grid and writes `runs.csv` and `summary.csv` into `out_dir`.
pub fn sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<SweepOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let rows = run_sweep(cfg)?;
    let runs_csv = out_dir.join("runs.csv");
    let summary_csv = out_dir.join("summary.csv");
    write_runs_csv(&rows, std::io::BufWriter::new(std::fs::File::create(&runs_csv)?))?;
    write_summary_csv(&summarize(&rows), std::io::BufWriter::new(std::fs::File::create(&summary_csv)?))?;
    let ok_rows = rows.iter().filter(|r| r.is_success()).count();
    Ok(SweepOutcome { rows, ok_rows, runs_csv, summary_csv })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(median_iqr(&[4.0, 1.0, 3.0, 2.0]), (2.5, 1.5));
        assert_eq!(median_iqr(&[7.0]), (7.0, 0.0));
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn grid_size_and_seeds() {
        let cfg = ExperimentConfig {
            frameworks: vec![Framework::Gscs, Framework::GscsOt],
            channels: vec![ChannelKind::Awgn],
            snr_list_db: vec![0.0, 10.0, 20.0],
            trials: 10,
            ..Default::default()
        };
        let specs = trial_specs(&cfg);
        assert_eq!(specs.len(), 60);
        assert_eq!(specs[0].channel.seed, 42);
        assert_eq!(specs[9].channel.seed, 51);
        assert_eq!(specs[10].channel.snr_db, 10.0);
    }
}
