use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use semcom_core::channel::{parse_snr, ChannelConfig, ChannelKind};
use semcom_core::cloud::PointCloud;
use semcom_core::correction::{selective_denoise, CorrectionContext, DenoiserConfig, TargetMode};
use semcom_core::geometry::{KeypointFrame, IMAGE_HEIGHT, IMAGE_WIDTH, KEYPOINT_COUNT};
use semcom_core::harness::{
    plot_emit, sweep, write_scatter_csv, ExperimentConfig, PlotFilter, PlotKind, Session,
};
use semcom_core::metrics::{chamfer_modified, p2point};
use semcom_core::{Error, Framework};
use serde_json::json;

const EXIT_CONFIG: u8 = 2;
const EXIT_NO_SUCCESS: u8 = 3;

#[derive(Parser)]
#[command(name = "semcom", version, about = "Semantic point-cloud communication simulator")]
struct Cli {
    /// Overrides the configured base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial and print its metrics as JSON.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "gscs_ot")]
        framework: Framework,
        #[arg(long, default_value = "rician")]
        channel: ChannelKind,
        /// dB, or `inf` for a noiseless channel.
        #[arg(long, default_value = "0", value_parser = snr_arg)]
        snr: f64,
        #[arg(long, default_value_t = 0)]
        frame: u64,
        /// Also write transmitted/received/denoised keypoints here.
        #[arg(long)]
        scatter_csv: Option<PathBuf>,
    },
    /// Run the full grid and write runs.csv and summary.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correct a keypoint file (columns view_id,keypoint,u,v) with the OT denoiser.
    Denoise {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        eta: f64,
        /// Flag threshold in pixels (default: 2% of the image diagonal).
        #[arg(long)]
        delta: Option<f64>,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, num_args = 2, value_names = ["W", "H"], default_values_t = [IMAGE_WIDTH, IMAGE_HEIGHT])]
        image_size: Vec<u32>,
    },
    /// Chamfer and P2Point between two PLY clouds.
    Metrics {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Render SVG charts from a runs CSV (or a scatter CSV for scatter_denoise).
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        kind: PlotKind,
        /// Output directory (default: next to the CSV).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        framework: Option<Vec<Framework>>,
        #[arg(long, value_delimiter = ',')]
        channel: Option<Vec<ChannelKind>>,
        #[arg(long, value_delimiter = ',')]
        view: Option<Vec<usize>>,
    },
}

fn snr_arg(s: &str) -> Result<f64, String> {
    parse_snr(s).map_err(|e| e.to_string())
}

enum Failure {
    Core(Error),
    NoSuccess(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Core(e.into())
    }
}

fn load_config(path: Option<&Path>, cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(
    cli: &Cli,
    config: Option<&Path>,
    framework: Framework,
    kind: ChannelKind,
    snr: f64,
    frame: u64,
    scatter_csv: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = load_config(config, cli)?;
    let session = Session::new(&cfg)?;
    let mut channel = ChannelConfig::new(kind, snr, cfg.seed);
    channel.rician_k = cfg.rician_k;
    channel.validate()?;
    let record = session.run_trial(framework, channel, frame);
    if let Some(path) = scatter_csv {
        let (_, trace) = session.trace_trial(framework, channel, frame)?;
        write_scatter_csv(&trace, BufWriter::new(File::create(path)?))?;
    }
    let doc = json!({
        "framework": framework.as_str(),
        "channel": kind.as_str(),
        "snr_db": semcom_core::channel::format_snr(snr),
        "seed": cfg.seed,
        "frame": frame,
        "status": record.status_text(),
        "metrics": record.metrics,
    });
    println!("{}", serde_json::to_string_pretty(&doc).map_err(Error::from)?);
    if !record.is_success() {
        return Err(Failure::NoSuccess(record.status_text()));
    }
    Ok(())
}

fn run_sweep(cli: &Cli, config: &Path, out: &Path) -> Result<(), Failure> {
    let cfg = load_config(Some(config), cli)?;
    let outcome = sweep(&cfg, out)?;
    eprintln!(
        "{} of {} trials succeeded; wrote {} and {}",
        outcome.ok_rows,
        outcome.rows.len(),
        outcome.runs_csv.display(),
        outcome.summary_csv.display()
    );
    if outcome.ok_rows == 0 {
        return Err(Failure::NoSuccess("no successful trials".into()));
    }
    Ok(())
}

fn parse_location(path: &Path, row: usize, what: impl Into<String>) -> Error {
    Error::Parse { location: format!("{} row {row}", path.display()), message: what.into() }
}

/// Reads `view_id,keypoint,u,v` rows into complete, ordered frames.
fn read_keypoint_csv(path: &Path) -> Result<Vec<KeypointFrame>, Error> {
    let mut reader = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let mut cells: Vec<[Option<[f64; 2]>; KEYPOINT_COUNT]> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        if rec.len() < 4 {
            return Err(parse_location(path, row, format!("expected 4 columns, found {}", rec.len())));
        }
        let field = |c: usize| rec[c].trim().to_string();
        let view: usize = field(0).parse().map_err(|_| parse_location(path, row, "bad view_id"))?;
        let kp: usize = field(1).parse().map_err(|_| parse_location(path, row, "bad keypoint"))?;
        let u: f64 = field(2).parse().map_err(|_| parse_location(path, row, "bad u"))?;
        let v: f64 = field(3).parse().map_err(|_| parse_location(path, row, "bad v"))?;
        if kp >= KEYPOINT_COUNT {
            return Err(parse_location(path, row, format!("keypoint index {kp} out of range")));
        }
        if cells.len() <= view {
            cells.resize(view + 1, [None; KEYPOINT_COUNT]);
        }
        if cells[view][kp].replace([u, v]).is_some() {
            return Err(parse_location(path, row, format!("duplicate view {view} keypoint {kp}")));
        }
    }
    cells
        .into_iter()
        .enumerate()
        .map(|(view, kps)| {
            let mut keypoints = [[0.0; 2]; KEYPOINT_COUNT];
            for (k, slot) in kps.iter().enumerate() {
                keypoints[k] = slot.ok_or_else(|| {
                    Error::Parse { location: path.display().to_string(), message: format!("view {view} lacks keypoint {k}") }
                })?;
            }
            Ok(KeypointFrame { view_id: view, theta: 0.0, keypoints, validity: [true; KEYPOINT_COUNT], clamped: false })
        })
        .collect()
}

fn denoise(input: &Path, eta: f64, delta: Option<f64>, out: Option<&Path>, image_size: [u32; 2]) -> Result<(), Failure> {
    let frames = read_keypoint_csv(input)?;
    let cfg = DenoiserConfig { eta, delta, target_mode: TargetMode::NeighborInterp, ..Default::default() };
    cfg.validate()?;
    let ctx = CorrectionContext { image_size, kb: None, transmitted: None };
    let result = selective_denoise(&frames, &cfg, &ctx)?;
    log::info!("{} keypoints flagged", result.flags.count());
    let sink: Box<dyn std::io::Write> = match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["view_id", "keypoint", "u", "v", "flagged"])?;
    for (frame, flags) in result.frames.iter().zip(&result.flags.flags) {
        for (k, p) in frame.keypoints.iter().enumerate() {
            w.write_record([
                frame.view_id.to_string(),
                k.to_string(),
                p[0].to_string(),
                p[1].to_string(),
                u8::from(flags[k]).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn metrics(reference: &Path, test: &Path) -> Result<(), Failure> {
    let read = |p: &Path| -> Result<PointCloud<f64>, Error> { PointCloud::read_ply(BufReader::new(File::open(p)?)) };
    let (pt, pr) = (read(reference)?, read(test)?);
    let doc = json!({ "chamfer_m2": chamfer_modified(&pt, &pr)?, "p2point_m": p2point(&pt, &pr)? });
    println!("{}", serde_json::to_string_pretty(&doc).map_err(Error::from)?);
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Simulate { config, framework, channel, snr, frame, scatter_csv } => {
            simulate(cli, config.as_deref(), *framework, *channel, *snr, *frame, scatter_csv.as_deref())
        }
        Command::Sweep { config, out } => run_sweep(cli, config, out),
        Command::Denoise { input, eta, delta, out, image_size } => {
            denoise(input, *eta, *delta, out.as_deref(), [image_size[0], image_size[1]])
        }
        Command::Metrics { reference, test } => metrics(reference, test),
        Command::Plot { csv, kind, out, framework, channel, view } => {
            let out_dir = match out {
                Some(d) => d.clone(),
                None => csv.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            let filter = PlotFilter { frameworks: framework.clone(), channels: channel.clone(), views: view.clone() };
            for path in plot_emit(csv, *kind, &out_dir, &filter)? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NoSuccess(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NO_SUCCESS)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Json(_) => ExitCode::from(EXIT_CONFIG),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
