//! Static SVG charts from the sweep and scatter CSV files.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::channel::{parse_snr, ChannelKind};
use crate::error::{Error, Result};
use crate::framework::Framework;
use crate::metrics::{LatencyLedger, MetricsReport};

use super::sweep::{summarize, RUNS_HEADER};
use super::trial::{RunRecord, TrialStatus, TrialTrace};

pub const SCATTER_HEADER: [&str; 5] = ["set", "view", "keypoint", "u", "v"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Kpe,
    P2point,
    Latency,
    ScatterDenoise,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kpe" => Ok(PlotKind::Kpe),
            "p2point" => Ok(PlotKind::P2point),
            "latency" => Ok(PlotKind::Latency),
            "scatter_denoise" => Ok(PlotKind::ScatterDenoise),
            _ => Err(Error::config(format!(
                "unknown plot kind `{s}` (expected kpe, p2point, latency or scatter_denoise)"
            ))),
        }
    }
}

impl PlotKind {
    fn as_str(self) -> &'static str {
        match self {
            PlotKind::Kpe => "kpe",
            PlotKind::P2point => "p2point",
            PlotKind::Latency => "latency",
            PlotKind::ScatterDenoise => "scatter_denoise",
        }
    }
}

/// Row selection; `None` keeps everything.
#[derive(Debug, Clone, Default)]
pub struct PlotFilter {
    pub frameworks: Option<Vec<Framework>>,
    pub channels: Option<Vec<ChannelKind>>,
    /// Scatter plots only.
    pub views: Option<Vec<usize>>,
}

fn field<T: FromStr>(rec: &csv::StringRecord, row: usize, col: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let text = rec.get(col).unwrap_or("");
    text.parse::<T>().map_err(|e| {
        Error::parse(
            format!("row {row}, column {col} ({})", RUNS_HEADER.get(col).unwrap_or(&"?")),
            format!("`{text}`: {e}"),
        )
    })
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers()?.clone();
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::parse(
            "row 1",
            format!("expected header `{}`, found `{}`", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(())
}

/// Parses a runs CSV written by the sweep. Rows are numbered from 1 with the
/// header as row 1.
pub fn read_runs_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    check_header(&mut rdr, &RUNS_HEADER)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        if rec.len() != RUNS_HEADER.len() {
            return Err(Error::parse(
                format!("row {row}"),
                format!("expected {} columns, found {}", RUNS_HEADER.len(), rec.len()),
            ));
        }
        let status_text = rec.get(14).unwrap_or("");
        let (status, message) = match status_text {
            "ok" => (TrialStatus::Ok, None),
            "degraded" => (TrialStatus::Degraded, None),
            s if s.starts_with("error") => (
                TrialStatus::Error,
                s.strip_prefix("error: ").map(str::to_owned),
            ),
            other => {
                return Err(Error::parse(
                    format!("row {row}, column 14 (status)"),
                    format!("unknown status `{other}`"),
                ))
            }
        };
        let snr_text = rec.get(2).unwrap_or("");
        let snr_db = parse_snr(snr_text).map_err(|_| {
            Error::parse(format!("row {row}, column 2 (snr_db)"), format!("`{snr_text}` is not an SNR"))
        })?;
        let metrics = if status == TrialStatus::Error {
            None
        } else {
            Some(MetricsReport {
                kpe: field(&rec, row, 5)?,
                chamfer: field(&rec, row, 6)?,
                p2point: field(&rec, row, 7)?,
                latency: LatencyLedger {
                    t_semantic: field(&rec, row, 8)?,
                    t_wireless: field(&rec, row, 9)?,
                    t_ot: field(&rec, row, 10)?,
                    t_generation: field(&rec, row, 11)?,
                    total: field(&rec, row, 12)?,
                },
                payload_bits: field(&rec, row, 13)?,
            })
        };
        rows.push(RunRecord {
            framework: field(&rec, row, 0)?,
            channel: field(&rec, row, 1)?,
            snr_db,
            seed: field(&rec, row, 3)?,
            frame: field(&rec, row, 4)?,
            metrics,
            status,
            message,
        });
    }
    Ok(rows)
}

/// Writes the transmitted / received / corrected keypoints of a trial.
pub fn write_scatter_csv<W: Write>(trace: &TrialTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCATTER_HEADER)?;
    for (set, frames) in [
        ("transmitted", &trace.transmitted),
        ("received", &trace.received),
        ("denoised", &trace.corrected),
    ] {
        for f in frames {
            for (k, p) in f.keypoints.iter().enumerate() {
                w.write_record([set.to_owned(), f.view_id.to_string(), k.to_string(), p[0].to_string(), p[1].to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Style {
    Lines,
    Markers,
}

/// A minimal chart: titled axes and named series.
#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<(String, Vec<(f64, f64)>)>,
    /// Flip the y axis (image coordinates).
    pub y_down: bool,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const W: f64 = 720.0;
const H: f64 = 480.0;
const MARGIN: [f64; 4] = [70.0, 170.0, 50.0, 60.0]; // left, right, top, bottom

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + hi.abs()) {
        let pad = if hi == 0.0 { 1.0 } else { hi.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn render(chart: &Chart, style: Style) -> String {
    let pts = chart.series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (x0, x1) = nice_range(x0, x1);
    let (y0, y1) = nice_range(y0, y1);
    let [ml, mr, mt, mb] = MARGIN;
    let pw = W - ml - mr;
    let ph = H - mt - mb;
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| {
        let t = (y - y0) / (y1 - y0);
        if chart.y_down { mt + t * ph } else { mt + (1.0 - t) * ph }
    };

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="28" text-anchor="middle" font-size="15">{}</text>"#, ml + pw / 2.0, esc(&chart.title));
    let _ = writeln!(s, r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = x0 + t * (x1 - x0);
        let yv = y0 + t * (y1 - y0);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(s, r##"<line x1="{px:.2}" y1="{mt}" x2="{px:.2}" y2="{}" stroke="#ddd"/>"##, mt + ph);
        let _ = writeln!(s, r##"<line x1="{ml}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#ddd"/>"##, ml + pw);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{xv:.3}</text>"#, mt + ph + 18.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{yv:.4}</text>"#, ml - 6.0, py + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, ml + pw / 2.0, H - 15.0, esc(&chart.x_label));
    let _ = writeln!(s, r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#, mt + ph / 2.0, mt + ph / 2.0, esc(&chart.y_label));

    for (i, (name, points)) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(s, r#"<g class="series" data-name="{}">"#, esc(name));
        match style {
            Style::Lines => {
                let path: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, path.join(" "));
                for &(x, y) in points {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
                }
            }
            Style::Markers => {
                for &(x, y) in points {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}" fill-opacity="0.6"/>"#, sx(x), sy(y));
                }
            }
        }
        let _ = writeln!(s, "</g>");
        let ly = mt + 10.0 + 20.0 * i as f64;
        let lx = ml + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<g class="legend-entry"><rect x="{lx}" y="{}" width="12" height="12" fill="{color}"/><text x="{}" y="{}">{}</text></g>"#,
            ly - 10.0,
            lx + 18.0,
            ly,
            esc(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn render_line_chart(chart: &Chart) -> String {
    render(chart, Style::Lines)
}

pub fn render_scatter_chart(chart: &Chart) -> String {
    render(chart, Style::Markers)
}

fn metric_charts(rows: &[RunRecord], kind: PlotKind, filter: &PlotFilter) -> Result<Vec<(String, Chart)>> {
    let kept: Vec<RunRecord> = rows
        .iter()
        .filter(|r| filter.frameworks.as_ref().is_none_or(|f| f.contains(&r.framework)))
        .filter(|r| filter.channels.as_ref().is_none_or(|c| c.contains(&r.channel)))
        .filter(|r| r.is_success() && r.snr_db.is_finite())
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(Error::config("the filter selects no successful finite-SNR rows"));
    }
    let summary = summarize(&kept);
    let (label, pick): (&str, fn(&super::sweep::SummaryRow) -> f64) = match kind {
        PlotKind::Kpe => ("median KPE (px)", |s| s.kpe.0),
        PlotKind::P2point => ("median P2Point (m)", |s| s.p2point.0),
        PlotKind::Latency => ("median total latency (s)", |s| s.total.0),
        PlotKind::ScatterDenoise => unreachable!(),
    };
    let mut channels: Vec<ChannelKind> = summary.iter().map(|s| s.channel).collect();
    channels.dedup();
    channels.sort();
    channels.dedup();
    Ok(channels
        .into_iter()
        .map(|ch| {
            let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
            for s in summary.iter().filter(|s| s.channel == ch) {
                let name = s.framework.to_string();
                let pt = (s.snr_db, pick(s));
                match series.iter_mut().find(|(n, _)| *n == name) {
                    Some((_, pts)) => pts.push(pt),
                    None => series.push((name, vec![pt])),
                }
            }
            for (_, pts) in &mut series {
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            }
            let chart = Chart {
                title: format!("{label} vs SNR, {ch} channel"),
                x_label: "SNR (dB)".into(),
                y_label: label.into(),
                series,
                y_down: false,
            };
            (format!("{}_{ch}.svg", kind.as_str()), chart)
        })
        .collect())
}

fn scatter_chart<R: Read>(input: R, filter: &PlotFilter) -> Result<Chart> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &SCATTER_HEADER)?;
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        let get = |c: usize| -> Result<f64> {
            let t = rec.get(c).unwrap_or("");
            t.parse().map_err(|_| Error::parse(format!("row {row}, column {c} ({})", SCATTER_HEADER[c]), format!("`{t}` is not a number")))
        };
        let view = get(1)? as usize;
        if filter.views.as_ref().is_some_and(|v| !v.contains(&view)) {
            continue;
        }
        let set = rec.get(0).unwrap_or("").to_owned();
        let pt = (get(3)?, get(4)?);
        match series.iter_mut().find(|(n, _)| *n == set) {
            Some((_, pts)) => pts.push(pt),
            None => series.push((set, vec![pt])),
        }
    }
    if series.is_empty() {
        return Err(Error::config("the filter selects no scatter points"));
    }
    Ok(Chart {
        title: "keypoints: transmitted / received / denoised".into(),
        x_label: "u (px)".into(),
        y_label: "v (px)".into(),
        series,
        y_down: true,
    })
}

/// Reads `csv_path` and writes the requested charts into `out_dir`.
/// Nothing is written when the selection is empty or the file is malformed.
pub fn plot_emit(csv_path: &Path, kind: PlotKind, out_dir: &Path, filter: &PlotFilter) -> Result<Vec<PathBuf>> {
    let file = std::fs::File::open(csv_path)?;
    let charts: Vec<(String, String)> = match kind {
        PlotKind::ScatterDenoise => {
            let chart = scatter_chart(file, filter)?;
            vec![("scatter_denoise.svg".into(), render_scatter_chart(&chart))]
        }
        _ => {
            let rows = read_runs_csv(file)?;
            metric_charts(&rows, kind, filter)?
                .into_iter()
                .map(|(name, c)| (name, render_line_chart(&c)))
                .collect()
        }
    };
    std::fs::create_dir_all(out_dir)?;
    charts
        .into_iter()
        .map(|(name, svg)| {
            let path = out_dir.join(name);
            std::fs::write(&path, svg)?;
            Ok(path)
        })
        .collect()
}
