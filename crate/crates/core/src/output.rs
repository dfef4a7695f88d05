//! File formats: CSV with a fixed 12-significant-digit float encoding,
//! JSON fit records, run manifests for bit-exact replay, and small
//! self-contained SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::PhaseDiagram;
use crate::config::RawConfig;
use crate::sweep::Spectrum;
use crate::units::rad_per_us_to_mhz;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {detail}")]
    Malformed {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("manifest in {path}: {source}")]
    ManifestParse {
        path: PathBuf,
        source: Box<toml::de::Error>,
    },
    #[error("manifest serialization: {0}")]
    ManifestEncode(#[from] toml::ser::Error),
}

/// Floats in CSV files carry 12 significant digits in scientific notation,
/// enough to reconstruct the f64 for regression comparison while keeping
/// files diffable.
pub fn fmt_sig(v: f64) -> String {
    format!("{:.11e}", v)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, OutputError> {
    let file = fs::File::create(path).map_err(|source| OutputError::Write {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(BufWriter::new(file))
}

fn finish(mut w: BufWriter<fs::File>, path: &Path) -> Result<(), OutputError> {
    w.flush().map_err(|source| OutputError::Write {
        path: path.to_path_buf(),
        source,
    })
}

macro_rules! emit {
    ($w:expr, $path:expr, $($arg:tt)*) => {
        writeln!($w, $($arg)*).map_err(|source| OutputError::Write {
            path: $path.to_path_buf(),
            source,
        })?
    };
}

/// Spectrum CSV: `delta_c_mhz,transmission,branch_x,direction`, one section
/// per scan, each section sorted by ascending delta_c regardless of scan
/// direction so that paired scans differ only where the physics does (and
/// in the direction column).
pub fn write_spectrum_csv(path: &Path, spectra: &[&Spectrum]) -> Result<(), OutputError> {
    let mut w = create(path)?;
    emit!(w, path, "delta_c_mhz,transmission,branch_x,direction");
    for spectrum in spectra {
        let label = spectrum.direction.label();
        for (dc, t, x) in spectrum.ascending() {
            emit!(
                w,
                path,
                "{},{},{},{}",
                fmt_sig(rad_per_us_to_mhz(dc)),
                fmt_sig(t),
                fmt_sig(x),
                label
            );
        }
    }
    finish(w, path)
}

/// Phase-map CSV: first row is the coupling-detuning axis in MHz behind an
/// empty corner cell; each following row is one control value followed by
/// |T_forward - T_backward| across the detuning grid.
pub fn write_phasemap_csv(path: &Path, map: &PhaseDiagram) -> Result<(), OutputError> {
    let mut w = create(path)?;
    let header: Vec<String> = std::iter::once(String::new())
        .chain(map.delta_c.iter().map(|&d| fmt_sig(rad_per_us_to_mhz(d))))
        .collect();
    emit!(w, path, "{}", header.join(","));
    let controls = map.axis.file_values();
    for (control, diff) in controls.iter().zip(map.difference_matrix()) {
        let row: Vec<String> = std::iter::once(fmt_sig(*control))
            .chain(diff.iter().map(|d| fmt_sig(d.abs())))
            .collect();
        emit!(w, path, "{}", row.join(","));
    }
    finish(w, path)
}

/// Sidecar region table: per control row, the red-side bistable interval
/// (lowest-center region) or `nan` fields when the row has none.
pub fn write_regions_csv(
    path: &Path,
    map: &PhaseDiagram,
    epsilon: f64,
) -> Result<(), OutputError> {
    let mut w = create(path)?;
    emit!(w, path, "{},lo_mhz,hi_mhz,center_mhz", map.axis.file_label());
    let controls = map.axis.file_values();
    for (control, regions) in controls.iter().zip(map.regions(epsilon)) {
        match crate::analysis::red_side_region(&regions) {
            Some(r) => emit!(
                w,
                path,
                "{},{},{},{}",
                fmt_sig(*control),
                fmt_sig(rad_per_us_to_mhz(r.lo)),
                fmt_sig(rad_per_us_to_mhz(r.hi)),
                fmt_sig(rad_per_us_to_mhz(r.center()))
            ),
            None => emit!(w, path, "{},nan,nan,nan", fmt_sig(*control)),
        }
    }
    finish(w, path)
}

/// Pretty-printed JSON for fit records, calibrations and estimates.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), OutputError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| OutputError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    writeln!(w).map_err(|source| OutputError::Write {
        path: path.to_path_buf(),
        source,
    })?;
    finish(w, path)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, OutputError> {
    let text = fs::read_to_string(path).map_err(|source| OutputError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| OutputError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Two-column numeric CSV (optional header on the first line).
pub fn read_xy_csv(path: &Path) -> Result<Vec<(f64, f64)>, OutputError> {
    let text = fs::read_to_string(path).map_err(|source| OutputError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let a = fields.next().unwrap_or("").trim();
        let b = fields.next().unwrap_or("").trim();
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) => rows.push((x, y)),
            _ if k == 0 => continue, // header
            _ => {
                return Err(OutputError::Malformed {
                    path: path.to_path_buf(),
                    line: k + 1,
                    detail: format!("expected two numbers, got {line:?}"),
                })
            }
        }
    }
    if rows.is_empty() {
        return Err(OutputError::Malformed {
            path: path.to_path_buf(),
            line: 1,
            detail: "no numeric rows".into(),
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

/// Everything needed to reproduce a run bit-exactly: the resolved raw
/// configuration snapshot and the typed arguments of the subcommand. The
/// `replay` subcommand re-executes from this file alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Files the run wrote, in the order written.
    pub outputs: Vec<PathBuf>,
    pub duration_ms: u64,
    /// Typed argument table of the subcommand, as serialized by the CLI.
    pub args: toml::Table,
    /// Configuration snapshot; replay resolves this instead of re-reading
    /// the original config file.
    pub config: RawConfig,
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), OutputError> {
    let text = toml::to_string_pretty(manifest)?;
    fs::write(path, text).map_err(|source| OutputError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, OutputError> {
    let text = fs::read_to_string(path).map_err(|source| OutputError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|source| OutputError::ManifestParse {
        path: path.to_path_buf(),
        source: Box::new(source),
    })
}

// ---------------------------------------------------------------------------
// SVG rendering
// ---------------------------------------------------------------------------

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xmin) / (self.xmax - self.xmin) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.ymin) / (self.ymax - self.ymin) * self.h
    }
}

fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

fn axes(svg: &mut String, f: &Frame, x_label: &str, y_label: &str, title: &str) {
    let _ = write!(
        svg,
        "<rect x='{}' y='{}' width='{}' height='{}' fill='none' stroke='#444'/>",
        f.x0, f.y0, f.w, f.h
    );
    let _ = write!(
        svg,
        "<text x='{}' y='20' font-size='15' text-anchor='middle' font-family='sans-serif'>{}</text>",
        f.x0 + f.w / 2.0,
        title
    );
    for t in ticks(f.xmin, f.xmax, 6) {
        let x = f.px(t);
        let _ = write!(
            svg,
            "<line x1='{x}' y1='{}' x2='{x}' y2='{}' stroke='#444'/>\
             <text x='{x}' y='{}' font-size='11' text-anchor='middle' font-family='sans-serif'>{:.4}</text>",
            f.y0 + f.h,
            f.y0 + f.h + 5.0,
            f.y0 + f.h + 18.0,
            t
        );
    }
    for t in ticks(f.ymin, f.ymax, 6) {
        let y = f.py(t);
        let _ = write!(
            svg,
            "<line x1='{}' y1='{y}' x2='{}' y2='{y}' stroke='#444'/>\
             <text x='{}' y='{}' font-size='11' text-anchor='end' font-family='sans-serif'>{:.4}</text>",
            f.x0 - 5.0,
            f.x0,
            f.x0 - 8.0,
            y + 4.0,
            t
        );
    }
    let _ = write!(
        svg,
        "<text x='{}' y='{}' font-size='13' text-anchor='middle' font-family='sans-serif'>{}</text>",
        f.x0 + f.w / 2.0,
        f.y0 + f.h + 38.0,
        x_label
    );
    let yc = f.y0 + f.h / 2.0;
    let _ = write!(
        svg,
        "<text x='16' y='{yc}' font-size='13' text-anchor='middle' font-family='sans-serif' \
         transform='rotate(-90 16 {yc})'>{}</text>",
        y_label
    );
}

/// Line plot of one or more (x, y) series with a legend.
pub fn svg_line_plot(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(&str, Vec<(f64, f64)>)],
) -> Result<(), OutputError> {
    assert!(!series.is_empty() && series.iter().all(|s| s.1.len() >= 2));
    let all = series.iter().flat_map(|s| s.1.iter());
    let (mut xmin, mut xmax, mut ymin, mut ymax) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    if ymax - ymin < 1e-12 {
        ymin -= 0.5;
        ymax += 0.5;
    }
    let pad = 0.04 * (ymax - ymin);
    let f = Frame {
        x0: 70.0,
        y0: 34.0,
        w: 720.0,
        h: 420.0,
        xmin,
        xmax,
        ymin: ymin - pad,
        ymax: ymax + pad,
    };
    let mut svg = String::from(
        "<svg xmlns='http://www.w3.org/2000/svg' width='860' height='520' viewBox='0 0 860 520'>\
         <rect width='860' height='520' fill='white'/>",
    );
    axes(&mut svg, &f, x_label, y_label, title);
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let _ = write!(
            svg,
            "<polyline points='{}' fill='none' stroke='{color}' stroke-width='1.6'/>",
            coords.join(" ")
        );
        let ly = 44.0 + 16.0 * k as f64;
        let _ = write!(
            svg,
            "<line x1='700' y1='{ly}' x2='724' y2='{ly}' stroke='{color}' stroke-width='2'/>\
             <text x='730' y='{}' font-size='12' font-family='sans-serif'>{name}</text>",
            ly + 4.0
        );
    }
    svg.push_str("</svg>");
    fs::write(path, svg).map_err(|source| OutputError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn ramp(t: f64) -> String {
    // Dark violet -> magenta -> yellow, linearly in two segments.
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64, u: f64| (a + (b - a) * u).round() as u8;
    let (r, g, b) = if t < 0.5 {
        let u = t * 2.0;
        (lerp(13.0, 204.0, u), lerp(8.0, 71.0, u), lerp(135.0, 120.0, u))
    } else {
        let u = t * 2.0 - 1.0;
        (lerp(204.0, 240.0, u), lerp(71.0, 249.0, u), lerp(120.0, 33.0, u))
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Heat map of a row-major matrix over (x axis, y axis) with a gradient
/// scale bar; values are normalized to the matrix maximum.
pub fn svg_heatmap(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    x: &[f64],
    y: &[f64],
    matrix: &[Vec<f64>],
) -> Result<(), OutputError> {
    assert_eq!(matrix.len(), y.len());
    assert!(matrix.iter().all(|r| r.len() == x.len()));
    let vmax = matrix
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    let norm = if vmax > 0.0 { vmax } else { 1.0 };
    let f = Frame {
        x0: 70.0,
        y0: 34.0,
        w: 680.0,
        h: 420.0,
        xmin: x[0],
        xmax: x[x.len() - 1],
        ymin: y[0],
        ymax: y[y.len() - 1],
    };
    let mut svg = String::from(
        "<svg xmlns='http://www.w3.org/2000/svg' width='860' height='520' viewBox='0 0 860 520'>\
         <rect width='860' height='520' fill='white'/>",
    );
    let cw = f.w / x.len() as f64;
    let ch = f.h / y.len() as f64;
    for (j, row) in matrix.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            let color = ramp(v.abs() / norm);
            let _ = write!(
                svg,
                "<rect x='{:.2}' y='{:.2}' width='{:.2}' height='{:.2}' fill='{color}'/>",
                f.x0 + i as f64 * cw,
                f.y0 + f.h - (j + 1) as f64 * ch,
                cw + 0.5,
                ch + 0.5
            );
        }
    }
    axes(&mut svg, &f, x_label, y_label, title);
    // Scale bar.
    for k in 0..40 {
        let t = k as f64 / 39.0;
        let _ = write!(
            svg,
            "<rect x='790' y='{:.2}' width='18' height='{:.2}' fill='{}'/>",
            34.0 + 420.0 * (1.0 - (k + 1) as f64 / 40.0),
            420.0 / 40.0 + 0.5,
            ramp(t)
        );
    }
    let _ = write!(
        svg,
        "<text x='812' y='44' font-size='11' font-family='sans-serif'>{vmax:.3}</text>\
         <text x='812' y='456' font-size='11' font-family='sans-serif'>0</text>"
    );
    svg.push_str("</svg>");
    fs::write(path, svg).map_err(|source| OutputError::Write {
        path: path.to_path_buf(),
        source,
    })
}
