//! Post-processing: linear fits, peak finding, bistability detection,
//! two-parameter phase diagrams, and the microwave-power estimation chain
//! built on the dressed-state shift of the transparency peak.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{rabi_from_power, ModelConfig};
use crate::sweep::{hysteresis_pair, HysteresisPair, ScanDirection, Spectrum, SweepError};
use crate::units::{mhz_to_rad_per_us, rad_per_us_to_mhz};

/// Minimum prominence (in transmission units) for a local maximum to count
/// as a spectral peak.
pub const DEFAULT_PEAK_PROMINENCE: f64 = 0.02;
/// Transmission difference threshold defining a bistable scan point.
pub const DEFAULT_BISTABILITY_EPSILON: f64 = 0.01;
/// Far-detuned guard for the quadratic Stark formula: |delta| must exceed
/// this multiple of the drive Rabi frequency.
pub const STARK_FAR_DETUNED_RATIO: f64 = 5.0;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no peak with prominence >= {min_prominence} in the window")]
    FlatSpectrum { min_prominence: f64 },
    #[error("abscissa values are all equal; cannot fit a line")]
    DegenerateAbscissa,
    #[error("fit needs at least two points, got {n}")]
    TooFewPoints { n: usize },
    #[error(
        "quadratic Stark formula needs |delta_mw| >= {STARK_FAR_DETUNED_RATIO} * omega_mw \
         (got |{delta_mw}| vs {omega_mw} rad/us)"
    )]
    NotFarDetuned { delta_mw: f64, omega_mw: f64 },
    #[error("calibration slope is zero; center does not constrain power")]
    DegenerateCalibration,
    #[error("no equal-height zero crossing between {from_mhz} and {to_mhz} MHz")]
    NoZeroCrossing { from_mhz: f64, to_mhz: f64 },
    #[error("phase-map row at control value {control} failed: {source}")]
    Row {
        control: f64,
        #[source]
        source: SweepError,
    },
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

// ---------------------------------------------------------------------------
// Linear regression
// ---------------------------------------------------------------------------

/// Ordinary least-squares line fit. `rse` is the residual standard error
/// sqrt(SS_res / (n - 2)), zero when n < 3.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub rse: f64,
    pub n: usize,
}

pub fn fit_linear(x: &[f64], y: &[f64]) -> Result<LinearFit, AnalysisError> {
    let n = x.len();
    assert_eq!(n, y.len(), "paired samples");
    if n < 2 {
        return Err(AnalysisError::TooFewPoints { n });
    }
    let xm = x.iter().sum::<f64>() / n as f64;
    let ym = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|&v| (v - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - xm) * (b - ym)).sum();
    let scale = x.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if sxx <= (scale * 1e-12).powi(2) * n as f64 {
        return Err(AnalysisError::DegenerateAbscissa);
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (b - slope * a - intercept).powi(2))
        .sum();
    let ss_tot: f64 = y.iter().map(|&v| (v - ym).powi(2)).sum();
    // Constant ordinate: no variance to explain, so the fit is reported as
    // uninformative (r2 = 0) rather than trivially perfect.
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };
    let rse = if n >= 3 {
        (ss_res / (n - 2) as f64).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
        rse,
        n,
    })
}

// ---------------------------------------------------------------------------
// Peaks and gradients
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct Peak {
    /// Sub-grid position from a three-point parabolic refinement (rad/us).
    pub position: f64,
    /// Refined height at the vertex.
    pub height: f64,
    /// Height above the higher of the two flanking valleys.
    pub prominence: f64,
    /// Grid index of the unrefined maximum.
    pub index: usize,
}

/// Local maxima of `values` over the ascending `grid`, with at least
/// `min_prominence` of height over the valleys separating them from higher
/// ground, refined to sub-grid positions by a parabola through the three
/// points around each maximum.
pub fn find_peaks(grid: &[f64], values: &[f64], min_prominence: f64) -> Vec<Peak> {
    assert_eq!(grid.len(), values.len());
    let n = values.len();
    let mut peaks = Vec::new();
    for k in 1..n.saturating_sub(1) {
        if !(values[k] > values[k - 1] && values[k] >= values[k + 1]) {
            continue;
        }
        // Walk outward while below the peak, recording the deepest valley;
        // a boundary reached without higher ground counts as the valley.
        let mut left_min = values[k];
        let mut i = k;
        while i > 0 && values[i - 1] <= values[k] {
            i -= 1;
            left_min = left_min.min(values[i]);
        }
        let mut right_min = values[k];
        let mut j = k;
        while j + 1 < n && values[j + 1] <= values[k] {
            j += 1;
            right_min = right_min.min(values[j]);
        }
        let prominence = values[k] - left_min.max(right_min);
        if prominence < min_prominence {
            continue;
        }
        let (ym, y0, yp) = (values[k - 1], values[k], values[k + 1]);
        let denom = ym - 2.0 * y0 + yp;
        let (offset, height) = if denom < 0.0 {
            let d = (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5);
            (d, y0 - 0.25 * (ym - yp) * d)
        } else {
            (0.0, y0)
        };
        let step = 0.5 * (grid[k + 1] - grid[k - 1]);
        peaks.push(Peak {
            position: grid[k] + offset * step,
            height,
            prominence,
            index: k,
        });
    }
    peaks
}

/// The highest peak within [lo, hi] (rad/us) on the ascending rows of a
/// spectrum.
pub fn dominant_peak_in_window(
    spectrum: &Spectrum,
    lo: f64,
    hi: f64,
    min_prominence: f64,
) -> Result<Peak, AnalysisError> {
    let rows = spectrum.ascending();
    let sel: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.0 >= lo && r.0 <= hi)
        .map(|r| (r.0, r.1))
        .collect();
    let grid: Vec<f64> = sel.iter().map(|r| r.0).collect();
    let vals: Vec<f64> = sel.iter().map(|r| r.1).collect();
    find_peaks(&grid, &vals, min_prominence)
        .into_iter()
        .max_by(|a, b| a.height.partial_cmp(&b.height).unwrap())
        .ok_or(AnalysisError::FlatSpectrum { min_prominence })
}

/// The whole-window dominant peak.
pub fn dominant_peak(spectrum: &Spectrum, min_prominence: f64) -> Result<Peak, AnalysisError> {
    dominant_peak_in_window(spectrum, f64::NEG_INFINITY, f64::INFINITY, min_prominence)
}

#[derive(Debug, Clone, Copy)]
pub struct GradientExtreme {
    /// Midpoint of the steepest interval (rad/us).
    pub delta_c: f64,
    /// Signed dT/d(nu_c) in 1/MHz of coupling detuning, at the extreme of
    /// |dT/d(nu_c)|.
    pub per_mhz: f64,
}

/// Steepest transmission slope of a spectrum, by forward differences on the
/// ascending grid.
pub fn max_gradient(spectrum: &Spectrum) -> GradientExtreme {
    let rows = spectrum.ascending();
    assert!(rows.len() >= 2);
    let mut best = GradientExtreme {
        delta_c: rows[0].0,
        per_mhz: 0.0,
    };
    for w in rows.windows(2) {
        let dnu = rad_per_us_to_mhz(w[1].0 - w[0].0);
        let g = (w[1].1 - w[0].1) / dnu;
        if g.abs() > best.per_mhz.abs() {
            best = GradientExtreme {
                delta_c: 0.5 * (w[0].0 + w[1].0),
                per_mhz: g,
            };
        }
    }
    best
}

/// Scan-order positions where the tracked branch jumps by more than the
/// continuation capture radius: each entry is (delta_c before, delta_c
/// after) the jump, in scan order.
pub fn branch_jumps(spectrum: &Spectrum) -> Vec<(f64, f64)> {
    let mut jumps = Vec::new();
    for k in 1..spectrum.len() {
        if (spectrum.branch_x[k] - spectrum.branch_x[k - 1]).abs() > crate::sweep::CAPTURE_RADIUS {
            jumps.push((spectrum.delta_c[k - 1], spectrum.delta_c[k]));
        }
    }
    jumps
}

// ---------------------------------------------------------------------------
// Bistability detection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    /// rad/us, ascending endpoints (inclusive grid values).
    pub lo: f64,
    pub hi: f64,
}

impl Region {
    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Contiguous runs of the ascending grid where the forward/backward
/// transmission difference exceeds `epsilon` in magnitude.
pub fn bistable_regions(grid: &[f64], difference: &[f64], epsilon: f64) -> Vec<Region> {
    assert_eq!(grid.len(), difference.len());
    let mut regions = Vec::new();
    let mut start: Option<usize> = None;
    for k in 0..grid.len() {
        let hot = difference[k].abs() > epsilon;
        match (hot, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                regions.push(Region {
                    lo: grid[s],
                    hi: grid[k - 1],
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        regions.push(Region {
            lo: grid[s],
            hi: grid[grid.len() - 1],
        });
    }
    regions
}

/// The region whose center sits lowest in delta_c (the red-side hysteresis
/// lobe used by the electrometry chain), if any.
pub fn red_side_region(regions: &[Region]) -> Option<Region> {
    regions
        .iter()
        .copied()
        .min_by(|a, b| a.center().partial_cmp(&b.center()).unwrap())
}

// ---------------------------------------------------------------------------
// Phase diagrams
// ---------------------------------------------------------------------------

/// The second axis of a phase map: either the probe Rabi frequency or the
/// microwave power routed through the Rabi calibration kappa.
#[derive(Debug, Clone)]
pub enum ControlAxis {
    /// Values in rad/us.
    ProbeRabi { omega_p: Vec<f64> },
    /// Powers in mW; omega_mw = kappa * sqrt(P) with kappa in
    /// rad/us per sqrt(mW).
    MwPower { powers_mw: Vec<f64>, kappa: f64 },
}

impl ControlAxis {
    pub fn len(&self) -> usize {
        match self {
            ControlAxis::ProbeRabi { omega_p } => omega_p.len(),
            ControlAxis::MwPower { powers_mw, .. } => powers_mw.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Raw control coordinates in the internal units above.
    pub fn values(&self) -> &[f64] {
        match self {
            ControlAxis::ProbeRabi { omega_p } => omega_p,
            ControlAxis::MwPower { powers_mw, .. } => powers_mw,
        }
    }

    /// Control coordinates in file units: MHz for a Rabi axis, mW for a
    /// power axis.
    pub fn file_values(&self) -> Vec<f64> {
        match self {
            ControlAxis::ProbeRabi { omega_p } => {
                omega_p.iter().map(|&v| rad_per_us_to_mhz(v)).collect()
            }
            ControlAxis::MwPower { powers_mw, .. } => powers_mw.clone(),
        }
    }

    pub fn file_label(&self) -> &'static str {
        match self {
            ControlAxis::ProbeRabi { .. } => "omega_p_mhz",
            ControlAxis::MwPower { .. } => "mw_power_mw",
        }
    }

    /// Apply one control value to a configuration.
    pub fn apply(&self, config: &mut ModelConfig, value: f64) -> Result<(), AnalysisError> {
        match self {
            ControlAxis::ProbeRabi { .. } => config.drive.omega_p = value,
            ControlAxis::MwPower { kappa, .. } => {
                config.drive.omega_mw = rabi_from_power(value, *kappa)?;
            }
        }
        Ok(())
    }
}

/// Hysteresis maps over (control value, coupling detuning): one
/// forward/backward pair per control row. Rows are computed in parallel.
#[derive(Debug)]
pub struct PhaseDiagram {
    pub axis: ControlAxis,
    /// Ascending, rad/us; shared by every row.
    pub delta_c: Vec<f64>,
    /// One pair per control value, same order as `axis.values()`.
    pub rows: Vec<HysteresisPair>,
}

impl PhaseDiagram {
    pub fn compute(
        config: &ModelConfig,
        axis: ControlAxis,
        grid: &[f64],
    ) -> Result<Self, AnalysisError> {
        let rows: Result<Vec<HysteresisPair>, AnalysisError> = axis
            .values()
            .par_iter()
            .map(|&v| {
                let mut c = config.clone();
                axis.apply(&mut c, v)?;
                hysteresis_pair(&c, grid).map_err(|source| AnalysisError::Row { control: v, source })
            })
            .collect();
        Ok(PhaseDiagram {
            delta_c: grid.to_vec(),
            rows: rows?,
            axis,
        })
    }

    /// |T_forward - T_backward| per row on the ascending grid.
    pub fn difference_matrix(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|p| p.difference()).collect()
    }

    /// Bistable regions per row at the given threshold.
    pub fn regions(&self, epsilon: f64) -> Vec<Vec<Region>> {
        self.rows
            .iter()
            .map(|p| bistable_regions(&self.delta_c, &p.difference(), epsilon))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Dressed-state shift and electrometry
// ---------------------------------------------------------------------------

/// Quadratic Stark prediction for the shift of the transparency peak under
/// a far-detuned microwave drive: omega_mw^2 / (4 delta_mw), rad/us. The
/// r1-like dressed level moves by this amount, dragging the two-photon
/// resonance with it.
pub fn ac_stark_prediction(omega_mw: f64, delta_mw: f64) -> Result<f64, AnalysisError> {
    if delta_mw.abs() < STARK_FAR_DETUNED_RATIO * omega_mw.abs() {
        return Err(AnalysisError::NotFarDetuned { delta_mw, omega_mw });
    }
    Ok(omega_mw.powi(2) / (4.0 * delta_mw))
}

/// Exact r1-like dressed-level displacement for any drive strength:
/// (-delta + sign(delta) * sqrt(delta^2 + omega^2)) / 2. Reduces to the
/// quadratic formula when omega << |delta| and grows as +-omega/2 when
/// omega >> |delta|.
pub fn dressed_shift(omega_mw: f64, delta_mw: f64) -> f64 {
    0.5 * (-delta_mw + delta_mw.signum() * (delta_mw.powi(2) + omega_mw.powi(2)).sqrt())
}

/// Calibration record mapping the measured transparency-peak center to the
/// square root of microwave power. Stored in file units: MHz against
/// sqrt(mW).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Calibration {
    pub fit: LinearFit,
    pub delta_mw_mhz: f64,
    pub kappa_mhz_per_sqrt_mw: f64,
    pub sqrt_mw_min: f64,
    pub sqrt_mw_max: f64,
    /// Measured centers (MHz), one per calibration power.
    pub centers_mhz: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct PowerEstimate {
    pub power_mw: f64,
    /// One-sigma propagation of the calibration residual through the
    /// inverted square law.
    pub sigma_mw: f64,
    /// False when the inferred sqrt-power leaves the calibrated span.
    pub in_range: bool,
}

/// Search window for the shifted transparency peak: the r1-like dressed
/// branch moves away from zero with the sign of the microwave detuning, so
/// the window spans from slightly past zero on the opposite side up to the
/// largest shift plus margin.
pub fn calibration_window(delta_mw: f64, omega_mw_max: f64) -> (f64, f64) {
    let reach = dressed_shift(omega_mw_max, delta_mw);
    let margin = 0.25 * reach.abs() + mhz_to_rad_per_us(5.0);
    if delta_mw >= 0.0 {
        (-margin, reach + margin)
    } else {
        (reach - margin, margin)
    }
}

/// Build a calibration by scanning the backward spectrum at each power and
/// fitting the refined peak center against sqrt(P). The backward scan is
/// used because its branch crosses the full transparency peak smoothly;
/// the forward scan folds before reaching it.
pub fn calibrate_electrometer(
    config: &ModelConfig,
    kappa: f64,
    powers_mw: &[f64],
    grid: &[f64],
) -> Result<Calibration, AnalysisError> {
    assert!(powers_mw.len() >= 2, "calibration needs several powers");
    let omega_max = powers_mw
        .iter()
        .map(|&p| rabi_from_power(p, kappa))
        .collect::<Result<Vec<f64>, _>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    let (lo, hi) = calibration_window(config.drive.delta_mw, omega_max);

    let centers: Result<Vec<f64>, AnalysisError> = powers_mw
        .par_iter()
        .map(|&p| {
            let mut c = config.clone();
            c.drive.omega_mw = rabi_from_power(p, kappa)?;
            let spec = crate::sweep::sweep_spectrum(&c, grid, ScanDirection::Backward)
                .map_err(|source| AnalysisError::Row { control: p, source })?;
            let peak = dominant_peak_in_window(&spec, lo, hi, DEFAULT_PEAK_PROMINENCE)?;
            Ok(rad_per_us_to_mhz(peak.position))
        })
        .collect();
    let centers = centers?;

    let sqrt_p: Vec<f64> = powers_mw.iter().map(|&p| p.sqrt()).collect();
    let fit = fit_linear(&sqrt_p, &centers)?;
    Ok(Calibration {
        fit,
        delta_mw_mhz: rad_per_us_to_mhz(config.drive.delta_mw),
        kappa_mhz_per_sqrt_mw: rad_per_us_to_mhz(kappa),
        sqrt_mw_min: sqrt_p.iter().cloned().fold(f64::INFINITY, f64::min),
        sqrt_mw_max: sqrt_p.iter().cloned().fold(0.0, f64::max),
        centers_mhz: centers,
    })
}

/// Invert the calibration: P = ((center - intercept) / slope)^2, with the
/// residual standard error propagated as sigma_P = 2 sqrt(P) rse / |slope|.
pub fn estimate_mw_power(
    calibration: &Calibration,
    center_mhz: f64,
) -> Result<PowerEstimate, AnalysisError> {
    let fit = &calibration.fit;
    if fit.slope == 0.0 {
        return Err(AnalysisError::DegenerateCalibration);
    }
    let sqrt_p = (center_mhz - fit.intercept) / fit.slope;
    let in_range = sqrt_p >= calibration.sqrt_mw_min && sqrt_p <= calibration.sqrt_mw_max;
    let sqrt_p_pos = sqrt_p.max(0.0);
    Ok(PowerEstimate {
        power_mw: sqrt_p_pos.powi(2),
        sigma_mw: 2.0 * sqrt_p_pos * fit.rse / fit.slope.abs(),
        in_range: in_range && sqrt_p >= 0.0,
    })
}

// ---------------------------------------------------------------------------
// Equal-height microwave zeroing
// ---------------------------------------------------------------------------

/// Result of the equal-height search: the microwave detuning at which the
/// two dressed transparency peaks have the same height.
#[derive(Debug, Clone)]
pub struct MwZero {
    /// rad/us.
    pub delta_mw: f64,
    /// (delta_mw, asymmetry) samples from the coarse scan.
    pub samples: Vec<(f64, f64)>,
}

/// Height difference (red peak minus blue peak) of the two dominant dressed
/// transparency peaks. Zero exactly on microwave resonance; odd in the
/// microwave detuning for an otherwise symmetric configuration.
pub fn peak_height_asymmetry(
    config: &ModelConfig,
    grid: &[f64],
) -> Result<f64, AnalysisError> {
    let spec = crate::sweep::sweep_spectrum(config, grid, ScanDirection::Forward)?;
    let rows = spec.ascending();
    let g: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let t: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let mut peaks = find_peaks(&g, &t, DEFAULT_PEAK_PROMINENCE);
    peaks.sort_by(|a, b| b.height.partial_cmp(&a.height).unwrap());
    if peaks.len() < 2 {
        return Err(AnalysisError::FlatSpectrum {
            min_prominence: DEFAULT_PEAK_PROMINENCE,
        });
    }
    let (a, b) = (peaks[0], peaks[1]);
    let (red, blue) = if a.position < b.position { (a, b) } else { (b, a) };
    Ok(red.height - blue.height)
}

/// Scan the microwave detuning over [from, to] (rad/us), locate the sign
/// change of the dressed-peak height asymmetry and bisect it down. `grid`
/// is the coupling-detuning window scanned per sample; it must span both
/// dressed peaks at every detuning in the range.
pub fn microwave_zero(
    config: &ModelConfig,
    from: f64,
    to: f64,
    points: usize,
    grid: &[f64],
) -> Result<MwZero, AnalysisError> {
    assert!(points >= 3 && to > from);
    let asym_at = |delta: f64| -> Result<f64, AnalysisError> {
        let mut c = config.clone();
        c.drive.delta_mw = delta;
        peak_height_asymmetry(&c, grid)
    };
    let mut samples = Vec::with_capacity(points);
    for k in 0..points {
        let d = from + (to - from) * k as f64 / (points - 1) as f64;
        samples.push((d, asym_at(d)?));
    }
    if let Some(&(d, _)) = samples.iter().find(|&&(_, a)| a == 0.0) {
        return Ok(MwZero {
            delta_mw: d,
            samples,
        });
    }
    for w in samples.windows(2) {
        let ((mut lo, mut alo), (mut hi, ahi)) = (w[0], w[1]);
        if alo * ahi >= 0.0 {
            continue;
        }
        while hi - lo > 1e-6 {
            let mid = 0.5 * (lo + hi);
            let amid = asym_at(mid)?;
            if amid == 0.0 {
                lo = mid;
                hi = mid;
            } else if alo * amid < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                alo = amid;
            }
        }
        return Ok(MwZero {
            delta_mw: 0.5 * (lo + hi),
            samples,
        });
    }
    Err(AnalysisError::NoZeroCrossing {
        from_mhz: rad_per_us_to_mhz(from),
        to_mhz: rad_per_us_to_mhz(to),
    })
}

/// Measure the transparency-peak center (MHz) of a backward scan for the
/// estimation side of the chain, using the same window logic as the
/// calibration.
pub fn measure_center(
    config: &ModelConfig,
    grid: &[f64],
    omega_mw_max: f64,
) -> Result<f64, AnalysisError> {
    let (lo, hi) = calibration_window(config.drive.delta_mw, omega_mw_max);
    let spec = crate::sweep::sweep_spectrum(config, grid, ScanDirection::Backward)?;
    let peak = dominant_peak_in_window(&spec, lo, hi, DEFAULT_PEAK_PROMINENCE)?;
    Ok(rad_per_us_to_mhz(peak.position))
}
