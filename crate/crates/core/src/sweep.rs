//! Quasi-static frequency scans: Doppler averaging, probe transmission, and
//! directional sweeps that continue a mean-field branch until it folds.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::ModelConfig;
use crate::solver::{self, RootFinder, SolverError, Stability};
use crate::units::rad_per_us_to_mhz;

/// Largest jump in x accepted as branch continuation between neighboring
/// scan points; anything larger is treated as a fold and re-seeded by
/// relaxation from the previous fraction.
pub const CAPTURE_RADIUS: f64 = 0.1;
/// Default number of scan grid points.
pub const DEFAULT_GRID_POINTS: usize = 401;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("branch tracking failed at delta_c = {delta_c_mhz} MHz: {source}")]
    BranchTracking {
        delta_c_mhz: f64,
        source: SolverError,
    },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanDirection {
    Forward,
    Backward,
}

impl ScanDirection {
    pub fn label(&self) -> &'static str {
        match self {
            ScanDirection::Forward => "forward",
            ScanDirection::Backward => "backward",
        }
    }
}

/// One directional scan. Points are stored in scan order, so `delta_c` is
/// strictly increasing for a forward scan and strictly decreasing for a
/// backward scan.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub direction: ScanDirection,
    /// rad/us, in scan order.
    pub delta_c: Vec<f64>,
    /// Probe transmission in [0, 1].
    pub transmission: Vec<f64>,
    /// Branch label: the self-consistent fraction the scan is riding.
    pub branch_x: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.delta_c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta_c.is_empty()
    }

    /// (delta_c, transmission, branch_x) rows sorted by ascending delta_c,
    /// independent of scan direction. This is the order used for files and
    /// for pointwise pair differences.
    pub fn ascending(&self) -> Vec<(f64, f64, f64)> {
        let mut rows: Vec<(f64, f64, f64)> = (0..self.len())
            .map(|k| (self.delta_c[k], self.transmission[k], self.branch_x[k]))
            .collect();
        if self.direction == ScanDirection::Backward {
            rows.reverse();
        }
        rows
    }
}

/// Forward and backward scans over the same grid.
#[derive(Debug, Clone)]
pub struct HysteresisPair {
    pub forward: Spectrum,
    pub backward: Spectrum,
}

impl HysteresisPair {
    /// Ascending delta_c grid shared by both scans.
    pub fn grid(&self) -> Vec<f64> {
        self.forward.ascending().iter().map(|r| r.0).collect()
    }

    /// T_forward - T_backward on the ascending grid.
    pub fn difference(&self) -> Vec<f64> {
        let f = self.forward.ascending();
        let b = self.backward.ascending();
        assert_eq!(f.len(), b.len(), "pair scans share a grid");
        f.iter().zip(b.iter()).map(|(a, b)| a.1 - b.1).collect()
    }

    pub fn max_abs_difference(&self) -> f64 {
        self.difference().iter().fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// Gaussian quadrature weights over the 1D thermal velocity distribution:
/// `classes` symmetric nodes (odd, so v = 0 is sampled) spanning
/// +-cutoff * v_p, weights proportional to exp(-(v/v_p)^2) and normalized
/// to unit sum. Doppler disabled or a single class collapses to [(0, 1)].
pub fn doppler_weights(params: &crate::model::DopplerParams) -> Vec<(f64, f64)> {
    solver::velocity_nodes(params)
}

/// Velocity-averaged probe coherence <g|rho|i> and realized fraction F(x)
/// at one scan point, sharing one global x across velocity classes.
pub fn averaged_observables(
    config: &ModelConfig,
    delta_c: f64,
    x: f64,
) -> Result<(Complex64, f64), SweepError> {
    let r = solver::averaged_response(config, delta_c, x)?;
    Ok((r.probe_coherence, r.fraction))
}

/// Beer-Lambert transmission T = exp(-od * im_coherence / reference),
/// clamped to [0, 1]. `reference` is the bare-resonant absorption that
/// normalizes the exponent so the bare two-level medium transmits
/// exp(-od) on resonance by construction.
pub fn transmission(im_coherence: f64, od: f64, reference: f64) -> f64 {
    if reference <= 0.0 {
        return 1.0;
    }
    (-od * im_coherence / reference).exp().clamp(0.0, 1.0)
}

/// The normalization constant: Im <g|rho|i> of the bare two-level medium
/// (coupling, microwave and mean field off) on probe resonance, at the same
/// probe Rabi frequency and Doppler settings.
pub fn reference_absorption(config: &ModelConfig) -> Result<f64, SweepError> {
    let mut bare = config.clone();
    bare.drive.omega_c = 0.0;
    bare.drive.omega_mw = 0.0;
    bare.drive.delta_p = 0.0;
    bare.mean_field.shift = 0.0;
    bare.mean_field.broadening = 0.0;
    // The Rydberg levels are decoupled spectators here; giving a lossless
    // one decay selects the empty-Rydberg branch (otherwise the steady
    // state is degenerate) without touching the two-level block.
    if bare.decay.gamma_r1 == 0.0 {
        bare.decay.gamma_r1 = 1.0;
    }
    if bare.decay.gamma_r2 == 0.0 {
        bare.decay.gamma_r2 = 1.0;
    }
    if bare.drive.omega_p == 0.0 {
        return Ok(0.0);
    }
    let (coherence, _) = averaged_observables(&bare, 0.0, 0.0)?;
    Ok(coherence.im)
}

/// Ascending scan grid in rad/us from endpoint frequencies in MHz.
pub fn grid_from_mhz(from_mhz: f64, to_mhz: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && to_mhz > from_mhz, "need an ascending grid");
    (0..points)
        .map(|k| {
            crate::units::mhz_to_rad_per_us(
                from_mhz + (to_mhz - from_mhz) * k as f64 / (points - 1) as f64,
            )
        })
        .collect()
}

/// Directional quasi-static scan with branch continuation.
///
/// The first point takes the stable fixed point reached by relaxation from
/// x = 0. Each later point refines the root seeded by the previous fraction
/// and accepts it if it is stable and within CAPTURE_RADIUS; otherwise the
/// branch has folded and the point is re-solved by relaxation from the
/// previous fraction, which reproduces the quasi-static jump.
pub fn sweep_spectrum(
    config: &ModelConfig,
    grid: &[f64],
    direction: ScanDirection,
) -> Result<Spectrum, SweepError> {
    assert!(grid.len() >= 2, "scan needs at least two points");
    debug_assert!(grid.windows(2).all(|w| w[1] > w[0]), "grid must ascend");

    let a_ref = reference_absorption(config)?;
    let od = config.cell.optical_depth;

    let order: Vec<f64> = match direction {
        ScanDirection::Forward => grid.to_vec(),
        ScanDirection::Backward => grid.iter().rev().cloned().collect(),
    };

    let mut delta_c = Vec::with_capacity(order.len());
    let mut trans = Vec::with_capacity(order.len());
    let mut branch = Vec::with_capacity(order.len());
    let mut prev_x: Option<f64> = None;

    for &dc in &order {
        let finder = RootFinder::new(config, dc);
        let fail = |source: SolverError| SweepError::BranchTracking {
            delta_c_mhz: rad_per_us_to_mhz(dc),
            source,
        };
        let x0 = match prev_x {
            None => finder.relax(0.0).map_err(fail)?,
            Some(seed) => {
                let continued = match finder.refine_from(seed) {
                    Ok(Some(root)) if (root - seed).abs() <= CAPTURE_RADIUS => {
                        let (stability, _) = finder.classify(root).map_err(fail)?;
                        (stability == Stability::Stable).then_some(root)
                    }
                    Ok(_) => None,
                    Err(e) => return Err(fail(e)),
                };
                match continued {
                    Some(root) => root,
                    None => finder.relax(seed).map_err(fail)?,
                }
            }
        };
        // One synchronizing application of the response map: the recorded
        // branch is the realized fraction F(x0), which is bit-identical
        // across scan directions when the response has no x dependence, and
        // the transmission is evaluated exactly at that recorded fraction.
        let (_, x) = averaged_observables(config, dc, x0)?;
        let (coherence, _) = averaged_observables(config, dc, x)?;
        delta_c.push(dc);
        trans.push(transmission(coherence.im, od, a_ref));
        branch.push(x);
        prev_x = Some(x);
    }

    Ok(Spectrum {
        direction,
        delta_c,
        transmission: trans,
        branch_x: branch,
    })
}

/// Forward and backward scans over one grid.
pub fn hysteresis_pair(config: &ModelConfig, grid: &[f64]) -> Result<HysteresisPair, SweepError> {
    Ok(HysteresisPair {
        forward: sweep_spectrum(config, grid, ScanDirection::Forward)?,
        backward: sweep_spectrum(config, grid, ScanDirection::Backward)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DecayParams, DopplerParams, DriveParams, MeanFieldParams, ModelConfig, RydbergCount};
    use crate::units::mhz_to_rad_per_us as w;

    #[test]
    fn doppler_weights_degenerate_and_symmetric() {
        let off = DopplerParams {
            enabled: false,
            ..Default::default()
        };
        assert_eq!(doppler_weights(&off), vec![(0.0, 1.0)]);

        let on = DopplerParams {
            enabled: true,
            most_probable_speed: 100.0,
            classes: 41,
            cutoff: 3.0,
        };
        let nodes = doppler_weights(&on);
        assert_eq!(nodes.len(), 41);
        let sum: f64 = nodes.iter().map(|n| n.1).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(nodes.iter().any(|n| n.0 == 0.0), "v = 0 must be sampled");
        for k in 0..nodes.len() {
            let (v, wt) = nodes[k];
            let (vm, wm) = nodes[nodes.len() - 1 - k];
            assert!((v + vm).abs() < 1e-9);
            assert!((wt - wm).abs() < 1e-12);
        }
        // Center node carries the largest weight.
        let wmax = nodes.iter().map(|n| n.1).fold(0.0, f64::max);
        assert_eq!(nodes[nodes.len() / 2].1, wmax);
    }

    #[test]
    fn transmission_normalization_and_clamp() {
        assert!((transmission(1.0, 2.0, 1.0) - (-2.0f64).exp()).abs() < 1e-14);
        assert_eq!(transmission(-5.0, 2.0, 1.0), 1.0); // clamped above
        assert_eq!(transmission(0.0, 2.0, 0.0), 1.0); // no reference -> unity
    }

    fn eit_config() -> ModelConfig {
        ModelConfig {
            drive: DriveParams {
                omega_p: w(1.0),
                omega_c: w(5.0),
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn bare_two_level_transmits_exp_minus_od() {
        let mut config = eit_config();
        config.drive.omega_c = 0.0;
        config.cell.optical_depth = 2.0;
        let a_ref = reference_absorption(&config).unwrap();
        let (coherence, _) = averaged_observables(&config, 0.0, 0.0).unwrap();
        let t = transmission(coherence.im, 2.0, a_ref);
        assert!((t - (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn no_feedback_scan_directions_agree_bitwise() {
        let mut config = eit_config();
        config.mean_field = MeanFieldParams {
            shift: 0.0,
            broadening: 0.0,
            count: RydbergCount::R1AndR2,
        };
        let grid = grid_from_mhz(-10.0, 10.0, 101);
        let pair = hysteresis_pair(&config, &grid).unwrap();
        let f = pair.forward.ascending();
        let b = pair.backward.ascending();
        for (a, c) in f.iter().zip(b.iter()) {
            assert_eq!(a.1.to_bits(), c.1.to_bits(), "transmission at {}", a.0);
            assert_eq!(a.2.to_bits(), c.2.to_bits(), "branch at {}", a.0);
        }
    }

    #[test]
    fn symmetric_configuration_gives_symmetric_spectrum() {
        let mut config = eit_config();
        config.drive.omega_p = w(0.05);
        config.doppler = DopplerParams {
            enabled: true,
            most_probable_speed: 30.0,
            classes: 21,
            cutoff: 3.0,
        };
        let grid = grid_from_mhz(-6.0, 6.0, 61);
        let spec = sweep_spectrum(&config, &grid, ScanDirection::Forward).unwrap();
        let n = spec.len();
        for k in 0..n {
            let t1 = spec.transmission[k];
            let t2 = spec.transmission[n - 1 - k];
            assert!(
                (t1 - t2).abs() < 1e-8,
                "asymmetry {} at +-{} rad/us",
                (t1 - t2).abs(),
                spec.delta_c[k]
            );
        }
    }

    #[test]
    fn eit_peak_sits_on_two_photon_resonance() {
        let config = eit_config();
        let grid = grid_from_mhz(-8.0, 8.0, 161);
        let spec = sweep_spectrum(&config, &grid, ScanDirection::Forward).unwrap();
        let kmax = (0..spec.len())
            .max_by(|&a, &b| {
                spec.transmission[a]
                    .partial_cmp(&spec.transmission[b])
                    .unwrap()
            })
            .unwrap();
        assert!(spec.delta_c[kmax].abs() < w(0.15));
        assert!(spec.transmission[kmax] > 0.5);
        // Wings absorb: transmission climbs from the absorption shoulder.
        assert!(spec.transmission[0] < spec.transmission[kmax]);
    }

    #[test]
    fn backward_spectrum_is_stored_in_scan_order() {
        let config = eit_config();
        let grid = grid_from_mhz(-2.0, 2.0, 11);
        let spec = sweep_spectrum(&config, &grid, ScanDirection::Backward).unwrap();
        assert!(spec.delta_c.windows(2).all(|p| p[1] < p[0]));
        let asc = spec.ascending();
        assert!(asc.windows(2).all(|p| p[1].0 > p[0].0));
    }

    /// EIT linewidth in a Doppler-broadened medium against the standard
    /// weak-probe treatment: the analytic three-level susceptibility
    /// chi(v) = i/(g_ig - i dp(v) + (Wc^2/4)/(g_gr - i d2(v))) integrated
    /// over the thermal distribution by dense trapezoid quadrature, with
    /// the counter-propagating Doppler shifts dp(v) = -k_p v,
    /// d2(v) = (k_c - k_p) v. The mismatched wavevectors leave a residual
    /// two-photon broadening that dominates the transparency width here.
    #[test]
    fn doppler_averaged_eit_linewidth_matches_weak_probe_quadrature() {
        let vp = 24.0;
        let config = ModelConfig {
            drive: DriveParams {
                omega_p: w(0.01),
                omega_c: w(4.0),
                ..Default::default()
            },
            decay: DecayParams {
                gamma_i: w(5.2),
                gamma_r1: 0.0,
                gamma_r2: w(0.01),
                deph_gi: 0.0,
                deph_gr1: w(0.05),
                deph_gr2: w(0.1),
            },
            doppler: DopplerParams {
                enabled: true,
                most_probable_speed: vp,
                classes: 601,
                cutoff: 3.0,
            },
            ..Default::default()
        };

        let od = 2.0;
        let grid = grid_from_mhz(-5.0, 5.0, 201);

        // Simulated transmission through the full Lindblad pipeline.
        let a_ref = reference_absorption(&config).unwrap();
        let sim: Vec<f64> = grid
            .iter()
            .map(|&dc| {
                let (c, _) = averaged_observables(&config, dc, 0.0).unwrap();
                transmission(c.im, od, a_ref)
            })
            .collect();

        // Analytic weak-probe counterpart on an independent velocity grid.
        let kp = config.scheme.probe_wavevector();
        let kc = config.scheme.coupling_wavevector();
        let g_ig = config.decay.gamma_i / 2.0 + config.decay.deph_gi;
        let g_gr = config.decay.gamma_r1 / 2.0 + config.decay.deph_gr1;
        let a = config.drive.omega_c.powi(2) / 4.0;
        let chi_im = |dc: f64, omega_c_on: bool| -> f64 {
            let n = 16001;
            let half = 4.0 * vp;
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 0..n {
                let v = -half + 2.0 * half * k as f64 / (n - 1) as f64;
                let weight = (-(v / vp).powi(2)).exp();
                let dp = -kp * v;
                let d2 = dc + (kc - kp) * v;
                let mut denom = Complex64::new(g_ig, dp);
                if omega_c_on {
                    denom += Complex64::new(a, 0.0) / Complex64::new(g_gr, d2);
                }
                let chi = Complex64::new(0.0, 1.0) / denom;
                num += weight * chi.im;
                den += weight;
            }
            num / den
        };
        let ref_im = chi_im(0.0, false);
        let ana: Vec<f64> = grid
            .iter()
            .map(|&dc| transmission(chi_im(dc, true), od, ref_im))
            .collect();

        let fwhm = |t: &[f64]| -> f64 {
            let kmax = (0..t.len())
                .max_by(|&i, &j| t[i].partial_cmp(&t[j]).unwrap())
                .unwrap();
            let base = t.iter().cloned().fold(f64::INFINITY, f64::min);
            let half = 0.5 * (t[kmax] + base);
            let mut lo = grid[0];
            for k in (1..=kmax).rev() {
                if t[k - 1] <= half && t[k] >= half {
                    let f = (half - t[k - 1]) / (t[k] - t[k - 1]);
                    lo = grid[k - 1] + f * (grid[k] - grid[k - 1]);
                    break;
                }
            }
            let mut hi = grid[grid.len() - 1];
            for k in kmax..t.len() - 1 {
                if t[k] >= half && t[k + 1] <= half {
                    let f = (t[k] - half) / (t[k] - t[k + 1]);
                    hi = grid[k] + f * (grid[k + 1] - grid[k]);
                    break;
                }
            }
            hi - lo
        };

        let width_sim = fwhm(&sim);
        let width_ana = fwhm(&ana);
        assert!(
            (width_sim - width_ana).abs() < 0.2 * width_ana,
            "simulated {} vs analytic {} rad/us",
            width_sim,
            width_ana
        );
        // The residual-Doppler contribution must actually matter: the width
        // exceeds the Doppler-free two-photon linewidth.
        let doppler_free = 2.0 * (g_gr + a / g_ig);
        assert!(width_sim > 1.2 * doppler_free);
    }
}
