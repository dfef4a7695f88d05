//! Physical model: the four-level ladder, its drive/decay/interaction
//! parameters, the rotating-frame Hamiltonian and the Lindblad generator.

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use thiserror::Error;

use crate::units::wavevector_rad_per_um;

pub const N_LEVELS: usize = 4;
pub const DIM_SUPER: usize = N_LEVELS * N_LEVELS;

/// Fixed basis ordering. Index with these, never with bare integers.
pub const G: usize = 0;
pub const I: usize = 1;
pub const R1: usize = 2;
pub const R2: usize = 3;

pub const LEVEL_LABELS: [&str; N_LEVELS] = ["g", "i", "r1", "r2"];

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("microwave power must be nonnegative, got {0}")]
    NegativePower(f64),
}

/// Column-major vectorization index: rho[r, c] sits at vec position 4*c + r.
#[inline]
pub fn vec_idx(r: usize, c: usize) -> usize {
    N_LEVELS * c + r
}

/// The optical geometry of the ladder: which wavelengths drive the two
/// optical transitions and which way they propagate along the cell axis.
/// The microwave wavelength is centimeter-scale, so its Doppler shift is
/// neglected entirely.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelScheme {
    pub labels: [String; N_LEVELS],
    /// Probe wavelength in nm, couples (g, i).
    pub probe_wavelength_nm: f64,
    /// Coupling wavelength in nm, couples (i, r1).
    pub coupling_wavelength_nm: f64,
    /// Propagation sign of the probe along the cell axis: +1 or -1.
    pub probe_direction: i8,
    /// Propagation sign of the coupling beam: +1 or -1. The default -1 is
    /// the counter-propagating arrangement that cancels most of the
    /// two-photon Doppler shift.
    pub coupling_direction: i8,
}

impl Default for LevelScheme {
    fn default() -> Self {
        Self {
            labels: LEVEL_LABELS.map(str::to_owned),
            probe_wavelength_nm: 852.0,
            coupling_wavelength_nm: 510.0,
            probe_direction: 1,
            coupling_direction: -1,
        }
    }
}

impl LevelScheme {
    pub fn probe_wavevector(&self) -> f64 {
        wavevector_rad_per_um(self.probe_wavelength_nm)
    }

    pub fn coupling_wavevector(&self) -> f64 {
        wavevector_rad_per_um(self.coupling_wavelength_nm)
    }
}

/// Rabi frequencies and detunings, all in rad/us, positive detuning = blue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    pub omega_p: f64,
    pub omega_c: f64,
    pub omega_mw: f64,
    pub delta_p: f64,
    pub delta_c: f64,
    pub delta_mw: f64,
}

impl Default for DriveParams {
    fn default() -> Self {
        Self {
            omega_p: 0.0,
            omega_c: 0.0,
            omega_mw: 0.0,
            delta_p: 0.0,
            delta_c: 0.0,
            delta_mw: 0.0,
        }
    }
}

/// Population decay rates of the three excited levels and extra pure
/// dephasing rates of the three ground-state coherences, rad/us.
///
/// Channels: i -> g at gamma_i, r1 -> i at gamma_r1, r2 -> i at gamma_r2.
/// The dephasing fields name the total extra decay of the (g,i), (g,r1),
/// (g,r2) coherences; they model finite drive linewidths and transit
/// broadening. Because each field's phase noise accumulates up the ladder,
/// a physical (completely positive) generator needs
/// deph_gi <= deph_gr1 <= deph_gr2, and the excited-state coherences then
/// also dephase at the rate differences (see `build_liouvillian`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayParams {
    pub gamma_i: f64,
    pub gamma_r1: f64,
    pub gamma_r2: f64,
    pub deph_gi: f64,
    pub deph_gr1: f64,
    pub deph_gr2: f64,
}

impl Default for DecayParams {
    fn default() -> Self {
        use crate::units::mhz_to_rad_per_us as w;
        Self {
            gamma_i: w(5.2),
            gamma_r1: w(0.01),
            gamma_r2: w(0.01),
            deph_gi: w(0.1),
            deph_gr1: w(0.1),
            deph_gr2: w(0.1),
        }
    }
}

/// Which populations enter the mean-field feedback fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RydbergCount {
    R1Only,
    R1AndR2,
}

/// Collective interaction treated at mean-field level: a Rydberg fraction x
/// shifts both Rydberg levels by -shift * x (positive `shift` moves the EIT
/// feature toward negative coupling detuning as x grows) and adds
/// broadening * x of extra dephasing to the two ground-Rydberg coherences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldParams {
    /// V, rad/us per unit fraction.
    pub shift: f64,
    /// beta, rad/us per unit fraction, nonnegative.
    pub broadening: f64,
    pub count: RydbergCount,
}

impl Default for MeanFieldParams {
    fn default() -> Self {
        Self {
            shift: 0.0,
            broadening: 0.0,
            count: RydbergCount::R1AndR2,
        }
    }
}

impl MeanFieldParams {
    /// Level shift of the Rydberg manifold at fraction x.
    pub fn level_shift(&self, x: f64) -> f64 {
        -self.shift * x
    }

    /// Decay set with the density-dependent broadening folded in.
    pub fn effective_decays(&self, base: &DecayParams, x: f64) -> DecayParams {
        let mut d = *base;
        d.deph_gr1 += self.broadening * x;
        d.deph_gr2 += self.broadening * x;
        d
    }

    pub fn fraction_of(&self, rho: &Matrix4<Complex64>) -> f64 {
        let mut x = rho[(R1, R1)].re;
        if self.count == RydbergCount::R1AndR2 {
            x += rho[(R2, R2)].re;
        }
        x.clamp(0.0, 1.0)
    }
}

/// Thermal velocity distribution along the cell axis, sampled on a symmetric
/// grid of `classes` nodes (odd, so v = 0 is always sampled).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerParams {
    pub enabled: bool,
    /// Most probable speed, m/s.
    pub most_probable_speed: f64,
    pub classes: usize,
    /// Grid half-width in units of the most probable speed.
    pub cutoff: f64,
}

impl Default for DopplerParams {
    fn default() -> Self {
        Self {
            enabled: false,
            most_probable_speed: 190.0,
            classes: 1,
            cutoff: 3.0,
        }
    }
}

/// Optical depth of the cell for the probe on bare resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellParams {
    pub optical_depth: f64,
}

impl Default for CellParams {
    fn default() -> Self {
        Self { optical_depth: 2.0 }
    }
}

/// Everything needed to evaluate the medium response at one scan point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelConfig {
    pub scheme: LevelScheme,
    pub drive: DriveParams,
    pub decay: DecayParams,
    pub mean_field: MeanFieldParams,
    pub doppler: DopplerParams,
    pub cell: CellParams,
}

/// Rotating-frame Hamiltonian for one velocity class, rad/us.
///
/// Diagonal is the cumulative detuning ladder
///   (0, -dp, -dp - dc + s, -dp - dc - dmw + s)
/// with dp, dc Doppler-shifted by the beam geometry and s the mean-field
/// shift of the Rydberg manifold (the microwave detuning stays referenced to
/// the shifted r1-r2 interval). Off-diagonals are omega/2 on the three
/// driven transitions only.
pub fn build_hamiltonian(
    scheme: &LevelScheme,
    drive: &DriveParams,
    mf_shift: f64,
    velocity: f64,
) -> Matrix4<Complex64> {
    let dp = drive.delta_p - f64::from(scheme.probe_direction) * scheme.probe_wavevector() * velocity;
    let dc = drive.delta_c
        - f64::from(scheme.coupling_direction) * scheme.coupling_wavevector() * velocity;

    let re = |x: f64| Complex64::new(x, 0.0);
    let mut h = Matrix4::zeros();
    h[(I, I)] = re(-dp);
    h[(R1, R1)] = re(-dp - dc + mf_shift);
    h[(R2, R2)] = re(-dp - dc - drive.delta_mw + mf_shift);
    for (a, b, omega) in [
        (G, I, drive.omega_p),
        (I, R1, drive.omega_c),
        (R1, R2, drive.omega_mw),
    ] {
        h[(a, b)] = re(omega / 2.0);
        h[(b, a)] = re(omega / 2.0);
    }
    h
}

/// Lindblad generator as a 16x16 complex matrix acting on column-major
/// vectorized density matrices: d vec(rho)/dt = L vec(rho).
///
/// Coherent part -i[H, rho]; jump channels i->g, r1->i, r2->i; pure
/// dephasing from cumulative drive phase noise, parametrized so the
/// (g,i), (g,r1), (g,r2) coherences decay at exactly the named extra
/// rates deph_gi, deph_gr1, deph_gr2.
pub fn build_liouvillian(h: &Matrix4<Complex64>, decays: &DecayParams) -> DMatrix<Complex64> {
    let mut l = DMatrix::<Complex64>::zeros(DIM_SUPER, DIM_SUPER);
    let mi = Complex64::new(0.0, -1.0);

    // -i (H rho - rho H)
    for c in 0..N_LEVELS {
        for r in 0..N_LEVELS {
            let row = vec_idx(r, c);
            for k in 0..N_LEVELS {
                l[(row, vec_idx(k, c))] += mi * h[(r, k)];
                l[(row, vec_idx(r, k))] -= mi * h[(k, c)];
            }
        }
    }

    // Jump operator |a><b| at rate gamma: gamma * rho_bb feeds (a,a), and
    // -gamma/2 {|b><b|, rho} drains row b and column b.
    for (a, b, gamma) in [
        (G, I, decays.gamma_i),
        (I, R1, decays.gamma_r1),
        (I, R2, decays.gamma_r2),
    ] {
        let g = Complex64::new(gamma, 0.0);
        let gh = Complex64::new(gamma / 2.0, 0.0);
        l[(vec_idx(a, a), vec_idx(b, b))] += g;
        for k in 0..N_LEVELS {
            l[(vec_idx(b, k), vec_idx(b, k))] -= gh;
            l[(vec_idx(k, b), vec_idx(k, b))] -= gh;
        }
    }

    // Pure dephasing. Each drive field's phase noise rides along to every
    // level above the photon it supplies, so the noise enters as three
    // diagonal Lindblad generators projecting onto the upper sets {i,r1,r2},
    // {r1,r2}, {r2}. Their rates are fixed by the three named ground-state
    // coherence rates:
    //   probe bucket    a = deph_gi,
    //   coupling bucket b = deph_gr1 - deph_gi,
    //   microwave bucket c = deph_gr2 - deph_gr1,
    // and a coherence (j,k) is damped by every bucket whose boundary
    // separates j from k. The ground-state coherences decay at exactly the
    // named rates; the excited-state coherences pick up the differences.
    // Complete positivity (steady states with nonnegative eigenvalues)
    // requires a, b, c >= 0, i.e. deph_gi <= deph_gr1 <= deph_gr2 - a
    // condition enforced at config load.
    let a = decays.deph_gi;
    let b = decays.deph_gr1 - decays.deph_gi;
    let c = decays.deph_gr2 - decays.deph_gr1;
    for (j, k, gamma) in [
        (G, I, a),
        (G, R1, a + b),
        (G, R2, a + b + c),
        (I, R1, b),
        (I, R2, b + c),
        (R1, R2, c),
    ] {
        let g = Complex64::new(gamma, 0.0);
        l[(vec_idx(j, k), vec_idx(j, k))] -= g;
        l[(vec_idx(k, j), vec_idx(k, j))] -= g;
    }

    l
}

/// Microwave Rabi frequency from source power: omega = kappa * sqrt(power).
/// `kappa` carries the antenna/geometry calibration, rad/us per sqrt(power
/// unit); `power` is in linear units (not dBm).
pub fn rabi_from_power(power: f64, kappa: f64) -> Result<f64, ModelError> {
    if power < 0.0 {
        return Err(ModelError::NegativePower(power));
    }
    Ok(kappa * power.sqrt())
}
