//! Steady states of the Lindblad generator, the mean-field self-consistency
//! map and its fixed points, and direct time evolution of the nonlinear
//! master equation.

use nalgebra::{DMatrix, DVector, Matrix4};
use num_complex::Complex64;
use thiserror::Error;

use crate::model::{
    build_hamiltonian, build_liouvillian, vec_idx, DopplerParams, ModelConfig, DIM_SUPER, G, I,
    N_LEVELS, R1, R2,
};

/// Residual bound `|L vec(rho)|` every steady-state solve must meet.
pub const STEADY_STATE_RESIDUAL_TOL: f64 = 1e-10;
/// `|F(x) - x|` bound for a converged self-consistent root.
pub const ROOT_TOL: f64 = 1e-10;
/// Relative singular-value threshold below which the generator's null space
/// is considered to contain an extra dimension.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Step for centered finite-difference stability derivatives dF/dx.
pub const STABILITY_FD_STEP: f64 = 1e-4;
/// Default number of grid nodes for the full root scan on x in [0, 1].
pub const ROOT_SCAN_GRID: usize = 201;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("steady state is not unique: null space dimension {dim}")]
    DegenerateSteadyState { dim: usize },
    #[error("steady-state solve stalled at residual {residual:.3e}")]
    NotConverged { residual: f64 },
    #[error("root scan inconclusive in x interval [{lo:.6}, {hi:.6}]")]
    RootScanInconclusive { lo: f64, hi: f64 },
    #[error("root refinement failed near x = {x:.6} (|F(x)-x| = {residual:.3e})")]
    RootRefineFailed { x: f64, residual: f64 },
    #[error("time step too large: {detail} at t = {t:.6} us")]
    StepSizeTooLarge { t: f64, detail: String },
    #[error("density-matrix invariant violated: {0}")]
    InvariantViolation(String),
}

/// A physical 4x4 density matrix: Hermitian, unit trace, positive within
/// tolerance. Construction validates; the tolerances are the strict ones
/// used for steady states (time evolution validates at a looser 1e-7).
/// The eigenvalue floor is wider than the Hermiticity/trace one because a
/// strongly dressed generator (entries of order 1e3 rad/us against decays
/// of order 1e-2) leaves roundoff near 1e-8 in the near-zero populations,
/// while genuine solver defects violate positivity at the 1e-2 level or
/// worse.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Matrix4<Complex64>);

impl DensityMatrix {
    pub fn new(m: Matrix4<Complex64>) -> Result<Self, SolverError> {
        Self::with_tolerance(m, 1e-10, 1e-8)
    }

    pub fn with_tolerance(
        m: Matrix4<Complex64>,
        herm_trace_tol: f64,
        eig_tol: f64,
    ) -> Result<Self, SolverError> {
        for r in 0..N_LEVELS {
            for c in 0..N_LEVELS {
                if !m[(r, c)].re.is_finite() || !m[(r, c)].im.is_finite() {
                    return Err(SolverError::InvariantViolation("non-finite entry".into()));
                }
                let asym = (m[(r, c)] - m[(c, r)].conj()).norm();
                if asym > herm_trace_tol {
                    return Err(SolverError::InvariantViolation(format!(
                        "Hermiticity violated at ({r},{c}) by {asym:.3e}"
                    )));
                }
            }
        }
        let trace = (m[(0, 0)] + m[(1, 1)] + m[(2, 2)] + m[(3, 3)]).re;
        if (trace - 1.0).abs() > herm_trace_tol {
            return Err(SolverError::InvariantViolation(format!(
                "trace = {trace} is not 1"
            )));
        }
        // Hermitize roundoff before the eigenvalue check.
        let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let eigs = h.symmetric_eigenvalues();
        if let Some(min) = eigs.iter().cloned().reduce(f64::min) {
            if min < -eig_tol {
                return Err(SolverError::InvariantViolation(format!(
                    "negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(Self(h))
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn population(&self, level: usize) -> f64 {
        self.0[(level, level)].re
    }

    /// Probe coherence <g|rho|i>; its positive imaginary part is probe
    /// absorption in the sign conventions of this crate.
    pub fn probe_coherence(&self) -> Complex64 {
        self.0[(G, I)]
    }

    pub fn ground() -> Self {
        let mut m = Matrix4::zeros();
        m[(G, G)] = Complex64::new(1.0, 0.0);
        Self(m)
    }
}

/// Rydberg fraction rho_r1r1 + rho_r2r2, clamped to [0, 1].
pub fn rydberg_fraction(rho: &DensityMatrix) -> f64 {
    (rho.population(R1) + rho.population(R2)).clamp(0.0, 1.0)
}

fn mat_to_vec(m: &Matrix4<Complex64>) -> DVector<Complex64> {
    let mut v = DVector::zeros(DIM_SUPER);
    for c in 0..N_LEVELS {
        for r in 0..N_LEVELS {
            v[vec_idx(r, c)] = m[(r, c)];
        }
    }
    v
}

fn vec_to_mat(v: &DVector<Complex64>) -> Matrix4<Complex64> {
    let mut m = Matrix4::zeros();
    for c in 0..N_LEVELS {
        for r in 0..N_LEVELS {
            m[(r, c)] = v[vec_idx(r, c)];
        }
    }
    m
}

/// Unique steady state of a trace-preserving Lindblad generator.
///
/// Solves the bordered square system [[L, vec(I)], [trace-row, 0]] = [0; 1]:
/// vec(I) spans the left null space of L, which makes the border well posed
/// exactly when the right null space is one-dimensional. A singular or
/// ill-conditioned factorization triggers an SVD diagnosis that separates
/// a degenerate null space from plain numerical failure.
pub fn steady_state(l: &DMatrix<Complex64>) -> Result<DensityMatrix, SolverError> {
    assert_eq!(l.nrows(), DIM_SUPER);
    assert_eq!(l.ncols(), DIM_SUPER);
    let n = DIM_SUPER + 1;
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    m.view_mut((0, 0), (DIM_SUPER, DIM_SUPER)).copy_from(l);
    for d in 0..N_LEVELS {
        m[(vec_idx(d, d), DIM_SUPER)] = Complex64::new(1.0, 0.0);
        m[(DIM_SUPER, vec_idx(d, d))] = Complex64::new(1.0, 0.0);
    }
    let mut rhs = DVector::<Complex64>::zeros(n);
    rhs[DIM_SUPER] = Complex64::new(1.0, 0.0);

    let lu = m.clone().lu();
    let sol = lu.solve(&rhs);
    let candidate = sol.and_then(|s| {
        // Reject solutions from a numerically singular factorization.
        let u = lu.u();
        let mut dmin = f64::INFINITY;
        let mut dmax: f64 = 0.0;
        for k in 0..n {
            let a = u[(k, k)].norm();
            dmin = dmin.min(a);
            dmax = dmax.max(a);
        }
        if dmin <= 1e-13 * dmax {
            None
        } else {
            Some(s)
        }
    });

    let rho_vec = match candidate {
        Some(s) => s.rows(0, DIM_SUPER).into_owned(),
        None => return Err(diagnose_null_space(l)),
    };
    let rho = vec_to_mat(&rho_vec);
    let rho = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let residual = (l * mat_to_vec(&rho)).norm();
    if residual > STEADY_STATE_RESIDUAL_TOL {
        return Err(diagnose_null_space(l));
    }
    DensityMatrix::new(rho)
}

fn diagnose_null_space(l: &DMatrix<Complex64>) -> SolverError {
    let svd = l.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let dim = svd
        .singular_values
        .iter()
        .filter(|&&s| s <= DEGENERACY_TOL * smax.max(1e-300))
        .count();
    if dim > 1 {
        SolverError::DegenerateSteadyState { dim }
    } else {
        let residual = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        SolverError::NotConverged { residual }
    }
}

/// Velocity-averaged medium response at one scan point and trial fraction.
#[derive(Debug, Clone)]
pub struct MediumResponse {
    /// Weighted average density matrix over velocity classes.
    pub rho: DensityMatrix,
    /// Weighted average <g|rho|i>.
    pub probe_coherence: Complex64,
    /// Weighted average feedback fraction F(x).
    pub fraction: f64,
}

pub(crate) fn velocity_nodes(dp: &DopplerParams) -> Vec<(f64, f64)> {
    if !dp.enabled || dp.classes == 1 {
        return vec![(0.0, 1.0)];
    }
    let n = dp.classes;
    let half = dp.cutoff * dp.most_probable_speed;
    let mut nodes = Vec::with_capacity(n);
    let mut total = 0.0;
    for k in 0..n {
        let v = -half + 2.0 * half * (k as f64) / ((n - 1) as f64);
        let w = (-(v / dp.most_probable_speed).powi(2)).exp();
        total += w;
        nodes.push((v, w));
    }
    for node in &mut nodes {
        node.1 /= total;
    }
    nodes
}

/// Evaluate the mean-field response at coupling detuning `delta_c` for the
/// trial fraction `x`: the Rydberg levels are shifted by -V x, the
/// ground-Rydberg coherences broadened by beta x, and the steady state is
/// averaged over the configured velocity classes with a shared x.
pub fn averaged_response(
    config: &ModelConfig,
    delta_c: f64,
    x: f64,
) -> Result<MediumResponse, SolverError> {
    let x = x.clamp(0.0, 1.0);
    let mut drive = config.drive;
    drive.delta_c = delta_c;
    let shift = config.mean_field.level_shift(x);
    let decays = config.mean_field.effective_decays(&config.decay, x);

    let mut rho_acc = Matrix4::<Complex64>::zeros();
    let mut coherence = Complex64::new(0.0, 0.0);
    let mut fraction = 0.0;
    for (v, w) in velocity_nodes(&config.doppler) {
        let h = build_hamiltonian(&config.scheme, &drive, shift, v);
        let l = build_liouvillian(&h, &decays);
        let rho = steady_state(&l)?;
        let wz = Complex64::new(w, 0.0);
        rho_acc += rho.matrix() * wz;
        coherence += rho.probe_coherence() * wz;
        fraction += w * config.mean_field.fraction_of(rho.matrix());
    }
    Ok(MediumResponse {
        rho: DensityMatrix::new(rho_acc)?,
        probe_coherence: coherence,
        fraction,
    })
}

/// The self-consistency map F: trial fraction in, realized fraction out.
pub fn response_map(config: &ModelConfig, delta_c: f64, x: f64) -> Result<f64, SolverError> {
    Ok(averaged_response(config, delta_c, x)?.fraction)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone)]
pub struct FixedPoint {
    /// Self-consistent Rydberg fraction.
    pub x: f64,
    /// Velocity-averaged density matrix at that fraction.
    pub rho: DensityMatrix,
    pub stability: Stability,
    /// dF/dx at the root (stable iff < 1).
    pub dfdx: f64,
}

#[derive(Debug, Clone)]
pub struct FixedPointSet {
    pub delta_c: f64,
    /// Ordered by x ascending.
    pub roots: Vec<FixedPoint>,
}

impl FixedPointSet {
    pub fn stable(&self) -> impl Iterator<Item = &FixedPoint> {
        self.roots
            .iter()
            .filter(|r| r.stability == Stability::Stable)
    }
}

/// Shared root-finding machinery for one (config, delta_c) slice.
pub struct RootFinder<'a> {
    config: &'a ModelConfig,
    delta_c: f64,
}

impl<'a> RootFinder<'a> {
    pub fn new(config: &'a ModelConfig, delta_c: f64) -> Self {
        Self { config, delta_c }
    }

    pub fn f(&self, x: f64) -> Result<f64, SolverError> {
        response_map(self.config, self.delta_c, x)
    }

    /// g(x) = F(x) - x, the root function.
    pub fn g(&self, x: f64) -> Result<f64, SolverError> {
        Ok(self.f(x)? - x)
    }

    pub fn dfdx(&self, x: f64) -> Result<f64, SolverError> {
        let h = STABILITY_FD_STEP;
        let (lo, hi) = if x < h {
            (x, x + h)
        } else if x > 1.0 - h {
            (x - h, x)
        } else {
            (x - h, x + h)
        };
        Ok((self.f(hi)? - self.f(lo)?) / (hi - lo))
    }

    /// Bisection on a sign-change bracket down to |g| < ROOT_TOL.
    fn bisect(&self, mut lo: f64, mut g_lo: f64, mut hi: f64, mut g_hi: f64) -> Result<f64, SolverError> {
        debug_assert!(g_lo * g_hi < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let g_mid = self.g(mid)?;
            if g_mid.abs() < ROOT_TOL {
                return Ok(mid);
            }
            if g_lo * g_mid < 0.0 {
                hi = mid;
                g_hi = g_mid;
            } else {
                lo = mid;
                g_lo = g_mid;
            }
            let _ = g_hi;
            if hi - lo < 1e-16 {
                break;
            }
        }
        let mid = 0.5 * (lo + hi);
        let residual = self.g(mid)?.abs();
        if residual < ROOT_TOL {
            Ok(mid)
        } else {
            Err(SolverError::RootRefineFailed { x: mid, residual })
        }
    }

    /// Secant refinement from a seed; converges on simple roots. Returns the
    /// refined root or None if the iteration leaves [0, 1] or stalls.
    pub fn refine_from(&self, seed: f64) -> Result<Option<f64>, SolverError> {
        let mut x0 = seed.clamp(0.0, 1.0);
        let mut g0 = self.g(x0)?;
        if g0.abs() < ROOT_TOL {
            return Ok(Some(x0));
        }
        let mut x1 = (x0 + 1e-4).min(1.0);
        if x1 == x0 {
            x1 = x0 - 1e-4;
        }
        let mut g1 = self.g(x1)?;
        for _ in 0..60 {
            if g1.abs() < ROOT_TOL {
                return Ok(Some(x1));
            }
            let denom = g1 - g0;
            if denom == 0.0 {
                return Ok(None);
            }
            let mut x2 = x1 - g1 * (x1 - x0) / denom;
            if !x2.is_finite() {
                return Ok(None);
            }
            x2 = x2.clamp(0.0, 1.0);
            if (x2 - x1).abs() < 1e-17 && g1.abs() >= ROOT_TOL {
                return Ok(None);
            }
            x0 = x1;
            g0 = g1;
            x1 = x2;
            g1 = self.g(x1)?;
        }
        Ok(if g1.abs() < ROOT_TOL { Some(x1) } else { None })
    }

    /// Land on the root the quasi-static flow x' = F(x) - x reaches from
    /// `start`: march in the direction of the residual at the scan
    /// resolution until the residual changes sign, then bisect the bracket.
    /// F maps [0, 1] into itself, so the flow terminates inside the
    /// interval, and the fixed step crosses the slow plateau left behind by
    /// a just-vanished fold in a bounded number of evaluations.
    pub fn relax(&self, start: f64) -> Result<f64, SolverError> {
        let mut x = start.clamp(0.0, 1.0);
        let mut g = self.g(x)?;
        if g.abs() < ROOT_TOL {
            return Ok(x);
        }
        let h = 1.0 / (ROOT_SCAN_GRID - 1) as f64;
        let dir = g.signum();
        for _ in 0..=ROOT_SCAN_GRID {
            let x2 = (x + dir * h).clamp(0.0, 1.0);
            if x2 == x {
                // Pinned at a boundary, which the flow can only reach with
                // a vanishing residual (F(0) >= 0 and F(1) <= 1).
                return if g.abs() < ROOT_TOL {
                    Ok(x)
                } else {
                    Err(SolverError::RootRefineFailed {
                        x,
                        residual: g.abs(),
                    })
                };
            }
            let g2 = self.g(x2)?;
            if g2 == 0.0 {
                return Ok(x2);
            }
            if g2.signum() != dir {
                return if x < x2 {
                    self.bisect(x, g, x2, g2)
                } else {
                    self.bisect(x2, g2, x, g)
                };
            }
            x = x2;
            g = g2;
        }
        Err(SolverError::RootRefineFailed {
            x,
            residual: g.abs(),
        })
    }

    pub fn classify(&self, x: f64) -> Result<(Stability, f64), SolverError> {
        let d = self.dfdx(x)?;
        let stability = if d < 1.0 {
            Stability::Stable
        } else {
            Stability::Unstable
        };
        Ok((stability, d))
    }

    fn scan(&self, grid: usize) -> Result<Vec<f64>, SolverError> {
        let n = grid.max(3);
        let mut gs = Vec::with_capacity(n);
        for k in 0..n {
            let x = k as f64 / (n - 1) as f64;
            gs.push((x, self.g(x)?));
        }
        let mut roots: Vec<f64> = Vec::new();
        let push = |r: f64, roots: &mut Vec<f64>| {
            if !roots.iter().any(|&q| (q - r).abs() < 1e-7) {
                roots.push(r);
            }
        };
        for k in 0..n {
            if gs[k].1.abs() < ROOT_TOL {
                push(gs[k].0, &mut roots);
            }
        }
        for k in 0..n - 1 {
            let (x0, g0) = gs[k];
            let (x1, g1) = gs[k + 1];
            if g0.abs() < ROOT_TOL || g1.abs() < ROOT_TOL {
                continue;
            }
            if g0 * g1 < 0.0 {
                let r = self.bisect(x0, g0, x1, g1)?;
                push(r, &mut roots);
            }
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(roots)
    }
}

/// All self-consistent fixed points at one coupling detuning, found by a
/// uniform sign-change scan of g(x) = F(x) - x over [0, 1] plus bisection,
/// with stability from a centered finite difference of F.
pub fn self_consistent_roots(
    config: &ModelConfig,
    delta_c: f64,
    grid: usize,
) -> Result<FixedPointSet, SolverError> {
    let finder = RootFinder::new(config, delta_c);
    let mut roots = finder.scan(grid)?;

    let mut classified: Vec<(f64, Stability, f64)> = Vec::new();
    for &x in &roots {
        let (s, d) = finder.classify(x)?;
        classified.push((x, s, d));
    }

    // An even root count generically means a crossing was missed inside one
    // grid cell (or the scan straddles a tangency). Rescan denser once; if
    // the parity anomaly persists without a tangency signature, report the
    // most suspicious interval instead of guessing.
    if !roots.is_empty() && roots.len() % 2 == 0 {
        let tangent = classified.iter().any(|(_, _, d)| (d - 1.0).abs() < 1e-2);
        if !tangent {
            let denser = finder.scan(4 * grid)?;
            if denser.len() % 2 == 1 {
                roots = denser;
                classified.clear();
                for &x in &roots {
                    let (s, d) = finder.classify(x)?;
                    classified.push((x, s, d));
                }
            } else {
                // Adjacent roots with the same stability bracket the cell
                // where a crossing pair is unresolved.
                let mut lo = 0.0;
                let mut hi = 1.0;
                for w in classified.windows(2) {
                    if w[0].1 == w[1].1 {
                        lo = w[0].0;
                        hi = w[1].0;
                        break;
                    }
                }
                return Err(SolverError::RootScanInconclusive { lo, hi });
            }
        }
    }

    let mut out = Vec::with_capacity(classified.len());
    for (x, stability, dfdx) in classified {
        let response = averaged_response(config, delta_c, x)?;
        out.push(FixedPoint {
            x,
            rho: response.rho,
            stability,
            dfdx,
        });
    }
    Ok(FixedPointSet {
        delta_c,
        roots: out,
    })
}

/// A strided record of the nonlinear evolution. `states` are the
/// velocity-averaged density matrices, `fractions` the feedback fraction.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub fractions: Vec<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn final_fraction(&self) -> f64 {
        *self.fractions.last().expect("trajectory is never empty")
    }
}

struct ClassEvolver {
    weight: f64,
    l0: DMatrix<Complex64>,
    l1: DMatrix<Complex64>,
    state: DVector<Complex64>,
}

impl ClassEvolver {
    fn derivative(&self, state: &DVector<Complex64>, x: f64) -> DVector<Complex64> {
        let mut d = &self.l0 * state;
        if x != 0.0 {
            d += (&self.l1 * state) * Complex64::new(x, 0.0);
        }
        d
    }
}

fn shared_fraction(classes: &[ClassEvolver], states: &[DVector<Complex64>], config: &ModelConfig) -> f64 {
    let mut x = 0.0;
    for (class, s) in classes.iter().zip(states) {
        let m = vec_to_mat(s);
        x += class.weight * config.mean_field.fraction_of(&m);
    }
    x.clamp(0.0, 1.0)
}

/// Fixed-step RK4 integration of the nonlinear master equation
/// d rho_v/dt = L_v(x) rho_v with the shared fraction x recomputed from the
/// instantaneous states at every stage. The generator is exactly linear in
/// x (level shift and broadening are both proportional to x), so each class
/// caches L(0) and L(1) - L(0) once.
pub fn time_evolve(
    config: &ModelConfig,
    rho0: &DensityMatrix,
    duration: f64,
    dt: f64,
) -> Result<Trajectory, SolverError> {
    assert!(duration >= 0.0 && dt > 0.0, "need duration >= 0 and dt > 0");
    let steps = (duration / dt).ceil() as usize;
    let stride = (steps / 1024).max(1);

    let mut classes: Vec<ClassEvolver> = Vec::new();
    for (v, w) in velocity_nodes(&config.doppler) {
        let build = |x: f64| {
            let h = build_hamiltonian(&config.scheme, &config.drive, config.mean_field.level_shift(x), v);
            build_liouvillian(&h, &config.mean_field.effective_decays(&config.decay, x))
        };
        let l0 = build(0.0);
        let l1 = build(1.0) - &l0;
        classes.push(ClassEvolver {
            weight: w,
            l0,
            l1,
            state: mat_to_vec(rho0.matrix()),
        });
    }

    let record = |classes: &[ClassEvolver],
                  t: f64,
                  traj: &mut Trajectory|
     -> Result<(), SolverError> {
        let mut avg = Matrix4::<Complex64>::zeros();
        for class in classes {
            avg += vec_to_mat(&class.state) * Complex64::new(class.weight, 0.0);
        }
        let rho = DensityMatrix::with_tolerance(avg, 1e-7, 1e-7).map_err(|e| {
            SolverError::StepSizeTooLarge {
                t,
                detail: e.to_string(),
            }
        })?;
        let states: Vec<DVector<Complex64>> = classes.iter().map(|c| c.state.clone()).collect();
        let x = shared_fraction(classes, &states, config);
        traj.times.push(t);
        traj.states.push(rho);
        traj.fractions.push(x);
        Ok(())
    };

    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        fractions: Vec::new(),
    };
    record(&classes, 0.0, &mut traj)?;

    let nc = classes.len();
    let mut s0: Vec<DVector<Complex64>> = classes.iter().map(|c| c.state.clone()).collect();
    for step in 0..steps {
        let t = step as f64 * dt;
        let h = dt.min(duration - t);
        if h <= 0.0 {
            break;
        }
        let x0 = shared_fraction(&classes, &s0, config);
        let k1: Vec<_> = (0..nc).map(|j| classes[j].derivative(&s0[j], x0)).collect();

        let s1: Vec<_> = (0..nc)
            .map(|j| &s0[j] + &k1[j] * Complex64::new(h / 2.0, 0.0))
            .collect();
        let x1 = shared_fraction(&classes, &s1, config);
        let k2: Vec<_> = (0..nc).map(|j| classes[j].derivative(&s1[j], x1)).collect();

        let s2: Vec<_> = (0..nc)
            .map(|j| &s0[j] + &k2[j] * Complex64::new(h / 2.0, 0.0))
            .collect();
        let x2 = shared_fraction(&classes, &s2, config);
        let k3: Vec<_> = (0..nc).map(|j| classes[j].derivative(&s2[j], x2)).collect();

        let s3: Vec<_> = (0..nc)
            .map(|j| &s0[j] + &k3[j] * Complex64::new(h, 0.0))
            .collect();
        let x3 = shared_fraction(&classes, &s3, config);
        let k4: Vec<_> = (0..nc).map(|j| classes[j].derivative(&s3[j], x3)).collect();

        let sixth = Complex64::new(h / 6.0, 0.0);
        let third = Complex64::new(h / 3.0, 0.0);
        for j in 0..nc {
            s0[j] += &k1[j] * sixth + &k2[j] * third + &k3[j] * third + &k4[j] * sixth;
        }

        let t_next = t + h;
        for (j, class) in classes.iter_mut().enumerate() {
            class.state.copy_from(&s0[j]);
            // Trace is conserved by the generator, so drift flags blowup.
            let mut trace = Complex64::new(0.0, 0.0);
            for d in 0..N_LEVELS {
                trace += class.state[vec_idx(d, d)];
            }
            if !trace.re.is_finite() || (trace.re - 1.0).abs() > 1e-9 || trace.im.abs() > 1e-9 {
                return Err(SolverError::StepSizeTooLarge {
                    t: t_next,
                    detail: format!("trace drifted to {:.12}", trace.re),
                });
            }
        }

        if (step + 1) % stride == 0 || step + 1 == steps {
            record(&classes, t_next, &mut traj)?;
        }
    }
    Ok(traj)
}

/// Self-check for the fixed-step pre-condition: integrate with dt and dt/2
/// and return the endpoint difference in the feedback fraction. The
/// contract is that callers keep this below 1e-8.
pub fn step_size_check(
    config: &ModelConfig,
    rho0: &DensityMatrix,
    duration: f64,
    dt: f64,
) -> Result<f64, SolverError> {
    let a = time_evolve(config, rho0, duration, dt)?;
    let b = time_evolve(config, rho0, duration, dt / 2.0)?;
    let da = (a.final_fraction() - b.final_fraction()).abs();
    let ma = (a.final_state().matrix() - b.final_state().matrix()).norm();
    Ok(da.max(ma))
}
