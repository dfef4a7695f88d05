//! Command-line front end: spectra, phase maps, fits, microwave-power
//! estimation, built-in self-checks, equal-height microwave zeroing, and
//! bit-exact replay from run manifests.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration/usage error,
//! 3 numerical failure.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use rydbist::analysis::{
    self, AnalysisError, Calibration, ControlAxis, LinearFit, PhaseDiagram,
    DEFAULT_BISTABILITY_EPSILON,
};
use rydbist::config::{ConfigError, RawConfig};
use rydbist::model::ModelConfig;
use rydbist::output::{self, OutputError, RunManifest};
use rydbist::selfcheck;
use rydbist::solver::SolverError;
use rydbist::sweep::{self, ScanDirection, SweepError};
use rydbist::units::{dbm_to_mw, mhz_to_rad_per_us, rad_per_us_to_mhz};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{0}")]
    Invalid(String),
    #[error("self-check: {failed} of {total} checks failed")]
    SelfcheckFailed { failed: usize, total: usize },
    #[error("manifest args for {subcommand}: {source}")]
    ManifestArgs {
        subcommand: String,
        source: Box<toml::de::Error>,
    },
}

fn exit_code(e: &CliError) -> i32 {
    match e {
        CliError::Config(_) | CliError::Invalid(_) | CliError::ManifestArgs { .. } => 2,
        CliError::Output(o) => match o {
            OutputError::Write { .. } | OutputError::Read { .. } => 1,
            _ => 2,
        },
        CliError::Analysis(a) => match a {
            AnalysisError::NotFarDetuned { .. }
            | AnalysisError::DegenerateAbscissa
            | AnalysisError::TooFewPoints { .. }
            | AnalysisError::DegenerateCalibration => 2,
            _ => 3,
        },
        CliError::Sweep(_) | CliError::Solver(_) | CliError::SelfcheckFailed { .. } => 3,
    }
}

#[derive(Parser)]
#[command(
    name = "rydbist",
    version,
    about = "Microwave-dressed Rydberg EIT with mean-field optical bistability"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan the coupling detuning and write a transmission spectrum
    Spectrum(SpectrumArgs),
    /// Map hysteresis strength over (control value, coupling detuning)
    Phasemap(PhasemapArgs),
    /// Least-squares line fit of a two-column CSV
    Fit(FitArgs),
    /// Estimate microwave power from a measured peak center
    Estimate(EstimateArgs),
    /// Run the built-in physics oracle suite
    Selfcheck,
    /// Locate the microwave detuning giving equal-height dressed peaks
    MwZero(MwZeroArgs),
    /// Re-execute a run from its manifest, bit-exactly
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum DirectionArg {
    Both,
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum AxisArg {
    /// Probe Rabi frequency (control range in MHz)
    OmegaP,
    /// Microwave power (control range in mW, or dBm with --dbm)
    MwPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransformArg {
    Identity,
    Square,
    Sqrt,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct SpectrumArgs {
    /// Model configuration TOML
    #[arg(short, long)]
    config: PathBuf,
    /// Scan start: coupling detuning / 2 pi (MHz)
    #[arg(long, default_value_t = -25.0, allow_hyphen_values = true)]
    from_mhz: f64,
    /// Scan end (MHz)
    #[arg(long, default_value_t = 15.0, allow_hyphen_values = true)]
    to_mhz: f64,
    /// Grid points
    #[arg(long, default_value_t = sweep::DEFAULT_GRID_POINTS)]
    points: usize,
    /// Which scan direction(s) to run
    #[arg(long, value_enum, default_value = "both")]
    direction: DirectionArg,
    /// Output CSV
    #[arg(short, long, default_value = "spectrum.csv")]
    out: PathBuf,
    /// Optional SVG line plot
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Optional run manifest enabling `rydbist replay`
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct PhasemapArgs {
    /// Model configuration TOML
    #[arg(short, long)]
    config: PathBuf,
    /// Detuning-axis start (MHz)
    #[arg(long, default_value_t = -25.0, allow_hyphen_values = true)]
    from_mhz: f64,
    /// Detuning-axis end (MHz)
    #[arg(long, default_value_t = 15.0, allow_hyphen_values = true)]
    to_mhz: f64,
    /// Detuning-axis points
    #[arg(long, default_value_t = 201)]
    points: usize,
    /// Control axis kind
    #[arg(long, value_enum)]
    axis: AxisArg,
    /// Control-axis start (MHz for omega-p, mW or dBm for mw-power)
    #[arg(long, allow_hyphen_values = true)]
    control_from: f64,
    /// Control-axis end
    #[arg(long, allow_hyphen_values = true)]
    control_to: f64,
    /// Control-axis points
    #[arg(long, default_value_t = 21)]
    control_points: usize,
    /// Interpret the control range as dBm (mw-power axis only)
    #[arg(long)]
    dbm: bool,
    /// Microwave Rabi calibration: omega_mw / 2 pi in MHz per sqrt(mW)
    #[arg(long)]
    kappa_mhz_per_sqrt_mw: Option<f64>,
    /// Transmission-difference threshold flagging bistability
    #[arg(long, default_value_t = DEFAULT_BISTABILITY_EPSILON)]
    epsilon: f64,
    /// Output CSV (difference map)
    #[arg(short, long, default_value = "phasemap.csv")]
    out: PathBuf,
    /// Optional sidecar CSV with per-row red-side bistable intervals
    #[arg(long)]
    regions: Option<PathBuf>,
    /// Optional SVG heat map
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Optional run manifest enabling `rydbist replay`
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Worker threads for rows (defaults to all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
struct FitArgs {
    /// Two-column CSV of (x, y) samples; a header line is skipped
    #[arg(long = "in", value_name = "CSV")]
    input: PathBuf,
    /// Abscissa transform applied before fitting
    #[arg(long, value_enum, default_value = "identity")]
    transform: TransformArg,
    /// Output JSON fit record
    #[arg(short, long, default_value = "fit.json")]
    out: PathBuf,
}

#[derive(Debug, Clone, Args)]
struct EstimateArgs {
    /// Calibration JSON (electrometry record or plain fit record)
    #[arg(long)]
    calibration: PathBuf,
    /// Measured transparency-peak center (MHz)
    #[arg(long, allow_hyphen_values = true)]
    center_mhz: f64,
    /// Optional JSON output
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct MwZeroArgs {
    /// Model configuration TOML
    #[arg(short, long)]
    config: PathBuf,
    /// Microwave-detuning scan start (MHz)
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    from_mhz: f64,
    /// Microwave-detuning scan end (MHz)
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    to_mhz: f64,
    /// Detuning samples across the scan
    #[arg(long, default_value_t = 13)]
    points: usize,
    /// Half-width of the coupling-detuning window per sample (MHz);
    /// defaults to the dressed splitting plus margin
    #[arg(long)]
    window_mhz: Option<f64>,
    /// Points across the coupling-detuning window
    #[arg(long, default_value_t = 201)]
    scan_points: usize,
    /// Output JSON
    #[arg(short, long, default_value = "mw_zero.json")]
    out: PathBuf,
    /// Optional run manifest enabling `rydbist replay`
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct ReplayArgs {
    /// Run manifest written by a previous invocation
    #[arg(long)]
    manifest: PathBuf,
    /// Directory receiving the regenerated outputs (file names kept)
    #[arg(long)]
    out_dir: PathBuf,
}

/// Output-path policy: replay redirects every output into a chosen
/// directory, keeping file names; normal runs write paths as given.
struct Dest {
    out_dir: Option<PathBuf>,
}

impl Dest {
    fn here() -> Self {
        Dest { out_dir: None }
    }

    fn into_dir(dir: &Path) -> Self {
        Dest {
            out_dir: Some(dir.to_path_buf()),
        }
    }

    fn path(&self, p: &Path) -> PathBuf {
        match &self.out_dir {
            Some(d) => d.join(p.file_name().unwrap_or(p.as_os_str())),
            None => p.to_path_buf(),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        let mut source = std::error::Error::source(&e);
        while let Some(s) = source {
            eprintln!("  caused by: {s}");
            source = s.source();
        }
        std::process::exit(exit_code(&e));
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum(args) => {
            let started = Instant::now();
            let raw = RawConfig::load(&args.config)?;
            let config = raw.resolve()?;
            let outputs = cmd_spectrum(&args, &config, &Dest::here())?;
            finish_manifest("spectrum", &args, args.manifest.as_deref(), &raw, outputs, started)
        }
        Command::Phasemap(args) => {
            let started = Instant::now();
            let raw = RawConfig::load(&args.config)?;
            let config = raw.resolve()?;
            let outputs = cmd_phasemap(&args, &config, &Dest::here())?;
            finish_manifest("phasemap", &args, args.manifest.as_deref(), &raw, outputs, started)
        }
        Command::Fit(args) => cmd_fit(&args),
        Command::Estimate(args) => cmd_estimate(&args),
        Command::Selfcheck => cmd_selfcheck(),
        Command::MwZero(args) => {
            let started = Instant::now();
            let raw = RawConfig::load(&args.config)?;
            let config = raw.resolve()?;
            let outputs = cmd_mw_zero(&args, &config, &Dest::here())?;
            finish_manifest("mw-zero", &args, args.manifest.as_deref(), &raw, outputs, started)
        }
        Command::Replay(args) => cmd_replay(&args),
    }
}

fn finish_manifest<A: Serialize>(
    subcommand: &str,
    args: &A,
    manifest_path: Option<&Path>,
    raw: &RawConfig,
    outputs: Vec<PathBuf>,
    started: Instant,
) -> Result<(), CliError> {
    let Some(path) = manifest_path else {
        return Ok(());
    };
    let table = toml::Table::try_from(args)
        .map_err(|e| CliError::Invalid(format!("cannot serialize arguments: {e}")))?;
    let manifest = RunManifest {
        tool: "rydbist".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: subcommand.into(),
        outputs,
        duration_ms: started.elapsed().as_millis() as u64,
        args: table,
        config: raw.clone(),
    };
    output::write_manifest(path, &manifest)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn validated_grid(from_mhz: f64, to_mhz: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if !(to_mhz > from_mhz) || points < 2 {
        return Err(CliError::Invalid(format!(
            "scan range needs to_mhz > from_mhz and points >= 2 (got {from_mhz}..{to_mhz}, {points})"
        )));
    }
    Ok(sweep::grid_from_mhz(from_mhz, to_mhz, points))
}

fn linspace(from: f64, to: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![from];
    }
    (0..n)
        .map(|k| from + (to - from) * k as f64 / (n - 1) as f64)
        .collect()
}

fn cmd_spectrum(
    args: &SpectrumArgs,
    config: &ModelConfig,
    dest: &Dest,
) -> Result<Vec<PathBuf>, CliError> {
    let grid = validated_grid(args.from_mhz, args.to_mhz, args.points)?;
    let spectra: Vec<sweep::Spectrum> = match args.direction {
        DirectionArg::Both => {
            let pair = sweep::hysteresis_pair(config, &grid)?;
            vec![pair.forward, pair.backward]
        }
        DirectionArg::Forward => vec![sweep::sweep_spectrum(config, &grid, ScanDirection::Forward)?],
        DirectionArg::Backward => {
            vec![sweep::sweep_spectrum(config, &grid, ScanDirection::Backward)?]
        }
    };

    let out = dest.path(&args.out);
    let refs: Vec<&sweep::Spectrum> = spectra.iter().collect();
    output::write_spectrum_csv(&out, &refs)?;
    let mut outputs = vec![out.clone()];
    println!(
        "wrote {} ({} points x {} direction(s))",
        out.display(),
        grid.len(),
        spectra.len()
    );

    if let Some(svg) = &args.svg {
        let svg = dest.path(svg);
        let series: Vec<(&str, Vec<(f64, f64)>)> = spectra
            .iter()
            .map(|s| {
                let pts: Vec<(f64, f64)> = s
                    .ascending()
                    .into_iter()
                    .map(|(d, t, _)| (rad_per_us_to_mhz(d), t))
                    .collect();
                (s.direction.label(), pts)
            })
            .collect();
        output::svg_line_plot(
            &svg,
            "Probe transmission",
            "coupling detuning / 2pi (MHz)",
            "transmission",
            &series,
        )?;
        println!("wrote {}", svg.display());
        outputs.push(svg);
    }
    Ok(outputs)
}

fn cmd_phasemap(
    args: &PhasemapArgs,
    config: &ModelConfig,
    dest: &Dest,
) -> Result<Vec<PathBuf>, CliError> {
    if let Some(jobs) = args.jobs {
        // First builder wins; later calls in the same process are no-ops.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let grid = validated_grid(args.from_mhz, args.to_mhz, args.points)?;
    if args.control_points == 0 {
        return Err(CliError::Invalid("control_points must be >= 1".into()));
    }
    let control = linspace(args.control_from, args.control_to, args.control_points);
    let axis = match args.axis {
        AxisArg::OmegaP => {
            if args.dbm {
                return Err(CliError::Invalid(
                    "--dbm applies only to --axis mw-power".into(),
                ));
            }
            if control.iter().any(|&v| v < 0.0) {
                return Err(CliError::Invalid(
                    "probe Rabi control values must be >= 0 MHz".into(),
                ));
            }
            ControlAxis::ProbeRabi {
                omega_p: control.iter().map(|&v| mhz_to_rad_per_us(v)).collect(),
            }
        }
        AxisArg::MwPower => {
            let kappa_mhz = args.kappa_mhz_per_sqrt_mw.ok_or_else(|| {
                CliError::Invalid("--axis mw-power requires --kappa-mhz-per-sqrt-mw".into())
            })?;
            if !(kappa_mhz > 0.0) {
                return Err(CliError::Invalid("kappa must be > 0".into()));
            }
            let powers_mw: Vec<f64> = if args.dbm {
                control.iter().map(|&v| dbm_to_mw(v)).collect()
            } else {
                if control.iter().any(|&v| v < 0.0) {
                    return Err(CliError::Invalid("powers in mW must be >= 0".into()));
                }
                control
            };
            ControlAxis::MwPower {
                powers_mw,
                kappa: mhz_to_rad_per_us(kappa_mhz),
            }
        }
    };

    let map = PhaseDiagram::compute(config, axis, &grid)?;
    let out = dest.path(&args.out);
    output::write_phasemap_csv(&out, &map)?;
    let mut outputs = vec![out.clone()];
    println!(
        "wrote {} ({} control rows x {} detuning points)",
        out.display(),
        map.rows.len(),
        grid.len()
    );

    if let Some(regions) = &args.regions {
        let regions = dest.path(regions);
        output::write_regions_csv(&regions, &map, args.epsilon)?;
        println!("wrote {}", regions.display());
        outputs.push(regions);
    }
    if let Some(svg) = &args.svg {
        let svg = dest.path(svg);
        let x_mhz: Vec<f64> = map.delta_c.iter().map(|&d| rad_per_us_to_mhz(d)).collect();
        output::svg_heatmap(
            &svg,
            "Hysteresis |T_fwd - T_bwd|",
            "coupling detuning / 2pi (MHz)",
            map.axis.file_label(),
            &x_mhz,
            &map.axis.file_values(),
            &map.difference_matrix(),
        )?;
        println!("wrote {}", svg.display());
        outputs.push(svg);
    }
    Ok(outputs)
}

fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let rows = output::read_xy_csv(&args.input)?;
    let mut x: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.1).collect();
    match args.transform {
        TransformArg::Identity => {}
        TransformArg::Square => x.iter_mut().for_each(|v| *v = *v * *v),
        TransformArg::Sqrt => {
            if x.iter().any(|&v| v < 0.0) {
                return Err(CliError::Invalid(
                    "sqrt transform needs non-negative abscissa values".into(),
                ));
            }
            x.iter_mut().for_each(|v| *v = v.sqrt());
        }
    }
    let fit = analysis::fit_linear(&x, &y)?;
    output::write_json(&args.out, &fit)?;
    println!(
        "fit: slope {:.6e}, intercept {:.6e}, r2 {:.6}, rse {:.3e} (n = {}) -> {}",
        fit.slope,
        fit.intercept,
        fit.r2,
        fit.rse,
        fit.n,
        args.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct EstimateRecord {
    center_mhz: f64,
    power_mw: f64,
    sigma_mw: f64,
    in_range: bool,
}

fn cmd_estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let calibration: Calibration = match output::read_json::<Calibration>(&args.calibration) {
        Ok(c) => c,
        Err(first) => match output::read_json::<LinearFit>(&args.calibration) {
            Ok(fit) => Calibration {
                fit,
                delta_mw_mhz: 0.0,
                kappa_mhz_per_sqrt_mw: 0.0,
                sqrt_mw_min: 0.0,
                sqrt_mw_max: f64::INFINITY,
                centers_mhz: vec![],
            },
            Err(_) => return Err(first.into()),
        },
    };
    let estimate = analysis::estimate_mw_power(&calibration, args.center_mhz)?;
    if !estimate.in_range {
        eprintln!("warning: inferred power leaves the calibrated span; extrapolating");
    }
    println!(
        "estimated microwave power: {:.6e} mW (sigma {:.2e} mW, in calibrated range: {})",
        estimate.power_mw, estimate.sigma_mw, estimate.in_range
    );
    if let Some(out) = &args.out {
        output::write_json(
            out,
            &EstimateRecord {
                center_mhz: args.center_mhz,
                power_mw: estimate.power_mw,
                sigma_mw: estimate.sigma_mw,
                in_range: estimate.in_range,
            },
        )?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_selfcheck() -> Result<(), CliError> {
    let scale = match std::env::var("RYDBIST_TOL") {
        Ok(text) => match text.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => v,
            _ => {
                return Err(CliError::Invalid(format!(
                    "RYDBIST_TOL must be a positive number, got {text:?}"
                )))
            }
        },
        Err(_) => 1.0,
    };
    if scale != 1.0 {
        println!("tolerance scale: {scale}");
    }
    let outcomes = selfcheck::run_all(scale);
    let mut failed = 0;
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("check {}: {status} ({})", o.name, o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    println!("self-check: {}/{} passed", outcomes.len() - failed, outcomes.len());
    if failed > 0 {
        return Err(CliError::SelfcheckFailed {
            failed,
            total: outcomes.len(),
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct MwZeroRecord {
    delta_mw_zero_mhz: f64,
    /// (delta_mw_mhz, height asymmetry) samples across the scan.
    samples: Vec<(f64, f64)>,
}

fn cmd_mw_zero(
    args: &MwZeroArgs,
    config: &ModelConfig,
    dest: &Dest,
) -> Result<Vec<PathBuf>, CliError> {
    if !(args.to_mhz > args.from_mhz) || args.points < 3 {
        return Err(CliError::Invalid(
            "mw-zero needs to_mhz > from_mhz and points >= 3".into(),
        ));
    }
    let half_window = match args.window_mhz {
        Some(w) if w > 0.0 => mhz_to_rad_per_us(w),
        Some(w) => return Err(CliError::Invalid(format!("window_mhz must be > 0, got {w}"))),
        None => config.drive.omega_mw + mhz_to_rad_per_us(5.0 + args.to_mhz.abs().max(args.from_mhz.abs())),
    };
    if args.scan_points < 16 {
        return Err(CliError::Invalid("scan_points must be >= 16".into()));
    }
    let grid = sweep::grid_from_mhz(
        -rad_per_us_to_mhz(half_window),
        rad_per_us_to_mhz(half_window),
        args.scan_points,
    );
    let result = analysis::microwave_zero(
        config,
        mhz_to_rad_per_us(args.from_mhz),
        mhz_to_rad_per_us(args.to_mhz),
        args.points,
        &grid,
    )?;
    let record = MwZeroRecord {
        delta_mw_zero_mhz: rad_per_us_to_mhz(result.delta_mw),
        samples: result
            .samples
            .iter()
            .map(|&(d, a)| (rad_per_us_to_mhz(d), a))
            .collect(),
    };
    let out = dest.path(&args.out);
    output::write_json(&out, &record)?;
    println!(
        "equal-height microwave zero at {:.6} MHz -> {}",
        record.delta_mw_zero_mhz,
        out.display()
    );
    Ok(vec![out])
}

fn cmd_replay(args: &ReplayArgs) -> Result<(), CliError> {
    let manifest = output::read_manifest(&args.manifest)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|source| {
        CliError::Output(OutputError::Write {
            path: args.out_dir.clone(),
            source,
        })
    })?;
    let config = manifest.config.resolve()?;
    let dest = Dest::into_dir(&args.out_dir);
    let parse = |e: toml::de::Error| CliError::ManifestArgs {
        subcommand: manifest.subcommand.clone(),
        source: Box::new(e),
    };
    let outputs = match manifest.subcommand.as_str() {
        "spectrum" => {
            let cmd_args: SpectrumArgs = manifest.args.clone().try_into().map_err(parse)?;
            cmd_spectrum(&cmd_args, &config, &dest)?
        }
        "phasemap" => {
            let cmd_args: PhasemapArgs = manifest.args.clone().try_into().map_err(parse)?;
            cmd_phasemap(&cmd_args, &config, &dest)?
        }
        "mw-zero" => {
            let cmd_args: MwZeroArgs = manifest.args.clone().try_into().map_err(parse)?;
            cmd_mw_zero(&cmd_args, &config, &dest)?
        }
        other => {
            return Err(CliError::Invalid(format!(
                "replay supports spectrum, phasemap and mw-zero manifests, not {other:?}"
            )))
        }
    };
    println!(
        "replayed {} from {} ({} output(s))",
        manifest.subcommand,
        args.manifest.display(),
        outputs.len()
    );
    Ok(())
}
