//! `cfm`: command-line front end for the collision-force-map toolkit.
//!
//! Wires the library crate into workflows: fit force models from measurement
//! CSVs, predict forces, invert for safe approach speeds, sweep workspace
//! maps, compute a planar arm's effective mass, score predictors against
//! test data, and synthesize datasets. Exit codes: 0 success, 1 operation
//! error, 2 usage error. Numeric output uses 9 significant digits.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cfm_core::baselines::{
    effective_mass_ts15066, pfl_force, pfl_max_velocity, PflParams, DEFAULT_SPRING_CONSTANT_NPM,
};
use cfm_core::dataio::{parse_datasets, synthesize_dataset, write_csv, GridSpec, MeasurementSet};
use cfm_core::evaluation::{
    compare_models, comparison_table_csv, comparison_table_text, PerHeightEnsemble,
};
use cfm_core::fitting::{fit_cfm2d, fit_cfm3d, read_models, write_models, CfmModel, DomainBox};
use cfm_core::fmt::sig9;
use cfm_core::mechanics::{
    effective_mass, effective_mass_map, ik_planar3, Elbow, ImpactDirection, JointConfig,
    LinkInertiaModel, PlanarArm,
};
use cfm_core::prediction::{
    force_map, max_safe_velocity, predict_force, speed_map, ForcePredictor, SafetyQuery,
    WorkspaceMap, DEFAULT_MARGIN_FACTOR,
};
use cfm_core::Mass;
use nalgebra::Vector2;

#[derive(Parser)]
#[command(
    name = "cfm",
    version,
    about = "Collision-force-map toolkit: fit impact-force models, plan safe \
             approach speeds, and map a planar arm's effective mass."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit force models ln F = sum_j b_j d^a h^b v^c with two-stage term selection
    Fit(FitArgs),
    /// Fit the fixed four-term distance-velocity model on a single-height dataset
    Fit2d(Fit2dArgs),
    /// Predict the peak impact force at one workspace state
    Predict(PredictArgs),
    /// Highest approach speed that keeps the predicted force under a limit
    SafeSpeed(SafeSpeedArgs),
    /// Sweep predicted force over a distance-height grid at fixed speed
    ForceMap(ForceMapArgs),
    /// Sweep the safe approach speed over a distance-height grid
    SpeedMap(SpeedMapArgs),
    /// Effective mass of a planar 3-link arm at one pose or over a grid
    Effmass(EffmassArgs),
    /// Closed-form reference values: PFL speed/force and rule-of-thumb mass
    #[command(subcommand)]
    Baseline(BaselineCmd),
    /// Score a model's under-/overestimation against a measurement CSV
    Evaluate(EvaluateArgs),
    /// Compare predictors on one test set (model vs per-height fits vs PFL)
    Compare(CompareArgs),
    /// Generate synthetic measurements from a model over a grid
    Synth(SynthArgs),
}

// ---------------------------------------------------------------------------
// Shared flag groups
// ---------------------------------------------------------------------------

/// Distance-height grid axes. Bounds left unset fall back to a caller-chosen
/// range (the model's trained box for map commands).
#[derive(Args, Debug)]
struct GridArgs {
    /// Smallest grid distance (m)
    #[arg(long)]
    d_min: Option<f64>,
    /// Largest grid distance (m)
    #[arg(long)]
    d_max: Option<f64>,
    /// Number of distance grid points
    #[arg(long, default_value_t = 5)]
    d_steps: usize,
    /// Smallest grid height (m)
    #[arg(long)]
    h_min: Option<f64>,
    /// Largest grid height (m)
    #[arg(long)]
    h_max: Option<f64>,
    /// Number of height grid points
    #[arg(long, default_value_t = 5)]
    h_steps: usize,
}

impl GridArgs {
    fn resolve(&self, d_default: (f64, f64), h_default: (f64, f64)) -> Result<GridSpec> {
        let d = linspace(
            self.d_min.unwrap_or(d_default.0),
            self.d_max.unwrap_or(d_default.1),
            self.d_steps,
        )
        .context("bad distance axis")?;
        let h = linspace(
            self.h_min.unwrap_or(h_default.0),
            self.h_max.unwrap_or(h_default.1),
            self.h_steps,
        )
        .context("bad height axis")?;
        Ok(GridSpec::planar(d, h)?)
    }
}

/// Planar-arm geometry and mass flags, defaulting to the reference
/// three-link arm (lengths 0.5/0.45/0.05 m, masses 13/4/4 kg).
#[derive(Args, Debug)]
struct ArmArgs {
    /// Link lengths base to tip (m), comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.45, 0.05])]
    lengths: Vec<f64>,
    /// Link masses base to tip (kg), comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [13.0, 4.0, 4.0])]
    masses: Vec<f64>,
    /// Mass distribution per link: uniform-rod or point-mass-at-tip
    #[arg(long, default_value = "uniform-rod")]
    inertia: LinkInertiaModel,
}

impl ArmArgs {
    fn build(&self) -> Result<PlanarArm> {
        Ok(PlanarArm::new(
            self.lengths.clone(),
            self.masses.clone(),
            self.inertia,
        )?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MapFormat {
    /// One row per cell: distance, height, value, flag
    Csv,
    /// Aligned text block, highest row first
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    /// Aligned text table
    Text,
    /// Machine-readable rows
    Csv,
}

// ---------------------------------------------------------------------------
// Subcommand flags
// ---------------------------------------------------------------------------

#[derive(Args)]
struct FitArgs {
    /// Measurement CSV (label,distance_m,height_m,velocity_mps,force_n,repetition)
    #[arg(long)]
    data: PathBuf,
    /// Candidate pool: every monomial d^a h^b v^c up to this total degree
    #[arg(long, default_value_t = 3)]
    pool_degree: u32,
    /// Significance level for the first-stage coefficient filter
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Keep terms whose removal would cost more than this score
    #[arg(long, default_value_t = 0.5)]
    stop: f64,
    /// Write the fitted models (JSON) here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Fit2dArgs {
    /// Single-height measurement CSV
    #[arg(long)]
    data: PathBuf,
    /// Dataset label to fit when the file holds several
    #[arg(long)]
    label: Option<String>,
    /// Write the fitted model (JSON) here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Model JSON produced by `fit`
    #[arg(long)]
    model: PathBuf,
    /// Model label to use when the file holds several
    #[arg(long)]
    label: Option<String>,
    /// Distance from the robot base to the contact point (m)
    #[arg(short = 'd', long)]
    distance: f64,
    /// Contact height above the work surface (m)
    #[arg(short = 'H', long)]
    height: f64,
    /// Approach speed (m/s)
    #[arg(short = 'v', long)]
    velocity: f64,
}

#[derive(Args)]
struct SafeSpeedArgs {
    /// Model JSON produced by `fit`
    #[arg(long)]
    model: PathBuf,
    /// Model label to use when the file holds several
    #[arg(long)]
    label: Option<String>,
    /// Distance from the robot base to the contact point (m)
    #[arg(short = 'd', long)]
    distance: f64,
    /// Contact height above the work surface (m)
    #[arg(short = 'H', long)]
    height: f64,
    /// Peak-force limit to respect (N)
    #[arg(long)]
    fmax: f64,
    /// Safety margin multiplied onto predictions before the limit check (>= 1)
    #[arg(long, default_value_t = DEFAULT_MARGIN_FACTOR)]
    margin: f64,
}

#[derive(Args)]
struct ForceMapArgs {
    /// Model JSON produced by `fit`
    #[arg(long)]
    model: PathBuf,
    /// Model label to use when the file holds several
    #[arg(long)]
    label: Option<String>,
    /// Approach speed for every cell (m/s)
    #[arg(short = 'v', long)]
    velocity: f64,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value_t = MapFormat::Csv)]
    format: MapFormat,
    /// Write the map here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpeedMapArgs {
    /// Model JSON produced by `fit`
    #[arg(long)]
    model: PathBuf,
    /// Model label to use when the file holds several
    #[arg(long)]
    label: Option<String>,
    /// Peak-force limit to respect (N)
    #[arg(long)]
    fmax: f64,
    /// Safety margin multiplied onto predictions before the limit check (>= 1)
    #[arg(long, default_value_t = DEFAULT_MARGIN_FACTOR)]
    margin: f64,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value_t = MapFormat::Csv)]
    format: MapFormat,
    /// Write the map here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EffmassArgs {
    #[command(flatten)]
    arm: ArmArgs,
    /// Impact direction x component (normalized internally)
    #[arg(long, default_value_t = 0.0)]
    ux: f64,
    /// Impact direction y component (normalized internally)
    #[arg(long, default_value_t = -1.0)]
    uy: f64,
    /// Joint angles (rad), comma separated; alternative to -d/-H
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["distance", "height", "map"])]
    q: Option<Vec<f64>>,
    /// Contact distance from the base (m); pose solved by inverse kinematics
    #[arg(short = 'd', long, requires = "height")]
    distance: Option<f64>,
    /// Contact height (m); pose solved by inverse kinematics
    #[arg(short = 'H', long, requires = "distance")]
    height: Option<f64>,
    /// Tool orientation for the kinematic solve (degrees from horizontal)
    #[arg(long, default_value_t = -90.0)]
    phi_deg: f64,
    /// Elbow branch for the kinematic solve: up or down
    #[arg(long, default_value = "up")]
    elbow: Elbow,
    /// Sweep a distance-height grid instead of answering one query
    #[arg(long, conflicts_with_all = ["distance", "height"])]
    map: bool,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value_t = MapFormat::Csv)]
    format: MapFormat,
    /// Write the map here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BaselineCmd {
    /// Highest PFL-compliant approach speed for a force limit
    Pfl(PflArgs),
    /// Contact force the PFL spring model yields at a given speed
    PflForce(PflForceArgs),
    /// Rule-of-thumb effective robot mass: half the moving mass plus payload
    Effmass(BaselineEffmassArgs),
}

#[derive(Args)]
struct PflArgs {
    /// Permissible peak contact force (N)
    #[arg(long)]
    fmax: f64,
    /// Contact spring constant (N/m)
    #[arg(long, default_value_t = DEFAULT_SPRING_CONSTANT_NPM)]
    k: f64,
    /// Effective robot mass (kg)
    #[arg(long)]
    mr: f64,
    /// Effective human body-part mass (kg, or 'inf' for a clamped body part)
    #[arg(long)]
    mh: Mass,
}

#[derive(Args)]
struct PflForceArgs {
    /// Approach speed (m/s)
    #[arg(short = 'v', long)]
    velocity: f64,
    /// Contact spring constant (N/m)
    #[arg(long, default_value_t = DEFAULT_SPRING_CONSTANT_NPM)]
    k: f64,
    /// Effective robot mass (kg)
    #[arg(long)]
    mr: f64,
    /// Effective human body-part mass (kg, or 'inf' for a clamped body part)
    #[arg(long)]
    mh: Mass,
}

#[derive(Args)]
struct BaselineEffmassArgs {
    /// Total moving robot mass (kg)
    #[arg(long)]
    mass: f64,
    /// Payload mass (kg)
    #[arg(long, default_value_t = 0.0)]
    payload: f64,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Model JSON produced by `fit`
    #[arg(long)]
    model: PathBuf,
    /// Model label to use when the file holds several
    #[arg(long)]
    label: Option<String>,
    /// Test measurement CSV
    #[arg(long)]
    data: PathBuf,
    /// Dataset label inside the test CSV
    #[arg(long)]
    data_label: Option<String>,
    #[arg(long, value_enum, default_value_t = TableFormat::Text)]
    format: TableFormat,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Reference model JSON; every other predictor is flagged against it
    #[arg(long)]
    model: PathBuf,
    /// Model label to use when the file holds several
    #[arg(long)]
    label: Option<String>,
    /// Test measurement CSV scored by every predictor
    #[arg(long)]
    data: PathBuf,
    /// Dataset label inside the test CSV
    #[arg(long)]
    data_label: Option<String>,
    /// Training CSV for a per-height distance-velocity ensemble baseline
    #[arg(long)]
    train: Option<PathBuf>,
    /// Dataset label inside the training CSV
    #[arg(long)]
    train_label: Option<String>,
    /// Effective robot mass (kg) enabling a PFL spring baseline
    #[arg(long, requires = "mh")]
    mr: Option<f64>,
    /// Effective human body-part mass (kg or 'inf') for the PFL baseline
    #[arg(long, requires = "mr")]
    mh: Option<Mass>,
    /// Contact spring constant (N/m) for the PFL baseline
    #[arg(long, default_value_t = DEFAULT_SPRING_CONSTANT_NPM)]
    k: f64,
    #[arg(long, value_enum, default_value_t = TableFormat::Text)]
    format: TableFormat,
    /// Write the table here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Model JSON to sample from
    #[arg(long)]
    model: PathBuf,
    /// Model label to use when the file holds several
    #[arg(long)]
    label: Option<String>,
    #[command(flatten)]
    grid: GridArgs,
    /// Smallest grid speed (m/s)
    #[arg(long)]
    v_min: Option<f64>,
    /// Largest grid speed (m/s)
    #[arg(long)]
    v_max: Option<f64>,
    /// Number of speed grid points
    #[arg(long, default_value_t = 5)]
    v_steps: usize,
    /// Gaussian repetition-noise standard deviation (N)
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Repetitions per grid state
    #[arg(long, default_value_t = 1)]
    reps: u32,
    /// Random seed; identical seeds reproduce identical datasets
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Entry point and helpers
// ---------------------------------------------------------------------------

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Fit(a) => run_fit(a),
        Command::Fit2d(a) => run_fit2d(a),
        Command::Predict(a) => run_predict(a),
        Command::SafeSpeed(a) => run_safe_speed(a),
        Command::ForceMap(a) => run_force_map(a),
        Command::SpeedMap(a) => run_speed_map(a),
        Command::Effmass(a) => run_effmass(a),
        Command::Baseline(a) => run_baseline(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Compare(a) => run_compare(a),
        Command::Synth(a) => run_synth(a),
    }
}

/// Evenly spaced axis; endpoints land exactly on `lo` and `hi`.
fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !lo.is_finite() || !hi.is_finite() {
        bail!("axis bounds must be finite, got {lo} .. {hi}");
    }
    match n {
        0 => bail!("axes need at least one point"),
        1 => Ok(vec![lo]),
        _ => {
            if hi <= lo {
                bail!("axis needs max > min, got {lo} .. {hi}");
            }
            let last = (n - 1) as f64;
            Ok((0..n)
                .map(|i| (lo * (last - i as f64) + hi * i as f64) / last)
                .collect())
        }
    }
}

fn load_models(path: &Path) -> Result<Vec<CfmModel>> {
    let file = File::open(path)
        .with_context(|| format!("failed to open model file '{}'", path.display()))?;
    let models = read_models(BufReader::new(file))
        .with_context(|| format!("failed to read models from '{}'", path.display()))?;
    if models.is_empty() {
        bail!("'{}' holds no models", path.display());
    }
    Ok(models)
}

fn select_model(models: Vec<CfmModel>, label: Option<&str>, path: &Path) -> Result<CfmModel> {
    match label {
        Some(wanted) => models
            .into_iter()
            .find(|m| m.label == wanted)
            .ok_or_else(|| anyhow!("no model labeled '{wanted}' in '{}'", path.display())),
        None if models.len() == 1 => Ok(models.into_iter().next().unwrap()),
        None => {
            let labels: Vec<&str> = models.iter().map(|m| m.label.as_str()).collect();
            bail!(
                "'{}' holds {} models ({}); pick one with --label",
                path.display(),
                models.len(),
                labels.join(", ")
            )
        }
    }
}

fn load_model(path: &Path, label: Option<&str>) -> Result<CfmModel> {
    select_model(load_models(path)?, label, path)
}

fn load_datasets(path: &Path) -> Result<Vec<MeasurementSet>> {
    let file =
        File::open(path).with_context(|| format!("failed to open data file '{}'", path.display()))?;
    Ok(parse_datasets(BufReader::new(file))
        .with_context(|| format!("failed to parse '{}'", path.display()))?)
}

fn load_dataset(path: &Path, label: Option<&str>) -> Result<MeasurementSet> {
    let sets = load_datasets(path)?;
    match label {
        Some(wanted) => sets
            .into_iter()
            .find(|s| s.label == wanted)
            .ok_or_else(|| anyhow!("no dataset labeled '{wanted}' in '{}'", path.display())),
        None if sets.len() == 1 => Ok(sets.into_iter().next().unwrap()),
        None => {
            let labels: Vec<&str> = sets.iter().map(|s| s.label.as_str()).collect();
            bail!(
                "'{}' holds {} datasets ({}); pick one with --data-label",
                path.display(),
                sets.len(),
                labels.join(", ")
            )
        }
    }
}

/// Writes `content` to `out` or stdout, guaranteeing a trailing newline.
fn emit(out: Option<&Path>, mut content: String) -> Result<()> {
    if !content.ends_with('\n') {
        content.push('\n');
    }
    match out {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("failed to write '{}'", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn models_to_string(models: &[CfmModel]) -> Result<String> {
    let mut buf = Vec::new();
    write_models(&mut buf, models)?;
    Ok(String::from_utf8(buf).expect("model JSON is UTF-8"))
}

fn render_map(map: &WorkspaceMap, format: MapFormat) -> Result<String> {
    match format {
        MapFormat::Csv => {
            let mut buf = Vec::new();
            map.to_csv(&mut buf)?;
            Ok(String::from_utf8(buf).expect("map CSV is UTF-8"))
        }
        MapFormat::Grid => Ok(map.to_grid_text()),
    }
}

fn domain_ranges(domain: &DomainBox) -> ((f64, f64), (f64, f64)) {
    (domain.distance_m, domain.height_m)
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

fn run_fit(args: FitArgs) -> Result<()> {
    let sets = load_datasets(&args.data)?;
    let outcome = fit_cfm3d(&sets, args.pool_degree, args.alpha, args.stop)?;

    let names: Vec<String> = sets
        .iter()
        .map(|s| format!("{} ({} samples)", s.label, s.samples.len()))
        .collect();
    eprintln!("datasets: {}", names.join(", "));
    eprintln!(
        "pool: {} terms (total degree <= {})",
        outcome.pool.len(),
        args.pool_degree
    );
    if !outcome.aliased_everywhere.is_empty() {
        let aliased: Vec<String> = outcome
            .aliased_everywhere
            .iter()
            .map(|t| t.to_string())
            .collect();
        eprintln!("aliased on this grid, dropped: {}", aliased.join(", "));
    }
    eprintln!(
        "significance filter kept {} of {} terms",
        outcome.stage_one_survivors.len(),
        outcome.pool.len()
    );
    for step in &outcome.elimination_steps {
        eprintln!("eliminated {} (score {})", step.removed, sig9(step.score));
    }
    if let Some(score) = outcome.stopping_score {
        eprintln!(
            "stopped: cheapest remaining removal scores {} (threshold {})",
            sig9(score),
            args.stop
        );
    }
    let surviving: Vec<String> = outcome.models[0]
        .terms
        .iter()
        .map(|t| t.to_string())
        .collect();
    eprintln!(
        "final terms ({}): {}",
        surviving.len(),
        surviving.join(", ")
    );

    emit(args.out.as_deref(), models_to_string(&outcome.models)?)
}

fn run_fit2d(args: Fit2dArgs) -> Result<()> {
    let set = load_dataset(&args.data, args.label.as_deref())?;
    let model = fit_cfm2d(&set)?;
    emit(args.out.as_deref(), models_to_string(&[model])?)
}

fn run_predict(args: PredictArgs) -> Result<()> {
    let model = load_model(&args.model, args.label.as_deref())?;
    let p = predict_force(&model, args.distance, args.height, args.velocity)?;
    let marker = if p.extrapolated { " [extrapolated]" } else { "" };
    println!("force_n = {}{}", sig9(p.force_n), marker);
    Ok(())
}

fn run_safe_speed(args: SafeSpeedArgs) -> Result<()> {
    let model = load_model(&args.model, args.label.as_deref())?;
    let query = SafetyQuery {
        force_limit_n: args.fmax,
        margin_factor: args.margin,
        distance_m: args.distance,
        height_m: args.height,
    };
    let safe = max_safe_velocity(&model, &query)?;
    let mut markers = String::new();
    if safe.clamped {
        markers.push_str(" [clamped to the measured speed range]");
    }
    if safe.extrapolated {
        markers.push_str(" [extrapolated]");
    }
    println!("velocity_mps = {}{}", sig9(safe.velocity_mps), markers);
    Ok(())
}

fn run_force_map(args: ForceMapArgs) -> Result<()> {
    let model = load_model(&args.model, args.label.as_deref())?;
    let (d_range, h_range) = domain_ranges(&model.domain);
    let grid = args.grid.resolve(d_range, h_range)?;
    let map = force_map(&model, &grid, args.velocity)?;
    emit(args.out.as_deref(), render_map(&map, args.format)?)
}

fn run_speed_map(args: SpeedMapArgs) -> Result<()> {
    let model = load_model(&args.model, args.label.as_deref())?;
    let (d_range, h_range) = domain_ranges(&model.domain);
    let grid = args.grid.resolve(d_range, h_range)?;
    let template = SafetyQuery {
        force_limit_n: args.fmax,
        margin_factor: args.margin,
        distance_m: 0.0,
        height_m: 0.0,
    };
    let map = speed_map(&model, &grid, &template)?;
    emit(args.out.as_deref(), render_map(&map, args.format)?)
}

fn run_effmass(args: EffmassArgs) -> Result<()> {
    let arm = args.arm.build()?;
    let direction = ImpactDirection::new(args.ux, args.uy)?;
    let phi = args.phi_deg.to_radians();

    if args.map {
        let grid = args.grid.resolve((0.50, 0.80), (0.10, 0.40))?;
        let map = effective_mass_map(&arm, &grid, &direction, phi, args.elbow)?;
        return emit(args.out.as_deref(), render_map(&map, args.format)?);
    }

    let q = if let Some(angles) = args.q {
        if angles.len() != arm.n_links() {
            bail!(
                "--q needs {} angles for this arm, got {}",
                arm.n_links(),
                angles.len()
            );
        }
        JointConfig::new(angles)
    } else if let (Some(d), Some(h)) = (args.distance, args.height) {
        let q = ik_planar3(&arm, Vector2::new(d, h), phi, args.elbow)?;
        let joints: Vec<String> = q.angles_rad.iter().map(|&a| sig9(a)).collect();
        println!("joint_angles_rad = {}", joints.join(" "));
        q
    } else {
        bail!("give joint angles with --q, a contact point with -d and -H, or --map");
    };

    match effective_mass(&arm, &q, &direction)? {
        Mass::Finite(kg) => println!("effective_mass_kg = {}", sig9(kg)),
        Mass::Infinite => println!("effective_mass_kg = inf"),
    }
    Ok(())
}

fn run_baseline(cmd: BaselineCmd) -> Result<()> {
    match cmd {
        BaselineCmd::Pfl(a) => {
            let params = PflParams::new(a.fmax, a.k, a.mr, a.mh)?;
            println!("velocity_mps = {}", sig9(pfl_max_velocity(&params)));
        }
        BaselineCmd::PflForce(a) => {
            // The force expression never touches the cap, so any valid
            // placeholder works here.
            let params = PflParams::new(1.0, a.k, a.mr, a.mh)?;
            if !a.velocity.is_finite() || a.velocity < 0.0 {
                bail!("speed must be finite and >= 0, got {}", a.velocity);
            }
            println!("force_n = {}", sig9(pfl_force(a.velocity, &params)));
        }
        BaselineCmd::Effmass(a) => {
            if !a.mass.is_finite() || a.mass <= 0.0 {
                bail!("moving mass must be finite and > 0, got {}", a.mass);
            }
            if !a.payload.is_finite() || a.payload < 0.0 {
                bail!("payload must be finite and >= 0, got {}", a.payload);
            }
            println!(
                "effective_mass_kg = {}",
                sig9(effective_mass_ts15066(a.mass, a.payload))
            );
        }
    }
    Ok(())
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let model = load_model(&args.model, args.label.as_deref())?;
    let test = load_dataset(&args.data, args.data_label.as_deref())?;
    let entries = compare_models(&[(model.label.as_str(), &model)], &test)?;
    let table = match args.format {
        TableFormat::Text => comparison_table_text(&entries),
        TableFormat::Csv => comparison_table_csv(&entries),
    };
    emit(args.out.as_deref(), table)
}

fn run_compare(args: CompareArgs) -> Result<()> {
    let model = load_model(&args.model, args.label.as_deref())?;
    let test = load_dataset(&args.data, args.data_label.as_deref())?;

    let mut predictors: Vec<(String, Box<dyn ForcePredictor>)> = Vec::new();
    predictors.push((model.label.clone(), Box::new(model.clone())));

    if let Some(train_path) = &args.train {
        let train = load_dataset(train_path, args.train_label.as_deref())?;
        let ensemble = PerHeightEnsemble::fit(&train)?;
        predictors.push(("per-height-2d".into(), Box::new(ensemble)));
    }
    if let (Some(mr), Some(mh)) = (args.mr, args.mh.clone()) {
        // The cap plays no part in force prediction; see `baseline pfl-force`.
        let params = PflParams::new(1.0, args.k, mr, mh)?;
        let pfl = move |_d: f64, _h: f64, v: f64| -> cfm_core::Result<f64> {
            Ok(pfl_force(v, &params))
        };
        predictors.push(("pfl".into(), Box::new(pfl)));
    }

    let borrowed: Vec<(&str, &dyn ForcePredictor)> = predictors
        .iter()
        .map(|(name, p)| (name.as_str(), p.as_ref()))
        .collect();
    let entries = compare_models(&borrowed, &test)?;
    let table = match args.format {
        TableFormat::Text => comparison_table_text(&entries),
        TableFormat::Csv => comparison_table_csv(&entries),
    };
    emit(args.out.as_deref(), table)
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let model = load_model(&args.model, args.label.as_deref())?;
    let (d_range, h_range) = domain_ranges(&model.domain);
    let (v_lo, v_hi) = model.domain.velocity_mps;
    let planar = args.grid.resolve(d_range, h_range)?;
    let v = linspace(
        args.v_min.unwrap_or(v_lo),
        args.v_max.unwrap_or(v_hi),
        args.v_steps,
    )
    .context("bad speed axis")?;
    let grid = GridSpec::new(planar.distances_m, planar.heights_m, v)?;

    let synth = synthesize_dataset(&model, &grid, args.noise, args.reps, args.seed)?;
    eprintln!(
        "synthesized {} samples ({} outside the model's trained ranges)",
        synth.set.samples.len(),
        synth.out_of_domain.len()
    );
    let mut buf = Vec::new();
    write_csv(&mut buf, std::slice::from_ref(&synth.set))?;
    emit(args.out.as_deref(), String::from_utf8(buf).expect("CSV is UTF-8"))
}
