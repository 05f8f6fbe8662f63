//! `distvp` command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input or failed check, 2 a locus ray never
//! leaves the level set, 3 the simulation failed.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use distvp::driver::{self, DriverError, LoadingSegment, RunSettings};
use distvp::geometry::{interpolated_set_is_convex, ArcBoundary, GeometryError};
use distvp::material::{load_shape, MaterialError, StateSnapshot};
use distvp::probe::{self, Plane, ProbeError};
use distvp::verify::{self, AuditConfig};
use distvp::{MaterialParams, MaterialState};
use serde::Serialize;

const BUILTIN_ALLOY: &str = "builtin:alloy";
const BUILTIN_AXIAL: &str = "builtin:axial-prestrain";
const BUILTIN_HOOP: &str = "builtin:hoop-prestrain";

#[derive(Parser)]
#[command(name = "distvp", version, about = "Material-point viscoplasticity with distortional hardening")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a yield shape (and optionally a material file) and print a JSON report.
    Validate(ValidateArgs),
    /// Integrate a loading program and write the trajectory CSV.
    Simulate(SimulateArgs),
    /// Trace a yield locus or overstress isoline and write it as CSV.
    Locus(LocusArgs),
    /// Compare the analytic flow direction with finite differences.
    Gradcheck(GradcheckArgs),
    /// Check the sign of every dissipation term along random strain programs.
    ThermoAudit(AuditArgs),
}

#[derive(Args)]
struct MaterialArgs {
    /// Material parameter file, or `builtin:alloy`.
    #[arg(long, default_value = BUILTIN_ALLOY)]
    config: String,
    /// Shape file, `builtin:egg` or `builtin:unit_disc`; replaces the material's shape.
    #[arg(long)]
    shape: Option<String>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Shape to check. Defaults to the shape of `--config`.
    #[arg(long)]
    shape: Option<String>,
    /// Material parameter file to check as well.
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    material: MaterialArgs,
    /// Loading program file, `builtin:axial-prestrain` or `builtin:hoop-prestrain`.
    #[arg(long)]
    program: String,
    /// Initial state snapshot. Defaults to the virgin state.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Trajectory CSV. Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Final state snapshot.
    #[arg(long)]
    state_out: Option<PathBuf>,
    /// Upper bound on the time step in seconds.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    sample_every: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlaneArg {
    /// (sigma_11, sqrt3 sigma_12) with sigma_22 fixed.
    Axial,
    /// (sigma_22, sqrt3 sigma_12) with sigma_11 fixed.
    Hoop,
}

#[derive(Args)]
struct LocusArgs {
    #[command(flatten)]
    material: MaterialArgs,
    /// State snapshot. Defaults to the virgin state.
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "axial")]
    plane: PlaneArg,
    /// Stress on the fixed in-plane normal axis in MPa.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    fixed_stress: f64,
    /// Overstress of the isoline in MPa; 0 gives the yield locus.
    #[arg(long, default_value_t = 0.0)]
    f_level: f64,
    #[arg(long, default_value_t = 360)]
    points: usize,
    /// Locus CSV. Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[command(flatten)]
    material: MaterialArgs,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// JSON report. Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    material: MaterialArgs,
    #[arg(long, default_value_t = 10_000)]
    programs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Accepted negative dissipation, relative to `K0 * lambda`.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// JSON report. Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(e: impl Display) -> Self {
        Self { code: 1, message: e.to_string() }
    }
}

impl From<DriverError> for Failure {
    fn from(e: DriverError) -> Self {
        let code = match e {
            DriverError::InvalidProgram(_) => 1,
            _ => 3,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<ProbeError> for Failure {
    fn from(e: ProbeError) -> Self {
        let code = match e {
            ProbeError::RayEscapes(_) => 2,
            _ => 1,
        };
        Self { code, message: e.to_string() }
    }
}

type CmdResult = Result<(), Failure>;

/// Writes next to the target and renames on success, so a failed command
/// never leaves a partial file. `None` writes to standard output.
fn emit(path: Option<&Path>, contents: &str) -> CmdResult {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        return out.write_all(contents.as_bytes()).map_err(Failure::input);
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    tmp.write_all(contents.as_bytes()).map_err(Failure::input)?;
    tmp.persist(path).map_err(|e| Failure::input(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_params(args: &MaterialArgs) -> Result<MaterialParams, Failure> {
    let mut params = if args.config == BUILTIN_ALLOY {
        MaterialParams::reference_alloy(ArcBoundary::egg())
    } else {
        MaterialParams::load(Path::new(&args.config)).map_err(Failure::input)?
    };
    if let Some(shape) = &args.shape {
        params.shape = load_shape(shape, None).map_err(Failure::input)?;
    }
    Ok(params)
}

fn load_state(path: Option<&Path>, params: &MaterialParams) -> Result<MaterialState, Failure> {
    let Some(path) = path else { return Ok(MaterialState::virgin()) };
    let snap: StateSnapshot = serde_json::from_str(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    snap.state_for(params).map_err(Failure::input)
}

fn load_program(reference: &str) -> Result<Vec<LoadingSegment>, Failure> {
    match reference {
        BUILTIN_AXIAL => Ok(driver::axial_prestrain()),
        BUILTIN_HOOP => Ok(driver::hoop_prestrain()),
        path => Ok(driver::parse_program(&read(Path::new(path))?)?),
    }
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    status: &'static str,
}

#[derive(Serialize)]
struct Violation {
    kind: &'static str,
    message: String,
}

#[derive(Serialize)]
struct ValidateReport {
    shape: String,
    valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    arcs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_sat_pi: Option<f64>,
    checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    violation: Option<Violation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    params_hash: Option<String>,
}

const SHAPE_CHECKS: [&str; 5] = ["arc_data", "smoothness", "normalization", "convexity", "interpolated_convexity"];

fn violation_kind(e: &GeometryError) -> (&'static str, &'static str) {
    match e {
        GeometryError::SmoothnessViolation(_) => ("SmoothnessViolation", "smoothness"),
        GeometryError::NormalizationViolation(_) => ("NormalizationViolation", "normalization"),
        GeometryError::ConvexityViolation(_) => ("ConvexityViolation", "convexity"),
        _ => ("InvalidInput", "arc_data"),
    }
}

fn shape_report(reference: &str, built: Result<ArcBoundary, GeometryError>) -> ValidateReport {
    let mut report = ValidateReport {
        shape: reference.to_string(),
        valid: false,
        arcs: None,
        k_sat_pi: None,
        checks: Vec::new(),
        violation: None,
        params_hash: None,
    };
    match built {
        Ok(shape) => {
            let grid_ok = (0..=20).all(|i| interpolated_set_is_convex(&shape, i as f64 * 0.05).unwrap_or(false));
            report.checks = SHAPE_CHECKS
                .iter()
                .map(|&name| Check { name, status: if name != "interpolated_convexity" || grid_ok { "pass" } else { "fail" } })
                .collect();
            if !grid_ok {
                report.violation = Some(Violation {
                    kind: "ConvexityViolation",
                    message: "an interpolated domain on the alpha grid is not convex".into(),
                });
            }
            report.valid = grid_ok;
            report.arcs = Some(shape.arcs().len());
            report.k_sat_pi = Some(shape.k_sat_pi());
        }
        Err(e) => {
            let (kind, failed) = violation_kind(&e);
            let at = SHAPE_CHECKS.iter().position(|&c| c == failed).unwrap_or(0);
            report.checks = SHAPE_CHECKS
                .iter()
                .enumerate()
                .map(|(i, &name)| {
                    let status = match i.cmp(&at) {
                        std::cmp::Ordering::Less => "pass",
                        std::cmp::Ordering::Equal => "fail",
                        std::cmp::Ordering::Greater => "not_evaluated",
                    };
                    Check { name, status }
                })
                .collect();
            report.violation = Some(Violation { kind, message: e.to_string() });
        }
    }
    report
}

fn build_shape(reference: &str) -> Result<ArcBoundary, GeometryError> {
    load_shape(reference, None).map_err(|e| match e {
        MaterialError::Geometry(g) => g,
        other => GeometryError::InvalidInput(other.to_string()),
    })
}

fn cmd_validate(args: &ValidateArgs) -> CmdResult {
    let params = args
        .config
        .as_ref()
        .map(|config| load_params(&MaterialArgs { config: config.clone(), shape: None }));
    let mut report = match (&args.shape, &params) {
        (Some(shape), _) => shape_report(shape, build_shape(shape)),
        (None, Some(Ok(p))) => shape_report(args.config.as_deref().unwrap_or_default(), Ok(p.shape.clone())),
        (None, Some(Err(_))) => ValidateReport {
            shape: args.config.clone().unwrap_or_default(),
            valid: true,
            arcs: None,
            k_sat_pi: None,
            checks: Vec::new(),
            violation: None,
            params_hash: None,
        },
        (None, None) => return Err(Failure::input("validate needs --shape or --config")),
    };
    match params {
        Some(Ok(p)) => {
            report.checks.push(Check { name: "material", status: "pass" });
            report.params_hash = Some(p.hash());
        }
        Some(Err(f)) => {
            report.valid = false;
            report.checks.push(Check { name: "material", status: "fail" });
            report.violation.get_or_insert(Violation { kind: "InvalidParams", message: f.message });
        }
        None => {}
    }
    emit(args.out.as_deref(), &to_json(&report))?;
    match report.violation {
        None => Ok(()),
        Some(v) => Err(Failure { code: 1, message: format!("{}: {}", v.kind, v.message) }),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> CmdResult {
    let params = load_params(&args.material)?;
    let initial = load_state(args.state.as_deref(), &params)?;
    let program = load_program(&args.program)?;
    let settings = RunSettings { dt: args.dt, sample_every: args.sample_every };
    let traj = driver::run(&params, &initial, &program, &settings)?;
    emit(args.out.as_deref(), &traj.to_csv())?;
    if let Some(path) = &args.state_out {
        emit(Some(path), &to_json(&StateSnapshot::new(traj.final_state, &params)))?;
    }
    let last = traj.last();
    eprintln!(
        "alpha = {:.9}, R = {:.9}, |X_k| = {:.9}, |X_d| = {:.9}, min dissipation = {:.6e}, steps = {}",
        last.alpha,
        last.r,
        last.x_k.norm(),
        last.x_d.norm(),
        traj.min_dissipation(),
        traj.steps
    );
    Ok(())
}

fn cmd_locus(args: &LocusArgs) -> CmdResult {
    let params = load_params(&args.material)?;
    let state = load_state(args.state.as_deref(), &params)?;
    let plane = match args.plane {
        PlaneArg::Axial => Plane::AxialTorsion,
        PlaneArg::Hoop => Plane::HoopTorsion,
    };
    let mut locus = probe::locus(&params, &state, plane, args.fixed_stress, args.f_level, args.points)?;
    locus.state_id = args.state.as_ref().map(|p| p.display().to_string());
    emit(args.out.as_deref(), &locus.to_csv())?;
    let m = probe::locus_metrics(&locus);
    eprintln!(
        "forward extent = {:.9}, backward extent = {:.9}, area = {:.9}, convex = {}",
        m.forward_extent,
        m.backward_extent,
        m.area,
        locus.is_convex()
    );
    Ok(())
}

fn cmd_gradcheck(args: &GradcheckArgs) -> CmdResult {
    if args.samples == 0 {
        return Err(Failure::input("--samples must be at least 1"));
    }
    let params = load_params(&args.material)?;
    let report = verify::gradcheck(&params, args.samples, args.seed).map_err(Failure::input)?;
    emit(args.out.as_deref(), &to_json(&report))?;
    if report.passes(args.tol) {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: format!("largest relative error {:e} exceeds {:e}", report.max_rel_error, args.tol),
        })
    }
}

fn cmd_audit(args: &AuditArgs) -> CmdResult {
    let params = load_params(&args.material)?;
    let config = AuditConfig { programs: args.programs, seed: args.seed, tol: args.tol, ..AuditConfig::default() };
    let report = verify::thermo_audit(&params, &config)?;
    emit(args.out.as_deref(), &to_json(&report))?;
    if report.passes() {
        Ok(())
    } else {
        Err(Failure { code: 1, message: format!("{} negative dissipation events", report.violations.len()) })
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(a) => cmd_validate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Locus(a) => cmd_locus(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::ThermoAudit(a) => cmd_audit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
