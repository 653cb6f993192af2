//! `riesz`: periodic Riesz and log energies on flat tori from the command line.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use riesz_core::shell::default_inner_radius;
use riesz_core::{
    build_g_sequence, check_upper_bound, classical_energy, energy_gradient, epstein_hurwitz, epstein_zeta,
    fit_next_order_constant, fit_report, minimize_energy, periodic_energy, random_configuration, shell_sweep,
    sphere_moments, zeta_prime_at_zero, BoundCheck, DescentBudget, FitReport, Lattice, PotentialValue, RieszExponent,
    SummationControl, TorusConfiguration, TorusPoint,
};
use serde::{Deserialize, Serialize};

use output::{emit_csv, emit_json, RunManifest};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(riesz_core::Error),
    Io(std::io::Error),
}

impl From<riesz_core::Error> for CliError {
    fn from(e: riesz_core::Error) -> Self {
        CliError::Numeric(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult<T> = Result<T, CliError>;

const LATTICE_HELP: &str = "Lattice: alias Z1, Z2, Z3, Z4 or HEX (hexagonal, co-volume 1), a path to a JSON file, \
or inline JSON {\"dim\": d, \"generator\": [row-major entries]} whose generator columns are the basis vectors";

#[derive(Parser)]
#[command(name = "riesz", version, about = "Periodic Riesz and logarithmic energies on flat tori")]
struct Cli {
    /// Worker threads; 0 uses every core. Results do not depend on this
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Epstein zeta value zeta_L(s) or zeta_L(s; x); with --log, the derivative at 0
    Zeta(ZetaArgs),
    /// Periodic and classical energy (and gradient) of a configuration
    Energy(EnergyArgs),
    /// Multi-start minimization of the N-point energy
    Minimize(MinimizeArgs),
    /// Minimize over a list of N and fit the next-order constant
    Fit(FitArgs),
    /// Renormalized shell sums over growing balls, as CSV
    Shell(ShellArgs),
    /// Second moments of the shell measure on the unit sphere
    Moments(MomentsArgs),
    /// Re-run a command from its manifest (or a full output document)
    Replay(ReplayArgs),
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[group(required = true, multiple = false)]
struct ExponentArgs {
    /// Riesz exponent s (dimensionless); energies need s > 0, zeta accepts any real s
    #[arg(long)]
    s: Option<f64>,
    /// Use the logarithmic kernel instead of a Riesz exponent
    #[arg(long)]
    log: bool,
}

impl ExponentArgs {
    fn exponent(&self) -> CliResult<RieszExponent> {
        match self.s {
            _ if self.log => Ok(RieszExponent::Log),
            Some(s) => Ok(RieszExponent::riesz(s)?),
            None => Err(CliError::Usage("one of --s or --log is required".into())),
        }
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct ControlArgs {
    /// Absolute truncation tolerance for each Ewald sum (energy units)
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

impl ControlArgs {
    fn control(&self) -> CliResult<SummationControl> {
        let c = SummationControl::with_tol(self.tol);
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct BudgetArgs {
    /// Random restarts; the lattice configuration is added when N = m^d
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Iteration cap per descent
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    /// Stop a descent once the largest gradient component is below this (energy per unit length)
    #[arg(long, default_value_t = 1e-9)]
    grad_tol: f64,
}

impl BudgetArgs {
    fn budget(&self) -> DescentBudget {
        DescentBudget { restarts: self.restarts, max_iters: self.max_iters, grad_tol: self.grad_tol }
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct ZetaArgs {
    #[arg(long, help = LATTICE_HELP)]
    lattice: String,
    #[command(flatten)]
    #[serde(flatten)]
    exponent: ExponentArgs,
    /// Shift x in fractional coordinates, comma separated; omit for the plain lattice sum
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    control: ControlArgs,
    /// Directory for the JSON output
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct EnergyArgs {
    #[arg(long, help = LATTICE_HELP, required_unless_present = "config")]
    lattice: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    exponent: ExponentArgs,
    /// Configuration as JSON (file path or inline): {"lattice": ..., "frac_points": [[fractional coordinates], ...]}
    #[arg(long, conflicts_with_all = ["lattice", "n"])]
    config: Option<String>,
    /// Number of uniformly random points, drawn with --seed
    #[arg(long, required_unless_present = "config")]
    n: Option<usize>,
    /// Seed for the random configuration
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also report the Cartesian gradient of the energy
    #[arg(long)]
    gradient: bool,
    #[command(flatten)]
    #[serde(flatten)]
    control: ControlArgs,
    /// Directory for the JSON output
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct MinimizeArgs {
    #[arg(long, help = LATTICE_HELP)]
    lattice: String,
    #[command(flatten)]
    #[serde(flatten)]
    exponent: ExponentArgs,
    /// Number of points
    #[arg(long)]
    n: usize,
    /// Seed for the random starts
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    budget: BudgetArgs,
    #[command(flatten)]
    #[serde(flatten)]
    control: ControlArgs,
    /// Directory for the JSON output
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct FitArgs {
    #[arg(long, help = LATTICE_HELP)]
    lattice: String,
    #[command(flatten)]
    #[serde(flatten)]
    exponent: ExponentArgs,
    /// Increasing point counts, comma separated (at least 3 for a fit)
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64")]
    n_list: Vec<usize>,
    /// Seed for the random starts
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    budget: BudgetArgs,
    #[command(flatten)]
    #[serde(flatten)]
    control: ControlArgs,
    /// Directory for the JSON output
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct ShellArgs {
    /// Dimension of the cubic lattice Z^d
    #[arg(long, conflicts_with = "lattice", required_unless_present = "lattice")]
    d: Option<usize>,
    #[arg(long, help = LATTICE_HELP)]
    lattice: Option<String>,
    /// Riesz exponent, 0 < s <= d - 2
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    /// Off-lattice point x in Cartesian coordinates (lattice length units), comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    x: Vec<f64>,
    /// Largest ball radius (lattice length units)
    #[arg(long = "Lmax", default_value_t = 80.0)]
    lmax: f64,
    /// Number of radii Lmax / 2^k, k = levels-1, ..., 0
    #[arg(long, default_value_t = 4)]
    levels: u32,
    /// Directory for the CSV output and its manifest
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct MomentsArgs {
    /// Dimension of the cubic lattice Z^d
    #[arg(long, conflicts_with = "lattice", required_unless_present = "lattice")]
    d: Option<usize>,
    #[arg(long, help = LATTICE_HELP)]
    lattice: Option<String>,
    /// Weight exponent s <= d
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    /// Inner radius M (lattice length units) [default: 5 times the shortest vector length]
    #[arg(long)]
    inner: Option<f64>,
    /// Outer radius L (lattice length units)
    #[arg(long, default_value_t = 100.0)]
    outer: f64,
    /// Directory for the JSON output
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Manifest JSON, or an output document containing one
    #[arg(long)]
    manifest: PathBuf,
    /// Directory for the regenerated output
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_json_arg(spec: &str) -> CliResult<String> {
    let trimmed = spec.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        return Ok(spec.to_string());
    }
    std::fs::read_to_string(spec).map_err(|e| CliError::Usage(format!("cannot read {spec}: {e}")))
}

fn parse_lattice(spec: &str) -> CliResult<Lattice> {
    match spec {
        "Z1" => return Ok(Lattice::cubic(1)),
        "Z2" => return Ok(Lattice::cubic(2)),
        "Z3" => return Ok(Lattice::cubic(3)),
        "Z4" => return Ok(Lattice::cubic(4)),
        "HEX" => return Ok(Lattice::hexagonal()),
        _ => {}
    }
    let text = read_json_arg(spec)?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad lattice {spec}: {e}")))
}

/// Aliases stay as they are; files and inline JSON become inline JSON so manifests are self-contained.
fn canonical_lattice(spec: &str, lattice: &Lattice) -> String {
    match spec {
        "Z1" | "Z2" | "Z3" | "Z4" | "HEX" => spec.to_string(),
        _ => serde_json::to_string(lattice).expect("lattice serializes"),
    }
}

fn shell_lattice(d: Option<usize>, lattice: &mut Option<String>) -> CliResult<Lattice> {
    match (d, lattice.as_ref()) {
        (Some(d), None) if d >= 1 => Ok(Lattice::cubic(d)),
        (Some(d), None) => Err(CliError::Usage(format!("--d must be positive, got {d}"))),
        (None, Some(spec)) => {
            let l = parse_lattice(spec)?;
            *lattice = Some(canonical_lattice(spec, &l));
            Ok(l)
        }
        _ => Err(CliError::Usage("give exactly one of --d and --lattice".into())),
    }
}

#[derive(Serialize)]
struct EnergyOutput {
    n: usize,
    energy: f64,
    classical_energy: f64,
    error_bound: f64,
    gradient: Option<Vec<Vec<f64>>>,
    config: TorusConfiguration,
}

#[derive(Serialize)]
struct FitOutput {
    report: FitReport,
    bound_check: Option<BoundCheck>,
}

#[derive(Serialize)]
struct MomentsOutput {
    inner: f64,
    outer: f64,
    moments: Vec<Vec<f64>>,
}

fn run_zeta(mut a: ZetaArgs, out: Option<&Path>) -> CliResult<()> {
    let t = Instant::now();
    let l = parse_lattice(&a.lattice)?;
    a.lattice = canonical_lattice(&a.lattice, &l);
    let c = a.control.control()?;
    let x = a.x.as_ref().map(|x| TorusPoint::new(x));
    // any real s here, the continuation included
    let v: PotentialValue = match (a.exponent.log, a.exponent.s, x.as_ref()) {
        (true, _, x) => zeta_prime_at_zero(&l, x, &c)?,
        (false, Some(s), None) => epstein_zeta(&l, s, &c)?,
        (false, Some(s), Some(x)) => epstein_hurwitz(&l, s, x, &c)?,
        (false, None, _) => return Err(CliError::Usage("one of --s or --log is required".into())),
    };
    emit_json(&RunManifest::new("zeta", &a, None, t), &v, out)
}

fn run_energy(mut a: EnergyArgs, out: Option<&Path>) -> CliResult<()> {
    let t = Instant::now();
    let e = a.exponent.exponent()?;
    let c = a.control.control()?;
    let config = match (&a.config, &a.lattice, a.n) {
        (Some(spec), _, _) => {
            let text = read_json_arg(spec)?;
            let cfg: TorusConfiguration =
                serde_json::from_str(&text).map_err(|err| CliError::Usage(format!("bad configuration: {err}")))?;
            a.config = Some(serde_json::to_string(&cfg).expect("configuration serializes"));
            cfg
        }
        (None, Some(spec), Some(n)) => {
            let l = parse_lattice(spec)?;
            a.lattice = Some(canonical_lattice(spec, &l));
            random_configuration(&l, n, a.seed)?
        }
        _ => return Err(CliError::Usage("give --config, or --lattice with --n".into())),
    };
    let full = periodic_energy(&config, e, &c)?;
    let cp = classical_energy(&config, e, &c)?;
    let gradient = if a.gradient { Some(energy_gradient(&config, e, &c)?.per_point) } else { None };
    let result = EnergyOutput {
        n: config.len(),
        energy: full.total,
        classical_energy: cp.total,
        error_bound: full.error_bound,
        gradient,
        config,
    };
    let seed = a.config.is_none().then_some(a.seed);
    emit_json(&RunManifest::new("energy", &a, seed, t), &result, out)
}

fn run_minimize(mut a: MinimizeArgs, out: Option<&Path>) -> CliResult<()> {
    let t = Instant::now();
    let l = parse_lattice(&a.lattice)?;
    a.lattice = canonical_lattice(&a.lattice, &l);
    let e = a.exponent.exponent()?;
    let c = a.control.control()?;
    let r = minimize_energy(&l, e, a.n, &a.budget.budget(), a.seed, &c)?;
    emit_json(&RunManifest::new("minimize", &a, Some(a.seed), t), &r, out)
}

fn run_fit(mut a: FitArgs, out: Option<&Path>) -> CliResult<()> {
    let t = Instant::now();
    let l = parse_lattice(&a.lattice)?;
    a.lattice = canonical_lattice(&a.lattice, &l);
    let e = a.exponent.exponent()?;
    let c = a.control.control()?;
    let seq = build_g_sequence(&l, e, &a.n_list, &a.budget.budget(), a.seed, &c)?;
    let fit = fit_next_order_constant(seq)?;
    let report = fit_report(&fit, &c)?;
    let bound_check = match check_upper_bound(&fit, &c) {
        Ok(b) => Some(b),
        Err(riesz_core::Error::CovolumeNotOne(_)) => None,
        Err(err) => return Err(err.into()),
    };
    emit_json(&RunManifest::new("fit", &a, Some(a.seed), t), &FitOutput { report, bound_check }, out)
}

fn run_shell(mut a: ShellArgs, out: Option<&Path>) -> CliResult<()> {
    let t = Instant::now();
    let l = shell_lattice(a.d, &mut a.lattice)?;
    if a.levels == 0 || a.levels > 30 {
        return Err(CliError::Usage(format!("--levels must be in 1..=30, got {}", a.levels)));
    }
    let radii: Vec<f64> = (0..a.levels).rev().map(|k| a.lmax / 2f64.powi(k as i32)).collect();
    let sweep = shell_sweep(&l, a.s, &a.x, &radii)?;
    emit_csv(&RunManifest::new("shell", &a, None, t), &sweep.to_csv(), out)
}

fn run_moments(mut a: MomentsArgs, out: Option<&Path>) -> CliResult<()> {
    let t = Instant::now();
    let l = shell_lattice(a.d, &mut a.lattice)?;
    let inner = a.inner.unwrap_or_else(|| default_inner_radius(&l));
    a.inner = Some(inner);
    let moments = sphere_moments(&l, a.s, inner, a.outer)?;
    emit_json(&RunManifest::new("moments", &a, None, t), &MomentsOutput { inner, outer: a.outer, moments }, out)
}

fn params<T: for<'de> Deserialize<'de>>(m: &RunManifest) -> CliResult<T> {
    serde_json::from_value(m.parameters.clone())
        .map_err(|e| CliError::Usage(format!("manifest parameters do not fit {}: {e}", m.command)))
}

fn run_replay(a: ReplayArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&a.manifest)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", a.manifest.display())))?;
    let mut doc: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad manifest: {e}")))?;
    if let Some(inner) = doc.get_mut("manifest") {
        doc = inner.take();
    }
    let m: RunManifest = serde_json::from_value(doc).map_err(|e| CliError::Usage(format!("bad manifest: {e}")))?;
    let out = a.out.as_deref();
    match m.command.as_str() {
        "zeta" => run_zeta(params(&m)?, out),
        "energy" => run_energy(params(&m)?, out),
        "minimize" => run_minimize(params(&m)?, out),
        "fit" => run_fit(params(&m)?, out),
        "shell" => run_shell(params(&m)?, out),
        "moments" => run_moments(params(&m)?, out),
        other => Err(CliError::Usage(format!("unknown command {other} in manifest"))),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Zeta(a) => {
            let out = a.out.clone();
            run_zeta(a, out.as_deref())
        }
        Command::Energy(a) => {
            let out = a.out.clone();
            run_energy(a, out.as_deref())
        }
        Command::Minimize(a) => {
            let out = a.out.clone();
            run_minimize(a, out.as_deref())
        }
        Command::Fit(a) => {
            let out = a.out.clone();
            run_fit(a, out.as_deref())
        }
        Command::Shell(a) => {
            let out = a.out.clone();
            run_shell(a, out.as_deref())
        }
        Command::Moments(a) => {
            let out = a.out.clone();
            run_moments(a, out.as_deref())
        }
        Command::Replay(a) => run_replay(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
