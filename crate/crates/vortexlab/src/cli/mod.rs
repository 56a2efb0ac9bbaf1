//! Command-line front end: argument parsing, profile loading, result files
//! and run manifests.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bifurcation::{self, BifurcationError, PlemeljConfig};
use crate::evolve::{self, EvolveError, GrowthCap, RunConfig};
use crate::fields::{self, BackgroundConfig, FieldsError};
use crate::io;
use crate::profile::{CriticalPoint, Profile, ProfileDescriptor, ProfileError, ProfileParams};
use crate::rayleigh::{self, RayleighConfig, RayleighError};
use crate::specmat::{self, GridConfig, SpecmatError};
use crate::sturm::{self, SturmConfig, SturmError};

mod manifest;
pub mod recipes;

pub use manifest::RunManifest;
pub use recipes::{Recipe, RecipeCheck, RecipeReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("recipe {recipe}: {failed} check(s) failed")]
    RecipeFailed { recipe: String, failed: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Config { .. } | CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) | CliError::RecipeFailed { .. } => EXIT_NUMERICAL,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    fn classify(validation: bool, message: String) -> Self {
        if validation {
            CliError::Validation(message)
        } else {
            CliError::Numerical(message)
        }
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<RayleighError> for CliError {
    fn from(e: RayleighError) -> Self {
        let v = matches!(e, RayleighError::Wavenumber(_) | RayleighError::SpectralParameter(_) | RayleighError::Profile(_));
        CliError::classify(v, e.to_string())
    }
}

impl From<SturmError> for CliError {
    fn from(e: SturmError) -> Self {
        let v = matches!(e, SturmError::NotBracketed { .. } | SturmError::Profile(_));
        CliError::classify(v, e.to_string())
    }
}

impl From<BifurcationError> for CliError {
    fn from(e: BifurcationError) -> Self {
        match e {
            BifurcationError::Sturm(e) => e.into(),
            BifurcationError::Rayleigh(e) => e.into(),
            e => {
                let v = matches!(e, BifurcationError::BadSteps | BifurcationError::OutsideBand { .. });
                CliError::classify(v, e.to_string())
            }
        }
    }
}

impl From<SpecmatError> for CliError {
    fn from(e: SpecmatError) -> Self {
        let v = matches!(
            e,
            SpecmatError::Wavenumber(_) | SpecmatError::Grid | SpecmatError::Alpha { .. } | SpecmatError::BetaList
        );
        CliError::classify(v, e.to_string())
    }
}

impl From<FieldsError> for CliError {
    fn from(e: FieldsError) -> Self {
        let v = !matches!(e, FieldsError::Quadrature { .. });
        CliError::classify(v, e.to_string())
    }
}

impl From<EvolveError> for CliError {
    fn from(e: EvolveError) -> Self {
        let v = !matches!(e, EvolveError::Instability { .. } | EvolveError::WindowTooNoisy { .. });
        CliError::classify(v, e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "vortexlab", version, about = "Unstable vortex profiles, Rayleigh eigenvalues and linearized-Euler spectra")]
pub struct Cli {
    /// Size of the global worker pool (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Where to write the run manifest (defaults to <first output>.manifest.json).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Build and validate profiles.
    #[command(subcommand)]
    Profile(ProfileCommand),
    /// Norms of the truncated background fields.
    #[command(subcommand)]
    Background(BackgroundCommand),
    /// Ground state of the neutral operator at a critical level.
    Sturm(SturmArgs),
    /// Rayleigh eigenvalues over a wavenumber range.
    Scan(ScanArgs),
    /// Plemelj prediction of the unstable branch against shooting.
    Bifurcate(BifurcateArgs),
    /// Dense spectrum of one mode block.
    Specmat(SpecmatArgs),
    /// Time-step one mode from seeded random data.
    Evolve(EvolveArgs),
    /// Blend two profiles so an integer wavenumber is unstable.
    Tune(TuneArgs),
    /// Run the checks behind one proposition and report pass/fail.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileCommand {
    Build(ProfileBuildArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ProfileBuildArgs {
    /// JSON with alpha_bar, B and optional tolerance and grid.
    #[arg(long)]
    pub config: PathBuf,
    /// Profile descriptor (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Sample table t,Xi,XiPrime,A (defaults to the descriptor path with a .csv extension).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundCommand {
    Scan(BackgroundScanArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct BackgroundScanArgs {
    /// JSON with beta, alpha, p and optionally chi and profile.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub times: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum Which {
    A,
    B,
}

#[derive(Debug, Args, Serialize)]
pub struct SturmArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long, value_enum)]
    pub which: Which,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long)]
    pub m_min: f64,
    #[arg(long)]
    pub m_max: f64,
    #[arg(long)]
    pub m_steps: usize,
    /// Lower edge of the search rectangle in Im z.
    #[arg(long, default_value_t = 1e-4)]
    pub im_min: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BifurcateArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.08,0.04,0.02,0.01")]
    pub h: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SpecmatArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long)]
    pub m: f64,
    #[arg(long, default_value_t = 2048)]
    pub n: usize,
    /// Eigenvalues with Im λ above this are treated as unstable.
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,
    #[arg(long, default_value_t = 16)]
    pub probe_nodes: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvolveArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long)]
    pub m: f64,
    #[arg(long)]
    pub tau_end: f64,
    #[arg(long)]
    pub dt: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    /// Record the norm every this many steps.
    #[arg(long, default_value_t = 100)]
    pub record_every: usize,
    /// Abort once the norm exceeds this factor times e^{2 Im λ τ}.
    #[arg(long, default_value_t = 10.0)]
    pub cap_factor: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TuneArgs {
    #[arg(long)]
    pub p0: PathBuf,
    #[arg(long)]
    pub p1: PathBuf,
    #[arg(long)]
    pub m0: u32,
    /// How far past σ* the returned blend sits.
    #[arg(long, default_value_t = 0.02)]
    pub step: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub recipe: Recipe,
    /// Profile to run on instead of the recipe's default.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse `argv`, run the command and return the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Run a parsed command line.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // A pool installed earlier in the same process is kept.
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::warn!("global thread pool already initialized; --threads {n} ignored");
        }
    }
    let start = Instant::now();
    let mut run = Run::default();
    match &cli.command {
        Command::Profile(ProfileCommand::Build(a)) => profile_build(a, &mut run)?,
        Command::Background(BackgroundCommand::Scan(a)) => background_scan(a, &mut run)?,
        Command::Sturm(a) => sturm_cmd(a, &mut run)?,
        Command::Scan(a) => scan_cmd(a, &mut run)?,
        Command::Bifurcate(a) => bifurcate_cmd(a, &mut run)?,
        Command::Specmat(a) => specmat_cmd(a, &mut run)?,
        Command::Evolve(a) => evolve_cmd(a, &mut run)?,
        Command::Tune(a) => tune_cmd(a, &mut run)?,
        Command::Reproduce(a) => reproduce_cmd(a, &mut run)?,
    }
    let manifest = RunManifest::new(&cli.command, run.profile.as_ref(), start.elapsed(), run.outputs.clone());
    let target = cli.manifest.clone().or_else(|| run.outputs.first().map(|p| manifest::default_path(p)));
    if let Some(path) = target {
        write(&path, &io::to_json(&manifest).expect("manifest serializes"))?;
    }
    run.result
}

/// Outputs and profile of one command, collected for the manifest.
struct Run {
    outputs: Vec<PathBuf>,
    profile: Option<ProfileDescriptor>,
    /// Deferred failure reported after the manifest is written.
    result: Result<(), CliError>,
}

impl Default for Run {
    fn default() -> Self {
        Run { outputs: Vec::new(), profile: None, result: Ok(()) }
    }
}

impl Run {
    fn write(&mut self, path: &Path, contents: &str) -> Result<(), CliError> {
        write(path, contents)?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    io::write_file(path, contents).map_err(|e| CliError::io(path, e))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })
}

/// Profile JSON in any of the shapes the tool writes or reads.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ProfileSource {
    Descriptor(ProfileDescriptor),
    Wrapped { profile: ProfileDescriptor },
    Params(ProfileParams),
}

impl ProfileSource {
    fn build(self) -> Result<Profile, CliError> {
        Ok(match self {
            ProfileSource::Descriptor(d) | ProfileSource::Wrapped { profile: d } => Profile::from_descriptor(&d)?,
            ProfileSource::Params(p) => Profile::build(&p)?,
        })
    }
}

/// Load a profile descriptor, a tune report or a profile config.
pub fn load_profile(path: &Path) -> Result<Profile, CliError> {
    parse::<ProfileSource>(path, &read(path)?)?.build()
}

fn profile_build(a: &ProfileBuildArgs, run: &mut Run) -> Result<(), CliError> {
    let params: ProfileParams = parse(&a.config, &read(&a.config)?)?;
    let p = Profile::build(&params)?;
    let report = p.validate();
    let descriptor = p.descriptor();
    run.write(&a.out, &io::to_json(&descriptor).expect("descriptor serializes"))?;
    let csv_path = a.csv.clone().unwrap_or_else(|| a.out.with_extension("csv"));
    run.write(&csv_path, &p.csv_table())?;
    run.profile = Some(descriptor);
    if !report.all_passed() {
        let names: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
        run.result = Err(CliError::Validation(format!("class checks failed: {}", names.join(", "))));
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct BackgroundFile {
    #[serde(flatten)]
    background: BackgroundConfig,
    /// Profile file path or inline profile; the reference member when absent.
    #[serde(default)]
    profile: Option<serde_json::Value>,
}

fn background_scan(a: &BackgroundScanArgs, run: &mut Run) -> Result<(), CliError> {
    let file: BackgroundFile = parse(&a.config, &read(&a.config)?)?;
    let p = match file.profile {
        None => Profile::build(&ProfileParams::reference())?,
        Some(serde_json::Value::String(rel)) => {
            let base = a.config.parent().unwrap_or(Path::new(""));
            load_profile(&base.join(rel))?
        }
        Some(v) => serde_json::from_value::<ProfileSource>(v)
            .map_err(|e| CliError::Config { path: a.config.clone(), message: e.to_string() })?
            .build()?,
    };
    let scan = fields::norm_scan(&file.background, &p, &a.times)?;
    if let Some(e) = &scan.exponents {
        log::info!("f1 exponent {} (target {}), dtv exponent {}", e.lp_f1, scan.f1_exponent_target(), e.l2_dtv);
    }
    run.write(&a.out, &scan.csv())?;
    run.profile = Some(p.descriptor());
    Ok(())
}

#[derive(Debug, Serialize)]
struct SturmOutput {
    which: CriticalPoint,
    lambda: f64,
    m: f64,
    psi_at_c: f64,
    nodes: usize,
    method_gap: f64,
    lambda_fd: f64,
    excited_eigenvalue: f64,
}

fn sturm_cmd(a: &SturmArgs, run: &mut Run) -> Result<(), CliError> {
    let p = load_profile(&a.profile)?;
    let c = match a.which {
        Which::A => CriticalPoint::Inner,
        Which::B => CriticalPoint::Outer,
    };
    let mode = sturm::smallest_eigenvalue(&p, c, &SturmConfig::default())?;
    let out = SturmOutput {
        which: c,
        lambda: mode.lambda,
        m: mode.wavenumber(),
        psi_at_c: mode.psi_at_c,
        nodes: mode.nodes,
        method_gap: mode.method_gap,
        lambda_fd: mode.lambda_fd,
        excited_eigenvalue: mode.excited_eigenvalue,
    };
    run.write(&a.out, &io::to_json(&out).expect("sturm output serializes"))?;
    run.profile = Some(p.descriptor());
    Ok(())
}

fn m_grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps == 0 || !(hi >= lo) {
        return Err(CliError::Validation("need m_steps >= 1 and m_max >= m_min".into()));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    Ok(crate::sampled::uniform_grid(lo, hi, steps))
}

fn scan_cmd(a: &ScanArgs, run: &mut Run) -> Result<(), CliError> {
    let p = load_profile(&a.profile)?;
    let grid = m_grid(a.m_min, a.m_max, a.m_steps)?;
    let mut region = rayleigh::Rectangle::default_for(&p);
    region.im_min = a.im_min;
    let scan = rayleigh::mode_scan_in(&p, &grid, &region, &RayleighConfig::default())?;
    let mut csv =
        io::Csv::new(&["m", "re_z", "im_z", "residual", "decay_minus", "decay_plus", "imag_identity_residual"]);
    for row in &scan.rows {
        if row.modes.is_empty() {
            csv.row(&[row.m, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN]);
        }
        for e in &row.modes {
            csv.row(&[row.m, e.z.re, e.z.im, e.residual, e.decay_minus, e.decay_plus, e.imag_identity_residual]);
        }
    }
    run.write(&a.out, csv.as_str())?;
    run.profile = Some(p.descriptor());
    Ok(())
}

fn bifurcate_cmd(a: &BifurcateArgs, run: &mut Run) -> Result<(), CliError> {
    let p = load_profile(&a.profile)?;
    let report = bifurcation::verify_bifurcation(
        &p,
        &a.h,
        &SturmConfig::default(),
        &PlemeljConfig::default(),
        &RayleighConfig::default(),
    )?;
    run.write(&a.out, &report.csv())?;
    run.profile = Some(p.descriptor());
    Ok(())
}

#[derive(Debug, Serialize)]
struct SpecmatOutput {
    m: f64,
    n: usize,
    threshold: f64,
    norm_bound: f64,
    eigenvalues: Vec<Complex64>,
    unstable: Vec<specmat::UnstableEigen>,
    cloud_height: f64,
    probes: Vec<specmat::MultiplicityProbe>,
}

fn specmat_cmd(a: &SpecmatArgs, run: &mut Run) -> Result<(), CliError> {
    let p = load_profile(&a.profile)?;
    let op = specmat::assemble(&p, a.m, &GridConfig::with_n(a.n))?;
    let spec = specmat::spectrum(&op, a.threshold)?;
    let probes = spec
        .unstable
        .iter()
        .map(|u| specmat::multiplicity_probe(&op, u.lambda, spec.isolation(u.lambda) / 4.0, a.probe_nodes))
        .collect::<Result<Vec<_>, _>>()?;
    let out = SpecmatOutput {
        m: a.m,
        n: op.n(),
        threshold: a.threshold,
        norm_bound: op.norm_bound(),
        cloud_height: spec.cloud_height(),
        eigenvalues: spec.eigenvalues,
        unstable: spec.unstable,
        probes,
    };
    run.write(&a.out, &io::to_json(&out).expect("spectrum serializes"))?;
    run.profile = Some(p.descriptor());
    Ok(())
}

fn evolve_cmd(a: &EvolveArgs, run: &mut Run) -> Result<(), CliError> {
    let p = load_profile(&a.profile)?;
    let op = specmat::assemble(&p, a.m, &GridConfig::with_n(a.n))?;
    let rate = match specmat::leading_unstable(&op, 1e-6) {
        Ok(e) => e.lambda.im,
        Err(SpecmatError::NoUnstable(_)) => 0.0,
        Err(e) => return Err(e.into()),
    };
    let mut cfg = RunConfig::new(a.tau_end, a.dt);
    cfg.record_every = a.record_every;
    cfg.growth_cap = Some(GrowthCap { rate, factor: a.cap_factor });
    let gamma0 = evolve::random_data(&op, a.seed);
    let traj = evolve::run(&op, &gamma0, &cfg)?;
    run.write(&a.out, &traj.csv())?;
    run.profile = Some(p.descriptor());
    Ok(())
}

#[derive(Debug, Serialize)]
struct TuneOutput {
    report: sturm::TuneReport,
    profile: ProfileDescriptor,
}

fn tune_cmd(a: &TuneArgs, run: &mut Run) -> Result<(), CliError> {
    let p0 = load_profile(&a.p0)?;
    let p1 = load_profile(&a.p1)?;
    let mut report = sturm::tune_for_integer_mode(&p0, &p1, a.m0, a.step, &SturmConfig::default())?;
    let profile = report.profile.take().expect("tuning returns its blend").descriptor();
    run.profile = Some(profile.clone());
    run.write(&a.out, &io::to_json(&TuneOutput { report, profile }).expect("tune output serializes"))?;
    Ok(())
}

fn reproduce_cmd(a: &ReproduceArgs, run: &mut Run) -> Result<(), CliError> {
    let profile = a.profile.as_deref().map(load_profile).transpose()?;
    let report = recipes::run(a.recipe, profile.as_ref())?;
    print!("{}", report.render());
    if let Some(out) = &a.out {
        run.write(out, &io::to_json(&report).expect("report serializes"))?;
    }
    run.profile = profile.map(|p| p.descriptor());
    let failed = report.failures();
    if failed > 0 {
        run.result = Err(CliError::RecipeFailed { recipe: a.recipe.id().to_string(), failed });
    }
    Ok(())
}

#[cfg(test)]
mod tests;
