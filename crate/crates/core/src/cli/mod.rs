//! Batch front end: `generate`, `analyze`, `verify` and `report`.
//!
//! Exit status: `0` success, `2` validation error, `3` hypothesis
//! violation, `4` accuracy error.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    parse_config, ConfigError, DensitySpec, GeneratorSpec, GridSpec, KernelSpec, MetricSpec, OutputPaths,
    PotentialSpec, RunConfig, VerificationSpec, VerifyWindow, WeightSpec,
};

use crate::densities::{
    density_profile, parse_kernel_table, parse_weight_file, polar_grid, probe_grid, square_grid, DensityError,
    DensityKernel, DensityModel, DensityReport, MetricModel, ProfileOptions, Verdict, WeightModel,
};
use crate::geometry::quadrature::{QuadratureError, QuadratureSpec};
use crate::geometry::{GeometryError, Point, SurfaceModel};
use crate::pointsets::{
    generate_hyperbolic_net, generate_square_lattice, parse_pointset, write_pointset, NetOptions, PointSet,
    PointSetError, Window,
};
use crate::potentials::{PotentialError, SingularWeight, WeightMode};
use crate::verification::{
    run_experiment, ExperimentRecord, InterpolationOptions, Provenance, SpaceKind, VerificationError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_ACCURACY: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Artifact { path: PathBuf, message: String },
    #[error("threads: {0}")]
    Threads(String),
    #[error("pointsets: {0}")]
    PointSet(#[from] PointSetError),
    #[error("densities: {0}")]
    Density(#[from] DensityError),
    #[error("potentials: {0}")]
    Potential(#[from] PotentialError),
    #[error("verification: {0}")]
    Verification(#[from] VerificationError),
}

fn geometry_code(e: &GeometryError) -> i32 {
    match e {
        GeometryError::Quadrature(_) => EXIT_ACCURACY,
        _ => EXIT_VALIDATION,
    }
}

fn quadrature_code(e: &QuadratureError) -> i32 {
    match e {
        QuadratureError::NotConverged { .. } => EXIT_ACCURACY,
        QuadratureError::InvalidSpec(_) => EXIT_VALIDATION,
    }
}

fn density_code(e: &DensityError) -> i32 {
    match e {
        DensityError::HypothesisViolation(_) => EXIT_HYPOTHESIS,
        DensityError::Quadrature(q) => quadrature_code(q),
        DensityError::Geometry(g) => geometry_code(g),
        DensityError::PointSet(PointSetError::Geometry(g)) => geometry_code(g),
        _ => EXIT_VALIDATION,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Density(e) => density_code(e),
            CliError::Potential(e) => match e {
                PotentialError::BoundViolated { .. } => EXIT_HYPOTHESIS,
                PotentialError::Density(d) => density_code(d),
                PotentialError::Geometry(g) => geometry_code(g),
                PotentialError::Quadrature(q) => quadrature_code(q),
                _ => EXIT_VALIDATION,
            },
            CliError::Verification(e) => match e {
                VerificationError::NotOrthonormal { .. } | VerificationError::Unstable { .. } => EXIT_ACCURACY,
                VerificationError::Quadrature(q) => quadrature_code(q),
                VerificationError::Geometry(g) => geometry_code(g),
                _ => EXIT_VALIDATION,
            },
            CliError::PointSet(PointSetError::Geometry(g)) => geometry_code(g),
            _ => EXIT_VALIDATION,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Generate,
    Analyze,
    Verify,
    Report,
}

/// Command-line overrides applied on top of the configuration.
#[derive(Clone, Debug, Default)]
pub struct Invocation {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

pub const VERIFICATION_SCHEMA_VERSION: u32 = 1;

/// Contents of `verification.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationArtifact {
    pub schema_version: u32,
    pub seed: u64,
    pub experiments: Vec<ExperimentRecord>,
}

impl VerificationArtifact {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("records are plain data");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let art: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if art.schema_version != VERIFICATION_SCHEMA_VERSION {
            return Err(format!("unsupported schema version {}", art.schema_version));
        }
        Ok(art)
    }
}

/// Thread count from the flag, else `SAMPDENS_THREADS`, else the default.
pub fn resolve_threads(flag: Option<usize>, env: Option<&str>) -> Result<Option<usize>, CliError> {
    let n = match (flag, env) {
        (Some(n), _) => Some(n),
        (None, Some(v)) if !v.trim().is_empty() => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Threads(format!("SAMPDENS_THREADS={v:?} is not a count")))?,
        ),
        _ => None,
    };
    if n == Some(0) {
        return Err(CliError::Threads("thread count must be positive".into()));
    }
    Ok(n)
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// A loaded configuration with the command-line overrides applied.
pub struct Session {
    pub config: RunConfig,
    pub out_dir: PathBuf,
}

impl Session {
    pub fn load(config_path: &Path, inv: &Invocation) -> Result<Self, CliError> {
        let text = read(config_path)?;
        let base = config_path.parent().unwrap_or(Path::new("."));
        let mut config = parse_config(&text, base)?;
        if let Some(seed) = inv.seed {
            config.seed = seed;
        }
        let out_dir = inv.out.clone().unwrap_or_else(|| PathBuf::from("."));
        Ok(Self { config, out_dir })
    }

    fn out(&self, name: &Path) -> PathBuf {
        self.out_dir.join(name)
    }

    fn generate_in(&self, window: &Window) -> Result<PointSet, CliError> {
        match self.config.generator {
            Some(GeneratorSpec::Lattice { spacing }) => Ok(generate_square_lattice(spacing, window)?),
            Some(GeneratorSpec::Net { delta }) => {
                Ok(generate_hyperbolic_net(delta, window, self.config.seed, &NetOptions::default())?)
            }
            None => Err(ConfigError::Inconsistent("no generator configured".into()).into()),
        }
    }

    /// The input file if one is configured, else the generated set.
    pub fn point_set(&self) -> Result<PointSet, CliError> {
        match &self.config.input {
            Some(path) => {
                let set = parse_pointset(&read(path)?)?;
                if set.surface() != self.config.surface {
                    return Err(CliError::Artifact {
                        path: path.clone(),
                        message: format!("points live on the {}, configuration on the {}", set.surface().name(), self.config.surface.name()),
                    });
                }
                Ok(set)
            }
            None => self.generate_in(&self.config.window),
        }
    }

    pub fn kernel(&self) -> Result<DensityKernel, CliError> {
        Ok(match &self.config.kernel {
            KernelSpec::Constant => DensityKernel::Constant,
            KernelSpec::Exponential => DensityKernel::Exponential,
            KernelSpec::Indicator(a) => DensityKernel::indicator(*a)?,
            KernelSpec::DiskLog => DensityKernel::DiskLog,
            KernelSpec::Table(path) => parse_kernel_table(&read(path)?)?,
        })
    }

    pub fn weight(&self) -> Result<WeightModel, CliError> {
        Ok(match &self.config.weight {
            WeightSpec::Fock => WeightModel::ClassicalFock,
            WeightSpec::Bergman => WeightModel::ClassicalBergman,
            WeightSpec::Custom(path) => {
                let (phi, lap) = parse_weight_file(&read(path)?)?;
                let extent = match self.config.surface {
                    SurfaceModel::EuclideanPlane => 10.0,
                    SurfaceModel::UnitDisk => 0.9,
                };
                WeightModel::polynomial(phi, lap, &probe_grid(self.config.surface, extent))?
            }
        })
    }

    pub fn model(&self) -> Result<DensityModel, CliError> {
        let metric = match self.config.metric {
            MetricSpec::Fundamental => MetricModel::FundamentalPlane,
            MetricSpec::BergmanDisk => MetricModel::bergman_disk(self.config.tau_form),
        };
        Ok(DensityModel::new(self.config.surface, self.weight()?, metric, self.kernel()?)?)
    }

    fn density_spec(&self) -> Result<&DensitySpec, CliError> {
        self.config
            .density
            .as_ref()
            .ok_or_else(|| ConfigError::Inconsistent("analyze needs a [density] section".into()).into())
    }

    pub fn grid(&self) -> Result<Vec<Point>, CliError> {
        let spec = self.density_spec()?;
        let anchor = self.config.window.anchor;
        Ok(match spec.grid {
            GridSpec::Square { half_side, n } => square_grid(&Window::plane_square(half_side, anchor)?, n)?,
            GridSpec::Polar { max_radius, n_radial, n_angular } => {
                polar_grid(self.config.surface, anchor, max_radius, n_radial, n_angular)?
            }
        })
    }

    pub fn generate(&self) -> Result<Vec<PathBuf>, CliError> {
        let set = self.generate_in(&self.config.window)?;
        let path = self.out(&self.config.outputs.points);
        write(&path, &write_pointset(&set))?;
        Ok(vec![path])
    }

    pub fn density_report(&self) -> Result<DensityReport, CliError> {
        let spec = self.density_spec()?;
        let model = self.model()?;
        let set = self.point_set()?;
        let options = ProfileOptions {
            window: Some(self.config.window),
            margin_guard: spec.margin_guard,
            tail: spec.tail,
        };
        Ok(density_profile(&set, &model, &self.grid()?, &spec.r_schedule, &options)?)
    }

    pub fn analyze(&self) -> Result<Vec<PathBuf>, CliError> {
        let report = self.density_report()?;
        let json = self.out(&self.config.outputs.density_json);
        let csv = self.out(&self.config.outputs.density_csv);
        write(&json, &report.to_json())?;
        write(&csv, &report.to_csv())?;
        let mut written = vec![json, csv];
        if let Some(p) = self.config.potentials {
            let set = self.point_set()?;
            let mode = match p.epsilon {
                Some(eps) => WeightMode::BumpWeight { eps, t: p.t },
                None => WeightMode::PoleWeight,
            };
            let weight = SingularWeight::new(self.weight()?, set, self.kernel()?, p.r, mode)?;
            let path = self.out(&self.config.outputs.potentials);
            write(&path, &weight.sample_csv(&self.grid()?, &QuadratureSpec::default())?)?;
            written.push(path);
        }
        Ok(written)
    }

    pub fn space_kind(&self) -> Result<SpaceKind, CliError> {
        match (&self.config.weight, self.config.surface) {
            (WeightSpec::Fock, SurfaceModel::EuclideanPlane) => Ok(SpaceKind::Fock),
            (WeightSpec::Bergman, SurfaceModel::UnitDisk) => Ok(SpaceKind::Bergman),
            _ => Err(ConfigError::Inconsistent(
                "verification needs the fock weight on the plane or the bergman weight on the disk".into(),
            )
            .into()),
        }
    }

    pub fn verification_artifact(&self) -> Result<VerificationArtifact, CliError> {
        let spec = self
            .config
            .verification
            .as_ref()
            .ok_or_else(|| ConfigError::Inconsistent("verify needs a [verification] section".into()))?;
        let kind = self.space_kind()?;
        let q = QuadratureSpec::default();
        let options = InterpolationOptions { ridge: spec.ridge };
        let (spacing, delta) = match self.config.generator {
            Some(GeneratorSpec::Lattice { spacing }) if self.config.input.is_none() => (Some(spacing), None),
            Some(GeneratorSpec::Net { delta }) if self.config.input.is_none() => (None, Some(delta)),
            _ => (None, None),
        };
        let shared = match spec.window {
            VerifyWindow::Config => Some(self.point_set()?),
            VerifyWindow::Auto => None,
        };
        let mut experiments = Vec::with_capacity(spec.degrees.len());
        for &degree in &spec.degrees {
            let (set, window) = match &shared {
                Some(set) => (set.clone(), (self.config.input.is_none()).then_some(self.config.window)),
                None => {
                    let extent = kind.default_window_extent(degree);
                    let anchor = self.config.window.anchor;
                    let window = match kind {
                        SpaceKind::Fock => Window::plane_ball(extent, anchor)?,
                        SpaceKind::Bergman => Window::disk_ball(extent, anchor)?,
                    };
                    (self.generate_in(&window)?, Some(window))
                }
            };
            let provenance = Provenance { window, spacing, delta };
            experiments.push(run_experiment(kind, degree, &set, provenance, options, self.config.seed, &q)?);
        }
        Ok(VerificationArtifact { schema_version: VERIFICATION_SCHEMA_VERSION, seed: self.config.seed, experiments })
    }

    pub fn verify(&self) -> Result<Vec<PathBuf>, CliError> {
        let art = self.verification_artifact()?;
        let path = self.out(&self.config.outputs.verification);
        write(&path, &art.to_json())?;
        Ok(vec![path])
    }

    /// Loads an artifact if its file exists; a present but undecodable file
    /// is an error.
    fn load_artifact<T>(&self, name: &Path, decode: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, CliError> {
        let path = self.out(name);
        if !path.exists() {
            return Ok(None);
        }
        decode(&read(&path)?).map(Some).map_err(|message| CliError::Artifact { path, message })
    }

    pub fn report(&self) -> Result<Vec<PathBuf>, CliError> {
        let density = self.load_artifact(&self.config.outputs.density_json, |t| {
            DensityReport::from_json(t).map_err(|e| e.to_string())
        })?;
        let verification = self.load_artifact(&self.config.outputs.verification, VerificationArtifact::from_json)?;
        let text = summary_table(density.as_ref(), verification.as_ref(), self.config.verification.as_ref());
        let path = self.out(&self.config.outputs.summary);
        write(&path, &text)?;
        Ok(vec![path])
    }

    pub fn run(&self, command: Command) -> Result<Vec<PathBuf>, CliError> {
        match command {
            Command::Generate => self.generate(),
            Command::Analyze => self.analyze(),
            Command::Verify => self.verify(),
            Command::Report => self.report(),
        }
    }
}

/// Frame-ratio spread across degrees still counted as stable.
pub const STABLE_RATIO_FACTOR: f64 = 3.0;
/// Riesz bound still counted as bounded away from zero.
pub const RIESZ_FLOOR: f64 = 0.01;
/// Interpolation residual still counted as exact.
pub const RESIDUAL_CEILING: f64 = 1e-8;

/// Outcome of comparing a density verdict with the verification records.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Concordance {
    Agree,
    Disagree,
    NotApplicable,
    Missing,
}

impl Concordance {
    pub fn name(self) -> &'static str {
        match self {
            Concordance::Agree => "agree",
            Concordance::Disagree => "disagree",
            Concordance::NotApplicable => "n/a",
            Concordance::Missing => "missing",
        }
    }
}

/// Sampling verdicts expect frame ratios stable in `N`; interpolation
/// verdicts expect exact interpolation and a Riesz bound away from zero.
pub fn concordance(verdict: Option<Verdict>, records: &[ExperimentRecord]) -> Concordance {
    let Some(verdict) = verdict else { return Concordance::Missing };
    if records.is_empty() {
        return Concordance::Missing;
    }
    let ok = match verdict {
        Verdict::Inconclusive => return Concordance::NotApplicable,
        Verdict::SamplingSufficient => {
            let lo = records.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
            let hi = records.iter().map(|r| r.ratio).fold(0.0, f64::max);
            lo > 0.0 && hi <= STABLE_RATIO_FACTOR * lo
        }
        Verdict::InterpolationSufficient => records
            .iter()
            .all(|r| r.riesz_lower_bound > RIESZ_FLOOR && r.residual < RESIDUAL_CEILING),
    };
    if ok {
        Concordance::Agree
    } else {
        Concordance::Disagree
    }
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Human-readable concordance table. Every configured degree gets a row;
/// degrees without a record are marked `missing`.
pub fn summary_table(
    density: Option<&DensityReport>,
    verification: Option<&VerificationArtifact>,
    spec: Option<&VerificationSpec>,
) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "schema_version {}", VERIFICATION_SCHEMA_VERSION);
    match density {
        Some(d) => {
            let _ = writeln!(
                w,
                "density surface={} weight={} metric={} kernel={} verdict={} margin={}",
                d.surface.name(),
                d.weight,
                d.metric,
                d.kernel,
                d.verdict.name(),
                sci(d.margin)
            );
            let _ = writeln!(w, "{:>24} {:>24} {:>24}", "r", "sup_curve", "inf_curve");
            for ((r, s), i) in d.r_schedule.iter().zip(&d.sup_curve).zip(&d.inf_curve) {
                let _ = writeln!(w, "{:>24} {:>24} {:>24}", sci(*r), sci(*s), sci(*i));
            }
        }
        None => {
            let _ = writeln!(w, "density missing");
        }
    }
    let records: Vec<ExperimentRecord> = verification.map(|v| v.experiments.clone()).unwrap_or_default();
    let mut degrees: Vec<usize> = spec.map(|s| s.degrees.clone()).unwrap_or_default();
    degrees.extend(records.iter().map(|r| r.degree));
    degrees.sort_unstable();
    degrees.dedup();
    let _ = writeln!(
        w,
        "{:>5} {:>7} {:>24} {:>24} {:>24} {:>24} {:>24} {:>24} {:>24}",
        "N", "points", "lambda_min", "lambda_max", "ratio", "riesz", "residual", "norm", "condition"
    );
    for n in &degrees {
        let matching: Vec<&ExperimentRecord> = records.iter().filter(|r| r.degree == *n).collect();
        if matching.is_empty() {
            let _ = writeln!(w, "{n:>5} missing");
        }
        for r in matching {
            let _ = writeln!(
                w,
                "{:>5} {:>7} {:>24} {:>24} {:>24} {:>24} {:>24} {:>24} {:>24}",
                r.degree,
                r.points,
                sci(r.lambda_min),
                sci(r.lambda_max),
                sci(r.ratio),
                sci(r.riesz_lower_bound),
                sci(r.residual),
                sci(r.norm),
                r.condition.map_or_else(|| "singular".to_string(), sci)
            );
        }
    }
    let verdict = density.map(|d| d.verdict);
    let complete = degrees.iter().all(|n| records.iter().any(|r| r.degree == *n));
    let status = if complete { concordance(verdict, &records) } else { Concordance::Missing };
    let _ = writeln!(
        w,
        "concordance verdict={} verification={} status={}",
        verdict.map_or("missing", Verdict::name),
        if verification.is_some() { "present" } else { "missing" },
        status.name()
    );
    out
}

/// Runs one command on a thread pool of the requested size.
pub fn execute(command: Command, config_path: &Path, inv: &Invocation, env_threads: Option<&str>) -> Result<Vec<PathBuf>, CliError> {
    let threads = resolve_threads(inv.threads, env_threads)?;
    let session = Session::load(config_path, inv)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Threads(e.to_string()))?;
    pool.install(|| session.run(command))
}
