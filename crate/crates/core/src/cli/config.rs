//! Run configuration: `key = value` lines under `[section]` headers.
//!
//! ```text
//! [model]
//! surface = plane            # plane | disk
//! weight = fock              # fock | bergman | custom(path)
//! metric = fundamental       # fundamental | bergman-disk
//! kernel = constant          # constant | exponential | indicator:a | disklog | table(path)
//! tau_form = derived         # derived | inline
//!
//! [points]
//! generator = lattice        # lattice | net
//! spacing = 2                # lattice only
//! delta = 0.5                # net only
//! seed = 1
//! window = ball 60           # square h | ball R | disk rho
//! anchor = 0 0
//! input = points.txt         # optional; replaces the generator for analyze and verify
//!
//! [density]
//! r_schedule = 10 20 40
//! grid = square 8 5          # square h n | polar rho n_radial n_angular
//! margin_guard = 0.02
//! tail = 2
//!
//! [verification]
//! degrees = 20 30 40
//! ridge = false
//! window = config            # config | auto
//!
//! [potentials]
//! r = 1
//! epsilon = 0.1
//! t = 0.9
//!
//! [output]
//! points = points.txt
//! ```
//!
//! Every section except `[model]` and `[points]` is optional. Unknown
//! sections, unknown keys and repeated keys are errors. Relative input
//! paths resolve against the configuration's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::densities::TauForm;
use crate::geometry::{Point, SurfaceModel};
use crate::pointsets::{PointSetError, Window};
use crate::potentials::DEFAULT_BUMP_SCALE;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("[{section}] {key}: {message}")]
    Value { section: String, key: String, message: String },
    #[error("[{section}] {key} is required")]
    Missing { section: &'static str, key: &'static str },
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("unknown key {key} in [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("{0}")]
    Inconsistent(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightSpec {
    Fock,
    Bergman,
    Custom(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricSpec {
    Fundamental,
    BergmanDisk,
}

#[derive(Clone, Debug, PartialEq)]
pub enum KernelSpec {
    Constant,
    Exponential,
    Indicator(f64),
    DiskLog,
    Table(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeneratorSpec {
    Lattice { spacing: f64 },
    Net { delta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridSpec {
    Square { half_side: f64, n: usize },
    Polar { max_radius: f64, n_radial: usize, n_angular: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyWindow {
    /// The `[points]` window for every degree.
    Config,
    /// Regenerate per degree in the window sized for that degree.
    Auto,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensitySpec {
    pub r_schedule: Vec<f64>,
    pub grid: GridSpec,
    pub margin_guard: f64,
    pub tail: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationSpec {
    pub degrees: Vec<usize>,
    pub ridge: bool,
    pub window: VerifyWindow,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialSpec {
    pub r: f64,
    pub epsilon: Option<f64>,
    pub t: f64,
}

/// Artifact file names, relative to the output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputPaths {
    pub points: PathBuf,
    pub density_json: PathBuf,
    pub density_csv: PathBuf,
    pub verification: PathBuf,
    pub summary: PathBuf,
    pub potentials: PathBuf,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            points: "points.txt".into(),
            density_json: "density_report.json".into(),
            density_csv: "density_report.csv".into(),
            verification: "verification.json".into(),
            summary: "summary.txt".into(),
            potentials: "potentials.csv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub surface: SurfaceModel,
    pub weight: WeightSpec,
    pub metric: MetricSpec,
    pub kernel: KernelSpec,
    pub tau_form: TauForm,
    pub generator: Option<GeneratorSpec>,
    pub seed: u64,
    pub window: Window,
    pub input: Option<PathBuf>,
    pub density: Option<DensitySpec>,
    pub verification: Option<VerificationSpec>,
    pub potentials: Option<PotentialSpec>,
    pub outputs: OutputPaths,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("model", &["surface", "weight", "metric", "kernel", "tau_form"]),
    ("points", &["generator", "spacing", "delta", "seed", "window", "anchor", "input"]),
    ("density", &["r_schedule", "grid", "margin_guard", "tail"]),
    ("verification", &["degrees", "ridge", "window"]),
    ("potentials", &["r", "epsilon", "t"]),
    ("output", &["points", "density_json", "density_csv", "verification", "summary", "potentials"]),
];

type Sections = BTreeMap<String, BTreeMap<String, (usize, String)>>;

fn tokenize(text: &str) -> Result<Sections, ConfigError> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |message: &str| ConfigError::Syntax { line: line_no, message: message.into() };
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| syntax("unterminated section header"))?.trim();
            let known = SECTIONS.iter().any(|(s, _)| *s == name);
            if !known {
                return Err(ConfigError::UnknownSection(name.into()));
            }
            if sections.contains_key(name) {
                return Err(syntax("section appears twice"));
            }
            sections.insert(name.into(), BTreeMap::new());
            current = Some(name.into());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| syntax("expected key = value"))?;
        let (key, value) = (key.trim(), value.trim());
        let section = current.as_ref().ok_or_else(|| syntax("key outside any section"))?;
        let allowed = SECTIONS.iter().find(|(s, _)| s == section).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(ConfigError::UnknownKey { section: section.clone(), key: key.into() });
        }
        if value.is_empty() {
            return Err(syntax("empty value"));
        }
        let entries = sections.get_mut(section).expect("section inserted at its header");
        if entries.insert(key.into(), (line_no, value.into())).is_some() {
            return Err(syntax("key appears twice"));
        }
    }
    Ok(sections)
}

struct Reader<'a> {
    sections: &'a Sections,
    base: &'a Path,
}

impl<'a> Reader<'a> {
    fn get(&self, section: &str, key: &str) -> Option<&'a str> {
        self.sections.get(section)?.get(key).map(|(_, v)| v.as_str())
    }

    fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn value_error(section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Value { section: section.into(), key: key.into(), message: message.into() }
    }

    fn parse<T: std::str::FromStr>(&self, section: &str, key: &str, v: &str) -> Result<T, ConfigError> {
        v.parse().map_err(|_| Self::value_error(section, key, format!("cannot parse {v:?}")))
    }

    fn real(&self, section: &str, key: &str, v: &str) -> Result<f64, ConfigError> {
        let x: f64 = self.parse(section, key, v)?;
        if !x.is_finite() {
            return Err(Self::value_error(section, key, "must be finite"));
        }
        Ok(x)
    }

    fn opt_real(&self, section: &'static str, key: &'static str) -> Result<Option<f64>, ConfigError> {
        self.get(section, key).map(|v| self.real(section, key, v)).transpose()
    }

    fn reals(&self, section: &str, key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
        v.split_whitespace().map(|t| self.real(section, key, t)).collect()
    }

    fn path(&self, v: &str) -> PathBuf {
        let p = Path::new(v);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn wrapped<'v>(v: &'v str, name: &str) -> Option<&'v str> {
        v.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')').map(str::trim)
    }
}

fn window_error(e: PointSetError) -> ConfigError {
    Reader::value_error("points", "window", e.to_string())
}

/// Parses and validates a configuration. Paths are resolved against `base`
/// but not opened.
pub fn parse_config(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let sections = tokenize(text)?;
    let rd = Reader { sections: &sections, base };
    let need = |section: &'static str, key: &'static str| {
        rd.get(section, key).ok_or(ConfigError::Missing { section, key })
    };

    let surface = match need("model", "surface")? {
        "plane" => SurfaceModel::EuclideanPlane,
        "disk" => SurfaceModel::UnitDisk,
        v => return Err(Reader::value_error("model", "surface", format!("expected plane or disk, found {v:?}"))),
    };
    let weight = match need("model", "weight")? {
        "fock" => WeightSpec::Fock,
        "bergman" => WeightSpec::Bergman,
        v => match Reader::wrapped(v, "custom") {
            Some(p) if !p.is_empty() => WeightSpec::Custom(rd.path(p)),
            _ => return Err(Reader::value_error("model", "weight", format!("unknown weight {v:?}"))),
        },
    };
    let metric = match rd.get("model", "metric") {
        None => match surface {
            SurfaceModel::EuclideanPlane => MetricSpec::Fundamental,
            SurfaceModel::UnitDisk => MetricSpec::BergmanDisk,
        },
        Some("fundamental") => MetricSpec::Fundamental,
        Some("bergman-disk") => MetricSpec::BergmanDisk,
        Some(v) => return Err(Reader::value_error("model", "metric", format!("unknown metric {v:?}"))),
    };
    let kernel = match rd.get("model", "kernel").unwrap_or("constant") {
        "constant" => KernelSpec::Constant,
        "exponential" => KernelSpec::Exponential,
        "disklog" => KernelSpec::DiskLog,
        v => {
            if let Some(a) = v.strip_prefix("indicator:") {
                let a = rd.real("model", "kernel", a.trim())?;
                if !(a > 0.0) {
                    return Err(Reader::value_error("model", "kernel", "indicator cutoff must be positive"));
                }
                KernelSpec::Indicator(a)
            } else {
                match Reader::wrapped(v, "table") {
                    Some(p) if !p.is_empty() => KernelSpec::Table(rd.path(p)),
                    _ => return Err(Reader::value_error("model", "kernel", format!("unknown kernel {v:?}"))),
                }
            }
        }
    };
    let tau_form = match rd.get("model", "tau_form").unwrap_or("derived") {
        "derived" => TauForm::Derived,
        "inline" => TauForm::Inline,
        v => return Err(Reader::value_error("model", "tau_form", format!("expected derived or inline, found {v:?}"))),
    };

    let generator = match rd.get("points", "generator") {
        None => None,
        Some("lattice") => {
            if rd.get("points", "delta").is_some() {
                return Err(ConfigError::Inconsistent("delta is a net parameter, not a lattice one".into()));
            }
            let spacing = rd.real("points", "spacing", need("points", "spacing")?)?;
            if !(spacing > 0.0) {
                return Err(Reader::value_error("points", "spacing", "must be positive"));
            }
            Some(GeneratorSpec::Lattice { spacing })
        }
        Some("net") => {
            if rd.get("points", "spacing").is_some() {
                return Err(ConfigError::Inconsistent("spacing is a lattice parameter, not a net one".into()));
            }
            let delta = rd.real("points", "delta", need("points", "delta")?)?;
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Reader::value_error("points", "delta", "must lie in (0, 1)"));
            }
            Some(GeneratorSpec::Net { delta })
        }
        Some(v) => return Err(Reader::value_error("points", "generator", format!("unknown generator {v:?}"))),
    };
    let seed = match rd.get("points", "seed") {
        Some(v) => rd.parse("points", "seed", v)?,
        None => 0,
    };
    let input = rd.get("points", "input").map(|p| rd.path(p));
    if generator.is_none() && input.is_none() {
        return Err(ConfigError::Inconsistent("[points] needs a generator or an input file".into()));
    }
    let anchor = match rd.get("points", "anchor") {
        None => Point::new(0.0, 0.0),
        Some(v) => match rd.reals("points", "anchor", v)?.as_slice() {
            [re, im] => Point::new(*re, *im),
            _ => return Err(Reader::value_error("points", "anchor", "expected two numbers")),
        },
    };
    let window_text = need("points", "window")?;
    let mut parts = window_text.split_whitespace();
    let shape = parts.next().unwrap_or("");
    let size = rd.reals("points", "window", &parts.collect::<Vec<_>>().join(" "))?;
    let window = match (shape, size.as_slice()) {
        ("square", [h]) => Window::plane_square(*h, anchor).map_err(window_error)?,
        ("ball", [r]) => Window::plane_ball(*r, anchor).map_err(window_error)?,
        ("disk", [rho]) => Window::disk_ball(*rho, anchor).map_err(window_error)?,
        _ => return Err(Reader::value_error("points", "window", "expected square h, ball R or disk rho")),
    };
    if window.surface() != surface {
        return Err(ConfigError::Inconsistent(format!(
            "window lives on the {}, configuration on the {}",
            window.surface().name(),
            surface.name()
        )));
    }
    match (generator, surface) {
        (Some(GeneratorSpec::Lattice { .. }), SurfaceModel::UnitDisk) => {
            return Err(ConfigError::Inconsistent("lattices are generated on the plane only".into()))
        }
        (Some(GeneratorSpec::Net { .. }), SurfaceModel::EuclideanPlane) => {
            return Err(ConfigError::Inconsistent("nets are generated on the disk only".into()))
        }
        _ => {}
    }

    let density = if rd.has_section("density") {
        let r_schedule = rd.reals("density", "r_schedule", need("density", "r_schedule")?)?;
        if r_schedule.is_empty() {
            return Err(Reader::value_error("density", "r_schedule", "needs at least one radius"));
        }
        if r_schedule.iter().any(|&r| !(r > 0.0 && r < surface.r_max())) {
            return Err(Reader::value_error("density", "r_schedule", "radii must lie in (0, R_X)"));
        }
        let grid_text = need("density", "grid")?;
        let mut parts = grid_text.split_whitespace();
        let kind = parts.next().unwrap_or("");
        let args: Vec<&str> = parts.collect();
        let grid = match (kind, args.as_slice()) {
            ("square", [h, n]) => GridSpec::Square {
                half_side: rd.real("density", "grid", h)?,
                n: rd.parse("density", "grid", n)?,
            },
            ("polar", [m, nr, na]) => GridSpec::Polar {
                max_radius: rd.real("density", "grid", m)?,
                n_radial: rd.parse("density", "grid", nr)?,
                n_angular: rd.parse("density", "grid", na)?,
            },
            _ => return Err(Reader::value_error("density", "grid", "expected square h n or polar rho n_radial n_angular")),
        };
        let grid_ok = match grid {
            GridSpec::Square { half_side, n } => {
                surface == SurfaceModel::EuclideanPlane && half_side > 0.0 && (1..=10_000).contains(&n)
            }
            GridSpec::Polar { max_radius, n_radial, n_angular } => {
                max_radius > 0.0
                    && max_radius < surface.r_max()
                    && n_radial <= 10_000
                    && (1..=10_000).contains(&n_angular)
            }
        };
        if !grid_ok {
            return Err(Reader::value_error("density", "grid", "sizes out of range or square grid on the disk"));
        }
        let margin_guard = rd.opt_real("density", "margin_guard")?.unwrap_or(0.02);
        if !(0.0..1.0).contains(&margin_guard) {
            return Err(Reader::value_error("density", "margin_guard", "must lie in [0, 1)"));
        }
        let tail = match rd.get("density", "tail") {
            Some(v) => rd.parse("density", "tail", v)?,
            None => 2usize.min(r_schedule.len()),
        };
        if tail == 0 || tail > r_schedule.len() {
            return Err(Reader::value_error("density", "tail", "must lie in 1..=len(r_schedule)"));
        }
        Some(DensitySpec { r_schedule, grid, margin_guard, tail })
    } else {
        None
    };

    let verification = if rd.has_section("verification") {
        let degrees_text = need("verification", "degrees")?;
        let degrees: Vec<usize> = degrees_text
            .split_whitespace()
            .map(|t| rd.parse("verification", "degrees", t))
            .collect::<Result<_, _>>()?;
        if degrees.is_empty() || degrees.iter().any(|&n| n > 1000) {
            return Err(Reader::value_error("verification", "degrees", "expected 1 to many degrees, each at most 1000"));
        }
        let ridge = match rd.get("verification", "ridge") {
            Some(v) => rd.parse("verification", "ridge", v)?,
            None => false,
        };
        let window = match rd.get("verification", "window").unwrap_or("config") {
            "config" => VerifyWindow::Config,
            "auto" => VerifyWindow::Auto,
            v => return Err(Reader::value_error("verification", "window", format!("expected config or auto, found {v:?}"))),
        };
        if window == VerifyWindow::Auto && generator.is_none() {
            return Err(ConfigError::Inconsistent("window = auto needs a generator".into()));
        }
        Some(VerificationSpec { degrees, ridge, window })
    } else {
        None
    };

    let potentials = if rd.has_section("potentials") {
        let r = rd.real("potentials", "r", need("potentials", "r")?)?;
        if !(r > 0.0 && r < surface.r_max()) {
            return Err(Reader::value_error("potentials", "r", "must lie in (0, R_X)"));
        }
        let epsilon = rd.opt_real("potentials", "epsilon")?;
        if epsilon.is_some_and(|e| !(e > 0.0)) {
            return Err(Reader::value_error("potentials", "epsilon", "must be positive"));
        }
        let t = rd.opt_real("potentials", "t")?.unwrap_or(DEFAULT_BUMP_SCALE);
        if !(t > 0.0 && t < 1.0) {
            return Err(Reader::value_error("potentials", "t", "must lie in (0, 1)"));
        }
        Some(PotentialSpec { r, epsilon, t })
    } else {
        None
    };

    let mut outputs = OutputPaths::default();
    for (key, slot) in [
        ("points", &mut outputs.points),
        ("density_json", &mut outputs.density_json),
        ("density_csv", &mut outputs.density_csv),
        ("verification", &mut outputs.verification),
        ("summary", &mut outputs.summary),
        ("potentials", &mut outputs.potentials),
    ] {
        if let Some(v) = rd.get("output", key) {
            let p = PathBuf::from(v);
            if p.is_absolute() || p.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
                return Err(Reader::value_error("output", key, "must be a relative path inside the output directory"));
            }
            *slot = p;
        }
    }
    let mut names: Vec<&PathBuf> = vec![
        &outputs.points,
        &outputs.density_json,
        &outputs.density_csv,
        &outputs.verification,
        &outputs.summary,
        &outputs.potentials,
    ];
    names.sort();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(ConfigError::Inconsistent("two outputs share a path".into()));
    }

    Ok(RunConfig {
        surface,
        weight,
        metric,
        kernel,
        tau_form,
        generator,
        seed,
        window,
        input,
        density,
        verification,
        potentials,
        outputs,
    })
}
