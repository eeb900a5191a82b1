//! Flags, the TOML config file, and their merge into a validated [`RunConfig`].
//! A flag always wins over the same key in the file.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use toml::Spanned;

use confspheres::conformal::ConformalWeights;
use confspheres::fields::GridField;
use confspheres::suite::DEFAULT_SEED;
use confspheres::tolerances::{CONE_TOL, GAP_FLOOR, INVARIANCE_TOL};
use confspheres::{ConeSpec, ScalarField};

use crate::parse::{parse_cone, parse_field, parse_floats, parse_points};

#[derive(Debug, Parser)]
#[command(name = "confspheres", version, about = "Conformal Hessian, Kelvin sweep and viscosity checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Conformal Hessian, spectrum, sigma vector and cone class at each point
    Hessian,
    /// Max eigenvalue residual of A^u under random Möbius words
    Invariance,
    /// Critical Kelvin radius per center, with the min-gap profile
    Spheres,
    /// The full verification battery
    Suite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Table,
    Csv,
    /// JSON
    Structured,
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// TOML file with any of the keys below (snake_case)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// bubble[:c], constant:c, fundamental[:pole], harmonic:EXPR, poly:EXPR
    #[arg(long, global = true, value_name = "NAME[:PARAMS]")]
    pub field: Option<String>,
    /// Lattice field file
    #[arg(long, global = true, value_name = "PATH")]
    pub grid: Option<PathBuf>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// gammaK:INT or sigma:I,J,..
    #[arg(long, global = true)]
    pub cone: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda_max: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub outer_radius: Option<f64>,
    /// Semicolon-separated points, e.g. "0,0,0;1,0,0"
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub centers: Option<String>,
    /// Semicolon-separated evaluation points
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub points: Option<String>,
    /// Command tolerance: cone margin, invariance residual, or gap floor below the start radius
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Use a fixed low-discrepancy sequence instead of a seeded generator
    #[arg(long, global = true)]
    pub seedless: bool,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub word_length: Option<usize>,
    /// Treat the field as w and evaluate A_w (allows n = 2)
    #[arg(long, global = true)]
    pub aw: bool,
    #[arg(long, global = true)]
    pub radial_samples: Option<usize>,
    #[arg(long, global = true)]
    pub angular_samples: Option<usize>,
    #[arg(long, global = true)]
    pub bisect_tol: Option<f64>,
    /// Comma-separated touching-probe offsets; enables viscosity verdicts in `hessian`
    #[arg(long, global = true)]
    pub epsilons: Option<String>,
    /// Extra CSV of (center, lambda, min gap) for `spheres`
    #[arg(long, global = true, value_name = "PATH")]
    pub profile_output: Option<PathBuf>,
    /// Shift the Hessian exponent in A^u (negative control)
    #[arg(long, global = true, hide = true, allow_negative_numbers = true)]
    pub corrupt_exponent: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum PointList {
    Text(String),
    Arrays(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum FloatList {
    Text(String),
    Array(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    field: Option<Spanned<String>>,
    grid: Option<Spanned<PathBuf>>,
    n: Option<Spanned<usize>>,
    cone: Option<Spanned<String>>,
    delta: Option<Spanned<f64>>,
    lambda_max: Option<Spanned<f64>>,
    outer_radius: Option<Spanned<f64>>,
    centers: Option<Spanned<PointList>>,
    points: Option<Spanned<PointList>>,
    tol: Option<Spanned<f64>>,
    format: Option<Spanned<String>>,
    output: Option<Spanned<PathBuf>>,
    seedless: Option<Spanned<bool>>,
    seed: Option<Spanned<u64>>,
    trials: Option<Spanned<usize>>,
    word_length: Option<Spanned<usize>>,
    aw: Option<Spanned<bool>>,
    radial_samples: Option<Spanned<usize>>,
    angular_samples: Option<Spanned<usize>>,
    bisect_tol: Option<Spanned<f64>>,
    epsilons: Option<Spanned<FloatList>>,
    profile_output: Option<Spanned<PathBuf>>,
}

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Default,
    Flag(&'static str),
    File { path: String, line: usize },
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => write!(f, "default"),
            Origin::Flag(name) => write!(f, "--{name}"),
            Origin::File { path, line } => write!(f, "{path}:{line}"),
        }
    }
}

struct Source {
    path: String,
    dir: PathBuf,
    text: String,
}

impl Source {
    fn line(&self, offset: usize) -> usize {
        1 + self.text[..offset.min(self.text.len())].matches('\n').count()
    }

    fn origin<T>(&self, s: &Spanned<T>) -> Origin {
        Origin::File { path: self.path.clone(), line: self.line(s.span().start) }
    }
}

fn pick<T: Clone>(
    flag: Option<T>,
    name: &'static str,
    file: Option<&Spanned<T>>,
    src: Option<&Source>,
) -> Option<(T, Origin)> {
    if let Some(v) = flag {
        return Some((v, Origin::Flag(name)));
    }
    let (s, src) = (file?, src?);
    Some((s.get_ref().clone(), src.origin(s)))
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    pub field: Option<ScalarField>,
    pub field_label: String,
    pub cone: ConeSpec,
    pub delta: f64,
    pub lambda_max: f64,
    pub outer_radius: f64,
    pub centers: Vec<Vec<f64>>,
    pub points: Vec<Vec<f64>>,
    pub tol: f64,
    pub tol_set: bool,
    pub format: Format,
    pub output: Option<PathBuf>,
    /// `None` means seedless.
    pub seed: Option<u64>,
    pub trials: usize,
    pub word_length: usize,
    pub aw: bool,
    pub radial_samples: usize,
    pub angular_samples: usize,
    pub bisect_tol: f64,
    pub epsilons: Option<Vec<f64>>,
    pub profile_output: Option<PathBuf>,
    pub weights: ConformalWeights,
}

fn load_source(path: &Path) -> Result<(FileConfig, Source), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let src = Source {
        path: path.display().to_string(),
        dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        text,
    };
    if src.text.trim().is_empty() {
        return Err(format!("{}:1: config file is empty", src.path));
    }
    let cfg: FileConfig = toml::from_str(&src.text).map_err(|e| {
        let line = e.span().map(|s| src.line(s.start)).unwrap_or(1);
        format!("{}:{line}: {}", src.path, e.message())
    })?;
    Ok((cfg, src))
}

fn check_dims(list: &[Vec<f64>], n: usize, what: &str, o: &Origin) -> Result<(), String> {
    if list.is_empty() {
        return Err(format!("{o}: {what} list is empty"));
    }
    match list.iter().find(|p| p.len() != n) {
        Some(p) => Err(format!("{o}: {what} {p:?} has {} coordinates, n = {n}", p.len())),
        None => Ok(()),
    }
}

fn positive(v: f64, what: &str, o: &Origin) -> Result<f64, String> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{o}: {what} must be positive, got {v}"))
    }
}

impl RunConfig {
    pub fn resolve(command: Command, flags: Flags) -> Result<Self, String> {
        let (file, src) = match &flags.config {
            Some(p) => {
                let (f, s) = load_source(p)?;
                (f, Some(s))
            }
            None => (FileConfig::default(), None),
        };
        let src = src.as_ref();
        let rel = |p: PathBuf, o: &Origin| match (o, src) {
            (Origin::File { .. }, Some(s)) if p.is_relative() => s.dir.join(p),
            _ => p,
        };

        let grid = pick(flags.grid, "grid", file.grid.as_ref(), src).map(|(p, o)| (rel(p, &o), o));
        let field = pick(flags.field, "field", file.field.as_ref(), src);
        let grid_field = match &grid {
            Some((p, o)) => Some(GridField::load(p).map_err(|e| format!("{o}: {}: {e}", p.display()))?),
            None => None,
        };
        let n = match pick(flags.n, "n", file.n.as_ref(), src) {
            Some((n, o)) => {
                if let Some(g) = &grid_field {
                    if g.dim() != n {
                        return Err(format!("{o}: n = {n} but the grid has dimension {}", g.dim()));
                    }
                }
                (n, o)
            }
            None => (grid_field.as_ref().map_or(3, GridField::dim), Origin::Default),
        };
        let (n, n_origin) = n;
        let aw = flags.aw || file.aw.as_ref().is_some_and(|s| *s.get_ref());
        if command != Command::Suite {
            let min = if aw { 2 } else { 3 };
            if n < min {
                return Err(format!(
                    "{n_origin}: n = {n} is too small (need n >= {min}{})",
                    if aw { "" } else { "; n = 2 needs --aw" }
                ));
            }
        }

        let (field, field_label) = match (field, grid_field) {
            (Some(_), Some(_)) => return Err("give either a field or a grid, not both".into()),
            (Some((spec, o)), None) => {
                let built = parse_field(&spec).and_then(|f| f.build(n)).map_err(|e| format!("{o}: {e}"))?;
                let label = built.to_string();
                (Some(built), label)
            }
            (None, Some(g)) => {
                let label =
                    format!("grid({})", grid.as_ref().map(|(p, _)| p.display().to_string()).unwrap_or_default());
                (Some(ScalarField::grid(g)), label)
            }
            (None, None) => (None, String::new()),
        };
        if field.is_none() && command != Command::Suite {
            return Err("no field given (use --field or --grid)".into());
        }

        let cone = match pick(flags.cone, "cone", file.cone.as_ref(), src) {
            Some((c, o)) => parse_cone(&c, n).map_err(|e| format!("{o}: {e}"))?,
            None => ConeSpec::gamma_k(n, 1).map_err(|e| e.to_string())?,
        };

        let list = |flag: Option<String>,
                    name: &'static str,
                    f: Option<&Spanned<PointList>>|
         -> Result<Vec<Vec<f64>>, String> {
            let parsed = match (flag, f) {
                (Some(s), _) => Some((parse_points(&s).map_err(|e| format!("--{name}: {e}"))?, Origin::Flag(name))),
                (None, Some(sp)) => {
                    let o = src.map(|s| s.origin(sp)).unwrap_or(Origin::Default);
                    let v = match sp.get_ref() {
                        PointList::Text(s) => parse_points(s).map_err(|e| format!("{o}: {e}"))?,
                        PointList::Arrays(a) => a.clone(),
                    };
                    Some((v, o))
                }
                (None, None) => None,
            };
            match parsed {
                Some((v, o)) => {
                    check_dims(&v, n, name.trim_end_matches('s'), &o)?;
                    Ok(v)
                }
                None => Ok(vec![vec![0.0; n]]),
            }
        };
        let centers = list(flags.centers, "centers", file.centers.as_ref())?;
        let points = list(flags.points, "points", file.points.as_ref())?;

        let float = |flag: Option<f64>, name: &'static str, f: Option<&Spanned<f64>>, default: f64| {
            pick(flag, name, f, src).unwrap_or((default, Origin::Default))
        };
        let (delta, o) = float(flags.delta, "delta", file.delta.as_ref(), 0.0);
        if !(0.0..1.0).contains(&delta) {
            return Err(format!("{o}: delta must lie in [0, 1), got {delta}"));
        }
        let (lambda_max, lo) = float(flags.lambda_max, "lambda-max", file.lambda_max.as_ref(), 10.0);
        let lambda_max = positive(lambda_max, "lambda_max", &lo)?;
        let (outer_radius, o) = float(flags.outer_radius, "outer-radius", file.outer_radius.as_ref(), 50.0);
        let outer_radius = positive(outer_radius, "outer_radius", &o)?;
        if command == Command::Spheres && lambda_max >= outer_radius {
            return Err(format!("outer radius {outer_radius} ({o}) must exceed lambda_max {lambda_max} ({lo})"));
        }
        let default_tol = match command {
            Command::Hessian => CONE_TOL,
            Command::Spheres => GAP_FLOOR,
            Command::Invariance | Command::Suite => INVARIANCE_TOL,
        };
        let tol_pick = pick(flags.tol, "tol", file.tol.as_ref(), src);
        let tol_set = tol_pick.is_some();
        let (tol, o) = tol_pick.unwrap_or((default_tol, Origin::Default));
        let tol = positive(tol, "tol", &o)?;
        let (bisect_tol, o) = float(flags.bisect_tol, "bisect-tol", file.bisect_tol.as_ref(), 1e-4);
        let bisect_tol = positive(bisect_tol, "bisect_tol", &o)?;

        let format = match (flags.format, file.format.as_ref(), src) {
            (Some(f), _, _) => f,
            (None, Some(s), Some(src)) => Format::from_str(s.get_ref(), true)
                .map_err(|_| format!("{}: unknown format '{}' (table, csv, structured)", src.origin(s), s.get_ref()))?,
            _ => Format::Table,
        };
        let output = pick(flags.output, "output", file.output.as_ref(), src).map(|(p, o)| rel(p, &o));
        let profile_output =
            pick(flags.profile_output, "profile-output", file.profile_output.as_ref(), src).map(|(p, o)| rel(p, &o));

        let seedless = flags.seedless || file.seedless.as_ref().is_some_and(|s| *s.get_ref());
        let seed = pick(flags.seed, "seed", file.seed.as_ref(), src);
        let seed = match (seedless, seed) {
            (true, Some((_, o))) => return Err(format!("{o}: a seed cannot be combined with seedless sampling")),
            (true, None) => None,
            (false, s) => Some(s.map_or(DEFAULT_SEED, |(v, _)| v)),
        };

        let count =
            |flag: Option<usize>, name: &'static str, f: Option<&Spanned<usize>>, default: usize, min: usize| {
                let (v, o) = pick(flag, name, f, src).unwrap_or((default, Origin::Default));
                if v < min {
                    Err(format!("{o}: {name} must be at least {min}, got {v}"))
                } else {
                    Ok(v)
                }
            };
        let trials = count(flags.trials, "trials", file.trials.as_ref(), 100, 1)?;
        let word_length = count(flags.word_length, "word-length", file.word_length.as_ref(), 4, 1)?;
        let radial_samples = count(flags.radial_samples, "radial-samples", file.radial_samples.as_ref(), 96, 16)?;
        let angular_samples = count(flags.angular_samples, "angular-samples", file.angular_samples.as_ref(), 400, 16)?;

        let epsilons = match (flags.epsilons, file.epsilons.as_ref()) {
            (Some(s), _) => Some(parse_floats(&s).map_err(|e| format!("--epsilons: {e}"))?),
            (None, Some(sp)) => {
                let o = src.map(|s| s.origin(sp)).unwrap_or(Origin::Default);
                Some(match sp.get_ref() {
                    FloatList::Text(s) => parse_floats(s).map_err(|e| format!("{o}: {e}"))?,
                    FloatList::Array(a) => a.clone(),
                })
            }
            (None, None) => None,
        };
        if let Some(e) = &epsilons {
            if e.iter().any(|v| !(*v >= 0.0)) {
                return Err(format!("epsilons must be non-negative, got {e:?}"));
            }
        }

        let weights = match flags.corrupt_exponent {
            Some(s) => ConformalWeights::perturbed_exponent(s),
            None => ConformalWeights::exact(),
        };

        Ok(Self {
            command,
            n,
            field,
            field_label,
            cone,
            delta,
            lambda_max,
            outer_radius,
            centers,
            points,
            tol,
            tol_set,
            format,
            output,
            seed,
            trials,
            word_length,
            aw,
            radial_samples,
            angular_samples,
            bisect_tol,
            epsilons,
            profile_output,
            weights,
        })
    }
}
