//! Experiment configuration: flags over a JSON file over defaults.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use randbill_core::measure::InvariantIntervalFamily;
use randbill_core::{AngleSpec, BaseAngle, BaseForm, Reference};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const OUTPUT_DIR_ENV: &str = "RANDBILL_OUTPUT_DIR";

const DEFAULT_ALPHA: &str = "1/7";
const DEFAULT_THETA0: &str = "pi/20";
const DEFAULT_STEPS: usize = 1000;
const DEFAULT_BINS: usize = 256;
const DEFAULT_MAX_CHORDS: usize = 2000;

/// Billiard table for Lyapunov estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Table {
    Circle,
    Pipeline,
}

/// Within-cell weighting of discretised densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceArg {
    Mu,
    Lebesgue,
}

impl From<ReferenceArg> for Reference {
    fn from(r: ReferenceArg) -> Self {
        match r {
            ReferenceArg::Mu => Reference::Mu,
            ReferenceArg::Lebesgue => Reference::Lebesgue,
        }
    }
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Base angle: `m/n` for mπ/n, `pi/n`, or radians.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Initial angle: `pi/20`, `3pi/14` or radians.
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<String>,
    /// Initial arc position (circle) or x coordinate (pipeline).
    #[arg(long, allow_hyphen_values = true)]
    pub s0: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of equal-width cells on [0, π].
    #[arg(long)]
    pub bins: Option<usize>,
    /// Defaults to $RANDBILL_OUTPUT_DIR, then `out`.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Subcommand-specific flags, all optional.
#[derive(Debug, Clone, Default)]
pub struct ExtraArgs {
    pub initial: Option<String>,
    pub reference: Option<ReferenceArg>,
    pub table: Option<Table>,
    pub direction: Option<[f64; 2]>,
    pub max_chords: Option<usize>,
    pub allow_irrational: bool,
}

/// α as written in a config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum AlphaInput {
    Rational { rational: String },
    Real { real: f64 },
    Text(String),
    Radians(f64),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum AngleInput {
    Text(String),
    Radians(f64),
}

/// `knudsen` start density in a config file: the flag syntax, or an object.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum InitialInput {
    Text(String),
    Uniform { uniform_interval: [f64; 2] },
    File { file: String },
}

impl InitialInput {
    fn into_flag(self) -> String {
        match self {
            InitialInput::Text(t) => t,
            InitialInput::Uniform { uniform_interval: [a, b] } => format!("interval:{a},{b}"),
            InitialInput::File { file } => format!("file:{file}"),
        }
    }
}

/// Schema of the `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    alpha: Option<AlphaInput>,
    theta0: Option<AngleInput>,
    s0: Option<f64>,
    steps: Option<usize>,
    seed: Option<u64>,
    bins: Option<usize>,
    output_dir: Option<PathBuf>,
    initial: Option<InitialInput>,
    reference: Option<ReferenceArg>,
    table: Option<Table>,
    direction: Option<[f64; 2]>,
    max_chords: Option<usize>,
    strict: Option<bool>,
}

/// α in the recorded config.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum AlphaRecord {
    Rational { rational: String },
    Real { real: f64 },
}

/// Fully resolved configuration, echoed into every summary file.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub alpha: AlphaRecord,
    pub theta0: String,
    pub s0: f64,
    pub steps: usize,
    pub seed: u64,
    pub bins: usize,
    pub output_dir: PathBuf,
    pub initial: String,
    pub reference: ReferenceArg,
    pub table: Table,
    pub direction: [f64; 2],
    pub max_chords: usize,
    pub strict: bool,
    #[serde(skip)]
    pub base: BaseAngle,
    #[serde(skip)]
    pub theta0_spec: AngleSpec,
}

fn parse_alpha(text: &str) -> Result<BaseAngle, CliError> {
    text.parse::<BaseAngle>().map_err(|e| CliError::Config(format!("--alpha {text:?}: {e}")))
}

fn parse_theta0(text: &str) -> Result<AngleSpec, CliError> {
    let spec: AngleSpec = text
        .parse()
        .map_err(|e| CliError::Config(format!("--theta0 {text:?}: {e}")))?;
    let v = spec.radians();
    if !(v > 0.0 && v < std::f64::consts::PI) {
        return Err(CliError::Config(format!(
            "--theta0 {text:?}: the initial angle must lie strictly between 0 and π"
        )));
    }
    Ok(spec)
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Smallest bin count ≥ `target` whose cell edges fall on the interval
/// family's endpoints, if there is one nearby.
fn aligned_bins(alpha: &BaseAngle, target: usize) -> Option<usize> {
    let fam = InvariantIntervalFamily::new(alpha).ok()?;
    (target..=4 * target).find(|&b| fam.aligned_with(b))
}

impl ExperimentConfig {
    pub fn resolve(common: &CommonArgs, extra: &ExtraArgs) -> Result<Self, CliError> {
        let file = match &common.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };

        let alpha_text = match (&common.alpha, &file.alpha) {
            (Some(a), _) => a.clone(),
            (None, Some(AlphaInput::Rational { rational })) => rational.clone(),
            (None, Some(AlphaInput::Text(t))) => t.clone(),
            (None, Some(AlphaInput::Real { real })) | (None, Some(AlphaInput::Radians(real))) => {
                // a bare number is radians even when it happens to be integral
                let base = BaseAngle::real(*real).map_err(|e| CliError::Config(format!("alpha {real}: {e}")))?;
                return Self::finish(common, extra, file, base);
            }
            (None, None) => DEFAULT_ALPHA.to_string(),
        };
        let base = parse_alpha(&alpha_text)?;
        Self::finish(common, extra, file, base)
    }

    fn finish(common: &CommonArgs, extra: &ExtraArgs, file: FileConfig, base: BaseAngle) -> Result<Self, CliError> {
        let theta0_text = match (&common.theta0, &file.theta0) {
            (Some(t), _) => t.clone(),
            (None, Some(AngleInput::Text(t))) => t.clone(),
            (None, Some(AngleInput::Radians(v))) => v.to_string(),
            (None, None) => DEFAULT_THETA0.to_string(),
        };
        let theta0_spec = parse_theta0(&theta0_text)?;

        let s0 = common.s0.or(file.s0).unwrap_or(0.0);
        if !s0.is_finite() {
            return Err(CliError::Config("--s0 must be finite".into()));
        }
        let steps = common.steps.or(file.steps).unwrap_or(DEFAULT_STEPS);
        let seed = common.seed.or(file.seed).unwrap_or(0);

        let initial = extra.initial.clone().or(file.initial.map(InitialInput::into_flag)).unwrap_or_else(|| {
            if base.is_rational() {
                "interval:I1".into()
            } else {
                "mu:0.2,0.6".into()
            }
        });
        let bins = match common.bins.or(file.bins) {
            Some(b) => b,
            None if initial.starts_with("interval:I") => aligned_bins(&base, DEFAULT_BINS).unwrap_or(DEFAULT_BINS),
            None => DEFAULT_BINS,
        };
        if bins < 2 {
            return Err(CliError::Config(format!("--bins {bins}: at least 2 cells are needed")));
        }

        let output_dir = common
            .output_dir
            .clone()
            .or(file.output_dir)
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));

        let direction = extra.direction.or(file.direction).unwrap_or([0.0, 1.0]);
        if direction == [0.0, 0.0] || direction.iter().any(|d| !d.is_finite()) {
            return Err(CliError::Config("--direction must be a finite nonzero vector".into()));
        }
        let strict = if extra.allow_irrational {
            false
        } else {
            file.strict.unwrap_or(true)
        };

        let alpha = match base.form() {
            BaseForm::Rational { m, n } => AlphaRecord::Rational {
                rational: format!("{m}/{n}"),
            },
            BaseForm::Real => AlphaRecord::Real { real: base.value() },
        };

        Ok(ExperimentConfig {
            alpha,
            theta0: theta0_spec.to_string(),
            s0,
            steps,
            seed,
            bins,
            output_dir,
            initial,
            reference: extra.reference.or(file.reference).unwrap_or(ReferenceArg::Mu),
            table: extra.table.or(file.table).unwrap_or(Table::Circle),
            direction,
            max_chords: extra.max_chords.or(file.max_chords).unwrap_or(DEFAULT_MAX_CHORDS),
            strict,
            base,
            theta0_spec,
        })
    }

    pub fn theta0(&self) -> f64 {
        self.theta0_spec.radians()
    }

    pub fn mode(&self) -> &'static str {
        if self.base.is_rational() {
            "rational"
        } else {
            "irrational"
        }
    }
}
