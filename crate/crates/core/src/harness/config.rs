use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dynamics::{LorenzParams, MackeyGlassParams, RosslerParams};
use crate::error::{Error, Result};
use crate::network::TrainConfig;
use crate::preprocess::{EmbeddingSpec, SavGolSpec};

/// Where the series comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DatasetSource {
    MackeyGlass,
    Lorenz,
    Rossler,
    /// A CSV file; see [`ExperimentConfig::csv_column`].
    Csv(PathBuf),
}

impl FromStr for DatasetSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mackey_glass" | "mackey-glass" => Ok(Self::MackeyGlass),
            "lorenz" => Ok(Self::Lorenz),
            "rossler" => Ok(Self::Rossler),
            _ => match s.strip_prefix("csv:") {
                Some(p) if !p.is_empty() => Ok(Self::Csv(PathBuf::from(p))),
                _ => Err(Error::Config(format!(
                    "unknown dataset {s:?}; expected mackey_glass, lorenz, rossler or csv:<path>"
                ))),
            },
        }
    }
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MackeyGlass => f.write_str("mackey_glass"),
            Self::Lorenz => f.write_str("lorenz"),
            Self::Rossler => f.write_str("rossler"),
            Self::Csv(p) => write!(f, "csv:{}", p.display()),
        }
    }
}

impl Serialize for DatasetSource {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DatasetSource {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How the derivative series is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffMethod {
    /// From the governing equations, or the `differential` column of a CSV.
    Analytic,
    Savgol,
}

/// Which samples the min-max scalers see.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleFit {
    /// Samples touched by training windows.
    Train,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// `1.96 · sd / sqrt(n)`.
    Normal,
    /// Two-sided 95% Student-t quantile with `n - 1` degrees of freedom.
    StudentT,
}

/// One experiment: data pipeline, model, training and repetition settings.
/// Keys are flat except for the per-generator parameter tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub mackey_glass: MackeyGlassParams,
    pub lorenz: LorenzParams,
    pub rossler: RosslerParams,
    /// Value column for `csv:` datasets.
    pub csv_column: usize,
    /// Sample spacing for `csv:` datasets.
    pub csv_dt: f64,
    pub diff: DiffMethod,
    pub savgol: SavGolSpec,
    /// Map the raw series onto `[0, 1]` (derivative divided by the same
    /// range) before anything else. Reported errors are in these units.
    pub normalize: bool,
    #[serde(rename = "D")]
    pub dim: usize,
    #[serde(rename = "T")]
    pub lag: usize,
    #[serde(rename = "H")]
    pub horizon: usize,
    pub train_frac: f64,
    pub scale_lo: f64,
    pub scale_hi: f64,
    pub scale_fit: ScaleFit,
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub grad_clip: Option<f64>,
    pub hidden: usize,
    pub init_scale: Option<f64>,
    pub n_runs: usize,
    /// Run `i` trains with seed `base_seed + i`.
    pub base_seed: u64,
    pub output_dir: PathBuf,
    pub ci: CiMethod,
    /// Store per-run wall time in the report. Off by default so reports of
    /// identical configs are byte-identical.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        let e = EmbeddingSpec::default();
        Self {
            dataset: DatasetSource::MackeyGlass,
            mackey_glass: MackeyGlassParams::default(),
            lorenz: LorenzParams::default(),
            rossler: RosslerParams::default(),
            csv_column: 0,
            csv_dt: 1.0,
            diff: DiffMethod::Analytic,
            savgol: SavGolSpec::default(),
            normalize: true,
            dim: e.dim,
            lag: e.lag,
            horizon: e.horizon,
            train_frac: 0.6,
            scale_lo: -0.5,
            scale_hi: 0.5,
            scale_fit: ScaleFit::Train,
            lambda: t.lambda,
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            batch_size: t.batch_size,
            adam_beta1: t.adam_beta1,
            adam_beta2: t.adam_beta2,
            adam_eps: t.adam_eps,
            grad_clip: t.grad_clip,
            hidden: t.hidden,
            init_scale: t.init_scale,
            n_runs: 30,
            base_seed: 0,
            output_dir: PathBuf::from("out"),
            ci: CiMethod::Normal,
            record_timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn embedding(&self) -> EmbeddingSpec {
        EmbeddingSpec {
            dim: self.dim,
            lag: self.lag,
            horizon: self.horizon,
        }
    }

    /// Training settings for run `run`.
    pub fn train_config(&self, run: usize) -> TrainConfig {
        TrainConfig {
            lambda: self.lambda,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_eps: self.adam_eps,
            seed: self.run_seed(run),
            grad_clip: self.grad_clip,
            hidden: self.hidden,
            init_scale: self.init_scale,
        }
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        if self.n_runs == 0 {
            return Err(Error::Config("n_runs must be at least 1".into()));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::Config(format!("train_frac must lie in (0, 1), got {}", self.train_frac)));
        }
        if !(self.scale_hi > self.scale_lo) {
            return Err(Error::Config("scale_hi must exceed scale_lo".into()));
        }
        if !(self.csv_dt > 0.0) {
            return Err(Error::Config("csv_dt must be positive".into()));
        }
        self.embedding().validate().map_err(cfg)?;
        if self.diff == DiffMethod::Savgol {
            self.savgol.validate().map_err(cfg)?;
        }
        self.train_config(0).validate()
    }

    /// Reads JSON or TOML, chosen by extension (`.toml` is TOML, anything
    /// else is tried as JSON first).
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_toml = path.extension().is_some_and(|e| e == "toml");
        let parsed = if is_toml {
            Self::from_toml(&text)
        } else {
            Self::from_json(&text).or_else(|json_err| Self::from_toml(&text).map_err(|_| json_err))
        }?;
        parsed.validate()?;
        Ok(parsed)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
