//! Run configuration: CLI flags override config-file values, which override
//! the documented defaults. Unknown config keys and out-of-bound values are
//! rejected at parse time with the offending key named.

use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use dehaze_core::enhance::{ClaheCfg, FheCfg, GocCsCfg, IrcesCfg};
use dehaze_core::fastdehaze::{FilterCfg, FilterKind, LogScale};
use dehaze_core::lip::LipParams;
use dehaze_core::pde::{Alpha, PdeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Haze,
    Underwater,
    Dust,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Pde,
    FastA,
    FastB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Post {
    Irces,
    Fhe,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterChoice {
    Lpf,
    Bilateral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogScaleChoice {
    Full,
    Raw,
    Max,
}

impl From<LogScaleChoice> for LogScale {
    fn from(v: LogScaleChoice) -> Self {
        match v {
            LogScaleChoice::Full => LogScale::FullRange,
            LogScaleChoice::Raw => LogScale::Raw,
            LogScaleChoice::Max => LogScale::ImageMax,
        }
    }
}

/// A numeric parameter that can also be the literal `auto`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AutoOrValue {
    Auto,
    Value(f64),
}

impl FromStr for AutoOrValue {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            Ok(AutoOrValue::Auto)
        } else {
            s.parse::<f64>()
                .map(AutoOrValue::Value)
                .map_err(|_| format!("expected a number or `auto`, got `{s}`"))
        }
    }
}

impl<'de> Deserialize<'de> for AutoOrValue {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(v) => Ok(AutoOrValue::Value(v)),
            Raw::Text(s) => {
                s.parse().map_err(|e: String| serde::de::Error::custom(e))
            }
        }
    }
}

impl Serialize for AutoOrValue {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            AutoOrValue::Auto => serializer.serialize_str("auto"),
            AutoOrValue::Value(v) => serializer.serialize_f64(*v),
        }
    }
}

/// Optional values as they appear in a JSON config file. Field names are
/// the flag names with underscores; unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub pipeline: Option<Pipeline>,
    pub post: Option<Post>,
    pub alpha: Option<AutoOrValue>,
    pub beta_stat: Option<f64>,
    pub dt: Option<f64>,
    pub max_iters: Option<usize>,
    pub patience: Option<usize>,
    pub lambda: Option<f64>,
    pub t_low: Option<f64>,
    pub t_high: Option<f64>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub lambda_base: Option<f64>,
    pub w_black: Option<f64>,
    pub w_white: Option<f64>,
    pub filter: Option<FilterChoice>,
    pub d0: Option<f64>,
    pub nu: Option<f64>,
    pub sigma_s: Option<f64>,
    pub sigma_r: Option<f64>,
    pub log_scale: Option<LogScaleChoice>,
    pub refine: Option<bool>,
    pub clip: Option<f64>,
    pub tiles: Option<u32>,
    pub sigma_l: Option<AutoOrValue>,
    pub gamma: Option<f64>,
    pub sharpen_k: Option<f64>,
    pub noise_gate: Option<f64>,
    pub gamma_low: Option<f64>,
    pub gamma_high: Option<f64>,
    pub fhe_d0: Option<f64>,
    pub int_passes: Option<u32>,
    pub p_low: Option<f64>,
    pub p_high: Option<f64>,
    pub debug: Option<bool>,
    pub report: Option<ReportFormat>,
    pub workers: Option<usize>,
    pub no_timings: Option<bool>,
}

/// Flag values as parsed; `None` means "not given on the command line".
#[derive(Debug, Clone, Default, clap::Args)]
pub struct RunArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input image file or directory of images (png/jpg/ppm/pgm).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory for enhanced PNGs, reports and debug artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scene category; underwater and dust apply colour correction first
    /// [default: haze].
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Enhancement pipeline [default: pde]. fast-a suits uniform thin haze
    /// only; fast-b is the reformulated approximation.
    #[arg(long, value_enum)]
    pub pipeline: Option<Pipeline>,
    /// Post operator applied to the result [default: irces].
    #[arg(long, value_enum)]
    pub post: Option<Post>,
    /// LIP forcing weight, a number or `auto` [default: auto].
    #[arg(long)]
    pub alpha: Option<AutoOrValue>,
    /// Weight of the statistical stretch term [default: 0.1].
    #[arg(long)]
    pub beta_stat: Option<f64>,
    /// Explicit time step, in (0, 0.25] [default: 0.1].
    #[arg(long)]
    pub dt: Option<f64>,
    /// Maximum evolution steps [default: 50].
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Consecutive non-improving steps tolerated before stopping
    /// [default: 50, i.e. explore the full budget].
    #[arg(long)]
    pub patience: Option<usize>,
    /// Fixed LIP exponent; omit for adaptive computation from BA/WA.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Black-area threshold [default: 0.15].
    #[arg(long)]
    pub t_low: Option<f64>,
    /// White-area threshold [default: 0.85].
    #[arg(long)]
    pub t_high: Option<f64>,
    /// Lower clamp of the adaptive exponent [default: 1].
    #[arg(long)]
    pub lambda_min: Option<f64>,
    /// Upper clamp of the adaptive exponent [default: 4].
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Base of the adaptive exponent formula [default: 2].
    #[arg(long)]
    pub lambda_base: Option<f64>,
    /// Black-area weight of the adaptive exponent [default: 2].
    #[arg(long)]
    pub w_black: Option<f64>,
    /// White-area weight of the adaptive exponent [default: 1].
    #[arg(long)]
    pub w_white: Option<f64>,
    /// Transmission smoothing filter for fast-b [default: lpf].
    #[arg(long, value_enum)]
    pub filter: Option<FilterChoice>,
    /// Relative cutoff of the fractional Gaussian low-pass [default: 0.15].
    #[arg(long)]
    pub d0: Option<f64>,
    /// Fractional order of the low-pass, in (0, 1] [default: 0.5].
    #[arg(long)]
    pub nu: Option<f64>,
    /// Bilateral spatial sigma in pixels [default: 8].
    #[arg(long)]
    pub sigma_s: Option<f64>,
    /// Bilateral range sigma in 0-255 units [default: 25].
    #[arg(long)]
    pub sigma_r: Option<f64>,
    /// Scaling of the log-inverted field [default: full].
    #[arg(long, value_enum)]
    pub log_scale: Option<LogScaleChoice>,
    /// Refine the fast-b output with the PDE evolution.
    #[arg(long, action = clap::ArgAction::SetTrue)]
    pub refine: Option<bool>,
    /// CLAHE clip limit as a fraction of tile pixels [default: 0.002].
    #[arg(long)]
    pub clip: Option<f64>,
    /// CLAHE tile grid edge count [default: 32].
    #[arg(long)]
    pub tiles: Option<u32>,
    /// IRCES illumination blur sigma, a number or `auto`
    /// (= min(width, height) / 4) [default: auto].
    #[arg(long)]
    pub sigma_l: Option<AutoOrValue>,
    /// IRCES illumination exponent, in (0, 1] [default: 0.7].
    #[arg(long)]
    pub gamma: Option<f64>,
    /// IRCES unsharp gain [default: 0.5].
    #[arg(long)]
    pub sharpen_k: Option<f64>,
    /// IRCES gradient floor below which no sharpening is applied
    /// [default: 0.02].
    #[arg(long)]
    pub noise_gate: Option<f64>,
    /// FHE low-frequency gain [default: 0.6].
    #[arg(long)]
    pub gamma_low: Option<f64>,
    /// FHE high-frequency gain [default: 1.4].
    #[arg(long)]
    pub gamma_high: Option<f64>,
    /// FHE relative cutoff [default: 0.1].
    #[arg(long)]
    pub fhe_d0: Option<f64>,
    /// FHE fuzzy intensification passes [default: 1].
    #[arg(long)]
    pub int_passes: Option<u32>,
    /// Lower percentile of the gain-offset stretch [default: 1].
    #[arg(long)]
    pub p_low: Option<f64>,
    /// Upper percentile of the gain-offset stretch [default: 99].
    #[arg(long)]
    pub p_high: Option<f64>,
    /// Write transmission estimates, log-inverted fields and evolution
    /// traces next to each output.
    #[arg(long, action = clap::ArgAction::SetTrue)]
    pub debug: Option<bool>,
    /// Report format(s) to emit [default: both].
    #[arg(long, value_enum)]
    pub report: Option<ReportFormat>,
    /// Worker threads for batch processing; 0 means all cores [default: 0].
    #[arg(long)]
    pub workers: Option<usize>,
    /// Report zero runtimes, making reports byte-reproducible across runs.
    #[arg(long, action = clap::ArgAction::SetTrue)]
    pub no_timings: Option<bool>,
}

/// Fully resolved configuration; serialized verbatim as `run_config.json`
/// next to the reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub pipeline: Pipeline,
    pub post: Post,
    pub input: PathBuf,
    pub out: PathBuf,
    pub pde: PdeParams,
    pub filter: FilterCfg,
    pub log_scale: LogScale,
    pub refine: bool,
    pub clahe: ClaheCfg,
    pub irces: IrcesCfg,
    pub fhe: FheCfg,
    pub goc: GocCsCfg,
    pub debug: bool,
    pub report: ReportFormat,
    pub workers: usize,
    pub no_timings: bool,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn fail(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Merge flags over file values over defaults and validate everything.
pub fn resolve(args: &RunArgs) -> Result<RunConfig, ConfigError> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| fail(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| fail(format!("invalid config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };

    let input = args
        .input
        .clone()
        .or(file.input)
        .ok_or_else(|| fail("missing required parameter `input` (flag --input or config key)"))?;
    let out = args
        .out
        .clone()
        .or(file.out)
        .ok_or_else(|| fail("missing required parameter `out` (flag --out or config key)"))?;

    let defaults_pde = PdeParams::default();
    let defaults_lip = LipParams::default();
    let defaults_filter = FilterCfg::default();
    let defaults_clahe = ClaheCfg::default();
    let defaults_irces = IrcesCfg::default();
    let defaults_fhe = FheCfg::default();
    let defaults_goc = GocCsCfg::default();

    let alpha = match args.alpha.or(file.alpha) {
        None | Some(AutoOrValue::Auto) => Alpha::Auto,
        Some(AutoOrValue::Value(v)) => Alpha::Fixed(v),
    };
    let lip = LipParams {
        lambda: args.lambda.or(file.lambda),
        t_low: args.t_low.or(file.t_low).unwrap_or(defaults_lip.t_low),
        t_high: args.t_high.or(file.t_high).unwrap_or(defaults_lip.t_high),
        lambda_min: args.lambda_min.or(file.lambda_min).unwrap_or(defaults_lip.lambda_min),
        lambda_max: args.lambda_max.or(file.lambda_max).unwrap_or(defaults_lip.lambda_max),
        lambda_base: args.lambda_base.or(file.lambda_base).unwrap_or(defaults_lip.lambda_base),
        w_black: args.w_black.or(file.w_black).unwrap_or(defaults_lip.w_black),
        w_white: args.w_white.or(file.w_white).unwrap_or(defaults_lip.w_white),
    };
    let pde = PdeParams {
        alpha,
        beta_stat: args.beta_stat.or(file.beta_stat).unwrap_or(defaults_pde.beta_stat),
        dt: args.dt.or(file.dt).unwrap_or(defaults_pde.dt),
        max_iters: args.max_iters.or(file.max_iters).unwrap_or(defaults_pde.max_iters),
        patience: args.patience.or(file.patience).unwrap_or(defaults_pde.patience),
        lip,
    };
    let filter = FilterCfg {
        kind: match args.filter.or(file.filter) {
            None | Some(FilterChoice::Lpf) => FilterKind::FractionalGaussian,
            Some(FilterChoice::Bilateral) => FilterKind::Bilateral,
        },
        d0: args.d0.or(file.d0).unwrap_or(defaults_filter.d0),
        nu: args.nu.or(file.nu).unwrap_or(defaults_filter.nu),
        sigma_s: args.sigma_s.or(file.sigma_s).unwrap_or(defaults_filter.sigma_s),
        sigma_r: args.sigma_r.or(file.sigma_r).unwrap_or(defaults_filter.sigma_r),
    };
    let clahe = ClaheCfg {
        clip: args.clip.or(file.clip).unwrap_or(defaults_clahe.clip),
        tiles: args.tiles.or(file.tiles).unwrap_or(defaults_clahe.tiles),
    };
    let irces = IrcesCfg {
        sigma_l: match args.sigma_l.or(file.sigma_l) {
            None | Some(AutoOrValue::Auto) => None,
            Some(AutoOrValue::Value(v)) => Some(v),
        },
        gamma: args.gamma.or(file.gamma).unwrap_or(defaults_irces.gamma),
        sharpen_k: args.sharpen_k.or(file.sharpen_k).unwrap_or(defaults_irces.sharpen_k),
        noise_gate: args.noise_gate.or(file.noise_gate).unwrap_or(defaults_irces.noise_gate),
    };
    let fhe = FheCfg {
        gamma_low: args.gamma_low.or(file.gamma_low).unwrap_or(defaults_fhe.gamma_low),
        gamma_high: args.gamma_high.or(file.gamma_high).unwrap_or(defaults_fhe.gamma_high),
        d0: args.fhe_d0.or(file.fhe_d0).unwrap_or(defaults_fhe.d0),
        int_passes: args.int_passes.or(file.int_passes).unwrap_or(defaults_fhe.int_passes),
    };
    let goc = GocCsCfg {
        p_low: args.p_low.or(file.p_low).unwrap_or(defaults_goc.p_low),
        p_high: args.p_high.or(file.p_high).unwrap_or(defaults_goc.p_high),
    };

    let cfg = RunConfig {
        mode: args.mode.or(file.mode).unwrap_or(Mode::Haze),
        pipeline: args.pipeline.or(file.pipeline).unwrap_or(Pipeline::Pde),
        post: args.post.or(file.post).unwrap_or(Post::Irces),
        input,
        out,
        pde,
        filter,
        log_scale: args.log_scale.or(file.log_scale).map(Into::into).unwrap_or_default(),
        refine: args.refine.unwrap_or(false) || file.refine.unwrap_or(false),
        clahe,
        irces,
        fhe,
        goc,
        debug: args.debug.unwrap_or(false) || file.debug.unwrap_or(false),
        report: args.report.or(file.report).unwrap_or(ReportFormat::Both),
        workers: args.workers.or(file.workers).unwrap_or(0),
        no_timings: args.no_timings.unwrap_or(false) || file.no_timings.unwrap_or(false),
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    cfg.pde.validate().map_err(|e| fail(e.to_string()))?;
    cfg.filter.validate().map_err(|e| fail(e.to_string()))?;
    cfg.clahe.validate().map_err(|e| fail(e.to_string()))?;
    cfg.irces.validate().map_err(|e| fail(e.to_string()))?;
    cfg.fhe.validate().map_err(|e| fail(e.to_string()))?;
    cfg.goc.validate().map_err(|e| fail(e.to_string()))?;
    Ok(())
}
