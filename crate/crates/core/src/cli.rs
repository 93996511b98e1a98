//! Command-line front end.
//!
//! Every subcommand reads its settings from flags, falling back to the
//! matching table of the `--config` TOML file and then to built-in defaults.
//! The resolved settings are written to `<out>.config.toml`; running again
//! with `--config <out>.config.toml` reproduces the outputs byte for byte.
//!
//! Exit codes: 0 success, 2 invalid input or usage, 3 numerical failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::benchmarks::{fit_poisson_glm, CountLag, GlmSpec};
use crate::copulas::{Copula, CopulaFamily};
use crate::error::{Error, Result};
use crate::header::Header;
use crate::inference::{fit, fit_adjusted_two_step, mask_fixing, FitConfig, FitResult, FittedModel};
use crate::pipeline::{
    aggregate, ingest_climate, ingest_ratings, ActivitySeries, AggregateOptions, ClimatePanel, ClimateSchema,
    IngestReport, RatingPanel, RatingSchema,
};
use crate::process::{ar1_climate, simulate, ClimateLink, LinkFn, LinkTarget, ModelKind, ModelSpec};
use crate::selection_risk::{
    nested_df, plug_in_risk, rolling_log_score, rolling_log_score_glm, ComparisonRow, ComparisonTable,
    RollingConfig, RollingScores,
};
use crate::transform::{mixed_difference, read_columns, DiscreteMarginal, PitMode};

#[derive(Debug, Parser)]
#[command(name = "migcopula", version, about = "Copula time-series models for rating-migration counts")]
pub struct Cli {
    /// TOML file with one table per subcommand; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean the ratings panel (and standardize climate data).
    Ingest(PanelArgs),
    /// Ingest and aggregate to the annual activity series.
    Aggregate(PanelArgs),
    /// Mixed-difference transform of the activity counts.
    Transform(TransformArgs),
    /// Simulate a copula time series.
    Simulate(SimulateArgs),
    /// Maximum-likelihood fit of a copula model or Poisson regression.
    Fit(FitArgs),
    /// Comparison table of fitted models with out-of-sample scores.
    Compare(CompareArgs),
    /// Rolling one-step-ahead log-scores of one fitted model.
    Forecast(ForecastArgs),
    /// Monte-Carlo VaR and expected shortfall from a fitted model.
    Risk(RiskArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct PanelArgs {
    /// Ratings CSV.
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// Climate CSV (country, year, value).
    #[arg(long)]
    pub climate: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of rating grades.
    #[arg(long)]
    pub scale_max: Option<u32>,
    #[arg(long)]
    pub severe_threshold: Option<u32>,
    /// `sample` or `population` standard deviation for z-scores.
    #[arg(long)]
    pub sd: Option<String>,
    /// Least share of rated countries with climate data (aggregate only).
    #[arg(long)]
    pub min_coverage: Option<f64>,
    #[arg(skip)]
    pub schema: Option<RatingSchema>,
    #[arg(skip)]
    pub climate_schema: Option<ClimateSchema>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformArgs {
    /// Activity series CSV.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// `empirical` or a marginal JSON file.
    #[arg(long)]
    pub marginal: Option<String>,
    /// `randomized` or `mid`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelArgs {
    /// mag1, magmar11, markov or glm.
    #[arg(long)]
    pub model: Option<String>,
    /// gaussian, t or gumbel: the MAG slot, or the AR slot of a Markov chain.
    #[arg(long)]
    pub copula: Option<String>,
    /// AR slot family of MAGMAR(1,1); defaults to `--copula`.
    #[arg(long)]
    pub ar_copula: Option<String>,
    /// `name=value`, e.g. `mag.rho=0.5`.
    #[arg(long = "param")]
    pub params: Vec<String>,
    /// Parameter held at its value.
    #[arg(long = "fix")]
    pub fixed: Vec<String>,
    /// tanh or one-plus-exp.
    #[arg(long)]
    pub climate_link: Option<String>,
    /// mag or ar.
    #[arg(long)]
    pub link_target: Option<String>,
    /// Regressors of the Poisson model: iid, markov, markov-raw, climate, climate2.
    #[arg(long)]
    pub glm: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// AR(1) coefficient of the generated climate covariate.
    #[arg(long)]
    pub climate_phi: Option<f64>,
    #[arg(long)]
    pub climate_sigma: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Uniform series or simulated path CSV.
    #[arg(long)]
    pub u: Option<PathBuf>,
    /// Activity series (lagged `C_lag` matched by year) or a file with a `climate` column.
    #[arg(long)]
    pub climate: Option<PathBuf>,
    /// Adjusted two-step estimator.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub adjusted: Option<bool>,
    /// Seed of the stationary-margin simulation.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub multistarts: Option<usize>,
    #[arg(long)]
    pub max_evals: Option<usize>,
    #[arg(long)]
    pub psi_draws: Option<usize>,
    #[arg(long)]
    pub w0: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareArgs {
    /// Fit report JSON (repeatable).
    #[arg(long = "fit")]
    pub fits: Vec<PathBuf>,
    #[arg(long)]
    pub u: Option<PathBuf>,
    #[arg(long)]
    pub climate: Option<PathBuf>,
    /// First forecast origin; defaults to ceil(0.6 n).
    #[arg(long)]
    pub oos: Option<usize>,
    #[arg(long)]
    pub refit_every: Option<usize>,
    /// Omit out-of-sample scores.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub skip_oos: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastArgs {
    #[arg(long)]
    pub fit: Option<PathBuf>,
    #[arg(long)]
    pub u: Option<PathBuf>,
    #[arg(long)]
    pub climate: Option<PathBuf>,
    #[arg(long)]
    pub min_window: Option<usize>,
    #[arg(long)]
    pub refit_every: Option<usize>,
    /// Keep the reported estimates at every origin.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub fixed: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct RiskArgs {
    #[arg(long)]
    pub fit: Option<PathBuf>,
    #[arg(long)]
    pub h: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Marginal JSON or uniform-series CSV whose count quantile maps U to X.
    #[arg(long)]
    pub marginal_inverse: Option<PathBuf>,
    /// Lagged covariate for each future step of a climate-linked model.
    #[arg(long = "climate-next", allow_hyphen_values = true)]
    pub climate_next: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Fit output: JSON with the header block and the estimation results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub header: Header,
    pub fit: FitResult,
    /// Ordinary fit when `fit` is the adjusted second stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage1: Option<FitResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjusted_ks: Option<f64>,
}

impl FitReport {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Some(
                text.parse::<toml::Table>()
                    .map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?,
            )
        }
        None => None,
    };
    let file = file.as_ref();
    match cli.command {
        Command::Ingest(a) => cmd_ingest(merge(&a, file, "ingest")?),
        Command::Aggregate(a) => cmd_aggregate(merge(&a, file, "aggregate")?),
        Command::Transform(a) => cmd_transform(merge(&a, file, "transform")?),
        Command::Simulate(a) => cmd_simulate(merge(&a, file, "simulate")?),
        Command::Fit(a) => cmd_fit(merge(&a, file, "fit")?),
        Command::Compare(a) => cmd_compare(merge(&a, file, "compare")?),
        Command::Forecast(a) => cmd_forecast(merge(&a, file, "forecast")?),
        Command::Risk(a) => cmd_risk(merge(&a, file, "risk")?),
    }
}

fn to_table<T: Serialize>(v: &T) -> Result<toml::Table> {
    toml::Table::try_from(v).map_err(|e| Error::Parse(format!("cannot encode settings: {e}")))
}

/// Flags over the `[section]` table of the config file.
fn merge<T: Serialize + DeserializeOwned>(flags: &T, file: Option<&toml::Table>, section: &str) -> Result<T> {
    let mut table = match file.and_then(|f| f.get(section)) {
        Some(toml::Value::Table(t)) => t.clone(),
        Some(_) => return Err(Error::Parse(format!("config entry '{section}' is not a table"))),
        None => toml::Table::new(),
    };
    for (k, v) in to_table(flags)? {
        if matches!(&v, toml::Value::Array(a) if a.is_empty()) {
            continue;
        }
        table.insert(k, v);
    }
    T::deserialize(toml::Value::Table(table)).map_err(|e| Error::Parse(format!("[{section}]: {e}")))
}

/// Writes `<out>.config.toml` and returns the hash recorded in headers.
fn record_config<T: Serialize>(resolved: &T, section: &str, out: &Path) -> Result<String> {
    let mut root = toml::Table::new();
    root.insert(section.into(), toml::Value::Table(to_table(resolved)?));
    let text = toml::to_string(&root).map_err(|e| Error::Parse(format!("cannot encode settings: {e}")))?;
    let path = sibling(out, "config.toml");
    std::fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
    let digest = Sha256::digest(text.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn base_header(section: &str, hash: &str) -> Header {
    Header::new().with("command", section).with("config_hash", hash)
}

fn required<T: Clone>(v: &Option<T>, flag: &str) -> Result<T> {
    v.clone()
        .ok_or_else(|| Error::InvalidInput(format!("missing required setting --{flag}")))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

impl PanelArgs {
    fn resolve(mut self) -> Result<Self> {
        let mut schema = self.schema.take().unwrap_or_default();
        schema.scale_max = self.scale_max.unwrap_or(schema.scale_max);
        schema.severe_threshold = self.severe_threshold.unwrap_or(schema.severe_threshold);
        let mut cschema = self.climate_schema.take().unwrap_or_default();
        if let Some(sd) = &self.sd {
            cschema.sd = match sd.as_str() {
                "sample" => crate::pipeline::SdConvention::Sample,
                "population" => crate::pipeline::SdConvention::Population,
                other => return Err(Error::InvalidInput(format!("unknown --sd '{other}'"))),
            };
        }
        self.scale_max = Some(schema.scale_max);
        self.severe_threshold = Some(schema.severe_threshold);
        self.sd = Some(
            match cschema.sd {
                crate::pipeline::SdConvention::Sample => "sample",
                crate::pipeline::SdConvention::Population => "population",
            }
            .into(),
        );
        self.min_coverage = Some(self.min_coverage.unwrap_or(AggregateOptions::default().min_coverage));
        self.schema = Some(schema);
        self.climate_schema = Some(cschema);
        Ok(self)
    }

    fn load(&self, out: &Path) -> Result<(RatingPanel, Option<ClimatePanel>)> {
        let ratings = required(&self.ratings, "ratings")?;
        let schema = self.schema.as_ref().expect("resolved");
        let panel = match ingest_ratings(&ratings, schema) {
            Ok(p) => p,
            Err(Error::TooManyBadRows { bad, total, rows }) => {
                let path = sibling(out, "errors.csv");
                let w = create(&path)?;
                IngestReport::write_bad_rows(&rows, w)?;
                return Err(Error::InvalidInput(format!(
                    "{bad} of {total} rows of {} could not be parsed; see {}",
                    ratings.display(),
                    path.display()
                )));
            }
            Err(e) => return Err(e),
        };
        if !panel.report.bad.is_empty() {
            let path = sibling(out, "errors.csv");
            IngestReport::write_bad_rows(&panel.report.bad, create(&path)?)?;
        }
        let climate = match &self.climate {
            Some(p) => Some(ingest_climate(p, self.climate_schema.as_ref().expect("resolved"))?),
            None => None,
        };
        Ok((panel, climate))
    }
}

fn describe_climate(h: &mut Header, c: &ClimatePanel) {
    h.push("climate_mean", c.mean)
        .push("climate_sd", c.sd)
        .push("climate_sd_convention", format!("{:?}", c.convention).to_lowercase())
        .push("climate_values", c.z.len())
        .push("climate_missing", c.missing);
}

fn cmd_ingest(args: PanelArgs) -> Result<()> {
    let args = args.resolve()?;
    let out = required(&args.out, "out")?;
    let hash = record_config(&args, "ingest", &out)?;
    let (panel, climate) = args.load(&out)?;
    let mut h = base_header("ingest", &hash);
    panel.report.describe(&mut h);
    let w = create(&out)?;
    let mut w = w;
    panel.write_csv(&mut w, &h)?;
    finish(w, &out)?;
    if let Some(c) = climate {
        let path = sibling(&out, "climate.csv");
        let mut ch = base_header("ingest", &hash);
        describe_climate(&mut ch, &c);
        let mut w = create(&path)?;
        ch.write_to(&mut w).map_err(|e| Error::io(&path, e))?;
        let mut wtr = csv::Writer::from_writer(&mut w);
        wtr.write_record(["country", "year", "z"])?;
        for ((country, year), z) in &c.z {
            wtr.write_record([country.clone(), year.to_string(), z.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io(&path, e))?;
        drop(wtr);
        finish(w, &path)?;
    }
    println!(
        "{} records ({} downgrades, {} upgrades) -> {}",
        panel.records.len(),
        panel.downgrades(),
        panel.upgrades(),
        out.display()
    );
    Ok(())
}

fn cmd_aggregate(args: PanelArgs) -> Result<()> {
    let args = args.resolve()?;
    let out = required(&args.out, "out")?;
    let hash = record_config(&args, "aggregate", &out)?;
    let (panel, climate) = args.load(&out)?;
    let opts = AggregateOptions {
        min_coverage: args.min_coverage.expect("resolved"),
    };
    let series = aggregate(&panel, climate.as_ref(), &opts)?;
    let mut h = base_header("aggregate", &hash);
    panel.report.describe(&mut h);
    h.push("min_coverage", opts.min_coverage);
    if let Some(c) = &climate {
        describe_climate(&mut h, c);
    }
    let mut w = create(&out)?;
    series.write_csv(&mut w, &h)?;
    finish(w, &out)?;
    println!("{} years -> {}", series.rows.len(), out.display());
    Ok(())
}

fn read_marginal(path: &Path) -> Result<DiscreteMarginal> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('{') {
        DiscreteMarginal::from_json(&text)
    } else {
        let h = Header::parse(&text);
        let json = h
            .get("marginal")
            .ok_or_else(|| Error::Parse(format!("{} has no marginal", path.display())))?;
        DiscreteMarginal::from_json(json)
    }
}

fn cmd_transform(mut args: TransformArgs) -> Result<()> {
    args.marginal.get_or_insert_with(|| "empirical".into());
    args.mode.get_or_insert_with(|| "randomized".into());
    args.seed.get_or_insert(1);
    let out = required(&args.out, "out")?;
    let series_path = required(&args.series, "series")?;
    let mode: PitMode = args.mode.as_deref().expect("set").parse()?;
    let seed = args.seed.expect("set");
    let hash = record_config(&args, "transform", &out)?;
    let (_, series) = ActivitySeries::read_csv(open(&series_path)?)?;
    let a = series.counts();
    let marginal = match args.marginal.as_deref().expect("set") {
        "empirical" => DiscreteMarginal::empirical(&a)?,
        file => {
            let mut m = read_marginal(Path::new(file))?;
            m.extend_to_cover(&a, a.len());
            m
        }
    };
    let mut us = mixed_difference(&a, &marginal, seed, mode)?;
    us.t = series.years();
    let h = base_header("transform", &hash).with("seed", seed);
    let mut w = create(&out)?;
    us.write_csv(&mut w, &h)?;
    finish(w, &out)?;
    println!("{} values ({} mode, seed {seed}) -> {}", us.u.len(), mode.name(), out.display());
    Ok(())
}

enum BuiltModel {
    Copula { spec: ModelSpec, free: Vec<bool> },
    Glm(GlmSpec),
}

fn default_copula(family: CopulaFamily) -> Result<Copula> {
    match family {
        CopulaFamily::Independence => Ok(Copula::Independence),
        CopulaFamily::Gaussian => Copula::gaussian(0.3),
        CopulaFamily::StudentT => Copula::student_t(0.3, 8.0),
        CopulaFamily::Gumbel => Copula::gumbel(1.5),
    }
}

impl ModelArgs {
    fn resolve(&mut self) {
        self.model.get_or_insert_with(|| "mag1".into());
        if self.model.as_deref() != Some("glm") {
            self.copula.get_or_insert_with(|| "gaussian".into());
        } else {
            self.glm.get_or_insert_with(|| "markov".into());
        }
    }

    fn build(&self) -> Result<BuiltModel> {
        let model = self.model.as_deref().unwrap_or("mag1");
        if model == "glm" {
            if self.copula.is_some() || self.ar_copula.is_some() || self.climate_link.is_some() {
                return Err(Error::InvalidInput(
                    "copula options do not apply to the Poisson regression".into(),
                ));
            }
            if !self.params.is_empty() || !self.fixed.is_empty() {
                return Err(Error::InvalidInput("--param/--fix do not apply to the Poisson regression".into()));
            }
            let spec = match self.glm.as_deref().unwrap_or("markov") {
                "iid" => GlmSpec::intercept_only(),
                "markov" => GlmSpec::markov(),
                "markov-raw" => GlmSpec {
                    count_lag: Some(CountLag::Raw),
                    ..GlmSpec::intercept_only()
                },
                "climate" => GlmSpec::climate(false),
                "climate2" => GlmSpec::climate(true),
                other => return Err(Error::InvalidInput(format!("unknown --glm '{other}'"))),
            };
            return Ok(BuiltModel::Glm(spec));
        }
        if self.glm.is_some() {
            return Err(Error::InvalidInput("--glm applies only to --model glm".into()));
        }
        let kind: ModelKind = model.parse()?;
        let fam: CopulaFamily = self.copula.as_deref().unwrap_or("gaussian").parse()?;
        let main = default_copula(fam)?;
        let mut spec = match kind {
            ModelKind::Mag1 | ModelKind::Markov if self.ar_copula.is_some() => {
                return Err(Error::InvalidInput("--ar-copula applies only to magmar11".into()))
            }
            ModelKind::Mag1 => ModelSpec::mag1(main),
            ModelKind::Markov => ModelSpec::markov(main),
            ModelKind::Magmar11 => {
                let ar = match self.ar_copula.as_deref() {
                    Some(s) => default_copula(s.parse()?)?,
                    None => main,
                };
                ModelSpec::magmar11(ar, main)
            }
        };
        if let Some(link) = &self.climate_link {
            let link: LinkFn = link.parse()?;
            let target = match self.link_target.as_deref() {
                None if kind == ModelKind::Mag1 => LinkTarget::Mag,
                None => LinkTarget::Ar,
                Some("mag") => LinkTarget::Mag,
                Some("ar") => LinkTarget::Ar,
                Some(other) => return Err(Error::InvalidInput(format!("unknown --link-target '{other}'"))),
            };
            let base = match target {
                LinkTarget::Mag => spec.mag,
                LinkTarget::Ar => spec.ar.unwrap_or(Copula::Independence),
            };
            let v = base.params().first().copied().unwrap_or(0.0);
            let beta0 = match link {
                LinkFn::Tanh => v.atanh(),
                LinkFn::OnePlusExp => (v - 1.0).max(1e-6).ln(),
            };
            spec = spec.with_climate(ClimateLink {
                link,
                beta0,
                beta1: 0.0,
                target,
            })?;
        } else if self.link_target.is_some() {
            return Err(Error::InvalidInput("--link-target needs --climate-link".into()));
        }
        spec.validate()?;
        let names = spec.param_names();
        let mut values = spec.param_values();
        for p in &self.params {
            let (name, value) = p
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("--param '{p}' is not name=value")))?;
            let i = names
                .iter()
                .position(|n| n == name.trim())
                .ok_or_else(|| Error::InvalidInput(format!("model has no parameter '{name}' (has {names:?})")))?;
            values[i] = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("--param '{p}': bad number")))?;
        }
        let spec = spec.with_param_values(&values)?;
        let fixed: Vec<&str> = self.fixed.iter().map(String::as_str).collect();
        let free = mask_fixing(&spec, &fixed)?;
        Ok(BuiltModel::Copula { spec, free })
    }
}

fn cmd_simulate(mut args: SimulateArgs) -> Result<()> {
    args.model.resolve();
    args.n.get_or_insert(500);
    args.burn_in.get_or_insert(crate::process::DEFAULT_BURN_IN);
    args.seed.get_or_insert(1);
    let out = required(&args.out, "out")?;
    let BuiltModel::Copula { spec, .. } = args.model.build()? else {
        return Err(Error::InvalidInput("simulate needs a copula model".into()));
    };
    if spec.needs_climate() {
        args.climate_phi.get_or_insert(0.8);
        args.climate_sigma.get_or_insert(0.6);
    }
    let (n, burn, seed) = (args.n.expect("set"), args.burn_in.expect("set"), args.seed.expect("set"));
    let hash = record_config(&args, "simulate", &out)?;
    let climate = if spec.needs_climate() {
        let s = crate::rng::derive_seed(seed, 1);
        Some(ar1_climate(n + burn, args.climate_phi.expect("set"), args.climate_sigma.expect("set"), s)?)
    } else {
        None
    };
    let path = simulate(&spec, n, burn, seed, climate.as_deref())?;
    let h = base_header("simulate", &hash)
        .with("seed", seed)
        .with("burn_in", burn)
        .with("model", serde_json::to_string(&spec).expect("serializable"));
    let mut w = create(&out)?;
    path.write_csv(&mut w, &h)?;
    finish(w, &out)?;
    println!("{n} steps of {} -> {}", spec.label(), out.display());
    Ok(())
}

/// The `t`, `u` and (when present) `a` columns of a series file.
struct SeriesData {
    t: Vec<i64>,
    u: Vec<f64>,
    a: Option<Vec<i64>>,
    transform_seed: Option<u64>,
}

fn read_series(path: &Path) -> Result<SeriesData> {
    let text = read_text(path)?;
    let (header, u) = crate::transform::read_u_csv(text.as_bytes())?;
    let transform_seed = header.get("transform_seed").and_then(|s| s.parse().ok());
    let t = match read_columns(&text, &["t"]) {
        Ok(c) => crate::transform::parse_col(&c[0], "t")?,
        Err(_) => (1..=u.len() as i64).collect(),
    };
    let a = match read_columns(&text, &["a"]) {
        Ok(c) => Some(crate::transform::parse_col(&c[0], "a")?),
        Err(_) => None,
    };
    Ok(SeriesData { t, u, a, transform_seed })
}

/// Lagged covariate aligned with `t`: `C_lag` of an activity series matched
/// by year, or the `climate` column of a simulated path taken in order.
fn read_climate(path: &Path, t: &[i64]) -> Result<Vec<Option<f64>>> {
    let text = read_text(path)?;
    if let Ok(cols) = read_columns(&text, &["year", "C_lag"]) {
        let years: Vec<i64> = crate::transform::parse_col(&cols[0], "year")?;
        return t
            .iter()
            .map(|y| {
                let i = years
                    .iter()
                    .position(|x| x == y)
                    .ok_or_else(|| Error::InvalidInput(format!("no climate row for {y} in {}", path.display())))?;
                let s = &cols[1][i];
                if s.is_empty() {
                    return Ok(None);
                }
                s.parse()
                    .map(Some)
                    .map_err(|_| Error::Parse(format!("bad C_lag '{s}' for {y} in {}", path.display())))
            })
            .collect();
    }
    let cols = read_columns(&text, &["climate"])
        .map_err(|_| Error::InvalidInput(format!("{} has neither C_lag nor climate columns", path.display())))?;
    let c: Vec<f64> = crate::transform::parse_col(&cols[0], "climate")?;
    if c.len() < t.len() {
        return Err(Error::InvalidInput(format!(
            "{} has {} climate values for {} observations",
            path.display(),
            c.len(),
            t.len()
        )));
    }
    Ok(c[..t.len()].iter().map(|&v| Some(v)).collect())
}

/// Drops the leading observations without a covariate; later gaps are errors.
fn trim_to_climate(data: &SeriesData, climate: &[Option<f64>]) -> Result<(SeriesData, Vec<f64>, usize)> {
    let start = climate.iter().position(Option::is_some).ok_or_else(|| {
        Error::InvalidInput("no observation has a lagged climate value".into())
    })?;
    let c: Vec<f64> = climate[start..]
        .iter()
        .zip(&data.t[start..])
        .map(|(v, t)| v.ok_or_else(|| Error::InvalidInput(format!("lagged climate value missing at t = {t}"))))
        .collect::<Result<_>>()?;
    if start > 0 {
        log::warn!("dropping {start} leading observation(s) without a lagged climate value");
    }
    Ok((
        SeriesData {
            t: data.t[start..].to_vec(),
            u: data.u[start..].to_vec(),
            a: data.a.as_ref().map(|a| a[start..].to_vec()),
            transform_seed: data.transform_seed,
        },
        c,
        start,
    ))
}

/// Series and covariate as used by `fit`: copula models with a climate link
/// run on the span with covariates, Poisson regressions skip rows without one.
fn model_inputs(
    fit: &FittedModel,
    data: &SeriesData,
    climate: Option<&[Option<f64>]>,
) -> Result<(SeriesData, Option<Vec<f64>>, usize)> {
    let whole = || SeriesData {
        t: data.t.clone(),
        u: data.u.clone(),
        a: data.a.clone(),
        transform_seed: data.transform_seed,
    };
    let needs = match fit {
        FittedModel::Copula(s) => s.needs_climate(),
        FittedModel::PoissonGlm(g) => g.needs_climate(),
    };
    match (needs, climate) {
        (false, _) => Ok((whole(), None, 0)),
        (true, None) => Err(Error::InvalidInput("climate-linked model needs --climate".into())),
        (true, Some(c)) => match fit {
            FittedModel::Copula(_) => {
                let (d, c, start) = trim_to_climate(data, c)?;
                Ok((d, Some(c), start))
            }
            FittedModel::PoissonGlm(_) => Ok((whole(), Some(c.iter().map(|v| v.unwrap_or(f64::NAN)).collect()), 0)),
        },
    }
}

fn fit_summary(f: &FitResult) -> String {
    let mut s = format!("{} ({})\n", f.label, f.family);
    let w = f.names.iter().map(|n| n.len()).max().unwrap_or(4).max(9);
    s.push_str(&format!("{:<w$}  {:>12}  {:>10}\n", "parameter", "estimate", "std.err"));
    for (i, n) in f.names.iter().enumerate() {
        let se = match (f.free[i], f.std_errors[i]) {
            (false, _) => "fixed".to_string(),
            (true, Some(v)) => format!("{v:.4}"),
            (true, None) => "-".to_string(),
        };
        s.push_str(&format!("{n:<w$}  {:>12.6}  {se:>10}\n", f.estimates[i]));
    }
    s.push_str(&format!(
        "logL {:.4}  k {}  n {}  AIC {:.4}  BIC {:.4}\n",
        f.loglik, f.k, f.n_obs, f.aic, f.bic
    ));
    for warn in &f.warnings {
        s.push_str(&format!("warning: {warn}\n"));
    }
    s
}

fn cmd_fit(mut args: FitArgs) -> Result<()> {
    args.model.resolve();
    args.adjusted.get_or_insert(false);
    args.seed.get_or_insert(1);
    let defaults = FitConfig::default();
    let config = FitConfig {
        multistarts: *args.multistarts.get_or_insert(defaults.multistarts),
        max_evals: *args.max_evals.get_or_insert(defaults.max_evals),
        psi_draws: *args.psi_draws.get_or_insert(defaults.psi_draws),
        w0: *args.w0.get_or_insert(defaults.w0),
        ..defaults
    };
    config.validate()?;
    let out = required(&args.out, "out")?;
    let u_path = required(&args.u, "u")?;
    let built = args.model.build()?;
    let adjusted = args.adjusted.expect("set");
    let seed = args.seed.expect("set");
    let hash = record_config(&args, "fit", &out)?;
    let data = read_series(&u_path)?;
    let climate = match &args.climate {
        Some(p) => Some(read_climate(p, &data.t)?),
        None => None,
    };
    let mut h = base_header("fit", &hash).with("seed", seed).with("u", u_path.display());
    if let Some(p) = &args.climate {
        h.push("climate", p.display());
    }
    let shape = match &built {
        BuiltModel::Glm(g) => FittedModel::PoissonGlm(g.clone()),
        BuiltModel::Copula { spec, .. } => FittedModel::Copula(spec.clone()),
    };
    if climate.is_some() && !matches!(&shape, FittedModel::Copula(s) if s.needs_climate())
        && !matches!(&shape, FittedModel::PoissonGlm(g) if g.needs_climate())
    {
        log::warn!("climate file ignored by a model without climate terms");
    }
    let (data, climate, dropped) = model_inputs(&shape, &data, climate.as_deref())?;
    if dropped > 0 {
        h.push("dropped_leading", dropped);
    }
    let report = match built {
        BuiltModel::Glm(spec) => {
            if adjusted {
                return Err(Error::InvalidInput("--adjusted applies only to copula models".into()));
            }
            let a = data
                .a
                .as_ref()
                .ok_or_else(|| Error::InvalidInput(format!("{} has no count column 'a'", u_path.display())))?;
            let f = fit_poisson_glm(a, &spec, climate.as_deref(), None)?;
            h.push("glm_regressors", f.names.join("+"));
            FitReport {
                header: h,
                fit: f,
                stage1: None,
                adjusted_ks: None,
            }
        }
        BuiltModel::Copula { spec, free } => {
            if adjusted {
                let two = fit_adjusted_two_step(&data.u, &spec, Some(&free), &config, seed)?;
                h.push("psi_seed", two.psi_seed).push("psi_draws", two.psi_draws);
                FitReport {
                    header: h,
                    fit: two.stage2,
                    stage1: Some(two.stage1),
                    adjusted_ks: Some(two.adjusted_ks),
                }
            } else {
                let f = fit(&data.u, &spec, Some(&free), climate.as_deref(), &config)?;
                FitReport {
                    header: h,
                    fit: f,
                    stage1: None,
                    adjusted_ks: None,
                }
            }
        }
    };
    let mut report = report;
    report.fit.transform_seed = data.transform_seed;
    if let Some(s1) = report.stage1.as_mut() {
        s1.transform_seed = data.transform_seed;
    }
    let json = serde_json::to_string_pretty(&report).expect("serializable");
    std::fs::write(&out, json + "\n").map_err(|e| Error::io(&out, e))?;
    print!("{}", fit_summary(&report.fit));
    Ok(())
}

fn rolling_for(
    fit: &FitResult,
    data: &SeriesData,
    climate: Option<&[Option<f64>]>,
    rolling: &RollingConfig,
) -> Result<(RollingScores, Vec<i64>)> {
    let (data, climate, _) = model_inputs(&fit.model, data, climate)?;
    let scores = match &fit.model {
        FittedModel::Copula(spec) => {
            rolling_log_score(&data.u, spec, Some(&fit.free), climate.as_deref(), rolling, &FitConfig::default())?
        }
        FittedModel::PoissonGlm(spec) => {
            let a = data
                .a
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("count column 'a' needed for Poisson scores".into()))?;
            rolling_log_score_glm(a, spec, climate.as_deref(), rolling)?
        }
    };
    Ok((scores, data.t))
}

fn cmd_compare(mut args: CompareArgs) -> Result<()> {
    args.refit_every.get_or_insert(1);
    args.skip_oos.get_or_insert(false);
    let out = required(&args.out, "out")?;
    let u_path = required(&args.u, "u")?;
    if args.fits.is_empty() {
        return Err(Error::InvalidInput("compare needs at least one --fit report".into()));
    }
    let hash = record_config(&args, "compare", &out)?;
    let data = read_series(&u_path)?;
    let climate = match &args.climate {
        Some(p) => Some(read_climate(p, &data.t)?),
        None => None,
    };
    let rolling = RollingConfig {
        min_window: args.oos,
        refit_every: args.refit_every.expect("set"),
        fixed_parameters: false,
    };
    let fits: Vec<FitResult> = args
        .fits
        .iter()
        .map(|p| FitReport::read(p).map(|r| r.fit))
        .collect::<Result<_>>()?;
    let mut table = ComparisonTable::default();
    for f in &fits {
        let oos = if args.skip_oos.expect("set") {
            None
        } else {
            Some(rolling_for(f, &data, climate.as_deref(), &rolling)?.0)
        };
        table.rows.push(ComparisonRow::from_fit(f, oos.as_ref()));
    }
    for r in &fits {
        for f in &fits {
            if nested_df(r, f).is_some() {
                table.add_lr(r, f)?;
            }
        }
    }
    let h = base_header("compare", &hash).with("u", u_path.display());
    let mut w = create(&out)?;
    h.write_to(&mut w).map_err(|e| Error::io(&out, e))?;
    w.write_all(table.to_csv()?.as_bytes()).map_err(|e| Error::io(&out, e))?;
    finish(w, &out)?;
    let text_path = sibling(&out, "txt");
    let mut w = create(&text_path)?;
    h.write_to(&mut w).map_err(|e| Error::io(&text_path, e))?;
    let text = table.to_text();
    w.write_all(text.as_bytes()).map_err(|e| Error::io(&text_path, e))?;
    finish(w, &text_path)?;
    print!("{text}");
    Ok(())
}

fn cmd_forecast(mut args: ForecastArgs) -> Result<()> {
    args.refit_every.get_or_insert(1);
    args.fixed.get_or_insert(false);
    let out = required(&args.out, "out")?;
    let fit_path = required(&args.fit, "fit")?;
    let u_path = required(&args.u, "u")?;
    let hash = record_config(&args, "forecast", &out)?;
    let report = FitReport::read(&fit_path)?;
    let data = read_series(&u_path)?;
    let climate = match &args.climate {
        Some(p) => Some(read_climate(p, &data.t)?),
        None => None,
    };
    let rolling = RollingConfig {
        min_window: args.min_window,
        refit_every: args.refit_every.expect("set"),
        fixed_parameters: args.fixed.expect("set"),
    };
    let (scores, t) = rolling_for(&report.fit, &data, climate.as_deref(), &rolling)?;
    let h = base_header("forecast", &hash)
        .with("model", &report.fit.label)
        .with("units", format!("{:?}", scores.units).to_lowercase())
        .with("average", scores.average.map_or_else(|| "none".into(), |v| v.to_string()))
        .with("retained", scores.retained)
        .with("unbounded", scores.unbounded.len())
        .with("skipped", scores.skipped.len());
    let mut w = create(&out)?;
    h.write_to(&mut w).map_err(|e| Error::io(&out, e))?;
    let mut wtr = csv::Writer::from_writer(&mut w);
    wtr.write_record(["t", "score", "status"])?;
    for (i, s) in scores.targets.iter().zip(&scores.scores) {
        let status = match s {
            None => "skipped",
            Some(_) if scores.unbounded.contains(i) => "unbounded",
            Some(_) => "ok",
        };
        wtr.write_record([
            t[*i].to_string(),
            s.map_or_else(String::new, |v| v.to_string()),
            status.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io(&out, e))?;
    drop(wtr);
    finish(w, &out)?;
    println!(
        "{}: average log-score {} over {} step(s), {} unbounded, {} skipped",
        report.fit.label,
        scores.average.map_or_else(|| "n/a".into(), |v| format!("{v:.4}")),
        scores.retained,
        scores.unbounded.len(),
        scores.skipped.len()
    );
    Ok(())
}

fn cmd_risk(mut args: RiskArgs) -> Result<()> {
    args.h.get_or_insert(1);
    args.alpha.get_or_insert(0.05);
    args.paths.get_or_insert(100_000);
    args.seed.get_or_insert(1);
    let out = required(&args.out, "out")?;
    let fit_path = required(&args.fit, "fit")?;
    let hash = record_config(&args, "risk", &out)?;
    let report = FitReport::read(&fit_path)?;
    let spec = report
        .fit
        .copula_spec()
        .ok_or_else(|| Error::InvalidInput("risk needs a copula model fit".into()))?;
    let state = report
        .fit
        .final_state
        .ok_or_else(|| Error::InvalidInput("fit report has no final state".into()))?;
    let marginal = match &args.marginal_inverse {
        Some(p) => Some(read_marginal(p)?),
        None => None,
    };
    let inverse = |u: f64| match &marginal {
        Some(m) => m.quantile(u) as f64,
        None => u,
    };
    let climate_next = (!args.climate_next.is_empty()).then_some(args.climate_next.as_slice());
    let (h_steps, alpha, paths, seed) = (
        args.h.expect("set"),
        args.alpha.expect("set"),
        args.paths.expect("set"),
        args.seed.expect("set"),
    );
    let r = plug_in_risk(spec, state, climate_next, &inverse, h_steps, alpha, paths, seed)?;
    let h = base_header("risk", &hash)
        .with("seed", seed)
        .with("model", &report.fit.label)
        .with("scale", if marginal.is_some() { "counts" } else { "uniform" });
    let mut w = create(&out)?;
    h.write_to(&mut w).map_err(|e| Error::io(&out, e))?;
    let mut wtr = csv::Writer::from_writer(&mut w);
    wtr.write_record(["key", "value"])?;
    for (k, v) in [
        ("horizon", r.horizon.to_string()),
        ("alpha", r.alpha.to_string()),
        ("var", r.var.to_string()),
        ("es", r.es.to_string()),
        ("var_se", r.var_se.to_string()),
        ("paths", r.paths.to_string()),
        ("tail_count", r.tail_count.to_string()),
        ("seed", r.seed.to_string()),
    ] {
        wtr.write_record([k, v.as_str()])?;
    }
    wtr.flush().map_err(|e| Error::io(&out, e))?;
    drop(wtr);
    finish(w, &out)?;
    println!(
        "h={} alpha={}: VaR {:.6} (se {:.6}), ES {:.6}, {} paths",
        r.horizon, r.alpha, r.var, r.var_se, r.es, r.paths
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let file: toml::Table = "[risk]\nalpha = 0.01\npaths = 20000\nclimate_next = [0.5]\n".parse().unwrap();
        let flags = RiskArgs {
            alpha: Some(0.1),
            ..Default::default()
        };
        let m = merge(&flags, Some(&file), "risk").unwrap();
        assert_eq!(m.alpha, Some(0.1));
        assert_eq!(m.paths, Some(20000));
        assert_eq!(m.climate_next, vec![0.5]);
    }

    #[test]
    fn flattened_model_args_merge() {
        let file: toml::Table = "[fit]\nmodel = \"magmar11\"\ncopula = \"gumbel\"\nparams = [\"mag.alpha=2\"]\n"
            .parse()
            .unwrap();
        let m = merge(&FitArgs::default(), Some(&file), "fit").unwrap();
        assert_eq!(m.model.model.as_deref(), Some("magmar11"));
        let BuiltModel::Copula { spec, free } = m.model.build().unwrap() else {
            panic!()
        };
        assert_eq!(spec.mag, Copula::Gumbel { alpha: 2.0 });
        assert_eq!(free, vec![true, true]);
    }

    #[test]
    fn glm_with_copula_rejected() {
        let m = ModelArgs {
            model: Some("glm".into()),
            copula: Some("gaussian".into()),
            ..Default::default()
        };
        assert!(m.build().is_err());
    }
}
