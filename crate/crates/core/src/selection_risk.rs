//! Information criteria, likelihood-ratio tests, rolling one-step-ahead
//! log-scores, model comparison tables and Monte-Carlo VaR / ES.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::benchmarks::{fit_poisson_glm, GlmSpec};
use crate::error::{Error, Result};
use crate::inference::{fit_prepared, FinalState, FitConfig, FitResult, FittedModel, Prepared};
use crate::process::{ModelKind, ModelSpec};
use crate::rng::UniformStream;
use crate::specfun::chisq_sf;

/// Scores beyond this magnitude are treated as numerically unbounded.
pub const UNBOUNDED_SCORE: f64 = 700.0;

/// `(AIC, BIC) = (2k - 2 logL, k ln(n_eff) - 2 logL)`.
pub fn information_criteria(loglik: f64, k: usize, n_eff: usize) -> (f64, f64) {
    let k = k as f64;
    (2.0 * k - 2.0 * loglik, k * (n_eff.max(1) as f64).ln() - 2.0 * loglik)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// The raw statistic was negative and has been set to zero.
    pub clipped: bool,
}

/// `Lambda = 2 (logL_u - logL_r)` referred to chi-square with `df` degrees.
pub fn lr_test(loglik_unrestricted: f64, loglik_restricted: f64, df: usize) -> Result<LrTest> {
    if df < 1 {
        return Err(Error::InvalidInput("likelihood-ratio test needs df >= 1".into()));
    }
    let raw = 2.0 * (loglik_unrestricted - loglik_restricted);
    if !raw.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite likelihood-ratio statistic {raw}")));
    }
    let clipped = raw < 0.0;
    if clipped {
        log::warn!("negative likelihood-ratio statistic {raw} clipped to 0");
    }
    let statistic = raw.max(0.0);
    Ok(LrTest {
        statistic,
        df,
        p_value: chisq_sf(statistic, df as f64)?,
        clipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingConfig {
    /// Training size at the first origin; defaults to ceil(0.6 n).
    pub min_window: Option<usize>,
    pub refit_every: usize,
    /// Keep the supplied parameters instead of re-estimating.
    pub fixed_parameters: bool,
}

impl Default for RollingConfig {
    fn default() -> Self {
        Self {
            min_window: None,
            refit_every: 1,
            fixed_parameters: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreUnits {
    /// Log density of the uniform series.
    Density,
    /// Log mass of the counts.
    Mass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingScores {
    pub units: ScoreUnits,
    /// 0-based index of each scored observation.
    pub targets: Vec<usize>,
    /// `None` when the step was skipped after a failed fit.
    pub scores: Vec<Option<f64>>,
    /// Targets whose score was non-finite or beyond [`UNBOUNDED_SCORE`].
    pub unbounded: Vec<usize>,
    pub skipped: Vec<usize>,
    /// Mean of the retained scores.
    pub average: Option<f64>,
    pub retained: usize,
}

impl RollingScores {
    fn finish(units: ScoreUnits, targets: Vec<usize>, scores: Vec<Option<f64>>, skipped: Vec<usize>) -> Self {
        let mut unbounded = Vec::new();
        let mut kept = Vec::new();
        for (t, s) in targets.iter().zip(&scores) {
            if let Some(v) = s {
                if v.is_finite() && v.abs() <= UNBOUNDED_SCORE {
                    kept.push(*v);
                } else {
                    unbounded.push(*t);
                }
            }
        }
        let average = (!kept.is_empty()).then(|| kept.iter().sum::<f64>() / kept.len() as f64);
        RollingScores {
            units,
            targets,
            scores,
            unbounded,
            skipped,
            average,
            retained: kept.len(),
        }
    }

    /// Flags for a comparison row.
    pub fn flags(&self) -> Vec<String> {
        let mut f = Vec::new();
        if !self.unbounded.is_empty() {
            f.push(format!("unbounded={}", self.unbounded.len()));
        }
        if !self.skipped.is_empty() {
            f.push(format!("skipped={}", self.skipped.len()));
        }
        f
    }
}

fn resolve_window(n: usize, cfg: &RollingConfig) -> Result<usize> {
    let m = cfg.min_window.unwrap_or_else(|| (0.6 * n as f64).ceil() as usize);
    if n <= m + 1 || m < 2 {
        return Err(Error::InvalidInput(format!(
            "series of length {n} is too short for a rolling window of {m}"
        )));
    }
    if cfg.refit_every == 0 {
        return Err(Error::InvalidInput("refit_every must be at least 1".into()));
    }
    Ok(m)
}

/// Expanding-window one-step-ahead log predictive densities of a copula
/// model. At origin `t` the model is fitted to `u[..t]` and scored on
/// `u[t]` conditional on the innovations filtered from the start.
pub fn rolling_log_score(
    u: &[f64],
    spec: &ModelSpec,
    free: Option<&[bool]>,
    climate: Option<&[f64]>,
    rolling: &RollingConfig,
    config: &FitConfig,
) -> Result<RollingScores> {
    spec.validate()?;
    let n = u.len();
    let m = resolve_window(n, rolling)?;
    Prepared::new(u, climate, config.w0, spec)?;
    let mut current: Option<ModelSpec> = rolling.fixed_parameters.then(|| spec.clone());
    let mut targets = Vec::new();
    let mut scores = Vec::new();
    let mut skipped = Vec::new();
    for t in m..n {
        targets.push(t);
        if !rolling.fixed_parameters && (t - m) % rolling.refit_every == 0 {
            let refit = Prepared::new(&u[..t], climate.map(|c| &c[..t]), config.w0, spec)
                .and_then(|d| fit_prepared(&d, spec, free, config));
            match refit {
                Ok(f) => current = f.copula_spec().cloned(),
                Err(e) => {
                    log::warn!("fit at origin {t} failed: {e}");
                    current = None;
                }
            }
        }
        let Some(model) = current.as_ref() else {
            skipped.push(t);
            scores.push(None);
            continue;
        };
        let window = Prepared::new(&u[..=t], climate.map(|c| &c[..=t]), config.w0, model)?;
        let mut lik = crate::inference::Likelihood {
            loglik: 0.0,
            contributions: Vec::with_capacity(t + 1),
            w: Vec::with_capacity(t + 1),
        };
        match window.eval(model, Some(&mut lik)) {
            Ok(_) => scores.push(Some(lik.contributions[t])),
            Err(Error::NonFinite { index }) if index == t + 1 => scores.push(Some(f64::NEG_INFINITY)),
            Err(e) => {
                log::warn!("scoring at origin {t} failed: {e}");
                skipped.push(t);
                scores.push(None);
            }
        }
    }
    Ok(RollingScores::finish(ScoreUnits::Density, targets, scores, skipped))
}

/// Expanding-window log predictive masses of a Poisson regression.
pub fn rolling_log_score_glm(
    a: &[i64],
    spec: &GlmSpec,
    climate: Option<&[f64]>,
    rolling: &RollingConfig,
) -> Result<RollingScores> {
    let n = a.len();
    let m = resolve_window(n, rolling)?;
    let mut current: Option<GlmSpec> = rolling.fixed_parameters.then(|| spec.clone());
    let mut targets = Vec::new();
    let mut scores = Vec::new();
    let mut skipped = Vec::new();
    for t in m..n {
        targets.push(t);
        if !rolling.fixed_parameters && (t - m) % rolling.refit_every == 0 {
            current = match fit_poisson_glm(a, spec, climate, Some(t)) {
                Ok(FitResult {
                    model: FittedModel::PoissonGlm(g),
                    ..
                }) => Some(g),
                Ok(_) => None,
                Err(e) => {
                    log::warn!("GLM fit at origin {t} failed: {e}");
                    None
                }
            };
        }
        match current.as_ref().map(|g| g.predictive_log_pmf(a, climate, t)) {
            Some(Ok(s)) => scores.push(Some(s)),
            _ => {
                skipped.push(t);
                scores.push(None);
            }
        }
    }
    Ok(RollingScores::finish(ScoreUnits::Mass, targets, scores, skipped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub horizon: usize,
    pub alpha: f64,
    pub var: f64,
    pub es: f64,
    pub paths: usize,
    pub seed: u64,
    /// Batch-means standard error of the VaR estimate (20 batches).
    pub var_se: f64,
    pub tail_count: usize,
}

const RISK_BATCHES: usize = 20;

/// Lower-tail VaR and ES of `X_{t+h} = F_X^{-1}(U_{t+h})` from `paths`
/// simulated continuations of the state `(U_t, W_t)`.
///
/// VaR is the `ceil(alpha M)`-th order statistic and ES the mean of the
/// values at or below it. For climate-linked models `future_climate[j]` is
/// the lagged covariate of step `j + 1`.
#[allow(clippy::too_many_arguments)]
pub fn plug_in_risk(
    spec: &ModelSpec,
    state: FinalState,
    future_climate: Option<&[f64]>,
    inverse_marginal: &dyn Fn(f64) -> f64,
    horizon: usize,
    alpha: f64,
    paths: usize,
    seed: u64,
) -> Result<RiskReport> {
    spec.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("risk level must lie in (0, 1), got {alpha}")));
    }
    if horizon < 1 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    if paths < 10_000 {
        return Err(Error::InvalidInput(format!("need at least 10000 paths, got {paths}")));
    }
    if alpha * (paths as f64) < 10.0 {
        return Err(Error::InvalidInput(format!(
            "alpha * paths = {} leaves fewer than 10 tail observations",
            alpha * paths as f64
        )));
    }
    let steps: Vec<_> = (0..horizon)
        .map(|j| {
            let c = match (spec.needs_climate(), future_climate) {
                (false, _) => None,
                (true, Some(c)) if c.len() > j => Some(c[j]),
                (true, _) => {
                    return Err(Error::InvalidInput(format!(
                        "climate-linked risk needs {horizon} future covariate values"
                    )))
                }
            };
            spec.copulas_at(c)
        })
        .collect::<Result<_>>()?;

    let mut rng = UniformStream::new(seed);
    let mut x = Vec::with_capacity(paths);
    for _ in 0..paths {
        let (mut u_prev, mut w_prev) = (state.u_last, state.w_last);
        for (mag, ar) in &steps {
            let w = rng.next_open01();
            let s = mag.h_inv_raw(w, w_prev)?;
            let u = ar.h_inv_raw(s, u_prev)?;
            u_prev = u;
            w_prev = w;
        }
        let v = inverse_marginal(u_prev);
        if !v.is_finite() {
            return Err(Error::NonFinite { index: x.len() + 1 });
        }
        x.push(v);
    }

    let (var, es, tail) = var_es(&x, alpha);
    let batch = paths / RISK_BATCHES;
    let batch_vars: Vec<f64> = (0..RISK_BATCHES)
        .map(|b| var_es(&x[b * batch..(b + 1) * batch], alpha).0)
        .collect();
    let var_se = crate::stats::sample_sd(&batch_vars) / (RISK_BATCHES as f64).sqrt();
    Ok(RiskReport {
        horizon,
        alpha,
        var,
        es,
        paths,
        seed,
        var_se,
        tail_count: tail,
    })
}

fn var_es(x: &[f64], alpha: f64) -> (f64, f64, usize) {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = ((alpha * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    let var = sorted[k - 1];
    let tail: Vec<f64> = sorted.iter().copied().take_while(|&v| v <= var).collect();
    let es = tail.iter().sum::<f64>() / tail.len() as f64;
    (var, es, tail.len())
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub family: String,
    pub loglik: f64,
    pub k: usize,
    pub aic: f64,
    pub bic: f64,
    pub avg_oos: Option<f64>,
    pub units: ScoreUnits,
    pub flags: Vec<String>,
}

impl ComparisonRow {
    pub fn from_fit(fit: &FitResult, oos: Option<&RollingScores>) -> Self {
        let units = match fit.model {
            FittedModel::Copula(_) => ScoreUnits::Density,
            FittedModel::PoissonGlm(_) => ScoreUnits::Mass,
        };
        let mut flags = oos.map(RollingScores::flags).unwrap_or_default();
        if !fit.boundary.is_empty() {
            flags.push(format!("boundary={}", fit.boundary.join("+")));
        }
        if !fit.converged {
            flags.push("not_converged".into());
        }
        ComparisonRow {
            model: fit.label.clone(),
            family: fit.family.clone(),
            loglik: fit.loglik,
            k: fit.k,
            aic: fit.aic,
            bic: fit.bic,
            avg_oos: oos.and_then(|o| o.average),
            units,
            flags,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrRow {
    pub restricted: String,
    pub unrestricted: String,
    pub test: LrTest,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub lr_tests: Vec<LrRow>,
}

pub const COMPARISON_COLUMNS: [&str; 8] = ["model", "family", "logL", "k", "AIC", "BIC", "avg_oos", "flags"];

const UNITS_NOTE: &str =
    "avg_oos mixes log densities of the uniform series (units=density) and log masses of counts (units=pmf); the two are not on a common scale and are not ranked against each other";

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.4}"))
}

impl ComparisonTable {
    fn mixed_units(&self) -> bool {
        let has = |u| self.rows.iter().any(|r| r.units == u && r.avg_oos.is_some());
        has(ScoreUnits::Density) && has(ScoreUnits::Mass)
    }

    fn row_flags(r: &ComparisonRow) -> String {
        let mut f = vec![match r.units {
            ScoreUnits::Density => "units=density".to_string(),
            ScoreUnits::Mass => "units=pmf".to_string(),
        }];
        f.extend(r.flags.iter().cloned());
        f.join(";")
    }

    /// Adds a likelihood-ratio row for a nested pair.
    pub fn add_lr(&mut self, restricted: &FitResult, unrestricted: &FitResult) -> Result<()> {
        let df = unrestricted.k.checked_sub(restricted.k).filter(|&d| d > 0).ok_or_else(|| {
            Error::InvalidInput(format!(
                "{} does not have more free parameters than {}",
                unrestricted.label, restricted.label
            ))
        })?;
        let test = lr_test(unrestricted.loglik, restricted.loglik, df)?;
        self.lr_tests.push(LrRow {
            restricted: restricted.label.clone(),
            unrestricted: unrestricted.label.clone(),
            test,
        });
        Ok(())
    }

    /// CSV with the fixed column set. Likelihood-ratio tests follow as rows
    /// whose model is `LR(restricted|unrestricted)`, logL holds the
    /// statistic, k the degrees of freedom and flags the p-value.
    pub fn to_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(COMPARISON_COLUMNS)?;
        for r in &self.rows {
            wtr.write_record([
                r.model.clone(),
                r.family.clone(),
                r.loglik.to_string(),
                r.k.to_string(),
                r.aic.to_string(),
                r.bic.to_string(),
                r.avg_oos.map_or_else(String::new, |v| v.to_string()),
                Self::row_flags(r),
            ])?;
        }
        for lr in &self.lr_tests {
            wtr.write_record([
                format!("LR({}|{})", lr.restricted, lr.unrestricted),
                String::new(),
                lr.test.statistic.to_string(),
                lr.test.df.to_string(),
                String::new(),
                String::new(),
                String::new(),
                format!("p={}{}", lr.test.p_value, if lr.test.clipped { ";clipped" } else { "" }),
            ])?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::io("<memory>", e.into_error()))?;
        let mut s = String::from_utf8(bytes).expect("utf-8 csv");
        if self.mixed_units() {
            s.insert_str(0, &format!("# note: {UNITS_NOTE}\n"));
        }
        Ok(s)
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut cells: Vec<Vec<String>> = vec![COMPARISON_COLUMNS.iter().map(|s| s.to_string()).collect()];
        for r in &self.rows {
            cells.push(vec![
                r.model.clone(),
                r.family.clone(),
                format!("{:.2}", r.loglik),
                r.k.to_string(),
                format!("{:.2}", r.aic),
                format!("{:.2}", r.bic),
                fmt_opt(r.avg_oos),
                Self::row_flags(r),
            ]);
        }
        let widths: Vec<usize> = (0..COMPARISON_COLUMNS.len())
            .map(|j| cells.iter().map(|row| row[j].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(j, (c, w))| if j < 2 || j == 7 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        if !self.lr_tests.is_empty() {
            let _ = writeln!(out);
            for lr in &self.lr_tests {
                let _ = writeln!(
                    out,
                    "LR {} vs {}: statistic {:.4}, df {}, p-value {:.4}{}",
                    lr.restricted,
                    lr.unrestricted,
                    lr.test.statistic,
                    lr.test.df,
                    lr.test.p_value,
                    if lr.test.clipped { " (negative statistic clipped)" } else { "" }
                );
            }
        }
        if self.mixed_units() {
            let _ = writeln!(out, "\nNote: {UNITS_NOTE}.");
        }
        out
    }
}

/// Degrees of freedom when `restricted` is a special case of `full`.
pub fn nested_df(restricted: &FitResult, full: &FitResult) -> Option<usize> {
    let (r, f) = (restricted.copula_spec()?, full.copula_spec()?);
    if restricted.n_obs != full.n_obs || full.k <= restricted.k {
        return None;
    }
    let df = full.k - restricted.k;
    let fam = |c: &crate::copulas::Copula| c.family();
    let strip = |s: &ModelSpec| ModelSpec {
        climate: None,
        ..s.clone()
    };
    let rho_family = |s: &ModelSpec| {
        s.ar.map(|a| {
            matches!(
                a.family(),
                crate::copulas::CopulaFamily::Gaussian | crate::copulas::CopulaFamily::StudentT
            )
        })
        .unwrap_or(false)
    };
    let nested = match (r.kind, f.kind) {
        // Same structure, climate link added.
        _ if r.climate.is_none()
            && f.climate.is_some()
            && r.kind == f.kind
            && fam(&r.mag) == fam(&f.mag)
            && r.ar.map(|a| a.family()) == f.ar.map(|a| a.family()) =>
        {
            true
        }
        // MAG(1) inside MAGMAR with a correlation AR slot.
        (ModelKind::Mag1, ModelKind::Magmar11) => {
            fam(&r.mag) == fam(&f.mag) && rho_family(f) && r.climate == strip(f).climate && r.climate.is_none()
        }
        // Markov chain inside MAGMAR with the same AR family.
        (ModelKind::Markov, ModelKind::Magmar11) => {
            r.ar.map(|a| a.family()) == f.ar.map(|a| a.family())
                && matches!(
                    f.mag.family(),
                    crate::copulas::CopulaFamily::Gaussian | crate::copulas::CopulaFamily::StudentT
                )
                && f.climate.is_none()
        }
        _ => false,
    };
    nested.then_some(df)
}
