//! Benchmark models: first-order Markov copulas on the uniform series and
//! Poisson log-linear regressions on the raw counts.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::copulas::Copula;
use crate::error::{Error, Result};
use crate::inference::{loglik, FitResult, FittedModel};
use crate::process::ModelSpec;
use crate::selection_risk::information_criteria;
use crate::transform::poisson_ln_pmf;

/// `sum_{t>=2} ln c(U_t, U_{t-1})`.
pub fn loglik_markov_copula(u: &[f64], ar: &Copula) -> Result<f64> {
    Ok(loglik(&ModelSpec::markov(*ar), u, None, 0.5)?.loglik)
}

/// Form of the lagged-count regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountLag {
    /// `ln(1 + A_{t-1})`
    Log1p,
    /// `A_{t-1}`
    Raw,
}

/// Poisson regression with log link. The intercept is always present.
///
/// Covariate series passed alongside are the lagged climate values aligned
/// with the counts (`c[t] = C_{t-1}`), so `C_{t-2}` is `c[t-1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmSpec {
    #[serde(default)]
    pub count_lag: Option<CountLag>,
    #[serde(default)]
    pub climate_lag1: bool,
    #[serde(default)]
    pub climate_lag2: bool,
    /// Coefficients in [`GlmSpec::regressor_names`] order; empty before fitting.
    #[serde(default)]
    pub coefficients: Vec<f64>,
}

impl GlmSpec {
    pub fn intercept_only() -> Self {
        GlmSpec {
            count_lag: None,
            climate_lag1: false,
            climate_lag2: false,
            coefficients: Vec::new(),
        }
    }

    /// Intercept plus `ln(1 + A_{t-1})`.
    pub fn markov() -> Self {
        GlmSpec {
            count_lag: Some(CountLag::Log1p),
            ..Self::intercept_only()
        }
    }

    /// Intercept, `ln(1 + A_{t-1})` and `C_{t-1}` (plus `C_{t-2}` if `two_lags`).
    pub fn climate(two_lags: bool) -> Self {
        GlmSpec {
            count_lag: Some(CountLag::Log1p),
            climate_lag1: true,
            climate_lag2: two_lags,
            coefficients: Vec::new(),
        }
    }

    pub fn needs_climate(&self) -> bool {
        self.climate_lag1 || self.climate_lag2
    }

    pub fn regressor_names(&self) -> Vec<String> {
        let mut v = vec!["intercept".to_string()];
        match self.count_lag {
            Some(CountLag::Log1p) => v.push("log1p_count_lag1".into()),
            Some(CountLag::Raw) => v.push("count_lag1".into()),
            None => {}
        }
        if self.climate_lag1 {
            v.push("climate_lag1".into());
        }
        if self.climate_lag2 {
            v.push("climate_lag2".into());
        }
        v
    }

    pub fn label(&self) -> String {
        match (self.count_lag.is_some(), self.needs_climate()) {
            (false, false) => "glm[iid]".into(),
            (true, false) => "glm[markov]".into(),
            (_, true) => "glm[climate]".into(),
        }
    }

    /// Regressors for observation `t`, or `None` when a lag is unavailable.
    pub fn design_row(&self, a: &[i64], climate: Option<&[f64]>, t: usize) -> Option<Vec<f64>> {
        let mut row = vec![1.0];
        if let Some(kind) = self.count_lag {
            let prev = *a.get(t.checked_sub(1)?)? as f64;
            row.push(match kind {
                CountLag::Log1p => prev.ln_1p(),
                CountLag::Raw => prev,
            });
        }
        if self.climate_lag1 {
            let c = *climate?.get(t)?;
            row.push(c);
        }
        if self.climate_lag2 {
            let c = *climate?.get(t.checked_sub(1)?)?;
            row.push(c);
        }
        row.iter().all(|x| x.is_finite()).then_some(row)
    }

    pub fn mean_at(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum::<f64>().exp()
    }

    /// Log predictive mass of `a[t]` given the fitted coefficients.
    pub fn predictive_log_pmf(&self, a: &[i64], climate: Option<&[f64]>, t: usize) -> Result<f64> {
        let row = self
            .design_row(a, climate, t)
            .ok_or_else(|| Error::InvalidInput(format!("regressors unavailable at position {}", t + 1)))?;
        Ok(poisson_predictive_log_pmf(self.mean_at(&row), a[t]))
    }
}

/// `ln P(A = a)` for `A ~ Poisson(lambda)`.
pub fn poisson_predictive_log_pmf(lambda: f64, a: i64) -> f64 {
    poisson_ln_pmf(a, lambda)
}

/// Poisson log-linear fit by Newton-Raphson (IRLS) with step halving.
///
/// Uses every `t < upto` whose regressors are available; `upto` defaults to
/// the series length.
pub fn fit_poisson_glm(a: &[i64], spec: &GlmSpec, climate: Option<&[f64]>, upto: Option<usize>) -> Result<FitResult> {
    if let Some(i) = a.iter().position(|&x| x < 0) {
        return Err(Error::InvalidInput(format!("negative count {} at position {}", a[i], i + 1)));
    }
    if spec.needs_climate() && climate.is_none() {
        return Err(Error::InvalidInput("climate regressors requested without a climate series".into()));
    }
    let end = upto.unwrap_or(a.len()).min(a.len());
    let names = spec.regressor_names();
    let p = names.len();
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for t in 0..end {
        if let Some(r) = spec.design_row(a, climate, t) {
            rows.push(r);
            y.push(a[t] as f64);
        }
    }
    let n = rows.len();
    if n < p + 5 {
        return Err(Error::InvalidInput(format!("{n} usable observations for {p} coefficients")));
    }
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let yv = DVector::from_vec(y.clone());
    if x.clone().svd(false, false).rank(1e-10 * (n as f64).sqrt()) < p {
        return Err(Error::InvalidInput("design matrix is rank deficient".into()));
    }

    let mean_y = y.iter().sum::<f64>() / n as f64;
    let mut beta = DVector::zeros(p);
    beta[0] = (mean_y.max(1e-3)).ln();
    let loglik_at = |b: &DVector<f64>| -> f64 {
        let eta = &x * b;
        eta.iter()
            .zip(&y)
            .map(|(e, &yi)| poisson_ln_pmf(yi as i64, e.exp()))
            .sum()
    };
    let mut ll = loglik_at(&beta);
    let mut converged = false;
    let mut info = DMatrix::zeros(p, p);
    for _ in 0..100 {
        let mu = (&x * &beta).map(f64::exp);
        let score = x.transpose() * (&yv - &mu);
        let mut weighted = x.clone();
        for (mut row, m) in weighted.row_iter_mut().zip(mu.iter()) {
            row *= *m;
        }
        info = x.transpose() * weighted;
        if score.amax() < 1e-8 {
            converged = true;
            break;
        }
        let chol = info
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidInput("Fisher information is singular".into()))?;
        let step = chol.solve(&score);
        let mut t = 1.0;
        loop {
            let cand = &beta + &step * t;
            let ll_c = loglik_at(&cand);
            if ll_c.is_finite() && ll_c >= ll - 1e-12 * ll.abs() {
                beta = cand;
                ll = ll_c;
                break;
            }
            t *= 0.5;
            if t < 1e-10 {
                return Err(Error::Convergence("Poisson regression line search failed".into()));
            }
        }
    }
    if !converged {
        return Err(Error::Convergence("Poisson regression did not converge in 100 iterations".into()));
    }
    let cov = info
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("Fisher information is singular".into()))?
        .inverse();
    let std_errors = (0..p).map(|j| Some(cov[(j, j)].sqrt())).collect();
    let mut fitted = spec.clone();
    fitted.coefficients = beta.iter().copied().collect();
    let contributions: Vec<f64> = rows
        .iter()
        .zip(&y)
        .map(|(r, &yi)| poisson_ln_pmf(yi as i64, fitted.mean_at(r)))
        .collect();
    let loglik: f64 = contributions.iter().sum();
    let (aic, bic) = information_criteria(loglik, p, n);
    Ok(FitResult {
        model: FittedModel::PoissonGlm(fitted.clone()),
        label: fitted.label(),
        family: "poisson".into(),
        names,
        estimates: fitted.coefficients.clone(),
        std_errors,
        free: vec![true; p],
        loglik,
        contributions,
        n_obs: n,
        n_eff: n,
        k: p,
        aic,
        bic,
        converged,
        boundary: Vec::new(),
        multistarts: Vec::new(),
        transform_seed: None,
        warnings: Vec::new(),
        final_state: None,
    })
}
