//! Exact conditional likelihoods, innovation filtering and maximum-likelihood
//! fitting.
//!
//! For MAGMAR(1,1) the filter runs
//!
//! ```text
//! S_t = h_ar(U_t, U_{t-1})
//! l_t = ln c_mag(S_t, W_{t-1}) + ln c_ar(U_t, U_{t-1})
//! W_t = h_mag(S_t, W_{t-1})
//! ```
//!
//! from a fixed `W_0`. The first observation has no predecessor, so it
//! enters as `S_1 = U_1` with `l_1 = ln c_mag(U_1, W_0)`. MAG(1) is the case of
//! an independence AR slot and the Markov chain the case of an independence
//! MAG slot, which makes the nesting identities exact.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::benchmarks::GlmSpec;
use crate::copulas::{clamp_unit, gaussian_ln_density_z, Copula, ParamKind, UNIT_EPS};
use crate::error::{Error, Result};
use crate::optim::{halton, nelder_mead, NelderMeadOptions};
use crate::process::{apply_psi, stationary_marginal_cdf, ModelKind, ModelSpec, Psi};
use crate::selection_risk::information_criteria;
use crate::specfun::{ndtri, std_normal_cdf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub simplex_tol: f64,
    pub max_evals: usize,
    pub multistarts: usize,
    /// Filter start `W_0`.
    pub w0: f64,
    /// Simulation size for the stationary margin in the two-step estimator.
    pub psi_draws: usize,
    /// Relative finite-difference step for the observed information.
    pub hessian_step: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            simplex_tol: 1e-8,
            max_evals: 2000,
            multistarts: 5,
            w0: 0.5,
            psi_draws: 100_000,
            hessian_step: 1e-4,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.simplex_tol > 0.0
            && self.max_evals > 0
            && self.multistarts > 0
            && self.w0 > 0.0
            && self.w0 < 1.0
            && self.psi_draws > 0
            && self.hessian_step > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("invalid fit configuration {self:?}")))
        }
    }
}

/// Log-likelihood with its per-observation terms and filtered innovations.
#[derive(Debug, Clone, PartialEq)]
pub struct Likelihood {
    pub loglik: f64,
    pub contributions: Vec<f64>,
    pub w: Vec<f64>,
}

/// Log-likelihood of a MAG(1) model with a fixed copula.
pub fn loglik_mag1(u: &[f64], mag: &Copula, w0: f64) -> Result<Likelihood> {
    loglik(&ModelSpec::mag1(*mag), u, None, w0)
}

/// Log-likelihood of a homogeneous MAGMAR(1,1) model.
pub fn loglik_magmar(u: &[f64], ar: &Copula, mag: &Copula, w0: f64) -> Result<Likelihood> {
    loglik(&ModelSpec::magmar11(*ar, *mag), u, None, w0)
}

/// Log-likelihood of any copula model. `climate[t]` is the lagged covariate
/// paired with observation `t`.
pub fn loglik(spec: &ModelSpec, u: &[f64], climate: Option<&[f64]>, w0: f64) -> Result<Likelihood> {
    spec.validate()?;
    let data = Prepared::new(u, climate, w0, spec)?;
    let mut out = Likelihood {
        loglik: 0.0,
        contributions: Vec::with_capacity(u.len()),
        w: Vec::with_capacity(u.len()),
    };
    out.loglik = data.eval(spec, Some(&mut out))?;
    Ok(out)
}

/// Observations prepared once for repeated likelihood evaluation.
pub(crate) struct Prepared {
    u: Vec<f64>,
    /// Normal scores, filled when the Gaussian path may be used.
    z: Vec<f64>,
    climate: Option<Vec<f64>>,
    w0: f64,
}

/// Largest normal score after clamping to the unit interval.
fn z_cap() -> f64 {
    -ndtri(UNIT_EPS)
}

fn gaussian_rho(c: &Copula) -> Option<f64> {
    match *c {
        Copula::Independence => Some(0.0),
        Copula::Gaussian { rho } => Some(rho),
        _ => None,
    }
}

fn is_gaussian_spec(spec: &ModelSpec) -> bool {
    gaussian_rho(&spec.mag).is_some() && spec.ar.is_none_or(|a| gaussian_rho(&a).is_some())
}

impl Prepared {
    pub(crate) fn new(u: &[f64], climate: Option<&[f64]>, w0: f64, spec: &ModelSpec) -> Result<Self> {
        if u.len() < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 observations, got {}", u.len())));
        }
        if let Some(i) = u.iter().position(|x| !(*x > 0.0 && *x < 1.0)) {
            return Err(Error::InvalidInput(format!(
                "observation {} is {} which is outside (0, 1)",
                i + 1,
                u[i]
            )));
        }
        if !(w0 > 0.0 && w0 < 1.0) {
            return Err(Error::InvalidInput(format!("W_0 must lie in (0, 1), got {w0}")));
        }
        let climate = if spec.needs_climate() {
            let c = climate.ok_or_else(|| Error::InvalidInput("climate-linked model needs a climate series".into()))?;
            if c.len() < u.len() {
                return Err(Error::InvalidInput(format!(
                    "climate series has {} values for {} observations",
                    c.len(),
                    u.len()
                )));
            }
            if let Some(i) = c[..u.len()].iter().position(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("climate value {} is missing or not finite", i + 1)));
            }
            Some(c[..u.len()].to_vec())
        } else {
            None
        };
        let z = if is_gaussian_spec(spec) {
            u.iter().map(|&x| ndtri(clamp_unit(x))).collect()
        } else {
            Vec::new()
        };
        Ok(Prepared {
            u: u.to_vec(),
            z,
            climate,
            w0,
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.u.len()
    }

    /// Total log-likelihood; per-step detail is written to `out` when given.
    pub(crate) fn eval(&self, spec: &ModelSpec, out: Option<&mut Likelihood>) -> Result<f64> {
        if is_gaussian_spec(spec) && !self.z.is_empty() {
            self.eval_gaussian(spec, out)
        } else {
            self.eval_generic(spec, out)
        }
    }

    fn slots(&self, spec: &ModelSpec, fixed: &Option<(Copula, Copula)>, t: usize) -> Result<(Copula, Copula)> {
        match fixed {
            Some(p) => Ok(*p),
            None => spec.copulas_at(self.climate.as_ref().map(|c| c[t])),
        }
    }

    fn eval_generic(&self, spec: &ModelSpec, mut out: Option<&mut Likelihood>) -> Result<f64> {
        let fixed = if spec.needs_climate() { None } else { Some(spec.copulas_at(None)?) };
        let mut total = 0.0;
        let mut w_prev = self.w0;
        for t in 0..self.u.len() {
            let (mag, ar) = self.slots(spec, &fixed, t)?;
            let ut = self.u[t];
            let (s, l_ar) = if t == 0 {
                (ut, 0.0)
            } else {
                let up = self.u[t - 1];
                (ar.h_raw(ut, up), ar.ln_density_raw(ut, up))
            };
            let l = mag.ln_density_raw(s, w_prev) + l_ar;
            if !l.is_finite() {
                return Err(Error::NonFinite { index: t + 1 });
            }
            let w = mag.h_raw(s, w_prev);
            total += l;
            if let Some(o) = out.as_deref_mut() {
                o.contributions.push(l);
                o.w.push(w);
            }
            w_prev = w;
        }
        Ok(total)
    }

    // Gaussian slots act linearly on normal scores, so the filter needs no
    // special functions per step.
    fn eval_gaussian(&self, spec: &ModelSpec, mut out: Option<&mut Likelihood>) -> Result<f64> {
        let cap = z_cap();
        let fixed = if spec.needs_climate() { None } else { Some(spec.copulas_at(None)?) };
        let mut total = 0.0;
        let mut omega_prev = ndtri(clamp_unit(self.w0));
        for t in 0..self.z.len() {
            let (mag, ar) = self.slots(spec, &fixed, t)?;
            let rho_m = gaussian_rho(&mag).expect("gaussian slot");
            let rho_a = gaussian_rho(&ar).expect("gaussian slot");
            let zt = self.z[t];
            let (s, l_ar) = if t == 0 || rho_a == 0.0 {
                (zt, 0.0)
            } else {
                let zp = self.z[t - 1];
                let s = ((zt - rho_a * zp) / (1.0 - rho_a * rho_a).sqrt()).clamp(-cap, cap);
                (s, gaussian_ln_density_z(zt, zp, rho_a))
            };
            let (l_mag, omega) = if rho_m == 0.0 {
                (0.0, s)
            } else {
                let omega = ((s - rho_m * omega_prev) / (1.0 - rho_m * rho_m).sqrt()).clamp(-cap, cap);
                (gaussian_ln_density_z(s, omega_prev, rho_m), omega)
            };
            let l = l_mag + l_ar;
            if !l.is_finite() {
                return Err(Error::NonFinite { index: t + 1 });
            }
            total += l;
            if let Some(o) = out.as_deref_mut() {
                o.contributions.push(l);
                o.w.push(clamp_unit(std_normal_cdf(omega)));
            }
            omega_prev = omega;
        }
        Ok(total)
    }
}

/// What a [`FitResult`] describes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FittedModel {
    Copula(ModelSpec),
    PoissonGlm(GlmSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub loglik: Option<f64>,
    pub evals: usize,
    pub converged: bool,
}

/// Last filtered state, used to condition forecasts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalState {
    pub u_last: f64,
    pub w_last: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FittedModel,
    pub label: String,
    pub family: String,
    pub names: Vec<String>,
    /// Natural-scale values of all parameters (free and fixed).
    pub estimates: Vec<f64>,
    /// Absent for fixed parameters, boundary hits, or an indefinite Hessian.
    pub std_errors: Vec<Option<f64>>,
    pub free: Vec<bool>,
    pub loglik: f64,
    pub contributions: Vec<f64>,
    pub n_obs: usize,
    pub n_eff: usize,
    pub k: usize,
    pub aic: f64,
    pub bic: f64,
    pub converged: bool,
    /// Names of free parameters within 1e-3 of a box edge.
    pub boundary: Vec<String>,
    pub multistarts: Vec<StartRecord>,
    pub transform_seed: Option<u64>,
    pub warnings: Vec<String>,
    pub final_state: Option<FinalState>,
}

impl FitResult {
    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.estimates[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).and_then(|i| self.std_errors[i])
    }

    pub fn copula_spec(&self) -> Option<&ModelSpec> {
        match &self.model {
            FittedModel::Copula(s) => Some(s),
            FittedModel::PoissonGlm(_) => None,
        }
    }
}

/// Free-parameter mask with the named parameters fixed at their values in `spec`.
pub fn mask_fixing(spec: &ModelSpec, fixed: &[&str]) -> Result<Vec<bool>> {
    let names = spec.param_names();
    for f in fixed {
        if !names.iter().any(|n| n == f) {
            return Err(Error::InvalidSpec(format!("model has no parameter '{f}'")));
        }
    }
    Ok(names.iter().map(|n| !fixed.contains(&n.as_str())).collect())
}

fn start_range(kind: ParamKind) -> (f64, f64) {
    match kind {
        ParamKind::Correlation => (-1.5, 1.5),
        ParamKind::DegreesOfFreedom => (0.0, 4.0),
        ParamKind::GumbelAlpha => (-2.0, 1.5),
        ParamKind::Real => (-1.5, 1.5),
    }
}

/// Maximum-likelihood fit of a copula model.
///
/// `free` selects the estimated parameters (default: all); fixed ones keep
/// their values from `spec`, which also supply the first start point.
pub fn fit(
    u: &[f64],
    spec: &ModelSpec,
    free: Option<&[bool]>,
    climate: Option<&[f64]>,
    config: &FitConfig,
) -> Result<FitResult> {
    spec.validate()?;
    config.validate()?;
    let data = Prepared::new(u, climate, config.w0, spec)?;
    fit_prepared(&data, spec, free, config)
}

pub(crate) fn fit_prepared(data: &Prepared, spec: &ModelSpec, free: Option<&[bool]>, config: &FitConfig) -> Result<FitResult> {
    let layout = spec.param_layout();
    let names: Vec<String> = layout.iter().map(|s| s.name.clone()).collect();
    let kinds: Vec<ParamKind> = layout.iter().map(|s| s.kind).collect();
    let base = spec.param_values();
    let mask: Vec<bool> = match free {
        Some(m) if m.len() != layout.len() => {
            return Err(Error::InvalidSpec(format!(
                "free-parameter mask has {} entries for {} parameters",
                m.len(),
                layout.len()
            )))
        }
        Some(m) => m.to_vec(),
        None => vec![true; layout.len()],
    };
    let free_idx: Vec<usize> = (0..layout.len()).filter(|&i| mask[i]).collect();
    let k = free_idx.len();
    let n = data.len();
    let mut warnings = Vec::new();
    if k > 0 && n < 10 * k {
        warnings.push(format!("only {n} observations for {k} free parameter(s)"));
    }

    let natural = |x: &[f64]| -> Vec<f64> {
        let mut v = base.clone();
        for (j, &i) in free_idx.iter().enumerate() {
            v[i] = kinds[i].from_unconstrained(x[j]);
        }
        v
    };
    let objective = |x: &[f64]| -> f64 {
        match spec.with_param_values(&natural(x)).and_then(|s| data.eval(&s, None)) {
            Ok(l) => -l,
            Err(_) => f64::INFINITY,
        }
    };

    let opts = NelderMeadOptions {
        tol: config.simplex_tol,
        max_evals: config.max_evals,
        initial_step: 0.5,
    };
    let n_starts = if k == 0 { 1 } else { config.multistarts };
    let mut records = Vec::with_capacity(n_starts);
    let mut best: Option<(usize, Vec<f64>, f64, bool)> = None;
    for s in 0..n_starts {
        let x0: Vec<f64> = if s == 0 {
            free_idx.iter().map(|&i| kinds[i].to_unconstrained(base[i])).collect()
        } else {
            let h = halton(s as u64, k);
            free_idx
                .iter()
                .zip(h)
                .map(|(&i, q)| {
                    let (lo, hi) = start_range(kinds[i]);
                    lo + q * (hi - lo)
                })
                .collect()
        };
        let r = nelder_mead(objective, &x0, &opts);
        let ll = (-r.fx).is_finite().then_some(-r.fx);
        records.push(StartRecord {
            start: natural(&x0),
            end: natural(&r.x),
            loglik: ll,
            evals: r.evals,
            converged: r.converged,
        });
        if let Some(l) = ll {
            if best.as_ref().is_none_or(|b| l > b.2) {
                best = Some((s, r.x.clone(), l, r.converged));
            }
        }
    }
    let (_, x_best, _, converged) =
        best.ok_or_else(|| Error::Convergence("no start produced a finite log-likelihood".into()))?;
    if !converged {
        warnings.push("optimizer stopped at the evaluation limit".into());
    }

    let estimates = natural(&x_best);
    let fitted = spec.with_param_values(&estimates)?;
    let mut lik = Likelihood {
        loglik: 0.0,
        contributions: Vec::with_capacity(n),
        w: Vec::with_capacity(n),
    };
    lik.loglik = data.eval(&fitted, Some(&mut lik))?;

    let boundary: Vec<usize> = free_idx
        .iter()
        .copied()
        .filter(|&i| kinds[i].near_boundary(estimates[i], 1e-3))
        .collect();
    let interior: Vec<usize> = free_idx.iter().copied().filter(|i| !boundary.contains(i)).collect();
    let mut std_errors = vec![None; layout.len()];
    if !interior.is_empty() {
        match observed_information_se(data, spec, &estimates, &interior, &kinds, config.hessian_step) {
            Some(se) => {
                for (j, &i) in interior.iter().enumerate() {
                    std_errors[i] = Some(se[j]);
                }
            }
            None => warnings.push("observed information is not positive definite; standard errors omitted".into()),
        }
    }
    for &i in &boundary {
        warnings.push(format!("{} at its box edge ({})", names[i], estimates[i]));
    }

    let n_eff = if spec.kind == ModelKind::Markov { n - 1 } else { n };
    let (aic, bic) = information_criteria(lik.loglik, k, n_eff);
    Ok(FitResult {
        model: FittedModel::Copula(fitted.clone()),
        label: fitted.label(),
        family: fitted.family_label(),
        names,
        estimates,
        std_errors,
        free: mask,
        loglik: lik.loglik,
        contributions: lik.contributions,
        n_obs: n,
        n_eff,
        k,
        aic,
        bic,
        converged,
        boundary: boundary.iter().map(|&i| layout[i].name.clone()).collect(),
        multistarts: records,
        transform_seed: None,
        warnings,
        final_state: Some(FinalState {
            u_last: data.u[n - 1],
            w_last: *lik.w.last().expect("n >= 2"),
        }),
    })
}

/// Standard errors from the inverse negative Hessian of the log-likelihood
/// over the parameters `idx`, by central differences on the natural scale.
fn observed_information_se(
    data: &Prepared,
    spec: &ModelSpec,
    theta: &[f64],
    idx: &[usize],
    kinds: &[ParamKind],
    rel_step: f64,
) -> Option<Vec<f64>> {
    let m = idx.len();
    let steps: Vec<f64> = idx
        .iter()
        .map(|&i| {
            let (lo, hi) = kinds[i].bounds();
            let room = (theta[i] - lo).min(hi - theta[i]);
            (rel_step * theta[i].abs().max(1.0)).min(0.5 * room)
        })
        .collect();
    if steps.iter().any(|&h| !(h > 1e-12)) {
        return None;
    }
    let f = |shift: &[(usize, f64)]| -> Option<f64> {
        let mut v = theta.to_vec();
        for &(j, d) in shift {
            v[idx[j]] += d;
        }
        spec.with_param_values(&v).ok().and_then(|s| data.eval(&s, None).ok())
    };
    let f0 = f(&[])?;
    let mut h = DMatrix::<f64>::zeros(m, m);
    for a in 0..m {
        let ha = steps[a];
        let fp = f(&[(a, ha)])?;
        let fm = f(&[(a, -ha)])?;
        h[(a, a)] = (fp - 2.0 * f0 + fm) / (ha * ha);
        for b in 0..a {
            let hb = steps[b];
            let fpp = f(&[(a, ha), (b, hb)])?;
            let fpm = f(&[(a, ha), (b, -hb)])?;
            let fmp = f(&[(a, -ha), (b, hb)])?;
            let fmm = f(&[(a, -ha), (b, -hb)])?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * ha * hb);
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    let info = -h;
    let chol = info.cholesky()?;
    let cov = chol.inverse();
    let se: Vec<f64> = (0..m).map(|j| cov[(j, j)].sqrt()).collect();
    se.iter().all(|s| s.is_finite()).then_some(se)
}

/// Both stages of the adjusted two-step estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStepFit {
    pub stage1: FitResult,
    pub stage2: FitResult,
    pub psi: Psi,
    pub psi_seed: u64,
    pub psi_draws: usize,
    /// Kolmogorov-Smirnov distance of the adjusted series to Uniform(0, 1).
    pub adjusted_ks: f64,
}

/// Adjusted two-step estimator for a homogeneous MAGMAR(1,1) model.
///
/// Stage 1 is the ordinary fit. Stage 2 estimates the stationary margin
/// `Psi` by simulating `config.psi_draws` values under the stage-1 estimate
/// and maps the data to `U~_t = Psi(U_t)`. Stage 3 maximizes the conditional
/// likelihood of `U~` with `Psi` held at that estimate, i.e. the model
/// density at `Psi^{-1}(U~_t)` divided by the density of `Psi`.
pub fn fit_adjusted_two_step(
    u: &[f64],
    spec: &ModelSpec,
    free: Option<&[bool]>,
    config: &FitConfig,
    seed: u64,
) -> Result<TwoStepFit> {
    if spec.kind != ModelKind::Magmar11 || spec.needs_climate() {
        return Err(Error::InvalidSpec("the two-step estimator needs a homogeneous MAGMAR(1,1) model".into()));
    }
    let stage1 = fit(u, spec, free, None, config)?;
    let est = stage1.copula_spec().expect("copula fit").clone();
    let psi = stationary_marginal_cdf(&est, config.psi_draws, seed)?;
    let adjusted = apply_psi(&psi, u);
    let back: Vec<f64> = adjusted.iter().map(|&p| clamp_unit(psi.inverse(p))).collect();
    let mut stage2 = fit(&back, &est, free, None, config)?;
    let jac: Vec<f64> = back.iter().map(|&x| psi.ln_density(x)).collect();
    for (c, j) in stage2.contributions.iter_mut().zip(&jac) {
        *c -= j;
    }
    stage2.loglik = stage2.contributions.iter().sum();
    let (aic, bic) = information_criteria(stage2.loglik, stage2.k, stage2.n_eff);
    stage2.aic = aic;
    stage2.bic = bic;
    Ok(TwoStepFit {
        stage1,
        stage2,
        adjusted_ks: crate::stats::ks_uniform_statistic(&adjusted),
        psi,
        psi_seed: seed,
        psi_draws: config.psi_draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{simulate, ClimateLink, LinkFn, LinkTarget};

    #[test]
    fn independence_has_zero_loglik() {
        let u = [0.2, 0.7, 0.4, 0.9];
        assert_eq!(loglik_mag1(&u, &Copula::Gaussian { rho: 0.0 }, 0.5).unwrap().loglik, 0.0);
        assert_eq!(loglik_mag1(&u, &Copula::Gumbel { alpha: 1.0 }, 0.5).unwrap().loglik, 0.0);
        let l = loglik_magmar(&u, &Copula::Independence, &Copula::Independence, 0.5).unwrap();
        assert_eq!(l.loglik, 0.0);
        for (w, x) in l.w.iter().zip(&u) {
            assert!((w - x).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_path_matches_generic() {
        let spec = ModelSpec::magmar11(Copula::Gaussian { rho: 0.4 }, Copula::Gaussian { rho: 0.3 });
        let p = simulate(&spec, 500, 100, 5, None).unwrap();
        let fast = loglik(&spec, &p.u, None, 0.5).unwrap();
        let data = Prepared::new(&p.u, None, 0.5, &spec).unwrap();
        let mut slow = Likelihood {
            loglik: 0.0,
            contributions: vec![],
            w: vec![],
        };
        slow.loglik = data.eval_generic(&spec, Some(&mut slow)).unwrap();
        assert!((fast.loglik - slow.loglik).abs() < 1e-8);
        for (a, b) in fast.w.iter().zip(&slow.w) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn nesting_identities() {
        let spec = ModelSpec::magmar11(Copula::Gumbel { alpha: 1.6 }, Copula::StudentT { rho: 0.3, nu: 5.0 });
        let u = simulate(&spec, 300, 50, 8, None).unwrap().u;
        let mag = Copula::StudentT { rho: 0.3, nu: 5.0 };
        let a = loglik_magmar(&u, &Copula::Independence, &mag, 0.5).unwrap();
        let b = loglik_mag1(&u, &mag, 0.5).unwrap();
        assert_eq!(a.loglik, b.loglik);
        let ar = Copula::Gumbel { alpha: 1.6 };
        let m = loglik(&ModelSpec::markov(ar), &u, None, 0.5).unwrap();
        let c = loglik_magmar(&u, &ar, &Copula::Independence, 0.5).unwrap();
        assert_eq!(m.loglik, c.loglik);
        let linked = ModelSpec::mag1(Copula::Gaussian { rho: 0.0 })
            .with_climate(ClimateLink {
                link: LinkFn::Tanh,
                beta0: 0.4,
                beta1: 0.0,
                target: LinkTarget::Mag,
            })
            .unwrap();
        let climate = vec![1.3; u.len()];
        let l1 = loglik(&linked, &u, Some(&climate), 0.5).unwrap();
        let l0 = loglik_mag1(&u, &Copula::Gaussian { rho: 0.4f64.tanh() }, 0.5).unwrap();
        assert!((l1.loglik - l0.loglik).abs() < 1e-8);
    }

    #[test]
    fn input_validation() {
        let c = Copula::Gaussian { rho: 0.2 };
        assert!(loglik_mag1(&[0.5], &c, 0.5).is_err());
        assert!(loglik_mag1(&[0.5, 1.0], &c, 0.5).is_err());
        let linked = ModelSpec::mag1(c)
            .with_climate(ClimateLink {
                link: LinkFn::Tanh,
                beta0: 0.0,
                beta1: 1.0,
                target: LinkTarget::Mag,
            })
            .unwrap();
        assert!(loglik(&linked, &[0.3, 0.4], None, 0.5).is_err());
    }

    #[test]
    fn fit_recovers_gaussian_mag1() {
        let truth = ModelSpec::mag1(Copula::Gaussian { rho: 0.5 });
        let u = simulate(&truth, 2000, 500, 21, None).unwrap().u;
        let start = ModelSpec::mag1(Copula::Gaussian { rho: 0.0 });
        let r = fit(&u, &start, None, None, &FitConfig::default()).unwrap();
        let est = r.estimate("mag.rho").unwrap();
        let se = r.std_error("mag.rho").unwrap();
        assert!((est - 0.5).abs() < 4.0 * se, "{est} {se}");
        assert!(se > 0.005 && se < 0.05);
        assert!(r.converged);
        assert_eq!(r.k, 1);
        assert!((r.aic - (2.0 - 2.0 * r.loglik)).abs() < 1e-12);
        let sum: f64 = r.contributions.iter().sum();
        assert!((sum - r.loglik).abs() < 1e-8);
        for s in &r.multistarts {
            if let Some(l) = s.loglik {
                assert!(l <= r.loglik + 1e-12);
            }
        }
    }

    #[test]
    fn fixed_parameters_are_respected() {
        let spec = ModelSpec::magmar11(Copula::Gaussian { rho: 0.0 }, Copula::Gaussian { rho: 0.3 });
        let u = simulate(&spec, 400, 100, 2, None).unwrap().u;
        let mask = mask_fixing(&spec, &["ar.rho"]).unwrap();
        let r = fit(&u, &spec, Some(&mask), None, &FitConfig::default()).unwrap();
        assert_eq!(r.estimate("ar.rho"), Some(0.0));
        assert_eq!(r.k, 1);
        assert!(r.std_error("ar.rho").is_none());
        let mag = fit(&u, &ModelSpec::mag1(Copula::Gaussian { rho: 0.3 }), None, None, &FitConfig::default()).unwrap();
        assert!((mag.loglik - r.loglik).abs() < 1e-6);
        assert!(mask_fixing(&spec, &["nope"]).is_err());
    }
}
