//! Model specifications and simulation of MAG(1), MAGMAR(1,1) and Markov
//! copula processes.
//!
//! With innovations `W_t` iid Uniform(0, 1), the recursions are
//!
//! * MAG(1): `U_t = h_mag^{-1}(W_t, W_{t-1})`
//! * MAGMAR(1,1): `U_t = h_ar^{-1}(h_mag^{-1}(W_t, W_{t-1}), U_{t-1})`
//! * Markov: `U_t = h_ar^{-1}(W_t, U_{t-1})`
//!
//! so the Markov chain is MAGMAR with an independence MAG slot.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::copulas::{clamp_unit, Copula, CopulaFamily, ParamKind, ALPHA_MAX, ALPHA_MIN, RHO_MARGIN};
use crate::error::{Error, Result};
use crate::header::Header;
use crate::rng::UniformStream;
use crate::specfun::ndtri;

pub const DEFAULT_BURN_IN: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mag1,
    Magmar11,
    Markov,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mag1 => "mag1",
            ModelKind::Magmar11 => "magmar11",
            ModelKind::Markov => "markov",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mag1" => Ok(ModelKind::Mag1),
            "magmar11" | "magmar" => Ok(ModelKind::Magmar11),
            "markov" => Ok(ModelKind::Markov),
            other => Err(Error::InvalidSpec(format!("unknown model kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkFn {
    /// `tanh(b0 + b1 c)`, for correlation parameters.
    Tanh,
    /// `1 + exp(b0 + b1 c)`, for the Gumbel parameter.
    OnePlusExp,
}

impl std::str::FromStr for LinkFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(LinkFn::Tanh),
            "one-plus-exp" | "one_plus_exp" => Ok(LinkFn::OnePlusExp),
            other => Err(Error::InvalidSpec(format!("unknown climate link '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkTarget {
    Mag,
    Ar,
}

/// Time-varying dependence parameter driven by the lagged climate covariate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClimateLink {
    pub link: LinkFn,
    pub beta0: f64,
    pub beta1: f64,
    pub target: LinkTarget,
}

impl ClimateLink {
    /// Linked parameter for lagged covariate value `c`, clipped to its box.
    pub fn eval(&self, c: f64) -> Result<f64> {
        let eta = self.beta0 + self.beta1 * c;
        let v = match self.link {
            LinkFn::Tanh => eta.tanh().clamp(-1.0 + RHO_MARGIN, 1.0 - RHO_MARGIN),
            LinkFn::OnePlusExp => (1.0 + eta.exp()).clamp(ALPHA_MIN, ALPHA_MAX),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("climate link produced {v} at covariate {c}")))
        }
    }
}

/// Name and reparameterization of one free parameter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSlot {
    pub name: String,
    pub kind: ParamKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Innovation (MAG) copula; independence for Markov chains.
    pub mag: Copula,
    /// Autoregressive copula; absent for MAG(1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ar: Option<Copula>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub climate: Option<ClimateLink>,
}

impl ModelSpec {
    pub fn mag1(mag: Copula) -> Self {
        ModelSpec {
            kind: ModelKind::Mag1,
            mag,
            ar: None,
            climate: None,
        }
    }

    pub fn magmar11(ar: Copula, mag: Copula) -> Self {
        ModelSpec {
            kind: ModelKind::Magmar11,
            mag,
            ar: Some(ar),
            climate: None,
        }
    }

    pub fn markov(ar: Copula) -> Self {
        ModelSpec {
            kind: ModelKind::Markov,
            mag: Copula::Independence,
            ar: Some(ar),
            climate: None,
        }
    }

    pub fn with_climate(mut self, link: ClimateLink) -> Result<Self> {
        self.climate = Some(link);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.kind, &self.ar) {
            (ModelKind::Mag1, Some(_)) => {
                return Err(Error::InvalidSpec("MAG(1) has no autoregressive copula".into()))
            }
            (ModelKind::Magmar11 | ModelKind::Markov, None) => {
                return Err(Error::InvalidSpec(format!(
                    "{} needs an autoregressive copula",
                    self.kind.name()
                )))
            }
            _ => {}
        }
        if self.kind == ModelKind::Markov && self.mag != Copula::Independence {
            return Err(Error::InvalidSpec("a Markov copula model has no MAG copula".into()));
        }
        if let Some(link) = &self.climate {
            if self.kind == ModelKind::Markov {
                return Err(Error::InvalidSpec("climate links apply to MAG(1) and MAGMAR(1,1) only".into()));
            }
            if link.target == LinkTarget::Ar && self.kind != ModelKind::Magmar11 {
                return Err(Error::InvalidSpec("an ar-parameter climate target needs MAGMAR(1,1)".into()));
            }
            let family = self.target_copula(link.target).family();
            let ok = match link.link {
                LinkFn::Tanh => matches!(family, CopulaFamily::Gaussian | CopulaFamily::StudentT),
                LinkFn::OnePlusExp => family == CopulaFamily::Gumbel,
            };
            if !ok {
                return Err(Error::InvalidSpec(format!(
                    "link {:?} cannot drive a {} copula",
                    link.link,
                    family.name()
                )));
            }
        }
        Ok(())
    }

    fn target_copula(&self, target: LinkTarget) -> Copula {
        match target {
            LinkTarget::Mag => self.mag,
            LinkTarget::Ar => self.ar.unwrap_or(Copula::Independence),
        }
    }

    pub fn needs_climate(&self) -> bool {
        self.climate.is_some()
    }

    /// Copulas in force at a step whose lagged covariate is `c`.
    /// Returns `(mag, ar)`; `ar` is independence for MAG(1).
    pub fn copulas_at(&self, c: Option<f64>) -> Result<(Copula, Copula)> {
        let mut mag = self.mag;
        let mut ar = self.ar.unwrap_or(Copula::Independence);
        if let Some(link) = &self.climate {
            let c = c.ok_or_else(|| Error::InvalidInput("climate covariate required".into()))?;
            let v = link.eval(c)?;
            match link.target {
                LinkTarget::Mag => mag = mag.with_dependence(v),
                LinkTarget::Ar => ar = ar.with_dependence(v),
            }
        }
        Ok((mag, ar))
    }

    /// Free parameters in order: AR slot, MAG slot, climate coefficients.
    /// A linked dependence parameter is replaced by the link coefficients.
    pub fn param_layout(&self) -> Vec<ParamSlot> {
        let mut out = Vec::new();
        let linked = self.climate.map(|l| l.target);
        let mut slot = |prefix: &str, c: &Copula, is_linked: bool| {
            let fam = c.family();
            for (i, (name, kind)) in fam.param_names().iter().zip(fam.param_kinds()).enumerate() {
                if is_linked && i == 0 {
                    continue;
                }
                out.push(ParamSlot {
                    name: format!("{prefix}.{name}"),
                    kind: *kind,
                });
            }
        };
        if let Some(ar) = &self.ar {
            slot("ar", ar, linked == Some(LinkTarget::Ar));
        }
        if self.kind != ModelKind::Markov {
            slot("mag", &self.mag, linked == Some(LinkTarget::Mag));
        }
        if self.climate.is_some() {
            for name in ["climate.beta0", "climate.beta1"] {
                out.push(ParamSlot {
                    name: name.into(),
                    kind: ParamKind::Real,
                });
            }
        }
        out
    }

    pub fn param_names(&self) -> Vec<String> {
        self.param_layout().into_iter().map(|s| s.name).collect()
    }

    pub fn param_values(&self) -> Vec<f64> {
        let linked = self.climate.map(|l| l.target);
        let mut out = Vec::new();
        if let Some(ar) = &self.ar {
            let p = ar.params();
            let skip = usize::from(linked == Some(LinkTarget::Ar) && !p.is_empty());
            out.extend_from_slice(&p[skip..]);
        }
        if self.kind != ModelKind::Markov {
            let p = self.mag.params();
            let skip = usize::from(linked == Some(LinkTarget::Mag) && !p.is_empty());
            out.extend_from_slice(&p[skip..]);
        }
        if let Some(l) = &self.climate {
            out.push(l.beta0);
            out.push(l.beta1);
        }
        out
    }

    /// Same structure with the free parameters replaced by `values`.
    pub fn with_param_values(&self, values: &[f64]) -> Result<ModelSpec> {
        let layout_len = self.param_layout().len();
        if values.len() != layout_len {
            return Err(Error::InvalidSpec(format!(
                "model takes {layout_len} parameter(s), got {}",
                values.len()
            )));
        }
        let linked = self.climate.map(|l| l.target);
        let mut it = values.iter().copied();
        let mut rebuild = |c: &Copula, is_linked: bool| -> Result<Copula> {
            let mut p = c.params();
            let start = usize::from(is_linked && !p.is_empty());
            for v in p.iter_mut().skip(start) {
                *v = it.next().expect("length checked");
            }
            Copula::from_params(c.family(), &p)
        };
        let mut out = self.clone();
        if let Some(ar) = &self.ar {
            out.ar = Some(rebuild(ar, linked == Some(LinkTarget::Ar))?);
        }
        if self.kind != ModelKind::Markov {
            out.mag = rebuild(&self.mag, linked == Some(LinkTarget::Mag))?;
        }
        if let Some(l) = &mut out.climate {
            l.beta0 = it.next().expect("length checked");
            l.beta1 = it.next().expect("length checked");
        }
        Ok(out)
    }

    /// Short label such as `magmar11[ar=gaussian,mag=gumbel]+climate(mag)`.
    pub fn label(&self) -> String {
        let mut s = match (self.kind, &self.ar) {
            (ModelKind::Mag1, _) => format!("mag1[{}]", self.mag.family().name()),
            (ModelKind::Markov, Some(ar)) => format!("markov[{}]", ar.family().name()),
            (_, Some(ar)) => format!(
                "magmar11[ar={},mag={}]",
                ar.family().name(),
                self.mag.family().name()
            ),
            (_, None) => self.kind.name().to_string(),
        };
        if let Some(l) = &self.climate {
            s.push_str(match l.target {
                LinkTarget::Mag => "+climate(mag)",
                LinkTarget::Ar => "+climate(ar)",
            });
        }
        s
    }

    /// Family of the slot carrying the main dependence (AR for Markov).
    pub fn family_label(&self) -> String {
        match (self.kind, &self.ar) {
            (ModelKind::Mag1, _) => self.mag.family().name().into(),
            (ModelKind::Markov, Some(ar)) => ar.family().name().into(),
            (_, Some(ar)) => format!("{}/{}", ar.family().name(), self.mag.family().name()),
            (_, None) => String::new(),
        }
    }
}

/// A simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePath {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    /// Lagged covariate used at each retained step.
    pub climate: Option<Vec<f64>>,
    /// `(U, W)` immediately before the first retained step.
    pub initial: (f64, f64),
}

impl StatePath {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// CSV with columns `t,u,w` and `climate` when present.
    pub fn write_csv<W: Write>(&self, mut out: W, header: &Header) -> Result<()> {
        header.write_to(&mut out).map_err(|e| Error::io("<stream>", e))?;
        let mut wtr = csv::Writer::from_writer(out);
        if self.climate.is_some() {
            wtr.write_record(["t", "u", "w", "climate"])?;
        } else {
            wtr.write_record(["t", "u", "w"])?;
        }
        for i in 0..self.u.len() {
            let mut rec = vec![(i + 1).to_string(), self.u[i].to_string(), self.w[i].to_string()];
            if let Some(c) = &self.climate {
                rec.push(c[i].to_string());
            }
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("<stream>", e))?;
        Ok(())
    }
}

/// Simulates `n` retained steps after `burn_in` discarded ones.
///
/// The stream draws `W_0`, then `U_0`, then one `W_t` per step. When the
/// model is climate-linked, `climate[i]` is the lagged covariate for step `i`
/// counted from the first burn-in step, so at least `burn_in + n` values are
/// required.
pub fn simulate(
    spec: &ModelSpec,
    n: usize,
    burn_in: usize,
    seed: u64,
    climate: Option<&[f64]>,
) -> Result<StatePath> {
    spec.validate()?;
    if n < 2 {
        return Err(Error::InvalidInput(format!("simulation length must be at least 2, got {n}")));
    }
    let total = burn_in + n;
    if spec.needs_climate() {
        match climate {
            None => return Err(Error::InvalidInput("climate-linked model needs a climate sequence".into())),
            Some(c) if c.len() < total => {
                return Err(Error::InvalidInput(format!(
                    "climate sequence has {} values, need {total}",
                    c.len()
                )))
            }
            _ => {}
        }
    }
    let static_pair = if spec.needs_climate() { None } else { Some(spec.copulas_at(None)?) };

    let mut rng = UniformStream::new(seed);
    let mut w_prev = rng.next_open01();
    let mut u_prev = rng.next_open01();
    let mut path = StatePath {
        u: Vec::with_capacity(n),
        w: Vec::with_capacity(n),
        climate: spec.needs_climate().then(|| Vec::with_capacity(n)),
        initial: (u_prev, w_prev),
    };
    for i in 0..total {
        let c = climate.filter(|_| spec.needs_climate()).map(|c| c[i]);
        let (mag, ar) = match static_pair {
            Some(p) => p,
            None => spec.copulas_at(c)?,
        };
        let w = rng.next_open01();
        let s = mag.h_inv_raw(w, w_prev)?;
        let u = ar.h_inv_raw(s, u_prev)?;
        if i + 1 == burn_in {
            path.initial = (u, w);
        }
        if i >= burn_in {
            path.u.push(u);
            path.w.push(w);
            if let (Some(out), Some(c)) = (path.climate.as_mut(), c) {
                out.push(c);
            }
        }
        w_prev = w;
        u_prev = u;
    }
    Ok(path)
}

/// Gaussian AR(1) covariate `C_t = phi C_{t-1} + sigma e_t`, started from its
/// stationary law.
pub fn ar1_climate(n: usize, phi: f64, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if phi.abs() >= 1.0 || sigma <= 0.0 || !phi.is_finite() || !sigma.is_finite() {
        return Err(Error::InvalidInput(format!(
            "AR(1) covariate needs |phi| < 1 and sigma > 0, got phi={phi}, sigma={sigma}"
        )));
    }
    let mut rng = UniformStream::new(seed);
    let mut c = sigma / (1.0 - phi * phi).sqrt() * ndtri(rng.next_open01());
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(c);
        c = phi * c + sigma * ndtri(rng.next_open01());
    }
    Ok(out)
}

/// Monotone piecewise-linear CDF on (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Psi {
    x: Vec<f64>,
    p: Vec<f64>,
}

pub const PSI_KNOTS: usize = 1024;

impl Psi {
    pub fn identity() -> Self {
        Psi {
            x: vec![0.0, 1.0],
            p: vec![0.0, 1.0],
        }
    }

    /// Knots from a sample of values in (0, 1). Duplicate knot locations are
    /// dropped so the result is strictly increasing.
    pub fn from_sample(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InvalidInput("empty sample for marginal CDF".into()));
        }
        let mut xs = sample.to_vec();
        xs.sort_by(f64::total_cmp);
        if xs[0] == xs[xs.len() - 1] {
            return Err(Error::InvalidInput("degenerate sample: all values equal".into()));
        }
        let m = xs.len();
        let interior = PSI_KNOTS - 2;
        let mut x = vec![0.0];
        let mut p = vec![0.0];
        for j in 1..=interior {
            let level = j as f64 / (interior + 1) as f64;
            let idx = ((level * m as f64).ceil() as usize).clamp(1, m) - 1;
            let q = xs[idx];
            if q > *x.last().unwrap() && q < 1.0 {
                x.push(q);
                p.push(level);
            }
        }
        x.push(1.0);
        p.push(1.0);
        if x.len() < 3 {
            return Err(Error::InvalidInput("degenerate sample: too few distinct knots".into()));
        }
        Ok(Psi { x, p })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.p)
    }

    pub fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let k = self.x.partition_point(|&x| x <= u).clamp(1, self.x.len() - 1);
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let (p0, p1) = (self.p[k - 1], self.p[k]);
        p0 + (p1 - p0) * (u - x0) / (x1 - x0)
    }

    /// Inverse map, clamped to the open unit interval.
    pub fn inverse(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        let k = self.p.partition_point(|&q| q <= p).clamp(1, self.p.len() - 1);
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let (p0, p1) = (self.p[k - 1], self.p[k]);
        x0 + (x1 - x0) * (p - p0) / (p1 - p0)
    }

    /// Log of the piecewise-constant density at `u`.
    pub fn ln_density(&self, u: f64) -> f64 {
        let k = self.x.partition_point(|&x| x <= u).clamp(1, self.x.len() - 1);
        ((self.p[k] - self.p[k - 1]) / (self.x[k] - self.x[k - 1])).ln()
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.x.windows(2).all(|w| w[1] > w[0]) && self.p.windows(2).all(|w| w[1] > w[0])
    }

    /// Largest deviation from the identity over the knots.
    pub fn sup_distance_to_identity(&self) -> f64 {
        self.x.iter().zip(&self.p).map(|(x, p)| (x - p).abs()).fold(0.0, f64::max)
    }
}

/// Stationary marginal CDF of `U_t` estimated from `m` simulated values.
pub fn stationary_marginal_cdf(spec: &ModelSpec, m: usize, seed: u64) -> Result<Psi> {
    if spec.needs_climate() {
        return Err(Error::InvalidSpec("stationary margin needs a homogeneous model".into()));
    }
    if m < 10_000 {
        return Err(Error::InvalidInput(format!("need at least 10000 draws for the margin, got {m}")));
    }
    let path = simulate(spec, m, DEFAULT_BURN_IN, seed, None)?;
    Psi::from_sample(&path.u)
}

pub fn apply_psi(psi: &Psi, u: &[f64]) -> Vec<f64> {
    u.iter().map(|&x| clamp_unit(psi.eval(x))).collect()
}
