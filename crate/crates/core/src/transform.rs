//! Mixed-difference (randomized probability integral) transform of counts.
//!
//! A count `a` with marginal mass `p(a)` and left limit `F(a-)` is mapped to
//! `u = F(a-) + V p(a)`, with `V` uniform (randomized mode) or `1/2` (mid
//! mode). Under the true marginal the randomized transform is exactly
//! Uniform(0, 1).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::copulas::clamp_unit;
use crate::error::{Error, Result};
use crate::header::Header;
use crate::rng::UniformStream;
use crate::specfun::{ln_gamma, std_normal_quantile};

/// Finite discrete distribution on integer support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMarginal {
    support: Vec<i64>,
    prob: Vec<f64>,
    /// Values added by [`DiscreteMarginal::extend_to_cover`].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tail_added: Vec<i64>,
    #[serde(skip)]
    left: Vec<f64>,
}

impl DiscreteMarginal {
    /// Relative frequencies of the observed values.
    pub fn empirical(a: &[i64]) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidInput("empirical marginal of an empty series".into()));
        }
        let mut sorted = a.to_vec();
        sorted.sort_unstable();
        let mut support = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for v in sorted {
            if support.last() == Some(&v) {
                *counts.last_mut().unwrap() += 1;
            } else {
                support.push(v);
                counts.push(1);
            }
        }
        let n = a.len() as f64;
        let prob = counts.iter().map(|&c| c as f64 / n).collect();
        Ok(Self::build(support, prob))
    }

    /// An explicit mass function; masses are renormalized when their sum is
    /// within 1e-6 of one.
    pub fn from_pmf(support: Vec<i64>, prob: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != prob.len() {
            return Err(Error::InvalidInput("support and masses must be nonempty and of equal length".into()));
        }
        if support.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("support must be strictly increasing".into()));
        }
        if prob.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidInput("masses must be finite and nonnegative".into()));
        }
        let total: f64 = prob.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!("masses sum to {total}, not 1")));
        }
        let prob = prob.iter().map(|p| p / total).collect();
        Ok(Self::build(support, prob))
    }

    /// Poisson(lambda) on `0..=K` with `K` large enough that the omitted
    /// upper tail is below 1e-16, renormalized.
    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("Poisson mean must be positive, got {lambda}")));
        }
        let k_max = (lambda + 40.0 * lambda.sqrt() + 40.0).ceil() as i64;
        let support: Vec<i64> = (0..=k_max).collect();
        let prob: Vec<f64> = support.iter().map(|&k| poisson_ln_pmf(k, lambda).exp()).collect();
        let total: f64 = prob.iter().sum();
        let prob = prob.iter().map(|p| p / total).collect();
        Ok(Self::build(support, prob))
    }

    fn build(support: Vec<i64>, prob: Vec<f64>) -> Self {
        let mut m = DiscreteMarginal {
            support,
            prob,
            tail_added: Vec::new(),
            left: Vec::new(),
        };
        m.refresh();
        m
    }

    fn refresh(&mut self) {
        let mut acc = 0.0;
        self.left = self
            .prob
            .iter()
            .map(|p| {
                let l = acc;
                acc += p;
                l
            })
            .collect();
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.prob
    }

    fn index(&self, a: i64) -> Option<usize> {
        self.support.binary_search(&a).ok()
    }

    pub fn pmf(&self, a: i64) -> f64 {
        self.index(a).map_or(0.0, |i| self.prob[i])
    }

    /// Left limit `F(a-) = P(A < a)`.
    pub fn cdf_left(&self, a: i64) -> f64 {
        let i = self.support.partition_point(|&s| s < a);
        if i < self.left.len() {
            self.left[i]
        } else {
            1.0
        }
    }

    pub fn cdf(&self, a: i64) -> f64 {
        self.cdf_left(a) + self.pmf(a)
    }

    /// Adds mass `1/(2T)` for each value of `values` outside the support,
    /// then renormalizes. Returns the values that were added.
    pub fn extend_to_cover(&mut self, values: &[i64], t_len: usize) -> Vec<i64> {
        let mut added: Vec<i64> = values.iter().copied().filter(|v| self.index(*v).is_none()).collect();
        added.sort_unstable();
        added.dedup();
        if added.is_empty() {
            return added;
        }
        let extra = 1.0 / (2.0 * t_len.max(1) as f64);
        for &v in &added {
            let i = self.support.partition_point(|&s| s < v);
            self.support.insert(i, v);
            self.prob.insert(i, extra);
        }
        let total: f64 = self.prob.iter().sum();
        for p in &mut self.prob {
            *p /= total;
        }
        self.tail_added.extend_from_slice(&added);
        self.tail_added.sort_unstable();
        self.refresh();
        added
    }

    /// Mean of the distribution, used to invert the transform approximately.
    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.prob).map(|(&s, p)| s as f64 * p).sum()
    }

    /// Generalized inverse `min{a : F(a) >= u}`.
    pub fn quantile(&self, u: f64) -> i64 {
        let mut acc = 0.0;
        for (s, p) in self.support.iter().zip(&self.prob) {
            acc += p;
            if acc >= u {
                return *s;
            }
        }
        *self.support.last().unwrap()
    }

    /// Single-line JSON, suitable for a header entry.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("marginal serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: DiscreteMarginal =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("marginal: {e}")))?;
        // Validate, but keep the stored masses bit-for-bit.
        DiscreteMarginal::from_pmf(m.support.clone(), m.prob.clone())?;
        let mut out = Self::build(m.support, m.prob);
        out.tail_added = m.tail_added;
        Ok(out)
    }
}

pub fn poisson_ln_pmf(k: i64, lambda: f64) -> f64 {
    if k < 0 {
        return f64::NEG_INFINITY;
    }
    let k = k as f64;
    if lambda == 0.0 {
        return if k == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k * lambda.ln() - lambda - ln_gamma(k + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PitMode {
    Randomized,
    Mid,
}

impl std::str::FromStr for PitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "randomized" => Ok(PitMode::Randomized),
            "mid" => Ok(PitMode::Mid),
            other => Err(Error::InvalidSpec(format!("unknown transform mode '{other}'"))),
        }
    }
}

impl PitMode {
    pub fn name(self) -> &'static str {
        match self {
            PitMode::Randomized => "randomized",
            PitMode::Mid => "mid",
        }
    }
}

/// Transformed series with everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSeries {
    /// Time labels (years, or 1..n).
    pub t: Vec<i64>,
    pub a: Vec<i64>,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub marginal: DiscreteMarginal,
    pub seed: u64,
    pub mode: PitMode,
}

pub fn mixed_difference(a: &[i64], marginal: &DiscreteMarginal, seed: u64, mode: PitMode) -> Result<UniformSeries> {
    let mut rng = UniformStream::new(seed);
    let mut v = Vec::with_capacity(a.len());
    let mut u = Vec::with_capacity(a.len());
    for (t, &x) in a.iter().enumerate() {
        let p = marginal.pmf(x);
        if p <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "count {x} at position {} is outside the marginal support",
                t + 1
            )));
        }
        let vt = match mode {
            PitMode::Randomized => rng.next_open01(),
            PitMode::Mid => 0.5,
        };
        v.push(vt);
        u.push(clamp_unit(marginal.cdf_left(x) + vt * p));
    }
    Ok(UniformSeries {
        t: (1..=a.len() as i64).collect(),
        a: a.to_vec(),
        v,
        u,
        marginal: marginal.clone(),
        seed,
        mode,
    })
}

/// `Z_t = Phi^{-1}(U_t)`.
pub fn gaussianize(u: &[f64]) -> Result<Vec<f64>> {
    u.iter().map(|&x| std_normal_quantile(x)).collect()
}

impl UniformSeries {
    /// Header entries describing the transform.
    pub fn describe(&self, header: &mut Header) {
        header
            .push("transform_mode", self.mode.name())
            .push("transform_seed", self.seed)
            .push("marginal", self.marginal.to_json());
        if !self.marginal.tail_added.is_empty() {
            header.push("marginal_tail_rule", "unseen counts given mass 1/(2T) and renormalized");
        }
    }

    /// CSV with columns `t,a,v,u` after the header block.
    pub fn write_csv<W: Write>(&self, mut out: W, header: &Header) -> Result<()> {
        let mut header = header.clone();
        self.describe(&mut header);
        header.write_to(&mut out).map_err(|e| Error::io("<stream>", e))?;
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "a", "v", "u"])?;
        for i in 0..self.u.len() {
            wtr.write_record([
                self.t[i].to_string(),
                self.a[i].to_string(),
                self.v[i].to_string(),
                self.u[i].to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<stream>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input
            .read_to_string(&mut text)
            .map_err(|e| Error::io("<stream>", e))?;
        let header = Header::parse(&text);
        let marginal = DiscreteMarginal::from_json(
            header
                .get("marginal")
                .ok_or_else(|| Error::Parse("uniform series lacks a marginal header entry".into()))?,
        )?;
        let seed = header
            .get("transform_seed")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("uniform series lacks transform_seed".into()))?;
        let mode = header
            .get("transform_mode")
            .ok_or_else(|| Error::Parse("uniform series lacks transform_mode".into()))?
            .parse()?;
        let table = read_columns(&text, &["t", "a", "v", "u"])?;
        Ok(UniformSeries {
            t: parse_col(&table[0], "t")?,
            a: parse_col(&table[1], "a")?,
            v: parse_col(&table[2], "v")?,
            u: parse_col(&table[3], "u")?,
            marginal,
            seed,
            mode,
        })
    }
}

/// The `u` column of any CSV (uniform series or simulated path), with its
/// header block.
pub fn read_u_csv<R: Read>(mut input: R) -> Result<(Header, Vec<f64>)> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| Error::io("<stream>", e))?;
    let header = Header::parse(&text);
    let cols = read_columns(&text, &["u"])?;
    let u: Vec<f64> = parse_col(&cols[0], "u")?;
    if let Some(i) = u.iter().position(|x| !(*x > 0.0 && *x < 1.0)) {
        return Err(Error::InvalidInput(format!("u value {} at row {} is outside (0, 1)", u[i], i + 1)));
    }
    Ok((header, u))
}

pub(crate) fn read_columns(text: &str, names: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| Error::Parse(format!("missing column '{n}'")))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![Vec::new(); names.len()];
    for rec in rdr.records() {
        let rec = rec?;
        for (col, &i) in out.iter_mut().zip(&idx) {
            col.push(rec.get(i).unwrap_or("").to_string());
        }
    }
    Ok(out)
}

pub(crate) fn parse_col<T: std::str::FromStr>(col: &[String], name: &str) -> Result<Vec<T>> {
    col.iter()
        .enumerate()
        .map(|(i, s)| {
            s.parse()
                .map_err(|_| Error::Parse(format!("column '{name}' row {}: cannot parse '{s}'", i + 1)))
        })
        .collect()
}
