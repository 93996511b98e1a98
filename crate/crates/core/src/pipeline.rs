//! Rating-panel and climate ingestion, event flags, and aggregation to the
//! annual activity series.
//!
//! Ratings CSV (UTF-8, header row, comma-delimited, RFC 4180 quoting), with
//! column names configurable through [`RatingSchema`]:
//!
//! | column     | content                                               |
//! |------------|-------------------------------------------------------|
//! | `country`  | country code, non-empty                               |
//! | `agency`   | Fitch, Moody's, S&P or anything else (`other`)        |
//! | `date`     | action date, `YYYY-MM-DD`                             |
//! | `rating`   | integer grade `1..=K`, 1 best and `K` default         |
//! | `previous` | optional; integer grade before the action             |
//! | `term`     | optional; rows outside `long_term_values` are dropped |
//!
//! Climate CSV: `country,year,value`; an empty or `NA` value is missing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowError};
use crate::header::Header;
use crate::transform::{parse_col, read_columns};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Agency {
    Fitch,
    Moodys,
    SP,
    Other,
}

impl Agency {
    pub fn parse(s: &str) -> Option<Agency> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        match key.as_str() {
            "" => None,
            "fitch" => Some(Agency::Fitch),
            "moodys" | "moody" => Some(Agency::Moodys),
            "sp" | "standardpoors" | "standardandpoors" => Some(Agency::SP),
            _ => Some(Agency::Other),
        }
    }
}

impl fmt::Display for Agency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Agency::Fitch => "Fitch",
            Agency::Moodys => "Moodys",
            Agency::SP => "SP",
            Agency::Other => "other",
        })
    }
}

/// Column mapping and cleaning rules for the ratings file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RatingSchema {
    pub country: String,
    pub agency: String,
    pub date: String,
    pub rating: String,
    pub previous: String,
    pub term: String,
    /// Accepted values of the term column, compared case-insensitively.
    pub long_term_values: Vec<String>,
    /// Number of grades `K`.
    pub scale_max: u32,
    /// Notches for a severe downgrade.
    pub severe_threshold: u32,
    /// Largest tolerated share of unparseable rows.
    pub max_bad_fraction: f64,
}

impl Default for RatingSchema {
    fn default() -> Self {
        Self {
            country: "country".into(),
            agency: "agency".into(),
            date: "date".into(),
            rating: "rating".into(),
            previous: "previous".into(),
            term: "term".into(),
            long_term_values: vec!["long_term".into(), "long-term".into(), "lt".into()],
            scale_max: 22,
            severe_threshold: 3,
            max_bad_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingRecord {
    pub country: String,
    pub agency: Agency,
    pub date: NaiveDate,
    pub rating: u32,
    /// As given, or the pair's preceding rating when the file has none.
    pub previous: Option<u32>,
    pub downgrade: bool,
    pub upgrade: bool,
    pub severe: bool,
    /// Source line (header is line 1).
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub rows: usize,
    pub bad: Vec<RowError>,
    pub filtered_short_term: usize,
    pub collapsed_same_day: usize,
    pub previous_inferred: usize,
}

impl IngestReport {
    pub fn describe(&self, header: &mut Header) {
        header
            .push("rows_read", self.rows)
            .push("rows_bad", self.bad.len())
            .push("rows_filtered_short_term", self.filtered_short_term)
            .push("rows_collapsed_same_day", self.collapsed_same_day)
            .push("previous_inferred", self.previous_inferred);
    }

    /// Bad rows as `line,message` CSV.
    pub fn write_bad_rows<W: Write>(rows: &[RowError], out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["line", "message"])?;
        for r in rows {
            wtr.write_record([r.line.to_string(), r.message.clone()])?;
        }
        wtr.flush().map_err(|e| Error::io("<stream>", e))?;
        Ok(())
    }
}

/// Cleaned records sorted by country, agency and date.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingPanel {
    pub records: Vec<RatingRecord>,
    pub report: IngestReport,
}

fn read_text<R: Read>(mut input: R) -> Result<String> {
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(|e| Error::io("<stream>", e))?;
    Ok(text)
}

/// Number of leading `#` lines and the remaining text.
fn skip_header_block(text: &str) -> (usize, &str) {
    let mut offset = 0;
    let mut rest = text;
    while rest.starts_with('#') {
        offset += 1;
        rest = rest.split_once('\n').map_or("", |(_, r)| r);
    }
    (offset, rest)
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

fn check_bad(bad: Vec<RowError>, total: usize, max_fraction: f64) -> Result<Vec<RowError>> {
    if !bad.is_empty() && bad.len() as f64 > max_fraction * total as f64 {
        return Err(Error::TooManyBadRows {
            bad: bad.len(),
            total,
            rows: bad,
        });
    }
    Ok(bad)
}

struct Columns {
    idx: Vec<Option<usize>>,
}

impl Columns {
    fn find(headers: &csv::StringRecord, names: &[(&str, bool)]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|(n, required)| {
                let i = headers.iter().position(|h| h == *n);
                match (i, required) {
                    (None, true) => Err(Error::Parse(format!("missing column '{n}'"))),
                    _ => Ok(i),
                }
            })
            .collect::<Result<_>>()?;
        Ok(Columns { idx })
    }

    fn get<'a>(&self, rec: &'a csv::StringRecord, j: usize) -> Option<&'a str> {
        self.idx[j].and_then(|i| rec.get(i)).map(str::trim)
    }
}

pub fn ingest_ratings(path: &Path, schema: &RatingSchema) -> Result<RatingPanel> {
    ingest_ratings_from(open(path)?, schema)
}

pub fn ingest_ratings_from<R: Read>(input: R, schema: &RatingSchema) -> Result<RatingPanel> {
    if schema.scale_max < 2 || schema.severe_threshold < 1 || !(0.0..1.0).contains(&schema.max_bad_fraction) {
        return Err(Error::InvalidInput(format!("invalid rating schema {schema:?}")));
    }
    let text = read_text(input)?;
    let (offset, body) = skip_header_block(&text);
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(body.as_bytes());
    let cols = Columns::find(
        rdr.headers()?,
        &[
            (&schema.country, true),
            (&schema.agency, true),
            (&schema.date, true),
            (&schema.rating, true),
            (&schema.previous, false),
            (&schema.term, false),
        ],
    )?;
    let long_term: Vec<String> = schema.long_term_values.iter().map(|s| s.to_ascii_lowercase()).collect();
    let k = schema.scale_max;
    let grade = |s: &str| -> std::result::Result<u32, String> {
        let g: u32 = s.parse().map_err(|_| format!("rating '{s}' is not an integer"))?;
        if (1..=k).contains(&g) {
            Ok(g)
        } else {
            Err(format!("rating {g} outside 1..={k}"))
        }
    };

    let mut report = IngestReport::default();
    let mut bad = Vec::new();
    let mut raw = Vec::new();
    for rec in rdr.records() {
        report.rows += 1;
        let line = offset + report.rows + 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                bad.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if let Some(t) = cols.get(&rec, 5) {
            if !long_term.contains(&t.to_ascii_lowercase()) {
                report.filtered_short_term += 1;
                continue;
            }
        }
        let parsed = (|| -> std::result::Result<RatingRecord, String> {
            let country = cols.get(&rec, 0).filter(|s| !s.is_empty()).ok_or("empty country")?;
            let agency_s = cols.get(&rec, 1).unwrap_or("");
            let agency = Agency::parse(agency_s).ok_or("empty agency")?;
            let date_s = cols.get(&rec, 2).unwrap_or("");
            let date = NaiveDate::parse_from_str(date_s, "%Y-%m-%d").map_err(|_| format!("date '{date_s}' is not YYYY-MM-DD"))?;
            let rating = grade(cols.get(&rec, 3).unwrap_or(""))?;
            let previous = match cols.get(&rec, 4) {
                None | Some("") => None,
                Some(s) => Some(grade(s)?),
            };
            Ok(RatingRecord {
                country: country.to_string(),
                agency,
                date,
                rating,
                previous,
                downgrade: false,
                upgrade: false,
                severe: false,
                line,
            })
        })();
        match parsed {
            Ok(r) => raw.push(r),
            Err(message) => bad.push(RowError { line, message }),
        }
    }
    report.bad = check_bad(bad, report.rows, schema.max_bad_fraction)?;

    // Same-day actions collapse to the last in file order.
    let mut by_key: BTreeMap<(String, Agency, NaiveDate), RatingRecord> = BTreeMap::new();
    for r in raw {
        let key = (r.country.clone(), r.agency, r.date);
        if by_key.insert(key, r).is_some() {
            report.collapsed_same_day += 1;
        }
    }

    let mut records: Vec<RatingRecord> = by_key.into_values().collect();
    let mut last: Option<(String, Agency, u32)> = None;
    for r in &mut records {
        if r.previous.is_none() {
            if let Some((c, a, g)) = &last {
                if *c == r.country && *a == r.agency {
                    r.previous = Some(*g);
                    report.previous_inferred += 1;
                }
            }
        }
        if let Some(p) = r.previous {
            r.downgrade = r.rating > p;
            r.upgrade = r.rating < p;
            r.severe = r.rating >= p + schema.severe_threshold;
        }
        last = Some((r.country.clone(), r.agency, r.rating));
    }
    Ok(RatingPanel { records, report })
}

impl RatingPanel {
    pub fn downgrades(&self) -> usize {
        self.records.iter().filter(|r| r.downgrade).count()
    }

    pub fn upgrades(&self) -> usize {
        self.records.iter().filter(|r| r.upgrade).count()
    }

    /// Snapshot CSV `country,agency,date,rating,previous,downgrade,upgrade,severe`.
    pub fn write_csv<W: Write>(&self, mut out: W, header: &Header) -> Result<()> {
        header.write_to(&mut out).map_err(|e| Error::io("<stream>", e))?;
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["country", "agency", "date", "rating", "previous", "downgrade", "upgrade", "severe"])?;
        let b = |x: bool| if x { "1" } else { "0" }.to_string();
        for r in &self.records {
            wtr.write_record([
                r.country.clone(),
                r.agency.to_string(),
                r.date.format("%Y-%m-%d").to_string(),
                r.rating.to_string(),
                r.previous.map_or_else(String::new, |p| p.to_string()),
                b(r.downgrade),
                b(r.upgrade),
                b(r.severe),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<stream>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdConvention {
    /// Divisor `n - 1`.
    #[default]
    Sample,
    /// Divisor `n`.
    Population,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClimateSchema {
    pub country: String,
    pub year: String,
    pub value: String,
    pub sd: SdConvention,
    pub max_bad_fraction: f64,
}

impl Default for ClimateSchema {
    fn default() -> Self {
        Self {
            country: "country".into(),
            year: "year".into(),
            value: "value".into(),
            sd: SdConvention::default(),
            max_bad_fraction: 0.01,
        }
    }
}

/// Standardized carbon intensity by country and year.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClimatePanel {
    pub z: BTreeMap<(String, i32), f64>,
    pub mean: f64,
    pub sd: f64,
    pub convention: SdConvention,
    pub missing: usize,
    pub bad: Vec<RowError>,
}

pub fn ingest_climate(path: &Path, schema: &ClimateSchema) -> Result<ClimatePanel> {
    ingest_climate_from(open(path)?, schema)
}

pub fn ingest_climate_from<R: Read>(input: R, schema: &ClimateSchema) -> Result<ClimatePanel> {
    let text = read_text(input)?;
    let (offset, body) = skip_header_block(&text);
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(body.as_bytes());
    let cols = Columns::find(rdr.headers()?, &[(&schema.country, true), (&schema.year, true), (&schema.value, true)])?;
    let mut raw: BTreeMap<(String, i32), f64> = BTreeMap::new();
    let mut bad = Vec::new();
    let mut missing = 0;
    let mut rows = 0;
    for rec in rdr.records() {
        rows += 1;
        let line = offset + rows + 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                bad.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let parsed = (|| -> std::result::Result<Option<(String, i32, f64)>, String> {
            let country = cols.get(&rec, 0).filter(|s| !s.is_empty()).ok_or("empty country")?;
            let ys = cols.get(&rec, 1).unwrap_or("");
            let year: i32 = ys.parse().map_err(|_| format!("year '{ys}' is not an integer"))?;
            let vs = cols.get(&rec, 2).unwrap_or("");
            if vs.is_empty() || vs.eq_ignore_ascii_case("na") {
                return Ok(None);
            }
            let v: f64 = vs.parse().map_err(|_| format!("value '{vs}' is not a number"))?;
            if !v.is_finite() {
                return Err(format!("value '{vs}' is not finite"));
            }
            Ok(Some((country.to_string(), year, v)))
        })();
        match parsed {
            Ok(Some((c, y, v))) => {
                if raw.insert((c.clone(), y), v).is_some() {
                    bad.push(RowError {
                        line,
                        message: format!("duplicate entry for {c} {y}"),
                    });
                }
            }
            Ok(None) => missing += 1,
            Err(message) => bad.push(RowError { line, message }),
        }
    }
    let bad = check_bad(bad, rows, schema.max_bad_fraction)?;
    let n = raw.len();
    let divisor = match schema.sd {
        SdConvention::Sample => n as f64 - 1.0,
        SdConvention::Population => n as f64,
    };
    if n < 2 {
        return Err(Error::InvalidInput(format!("{n} climate value(s); cannot standardize")));
    }
    let mean = raw.values().sum::<f64>() / n as f64;
    let sd = (raw.values().map(|v| (v - mean).powi(2)).sum::<f64>() / divisor).sqrt();
    if !(sd > 1e-12 * mean.abs().max(1.0)) {
        return Err(Error::InvalidInput("climate values have zero variance".into()));
    }
    let z = raw.into_iter().map(|(k, v)| (k, (v - mean) / sd)).collect();
    Ok(ClimatePanel {
        z,
        mean,
        sd,
        convention: schema.sd,
        missing,
        bad,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AggregateOptions {
    /// Least share of rated countries with climate data for `C_t` to be reported.
    pub min_coverage: f64,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        Self { min_coverage: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityRow {
    pub year: i32,
    pub d: i64,
    pub u_raw: i64,
    pub a: i64,
    /// Country-agency pairs with a rating in force.
    pub n: i64,
    pub c: Option<f64>,
    pub c_lag: Option<f64>,
}

/// Annual series over a contiguous run of calendar years.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ActivitySeries {
    pub rows: Vec<ActivityRow>,
}

/// Sums flags by calendar year; years without events are zero rows.
///
/// A pair counts as rated from the year of its first record on. `C_t` is the
/// mean z-score over rated countries with data in year `t`, reported only
/// when they make up at least `min_coverage` of the rated countries.
pub fn aggregate(panel: &RatingPanel, climate: Option<&ClimatePanel>, opts: &AggregateOptions) -> Result<ActivitySeries> {
    if panel.records.is_empty() {
        return Err(Error::InvalidInput("rating panel is empty".into()));
    }
    if !(0.0..=1.0).contains(&opts.min_coverage) {
        return Err(Error::InvalidInput(format!("coverage {} outside [0, 1]", opts.min_coverage)));
    }
    let first = panel.records.iter().map(|r| r.date.year()).min().expect("nonempty");
    let last = panel.records.iter().map(|r| r.date.year()).max().expect("nonempty");
    let mut entry: BTreeMap<(&str, Agency), i32> = BTreeMap::new();
    for r in &panel.records {
        let y = entry.entry((r.country.as_str(), r.agency)).or_insert(r.date.year());
        *y = (*y).min(r.date.year());
    }
    let mut rows = Vec::with_capacity((last - first + 1) as usize);
    let mut prev_c = None;
    for year in first..=last {
        let in_year = panel.records.iter().filter(|r| r.date.year() == year);
        let (d, u) = in_year.fold((0, 0), |(d, u), r| (d + r.downgrade as i64, u + r.upgrade as i64));
        let rated: Vec<(&str, Agency)> = entry.iter().filter(|(_, &y)| y <= year).map(|(k, _)| *k).collect();
        let countries: BTreeSet<&str> = rated.iter().map(|(c, _)| *c).collect();
        let c = climate.and_then(|cp| {
            let vals: Vec<f64> = countries
                .iter()
                .filter_map(|c| cp.z.get(&(c.to_string(), year)).copied())
                .collect();
            let enough = !vals.is_empty() && vals.len() as f64 >= opts.min_coverage * countries.len() as f64;
            enough.then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        });
        rows.push(ActivityRow {
            year,
            d,
            u_raw: u,
            a: d + u,
            n: rated.len() as i64,
            c,
            c_lag: prev_c,
        });
        prev_c = c;
    }
    Ok(ActivitySeries { rows })
}

pub const ACTIVITY_COLUMNS: [&str; 7] = ["year", "D", "U_raw", "A", "N", "C", "C_lag"];

impl ActivitySeries {
    pub fn years(&self) -> Vec<i64> {
        self.rows.iter().map(|r| r.year as i64).collect()
    }

    pub fn counts(&self) -> Vec<i64> {
        self.rows.iter().map(|r| r.a).collect()
    }

    /// The lagged covariate aligned with the counts, `c[t] = C_{t-1}`.
    pub fn climate_lag(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.c_lag).collect()
    }

    /// Lagged covariate with every value present, or the first missing year.
    pub fn complete_climate_lag(&self) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                r.c_lag
                    .ok_or_else(|| Error::InvalidInput(format!("lagged climate value missing for {}", r.year)))
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W, header: &Header) -> Result<()> {
        header.write_to(&mut out).map_err(|e| Error::io("<stream>", e))?;
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(ACTIVITY_COLUMNS)?;
        let opt = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
        for r in &self.rows {
            wtr.write_record([
                r.year.to_string(),
                r.d.to_string(),
                r.u_raw.to_string(),
                r.a.to_string(),
                r.n.to_string(),
                opt(r.c),
                opt(r.c_lag),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<stream>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<(Header, Self)> {
        let text = read_text(input)?;
        let header = Header::parse(&text);
        let t = read_columns(&text, &ACTIVITY_COLUMNS)?;
        let opt = |col: &[String], name: &str| -> Result<Vec<Option<f64>>> {
            col.iter()
                .enumerate()
                .map(|(i, s)| {
                    if s.is_empty() {
                        Ok(None)
                    } else {
                        s.parse()
                            .map(Some)
                            .map_err(|_| Error::Parse(format!("column '{name}' row {}: cannot parse '{s}'", i + 1)))
                    }
                })
                .collect()
        };
        let year: Vec<i32> = parse_col(&t[0], "year")?;
        let d: Vec<i64> = parse_col(&t[1], "D")?;
        let u: Vec<i64> = parse_col(&t[2], "U_raw")?;
        let a: Vec<i64> = parse_col(&t[3], "A")?;
        let n: Vec<i64> = parse_col(&t[4], "N")?;
        let c = opt(&t[5], "C")?;
        let c_lag = opt(&t[6], "C_lag")?;
        let rows: Vec<ActivityRow> = (0..year.len())
            .map(|i| ActivityRow {
                year: year[i],
                d: d[i],
                u_raw: u[i],
                a: a[i],
                n: n[i],
                c: c[i],
                c_lag: c_lag[i],
            })
            .collect();
        for (i, r) in rows.iter().enumerate() {
            if r.a != r.d + r.u_raw || r.a < 0 || r.d < 0 || r.u_raw < 0 {
                return Err(Error::InvalidInput(format!("row {}: A must equal D + U_raw >= 0", i + 1)));
            }
            if i > 0 && r.year != rows[i - 1].year + 1 {
                return Err(Error::InvalidInput(format!("row {}: years are not contiguous", i + 1)));
            }
        }
        if rows.is_empty() {
            return Err(Error::InvalidInput("activity series is empty".into()));
        }
        Ok((header, ActivitySeries { rows }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel(text: &str) -> RatingPanel {
        ingest_ratings_from(text.as_bytes(), &RatingSchema::default()).unwrap()
    }

    #[test]
    fn same_day_collapse_keeps_last() {
        let p = panel("country,agency,date,rating,previous\nAR,Fitch,2001-03-01,5,3\nAR,Fitch,2001-03-01,7,3\n");
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.records[0].rating, 7);
        assert_eq!(p.report.collapsed_same_day, 1);
    }

    #[test]
    fn flags_follow_ordering() {
        let p = panel("country,agency,date,rating,previous\nAR,Fitch,2001-03-01,5,3\nBR,SP,2001-01-01,2,4\n");
        let ar = &p.records[0];
        assert!(ar.downgrade && !ar.upgrade && !ar.severe);
        let br = &p.records[1];
        assert!(br.upgrade && !br.downgrade);
    }

    #[test]
    fn previous_inferred_within_pair() {
        let p = panel("country,agency,date,rating\nAR,Fitch,2002-01-01,9\nAR,Fitch,2001-01-01,5\nAR,SP,2002-01-01,3\n");
        let r: Vec<_> = p.records.iter().map(|r| (r.previous, r.severe)).collect();
        assert_eq!(r, vec![(None, false), (Some(5), true), (None, false)]);
    }

    #[test]
    fn short_term_rows_dropped_and_bad_rows_limited() {
        let p = panel("country,agency,date,rating,term\nAR,Fitch,2001-01-01,5,LT\nAR,Fitch,2001-02-01,5,ST\n");
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.report.filtered_short_term, 1);
        let err = ingest_ratings_from(
            "country,agency,date,rating\nAR,Fitch,2001-01-01,5\nAR,Fitch,20xx,5\n".as_bytes(),
            &RatingSchema::default(),
        )
        .unwrap_err();
        match err {
            Error::TooManyBadRows { bad, total, rows } => {
                assert_eq!((bad, total, rows[0].line), (1, 2, 3));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn climate_standardization() {
        let text = "country,year,value\nA,2000,1\nA,2001,2\nA,2002,3\n";
        let c = ingest_climate_from(text.as_bytes(), &ClimateSchema::default()).unwrap();
        let z: Vec<f64> = c.z.values().copied().collect();
        assert_eq!(z, vec![-1.0, 0.0, 1.0]);
        let pop = ClimateSchema {
            sd: SdConvention::Population,
            ..Default::default()
        };
        let c = ingest_climate_from(text.as_bytes(), &pop).unwrap();
        assert!((c.z[&("A".to_string(), 2002)] - 1.5f64.sqrt()).abs() < 1e-15);
        let flat = "country,year,value\nA,2000,4\nA,2001,4\n";
        assert!(ingest_climate_from(flat.as_bytes(), &ClimateSchema::default()).is_err());
    }

    #[test]
    fn aggregation_is_contiguous() {
        let p = panel(
            "country,agency,date,rating,previous\n\
             AR,Fitch,1999-01-01,5,3\nAR,SP,1999-02-01,6,3\nBR,SP,1999-03-01,6,4\n\
             BR,Fitch,1999-04-01,2,4\nCL,Fitch,1999-05-01,1,2\nCL,Fitch,2001-05-01,3,1\n",
        );
        let s = aggregate(&p, None, &AggregateOptions::default()).unwrap();
        assert_eq!(s.years(), vec![1999, 2000, 2001]);
        assert_eq!(s.counts(), vec![5, 0, 1]);
        assert_eq!(s.rows[0].n, 5);
        let mut buf = Vec::new();
        s.write_csv(&mut buf, &Header::new()).unwrap();
        let (_, back) = ActivitySeries::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }
}
