//! Time series representation, sliding-window statistics and pairwise
//! subsequence distances.
//!
//! All window indices are 0-based. (The usual textbook notation for
//! subsequences is 1-based; subtract one when comparing.)

use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard deviation below which a window is treated as flat.
pub const DEGENERATE_SIGMA: f64 = 1e-12;

/// An ordered list of finite samples.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Samples of the window starting at `start`.
    pub fn window(&self, start: usize, len: usize) -> &[f64] {
        &self.values[start..start + len]
    }

    /// Number of windows of length `len` (0 when the series is shorter).
    pub fn window_count(&self, len: usize) -> usize {
        (self.values.len() + 1).saturating_sub(len)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMode {
    /// z-normalized Euclidean distance.
    #[default]
    Znorm,
    /// Plain Euclidean distance on the raw samples.
    Raw,
}

impl DistanceMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceMode::Znorm => "znorm",
            DistanceMode::Raw => "raw",
        }
    }
}

impl fmt::Display for DistanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "znorm" | "znorm-euclidean" => Ok(DistanceMode::Znorm),
            "raw" | "raw-euclidean" => Ok(DistanceMode::Raw),
            other => Err(Error::InvalidParam(format!("unknown distance mode `{other}`"))),
        }
    }
}

/// Window length, distance mode and exclusion radius.
///
/// Two windows `i` and `j` may be compared only when `|i - j| >= exclusion`.
/// The default radius `ceil(l/2)` forbids pairs overlapping by more than
/// half a window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub len: usize,
    pub mode: DistanceMode,
    pub exclusion: usize,
}

impl WindowSpec {
    pub fn new(len: usize, mode: DistanceMode) -> Result<Self> {
        Self::with_exclusion(len, mode, len.div_ceil(2))
    }

    pub fn with_exclusion(len: usize, mode: DistanceMode, exclusion: usize) -> Result<Self> {
        let min_len = match mode {
            DistanceMode::Raw => 1,
            DistanceMode::Znorm => 3,
        };
        if len < min_len {
            return Err(Error::InvalidWindow(format!(
                "{mode} mode requires window length >= {min_len}, got {len}"
            )));
        }
        if exclusion < 1 {
            return Err(Error::InvalidWindow("exclusion radius must be >= 1".into()));
        }
        Ok(Self { len, mode, exclusion })
    }

    pub fn znorm(len: usize) -> Result<Self> {
        Self::new(len, DistanceMode::Znorm)
    }

    pub fn raw(len: usize) -> Result<Self> {
        Self::new(len, DistanceMode::Raw)
    }

    /// Checks that `ts` has at least two windows and returns their count.
    pub fn windows_in(&self, ts: &TimeSeries) -> Result<usize> {
        let w = ts.window_count(self.len);
        if w < 2 {
            return Err(Error::TooShort(format!(
                "{} samples give {w} windows of length {}; at least 2 required",
                ts.len(),
                self.len
            )));
        }
        Ok(w)
    }

    /// Whether windows `i` and `j` are far enough apart to be compared.
    #[inline]
    pub fn admissible(&self, i: usize, j: usize) -> bool {
        i.abs_diff(j) >= self.exclusion
    }
}

/// Per-window mean and population standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowStats {
    pub len: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub degenerate: Vec<bool>,
}

impl WindowStats {
    pub fn window_count(&self) -> usize {
        self.mean.len()
    }
}

/// Mean and standard deviation of every window of length `len`.
///
/// Each window is summed twice (mean, then centred squares), which keeps the
/// variance accurate for series with a large offset.
pub fn rolling_stats(ts: &TimeSeries, len: usize) -> Result<WindowStats> {
    if len == 0 {
        return Err(Error::InvalidWindow("window length must be positive".into()));
    }
    if len > ts.len() {
        return Err(Error::TooShort(format!(
            "series too short: {} samples for window length {len}",
            ts.len()
        )));
    }
    let w = ts.window_count(len);
    let lf = len as f64;
    let mut mean = Vec::with_capacity(w);
    let mut std = Vec::with_capacity(w);
    let mut degenerate = Vec::with_capacity(w);
    for win in ts.values().windows(len) {
        let mu = win.iter().sum::<f64>() / lf;
        let var = win.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / lf;
        let sigma = var.sqrt();
        mean.push(mu);
        std.push(sigma);
        degenerate.push(sigma < DEGENERATE_SIGMA);
    }
    Ok(WindowStats { len, mean, std, degenerate })
}

/// Precomputed state for repeated pairwise distance queries on one series.
#[derive(Clone, Debug)]
pub struct DistanceContext<'a> {
    series: &'a TimeSeries,
    spec: WindowSpec,
    stats: WindowStats,
}

impl<'a> DistanceContext<'a> {
    pub fn new(series: &'a TimeSeries, spec: WindowSpec) -> Result<Self> {
        let stats = rolling_stats(series, spec.len)?;
        Ok(Self { series, spec, stats })
    }

    pub fn series(&self) -> &'a TimeSeries {
        self.series
    }

    pub fn spec(&self) -> WindowSpec {
        self.spec
    }

    pub fn stats(&self) -> &WindowStats {
        &self.stats
    }

    pub fn window_count(&self) -> usize {
        self.stats.window_count()
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.window_count() {
            return Err(Error::IndexOutOfRange { index: i, windows: self.window_count() });
        }
        Ok(())
    }

    pub fn is_degenerate(&self, i: usize) -> bool {
        self.stats.degenerate[i]
    }

    /// Distance between windows `i` and `j` in the context's mode.
    ///
    /// In z-normalized mode a flat window is at infinite distance from
    /// everything, itself included.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        match self.spec.mode {
            DistanceMode::Raw => self.raw_distance(i, j),
            DistanceMode::Znorm => self.znorm_distance(i, j),
        }
    }

    pub fn raw_distance(&self, i: usize, j: usize) -> f64 {
        let l = self.spec.len;
        let a = self.series.window(i, l);
        let b = self.series.window(j, l);
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    /// Euclidean distance between the z-normalized windows, which equals
    /// `sqrt(2l(1 - r))` for Pearson correlation `r`.
    pub fn znorm_distance(&self, i: usize, j: usize) -> f64 {
        if self.stats.degenerate[i] || self.stats.degenerate[j] {
            return f64::INFINITY;
        }
        let l = self.spec.len;
        let (mi, si) = (self.stats.mean[i], self.stats.std[i]);
        let (mj, sj) = (self.stats.mean[j], self.stats.std[j]);
        let a = self.series.window(i, l);
        let b = self.series.window(j, l);
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let diff = (x - mi) / si - (y - mj) / sj;
                diff * diff
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Pearson correlation of windows `i` and `j`, recovered from the
    /// z-normalized distance as `1 - d^2 / (2l)`. `None` if either window is flat.
    pub fn correlation(&self, i: usize, j: usize) -> Option<f64> {
        if self.stats.degenerate[i] || self.stats.degenerate[j] {
            return None;
        }
        let d = self.znorm_distance(i, j);
        let r = 1.0 - d * d / (2.0 * self.spec.len as f64);
        Some(r.clamp(-1.0, 1.0))
    }

    /// The window as an `l`-vector in the mode's space: z-normalized in
    /// znorm mode, raw samples otherwise.
    pub fn window_vector(&self, i: usize) -> Vec<f64> {
        let win = self.series.window(i, self.spec.len);
        match self.spec.mode {
            DistanceMode::Raw => win.to_vec(),
            DistanceMode::Znorm => {
                let (mu, sigma) = (self.stats.mean[i], self.stats.std[i]);
                if self.stats.degenerate[i] {
                    vec![0.0; win.len()]
                } else {
                    win.iter().map(|v| (v - mu) / sigma).collect()
                }
            }
        }
    }
}

/// Distance between windows `i` and `j` of `ts` under `spec`.
///
/// Builds the rolling statistics on every call; use [`DistanceContext`] for
/// repeated queries.
pub fn pair_distance(ts: &TimeSeries, i: usize, j: usize, spec: WindowSpec) -> Result<f64> {
    let ctx = DistanceContext::new(ts, spec)?;
    ctx.check_index(i)?;
    ctx.check_index(j)?;
    Ok(ctx.distance(i, j))
}

/// Input layout for [`load_series`].
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum InputFormat {
    /// One value per line; a first line reading `value` is skipped.
    #[default]
    Plain,
    /// Comma-separated records. The column is chosen by header name or
    /// 0-based position; a non-numeric first record is treated as a header.
    Csv { column: Option<String> },
}

fn parse_value(token: &str, line: usize) -> Result<f64> {
    let token = token.trim();
    let value: f64 = token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("not a number: `{token}`"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse { line, message: format!("non-finite value `{token}`") });
    }
    Ok(value)
}

/// Reads a series from `reader`. Errors name the 1-based line number.
pub fn load_series<R: Read>(reader: R, format: &InputFormat) -> Result<TimeSeries> {
    let values = match format {
        InputFormat::Plain => load_plain(reader)?,
        InputFormat::Csv { column } => load_csv(reader, column.as_deref())?,
    };
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    TimeSeries::new(values)
}

pub fn load_series_path(path: impl AsRef<Path>, format: &InputFormat) -> Result<TimeSeries> {
    let file = std::fs::File::open(path)?;
    load_series(file, format)
}

fn load_plain<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let token = line.trim();
        if token.is_empty() || (lineno == 1 && token.eq_ignore_ascii_case("value")) {
            continue;
        }
        values.push(parse_value(token, lineno)?);
    }
    Ok(values)
}

fn load_csv<R: Read>(reader: R, column: Option<&str>) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut col_idx: Option<usize> = match column {
        Some(c) => c.parse().ok(),
        None => Some(0),
    };
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(n + 1),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(n + 1);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if n == 0 {
            let header_like = match col_idx {
                Some(i) => rec.get(i).is_some_and(|f| f.parse::<f64>().is_err()),
                None => true,
            };
            if header_like {
                if col_idx.is_none() {
                    let name = column.unwrap_or_default();
                    col_idx = Some(rec.iter().position(|f| f == name).ok_or_else(|| {
                        Error::Parse { line, message: format!("no column named `{name}`") }
                    })?);
                }
                continue;
            }
        }
        let i = col_idx.ok_or_else(|| Error::Parse {
            line,
            message: "column name given but the input has no header".into(),
        })?;
        let field = rec.get(i).ok_or_else(|| Error::Parse {
            line,
            message: format!("missing column {i}"),
        })?;
        values.push(parse_value(field, line)?);
    }
    Ok(values)
}
