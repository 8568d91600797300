//! Uniformly sampled, time-bounded signals and piecewise-constant inputs.
//!
//! Every continuous-time operation here (shift, restrict, concatenation) is
//! defined on the sample grid only. Times that are supposed to be grid points
//! are snapped to the nearest sample index when they lie within a relative
//! tolerance of [`GRID_TOL`].

use std::fmt::Write as _;
use std::io::{Read, Write};

use thiserror::Error;

/// Relative tolerance for deciding whether a time lies on the sample grid.
pub const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("csv: {0}")]
    Csv(String),
}

fn invalid(msg: impl Into<String>) -> SignalError {
    SignalError::InvalidArgument(msg.into())
}

/// Returns the grid index `k` with `t ≈ k·step`, or `None` if `t` is negative
/// or off the grid.
pub fn grid_index(t: f64, step: f64) -> Option<usize> {
    if !t.is_finite() || !step.is_finite() || step <= 0.0 {
        return None;
    }
    let k = t / step;
    let r = k.round();
    if r < 0.0 || (k - r).abs() > GRID_TOL * r.abs().max(1.0) {
        return None;
    }
    Some(r as usize)
}

fn same_step(a: f64, b: f64) -> bool {
    (a - b).abs() <= GRID_TOL * a.abs().max(b.abs())
}

/// An `m`-dimensional signal sampled at `t_j = j·step`, `j = 0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    step: f64,
    var_names: Vec<String>,
    /// Row-major samples, `len() * dim()` entries.
    data: Vec<f64>,
}

impl Signal {
    pub fn new(step: f64, var_names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, SignalError> {
        let dim = var_names.len();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (j, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(invalid(format!("sample {j} has {} entries, expected {dim}", row.len())));
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(step, var_names, data)
    }

    pub fn from_flat(step: f64, var_names: Vec<String>, data: Vec<f64>) -> Result<Self, SignalError> {
        if !(step.is_finite() && step > 0.0) {
            return Err(invalid(format!("step must be positive and finite, got {step}")));
        }
        if var_names.is_empty() {
            return Err(invalid("signal needs at least one variable"));
        }
        let dim = var_names.len();
        if data.is_empty() || data.len() % dim != 0 {
            return Err(invalid(format!("{} values cannot form non-empty samples of dimension {dim}", data.len())));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value in sample {} ({})", pos / dim, var_names[pos % dim])));
        }
        Ok(Self { step, var_names, data })
    }

    /// A signal of identical samples over `[0, horizon]`.
    pub fn constant(step: f64, var_names: Vec<String>, value: &[f64], horizon: f64) -> Result<Self, SignalError> {
        let n = grid_index(horizon, step)
            .ok_or_else(|| invalid(format!("horizon {horizon} is not a multiple of step {step}")))?;
        let data = value.iter().copied().cycle().take(value.len() * (n + 1)).collect();
        Self::from_flat(step, var_names, data)
    }

    pub fn dim(&self) -> usize {
        self.var_names.len()
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        (self.len() - 1) as f64 * self.step
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_names.iter().position(|v| v == name)
    }

    pub fn sample(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.data[j * d..(j + 1) * d]
    }

    pub fn samples(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim())
    }

    pub fn column(&self, var: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(var).step_by(self.dim()).copied()
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    fn index_of(&self, t: f64, what: &str) -> Result<usize, SignalError> {
        let k = grid_index(t, self.step)
            .ok_or_else(|| invalid(format!("{what} = {t} is not on the sample grid (step {})", self.step)))?;
        if k >= self.len() {
            return Err(invalid(format!("{what} = {t} exceeds horizon {}", self.horizon())));
        }
        Ok(k)
    }

    fn slice(&self, from: usize, to_inclusive: usize) -> Signal {
        let d = self.dim();
        Signal {
            step: self.step,
            var_names: self.var_names.clone(),
            data: self.data[from * d..(to_inclusive + 1) * d].to_vec(),
        }
    }

    /// `(self · other)(t)`: `self(t)` on `[0, T]`, `other(t − T)` afterwards.
    /// The sample of `other` at its own time 0 coincides with `self`'s last
    /// sample and is dropped.
    pub fn concat(&self, other: &Signal) -> Result<Signal, SignalError> {
        if self.var_names != other.var_names {
            return Err(invalid(format!(
                "cannot concatenate signals over {:?} and {:?}",
                self.var_names, other.var_names
            )));
        }
        if !same_step(self.step, other.step) {
            return Err(invalid(format!("step mismatch in concatenation: {} vs {}", self.step, other.step)));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data[other.dim()..]);
        Ok(Signal { step: self.step, var_names: self.var_names.clone(), data })
    }

    /// `w|[t1,t2]`, re-based to start at time 0.
    pub fn restrict(&self, t1: f64, t2: f64) -> Result<Signal, SignalError> {
        if !(t1 >= 0.0 && t1 < t2) {
            return Err(invalid(format!("restriction needs 0 <= t1 < t2, got [{t1}, {t2}]")));
        }
        let i1 = self.index_of(t1, "t1")?;
        let i2 = self.index_of(t2, "t2")?;
        if i1 >= i2 {
            return Err(invalid(format!("[{t1}, {t2}] collapses to a single sample")));
        }
        Ok(self.slice(i1, i2))
    }

    /// The `t`-shift `w^t(t') = w(t + t')`.
    pub fn shift(&self, t: f64) -> Result<Signal, SignalError> {
        let i = self.index_of(t, "shift")?;
        Ok(self.shift_index(i))
    }

    pub fn shift_index(&self, i: usize) -> Signal {
        self.slice(i, self.len() - 1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push('t');
        for v in &self.var_names {
            out.push(',');
            out.push_str(v);
        }
        out.push('\n');
        for (j, row) in self.samples().enumerate() {
            out.push_str(&format_time(self.time(j)));
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }

    /// Parses `t,<var1>,...` CSV. The step is inferred from the first two
    /// rows and every later time stamp must sit on that grid.
    pub fn from_csv<R: Read>(r: R) -> Result<Signal, SignalError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rdr.headers().map_err(|e| SignalError::Csv(e.to_string()))?.clone();
        if headers.len() < 2 || &headers[0] != "t" {
            return Err(SignalError::Csv("header must be `t,<var1>,...,<varN>`".into()));
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut times = Vec::new();
        let mut data = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| SignalError::Csv(e.to_string()))?;
            if rec.len() != names.len() + 1 {
                return Err(SignalError::Csv(format!("row {} has {} fields", line + 1, rec.len())));
            }
            let parse =
                |s: &str| s.parse::<f64>().map_err(|_| SignalError::Csv(format!("row {}: bad number `{s}`", line + 1)));
            times.push(parse(&rec[0])?);
            for field in rec.iter().skip(1) {
                data.push(parse(field)?);
            }
        }
        if times.len() < 2 {
            return Err(SignalError::Csv("need at least two samples to infer the step".into()));
        }
        if times[0].abs() > GRID_TOL {
            return Err(SignalError::Csv(format!("first time stamp must be 0, got {}", times[0])));
        }
        let step = times[1] - times[0];
        if !(step > 0.0) {
            return Err(SignalError::Csv("time stamps must increase".into()));
        }
        for (j, &t) in times.iter().enumerate() {
            if grid_index(t, step) != Some(j) {
                return Err(SignalError::Csv(format!("time stamp {t} in row {} is off the grid", j + 1)));
            }
        }
        Signal::from_flat(step, names, data)
    }
}

/// At least twelve significant digits.
fn format_time(t: f64) -> String {
    if t == 0.0 {
        return "0".into();
    }
    let decimals = (11 - t.abs().log10().floor() as i32).max(0) as usize;
    let s = format!("{t:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// A piecewise-constant input with `K` equal segments over `[0, T]`;
/// row `i` of `levels` holds the value on `[iT/K, (i+1)T/K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantInput {
    horizon: f64,
    levels: Vec<Vec<f64>>,
}

impl PiecewiseConstantInput {
    pub fn new(horizon: f64, levels: Vec<Vec<f64>>) -> Result<Self, SignalError> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid(format!("horizon must be positive, got {horizon}")));
        }
        let dims = levels.first().map_or(0, Vec::len);
        if dims == 0 {
            return Err(invalid("need at least one control point of positive dimension"));
        }
        if levels.iter().any(|row| row.len() != dims) {
            return Err(invalid("all control points must have the same dimension"));
        }
        if levels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("input levels must be finite"));
        }
        Ok(Self { horizon, levels })
    }

    /// Builds from a flat row-major `K × M` vector.
    pub fn from_flat(horizon: f64, dims: usize, flat: &[f64]) -> Result<Self, SignalError> {
        if dims == 0 || flat.is_empty() || flat.len() % dims != 0 {
            return Err(invalid(format!("{} values do not split into rows of {dims}", flat.len())));
        }
        Self::new(horizon, flat.chunks(dims).map(<[f64]>::to_vec).collect())
    }

    pub fn control_points(&self) -> usize {
        self.levels.len()
    }

    pub fn dims(&self) -> usize {
        self.levels[0].len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn flat(&self) -> Vec<f64> {
        self.levels.iter().flatten().copied().collect()
    }

    /// Value of the induced signal at time `t`.
    pub fn value_at(&self, t: f64) -> &[f64] {
        let k = self.control_points();
        let seg = ((t * k as f64 / self.horizon).floor().max(0.0) as usize).min(k - 1);
        &self.levels[seg]
    }

    /// Samples the input on the grid `j·step` with default names `u1..uM`.
    pub fn realize(&self, step: f64) -> Result<Signal, SignalError> {
        let names = (1..=self.dims()).map(|i| format!("u{i}")).collect();
        self.realize_named(step, names)
    }

    pub fn realize_named(&self, step: f64, names: Vec<String>) -> Result<Signal, SignalError> {
        if names.len() != self.dims() {
            return Err(invalid(format!("{} names for {} input dimensions", names.len(), self.dims())));
        }
        let k = self.control_points();
        let per_segment = grid_index(self.horizon / k as f64, step).filter(|&r| r > 0).ok_or_else(|| {
            invalid(format!("segment length {} is not a positive multiple of step {step}", self.horizon / k as f64))
        })?;
        let n = k * per_segment;
        let mut data = Vec::with_capacity((n + 1) * self.dims());
        for j in 0..=n {
            data.extend_from_slice(&self.levels[(j / per_segment).min(k - 1)]);
        }
        Signal::from_flat(step, names, data)
    }
}
