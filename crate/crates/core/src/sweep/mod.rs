//! Regime diagrams: evaluate a property on a grid over the parameter cone,
//! pull out the boundary between two labels and fit it by a power law
//! `delta = kappa * eps^p` (or by `log eps = c - H/(2 sigma^2)` for the
//! exponentially thin wedges).
//!
//! Grid point `(i, j)` has flat index `j * nx + i` and seed
//! `derive_seed(base_seed, index)`, so the labels do not depend on how many
//! threads evaluate them.

mod problems;
mod render;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::derive_seed;
use crate::stats::linear_fit;

pub use problems::*;
pub use render::*;

/// Below this many boundary points a fit is flagged `low_support`.
pub const MIN_FIT_SUPPORT: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Cell {
    Label(String),
    /// The property has no value here (e.g. on an unclassified axis).
    NotDefined,
    /// The evaluator could not decide (CI straddling a threshold, or an error).
    Ambiguous,
}

impl Cell {
    pub fn label(s: impl Into<String>) -> Self {
        Cell::Label(s.into())
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            Cell::Label(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Label(s) => f.write_str(s),
            Cell::NotDefined => f.write_str("NotDefined"),
            Cell::Ambiguous => f.write_str("Ambiguous"),
        }
    }
}

/// Labels on the boundary of the cone, which a log grid never reaches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisLabels {
    /// `delta = 0`, `eps > 0`.
    pub eps_axis: Cell,
    /// `eps = 0`, `delta > 0`.
    pub delta_axis: Cell,
    pub origin: Cell,
}

impl Default for AxisLabels {
    fn default() -> Self {
        AxisLabels { eps_axis: Cell::NotDefined, delta_axis: Cell::NotDefined, origin: Cell::NotDefined }
    }
}

pub trait PropertyEvaluator: Sync {
    fn name(&self) -> &str;
    /// Closed list of labels the evaluator may return.
    fn label_set(&self) -> Vec<String>;
    fn evaluate(&self, x: f64, y: f64, seed: u64) -> Result<Cell>;
    fn axis_labels(&self) -> AxisLabels {
        AxisLabels::default()
    }
    /// Names of the horizontal and vertical parameters.
    fn axis_names(&self) -> (String, String) {
        ("eps".into(), "delta".into())
    }
}

type EvalFn = dyn Fn(f64, f64, u64) -> Result<Cell> + Send + Sync;

/// Evaluator built from a closure.
pub struct FnEvaluator {
    pub name: String,
    pub labels: Vec<String>,
    pub axes: AxisLabels,
    pub axis_names: (String, String),
    f: Box<EvalFn>,
}

impl FnEvaluator {
    pub fn new<F>(name: &str, labels: &[&str], f: F) -> Self
    where
        F: Fn(f64, f64, u64) -> Result<Cell> + Send + Sync + 'static,
    {
        FnEvaluator {
            name: name.into(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            axes: AxisLabels::default(),
            axis_names: ("eps".into(), "delta".into()),
            f: Box::new(f),
        }
    }

    pub fn with_axes(mut self, axes: AxisLabels) -> Self {
        self.axes = axes;
        self
    }

    pub fn with_axis_names(mut self, x: &str, y: &str) -> Self {
        self.axis_names = (x.into(), y.into());
        self
    }
}

impl PropertyEvaluator for FnEvaluator {
    fn name(&self) -> &str {
        &self.name
    }
    fn label_set(&self) -> Vec<String> {
        self.labels.clone()
    }
    fn evaluate(&self, x: f64, y: f64, seed: u64) -> Result<Cell> {
        (self.f)(x, y, seed)
    }
    fn axis_labels(&self) -> AxisLabels {
        self.axes.clone()
    }
    fn axis_names(&self) -> (String, String) {
        self.axis_names.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub log: bool,
}

fn spaced(lo: f64, hi: f64, n: usize, log: bool) -> Vec<f64> {
    if n == 1 {
        return vec![if log { (lo * hi).sqrt() } else { 0.5 * (lo + hi) }];
    }
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            if i == n - 1 {
                hi
            } else if log {
                (lo.ln() + s * (hi.ln() - lo.ln())).exp()
            } else {
                lo + s * (hi - lo)
            }
        })
        .collect()
}

impl GridSpec {
    pub fn log(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Self {
        GridSpec { x_range, y_range, nx, ny, log: true }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi), n) in [("x", self.x_range, self.nx), ("y", self.y_range, self.ny)] {
            // a single-point axis may have a degenerate range
            if !(lo > 0.0 && hi.is_finite() && (hi > lo || (hi == lo && n == 1))) {
                return Err(Error::InvalidInput(format!("{name} range ({lo}, {hi}) must be positive and increasing")));
            }
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidInput("grid needs at least one point per axis".into()));
        }
        Ok(())
    }

    pub fn x_values(&self) -> Vec<f64> {
        spaced(self.x_range.0, self.x_range.1, self.nx, self.log)
    }

    pub fn y_values(&self) -> Vec<f64> {
        spaced(self.y_range.0, self.y_range.1, self.ny, self.log)
    }

    /// The same ranges at `factor` times the resolution per axis.
    pub fn refined(&self, factor: usize) -> Self {
        GridSpec { nx: (self.nx - 1) * factor + 1, ny: (self.ny - 1) * factor + 1, ..*self }
    }
}

/// `lo:hi:NXxNY` (same range on both axes) or `xlo:xhi:ylo:yhi:NXxNY`. A
/// trailing `:lin` selects linear spacing.
impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cannot parse grid '{s}' (expected lo:hi:NXxNY)"));
        let mut parts: Vec<&str> = s.split(':').collect();
        let mut log = true;
        if parts.last() == Some(&"lin") {
            log = false;
            parts.pop();
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let (x_range, y_range, dims) = match parts.as_slice() {
            [lo, hi, dims] => {
                let r = (num(lo)?, num(hi)?);
                (r, r, *dims)
            }
            [xlo, xhi, ylo, yhi, dims] => ((num(xlo)?, num(xhi)?), (num(ylo)?, num(yhi)?), *dims),
            _ => return Err(bad()),
        };
        let (nx, ny) = dims.split_once(['x', 'X']).ok_or_else(bad)?;
        let nx = nx.trim().parse().map_err(|_| bad())?;
        let ny = ny.trim().parse().map_err(|_| bad())?;
        let g = GridSpec { x_range, y_range, nx, ny, log };
        g.validate()?;
        Ok(g)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}:{}x{}", self.x_range.0, self.x_range.1, self.y_range.0, self.y_range.1, self.nx, self.ny)?;
        if !self.log {
            f.write_str(":lin")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub kappa: f64,
    pub p: f64,
    pub p_se: f64,
    /// Standard error of `log kappa`.
    pub log_kappa_se: f64,
    /// RMS residual in `log y`.
    pub residual: f64,
    pub support: usize,
    pub low_support: bool,
}

impl PowerLawFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.kappa * x.powf(self.p)
    }
}

/// `log x = c - H / (2 y^2)` with `x = eps`, `y = sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpLawFit {
    pub c: f64,
    pub h: f64,
    pub h_se: f64,
    /// RMS residual in `log x`.
    pub residual: f64,
    pub support: usize,
    pub low_support: bool,
}

impl ExpLawFit {
    /// The boundary as `y` in terms of `x` (only where `c > log x`).
    pub fn eval(&self, x: f64) -> f64 {
        (self.h / (2.0 * (self.c - x.ln()))).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Fit {
    PowerLaw(PowerLawFit),
    ExpLaw(ExpLawFit),
}

impl Fit {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Fit::PowerLaw(f) => f.eval(x),
            Fit::ExpLaw(f) => f.eval(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitModel {
    PowerLaw,
    ExpLaw,
}

impl FromStr for FitModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "powerlaw" => Ok(FitModel::PowerLaw),
            "explaw" => Ok(FitModel::ExpLaw),
            _ => Err(Error::InvalidInput(format!("unknown fit model '{s}' (powerlaw|explaw)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramMeta {
    pub base_seed: u64,
    /// FNV-1a hash of the evaluator name, grid and seed.
    pub config_hash: String,
    /// One entry per cell whose evaluation failed.
    pub log: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationDiagram {
    pub name: String,
    pub axis_names: (String, String),
    pub grid: GridSpec,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub label_set: Vec<String>,
    /// `labels[j][i]` is the cell at `(x[i], y[j])`.
    pub labels: Vec<Vec<Cell>>,
    pub axis_labels: AxisLabels,
    pub fits: Vec<Fit>,
    pub meta: DiagramMeta,
}

impl ClassificationDiagram {
    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.labels[j][i]
    }

    /// Distinct cells in the interior, in order.
    pub fn distinct(&self) -> BTreeSet<Cell> {
        self.labels.iter().flatten().cloned().collect()
    }

    pub fn contains_label(&self, label: &str) -> bool {
        self.labels.iter().flatten().any(|c| c.as_label() == Some(label))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Io(e.to_string()))
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Evaluate on every grid point. `parallelism = 0` uses the global pool.
pub fn sweep(evaluator: &dyn PropertyEvaluator, grid: &GridSpec, base_seed: u64, parallelism: usize) -> Result<ClassificationDiagram> {
    grid.validate()?;
    let xs = grid.x_values();
    let ys = grid.y_values();
    let label_set = evaluator.label_set();
    let n = grid.nx * grid.ny;
    let eval_one = |idx: usize| -> (Cell, Option<String>) {
        let (i, j) = (idx % grid.nx, idx / grid.nx);
        let seed = derive_seed(base_seed, idx as u64);
        match evaluator.evaluate(xs[i], ys[j], seed) {
            Ok(Cell::Label(l)) if !label_set.contains(&l) => {
                (Cell::Ambiguous, Some(format!("({}, {}): label '{l}' outside the label set", xs[i], ys[j])))
            }
            Ok(c) => (c, None),
            Err(e) => (Cell::Ambiguous, Some(format!("({}, {}): {}: {e}", xs[i], ys[j], e.name()))),
        }
    };
    let cells: Vec<(Cell, Option<String>)> = if parallelism == 0 {
        (0..n).into_par_iter().map(eval_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        pool.install(|| (0..n).into_par_iter().map(eval_one).collect())
    };
    let mut log = Vec::new();
    let mut labels = vec![Vec::with_capacity(grid.nx); grid.ny];
    for (idx, (c, msg)) in cells.into_iter().enumerate() {
        labels[idx / grid.nx].push(c);
        log.extend(msg);
    }
    let name = evaluator.name().to_string();
    let hash_src = serde_json::to_string(&(&name, grid, base_seed)).map_err(|e| Error::Io(e.to_string()))?;
    Ok(ClassificationDiagram {
        name,
        axis_names: evaluator.axis_names(),
        grid: *grid,
        x: xs,
        y: ys,
        label_set,
        labels,
        axis_labels: evaluator.axis_labels(),
        fits: Vec::new(),
        meta: DiagramMeta { base_seed, config_hash: format!("{:016x}", fnv1a(hash_src.as_bytes())), log },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub x: f64,
    pub y: f64,
    /// The two bracketing grid values.
    pub y_lo: f64,
    pub y_hi: f64,
}

/// Per column, the first place where `label_a` (below) is followed by
/// `label_b` (above), skipping `Ambiguous` and `NotDefined` cells. The
/// point sits at the geometric mean of the two bracketing `y` values.
pub fn extract_boundary(d: &ClassificationDiagram, label_a: &str, label_b: &str) -> Result<Vec<BoundaryPoint>> {
    if !d.contains_label(label_a) || !d.contains_label(label_b) {
        return Err(Error::NoBoundary);
    }
    let mut out = Vec::new();
    for i in 0..d.x.len() {
        let column: Vec<(f64, &str)> = (0..d.y.len()).filter_map(|j| d.cell(i, j).as_label().map(|l| (d.y[j], l))).collect();
        if let Some(w) = column.windows(2).find(|w| w[0].1 == label_a && w[1].1 == label_b) {
            let (lo, hi) = (w[0].0, w[1].0);
            out.push(BoundaryPoint { x: d.x[i], y: (lo * hi).sqrt(), y_lo: lo, y_hi: hi });
        }
    }
    if out.is_empty() {
        return Err(Error::NoBoundary);
    }
    Ok(out)
}

fn check_points(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::InvalidInput("fit points must be positive and finite".into()));
    }
    Ok(())
}

/// Least squares on `log y = log kappa + p log x`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    check_points(points)?;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let f = linear_fit(&lx, &ly).ok_or_else(|| Error::Degenerate("all points share one x value".into()))?;
    Ok(PowerLawFit {
        kappa: f.intercept.exp(),
        p: f.slope,
        p_se: f.slope_se,
        log_kappa_se: f.intercept_se,
        residual: f.rms,
        support: points.len(),
        low_support: points.len() < MIN_FIT_SUPPORT,
    })
}

/// Least squares on `log x = c - (H/2) / y^2`.
pub fn fit_exp_law(points: &[(f64, f64)]) -> Result<ExpLawFit> {
    check_points(points)?;
    let inv: Vec<f64> = points.iter().map(|p| 1.0 / (p.1 * p.1)).collect();
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let f = linear_fit(&inv, &lx).ok_or_else(|| Error::Degenerate("all points share one y value".into()))?;
    Ok(ExpLawFit {
        c: f.intercept,
        h: -2.0 * f.slope,
        h_se: 2.0 * f.slope_se,
        residual: f.rms,
        support: points.len(),
        low_support: points.len() < MIN_FIT_SUPPORT,
    })
}

pub fn fit_boundary(points: &[BoundaryPoint], model: FitModel) -> Result<Fit> {
    let pts: Vec<(f64, f64)> = points.iter().map(|b| (b.x, b.y)).collect();
    Ok(match model {
        FitModel::PowerLaw => Fit::PowerLaw(fit_power_law(&pts)?),
        FitModel::ExpLaw => Fit::ExpLaw(fit_exp_law(&pts)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(p: f64) -> FnEvaluator {
        FnEvaluator::new("synthetic", &["below", "above"], move |x, y, _| {
            Ok(Cell::label(if y > x.powf(p) { "above" } else { "below" }))
        })
    }

    #[test]
    fn grid_parsing() {
        let g: GridSpec = "0.01:1:20x20".parse().unwrap();
        assert_eq!((g.nx, g.ny, g.x_range, g.log), (20, 20, (0.01, 1.0), true));
        let g: GridSpec = "0.1:1:0.001:0.1:5x7:lin".parse().unwrap();
        assert_eq!((g.nx, g.ny, g.y_range, g.log), (5, 7, (0.001, 0.1), false));
        assert_eq!(g.to_string().parse::<GridSpec>().unwrap(), g);
        assert!("1:0.1:3x3".parse::<GridSpec>().is_err());
        assert!("0.1:1:3".parse::<GridSpec>().is_err());
        let v = GridSpec::log((0.01, 1.0), (0.01, 1.0), 3, 3).x_values();
        assert!((v[1] - 0.1).abs() < 1e-15 && v[2] == 1.0);
    }

    #[test]
    fn synthetic_square_law() {
        let grid = GridSpec::log((0.01, 1.0), (1e-4, 1.0), 20, 60);
        let d = sweep(&synthetic(2.0), &grid, 1, 0).unwrap();
        let pts = extract_boundary(&d, "below", "above").unwrap();
        let cell = (grid.y_range.1 / grid.y_range.0).ln() / (grid.ny - 1) as f64;
        for b in &pts {
            assert!((b.y.ln() - 2.0 * b.x.ln()).abs() <= cell, "{b:?}");
        }
        let fit = fit_power_law(&pts.iter().map(|b| (b.x, b.y)).collect::<Vec<_>>()).unwrap();
        assert!((fit.p - 2.0).abs() < 0.05, "{fit:?}");
        assert!(!fit.low_support);
    }

    #[test]
    fn fit_errors_and_exp_law() {
        assert!(matches!(fit_power_law(&[(1.0, 1.0), (2.0, 2.0)]), Err(Error::InvalidInput(_))));
        assert!(matches!(fit_power_law(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]), Err(Error::Degenerate(_))));
        assert!(matches!(fit_power_law(&[(1.0, 1.0), (-1.0, 2.0), (1.0, 3.0)]), Err(Error::InvalidInput(_))));
        let pts: Vec<(f64, f64)> = [0.2, 0.3, 0.4, 0.5, 0.6].iter().map(|&s: &f64| ((0.5 - 0.3 / (s * s)).exp(), s)).collect();
        let f = fit_exp_law(&pts).unwrap();
        assert!((f.h - 0.6).abs() < 1e-10 && (f.c - 0.5).abs() < 1e-10);
        assert!((f.eval(pts[2].0) - 0.4).abs() < 1e-10);
    }

    #[test]
    fn errors_become_ambiguous() {
        let e = FnEvaluator::new("fails", &["a"], |x, _, _| {
            if x > 0.5 {
                Err(Error::Ambiguous)
            } else if x > 0.2 {
                Ok(Cell::label("z"))
            } else {
                Ok(Cell::label("a"))
            }
        });
        let d = sweep(&e, &GridSpec::log((0.1, 1.0), (0.1, 1.0), 4, 2), 0, 1).unwrap();
        assert_eq!(d.labels[0][0], Cell::label("a"));
        assert_eq!(d.labels[0][3], Cell::Ambiguous);
        assert_eq!(d.meta.log.len(), 6);
        assert!(matches!(extract_boundary(&d, "a", "b"), Err(Error::NoBoundary)));
    }

    #[test]
    fn ambiguous_cells_are_skipped() {
        let e = FnEvaluator::new("gap", &["lo", "hi"], |x, y, _| {
            Ok(if (y / x).ln().abs() < 0.2 { Cell::Ambiguous } else if y > x { Cell::label("hi") } else { Cell::label("lo") })
        });
        let d = sweep(&e, &GridSpec::log((0.01, 1.0), (0.01, 1.0), 10, 40), 0, 0).unwrap();
        let pts = extract_boundary(&d, "lo", "hi").unwrap();
        // the end columns have no cell on one side of the diagonal
        assert_eq!(pts.len(), 8);
        for b in pts {
            assert!(b.y_lo < b.x && b.x < b.y_hi);
        }
    }

    #[test]
    fn json_round_trip() {
        let grid = GridSpec::log((0.013, 0.97), (0.011, 1.3), 7, 5);
        let mut d = sweep(&synthetic(1.5), &grid, 99, 0).unwrap();
        let pts = extract_boundary(&d, "below", "above").unwrap();
        d.fits.push(fit_boundary(&pts, FitModel::PowerLaw).unwrap());
        let back = ClassificationDiagram::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(back, d);
    }
}
