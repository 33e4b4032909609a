//! Simulation harness: regularization paths selected on a validation split,
//! scored against a reference minimizer, and an empirical check of how the
//! estimation error scales with `(k*/n) log(p/k*)`.
//!
//! # CSV layouts
//!
//! Table reports have the columns
//!
//! ```text
//! method,loss,n,p,k_star,rho,replication,aggregate,l2_estimation_error,misclassification,selected_eta,degenerate,l2e_stderr,misc_stderr
//! ```
//!
//! with one row per (method, loss, replication) followed by one `aggregate`
//! row per (method, loss). Replication rows leave the two stderr columns
//! empty; aggregate rows leave `replication` empty and report the number of
//! degenerate replications in `degenerate`.
//!
//! Rate reports have the columns
//!
//! ```text
//! method,loss,n,p,k_star,rate,replications,mean_l2_estimation_error,l2e_stderr,slope,slope_stderr
//! ```
//!
//! with one row per grid point; the fitted slope is repeated on every row.
//! Floats use Rust's shortest round-trip formatting.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, ArrayView1};
use rayon::prelude::*;

use crate::datagen::{generate, minimizer_from_sample, stream, ExperimentSpec, Role};
use crate::error::{Error, Result};
use crate::linalg::{mat_vec, norm2};
use crate::losses::{Dataset, LossModel};
use crate::prox::RegWeights;
use crate::smoothing::{SmoothedLoss, DEFAULT_TAU};
use crate::solver::{fit_path, slope_weights_default, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    L1,
    L2,
    Slope,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::L1, Method::L2, Method::Slope];

    pub fn name(self) -> &'static str {
        match self {
            Method::L1 => "l1",
            Method::L2 => "l2",
            Method::Slope => "slope",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Method::L1 => "L1",
            Method::L2 => "L2",
            Method::Slope => "Slope",
        }
    }

    pub fn regularizer(self, p: usize) -> Result<RegWeights> {
        match self {
            Method::L1 => RegWeights::l1(1.0),
            Method::L2 => RegWeights::l2(1.0),
            Method::Slope => RegWeights::slope(slope_weights_default(p)),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" => Ok(Method::L1),
            "l2" => Ok(Method::L2),
            "slope" => Ok(Method::Slope),
            other => Err(Error::Config(format!("unknown method '{other}' (expected l1, l2, slope)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LossKind {
    Svm,
    Logreg,
}

impl LossKind {
    pub const ALL: [LossKind; 2] = [LossKind::Svm, LossKind::Logreg];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Svm => "svm",
            LossKind::Logreg => "logreg",
        }
    }

    fn label(self) -> &'static str {
        match self {
            LossKind::Svm => "SVM",
            LossKind::Logreg => "LR",
        }
    }

    pub fn model(self) -> LossModel {
        match self {
            LossKind::Svm => LossModel::hinge(),
            LossKind::Logreg => LossModel::logistic(),
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "svm" | "hinge" => Ok(LossKind::Svm),
            "logreg" | "logistic" | "lr" => Ok(LossKind::Logreg),
            other => Err(Error::Config(format!("unknown loss '{other}' (expected svm, logreg)"))),
        }
    }
}

/// Path and solver settings shared by every fit in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSettings {
    pub grid_size: usize,
    pub solver: SolverConfig,
}

impl Default for PathSettings {
    fn default() -> Self {
        Self { grid_size: 50, solver: SolverConfig { tau: DEFAULT_TAU, ..SolverConfig::default() } }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableConfig {
    pub spec: ExperimentSpec,
    pub replications: usize,
    pub methods: Vec<Method>,
    pub losses: Vec<LossKind>,
    pub path: PathSettings,
}

impl TableConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.path.solver.validate()?;
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if self.losses.is_empty() {
            return Err(Error::Config("no losses selected".into()));
        }
        if self.path.grid_size < 2 {
            return Err(Error::Config("grid size must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRow {
    pub method: Method,
    pub loss: LossKind,
    pub replication: usize,
    pub l2_estimation_error: f64,
    pub misclassification: f64,
    pub selected_eta: f64,
    /// The selected estimator was the zero vector.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub method: Method,
    pub loss: LossKind,
    pub replications: usize,
    pub l2_estimation_error: f64,
    pub l2e_stderr: f64,
    pub misclassification: f64,
    pub misc_stderr: f64,
    pub selected_eta: f64,
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub spec: ExperimentSpec,
    pub rows: Vec<ReplicationRow>,
    pub aggregates: Vec<AggregateRow>,
}

/// `sign(⟨x, β⟩)` with ties predicted as +1; returns the error rate.
pub fn misclassification(data: &Dataset, beta: ArrayView1<f64>) -> f64 {
    let scores = mat_vec(data.x().view(), beta);
    let wrong = scores
        .iter()
        .zip(data.y().iter())
        .filter(|(&s, &y)| (if s >= 0.0 { 1.0 } else { -1.0 }) != y)
        .count();
    wrong as f64 / data.n() as f64
}

/// Distance between the directions of `estimate` and `reference`. A zero
/// estimate has no direction; it scores `√2` and is flagged.
pub fn l2_estimation_error(estimate: ArrayView1<f64>, reference: ArrayView1<f64>) -> (f64, bool) {
    let ne = norm2(estimate);
    if ne == 0.0 {
        return (std::f64::consts::SQRT_2, true);
    }
    let nr = norm2(reference);
    let d: f64 = estimate
        .iter()
        .zip(reference.iter())
        .map(|(e, r)| (e / ne - r / nr).powi(2))
        .sum();
    (d.sqrt(), false)
}

/// Index of the lowest validation error; ties go to the earlier (larger) η.
pub fn select_index(errors: &[f64]) -> usize {
    let mut best = 0;
    for (i, &e) in errors.iter().enumerate() {
        if e < errors[best] {
            best = i;
        }
    }
    best
}

struct Splits {
    train: Dataset,
    val: Dataset,
    test: Dataset,
}

fn draw_splits(spec: &ExperimentSpec, replication: usize) -> Result<Splits> {
    let rep = replication as u64;
    Ok(Splits {
        train: generate(spec, spec.n, &mut stream(spec.seed, rep, Role::Train))?,
        val: generate(spec, spec.val_size, &mut stream(spec.seed, rep, Role::Validation))?,
        test: generate(spec, spec.test_size, &mut stream(spec.seed, rep, Role::Test))?,
    })
}

fn evaluate_method(
    splits: &Splits,
    reference: &Array1<f64>,
    loss: LossKind,
    method: Method,
    replication: usize,
    settings: &PathSettings,
) -> Result<ReplicationRow> {
    let p = splits.train.p();
    let smoothed = SmoothedLoss::new(loss.model(), settings.solver.tau)?.calibrated(&splits.train)?;
    let reg = method.regularizer(p)?;
    let path = fit_path(&splits.train, &smoothed, &reg, settings.grid_size, &settings.solver)?;
    let val_errors: Vec<f64> = path
        .fits
        .iter()
        .map(|f| misclassification(&splits.val, f.beta.view()))
        .collect();
    let chosen = select_index(&val_errors);
    let beta = &path.fits[chosen].beta;
    let (l2e, degenerate) = l2_estimation_error(beta.view(), reference.view());
    Ok(ReplicationRow {
        method,
        loss,
        replication,
        l2_estimation_error: l2e,
        misclassification: misclassification(&splits.test, beta.view()),
        selected_eta: path.etas[chosen],
        degenerate,
    })
}

fn run_replication(
    spec: &ExperimentSpec,
    replication: usize,
    methods: &[Method],
    losses: &[LossKind],
    settings: &PathSettings,
) -> Result<Vec<ReplicationRow>> {
    let splits = draw_splits(spec, replication)?;
    let mut rows = Vec::with_capacity(methods.len() * losses.len());
    for &loss in losses {
        let reference = minimizer_from_sample(&splits.test, spec.k_star, &loss.model(), settings.solver.tau)?;
        for &method in methods {
            rows.push(evaluate_method(&splits, &reference, loss, method, replication, settings)?);
        }
    }
    Ok(rows)
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn aggregate(rows: &[ReplicationRow], methods: &[Method], losses: &[LossKind]) -> Vec<AggregateRow> {
    let mut out = Vec::new();
    for &loss in losses {
        for &method in methods {
            let group: Vec<&ReplicationRow> =
                rows.iter().filter(|r| r.method == method && r.loss == loss).collect();
            if group.is_empty() {
                continue;
            }
            let l2e: Vec<f64> = group.iter().map(|r| r.l2_estimation_error).collect();
            let misc: Vec<f64> = group.iter().map(|r| r.misclassification).collect();
            let etas: Vec<f64> = group.iter().map(|r| r.selected_eta).collect();
            let (l2_mean, l2_se) = mean_and_stderr(&l2e);
            let (misc_mean, misc_se) = mean_and_stderr(&misc);
            out.push(AggregateRow {
                method,
                loss,
                replications: group.len(),
                l2_estimation_error: l2_mean,
                l2e_stderr: l2_se,
                misclassification: misc_mean,
                misc_stderr: misc_se,
                selected_eta: mean_and_stderr(&etas).0,
                degenerate: group.iter().filter(|r| r.degenerate).count(),
            });
        }
    }
    out
}

/// Runs every (loss, method) pair on `replications` independent draws.
pub fn run_table(cfg: &TableConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let per_rep: Vec<Result<Vec<ReplicationRow>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(&cfg.spec, r, &cfg.methods, &cfg.losses, &cfg.path))
        .collect();
    let mut rows = Vec::new();
    for rep in per_rep {
        rows.extend(rep?);
    }
    // replication-major order from the workers; report method/loss-major
    rows.sort_by_key(|r| (r.loss, r.method, r.replication));
    let aggregates = aggregate(&rows, &cfg.methods, &cfg.losses);
    Ok(MetricsReport { spec: cfg.spec, rows, aggregates })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPoint {
    pub n: usize,
    pub p: usize,
    pub k_star: usize,
}

impl GridPoint {
    /// `(k*/n) log(p/k*)`.
    pub fn rate(&self) -> f64 {
        self.k_star as f64 / self.n as f64 * (self.p as f64 / self.k_star as f64).ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateConfig {
    pub base: ExperimentSpec,
    pub grid: Vec<GridPoint>,
    pub replications: usize,
    pub loss: LossKind,
    pub method: Method,
    pub path: PathSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub point: GridPoint,
    pub rate: f64,
    pub mean_l2e: f64,
    pub l2e_stderr: f64,
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateCheckReport {
    pub method: Method,
    pub loss: LossKind,
    pub points: Vec<RatePoint>,
    pub slope: f64,
    pub slope_stderr: f64,
}

/// Least-squares slope of `ys` on `xs` and its standard error.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let m = xs.len();
    if m != ys.len() {
        return Err(Error::DimensionMismatch { expected: m, got: ys.len() });
    }
    let mut distinct: Vec<f64> = xs.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    distinct.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    if distinct.len() < 4 {
        return Err(Error::DegenerateRegression(format!(
            "need at least 4 distinct rate values, got {}",
            distinct.len()
        )));
    }
    let mx = xs.iter().sum::<f64>() / m as f64;
    let my = ys.iter().sum::<f64>() / m as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (ssr / (m as f64 - 2.0) / sxx).sqrt();
    Ok((slope, stderr))
}

/// Seed for the `index`-th grid point, so points draw independent samples.
pub fn grid_point_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn run_rate_check(cfg: &RateConfig) -> Result<RateCheckReport> {
    cfg.path.solver.validate()?;
    if cfg.replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    let rates: Vec<f64> = cfg.grid.iter().map(GridPoint::rate).collect();
    // refuse before spending any compute on a grid that cannot be regressed
    ols_slope(&rates, &vec![0.0; rates.len()])?;

    let mut points = Vec::with_capacity(cfg.grid.len());
    for (gi, point) in cfg.grid.iter().enumerate() {
        let spec = ExperimentSpec {
            n: point.n,
            p: point.p,
            k_star: point.k_star,
            seed: grid_point_seed(cfg.base.seed, gi),
            ..cfg.base
        };
        spec.validate()?;
        let per_rep: Vec<Result<Vec<ReplicationRow>>> = (0..cfg.replications)
            .into_par_iter()
            .map(|r| run_replication(&spec, r, &[cfg.method], &[cfg.loss], &cfg.path))
            .collect();
        let mut errors = Vec::with_capacity(cfg.replications);
        for rep in per_rep {
            errors.extend(rep?.into_iter().map(|row| row.l2_estimation_error));
        }
        let (mean, se) = mean_and_stderr(&errors);
        points.push(RatePoint { point: *point, rate: point.rate(), mean_l2e: mean, l2e_stderr: se, errors });
    }
    if let Some(bad) = points.iter().find(|pt| !(pt.mean_l2e > 0.0)) {
        return Err(Error::DegenerateRegression(format!(
            "mean error {} at n = {} has no logarithm",
            bad.mean_l2e, bad.point.n
        )));
    }
    let xs: Vec<f64> = points.iter().map(|pt| pt.rate.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|pt| pt.mean_l2e.ln()).collect();
    let (slope, slope_stderr) = ols_slope(&xs, &ys)?;
    Ok(RateCheckReport { method: cfg.method, loss: cfg.loss, points, slope, slope_stderr })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::Config(format!("unknown format '{other}' (expected csv, markdown)"))),
        }
    }
}

/// Something that renders as CSV and as a markdown table.
pub trait Report {
    fn write_csv<W: Write>(&self, out: W) -> Result<()>;
    fn markdown(&self) -> String;
}

pub const TABLE_COLUMNS: [&str; 14] = [
    "method",
    "loss",
    "n",
    "p",
    "k_star",
    "rho",
    "replication",
    "aggregate",
    "l2_estimation_error",
    "misclassification",
    "selected_eta",
    "degenerate",
    "l2e_stderr",
    "misc_stderr",
];

pub const RATE_COLUMNS: [&str; 11] = [
    "method",
    "loss",
    "n",
    "p",
    "k_star",
    "rate",
    "replications",
    "mean_l2_estimation_error",
    "l2e_stderr",
    "slope",
    "slope_stderr",
];

impl Report for MetricsReport {
    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TABLE_COLUMNS)?;
        let s = &self.spec;
        let spec_fields = [s.n.to_string(), s.p.to_string(), s.k_star.to_string(), s.rho.to_string()];
        for r in &self.rows {
            let mut rec = vec![r.method.name().to_string(), r.loss.name().to_string()];
            rec.extend(spec_fields.iter().cloned());
            rec.extend([
                r.replication.to_string(),
                "false".to_string(),
                r.l2_estimation_error.to_string(),
                r.misclassification.to_string(),
                r.selected_eta.to_string(),
                u8::from(r.degenerate).to_string(),
                String::new(),
                String::new(),
            ]);
            w.write_record(&rec)?;
        }
        for a in &self.aggregates {
            let mut rec = vec![a.method.name().to_string(), a.loss.name().to_string()];
            rec.extend(spec_fields.iter().cloned());
            rec.extend([
                String::new(),
                "true".to_string(),
                a.l2_estimation_error.to_string(),
                a.misclassification.to_string(),
                a.selected_eta.to_string(),
                a.degenerate.to_string(),
                a.l2e_stderr.to_string(),
                a.misc_stderr.to_string(),
            ]);
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    fn markdown(&self) -> String {
        let s = &self.spec;
        let mut md = String::new();
        let _ = writeln!(md, "n={}, p={}, k*={}, rho={}", s.n, s.p, s.k_star, s.rho);
        md.push('\n');
        md.push_str("| Method | L2-E | Misc (%) |\n|---|---|---|\n");
        for a in &self.aggregates {
            let _ = writeln!(
                md,
                "| {} {} | {:.2} ± {:.2} | {:.2} ± {:.2} |",
                a.method.label(),
                a.loss.label(),
                a.l2_estimation_error,
                a.l2e_stderr,
                100.0 * a.misclassification,
                100.0 * a.misc_stderr
            );
        }
        md
    }
}

impl Report for RateCheckReport {
    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(RATE_COLUMNS)?;
        for pt in &self.points {
            w.write_record([
                self.method.name().to_string(),
                self.loss.name().to_string(),
                pt.point.n.to_string(),
                pt.point.p.to_string(),
                pt.point.k_star.to_string(),
                pt.rate.to_string(),
                pt.errors.len().to_string(),
                pt.mean_l2e.to_string(),
                pt.l2e_stderr.to_string(),
                self.slope.to_string(),
                self.slope_stderr.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    fn markdown(&self) -> String {
        let mut md = String::new();
        let _ = writeln!(
            md,
            "{} {}: log-log slope {:.3} ± {:.3}\n",
            self.method.label(),
            self.loss.label(),
            self.slope,
            self.slope_stderr
        );
        md.push_str("| n | p | k* | (k*/n) log(p/k*) | L2-E |\n|---|---|---|---|---|\n");
        for pt in &self.points {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {:.4} | {:.3} ± {:.3} |",
                pt.point.n, pt.point.p, pt.point.k_star, pt.rate, pt.mean_l2e, pt.l2e_stderr
            );
        }
        md
    }
}

/// Writes `report` to `path` in the requested format.
pub fn emit_report<R: Report>(report: &R, format: ReportFormat, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    match format {
        ReportFormat::Csv => report.write_csv(std::io::BufWriter::new(file)),
        ReportFormat::Markdown => {
            let mut w = std::io::BufWriter::new(file);
            w.write_all(report.markdown().as_bytes())?;
            w.flush()?;
            Ok(())
        }
    }
}
