//! Records written by the subcommands: a CSV table, a JSON-lines log and
//! plain-text polylines for planar sets.

use std::f64::consts::TAU;
use std::fs;
use std::io::Write;
use std::path::Path;

use ellipsum::geometry::{Ellipsoid, MinkowskiExpression};
use ellipsum::linalg::{Matrix, SpdMatrix, Vector};
use ellipsum::metrics::{BoundKind, CriterionRecord};
use ellipsum::outer::{Criterion, OuterResult, PairStep, Tightness, Warning};
use serde::Serialize;

use crate::error::CliError;
use crate::scenario::OutputFormat;

pub fn criterion_name(c: Criterion) -> &'static str {
    match c {
        Criterion::MinVolume => "volume",
        Criterion::MinTrace => "trace",
    }
}

pub fn tightness_name(t: Tightness) -> &'static str {
    match t {
        Tightness::Exact => "exact",
        Tightness::Optimized => "optimized",
        Tightness::Conservative => "conservative",
    }
}

pub fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

/// One row of the step table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRow {
    pub t: usize,
    pub criterion: &'static str,
    pub volume: f64,
    pub trace: f64,
    pub beta: Option<f64>,
    pub iterations: usize,
    pub foc_residual: Option<f64>,
    pub hausdorff_bound: f64,
    pub bound_kind: BoundKind,
    pub hausdorff_sampled: f64,
    pub seconds: f64,
}

impl StepRow {
    pub fn new(t: usize, c: Criterion, r: &CriterionRecord, kind: BoundKind, sampled: f64) -> Self {
        Self {
            t,
            criterion: criterion_name(c),
            volume: r.volume,
            trace: r.trace,
            beta: r.beta,
            iterations: r.iterations,
            foc_residual: r.foc_residual,
            hausdorff_bound: r.hausdorff_bound,
            bound_kind: kind,
            hausdorff_sampled: sampled,
            seconds: r.seconds,
        }
    }
}

/// A log record: the table row plus the ellipsoid itself.
#[derive(Debug, Clone, Serialize)]
pub struct StepLog<'a> {
    #[serde(flatten)]
    pub row: &'a StepRow,
    pub blocks: usize,
    pub tightness: &'static str,
    pub center: Vec<f64>,
    pub shape: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairStepRecord {
    pub beta: Option<f64>,
    pub iterations: usize,
    pub foc_residual: Option<f64>,
    pub tightness: &'static str,
}

impl From<&PairStep> for PairStepRecord {
    fn from(s: &PairStep) -> Self {
        Self {
            beta: s.beta,
            iterations: s.iterations,
            foc_residual: s.foc_residual,
            tightness: tightness_name(s.tightness),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OuterRecord {
    pub criterion: &'static str,
    pub p: String,
    pub tightness: &'static str,
    pub center: Vec<f64>,
    pub shape: Vec<Vec<f64>>,
    pub volume: f64,
    pub trace: f64,
    pub beta: Option<f64>,
    pub iterations: usize,
    pub foc_residual: Option<f64>,
    pub fold_order: Vec<usize>,
    pub steps: Vec<PairStepRecord>,
    pub warnings: Vec<String>,
    pub seconds: f64,
}

impl OuterRecord {
    pub fn new(r: &OuterResult, p: String, seconds: f64) -> Self {
        Self {
            criterion: criterion_name(r.criterion),
            p,
            tightness: tightness_name(r.tightness),
            center: r.center.iter().copied().collect(),
            shape: rows_of(r.shape.matrix()),
            volume: r.volume(),
            trace: r.trace(),
            beta: r.beta,
            iterations: r.iterations,
            foc_residual: r.foc_residual,
            fold_order: r.fold_order.clone(),
            steps: r.steps.iter().map(PairStepRecord::from).collect(),
            warnings: r
                .warnings
                .iter()
                .map(|w| match w {
                    Warning::IllConditioned { spread } => format!("ill-conditioned pair (eigenvalue spread {spread:e})"),
                })
                .collect(),
            seconds,
        }
    }
}

pub fn write_table(path: &Path, rows: &[StepRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_log<T: Serialize>(path: &Path, records: &[T]) -> Result<(), CliError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn wants_table(f: OutputFormat) -> bool {
    matches!(f, OutputFormat::Table | OutputFormat::Both)
}

pub fn wants_log(f: OutputFormat) -> bool {
    matches!(f, OutputFormat::Log | OutputFormat::Both)
}

fn unit(k: usize, n: usize) -> Vector {
    let th = TAU * k as f64 / n as f64;
    Vector::from_row_slice(&[th.cos(), th.sin()])
}

/// `n` boundary points of a planar ellipsoid, first point repeated at the end.
pub fn ellipse_polyline(e: &Ellipsoid, n: usize) -> Vec<Vector> {
    let l = e.shape.cholesky_factor();
    let mut pts: Vec<Vector> = (0..n).map(|k| &e.center + l * unit(k, n)).collect();
    pts.push(pts[0].clone());
    pts
}

/// Extreme points of the exact set in `n` directions, closed.
pub fn exact_polyline(set: &MinkowskiExpression, n: usize) -> Result<Vec<Vector>, CliError> {
    let mut pts = (0..n)
        .map(|k| set.extreme_point(&unit(k, n)))
        .collect::<Result<Vec<_>, _>>()?;
    pts.push(pts[0].clone());
    Ok(pts)
}

pub fn write_polylines(path: &Path, curves: &[(&str, Vec<Vector>)]) -> Result<(), CliError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for (i, (label, pts)) in curves.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        writeln!(out, "# {label}")?;
        for p in pts {
            writeln!(out, "{},{}", p[0], p[1])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn spd_rows(m: &SpdMatrix) -> Vec<Vec<f64>> {
    rows_of(m.matrix())
}
