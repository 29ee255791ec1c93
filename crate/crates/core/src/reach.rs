//! Forward reach sets of discrete-time linear systems whose initial state
//! and inputs range over p-sums of ellipsoids.
//!
//! Under `x(t+1) = F x(t) + G u(t)` the reach set at step `t` is the
//! Minkowski sum of `Φ(t,0) X₀` and `Φ(t,k+1) G U(k)` for `k < t`, where
//! `Φ` is the state transition matrix. Linear images distribute over
//! p-sums, so each of these `t+1` blocks is again a p-sum of ellipsoids.

use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::exec::Strategy;
use crate::geometry::{Ellipsoid, Exponent, MinkowskiExpression, PSumSet};
use crate::linalg::{ensure_dim, Matrix, SpdMatrix, Vector};
use crate::outer::{fold_minkowski_outer, fold_psum_outer, Criterion, FixedPointConfig, OuterResult};

/// Possibly time-varying linear dynamics `x(t+1) = F(t) x(t) + G(t) u(t)`.
pub trait Dynamics: Sync {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn state_matrix(&self, t: usize) -> Matrix;
    fn input_matrix(&self, t: usize) -> Matrix;
}

#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    f: Matrix,
    g: Matrix,
}

impl LtiSystem {
    pub fn new(f: Matrix, g: Matrix) -> Result<Self> {
        if !f.is_square() {
            return Err(Error::NotSquare {
                rows: f.nrows(),
                cols: f.ncols(),
            });
        }
        ensure_dim(f.nrows(), g.nrows())?;
        if f.clone().try_inverse().is_none() {
            return Err(Error::InvalidConfig("state matrix F must be invertible".into()));
        }
        Ok(Self { f, g })
    }

    pub fn f(&self) -> &Matrix {
        &self.f
    }

    pub fn g(&self) -> &Matrix {
        &self.g
    }
}

impl Dynamics for LtiSystem {
    fn state_dim(&self) -> usize {
        self.f.nrows()
    }

    fn input_dim(&self) -> usize {
        self.g.ncols()
    }

    fn state_matrix(&self, _t: usize) -> Matrix {
        self.f.clone()
    }

    fn input_matrix(&self, _t: usize) -> Matrix {
        self.g.clone()
    }
}

/// Source of the input uncertainty set `U(t)`.
pub trait ControlSets: Send + Sync + std::fmt::Debug {
    fn dim(&self) -> usize;
    fn control_set(&self, t: usize) -> Result<PSumSet>;
}

/// One set per time index, listed explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitControls {
    sets: Vec<PSumSet>,
}

impl ExplicitControls {
    pub fn new(sets: Vec<PSumSet>) -> Result<Self> {
        let first = sets.first().ok_or(Error::Empty("explicit control list"))?;
        for s in &sets {
            ensure_dim(first.dim(), s.dim())?;
            if s.p() != first.p() {
                return Err(Error::InvalidConfig(
                    "control exponent must be the same at every step".into(),
                ));
            }
        }
        Ok(Self { sets })
    }

    pub fn sets(&self) -> &[PSumSet] {
        &self.sets
    }
}

impl ControlSets for ExplicitControls {
    fn dim(&self) -> usize {
        self.sets[0].dim()
    }

    fn control_set(&self, t: usize) -> Result<PSumSet> {
        self.sets.get(t).cloned().ok_or_else(|| {
            Error::InvalidConfig(format!(
                "no control set for step {t} ({} listed)",
                self.sets.len()
            ))
        })
    }
}

/// `U(t) = {u_c} + (E(0,U₁(t)) +_p … +_p E(0,U_n(t)))` with
/// `U_j(t) = (1 + cos²(ω_j t)) B_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatedControls {
    pub p: Exponent,
    pub translation: Vector,
    pub bases: Vec<SpdMatrix>,
    pub frequencies: Vec<f64>,
}

impl ModulatedControls {
    pub fn new(
        p: Exponent,
        translation: Vector,
        bases: Vec<SpdMatrix>,
        frequencies: Vec<f64>,
    ) -> Result<Self> {
        ensure_dim(bases.len(), frequencies.len())?;
        // Validates dimensions and p.
        PSumSet::new(p, translation.clone(), bases.clone())?;
        Ok(Self {
            p,
            translation,
            bases,
            frequencies,
        })
    }
}

impl ControlSets for ModulatedControls {
    fn dim(&self) -> usize {
        self.translation.len()
    }

    fn control_set(&self, t: usize) -> Result<PSumSet> {
        let shapes = self
            .bases
            .iter()
            .zip(&self.frequencies)
            .map(|(b, w)| b.scaled(1.0 + (w * t as f64).cos().powi(2)))
            .collect::<Result<Vec<_>>>()?;
        PSumSet::new(self.p, self.translation.clone(), shapes)
    }
}

/// Which control set a summand of the step-`t` reach set is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlTiming {
    /// The input applied at step `k` ranges over `U(k)`.
    #[default]
    AppliedStep,
    /// Every input summand of the step-`t` set uses `U(t)`.
    CurrentStep,
}

#[derive(Debug, Clone)]
pub struct UncertaintyModel {
    pub initial: PSumSet,
    pub controls: Option<Arc<dyn ControlSets>>,
    pub timing: ControlTiming,
}

impl UncertaintyModel {
    pub fn new(initial: PSumSet, controls: Option<Arc<dyn ControlSets>>, timing: ControlTiming) -> Self {
        Self {
            initial,
            controls,
            timing,
        }
    }

    pub fn uncontrolled(initial: PSumSet) -> Self {
        Self::new(initial, None, ControlTiming::AppliedStep)
    }
}

fn check_model<D: Dynamics>(sys: &D, model: &UncertaintyModel) -> Result<()> {
    ensure_dim(sys.state_dim(), model.initial.dim())?;
    if let Some(c) = &model.controls {
        ensure_dim(sys.input_dim(), c.dim())?;
    }
    Ok(())
}

/// `Φ(t, s)` for `s = 0..=t`, where `Φ(t,t) = I`.
fn transitions<D: Dynamics>(sys: &D, t: usize) -> Vec<Matrix> {
    let n = sys.state_dim();
    let mut out = vec![Matrix::identity(n, n); t + 1];
    for s in (0..t).rev() {
        out[s] = &out[s + 1] * sys.state_matrix(s);
    }
    out
}

fn step_blocks<D: Dynamics>(sys: &D, model: &UncertaintyModel, t: usize) -> Result<MinkowskiExpression> {
    let phi = transitions(sys, t);
    let mut blocks = Vec::with_capacity(t + 1);
    blocks.push(model.initial.linear_map(&phi[0])?);
    if let Some(controls) = &model.controls {
        let current = match model.timing {
            ControlTiming::CurrentStep => Some(controls.control_set(t)?),
            ControlTiming::AppliedStep => None,
        };
        for k in 0..t {
            let set = match &current {
                Some(s) => s.clone(),
                None => controls.control_set(k)?,
            };
            let m = &phi[k + 1] * sys.input_matrix(k);
            blocks.push(set.linear_map(&m)?);
        }
    }
    MinkowskiExpression::new(blocks)
}

/// Summand blocks of the reach set for every step `0..=horizon`.
pub fn propagate_blocks<D: Dynamics>(
    sys: &D,
    model: &UncertaintyModel,
    horizon: usize,
) -> Result<Vec<MinkowskiExpression>> {
    check_model(sys, model)?;
    (0..=horizon).map(|t| step_blocks(sys, model, t)).collect()
}

/// Exact support function of the step-`t` reach set at `y`.
pub fn reach_support<D: Dynamics>(
    sys: &D,
    model: &UncertaintyModel,
    t: usize,
    y: &Vector,
) -> Result<f64> {
    check_model(sys, model)?;
    ensure_dim(sys.state_dim(), y.len())?;
    Ok(step_blocks(sys, model, t)?.support(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TubeConfig {
    pub fixed_point: FixedPointConfig,
    pub strategy: Strategy,
}

#[derive(Debug, Clone)]
pub struct TubeStep {
    pub t: usize,
    pub center: Vector,
    pub blocks: MinkowskiExpression,
    /// Per-block minimum-volume bounds, folded across blocks into `mvoe`.
    pub block_mvoe: Vec<OuterResult>,
    pub block_mtoe: Vec<OuterResult>,
    pub mvoe: OuterResult,
    pub mtoe: OuterResult,
    pub mvoe_time: Duration,
    pub mtoe_time: Duration,
}

impl TubeStep {
    pub fn result(&self, criterion: Criterion) -> &OuterResult {
        match criterion {
            Criterion::MinVolume => &self.mvoe,
            Criterion::MinTrace => &self.mtoe,
        }
    }

    pub fn block_results(&self, criterion: Criterion) -> &[OuterResult] {
        match criterion {
            Criterion::MinVolume => &self.block_mvoe,
            Criterion::MinTrace => &self.block_mtoe,
        }
    }

    pub fn time(&self, criterion: Criterion) -> Duration {
        match criterion {
            Criterion::MinVolume => self.mvoe_time,
            Criterion::MinTrace => self.mtoe_time,
        }
    }

    pub fn support(&self, y: &Vector) -> f64 {
        self.blocks.support(y)
    }
}

#[derive(Debug, Clone)]
pub struct ReachTube {
    pub steps: Vec<TubeStep>,
}

/// Two-stage bound: each block is folded into its own outer ellipsoid, then
/// those ellipsoids are folded as a Minkowski sum in block order.
pub fn outer_of_blocks(
    blocks: &MinkowskiExpression,
    criterion: Criterion,
    cfg: &FixedPointConfig,
) -> Result<(Vec<OuterResult>, OuterResult)> {
    let per_block = blocks
        .blocks()
        .iter()
        .map(|b| fold_psum_outer(b, criterion, cfg))
        .collect::<Result<Vec<_>>>()?;
    let ellipsoids: Vec<Ellipsoid> = per_block.iter().map(OuterResult::ellipsoid).collect();
    let total = fold_minkowski_outer(&ellipsoids, criterion, cfg)?;
    Ok((per_block, total))
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn build_step(t: usize, blocks: MinkowskiExpression, cfg: &FixedPointConfig) -> Result<TubeStep> {
    let (mvoe, mvoe_time) = timed(|| outer_of_blocks(&blocks, Criterion::MinVolume, cfg));
    let (mtoe, mtoe_time) = timed(|| outer_of_blocks(&blocks, Criterion::MinTrace, cfg));
    let (block_mvoe, mvoe) = mvoe.map_err(|e| step_error(t, e))?;
    let (block_mtoe, mtoe) = mtoe.map_err(|e| step_error(t, e))?;
    Ok(TubeStep {
        t,
        center: blocks.center(),
        blocks,
        block_mvoe,
        block_mtoe,
        mvoe,
        mtoe,
        mvoe_time,
        mtoe_time,
    })
}

fn step_error(t: usize, e: Error) -> Error {
    match e {
        Error::InvalidConfig(msg) => Error::InvalidConfig(format!("step {t}: {msg}")),
        other => other,
    }
}

/// Minimum-volume and minimum-trace outer ellipsoids of every reach set up
/// to `horizon`. Steps are independent and are evaluated according to
/// `cfg.strategy`.
pub fn reach_tube<D: Dynamics>(
    sys: &D,
    model: &UncertaintyModel,
    horizon: usize,
    cfg: &TubeConfig,
) -> Result<ReachTube> {
    cfg.fixed_point.validate()?;
    let blocks = propagate_blocks(sys, model, horizon)?;
    let fp = cfg.fixed_point;
    let steps = cfg
        .strategy
        .map_range(blocks.len(), |t| build_step(t, blocks[t].clone(), &fp))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(ReachTube { steps })
}
