//! Outer ellipsoids for p-sums of two centered ellipsoids, optimized over the
//! one-parameter family
//!
//! ```text
//! Q(β) = (1 + 1/β)^{1/p} Q₁ + (1 + β)^{1/p} Q₂,   β > 0,
//! ```
//!
//! every member of which contains `E(0,Q₁) +_p E(0,Q₂)`. The minimum-trace
//! member has a closed form; the minimum-volume member is the fixed point of
//! a scalar recursion driven by the eigenvalues of `Q₁⁻¹Q₂`. Sums of more
//! than two summands are folded pairwise, left to right.

use crate::error::{Error, Result};
use crate::geometry::{Ellipsoid, Exponent, PSumSet};
use crate::linalg::{ensure_dim, gen_eigenvalues, SpdMatrix, Vector};

/// Eigenvalue spread above which an [`OuterResult`] carries a conditioning
/// warning.
pub const CONDITIONING_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    MinTrace,
    MinVolume,
}

/// Exponent of the minimum-volume recursion
/// `β ↦ (Σ 1/(1+β^{1/p}λᵢ) / Σ λᵢ/(1+β^{1/p}λᵢ))^e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecursionExponent {
    /// `e = p/(p+1)`. Fixed points are exactly the stationary points of
    /// `log det Q(β)`.
    #[default]
    PPlusOne,
    /// `e = p/(3p−1)`. Coincides with [`RecursionExponent::PPlusOne`] at
    /// `p = 1` only; away from it the fixed point is not the volume
    /// minimizer. Kept for comparison against historical results.
    ThreePMinusOne,
}

impl RecursionExponent {
    /// Exponent applied to the eigenvalue ratio.
    pub fn step_power(self, p: f64) -> f64 {
        match self {
            RecursionExponent::PPlusOne => p / (p + 1.0),
            RecursionExponent::ThreePMinusOne => p / (3.0 * p - 1.0),
        }
    }

    /// Power of β multiplying λᵢ in the matching first-order condition.
    pub fn residual_power(self, p: f64) -> f64 {
        1.0 / self.step_power(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub beta0: f64,
    /// Stop on `|Δβ| < tolerance·β` instead of `|Δβ| < tolerance`.
    pub relative: bool,
    pub exponent: RecursionExponent,
    /// After the stopping test, refine β with Newton steps on the
    /// first-order residual. Each accepted step moves β by less than the
    /// stopping bound, so the exit condition still holds.
    pub polish: bool,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-5,
            max_iterations: 200,
            beta0: 1.0,
            relative: false,
            exponent: RecursionExponent::PPlusOne,
            polish: true,
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.beta0 > 0.0 && self.beta0.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "beta0 must be positive, got {}",
                self.beta0
            )));
        }
        Ok(())
    }
}

/// How an outer ellipsoid relates to the set it bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tightness {
    /// The ellipsoid equals the set (single summand, or p = 2).
    Exact,
    /// Optimal within the β family for the requested criterion.
    Optimized,
    /// A valid bound with no optimality claim (p = ∞).
    Conservative,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    IllConditioned { spread: f64 },
}

/// One pairwise step of a fold.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStep {
    pub beta: Option<f64>,
    pub iterations: usize,
    pub foc_residual: Option<f64>,
    pub tightness: Tightness,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterResult {
    pub center: Vector,
    pub shape: SpdMatrix,
    pub criterion: Criterion,
    pub tightness: Tightness,
    /// β of the last pairwise step, absent for exact and conservative steps.
    pub beta: Option<f64>,
    /// Fixed-point iterations summed over all pairwise steps.
    pub iterations: usize,
    /// Largest first-order residual magnitude over the minimum-volume steps.
    pub foc_residual: Option<f64>,
    pub steps: Vec<PairStep>,
    /// Indices of the input summands in the order they were folded.
    pub fold_order: Vec<usize>,
    pub warnings: Vec<Warning>,
}

impl OuterResult {
    pub fn ellipsoid(&self) -> Ellipsoid {
        Ellipsoid {
            center: self.center.clone(),
            shape: self.shape.clone(),
        }
    }

    pub fn volume(&self) -> f64 {
        self.ellipsoid().volume()
    }

    pub fn trace(&self) -> f64 {
        self.shape.trace()
    }

    fn identity(center: Vector, shape: SpdMatrix, criterion: Criterion) -> Self {
        Self {
            center,
            shape,
            criterion,
            tightness: Tightness::Exact,
            beta: None,
            iterations: 0,
            foc_residual: None,
            steps: Vec::new(),
            fold_order: vec![0],
            warnings: Vec::new(),
        }
    }
}

/// Result of the minimum-volume recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeOptimum {
    pub beta: f64,
    pub iterations: usize,
    pub residual: f64,
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 && p != 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidP(p.to_string()))
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidBeta(beta))
    }
}

fn check_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::Empty("eigenvalue list"));
    }
    if lambdas.iter().all(|&l| l > 0.0 && l.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidConfig("eigenvalues must be positive".into()))
    }
}

/// The family member `Q(β)`.
pub fn q_beta(q1: &SpdMatrix, q2: &SpdMatrix, p: f64, beta: f64) -> Result<SpdMatrix> {
    check_p(p)?;
    check_beta(beta)?;
    ensure_dim(q1.dim(), q2.dim())?;
    let a = (1.0 + 1.0 / beta).powf(1.0 / p);
    let b = (1.0 + beta).powf(1.0 / p);
    q1.weighted_sum(a, q2, b)
}

/// Minimizer of `trace Q(β)`: `(tr Q₁ / tr Q₂)^{p/(1+p)}`.
pub fn beta_trace_opt(q1: &SpdMatrix, q2: &SpdMatrix, p: f64) -> Result<f64> {
    check_p(p)?;
    ensure_dim(q1.dim(), q2.dim())?;
    Ok((q1.trace() / q2.trace()).powf(p / (1.0 + p)))
}

/// First-order residual `Σ (1 − β^{1+1/p} λᵢ) / (1 + β^{1/p} λᵢ)`; its
/// unique positive root minimizes `log det Q(β)`.
pub fn foc_residual(lambdas: &[f64], p: f64, beta: f64) -> Result<f64> {
    foc_residual_with(RecursionExponent::PPlusOne, lambdas, p, beta)
}

pub fn foc_residual_with(
    form: RecursionExponent,
    lambdas: &[f64],
    p: f64,
    beta: f64,
) -> Result<f64> {
    check_p(p)?;
    check_beta(beta)?;
    check_lambdas(lambdas)?;
    let z = beta.powf(1.0 / p);
    let w = beta.powf(form.residual_power(p));
    Ok(lambdas.iter().map(|l| (1.0 - w * l) / (1.0 + z * l)).sum())
}

/// One application of the minimum-volume recursion map.
pub fn fixed_point_step(lambdas: &[f64], p: f64, beta: f64) -> Result<f64> {
    fixed_point_step_with(RecursionExponent::PPlusOne, lambdas, p, beta)
}

pub fn fixed_point_step_with(
    form: RecursionExponent,
    lambdas: &[f64],
    p: f64,
    beta: f64,
) -> Result<f64> {
    check_p(p)?;
    check_beta(beta)?;
    check_lambdas(lambdas)?;
    Ok(step_unchecked(form, lambdas, p, beta))
}

fn step_unchecked(form: RecursionExponent, lambdas: &[f64], p: f64, beta: f64) -> f64 {
    let z = beta.powf(1.0 / p);
    let (num, den) = lambdas.iter().fold((0.0, 0.0), |(n, d), &l| {
        let f = 1.0 / (1.0 + z * l);
        (n + f, d + l * f)
    });
    (num / den).powf(form.step_power(p))
}

fn residual_and_slope(form: RecursionExponent, lambdas: &[f64], p: f64, beta: f64) -> (f64, f64) {
    let a = form.residual_power(p);
    let b = 1.0 / p;
    let w = beta.powf(a);
    let z = beta.powf(b);
    lambdas.iter().fold((0.0, 0.0), |(r, s), &l| {
        let num = 1.0 - w * l;
        let den = 1.0 + z * l;
        let dnum = -a * w * l / beta;
        let dden = b * z * l / beta;
        (r + num / den, s + (dnum * den - num * dden) / (den * den))
    })
}

fn polish(form: RecursionExponent, lambdas: &[f64], p: f64, beta: f64, max_move: f64) -> f64 {
    let start = beta;
    let mut beta = beta;
    let (mut r, mut s) = residual_and_slope(form, lambdas, p, beta);
    for _ in 0..4 {
        if !(s < 0.0) || r == 0.0 {
            break;
        }
        let next = beta - r / s;
        if !(next > 0.0) || (next - start).abs() >= max_move {
            break;
        }
        let (rn, sn) = residual_and_slope(form, lambdas, p, next);
        if !(rn.abs() < r.abs()) {
            break;
        }
        beta = next;
        r = rn;
        s = sn;
    }
    beta
}

/// Iterates the recursion from `cfg.beta0` until successive iterates agree
/// to `cfg.tolerance`.
pub fn beta_volume_opt_from_lambdas(
    lambdas: &[f64],
    p: f64,
    cfg: &FixedPointConfig,
) -> Result<VolumeOptimum> {
    check_p(p)?;
    check_lambdas(lambdas)?;
    cfg.validate()?;
    let mut beta = cfg.beta0;
    for n in 1..=cfg.max_iterations {
        let next = step_unchecked(cfg.exponent, lambdas, p, beta);
        let delta = (next - beta).abs();
        let bound = if cfg.relative { cfg.tolerance * next } else { cfg.tolerance };
        beta = next;
        if delta < bound {
            if cfg.polish {
                beta = polish(cfg.exponent, lambdas, p, beta, bound);
            }
            return Ok(VolumeOptimum {
                beta,
                iterations: n,
                residual: foc_residual_with(cfg.exponent, lambdas, p, beta)?,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iterations,
        last_beta: beta,
        residual: foc_residual_with(cfg.exponent, lambdas, p, beta).unwrap_or(f64::NAN),
    })
}

/// Minimum-volume β for the pair, via the eigenvalues of `Q₁⁻¹Q₂`.
pub fn beta_volume_opt(
    q1: &SpdMatrix,
    q2: &SpdMatrix,
    p: f64,
    cfg: &FixedPointConfig,
) -> Result<VolumeOptimum> {
    check_p(p)?;
    let lambdas = gen_eigenvalues(q1, q2)?;
    beta_volume_opt_from_lambdas(&lambdas, p, cfg)
}

fn pair_step(
    q1: &SpdMatrix,
    q2: &SpdMatrix,
    p: Exponent,
    criterion: Criterion,
    cfg: &FixedPointConfig,
    warnings: &mut Vec<Warning>,
) -> Result<(SpdMatrix, PairStep)> {
    ensure_dim(q1.dim(), q2.dim())?;
    let p = match p {
        Exponent::Infinite => {
            // The ∞-sum lies inside the 2-sum, which is exactly E(0, Q₁+Q₂).
            return Ok((
                q1.checked_add(q2)?,
                PairStep {
                    beta: None,
                    iterations: 0,
                    foc_residual: None,
                    tightness: Tightness::Conservative,
                },
            ));
        }
        Exponent::Finite(2.0) => {
            return Ok((
                q1.checked_add(q2)?,
                PairStep {
                    beta: None,
                    iterations: 0,
                    foc_residual: None,
                    tightness: Tightness::Exact,
                },
            ));
        }
        Exponent::Finite(p) => p,
    };
    match criterion {
        Criterion::MinTrace => {
            let beta = beta_trace_opt(q1, q2, p)?;
            Ok((
                q_beta(q1, q2, p, beta)?,
                PairStep {
                    beta: Some(beta),
                    iterations: 0,
                    foc_residual: None,
                    tightness: Tightness::Optimized,
                },
            ))
        }
        Criterion::MinVolume => {
            let lambdas = gen_eigenvalues(q1, q2)?;
            let spread = lambdas[lambdas.len() - 1] / lambdas[0];
            if spread > CONDITIONING_LIMIT {
                warnings.push(Warning::IllConditioned { spread });
            }
            let opt = beta_volume_opt_from_lambdas(&lambdas, p, cfg)?;
            Ok((
                q_beta(q1, q2, p, opt.beta)?,
                PairStep {
                    beta: Some(opt.beta),
                    iterations: opt.iterations,
                    foc_residual: Some(opt.residual),
                    tightness: Tightness::Optimized,
                },
            ))
        }
    }
}

fn fold_shapes(
    shapes: &[SpdMatrix],
    center: Vector,
    p: Exponent,
    criterion: Criterion,
    cfg: &FixedPointConfig,
) -> Result<OuterResult> {
    let (first, rest) = shapes
        .split_first()
        .ok_or(Error::Empty("nothing to fold"))?;
    ensure_dim(first.dim(), center.len())?;
    if rest.is_empty() {
        return Ok(OuterResult::identity(center, first.clone(), criterion));
    }
    cfg.validate()?;
    let mut warnings = Vec::new();
    let mut steps = Vec::with_capacity(rest.len());
    let mut acc = first.clone();
    for q in rest {
        let (next, step) = pair_step(&acc, q, p, criterion, cfg, &mut warnings)?;
        acc = next;
        steps.push(step);
    }
    let tightness = steps
        .iter()
        .map(|s| s.tightness)
        .max()
        .unwrap_or(Tightness::Exact);
    let foc_residual = steps
        .iter()
        .filter_map(|s| s.foc_residual)
        .map(f64::abs)
        .reduce(f64::max);
    Ok(OuterResult {
        center,
        shape: acc,
        criterion,
        tightness,
        beta: steps.last().and_then(|s| s.beta),
        iterations: steps.iter().map(|s| s.iterations).sum(),
        foc_residual,
        steps,
        fold_order: (0..shapes.len()).collect(),
        warnings,
    })
}

/// Optimal outer ellipsoid (within the β family) of `E(0,Q₁) +_p E(0,Q₂)`.
pub fn pair_outer(
    q1: &SpdMatrix,
    q2: &SpdMatrix,
    p: Exponent,
    criterion: Criterion,
    cfg: &FixedPointConfig,
) -> Result<OuterResult> {
    let d = q1.dim();
    fold_shapes(&[q1.clone(), q2.clone()], Vector::zeros(d), p, criterion, cfg)
}

/// Outer ellipsoid of a p-sum set, folding its summands pairwise in order.
pub fn fold_psum_outer(
    set: &PSumSet,
    criterion: Criterion,
    cfg: &FixedPointConfig,
) -> Result<OuterResult> {
    fold_shapes(set.shapes(), set.translation().clone(), set.p(), criterion, cfg)
}

/// Outer ellipsoid of the Minkowski sum of `ellipsoids`, centered at the sum
/// of their centers.
pub fn fold_minkowski_outer(
    ellipsoids: &[Ellipsoid],
    criterion: Criterion,
    cfg: &FixedPointConfig,
) -> Result<OuterResult> {
    let first = ellipsoids
        .first()
        .ok_or(Error::Empty("nothing to fold"))?;
    let mut center = Vector::zeros(first.dim());
    for e in ellipsoids {
        ensure_dim(first.dim(), e.dim())?;
        center += &e.center;
    }
    let shapes: Vec<SpdMatrix> = ellipsoids.iter().map(|e| e.shape.clone()).collect();
    fold_shapes(&shapes, center, Exponent::ONE, criterion, cfg)
}
