//! Ellipsoids, Firey p-sums of centered ellipsoids, and their support
//! functions.
//!
//! A [`PSumSet`] is `{c} + (E(0,Q₁) +_p … +_p E(0,Q_m))`: the summands are
//! centered and a single translation is carried alongside. Direction vectors
//! never need to be normalized; every support function here is positively
//! homogeneous.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::linalg::{ensure_dim, Matrix, SpdMatrix, Vector};

/// Exponent of a Firey p-sum, `p ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub const ONE: Exponent = Exponent::Finite(1.0);

    pub fn finite(p: f64) -> Result<Self> {
        if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else if p == f64::INFINITY {
            Ok(Exponent::Infinite)
        } else {
            Err(Error::InvalidP(p.to_string()))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    pub fn is_two(self) -> bool {
        self == Exponent::Finite(2.0)
    }

    /// `ℓ_p` combination of nonnegative support values.
    pub fn combine(self, values: impl IntoIterator<Item = f64>) -> f64 {
        match self {
            Exponent::Infinite => values.into_iter().fold(0.0, f64::max),
            Exponent::Finite(1.0) => values.into_iter().sum(),
            Exponent::Finite(p) => {
                let values: Vec<f64> = values.into_iter().collect();
                let top = values.iter().copied().fold(0.0, f64::max);
                if top == 0.0 {
                    return 0.0;
                }
                let s: f64 = values.iter().map(|h| (h / top).powf(p)).sum();
                top * s.powf(1.0 / p)
            }
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinite),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::InvalidP(s.to_string()))
                .and_then(Exponent::finite),
        }
    }
}

/// Volume of the d-dimensional unit ball.
pub fn unit_ball_volume(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    PI.powf(half) / gamma(half + 1.0)
}

/// `E(q, Q) = {x : (x − q)ᵀ Q⁻¹ (x − q) ≤ 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: Vector,
    pub shape: SpdMatrix,
}

impl Ellipsoid {
    pub fn new(center: Vector, shape: SpdMatrix) -> Result<Self> {
        ensure_dim(shape.dim(), center.len())?;
        Ok(Self { center, shape })
    }

    pub fn centered(shape: SpdMatrix) -> Self {
        let d = shape.dim();
        Self {
            center: Vector::zeros(d),
            shape,
        }
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    /// `⟨q, y⟩ + √(yᵀ Q y)`. Panics if `y` has the wrong length.
    pub fn support(&self, y: &Vector) -> f64 {
        self.center.dot(y) + self.shape.quad_form(y).sqrt()
    }

    pub fn try_support(&self, y: &Vector) -> Result<f64> {
        ensure_dim(self.dim(), y.len())?;
        Ok(self.support(y))
    }

    /// The maximizer of `⟨x, y⟩` over the ellipsoid (`y ≠ 0`).
    pub fn support_point(&self, y: &Vector) -> Vector {
        let qy = self.shape.matrix() * y;
        let h = y.dot(&qy).sqrt();
        &self.center + qy / h
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.shape.det().sqrt()
    }

    /// `(x − q)ᵀ Q⁻¹ (x − q)`; at most 1 inside the ellipsoid.
    pub fn level(&self, x: &Vector) -> f64 {
        let r = x - &self.center;
        let linv_r = self
            .shape
            .cholesky_factor()
            .solve_lower_triangular(&r)
            .expect("Cholesky factor has a positive diagonal");
        linv_r.norm_squared()
    }

    pub fn to_quadratic_form(&self) -> QuadraticForm {
        let a = self.shape.inverse();
        let b = -(a.matrix() * &self.center);
        let c = self.center.dot(&(a.matrix() * &self.center)) - 1.0;
        QuadraticForm { a, b, c }
    }

    pub fn from_quadratic_form(form: &QuadraticForm) -> Result<Self> {
        ensure_dim(form.a.dim(), form.b.len())?;
        let shape = form.a.inverse();
        let center = -(shape.matrix() * &form.b);
        Ok(Self { center, shape })
    }
}

/// `{x : xᵀ A x + 2 xᵀ b + c ≤ 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub a: SpdMatrix,
    pub b: Vector,
    pub c: f64,
}

impl QuadraticForm {
    /// Positive exactly when the set has nonempty interior.
    pub fn interior_margin(&self) -> f64 {
        let ainv_b = self.a.inverse().matrix() * &self.b;
        self.b.dot(&ainv_b) - self.c
    }
}

/// A translated Firey p-sum of centered ellipsoids.
#[derive(Debug, Clone, PartialEq)]
pub struct PSumSet {
    p: Exponent,
    translation: Vector,
    shapes: Vec<SpdMatrix>,
}

impl PSumSet {
    pub fn new(p: Exponent, translation: Vector, shapes: Vec<SpdMatrix>) -> Result<Self> {
        if let Exponent::Finite(v) = p {
            Exponent::finite(v)?;
        }
        let first = shapes.first().ok_or(Error::Empty("p-sum needs at least one shape"))?;
        let d = first.dim();
        for s in &shapes {
            ensure_dim(d, s.dim())?;
        }
        ensure_dim(d, translation.len())?;
        Ok(Self {
            p,
            translation,
            shapes,
        })
    }

    pub fn centered(p: Exponent, shapes: Vec<SpdMatrix>) -> Result<Self> {
        let d = shapes.first().map_or(0, SpdMatrix::dim);
        Self::new(p, Vector::zeros(d), shapes)
    }

    pub fn from_ellipsoid(e: &Ellipsoid) -> Self {
        Self {
            p: Exponent::ONE,
            translation: e.center.clone(),
            shapes: vec![e.shape.clone()],
        }
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    pub fn translation(&self) -> &Vector {
        &self.translation
    }

    pub fn shapes(&self) -> &[SpdMatrix] {
        &self.shapes
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    /// Support function of the set. Panics if `y` has the wrong length.
    pub fn support(&self, y: &Vector) -> f64 {
        let centered = self
            .p
            .combine(self.shapes.iter().map(|q| q.quad_form(y).sqrt()));
        self.translation.dot(y) + centered
    }

    pub fn try_support(&self, y: &Vector) -> Result<f64> {
        ensure_dim(self.dim(), y.len())?;
        Ok(self.support(y))
    }

    /// Boundary point with outer normal `y`: the gradient of the support
    /// function at `y`. Only defined for finite `p`, where the support
    /// function is smooth away from the origin.
    pub fn support_point(&self, y: &Vector) -> Result<Vector> {
        ensure_dim(self.dim(), y.len())?;
        let p = match self.p {
            Exponent::Finite(p) => p,
            Exponent::Infinite => return Err(Error::UnsupportedP(self.p.to_string())),
        };
        let images: Vec<Vector> = self.shapes.iter().map(|q| q.matrix() * y).collect();
        let hs: Vec<f64> = images.iter().map(|qy| y.dot(qy).max(0.0).sqrt()).collect();
        let total = self.p.combine(hs.iter().copied());
        if total == 0.0 {
            return Err(Error::InvalidConfig("support point needs a nonzero direction".into()));
        }
        let mut x = self.translation.clone();
        for (qy, h) in images.iter().zip(&hs) {
            let w = (h / total).powf(p - 1.0);
            x += qy * (w / h);
        }
        Ok(x)
    }

    /// A boundary point maximizing `⟨x, y⟩`. For `p = ∞` this is the support
    /// point of a summand attaining the maximum (the set is the convex hull
    /// of the summands); otherwise it equals [`PSumSet::support_point`].
    pub fn extreme_point(&self, y: &Vector) -> Result<Vector> {
        if !self.p.is_infinite() {
            return self.support_point(y);
        }
        ensure_dim(self.dim(), y.len())?;
        let best = self
            .shapes
            .iter()
            .max_by(|a, b| a.quad_form(y).total_cmp(&b.quad_form(y)))
            .expect("nonempty by construction");
        let qy = best.matrix() * y;
        let h = y.dot(&qy).sqrt();
        Ok(&self.translation + qy / h)
    }

    /// Image under `x ↦ A x`: each shape maps to `A Q Aᵀ` and the
    /// translation to `A c`. `A` may be rectangular as long as every image
    /// stays positive definite.
    pub fn linear_map(&self, a: &Matrix) -> Result<Self> {
        ensure_dim(self.dim(), a.ncols())?;
        let shapes = self
            .shapes
            .iter()
            .enumerate()
            .map(|(index, q)| q.congruence(a).map_err(|_| Error::DegenerateImage { index }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            p: self.p,
            translation: a * &self.translation,
            shapes,
        })
    }

    /// The same set with its shapes permuted.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let shapes = order
            .iter()
            .map(|&i| self.shapes.get(i).cloned().ok_or(Error::DimensionMismatch {
                expected: self.shapes.len(),
                found: i,
            }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.p, self.translation.clone(), shapes)
    }

    pub fn with_p(&self, p: Exponent) -> Self {
        Self {
            p,
            ..self.clone()
        }
    }
}

/// A Minkowski sum (1-sum) of p-sum blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct MinkowskiExpression {
    blocks: Vec<PSumSet>,
}

impl MinkowskiExpression {
    pub fn new(blocks: Vec<PSumSet>) -> Result<Self> {
        let d = blocks
            .first()
            .ok_or(Error::Empty("Minkowski sum needs at least one block"))?
            .dim();
        for b in &blocks {
            ensure_dim(d, b.dim())?;
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[PSumSet] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks[0].dim()
    }

    pub fn support(&self, y: &Vector) -> f64 {
        self.blocks.iter().map(|b| b.support(y)).sum()
    }

    pub fn extreme_point(&self, y: &Vector) -> Result<Vector> {
        let mut x = Vector::zeros(self.dim());
        for b in &self.blocks {
            x += b.extreme_point(y)?;
        }
        Ok(x)
    }

    pub fn center(&self) -> Vector {
        self.blocks
            .iter()
            .fold(Vector::zeros(self.dim()), |acc, b| acc + b.translation())
    }
}
