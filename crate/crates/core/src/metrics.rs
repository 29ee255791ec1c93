//! Approximation quality: sampled Hausdorff gaps, a closed-form upper bound
//! and per-step reports for reach tubes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::exec::Strategy;
use crate::geometry::Ellipsoid;
use crate::linalg::{ensure_dim, spectral_norm, Matrix, SpdMatrix, Vector};
use crate::outer::Criterion;
use crate::reach::{ReachTube, TubeStep};

/// Negative support gaps below this are treated as a containment failure.
pub const OUTER_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereScheme {
    /// `θ_k = 2πk/N`; planar only.
    UniformAngle,
    /// Shifted Halton points pushed through the normal quantile and
    /// normalized. Any prefix of a longer sequence is the shorter sequence.
    QuasiRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SphereSampler {
    pub dim: usize,
    pub count: usize,
    pub scheme: SphereScheme,
    pub seed: u64,
}

const PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    out
}

impl SphereSampler {
    /// Uniform angles in the plane, quasi-random points otherwise.
    pub fn new(dim: usize, count: usize, seed: u64) -> Self {
        let scheme = if dim == 2 {
            SphereScheme::UniformAngle
        } else {
            SphereScheme::QuasiRandom
        };
        Self {
            dim,
            count,
            scheme,
            seed,
        }
    }

    /// 3600 angles for `d = 2`, 10⁴ points otherwise.
    pub fn default_for(dim: usize) -> Self {
        Self::new(dim, if dim == 2 { 3600 } else { 10_000 }, 0)
    }

    pub fn with_scheme(mut self, scheme: SphereScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn directions(&self) -> Result<Vec<Vector>> {
        if self.dim == 0 {
            return Err(Error::Empty("sphere dimension"));
        }
        if self.dim == 1 {
            return Ok((0..self.count)
                .map(|k| Vector::from_element(1, if k % 2 == 0 { 1.0 } else { -1.0 }))
                .collect());
        }
        match self.scheme {
            SphereScheme::UniformAngle => {
                if self.dim != 2 {
                    return Err(Error::InvalidConfig(format!(
                        "uniform-angle sampling needs dimension 2, got {}",
                        self.dim
                    )));
                }
                let n = self.count as f64;
                Ok((0..self.count)
                    .map(|k| {
                        let th = std::f64::consts::TAU * k as f64 / n;
                        Vector::from_row_slice(&[th.cos(), th.sin()])
                    })
                    .collect())
            }
            SphereScheme::QuasiRandom => self.quasi_random(),
        }
    }

    fn quasi_random(&self) -> Result<Vec<Vector>> {
        if self.dim > PRIMES.len() {
            return Err(Error::InvalidConfig(format!(
                "quasi-random sampling supports up to {} dimensions",
                PRIMES.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let shift: Vec<f64> = (0..self.dim).map(|_| rng.random::<f64>()).collect();
        let normal = Normal::standard();
        let mut out = Vec::with_capacity(self.count);
        let mut i = 1u64;
        while out.len() < self.count {
            let v = Vector::from_iterator(
                self.dim,
                (0..self.dim).map(|j| {
                    let u = (radical_inverse(i, PRIMES[j] as u64) + shift[j]).fract();
                    normal.inverse_cdf(u.clamp(1e-12, 1.0 - 1e-12))
                }),
            );
            i += 1;
            let n = v.norm();
            if n > 1e-9 {
                out.push(v / n);
            }
        }
        Ok(out)
    }
}

/// Largest sampled gap `h_outer(s) − h_exact(s)` over unit directions. A
/// lower estimate of the Hausdorff distance when `outer` contains the set.
pub fn hausdorff_sampled<F>(outer: &Ellipsoid, exact_support: F, sampler: &SphereSampler) -> Result<f64>
where
    F: Fn(&Vector) -> f64 + Sync + Send,
{
    ensure_dim(outer.dim(), sampler.dim)?;
    let dirs = sampler.directions()?;
    hausdorff_sampled_on(outer, exact_support, &dirs, Strategy::default())
}

pub fn hausdorff_sampled_on<F>(
    outer: &Ellipsoid,
    exact_support: F,
    dirs: &[Vector],
    strategy: Strategy,
) -> Result<f64>
where
    F: Fn(&Vector) -> f64 + Sync + Send,
{
    let gaps = strategy.map(dirs, |s| outer.support(s) - exact_support(s));
    let mut worst = 0.0f64;
    for g in gaps {
        if g < -OUTER_SLACK || g.is_nan() {
            return Err(Error::NotOuter { margin: g });
        }
        worst = worst.max(g);
    }
    Ok(worst)
}

/// `‖Q̂^{1/2} − Σ M_k^{1/2}‖₂`.
pub fn hausdorff_upper_bound(qhat: &SpdMatrix, ms: &[SpdMatrix]) -> Result<f64> {
    let d = qhat.dim();
    let mut diff: Matrix = qhat.sqrt().into_matrix();
    for m in ms {
        ensure_dim(d, m.dim())?;
        diff -= m.sqrt().matrix();
    }
    spectral_norm(&diff)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Every block is a single ellipsoid, where the bound is a theorem.
    Upper,
    /// Blocks were first replaced by their own outer ellipsoids.
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionRecord {
    pub volume: f64,
    pub trace: f64,
    pub beta: Option<f64>,
    pub iterations: usize,
    pub foc_residual: Option<f64>,
    pub hausdorff_bound: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub t: usize,
    pub blocks: usize,
    pub bound_kind: BoundKind,
    pub mvoe: CriterionRecord,
    pub mtoe: CriterionRecord,
}

impl StepReport {
    pub fn record(&self, criterion: Criterion) -> &CriterionRecord {
        match criterion {
            Criterion::MinVolume => &self.mvoe,
            Criterion::MinTrace => &self.mtoe,
        }
    }
}

fn bound_kind(step: &TubeStep) -> BoundKind {
    if step.blocks.blocks().iter().all(|b| b.shapes().len() == 1) {
        BoundKind::Upper
    } else {
        BoundKind::Heuristic
    }
}

fn criterion_record(step: &TubeStep, criterion: Criterion) -> Result<CriterionRecord> {
    let r = step.result(criterion);
    let ms: Vec<SpdMatrix> = step
        .block_results(criterion)
        .iter()
        .map(|b| b.shape.clone())
        .collect();
    Ok(CriterionRecord {
        volume: r.volume(),
        trace: r.trace(),
        beta: r.beta,
        iterations: r.iterations,
        foc_residual: r.foc_residual,
        hausdorff_bound: hausdorff_upper_bound(&r.shape, &ms)?,
        seconds: step.time(criterion).as_secs_f64(),
    })
}

pub fn report(tube: &ReachTube) -> Result<Vec<StepReport>> {
    tube.steps
        .iter()
        .map(|s| {
            Ok(StepReport {
                t: s.t,
                blocks: s.blocks.blocks().len(),
                bound_kind: bound_kind(s),
                mvoe: criterion_record(s, Criterion::MinVolume)?,
                mtoe: criterion_record(s, Criterion::MinTrace)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_unit_and_deterministic() {
        for d in [2, 3, 5] {
            let s = SphereSampler::new(d, 500, 7);
            let a = s.directions().unwrap();
            assert_eq!(a.len(), 500);
            assert!(a.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
            assert_eq!(a, s.directions().unwrap());
        }
        let q = SphereSampler::new(3, 100, 1).directions().unwrap();
        let r = SphereSampler::new(3, 100, 2).directions().unwrap();
        assert_ne!(q, r);
    }

    #[test]
    fn quasi_random_is_nested() {
        let short = SphereSampler::new(4, 50, 3).directions().unwrap();
        let long = SphereSampler::new(4, 200, 3).directions().unwrap();
        assert_eq!(&long[..50], &short[..]);
    }

    #[test]
    fn quasi_random_covers_sphere() {
        let dirs = SphereSampler::new(3, 4000, 0).directions().unwrap();
        let mean: Vector = dirs.iter().fold(Vector::zeros(3), |a, v| a + v) / dirs.len() as f64;
        assert!(mean.norm() < 0.02);
        for axis in 0..3 {
            let hits = dirs.iter().filter(|v| v[axis] > 0.95).count();
            assert!(hits > 0);
        }
    }

    #[test]
    fn uniform_angle_rejects_other_dims() {
        let s = SphereSampler::new(3, 10, 0).with_scheme(SphereScheme::UniformAngle);
        assert!(s.directions().is_err());
    }

    #[test]
    fn identical_sets_have_zero_gap() {
        let e = Ellipsoid::centered(SpdMatrix::from_rows(2, &[2.0, 0.3, 0.3, 1.0]).unwrap());
        let g = hausdorff_sampled(&e, |s| e.support(s), &SphereSampler::default_for(2)).unwrap();
        assert!(g.abs() < 1e-10);
    }

    #[test]
    fn concentric_balls_gap_is_radius_difference() {
        let eps = 0.25;
        let outer = Ellipsoid::centered(SpdMatrix::from_diagonal(&[(1.0 + eps) * (1.0 + eps); 3]).unwrap());
        let inner = Ellipsoid::centered(SpdMatrix::identity(3));
        let g = hausdorff_sampled(&outer, |s| inner.support(s), &SphereSampler::default_for(3)).unwrap();
        assert!((g - eps).abs() < 1e-12);
    }

    #[test]
    fn violation_is_not_outer() {
        let outer = Ellipsoid::centered(SpdMatrix::identity(2));
        let inner = Ellipsoid::centered(SpdMatrix::from_diagonal(&[4.0, 4.0]).unwrap());
        let r = hausdorff_sampled(&outer, |s| inner.support(s), &SphereSampler::new(2, 64, 0));
        assert!(matches!(r, Err(Error::NotOuter { .. })));
    }

    #[test]
    fn upper_bound_examples() {
        let m = SpdMatrix::from_rows(2, &[3.0, 1.0, 1.0, 2.0]).unwrap();
        assert!(hausdorff_upper_bound(&m, std::slice::from_ref(&m)).unwrap() < 1e-12);
        let i = SpdMatrix::identity(2);
        let four = SpdMatrix::from_diagonal(&[4.0, 4.0]).unwrap();
        assert!(hausdorff_upper_bound(&four, &[i.clone(), i.clone()]).unwrap() < 1e-12);
        let nine = SpdMatrix::from_diagonal(&[9.0, 9.0]).unwrap();
        assert!((hausdorff_upper_bound(&nine, &[i.clone(), i]).unwrap() - 1.0).abs() < 1e-12);
        assert!(hausdorff_upper_bound(&nine, &[SpdMatrix::identity(3)]).is_err());
    }
}
