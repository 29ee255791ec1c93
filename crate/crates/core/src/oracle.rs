//! Brute-force references used to check the fast paths: a grid search for
//! the volume-optimal β, sampled containment certificates and a minimum
//! volume enclosing ellipsoid of sampled boundary points.

use crate::error::{Error, Result};
use crate::exec::Strategy;
use crate::geometry::{Ellipsoid, MinkowskiExpression, PSumSet};
use crate::linalg::{Matrix, SpdMatrix, Vector};
use crate::metrics::SphereSampler;

pub const CONTAINMENT_TOL: f64 = 1e-9;
pub const KHACHIYAN_TOL: f64 = 1e-7;
pub const KHACHIYAN_MAX_ITERATIONS: usize = 100_000;

/// `n` points spaced evenly in `log β` over `[lo, hi]`.
pub fn log_spaced_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect(),
    }
}

/// The default search grid, `10⁴` points over `[10⁻⁶, 10⁶]`.
pub fn default_beta_grid() -> Vec<f64> {
    log_spaced_grid(1e-6, 1e6, 10_000)
}

fn log_det_objective(lambdas: &[f64], p: f64, beta: f64) -> f64 {
    let a = (1.0 + 1.0 / beta).powf(1.0 / p);
    let b = (1.0 + beta).powf(1.0 / p);
    lambdas.iter().map(|l| (a + b * l).ln()).sum()
}

fn log_det_slope(lambdas: &[f64], p: f64, beta: f64) -> f64 {
    let r = 1.0 / p;
    let a = (1.0 + 1.0 / beta).powf(r);
    let b = (1.0 + beta).powf(r);
    let da = -r * a / (beta * (beta + 1.0));
    let db = r * b / (1.0 + beta);
    lambdas.iter().map(|l| (da + db * l) / (a + b * l)).sum()
}

/// Grid minimizer of `log det Q(β)` (up to a constant), refined by
/// bisection on the sign of its derivative between the neighbouring grid
/// points.
pub fn grid_beta_argmin(lambdas: &[f64], p: f64, grid: &[f64]) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0 && p != 2.0) {
        return Err(Error::InvalidP(p.to_string()));
    }
    if lambdas.is_empty() || grid.is_empty() {
        return Err(Error::Empty("grid search input"));
    }
    if grid.iter().any(|&b| !(b > 0.0)) || lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidConfig("grid and eigenvalues must be positive".into()));
    }
    let (i, _) = Strategy::Sequential
        .argmin(grid, |&b| log_det_objective(lambdas, p, b))
        .ok_or(Error::Empty("grid"))?;
    let mut lo = grid[i.saturating_sub(1)];
    let mut hi = grid[(i + 1).min(grid.len() - 1)];
    if !(log_det_slope(lambdas, p, lo) < 0.0 && log_det_slope(lambdas, p, hi) > 0.0) {
        return Ok(grid[i]);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if log_det_slope(lambdas, p, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContainmentReport {
    pub directions_tested: usize,
    /// Smallest `h_outer − h_inner` over the tested directions.
    pub min_margin: f64,
    pub worst_direction: Vector,
    pub tolerance: f64,
}

impl ContainmentReport {
    pub fn passed(&self) -> bool {
        self.min_margin >= -self.tolerance
    }
}

/// Sampled certificate that `outer` contains the set with support function
/// `inner_support`.
pub fn check_containment<F>(
    outer: &Ellipsoid,
    inner_support: F,
    sampler: &SphereSampler,
    tol: f64,
) -> Result<ContainmentReport>
where
    F: Fn(&Vector) -> f64 + Sync + Send,
{
    let dirs = sampler.directions()?;
    check_containment_on(outer, inner_support, &dirs, tol, Strategy::default())
}

pub fn check_containment_on<F>(
    outer: &Ellipsoid,
    inner_support: F,
    dirs: &[Vector],
    tol: f64,
    strategy: Strategy,
) -> Result<ContainmentReport>
where
    F: Fn(&Vector) -> f64 + Sync + Send,
{
    for d in dirs {
        crate::linalg::ensure_dim(outer.dim(), d.len())?;
    }
    let (i, m) = strategy
        .argmin(dirs, |y| outer.support(y) - inner_support(y))
        .ok_or(Error::Empty("direction list"))?;
    Ok(ContainmentReport {
        directions_tested: dirs.len(),
        min_margin: m,
        worst_direction: dirs[i].clone(),
        tolerance: tol,
    })
}

/// Lifted points `(x, 1)` stored row-major, `k = d + 1` values each.
struct Lifted {
    k: usize,
    data: Vec<f64>,
}

impl Lifted {
    fn new(points: &[Vector]) -> Self {
        let k = points[0].len() + 1;
        let mut data = Vec::with_capacity(points.len() * k);
        for q in points {
            data.extend(q.iter());
            data.push(1.0);
        }
        Self { k, data }
    }

    fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.k)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }
}

fn mat_vec(a: &[f64], k: usize, x: &[f64], out: &mut [f64]) {
    for (r, o) in out.iter_mut().enumerate() {
        *o = a[r * k..(r + 1) * k].iter().zip(x).map(|(p, q)| p * q).sum();
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inverse moment matrix `(Σ uᵢ qᵢqᵢᵀ)⁻¹` of the lifted points (row-major)
/// and the quadratic forms `qᵢᵀ X⁻¹ qᵢ`.
fn refresh(lifted: &Lifted, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = lifted.k;
    let mut x = Matrix::zeros(k, k);
    for (q, &w) in lifted.rows().zip(u) {
        if w > 0.0 {
            for r in 0..k {
                for c in 0..k {
                    x[(r, c)] += w * q[r] * q[c];
                }
            }
        }
    }
    let inv = SpdMatrix::with_tolerance(x, 1e-9)
        .map_err(|_| Error::DegeneratePointSet("points are not affinely independent".into()))?
        .inverse()
        .into_matrix();
    let inv: Vec<f64> = (0..k * k).map(|i| inv[(i / k, i % k)]).collect();
    let mut tmp = vec![0.0; k];
    let m = lifted
        .rows()
        .map(|q| {
            mat_vec(&inv, k, q, &mut tmp);
            dot(q, &tmp)
        })
        .collect();
    Ok((inv, m))
}

/// Barycentric weights of the enclosing ellipsoid and the iteration count.
fn khachiyan_weights(points: &[Vector], tol: f64) -> Result<(Vec<f64>, usize)> {
    let n = points.len();
    let lifted = Lifted::new(points);
    let k = lifted.k;
    let dd = k as f64;
    let mut u = vec![1.0 / n as f64; n];
    let (mut inv, mut m) = refresh(&lifted, &u)?;
    let mut v = vec![0.0; k];
    for it in 0..KHACHIYAN_MAX_ITERATIONS {
        let (jp, mp) = m
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |a, (i, &x)| if x > a.1 { (i, x) } else { a });
        if mp <= dd * (1.0 + tol) {
            return Ok((u, it));
        }
        let (jm, mm) = m
            .iter()
            .zip(&u)
            .enumerate()
            .filter(|(_, (_, &w))| w > 0.0)
            .fold((0, f64::INFINITY), |a, (i, (&x, _))| if x < a.1 { (i, x) } else { a });
        // New weights are (1 − a)·u + a·e_j; a < 0 moves weight away from j.
        let (j, a) = if mp / dd - 1.0 >= 1.0 - mm / dd {
            (jp, (mp - dd) / (dd * (mp - 1.0)))
        } else {
            let uj = u[jm];
            (jm, -((dd - mm) / (dd * (mm - 1.0))).min(uj / (1.0 - uj)))
        };
        u.iter_mut().for_each(|w| *w *= 1.0 - a);
        u[j] += a;
        if u[j] < 1e-300 {
            u[j] = 0.0;
        }
        if (it + 1) % 256 == 0 {
            (inv, m) = refresh(&lifted, &u)?;
            continue;
        }
        mat_vec(&inv, k, lifted.row(j), &mut v);
        let c = a / ((1.0 - a) + a * m[j]);
        let scale = 1.0 / (1.0 - a);
        for (mi, q) in m.iter_mut().zip(lifted.rows()) {
            let w = dot(q, &v);
            *mi = (*mi - c * w * w) * scale;
        }
        for r in 0..k {
            for s in 0..k {
                inv[r * k + s] = (inv[r * k + s] - c * v[r] * v[s]) * scale;
            }
        }
    }
    Ok((u, KHACHIYAN_MAX_ITERATIONS))
}

/// Minimum-volume ellipsoid enclosing `points`, by Khachiyan's coordinate
/// ascent with away steps. The returned shape is inflated just enough that
/// every point satisfies the ellipsoid inequality.
pub fn mvee_khachiyan(points: &[Vector], tol: f64) -> Result<Ellipsoid> {
    mvee_khachiyan_counted(points, tol).map(|(e, _)| e)
}

/// As [`mvee_khachiyan`], also returning the number of ascent iterations.
pub fn mvee_khachiyan_counted(points: &[Vector], tol: f64) -> Result<(Ellipsoid, usize)> {
    let first = points
        .first()
        .ok_or_else(|| Error::DegeneratePointSet("no points".into()))?;
    let d = first.len();
    if d == 0 || points.iter().any(|q| q.len() != d) {
        return Err(Error::DegeneratePointSet("inconsistent point dimensions".into()));
    }
    if points.len() < d + 1 {
        return Err(Error::DegeneratePointSet(format!(
            "need at least {} points in dimension {d}, got {}",
            d + 1,
            points.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("Khachiyan tolerance must be positive".into()));
    }
    let (u, iterations) = khachiyan_weights(points, tol)?;
    let mut center = Vector::zeros(d);
    for (q, &w) in points.iter().zip(&u) {
        center += q * w;
    }
    let mut scatter = Matrix::zeros(d, d);
    for (q, &w) in points.iter().zip(&u) {
        if w > 0.0 {
            let r = q - &center;
            scatter.ger(w, &r, &r, 1.0);
        }
    }
    let shape = SpdMatrix::with_tolerance(scatter * d as f64, 1e-6)
        .map_err(|_| Error::DegeneratePointSet("enclosing shape is singular".into()))?;
    let e = Ellipsoid::new(center, shape)?;
    let worst = points.iter().map(|q| e.level(q)).fold(1.0, f64::max);
    if worst > 1.0 {
        return Ok((Ellipsoid::new(e.center.clone(), e.shape.scaled(worst)?)?, iterations));
    }
    Ok((e, iterations))
}

/// Khachiyan ellipsoid of boundary points `extreme(y)` over sampled unit
/// directions. It is contained in the smallest ellipsoid enclosing the set.
pub fn mvee_reference<F>(dim: usize, extreme: F, sampler: &SphereSampler, tol: f64) -> Result<Ellipsoid>
where
    F: Fn(&Vector) -> Result<Vector> + Sync + Send,
{
    crate::linalg::ensure_dim(dim, sampler.dim)?;
    let dirs = sampler.directions()?;
    let points = Strategy::default()
        .map(&dirs, |y| extreme(y))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    mvee_khachiyan(&points, tol)
}

pub fn psum_mvee_reference(set: &PSumSet, n_dirs: usize, tol: f64) -> Result<Ellipsoid> {
    let sampler = SphereSampler::new(set.dim(), n_dirs, 0);
    mvee_reference(set.dim(), |y| set.extreme_point(y), &sampler, tol)
}

/// Same reference for a Minkowski sum of p-sum blocks, such as a reach set.
pub fn minkowski_mvee_reference(expr: &MinkowskiExpression, n_dirs: usize, tol: f64) -> Result<Ellipsoid> {
    let sampler = SphereSampler::new(expr.dim(), n_dirs, 0);
    mvee_reference(expr.dim(), |y| expr.extreme_point(y), &sampler, tol)
}
