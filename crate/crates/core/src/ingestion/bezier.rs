use nalgebra::{Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// A cubic Bézier curve fitted to a stroke polyline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BezierStroke {
    pub control: [Point; 4],
    /// Mean squared distance from the polyline points to the curve.
    pub fit_residual: f64,
}

impl BezierStroke {
    pub fn point(&self, t: f64) -> Point {
        eval(&self.control, t)
    }

    /// Control points relative to the start point, flattened.
    pub fn features(&self) -> [f64; 8] {
        let o = self.control[0];
        let mut f = [0.0; 8];
        for (i, p) in self.control.iter().enumerate() {
            f[2 * i] = p[0] - o[0];
            f[2 * i + 1] = p[1] - o[1];
        }
        f
    }
}

/// Settings for [`fit_bezier`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Levenberg–Marquardt rounds refining control points and sample
    /// parameters jointly; 0 keeps the plain chord-length least-squares fit.
    pub refine_iterations: usize,
    /// Extra starts from seeded random monotone parameterizations, tried
    /// while no refined fit is exact.
    pub restarts: usize,
    /// Residual, relative to the squared diagonal of the stroke's bounding
    /// box, at or below which a fit counts as exact.
    pub exact_residual: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            refine_iterations: 200,
            restarts: 64,
            exact_residual: 1e-12,
        }
    }
}

/// Least-squares cubic through a polyline with both endpoints pinned.
///
/// The fit uses chord-length parameters. When refinement is enabled and
/// that fit is not exact, the parameters are refined from chord-length,
/// centripetal, uniform and then seeded random starts, and the first refined
/// fit that is exact replaces it. Refined fits that stay inexact are
/// discarded: on noisy strokes the free parameters chase the noise and
/// drag the inner control points far from the stroke.
pub fn fit_bezier(points: &[Point], options: FitOptions) -> Result<BezierStroke> {
    if points.len() < 2 {
        return Err(Error::Invalid("a stroke needs at least two points".into()));
    }
    if points.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::Invalid("stroke coordinates must be finite".into()));
    }
    let (p0, p3) = (points[0], points[points.len() - 1]);
    if points.iter().all(|p| *p == p0) {
        return Ok(BezierStroke {
            control: [p0; 4],
            fit_residual: 0.0,
        });
    }
    if points.len() == 2 {
        return Ok(BezierStroke {
            control: [p0, lerp(p0, p3, 1.0 / 3.0), lerp(p0, p3, 2.0 / 3.0), p3],
            fit_residual: 0.0,
        });
    }
    let (mut lo, mut hi) = (p0, p0);
    for p in points {
        lo = [lo[0].min(p[0]), lo[1].min(p[1])];
        hi = [hi[0].max(p[0]), hi[1].max(p[1])];
    }
    let exact = options.exact_residual * dist2(lo, hi);
    let chord_t = accumulated(points, 1.0);
    let chord_ctrl = solve(points, &chord_t);
    let chord = BezierStroke {
        control: chord_ctrl,
        fit_residual: residual(points, &chord_ctrl),
    };
    if options.refine_iterations == 0 || chord.fit_residual <= exact {
        return Ok(chord);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let m = points.len();
    let starts = [1.0, 0.5, 0.0].into_iter().map(Some).chain((0..options.restarts).map(|_| None));
    for exponent in starts {
        let t = match exponent {
            Some(e) => accumulated(points, e),
            None => {
                let mut inner: Vec<f64> = (1..m - 1).map(|_| rng.random::<f64>()).collect();
                inner.sort_by(f64::total_cmp);
                std::iter::once(0.0).chain(inner).chain(std::iter::once(1.0)).collect()
            }
        };
        let ctrl = levenberg_marquardt(points, solve(points, &t), t, options.refine_iterations);
        let fit_residual = residual(points, &ctrl);
        if fit_residual <= exact {
            return Ok(BezierStroke { control: ctrl, fit_residual });
        }
    }
    Ok(chord)
}

/// Minimizes the summed squared distance between each point and the curve
/// at its own parameter over the inner control points and the interior
/// parameters together. The parameters only touch their own residual, so
/// each step eliminates them and solves a 4×4 system.
fn levenberg_marquardt(points: &[Point], mut ctrl: [Point; 4], mut t: Vec<f64>, iterations: usize) -> [Point; 4] {
    let m = points.len();
    let mut cost = sq_error(points, &ctrl, &t);
    let mut lambda = 1e-3;
    for _ in 0..iterations {
        if cost < 1e-30 {
            break;
        }
        let mut h = Matrix4::<f64>::zeros();
        let mut g = Vector4::<f64>::zeros();
        let mut cross = vec![Vector4::<f64>::zeros(); m];
        let mut gt = vec![0.0; m];
        let mut ht = vec![0.0; m];
        for i in 0..m {
            let b = basis(t[i]);
            let r = sub(eval(&ctrl, t[i]), points[i]);
            // Rows of the Jacobian for x and y against (P1x, P1y, P2x, P2y).
            let jx = Vector4::new(b[1], 0.0, b[2], 0.0);
            let jy = Vector4::new(0.0, b[1], 0.0, b[2]);
            h += jx * jx.transpose() + jy * jy.transpose();
            g += jx * r[0] + jy * r[1];
            if i > 0 && i < m - 1 {
                let d = derivative(&ctrl, t[i]).0;
                cross[i] = jx * d[0] + jy * d[1];
                gt[i] = dot(d, r);
                ht[i] = dot(d, d);
            }
        }
        loop {
            let mut s = h;
            for k in 0..4 {
                s[(k, k)] *= 1.0 + lambda;
            }
            let mut rhs = -g;
            let mut damped = vec![0.0; m];
            for i in 1..m - 1 {
                damped[i] = ht[i] * (1.0 + lambda) + 1e-300;
                s -= cross[i] * cross[i].transpose() / damped[i];
                rhs += cross[i] * (gt[i] / damped[i]);
            }
            let Some(dp) = s.lu().solve(&rhs) else {
                lambda *= 10.0;
                if lambda > 1e12 {
                    return ctrl;
                }
                continue;
            };
            let mut next = ctrl;
            next[1] = add(ctrl[1], [dp[0], dp[1]]);
            next[2] = add(ctrl[2], [dp[2], dp[3]]);
            let mut tn = t.clone();
            for i in 1..m - 1 {
                let dt = (-gt[i] - cross[i].dot(&dp)) / damped[i];
                tn[i] = (t[i] + dt).clamp(0.0, 1.0);
            }
            let next_cost = sq_error(points, &next, &tn);
            if next_cost < cost {
                let settled = cost - next_cost <= 1e-14 * cost;
                ctrl = next;
                t = tn;
                cost = next_cost;
                lambda = (lambda / 3.0).max(1e-12);
                if settled {
                    return ctrl;
                }
                break;
            }
            lambda *= 4.0;
            if lambda > 1e12 {
                return ctrl;
            }
        }
    }
    ctrl
}

/// Normalized cumulative sums of chord length raised to `exponent`: 1 is
/// chord-length, 0.5 centripetal and 0 uniform spacing. A closed polyline
/// falls back to uniform spacing.
fn accumulated(points: &[Point], exponent: f64) -> Vec<f64> {
    let mut acc = vec![0.0];
    for w in points.windows(2) {
        acc.push(acc[acc.len() - 1] + dist(w[0], w[1]).powf(exponent));
    }
    let total = acc[acc.len() - 1];
    if total == 0.0 {
        return accumulated(points, 0.0);
    }
    acc.into_iter().map(|a| a / total).collect()
}

fn basis(t: f64) -> [f64; 4] {
    let u = 1.0 - t;
    [u * u * u, 3.0 * u * u * t, 3.0 * u * t * t, t * t * t]
}

fn eval(c: &[Point; 4], t: f64) -> Point {
    let b = basis(t);
    let mut p = [0.0; 2];
    for (bk, ck) in b.iter().zip(c) {
        p[0] += bk * ck[0];
        p[1] += bk * ck[1];
    }
    p
}

fn derivative(c: &[Point; 4], t: f64) -> (Point, Point) {
    let u = 1.0 - t;
    let d: Vec<Point> = (0..3).map(|i| sub(c[i + 1], c[i])).collect();
    let first = add(add(scale(d[0], 3.0 * u * u), scale(d[1], 6.0 * u * t)), scale(d[2], 3.0 * t * t));
    let second = add(scale(sub(d[1], d[0]), 6.0 * u), scale(sub(d[2], d[1]), 6.0 * t));
    (first, second)
}

/// Pinned-endpoint least squares for the inner control points, with a
/// vanishing pull toward the straight-segment thirds so that too few
/// distinct samples still give a unique answer.
fn solve(points: &[Point], t: &[f64]) -> [Point; 4] {
    let (p0, p3) = (points[0], points[points.len() - 1]);
    let (l1, l2) = (lerp(p0, p3, 1.0 / 3.0), lerp(p0, p3, 2.0 / 3.0));
    let (mut a11, mut a12, mut a22) = (0.0, 0.0, 0.0);
    let (mut x1, mut x2) = ([0.0; 2], [0.0; 2]);
    for (p, &ti) in points.iter().zip(t) {
        let b = basis(ti);
        a11 += b[1] * b[1];
        a12 += b[1] * b[2];
        a22 += b[2] * b[2];
        let r = sub(*p, add(scale(p0, b[0]), scale(p3, b[3])));
        x1 = add(x1, scale(r, b[1]));
        x2 = add(x2, scale(r, b[2]));
    }
    let ridge = 1e-12 * (a11 + a22).max(1e-300);
    a11 += ridge;
    a22 += ridge;
    x1 = add(x1, scale(l1, ridge));
    x2 = add(x2, scale(l2, ridge));
    let det = a11 * a22 - a12 * a12;
    let p1 = scale(sub(scale(x1, a22), scale(x2, a12)), 1.0 / det);
    let p2 = scale(sub(scale(x2, a11), scale(x1, a12)), 1.0 / det);
    [p0, p1, p2, p3]
}

fn sq_error(points: &[Point], c: &[Point; 4], t: &[f64]) -> f64 {
    points.iter().zip(t).map(|(p, &ti)| dist2(eval(c, ti), *p)).sum()
}

/// Mean squared distance to the nearest curve point.
pub(crate) fn residual(points: &[Point], c: &[Point; 4]) -> f64 {
    let s: f64 = points.iter().map(|p| nearest_sq(c, *p)).sum();
    s / points.len() as f64
}

/// Squared distance from `p` to the curve. The stationary points of the
/// squared distance are the roots of `(c(t) - p) · c'(t)`, a quintic whose
/// roots in [0, 1] are isolated by Bernstein subdivision and refined by
/// bisection.
fn nearest_sq(c: &[Point; 4], p: Point) -> f64 {
    const B2: [f64; 3] = [1.0, 2.0, 1.0];
    const B3: [f64; 4] = [1.0, 3.0, 3.0, 1.0];
    const B5: [f64; 6] = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];
    let mut f = [0.0; 6];
    for i in 0..4 {
        for j in 0..3 {
            let d = scale(sub(c[j + 1], c[j]), 3.0);
            f[i + j] += B3[i] * B2[j] * dot(sub(c[i], p), d);
        }
    }
    for (fk, b) in f.iter_mut().zip(B5) {
        *fk /= b;
    }
    let mut roots = Vec::new();
    isolate(f, 0.0, 1.0, &mut roots);
    roots
        .into_iter()
        .map(|t| dist2(eval(c, t), p))
        .fold(dist2(c[0], p).min(dist2(c[3], p)), f64::min)
}

/// Pushes the roots of a quintic in Bernstein form over `[lo, hi]`. The
/// number of sign changes among the coefficients bounds the root count, so
/// a span with none is skipped and a span with one holds exactly one root.
fn isolate(f: [f64; 6], lo: f64, hi: f64, roots: &mut Vec<f64>) {
    let changes = f.windows(2).filter(|w| w[0] * w[1] <= 0.0).count();
    if changes == 0 {
        return;
    }
    let mid = 0.5 * (lo + hi);
    if changes == 1 && f[0] * f[5] < 0.0 {
        let (mut a, mut b) = (0.0, 1.0);
        while b - a > f64::EPSILON {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if (bernstein(&f, m) < 0.0) == (f[0] < 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        roots.push(lo + (hi - lo) * 0.5 * (a + b));
        return;
    }
    if hi - lo < 1e-12 || mid <= lo || mid >= hi {
        roots.push(mid);
        return;
    }
    let (left, right) = subdivide(f);
    isolate(left, lo, mid, roots);
    isolate(right, mid, hi, roots);
}

fn bernstein(f: &[f64; 6], s: f64) -> f64 {
    let mut b = *f;
    for r in 1..6 {
        for k in 0..6 - r {
            b[k] += s * (b[k + 1] - b[k]);
        }
    }
    b[0]
}

/// De Casteljau split at the midpoint.
fn subdivide(f: [f64; 6]) -> ([f64; 6], [f64; 6]) {
    let mut b = f;
    let mut left = [0.0; 6];
    let mut right = [0.0; 6];
    left[0] = b[0];
    right[5] = b[5];
    for r in 1..6 {
        for k in 0..6 - r {
            b[k] = 0.5 * (b[k] + b[k + 1]);
        }
        left[r] = b[0];
        right[5 - r] = b[5 - r];
    }
    (left, right)
}

fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn dist2(a: Point, b: Point) -> f64 {
    let d = sub(a, b);
    dot(d, d)
}

fn dist(a: Point, b: Point) -> f64 {
    dist2(a, b).sqrt()
}

fn lerp(a: Point, b: Point, s: f64) -> Point {
    add(a, scale(sub(b, a), s))
}
