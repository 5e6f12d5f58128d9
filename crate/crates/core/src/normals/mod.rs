//! Concurrent normals of convex bodies.
//!
//! A line normal to `∂C` passes through `q` exactly when `v` is a critical
//! point of `h_{C-q}(v) = h_C(v) - <q, v>` on the unit sphere, so counting
//! concurrent normals means counting critical points. Planar bodies are
//! handled in the angle parametrisation; bodies in `R^3` on an icosahedral
//! mesh followed by Newton refinement.

mod mesh;
mod support;

use std::f64::consts::TAU;

use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use serde::{Deserialize, Serialize};

pub use mesh::{IcoSphere, SEARCH_LEVEL};
pub use support::{BodyKind, SupportFunction, CONVEXITY_SAMPLES};

use crate::error::{Error, Result};
use crate::exec::Execution;
use mesh::{angle, dot, normalize, tangent_basis};

/// Angular samples for planar root bracketing.
pub const ANGULAR_SAMPLES: usize = 4096;
/// Smallest `|g''|` at a root of a non-degenerate planar count.
pub const SECOND_DERIVATIVE_TOL: f64 = 1e-7;
/// Roots closer than this angle have collided.
pub const ROOT_COLLISION: f64 = 1e-8;
/// Smallest `|det Hess|` at a non-degenerate critical point on `S^2`.
pub const HESSIAN_DET_TOL: f64 = 1e-8;

const BISECTION_WIDTH: f64 = 1e-12;
const FLAT_TOL: f64 = 1e-12;
const NEWTON_TOL: f64 = 1e-10;
const DEDUP_ANGLE_3D: f64 = 1e-6;
const MAX_CANDIDATES_3D: usize = 2000;

/// A point `q` of the ambient space.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryPoint(Vec<f64>);

impl QueryPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("query point has non-finite entries: {coords:?}")));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// Critical points of `h_{C-q}` on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalCount {
    pub count: usize,
    pub critical_directions: Vec<Vec<f64>>,
    pub morse_indices: Vec<usize>,
    pub degenerate: bool,
    /// `h_{C-q} >= 0` at every sampled direction, i.e. `q` lies in `C`.
    pub in_body: bool,
}

impl NormalCount {
    /// `sum (-1)^index`: the Euler characteristic of the sphere when the
    /// count is non-degenerate.
    pub fn euler_sum(&self) -> i64 {
        self.morse_indices.iter().map(|&i| if i % 2 == 0 { 1 } else { -1 }).sum()
    }

    fn degenerate(in_body: bool) -> Self {
        Self { count: 0, critical_directions: Vec::new(), morse_indices: Vec::new(), degenerate: true, in_body }
    }
}

/// Support function of `C - q`.
pub fn translate_body(h: &SupportFunction, q: &QueryPoint) -> Result<SupportFunction> {
    h.translated(q.coords())
}

/// Count normals of a planar body through `q`.
///
/// `g'(theta)` is sampled at [`ANGULAR_SAMPLES`] angles together with
/// `g''`. Each sample interval is split at a sign change of `g''`, so `g'` is
/// monotone on every piece and holds at most one root, which bisection
/// then locates to `1e-12`.
pub fn count_normals_2d(h: &SupportFunction, q: &QueryPoint) -> Result<NormalCount> {
    if h.dim() != 2 {
        return Err(Error::InvalidArgument(format!("planar counting needs a planar body, got dim {}", h.dim())));
    }
    h.check_dim(q.coords().len())?;
    let shifted = h.translated(q.coords())?;
    Ok(PlanarCounter::new(&shifted).count())
}

struct PlanarCounter<'a> {
    body: &'a SupportFunction,
    samples: Vec<(f64, f64, f64, f64)>,
}

impl<'a> PlanarCounter<'a> {
    fn new(body: &'a SupportFunction) -> Self {
        let samples = (0..ANGULAR_SAMPLES)
            .map(|i| {
                let t = TAU * i as f64 / ANGULAR_SAMPLES as f64;
                let (g, g1, g2) = body.theta_derivatives(t);
                (t, g, g1, g2)
            })
            .collect();
        Self { body, samples }
    }

    fn d1(&self, t: f64) -> f64 {
        self.body.theta_derivatives(t).1
    }

    fn d2(&self, t: f64) -> f64 {
        self.body.theta_derivatives(t).2
    }

    fn count(&self) -> NormalCount {
        let in_body = self.samples.iter().all(|s| s.1 >= 0.0);
        let scale = self.samples.iter().fold(0.0f64, |m, s| m.max(s.1.abs()));
        let flat = self.samples.iter().all(|s| s.2.abs() <= FLAT_TOL * scale.max(1.0));
        if flat {
            // every direction is critical (centre of a disc)
            return NormalCount::degenerate(in_body);
        }

        let mut roots: Vec<f64> = Vec::new();
        let n = self.samples.len();
        for i in 0..n {
            let (a, _, da, sa) = self.samples[i];
            let (b, _, db, sb) = if i + 1 < n {
                self.samples[i + 1]
            } else {
                let s = self.samples[0];
                (TAU, s.1, s.2, s.3)
            };
            let mut pieces = vec![(a, da, b, db)];
            if sign(sa) * sign(sb) < 0 {
                let z = bisect(a, b, sa, |t| self.d2(t));
                let dz = self.d1(z);
                pieces = vec![(a, da, z, dz), (z, dz, b, db)];
            }
            for (lo, dlo, hi, dhi) in pieces {
                if dlo == 0.0 {
                    roots.push(lo);
                } else if sign(dlo) * sign(dhi) < 0 {
                    roots.push(bisect(lo, hi, dlo, |t| self.d1(t)));
                }
            }
        }
        for r in roots.iter_mut() {
            *r = r.rem_euclid(TAU);
        }
        roots.sort_by(f64::total_cmp);

        let mut degenerate = false;
        let mut unique: Vec<f64> = Vec::with_capacity(roots.len());
        for r in roots {
            match unique.last() {
                Some(&last) if r - last < ROOT_COLLISION => degenerate = true,
                _ => unique.push(r),
            }
        }
        if unique.len() > 1 && unique[0] + TAU - unique[unique.len() - 1] < ROOT_COLLISION {
            unique.pop();
            degenerate = true;
        }

        let mut morse_indices = Vec::with_capacity(unique.len());
        for &t in &unique {
            let d2 = self.d2(t);
            if d2.abs() < SECOND_DERIVATIVE_TOL {
                degenerate = true;
            }
            morse_indices.push(if d2 > 0.0 { 0 } else { 1 });
        }
        NormalCount {
            count: unique.len(),
            critical_directions: unique.iter().map(|t| vec![t.cos(), t.sin()]).collect(),
            morse_indices,
            degenerate,
            in_body,
        }
    }
}

fn sign(x: f64) -> i32 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Root of `f` in `[lo, hi]` given a sign change, with `f(lo)` known.
fn bisect(mut lo: f64, mut hi: f64, mut flo: f64, f: impl Fn(f64) -> f64) -> f64 {
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if sign(fm) == sign(flo) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Count normals of a body in `R^3` through `q`.
///
/// Candidates are mesh vertices that are discrete extrema, saddle-like (at
/// least four sign changes around their ring), or local minima of the
/// gradient norm whose first Newton step stays within two mesh edges. Each
/// candidate is refined by Newton in a tangent chart to `|grad| <= 1e-10`.
/// A vertex-detected candidate that migrates more than two edges, or a root
/// set whose Morse indices do not sum to 2, raises `MeshTooCoarse`.
pub fn count_normals_3d(h: &SupportFunction, q: &QueryPoint) -> Result<NormalCount> {
    if h.dim() != 3 {
        return Err(Error::InvalidArgument(format!("spatial counting needs a body in R^3, got dim {}", h.dim())));
    }
    h.check_dim(q.coords().len())?;
    let body = h.translated(q.coords())?;
    let mesh = IcoSphere::search_mesh();
    let reach = 2.0 * mesh.max_edge_angle;

    let values: Vec<f64> = mesh.vertices.iter().map(|v| body.value(v)).collect();
    let in_body = values.iter().all(|&f| f >= 0.0);
    let grads: Vec<[f64; 3]> = mesh.vertices.iter().map(|&v| riemannian_gradient(&body, v)).collect();
    let grad_norms: Vec<f64> = grads.iter().map(|g| dot(*g, *g).sqrt()).collect();
    let scale = values.iter().fold(0.0f64, |m, f| m.max(f.abs())).max(1.0);
    if grad_norms.iter().all(|&g| g <= FLAT_TOL * scale) {
        return Ok(NormalCount::degenerate(in_body));
    }

    // (vertex, detected by the ring test)
    let mut candidates: Vec<(usize, bool)> = Vec::new();
    for (i, ring) in mesh.neighbors.iter().enumerate() {
        let diffs: Vec<i32> = ring.iter().map(|&j| if values[j as usize] >= values[i] { 1 } else { -1 }).collect();
        let changes = (0..diffs.len()).filter(|&k| diffs[k] != diffs[(k + 1) % diffs.len()]).count();
        let extremum = diffs.iter().all(|&d| d > 0) || diffs.iter().all(|&d| d < 0);
        if extremum || changes >= 4 {
            candidates.push((i, true));
        } else if ring.iter().all(|&j| grad_norms[j as usize] > grad_norms[i]) {
            candidates.push((i, false));
        }
    }
    if candidates.len() > MAX_CANDIDATES_3D {
        return Ok(NormalCount::degenerate(in_body));
    }

    let mut roots: Vec<([f64; 3], usize, f64)> = Vec::new();
    for (i, ring_detected) in candidates {
        let start = mesh.vertices[i];
        match newton_on_sphere(&body, start, reach) {
            Some(x) if angle(start, x) <= reach => {
                if roots.iter().all(|(r, _, _)| angle(*r, x) > DEDUP_ANGLE_3D) {
                    let (index, det) = morse_data(&body, x);
                    roots.push((x, index, det));
                }
            }
            _ if ring_detected => {
                return Err(Error::MeshTooCoarse(format!(
                    "refinement from vertex {i} left its two-edge neighbourhood; increase the subdivision"
                )));
            }
            _ => {}
        }
    }
    roots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

    let degenerate = roots.iter().any(|r| r.2.abs() < HESSIAN_DET_TOL);
    let result = NormalCount {
        count: roots.len(),
        critical_directions: roots.iter().map(|r| r.0.to_vec()).collect(),
        morse_indices: roots.iter().map(|r| r.1).collect(),
        degenerate,
        in_body,
    };
    if !degenerate && result.euler_sum() != 2 {
        return Err(Error::MeshTooCoarse(format!(
            "Morse indices {:?} do not sum to the Euler characteristic 2",
            result.morse_indices
        )));
    }
    Ok(result)
}

fn riemannian_gradient(body: &SupportFunction, v: [f64; 3]) -> [f64; 3] {
    let g = body.ambient_gradient(&v);
    let g = [g[0], g[1], g[2]];
    let radial = dot(g, v);
    [g[0] - radial * v[0], g[1] - radial * v[1], g[2] - radial * v[2]]
}

/// Gradient and Hessian of `h` restricted to the sphere, in the tangent
/// basis `(e1, e2)` at `v`.
fn chart_derivatives(body: &SupportFunction, v: [f64; 3], e1: [f64; 3], e2: [f64; 3]) -> (Vector2<f64>, Matrix2<f64>) {
    let grad = body.ambient_gradient(&v);
    let grad = [grad[0], grad[1], grad[2]];
    let radial = dot(grad, v);
    let hess = body.ambient_hessian(&v);
    let quad = |a: [f64; 3], b: [f64; 3]| -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += a[i] * hess[(i, j)] * b[j];
            }
        }
        s
    };
    let g = Vector2::new(dot(grad, e1), dot(grad, e2));
    let h12 = quad(e1, e2);
    let h = Matrix2::new(quad(e1, e1) - radial, h12, h12, quad(e2, e2) - radial);
    (g, h)
}

fn newton_on_sphere(body: &SupportFunction, start: [f64; 3], reach: f64) -> Option<[f64; 3]> {
    let mut x = start;
    for _ in 0..50 {
        let (e1, e2) = tangent_basis(x);
        let (g, hess) = chart_derivatives(body, x, e1, e2);
        if g.norm() <= NEWTON_TOL {
            return Some(x);
        }
        let step = hess.lu().solve(&(-g))?;
        let len = step.norm();
        if !len.is_finite() || len > reach {
            return None;
        }
        x = normalize([
            x[0] + step[0] * e1[0] + step[1] * e2[0],
            x[1] + step[0] * e1[1] + step[1] * e2[1],
            x[2] + step[0] * e1[2] + step[1] * e2[2],
        ]);
        if angle(start, x) > reach {
            return None;
        }
    }
    None
}

fn morse_data(body: &SupportFunction, v: [f64; 3]) -> (usize, f64) {
    let (e1, e2) = tangent_basis(v);
    let (_, hess) = chart_derivatives(body, v, e1, e2);
    let eig = SymmetricEigen::new(hess);
    let index = eig.eigenvalues.iter().filter(|&&l| l < 0.0).count();
    (index, hess.determinant())
}

/// Concurrent-normal counts on a rectangular grid of query points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausticGrid {
    /// `[x_min, y_min, x_max, y_max]`.
    pub bbox: [f64; 4],
    pub resolution: usize,
    /// Row-major over `y`, then `x`; `-1` marks degenerate cells.
    pub counts: Vec<i32>,
    pub in_body: Vec<bool>,
}

impl CausticGrid {
    /// Coordinates of grid node `(ix, iy)`; nodes include the bbox corners.
    pub fn point(&self, ix: usize, iy: usize) -> [f64; 2] {
        let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (self.resolution - 1) as f64;
        [step(self.bbox[0], self.bbox[2], ix), step(self.bbox[1], self.bbox[3], iy)]
    }

    pub fn count_at(&self, ix: usize, iy: usize) -> i32 {
        self.counts[iy * self.resolution + ix]
    }

    pub fn max_count(&self) -> i32 {
        self.counts.iter().copied().max().unwrap_or(-1)
    }

    /// CSV with header `x,y,count,in_body`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,count,in_body\n");
        for iy in 0..self.resolution {
            for ix in 0..self.resolution {
                let [x, y] = self.point(ix, iy);
                let k = iy * self.resolution + ix;
                out.push_str(&format!("{x:.16e},{y:.16e},{},{}\n", self.counts[k], self.in_body[k] as u8));
            }
        }
        out
    }

    /// Plain (ASCII) portable graymap; the top row is `y_max`. Degenerate
    /// cells are black, counts map to `min(255, 48 + 32 * count)`.
    pub fn to_pgm(&self) -> String {
        let r = self.resolution;
        let mut out = format!("P2\n# concurrent normal counts, degenerate = 0\n{r} {r}\n255\n");
        for iy in (0..r).rev() {
            let row: Vec<String> = (0..r)
                .map(|ix| {
                    let c = self.count_at(ix, iy);
                    let gray = if c < 0 { 0 } else { (48 + 32 * c).min(255) };
                    gray.to_string()
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Run [`count_normals_2d`] at every node of a `resolution x resolution` grid.
pub fn caustic_grid(h: &SupportFunction, bbox: [f64; 4], resolution: usize, execution: Execution) -> Result<CausticGrid> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!("grid resolution must be >= 2, got {resolution}")));
    }
    if h.dim() != 2 {
        return Err(Error::InvalidArgument("caustic grids need a planar body".into()));
    }
    if !(bbox.iter().all(|x| x.is_finite()) && bbox[0] < bbox[2] && bbox[1] < bbox[3]) {
        return Err(Error::InvalidArgument(format!("invalid bounding box {bbox:?}")));
    }
    let mut grid = CausticGrid { bbox, resolution, counts: Vec::new(), in_body: Vec::new() };
    let cells = execution.map_indexed(resolution * resolution, |k| {
        let [x, y] = grid.point(k % resolution, k / resolution);
        let shifted = h.translated(&[x, y]).expect("planar body");
        let c = PlanarCounter::new(&shifted).count();
        (if c.degenerate { -1 } else { c.count as i32 }, c.in_body)
    });
    let (counts, in_body) = cells.into_iter().unzip();
    grid.counts = counts;
    grid.in_body = in_body;
    Ok(grid)
}

/// Centres of curvature `c(theta) = -h'' v + h' v_perp` at `samples`
/// uniformly spaced angles.
pub fn evolute_2d(h: &SupportFunction, samples: usize) -> Result<Vec<[f64; 2]>> {
    if h.dim() != 2 {
        return Err(Error::InvalidArgument("the evolute is defined here for planar bodies".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    Ok((0..samples)
        .map(|k| {
            let t = TAU * k as f64 / samples as f64;
            let (_, h1, h2) = h.theta_derivatives(t);
            let (c, s) = (t.cos(), t.sin());
            [-h2 * c - h1 * s, -h2 * s + h1 * c]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(c: &[f64]) -> QueryPoint {
        QueryPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn disc_off_centre() {
        let disc = SupportFunction::ball(2, 1.0).unwrap();
        let r = count_normals_2d(&disc, &q(&[0.5, 0.0])).unwrap();
        assert_eq!(r.count, 2);
        assert!(!r.degenerate);
        let angles: Vec<f64> = r.critical_directions.iter().map(|v| v[1].atan2(v[0]).rem_euclid(TAU)).collect();
        assert!(angles.iter().any(|t| t.abs() < 1e-10 || (t - TAU).abs() < 1e-10));
        assert!(angles.iter().any(|t| (t - std::f64::consts::PI).abs() < 1e-10));
    }

    #[test]
    fn disc_centre_is_degenerate() {
        let disc = SupportFunction::ball(2, 1.0).unwrap();
        let r = count_normals_2d(&disc, &q(&[0.0, 0.0])).unwrap();
        assert!(r.degenerate);
        assert!(r.in_body);
    }

    #[test]
    fn ellipse_counts() {
        let e = SupportFunction::ellipsoid(&[2.0, 1.0]).unwrap();
        let centre = count_normals_2d(&e, &q(&[0.0, 0.0])).unwrap();
        assert_eq!(centre.count, 4);
        assert_eq!(centre.euler_sum(), 0);
        let outside = count_normals_2d(&e, &q(&[1.6, 0.0])).unwrap();
        assert_eq!(outside.count, 2);
        assert!(outside.in_body);
        let far = count_normals_2d(&e, &q(&[3.0, 0.0])).unwrap();
        assert!(!far.in_body);
    }

    #[test]
    fn ellipsoid_axes() {
        let e = SupportFunction::ellipsoid(&[1.0, 1.5, 2.0]).unwrap();
        let r = count_normals_3d(&e, &q(&[0.0, 0.0, 0.0])).unwrap();
        assert_eq!(r.count, 6);
        let mut idx = r.morse_indices.clone();
        idx.sort();
        assert_eq!(idx, vec![0, 0, 1, 1, 2, 2]);
        for v in &r.critical_directions {
            let big = v.iter().filter(|x| x.abs() > 1e-9).count();
            assert_eq!(big, 1, "{v:?}");
        }
    }

    #[test]
    fn ball_off_centre() {
        let ball = SupportFunction::ball(3, 1.0).unwrap();
        let r = count_normals_3d(&ball, &q(&[0.3, 0.0, 0.0])).unwrap();
        assert_eq!(r.count, 2);
        assert_eq!(r.euler_sum(), 2);
        let centre = count_normals_3d(&ball, &q(&[0.0, 0.0, 0.0])).unwrap();
        assert!(centre.degenerate);
    }

    #[test]
    fn wrong_dimensions() {
        let e = SupportFunction::ellipsoid(&[2.0, 1.0]).unwrap();
        assert!(count_normals_2d(&e, &q(&[0.0, 0.0, 0.0])).is_err());
        assert!(count_normals_3d(&e, &q(&[0.0, 0.0])).is_err());
        assert!(caustic_grid(&e, [0.0, 0.0, 1.0, 1.0], 1, Execution::Sequential).is_err());
        assert!(QueryPoint::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn disc_evolute_is_centre() {
        let disc = SupportFunction::ball(2, 1.0).unwrap();
        for p in evolute_2d(&disc, 64).unwrap() {
            assert!(p[0].abs() < 1e-15 && p[1].abs() < 1e-15);
        }
    }

    #[test]
    fn small_grid_symmetry() {
        let e = SupportFunction::ellipsoid(&[2.0, 1.0]).unwrap();
        let g = caustic_grid(&e, [-2.0, -1.0, 2.0, 1.0], 21, Execution::Sequential).unwrap();
        let r = g.resolution;
        for iy in 0..r {
            for ix in 0..r {
                assert_eq!(g.count_at(ix, iy), g.count_at(r - 1 - ix, r - 1 - iy));
                assert_eq!(g.count_at(ix, iy), g.count_at(ix, r - 1 - iy));
            }
        }
        assert!(g.to_pgm().starts_with("P2\n"));
        assert_eq!(g.to_csv().lines().count(), r * r + 1);
    }
}
