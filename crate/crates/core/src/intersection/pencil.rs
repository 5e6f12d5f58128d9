//! Exact real intersection of two conics in `RP^2` via a degenerate member
//! of their pencil.

use nalgebra::{DVector, Matrix3, SymmetricEigen, Vector3};

use super::{canonical_real, certify, insert_unique, CountResult, QuadricSystem};
use crate::error::{Error, Result};

/// Ratio `|mid| / |max|` of pencil-member eigenvalues below which the
/// member is a double line.
const RANK_TWO_TOL: f64 = 1e-8;
/// A conjugate line pair contributes its vertex only if it lies on the
/// other conic to this accuracy.
const VERTEX_TOL: f64 = 1e-10;

/// Count the common real projective zeros of a two-form system.
///
/// Picks a real root `(c, s)` of `det(c Q1 + s Q2) = 0`, splits the
/// degenerate conic `C = c Q1 + s Q2` into two lines and intersects each with
/// the complementary member `M = -s Q1 + c Q2`. Only a cubic and quadratics
/// are solved; the witnesses then get two Newton polishing steps.
pub fn count_conic_pencil(sys: &QuadricSystem) -> Result<CountResult> {
    if sys.n() != 2 {
        return Err(Error::InvalidArgument(format!(
            "the pencil method needs n = 2, got n = {}",
            sys.n()
        )));
    }
    let q1 = normalized(to_matrix3(&sys.forms()[0]))?;
    let q2 = normalized(to_matrix3(&sys.forms()[1]))?;

    let member = pencil_roots(&q1, &q2)
        .into_iter()
        .map(|(c, s)| DegenerateMember::new(&q1, &q2, c, s))
        .min_by(|a, b| a.score.total_cmp(&b.score))
        .ok_or_else(|| Error::Degenerate("pencil has no real degenerate member".into()))?;
    if member.mid.abs() < RANK_TWO_TOL * member.max.abs() {
        return Err(Error::Degenerate("pencil degenerates to a double line".into()));
    }

    let mut roots = Vec::new();
    for candidate in member.intersect_complement() {
        let polished = polish(sys, &candidate);
        insert_unique(&mut roots, canonical_real(&polished));
    }
    certify(sys, roots)
}

fn to_matrix3(q: &nalgebra::DMatrix<f64>) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| q[(i, j)])
}

fn normalized(q: Matrix3<f64>) -> Result<Matrix3<f64>> {
    let norm = q.norm();
    if !(norm > 0.0) {
        return Err(Error::Degenerate("zero conic in the system".into()));
    }
    Ok(q / norm)
}

/// Unit pairs `(c, s)` with `det(c Q1 + s Q2) = 0`.
fn pencil_roots(q1: &Matrix3<f64>, q2: &Matrix3<f64>) -> Vec<(f64, f64)> {
    // det(Q1 + t Q2) = e3 t^3 + e2 t^2 + e1 t + e0
    let e0 = q1.determinant();
    let e3 = q2.determinant();
    let plus = (q1 + q2).determinant();
    let minus = (q1 - q2).determinant();
    let e2 = 0.5 * (plus + minus) - e0;
    let e1 = 0.5 * (plus - minus) - e3;

    let mut pairs: Vec<(f64, f64)> = if e3.abs() >= e0.abs() {
        real_cubic_roots(e3, e2, e1, e0).into_iter().map(|t| (1.0, t)).collect()
    } else {
        // u = 1/t chart
        real_cubic_roots(e0, e1, e2, e3).into_iter().map(|u| (u, 1.0)).collect()
    };
    // singular forms are members themselves
    let scale = [e0, e1, e2, e3].iter().fold(0.0f64, |m, e| m.max(e.abs()));
    if e0.abs() <= 1e-14 * scale {
        pairs.push((1.0, 0.0));
    }
    if e3.abs() <= 1e-14 * scale {
        pairs.push((0.0, 1.0));
    }
    pairs
        .into_iter()
        .map(|(c, s)| {
            let r = c.hypot(s);
            (c / r, s / r)
        })
        .collect()
}

/// Real roots of `a3 x^3 + a2 x^2 + a1 x + a0`, tolerating a vanishing
/// leading coefficient.
pub(crate) fn real_cubic_roots(a3: f64, a2: f64, a1: f64, a0: f64) -> Vec<f64> {
    let scale = [a3, a2, a1, a0].iter().fold(0.0f64, |m, e| m.max(e.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let eps = 1e-14 * scale;
    if a3.abs() <= eps {
        return real_quadratic_roots(a2, a1, a0, eps);
    }
    let (b, c, d) = (a2 / a3, a1 / a3, a0 / a3);
    // depressed cubic y^3 + p y + q with x = y - b/3
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = if disc > 0.0 {
        let sq = disc.sqrt();
        let u = (-q / 2.0 + sq).cbrt();
        let v = (-q / 2.0 - sq).cbrt();
        vec![u + v - shift]
    } else if p == 0.0 {
        vec![-shift]
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p) / r).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| 2.0 * r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift)
            .collect()
    };
    let f = |x: f64| ((a3 * x + a2) * x + a1) * x + a0;
    let df = |x: f64| (3.0 * a3 * x + 2.0 * a2) * x + a1;
    for x in roots.iter_mut() {
        for _ in 0..3 {
            let d = df(*x);
            if d == 0.0 {
                break;
            }
            let step = f(*x) / d;
            if !step.is_finite() {
                break;
            }
            *x -= step;
        }
    }
    roots
}

fn real_quadratic_roots(a: f64, b: f64, c: f64, eps: f64) -> Vec<f64> {
    if a.abs() <= eps {
        return if b.abs() <= eps { Vec::new() } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

struct DegenerateMember {
    /// Eigenpairs of `C` sorted by decreasing `|lambda|`.
    values: [f64; 3],
    vectors: [Vector3<f64>; 3],
    complement: Matrix3<f64>,
    score: f64,
    mid: f64,
    max: f64,
}

impl DegenerateMember {
    fn new(q1: &Matrix3<f64>, q2: &Matrix3<f64>, c: f64, s: f64) -> Self {
        let member = q1 * c + q2 * s;
        let complement = q1 * (-s) + q2 * c;
        let eig = SymmetricEigen::new(member);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| eig.eigenvalues[j].abs().total_cmp(&eig.eigenvalues[i].abs()));
        let values = order.map(|i| eig.eigenvalues[i]);
        let vectors = order.map(|i| eig.eigenvectors.column(i).into_owned());
        let score = if values[1] == 0.0 { f64::INFINITY } else { (values[2] / values[1]).abs() };
        Self { values, vectors, complement, score, mid: values[1], max: values[0] }
    }

    /// Real points of `C = 0` that also lie on the complementary conic.
    fn intersect_complement(&self) -> Vec<DVector<f64>> {
        let [l1, l2, _] = self.values;
        let [v1, v2, vertex] = &self.vectors;
        let mut out = Vec::new();
        if l1 * l2 < 0.0 {
            // C = |l1| (v1.x)^2 - |l2| (v2.x)^2 (up to sign): two real lines
            // through the vertex, each spanned by the vertex and w
            let (r1, r2) = (l1.abs().sqrt(), l2.abs().sqrt());
            for sign in [1.0, -1.0] {
                let w = (v1 * r2 - v2 * (sign * r1)).normalize();
                out.extend(self.on_line(vertex, &w));
            }
        } else {
            // complex-conjugate lines: only the vertex is real
            let m = vertex.dot(&(self.complement * vertex));
            if m.abs() <= VERTEX_TOL {
                out.push(DVector::from_column_slice(vertex.as_slice()));
            }
        }
        out
    }

    /// Zeros of the complement on the line `{alpha u + beta w}`.
    fn on_line(&self, u: &Vector3<f64>, w: &Vector3<f64>) -> Vec<DVector<f64>> {
        let m = &self.complement;
        let a = u.dot(&(m * u));
        let b = u.dot(&(m * w));
        let d = w.dot(&(m * w));
        let disc = b * b - a * d;
        if disc < 0.0 {
            return Vec::new();
        }
        let sign = if b >= 0.0 { 1.0 } else { -1.0 };
        let q = -(b + sign * disc.sqrt());
        // (alpha : beta) = (q : a) and (d : q)
        [(q, a), (d, q)]
            .into_iter()
            .filter(|(alpha, beta)| alpha.abs() + beta.abs() > 0.0)
            .map(|(alpha, beta)| {
                let x = u * alpha + w * beta;
                DVector::from_column_slice(x.as_slice())
            })
            .collect()
    }
}

/// Two Newton steps on `{a^T Q_i a = 0, |a|^2 = 1}`.
fn polish(sys: &QuadricSystem, a: &DVector<f64>) -> DVector<f64> {
    let mut x: Vector3<f64> = Vector3::from_column_slice((a / a.norm()).as_slice());
    let forms: Vec<Matrix3<f64>> = sys.forms().iter().map(to_matrix3).collect();
    for _ in 0..2 {
        let g1 = forms[0] * x;
        let g2 = forms[1] * x;
        let f = Vector3::new(x.dot(&g1), x.dot(&g2), x.dot(&x) - 1.0);
        let jac = Matrix3::from_rows(&[g1.transpose() * 2.0, g2.transpose() * 2.0, x.transpose() * 2.0]);
        match jac.lu().solve(&f) {
            Some(step) if step.iter().all(|s| s.is_finite()) => x -= step,
            _ => break,
        }
    }
    DVector::from_column_slice(x.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intersection::clifford_quadric_system;
    use crate::geometry::{haar_unitary, UnitaryMatrix};
    use crate::rng::RngState;

    #[test]
    fn cubic_roots_match_factors() {
        let mut r = real_cubic_roots(1.0, -6.0, 11.0, -6.0);
        r.sort_by(f64::total_cmp);
        for (x, e) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - e).abs() < 1e-12);
        }
        let r = real_cubic_roots(1.0, 0.0, 1.0, 0.0);
        assert_eq!(r.len(), 1);
        assert!(r[0].abs() < 1e-15);
        let mut r = real_cubic_roots(0.0, 1.0, -3.0, 2.0);
        r.sort_by(f64::total_cmp);
        assert!((r[0] - 1.0).abs() < 1e-14 && (r[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn identity_has_four_points() {
        let sys = clifford_quadric_system(&UnitaryMatrix::identity(3)).unwrap();
        let res = count_conic_pencil(&sys).unwrap();
        assert_eq!(res.count, 4);
        assert!(res.transverse && !res.degenerate);
        let s = 1.0 / 3f64.sqrt();
        for signs in [[1.0, 1.0, 1.0], [1.0, 1.0, -1.0], [1.0, -1.0, 1.0], [1.0, -1.0, -1.0]] {
            let target: Vec<f64> = signs.iter().map(|x| x * s).collect();
            assert!(
                res.witnesses.iter().any(|w| w.iter().zip(&target).all(|(a, b)| (a - b).abs() < 1e-12)),
                "missing witness {target:?}"
            );
        }
    }

    #[test]
    fn haar_counts_are_two_or_four() {
        for k in 0..500 {
            let g = haar_unitary(3, &RngState::new(17, k)).unwrap();
            let sys = clifford_quadric_system(&g).unwrap();
            match count_conic_pencil(&sys) {
                Ok(r) => assert!(r.count == 2 || r.count == 4, "count {}", r.count),
                Err(Error::Degenerate(_)) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn rejects_wrong_dimension() {
        let sys = clifford_quadric_system(&UnitaryMatrix::identity(4)).unwrap();
        assert!(count_conic_pencil(&sys).is_err());
    }
}
