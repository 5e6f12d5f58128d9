//! A loop `L_t` of real projective planes in `CP^2`,
//!
//! `L_t = { [(a1 + i a2) e^{i pi t/3} : (a1 - i a2) e^{i pi t/3} : a3 e^{-2 i pi t/3}] }`
//! for real `[a1 : a2 : a3]`, together with a membership test, the moment
//! map and a sampled check that two members of the loop meet in the point
//! `[0:0:1]` and the circle `{[a:b:0] : |a| = |b|}` only.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::ProjectivePoint;
use crate::rng::RngState;

/// Default membership tolerance.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Sampled points closer than this to `[0:0:1]` or the common circle are
/// classified as lying on them.
pub const CLASS_RADIUS: f64 = 1e-6;
/// Smallest sample size accepted by [`verify_intersection_structure`].
pub const MIN_STRUCTURE_SAMPLES: usize = 1000;

/// Loop parameter, reduced to `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleanLoopParam(f64);

impl CleanLoopParam {
    pub fn new(t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("loop parameter must be finite, got {t}")));
        }
        let r = t.rem_euclid(1.0);
        // rem_euclid can round up to exactly 1.0 for tiny negative t
        Ok(Self(if r >= 1.0 { 0.0 } else { r }))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Equal modulo 1 up to `tol`.
    pub fn same_as(self, other: CleanLoopParam, tol: f64) -> bool {
        let d = (self.0 - other.0).abs();
        d.min(1.0 - d) <= tol
    }
}

fn rotation(t: f64) -> (Complex64, Complex64) {
    (Complex64::from_polar(1.0, PI * t / 3.0), Complex64::from_polar(1.0, -2.0 * PI * t / 3.0))
}

/// The point of `L_t` with real parameter `[a1 : a2 : a3]`.
pub fn clean_loop_point(t: CleanLoopParam, a: [f64; 3]) -> Result<ProjectivePoint> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("parameter has non-finite entries: {a:?}")));
    }
    if a.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroVector);
    }
    let (e12, e3) = rotation(t.0);
    ProjectivePoint::from_slice(&[
        Complex64::new(a[0], a[1]) * e12,
        Complex64::new(a[0], -a[1]) * e12,
        Complex64::new(a[2], 0.0) * e3,
    ])
}

/// Distance-like defect of `z` from `L_t`; zero exactly on `L_t`.
///
/// After undoing the rotation, `w = lambda (c, conj c, a3)` for some
/// complex `lambda`. The phase `u` of `1 / lambda` solves
/// `u^2 = conj(w1) / w2`, and then `u w3` must be real.
pub fn clean_loop_residual(t: CleanLoopParam, z: &ProjectivePoint) -> Result<f64> {
    let rep = z.representative();
    if rep.len() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: rep.len() });
    }
    let (e12, e3) = rotation(t.0);
    let w1 = rep[0] * e12.conj();
    let w2 = rep[1] * e12.conj();
    let w3 = rep[2] * e3.conj();
    let (m1, m2) = (w1.norm(), w2.norm());
    if m1.max(m2) < MEMBERSHIP_TOL {
        return Ok(m1.max(m2));
    }
    let modulus_gap = (m1 - m2).abs();
    if m2 == 0.0 {
        return Ok(modulus_gap);
    }
    let ratio = w1.conj() / w2;
    let u = (ratio / ratio.norm()).sqrt();
    Ok(modulus_gap.max((u * w3).im.abs()))
}

/// Whether `z` lies on `L_t` to within `tol`.
pub fn clean_loop_member(t: CleanLoopParam, z: &ProjectivePoint, tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    Ok(clean_loop_residual(t, z)? <= tol)
}

/// `mu([z]) = (|z1|^2, |z2|^2) / (2 sum |z_j|^2)`.
pub fn moment_map(z: &ProjectivePoint) -> Result<[f64; 2]> {
    let rep = z.representative();
    if rep.len() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: rep.len() });
    }
    let total: f64 = rep.iter().map(|c| c.norm_sqr()).sum();
    Ok([rep[0].norm_sqr() / (2.0 * total), rep[1].norm_sqr() / (2.0 * total)])
}

/// Outcome of [`intersection_structure_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub t1: f64,
    pub t2: f64,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    /// Samples within [`CLASS_RADIUS`] of `[0:0:1]`.
    pub near_isolated_point: usize,
    /// Samples within [`CLASS_RADIUS`] of the common circle.
    pub near_circle: usize,
    pub generic: usize,
    /// Generic samples of `L_t1` that are members of `L_t2`.
    pub generic_members: usize,
    pub max_generic_residual: f64,
    /// Smallest residual among generic samples; the margin by which they fail.
    pub min_generic_residual: f64,
    /// `[0:0:1]` is a member of both planes.
    pub isolated_point_member: bool,
    /// Sampled points of the circle are members of both planes.
    pub circle_member: bool,
    pub passed: bool,
}

/// Sample `L_t1` and classify each point against `L_t2`, without failing
/// on a violation.
pub fn intersection_structure_report(
    t1: CleanLoopParam,
    t2: CleanLoopParam,
    samples: usize,
    tol: f64,
    seed: u64,
    execution: Execution,
) -> Result<StructureReport> {
    if t1.same_as(t2, 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "t1 = {} and t2 = {} coincide modulo 1",
            t1.value(),
            t2.value()
        )));
    }
    if samples < MIN_STRUCTURE_SAMPLES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_STRUCTURE_SAMPLES} samples, got {samples}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }

    let mut rng = RngState::new(seed, 0).rng();
    let params: Vec<[f64; 3]> = (0..samples)
        .map(|_| loop {
            let a: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let norm = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
            if norm > 1e-300 {
                break [a[0] / norm, a[1] / norm, a[2] / norm];
            }
        })
        .collect();

    #[derive(Clone, Copy)]
    enum Class {
        Isolated,
        Circle,
        Generic(f64),
    }
    let classes = execution.map_indexed(samples, |k| -> Result<Class> {
        let a = params[k];
        let z = clean_loop_point(t1, a)?;
        let rep = z.representative();
        // |a3| equals |z3| for a unit parameter; distance to [0:0:1] is |(z1, z2)|
        let off_axis = (rep[0].norm_sqr() + rep[1].norm_sqr()).sqrt();
        if off_axis < CLASS_RADIUS {
            return Ok(Class::Isolated);
        }
        if rep[2].norm() < CLASS_RADIUS && (rep[0].norm() - rep[1].norm()).abs() < CLASS_RADIUS {
            return Ok(Class::Circle);
        }
        Ok(Class::Generic(clean_loop_residual(t2, &z)?))
    });

    let mut report = StructureReport {
        t1: t1.value(),
        t2: t2.value(),
        samples,
        seed,
        tol,
        near_isolated_point: 0,
        near_circle: 0,
        generic: 0,
        generic_members: 0,
        max_generic_residual: 0.0,
        min_generic_residual: f64::INFINITY,
        isolated_point_member: false,
        circle_member: false,
        passed: false,
    };
    for class in classes {
        match class? {
            Class::Isolated => report.near_isolated_point += 1,
            Class::Circle => report.near_circle += 1,
            Class::Generic(r) => {
                report.generic += 1;
                if r <= tol {
                    report.generic_members += 1;
                }
                report.max_generic_residual = report.max_generic_residual.max(r);
                report.min_generic_residual = report.min_generic_residual.min(r);
            }
        }
    }

    let pole = ProjectivePoint::from_real(&[0.0, 0.0, 1.0])?;
    report.isolated_point_member = clean_loop_member(t1, &pole, tol)? && clean_loop_member(t2, &pole, tol)?;
    let mut circle_ok = true;
    for k in 0..64 {
        let phi = 2.0 * PI * k as f64 / 64.0;
        let p = ProjectivePoint::from_slice(&[
            Complex64::new(1.0, 0.0),
            Complex64::from_polar(1.0, phi),
            Complex64::new(0.0, 0.0),
        ])?;
        circle_ok &= clean_loop_member(t1, &p, tol)? && clean_loop_member(t2, &p, tol)?;
    }
    report.circle_member = circle_ok;
    report.passed = report.generic_members == 0 && report.isolated_point_member && report.circle_member;
    Ok(report)
}

/// Like [`intersection_structure_report`], failing with
/// `StructureViolation` when the check does not pass.
pub fn verify_intersection_structure(
    t1: CleanLoopParam,
    t2: CleanLoopParam,
    samples: usize,
    tol: f64,
    seed: u64,
    execution: Execution,
) -> Result<StructureReport> {
    let report = intersection_structure_report(t1, t2, samples, tol, seed, execution)?;
    if report.passed {
        Ok(report)
    } else {
        Err(Error::StructureViolation(format!(
            "{} generic members, isolated point member: {}, circle member: {}",
            report.generic_members, report.isolated_point_member, report.circle_member
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::projective_distance;
    use proptest::prelude::*;

    fn param(t: f64) -> CleanLoopParam {
        CleanLoopParam::new(t).unwrap()
    }

    #[test]
    fn parameter_wraps() {
        assert_eq!(param(1.25).value(), 0.25);
        assert!((param(-0.25).value() - 0.75).abs() < 1e-15);
        assert!(param(-1e-18).value() < 1.0);
        assert!(param(0.0).same_as(param(0.9999999999999), 1e-12));
        assert!(CleanLoopParam::new(f64::NAN).is_err());
    }

    #[test]
    fn special_points() {
        let pole = ProjectivePoint::from_real(&[0.0, 0.0, 1.0]).unwrap();
        for t in [0.0, 0.1, 0.5, 0.9] {
            let p = clean_loop_point(param(t), [0.0, 0.0, 1.0]).unwrap();
            assert!(projective_distance(&p, &pole) < 1e-15);
        }
        let p = clean_loop_point(param(0.0), [1.0, 0.0, 0.0]).unwrap();
        let expected = ProjectivePoint::from_real(&[1.0, 1.0, 0.0]).unwrap();
        assert!(projective_distance(&p, &expected) < 1e-15);
        for a in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] {
            let p = clean_loop_point(param(0.3), a).unwrap();
            let r = p.representative();
            assert!((r[0].norm() - r[1].norm()).abs() < 1e-15);
            assert_eq!(r[2].norm(), 0.0);
        }
        assert!(matches!(clean_loop_point(param(0.0), [0.0; 3]), Err(Error::ZeroVector)));
    }

    #[test]
    fn membership_examples() {
        let pole = ProjectivePoint::from_real(&[0.0, 0.0, 1.0]).unwrap();
        let diag = ProjectivePoint::from_real(&[1.0, 1.0, 0.0]).unwrap();
        let axis = ProjectivePoint::from_real(&[1.0, 0.0, 0.0]).unwrap();
        for t in [0.0, 0.2, 0.7] {
            assert!(clean_loop_member(param(t), &pole, MEMBERSHIP_TOL).unwrap());
            assert!(clean_loop_member(param(t), &diag, MEMBERSHIP_TOL).unwrap());
            assert!(!clean_loop_member(param(t), &axis, MEMBERSHIP_TOL).unwrap());
        }
        assert!(clean_loop_member(param(0.0), &pole, 0.0).is_err());
    }

    #[test]
    fn moment_map_examples() {
        let p = ProjectivePoint::from_real(&[1.0, 1.0, 1.0]).unwrap();
        let m = moment_map(&p).unwrap();
        assert!((m[0] - 1.0 / 6.0).abs() < 1e-15 && (m[1] - 1.0 / 6.0).abs() < 1e-15);
        let pole = ProjectivePoint::from_real(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(moment_map(&pole).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn shift_by_one_flips_third_parameter() {
        // point-wise the formula has period 2; the set L_t has period 1
        let a = [0.3, -0.5, 0.8];
        let raw = |t: f64, a: [f64; 3]| {
            let (e12, e3) = rotation(t);
            ProjectivePoint::from_slice(&[
                Complex64::new(a[0], a[1]) * e12,
                Complex64::new(a[0], -a[1]) * e12,
                Complex64::new(a[2], 0.0) * e3,
            ])
            .unwrap()
        };
        let shifted = raw(1.2, a);
        assert!(projective_distance(&shifted, &raw(0.2, [a[0], a[1], -a[2]])) < 1e-14);
        assert!(clean_loop_member(param(0.2), &shifted, MEMBERSHIP_TOL).unwrap());
    }

    #[test]
    fn structure_examples() {
        let r = verify_intersection_structure(param(0.1), param(0.4), 10_000, MEMBERSHIP_TOL, 1, Execution::Sequential)
            .unwrap();
        assert_eq!(r.samples, r.near_isolated_point + r.near_circle + r.generic);
        assert_eq!(r.generic_members, 0);
        assert!(r.min_generic_residual > MEMBERSHIP_TOL);
        let r = verify_intersection_structure(param(0.1), param(0.1 + 1.0 / 3.0), 2000, MEMBERSHIP_TOL, 2, Execution::Sequential)
            .unwrap();
        assert!(r.passed);
        assert!(verify_intersection_structure(param(0.2), param(0.2), 2000, MEMBERSHIP_TOL, 0, Execution::Sequential).is_err());
        assert!(verify_intersection_structure(param(0.2), param(0.3), 999, MEMBERSHIP_TOL, 0, Execution::Sequential).is_err());
    }

    #[test]
    fn report_schedule_independent() {
        let a = intersection_structure_report(param(0.05), param(0.6), 3000, MEMBERSHIP_TOL, 9, Execution::Sequential)
            .unwrap();
        let b = intersection_structure_report(param(0.05), param(0.6), 3000, MEMBERSHIP_TOL, 9, Execution::Parallel)
            .unwrap();
        assert_eq!(a, b);
    }

    fn unit_param() -> impl Strategy<Value = [f64; 3]> {
        prop::array::uniform3(-1.0f64..1.0).prop_filter("nonzero", |a| a.iter().map(|x| x * x).sum::<f64>() > 1e-6)
    }

    proptest! {
        #[test]
        fn points_are_members(t in 0.0f64..1.0, a in unit_param()) {
            let p = clean_loop_point(param(t), a).unwrap();
            prop_assert!(clean_loop_residual(param(t), &p).unwrap() <= MEMBERSHIP_TOL);
        }

        #[test]
        fn param_has_period_one(t in 0.0f64..1.0, a in unit_param()) {
            let p = clean_loop_point(param(t), a).unwrap();
            let q = clean_loop_point(param(t + 1.0), a).unwrap();
            prop_assert!(projective_distance(&p, &q) < 1e-12);
        }

        #[test]
        fn moment_image_on_diagonal(t in 0.0f64..1.0, a in unit_param()) {
            let m = moment_map(&clean_loop_point(param(t), a).unwrap()).unwrap();
            prop_assert!((m[0] - m[1]).abs() <= 1e-12);
        }

        #[test]
        fn circle_in_every_plane(t in 0.0f64..1.0, phi in 0.0f64..std::f64::consts::TAU) {
            let p = ProjectivePoint::from_slice(&[
                Complex64::new(1.0, 0.0),
                Complex64::from_polar(1.0, phi),
                Complex64::new(0.0, 0.0),
            ]).unwrap();
            prop_assert!(clean_loop_member(param(t), &p, MEMBERSHIP_TOL).unwrap());
        }
    }
}
