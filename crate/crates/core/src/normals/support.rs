//! Support functions of smooth convex bodies.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-10;
/// Angles at which a trigonometric support function must satisfy `h + h'' > 0`.
pub const CONVEXITY_SAMPLES: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum BodyKind {
    /// `sum x_i^2 / a_i^2 <= 1`, support function `sqrt(sum a_i^2 v_i^2)`.
    Ellipsoid { radii: Vec<f64> },
    /// Planar body with `h(theta) = c0 + sum_k (a_k cos k theta + b_k sin k theta)`.
    TrigPolynomial2D { c0: f64, cos_coeffs: Vec<f64>, sin_coeffs: Vec<f64> },
}

/// Support function `h_C(v) = sup { <u, v> : u in C }` of a body `C`,
/// optionally translated by `offset` (then `h(v) = h_base(v) + <offset, v>`).
#[derive(Debug, Clone, PartialEq)]
pub struct SupportFunction {
    kind: BodyKind,
    offset: Vec<f64>,
}

impl SupportFunction {
    pub fn ellipsoid(radii: &[f64]) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::InvalidArgument("ellipsoid needs at least one radius".into()));
        }
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidArgument(format!("ellipsoid radii must be positive, got {radii:?}")));
        }
        Ok(Self { kind: BodyKind::Ellipsoid { radii: radii.to_vec() }, offset: vec![0.0; radii.len()] })
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        Self::ellipsoid(&vec![radius; dim])
    }

    /// Planar body from a trigonometric support function; rejected unless
    /// `h + h'' > 0` at [`CONVEXITY_SAMPLES`] equally spaced angles.
    pub fn trig2d(c0: f64, cos_coeffs: &[f64], sin_coeffs: &[f64]) -> Result<Self> {
        if !c0.is_finite() || cos_coeffs.iter().chain(sin_coeffs).any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite trigonometric coefficient".into()));
        }
        let body = Self {
            kind: BodyKind::TrigPolynomial2D { c0, cos_coeffs: cos_coeffs.to_vec(), sin_coeffs: sin_coeffs.to_vec() },
            offset: vec![0.0; 2],
        };
        for i in 0..CONVEXITY_SAMPLES {
            let theta = TAU * i as f64 / CONVEXITY_SAMPLES as f64;
            let (h, _, h2) = body.theta_derivatives(theta);
            if !(h + h2 > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "support function is not strictly convex: h + h'' = {:.3e} at theta = {theta:.6}",
                    h + h2
                )));
            }
        }
        Ok(body)
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    /// `h_{C - q}`: the same body seen from `q` (i.e. translated by `-q`).
    pub fn translated(&self, q: &[f64]) -> Result<Self> {
        self.check_dim(q.len())?;
        let offset = self.offset.iter().zip(q).map(|(o, p)| o - p).collect();
        Ok(Self { kind: self.kind.clone(), offset })
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found });
        }
        Ok(())
    }

    fn check_unit(&self, v: &[f64]) -> Result<()> {
        self.check_dim(v.len())?;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit { norm });
        }
        Ok(())
    }

    /// `h(v)` for a unit vector `v`.
    pub fn eval_h(&self, v: &[f64]) -> Result<f64> {
        self.check_unit(v)?;
        Ok(self.value(v))
    }

    /// Gradient of `h` for the round metric at the unit vector `v`.
    pub fn grad_h(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_unit(v)?;
        let grad = self.ambient_gradient(v);
        let radial: f64 = grad.iter().zip(v).map(|(g, x)| g * x).sum();
        Ok(grad.iter().zip(v).map(|(g, x)| g - radial * x).collect())
    }

    /// `phi(v) = h(v) v + grad h(v)`, the boundary point with inward normal `-v`.
    pub fn boundary_point(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_unit(v)?;
        // for a 1-homogeneous extension H, h v + grad h = dH(v)
        Ok(self.ambient_gradient(v))
    }

    pub(crate) fn value(&self, v: &[f64]) -> f64 {
        let shift: f64 = self.offset.iter().zip(v).map(|(o, x)| o * x).sum();
        let base = match &self.kind {
            BodyKind::Ellipsoid { radii } => ellipsoid_h(radii, v),
            BodyKind::TrigPolynomial2D { .. } => self.base_theta(v[1].atan2(v[0])).0,
        };
        base + shift
    }

    /// Euclidean gradient of the 1-homogeneous extension at a unit vector.
    pub(crate) fn ambient_gradient(&self, v: &[f64]) -> Vec<f64> {
        let mut grad = match &self.kind {
            BodyKind::Ellipsoid { radii } => {
                let h = ellipsoid_h(radii, v);
                radii.iter().zip(v).map(|(a, x)| a * a * x / h).collect::<Vec<_>>()
            }
            BodyKind::TrigPolynomial2D { .. } => {
                let theta = v[1].atan2(v[0]);
                let (h, h1, _) = self.base_theta(theta);
                let (c, s) = (theta.cos(), theta.sin());
                vec![h * c - h1 * s, h * s + h1 * c]
            }
        };
        for (g, o) in grad.iter_mut().zip(&self.offset) {
            *g += o;
        }
        grad
    }

    /// Euclidean Hessian of the 1-homogeneous extension at a unit vector.
    pub(crate) fn ambient_hessian(&self, v: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        match &self.kind {
            BodyKind::Ellipsoid { radii } => {
                let h = ellipsoid_h(radii, v);
                let w = DVector::from_iterator(d, radii.iter().zip(v).map(|(a, x)| a * a * x));
                let diag = DVector::from_iterator(d, radii.iter().map(|a| a * a / h));
                DMatrix::from_diagonal(&diag) - &w * w.transpose() / (h * h * h)
            }
            BodyKind::TrigPolynomial2D { .. } => {
                let theta = v[1].atan2(v[0]);
                let (h, _, h2) = self.base_theta(theta);
                let perp = DVector::from_vec(vec![-theta.sin(), theta.cos()]);
                &perp * perp.transpose() * (h + h2)
            }
        }
    }

    /// `(h, h', h'')` in the angle parametrisation of a planar body,
    /// translation included.
    pub fn theta_derivatives(&self, theta: f64) -> (f64, f64, f64) {
        let (h, h1, h2) = self.base_theta(theta);
        let (c, s) = (theta.cos(), theta.sin());
        let (ox, oy) = (self.offset[0], self.offset[1]);
        (h + ox * c + oy * s, h1 - ox * s + oy * c, h2 - ox * c - oy * s)
    }

    fn base_theta(&self, theta: f64) -> (f64, f64, f64) {
        match &self.kind {
            BodyKind::Ellipsoid { radii } => {
                assert_eq!(radii.len(), 2, "angle parametrisation needs a planar body");
                let (a2, b2) = (radii[0] * radii[0], radii[1] * radii[1]);
                let (c, s) = (theta.cos(), theta.sin());
                let f = a2 * c * c + b2 * s * s;
                let f1 = (b2 - a2) * (2.0 * theta).sin();
                let f2 = 2.0 * (b2 - a2) * (2.0 * theta).cos();
                let h = f.sqrt();
                (h, f1 / (2.0 * h), f2 / (2.0 * h) - f1 * f1 / (4.0 * h * h * h))
            }
            BodyKind::TrigPolynomial2D { c0, cos_coeffs, sin_coeffs } => {
                let (mut h, mut h1, mut h2) = (*c0, 0.0, 0.0);
                let harmonics = cos_coeffs.len().max(sin_coeffs.len());
                for k in 1..=harmonics {
                    let a = cos_coeffs.get(k - 1).copied().unwrap_or(0.0);
                    let b = sin_coeffs.get(k - 1).copied().unwrap_or(0.0);
                    let kf = k as f64;
                    let (c, s) = ((kf * theta).cos(), (kf * theta).sin());
                    h += a * c + b * s;
                    h1 += kf * (b * c - a * s);
                    h2 -= kf * kf * (a * c + b * s);
                }
                (h, h1, h2)
            }
        }
    }
}

fn ellipsoid_h(radii: &[f64], v: &[f64]) -> f64 {
    radii.iter().zip(v).map(|(a, x)| a * a * x * x).sum::<f64>().sqrt()
}
