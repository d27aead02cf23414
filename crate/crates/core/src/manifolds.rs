//! Complex trace-one sphere and complex oblique (unit-modulus) manifolds.
//!
//! Both manifolds are treated as real Riemannian submanifolds of their
//! ambient complex space with the inner product
//!
//! ```text
//! <A, B> = Re{ tr(A^H B) }
//! ```
//!
//! Tangent projections therefore remove only the real part of the radial
//! coefficient, which makes them genuine orthogonal projections (idempotent
//! and self-adjoint under the inner product above).
//!
//! Sphere:  { V̂ ∈ C^{(N+1)×K} : tr(V̂ V̂^H) = 1 }
//! Oblique: { u ∈ C^{n} : |u_i| = 1 for every i }

use crate::error::{dim_check, Error, Result};
use crate::{CMat, CVec};
use num_complex::Complex64;

/// Points are accepted as on-manifold when the constraint residual is below this.
pub const FEASIBILITY_TOL: f64 = 1e-10;

/// Retractions whose pre-normalization norm falls below this are rejected.
pub const DEGENERATE_NORM: f64 = 1e-14;

/// Real inner product `Re{tr(A^H B)}` between two equally-shaped arrays.
pub fn real_inner(a: &CMat, b: &CMat) -> f64 {
    a.dotc(b).re
}

/// Vector-space operations needed by the conjugate-gradient solver.
pub trait Ambient: Clone {
    fn inner(&self, other: &Self) -> f64;
    fn add_scaled(&self, alpha: f64, other: &Self) -> Self;
    fn scaled(&self, alpha: f64) -> Self;

    fn norm_sq(&self) -> f64 {
        self.inner(self)
    }
}

macro_rules! impl_ambient {
    ($t:ty) => {
        impl Ambient for $t {
            fn inner(&self, other: &Self) -> f64 {
                self.dotc(other).re
            }

            fn add_scaled(&self, alpha: f64, other: &Self) -> Self {
                self + other * Complex64::from(alpha)
            }

            fn scaled(&self, alpha: f64) -> Self {
                self * Complex64::from(alpha)
            }
        }
    };
}

impl_ambient!(CMat);
impl_ambient!(CVec);

/// A manifold usable by [`crate::gcg::gcg_maximize`].
///
/// Tangent vectors are stored as plain ambient arrays of the same shape as
/// the point they are attached to.
pub trait Manifold {
    type Point: Clone;
    type Vector: Ambient;

    fn project(&self, base: &Self::Point, ambient: &Self::Vector) -> Result<Self::Vector>;

    fn retract(&self, base: &Self::Point, step: &Self::Vector) -> Result<Self::Point>;

    /// Vector transport by projection onto the tangent space at `new_base`.
    fn transport(&self, new_base: &Self::Point, v: &Self::Vector) -> Result<Self::Vector> {
        self.project(new_base, v)
    }

    /// Riemannian gradient of a cost whose Euclidean gradient is `egrad`.
    fn riemannian_gradient(&self, base: &Self::Point, egrad: &Self::Vector) -> Result<Self::Vector> {
        self.project(base, egrad)
    }

    /// Residual of the defining constraint at `p`.
    fn feasibility_error(&self, p: &Self::Point) -> f64;
}

/// Point on the complex trace-one sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint(CMat);

impl SpherePoint {
    pub fn new(entries: CMat) -> Result<Self> {
        let err = sphere_residual(&entries);
        if err > FEASIBILITY_TOL || !err.is_finite() {
            return Err(Error::OffManifold(err));
        }
        Ok(Self(entries))
    }

    /// Scales `entries` onto the sphere.
    pub fn from_unnormalized(entries: CMat) -> Result<Self> {
        let norm = entries.norm();
        if norm < DEGENERATE_NORM || !norm.is_finite() {
            return Err(Error::DegenerateRetraction(norm));
        }
        Ok(Self(entries.unscale(norm)))
    }

    pub fn entries(&self) -> &CMat {
        &self.0
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }
}

fn sphere_residual(m: &CMat) -> f64 {
    (m.norm_squared() - 1.0).abs()
}

/// Point on the complex oblique manifold: every entry has unit modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct ObliquePoint(CVec);

impl ObliquePoint {
    pub fn new(entries: CVec) -> Result<Self> {
        let err = oblique_residual(&entries);
        if err > FEASIBILITY_TOL || !err.is_finite() {
            return Err(Error::OffManifold(err));
        }
        Ok(Self(entries))
    }

    /// All-ones point (every reflection phase zero).
    pub fn ones(n: usize) -> Self {
        Self(CVec::from_element(n, Complex64::new(1.0, 0.0)))
    }

    /// Builds `u` from IRS phase shifts `φ_i`, using `u_i = e^{-jφ_i}` so that
    /// `conj(u)` holds the reflection coefficients `e^{jφ_i}`.
    pub fn from_phases(phases: &[f64]) -> Self {
        Self(CVec::from_iterator(
            phases.len(),
            phases.iter().map(|&p| Complex64::from_polar(1.0, -p)),
        ))
    }

    /// IRS phase shifts `φ_i ∈ [0, 2π)`; inverse of [`ObliquePoint::from_phases`].
    pub fn phases(&self) -> Vec<f64> {
        self.0
            .iter()
            .map(|z| (-z.arg()).rem_euclid(std::f64::consts::TAU))
            .collect()
    }

    /// Reflection coefficients `conj(u_i)`, i.e. the diagonal of Φ.
    pub fn reflection_coefficients(&self) -> CVec {
        self.0.map(|z| z.conj())
    }

    pub fn entries(&self) -> &CVec {
        &self.0
    }

    pub fn into_inner(self) -> CVec {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sub-range `[start, start + len)` as its own oblique point.
    pub fn segment(&self, start: usize, len: usize) -> ObliquePoint {
        ObliquePoint(self.0.rows(start, len).into_owned())
    }

    /// Concatenation of several oblique points.
    pub fn concat(parts: &[&ObliquePoint]) -> ObliquePoint {
        let n = parts.iter().map(|p| p.len()).sum();
        ObliquePoint(CVec::from_iterator(
            n,
            parts.iter().flat_map(|p| p.0.iter().copied()),
        ))
    }
}

fn oblique_residual(v: &CVec) -> f64 {
    v.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max)
}

/// Tangent projection on the sphere: `Ξ − Re{tr(V̂^H Ξ)} V̂`.
pub fn project_sphere(base: &SpherePoint, ambient: &CMat) -> Result<CMat> {
    dim_check(base.0.shape() == ambient.shape(), || {
        format!("sphere point is {:?}, ambient is {:?}", base.0.shape(), ambient.shape())
    })?;
    let radial = real_inner(&base.0, ambient);
    Ok(ambient - &base.0 * Complex64::from(radial))
}

/// Tangent projection on the oblique manifold: `ξ_i − Re{ξ_i conj(u_i)} u_i`.
pub fn project_oblique(base: &ObliquePoint, ambient: &CVec) -> Result<CVec> {
    dim_check(base.0.len() == ambient.len(), || {
        format!("oblique point has {} entries, ambient has {}", base.0.len(), ambient.len())
    })?;
    Ok(CVec::from_iterator(
        ambient.len(),
        ambient.iter().zip(base.0.iter()).map(|(&xi, &u)| {
            let radial = (xi * u.conj()).re;
            xi - u * radial
        }),
    ))
}

/// Sphere retraction `(V̂ + ξ) / ‖V̂ + ξ‖_F`.
pub fn retract_sphere(base: &SpherePoint, step: &CMat) -> Result<SpherePoint> {
    dim_check(base.0.shape() == step.shape(), || {
        format!("sphere point is {:?}, step is {:?}", base.0.shape(), step.shape())
    })?;
    if step.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Ok(base.clone());
    }
    let moved = &base.0 + step;
    let norm = moved.norm();
    if norm < DEGENERATE_NORM || !norm.is_finite() {
        return Err(Error::DegenerateRetraction(norm));
    }
    Ok(SpherePoint(moved.unscale(norm)))
}

/// Oblique retraction: entrywise `(u_i + ξ_i) / |u_i + ξ_i|`.
pub fn retract_oblique(base: &ObliquePoint, step: &CVec) -> Result<ObliquePoint> {
    dim_check(base.0.len() == step.len(), || {
        format!("oblique point has {} entries, step has {}", base.0.len(), step.len())
    })?;
    let mut out = CVec::zeros(step.len());
    for (i, (&u, &xi)) in base.0.iter().zip(step.iter()).enumerate() {
        if xi == Complex64::new(0.0, 0.0) {
            out[i] = u;
            continue;
        }
        let moved = u + xi;
        let m = moved.norm();
        if m < DEGENERATE_NORM || !m.is_finite() {
            return Err(Error::DegenerateRetraction(m));
        }
        out[i] = moved / m;
    }
    Ok(ObliquePoint(out))
}

pub fn transport_sphere(new_base: &SpherePoint, v: &CMat) -> Result<CMat> {
    project_sphere(new_base, v)
}

pub fn transport_oblique(new_base: &ObliquePoint, v: &CVec) -> Result<CVec> {
    project_oblique(new_base, v)
}

/// The complex trace-one sphere.
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSphere;

impl Manifold for ComplexSphere {
    type Point = SpherePoint;
    type Vector = CMat;

    fn project(&self, base: &SpherePoint, ambient: &CMat) -> Result<CMat> {
        project_sphere(base, ambient)
    }

    fn retract(&self, base: &SpherePoint, step: &CMat) -> Result<SpherePoint> {
        retract_sphere(base, step)
    }

    fn feasibility_error(&self, p: &SpherePoint) -> f64 {
        sphere_residual(&p.0)
    }
}

/// The complex oblique (unit-modulus) manifold.
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexOblique;

impl Manifold for ComplexOblique {
    type Point = ObliquePoint;
    type Vector = CVec;

    fn project(&self, base: &ObliquePoint, ambient: &CVec) -> Result<CVec> {
        project_oblique(base, ambient)
    }

    fn retract(&self, base: &ObliquePoint, step: &CVec) -> Result<ObliquePoint> {
        retract_oblique(base, step)
    }

    fn feasibility_error(&self, p: &ObliquePoint) -> f64 {
        oblique_residual(&p.0)
    }
}
