//! Plane geometry primitives: validated points of the unit disk and upper
//! half-plane, Möbius automorphisms of the disk, the pseudohyperbolic
//! distance, and the Cayley transform between the two reference domains.

use num_complex::Complex64;

use crate::{Error, Result};

/// Points closer than this to the unit circle are rejected at construction so
/// that downstream denominators of the form `1 - conj(w) * z` stay away from
/// zero.
pub const BOUNDARY_REJECT: f64 = 1e-12;

/// A point strictly inside the unit disk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskPoint(Complex64);

impl DiskPoint {
    pub fn new(value: Complex64) -> Result<Self> {
        let modulus = value.norm();
        if !modulus.is_finite() || modulus >= 1.0 - BOUNDARY_REJECT {
            return Err(Error::OutsideDisk { modulus });
        }
        Ok(Self(value))
    }

    pub fn from_parts(re: f64, im: f64) -> Result<Self> {
        Self::new(Complex64::new(re, im))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    pub const ORIGIN: DiskPoint = DiskPoint(Complex64::new(0.0, 0.0));
}

/// A point strictly inside the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlanePoint(Complex64);

impl HalfPlanePoint {
    pub fn new(value: Complex64) -> Result<Self> {
        if !(value.im > 0.0) || !value.is_finite() {
            return Err(Error::OutsideHalfPlane { imag: value.im });
        }
        Ok(Self(value))
    }

    pub fn from_parts(re: f64, im: f64) -> Result<Self> {
        Self::new(Complex64::new(re, im))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }
}

/// A Möbius automorphism of the disk in `(center, rotation)` normal form:
///
/// `m(z) = rotation * (z - center) / (1 - conj(center) * z)`
///
/// `center` is the point sent to the origin and `rotation` is unimodular.
#[derive(Clone, Copy, Debug)]
pub struct MoebiusAutomorphism {
    center: DiskPoint,
    rotation: Complex64,
}

impl MoebiusAutomorphism {
    pub fn new(center: DiskPoint, rotation: Complex64) -> Result<Self> {
        let modulus = rotation.norm();
        if !modulus.is_finite() || (modulus - 1.0).abs() > 1e-12 {
            return Err(Error::NonUnimodularRotation { modulus });
        }
        // Renormalize so repeated compositions cannot drift off the circle.
        Ok(Self {
            center,
            rotation: rotation / modulus,
        })
    }

    pub fn identity() -> Self {
        Self {
            center: DiskPoint::ORIGIN,
            rotation: Complex64::new(1.0, 0.0),
        }
    }

    pub fn center(&self) -> DiskPoint {
        self.center
    }

    pub fn rotation(&self) -> Complex64 {
        self.rotation
    }

    pub fn apply(&self, z: DiskPoint) -> DiskPoint {
        let value = self.apply_raw(z.value());
        // An automorphism maps the open disk onto itself; rounding can still
        // push an extreme input past the construction margin, so clamp.
        DiskPoint::new(value).unwrap_or_else(|_| {
            let n = value.norm();
            DiskPoint(value * ((1.0 - 2.0 * BOUNDARY_REJECT) / n))
        })
    }

    /// The defining formula on raw complex values, without disk validation.
    pub fn apply_raw(&self, z: Complex64) -> Complex64 {
        let a = self.center.value();
        self.rotation * (z - a) / (Complex64::new(1.0, 0.0) - a.conj() * z)
    }

    /// Inverse automorphism in normal form: `center' = -rotation * center`,
    /// `rotation' = conj(rotation)`.
    pub fn inverse(&self) -> Self {
        let a = self.center.value();
        Self {
            center: DiskPoint(-self.rotation * a),
            rotation: self.rotation.conj(),
        }
    }
}

/// Pseudohyperbolic distance `|(w - z) / (1 - conj(w) z)|`, valued in [0, 1).
pub fn pseudo_dist(z: DiskPoint, w: DiskPoint) -> f64 {
    pseudo_dist_raw(z.value(), w.value())
}

/// Same formula on raw values; callers are responsible for |z|,|w| < 1.
pub fn pseudo_dist_raw(z: Complex64, w: Complex64) -> f64 {
    ((w - z) / (Complex64::new(1.0, 0.0) - w.conj() * z)).norm()
}

/// Cayley transform `H(z) = i (1 + z) / (1 - z)` from the disk onto the upper
/// half-plane.
pub fn cayley(z: DiskPoint) -> HalfPlanePoint {
    HalfPlanePoint(cayley_raw(z.value()))
}

pub fn cayley_raw(z: Complex64) -> Complex64 {
    Complex64::i() * (Complex64::new(1.0, 0.0) + z) / (Complex64::new(1.0, 0.0) - z)
}

/// Derivative `H'(z) = 2i / (1 - z)^2`.
pub fn cayley_derivative(z: Complex64) -> Complex64 {
    let d = Complex64::new(1.0, 0.0) - z;
    Complex64::new(0.0, 2.0) / (d * d)
}

/// Inverse Cayley transform `H^{-1}(w) = (w - i) / (w + i)`.
pub fn cayley_inv(w: HalfPlanePoint) -> DiskPoint {
    // H^{-1} maps the open half-plane into the open disk; the margin clamp
    // only matters for inputs within ~1e-12 of the real axis.
    let value = cayley_inv_raw(w.value());
    DiskPoint::new(value).unwrap_or_else(|_| {
        let n = value.norm();
        DiskPoint(value * ((1.0 - 2.0 * BOUNDARY_REJECT) / n))
    })
}

pub fn cayley_inv_raw(w: Complex64) -> Complex64 {
    (w - Complex64::i()) / (w + Complex64::i())
}
