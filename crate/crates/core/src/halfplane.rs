//! Upper half-plane geometry: points, PSL2 maps, and hyperbolic distance.
//!
//! All formulas are closed-form. Maps are stored as unit-determinant real
//! matrices with a fixed sign convention, so two matrices representing the
//! same isometry compare equal entrywise.

use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tolerance::Tolerances;

/// A point `re + i·im` with `im > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point<T> {
    pub re: T,
    pub im: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(re: T, im: T) -> Result<Self> {
        if !(im > T::zero()) || !re.is_finite() || !im.is_finite() {
            return Err(Error::NotInHalfPlane {
                re: re.to_f64().unwrap_or(f64::NAN),
                im: im.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { re, im })
    }

    /// The point `i`, centre of the fundamental polygon.
    pub fn i() -> Self {
        Self {
            re: T::zero(),
            im: T::one(),
        }
    }

    /// `cosh` of the hyperbolic distance to `other`.
    #[inline]
    pub fn cosh_dist(&self, other: &Self) -> T {
        cosh_dist(self, other)
    }

    #[inline]
    pub fn dist(&self, other: &Self) -> T {
        dist(self, other)
    }
}

/// `cosh r(z, w) = 1 + |z - w|^2 / (2 Im z Im w)`.
#[inline]
pub fn cosh_dist<T: Scalar>(z: &Point<T>, w: &Point<T>) -> T {
    let dx = z.re - w.re;
    let dy = z.im - w.im;
    T::one() + (dx * dx + dy * dy) / (T::lit(2.0) * z.im * w.im)
}

/// Hyperbolic distance. Uses `2 asinh(|z-w| / (2 sqrt(y1 y2)))`, which
/// agrees with `acosh(cosh_dist)` but keeps full relative accuracy near 0.
#[inline]
pub fn dist<T: Scalar>(z: &Point<T>, w: &Point<T>) -> T {
    let dx = z.re - w.re;
    let dy = z.im - w.im;
    let chord = (dx * dx + dy * dy).sqrt();
    T::lit(2.0) * (chord / (T::lit(2.0) * (z.im * w.im).sqrt())).asinh()
}

/// An orientation-preserving isometry `z -> (az + b) / (cz + d)`, stored as
/// a unit-determinant matrix whose first non-negligible entry is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moebius<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Scalar> Moebius<T> {
    /// Builds a map from raw entries, renormalizing the determinant and
    /// fixing the sign.
    pub fn new(a: T, b: T, c: T, d: T) -> Result<Self> {
        Self { a, b, c, d }.canonicalize()
    }

    pub fn identity() -> Self {
        Self {
            a: T::one(),
            b: T::zero(),
            c: T::zero(),
            d: T::one(),
        }
    }

    /// Elliptic rotation about `i` by `angle` (counter-clockwise).
    pub fn rotation_about_i(angle: T) -> Self {
        let half = angle / T::lit(2.0);
        let (s, c) = half.sin_cos();
        Self {
            a: c,
            b: -s,
            c: s,
            d: c,
        }
    }

    /// Hyperbolic translation along the imaginary axis by `length`, moving `i` upwards.
    pub fn vertical_translation(length: T) -> Self {
        let half = length / T::lit(2.0);
        Self {
            a: half.exp(),
            b: T::zero(),
            c: T::zero(),
            d: (-half).exp(),
        }
    }

    pub fn det(&self) -> T {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> T {
        self.a + self.d
    }

    pub fn entries(&self) -> [T; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Renormalizes `det -> 1` and applies the PSL2 sign convention.
    ///
    /// Fails with [`Error::MatrixDecay`] when the determinant has drifted more
    /// than [`Tolerances::det_reject`] from 1, beyond the rounding noise of
    /// `ad - bc` itself (which grows with the entries of long products).
    pub fn canonicalize(self) -> Result<Self> {
        let tol = Tolerances::DEFAULT;
        let det = self.det();
        // `ad - bc` cancels catastrophically for large entries, and a product
        // inherits the determinant error of its largest intermediate factor.
        // Inside that band rescaling by sqrt(det) would inject noise into the
        // (accurate) large entries rather than remove drift.
        let noise =
            T::lit(4096.0) * T::epsilon() * ((self.a * self.d).abs() + (self.b * self.c).abs());
        let drift = (det - T::one()).abs();
        if !det.is_finite() || drift > T::lit(tol.det_reject) + noise {
            return Err(Error::MatrixDecay {
                det: det.to_f64().unwrap_or(f64::NAN),
            });
        }
        // Unit up to rounding: leave the entries bit-identical rather than
        // rescale by a noisy determinant.
        let scale = if drift <= noise.max(T::lit(2.0) * T::epsilon()) {
            T::one()
        } else {
            det.sqrt().recip()
        };
        let mut m = Self {
            a: self.a * scale,
            b: self.b * scale,
            c: self.c * scale,
            d: self.d * scale,
        };
        let threshold = T::lit(tol.sign_threshold);
        let leading = m
            .entries()
            .into_iter()
            .find(|e| e.abs() > threshold)
            .unwrap_or(T::one());
        if leading < T::zero() {
            m = Self {
                a: -m.a,
                b: -m.b,
                c: -m.c,
                d: -m.d,
            };
        }
        Ok(m)
    }

    /// Matrix product `self * other` followed by [`Self::canonicalize`].
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.mul_raw(other).canonicalize()
    }

    /// Plain matrix product, no renormalization.
    #[inline]
    pub fn mul_raw(&self, other: &Self) -> Self {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn inverse(&self) -> Self {
        // The adjugate of a unit-determinant matrix is its inverse; only the
        // sign may need fixing.
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
        .canonicalize()
        .expect("inverse of a unit-determinant matrix")
    }

    /// `(az + b) / (cz + d)`.
    #[inline]
    pub fn apply(&self, z: &Point<T>) -> Point<T> {
        let nr = self.a * z.re + self.b;
        let ni = self.a * z.im;
        let dr = self.c * z.re + self.d;
        let di = self.c * z.im;
        let den = dr * dr + di * di;
        Point {
            re: (nr * dr + ni * di) / den,
            // Im = y det / |cz + d|^2 with det = 1.
            im: z.im / den,
        }
    }

    /// Largest entrywise difference, modulo the sign ambiguity of PSL2.
    pub fn distance_psl2(&self, other: &Self) -> T {
        let plus = self
            .entries()
            .iter()
            .zip(other.entries())
            .fold(T::zero(), |acc, (x, y)| acc.max((*x - y).abs()));
        let minus = self
            .entries()
            .iter()
            .zip(other.entries())
            .fold(T::zero(), |acc, (x, y)| acc.max((*x + y).abs()));
        plus.min(minus)
    }
}

impl<T: Scalar> Mul for Moebius<T> {
    type Output = Result<Moebius<T>>;

    fn mul(self, rhs: Self) -> Self::Output {
        self.compose(&rhs)
    }
}

/// Hyperbolic Laplacian `y^2 (f_xx + f_yy)` at `z` by the flat five-point
/// stencil with mesh `h`, scaled by `y^2`.
pub fn stencil_laplacian<T, F>(f: F, z: &Point<T>, h: T) -> Result<T>
where
    T: Scalar,
    F: Fn(&Point<T>) -> T,
{
    if !(h > T::zero()) || z.im - h <= T::zero() {
        return Err(Error::InvalidArgument(
            "stencil leaves the upper half-plane".into(),
        ));
    }
    let at = |dx: T, dy: T| {
        f(&Point {
            re: z.re + dx,
            im: z.im + dy,
        })
    };
    let centre = f(z);
    let flat = (at(h, T::zero()) + at(-h, T::zero()) + at(T::zero(), h) + at(T::zero(), -h)
        - T::lit(4.0) * centre)
        / (h * h);
    Ok(z.im * z.im * flat)
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = Point<f64>;
    type M = Moebius<f64>;

    fn p(re: f64, im: f64) -> P {
        P::new(re, im).unwrap()
    }

    #[test]
    fn apply_examples() {
        let i = P::i();
        assert_eq!(M::identity().apply(&i), i);
        let t = M::new(1.0, 1.0, 0.0, 1.0).unwrap();
        let z = t.apply(&i);
        assert!((z.re - 1.0).abs() < 1e-15 && (z.im - 1.0).abs() < 1e-15);
        let s = M::new(0.0, -1.0, 1.0, 0.0).unwrap();
        let z = s.apply(&p(0.0, 2.0));
        assert!(z.re.abs() < 1e-15 && (z.im - 0.5).abs() < 1e-15);
    }

    #[test]
    fn distance_examples() {
        let i = P::i();
        assert_eq!(cosh_dist(&i, &i), 1.0);
        assert!((cosh_dist(&i, &p(0.0, 2.0)) - 1.25).abs() < 1e-15);
        assert!((cosh_dist(&i, &p(1.0, 1.0)) - 1.5).abs() < 1e-15);
        assert_eq!(dist(&i, &i), 0.0);
        assert!((dist(&i, &p(0.0, 2.0)) - 2f64.ln()).abs() < 1e-15);
        assert!((dist(&i, &p(0.0, 4.0)) - 4f64.ln()).abs() < 1e-15);
        assert!(
            (dist(&p(0.3, 0.7), &p(-1.0, 2.5)) - cosh_dist(&p(0.3, 0.7), &p(-1.0, 2.5)).acosh())
                .abs()
                < 1e-13
        );
    }

    #[test]
    fn rejects_points_off_the_half_plane() {
        assert!(P::new(0.0, 0.0).is_err());
        assert!(P::new(0.0, -1.0).is_err());
        assert!(P::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn canonicalize_examples() {
        let minus_id = M {
            a: -1.0,
            b: 0.0,
            c: 0.0,
            d: -1.0,
        };
        assert_eq!(minus_id.canonicalize().unwrap(), M::identity());
        let t = M {
            a: 1.0,
            b: 1.0,
            c: 0.0,
            d: 1.0,
        };
        assert_eq!(t.canonicalize().unwrap(), t);
        let neg = M {
            a: -1.0,
            b: -1.0,
            c: 0.0,
            d: -1.0,
        };
        assert_eq!(neg.canonicalize().unwrap(), t);
        // leading zero entry: sign taken from b
        let s = M {
            a: 0.0,
            b: -1.0,
            c: 1.0,
            d: 0.0,
        }
        .canonicalize()
        .unwrap();
        assert_eq!(
            s,
            M {
                a: 0.0,
                b: 1.0,
                c: -1.0,
                d: 0.0
            }
        );
    }

    #[test]
    fn canonicalize_rejects_decayed_determinant() {
        let m = M {
            a: 1.0 + 1e-5,
            b: 0.0,
            c: 0.0,
            d: 1.0,
        };
        assert!(matches!(m.canonicalize(), Err(Error::MatrixDecay { .. })));
        let flip = M {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: -1.0,
        };
        assert!(flip.canonicalize().is_err());
        // small drift is renormalized
        let m = M {
            a: 1.0 + 1e-8,
            b: 0.5,
            c: 0.0,
            d: 1.0,
        }
        .canonicalize()
        .unwrap();
        assert!((m.det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_composes_to_identity() {
        let m = M::new(2.0, 1.0, 3.0, 2.0).unwrap();
        let id = m.compose(&m.inverse()).unwrap();
        assert!(id.distance_psl2(&M::identity()) < 1e-14);
    }

    #[test]
    fn rotation_fixes_i_and_translation_moves_it_up() {
        let r = M::rotation_about_i(0.7);
        let z = r.apply(&P::i());
        assert!(z.re.abs() < 1e-15 && (z.im - 1.0).abs() < 1e-15);
        let t = M::vertical_translation(2f64.ln());
        assert!((t.apply(&P::i()).im - 2.0).abs() < 1e-15);
    }

    #[test]
    fn stencil_calibration() {
        let z = p(0.2, 1.3);
        let h = 1e-3;
        let constant = stencil_laplacian(|_: &P| 1.0, &z, h).unwrap();
        assert!(constant.abs() < 1e-10);
        // Δ(y^2) = y^2 * 2
        let sq = stencil_laplacian(|q: &P| q.im * q.im, &z, h).unwrap();
        assert!((sq - 2.0 * z.im * z.im).abs() < 1e-6);
        assert!(stencil_laplacian(|q: &P| q.im, &p(0.0, 1e-4), h).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let i = Point::<f32>::i();
        let t = Moebius::<f32>::new(1.0, 1.0, 0.0, 1.0).unwrap();
        let z = t.apply(&i);
        assert!((cosh_dist(&i, &z) - 1.5).abs() < 1e-6);
    }
}
