//! Exact linear algebra of sl2(R) and PSL2(R).
//!
//! Basis (X, Y, Z) with M(x, y, z) = [[z, x], [y, -z]], the right-invariant
//! bracket [U, V] = -(UV - VU), the Lie-Poisson structure on the dual, the
//! Casimir, and closed-form exponentials of traceless matrices.

use crate::error::{Error, Result};
use nalgebra::Matrix2;

/// Determinant drift tolerance for PSL2 elements.
pub const DET_TOL: f64 = 1e-12;
/// Below this |det| the exponential switches to its Taylor fallback.
const EXP_TAYLOR_CUT: f64 = 1e-14;

/// Element of sl2(R) in basis coefficients: M(x,y,z) = [[z, x], [y, -z]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraElement {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Basis element X = M(1,0,0).
pub const BASIS_X: AlgebraElement = AlgebraElement { x: 1.0, y: 0.0, z: 0.0 };
/// Basis element Y = M(0,1,0).
pub const BASIS_Y: AlgebraElement = AlgebraElement { x: 0.0, y: 1.0, z: 0.0 };
/// Basis element Z = M(0,0,1).
pub const BASIS_Z: AlgebraElement = AlgebraElement { x: 0.0, y: 0.0, z: 1.0 };

impl AlgebraElement {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    /// The associated traceless matrix [[z, x], [y, -z]].
    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.z, self.x, self.y, -self.z)
    }

    /// Coefficients from a traceless matrix (the (0,0) entry is taken as z).
    pub fn from_matrix(m: &Matrix2<f64>) -> Self {
        Self::new(m[(0, 1)], m[(1, 0)], m[(0, 0)])
    }

    pub fn det(&self) -> f64 {
        -self.z * self.z - self.x * self.y
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(s * self.x, s * self.y, s * self.z)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Right-invariant bracket: -(UV - VU), returned in basis coefficients.
///
/// On the basis: [X,Y] = -Z, [X,Z] = 2X, [Y,Z] = -2Y.
pub fn algebra_bracket(u: &AlgebraElement, v: &AlgebraElement) -> AlgebraElement {
    let m = u.matrix() * v.matrix() - v.matrix() * u.matrix();
    AlgebraElement::from_matrix(&(-m))
}

/// Point of the dual with coordinates (xi, eta, zeta) dual to (x, y, z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covector {
    pub xi: f64,
    pub eta: f64,
    pub zeta: f64,
}

impl Covector {
    pub fn new(xi: f64, eta: f64, zeta: f64) -> Self {
        Self { xi, eta, zeta }
    }

    /// Casimir Hamiltonian: zeta^2/2 + 2 xi eta. Its level sets are the
    /// symplectic leaves of the Lie-Poisson structure.
    pub fn casimir(&self) -> f64 {
        0.5 * self.zeta * self.zeta + 2.0 * self.xi * self.eta
    }

    /// Co-metric of the geodesic Hamiltonian: xi^2 + eta^2.
    pub fn gstar(&self) -> f64 {
        self.xi * self.xi + self.eta * self.eta
    }

    /// Generator of the Casimir flow: A(p) = zeta Z + 2 xi Y + 2 eta X,
    /// satisfying casimir(p) = -det(A(p))/2.
    pub fn a_matrix(&self) -> AlgebraElement {
        AlgebraElement::new(2.0 * self.eta, 2.0 * self.xi, self.zeta)
    }

    pub fn antipode(&self) -> Self {
        Self::new(-self.xi, -self.eta, -self.zeta)
    }

    pub fn max_abs_diff(&self, other: &Covector) -> f64 {
        (self.xi - other.xi)
            .abs()
            .max((self.eta - other.eta).abs())
            .max((self.zeta - other.zeta).abs())
    }
}

/// Lie-Poisson bracket {f, g}(p) evaluated from the gradient triples of f and
/// g at p, via the structure table {xi,eta} = zeta, {xi,zeta} = -2 xi,
/// {eta,zeta} = 2 eta.
pub fn lie_poisson_bracket(grad_f: &Covector, grad_g: &Covector, p: &Covector) -> f64 {
    let fx = grad_f.xi;
    let fe = grad_f.eta;
    let fz = grad_f.zeta;
    let gx = grad_g.xi;
    let ge = grad_g.eta;
    let gz = grad_g.zeta;
    p.zeta * (fx * ge - fe * gx) - 2.0 * p.xi * (fx * gz - fz * gx)
        + 2.0 * p.eta * (fe * gz - fz * ge)
}

/// Element of PSL2(R): determinant-one matrix stored with a canonical sign
/// (first nonzero entry of (a, b, c, d) positive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psl2Element {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Psl2Element {
    /// Builds from raw entries, renormalizing the determinant to 1 and fixing
    /// the canonical sign representative.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        let mut e = Self { a, b, c, d };
        e.renormalize();
        e
    }

    pub fn identity() -> Self {
        Self { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    pub fn from_matrix(m: &Matrix2<f64>) -> Self {
        Self::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.a, self.b, self.c, self.d)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    fn renormalize(&mut self) {
        // det = ad - bc is rounding-dominated for large entries (the
        // uncertainty is ~eps(|ad| + |bc|)); dividing by such a det would
        // move an exactly-unimodular matrix off the group, so renormalize
        // only when the drift is resolvable above the noise.
        let det = self.det();
        let noise = 4.0 * f64::EPSILON * (self.a * self.d).abs().max(1.0)
            + 4.0 * f64::EPSILON * (self.b * self.c).abs();
        if det > 0.0 && (det - 1.0).abs() > noise.max(1e-15) {
            let s = 1.0 / det.sqrt();
            self.a *= s;
            self.b *= s;
            self.c *= s;
            self.d *= s;
        }
        self.fix_sign();
    }

    fn fix_sign(&mut self) {
        for e in [self.a, self.b, self.c, self.d] {
            if e != 0.0 {
                if e < 0.0 {
                    self.a = -self.a;
                    self.b = -self.b;
                    self.c = -self.c;
                    self.d = -self.d;
                }
                return;
            }
        }
    }

    pub fn mul(&self, rhs: &Psl2Element) -> Psl2Element {
        Psl2Element::new(
            self.a * rhs.a + self.b * rhs.c,
            self.a * rhs.b + self.b * rhs.d,
            self.c * rhs.a + self.d * rhs.c,
            self.c * rhs.b + self.d * rhs.d,
        )
    }

    pub fn inverse(&self) -> Psl2Element {
        Psl2Element::new(self.d, -self.b, -self.c, self.a)
    }

    /// Largest entry magnitude.
    pub fn norm_sup(&self) -> f64 {
        self.a
            .abs()
            .max(self.b.abs())
            .max(self.c.abs())
            .max(self.d.abs())
    }

    /// Sup-norm distance in PSL2: min over the sign ambiguity.
    pub fn dist(&self, other: &Psl2Element) -> f64 {
        let plus = (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
            .max((self.d - other.d).abs());
        let minus = (self.a + other.a)
            .abs()
            .max((self.b + other.b).abs())
            .max((self.c + other.c).abs())
            .max((self.d + other.d).abs());
        plus.min(minus)
    }
}

/// Closed-form exponential exp(t U) of a traceless 2x2 matrix.
///
/// With d = det(U): hyperbolic branch (d < 0) uses cosh/sinh, elliptic
/// (d > 0) cos/sin, and |d| below the parabolic cut a short Taylor series of
/// the same scalar functions (removable singularity).
pub fn exp_traceless(u: &AlgebraElement, t: f64) -> Psl2Element {
    // exp(tU) = f1 Id + t f2 U with U^2 = -det(U) Id.
    let d = u.det();
    let (f1, f2);
    if d.abs() < EXP_TAYLOR_CUT {
        let w = -d * t * t;
        f1 = 1.0 + w / 2.0 + w * w / 24.0 + w * w * w / 720.0;
        f2 = 1.0 + w / 6.0 + w * w / 120.0 + w * w * w / 5040.0;
    } else if d < 0.0 {
        let a = t * (-d).sqrt();
        f1 = a.cosh();
        f2 = if a == 0.0 { 1.0 } else { a.sinh() / a };
    } else {
        let a = t * d.sqrt();
        f1 = a.cos();
        f2 = if a == 0.0 { 1.0 } else { a.sin() / a };
    }
    let m = Matrix2::identity() * f1 + u.matrix() * (t * f2);
    Psl2Element::from_matrix(&m)
}

/// Inverts `exp_traceless` on the one-parameter subgroup generated by `u`:
/// returns s with exp(s U) = h in PSL2.
///
/// Hyperbolic generators give a unique real s; elliptic generators return s
/// in the fundamental interval [0, pi/mu) of the PSL2 period. Fails with
/// `NotInSubgroup` when the residual exceeds `tol` and `ParabolicGenerator`
/// when det(U) = 0.
pub fn log_in_subgroup(h: &Psl2Element, u: &AlgebraElement, tol: f64) -> Result<f64> {
    let d = u.det();
    if d.abs() < EXP_TAYLOR_CUT {
        return Err(Error::ParabolicGenerator);
    }
    let s = if d < 0.0 {
        let mu = (-d).sqrt();
        let s0 = ((h.trace().abs() / 2.0).max(1.0)).acosh() / mu;
        // Sign fixed by comparing against the actual exponential.
        let rp = exp_traceless(u, s0).dist(h);
        let rm = exp_traceless(u, -s0).dist(h);
        if rp <= rm { s0 } else { -s0 }
    } else {
        let mu = d.sqrt();
        // h = +/- (cos(phi) Id + sin(phi)/mu U); recover phi mod pi from the
        // pair (cos phi, sin phi) read off the trace and the largest entry of U.
        let um = u.matrix();
        let hm = h.matrix();
        let half_tr = h.trace() / 2.0;
        let off = hm - Matrix2::identity() * half_tr;
        let (mut bi, mut bj, mut best) = (0, 0, 0.0_f64);
        for i in 0..2 {
            for j in 0..2 {
                if um[(i, j)].abs() > best {
                    best = um[(i, j)].abs();
                    bi = i;
                    bj = j;
                }
            }
        }
        let sin_phi = off[(bi, bj)] / um[(bi, bj)] * mu;
        let phi = sin_phi.atan2(half_tr).rem_euclid(std::f64::consts::PI);
        phi / mu
    };
    let residual = exp_traceless(u, s).dist(h);
    if residual > tol {
        return Err(Error::NotInSubgroup { residual, tol });
    }
    Ok(s)
}
