//! Exact kernels for sl(2,R) and SL(2,R): the fixed basis {H, E, F}, the
//! trace pairing with the dual, adjoint and coadjoint actions, the matrix
//! exponential/logarithm and the Haar density j(x) relating dg to dx.
//!
//! Conventions fixed here and used everywhere else:
//! * basis H = [[1,0],[0,-1]], E = [[0,1],[0,0]], F = [[0,0],[1,0]];
//! * `AlgebraVector` coordinates (c_h, c_e, c_f) are in {H, E, F};
//! * `Covector` coordinates are in the dual basis of {H, E, F} under the
//!   pairing <x, xi> = tr(x * m(xi)), so <x, xi> is the plain dot product
//!   of coordinate triples;
//! * Euclidean norms come from Gram-Schmidt of {H, E, F} under tr(x y^T),
//!   i.e. |x|^2 = 2 c_h^2 + c_e^2 + c_f^2 (the Frobenius norm of the matrix)
//!   and |xi|^2 = xi_h^2 / 2 + xi_e^2 + xi_f^2 on the dual side.

use crate::error::{Error, Result};
use nalgebra::Matrix3;

/// Default radius of the neighborhood on which exp is treated as injective
/// and the Haar density is evaluated.
pub const DEFAULT_G_RADIUS: f64 = 2.0;

/// Element of sl(2,R) in coordinates over the basis {H, E, F}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraVector {
    pub h: f64,
    pub e: f64,
    pub f: f64,
}

/// Element of the dual of sl(2,R) in the basis dual to {H, E, F} under the
/// trace pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covector {
    pub h: f64,
    pub e: f64,
    pub f: f64,
}

/// Element of SL(2,R). Constructors and products keep |det - 1| <= 1e-12 by
/// rescaling away floating point drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupMatrix {
    pub m: [[f64; 2]; 2],
}

impl AlgebraVector {
    pub const ZERO: Self = Self { h: 0.0, e: 0.0, f: 0.0 };

    pub fn new(h: f64, e: f64, f: f64) -> Self {
        Self { h, e, f }
    }

    /// The basis element H.
    pub fn basis_h() -> Self {
        Self::new(1.0, 0.0, 0.0)
    }
    /// The basis element E.
    pub fn basis_e() -> Self {
        Self::new(0.0, 1.0, 0.0)
    }
    /// The basis element F.
    pub fn basis_f() -> Self {
        Self::new(0.0, 0.0, 1.0)
    }
    /// The compact generator W = E - F.
    pub fn basis_w() -> Self {
        Self::new(0.0, 1.0, -1.0)
    }

    /// 2x2 traceless matrix realization.
    pub fn to_matrix(&self) -> [[f64; 2]; 2] {
        [[self.h, self.e], [self.f, -self.h]]
    }

    /// Inverse of `to_matrix`; the trace part is discarded.
    pub fn from_matrix(m: &[[f64; 2]; 2]) -> Self {
        Self::new((m[0][0] - m[1][1]) / 2.0, m[0][1], m[1][0])
    }

    /// Euclidean norm in the orthonormalized basis, equal to the Frobenius
    /// norm of the matrix realization.
    pub fn norm(&self) -> f64 {
        (2.0 * self.h * self.h + self.e * self.e + self.f * self.f).sqrt()
    }

    /// Coordinates in the orthonormalized basis {H/sqrt2, E, F}.
    pub fn ortho_coords(&self) -> [f64; 3] {
        [std::f64::consts::SQRT_2 * self.h, self.e, self.f]
    }

    /// Inverse of `ortho_coords`.
    pub fn from_ortho_coords(c: [f64; 3]) -> Self {
        Self::new(c[0] / std::f64::consts::SQRT_2, c[1], c[2])
    }

    pub fn scale(&self, t: f64) -> Self {
        Self::new(t * self.h, t * self.e, t * self.f)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.h + other.h, self.e + other.e, self.f + other.f)
    }

    /// Lie bracket [x, y].
    pub fn bracket(&self, other: &Self) -> Self {
        let a = self.to_matrix();
        let b = other.to_matrix();
        let ab = mat2_mul(&a, &b);
        let ba = mat2_mul(&b, &a);
        Self::from_matrix(&[
            [ab[0][0] - ba[0][0], ab[0][1] - ba[0][1]],
            [ab[1][0] - ba[1][0], ab[1][1] - ba[1][1]],
        ])
    }

    /// Covector tr(x . ) corresponding to x under the trace form.
    pub fn trace_dual(&self) -> Covector {
        Covector::new(2.0 * self.h, self.f, self.e)
    }

    /// The 3x3 matrix of ad(x) on AlgebraVector coordinates.
    pub fn ad_matrix(&self) -> Matrix3<f64> {
        // ad x (H) = [x, H], etc.; columns are images of the basis.
        let col_h = self.bracket(&Self::basis_h());
        let col_e = self.bracket(&Self::basis_e());
        let col_f = self.bracket(&Self::basis_f());
        Matrix3::new(
            col_h.h, col_e.h, col_f.h, //
            col_h.e, col_e.e, col_f.e, //
            col_h.f, col_e.f, col_f.f,
        )
    }
}

impl Covector {
    pub const ZERO: Self = Self { h: 0.0, e: 0.0, f: 0.0 };

    pub fn new(h: f64, e: f64, f: f64) -> Self {
        Self { h, e, f }
    }

    /// Traceless matrix m(xi) with <x, xi> = tr(x * m(xi)).
    pub fn to_matrix(&self) -> [[f64; 2]; 2] {
        [[self.h / 2.0, self.f], [self.e, -self.h / 2.0]]
    }

    /// Inverse of `to_matrix`.
    pub fn from_matrix(m: &[[f64; 2]; 2]) -> Self {
        Self::new(m[0][0] - m[1][1], m[1][0], m[0][1])
    }

    /// Euclidean norm in the dual of the orthonormalized basis.
    pub fn norm(&self) -> f64 {
        (self.h * self.h / 2.0 + self.e * self.e + self.f * self.f).sqrt()
    }

    /// Coordinates in the dual of the orthonormalized basis {H/sqrt2, E, F}.
    pub fn ortho_coords(&self) -> [f64; 3] {
        [self.h / std::f64::consts::SQRT_2, self.e, self.f]
    }

    pub fn from_ortho_coords(c: [f64; 3]) -> Self {
        Self::new(c[0] * std::f64::consts::SQRT_2, c[1], c[2])
    }

    pub fn scale(&self, t: f64) -> Self {
        Self::new(t * self.h, t * self.e, t * self.f)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.h + other.h, self.e + other.e, self.f + other.f)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.h - other.h, self.e - other.e, self.f - other.f)
    }

    /// Algebra element corresponding to xi under the trace form, the inverse
    /// of `AlgebraVector::trace_dual`.
    pub fn trace_dual_inv(&self) -> AlgebraVector {
        AlgebraVector::new(self.h / 2.0, self.f, self.e)
    }

    /// Invariant quadratic form c(xi) = -det m(xi); the coadjoint orbits are
    /// its level sets, with c > 0 on the hyperbolic (principal series) cone
    /// and c = 0 on the nilpotent cone.
    pub fn casimir(&self) -> f64 {
        self.h * self.h / 4.0 + self.e * self.f
    }
}

/// Pairing <x, xi> = tr(x * m(xi)), the dot product in coordinates.
pub fn pairing(x: &AlgebraVector, xi: &Covector) -> f64 {
    x.h * xi.h + x.e * xi.e + x.f * xi.f
}

fn mat2_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

impl GroupMatrix {
    /// Builds a group element, rescaling so det = 1; rejects matrices whose
    /// determinant is not close to positive one.
    pub fn new(m: [[f64; 2]; 2]) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det <= 0.0 || !det.is_finite() {
            return Err(Error::Domain(format!(
                "matrix with determinant {det} is not in SL(2,R)"
            )));
        }
        if (det - 1.0).abs() > 1e-6 {
            return Err(Error::Domain(format!(
                "matrix determinant {det} too far from 1"
            )));
        }
        let s = det.sqrt();
        Ok(Self {
            m: [[m[0][0] / s, m[0][1] / s], [m[1][0] / s, m[1][1] / s]],
        })
    }

    pub fn identity() -> Self {
        Self { m: [[1.0, 0.0], [0.0, 1.0]] }
    }

    /// diag(lambda, 1/lambda) for lambda > 0.
    pub fn diagonal(lambda: f64) -> Self {
        Self { m: [[lambda, 0.0], [0.0, 1.0 / lambda]] }
    }

    /// Rotation exp(theta * (F - E)), the maximal compact direction.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { m: [[c, -s], [s, c]] }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let m = mat2_mul(&self.m, &other.m);
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let s = det.sqrt();
        Self {
            m: [[m[0][0] / s, m[0][1] / s], [m[1][0] / s, m[1][1] / s]],
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            m: [[self.m[1][1], -self.m[0][1]], [-self.m[1][0], self.m[0][0]]],
        }
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Apply to a vector in R^2.
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }
}

/// Matrix exponential of an sl(2,R) element, via the closed form
/// exp(x) = cosh(theta) I + sinh(theta)/theta x with theta^2 = -det x.
pub fn exp_map(x: &AlgebraVector) -> GroupMatrix {
    let theta2 = x.h * x.h + x.e * x.f;
    let (c, s) = cosh_sinhc(theta2);
    GroupMatrix {
        m: [
            [c + s * x.h, s * x.e],
            [s * x.f, c - s * x.h],
        ],
    }
}

/// (cosh(theta), sinh(theta)/theta) as entire functions of theta^2.
fn cosh_sinhc(theta2: f64) -> (f64, f64) {
    if theta2.abs() < 1e-8 {
        // series: cosh = 1 + t2/2 + t2^2/24, sinhc = 1 + t2/6 + t2^2/120
        (
            1.0 + theta2 / 2.0 + theta2 * theta2 / 24.0,
            1.0 + theta2 / 6.0 + theta2 * theta2 / 120.0,
        )
    } else if theta2 > 0.0 {
        let t = theta2.sqrt();
        (t.cosh(), t.sinh() / t)
    } else {
        let t = (-theta2).sqrt();
        (t.cos(), t.sin() / t)
    }
}

/// Principal matrix logarithm on SL(2,R); inverse of `exp_map` near the
/// identity (elliptic angle taken in (-pi, pi)).
pub fn log_map(g: &GroupMatrix) -> Result<AlgebraVector> {
    let c = (g.m[0][0] + g.m[1][1]) / 2.0;
    if c <= -1.0 {
        return Err(Error::Domain(
            "matrix logarithm undefined: trace/2 <= -1".into(),
        ));
    }
    // g = c I + s * y with y traceless; y = (g - c I) scaled by theta/sinh(theta).
    let q = if c >= 1.0 {
        let theta = (c + (c * c - 1.0).max(0.0).sqrt()).ln(); // acosh
        if theta < 1e-8 {
            1.0 - (c - 1.0) / 3.0
        } else {
            theta / theta.sinh()
        }
    } else {
        let phi = c.acos();
        if phi < 1e-8 {
            1.0
        } else {
            phi / phi.sin()
        }
    };
    Ok(AlgebraVector::new(
        q * (g.m[0][0] - g.m[1][1]) / 2.0,
        q * g.m[0][1],
        q * g.m[1][0],
    ))
}

/// The 3x3 matrix of Ad(g) on AlgebraVector coordinates.
pub fn adjoint(g: &GroupMatrix) -> Matrix3<f64> {
    let gi = g.inverse();
    let col = |b: AlgebraVector| {
        let m = mat2_mul(&mat2_mul(&g.m, &b.to_matrix()), &gi.m);
        AlgebraVector::from_matrix(&m)
    };
    let ch = col(AlgebraVector::basis_h());
    let ce = col(AlgebraVector::basis_e());
    let cf = col(AlgebraVector::basis_f());
    Matrix3::new(ch.h, ce.h, cf.h, ch.e, ce.e, cf.e, ch.f, ce.f, cf.f)
}

/// The 3x3 matrix of Ad*(g) on Covector coordinates, fixed by the invariance
/// <Ad(g) x, Ad*(g) xi> = <x, xi>; equals the inverse transpose of `adjoint`.
pub fn coadjoint(g: &GroupMatrix) -> Matrix3<f64> {
    adjoint(&g.inverse()).transpose()
}

/// Apply a 3x3 coordinate matrix to an algebra vector.
pub fn apply_ad(a: &Matrix3<f64>, x: &AlgebraVector) -> AlgebraVector {
    let v = a * nalgebra::Vector3::new(x.h, x.e, x.f);
    AlgebraVector::new(v[0], v[1], v[2])
}

/// Apply a 3x3 dual-coordinate matrix to a covector.
pub fn apply_coad(a: &Matrix3<f64>, xi: &Covector) -> Covector {
    let v = a * nalgebra::Vector3::new(xi.h, xi.e, xi.f);
    Covector::new(v[0], v[1], v[2])
}

/// Coadjoint action Ad*(g) xi; in the matrix realization this is
/// m(xi) -> g m(xi) g^{-1}.
pub fn coadjoint_apply(g: &GroupMatrix, xi: &Covector) -> Covector {
    let gi = g.inverse();
    let m = mat2_mul(&mat2_mul(&g.m, &xi.to_matrix()), &gi.m);
    Covector::from_matrix(&m)
}

/// Operator norm (largest singular value) of Ad(g) with respect to the
/// Euclidean structure of the orthonormalized basis.
pub fn adjoint_norm(g: &GroupMatrix) -> f64 {
    ortho_operator_norm(&adjoint(g), false)
}

/// Operator norm of Ad*(g) in the dual Euclidean structure.
pub fn coadjoint_norm(g: &GroupMatrix) -> f64 {
    ortho_operator_norm(&coadjoint(g), true)
}

fn ortho_operator_norm(a: &Matrix3<f64>, dual: bool) -> f64 {
    // Conjugate the coordinate matrix into the orthonormal frame before
    // taking singular values. S maps raw coords to orthonormal coords.
    let s = if dual {
        Matrix3::from_diagonal(&nalgebra::Vector3::new(
            1.0 / std::f64::consts::SQRT_2,
            1.0,
            1.0,
        ))
    } else {
        Matrix3::from_diagonal(&nalgebra::Vector3::new(std::f64::consts::SQRT_2, 1.0, 1.0))
    };
    let s_inv = Matrix3::from_diagonal(&nalgebra::Vector3::new(
        1.0 / s[(0, 0)],
        1.0,
        1.0,
    ));
    let b = s * a * s_inv;
    b.svd(false, false).singular_values[0]
}

/// Frobenius norm of g, operator norms of Ad(g) and Ad*(g).
pub fn norms(g: &GroupMatrix) -> (f64, f64, f64) {
    (g.norm(), adjoint_norm(g), coadjoint_norm(g))
}

/// Haar density j(x) = det((1 - exp(-ad x)) / ad x) relating dg = j(x) dx,
/// with j(0) = 1; computed from the 3x3 matrix ad x by a convergent series.
pub fn haar_jacobian(x: &AlgebraVector) -> Result<f64> {
    haar_jacobian_radius(x, DEFAULT_G_RADIUS)
}

/// Same as `haar_jacobian` with an explicit neighborhood radius.
pub fn haar_jacobian_radius(x: &AlgebraVector, radius: f64) -> Result<f64> {
    if x.norm() > radius {
        return Err(Error::Domain(format!(
            "|x| = {} exceeds the configured neighborhood radius {}",
            x.norm(),
            radius
        )));
    }
    Ok(haar_jacobian_unchecked(x))
}

/// Series evaluation of det(phi(ad x)) with phi(z) = (1 - e^{-z})/z.
pub fn haar_jacobian_unchecked(x: &AlgebraVector) -> f64 {
    let m = x.ad_matrix();
    // phi(M) = sum_{n>=0} (-M)^n / (n+1)!, accumulated term by term
    let mut term = Matrix3::identity();
    let mut acc: Matrix3<f64> = Matrix3::identity();
    for n in 1..40 {
        term = (term * (-m)) / (n as f64 + 1.0);
        acc += term;
        if term.norm() < 1e-18 {
            break;
        }
    }
    acc.determinant()
}

/// Closed form j(x) = (sinh(theta)/theta)^2 with theta the matrix eigenvalue
/// scale, theta^2 = c_h^2 + c_e c_f. Used as an oracle for the series route.
pub fn haar_jacobian_closed_form(x: &AlgebraVector) -> f64 {
    let theta2 = x.h * x.h + x.e * x.f;
    let s = cosh_sinhc(theta2).1;
    s * s
}
