//! Numerical model of the tempered spherical (even) principal series of
//! SL(2,R) on the circle: K-type basis e_k(theta) = e^{i k theta} for even k,
//! group action by the Moebius action on the circle with the unitary cocycle
//! |g^{-1} u|^{-(1+2ir)}, matrices via FFT, the closed-form tridiagonal Lie
//! algebra action, the elliptic Casimir Delta = 1 - sum_{x in basis} x^2
//! (over the trace-orthonormalized basis) and Sobolev pairings.
//!
//! The spectral parameter matches the Maass convention: the hyperbolic
//! Laplacian eigenvalue is 1/4 + r^2, and Delta e_k = ((3 + 4 r^2)/2 + k^2) e_k.

use crate::error::{Error, Result};
use crate::lie::{AlgebraVector, GroupMatrix};
use crate::C64;
use nalgebra::{DMatrix, DVector};
use rustfft::FftPlanner;
use std::sync::Arc;

/// The truncated principal series model.
#[derive(Debug, Clone)]
pub struct PrincipalSeries {
    /// spectral parameter (eigenvalue 1/4 + r^2)
    pub r: f64,
    /// K-types are even k with |k| <= k_max; k_max is a multiple of 4
    pub k_max: usize,
    /// circle sampling size (power of two, >= 4 k_max)
    pub sample_count: usize,
}

/// Truncated matrix of an operator in the K-type basis.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub mat: DMatrix<C64>,
    pub k_max: usize,
    pub h_tag: Option<f64>,
    pub provenance: String,
}

/// Coefficient vector over the even K-types.
#[derive(Debug, Clone)]
pub struct KTypeVector {
    pub coeffs: DVector<C64>,
    pub k_max: usize,
}

impl PrincipalSeries {
    pub fn new(r: f64, k_max: usize) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::Parameter("principal series needs r > 0".into()));
        }
        if k_max % 4 != 0 || k_max == 0 {
            return Err(Error::Parameter(format!(
                "k_max = {k_max} must be a positive multiple of 4"
            )));
        }
        let mut n = (4 * k_max).max(512);
        // margin for the cocycle oscillation at large r
        n = n.max((8.0 * r) as usize);
        let sample_count = n.next_power_of_two();
        Ok(PrincipalSeries {
            r,
            k_max,
            sample_count,
        })
    }

    /// Number of retained K-types.
    pub fn dim(&self) -> usize {
        self.k_max + 1
    }

    /// Matrix index of the even weight k.
    pub fn idx(&self, k: i64) -> usize {
        debug_assert!(k % 2 == 0 && k.unsigned_abs() as usize <= self.k_max);
        ((k + self.k_max as i64) / 2) as usize
    }

    /// Weight of a matrix index.
    pub fn weight(&self, idx: usize) -> i64 {
        2 * idx as i64 - self.k_max as i64
    }

    /// Index range of the interior block |k| <= k_max/2.
    pub fn interior(&self) -> std::ops::Range<usize> {
        let lo = self.idx(-(self.k_max as i64) / 2);
        let hi = self.idx(self.k_max as i64 / 2);
        lo..hi + 1
    }

    /// Eigenvalue of Delta on e_k: (3 + 4 r^2)/2 + k^2.
    pub fn delta_eigenvalue(&self, k: i64) -> f64 {
        (3.0 + 4.0 * self.r * self.r) / 2.0 + (k * k) as f64
    }

    /// Matrix of pi(g) in the K-type basis, computed by sampling the circle
    /// action and transforming back per column.
    pub fn pi_of_g(&self, g: &GroupMatrix) -> Result<OperatorMatrix> {
        if g.norm() > 1e3 {
            return Err(Error::Domain(format!(
                "|g| = {} beyond the configured cocycle limit",
                g.norm()
            )));
        }
        let n = self.sample_count;
        let dim = self.dim();
        let gi = g.inverse();
        // per sample: multiplier and pulled-back angle
        let mut mult = vec![C64::new(0.0, 0.0); n];
        let mut beta = vec![0.0f64; n];
        for (j, (m, b)) in mult.iter_mut().zip(beta.iter_mut()).enumerate() {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            let u = [theta.cos(), theta.sin()];
            let v = gi.apply(u);
            let n2 = v[0] * v[0] + v[1] * v[1];
            // |v|^{-(1+2ir)} = exp(-(1+2ir)/2 ln n2)
            let ln = n2.ln();
            let modulus = (-0.5 * ln).exp();
            let phase = -self.r * ln;
            *m = C64::new(phase.cos(), phase.sin()) * modulus;
            *b = v[1].atan2(v[0]);
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let mut mat = DMatrix::<C64>::zeros(dim, dim);
        let mut buf = vec![C64::new(0.0, 0.0); n];
        let mut worst_alias = 0.0f64;
        for col in 0..dim {
            let k = self.weight(col) as f64;
            for j in 0..n {
                let ph = k * beta[j];
                buf[j] = mult[j] * C64::new(ph.cos(), ph.sin());
            }
            fft.process(&mut buf);
            // c_j = (1/N) sum f(theta_m) e^{-i j theta_m}
            let scale = 1.0 / n as f64;
            let mut col_norm2 = 0.0f64;
            for row in 0..dim {
                let jw = self.weight(row);
                let bin = jw.rem_euclid(n as i64) as usize;
                let c = buf[bin] * scale;
                mat[(row, col)] = c;
                col_norm2 += c.norm_sqr();
            }
            // aliasing monitor: energy at the Nyquist band
            let mut tail = 0.0f64;
            for b in [n / 2 - 2, n / 2, n / 2 + 2] {
                tail += (buf[b % n] * scale).norm_sqr();
            }
            if col_norm2 > 0.0 {
                worst_alias = worst_alias.max(tail / col_norm2);
            }
        }
        if worst_alias > 1e-8 {
            return Err(Error::Aliasing(format!(
                "energy above Nyquist is {worst_alias:e} of the column norm"
            )));
        }
        Ok(OperatorMatrix {
            mat,
            k_max: self.k_max,
            h_tag: None,
            provenance: "pi(g)".into(),
        })
    }

    /// Diagonal phases of a rotation: pi(rot(theta)) e_k = e^{-ik theta} e_k.
    pub fn rotation_phases(&self, theta: f64) -> DVector<C64> {
        DVector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|i| {
                let k = self.weight(i) as f64;
                let ph = -k * theta;
                C64::new(ph.cos(), ph.sin())
            }),
        )
    }

    /// Closed-form tridiagonal action of the Lie algebra in the K-type basis,
    /// derived from the circle-model cocycle with mu = 1 + 2ir:
    ///   dpi(H) e_k = ((mu+k)/2) e_{k+2} + ((mu-k)/2) e_{k-2}
    ///   dpi(E) e_k = (-i(mu+k)/4) e_{k+2} + (ik/2) e_k + (i(mu-k)/4) e_{k-2}
    ///   dpi(F) e_k = (-i(mu+k)/4) e_{k+2} - (ik/2) e_k + (i(mu-k)/4) e_{k-2}
    pub fn algebra_action(&self, x: &AlgebraVector) -> OperatorMatrix {
        let dim = self.dim();
        let mu = C64::new(1.0, 2.0 * self.r);
        let i = C64::new(0.0, 1.0);
        let mut mat = DMatrix::<C64>::zeros(dim, dim);
        for col in 0..dim {
            let k = self.weight(col) as f64;
            let muk = mu + C64::new(k, 0.0);
            let munk = mu - C64::new(k, 0.0);
            let up = muk * C64::new(0.5 * x.h, 0.0) - i * muk * C64::new(0.25 * (x.e + x.f), 0.0);
            let diag = i * C64::new(0.5 * k * (x.e - x.f), 0.0);
            let dn = munk * C64::new(0.5 * x.h, 0.0) + i * munk * C64::new(0.25 * (x.e + x.f), 0.0);
            if col + 1 < dim {
                mat[(col + 1, col)] = up;
            }
            mat[(col, col)] = diag;
            if col >= 1 {
                mat[(col - 1, col)] = dn;
            }
        }
        OperatorMatrix {
            mat,
            k_max: self.k_max,
            h_tag: None,
            provenance: "dpi(x)".into(),
        }
    }

    /// Numerical differentiation oracle for the algebra action: Richardson
    /// extrapolated central differences of t -> pi(exp(t x)).
    pub fn algebra_action_numeric(&self, x: &AlgebraVector) -> Result<OperatorMatrix> {
        let diff = |t: f64| -> Result<DMatrix<C64>> {
            let p = self.pi_of_g(&crate::lie::exp_map(&x.scale(t)))?;
            let m = self.pi_of_g(&crate::lie::exp_map(&x.scale(-t)))?;
            Ok((p.mat - m.mat) / C64::new(2.0 * t, 0.0))
        };
        let t = 1e-3;
        let d1 = diff(t)?;
        let d2 = diff(t / 2.0)?;
        let extrap = (d2.clone() * C64::new(4.0, 0.0) - d1) / C64::new(3.0, 0.0);
        let check = (extrap.clone() - d2).norm() / extrap.norm().max(1e-300);
        if !check.is_finite() || check > 1e-2 {
            return Err(Error::Differentiation(format!(
                "algebra action differencing unstable ({check:e})"
            )));
        }
        Ok(OperatorMatrix {
            mat: extrap,
            k_max: self.k_max,
            h_tag: None,
            provenance: "dpi(x) numeric".into(),
        })
    }

    /// Delta = 1 - (dpi(H)^2/2 + dpi(E)^2 + dpi(F)^2), diagonal in the K-type
    /// basis with entries (3 + 4 r^2)/2 + k^2.
    pub fn delta_matrix(&self) -> OperatorMatrix {
        let h = self.algebra_action(&AlgebraVector::basis_h()).mat;
        let e = self.algebra_action(&AlgebraVector::basis_e()).mat;
        let f = self.algebra_action(&AlgebraVector::basis_f()).mat;
        let dim = self.dim();
        let mut mat = DMatrix::<C64>::identity(dim, dim);
        mat -= &h * &h * C64::new(0.5, 0.0);
        mat -= &e * &e;
        mat -= &f * &f;
        OperatorMatrix {
            mat,
            k_max: self.k_max,
            h_tag: None,
            provenance: "delta".into(),
        }
    }

    /// Sobolev pairing <Delta^s v, u> through the diagonal spectral form of
    /// Delta. Integer |s| <= 6.
    pub fn sobolev_pairing(&self, v: &KTypeVector, u: &KTypeVector, s: i32) -> Result<C64> {
        if s.abs() > 6 {
            return Err(Error::Conditioning(format!(
                "sobolev index {s} outside [-6, 6]"
            )));
        }
        let dim = self.dim();
        if v.coeffs.len() != dim || u.coeffs.len() != dim {
            return Err(Error::Parameter("vector truncation mismatch".into()));
        }
        let mut acc = C64::new(0.0, 0.0);
        for idx in 0..dim {
            let lam = self.delta_eigenvalue(self.weight(idx));
            let w = lam.powi(s);
            if !w.is_finite() {
                return Err(Error::Conditioning("sobolev weight overflow".into()));
            }
            acc += v.coeffs[idx] * u.coeffs[idx].conj() * w;
        }
        Ok(acc)
    }

    /// pi(g) through the KAK factorization: diagonal rotation phases times
    /// the cached one-parameter split matrix times diagonal phases.
    pub fn pi_of_g_kak(
        &self,
        g: &GroupMatrix,
        amat: &dyn Fn(f64) -> Arc<DMatrix<C64>>,
    ) -> DMatrix<C64> {
        let (phi1, t, phi2) = kak_decompose(g);
        let d1 = self.rotation_phases(phi1);
        let d2 = self.rotation_phases(phi2);
        let a = amat(t);
        let dim = self.dim();
        let mut out = DMatrix::<C64>::zeros(dim, dim);
        for c in 0..dim {
            for r in 0..dim {
                out[(r, c)] = d1[r] * a[(r, c)] * d2[c];
            }
        }
        out
    }
}

/// KAK coordinates of g: rotation angles and t >= 0 with
/// g = rot(phi1) diag(e^t, e^{-t}) rot(phi2).
pub fn kak_decompose(g: &GroupMatrix) -> (f64, f64, f64) {
    // B = g g^T = R(phi1) diag(e^{2t}, e^{-2t}) R(phi1)^T
    let b11 = g.m[0][0] * g.m[0][0] + g.m[0][1] * g.m[0][1];
    let b12 = g.m[0][0] * g.m[1][0] + g.m[0][1] * g.m[1][1];
    let b22 = g.m[1][0] * g.m[1][0] + g.m[1][1] * g.m[1][1];
    let tr = b11 + b22;
    let diff = b11 - b22;
    let disc = (diff * diff + 4.0 * b12 * b12).sqrt();
    let lam1 = 0.5 * (tr + disc); // >= 1
    let t = 0.5 * lam1.max(1.0).ln();
    let phi1 = 0.5 * (2.0 * b12).atan2(diff);
    let (s1, c1) = phi1.sin_cos();
    // k2 = A^{-1} R(phi1)^T g
    let et = t.exp();
    let a_inv = [1.0 / et, et];
    let r1t = [[c1, s1], [-s1, c1]];
    let m = [
        [
            a_inv[0] * (r1t[0][0] * g.m[0][0] + r1t[0][1] * g.m[1][0]),
            a_inv[0] * (r1t[0][0] * g.m[0][1] + r1t[0][1] * g.m[1][1]),
        ],
        [
            a_inv[1] * (r1t[1][0] * g.m[0][0] + r1t[1][1] * g.m[1][0]),
            a_inv[1] * (r1t[1][0] * g.m[0][1] + r1t[1][1] * g.m[1][1]),
        ],
    ];
    let phi2 = m[1][0].atan2(m[0][0]);
    (phi1, t, phi2)
}

impl OperatorMatrix {
    pub fn zeros_like(pi: &PrincipalSeries, provenance: &str) -> Self {
        OperatorMatrix {
            mat: DMatrix::zeros(pi.dim(), pi.dim()),
            k_max: pi.k_max,
            h_tag: None,
            provenance: provenance.into(),
        }
    }

    /// Owned copy of the interior block |k| <= k_max/2.
    pub fn interior_block(&self) -> DMatrix<C64> {
        let q = self.k_max / 4;
        let n = self.k_max / 2 + 1;
        self.mat.view((q, q), (n, n)).into_owned()
    }

    /// Operator norm (largest singular value) of the interior block.
    pub fn interior_op_norm(&self) -> f64 {
        let b = self.interior_block();
        b.svd(false, false).singular_values.max()
    }

    /// Frobenius norm of the interior block.
    pub fn interior_frobenius(&self) -> f64 {
        self.interior_block().norm()
    }

    /// Hermiticity defect |M - M*| / |M| on the interior block.
    pub fn hermiticity_defect(&self) -> f64 {
        let b = self.interior_block();
        let d = (&b - b.adjoint()).norm();
        d / b.norm().max(1e-300)
    }

    /// Smallest eigenvalue of the Hermitian part of the interior block.
    pub fn interior_min_hermitian_eig(&self) -> f64 {
        let b = self.interior_block();
        let herm = (&b + b.adjoint()) * C64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Trace over the interior block.
    pub fn interior_trace(&self) -> C64 {
        let b = self.interior_block();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..b.nrows() {
            acc += b[(i, i)];
        }
        acc
    }

    pub fn mul(&self, other: &Self) -> Self {
        OperatorMatrix {
            mat: &self.mat * &other.mat,
            k_max: self.k_max,
            h_tag: self.h_tag,
            provenance: format!("({})({})", self.provenance, other.provenance),
        }
    }

    pub fn add_scaled(&self, other: &Self, c: C64) -> Self {
        OperatorMatrix {
            mat: &self.mat + &other.mat * c,
            k_max: self.k_max,
            h_tag: self.h_tag,
            provenance: self.provenance.clone(),
        }
    }

    pub fn apply(&self, v: &KTypeVector) -> KTypeVector {
        KTypeVector {
            coeffs: &self.mat * &v.coeffs,
            k_max: v.k_max,
        }
    }
}

impl KTypeVector {
    pub fn zeros(pi: &PrincipalSeries) -> Self {
        KTypeVector {
            coeffs: DVector::zeros(pi.dim()),
            k_max: pi.k_max,
        }
    }

    pub fn basis(pi: &PrincipalSeries, k: i64) -> Self {
        let mut v = Self::zeros(pi);
        v.coeffs[pi.idx(k)] = C64::new(1.0, 0.0);
        v
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// <v, u> = sum v_k conj(u_k).
    pub fn inner(&self, other: &Self) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.coeffs.len() {
            acc += self.coeffs[i] * other.coeffs[i].conj();
        }
        acc
    }

    /// Fraction of the squared norm carried by |k| > k_max/2.
    pub fn tail_fraction(&self, pi: &PrincipalSeries) -> f64 {
        let total = self.coeffs.norm_squared();
        if total == 0.0 {
            return 0.0;
        }
        let inner: f64 = pi.interior().map(|i| self.coeffs[i].norm_sqr()).sum();
        ((total - inner) / total).max(0.0)
    }

    pub fn scale(&self, c: C64) -> Self {
        KTypeVector {
            coeffs: &self.coeffs * c,
            k_max: self.k_max,
        }
    }
}
