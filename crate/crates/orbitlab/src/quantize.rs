//! The quantizer Op_h(a, chi : pi) and its calculus: assembly of operator
//! matrices, traces against orbit integrals, composition/equivariance/
//! positivity defects, the Sobolev-weight operator A(h), relative traces and
//! empirical operator-class probes.
//!
//! Assembly evaluates Op_h(a) = h^{-3} int chi(y) a_check(y/h) pi(exp y) dy
//! in KAK coordinates y = log(rot(phi1) diag(e^t, e^{-t}) rot(phi2)), where
//! dg = sqrt(2) sinh(2t) dphi1 dphi2 dt over the full double torus and
//! dy = dg / j(y). Rotations act diagonally on K-types, so for each t the
//! double angular integral is a 2-D FFT of the weight, the split factor is
//! a shared one-parameter matrix, and the t-quadrature is Cauchy-refined on
//! the interior block. A plain tensor-grid assembly is kept as a slow
//! cross-validation oracle.

use crate::error::{Error, Result};
use crate::lie::{haar_jacobian_closed_form, AlgebraVector, GroupMatrix};
use crate::orbits;
use crate::quad::panel_nodes;
use crate::repn::{KTypeVector, OperatorMatrix, PrincipalSeries};
use crate::symbols::{self, plateau_cutoff, IftEval, Support, Symbol};
use crate::C64;
use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use std::sync::Arc;

/// Quantization scheme: the smooth plateau cutoff chi (1 on |y| <= r1, 0 off
/// |y| >= r2), the Planck parameter, the temper-window policy for symbols
/// without decay, and quadrature refinement controls.
#[derive(Debug, Clone)]
pub struct QuantScheme {
    pub h: f64,
    pub chi_r1: f64,
    pub chi_r2: f64,
    /// Gaussian temper window; None picks 2 h k_max automatically.
    pub window: Option<f64>,
    /// relative Cauchy target on the interior Frobenius norm
    pub tol: f64,
    pub max_level: usize,
}

impl QuantScheme {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::Parameter(format!("h = {h} outside (0, 1]")));
        }
        Ok(QuantScheme {
            h,
            chi_r1: 0.5,
            chi_r2: 1.0,
            window: None,
            tol: 5e-3,
            max_level: 3,
        })
    }

    pub fn with_cutoff(mut self, r1: f64, r2: f64) -> Result<Self> {
        if !(0.0 < r1 && r1 < r2 && r2 <= crate::lie::DEFAULT_G_RADIUS) {
            return Err(Error::Parameter(format!(
                "cutoff radii ({r1}, {r2}) outside the exp neighborhood"
            )));
        }
        self.chi_r1 = r1;
        self.chi_r2 = r2;
        Ok(self)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_window(mut self, w: f64) -> Self {
        self.window = Some(w);
        self
    }

    fn auto_window(&self, pi: &PrincipalSeries) -> f64 {
        self.window.unwrap_or(2.0 * self.h * pi.k_max as f64)
    }
}

/// A symbol piece prepared for assembly: a transform evaluator plus the
/// truncation radius of the transform in x-units.
struct Piece {
    ift: IftEval,
    x_radius: f64,
    outer_xi: f64,
    /// index of the originating symbol
    origin: usize,
}

/// Splits a symbol into assembly pieces. Global symbols without decay pick
/// up the scheme's Gaussian temper window; symbols with a small inner scale
/// additionally split into a finely-gridded near-origin ball plus the
/// windowed remainder (the two-scale structure of the Sobolev weights).
fn pieces_of(a: &Symbol, idx: usize, pi: &PrincipalSeries, scheme: &QuantScheme) -> Vec<Piece> {
    let mk = |ift: IftEval, outer_xi: f64| {
        let cap = ift.reliable_radius();
        let x_radius = probe_decay_radius(&ift, cap);
        Piece {
            ift,
            x_radius,
            outer_xi,
            origin: idx,
        }
    };
    match a.support() {
        Support::Ball { .. } => vec![mk(a.prepared_ift(None), a.outer_radius())],
        Support::Global { .. } => {
            if a.has_analytic_ift() {
                return vec![mk(a.prepared_ift(None), a.outer_radius())];
            }
            let w = scheme.auto_window(pi);
            let inner = a.meta().inner_scale.unwrap_or(f64::INFINITY);
            if inner < 0.15 * w {
                let (r1, r2) = (6.0 * inner, 12.0 * inner);
                let near_sym = {
                    let ac = a.clone();
                    Symbol::new(
                        Arc::new(move |xi: &crate::lie::Covector| {
                            ac.eval(xi) * plateau_cutoff(xi.norm(), r1, r2)
                        }),
                        Support::Ball {
                            center: crate::lie::Covector::ZERO,
                            radius: r2,
                            hard: true,
                        },
                        a.meta(),
                    )
                };
                let far_sym = {
                    let ac = a.clone();
                    Symbol::new(
                        Arc::new(move |xi: &crate::lie::Covector| {
                            ac.eval(xi) * (1.0 - plateau_cutoff(xi.norm(), r1, r2))
                        }),
                        Support::Global {
                            effective_radius: a.outer_radius(),
                        },
                        a.meta(),
                    )
                };
                vec![
                    mk(near_sym.prepared_ift(None), r2),
                    mk(far_sym.prepared_ift(Some(w)), 4.6 * w),
                ]
            } else {
                vec![mk(a.prepared_ift(Some(w)), 4.6 * w)]
            }
        }
    }
}

/// Radius beyond which the transform falls under 1e-5 of its peak, probed
/// along axes and diagonals.
fn probe_decay_radius(ift: &IftEval, cap: f64) -> f64 {
    let dirs: [[f64; 3]; 7] = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.577, 0.577, 0.577],
        [-0.577, 0.577, 0.577],
        [0.577, -0.577, 0.577],
        [0.577, 0.577, -0.577],
    ];
    let cap = if cap.is_finite() { cap } else { 1e4 };
    let peak = ift.at_ortho([0.0; 3]).norm().max(1e-300);
    let mut r = 0.5f64;
    let mut hits = 0;
    while r < cap {
        let m = dirs
            .iter()
            .map(|d| ift.at_ortho([r * d[0], r * d[1], r * d[2]]).norm())
            .fold(0.0f64, f64::max);
        if m < 1e-5 * peak {
            hits += 1;
            if hits >= 2 {
                return r;
            }
        } else {
            hits = 0;
        }
        r *= 1.3;
    }
    cap
}

struct LevelParams {
    t_panels: usize,
    n_phi: usize,
}

/// Assembles Op_h for a batch of symbols sharing one scheme, refining the
/// quadrature until the interior Frobenius norm is stable to `scheme.tol`.
pub fn assemble_many(
    symbols: &[&Symbol],
    pi: &PrincipalSeries,
    scheme: &QuantScheme,
) -> Result<Vec<OperatorMatrix>> {
    let pieces: Vec<Piece> = symbols
        .iter()
        .enumerate()
        .flat_map(|(i, s)| pieces_of(s, i, pi, scheme))
        .collect();
    let h = scheme.h;
    let y_rad = pieces
        .iter()
        .map(|p| h * p.x_radius)
        .fold(0.0f64, f64::max)
        .min(scheme.chi_r2)
        .max(1e-6);
    let t_max = 1.02 * y_rad / std::f64::consts::SQRT_2;
    let r_out = pieces.iter().map(|p| p.outer_xi).fold(0.0f64, f64::max);
    let k = pi.k_max as f64;
    // bandwidth-driven initial resolutions
    let b_phi = r_out * 2.0 * y_rad / h;
    let n_phi0 = ((2.0 * k + 32.0).max(k + 1.5 * b_phi + 32.0) as usize).next_power_of_two();
    let b_t = 2.0 * k + 2.0 * r_out / h;
    let t_panels0 = ((t_max * b_t / 20.0).ceil() as usize).max(4);

    let mut prev: Option<Vec<DMatrix<C64>>> = None;
    for level in 0..=scheme.max_level {
        let params = LevelParams {
            t_panels: t_panels0 << level,
            n_phi: (n_phi0 << level.min(1)).min(1 << 13),
        };
        let mats = assemble_level(&pieces, symbols.len(), pi, scheme, t_max, y_rad, &params)?;
        if let Some(p) = &prev {
            let ok = mats.iter().zip(p).all(|(m, q)| {
                let scale = interior_frob(m, pi).max(interior_frob(q, pi));
                let diff = interior_diff(m, q, pi);
                scale < 1e-14 || diff <= scheme.tol * scale
            });
            if ok {
                return Ok(mats
                    .into_iter()
                    .map(|m| OperatorMatrix {
                        mat: m,
                        k_max: pi.k_max,
                        h_tag: Some(h),
                        provenance: "Op_h".into(),
                    })
                    .collect());
            }
        }
        prev = Some(mats);
    }
    Err(Error::Quadrature(format!(
        "assembly refinement stalled at level {} (tol {:e})",
        scheme.max_level, scheme.tol
    )))
}

fn interior_frob(m: &DMatrix<C64>, pi: &PrincipalSeries) -> f64 {
    let q = pi.k_max / 4;
    let n = pi.k_max / 2 + 1;
    m.view((q, q), (n, n)).norm()
}

fn interior_diff(m: &DMatrix<C64>, q2: &DMatrix<C64>, pi: &PrincipalSeries) -> f64 {
    let q = pi.k_max / 4;
    let n = pi.k_max / 2 + 1;
    (m.view((q, q), (n, n)) - q2.view((q, q), (n, n))).norm()
}

/// One quadrature level of the batched assembly.
fn assemble_level(
    pieces: &[Piece],
    n_out: usize,
    pi: &PrincipalSeries,
    scheme: &QuantScheme,
    t_max: f64,
    y_rad: f64,
    params: &LevelParams,
) -> Result<Vec<DMatrix<C64>>> {
    let dim = pi.dim();
    let n_phi = params.n_phi;
    if n_phi < 2 * pi.k_max + 2 {
        return Err(Error::Parameter("angular grid below the K-range".into()));
    }
    let h = scheme.h;
    let (t_nodes, t_weights) = panel_nodes(8, params.t_panels, 0.0, t_max);
    // elliptic guard: |y| >= sqrt(2) * elliptic angle, so angles beyond
    // chi_r2/sqrt(2) cannot contribute
    let guard_c = (scheme.chi_r2 / std::f64::consts::SQRT_2).min(1.5).cos();
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let mut out = vec![DMatrix::<C64>::zeros(dim, dim); n_out];
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n_phi);
    // K-weight bins in the FFT output
    let bins: Vec<usize> = (0..dim)
        .map(|i| pi.weight(i).rem_euclid(n_phi as i64) as usize)
        .collect();

    for (&t, &wt) in t_nodes.iter().zip(&t_weights) {
        let a_t = pi.pi_of_g(&GroupMatrix::diagonal(t.exp()))?;
        let (et, eti) = (t.exp(), (-t).exp());
        // geometry of the double torus: scaled log coordinates and chi/j
        let rows: Vec<Vec<(u32, [f64; 3], f64)>> = (0..n_phi)
            .into_par_iter()
            .map(|i1| {
                let phi1 = i1 as f64 * dphi;
                let (s1, c1) = phi1.sin_cos();
                let mut row = Vec::new();
                for i2 in 0..n_phi {
                    let phi2 = i2 as f64 * dphi;
                    let (s2, c2) = phi2.sin_cos();
                    // g = R(phi1) diag(et, eti) R(phi2)
                    let g = [
                        [c1 * et * c2 - s1 * eti * s2, -c1 * et * s2 - s1 * eti * c2],
                        [s1 * et * c2 + c1 * eti * s2, -s1 * et * s2 + c1 * eti * c2],
                    ];
                    let c = 0.5 * (g[0][0] + g[1][1]);
                    if c <= guard_c {
                        continue;
                    }
                    let y = match crate::lie::log_map(&GroupMatrix { m: g }) {
                        Ok(y) => y,
                        Err(_) => continue,
                    };
                    let ny = y.norm();
                    if ny >= y_rad {
                        continue;
                    }
                    let chi = plateau_cutoff(ny, scheme.chi_r1, scheme.chi_r2);
                    if chi == 0.0 {
                        continue;
                    }
                    let j = haar_jacobian_closed_form(&y);
                    let yo = y.ortho_coords();
                    row.push((i2 as u32, [yo[0] / h, yo[1] / h, yo[2] / h], chi / j));
                }
                row
            })
            .collect();

        let factor =
            h.powi(-3) * std::f64::consts::SQRT_2 * (2.0 * t).sinh() * wt * dphi * dphi;

        for piece in pieces {
            // weight samples on the torus, rows in parallel
            let mut grid = vec![C64::new(0.0, 0.0); n_phi * n_phi];
            grid.par_chunks_mut(n_phi)
                .zip(rows.par_iter())
                .for_each(|(chunk, row)| {
                    for &(i2, xh, cj) in row {
                        chunk[i2 as usize] = piece.ift.at_ortho(xh) * cj;
                    }
                });
            // 2-D FFT: all rows (phi2 -> k), then only the needed columns
            // (phi1 -> j)
            grid.par_chunks_mut(n_phi).for_each(|chunk| {
                fft.process(chunk);
            });
            let cols: Vec<Vec<C64>> = bins
                .par_iter()
                .map(|&bin_k| {
                    let mut buf: Vec<C64> =
                        (0..n_phi).map(|r| grid[r * n_phi + bin_k]).collect();
                    fft.process(&mut buf);
                    buf
                })
                .collect();
            let target = &mut out[piece.origin];
            for col in 0..dim {
                for row in 0..dim {
                    let f = cols[col][bins[row]];
                    target[(row, col)] += a_t.mat[(row, col)] * f * factor;
                }
            }
        }
    }
    Ok(out)
}

/// Single-symbol assembly.
pub fn assemble_op(
    a: &Symbol,
    pi: &PrincipalSeries,
    scheme: &QuantScheme,
) -> Result<OperatorMatrix> {
    Ok(assemble_many(&[a], pi, scheme)?.pop().unwrap())
}

/// Slow reference assembly on a plain tensor midpoint grid in y, calling
/// pi(exp y) per node; the cross-validation oracle for the KAK engine.
pub fn assemble_op_reference(
    a: &Symbol,
    pi: &PrincipalSeries,
    scheme: &QuantScheme,
    n_per_axis: usize,
) -> Result<OperatorMatrix> {
    let piece = &pieces_of(a, 0, pi, scheme)[0];
    let h = scheme.h;
    let y_rad = (h * piece.x_radius).min(scheme.chi_r2);
    let d = 2.0 * y_rad / n_per_axis as f64;
    let dim = pi.dim();
    let mut mat = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..n_per_axis {
        let y0 = -y_rad + (i as f64 + 0.5) * d;
        for j in 0..n_per_axis {
            let y1 = -y_rad + (j as f64 + 0.5) * d;
            for l in 0..n_per_axis {
                let y2 = -y_rad + (l as f64 + 0.5) * d;
                let y = AlgebraVector::from_ortho_coords([y0, y1, y2]);
                let ny = y.norm();
                if ny >= y_rad {
                    continue;
                }
                let chi = plateau_cutoff(ny, scheme.chi_r1, scheme.chi_r2);
                if chi == 0.0 {
                    continue;
                }
                let av = piece.ift.at_ortho([y0 / h, y1 / h, y2 / h]);
                let p = pi.pi_of_g(&crate::lie::exp_map(&y))?;
                let w = av * (chi * d * d * d * h.powi(-3));
                mat += &p.mat * w;
            }
        }
    }
    Ok(OperatorMatrix {
        mat,
        k_max: pi.k_max,
        h_tag: Some(h),
        provenance: "Op_h reference".into(),
    })
}

/// Trace report: interior sum, full-truncation sum, their Richardson
/// combination and the tail ratio.
#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    pub raw: f64,
    pub refined: f64,
    pub extrapolated: f64,
    pub tail_ratio: f64,
}

/// Trace of an assembled operator. Diagonal entries are exact per K-type, so
/// the refined value sums all retained weights; the interior sum and the
/// increment quantify the truncation tail.
pub fn trace(m: &OperatorMatrix) -> Result<TraceReport> {
    let mut full = C64::new(0.0, 0.0);
    for i in 0..m.mat.nrows() {
        full += m.mat[(i, i)];
    }
    let raw = m.interior_trace();
    let tail_ratio = (full - raw).norm() / full.norm().max(1e-300);
    if tail_ratio > 0.05 {
        return Err(Error::Truncation(format!(
            "trace tail is {tail_ratio:.3} of the total; raise k_max"
        )));
    }
    Ok(TraceReport {
        raw: raw.re,
        refined: full.re,
        extrapolated: full.re + (full.re - raw.re),
        tail_ratio,
    })
}

/// One Kirillov-formula comparison point: h^d tr(Op_h(a)) against the
/// integral of a over the scaled orbit.
#[derive(Debug, Clone, Serialize)]
pub struct KirillovPoint {
    pub h: f64,
    pub trace_scaled: f64,
    pub orbit_integral: f64,
    pub rel_error: f64,
}

pub fn kirillov_point(
    a: &Symbol,
    pi: &PrincipalSeries,
    orbit: &orbits::CoadjointOrbit,
    scheme: &QuantScheme,
) -> Result<KirillovPoint> {
    let m = assemble_op(a, pi, scheme)?;
    let tr = trace(&m)?;
    let scaled = orbits::scale_orbit(orbit, scheme.h)?;
    let oi = orbits::orbit_integral(a, &scaled)?;
    let trace_scaled = scheme.h * tr.refined;
    Ok(KirillovPoint {
        h: scheme.h,
        trace_scaled,
        orbit_integral: oi,
        rel_error: (trace_scaled - oi).abs() / oi.abs().max(1e-300),
    })
}

/// Interior operator norm of Op(a)Op(b) - Op(ab), with the scale of Op(ab).
pub fn compose_defect(
    a: &Symbol,
    b: &Symbol,
    pi: &PrincipalSeries,
    scheme: &QuantScheme,
) -> Result<(f64, f64)> {
    let ab = symbols::mul(a, b);
    let ms = assemble_many(&[a, b, &ab], pi, scheme)?;
    let prod = ms[0].mul(&ms[1]);
    let defect = OperatorMatrix {
        mat: &prod.mat - &ms[2].mat,
        k_max: pi.k_max,
        h_tag: Some(scheme.h),
        provenance: "compose defect".into(),
    };
    Ok((defect.interior_op_norm(), ms[2].interior_op_norm()))
}

/// Interior operator norm of Op(g.a) - pi(g) Op(a) pi(g)^{-1}, with the
/// scale of Op(a); the admissibility |Ad(g)| << h^{-1+delta} is enforced.
pub fn equivariance_defect(
    g: &GroupMatrix,
    a: &Symbol,
    pi: &PrincipalSeries,
    scheme: &QuantScheme,
) -> Result<(f64, f64)> {
    let delta = a.meta().roughness;
    let limit = scheme.h.powf(-1.0 + delta + 0.01);
    if crate::lie::adjoint_norm(g) > limit {
        return Err(Error::Parameter(format!(
            "|Ad(g)| = {} outside the admissible regime {limit}",
            crate::lie::adjoint_norm(g)
        )));
    }
    let ga = symbols::act(g, a);
    let ms = assemble_many(&[a, &ga], pi, scheme)?;
    let pg = pi.pi_of_g(g)?;
    let pginv = pi.pi_of_g(&g.inverse())?;
    let conj = pg.mul(&ms[0]).mul(&pginv);
    let defect = OperatorMatrix {
        mat: &ms[1].mat - &conj.mat,
        k_max: pi.k_max,
        h_tag: Some(scheme.h),
        provenance: "equivariance defect".into(),
    };
    Ok((defect.interior_op_norm(), ms[0].interior_op_norm()))
}

/// Smallest eigenvalue of the Hermitian part of Op(a) on the interior block
/// (the asymptotic positivity floor), with the operator scale.
pub fn positivity_floor(
    a: &Symbol,
    pi: &PrincipalSeries,
    scheme: &QuantScheme,
) -> Result<(f64, f64)> {
    let m = assemble_op(a, pi, scheme)?;
    Ok((m.interior_min_hermitian_eig(), m.interior_op_norm()))
}

/// A(h) = Op(b^{s,kappa}) Op(a^{s,kappa}): condition number, operator norm
/// and inverse norm on the interior block.
pub fn a_of_h(
    s: f64,
    kappa: f64,
    pi: &PrincipalSeries,
    scheme: &QuantScheme,
) -> Result<(f64, f64, f64)> {
    let (b, a_inv) = symbols::make_sobolev(scheme.h, s, kappa)?;
    let ms = assemble_many(&[&b, &a_inv], pi, scheme)?;
    let prod = ms[0].mul(&ms[1]);
    let block = prod.interior_block();
    let svd = block.svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if smin < 1e-10 {
        return Err(Error::Conditioning(format!(
            "A(h) numerically singular (smallest singular value {smin:e})"
        )));
    }
    Ok((smax / smin, smax, 1.0 / smin))
}

/// tr(Op_h(a^{s,kappa})) across an h-grid (uniform trace bound evidence).
pub fn uniform_trace_points(
    s: f64,
    kappa: f64,
    r: f64,
    h_grid: &[f64],
    k_max_policy: &dyn Fn(f64) -> usize,
) -> Result<Vec<(f64, f64)>> {
    if !(s > 1.0) {
        return Err(Error::Parameter(format!(
            "uniform trace bound needs s > d = 1, got {s}"
        )));
    }
    let mut out = Vec::new();
    for &h in h_grid {
        let pi = PrincipalSeries::new(r, k_max_policy(h))?;
        let scheme = QuantScheme::new(h)?;
        let (_, a_inv) = symbols::make_sobolev(h, s, kappa)?;
        let m = assemble_op(&a_inv, &pi, &scheme)?;
        let tr = trace(&m)?;
        out.push((h, tr.refined));
    }
    Ok(out)
}

/// Master normalization test: interior relative Frobenius defect between
/// Op_1(p), p(xi) = 1 + |xi|^2 Gaussian-tempered far outside the active
/// frequencies, and the Casimir matrix Delta.
pub fn calibrate_delta(pi: &PrincipalSeries, resolution_boost: u32) -> Result<f64> {
    let w = 2.0 * (1 << resolution_boost) as f64 * pi.k_max as f64;
    let p = symbols::calibration_symbol(w);
    let scheme = QuantScheme::new(1.0)?.with_tol(2e-3 / (1 << resolution_boost) as f64);
    let m = assemble_op(&p, pi, &scheme)?;
    let delta = pi.delta_matrix();
    let d = (m.interior_block() - delta.interior_block()).norm();
    Ok(d / delta.interior_block().norm())
}

/// Hermitian form backed by a matrix.
#[derive(Debug, Clone)]
pub struct HermFormRep {
    pub matrix: OperatorMatrix,
    pub kind: FormKind,
    pub provenance: String,
}

/// Q-forms are carried by quantized compactly supported symbols; H-forms are
/// the uniformly continuous Sobolev-type weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    QForm,
    HForm,
}

impl HermFormRep {
    pub fn standard(pi: &PrincipalSeries) -> Self {
        HermFormRep {
            matrix: OperatorMatrix {
                mat: DMatrix::identity(pi.dim(), pi.dim()),
                k_max: pi.k_max,
                h_tag: None,
                provenance: "P".into(),
            },
            kind: FormKind::HForm,
            provenance: "invariant form".into(),
        }
    }

    pub fn sobolev(pi: &PrincipalSeries, s: i32) -> Self {
        let dim = pi.dim();
        let mut mat = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            mat[(i, i)] = C64::new(pi.delta_eigenvalue(pi.weight(i)).powi(s), 0.0);
        }
        HermFormRep {
            matrix: OperatorMatrix {
                mat,
                k_max: pi.k_max,
                h_tag: None,
                provenance: format!("H_{s}"),
            },
            kind: FormKind::HForm,
            provenance: "sobolev form".into(),
        }
    }

    /// Q(v) = <M v, v>.
    pub fn evaluate(&self, v: &KTypeVector) -> C64 {
        self.matrix.apply(v).inner(v)
    }
}

/// Relative trace tr(P | Q) of the invariant-side form P against a positive
/// form Q on the interior block.
pub fn relative_trace(p: &HermFormRep, q: &HermFormRep) -> Result<f64> {
    let pb = p.matrix.interior_block();
    let qb = q.matrix.interior_block();
    let qh = (&qb + qb.adjoint()) * C64::new(0.5, 0.0);
    let eig = qh.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        return Err(Error::Conditioning(format!(
            "relative trace against an indefinite form (min eigenvalue {min:e})"
        )));
    }
    let a = qh
        .lu()
        .solve(&pb)
        .ok_or_else(|| Error::Conditioning("relative trace solve failed".into()))?;
    let mut tr = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        tr += a[(i, i)];
    }
    Ok(tr.re)
}

/// Boundedness evidence for the operator class of order m: interior norms of
/// iterated commutators theta_u(M) measured pi^s -> pi^{s-m} for words u of
/// degree <= 2 over the orthonormalized basis and s in [-2, 2].
#[derive(Debug, Clone, Serialize)]
pub struct ClassProbeReport {
    pub m: i32,
    /// (word label, s, norm)
    pub norms: Vec<(String, i32, f64)>,
    pub max_norm: f64,
}

pub fn operator_class_probe(
    mat: &OperatorMatrix,
    m: i32,
    pi: &PrincipalSeries,
) -> Result<ClassProbeReport> {
    let sqrt2 = std::f64::consts::SQRT_2;
    let base: Vec<(String, AlgebraVector)> = vec![
        ("1".into(), AlgebraVector::ZERO),
        ("H'".into(), AlgebraVector::basis_h().scale(1.0 / sqrt2)),
        ("E".into(), AlgebraVector::basis_e()),
        ("F".into(), AlgebraVector::basis_f()),
    ];
    let theta = |x: &AlgebraVector, t: &DMatrix<C64>| -> DMatrix<C64> {
        if x.norm() == 0.0 {
            return t.clone();
        }
        let dx = pi.algebra_action(x).mat;
        &dx * t - t * &dx
    };
    let mut words: Vec<(String, DMatrix<C64>)> = Vec::new();
    for (n1, x1) in &base {
        let t1 = theta(x1, &mat.mat);
        words.push((n1.clone(), t1.clone()));
        for (n2, x2) in &base {
            if x2.norm() == 0.0 {
                continue;
            }
            words.push((format!("{n1}{n2}"), theta(x2, &t1)));
        }
    }
    let mut norms = Vec::new();
    let mut max_norm = 0.0f64;
    let q = pi.k_max / 4;
    let n = pi.k_max / 2 + 1;
    for (label, t) in &words {
        let block = t.view((q, q), (n, n)).into_owned();
        for s in -2..=2i32 {
            // |Delta^{(s-m)/2} T Delta^{-s/2}| on the interior block
            let mut scaled = block.clone();
            for row in 0..n {
                let lam = pi.delta_eigenvalue(pi.weight(q + row));
                let wr = lam.powf((s - m) as f64 / 2.0);
                for col in 0..n {
                    let lamc = pi.delta_eigenvalue(pi.weight(q + col));
                    scaled[(row, col)] *= wr * lamc.powf(-s as f64 / 2.0);
                }
            }
            let nv = scaled.svd(false, false).singular_values.max();
            if !nv.is_finite() {
                return Err(Error::Conditioning("class probe overflow".into()));
            }
            max_norm = max_norm.max(nv);
            norms.push((label.clone(), s, nv));
        }
    }
    Ok(ClassProbeReport { m, norms, max_norm })
}
