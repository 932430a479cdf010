//! Symbols on the dual of sl(2,R): evaluable functions with class metadata
//! and an inverse-Fourier-transform provider. Constructors cover Gaussian
//! dyadic symbols, the shrinking small-ball symbols a(h, xi0, delta, alpha),
//! the Sobolev weights b_h^{s,kappa} and their reciprocals, and the group
//! action g.a. Empirical symbol-class membership estimation lives here too.
//!
//! Fourier convention: a_check(x) = int a(xi) e^{-i<x,xi>} d(xi) with d(xi)
//! the dual of the Lebesgue measure on the orthonormalized coordinates, so
//! the transform pair is mutually inverse.

use crate::error::{Error, Result};
use crate::lie::{adjoint, coadjoint, AlgebraVector, Covector, GroupMatrix};
use crate::nufft::GridIft;
use crate::C64;
use serde::Serialize;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

type EvalFn = Arc<dyn Fn(&Covector) -> C64 + Send + Sync>;
type IftFn = Arc<dyn Fn(&AlgebraVector) -> C64 + Send + Sync>;

/// Support descriptor. Balls may be hard (evaluator vanishes outside) or
/// effective (Gaussian-type tails).
#[derive(Debug, Clone, Copy)]
pub enum Support {
    Ball {
        center: Covector,
        radius: f64,
        hard: bool,
    },
    Global {
        effective_radius: f64,
    },
}

/// Class metadata carried by a symbol: order m, roughness delta, optional
/// Planck tag, and an optional inner smoothness scale (symbols like
/// b_h^{s,kappa} vary on this scale near the origin).
#[derive(Debug, Clone, Copy)]
pub struct SymbolMeta {
    pub order: f64,
    pub roughness: f64,
    pub h_tag: Option<f64>,
    pub inner_scale: Option<f64>,
}

impl Default for SymbolMeta {
    fn default() -> Self {
        SymbolMeta {
            order: 0.0,
            roughness: 0.0,
            h_tag: None,
            inner_scale: None,
        }
    }
}

/// An evaluable symbol with transform provider.
#[derive(Clone)]
pub struct Symbol {
    eval: EvalFn,
    analytic_ift: Option<IftFn>,
    support: Support,
    meta: SymbolMeta,
    grid_n: usize,
    grids: Arc<Mutex<HashMap<u64, Arc<GridIft>>>>,
}

/// Transform evaluator handed to the quantizer: either a closed form or a
/// prepared grid table.
#[derive(Clone)]
pub enum IftEval {
    Analytic(IftFn),
    Grid(Arc<GridIft>),
}

impl IftEval {
    /// Value at x given in orthonormal coordinates.
    pub fn at_ortho(&self, x: [f64; 3]) -> C64 {
        match self {
            IftEval::Analytic(f) => f(&AlgebraVector::from_ortho_coords(x)),
            IftEval::Grid(g) => g.eval(x),
        }
    }

    pub fn at(&self, x: &AlgebraVector) -> C64 {
        match self {
            IftEval::Analytic(f) => f(x),
            IftEval::Grid(g) => g.eval(x.ortho_coords()),
        }
    }

    /// Radius beyond which grid tables are unreliable (infinite for closed
    /// forms).
    pub fn reliable_radius(&self) -> f64 {
        match self {
            IftEval::Analytic(_) => f64::INFINITY,
            IftEval::Grid(g) => g.reliable_radius(),
        }
    }
}

impl Symbol {
    pub fn new(eval: EvalFn, support: Support, meta: SymbolMeta) -> Self {
        Symbol {
            eval,
            analytic_ift: None,
            support,
            meta,
            grid_n: 64,
            grids: Arc::new(Mutex::new(HashMap::new())),
        }
    }

    pub fn with_analytic_ift(mut self, ift: IftFn) -> Self {
        self.analytic_ift = Some(ift);
        self
    }

    pub fn eval(&self, xi: &Covector) -> C64 {
        (self.eval)(xi)
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn meta(&self) -> SymbolMeta {
        self.meta
    }

    pub fn has_analytic_ift(&self) -> bool {
        self.analytic_ift.is_some()
    }

    /// Inverse Fourier transform a_check at a point, from the closed form
    /// when available, otherwise from the grid table.
    pub fn ift(&self, x: &AlgebraVector) -> Result<C64> {
        if let Some(f) = &self.analytic_ift {
            return Ok(f(x));
        }
        let grid = self.grid_ift(None);
        let xo = x.ortho_coords();
        let r = grid.reliable_radius();
        if xo.iter().any(|v| v.abs() > r) {
            return Err(Error::Accuracy(format!(
                "requested |x| beyond the reliable grid range {r:.3}"
            )));
        }
        Ok(grid.eval(xo))
    }

    /// Transform evaluator for quantization. A Gaussian temper window is
    /// applied multiplicatively for symbols without decay; `window = None`
    /// uses the symbol as is.
    pub fn prepared_ift(&self, window: Option<f64>) -> IftEval {
        if window.is_none() {
            if let Some(f) = &self.analytic_ift {
                return IftEval::Analytic(f.clone());
            }
        }
        IftEval::Grid(self.grid_ift(window))
    }

    /// Grid transform table (cached per temper window).
    pub fn grid_ift(&self, window: Option<f64>) -> Arc<GridIft> {
        let key = window.map(|w| w.to_bits()).unwrap_or(0);
        let mut cache = self.grids.lock().unwrap();
        if let Some(g) = cache.get(&key) {
            return g.clone();
        }
        let (center, hw) = self.grid_geometry(window);
        let eval = self.eval.clone();
        let f = move |xo: [f64; 3]| {
            let xi = Covector::from_ortho_coords(xo);
            let mut v = eval(&xi);
            if let Some(w) = window {
                let r2 = xo.iter().map(|t| t * t).sum::<f64>();
                v *= (-r2 / (2.0 * w * w)).exp();
            }
            v
        };
        let g = Arc::new(GridIft::build(&f, center, [hw, hw, hw], self.grid_n));
        cache.insert(key, g.clone());
        g
    }

    fn grid_geometry(&self, window: Option<f64>) -> ([f64; 3], f64) {
        match self.support {
            Support::Ball { center, radius, .. } => {
                let hw = 2.0 * radius;
                (center.ortho_coords(), hw)
            }
            Support::Global { effective_radius } => {
                let mut hw = effective_radius;
                if let Some(w) = window {
                    hw = hw.min(4.6 * w);
                }
                ([0.0; 3], hw)
            }
        }
    }

    /// Outer radius of the region where the symbol carries mass (used by
    /// orbit windows and assembly truncation).
    pub fn outer_radius(&self) -> f64 {
        match self.support {
            Support::Ball { center, radius, .. } => center.norm() + 1.05 * radius,
            Support::Global { effective_radius } => effective_radius,
        }
    }

    /// Total mass int a d(xi) by a midpoint rule over the support box.
    pub fn mass(&self) -> C64 {
        let (center, hw) = self.grid_geometry(None);
        let n = 96;
        let d = 2.0 * hw / n as f64;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            let x = center[0] + (i as f64 + 0.5) * d - hw;
            for j in 0..n {
                let y = center[1] + (j as f64 + 0.5) * d - hw;
                for k in 0..n {
                    let z = center[2] + (k as f64 + 0.5) * d - hw;
                    acc += (self.eval)(&Covector::from_ortho_coords([x, y, z]));
                }
            }
        }
        acc * (d * d * d / (2.0 * std::f64::consts::PI).powi(3))
    }
}

/// Smooth transition equal to 1 for t <= 0 and 0 for t >= 1.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let f = |u: f64| (-1.0 / u).exp();
        f(1.0 - t) / (f(1.0 - t) + f(t))
    }
}

/// Smooth plateau cutoff: 1 on |v| <= r1, 0 on |v| >= r2.
pub fn plateau_cutoff(v: f64, r1: f64, r2: f64) -> f64 {
    smoothstep((v.abs() - r1) / (r2 - r1))
}

/// Japanese bracket <xi> = (1 + |xi|^2)^{1/2}.
pub fn jap(xi: &Covector) -> f64 {
    (1.0 + xi.norm().powi(2)).sqrt()
}

/// <xi>_r = (r^2 + |xi|^2)^{1/2}.
pub fn jap_r(xi: &Covector, r: f64) -> f64 {
    (r * r + xi.norm().powi(2)).sqrt()
}

/// Gaussian symbol amp * exp(-|xi - center|^2 / (2 width^2)) with its closed
/// form transform.
pub fn gaussian_symbol(amp: f64, center: &Covector, width: f64) -> Symbol {
    let c = *center;
    let w = width;
    let eval: EvalFn = Arc::new(move |xi: &Covector| {
        let d = xi.sub(&c);
        C64::new(amp * (-d.norm().powi(2) / (2.0 * w * w)).exp(), 0.0)
    });
    let ift: IftFn = Arc::new(move |x: &AlgebraVector| {
        let xo = x.ortho_coords();
        let x2 = xo.iter().map(|v| v * v).sum::<f64>();
        let phase = -crate::lie::pairing(x, &c);
        C64::new(phase.cos(), phase.sin())
            * (amp * w.powi(3) * (2.0 * std::f64::consts::PI).powf(-1.5) * (-w * w * x2 / 2.0).exp())
    });
    Symbol::new(
        eval,
        Support::Ball {
            center: c,
            radius: 6.5 * w,
            hard: false,
        },
        SymbolMeta::default(),
    )
    .with_analytic_ift(ift)
}

/// The calibration symbol p(xi) = (1 + |xi|^2) tempered by a Gaussian window
/// of scale `window` far outside the active frequencies; closed form
/// transform (1 - Laplacian) applied to the window Gaussian.
pub fn calibration_symbol(window: f64) -> Symbol {
    let w = window;
    let eval: EvalFn = Arc::new(move |xi: &Covector| {
        let r2 = xi.norm().powi(2);
        C64::new((1.0 + r2) * (-r2 / (2.0 * w * w)).exp(), 0.0)
    });
    let ift: IftFn = Arc::new(move |x: &AlgebraVector| {
        let x2 = x.ortho_coords().iter().map(|v| v * v).sum::<f64>();
        let g = w.powi(3) * (2.0 * std::f64::consts::PI).powf(-1.5) * (-w * w * x2 / 2.0).exp();
        C64::new(g * (1.0 + 3.0 * w * w - w.powi(4) * x2), 0.0)
    });
    Symbol::new(
        eval,
        Support::Global {
            effective_radius: 5.0 * w,
        },
        SymbolMeta {
            order: 2.0,
            ..Default::default()
        },
    )
    .with_analytic_ift(ift)
}

/// Bump profiles for small-ball symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BumpProfile {
    /// beta^2 with beta = exp(1 - 1/(1-|z|^2)) on |z| < 1; hard support in
    /// the unit ball and a smooth square root.
    Plateau,
    /// exp(-4.5 |z|^2); effective support.
    Gauss,
}

impl BumpProfile {
    pub fn value(&self, z2: f64) -> f64 {
        match self {
            BumpProfile::Plateau => {
                if z2 >= 1.0 {
                    0.0
                } else {
                    let b = (1.0 - 1.0 / (1.0 - z2)).exp();
                    b * b
                }
            }
            BumpProfile::Gauss => (-4.5 * z2).exp(),
        }
    }
}

/// Small-ball symbol a(h, xi0, delta, alpha)(xi) = alpha((xi0 - xi)/h^delta):
/// a bump of diameter ~ h^delta carried at xi0. The roughness tag is delta.
pub fn make_small_ball(
    h: f64,
    xi0: &Covector,
    delta: f64,
    profile: BumpProfile,
) -> Result<Symbol> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Parameter(format!(
            "small-ball roughness delta = {delta} outside (0, 1/2)"
        )));
    }
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::Parameter(format!("h = {h} outside (0, 1]")));
    }
    let scale = h.powf(delta);
    let c = *xi0;
    let eval: EvalFn = Arc::new(move |xi: &Covector| {
        let z = c.sub(xi).scale(1.0 / scale);
        C64::new(profile.value(z.norm().powi(2)), 0.0)
    });
    Ok(Symbol::new(
        eval,
        Support::Ball {
            center: c,
            radius: match profile {
                BumpProfile::Plateau => scale,
                BumpProfile::Gauss => 2.2 * scale,
            },
            hard: profile == BumpProfile::Plateau,
        },
        SymbolMeta {
            order: f64::NEG_INFINITY,
            roughness: delta,
            h_tag: Some(h),
            inner_scale: None,
        },
    ))
}

/// Sobolev weight pair: b(xi) = h^{-s} (h^{2(1-kappa)} + |xi|^2)^{s/2} and
/// its reciprocal. Both carry the inner smoothness scale h^{1-kappa}.
pub fn make_sobolev(h: f64, s: f64, kappa: f64) -> Result<(Symbol, Symbol)> {
    if !(s >= 0.0) {
        return Err(Error::Parameter(format!("sobolev order s = {s} must be >= 0")));
    }
    if !(kappa > 0.5 && kappa < 1.0) {
        return Err(Error::Parameter(format!(
            "kappa = {kappa} outside (1/2, 1)"
        )));
    }
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::Parameter(format!("h = {h} outside (0, 1]")));
    }
    let floor = h.powf(2.0 * (1.0 - kappa));
    let pref = h.powf(-s);
    let b_eval: EvalFn = Arc::new(move |xi: &Covector| {
        C64::new(pref * (floor + xi.norm().powi(2)).powf(s / 2.0), 0.0)
    });
    let a_eval: EvalFn = Arc::new(move |xi: &Covector| {
        C64::new(1.0 / (pref * (floor + xi.norm().powi(2)).powf(s / 2.0)), 0.0)
    });
    let meta_b = SymbolMeta {
        order: s,
        roughness: 1.0 - kappa,
        h_tag: Some(h),
        inner_scale: Some(h.powf(1.0 - kappa)),
    };
    let meta_a = SymbolMeta {
        order: -s,
        ..meta_b
    };
    let sup = Support::Global {
        effective_radius: 50.0,
    };
    Ok((
        Symbol::new(b_eval, sup, meta_b),
        Symbol::new(a_eval, sup, meta_a),
    ))
}

/// The h = 1 scale variant b^{s,r}(xi/h) = (r^2 + |xi/h|^2)^{s/2}; with
/// r = h^{-kappa} it coincides with the `make_sobolev` weight.
pub fn sobolev_weight_hscale(h: f64, s: f64, r: f64) -> Symbol {
    let eval: EvalFn = Arc::new(move |xi: &Covector| {
        let v = (r * r + (xi.norm() / h).powi(2)).powf(s / 2.0);
        C64::new(v, 0.0)
    });
    Symbol::new(
        eval,
        Support::Global {
            effective_radius: 50.0,
        },
        SymbolMeta {
            order: s,
            roughness: 0.0,
            h_tag: Some(h),
            inner_scale: Some(h * r),
        },
    )
}

/// Pointwise sum.
pub fn add(a: &Symbol, b: &Symbol) -> Symbol {
    let (ea, eb) = (a.eval.clone(), b.eval.clone());
    let eval: EvalFn = Arc::new(move |xi| ea(xi) + eb(xi));
    let support = hull(&a.support, &b.support);
    let meta = SymbolMeta {
        order: a.meta.order.max(b.meta.order),
        roughness: a.meta.roughness.max(b.meta.roughness),
        h_tag: a.meta.h_tag.or(b.meta.h_tag),
        inner_scale: merge_min(a.meta.inner_scale, b.meta.inner_scale),
    };
    let mut s = Symbol::new(eval, support, meta);
    if let (Some(fa), Some(fb)) = (&a.analytic_ift, &b.analytic_ift) {
        let (fa, fb) = (fa.clone(), fb.clone());
        s = s.with_analytic_ift(Arc::new(move |x| fa(x) + fb(x)));
    }
    s
}

/// Pointwise product (transform provided by grid).
pub fn mul(a: &Symbol, b: &Symbol) -> Symbol {
    let (ea, eb) = (a.eval.clone(), b.eval.clone());
    let eval: EvalFn = Arc::new(move |xi| ea(xi) * eb(xi));
    let support = intersect(&a.support, &b.support);
    let meta = SymbolMeta {
        order: a.meta.order + b.meta.order,
        roughness: a.meta.roughness.max(b.meta.roughness),
        h_tag: a.meta.h_tag.or(b.meta.h_tag),
        inner_scale: merge_min(a.meta.inner_scale, b.meta.inner_scale),
    };
    Symbol::new(eval, support, meta)
}

/// Scalar multiple.
pub fn scale(a: &Symbol, c: f64) -> Symbol {
    let ea = a.eval.clone();
    let eval: EvalFn = Arc::new(move |xi| ea(xi) * c);
    let mut s = Symbol::new(eval, a.support, a.meta);
    s.grid_n = a.grid_n;
    if let Some(fa) = &a.analytic_ift {
        let fa = fa.clone();
        s = s.with_analytic_ift(Arc::new(move |x| fa(x) * c));
    }
    s
}

/// Pointwise square root of a real non-negative symbol. Rejects inputs with
/// sampled values below -1e-12.
pub fn sqrt_symbol(a: &Symbol) -> Result<Symbol> {
    // sample for negativity
    let (center, hw) = a.grid_geometry(None);
    let n = 24;
    let d = 2.0 * hw / n as f64;
    let mut scale = 0.0f64;
    let mut min_v = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let xo = [
                    center[0] - hw + (i as f64 + 0.5) * d,
                    center[1] - hw + (j as f64 + 0.5) * d,
                    center[2] - hw + (k as f64 + 0.5) * d,
                ];
                let v = (a.eval)(&Covector::from_ortho_coords(xo));
                if v.im.abs() > 1e-12 * (1.0 + v.re.abs()) {
                    return Err(Error::Parameter("square root of a complex symbol".into()));
                }
                scale = scale.max(v.re.abs());
                min_v = min_v.min(v.re);
            }
        }
    }
    if min_v < -1e-12 * scale.max(1.0) {
        return Err(Error::Parameter(format!(
            "square root of a symbol with negative values (min {min_v:e})"
        )));
    }
    let ea = a.eval.clone();
    let eval: EvalFn = Arc::new(move |xi| {
        let v = ea(xi).re.max(0.0);
        C64::new(v.sqrt(), 0.0)
    });
    Ok(Symbol::new(eval, a.support, a.meta))
}

/// Group action (g.a)(xi) = a(Ad*(g)^{-1} xi); the transform precomposes
/// with Ad(g)^{-1} and the support maps by Ad*(g).
pub fn act(g: &GroupMatrix, a: &Symbol) -> Symbol {
    let coad_inv = coadjoint(&g.inverse());
    let ad_inv = adjoint(&g.inverse());
    let ea = a.eval.clone();
    let eval: EvalFn = Arc::new(move |xi| ea(&crate::lie::apply_coad(&coad_inv, xi)));
    let coad_norm = crate::lie::coadjoint_norm(g);
    let support = match a.support {
        Support::Ball {
            center,
            radius,
            hard,
        } => Support::Ball {
            center: crate::lie::coadjoint_apply(g, &center),
            radius: coad_norm * radius,
            hard,
        },
        Support::Global { effective_radius } => Support::Global {
            effective_radius: coad_norm * effective_radius,
        },
    };
    let mut s = Symbol::new(eval, support, a.meta);
    s.grid_n = a.grid_n;
    if let Some(fa) = &a.analytic_ift {
        let fa = fa.clone();
        s = s.with_analytic_ift(Arc::new(move |x| {
            fa(&crate::lie::apply_ad(&ad_inv, x))
        }));
    }
    s
}

fn hull(a: &Support, b: &Support) -> Support {
    match (a, b) {
        (
            Support::Ball {
                center: c1,
                radius: r1,
                hard: h1,
            },
            Support::Ball {
                center: c2,
                radius: r2,
                hard: h2,
            },
        ) => {
            let mid = Covector::new(
                (c1.h + c2.h) / 2.0,
                (c1.e + c2.e) / 2.0,
                (c1.f + c2.f) / 2.0,
            );
            let r = c1.sub(&mid).norm().max(c2.sub(&mid).norm()) + r1.max(*r2);
            Support::Ball {
                center: mid,
                radius: r,
                hard: *h1 && *h2,
            }
        }
        _ => Support::Global {
            effective_radius: outer(a).max(outer(b)),
        },
    }
}

fn intersect(a: &Support, b: &Support) -> Support {
    // conservative: keep the smaller ball
    match (a, b) {
        (Support::Ball { radius: r1, .. }, Support::Ball { radius: r2, .. }) => {
            if r1 <= r2 {
                *a
            } else {
                *b
            }
        }
        (Support::Ball { .. }, _) => *a,
        (_, Support::Ball { .. }) => *b,
        _ => *a,
    }
}

fn outer(s: &Support) -> f64 {
    match s {
        Support::Ball { center, radius, .. } => center.norm() + radius,
        Support::Global { effective_radius } => *effective_radius,
    }
}

fn merge_min(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// One row of the empirical class report: a multi-index with the estimated
/// constants across the h-grid.
#[derive(Debug, Clone, Serialize)]
pub struct ClassConstants {
    pub alpha: [usize; 3],
    /// sup |d^alpha a| * h^{delta |alpha|} <xi>^{|alpha| - m} per grid h
    pub constants: Vec<f64>,
    /// sup |d^alpha a| per grid h (uncompensated)
    pub raw_sup: Vec<f64>,
}

/// Empirical evidence for membership in S^m_delta.
#[derive(Debug, Clone, Serialize)]
pub struct ClassReport {
    pub m: f64,
    pub delta: f64,
    pub h_grid: Vec<f64>,
    pub rows: Vec<ClassConstants>,
    pub pass: bool,
}

/// Samples |d^alpha a| for |alpha| <= 3 by central finite differences over a
/// xi-grid and the given h-grid; constants are compensated by the class
/// weights and the report passes when they are finite and vary by less than
/// a factor 2 across the grid.
pub fn estimate_class_membership(
    family: &dyn Fn(f64) -> Symbol,
    m: f64,
    delta: f64,
    h_grid: &[f64],
) -> Result<ClassReport> {
    if h_grid.is_empty() {
        return Err(Error::Parameter("empty h grid".into()));
    }
    let mut alphas: Vec<[usize; 3]> = Vec::new();
    for a1 in 0..=3usize {
        for a2 in 0..=3 - a1 {
            for a3 in 0..=3 - a1 - a2 {
                alphas.push([a1, a2, a3]);
            }
        }
    }
    let mut rows: Vec<ClassConstants> = alphas
        .iter()
        .map(|&alpha| ClassConstants {
            alpha,
            constants: Vec::new(),
            raw_sup: Vec::new(),
        })
        .collect();
    for &h in h_grid {
        let sym = family(h);
        let pts = sample_points(&sym);
        let osc = h.powf(delta); // oscillation scale of the class
        for (row, &alpha) in rows.iter_mut().zip(&alphas) {
            let order: usize = alpha.iter().sum();
            let mut sup_c = 0.0f64;
            let mut sup_raw = 0.0f64;
            for xi in &pts {
                let step = 0.05 * osc * jap(xi).min(4.0);
                let d = finite_difference(&sym, xi, alpha, step)?;
                let raw = d.norm();
                let comp = raw * h.powf(delta * order as f64) * jap(xi).powf(order as f64 - m);
                sup_raw = sup_raw.max(raw);
                sup_c = sup_c.max(comp);
            }
            if !sup_c.is_finite() {
                return Err(Error::Differentiation(format!(
                    "non-finite derivative estimate for alpha {alpha:?}"
                )));
            }
            row.constants.push(sup_c);
            row.raw_sup.push(sup_raw);
        }
    }
    // membership evidence: constants finite and not growing as h shrinks
    // (monotone consistency; decay means the bound is not saturated)
    let pass = rows.iter().all(|row| {
        let first = row.constants[0];
        row.constants
            .iter()
            .all(|c| c.is_finite() && *c <= 2.0 * first.max(1e-9))
    });
    Ok(ClassReport {
        m,
        delta,
        h_grid: h_grid.to_vec(),
        rows,
        pass,
    })
}

fn sample_points(sym: &Symbol) -> Vec<Covector> {
    match sym.support {
        Support::Ball { center, radius, .. } => {
            let mut pts = vec![center];
            for &f in &[0.35, 0.7] {
                for dir in axis_directions() {
                    pts.push(center.add(&dir.scale(f * radius)));
                }
            }
            pts
        }
        Support::Global { .. } => {
            let mut pts = vec![Covector::new(0.1, 0.05, -0.05)];
            for &r in &[0.5, 1.0, 2.0, 5.0, 10.0] {
                for dir in axis_directions() {
                    pts.push(dir.scale(r));
                }
            }
            // track the inner smoothness scale when the symbol carries one
            if let Some(inner) = sym.meta.inner_scale {
                for &f in &[0.5, 1.0, 2.0] {
                    for dir in axis_directions() {
                        pts.push(dir.scale(f * inner));
                    }
                }
            }
            pts
        }
    }
}

fn axis_directions() -> Vec<Covector> {
    vec![
        Covector::from_ortho_coords([1.0, 0.0, 0.0]),
        Covector::from_ortho_coords([0.0, 1.0, 0.0]),
        Covector::from_ortho_coords([0.0, 0.0, 1.0]),
        Covector::from_ortho_coords([-0.577, 0.577, 0.577]),
    ]
}

/// Nested central differences for the mixed derivative d^alpha along the
/// orthonormal dual axes, with one halving consistency check.
fn finite_difference(sym: &Symbol, xi: &Covector, alpha: [usize; 3], step: f64) -> Result<C64> {
    let v1 = fd_raw(sym, xi, alpha, step);
    let order: usize = alpha.iter().sum();
    if order == 0 {
        return Ok(v1);
    }
    let v2 = fd_raw(sym, xi, alpha, step / 2.0);
    let scale = v1.norm().max(v2.norm());
    if scale > 1e-9 && (v1 - v2).norm() > 0.5 * scale {
        // one retune attempt with a smaller step
        let v3 = fd_raw(sym, xi, alpha, step / 4.0);
        if (v2 - v3).norm() > 0.5 * v2.norm().max(v3.norm()).max(1e-9) {
            return Err(Error::Differentiation(format!(
                "finite differences unstable at alpha {alpha:?}"
            )));
        }
        return Ok(v3);
    }
    Ok(v2)
}

fn fd_raw(sym: &Symbol, xi: &Covector, alpha: [usize; 3], step: f64) -> C64 {
    // innermost axis with a nonzero order
    let axis = if alpha[0] > 0 {
        0
    } else if alpha[1] > 0 {
        1
    } else if alpha[2] > 0 {
        2
    } else {
        return sym.eval(xi);
    };
    let mut sub = alpha;
    sub[axis] -= 1;
    let mut dir = [0.0; 3];
    dir[axis] = 1.0;
    let dirc = Covector::from_ortho_coords(dir);
    let f = |off: f64| fd_raw(sym, &xi.add(&dirc.scale(off)), sub, step);
    // five-point first derivative
    (f(-2.0 * step) - f(-step) * 8.0 + f(step) * 8.0 - f(2.0 * step)) / (12.0 * step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::exp_map;
    use crate::nufft::GridIft;
    use crate::orbits::{nilpotent_regular_point, Ray};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_ball_evaluator_peaks_at_center() {
        let xi0 = nilpotent_regular_point(Ray::Plus);
        let a = make_small_ball(0.1, &xi0, 0.3, BumpProfile::Plateau).unwrap();
        // alpha(0) = 1 at xi = xi0
        assert!((a.eval(&xi0).re - 1.0).abs() < 1e-14);
        // h = 1: support is xi0 - supp(alpha), a unit-scale ball
        let a1 = make_small_ball(1.0, &xi0, 0.3, BumpProfile::Plateau).unwrap();
        match a1.support() {
            Support::Ball { center, radius, .. } => {
                assert!(center.sub(&xi0).norm() < 1e-14);
                assert!((radius - 1.0).abs() < 1e-14);
            }
            _ => panic!("expected ball support"),
        }
        let far = xi0.add(&Covector::new(0.0, 1.01, 0.0));
        assert_eq!(a1.eval(&far).re, 0.0);
    }

    #[test]
    fn small_ball_support_diameter_scales_like_h_delta() {
        let xi0 = nilpotent_regular_point(Ray::Plus);
        for &h in &[0.3, 0.1, 0.05] {
            let delta = 0.3;
            let a = make_small_ball(h, &xi0, delta, BumpProfile::Plateau).unwrap();
            // measure the diameter along a dual axis through the center
            let dir = Covector::new(0.0, 1.0, 0.0);
            let tol = 1e-13;
            let mut lo = 0.0;
            let mut hi = 3.0 * h.powf(delta);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if a.eval(&xi0.add(&dir.scale(mid))).re > tol {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let diameter = 2.0 * lo;
            let ratio = diameter / h.powf(delta);
            assert!((1.9..=2.1).contains(&ratio), "h={h} ratio {ratio}");
        }
    }

    #[test]
    fn small_ball_rejects_bad_delta() {
        let xi0 = nilpotent_regular_point(Ray::Plus);
        assert!(make_small_ball(0.1, &xi0, 0.6, BumpProfile::Plateau).is_err());
        assert!(make_small_ball(0.1, &xi0, 0.0, BumpProfile::Plateau).is_err());
    }

    #[test]
    fn small_ball_mass_scales_with_h_cubed_delta() {
        let xi0 = nilpotent_regular_point(Ray::Plus);
        let delta = 0.25;
        let alpha_mass = make_small_ball(1.0, &xi0, delta, BumpProfile::Plateau)
            .unwrap()
            .mass()
            .re;
        for &h in &[0.4, 0.1] {
            let a = make_small_ball(h, &xi0, delta, BumpProfile::Plateau).unwrap();
            let want = h.powf(3.0 * delta) * alpha_mass;
            let got = a.mass().re;
            assert!(
                (got - want).abs() < 5e-3 * want,
                "h={h} got {got} want {want}"
            );
        }
    }

    #[test]
    fn sobolev_values_and_reciprocal() {
        let (h, s, kappa) = (0.1, 1.5, 0.7);
        let (b, a_inv) = make_sobolev(h, s, kappa).unwrap();
        // b(0) = h^{-kappa s}
        let want = h.powf(-kappa * s);
        assert!((b.eval(&Covector::ZERO).re - want).abs() < 1e-10 * want);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let xi = Covector::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let prod = b.eval(&xi).re * a_inv.eval(&xi).re;
            assert!((prod - 1.0).abs() < 1e-12);
        }
        // asymptotic regime |xi| = 10 h^{1-kappa}
        let r = 10.0 * h.powf(1.0 - kappa);
        let xi = Covector::from_ortho_coords([r, 0.0, 0.0]);
        let got = b.eval(&xi).re;
        let asym = h.powf(-s) * r.powf(s);
        assert!((got - asym).abs() < 0.01 * asym, "got {got} asym {asym}");
        // parameter guards
        assert!(make_sobolev(0.1, 1.5, 0.4).is_err());
        assert!(make_sobolev(0.1, -1.0, 0.7).is_err());
    }

    #[test]
    fn sobolev_hscale_variant_matches_at_r_h_kappa() {
        let (h, s, kappa) = (0.2, 1.5, 0.7);
        let (b, _) = make_sobolev(h, s, kappa).unwrap();
        let br = sobolev_weight_hscale(h, s, h.powf(-kappa));
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..50 {
            let xi = Covector::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let (v1, v2) = (b.eval(&xi).re, br.eval(&xi).re);
            assert!((v1 - v2).abs() < 1e-9 * v1.abs().max(1.0));
        }
    }

    #[test]
    fn sqrt_symbol_examples() {
        let xi0 = nilpotent_regular_point(Ray::Plus);
        let zero = scale(&gaussian_symbol(1.0, &Covector::ZERO, 1.0), 0.0);
        let sz = sqrt_symbol(&zero).unwrap();
        assert_eq!(sz.eval(&xi0).re, 0.0);
        // (sqrt a)^2 = a on samples
        let a = make_small_ball(0.2, &xi0, 0.25, BumpProfile::Plateau).unwrap();
        let ra = sqrt_symbol(&a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..1000 {
            let xi = xi0.add(&Covector::new(
                rng.gen_range(-0.8..0.8),
                rng.gen_range(-0.8..0.8),
                rng.gen_range(-0.8..0.8),
            ));
            let v = ra.eval(&xi).re;
            assert!((v * v - a.eval(&xi).re).abs() < 1e-12);
        }
        // sqrt of a Gaussian is the half-exponent Gaussian
        let g = gaussian_symbol(1.0, &xi0, 0.7);
        let rg = sqrt_symbol(&g).unwrap();
        let probe = xi0.add(&Covector::new(0.3, -0.2, 0.4));
        let want = (g.eval(&probe).re).sqrt();
        assert!((rg.eval(&probe).re - want).abs() < 1e-13);
        // negativity rejection
        let neg = scale(&g, -1.0);
        assert!(sqrt_symbol(&neg).is_err());
    }

    #[test]
    fn act_is_identity_at_identity_and_homomorphism() {
        let xi0 = nilpotent_regular_point(Ray::Plus);
        let a = gaussian_symbol(1.0, &xi0, 0.5);
        let id = crate::lie::GroupMatrix::identity();
        let a_id = act(&id, &a);
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..40 {
            let xi = Covector::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            assert!((a_id.eval(&xi) - a.eval(&xi)).norm() < 1e-14);
        }
        let g1 = exp_map(&AlgebraVector::new(0.2, -0.3, 0.1));
        let g2 = exp_map(&AlgebraVector::new(-0.1, 0.4, 0.25));
        let lhs = act(&g1.mul(&g2), &a);
        let rhs = act(&g1, &act(&g2, &a));
        for _ in 0..40 {
            let xi = Covector::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            assert!((lhs.eval(&xi) - rhs.eval(&xi)).norm() < 1e-10);
        }
    }

    #[test]
    fn act_contracts_small_ball_support() {
        // torus contraction moves the ball near Ad*(g) xi0 with radius
        // controlled by the coadjoint norm
        let xi0 = nilpotent_regular_point(Ray::Plus);
        let h = 0.1;
        let delta = 0.3;
        let theta = 0.2;
        let a = make_small_ball(h, &xi0, delta, BumpProfile::Plateau).unwrap();
        let t = 0.5 * theta * h.ln(); // contraction toward the cone tip
        let g = exp_map(&AlgebraVector::basis_h().scale(t));
        let moved = act(&g, &a);
        match moved.support() {
            Support::Ball { center, radius, .. } => {
                let want_center = crate::lie::coadjoint_apply(&g, &xi0);
                assert!(center.sub(&want_center).norm() < 1e-12);
                let coad_norm = crate::lie::coadjoint_norm(&g);
                assert!(radius <= coad_norm * h.powf(delta) * (1.0 + 1e-12));
            }
            _ => panic!("expected ball support"),
        }
    }

    #[test]
    fn gaussian_ift_matches_grid_recomputation() {
        // analytic provider vs grid-fft recomputation to 1e-6 of the peak
        let c = Covector::new(0.5, -0.2, 0.8);
        let a = gaussian_symbol(0.8, &c, 1.0);
        let grid = a.grid_ift(None);
        let peak = a.ift(&AlgebraVector::ZERO).unwrap().norm();
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..60 {
            let x = AlgebraVector::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
            );
            if x.norm() > 5.0 {
                continue;
            }
            let want = a.ift(&x).unwrap();
            let got = grid.eval(x.ortho_coords());
            assert!(
                (got - want).norm() < 1e-6 * peak,
                "x {x:?} got {got} want {want}"
            );
        }
    }

    #[test]
    fn ift_zero_frequency_is_mass() {
        let a = gaussian_symbol(1.3, &Covector::new(0.4, 0.1, -0.3), 0.8);
        let mass = a.mass();
        let at0 = a.ift(&AlgebraVector::ZERO).unwrap();
        assert!((mass - at0).norm() < 1e-3 * at0.norm());
    }

    #[test]
    fn ift_roundtrip_recovers_symbol() {
        let c = Covector::new(0.0, 0.7, 0.7);
        let a = gaussian_symbol(1.0, &c, 0.8);
        let ift = |xo: [f64; 3]| a.ift(&AlgebraVector::from_ortho_coords(xo)).unwrap();
        let samples = [
            c,
            c.add(&Covector::new(0.2, 0.0, -0.3)),
            c.add(&Covector::new(-0.5, 0.4, 0.0)),
        ];
        let xis: Vec<[f64; 3]> = samples.iter().map(|s| s.ortho_coords()).collect();
        let got = GridIft::forward_from_ift(&ift, 9.0, 64, &xis);
        for (s, g) in samples.iter().zip(&got) {
            let want = a.eval(s);
            assert!(
                (g - want).norm() < 1e-6 * 1.0,
                "xi {s:?} got {g} want {want}"
            );
        }
    }

    #[test]
    fn ift_linear_and_conjugate_symmetric() {
        let a = gaussian_symbol(1.0, &Covector::new(0.3, 0.2, -0.1), 0.9);
        let b = gaussian_symbol(0.5, &Covector::new(-0.4, 0.1, 0.6), 1.2);
        let sum = add(&a, &b);
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..30 {
            let x = AlgebraVector::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let lhs = sum.ift(&x).unwrap();
            let rhs = a.ift(&x).unwrap() + b.ift(&x).unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
            // real symbols: a_check(-x) = conj(a_check(x))
            let v = a.ift(&x).unwrap();
            let w = a.ift(&x.scale(-1.0)).unwrap();
            assert!((v.conj() - w).norm() < 1e-10);
        }
    }

    #[test]
    fn small_ball_grid_ift_matches_direct_quadrature() {
        // slow oracle: direct midpoint integration of the oscillatory
        // integral at a few points
        let xi0 = nilpotent_regular_point(Ray::Plus);
        let h = 0.3;
        let delta = 0.25;
        let a = make_small_ball(h, &xi0, delta, BumpProfile::Plateau).unwrap();
        let rad = match a.support() {
            Support::Ball { radius, .. } => radius,
            _ => unreachable!(),
        };
        let c0 = xi0.ortho_coords();
        let n = 48;
        let d = 2.2 * rad / n as f64;
        let norm = d * d * d / (2.0 * std::f64::consts::PI).powi(3);
        for x in [
            AlgebraVector::ZERO,
            AlgebraVector::new(0.4, 0.3, -0.2),
            AlgebraVector::new(-1.0, 0.5, 0.8),
        ] {
            let xo = x.ortho_coords();
            let mut want = C64::new(0.0, 0.0);
            for i in 0..n {
                let u = c0[0] - 1.1 * rad + (i as f64 + 0.5) * d;
                for j in 0..n {
                    let v = c0[1] - 1.1 * rad + (j as f64 + 0.5) * d;
                    for k in 0..n {
                        let w = c0[2] - 1.1 * rad + (k as f64 + 0.5) * d;
                        let xi = Covector::from_ortho_coords([u, v, w]);
                        let ph = -(xo[0] * u + xo[1] * v + xo[2] * w);
                        want += a.eval(&xi) * C64::new(ph.cos(), ph.sin());
                    }
                }
            }
            want *= norm;
            let got = a.ift(&x).unwrap();
            let scale = a.ift(&AlgebraVector::ZERO).unwrap().norm();
            assert!(
                (got - want).norm() < 2e-4 * scale,
                "x {x:?} got {got} want {want}"
            );
        }
    }

    #[test]
    fn constant_symbol_is_order_zero_class() {
        let family = |_h: f64| {
            Symbol::new(
                Arc::new(|_xi: &Covector| C64::new(1.0, 0.0)),
                Support::Global {
                    effective_radius: 50.0,
                },
                SymbolMeta::default(),
            )
        };
        let report =
            estimate_class_membership(&family, 0.0, 0.0, &[0.2, 0.1, 0.05]).unwrap();
        assert!(report.pass);
        for row in &report.rows {
            let order: usize = row.alpha.iter().sum();
            if order >= 1 {
                assert!(
                    row.raw_sup.iter().all(|&v| v < 1e-6),
                    "alpha {:?} sup {:?}",
                    row.alpha,
                    row.raw_sup
                );
            }
        }
    }

    #[test]
    fn sobolev_weight_is_in_its_class() {
        // b in h^{-s} S^s_{1-kappa}: remove the h^{-s} prefactor and test
        // (m, delta) = (s, 1 - kappa)
        let (s, kappa) = (1.5, 0.7);
        let family = move |h: f64| {
            let (b, _) = make_sobolev(h, s, kappa).unwrap();
            scale(&b, h.powf(s))
        };
        let report =
            estimate_class_membership(&family, s, 1.0 - kappa, &[0.2, 0.1, 0.05]).unwrap();
        assert!(report.pass, "rows {:?}", report.rows);
    }

    #[test]
    fn small_ball_derivatives_grow_at_rate_delta() {
        let xi0 = nilpotent_regular_point(Ray::Plus);
        let delta = 0.3;
        let family =
            move |h: f64| make_small_ball(h, &xi0, delta, BumpProfile::Gauss).unwrap();
        let h_grid = [0.3, 0.15, 0.075, 0.0375];
        let report = estimate_class_membership(&family, 0.0, delta, &h_grid).unwrap();
        // fitted slope of the raw sup for |alpha| = 1..3 within [0.5, 2] of
        // -delta |alpha|
        for row in &report.rows {
            let order: usize = row.alpha.iter().sum();
            if order == 0 {
                continue;
            }
            let series: Vec<(f64, f64)> = h_grid
                .iter()
                .cloned()
                .zip(row.raw_sup.iter().cloned())
                .collect();
            let (slope, _) = crate::fitting::fit_exponent(&series).unwrap();
            let predicted = -delta * order as f64;
            assert!(
                slope / predicted > 0.5 && slope / predicted < 2.0,
                "alpha {:?} slope {slope} predicted {predicted}",
                row.alpha
            );
        }
    }

    #[test]
    fn plateau_cutoff_shape() {
        assert_eq!(plateau_cutoff(0.3, 0.5, 1.0), 1.0);
        assert_eq!(plateau_cutoff(1.1, 0.5, 1.0), 0.0);
        let v = plateau_cutoff(0.75, 0.5, 1.0);
        assert!(v > 0.0 && v < 1.0);
    }
}
