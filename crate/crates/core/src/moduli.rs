//! Convexity moduli of a finite-dimensional space, estimated as minima over
//! seeded samples refined by pattern search. Every reported value is the
//! objective at an explicit feasible witness, hence an upper bound of the
//! true infimum.

use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle::{power_mean_raw, QuadCtrl};
use crate::cvec::CVec;
use crate::error::{invalid, Error, Result};
use crate::exec::Executor;
use crate::math;
use crate::optimize::{minimize, Landscape, SearchOptions};
use crate::rng::{self, SampleRng};
use crate::spaces::Space;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModulusKind {
    /// δ_X(ε) = inf{1 − ‖x+y‖/2 : ‖x‖,‖y‖ ≤ 1, ‖x−y‖ ≥ ε}
    #[serde(rename = "delta_X")]
    DeltaX,
    /// δ_q(ε) = inf{1 − ‖x‖ : ‖x+y‖^q + ‖x−y‖^q ≤ 2, ‖y‖ ≥ ε}
    #[serde(rename = "delta_q")]
    DeltaQ,
    /// Δ_q(ε) = inf{((‖x+y‖^q + ‖x−y‖^q)/2)^{1/q} − 1 : ‖x‖ = 1, ‖y‖ ≥ ε}
    #[serde(rename = "Delta_q")]
    BigDeltaQ,
    /// H_p(ε) = inf{(mean_θ ‖x + e^{iθ}y‖^p)^{1/p} − 1 : ‖x‖ = 1, ‖y‖ = ε}
    #[serde(rename = "H_p")]
    Hp,
}

/// Search budget plus the two quadrature settings: a cheaper one used while
/// searching and the full one used to evaluate the final witness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorOptions {
    pub search: SearchOptions,
    pub quad: QuadCtrl,
    pub search_quad: QuadCtrl,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions {
            search: SearchOptions::default(),
            quad: QuadCtrl::default(),
            search_quad: QuadCtrl { tol: 1e-9, max_nodes: 1 << 12 },
        }
    }
}

impl EstimatorOptions {
    pub fn new(budget: usize, seed: u64) -> Self {
        let mut o = Self::default();
        o.search.budget = budget;
        o.search.seed = seed;
        o
    }

    pub fn with_quad(mut self, quad: QuadCtrl) -> Self {
        self.quad = quad;
        if self.search_quad.tol < quad.tol {
            self.search_quad.tol = quad.tol;
        }
        self.search_quad.max_nodes = self.search_quad.max_nodes.min(quad.max_nodes);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusEstimate {
    pub kind: ModulusKind,
    pub eps: f64,
    pub exponent: Option<f64>,
    /// Clamped at 0: every infimand is nonnegative, so a negative minimum is
    /// rounding in the objective.
    pub value: f64,
    /// Witness pair in the modulus' own variables (x, y).
    pub x: CVec,
    pub y: CVec,
    pub feasible_samples: usize,
    pub quad_warning: bool,
    /// The constraint set looked empty; `value` is the convention value 1.
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusCurve {
    pub kind: ModulusKind,
    pub exponent: Option<f64>,
    pub eps_grid: Vec<f64>,
    /// Running minimum from the right of the point estimates. Each modulus is
    /// nondecreasing in ε, so this is still an upper bound at every ε.
    pub values: Vec<f64>,
    pub budget: usize,
    pub seed: u64,
    pub points: Vec<ModulusEstimate>,
}

impl ModulusCurve {
    pub fn from_points(points: Vec<ModulusEstimate>, budget: usize, seed: u64) -> Result<Self> {
        let first = points.first().ok_or_else(|| invalid("empty eps grid"))?;
        let kind = first.kind;
        let exponent = first.exponent;
        let eps_grid: Vec<f64> = points.iter().map(|p| p.eps).collect();
        check_grid(&eps_grid)?;
        let mut values: Vec<f64> = points.iter().map(|p| p.value).collect();
        for i in (0..values.len().saturating_sub(1)).rev() {
            if values[i + 1] < values[i] {
                values[i] = values[i + 1];
            }
        }
        Ok(ModulusCurve { kind, exponent, eps_grid, values, budget, seed, points })
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("empty eps grid"));
    }
    if grid.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(invalid("eps values must be positive and finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("eps grid must be strictly increasing"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// helpers

fn unpack(x: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let h = x.len() / 2;
    let u = x[..h].chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    let v = x[h..].chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    (u, v)
}

fn scale_block(x: &mut [f64], c: f64) {
    x.iter_mut().for_each(|v| *v *= c);
}

/// Complex Gaussian vector; half of the draws have a random subset of
/// coordinates zeroed, since extremal pairs of polyhedral norms sit on
/// coordinate faces that a plain Gaussian never hits.
fn face_gaussian(g: &mut SampleRng, n: usize) -> CVec {
    let mut v = rng::complex_gaussian(g, n);
    if n > 1 && rng::uniform(g) < 0.5 {
        let keep = (rng::uniform(g) * n as f64) as usize % n;
        for (k, c) in v.as_mut_slice().iter_mut().enumerate() {
            if k != keep && rng::uniform(g) < 0.5 {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }
    v
}

fn gaussian_block(g: &mut SampleRng, n: usize) -> Vec<f64> {
    face_gaussian(g, n).to_interleaved()
}

fn lin(u: &[Complex64], s: f64, v: &[Complex64], out: &mut [Complex64]) {
    for ((o, a), b) in out.iter_mut().zip(u).zip(v) {
        *o = a + b * s;
    }
}

fn lin_t(t: f64, u: &[Complex64], s: f64, v: &[Complex64], out: &mut [Complex64]) {
    for ((o, a), b) in out.iter_mut().zip(u).zip(v) {
        *o = a * t + b * s;
    }
}

/// Largest `t ∈ [0, hi]` with `feasible(t)`, given `feasible(0)` and
/// `!feasible(hi)`, by bisection.
fn bisect_feasible(mut feasible: impl FnMut(f64) -> Result<bool>, hi: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

fn powq(n: f64, q: f64) -> f64 {
    if q == 1.0 {
        n
    } else if q == 2.0 {
        n * n
    } else {
        math::powf(n, q)
    }
}

fn rootq(m: f64, q: f64) -> f64 {
    if q == 1.0 {
        m
    } else if q == 2.0 {
        math::sqrt(m)
    } else {
        math::powf(m, 1.0 / q)
    }
}

// ---------------------------------------------------------------------------
// δ_X in midpoint/half-difference coordinates m = (x+y)/2, d = (x−y)/2.

struct MidpointLand<'a> {
    space: &'a Space,
    eps: f64,
}

impl MidpointLand<'_> {
    fn n(&self) -> usize {
        self.space.dim()
    }
}

impl Landscape for MidpointLand<'_> {
    fn dim(&self) -> usize {
        4 * self.n()
    }

    fn sample(&self, g: &mut SampleRng) -> Vec<f64> {
        if rng::uniform(g) < 0.5 {
            // Endpoints on the unit sphere; projection fixes up the rest.
            let mut x = face_gaussian(g, self.n());
            let mut y = face_gaussian(g, self.n());
            let xn = self.space.norm_of(x.as_slice()).unwrap_or(1.0).max(1e-300);
            let yn = self.space.norm_of(y.as_slice()).unwrap_or(1.0).max(1e-300);
            x = x.scaled_real(1.0 / xn);
            y = y.scaled_real(1.0 / yn);
            let mut v = x.add(&y).scaled_real(0.5).to_interleaved();
            v.extend(x.sub(&y).scaled_real(0.5).to_interleaved());
            return v;
        }
        let mut m = gaussian_block(g, self.n());
        let mut d = face_gaussian(g, self.n());
        let dn = self.space.norm_of(d.as_slice()).unwrap_or(1.0).max(1e-300);
        let u = rng::uniform(g);
        let radius = 0.5 * self.eps + (1.0 - 0.5 * self.eps) * u * u;
        d = d.scaled_real(radius / dn);
        m.extend(d.to_interleaved());
        m
    }

    fn project(&self, x: &mut [f64]) -> Result<bool> {
        let h = x.len() / 2;
        let (m, d) = unpack(x);
        let dn = self.space.norm_of(&d)?;
        if dn == 0.0 {
            return Ok(false);
        }
        let target = dn.clamp(0.5 * self.eps, 1.0);
        scale_block(&mut x[h..], target / dn);
        let (_, d) = unpack(x);
        let mn = self.space.norm_of(&m)?;
        if mn == 0.0 {
            return Ok(true);
        }
        let mut buf = alloc::vec![Complex64::new(0.0, 0.0); self.n()];
        let mut fits = |t: f64| -> Result<bool> {
            lin_t(t, &m, 1.0, &d, &mut buf);
            if self.space.norm_of(&buf)? > 1.0 {
                return Ok(false);
            }
            lin_t(t, &m, -1.0, &d, &mut buf);
            Ok(self.space.norm_of(&buf)? <= 1.0)
        };
        let hi = (1.0 + target) / mn * (1.0 + 1e-9) + 1e-12;
        let t = bisect_feasible(&mut fits, hi)?;
        scale_block(&mut x[..h], t);
        Ok(true)
    }

    fn objective(&self, x: &[f64]) -> Result<(f64, bool)> {
        let (m, _) = unpack(x);
        Ok((1.0 - self.space.norm_of(&m)?, false))
    }
}

pub fn modulus_delta(space: &Space, eps: f64, opts: &EstimatorOptions) -> Result<ModulusEstimate> {
    if !(eps > 0.0 && eps <= 2.0) {
        return Err(invalid("delta_X needs 0 < eps <= 2"));
    }
    if space.is_quasi() {
        return Err(invalid("delta_X is defined for norms (p >= 1)"));
    }
    let land = MidpointLand { space, eps };
    let out = minimize(&land, &opts.search)?.ok_or(Error::Infeasible)?;
    let (m, d) = unpack(&out.argmin);
    let (m, d) = (CVec::new(m), CVec::new(d));
    let value = out.value.max(0.0);
    Ok(ModulusEstimate {
        kind: ModulusKind::DeltaX,
        eps,
        exponent: None,
        value,
        x: m.add(&d),
        y: m.sub(&d),
        feasible_samples: out.feasible,
        quad_warning: false,
        empty: false,
    })
}

// ---------------------------------------------------------------------------
// δ_q

struct QBallLand<'a> {
    space: &'a Space,
    eps: f64,
    q: f64,
}

impl QBallLand<'_> {
    fn constraint(&self, x: &[Complex64], y: &[Complex64], t: f64, buf: &mut [Complex64]) -> Result<f64> {
        lin_t(t, x, 1.0, y, buf);
        let a = self.space.norm_of(buf)?;
        lin_t(t, x, -1.0, y, buf);
        let b = self.space.norm_of(buf)?;
        Ok(powq(a, self.q) + powq(b, self.q))
    }
}

impl Landscape for QBallLand<'_> {
    fn dim(&self) -> usize {
        4 * self.space.dim()
    }

    fn sample(&self, g: &mut SampleRng) -> Vec<f64> {
        let n = self.space.dim();
        let mut x = gaussian_block(g, n);
        let y = face_gaussian(g, n);
        let yn = self.space.norm_of(y.as_slice()).unwrap_or(1.0).max(1e-300);
        let u = rng::uniform(g);
        let radius = self.eps + (self.eps.max(1.0) - self.eps) * u * u;
        x.extend(y.scaled_real(radius / yn).to_interleaved());
        x
    }

    fn project(&self, v: &mut [f64]) -> Result<bool> {
        let h = v.len() / 2;
        let (_, y) = unpack(v);
        let yn = self.space.norm_of(&y)?;
        if yn == 0.0 {
            return Ok(false);
        }
        if yn < self.eps {
            scale_block(&mut v[h..], self.eps / yn);
        }
        let (x, y) = unpack(v);
        let mut buf = alloc::vec![Complex64::new(0.0, 0.0); self.space.dim()];
        if self.constraint(&x, &y, 0.0, &mut buf)? > 2.0 {
            return Ok(false);
        }
        let xn = self.space.norm_of(&x)?;
        if xn == 0.0 {
            return Ok(true);
        }
        let yn = self.space.norm_of(&y)?;
        let mut hi = (1.0 + 2.0 * yn) / xn;
        let mut grow = 0;
        while self.constraint(&x, &y, hi, &mut buf)? <= 2.0 && grow < 60 {
            hi *= 2.0;
            grow += 1;
        }
        let t = bisect_feasible(|t| Ok(self.constraint(&x, &y, t, &mut buf)? <= 2.0), hi)?;
        scale_block(&mut v[..h], t);
        Ok(true)
    }

    fn objective(&self, v: &[f64]) -> Result<(f64, bool)> {
        let (x, _) = unpack(v);
        Ok((1.0 - self.space.norm_of(&x)?, false))
    }
}

pub fn modulus_delta_q(space: &Space, eps: f64, q: f64, opts: &EstimatorOptions) -> Result<ModulusEstimate> {
    if !(eps > 0.0) || !eps.is_finite() || !(q > 0.0) || !q.is_finite() {
        return Err(invalid("delta_q needs eps > 0 and q > 0"));
    }
    let land = QBallLand { space, eps, q };
    let n = space.dim();
    match minimize(&land, &opts.search)? {
        Some(out) => {
            let (x, y) = unpack(&out.argmin);
            let value = out.value.max(0.0);
            Ok(ModulusEstimate {
                kind: ModulusKind::DeltaQ,
                eps,
                exponent: Some(q),
                value,
                x: CVec::new(x),
                y: CVec::new(y),
                feasible_samples: out.feasible,
                quad_warning: false,
                empty: false,
            })
        }
        None => Ok(ModulusEstimate {
            kind: ModulusKind::DeltaQ,
            eps,
            exponent: Some(q),
            value: 1.0,
            x: CVec::zeros(n),
            y: CVec::zeros(n),
            feasible_samples: 0,
            quad_warning: false,
            empty: true,
        }),
    }
}

// ---------------------------------------------------------------------------
// Δ_q

struct QMeanLand<'a> {
    space: &'a Space,
    eps: f64,
    q: f64,
}

/// `((‖x+y‖^q + ‖x−y‖^q)/2)^{1/q} − 1`.
fn q_midpoint_excess(space: &Space, x: &[Complex64], y: &[Complex64], q: f64) -> Result<f64> {
    let mut buf = alloc::vec![Complex64::new(0.0, 0.0); x.len()];
    lin(x, 1.0, y, &mut buf);
    let a = space.norm_of(&buf)?;
    lin(x, -1.0, y, &mut buf);
    let b = space.norm_of(&buf)?;
    Ok(rootq(0.5 * (powq(a, q) + powq(b, q)), q) - 1.0)
}

impl Landscape for QMeanLand<'_> {
    fn dim(&self) -> usize {
        4 * self.space.dim()
    }

    fn sample(&self, g: &mut SampleRng) -> Vec<f64> {
        let n = self.space.dim();
        let mut x = gaussian_block(g, n);
        let y = face_gaussian(g, n);
        let yn = self.space.norm_of(y.as_slice()).unwrap_or(1.0).max(1e-300);
        let radius = self.eps * (1.0 + rng::uniform(g));
        x.extend(y.scaled_real(radius / yn).to_interleaved());
        x
    }

    fn project(&self, v: &mut [f64]) -> Result<bool> {
        let h = v.len() / 2;
        let (x, y) = unpack(v);
        let xn = self.space.norm_of(&x)?;
        let yn = self.space.norm_of(&y)?;
        if xn == 0.0 || yn == 0.0 {
            return Ok(false);
        }
        scale_block(&mut v[..h], 1.0 / xn);
        if yn < self.eps {
            scale_block(&mut v[h..], self.eps / yn);
        }
        Ok(true)
    }

    fn objective(&self, v: &[f64]) -> Result<(f64, bool)> {
        let (x, y) = unpack(v);
        Ok((q_midpoint_excess(self.space, &x, &y, self.q)?, false))
    }
}

pub fn modulus_big_delta_q(space: &Space, eps: f64, q: f64, opts: &EstimatorOptions) -> Result<ModulusEstimate> {
    if !(eps > 0.0) || !eps.is_finite() || !(q > 0.0) || !q.is_finite() {
        return Err(invalid("Delta_q needs eps > 0 and q > 0"));
    }
    let land = QMeanLand { space, eps, q };
    let out = minimize(&land, &opts.search)?.ok_or(Error::Infeasible)?;
    let (x, y) = unpack(&out.argmin);
    let value = out.value.max(0.0);
    Ok(ModulusEstimate {
        kind: ModulusKind::BigDeltaQ,
        eps,
        exponent: Some(q),
        value,
        x: CVec::new(x),
        y: CVec::new(y),
        feasible_samples: out.feasible,
        quad_warning: false,
        empty: false,
    })
}

// ---------------------------------------------------------------------------
// H_p

struct CircleLand<'a> {
    space: &'a Space,
    eps: f64,
    p: f64,
    ctrl: QuadCtrl,
}

impl Landscape for CircleLand<'_> {
    fn dim(&self) -> usize {
        4 * self.space.dim()
    }

    fn sample(&self, g: &mut SampleRng) -> Vec<f64> {
        let n = self.space.dim();
        let mut x = gaussian_block(g, n);
        x.extend(gaussian_block(g, n));
        x
    }

    fn project(&self, v: &mut [f64]) -> Result<bool> {
        let h = v.len() / 2;
        let (x, y) = unpack(v);
        let xn = self.space.norm_of(&x)?;
        let yn = self.space.norm_of(&y)?;
        if xn == 0.0 || yn == 0.0 {
            return Ok(false);
        }
        scale_block(&mut v[..h], 1.0 / xn);
        scale_block(&mut v[h..], self.eps / yn);
        Ok(true)
    }

    fn objective(&self, v: &[f64]) -> Result<(f64, bool)> {
        let (x, y) = unpack(v);
        let mut buf = alloc::vec![Complex64::new(0.0, 0.0); x.len()];
        let m = power_mean_raw(self.space, &x, &y, self.p, &self.ctrl, &mut buf)?;
        Ok((m.value - 1.0, m.warning()))
    }
}

pub fn modulus_h_p(space: &Space, eps: f64, p: f64, opts: &EstimatorOptions) -> Result<ModulusEstimate> {
    if !(eps > 0.0) || !eps.is_finite() || !(p > 0.0) || !p.is_finite() {
        return Err(invalid("H_p needs eps > 0 and p > 0"));
    }
    opts.quad.validate()?;
    opts.search_quad.validate()?;
    let land = CircleLand { space, eps, p, ctrl: opts.search_quad };
    let out = minimize(&land, &opts.search)?.ok_or(Error::Infeasible)?;
    let full = CircleLand { ctrl: opts.quad, ..land };
    let (value, warned) = full.objective(&out.argmin)?;
    let (x, y) = unpack(&out.argmin);
    Ok(ModulusEstimate {
        kind: ModulusKind::Hp,
        eps,
        exponent: Some(p),
        value: value.max(0.0),
        x: CVec::new(x),
        y: CVec::new(y),
        feasible_samples: out.feasible,
        quad_warning: warned,
        empty: false,
    })
}

/// Dispatch on the modulus kind; `exponent` is q for δ_q/Δ_q and p for H_p.
pub fn estimate(
    space: &Space,
    kind: ModulusKind,
    eps: f64,
    exponent: Option<f64>,
    opts: &EstimatorOptions,
) -> Result<ModulusEstimate> {
    let exp = || exponent.ok_or(Error::MissingParameter("exponent"));
    match kind {
        ModulusKind::DeltaX => modulus_delta(space, eps, opts),
        ModulusKind::DeltaQ => modulus_delta_q(space, eps, exp()?, opts),
        ModulusKind::BigDeltaQ => modulus_big_delta_q(space, eps, exp()?, opts),
        ModulusKind::Hp => modulus_h_p(space, eps, exp()?, opts),
    }
}

/// Same as [`modulus_curve`], one task per grid point.
pub fn modulus_curve_in<E: Executor>(
    exec: &E,
    space: &Space,
    kind: ModulusKind,
    exponent: Option<f64>,
    eps_grid: &[f64],
    opts: &EstimatorOptions,
) -> Result<ModulusCurve> {
    check_grid(eps_grid)?;
    let points = exec.map(eps_grid.len(), |i| estimate(space, kind, eps_grid[i as usize], exponent, opts))?;
    ModulusCurve::from_points(points, opts.search.budget, opts.search.seed)
}

/// Objective of `kind` at a pair (x, y), without the constraint handling:
/// `1 − ‖x+y‖/2`, `1 − ‖x‖`, the q-midpoint excess, or the p-circle excess.
pub fn modulus_objective(
    space: &Space,
    kind: ModulusKind,
    exponent: Option<f64>,
    x: &CVec,
    y: &CVec,
    quad: &QuadCtrl,
) -> Result<f64> {
    x.check_dim(space.dim())?;
    y.check_dim(space.dim())?;
    let exp = || exponent.ok_or(Error::MissingParameter("exponent"));
    match kind {
        ModulusKind::DeltaX => Ok(1.0 - 0.5 * space.norm(&x.add(y))?),
        ModulusKind::DeltaQ => Ok(1.0 - space.norm(x)?),
        ModulusKind::BigDeltaQ => q_midpoint_excess(space, x.as_slice(), y.as_slice(), exp()?),
        ModulusKind::Hp => {
            let mut buf = CVec::zeros(space.dim()).into_inner();
            Ok(power_mean_raw(space, x.as_slice(), y.as_slice(), exp()?, quad, &mut buf)?.value - 1.0)
        }
    }
}

pub fn modulus_curve(
    space: &Space,
    kind: ModulusKind,
    exponent: Option<f64>,
    eps_grid: &[f64],
    opts: &EstimatorOptions,
) -> Result<ModulusCurve> {
    check_grid(eps_grid)?;
    let points = eps_grid.iter().map(|&e| estimate(space, kind, e, exponent, opts)).collect::<Result<Vec<_>>>()?;
    ModulusCurve::from_points(points, opts.search.budget, opts.search.seed)
}

// ---------------------------------------------------------------------------
// I_{r,q}

/// Smallest ‖y‖ sampled in the chart ‖x‖ = 1.
pub const PL_MIN_RADIUS: f64 = 1e-2;
/// Split between the two charts: ‖y‖ ≤ 3 with ‖x‖ = 1, and ‖x‖ ≤ 1/3 with ‖y‖ = 1.
pub const PL_SPLIT: f64 = 3.0;

/// `(mean_q(a, b)^r − ‖a‖^r) / ‖b‖^r`, the ratio whose infimum is I_{r,q}.
/// Invariant under joint scaling of (a, b).
pub fn pl_objective(space: &Space, a: &CVec, b: &CVec, r: f64, q: f64, ctrl: &QuadCtrl) -> Result<f64> {
    a.check_dim(space.dim())?;
    b.check_dim(space.dim())?;
    let mut buf = CVec::zeros(space.dim()).into_inner();
    Ok(pl_ratio(space, a.as_slice(), b.as_slice(), r, q, ctrl, &mut buf)?.0)
}

fn pl_ratio(
    space: &Space,
    a: &[Complex64],
    b: &[Complex64],
    r: f64,
    q: f64,
    ctrl: &QuadCtrl,
    buf: &mut Vec<Complex64>,
) -> Result<(f64, bool)> {
    let bn = space.norm_of(b)?;
    if bn == 0.0 {
        return Err(invalid("pl objective needs b != 0"));
    }
    let an = space.norm_of(a)?;
    let m = power_mean_raw(space, a, b, q, ctrl, buf)?;
    let num = if an == 0.0 {
        math::powf(m.value, r)
    } else {
        // mean^r − ‖a‖^r = ‖a‖^r · expm1(r · ln(mean/‖a‖))
        math::powf(an, r) * math::expm1(r * math::ln(m.value / an))
    };
    Ok((num / math::powf(bn, r), m.warning()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlChart {
    /// ‖a‖ = 1, ‖b‖ ∈ [PL_MIN_RADIUS, 3]
    UnitBase,
    /// ‖b‖ = 1, ‖a‖ ∈ [0, 1/3]
    UnitDirection,
}

struct PlLand<'a> {
    space: &'a Space,
    r: f64,
    q: f64,
    chart: PlChart,
    ctrl: QuadCtrl,
}

impl Landscape for PlLand<'_> {
    fn dim(&self) -> usize {
        4 * self.space.dim()
    }

    fn sample(&self, g: &mut SampleRng) -> Vec<f64> {
        let n = self.space.dim();
        let mut a = face_gaussian(g, n);
        let mut b = face_gaussian(g, n);
        let u = rng::uniform(g);
        let an = self.space.norm_of(a.as_slice()).unwrap_or(1.0).max(1e-300);
        let bn = self.space.norm_of(b.as_slice()).unwrap_or(1.0).max(1e-300);
        match self.chart {
            PlChart::UnitBase => {
                let s = PL_MIN_RADIUS * math::powf(PL_SPLIT / PL_MIN_RADIUS, u);
                a = a.scaled_real(1.0 / an);
                b = b.scaled_real(s / bn);
            }
            PlChart::UnitDirection => {
                a = a.scaled_real(u / PL_SPLIT / an);
                b = b.scaled_real(1.0 / bn);
            }
        }
        let mut x = a.to_interleaved();
        x.extend(b.to_interleaved());
        x
    }

    fn project(&self, v: &mut [f64]) -> Result<bool> {
        let h = v.len() / 2;
        let (a, b) = unpack(v);
        let an = self.space.norm_of(&a)?;
        let bn = self.space.norm_of(&b)?;
        match self.chart {
            PlChart::UnitBase => {
                if an == 0.0 || bn == 0.0 {
                    return Ok(false);
                }
                scale_block(&mut v[..h], 1.0 / an);
                let s = bn.clamp(PL_MIN_RADIUS, PL_SPLIT);
                scale_block(&mut v[h..], s / bn);
            }
            PlChart::UnitDirection => {
                if bn == 0.0 {
                    return Ok(false);
                }
                scale_block(&mut v[h..], 1.0 / bn);
                if an > 1.0 / PL_SPLIT {
                    scale_block(&mut v[..h], 1.0 / (PL_SPLIT * an));
                }
            }
        }
        Ok(true)
    }

    fn objective(&self, v: &[f64]) -> Result<(f64, bool)> {
        let (a, b) = unpack(v);
        let mut buf = alloc::vec![Complex64::new(0.0, 0.0); a.len()];
        pl_ratio(self.space, &a, &b, self.r, self.q, &self.ctrl, &mut buf)
    }
}

/// Estimate of the best constant λ in
/// `mean_q(a, b) ≥ (‖a‖^r + λ‖b‖^r)^{1/r}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PLConstant {
    pub r: f64,
    pub q: f64,
    pub lambda_estimate: f64,
    pub a: CVec,
    pub b: CVec,
    pub chart: Option<PlChart>,
    /// `(2^r − 1)/3^r`, the analytic lower bound of the ratio for ‖b‖ > 3‖a‖.
    pub tail_bound: f64,
    pub budget: usize,
    pub seed: u64,
    pub quad_warning: bool,
}

pub fn tail_bound(r: f64) -> f64 {
    (math::powf(2.0, r) - 1.0) / math::powf(3.0, r)
}

pub fn estimate_i(space: &Space, r: f64, q: f64, opts: &EstimatorOptions) -> Result<PLConstant> {
    if !(r >= 2.0) || !r.is_finite() {
        return Err(invalid("estimate_I needs r >= 2"));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(invalid("estimate_I needs q > 0"));
    }
    opts.quad.validate()?;
    opts.search_quad.validate()?;
    let n = space.dim();
    // a = 0 gives ratio exactly 1.
    let mut best = PLConstant {
        r,
        q,
        lambda_estimate: 1.0,
        a: CVec::zeros(n),
        b: space.random_unit(1, opts.search.seed)?.remove(0),
        chart: None,
        tail_bound: tail_bound(r),
        budget: opts.search.budget,
        seed: opts.search.seed,
        quad_warning: false,
    };
    for (k, chart) in [PlChart::UnitBase, PlChart::UnitDirection].into_iter().enumerate() {
        let mut search = opts.search;
        search.seed = rng::sub_seed(opts.search.seed, k as u64);
        let land = PlLand { space, r, q, chart, ctrl: opts.search_quad };
        if let Some(out) = minimize(&land, &search)? {
            let full = PlLand { ctrl: opts.quad, ..land };
            let (value, warned) = full.objective(&out.argmin)?;
            if value < best.lambda_estimate {
                let (a, b) = unpack(&out.argmin);
                best.lambda_estimate = value;
                best.a = CVec::new(a);
                best.b = CVec::new(b);
                best.chart = Some(chart);
                best.quad_warning = warned;
            }
        }
    }
    Ok(best)
}

/// Values at or below this are treated as a vanishing modulus.
pub const ZERO_FLOOR: f64 = 1e-12;

/// Smallest `C ≥ 1` with `value(ε) ≥ (ε/C)^r` on every grid point.
pub fn fit_power_constant(curve: &ModulusCurve, r: f64) -> Result<f64> {
    fit_power_constant_on(&curve.eps_grid, &curve.values, r)
}

pub fn fit_power_constant_on(eps: &[f64], values: &[f64], r: f64) -> Result<f64> {
    if eps.len() != values.len() || eps.is_empty() {
        return Err(invalid("eps grid and values must have equal nonzero length"));
    }
    if !(r > 0.0) {
        return Err(invalid("power must be positive"));
    }
    let mut c: f64 = 1.0;
    for (&e, &v) in eps.iter().zip(values) {
        if !(v > ZERO_FLOOR) {
            return Err(Error::NotUniformlyConvex { eps: e });
        }
        c = c.max(e / math::powf(v, 1.0 / r));
    }
    Ok(c)
}
