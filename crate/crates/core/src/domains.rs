//! Domains `{ρ < 0}` in ℂⁿ: disc radii, boundary sampling, Levi forms of the
//! defining function and the −log|ρ| exhaustion criterion.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cvec::{combine_into, CVec};
use crate::error::{invalid, Error, Result};
use crate::exec::{Executor, Serial};
use crate::field::{Field, Smoothness};
use crate::math;
use crate::pshlab::{self, BoxRegion, HermitianMatrix, Region};
use crate::rng;
use crate::spaces::{Family, Space, SpaceSpec};

pub type RhoFn = Arc<dyn Fn(&[Complex64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoKind {
    /// `‖z‖^p − R^p`
    PPower,
    /// `‖z‖ − R`
    NormMinusOne,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smooth {
    C2,
    NonSmooth,
}

/// JSON form of a ball domain: `{"ball_of": <space>, "rho": "p_power"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallConfig {
    pub ball_of: SpaceSpec,
    #[serde(default)]
    pub rho: Option<RhoKind>,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default)]
    pub name: Option<String>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone)]
pub struct DomainSpec {
    pub name: String,
    dim: usize,
    rho: RhoFn,
    pub bounds: BoxRegion,
    pub smooth: Smooth,
    /// Interior witness, `ρ(center) < 0`.
    pub center: CVec,
    pub rho_kind: RhoKind,
}

impl fmt::Debug for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DomainSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("smooth", &self.smooth)
            .field("rho", &self.rho_kind)
            .finish()
    }
}

fn even_integer(p: f64) -> bool {
    p.is_finite() && p >= 2.0 && p == math::floor(p) && (p as u64).is_multiple_of(2)
}

impl DomainSpec {
    pub fn new(name: &str, dim: usize, rho: RhoFn, bounds: BoxRegion, center: CVec, smooth: Smooth) -> Result<Self> {
        if bounds.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: bounds.dim() });
        }
        center.check_dim(dim)?;
        let d = DomainSpec { name: String::from(name), dim, rho, bounds, smooth, center, rho_kind: RhoKind::Custom };
        let r = d.rho(d.center.as_slice());
        if !(r < 0.0) || !d.bounds.contains(d.center.as_slice()) {
            return Err(Error::NotInterior { rho: r });
        }
        Ok(d)
    }

    /// Open ball of radius `radius` in `space`. The default defining function
    /// is `‖z‖^p − R^p` for even integer p (smooth everywhere) and
    /// `‖z‖ − R` otherwise.
    pub fn ball(space: &Space, radius: f64, rho: Option<RhoKind>) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid("ball radius must be positive"));
        }
        if space.is_quasi() {
            return Err(invalid("ball domains need a norm (p >= 1)"));
        }
        let spec = space.spec().clone();
        let p = spec.p;
        let kind = rho.unwrap_or(if even_integer(p) && spec.family != Family::Custom {
            RhoKind::PPower
        } else {
            RhoKind::NormMinusOne
        });
        let n = space.dim();
        let s = space.clone();
        let rho_fn: RhoFn = match kind {
            RhoKind::PPower => {
                if !p.is_finite() || spec.family == Family::Custom {
                    return Err(invalid("p_power needs a finite exponent"));
                }
                let rp = math::powf(radius, p);
                match spec.family {
                    Family::Lp | Family::Hilbert | Family::WeightedLp => {
                        let w = spec.weights.clone();
                        Arc::new(move |z: &[Complex64]| {
                            let sum: f64 = z
                                .iter()
                                .enumerate()
                                .map(|(j, x)| {
                                    let t = if p == 2.0 { x.norm_sqr() } else { math::powf(x.norm(), p) };
                                    w.as_ref().map_or(1.0, |w| w[j]) * t
                                })
                                .sum();
                            sum - rp
                        })
                    }
                    _ => Arc::new(move |z: &[Complex64]| match s.norm_of(z) {
                        Ok(v) => math::powf(v, p) - rp,
                        Err(_) => f64::NAN,
                    }),
                }
            }
            RhoKind::NormMinusOne => Arc::new(move |z: &[Complex64]| match s.norm_of(z) {
                Ok(v) => v - radius,
                Err(_) => f64::NAN,
            }),
            RhoKind::Custom => return Err(invalid("custom defining functions need DomainSpec::new")),
        };
        let smooth = match (kind, spec.family) {
            (RhoKind::PPower, Family::Lp | Family::Hilbert | Family::WeightedLp) => Smooth::C2,
            (RhoKind::NormMinusOne, Family::Hilbert) => Smooth::C2,
            (RhoKind::NormMinusOne, Family::Lp) if p == 2.0 => Smooth::C2,
            _ => Smooth::NonSmooth,
        };
        // Every coordinate of a unit vector is bounded by the norm for the
        // built-in families; weights rescale that bound.
        let half: Vec<f64> = (0..n)
            .map(|j| {
                let w = spec.weights.as_ref().map_or(1.0, |w| w[j]);
                let c = if p.is_infinite() { 1.0 / w } else { math::powf(w, -1.0 / p) };
                1.05 * radius * if spec.family == Family::Custom { custom_reach(space, j) } else { c }
            })
            .collect();
        let lo: Vec<f64> = half.iter().flat_map(|h| [-h, -h]).collect();
        let hi: Vec<f64> = half.iter().flat_map(|h| [*h, *h]).collect();
        let name = alloc::format!("ball({}, R={})", spec, radius);
        Ok(DomainSpec {
            name,
            dim: n,
            rho: rho_fn,
            bounds: BoxRegion::new(lo, hi)?,
            smooth,
            center: CVec::zeros(n),
            rho_kind: kind,
        })
    }

    pub fn from_config(cfg: &BallConfig) -> Result<Self> {
        let space = Space::new(cfg.ball_of.clone())?;
        let mut d = Self::ball(&space, cfg.radius, cfg.rho)?;
        if let Some(n) = &cfg.name {
            d.name = n.clone();
        }
        Ok(d)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rho(&self, z: &[Complex64]) -> f64 {
        (self.rho)(z)
    }

    /// The defining function as a field.
    pub fn rho_field(&self) -> RhoField<'_> {
        RhoField(self)
    }

    fn rho_checked(&self, z: &[Complex64]) -> Result<f64> {
        let v = self.rho(z);
        if v.is_nan() {
            Err(Error::NonFinite)
        } else {
            Ok(v)
        }
    }
}

/// Generous coordinate bound for a custom norm's unit ball: the largest
/// |z_j| over the coordinate axis and 64 seeded unit vectors, doubled.
fn custom_reach(space: &Space, j: usize) -> f64 {
    let e = CVec::basis(space.dim(), j);
    let mut reach = space.norm(&e).map(|v| 1.0 / v).unwrap_or(1.0);
    if let Ok(us) = space.random_unit(64, 0x6f78) {
        for u in us {
            reach = reach.max(u[j].norm());
        }
    }
    2.0 * reach
}

pub struct RhoField<'a>(&'a DomainSpec);

impl Field for RhoField<'_> {
    fn dim(&self) -> usize {
        self.0.dim
    }
    fn eval(&self, z: &[Complex64]) -> f64 {
        self.0.rho(z)
    }
    fn smoothness(&self) -> Smoothness {
        match self.0.smooth {
            Smooth::C2 => Smoothness::C2,
            Smooth::NonSmooth => Smoothness::Lipschitz,
        }
    }
}

/// `−log|ρ|` on the domain; NaN outside, which circle means report as an
/// evaluation error.
pub struct NegLogRho<'a>(pub &'a DomainSpec);

impl Field for NegLogRho<'_> {
    fn dim(&self) -> usize {
        self.0.dim
    }
    fn eval(&self, z: &[Complex64]) -> f64 {
        let r = self.0.rho(z);
        if r < 0.0 {
            -math::ln(-r)
        } else {
            f64::NAN
        }
    }
    fn smoothness(&self) -> Smoothness {
        RhoField(self.0).smoothness()
    }
}

impl Region for DomainSpec {
    fn dim(&self) -> usize {
        self.dim
    }
    fn bounds(&self) -> (&[f64], &[f64]) {
        self.bounds.bounds()
    }
    fn contains(&self, z: &[Complex64]) -> bool {
        self.bounds.contains(z) && self.rho(z) < 0.0
    }
    fn disc_radius(&self, a: &[Complex64], b: &[Complex64]) -> Option<Result<f64>> {
        Some(disc_radius_raw(self, a, b))
    }
}

// ---------------------------------------------------------------------------
// disc radius

const DISC_NODES: usize = 64;
const DISC_MAX_NODES: usize = 4096;
const DISC_CLOSE: f64 = 1e-6;

/// max of ρ over the circle `a + r·e^{iθ}v`; nodes double (nested) while the
/// maximum is within `DISC_CLOSE` of zero.
fn circle_max(d: &DomainSpec, a: &[Complex64], v: &[Complex64], r: f64, z: &mut [Complex64]) -> Result<f64> {
    let mut n = DISC_NODES;
    let mut worst = f64::NEG_INFINITY;
    let eval = |k: usize, n: usize, z: &mut [Complex64]| -> Result<f64> {
        let (s, c) = math::sin_cos(math::TAU * k as f64 / n as f64);
        combine_into(a, Complex64::new(c, s) * r, v, z);
        d.rho_checked(z)
    };
    for k in 0..n {
        worst = worst.max(eval(k, n, z)?);
    }
    while worst < 0.0 && worst > -DISC_CLOSE && n < DISC_MAX_NODES {
        n *= 2;
        for k in (1..n).step_by(2) {
            worst = worst.max(eval(k, n, z)?);
        }
    }
    Ok(worst)
}

fn disc_radius_raw(d: &DomainSpec, a: &[Complex64], v: &[Complex64]) -> Result<f64> {
    let r0 = d.rho_checked(a)?;
    if !(r0 < 0.0) {
        return Err(Error::NotInterior { rho: r0 });
    }
    // Once some coordinate of the disc is wider than the box, the disc
    // has left the domain.
    let (lo, hi) = d.bounds.bounds();
    let mut upper = f64::INFINITY;
    for (k, w) in v.iter().enumerate() {
        let s = w.norm();
        if s > 0.0 {
            let width = (hi[2 * k] - lo[2 * k]).max(hi[2 * k + 1] - lo[2 * k + 1]);
            upper = upper.min(width / s);
        }
    }
    if !upper.is_finite() {
        return Err(invalid("disc direction must be nonzero"));
    }
    let mut z = alloc::vec![Complex64::new(0.0, 0.0); a.len()];
    let (mut lo_r, mut hi_r) = (0.0, upper);
    while hi_r - lo_r > 1e-10 * hi_r {
        let mid = 0.5 * (lo_r + hi_r);
        if circle_max(d, a, v, mid, &mut z)? < 0.0 {
            lo_r = mid;
        } else {
            hi_r = mid;
        }
    }
    Ok(lo_r)
}

/// `sup{r : a + r𝔻̄·v ⊂ U}`, estimated from the circle `|ζ| = r` (enough for
/// the pseudoconvex domains of interest, where ρ obeys the maximum
/// principle on discs). Node sampling can overestimate slightly.
pub fn disc_radius(d: &DomainSpec, a: &CVec, v: &CVec) -> Result<f64> {
    a.check_dim(d.dim)?;
    v.check_dim(d.dim)?;
    disc_radius_raw(d, a.as_slice(), v.as_slice())
}

// ---------------------------------------------------------------------------
// boundary

/// Boundary point on the ray from the interior witness along `u`.
pub fn ray_exit(d: &DomainSpec, u: &[Complex64]) -> Result<CVec> {
    let c = d.center.as_slice();
    let (lo, hi) = d.bounds.bounds();
    let diag = math::sqrt(lo.iter().zip(hi).map(|(l, h)| (h - l) * (h - l)).sum());
    let un = math::sqrt(u.iter().map(|w| w.norm_sqr()).sum());
    if un == 0.0 {
        return Err(invalid("ray direction must be nonzero"));
    }
    let mut z = alloc::vec![Complex64::new(0.0, 0.0); d.dim];
    let at = |t: f64, z: &mut [Complex64]| -> Result<f64> {
        combine_into(c, Complex64::new(t, 0.0), u, z);
        d.rho_checked(z)
    };
    let mut t_hi = diag / un;
    if at(t_hi, &mut z)? < 0.0 {
        return Err(Error::RayNeverExits);
    }
    let mut t_lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (t_lo + t_hi);
        let v = at(mid, &mut z)?;
        if math::abs(v) <= 1e-10 {
            return Ok(CVec::new(z));
        }
        if mid <= t_lo || mid >= t_hi {
            break;
        }
        if v < 0.0 {
            t_lo = mid;
        } else {
            t_hi = mid;
        }
    }
    at(t_lo, &mut z)?;
    Ok(CVec::new(z))
}

/// Boundary point `index` of a seeded sample: uniform Euclidean direction
/// from the interior witness, root of ρ along the ray by bisection.
pub fn boundary_point(d: &DomainSpec, seed: u64, index: u64) -> Result<CVec> {
    let u = rng::euclidean_unit(&mut rng::task_rng(seed, index), d.dim);
    ray_exit(d, u.as_slice())
}

pub fn boundary_sample(d: &DomainSpec, count: usize, seed: u64) -> Result<Vec<CVec>> {
    (0..count as u64).map(|i| boundary_point(d, seed, i)).collect()
}

// ---------------------------------------------------------------------------
// Levi analysis

pub const BOUNDARY_TOL: f64 = 1e-8;
pub const DEGENERATE_GRADIENT: f64 = 1e-7;
pub const NON_SMOOTH_REL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeviReport {
    pub point: CVec,
    pub rho: f64,
    /// `D′ρ(a)(e_j)`, so that `D′ρ(a)b = Σ gradient_j b_j`.
    pub gradient: CVec,
    pub normal: CVec,
    pub tangent_basis: Vec<CVec>,
    pub levi_tangential: HermitianMatrix,
    pub raw_asymmetry: f64,
    pub min_eigenvalue: f64,
    /// max over the tangent basis of |D′ρ(a)b| / ‖gradient‖.
    pub tangency_defect: f64,
}

fn check_smooth(f: &RhoField<'_>, a: &CVec, scale: f64) -> Result<()> {
    let n = a.dim();
    for j in 0..n {
        for w in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
            let t = CVec::basis(n, j).scaled(w);
            let (fwd, bwd) = pshlab::one_sided(f, a, &t)?;
            let gap = math::abs(fwd - bwd);
            let size = math::abs(fwd).max(math::abs(bwd)).max(scale);
            if gap > NON_SMOOTH_REL * size {
                return Err(Error::NonSmoothPoint { defect: gap / size });
            }
        }
    }
    Ok(())
}

/// Orthonormal completion of `first` by Gram–Schmidt on the standard basis.
fn unitary_frame(first: &CVec) -> Vec<CVec> {
    let n = first.dim();
    let mut frame = alloc::vec![first.clone()];
    for k in 0..n {
        if frame.len() == n {
            break;
        }
        let mut v = CVec::basis(n, k);
        for _ in 0..2 {
            for u in &frame {
                let c = v.inner(u);
                v = v.add_scaled(-c, u);
            }
        }
        let len = v.euclid();
        if len > 1e-8 {
            frame.push(v.scaled_real(1.0 / len));
        }
    }
    frame
}

pub fn levi_report(d: &DomainSpec, a: &CVec) -> Result<LeviReport> {
    a.check_dim(d.dim)?;
    let rho_a = d.rho_checked(a.as_slice())?;
    if math::abs(rho_a) > BOUNDARY_TOL {
        return Err(invalid("levi_report needs a boundary point (|rho| <= 1e-8)"));
    }
    let f = d.rho_field();
    let n = d.dim;
    let mut g = Vec::with_capacity(n);
    for j in 0..n {
        g.push(pshlab::dprime(&f, a, &CVec::basis(n, j), None)?);
    }
    let gradient = CVec::new(g);
    let gn = gradient.euclid();
    if gn <= DEGENERATE_GRADIENT {
        return Err(Error::DegenerateGradient);
    }
    check_smooth(&f, a, gn)?;
    // D′ρ(a)b = ⟨b, conj(g)⟩, so conj(g) is normal to the complex tangent space.
    let normal = CVec::new(gradient.as_slice().iter().map(|x| x.conj()).collect()).scaled_real(1.0 / gn);
    let mut frame = unitary_frame(&normal);
    frame.remove(0);
    let tangency_defect = frame
        .iter()
        .map(|b| b.as_slice().iter().zip(gradient.as_slice()).map(|(x, y)| x * y).sum::<Complex64>().norm() / gn)
        .fold(0.0, f64::max);
    let lm = pshlab::levi_matrix_detailed(&f, a, &frame, None)?;
    let min_eigenvalue = lm.matrix.min_eigenvalue().unwrap_or(f64::INFINITY);
    Ok(LeviReport {
        point: a.clone(),
        rho: rho_a,
        gradient,
        normal,
        tangent_basis: frame,
        levi_tangential: lm.matrix,
        raw_asymmetry: lm.raw_asymmetry,
        min_eigenvalue,
        tangency_defect,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeviSample {
    pub point: CVec,
    pub min_eigenvalue: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeviScanReport {
    pub domain: String,
    pub seed: u64,
    pub count: usize,
    pub evaluated: usize,
    pub skipped_non_smooth: usize,
    pub skipped_degenerate: usize,
    pub min_eigenvalue: f64,
    pub argmin: CVec,
    pub samples: Vec<LeviSample>,
}

/// Boundary point `index` of a Levi scan and its minimal tangential
/// eigenvalue; non-smooth and degenerate points are recorded as skips.
pub fn levi_probe(d: &DomainSpec, seed: u64, index: u64) -> Result<LeviSample> {
    let p = boundary_point(d, seed, index)?;
    match levi_report(d, &p) {
        Ok(r) => Ok(LeviSample { point: p, min_eigenvalue: Some(r.min_eigenvalue), skipped: None }),
        Err(Error::NonSmoothPoint { .. }) => {
            Ok(LeviSample { point: p, min_eigenvalue: None, skipped: Some(String::from("non_smooth")) })
        }
        Err(Error::DegenerateGradient) => {
            Ok(LeviSample { point: p, min_eigenvalue: None, skipped: Some(String::from("degenerate")) })
        }
        Err(e) => Err(e),
    }
}

impl LeviScanReport {
    pub fn from_samples(d: &DomainSpec, seed: u64, samples: Vec<LeviSample>) -> Result<Self> {
        let mut best: Option<(f64, CVec)> = None;
        let (mut ns, mut dg, mut ev) = (0, 0, 0);
        for s in &samples {
            match (s.min_eigenvalue, s.skipped.as_deref()) {
                (Some(v), _) => {
                    ev += 1;
                    if best.as_ref().is_none_or(|(b, _)| v < *b) {
                        best = Some((v, s.point.clone()));
                    }
                }
                (None, Some("degenerate")) => dg += 1,
                _ => ns += 1,
            }
        }
        let (min_eigenvalue, argmin) = best.ok_or(Error::NoData)?;
        Ok(LeviScanReport {
            domain: d.name.clone(),
            seed,
            count: samples.len(),
            evaluated: ev,
            skipped_non_smooth: ns,
            skipped_degenerate: dg,
            min_eigenvalue,
            argmin,
            samples,
        })
    }
}

pub fn strict_levi_scan(d: &DomainSpec, count: usize, seed: u64) -> Result<LeviScanReport> {
    strict_levi_scan_in(&Serial, d, count, seed)
}

pub fn strict_levi_scan_in<E: Executor>(exec: &E, d: &DomainSpec, count: usize, seed: u64) -> Result<LeviScanReport> {
    let samples = exec.map(count, |i| levi_probe(d, seed, i))?;
    LeviScanReport::from_samples(d, seed, samples)
}

// ---------------------------------------------------------------------------
// exhaustion

/// Fraction of the disc radius used for finite differences at interior points.
pub const INTERIOR_FRACTION: f64 = 0.05;

/// Radii and difference step for derivatives of −log|ρ| at `a` along `b`,
/// shrunk so every probe stays well inside the domain.
pub fn interior_steps(d: &DomainSpec, a: &CVec, b: &CVec) -> Result<([f64; 3], f64)> {
    let dr = disc_radius(d, a, b)?;
    let [r0, ..] = pshlab::default_radii(a);
    let r = r0.min(INTERIOR_FRACTION * dr);
    let h = pshlab::default_step(a).min(INTERIOR_FRACTION * dr);
    Ok(([r, 0.5 * r, 0.25 * r], h))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `residual / max(1, |rhs|)`; both sides grow like 1/ρ² near the
    /// boundary, where only relative agreement is meaningful.
    pub relative: f64,
}

/// Compares `D′D″(−log|ρ|)(a)(b,b)` with
/// `(1/|ρ|)·D′D″ρ(a)(b,b) + |D′ρ(a)b|²/ρ²`.
pub fn log_identity(d: &DomainSpec, a: &CVec, b: &CVec) -> Result<LogIdentity> {
    let rho_a = d.rho_checked(a.as_slice())?;
    if !(rho_a < 0.0) {
        return Err(Error::NotInterior { rho: rho_a });
    }
    let (radii, h) = interior_steps(d, a, b)?;
    let lhs = pshlab::levi_quadratic(&NegLogRho(d), a, b, Some(&radii))?;
    let lr = pshlab::levi_quadratic(&d.rho_field(), a, b, Some(&radii))?;
    let dp = pshlab::dprime(&d.rho_field(), a, b, Some(h))?;
    let rhs = lr / -rho_a + dp.norm_sqr() / (rho_a * rho_a);
    let residual = math::abs(lhs - rhs);
    Ok(LogIdentity { lhs, rhs, residual, relative: residual / math::abs(rhs).max(1.0) })
}

/// Seeded interior point: uniform in the box, rejected until ρ < 0.
pub fn interior_point(d: &DomainSpec, g: &mut rng::SampleRng) -> Result<CVec> {
    let (lo, hi) = d.bounds.bounds();
    for _ in 0..10_000 {
        let z: Vec<Complex64> = (0..d.dim)
            .map(|k| {
                Complex64::new(
                    lo[2 * k] + (hi[2 * k] - lo[2 * k]) * rng::uniform(g),
                    lo[2 * k + 1] + (hi[2 * k + 1] - lo[2 * k + 1]) * rng::uniform(g),
                )
            })
            .collect();
        if d.rho_checked(&z)? < 0.0 {
            return Ok(CVec::new(z));
        }
    }
    Err(Error::RegionTooThin)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionSample {
    pub a: CVec,
    pub b: CVec,
    pub rho: f64,
    pub phi: f64,
    pub levi: f64,
}

impl ExhaustionSample {
    /// `(levi − φ)/max(1, |φ|)`: near the boundary both sides grow like
    /// 1/ρ² and finite differences only agree to relative precision.
    pub fn margin(&self) -> f64 {
        (self.levi - self.phi) / math::abs(self.phi).max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionReport {
    pub domain: String,
    pub seed: u64,
    pub n_samples: usize,
    pub tolerance: f64,
    pub threshold: f64,
    pub worst_margin: f64,
    pub witness: ExhaustionSample,
    pub inf_phi_rho: f64,
    pub inf_witness: ExhaustionSample,
    pub pass: bool,
}

pub const EXHAUSTION_TOL: f64 = 1e-6;

pub fn exhaustion_probe<P: Field + ?Sized>(d: &DomainSpec, phi: &P, seed: u64, index: u64) -> Result<ExhaustionSample> {
    let mut g = rng::task_rng(seed, index);
    let a = interior_point(d, &mut g)?;
    let b = rng::euclidean_unit(&mut g, d.dim);
    let rho_a = d.rho_checked(a.as_slice())?;
    if !(rho_a < 0.0) {
        return Err(Error::NotInterior { rho: rho_a });
    }
    let (radii, _) = interior_steps(d, &a, &b)?;
    let levi = pshlab::levi_quadratic(&NegLogRho(d), &a, &b, Some(&radii))?;
    let phi_a = phi.eval(a.as_slice());
    if !phi_a.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(ExhaustionSample { a, b, rho: rho_a, phi: phi_a, levi })
}

impl ExhaustionReport {
    pub fn from_samples(d: &DomainSpec, seed: u64, threshold: f64, samples: Vec<ExhaustionSample>) -> Result<Self> {
        let n = samples.len();
        let worst = samples.iter().min_by(|x, y| x.margin().total_cmp(&y.margin())).cloned().ok_or(Error::NoData)?;
        let inf = samples
            .iter()
            .min_by(|x, y| (x.phi * -x.rho).total_cmp(&(y.phi * -y.rho)))
            .cloned()
            .ok_or(Error::NoData)?;
        let worst_margin = worst.margin();
        let inf_phi_rho = inf.phi * -inf.rho;
        Ok(ExhaustionReport {
            domain: d.name.clone(),
            seed,
            n_samples: n,
            tolerance: EXHAUSTION_TOL,
            threshold,
            worst_margin,
            witness: worst,
            inf_phi_rho,
            inf_witness: inf,
            pass: worst_margin >= -EXHAUSTION_TOL && inf_phi_rho >= threshold,
        })
    }
}

/// Checks `D′D″(−log|ρ|)(a)(b,b) ≥ φ(a)` at seeded interior points and unit
/// directions, and that `inf φ(a)|ρ(a)|` stays above `threshold > 0`.
pub fn exhaustion_check<P: Field + Sync + ?Sized>(
    d: &DomainSpec,
    phi: &P,
    samples: usize,
    seed: u64,
    threshold: f64,
) -> Result<ExhaustionReport> {
    exhaustion_check_in(&Serial, d, phi, samples, seed, threshold)
}

pub fn exhaustion_check_in<E: Executor, P: Field + Sync + ?Sized>(
    exec: &E,
    d: &DomainSpec,
    phi: &P,
    samples: usize,
    seed: u64,
    threshold: f64,
) -> Result<ExhaustionReport> {
    if !(threshold > 0.0) {
        return Err(invalid("exhaustion threshold must be positive"));
    }
    if phi.dim() != d.dim {
        return Err(Error::DimensionMismatch { expected: d.dim, found: phi.dim() });
    }
    let s = exec.map(samples, |i| exhaustion_probe(d, phi, seed, i))?;
    ExhaustionReport::from_samples(d, seed, threshold, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(p: f64, n: usize) -> DomainSpec {
        DomainSpec::ball(&Space::lp(p, n).unwrap(), 1.0, None).unwrap()
    }

    #[test]
    fn disc_radius_examples() {
        let d = ball(2.0, 2);
        let r = disc_radius(&d, &CVec::zeros(2), &CVec::basis(2, 0)).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
        let r = disc_radius(&d, &CVec::from_real(&[0.5, 0.0]), &CVec::basis(2, 0)).unwrap();
        assert!((r - 0.5).abs() < 1e-9);
        let d = ball(f64::INFINITY, 2);
        let r = disc_radius(&d, &CVec::zeros(2), &CVec::from_real(&[1.0, 1.0])).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
        assert!(matches!(
            disc_radius(&d, &CVec::from_real(&[2.0, 0.0]), &CVec::basis(2, 0)),
            Err(Error::NotInterior { .. })
        ));
    }

    #[test]
    fn boundary_points_lie_on_the_sphere() {
        let s = Space::lp(4.0, 2).unwrap();
        let d = DomainSpec::ball(&s, 1.0, None).unwrap();
        assert_eq!(d.rho_kind, RhoKind::PPower);
        for p in boundary_sample(&d, 50, 3).unwrap() {
            assert!((s.norm(&p).unwrap() - 1.0).abs() <= 1e-9);
        }
        assert_eq!(boundary_sample(&d, 5, 9).unwrap(), boundary_sample(&d, 5, 9).unwrap());
    }

    #[test]
    fn l4_ball_is_levi_degenerate_on_the_axis() {
        let d = ball(4.0, 2);
        let r = levi_report(&d, &CVec::from_real(&[1.0, 0.0])).unwrap();
        assert!(r.min_eigenvalue.abs() <= 1e-6, "{}", r.min_eigenvalue);
        assert!(r.tangent_basis[0][1].norm() > 1.0 - 1e-9);
    }

    #[test]
    fn l1_ball_kinks_are_detected() {
        let d = ball(1.0, 2);
        assert!(matches!(levi_report(&d, &CVec::from_real(&[1.0, 0.0])), Err(Error::NonSmoothPoint { .. })));
        let p = CVec::new(alloc::vec![Complex64::new(0.3, 0.1), Complex64::new(0.0, -0.5)]);
        let s = 0.5 + math::sqrt(0.09 + 0.01);
        let p = p.scaled_real(1.0 / s);
        assert!(levi_report(&d, &p).is_ok());
    }

    #[test]
    fn zero_phi_fails_the_infimum_condition() {
        let d = ball(2.0, 2);
        let zero = crate::field::FnField::new(2, |_: &[Complex64]| 0.0);
        let rep = exhaustion_check(&d, &zero, 10, 1, 1e-6).unwrap();
        assert!(!rep.pass);
        assert!(rep.worst_margin > 0.0);
    }
}
