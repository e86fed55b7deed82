//! Finite-difference complex derivatives, Levi forms from circle means, and
//! sampled tests of (strict, uniform) plurisubharmonicity.

mod mollify;

pub use mollify::{kernel, mollified_shape, mollify, mollify_in, mollify_point, GridFn, Kernel};

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle::{mean_raw, QuadCtrl};
use crate::cvec::CVec;
use crate::error::{invalid, Error, Result};
use crate::exec::{Executor, Serial};
use crate::field::{Field, Smoothness};
use crate::math;
use crate::rng;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn eval_finite<F: Field + ?Sized>(f: &F, z: &[Complex64]) -> Result<f64> {
    let v = f.eval(z);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite)
    }
}

fn shifted(a: &[Complex64], h: Complex64, t: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(t).map(|(x, y)| x + h * y).collect()
}

/// Central difference `Df(a)(t)` with one Richardson step over h, h/2.
fn real_derivative<F: Field + ?Sized>(f: &F, a: &[Complex64], t: &[Complex64], h: f64) -> Result<f64> {
    let central = |h: f64| -> Result<f64> {
        let p = eval_finite(f, &shifted(a, Complex64::new(h, 0.0), t))?;
        let m = eval_finite(f, &shifted(a, Complex64::new(-h, 0.0), t))?;
        Ok((p - m) / (2.0 * h))
    };
    let d1 = central(h)?;
    let d2 = central(0.5 * h)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

pub fn default_step(a: &CVec) -> f64 {
    1e-3 * (1.0 + a.euclid())
}

/// `D′f(a)(t) = ½[Df(a)(t) − i·Df(a)(it)]`.
pub fn dprime<F: Field + ?Sized>(f: &F, a: &CVec, t: &CVec, h: Option<f64>) -> Result<Complex64> {
    a.check_dim(f.dim())?;
    t.check_dim(f.dim())?;
    let h = h.unwrap_or_else(|| default_step(a));
    if !(h > 0.0) {
        return Err(invalid("difference step must be positive"));
    }
    let it: Vec<Complex64> = t.as_slice().iter().map(|x| I * x).collect();
    let dt = real_derivative(f, a.as_slice(), t.as_slice(), h)?;
    let dit = real_derivative(f, a.as_slice(), &it, h)?;
    Ok(Complex64::new(0.5 * dt, -0.5 * dit))
}

/// One-sided difference quotients `(forward, backward)` of `f` at `a` along
/// `t`, at a step small enough that smooth functions agree to ~1e−6.
pub fn one_sided<F: Field + ?Sized>(f: &F, a: &CVec, t: &CVec) -> Result<(f64, f64)> {
    let h = 1e-6 * (1.0 + a.euclid());
    let f0 = eval_finite(f, a.as_slice())?;
    let fp = eval_finite(f, &shifted(a.as_slice(), Complex64::new(h, 0.0), t.as_slice()))?;
    let fm = eval_finite(f, &shifted(a.as_slice(), Complex64::new(-h, 0.0), t.as_slice()))?;
    Ok(((fp - f0) / h, (f0 - fm) / h))
}

/// Quadrature for circle means of small radius: near machine precision,
/// relative to the size of the function at the center.
pub(crate) fn fine_quad(scale: f64) -> QuadCtrl {
    QuadCtrl { tol: 1e-14 * scale.abs().max(1.0), max_nodes: 1 << 12 }
}

pub fn default_radii(a: &CVec) -> [f64; 3] {
    let r0 = 1e-2 * (1.0 + a.euclid());
    [r0, 0.5 * r0, 0.25 * r0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeviQuadratic {
    pub value: f64,
    pub radii: Vec<f64>,
    /// `(mean_on_circle(f, a, r·b) − f(a)) / r²` per radius.
    pub quotients: Vec<f64>,
    /// Increments m(r) grew with the radius where sub-mean monotonicity
    /// would require otherwise (beyond quadrature noise).
    pub non_monotone: bool,
    pub quad_warning: bool,
}

/// Neville extrapolation to x = 0 of values `ys` sampled at `xs`.
fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p: Vec<f64> = ys.to_vec();
    let n = xs.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (xs[i + k] * p[i] - xs[i] * p[i + 1]) / (xs[i + k] - xs[i]);
        }
    }
    p[0]
}

pub fn levi_quadratic_detailed<F: Field + ?Sized>(
    f: &F,
    a: &CVec,
    b: &CVec,
    radii: Option<&[f64]>,
) -> Result<LeviQuadratic> {
    a.check_dim(f.dim())?;
    b.check_dim(f.dim())?;
    let default = default_radii(a);
    let radii = radii.unwrap_or(&default);
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("radii must be positive and strictly decreasing"));
    }
    let fa = eval_finite(f, a.as_slice())?;
    let ctrl = fine_quad(fa);
    let mut quotients = Vec::with_capacity(radii.len());
    let mut incs = Vec::with_capacity(radii.len());
    let mut quad_warning = false;
    for &r in radii {
        let rb: Vec<Complex64> = b.as_slice().iter().map(|x| x * r).collect();
        let m = mean_raw(f, a.as_slice(), &rb, &ctrl)?;
        if !m.value.is_finite() {
            return Err(Error::NonFinite);
        }
        quad_warning |= m.warning();
        let inc = m.value - fa;
        incs.push(inc);
        quotients.push(inc / (r * r));
    }
    let noise = 10.0 * ctrl.tol;
    let non_monotone = incs.windows(2).any(|w| w[0] < w[1] - noise);
    let value = match f.smoothness() {
        Smoothness::C2 if radii.len() > 1 => {
            let xs: Vec<f64> = radii.iter().map(|r| r * r).collect();
            extrapolate_to_zero(&xs, &quotients)
        }
        _ => *quotients.last().unwrap(),
    };
    Ok(LeviQuadratic { value, radii: radii.to_vec(), quotients, non_monotone, quad_warning })
}

/// `D′D″f(a)(b, b)` from circle means at shrinking radii.
pub fn levi_quadratic<F: Field + ?Sized>(f: &F, a: &CVec, b: &CVec, radii: Option<&[f64]>) -> Result<f64> {
    Ok(levi_quadratic_detailed(f, a, b, radii)?.value)
}

/// Dense Hermitian matrix, stored by rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianMatrix {
    pub rows: Vec<CVec>,
}

impl HermitianMatrix {
    pub fn from_fn(n: usize, mut g: impl FnMut(usize, usize) -> Complex64) -> Self {
        HermitianMatrix { rows: (0..n).map(|j| CVec::new((0..n).map(|k| g(j, k)).collect())).collect() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.rows[j][k]
    }

    /// max |M[j][k] − conj(M[k][j])|.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                worst = worst.max((self.get(j, k) - self.get(k, j).conj()).norm());
            }
        }
        worst
    }

    pub fn symmetrized(&self) -> Self {
        Self::from_fn(self.dim(), |j, k| 0.5 * (self.get(j, k) + self.get(k, j).conj()))
    }

    /// Eigenvalues in increasing order (of the symmetrized matrix).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.dim();
        if n == 0 {
            return Vec::new();
        }
        let s = self.symmetrized();
        let m = DMatrix::from_fn(n, n, |j, k| s.get(j, k));
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|x, y| x.total_cmp(y));
        ev
    }

    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.eigenvalues().first().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeviMatrix {
    pub matrix: HermitianMatrix,
    /// Asymmetry of the polarized matrix before symmetrization.
    pub raw_asymmetry: f64,
}

/// Levi matrix `M[j][k] = D′D″f(a)(b_j, b_k)` on the given basis, by
/// Hermitian polarization of the quadratic form.
pub fn levi_matrix_detailed<F: Field + ?Sized>(
    f: &F,
    a: &CVec,
    basis: &[CVec],
    radii: Option<&[f64]>,
) -> Result<LeviMatrix> {
    let n = basis.len();
    let q = |v: &CVec| levi_quadratic(f, a, v, radii);
    let mut diag = Vec::with_capacity(n);
    for b in basis {
        diag.push(q(b)?);
    }
    let mut raw = alloc::vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        raw[j * n + j] = Complex64::new(diag[j], 0.0);
        for k in 0..n {
            if j == k {
                continue;
            }
            let (b, c) = (&basis[j], &basis[k]);
            let v = 0.25
                * (Complex64::new(q(&b.add(c))? - q(&b.sub(c))?, 0.0) + I * q(&b.add_scaled(I, c))?
                    - I * q(&b.add_scaled(-I, c))?);
            raw[j * n + k] = v;
        }
    }
    let raw = HermitianMatrix::from_fn(n, |j, k| raw[j * n + k]);
    Ok(LeviMatrix { raw_asymmetry: raw.asymmetry(), matrix: raw.symmetrized() })
}

pub fn levi_matrix<F: Field + ?Sized>(
    f: &F,
    a: &CVec,
    basis: &[CVec],
    radii: Option<&[f64]>,
) -> Result<HermitianMatrix> {
    Ok(levi_matrix_detailed(f, a, basis, radii)?.matrix)
}

// ---------------------------------------------------------------------------
// regions and scans

/// An open set given by a real bounding box plus membership.
pub trait Region {
    fn dim(&self) -> usize;
    /// Bounding box in interleaved real coordinates (re₁, im₁, re₂, …).
    fn bounds(&self) -> (&[f64], &[f64]);
    fn contains(&self, z: &[Complex64]) -> bool;
    /// Exact radius of the largest closed disc `a + r𝔻̄·b` inside the region,
    /// when the region can compute it.
    fn disc_radius(&self, _a: &[Complex64], _b: &[Complex64]) -> Option<Result<f64>> {
        None
    }
}

impl<R: Region + ?Sized> Region for &R {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn bounds(&self) -> (&[f64], &[f64]) {
        (**self).bounds()
    }
    fn contains(&self, z: &[Complex64]) -> bool {
        (**self).contains(z)
    }
    fn disc_radius(&self, a: &[Complex64], b: &[Complex64]) -> Option<Result<f64>> {
        (**self).disc_radius(a, b)
    }
}

/// Open box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || !lo.len().is_multiple_of(2) {
            return Err(invalid("box bounds need equal, even, nonzero length"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite()) {
            return Err(invalid("box needs lo < hi in every coordinate"));
        }
        Ok(BoxRegion { lo, hi })
    }

    /// The cube `[−s, s]^{2n}`.
    pub fn cube(n: usize, s: f64) -> Result<Self> {
        Self::new(alloc::vec![-s; 2 * n], alloc::vec![s; 2 * n])
    }
}

fn in_box(lo: &[f64], hi: &[f64], z: &[Complex64]) -> bool {
    z.iter()
        .enumerate()
        .all(|(k, w)| w.re > lo[2 * k] && w.re < hi[2 * k] && w.im > lo[2 * k + 1] && w.im < hi[2 * k + 1])
}

impl Region for BoxRegion {
    fn dim(&self) -> usize {
        self.lo.len() / 2
    }
    fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }
    fn contains(&self, z: &[Complex64]) -> bool {
        in_box(&self.lo, &self.hi, z)
    }
    fn disc_radius(&self, a: &[Complex64], b: &[Complex64]) -> Option<Result<f64>> {
        // Coordinate k of the disc sweeps the planar disc of radius r|b_k|.
        let mut r = f64::INFINITY;
        for (k, (x, y)) in a.iter().zip(b).enumerate() {
            let s = y.norm();
            if s == 0.0 {
                continue;
            }
            let room = (x.re - self.lo[2 * k])
                .min(self.hi[2 * k] - x.re)
                .min(x.im - self.lo[2 * k + 1])
                .min(self.hi[2 * k + 1] - x.im);
            r = r.min(room / s);
        }
        Some(Ok(r.max(0.0)))
    }
}

/// Box intersected with a membership predicate.
pub struct FnRegion<M> {
    pub bounds: BoxRegion,
    member: M,
}

impl<M: Fn(&[Complex64]) -> bool> FnRegion<M> {
    pub fn new(bounds: BoxRegion, member: M) -> Self {
        FnRegion { bounds, member }
    }
}

impl<M: Fn(&[Complex64]) -> bool> Region for FnRegion<M> {
    fn dim(&self) -> usize {
        self.bounds.dim()
    }
    fn bounds(&self) -> (&[f64], &[f64]) {
        self.bounds.bounds()
    }
    fn contains(&self, z: &[Complex64]) -> bool {
        self.bounds.contains(z) && (self.member)(z)
    }
}

/// Whether the closed disc `a + r𝔻̄·b` lies in the region: exact radius if
/// the region offers one, else membership on 64 nodes of the rim and of the
/// half-radius circle.
pub fn disc_fits<R: Region + ?Sized>(region: &R, a: &[Complex64], b: &[Complex64], r: f64) -> Result<bool> {
    if let Some(rad) = region.disc_radius(a, b) {
        return Ok(r < rad?);
    }
    let mut z = alloc::vec![Complex64::new(0.0, 0.0); a.len()];
    for s in [r, 0.5 * r] {
        for k in 0..64 {
            let (si, co) = math::sin_cos(math::TAU * k as f64 / 64.0);
            let w = Complex64::new(co, si) * s;
            crate::cvec::combine_into(a, w, b, &mut z);
            if !region.contains(&z) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn sample_point<R: Region + ?Sized>(region: &R, g: &mut rng::SampleRng) -> Option<Vec<Complex64>> {
    let (lo, hi) = region.bounds();
    for _ in 0..256 {
        let z: Vec<Complex64> = (0..region.dim())
            .map(|k| {
                let re = lo[2 * k] + (hi[2 * k] - lo[2 * k]) * rng::uniform(g);
                let im = lo[2 * k + 1] + (hi[2 * k + 1] - lo[2 * k + 1]) * rng::uniform(g);
                Complex64::new(re, im)
            })
            .collect();
        if region.contains(&z) {
            return Some(z);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanOptions {
    pub samples: usize,
    pub seed: u64,
    pub r_max: f64,
    pub tol: f64,
    pub quad: QuadCtrl,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { samples: 1000, seed: 0, r_max: 0.5, tol: 1e-8, quad: QuadCtrl::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PshWitness {
    pub a: CVec,
    /// Already scaled by the radius: the circle is `a + e^{iθ}b`.
    pub b: CVec,
    pub f_a: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Probe {
    /// No admissible disc was found for this sample.
    Thin,
    /// f(a) = −∞: the sub-mean inequality holds trivially.
    Sentinel,
    Done {
        margin: f64,
        witness: PshWitness,
        quad_warning: bool,
    },
}

/// Sample `index` of a psh scan: one seeded (a, b, r) and its sub-mean margin.
pub fn psh_probe<F: Field + ?Sized, R: Region + ?Sized>(
    f: &F,
    region: &R,
    opts: &ScanOptions,
    index: u64,
) -> Result<Probe> {
    let mut g = rng::task_rng(opts.seed, index);
    let Some(a) = sample_point(region, &mut g) else {
        return Ok(Probe::Thin);
    };
    let dir = rng::euclidean_unit(&mut g, region.dim());
    let mut r = opts.r_max * (0.05 + 0.95 * rng::uniform(&mut g));
    if let Some(rad) = region.disc_radius(&a, dir.as_slice()) {
        r = r.min(0.99 * rad?);
        if !(r > 0.0) {
            return Ok(Probe::Thin);
        }
    } else {
        let mut tries = 0;
        while !disc_fits(region, &a, dir.as_slice(), r)? {
            tries += 1;
            if tries > 10 {
                return Ok(Probe::Thin);
            }
            r *= 0.5;
        }
    }
    let fa = f.eval(&a);
    if fa == f64::NEG_INFINITY {
        return Ok(Probe::Sentinel);
    }
    if !fa.is_finite() {
        return Err(Error::NonFinite);
    }
    let b = dir.scaled_real(r);
    let m = mean_raw(f, &a, b.as_slice(), &opts.quad)?;
    Ok(Probe::Done {
        margin: m.value - fa,
        witness: PshWitness { a: CVec::new(a), b, f_a: fa, mean: m.value },
        quad_warning: m.warning(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PshScanReport {
    pub requested: usize,
    pub evaluated: usize,
    pub thin: usize,
    pub sentinel: usize,
    pub quad_warnings: usize,
    pub tolerance: f64,
    pub worst_margin: f64,
    pub witness: PshWitness,
    pub pass: bool,
}

impl PshScanReport {
    /// Merge probes given in index order; ties keep the earliest index.
    pub fn from_probes(probes: Vec<Probe>, tol: f64) -> Result<Self> {
        let requested = probes.len();
        let (mut thin, mut sentinel, mut evaluated, mut warns) = (0, 0, 0, 0);
        let mut worst: Option<(f64, PshWitness)> = None;
        for p in probes {
            match p {
                Probe::Thin => thin += 1,
                Probe::Sentinel => sentinel += 1,
                Probe::Done { margin, witness, quad_warning } => {
                    evaluated += 1;
                    warns += quad_warning as usize;
                    if worst.as_ref().is_none_or(|(m, _)| margin < *m) {
                        worst = Some((margin, witness));
                    }
                }
            }
        }
        let (worst_margin, witness) = worst.ok_or(Error::RegionTooThin)?;
        Ok(PshScanReport {
            requested,
            evaluated,
            thin,
            sentinel,
            quad_warnings: warns,
            tolerance: tol,
            worst_margin,
            pass: worst_margin >= -tol,
            witness,
        })
    }
}

/// Searches seeded circles in `region` for a violation of the sub-mean
/// inequality `f(a) ≤ mean_θ f(a + e^{iθ}b)`.
pub fn psh_scan<F: Field + Sync + ?Sized, R: Region + Sync + ?Sized>(
    f: &F,
    region: &R,
    opts: &ScanOptions,
) -> Result<PshScanReport> {
    psh_scan_in(&Serial, f, region, opts)
}

pub fn psh_scan_in<E: Executor, F: Field + Sync + ?Sized, R: Region + Sync + ?Sized>(
    exec: &E,
    f: &F,
    region: &R,
    opts: &ScanOptions,
) -> Result<PshScanReport> {
    if f.dim() != region.dim() {
        return Err(Error::DimensionMismatch { expected: region.dim(), found: f.dim() });
    }
    opts.quad.validate()?;
    let probes = exec.map(opts.samples, |i| psh_probe(f, region, opts, i))?;
    PshScanReport::from_probes(probes, opts.tol)
}

// ---------------------------------------------------------------------------
// strict plurisubharmonicity on average

/// Below this, `strict_avg_phi` reports a sub-mean violation rather than a
/// numerically vanishing gap.
pub const PHI_NEGATIVE: f64 = -1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiEstimate {
    pub value: f64,
    pub a: CVec,
    pub direction: CVec,
    pub radius: f64,
}

fn phi_radii(r_max: f64) -> [f64; 3] {
    [r_max, 0.5 * r_max, 0.25 * r_max]
}

fn phi_over_dirs<F: Field + ?Sized>(f: &F, a: &[Complex64], dirs: &[CVec], r_max: f64) -> Result<PhiEstimate> {
    let fa = eval_finite(f, a)?;
    let ctrl = fine_quad(fa);
    let mut best: Option<PhiEstimate> = None;
    for d in dirs {
        for r in phi_radii(r_max) {
            let b = d.scaled_real(r);
            let m = mean_raw(f, a, b.as_slice(), &ctrl)?;
            let v = (m.value - fa) / (r * r);
            if best.as_ref().is_none_or(|e| v < e.value) {
                best = Some(PhiEstimate { value: v, a: CVec::new(a.to_vec()), direction: d.clone(), radius: r });
            }
        }
    }
    best.ok_or_else(|| invalid("need at least one direction"))
}

fn seeded_dirs(n: usize, count: usize, seed: u64) -> Vec<CVec> {
    (0..count as u64).map(|i| rng::euclidean_unit(&mut rng::task_rng(seed, i), n)).collect()
}

/// Smallest normalized circle gap `(mean − f(a))/r²` over seeded unit
/// directions and radii `r_max, r_max/2, r_max/4`.
pub fn strict_avg_phi<F: Field + ?Sized>(f: &F, a: &CVec, r_max: f64, n_dirs: usize, seed: u64) -> Result<PhiEstimate> {
    a.check_dim(f.dim())?;
    if !(r_max > 0.0) || n_dirs == 0 {
        return Err(invalid("strict_avg_phi needs r_max > 0 and n_dirs >= 1"));
    }
    let dirs = seeded_dirs(f.dim(), n_dirs, seed);
    let est = phi_over_dirs(f, a.as_slice(), &dirs, r_max)?;
    if est.value < PHI_NEGATIVE {
        return Err(Error::NotPlurisubharmonic { value: est.value });
    }
    Ok(est)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformLambda {
    pub value: f64,
    pub witness: PhiEstimate,
    pub evaluated: usize,
}

/// Sample `index` of `uniform_lambda`: the smallest gap at one seeded point
/// whose probing discs all lie in the region, or `None` if none was found.
pub fn lambda_probe<F: Field + ?Sized, R: Region + ?Sized>(
    f: &F,
    region: &R,
    r_max: f64,
    n_dirs: usize,
    seed: u64,
    index: u64,
) -> Result<Option<PhiEstimate>> {
    let mut g = rng::task_rng(seed, index);
    let dirs = seeded_dirs(region.dim(), n_dirs, rng::sub_seed(seed, index));
    for _ in 0..64 {
        let Some(a) = sample_point(region, &mut g) else {
            return Ok(None);
        };
        let mut fits = true;
        for d in &dirs {
            if !disc_fits(region, &a, d.as_slice(), r_max)? {
                fits = false;
                break;
            }
        }
        if fits {
            return phi_over_dirs(f, &a, &dirs, r_max).map(Some);
        }
    }
    Ok(None)
}

/// Infimum of the normalized gap over seeded points of the region.
pub fn uniform_lambda<F: Field + Sync + ?Sized, R: Region + Sync + ?Sized>(
    f: &F,
    region: &R,
    samples: usize,
    seed: u64,
    r_max: f64,
    n_dirs: usize,
) -> Result<UniformLambda> {
    uniform_lambda_in(&Serial, f, region, samples, seed, r_max, n_dirs)
}

pub fn uniform_lambda_in<E: Executor, F: Field + Sync + ?Sized, R: Region + Sync + ?Sized>(
    exec: &E,
    f: &F,
    region: &R,
    samples: usize,
    seed: u64,
    r_max: f64,
    n_dirs: usize,
) -> Result<UniformLambda> {
    if !(r_max > 0.0) || n_dirs == 0 {
        return Err(invalid("uniform_lambda needs r_max > 0 and n_dirs >= 1"));
    }
    if f.dim() != region.dim() {
        return Err(Error::DimensionMismatch { expected: region.dim(), found: f.dim() });
    }
    let probes = exec.map(samples, |i| lambda_probe(f, region, r_max, n_dirs, seed, i))?;
    UniformLambda::from_probes(probes)
}

impl UniformLambda {
    pub fn from_probes(probes: Vec<Option<PhiEstimate>>) -> Result<Self> {
        let mut best: Option<PhiEstimate> = None;
        let mut evaluated = 0;
        for p in probes.into_iter().flatten() {
            evaluated += 1;
            if best.as_ref().is_none_or(|b| p.value < b.value) {
                best = Some(p);
            }
        }
        let w = best.ok_or(Error::RegionTooThin)?;
        Ok(UniformLambda { value: w.value, witness: w, evaluated })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dprime_examples() {
        let re = FnField::new(1, |z: &[Complex64]| z[0].re);
        let d = dprime(&re, &CVec::from_real(&[0.3]), &CVec::from_real(&[1.0]), None).unwrap();
        assert!((d - c(0.5, 0.0)).norm() < 1e-10);

        let sq = FnField::new(1, |z: &[Complex64]| z[0].norm_sqr());
        let d = dprime(&sq, &CVec::from_real(&[1.0]), &CVec::from_real(&[1.0]), None).unwrap();
        assert!((d - c(1.0, 0.0)).norm() < 1e-10);

        let k = FnField::new(2, |_: &[Complex64]| 3.0);
        let d = dprime(&k, &CVec::zeros(2), &CVec::basis(2, 1), None).unwrap();
        assert_eq!(d, c(0.0, 0.0));
    }

    #[test]
    fn levi_quadratic_examples() {
        let one = CVec::from_real(&[1.0]);
        let sq = FnField::new(1, |z: &[Complex64]| z[0].norm_sqr());
        assert!((levi_quadratic(&sq, &CVec::from_real(&[0.2]), &one, None).unwrap() - 1.0).abs() < 1e-8);

        let harm = FnField::new(1, |z: &[Complex64]| (z[0] * z[0]).re);
        assert!(levi_quadratic(&harm, &CVec::from_real(&[0.7]), &one, None).unwrap().abs() < 1e-8);

        let quart = FnField::new(1, |z: &[Complex64]| z[0].norm_sqr() * z[0].norm_sqr());
        assert!((levi_quadratic(&quart, &one, &one, None).unwrap() - 4.0).abs() < 1e-7);
    }

    #[test]
    fn levi_matrix_examples() {
        let basis = [CVec::basis(2, 0), CVec::basis(2, 1)];
        let a = CVec::new(alloc::vec![c(0.2, 0.1), c(-0.3, 0.4)]);
        let f = FnField::new(2, |z: &[Complex64]| (z[0] + z[1]).norm_sqr());
        let m = levi_matrix_detailed(&f, &a, &basis, None).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                assert!((m.matrix.get(j, k) - c(1.0, 0.0)).norm() < 1e-8);
            }
        }
        assert!(m.raw_asymmetry < 1e-6);

        let g = FnField::new(2, |z: &[Complex64]| z[0].norm_sqr());
        let m = levi_matrix(&g, &a, &basis, None).unwrap();
        let ev = m.eigenvalues();
        assert!(ev[0].abs() < 1e-8 && (ev[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn scan_detects_concave_function() {
        let f = FnField::new(2, |z: &[Complex64]| -(z[0].norm_sqr() + z[1].norm_sqr()));
        let region = BoxRegion::cube(2, 1.0).unwrap();
        let rep = psh_scan(&f, &region, &ScanOptions { samples: 20, ..Default::default() }).unwrap();
        assert!(!rep.pass);
        let w = &rep.witness;
        assert!((rep.worst_margin + math::powi(w.b.euclid(), 2)).abs() < 1e-12);
    }

    #[test]
    fn scan_passes_on_modulus_of_holomorphic_function() {
        let f = FnField::new(2, |z: &[Complex64]| (z[0] * z[1]).norm());
        let disc = |z: &[Complex64]| z.iter().all(|w| w.norm() < 1.0);
        let region = FnRegion::new(BoxRegion::cube(2, 1.0).unwrap(), disc);
        let rep = psh_scan(&f, &region, &ScanOptions { samples: 200, seed: 4, ..Default::default() }).unwrap();
        assert!(rep.pass, "{}", rep.worst_margin);
    }

    #[test]
    fn thin_region_is_an_error() {
        let f = FnField::new(1, |z: &[Complex64]| z[0].re);
        let region = FnRegion::new(BoxRegion::cube(1, 1.0).unwrap(), |_: &[Complex64]| false);
        let r = psh_scan(&f, &region, &ScanOptions { samples: 5, ..Default::default() });
        assert!(matches!(r, Err(Error::RegionTooThin)));
    }

    #[test]
    fn phi_of_squared_norm_is_one_and_of_pluriharmonic_is_zero() {
        let f = FnField::new(3, |z: &[Complex64]| z.iter().map(|w| w.norm_sqr()).sum());
        let a = CVec::new(alloc::vec![c(0.3, 0.1), c(-1.0, 0.0), c(0.0, 2.0)]);
        let e = strict_avg_phi(&f, &a, 0.1, 8, 1).unwrap();
        assert!((e.value - 1.0).abs() < 1e-9);

        let re = FnField::new(1, |z: &[Complex64]| z[0].re);
        let e = strict_avg_phi(&re, &CVec::from_real(&[0.5]), 0.1, 4, 1).unwrap();
        assert!(e.value.abs() < 1e-9);

        let neg = FnField::new(1, |z: &[Complex64]| -z[0].norm_sqr());
        assert!(matches!(strict_avg_phi(&neg, &CVec::zeros(1), 0.1, 2, 1), Err(Error::NotPlurisubharmonic { .. })));
    }
}
