//! Discrete convolution with the bump `exp(−1/(1−|x|²))` on uniform grids.

use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{Executor, Serial};
use crate::field::{Field, Smoothness};
use crate::math;

/// Samples of a function on a uniform grid over a box in ℝ^{2n}, n ≤ 2.
/// Real coordinates are interleaved (re₁, im₁, re₂, im₂); values are stored
/// row-major with the last coordinate fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFn {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl GridFn {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let g = GridFn { lo, hi, shape, values };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.shape.len();
        if !(d == 2 || d == 4) || self.lo.len() != d || self.hi.len() != d {
            return Err(invalid("grid functions live on boxes in R^2 or R^4"));
        }
        if self.shape.iter().any(|&s| s < 2) {
            return Err(invalid("grid needs at least two points per axis"));
        }
        if self.lo.iter().zip(&self.hi).any(|(l, h)| !(l < h)) {
            return Err(invalid("grid box needs lo < hi"));
        }
        let len = self.shape.iter().product::<usize>();
        if self.values.len() != len {
            return Err(Error::DimensionMismatch { expected: len, found: self.values.len() });
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Samples `f` at every grid node.
    pub fn sample<F: Field + ?Sized>(f: &F, lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        if f.dim() * 2 != shape.len() {
            return Err(Error::DimensionMismatch { expected: shape.len(), found: 2 * f.dim() });
        }
        let mut g = GridFn { lo, hi, shape, values: Vec::new() };
        let len = g.shape.iter().product::<usize>();
        let mut z = alloc::vec![Complex64::new(0.0, 0.0); f.dim()];
        let mut idx = alloc::vec![0usize; g.shape.len()];
        g.values.reserve(len);
        for flat in 0..len {
            g.unflatten(flat, &mut idx);
            for k in 0..f.dim() {
                z[k] = Complex64::new(g.coord(2 * k, idx[2 * k]), g.coord(2 * k + 1, idx[2 * k + 1]));
            }
            g.values.push(f.eval(&z));
        }
        g.validate()?;
        Ok(g)
    }

    pub fn real_dim(&self) -> usize {
        self.shape.len()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.shape[axis] - 1) as f64
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.shape[axis] {
            self.hi[axis]
        } else {
            self.lo[axis] + i as f64 * self.spacing(axis)
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn unflatten(&self, mut flat: usize, idx: &mut [usize]) {
        for axis in (0..self.shape.len()).rev() {
            idx[axis] = flat % self.shape[axis];
            flat /= self.shape[axis];
        }
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (i, s)| acc * s + i)
    }

    /// Multilinear interpolation; points outside the box are clamped onto it.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let d = self.shape.len();
        let mut base = [0usize; 4];
        let mut frac = [0.0f64; 4];
        for axis in 0..d {
            let h = self.spacing(axis);
            let t = ((x[axis] - self.lo[axis]) / h).clamp(0.0, (self.shape[axis] - 1) as f64);
            let i = (math::floor(t) as usize).min(self.shape[axis] - 2);
            base[axis] = i;
            frac[axis] = t - i as f64;
        }
        let mut acc = 0.0;
        let mut idx = [0usize; 4];
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for axis in 0..d {
                let up = (corner >> (d - 1 - axis)) & 1;
                idx[axis] = base[axis] + up;
                w *= if up == 1 { frac[axis] } else { 1.0 - frac[axis] };
            }
            if w != 0.0 {
                acc += w * self.values[self.flatten(&idx[..d])];
            }
        }
        acc
    }
}

impl Field for GridFn {
    fn dim(&self) -> usize {
        self.shape.len() / 2
    }

    fn eval(&self, z: &[Complex64]) -> f64 {
        let mut x = [0.0; 4];
        for (k, w) in z.iter().enumerate() {
            x[2 * k] = w.re;
            x[2 * k + 1] = w.im;
        }
        self.interpolate(&x[..self.shape.len()])
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::Lipschitz
    }
}

/// Discrete mollifier on a grid stencil: offsets within `|x| < δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub delta: f64,
    /// Half-width of the stencil in grid steps, per axis.
    pub half: Vec<usize>,
    /// Weights over the full stencil box, row-major; zero outside the ball.
    pub weights: Vec<f64>,
}

impl Kernel {
    fn center(&self) -> usize {
        self.weights.len() / 2
    }

    /// Sum of the off-center weights in storage order, then the center.
    pub fn mass(&self) -> f64 {
        let c = self.center();
        let others: f64 = self.weights.iter().enumerate().filter(|(i, _)| *i != c).map(|(_, w)| *w).sum();
        others + self.weights[c]
    }
}

fn bump(s: f64) -> f64 {
    if s < 1.0 {
        math::exp(-1.0 / (1.0 - s))
    } else {
        0.0
    }
}

/// The normalizing constant is computed by the same grid quadrature; the
/// center weight absorbs the rounding so that [`Kernel::mass`] is exactly 1.
pub fn kernel(delta: f64, spacing: &[f64]) -> Result<Kernel> {
    let hmax = spacing.iter().copied().fold(0.0, f64::max);
    if !(delta > 0.0) || spacing.iter().any(|h| !(*h > 0.0)) {
        return Err(invalid("kernel needs positive delta and spacing"));
    }
    if delta < 2.0 * hmax {
        return Err(Error::Resolution { delta, spacing: hmax });
    }
    let half: Vec<usize> = spacing.iter().map(|h| math::ceil(delta / h) as usize).collect();
    let widths: Vec<usize> = half.iter().map(|m| 2 * m + 1).collect();
    let len = widths.iter().product::<usize>();
    let mut raw = Vec::with_capacity(len);
    for flat in 0..len {
        let mut rem = flat;
        let mut s = 0.0;
        for axis in (0..widths.len()).rev() {
            let i = rem % widths[axis];
            rem /= widths[axis];
            let x = (i as f64 - half[axis] as f64) * spacing[axis] / delta;
            s += x * x;
        }
        raw.push(bump(s));
    }
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let c = len / 2;
    let others: f64 = weights.iter().enumerate().filter(|(i, _)| *i != c).map(|(_, w)| *w).sum();
    weights[c] = 1.0 - others;
    Ok(Kernel { delta, half, weights })
}

/// Convolution value at output index `idx`, given in input-grid indices.
pub fn mollify_point(grid: &GridFn, k: &Kernel, idx: &[usize]) -> f64 {
    let d = grid.shape.len();
    let widths: Vec<usize> = k.half.iter().map(|m| 2 * m + 1).collect();
    let mut acc = 0.0;
    let mut src = [0usize; 4];
    for (flat, &w) in k.weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let mut rem = flat;
        for axis in (0..d).rev() {
            let off = rem % widths[axis];
            rem /= widths[axis];
            // f ∗ ρ(x) = Σ ρ(y) f(x − y)
            src[axis] = idx[axis] + k.half[axis] - off;
        }
        acc += w * grid.values[grid.flatten(&src[..d])];
    }
    acc
}

/// Output grid of the mollification: the nodes at distance ≥ δ from the
/// input box boundary along every axis.
pub fn mollified_shape(grid: &GridFn, k: &Kernel) -> Result<(Vec<usize>, GridFn)> {
    let d = grid.shape.len();
    let mut margin = Vec::with_capacity(d);
    let mut lo = Vec::with_capacity(d);
    let mut hi = Vec::with_capacity(d);
    let mut shape = Vec::with_capacity(d);
    for axis in 0..d {
        let m = k.half[axis];
        if 2 * m + 2 > grid.shape[axis] {
            return Err(Error::GridTooSmall { axis, points: grid.shape[axis], needed: 2 * m + 2 });
        }
        margin.push(m);
        lo.push(grid.coord(axis, m));
        hi.push(grid.coord(axis, grid.shape[axis] - 1 - m));
        shape.push(grid.shape[axis] - 2 * m);
    }
    Ok((margin, GridFn { lo, hi, shape, values: Vec::new() }))
}

/// `f ∗ ρ_δ` on the shrunken box `U_δ`.
pub fn mollify(grid: &GridFn, delta: f64) -> Result<GridFn> {
    mollify_in(&Serial, grid, delta)
}

pub fn mollify_in<E: Executor>(exec: &E, grid: &GridFn, delta: f64) -> Result<GridFn> {
    grid.validate()?;
    let spacing: Vec<f64> = (0..grid.real_dim()).map(|a| grid.spacing(a)).collect();
    let k = kernel(delta, &spacing)?;
    let (margin, mut out) = mollified_shape(grid, &k)?;
    let len = out.shape.iter().product::<usize>();
    let d = out.shape.len();
    out.values = exec.map(len, |flat| {
        let mut oi = [0usize; 4];
        out.unflatten(flat as usize, &mut oi[..d]);
        for a in 0..d {
            oi[a] += margin[a];
        }
        Ok(mollify_point(grid, &k, &oi[..d]))
    })?;
    Ok(out)
}
