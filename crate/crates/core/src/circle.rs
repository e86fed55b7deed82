//! Means over complex circles `θ ↦ a + e^{iθ} b` by the periodic trapezoidal
//! rule with node doubling.

use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cvec::{combine_into, CVec};
use crate::error::{invalid, Error, Result};
use crate::field::Field;
use crate::math;
use crate::spaces::{Family, Space};

/// Refinement controls. Nodes double from 8 until successive values differ
/// by at most `tol` or `max_nodes` is reached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadCtrl {
    pub tol: f64,
    pub max_nodes: usize,
}

impl Default for QuadCtrl {
    fn default() -> Self {
        QuadCtrl { tol: 1e-10, max_nodes: 1 << 16 }
    }
}

impl QuadCtrl {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol >= 0.0) {
            return Err(invalid("quadrature tol must be nonnegative"));
        }
        if self.max_nodes < 8 || !self.max_nodes.is_power_of_two() {
            return Err(invalid("max_nodes must be a power of two >= 8"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleMean {
    pub value: f64,
    pub nodes_used: usize,
    /// Difference between the last two refinement levels.
    pub err_estimate: f64,
    /// False when `max_nodes` was hit before the tolerance was met.
    pub converged: bool,
}

impl CircleMean {
    pub fn warning(&self) -> bool {
        !self.converged
    }
}

#[inline]
fn node(k: usize, n: usize) -> Complex64 {
    let (s, c) = math::sin_cos(math::TAU * k as f64 / n as f64);
    Complex64::new(c, s)
}

/// Trapezoidal mean of a 2π-periodic integrand. `finish` maps the raw mean
/// to the reported value (e.g. the q-th root). The first comparison is the
/// 8-node value against its 4-node subset.
fn refine<G, P>(ctrl: &QuadCtrl, mut g: G, finish: P) -> Result<CircleMean>
where
    G: FnMut(Complex64) -> Result<f64>,
    P: Fn(f64) -> f64,
{
    let mut n = 4;
    let mut sum = 0.0;
    for k in 0..n {
        let v = g(node(k, n))?;
        if v == f64::NEG_INFINITY {
            return Ok(CircleMean { value: v, nodes_used: n, err_estimate: 0.0, converged: true });
        }
        sum += v;
    }
    let mut prev = finish(sum / n as f64);
    loop {
        let m = 2 * n;
        let mut fresh = 0.0;
        for k in (1..m).step_by(2) {
            let v = g(node(k, m))?;
            if v == f64::NEG_INFINITY {
                return Ok(CircleMean { value: v, nodes_used: m, err_estimate: 0.0, converged: true });
            }
            fresh += v;
        }
        sum += fresh;
        n = m;
        let cur = finish(sum / n as f64);
        let err = math::abs(cur - prev);
        if err <= ctrl.tol {
            return Ok(CircleMean { value: cur, nodes_used: n, err_estimate: err, converged: true });
        }
        if n >= ctrl.max_nodes {
            return Ok(CircleMean { value: cur, nodes_used: n, err_estimate: err, converged: false });
        }
        prev = cur;
    }
}

/// `((1/2π) ∫ ‖a + e^{iθ} b‖^q dθ)^{1/q}`.
pub fn power_mean_on_circle(space: &Space, a: &CVec, b: &CVec, q: f64, ctrl: &QuadCtrl) -> Result<CircleMean> {
    a.check_dim(space.dim())?;
    b.check_dim(space.dim())?;
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite);
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(invalid("circle mean exponent must be positive and finite"));
    }
    ctrl.validate()?;
    let mut buf = CVec::zeros(space.dim()).into_inner();
    power_mean_raw(space, a.as_slice(), b.as_slice(), q, ctrl, &mut buf)
}

/// Hot-path variant without argument checks; `buf` has length `dim`.
pub(crate) fn power_mean_raw(
    space: &Space,
    a: &[Complex64],
    b: &[Complex64],
    q: f64,
    ctrl: &QuadCtrl,
    buf: &mut Vec<Complex64>,
) -> Result<CircleMean> {
    let integrand = |w: Complex64, buf: &mut Vec<Complex64>| -> Result<f64> {
        combine_into(a, w, b, buf);
        let n = space.norm_of(buf)?;
        Ok(if q == 1.0 {
            n
        } else if q == 2.0 {
            n * n
        } else {
            math::powf(n, q)
        })
    };
    let finish = |m: f64| {
        if q == 1.0 {
            m
        } else if q == 2.0 {
            math::sqrt(m)
        } else {
            math::powf(m, 1.0 / q)
        }
    };
    if let Some(weights) = sup_weights(space) {
        let cuts = sup_breakpoints(a, b, weights);
        // Two Gauss levels are needed for an error estimate.
        if !cuts.is_empty() && 24 * cuts.len() <= ctrl.max_nodes {
            return piecewise(ctrl, &cuts, |w| integrand(w, buf), finish);
        }
    }
    refine(ctrl, |w| integrand(w, buf), finish)
}

/// Coordinate weights when the norm is a (weighted) maximum of moduli.
fn sup_weights(space: &Space) -> Option<Option<&[f64]>> {
    let spec = space.spec();
    match spec.family {
        Family::Lp | Family::WeightedLp if spec.p.is_infinite() && spec.dim <= MAX_SUP_DIM => {
            Some(spec.weights.as_deref())
        }
        _ => None,
    }
}

/// Above this many coordinates the O(n²) breakpoint set costs more than the
/// trapezoid rule it replaces.
const MAX_SUP_DIM: usize = 16;

/// Angles in `[0, 2π)` where two coordinates of `a + e^{iθ}b` have equal
/// weighted modulus: the only places the sup norm can have a kink. Each
/// squared modulus is `c_k + Re(β_k e^{iθ})`, so every pair crosses at most
/// twice, at closed-form angles.
fn sup_breakpoints(a: &[Complex64], b: &[Complex64], weights: Option<&[f64]>) -> Vec<f64> {
    let w2 = |k: usize| weights.map_or(1.0, |w| w[k] * w[k]);
    let coef: Vec<(f64, Complex64)> = (0..a.len())
        .map(|k| (w2(k) * (a[k].norm_sqr() + b[k].norm_sqr()), a[k].conj() * b[k] * (2.0 * w2(k))))
        .collect();
    let mut cuts = Vec::new();
    for j in 0..coef.len() {
        for k in j + 1..coef.len() {
            let c = coef[j].0 - coef[k].0;
            let beta = coef[j].1 - coef[k].1;
            let m = beta.norm();
            if !(m > 1e-300) || math::abs(c) >= m {
                continue;
            }
            // c + m cos(θ + arg β) = 0
            let base = math::acos(-c / m);
            let phase = math::atan2(beta.im, beta.re);
            for t in [base - phase, -base - phase] {
                let t = t - math::TAU * math::floor(t / math::TAU);
                cuts.push(if t >= math::TAU { 0.0 } else { t });
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| *x - *y <= 1e-15);
    cuts
}

/// Composite Gauss–Legendre over the arcs between consecutive `cuts`
/// (cyclically), doubling the per-arc order until successive totals agree
/// to `ctrl.tol`. Each arc's integrand is smooth, so convergence is fast
/// where the trapezoid rule would stall at second order on the kinks.
fn piecewise<G, P>(ctrl: &QuadCtrl, cuts: &[f64], mut g: G, finish: P) -> Result<CircleMean>
where
    G: FnMut(Complex64) -> Result<f64>,
    P: Fn(f64) -> f64,
{
    let arcs = cuts.len();
    let mut order = 8;
    let mut prev: Option<f64> = None;
    let mut used = 0;
    loop {
        let (xs, ws) = gauss_legendre(order);
        let mut total = 0.0;
        for i in 0..arcs {
            let lo = cuts[i];
            let hi = if i + 1 < arcs { cuts[i + 1] } else { cuts[0] + math::TAU };
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for (x, w) in xs.iter().zip(&ws) {
                let (s, c) = math::sin_cos(mid + half * x);
                let v = g(Complex64::new(c, s))?;
                if v == f64::NEG_INFINITY {
                    return Ok(CircleMean { value: v, nodes_used: used + order, err_estimate: 0.0, converged: true });
                }
                total += half * w * v;
            }
        }
        used += order * arcs;
        let cur = finish(total / math::TAU);
        if let Some(p) = prev {
            let err = math::abs(cur - p);
            if err <= ctrl.tol {
                return Ok(CircleMean { value: cur, nodes_used: used, err_estimate: err, converged: true });
            }
            if used + 2 * order * arcs > ctrl.max_nodes {
                return Ok(CircleMean { value: cur, nodes_used: used, err_estimate: err, converged: false });
            }
        }
        prev = Some(cur);
        order *= 2;
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`, by
/// Newton's method on the Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = alloc::vec![0.0; n];
    let mut ws = alloc::vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let (_, mut x) = math::sin_cos(math::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if math::abs(dx) <= 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        xs[n - 1 - i] = x;
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

/// Plain mean `(1/2π) ∫ f(a + e^{iθ} b) dθ`. A −∞ value anywhere on the
/// circle makes the mean −∞.
pub fn mean_on_circle<F: Field + ?Sized>(f: &F, a: &CVec, b: &CVec, ctrl: &QuadCtrl) -> Result<CircleMean> {
    a.check_dim(f.dim())?;
    b.check_dim(f.dim())?;
    ctrl.validate()?;
    mean_raw(f, a.as_slice(), b.as_slice(), ctrl)
}

pub(crate) fn mean_raw<F: Field + ?Sized>(
    f: &F,
    a: &[Complex64],
    b: &[Complex64],
    ctrl: &QuadCtrl,
) -> Result<CircleMean> {
    let mut buf = alloc::vec![Complex64::new(0.0, 0.0); a.len()];
    refine(
        ctrl,
        |w| {
            combine_into(a, w, b, &mut buf);
            let v = f.eval(&buf);
            if v.is_nan() || v == f64::INFINITY {
                return Err(Error::Evaluation { theta: math::atan2(w.im, w.re) });
            }
            Ok(v)
        },
        |m| m,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;
    use crate::spaces::SpaceSpec;
    use alloc::vec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn orthogonal_pair_in_l2_gives_sqrt_two() {
        let s = Space::lp(2.0, 2).unwrap();
        let a = CVec::basis(2, 0);
        let b = CVec::basis(2, 1);
        let m = power_mean_on_circle(&s, &a, &b, 2.0, &QuadCtrl::default()).unwrap();
        assert!((m.value - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(m.nodes_used, 8);
        assert!(m.converged);
    }

    #[test]
    fn sup_norm_with_dominant_coordinate_is_constant() {
        let s = Space::lp(f64::INFINITY, 2).unwrap();
        let a = CVec::basis(2, 0);
        let b = CVec::from_real(&[0.0, 0.5]);
        let m = power_mean_on_circle(&s, &a, &b, 1.0, &QuadCtrl::default()).unwrap();
        assert!((m.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [8, 16, 64] {
            let (xs, ws) = gauss_legendre(n);
            assert!((ws.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in [2, 6, 2 * n as i32 - 2] {
                let got: f64 = xs.iter().zip(&ws).map(|(x, w)| w * math::powi(*x, deg)).sum();
                assert!((got - 2.0 / (deg + 1) as f64).abs() < 1e-13, "n = {n}, degree {deg}");
            }
        }
    }

    #[test]
    fn sup_norm_arcs_match_a_dense_trapezoid() {
        let spaces = [
            Space::lp(f64::INFINITY, 3).unwrap(),
            Space::new(SpaceSpec::weighted_lp(f64::INFINITY, vec![1.0, 0.5, 2.0])).unwrap(),
        ];
        let a = CVec::new(vec![c(0.6, -0.1), c(0.2, 0.5), c(-0.3, 0.1)]);
        let b = CVec::new(vec![c(-0.4, 0.3), c(0.7, 0.0), c(0.1, -0.35)]);
        for s in &spaces {
            assert!(!sup_breakpoints(a.as_slice(), b.as_slice(), s.spec().weights.as_deref()).is_empty());
            for q in [1.0, 3.0] {
                let m = power_mean_on_circle(s, &a, &b, q, &QuadCtrl::default()).unwrap();
                assert!(m.converged && m.nodes_used < 4096, "{m:?}");
                let n = 1 << 20;
                let dense: f64 =
                    (0..n).map(|k| math::powf(s.norm(&a.add_scaled(node(k, n), &b)).unwrap(), q)).sum::<f64>();
                let want = math::powf(dense / n as f64, 1.0 / q);
                assert!((m.value - want).abs() < 1e-10, "q = {q}: {} vs {want}", m.value);
            }
        }
    }

    #[test]
    fn centered_circle_in_the_plane_has_mean_modulus() {
        let s = Space::lp(2.0, 1).unwrap();
        let w = CVec::new(vec![c(0.3, -1.2)]);
        for q in [0.5, 1.0, 3.0] {
            let m = power_mean_on_circle(&s, &CVec::zeros(1), &w, q, &QuadCtrl::default()).unwrap();
            assert!((m.value - w[0].norm()).abs() < 1e-13, "q = {q}");
        }
    }

    #[test]
    fn mean_of_harmonic_and_subharmonic_functions() {
        let ctrl = QuadCtrl::default();
        let re = FnField::new(1, |z: &[Complex64]| z[0].re);
        let m = mean_on_circle(&re, &CVec::zeros(1), &CVec::from_real(&[1.0]), &ctrl).unwrap();
        assert!(m.value.abs() < 1e-15);

        let sq = FnField::new(1, |z: &[Complex64]| z[0].norm_sqr());
        let a = CVec::new(vec![c(0.7, -0.2)]);
        let b = CVec::new(vec![c(-0.1, 0.4)]);
        let m = mean_on_circle(&sq, &a, &b, &ctrl).unwrap();
        assert!((m.value - (a[0].norm_sqr() + b[0].norm_sqr())).abs() < 1e-14);

        let log = FnField::new(1, |z: &[Complex64]| -math::ln((c(1.0, 0.0) - z[0]).norm()));
        let m = mean_on_circle(&log, &CVec::zeros(1), &CVec::from_real(&[0.5]), &ctrl).unwrap();
        assert!(m.value.abs() < 1e-10);
    }

    #[test]
    fn nan_values_report_the_angle() {
        let bad = FnField::new(1, |z: &[Complex64]| if z[0].re < -0.5 { f64::NAN } else { 0.0 });
        let r = mean_on_circle(&bad, &CVec::zeros(1), &CVec::from_real(&[1.0]), &QuadCtrl::default());
        assert!(matches!(r, Err(Error::Evaluation { .. })));
    }

    #[test]
    fn negative_infinity_propagates() {
        let f = FnField::new(1, |z: &[Complex64]| {
            let r = z[0].norm();
            if r < 1e-12 {
                f64::NEG_INFINITY
            } else {
                math::ln(r)
            }
        });
        // The circle |z - 1| = 1 passes through 0 at θ = π, a node.
        let m = mean_on_circle(&f, &CVec::from_real(&[1.0]), &CVec::from_real(&[1.0]), &QuadCtrl::default()).unwrap();
        assert_eq!(m.value, f64::NEG_INFINITY);
    }

    #[test]
    fn node_budget_exhaustion_is_flagged() {
        let s = Space::lp(f64::INFINITY, 2).unwrap();
        let a = CVec::from_real(&[1.0, 0.0]);
        let b = CVec::from_real(&[0.3, 0.9]);
        let ctrl = QuadCtrl { tol: 1e-15, max_nodes: 16 };
        let m = power_mean_on_circle(&s, &a, &b, 1.0, &ctrl).unwrap();
        assert!(!m.converged);
        assert!(m.err_estimate > ctrl.tol);
        assert_eq!(m.nodes_used, 16);
    }

    #[test]
    fn invalid_controls_are_rejected() {
        let s = Space::lp(2.0, 1).unwrap();
        let z = CVec::zeros(1);
        assert!(power_mean_on_circle(&s, &z, &z, 1.0, &QuadCtrl { tol: 1e-10, max_nodes: 12 }).is_err());
        assert!(power_mean_on_circle(&s, &z, &z, 0.0, &QuadCtrl::default()).is_err());
    }
}
