//! Seeded multi-start search. Each start is refined by a feasible pattern
//! search followed by a (1+1) evolution strategy with Cholesky covariance
//! adaptation, which follows the narrow nonsmooth valleys that coordinate
//! polls cannot (polyhedral norms produce many of them).
//!
//! Sample `i` is drawn from its own generator `task_rng(seed, i)`, so a run
//! with budget `2B` sees every sample of the run with budget `B`. Starts for
//! refinement are the best few samples of each dyadic prefix
//! `B, B/2, B/4, …, 1`; the start set for `B` is therefore contained in the one
//! for `2B` and the reported minimum can only go down when the budget doubles.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{self, SampleRng};

/// A feasible-set description plus objective over `ℝ^dim`.
pub(crate) trait Landscape {
    fn dim(&self) -> usize;
    fn sample(&self, g: &mut SampleRng) -> Vec<f64>;
    /// Moves `x` onto the feasible set; `Ok(false)` if that is impossible.
    fn project(&self, x: &mut [f64]) -> Result<bool>;
    /// Objective value at a projected point and whether any quadrature
    /// behind it stopped short of its tolerance.
    fn objective(&self, x: &[f64]) -> Result<(f64, bool)>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchOptions {
    pub budget: usize,
    pub seed: u64,
    pub refine_starts: usize,
    pub refine_iters: usize,
    pub initial_step: f64,
    pub min_step: f64,
    /// Extra seeded random poll directions per sweep, on top of the
    /// coordinate directions.
    pub random_polls: usize,
    /// Objective evaluations per start for the evolution-strategy stage.
    pub es_evals: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: 4096,
            seed: 0,
            refine_starts: 5,
            refine_iters: 200,
            initial_step: 0.1,
            min_step: 1e-10,
            random_polls: 2,
            es_evals: 1500,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SearchOutcome {
    pub value: f64,
    pub argmin: Vec<f64>,
    pub feasible: usize,
}

struct Probe {
    index: usize,
    value: f64,
    x: Vec<f64>,
    warned: bool,
}

pub(crate) fn minimize<L: Landscape>(land: &L, opts: &SearchOptions) -> Result<Option<SearchOutcome>> {
    if opts.budget == 0 {
        return Err(invalid("budget must be at least 1"));
    }
    let mut probes: Vec<Probe> = Vec::new();
    for i in 0..opts.budget {
        let mut g = rng::task_rng(opts.seed, i as u64);
        let mut x = land.sample(&mut g);
        if !land.project(&mut x)? {
            continue;
        }
        let (value, warned) = land.objective(&x)?;
        if value.is_nan() {
            continue;
        }
        probes.push(Probe { index: i, value, x, warned });
    }
    if probes.is_empty() {
        return Ok(None);
    }
    let feasible = probes.len();

    let mut starts: Vec<usize> = Vec::new();
    let mut level = opts.budget;
    loop {
        let mut prefix: Vec<&Probe> = probes.iter().filter(|p| p.index < level).collect();
        prefix.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.index.cmp(&b.index)));
        for p in prefix.into_iter().take(opts.refine_starts) {
            if !starts.contains(&p.index) {
                starts.push(p.index);
            }
        }
        if level <= 1 {
            break;
        }
        level /= 2;
    }
    starts.sort_unstable();

    let mut best = probes
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value).then(a.index.cmp(&b.index)))
        .map(|p| (p.value, p.x.clone(), p.warned))
        .expect("nonempty");
    for s in starts {
        let p = probes.iter().find(|p| p.index == s).expect("start is a probe");
        let mut g = rng::task_rng(rng::sub_seed(opts.seed, 0x7061_7474), s as u64);
        let (v, x, w) = pattern_search(land, p.x.clone(), p.value, p.warned, opts, &mut g)?;
        let (v, x, w) = evolve(land, x, v, w, opts, &mut g)?;
        if v < best.0 {
            best = (v, x, w);
        }
    }
    Ok(Some(SearchOutcome { value: best.0, argmin: best.1, feasible }))
}

fn pattern_search<L: Landscape>(
    land: &L,
    mut x: Vec<f64>,
    mut fx: f64,
    mut warned: bool,
    opts: &SearchOptions,
    g: &mut SampleRng,
) -> Result<(f64, Vec<f64>, bool)> {
    let d = land.dim();
    let mut step = opts.initial_step;
    let mut trial = alloc::vec![0.0; d];
    let mut dir = alloc::vec![0.0; d];
    for _ in 0..opts.refine_iters {
        let mut improved = false;
        for k in 0..d + opts.random_polls {
            if k < d {
                dir.iter_mut().for_each(|v| *v = 0.0);
                dir[k] = 1.0;
            } else {
                let mut n2 = 0.0;
                for v in dir.iter_mut() {
                    *v = rng::normal(g);
                    n2 += *v * *v;
                }
                let n = crate::math::sqrt(n2).max(1e-300);
                dir.iter_mut().for_each(|v| *v /= n);
            }
            for sign in [1.0, -1.0] {
                for ((t, xv), dv) in trial.iter_mut().zip(&x).zip(&dir) {
                    *t = xv + sign * step * dv;
                }
                if !land.project(&mut trial)? {
                    continue;
                }
                let (ft, w) = land.objective(&trial)?;
                if ft < fx {
                    fx = ft;
                    warned = w;
                    x.copy_from_slice(&trial);
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < opts.min_step {
                break;
            }
        }
    }
    Ok((fx, x, warned))
}

/// (1+1)-CMA-ES with rank-one Cholesky updates of the search covariance.
fn evolve<L: Landscape>(
    land: &L,
    mut x: Vec<f64>,
    mut fx: f64,
    mut warned: bool,
    opts: &SearchOptions,
    g: &mut SampleRng,
) -> Result<(f64, Vec<f64>, bool)> {
    let n = land.dim();
    if opts.es_evals == 0 || n == 0 {
        return Ok((fx, x, warned));
    }
    let nf = n as f64;
    let damping = 1.0 + nf / 2.0;
    let p_target = 2.0 / 11.0;
    let c_p = 1.0 / 12.0;
    let c_cov = 2.0 / (nf * nf + 6.0);
    let p_thresh = 0.44;
    let mut p_succ = p_target;
    let mut sigma = 0.1 * opts.initial_step;
    // Lower-triangular factor, row-major.
    let mut a = alloc::vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = 1.0;
    }
    let mut z = alloc::vec![0.0; n];
    let mut az = alloc::vec![0.0; n];
    let mut trial = alloc::vec![0.0; n];
    for _ in 0..opts.es_evals {
        for v in z.iter_mut() {
            *v = rng::normal(g);
        }
        for i in 0..n {
            az[i] = (0..=i).map(|j| a[i * n + j] * z[j]).sum();
            trial[i] = x[i] + sigma * az[i];
        }
        let ok = land.project(&mut trial)?;
        let better = if ok {
            let (ft, w) = land.objective(&trial)?;
            // Ties are accepted so the walk can drift along plateaus.
            if ft <= fx {
                fx = ft;
                warned = w;
                x.copy_from_slice(&trial);
                true
            } else {
                false
            }
        } else {
            false
        };
        p_succ = (1.0 - c_p) * p_succ + if better { c_p } else { 0.0 };
        sigma *= crate::math::exp((p_succ - p_target) / (damping * (1.0 - p_target)));
        if better && p_succ < p_thresh {
            let z2: f64 = z.iter().map(|v| v * v).sum();
            if z2 > 0.0 {
                let s = crate::math::sqrt(1.0 - c_cov);
                let t = s / z2 * (crate::math::sqrt(1.0 + c_cov * z2 / (1.0 - c_cov)) - 1.0);
                for i in 0..n {
                    for j in 0..=i {
                        a[i * n + j] = s * a[i * n + j] + t * az[i] * z[j];
                    }
                }
            }
        }
        if sigma < opts.min_step {
            break;
        }
    }
    Ok((fx, x, warned))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;

    /// Minimize (x-0.3)² + |y+0.2| over the unit disc.
    struct Bowl;

    impl Landscape for Bowl {
        fn dim(&self) -> usize {
            2
        }
        fn sample(&self, g: &mut SampleRng) -> Vec<f64> {
            alloc::vec![rng::normal(g), rng::normal(g)]
        }
        fn project(&self, x: &mut [f64]) -> Result<bool> {
            let n = math::hypot(x[0], x[1]);
            if n > 1.0 {
                x[0] /= n;
                x[1] /= n;
            }
            Ok(true)
        }
        fn objective(&self, x: &[f64]) -> Result<(f64, bool)> {
            Ok(((x[0] - 0.3) * (x[0] - 0.3) + (x[1] + 0.2).abs(), false))
        }
    }

    #[test]
    fn finds_nonsmooth_minimum() {
        let out = minimize(&Bowl, &SearchOptions { budget: 64, seed: 3, ..Default::default() }).unwrap().unwrap();
        assert!(out.value < 1e-9, "{}", out.value);
    }

    #[test]
    fn doubling_budget_never_increases_the_minimum() {
        let mut prev = f64::INFINITY;
        for b in [16, 32, 64, 128, 256] {
            let opts = SearchOptions { budget: b, seed: 11, refine_iters: 3, ..Default::default() };
            let v = minimize(&Bowl, &opts).unwrap().unwrap().value;
            assert!(v <= prev, "budget {b}: {v} > {prev}");
            prev = v;
        }
    }
}
