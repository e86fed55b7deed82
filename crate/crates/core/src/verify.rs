//! Verification suites: seeded searches for counterexamples to the exact
//! inequalities, with every worst case serialized as a replayable witness.
//!
//! Estimators return upper bounds of infima, so a passing suite is evidence,
//! not a certificate.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circle::{power_mean_raw, QuadCtrl};
use crate::cvec::CVec;
use crate::domains::{self, BallConfig, DomainSpec, RhoKind};
use crate::error::{invalid, Error, Result};
use crate::exec::Executor;
use crate::math;
use crate::moduli::{self, EstimatorOptions, ModulusKind};
use crate::rng;
use crate::spaces::{Space, SpaceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Thm51,
    Sec6Chain,
    Sec7Equiv,
    Weissler,
    KnownFacts,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Thm51, Suite::Sec6Chain, Suite::Sec7Equiv, Suite::Weissler, Suite::KnownFacts];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Thm51 => "thm51",
            Suite::Sec6Chain => "sec6_chain",
            Suite::Sec7Equiv => "sec7_equiv",
            Suite::Weissler => "weissler",
            Suite::KnownFacts => "known_facts",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    /// margin = value − target
    AtLeast,
    /// margin = target − value
    AtMost,
    /// margin = −|value − target|
    Near,
}

impl Sense {
    fn margin(self, value: f64, target: f64) -> f64 {
        match self {
            Sense::AtLeast => value - target,
            Sense::AtMost => target - value,
            Sense::Near => -math::abs(value - target),
        }
    }
}

/// Serialized inputs of one inequality instance. [`Witness::margin`] is the
/// single code path used both by the suites and by replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Witness {
    /// `mean(‖a+e^{iθ}b‖ − 1) − (λ‖b‖² + ‖a‖ − 1)`
    CircleGap { space: SpaceSpec, a: CVec, b: CVec, lambda: f64, quad: QuadCtrl },
    /// `mean_q(a, b) − (‖a‖^r + λ‖b‖^r)^{1/r}`
    PlInequality { space: SpaceSpec, a: CVec, b: CVec, r: f64, q: f64, lambda: f64, quad: QuadCtrl },
    /// `mean_p(x, y) − mean_q(x, r·y)`
    Hypercontractive { space: SpaceSpec, x: CVec, y: CVec, p: f64, q: f64, r: f64, quad: QuadCtrl },
    /// Modulus objective at (x, y) against a target.
    ModulusBound {
        space: SpaceSpec,
        modulus: ModulusKind,
        exponent: Option<f64>,
        eps: f64,
        x: CVec,
        y: CVec,
        target: f64,
        sense: Sense,
        quad: QuadCtrl,
    },
    /// `mean_p(x, y) − (1 + λ‖y‖^r)^{1/r}`
    ConverseLambda { space: SpaceSpec, x: CVec, y: CVec, p: f64, r: f64, lambda: f64, quad: QuadCtrl },
    /// `(C^{−r} t^{1−r} + t)^r − t^r − r/C^r`
    ScalarLemma1 { c: f64, r: f64, t: f64 },
    /// `g(x1) − g(x0)` for `g(x) = ((x+2)^r − 1)/(x+3)^r`, `x0 < x1`
    ScalarLemma2 { r: f64, x0: f64, x1: f64 },
    /// `K − (2·4^{r−1})^{1/r}` with `K = (r/(4^{1−r} λ))^{1/r}`
    KLowerBound { lambda: f64, r: f64 },
    /// PL ratio `(mean_q^r − ‖a‖^r)/‖b‖^r` against a target.
    PlRatio { space: SpaceSpec, a: CVec, b: CVec, r: f64, q: f64, target: f64, sense: Sense, quad: QuadCtrl },
    /// Smallest tangential Levi eigenvalue of a ball at a boundary point.
    LeviEigen { domain: BallConfig, point: CVec, target: f64, sense: Sense },
}

fn power_mean(space: &Space, a: &CVec, b: &CVec, q: f64, quad: &QuadCtrl) -> Result<f64> {
    a.check_dim(space.dim())?;
    b.check_dim(space.dim())?;
    let mut buf = CVec::zeros(space.dim()).into_inner();
    Ok(power_mean_raw(space, a.as_slice(), b.as_slice(), q, quad, &mut buf)?.value)
}

fn k_from_lambda(lambda: f64, r: f64) -> f64 {
    math::powf(r / (math::powf(4.0, 1.0 - r) * lambda), 1.0 / r)
}

fn lemma2(r: f64, x: f64) -> f64 {
    (math::powf(x + 2.0, r) - 1.0) / math::powf(x + 3.0, r)
}

impl Witness {
    pub fn margin(&self) -> Result<f64> {
        match self {
            Witness::CircleGap { space, a, b, lambda, quad } => {
                let s = Space::new(space.clone())?;
                let mean = power_mean(&s, a, b, 1.0, quad)?;
                let nb = s.norm(b)?;
                Ok((mean - 1.0) - (lambda * nb * nb + (s.norm(a)? - 1.0)))
            }
            Witness::PlInequality { space, a, b, r, q, lambda, quad } => {
                let s = Space::new(space.clone())?;
                let mean = power_mean(&s, a, b, *q, quad)?;
                let rhs = math::powf(math::powf(s.norm(a)?, *r) + lambda * math::powf(s.norm(b)?, *r), 1.0 / r);
                Ok(mean - rhs)
            }
            Witness::Hypercontractive { space, x, y, p, q, r, quad } => {
                let s = Space::new(space.clone())?;
                Ok(power_mean(&s, x, y, *p, quad)? - power_mean(&s, x, &y.scaled_real(*r), *q, quad)?)
            }
            Witness::ModulusBound { space, modulus, exponent, x, y, target, sense, quad, .. } => {
                let s = Space::new(space.clone())?;
                let v = moduli::modulus_objective(&s, *modulus, *exponent, x, y, quad)?;
                Ok(sense.margin(v, *target))
            }
            Witness::ConverseLambda { space, x, y, p, r, lambda, quad } => {
                let s = Space::new(space.clone())?;
                let mean = power_mean(&s, x, y, *p, quad)?;
                let e = s.norm(y)?;
                Ok(mean - math::powf(1.0 + lambda * math::powf(e, *r), 1.0 / r))
            }
            Witness::ScalarLemma1 { c, r, t } => {
                let a = math::powf(*c, -r) * math::powf(*t, 1.0 - r);
                Ok(math::power_increment(*t, a, *r) - r / math::powf(*c, *r))
            }
            Witness::ScalarLemma2 { r, x0, x1 } => {
                if !(x1 > x0) {
                    return Err(invalid("scalar lemma 2 witness needs x0 < x1"));
                }
                Ok(lemma2(*r, *x1) - lemma2(*r, *x0))
            }
            Witness::KLowerBound { lambda, r } => {
                Ok(k_from_lambda(*lambda, *r) - math::powf(2.0 * math::powf(4.0, r - 1.0), 1.0 / r))
            }
            Witness::PlRatio { space, a, b, r, q, target, sense, quad } => {
                let s = Space::new(space.clone())?;
                let v = moduli::pl_objective(&s, a, b, *r, *q, quad)?;
                Ok(sense.margin(v, *target))
            }
            Witness::LeviEigen { domain, point, target, sense } => {
                let d = DomainSpec::from_config(domain)?;
                let rep = domains::levi_report(&d, point)?;
                Ok(sense.margin(rep.min_eigenvalue, *target))
            }
        }
    }
}

/// Report parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Int(i64),
    Num(f64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Param {
    fn from(v: f64) -> Self {
        Param::Num(v)
    }
}

impl From<usize> for Param {
    fn from(v: usize) -> Self {
        Param::Int(v as i64)
    }
}

impl From<&str> for Param {
    fn from(v: &str) -> Self {
        Param::Text(v.to_string())
    }
}

impl From<String> for Param {
    fn from(v: String) -> Self {
        Param::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSummary {
    pub name: String,
    pub n_samples: usize,
    pub tolerance: f64,
    pub worst_margin: f64,
    pub witness: Witness,
    pub pass: bool,
    /// Reported but not part of the verdict.
    #[serde(default)]
    pub informational: bool,
}

impl CheckSummary {
    /// Worst of the margins; ties keep the earliest witness.
    pub fn from_witnesses(name: &str, tol: f64, witnesses: Vec<Witness>) -> Result<Self> {
        let n = witnesses.len();
        let mut worst: Option<(f64, Witness)> = None;
        for w in witnesses {
            let m = w.margin()?;
            if m.is_nan() {
                return Err(Error::NonFinite);
            }
            if worst.as_ref().is_none_or(|(b, _)| m < *b) {
                worst = Some((m, w));
            }
        }
        let (worst_margin, witness) = worst.ok_or(Error::NoData)?;
        Ok(CheckSummary {
            name: name.to_string(),
            n_samples: n,
            tolerance: tol,
            worst_margin,
            witness,
            pass: worst_margin >= -tol,
            informational: false,
        })
    }

    /// Margins computed in parallel, reduced in index order.
    pub fn from_tasks<E, F>(exec: &E, name: &str, tol: f64, n: usize, task: F) -> Result<Self>
    where
        E: Executor,
        F: Fn(u64) -> Result<Witness> + Sync + Send,
    {
        let scored = exec.map(n, |i| {
            let w = task(i)?;
            let m = w.margin()?;
            Ok((m, w))
        })?;
        let mut worst: Option<(f64, Witness)> = None;
        for (m, w) in scored {
            if m.is_nan() {
                return Err(Error::NonFinite);
            }
            if worst.as_ref().is_none_or(|(b, _)| m < *b) {
                worst = Some((m, w));
            }
        }
        let (worst_margin, witness) = worst.ok_or(Error::NoData)?;
        Ok(CheckSummary {
            name: name.to_string(),
            n_samples: n,
            tolerance: tol,
            worst_margin,
            witness,
            pass: worst_margin >= -tol,
            informational: false,
        })
    }

    fn informational(mut self) -> Self {
        self.informational = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictReport {
    pub suite: String,
    pub params: BTreeMap<String, Param>,
    pub seed: u64,
    pub n_samples: usize,
    /// Tolerance of the check that decides the verdict.
    pub tolerance: f64,
    pub worst_margin: Option<f64>,
    pub witness: Option<Witness>,
    pub pass: bool,
    /// Reason the suite could not run its checks.
    pub skipped: Option<String>,
    pub checks: Vec<CheckSummary>,
    /// Wall-clock time; only filled in by front ends that measure it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

impl VerdictReport {
    pub fn assemble(suite: Suite, params: BTreeMap<String, Param>, seed: u64, checks: Vec<CheckSummary>) -> Self {
        let n_samples = checks.iter().map(|c| c.n_samples).sum();
        let decisive = checks
            .iter()
            .filter(|c| !c.informational)
            .min_by(|a, b| (a.worst_margin + a.tolerance).total_cmp(&(b.worst_margin + b.tolerance)));
        let (tolerance, worst_margin, witness, pass) = match decisive {
            Some(c) => (c.tolerance, Some(c.worst_margin), Some(c.witness.clone()), c.worst_margin >= -c.tolerance),
            None => (0.0, None, None, false),
        };
        VerdictReport {
            suite: suite.name().to_string(),
            params,
            seed,
            n_samples,
            tolerance,
            worst_margin,
            witness,
            pass,
            skipped: None,
            checks,
            runtime_ms: None,
        }
    }

    pub fn skip(suite: Suite, params: BTreeMap<String, Param>, seed: u64, reason: &str) -> Self {
        VerdictReport {
            suite: suite.name().to_string(),
            params,
            seed,
            n_samples: 0,
            tolerance: 0.0,
            worst_margin: None,
            witness: None,
            pass: false,
            skipped: Some(reason.to_string()),
            checks: Vec::new(),
            runtime_ms: None,
        }
    }
}

pub const REPLAY_TOL: f64 = 1e-10;

/// Re-evaluates the decisive witness and checks it against `worst_margin`.
pub fn replay(report: &VerdictReport) -> Result<f64> {
    let w = report.witness.as_ref().ok_or(Error::NoWitness)?;
    let expected = report.worst_margin.ok_or(Error::NoWitness)?;
    let found = w.margin()?;
    if !(math::abs(found - expected) <= REPLAY_TOL) {
        return Err(Error::ReplayMismatch { expected, found });
    }
    Ok(found)
}

/// Replays every check, returning the recomputed worst margins.
pub fn replay_checks(report: &VerdictReport) -> Result<Vec<f64>> {
    report
        .checks
        .iter()
        .map(|c| {
            let found = c.witness.margin()?;
            if !(math::abs(found - c.worst_margin) <= REPLAY_TOL) {
                return Err(Error::ReplayMismatch { expected: c.worst_margin, found });
            }
            Ok(found)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// parameters

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteParams {
    pub space: Option<SpaceSpec>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<f64>,
    pub samples: Option<usize>,
    pub budget: Option<usize>,
    pub grid_points: Option<usize>,
    pub slack: Option<f64>,
    pub quad: Option<QuadCtrl>,
}

pub const DEFAULT_SLACK: f64 = 1e-8;
pub const DEFAULT_BUDGET: usize = 4096;
/// Multiplier on λ₀ in the unit-ball check: λ̂ overestimates I_{2,1}.
pub const THM51_SAFETY: f64 = 0.9;
/// λ̂ at or below this is treated as "not PL-convex".
pub const PL_FLOOR: f64 = 1e-6;
pub const LEMMA_SLACK: f64 = 1e-12;
pub const LEMMA_GRID: usize = 10_000;

impl SuiteParams {
    fn space(&self) -> Result<Space> {
        Space::new(self.space.clone().ok_or(Error::MissingParameter("space"))?)
    }
    fn need(v: Option<f64>, name: &'static str) -> Result<f64> {
        v.ok_or(Error::MissingParameter(name))
    }
    fn quad(&self) -> QuadCtrl {
        self.quad.unwrap_or_default()
    }
    fn slack(&self) -> f64 {
        self.slack.unwrap_or(DEFAULT_SLACK)
    }
    fn estimator(&self, seed: u64) -> EstimatorOptions {
        EstimatorOptions::new(self.budget.unwrap_or(DEFAULT_BUDGET), seed).with_quad(self.quad())
    }
}

fn base_params(p: &SuiteParams) -> BTreeMap<String, Param> {
    let mut m = BTreeMap::new();
    if let Some(s) = &p.space {
        m.insert("space".to_string(), Param::Text(s.to_string()));
    }
    for (k, v) in [("p", p.p), ("q", p.q), ("r", p.r)] {
        if let Some(v) = v {
            m.insert(k.to_string(), Param::Num(v));
        }
    }
    m.insert("budget".to_string(), p.budget.unwrap_or(DEFAULT_BUDGET).into());
    m.insert("slack".to_string(), p.slack().into());
    m.insert("quad_tol".to_string(), p.quad().tol.into());
    m.insert("quad_max_nodes".to_string(), p.quad().max_nodes.into());
    m
}

/// Unit vector `x` and `y = s·ŷ` with ‖ŷ‖ = 1 and `s` log-uniform in [lo, hi].
fn log_pair(space: &Space, seed: u64, i: u64, lo: f64, hi: f64) -> Result<(CVec, CVec)> {
    let mut g = rng::task_rng(seed, i);
    let x = space.unit_from(&mut g)?;
    let y = space.unit_from(&mut g)?;
    let s = lo * math::powf(hi / lo, rng::uniform(&mut g));
    Ok((x, y.scaled_real(s)))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo * math::powf(hi / lo, k as f64 / (n - 1) as f64)).collect()
}

fn uniform_grid(hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| hi * k as f64 / n as f64).collect()
}

pub fn run_suite<E: Executor>(suite: Suite, params: &SuiteParams, seed: u64, exec: &E) -> Result<VerdictReport> {
    match suite {
        Suite::Thm51 => thm51(params, seed, exec),
        Suite::Sec6Chain => sec6_chain(params, seed, exec),
        Suite::Sec7Equiv => sec7_equiv(params, seed, exec),
        Suite::Weissler => weissler(params, seed, exec),
        Suite::KnownFacts => known_facts(params, seed, exec),
    }
}

// ---------------------------------------------------------------------------
// suites

/// `λ₀ = √(λ̂/4 + 1/4) − 1/2`.
pub fn lambda0(lambda_hat: f64) -> f64 {
    math::sqrt(lambda_hat / 4.0 + 0.25) - 0.5
}

fn thm51<E: Executor>(params: &SuiteParams, seed: u64, exec: &E) -> Result<VerdictReport> {
    let space = params.space()?;
    let spec = space.spec().clone();
    let quad = params.quad();
    let samples = params.samples.unwrap_or(10_000);
    let mut pm = base_params(params);
    pm.insert("samples".into(), samples.into());
    let est = moduli::estimate_i(&space, 2.0, 1.0, &params.estimator(rng::sub_seed(seed, 1)))?;
    let lhat = est.lambda_estimate;
    pm.insert("lambda_hat".into(), lhat.into());
    if lhat <= PL_FLOOR {
        return Ok(VerdictReport::skip(Suite::Thm51, pm, seed, "not_pl_convex"));
    }
    let l0 = lambda0(lhat);
    let lambda = THM51_SAFETY * l0;
    pm.insert("lambda0".into(), l0.into());
    pm.insert("safety_factor".into(), THM51_SAFETY.into());
    let double = DomainSpec::ball(&space, 2.0, Some(RhoKind::NormMinusOne))?;
    let sample_seed = rng::sub_seed(seed, 2);
    let check = CheckSummary::from_tasks(exec, "circle_gap", params.slack(), samples, |i| {
        let mut g = rng::task_rng(sample_seed, i);
        let a = space.unit_from(&mut g)?.scaled_real(2.0 * rng::uniform(&mut g));
        let bh = space.unit_from(&mut g)?;
        let rad = domains::disc_radius(&double, &a, &bh)?;
        let b = bh.scaled_real(rad * rng::uniform(&mut g));
        Ok(Witness::CircleGap { space: spec.clone(), a, b, lambda, quad })
    })?;
    Ok(VerdictReport::assemble(Suite::Thm51, pm, seed, alloc::vec![check]))
}

fn sec6_chain<E: Executor>(params: &SuiteParams, seed: u64, exec: &E) -> Result<VerdictReport> {
    let space = params.space()?;
    let spec = space.spec().clone();
    let r = SuiteParams::need(params.r, "r")?;
    let q = SuiteParams::need(params.q, "q")?;
    if !(r >= 2.0) || !(q > 0.0) {
        return Err(invalid("sec6_chain needs r >= 2 and q > 0"));
    }
    let quad = params.quad();
    let samples = params.samples.unwrap_or(10_000);
    let n = params.grid_points.unwrap_or(10).max(2);
    let opts = params.estimator(rng::sub_seed(seed, 1));
    let mut pm = base_params(params);
    pm.insert("samples".into(), samples.into());
    pm.insert("grid_points".into(), n.into());

    let delta = moduli::modulus_curve_in(exec, &space, ModulusKind::DeltaX, None, &uniform_grid(2.0, n), &opts)?;
    let c = match moduli::fit_power_constant(&delta, r) {
        Ok(c) => c,
        Err(Error::NotUniformlyConvex { .. }) => {
            return Ok(VerdictReport::skip(Suite::Sec6Chain, pm, seed, "not_uniformly_convex"));
        }
        Err(e) => return Err(e),
    };
    pm.insert("c_delta".into(), c.into());

    let grid = uniform_grid(3.0, n);
    let cap = moduli::modulus_curve_in(exec, &space, ModulusKind::BigDeltaQ, Some(q), &grid, &opts)?;
    let cq = match moduli::fit_power_constant(&cap, r) {
        Ok(c) => c,
        Err(Error::NotUniformlyConvex { .. }) => {
            return Ok(VerdictReport::skip(Suite::Sec6Chain, pm, seed, "delta_q_vanishes"));
        }
        Err(e) => return Err(e),
    };
    let lambda_q = 1f64.min(r / math::powf(cq, r)).min(moduli::tail_bound(r));
    pm.insert("c_q".into(), cq.into());
    pm.insert("lambda_q".into(), lambda_q.into());

    let mut checks = Vec::new();
    let ts = log_grid(1e-3, 1e3, LEMMA_GRID);
    checks.push(CheckSummary::from_witnesses(
        "scalar_lemma_1",
        LEMMA_SLACK,
        ts.iter().map(|&t| Witness::ScalarLemma1 { c: cq, r, t }).collect(),
    )?);
    let xs = log_grid(1e-3, 1e3, LEMMA_GRID);
    checks.push(CheckSummary::from_witnesses(
        "scalar_lemma_2",
        LEMMA_SLACK,
        xs.windows(2).map(|w| Witness::ScalarLemma2 { r, x0: w[0], x1: w[1] }).collect(),
    )?);
    // Envelope values come from the witness of the point that set them.
    let dom: Vec<Witness> = (0..grid.len())
        .map(|i| {
            let src = (i..grid.len()).find(|&j| cap.points[j].value == cap.values[i]).unwrap_or(i);
            let p = &cap.points[src];
            Witness::ModulusBound {
                space: spec.clone(),
                modulus: ModulusKind::BigDeltaQ,
                exponent: Some(q),
                eps: grid[i],
                x: p.x.clone(),
                y: p.y.clone(),
                target: math::powf(grid[i] / cq, r),
                sense: Sense::AtLeast,
                quad,
            }
        })
        .collect();
    checks.push(CheckSummary::from_witnesses("delta_q_domination", params.slack(), dom)?);
    let pair_seed = rng::sub_seed(seed, 2);
    checks.push(CheckSummary::from_tasks(exec, "pl_inequality", params.slack(), samples, |i| {
        let (a, b) = log_pair(&space, pair_seed, i, 1e-2, 1e2)?;
        Ok(Witness::PlInequality { space: spec.clone(), a, b, r, q, lambda: lambda_q, quad })
    })?);
    Ok(VerdictReport::assemble(Suite::Sec6Chain, pm, seed, checks))
}

fn sec7_equiv<E: Executor>(params: &SuiteParams, seed: u64, exec: &E) -> Result<VerdictReport> {
    let space = params.space()?;
    let spec = space.spec().clone();
    let p = SuiteParams::need(params.p, "p")?;
    let r = SuiteParams::need(params.r, "r")?;
    if !(r >= 2.0) || !(p > 0.0) {
        return Err(invalid("sec7_equiv needs r >= 2 and p > 0"));
    }
    let quad = params.quad();
    let samples = params.samples.unwrap_or(1000);
    let n = params.grid_points.unwrap_or(10).max(2);
    let opts = params.estimator(rng::sub_seed(seed, 1));
    let mut pm = base_params(params);
    pm.insert("samples".into(), samples.into());
    pm.insert("grid_points".into(), n.into());

    let est = moduli::estimate_i(&space, r, p, &opts)?;
    let lhat = est.lambda_estimate;
    pm.insert("lambda_hat".into(), lhat.into());
    if lhat <= PL_FLOOR {
        return Ok(VerdictReport::skip(Suite::Sec7Equiv, pm, seed, "not_pl_convex"));
    }
    let k = k_from_lambda(lhat, r);
    pm.insert("k".into(), k.into());
    let mut checks = Vec::new();
    if lhat <= 1.0 {
        checks.push(CheckSummary::from_witnesses(
            "k_lower_bound",
            1e-9,
            alloc::vec![Witness::KLowerBound { lambda: lhat, r }],
        )?);
    }
    let grid = uniform_grid(1.0, n);
    let h = moduli::modulus_curve_in(exec, &space, ModulusKind::Hp, Some(p), &grid, &opts)?;
    let forward: Vec<Witness> = (0..grid.len())
        .map(|i| {
            let pt = &h.points[i];
            Witness::ModulusBound {
                space: spec.clone(),
                modulus: ModulusKind::Hp,
                exponent: Some(p),
                eps: grid[i],
                x: pt.x.clone(),
                y: pt.y.clone(),
                target: math::powf(grid[i] / k, r),
                sense: Sense::AtLeast,
                quad,
            }
        })
        .collect();
    checks.push(CheckSummary::from_witnesses("forward_domination", params.slack(), forward)?);

    // K_p = max(1, max_ε (ε^r / H(ε))^{1/(r+1)}), λ_p = 1/K_p^{r+1}
    let mut kp: f64 = 1.0;
    for (e, v) in grid.iter().zip(&h.values) {
        if !(*v > moduli::ZERO_FLOOR) {
            return Ok(VerdictReport::skip(Suite::Sec7Equiv, pm, seed, "h_p_vanishes"));
        }
        kp = kp.max(math::powf(math::powf(*e, r) / v, 1.0 / (r + 1.0)));
    }
    let lambda_p = 1.0 / math::powf(kp, r + 1.0);
    pm.insert("k_p".into(), kp.into());
    pm.insert("lambda_p".into(), lambda_p.into());
    let eps_max = 1.0 / kp;
    let converse = |name: &str, lo: f64, hi: f64, stream: u64| -> Result<CheckSummary> {
        let s = rng::sub_seed(seed, stream);
        CheckSummary::from_tasks(exec, name, params.slack(), samples, |i| {
            let mut g = rng::task_rng(s, i);
            let x = space.unit_from(&mut g)?;
            let e = lo + (hi - lo) * (1.0 - rng::uniform(&mut g));
            let y = space.unit_from(&mut g)?.scaled_real(e);
            Ok(Witness::ConverseLambda { space: spec.clone(), x, y, p, r, lambda: lambda_p, quad })
        })
    };
    checks.push(converse("converse_restricted", 0.0, eps_max, 2)?);
    checks.push(converse("converse_extended", eps_max, eps_max + 3.0, 3)?.informational());
    Ok(VerdictReport::assemble(Suite::Sec7Equiv, pm, seed, checks))
}

fn weissler<E: Executor>(params: &SuiteParams, seed: u64, exec: &E) -> Result<VerdictReport> {
    let space = params.space()?;
    let spec = space.spec().clone();
    let p = SuiteParams::need(params.p, "p")?;
    let q = SuiteParams::need(params.q, "q")?;
    if !(1.0 < p && p < q && q.is_finite()) {
        return Err(invalid("weissler needs 1 < p < q < inf"));
    }
    let r_max = math::sqrt((p - 1.0) / (q - 1.0));
    let r = params.r.unwrap_or(r_max);
    if !(r > 0.0 && r <= r_max) {
        return Err(invalid("weissler needs 0 < r <= sqrt((p-1)/(q-1))"));
    }
    let quad = params.quad();
    let samples = params.samples.unwrap_or(10_000);
    let mut pm = base_params(params);
    pm.insert("r".into(), r.into());
    pm.insert("samples".into(), samples.into());
    let check = CheckSummary::from_tasks(exec, "hypercontractive", params.slack(), samples, |i| {
        let (x, y) = log_pair(&space, seed, i, 1e-2, 1e2)?;
        Ok(Witness::Hypercontractive { space: spec.clone(), x, y, p, q, r, quad })
    })?;
    Ok(VerdictReport::assemble(Suite::Weissler, pm, seed, alloc::vec![check]))
}

fn known_facts<E: Executor>(params: &SuiteParams, seed: u64, exec: &E) -> Result<VerdictReport> {
    let quad = params.quad();
    let opts = params.estimator(rng::sub_seed(seed, 1));
    let pm = base_params(params);
    let mut checks = Vec::new();

    let linf = Space::lp(f64::INFINITY, 2)?;
    let eps = [0.25, 0.5, 1.0];
    let h = moduli::modulus_curve_in(exec, &linf, ModulusKind::Hp, Some(1.0), &eps, &opts)?;
    let w = h
        .points
        .iter()
        .map(|pt| Witness::ModulusBound {
            space: linf.spec().clone(),
            modulus: ModulusKind::Hp,
            exponent: Some(1.0),
            eps: pt.eps,
            x: pt.x.clone(),
            y: pt.y.clone(),
            target: 0.0,
            sense: Sense::AtMost,
            quad,
        })
        .collect();
    checks.push(CheckSummary::from_witnesses("h1_linf2_vanishes", 1e-9, w)?);

    let l4 = BallConfig { ball_of: SpaceSpec::lp(4.0, 2), rho: None, radius: 1.0, name: None };
    checks.push(CheckSummary::from_witnesses(
        "l4_ball_levi_degenerate",
        1e-6,
        alloc::vec![Witness::LeviEigen {
            domain: l4,
            point: CVec::from_real(&[1.0, 0.0]),
            target: 0.0,
            sense: Sense::Near
        }],
    )?);

    let l2 = Space::lp(2.0, 3)?;
    let est = moduli::estimate_i(&l2, 2.0, 2.0, &opts)?;
    checks.push(CheckSummary::from_witnesses(
        "i22_hilbert_is_one",
        1e-4,
        alloc::vec![Witness::PlRatio {
            space: l2.spec().clone(),
            a: est.a,
            b: est.b,
            r: 2.0,
            q: 2.0,
            target: 1.0,
            sense: Sense::Near,
            quad,
        }],
    )?);

    let ball = BallConfig { ball_of: SpaceSpec::lp(2.0, 3), rho: None, radius: 1.0, name: None };
    let d = DomainSpec::from_config(&ball)?;
    let count = params.samples.unwrap_or(50);
    let levi_seed = rng::sub_seed(seed, 2);
    let scan = domains::strict_levi_scan_in(exec, &d, count, levi_seed)?;
    checks.push(CheckSummary::from_witnesses(
        "l2_ball_strict_levi",
        1e-4,
        alloc::vec![Witness::LeviEigen { domain: ball, point: scan.argmin, target: 1.0, sense: Sense::Near }],
    )?);
    Ok(VerdictReport::assemble(Suite::KnownFacts, pm, seed, checks))
}

/// The unit-ball form of the suite `thm51`.
pub fn unit_ball_uniform_check<E: Executor>(
    space: &SpaceSpec,
    samples: usize,
    seed: u64,
    exec: &E,
) -> Result<VerdictReport> {
    let params = SuiteParams { space: Some(space.clone()), samples: Some(samples), ..Default::default() };
    thm51(&params, seed, exec)
}
