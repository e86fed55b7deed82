//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//! Tolerances and sizes are pinned here, not taken from library defaults.

use std::time::{Duration, Instant};

use cvxlab::Pool;
use cvxlab_core::domains::{self, DomainSpec, RhoKind};
use cvxlab_core::moduli::{estimate_i, modulus_delta, modulus_h_p};
use cvxlab_core::pshlab::{self, kernel, levi_quadratic_detailed, BoxRegion, GridFn, ScanOptions};
use cvxlab_core::verify::{self, Param, Suite, SuiteParams, VerdictReport};
use cvxlab_core::{power_mean_on_circle, rng, CVec, EstimatorOptions, FnField, QuadCtrl, Space, SpaceSpec};
use num_complex::Complex64;

const QUAD_EXACT_TOL: f64 = 1e-12;
const QUAD_NODES: usize = 8;
const I22_TOL: f64 = 1e-4;
const H1_LINF_MAX: f64 = 1e-9;
const H1_INTEGRAND_TOL: f64 = 1e-9;
const H2_TOL: f64 = 1e-6;
const DELTA_TOL: f64 = 1e-3;
const DELTA_L1_MAX: f64 = 1e-6;
const LEVI_BALL_TOL: f64 = 1e-4;
const LEVI_DEGENERATE_TOL: f64 = 1e-6;
const ORDER_TARGET: f64 = 2.0;
const ORDER_TOL: f64 = 0.3;
const LOG_IDENTITY_TOL: f64 = 1e-5;
const THM51_LAMBDA_MIN: f64 = 0.05;
const THM51_SLACK: f64 = 1e-8;
const WEISSLER_SLACK: f64 = 1e-9;
const MOLLIFY_TOL: f64 = 1e-7;
const REPLAY_TOL: f64 = 1e-10;
const BUDGET: usize = 4096;
const SEED: u64 = 20240601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Criterion = fn(&Pool) -> Outcome;
type Row = (u32, &'static str, Option<f64>, Criterion);

fn within(ran: Duration, limit_s: f64) -> bool {
    ran.as_secs_f64() < limit_s
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn num(rep: &VerdictReport, key: &str) -> f64 {
    match rep.params.get(key) {
        Some(Param::Num(v)) => *v,
        Some(Param::Int(v)) => *v as f64,
        other => panic!("report has no numeric `{key}`: {other:?}"),
    }
}

fn checks_line(rep: &VerdictReport) -> String {
    rep.checks
        .iter()
        .map(|k| format!("{}={}{:+.2e}", k.name, if k.pass { "ok" } else { "FAIL" }, k.worst_margin))
        .collect::<Vec<_>>()
        .join(" ")
}

fn suite(pool: &Pool, s: Suite, p: SuiteParams) -> VerdictReport {
    verify::run_suite(s, &p, SEED, pool).unwrap_or_else(|e| panic!("{}: {e}", s.name()))
}

fn quadrature_exactness(_: &Pool) -> Outcome {
    let ctrl = QuadCtrl { tol: 0.0, max_nodes: QUAD_NODES };
    let mut worst = 0.0f64;
    for n in [1usize, 2, 4] {
        let s = Space::lp(2.0, n).unwrap();
        for i in 0..100 {
            let mut g = rng::task_rng(SEED, i);
            let a = rng::complex_gaussian(&mut g, n);
            let b = rng::complex_gaussian(&mut g, n);
            let m = power_mean_on_circle(&s, &a, &b, 2.0, &ctrl).unwrap();
            assert_eq!(m.nodes_used, QUAD_NODES);
            let want = (a.euclid().powi(2) + b.euclid().powi(2)).sqrt();
            worst = worst.max((m.value - want).abs());
        }
    }
    outcome(worst <= QUAD_EXACT_TOL, format!("max error {worst:.2e} at {QUAD_NODES} nodes"))
}

fn pl_constant_of_hilbert_space(_: &Pool) -> Outcome {
    let s = Space::lp(2.0, 3).unwrap();
    let est = estimate_i(&s, 2.0, 2.0, &EstimatorOptions::new(BUDGET, SEED)).unwrap();
    let err = (est.lambda_estimate - 1.0).abs();
    outcome(err <= I22_TOL, format!("I_2,2 = {:.8}", est.lambda_estimate))
}

fn h1_vanishes_on_sup_norm_plane(_: &Pool) -> Outcome {
    let s = Space::lp(f64::INFINITY, 2).unwrap();
    let opts = EstimatorOptions::new(BUDGET, SEED);
    let mut worst_value = 0.0f64;
    let mut worst_integrand = 0.0f64;
    for eps in [0.25, 0.5, 1.0] {
        let e = modulus_h_p(&s, eps, 1.0, &opts).unwrap();
        worst_value = worst_value.max(e.value);
        for k in 0..256 {
            let t = std::f64::consts::TAU * k as f64 / 256.0;
            let v = e.x.add_scaled(Complex64::from_polar(1.0, t), &e.y);
            worst_integrand = worst_integrand.max((s.norm(&v).unwrap() - 1.0).abs());
        }
    }
    outcome(
        worst_value <= H1_LINF_MAX && worst_integrand <= H1_INTEGRAND_TOL,
        format!("max H1 {worst_value:.2e}, witness integrand deviation {worst_integrand:.2e}"),
    )
}

fn h2_matches_closed_form(_: &Pool) -> Outcome {
    let s = Space::lp(2.0, 3).unwrap();
    let opts = EstimatorOptions::new(BUDGET, SEED);
    let mut worst = 0.0f64;
    for k in 1..=10 {
        let eps = k as f64 / 10.0;
        let v = modulus_h_p(&s, eps, 2.0, &opts).unwrap().value;
        worst = worst.max((v - ((1.0 + eps * eps).sqrt() - 1.0)).abs());
    }
    outcome(worst <= H2_TOL, format!("max error {worst:.2e} over 10 eps"))
}

fn delta_matches_hilbert_and_vanishes_on_l1(_: &Pool) -> Outcome {
    let l2 = Space::lp(2.0, 2).unwrap();
    let opts = EstimatorOptions::new(BUDGET, SEED);
    let mut worst = 0.0f64;
    for eps in [0.5, 1.0, 1.5, 2.0] {
        let v = modulus_delta(&l2, eps, &opts).unwrap().value;
        worst = worst.max((v - (1.0 - (1.0 - eps * eps / 4.0).sqrt())).abs());
    }
    let l1 = modulus_delta(&Space::lp(1.0, 2).unwrap(), 1.0, &opts).unwrap().value;
    outcome(worst <= DELTA_TOL && l1 <= DELTA_L1_MAX, format!("l2 max error {worst:.2e}, l1 delta(1) = {l1:.2e}"))
}

fn levi_of_balls(pool: &Pool) -> Outcome {
    let ball = DomainSpec::ball(&Space::lp(2.0, 3).unwrap(), 1.0, Some(RhoKind::PPower)).unwrap();
    let scan = domains::strict_levi_scan_in(pool, &ball, 50, SEED).unwrap();
    let worst =
        scan.samples.iter().map(|s| s.min_eigenvalue.map_or(f64::INFINITY, |v| (v - 1.0).abs())).fold(0.0f64, f64::max);
    let l4 = DomainSpec::ball(&Space::lp(4.0, 2).unwrap(), 1.0, None).unwrap();
    let flat = domains::levi_report(&l4, &CVec::new(vec![c(1.0, 0.0), c(0.0, 0.0)])).unwrap().min_eigenvalue;
    outcome(
        scan.evaluated == 50 && worst <= LEVI_BALL_TOL && flat.abs() <= LEVI_DEGENERATE_TOL,
        format!("l2^3 max |eig-1| {worst:.2e} over {} points, l4^2 eig at (1,0) {flat:.2e}", scan.evaluated),
    )
}

fn norm2(z: &[Complex64]) -> f64 {
    z.iter().map(|w| w.norm_sqr()).sum()
}

/// `Σ L_jk b_j b̄_k` for `L_jk = ∂²f/∂z_j∂z̄_k`.
fn form(l: &[[Complex64; 2]; 2], b: &[Complex64]) -> f64 {
    let mut s = c(0.0, 0.0);
    for j in 0..2 {
        for k in 0..2 {
            s += l[j][k] * b[j] * b[k].conj();
        }
    }
    s.re
}

type Oracle = fn(&[Complex64]) -> [[Complex64; 2]; 2];
type TestFn = (&'static str, fn(&[Complex64]) -> f64, Oracle);

fn levi_test_functions() -> [TestFn; 3] {
    [
        (
            "exp|z|^2",
            |z| norm2(z).exp(),
            |z| {
                let e = norm2(z).exp();
                let mut l = [[c(0.0, 0.0); 2]; 2];
                for j in 0..2 {
                    for k in 0..2 {
                        l[j][k] = e * (if j == k { c(1.0, 0.0) } else { c(0.0, 0.0) } + z[j].conj() * z[k]);
                    }
                }
                l
            },
        ),
        (
            "|z|^2+Re z1^3+|z1 z2|^2",
            |z| norm2(z) + (z[0] * z[0] * z[0]).re + (z[0] * z[1]).norm_sqr(),
            |z| {
                [
                    [c(1.0 + z[1].norm_sqr(), 0.0), z[0].conj() * z[1]],
                    [z[0] * z[1].conj(), c(1.0 + z[0].norm_sqr(), 0.0)],
                ]
            },
        ),
        (
            "|z1|^4+|z2|^2 cos(Re z1)",
            |z| z[0].norm_sqr().powi(2) + z[1].norm_sqr() * z[0].re.cos(),
            |z| {
                // ∂/∂z = (∂x − i∂y)/2, ∂/∂z̄ = (∂x + i∂y)/2; cos(Re z1) has
                // ∂²/∂z1∂z̄1 = −cos(x1)/4.
                let (x1, s1) = (z[0].re, z[0].re.sin());
                [
                    [c(4.0 * z[0].norm_sqr() - z[1].norm_sqr() * x1.cos() / 4.0, 0.0), -z[1] * s1 / 2.0],
                    [-z[1].conj() * s1 / 2.0, c(x1.cos(), 0.0)],
                ]
            },
        ),
    ]
}

/// Observed order of the raw circle quotient from radii r, r/2, r/4.
fn raw_quotient_orders() -> Outcome {
    let mut worst = 0.0f64;
    let mut orders = Vec::new();
    for (name, f, oracle) in levi_test_functions() {
        let field = FnField::new(2, f);
        for i in 0..5 {
            let mut g = rng::task_rng(SEED, i);
            let a = rng::complex_gaussian(&mut g, 2).scaled_real(0.5);
            let b = rng::euclidean_unit(&mut g, 2);
            let want = form(&oracle(a.as_slice()), b.as_slice());
            let r = 0.05;
            let det = levi_quadratic_detailed(&field, &a, &b, Some(&[r, r / 2.0, r / 4.0])).unwrap();
            let e: Vec<f64> = det.quotients.iter().map(|q| (q - want).abs()).collect();
            for w in e.windows(2) {
                let p = (w[0] / w[1]).log2();
                worst = worst.max((p - ORDER_TARGET).abs());
                orders.push((name, p));
            }
        }
    }
    let lo = orders.iter().map(|o| o.1).fold(f64::INFINITY, f64::min);
    let hi = orders.iter().map(|o| o.1).fold(f64::NEG_INFINITY, f64::max);
    outcome(worst <= ORDER_TOL, format!("orders in [{lo:.3}, {hi:.3}] over {} estimates", orders.len()))
}

fn log_identity_residual(_: &Pool) -> Outcome {
    let d = DomainSpec::ball(&Space::lp(2.0, 2).unwrap(), 1.0, Some(RhoKind::PPower)).unwrap();
    let (mut rel, mut abs) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let mut g = rng::task_rng(SEED, i);
        let a = domains::interior_point(&d, &mut g).unwrap();
        let b = rng::euclidean_unit(&mut g, 2);
        let id = domains::log_identity(&d, &a, &b).unwrap();
        rel = rel.max(id.relative);
        abs = abs.max(id.residual);
    }
    outcome(rel <= LOG_IDENTITY_TOL, format!("max relative residual {rel:.2e} (absolute {abs:.2e})"))
}

/// Brute-force oracle for I_{2,1}(ℂ): a = 1, b = t·e^{iφ} on a 2-parameter
/// grid, each circle mean computed with a fine trapezoid rule.
fn grid_oracle_i21_line() -> f64 {
    let nodes = 2048;
    let mut best = f64::INFINITY;
    for it in 1..=400 {
        let t = 0.02 * it as f64;
        for ip in 0..8 {
            let b = Complex64::from_polar(t, std::f64::consts::TAU * ip as f64 / 8.0);
            let mean: f64 = (0..nodes)
                .map(|k| (1.0 + Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / nodes as f64) * b).norm())
                .sum::<f64>()
                / nodes as f64;
            best = best.min((mean * mean - 1.0) / (t * t));
        }
    }
    best
}

fn thm51_on_l1(pool: &Pool) -> Outcome {
    let p = SuiteParams {
        space: Some(SpaceSpec::lp(1.0, 2)),
        samples: Some(10_000),
        budget: Some(BUDGET),
        slack: Some(THM51_SLACK),
        ..Default::default()
    };
    let rep = suite(pool, Suite::Thm51, p);
    let lhat = num(&rep, "lambda_hat");
    let oracle = grid_oracle_i21_line();
    outcome(
        rep.pass && lhat > THM51_LAMBDA_MIN && lhat <= oracle + 1e-3,
        format!(
            "lambda_hat {lhat:.5} (C grid oracle {oracle:.5}), worst margin {:.2e}",
            rep.worst_margin.unwrap_or(f64::NAN)
        ),
    )
}

fn weissler_three_spaces(pool: &Pool) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for p_exp in [1.0, 2.0, f64::INFINITY] {
        let params = SuiteParams {
            space: Some(SpaceSpec::lp(p_exp, 3)),
            p: Some(1.5),
            q: Some(3.0),
            r: Some(0.5),
            samples: Some(10_000),
            slack: Some(WEISSLER_SLACK),
            ..Default::default()
        };
        let rep = suite(pool, Suite::Weissler, params);
        pass &= rep.pass && rep.n_samples == 10_000;
        parts.push(format!("l{p_exp}: {:+.2e}", rep.worst_margin.unwrap_or(f64::NAN)));
    }
    outcome(pass, format!("worst margins {}", parts.join(", ")))
}

fn sec6_chain_on_l2(pool: &Pool) -> Outcome {
    let p = SuiteParams {
        space: Some(SpaceSpec::lp(2.0, 2)),
        r: Some(2.0),
        q: Some(2.0),
        samples: Some(10_000),
        budget: Some(BUDGET),
        ..Default::default()
    };
    let rep = suite(pool, Suite::Sec6Chain, p);
    outcome(rep.pass && rep.skipped.is_none(), checks_line(&rep))
}

fn sec7_equiv_on_l1(pool: &Pool) -> Outcome {
    let p = SuiteParams {
        space: Some(SpaceSpec::lp(1.0, 2)),
        p: Some(1.0),
        r: Some(2.0),
        samples: Some(1000),
        budget: Some(BUDGET),
        ..Default::default()
    };
    let rep = suite(pool, Suite::Sec7Equiv, p);
    outcome(rep.pass && rep.skipped.is_none(), checks_line(&rep))
}

fn mollified_abs_re(pool: &Pool) -> Outcome {
    let f = FnField::new(1, |z: &[Complex64]| z[0].re.abs());
    let grid = GridFn::sample(&f, vec![-2.0, -2.0], vec![2.0, 2.0], vec![201, 201]).unwrap();
    let delta = 0.2;
    let k = kernel(delta, &[grid.spacing(0), grid.spacing(1)]).unwrap();
    let mass = k.mass();
    let out = pshlab::mollify_in(pool, &grid, delta).unwrap();
    let region = BoxRegion::new(out.lo.clone(), out.hi.clone()).unwrap();
    let opts = ScanOptions { seed: SEED, tol: MOLLIFY_TOL, ..ScanOptions::default() };
    let scan = pshlab::psh_scan_in(pool, &out, &region, &opts).unwrap();
    outcome(
        mass == 1.0 && scan.pass,
        format!("kernel mass {mass:?}, U_delta shape {:?}, scan worst margin {:+.2e}", out.shape, scan.worst_margin),
    )
}

fn determinism_and_replay(pool: &Pool) -> Outcome {
    let base = SuiteParams { samples: Some(300), budget: Some(512), grid_points: Some(8), ..Default::default() };
    let runs = [
        (Suite::Thm51, SuiteParams { space: Some(SpaceSpec::lp(1.0, 2)), ..base.clone() }),
        (
            Suite::Sec6Chain,
            SuiteParams { space: Some(SpaceSpec::lp(2.0, 2)), r: Some(2.0), q: Some(2.0), ..base.clone() },
        ),
        (
            Suite::Sec7Equiv,
            SuiteParams { space: Some(SpaceSpec::lp(1.0, 2)), p: Some(1.0), r: Some(2.0), ..base.clone() },
        ),
        (
            Suite::Weissler,
            SuiteParams { space: Some(SpaceSpec::lp(2.0, 3)), p: Some(1.5), q: Some(3.0), ..base.clone() },
        ),
        (Suite::KnownFacts, SuiteParams { samples: Some(20), budget: Some(1024), ..Default::default() }),
    ];
    let mut identical = true;
    let mut worst = 0.0f64;
    for (s, p) in runs {
        let first = verify::run_suite(s, &p, SEED, pool).unwrap();
        let again = verify::run_suite(s, &p, SEED, &cvxlab_core::Serial).unwrap();
        let text = serde_json::to_string(&first).unwrap();
        identical &= text == serde_json::to_string(&again).unwrap();
        let parsed: VerdictReport = serde_json::from_str(&text).unwrap();
        if let (Some(m), true) = (parsed.worst_margin, parsed.witness.is_some()) {
            worst = worst.max((verify::replay(&parsed).unwrap() - m).abs());
        }
        for (k, m) in parsed.checks.iter().zip(verify::replay_checks(&parsed).unwrap()) {
            worst = worst.max((m - k.worst_margin).abs());
        }
    }
    outcome(identical && worst <= REPLAY_TOL, format!("byte-identical: {identical}, max replay drift {worst:.2e}"))
}

fn main() {
    let pool = Pool::new(0).expect("thread pool");
    let criteria: [Row; 14] = [
        (1, "circle quadrature exact for q = 2 on l2^n", Some(1.0), quadrature_exactness),
        (2, "I_2,2(l2^3) = 1", Some(10.0), pl_constant_of_hilbert_space),
        (3, "H_1 vanishes on l_inf^2", Some(5.0), h1_vanishes_on_sup_norm_plane),
        (4, "H_2(l2^3) closed form", Some(5.0), h2_matches_closed_form),
        (5, "delta(l2^2) closed form, delta(l1^2)(1) = 0", Some(10.0), delta_matches_hilbert_and_vanishes_on_l1),
        (6, "Levi eigenvalues of l2^3 and l4^2 balls", Some(10.0), levi_of_balls),
        (7, "raw Levi quotient converges at order 2", None, |_| raw_quotient_orders()),
        (8, "-log|rho| identity on the l2^2 ball", None, log_identity_residual),
        (9, "thm51 on l1^2", Some(60.0), thm51_on_l1),
        (10, "weissler (1.5, 3), r = 0.5 on l1^3, l2^3, l_inf^3", Some(60.0), weissler_three_spaces),
        (11, "sec6_chain on l2^2, r = q = 2", Some(120.0), sec6_chain_on_l2),
        (12, "sec7_equiv on l1^2, p = 1, r = 2", Some(120.0), sec7_equiv_on_l1),
        (13, "mollified |Re z| is psh on U_delta", Some(30.0), mollified_abs_re),
        (14, "determinism and replay", None, determinism_and_replay),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = Vec::new();
    for (id, name, limit, run) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let out = run(&pool);
        let ran = start.elapsed();
        let fast = limit.is_none_or(|l| within(ran, l));
        let pass = out.pass && fast;
        let budget = limit.map(|l| format!(" / {l:.0} s")).unwrap_or_default();
        println!(
            "[{}] criterion {id:>2}: {name} — {} ({:.2} s{budget})",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            ran.as_secs_f64()
        );
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
