//! Acceptance suite: one PASS/FAIL line per criterion, written straight to
//! stdout so it shows without `--nocapture`.

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use grand_morrey::certify::{
    certify_boundedness, generate_family, maximal_dominance_failures, modified_maximal_lp_ratio, verify_dominance,
    verify_hedberg, verify_weak_type, CertParams, FamilySpec, GrandPair, Pairing, TheoremId,
};
use grand_morrey::cli;
use grand_morrey::norms::{grand_lebesgue_norm, EpsilonGrid, GrandEvaluator, GridFunction, NormSpec};
use grand_morrey::operators::{Operator, OperatorSpec};
use grand_morrey::scales::{
    sobolev_exponent, AdmissibilityMode, AuxFn, EpsilonRange, FreeConstants, GrandParams, MorreyVariant,
    PotentialSetup, ScaleSpec,
};
use grand_morrey::space::{presets, QuasimetricSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXACT: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn line(n: usize, title: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed < l);
    let pass = out.pass && in_time;
    let limit = limit.map_or(String::new(), |l| format!(" (limit {}s)", l.as_secs()));
    let mut stdout = std::io::stdout().lock();
    writeln!(
        stdout,
        "{} criterion {n}: {title} [{:.1}s{limit}] {}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        out.detail
    )
    .unwrap();
    pass
}

fn random_function(rng: &mut ChaCha8Rng, n: usize) -> GridFunction {
    let values = (0..n)
        .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(-1.0..1.0) * 10f64.powf(rng.gen_range(-2.0..1.0)) })
        .collect();
    GridFunction::new(values).unwrap()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Brute-force minimal quasimetric constants.
fn brute_constants(s: &QuasimetricSpace) -> (f64, f64) {
    let n = s.len();
    let (mut c_t, mut c_s) = (0.0f64, 0.0f64);
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            c_s = c_s.max(s.dist(x, y) / s.dist(y, x));
            for z in 0..n {
                let den = s.dist(x, z) + s.dist(z, y);
                if den > 0.0 {
                    c_t = c_t.max(s.dist(x, y) / den);
                }
            }
        }
    }
    (c_t, c_s)
}

fn geometry() -> Outcome {
    let mut failures = Vec::new();
    let spaces = presets::shipped();
    for s in &spaces {
        let c = s.quasimetric_constants();
        let (bt, bs) = brute_constants(s);
        let (x, y, z) = c.triangle_witness;
        let (u, v) = c.symmetry_witness;
        if !rel_close(c.c_t, bt, EXACT) || !rel_close(c.c_s, bs, EXACT) {
            failures.push(format!("{}: constants ({}, {}) vs brute force ({bt}, {bs})", s.name(), c.c_t, c.c_s));
        }
        if !rel_close(s.dist(x, y), c.c_t * (s.dist(x, z) + s.dist(z, y)), EXACT)
            || !rel_close(s.dist(u, v), c.c_s * s.dist(v, u), EXACT)
        {
            failures.push(format!("{}: witnesses do not attain the constants", s.name()));
        }
        let d = s.doubling_constant();
        let nested = s.nested_ball_bound_check(d.c_d);
        if !nested.pass {
            failures.push(format!("{}: nested-ball bound worst ratio {}", s.name(), nested.worst_ratio));
        }
        let chain = s.ball_chain_check(&c);
        if chain.failures > 0 || chain.triples_checked == 0 {
            failures.push(format!("{}: ball chain {} failures of {}", s.name(), chain.failures, chain.triples_checked));
        }
    }
    Outcome { pass: failures.is_empty() && spaces.len() >= 5, detail: format!("{} spaces; {failures:?}", spaces.len()) }
}

fn norm_specs() -> Vec<NormSpec> {
    let morrey = |variant| NormSpec::Morrey { p: 2.5, lambda: 0.4, variant, range: None };
    vec![
        NormSpec::Lebesgue { p: 1.5 },
        NormSpec::GrandLebesgue { p: 2.0, theta: 1.0 },
        morrey(MorreyVariant::MeasurePower),
        morrey(MorreyVariant::RadiusPower { gamma: 1.0 }),
        morrey(MorreyVariant::Modified { dilation: 3.0 }),
        NormSpec::GrandMorrey {
            p: 2.0,
            lambda: 0.3,
            phi: ScaleSpec::Power { theta: 1.0, scale: 1.0 },
            a: ScaleSpec::Linear { slope: 1.0 },
            variant: MorreyVariant::MeasurePower,
        },
    ]
}

fn norms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = Vec::new();
    let mut checked = 0usize;
    for s in presets::shipped() {
        let prepared: Vec<_> = norm_specs().iter().map(|n| n.prepare(&s).unwrap()).collect();
        for _ in 0..200 {
            let f = random_function(&mut rng, s.len());
            let h = random_function(&mut rng, s.len());
            let bigger = GridFunction::new(f.values().iter().zip(h.values()).map(|(a, b)| a.abs() + b.abs()).collect())
                .unwrap();
            for (k, n) in prepared.iter().enumerate() {
                let v = n.evaluate(&f).unwrap().value;
                for c in [3.7, -0.25] {
                    let vc = n.evaluate(&f.scaled(c)).unwrap().value;
                    if !rel_close(vc, c.abs() * v, EXACT) {
                        failures.push(format!("{} norm {k}: homogeneity {vc} vs {}", s.name(), c.abs() * v));
                    }
                }
                let vb = n.evaluate(&bigger).unwrap().value;
                if vb < v * (1.0 - EXACT) {
                    failures.push(format!("{} norm {k}: monotonicity {vb} < {v}", s.name()));
                }
                checked += 1;
            }
        }
    }

    // lambda = 0, A = 0: a ball below the diameter covers each of these spaces
    for s in [presets::uniform_grid(4), presets::uniform_grid(16), presets::uniform_grid(64), presets::snowflake_grid(16, 0.5)]
    {
        let covering = (0..s.len()).any(|x| s.count_within(x, s.diameter() * (1.0 - 1e-9)) == s.len());
        if !covering {
            failures.push(format!("{}: no covering ball", s.name()));
            continue;
        }
        for theta in [0.5, 1.0, 2.0] {
            let params =
                GrandParams::new(2.0, 0.0, ScaleSpec::Power { theta, scale: 1.0 }, ScaleSpec::Zero, MorreyVariant::MeasurePower)
                    .unwrap();
            let ev = GrandEvaluator::with_default(&s, params).unwrap();
            for _ in 0..20 {
                let f = random_function(&mut rng, s.len());
                let a = ev.norm(&f).unwrap().value;
                let b = grand_lebesgue_norm(&f, &s, 2.0, theta).unwrap().value;
                if !rel_close(a, b, EXACT) {
                    failures.push(format!("{}: grand Morrey {a} vs grand Lebesgue {b}", s.name()));
                }
            }
        }
    }

    // probability spaces: exponents ordered on Lebesgue and measure-normalized Morrey norms
    for s in [presets::uniform_grid(16), presets::uniform_grid(64), presets::snowflake_grid(16, 0.5)] {
        assert!(rel_close(s.total_measure(), 1.0, EXACT));
        for _ in 0..50 {
            let f = random_function(&mut rng, s.len());
            for (p1, p2) in [(1.2, 1.5), (1.5, 2.0), (2.0, 3.5), (1.1, 6.0)] {
                for lambda in [None, Some(0.0), Some(0.5)] {
                    let n = |p| match lambda {
                        None => NormSpec::Lebesgue { p },
                        Some(l) => NormSpec::Morrey { p, lambda: l, variant: MorreyVariant::MeasurePower, range: None },
                    };
                    let a = n(p1).prepare(&s).unwrap().evaluate(&f).unwrap().value;
                    let b = n(p2).prepare(&s).unwrap().evaluate(&f).unwrap().value;
                    if a > b * (1.0 + EXACT) {
                        failures.push(format!("{}: Hölder order fails at ({p1}, {p2}, {lambda:?})", s.name()));
                    }
                }
            }
        }
    }
    let n = failures.len();
    failures.truncate(5);
    Outcome { pass: n == 0, detail: format!("{checked} homogeneity/monotonicity checks, {n} failures {failures:?}") }
}

fn bundles() -> Vec<GrandParams> {
    let pow = |theta| ScaleSpec::Power { theta, scale: 1.0 };
    vec![
        GrandParams::new(2.0, 0.3, pow(1.0), ScaleSpec::Linear { slope: 1.0 }, MorreyVariant::MeasurePower).unwrap(),
        GrandParams::new(3.0, 0.5, pow(2.0), ScaleSpec::Linear { slope: 0.2 }, MorreyVariant::RadiusPower { gamma: 1.0 })
            .unwrap(),
        GrandParams::new(1.5, 0.2, pow(0.5), ScaleSpec::Zero, MorreyVariant::Modified { dilation: 3.0 }).unwrap(),
    ]
}

fn dominance_and_reduction() -> Outcome {
    let s = presets::uniform_grid(16);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    let mut runs = 0;
    for params in bundles() {
        let ev = GrandEvaluator::with_default(&s, params.clone()).unwrap();
        let upper = params.epsilon_range().upper;
        for _ in 0..100 {
            let f = random_function(&mut rng, s.len());
            let sigma = upper * rng.gen_range(1e-3..0.9);
            let sv = sigma + (upper - sigma) * rng.gen_range(0.01..=1.0);
            let rep = verify_dominance(&ev, &f, sigma, sv).unwrap();
            if !rep.pass {
                failures.push(format!("dominance p={} sigma={sigma} s={sv}: {} > {}", params.p, rep.lhs, rep.rhs));
            }
        }
        let family = generate_family(&s, &FamilySpec::Mixed { seed: 5 }).unwrap();
        for op in [OperatorSpec::Identity, OperatorSpec::Maximal, OperatorSpec::RieszGamma { alpha: 0.1, gamma: 1.0 }] {
            let op = Operator::new(op, &s).unwrap();
            let pair = GrandPair {
                params_in: params.clone(),
                params_out: params.clone(),
                pairing: Pairing::Identity,
                sigma: 0.1 * upper,
                grid_nodes: 32,
                refinements: 1,
                sharpen: false,
            };
            let red = pair.verify(&op, &family).unwrap();
            runs += 1;
            if !red.consistent {
                failures.push(format!("reduction p={}: direct {} > assembled {}", params.p, red.direct.ratio, red.assembled));
            }
        }
    }
    Outcome { pass: failures.is_empty(), detail: format!("300 dominance checks, {runs} reductions; {failures:?}") }
}

fn maximal_operators() -> Outcome {
    let mut failures = Vec::new();
    let mut worst_weak = 0.0f64;
    let mut worst_uniformity = 0.0f64;
    for s in presets::shipped() {
        let family = generate_family(&s, &FamilySpec::Mixed { seed: 7 }).unwrap();
        let n = maximal_dominance_failures(&s, &family).unwrap();
        if n > 0 {
            failures.push(format!("{}: Mf < |f| at {n} points", s.name()));
        }
        let n0 = s.quasimetric_constants().n0;
        let weak = verify_weak_type(&s, &family, n0).unwrap();
        worst_weak = worst_weak.max(weak.worst_ratio);
        if !weak.pass {
            failures.push(format!("{}: weak type ratio {}", s.name(), weak.worst_ratio));
        }
        for p in [1.5f64, 2.0, 3.0] {
            let bound = 2.0 * (p / (p - 1.0)).powf(1.0 / p);
            let (r, w) = modified_maximal_lp_ratio(&s, &family, p, n0).unwrap();
            if r > bound * (1.0 + EXACT) {
                failures.push(format!("{}: strong bound at p={p}: {r} > {bound} ({w})", s.name()));
            }
        }
        let grand_family = if s.len() > 16 {
            generate_family(&s, &FamilySpec::PowerProfiles).unwrap()
        } else {
            family
        };
        let rep = certify_boundedness(TheoremId::MaximalGrand, &s, &grand_family, &CertParams::default(), &FreeConstants::default())
            .unwrap();
        let u = rep.structural.uniformity.unwrap();
        worst_uniformity = worst_uniformity.max(u);
        if !(u < 10.0) {
            failures.push(format!("{}: grand ratios for M not uniform, max/min = {u}", s.name()));
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("worst weak-type ratio {worst_weak}, worst max/min {worst_uniformity}; {failures:?}"),
    }
}

fn hedberg() -> Outcome {
    let s = presets::uniform_grid(64);
    let family = generate_family(&s, &FamilySpec::Mixed { seed: 11 }).unwrap();
    let n0 = s.quasimetric_constants().n0;
    let (b, _) = s.growth_constant();
    let mut failures = Vec::new();
    let mut points = 0;
    if !b.is_finite() {
        failures.push("growth constant is not finite".to_string());
    }
    for (p, lambda, alpha) in [(2.0, 0.5, 0.125), (2.0, 0.25, 0.25), (3.0, 0.5, 0.1)] {
        let rep = verify_hedberg(&s, &family, p, lambda, alpha, n0).unwrap();
        points += rep.points_checked;
        if rep.failures > 0 || rep.members_checked == 0 {
            failures.push(format!("({p}, {lambda}, {alpha}): {} failures, worst {}", rep.failures, rep.worst_ratio));
        }
    }
    Outcome { pass: failures.is_empty(), detail: format!("{points} point checks; {failures:?}") }
}

fn exponent_calculus() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut failures = Vec::new();
    for _ in 0..100 {
        let p = rng.gen_range(1.1..5.0);
        let lambda = rng.gen_range(0.0..0.9);
        let gamma = rng.gen_range(0.5..2.0);
        let alpha = (1.0 - lambda) * gamma / p * rng.gen_range(0.05..0.95);
        let q = sobolev_exponent(p, lambda, alpha, gamma).unwrap();
        let back = (1.0 / p - 1.0 / q) * (1.0 - lambda) * gamma;
        if !rel_close(back, alpha, EXACT) {
            failures.push(format!("sobolev ({p}, {lambda}, {alpha}, {gamma}): {back}"));
        }
    }
    let mut admissible = 0;
    let mut attempts = 0;
    while admissible < 100 && attempts < 10_000 {
        attempts += 1;
        let p = rng.gen_range(1.2..4.0);
        let lambda = rng.gen_range(0.0..0.8);
        let gamma = rng.gen_range(0.5..2.0);
        let alpha = (1.0 - lambda) * gamma / p * rng.gen_range(0.05..0.9);
        let theta1 = rng.gen_range(0.5..2.0);
        let slope = rng.gen_range(0.001..0.3);
        let Ok(setup) = PotentialSetup::linear_preset(p, lambda, alpha, gamma, theta1, slope) else { continue };
        if !setup.check_admissibility(AdmissibilityMode::PhiBar).admissible {
            continue;
        }
        admissible += 1;
        for _ in 0..5 {
            let x = setup.delta * rng.gen_range(1e-6..1.0);
            let y = setup.phi_bar(x).unwrap();
            let inv = setup.invert_phi_bar(y).unwrap();
            if !rel_close(inv.x, x, 1e-10) {
                failures.push(format!("phi_bar inverse at x={x}: {}", inv.x));
            }
        }
    }
    if admissible < 100 {
        failures.push(format!("only {admissible} admissible setups"));
    }

    // the corollary presets: A_2(x) = slope x, theta_2 at its threshold
    let setup = PotentialSetup::linear_preset(2.0, 0.5, 0.125, 1.0, 1.0, 0.05).unwrap();
    let near_zero = setup.phi_bar(1e-14).unwrap();
    if !(near_zero.abs() < 1e-11) {
        failures.push(format!("phi_bar(1e-14) = {near_zero}"));
    }
    let grid = EpsilonGrid::with_default(EpsilonRange { upper: setup.delta, closed: true }).unwrap();
    let floor = grid.nodes()[0];
    let e = setup.theta2_threshold();
    let ratios: Vec<f64> = grid
        .nodes()
        .iter()
        .filter(|&&x| x <= 10.0 * floor)
        .map(|&x| setup.aux(AuxFn::Psi, x).unwrap() / x.powf(e))
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    if !(lo > 0.0 && ratios.len() >= 2 && hi / lo - 1.0 < 0.01) {
        failures.push(format!("psi / x^{e} over the last decade: {ratios:?}"));
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("{admissible} admissible setups, psi spread {:.2e}; {failures:?}", hi / lo - 1.0),
    }
}

fn end_to_end() -> Outcome {
    let space = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/grid64.space");
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let mut failures = Vec::new();
    let mut slowest = 0.0f64;
    for id in ["thm3.6", "prop3.9", "thm4.4", "thm4.7", "lemma5.2", "thm5.4"] {
        let theorem = cli::parse_theorem(id).unwrap();
        let name = format!("{}--grid64.report.json", theorem.name());
        let mut bodies = Vec::new();
        for dir in [first.path(), second.path()] {
            let start = Instant::now();
            let args = [
                "gmorrey",
                "--out",
                dir.to_str().unwrap(),
                "certify",
                "run",
                "--theorem",
                id,
                space.to_str().unwrap(),
                "--family",
                "mixed",
                "--seed",
                "1",
            ];
            let code = cli::run(args);
            let secs = start.elapsed().as_secs_f64();
            slowest = slowest.max(secs);
            if code != 0 {
                failures.push(format!("{id}: exit {code}"));
            }
            if secs >= 300.0 {
                failures.push(format!("{id}: {secs:.0}s"));
            }
            bodies.push(std::fs::read(dir.join(&name)).unwrap_or_default());
        }
        if bodies[0].is_empty() || bodies[0] != bodies[1] {
            failures.push(format!("{id}: rerun differs"));
        }
    }
    Outcome { pass: failures.is_empty(), detail: format!("slowest run {slowest:.1}s; {failures:?}") }
}

#[test]
fn acceptance() {
    let secs = |s| Some(Duration::from_secs(s));
    let results = [
        line(1, "geometry suite on the shipped spaces", secs(10), geometry),
        line(2, "norm suite", secs(30), norms),
        line(3, "dominance and reduction", secs(60), dominance_and_reduction),
        line(4, "maximal operators", None, maximal_operators),
        line(5, "Hedberg-type pointwise inequality on grid64", secs(60), hedberg),
        line(6, "exponent calculus", None, exponent_calculus),
        line(7, "end-to-end certifications on grid64", None, end_to_end),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, &p)| !p).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
