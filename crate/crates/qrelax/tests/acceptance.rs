//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero when a
//! criterion fails, except for lines marked as known deviations.

use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use qrelax::backend::SolverConfig;
use qrelax::bench::compare::{compare, OracleOptions, MONO_TOL};
use qrelax::bench::generate::{generate, GenSpec};
use qrelax::bench::sweep::{figures_sweep, SweepConfig};
use qrelax::bench::verify::{verify, Theorem};
use qrelax::fixtures::{self, Reference, Target};
use qrelax::solve::{compute_alpha, solve_request, AlphaSpec, Request};
use qrelax_core::decompose;
use qrelax_core::lift::SolveStatus;
use qrelax_core::model::QcqpInstance;
use qrelax_core::oracle::{self, SearchBox};
use qrelax_core::relax::{self, AlphaAug, Family, RelaxationSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Line {
    id: &'static str,
    pass: bool,
    known_deviation: bool,
    detail: String,
}

fn line(id: &'static str, pass: bool, detail: impl Into<String>) -> Line {
    Line { id, pass, known_deviation: false, detail: detail.into() }
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn fixture(name: &str) -> QcqpInstance {
    fixtures::load(name).expect("shipped fixture").instance
}

fn evaluate(r: &Reference, tol: f64) -> (bool, String) {
    let inst = fixture(r.fixture);
    let got = match &r.target {
        Target::Oracle => oracle::global_min_default(&inst, oracle::DEFAULT_RESOLUTION).ok().map(|o| o.best_val),
        Target::Bound(req) => {
            let a = r.alpha.as_ref().map(|s| s.resolve(&inst, &cfg()).expect("alpha resolves"));
            solve_request(&inst, *req, a.as_ref(), &cfg()).ok().and_then(|o| o.bound)
        }
    };
    let tol = if r.target == Target::Oracle { tol.min(1e-3) } else { tol };
    let ok = got.is_some_and(|v| (v - r.value).abs() <= tol);
    (ok, format!("{} {} {:?} (ref {})", r.fixture, r.label(), got, r.value))
}

fn reference_line(id: &'static str, fixtures: &[&str], tol: f64, known: bool) -> Line {
    let refs: Vec<Reference> = fixtures::references()
        .into_iter()
        .filter(|r| fixtures.contains(&r.fixture) && r.known_deviation == known)
        .collect();
    let mut bad = Vec::new();
    for r in &refs {
        let (ok, d) = evaluate(r, tol);
        if !ok {
            bad.push(d);
        }
    }
    let detail = if bad.is_empty() {
        format!("{} reference values within {tol:e}", refs.len())
    } else {
        format!("{}/{} off: {}", bad.len(), refs.len(), bad.join("; "))
    };
    Line { id, pass: bad.is_empty(), known_deviation: known, detail }
}

fn c1() -> Line {
    reference_line("1", &["example1", "example2"], 1e-3, false)
}

fn c2() -> Line {
    reference_line("2", &["example3"], 1e-2, false)
}

fn c3() -> Line {
    let mut l = reference_line("3", &["example4"], 1e-2, false);
    let x = solve_request(&fixture("example4"), Request::plain(Family::GsrtB), None, &cfg()).map(|o| o.x);
    let ok = x.as_ref().is_ok_and(|x| (x[0] - 0.0).abs() <= 1e-3 && (x[1] - 0.6667).abs() <= 1e-3);
    l.pass &= ok;
    l.detail.push_str(&format!("; gsrt-b x = {:?}", x.unwrap_or_default()));
    l
}

fn c4() -> Vec<Line> {
    let mut a = reference_line("4a", &["example5", "example6"], 1e-2, false);
    a.detail.insert_str(0, "gsrt-a: ");
    let mut b = reference_line("4b", &["example5", "example6"], 1e-2, true);
    b.detail.insert_str(0, "gsrt-a+sst (known deviation, see README): ");
    vec![a, b]
}

/// Deterministic mix of sizes for the generated property instances.
fn prop_spec(i: u64, max_n: usize, max_l: usize, max_m: usize, min_k: usize, nonneg: bool) -> GenSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0000 + i);
    let n = rng.gen_range(2..=max_n);
    let l = rng.gen_range(min_k.max(1)..=max_l);
    let k = rng.gen_range(min_k..=l);
    let m = rng.gen_range(1..=max_m);
    GenSpec { nonneg, ..GenSpec::new(n, l, k, m, 1000 + i) }
}

fn ones_alpha(inst: &QcqpInstance) -> Option<AlphaAug> {
    compute_alpha(inst, DVector::from_element(inst.n(), 1.0), &cfg(), &qrelax::backend::Clarabel).ok()
}

fn c5() -> Line {
    let start = Instant::now();
    let plain = [Family::Sdp, Family::Rlt, Family::SocRlt, Family::SocRltB, Family::GsrtA, Family::GsrtB];
    let (mut mono, mut oracle_bad, mut with_alpha, mut with_oracle, mut gsrt_b_findings) = (Vec::new(), Vec::new(), 0, 0, 0);
    for i in 0..50 {
        let inst = generate(&prop_spec(i, 10, 4, 8, 0, false)).expect("valid spec");
        let alpha = ones_alpha(&inst);
        let mut reqs: Vec<Request> = plain.iter().map(|&f| Request::plain(f)).collect();
        if alpha.is_some() {
            with_alpha += 1;
            reqs.extend([Family::Rlt, Family::SocRlt, Family::GsrtA, Family::GsrtB].map(Request::with_alpha));
        }
        let opts = (inst.n() <= oracle::MAX_DIM).then(|| OracleOptions {
            resolution: if inst.n() == 4 { 31 } else { oracle::DEFAULT_RESOLUTION },
            tol: 1e-4,
        });
        let rep = compare(&inst, &reqs, alpha.as_ref(), &cfg(), opts);
        if rep.oracle.is_some() {
            with_oracle += 1;
        }
        if let (Some(a), Some(b)) = (rep.optimal("gsrt-a"), rep.optimal("gsrt-b")) {
            if b < a - MONO_TOL * a.abs().max(1.0) {
                gsrt_b_findings += 1;
            }
        }
        // GSRT-B vs GSRT-A is an observation, not part of the chain.
        mono.extend(
            rep.dominance_violations
                .iter()
                .filter(|v| !(v.weaker.starts_with("gsrt-a") && v.stronger.starts_with("gsrt-b")))
                .map(|v| format!("{}: {} {} > {} {}", rep.instance, v.weaker, v.v_weaker, v.stronger, v.v_stronger)),
        );
        oracle_bad.extend(rep.oracle_violations.iter().map(|v| format!("{}: {v}", rep.instance)));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = mono.is_empty() && oracle_bad.is_empty() && secs < 600.0;
    line(
        "5",
        pass,
        format!(
            "50 instances ({with_alpha} with alpha row, {with_oracle} with oracle), {} chain violations, {} oracle violations, {:.1} s; gsrt-b < gsrt-a on {gsrt_b_findings} (observation) {}",
            mono.len(),
            oracle_bad.len(),
            secs,
            mono.iter().chain(&oracle_bad).take(3).cloned().collect::<Vec<_>>().join("; ")
        ),
    )
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(1.0)
}

fn c6() -> Line {
    // Theorem 4. Eligible: a convex row with c in Range(Q) and both bounds
    // certified optimal (an uncertified dual bound cannot show equality).
    let (mut eligible, mut worst4, mut i) = (0, 0.0f64, 0);
    while eligible < 20 && i < 200 {
        let inst = generate(&prop_spec(500 + i, 8, 3, 6, 1, false)).expect("valid spec");
        i += 1;
        let a = solve_request(&inst, Request::plain(Family::SocRlt), None, &cfg());
        let b = solve_request(&inst, Request::plain(Family::SocRltB), None, &cfg());
        if let (Ok(a), Ok(b)) = (a, b) {
            if a.status == SolveStatus::Optimal && b.status == SolveStatus::Optimal {
                eligible += 1;
                worst4 = worst4.max(rel_diff(a.bound.unwrap(), b.bound.unwrap()));
            }
        }
    }
    let tried4 = i;
    let t4 = eligible == 20 && worst4 <= 1e-5;

    // Theorem 8.
    let (mut done, mut worst8, mut i) = (0, 0.0f64, 0);
    while done < 10 && i < 40 {
        let inst = generate(&prop_spec(700 + i, 6, 3, 5, 2, false)).expect("valid spec");
        i += 1;
        if let Ok(r) = verify(&inst, Theorem::T8, None, &cfg()) {
            if let Some(c) = r.checks.iter().find(|c| c.name == "bound-change") {
                done += 1;
                worst8 = worst8.max(-c.margin);
            }
        }
    }
    let t8 = done == 10 && worst8 < 1e-6;

    // Lemma 1.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut lemma_bad = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=6);
        let r = rng.gen_range(1..=n);
        let mut psd = || {
            let g = DMatrix::from_fn(n, r, |_, _| rng.gen_range(-1.0..1.0));
            &g * g.transpose()
        };
        let (a, b) = (psd(), psd());
        if (&a * &b).trace() > a.trace() * b.trace() + 1e-10 {
            lemma_bad += 1;
        }
    }
    line(
        "6",
        t4 && t8 && lemma_bad == 0,
        format!(
            "thm4: {eligible} eligible of {tried4} tried, worst rel diff {worst4:.2e}; thm8: {done} instances, worst rel change {worst8:.2e}; lemma1: {lemma_bad}/1000 violations"
        ),
    )
}

fn c7() -> Line {
    let pinned = |u: &[f64], a: f64| AlphaSpec { u: u.to_vec(), alpha: Some(a) };
    let mut cases: Vec<(QcqpInstance, AlphaAug)> = Vec::new();
    for (name, spec) in [("example3", pinned(&[1.0, 2.0], 1.8029)), ("example4", pinned(&[1.0, 1.0], 0.6667))] {
        let inst = fixture(name);
        let a = spec.resolve(&inst, &cfg()).expect("pinned alpha");
        cases.push((inst, a));
    }
    let theorems = [Theorem::T5, Theorem::T6, Theorem::T9, Theorem::C1, Theorem::C2];
    let mut reports = Vec::new();
    let mut bad = Vec::new();
    let run = |inst: &QcqpInstance, a: &AlphaAug| -> Result<Vec<_>, String> {
        theorems.iter().map(|&t| verify(inst, t, Some(a), &cfg()).map_err(|e| format!("{} {}: {e}", inst.name(), t.id()))).collect()
    };
    for (inst, a) in &cases {
        match run(inst, a) {
            Ok(r) => reports.extend(r),
            Err(e) => bad.push(e),
        }
    }
    // Generated §3-setting instances whose dominating solves are certified.
    let (mut generated, mut skipped, mut i) = (0, 0, 0);
    while generated < 10 && i < 60 {
        let inst = generate(&prop_spec(900 + i, 6, 3, 4, 1, true)).expect("valid spec");
        i += 1;
        let Some(a) = ones_alpha(&inst) else { continue };
        match run(&inst, &a) {
            Ok(r) if r.iter().all(|r| r.status == SolveStatus::Optimal) => {
                generated += 1;
                reports.extend(r);
            }
            Ok(_) => skipped += 1,
            Err(e) => bad.push(e),
        }
    }
    let mut worst = f64::INFINITY;
    for r in &reports {
        let w = r.worst().map_or(f64::INFINITY, |c| c.margin);
        worst = worst.min(w);
        if !r.pass {
            bad.push(format!("{} {} {w:e} ({})", r.instance, r.theorem.id(), r.status.as_str()));
        }
    }
    line(
        "7",
        generated == 10 && bad.is_empty(),
        format!(
            "examples 3-4 + {generated} generated ({skipped} skipped as not certified), {} checks, worst margin {worst:.2e} {}",
            reports.len(),
            bad.join("; ")
        ),
    )
}

/// Rejection sampling in the oracle box, falling back to a shell around
/// the oracle optimum when the feasible set is thin.
fn feasible_points(inst: &QcqpInstance, count: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    let bx = SearchBox::derive(inst, 10.0);
    let mut out = Vec::new();
    let center = oracle::global_min_default(inst, 41).ok().map(|o| o.best_x);
    for attempt in 0..400_000 {
        if out.len() == count {
            break;
        }
        let x = match (&center, attempt % 2) {
            (Some(c), 1) => {
                let r = 10f64.powf(rng.gen_range(-3.0..0.5));
                c + DVector::from_fn(inst.n(), |_, _| rng.gen_range(-r..r))
            }
            _ => DVector::from_fn(inst.n(), |k, _| rng.gen_range(bx.lo[k]..=bx.hi[k])),
        };
        if inst.is_feasible(&x, 0.0) {
            out.push(x);
        }
    }
    out
}

fn c8() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let alphas = [("example3", vec![1.0, 2.0], 1.8029), ("example4", vec![1.0, 1.0], 0.6667)];
    let (mut points, mut constraints, mut worst, mut bad) = (0, 0usize, f64::INFINITY, Vec::new());
    for (f, name) in fixtures::NAMES.iter().enumerate() {
        let inst = fixture(name);
        let alpha = alphas.iter().find(|a| a.0 == *name).map(|a| AlphaAug::user(DVector::from_vec(a.1.clone()), a.2));
        let mut specs: Vec<(String, RelaxationSpec, bool)> =
            Family::ALL.iter().filter(|f| !f.needs_alpha()).map(|f| (f.name().to_string(), f.spec(), false)).collect();
        if let Some(a) = &alpha {
            for f in Family::ALL {
                if f.needs_alpha() {
                    specs.push((f.name().into(), RelaxationSpec { alpha: Some(a.clone()), ..f.spec() }, true));
                } else if f.has_alpha_variant() {
                    specs.push((format!("{f}+alpha"), f.spec().with_alpha_row(a.clone()), true));
                }
            }
        }
        let rels: Vec<_> = specs.iter().filter_map(|(n, s, uses)| relax::build(&inst, s).ok().map(|r| (n, r, *uses))).collect();
        let quota = 200 / fixtures::NAMES.len() + usize::from(f < 200 % fixtures::NAMES.len());
        for x in feasible_points(&inst, quota, &mut rng) {
            points += 1;
            let row_ok = alpha.as_ref().is_some_and(|a| a.row().eval(&x) <= 0.0);
            for (label, r, uses_alpha) in &rels {
                if *uses_alpha && !row_ok {
                    continue;
                }
                let z = decompose::lift_aux(&r.gsocs, &r.classification, &x);
                let v = r.program.space.rank_one(&x, &z);
                for s in r.program.slacks(&v) {
                    constraints += 1;
                    worst = worst.min(s.value);
                    if s.value < -1e-8 && bad.len() < 3 {
                        bad.push(format!("{name} {label} {} = {:.3e}", s.name, s.value));
                    }
                }
            }
        }
    }
    line(
        "8",
        points == 200 && worst >= -1e-8,
        format!("{points} points, {constraints} constraint evaluations, worst slack {worst:.2e} {}", bad.join("; ")),
    )
}

fn c9() -> Line {
    let sc = SweepConfig::default();
    let start = Instant::now();
    let a = figures_sweep(&sc, &cfg()).expect("sweep runs");
    // Cell seeds depend only on (base, phi, m, rep), so rerunning one phi
    // slice checks determinism without paying for a second full sweep.
    let slice = SweepConfig { phis: vec![sc.phis[0]], ..sc.clone() };
    let b = figures_sweep(&slice, &cfg()).expect("sweep runs");
    let rows_a: Vec<_> = a.rows.iter().filter(|r| r.phi == sc.phis[0]).cloned().collect();
    let cells_a: Vec<_> = a.cells.iter().filter(|c| c.phi == sc.phis[0]).cloned().collect();
    let same = rows_a == b.rows && cells_a == b.cells;
    let min_mean = a.rows.iter().map(|r| r.mean).fold(f64::INFINITY, f64::min);
    let empty: Vec<String> = a.rows.iter().filter(|r| r.count == 0).map(|r| format!("phi={} m={}", r.phi, r.m)).collect();
    line(
        "9",
        same && empty.is_empty() && min_mean >= 0.0,
        format!(
            "{} cells, {} rows, min mean ratio {min_mean:.4}, max mean ratio {:.4}, deterministic = {same}, empty rows {empty:?}, {:.1} s",
            a.cells.len(),
            a.rows.len(),
            a.rows.iter().map(|r| r.mean).fold(f64::NEG_INFINITY, f64::max),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_qrelax")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn bounds(csv: &[u8]) -> Vec<(String, f64)> {
    String::from_utf8_lossy(csv)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].to_string(), f[2].parse().unwrap_or(f64::NAN))
        })
        .collect()
}

fn c10() -> Line {
    let gen = ["gen", "--n", "6", "--l", "3", "--k", "1", "--m", "4", "--seed", "11"];
    let (c1, g1) = cli(&gen);
    let (c2, g2) = cli(&gen);
    let gen_ok = c1 == 0 && c2 == 0 && !g1.is_empty() && g1 == g2;
    let cmp = ["compare", "--instance", "example3", "--alpha", "u=1,2;alpha=1.8029", "--format", "csv"];
    let (d1, o1) = cli(&cmp);
    let (d2, o2) = cli(&cmp);
    let (b1, b2) = (bounds(&o1), bounds(&o2));
    let worst = b1
        .iter()
        .zip(&b2)
        .map(|(x, y)| if x.0 == y.0 && x.1.is_finite() { (x.1 - y.1).abs() } else { f64::INFINITY })
        .fold(0.0f64, f64::max);
    let cmp_ok = d1 == 0 && d2 == 0 && !b1.is_empty() && b1.len() == b2.len() && worst <= 1e-9;
    line("10", gen_ok && cmp_ok, format!("gen byte-identical = {gen_ok}; compare {} rows, max rerun diff {worst:.1e}", b1.len()))
}

fn main() {
    let start = Instant::now();
    let mut lines = vec![c1(), c2(), c3()];
    lines.extend(c4());
    for f in [c5, c6, c7, c8, c9, c10] {
        let t = Instant::now();
        let mut l = f();
        l.detail.push_str(&format!(" [{:.1} s]", t.elapsed().as_secs_f64()));
        lines.push(l);
    }
    let mut fatal = false;
    for l in &lines {
        let verdict = if l.pass { "PASS" } else { "FAIL" };
        let tag = if l.known_deviation && !l.pass { " (known deviation)" } else { "" };
        println!("{verdict} criterion {}{tag}: {}", l.id, l.detail);
        fatal |= !l.pass && !l.known_deviation;
    }
    println!("acceptance finished in {:.1} s", start.elapsed().as_secs_f64());
    if fatal {
        std::process::exit(1);
    }
}
