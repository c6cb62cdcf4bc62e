//! The lowered standard form `b − Av ∈ K` agrees with the instance at
//! rank-1 lifted feasible points, for every family.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qrelax_core::decompose;
use qrelax_core::lift::{lower, Cone, StandardForm};
use qrelax_core::linalg::SymMatrix;
use qrelax_core::model::{LinConstraint, QcqpInstance, QuadConstraint};
use qrelax_core::relax::{build, AlphaAug, Family, RelaxationSpec};

fn example4() -> QcqpInstance {
    let m = |a: f64, b: f64, c: f64| SymMatrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap();
    let v = |a: f64, b: f64| DVector::from_vec(vec![a, b]);
    QcqpInstance::new(
        "example4",
        m(-8.0, -0.5, -13.0),
        v(-6.0, -1.0),
        vec![
            QuadConstraint { q: m(1.0, 0.5, 2.0), c: v(-3.0, -3.0), d: -7.0 },
            QuadConstraint { q: m(0.0, 1.0, 0.0), c: v(33.0, 15.0), d: -10.0 },
        ],
        vec![
            LinConstraint { a: v(1.0, 2.0), b: 6.0 },
            LinConstraint { a: v(-1.0, 0.0), b: 0.0 },
            LinConstraint { a: v(0.0, -1.0), b: 0.0 },
        ],
    )
    .unwrap()
}

/// Most negative cone margin of `s`, each cone scaled by `1 + ‖s_K‖`.
fn cone_margin(sf: &StandardForm, s: &[f64]) -> f64 {
    let mut worst = f64::INFINITY;
    let mut at = 0;
    for c in &sf.cones {
        let (k, m) = match *c {
            Cone::Zero(k) => (k, -s[at..at + k].iter().fold(0.0f64, |a, v| a.max(v.abs()))),
            Cone::Nonneg(k) => (k, s[at..at + k].iter().copied().fold(f64::INFINITY, f64::min)),
            Cone::Soc(k) => {
                let tail: f64 = s[at + 1..at + k].iter().map(|v| v * v).sum::<f64>().sqrt();
                (k, (s[at] - tail) / (1.0 + s[at].abs()))
            }
            Cone::Psd(d) => {
                let k = d * (d + 1) / 2;
                let mut mat = DMatrix::zeros(d, d);
                let mut idx = at;
                for j in 0..d {
                    for i in 0..=j {
                        let v = if i == j { s[idx] } else { s[idx] / std::f64::consts::SQRT_2 };
                        mat[(i, j)] = v;
                        mat[(j, i)] = v;
                        idx += 1;
                    }
                }
                let lmin = mat.clone().symmetric_eigen().eigenvalues.min();
                (k, lmin / (1.0 + mat.norm()))
            }
        };
        worst = worst.min(m);
        at += k;
    }
    assert_eq!(at, sf.n_rows());
    worst
}

fn specs() -> Vec<(String, RelaxationSpec)> {
    let a = AlphaAug::user(DVector::from_vec(vec![1.0, 1.0]), 2.0);
    let mut out = Vec::new();
    for f in Family::ALL {
        if f.needs_alpha() {
            out.push((f.name().to_string(), RelaxationSpec { alpha: Some(a.clone()), ..f.spec() }));
        } else {
            out.push((f.name().to_string(), f.spec()));
            if f.has_alpha_variant() {
                out.push((format!("{f}+alpha"), f.spec().with_alpha_row(a.clone())));
            }
        }
    }
    out
}

#[test]
fn triplets_stay_in_range() {
    let inst = example4();
    for (name, spec) in specs() {
        let r = build(&inst, &spec).unwrap();
        let sf = lower(&r.program);
        assert!(sf.a.iter().all(|&(i, j, _)| i < sf.n_rows() && j < sf.n_vars), "{name}");
        assert_eq!(sf.q.len(), sf.n_vars, "{name}");
    }
}

/// Feasible points of a 101 × 101 grid over `[0, 2]²` with `x₀ + x₁ ≤ 2`,
/// so the alpha row `uᵀx ≤ α` used above stays valid.
fn feasible_grid() -> Vec<(f64, f64)> {
    let inst = example4();
    let mut out = Vec::new();
    for i in 0..=100 {
        for j in 0..=100 {
            let (a, b) = (i as f64 * 0.02, j as f64 * 0.02);
            if a + b <= 2.0 && inst.is_feasible(&DVector::from_vec(vec![a, b]), 0.0) {
                out.push((a, b));
            }
        }
    }
    assert!(out.len() > 20, "grid too coarse");
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rank_one_point_lies_in_the_cone(p in prop::sample::select(feasible_grid())) {
        let inst = example4();
        let x = DVector::from_vec(vec![p.0, p.1]);
        for (name, spec) in specs() {
            let r = build(&inst, &spec).unwrap();
            let sf = lower(&r.program);
            let z = decompose::lift_aux(&r.gsocs, &r.classification, &x);
            let v = r.program.space.rank_one(&x, &z);
            let m = cone_margin(&sf, &sf.slack(&v));
            prop_assert!(m >= -1e-8, "{name}: margin {m}");
            prop_assert!((sf.objective(&v) - inst.objective(&x)).abs() <= 1e-8 * (1.0 + inst.objective(&x).abs()), "{name}");
        }
    }
}
