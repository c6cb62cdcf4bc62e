use qrelax_core::lift::SolveStatus;
use qrelax_core::model::QcqpInstance;
use qrelax_core::oracle::{self, OracleResult};
use qrelax_core::relax::{AlphaAug, Family};
use rayon::prelude::*;

use crate::backend::SolverConfig;
use crate::solve::{solve_request_lenient, Outcome, Request};

/// Monotonicity slack: `v(stronger) ≥ v(weaker) − MONO_TOL·max(1, |v(weaker)|)`.
pub const MONO_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub weaker: String,
    pub stronger: String,
    pub v_weaker: f64,
    pub v_stronger: f64,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub instance: String,
    pub rows: Vec<Outcome>,
    pub alpha: Option<AlphaAug>,
    pub improvement_ratio: Option<f64>,
    pub dominance_violations: Vec<Violation>,
    pub oracle: Option<OracleResult>,
    pub oracle_violations: Vec<String>,
}

impl CompareReport {
    pub fn get(&self, label: &str) -> Option<&Outcome> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Bound of `label` when its status is optimal.
    pub fn optimal(&self, label: &str) -> Option<f64> {
        self.get(label).filter(|r| r.status == SolveStatus::Optimal).and_then(|r| r.bound)
    }
}

/// `(v_G − v_R) / |v_R|`.
pub fn improvement_ratio(v_gsrt: f64, v_rlt: f64) -> f64 {
    (v_gsrt - v_rlt) / v_rlt.abs()
}

/// Ordered pairs `(weaker, stronger)` implied by the hierarchy among plain
/// families.
pub const PLAIN_CHAIN: &[(Family, Family)] = &[
    (Family::Sdp, Family::Rlt),
    (Family::Rlt, Family::SocRlt),
    (Family::SocRlt, Family::SocRltB),
    (Family::SocRltB, Family::SocRlt),
    (Family::SocRlt, Family::GsrtA),
    (Family::SocRlt, Family::GsrtB),
    (Family::GsrtA, Family::Sst),
    (Family::Sst, Family::KsocSub),
    (Family::GsrtA, Family::KsocFull),
    (Family::SocRlt, Family::AlphaLmi),
    (Family::SocRlt, Family::Rtc),
    (Family::AlphaLmi, Family::Hsoc),
    (Family::Rtc, Family::Hsoc),
];

/// Every `(weaker, stronger)` label pair checked in a report.
pub fn chain_pairs() -> Vec<(String, String)> {
    let mut out = Vec::new();
    for &(w, s) in PLAIN_CHAIN {
        out.push((Request::plain(w).label(), Request::plain(s).label()));
        if w.has_alpha_variant() && s.has_alpha_variant() {
            out.push((Request::with_alpha(w).label(), Request::with_alpha(s).label()));
        }
    }
    for f in Family::ALL.into_iter().filter(|f| f.has_alpha_variant()) {
        out.push((Request::plain(f).label(), Request::with_alpha(f).label()));
    }
    // LMIs implied by the alpha-row products.
    let soc_alpha = Request::with_alpha(Family::SocRlt).label();
    for f in [Family::AlphaLmi, Family::Rtc, Family::Hsoc] {
        out.push((f.name().to_string(), soc_alpha.clone()));
    }
    out.push((Family::AlphaLmi.name().to_string(), Request::with_alpha(Family::Rlt).label()));
    out
}

pub fn monotonicity_violations(rows: &[Outcome], tol: f64) -> Vec<Violation> {
    let opt = |label: &str| {
        rows.iter().find(|r| r.label == label && r.status == SolveStatus::Optimal).and_then(|r| r.bound)
    };
    let mut out = Vec::new();
    for (w, s) in chain_pairs() {
        if let (Some(vw), Some(vs)) = (opt(&w), opt(&s)) {
            if vs < vw - tol * vw.abs().max(1.0) {
                out.push(Violation { weaker: w, stronger: s, v_weaker: vw, v_stronger: vs });
            }
        }
    }
    out
}

/// Label used for `v(SDP_GSRT)`: `gsrt-a` when present, else `gsrt-b`.
pub fn ratio_pair(rows: &[Outcome]) -> Option<f64> {
    let opt = |l: &str| rows.iter().find(|r| r.label == l && r.status == SolveStatus::Optimal).and_then(|r| r.bound);
    let g = opt("gsrt-a").or_else(|| opt("gsrt-b"))?;
    let r = opt("rlt")?;
    Some(improvement_ratio(g, r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub resolution: usize,
    /// Allowed excess of a bound over the oracle value.
    pub tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { resolution: oracle::DEFAULT_RESOLUTION, tol: 1e-4 }
    }
}

/// Solves every request (in parallel on the current rayon pool) and audits
/// the results.
pub fn compare(
    inst: &QcqpInstance,
    requests: &[Request],
    alpha: Option<&AlphaAug>,
    cfg: &SolverConfig,
    oracle_opts: Option<OracleOptions>,
) -> CompareReport {
    let rows: Vec<Outcome> = requests.par_iter().map(|&r| solve_request_lenient(inst, r, alpha, cfg)).collect();
    let dominance_violations = monotonicity_violations(&rows, MONO_TOL);
    let improvement_ratio = ratio_pair(&rows);
    let mut oracle_violations = Vec::new();
    let oracle = oracle_opts.and_then(|o| {
        let res = oracle::global_min_default(inst, o.resolution).ok()?;
        for r in &rows {
            if let Some(b) = r.bound.filter(|_| r.status == SolveStatus::Optimal) {
                if b > res.best_val + o.tol {
                    oracle_violations.push(format!("{}: bound {b} exceeds oracle {}", r.label, res.best_val));
                }
            }
        }
        Some(res)
    });
    CompareReport {
        instance: inst.name().to_string(),
        rows,
        alpha: alpha.cloned(),
        improvement_ratio,
        dominance_violations,
        oracle,
        oracle_violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qrelax_core::lift::Counts;

    fn row(label: &str, v: f64) -> Outcome {
        Outcome {
            label: label.into(),
            request: Request::parse(label).unwrap(),
            status: SolveStatus::Optimal,
            bound: Some(v),
            time_s: 0.0,
            counts: Counts::default(),
            x: vec![],
            notes: vec![],
            diagnostic: None,
        }
    }

    #[test]
    fn ratio_uses_absolute_denominator() {
        assert!((improvement_ratio(-6.0, -16.0) - 0.625).abs() < 1e-15);
        let rows = vec![row("rlt", -16.0), row("gsrt-b", -3.0)];
        assert!((ratio_pair(&rows).unwrap() - 13.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn violations_detected() {
        let rows = vec![row("sdp", -1.0), row("rlt", -2.0), row("rlt+alpha", -1.5)];
        let v = monotonicity_violations(&rows, MONO_TOL);
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].weaker.as_str(), v[0].stronger.as_str()), ("sdp", "rlt"));
        let tiny = vec![row("sdp", -1.0), row("rlt", -1.0 - 1e-7)];
        assert!(monotonicity_violations(&tiny, MONO_TOL).is_empty());
    }

    #[test]
    fn chain_includes_alpha_pairs() {
        let pairs = chain_pairs();
        assert!(pairs.contains(&("gsrt-b".into(), "gsrt-b+alpha".into())));
        assert!(pairs.contains(&("rtc".into(), "soc-rlt+alpha".into())));
        assert!(pairs.contains(&("rlt+alpha".into(), "soc-rlt+alpha".into())));
    }
}
