//! Conic solver backend. The default implementation hands the lowered
//! standard form to Clarabel (interior point, LP + SOC + PSD cones).

use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use qrelax_core::lift::{Cone, Residuals, SolveStatus, StandardForm};

use crate::error::Error;

pub const ENV_FEATOL: &str = "QRELAX_FEATOL";
pub const ENV_GAPTOL: &str = "QRELAX_GAPTOL";
pub const ENV_TIME_LIMIT: &str = "QRELAX_TIME_LIMIT";

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub featol: f64,
    pub gaptol: f64,
    pub max_iter: u32,
    /// Seconds; `None` means unlimited.
    pub time_limit: Option<f64>,
    pub verbose: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { featol: 1e-8, gaptol: 1e-8, max_iter: 200, time_limit: None, verbose: false }
    }
}

impl SolverConfig {
    /// Applies `QRELAX_*` environment overrides on top of `self`.
    pub fn with_env(self) -> Result<Self, Error> {
        self.with_overrides(|k| std::env::var(k).ok())
    }

    pub fn with_overrides(mut self, get: impl Fn(&str) -> Option<String>) -> Result<Self, Error> {
        let num = |key: &str, raw: String| {
            raw.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: cannot parse '{raw}' as a number")))
        };
        if let Some(v) = get(ENV_FEATOL) {
            self.featol = num(ENV_FEATOL, v)?;
        }
        if let Some(v) = get(ENV_GAPTOL) {
            self.gaptol = num(ENV_GAPTOL, v)?;
        }
        if let Some(v) = get(ENV_TIME_LIMIT) {
            self.time_limit = Some(num(ENV_TIME_LIMIT, v)?);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), Error> {
        for (name, v) in [("featol", self.featol), ("gaptol", self.gaptol)] {
            if !(v > 0.0 && v < 1e-2) {
                return Err(Error::Config(format!("{name} must lie in (0, 1e-2), got {v}")));
            }
        }
        if let Some(t) = self.time_limit {
            if t.is_nan() || t <= 0.0 {
                return Err(Error::Config(format!("time limit must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

/// Solver output in standard-form variables.
#[derive(Debug, Clone)]
pub struct RawSolution {
    pub status: SolveStatus,
    pub values: Vec<f64>,
    /// Primal objective including the constant term.
    pub primal_obj: f64,
    /// Dual objective including the constant term.
    pub dual_obj: f64,
    pub residuals: Residuals,
    pub iterations: u32,
    /// Wall time of the solve call only.
    pub time_s: f64,
    pub diagnostic: Option<String>,
}

impl RawSolution {
    /// The reported bound: primal objective when optimal, dual objective
    /// when inaccurate, nothing otherwise.
    pub fn bound(&self) -> Option<f64> {
        match self.status {
            SolveStatus::Optimal => Some(self.primal_obj),
            SolveStatus::Inaccurate => Some(self.dual_obj),
            _ => None,
        }
    }
}

pub trait ConicBackend: Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, sf: &StandardForm, cfg: &SolverConfig) -> Result<RawSolution, Error>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Clarabel;

type Tweak = fn(&mut DefaultSettings<f64>);

fn stronger_equilibration(s: &mut DefaultSettings<f64>) {
    s.equilibrate_max_iter = 50;
    s.equilibrate_min_scaling = 1e-6;
    s.equilibrate_max_scaling = 1e6;
}

fn tighter_refinement(s: &mut DefaultSettings<f64>) {
    s.iterative_refinement_reltol = 1e-14;
    s.iterative_refinement_abstol = 1e-14;
    s.iterative_refinement_max_iter = 50;
    s.iterative_refinement_stop_ratio = 10.0;
}

/// Settings tried in order when an attempt stalls short of the requested
/// accuracy. The first entry is Clarabel's default.
const RETRIES: [Tweak; 5] = [
    |_| {},
    stronger_equilibration,
    tighter_refinement,
    |s| {
        stronger_equilibration(s);
        tighter_refinement(s);
    },
    |s| {
        s.min_terminate_step_length = 1e-6;
        s.max_step_fraction = 0.95;
    },
];

fn csc(m: usize, n: usize, triplets: &[(usize, usize, f64)]) -> CscMatrix<f64> {
    let mut t: Vec<_> = triplets.iter().copied().filter(|e| e.2 != 0.0).collect();
    t.sort_by_key(|&(r, c, _)| (c, r));
    let mut colptr = vec![0usize; n + 1];
    let mut rowval = Vec::with_capacity(t.len());
    let mut nzval: Vec<f64> = Vec::with_capacity(t.len());
    let mut last: Option<(usize, usize)> = None;
    for (r, c, v) in t {
        if last == Some((r, c)) {
            *nzval.last_mut().expect("previous entry") += v;
            continue;
        }
        rowval.push(r);
        nzval.push(v);
        colptr[c + 1] += 1;
        last = Some((r, c));
    }
    for c in 0..n {
        colptr[c + 1] += colptr[c];
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}

fn cone(c: &Cone) -> SupportedConeT<f64> {
    match *c {
        Cone::Zero(k) => SupportedConeT::ZeroConeT(k),
        Cone::Nonneg(k) => SupportedConeT::NonnegativeConeT(k),
        Cone::Soc(k) => SupportedConeT::SecondOrderConeT(k),
        Cone::Psd(d) => SupportedConeT::PSDTriangleConeT(d),
    }
}

fn map_status(s: SolverStatus) -> SolveStatus {
    match s {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::AlmostSolved => SolveStatus::Inaccurate,
        SolverStatus::PrimalInfeasible => SolveStatus::Infeasible,
        SolverStatus::DualInfeasible => SolveStatus::Unbounded,
        SolverStatus::MaxTime => SolveStatus::TimedOut,
        _ => SolveStatus::Failed,
    }
}

impl ConicBackend for Clarabel {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn solve(&self, sf: &StandardForm, cfg: &SolverConfig) -> Result<RawSolution, Error> {
        cfg.validate()?;
        let n = sf.n_vars;
        let p = CscMatrix::zeros((n, n));
        let a = csc(sf.n_rows(), n, &sf.a);
        let cones: Vec<_> = sf.cones.iter().map(cone).collect();
        let mut first: Option<DefaultSolver<f64>> = None;
        let mut attempts = 0;
        let t0 = Instant::now();
        let mut solver = loop {
            let mut settings = DefaultSettingsBuilder::default()
                .verbose(cfg.verbose)
                .tol_feas(cfg.featol)
                .tol_gap_abs(cfg.gaptol)
                .tol_gap_rel(cfg.gaptol)
                .max_iter(cfg.max_iter)
                .time_limit(cfg.time_limit.map_or(f64::INFINITY, |t| (t - t0.elapsed().as_secs_f64()).max(0.0)))
                .max_threads(1)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            RETRIES[attempts](&mut settings);
            let mut solver = DefaultSolver::new(&p, &sf.q, &a, &sf.b, &cones, settings)
                .map_err(|e| Error::Solver(e.to_string()))?;
            solver.solve();
            attempts += 1;
            // Retry only numerical stalls; certificates and time-outs are final.
            let stalled = matches!(
                solver.solution.status,
                SolverStatus::AlmostSolved | SolverStatus::InsufficientProgress | SolverStatus::NumericalError
            );
            if !stalled || attempts == RETRIES.len() {
                break solver;
            }
            if first.is_none() {
                first = Some(solver);
            }
        };
        // Fall back to the default-settings attempt when no retry succeeded.
        if solver.solution.status != SolverStatus::Solved {
            if let Some(f) = first {
                solver = f;
            }
        }
        let time_s = t0.elapsed().as_secs_f64();
        let sol = &solver.solution;
        let status = map_status(sol.status);
        let primal_obj = sol.obj_val + sf.q0;
        let dual_obj = sol.obj_val_dual + sf.q0;
        let gap = (primal_obj - dual_obj).abs() / primal_obj.abs().max(1.0);
        let diagnostic = match status {
            SolveStatus::Optimal => None,
            _ => Some(format!("clarabel status {:?} after {} iterations ({attempts} attempts)", sol.status, sol.iterations)),
        };
        Ok(RawSolution {
            status,
            values: sol.x.clone(),
            primal_obj,
            dual_obj,
            residuals: Residuals { primal: sol.r_prim, dual: sol.r_dual, gap },
            iterations: sol.iterations,
            time_s,
            diagnostic,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf(n: usize, q: Vec<f64>, a: Vec<(usize, usize, f64)>, b: Vec<f64>, cones: Vec<Cone>) -> StandardForm {
        StandardForm { n_vars: n, q, q0: 0.0, a, b, cones }
    }

    #[test]
    fn lp() {
        // min x  s.t.  x − 1 ≥ 0  ⇔  s = −1 − (−x)
        let s = sf(1, vec![1.0], vec![(0, 0, -1.0)], vec![-1.0], vec![Cone::Nonneg(1)]);
        let r = Clarabel.solve(&s, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.primal_obj - 1.0).abs() < 1e-8);
    }

    #[test]
    fn soc() {
        // min t  s.t.  (t, 3, 4) ∈ SOC
        let s = sf(1, vec![1.0], vec![(0, 0, -1.0)], vec![0.0, 3.0, 4.0], vec![Cone::Soc(3)]);
        let r = Clarabel.solve(&s, &SolverConfig::default()).unwrap();
        assert!((r.primal_obj - 5.0).abs() < 1e-7);
    }

    #[test]
    fn psd() {
        // min tr(X)  s.t.  X − I ⪰ 0, vars (x11, x12, x22)
        let r2 = std::f64::consts::SQRT_2;
        let s = sf(
            3,
            vec![1.0, 0.0, 1.0],
            vec![(0, 0, -1.0), (1, 1, -r2), (2, 2, -1.0)],
            vec![-1.0, 0.0, -1.0],
            vec![Cone::Psd(2)],
        );
        let r = Clarabel.solve(&s, &SolverConfig::default()).unwrap();
        assert!((r.primal_obj - 2.0).abs() < 1e-7);
    }

    #[test]
    fn infeasible_and_unbounded() {
        // x ≥ 1 and −x ≥ 0
        let s = sf(1, vec![1.0], vec![(0, 0, -1.0), (1, 0, 1.0)], vec![-1.0, 0.0], vec![Cone::Nonneg(2)]);
        assert_eq!(Clarabel.solve(&s, &SolverConfig::default()).unwrap().status, SolveStatus::Infeasible);
        let s = sf(1, vec![1.0], vec![(0, 0, 1.0)], vec![0.0], vec![Cone::Nonneg(1)]);
        let r = Clarabel.solve(&s, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Unbounded);
        assert_eq!(r.bound(), None);
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let m = csc(1, 1, &[(0, 0, 1.0), (0, 0, 2.0)]);
        assert_eq!(m.nzval, vec![3.0]);
    }

    #[test]
    fn env_overrides() {
        let env = |k: &str| match k {
            ENV_FEATOL => Some("1e-7".to_string()),
            ENV_TIME_LIMIT => Some("5".to_string()),
            _ => None,
        };
        let c = SolverConfig::default().with_overrides(env).unwrap();
        assert_eq!((c.featol, c.gaptol, c.time_limit), (1e-7, 1e-8, Some(5.0)));
        let bad = |k: &str| (k == ENV_GAPTOL).then(|| "0.5".to_string());
        assert!(SolverConfig::default().with_overrides(bad).is_err());
    }
}
