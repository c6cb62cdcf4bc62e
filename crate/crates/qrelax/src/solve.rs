//! Build, lower, solve and recover one relaxation.

use qrelax_core::lift::{self, Affine, Counts, LiftedSolution, SolveStatus};
use qrelax_core::model::QcqpInstance;
use qrelax_core::relax::{self, AlphaAug, AlphaSource, Family, RelaxError, Relaxation, RelaxationSpec};

use crate::backend::{Clarabel, ConicBackend, RawSolution, SolverConfig};
use crate::error::Error;

/// One rung of a comparison: a family, optionally with the alpha row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Request {
    pub family: Family,
    pub alpha_row: bool,
}

impl Request {
    pub const ALPHA_SUFFIX: &'static str = "+alpha";

    pub fn plain(family: Family) -> Self {
        Self { family, alpha_row: false }
    }

    pub fn with_alpha(family: Family) -> Self {
        Self { family, alpha_row: true }
    }

    pub fn label(&self) -> String {
        if self.alpha_row {
            format!("{}{}", self.family.name(), Self::ALPHA_SUFFIX)
        } else {
            self.family.name().to_string()
        }
    }

    /// `name` or `name+alpha`.
    pub fn parse(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let (name, alpha_row) = match s.strip_suffix(Self::ALPHA_SUFFIX) {
            Some(base) => (base, true),
            None => (s, false),
        };
        let family = Family::parse(name)?;
        if alpha_row && !family.has_alpha_variant() {
            return Err(Error::Invalid(format!("{name} has no alpha-row variant")));
        }
        Ok(Self { family, alpha_row })
    }

    pub fn needs_alpha(&self) -> bool {
        self.alpha_row || self.family.needs_alpha()
    }

    pub fn spec(&self, alpha: Option<&AlphaAug>) -> Result<RelaxationSpec, Error> {
        let mut spec = self.family.spec();
        if self.needs_alpha() {
            let a = alpha.ok_or(RelaxError::MissingAlpha(if self.alpha_row { "alpha row" } else { self.family.name() }))?;
            spec.alpha = Some(a.clone());
            spec.alpha_row = self.alpha_row;
        }
        Ok(spec)
    }
}

/// `--alpha` argument: `u=1,2` (computed α) or `u=1,2;alpha=1.8`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSpec {
    pub u: Vec<f64>,
    pub alpha: Option<f64>,
}

impl AlphaSpec {
    pub fn parse(s: &str) -> Result<Self, Error> {
        let bad = |why: &str| Error::Invalid(format!("--alpha '{s}': {why}"));
        let mut u = None;
        let mut alpha = None;
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            match k.trim() {
                "u" => {
                    let vals = v
                        .split(',')
                        .map(|x| x.trim().parse::<f64>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| bad("u must be a comma separated list of numbers"))?;
                    u = Some(vals);
                }
                "alpha" => alpha = Some(v.trim().parse::<f64>().map_err(|_| bad("alpha must be a number"))?),
                other => return Err(bad(&format!("unknown key '{other}'"))),
            }
        }
        let u = u.ok_or_else(|| bad("missing u"))?;
        if u.is_empty() || u.iter().any(|x| !x.is_finite()) {
            return Err(bad("u must be finite and nonempty"));
        }
        Ok(Self { u, alpha })
    }

    /// Pinned value, or `max uᵀx` over the SDP relaxation.
    pub fn resolve(&self, inst: &QcqpInstance, cfg: &SolverConfig) -> Result<AlphaAug, Error> {
        let u = nalgebra::DVector::from_vec(self.u.clone());
        if u.len() != inst.n() {
            return Err(RelaxError::AlphaDim { expected: inst.n(), found: u.len() }.into());
        }
        match self.alpha {
            Some(a) => Ok(AlphaAug::user(u, a)),
            None => compute_alpha(inst, u, cfg, &Clarabel),
        }
    }
}

/// `α_u = max uᵀx` over the SDP relaxation; must be finite and positive.
pub fn compute_alpha(
    inst: &QcqpInstance,
    u: nalgebra::DVector<f64>,
    cfg: &SolverConfig,
    backend: &dyn ConicBackend,
) -> Result<AlphaAug, Error> {
    let mut rel = relax::build(inst, &Family::Sdp.spec())?;
    let sp = rel.program.space;
    let mut obj = Affine::default();
    for (i, &ui) in u.iter().enumerate() {
        obj.push(sp.x(i), -ui);
    }
    rel.program.objective = obj;
    let raw = backend.solve(&lift::lower(&rel.program), cfg)?;
    let alpha = match raw.status {
        SolveStatus::Optimal | SolveStatus::Inaccurate => -raw.primal_obj,
        SolveStatus::Unbounded => f64::INFINITY,
        s => return Err(Error::Solver(format!("alpha computation ended with status {}", s.as_str()))),
    };
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(RelaxError::AlphaInvalid(alpha).into());
    }
    Ok(AlphaAug { u, alpha, source: AlphaSource::ComputedByRelaxation })
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub relaxation: Relaxation,
    pub raw: RawSolution,
    pub solution: LiftedSolution,
}

impl Solved {
    pub fn status(&self) -> SolveStatus {
        self.raw.status
    }

    pub fn bound(&self) -> Option<f64> {
        self.raw.bound()
    }

    pub fn counts(&self) -> Counts {
        self.relaxation.program.counts()
    }
}

pub fn solve_relaxation(relaxation: Relaxation, cfg: &SolverConfig, backend: &dyn ConicBackend) -> Result<Solved, Error> {
    let sf = lift::lower(&relaxation.program);
    let raw = backend.solve(&sf, cfg)?;
    let values = if raw.values.len() == sf.n_vars { raw.values.clone() } else { vec![0.0; sf.n_vars] };
    let solution = lift::recover(relaxation.program.space, values, raw.primal_obj, raw.status, raw.residuals);
    Ok(Solved { relaxation, raw, solution })
}

pub fn solve_spec(inst: &QcqpInstance, spec: &RelaxationSpec, cfg: &SolverConfig) -> Result<Solved, Error> {
    solve_relaxation(relax::build(inst, spec)?, cfg, &Clarabel)
}

/// Summary of one solved request, as reported in tables.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub label: String,
    pub request: Request,
    pub status: SolveStatus,
    pub bound: Option<f64>,
    pub time_s: f64,
    pub counts: Counts,
    pub x: Vec<f64>,
    pub notes: Vec<String>,
    pub diagnostic: Option<String>,
}

impl Outcome {
    fn failed(req: Request, err: &Error) -> Self {
        Outcome {
            label: req.label(),
            request: req,
            status: SolveStatus::Failed,
            bound: None,
            time_s: 0.0,
            counts: Counts::default(),
            x: Vec::new(),
            notes: Vec::new(),
            diagnostic: Some(err.to_string()),
        }
    }
}

pub fn solve_request(inst: &QcqpInstance, req: Request, alpha: Option<&AlphaAug>, cfg: &SolverConfig) -> Result<Outcome, Error> {
    let spec = req.spec(alpha)?;
    let s = solve_spec(inst, &spec, cfg)?;
    Ok(Outcome {
        label: req.label(),
        request: req,
        status: s.status(),
        bound: s.bound(),
        time_s: s.raw.time_s,
        counts: s.counts(),
        x: s.solution.x.iter().copied().collect(),
        notes: s.relaxation.notes.clone(),
        diagnostic: s.raw.diagnostic.clone(),
    })
}

/// Like [`solve_request`] but folds errors into a `Failed` outcome so a
/// batch keeps going.
pub fn solve_request_lenient(inst: &QcqpInstance, req: Request, alpha: Option<&AlphaAug>, cfg: &SolverConfig) -> Outcome {
    solve_request(inst, req, alpha, cfg).unwrap_or_else(|e| Outcome::failed(req, &e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_labels() {
        for r in ["gsrt-a", "rlt+alpha", "hsoc"] {
            assert_eq!(Request::parse(r).unwrap().label(), r);
        }
        assert!(Request::parse("hsoc+alpha").is_err());
        assert!(matches!(Request::parse("nope"), Err(Error::Relax(RelaxError::UnknownRelaxation { .. }))));
    }

    #[test]
    fn alpha_spec_forms() {
        assert_eq!(AlphaSpec::parse("u=1,2").unwrap(), AlphaSpec { u: vec![1.0, 2.0], alpha: None });
        assert_eq!(
            AlphaSpec::parse("u=1, 1; alpha=0.6667").unwrap(),
            AlphaSpec { u: vec![1.0, 1.0], alpha: Some(0.6667) }
        );
        assert!(AlphaSpec::parse("alpha=1").is_err());
        assert!(AlphaSpec::parse("u=1,x").is_err());
        assert!(AlphaSpec::parse("u=1;beta=2").is_err());
    }

    #[test]
    fn missing_alpha_is_reported() {
        let inst = crate::fixtures::load("example3").unwrap().instance;
        let err = solve_request(&inst, Request::with_alpha(Family::Rlt), None, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Relax(RelaxError::MissingAlpha(_))));
    }
}
