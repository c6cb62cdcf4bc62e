//! Dominance and redundancy checks: solve the dominating relaxation, then
//! evaluate the dominated constraint at its optimum.

use qrelax_core::dominance::{self, Check, DOMINANCE_TOL};
use qrelax_core::lift::SolveStatus;
use qrelax_core::model::QcqpInstance;
use qrelax_core::relax::{self, AlphaAug, Family, RelaxError};

use crate::backend::{Clarabel, SolverConfig};
use crate::error::Error;
use crate::solve::{solve_relaxation, Request, Solved};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theorem {
    /// Diagonal LMI implied by RLT with the alpha row.
    T5,
    /// Hadamard LMI implied by SOC-RLT with the alpha row.
    T6,
    /// Arrow ∘ Φ implied by GSRT with the alpha row.
    C1,
    /// SST on recentred convex pairs implied by the SDP relaxation.
    T8,
    /// Constraint ⊗ Φ implied by SOC-RLT with the alpha row.
    T9,
    /// Arrow ⊗ Φ implied by GSRT with the alpha row.
    C2,
}

impl Theorem {
    pub const ALL: [Theorem; 6] = [Theorem::T5, Theorem::T6, Theorem::C1, Theorem::T8, Theorem::T9, Theorem::C2];

    pub fn id(self) -> &'static str {
        match self {
            Theorem::T5 => "thm5",
            Theorem::T6 => "thm6",
            Theorem::C1 => "cor1",
            Theorem::T8 => "thm8",
            Theorem::T9 => "thm9",
            Theorem::C2 => "cor2",
        }
    }

    pub fn parse(s: &str) -> Result<Theorem, Error> {
        let t = s.trim().to_ascii_lowercase();
        let t = t.strip_prefix("thm").or_else(|| t.strip_prefix("theorem")).unwrap_or(&t).to_string();
        match t.as_str() {
            "5" => Ok(Theorem::T5),
            "6" => Ok(Theorem::T6),
            "8" => Ok(Theorem::T8),
            "9" => Ok(Theorem::T9),
            "c1" | "cor1" | "corollary1" => Ok(Theorem::C1),
            "c2" | "cor2" | "corollary2" => Ok(Theorem::C2),
            _ => Err(Error::Invalid(format!("unknown theorem '{s}'; valid: thm5, thm6, cor1, thm8, thm9, cor2"))),
        }
    }

    /// The relaxation whose optimum is inspected.
    pub fn dominating(self) -> Request {
        match self {
            Theorem::T5 => Request::with_alpha(Family::Rlt),
            Theorem::T6 | Theorem::T9 => Request::with_alpha(Family::SocRlt),
            Theorem::C1 | Theorem::C2 => Request::with_alpha(Family::GsrtA),
            Theorem::T8 => Request::plain(Family::Sdp),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub instance: String,
    pub theorem: Theorem,
    pub relaxation: String,
    pub status: SolveStatus,
    pub bound: Option<f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn worst(&self) -> Option<&Check> {
        self.checks.iter().min_by(|a, b| a.margin.total_cmp(&b.margin))
    }
}

fn alpha_setting(inst: &QcqpInstance, alpha: Option<&AlphaAug>) -> Result<AlphaAug, Error> {
    let a = alpha.ok_or(RelaxError::MissingAlpha("dominance check"))?;
    if !inst.has_nonnegativity_rows() {
        return Err(RelaxError::SettingViolated("x >= 0 rows required").into());
    }
    if a.u.iter().any(|&v| v <= 0.0) {
        return Err(RelaxError::SettingViolated("u must be componentwise positive").into());
    }
    Ok(a.clone())
}

fn solve(inst: &QcqpInstance, req: Request, alpha: Option<&AlphaAug>, cfg: &SolverConfig) -> Result<Solved, Error> {
    let rel = relax::build(inst, &req.spec(alpha)?)?;
    solve_relaxation(rel, cfg, &Clarabel)
}

/// SDP bound with and without SST on every pair of recentred convex forms.
pub fn sst_convex_pair_bounds(inst: &QcqpInstance, cfg: &SolverConfig) -> Result<(Solved, Solved), Error> {
    let forms = dominance::convex_b_forms(inst, qrelax_core::linalg::DEFAULT_TOL)?;
    if forms.len() < 2 {
        return Err(RelaxError::SettingViolated("needs two convex constraints with c in Range(Q)").into());
    }
    let base = relax::build(inst, &Family::Sdp.spec())?;
    let mut with = base.clone();
    let sp = with.program.space;
    for s in 0..forms.len() {
        for t in (s + 1)..forms.len() {
            let (fs, ft) = (&forms[s], &forms[t]);
            let entries = (0..fs.rows())
                .flat_map(|a| (0..ft.rows()).map(move |b| (a, b)))
                .map(|(a, b)| sp.prod(&fs.h(a), &ft.h(b)))
                .collect();
            let name = format!("sst-b:{}:{}", fs.origin.constraint, ft.origin.constraint);
            with.program.push_frob(name, fs.rows(), ft.rows(), entries, sp.prod(&fs.l(), &ft.l()));
        }
    }
    Ok((solve_relaxation(base, cfg, &Clarabel)?, solve_relaxation(with, cfg, &Clarabel)?))
}

pub fn verify(
    inst: &QcqpInstance,
    theorem: Theorem,
    alpha: Option<&AlphaAug>,
    cfg: &SolverConfig,
) -> Result<VerifyReport, Error> {
    let req = theorem.dominating();
    let (solved, checks) = match theorem {
        Theorem::T8 => {
            let (base, with) = sst_convex_pair_bounds(inst, cfg)?;
            let forms = dominance::convex_b_forms(inst, qrelax_core::linalg::DEFAULT_TOL)?;
            let mut checks = dominance::sst_checks(&base.relaxation.program.space, &forms, &base.solution.values);
            if let (Some(a), Some(b)) = (base.bound(), with.bound()) {
                checks.push(Check { name: "bound-change".into(), margin: -(b - a).abs() / a.abs().max(1.0) });
            }
            (base, checks)
        }
        _ => {
            let a = alpha_setting(inst, alpha)?;
            let s = solve(inst, req, Some(&a), cfg)?;
            let v = &s.solution.values;
            let checks = match theorem {
                Theorem::T5 => vec![dominance::lmi35_check(&s.relaxation.program.space, &a, v)],
                Theorem::T6 => dominance::hsoc_checks(&s.relaxation, &a, v, qrelax_core::linalg::DEFAULT_TOL)?,
                Theorem::C1 => dominance::hadamard_checks(&s.relaxation, &a, v),
                Theorem::T9 => dominance::kron_constraint_checks(&s.relaxation, &a, v),
                Theorem::C2 => dominance::kron_arrow_checks(&s.relaxation, &a, v),
                Theorem::T8 => unreachable!(),
            };
            (s, checks)
        }
    };
    let status = solved.status();
    let pass = status == SolveStatus::Optimal && checks.iter().all(|c| c.holds(DOMINANCE_TOL));
    Ok(VerifyReport {
        instance: inst.name().to_string(),
        theorem,
        relaxation: req.label(),
        status,
        bound: solved.bound(),
        checks,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem_ids_round_trip() {
        for t in Theorem::ALL {
            assert_eq!(Theorem::parse(t.id()).unwrap(), t);
        }
        assert_eq!(Theorem::parse("5").unwrap(), Theorem::T5);
        assert!(Theorem::parse("7").is_err());
    }

    #[test]
    fn setting_violation_reported() {
        let inst = crate::fixtures::load("example1").unwrap().instance;
        let a = AlphaAug::user(nalgebra::DVector::from_vec(vec![1.0; 3]), 1.0);
        let err = verify(&inst, Theorem::T5, Some(&a), &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Relax(RelaxError::SettingViolated(_))));
        let err = verify(&inst, Theorem::T8, None, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Relax(RelaxError::SettingViolated(_))));
    }
}
