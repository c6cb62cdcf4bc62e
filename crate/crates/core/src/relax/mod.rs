//! Relaxation builders. A [`RelaxationSpec`] selects which valid inequality
//! families are layered on top of the basic SDP relaxation; [`build`] turns
//! an instance plus spec into a [`ConicProgram`].

mod builders;
mod family;

pub use builders::{
    add_gsrt, add_hsoc, add_ksoc_full, add_ksoc_sub, add_lmi35, add_rlt, add_soc_rlt, add_sst,
    build_sdp, hsoc_matrix, ksoc_full_block, lmi35_block, ksoc_sub_block, quad_affine, sst_pairs, Context,
};
pub use family::Family;

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::DVector;

use crate::decompose::{self, ConstraintDecomposition, DecomposeError, GsocForm, GsrtScheme};
use crate::lift::{ConicProgram, LiftedSpace};
use crate::linalg::{LinalgError, DEFAULT_TOL};
use crate::model::{self, Classification, LinConstraint, ModelError, QcqpInstance};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RelaxError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("alpha_u must be positive, got {0}")]
    AlphaInvalid(f64),
    #[error("alpha vector u has length {found}, expected {expected}")]
    AlphaDim { expected: usize, found: usize },
    #[error("{0} requires an alpha specification")]
    MissingAlpha(&'static str),
    #[error("setting violated: {0}")]
    SettingViolated(&'static str),
    #[error("KSOC block of size {dim} exceeds the cap {cap}")]
    SizeCapExceeded { dim: usize, cap: usize },
    #[error("unknown relaxation '{name}'; valid names: {valid}")]
    UnknownRelaxation { name: String, valid: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaSource {
    UserSupplied,
    ComputedByRelaxation,
}

/// The redundant row `uᵀx ≤ α_u`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaAug {
    pub u: DVector<f64>,
    pub alpha: f64,
    pub source: AlphaSource,
}

impl AlphaAug {
    pub fn user(u: DVector<f64>, alpha: f64) -> Self {
        Self { u, alpha, source: AlphaSource::UserSupplied }
    }

    pub fn row(&self) -> LinConstraint {
        LinConstraint { a: self.u.clone(), b: self.alpha }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationSpec {
    pub rlt: bool,
    pub soc_rlt: bool,
    /// Use the recentred convex SOC form wherever `c ∈ Range(Q)`.
    pub soc_rlt_b: bool,
    pub gsrt: Option<GsrtScheme>,
    pub sst: bool,
    pub sst_include_convex_pairs: bool,
    pub ksoc_sub: bool,
    pub ksoc_full: bool,
    /// `α diag(u)⁻¹ diag(x) − X ⪰ 0`.
    pub lmi35: bool,
    /// Hadamard LMI per convex constraint.
    pub hsoc: bool,
    /// Bound-factor products of two-sided single-variable rows; implied by
    /// RLT, so only emitted when `rlt` is off.
    pub box_products: bool,
    pub epigraph: bool,
    pub alpha: Option<AlphaAug>,
    /// Append the alpha row to the linear rows before generating products.
    pub alpha_row: bool,
    pub ksoc_cap: usize,
    pub tol: f64,
}

impl Default for RelaxationSpec {
    fn default() -> Self {
        Self {
            rlt: false,
            soc_rlt: false,
            soc_rlt_b: false,
            gsrt: None,
            sst: false,
            sst_include_convex_pairs: false,
            ksoc_sub: false,
            ksoc_full: false,
            lmi35: false,
            hsoc: false,
            box_products: true,
            epigraph: false,
            alpha: None,
            alpha_row: false,
            ksoc_cap: 200,
            tol: DEFAULT_TOL,
        }
    }
}

impl RelaxationSpec {
    pub fn with_alpha_row(mut self, alpha: AlphaAug) -> Self {
        self.alpha = Some(alpha);
        self.alpha_row = true;
        self
    }

    /// Scheme actually used: SST/KSOC without an explicit scheme use A.
    pub fn effective_scheme(&self) -> Option<GsrtScheme> {
        self.gsrt.or(if self.sst || self.ksoc_sub || self.ksoc_full { Some(GsrtScheme::A) } else { None })
    }
}

/// A built relaxation together with the data it was derived from.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub program: ConicProgram,
    /// The instance the program was built from (after epigraph lifting).
    pub instance: QcqpInstance,
    pub classification: Classification,
    pub decomps: Vec<ConstraintDecomposition>,
    pub gsocs: Vec<GsocForm>,
    /// Linear rows used for products (original rows plus the alpha row).
    pub rows: Vec<LinConstraint>,
    pub notes: Vec<String>,
}

pub fn build(inst: &QcqpInstance, spec: &RelaxationSpec) -> Result<Relaxation, RelaxError> {
    let mut notes = Vec::new();
    let inst = if spec.epigraph { model::epigraph_reformulate(inst)? } else { inst.clone() };
    let n = inst.n();
    let alpha = match &spec.alpha {
        Some(a) => {
            let mut a = a.clone();
            if spec.epigraph && a.u.len() + 1 == n {
                a.u = a.u.clone().insert_row(n - 1, 0.0);
            }
            if a.u.len() != n {
                return Err(RelaxError::AlphaDim { expected: n, found: a.u.len() });
            }
            if a.alpha.is_nan() || a.alpha <= 0.0 {
                return Err(RelaxError::AlphaInvalid(a.alpha));
            }
            Some(a)
        }
        None => None,
    };
    if (spec.lmi35 || spec.hsoc) && alpha.is_none() {
        return Err(RelaxError::MissingAlpha(if spec.hsoc { "hsoc" } else { "lmi35" }));
    }
    if spec.lmi35 || spec.hsoc {
        if !inst.has_nonnegativity_rows() {
            return Err(RelaxError::SettingViolated("x >= 0 rows required"));
        }
        let a = alpha.as_ref().expect("checked above");
        if a.u.iter().any(|&v| v <= 0.0) {
            return Err(RelaxError::SettingViolated("u must be componentwise positive"));
        }
    }
    let cls = model::classify(&inst, spec.tol)?;
    let scheme = spec.effective_scheme();
    let decomps = decompose::decompose_all(
        &inst,
        &cls,
        scheme.unwrap_or(GsrtScheme::A),
        spec.soc_rlt_b,
        spec.tol,
        &mut notes,
    )?;
    let nz = if scheme.is_some() { cls.nonconvex.len() } else { 0 };
    let gsocs: Vec<GsocForm> = if scheme.is_some() {
        decompose::gsoc_catalogue(&inst, &cls, &decomps)
    } else {
        inst.quad()
            .iter()
            .zip(&decomps)
            .filter(|(_, d)| d.kind.is_convex())
            .flat_map(|(qc, d)| decompose::constraint_forms(qc, d, None, 0))
            .collect()
    };
    let mut rows = inst.lin().to_vec();
    if spec.alpha_row {
        if let Some(a) = &alpha {
            rows.push(a.row());
        }
    }
    scale_warning(&inst, &mut notes);
    let space = LiftedSpace::new(n, nz);
    let ctx = Context { inst: &inst, cls: &cls, decomps: &decomps, gsocs: &gsocs, rows: &rows, space, spec, alpha: alpha.as_ref() };
    let mut prog = build_sdp(&ctx);
    if spec.rlt {
        add_rlt(&mut prog, &ctx);
    }
    if spec.soc_rlt || spec.soc_rlt_b {
        add_soc_rlt(&mut prog, &ctx);
    }
    if scheme.is_some() {
        add_gsrt(&mut prog, &ctx);
    }
    if spec.sst {
        add_sst(&mut prog, &ctx);
    }
    if spec.ksoc_sub {
        add_ksoc_sub(&mut prog, &ctx);
    }
    if spec.ksoc_full {
        add_ksoc_full(&mut prog, &ctx)?;
    }
    if spec.lmi35 {
        add_lmi35(&mut prog, &ctx);
    }
    if spec.hsoc {
        add_hsoc(&mut prog, &ctx)?;
    }
    debug_assert!(prog.indices_in_range());
    Ok(Relaxation { program: prog, instance: inst, classification: cls, decomps, gsocs, rows, notes })
}

fn scale_warning(inst: &QcqpInstance, notes: &mut Vec<String>) {
    let norms: Vec<f64> = core::iter::once(inst.q0().frobenius_norm())
        .chain(inst.quad().iter().map(|q| q.q.frobenius_norm()))
        .filter(|v| *v > 0.0)
        .collect();
    let hi = norms.iter().copied().fold(0.0, f64::max);
    let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
    if lo.is_finite() && hi / lo > 1e6 {
        notes.push(alloc::format!("badly scaled data: Frobenius norm ratio {:.1e}", hi / lo));
    }
}
