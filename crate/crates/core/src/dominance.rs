//! Residuals of the implied matrix inequalities behind the dominance and
//! redundancy results. Each check evaluates a linearized matrix (or norm
//! bound) at a lifted point and reports a normalized margin; a margin above
//! `-DOMINANCE_TOL` means the inequality holds at that point.

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::decompose::{self, DecompKind, GsocForm};
use crate::lift::{Affine, LiftedSpace, LinForm, PsdBlock};
use crate::linalg;
use crate::model::QcqpInstance;
use crate::relax::{self, AlphaAug, RelaxError, Relaxation};

pub const DOMINANCE_TOL: f64 = 1e-6;

/// Square symmetric matrix of affine forms in the base variables.
pub type FormMatrix = Vec<Vec<LinForm>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// Normalized margin: `λ_min / max(1, ‖M‖_F)` or the scaled norm slack.
    pub margin: f64,
}

impl Check {
    pub fn holds(&self, tol: f64) -> bool {
        self.margin >= -tol
    }
}

pub fn psd_margin(m: &DMatrix<f64>) -> f64 {
    linalg::min_eigenvalue(m) / m.norm().max(1.0)
}

fn psd_check(name: String, blk: &PsdBlock, v: &[f64]) -> Check {
    Check { name, margin: psd_margin(&blk.eval(v)) }
}

/// Arrow matrix `[[l I_m, h], [hᵀ, l]]` using the first `m` rows of `h`.
pub fn arrow(f: &GsocForm, m: usize) -> FormMatrix {
    let l = f.l();
    let zero = l.scale(0.0);
    (0..=m)
        .map(|i| {
            (0..=m)
                .map(|j| match (i == m, j == m) {
                    (true, true) => l.clone(),
                    (false, true) => f.h(i),
                    (true, false) => f.h(j),
                    (false, false) if i == j => l.clone(),
                    _ => zero.clone(),
                })
                .collect()
        })
        .collect()
}

/// `Φ = [[diag(u)diag(x), diag(u)x], [·, α]]` on the first `m` coordinates.
pub fn phi(space: &LiftedSpace, a: &AlphaAug, m: usize) -> FormMatrix {
    let (n, nz) = (space.n, space.nz);
    let ux = |k: usize| LinForm::x_coord(n, nz, k).scale(a.u[k]);
    (0..=m)
        .map(|i| {
            (0..=m)
                .map(|j| match (i == m, j == m) {
                    (true, true) => LinForm::constant(n, nz, a.alpha),
                    (false, true) => ux(i),
                    (true, false) => ux(j),
                    (false, false) if i == j => ux(i),
                    _ => LinForm::zero(n, nz),
                })
                .collect()
        })
        .collect()
}

/// Linearized Hadamard product of two equally sized form matrices.
pub fn lin_hadamard(space: &LiftedSpace, a: &FormMatrix, b: &FormMatrix, name: String) -> PsdBlock {
    assert_eq!(a.len(), b.len());
    PsdBlock::from_fn(name, a.len(), |i, j| space.prod(&a[i][j], &b[i][j]))
}

/// Linearized Kronecker product `a ⊗ b`.
pub fn lin_kron(space: &LiftedSpace, a: &FormMatrix, b: &FormMatrix, name: String) -> PsdBlock {
    let q = b.len();
    PsdBlock::from_fn(name, a.len() * q, |i, j| space.prod(&a[i / q][j / q], &b[i % q][j % q]))
}

/// `α diag(u)⁻¹ diag(x) − X ⪰ 0`, implied by RLT with the alpha row.
pub fn lmi35_check(space: &LiftedSpace, a: &AlphaAug, v: &[f64]) -> Check {
    psd_check("lmi35".into(), &relax::lmi35_block(space, a), v)
}

/// The Hadamard LMI of every convex constraint, implied by SOC-RLT with
/// the alpha row.
pub fn hsoc_checks(rel: &Relaxation, a: &AlphaAug, v: &[f64], tol: f64) -> Result<Vec<Check>, RelaxError> {
    let sp = &rel.program.space;
    let mut out = Vec::new();
    for &i in &rel.classification.convex {
        let qc = &rel.instance.quad()[i];
        let b = linalg::spectral_factor(&qc.q, tol)?;
        let name = alloc::format!("hsoc:{i}");
        out.push(psd_check(name.clone(), &relax::hsoc_matrix(sp, qc, &b, a, name), v));
    }
    Ok(out)
}

/// Recentred GSOC forms of every convex constraint that admits them.
pub fn convex_b_forms(inst: &QcqpInstance, tol: f64) -> Result<Vec<GsocForm>, RelaxError> {
    let cls = crate::model::classify(inst, tol)?;
    let mut out = Vec::new();
    for &i in &cls.convex {
        if !cls.type_b_eligible(i) {
            continue;
        }
        let qc = &inst.quad()[i];
        let dec = decompose::decompose_constraint(i, qc, DecompKind::ConvexB, tol)?;
        out.extend(decompose::constraint_forms(qc, &dec, None, 0));
    }
    Ok(out)
}

/// `lin(lₛlₜ) − ‖lin(hˢ(hᵗ)ᵀ)‖_F` for every pair `s < t` of `forms`.
pub fn sst_checks(space: &LiftedSpace, forms: &[GsocForm], v: &[f64]) -> Vec<Check> {
    let mut out = Vec::new();
    for s in 0..forms.len() {
        for t in (s + 1)..forms.len() {
            let (fs, ft) = (&forms[s], &forms[t]);
            let beta = space.prod(&fs.l(), &ft.l()).eval(v);
            let mut f2 = 0.0;
            for a in 0..fs.rows() {
                for b in 0..ft.rows() {
                    let e = space.prod(&fs.h(a), &ft.h(b)).eval(v);
                    f2 += e * e;
                }
            }
            let f = libm::sqrt(f2);
            let name = alloc::format!("sst:{}:{}", fs.origin.constraint, ft.origin.constraint);
            out.push(Check { name, margin: (beta - f) / beta.abs().max(f).max(1.0) });
        }
    }
    out
}

/// `arrow(f) ∘ Φ ⪰ 0` for every GSOC of the relaxation.
pub fn hadamard_checks(rel: &Relaxation, a: &AlphaAug, v: &[f64]) -> Vec<Check> {
    let sp = &rel.program.space;
    rel.gsocs
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let m = f.rows().min(sp.n);
            let blk = lin_hadamard(sp, &arrow(f, m), &phi(sp, a, m), alloc::format!("hadamard:{k}"));
            psd_check(blk.name.clone(), &blk, v)
        })
        .collect()
}

/// `arrow(f) ⊗ Φ ⪰ 0` for every GSOC of the relaxation.
pub fn kron_arrow_checks(rel: &Relaxation, a: &AlphaAug, v: &[f64]) -> Vec<Check> {
    let sp = &rel.program.space;
    rel.gsocs
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let blk = lin_kron(sp, &arrow(f, f.rows()), &phi(sp, a, sp.n), alloc::format!("kron:{k}"));
            psd_check(blk.name.clone(), &blk, v)
        })
        .collect()
}

/// `[[−I_r, Lx], [·, cᵀx + d]] ⊗ Φ ⪯ 0` for every convex constraint, where
/// `Q = LᵀL`.
pub fn kron_constraint_checks(rel: &Relaxation, a: &AlphaAug, v: &[f64]) -> Vec<Check> {
    let sp = &rel.program.space;
    let (n, nz) = (sp.n, sp.nz);
    let mut out = Vec::new();
    for &i in &rel.classification.convex {
        let qc = &rel.instance.quad()[i];
        let l = &rel.decomps[i].split.l;
        let r = l.nrows();
        let a_mat: FormMatrix = (0..=r)
            .map(|p| {
                (0..=r)
                    .map(|q| match (p == r, q == r) {
                        (true, true) => LinForm::of_x(qc.c.clone(), nz, qc.d),
                        (false, true) => LinForm::of_x(l.row(p).transpose(), nz, 0.0),
                        (true, false) => LinForm::of_x(l.row(q).transpose(), nz, 0.0),
                        (false, false) => LinForm::constant(n, nz, if p == q { -1.0 } else { 0.0 }),
                    })
                    .collect()
            })
            .collect();
        let mut blk = lin_kron(sp, &a_mat, &phi(sp, a, n), alloc::format!("kron-constraint:{i}"));
        blk.upper = blk.upper.into_iter().map(|e: Affine| e.scaled(-1.0)).collect();
        out.push(psd_check(blk.name.clone(), &blk, v));
    }
    out
}
