//! Per-constraint decomposition data and the unified GSOC catalogue.
//!
//! Every quadratic constraint is rewritten as one (convex) or two
//! (nonconvex) second-order cone constraints of the form
//! `‖Cx + ξ‖ ≤ ζᵀx + ηᵀz + θ`, where `z` holds one auxiliary norm
//! variable per nonconvex constraint.

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, EigenSplit, LinalgError, SymMatrix};
use crate::lift::LinForm;
use crate::model::{Classification, QcqpInstance, QuadConstraint};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecomposeError {
    #[error("constraint {index}: c is not in the range of Q, type-B form unavailable")]
    RangeConditionViolated { index: usize },
    #[error("constraint {index}: convex constraint has empty interior (gamma = {gamma:e})")]
    EmptyInterior { index: usize, gamma: f64 },
    #[error("constraint {index}: {kind:?} requested for a {actual} constraint")]
    KindMismatch { index: usize, kind: DecompKind, actual: &'static str },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecompKind {
    ConvexA,
    ConvexB,
    NonconvexA,
    NonconvexB1,
    NonconvexB2,
}

impl DecompKind {
    pub fn is_convex(self) -> bool {
        matches!(self, DecompKind::ConvexA | DecompKind::ConvexB)
    }

    pub fn is_type_b(self) -> bool {
        !matches!(self, DecompKind::ConvexA | DecompKind::NonconvexA)
    }
}

/// Scheme used for nonconvex constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GsrtScheme {
    A,
    B,
}

#[derive(Debug, Clone)]
pub struct ConstraintDecomposition {
    pub index: usize,
    pub kind: DecompKind,
    /// Convex kinds: `Q = BᵀB`.
    pub b: Option<DMatrix<f64>>,
    pub split: EigenSplit,
    pub qdag: Option<SymMatrix>,
    /// `½Q†c`.
    pub x0: Option<DVector<f64>>,
    pub delta: Option<f64>,
    /// `¼cᵀQ†c − d`.
    pub gamma: Option<f64>,
}

pub fn decompose_constraint(
    index: usize,
    qc: &QuadConstraint,
    kind: DecompKind,
    tol: f64,
) -> Result<ConstraintDecomposition, DecomposeError> {
    let split = linalg::split_signed(&qc.q, tol)?;
    let convex = split.neg_count() == 0;
    if convex != kind.is_convex() {
        let actual = if convex { "convex" } else { "nonconvex" };
        return Err(DecomposeError::KindMismatch { index, kind, actual });
    }
    let b = convex.then(|| split.l.clone());
    if !kind.is_type_b() {
        return Ok(ConstraintDecomposition {
            index,
            kind,
            b,
            split,
            qdag: None,
            x0: None,
            delta: None,
            gamma: None,
        });
    }
    if !linalg::in_range(&qc.q, &qc.c, tol)? {
        return Err(DecomposeError::RangeConditionViolated { index });
    }
    let qdag = linalg::pinv(&qc.q, tol)?;
    let x0 = qdag.mul_vec(&qc.c) * 0.5;
    let gamma = 0.5 * qc.c.dot(&x0) - qc.d;
    let kind = match kind {
        DecompKind::ConvexB => {
            // tiny negative gamma from rounding is a degenerate single point
            let slack = tol * (qc.d.abs() + 0.5 * qc.c.dot(&x0).abs()).max(1.0);
            if gamma < -slack {
                return Err(DecomposeError::EmptyInterior { index, gamma });
            }
            DecompKind::ConvexB
        }
        _ if gamma > 0.0 => DecompKind::NonconvexB1,
        _ => DecompKind::NonconvexB2,
    };
    Ok(ConstraintDecomposition {
        index,
        kind,
        b,
        split,
        qdag: Some(qdag),
        x0: Some(x0),
        delta: Some(libm::sqrt(gamma.abs())),
        gamma: Some(gamma),
    })
}

/// Decomposes every constraint. Nonconvex constraints use `scheme`, falling
/// back to type A when ineligible (a note is recorded); convex constraints
/// use type B only when `convex_b` is set and they are eligible.
pub fn decompose_all(
    inst: &QcqpInstance,
    cls: &Classification,
    scheme: GsrtScheme,
    convex_b: bool,
    tol: f64,
    notes: &mut Vec<String>,
) -> Result<Vec<ConstraintDecomposition>, DecomposeError> {
    let mut out = Vec::with_capacity(inst.l());
    for (i, qc) in inst.quad().iter().enumerate() {
        let eligible = cls.type_b_eligible(i);
        let kind = if cls.is_convex(i) {
            if convex_b && eligible {
                DecompKind::ConvexB
            } else {
                if convex_b {
                    notes.push(alloc::format!("constraint {i}: convex type-B ineligible, using type A"));
                }
                DecompKind::ConvexA
            }
        } else if scheme == GsrtScheme::B && eligible {
            DecompKind::NonconvexB1
        } else {
            if scheme == GsrtScheme::B {
                notes.push(alloc::format!("constraint {i}: GSRT-B ineligible, falling back to GSRT-A"));
            }
            DecompKind::NonconvexA
        };
        out.push(decompose_constraint(i, qc, kind, tol)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GsocSide {
    Convex,
    /// The `L` (left) norm of a nonconvex constraint.
    L,
    /// The `M` (right) norm; equal to the auxiliary at rank-1 points.
    M,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GsocOrigin {
    pub constraint: usize,
    pub side: GsocSide,
}

/// `‖Cx + ξ‖ ≤ ζᵀx + ηᵀz + θ`.
#[derive(Debug, Clone)]
pub struct GsocForm {
    pub c: DMatrix<f64>,
    pub xi: DVector<f64>,
    pub zeta: DVector<f64>,
    pub eta: DVector<f64>,
    pub theta: f64,
    pub origin: GsocOrigin,
    pub from_convex: bool,
    pub kind: DecompKind,
}

impl GsocForm {
    pub fn rows(&self) -> usize {
        self.c.nrows()
    }

    /// Row `k` of `Cx + ξ` as an affine form in `(x, z)`.
    pub fn h(&self, k: usize) -> LinForm {
        LinForm {
            x: self.c.row(k).transpose(),
            z: DVector::zeros(self.eta.len()),
            c: self.xi[k],
        }
    }

    pub fn l(&self) -> LinForm {
        LinForm { x: self.zeta.clone(), z: self.eta.clone(), c: self.theta }
    }

    pub fn lhs(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c * x + &self.xi
    }

    pub fn rhs(&self, x: &DVector<f64>, z: &DVector<f64>) -> f64 {
        self.zeta.dot(x) + self.eta.dot(z) + self.theta
    }

    /// `l(x,z) − ‖Cx + ξ‖`.
    pub fn slack(&self, x: &DVector<f64>, z: &DVector<f64>) -> f64 {
        self.rhs(x, z) - self.lhs(x).norm()
    }
}

fn stack(top: &DMatrix<f64>, row: Option<&DVector<f64>>) -> DMatrix<f64> {
    let n = top.ncols();
    let extra = usize::from(row.is_some());
    let mut m = DMatrix::zeros(top.nrows() + extra, n);
    m.view_mut((0, 0), (top.nrows(), n)).copy_from(top);
    if let Some(r) = row {
        for c in 0..n {
            m[(top.nrows(), c)] = r[c];
        }
    }
    m
}

fn append(v: &DVector<f64>, tail: Option<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(v.len() + usize::from(tail.is_some()));
    out.rows_mut(0, v.len()).copy_from(v);
    if let Some(t) = tail {
        out[v.len()] = t;
    }
    out
}

/// The GSOC forms of one constraint (one if convex, `[L, M]` otherwise).
pub fn constraint_forms(
    qc: &QuadConstraint,
    dec: &ConstraintDecomposition,
    z_index: Option<usize>,
    nz: usize,
) -> Vec<GsocForm> {
    let n = qc.c.len();
    let i = dec.index;
    let zeros_z = DVector::zeros(nz);
    let form = |c, xi, zeta, eta, theta, side| GsocForm {
        c,
        xi,
        zeta,
        eta,
        theta,
        origin: GsocOrigin { constraint: i, side },
        from_convex: side == GsocSide::Convex,
        kind: dec.kind,
    };
    match dec.kind {
        DecompKind::ConvexA => {
            let b = dec.b.as_ref().expect("convex decomposition carries B");
            let c = stack(b, Some(&(-&qc.c * 0.5)));
            let xi = append(&DVector::zeros(b.nrows()), Some(0.5 * (-qc.d - 1.0)));
            alloc::vec![form(c, xi, -&qc.c * 0.5, zeros_z, 0.5 * (1.0 - qc.d), GsocSide::Convex)]
        }
        DecompKind::ConvexB => {
            let b = dec.b.as_ref().expect("convex decomposition carries B");
            let x0 = dec.x0.as_ref().expect("type-B carries x0");
            let delta = dec.delta.expect("type-B carries delta");
            alloc::vec![form(b.clone(), b * x0, DVector::zeros(n), zeros_z, delta, GsocSide::Convex)]
        }
        kind => {
            let t = z_index.expect("nonconvex constraint has an auxiliary");
            let mut eta = DVector::zeros(nz);
            eta[t] = 1.0;
            let (l, m) = (&dec.split.l, &dec.split.m);
            let (cl, xil, cm, xim) = match kind {
                DecompKind::NonconvexA => {
                    let half_c = &qc.c * 0.5;
                    (
                        stack(l, Some(&half_c)),
                        append(&DVector::zeros(l.nrows()), Some(0.5 * (qc.d + 1.0))),
                        stack(m, Some(&half_c)),
                        append(&DVector::zeros(m.nrows()), Some(0.5 * (qc.d - 1.0))),
                    )
                }
                DecompKind::NonconvexB1 | DecompKind::NonconvexB2 => {
                    let x0 = dec.x0.as_ref().expect("type-B carries x0");
                    let delta = dec.delta.expect("type-B carries delta");
                    let zero = DVector::zeros(n);
                    if kind == DecompKind::NonconvexB1 {
                        (
                            l.clone(),
                            l * x0,
                            stack(m, Some(&zero)),
                            append(&(m * x0), Some(delta)),
                        )
                    } else {
                        (
                            stack(l, Some(&zero)),
                            append(&(l * x0), Some(delta)),
                            m.clone(),
                            m * x0,
                        )
                    }
                }
                _ => unreachable!(),
            };
            let zero = DVector::zeros(n);
            alloc::vec![
                form(cl, xil, zero.clone(), eta.clone(), 0.0, GsocSide::L),
                form(cm, xim, zero, eta, 0.0, GsocSide::M),
            ]
        }
    }
}

/// All GSOC forms in constraint order: `2(l − k) + k` entries.
pub fn gsoc_catalogue(
    inst: &QcqpInstance,
    cls: &Classification,
    decomps: &[ConstraintDecomposition],
) -> Vec<GsocForm> {
    let nz = cls.nonconvex.len();
    inst.quad()
        .iter()
        .zip(decomps)
        .enumerate()
        .flat_map(|(i, (qc, dec))| constraint_forms(qc, dec, cls.z_index(i), nz))
        .collect()
}

/// Value of the auxiliary that makes the `M` side an equality at `x`.
pub fn aux_value(forms: &[GsocForm], constraint: usize, x: &DVector<f64>) -> Option<f64> {
    forms
        .iter()
        .find(|f| f.origin.constraint == constraint && f.origin.side == GsocSide::M)
        .map(|f| f.lhs(x).norm())
}

/// Lifts `x` to `(x, z)` with every auxiliary set to its `M`-side norm.
pub fn lift_aux(forms: &[GsocForm], cls: &Classification, x: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        cls.nonconvex.len(),
        cls.nonconvex.iter().map(|&i| aux_value(forms, i, x).unwrap_or(0.0)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_TOL;
    use crate::model::tests::{example1, example3};
    use crate::model::{classify, LinConstraint};
    use alloc::vec;
    use proptest::prelude::*;

    fn qc_from(q: DMatrix<f64>, c: Vec<f64>, d: f64) -> QuadConstraint {
        QuadConstraint { q: SymMatrix::new(q).unwrap(), c: DVector::from_vec(c), d }
    }

    #[test]
    fn example1_is_b1_with_unit_delta() {
        let inst = example1();
        let d = decompose_constraint(0, &inst.quad()[0], DecompKind::NonconvexB1, DEFAULT_TOL)
            .unwrap();
        assert_eq!(d.kind, DecompKind::NonconvexB1);
        assert!((d.qdag.unwrap().as_matrix() - inst.quad()[0].q.as_matrix()).norm() < 1e-12);
        assert!(d.x0.unwrap().norm() < 1e-14);
        assert!((d.gamma.unwrap() - 1.0).abs() < 1e-14);
        assert!((d.delta.unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_convex_a() {
        let qc = qc_from(DMatrix::identity(3, 3), vec![0.0; 3], -1.0);
        let d = decompose_constraint(0, &qc, DecompKind::ConvexA, DEFAULT_TOL).unwrap();
        let b = d.b.unwrap();
        assert!((b.transpose() * &b - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn range_violation_reported() {
        let qc = qc_from(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0])), vec![0.0, 1.0], -1.0);
        assert!(matches!(
            decompose_constraint(3, &qc, DecompKind::ConvexB, DEFAULT_TOL),
            Err(DecomposeError::RangeConditionViolated { index: 3 })
        ));
    }

    #[test]
    fn catalogue_counts() {
        let inst = example1();
        let cls = classify(&inst, DEFAULT_TOL).unwrap();
        let mut notes = Vec::new();
        let dec = decompose_all(&inst, &cls, GsrtScheme::A, false, DEFAULT_TOL, &mut notes).unwrap();
        let forms = gsoc_catalogue(&inst, &cls, &dec);
        assert_eq!(forms.len(), 2);
        for f in &forms {
            assert_eq!(f.eta.as_slice(), &[1.0]);
        }
        let inst = example3();
        let cls = classify(&inst, DEFAULT_TOL).unwrap();
        let dec = decompose_all(&inst, &cls, GsrtScheme::A, false, DEFAULT_TOL, &mut notes).unwrap();
        let forms = gsoc_catalogue(&inst, &cls, &dec);
        assert_eq!(forms.len(), 3);
        assert_eq!(forms.iter().filter(|f| f.from_convex).count(), 1);
        assert_eq!(forms.len(), 2 * inst.l() - cls.k());
    }

    #[test]
    fn gsrt_b_fallback_records_note() {
        // example 3's nonconvex Q is nonsingular, the convex one is rank one
        let inst = example3();
        let cls = classify(&inst, DEFAULT_TOL).unwrap();
        let mut notes = Vec::new();
        let dec = decompose_all(&inst, &cls, GsrtScheme::B, true, DEFAULT_TOL, &mut notes).unwrap();
        assert_eq!(dec[0].kind, DecompKind::ConvexA);
        assert!(dec[1].kind == DecompKind::NonconvexB1 || dec[1].kind == DecompKind::NonconvexB2);
        assert_eq!(notes.len(), 1);
    }

    fn pseudo(seed: u64, len: usize) -> Vec<f64> {
        let mut s = seed;
        (0..len)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn b_recentering_identity_on_random_points() {
        let n = 4;
        let q = DMatrix::from_vec(n, n, pseudo(5, n * n));
        let q = &q + q.transpose();
        let qc = qc_from(q, pseudo(6, n), 0.3);
        let d = decompose_constraint(0, &qc, DecompKind::NonconvexB1, DEFAULT_TOL).unwrap();
        let x0 = d.x0.clone().unwrap();
        for s in 0..100 {
            let x = DVector::from_vec(pseudo(100 + s, n)) * 3.0;
            let y = &x + &x0;
            let lhs = qc.eval(&x);
            let rhs = (&d.split.l * &y).norm_squared() - (&d.split.m * &y).norm_squared()
                - d.gamma.unwrap();
            assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
        }
    }

    fn arb_constraint() -> impl Strategy<Value = (QuadConstraint, bool)> {
        (2usize..5, any::<u64>(), -3.0f64..3.0, any::<bool>()).prop_map(|(n, seed, d, in_range)| {
            let q = DMatrix::from_vec(n, n, pseudo(seed, n * n));
            let q = &q + q.transpose();
            let c = if in_range {
                &q * DVector::from_vec(pseudo(seed ^ 0x55, n))
            } else {
                DVector::from_vec(pseudo(seed ^ 0xaa, n))
            };
            (qc_from(q, c.iter().copied().collect(), d), in_range)
        })
    }

    proptest! {
        #[test]
        fn forms_equivalent_to_constraint((qc, _) in arb_constraint(), xs in proptest::collection::vec(-4.0f64..4.0, 5)) {
            let n = qc.c.len();
            let x = DVector::from_column_slice(&xs[..n]);
            let convex = linalg::is_psd(&qc.q, DEFAULT_TOL).unwrap();
            let mut kinds = vec![if convex { DecompKind::ConvexA } else { DecompKind::NonconvexA }];
            if linalg::in_range(&qc.q, &qc.c, DEFAULT_TOL).unwrap() {
                kinds.push(if convex { DecompKind::ConvexB } else { DecompKind::NonconvexB1 });
            }
            let g = qc.eval(&x);
            for kind in kinds {
                let dec = match decompose_constraint(0, &qc, kind, DEFAULT_TOL) {
                    Ok(d) => d,
                    Err(DecomposeError::EmptyInterior { .. }) => continue,
                    Err(e) => panic!("{e}"),
                };
                let forms = constraint_forms(&qc, &dec, Some(0), 1);
                let z = DVector::from_vec(vec![aux_value(&forms, 0, &x).unwrap_or(0.0)]);
                let ok = forms.iter().all(|f| f.slack(&x, &z) >= -1e-9 * (1.0 + g.abs()));
                // away from the boundary the SOC system and the quadratic agree
                if g < -1e-6 * (1.0 + x.norm_squared()) { prop_assert!(ok, "{:?} g={}", kind, g); }
                if g > 1e-6 * (1.0 + x.norm_squared()) { prop_assert!(!ok, "{:?} g={}", kind, g); }
            }
        }
    }

    #[test]
    fn linear_constraint_single_variable() {
        let r = LinConstraint { a: DVector::from_vec(vec![0.0, -2.0]), b: 0.0 };
        assert_eq!(r.single_variable(), Some((1, -2.0)));
    }
}
