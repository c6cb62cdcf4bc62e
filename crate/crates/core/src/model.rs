//! The QCQP data model
//!
//! ```text
//! min  xᵀQ₀x + c₀ᵀx
//! s.t. xᵀQᵢx + cᵢᵀx + dᵢ ≤ 0,   i = 1..l
//!      aⱼᵀx ≤ bⱼ,               j = 1..m
//! ```
//!
//! plus constraint classification into convex (𝒞) and nonconvex (𝒩) sets.

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, LinalgError, SymMatrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dim { what: String, expected: usize, found: usize },
    #[error("invalid constraint {what}: {reason}")]
    InvalidConstraint { what: String, reason: &'static str },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadConstraint {
    pub q: SymMatrix,
    pub c: DVector<f64>,
    pub d: f64,
}

impl QuadConstraint {
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.q.quad_form(x) + self.c.dot(x) + self.d
    }

    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        self.q.mul_vec(x) * 2.0 + &self.c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinConstraint {
    pub a: DVector<f64>,
    pub b: f64,
}

impl LinConstraint {
    /// `aᵀx − b` (feasible when ≤ 0).
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.a.dot(x) - self.b
    }

    /// `Some((k, s))` when the row is `s·x_k ≤ b` with a single nonzero.
    pub fn single_variable(&self) -> Option<(usize, f64)> {
        let mut found = None;
        for (k, &v) in self.a.iter().enumerate() {
            if v != 0.0 {
                if found.is_some() {
                    return None;
                }
                found = Some((k, v));
            }
        }
        found
    }
}

/// A validated instance; immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct QcqpInstance {
    name: String,
    q0: SymMatrix,
    c0: DVector<f64>,
    quad: Vec<QuadConstraint>,
    lin: Vec<LinConstraint>,
}

fn check_vec(what: impl FnOnce() -> String, v: &DVector<f64>, n: usize) -> Result<(), ModelError> {
    if v.len() != n {
        return Err(ModelError::Dim { what: what(), expected: n, found: v.len() });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(ModelError::NonFinite(what()));
    }
    Ok(())
}

impl QcqpInstance {
    pub fn new(
        name: impl Into<String>,
        q0: SymMatrix,
        c0: DVector<f64>,
        quad: Vec<QuadConstraint>,
        lin: Vec<LinConstraint>,
    ) -> Result<Self, ModelError> {
        let n = q0.n();
        check_vec(|| "objective.c".into(), &c0, n)?;
        for (i, qc) in quad.iter().enumerate() {
            if qc.q.n() != n {
                return Err(ModelError::Dim {
                    what: alloc::format!("quadratic[{i}].Q"),
                    expected: n,
                    found: qc.q.n(),
                });
            }
            check_vec(|| alloc::format!("quadratic[{i}].c"), &qc.c, n)?;
            if !qc.d.is_finite() {
                return Err(ModelError::NonFinite(alloc::format!("quadratic[{i}].d")));
            }
            if qc.q.is_zero() {
                return Err(ModelError::InvalidConstraint {
                    what: alloc::format!("quadratic[{i}]"),
                    reason: "Q is the zero matrix",
                });
            }
        }
        for (j, lc) in lin.iter().enumerate() {
            check_vec(|| alloc::format!("linear[{j}].a"), &lc.a, n)?;
            if !lc.b.is_finite() {
                return Err(ModelError::NonFinite(alloc::format!("linear[{j}].b")));
            }
        }
        Ok(Self { name: name.into(), q0, c0, quad, lin })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.q0.n()
    }

    pub fn l(&self) -> usize {
        self.quad.len()
    }

    pub fn m(&self) -> usize {
        self.lin.len()
    }

    pub fn q0(&self) -> &SymMatrix {
        &self.q0
    }

    pub fn c0(&self) -> &DVector<f64> {
        &self.c0
    }

    pub fn quad(&self) -> &[QuadConstraint] {
        &self.quad
    }

    pub fn lin(&self) -> &[LinConstraint] {
        &self.lin
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same instance with an extra linear row appended.
    pub fn with_row(&self, row: LinConstraint) -> Result<Self, ModelError> {
        let mut lin = self.lin.clone();
        lin.push(row);
        Self::new(self.name.clone(), self.q0.clone(), self.c0.clone(), self.quad.clone(), lin)
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        self.q0.quad_form(x) + self.c0.dot(x)
    }

    /// Largest constraint value `max(gᵢ(x), aⱼᵀx − bⱼ)`, or `−∞` when
    /// the instance has no constraints.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let q = self.quad.iter().map(|c| c.eval(x));
        let l = self.lin.iter().map(|c| c.eval(x));
        q.chain(l).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_feasible(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    /// Indices `k` with a row `−s·x_k ≤ 0` (s > 0) for every coordinate.
    pub fn has_nonnegativity_rows(&self) -> bool {
        let mut seen = alloc::vec![false; self.n()];
        for r in &self.lin {
            if let Some((k, s)) = r.single_variable() {
                if s < 0.0 && r.b == 0.0 {
                    seen[k] = true;
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Partition of the quadratic constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub convex: Vec<usize>,
    pub nonconvex: Vec<usize>,
    /// Per quadratic constraint: `c ∈ Range(Q)`.
    pub type_b: Vec<bool>,
}

impl Classification {
    pub fn k(&self) -> usize {
        self.convex.len()
    }

    pub fn is_convex(&self, i: usize) -> bool {
        self.convex.binary_search(&i).is_ok()
    }

    /// Auxiliary index of a nonconvex constraint: its rank within sorted 𝒩.
    pub fn z_index(&self, i: usize) -> Option<usize> {
        self.nonconvex.binary_search(&i).ok()
    }

    pub fn type_b_eligible(&self, i: usize) -> bool {
        self.type_b[i]
    }
}

pub fn classify(inst: &QcqpInstance, tol: f64) -> Result<Classification, ModelError> {
    let mut convex = Vec::new();
    let mut nonconvex = Vec::new();
    let mut type_b = Vec::with_capacity(inst.l());
    for (i, qc) in inst.quad().iter().enumerate() {
        if linalg::is_psd(&qc.q, tol)? {
            convex.push(i);
        } else {
            nonconvex.push(i);
        }
        type_b.push(linalg::in_range(&qc.q, &qc.c, tol)?);
    }
    Ok(Classification { convex, nonconvex, type_b })
}

/// Moves the objective into a constraint over `(x, τ)`:
/// `min τ  s.t.  xᵀQ₀x + c₀ᵀx − τ ≤ 0` plus the original constraints.
pub fn epigraph_reformulate(inst: &QcqpInstance) -> Result<QcqpInstance, ModelError> {
    let n = inst.n();
    let pad_m = |m: &SymMatrix| {
        let mut p = DMatrix::zeros(n + 1, n + 1);
        p.view_mut((0, 0), (n, n)).copy_from(m.as_matrix());
        SymMatrix::new(p)
    };
    let pad_v = |v: &DVector<f64>, last: f64| {
        let mut p = DVector::zeros(n + 1);
        p.rows_mut(0, n).copy_from(v);
        p[n] = last;
        p
    };
    let mut quad = Vec::with_capacity(inst.l() + 1);
    for qc in inst.quad() {
        quad.push(QuadConstraint { q: pad_m(&qc.q)?, c: pad_v(&qc.c, 0.0), d: qc.d });
    }
    quad.push(QuadConstraint { q: pad_m(inst.q0())?, c: pad_v(inst.c0(), -1.0), d: 0.0 });
    let lin = inst.lin().iter().map(|r| LinConstraint { a: pad_v(&r.a, 0.0), b: r.b }).collect();
    let mut c0 = DVector::zeros(n + 1);
    c0[n] = 1.0;
    QcqpInstance::new(
        alloc::format!("{}-epigraph", inst.name()),
        SymMatrix::zeros(n + 1),
        c0,
        quad,
        lin,
    )
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linalg::DEFAULT_TOL;
    use alloc::vec;

    pub(crate) fn example1() -> QcqpInstance {
        QcqpInstance::new(
            "example1",
            SymMatrix::from_diag(&[0.3, -2.0, 2.4]).unwrap(),
            DVector::from_vec(vec![-0.2, 0.8, 0.2]),
            vec![QuadConstraint {
                q: SymMatrix::from_diag(&[1.0, 1.0, -1.0]).unwrap(),
                c: DVector::zeros(3),
                d: -1.0,
            }],
            vec![LinConstraint { a: DVector::from_vec(vec![-0.6, -2.0, 0.8]), b: -0.5 }],
        )
        .unwrap()
    }

    pub(crate) fn example3() -> QcqpInstance {
        let m = |r: [[f64; 2]; 2]| SymMatrix::from_rows(&[r[0].to_vec(), r[1].to_vec()]).unwrap();
        let v = |a: f64, b: f64| DVector::from_vec(vec![a, b]);
        let row = |a: f64, b: f64, rhs: f64| LinConstraint { a: v(a, b), b: rhs };
        QcqpInstance::new(
            "example3",
            m([[21.0, 17.0], [17.0, -24.0]]),
            v(2.0, -14.0),
            vec![
                QuadConstraint { q: m([[2.0, 2.0], [2.0, 2.0]]), c: v(8.0, 6.0), d: -9.0 },
                QuadConstraint { q: m([[-5.0, -4.0], [-4.0, -5.0]]), c: v(-4.0, 4.0), d: 4.0 },
            ],
            vec![
                row(1.0, 2.0, 2.0),
                row(1.0, 0.0, 1.0),
                row(0.0, 1.0, 1.0),
                row(-1.0, 0.0, 0.0),
                row(0.0, -1.0, 0.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn example1_shape_and_classes() {
        let inst = example1();
        assert_eq!((inst.n(), inst.l(), inst.m()), (3, 1, 1));
        let cls = classify(&inst, DEFAULT_TOL).unwrap();
        assert!(cls.convex.is_empty());
        assert_eq!(cls.nonconvex, vec![0]);
        assert!(cls.type_b_eligible(0));
        assert_eq!(cls.z_index(0), Some(0));
    }

    #[test]
    fn example3_classes() {
        let cls = classify(&example3(), DEFAULT_TOL).unwrap();
        assert_eq!(cls.convex, vec![0]);
        assert_eq!(cls.nonconvex, vec![1]);
        assert_eq!(cls.k(), 1);
    }

    #[test]
    fn unconstrained_instance_is_valid() {
        let inst =
            QcqpInstance::new("u", SymMatrix::identity(2), DVector::zeros(2), vec![], vec![])
                .unwrap();
        assert_eq!((inst.l(), inst.m()), (0, 0));
        assert_eq!(inst.max_violation(&DVector::zeros(2)), f64::NEG_INFINITY);
    }

    #[test]
    fn dimension_errors() {
        let bad = QcqpInstance::new(
            "bad",
            SymMatrix::identity(3),
            DVector::zeros(3),
            vec![QuadConstraint { q: SymMatrix::identity(3), c: DVector::zeros(2), d: 0.0 }],
            vec![],
        );
        assert!(matches!(bad, Err(ModelError::Dim { expected: 3, found: 2, .. })));
        let zero = QcqpInstance::new(
            "zero",
            SymMatrix::identity(2),
            DVector::zeros(2),
            vec![QuadConstraint { q: SymMatrix::zeros(2), c: DVector::zeros(2), d: 0.0 }],
            vec![],
        );
        assert!(matches!(zero, Err(ModelError::InvalidConstraint { .. })));
    }

    #[test]
    fn all_psd_has_empty_nonconvex_set() {
        let inst = QcqpInstance::new(
            "psd",
            SymMatrix::identity(2),
            DVector::zeros(2),
            vec![
                QuadConstraint { q: SymMatrix::identity(2), c: DVector::zeros(2), d: -1.0 },
                QuadConstraint {
                    q: SymMatrix::from_diag(&[1.0, 0.0]).unwrap(),
                    c: DVector::zeros(2),
                    d: -1.0,
                },
            ],
            vec![],
        )
        .unwrap();
        assert!(classify(&inst, DEFAULT_TOL).unwrap().nonconvex.is_empty());
    }

    #[test]
    fn epigraph_of_example1() {
        let e = epigraph_reformulate(&example1()).unwrap();
        assert_eq!((e.n(), e.l(), e.m()), (4, 2, 1));
        assert_eq!(e.c0().as_slice(), &[0.0, 0.0, 0.0, 1.0]);
        // Q₀ of example 1 is indefinite, so the new constraint is nonconvex
        let cls = classify(&e, DEFAULT_TOL).unwrap();
        assert_eq!(cls.nonconvex, vec![0, 1]);
        let x = DVector::from_vec(vec![0.3, -0.1, 0.2, 0.0]);
        let xs = x.rows(0, 3).into_owned();
        assert!((e.quad()[1].eval(&x) - example1().objective(&xs)).abs() < 1e-14);
    }

    #[test]
    fn epigraph_of_convex_objective_is_convex() {
        let inst = QcqpInstance::new(
            "c",
            SymMatrix::identity(2),
            DVector::from_vec(vec![1.0, 0.0]),
            vec![],
            vec![],
        )
        .unwrap();
        let cls = classify(&epigraph_reformulate(&inst).unwrap(), DEFAULT_TOL).unwrap();
        assert_eq!(cls.convex, vec![0]);
    }

    #[test]
    fn classification_stable_under_tiny_perturbation() {
        let inst = example3();
        let mut quad = inst.quad().to_vec();
        let mut q = quad[0].q.as_matrix().clone();
        q[(0, 1)] += 1e-13;
        q[(1, 0)] += 1e-13;
        quad[0].q = SymMatrix::new(q).unwrap();
        let p = QcqpInstance::new("p", inst.q0().clone(), inst.c0().clone(), quad, inst.lin().to_vec())
            .unwrap();
        assert_eq!(classify(&p, DEFAULT_TOL).unwrap(), classify(&inst, DEFAULT_TOL).unwrap());
    }
}
