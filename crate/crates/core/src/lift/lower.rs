//! Lowering to the standard conic form `min qᵀv + q₀  s.t.  b − Av ∈ K`.
//!
//! Cone order: one zero cone (equalities), one nonnegative cone
//! (inequalities), then every second-order cone (Frobenius blocks
//! flattened after native SOC blocks), then every PSD cone. PSD slacks use
//! the scaled upper-triangle vectorization, column major, with
//! off-diagonal entries multiplied by √2. Solver variables are the lifted
//! scalars in `LiftedSpace` order, so recovery is a plain copy.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use super::program::{ConicProgram, Sense};
use super::{Affine, LiftedSpace};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Zero(usize),
    Nonneg(usize),
    /// Dimension including the head.
    Soc(usize),
    /// Matrix side length; the cone occupies `d(d+1)/2` rows.
    Psd(usize),
}

impl Cone {
    pub fn rows(&self) -> usize {
        match *self {
            Cone::Zero(k) | Cone::Nonneg(k) | Cone::Soc(k) => k,
            Cone::Psd(d) => d * (d + 1) / 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StandardForm {
    pub n_vars: usize,
    pub q: Vec<f64>,
    pub q0: f64,
    /// `(row, col, value)` triplets of `A`, row major order.
    pub a: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl StandardForm {
    pub fn n_rows(&self) -> usize {
        self.b.len()
    }

    /// Slack `b − Av` at `v`.
    pub fn slack(&self, v: &[f64]) -> Vec<f64> {
        let mut s = self.b.clone();
        for &(r, c, a) in &self.a {
            s[r] -= a * v[c];
        }
        s
    }

    pub fn objective(&self, v: &[f64]) -> f64 {
        self.q.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() + self.q0
    }
}

struct Builder {
    a: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
}

impl Builder {
    /// Appends the row `s = scale · expr`.
    fn row(&mut self, expr: &Affine, scale: f64) {
        let r = self.b.len();
        for &(c, v) in &expr.terms {
            self.a.push((r, c, -scale * v));
        }
        self.b.push(scale * expr.constant);
    }
}

pub fn lower(prog: &ConicProgram) -> StandardForm {
    let n_vars = prog.space.len();
    let mut q = alloc::vec![0.0; n_vars];
    for &(i, v) in &prog.objective.terms {
        q[i] += v;
    }
    let mut bld = Builder { a: Vec::new(), b: Vec::new() };
    let mut cones = Vec::new();

    let eqs: Vec<_> = prog.lin.iter().filter(|r| r.sense == Sense::Eq).collect();
    for r in &eqs {
        bld.row(&r.expr, -1.0);
    }
    if !eqs.is_empty() {
        cones.push(Cone::Zero(eqs.len()));
    }
    let ineqs: Vec<_> = prog.lin.iter().filter(|r| r.sense != Sense::Eq).collect();
    for r in &ineqs {
        bld.row(&r.expr, if r.sense == Sense::Le { -1.0 } else { 1.0 });
    }
    if !ineqs.is_empty() {
        cones.push(Cone::Nonneg(ineqs.len()));
    }
    for s in &prog.soc {
        bld.row(&s.head, 1.0);
        for t in &s.tail {
            bld.row(t, 1.0);
        }
        cones.push(Cone::Soc(1 + s.tail.len()));
    }
    for f in &prog.frob {
        bld.row(&f.bound, 1.0);
        for e in &f.entries {
            bld.row(e, 1.0);
        }
        cones.push(Cone::Soc(1 + f.entries.len()));
    }
    let sqrt2 = core::f64::consts::SQRT_2;
    for p in &prog.psd {
        for j in 0..p.dim {
            for i in 0..=j {
                bld.row(p.get(i, j), if i == j { 1.0 } else { sqrt2 });
            }
        }
        cones.push(Cone::Psd(p.dim));
    }
    StandardForm { n_vars, q, q0: prog.objective.constant, a: bld.a, b: bld.b, cones }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Reduced-accuracy solution; the reported bound is the dual objective.
    Inaccurate,
    Failed,
    TimedOut,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::Inaccurate => "inaccurate",
            SolveStatus::Failed => "failed",
            SolveStatus::TimedOut => "timed_out",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Primal lifted point of a solved relaxation.
#[derive(Debug, Clone)]
pub struct LiftedSolution {
    pub space: LiftedSpace,
    pub values: Vec<f64>,
    pub x: DVector<f64>,
    pub z: DVector<f64>,
    pub big_x: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub big_z: DMatrix<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub residuals: Residuals,
    /// Smallest eigenvalue of the moment matrix at this point.
    pub moment_min_eig: f64,
}

pub fn recover(
    space: LiftedSpace,
    values: Vec<f64>,
    objective: f64,
    status: SolveStatus,
    residuals: Residuals,
) -> LiftedSolution {
    assert_eq!(values.len(), space.len());
    let (n, nz) = (space.n, space.nz);
    let x = DVector::from_fn(n, |i, _| values[space.x(i)]);
    let z = DVector::from_fn(nz, |t, _| values[space.z(t)]);
    let big_x = DMatrix::from_fn(n, n, |i, j| values[space.xx(i, j)]);
    let s = DMatrix::from_fn(n, nz, |i, t| values[space.s(i, t)]);
    let big_z = DMatrix::from_fn(nz, nz, |a, b| values[space.zz(a, b)]);
    let moment_min_eig = linalg::min_eigenvalue(&space.moment_lmi().eval(&values));
    LiftedSolution { space, values, x, z, big_x, s, big_z, objective, status, residuals, moment_min_eig }
}
