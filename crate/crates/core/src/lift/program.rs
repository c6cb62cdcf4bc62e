use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use super::{Affine, LiftedSpace};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// `expr (≤ | = | ≥) 0`.
#[derive(Debug, Clone)]
pub struct LinRow {
    pub name: String,
    pub expr: Affine,
    pub sense: Sense,
}

/// `‖tail‖ ≤ head`.
#[derive(Debug, Clone)]
pub struct SocBlock {
    pub name: String,
    pub head: Affine,
    pub tail: Vec<Affine>,
}

/// `‖A‖_F ≤ bound`, entries row major.
#[derive(Debug, Clone)]
pub struct FrobBlock {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Affine>,
    pub bound: Affine,
}

/// Symmetric affine matrix required PSD; the upper triangle is stored
/// column major (`j(j+1)/2 + i`, `i ≤ j`).
#[derive(Debug, Clone)]
pub struct PsdBlock {
    pub name: String,
    pub dim: usize,
    pub upper: Vec<Affine>,
}

impl PsdBlock {
    pub fn from_fn(
        name: impl Into<String>,
        dim: usize,
        mut f: impl FnMut(usize, usize) -> Affine,
    ) -> Self {
        let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
        for j in 0..dim {
            for i in 0..=j {
                upper.push(f(i, j));
            }
        }
        Self { name: name.into(), dim, upper }
    }

    pub fn get(&self, i: usize, j: usize) -> &Affine {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.upper[j * (j + 1) / 2 + i]
    }

    pub fn eval(&self, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j).eval(v))
    }
}

impl FrobBlock {
    pub fn eval_norm(&self, v: &[f64]) -> f64 {
        libm::sqrt(self.entries.iter().map(|e| { let t = e.eval(v); t * t }).sum::<f64>())
    }
}

impl SocBlock {
    pub fn eval_norm(&self, v: &[f64]) -> f64 {
        libm::sqrt(self.tail.iter().map(|e| { let t = e.eval(v); t * t }).sum::<f64>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    /// Linear rows (inequalities and equalities).
    pub n_lin: usize,
    /// Second-order cones after lowering (includes Frobenius blocks).
    pub n_soc: usize,
    pub n_psd: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlackKind {
    Linear,
    Equality,
    Soc,
    Frobenius,
    Psd,
}

/// Constraint satisfaction margin; nonnegative means satisfied.
#[derive(Debug, Clone)]
pub struct Slack {
    pub name: String,
    pub kind: SlackKind,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct ConicProgram {
    pub space: LiftedSpace,
    /// Minimized.
    pub objective: Affine,
    pub lin: Vec<LinRow>,
    pub soc: Vec<SocBlock>,
    pub frob: Vec<FrobBlock>,
    pub psd: Vec<PsdBlock>,
}

impl ConicProgram {
    pub fn new(space: LiftedSpace, objective: Affine) -> Self {
        Self { space, objective, lin: Vec::new(), soc: Vec::new(), frob: Vec::new(), psd: Vec::new() }
    }

    pub fn push_row(&mut self, name: impl Into<String>, expr: Affine, sense: Sense) {
        self.lin.push(LinRow { name: name.into(), expr: expr.canonical(), sense });
    }

    pub fn push_soc(&mut self, name: impl Into<String>, head: Affine, tail: Vec<Affine>) {
        let tail = tail.into_iter().map(Affine::canonical).collect();
        self.soc.push(SocBlock { name: name.into(), head: head.canonical(), tail });
    }

    pub fn push_frob(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        entries: Vec<Affine>,
        bound: Affine,
    ) {
        assert_eq!(entries.len(), rows * cols);
        let entries = entries.into_iter().map(Affine::canonical).collect();
        self.frob.push(FrobBlock { name: name.into(), rows, cols, entries, bound: bound.canonical() });
    }

    pub fn push_psd(&mut self, mut block: PsdBlock) {
        block.upper = block.upper.into_iter().map(Affine::canonical).collect();
        self.psd.push(block);
    }

    pub fn counts(&self) -> Counts {
        Counts { n_lin: self.lin.len(), n_soc: self.soc.len() + self.frob.len(), n_psd: self.psd.len() }
    }

    /// True when every referenced index lies inside the lifted space.
    pub fn indices_in_range(&self) -> bool {
        let len = self.space.len();
        let ok = |a: &Affine| a.max_index().map_or(true, |i| i < len);
        ok(&self.objective)
            && self.lin.iter().all(|r| ok(&r.expr))
            && self.soc.iter().all(|s| ok(&s.head) && s.tail.iter().all(ok))
            && self.frob.iter().all(|f| ok(&f.bound) && f.entries.iter().all(ok))
            && self.psd.iter().all(|p| p.upper.iter().all(ok))
    }

    pub fn eval_objective(&self, v: &[f64]) -> f64 {
        self.objective.eval(v)
    }

    /// Slack of every constraint at the lifted point `v`.
    pub fn slacks(&self, v: &[f64]) -> Vec<Slack> {
        let mut out = Vec::with_capacity(self.lin.len() + self.soc.len() + self.frob.len() + self.psd.len());
        for r in &self.lin {
            let e = r.expr.eval(v);
            let (kind, value) = match r.sense {
                Sense::Le => (SlackKind::Linear, -e),
                Sense::Ge => (SlackKind::Linear, e),
                Sense::Eq => (SlackKind::Equality, -e.abs()),
            };
            out.push(Slack { name: r.name.clone(), kind, value });
        }
        for s in &self.soc {
            out.push(Slack { name: s.name.clone(), kind: SlackKind::Soc, value: s.head.eval(v) - s.eval_norm(v) });
        }
        for f in &self.frob {
            out.push(Slack {
                name: f.name.clone(),
                kind: SlackKind::Frobenius,
                value: f.bound.eval(v) - f.eval_norm(v),
            });
        }
        for p in &self.psd {
            out.push(Slack {
                name: p.name.clone(),
                kind: SlackKind::Psd,
                value: linalg::min_eigenvalue(&p.eval(v)),
            });
        }
        out
    }
}
