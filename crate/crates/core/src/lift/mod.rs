//! Lifted variable space `(x, z, X, S, Z)` and the affine expressions the
//! relaxation builders are written in.
//!
//! Layout of the scalar variable vector:
//!
//! | block | size            | index                                  |
//! |-------|-----------------|----------------------------------------|
//! | x     | n               | `i`                                    |
//! | z     | nz              | `n + t`                                |
//! | X     | n(n+1)/2        | upper triangle, column major: `j(j+1)/2 + i`, `i ≤ j` |
//! | S     | n·nz            | column major: `t·n + i`                |
//! | Z     | nz(nz+1)/2      | upper triangle, column major           |

mod lower;
mod program;

pub use lower::{lower, recover, Cone, LiftedSolution, Residuals, SolveStatus, StandardForm};
pub use program::{ConicProgram, Counts, FrobBlock, LinRow, PsdBlock, Sense, Slack, SlackKind, SocBlock};

use alloc::vec::Vec;
use nalgebra::DVector;

/// An affine function of the base variables: `xᵀx + zᵀz + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinForm {
    pub x: DVector<f64>,
    pub z: DVector<f64>,
    pub c: f64,
}

impl LinForm {
    pub fn zero(n: usize, nz: usize) -> Self {
        Self { x: DVector::zeros(n), z: DVector::zeros(nz), c: 0.0 }
    }

    pub fn constant(n: usize, nz: usize, c: f64) -> Self {
        Self { c, ..Self::zero(n, nz) }
    }

    pub fn x_coord(n: usize, nz: usize, k: usize) -> Self {
        let mut f = Self::zero(n, nz);
        f.x[k] = 1.0;
        f
    }

    pub fn of_x(x: DVector<f64>, nz: usize, c: f64) -> Self {
        Self { x, z: DVector::zeros(nz), c }
    }

    pub fn eval(&self, x: &DVector<f64>, z: &DVector<f64>) -> f64 {
        self.x.dot(x) + self.z.dot(z) + self.c
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { x: &self.x * s, z: &self.z * s, c: self.c * s }
    }

    pub fn add(&self, o: &LinForm) -> Self {
        Self { x: &self.x + &o.x, z: &self.z + &o.z, c: self.c + o.c }
    }

    pub fn is_zero(&self) -> bool {
        self.c == 0.0 && self.x.iter().all(|v| *v == 0.0) && self.z.iter().all(|v| *v == 0.0)
    }
}

/// Sparse affine expression over lifted variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(idx: usize, coef: f64) -> Self {
        Self { terms: alloc::vec![(idx, coef)], constant: 0.0 }
    }

    pub fn push(&mut self, idx: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push((idx, coef));
        }
    }

    pub fn add_scaled(&mut self, other: &Affine, s: f64) {
        for &(i, v) in &other.terms {
            self.push(i, v * s);
        }
        self.constant += other.constant * s;
    }

    pub fn scaled(&self, s: f64) -> Affine {
        let mut a = Affine::default();
        a.add_scaled(self, s);
        a
    }

    pub fn plus(mut self, other: &Affine, s: f64) -> Affine {
        self.add_scaled(other, s);
        self.canonical()
    }

    /// Sorted by index with duplicates merged and zeros dropped.
    pub fn canonical(mut self) -> Affine {
        self.terms.sort_unstable_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for (i, v) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => out.push((i, v)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        Affine { terms: out, constant: self.constant }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * v[i]).sum::<f64>() + self.constant
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.iter().map(|t| t.0).max()
    }
}

fn tri(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiftedSpace {
    pub n: usize,
    pub nz: usize,
}

impl LiftedSpace {
    pub fn new(n: usize, nz: usize) -> Self {
        assert!(n >= 1, "lifted space needs n >= 1");
        Self { n, nz }
    }

    pub fn len(&self) -> usize {
        self.n + self.nz + self.n * (self.n + 1) / 2 + self.n * self.nz + self.nz * (self.nz + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, i: usize) -> usize {
        debug_assert!(i < self.n);
        i
    }

    pub fn z(&self, t: usize) -> usize {
        debug_assert!(t < self.nz);
        self.n + t
    }

    pub fn xx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        self.n + self.nz + tri(i, j)
    }

    pub fn s(&self, i: usize, t: usize) -> usize {
        debug_assert!(i < self.n && t < self.nz);
        self.n + self.nz + self.n * (self.n + 1) / 2 + t * self.n + i
    }

    pub fn zz(&self, s: usize, t: usize) -> usize {
        debug_assert!(s < self.nz && t < self.nz);
        self.n + self.nz + self.n * (self.n + 1) / 2 + self.n * self.nz + tri(s, t)
    }

    /// First-order embedding of `f`.
    pub fn lin(&self, f: &LinForm) -> Affine {
        let mut a = Affine::constant(f.c);
        for (i, &v) in f.x.iter().enumerate() {
            a.push(self.x(i), v);
        }
        for (t, &v) in f.z.iter().enumerate() {
            a.push(self.z(t), v);
        }
        a
    }

    /// Linearization of the product `f·g`: every quadratic monomial is
    /// replaced by the matching entry of `X`, `S` or `Z`.
    pub fn prod(&self, f: &LinForm, g: &LinForm) -> Affine {
        let mut a = Affine::constant(f.c * g.c);
        for (i, &fi) in f.x.iter().enumerate() {
            if fi == 0.0 {
                continue;
            }
            for (j, &gj) in g.x.iter().enumerate() {
                a.push(self.xx(i, j), fi * gj);
            }
            for (t, &gt) in g.z.iter().enumerate() {
                a.push(self.s(i, t), fi * gt);
            }
        }
        for (t, &ft) in f.z.iter().enumerate() {
            if ft == 0.0 {
                continue;
            }
            for (i, &gi) in g.x.iter().enumerate() {
                a.push(self.s(i, t), ft * gi);
            }
            for (u, &gu) in g.z.iter().enumerate() {
                a.push(self.zz(t, u), ft * gu);
            }
        }
        for (i, (&fi, &gi)) in f.x.iter().zip(g.x.iter()).enumerate() {
            a.push(self.x(i), f.c * gi + g.c * fi);
        }
        for (t, (&ft, &gt)) in f.z.iter().zip(g.z.iter()).enumerate() {
            a.push(self.z(t), f.c * gt + g.c * ft);
        }
        a.canonical()
    }

    /// `(1 xᵀ zᵀ; x X S; z Sᵀ Z) ⪰ 0`.
    pub fn moment_lmi(&self) -> PsdBlock {
        let (n, nz) = (self.n, self.nz);
        let base = |k: usize| -> LinForm {
            if k == 0 {
                LinForm::constant(n, nz, 1.0)
            } else if k <= n {
                LinForm::x_coord(n, nz, k - 1)
            } else {
                let mut f = LinForm::zero(n, nz);
                f.z[k - 1 - n] = 1.0;
                f
            }
        };
        PsdBlock::from_fn("moment", 1 + n + nz, |i, j| self.prod(&base(i), &base(j)))
    }

    /// Values of the rank-one point `X = xxᵀ, S = xzᵀ, Z = zzᵀ`.
    pub fn rank_one(&self, x: &DVector<f64>, z: &DVector<f64>) -> Vec<f64> {
        let mut v = alloc::vec![0.0; self.len()];
        for i in 0..self.n {
            v[self.x(i)] = x[i];
            for j in i..self.n {
                v[self.xx(i, j)] = x[i] * x[j];
            }
            for t in 0..self.nz {
                v[self.s(i, t)] = x[i] * z[t];
            }
        }
        for t in 0..self.nz {
            v[self.z(t)] = z[t];
            for u in t..self.nz {
                v[self.zz(t, u)] = z[t] * z[u];
            }
        }
        v
    }
}
