//! Brute-force global minimization for instances with `n ≤ 4`.
//!
//! A dense grid scan keeps the ten best feasible grid points; each is
//! refined by repeated zoom grids and then polished by a projected gradient
//! method that only accepts feasible improvements. This is a sanity oracle,
//! not a proof of optimality.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::model::QcqpInstance;

pub const MAX_DIM: usize = 4;
pub const DEFAULT_RADIUS: f64 = 10.0;
pub const DEFAULT_RESOLUTION: usize = 61;
const KEEP: usize = 10;
const GRID_FEAS_TOL: f64 = 1e-9;
const ZOOM_POINTS: usize = 11;
const ZOOM_STOP: f64 = 1e-9;
const ACTIVE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("oracle supports n <= {MAX_DIM}, got n = {0}")]
    TooLarge(usize),
    #[error("grid resolution must be at least 2")]
    Resolution,
    #[error("search box is empty on axis {0}")]
    EmptyBox(usize),
    #[error("no feasible grid point found (not a proof of infeasibility)")]
    NoFeasiblePointFound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox {
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
}

impl SearchBox {
    /// `[−radius, radius]ⁿ` intersected with the single-variable rows.
    pub fn derive(inst: &QcqpInstance, radius: f64) -> SearchBox {
        let n = inst.n();
        let mut lo = DVector::from_element(n, -radius);
        let mut hi = DVector::from_element(n, radius);
        for r in inst.lin() {
            if let Some((k, s)) = r.single_variable() {
                let bound = r.b / s;
                if s > 0.0 {
                    hi[k] = hi[k].min(bound);
                } else {
                    lo[k] = lo[k].max(bound);
                }
            }
        }
        SearchBox { lo, hi }
    }

    fn clamp(&self, x: &mut DVector<f64>) {
        for k in 0..x.len() {
            x[k] = x[k].clamp(self.lo[k], self.hi[k]);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_x: DVector<f64>,
    pub best_val: f64,
    pub certified_box: SearchBox,
    pub grid_resolution: usize,
    /// True when zoom refinement or polishing improved on the grid value.
    pub refined: bool,
}

fn grid_point(bx: &SearchBox, res: usize, mut idx: usize, out: &mut DVector<f64>) {
    // Last axis varies fastest so that linear order is lexicographic.
    for k in (0..out.len()).rev() {
        let i = idx % res;
        idx /= res;
        let t = i as f64 / (res - 1) as f64;
        out[k] = bx.lo[k] + t * (bx.hi[k] - bx.lo[k]);
    }
}

/// Best feasible grid point of `res` points per axis over `bx`.
fn scan(inst: &QcqpInstance, bx: &SearchBox, res: usize, keep: usize) -> Vec<(f64, usize)> {
    let n = inst.n();
    let total = res.pow(n as u32);
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(keep + 1);
    let mut x = DVector::zeros(n);
    for idx in 0..total {
        grid_point(bx, res, idx, &mut x);
        if inst.max_violation(&x) > GRID_FEAS_TOL {
            continue;
        }
        let v = inst.objective(&x);
        if best.len() == keep && v >= best[keep - 1].0 {
            continue;
        }
        // Strict comparison keeps the earlier grid index on ties.
        let pos = best.iter().position(|&(b, _)| v < b).unwrap_or(best.len());
        best.insert(pos, (v, idx));
        best.truncate(keep);
    }
    best
}

fn zoom(inst: &QcqpInstance, bx: &SearchBox, start: DVector<f64>, spacing: f64) -> DVector<f64> {
    let n = start.len();
    let mut x = start;
    let mut h = spacing;
    while h >= ZOOM_STOP {
        let sub = SearchBox {
            lo: DVector::from_fn(n, |k, _| (x[k] - 2.0 * h).max(bx.lo[k])),
            hi: DVector::from_fn(n, |k, _| (x[k] + 2.0 * h).min(bx.hi[k])),
        };
        if let Some(&(v, idx)) = scan(inst, &sub, ZOOM_POINTS, 1).first() {
            if v <= inst.objective(&x) {
                grid_point(&sub, ZOOM_POINTS, idx, &mut x);
            }
        }
        h *= 4.0 / (ZOOM_POINTS - 1) as f64;
    }
    x
}

/// Gradients of the constraints active at `x`, as rows.
fn active_gradients(inst: &QcqpInstance, bx: &SearchBox, x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let mut rows: Vec<DVector<f64>> = Vec::new();
    for q in inst.quad() {
        if q.eval(x) > -ACTIVE_TOL {
            rows.push(q.grad(x));
        }
    }
    for r in inst.lin() {
        if r.eval(x) > -ACTIVE_TOL {
            rows.push(r.a.clone());
        }
    }
    for k in 0..n {
        if x[k] - bx.lo[k] < ACTIVE_TOL || bx.hi[k] - x[k] < ACTIVE_TOL {
            rows.push(DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 }));
        }
    }
    DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j])
}

/// Projects `d` onto the null space of the rows of `g`.
fn project(g: &DMatrix<f64>, d: &DVector<f64>) -> DVector<f64> {
    if g.nrows() == 0 {
        return d.clone();
    }
    let ggt = g * g.transpose();
    let Ok(pinv) = ggt.pseudo_inverse(1e-12) else { return DVector::zeros(d.len()) };
    d - g.transpose() * (pinv * (g * d))
}

/// Gauss-Newton steps toward the active constraint set.
fn restore(inst: &QcqpInstance, bx: &SearchBox, mut x: DVector<f64>) -> DVector<f64> {
    for _ in 0..20 {
        if inst.max_violation(&x) <= GRID_FEAS_TOL {
            break;
        }
        let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
        for q in inst.quad() {
            let v = q.eval(&x);
            if v > 0.0 {
                rows.push((q.grad(&x), v));
            }
        }
        for r in inst.lin() {
            let v = r.eval(&x);
            if v > 0.0 {
                rows.push((r.a.clone(), v));
            }
        }
        let g = DMatrix::from_fn(rows.len(), x.len(), |i, j| rows[i].0[j]);
        let viol = DVector::from_fn(rows.len(), |i, _| rows[i].1);
        let Ok(pinv) = (&g * g.transpose()).pseudo_inverse(1e-12) else { break };
        x -= g.transpose() * (pinv * viol);
        bx.clamp(&mut x);
    }
    x
}

fn polish(inst: &QcqpInstance, bx: &SearchBox, start: DVector<f64>, tol: f64) -> DVector<f64> {
    let mut x = start;
    let mut fx = inst.objective(&x);
    for _ in 0..200 {
        let g = 2.0 * inst.q0().mul_vec(&x) + inst.c0();
        let d = project(&active_gradients(inst, bx, &x), &(-g.clone()));
        let slope = g.dot(&d);
        if d.norm() < 1e-14 || slope >= 0.0 {
            break;
        }
        let mut t = 1.0;
        let mut moved = false;
        while t * d.norm() > 1e-14 {
            let mut y = &x + t * &d;
            bx.clamp(&mut y);
            let y = restore(inst, bx, y);
            let fy = inst.objective(&y);
            if inst.max_violation(&y) <= GRID_FEAS_TOL && fy <= fx + 1e-4 * t * slope {
                moved = fx - fy > tol * (1.0 + fx.abs()) * 1e-6;
                x = y;
                fx = fy;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    x
}

/// Grid scan, zoom refinement and polish over `bx`.
pub fn global_min(inst: &QcqpInstance, bx: &SearchBox, resolution: usize) -> Result<OracleResult, OracleError> {
    let n = inst.n();
    if n > MAX_DIM {
        return Err(OracleError::TooLarge(n));
    }
    if resolution < 2 {
        return Err(OracleError::Resolution);
    }
    if let Some(k) = (0..n).find(|&k| bx.lo[k].is_nan() || bx.hi[k].is_nan() || bx.lo[k] > bx.hi[k]) {
        return Err(OracleError::EmptyBox(k));
    }
    let seeds = scan(inst, bx, resolution, KEEP);
    let Some(&(grid_val, _)) = seeds.first() else { return Err(OracleError::NoFeasiblePointFound) };
    let spacing = (0..n).map(|k| (bx.hi[k] - bx.lo[k]) / (resolution - 1) as f64).fold(0.0, f64::max);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for &(_, idx) in &seeds {
        let mut x = DVector::zeros(n);
        grid_point(bx, resolution, idx, &mut x);
        let x = zoom(inst, bx, x, spacing);
        let x = polish(inst, bx, x, 1e-8);
        let v = inst.objective(&x);
        if best.as_ref().map_or(true, |(b, _)| v < *b) {
            best = Some((v, x));
        }
    }
    let (best_val, best_x) = best.expect("at least one seed");
    Ok(OracleResult {
        best_x,
        best_val,
        certified_box: bx.clone(),
        grid_resolution: resolution,
        refined: best_val < grid_val,
    })
}

/// [`global_min`] over the default box.
pub fn global_min_default(inst: &QcqpInstance, resolution: usize) -> Result<OracleResult, OracleError> {
    global_min(inst, &SearchBox::derive(inst, DEFAULT_RADIUS), resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{example1, example3};
    use crate::model::{LinConstraint, QuadConstraint};
    use crate::linalg::SymMatrix;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn example1_value() {
        let r = global_min_default(&example1(), 41).unwrap();
        assert!((r.best_val + 1.21788).abs() < 1e-3, "{}", r.best_val);
        assert!(example1().max_violation(&r.best_x) <= 1e-6);
        assert_eq!(r.best_val, example1().objective(&r.best_x));
    }

    #[test]
    fn example3_value_and_point() {
        let r = global_min_default(&example3(), 41).unwrap();
        assert!((r.best_val + 3.327).abs() < 1e-3, "{}", r.best_val);
        assert!((r.best_x[0] - 0.427).abs() < 5e-3 && (r.best_x[1] - 0.588).abs() < 5e-3);
    }

    #[test]
    fn derived_box_uses_bounds() {
        let b = SearchBox::derive(&example3(), 10.0);
        assert_eq!(b.lo.as_slice(), &[0.0, 0.0]);
        assert_eq!(b.hi.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn infeasible_reports_no_point() {
        // x² ≤ −1
        let inst = QcqpInstance::new(
            "infeasible",
            SymMatrix::identity(1),
            DVector::zeros(1),
            vec![QuadConstraint { q: SymMatrix::identity(1), c: DVector::zeros(1), d: 1.0 }],
            vec![],
        )
        .unwrap();
        assert_eq!(global_min_default(&inst, 11).unwrap_err(), OracleError::NoFeasiblePointFound);
    }

    #[test]
    fn rejects_large_instances() {
        let inst = QcqpInstance::new(
            "big",
            SymMatrix::identity(5),
            DVector::zeros(5),
            vec![],
            vec![LinConstraint { a: DVector::from_element(5, 1.0), b: 1.0 }],
        )
        .unwrap();
        assert_eq!(global_min_default(&inst, 3).unwrap_err(), OracleError::TooLarge(5));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn finer_grid_never_worse_by_more_than_polish_tol(c0 in -5.0..5.0f64, c1 in -5.0..5.0f64) {
            let base = example3();
            let inst = QcqpInstance::new(
                "p",
                base.q0().clone(),
                DVector::from_vec(vec![c0, c1]),
                base.quad().to_vec(),
                base.lin().to_vec(),
            )
            .unwrap();
            let coarse = global_min_default(&inst, 11).unwrap();
            let fine = global_min_default(&inst, 21).unwrap();
            prop_assert!(fine.best_val <= coarse.best_val + 1e-6, "{} vs {}", fine.best_val, coarse.best_val);
        }
    }
}
