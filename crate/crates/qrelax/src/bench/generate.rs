//! Random instance generator.
//!
//! Every matrix is `P T Pᵀ` with `P` a product of three Householder
//! reflections built from `w ∈ U[−1, 1]ⁿ` and `T` diagonal, so the sign
//! pattern of `T` is exactly the inertia of the constraint.

use nalgebra::{DMatrix, DVector};
use qrelax_core::linalg::SymMatrix;
use qrelax_core::model::{LinConstraint, QcqpInstance, QuadConstraint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;

/// Name of the PRNG recorded in reproducibility headers.
pub const PRNG: &str = "ChaCha8 (rand_chacha 0.3, seed_from_u64)";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenSpec {
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub m: usize,
    pub seed: u64,
    /// Negative eigenvalues per nonconvex constraint; default `⌊n/2⌋`.
    pub phi: Option<usize>,
    /// `Q₀ = I − Σ Qᵢ`.
    pub figures: bool,
    /// Append `x ≥ 0` rows and relax each `bⱼ` so that `e₁` satisfies it.
    pub nonneg: bool,
}

impl GenSpec {
    pub fn new(n: usize, l: usize, k: usize, m: usize, seed: u64) -> Self {
        Self { n, l, k, m, seed, phi: None, figures: false, nonneg: false }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.n == 0 {
            return Err(Error::Invalid("n must be at least 1".into()));
        }
        if self.k > self.l {
            return Err(Error::Invalid(format!("k = {} exceeds l = {}", self.k, self.l)));
        }
        if let Some(p) = self.phi {
            if p == 0 || p >= self.n {
                return Err(Error::Invalid(format!("phi must lie in [1, n-1], got {p}")));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        let mut s = format!("set-{}-{}-{}-{}-s{}", self.n, self.l, self.k, self.m, self.seed);
        if let Some(p) = self.phi {
            s.push_str(&format!("-phi{p}"));
        }
        if self.figures {
            s.push_str("-fig");
        }
        if self.nonneg {
            s.push_str("-nn");
        }
        s
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..=hi)
}

fn householder(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    loop {
        let w = DVector::from_fn(n, |_, _| uniform(rng, -1.0, 1.0));
        let nn = w.norm_squared();
        if nn > 1e-12 {
            return DMatrix::identity(n, n) - (2.0 / nn) * &w * w.transpose();
        }
    }
}

fn rotation(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let u1 = householder(rng, n);
    let u2 = householder(rng, n);
    let u3 = householder(rng, n);
    u1 * u2 * u3
}

/// `P diag(t) Pᵀ` with a fresh rotation.
fn spectral(rng: &mut ChaCha8Rng, n: usize, negatives: usize, convex: bool) -> DMatrix<f64> {
    let p = rotation(rng, n);
    let t = DVector::from_fn(n, |i, _| {
        if !convex && i < negatives {
            uniform(rng, -50.0, 0.0)
        } else {
            uniform(rng, 0.0, 50.0)
        }
    });
    &p * DMatrix::from_diagonal(&t) * p.transpose()
}

pub fn generate(spec: &GenSpec) -> Result<QcqpInstance, Error> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let negatives = spec.phi.unwrap_or(n / 2);

    let q0_raw = spectral(&mut rng, n, n / 2, false).map(f64::round);
    let c0 = DVector::from_fn(n, |_, _| uniform(&mut rng, -50.0, 50.0));

    let mut quad = Vec::with_capacity(spec.l);
    for i in 0..spec.l {
        let convex = i < spec.k;
        let q = spectral(&mut rng, n, negatives, convex);
        let c = DVector::from_fn(n, |_, _| if convex { uniform(&mut rng, -100.0, 0.0) } else { uniform(&mut rng, 0.0, 100.0) });
        let theta = -q[(0, 0)] - c[0];
        let d = if convex { uniform(&mut rng, theta - 100.0, theta) } else { uniform(&mut rng, theta - 10.0, theta) };
        quad.push(QuadConstraint { q: SymMatrix::new(q).map_err(|e| Error::Model(e.into()))?, c, d });
    }

    let mut lin = Vec::with_capacity(spec.m + if spec.nonneg { n } else { 0 });
    for _ in 0..spec.m {
        let a = DVector::from_fn(n, |_, _| uniform(&mut rng, -50.0, 50.0));
        let vartheta = 0.5 * a.iter().map(|v| v.max(0.0)).sum::<f64>();
        let mut b = uniform(&mut rng, -10.0 - vartheta, -vartheta).round();
        if spec.nonneg {
            b = b.max((a[0] + 1.0).round());
        }
        lin.push(LinConstraint { a, b });
    }
    if spec.nonneg {
        for k in 0..n {
            lin.push(LinConstraint { a: DVector::from_fn(n, |i, _| if i == k { -1.0 } else { 0.0 }), b: 0.0 });
        }
    }

    let q0 = if spec.figures {
        let mut m = DMatrix::identity(n, n);
        for qc in &quad {
            m -= qc.q.as_matrix();
        }
        m
    } else {
        q0_raw
    };
    let q0 = SymMatrix::new(q0).map_err(|e| Error::Model(e.into()))?;
    Ok(QcqpInstance::new(spec.name(), q0, c0, quad, lin)?)
}
