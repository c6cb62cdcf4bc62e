//! The instance document: `name`, `n`, `objective{Q, c}`,
//! `quadratic[{Q, c, d}]`, `linear[{a, b}]`, dense matrices as arrays of
//! rows. Numbers are written in shortest round-trip decimal form, so
//! `parse ∘ serialize` is the identity.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use qrelax_core::linalg::SymMatrix;
use qrelax_core::model::{LinConstraint, ModelError, QcqpInstance, QuadConstraint};
use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveDoc {
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadDoc {
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinDoc {
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub name: String,
    pub n: usize,
    pub objective: ObjectiveDoc,
    #[serde(default)]
    pub quadratic: Vec<QuadDoc>,
    #[serde(default)]
    pub linear: Vec<LinDoc>,
}

/// A parsed instance plus ingestion warnings (e.g. symmetrized input).
#[derive(Debug, Clone)]
pub struct Parsed {
    pub instance: QcqpInstance,
    pub warnings: Vec<String>,
}

fn matrix(rows: &[Vec<f64>], n: usize, what: String, warnings: &mut Vec<String>) -> Result<SymMatrix, Error> {
    if rows.len() != n {
        return Err(ModelError::Dim { what, expected: n, found: rows.len() }.into());
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(ModelError::Dim { what: format!("{what}[{i}]"), expected: n, found: r.len() }.into());
        }
    }
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    if SymMatrix::is_asymmetric(&m) {
        warnings.push(format!("{what} is not symmetric; replaced by (A + Aᵀ)/2"));
    }
    SymMatrix::new(m).map_err(|e| Error::Model(e.into()))
}

fn vector(v: &[f64], n: usize, what: String) -> Result<DVector<f64>, Error> {
    if v.len() != n {
        return Err(ModelError::Dim { what, expected: n, found: v.len() }.into());
    }
    Ok(DVector::from_column_slice(v))
}

impl InstanceDoc {
    pub fn into_instance(self) -> Result<Parsed, Error> {
        let n = self.n;
        if n == 0 {
            return Err(Error::Invalid("n must be at least 1".into()));
        }
        let mut warnings = Vec::new();
        let q0 = matrix(&self.objective.q, n, "objective.Q".into(), &mut warnings)?;
        let c0 = vector(&self.objective.c, n, "objective.c".into())?;
        let mut quad = Vec::with_capacity(self.quadratic.len());
        for (i, q) in self.quadratic.iter().enumerate() {
            quad.push(QuadConstraint {
                q: matrix(&q.q, n, format!("quadratic[{i}].Q"), &mut warnings)?,
                c: vector(&q.c, n, format!("quadratic[{i}].c"))?,
                d: q.d,
            });
        }
        let lin = self
            .linear
            .iter()
            .enumerate()
            .map(|(j, r)| Ok(LinConstraint { a: vector(&r.a, n, format!("linear[{j}].a"))?, b: r.b }))
            .collect::<Result<Vec<_>, Error>>()?;
        let instance = QcqpInstance::new(self.name, q0, c0, quad, lin)?;
        Ok(Parsed { instance, warnings })
    }

    pub fn from_instance(inst: &QcqpInstance) -> Self {
        let rows = |m: &SymMatrix| (0..m.n()).map(|i| (0..m.n()).map(|j| m.get(i, j)).collect()).collect();
        InstanceDoc {
            name: inst.name().to_string(),
            n: inst.n(),
            objective: ObjectiveDoc { q: rows(inst.q0()), c: inst.c0().iter().copied().collect() },
            quadratic: inst
                .quad()
                .iter()
                .map(|q| QuadDoc { q: rows(&q.q), c: q.c.iter().copied().collect(), d: q.d })
                .collect(),
            linear: inst.lin().iter().map(|r| LinDoc { a: r.a.iter().copied().collect(), b: r.b }).collect(),
        }
    }
}

pub fn parse_instance(bytes: &[u8]) -> Result<Parsed, Error> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: InstanceDoc = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        path: e.path().to_string(),
        msg: e.inner().to_string(),
    })?;
    doc.into_instance()
}

fn num(v: f64) -> String {
    serde_json::to_string(&v).expect("finite numbers serialize")
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| num(*x)).collect();
    format!("[{}]", items.join(", "))
}

fn mat(m: &[Vec<f64>], indent: &str) -> String {
    let rows: Vec<String> = m.iter().map(|r| format!("{indent}  {}", list(r))).collect();
    format!("[\n{}\n{indent}]", rows.join(",\n"))
}

/// Canonical text of an instance: one matrix row per line.
pub fn serialize_instance(inst: &QcqpInstance) -> String {
    let d = InstanceDoc::from_instance(inst);
    let mut s = String::new();
    let name = serde_json::to_string(&d.name).expect("string serializes");
    let _ = write!(s, "{{\n  \"name\": {name},\n  \"n\": {},\n", d.n);
    let _ = write!(
        s,
        "  \"objective\": {{\n    \"Q\": {},\n    \"c\": {}\n  }},\n",
        mat(&d.objective.q, "    "),
        list(&d.objective.c)
    );
    let quads: Vec<String> = d
        .quadratic
        .iter()
        .map(|q| {
            format!(
                "    {{\n      \"Q\": {},\n      \"c\": {},\n      \"d\": {}\n    }}",
                mat(&q.q, "      "),
                list(&q.c),
                num(q.d)
            )
        })
        .collect();
    if quads.is_empty() {
        s.push_str("  \"quadratic\": [],\n");
    } else {
        let _ = write!(s, "  \"quadratic\": [\n{}\n  ],\n", quads.join(",\n"));
    }
    let lins: Vec<String> =
        d.linear.iter().map(|r| format!("    {{\"a\": {}, \"b\": {}}}", list(&r.a), num(r.b))).collect();
    if lins.is_empty() {
        s.push_str("  \"linear\": []\n}\n");
    } else {
        let _ = write!(s, "  \"linear\": [\n{}\n  ]\n}}\n", lins.join(",\n"));
    }
    s
}
