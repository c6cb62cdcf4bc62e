//! Text renderers for solve, compare, sweep and verify results.
//!
//! Every rendering starts with a reproducibility header (tool version,
//! seeds, solver settings, PRNG). CSV and table output carry it as `#`
//! comment lines; structured output carries it as a `header` object.

use serde_json::{json, Value};

use super::compare::CompareReport;
use super::generate::PRNG;
use super::sweep::SweepTable;
use super::verify::VerifyReport;
use crate::backend::SolverConfig;
use crate::solve::Outcome;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Columns of the per-relaxation CSV.
pub const CSV_COLUMNS: [&str; 8] = ["name", "family", "bound", "status", "time_s", "n_soc", "n_psd", "n_lin"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    Csv,
    #[default]
    Table,
    Structured,
}

#[derive(Debug, Clone)]
pub struct Header {
    pub command: String,
    pub seeds: Vec<u64>,
    pub solver: SolverConfig,
    pub backend: &'static str,
    /// Extra `key = value` pairs (instance counts, alpha, ...).
    pub extra: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: impl Into<String>, solver: &SolverConfig, backend: &'static str) -> Self {
        Self { command: command.into(), seeds: Vec::new(), solver: solver.clone(), backend, extra: Vec::new() }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.extra.push((key.into(), value.to_string()));
        self
    }

    fn time_limit(&self) -> String {
        self.solver.time_limit.map_or_else(|| "none".into(), |t| t.to_string())
    }

    pub fn lines(&self) -> Vec<String> {
        let seeds = self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        let s = &self.solver;
        let mut out = vec![
            format!("qrelax {VERSION} {}", self.command),
            format!("seeds = [{seeds}]; prng = {PRNG}"),
            format!(
                "solver = {}; featol = {:e}; gaptol = {:e}; max_iter = {}; time_limit = {}",
                self.backend,
                s.featol,
                s.gaptol,
                s.max_iter,
                self.time_limit()
            ),
        ];
        out.extend(self.extra.iter().map(|(k, v)| format!("{k} = {v}")));
        out
    }

    pub fn json(&self) -> Value {
        let extra: serde_json::Map<String, Value> =
            self.extra.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        json!({
            "version": VERSION,
            "command": self.command,
            "seeds": self.seeds,
            "prng": PRNG,
            "solver": {
                "backend": self.backend,
                "featol": self.solver.featol,
                "gaptol": self.solver.gaptol,
                "max_iter": self.solver.max_iter,
                "time_limit": self.solver.time_limit,
            },
            "extra": extra,
        })
    }

    fn comment(&self) -> String {
        self.lines().iter().map(|l| format!("# {l}\n")).collect()
    }
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Plain grid of strings rendered as CSV or an aligned table.
struct Grid {
    head: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Grid {
    fn new(head: &[&str]) -> Self {
        Self { head: head.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn csv(&self) -> String {
        let mut out = String::new();
        for r in std::iter::once(&self.head).chain(&self.rows) {
            out.push_str(&r.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    fn table(&self) -> String {
        let mut w: Vec<usize> = self.head.iter().map(String::len).collect();
        for r in &self.rows {
            for (k, c) in r.iter().enumerate() {
                w[k] = w[k].max(c.chars().count());
            }
        }
        let line = |r: &[String]| {
            let cells: Vec<String> = r.iter().enumerate().map(|(k, c)| format!("{c:<width$}", width = w[k])).collect();
            format!("{}\n", cells.join("  ").trim_end())
        };
        let mut out = line(&self.head);
        out.push_str(&line(&w.iter().map(|&n| "-".repeat(n)).collect::<Vec<_>>()));
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }
}

/// Renders an arbitrary grid; structured output maps each row to an
/// object keyed by the column names.
pub fn render_grid(h: &Header, head: &[&str], rows: Vec<Vec<String>>, fmt: Format) -> String {
    let mut g = Grid::new(head);
    g.rows = rows;
    match fmt {
        Format::Csv => h.comment() + &g.csv(),
        Format::Table => h.comment() + &g.table(),
        Format::Structured => {
            let rows: Vec<Value> = g
                .rows
                .iter()
                .map(|r| Value::Object(head.iter().zip(r).map(|(k, v)| (k.to_string(), Value::String(v.clone()))).collect()))
                .collect();
            pretty(&json!({ "header": h.json(), "rows": rows }))
        }
    }
}

fn outcome_cells(name: &str, o: &Outcome) -> Vec<String> {
    vec![
        name.to_string(),
        o.label.clone(),
        num(o.bound),
        o.status.as_str().to_string(),
        format!("{:.4}", o.time_s),
        o.counts.n_soc.to_string(),
        o.counts.n_psd.to_string(),
        o.counts.n_lin.to_string(),
    ]
}

fn outcome_json(o: &Outcome) -> Value {
    json!({
        "family": o.label,
        "bound": o.bound,
        "status": o.status.as_str(),
        "time_s": o.time_s,
        "n_soc": o.counts.n_soc,
        "n_psd": o.counts.n_psd,
        "n_lin": o.counts.n_lin,
        "x": o.x,
        "notes": o.notes,
        "diagnostic": o.diagnostic,
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

pub fn render_outcomes(h: &Header, name: &str, rows: &[Outcome], fmt: Format) -> String {
    let mut g = Grid::new(&CSV_COLUMNS);
    g.rows = rows.iter().map(|o| outcome_cells(name, o)).collect();
    match fmt {
        Format::Csv => h.comment() + &g.csv(),
        Format::Table => {
            let mut s = h.comment() + &g.table();
            for o in rows {
                for n in &o.notes {
                    s.push_str(&format!("note[{}]: {n}\n", o.label));
                }
                if let Some(d) = &o.diagnostic {
                    s.push_str(&format!("diagnostic[{}]: {d}\n", o.label));
                }
            }
            s
        }
        Format::Structured => pretty(&json!({
            "header": h.json(),
            "name": name,
            "results": rows.iter().map(outcome_json).collect::<Vec<_>>(),
        })),
    }
}

fn report_json(r: &CompareReport) -> Value {
    json!({
        "name": r.instance,
        "alpha": r.alpha.as_ref().map(|a| json!({"u": a.u.as_slice(), "alpha": a.alpha})),
        "results": r.rows.iter().map(outcome_json).collect::<Vec<_>>(),
        "improvement_ratio": r.improvement_ratio,
        "dominance_violations": r.dominance_violations.iter().map(|v| json!({
            "weaker": v.weaker, "stronger": v.stronger, "v_weaker": v.v_weaker, "v_stronger": v.v_stronger,
        })).collect::<Vec<_>>(),
        "oracle": r.oracle.as_ref().map(|o| json!({
            "value": o.best_val,
            "x": o.best_x.as_slice(),
            "grid_resolution": o.grid_resolution,
            "refined": o.refined,
        })),
        "oracle_violations": r.oracle_violations,
    })
}

pub fn render_compare(h: &Header, reports: &[CompareReport], fmt: Format) -> String {
    let mut g = Grid::new(&CSV_COLUMNS);
    for r in reports {
        g.rows.extend(r.rows.iter().map(|o| outcome_cells(&r.instance, o)));
    }
    match fmt {
        Format::Csv => h.comment() + &g.csv(),
        Format::Table => {
            let mut s = h.comment() + &g.table();
            for r in reports {
                if let Some(a) = &r.alpha {
                    s.push_str(&format!("{}: alpha = {} for u = {:?}\n", r.instance, a.alpha, a.u.as_slice()));
                }
                if let Some(v) = r.improvement_ratio {
                    s.push_str(&format!("{}: improvement ratio (gsrt vs rlt) = {v:.6}\n", r.instance));
                }
                if let Some(o) = &r.oracle {
                    s.push_str(&format!("{}: oracle = {} at {:?}\n", r.instance, o.best_val, o.best_x.as_slice()));
                }
                for v in &r.dominance_violations {
                    s.push_str(&format!(
                        "{}: DOMINANCE VIOLATION {} ({}) < {} ({})\n",
                        r.instance, v.stronger, v.v_stronger, v.weaker, v.v_weaker
                    ));
                }
                for v in &r.oracle_violations {
                    s.push_str(&format!("{}: ORACLE VIOLATION {v}\n", r.instance));
                }
            }
            s
        }
        Format::Structured => {
            pretty(&json!({ "header": h.json(), "instances": reports.iter().map(report_json).collect::<Vec<_>>() }))
        }
    }
}

pub fn render_sweep(h: &Header, t: &SweepTable, fmt: Format) -> String {
    let mut g = Grid::new(&["phi", "m", "count", "mean", "max", "min"]);
    g.rows = t
        .rows
        .iter()
        .map(|r| {
            vec![
                r.phi.to_string(),
                r.m.to_string(),
                r.count.to_string(),
                format!("{:.6}", r.mean),
                format!("{:.6}", r.max),
                format!("{:.6}", r.min),
            ]
        })
        .collect();
    match fmt {
        Format::Csv => h.comment() + &g.csv(),
        Format::Table => h.comment() + &g.table(),
        Format::Structured => pretty(&json!({
            "header": h.json(),
            "rows": t.rows.iter().map(|r| json!({
                "phi": r.phi, "m": r.m, "count": r.count, "mean": r.mean, "max": r.max, "min": r.min,
            })).collect::<Vec<_>>(),
            "cells": t.cells.iter().map(|c| json!({
                "phi": c.phi, "m": c.m, "rep": c.rep, "seed": c.seed, "attempts": c.attempts,
                "name": c.name, "rlt": c.v_rlt, "gsrt": c.v_gsrt, "ratio": c.ratio,
            })).collect::<Vec<_>>(),
        })),
    }
}

pub fn render_verify(h: &Header, reports: &[VerifyReport], fmt: Format) -> String {
    let mut g = Grid::new(&["name", "theorem", "relaxation", "status", "bound", "worst_check", "worst_margin", "pass"]);
    g.rows = reports
        .iter()
        .map(|r| {
            let w = r.worst();
            vec![
                r.instance.clone(),
                r.theorem.id().to_string(),
                r.relaxation.clone(),
                r.status.as_str().to_string(),
                num(r.bound),
                w.map_or_else(String::new, |c| c.name.clone()),
                num(w.map(|c| c.margin)),
                if r.pass { "PASS" } else { "FAIL" }.to_string(),
            ]
        })
        .collect();
    match fmt {
        Format::Csv => h.comment() + &g.csv(),
        Format::Table => h.comment() + &g.table(),
        Format::Structured => pretty(&json!({
            "header": h.json(),
            "results": reports.iter().map(|r| json!({
                "name": r.instance,
                "theorem": r.theorem.id(),
                "relaxation": r.relaxation,
                "status": r.status.as_str(),
                "bound": r.bound,
                "pass": r.pass,
                "checks": r.checks.iter().map(|c| json!({"name": c.name, "margin": c.margin})).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })),
    }
}
