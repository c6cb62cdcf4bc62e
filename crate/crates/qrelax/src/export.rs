//! Export of a lowered program in the Conic Benchmark Format (CBF,
//! version 3) for cross-checking with external solvers.
//!
//! Scalar cones map to `L=`, `L+` and `Q`; PSD cones become `PSDCON`
//! blocks with unscaled lower-triangular `HCOORD`/`DCOORD` entries.

use std::fmt::Write as _;

use qrelax_core::lift::{Cone, StandardForm};

/// Version of the comment header written above the CBF body.
pub const EXPORT_FORMAT_VERSION: u32 = 1;

pub fn to_cbf(sf: &StandardForm, header: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# qrelax-export v{EXPORT_FORMAT_VERSION}");
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    out.push_str("VER\n3\n\nOBJSENSE\nMIN\n\n");
    let _ = write!(out, "VAR\n{} 1\nF {}\n\n", sf.n_vars, sf.n_vars);

    // Row → (scalar row index) or (psd block, i, j, scale).
    enum Slot {
        Scalar(usize),
        Psd(usize, usize, usize, f64),
    }
    let mut slots = Vec::with_capacity(sf.n_rows());
    let mut scalar_cones = Vec::new();
    let mut psd_dims = Vec::new();
    let mut n_scalar = 0;
    for c in &sf.cones {
        match *c {
            Cone::Psd(d) => {
                let k = psd_dims.len();
                psd_dims.push(d);
                for j in 0..d {
                    for i in 0..=j {
                        let scale = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
                        slots.push(Slot::Psd(k, j, i, scale));
                    }
                }
            }
            Cone::Zero(k) | Cone::Nonneg(k) | Cone::Soc(k) => {
                let tag = match c {
                    Cone::Zero(_) => "L=",
                    Cone::Nonneg(_) => "L+",
                    _ => "Q",
                };
                scalar_cones.push((tag, k));
                for _ in 0..k {
                    slots.push(Slot::Scalar(n_scalar));
                    n_scalar += 1;
                }
            }
        }
    }
    let _ = writeln!(out, "CON\n{} {}", n_scalar, scalar_cones.len());
    for (tag, k) in &scalar_cones {
        let _ = writeln!(out, "{tag} {k}");
    }
    out.push('\n');
    if !psd_dims.is_empty() {
        let _ = writeln!(out, "PSDCON\n{}", psd_dims.len());
        for d in &psd_dims {
            let _ = writeln!(out, "{d}");
        }
        out.push('\n');
    }

    let obj: Vec<(usize, f64)> = sf.q.iter().copied().enumerate().filter(|e| e.1 != 0.0).collect();
    if !obj.is_empty() {
        let _ = writeln!(out, "OBJACOORD\n{}", obj.len());
        for (j, v) in obj {
            let _ = writeln!(out, "{j} {v:e}");
        }
        out.push('\n');
    }
    if sf.q0 != 0.0 {
        let _ = write!(out, "OBJBCOORD\n{:e}\n\n", sf.q0);
    }

    let (mut acoord, mut hcoord) = (Vec::new(), Vec::new());
    for &(r, c, v) in &sf.a {
        match slots[r] {
            Slot::Scalar(row) => acoord.push(format!("{row} {c} {:e}", -v)),
            Slot::Psd(k, row, col, s) => hcoord.push(format!("{k} {c} {row} {col} {:e}", -v / s)),
        }
    }
    let (mut bcoord, mut dcoord) = (Vec::new(), Vec::new());
    for (r, &v) in sf.b.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        match slots[r] {
            Slot::Scalar(row) => bcoord.push(format!("{row} {v:e}")),
            Slot::Psd(k, row, col, s) => dcoord.push(format!("{k} {row} {col} {:e}", v / s)),
        }
    }
    for (name, list) in [("ACOORD", acoord), ("BCOORD", bcoord), ("HCOORD", hcoord), ("DCOORD", dcoord)] {
        if list.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{name}\n{}", list.len());
        for l in list {
            out.push_str(&l);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}
