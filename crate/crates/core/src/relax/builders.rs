use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use super::{AlphaAug, RelaxError, RelaxationSpec};
use crate::decompose::{ConstraintDecomposition, DecompKind, GsocForm, GsocSide};
use crate::lift::{Affine, ConicProgram, LiftedSpace, LinForm, PsdBlock, Sense};
use crate::linalg::{self, SymMatrix};
use crate::model::{Classification, LinConstraint, QcqpInstance, QuadConstraint};

/// Everything a builder reads.
pub struct Context<'a> {
    pub inst: &'a QcqpInstance,
    pub cls: &'a Classification,
    pub decomps: &'a [ConstraintDecomposition],
    pub gsocs: &'a [GsocForm],
    pub rows: &'a [LinConstraint],
    pub space: LiftedSpace,
    pub spec: &'a RelaxationSpec,
    pub alpha: Option<&'a AlphaAug>,
}

/// `Q·X + cᵀx + d`.
pub fn quad_affine(space: &LiftedSpace, q: &SymMatrix, c: &nalgebra::DVector<f64>, d: f64) -> Affine {
    let mut a = Affine::constant(d);
    for j in 0..space.n {
        for i in 0..=j {
            let v = if i == j { q.get(i, i) } else { 2.0 * q.get(i, j) };
            a.push(space.xx(i, j), v);
        }
        a.push(space.x(j), c[j]);
    }
    a.canonical()
}

/// `b − aᵀx` as a form that is nonnegative on the feasible set.
fn row_form(r: &LinConstraint, nz: usize) -> LinForm {
    LinForm::of_x(-&r.a, nz, r.b)
}

/// Linearized product of a GSOC with a nonnegative affine form `r`:
/// `‖lin(h·r)‖ ≤ lin(l·r)`.
fn product_soc(space: &LiftedSpace, f: &GsocForm, r: &LinForm) -> (Affine, Vec<Affine>) {
    let head = space.prod(&f.l(), r);
    let tail = (0..f.rows()).map(|k| space.prod(&f.h(k), r)).collect();
    (head, tail)
}

fn family_label(kind: DecompKind) -> &'static str {
    match kind {
        DecompKind::ConvexA => "soc-rlt",
        DecompKind::ConvexB => "soc-rlt-b",
        DecompKind::NonconvexA => "gsrt-a",
        DecompKind::NonconvexB1 | DecompKind::NonconvexB2 => "gsrt-b",
    }
}

fn side_label(side: GsocSide) -> &'static str {
    match side {
        GsocSide::Convex => "C",
        GsocSide::L => "L",
        GsocSide::M => "M",
    }
}

/// Objective `Q₀·X + c₀ᵀx`, rows `Qᵢ·X + cᵢᵀx + dᵢ ≤ 0`, `aⱼᵀx ≤ bⱼ`, and
/// the moment LMI. Two-sided bounds `ℓ ≤ x_k ≤ u` also contribute the
/// bound-factor product `(u − x_k)(x_k − ℓ) ≥ 0` when RLT is off.
pub fn build_sdp(ctx: &Context) -> ConicProgram {
    let sp = ctx.space;
    let inst = ctx.inst;
    let mut prog = ConicProgram::new(sp, quad_affine(&sp, inst.q0(), inst.c0(), 0.0));
    for (i, qc) in inst.quad().iter().enumerate() {
        prog.push_row(alloc::format!("sdp:quad:{i}"), quad_affine(&sp, &qc.q, &qc.c, qc.d), Sense::Le);
    }
    for (j, r) in ctx.rows.iter().enumerate() {
        prog.push_row(alloc::format!("sdp:lin:{j}"), sp.lin(&row_form(r, sp.nz)), Sense::Ge);
    }
    if ctx.spec.box_products && !ctx.spec.rlt {
        for k in 0..sp.n {
            let upper = ctx.rows.iter().find(|r| matches!(r.single_variable(), Some((i, s)) if i == k && s > 0.0));
            let lower = ctx.rows.iter().find(|r| matches!(r.single_variable(), Some((i, s)) if i == k && s < 0.0));
            if let (Some(u), Some(l)) = (upper, lower) {
                let e = sp.prod(&row_form(u, sp.nz), &row_form(l, sp.nz));
                prog.push_row(alloc::format!("sdp:box:{k}"), e, Sense::Ge);
            }
        }
    }
    prog.push_psd(sp.moment_lmi());
    prog
}

/// `(bᵢ − aᵢᵀx)(bⱼ − aⱼᵀx) ≥ 0` linearized, for every pair `i < j`.
pub fn add_rlt(prog: &mut ConicProgram, ctx: &Context) {
    let sp = ctx.space;
    for i in 0..ctx.rows.len() {
        for j in (i + 1)..ctx.rows.len() {
            let e = sp.prod(&row_form(&ctx.rows[i], sp.nz), &row_form(&ctx.rows[j], sp.nz));
            prog.push_row(alloc::format!("rlt:{i}:{j}"), e, Sense::Ge);
        }
    }
}

/// Products of every convex-origin SOC with every linear row.
pub fn add_soc_rlt(prog: &mut ConicProgram, ctx: &Context) {
    let sp = ctx.space;
    for f in ctx.gsocs.iter().filter(|f| f.from_convex) {
        for (j, r) in ctx.rows.iter().enumerate() {
            let (head, tail) = product_soc(&sp, f, &row_form(r, sp.nz));
            let name = alloc::format!("{}:{}:{j}", family_label(f.kind), f.origin.constraint);
            prog.push_soc(name, head, tail);
        }
    }
}

/// For every nonconvex constraint: both norm bounds `‖h‖ ≤ z_t`, their
/// products with every linear row, and the equality `Z_tt = lin(‖h_M‖²)`.
pub fn add_gsrt(prog: &mut ConicProgram, ctx: &Context) {
    let sp = ctx.space;
    for f in ctx.gsocs.iter().filter(|f| !f.from_convex) {
        let fam = family_label(f.kind);
        let (i, side) = (f.origin.constraint, side_label(f.origin.side));
        let tail = (0..f.rows()).map(|k| sp.lin(&f.h(k))).collect();
        prog.push_soc(alloc::format!("{fam}:{i}:{side}"), sp.lin(&f.l()), tail);
        for (j, r) in ctx.rows.iter().enumerate() {
            let (head, tail) = product_soc(&sp, f, &row_form(r, sp.nz));
            prog.push_soc(alloc::format!("{fam}:{i}:{j}:{side}"), head, tail);
        }
        if f.origin.side == GsocSide::M {
            let mut e = sp.prod(&f.l(), &f.l());
            for k in 0..f.rows() {
                e.add_scaled(&sp.prod(&f.h(k), &f.h(k)), -1.0);
            }
            prog.push_row(alloc::format!("{fam}:{i}:eq"), e, Sense::Eq);
        }
    }
}

/// GSOC index pairs `s < t`, skipping convex–convex pairs unless asked.
pub fn sst_pairs(gsocs: &[GsocForm], include_convex_pairs: bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for s in 0..gsocs.len() {
        for t in (s + 1)..gsocs.len() {
            if gsocs[s].from_convex && gsocs[t].from_convex && !include_convex_pairs {
                continue;
            }
            out.push((s, t));
        }
    }
    out
}

/// `‖lin(hˢ(hᵗ)ᵀ)‖_F ≤ lin(lₛlₜ)` for every selected pair.
pub fn add_sst(prog: &mut ConicProgram, ctx: &Context) {
    let sp = ctx.space;
    for (s, t) in sst_pairs(ctx.gsocs, ctx.spec.sst_include_convex_pairs) {
        let (fs, ft) = (&ctx.gsocs[s], &ctx.gsocs[t]);
        let (p, q) = (fs.rows(), ft.rows());
        let mut entries = Vec::with_capacity(p * q);
        for a in 0..p {
            let ha = fs.h(a);
            for b in 0..q {
                entries.push(sp.prod(&ha, &ft.h(b)));
            }
        }
        prog.push_frob(alloc::format!("sst:{s}:{t}"), p, q, entries, sp.prod(&fs.l(), &ft.l()));
    }
}

struct KsocParts {
    beta: Affine,
    /// `p × q`, linearizes `hˢ(hᵗ)ᵀ`.
    l: Vec<Vec<Affine>>,
    /// `q`, linearizes `lₛ hᵗ`.
    mst: Vec<Affine>,
    /// `p`, linearizes `lₜ hˢ`.
    mts: Vec<Affine>,
}

fn ksoc_parts(sp: &LiftedSpace, fs: &GsocForm, ft: &GsocForm) -> KsocParts {
    let (hs, ht): (Vec<_>, Vec<_>) =
        ((0..fs.rows()).map(|k| fs.h(k)).collect(), (0..ft.rows()).map(|k| ft.h(k)).collect());
    KsocParts {
        beta: sp.prod(&fs.l(), &ft.l()),
        l: hs.iter().map(|a| ht.iter().map(|b| sp.prod(a, b)).collect()).collect(),
        mst: ht.iter().map(|b| sp.prod(&fs.l(), b)).collect(),
        mts: hs.iter().map(|a| sp.prod(&ft.l(), a)).collect(),
    }
}

/// `[[β I_p, Lˢᵗ, Mᵗˢ], [·, β I_q, Mˢᵗ], [·, ·, β]] ⪰ 0`.
pub fn ksoc_sub_block(sp: &LiftedSpace, fs: &GsocForm, ft: &GsocForm, name: String) -> PsdBlock {
    let k = ksoc_parts(sp, fs, ft);
    let (p, q) = (fs.rows(), ft.rows());
    let last = p + q;
    PsdBlock::from_fn(name, p + q + 1, |i, j| {
        if i == j {
            k.beta.clone()
        } else if j == last && i < p {
            k.mts[i].clone()
        } else if j == last {
            k.mst[i - p].clone()
        } else if i < p && j >= p {
            k.l[i][j - p].clone()
        } else {
            Affine::default()
        }
    })
}

/// The full linearized Tracy–Singh product of the two arrow matrices,
/// size `pq + p + q + 1`; its trailing `p + q + 1` block is [`ksoc_sub_block`].
pub fn ksoc_full_block(sp: &LiftedSpace, fs: &GsocForm, ft: &GsocForm, name: String) -> PsdBlock {
    let k = ksoc_parts(sp, fs, ft);
    let (p, q) = (fs.rows(), ft.rows());
    let pq = p * q;
    let dim = pq + p + q + 1;
    PsdBlock::from_fn(name, dim, |i, j| {
        if i == j {
            return k.beta.clone();
        }
        if i < pq {
            let (bi, bk) = (i / q, i % q);
            return if j < pq {
                Affine::default()
            } else if j < pq + p {
                // Kⁱ = Mˢᵗ eᵢᵀ
                if j - pq == bi { k.mst[bk].clone() } else { Affine::default() }
            } else if j < pq + p + q {
                // Jⁱ = Mᵗˢᵢ I_q
                if j - pq - p == bk { k.mts[bi].clone() } else { Affine::default() }
            } else {
                // Hⁱ
                k.l[bi][bk].clone()
            };
        }
        let (i2, j2) = (i - pq, j - pq);
        let last = p + q;
        if j2 == last && i2 < p {
            k.mts[i2].clone()
        } else if j2 == last {
            k.mst[i2 - p].clone()
        } else if i2 < p && j2 >= p {
            k.l[i2][j2 - p].clone()
        } else {
            Affine::default()
        }
    })
}

pub fn add_ksoc_sub(prog: &mut ConicProgram, ctx: &Context) {
    for (s, t) in sst_pairs(ctx.gsocs, ctx.spec.sst_include_convex_pairs) {
        let name = alloc::format!("ksoc-sub:{s}:{t}");
        prog.push_psd(ksoc_sub_block(&ctx.space, &ctx.gsocs[s], &ctx.gsocs[t], name));
    }
}

pub fn add_ksoc_full(prog: &mut ConicProgram, ctx: &Context) -> Result<(), RelaxError> {
    let pairs = sst_pairs(ctx.gsocs, ctx.spec.sst_include_convex_pairs);
    for &(s, t) in &pairs {
        let (p, q) = (ctx.gsocs[s].rows(), ctx.gsocs[t].rows());
        let dim = p * q + p + q + 1;
        if dim > ctx.spec.ksoc_cap {
            return Err(RelaxError::SizeCapExceeded { dim, cap: ctx.spec.ksoc_cap });
        }
    }
    for (s, t) in pairs {
        let name = alloc::format!("ksoc-full:{s}:{t}");
        prog.push_psd(ksoc_full_block(&ctx.space, &ctx.gsocs[s], &ctx.gsocs[t], name));
    }
    Ok(())
}

/// `α diag(u)⁻¹ diag(x) − X ⪰ 0`.
pub fn add_lmi35(prog: &mut ConicProgram, ctx: &Context) {
    let a = ctx.alpha.expect("lmi35 requires alpha");
    prog.push_psd(lmi35_block(&ctx.space, a));
}

pub fn lmi35_block(sp: &LiftedSpace, a: &AlphaAug) -> PsdBlock {
    PsdBlock::from_fn("lmi35", sp.n, |i, j| {
        let mut e = Affine::var(sp.xx(i, j), -1.0);
        if i == j {
            e.push(sp.x(i), a.alpha / a.u[i]);
        }
        e
    })
}

/// `[[diag(u∘x), −u∘Diag(BX)], [·, −α(cᵀx + d)]] ⪰ 0` with
/// `Diag(BX)_k = B_k X_{·k}` and `B` the ascending-order spectral factor.
pub fn hsoc_matrix(sp: &LiftedSpace, qc: &QuadConstraint, b: &DMatrix<f64>, a: &AlphaAug, name: String) -> PsdBlock {
    let (n, nz) = (sp.n, sp.nz);
    PsdBlock::from_fn(name, n + 1, |i, j| {
        if i == j && i < n {
            Affine::var(sp.x(i), a.u[i])
        } else if j == n && i < n {
            let bx = LinForm::of_x(b.row(i).transpose(), nz, 0.0);
            sp.prod(&LinForm::x_coord(n, nz, i), &bx).scaled(-a.u[i])
        } else if i == n {
            sp.lin(&LinForm::of_x(qc.c.clone(), nz, qc.d)).scaled(-a.alpha)
        } else {
            Affine::default()
        }
    })
}

pub fn add_hsoc(prog: &mut ConicProgram, ctx: &Context) -> Result<(), RelaxError> {
    let a = ctx.alpha.expect("hsoc requires alpha");
    for &i in &ctx.cls.convex {
        let qc = &ctx.inst.quad()[i];
        let b = linalg::spectral_factor(&qc.q, ctx.spec.tol)?;
        prog.push_psd(hsoc_matrix(&ctx.space, qc, &b, a, alloc::format!("hsoc:{i}")));
    }
    Ok(())
}
