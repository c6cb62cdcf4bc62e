//! Command line front end.
//!
//! Solver settings resolve in the order defaults, then `QRELAX_*`
//! environment variables, then command line flags.

use std::io::Write as _;

use clap::{Args, Parser, Subcommand};
use qrelax_core::lift::{self, SolveStatus};
use qrelax_core::model::QcqpInstance;
use qrelax_core::oracle;
use qrelax_core::relax::{self, AlphaAug, Family};
use rayon::prelude::*;

use crate::backend::{Clarabel, ConicBackend, SolverConfig};
use crate::bench::compare::{compare, CompareReport, OracleOptions};
use crate::bench::generate::{generate, GenSpec};
use crate::bench::report::{self, Format, Header};
use crate::bench::sweep::{figures_sweep, SweepConfig};
use crate::bench::verify::{verify, Theorem};
use crate::error::{Error, EXIT_OK, EXIT_SOLVER};
use crate::export::to_cbf;
use crate::fixtures::{self, Target};
use crate::format::serialize_instance;
use crate::solve::{solve_request, AlphaSpec, Request};

#[derive(Debug, Parser)]
#[command(name = "qrelax", version, about = "Convex relaxation ladders for nonconvex QCQPs")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Primal/dual feasibility tolerance.
    #[arg(long, global = true)]
    pub featol: Option<f64>,
    /// Duality gap tolerance.
    #[arg(long, global = true)]
    pub gaptol: Option<f64>,
    /// Per-solve time limit in seconds.
    #[arg(long, global = true)]
    pub time_limit: Option<f64>,
    /// Base seed for generated instances.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for batch solves.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct AlphaArg {
    /// `u=1,2` (α computed from the SDP relaxation) or `u=1,2;alpha=1.8`.
    #[arg(long)]
    pub alpha: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one relaxation of one instance.
    Solve {
        #[arg(long)]
        instance: String,
        /// Family name, optionally suffixed with `+alpha`.
        #[arg(long, default_value = "gsrt-a")]
        relaxation: String,
        #[command(flatten)]
        alpha: AlphaArg,
        /// Also run the grid oracle (n <= 4).
        #[arg(long)]
        oracle: bool,
    },
    /// Solve a list of relaxations and audit the hierarchy.
    Compare {
        #[arg(long, required = true, num_args = 1..)]
        instance: Vec<String>,
        /// Comma separated; defaults to every family not needing alpha,
        /// plus the alpha families and variants when `--alpha` is given.
        #[arg(long, value_delimiter = ',')]
        relaxations: Option<Vec<String>>,
        #[command(flatten)]
        alpha: AlphaArg,
        #[arg(long)]
        oracle: bool,
    },
    /// Generate a random instance.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        l: usize,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long)]
        m: usize,
        /// Negative eigenvalues per nonconvex constraint.
        #[arg(long)]
        phi: Option<usize>,
        /// Use `Q0 = I - sum Qi`.
        #[arg(long)]
        figures: bool,
        /// Append `x >= 0` rows.
        #[arg(long)]
        nonneg: bool,
    },
    /// Check an implied inequality at the optimum of its dominating relaxation.
    Verify {
        #[arg(long, required = true, num_args = 1..)]
        instance: Vec<String>,
        /// Comma separated ids (thm5, thm6, cor1, thm8, thm9, cor2) or `all`.
        #[arg(long, default_value = "all", value_delimiter = ',')]
        theorem: Vec<String>,
        #[command(flatten)]
        alpha: AlphaArg,
    },
    /// Improvement-ratio sweep over the number of linear rows.
    Sweep {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        l: usize,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![2, 5, 8])]
        phis: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        m_min: usize,
        #[arg(long, default_value_t = 10)]
        m_max: usize,
        #[arg(long, default_value_t = 5)]
        reps: usize,
    },
    /// Reproduce the reference values of the shipped examples.
    PaperExamples {
        /// Restrict to these fixtures.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
    },
    /// Write the lowered conic program in CBF.
    Export {
        #[arg(long)]
        instance: String,
        #[arg(long, default_value = "gsrt-a")]
        relaxation: String,
        #[command(flatten)]
        alpha: AlphaArg,
    },
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { crate::error::EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn solver_config(g: &Global) -> Result<SolverConfig, Error> {
    let mut cfg = SolverConfig::default().with_env()?;
    if let Some(v) = g.featol {
        cfg.featol = v;
    }
    if let Some(v) = g.gaptol {
        cfg.gaptol = v;
    }
    if let Some(v) = g.time_limit {
        cfg.time_limit = Some(v);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(g: &Global, text: &str) -> Result<(), Error> {
    match &g.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p.clone(), e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn load(spec: &str) -> Result<QcqpInstance, Error> {
    let p = fixtures::load(spec)?;
    for w in &p.warnings {
        eprintln!("warning: {spec}: {w}");
    }
    Ok(p.instance)
}

fn resolve_alpha(arg: &AlphaArg, inst: &QcqpInstance, cfg: &SolverConfig) -> Result<Option<AlphaAug>, Error> {
    arg.alpha.as_deref().map(|s| AlphaSpec::parse(s)?.resolve(inst, cfg)).transpose()
}

fn check_alpha(reqs: &[Request], alpha: Option<&AlphaAug>) -> Result<(), Error> {
    match reqs.iter().find(|r| r.needs_alpha()) {
        Some(r) if alpha.is_none() => Err(Error::Invalid(format!("{} requires --alpha", r.label()))),
        _ => Ok(()),
    }
}

fn default_requests(with_alpha: bool) -> Vec<Request> {
    let mut out: Vec<Request> = Family::ALL.into_iter().filter(|f| !f.needs_alpha()).map(Request::plain).collect();
    if with_alpha {
        out.extend(Family::ALL.into_iter().filter(|f| f.needs_alpha()).map(Request::plain));
        out.extend(Family::ALL.into_iter().filter(|f| f.has_alpha_variant()).map(Request::with_alpha));
    }
    out
}

fn oracle_opts(inst: &QcqpInstance, wanted: bool) -> Option<OracleOptions> {
    if !wanted {
        return None;
    }
    if inst.n() > oracle::MAX_DIM {
        eprintln!("warning: {}: oracle skipped (n = {} > {})", inst.name(), inst.n(), oracle::MAX_DIM);
        return None;
    }
    Some(OracleOptions::default())
}

fn solver_failed(status: SolveStatus) -> bool {
    matches!(status, SolveStatus::Failed | SolveStatus::TimedOut)
}

fn alpha_note(h: Header, a: Option<&AlphaAug>) -> Header {
    match a {
        Some(a) => h.with("alpha", format!("u = {:?}; alpha = {}; source = {:?}", a.u.as_slice(), a.alpha, a.source)),
        None => h,
    }
}

fn execute(cli: &Cli) -> Result<i32, Error> {
    let g = &cli.global;
    let cfg = solver_config(g)?;
    if g.jobs == 0 {
        return Err(Error::Invalid("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(g.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| execute_in_pool(cli, &cfg))
}

fn execute_in_pool(cli: &Cli, cfg: &SolverConfig) -> Result<i32, Error> {
    let g = &cli.global;
    let backend = Clarabel.name();
    match &cli.command {
        Command::Solve { instance, relaxation, alpha, oracle } => {
            let inst = load(instance)?;
            let req = Request::parse(relaxation)?;
            let a = resolve_alpha(alpha, &inst, cfg)?;
            check_alpha(&[req], a.as_ref())?;
            // Surface build errors (dimension, size caps) as validation failures.
            relax::build(&inst, &req.spec(a.as_ref())?)?;
            let rep = compare(&inst, &[req], a.as_ref(), cfg, oracle_opts(&inst, *oracle));
            let h = alpha_note(Header::new("solve", cfg, backend).with("instance", inst.name()), a.as_ref());
            let mut text = report::render_compare(&h, std::slice::from_ref(&rep), g.format);
            if g.format == Format::Table {
                text.push_str(&format!("x = {:?}\n", rep.rows[0].x));
            }
            emit(g, &text)?;
            Ok(if solver_failed(rep.rows[0].status) { EXIT_SOLVER } else { EXIT_OK })
        }
        Command::Compare { instance, relaxations, alpha, oracle } => {
            let insts = instance.iter().map(|s| load(s)).collect::<Result<Vec<_>, _>>()?;
            let mut reports: Vec<CompareReport> = Vec::new();
            for inst in &insts {
                let a = resolve_alpha(alpha, inst, cfg)?;
                let reqs = match relaxations {
                    Some(list) => {
                        let mut r = list.iter().map(|s| Request::parse(s)).collect::<Result<Vec<_>, _>>()?;
                        if a.is_some() {
                            for f in r.clone() {
                                if !f.alpha_row && f.family.has_alpha_variant() {
                                    let v = Request::with_alpha(f.family);
                                    if !r.contains(&v) {
                                        r.push(v);
                                    }
                                }
                            }
                        }
                        r
                    }
                    None => default_requests(a.is_some()),
                };
                check_alpha(&reqs, a.as_ref())?;
                reports.push(compare(inst, &reqs, a.as_ref(), cfg, oracle_opts(inst, *oracle)));
            }
            let h = Header::new("compare", cfg, backend).with("instances", insts.len());
            let h = alpha_note(h, reports.first().and_then(|r| r.alpha.as_ref()));
            emit(g, &report::render_compare(&h, &reports, g.format))?;
            let failed = reports.iter().flat_map(|r| &r.rows).any(|o| solver_failed(o.status));
            Ok(if failed { EXIT_SOLVER } else { EXIT_OK })
        }
        Command::Gen { n, l, k, m, phi, figures, nonneg } => {
            let spec = GenSpec { phi: *phi, figures: *figures, nonneg: *nonneg, ..GenSpec::new(*n, *l, *k, *m, g.seed) };
            let inst = generate(&spec)?;
            emit(g, &serialize_instance(&inst))?;
            Ok(EXIT_OK)
        }
        Command::Verify { instance, theorem, alpha } => {
            let theorems: Vec<Theorem> = if theorem.iter().any(|t| t.trim() == "all") {
                Theorem::ALL.to_vec()
            } else {
                theorem.iter().map(|t| Theorem::parse(t)).collect::<Result<_, _>>()?
            };
            let mut reports = Vec::new();
            for spec in instance {
                let inst = load(spec)?;
                let a = resolve_alpha(alpha, &inst, cfg)?;
                for &t in &theorems {
                    reports.push(verify(&inst, t, a.as_ref(), cfg)?);
                }
            }
            let h = Header::new("verify", cfg, backend).with("instances", instance.len());
            emit(g, &report::render_verify(&h, &reports, g.format))?;
            Ok(if reports.iter().all(|r| r.pass) { EXIT_OK } else { EXIT_SOLVER })
        }
        Command::Sweep { n, l, k, phis, m_min, m_max, reps } => {
            let sc = SweepConfig {
                n: *n,
                l: *l,
                k: *k,
                phis: phis.clone(),
                m_min: *m_min,
                m_max: *m_max,
                reps: *reps,
                base_seed: g.seed,
                ..SweepConfig::default()
            };
            let t = figures_sweep(&sc, cfg)?;
            let mut h = Header::new("sweep", cfg, backend)
                .with("setting", format!("n = {n}; l = {l}; k = {k}; phis = {phis:?}; m = {m_min}..={m_max}; reps = {reps}"))
                .with("instances", t.cells.len());
            h.seeds = vec![g.seed];
            emit(g, &report::render_sweep(&h, &t, g.format))?;
            Ok(EXIT_OK)
        }
        Command::PaperExamples { only } => paper_examples(g, cfg, only.as_deref()),
        Command::Export { instance, relaxation, alpha } => {
            let inst = load(instance)?;
            let req = Request::parse(relaxation)?;
            let a = resolve_alpha(alpha, &inst, cfg)?;
            let rel = relax::build(&inst, &req.spec(a.as_ref())?)?;
            let sf = lift::lower(&rel.program);
            let c = rel.program.counts();
            let h = alpha_note(Header::new("export", cfg, backend), a.as_ref())
                .with("instance", inst.name())
                .with("relaxation", req.label())
                .with("counts", format!("n_lin = {}; n_soc = {}; n_psd = {}", c.n_lin, c.n_soc, c.n_psd));
            emit(g, &to_cbf(&sf, &h.lines()))?;
            Ok(EXIT_OK)
        }
    }
}

fn paper_examples(g: &Global, cfg: &SolverConfig, only: Option<&[String]>) -> Result<i32, Error> {
    let refs: Vec<_> =
        fixtures::references().into_iter().filter(|r| only.map_or(true, |o| o.iter().any(|n| n == r.fixture))).collect();
    if refs.is_empty() {
        return Err(Error::Invalid("no reference values selected".into()));
    }
    let rows: Vec<(bool, bool, Vec<String>)> = refs
        .par_iter()
        .map(|r| -> Result<_, Error> {
            let inst = load(r.fixture)?;
            let got = match &r.target {
                Target::Oracle => Some(oracle::global_min_default(&inst, oracle::DEFAULT_RESOLUTION)?.best_val),
                Target::Bound(req) => {
                    let a = r.alpha.as_ref().map(|s| s.resolve(&inst, cfg)).transpose()?;
                    // Inaccurate solves report the dual objective, still a valid bound.
                    solve_request(&inst, *req, a.as_ref(), cfg)?.bound
                }
            };
            let ok = got.is_some_and(|v| (v - r.value).abs() <= r.tol);
            let verdict = match (ok, r.known_deviation) {
                (true, _) => "PASS",
                (false, true) => "FAIL (known deviation)",
                (false, false) => "FAIL",
            };
            Ok((
                ok,
                r.known_deviation,
                vec![
                    r.fixture.to_string(),
                    r.label(),
                    r.value.to_string(),
                    got.map_or_else(|| "none".into(), |v| format!("{v:.6}")),
                    format!("{:e}", r.tol),
                    verdict.to_string(),
                ],
            ))
        })
        .collect::<Result<_, _>>()?;
    let fatal = rows.iter().any(|(ok, known, _)| !ok && !known);
    let h = Header::new("paper-examples", cfg, Clarabel.name()).with("references", rows.len());
    let text = report::render_grid(
        &h,
        &["name", "family", "reference", "computed", "tol", "verdict"],
        rows.into_iter().map(|r| r.2).collect(),
        g.format,
    );
    emit(g, &text)?;
    Ok(if fatal { EXIT_SOLVER } else { EXIT_OK })
}
