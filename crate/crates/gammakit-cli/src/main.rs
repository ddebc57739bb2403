//! Command-line front door: parse inputs, dispatch to the library, emit
//! verdicts, certificates, and sample exports as JSON (CSV for samples).
//!
//! Exit codes: 0 = holds/success, 1 = fails with certificate, 2 = input or
//! usage error.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use gammakit::{
    boundary_from_mu, contraction_verdict, defaults, fundamental_invariant, innerness_defect,
    invariant_subspace_verdict, is_gamma_coisometry, is_gamma_isometry, is_gamma_unitary,
    product_unitary_promotion, sample, sup_on_gamma, unitary_equiv, unitary_generators, vn_margin,
    wold_decompose, wold_decompose_matrix, BoundaryRoute, Budget, GammaPoint, InnerSymbol,
    MatrixTuple, ModelTuple, MultiPoly, SymbolTuple, Verdict, C64,
};
use serde_json::{json, Value};
use std::io::Read;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "gammakit", version, about = "Operator theory on the symmetrized polydisc, computably")]
struct Cli {
    /// Worker threads for parallel batteries and grids
    /// (falls back to GAMMAKIT_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the primary output (JSON; CSV for `sample`) to a file instead
    /// of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct BudgetArgs {
    /// Maximum total degree of random battery polynomials.
    #[arg(long = "budget-degree", default_value_t = 4)]
    budget_degree: u32,
    /// Number of random battery polynomials.
    #[arg(long = "budget-polys", default_value_t = 64)]
    budget_polys: usize,
    /// Torus grid size per angle.
    #[arg(long, default_value_t = defaults::GRID)]
    grid: usize,
    /// RNG seed for the random battery.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl BudgetArgs {
    fn budget(&self) -> Budget {
        Budget { max_degree: self.budget_degree, random_polys: self.budget_polys, grid: self.grid }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Membership in Γ_n, or distinguished-boundary membership with --boundary.
    Membership {
        /// GammaPoint JSON {"n":…, "s":[[re,im],…]} (inline, @file, or -).
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = defaults::MEMBERSHIP_TOL)]
        tol: f64,
        /// Test membership in the distinguished boundary instead.
        #[arg(long)]
        boundary: bool,
        /// Boundary route: fiber | recursive | closure | all.
        #[arg(long, default_value = "all")]
        route: String,
    },
    /// The projection (γ_1 s_1,…,γ_{n-1} s_{n-1}) into Γ_{n-1}.
    Project {
        #[arg(long)]
        point: String,
    },
    /// The embedding (α+s_1, αs_1+s_2, …, αs_n) into Γ_{n+1}.
    Embed {
        #[arg(long)]
        point: String,
        /// α as `re` or `[re,im]`.
        #[arg(long)]
        alpha: String,
    },
    /// A fiber point: root multiset of the characteristic polynomial.
    Fiber {
        #[arg(long)]
        point: String,
    },
    /// Reconstruct a boundary point of Γ_{n+1} from μ ∈ bΓ_n and an angle.
    BoundaryFrom {
        #[arg(long)]
        mu: String,
        #[arg(long)]
        theta: f64,
    },
    /// Reduce a symmetric polynomial to a polynomial in s_1,…,s_n.
    Reduce {
        /// MultiPoly text (`re im : e1 … en` per line; inline, @file, or -).
        #[arg(long)]
        poly: String,
    },
    /// sup over Γ_n of |q| via the torus grid with refinement.
    Sup {
        #[arg(long)]
        poly: String,
        #[arg(long, default_value_t = defaults::GRID)]
        grid: usize,
        #[arg(long, default_value_t = defaults::REFINE_ITERS)]
        refine: usize,
    },
    /// von Neumann check: margin for one polynomial, or a sampled battery.
    VnCheck {
        /// MatrixTuple JSON {"n":…, "mats":[…]}.
        #[arg(long)]
        tuple: String,
        /// Optional single polynomial (text format) for a margin report.
        #[arg(long)]
        poly: Option<String>,
        #[arg(long, default_value_t = defaults::MARGIN_TOL)]
        tol: f64,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Γ_n-unitary / isometry / co-isometry / product-promotion verdicts.
    Classify {
        #[arg(long)]
        tuple: String,
        /// unitary | isometry | coisometry | product-promotion.
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = defaults::SPECTRAL_TOL)]
        tol: f64,
        #[arg(long, default_value_t = defaults::GRID)]
        grid: usize,
    },
    /// Recover commuting unitary generators of a Γ_n-unitary.
    Generators {
        #[arg(long)]
        tuple: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Admissibility of a symbol tuple (model conditions).
    ModelCheck {
        /// SymbolTuple JSON {"d":…, "A":[…]}.
        #[arg(long)]
        symbols: String,
        #[arg(long, default_value_t = defaults::SPECTRAL_TOL)]
        tol: f64,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Build the pure Γ_n-isometry model from an admissible symbol tuple.
    ModelBuild {
        #[arg(long)]
        symbols: String,
        #[arg(long, default_value_t = defaults::SPECTRAL_TOL)]
        tol: f64,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// The degree-zero invariant (compressions of S_{n-i}* − S_i S_n*).
    Invariant {
        /// ModelTuple JSON (same shape as a SymbolTuple).
        #[arg(long)]
        model: String,
    },
    /// Wold decomposition of a structured tuple or a plain matrix tuple.
    Wold {
        /// Either {"unitary_part":…, "pure_part":…} or a MatrixTuple.
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Beurling–Lax–Halmos invariant-subspace verification.
    BlhVerify {
        #[arg(long)]
        model: String,
        /// InnerSymbol JSON {"e_in":…, "e_out":…, "coeffs":[…]}.
        #[arg(long)]
        theta: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Unitary equivalence of two symbol tuples (trace words + witness).
    Equiv {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Maximum word length; 0 means the default min(2d², 8).
        #[arg(long, default_value_t = 0)]
        word_len: usize,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Sample points of Γ_n (or its distinguished boundary) as CSV.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        boundary: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .or_else(|| std::env::var("GAMMAKIT_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(k) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            let msg = json!({ "error": format!("{e:#}") });
            println!("{}", serde_json::to_string_pretty(&msg).unwrap());
            std::process::exit(2);
        }
    }
}

/// Resolve `@path` to file contents, `-` to stdin, anything else inline.
fn read_arg(s: &str) -> anyhow::Result<String> {
    if let Some(path) = s.strip_prefix('@') {
        return std::fs::read_to_string(path).with_context(|| format!("reading {}", path));
    }
    if s == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        return Ok(buf);
    }
    Ok(s.to_string())
}

fn parse_json<T: serde::de::DeserializeOwned>(arg: &str, what: &str) -> anyhow::Result<T> {
    let text = read_arg(arg)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", what))
}

fn parse_alpha(s: &str) -> anyhow::Result<C64> {
    if let Ok(x) = s.parse::<f64>() {
        return Ok(C64::new(x, 0.0));
    }
    let v: Vec<f64> = serde_json::from_str(s).context("α must be a real number or [re,im]")?;
    match v.as_slice() {
        [re] => Ok(C64::new(*re, 0.0)),
        [re, im] => Ok(C64::new(*re, *im)),
        _ => Err(anyhow!("α must be a real number or [re,im]")),
    }
}

fn emit(out: &Option<PathBuf>, payload: &Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(payload)?;
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        None => println!("{}", text),
    }
    Ok(())
}

fn verdict_payload(command: &str, params: Value, v: &Verdict) -> Value {
    json!({
        "command": command,
        "params": params,
        "verdict": v,
    })
}

fn verdict_exit(v: &Verdict) -> i32 {
    if v.holds {
        0
    } else {
        1
    }
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let out = cli.out.clone();
    match cli.cmd {
        Cmd::Membership { point, tol, boundary, route } => {
            let p: GammaPoint = parse_json(&point, "GammaPoint")?;
            let v = if boundary {
                let route: BoundaryRoute = route.parse()?;
                p.on_boundary(tol, route)
            } else {
                p.in_gamma(tol)
            };
            let payload = verdict_payload(
                "membership",
                json!({"n": p.n(), "tol": tol, "boundary": boundary, "route": route}),
                &v,
            );
            emit(&out, &payload)?;
            Ok(verdict_exit(&v))
        }
        Cmd::Project { point } => {
            let p: GammaPoint = parse_json(&point, "GammaPoint")?;
            let q = p.project()?;
            emit(&out, &json!({"command": "project", "params": {"n": p.n()}, "result": q}))?;
            Ok(0)
        }
        Cmd::Embed { point, alpha } => {
            let p: GammaPoint = parse_json(&point, "GammaPoint")?;
            let a = parse_alpha(&alpha)?;
            let q = p.embed(a);
            emit(&out, &json!({"command": "embed", "params": {"n": p.n(), "alpha": [a.re, a.im]}, "result": q}))?;
            Ok(0)
        }
        Cmd::Fiber { point } => {
            let p: GammaPoint = parse_json(&point, "GammaPoint")?;
            let f = p.fiber();
            emit(&out, &json!({"command": "fiber", "params": {"n": p.n()}, "result": f}))?;
            Ok(0)
        }
        Cmd::BoundaryFrom { mu, theta } => {
            let m: GammaPoint = parse_json(&mu, "GammaPoint")?;
            let s = boundary_from_mu(&m, theta)?;
            emit(&out, &json!({"command": "boundary-from", "params": {"n": m.n(), "theta": theta}, "result": s}))?;
            Ok(0)
        }
        Cmd::Reduce { poly } => {
            let text = read_arg(&poly)?;
            let p = MultiPoly::parse(&text)?;
            let q = p.reduce_symmetric()?;
            emit(
                &out,
                &json!({
                    "command": "reduce",
                    "params": {"n_vars": p.n_vars(), "terms": p.num_terms()},
                    "result": {"text": q.to_text(), "rendered": q.to_string(), "terms": q.num_terms()},
                }),
            )?;
            Ok(0)
        }
        Cmd::Sup { poly, grid, refine } => {
            let text = read_arg(&poly)?;
            let q = MultiPoly::parse(&text)?;
            let n = q.n_vars();
            let r = sup_on_gamma(&q, n, grid, refine)?;
            emit(
                &out,
                &json!({
                    "command": "sup",
                    "params": {"n": n, "grid": grid, "refine": refine},
                    "result": r,
                }),
            )?;
            Ok(0)
        }
        Cmd::VnCheck { tuple, poly, tol, budget } => {
            let t: MatrixTuple = parse_json(&tuple, "MatrixTuple")?;
            match poly {
                Some(poly) => {
                    let q = MultiPoly::parse(&read_arg(&poly)?)?;
                    let margin = vn_margin(&t, &q, budget.grid)?;
                    let holds = margin <= tol;
                    emit(
                        &out,
                        &json!({
                            "command": "vn-check",
                            "params": {"n": t.n(), "dim": t.dim(), "grid": budget.grid, "tol": tol},
                            "result": {"margin": margin, "holds": holds},
                        }),
                    )?;
                    Ok(if holds { 0 } else { 1 })
                }
                None => {
                    let v = contraction_verdict(&t, &budget.budget(), budget.seed, tol);
                    let payload = verdict_payload(
                        "vn-check",
                        json!({
                            "n": t.n(), "dim": t.dim(), "tol": tol,
                            "budget": budget.budget(), "seed": budget.seed,
                        }),
                        &v,
                    );
                    emit(&out, &payload)?;
                    Ok(verdict_exit(&v))
                }
            }
        }
        Cmd::Classify { tuple, kind, tol, grid } => {
            let t: MatrixTuple = parse_json(&tuple, "MatrixTuple")?;
            let v = match kind.as_str() {
                "unitary" => is_gamma_unitary(&t, tol, grid),
                "isometry" => is_gamma_isometry(&t, tol, grid),
                "coisometry" => is_gamma_coisometry(&t, tol, grid),
                "product-promotion" => product_unitary_promotion(&t, tol),
                other => return Err(anyhow!("unknown kind `{other}`")),
            };
            let payload = verdict_payload(
                "classify",
                json!({"kind": kind, "n": t.n(), "dim": t.dim(), "tol": tol, "grid": grid}),
                &v,
            );
            emit(&out, &payload)?;
            Ok(verdict_exit(&v))
        }
        Cmd::Generators { tuple, tol } => {
            let t: MatrixTuple = parse_json(&tuple, "MatrixTuple")?;
            let u = unitary_generators(&t, tol)?;
            emit(
                &out,
                &json!({
                    "command": "generators",
                    "params": {"n": t.n(), "dim": t.dim(), "tol": tol},
                    "result": u,
                }),
            )?;
            Ok(0)
        }
        Cmd::ModelCheck { symbols, tol, budget } => {
            let a: SymbolTuple = parse_json(&symbols, "SymbolTuple")?;
            let v = gammakit::check_symbol_conditions(&a, tol, &budget.budget());
            let payload = verdict_payload(
                "model-check",
                json!({"n": a.n(), "d": a.dim(), "tol": tol, "budget": budget.budget()}),
                &v,
            );
            emit(&out, &payload)?;
            Ok(verdict_exit(&v))
        }
        Cmd::ModelBuild { symbols, tol, budget } => {
            let a: SymbolTuple = parse_json(&symbols, "SymbolTuple")?;
            let model = gammakit::build_pure_isometry(&a, tol, &budget.budget())?;
            emit(
                &out,
                &json!({
                    "command": "model-build",
                    "params": {"n": a.n(), "d": a.dim(), "tol": tol},
                    "result": model,
                }),
            )?;
            Ok(0)
        }
        Cmd::Invariant { model } => {
            let m: ModelTuple = parse_json(&model, "ModelTuple")?;
            let inv = fundamental_invariant(&m);
            emit(
                &out,
                &json!({
                    "command": "invariant",
                    "params": {"n": m.n(), "d": m.dim()},
                    "result": inv,
                }),
            )?;
            Ok(0)
        }
        Cmd::Wold { input, tol } => {
            let text = read_arg(&input)?;
            // structured first, plain matrix tuple second
            if let Ok(st) = serde_json::from_str::<gammakit::StructuredTuple>(&text) {
                if st.unitary_part.is_some() || st.pure_part.is_some() {
                    let (u, p) = wold_decompose(&st, tol)?;
                    emit(
                        &out,
                        &json!({
                            "command": "wold",
                            "params": {"tol": tol, "route": "structured"},
                            "result": {"unitary": u, "pure": p},
                        }),
                    )?;
                    return Ok(0);
                }
            }
            let t: MatrixTuple =
                serde_json::from_str(&text).context("parsing StructuredTuple or MatrixTuple")?;
            let (u, p) = wold_decompose_matrix(&t, tol)?;
            emit(
                &out,
                &json!({
                    "command": "wold",
                    "params": {"tol": tol, "route": "matrix"},
                    "result": {"unitary": u, "pure": p},
                }),
            )?;
            Ok(0)
        }
        Cmd::BlhVerify { model, theta, tol, budget } => {
            let m: ModelTuple = parse_json(&model, "ModelTuple")?;
            let th: InnerSymbol = parse_json(&theta, "InnerSymbol")?;
            let v = invariant_subspace_verdict(&m, &th, tol, &budget.budget())?;
            let payload = verdict_payload(
                "blh-verify",
                json!({
                    "n": m.n(), "d": m.dim(), "e_in": th.e_in(), "e_out": th.e_out(),
                    "tol": tol, "innerness": innerness_defect(&th, 256),
                }),
                &v,
            );
            emit(&out, &payload)?;
            Ok(verdict_exit(&v))
        }
        Cmd::Equiv { a, b, word_len, tol } => {
            let ta: SymbolTuple = parse_json(&a, "SymbolTuple")?;
            let tb: SymbolTuple = parse_json(&b, "SymbolTuple")?;
            let res = unitary_equiv(&ta, &tb, word_len, tol);
            let payload = json!({
                "command": "equiv",
                "params": {"d": ta.dim(), "n": ta.n(), "word_len": word_len, "tol": tol},
                "verdict": res.verdict,
                "witness": res.witness,
            });
            emit(&out, &payload)?;
            Ok(verdict_exit(&res.verdict))
        }
        Cmd::Sample { n, count, boundary, seed } => {
            let points = sample(n, count, boundary, seed);
            let mut csv = String::new();
            for p in &points {
                let row: Vec<String> = p
                    .coords()
                    .iter()
                    .flat_map(|z| [format!("{:.17e}", z.re), format!("{:.17e}", z.im)])
                    .collect();
                csv.push_str(&row.join(","));
                csv.push('\n');
            }
            match &out {
                Some(path) => {
                    std::fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&json!({
                            "command": "sample",
                            "params": {"n": n, "count": count, "boundary": boundary, "seed": seed},
                            "result": {"written": path.display().to_string(), "rows": count},
                        }))?
                    );
                }
                None => print!("{}", csv),
            }
            Ok(0)
        }
    }
}
