//! Command-line front end. [`run`] takes the argument vector and two sinks
//! and returns the process exit code, so the binary and the tests share it.

use clap::{Args, Parser, Subcommand};
use propinq::cxa::{beta_seminorm, slope_seminorm, total_lip};
use propinq::io;
use propinq::mk::{diameter_probe, mk_distance, MkOptions};
use propinq::propinquity::{
    fd_approx_bounds, level_bound_table, uhf_continuity_table, uhf_isometry_check, uhf_sizes,
    Comparison, UhfCheckOptions, UHF_MAX_DIM,
};
use propinq::spaces::{gh_bruteforce, greedy_net, hausdorff_subset, BaireSeq, FiniteMetricSpace};
use propinq::Error;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONVERGENCE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Environment variable that overrides `--seed`.
pub const SEED_ENV: &str = "PROPINQ_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "propinq",
    version,
    about = "Lip-norms, MK distances and propinquity bounds on C(X) ⊗ A"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Write a CSV table to PATH.
    #[arg(long, global = true, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Write a JSON document with the full result to PATH.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Seed for sampled computations; PROPINQ_SEED takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate chain, space, element and state files. Elements and states
    /// are checked against the nearest preceding chain and space.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Slope, β-seminorm and total Lip-norm of an element.
    Lip {
        chain: PathBuf,
        space: PathBuf,
        element: PathBuf,
    },
    /// Monge–Kantorovich distance between two states.
    Mk {
        chain: PathBuf,
        space: PathBuf,
        state_a: PathBuf,
        state_b: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_cuts: usize,
        /// Write the optimal element to PATH.
        #[arg(long, value_name = "PATH")]
        witness: Option<PathBuf>,
    },
    /// MK distances of random state pairs against diam(X) + 2β(0).
    Diam {
        chain: PathBuf,
        space: PathBuf,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_cuts: usize,
    },
    /// Level bounds β(n), plus finite-dimensional approximation bounds
    /// against a second space or an ε-net of X.
    Bound {
        chain: PathBuf,
        space: PathBuf,
        /// Second space Y.
        #[arg(long, value_name = "PATH", conflicts_with = "net")]
        compare: Option<PathBuf>,
        /// Radius of a greedy net of X.
        #[arg(long, value_name = "EPS")]
        net: Option<f64>,
    },
    /// UHF truncations of Baire sequences and the continuity table.
    Uhf {
        #[arg(long)]
        depth: usize,
        /// Comma-separated sequences such as 1,1,2.
        #[arg(required = true, num_args = 1..)]
        seqs: Vec<String>,
        /// Verify the truncated isometry on every pair.
        #[arg(long)]
        check: bool,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Base space for --check; a single point if omitted.
        #[arg(long, value_name = "PATH")]
        space: Option<PathBuf>,
    },
    /// Gromov–Hausdorff distance, exact or as a net bound.
    Gh {
        x: PathBuf,
        #[arg(required_unless_present = "net")]
        y: Option<PathBuf>,
        #[arg(long, value_name = "EPS", conflicts_with = "y")]
        net: Option<f64>,
    },
    /// Greedy ε-net of a space.
    Net {
        space: PathBuf,
        #[arg(long)]
        eps: f64,
    },
}

/// Failure of a subcommand; carries its exit code.
#[derive(Debug)]
struct Failure {
    code: &'static str,
    message: String,
    exit: i32,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let exit = match e {
            Error::Convergence { .. } => EXIT_CONVERGENCE,
            _ => EXIT_VALIDATION,
        };
        Failure {
            code: e.code(),
            message: e.to_string(),
            exit,
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: "io",
        message: format!("{}: {e}", path.display()),
        exit: EXIT_VALIDATION,
    }
}

type Outcome = Result<(), Failure>;

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

struct Ctx<'a> {
    out: &'a mut dyn Write,
    common: Common,
    seed: u64,
}

impl Ctx<'_> {
    fn say(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", line.as_ref());
    }

    fn emit(&mut self, table: Option<Table>, doc: Value) -> Outcome {
        if let (Some(path), Some(t)) = (&self.common.csv, table) {
            let mut w = csv::Writer::from_path(path).map_err(|e| Failure {
                code: "io",
                message: format!("{}: {e}", path.display()),
                exit: EXIT_VALIDATION,
            })?;
            let res = w
                .write_record(&t.header)
                .and_then(|_| t.rows.iter().try_for_each(|r| w.write_record(r)))
                .and_then(|_| w.flush().map_err(csv::Error::from));
            res.map_err(|e| Failure {
                code: "io",
                message: format!("{}: {e}", path.display()),
                exit: EXIT_VALIDATION,
            })?;
        }
        if let Some(path) = &self.common.out {
            let text = serde_json::to_string_pretty(&doc).expect("json values serialize") + "\n";
            std::fs::write(path, text).map_err(|e| io_failure(path, e))?;
        }
        Ok(())
    }
}

fn load_pair(
    chain: &Path,
    space: &Path,
) -> Result<(Arc<propinq::chain::AfChain>, Arc<FiniteMetricSpace>), Failure> {
    Ok((
        Arc::new(io::parse_chain(chain)?),
        Arc::new(io::parse_space(space)?),
    ))
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let text = e.render().to_string();
                    let _ = write!(err, "error[usage]: {}", text.trim_start_matches("error: "));
                    EXIT_USAGE
                }
            };
        }
    };
    let seed = match std::env::var(SEED_ENV) {
        Ok(s) => match s.trim().parse::<u64>() {
            Ok(v) => v,
            Err(_) => {
                let _ = writeln!(
                    err,
                    "error[usage]: {SEED_ENV}={s:?} is not an unsigned integer"
                );
                return EXIT_USAGE;
            }
        },
        Err(_) => cli.common.seed,
    };
    let mut ctx = Ctx {
        out,
        common: cli.common,
        seed,
    };
    match dispatch(&mut ctx, cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error[{}]: {}", f.code, f.message);
            f.exit
        }
    }
}

fn dispatch(ctx: &mut Ctx<'_>, cmd: Command) -> Outcome {
    match cmd {
        Command::Check { files } => check(ctx, &files),
        Command::Lip {
            chain,
            space,
            element,
        } => lip(ctx, &chain, &space, &element),
        Command::Mk {
            chain,
            space,
            state_a,
            state_b,
            tol,
            max_cuts,
            witness,
        } => mk(
            ctx,
            &chain,
            &space,
            [&state_a, &state_b],
            MkOptions { tol, max_cuts },
            witness.as_deref(),
        ),
        Command::Diam {
            chain,
            space,
            samples,
            tol,
            max_cuts,
        } => diam(ctx, &chain, &space, samples, MkOptions { tol, max_cuts }),
        Command::Bound {
            chain,
            space,
            compare,
            net,
        } => bound(ctx, &chain, &space, compare.as_deref(), net),
        Command::Uhf {
            depth,
            seqs,
            check,
            samples,
            space,
        } => uhf(
            ctx,
            depth,
            &seqs,
            check.then_some(samples),
            space.as_deref(),
        ),
        Command::Gh { x, y, net } => gh(ctx, &x, y.as_deref(), net),
        Command::Net { space, eps } => net(ctx, &space, eps),
    }
}

fn file_kind(path: &Path) -> Result<&'static str, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::from(Error::Parse(format!("{}: {e}", path.display()))))?;
    let has = |k: &str| v.get(k).is_some();
    Ok(if has("blocks") {
        "chain"
    } else if has("distances") {
        "space"
    } else if has("values") {
        "element"
    } else if has("densities") {
        "state"
    } else {
        return Err(Error::Parse(format!(
            "{}: not a chain, space, element or state document",
            path.display()
        ))
        .into());
    })
}

fn check(ctx: &mut Ctx<'_>, files: &[PathBuf]) -> Outcome {
    let mut chain = None;
    let mut space = None;
    let mut report = Vec::new();
    for path in files {
        let kind = file_kind(path)?;
        let context = || -> Result<_, Failure> {
            match (&chain, &space) {
                (Some(c), Some(s)) => Ok((Arc::clone(c), Arc::clone(s))),
                _ => Err(Error::Validation(format!(
                    "{}: {kind} files need a chain and a space earlier on the command line",
                    path.display()
                ))
                .into()),
            }
        };
        let summary = match kind {
            "chain" => {
                let c = io::parse_chain(path)?;
                let s = format!(
                    "chain, depth {}, top blocks {:?}",
                    c.depth(),
                    c.top().block_sizes()
                );
                chain = Some(Arc::new(c));
                s
            }
            "space" => {
                let x = io::parse_space(path)?;
                let s = format!("space, {} points, diameter {}", x.len(), x.diameter());
                space = Some(Arc::new(x));
                s
            }
            "element" => {
                let (c, s) = context()?;
                let g = io::parse_element(path, s, c)?;
                format!("element, self-adjoint {}", g.is_self_adjoint())
            }
            _ => {
                let (c, s) = context()?;
                io::parse_state(path, s, c)?;
                "state".to_string()
            }
        };
        ctx.say(format!("{}: {summary}", path.display()));
        report.push(json!({"path": path.display().to_string(), "kind": kind}));
    }
    ctx.say("OK");
    ctx.emit(None, json!({"ok": true, "files": report}))
}

fn lip(ctx: &mut Ctx<'_>, chain: &Path, space: &Path, element: &Path) -> Outcome {
    let (c, s) = load_pair(chain, space)?;
    let g = io::parse_element(element, s, c)?;
    let (slope, beta) = (slope_seminorm(&g)?, beta_seminorm(&g)?);
    let total = total_lip(&g)?;
    ctx.say(format!("slope {slope}"));
    ctx.say(format!("beta {beta}"));
    ctx.say(format!("total {total}"));
    let table = Table {
        header: vec!["slope", "beta", "total"],
        rows: vec![vec![slope.to_string(), beta.to_string(), total.to_string()]],
    };
    ctx.emit(
        Some(table),
        json!({"slope": slope, "beta": beta, "total": total}),
    )
}

fn mk(
    ctx: &mut Ctx<'_>,
    chain: &Path,
    space: &Path,
    states: [&PathBuf; 2],
    opts: MkOptions,
    witness: Option<&Path>,
) -> Outcome {
    let (c, s) = load_pair(chain, space)?;
    let a = io::parse_state(states[0], s.clone(), c.clone())?;
    let b = io::parse_state(states[1], s, c)?;
    let res = mk_distance(&a, &b, opts)?;
    ctx.say(format!("{}", res.value));
    if let Some(path) = witness {
        std::fs::write(path, io::element_to_string(&res.witness))
            .map_err(|e| io_failure(path, e))?;
    }
    let table = Table {
        header: vec!["value", "cuts_used", "tol"],
        rows: vec![vec![
            res.value.to_string(),
            res.cuts_used.to_string(),
            opts.tol.to_string(),
        ]],
    };
    let doc = json!({
        "value": res.value,
        "upper_bound": res.upper_bound,
        "cuts_used": res.cuts_used,
        "rounds": res.rounds,
        "tol": opts.tol,
    });
    ctx.emit(Some(table), doc)
}

fn diam(ctx: &mut Ctx<'_>, chain: &Path, space: &Path, samples: usize, opts: MkOptions) -> Outcome {
    let (c, s) = load_pair(chain, space)?;
    let probe = diameter_probe(s, c, samples, ctx.seed, opts)?;
    ctx.say("sample_idx  mk_value  bound");
    let mut rows = Vec::new();
    for (k, v) in probe.values.iter().enumerate() {
        ctx.say(format!("{k}  {v}  {}", probe.bound));
        rows.push(vec![k.to_string(), v.to_string(), probe.bound.to_string()]);
    }
    ctx.say(format!("max {} bound {}", probe.max_observed, probe.bound));
    let table = Table {
        header: vec!["sample_idx", "mk_value", "bound"],
        rows,
    };
    let doc = json!({
        "seed": ctx.seed,
        "values": probe.values,
        "max_observed": probe.max_observed,
        "bound": probe.bound,
    });
    ctx.emit(Some(table), doc)
}

fn bound(
    ctx: &mut Ctx<'_>,
    chain: &Path,
    space: &Path,
    compare: Option<&Path>,
    net: Option<f64>,
) -> Outcome {
    let (c, x) = load_pair(chain, space)?;
    ctx.say("n  beta_n  bound");
    let mut rows = Vec::new();
    let mut levels = Vec::new();
    for b in level_bound_table(&c) {
        ctx.say(format!("{}  {}  {}", b.level, b.beta, b.bound));
        rows.push(vec![b.level.to_string(), b.beta.to_string()]);
        levels.push(json!({"n": b.level, "beta_n": b.beta, "bound": b.bound, "height": b.height}));
    }
    let mut doc = json!({"levels": levels});
    if let Some(path) = compare {
        let y = io::parse_space(path)?;
        let fd = fd_approx_bounds(&x, Comparison::Space(&y), &c)?;
        ctx.say(format!("gh {}", fd.gh));
        ctx.say(format!("to_commutative {}", fd.to_commutative));
        ctx.say(format!("between_tensors {}", fd.between_tensors));
        doc["fd_approx"] = json!({
            "gh": fd.gh,
            "to_commutative": fd.to_commutative,
            "between_tensors": fd.between_tensors,
        });
    }
    if let Some(eps) = net {
        let pts = greedy_net(&x, eps)?;
        let fd = fd_approx_bounds(&x, Comparison::Net(&pts), &c)?;
        let nb = fd.net_bound.expect("net comparison");
        ctx.say(format!("net size {} hausdorff {}", pts.len(), fd.gh));
        ctx.say(format!("net_bound {nb}"));
        doc["fd_approx"] = json!({
            "net": pts,
            "hausdorff": fd.gh,
            "to_commutative": fd.to_commutative,
            "net_bound": nb,
        });
    }
    let table = Table {
        header: vec!["n", "beta_n"],
        rows,
    };
    ctx.emit(Some(table), doc)
}

fn parse_seq(s: &str) -> Result<BaireSeq, Failure> {
    s.parse::<BaireSeq>().map_err(|e| Failure {
        code: "usage",
        message: e.to_string(),
        exit: EXIT_USAGE,
    })
}

fn uhf(
    ctx: &mut Ctx<'_>,
    depth: usize,
    raw: &[String],
    check: Option<usize>,
    space: Option<&Path>,
) -> Outcome {
    let seqs = raw
        .iter()
        .map(|s| parse_seq(s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut truncations = Vec::new();
    for s in &seqs {
        let sizes = uhf_sizes(s, depth)?;
        let shown = match &sizes {
            Some(v) => format!("{v:?}"),
            None => "overflow".to_string(),
        };
        ctx.say(format!("{}: sizes {shown}", raw_seq(s)));
        truncations.push(json!({"seq": s.entries(), "sizes": sizes}));
    }
    let space = match space {
        Some(p) => Arc::new(io::parse_space(p)?),
        None => Arc::new(FiniteMetricSpace::single_point()),
    };
    ctx.say("seq_a  seq_b  prefix_agree  baire  bound");
    let mut rows = Vec::new();
    let mut pairs = Vec::new();
    for r in uhf_continuity_table(&seqs)? {
        let mut line = format!(
            "{}  {}  {}  {}  {}",
            raw_seq(&r.a),
            raw_seq(&r.b),
            r.prefix_agree,
            r.baire,
            r.bound
        );
        let mut entry = json!({
            "seq_a": r.a.entries(),
            "seq_b": r.b.entries(),
            "prefix_agree": r.prefix_agree,
            "baire": r.baire,
            "bound": r.bound,
        });
        if let Some(samples) = check {
            let n = r.prefix_agree.min(depth);
            let opts = UhfCheckOptions {
                samples,
                seed: ctx.seed,
                full_basis: false,
            };
            let d = uhf_isometry_check(&r.a, &r.b, &space, n, opts).map_err(|e| match e {
                Error::Capacity(m) => {
                    Error::Capacity(format!("{m}; element checks need sizes ≤ {UHF_MAX_DIM}"))
                }
                other => other,
            })?;
            line.push_str(&format!("  isometry_gap {d:e}"));
            entry["isometry_level"] = json!(n);
            entry["isometry_gap"] = json!(d);
        }
        ctx.say(line);
        rows.push(vec![
            r.prefix_agree.to_string(),
            r.baire.to_string(),
            r.bound.to_string(),
        ]);
        pairs.push(entry);
    }
    if let [only] = pairs.as_slice() {
        let (baire, bound) = (only["baire"].clone(), only["bound"].clone());
        ctx.say(format!("baire {baire}"));
        ctx.say(format!("bound {bound}"));
    }
    let table = Table {
        header: vec!["prefix_agree", "baire", "bound"],
        rows,
    };
    ctx.emit(
        Some(table),
        json!({"depth": depth, "truncations": truncations, "pairs": pairs}),
    )
}

fn raw_seq(s: &BaireSeq) -> String {
    s.entries()
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn gh(ctx: &mut Ctx<'_>, x: &Path, y: Option<&Path>, net: Option<f64>) -> Outcome {
    let x = io::parse_space(x)?;
    let doc = match (y, net) {
        (Some(y), _) => {
            let y = io::parse_space(y)?;
            let d = gh_bruteforce(&x, &y)?;
            ctx.say(format!("gh {d}"));
            json!({"gh": d})
        }
        (None, Some(eps)) => {
            let pts = greedy_net(&x, eps)?;
            let h = hausdorff_subset(&x, &pts)?;
            ctx.say(format!("gh_upper {h} (net of {} points)", pts.len()));
            json!({"gh_upper": h, "net": pts})
        }
        (None, None) => unreachable!("clap requires y or --net"),
    };
    ctx.emit(None, doc)
}

fn net(ctx: &mut Ctx<'_>, space: &Path, eps: f64) -> Outcome {
    let x = io::parse_space(space)?;
    let pts = greedy_net(&x, eps)?;
    let h = hausdorff_subset(&x, &pts)?;
    let mut rows = Vec::new();
    for &p in &pts {
        ctx.say(format!("{p} {}", x.labels()[p]));
        rows.push(vec![p.to_string(), x.labels()[p].clone()]);
    }
    ctx.say(format!("hausdorff {h}"));
    let table = Table {
        header: vec!["index", "label"],
        rows,
    };
    let labels: Vec<&str> = pts.iter().map(|&p| x.labels()[p].as_str()).collect();
    ctx.emit(
        Some(table),
        json!({"eps": eps, "net": pts, "labels": labels, "hausdorff": h}),
    )
}
