//! Command-line front end. Every subcommand writes a JSON report and exits
//! with 0 when all checks pass, 1 when an identity fails and 2 on usage
//! errors.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::checks;
use crate::error::{Error, Result};
use crate::fdg::{fdg_decompose, verify_fdg};
use crate::grouplab::{
    budget_from_env, cosets, enumerate_elementary, enumerate_orthogonal, is_subgroup, k1_stability_check,
    normality_verdict,
};
use crate::matrix::Matrix;
use crate::normalizer::{reduce_to_smaller, run_factor_trials, CLASS_NAMES};
use crate::quadspace::QuadSetup;
use crate::relations::{run_trials, RelationId};
use crate::ring::{Rationals, Ring, RingSpec, ZMod};
use crate::transvect::{eval_word_matrix, word_from_json};

pub const SCHEMA: &str = "dser-report/1";

#[derive(Parser, Debug)]
#[command(name = "dser", version, about = "Exact checks in elementary orthogonal groups")]
pub struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct SetupArgs {
    /// `rationals` or `zmod:N` with N odd.
    #[arg(long)]
    pub ring: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Gram matrix of Q, rows separated by `;`, entries by `,`.
    #[arg(long)]
    pub phi: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Random trials of the commutator relations.
    VerifyRelations {
        #[command(flatten)]
        setup: SetupArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// One relation name such as `i` or `p-iii`; all when omitted.
        #[arg(long)]
        relation: Option<String>,
    },
    /// Random trials of a conjugation factorization.
    FactorConjugate {
        #[command(flatten)]
        setup: SetupArgs,
        #[arg(long)]
        class: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Reduces a word to a matrix fixing the last hyperbolic pair.
    Reduce {
        #[arg(long)]
        word: PathBuf,
        #[command(flatten)]
        setup: SetupArgs,
    },
    /// Reduced FDG-decomposition of a word.
    Decompose {
        #[arg(long)]
        word: PathBuf,
        #[command(flatten)]
        setup: SetupArgs,
    },
    /// Enumerates O and EO over a small modular ring.
    Enumerate {
        #[command(flatten)]
        setup: SetupArgs,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// KO₁ at two consecutive levels.
    K1 {
        #[command(flatten)]
        setup: SetupArgs,
        /// Two consecutive ranks, e.g. `1,2`.
        #[arg(long, default_value = "1,2")]
        levels: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// The full acceptance suite.
    CheckAll {
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

/// A usage problem (exit 2) or a library error.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidRing(_) | Error::Parse(_) => Failure::Usage(e.to_string()),
            other => Failure::Lib(other),
        }
    }
}

type CmdResult = std::result::Result<(bool, Value), Failure>;

/// Ring, sizes and form, with word files allowed to supply defaults.
struct Resolved {
    ring: RingSpec,
    n: usize,
    m: usize,
    phi: Option<String>,
}

fn resolve(args: &SetupArgs, file: Option<&Value>, defaults: (usize, usize)) -> std::result::Result<Resolved, Failure> {
    let from_file = |k: &str| file.and_then(|v| v.get(k));
    let ring_text = args
        .ring
        .clone()
        .or_else(|| from_file("ring").and_then(|v| v.as_str()).map(String::from))
        .unwrap_or_else(|| "zmod:3".into());
    let ring: RingSpec = ring_text.parse()?;
    let size = |flag: Option<usize>, key: &str, d: usize| {
        flag.or_else(|| from_file(key).and_then(|v| v.as_u64()).map(|x| x as usize)).unwrap_or(d)
    };
    let n = size(args.n, "n", defaults.0);
    let m = size(args.m, "m", defaults.1);
    if n == 0 {
        return Err(Failure::Usage("n must be positive".into()));
    }
    let phi = args.phi.clone().or_else(|| from_file("phi").and_then(|v| v.as_str()).map(String::from));
    Ok(Resolved { ring, n, m, phi })
}

fn parse_phi<R: Ring>(ring: &R, n: usize, text: Option<&str>) -> std::result::Result<Matrix<R::Elem>, Failure> {
    let Some(text) = text else {
        return Ok(Matrix::identity(ring, n));
    };
    let rows = text
        .split(';')
        .map(|row| row.split(',').map(|e| ring.parse_elem(e.trim())).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let phi = Matrix::from_rows(rows).map_err(|e| Failure::Usage(e.to_string()))?;
    if phi.rows() != n || phi.cols() != n {
        return Err(Failure::Usage(format!("phi must be {n}x{n}")));
    }
    Ok(phi)
}

fn setup_for<R: Ring>(ring: R, res: &Resolved) -> std::result::Result<QuadSetup<R>, Failure> {
    let phi = parse_phi(&ring, res.n, res.phi.as_deref())?;
    QuadSetup::new(ring, res.m, phi).map_err(|e| Failure::Usage(e.to_string()))
}

fn config(res: &Resolved) -> Value {
    json!({"ring": res.ring.to_string(), "n": res.n, "m": res.m, "phi": res.phi})
}

fn verify_relations<R: Ring>(setup: &QuadSetup<R>, seed: u64, trials: usize, only: Option<RelationId>) -> CmdResult {
    let mut out = serde_json::Map::new();
    let mut ok = true;
    for (k, id) in RelationId::ALL.into_iter().enumerate() {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        if setup.m() < id.min_rank() {
            if only.is_some() {
                return Err(Failure::Usage(format!("relation {} needs m >= {}", id.name(), id.min_rank())));
            }
            out.insert(id.name().into(), json!({"skipped": format!("needs m >= {}", id.min_rank())}));
            continue;
        }
        let rep = run_trials(setup, id, trials, seed.wrapping_add(k as u64))?;
        ok &= rep.passed();
        out.insert(id.name().into(), rep.to_json());
    }
    Ok((ok, Value::Object(out)))
}

fn factor_conjugate<R: Ring>(setup: &QuadSetup<R>, class: Option<&str>, seed: u64, trials: usize) -> CmdResult {
    if setup.m() < 2 {
        return Err(Failure::Usage("conjugation classes need m >= 2".into()));
    }
    let names: Vec<&str> = match class {
        Some(c) if CLASS_NAMES.contains(&c) => vec![c],
        Some(c) => return Err(Failure::Usage(format!("unknown class {c:?}; expected one of {CLASS_NAMES:?}"))),
        None => CLASS_NAMES.to_vec(),
    };
    let mut out = serde_json::Map::new();
    let mut ok = true;
    for (k, name) in names.iter().enumerate() {
        let rep = run_factor_trials(setup, name, trials, seed.wrapping_add(k as u64))?;
        ok &= rep.failures == 0;
        out.insert(name.to_string(), json!({"trials": rep.trials, "failures": rep.failures}));
    }
    Ok((ok, Value::Object(out)))
}

fn reduce<R: Ring>(setup: &QuadSetup<R>, word: &Value) -> CmdResult {
    let w = word_from_json(setup, word).map_err(|e| Failure::Usage(e.to_string()))?;
    let tr = reduce_to_smaller(setup, &w)?;
    let r = setup.ring();
    let ev = |x| eval_word_matrix(setup, x);
    let prod = ev(&tr.rho4)?.mul(r, &ev(&tr.rho3)?).mul(r, &ev(&w)?).mul(r, &ev(&tr.rho1)?).mul(r, &ev(&tr.rho2)?);
    let ok = prod == tr.residual && setup.has_stabilized_pattern(&tr.residual) && setup.is_orthogonal(&tr.residual)?;
    Ok((ok, json!({"trace": tr.to_json(r), "product_matches": prod == tr.residual})))
}

fn decompose<R: Ring>(setup: &QuadSetup<R>, word: &Value) -> CmdResult {
    let w = word_from_json(setup, word).map_err(|e| Failure::Usage(e.to_string()))?;
    let t = fdg_decompose(setup, &w)?;
    let c = verify_fdg(setup, &w, &t)?;
    let r = setup.ring();
    let m = setup.m();
    let eta = eval_word_matrix(setup, &t.eta.word)?;
    let entry = eta.get(setup.x_index(m - 1), setup.x_index(m));
    Ok((
        c.passed(),
        json!({
            "triple": t.to_json(r),
            "certificates": {
                "product": c.product,
                "tags": c.tags,
                "reduced": c.reduced,
                "g_shape": c.g_shape,
                "reduced_entry": r.format(entry),
            },
            "matrices": {
                "theta": eval_word_matrix(setup, &w)?.to_strings(r),
                "eta": eta.to_strings(r),
                "xi": eval_word_matrix(setup, &t.xi.word)?.to_strings(r),
                "mu": eval_word_matrix(setup, &t.mu.word)?.to_strings(r),
            },
        }),
    ))
}

fn modular(res: &Resolved) -> std::result::Result<ZMod, Failure> {
    match res.ring {
        RingSpec::Modular(p) => Ok(ZMod::new(p)?),
        RingSpec::Rationals => Err(Failure::Usage("enumeration needs a finite ring".into())),
    }
}

fn enumerate(res: &Resolved, budget: usize) -> CmdResult {
    let setup = setup_for(modular(res)?, res)?;
    let o = enumerate_orthogonal(&setup, budget)?;
    let eo = enumerate_elementary(&setup, budget)?;
    let sub = is_subgroup(&o, &eo);
    let normal = sub && normality_verdict(&o, &eo);
    let index = if sub { Some(cosets(&o, &eo)?.index()) } else { None };
    Ok((
        sub,
        json!({
            "orthogonal": o.to_json(),
            "elementary": eo.to_json(),
            "subgroup": sub,
            "normal": normal,
            "index": index,
        }),
    ))
}

fn k1(res: &Resolved, levels: &str, seed: u64, budget: usize) -> CmdResult {
    let ls: Vec<usize> = levels
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| Failure::Usage(format!("bad level {s:?}"))))
        .collect::<std::result::Result<_, _>>()?;
    let [lo, hi] = ls[..] else {
        return Err(Failure::Usage("levels must be two ranks, e.g. 1,2".into()));
    };
    if hi != lo + 1 {
        return Err(Failure::Usage("levels must be consecutive".into()));
    }
    let low = setup_for(modular(res)?, &Resolved { m: lo, phi: res.phi.clone(), ..*res })?;
    let high = low.with_rank(hi);
    let (o1, e1) = (enumerate_orthogonal(&low, budget)?, enumerate_elementary(&low, budget)?);
    let (o2, e2) = (enumerate_orthogonal(&high, budget)?, enumerate_elementary(&high, budget)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rep = k1_stability_check((&o1, &e1), (&o2, &e2), 1000, &mut rng)?;
    let ok = rep.surjective && rep.stabilized_contained && (!rep.normal.1 || rep.representative_independent);
    Ok((ok, rep.to_json()))
}

fn read_word(path: &PathBuf) -> std::result::Result<Value, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Runs a ring-generic command over the resolved ring.
macro_rules! over_ring {
    ($res:expr, |$setup:ident| $body:expr) => {
        match $res.ring {
            RingSpec::Rationals => {
                let $setup = setup_for(Rationals, &$res)?;
                $body
            }
            RingSpec::Modular(p) => {
                let $setup = setup_for(ZMod::new(p)?, &$res)?;
                $body
            }
        }
    };
}

fn execute(cmd: &Command) -> std::result::Result<(String, Value, bool, Value), Failure> {
    let (name, cfg, (ok, result)) = match cmd {
        Command::VerifyRelations { setup, seed, trials, relation } => {
            let res = resolve(setup, None, (1, 3))?;
            let only = match relation {
                Some(s) => Some(RelationId::parse(s).ok_or_else(|| Failure::Usage(format!("unknown relation {s:?}")))?),
                None => None,
            };
            let mut cfg = config(&res);
            cfg["seed"] = json!(seed);
            cfg["trials"] = json!(trials);
            ("verify-relations", cfg, over_ring!(res, |s| verify_relations(&s, *seed, *trials, only))?)
        }
        Command::FactorConjugate { setup, class, seed, trials } => {
            let res = resolve(setup, None, (1, 3))?;
            let mut cfg = config(&res);
            cfg["seed"] = json!(seed);
            cfg["trials"] = json!(trials);
            ("factor-conjugate", cfg, over_ring!(res, |s| factor_conjugate(&s, class.as_deref(), *seed, *trials))?)
        }
        Command::Reduce { word, setup } => {
            let file = read_word(word)?;
            let res = resolve(setup, Some(&file), (1, 2))?;
            ("reduce", config(&res), over_ring!(res, |s| reduce(&s, &file))?)
        }
        Command::Decompose { word, setup } => {
            let file = read_word(word)?;
            let res = resolve(setup, Some(&file), (1, 3))?;
            ("decompose", config(&res), over_ring!(res, |s| decompose(&s, &file))?)
        }
        Command::Enumerate { setup, budget } => {
            let res = resolve(setup, None, (1, 1))?;
            let budget = budget.unwrap_or_else(budget_from_env);
            let mut cfg = config(&res);
            cfg["budget"] = json!(budget);
            ("enumerate", cfg, enumerate(&res, budget)?)
        }
        Command::K1 { setup, levels, seed, budget } => {
            let res = resolve(setup, None, (1, 1))?;
            let budget = budget.unwrap_or_else(budget_from_env);
            let mut cfg = config(&res);
            cfg["levels"] = json!(levels);
            cfg["seed"] = json!(seed);
            ("k1", cfg, k1(&res, levels, *seed, budget)?)
        }
        Command::CheckAll { seed } => {
            let results = checks::run_all(*seed);
            for r in &results {
                eprintln!("{}", r.line());
            }
            let ok = results.iter().all(|r| r.passed);
            // Timings vary between runs, so they stay out of the report.
            let body: Vec<Value> = results
                .iter()
                .map(|r| json!({"id": r.id, "name": r.name, "passed": r.passed, "detail": r.detail}))
                .collect();
            ("check-all", json!({"seed": seed}), (ok, json!(body)))
        }
    };
    Ok((name.to_string(), cfg, ok, result))
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (code, report) = match execute(&cli.command) {
        Ok((name, cfg, ok, result)) => (
            if ok { 0 } else { 1 },
            json!({"schema": SCHEMA, "command": name, "config": cfg, "passed": ok, "result": result}),
        ),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return 2;
        }
        Err(Failure::Lib(e)) => (1, json!({"schema": SCHEMA, "passed": false, "error": e.to_string()})),
    };
    let text = serde_json::to_string_pretty(&report).expect("serializable report");
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text + "\n") {
                eprintln!("error: {}: {e}", path.display());
                return 2;
            }
        }
        None => {
            use std::io::Write;
            let _ = writeln!(std::io::stdout(), "{text}");
        }
    }
    code
}
