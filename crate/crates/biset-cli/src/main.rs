//! Command-line front end for the presentation-table calculus.
//!
//! Exit codes: 0 success, 1 negative mathematical result (not
//! isomorphic, not liftable, an identity instance failing), 2 usage or
//! input-file error, 3 internal inconsistency. A negative result is
//! never reported as inconsistency.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::exit;

use biset_core::biset::{BisetTable, Entry};
use biset_core::dynamics::{
    corollary_closure, lift, orbit_explore, valid_identity_params, verify_identity, ClosureRule,
    DynamicsError,
};
use biset_core::iso::{decide_iso, verify_iso, IsoWitness};
use biset_core::mcg::{parse_mcg_word, Automorphism, TwistIndex};
use biset_core::word::Word;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "biset", version, about = "Calculator for marked covering presentation tables")]
struct Cli {
    /// Output format for the payload
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a word (generators g1..gN, ginf, `*`, `^k`, `^(w)`)
    Reduce {
        word: String,
        /// Number of marked points; inferred from the word when omitted,
        /// required if the word mentions `inf`
        #[arg(long)]
        n: Option<u32>,
    },
    /// Print the generator images of one twist
    Twist {
        i: u32,
        /// Second index: a number, or `inf` for the boundary twist
        j: String,
        #[arg(long)]
        n: u32,
    },
    /// Apply a twist word to a group word
    Apply {
        mcg_word: String,
        word: String,
        /// Number of marked points; inferred when omitted, required if
        /// either argument mentions `inf`
        #[arg(long)]
        n: Option<u32>,
    },
    /// Print the standard degree-d table on n marked points
    Base {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        n: u32,
        /// Human-oriented aligned layout instead of the file format
        #[arg(long)]
        pretty: bool,
    },
    /// Act on a basis element of a table by a word
    Act { file: PathBuf, sheet: u32, word: String },
    /// Substitute a twist word into the coefficients of a table
    Pre {
        file: PathBuf,
        mcg_word: String,
        #[arg(long)]
        pretty: bool,
    },
    /// Rewrite a table over the twisted generating set
    Post {
        file: PathBuf,
        mcg_word: String,
        #[arg(long)]
        pretty: bool,
    },
    /// Decide whether two tables are isomorphic, or verify a witness
    Iso {
        file_a: PathBuf,
        file_b: PathBuf,
        /// Verify this witness file instead of searching for one
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Check the twist identities; `--all` sweeps the whole grid
    VerifyLemma {
        /// Identity number 1..=4
        #[arg(long)]
        which: Option<u8>,
        #[arg(long)]
        d: Option<u32>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        i: Option<u32>,
        #[arg(long)]
        j: Option<u32>,
        /// Sweep d in 2..=5, n in 3..=6, every identity and parameter;
        /// any of --which/--d/--n restricts the sweep
        #[arg(long)]
        all: bool,
    },
    /// Try to lift a twist word through the standard degree-d covering
    Lift {
        mcg_word: String,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        n: u32,
    },
    /// Deduce every twist pair from the boundary pairs, with a replayable
    /// certificate
    Closure {
        #[arg(long)]
        n: u32,
    },
    /// Explore twisted tables up to isomorphism and pre-twisting
    Orbit {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        depth: u32,
        #[arg(long)]
        bound: u32,
    },
}

enum Failure {
    Usage(String),
    Internal(String),
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn dynamics_failure(e: DynamicsError) -> Failure {
    match e {
        DynamicsError::Internal(msg) => Failure::Internal(msg),
        other => Failure::Usage(other.to_string()),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => exit(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            exit(2);
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal inconsistency: {msg}");
            exit(3);
        }
    }
}

fn run(cli: Cli) -> Result<i32, Failure> {
    let fmt = cli.format;
    match cli.command {
        Command::Reduce { word, n } => {
            let rank = resolve_rank(&[&word], n)?;
            let w = Word::parse(&word, rank).map_err(usage)?;
            emit(fmt, json!({ "word": w.to_string(), "n": rank }), w.to_string());
            Ok(0)
        }
        Command::Twist { i, j, n } => {
            let j = parse_twist_j(&j, n)?;
            let idx = TwistIndex::new(i, j).map_err(usage)?;
            let a = Automorphism::twist_generator(idx, n).map_err(usage)?;
            emit(fmt, twist_json(&a, n), images_text(&a, n));
            Ok(0)
        }
        Command::Apply { mcg_word, word, n } => {
            let rank = resolve_rank(&[&mcg_word, &word], n)?;
            let a = parse_mcg_word(&mcg_word, rank).map_err(usage)?;
            let w = Word::parse(&word, rank).map_err(usage)?;
            let out = a.apply(&w).map_err(usage)?;
            emit(fmt, json!({ "word": out.to_string(), "n": rank }), out.to_string());
            Ok(0)
        }
        Command::Base { d, n, pretty } => {
            let t = BisetTable::base(d, n).map_err(usage)?;
            guard_consistent(&t, "freshly built standard table")?;
            emit_table(fmt, &t, pretty);
            Ok(0)
        }
        Command::Act { file, sheet, word } => {
            let t = read_table(&file)?;
            let w = Word::parse(&word, t.n()).map_err(usage)?;
            let (coeff, target) = t.act_word(sheet, &w).map_err(usage)?;
            emit(
                fmt,
                json!({ "coeff": coeff.to_string(), "sheet": target }),
                format!("coeff {coeff}\nsheet {target}"),
            );
            Ok(0)
        }
        Command::Pre { file, mcg_word, pretty } => {
            let t = read_table(&file)?;
            let a = parse_mcg_word(&mcg_word, t.n()).map_err(usage)?;
            let out = t.precompose(a.images()).map_err(usage)?;
            guard_consistent(&out, "substituted table")?;
            emit_table(fmt, &out, pretty);
            Ok(0)
        }
        Command::Post { file, mcg_word, pretty } => {
            let t = read_table(&file)?;
            let a = parse_mcg_word(&mcg_word, t.n()).map_err(usage)?;
            let out = t.postcompose(a.images()).map_err(usage)?;
            guard_consistent(&out, "rewritten table")?;
            emit_table(fmt, &out, pretty);
            Ok(0)
        }
        Command::Iso { file_a, file_b, witness } => {
            let a = read_table(&file_a)?;
            let b = read_table(&file_b)?;
            match witness {
                Some(path) => {
                    let w = read_witness(&path, a.n())?;
                    if verify_iso(&a, &b, &w).map_err(usage)? {
                        emit(fmt, json!({ "isomorphic": true, "verified": true }), "witness verifies".into());
                        Ok(0)
                    } else {
                        emit(
                            fmt,
                            json!({ "isomorphic": Value::Null, "verified": false }),
                            "witness does not verify".into(),
                        );
                        Ok(1)
                    }
                }
                None => match decide_iso(&a, &b).map_err(usage)? {
                    Some(w) => {
                        if !verify_iso(&a, &b, &w).map_err(usage)? {
                            return Err(Failure::Internal(
                                "search produced a witness that fails verification".into(),
                            ));
                        }
                        emit(
                            fmt,
                            json!({ "isomorphic": true, "witness": witness_json(&w) }),
                            format!("# isomorphic\n{}", w.to_text().trim_end()),
                        );
                        Ok(0)
                    }
                    None => {
                        emit(
                            fmt,
                            json!({ "isomorphic": false }),
                            "not isomorphic: the column permutations admit no compatible relabeling".into(),
                        );
                        Ok(1)
                    }
                },
            }
        }
        Command::VerifyLemma { which, d, n, i, j, all } => run_verify_lemma(fmt, which, d, n, i, j, all),
        Command::Lift { mcg_word, d, n } => {
            let h = parse_mcg_word(&mcg_word, n).map_err(usage)?;
            let res = lift(&h, d, n).map_err(dynamics_failure)?;
            if res.liftable {
                let psi = res.psi.expect("liftable result carries images");
                let w = res.witness.expect("liftable result carries a witness");
                let mut text = String::from("liftable\n");
                for (k, img) in psi.images().iter().enumerate() {
                    let _ = writeln!(text, "psi g{} = {img}", k + 1);
                }
                let _ = write!(text, "# witness\n{}", w.to_text().trim_end());
                let payload = json!({
                    "liftable": true,
                    "psi": psi.images().iter().map(|w| w.to_string()).collect::<Vec<_>>(),
                    "witness": witness_json(&w),
                    "candidates_tried": res.candidates_tried,
                });
                emit(fmt, payload, text);
                Ok(0)
            } else {
                let mut text = format!(
                    "not liftable: all {} sheet alignments fail\n",
                    res.candidates_tried
                );
                for f in &res.failures {
                    let _ = writeln!(text, "{f}");
                }
                let payload = json!({
                    "liftable": false,
                    "candidates_tried": res.candidates_tried,
                    "failures": res.failures,
                });
                emit(fmt, payload, text.trim_end().to_string());
                Ok(1)
            }
        }
        Command::Closure { n } => {
            let cert = corollary_closure(n).map_err(dynamics_failure)?;
            let steps: Vec<Value> = cert
                .steps
                .iter()
                .map(|s| match s.rule {
                    ClosureRule::R2 { i } => {
                        json!({ "added": s.added.display(n), "rule": 2, "i": i })
                    }
                    ClosureRule::R3 { i, j } => {
                        json!({ "added": s.added.display(n), "rule": 4, "i": i, "j": j })
                    }
                })
                .collect();
            let payload = json!({
                "n": cert.n,
                "complete": cert.complete,
                "members": cert.members.iter().map(|m| m.display(n)).collect::<Vec<_>>(),
                "steps": steps,
            });
            emit(fmt, payload, cert.to_text().trim_end().to_string());
            Ok(if cert.complete { 0 } else { 1 })
        }
        Command::Orbit { d, n, depth, bound } => {
            let rep = orbit_explore(d, n, depth, bound as usize).map_err(dynamics_failure)?;
            let payload = json!({
                "d": rep.d,
                "n": rep.n,
                "depth": rep.depth,
                "bound": rep.bound,
                "partial": rep.partial,
                "classes": rep.classes.iter().map(|c| c.path.to_string()).collect::<Vec<_>>(),
                "merges": rep.merges.iter().map(|m| json!({
                    "path": m.path.to_string(),
                    "into_class": m.into_class,
                    "psi_word": m.psi_word.as_ref().map(|w| w.to_string()),
                    "psi": m.psi.images().iter().map(|w| w.to_string()).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
                "equal_invariant_unmerged": rep.equal_invariant_unmerged,
            });
            emit(fmt, payload, rep.to_text().trim_end().to_string());
            Ok(0)
        }
    }
}

fn run_verify_lemma(
    fmt: Format,
    which: Option<u8>,
    d: Option<u32>,
    n: Option<u32>,
    i: Option<u32>,
    j: Option<u32>,
    all: bool,
) -> Result<i32, Failure> {
    if all && (i.is_some() || j.is_some()) {
        return Err(Failure::Usage("--all sweeps all parameters; drop --i/--j".into()));
    }
    if !all && (which.is_none() || d.is_none() || n.is_none()) {
        return Err(Failure::Usage(
            "verify-lemma needs --which K --d D --n N (plus --i/--j as the identity requires), or --all".into(),
        ));
    }

    // the instance list, minimal instance first
    let whichs: Vec<u8> = which.map_or_else(|| (1..=4).collect(), |w| vec![w]);
    let ds: Vec<u32> = d.map_or_else(|| (2..=5).collect(), |v| vec![v]);
    let ns: Vec<u32> = n.map_or_else(|| (3..=6).collect(), |v| vec![v]);
    let mut instances = Vec::new();
    for &w in &whichs {
        for &dd in &ds {
            for &nn in &ns {
                let params = if all || (i.is_none() && j.is_none()) {
                    valid_identity_params(w, nn)
                } else {
                    vec![explicit_params(w, i, j)?]
                };
                for (pi, pj) in params {
                    instances.push((w, dd, nn, pi, pj));
                }
            }
        }
    }
    if instances.is_empty() {
        return Err(Failure::Usage("no valid parameters for that identity".into()));
    }

    let mut lines = Vec::new();
    let mut checked = 0u32;
    let single = instances.len() == 1;
    let mut single_witness = None;
    for (w, dd, nn, pi, pj) in instances {
        let rep = verify_identity(w, dd, nn, pi, pj).map_err(dynamics_failure)?;
        let label = instance_label(w, dd, nn, pi, pj);
        if !rep.holds {
            let text = format!("FAIL {label} (minimal failing instance)");
            let payload = json!({
                "checked": checked,
                "all_hold": false,
                "first_failure": { "which": w, "d": dd, "n": nn, "i": pi, "j": pj },
            });
            emit(fmt, payload, text);
            return Ok(1);
        }
        checked += 1;
        lines.push(format!("ok {label}"));
        if single {
            single_witness = rep.witness;
        }
    }

    if single {
        let w = single_witness.expect("holding instance carries a witness");
        let text = format!("{}\n# witness\n{}", lines[0], w.to_text().trim_end());
        let payload = json!({ "checked": 1, "all_hold": true, "witness": witness_json(&w) });
        emit(fmt, payload, text);
    } else {
        let mut text = lines.join("\n");
        let _ = write!(text, "\nchecked {checked} instances: all hold");
        let payload = json!({ "checked": checked, "all_hold": true });
        emit(fmt, payload, text);
    }
    Ok(0)
}

fn explicit_params(which: u8, i: Option<u32>, j: Option<u32>) -> Result<(u32, u32), Failure> {
    match which {
        1 => {
            if i.is_some() || j.is_some() {
                Err(Failure::Usage("identity 1 takes no --i/--j".into()))
            } else {
                Ok((0, 0))
            }
        }
        2 | 3 => match (i, j) {
            (Some(i), None) => Ok((i, 0)),
            _ => Err(Failure::Usage(format!("identity {which} takes --i only"))),
        },
        4 => match (i, j) {
            (Some(i), Some(j)) => Ok((i, j)),
            _ => Err(Failure::Usage("identity 4 takes both --i and --j".into())),
        },
        other => Err(Failure::Usage(format!("no identity {other}; --which takes 1..=4"))),
    }
}

fn instance_label(which: u8, d: u32, n: u32, i: u32, j: u32) -> String {
    match which {
        1 => format!("which=1 d={d} n={n}"),
        2 | 3 => format!("which={which} d={d} n={n} i={i}"),
        _ => format!("which={which} d={d} n={n} i={i} j={j}"),
    }
}

fn emit(fmt: Format, payload: Value, text: String) {
    match fmt {
        Format::Json => println!("{payload}"),
        Format::Text => println!("{text}"),
    }
}

fn emit_table(fmt: Format, t: &BisetTable, pretty: bool) {
    match fmt {
        Format::Json => println!("{}", table_json(t)),
        Format::Text if pretty => println!("{}", t.pretty().trim_end()),
        Format::Text => print!("{}", t.to_text()),
    }
}

fn guard_consistent(t: &BisetTable, what: &str) -> Result<(), Failure> {
    let rep = t.check_consistency();
    if rep.all_ok() {
        return Ok(());
    }
    Err(Failure::Internal(format!(
        "{what} is inconsistent (columns permutations: {:?}, relator trivial: {:?})",
        rep.column_is_permutation, rep.relator_trivial
    )))
}

fn images_text(a: &Automorphism, n: u32) -> String {
    let mut out = String::new();
    for k in 1..=n {
        let _ = writeln!(out, "g{k} -> {}", a.image(k));
    }
    out.trim_end().to_string()
}

fn twist_json(a: &Automorphism, n: u32) -> Value {
    json!({
        "n": n,
        "images": (1..=n).map(|k| a.image(k).to_string()).collect::<Vec<_>>(),
    })
}

fn parse_twist_j(text: &str, n: u32) -> Result<u32, Failure> {
    if text == "inf" {
        return Ok(n + 1);
    }
    text.parse()
        .map_err(|_| Failure::Usage(format!("second index must be a number or `inf`, got `{text}`")))
}

// Rank inference for the word-level commands: the largest index written
// as g<k> or inside t(i,j) wins, with 2 as the floor. Anything involving
// `inf` depends on the exact rank, so it demands an explicit --n.
fn resolve_rank(texts: &[&str], explicit: Option<u32>) -> Result<u32, Failure> {
    if let Some(n) = explicit {
        if n < 2 {
            return Err(Failure::Usage("--n must be at least 2".into()));
        }
        return Ok(n);
    }
    let mut max = 2u32;
    for text in texts {
        if text.contains("inf") {
            return Err(Failure::Usage(
                "arguments mentioning `inf` need an explicit --n".into(),
            ));
        }
        let bytes = text.as_bytes();
        let mut k = 1;
        while k < bytes.len() {
            if bytes[k].is_ascii_digit() && matches!(bytes[k - 1], b'g' | b'(' | b',') {
                let start = k;
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                if let Ok(v) = std::str::from_utf8(&bytes[start..k]).unwrap().parse::<u32>() {
                    max = max.max(v);
                }
            } else {
                k += 1;
            }
        }
    }
    Ok(max)
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn read_table(path: &Path) -> Result<BisetTable, Failure> {
    let text = read_file(path)?;
    let t = if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("{}: bad JSON: {e}", path.display())))?;
        table_from_json(&v).map_err(|msg| Failure::Usage(format!("{}: {msg}", path.display())))?
    } else {
        BisetTable::parse(&text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
    };
    let rep = t.check_consistency();
    if !rep.all_ok() {
        return Err(Failure::Usage(format!(
            "{}: table is not a valid presentation (columns permutations: {:?}, relator trivial: {:?})",
            path.display(),
            rep.column_is_permutation,
            rep.relator_trivial
        )));
    }
    Ok(t)
}

fn read_witness(path: &Path, n: u32) -> Result<IsoWitness, Failure> {
    let text = read_file(path)?;
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("{}: bad JSON: {e}", path.display())))?;
        witness_from_json(&v, n)
            .map_err(|msg| Failure::Usage(format!("{}: {msg}", path.display())))
    } else {
        IsoWitness::parse(&text, n)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
    }
}

fn table_json(t: &BisetTable) -> Value {
    let mut entries = Vec::new();
    for i in 1..=t.d() {
        for j in 1..=t.n() + 1 {
            let e = t.entry(i, j);
            entries.push(json!({ "coeff": e.coeff.to_string(), "sheet": e.sheet }));
        }
    }
    json!({ "d": t.d(), "n": t.n(), "entries": entries })
}

fn table_from_json(v: &Value) -> Result<BisetTable, String> {
    let d = v["d"].as_u64().ok_or("missing numeric `d`")? as u32;
    let n = v["n"].as_u64().ok_or("missing numeric `n`")? as u32;
    let raw = v["entries"].as_array().ok_or("missing `entries` array")?;
    let mut entries = Vec::with_capacity(raw.len());
    for (k, cell) in raw.iter().enumerate() {
        let coeff_text = cell["coeff"].as_str().ok_or_else(|| format!("entry {k}: missing `coeff`"))?;
        let coeff = Word::parse(coeff_text, n).map_err(|e| format!("entry {k}: {e}"))?;
        let sheet = cell["sheet"].as_u64().ok_or_else(|| format!("entry {k}: missing `sheet`"))? as u32;
        entries.push(Entry { coeff, sheet });
    }
    BisetTable::new(d, n, entries).map_err(|e| e.to_string())
}

fn witness_json(w: &IsoWitness) -> Value {
    json!({
        "sigma": w.sigma,
        "g": w.g.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
    })
}

fn witness_from_json(v: &Value, n: u32) -> Result<IsoWitness, String> {
    // accept both the bare witness object and the `iso` payload that wraps it
    let v = if v.get("witness").is_some() { &v["witness"] } else { v };
    let sigma: Vec<u32> = v["sigma"]
        .as_array()
        .ok_or("missing `sigma` array")?
        .iter()
        .map(|x| x.as_u64().map(|u| u as u32).ok_or("bad sigma entry"))
        .collect::<Result<_, _>>()?;
    let raw = v["g"].as_array().ok_or("missing `g` array")?;
    let mut g = Vec::with_capacity(raw.len());
    for (k, item) in raw.iter().enumerate() {
        let text = item.as_str().ok_or_else(|| format!("g[{k}] is not a string"))?;
        g.push(Word::parse(text, n).map_err(|e| format!("g[{k}]: {e}"))?);
    }
    if sigma.len() != g.len() {
        return Err("sigma and g have different lengths".into());
    }
    Ok(IsoWitness { sigma, g })
}
