//! Isomorphism of presentation tables: witness verification, a complete
//! decision procedure for consistent tables with connected sheet graphs,
//! and a bounded search modulo pre-composition.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::biset::{is_permutation, BisetError, BisetTable};
use crate::mcg::{Automorphism, GenImages, McgError, TwistIndex};
use crate::word::{solve_conjugacy_system, ConjugacySolutionSet, Word, WordError};

#[derive(Debug, Error)]
pub enum IsoError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Mcg(#[from] McgError),
    #[error(transparent)]
    Biset(#[from] BisetError),
    #[error("tables have shapes ({0},{1}) and ({2},{3})")]
    ShapeMismatch(u32, u32, u32, u32),
    #[error("bad witness: {0}")]
    BadWitness(String),
    #[error("{0} table fails consistency")]
    InconsistentInput(&'static str),
    #[error("sheet-transition graph is disconnected; cannot propagate a witness")]
    Disconnected,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("internal error: {0}")]
    Internal(String),
}

/// A basis mapping between two tables of equal shape: basis element i of
/// the left table corresponds to `g_i * x_{sigma_i}` in the right table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsoWitness {
    pub sigma: Vec<u32>,
    pub g: Vec<Word>,
}

impl IsoWitness {
    pub fn identity(d: u32, n: u32) -> IsoWitness {
        IsoWitness {
            sigma: (1..=d).collect(),
            g: (0..d).map(|_| Word::empty(n)).collect(),
        }
    }

    pub fn total_length(&self) -> usize {
        self.g.iter().map(|w| w.len()).sum()
    }

    /// Text form: a header, the permutation on one line, then one word
    /// line per basis element.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "witness v1");
        let sigma: Vec<String> = self.sigma.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "sigma {}", sigma.join(" "));
        for g in &self.g {
            let _ = writeln!(out, "{g}");
        }
        out
    }

    pub fn parse(text: &str, n: u32) -> Result<IsoWitness, IsoError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, header) = lines
            .next()
            .ok_or(IsoError::Parse { line: 0, msg: "missing header".into() })?;
        if header != "witness v1" {
            return Err(IsoError::Parse { line, msg: "expected `witness v1`".into() });
        }
        let (line, sigma_line) = lines
            .next()
            .ok_or(IsoError::Parse { line: 0, msg: "missing sigma line".into() })?;
        let mut tokens = sigma_line.split_whitespace();
        if tokens.next() != Some("sigma") {
            return Err(IsoError::Parse { line, msg: "expected `sigma <perm>`".into() });
        }
        let sigma: Vec<u32> = tokens
            .map(|t| t.parse().map_err(|_| IsoError::Parse { line, msg: "bad sigma entry".into() }))
            .collect::<Result<_, _>>()?;
        let d = sigma.len() as u32;
        if d == 0 || !is_permutation(&sigma, d) {
            return Err(IsoError::Parse { line, msg: "sigma is not a permutation".into() });
        }
        let mut g = Vec::with_capacity(d as usize);
        for _ in 0..d {
            let (line, text) = lines
                .next()
                .ok_or(IsoError::Parse { line: 0, msg: "missing witness word".into() })?;
            g.push(
                Word::parse(text, n).map_err(|e| IsoError::Parse { line, msg: e.to_string() })?,
            );
        }
        if let Some((line, _)) = lines.next() {
            return Err(IsoError::Parse { line, msg: "trailing input".into() });
        }
        Ok(IsoWitness { sigma, g })
    }
}

fn check_shapes(a: &BisetTable, b: &BisetTable) -> Result<(), IsoError> {
    if a.d() != b.d() || a.n() != b.n() {
        return Err(IsoError::ShapeMismatch(a.d(), a.n(), b.d(), b.n()));
    }
    Ok(())
}

/// Checks that the witness intertwines the two right actions: pushing
/// every relation of `a` through the basis mapping must land on the
/// corresponding relation of `b`. Pure check, no search.
pub fn verify_iso(a: &BisetTable, b: &BisetTable, w: &IsoWitness) -> Result<bool, IsoError> {
    check_shapes(a, b)?;
    let d = a.d();
    let n = a.n();
    if w.sigma.len() != d as usize || !is_permutation(&w.sigma, d) {
        return Err(IsoError::BadWitness("sigma is not a permutation of the sheets".into()));
    }
    if w.g.len() != d as usize {
        return Err(IsoError::BadWitness("need one word per basis element".into()));
    }
    for g in &w.g {
        if g.rank() != n {
            return Err(IsoError::BadWitness("witness word has the wrong rank".into()));
        }
    }
    for i in 1..=d {
        for j in 1..=n + 1 {
            let ea = a.entry(i, j);
            let eb = b.entry(w.sigma[(i - 1) as usize], j);
            if eb.sheet != w.sigma[(ea.sheet - 1) as usize] {
                return Ok(false);
            }
            let lhs = w.g[(i - 1) as usize].mul(&eb.coeff)?;
            let rhs = ea.coeff.mul(&w.g[(ea.sheet - 1) as usize])?;
            if lhs != rhs {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// A spanning tree of the sheet-transition graph of `a`: edges (i, j, k)
/// meaning column j moves sheet i to the previously unvisited sheet k,
/// in BFS order from sheet 1.
fn spanning_tree(a: &BisetTable) -> Result<Vec<(u32, u32, u32)>, IsoError> {
    let d = a.d();
    let n = a.n();
    let mut visited = vec![false; d as usize];
    visited[0] = true;
    let mut frontier = vec![1u32];
    let mut edges = Vec::new();
    while let Some(i) = frontier.pop() {
        for j in 1..=n + 1 {
            let k = a.entry(i, j).sheet;
            if !visited[(k - 1) as usize] {
                visited[(k - 1) as usize] = true;
                edges.push((i, j, k));
                frontier.push(k);
            }
        }
    }
    if visited.iter().all(|&v| v) {
        Ok(edges)
    } else {
        Err(IsoError::Disconnected)
    }
}

/// One fully propagated candidate: the sheet permutation plus the
/// accumulated left (P) and right (Q) transport words along the tree.
struct Candidate {
    sigma: Vec<u32>,
    p: Vec<Word>,
    q: Vec<Word>,
}

fn propagate(
    a: &BisetTable,
    b: &BisetTable,
    tree: &[(u32, u32, u32)],
    m: u32,
) -> Result<Option<Candidate>, IsoError> {
    let d = a.d() as usize;
    let n = a.n();
    let mut sigma = vec![0u32; d];
    let mut p = vec![Word::empty(n); d];
    let mut q = vec![Word::empty(n); d];
    sigma[0] = m;
    for &(i, j, k) in tree {
        let ea = a.entry(i, j);
        let eb = b.entry(sigma[(i - 1) as usize], j);
        sigma[(k - 1) as usize] = eb.sheet;
        p[(k - 1) as usize] = p[(i - 1) as usize].mul(&ea.coeff)?;
        q[(k - 1) as usize] = q[(i - 1) as usize].mul(&eb.coeff)?;
    }
    if !is_permutation(&sigma, d as u32) {
        return Ok(None);
    }
    Ok(Some(Candidate { sigma, p, q }))
}

/// With basis-1 coefficient u, the witness words are g_i = p_i^-1 u q_i.
fn instantiate(cand: &Candidate, u: &Word) -> Result<IsoWitness, IsoError> {
    let g = cand
        .p
        .iter()
        .zip(&cand.q)
        .map(|(p, q)| p.inverse().mul(u)?.mul(q))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(IsoWitness { sigma: cand.sigma.clone(), g })
}

fn witness_key(w: &IsoWitness) -> (usize, Vec<u32>, Vec<Word>) {
    (w.total_length(), w.sigma.clone(), w.g.clone())
}

/// Complete decision procedure for consistent tables. For each candidate
/// image m of sheet 1, sheet images and transport words are forced along
/// a spanning tree; every table cell then yields a conjugacy equation
/// u^-1 A u = B in the one unknown u, solved exactly over the free group.
/// Among all valid witnesses the one with minimal total length (then
/// lexicographically least) is returned, so output is deterministic.
pub fn decide_iso(a: &BisetTable, b: &BisetTable) -> Result<Option<IsoWitness>, IsoError> {
    check_shapes(a, b)?;
    if !a.check_consistency().all_ok() {
        return Err(IsoError::InconsistentInput("left"));
    }
    if !b.check_consistency().all_ok() {
        return Err(IsoError::InconsistentInput("right"));
    }
    let d = a.d();
    let n = a.n();
    let tree = spanning_tree(a)?;

    let mut best: Option<((usize, Vec<u32>, Vec<Word>), IsoWitness)> = None;
    let offer = |best: &mut Option<((usize, Vec<u32>, Vec<Word>), IsoWitness)>,
                 w: IsoWitness| {
        let key = witness_key(&w);
        if best.as_ref().map_or(true, |(k, _)| key < *k) {
            *best = Some((key, w));
        }
    };

    'candidates: for m in 1..=d {
        let Some(cand) = propagate(a, b, &tree, m)? else {
            continue;
        };
        // every cell gives an equation; sheet mismatches kill the candidate
        let mut pairs = Vec::new();
        for i in 1..=d {
            for j in 1..=n + 1 {
                let ea = a.entry(i, j);
                let eb = b.entry(cand.sigma[(i - 1) as usize], j);
                let k = ea.sheet;
                if eb.sheet != cand.sigma[(k - 1) as usize] {
                    continue 'candidates;
                }
                let lhs = cand.p[(i - 1) as usize]
                    .mul(&ea.coeff)?
                    .mul(&cand.p[(k - 1) as usize].inverse())?;
                let rhs = cand.q[(i - 1) as usize]
                    .mul(&eb.coeff)?
                    .mul(&cand.q[(k - 1) as usize].inverse())?;
                if !lhs.is_empty() || !rhs.is_empty() {
                    pairs.push((lhs, rhs));
                }
            }
        }
        match solve_conjugacy_system(&pairs)? {
            ConjugacySolutionSet::Empty => {}
            ConjugacySolutionSet::All { .. } => {
                // any u works; the empty word is the canonical pick
                offer(&mut best, instantiate(&cand, &Word::empty(n))?);
            }
            ConjugacySolutionSet::Coset { base, root } => {
                if root.is_empty() {
                    offer(&mut best, instantiate(&cand, &base)?);
                } else {
                    // scan u = base * root^k outward; stop once a length
                    // lower bound rules out all larger |k|
                    let core = root.cyclic_reduce().0.len().max(1);
                    let mut local_best: Option<usize> = None;
                    let mut k: i64 = 0;
                    loop {
                        let abs_k = if k == 0 { 0 } else { k.unsigned_abs() as usize };
                        let lb: usize = cand
                            .p
                            .iter()
                            .zip(&cand.q)
                            .map(|(p, q)| {
                                (abs_k * core)
                                    .saturating_sub(base.len() + p.len() + q.len())
                            })
                            .sum();
                        if let Some(t) = local_best {
                            if lb > t {
                                break;
                            }
                        }
                        for kk in [k, -k] {
                            let u = base.mul(&root.pow(kk))?;
                            let w = instantiate(&cand, &u)?;
                            let t = w.total_length();
                            if local_best.map_or(true, |lt| t <= lt) {
                                local_best = Some(local_best.map_or(t, |lt| lt.min(t)));
                                offer(&mut best, w);
                            }
                            if k == 0 {
                                break;
                            }
                        }
                        k += 1;
                    }
                }
            }
        }
    }

    match best {
        Some((_, witness)) => {
            if !verify_iso(a, b, &witness)? {
                return Err(IsoError::Internal(
                    "solver produced a witness that fails verification".into(),
                ));
            }
            Ok(Some(witness))
        }
        None => Ok(None),
    }
}

/// Enumerates twist words psi in length-then-lexicographic order (index
/// pairs ascending, positive letter before negative, duplicates by action
/// skipped) and tries decide_iso(a, precompose(b, psi)). A hit is
/// verified and returned with the twist word; exhaustion up to `bound`
/// only means "not found within bound". Twist words always preserve the
/// peripheral structure, so no extra filtering is needed.
pub fn decide_iso_up_to_pretwist(
    a: &BisetTable,
    b: &BisetTable,
    bound: usize,
) -> Result<Option<(IsoWitness, Automorphism)>, IsoError> {
    check_shapes(a, b)?;
    let n = a.n();
    let mut alphabet = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n + 1 {
            alphabet.push((TwistIndex::new(i, j).unwrap(), 1));
            alphabet.push((TwistIndex::new(i, j).unwrap(), -1));
        }
    }
    let mut seen: HashSet<GenImages> = HashSet::new();
    for len in 0..=bound {
        let mut counters = vec![0usize; len];
        loop {
            let letters: Vec<(TwistIndex, i32)> =
                counters.iter().map(|&c| alphabet[c]).collect();
            let psi = Automorphism::from_letters(letters, n)?;
            if seen.insert(psi.images().clone()) {
                let pre = b.precompose(psi.images())?;
                if let Some(witness) = decide_iso(a, &pre)? {
                    if !verify_iso(a, &pre, &witness)? {
                        return Err(IsoError::Internal(
                            "pre-twist search produced a bad witness".into(),
                        ));
                    }
                    return Ok(Some((witness, psi)));
                }
            }
            // odometer over the alphabet, most significant digit first
            let mut pos = len;
            loop {
                if pos == 0 {
                    break;
                }
                counters[pos - 1] += 1;
                if counters[pos - 1] < alphabet.len() {
                    break;
                }
                counters[pos - 1] = 0;
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
        }
    }
    Ok(None)
}
