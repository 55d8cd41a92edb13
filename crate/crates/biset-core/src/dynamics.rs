//! The dynamical layer on top of the presentation tables: mechanical
//! verification of the four twist identities, the lifting decision for a
//! twist word through the base covering, the closure certificate for the
//! pair set generated by the identities, and a bounded exploration of the
//! orbit of the base table under postcomposition.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use crate::biset::{BisetError, BisetTable};
use crate::iso::{decide_iso, decide_iso_up_to_pretwist, IsoError, IsoWitness};
use crate::mcg::{is_peripheral_preserving, Automorphism, GenImages, McgError, TwistIndex};
use crate::word::{Word, WordError};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Mcg(#[from] McgError),
    #[error(transparent)]
    Biset(#[from] BisetError),
    #[error(transparent)]
    Iso(#[from] IsoError),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

/// Outcome of checking one identity instance: whether the two sides give
/// isomorphic tables, and the isomorphism found when they do.
#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub holds: bool,
    pub witness: Option<IsoWitness>,
}

fn check_middle_index(i: u32, n: u32) -> Result<(), DynamicsError> {
    if !(1..n).contains(&i) {
        return Err(DynamicsError::BadParameter(format!(
            "index i={i} must lie in 1..={}",
            n - 1
        )));
    }
    Ok(())
}

/// Builds the two twist words of identity `which`. The left word is
/// postcomposed with the base table, the right word precomposed; the
/// identity asserts the results are isomorphic.
///
/// Identity 1 ignores `i` and `j`, identities 2 and 3 use only `i`
/// (1..=n-1), identity 4 needs 1 <= i < j <= n-1.
pub fn identity_sides(
    which: u8,
    d: u32,
    n: u32,
    i: u32,
    j: u32,
) -> Result<(Automorphism, Automorphism), DynamicsError> {
    if d < 2 {
        return Err(DynamicsError::BadParameter(format!("degree {d} is too small")));
    }
    if n < 3 {
        return Err(DynamicsError::BadParameter(format!(
            "need at least 3 marked points, got {n}"
        )));
    }
    let tw = |a: u32, b: u32| -> Result<Automorphism, DynamicsError> {
        Ok(Automorphism::twist_generator(TwistIndex::new(a, b)?, n)?)
    };
    match which {
        1 => Ok((tw(1, n + 1)?, tw(n, n + 1)?)),
        2 => {
            check_middle_index(i, n)?;
            let lhs = tw(1, n + 1)?.conjugated(&tw(i + 1, n + 1)?)?;
            let rhs = tw(i, n + 1)?.compose(&tw(i, n)?)?.compose(&tw(n, n + 1)?)?;
            Ok((lhs, rhs))
        }
        3 => {
            check_middle_index(i, n)?;
            let lhs = tw(i + 1, n + 1)?.pow(d as i64);
            let rhs = tw(i, n + 1)?.conjugated(&tw(i, n)?)?;
            Ok((lhs, rhs))
        }
        4 => {
            if !(i >= 1 && i < j && j <= n - 1) {
                return Err(DynamicsError::BadParameter(format!(
                    "indices i={i}, j={j} must satisfy 1 <= i < j <= {}",
                    n - 1
                )));
            }
            Ok((tw(i + 1, j + 1)?, tw(i, j)?))
        }
        other => Err(DynamicsError::BadParameter(format!("no identity {other}"))),
    }
}

/// Every valid (i, j) parameter pair for identity `which` at rank `n`,
/// with 0 standing for an ignored slot.
pub fn valid_identity_params(which: u8, n: u32) -> Vec<(u32, u32)> {
    match which {
        1 => vec![(0, 0)],
        2 | 3 => (1..n).map(|i| (i, 0)).collect(),
        4 => {
            let mut out = Vec::new();
            for i in 1..n {
                for j in i + 1..n {
                    out.push((i, j));
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

/// Checks identity `which` at degree `d` with `n` marked points by
/// deciding isomorphism between the postcomposed left side and the
/// precomposed right side of the base table.
pub fn verify_identity(
    which: u8,
    d: u32,
    n: u32,
    i: u32,
    j: u32,
) -> Result<IdentityReport, DynamicsError> {
    let (lhs, rhs) = identity_sides(which, d, n, i, j)?;
    let base = BisetTable::base(d, n)?;
    let a = base.postcompose(lhs.images())?;
    let b = base.precompose(rhs.images())?;
    let witness = decide_iso(&a, &b)?;
    Ok(IdentityReport { holds: witness.is_some(), witness })
}

/// Result of the lifting decision for a twist word `h`: whether some
/// peripheral-preserving substitution `psi` makes postcomposition by `h`
/// isomorphic to precomposition by `psi`, together with the substitution
/// and the table isomorphism when one exists. A negative verdict is
/// complete: every cyclic sheet alignment was tried and `failures` lists
/// why each one died.
#[derive(Debug, Clone)]
pub struct LiftResult {
    pub liftable: bool,
    pub psi: Option<GenImages>,
    pub witness: Option<IsoWitness>,
    pub candidates_tried: u32,
    pub failures: Vec<String>,
}

/// Decides whether the twist word `h` lifts through the degree-`d` base
/// covering on `n` marked points.
///
/// Any isomorphism from the postcomposed table to a precomposed one must
/// align the first columns, whose permutation is the full d-cycle in both
/// tables, so the sheet permutation ranges over the d cyclic shifts. For
/// each shift the basis words are pinned by the empty cells of the last
/// column (the first one is normalized to 1, which only conjugates the
/// candidate substitution), the substitution is read off the
/// single-generator cells, and the candidate is verified cell by cell,
/// checked for peripheral structure, and passed through the full
/// isomorphism decision. Exhausting all d shifts is therefore a complete
/// certificate that no lift exists.
pub fn lift(h: &Automorphism, d: u32, n: u32) -> Result<LiftResult, DynamicsError> {
    if h.rank() != n {
        return Err(DynamicsError::BadParameter(format!(
            "twist word has rank {}, expected {n}",
            h.rank()
        )));
    }
    let base = BisetTable::base(d, n)?;
    let t = base.postcompose(h.images())?;
    let mut failures = Vec::new();
    for s in 0..d {
        let sigma: Vec<u32> = (1..=d).map(|i| ((i - 1 + s) % d) + 1).collect();
        match try_alignment(&base, &t, &sigma)? {
            Ok((psi, witness)) => {
                return Ok(LiftResult {
                    liftable: true,
                    psi: Some(psi),
                    witness: Some(witness),
                    candidates_tried: s + 1,
                    failures,
                });
            }
            Err(reason) => failures.push(format!("shift {s}: {reason}")),
        }
    }
    Ok(LiftResult {
        liftable: false,
        psi: None,
        witness: None,
        candidates_tried: d,
        failures,
    })
}

fn try_alignment(
    base: &BisetTable,
    t: &BisetTable,
    sigma: &[u32],
) -> Result<Result<(GenImages, IsoWitness), String>, DynamicsError> {
    let d = base.d();
    let n = base.n();
    let mut sigma_inv = vec![0u32; d as usize + 1];
    for (pos, &img) in sigma.iter().enumerate() {
        sigma_inv[img as usize] = pos as u32 + 1;
    }
    // the base has empty coefficients below the first row of its last
    // column, which forces every basis word once the first is set to 1
    let mut g = vec![Word::empty(n); d as usize];
    for i in 2..=d {
        let e = t.entry(sigma[i as usize - 1], n + 1);
        if sigma_inv[e.sheet as usize] != i - 1 {
            return Ok(Err(format!("sheet pattern broken in the last column at row {i}")));
        }
        g[i as usize - 1] = g[i as usize - 2].mul(&e.coeff.inverse())?;
    }
    let c = t.change_basis(sigma, &g)?;
    // the cells (1, j+1) of the base carry the bare generators, so the
    // aligned table shows their candidate images directly
    let mut images = Vec::with_capacity(n as usize);
    for j in 1..n {
        let e = c.entry(1, j + 1);
        if e.sheet != 1 {
            return Ok(Err(format!("sheet pattern broken in column {}", j + 1)));
        }
        images.push(e.coeff.clone());
    }
    // the last image hides in the corner cell, which carries the product
    // of all generators from the top down
    let corner = c.entry(d, 1);
    if corner.sheet != base.entry(d, 1).sheet {
        return Ok(Err("sheet pattern broken in the first column".into()));
    }
    let mut tail = Word::empty(n);
    for j in (1..n).rev() {
        tail = tail.mul(&images[j as usize - 1])?;
    }
    images.push(corner.coeff.mul(&tail.inverse())?);
    let psi = match GenImages::new(images) {
        Ok(psi) => psi,
        Err(e) => return Ok(Err(format!("candidate images are malformed: {e}"))),
    };
    for i in 1..=d {
        for j in 1..=n + 1 {
            let got = c.entry(i, j);
            let want = base.entry(i, j);
            if got.sheet != want.sheet || got.coeff != psi.apply(&want.coeff)? {
                return Ok(Err(format!("cell ({i},{j}) does not match any substitution")));
            }
        }
    }
    if !is_peripheral_preserving(&psi).all_preserved() {
        return Ok(Err("candidate images do not preserve the peripheral structure".into()));
    }
    let pre = base.precompose(&psi)?;
    match decide_iso(t, &pre)? {
        Some(witness) => Ok(Ok((psi, witness))),
        None => Ok(Err("candidate failed the final isomorphism gate".into())),
    }
}

/// Which deduction added a pair to the closure: R2 is the three-factor
/// identity (identity 2) at index `i`, R3 the index-shift identity
/// (identity 4) at `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureRule {
    R2 { i: u32 },
    R3 { i: u32, j: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosureStep {
    pub added: TwistIndex,
    pub rule: ClosureRule,
}

/// Toggles for the two deduction rules, mainly to let tests and callers
/// demonstrate that both are needed.
#[derive(Debug, Clone, Copy)]
pub struct ClosureRules {
    pub r2: bool,
    pub r3: bool,
}

impl Default for ClosureRules {
    fn default() -> ClosureRules {
        ClosureRules { r2: true, r3: true }
    }
}

/// The closure computation: starting from the twists against the extra
/// point, which pairs (i, j) are forced in by the identities, with every
/// step recorded so it can be replayed against a concrete degree.
#[derive(Debug, Clone)]
pub struct ClosureCertificate {
    pub n: u32,
    pub members: Vec<TwistIndex>,
    pub steps: Vec<ClosureStep>,
    pub complete: bool,
}

impl ClosureCertificate {
    /// Re-verifies every recorded step as an identity instance at degree
    /// `d`. Returns false as soon as one fails.
    pub fn replay(&self, d: u32) -> Result<bool, DynamicsError> {
        for step in &self.steps {
            let ok = match step.rule {
                ClosureRule::R2 { i } => verify_identity(2, d, self.n, i, 0)?.holds,
                ClosureRule::R3 { i, j } => verify_identity(4, d, self.n, i, j)?.holds,
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("closure v1\n");
        out.push_str(&format!("n {}\n", self.n));
        out.push_str(&format!("complete {}\n", self.complete));
        let members: Vec<String> = self.members.iter().map(|m| m.display(self.n)).collect();
        out.push_str(&format!("members {}\n", members.join(" ")));
        for step in &self.steps {
            match step.rule {
                ClosureRule::R2 { i } => {
                    out.push_str(&format!("step {} rule2 i {}\n", step.added.display(self.n), i));
                }
                ClosureRule::R3 { i, j } => {
                    out.push_str(&format!(
                        "step {} rule4 i {} j {}\n",
                        step.added.display(self.n),
                        i,
                        j
                    ));
                }
            }
        }
        out
    }
}

pub fn corollary_closure(n: u32) -> Result<ClosureCertificate, DynamicsError> {
    corollary_closure_with_rules(n, ClosureRules::default())
}

/// Computes the closure of the twist pairs against the extra point under
/// the two deductions: R2 brings in (i, n) for every middle index, and R3
/// shifts any member (i+1, j+1) with finite indices down to (i, j). The
/// result is complete when all pairs 1 <= i < j <= n+1 are reached.
pub fn corollary_closure_with_rules(
    n: u32,
    rules: ClosureRules,
) -> Result<ClosureCertificate, DynamicsError> {
    if n < 3 {
        return Err(DynamicsError::BadParameter(format!(
            "need at least 3 marked points, got {n}"
        )));
    }
    let mut members: BTreeSet<TwistIndex> = BTreeSet::new();
    for i in 1..=n {
        members.insert(TwistIndex::new(i, n + 1)?);
    }
    let mut steps = Vec::new();
    if rules.r2 {
        for i in 1..n {
            let added = TwistIndex::new(i, n)?;
            if members.insert(added) {
                steps.push(ClosureStep { added, rule: ClosureRule::R2 { i } });
            }
        }
    }
    if rules.r3 {
        loop {
            let snapshot: Vec<TwistIndex> = members.iter().copied().collect();
            let mut changed = false;
            for m in snapshot {
                let (a, b) = (m.i(), m.j());
                if a >= 2 && b <= n {
                    let added = TwistIndex::new(a - 1, b - 1)?;
                    if members.insert(added) {
                        steps.push(ClosureStep {
                            added,
                            rule: ClosureRule::R3 { i: a - 1, j: b - 1 },
                        });
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }
    let complete = members.len() as u32 == n * (n + 1) / 2;
    Ok(ClosureCertificate { n, members: members.into_iter().collect(), steps, complete })
}

/// One orbit class: the representative table and a twist word whose
/// postcomposition with the base table produces it.
#[derive(Debug, Clone)]
pub struct OrbitClass {
    pub path: Automorphism,
    pub table: BisetTable,
}

/// One merge: the candidate reached by `path` was identified with the
/// class `into_class` through the pre-twist substitution `psi`;
/// `psi_word` carries a twist word for it when the bounded word search
/// found one.
#[derive(Debug, Clone)]
pub struct MergeEntry {
    pub path: Automorphism,
    pub into_class: usize,
    pub psi_word: Option<Automorphism>,
    pub psi: GenImages,
}

#[derive(Debug, Clone)]
pub struct OrbitReport {
    pub d: u32,
    pub n: u32,
    pub depth: u32,
    pub bound: usize,
    pub classes: Vec<OrbitClass>,
    pub merges: Vec<MergeEntry>,
    /// class index pairs that share the abelianized column sums yet never
    /// merged within the bound; candidates for a deeper search
    pub equal_invariant_unmerged: Vec<(usize, usize)>,
    pub partial: bool,
}

impl OrbitReport {
    pub fn to_text(&self) -> String {
        let mut out = String::from("orbit v1\n");
        out.push_str(&format!("d {}\n", self.d));
        out.push_str(&format!("n {}\n", self.n));
        out.push_str(&format!("depth {}\n", self.depth));
        out.push_str(&format!("bound {}\n", self.bound));
        out.push_str(&format!("partial {}\n", self.partial));
        out.push_str(&format!("classes {}\n", self.classes.len()));
        for (k, class) in self.classes.iter().enumerate() {
            out.push_str(&format!("class {} path {}\n", k + 1, class.path));
        }
        out.push_str(&format!("merges {}\n", self.merges.len()));
        for (a, b) in &self.equal_invariant_unmerged {
            out.push_str(&format!("equal-invariant-unmerged {} {}\n", a + 1, b + 1));
        }
        out
    }
}

/// Per-column sums of the abelianized coefficients, an invariant of the
/// table under basis changes and under precomposition by twist words. It
/// is cheap but far from separating: distinct orbit classes can share it.
fn column_abelianization(t: &BisetTable) -> Vec<Vec<i64>> {
    let n = t.n() as usize;
    (1..=t.n() + 1)
        .map(|j| {
            let mut sums = vec![0i64; n];
            for i in 1..=t.d() {
                for &x in t.entry(i, j).coeff.letters() {
                    sums[x.unsigned_abs() as usize - 1] += x.signum() as i64;
                }
            }
            sums
        })
        .collect()
}

pub fn orbit_explore(
    d: u32,
    n: u32,
    depth: u32,
    bound: usize,
) -> Result<OrbitReport, DynamicsError> {
    orbit_explore_budgeted(d, n, depth, bound, 50_000)
}

/// Breadth-first exploration of the tables reachable from the base by
/// postcomposition with elementary twists and their inverses, quotiented
/// by isomorphism-up-to-pre-twist. Only class representatives are
/// expanded; identifying a candidate with a class also identifies all
/// its descendants, since postcomposition commutes with pre-twisting.
///
/// The merge test is exact: a candidate reached by the twist word `hc`
/// merges into the class reached by `hr` precisely when `hr^-1 hc`
/// lifts, because postcomposing both sides of the defining isomorphism
/// by `hr^-1` turns the merge question into a lifting question. The
/// lift also hands back a substitution realizing the merge. The reported
/// classes are therefore pairwise non-isomorphic under arbitrary
/// pre-twists, not only short ones; `bound` (capped at 2 here) only
/// controls the search for a short twist word to put in the merge log.
/// `max_nodes` caps the number of distinct tables visited; exceeding it
/// flags the report as partial.
pub fn orbit_explore_budgeted(
    d: u32,
    n: u32,
    depth: u32,
    bound: usize,
    max_nodes: usize,
) -> Result<OrbitReport, DynamicsError> {
    let base = BisetTable::base(d, n)?;
    let mut alphabet = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n + 1 {
            let idx = TwistIndex::new(i, j)?;
            alphabet.push((idx, 1));
            alphabet.push((idx, -1));
        }
    }
    let mut classes = vec![OrbitClass { path: Automorphism::identity(n), table: base.clone() }];
    let mut class_invariants = vec![column_abelianization(&base)];
    let mut seen: HashSet<BisetTable> = HashSet::new();
    seen.insert(base.clone());
    let mut frontier = vec![(0usize, Automorphism::identity(n), base)];
    let mut merges: Vec<MergeEntry> = Vec::new();
    let mut partial = false;
    let mut nodes = 1usize;
    'levels: for _ in 0..depth {
        let mut next = Vec::new();
        for (parent, path, table) in &frontier {
            for &(idx, sign) in &alphabet {
                let step = Automorphism::from_letters(vec![(idx, sign)], n)?;
                let neighbor = table.postcompose(step.images())?;
                if !seen.insert(neighbor.clone()) {
                    continue;
                }
                nodes += 1;
                if nodes > max_nodes {
                    partial = true;
                    break 'levels;
                }
                let npath = step.compose(path)?;
                let ninv = column_abelianization(&neighbor);
                // most steps stay in their class, so try the parent first
                let mut order = vec![*parent];
                order.extend((0..classes.len()).filter(|&c| c != *parent));
                let mut merged = false;
                for ci in order {
                    if class_invariants[ci] != ninv {
                        continue;
                    }
                    let x = classes[ci].path.inverse().compose(&npath)?;
                    let lifted = lift(&x, d, n)?;
                    let Some(psi) = lifted.psi else { continue };
                    // a short replayable twist word for the log if one
                    // exists, otherwise the lift's substitution, checked
                    // directly against the representative
                    let word_search =
                        decide_iso_up_to_pretwist(&neighbor, &classes[ci].table, bound.min(2))?;
                    let entry = match word_search {
                        Some((_, w)) => MergeEntry {
                            path: npath.clone(),
                            into_class: ci,
                            psi: w.images().clone(),
                            psi_word: Some(w),
                        },
                        None => {
                            let pre = classes[ci].table.precompose(&psi)?;
                            if decide_iso(&neighbor, &pre)?.is_none() {
                                return Err(DynamicsError::Internal(
                                    "lift-based merge failed validation".into(),
                                ));
                            }
                            MergeEntry {
                                path: npath.clone(),
                                into_class: ci,
                                psi_word: None,
                                psi,
                            }
                        }
                    };
                    merges.push(entry);
                    merged = true;
                    break;
                }
                if !merged {
                    classes.push(OrbitClass { path: npath.clone(), table: neighbor.clone() });
                    class_invariants.push(ninv);
                    next.push((classes.len() - 1, npath, neighbor));
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    let mut equal_invariant_unmerged = Vec::new();
    for a in 0..classes.len() {
        for b in a + 1..classes.len() {
            if class_invariants[a] == class_invariants[b] {
                equal_invariant_unmerged.push((a, b));
            }
        }
    }
    Ok(OrbitReport {
        d,
        n,
        depth,
        bound,
        classes,
        merges,
        equal_invariant_unmerged,
        partial,
    })
}
