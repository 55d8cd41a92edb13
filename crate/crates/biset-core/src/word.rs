//! Exact arithmetic in the free group on the peripheral generators,
//! plus the conjugacy machinery the table calculus is built on.
//!
//! Elements are freely reduced words over `g1..gN`. The loop at
//! infinity is not a free generator: any occurrence is rewritten via
//! `ginf = (gN*...*g1)^-1` on input, so equality of group elements is
//! plain equality of normal forms. Conjugation is right-handed
//! throughout: `g^h = h^-1*g*h`.

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(u32, u32),
    #[error("generator index {index} out of range for rank {rank}")]
    IndexOutOfRange { index: i64, rank: u32 },
    #[error("rank must be at least 2, got {0}")]
    RankTooSmall(u32),
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("the empty word has no primitive root")]
    EmptyRoot,
    #[error("empty equation system")]
    EmptySystem,
}

/// A freely reduced word in the rank-n free group. Letters are signed
/// generator indices; the sign marks inversion. The invariant is that
/// no two adjacent letters cancel and every index lies in `1..=rank`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    rank: u32,
    letters: Vec<i32>,
}

fn push_reduced(out: &mut Vec<i32>, letter: i32) {
    if out.last() == Some(&-letter) {
        out.pop();
    } else {
        out.push(letter);
    }
}

impl Word {
    pub fn empty(rank: u32) -> Word {
        Word { rank, letters: Vec::new() }
    }

    pub fn generator(k: u32, rank: u32) -> Result<Word, WordError> {
        if rank < 2 {
            return Err(WordError::RankTooSmall(rank));
        }
        if k == 0 || k > rank {
            return Err(WordError::IndexOutOfRange { index: k as i64, rank });
        }
        Ok(Word { rank, letters: vec![k as i32] })
    }

    /// Normal form of the loop around infinity: `g1^-1*g2^-1*...*gN^-1`.
    pub fn infinity(rank: u32) -> Word {
        Word {
            rank,
            letters: (1..=rank as i32).map(|k| -k).collect(),
        }
    }

    /// Free reduction of a raw letter sequence. Magnitude `rank + 1`
    /// denotes the loop at infinity and is expanded through the marked
    /// cycle relation before reducing.
    pub fn reduce(raw: &[i32], rank: u32) -> Result<Word, WordError> {
        if rank < 2 {
            return Err(WordError::RankTooSmall(rank));
        }
        let inf = rank as i32 + 1;
        let mut letters = Vec::with_capacity(raw.len());
        for &l in raw {
            if l == 0 || l.unsigned_abs() > rank + 1 {
                return Err(WordError::IndexOutOfRange { index: l as i64, rank });
            }
            if l == inf {
                for k in 1..=rank as i32 {
                    push_reduced(&mut letters, -k);
                }
            } else if l == -inf {
                for k in (1..=rank as i32).rev() {
                    push_reduced(&mut letters, k);
                }
            } else {
                push_reduced(&mut letters, l);
            }
        }
        Ok(Word { rank, letters })
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    fn check_rank(&self, other: &Word) -> Result<(), WordError> {
        if self.rank != other.rank {
            return Err(WordError::RankMismatch(self.rank, other.rank));
        }
        Ok(())
    }

    /// Concatenation without a rank check, for internal same-rank call
    /// sites.
    pub(crate) fn cat(&self, rhs: &Word) -> Word {
        debug_assert_eq!(self.rank, rhs.rank);
        let mut letters = self.letters.clone();
        for &l in &rhs.letters {
            push_reduced(&mut letters, l);
        }
        Word { rank: self.rank, letters }
    }

    pub fn mul(&self, rhs: &Word) -> Result<Word, WordError> {
        self.check_rank(rhs)?;
        Ok(self.cat(rhs))
    }

    pub fn inverse(&self) -> Word {
        Word {
            rank: self.rank,
            letters: self.letters.iter().rev().map(|l| -l).collect(),
        }
    }

    /// `self^h = h^-1*self*h`.
    pub fn conjugate(&self, h: &Word) -> Result<Word, WordError> {
        self.check_rank(h)?;
        Ok(h.inverse().cat(self).cat(h))
    }

    pub fn pow(&self, k: i64) -> Word {
        if k == 0 || self.is_empty() {
            return Word::empty(self.rank);
        }
        // peel the conjugating shell so the body concatenates without
        // cancellation
        let (core, conj) = self.cyclic_reduce();
        let m = k.unsigned_abs() as usize;
        let body = if k > 0 { core } else { core.inverse() };
        let mut letters = Vec::with_capacity(body.len() * m);
        for _ in 0..m {
            letters.extend_from_slice(&body.letters);
        }
        Word { rank: self.rank, letters }.conjugate(&conj).expect("same rank")
    }

    /// Splits off the maximal conjugating shell: returns (core, conj)
    /// with `self = core^conj` and core cyclically reduced.
    pub fn cyclic_reduce(&self) -> (Word, Word) {
        let l = &self.letters;
        let mut i = 0;
        let mut j = l.len();
        while j - i >= 2 && l[i] == -l[j - 1] {
            i += 1;
            j -= 1;
        }
        let core = Word { rank: self.rank, letters: l[i..j].to_vec() };
        // self = prefix * core * prefix^-1, so the conjugator is the
        // inverse of the peeled prefix
        let conj = Word {
            rank: self.rank,
            letters: l[..i].iter().rev().map(|x| -x).collect(),
        };
        (core, conj)
    }

    /// The unique primitive r with `self` a positive power of r.
    /// Centralizers in a free group are cyclic, generated by this root.
    pub fn primitive_root(&self) -> Result<Word, WordError> {
        if self.is_empty() {
            return Err(WordError::EmptyRoot);
        }
        let (core, conj) = self.cyclic_reduce();
        let n = core.len();
        for p in 1..=n {
            if n % p != 0 {
                continue;
            }
            if (p..n).all(|i| core.letters[i] == core.letters[i % p]) {
                let root = Word { rank: self.rank, letters: core.letters[..p].to_vec() };
                return root.conjugate(&conj);
            }
        }
        unreachable!("period n always matches");
    }

    /// Length of the cyclically reduced core; the growth rate of
    /// conjugation by powers of `self`.
    fn core_len(&self) -> usize {
        let l = &self.letters;
        let mut i = 0;
        let mut j = l.len();
        while j - i >= 2 && l[i] == -l[j - 1] {
            i += 1;
            j -= 1;
        }
        j - i
    }
}

impl fmt::Display for Word {
    /// Canonical text form: `1` for the empty word, otherwise `*`-joined
    /// generators with run-length exponents, e.g. `g1^2*g3^-1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        let mut i = 0;
        while i < self.letters.len() {
            let l = self.letters[i];
            let mut run = 1;
            while i + run < self.letters.len() && self.letters[i + run] == l {
                run += 1;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            let e = if l > 0 { run as i64 } else { -(run as i64) };
            if e == 1 {
                write!(f, "g{}", l.abs())?;
            } else {
                write!(f, "g{}^{}", l.abs(), e)?;
            }
            i += run;
        }
        Ok(())
    }
}

/// Decides conjugacy and, on success, returns the witness w with
/// `a^w = b`. The witness is deterministic: cyclic reduction on both
/// sides, then the first matching rotation.
pub fn are_conjugate(a: &Word, b: &Word) -> Result<Option<Word>, WordError> {
    a.check_rank(b)?;
    let (ca, wa) = a.cyclic_reduce();
    let (cb, wb) = b.cyclic_reduce();
    if ca.len() != cb.len() {
        return Ok(None);
    }
    if ca.is_empty() {
        return Ok(Some(Word::empty(a.rank)));
    }
    let n = ca.len();
    for r in 0..n {
        if (0..n).all(|i| ca.letters[(r + i) % n] == cb.letters[i]) {
            // rotating by r conjugates the core by its length-r prefix
            let u = Word { rank: a.rank, letters: ca.letters[..r].to_vec() };
            let witness = wa.inverse().cat(&u).cat(&wb);
            debug_assert_eq!(a.conjugate(&witness).unwrap(), *b);
            return Ok(Some(witness));
        }
    }
    Ok(None)
}

/// The solutions u of a system of conjugacy equations `a^u = b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConjugacySolutionSet {
    Empty,
    /// Every word solves the system (all constraints were trivial).
    All { rank: u32 },
    /// Exactly `{ base * root^k : k in Z }`; a trivial root means the
    /// solution is unique.
    Coset { base: Word, root: Word },
}

impl ConjugacySolutionSet {
    /// A representative: the coset element at parameter k, the empty
    /// word for `All`, nothing for `Empty`.
    pub fn sample(&self, k: i64) -> Option<Word> {
        match self {
            ConjugacySolutionSet::Empty => None,
            ConjugacySolutionSet::All { rank } => Some(Word::empty(*rank)),
            ConjugacySolutionSet::Coset { base, root } => Some(base.cat(&root.pow(k))),
        }
    }

    pub fn contains(&self, u: &Word) -> bool {
        match self {
            ConjugacySolutionSet::Empty => false,
            ConjugacySolutionSet::All { rank } => u.rank() == *rank,
            ConjugacySolutionSet::Coset { base, root } => {
                if root.is_empty() {
                    return u == base;
                }
                let bound = (u.len() + base.len()) / root.core_len().max(1) + 2;
                (0..=bound as i64).any(|k| {
                    base.cat(&root.pow(k)) == *u || base.cat(&root.pow(-k)) == *u
                })
            }
        }
    }
}

/// Solves `{ a_t^u = b_t }` for u. Every free-group centralizer is
/// cyclic, so each nontrivial equation contributes a coset of a cyclic
/// subgroup; the system is the intersection, which is again empty, a
/// single element, or one coset.
pub fn solve_conjugacy_system(
    pairs: &[(Word, Word)],
) -> Result<ConjugacySolutionSet, WordError> {
    let rank = match pairs.first() {
        Some((a, _)) => a.rank(),
        None => return Err(WordError::EmptySystem),
    };
    for (a, b) in pairs {
        a.check_rank(b)?;
        if a.rank() != rank {
            return Err(WordError::RankMismatch(rank, a.rank()));
        }
    }

    let mut state = ConjugacySolutionSet::All { rank };
    for (a, b) in pairs {
        if a.is_empty() || b.is_empty() {
            if a.is_empty() && b.is_empty() {
                continue;
            }
            return Ok(ConjugacySolutionSet::Empty);
        }
        state = match state {
            ConjugacySolutionSet::Empty => return Ok(ConjugacySolutionSet::Empty),
            ConjugacySolutionSet::All { .. } => {
                match are_conjugate(a, b)? {
                    None => return Ok(ConjugacySolutionSet::Empty),
                    Some(w) => {
                        // solutions are C(a)*w; fold the centralizer
                        // generator through w to get base*root^k form
                        let root = a.primitive_root()?.conjugate(&w)?;
                        ConjugacySolutionSet::Coset { base: w, root }
                    }
                }
            }
            ConjugacySolutionSet::Coset { base, root } => {
                intersect_with_pair(base, root, a, b)?
            }
        };
    }
    Ok(state)
}

/// Restricts the coset `{ base*root^k }` to the solutions of one more
/// equation `a^u = b`.
fn intersect_with_pair(
    base: Word,
    root: Word,
    a: &Word,
    b: &Word,
) -> Result<ConjugacySolutionSet, WordError> {
    // substituting u = base*root^k turns the equation into
    // root^-k * a' * root^k = b with a' = a^base
    let a1 = a.conjugate(&base)?;
    if root.is_empty() {
        return Ok(if a1 == *b {
            ConjugacySolutionSet::Coset { base, root }
        } else {
            ConjugacySolutionSet::Empty
        });
    }
    let ra = a1.primitive_root()?;
    if root == ra || root == ra.inverse() {
        // root centralizes a', so the equation holds for all k or none
        return Ok(if a1 == *b {
            ConjugacySolutionSet::Coset { base, root }
        } else {
            ConjugacySolutionSet::Empty
        });
    }
    // otherwise at most one k works: two solutions would make a power
    // of root centralize a'. Conjugating by root^k grows the word at
    // least 2*|k|*core - |a'| - 2*shell, which bounds the scan.
    let core = root.core_len();
    let shell = root.len() - core;
    let bound = ((a1.len() + b.len() + shell) / (2 * core.max(1)) + 1) as i64;
    for k in 0..=bound {
        for k in [k, -k] {
            if a1.conjugate(&root.pow(k))? == *b {
                let unique = base.cat(&root.pow(k));
                return Ok(ConjugacySolutionSet::Coset {
                    base: unique,
                    root: Word::empty(base.rank()),
                });
            }
        }
    }
    Ok(ConjugacySolutionSet::Empty)
}

struct Cursor<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn err(&self, msg: &str) -> WordError {
        WordError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn parse_int(&mut self) -> Result<i64, WordError> {
        self.skip_ws();
        let start = self.pos;
        if self.text.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        let digits_from = self.pos;
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits_from {
            return Err(self.err("expected an integer"));
        }
        std::str::from_utf8(&self.text[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.err("integer out of range"))
    }
}

impl Word {
    /// Parses the shared word grammar: generators `g1..gN` and `ginf`,
    /// `*` products, `^k` powers, `^(w)` conjugation, parentheses, `1`
    /// for the empty word.
    pub fn parse(text: &str, rank: u32) -> Result<Word, WordError> {
        if rank < 2 {
            return Err(WordError::RankTooSmall(rank));
        }
        let mut cur = Cursor { text: text.as_bytes(), pos: 0 };
        let w = parse_product(&mut cur, rank)?;
        if cur.peek().is_some() {
            return Err(cur.err("trailing input"));
        }
        Ok(w)
    }
}

fn parse_product(cur: &mut Cursor, rank: u32) -> Result<Word, WordError> {
    let mut acc = parse_term(cur, rank)?;
    while cur.peek() == Some(b'*') {
        cur.pos += 1;
        acc = acc.cat(&parse_term(cur, rank)?);
    }
    Ok(acc)
}

fn parse_term(cur: &mut Cursor, rank: u32) -> Result<Word, WordError> {
    let mut value = parse_atom(cur, rank)?;
    while cur.peek() == Some(b'^') {
        cur.pos += 1;
        match cur.peek() {
            Some(b'(') => {
                cur.pos += 1;
                let conj = parse_product(cur, rank)?;
                if cur.peek() != Some(b')') {
                    return Err(cur.err("expected )"));
                }
                cur.pos += 1;
                value = value.conjugate(&conj)?;
            }
            Some(c) if c == b'-' || c.is_ascii_digit() => {
                value = value.pow(cur.parse_int()?);
            }
            _ => return Err(cur.err("expected an exponent or a ( conjugator")),
        }
    }
    Ok(value)
}

fn parse_atom(cur: &mut Cursor, rank: u32) -> Result<Word, WordError> {
    match cur.peek() {
        Some(b'(') => {
            cur.pos += 1;
            let w = parse_product(cur, rank)?;
            if cur.peek() != Some(b')') {
                return Err(cur.err("expected )"));
            }
            cur.pos += 1;
            Ok(w)
        }
        Some(b'1') => {
            cur.pos += 1;
            Ok(Word::empty(rank))
        }
        Some(b'g') => {
            cur.pos += 1;
            if cur.text[cur.pos..].starts_with(b"inf") {
                cur.pos += 3;
                return Ok(Word::infinity(rank));
            }
            let start = cur.pos;
            while cur.pos < cur.text.len() && cur.text[cur.pos].is_ascii_digit() {
                cur.pos += 1;
            }
            if cur.pos == start {
                return Err(cur.err("expected a generator index or inf"));
            }
            let k: u32 = std::str::from_utf8(&cur.text[start..cur.pos])
                .unwrap()
                .parse()
                .map_err(|_| cur.err("generator index out of range"))?;
            Word::generator(k, rank)
        }
        _ => Err(cur.err("expected a generator, 1, or (")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_normal_form() {
        assert_eq!(Word::infinity(3).letters(), &[-1, -2, -3]);
        // the marked cycle relation holds: ginf*g3*g2*g1 = 1
        let rel = Word::reduce(&[4, 3, 2, 1], 3).unwrap();
        assert!(rel.is_empty());
    }

    #[test]
    fn core_len_matches_cyclic_reduce() {
        for text in ["g1", "g2^-1*g1*g2", "g1*g2*g1^-1", "1", "g1^4"] {
            let a = Word::parse(text, 3).unwrap();
            assert_eq!(a.core_len(), a.cyclic_reduce().0.len());
        }
    }
}
