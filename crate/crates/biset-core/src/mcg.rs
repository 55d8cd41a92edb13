//! The mapping-class action on the rank-n free group.
//!
//! The group is generated by elementary twists `t(i,j)` indexed by pairs
//! 1 <= i < j <= n+1, where index n+1 stands for the extra point written
//! `inf` in the text syntax. A twist word acts on group words letter by
//! letter, left factor first: the word `u*v` sends `w` to `v(u(w))`.
//!
//! An [`Automorphism`] carries both the formal twist word (kept for
//! printing and for cheap inversion) and the folded generator images that
//! define its action. Images are the source of truth for equality.

use std::fmt;

use thiserror::Error;

use crate::word::{are_conjugate, Word, WordError};

#[derive(Debug, Error)]
pub enum McgError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("twist index pair ({i},{j}) is invalid: need 1 <= i < j")]
    BadTwistIndex { i: u32, j: u32 },
    #[error("twist t({i},{j}) does not fit rank {rank}: j may be at most {}", rank + 1)]
    TwistOutOfRange { i: u32, j: u32, rank: u32 },
    #[error("mixed ranks {0} and {1}")]
    RankMismatch(u32, u32),
    #[error("expected {expected} generator images, got {got}")]
    ImageCount { expected: u32, got: usize },
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
}

/// An ordered index pair `1 <= i < j` naming an elementary twist. Whether
/// `j` means a marked point or the extra point depends on the rank it is
/// used with: `j == rank + 1` plays the `inf` role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TwistIndex {
    i: u32,
    j: u32,
}

impl TwistIndex {
    pub fn new(i: u32, j: u32) -> Result<TwistIndex, McgError> {
        if i == 0 || i >= j {
            return Err(McgError::BadTwistIndex { i, j });
        }
        Ok(TwistIndex { i, j })
    }

    pub fn i(&self) -> u32 {
        self.i
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    fn check_rank(&self, rank: u32) -> Result<(), McgError> {
        if self.j > rank + 1 {
            return Err(McgError::TwistOutOfRange { i: self.i, j: self.j, rank });
        }
        Ok(())
    }

    /// Renders as `t(i,j)`, using the `inf` alias when `j == rank + 1`.
    pub fn display(&self, rank: u32) -> String {
        if self.j == rank + 1 {
            format!("t({},inf)", self.i)
        } else {
            format!("t({},{})", self.i, self.j)
        }
    }
}

/// A substitution endomorphism given by one image word per generator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GenImages {
    rank: u32,
    images: Vec<Word>,
}

impl GenImages {
    pub fn identity(rank: u32) -> GenImages {
        let images = (1..=rank).map(|k| Word::generator(k, rank).unwrap()).collect();
        GenImages { rank, images }
    }

    /// Builds from explicit images; the rank is the number of images and
    /// every image must already have that rank.
    pub fn new(images: Vec<Word>) -> Result<GenImages, McgError> {
        let rank = images.len() as u32;
        for img in &images {
            if img.rank() != rank {
                return Err(McgError::RankMismatch(rank, img.rank()));
            }
        }
        Ok(GenImages { rank, images })
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    /// Image of generator `k` (1-based).
    pub fn image(&self, k: u32) -> &Word {
        &self.images[(k - 1) as usize]
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    /// Applies the substitution to a word.
    pub fn apply(&self, w: &Word) -> Result<Word, McgError> {
        if w.rank() != self.rank {
            return Err(McgError::RankMismatch(self.rank, w.rank()));
        }
        let mut acc = Word::empty(self.rank);
        for &letter in w.letters() {
            let img = self.image(letter.unsigned_abs());
            if letter > 0 {
                acc = acc.mul(img)?;
            } else {
                acc = acc.mul(&img.inverse())?;
            }
        }
        Ok(acc)
    }

    /// The substitution that applies `self` first and `next` second.
    pub fn then(&self, next: &GenImages) -> Result<GenImages, McgError> {
        if next.rank != self.rank {
            return Err(McgError::RankMismatch(self.rank, next.rank));
        }
        let images = self
            .images
            .iter()
            .map(|img| next.apply(img))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GenImages { rank: self.rank, images })
    }
}

/// Per-generator conjugacy data for a substitution: for each generator a
/// word conjugating it onto its image when one exists, plus the same for
/// the boundary word `ginf`.
#[derive(Debug, Clone)]
pub struct PeripheralReport {
    pub witnesses: Vec<Option<Word>>,
    pub infinity: Option<Word>,
}

impl PeripheralReport {
    pub fn all_preserved(&self) -> bool {
        self.infinity.is_some() && self.witnesses.iter().all(|w| w.is_some())
    }
}

/// Checks that every generator maps to a conjugate of itself and that the
/// boundary word maps to a conjugate of itself, returning the witnesses.
pub fn is_peripheral_preserving(images: &GenImages) -> PeripheralReport {
    let rank = images.rank();
    let witnesses = (1..=rank)
        .map(|k| {
            let gk = Word::generator(k, rank).unwrap();
            are_conjugate(&gk, images.image(k)).unwrap()
        })
        .collect();
    let ginf = Word::infinity(rank);
    let infinity = are_conjugate(&ginf, &images.apply(&ginf).unwrap()).unwrap();
    PeripheralReport { witnesses, infinity }
}

/// The word `g_{j-1} * ... * g_{i+1}` (descending, empty when j = i+1).
fn alpha_word(idx: TwistIndex, rank: u32) -> Word {
    let raw: Vec<i32> = (idx.i + 1..idx.j).rev().map(|k| k as i32).collect();
    Word::reduce(&raw, rank).unwrap()
}

/// Generator j for j <= rank, the boundary word for j = rank + 1.
fn point_word(j: u32, rank: u32) -> Word {
    if j == rank + 1 {
        Word::infinity(rank)
    } else {
        Word::generator(j, rank).unwrap()
    }
}

/// Images of the elementary twist `t(i,j)`: with a = alpha_word,
/// g_i goes to its conjugate by (g_j^a * g_i), g_j (when j <= rank) to its
/// conjugate by (a * g_i * a^-1), and everything else stays put.
fn twist_images(idx: TwistIndex, rank: u32) -> GenImages {
    let alpha = alpha_word(idx, rank);
    let gi = Word::generator(idx.i, rank).unwrap();
    let gj = point_word(idx.j, rank);
    let a = gj.conjugate(&alpha).unwrap();

    let mut images = GenImages::identity(rank);
    images.images[(idx.i - 1) as usize] = gi.conjugate(&a.mul(&gi).unwrap()).unwrap();
    if idx.j <= rank {
        let b = gi.conjugate(&alpha.inverse()).unwrap();
        images.images[(idx.j - 1) as usize] = gj.conjugate(&b).unwrap();
    }
    images
}

/// Images of the inverse twist, in closed form so that inverting a twist
/// word never needs a word-equation solver.
fn twist_inverse_images(idx: TwistIndex, rank: u32) -> GenImages {
    let alpha = alpha_word(idx, rank);
    let gi = Word::generator(idx.i, rank).unwrap();
    let gj = point_word(idx.j, rank);
    let a = gj.conjugate(&alpha).unwrap();

    let mut images = GenImages::identity(rank);
    let conj_i = gi.mul(&a.inverse()).unwrap();
    images.images[(idx.i - 1) as usize] = gi.conjugate(&conj_i).unwrap();
    if idx.j <= rank {
        let b = gi.conjugate(&alpha.inverse()).unwrap();
        let conj_j = b.inverse().mul(&gj.inverse()).unwrap();
        images.images[(idx.j - 1) as usize] = gj.conjugate(&conj_j).unwrap();
    }
    images
}

/// A word in the elementary twists together with its folded action.
#[derive(Debug, Clone)]
pub struct Automorphism {
    // one entry per letter, sign is +1 or -1
    letters: Vec<(TwistIndex, i32)>,
    images: GenImages,
}

impl Automorphism {
    pub fn identity(rank: u32) -> Automorphism {
        Automorphism { letters: Vec::new(), images: GenImages::identity(rank) }
    }

    pub fn twist_generator(idx: TwistIndex, rank: u32) -> Result<Automorphism, McgError> {
        idx.check_rank(rank)?;
        Ok(Automorphism { letters: vec![(idx, 1)], images: twist_images(idx, rank) })
    }

    /// Folds a sequence of signed twist letters into their joint action.
    pub fn from_letters(
        letters: Vec<(TwistIndex, i32)>,
        rank: u32,
    ) -> Result<Automorphism, McgError> {
        let mut images = GenImages::identity(rank);
        for &(idx, sign) in &letters {
            idx.check_rank(rank)?;
            let step = if sign > 0 {
                twist_images(idx, rank)
            } else {
                twist_inverse_images(idx, rank)
            };
            images = images.then(&step)?;
        }
        Ok(Automorphism { letters, images })
    }

    pub fn rank(&self) -> u32 {
        self.images.rank()
    }

    pub fn letters(&self) -> &[(TwistIndex, i32)] {
        &self.letters
    }

    pub fn images(&self) -> &GenImages {
        &self.images
    }

    pub fn image(&self, k: u32) -> &Word {
        self.images.image(k)
    }

    pub fn apply(&self, w: &Word) -> Result<Word, McgError> {
        self.images.apply(w)
    }

    /// `self` first, then `other`.
    pub fn compose(&self, other: &Automorphism) -> Result<Automorphism, McgError> {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Ok(Automorphism { letters, images: self.images.then(&other.images)? })
    }

    pub fn inverse(&self) -> Automorphism {
        let letters: Vec<_> =
            self.letters.iter().rev().map(|&(idx, sign)| (idx, -sign)).collect();
        Automorphism::from_letters(letters, self.rank()).unwrap()
    }

    pub fn pow(&self, k: i64) -> Automorphism {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut letters = Vec::new();
        for _ in 0..k.unsigned_abs() {
            letters.extend_from_slice(&base.letters);
        }
        Automorphism::from_letters(letters, self.rank()).unwrap()
    }

    /// `self` conjugated by `by`: apply `by` inverse, then `self`, then `by`.
    pub fn conjugated(&self, by: &Automorphism) -> Result<Automorphism, McgError> {
        by.inverse().compose(self)?.compose(by)
    }
}

impl fmt::Display for Automorphism {
    /// Canonical text form: letters with run-length exponents, e.g.
    /// `t(1,2)*t(2,inf)^-2`, or `1` for the empty word.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let rank = self.rank();
        let mut pos = 0;
        let mut first = true;
        while pos < self.letters.len() {
            let (idx, sign) = self.letters[pos];
            let mut run = 1;
            while pos + run < self.letters.len() && self.letters[pos + run] == (idx, sign) {
                run += 1;
            }
            pos += run;
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "{}", idx.display(rank))?;
            let exp = sign as i64 * run as i64;
            if exp != 1 {
                write!(f, "^{exp}")?;
            }
        }
        Ok(())
    }
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

    fn expect(&mut self, c: u8) -> Result<(), McgError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected {}", c as char)))
        }
    }

    fn err(&self, msg: &str) -> McgError {
        McgError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn parse_int(&mut self) -> Result<i64, McgError> {
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

type Letters = Vec<(TwistIndex, i32)>;

fn invert_letters(letters: &[(TwistIndex, i32)]) -> Letters {
    letters.iter().rev().map(|&(idx, sign)| (idx, -sign)).collect()
}

/// Parses the twist-word grammar: atoms `t(i,j)` with `j` an integer or
/// `inf`, `*` products, `^k` powers, `^(u)` conjugation (expanded to
/// `u^-1 * .. * u`), parentheses, and `1` for the identity.
pub fn parse_mcg_word(text: &str, rank: u32) -> Result<Automorphism, McgError> {
    let mut cur = Cursor { text: text.as_bytes(), pos: 0 };
    let letters = parse_product(&mut cur, rank)?;
    if cur.peek().is_some() {
        return Err(cur.err("trailing input"));
    }
    Automorphism::from_letters(letters, rank)
}

fn parse_product(cur: &mut Cursor, rank: u32) -> Result<Letters, McgError> {
    let mut acc = parse_term(cur, rank)?;
    while cur.peek() == Some(b'*') {
        cur.pos += 1;
        acc.extend(parse_term(cur, rank)?);
    }
    Ok(acc)
}

fn parse_term(cur: &mut Cursor, rank: u32) -> Result<Letters, McgError> {
    let mut value = parse_atom(cur, rank)?;
    while cur.peek() == Some(b'^') {
        cur.pos += 1;
        match cur.peek() {
            Some(b'(') => {
                cur.pos += 1;
                let conj = parse_product(cur, rank)?;
                cur.expect(b')')?;
                let mut expanded = invert_letters(&conj);
                expanded.extend(value);
                expanded.extend(conj);
                value = expanded;
            }
            Some(c) if c == b'-' || c.is_ascii_digit() => {
                let k = cur.parse_int()?;
                let base = if k < 0 { invert_letters(&value) } else { value };
                let mut repeated = Vec::new();
                for _ in 0..k.unsigned_abs() {
                    repeated.extend_from_slice(&base);
                }
                value = repeated;
            }
            _ => return Err(cur.err("expected an exponent or a ( conjugator")),
        }
    }
    Ok(value)
}

fn parse_atom(cur: &mut Cursor, rank: u32) -> Result<Letters, McgError> {
    match cur.peek() {
        Some(b'(') => {
            cur.pos += 1;
            let letters = parse_product(cur, rank)?;
            cur.expect(b')')?;
            Ok(letters)
        }
        Some(b'1') => {
            cur.pos += 1;
            Ok(Vec::new())
        }
        Some(b't') => {
            cur.pos += 1;
            cur.expect(b'(')?;
            let i = cur.parse_int()?;
            cur.expect(b',')?;
            cur.skip_ws();
            let j = if cur.text[cur.pos..].starts_with(b"inf") {
                cur.pos += 3;
                (rank + 1) as i64
            } else {
                cur.parse_int()?
            };
            cur.expect(b')')?;
            if i < 1 || j < 1 || i > u32::MAX as i64 || j > u32::MAX as i64 {
                return Err(cur.err("twist index out of range"));
            }
            let idx = TwistIndex::new(i as u32, j as u32)?;
            idx.check_rank(rank)?;
            Ok(vec![(idx, 1)])
        }
        _ => Err(cur.err("expected t(i,j), 1, or (")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_images_invert_for_every_index_pair() {
        for rank in 2..=5u32 {
            for i in 1..=rank {
                for j in i + 1..=rank + 1 {
                    let idx = TwistIndex::new(i, j).unwrap();
                    let forward = twist_images(idx, rank);
                    let back = twist_inverse_images(idx, rank);
                    assert_eq!(
                        forward.then(&back).unwrap(),
                        GenImages::identity(rank),
                        "t({i},{j}) at rank {rank}"
                    );
                    assert_eq!(back.then(&forward).unwrap(), GenImages::identity(rank));
                }
            }
        }
    }
}
