//! Presentation tables for the bisets of degree-d branched self-coverings
//! with a marked n-cycle.
//!
//! A [`BisetTable`] stores, for every basis element x_i (a sheet, 1..=d)
//! and every generator column (gamma_1..gamma_n then the boundary word as
//! column n+1), the relation `x_i * gamma_j = coeff * x_sheet`. The base
//! table is the one attached to the model map z -> z^d; everything else in
//! the crate is produced from it by the operations here.

use std::fmt::Write as _;

use thiserror::Error;

use crate::mcg::{GenImages, McgError};
use crate::word::{Word, WordError};

#[derive(Debug, Error)]
pub enum BisetError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Mcg(#[from] McgError),
    #[error("degree must be at least 2, got {0}")]
    DegreeTooSmall(u32),
    #[error("sheet {sheet} out of range 1..={d}")]
    SheetOutOfRange { sheet: u32, d: u32 },
    #[error("letter {letter} out of range for rank {n}: magnitudes run 1..={}", n + 1)]
    LetterOutOfRange { letter: i32, n: u32 },
    #[error("expected {expected} entries, got {got}")]
    EntryCount { expected: usize, got: usize },
    #[error("column {column} is not a permutation of the sheets")]
    ColumnNotPermutation { column: u32 },
    #[error("tables have shapes ({0},{1}) and ({2},{3})")]
    ShapeMismatch(u32, u32, u32, u32),
    #[error("rank mismatch: table uses rank {0}, got {1}")]
    RankMismatch(u32, u32),
    #[error("basis data is not a permutation with one word per sheet")]
    BadBasisData,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// One cell of a table: `x_i * gamma_j = coeff * x_sheet`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Entry {
    pub coeff: Word,
    pub sheet: u32,
}

/// A d x (n+1) relation table; rows are basis elements, columns are the
/// generators gamma_1..gamma_n followed by the boundary word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BisetTable {
    d: u32,
    n: u32,
    // row-major: (i-1)*(n+1) + (j-1)
    entries: Vec<Entry>,
}

impl BisetTable {
    /// Builds a table from raw entries, checking shape, ranks and sheet
    /// ranges but not consistency (corrupt tables are representable so
    /// that [`BisetTable::check_consistency`] has something to report).
    pub fn new(d: u32, n: u32, entries: Vec<Entry>) -> Result<BisetTable, BisetError> {
        if d < 2 {
            return Err(BisetError::DegreeTooSmall(d));
        }
        if n < 2 {
            return Err(WordError::RankTooSmall(n).into());
        }
        let expected = (d as usize) * (n as usize + 1);
        if entries.len() != expected {
            return Err(BisetError::EntryCount { expected, got: entries.len() });
        }
        for e in &entries {
            if e.coeff.rank() != n {
                return Err(BisetError::RankMismatch(n, e.coeff.rank()));
            }
            if e.sheet < 1 || e.sheet > d {
                return Err(BisetError::SheetOutOfRange { sheet: e.sheet, d });
            }
        }
        Ok(BisetTable { d, n, entries })
    }

    /// The table of the degree-d model map with n marked points on the
    /// cycle: gamma_1 permutes the sheets in one d-cycle and carries the
    /// boundary coefficients, the middle generators act only on the first
    /// sheet, and the boundary column walks the cycle backwards.
    pub fn base(d: u32, n: u32) -> Result<BisetTable, BisetError> {
        if d < 2 {
            return Err(BisetError::DegreeTooSmall(d));
        }
        if n < 2 {
            return Err(WordError::RankTooSmall(n).into());
        }
        let ginf = Word::infinity(n);
        let mut entries = Vec::with_capacity((d as usize) * (n as usize + 1));
        for i in 1..=d {
            // column gamma_1
            if i == 1 {
                let coeff = ginf.mul(&Word::generator(n, n)?)?;
                entries.push(Entry { coeff, sheet: 2 });
            } else if i < d {
                entries.push(Entry { coeff: Word::empty(n), sheet: i + 1 });
            } else {
                entries.push(Entry { coeff: ginf.inverse(), sheet: 1 });
            }
            // columns gamma_2..gamma_n
            for j in 1..n {
                if i == 1 {
                    entries.push(Entry { coeff: Word::generator(j, n)?, sheet: 1 });
                } else {
                    entries.push(Entry { coeff: Word::empty(n), sheet: i });
                }
            }
            // boundary column
            if i == 1 {
                entries.push(Entry { coeff: ginf.clone(), sheet: d });
            } else {
                entries.push(Entry { coeff: Word::empty(n), sheet: i - 1 });
            }
        }
        Ok(BisetTable { d, n, entries })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Cell (i, j), 1-based; column n+1 is the boundary column.
    pub fn entry(&self, i: u32, j: u32) -> &Entry {
        &self.entries[((i - 1) * (self.n + 1) + (j - 1)) as usize]
    }

    /// The sheet targets of column j, listed for i = 1..=d.
    pub fn column_permutation(&self, j: u32) -> Vec<u32> {
        (1..=self.d).map(|i| self.entry(i, j).sheet).collect()
    }

    fn check_sheet(&self, sheet: u32) -> Result<(), BisetError> {
        if sheet < 1 || sheet > self.d {
            return Err(BisetError::SheetOutOfRange { sheet, d: self.d });
        }
        Ok(())
    }

    /// Folds a raw letter sequence through the table from the given sheet.
    /// Letters are signed column indices; magnitude n+1 names the boundary
    /// column. A negative letter walks its column backwards (inverse sheet
    /// permutation, inverted coefficient), so that acting by a letter and
    /// then its negation is the identity.
    pub fn right_action(&self, sheet: u32, raw: &[i32]) -> Result<(Word, u32), BisetError> {
        self.check_sheet(sheet)?;
        let mut coeff = Word::empty(self.n);
        let mut cur = sheet;
        for &x in raw {
            let mag = x.unsigned_abs();
            if mag == 0 || mag > self.n + 1 {
                return Err(BisetError::LetterOutOfRange { letter: x, n: self.n });
            }
            if x > 0 {
                let e = self.entry(cur, mag);
                coeff = coeff.mul(&e.coeff)?;
                cur = e.sheet;
            } else {
                let m = (1..=self.d)
                    .find(|&m| self.entry(m, mag).sheet == cur)
                    .ok_or(BisetError::ColumnNotPermutation { column: mag })?;
                coeff = coeff.mul(&self.entry(m, mag).coeff.inverse())?;
                cur = m;
            }
        }
        Ok((coeff, cur))
    }

    /// Right action of a reduced word (letters 1..=n only).
    pub fn act_word(&self, sheet: u32, w: &Word) -> Result<(Word, u32), BisetError> {
        if w.rank() != self.n {
            return Err(BisetError::RankMismatch(self.n, w.rank()));
        }
        self.right_action(sheet, w.letters())
    }

    /// Rewrites every coefficient through the substitution; sheets are
    /// untouched, so all column permutations survive verbatim.
    pub fn precompose(&self, images: &GenImages) -> Result<BisetTable, BisetError> {
        if images.rank() != self.n {
            return Err(BisetError::RankMismatch(self.n, images.rank()));
        }
        let entries = self
            .entries
            .iter()
            .map(|e| {
                Ok(Entry { coeff: images.apply(&e.coeff)?, sheet: e.sheet })
            })
            .collect::<Result<Vec<_>, BisetError>>()?;
        Ok(BisetTable { d: self.d, n: self.n, entries })
    }

    /// Rebuilds the table by folding the image of each generator through
    /// the old table: the new cell (i, j) records x_i acted on by the
    /// image of gamma_j (boundary word for the last column).
    pub fn postcompose(&self, images: &GenImages) -> Result<BisetTable, BisetError> {
        if images.rank() != self.n {
            return Err(BisetError::RankMismatch(self.n, images.rank()));
        }
        let mut targets = Vec::with_capacity(self.n as usize + 1);
        for j in 1..=self.n {
            targets.push(images.image(j).clone());
        }
        targets.push(images.apply(&Word::infinity(self.n))?);
        let mut entries = Vec::with_capacity(self.entries.len());
        for i in 1..=self.d {
            for target in &targets {
                let (coeff, sheet) = self.act_word(i, target)?;
                entries.push(Entry { coeff, sheet });
            }
        }
        Ok(BisetTable { d: self.d, n: self.n, entries })
    }

    /// Re-expresses the table in the basis y_i = g_i * x_{sigma(i)}.
    /// `sigma` is 1-based with d entries, `g` one word per new basis
    /// element.
    pub fn change_basis(&self, sigma: &[u32], g: &[Word]) -> Result<BisetTable, BisetError> {
        let d = self.d as usize;
        if sigma.len() != d || g.len() != d || !is_permutation(sigma, self.d) {
            return Err(BisetError::BadBasisData);
        }
        for w in g {
            if w.rank() != self.n {
                return Err(BisetError::RankMismatch(self.n, w.rank()));
            }
        }
        let mut sigma_inv = vec![0u32; d];
        for (i, &s) in sigma.iter().enumerate() {
            sigma_inv[(s - 1) as usize] = i as u32 + 1;
        }
        let mut entries = Vec::with_capacity(self.entries.len());
        for i in 1..=self.d {
            for j in 1..=self.n + 1 {
                let e = self.entry(sigma[(i - 1) as usize], j);
                let m = sigma_inv[(e.sheet - 1) as usize];
                let coeff = g[(i - 1) as usize]
                    .mul(&e.coeff)?
                    .mul(&g[(m - 1) as usize].inverse())?;
                entries.push(Entry { coeff, sheet: m });
            }
        }
        Ok(BisetTable { d: self.d, n: self.n, entries })
    }

    /// Verifies the two structural invariants: every column permutes the
    /// sheets, and the cyclic relator acts trivially on every basis
    /// element. The relator fold only uses positive letters, so it is
    /// meaningful even when some column fails the permutation check.
    pub fn check_consistency(&self) -> ConsistencyReport {
        let column_is_permutation = (1..=self.n + 1)
            .map(|j| {
                let mut seen = vec![false; self.d as usize];
                for i in 1..=self.d {
                    seen[(self.entry(i, j).sheet - 1) as usize] = true;
                }
                seen.iter().all(|&b| b)
            })
            .collect();
        let mut relator: Vec<i32> = vec![(self.n + 1) as i32];
        relator.extend((1..=self.n as i32).rev());
        let relator_trivial = (1..=self.d)
            .map(|i| {
                matches!(self.right_action(i, &relator), Ok((coeff, sheet))
                    if coeff.is_empty() && sheet == i)
            })
            .collect();
        ConsistencyReport { column_is_permutation, relator_trivial }
    }

    /// Canonical file form: `biset v1`, the dimensions, then one
    /// `<word> <sheet>` line per cell in row-major order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "biset v1");
        let _ = writeln!(out, "d {}", self.d);
        let _ = writeln!(out, "n {}", self.n);
        for e in &self.entries {
            let _ = writeln!(out, "{} {}", e.coeff, e.sheet);
        }
        out
    }

    /// Parses the canonical file form; blank lines and `#` comments are
    /// skipped anywhere.
    pub fn parse(text: &str) -> Result<BisetTable, BisetError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| BisetError::Parse { line: 0, msg: format!("missing {what}") })
        };
        let (line, header) = next("header")?;
        if header != "biset v1" {
            return Err(BisetError::Parse { line, msg: "expected `biset v1`".into() });
        }
        let d = parse_field(next("d field")?, "d")?;
        let n = parse_field(next("n field")?, "n")?;
        if d < 2 {
            return Err(BisetError::DegreeTooSmall(d));
        }
        if n < 2 {
            return Err(WordError::RankTooSmall(n).into());
        }
        let expected = (d as usize) * (n as usize + 1);
        let mut entries = Vec::with_capacity(expected);
        for _ in 0..expected {
            let (line, text) = next("entry line")?;
            let mut tokens = text.split_whitespace();
            let (word_text, sheet_text) = match (tokens.next(), tokens.next(), tokens.next()) {
                (Some(w), Some(s), None) => (w, s),
                _ => {
                    return Err(BisetError::Parse {
                        line,
                        msg: "expected `<word> <sheet>`".into(),
                    })
                }
            };
            let coeff = Word::parse(word_text, n)
                .map_err(|e| BisetError::Parse { line, msg: e.to_string() })?;
            let sheet: u32 = sheet_text
                .parse()
                .map_err(|_| BisetError::Parse { line, msg: "bad sheet index".into() })?;
            entries.push(Entry { coeff, sheet });
        }
        if let Some((line, _)) = lines.next() {
            return Err(BisetError::Parse { line, msg: "trailing input".into() });
        }
        BisetTable::new(d, n, entries)
    }

    /// Human-oriented listing, one relation per cell:
    /// `x_i * gj = coeff * x_k` (coefficient omitted when trivial).
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        for i in 1..=self.d {
            for j in 1..=self.n + 1 {
                let e = self.entry(i, j);
                let col = if j == self.n + 1 { "ginf".to_string() } else { format!("g{j}") };
                if e.coeff.is_empty() {
                    let _ = writeln!(out, "x_{i} * {col} = x_{}", e.sheet);
                } else {
                    let _ = writeln!(out, "x_{i} * {col} = {} * x_{}", e.coeff, e.sheet);
                }
            }
        }
        out
    }
}

fn parse_field(pair: (usize, &str), name: &str) -> Result<u32, BisetError> {
    let (line, text) = pair;
    let mut tokens = text.split_whitespace();
    match (tokens.next(), tokens.next(), tokens.next()) {
        (Some(label), Some(value), None) if label == name => value
            .parse()
            .map_err(|_| BisetError::Parse { line, msg: format!("bad {name} value") }),
        _ => Err(BisetError::Parse { line, msg: format!("expected `{name} <int>`") }),
    }
}

pub(crate) fn is_permutation(sigma: &[u32], d: u32) -> bool {
    if sigma.len() != d as usize {
        return false;
    }
    let mut seen = vec![false; d as usize];
    for &s in sigma {
        if s < 1 || s > d || seen[(s - 1) as usize] {
            return false;
        }
        seen[(s - 1) as usize] = true;
    }
    true
}

/// Outcome of [`BisetTable::check_consistency`]: one flag per column and
/// one per basis element.
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub column_is_permutation: Vec<bool>,
    pub relator_trivial: Vec<bool>,
}

impl ConsistencyReport {
    pub fn all_ok(&self) -> bool {
        self.column_is_permutation.iter().all(|&b| b) && self.relator_trivial.iter().all(|&b| b)
    }
}
