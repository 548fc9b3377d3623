//! Free words over the indexed alphabet `g(n)`, `n` in Z.
//!
//! Words are stored run-length encoded: a sequence of letters `(gen, exp)`
//! where adjacent letters never share a generator and no exponent is zero.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of a generator. For chain groups the value is the level `n` of `g_n`;
/// other presentations use it as an abstract generator index.
pub type GenRef = i32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub gen: GenRef,
    pub exp: i64,
}

/// A freely reduced, run-length merged word.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    letters: Vec<Letter>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("letter g({0}) lies outside the precedence domain")]
    OutsidePrecedence(GenRef),
    #[error("malformed word at `{0}`")]
    Parse(String),
    #[error("cone generator term a({0},{1}) needs a chain spec to expand")]
    UnexpandedCone(i64, i64),
}

impl Word {
    pub fn identity() -> Self {
        Word { letters: Vec::new() }
    }

    pub fn gen(gen: GenRef) -> Self {
        Word::power(gen, 1)
    }

    pub fn power(gen: GenRef, exp: i64) -> Self {
        Word::from_pairs([(gen, exp)])
    }

    /// Builds a word from arbitrary `(gen, exp)` pairs, reducing on the way.
    pub fn from_pairs<I: IntoIterator<Item = (GenRef, i64)>>(pairs: I) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for (gen, exp) in pairs {
            push_letter(&mut out, gen, exp);
        }
        Word { letters: out }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Number of syllables.
    pub fn syllables(&self) -> usize {
        self.letters.len()
    }

    /// Word length counted in signed letters `g^{±1}`.
    pub fn letter_length(&self) -> u64 {
        self.letters.iter().map(|l| l.exp.unsigned_abs()).sum()
    }

    /// Smallest `m` with every level inside `[-m, m]`.
    pub fn window(&self) -> u32 {
        self.letters.iter().map(|l| l.gen.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn min_gen(&self) -> Option<GenRef> {
        self.letters.iter().map(|l| l.gen).min()
    }

    pub fn max_gen(&self) -> Option<GenRef> {
        self.letters.iter().map(|l| l.gen).max()
    }

    pub fn mul(&self, other: &Word) -> Word {
        mul(self, other)
    }

    pub fn inverse(&self) -> Word {
        invert(self)
    }

    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::identity();
        for _ in 0..n.unsigned_abs() {
            out = mul(&out, &base);
        }
        out
    }

    /// `self^{-1} · w · self`
    pub fn conjugate(&self, w: &Word) -> Word {
        self.inverse().mul(w).mul(self)
    }

    /// Applies `f` to every generator name.
    pub fn map_gens(&self, f: impl Fn(GenRef) -> GenRef) -> Word {
        Word::from_pairs(self.letters.iter().map(|l| (f(l.gen), l.exp)))
    }

    /// Expanded signed letters, `(gen, +1 | -1)`.
    pub fn expanded(&self) -> Vec<(GenRef, i8)> {
        let mut out = Vec::with_capacity(self.letter_length() as usize);
        for l in &self.letters {
            let s = if l.exp > 0 { 1 } else { -1 };
            for _ in 0..l.exp.unsigned_abs() {
                out.push((l.gen, s));
            }
        }
        out
    }

    /// Parses the `g(n)^e` grammar; `a(i,m)` terms are rejected here.
    pub fn parse(s: &str) -> Result<Word, WordError> {
        let mut pairs = Vec::new();
        for term in parse_terms(s)? {
            match term {
                Term::Gen { level, exp } => pairs.push((level, exp)),
                Term::Cone { i, m, .. } => return Err(WordError::UnexpandedCone(i, m)),
            }
        }
        Ok(Word::from_pairs(pairs))
    }
}

fn push_letter(out: &mut Vec<Letter>, gen: GenRef, exp: i64) {
    if exp == 0 {
        return;
    }
    if let Some(top) = out.last_mut() {
        if top.gen == gen {
            top.exp += exp;
            if top.exp == 0 {
                out.pop();
            }
            return;
        }
    }
    out.push(Letter { gen, exp });
}

/// Run-length merge and drop zero exponents. Idempotent.
pub fn free_reduce(w: &Word) -> Word {
    Word::from_pairs(w.letters.iter().map(|l| (l.gen, l.exp)))
}

pub fn mul(a: &Word, b: &Word) -> Word {
    let mut out = a.letters.clone();
    for l in &b.letters {
        push_letter(&mut out, l.gen, l.exp);
    }
    Word { letters: out }
}

pub fn invert(w: &Word) -> Word {
    Word {
        letters: w
            .letters
            .iter()
            .rev()
            .map(|l| Letter {
                gen: l.gen,
                exp: -l.exp,
            })
            .collect(),
    }
}

/// Total order on signed letters used to orient rewrite rules.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Precedence {
    /// Level ascending; within a level the positive letter precedes its inverse.
    #[default]
    LevelAscending,
    /// Explicit list, smallest first.
    Explicit(Vec<(GenRef, i8)>),
}

impl Precedence {
    pub fn rank(&self, gen: GenRef, sign: i8) -> Option<i64> {
        match self {
            Precedence::LevelAscending => Some(2 * gen as i64 + if sign > 0 { 0 } else { 1 }),
            Precedence::Explicit(list) => list.iter().position(|&(g, s)| g == gen && s == sign).map(|p| p as i64),
        }
    }
}

/// Shortlex: shorter words first, ties broken letterwise by `precedence`.
pub fn shortlex_compare(a: &Word, b: &Word, precedence: &Precedence) -> Result<Ordering, WordError> {
    let ea = a.expanded();
    let eb = b.expanded();
    let rank = |(g, s): (GenRef, i8)| precedence.rank(g, s).ok_or(WordError::OutsidePrecedence(g));
    let ra = ea.iter().map(|&x| rank(x)).collect::<Result<Vec<_>, _>>()?;
    let rb = eb.iter().map(|&x| rank(x)).collect::<Result<Vec<_>, _>>()?;
    Ok(ra.len().cmp(&rb.len()).then_with(|| ra.cmp(&rb)))
}

/// One term of the word grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Gen { level: GenRef, exp: i64 },
    Cone { i: i64, m: i64, exp: i64 },
}

/// Tokenizes `term (space term)*` where
/// `term := "g(" int ")" ["^" nonzero-int] | "a(" int "," nat ")" ["^" nonzero-int]`.
/// The empty string and `1` denote the identity.
pub fn parse_terms(s: &str) -> Result<Vec<Term>, WordError> {
    let s = s.trim();
    if s.is_empty() || s == "1" {
        return Ok(Vec::new());
    }
    s.split_whitespace().map(parse_term).collect()
}

fn parse_term(t: &str) -> Result<Term, WordError> {
    let err = || WordError::Parse(t.to_string());
    let (head, exp) = match t.find(")^") {
        Some(p) => {
            let e: i64 = t[p + 2..].parse().map_err(|_| err())?;
            if e == 0 {
                return Err(err());
            }
            (&t[..=p], e)
        }
        None => (t, 1),
    };
    if !head.ends_with(')') {
        return Err(err());
    }
    if let Some(body) = head.strip_prefix("g(") {
        let level: GenRef = body[..body.len() - 1].parse().map_err(|_| err())?;
        Ok(Term::Gen { level, exp })
    } else if let Some(body) = head.strip_prefix("a(") {
        let inner = &body[..body.len() - 1];
        let (i, m) = inner.split_once(',').ok_or_else(err)?;
        let i: i64 = i.parse().map_err(|_| err())?;
        let m: i64 = m.parse().map_err(|_| err())?;
        if m < 0 {
            return Err(err());
        }
        Ok(Term::Cone { i, m, exp })
    } else {
        Err(err())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (idx, l) in self.letters.iter().enumerate() {
            if idx > 0 {
                f.write_str(" ")?;
            }
            if l.exp == 1 {
                write!(f, "g({})", l.gen)?;
            } else {
                write!(f, "g({})^{}", l.gen, l.exp)?;
            }
        }
        Ok(())
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Word::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
pub(crate) mod strategies {
    use super::*;
    use proptest::prelude::*;

    pub fn word(levels: std::ops::RangeInclusive<i32>, max_len: usize) -> impl Strategy<Value = Word> {
        prop::collection::vec((levels, prop_oneof![-3i64..=-1, 1i64..=3]), 0..max_len).prop_map(Word::from_pairs)
    }

    /// Words that may violate the run-length invariant before reduction.
    pub fn raw_pairs(max_len: usize) -> impl Strategy<Value = Vec<(GenRef, i64)>> {
        prop::collection::vec((-2i32..=2, -3i64..=3), 0..max_len)
    }
}
