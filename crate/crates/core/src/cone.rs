//! The positive cones `P_(m) = ⟨a_{i,m}⟩⁺` and their union `P̃`.
//!
//! Two decision paths are provided. The structural procedure splits
//! `G_[lo..hi] = ⟨g_lo⟩ ∗ G_[lo+1..hi]` along the edge relation and recurses
//! into the right factor; it always terminates with a certificate. The
//! enumerative procedure walks the cone breadth first and is complete but
//! slow; it serves as an independent cross-check.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::chaingroup::{ChainGroup, Element};
use crate::presentations::{cone_generator, ChainSpec, ConeGenId};
use crate::rewriting::{TreeNormalizer, WordProblem};
use crate::words::{shortlex_compare, GenRef, Precedence, Word};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignValue {
    Positive,
    Negative,
    Zero,
    Unknown,
}

impl SignValue {
    pub fn negate(self) -> Self {
        match self {
            SignValue::Positive => SignValue::Negative,
            SignValue::Negative => SignValue::Positive,
            v => v,
        }
    }
}

/// A named generator of some positive cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CertGen {
    /// `a(i,m)` of a chain cone.
    Cone(ConeGenId),
    /// A group generator `g(n)` that is itself a cone generator (cyclic towers).
    Gen(GenRef),
    /// `c(i)`, the `i`-th listed cone generator of an ordered-group handle, from 1.
    Handle(u32),
    /// The stable letter `t`; `t^p` certifies every element of t-exponent `p`.
    Stable,
}

impl fmt::Display for CertGen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertGen::Cone(id) => id.fmt(f),
            CertGen::Gen(n) => write!(f, "g({n})"),
            CertGen::Handle(i) => write!(f, "c({i})"),
            CertGen::Stable => f.write_str("t"),
        }
    }
}

/// `count` consecutive copies of one cone generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CertFactor {
    pub gen: CertGen,
    pub count: u64,
}

/// A factorization into cone generators, run-length encoded. Serialized as
/// strings such as `a(i,m)` or `a(i,m)^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ConeCertificate {
    pub factors: Vec<CertFactor>,
}

impl ConeCertificate {
    pub fn single(gen: CertGen, count: u64) -> Self {
        let mut c = ConeCertificate::default();
        c.push_gen(gen, count);
        c
    }

    pub fn push(&mut self, id: ConeGenId, count: u64) {
        self.push_gen(CertGen::Cone(id), count);
    }

    pub fn push_gen(&mut self, gen: CertGen, count: u64) {
        if count == 0 {
            return;
        }
        match self.factors.last_mut() {
            Some(f) if f.gen == gen => f.count += count,
            _ => self.factors.push(CertFactor { gen, count }),
        }
    }

    pub fn concat(&self, other: &ConeCertificate) -> ConeCertificate {
        let mut out = self.clone();
        for f in &other.factors {
            out.push_gen(f.gen, f.count);
        }
        out
    }

    pub fn factor_count(&self) -> u64 {
        self.factors.iter().map(|f| f.count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// The product of the generator words, with `eval` naming each generator.
    pub fn word_with(&self, eval: impl Fn(CertGen) -> Result<Word, Error>) -> Result<Word, Error> {
        let mut w = Word::identity();
        for f in &self.factors {
            let n = i64::try_from(f.count).map_err(|_| Error::Overflow)?;
            w = w.mul(&eval(f.gen)?.pow(n));
        }
        Ok(w)
    }

    /// The product of chain cone generator words.
    pub fn word(&self, spec: &ChainSpec) -> Result<Word, Error> {
        self.word_with(|g| match g {
            CertGen::Cone(id) => cone_generator(spec, id),
            other => Err(Error::Unsupported(format!("{other} is not a chain cone generator"))),
        })
    }

    pub fn parse(items: &[String]) -> Result<Self, Error> {
        let mut out = ConeCertificate::default();
        for s in items {
            let bad = || Error::Word(crate::words::WordError::Parse(s.clone()));
            let (head, count) = match s.rsplit_once(")^").map(|(h, c)| (format!("{h})"), c)) {
                Some((h, c)) => (h, c.parse::<u64>().map_err(|_| bad())?),
                None => match s.strip_prefix("t^") {
                    Some(c) => ("t".to_string(), c.parse::<u64>().map_err(|_| bad())?),
                    None => (s.clone(), 1),
                },
            };
            if count == 0 {
                return Err(bad());
            }
            let inner = |p: &str| {
                head.strip_prefix(p)
                    .and_then(|r| r.strip_suffix(')'))
                    .map(str::to_string)
            };
            let gen = if head == "t" {
                CertGen::Stable
            } else if let Some(body) = inner("a(") {
                let (i, m) = body.split_once(',').ok_or_else(bad)?;
                CertGen::Cone(ConeGenId::new(
                    i.trim().parse().map_err(|_| bad())?,
                    m.trim().parse().map_err(|_| bad())?,
                )?)
            } else if let Some(body) = inner("g(") {
                CertGen::Gen(body.parse().map_err(|_| bad())?)
            } else if let Some(body) = inner("c(") {
                CertGen::Handle(body.parse().map_err(|_| bad())?)
            } else {
                return Err(bad());
            };
            out.push_gen(gen, count);
        }
        Ok(out)
    }

    pub fn strings(&self) -> Vec<String> {
        self.factors
            .iter()
            .map(|f| {
                if f.count == 1 {
                    f.gen.to_string()
                } else {
                    format!("{}^{}", f.gen, f.count)
                }
            })
            .collect()
    }
}

impl fmt::Display for ConeCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.strings().join(" "))
    }
}

impl Serialize for ConeCertificate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConeCertificate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        ConeCertificate::parse(&v).map_err(serde::de::Error::custom)
    }
}

/// Sign of an element. A `Positive` certificate factors the element, a
/// `Negative` one factors its inverse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignResult {
    pub value: SignValue,
    pub certificate: Option<ConeCertificate>,
    pub budget_used: u64,
}

impl SignResult {
    fn unknown(used: u64) -> Self {
        SignResult {
            value: SignValue::Unknown,
            certificate: None,
            budget_used: used,
        }
    }

    fn zero() -> Self {
        SignResult {
            value: SignValue::Zero,
            certificate: None,
            budget_used: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Less,
    Equal,
    Greater,
    Unknown,
}

/// Outcome of `compare(a, b)`, backed by the sign of `a⁻¹b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub verdict: Verdict,
    pub sign: SignResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignEngine {
    /// Recursive splitting along the edge relations; budget counts recursive calls.
    #[default]
    Structural,
    /// Breadth-first cone enumeration; budget counts distinct normal forms.
    Enumerative,
}

/// Default number of recursive calls for the structural procedure.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug)]
struct Exhausted;

/// Run-length list of generator levels `j`, meaning `a_{j}` based at the
/// current bottom level.
type Levels = Vec<(GenRef, u64)>;

fn push_level(c: &mut Levels, j: GenRef, n: u64) {
    if n == 0 {
        return;
    }
    match c.last_mut() {
        Some(last) if last.0 == j => last.1 += n,
        _ => c.push((j, n)),
    }
}

#[derive(Debug, Clone)]
enum Item {
    X(i64),
    H(Word),
}

/// One run of the structural procedure.
struct Splitter<'a> {
    spec: &'a ChainSpec,
    tree: &'a TreeNormalizer,
    calls: u64,
    budget: u64,
}

impl Splitter<'_> {
    fn tick(&mut self) -> Result<(), Exhausted> {
        if self.calls >= self.budget {
            return Err(Exhausted);
        }
        self.calls += 1;
        Ok(())
    }

    fn nf_at(&self, w: &Word, base: GenRef) -> Word {
        self.tree.chain_normal_form_at(w, base).expect("chain normal form")
    }

    /// A factorization of `w` into cone generators of the chain `[lo..hi]`
    /// if `w` lies in its cone.
    fn positive(&mut self, w: &Word, lo: GenRef, hi: GenRef) -> Result<Option<Levels>, Exhausted> {
        self.tick()?;
        if w.is_identity() {
            return Ok(None);
        }
        if lo == hi {
            let e: i64 = w.letters().iter().map(|l| l.exp).sum();
            return Ok((e >= 1).then(|| vec![(lo, e as u64)]));
        }
        let (k, l) = self.spec.pair(lo + 1);
        let y = lo + 1;

        let mut items: Vec<Item> = Vec::new();
        for letter in w.letters() {
            match (letter.gen == lo, items.last_mut()) {
                (true, Some(Item::X(e))) => *e += letter.exp,
                (true, _) => items.push(Item::X(letter.exp)),
                (false, Some(Item::H(h))) => *h = h.mul(&Word::power(letter.gen, letter.exp)),
                (false, _) => items.push(Item::H(Word::power(letter.gen, letter.exp))),
            }
        }
        for it in items.iter_mut() {
            if let Item::H(h) = it {
                *h = self.nf_at(h, y);
            }
        }
        self.reduce(&mut items, lo, k, l);

        if items.is_empty() {
            return Ok(None);
        }
        if items.len() == 1 {
            return match &items[0] {
                Item::X(e) => Ok((*e >= 1).then(|| vec![(lo, *e as u64)])),
                Item::H(h) => {
                    let h = h.clone();
                    Ok(self.positive(&h, y, hi)?.map(|c| lift(&c, lo, k)))
                }
            };
        }

        // Bring every x exponent into its window; the quotient c^t = y^{Lt}
        // moves into the neighbouring H part.
        let n = items.len();
        for i in 0..n {
            let Item::X(e) = items[i] else { continue };
            let (rho, target) = if i == n - 1 {
                ((e - 1).rem_euclid(k) + 1, i - 1)
            } else {
                ((e - 1).rem_euclid(k) + 1 - k, i + 1)
            };
            let t = (e - rho) / k;
            let shift = Word::power(y, l * t);
            if let Item::H(h) = &mut items[target] {
                *h = if target < i { h.mul(&shift) } else { shift.mul(h) };
            }
            items[i] = Item::X(rho);
        }

        let hs: Vec<usize> = (0..n).filter(|&i| matches!(items[i], Item::H(_))).collect();
        let mut certs: BTreeMap<usize, Levels> = BTreeMap::new();
        let mut s = 0i64;
        for (idx, &i) in hs.iter().enumerate() {
            let Item::H(h) = &items[i] else { unreachable!() };
            let h = h.clone();
            let slid = |s: i64, sp: i64| Word::power(y, -l * s).mul(&h).mul(&Word::power(y, l * sp));
            if idx == hs.len() - 1 {
                let Some(c) = self.positive(&slid(s, 0), y, hi)? else {
                    return Ok(None);
                };
                certs.insert(i, c);
                continue;
            }
            // The least exponent s' with y^{-Ls} h y^{Ls'} positive leaves the
            // most room for the remaining parts.
            let mut sp = s;
            let mut c = self.positive(&slid(s, sp), y, hi)?;
            if c.is_some() {
                while let Some(c2) = self.positive(&slid(s, sp - 1), y, hi)? {
                    sp -= 1;
                    c = Some(c2);
                }
            } else {
                while c.is_none() {
                    sp += 1;
                    c = self.positive(&slid(s, sp), y, hi)?;
                }
            }
            certs.insert(i, c.expect("found"));
            s = sp;
        }

        let mut out: Levels = Vec::new();
        let mut pending = 0i64;
        for (i, it) in items.iter().enumerate() {
            match it {
                Item::X(rho) => pending += rho,
                Item::H(_) => {
                    let mut first = true;
                    for &(j, count) in &certs[&i] {
                        for _ in 0..count {
                            let lead = k - 1 + if first { pending } else { 0 };
                            debug_assert!(lead >= 0);
                            push_level(&mut out, lo, lead as u64);
                            push_level(&mut out, j, 1);
                            first = false;
                        }
                    }
                    pending = 0;
                }
            }
        }
        debug_assert!(pending >= 0);
        push_level(&mut out, lo, pending as u64);
        Ok(Some(out))
    }

    /// Removes trivial items, merges neighbours of the same kind, and trades
    /// `x^{Kt}` for `y^{Lt}` in either direction while more than one item remains.
    fn reduce(&self, items: &mut Vec<Item>, lo: GenRef, k: i64, l: i64) {
        let y = lo + 1;
        loop {
            let mut changed = false;
            for i in 0..items.len() {
                let trivial = match &items[i] {
                    Item::X(e) => *e == 0,
                    Item::H(h) => h.is_identity(),
                };
                if trivial {
                    items.remove(i);
                    changed = true;
                    break;
                }
                if i > 0 {
                    let merged = match (&items[i - 1], &items[i]) {
                        (Item::X(a), Item::X(b)) => Some(Item::X(a + b)),
                        (Item::H(a), Item::H(b)) => Some(Item::H(self.nf_at(&a.mul(b), y))),
                        _ => None,
                    };
                    if let Some(m) = merged {
                        items[i - 1] = m;
                        items.remove(i);
                        changed = true;
                        break;
                    }
                }
            }
            if changed {
                continue;
            }
            if items.len() > 1 {
                for it in items.iter_mut() {
                    match it {
                        Item::X(e) if *e % k == 0 => {
                            *it = Item::H(Word::power(y, *e / k * l));
                            changed = true;
                        }
                        Item::H(h)
                            if h.letters().len() == 1 && h.letters()[0].gen == y && h.letters()[0].exp % l == 0 =>
                        {
                            *it = Item::X(h.letters()[0].exp / l * k);
                            changed = true;
                        }
                        _ => {}
                    }
                    if changed {
                        break;
                    }
                }
            }
            if !changed {
                return;
            }
        }
    }
}

/// Rewrites generators based at `lo + 1` as generators based at `lo`:
/// `b_j = a_lo^{K-1} a_j`.
fn lift(c: &Levels, lo: GenRef, k: i64) -> Levels {
    let mut out = Vec::new();
    for &(j, n) in c {
        for _ in 0..n {
            push_level(&mut out, lo, (k - 1) as u64);
            push_level(&mut out, j, 1);
        }
    }
    out
}

/// Breadth-first cone stream for one window.
#[derive(Debug, Default)]
struct ConeTable {
    entries: Vec<(Word, ConeCertificate)>,
    index: HashMap<Word, usize>,
    frontier: Vec<usize>,
}

/// Certified signs and comparisons for one chain spec.
#[derive(Debug)]
pub struct Cone {
    group: ChainGroup,
    tables: Mutex<HashMap<u32, ConeTable>>,
}

impl Clone for Cone {
    fn clone(&self) -> Self {
        Cone {
            group: self.group.clone(),
            tables: Mutex::new(HashMap::new()),
        }
    }
}

impl Cone {
    pub fn new(spec: ChainSpec) -> Result<Self, Error> {
        Ok(Cone {
            group: ChainGroup::new(spec)?,
            tables: Mutex::new(HashMap::new()),
        })
    }

    pub fn group(&self) -> &ChainGroup {
        &self.group
    }

    pub fn spec(&self) -> &ChainSpec {
        self.group.spec()
    }

    pub fn generator(&self, i: i32, m: u32) -> Result<Element, Error> {
        Ok(Element {
            word: cone_generator(self.spec(), ConeGenId::new(i, m)?)?,
            window: m,
        })
    }

    /// Structural search for a factorization of `w` in `P_(m)`.
    pub fn certify_positive(&self, w: &Word, m: u32, budget: u64) -> Result<(Option<ConeCertificate>, u64), Error> {
        if w.window() > m {
            return Err(Error::OutOfRange(format!("{w} does not lie in window {m}")));
        }
        let tree = TreeNormalizer::chain(self.spec());
        let mut sp = Splitter {
            spec: self.spec(),
            tree: &tree,
            calls: 0,
            budget,
        };
        let lo = -(m as i32);
        match sp.positive(w, lo, m as i32) {
            Ok(found) => {
                let cert = found.map(|levels| {
                    let mut c = ConeCertificate::default();
                    for (j, n) in levels {
                        c.push(ConeGenId { i: j, m }, n);
                    }
                    c
                });
                Ok((cert, sp.calls))
            }
            Err(Exhausted) => Err(Error::Resource(format!("sign budget of {budget} calls exhausted"))),
        }
    }

    /// Whether `cert` factors `target` in the group.
    pub fn check_certificate(&self, cert: &ConeCertificate, target: &Word) -> Result<bool, Error> {
        if cert.is_empty() {
            return Ok(false);
        }
        self.group.equal(&cert.word(self.spec())?, target)
    }

    /// Sign at the element's own window with the structural procedure.
    pub fn sign(&self, e: &Element, budget: u64) -> Result<SignResult, Error> {
        self.sign_with(e, SignEngine::Structural, budget)
    }

    pub fn sign_with(&self, e: &Element, engine: SignEngine, budget: u64) -> Result<SignResult, Error> {
        match engine {
            SignEngine::Structural => self.sign_structural(e, budget),
            SignEngine::Enumerative => self.sign_enumerative(e, budget),
        }
    }

    fn sign_structural(&self, e: &Element, budget: u64) -> Result<SignResult, Error> {
        let m = e.window.max(e.word.window());
        let nf = self.group.normal_form(&e.word)?;
        if nf.is_identity() {
            return Ok(SignResult::zero());
        }
        let mut used = 0;
        for (value, target) in [(SignValue::Positive, nf.clone()), (SignValue::Negative, nf.inverse())] {
            match self.certify_positive(&target, m, budget.saturating_sub(used)) {
                Ok((Some(cert), calls)) => {
                    used += calls;
                    if !self.check_certificate(&cert, &target)? {
                        return Err(Error::Precondition(format!(
                            "certificate {cert} does not factor {target}"
                        )));
                    }
                    return Ok(SignResult {
                        value,
                        certificate: Some(cert),
                        budget_used: used,
                    });
                }
                Ok((None, calls)) => used += calls,
                Err(Error::Resource(_)) => return Ok(SignResult::unknown(budget)),
                Err(other) => return Err(other),
            }
        }
        Err(Error::Precondition(format!(
            "neither {nf} nor its inverse factors into cone generators"
        )))
    }

    /// Scans the breadth-first cone stream for `e` and `e⁻¹` together.
    fn sign_enumerative(&self, e: &Element, budget: u64) -> Result<SignResult, Error> {
        let m = e.window.max(e.word.window());
        let nf = self.group.normal_form(&e.word)?;
        if nf.is_identity() {
            return Ok(SignResult::zero());
        }
        let inv = self.group.normal_form(&nf.inverse())?;
        let mut tables = self.tables.lock().expect("cone table lock");
        let table = tables.entry(m).or_default();
        let mut pos = 0usize;
        loop {
            while pos < table.entries.len() {
                if pos as u64 >= budget {
                    return Ok(SignResult::unknown(budget));
                }
                let (w, cert) = &table.entries[pos];
                pos += 1;
                if *w == nf {
                    return Ok(SignResult {
                        value: SignValue::Positive,
                        certificate: Some(cert.clone()),
                        budget_used: pos as u64,
                    });
                }
                if *w == inv {
                    return Ok(SignResult {
                        value: SignValue::Negative,
                        certificate: Some(cert.clone()),
                        budget_used: pos as u64,
                    });
                }
            }
            if pos as u64 >= budget {
                return Ok(SignResult::unknown(budget));
            }
            self.extend(table, m)?;
        }
    }

    /// Appends the next factor-count level, sorted shortlex by normal form.
    fn extend(&self, table: &mut ConeTable, m: u32) -> Result<(), Error> {
        let gens: Vec<(ConeGenId, Word)> = (-(m as i32)..=m as i32)
            .map(|i| {
                let id = ConeGenId { i, m };
                Ok((id, cone_generator(self.spec(), id)?))
            })
            .collect::<Result<_, Error>>()?;
        let mut fresh: BTreeMap<Word, ConeCertificate> = BTreeMap::new();
        if table.entries.is_empty() {
            for (id, g) in &gens {
                let nf = self.group.normal_form(g)?;
                let mut c = ConeCertificate::default();
                c.push(*id, 1);
                fresh.entry(nf).or_insert(c);
            }
        } else {
            for &idx in &table.frontier {
                let (w, cert) = table.entries[idx].clone();
                for (id, g) in &gens {
                    let nf = self.group.normal_form(&w.mul(g))?;
                    if table.index.contains_key(&nf) || fresh.contains_key(&nf) {
                        continue;
                    }
                    let mut c = cert.clone();
                    c.push(*id, 1);
                    fresh.insert(nf, c);
                }
            }
        }
        if fresh.is_empty() {
            return Err(Error::Precondition("cone enumeration stalled".into()));
        }
        let mut level: Vec<(Word, ConeCertificate)> = fresh.into_iter().collect();
        let prec = Precedence::LevelAscending;
        level.sort_by(|a, b| shortlex_compare(&a.0, &b.0, &prec).expect("level precedence is total"));
        table.frontier.clear();
        for (w, c) in level {
            table.index.insert(w.clone(), table.entries.len());
            table.frontier.push(table.entries.len());
            table.entries.push((w, c));
        }
        Ok(())
    }

    /// The first `budget` entries of the cone stream at window `m`: products of
    /// cone generators by factor count, deduplicated by normal form.
    pub fn enumerate(&self, m: u32, budget: usize) -> Result<Vec<(Word, ConeCertificate)>, Error> {
        let mut tables = self.tables.lock().expect("cone table lock");
        let table = tables.entry(m).or_default();
        while table.entries.len() < budget {
            self.extend(table, m)?;
        }
        Ok(table.entries[..budget].to_vec())
    }

    /// `a < b` iff `a⁻¹b` is positive.
    pub fn compare(&self, a: &Element, b: &Element, budget: u64) -> Result<Comparison, Error> {
        let sign = self.sign(&a.inverse().mul(b), budget)?;
        let verdict = match sign.value {
            SignValue::Positive => Verdict::Less,
            SignValue::Negative => Verdict::Greater,
            SignValue::Zero => Verdict::Equal,
            SignValue::Unknown => Verdict::Unknown,
        };
        Ok(Comparison { verdict, sign })
    }

    /// Sign of `w⁻¹ e w`, the sign of `e` in the ordering conjugated by `w`.
    pub fn conjugate_sign(&self, conjugator: &Element, e: &Element, budget: u64) -> Result<SignResult, Error> {
        self.sign(&conjugator.inverse().mul(e).mul(conjugator), budget)
    }
}

pub fn sign(spec: &ChainSpec, e: &Element, budget: u64) -> Result<SignResult, Error> {
    Cone::new(spec.clone())?.sign(e, budget)
}

pub fn compare(spec: &ChainSpec, a: &Element, b: &Element, budget: u64) -> Result<Comparison, Error> {
    Cone::new(spec.clone())?.compare(a, b, budget)
}

pub fn conjugate_sign(spec: &ChainSpec, conjugator: &Element, e: &Element, budget: u64) -> Result<SignResult, Error> {
    Cone::new(spec.clone())?.conjugate_sign(conjugator, e, budget)
}

pub fn enumerate_cone(spec: &ChainSpec, m: u32, budget: usize) -> Result<Vec<(Word, ConeCertificate)>, Error> {
    Cone::new(spec.clone())?.enumerate(m, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaingroup::shift;
    use crate::words::strategies;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn c23() -> &'static Cone {
        static C: OnceLock<Cone> = OnceLock::new();
        C.get_or_init(|| Cone::new(ChainSpec::constant(2, 3).unwrap()).unwrap())
    }

    fn el(s: &str) -> Element {
        c23().group().parse(s).unwrap()
    }

    fn at(s: &str, m: u32) -> Element {
        crate::chaingroup::embed(&el(s), m).unwrap()
    }

    #[test]
    fn sign_examples() {
        let c = c23();
        let r = c.sign(&el("g(0)"), DEFAULT_BUDGET).unwrap();
        assert_eq!(r.value, SignValue::Positive);
        assert_eq!(r.certificate.unwrap().strings(), ["a(0,0)"]);
        assert_eq!(
            c.sign(&Element::identity(), DEFAULT_BUDGET).unwrap().value,
            SignValue::Zero
        );
        assert_eq!(c.sign(&el("g(-1)"), DEFAULT_BUDGET).unwrap().value, SignValue::Positive);
        let r = c.sign(&el("g(-1)^-1 g(0)"), DEFAULT_BUDGET).unwrap();
        assert_eq!(r.certificate.unwrap().strings(), ["a(0,1)"]);
        assert_eq!(
            c.sign(&el("g(0)^2 g(1)^-3"), DEFAULT_BUDGET).unwrap().value,
            SignValue::Zero
        );
    }

    #[test]
    fn compare_examples() {
        let c = c23();
        let v = |a: &Element, b: &Element| c.compare(a, b, DEFAULT_BUDGET).unwrap().verdict;
        assert_eq!(v(&el("a(1,1)"), &el("a(0,1)")), Verdict::Less);
        assert_eq!(v(&el("g(-1)"), &el("g(0)")), Verdict::Less);
        assert_eq!(v(&el("g(0) g(1)"), &el("g(0) g(1)")), Verdict::Equal);
        assert_eq!(v(&el("g(0)"), &el("g(-1)")), Verdict::Greater);
    }

    #[test]
    fn conjugate_sign_examples() {
        let c = c23();
        let e = el("g(1)^-1 g(-1)");
        assert_eq!(
            c.conjugate_sign(&Element::identity(), &e, DEFAULT_BUDGET).unwrap(),
            c.sign(&e, DEFAULT_BUDGET).unwrap()
        );
        assert_eq!(
            c.conjugate_sign(&el("g(0)"), &el("g(0)^3"), DEFAULT_BUDGET)
                .unwrap()
                .value,
            SignValue::Positive
        );
        let r = c.conjugate_sign(&el("g(1)"), &el("a(1,1)"), DEFAULT_BUDGET).unwrap();
        let check = c
            .sign_with(&el("g(1)^-1 a(1,1) g(1)"), SignEngine::Enumerative, 200_000)
            .unwrap();
        assert_eq!(r.value, check.value);
        assert_eq!(r.value, SignValue::Negative);
    }

    #[test]
    fn enumeration_examples() {
        let c = c23();
        let s0 = c.enumerate(0, 5).unwrap();
        let words: Vec<String> = s0.iter().map(|(w, _)| w.to_string()).collect();
        assert_eq!(words, ["g(0)", "g(0)^2", "g(0)^3", "g(0)^4", "g(0)^5"]);
        let s1 = c.enumerate(1, 400).unwrap();
        let a11sq = c.group().normal_form(&el("a(1,1)^2").word).unwrap();
        let hit = s1.iter().find(|(w, _)| *w == a11sq).unwrap();
        assert_eq!(hit.1.strings(), ["a(1,1)^2"]);
        let g1sq = c.group().normal_form(&el("g(1)^2").word).unwrap();
        let s1 = c.enumerate(1, 3000).unwrap();
        let hit = s1.iter().find(|(w, _)| *w == g1sq).unwrap();
        assert!(c.check_certificate(&hit.1, &g1sq).unwrap());
        assert_eq!(
            hit.1.to_string(),
            "a(-1,1) a(0,1) a(-1,1) a(1,1) a(-1,1) a(0,1) a(-1,1) a(1,1)"
        );
    }

    #[test]
    fn enumeration_is_deterministic() {
        let a = Cone::new(ChainSpec::constant(2, 3).unwrap())
            .unwrap()
            .enumerate(1, 300)
            .unwrap();
        let b = Cone::new(ChainSpec::constant(2, 3).unwrap())
            .unwrap()
            .enumerate(1, 300)
            .unwrap();
        assert_eq!(a, b);
        for w in a.windows(2) {
            assert!(w[0].1.factor_count() <= w[1].1.factor_count());
        }
    }

    #[test]
    fn semigroup_closure_on_stream_prefix() {
        let c = c23();
        for m in 0..=1 {
            let s = c.enumerate(m, 200).unwrap();
            for (wa, ca) in s.iter().step_by(7) {
                for (wb, cb) in s.iter().step_by(5) {
                    let prod = wa.mul(wb);
                    assert!(c.check_certificate(&ca.concat(cb), &prod).unwrap());
                    assert_eq!(
                        c.sign(&at(&prod.to_string(), m), DEFAULT_BUDGET).unwrap().value,
                        SignValue::Positive
                    );
                }
            }
        }
    }

    #[test]
    fn shift_compatibility() {
        for (k, l) in [(2, 3), (2, 2), (3, 2)] {
            let spec = ChainSpec::constant(k, l).unwrap();
            let c = Cone::new(spec.clone()).unwrap();
            for m in 0..=2u32 {
                for i in -(m as i32)..=m as i32 {
                    let a = c.generator(i, m).unwrap();
                    for d in [-1, 1] {
                        let s = shift(&spec, &a, d).unwrap();
                        let r = c.sign(&s, DEFAULT_BUDGET).unwrap();
                        assert_eq!(r.value, SignValue::Positive, "({k},{l}) a({i},{m}) shifted {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn certificates_roundtrip_as_strings() {
        let c = c23();
        let r = c.sign(&el("g(1)^2"), DEFAULT_BUDGET).unwrap();
        let cert = r.certificate.unwrap();
        assert_eq!(ConeCertificate::parse(&cert.strings()).unwrap(), cert);
        assert!(ConeCertificate::parse(&["b(0)".to_string()]).is_err());
        assert!(ConeCertificate::parse(&["a(0,1)^-1".to_string()]).is_err());
        assert!(ConeCertificate::parse(&["a(2,1)".to_string()]).is_err());
        let mixed: Vec<String> = ["a(-1,2)^3", "g(4)", "c(2)^2", "t^5", "t"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(
            ConeCertificate::parse(&mixed).unwrap().strings(),
            ["a(-1,2)^3", "g(4)", "c(2)^2", "t^6"]
        );
    }

    #[test]
    fn budget_exhaustion_is_unknown() {
        let c = c23();
        let r = c.sign(&el("g(1)^-1 g(-1)^3 g(0) g(1)^-2"), 1).unwrap();
        assert_eq!(r.value, SignValue::Unknown);
        let r = c.sign_with(&el("g(1)^-5 g(-1)"), SignEngine::Enumerative, 3).unwrap();
        assert_eq!(r.value, SignValue::Unknown);
    }

    proptest! {
        #[test]
        fn trichotomy_with_valid_certificates(w in strategies::word(-2..=2, 6)) {
            for spec in [ChainSpec::Constant { k: 2, l: 3 }, ChainSpec::Constant { k: 3, l: 2 }, ChainSpec::Constant { k: 2, l: 2 }] {
                let c = Cone::new(spec).unwrap();
                let e = Element::new(w.clone());
                let r = c.sign(&e, DEFAULT_BUDGET).unwrap();
                let ri = c.sign(&e.inverse(), DEFAULT_BUDGET).unwrap();
                prop_assert_eq!(r.value.negate(), ri.value);
                prop_assert_ne!(r.value, SignValue::Unknown);
                let nf = c.group().normal_form(&w).unwrap();
                prop_assert_eq!(r.value == SignValue::Zero, nf.is_identity());
                if let Some(cert) = &r.certificate {
                    let target = if r.value == SignValue::Positive { w.clone() } else { w.inverse() };
                    prop_assert!(c.check_certificate(cert, &target).unwrap());
                }
            }
        }

        #[test]
        fn structural_matches_enumeration(w in strategies::word(-1..=1, 4)) {
            let c = c23();
            let e = Element::new(w);
            let s = c.sign(&e, DEFAULT_BUDGET).unwrap();
            let n = c.sign_with(&e, SignEngine::Enumerative, 20_000).unwrap();
            if n.value != SignValue::Unknown {
                prop_assert_eq!(s.value, n.value);
            }
        }

        #[test]
        fn locality(w in strategies::word(-1..=1, 5)) {
            let c = c23();
            let e = Element::new(w);
            let r = c.sign(&e, DEFAULT_BUDGET).unwrap();
            let wider = crate::chaingroup::embed(&e, e.window + 1).unwrap();
            prop_assert_eq!(r.value, c.sign(&wider, DEFAULT_BUDGET).unwrap().value);
        }

        #[test]
        fn left_invariance(a in strategies::word(-2..=2, 4), b in strategies::word(-2..=2, 4), g in strategies::word(-2..=2, 4)) {
            let c = c23();
            let (ea, eb, eg) = (Element::new(a), Element::new(b), Element::new(g));
            let lhs = ea.inverse().mul(&eb);
            let rhs = eg.mul(&ea).inverse().mul(&eg.mul(&eb));
            prop_assert_eq!(&lhs.word, &rhs.word);
            prop_assert_eq!(
                c.compare(&ea, &eb, DEFAULT_BUDGET).unwrap().verdict,
                c.compare(&eg.mul(&ea), &eg.mul(&eb), DEFAULT_BUDGET).unwrap().verdict
            );
        }

        #[test]
        fn transitivity(a in strategies::word(-1..=1, 4), b in strategies::word(-1..=1, 4), d in strategies::word(-1..=1, 4)) {
            let c = c23();
            let (ea, eb, ed) = (Element::new(a), Element::new(b), Element::new(d));
            let lt = |x: &Element, y: &Element| c.compare(x, y, DEFAULT_BUDGET).unwrap().verdict == Verdict::Less;
            if lt(&ea, &eb) && lt(&eb, &ed) {
                prop_assert!(lt(&ea, &ed));
            }
        }
    }
}
