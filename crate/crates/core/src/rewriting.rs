//! Word problem engines.
//!
//! [`TreeNormalizer`] computes canonical forms in a tree of infinite cyclic
//! groups (chain groups, torus knot groups and their iterated amalgams) by
//! reducing the closed walk a word traces from a base vertex.
//! [`RewriteSystem`] is Knuth-Bendix completion with a recursive path ordering,
//! used where it terminates and cross-checked against the tree normal form.
//! [`naive_equal`] is a breadth-first relator search that can only confirm
//! equality, and [`burau`] is a faithful matrix model of `⟨x,y | x²=y³⟩`.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::presentations::{ChainSpec, PresState};
use crate::words::{GenRef, Precedence, Word};
use crate::Error;

/// Anything that can put words into canonical form.
pub trait WordProblem: Send + Sync {
    fn normal_form(&self, w: &Word) -> Result<Word, Error>;

    fn equal(&self, a: &Word, b: &Word) -> Result<bool, Error> {
        Ok(self.normal_form(&a.mul(&b.inverse()))?.is_identity())
    }

    fn is_identity(&self, w: &Word) -> Result<bool, Error> {
        Ok(self.normal_form(w)?.is_identity())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Shape {
    Chain(ChainSpec),
    /// `adj[v]` lists `(w, q, p)` with `v^q = w^p`.
    Graph(BTreeMap<GenRef, Vec<(GenRef, i64, i64)>>),
}

/// Normal forms in the fundamental group of a tree of infinite cyclic groups.
///
/// A word is expanded into a closed walk from the base vertex; each vertex
/// exponent is reduced modulo the edge subgroup toward the next vertex and
/// the quotient carried across the edge. A backtrack whose middle exponent
/// lies in the edge subgroup collapses. The surviving walk with its
/// exponents is unique for each group element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNormalizer {
    shape: Shape,
    base: GenRef,
    /// Next vertex toward the base, for graph shapes.
    parent: BTreeMap<GenRef, GenRef>,
}

impl TreeNormalizer {
    /// The chain `… - g_{-1} - g_0 - g_1 - …` based at `g_0`.
    pub fn chain(spec: &ChainSpec) -> Self {
        Self::chain_based(spec, 0)
    }

    pub fn chain_based(spec: &ChainSpec, base: GenRef) -> Self {
        TreeNormalizer {
            shape: Shape::Chain(spec.clone()),
            base,
            parent: BTreeMap::new(),
        }
    }

    /// Edges `(u, a, v, b)` meaning `u^a = v^b`; they must form a tree.
    pub fn from_edges(vertices: &[GenRef], edges: &[(GenRef, i64, GenRef, i64)]) -> Result<Self, Error> {
        let base = *vertices
            .first()
            .ok_or_else(|| Error::InvalidSpec("empty vertex set".into()))?;
        let mut adj: BTreeMap<GenRef, Vec<(GenRef, i64, i64)>> = vertices.iter().map(|&v| (v, Vec::new())).collect();
        for &(u, a, v, b) in edges {
            if a == 0 || b == 0 || u == v {
                return Err(Error::InvalidSpec(format!("degenerate edge g({u})^{a} = g({v})^{b}")));
            }
            for (x, y, p, q) in [(u, v, a, b), (v, u, b, a)] {
                adj.get_mut(&x)
                    .ok_or_else(|| Error::InvalidSpec(format!("edge mentions unknown g({x})")))?
                    .push((y, p, q));
            }
        }
        let mut parent = BTreeMap::new();
        let mut seen = HashSet::from([base]);
        let mut queue = VecDeque::from([base]);
        while let Some(v) = queue.pop_front() {
            for &(w, _, _) in &adj[&v] {
                if seen.insert(w) {
                    parent.insert(w, v);
                    queue.push_back(w);
                }
            }
        }
        if seen.len() != vertices.len() || edges.len() + 1 != vertices.len() {
            return Err(Error::InvalidSpec("edges do not form a tree".into()));
        }
        Ok(TreeNormalizer {
            shape: Shape::Graph(adj),
            base,
            parent,
        })
    }

    pub fn base(&self) -> GenRef {
        self.base
    }

    pub fn contains(&self, v: GenRef) -> bool {
        match &self.shape {
            Shape::Chain(_) => true,
            Shape::Graph(adj) => adj.contains_key(&v),
        }
    }

    /// `(q, p)` with `v^q = w^p` for adjacent `v, w`.
    pub fn edge(&self, v: GenRef, w: GenRef) -> (i64, i64) {
        match &self.shape {
            Shape::Chain(spec) if w == v + 1 => spec.pair(w),
            Shape::Chain(spec) => {
                debug_assert_eq!(w, v - 1);
                let (k, l) = spec.pair(v);
                (l, k)
            }
            Shape::Graph(adj) => {
                let &(_, q, p) = adj[&v].iter().find(|e| e.0 == w).expect("adjacent vertices");
                (q, p)
            }
        }
    }

    fn toward_base(&self, v: GenRef) -> Option<GenRef> {
        if v == self.base {
            return None;
        }
        match &self.shape {
            Shape::Chain(_) => Some(if v > self.base { v - 1 } else { v + 1 }),
            Shape::Graph(_) => self.parent.get(&v).copied(),
        }
    }

    /// Vertices strictly after `from`, ending at `to`.
    fn path(&self, from: GenRef, to: GenRef) -> Vec<GenRef> {
        if let Shape::Chain(_) = self.shape {
            let step = if to > from { 1 } else { -1 };
            let mut out = Vec::new();
            let mut v = from;
            while v != to {
                v += step;
                out.push(v);
            }
            return out;
        }
        let up = |mut v: GenRef| {
            let mut p = vec![v];
            while let Some(w) = self.toward_base(v) {
                p.push(w);
                v = w;
            }
            p
        };
        let (mut a, mut b) = (up(from), up(to));
        while a.len() > 1 && b.len() > 1 && a[a.len() - 2] == b[b.len() - 2] {
            a.pop();
            b.pop();
        }
        let mut out: Vec<GenRef> = a[1..].to_vec();
        out.extend(b.iter().rev().skip(1));
        out
    }

    /// The reduced closed walk of `w`: vertex items `(v, r)` starting and ending
    /// at the base, with zero exponents kept.
    pub fn reduced_walk(&self, w: &Word) -> Result<Vec<(GenRef, i64)>, Error> {
        self.walk(w, self.base)
    }

    /// Normal form of a chain word relative to another base vertex.
    pub fn chain_normal_form_at(&self, w: &Word, base: GenRef) -> Result<Word, Error> {
        if !matches!(self.shape, Shape::Chain(_)) && base != self.base {
            return Err(Error::Unsupported("rebasing a graph normalizer".into()));
        }
        Ok(Word::from_pairs(self.walk(w, base)?))
    }

    fn walk(&self, w: &Word, base: GenRef) -> Result<Vec<(GenRef, i64)>, Error> {
        let mut items: Vec<(GenRef, i64)> = vec![(base, 0)];
        for l in w.letters() {
            if !self.contains(l.gen) {
                return Err(Error::OutOfRange(format!("g({}) is not a vertex", l.gen)));
            }
            let cur = items.last().unwrap().0;
            items.extend(self.path(cur, l.gen).into_iter().map(|v| (v, 0)));
            let last = items.last_mut().unwrap();
            last.1 = last.1.checked_add(l.exp).ok_or(Error::Overflow)?;
        }
        let cur = items.last().unwrap().0;
        items.extend(self.path(cur, base).into_iter().map(|v| (v, 0)));

        let mut stack: Vec<(GenRef, i64)> = Vec::new();
        let mut pending: VecDeque<(GenRef, i64)> = items.into();
        let mut carry = 0i64;
        while let Some((v, e)) = pending.pop_front() {
            let e = e.checked_add(carry).ok_or(Error::Overflow)?;
            carry = 0;
            let Some(&(w, next_e)) = pending.front() else {
                stack.push((v, e));
                break;
            };
            let (q, p) = self.edge(v, w);
            if e % q == 0 && stack.last().is_some_and(|t| t.0 == w) {
                let (_, top) = stack.pop().unwrap();
                let moved = (e / q).checked_mul(p).ok_or(Error::Overflow)?;
                pending[0] = (
                    w,
                    top.checked_add(moved)
                        .and_then(|x| x.checked_add(next_e))
                        .ok_or(Error::Overflow)?,
                );
                continue;
            }
            let r = e.rem_euclid(q);
            carry = ((e - r) / q).checked_mul(p).ok_or(Error::Overflow)?;
            stack.push((v, r));
        }
        Ok(stack)
    }
}

impl WordProblem for TreeNormalizer {
    fn normal_form(&self, w: &Word) -> Result<Word, Error> {
        Ok(Word::from_pairs(self.reduced_walk(w)?))
    }
}

/// How completion orients an equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// Recursive path ordering on words read as unary terms, first letter outermost.
    #[default]
    RecursivePath,
    Shortlex,
}

type Sym = u32;

/// A string rewriting system over the signed letters of a presentation.
/// Free cancellation rules `a a⁻¹ → 1` are always present.
#[derive(Debug, Clone)]
pub struct RewriteSystem {
    alphabet: Vec<GenRef>,
    precedence: Precedence,
    orientation: Orientation,
    rules: HashMap<Vec<Sym>, Vec<Sym>>,
    max_lhs: usize,
    complete: bool,
}

/// A word irreducible under the system that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalWord<'a> {
    pub word: Word,
    pub system: &'a RewriteSystem,
}

impl PartialEq for RewriteSystem {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet && self.rules == other.rules
    }
}

impl Eq for RewriteSystem {}

const REWRITE_STEP_BUDGET: usize = 1_000_000;

/// Left sides of two overlapping rules and the distinct irreducible words they produce.
type CriticalPair = (Vec<Sym>, Vec<Sym>, Vec<Sym>, Vec<Sym>);

impl RewriteSystem {
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn precedence(&self) -> &Precedence {
        &self.precedence
    }

    /// Rules other than free cancellation, sorted shortlex by left side.
    pub fn rules(&self) -> Vec<(Word, Word)> {
        let mut out: Vec<(Vec<Sym>, &Vec<Sym>)> = self
            .rules
            .iter()
            .filter(|(l, r)| !(l.len() == 2 && r.is_empty() && l[0] ^ 1 == l[1]))
            .map(|(l, r)| (l.clone(), r))
            .collect();
        out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then(a.0.cmp(&b.0)));
        out.into_iter()
            .map(|(l, r)| (self.decode(&l), self.decode(r)))
            .collect()
    }

    fn encode(&self, w: &Word) -> Result<Vec<Sym>, Error> {
        let mut out = Vec::with_capacity(w.letter_length() as usize);
        for (g, s) in w.expanded() {
            let idx = self
                .alphabet
                .iter()
                .position(|&a| a == g)
                .ok_or_else(|| Error::OutOfRange(format!("g({g}) is not a generator of the system")))?;
            out.push(2 * idx as Sym + u32::from(s < 0));
        }
        Ok(out)
    }

    fn decode(&self, s: &[Sym]) -> Word {
        Word::from_pairs(
            s.iter()
                .map(|&x| (self.alphabet[(x / 2) as usize], if x % 2 == 0 { 1 } else { -1 })),
        )
    }

    fn rank(&self, x: Sym) -> i64 {
        let g = self.alphabet[(x / 2) as usize];
        self.precedence
            .rank(g, if x.is_multiple_of(2) { 1 } else { -1 })
            .expect("alphabet covered by precedence")
    }

    fn greater(&self, s: &[Sym], t: &[Sym]) -> bool {
        match self.orientation {
            Orientation::Shortlex => {
                s.len()
                    .cmp(&t.len())
                    .then_with(|| s.iter().map(|&x| self.rank(x)).cmp(t.iter().map(|&x| self.rank(x))))
                    == std::cmp::Ordering::Greater
            }
            Orientation::RecursivePath => self.rpo_greater(s, t),
        }
    }

    /// `gt[i][j]` holds `s[i..] > t[j..]`.
    fn rpo_greater(&self, s: &[Sym], t: &[Sym]) -> bool {
        let (n, m) = (s.len(), t.len());
        let mut gt = vec![vec![false; m + 1]; n + 1];
        for i in (0..n).rev() {
            gt[i][m] = true;
            for j in (0..m).rev() {
                gt[i][j] = if s[i + 1..] == t[j..] || gt[i + 1][j] {
                    true
                } else {
                    let (f, g) = (self.rank(s[i]), self.rank(t[j]));
                    if f > g {
                        gt[i][j + 1]
                    } else if f == g {
                        gt[i + 1][j + 1]
                    } else {
                        false
                    }
                };
            }
        }
        gt[0][0]
    }

    fn reduce(&self, w: &[Sym], budget: &mut usize) -> Result<Vec<Sym>, Error> {
        let mut out: Vec<Sym> = Vec::with_capacity(w.len());
        let mut input: Vec<Sym> = w.iter().rev().copied().collect();
        while let Some(x) = input.pop() {
            out.push(x);
            for len in 1..=self.max_lhs.min(out.len()) {
                if let Some(r) = self.rules.get(&out[out.len() - len..]) {
                    if *budget == 0 {
                        return Err(Error::Resource("rewrite step budget exhausted".into()));
                    }
                    *budget -= 1;
                    out.truncate(out.len() - len);
                    input.extend(r.iter().rev());
                    break;
                }
            }
        }
        Ok(out)
    }

    fn reduce_unbounded(&self, w: &[Sym]) -> Vec<Sym> {
        let mut budget = usize::MAX;
        self.reduce(w, &mut budget).expect("unbounded budget")
    }

    fn insert(&mut self, l: Vec<Sym>, r: Vec<Sym>) {
        self.max_lhs = self.max_lhs.max(l.len());
        self.rules.insert(l, r);
    }

    /// Orients and adds `a = b` after reducing both sides.
    fn add_equation(&mut self, a: &[Sym], b: &[Sym]) -> bool {
        let (a, b) = (self.reduce_unbounded(a), self.reduce_unbounded(b));
        if a == b {
            return false;
        }
        if self.greater(&a, &b) {
            self.insert(a, b);
        } else {
            self.insert(b, a);
        }
        true
    }

    fn interreduce(&mut self) {
        loop {
            let mut changed = false;
            let mut keys: Vec<Vec<Sym>> = self.rules.keys().cloned().collect();
            keys.sort();
            for l in keys {
                let Some(r) = self.rules.remove(&l) else { continue };
                let l2 = self.reduce_unbounded(&l);
                if l2 != l {
                    changed = true;
                    self.add_equation(&l2, &r);
                } else {
                    let r2 = self.reduce_unbounded(&r);
                    self.rules.insert(l, r2);
                }
            }
            self.max_lhs = self.rules.keys().map(Vec::len).max().unwrap_or(0);
            if !changed {
                return;
            }
        }
    }

    /// Critical pairs from suffix/prefix overlaps of left sides that do not join.
    fn unresolved_pairs(&self, skip: &HashSet<(Vec<Sym>, Vec<Sym>)>) -> Vec<CriticalPair> {
        let mut rules: Vec<(&Vec<Sym>, &Vec<Sym>)> = self.rules.iter().collect();
        rules.sort();
        let mut out = Vec::new();
        for &(l1, r1) in &rules {
            for &(l2, r2) in &rules {
                if skip.contains(&(l1.clone(), l2.clone())) {
                    continue;
                }
                for k in 1..l1.len().min(l2.len()) {
                    if l1[l1.len() - k..] != l2[..k] {
                        continue;
                    }
                    let mut a = r1.clone();
                    a.extend_from_slice(&l2[k..]);
                    let mut b = l1[..l1.len() - k].to_vec();
                    b.extend_from_slice(r2);
                    let (a, b) = (self.reduce_unbounded(&a), self.reduce_unbounded(&b));
                    if a != b {
                        out.push((l1.clone(), l2.clone(), a, b));
                    }
                }
            }
        }
        out
    }

    /// Re-runs the critical pair test from scratch.
    pub fn check_confluence(&self) -> bool {
        self.unresolved_pairs(&HashSet::new()).is_empty()
    }

    pub fn normalize(&self, w: &Word) -> Result<NormalWord<'_>, Error> {
        let s = self.encode(w)?;
        let mut budget = REWRITE_STEP_BUDGET;
        let r = self.reduce(&s, &mut budget)?;
        Ok(NormalWord {
            word: self.decode(&r),
            system: self,
        })
    }

    pub fn equal(&self, a: &Word, b: &Word) -> Result<bool, Error> {
        if !self.complete {
            return Err(Error::Incomplete);
        }
        Ok(self.normalize(a)?.word == self.normalize(b)?.word)
    }
}

impl WordProblem for RewriteSystem {
    fn normal_form(&self, w: &Word) -> Result<Word, Error> {
        if !self.complete {
            return Err(Error::Incomplete);
        }
        Ok(self.normalize(w)?.word)
    }
}

/// Completion with the default orientation and level-ascending precedence.
pub fn complete(pres: &PresState, max_rules: usize, max_len: usize) -> Result<RewriteSystem, Error> {
    complete_with(
        pres,
        Orientation::RecursivePath,
        Precedence::LevelAscending,
        max_rules,
        max_len,
    )
}

/// Knuth-Bendix completion. Exceeding `max_rules` is an error; critical pairs
/// longer than `max_len` are set aside and leave the system flagged incomplete.
pub fn complete_with(
    pres: &PresState,
    orientation: Orientation,
    precedence: Precedence,
    max_rules: usize,
    max_len: usize,
) -> Result<RewriteSystem, Error> {
    let mut alphabet = pres.generators.clone();
    alphabet.sort_unstable();
    for &g in &alphabet {
        for s in [1i8, -1] {
            if precedence.rank(g, s).is_none() {
                return Err(crate::words::WordError::OutsidePrecedence(g).into());
            }
        }
    }
    let mut rs = RewriteSystem {
        alphabet,
        precedence,
        orientation,
        rules: HashMap::new(),
        max_lhs: 0,
        complete: false,
    };
    for idx in 0..rs.alphabet.len() as Sym {
        rs.insert(vec![2 * idx, 2 * idx + 1], vec![]);
        rs.insert(vec![2 * idx + 1, 2 * idx], vec![]);
    }
    for r in &pres.relators {
        let s = rs.encode(r)?;
        rs.add_equation(&s, &[]);
    }
    let mut done: HashSet<(Vec<Sym>, Vec<Sym>)> = HashSet::new();
    let mut set_aside = false;
    loop {
        rs.interreduce();
        if rs.rules.len() > max_rules {
            return Err(Error::Resource(format!("completion exceeded {max_rules} rules")));
        }
        let pairs = rs.unresolved_pairs(&done);
        for l1 in rs.rules.keys() {
            for l2 in rs.rules.keys() {
                done.insert((l1.clone(), l2.clone()));
            }
        }
        let mut added = false;
        for (_, _, a, b) in pairs {
            if a.len().max(b.len()) > max_len {
                set_aside = true;
                continue;
            }
            added |= rs.add_equation(&a, &b);
            if rs.rules.len() > max_rules {
                return Err(Error::Resource(format!("completion exceeded {max_rules} rules")));
            }
        }
        if !added {
            rs.interreduce();
            if set_aside || rs.check_confluence() {
                rs.complete = !set_aside && rs.check_confluence();
                return Ok(rs);
            }
            done.clear();
        }
    }
}

/// Verdict of the brute-force oracle; it never claims inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NaiveVerdict {
    Equal,
    Unknown,
}

type Cyc = Vec<i32>;
/// A relator split `UV` as `(U, V⁻¹)`.
type Piece = (Cyc, Cyc);

fn sym(g: GenRef, s: i8) -> i32 {
    2 * g + i32::from(s < 0)
}

fn cyclic_reduce(mut w: Vec<i32>) -> Cyc {
    let mut out: Vec<i32> = Vec::with_capacity(w.len());
    for x in w.drain(..) {
        if out.last().is_some_and(|&y| y ^ 1 == x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    let (mut i, mut j) = (0, out.len());
    while j >= i + 2 && out[i] ^ 1 == out[j - 1] {
        i += 1;
        j -= 1;
    }
    let core = &out[i..j];
    let rot = |r: usize| core[r..].iter().chain(&core[..r]);
    let best = (1..core.len()).fold(0, |b, r| if rot(r).lt(rot(b)) { r } else { b });
    rot(best).copied().collect()
}

/// Breadth-first search from the cyclic word of `a·b⁻¹` for the empty word.
/// A move replaces a cyclic subword `U` by `V⁻¹` for a cyclic permutation
/// `UV` of a relator or its inverse, followed by cyclic free reduction.
/// `budget` caps the number of distinct words expanded.
pub fn naive_equal(pres: &PresState, a: &Word, b: &Word, budget: usize) -> NaiveVerdict {
    let start = cyclic_reduce(
        a.mul(&b.inverse())
            .expanded()
            .into_iter()
            .map(|(g, s)| sym(g, s))
            .collect(),
    );
    if start.is_empty() {
        return NaiveVerdict::Equal;
    }
    let mut pieces: Vec<(Vec<i32>, Vec<i32>)> = Vec::new();
    for r in &pres.relators {
        for rel in [r.clone(), r.inverse()] {
            let e: Vec<i32> = rel.expanded().into_iter().map(|(g, s)| sym(g, s)).collect();
            let n = e.len();
            for rot in 0..n {
                let c: Vec<i32> = [&e[rot..], &e[..rot]].concat();
                for split in 1..=n {
                    let u = c[..split].to_vec();
                    let v_inv: Vec<i32> = c[split..].iter().rev().map(|x| x ^ 1).collect();
                    pieces.push((u, v_inv));
                }
            }
        }
    }
    pieces.sort();
    pieces.dedup();
    let mut by_first: HashMap<i32, Vec<Piece>> = HashMap::new();
    for (u, v) in pieces {
        by_first.entry(u[0]).or_default().push((u, v));
    }
    let mut seen: HashSet<Cyc> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let mut expanded = 0usize;
    while let Some(w) = queue.pop_front() {
        if expanded >= budget {
            return NaiveVerdict::Unknown;
        }
        expanded += 1;
        let n = w.len();
        for p in 0..n {
            for (u, v_inv) in by_first.get(&w[p]).map(Vec::as_slice).unwrap_or_default() {
                if u.len() <= n && (1..u.len()).all(|i| w[(p + i) % n] == u[i]) {
                    let mut next: Vec<i32> = v_inv.clone();
                    next.extend((u.len()..n).map(|i| w[(p + i) % n]));
                    let next = cyclic_reduce(next);
                    if next.is_empty() {
                        return NaiveVerdict::Equal;
                    }
                    if seen.insert(next.clone()) {
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    NaiveVerdict::Unknown
}

/// Reduced Burau representation of the three-strand braid group, which is
/// faithful. With `x = σ1σ2σ1` and `y = σ1σ2` it realizes `⟨x,y | x²=y³⟩`
/// on generators `g(0) ↦ x`, `g(1) ↦ y`.
pub mod burau {
    use std::collections::BTreeMap;

    use crate::words::Word;

    /// Laurent polynomial in `t` with integer coefficients.
    #[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
    pub struct Laurent(BTreeMap<i32, i128>);

    impl Laurent {
        pub fn monomial(c: i128, e: i32) -> Self {
            let mut m = BTreeMap::new();
            if c != 0 {
                m.insert(e, c);
            }
            Laurent(m)
        }

        fn add(&self, o: &Laurent) -> Laurent {
            let mut m = self.0.clone();
            for (&e, &c) in &o.0 {
                let v = m.entry(e).or_insert(0);
                *v += c;
                if *v == 0 {
                    m.remove(&e);
                }
            }
            Laurent(m)
        }

        fn mul(&self, o: &Laurent) -> Laurent {
            let mut acc = Laurent::default();
            for (&e1, &c1) in &self.0 {
                for (&e2, &c2) in &o.0 {
                    acc = acc.add(&Laurent::monomial(c1 * c2, e1 + e2));
                }
            }
            acc
        }
    }

    pub type Mat = [[Laurent; 2]; 2];

    fn mono(c: i128, e: i32) -> Laurent {
        Laurent::monomial(c, e)
    }

    pub fn identity() -> Mat {
        [[mono(1, 0), mono(0, 0)], [mono(0, 0), mono(1, 0)]]
    }

    pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
        let cell = |i: usize, j: usize| a[i][0].mul(&b[0][j]).add(&a[i][1].mul(&b[1][j]));
        [[cell(0, 0), cell(0, 1)], [cell(1, 0), cell(1, 1)]]
    }

    /// `σ1`, `σ2` and their inverses, indexed by `(strand, sign)`.
    pub fn sigma(i: u8, positive: bool) -> Mat {
        match (i, positive) {
            (1, true) => [[mono(-1, 1), mono(1, 0)], [mono(0, 0), mono(1, 0)]],
            (1, false) => [[mono(-1, -1), mono(1, -1)], [mono(0, 0), mono(1, 0)]],
            (2, true) => [[mono(1, 0), mono(0, 0)], [mono(1, 1), mono(-1, 1)]],
            (2, false) => [[mono(1, 0), mono(0, 0)], [mono(1, 0), mono(-1, -1)]],
            _ => unreachable!("three strands"),
        }
    }

    pub fn braid(letters: &[(u8, bool)]) -> Mat {
        letters.iter().fold(identity(), |m, &(i, s)| mat_mul(&m, &sigma(i, s)))
    }

    /// Image of a word in `g(0)`, `g(1)`; `None` if another generator occurs.
    pub fn trefoil_image(w: &Word) -> Option<Mat> {
        let x = braid(&[(1, true), (2, true), (1, true)]);
        let xi = braid(&[(1, false), (2, false), (1, false)]);
        let y = braid(&[(1, true), (2, true)]);
        let yi = braid(&[(2, false), (1, false)]);
        let mut m = identity();
        for (g, s) in w.expanded() {
            let f = match (g, s > 0) {
                (0, true) => &x,
                (0, false) => &xi,
                (1, true) => &y,
                (1, false) => &yi,
                _ => return None,
            };
            m = mat_mul(&m, f);
        }
        Some(m)
    }
}
