//! Convex subgroups `Γ^S(P)`: closure of a seed inside a finite ball, a
//! deduction engine that derives memberships from the convex-subgroup rules,
//! and replays of the conditions (C1)–(C3) that force every nontrivial convex
//! subgroup of `P̃` to be all of `G̃`.
//!
//! Rules, for a convex subgroup `C`:
//! - Root: `cⁿ ∈ C` with `n ≠ 0` gives `c ∈ C`.
//! - Sandwich: `1 < g < c` with `c ∈ C` gives `g ∈ C`.
//! - RelationRewrite: an equal word of a member is a member.
//! - Product and Inverse: `C` is a subgroup.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::chaingroup::{ball, Element};
use crate::cone::{Cone, SignResult, SignValue, Verdict, DEFAULT_BUDGET};
use crate::orderprobes::{recheck, Check, Evidence, ProbeReport, SignOracle};
use crate::presentations::{cone_generator, ChainSpec, ConeGenId};
use crate::rewriting::WordProblem;
use crate::words::{GenRef, Word};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Root,
    Sandwich,
    RelationRewrite,
    Product,
    Inverse,
}

/// A reference to an earlier membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Premise {
    Seed(usize),
    Step(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub rule: Rule,
    pub premises: Vec<Premise>,
    pub conclusion: Word,
    /// The `n` of a Root step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<i64>,
    /// For Sandwich, certificates of `g` and of `g⁻¹c`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support: Vec<Evidence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DeductionTrace {
    pub seed: Vec<Word>,
    pub steps: Vec<Step>,
}

impl DeductionTrace {
    pub fn conclusion(&self, p: Premise) -> Option<&Word> {
        match p {
            Premise::Seed(i) => self.seed.get(i),
            Premise::Step(i) => self.steps.get(i).map(|s| &s.conclusion),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Deduction {
    /// `targets[i]` is the conclusion of `derived[i]`.
    Proved {
        trace: DeductionTrace,
        derived: Vec<Premise>,
    },
    /// Search ended without every target; `frontier` lists the normal forms reached.
    Failed {
        trace: DeductionTrace,
        frontier: Vec<Word>,
        missing: Vec<Word>,
    },
}

impl Deduction {
    pub fn trace(&self) -> &DeductionTrace {
        match self {
            Deduction::Proved { trace, .. } | Deduction::Failed { trace, .. } => trace,
        }
    }

    pub fn is_proved(&self) -> bool {
        matches!(self, Deduction::Proved { .. })
    }
}

/// Bounds for the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Maximum number of trace steps.
    pub steps: u64,
    /// Per-call sign budget behind Sandwich steps.
    pub sign: u64,
    /// Largest level magnitude the search may use; defaults to one past the
    /// widest seed or target.
    pub horizon: Option<u32>,
    /// Radius of a final closure inside a ball; 0 skips it.
    pub ball_radius: u32,
}

impl Limits {
    pub fn steps(steps: u64) -> Self {
        Limits {
            steps,
            sign: DEFAULT_BUDGET,
            horizon: None,
            ball_radius: 0,
        }
    }
}

/// An under-approximation of `Γ^seed(P̃)` inside a ball.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvexApprox {
    /// Normal forms, sorted.
    pub members: Vec<Word>,
    pub radius: u32,
    pub window: u32,
    pub seed: Vec<Element>,
    /// Set when the step budget ran out or a sign was undecided.
    pub truncated: bool,
    /// Derives every member from the seed.
    pub derivation: DeductionTrace,
}

struct Stop;

struct Known {
    word: Word,
    nf: Word,
    at: Premise,
}

/// Working state shared by the closure and the deduction search.
struct Deriver<'a> {
    cone: &'a Cone,
    trace: DeductionTrace,
    known: Vec<Known>,
    by_word: HashMap<Word, usize>,
    by_nf: HashMap<Word, usize>,
    signs: HashMap<Word, SignResult>,
    limits: Limits,
    undecided: bool,
}

impl<'a> Deriver<'a> {
    fn new(cone: &'a Cone, seed: &[Word], limits: Limits) -> Result<Self, Error> {
        let mut d = Deriver {
            cone,
            trace: DeductionTrace {
                seed: seed.to_vec(),
                steps: Vec::new(),
            },
            known: Vec::new(),
            by_word: HashMap::new(),
            by_nf: HashMap::new(),
            signs: HashMap::new(),
            limits,
            undecided: false,
        };
        for (i, w) in seed.iter().enumerate() {
            d.record(w.clone(), Premise::Seed(i))?;
        }
        Ok(d)
    }

    fn nf(&self, w: &Word) -> Result<Word, Error> {
        self.cone.group().normal_form(w)
    }

    fn record(&mut self, word: Word, at: Premise) -> Result<usize, Error> {
        if let Some(&i) = self.by_word.get(&word) {
            return Ok(i);
        }
        let nf = self.nf(&word)?;
        let idx = self.known.len();
        self.by_nf.entry(nf.clone()).or_insert(idx);
        self.by_word.insert(word.clone(), idx);
        self.known.push(Known { word, nf, at });
        Ok(idx)
    }

    fn at(&self, i: usize) -> Premise {
        self.known[i].at
    }

    /// Adds a step unless its conclusion is already known as a word.
    fn conclude(
        &mut self,
        rule: Rule,
        premises: Vec<usize>,
        word: Word,
        exponent: Option<i64>,
        support: Vec<Evidence>,
    ) -> Result<Result<usize, Stop>, Error> {
        if let Some(&i) = self.by_word.get(&word) {
            return Ok(Ok(i));
        }
        if self.trace.steps.len() as u64 >= self.limits.steps {
            return Ok(Err(Stop));
        }
        let premises = premises.into_iter().map(|i| self.at(i)).collect();
        let at = Premise::Step(self.trace.steps.len());
        self.trace.steps.push(Step {
            rule,
            premises,
            conclusion: word.clone(),
            exponent,
            support,
        });
        Ok(Ok(self.record(word, at)?))
    }

    fn knows_nf(&self, w: &Word) -> Result<Option<usize>, Error> {
        Ok(self.by_nf.get(&self.nf(w)?).copied())
    }

    fn sign(&mut self, w: &Word) -> Result<SignResult, Error> {
        let nf = self.nf(w)?;
        if let Some(s) = self.signs.get(&nf) {
            return Ok(s.clone());
        }
        let s = self.cone.sign(&Element::new(nf.clone()), self.limits.sign)?;
        if s.value == SignValue::Unknown {
            self.undecided = true;
        }
        self.signs.insert(nf, s.clone());
        Ok(s)
    }

    /// Membership of `x⁻¹`, concluding it when needed.
    fn inverse_of(&mut self, i: usize) -> Result<Result<usize, Stop>, Error> {
        let w = self.known[i].word.inverse();
        self.conclude(Rule::Inverse, vec![i], w, None, Vec::new())
    }

    /// Membership of `g_j^e` from a member equal to `g_j`.
    fn power_of(&mut self, gen: usize, level: GenRef, e: i64) -> Result<Result<usize, Stop>, Error> {
        let base = if e < 0 {
            match self.inverse_of(gen)? {
                Ok(i) => i,
                Err(s) => return Ok(Err(s)),
            }
        } else {
            gen
        };
        if e.unsigned_abs() == 1 {
            return Ok(Ok(base));
        }
        let premises = vec![base; e.unsigned_abs() as usize];
        self.conclude(Rule::Product, premises, Word::power(level, e), None, Vec::new())
    }

    /// Members that are single-syllable powers give their roots.
    fn roots(&mut self) -> Result<Result<bool, Stop>, Error> {
        let mut progress = false;
        let mut i = 0;
        while i < self.known.len() {
            let w = self.known[i].word.clone();
            i += 1;
            if w.syllables() != 1 {
                continue;
            }
            let letter = w.letters()[0];
            if letter.exp == 1 {
                continue;
            }
            let root = Word::gen(letter.gen);
            if self.by_word.contains_key(&root) {
                continue;
            }
            match self.conclude(Rule::Root, vec![i - 1], root, Some(letter.exp), Vec::new())? {
                Ok(_) => progress = true,
                Err(s) => return Ok(Err(s)),
            }
        }
        Ok(Ok(progress))
    }

    /// From `g_j` to its neighbours through the edge relations, within the horizon.
    fn propagate(&mut self, horizon: i32) -> Result<Result<bool, Stop>, Error> {
        let spec = self.cone.spec().clone();
        let mut progress = false;
        let mut frontier: Vec<GenRef> = self
            .known
            .iter()
            .filter(|k| k.word.syllables() == 1 && k.word.letters()[0].exp == 1)
            .map(|k| k.word.letters()[0].gen)
            .collect();
        while let Some(j) = frontier.pop() {
            for (next, own, other) in [(j + 1, spec.k(j + 1), spec.l(j + 1)), (j - 1, spec.l(j), spec.k(j))] {
                if next.abs() > horizon || self.knows_nf(&Word::gen(next))?.is_some() {
                    continue;
                }
                let gi = self.by_word[&Word::gen(j)];
                let p = match self.power_of(gi, j, own)? {
                    Ok(p) => p,
                    Err(s) => return Ok(Err(s)),
                };
                let r = match self.conclude(
                    Rule::RelationRewrite,
                    vec![p],
                    Word::power(next, other),
                    None,
                    Vec::new(),
                )? {
                    Ok(r) => r,
                    Err(s) => return Ok(Err(s)),
                };
                match self.conclude(Rule::Root, vec![r], Word::gen(next), Some(other), Vec::new())? {
                    Ok(_) => {
                        progress = true;
                        frontier.push(next);
                    }
                    Err(s) => return Ok(Err(s)),
                }
            }
        }
        Ok(Ok(progress))
    }

    /// Quotients `xy⁻¹` and `x⁻¹y` of members that collapse to a power of
    /// one generator not yet reached.
    fn quotients(&mut self) -> Result<Result<bool, Stop>, Error> {
        let n = self.known.len();
        for a in 0..n {
            for b in 0..n {
                if a == b || self.known[a].nf == self.known[b].nf {
                    continue;
                }
                for left in [true, false] {
                    let (x, y) = (&self.known[a].word, &self.known[b].word);
                    let q = if left { x.mul(&y.inverse()) } else { x.inverse().mul(y) };
                    let nf = self.nf(&q)?;
                    if nf.syllables() != 1 || self.by_nf.contains_key(&nf) {
                        continue;
                    }
                    let level = nf.letters()[0].gen;
                    if self.knows_nf(&Word::gen(level))?.is_some() {
                        continue;
                    }
                    let step = if left {
                        self.inverse_of(b)?.map(|yi| (a, yi))
                    } else {
                        self.inverse_of(a)?.map(|xi| (xi, b))
                    };
                    let Ok((u, v)) = step else { return Ok(Err(Stop)) };
                    let p = match self.conclude(Rule::Product, vec![u, v], q, None, Vec::new())? {
                        Ok(p) => p,
                        Err(s) => return Ok(Err(s)),
                    };
                    return Ok(self
                        .conclude(Rule::RelationRewrite, vec![p], nf, None, Vec::new())?
                        .map(|_| true));
                }
            }
        }
        Ok(Ok(false))
    }

    /// The largest positive member, oriented by an Inverse step if needed.
    fn largest_positive(&mut self) -> Result<Result<Option<usize>, Stop>, Error> {
        let mut best: Option<(usize, bool)> = None;
        let mut seen = HashSet::new();
        for i in 0..self.known.len() {
            if !seen.insert(self.known[i].nf.clone()) || self.known[i].nf.is_identity() {
                continue;
            }
            let s = self.sign(&self.known[i].word.clone())?;
            let flip = match s.value {
                SignValue::Positive => false,
                SignValue::Negative => true,
                _ => continue,
            };
            best = match best {
                None => Some((i, flip)),
                Some((j, jf)) => {
                    let oriented = |k: usize, f: bool| {
                        let w = &self.known[k].nf;
                        Element::new(if f { w.inverse() } else { w.clone() })
                    };
                    let c = self
                        .cone
                        .compare(&oriented(j, jf), &oriented(i, flip), self.limits.sign)?;
                    match c.verdict {
                        Verdict::Less => Some((i, flip)),
                        Verdict::Unknown => {
                            self.undecided = true;
                            Some((j, jf))
                        }
                        _ => Some((j, jf)),
                    }
                }
            };
        }
        Ok(match best {
            None => Ok(None),
            Some((i, false)) => Ok(Some(i)),
            Some((i, true)) => self.inverse_of(i)?.map(Some),
        })
    }

    /// Sandwich each candidate `g` with `1 < g < cmax`.
    fn sandwich(&mut self, candidates: &[Word]) -> Result<Result<bool, Stop>, Error> {
        let top = match self.largest_positive()? {
            Ok(Some(t)) => t,
            Ok(None) => return Ok(Ok(false)),
            Err(s) => return Ok(Err(s)),
        };
        let c = self.known[top].word.clone();
        let mut progress = false;
        for g in candidates {
            if self.knows_nf(g)?.is_some() {
                continue;
            }
            let sg = self.sign(g)?;
            if sg.value != SignValue::Positive {
                continue;
            }
            let q = g.inverse().mul(&c);
            let sq = self.sign(&q)?;
            if sq.value != SignValue::Positive {
                continue;
            }
            let support = vec![
                Evidence::Certificate {
                    element: g.clone(),
                    value: sg.value,
                    certificate: sg.certificate.unwrap_or_default(),
                },
                Evidence::Certificate {
                    element: q,
                    value: sq.value,
                    certificate: sq.certificate.unwrap_or_default(),
                },
            ];
            match self.conclude(Rule::Sandwich, vec![top], g.clone(), None, support)? {
                Ok(_) => progress = true,
                Err(s) => return Ok(Err(s)),
            }
        }
        Ok(Ok(progress))
    }

    /// Closure inside the ball: products, inverses, roots and sandwiches whose
    /// conclusions are ball elements. Conclusions are normal forms.
    fn close_in_ball(&mut self, ball_nfs: &[Word], radius: u32) -> Result<Result<(), Stop>, Error> {
        let in_ball: HashSet<&Word> = ball_nfs.iter().collect();
        let mut done = 0usize;
        loop {
            let mut members: Vec<usize> = Vec::new();
            let mut seen = HashSet::new();
            for (i, k) in self.known.iter().enumerate() {
                if in_ball.contains(&k.nf) && seen.insert(k.nf.clone()) {
                    members.push(i);
                }
            }
            let before = self.by_nf.len();
            for &a in &members {
                let inv = self.nf(&self.known[a].word.inverse())?;
                if !self.by_nf.contains_key(&inv) {
                    if let Err(s) = self.conclude(Rule::Inverse, vec![a], inv, None, Vec::new())? {
                        return Ok(Err(s));
                    }
                }
            }
            for (ia, &a) in members.iter().enumerate() {
                for (ib, &b) in members.iter().enumerate() {
                    if ia.max(ib) < done {
                        continue;
                    }
                    let p = self.nf(&self.known[a].word.mul(&self.known[b].word))?;
                    if in_ball.contains(&p) && !self.by_nf.contains_key(&p) {
                        if let Err(s) = self.conclude(Rule::Product, vec![a, b], p, None, Vec::new())? {
                            return Ok(Err(s));
                        }
                    }
                }
            }
            done = members.len();
            if self.by_nf.len() > before {
                continue;
            }
            for b in ball_nfs {
                if self.by_nf.contains_key(b) {
                    continue;
                }
                for n in 2..=radius.max(2) as i64 {
                    if let Some(&p) = self.by_nf.get(&self.nf(&b.pow(n))?) {
                        if let Err(s) = self.conclude(Rule::Root, vec![p], b.clone(), Some(n), Vec::new())? {
                            return Ok(Err(s));
                        }
                        break;
                    }
                }
            }
            if self.by_nf.len() > before {
                continue;
            }
            let oriented: Vec<Word> = {
                let mut v = Vec::new();
                for b in ball_nfs {
                    if b.is_identity() || self.by_nf.contains_key(b) {
                        continue;
                    }
                    match self.sign(b)?.value {
                        SignValue::Positive => v.push(b.clone()),
                        SignValue::Negative => v.push(self.nf(&b.inverse())?),
                        _ => {}
                    }
                }
                v
            };
            if let Err(s) = self.sandwich(&oriented)? {
                return Ok(Err(s));
            }
            if self.by_nf.len() == before {
                return Ok(Ok(()));
            }
        }
    }

    fn frontier(&self) -> Vec<Word> {
        let mut v: Vec<Word> = self.by_nf.keys().cloned().collect();
        v.sort();
        v
    }
}

fn window_of(words: &[Word]) -> u32 {
    words.iter().map(Word::window).max().unwrap_or(0)
}

/// Closure of `seed` inside the ball of `radius` letters over `g(-W..W)`,
/// `W` the widest seed window.
pub fn gamma_ball(spec: &ChainSpec, seed: &[Element], radius: u32, limits: Limits) -> Result<ConvexApprox, Error> {
    if radius == 0 {
        return Err(Error::Precondition("radius must be at least 1".into()));
    }
    let cone = Cone::new(spec.clone())?;
    let seed_words: Vec<Word> = seed.iter().map(|e| e.word.clone()).collect();
    let window = seed.iter().map(|e| e.window.max(e.word.window())).max().unwrap_or(0);
    let gens: Vec<GenRef> = (-(window as i32)..=window as i32).collect();
    let ball_nfs = ball(cone.group(), &gens, radius)?;
    let mut d = Deriver::new(&cone, &seed_words, limits)?;
    let mut truncated = d.close_in_ball(&ball_nfs, radius)?.is_err();
    truncated |= d.undecided;
    let in_ball: HashSet<&Word> = ball_nfs.iter().collect();
    let mut members: Vec<Word> = d.by_nf.keys().filter(|w| in_ball.contains(w)).cloned().collect();
    if !members.contains(&Word::identity()) {
        members.push(Word::identity());
    }
    members.sort();
    Ok(ConvexApprox {
        members,
        radius,
        window,
        seed: seed.to_vec(),
        truncated,
        derivation: d.trace,
    })
}

/// Candidate elements for Sandwich steps: cone generators and level
/// generators up to the horizon.
fn sandwich_candidates(spec: &ChainSpec, horizon: u32) -> Result<Vec<Word>, Error> {
    let mut out = Vec::new();
    for n in 0..=horizon {
        for i in (-(n as i32)..=n as i32).rev() {
            out.push(cone_generator(spec, ConeGenId::new(i, n)?)?);
        }
    }
    for j in -(horizon as i32)..=horizon as i32 {
        out.push(Word::gen(j));
    }
    Ok(out)
}

/// Derives membership of each target in every convex subgroup of `P̃`
/// that contains the seed.
pub fn deduce_containment(
    spec: &ChainSpec,
    seed: &[Element],
    targets: &[Element],
    limits: Limits,
) -> Result<Deduction, Error> {
    let cone = Cone::new(spec.clone())?;
    let seed_words: Vec<Word> = seed.iter().map(|e| e.word.clone()).collect();
    let target_words: Vec<Word> = targets.iter().map(|e| e.word.clone()).collect();
    let widest = window_of(&seed_words).max(window_of(&target_words));
    let horizon = limits.horizon.unwrap_or(widest + 1);
    let candidates = sandwich_candidates(spec, horizon)?;
    let mut d = Deriver::new(&cone, &seed_words, limits)?;

    let done = |d: &Deriver| -> Result<bool, Error> {
        for t in &target_words {
            if d.knows_nf(t)?.is_none() {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let mut stopped = false;
    while !done(&d)? {
        let mut progress = false;
        for phase in 0..4 {
            let r = match phase {
                0 => d.roots()?,
                1 => d.propagate(horizon as i32)?,
                2 => d.quotients()?,
                _ => d.sandwich(&candidates)?,
            };
            match r {
                Ok(p) => progress |= p,
                Err(Stop) => stopped = true,
            }
            if stopped || progress {
                break;
            }
        }
        if stopped || !progress {
            break;
        }
    }
    if !stopped && !done(&d)? && limits.ball_radius > 0 {
        let gens: Vec<GenRef> = (-(widest as i32)..=widest as i32).collect();
        let nfs = ball(cone.group(), &gens, limits.ball_radius)?;
        stopped = d.close_in_ball(&nfs, limits.ball_radius)?.is_err();
    }

    let mut derived = Vec::new();
    let mut missing = Vec::new();
    for t in &target_words {
        if let Some(&i) = d.by_word.get(t) {
            derived.push(d.at(i));
            continue;
        }
        let found = if stopped { None } else { d.knows_nf(t)? };
        match found {
            Some(i) => match d.conclude(Rule::RelationRewrite, vec![i], t.clone(), None, Vec::new())? {
                Ok(j) => derived.push(d.at(j)),
                Err(Stop) => missing.push(t.clone()),
            },
            None => missing.push(t.clone()),
        }
    }
    if missing.is_empty() {
        Ok(Deduction::Proved {
            trace: d.trace,
            derived,
        })
    } else {
        let frontier = d.frontier();
        Ok(Deduction::Failed {
            trace: d.trace,
            frontier,
            missing,
        })
    }
}

/// Checks every step of a trace against its rule schema. Returns the list
/// of violations, empty when the trace is sound.
pub fn replay_trace(spec: &ChainSpec, trace: &DeductionTrace) -> Result<Vec<String>, Error> {
    let cone = Cone::new(spec.clone())?;
    let words = cone.group();
    let mut bad = Vec::new();
    for (i, step) in trace.steps.iter().enumerate() {
        let mut prem = Vec::new();
        for p in &step.premises {
            let ok = match *p {
                Premise::Seed(s) => s < trace.seed.len(),
                Premise::Step(s) => s < i,
            };
            match trace.conclusion(*p) {
                Some(w) if ok => prem.push(w.clone()),
                _ => bad.push(format!("step {i}: premise {p:?} is not available")),
            }
        }
        if prem.len() != step.premises.len() {
            continue;
        }
        let c = &step.conclusion;
        let valid = match step.rule {
            Rule::Root => match (step.exponent, prem.as_slice()) {
                (Some(n), [p]) if n != 0 => words.equal(&c.pow(n), p)?,
                _ => false,
            },
            Rule::RelationRewrite => prem.len() == 1 && words.equal(&prem[0], c)?,
            Rule::Inverse => prem.len() == 1 && words.equal(&prem[0].inverse(), c)?,
            Rule::Product => {
                let prod = prem.iter().fold(Word::identity(), |acc, w| acc.mul(w));
                !prem.is_empty() && words.equal(&prod, c)?
            }
            Rule::Sandwich => match (prem.as_slice(), step.support.as_slice()) {
                (
                    [top],
                    [Evidence::Certificate {
                        element: g,
                        value: vg,
                        certificate: cg,
                    }, Evidence::Certificate {
                        element: q,
                        value: vq,
                        certificate: cq,
                    }],
                ) => {
                    let rg = SignResult {
                        value: *vg,
                        certificate: Some(cg.clone()),
                        budget_used: 0,
                    };
                    let rq = SignResult {
                        value: *vq,
                        certificate: Some(cq.clone()),
                        budget_used: 0,
                    };
                    *vg == SignValue::Positive
                        && *vq == SignValue::Positive
                        && words.equal(g, c)?
                        && words.equal(q, &c.inverse().mul(top))?
                        && recheck(&cone, g, &rg)?
                        && recheck(&cone, q, &rq)?
                }
                _ => false,
            },
        };
        if !valid {
            bad.push(format!("step {i}: {:?} does not conclude {c}", step.rule));
        }
    }
    Ok(bad)
}

/// A condition instance: seed, targets and a label.
pub struct Condition {
    pub name: String,
    pub seed: Vec<Element>,
    pub targets: Vec<Element>,
}

/// (C1) `G_{m+1} ⊂ Γ^{A_m}`, (C2) `G_{m-1} ⊂ Γ^{φ(A_{m-1})}`, (C3)
/// `A_{m+1} ⊂ Γ^{a_{m,m}}`, with `A_m = ⟨g_m^{k_{m+1}}⟩` and
/// `φ(A_{m-1}) = ⟨g_m^{l_m}⟩`. Targets are generators.
pub fn conditions(spec: &ChainSpec, m: u32) -> Result<Vec<Condition>, Error> {
    let mi = m as i32;
    let e = |w: Word| Element::new(w);
    Ok(vec![
        Condition {
            name: format!(
                "C1 m={m}: g({})^{} generates a subgroup containing g({})",
                mi,
                spec.k(mi + 1),
                mi + 1
            ),
            seed: vec![e(Word::power(mi, spec.k(mi + 1)))],
            targets: vec![e(Word::gen(mi + 1))],
        },
        Condition {
            name: format!(
                "C2 m={m}: g({})^{} generates a subgroup containing g({})",
                mi,
                spec.l(mi),
                mi - 1
            ),
            seed: vec![e(Word::power(mi, spec.l(mi)))],
            targets: vec![e(Word::gen(mi - 1))],
        },
        Condition {
            name: format!(
                "C3 m={m}: a({m},{m}) generates a subgroup containing g({})^{}",
                mi + 1,
                spec.k(mi + 2)
            ),
            seed: vec![Element {
                word: cone_generator(spec, ConeGenId::new(mi, m)?)?,
                window: m,
            }],
            targets: vec![e(Word::power(mi + 1, spec.k(mi + 2)))],
        },
    ])
}

/// Runs the deduction for (C1)–(C3) at level `m`; each Pass carries its
/// trace, re-validated step by step.
pub fn replay_conditions(spec: &ChainSpec, m: u32, limits: Limits) -> Result<ProbeReport, Error> {
    let mut checks = Vec::new();
    for cond in conditions(spec, m)? {
        let d = deduce_containment(spec, &cond.seed, &cond.targets, limits)?;
        let problems = replay_trace(spec, d.trace())?;
        checks.push(deduction_check(cond.name, d, problems));
    }
    let mut budgets = std::collections::BTreeMap::new();
    budgets.insert("steps".to_string(), limits.steps);
    budgets.insert("sign".to_string(), limits.sign);
    budgets.insert("m".to_string(), m as u64);
    Ok(ProbeReport::new(checks, budgets))
}

fn deduction_check(name: String, d: Deduction, problems: Vec<String>) -> Check {
    let steps = d.trace().steps.len() as u64;
    match d {
        Deduction::Proved { trace, .. } if problems.is_empty() => Check::pass(
            name,
            vec![
                Evidence::Bound {
                    what: "trace steps".into(),
                    value: steps,
                },
                Evidence::Derivation { trace },
            ],
        ),
        Deduction::Proved { .. } => {
            Check::fail(name, problems.into_iter().map(|text| Evidence::Note { text }).collect())
        }
        Deduction::Failed { missing, frontier, .. } => {
            let mut ev: Vec<Evidence> = missing
                .into_iter()
                .map(|w| Evidence::Counterexample {
                    word: w,
                    detail: "not derived".into(),
                    certificate: None,
                })
                .collect();
            ev.push(Evidence::Bound {
                what: "frontier size".into(),
                value: frontier.len() as u64,
            });
            Check::inconclusive(name, ev)
        }
    }
}

/// First commutator `[g_i, g_j]`, `i < j`, that is not the identity,
/// certified by its sign. Adjacent levels near the base are tried first.
pub fn nonabelian_witness<O: SignOracle + ?Sized>(oracle: &O, levels: &[GenRef], budget: u64) -> Result<Check, Error> {
    let name = "(a) non-abelian witness";
    let mut pairs: Vec<(GenRef, GenRef)> = Vec::new();
    for &i in levels {
        for &j in levels {
            if i < j {
                pairs.push((i, j));
            }
        }
    }
    pairs.sort_by_key(|&(i, j)| (j - i, i.abs() + j.abs(), std::cmp::Reverse(i)));
    for (i, j) in pairs {
        let (gi, gj) = (Word::gen(i), Word::gen(j));
        let comm = gi.inverse().mul(&gj.inverse()).mul(&gi).mul(&gj);
        if oracle.words().is_identity(&comm)? {
            continue;
        }
        let s = oracle.sign(&Element::new(comm.clone()), budget)?;
        let mut ev = vec![Evidence::Note {
            text: format!("[g({i}),g({j})] = {comm} is not the identity"),
        }];
        if matches!(s.value, SignValue::Positive | SignValue::Negative) {
            ev.push(Evidence::Certificate {
                element: comm,
                value: s.value,
                certificate: s.certificate.unwrap_or_default(),
            });
        }
        return Ok(Check::pass(name, ev));
    }
    Ok(Check::fail(
        name,
        vec![Evidence::Note {
            text: "all listed generators commute".into(),
        }],
    ))
}

/// Evidence that the Conradian soul of `P̃` is trivial: a non-commuting
/// pair, and for each nontrivial element `c` of the radius ball on
/// `g(-1), g(0), g(1)` a derivation of `g(±horizon)` from `{c}`.
pub fn conradian_soul_evidence(
    spec: &ChainSpec,
    radius: u32,
    horizon: u32,
    limits: Limits,
) -> Result<ProbeReport, Error> {
    if radius == 0 {
        return Err(Error::Precondition("radius must be at least 1".into()));
    }
    let cone = Cone::new(spec.clone())?;
    let levels: Vec<GenRef> = (-(horizon as i32)..=horizon as i32).collect();
    let mut checks = vec![nonabelian_witness(&cone, &levels, limits.sign)?];
    let elements = ball(cone.group(), &[-1, 0, 1], radius)?;
    let targets = [
        Element::new(Word::gen(-(horizon as i32))),
        Element::new(Word::gen(horizon as i32)),
    ];
    let lim = Limits {
        horizon: Some(horizon.max(limits.horizon.unwrap_or(0))),
        ..limits
    };
    let mut failed = None;
    let mut undecided = 0u64;
    let mut longest = 0u64;
    for c in elements.iter().skip(1) {
        let d = deduce_containment(spec, &[Element::new(c.clone())], &targets, lim)?;
        let problems = replay_trace(spec, d.trace())?;
        longest = longest.max(d.trace().steps.len() as u64);
        match d {
            Deduction::Proved { .. } if problems.is_empty() => {}
            Deduction::Proved { .. } => {
                failed.get_or_insert((c.clone(), problems.join("; ")));
            }
            Deduction::Failed { .. } => undecided += 1,
        }
    }
    let name =
        format!("(b) every nontrivial element of the radius {radius} ball reaches g(-{horizon}) and g({horizon})");
    let counts = vec![
        Evidence::Bound {
            what: "ball elements".into(),
            value: elements.len() as u64 - 1,
        },
        Evidence::Bound {
            what: "longest trace".into(),
            value: longest,
        },
        Evidence::Bound {
            what: "horizon".into(),
            value: horizon as u64,
        },
    ];
    checks.push(match (failed, undecided) {
        (Some((c, detail)), _) => Check::fail(
            name,
            vec![Evidence::Counterexample {
                word: c,
                detail,
                certificate: None,
            }],
        ),
        (None, 0) => Check::pass(name, counts),
        (None, n) => {
            let mut ev = counts;
            ev.push(Evidence::Bound {
                what: "elements without a derivation".into(),
                value: n,
            });
            Check::inconclusive(name, ev)
        }
    });
    let mut budgets = std::collections::BTreeMap::new();
    budgets.insert("radius".to_string(), radius as u64);
    budgets.insert("horizon".to_string(), horizon as u64);
    budgets.insert("steps".to_string(), limits.steps);
    budgets.insert("sign".to_string(), limits.sign);
    Ok(ProbeReport::new(checks, budgets))
}

/// Replays every derivation carried by a report.
pub fn replay_report_traces(spec: &ChainSpec, report: &ProbeReport) -> Result<bool, Error> {
    for check in &report.checks {
        for ev in &check.evidence {
            if let Evidence::Derivation { trace } = ev {
                if !replay_trace(spec, trace)?.is_empty() {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
