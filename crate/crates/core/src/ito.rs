//! Ordered-group handles and their amalgamation along central cofinal
//! elements.
//!
//! A handle is a finite tree of infinite cyclic groups with a finitely
//! generated positive cone `⟨g_1, …, g_m⟩⁺`, listed in increasing order, and a
//! central element `z` with every `g_i < z`. Two handles amalgamate to
//! `X = G *_{z_G = z_H} H`, whose cone is generated by `x_i = g_i z_H⁻¹ h_1`
//! followed by `h_1, …, h_n`. Alternating amalgamations on the right and on
//! the left build the groups `G_(m)` of the chain construction.
//!
//! Equality is the tree normal form. Signs come from breadth-first
//! enumeration of the cone by factor count, certified by factorizations into
//! the listed generators `c(1), …, c(k)`.
//!
//! The degenerate cyclic handle `⟨z⟩` with `z` its own generator is admitted
//! as a control. Its checks are non-strict, and so are those of every
//! amalgam built from it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::chaingroup::{ball, Element};
use crate::cone::{CertGen, Comparison, ConeCertificate, SignResult, SignValue, Verdict};
use crate::orderprobes::{
    budgets, certified, cofinal_probe, counterexample, right_invariance_probe, Check, Evidence, ProbeReport,
    ProbeVerdict, SignOracle,
};
use crate::presentations::PresState;
use crate::rewriting::{TreeNormalizer, WordProblem};
use crate::words::{shortlex_compare, GenRef, Precedence, Word, WordError};
use crate::Error;

/// `(u, a, v, b)` meaning `u^a = v^b`.
pub type Edge = (GenRef, i64, GenRef, i64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HandleOptions {
    /// Cone entries scanned per sign query.
    pub budget: u64,
    /// Ball radius of the pair sample for right invariance of `z_H`.
    pub inv_radius: u32,
}

impl Default for HandleOptions {
    fn default() -> Self {
        HandleOptions {
            budget: 200_000,
            inv_radius: 1,
        }
    }
}

#[derive(Debug, Default)]
struct ConeTable {
    entries: Vec<(Word, ConeCertificate)>,
    index: HashMap<Word, usize>,
    frontier: Vec<usize>,
    /// `level_ends[k]` entries are products of at most `k + 1` generators.
    level_ends: Vec<usize>,
}

struct Parts {
    name: String,
    labels: BTreeMap<GenRef, String>,
    edges: Vec<Edge>,
    generators: Vec<Word>,
    anchor: (GenRef, i64),
    degenerate: bool,
    source: Option<Source>,
}

/// The factors of an amalgam, with the certificates in `X` of `h_1⁻¹ z`
/// (which turns `g_i` into `x_i h_1⁻¹ z`) and of `z`.
#[derive(Debug)]
struct Source {
    g: Arc<OrderedGroupHandle>,
    h: Arc<OrderedGroupHandle>,
    offset: GenRef,
    g_lift: ConeCertificate,
    z_cert: ConeCertificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    G,
    H,
}

/// A coset representative in `[1, z)` of one factor, in the coordinates of
/// `X`, with its certificate in the factor's generators.
struct Syllable {
    side: Side,
    rep: Word,
    cert: ConeCertificate,
}

/// A validated ordered group. Construction runs the centrality, positivity,
/// ordering and cofinality checks and keeps their report.
#[derive(Debug)]
pub struct OrderedGroupHandle {
    name: String,
    presentation: PresState,
    labels: BTreeMap<GenRef, String>,
    edges: Vec<Edge>,
    tree: TreeNormalizer,
    generators: Vec<Word>,
    central: Word,
    anchor: (GenRef, i64),
    degenerate: bool,
    source: Option<Source>,
    validation: ProbeReport,
    table: Mutex<ConeTable>,
}

/// `ℤ = ⟨g⟩` with cone `⟨g⟩⁺` and `z = g^N`.
pub fn make_z_handle(n: i64, opts: &HandleOptions) -> Result<OrderedGroupHandle, Error> {
    if n < 2 {
        return Err(Error::Precondition(format!(
            "z = g^{n} is not above g; N must be at least 2"
        )));
    }
    OrderedGroupHandle::build(
        Parts {
            name: format!("Z({n})"),
            labels: BTreeMap::from([(0, "g".to_string())]),
            edges: Vec::new(),
            generators: vec![Word::gen(0)],
            anchor: (0, n),
            degenerate: false,
            source: None,
        },
        opts,
    )
}

/// `⟨x, y | x^p = y^q⟩` with cone `⟨x^{-(p-1)} y, x⟩⁺` and `z = x^p`.
pub fn make_torus_handle(p: i64, q: i64, opts: &HandleOptions) -> Result<OrderedGroupHandle, Error> {
    if p < 2 || q < 2 {
        return Err(Error::Precondition(format!(
            "torus handle needs p, q >= 2, got ({p},{q})"
        )));
    }
    OrderedGroupHandle::build(
        Parts {
            name: format!("T({p},{q})"),
            labels: BTreeMap::from([(0, "x".to_string()), (1, "y".to_string())]),
            edges: vec![(0, p, 1, q)],
            generators: vec![Word::power(0, 1 - p).mul(&Word::gen(1)), Word::gen(0)],
            anchor: (0, p),
            degenerate: false,
            source: None,
        },
        opts,
    )
}

/// `⟨z⟩` with `z` as its own cone generator.
pub fn degenerate_cyclic_handle(opts: &HandleOptions) -> Result<OrderedGroupHandle, Error> {
    OrderedGroupHandle::build(
        Parts {
            name: "C".into(),
            labels: BTreeMap::from([(0, "g".to_string())]),
            edges: Vec::new(),
            generators: vec![Word::gen(0)],
            anchor: (0, 1),
            degenerate: true,
            source: None,
        },
        opts,
    )
}

impl OrderedGroupHandle {
    fn build(parts: Parts, opts: &HandleOptions) -> Result<Self, Error> {
        let vertices: Vec<GenRef> = parts.labels.keys().copied().collect();
        let tree = TreeNormalizer::from_edges(&vertices, &parts.edges)?;
        let relators = parts
            .edges
            .iter()
            .map(|&(u, a, v, b)| Word::power(u, a).mul(&Word::power(v, -b)))
            .collect();
        let presentation = PresState::new(vertices, relators)?;
        if parts.generators.is_empty() {
            return Err(Error::InvalidSpec("a handle needs at least one cone generator".into()));
        }
        let mut handle = OrderedGroupHandle {
            name: parts.name,
            presentation,
            labels: parts.labels,
            edges: parts.edges,
            tree,
            generators: parts.generators,
            central: Word::power(parts.anchor.0, parts.anchor.1),
            anchor: parts.anchor,
            degenerate: parts.degenerate,
            source: parts.source,
            validation: ProbeReport::new(Vec::new(), BTreeMap::new()),
            table: Mutex::new(ConeTable::default()),
        };
        handle.validation = handle.validate(opts.budget)?;
        if let Some(bad) = handle
            .validation
            .checks
            .iter()
            .find(|c| c.verdict != ProbeVerdict::Pass)
        {
            return Err(Error::Precondition(format!(
                "handle {}: {} is {:?}",
                handle.name, bad.name, bad.verdict
            )));
        }
        Ok(handle)
    }

    fn validate(&self, budget: u64) -> Result<ProbeReport, Error> {
        let z = Element::new(self.central.clone());
        let rel = if self.degenerate { "<=" } else { "<" };
        let mut checks = Vec::new();
        for (i, g) in self.generators.iter().enumerate() {
            let c = i + 1;
            let (lhs, rhs) = (self.central.mul(g), g.mul(&self.central));
            let ev = vec![Evidence::Identity {
                lhs: lhs.clone(),
                rhs: rhs.clone(),
            }];
            let name = format!("central: z c({c}) = c({c}) z");
            checks.push(if self.tree.equal(&lhs, &rhs)? {
                Check::pass(name, ev)
            } else {
                Check::fail(name, ev)
            });
            let g = Element::new(g.clone());
            checks.push(order_check(
                self,
                format!("positive: 1 < c({c})"),
                &Element::identity(),
                &g,
                false,
                budget,
            )?);
            checks.push(order_check(
                self,
                format!("cofinal: c({c}) {rel} z"),
                &g,
                &z,
                self.degenerate,
                budget,
            )?);
        }
        for (i, w) in self.generators.windows(2).enumerate() {
            let (a, b) = (Element::new(w[0].clone()), Element::new(w[1].clone()));
            checks.push(order_check(
                self,
                format!("ordered: c({}) {rel} c({})", i + 1, i + 2),
                &a,
                &b,
                self.degenerate,
                budget,
            )?);
        }
        Ok(ProbeReport::new(checks, budgets(&[("sign", budget)])))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn presentation(&self) -> &PresState {
        &self.presentation
    }

    pub fn labels(&self) -> &BTreeMap<GenRef, String> {
        &self.labels
    }

    pub fn vertices(&self) -> Vec<GenRef> {
        self.labels.keys().copied().collect()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn tree(&self) -> &TreeNormalizer {
        &self.tree
    }

    /// Cone generators in increasing order.
    pub fn generators(&self) -> &[Word] {
        &self.generators
    }

    pub fn central(&self) -> &Word {
        &self.central
    }

    /// The vertex `v` and exponent `a` with `z = v^a`.
    pub fn anchor(&self) -> (GenRef, i64) {
        self.anchor
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn validation(&self) -> &ProbeReport {
        &self.validation
    }

    /// The same handle with every vertex label passed through `f`.
    pub fn relabeled(mut self, f: impl Fn(&str) -> String) -> Self {
        for l in self.labels.values_mut() {
            *l = f(l);
        }
        self
    }

    /// A word in the vertex labels, such as `g h^-2`.
    pub fn render(&self, w: &Word) -> String {
        let parts: Vec<String> = w
            .letters()
            .iter()
            .map(|l| {
                let name = self
                    .labels
                    .get(&l.gen)
                    .cloned()
                    .unwrap_or_else(|| format!("g({})", l.gen));
                if l.exp == 1 {
                    name
                } else {
                    format!("{name}^{}", l.exp)
                }
            })
            .collect();
        parts.join(" ")
    }

    /// Parses whitespace-separated `label` or `label^k` tokens; `g(n)` names a
    /// vertex directly.
    pub fn parse(&self, s: &str) -> Result<Word, Error> {
        let by_name: HashMap<&str, GenRef> = self.labels.iter().map(|(v, l)| (l.as_str(), *v)).collect();
        let mut w = Word::identity();
        for tok in s.split_whitespace() {
            let (name, exp) = match tok.split_once('^') {
                Some((n, e)) => (n, e.parse::<i64>().map_err(|_| WordError::Parse(tok.to_string()))?),
                None => (tok, 1),
            };
            let letter = match by_name.get(name) {
                Some(&v) => Word::power(v, exp),
                None => Word::parse(tok)?,
            };
            if letter.letters().iter().any(|l| !self.labels.contains_key(&l.gen)) {
                return Err(Error::OutOfRange(format!("{tok} is not a vertex of {}", self.name)));
            }
            w = w.mul(&letter);
        }
        Ok(w)
    }

    /// Non-identity normal forms of the ball of `radius` over the vertices.
    pub fn sample_elements(&self, radius: u32) -> Result<Vec<Element>, Error> {
        Ok(ball(&self.tree, &self.vertices(), radius)?
            .into_iter()
            .skip(1)
            .map(Element::new)
            .collect())
    }

    /// Serializable description with words in the vertex labels.
    pub fn summary(&self) -> HandleSummary {
        HandleSummary {
            name: self.name.clone(),
            vertices: self.labels.values().cloned().collect(),
            relations: self
                .edges
                .iter()
                .map(|&(u, a, v, b)| {
                    format!(
                        "{} = {}",
                        self.render(&Word::power(u, a)),
                        self.render(&Word::power(v, b))
                    )
                })
                .collect(),
            cone: self.generators.iter().map(|g| self.render(g)).collect(),
            central: self.render(&self.central),
            degenerate: self.degenerate,
            validation: self.validation.clone(),
        }
    }

    /// The first `count` entries of the cone stream.
    pub fn enumerate(&self, count: usize) -> Result<Vec<(Word, ConeCertificate)>, Error> {
        let mut table = self.table.lock().expect("handle cone lock");
        while table.entries.len() < count {
            self.extend(&mut table)?;
        }
        Ok(table.entries[..count].to_vec())
    }

    /// Level by level: looks `e` and `e⁻¹` up among the products of at most
    /// `k + 1` generators, then splits them as `u·r` with both factors there.
    /// The budget counts split attempts; results do not depend on earlier
    /// queries.
    fn sign_enumerative(&self, nf: &Word, budget: u64) -> Result<SignResult, Error> {
        let targets = [
            (nf.clone(), SignValue::Positive),
            (self.tree.normal_form(&nf.inverse())?, SignValue::Negative),
        ];
        let mut table = self.table.lock().expect("handle cone lock");
        let mut used = 0u64;
        for k in 0.. {
            while table.level_ends.len() <= k {
                self.extend(&mut table)?;
            }
            let n = table.level_ends[k];
            let direct = targets
                .iter()
                .filter_map(|(t, v)| table.index.get(t).filter(|&&i| i < n).map(|&i| (i, *v)))
                .min_by_key(|p| p.0);
            if let Some((idx, value)) = direct {
                let certificate = Some(table.entries[idx].1.clone());
                return Ok(SignResult {
                    value,
                    certificate,
                    budget_used: used,
                });
            }
            if used + n as u64 > budget {
                break;
            }
            for (u, cu) in &table.entries[..n] {
                used += 1;
                for (t, value) in &targets {
                    let r = self.tree.normal_form(&u.inverse().mul(t))?;
                    if let Some(&j) = table.index.get(&r).filter(|&&j| j < n) {
                        let certificate = Some(cu.concat(&table.entries[j].1));
                        return Ok(SignResult {
                            value: *value,
                            certificate,
                            budget_used: used,
                        });
                    }
                }
            }
        }
        Ok(SignResult {
            value: SignValue::Unknown,
            certificate: None,
            budget_used: budget,
        })
    }
    /// Writes `w = r_1 ⋯ r_s z^k` with alternating factor representatives in
    /// `[1, z)`. Then `w > 1` iff `k` plus the number of `G`-to-`H` steps is
    /// nonnegative; the certificate pairs `-k` of those steps into factors
    /// `a' x_i (h_1⁻¹ b)`. `None` when a factor query is undecided or the
    /// certificate does not replay.
    fn sign_structural(
        &self,
        src: &Source,
        nf: &Word,
        budget: u64,
        used: &mut u64,
    ) -> Result<Option<SignResult>, Error> {
        let Some((syl, k)) = self.decompose(src, nf, budget, used)? else {
            return Ok(None);
        };
        let steps = syl
            .windows(2)
            .filter(|w| w[0].side == Side::G && w[1].side == Side::H)
            .count() as i64;
        let (value, target, syl, k) = if k + steps >= 0 {
            (SignValue::Positive, nf.clone(), syl, k)
        } else {
            let inv = self.tree.normal_form(&nf.inverse())?;
            let Some((syl, k)) = self.decompose(src, &inv, budget, used)? else {
                return Ok(None);
            };
            (SignValue::Negative, inv, syl, k)
        };
        let Some(cert) = self.assemble(src, &syl, k, budget, used)? else {
            return Ok(None);
        };
        if !self.tree.equal(&self.certificate_word(&cert)?, &target)? {
            return Ok(None);
        }
        Ok(Some(SignResult {
            value,
            certificate: Some(cert),
            budget_used: *used,
        }))
    }

    fn decompose(
        &self,
        src: &Source,
        w: &Word,
        budget: u64,
        used: &mut u64,
    ) -> Result<Option<(Vec<Syllable>, i64)>, Error> {
        let mut runs: Vec<(Side, Word)> = Vec::new();
        for l in w.letters() {
            let side = if src.g.labels.contains_key(&l.gen) {
                Side::G
            } else {
                Side::H
            };
            let letter = Word::power(l.gen, l.exp);
            match runs.last_mut() {
                Some((s, acc)) if *s == side => *acc = acc.mul(&letter),
                _ => runs.push((side, letter)),
            }
        }
        let mut stack: Vec<Syllable> = Vec::new();
        let mut k = 0i64;
        for (side, mut piece) in runs {
            if let Some(top) = stack.pop_if(|t| t.side == side) {
                piece = top.rep.mul(&piece);
            }
            let factor = if side == Side::G { &src.g } else { &src.h };
            let local = if side == Side::G {
                piece
            } else {
                piece.map_gens(|v| v - src.offset)
            };
            let Some((f, rep, cert)) = floor(factor, &local, budget, used)? else {
                return Ok(None);
            };
            k = k.checked_add(f).ok_or(Error::Overflow)?;
            if !rep.is_identity() {
                let rep = if side == Side::G {
                    rep
                } else {
                    rep.map_gens(|v| v + src.offset)
                };
                stack.push(Syllable { side, rep, cert });
            }
        }
        Ok(Some((stack, k)))
    }

    fn assemble(
        &self,
        src: &Source,
        syl: &[Syllable],
        k: i64,
        budget: u64,
        used: &mut u64,
    ) -> Result<Option<ConeCertificate>, Error> {
        let m = src.g.generators.len() as u32;
        let lift_h = |c: &ConeCertificate, out: &mut ConeCertificate| {
            for f in &c.factors {
                if let CertGen::Handle(j) = f.gen {
                    out.push_gen(CertGen::Handle(m + j), f.count);
                }
            }
        };
        let lift_g = |c: &ConeCertificate, out: &mut ConeCertificate| {
            for f in &c.factors {
                if let CertGen::Handle(i) = f.gen {
                    for _ in 0..f.count {
                        out.push_gen(CertGen::Handle(i), 1);
                        *out = out.concat(&src.g_lift);
                    }
                }
            }
        };
        let h1 = &src.h.generators[0];
        let mut out = ConeCertificate::default();
        let mut absorb = (-k).max(0);
        let mut i = 0;
        while i < syl.len() {
            let s = &syl[i];
            if absorb > 0 && s.side == Side::G && syl.get(i + 1).is_some_and(|t| t.side == Side::H) {
                let b = syl[i + 1].rep.map_gens(|v| v - src.offset);
                let hb = src.h.sign(&Element::new(h1.inverse().mul(&b)), budget)?;
                *used += hb.budget_used;
                if !matches!(hb.value, SignValue::Positive | SignValue::Zero) {
                    return Ok(None);
                }
                let mut prefix = s.cert.clone();
                let last = prefix.factors.last_mut().expect("representatives are nontrivial");
                let CertGen::Handle(gi) = last.gen else {
                    return Ok(None);
                };
                last.count -= 1;
                if last.count == 0 {
                    prefix.factors.pop();
                }
                lift_g(&prefix, &mut out);
                out.push_gen(CertGen::Handle(gi), 1);
                lift_h(&hb.certificate.unwrap_or_default(), &mut out);
                absorb -= 1;
                i += 2;
                continue;
            }
            match s.side {
                Side::G => lift_g(&s.cert, &mut out),
                Side::H => lift_h(&s.cert, &mut out),
            }
            i += 1;
        }
        for _ in 0..k.max(0) {
            out = out.concat(&src.z_cert);
        }
        Ok(Some(out))
    }

    /// Appends the next factor-count level, sorted shortlex by normal form.
    fn extend(&self, table: &mut ConeTable) -> Result<(), Error> {
        let mut fresh: BTreeMap<Word, ConeCertificate> = BTreeMap::new();
        let seeds: Vec<(Word, ConeCertificate)> = if table.entries.is_empty() {
            vec![(Word::identity(), ConeCertificate::default())]
        } else {
            table.frontier.iter().map(|&i| table.entries[i].clone()).collect()
        };
        for (w, cert) in seeds {
            for (i, g) in self.generators.iter().enumerate() {
                let nf = self.tree.normal_form(&w.mul(g))?;
                if nf.is_identity() || table.index.contains_key(&nf) || fresh.contains_key(&nf) {
                    continue;
                }
                let mut c = cert.clone();
                c.push_gen(CertGen::Handle(i as u32 + 1), 1);
                fresh.insert(nf, c);
            }
        }
        if fresh.is_empty() {
            return Err(Error::Precondition(format!(
                "cone enumeration of {} stalled",
                self.name
            )));
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
        table.level_ends.push(table.entries.len());
        Ok(())
    }
}

impl SignOracle for OrderedGroupHandle {
    /// Structural for amalgams, with the cone stream as fallback.
    fn sign(&self, e: &Element, budget: u64) -> Result<SignResult, Error> {
        let nf = self.tree.normal_form(&e.word)?;
        if nf.is_identity() {
            return Ok(SignResult {
                value: SignValue::Zero,
                certificate: None,
                budget_used: 0,
            });
        }
        let mut used = 0;
        if let Some(src) = &self.source {
            if let Some(r) = self.sign_structural(src, &nf, budget, &mut used)? {
                return Ok(r);
            }
        }
        let mut r = self.sign_enumerative(&nf, budget.saturating_sub(used))?;
        r.budget_used += used;
        Ok(r)
    }

    fn words(&self) -> &dyn WordProblem {
        &self.tree
    }

    fn certificate_word(&self, cert: &ConeCertificate) -> Result<Word, Error> {
        cert.word_with(|g| match g {
            CertGen::Handle(i) => self
                .generators
                .get((i as usize).wrapping_sub(1))
                .cloned()
                .ok_or_else(|| {
                    Error::OutOfRange(format!("c({i}) in a handle with {} generators", self.generators.len()))
                }),
            other => Err(Error::Unsupported(format!("{other} in a handle certificate"))),
        })
    }

    fn shift_invariant(&self, _: i32) -> bool {
        false
    }
}

/// `(k, z^{-k} p, certificate of z^{-k} p)` with `z^k ≤ p < z^{k+1}` in `f`.
fn floor(
    f: &OrderedGroupHandle,
    p: &Word,
    budget: u64,
    used: &mut u64,
) -> Result<Option<(i64, Word, ConeCertificate)>, Error> {
    let shifted = |k: i64| f.central.pow(-k).mul(p);
    let mut query = |k: i64| -> Result<SignResult, Error> {
        let r = f.sign(&Element::new(shifted(k)), budget)?;
        *used += r.budget_used;
        Ok(r)
    };
    let mut k = 0i64;
    let mut cur = query(k)?;
    loop {
        match cur.value {
            SignValue::Unknown => return Ok(None),
            SignValue::Negative => {
                k -= 1;
                cur = query(k)?;
            }
            SignValue::Positive | SignValue::Zero => {
                let next = query(k + 1)?;
                match next.value {
                    SignValue::Unknown => return Ok(None),
                    SignValue::Negative => break,
                    _ => {
                        k += 1;
                        cur = next;
                    }
                }
            }
        }
    }
    let rep = f.tree.normal_form(&shifted(k))?;
    Ok(Some((k, rep, cur.certificate.unwrap_or_default())))
}

/// `a < b`, or `a ≤ b` when `allow_equal`, as a check.
fn order_check<O: SignOracle + ?Sized>(
    o: &O,
    name: String,
    a: &Element,
    b: &Element,
    allow_equal: bool,
    budget: u64,
) -> Result<Check, Error> {
    let c: Comparison = o.compare(a, b, budget)?;
    let q = a.inverse().mul(b).word;
    Ok(match c.verdict {
        Verdict::Less => Check::pass(name, vec![certified(q, &c.sign)]),
        Verdict::Equal if allow_equal => Check::pass(
            name,
            vec![Evidence::Identity {
                lhs: a.word.clone(),
                rhs: b.word.clone(),
            }],
        ),
        Verdict::Unknown => Check::inconclusive(
            name,
            vec![Evidence::Bound {
                what: "sign budget".into(),
                value: budget,
            }],
        ),
        v => Check::fail(name, vec![counterexample(q, format!("comparison gave {v:?}"), &c.sign)]),
    })
}

/// Serializable view of a handle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HandleSummary {
    pub name: String,
    pub vertices: Vec<String>,
    pub relations: Vec<String>,
    pub cone: Vec<String>,
    pub central: String,
    pub degenerate: bool,
    pub validation: ProbeReport,
}

/// `X = G *_{z_G = z_H} H` with the factors it came from. Vertices of `G`
/// keep their names; those of `H` are shifted by a fixed offset.
#[derive(Debug, Clone)]
pub struct AmalgamHandle {
    handle: Arc<OrderedGroupHandle>,
    g: Arc<OrderedGroupHandle>,
    h: Arc<OrderedGroupHandle>,
    offset: GenRef,
    invariance: ProbeReport,
}

/// Amalgamates along `z_G = z_H`, after sampling right invariance of `z_H`
/// in `H`.
pub fn amalgamate(
    g: Arc<OrderedGroupHandle>,
    h: Arc<OrderedGroupHandle>,
    opts: &HandleOptions,
) -> Result<AmalgamHandle, Error> {
    let invariance = invariance_hypothesis(&h, opts)?;
    if invariance.verdict() != ProbeVerdict::Pass {
        return Err(Error::Precondition(format!(
            "right invariance of z in {} is {:?} on the sample",
            h.name,
            invariance.verdict()
        )));
    }
    let g_max = *g.labels.keys().next_back().expect("handles have vertices");
    let h_min = *h.labels.keys().next().expect("handles have vertices");
    let offset = g_max + 1 - h_min;
    let lift = |w: &Word| w.map_gens(|v| v + offset);

    let mut labels = g.labels.clone();
    for (&v, l) in &h.labels {
        let mut name = l.clone();
        while labels.values().any(|x| *x == name) {
            name.push('\'');
        }
        labels.insert(v + offset, name);
    }
    let mut edges = g.edges.clone();
    edges.extend(h.edges.iter().map(|&(u, a, v, b)| (u + offset, a, v + offset, b)));
    edges.push((g.anchor.0, g.anchor.1, h.anchor.0 + offset, h.anchor.1));

    let tail = lift(&h.central).inverse().mul(&lift(&h.generators[0]));
    let mut generators: Vec<Word> = g.generators.iter().map(|gi| gi.mul(&tail)).collect();
    generators.extend(h.generators.iter().map(lift));

    let m = g.generators.len() as u32;
    let lifted = |w: Word| -> Result<ConeCertificate, Error> {
        let r = h.sign(&Element::new(w), opts.budget)?;
        if !matches!(r.value, SignValue::Positive | SignValue::Zero) {
            return Err(Error::Precondition(format!(
                "a lifting element has sign {:?} in {}",
                r.value, h.name
            )));
        }
        let mut out = ConeCertificate::default();
        for f in r.certificate.unwrap_or_default().factors {
            if let CertGen::Handle(j) = f.gen {
                out.push_gen(CertGen::Handle(m + j), f.count);
            }
        }
        Ok(out)
    };
    let source = Source {
        g_lift: lifted(h.generators[0].inverse().mul(&h.central))?,
        z_cert: lifted(h.central.clone())?,
        g: g.clone(),
        h: h.clone(),
        offset,
    };
    let handle = OrderedGroupHandle::build(
        Parts {
            name: format!("({} * {})", g.name, h.name),
            labels,
            edges,
            generators,
            anchor: (h.anchor.0 + offset, h.anchor.1),
            degenerate: g.degenerate || h.degenerate,
            source: Some(source),
        },
        opts,
    )?;
    Ok(AmalgamHandle {
        handle: Arc::new(handle),
        g,
        h,
        offset,
        invariance,
    })
}

/// Right invariance of `z_H` on all pairs from a small ball of `H`.
fn invariance_hypothesis(h: &OrderedGroupHandle, opts: &HandleOptions) -> Result<ProbeReport, Error> {
    let sample = h.sample_elements(opts.inv_radius)?;
    let pairs = all_pairs(&sample, 16);
    right_invariance_probe(h, &Element::new(h.central.clone()), &pairs, opts.budget)
}

fn all_pairs(sample: &[Element], cap: usize) -> Vec<(Element, Element)> {
    let mut out = Vec::new();
    for (i, a) in sample.iter().enumerate() {
        for b in &sample[i + 1..] {
            out.push((a.clone(), b.clone()));
        }
    }
    out.truncate(cap);
    out
}

impl AmalgamHandle {
    pub fn handle(&self) -> &Arc<OrderedGroupHandle> {
        &self.handle
    }

    pub fn g(&self) -> &Arc<OrderedGroupHandle> {
        &self.g
    }

    pub fn h(&self) -> &Arc<OrderedGroupHandle> {
        &self.h
    }

    /// `x_1, …, x_m, h_1, …, h_n` as words of `X`.
    pub fn new_generators(&self) -> &[Word] {
        &self.handle.generators
    }

    /// The sampled right-invariance report for `z_H`.
    pub fn invariance(&self) -> &ProbeReport {
        &self.invariance
    }

    pub fn embed_g(&self, w: &Word) -> Word {
        w.clone()
    }

    pub fn embed_h(&self, w: &Word) -> Word {
        w.map_gens(|v| v + self.offset)
    }

    /// Names `x_1, …, x_m, h_1, …, h_n` of the new generators.
    pub fn generator_names(&self) -> Vec<String> {
        let m = self.g.generators.len();
        (0..self.handle.generators.len())
            .map(|i| {
                if i < m {
                    format!("x_{}", i + 1)
                } else {
                    format!("h_{}", i + 1 - m)
                }
            })
            .collect()
    }
}

impl fmt::Display for AmalgamHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.handle.name)
    }
}

/// Checks `1 < x_1 < … < x_m < h_1 < … < h_n < z`, cofinality of `z` on the
/// generators, their inverses and the unit ball, and right invariance of `z`
/// on pairs from the unit ball.
pub fn verify_ito_chain(x: &AmalgamHandle, budget: u64) -> Result<ProbeReport, Error> {
    let hd = &x.handle;
    let rel = if hd.degenerate { "<=" } else { "<" };
    let mut names = vec!["1".to_string()];
    names.extend(x.generator_names());
    names.push("z".into());
    let mut chain = vec![Element::identity()];
    chain.extend(hd.generators.iter().cloned().map(Element::new));
    let z = Element::new(hd.central.clone());
    chain.push(z.clone());

    let mut checks = Vec::new();
    for i in 0..chain.len() - 1 {
        let strict = i == 0;
        let r = if strict { "<" } else { rel };
        let name = format!("chain {i:02}: {} {r} {}", names[i], names[i + 1]);
        checks.push(order_check(
            hd.as_ref(),
            name,
            &chain[i],
            &chain[i + 1],
            !strict && hd.degenerate,
            budget,
        )?);
    }

    let ball = hd.sample_elements(1)?;
    let mut samples: Vec<Element> = hd.generators.iter().cloned().map(Element::new).collect();
    samples.extend(hd.generators.iter().map(|g| Element::new(g.inverse())));
    samples.extend(ball.iter().cloned());
    let cofinal = cofinal_probe(hd.as_ref(), &z, &samples, 8, budget)?;
    let invariance = right_invariance_probe(hd.as_ref(), &z, &all_pairs(&ball, 12), budget)?;
    checks.extend(prefixed("cofinal", cofinal.checks));
    checks.extend(prefixed("right-invariant", invariance.checks));
    Ok(ProbeReport::new(checks, budgets(&[("sign", budget), ("M_max", 8)])))
}

fn prefixed(prefix: &str, checks: Vec<Check>) -> impl Iterator<Item = Check> + '_ {
    checks.into_iter().map(move |mut c| {
        c.name = format!("{prefix} {}", c.name);
        c
    })
}

/// For consecutive pairs from a ball of each factor: the comparison in the
/// factor agrees with the comparison of the images in `X`.
pub fn order_preservation_probe(x: &AmalgamHandle, radius: u32, budget: u64) -> Result<ProbeReport, Error> {
    let mut checks = Vec::new();
    for (side, factor) in [("G", &x.g), ("H", &x.h)] {
        let sample = factor.sample_elements(radius)?;
        for (idx, pair) in sample.windows(2).take(12).enumerate() {
            let (a, b) = (&pair[0], &pair[1]);
            let name = format!(
                "{side} pair {idx:03}: {} , {}",
                factor.render(&a.word),
                factor.render(&b.word)
            );
            let embed = |e: &Element| {
                Element::new(if side == "G" {
                    x.embed_g(&e.word)
                } else {
                    x.embed_h(&e.word)
                })
            };
            let before = factor.compare(a, b, budget)?;
            let after = x.handle.compare(&embed(a), &embed(b), budget)?;
            let q0 = a.inverse().mul(b).word;
            let q1 = embed(a).inverse().mul(&embed(b)).word;
            checks.push(
                if before.verdict == Verdict::Unknown || after.verdict == Verdict::Unknown {
                    Check::inconclusive(
                        name,
                        vec![Evidence::Bound {
                            what: "sign budget".into(),
                            value: budget,
                        }],
                    )
                } else if before.verdict == after.verdict {
                    Check::pass(name, vec![certified(q0, &before.sign), certified(q1, &after.sign)])
                } else {
                    let detail = format!(
                        "{:?} in the factor and {:?} in the amalgam",
                        before.verdict, after.verdict
                    );
                    Check::fail(
                        name,
                        vec![certified(q0, &before.sign), counterexample(q1, detail, &after.sign)],
                    )
                },
            );
        }
    }
    Ok(ProbeReport::new(
        checks,
        budgets(&[("sign", budget), ("radius", radius as u64)]),
    ))
}

/// Positivity of the factors `h_1⁻¹ z`, `g_1⁻¹ g_2` and `z h_2 z⁻¹` of `X`.
/// A factor of rank one has no `g_2` or `h_2`; its check is inconclusive.
pub fn claim_six_factors(x: &AmalgamHandle, budget: u64) -> Result<ProbeReport, Error> {
    let hd = x.handle.as_ref();
    let z = hd.central.clone();
    let gs: Vec<Word> = x.g.generators.iter().map(|w| x.embed_g(w)).collect();
    let hs: Vec<Word> = x.h.generators.iter().map(|w| x.embed_h(w)).collect();
    let mut checks = Vec::new();
    let one = Element::identity();
    let h1z = Element::new(hs[0].inverse().mul(&z));
    checks.push(order_check(hd, "factor h_1^-1 z".into(), &one, &h1z, false, budget)?);
    let rank_one = |what: &str, side: &str| {
        Check::inconclusive(
            format!("factor {what}"),
            vec![Evidence::Note {
                text: format!("{side} has rank one; the factor does not exist"),
            }],
        )
    };
    checks.push(match gs.get(1) {
        Some(g2) => order_check(
            hd,
            "factor g_1^-1 g_2".into(),
            &one,
            &Element::new(gs[0].inverse().mul(g2)),
            false,
            budget,
        )?,
        None => rank_one("g_1^-1 g_2", "G"),
    });
    checks.push(match hs.get(1) {
        Some(h2) => order_check(
            hd,
            "factor z h_2 z^-1".into(),
            &one,
            &Element::new(z.mul(h2).mul(&z.inverse())),
            false,
            budget,
        )?,
        None => rank_one("z h_2 z^-1", "H"),
    });
    Ok(ProbeReport::new(checks, budgets(&[("sign", budget)])))
}

/// A tracked minimal generator `p(j)` or `p'(j)`, in the final coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tracked {
    pub label: String,
    pub word: Word,
    pub rendered: String,
}

/// `G_(m)` with every intermediate amalgam and the minimal-generator record.
#[derive(Debug, Clone)]
pub struct ChainIteration {
    pub handle: Arc<OrderedGroupHandle>,
    /// `G'_(0), G_(1), G'_(1), …` in construction order.
    pub stages: Vec<AmalgamHandle>,
    pub minimal: Vec<Tracked>,
    /// The recursion identities and the step-by-step comparisons.
    pub report: ProbeReport,
}

/// Builds `G_(m)` from `G_(0) = family(0)`: first `G'_(j) = G_(j) * family(j+1)`,
/// then `G_(j+1) = family(-j-1) * G'_(j)`. Tracks the smallest cone generator
/// `p` through `p'(j) = p(j) z⁻¹ g_1` and `p(j+1) = g_1 z⁻¹ p'(j)`, and checks
/// each step is strict unless the new factor is degenerate, where it is
/// stationary.
pub fn iterate_chain(
    family: &dyn Fn(i32) -> Result<Arc<OrderedGroupHandle>, Error>,
    m: u32,
    opts: &HandleOptions,
) -> Result<ChainIteration, Error> {
    let mut cur = family(0)?;
    let mut tracked: Vec<(String, Word)> = vec![("p(0)".into(), cur.generators[0].clone())];
    let mut stages = Vec::new();
    let mut checks = Vec::new();
    for j in 0..m {
        let right = family(j as i32 + 1)?;
        let prime = amalgamate(cur.clone(), right.clone(), opts)?;
        let p = tracked.last().expect("p(0) is tracked").1.clone();
        let p_prime = prime.handle.generators[0].clone();
        let expected = p
            .mul(&prime.embed_h(&right.central).inverse())
            .mul(&prime.embed_h(&right.generators[0]));
        checks.push(identity_check(
            &prime.handle,
            format!("level {j}: p'({j}) = p({j}) z^-1 g_1"),
            &p_prime,
            &expected,
        )?);
        checks.push(step_check(
            &prime.handle,
            format!("p'({j})"),
            &p_prime,
            format!("p({j})"),
            &p,
            right.degenerate,
            j,
            opts,
        )?);
        tracked.push((format!("p'({j})"), p_prime.clone()));

        let left = family(-(j as i32) - 1)?;
        let outer = amalgamate(left.clone(), prime.handle.clone(), opts)?;
        for t in &mut tracked {
            t.1 = outer.embed_h(&t.1);
        }
        let p_prime = outer.embed_h(&p_prime);
        let p_next = outer.handle.generators[0].clone();
        let expected = left.generators[0].mul(&outer.handle.central.inverse()).mul(&p_prime);
        let k = j + 1;
        checks.push(identity_check(
            &outer.handle,
            format!("level {j}: p({k}) = g_1 z^-1 p'({j})"),
            &p_next,
            &expected,
        )?);
        checks.push(step_check(
            &outer.handle,
            format!("p({k})"),
            &p_next,
            format!("p'({j})"),
            &p_prime,
            left.degenerate,
            j,
            opts,
        )?);
        tracked.push((format!("p({k})"), p_next));
        stages.push(prime);
        cur = outer.handle.clone();
        stages.push(outer);
    }
    let minimal = tracked
        .into_iter()
        .map(|(label, word)| Tracked {
            rendered: cur.render(&word),
            label,
            word,
        })
        .collect();
    let report = ProbeReport::new(checks, budgets(&[("sign", opts.budget), ("m", m as u64)]));
    Ok(ChainIteration {
        handle: cur,
        stages,
        minimal,
        report,
    })
}

fn identity_check(h: &OrderedGroupHandle, name: String, lhs: &Word, rhs: &Word) -> Result<Check, Error> {
    let ev = vec![Evidence::Identity {
        lhs: lhs.clone(),
        rhs: rhs.clone(),
    }];
    Ok(if h.tree.equal(lhs, rhs)? {
        Check::pass(name, ev)
    } else {
        Check::fail(name, ev)
    })
}

/// `new < old` when the new factor is proper, `new = old` when degenerate.
#[allow(clippy::too_many_arguments)]
fn step_check(
    h: &OrderedGroupHandle,
    new_label: String,
    new: &Word,
    old_label: String,
    old: &Word,
    degenerate: bool,
    level: u32,
    opts: &HandleOptions,
) -> Result<Check, Error> {
    let (a, b) = (Element::new(new.clone()), Element::new(old.clone()));
    if !degenerate {
        return order_check(
            h,
            format!("level {level}: {new_label} < {old_label}"),
            &a,
            &b,
            false,
            opts.budget,
        );
    }
    let name = format!("level {level}: {new_label} = {old_label}");
    let c = h.compare(&a, &b, opts.budget)?;
    Ok(match c.verdict {
        Verdict::Equal => Check::pass(
            name,
            vec![Evidence::Identity {
                lhs: new.clone(),
                rhs: old.clone(),
            }],
        ),
        Verdict::Unknown => Check::inconclusive(
            name,
            vec![Evidence::Bound {
                what: "sign budget".into(),
                value: opts.budget,
            }],
        ),
        v => Check::fail(
            name,
            vec![counterexample(
                a.inverse().mul(&b).word,
                format!("comparison gave {v:?}"),
                &c.sign,
            )],
        ),
    })
}

/// A handle as configuration data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HandleDescriptor {
    /// `ℤ` with `z = g^n`.
    Z {
        n: i64,
    },
    Torus {
        p: i64,
        q: i64,
    },
    /// The degenerate `⟨z⟩`.
    Cyclic,
    AmalgamOf {
        g: Box<HandleDescriptor>,
        h: Box<HandleDescriptor>,
    },
}

impl HandleDescriptor {
    pub fn build(&self, opts: &HandleOptions) -> Result<Arc<OrderedGroupHandle>, Error> {
        Ok(match self {
            HandleDescriptor::Z { n } => Arc::new(make_z_handle(*n, opts)?),
            HandleDescriptor::Torus { p, q } => Arc::new(make_torus_handle(*p, *q, opts)?),
            HandleDescriptor::Cyclic => Arc::new(degenerate_cyclic_handle(opts)?),
            HandleDescriptor::AmalgamOf { g, h } => amalgamate(g.build(opts)?, h.build(opts)?, opts)?.handle,
        })
    }
}

/// The family `n ↦ G_n`: `levels[n]` where given, else `default`. Vertex
/// labels get the suffix `_n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyDescriptor {
    pub default: HandleDescriptor,
    #[serde(default)]
    pub levels: BTreeMap<i32, HandleDescriptor>,
}

impl FamilyDescriptor {
    pub fn handle(&self, n: i32, opts: &HandleOptions) -> Result<Arc<OrderedGroupHandle>, Error> {
        let d = self.levels.get(&n).unwrap_or(&self.default);
        let built = Arc::try_unwrap(d.build(opts)?).map_err(|_| Error::Precondition("shared handle".into()))?;
        Ok(Arc::new(built.relabeled(|l| format!("{l}_{n}"))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orderprobes::recheck;

    fn opts() -> HandleOptions {
        HandleOptions::default()
    }

    fn el(h: &OrderedGroupHandle, s: &str) -> Element {
        Element::new(h.parse(s).unwrap())
    }

    #[test]
    fn z_handle_examples() {
        let h = make_z_handle(2, &opts()).unwrap();
        assert_eq!(h.render(h.central()), "g^2");
        let q = Element::new(h.generators()[0].inverse().mul(h.central()));
        assert_eq!(h.sign(&q, 100).unwrap().value, SignValue::Positive);
        assert_eq!(h.render(make_z_handle(3, &opts()).unwrap().central()), "g^3");
        assert!(matches!(make_z_handle(1, &opts()), Err(Error::Precondition(_))));
        assert_eq!(h.validation().verdict(), ProbeVerdict::Pass);
    }

    #[test]
    fn torus_handle_examples() {
        let t = make_torus_handle(2, 3, &opts()).unwrap();
        assert_eq!(t.render(t.central()), "x^2");
        assert_eq!(t.summary().relations, vec!["x^2 = y^3"]);
        let z = Element::new(t.central().clone());
        for g in ["x", "x^-1 y"] {
            let q = el(&t, g).inverse().mul(&z);
            let s = t.sign(&q, 10_000).unwrap();
            assert_eq!(s.value, SignValue::Positive, "{g}");
            assert!(recheck(&t, &q.word, &s).unwrap());
        }
        assert!(make_torus_handle(1, 3, &opts()).is_err());
        assert!(make_torus_handle(2, 1, &opts()).is_err());
    }

    #[test]
    fn sign_is_certified_and_antisymmetric() {
        let t = make_torus_handle(2, 3, &opts()).unwrap();
        for e in t.sample_elements(2).unwrap() {
            let s = t.sign(&e, 100_000).unwrap();
            assert!(matches!(s.value, SignValue::Positive | SignValue::Negative), "{e}");
            assert!(recheck(&t, &e.word, &s).unwrap());
            assert_eq!(t.sign(&e.inverse(), 100_000).unwrap().value, s.value.negate());
        }
    }

    #[test]
    fn trefoil_from_two_z_handles() {
        let h = make_z_handle(3, &opts()).unwrap().relabeled(|_| "h".into());
        let x = amalgamate(Arc::new(make_z_handle(2, &opts()).unwrap()), Arc::new(h), &opts()).unwrap();
        let hd = x.handle();
        assert_eq!(hd.summary().relations, vec!["g^2 = h^3"]);
        let cone: Vec<String> = x.new_generators().iter().map(|w| hd.render(w)).collect();
        assert_eq!(cone, vec!["g h^-2", "h"]);
        assert_eq!(hd.render(hd.central()), "h^3");
        assert!(hd.tree().equal(&hd.parse("g^2").unwrap(), hd.central()).unwrap());
        let r = verify_ito_chain(&x, 100_000).unwrap();
        assert_eq!(r.verdict(), ProbeVerdict::Pass, "{r:#?}");
        for name in ["chain 00: 1 < x_1", "chain 01: x_1 < h_1", "chain 02: h_1 < z"] {
            assert_eq!(r.check(name).unwrap().verdict, ProbeVerdict::Pass, "{name}");
        }
        assert_eq!(
            order_preservation_probe(&x, 2, 100_000).unwrap().verdict(),
            ProbeVerdict::Pass
        );
    }

    #[test]
    fn trefoil_with_z_handle_relation() {
        let t = Arc::new(make_torus_handle(2, 3, &opts()).unwrap());
        let x = amalgamate(t, Arc::new(make_z_handle(2, &opts()).unwrap()), &opts()).unwrap();
        assert!(x.handle().summary().relations.contains(&"x^2 = g^2".to_string()));
        let r = verify_ito_chain(&x, 200_000).unwrap();
        assert_eq!(r.verdict(), ProbeVerdict::Pass, "{r:#?}");
    }

    #[test]
    fn trefoil_pair_chain() {
        let t = || Arc::new(make_torus_handle(2, 3, &opts()).unwrap());
        let x = amalgamate(t(), t(), &opts()).unwrap();
        let names: Vec<String> = x.new_generators().iter().map(|w| x.handle().render(w)).collect();
        assert_eq!(names, vec!["x^-1 y x'^-3 y'", "x x'^-3 y'", "x'^-1 y'", "x'"]);
        let r = verify_ito_chain(&x, 500_000).unwrap();
        assert_eq!(r.verdict(), ProbeVerdict::Pass, "{r:#?}");
        let six = claim_six_factors(&x, 200_000).unwrap();
        assert_eq!(six.verdict(), ProbeVerdict::Pass, "{six:#?}");
    }

    #[test]
    fn structural_sign_agrees_with_enumeration() {
        let o = opts();
        let small = amalgamate(
            Arc::new(make_z_handle(2, &o).unwrap()),
            Arc::new(make_z_handle(3, &o).unwrap()),
            &o,
        )
        .unwrap();
        let mixed = amalgamate(
            Arc::new(make_torus_handle(2, 3, &o).unwrap()),
            Arc::new(make_z_handle(2, &o).unwrap()),
            &o,
        )
        .unwrap();
        for x in [small, mixed] {
            let hd = x.handle();
            let mut decided = 0;
            for e in hd.sample_elements(3).unwrap() {
                let s = hd.sign(&e, 100_000).unwrap();
                assert!(recheck(hd.as_ref(), &e.word, &s).unwrap(), "{e}");
                let nf = hd.tree().normal_form(&e.word).unwrap();
                let en = hd.sign_enumerative(&nf, 20_000).unwrap();
                if en.value != SignValue::Unknown {
                    assert_eq!(en.value, s.value, "{e}");
                    decided += 1;
                }
            }
            assert!(decided > 20, "{decided}");
        }
    }

    #[test]
    fn claim_six_flags_rank_one() {
        let x = amalgamate(
            Arc::new(make_z_handle(2, &opts()).unwrap()),
            Arc::new(make_z_handle(3, &opts()).unwrap()),
            &opts(),
        )
        .unwrap();
        let r = claim_six_factors(&x, 10_000).unwrap();
        assert_eq!(r.check("factor h_1^-1 z").unwrap().verdict, ProbeVerdict::Pass);
        assert_eq!(
            r.check("factor g_1^-1 g_2").unwrap().verdict,
            ProbeVerdict::Inconclusive
        );
        assert_eq!(
            r.check("factor z h_2 z^-1").unwrap().verdict,
            ProbeVerdict::Inconclusive
        );
    }

    #[test]
    fn cofinal_on_trefoil() {
        let t = make_torus_handle(2, 3, &opts()).unwrap();
        let z = Element::new(t.central().clone());
        let r = cofinal_probe(&t, &z, &[el(&t, "x"), el(&t, "x^-1 y")], 8, 10_000).unwrap();
        assert_eq!(r.verdict(), ProbeVerdict::Pass);
        let least: Vec<u64> = r
            .checks
            .iter()
            .map(|c| match c.evidence[0] {
                Evidence::Bound { value, .. } => value,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(least, vec![1, 1]);
    }

    #[test]
    fn non_central_candidate_in_trefoil() {
        let t = make_torus_handle(2, 3, &opts()).unwrap();
        let pairs = all_pairs(&t.sample_elements(1).unwrap(), 16);
        let r = right_invariance_probe(&t, &el(&t, "y"), &pairs, 10_000).unwrap();
        assert_eq!(r.verdict(), ProbeVerdict::Fail);
        let central = right_invariance_probe(&t, &el(&t, "x^2"), &pairs, 10_000).unwrap();
        assert_eq!(central.verdict(), ProbeVerdict::Pass);
    }

    #[test]
    fn iterate_chain_level_zero_is_unchanged() {
        let family = |n: i32| {
            FamilyDescriptor {
                default: HandleDescriptor::Z { n: 2 },
                levels: BTreeMap::new(),
            }
            .handle(n, &opts())
        };
        let it = iterate_chain(&family, 0, &opts()).unwrap();
        assert!(it.stages.is_empty());
        assert_eq!(it.handle.summary().cone, vec!["g_0"]);
        assert_eq!(it.minimal.len(), 1);
    }

    #[test]
    fn iterate_chain_strictly_decreasing() {
        let fam = FamilyDescriptor {
            default: HandleDescriptor::Z { n: 2 },
            levels: BTreeMap::from([(1, HandleDescriptor::Z { n: 3 })]),
        };
        let family = |n: i32| fam.handle(n, &opts());
        let it = iterate_chain(&family, 1, &opts()).unwrap();
        assert_eq!(it.report.verdict(), ProbeVerdict::Pass, "{:#?}", it.report);
        let labels: Vec<&str> = it.minimal.iter().map(|t| t.label.as_str()).collect();
        assert_eq!(labels, vec!["p(0)", "p'(0)", "p(1)"]);
        assert!(it.report.check("level 0: p'(0) < p(0)").is_some());
        assert!(it.report.check("level 0: p(1) < p'(0)").is_some());
        assert_eq!(it.stages.len(), 2);
        assert_eq!(it.minimal[1].rendered, "g_0 g_1^-2");
    }

    #[test]
    fn iterate_chain_deeper_levels() {
        let fam = FamilyDescriptor {
            default: HandleDescriptor::Torus { p: 2, q: 3 },
            levels: BTreeMap::from([(0, HandleDescriptor::Z { n: 2 }), (-1, HandleDescriptor::Z { n: 3 })]),
        };
        let family = |n: i32| fam.handle(n, &opts());
        let it = iterate_chain(&family, 3, &opts()).unwrap();
        assert_eq!(it.report.verdict(), ProbeVerdict::Pass, "{:#?}", it.report);
        assert_eq!(it.minimal.len(), 7);
        assert_eq!(it.handle.generators().len(), 12);
        let last = it.stages.last().unwrap();
        assert_eq!(verify_ito_chain(last, 200_000).unwrap().verdict(), ProbeVerdict::Pass);
    }

    #[test]
    fn iterate_chain_degenerate_is_stationary() {
        let fam = FamilyDescriptor {
            default: HandleDescriptor::Cyclic,
            levels: BTreeMap::new(),
        };
        let family = |n: i32| fam.handle(n, &opts());
        let it = iterate_chain(&family, 1, &opts()).unwrap();
        assert_eq!(it.report.verdict(), ProbeVerdict::Pass, "{:#?}", it.report);
        assert!(it.report.check("level 0: p'(0) = p(0)").is_some());
        assert!(it.report.check("level 0: p(1) = p'(0)").is_some());
    }

    #[test]
    fn one_proper_factor_gives_one_strict_step() {
        let fam = FamilyDescriptor {
            default: HandleDescriptor::Cyclic,
            levels: BTreeMap::from([(1, HandleDescriptor::Torus { p: 2, q: 3 })]),
        };
        let family = |n: i32| fam.handle(n, &opts());
        let it = iterate_chain(&family, 1, &opts()).unwrap();
        assert_eq!(it.report.verdict(), ProbeVerdict::Pass, "{:#?}", it.report);
        assert!(it.report.check("level 0: p'(0) < p(0)").is_some());
        assert!(it.report.check("level 0: p(1) = p'(0)").is_some());
    }

    #[test]
    fn descriptor_round_trip() {
        let d = HandleDescriptor::AmalgamOf {
            g: Box::new(HandleDescriptor::Z { n: 2 }),
            h: Box::new(HandleDescriptor::Torus { p: 2, q: 3 }),
        };
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(
            s,
            r#"{"kind":"amalgam-of","g":{"kind":"z","n":2},"h":{"kind":"torus","p":2,"q":3}}"#
        );
        assert_eq!(serde_json::from_str::<HandleDescriptor>(&s).unwrap(), d);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn trefoil_sign_replays(pairs in prop::collection::vec((0i32..2, -3i64..=3), 1..5)) {
                let t = make_torus_handle(2, 3, &HandleOptions::default()).unwrap();
                let e = Element::new(Word::from_pairs(pairs));
                let s = t.sign(&e, 200_000).unwrap();
                prop_assume!(s.value != SignValue::Unknown);
                prop_assert!(recheck(&t, &e.word, &s).unwrap());
                let inv = t.sign(&e.inverse(), 200_000).unwrap();
                prop_assert_eq!(inv.value, s.value.negate());
            }

            #[test]
            fn amalgam_preserves_factor_order(pairs in prop::collection::vec((0i32..2, -2i64..=2), 1..4)) {
                let o = HandleOptions::default();
                let t = Arc::new(make_torus_handle(2, 3, &o).unwrap());
                let x = amalgamate(t.clone(), Arc::new(make_z_handle(2, &o).unwrap()), &o).unwrap();
                let e = Element::new(Word::from_pairs(pairs));
                let s = t.sign(&e, 200_000).unwrap();
                let sx = x.handle().sign(&Element::new(x.embed_g(&e.word)), 200_000).unwrap();
                prop_assume!(s.value != SignValue::Unknown && sx.value != SignValue::Unknown);
                prop_assert_eq!(s.value, sx.value);
            }
        }
    }
}
