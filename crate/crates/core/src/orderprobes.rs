//! Executable checks of ordering properties: the Dehornoy inequalities of the
//! chain cones, discreteness of each `P_(m)` and density of `P̃`, Conradian,
//! Archimedean and cofinality searches, right invariance, the rational
//! oracle for cyclic towers, the two HNN orderings, and the conjugate
//! witness search behind non-isolation.
//!
//! Archimedean is read in its standard form: for positive `g, h` some `n`
//! gives `h < gⁿ`. The source definition names `g₁, g₂` and then uses `g, h`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaingroup::{ball, hnn_inverse, hnn_mul, shift, CyclicTower, Element, HnnElement};
use crate::cone::{CertGen, Comparison, Cone, ConeCertificate, SignResult, SignValue, Verdict};
use crate::convexity::DeductionTrace;
use crate::presentations::{cone_generator, ChainSpec, ConeGenId};
use crate::rewriting::WordProblem;
use crate::words::{GenRef, Word};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeVerdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Supporting data attached to a check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Evidence {
    /// `certificate` factors `element` (value positive) or its inverse (negative).
    Certificate {
        element: Word,
        value: SignValue,
        certificate: ConeCertificate,
    },
    /// `lhs = rhs` in the group.
    Identity {
        lhs: Word,
        rhs: Word,
    },
    Counterexample {
        word: Word,
        detail: String,
        certificate: Option<ConeCertificate>,
    },
    /// A search limit that was reached or a count of examined cases.
    Bound {
        what: String,
        value: u64,
    },
    Note {
        text: String,
    },
    /// A membership derivation in a convex subgroup.
    Derivation {
        trace: DeductionTrace,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub verdict: ProbeVerdict,
    pub evidence: Vec<Evidence>,
}

impl Check {
    pub fn pass(name: impl Into<String>, evidence: Vec<Evidence>) -> Self {
        Check {
            name: name.into(),
            verdict: ProbeVerdict::Pass,
            evidence,
        }
    }

    pub fn fail(name: impl Into<String>, evidence: Vec<Evidence>) -> Self {
        Check {
            name: name.into(),
            verdict: ProbeVerdict::Fail,
            evidence,
        }
    }

    pub fn inconclusive(name: impl Into<String>, evidence: Vec<Evidence>) -> Self {
        Check {
            name: name.into(),
            verdict: ProbeVerdict::Inconclusive,
            evidence,
        }
    }
}

/// Checks ordered by name, with the budgets they ran under.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub checks: Vec<Check>,
    pub budgets: BTreeMap<String, u64>,
}

impl ProbeReport {
    pub fn new(mut checks: Vec<Check>, budgets: BTreeMap<String, u64>) -> Self {
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        ProbeReport { checks, budgets }
    }

    /// Fail if any check fails, else Inconclusive if any is, else Pass.
    pub fn verdict(&self) -> ProbeVerdict {
        self.checks
            .iter()
            .map(|c| c.verdict)
            .fold(ProbeVerdict::Pass, |acc, v| match (acc, v) {
                (ProbeVerdict::Fail, _) | (_, ProbeVerdict::Fail) => ProbeVerdict::Fail,
                (ProbeVerdict::Inconclusive, _) | (_, ProbeVerdict::Inconclusive) => ProbeVerdict::Inconclusive,
                _ => ProbeVerdict::Pass,
            })
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub(crate) fn budgets(items: &[(&str, u64)]) -> BTreeMap<String, u64> {
    items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// A left ordering with certified signs.
pub trait SignOracle: Send + Sync {
    fn sign(&self, e: &Element, budget: u64) -> Result<SignResult, Error>;

    fn words(&self) -> &dyn WordProblem;

    /// The group element named by a certificate of this oracle.
    fn certificate_word(&self, cert: &ConeCertificate) -> Result<Word, Error>;

    /// Whether shifting levels by `d` is an automorphism of the group.
    fn shift_invariant(&self, d: i32) -> bool;

    /// `a < b` iff `a⁻¹b` is positive.
    fn compare(&self, a: &Element, b: &Element, budget: u64) -> Result<Comparison, Error> {
        let sign = self.sign(&a.inverse().mul(b), budget)?;
        let verdict = match sign.value {
            SignValue::Positive => Verdict::Less,
            SignValue::Negative => Verdict::Greater,
            SignValue::Zero => Verdict::Equal,
            SignValue::Unknown => Verdict::Unknown,
        };
        Ok(Comparison { verdict, sign })
    }

    /// Sign of `e` in the ordering conjugated by `w`, that is of `w⁻¹ e w`.
    fn conjugate_sign(&self, w: &Element, e: &Element, budget: u64) -> Result<SignResult, Error> {
        self.sign(&w.inverse().mul(e).mul(w), budget)
    }
}

impl SignOracle for Cone {
    fn sign(&self, e: &Element, budget: u64) -> Result<SignResult, Error> {
        Cone::sign(self, e, budget)
    }

    fn words(&self) -> &dyn WordProblem {
        self.group()
    }

    fn certificate_word(&self, cert: &ConeCertificate) -> Result<Word, Error> {
        cert.word(self.spec())
    }

    fn shift_invariant(&self, d: i32) -> bool {
        self.spec().is_shift_invariant(d)
    }
}

/// The two orderings of a cyclic tower, both isolated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TowerDirection {
    /// Positive iff the rational evaluation is positive.
    StandardUp,
    StandardDown,
}

/// Sign oracle for `CyclicTower(l)`. A certificate `g(W)^E` names `g_W^E`
/// going up and `g_W^{-E}` going down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TowerOrder {
    pub tower: CyclicTower,
    pub direction: TowerDirection,
}

impl TowerOrder {
    pub fn new(tower: CyclicTower, direction: TowerDirection) -> Self {
        TowerOrder { tower, direction }
    }
}

impl SignOracle for TowerOrder {
    fn sign(&self, e: &Element, _budget: u64) -> Result<SignResult, Error> {
        let Some((level, exp)) = self.tower.collapse(&e.word)? else {
            return Ok(SignResult {
                value: SignValue::Zero,
                certificate: None,
                budget_used: 0,
            });
        };
        let up = exp.is_positive();
        let count = u64::try_from(exp.abs()).map_err(|_| Error::Overflow)?;
        let positive = up == (self.direction == TowerDirection::StandardUp);
        let value = if positive {
            SignValue::Positive
        } else {
            SignValue::Negative
        };
        let certificate = Some(ConeCertificate::single(CertGen::Gen(level), count));
        Ok(SignResult {
            value,
            certificate,
            budget_used: 1,
        })
    }

    fn words(&self) -> &dyn WordProblem {
        &self.tower
    }

    fn certificate_word(&self, cert: &ConeCertificate) -> Result<Word, Error> {
        let down = self.direction == TowerDirection::StandardDown;
        cert.word_with(|g| match g {
            CertGen::Gen(n) => Ok(Word::power(n, if down { -1 } else { 1 })),
            other => Err(Error::Unsupported(format!("{other} in a tower certificate"))),
        })
    }

    fn shift_invariant(&self, _: i32) -> bool {
        true
    }
}

/// Replays a sign result against `e`. Unknown never replays.
pub fn recheck<O: SignOracle + ?Sized>(oracle: &O, e: &Word, r: &SignResult) -> Result<bool, Error> {
    let words = oracle.words();
    match (r.value, &r.certificate) {
        (SignValue::Zero, _) => words.is_identity(e),
        (SignValue::Positive, Some(c)) => words.equal(&oracle.certificate_word(c)?, e),
        (SignValue::Negative, Some(c)) => words.equal(&oracle.certificate_word(c)?, &e.inverse()),
        _ => Ok(false),
    }
}

/// Replays every certificate and identity carried by a report.
pub fn replay_report<O: SignOracle + ?Sized>(oracle: &O, report: &ProbeReport) -> Result<bool, Error> {
    for check in &report.checks {
        for ev in &check.evidence {
            let ok = match ev {
                Evidence::Certificate {
                    element,
                    value,
                    certificate,
                } => {
                    let r = SignResult {
                        value: *value,
                        certificate: Some(certificate.clone()),
                        budget_used: 0,
                    };
                    recheck(oracle, element, &r)?
                }
                Evidence::Identity { lhs, rhs } => oracle.words().equal(lhs, rhs)?,
                _ => true,
            };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub(crate) fn certified(element: Word, r: &SignResult) -> Evidence {
    Evidence::Certificate {
        element,
        value: r.value,
        certificate: r.certificate.clone().unwrap_or_default(),
    }
}

pub(crate) fn counterexample(word: Word, detail: impl Into<String>, r: &SignResult) -> Evidence {
    Evidence::Counterexample {
        word,
        detail: detail.into(),
        certificate: r.certificate.clone(),
    }
}

/// `a < b` as a check.
fn less_check<O: SignOracle + ?Sized>(
    o: &O,
    name: String,
    a: &Element,
    b: &Element,
    budget: u64,
) -> Result<Check, Error> {
    let c = o.compare(a, b, budget)?;
    let q = a.inverse().mul(b).word;
    Ok(match c.verdict {
        Verdict::Less => Check::pass(name, vec![certified(q, &c.sign)]),
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

fn identity_check(words: &dyn WordProblem, name: String, lhs: Word, rhs: Word) -> Result<Check, Error> {
    Ok(if words.equal(&lhs, &rhs)? {
        Check::pass(name, vec![Evidence::Identity { lhs, rhs }])
    } else {
        let detail = format!("{lhs} differs from {rhs}");
        Check::fail(
            name,
            vec![Evidence::Counterexample {
                word: lhs.mul(&rhs.inverse()),
                detail,
                certificate: None,
            }],
        )
    })
}

enum Task {
    Less(String, Element, Element),
    Same(String, Word, Word),
}

fn run_tasks<O: SignOracle + ?Sized>(o: &O, tasks: Vec<Task>, budget: u64) -> Result<Vec<Check>, Error> {
    tasks
        .into_par_iter()
        .map(|t| match t {
            Task::Less(name, a, b) => less_check(o, name, &a, &b, budget),
            Task::Same(name, l, r) => identity_check(o.words(), name, l, r),
        })
        .collect()
}

fn at(word: Word, window: u32) -> Element {
    Element { word, window }
}

/// Every instance of the inequalities and identities (i)–(vi) for `G_(m)`.
/// Items (iii) and (v) relate window `m` to window `m + 1`.
pub fn verify_dehornoy_props(spec: &ChainSpec, m: u32, budget: u64) -> Result<ProbeReport, Error> {
    let cone = Cone::new(spec.clone())?;
    let mi = m as i32;
    let a = |i: i32, w: u32| -> Result<Word, Error> { cone_generator(spec, ConeGenId::new(i, w)?) };
    let g = |i: i32| Word::gen(i);
    let mut tasks = Vec::new();
    for i in -mi..=mi {
        tasks.push(Task::Less(format!("(i) 1 < g({i})"), Element::identity(), at(g(i), m)));
        if i < mi {
            tasks.push(Task::Less(
                format!("(i) g({i}) < g({})", i + 1),
                at(g(i), m),
                at(g(i + 1), m),
            ));
            let l = spec.l(i + 1);
            tasks.push(Task::Same(
                format!("(ii) a({i},{m}) = a({},{m}) g({})^{}", i + 1, i + 1, l - 1),
                a(i, m)?,
                a(i + 1, m)?.mul(&Word::power(i + 1, l - 1)),
            ));
            tasks.push(Task::Less(
                format!("(iv) a({},{m}) < a({i},{m})", i + 1),
                at(a(i + 1, m)?, m),
                at(a(i, m)?, m),
            ));
            tasks.push(Task::Same(
                format!("(iv) a({},{m})^-1 a({i},{m}) = g({})^{}", i + 1, i + 1, l - 1),
                a(i + 1, m)?.inverse().mul(&a(i, m)?),
                Word::power(i + 1, l - 1),
            ));
        }
        let k = spec.k(-mi);
        tasks.push(Task::Same(
            format!("(iii) a({i},{m}) = g({})^{} a({i},{})", -mi - 1, k - 1, m + 1),
            a(i, m)?,
            Word::power(-mi - 1, k - 1).mul(&a(i, m + 1)?),
        ));
        tasks.push(Task::Less(
            format!("(v) a({i},{}) < a({i},{m})", m + 1),
            at(a(i, m + 1)?, m + 1),
            at(a(i, m)?, m + 1),
        ));
    }
    tasks.push(Task::Less(
        format!("(vi) 1 < a({m},{m})"),
        Element::identity(),
        at(a(mi, m)?, m),
    ));
    for i in (-mi..mi).rev() {
        tasks.push(Task::Less(
            format!("(vi) a({},{m}) < a({i},{m})", i + 1),
            at(a(i + 1, m)?, m),
            at(a(i, m)?, m),
        ));
    }
    tasks.push(Task::Same(
        format!("(vi) a({},{m}) = g({})", -mi, -mi),
        a(-mi, m)?,
        g(-mi),
    ));
    for i in -mi..mi {
        tasks.push(Task::Less(
            format!("(vi) g({i}) < g({})", i + 1),
            at(g(i), m),
            at(g(i + 1), m),
        ));
    }
    let checks = run_tasks(&cone, tasks, budget)?;
    Ok(ProbeReport::new(checks, budgets(&[("sign", budget), ("m", m as u64)])))
}

/// Searches the ball of radius `radius` in `G_(m)` for a positive element
/// strictly below `a_{m,m}`.
pub fn minimal_positive_probe(spec: &ChainSpec, m: u32, radius: u32, budget: u64) -> Result<ProbeReport, Error> {
    if radius == 0 {
        return Err(Error::Precondition("radius must be at least 1".into()));
    }
    let cone = Cone::new(spec.clone())?;
    let mi = m as i32;
    let min = at(cone_generator(spec, ConeGenId::new(mi, m)?)?, m);
    let gens: Vec<GenRef> = (-mi..=mi).collect();
    let words = ball(cone.group(), &gens, radius)?;
    let examined = words.len() as u64 - 1;

    #[derive(Default)]
    struct Tally {
        positive: u64,
        unknown: u64,
        below: Option<(Word, SignResult)>,
    }
    let classify = |w: &Word| -> Result<Tally, Error> {
        let mut t = Tally::default();
        let p = at(w.clone(), m);
        let s = cone.sign(&p, budget)?;
        match s.value {
            SignValue::Positive => {
                t.positive = 1;
                let c = cone.compare(&p, &min, budget)?;
                match c.verdict {
                    Verdict::Less => t.below = Some((w.clone(), c.sign)),
                    Verdict::Unknown => t.unknown = 1,
                    _ => {}
                }
            }
            SignValue::Unknown => t.unknown = 1,
            _ => {}
        }
        Ok(t)
    };
    let tallies: Vec<Tally> = words[1..].par_iter().map(classify).collect::<Result<_, _>>()?;
    let mut positive = 0;
    let mut unknown = 0;
    let mut below = None;
    for t in tallies {
        positive += t.positive;
        unknown += t.unknown;
        if below.is_none() {
            below = t.below;
        }
    }

    let mut checks = vec![less_check(
        &cone,
        format!("1 < a({m},{m})"),
        &Element::identity(),
        &min,
        budget,
    )?];
    let name = format!("no positive element below a({m},{m}) within radius {radius}");
    let counts = vec![
        Evidence::Bound {
            what: "ball elements".into(),
            value: examined,
        },
        Evidence::Bound {
            what: "positive elements".into(),
            value: positive,
        },
    ];
    checks.push(if let Some((w, r)) = below {
        Check::fail(
            name,
            vec![counterexample(w, format!("lies strictly between 1 and a({m},{m})"), &r)],
        )
    } else if unknown > 0 {
        let mut ev = counts;
        ev.push(Evidence::Bound {
            what: "undecided elements".into(),
            value: unknown,
        });
        Check::inconclusive(name, ev)
    } else {
        Check::pass(name, counts)
    });
    Ok(ProbeReport::new(
        checks,
        budgets(&[("sign", budget), ("radius", radius as u64), ("m", m as u64)]),
    ))
}

/// The strictly decreasing chain `… < a_{2,2} < a_{1,1} < a_{0,0}` up to `m_max`.
pub fn density_probe(spec: &ChainSpec, m_max: u32, budget: u64) -> Result<ProbeReport, Error> {
    let cone = Cone::new(spec.clone())?;
    let mut tasks = Vec::new();
    for m in 0..m_max {
        let lo = at(cone_generator(spec, ConeGenId::new(m as i32 + 1, m + 1)?)?, m + 1);
        let hi = at(cone_generator(spec, ConeGenId::new(m as i32, m)?)?, m + 1);
        tasks.push(Task::Less(
            format!("1 < a({},{})", m + 1, m + 1),
            Element::identity(),
            lo.clone(),
        ));
        tasks.push(Task::Less(format!("a({},{}) < a({m},{m})", m + 1, m + 1), lo, hi));
    }
    let checks = run_tasks(&cone, tasks, budget)?;
    Ok(ProbeReport::new(
        checks,
        budgets(&[("sign", budget), ("m_max", m_max as u64)]),
    ))
}

fn require_positive<O: SignOracle + ?Sized>(o: &O, e: &Element, budget: u64) -> Result<SignResult, Error> {
    let s = o.sign(e, budget)?;
    if s.value != SignValue::Positive {
        return Err(Error::Precondition(format!(
            "{e} is not certified positive ({:?})",
            s.value
        )));
    }
    Ok(s)
}

fn pair_name(idx: usize, a: &Element, b: &Element) -> String {
    format!("pair {idx:03}: {a} , {b}")
}

/// The least `n` in `range` whose test element is certified positive.
fn least_n(
    name: String,
    range: std::ops::RangeInclusive<u64>,
    budget: u64,
    mut test: impl FnMut(u64) -> Result<Option<(Word, SignResult)>, Error>,
) -> Result<Check, Error> {
    let max = *range.end();
    let mut undecided = false;
    for n in range {
        match test(n)? {
            Some((w, r)) if r.value == SignValue::Positive => {
                return Ok(Check::pass(
                    name,
                    vec![
                        Evidence::Bound {
                            what: "least n".into(),
                            value: n,
                        },
                        certified(w, &r),
                    ],
                ));
            }
            Some((_, r)) if r.value == SignValue::Unknown => undecided = true,
            _ => {}
        }
    }
    let mut ev = vec![Evidence::Bound {
        what: "n searched up to".into(),
        value: max,
    }];
    if undecided {
        ev.push(Evidence::Bound {
            what: "sign budget".into(),
            value: budget,
        });
    }
    Ok(Check::inconclusive(name, ev))
}

/// For each positive pair `(g₁, g₂)` the least `n ≤ n_max` with `g₁ < g₂g₁ⁿ`.
/// A pair with no such `n` is Inconclusive: evidence against the Conradian
/// property, never a proof.
pub fn conradian_probe<O: SignOracle + ?Sized>(
    oracle: &O,
    pairs: &[(Element, Element)],
    n_max: u64,
    budget: u64,
) -> Result<ProbeReport, Error> {
    let mut checks = Vec::new();
    for (idx, (g1, g2)) in pairs.iter().enumerate() {
        require_positive(oracle, g1, budget)?;
        require_positive(oracle, g2, budget)?;
        checks.push(least_n(pair_name(idx, g1, g2), 1..=n_max, budget, |n| {
            let q = g1.inverse().mul(g2).mul(&pow(g1, n as i64));
            Ok(Some((q.word.clone(), oracle.sign(&q, budget)?)))
        })?);
    }
    Ok(ProbeReport::new(checks, budgets(&[("sign", budget), ("n_max", n_max)])))
}

/// For each positive pair `(g, h)` the least `n ≤ n_max` with `h < gⁿ`.
pub fn archimedean_probe<O: SignOracle + ?Sized>(
    oracle: &O,
    pairs: &[(Element, Element)],
    n_max: u64,
    budget: u64,
) -> Result<ProbeReport, Error> {
    let mut checks = Vec::new();
    for (idx, (g, h)) in pairs.iter().enumerate() {
        require_positive(oracle, g, budget)?;
        require_positive(oracle, h, budget)?;
        checks.push(least_n(pair_name(idx, g, h), 1..=n_max, budget, |n| {
            let q = h.inverse().mul(&pow(g, n as i64));
            Ok(Some((q.word.clone(), oracle.sign(&q, budget)?)))
        })?);
    }
    Ok(ProbeReport::new(checks, budgets(&[("sign", budget), ("n_max", n_max)])))
}

/// For each sample `g` the least `M ≤ m_max` with `z^{-M} < g < z^M`.
pub fn cofinal_probe<O: SignOracle + ?Sized>(
    oracle: &O,
    z: &Element,
    samples: &[Element],
    m_max: u64,
    budget: u64,
) -> Result<ProbeReport, Error> {
    require_positive(oracle, z, budget)?;
    let mut checks = Vec::new();
    for (idx, g) in samples.iter().enumerate() {
        let name = format!("sample {idx:03}: {g}");
        let mut found = None;
        let mut undecided = false;
        for big_m in 1..=m_max {
            let zm = pow(z, big_m as i64);
            let upper = oracle.compare(g, &zm, budget)?;
            let lower = oracle.compare(&zm.inverse(), g, budget)?;
            if upper.verdict == Verdict::Less && lower.verdict == Verdict::Less {
                found = Some((big_m, g.inverse().mul(&zm), upper.sign, zm.mul(g), lower.sign));
                break;
            }
            undecided |= upper.verdict == Verdict::Unknown || lower.verdict == Verdict::Unknown;
        }
        checks.push(match found {
            Some((big_m, up, su, low, sl)) => Check::pass(
                name,
                vec![
                    Evidence::Bound {
                        what: "least M".into(),
                        value: big_m,
                    },
                    certified(up.word, &su),
                    certified(low.word, &sl),
                ],
            ),
            None => {
                let mut ev = vec![Evidence::Bound {
                    what: "M searched up to".into(),
                    value: m_max,
                }];
                if undecided {
                    ev.push(Evidence::Bound {
                        what: "sign budget".into(),
                        value: budget,
                    });
                }
                Check::inconclusive(name, ev)
            }
        });
    }
    Ok(ProbeReport::new(checks, budgets(&[("sign", budget), ("M_max", m_max)])))
}

/// For each sample `(a, b)` checks that `a ≷ b` implies `az ≷ bz`.
pub fn right_invariance_probe<O: SignOracle + ?Sized>(
    oracle: &O,
    z: &Element,
    samples: &[(Element, Element)],
    budget: u64,
) -> Result<ProbeReport, Error> {
    let mut checks = Vec::new();
    for (idx, (a, b)) in samples.iter().enumerate() {
        let name = pair_name(idx, a, b);
        let before = oracle.compare(a, b, budget)?;
        let (az, bz) = (a.mul(z), b.mul(z));
        let after = oracle.compare(&az, &bz, budget)?;
        let q0 = a.inverse().mul(b).word;
        let q1 = az.inverse().mul(&bz).word;
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
                let mut ev = Vec::new();
                if before.verdict != Verdict::Equal {
                    ev.push(certified(q0, &before.sign));
                    ev.push(certified(q1, &after.sign));
                }
                Check::pass(name, ev)
            } else {
                let detail = format!(
                    "{:?} before and {:?} after multiplying by {z} on the right",
                    before.verdict, after.verdict
                );
                Check::fail(
                    name,
                    vec![certified(q0, &before.sign), counterexample(q1, detail, &after.sign)],
                )
            },
        );
    }
    Ok(ProbeReport::new(checks, budgets(&[("sign", budget)])))
}

fn pow(e: &Element, n: i64) -> Element {
    Element {
        word: e.word.pow(n),
        window: e.window,
    }
}

/// Image of a tower element in `Z[1/l]` under `g_n ↦ l^{-n}`.
pub fn zl_evaluate(tower: &CyclicTower, e: &Element) -> BigRational {
    tower.evaluate(&e.word)
}

/// Sign of a rational as a sign value.
pub fn rational_sign(q: &BigRational) -> SignValue {
    if q.is_positive() {
        SignValue::Positive
    } else if q.is_negative() {
        SignValue::Negative
    } else {
        SignValue::Zero
    }
}

/// Which side of `G̃` the stable letter lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HnnVariant {
    TPositive,
    TNegative,
}

/// Sign in the HNN extension by the shift: the t-exponent decides, and `G̃`
/// is convex.
pub fn hnn_sign<O: SignOracle + ?Sized>(
    oracle: &O,
    x: &HnnElement,
    variant: HnnVariant,
    budget: u64,
) -> Result<SignResult, Error> {
    if !oracle.shift_invariant(1) {
        return Err(Error::NotShiftInvariant(1));
    }
    if x.t_exp == 0 {
        return oracle.sign(&x.part, budget);
    }
    let up = x.t_exp > 0;
    let positive = up == (variant == HnnVariant::TPositive);
    let value = if positive {
        SignValue::Positive
    } else {
        SignValue::Negative
    };
    let certificate = Some(ConeCertificate::single(CertGen::Stable, x.t_exp.unsigned_abs()));
    Ok(SignResult {
        value,
        certificate,
        budget_used: 0,
    })
}

/// Whether a stable-letter certificate matches the t-exponent of `x`.
fn stable_certifies(r: &SignResult, x: &HnnElement) -> bool {
    let expect = x.t_exp.unsigned_abs();
    matches!(&r.certificate, Some(c) if c.factors.len() == 1
        && c.factors[0].gen == CertGen::Stable && c.factors[0].count == expect)
}

/// Replays an HNN sign: stable certificates by t-exponent, the rest in `G̃`.
pub fn hnn_recheck<O: SignOracle + ?Sized>(oracle: &O, x: &HnnElement, r: &SignResult) -> Result<bool, Error> {
    if x.t_exp == 0 {
        recheck(oracle, &x.part.word, r)
    } else {
        Ok(stable_certifies(r, x))
    }
}

/// The first `size` elements `(w, t^p)` with `w` in the ball of radius 2 on
/// `g(-1), g(0), g(1)` and `p` in `-2..=2`, ordered by `p` then ball order.
pub fn hnn_sample(cone: &Cone, size: usize) -> Result<Vec<HnnElement>, Error> {
    let parts = ball(cone.group(), &[-1, 0, 1], 3)?;
    let mut out = Vec::new();
    'outer: for w in parts {
        for p in [0, 1, -1, 2, -2] {
            if out.len() == size {
                break 'outer;
            }
            out.push(HnnElement {
                part: Element::new(w.clone()),
                t_exp: p,
            });
        }
    }
    Ok(out)
}

/// Trichotomy and convexity of `G̃` for one HNN ordering over `sample`, and
/// positivity of every shifted cone generator `a_{i,m}`, `m ≤ shift_window`.
pub fn hnn_probe(
    cone: &Cone,
    variant: HnnVariant,
    sample: &[HnnElement],
    shift_window: u32,
    budget: u64,
) -> Result<ProbeReport, Error> {
    let spec = cone.spec();
    let mut checks = Vec::new();

    let mut signs = Vec::with_capacity(sample.len());
    let mut bad = None;
    let mut undecided = 0u64;
    for x in sample {
        let s = hnn_sign(cone, x, variant, budget)?;
        let inv = hnn_inverse(spec, x)?;
        let si = hnn_sign(cone, &inv, variant, budget)?;
        let trivial = x.t_exp == 0 && cone.group().is_identity(&x.part.word)?;
        let ok = if trivial {
            s.value == SignValue::Zero && si.value == SignValue::Zero
        } else {
            matches!(
                (s.value, si.value),
                (SignValue::Positive, SignValue::Negative) | (SignValue::Negative, SignValue::Positive)
            ) && hnn_recheck(cone, x, &s)?
                && hnn_recheck(cone, &inv, &si)?
        };
        if s.value == SignValue::Unknown || si.value == SignValue::Unknown {
            undecided += 1;
        } else if !ok && bad.is_none() {
            bad = Some(format!(
                "{x} has signs {:?} and {:?} for itself and its inverse",
                s.value, si.value
            ));
        }
        signs.push(s);
    }
    let count = Evidence::Bound {
        what: "sample elements".into(),
        value: sample.len() as u64,
    };
    checks.push(match (bad, undecided) {
        (Some(detail), _) => Check::fail("trichotomy", vec![Evidence::Note { text: detail }]),
        (None, 0) => Check::pass("trichotomy", vec![count.clone()]),
        (None, n) => Check::inconclusive(
            "trichotomy",
            vec![Evidence::Bound {
                what: "undecided elements".into(),
                value: n,
            }],
        ),
    });

    // A positive element outside G̃ must exceed every positive element of G̃.
    let mut violation = None;
    let mut pairs = 0u64;
    for (x, sx) in sample.iter().zip(&signs) {
        if x.t_exp != 0 || sx.value != SignValue::Positive {
            continue;
        }
        for (y, sy) in sample.iter().zip(&signs) {
            if y.t_exp == 0 || sy.value != SignValue::Positive {
                continue;
            }
            pairs += 1;
            let q = hnn_mul(spec, &hnn_inverse(spec, y)?, x)?;
            let s = hnn_sign(cone, &q, variant, budget)?;
            if s.value != SignValue::Negative && violation.is_none() {
                violation = Some(format!("1 < {y} < {x} with {y} outside the convex subgroup"));
            }
        }
    }
    checks.push(match violation {
        Some(detail) => Check::fail("convexity", vec![Evidence::Note { text: detail }]),
        None => Check::pass(
            "convexity",
            vec![Evidence::Bound {
                what: "sandwich pairs".into(),
                value: pairs,
            }],
        ),
    });

    let mut tasks = Vec::new();
    for m in 0..=shift_window {
        for i in -(m as i32)..=m as i32 {
            let a = Element {
                word: cone_generator(spec, ConeGenId::new(i, m)?)?,
                window: m,
            };
            for d in [-1, 1] {
                let s = shift(spec, &a, d)?;
                tasks.push(Task::Less(format!("shift a({i},{m}) by {d:+}"), Element::identity(), s));
            }
        }
    }
    checks.extend(run_tasks(cone, tasks, budget)?);
    let name = match variant {
        HnnVariant::TPositive => "t-positive",
        HnnVariant::TNegative => "t-negative",
    };
    let mut b = budgets(&[
        ("sign", budget),
        ("sample", sample.len() as u64),
        ("shift_window", shift_window as u64),
    ]);
    b.insert(format!("variant {name}"), 1);
    Ok(ProbeReport::new(checks, b))
}

/// Deterministic pseudo-random words of `1..=max_len` syllables over `levels`
/// with exponents in `-3..=3`.
pub fn sample_words(levels: std::ops::RangeInclusive<GenRef>, max_len: usize, count: usize, seed: u64) -> Vec<Word> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = rng.gen_range(1..=max_len);
            Word::from_pairs((0..len).map(|_| {
                let g = rng.gen_range(levels.clone());
                let e = if rng.gen_bool(0.5) {
                    rng.gen_range(1..=3)
                } else {
                    -rng.gen_range(1..=3)
                };
                (g, e)
            }))
        })
        .collect()
}

/// Tower sign against the sign of the rational evaluation.
pub fn tower_agreement(order: &TowerOrder, sample: &[Word]) -> Result<ProbeReport, Error> {
    let mut checks = Vec::new();
    for (idx, w) in sample.iter().enumerate() {
        let e = Element::new(w.clone());
        let q = zl_evaluate(&order.tower, &e);
        let mut expect = rational_sign(&q);
        if order.direction == TowerDirection::StandardDown {
            expect = expect.negate();
        }
        let s = order.sign(&e, 1)?;
        let name = format!("sample {idx:03}: {w}");
        let via_hnn = hnn_sign(order, &HnnElement::of(e), HnnVariant::TPositive, 1)?;
        checks.push(if s.value == expect && via_hnn.value == expect {
            let mut ev = vec![Evidence::Note {
                text: format!("evaluates to {q}"),
            }];
            if s.value != SignValue::Zero {
                ev.push(certified(w.clone(), &s));
            }
            Check::pass(name, ev)
        } else {
            let detail = format!("sign {:?} but evaluation {q}", s.value);
            Check::fail(name, vec![counterexample(w.clone(), detail, &s)])
        });
    }
    Ok(ProbeReport::new(checks, budgets(&[("sample", sample.len() as u64)])))
}

/// A sign claim inside a witness, kept with its certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedClaim {
    pub label: String,
    pub element: Word,
    pub sign: SignResult,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WitnessOutcome {
    Witness {
        conjugator: Element,
        discriminator: Element,
    },
    NotFound,
}

/// A conjugate ordering inside the neighbourhood `U_F` of `P̃` that differs
/// from it, or the exhausted search bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessResult {
    pub outcome: WitnessOutcome,
    pub agreement_set: Vec<Element>,
    pub claims: Vec<SignedClaim>,
    pub conjugators_examined: u64,
    pub discriminators_examined: u64,
    pub budgets: BTreeMap<String, u64>,
}

/// Freely reduced words of exactly `len` letters over `alphabet`, in shortlex
/// order (level ascending, a letter before its inverse).
pub fn words_of_length(alphabet: &[GenRef], len: usize) -> Vec<Word> {
    let mut letters: Vec<(GenRef, i64)> = alphabet.iter().flat_map(|&g| [(g, 1), (g, -1)]).collect();
    letters.sort_by_key(|&(g, e)| (g, e < 0));
    letters.dedup();
    let mut out = Vec::new();
    let mut cur: Vec<(GenRef, i64)> = Vec::with_capacity(len);
    fn rec(letters: &[(GenRef, i64)], len: usize, cur: &mut Vec<(GenRef, i64)>, out: &mut Vec<Word>) {
        if cur.len() == len {
            out.push(Word::from_pairs(cur.iter().copied()));
            return;
        }
        for &(g, e) in letters {
            if let Some(&(pg, pe)) = cur.last() {
                if pg == g && pe == -e {
                    continue;
                }
            }
            cur.push((g, e));
            rec(letters, len, cur, out);
            cur.pop();
        }
    }
    rec(&letters, len, &mut cur, &mut out);
    out
}

/// First conjugator `w` (length, shortlex) with a discriminator `d` such that
/// every agreement element stays positive under `w⁻¹·w` conjugation while
/// `d` changes sign. Undecided signs disqualify a candidate.
pub fn nonisolation_witness<O: SignOracle + ?Sized>(
    oracle: &O,
    alphabet: &[GenRef],
    agreement: &[Element],
    conj_radius: u32,
    disc_radius: u32,
    budget: u64,
) -> Result<WitnessResult, Error> {
    let words = oracle.words();
    let mut base_claims = Vec::new();
    for (idx, f) in agreement.iter().enumerate() {
        let s = require_positive(oracle, f, budget)?;
        base_claims.push(SignedClaim {
            label: format!("f{idx} under P"),
            element: f.word.clone(),
            sign: s,
        });
    }
    let discriminators: Vec<Word> = (1..=disc_radius as usize)
        .flat_map(|n| words_of_length(alphabet, n))
        .filter_map(|d| match words.is_identity(&d) {
            Ok(true) => None,
            Ok(false) => Some(Ok(d)),
            Err(e) => Some(Err(e)),
        })
        .collect::<Result<_, _>>()?;
    let mut disc_signs = Vec::with_capacity(discriminators.len());
    for d in &discriminators {
        disc_signs.push(oracle.sign(&Element::new(d.clone()), budget)?);
    }
    let mut result = WitnessResult {
        outcome: WitnessOutcome::NotFound,
        agreement_set: agreement.to_vec(),
        claims: Vec::new(),
        conjugators_examined: 0,
        discriminators_examined: 0,
        budgets: budgets(&[
            ("sign", budget),
            ("conj_radius", conj_radius as u64),
            ("disc_radius", disc_radius as u64),
        ]),
    };
    for len in 1..=conj_radius as usize {
        for w in words_of_length(alphabet, len) {
            if words.is_identity(&w)? {
                continue;
            }
            result.conjugators_examined += 1;
            let we = Element::new(w.clone());
            let mut claims = base_claims.clone();
            let mut agrees = true;
            for (idx, f) in agreement.iter().enumerate() {
                let s = oracle.conjugate_sign(&we, f, budget)?;
                if s.value != SignValue::Positive {
                    agrees = false;
                    break;
                }
                let conj = we.inverse().mul(f).mul(&we).word;
                claims.push(SignedClaim {
                    label: format!("f{idx} under w"),
                    element: conj,
                    sign: s,
                });
            }
            if !agrees {
                continue;
            }
            for (d, sd) in discriminators.iter().zip(&disc_signs) {
                result.discriminators_examined += 1;
                if matches!(sd.value, SignValue::Unknown | SignValue::Zero) {
                    continue;
                }
                let de = Element::new(d.clone());
                let sc = oracle.conjugate_sign(&we, &de, budget)?;
                if sc.value == SignValue::Unknown || sc.value == sd.value {
                    continue;
                }
                claims.push(SignedClaim {
                    label: "d under P".into(),
                    element: d.clone(),
                    sign: sd.clone(),
                });
                let conj = we.inverse().mul(&de).mul(&we).word;
                claims.push(SignedClaim {
                    label: "d under w".into(),
                    element: conj,
                    sign: sc,
                });
                result.outcome = WitnessOutcome::Witness {
                    conjugator: we,
                    discriminator: de,
                };
                result.claims = claims;
                return Ok(result);
            }
        }
    }
    Ok(result)
}

/// Independently recomputes the four sign conditions of a witness and
/// replays every stored certificate.
pub fn verify_witness<O: SignOracle + ?Sized>(oracle: &O, result: &WitnessResult, budget: u64) -> Result<bool, Error> {
    let WitnessOutcome::Witness {
        conjugator: w,
        discriminator: d,
    } = &result.outcome
    else {
        return Ok(true);
    };
    if oracle.words().is_identity(&w.word)? {
        return Ok(false);
    }
    for f in &result.agreement_set {
        if oracle.sign(f, budget)?.value != SignValue::Positive {
            return Ok(false);
        }
        if oracle.conjugate_sign(w, f, budget)?.value != SignValue::Positive {
            return Ok(false);
        }
    }
    let sd = oracle.sign(d, budget)?.value;
    let sc = oracle.conjugate_sign(w, d, budget)?.value;
    let decided = |v| matches!(v, SignValue::Positive | SignValue::Negative);
    if !decided(sd) || !decided(sc) || sd == sc {
        return Ok(false);
    }
    for c in &result.claims {
        if !recheck(oracle, &c.element, &c.sign)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentations::parse_word;

    const N: u64 = 1_000_000;

    fn c(k: i64, l: i64) -> ChainSpec {
        ChainSpec::constant(k, l).unwrap()
    }

    fn el(spec: &ChainSpec, s: &str) -> Element {
        Element::new(parse_word(spec, s).unwrap())
    }

    fn all_pass(r: &ProbeReport) -> bool {
        r.checks.iter().all(|c| c.verdict == ProbeVerdict::Pass)
    }

    #[test]
    fn dehornoy_props_examples() {
        for (spec, m) in [(c(2, 3), 1), (c(2, 2), 2), (c(2, 3), 0)] {
            let r = verify_dehornoy_props(&spec, m, N).unwrap();
            assert!(all_pass(&r), "{spec:?} m={m}: {r:?}");
            assert!(replay_report(&Cone::new(spec).unwrap(), &r).unwrap());
        }
        let r = verify_dehornoy_props(&c(2, 3), 1, N).unwrap();
        for item in ["(i) ", "(ii) ", "(iii) ", "(iv) ", "(v) ", "(vi) "] {
            assert!(r.checks.iter().any(|c| c.name.starts_with(item)), "{item}");
        }
        let names: Vec<&str> = r.checks.iter().map(|c| c.name.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }

    #[test]
    fn quotient_exponent_is_l_minus_one() {
        let spec = c(2, 3);
        let g = Cone::new(spec.clone()).unwrap();
        let a = |i| cone_generator(&spec, ConeGenId::new(i, 1).unwrap()).unwrap();
        let q = a(0).inverse().mul(&a(-1));
        assert!(g.group().equal(&q, &Word::power(0, 2)).unwrap());
        assert!(!g.group().equal(&q, &Word::power(0, 4)).unwrap());
    }

    #[test]
    fn minimal_positive_examples() {
        for (spec, m, radius) in [(c(2, 3), 0, 6), (c(2, 3), 1, 6), (c(2, 2), 1, 5)] {
            let r = minimal_positive_probe(&spec, m, radius, N).unwrap();
            assert!(all_pass(&r), "{r:?}");
        }
        assert!(minimal_positive_probe(&c(2, 3), 1, 0, N).is_err());
    }

    #[test]
    fn density_examples() {
        let r = density_probe(&c(2, 3), 2, N).unwrap();
        assert!(all_pass(&r));
        assert!(r.check("a(2,2) < a(1,1)").is_some() && r.check("a(1,1) < a(0,0)").is_some());
        assert!(all_pass(&density_probe(&c(2, 2), 1, N).unwrap()));
        let vacuous = density_probe(&c(2, 3), 0, N).unwrap();
        assert!(vacuous.checks.is_empty());
        assert_eq!(vacuous.verdict(), ProbeVerdict::Pass);
    }

    fn least(r: &ProbeReport, idx: usize) -> Option<u64> {
        r.checks[idx].evidence.iter().find_map(|e| match e {
            Evidence::Bound { what, value } if what.starts_with("least") => Some(*value),
            _ => None,
        })
    }

    #[test]
    fn conradian_examples() {
        let tower = TowerOrder::new(CyclicTower::new(2).unwrap(), TowerDirection::StandardUp);
        let pairs: Vec<(Element, Element)> = [("g(1)", "g(0)"), ("g(0)", "g(2)^3"), ("g(-1)", "g(1)")]
            .iter()
            .map(|(a, b)| {
                (
                    Element::new(Word::parse(a).unwrap()),
                    Element::new(Word::parse(b).unwrap()),
                )
            })
            .collect();
        let r = conradian_probe(&tower, &pairs, 5, N).unwrap();
        assert!((0..3).all(|i| least(&r, i) == Some(1)));

        let cone = Cone::new(c(2, 3)).unwrap();
        let g0 = |e| Element::new(Word::power(0, e));
        let r = conradian_probe(&cone, &[(g0(1), g0(2)), (g0(3), g0(1))], 5, N).unwrap();
        assert_eq!((least(&r, 0), least(&r, 1)), (Some(1), Some(1)));

        let spec = c(2, 3);
        let pair = (el(&spec, "g(-1) g(0)^-1"), el(&spec, "g(-1) g(0)^-2"));
        let r = conradian_probe(&cone, &[pair], 20, N).unwrap();
        assert_eq!(r.verdict(), ProbeVerdict::Inconclusive);

        assert!(conradian_probe(&cone, &[(g0(-1), g0(1))], 5, N).is_err());
    }

    #[test]
    fn archimedean_on_tower_and_chain() {
        let tower = TowerOrder::new(CyclicTower::new(3).unwrap(), TowerDirection::StandardUp);
        let e = |s: &str| Element::new(Word::parse(s).unwrap());
        let r = archimedean_probe(&tower, &[(e("g(2)"), e("g(0)"))], 20, N).unwrap();
        assert_eq!(least(&r, 0), Some(10));
        let cone = Cone::new(c(2, 3)).unwrap();
        let a11 = cone.generator(1, 1).unwrap();
        let r = archimedean_probe(&cone, &[(a11, Element::new(Word::gen(0)))], 10, N).unwrap();
        assert_eq!(r.verdict(), ProbeVerdict::Inconclusive);
    }

    #[test]
    fn cofinal_examples() {
        let cone = Cone::new(c(2, 3)).unwrap();
        let samples: Vec<Element> = [-3, -1, 2, 4]
            .iter()
            .map(|&e| Element::new(Word::power(0, e)))
            .collect();
        let r = cofinal_probe(&cone, &Element::new(Word::gen(0)), &samples, 10, N).unwrap();
        let found: Vec<Option<u64>> = (0..4).map(|i| least(&r, i)).collect();
        let by_name: BTreeMap<&str, Option<u64>> = r.checks.iter().map(|c| c.name.as_str()).zip(found).collect();
        assert_eq!(by_name["sample 000: g(0)^-3"], Some(4));
        assert_eq!(by_name["sample 001: g(0)^-1"], Some(2));
        assert_eq!(by_name["sample 002: g(0)^2"], Some(3));
        assert_eq!(by_name["sample 003: g(0)^4"], Some(5));
        assert!(cofinal_probe(&cone, &Element::identity(), &samples, 10, N).is_err());
    }

    #[test]
    fn right_invariance_central_and_abelian() {
        let spec = c(2, 3);
        let cone = Cone::new(spec.clone()).unwrap();
        let z = el(&spec, "g(0)^6");
        let ws = sample_words(-1..=1, 4, 30, 7);
        let samples: Vec<(Element, Element)> = ws
            .chunks(2)
            .map(|p| (Element::new(p[0].clone()), Element::new(p[1].clone())))
            .collect();
        let r = right_invariance_probe(&cone, &z, &samples, N).unwrap();
        assert!(all_pass(&r));
        assert!(replay_report(&cone, &r).unwrap());
        let tower = TowerOrder::new(CyclicTower::new(2).unwrap(), TowerDirection::StandardDown);
        let r = right_invariance_probe(&tower, &Element::new(Word::gen(3)), &samples, N).unwrap();
        assert!(all_pass(&r));
    }

    #[test]
    fn zl_examples() {
        let t2 = CyclicTower::new(2).unwrap();
        let q = |s: &str| zl_evaluate(&t2, &Element::new(Word::parse(s).unwrap()));
        let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(q("g(0)"), r(1, 1));
        assert_eq!(q("g(1)^2"), r(1, 1));
        assert_eq!(q("g(2) g(0)^-1"), r(-3, 4));
    }

    #[test]
    fn hnn_examples() {
        let cone = Cone::new(c(2, 3)).unwrap();
        let t = HnnElement::t(1);
        assert_eq!(
            hnn_sign(&cone, &t, HnnVariant::TPositive, N).unwrap().value,
            SignValue::Positive
        );
        assert_eq!(
            hnn_sign(&cone, &t, HnnVariant::TNegative, N).unwrap().value,
            SignValue::Negative
        );
        let g0 = HnnElement::of(Element::new(Word::gen(0)));
        for v in [HnnVariant::TPositive, HnnVariant::TNegative] {
            assert_eq!(hnn_sign(&cone, &g0, v, N).unwrap().value, SignValue::Positive);
        }
        let periodic = Cone::new(ChainSpec::Periodic {
            pairs: vec![(2, 3), (3, 2)],
        })
        .unwrap();
        assert_eq!(
            hnn_sign(&periodic, &t, HnnVariant::TPositive, N),
            Err(Error::NotShiftInvariant(1))
        );
    }

    #[test]
    fn hnn_probe_small() {
        let cone = Cone::new(c(2, 3)).unwrap();
        let sample = hnn_sample(&cone, 60).unwrap();
        assert_eq!(sample.len(), 60);
        for v in [HnnVariant::TPositive, HnnVariant::TNegative] {
            let r = hnn_probe(&cone, v, &sample, 1, N).unwrap();
            assert!(all_pass(&r), "{r:?}");
            assert!(r.check("shift a(1,1) by -1").is_some());
        }
    }

    #[test]
    fn tower_agrees_with_evaluation() {
        for l in [2, 3] {
            let sample = sample_words(-3..=3, 6, 100, l as u64);
            for dir in [TowerDirection::StandardUp, TowerDirection::StandardDown] {
                let order = TowerOrder::new(CyclicTower::new(l).unwrap(), dir);
                let r = tower_agreement(&order, &sample).unwrap();
                assert!(all_pass(&r));
                assert!(replay_report(&order, &r).unwrap());
            }
        }
    }

    #[test]
    fn witness_golden() {
        let spec = c(2, 3);
        let cone = Cone::new(spec.clone()).unwrap();
        let f: Vec<Element> = [-1, 0, 1].iter().map(|&i| cone.generator(i, 1).unwrap()).collect();
        let w = nonisolation_witness(&cone, &[-2, -1, 0, 1, 2], &f, 2, 2, N).unwrap();
        let WitnessOutcome::Witness {
            conjugator,
            discriminator,
        } = &w.outcome
        else {
            panic!("{w:?}")
        };
        assert_eq!(conjugator.to_string(), "g(-2)");
        assert_eq!(discriminator.to_string(), "g(-2) g(-1)^-1");
        assert_eq!(w.conjugators_examined, 1);
        assert_eq!(w.claims.len(), 8);
        assert!(verify_witness(&cone, &w, N).unwrap());

        let mut forged = w.clone();
        forged.outcome = WitnessOutcome::Witness {
            conjugator: Element::identity(),
            discriminator: discriminator.clone(),
        };
        assert!(!verify_witness(&cone, &forged, N).unwrap());
    }

    #[test]
    fn witness_controls() {
        let tower = TowerOrder::new(CyclicTower::new(2).unwrap(), TowerDirection::StandardUp);
        let f = vec![Element::new(Word::gen(0))];
        let w = nonisolation_witness(&tower, &[-1, 0, 1], &f, 2, 2, N).unwrap();
        assert_eq!(w.outcome, WitnessOutcome::NotFound);
        assert!(w.conjugators_examined > 0);

        let cone = Cone::new(c(2, 3)).unwrap();
        let w = nonisolation_witness(&cone, &[0, 1], &[], 1, 2, N).unwrap();
        let WitnessOutcome::Witness { conjugator, .. } = &w.outcome else {
            panic!()
        };
        assert!(!conjugator.word.is_identity());
        assert!(verify_witness(&cone, &w, N).unwrap());

        let bad = vec![Element::new(Word::power(0, -1))];
        assert!(matches!(
            nonisolation_witness(&cone, &[0], &bad, 1, 1, N),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn word_enumeration_is_shortlex() {
        let alphabet = [-1, 0, 1];
        for len in 1..=3 {
            let ws = words_of_length(&alphabet, len);
            assert_eq!(ws.len(), 6 * 5usize.pow(len as u32 - 1));
            let prec = crate::words::Precedence::LevelAscending;
            assert!(ws
                .windows(2)
                .all(|p| crate::words::shortlex_compare(&p[0], &p[1], &prec).unwrap().is_lt()));
        }
        assert_eq!(words_of_length(&alphabet, 1)[0].to_string(), "g(-1)");
        assert_eq!(words_of_length(&alphabet, 1)[1].to_string(), "g(-1)^-1");
    }

    mod props {
        use super::*;
        use crate::words::strategies;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn zl_is_a_homomorphism(a in strategies::word(-3..=3, 6), b in strategies::word(-3..=3, 6), l in 2i64..5) {
                let t = CyclicTower::new(l).unwrap();
                let (ea, eb) = (Element::new(a), Element::new(b));
                prop_assert_eq!(zl_evaluate(&t, &ea.mul(&eb)), zl_evaluate(&t, &ea) + zl_evaluate(&t, &eb));
                prop_assert_eq!(zl_evaluate(&t, &ea.inverse()), -zl_evaluate(&t, &ea));
            }

            #[test]
            fn hnn_trichotomy(w in strategies::word(-1..=1, 4), p in -3i64..=3, pos in any::<bool>()) {
                let cone = Cone::new(c(2, 3)).unwrap();
                let v = if pos { HnnVariant::TPositive } else { HnnVariant::TNegative };
                let x = HnnElement { part: Element::new(w.clone()), t_exp: p };
                let inv = hnn_inverse(cone.spec(), &x).unwrap();
                let s = hnn_sign(&cone, &x, v, N).unwrap();
                let si = hnn_sign(&cone, &inv, v, N).unwrap();
                prop_assert_eq!(si.value, s.value.negate());
                let trivial = p == 0 && cone.group().is_identity(&w).unwrap();
                prop_assert_eq!(s.value == SignValue::Zero, trivial);
                prop_assert!(hnn_recheck(&cone, &x, &s).unwrap());
            }

            #[test]
            fn hnn_is_left_invariant(a in strategies::word(-1..=1, 3), b in strategies::word(-1..=1, 3),
                                     c0 in strategies::word(-1..=1, 3), p in -2i64..=2, q in -2i64..=2, r in -2i64..=2) {
                let cone = Cone::new(c(2, 3)).unwrap();
                let spec = cone.spec();
                let x = HnnElement { part: Element::new(a), t_exp: p };
                let y = HnnElement { part: Element::new(b), t_exp: q };
                let z = HnnElement { part: Element::new(c0), t_exp: r };
                let diff = |u: &HnnElement, v: &HnnElement| hnn_mul(spec, &hnn_inverse(spec, u).unwrap(), v).unwrap();
                let zx = hnn_mul(spec, &z, &x).unwrap();
                let zy = hnn_mul(spec, &z, &y).unwrap();
                let s1 = hnn_sign(&cone, &diff(&x, &y), HnnVariant::TPositive, N).unwrap().value;
                let s2 = hnn_sign(&cone, &diff(&zx, &zy), HnnVariant::TPositive, N).unwrap().value;
                prop_assert_eq!(s1, s2);
            }
        }
    }
}
