//! Elements of the chain groups `G_(m)` and their union `G̃`, the level shift,
//! the semidirect product `G̃ ⋊ ⟨t⟩`, and the cyclic tower `g_n = g_{n+1}^l`.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::presentations::{parse_word, ChainSpec};
use crate::rewriting::{TreeNormalizer, WordProblem};
use crate::words::{GenRef, Word};
use crate::Error;

/// A word regarded in `G_(window)`; `window` is at least the largest level
/// magnitude among the letters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Element {
    pub word: Word,
    pub window: u32,
}

impl Element {
    pub fn new(word: Word) -> Self {
        let window = word.window();
        Element { word, window }
    }

    pub fn identity() -> Self {
        Element::new(Word::identity())
    }

    pub fn mul(&self, o: &Element) -> Element {
        Element {
            word: self.word.mul(&o.word),
            window: self.window.max(o.window),
        }
    }

    pub fn inverse(&self) -> Element {
        Element {
            word: self.word.inverse(),
            window: self.window,
        }
    }
}

impl From<Word> for Element {
    fn from(w: Word) -> Self {
        Element::new(w)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.word.fmt(f)
    }
}

/// Regards `e` as an element of `G_(m)`.
pub fn embed(e: &Element, m: u32) -> Result<Element, Error> {
    if m < e.word.window() {
        return Err(Error::OutOfRange(format!(
            "window {m} is below the word's window {}",
            e.word.window()
        )));
    }
    Ok(Element {
        word: e.word.clone(),
        window: m,
    })
}

/// Families whose level translations may be checked syntactically.
pub trait ShiftInvariance {
    fn is_shift_invariant(&self, d: i32) -> bool;
}

impl ShiftInvariance for ChainSpec {
    fn is_shift_invariant(&self, d: i32) -> bool {
        ChainSpec::is_shift_invariant(self, d)
    }
}

/// Adds `d` to every level.
pub fn shift<S: ShiftInvariance + ?Sized>(spec: &S, e: &Element, d: i32) -> Result<Element, Error> {
    if !spec.is_shift_invariant(d) {
        return Err(Error::NotShiftInvariant(d));
    }
    Ok(Element::new(e.word.map_gens(|g| g + d)))
}

/// `part · t^{t_exp}` with `t⁻¹ g_n t = g_{n+1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HnnElement {
    pub part: Element,
    pub t_exp: i64,
}

impl HnnElement {
    pub fn identity() -> Self {
        HnnElement {
            part: Element::identity(),
            t_exp: 0,
        }
    }

    pub fn t(p: i64) -> Self {
        HnnElement {
            part: Element::identity(),
            t_exp: p,
        }
    }

    pub fn of(part: Element) -> Self {
        HnnElement { part, t_exp: 0 }
    }
}

impl fmt::Display for HnnElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.part.word.is_identity(), self.t_exp) {
            (true, 0) => f.write_str("1"),
            (false, 0) => self.part.fmt(f),
            (true, p) => write!(f, "t^{p}"),
            (false, p) => write!(f, "{} t^{p}", self.part),
        }
    }
}

fn level_shift(p: i64) -> Result<i32, Error> {
    i32::try_from(p).map_err(|_| Error::OutOfRange(format!("t exponent {p}")))
}

/// `(a, t^p)(b, t^q) = (a · shift(b, -p), t^{p+q})`.
pub fn hnn_mul<S: ShiftInvariance + ?Sized>(spec: &S, x: &HnnElement, y: &HnnElement) -> Result<HnnElement, Error> {
    let moved = shift(spec, &y.part, -level_shift(x.t_exp)?)?;
    Ok(HnnElement {
        part: x.part.mul(&moved),
        t_exp: x.t_exp + y.t_exp,
    })
}

pub fn hnn_inverse<S: ShiftInvariance + ?Sized>(spec: &S, x: &HnnElement) -> Result<HnnElement, Error> {
    let part = shift(spec, &x.part.inverse(), level_shift(x.t_exp)?)?;
    Ok(HnnElement { part, t_exp: -x.t_exp })
}

/// Normal forms of all elements of word length at most `radius` in the letters
/// `g^{±1}`, `g` in `gens`, sphere by sphere. Within a sphere the order follows
/// the parent's position and then the letter order.
pub fn ball<P: WordProblem + ?Sized>(group: &P, gens: &[GenRef], radius: u32) -> Result<Vec<Word>, Error> {
    let letters: Vec<Word> = gens.iter().flat_map(|&g| [Word::gen(g), Word::power(g, -1)]).collect();
    let mut seen: HashSet<Word> = HashSet::from([Word::identity()]);
    let mut out = vec![Word::identity()];
    let mut frontier = vec![Word::identity()];
    for _ in 0..radius {
        let mut next = Vec::new();
        for w in &frontier {
            for a in &letters {
                let nf = group.normal_form(&w.mul(a))?;
                if seen.insert(nf.clone()) {
                    next.push(nf);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(out)
}

/// A chain spec bundled with its word problem solver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainGroup {
    spec: ChainSpec,
    tree: TreeNormalizer,
}

impl ChainGroup {
    pub fn new(spec: ChainSpec) -> Result<Self, Error> {
        spec.validate()?;
        let tree = TreeNormalizer::chain(&spec);
        Ok(ChainGroup { spec, tree })
    }

    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    pub fn parse(&self, s: &str) -> Result<Element, Error> {
        Ok(Element::new(parse_word(&self.spec, s)?))
    }

    pub fn nf(&self, e: &Element) -> Result<Element, Error> {
        Ok(Element::new(self.tree.normal_form(&e.word)?))
    }
}

impl WordProblem for ChainGroup {
    fn normal_form(&self, w: &Word) -> Result<Word, Error> {
        self.tree.normal_form(w)
    }
}

/// The degenerate chain `⟨g_n⟩` with `g_n = g_{n+1}^l`, whose union is `Z[1/l]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclicTower {
    pub l: i64,
}

impl CyclicTower {
    pub fn new(l: i64) -> Result<Self, Error> {
        if l < 2 {
            return Err(Error::InvalidSpec(format!("cyclic tower needs l >= 2, got {l}")));
        }
        Ok(CyclicTower { l })
    }

    /// `(W, E)` with the element equal to `g_W^E` and `W` minimal.
    pub fn collapse(&self, w: &Word) -> Result<Option<(i32, BigInt)>, Error> {
        let Some(top) = w.max_gen() else { return Ok(None) };
        let l = BigInt::from(self.l);
        let mut e = BigInt::zero();
        for letter in w.letters() {
            let depth = u32::try_from(top - letter.gen).map_err(|_| Error::Overflow)?;
            e += BigInt::from(letter.exp) * num_traits::pow(l.clone(), depth as usize);
        }
        if e.is_zero() {
            return Ok(None);
        }
        let mut level = top;
        while (&e % &l).is_zero() {
            e /= &l;
            level -= 1;
        }
        Ok(Some((level, e)))
    }

    /// Image under `g_n ↦ l^{-n}`.
    pub fn evaluate(&self, w: &Word) -> BigRational {
        let l = BigRational::from_integer(BigInt::from(self.l));
        w.letters().iter().fold(BigRational::zero(), |acc, letter| {
            let unit = if letter.gen >= 0 {
                BigRational::one() / num_traits::pow(l.clone(), letter.gen as usize)
            } else {
                num_traits::pow(l.clone(), letter.gen.unsigned_abs() as usize)
            };
            acc + unit * BigRational::from_integer(BigInt::from(letter.exp))
        })
    }
}

impl ShiftInvariance for CyclicTower {
    fn is_shift_invariant(&self, _: i32) -> bool {
        true
    }
}

impl WordProblem for CyclicTower {
    fn normal_form(&self, w: &Word) -> Result<Word, Error> {
        match self.collapse(w)? {
            None => Ok(Word::identity()),
            Some((level, e)) => {
                let e = i64::try_from(e).map_err(|_| Error::Overflow)?;
                Ok(Word::power(level, e))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentations::{cone_generator, ConeGenId};
    use crate::words::strategies;
    use proptest::prelude::*;

    fn c23() -> ChainSpec {
        ChainSpec::constant(2, 3).unwrap()
    }

    fn el(s: &str) -> Element {
        Element::new(Word::parse(s).unwrap())
    }

    fn a(spec: &ChainSpec, i: i32, m: u32) -> Element {
        Element::new(cone_generator(spec, ConeGenId { i, m }).unwrap())
    }

    #[test]
    fn embed_examples() {
        let e = embed(&el("g(0)"), 2).unwrap();
        assert_eq!((e.word.to_string().as_str(), e.window), ("g(0)", 2));
        assert_eq!(embed(&Element::identity(), 5).unwrap().window, 5);
        assert!(embed(&el("g(2)"), 1).is_err());
    }

    #[test]
    fn embedded_cone_generator_matches_next_window() {
        let spec = c23();
        let g = ChainGroup::new(spec.clone()).unwrap();
        for m in 0..3u32 {
            for i in -(m as i32)..=m as i32 {
                let lhs = embed(&a(&spec, i, m), m + 1).unwrap();
                let k = spec.k(-(m as i32));
                let rhs = Word::power(-(m as i32) - 1, k - 1).mul(&a(&spec, i, m + 1).word);
                assert!(g.equal(&lhs.word, &rhs).unwrap(), "a({i},{m})");
            }
        }
    }

    #[test]
    fn shift_examples() {
        let spec = c23();
        assert_eq!(shift(&spec, &el("g(0)"), 1).unwrap(), el("g(1)"));
        let w = el("g(-1)^2 g(1)");
        assert_eq!(shift(&spec, &w, 0).unwrap(), w);
        let g = ChainGroup::new(spec.clone()).unwrap();
        let shifted = shift(&spec, &a(&spec, 0, 2), 1).unwrap();
        assert!(g.equal(&shifted.word, &a(&spec, 1, 1).word).unwrap());
        let per = ChainSpec::Periodic {
            pairs: vec![(2, 3), (3, 2)],
        };
        assert_eq!(shift(&per, &el("g(0)"), 1), Err(Error::NotShiftInvariant(1)));
        assert!(shift(&per, &el("g(0)"), 2).is_ok());
    }

    #[test]
    fn hnn_examples() {
        let spec = c23();
        let g0 = HnnElement::of(el("g(0)"));
        assert_eq!(hnn_mul(&spec, &g0, &g0).unwrap(), HnnElement::of(el("g(0)^2")));
        let x = HnnElement::t(1);
        let y = HnnElement {
            part: el("g(0)"),
            t_exp: -1,
        };
        assert_eq!(hnn_mul(&spec, &x, &y).unwrap(), HnnElement::of(el("g(-1)")));
        let z = HnnElement {
            part: el("g(1)^2 g(0)"),
            t_exp: 3,
        };
        let zi = hnn_inverse(&spec, &z).unwrap();
        for p in [hnn_mul(&spec, &z, &zi).unwrap(), hnn_mul(&spec, &zi, &z).unwrap()] {
            assert!(p.part.word.is_identity() && p.t_exp == 0);
        }
    }

    #[test]
    fn conjugation_by_t_raises_levels() {
        let spec = c23();
        for n in -3..=3 {
            let lhs = [
                HnnElement::t(-1),
                HnnElement::of(el(&format!("g({n})"))),
                HnnElement::t(1),
            ]
            .iter()
            .try_fold(HnnElement::identity(), |acc, x| hnn_mul(&spec, &acc, x))
            .unwrap();
            assert_eq!(lhs, HnnElement::of(el(&format!("g({})", n + 1))));
        }
    }

    #[test]
    fn tower_is_baumslag_solitar() {
        for l in 2..=4 {
            let tower = CyclicTower::new(l).unwrap();
            let g = HnnElement::of(el("g(1)"));
            let conj = [HnnElement::t(1), g.clone(), HnnElement::t(-1)]
                .iter()
                .try_fold(HnnElement::identity(), |acc, x| hnn_mul(&tower, &acc, x))
                .unwrap();
            assert_eq!(conj.t_exp, 0);
            assert!(tower.equal(&conj.part.word, &Word::power(1, l)).unwrap());
        }
    }

    #[test]
    fn ball_sizes() {
        let g = ChainGroup::new(c23()).unwrap();
        assert_eq!(ball(&g, &[0], 4).unwrap().len(), 9);
        // free of relations up to length 4 on three generators
        assert_eq!(ball(&g, &[-1, 0, 1], 2).unwrap().len(), 1 + 6 + 30);
        let b = ball(&g, &[0, 1], 5).unwrap();
        // g(0)^2 g(1)^-3 has length 5, so exactly the pairs it identifies collapse
        let free = 1 + 4 + 12 + 36 + 108 + 324;
        assert!(b.len() < free);
        let t = CyclicTower::new(2).unwrap();
        assert_eq!(
            ball(&t, &[0, 1], 2).unwrap().len(),
            ball(&t, &[0, 1], 2).unwrap().iter().collect::<HashSet<_>>().len()
        );
    }

    #[test]
    fn tower_normal_forms() {
        let t = CyclicTower::new(2).unwrap();
        assert!(t.equal(&Word::power(1, 2), &Word::gen(0)).unwrap());
        assert_eq!(t.normal_form(&Word::power(3, 4)).unwrap(), Word::gen(1));
        assert_eq!(
            t.normal_form(&Word::parse("g(2) g(0)^-1").unwrap()).unwrap(),
            Word::power(2, -3)
        );
        assert!(CyclicTower::new(1).is_err());
    }

    #[test]
    fn tower_evaluation() {
        let t = CyclicTower::new(2).unwrap();
        let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        assert_eq!(t.evaluate(&Word::gen(0)), r(1, 1));
        assert_eq!(t.evaluate(&Word::power(1, 2)), r(1, 1));
        assert_eq!(t.evaluate(&Word::parse("g(2) g(0)^-1").unwrap()), r(-3, 4));
        assert_eq!(t.evaluate(&Word::power(-2, 1)), r(4, 1));
    }

    proptest! {
        #[test]
        fn embed_is_homomorphism(a in strategies::word(-2..=2, 5), b in strategies::word(-2..=2, 5), extra in 0u32..3) {
            let (ea, eb) = (Element::new(a.clone()), Element::new(b.clone()));
            let m = ea.window.max(eb.window) + extra;
            let prod = embed(&ea.mul(&eb), m).unwrap();
            let parts = embed(&ea, m).unwrap().mul(&embed(&eb, m).unwrap());
            prop_assert_eq!(prod.word, parts.word);
        }

        #[test]
        fn shift_is_automorphism(a in strategies::word(-2..=2, 5), b in strategies::word(-2..=2, 5), d in -3i32..=3) {
            let spec = ChainSpec::Constant { k: 2, l: 3 };
            let g = ChainGroup::new(spec.clone()).unwrap();
            let (ea, eb) = (Element::new(a), Element::new(b));
            let lhs = shift(&spec, &ea.mul(&eb), d).unwrap();
            let rhs = shift(&spec, &ea, d).unwrap().mul(&shift(&spec, &eb, d).unwrap());
            prop_assert_eq!(&lhs.word, &rhs.word);
            prop_assert_eq!(shift(&spec, &shift(&spec, &ea, d).unwrap(), -d).unwrap().word, ea.word.clone());
            // relators go to relators
            let r = Word::from_pairs([(0, 2), (1, -3)]).map_gens(|x| x + d);
            prop_assert!(g.is_identity(&r).unwrap());
        }

        #[test]
        fn hnn_is_associative(
            a in strategies::word(-2..=2, 4), p in -2i64..=2,
            b in strategies::word(-2..=2, 4), q in -2i64..=2,
            c in strategies::word(-2..=2, 4), r in -2i64..=2,
        ) {
            let spec = ChainSpec::Constant { k: 2, l: 3 };
            let x = HnnElement { part: Element::new(a), t_exp: p };
            let y = HnnElement { part: Element::new(b), t_exp: q };
            let z = HnnElement { part: Element::new(c), t_exp: r };
            let l = hnn_mul(&spec, &hnn_mul(&spec, &x, &y).unwrap(), &z).unwrap();
            let rr = hnn_mul(&spec, &x, &hnn_mul(&spec, &y, &z).unwrap()).unwrap();
            prop_assert_eq!(l.part.word, rr.part.word);
            prop_assert_eq!(l.t_exp, rr.t_exp);
            prop_assert_eq!(hnn_mul(&spec, &x, &HnnElement::identity()).unwrap(), x.clone());
        }

        #[test]
        fn tower_evaluation_is_homomorphism(a in strategies::word(-2..=3, 6), b in strategies::word(-2..=3, 6), l in 2i64..=4) {
            let t = CyclicTower::new(l).unwrap();
            prop_assert_eq!(t.evaluate(&a.mul(&b)), t.evaluate(&a) + t.evaluate(&b));
            prop_assert_eq!(t.evaluate(&a.inverse()), -t.evaluate(&a));
            prop_assert_eq!(t.is_identity(&a).unwrap(), t.evaluate(&a).is_zero());
        }
    }
}
