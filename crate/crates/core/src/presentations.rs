//! Chain presentations of `G_(m)`, the cone generator words `a_{i,m}`, and the
//! Euclidean normalizer used to show that a commuting edge forces an
//! exponent-one relation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::words::{parse_terms, GenRef, Term, Word};
use crate::Error;

/// The exponent family `n ↦ (k_n, l_n)`. The relation joining levels `n-1`
/// and `n` is `g_{n-1}^{k_n} = g_n^{l_n}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ChainSpec {
    Constant {
        k: i64,
        l: i64,
    },
    Periodic {
        pairs: Vec<(i64, i64)>,
    },
    Table {
        entries: BTreeMap<i32, (i64, i64)>,
        default: (i64, i64),
    },
}

impl ChainSpec {
    pub fn constant(k: i64, l: i64) -> Result<Self, Error> {
        let s = ChainSpec::Constant { k, l };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let ok = |(k, l): (i64, i64)| k >= 2 && l >= 2;
        let good = match self {
            ChainSpec::Constant { k, l } => ok((*k, *l)),
            ChainSpec::Periodic { pairs } => !pairs.is_empty() && pairs.iter().all(|&p| ok(p)),
            ChainSpec::Table { entries, default } => ok(*default) && entries.values().all(|&p| ok(p)),
        };
        if good {
            Ok(())
        } else {
            Err(Error::InvalidSpec("every exponent k_n, l_n must be at least 2".into()))
        }
    }

    /// `(k_n, l_n)`.
    pub fn pair(&self, n: i32) -> (i64, i64) {
        match self {
            ChainSpec::Constant { k, l } => (*k, *l),
            ChainSpec::Periodic { pairs } => pairs[n.rem_euclid(pairs.len() as i32) as usize],
            ChainSpec::Table { entries, default } => *entries.get(&n).unwrap_or(default),
        }
    }

    pub fn k(&self, n: i32) -> i64 {
        self.pair(n).0
    }

    pub fn l(&self, n: i32) -> i64 {
        self.pair(n).1
    }

    /// Whether translating levels by `d` preserves the family.
    pub fn is_shift_invariant(&self, d: i32) -> bool {
        match self {
            ChainSpec::Constant { .. } => true,
            ChainSpec::Periodic { pairs } => d.rem_euclid(pairs.len() as i32) == 0,
            ChainSpec::Table { entries, default } => d == 0 || entries.values().all(|p| p == default),
        }
    }
}

/// A finite presentation over integer-named generators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresState {
    pub generators: Vec<GenRef>,
    pub relators: Vec<Word>,
}

impl PresState {
    pub fn new(generators: Vec<GenRef>, relators: Vec<Word>) -> Result<Self, Error> {
        for r in &relators {
            if let Some(l) = r.letters().iter().find(|l| !generators.contains(&l.gen)) {
                return Err(Error::InvalidSpec(format!(
                    "relator {r} mentions unlisted g({})",
                    l.gen
                )));
            }
        }
        Ok(PresState { generators, relators })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConeGenId {
    pub i: i32,
    pub m: u32,
}

impl ConeGenId {
    pub fn new(i: i32, m: u32) -> Result<Self, Error> {
        if i.unsigned_abs() > m {
            return Err(Error::OutOfRange(format!("a({i},{m}) needs -m <= i <= m")));
        }
        Ok(ConeGenId { i, m })
    }
}

impl std::fmt::Display for ConeGenId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "a({},{})", self.i, self.m)
    }
}

/// `⟨g_{-m},…,g_m | g_{j-1}^{k_j} g_j^{-l_j}, -m < j ≤ m⟩`.
pub fn chain_presentation(spec: &ChainSpec, m: u32) -> PresState {
    let m = m as i32;
    let generators: Vec<GenRef> = (-m..=m).collect();
    let relators = (-m + 1..=m).map(|j| edge_relator(spec, j)).collect();
    PresState { generators, relators }
}

/// `g_{j-1}^{k_j} g_j^{-l_j}`.
pub fn edge_relator(spec: &ChainSpec, j: i32) -> Word {
    let (k, l) = spec.pair(j);
    Word::from_pairs([(j - 1, k), (j, -l)])
}

/// `a_{i,m} = ∏_{j=-m}^{i-1} g_j^{-(k_{j+1}-1)} · g_i`, and `a_{-m,m} = g_{-m}`.
pub fn cone_generator(spec: &ChainSpec, id: ConeGenId) -> Result<Word, Error> {
    let id = ConeGenId::new(id.i, id.m)?;
    Ok(based_cone_generator(spec, -(id.m as i32), id.i))
}

/// Cone generator of the sub-chain `g_base, g_base+1, …` whose largest
/// generator is `g_base`.
pub fn based_cone_generator(spec: &ChainSpec, base: i32, i: i32) -> Word {
    debug_assert!(i >= base);
    Word::from_pairs((base..i).map(|j| (j, 1 - spec.k(j + 1))).chain([(i, 1)]))
}

/// Parses the word grammar, expanding `a(i,m)` terms through `spec`.
pub fn parse_word(spec: &ChainSpec, s: &str) -> Result<Word, Error> {
    let mut out = Word::identity();
    for t in parse_terms(s)? {
        let w = match t {
            Term::Gen { level, exp } => Word::power(level, exp),
            Term::Cone { i, m, exp } => {
                let i = i32::try_from(i).map_err(|_| Error::OutOfRange(format!("a({i},{m})")))?;
                let m = u32::try_from(m).map_err(|_| Error::OutOfRange(format!("a({i},{m})")))?;
                cone_generator(spec, ConeGenId::new(i, m)?)?.pow(exp)
            }
        };
        out = out.mul(&w);
    }
    Ok(out)
}

/// `r_prev = q · r_cur + r_next`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub dividend: i64,
    pub quotient: i64,
    pub divisor: i64,
    pub remainder: i64,
}

/// One Tietze move: generator `replaced` becomes `image`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TietzeStep {
    pub replaced: GenRef,
    pub image: Word,
    pub resolution: Resolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Obstruction {
    pub gcd: i64,
    pub reduced: (i64, i64),
}

/// Generator `0` is `x = g_i`, generator `1` is `y = g_{i+1}`; the edge relation
/// is `x^k = y^l` and both generators commute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TietzeTrace {
    pub k: i64,
    pub l: i64,
    pub obstruction: Option<Obstruction>,
    /// Set when `r1 < r2` and the roles of `x` and `y` were exchanged.
    pub swapped: bool,
    pub steps: Vec<TietzeStep>,
    /// Final relation `lhs = rhs` in the renamed generators.
    pub final_relation: (Word, Word),
}

impl TietzeTrace {
    pub fn reduced(&self) -> (i64, i64) {
        self.obstruction.map(|o| o.reduced).unwrap_or((self.k, self.l))
    }

    pub fn has_exponent_one(&self) -> bool {
        let (a, b) = &self.final_relation;
        [a, b].iter().any(|w| w.letters().iter().any(|l| l.exp.abs() == 1))
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Runs the remainder sequence on `(k/d, l/d)`, replacing at each division the
/// generator that carries the smaller exponent.
pub fn euclid_normalize(k: i64, l: i64) -> Result<TietzeTrace, Error> {
    if k < 2 || l < 2 {
        return Err(Error::InvalidSpec(format!("euclid needs k, l >= 2, got ({k},{l})")));
    }
    let d = gcd(k, l);
    let (r1, r2) = (k / d, l / d);
    let obstruction = (d > 1).then_some(Obstruction {
        gcd: d,
        reduced: (r1, r2),
    });
    let swapped = r1 < r2;
    // (generator, exponent) for the larger and smaller side.
    let (mut big, mut small) = if swapped {
        ((1, r2), (0, r1))
    } else {
        ((0, r1), (1, r2))
    };
    let mut steps = Vec::new();
    while small.1 > 0 && big.1 > small.1 {
        let q = big.1 / small.1;
        let r = big.1 % small.1;
        let image = Word::from_pairs([(small.0, 1), (big.0, -q)]);
        steps.push(TietzeStep {
            replaced: small.0,
            image,
            resolution: Resolution {
                dividend: big.1,
                quotient: q,
                divisor: small.1,
                remainder: r,
            },
        });
        (big, small) = ((small.0, small.1), (big.0, r));
    }
    let final_relation = (Word::power(big.0, big.1), Word::power(small.0, small.1));
    Ok(TietzeTrace {
        k,
        l,
        obstruction,
        swapped,
        steps,
        final_relation,
    })
}

/// Replay of a trace on the free abelian group on `x, y`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbelianReplay {
    /// Row `g` holds the current generator `g` in the original `(x, y)` basis.
    pub basis: [[i64; 2]; 2],
    /// The reduced relation `r1·x - r2·y` in the current basis.
    pub relation: [i64; 2],
    /// The renaming chain is invertible over Z.
    pub unimodular: bool,
    /// One generator can be eliminated, leaving a single-generator presentation.
    pub single_generator: bool,
}

pub fn abelian_replay(trace: &TietzeTrace) -> AbelianReplay {
    let (r1, r2) = trace.reduced();
    let mut basis = [[1i64, 0], [0, 1]];
    for step in &trace.steps {
        let mut v = [0i64; 2];
        for letter in step.image.letters() {
            let row = basis[letter.gen as usize];
            v[0] += letter.exp * row[0];
            v[1] += letter.exp * row[1];
        }
        basis[step.replaced as usize] = v;
    }
    let det = basis[0][0] * basis[1][1] - basis[0][1] * basis[1][0];
    // Solve c0·basis[0] + c1·basis[1] = (r1, -r2) with the adjugate.
    let target = [r1, -r2];
    let c0 = (target[0] * basis[1][1] - target[1] * basis[1][0]) * det;
    let c1 = (target[1] * basis[0][0] - target[0] * basis[0][1]) * det;
    let relation = [c0, c1];
    AbelianReplay {
        basis,
        relation,
        unimodular: det.abs() == 1,
        single_generator: det.abs() == 1 && relation.iter().any(|c| c.abs() == 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c23() -> ChainSpec {
        ChainSpec::constant(2, 3).unwrap()
    }

    #[test]
    fn presentation_m0_has_no_relators() {
        let p = chain_presentation(&c23(), 0);
        assert_eq!(p.generators, vec![0]);
        assert!(p.relators.is_empty());
    }

    #[test]
    fn presentation_m1_matches_displayed_relations() {
        let p = chain_presentation(&c23(), 1);
        assert_eq!(p.generators, vec![-1, 0, 1]);
        let shown: Vec<String> = p.relators.iter().map(|r| r.to_string()).collect();
        assert_eq!(shown, ["g(-1)^2 g(0)^-3", "g(0)^2 g(1)^-3"]);
    }

    #[test]
    fn presentation_22_m2() {
        let p = chain_presentation(&ChainSpec::constant(2, 2).unwrap(), 2);
        assert_eq!(p.relators.len(), 4);
        for (idx, r) in p.relators.iter().enumerate() {
            let j = idx as i32 - 1;
            assert_eq!(r, &Word::from_pairs([(j - 1, 2), (j, -2)]));
        }
    }

    #[test]
    fn cone_generator_examples() {
        let s = c23();
        let a = |i, m| cone_generator(&s, ConeGenId { i, m }).unwrap().to_string();
        assert_eq!(a(-1, 1), "g(-1)");
        assert_eq!(a(0, 1), "g(-1)^-1 g(0)");
        assert_eq!(a(1, 1), "g(-1)^-1 g(0)^-1 g(1)");
        assert_eq!(a(0, 0), "g(0)");
        assert!(cone_generator(&s, ConeGenId { i: 2, m: 1 }).is_err());
    }

    #[test]
    fn cone_generator_uses_level_dependent_k() {
        let s = ChainSpec::Periodic {
            pairs: vec![(2, 3), (4, 2)],
        };
        // k_0 = 2, k_1 = 4
        let w = cone_generator(&s, ConeGenId { i: 1, m: 1 }).unwrap();
        assert_eq!(w.to_string(), "g(-1)^-1 g(0)^-3 g(1)");
    }

    #[test]
    fn parse_expands_cone_terms() {
        let s = c23();
        assert_eq!(parse_word(&s, "a(0,1)").unwrap().to_string(), "g(-1)^-1 g(0)");
        assert_eq!(
            parse_word(&s, "a(1,1)^-1 g(1)").unwrap().to_string(),
            "g(1)^-1 g(0) g(-1) g(1)"
        );
        assert_eq!(parse_word(&s, "a(-1,1)^2 a(-1,1)").unwrap().to_string(), "g(-1)^3");
        assert!(parse_word(&s, "a(3,1)").is_err());
        assert!(parse_word(&s, "a(0,-1)").is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(ChainSpec::constant(1, 3).is_err());
        assert!(ChainSpec::Periodic { pairs: vec![] }.validate().is_err());
        let t = ChainSpec::Table {
            entries: BTreeMap::from([(0, (2, 3))]),
            default: (2, 2),
        };
        assert!(t.validate().is_ok());
        assert_eq!(t.pair(0), (2, 3));
        assert_eq!(t.pair(7), (2, 2));
        assert!(!t.is_shift_invariant(1));
        assert!(ChainSpec::Periodic {
            pairs: vec![(2, 3), (3, 2)]
        }
        .is_shift_invariant(4));
        assert!(!ChainSpec::Periodic {
            pairs: vec![(2, 3), (3, 2)]
        }
        .is_shift_invariant(1));
    }

    #[test]
    fn euclid_4_6() {
        let t = euclid_normalize(4, 6).unwrap();
        assert_eq!(
            t.obstruction,
            Some(Obstruction {
                gcd: 2,
                reduced: (2, 3)
            })
        );
        let res: Vec<_> = t.steps.iter().map(|s| s.resolution).collect();
        assert_eq!(
            res,
            vec![
                Resolution {
                    dividend: 3,
                    quotient: 1,
                    divisor: 2,
                    remainder: 1
                },
                Resolution {
                    dividend: 2,
                    quotient: 2,
                    divisor: 1,
                    remainder: 0
                },
            ]
        );
        assert!(t.has_exponent_one());
        assert!(t.swapped);
    }

    #[test]
    fn euclid_2_3_and_3_3() {
        let t = euclid_normalize(2, 3).unwrap();
        assert_eq!(t.obstruction, None);
        assert_eq!(t.steps.len(), 2);
        let t = euclid_normalize(3, 3).unwrap();
        assert_eq!(
            t.obstruction,
            Some(Obstruction {
                gcd: 3,
                reduced: (1, 1)
            })
        );
        assert!(t.steps.is_empty());
        assert!(t.has_exponent_one());
        assert!(abelian_replay(&t).single_generator);
        assert!(euclid_normalize(1, 4).is_err());
    }

    #[test]
    fn euclid_substitutions_are_invertible() {
        for k in 2..=9 {
            for l in 2..=9 {
                let t = euclid_normalize(k, l).unwrap();
                for s in &t.steps {
                    let own: Vec<_> = s.image.letters().iter().filter(|x| x.gen == s.replaced).collect();
                    assert_eq!(own.len(), 1);
                    assert_eq!(own[0].exp.abs(), 1);
                }
                let r = abelian_replay(&t);
                assert!(r.unimodular);
                assert!(r.single_generator, "({k},{l})");
            }
        }
    }

    proptest! {
        #[test]
        fn presentation_counts(m in 0u32..6, k in 2i64..7, l in 2i64..7) {
            let p = chain_presentation(&ChainSpec::Constant { k, l }, m);
            prop_assert_eq!(p.generators.len() as u32, 2 * m + 1);
            prop_assert_eq!(p.relators.len() as u32, 2 * m);
        }

        #[test]
        fn euclid_remainders_chain(k in 2i64..40, l in 2i64..40) {
            let t = euclid_normalize(k, l).unwrap();
            for w in t.steps.windows(2) {
                prop_assert_eq!(w[1].resolution.dividend, w[0].resolution.divisor);
                prop_assert_eq!(w[1].resolution.divisor, w[0].resolution.remainder);
            }
            for s in &t.steps {
                let r = s.resolution;
                prop_assert_eq!(r.dividend, r.quotient * r.divisor + r.remainder);
                prop_assert!(r.remainder < r.divisor);
            }
            prop_assert!(t.has_exponent_one());
        }
    }
}
