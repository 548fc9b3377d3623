//! Run configuration: the group setting from the config file, named budgets
//! with the environment scale applied, and the sign oracle for the setting.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use ordlim::chaingroup::CyclicTower;
use ordlim::cone::{Cone, DEFAULT_BUDGET};
use ordlim::ito::{iterate_chain, ChainIteration, FamilyDescriptor, HandleDescriptor, HandleOptions};
use ordlim::orderprobes::{SignOracle, TowerDirection, TowerOrder};
use ordlim::presentations::{parse_word, ChainSpec};
use ordlim::{Error, Word};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelEntry {
    pub level: i32,
    #[serde(flatten)]
    pub handle: HandleDescriptor,
}

/// The `chain` object of a config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ChainConfig {
    Constant {
        k: i64,
        l: i64,
    },
    Periodic {
        pairs: Vec<(i64, i64)>,
    },
    /// Keys are level numbers; JSON object keys are strings.
    Table {
        entries: BTreeMap<String, (i64, i64)>,
        default: (i64, i64),
    },
    CyclicTower {
        l: i64,
        #[serde(default = "standard_up")]
        direction: TowerDirection,
    },
    Handles {
        #[serde(default = "z_two")]
        default: HandleDescriptor,
        #[serde(default)]
        family: Vec<LevelEntry>,
    },
}

fn standard_up() -> TowerDirection {
    TowerDirection::StandardUp
}

fn z_two() -> HandleDescriptor {
    HandleDescriptor::Z { n: 2 }
}

/// The config file: a group setting plus optional budgets and horizons that
/// command-line flags override.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub chain: ChainConfig,
    #[serde(default)]
    pub budgets: BTreeMap<String, i64>,
    #[serde(default)]
    pub m: Option<u32>,
    #[serde(default)]
    pub radius: Option<u32>,
    #[serde(default)]
    pub horizon: Option<u32>,
}

pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
}

/// The group and ordering a command runs in.
pub enum Setting {
    Chain(Cone),
    Tower(TowerOrder),
    Handles(Box<ChainIteration>),
}

impl Setting {
    /// Handle families are iterated to level `m`.
    pub fn build(chain: &ChainConfig, m: u32, sign_budget: u64) -> Result<Self, CliError> {
        Ok(match chain {
            ChainConfig::Constant { k, l } => Setting::Chain(Cone::new(ChainSpec::Constant { k: *k, l: *l })?),
            ChainConfig::Periodic { pairs } => Setting::Chain(Cone::new(ChainSpec::Periodic { pairs: pairs.clone() })?),
            ChainConfig::Table { entries, default } => {
                let entries = entries
                    .iter()
                    .map(|(k, v)| {
                        let level = k
                            .trim()
                            .parse()
                            .map_err(|_| CliError::Usage(format!("table level {k:?} is not an integer")))?;
                        Ok((level, *v))
                    })
                    .collect::<Result<_, CliError>>()?;
                Setting::Chain(Cone::new(ChainSpec::Table {
                    entries,
                    default: *default,
                })?)
            }
            ChainConfig::CyclicTower { l, direction } => {
                Setting::Tower(TowerOrder::new(CyclicTower::new(*l)?, *direction))
            }
            ChainConfig::Handles { default, family } => {
                let opts = HandleOptions {
                    budget: sign_budget,
                    ..HandleOptions::default()
                };
                let fam = FamilyDescriptor {
                    default: default.clone(),
                    levels: family.iter().map(|e| (e.level, e.handle.clone())).collect(),
                };
                let lookup = |n: i32| fam.handle(n, &opts);
                Setting::Handles(Box::new(iterate_chain(&lookup, m, &opts)?))
            }
        })
    }

    pub fn oracle(&self) -> &dyn SignOracle {
        match self {
            Setting::Chain(c) => c,
            Setting::Tower(t) => t,
            Setting::Handles(it) => it.handle.as_ref(),
        }
    }

    pub fn cone(&self) -> Result<&Cone, CliError> {
        match self {
            Setting::Chain(c) => Ok(c),
            _ => Err(CliError::Usage(
                "this command needs a chain spec (constant, periodic or table)".into(),
            )),
        }
    }

    pub fn spec(&self) -> Result<&ChainSpec, CliError> {
        Ok(self.cone()?.spec())
    }

    /// `g(n)` and `a(i,m)` terms for chains, `g(n)` for towers, vertex labels
    /// for handles.
    pub fn parse(&self, s: &str) -> Result<Word, CliError> {
        Ok(match self {
            Setting::Chain(c) => parse_word(c.spec(), s)?,
            Setting::Tower(_) => Word::parse(s).map_err(Error::from)?,
            Setting::Handles(it) => it.handle.parse(s)?,
        })
    }
}

/// Named budgets after defaults, config values, flags, and the scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Budgets {
    pub scale: u64,
    pub values: BTreeMap<String, u64>,
}

pub const BUDGET_NAMES: [&str; 2] = ["sign", "steps"];

impl Budgets {
    pub fn resolve(
        chain: Option<&ChainConfig>,
        config: &BTreeMap<String, i64>,
        flags: &[String],
    ) -> Result<Self, CliError> {
        let scale = match std::env::var("ORDLIM_BUDGET_SCALE") {
            Ok(s) => match s.trim().parse::<u64>() {
                Ok(n) if n >= 1 => n,
                _ => {
                    return Err(CliError::Usage(format!(
                        "ORDLIM_BUDGET_SCALE must be a positive integer, got {s:?}"
                    )))
                }
            },
            Err(_) => 1,
        };
        let sign_default = match chain {
            Some(ChainConfig::Handles { .. }) => HandleOptions::default().budget,
            Some(ChainConfig::CyclicTower { .. }) => 1,
            _ => DEFAULT_BUDGET,
        };
        let mut raw: BTreeMap<String, i64> =
            BTreeMap::from([("sign".to_string(), sign_default as i64), ("steps".to_string(), 5_000)]);
        let mut set = |name: &str, v: i64| -> Result<(), CliError> {
            if !BUDGET_NAMES.contains(&name) {
                return Err(CliError::Usage(format!(
                    "unknown budget {name:?}; known: {}",
                    BUDGET_NAMES.join(", ")
                )));
            }
            if v < 1 {
                return Err(CliError::Usage(format!("budget {name} must be at least 1, got {v}")));
            }
            raw.insert(name.to_string(), v);
            Ok(())
        };
        for (k, v) in config {
            set(k, *v)?;
        }
        for f in flags {
            let (name, v) = f
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--budget expects NAME=N, got {f:?}")))?;
            let v: i64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--budget {name}: {v:?} is not an integer")))?;
            set(name.trim(), v)?;
        }
        let values = raw
            .into_iter()
            .map(|(k, v)| (k, (v as u64).saturating_mul(scale)))
            .collect();
        Ok(Budgets { scale, values })
    }

    pub fn get(&self, name: &str) -> u64 {
        self.values[name]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn config_variants_parse() {
        let texts = [
            r#"{"chain":{"type":"constant","k":2,"l":3}}"#,
            r#"{"chain":{"type":"periodic","pairs":[[2,3],[3,2]]}}"#,
            r#"{"chain":{"type":"table","entries":{"0":[2,3]},"default":[2,2]}}"#,
            r#"{"chain":{"type":"cyclic-tower","l":2}}"#,
            r#"{"chain":{"type":"handles","family":[{"level":1,"kind":"torus","p":2,"q":3}]},"m":1}"#,
        ];
        for t in texts {
            let f: ConfigFile = serde_json::from_str(t).unwrap();
            let back: ConfigFile = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
            assert_eq!(back, f);
        }
        let f: ConfigFile = serde_json::from_str(texts[4]).unwrap();
        let ChainConfig::Handles { default, family } = f.chain else {
            panic!()
        };
        assert_eq!(default, HandleDescriptor::Z { n: 2 });
        assert_eq!(family[0].handle, HandleDescriptor::Torus { p: 2, q: 3 });
        assert!(serde_json::from_str::<ConfigFile>(r#"{"chain":{"type":"constant","k":2,"l":3},"extra":1}"#).is_err());
    }

    #[test]
    fn budgets_layer_defaults_config_and_flags() {
        let chain = ChainConfig::Constant { k: 2, l: 3 };
        let b = Budgets::resolve(Some(&chain), &BTreeMap::new(), &[]).unwrap();
        assert_eq!(b.get("sign"), DEFAULT_BUDGET);
        assert_eq!(b.get("steps"), 5_000);
        let config = BTreeMap::from([("steps".to_string(), 10)]);
        let b = Budgets::resolve(Some(&chain), &config, &flags(&["sign=9"])).unwrap();
        assert_eq!((b.get("sign"), b.get("steps")), (9, 10));
        let b = Budgets::resolve(Some(&chain), &config, &flags(&["steps=11"])).unwrap();
        assert_eq!(b.get("steps"), 11);
        for bad in ["sign=0", "sign=-4", "sign", "sign=x", "width=3"] {
            assert!(
                matches!(
                    Budgets::resolve(None, &BTreeMap::new(), &flags(&[bad])),
                    Err(CliError::Usage(_))
                ),
                "{bad}"
            );
        }
    }

    #[test]
    fn settings_parse_their_own_grammar() {
        let chain = Setting::build(&ChainConfig::Constant { k: 2, l: 3 }, 0, DEFAULT_BUDGET).unwrap();
        assert_eq!(chain.parse("a(0,1)").unwrap(), Word::parse("g(-1)^-1 g(0)").unwrap());
        let tower = Setting::build(
            &ChainConfig::CyclicTower {
                l: 2,
                direction: TowerDirection::StandardUp,
            },
            0,
            1,
        )
        .unwrap();
        assert!(tower.parse("a(0,1)").is_err());
        assert!(tower.cone().is_err());
        let table = ChainConfig::Table {
            entries: [("-1".to_string(), (3, 2))].into(),
            default: (2, 3),
        };
        assert_eq!(Setting::build(&table, 0, 1).unwrap().spec().unwrap().pair(-1), (3, 2));
        let bad = ChainConfig::Table {
            entries: [("x".to_string(), (3, 2))].into(),
            default: (2, 3),
        };
        assert!(matches!(Setting::build(&bad, 0, 1), Err(CliError::Usage(_))));
        let handles = Setting::build(
            &ChainConfig::Handles {
                default: z_two(),
                family: Vec::new(),
            },
            1,
            200_000,
        )
        .unwrap();
        assert_eq!(handles.parse("g_0 g_1").unwrap().syllables(), 2);
    }
}
