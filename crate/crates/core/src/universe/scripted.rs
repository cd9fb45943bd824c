//! Scripted stand-ins for the oracles the constructions consume: jump
//! approximations, dominating functions and c.e. enumerations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::encoding::{BitString, LogMode, MembershipEventLog};

use super::UniverseError;

/// One bit of the scripted jump: its value at stage 0, the stages at which
/// it flips, and the declared stage after which it no longer changes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpBit {
    pub initial: u8,
    #[serde(default)]
    pub flips: Vec<u64>,
    pub settling: u64,
}

impl JumpBit {
    pub fn at(&self, s: u64) -> bool {
        let flips = self.flips.iter().filter(|&&t| t <= s).count();
        (self.initial == 1) ^ (flips % 2 == 1)
    }

    pub fn limit(&self) -> bool {
        self.at(self.settling)
    }
}

/// `Z'_s` restricted to finitely many scripted bits; bits past the script
/// read 0 at every stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpScenario {
    bits: Vec<JumpBit>,
}

impl JumpScenario {
    pub fn new(bits: Vec<JumpBit>) -> Result<Self, UniverseError> {
        for (e, b) in bits.iter().enumerate() {
            if b.initial > 1 {
                return Err(UniverseError::Scenario(format!(
                    "jump bit {e}: initial value must be 0 or 1"
                )));
            }
            if b.flips.windows(2).any(|w| w[0] >= w[1]) {
                return Err(UniverseError::Scenario(format!(
                    "jump bit {e}: flip stages must strictly increase"
                )));
            }
            if b.flips.iter().any(|&t| t > b.settling) {
                return Err(UniverseError::Scenario(format!(
                    "jump bit {e}: flips after the declared settling stage {}",
                    b.settling
                )));
            }
        }
        Ok(JumpScenario { bits })
    }

    pub fn bits(&self) -> &[JumpBit] {
        &self.bits
    }

    pub fn bit_at(&self, e: usize, s: u64) -> bool {
        self.bits.get(e).is_some_and(|b| b.at(s))
    }

    pub fn limit_bit(&self, e: usize) -> bool {
        self.bits.get(e).is_some_and(JumpBit::limit)
    }

    /// `Z'_s ↾ n`.
    pub fn jump_at(&self, n: usize, s: u64) -> BitString {
        BitString::from_bits((0..n).map(|e| self.bit_at(e, s)).collect())
    }

    /// Least stage from which `Z'_s ↾ n` is constant.
    pub fn settling(&self, n: usize) -> u64 {
        self.bits.iter().take(n).map(|b| b.settling).max().unwrap_or(0)
    }
}

/// A total function `h` with `h(s) >= s`, given in closed form or by table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DominatingOracle {
    /// `h(s) = a*s + b`
    Affine { a: u64, b: u64 },
    /// `h(s) = a*s^2 + b*s + c`
    Quadratic { a: u64, b: u64, c: u64 },
    /// Explicit values; beyond the table `h(s) = s + last - (len - 1)`.
    Table { values: Vec<u64> },
}

impl DominatingOracle {
    pub fn value(&self, s: u64) -> u64 {
        match self {
            DominatingOracle::Affine { a, b } => a.saturating_mul(s).saturating_add(*b),
            DominatingOracle::Quadratic { a, b, c } => a
                .saturating_mul(s.saturating_mul(s))
                .saturating_add(b.saturating_mul(s))
                .saturating_add(*c),
            DominatingOracle::Table { values } => match values.get(s as usize) {
                Some(&v) => v,
                None => {
                    let last = values.len() as u64;
                    let tail = values.last().copied().unwrap_or(0);
                    (s + tail).saturating_sub(last.saturating_sub(1))
                }
            },
        }
    }

    /// Checks `h(s) >= s` for every `s < upto`.
    pub fn validate(&self, upto: u64) -> Result<(), UniverseError> {
        match (0..upto).find(|&s| self.value(s) < s) {
            Some(s) => Err(UniverseError::Scenario(format!(
                "dominating oracle has h({s}) = {} < {s}",
                self.value(s)
            ))),
            None => Ok(()),
        }
    }
}

/// A stagewise enumeration `A_0 ⊆ A_1 ⊆ ...` of a c.e. set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CeEnumeration {
    log: MembershipEventLog,
    /// Least element entering at each stage.
    least_entry: BTreeMap<u64, u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Insertion {
    pub stage: u64,
    pub element: u64,
}

impl CeEnumeration {
    /// Insertions must be listed with nondecreasing stages and distinct
    /// elements.
    pub fn new(insertions: &[Insertion]) -> Result<Self, UniverseError> {
        let horizon = insertions.iter().map(|i| i.stage).max().unwrap_or(0);
        let mut log = MembershipEventLog::new(LogMode::Ce, horizon);
        let mut least_entry = BTreeMap::new();
        let mut last_stage = 0;
        for ins in insertions {
            if ins.stage < last_stage {
                return Err(UniverseError::Scenario(format!(
                    "c.e. enumeration: stage {} listed after stage {last_stage}",
                    ins.stage
                )));
            }
            last_stage = ins.stage;
            log.insert(ins.element, ins.stage).map_err(|_| {
                UniverseError::Scenario(format!(
                    "c.e. enumeration: element {} enumerated twice",
                    ins.element
                ))
            })?;
            least_entry
                .entry(ins.stage)
                .and_modify(|m: &mut u64| *m = (*m).min(ins.element))
                .or_insert(ins.element);
        }
        Ok(CeEnumeration { log, least_entry })
    }

    pub fn insertions(&self) -> Vec<Insertion> {
        self.log
            .events()
            .into_iter()
            .map(|ev| Insertion {
                stage: ev.stage,
                element: ev.element,
            })
            .collect()
    }

    pub fn contains_at(&self, x: u64, s: u64) -> bool {
        self.log
            .history_of(x)
            .first()
            .is_some_and(|&(t, _)| t <= s)
    }

    /// Least element entering at stage `s`, if any.
    pub fn least_entry(&self, s: u64) -> Option<u64> {
        self.least_entry.get(&s).copied()
    }

    /// Whether `A_s ↾ x != A_{s-1} ↾ x`.
    pub fn changes_below(&self, x: u64, s: u64) -> bool {
        s > 0 && self.least_entry(s).is_some_and(|m| m < x)
    }

    pub fn log(&self) -> &MembershipEventLog {
        &self.log
    }
}
