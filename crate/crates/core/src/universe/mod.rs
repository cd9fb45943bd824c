//! Effective listings: scripted or machine-backed partial functions with
//! explicit convergence stages, and the listings derived from them.
//!
//! `psi_at` normalizes `φ_e` to a `{0,1}`-valued function whose domain at
//! every stage is an initial segment: `ψ_e(x)` is defined at `s` iff
//! `φ_e(y)` has converged by `s` for every `y <= x`, and then equals
//! `φ_e(x) mod 2`. Indices past the end of the listing are nowhere
//! defined for the derived listings.

pub mod machine;
mod script;
mod scripted;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::Column;

pub use machine::{
    run_machine, run_with_oracle, Instruction, MachineProgram, Oracle, ProgramError, RunOutcome,
};
pub use scripted::{CeEnumeration, DominatingOracle, Insertion, JumpBit, JumpScenario};

pub const DEFAULT_FUEL_PER_STAGE: u64 = 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UniverseError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("index {0} is declared more than once")]
    DuplicateIndex(u64),
    #[error("indices must be numbered 0..{len} without gaps; {missing} is missing")]
    MissingIndex { missing: u64, len: u64 },
    #[error("index {e}: input {x} is scheduled more than once")]
    NonMonotone { e: u64, x: u64 },
    #[error("index {e}: {reason}")]
    BadSchedule { e: u64, reason: String },
    #[error("index {e}: {source}")]
    Program { e: u64, source: ProgramError },
    #[error("index {e} is beyond the listing of {len} indices")]
    IndexOutOfRange { e: u64, len: u64 },
    #[error("index {0} has no declared limit behavior")]
    Undeclared(u64),
    #[error("{0}")]
    Scenario(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Phi {
    Converged(u64),
    Pending,
}

impl Phi {
    pub fn value(self) -> Option<u64> {
        match self {
            Phi::Converged(v) => Some(v),
            Phi::Pending => None,
        }
    }
}

/// What `ψ_e` does in the limit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitBehavior {
    /// Defined exactly on `[0, domain_len)`.
    Partial { domain_len: u64 },
    /// Total, with `ψ(x) = prefix[x]` below the prefix and `period[x % p]`
    /// above it.
    Total { prefix: Vec<u8>, period: Vec<u8> },
    Undeclared,
}

/// Values and convergence stages listed input by input; unlisted inputs
/// diverge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSchedule {
    entries: BTreeMap<u64, (u64, u64)>,
    /// `prefix_stage[i]` is the stage by which all of `0..=i` converged.
    prefix_stage: Vec<u64>,
}

impl TableSchedule {
    /// `entries` are `(x, value, stage)`.
    pub fn new(e: u64, entries: &[(u64, u64, u64)]) -> Result<Self, UniverseError> {
        let mut map = BTreeMap::new();
        for &(x, value, stage) in entries {
            if map.insert(x, (value, stage)).is_some() {
                return Err(UniverseError::NonMonotone { e, x });
            }
        }
        let mut prefix_stage = Vec::new();
        let mut worst = 0;
        for (i, (&x, &(_, stage))) in map.iter().enumerate() {
            if x != i as u64 {
                break;
            }
            worst = worst.max(stage);
            prefix_stage.push(worst);
        }
        Ok(TableSchedule {
            entries: map,
            prefix_stage,
        })
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, u64, u64)> + '_ {
        self.entries.iter().map(|(&x, &(v, s))| (x, v, s))
    }
}

/// `φ(x) = prefix[x]` below the prefix and `pattern[x % len]` above, converging
/// at stage `slope*x + offset`, except on the listed divergent inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSchedule {
    pub prefix: Vec<u64>,
    pub pattern: Vec<u64>,
    pub slope: u64,
    pub offset: u64,
    pub divergent: BTreeSet<u64>,
}

impl PatternSchedule {
    pub fn new(pattern: Vec<u64>) -> Self {
        PatternSchedule {
            prefix: Vec::new(),
            pattern,
            slope: 0,
            offset: 0,
            divergent: BTreeSet::new(),
        }
    }

    pub fn with_prefix(mut self, prefix: Vec<u64>) -> Self {
        self.prefix = prefix;
        self
    }

    pub fn with_delay(mut self, slope: u64, offset: u64) -> Self {
        self.slope = slope;
        self.offset = offset;
        self
    }

    pub fn diverging_at(mut self, xs: impl IntoIterator<Item = u64>) -> Self {
        self.divergent.extend(xs);
        self
    }

    fn raw(&self, x: u64) -> u64 {
        match self.prefix.get(x as usize) {
            Some(&v) => v,
            None => self.pattern[(x % self.pattern.len() as u64) as usize],
        }
    }

    fn stage_of(&self, x: u64) -> u64 {
        self.slope.saturating_mul(x).saturating_add(self.offset)
    }

    fn dom_len(&self, s: u64, cap: u64) -> u64 {
        let first_div = self.divergent.iter().next().copied().unwrap_or(u64::MAX);
        let by_stage = if s < self.offset {
            0
        } else if self.slope == 0 {
            u64::MAX
        } else {
            (s - self.offset) / self.slope + 1
        };
        by_stage.min(first_div).min(cap)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct MachineMemo {
    halted: Option<(u64, u64)>,
    tried: u64,
}

/// A counter-machine program; `φ(x)` converges by stage `s` iff the run on
/// `x` halts within `s * fuel_per_stage` steps.
#[derive(Debug)]
pub struct MachineSchedule {
    program: MachineProgram,
    limit: LimitBehavior,
    memo: Mutex<HashMap<u64, MachineMemo>>,
}

impl Clone for MachineSchedule {
    fn clone(&self) -> Self {
        MachineSchedule::new(self.program.clone(), self.limit.clone())
    }
}

impl PartialEq for MachineSchedule {
    fn eq(&self, other: &Self) -> bool {
        self.program == other.program && self.limit == other.limit
    }
}

impl Eq for MachineSchedule {}

impl MachineSchedule {
    pub fn new(program: MachineProgram, limit: LimitBehavior) -> Self {
        MachineSchedule {
            program,
            limit,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn program(&self) -> &MachineProgram {
        &self.program
    }

    fn halting(&self, x: u64, fuel: u64) -> Option<(u64, u64)> {
        let mut memo = self.memo.lock().unwrap_or_else(|p| p.into_inner());
        let entry = memo.entry(x).or_default();
        if let Some((v, steps)) = entry.halted {
            return (steps <= fuel).then_some((v, steps));
        }
        if entry.tried >= fuel {
            return None;
        }
        // grow geometrically so repeated stage queries stay cheap
        let budget = fuel.max(entry.tried.saturating_mul(2));
        match run_machine(&self.program, x, budget) {
            RunOutcome::Halt { value, steps } => {
                entry.halted = Some((value, steps));
                (steps <= fuel).then_some((value, steps))
            }
            _ => {
                entry.tried = budget;
                None
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schedule {
    Table(TableSchedule),
    Pattern(PatternSchedule),
    Machine(MachineSchedule),
}

impl Schedule {
    fn phi(&self, x: u64, s: u64, fuel_per_stage: u64) -> Phi {
        match self {
            Schedule::Table(t) => match t.entries.get(&x) {
                Some(&(v, stage)) if stage <= s => Phi::Converged(v),
                _ => Phi::Pending,
            },
            Schedule::Pattern(p) => {
                if !p.divergent.contains(&x) && p.stage_of(x) <= s {
                    Phi::Converged(p.raw(x))
                } else {
                    Phi::Pending
                }
            }
            Schedule::Machine(m) => match m.halting(x, s.saturating_mul(fuel_per_stage)) {
                Some((v, _)) => Phi::Converged(v),
                None => Phi::Pending,
            },
        }
    }

    fn dom_len(&self, s: u64, cap: u64, fuel_per_stage: u64) -> u64 {
        match self {
            Schedule::Table(t) => {
                (t.prefix_stage.partition_point(|&st| st <= s) as u64).min(cap)
            }
            Schedule::Pattern(p) => p.dom_len(s, cap),
            Schedule::Machine(_) => (0..cap)
                .find(|&x| self.phi(x, s, fuel_per_stage) == Phi::Pending)
                .unwrap_or(cap),
        }
    }

    fn limit(&self) -> LimitBehavior {
        match self {
            Schedule::Table(t) => LimitBehavior::Partial {
                domain_len: t.prefix_stage.len() as u64,
            },
            Schedule::Pattern(p) => match p.divergent.iter().next() {
                Some(&d) => LimitBehavior::Partial { domain_len: d },
                None => LimitBehavior::Total {
                    prefix: p.prefix.iter().map(|v| (v % 2) as u8).collect(),
                    period: p.pattern.iter().map(|v| (v % 2) as u8).collect(),
                },
            },
            Schedule::Machine(m) => m.limit.clone(),
        }
    }
}

/// An indexed listing of partial functions plus the scripted oracles
/// scenarios may attach.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    indices: Vec<Schedule>,
    jump: Option<JumpScenario>,
    dominating: Option<DominatingOracle>,
    ce_set: Option<CeEnumeration>,
    fuel_per_stage: u64,
    limit_stage: u64,
}

impl Universe {
    pub fn new(indices: Vec<Schedule>) -> Self {
        Universe {
            indices,
            jump: None,
            dominating: None,
            ce_set: None,
            fuel_per_stage: DEFAULT_FUEL_PER_STAGE,
            limit_stage: 10_000,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, UniverseError> {
        script::load(text)
    }

    pub fn with_jump(mut self, jump: JumpScenario) -> Self {
        self.jump = Some(jump);
        self
    }

    pub fn with_dominating(mut self, h: DominatingOracle) -> Self {
        self.dominating = Some(h);
        self
    }

    pub fn with_ce_set(mut self, a: CeEnumeration) -> Self {
        self.ce_set = Some(a);
        self
    }

    pub fn with_fuel_per_stage(mut self, fuel: u64) -> Self {
        self.fuel_per_stage = fuel.max(1);
        self
    }

    /// Stage at which machine-backed indices are evaluated when a limit
    /// value is requested.
    pub fn with_limit_stage(mut self, stage: u64) -> Self {
        self.limit_stage = stage;
        self
    }

    pub fn len(&self) -> u64 {
        self.indices.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn fuel_per_stage(&self) -> u64 {
        self.fuel_per_stage
    }

    pub fn schedule(&self, e: u64) -> Option<&Schedule> {
        self.indices.get(e as usize)
    }

    pub fn jump(&self) -> Option<&JumpScenario> {
        self.jump.as_ref()
    }

    pub fn dominating(&self) -> Option<&DominatingOracle> {
        self.dominating.as_ref()
    }

    pub fn ce_set(&self) -> Option<&CeEnumeration> {
        self.ce_set.as_ref()
    }

    /// `φ_{e,s}(x)`.
    pub fn phi_at(&self, e: u64, x: u64, s: u64) -> Result<Phi, UniverseError> {
        let sched = self.schedule(e).ok_or(UniverseError::IndexOutOfRange {
            e,
            len: self.len(),
        })?;
        Ok(sched.phi(x, s, self.fuel_per_stage))
    }

    /// Length of the domain of `ψ_{e,s}`, capped at `cap`.
    pub fn psi_dom_len(&self, e: u64, s: u64, cap: u64) -> u64 {
        self.schedule(e)
            .map_or(0, |sched| sched.dom_len(s, cap, self.fuel_per_stage))
    }

    /// `ψ_{e,s}(x)`, or `None` where undefined.
    pub fn psi_at(&self, e: u64, x: u64, s: u64) -> Option<u8> {
        let sched = self.schedule(e)?;
        if sched.dom_len(s, x + 1, self.fuel_per_stage) <= x {
            return None;
        }
        sched
            .phi(x, s, self.fuel_per_stage)
            .value()
            .map(|v| (v % 2) as u8)
    }

    /// `V_{e,k}` at stage `s`, below `bound`.
    pub fn v_at(&self, e: u64, k: u8, s: u64, bound: u64) -> Column {
        let Some(sched) = self.schedule(e) else {
            return Column::new();
        };
        let dom = sched.dom_len(s, bound, self.fuel_per_stage);
        (0..dom)
            .filter(|&x| {
                sched
                    .phi(x, s, self.fuel_per_stage)
                    .value()
                    .is_some_and(|v| (v % 2) as u8 == k)
            })
            .collect()
    }

    /// `M_e` at stage `s`, below `bound`: `M_{2i} = W_i`, `M_{2i+1} = ω`.
    pub fn m_at(&self, e: u64, s: u64, bound: u64) -> Column {
        let i = e / 2;
        if e % 2 == 1 {
            return (0..s.min(bound)).collect();
        }
        let Some(sched) = self.schedule(i) else {
            return Column::new();
        };
        match sched {
            Schedule::Table(t) => t
                .entries
                .range(..bound)
                .filter(|(_, &(_, st))| st <= s)
                .map(|(&x, _)| x)
                .collect(),
            _ => (0..bound)
                .filter(|&x| sched.phi(x, s, self.fuel_per_stage) != Phi::Pending)
                .collect(),
        }
    }

    pub fn limit(&self, e: u64) -> LimitBehavior {
        self.schedule(e)
            .map_or(LimitBehavior::Partial { domain_len: 0 }, Schedule::limit)
    }

    /// `ψ_e(x)` in the limit. Scripted indices are exact; machine indices
    /// use the declared limit behavior and otherwise the configured limit
    /// stage.
    pub fn psi_limit(&self, e: u64, x: u64) -> Option<u8> {
        let sched = self.schedule(e)?;
        match sched {
            Schedule::Table(_) | Schedule::Pattern(_) => self.psi_at(e, x, u64::MAX),
            Schedule::Machine(m) => match &m.limit {
                LimitBehavior::Total { prefix, period } => Some(
                    prefix
                        .get(x as usize)
                        .copied()
                        .unwrap_or_else(|| period[(x % period.len() as u64) as usize]),
                ),
                LimitBehavior::Partial { domain_len } if x >= *domain_len => None,
                _ => self.psi_at(e, x, self.limit_stage),
            },
        }
    }

    /// `V_{e,k}` in the limit, below `bound`.
    pub fn v_limit(&self, e: u64, k: u8, bound: u64) -> Column {
        (0..bound)
            .filter(|&x| self.psi_limit(e, x) == Some(k))
            .collect()
    }

    pub fn is_total(&self, e: u64) -> Option<bool> {
        match self.limit(e) {
            LimitBehavior::Total { .. } => Some(true),
            LimitBehavior::Partial { .. } => Some(false),
            LimitBehavior::Undeclared => None,
        }
    }

    /// Indices declared total.
    pub fn total_indices(&self) -> Vec<u64> {
        (0..self.len())
            .filter(|&e| self.is_total(e) == Some(true))
            .collect()
    }
}

impl fmt::Display for Universe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "universe of {} indices", self.len())
    }
}
