//! A c.e. MAD family built by permitting below a c.e. set `A`, and the
//! co-c.e. maximal tower obtained from it by `Cp`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::encoding::{pair, unpair, CodedFamily, LogMode};
use crate::functionals::{cp, FunctionalError};
use crate::trace::{RunRecord, TraceHeader, TraceRecord};
use crate::universe::{CeEnumeration, Phi, Universe};

/// One insertion into `H_e` on behalf of `P_n`, `n = <e, k>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub stage: u64,
    pub n: u64,
    pub e: u64,
    pub k: u64,
    pub x: u64,
    /// Least element entering `A` at this stage.
    pub permit: u64,
}

#[derive(Debug, Clone)]
pub struct MadRun {
    pub stages: u64,
    /// `H`, with columns `H_e` for `e < stages`.
    pub h: CodedFamily,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RequirementStatus {
    Unsatisfied,
    PermanentlySatisfied { since: u64 },
}

impl MadRun {
    pub fn h_column(&self, e: u64) -> Vec<u64> {
        self.actions.iter().filter(|a| a.e == e).map(|a| a.x).collect()
    }

    /// `F^[e] = H^[2e] ∪ H^[2e+1]` for `e < depth`.
    pub fn f_family(&self, depth: u64) -> CodedFamily {
        let mut f = CodedFamily::new(LogMode::Ce, self.stages, depth, self.stages);
        for a in &self.actions {
            let col = a.e / 2;
            if col < depth && !f.contains(a.x, col, self.stages).unwrap_or(true) {
                f.insert(a.x, col, a.stage).expect("fresh element");
            }
        }
        f
    }

    pub fn trace(&self) -> RunRecord {
        let mut r = RunRecord::new(TraceHeader::new("mad-ce", self.stages, self.stages.max(1), self.stages));
        for a in &self.actions {
            r.push(TraceRecord::new(
                a.stage,
                "act",
                json!({ "e": a.e, "k": a.k, "n": a.n, "permit": a.permit, "x": a.x }),
            ));
        }
        r.push_family("H", &self.h);
        r
    }
}

/// `|H_{e,s} ∩ M_{e,s}| >= k`. Every `x` enters `H_e` from `M_e`, which
/// only grows, so this is the number of insertions into `H_e` by stage `s`.
pub fn requirement_status(run: &MadRun, n: u64, s: u64) -> RequirementStatus {
    let (e, k) = unpair(n);
    if k == 0 {
        return RequirementStatus::PermanentlySatisfied { since: 0 };
    }
    match run.actions.iter().filter(|a| a.e == e).nth(k as usize - 1) {
        Some(a) if a.stage <= s => RequirementStatus::PermanentlySatisfied { since: a.stage },
        _ => RequirementStatus::Unsatisfied,
    }
}

/// `G = Cp(F)` on the first `depth` columns of `F`.
pub fn compose_tower(run: &MadRun, depth: u64) -> Result<CodedFamily, FunctionalError> {
    cp(&run.f_family(depth))
}

/// First stage at which `φ_i(x)` has converged, if by `limit`.
fn convergence_stage(u: &Universe, i: u64, x: u64, limit: u64) -> Option<u64> {
    let done = |s| matches!(u.phi_at(i, x, s), Ok(Phi::Converged(_)));
    if !done(limit) {
        return None;
    }
    let (mut lo, mut hi) = (0u64, limit);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if done(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

/// `M_{2i,s} = W_{i,s} ∩ [0, s)`, kept incrementally.
struct Listing {
    arrivals: BTreeMap<u64, Vec<(u64, u64)>>,
    even: Vec<BTreeSet<u64>>,
}

impl Listing {
    fn new(u: &Universe, stages: u64) -> Self {
        let mut arrivals: BTreeMap<u64, Vec<(u64, u64)>> = BTreeMap::new();
        for i in 0..u.len() {
            for x in 0..stages {
                if let Some(c) = convergence_stage(u, i, x, stages) {
                    arrivals.entry(c.max(x + 1)).or_default().push((i, x));
                }
            }
        }
        Listing {
            arrivals,
            even: vec![BTreeSet::new(); u.len() as usize],
        }
    }

    fn advance(&mut self, s: u64) {
        if let Some(list) = self.arrivals.remove(&s) {
            for (i, x) in list {
                self.even[i as usize].insert(x);
            }
        }
    }

    /// Least `x` in `M_{e,s} ∩ [lo, s)` accepted by `ok`.
    fn first(&self, e: u64, s: u64, lo: u64, ok: impl Fn(u64) -> bool) -> Option<u64> {
        if lo >= s {
            return None;
        }
        if e % 2 == 1 {
            return (lo..s).find(|&x| ok(x));
        }
        self.even
            .get((e / 2) as usize)?
            .range(lo..s)
            .copied()
            .find(|&x| ok(x))
    }
}

pub fn build_mad(u: &Universe, a: &CeEnumeration, stages: u64) -> MadRun {
    let mut listing = Listing::new(u, stages);
    listing.advance(0);
    let mut h = CodedFamily::new(LogMode::Ce, stages, stages.max(1), stages);
    let mut columns: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    // least H-column containing each x
    let mut owner: BTreeMap<u64, u64> = BTreeMap::new();
    let mut actions = Vec::new();
    for s in 1..stages {
        listing.advance(s);
        let Some(permit) = a.least_entry(s) else {
            continue;
        };
        let mut n = 0;
        while 2 * n < s {
            let (e, k) = unpair(n);
            let col = columns.get(&e).map_or(&[][..], Vec::as_slice);
            if (col.len() as u64) < k {
                let lo = col
                    .last()
                    .map_or(0, |&m| m + 1)
                    .max(2 * n)
                    .max(permit + 1);
                let fresh = |x: u64| owner.get(&x).map_or(true, |&i| i >= n);
                if let Some(x) = listing.first(e, s, lo, fresh) {
                    h.insert(x, e, s).expect("fresh element");
                    columns.entry(e).or_default().push(x);
                    owner.entry(x).and_modify(|i| *i = (*i).min(e)).or_insert(e);
                    actions.push(Action {
                        stage: s,
                        n,
                        e,
                        k,
                        x,
                        permit,
                    });
                    break;
                }
            }
            n += 1;
        }
    }
    debug_assert!(actions.iter().all(|a| pair(a.e, a.k) == Ok(a.n)));
    MadRun {
        stages,
        h,
        actions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::universe::{Insertion, PatternSchedule, Schedule};

    fn dense_a(stages: u64) -> CeEnumeration {
        let ins: Vec<Insertion> = (1..stages)
            .map(|s| Insertion {
                stage: s,
                element: if s % 2 == 0 { s / 2 } else { 10_000 + s },
            })
            .collect();
        CeEnumeration::new(&ins).unwrap()
    }

    #[test]
    fn no_changes_no_action() {
        let u = Universe::new(vec![Schedule::Pattern(PatternSchedule::new(vec![0]))]);
        let run = build_mad(&u, &CeEnumeration::new(&[]).unwrap(), 50);
        assert!(run.actions.is_empty());
        assert!(build_mad(&u, &dense_a(10), 0).actions.is_empty());
    }

    #[test]
    fn omega_requirement_acts_once() {
        let u = Universe::new(vec![Schedule::Pattern(PatternSchedule::new(vec![0]).diverging_at([0]))]);
        let run = build_mad(&u, &dense_a(40), 40);
        let n = pair(1, 1).unwrap();
        let acts: Vec<&Action> = run.actions.iter().filter(|a| a.n == n).collect();
        assert_eq!(acts.len(), 1);
        let act = acts[0];
        assert!(act.x >= 2 * n && act.x > act.permit);
        assert_eq!(requirement_status(&run, n, act.stage - 1), RequirementStatus::Unsatisfied);
        assert_eq!(
            requirement_status(&run, n, 39),
            RequirementStatus::PermanentlySatisfied { since: act.stage }
        );
        assert_eq!(
            requirement_status(&run, pair(3, 0).unwrap(), 0),
            RequirementStatus::PermanentlySatisfied { since: 0 }
        );
    }

    #[test]
    fn empty_family_composes_to_omega() {
        let u = Universe::new(vec![]);
        let run = build_mad(&u, &CeEnumeration::new(&[]).unwrap(), 20);
        let g = compose_tower(&run, 3).unwrap();
        assert_eq!(g.mode(), LogMode::Coce);
        assert!(g.columns().iter().all(|c| *c == (0..20).collect()));
    }
}
