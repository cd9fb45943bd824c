//! The maximal independent family computed from a dominating function,
//! built phase by phase on intervals `[r_n, r_{n+1})`.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::encoding::{CodedFamily, LogMode};
use crate::trace::{RunRecord, TraceHeader, TraceRecord};
use crate::universe::{DominatingOracle, Phi, Universe};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndepParams {
    /// Inputs `[0, horizon)` on which the family is computed.
    pub horizon: u64,
    /// Number of phases, i.e. columns.
    pub depth: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub start: u64,
    pub end: u64,
    /// Strings `σ` (lexicographic order) on which `F_e` followed `ψ_e`.
    pub followed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub e: u64,
    pub intervals: Vec<Interval>,
    /// `F_e` is decided on `[0, covered)`.
    pub covered: u64,
}

#[derive(Debug, Clone)]
pub struct IndepRun {
    pub params: IndepParams,
    pub family: CodedFamily,
    pub phases: Vec<Phase>,
    /// First phase that could not close a single interval.
    pub stalled: Option<u64>,
}

impl IndepRun {
    /// Inputs on which every built column is decided.
    pub fn covered(&self) -> u64 {
        self.phases.last().map_or(self.params.horizon, |p| p.covered)
    }

    pub fn trace(&self) -> RunRecord {
        let p = self.params;
        let mut header =
            TraceHeader::new("indep-family", p.horizon, p.depth, p.horizon).param("covered", self.covered());
        if let Some(e) = self.stalled {
            header = header.param("stalled", e);
        }
        let mut r = RunRecord::new(header);
        for ph in &self.phases {
            for iv in &ph.intervals {
                r.push(TraceRecord::new(
                    iv.end,
                    "interval",
                    json!({ "e": ph.e, "end": iv.end, "followed": iv.followed, "start": iv.start }),
                ));
            }
        }
        r.push_family("F", &self.family);
        r
    }
}

fn sigma_string(idx: usize, len: usize) -> String {
    (0..len)
        .map(|i| if idx >> i & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn build_indep_family(u: &Universe, h: &DominatingOracle, params: IndepParams) -> IndepRun {
    let IndepParams { horizon, depth } = params;
    let n = horizon as usize;
    let mut bits = vec![0u64; n];
    let mut family = CodedFamily::new(LogMode::Ce, horizon, depth, horizon);
    let mut phases = Vec::new();
    let mut stalled = None;
    let mut cover = horizon;

    for e in 0..depth.min(63) {
        let mask = (1u64 << e) - 1;
        let classes = 1usize << e;
        let mut members: Vec<Vec<u64>> = vec![Vec::new(); classes];
        for x in 0..cover {
            members[(bits[x as usize] & mask) as usize].push(x);
        }
        let t_max = (0..cover).map(|r| h.value(r)).max().unwrap_or(0);
        let dom_max = u.psi_dom_len(e, t_max, cover);
        let psi: Vec<Option<u8>> = (0..dom_max)
            .map(|x| {
                u.phi_at(e, x, t_max)
                    .ok()
                    .and_then(Phi::value)
                    .map(|v| (v % 2) as u8)
            })
            .collect();
        let mut order: Vec<usize> = (0..classes).collect();
        order.sort_by_key(|&i| sigma_string(i, e as usize));

        let mut intervals = Vec::new();
        let mut r = 0u64;
        loop {
            let dom = u.psi_dom_len(e, h.value(r), cover).min(dom_max);
            let mut next = r + 1;
            let mut witnessed = vec![false; classes];
            let mut ok = true;
            for (i, list) in members.iter().enumerate() {
                let from = list.partition_point(|&x| x < r);
                match list.get(from + 1) {
                    Some(&second) => next = next.max(second + 1),
                    None => {
                        ok = false;
                        break;
                    }
                }
                // least w with some earlier u in the class, psi(u) = 1, psi(w) = 0
                let mut seen_one = false;
                for &x in &list[from..] {
                    if x >= dom {
                        break;
                    }
                    match psi[x as usize] {
                        Some(1) => seen_one = true,
                        Some(0) if seen_one => {
                            witnessed[i] = true;
                            next = next.max(x + 1);
                            break;
                        }
                        _ => {}
                    }
                }
            }
            if !ok || next > cover {
                break;
            }
            let mut followed = Vec::new();
            for &i in &order {
                let list = &members[i];
                let lo = list.partition_point(|&x| x < r);
                let hi = list.partition_point(|&x| x < next);
                let follow = witnessed[i] && dom >= next;
                if follow {
                    followed.push(sigma_string(i, e as usize));
                }
                for (j, &x) in list[lo..hi].iter().enumerate() {
                    let inside = if follow {
                        psi[x as usize] == Some(1)
                    } else {
                        j == 0
                    };
                    if inside {
                        bits[x as usize] |= 1 << e;
                        family.insert(x, e, next.min(horizon)).expect("fresh element");
                    }
                }
            }
            intervals.push(Interval {
                start: r,
                end: next,
                followed,
            });
            r = next;
        }
        if intervals.is_empty() {
            stalled = Some(e);
            break;
        }
        cover = r;
        phases.push(Phase {
            e,
            intervals,
            covered: cover,
        });
    }
    family = CodedFamily::from_log(family.log().clone(), phases.len() as u64, cover);
    IndepRun {
        params,
        family,
        phases,
        stalled,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::Column;
    use crate::oracle_constructions::f_sigma;
    use crate::universe::{PatternSchedule, Schedule};

    fn h() -> DominatingOracle {
        DominatingOracle::Affine { a: 4, b: 10 }
    }

    #[test]
    fn empty_horizon() {
        let run = build_indep_family(&Universe::new(vec![]), &h(), IndepParams { horizon: 0, depth: 3 });
        assert_eq!(run.stalled, Some(0));
        assert_eq!(run.family.depth(), 0);
    }

    #[test]
    fn divergent_index_uses_min_in_rule() {
        let dead = Schedule::Pattern(PatternSchedule::new(vec![0]).diverging_at([0]));
        let u = Universe::new(vec![dead.clone(), dead.clone(), dead]);
        let run = build_indep_family(&u, &h(), IndepParams { horizon: 300, depth: 3 });
        assert_eq!(run.phases.len(), 3);
        for ph in &run.phases {
            assert!(ph.intervals.iter().all(|iv| iv.followed.is_empty()));
        }
        let first = &run.phases[0].intervals;
        assert_eq!((first[0].start, first[0].end), (0, 2));
        let cover = run.covered();
        for len in 0..=3usize {
            for i in 0..1usize << len {
                let sigma = sigma_string(i, len);
                let fs = f_sigma(&run.family, &sigma.parse().unwrap(), cover);
                assert!(fs.len() >= 5, "σ = {sigma}: {}", fs.len());
            }
        }
    }

    #[test]
    fn parity_index_is_followed_on_intervals() {
        let u = Universe::new(vec![Schedule::Pattern(PatternSchedule::new(vec![1, 0]))]);
        let run = build_indep_family(&u, &h(), IndepParams { horizon: 100, depth: 1 });
        let f0 = &run.family.columns()[0];
        let followed = run.phases[0].intervals.iter().filter(|iv| !iv.followed.is_empty()).count();
        assert!(followed > 10);
        let evens: Column = (0..run.covered()).filter(|x| x % 2 == 0).collect();
        let off: Vec<u64> = f0.symmetric_difference(&evens).copied().collect();
        assert!(off.iter().all(|&x| x < 4), "{off:?}");
    }
}
