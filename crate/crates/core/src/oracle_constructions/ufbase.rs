//! The ultrafilter base computed from a dominating function: streams `S_α`
//! over `{0,1,2}^{<ω}` and the functionals `Γ_e`.

use std::collections::HashMap;

use serde_json::json;

use crate::encoding::{CodedFamily, Column, LogMode};
use crate::trace::{RunRecord, TraceHeader, TraceRecord};
use crate::universe::{DominatingOracle, Phi, Schedule, Universe};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UfBaseParams {
    pub stages: u64,
    /// Number of columns `F_0, ..., F_{depth-1}`.
    pub depth: u64,
    pub window: u64,
}

#[derive(Debug, Clone)]
pub struct UfBaseRun {
    pub params: UfBaseParams,
    pub family: CodedFamily,
    /// `a[e][s] = Γ_e^h(s)`.
    pub a: Vec<Vec<u64>>,
    /// The leftmost `α` chosen at each stage, if any qualified.
    pub chosen: Vec<Vec<Option<String>>>,
    /// Final stage consulted, `h(stages - 1)`.
    pub final_t: u64,
}

impl UfBaseRun {
    pub fn trace(&self) -> RunRecord {
        let p = self.params;
        let mut r = RunRecord::new(
            TraceHeader::new("uf-base", p.stages, p.depth, p.window).param("final_t", self.final_t),
        );
        for s in 1..p.stages as usize {
            for e in 0..p.depth as usize {
                let (prev, cur) = (self.a[e][s - 1], self.a[e][s]);
                let alpha = &self.chosen[e][s];
                if cur != prev || *alpha != self.chosen[e][s - 1] {
                    let mut rec = TraceRecord::new(s as u64, "gamma", json!({ "a": cur, "e": e }));
                    rec.node = alpha.clone();
                    r.push(rec);
                }
            }
        }
        r.push_family("F", &self.family);
        r
    }
}

/// `dom(ψ_{e,t})` lengths, remembered so machine-backed indices are
/// scanned incrementally.
struct Domains<'a> {
    u: &'a Universe,
    cap: u64,
    machine: HashMap<u64, (u64, u64)>,
}

impl<'a> Domains<'a> {
    fn new(u: &'a Universe, cap: u64) -> Self {
        Domains {
            u,
            cap,
            machine: HashMap::new(),
        }
    }

    fn len(&mut self, e: u64, t: u64) -> u64 {
        if !matches!(self.u.schedule(e), Some(Schedule::Machine(_))) {
            return self.u.psi_dom_len(e, t, self.cap);
        }
        let from = match self.machine.get(&e) {
            Some(&(t0, n)) if t0 <= t => n,
            _ => 0,
        };
        let mut n = from;
        while n < self.cap && self.u.phi_at(e, n, t) != Ok(Phi::Pending) {
            n += 1;
        }
        self.machine.insert(e, (t, n));
        n
    }
}

/// Final streams `S_α ∩ [0, T)`; `S_{α,t}` is the part below `b_α(t)`.
struct Streams<'a> {
    u: &'a Universe,
    t_final: u64,
    dom_final: Vec<u64>,
    nodes: HashMap<Vec<u8>, Vec<u64>>,
}

impl<'a> Streams<'a> {
    fn new(u: &'a Universe, t_final: u64, depth: u64, doms: &mut Domains) -> Self {
        let dom_final = (0..depth).map(|e| doms.len(e, t_final)).collect();
        Streams {
            u,
            t_final,
            dom_final,
            nodes: HashMap::new(),
        }
    }

    fn get(&mut self, alpha: &[u8]) -> &[u64] {
        if !self.nodes.contains_key(alpha) {
            let s = match alpha.split_last() {
                None => (0..self.t_final).collect(),
                Some((&k, parent)) => {
                    let e = parent.len() as u64;
                    let thinned: Vec<u64> = self.get(parent).iter().step_by(2).copied().collect();
                    if k == 2 {
                        thinned
                    } else {
                        let dom = self.dom_final[e as usize];
                        let (u, t) = (self.u, self.t_final);
                        thinned
                            .into_iter()
                            .filter(|&x| {
                                x < dom
                                    && u.phi_at(e, x, t)
                                        .ok()
                                        .and_then(Phi::value)
                                        .is_some_and(|v| (v % 2) as u8 == k)
                            })
                            .collect()
                    }
                }
            };
            self.nodes.insert(alpha.to_vec(), s);
        }
        &self.nodes[alpha]
    }
}

fn alpha_string(alpha: &[u8]) -> String {
    alpha.iter().map(|&k| (b'0' + k) as char).collect()
}

/// Leftmost `α` of length `e` with `|S_{α,t}| >= s`; returns `α` and
/// `|S_{α,t}|`.
fn leftmost(
    streams: &mut Streams,
    bounds: &[u64],
    alpha: &mut Vec<u8>,
    bound: u64,
    e: usize,
    s: u64,
) -> Option<(Vec<u8>, usize)> {
    let n = streams.get(alpha).partition_point(|&x| x < bound);
    if (n as u64) < s {
        return None;
    }
    if alpha.len() == e {
        return Some((alpha.clone(), n));
    }
    let level = alpha.len();
    for k in 0..3u8 {
        let b = if k == 2 { bound } else { bound.min(bounds[level]) };
        alpha.push(k);
        let found = leftmost(streams, bounds, alpha, b, e, s);
        alpha.pop();
        if found.is_some() {
            return found;
        }
    }
    None
}

pub fn build_uf_base(u: &Universe, h: &DominatingOracle, params: UfBaseParams) -> UfBaseRun {
    let UfBaseParams {
        stages,
        depth,
        window,
    } = params;
    let final_t = h.value(stages.saturating_sub(1));
    let mut doms = Domains::new(u, final_t);
    let mut streams = Streams::new(u, final_t, depth, &mut doms);
    let mut family = CodedFamily::new(LogMode::Ce, stages, depth, window);
    let mut a = vec![vec![0u64]; depth as usize];
    let mut chosen = vec![vec![None]; depth as usize];
    if window > 0 {
        for e in 0..depth {
            family.insert(0, e, 0).expect("fresh seed");
        }
    }
    for s in 1..stages {
        let t = h.value(s);
        let bounds: Vec<u64> = (0..depth).map(|e| doms.len(e, t)).collect();
        for e in 0..depth as usize {
            let prev = a[e][s as usize - 1];
            let found = leftmost(&mut streams, &bounds, &mut Vec::new(), t, e, s);
            let next = match &found {
                Some((alpha, n)) => {
                    let members = &streams.get(alpha)[..*n];
                    let top = *members.last().expect("at least s >= 1 members");
                    if top > prev {
                        let from = members.partition_point(|&x| x <= prev);
                        let to = members.partition_point(|&x| x < window);
                        for &x in members.get(from..to).unwrap_or(&[]) {
                            family.insert(x, e as u64, s).expect("fresh element");
                        }
                        top
                    } else {
                        prev
                    }
                }
                None => prev,
            };
            a[e].push(next);
            chosen[e].push(found.map(|(alpha, _)| alpha_string(&alpha)));
        }
    }
    UfBaseRun {
        params,
        family,
        a,
        chosen,
        final_t,
    }
}

/// The column sets of the run on its window.
pub fn uf_columns(run: &UfBaseRun) -> Vec<Column> {
    run.family.columns()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::universe::PatternSchedule;

    fn identity() -> DominatingOracle {
        DominatingOracle::Affine { a: 1, b: 0 }
    }

    #[test]
    fn zero_stages_gives_seeds() {
        let u = Universe::new(vec![]);
        let run = build_uf_base(
            &u,
            &identity(),
            UfBaseParams {
                stages: 0,
                depth: 3,
                window: 50,
            },
        );
        for col in run.family.columns() {
            assert_eq!(col, [0].into_iter().collect());
        }
    }

    #[test]
    fn all_divergent_follows_rightmost_streams() {
        let u = Universe::new(vec![
            Schedule::Pattern(PatternSchedule::new(vec![0]).diverging_at([0])),
            Schedule::Pattern(PatternSchedule::new(vec![1]).diverging_at([2])),
        ]);
        let run = build_uf_base(
            &u,
            &DominatingOracle::Affine { a: 8, b: 10 },
            UfBaseParams {
                stages: 200,
                depth: 3,
                window: 400,
            },
        );
        let cols = run.family.columns();
        for (e, col) in cols.iter().enumerate() {
            let target: Column = (0..400).filter(|x| x % (1 << e) == 0).collect();
            let off: Vec<u64> = col.symmetric_difference(&target).copied().collect();
            assert!(off.iter().all(|&x| x < 40), "e = {e}: {off:?}");
        }
        assert_eq!(run.chosen[2][199].as_deref(), Some("22"));
        for e in 0..3 {
            assert!(run.a[e].windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn parity_index_is_followed() {
        let u = Universe::new(vec![Schedule::Pattern(PatternSchedule::new(vec![0, 1]))]);
        let run = build_uf_base(
            &u,
            &DominatingOracle::Affine { a: 4, b: 4 },
            UfBaseParams {
                stages: 300,
                depth: 2,
                window: 200,
            },
        );
        assert_eq!(run.chosen[1][299].as_deref(), Some("0"));
        let f1 = &run.family.columns()[1];
        assert_eq!(*f1, (0..200).filter(|x| x % 2 == 0).collect());
    }
}
