//! The tree-of-strategies construction of a co-c.e. ultrafilter base, with
//! the audits of its streaming properties.
//!
//! Nodes are strings over `{0,1,2}` written as `String`s of the digits.
//! Only nodes of length below the family depth are simulated; `δ_s` is
//! recorded up to that length.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::encoding::{CodedFamily, Column, LogMode, MembershipEventLog};
use crate::trace::{RunRecord, TraceHeader, TraceRecord};
use crate::universe::Universe;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoceParams {
    pub stages: u64,
    /// Columns `F_0, ..., F_{depth-1}`.
    pub depth: u64,
    /// Elements represented in the output family.
    pub window: u64,
    /// Keep a snapshot of every stream at stages divisible by this.
    pub snapshot_every: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    Thinning,
    Case2,
    Case3,
    Initialization,
}

/// `x` leaves `F_level, F_{level+1}, ...` at `stage`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub stage: u64,
    pub x: u64,
    pub level: u64,
    pub cause: Cause,
    pub node: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NodeSnapshot {
    pub stream: Vec<u64>,
    /// Whether each stream element was in `F_{|α|+1}` when it entered.
    pub entered_in_f: Vec<bool>,
    pub last_init: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Snapshot {
    pub stage: u64,
    pub delta: String,
    pub nodes: BTreeMap<String, NodeSnapshot>,
}

#[derive(Debug, Clone)]
struct Node {
    stream: Vec<u64>,
    entered_in_f: Vec<bool>,
    log: MembershipEventLog,
    tilde: Vec<u64>,
    m_done: usize,
    reserved: Option<u64>,
    processed: bool,
    last_reserved: Option<u64>,
    /// Latest and previous initialization stages.
    inits: (u64, Option<u64>),
    /// Last stage at which `α⌢0`, `α⌢1` was eligible to act.
    eligible: [Option<u64>; 2],
    /// Interval removals already done for Cases 2 and 3: `(t, upto)`.
    cleared: [(u64, u64); 2],
}

impl Node {
    fn new(inits: (u64, Option<u64>), horizon: u64) -> Self {
        Node {
            stream: Vec::new(),
            entered_in_f: Vec::new(),
            log: MembershipEventLog::new(LogMode::Dce, horizon),
            tilde: Vec::new(),
            m_done: 0,
            reserved: None,
            processed: false,
            last_reserved: None,
            inits,
            eligible: [None, None],
            cleared: [(0, 0), (0, 0)],
        }
    }

    fn init_before(&self, s: u64) -> u64 {
        if self.inits.0 < s {
            self.inits.0
        } else {
            self.inits.1.unwrap_or(0)
        }
    }
}

fn is_left_of(delta: &str, beta: &str) -> bool {
    delta
        .bytes()
        .zip(beta.bytes())
        .find(|(a, b)| a != b)
        .is_some_and(|(a, b)| a < b)
}

fn child(alpha: &str, k: u8) -> String {
    let mut c = alpha.to_string();
    c.push((b'0' + k) as char);
    c
}

struct Builder<'a> {
    u: &'a Universe,
    params: CoceParams,
    levels: u64,
    nodes: BTreeMap<String, Node>,
    /// Per element, least level it has been removed from.
    cut: Vec<u64>,
    family: CodedFamily,
    removals: Vec<Removal>,
    deltas: Vec<String>,
    case1_inits: Vec<Vec<String>>,
    records: Vec<TraceRecord>,
}

impl<'a> Builder<'a> {
    fn derive_inits(&self, beta: &str, s: u64) -> (u64, Option<u64>) {
        let mut found = Vec::new();
        let mut r = s;
        while r > 0 && found.len() < 2 {
            let by_case1 = self
                .case1_inits
                .get(r as usize)
                .is_some_and(|v| v.iter().any(|g| beta.starts_with(g.as_str())));
            let by_stage_end = r < s && is_left_of(&self.deltas[r as usize], beta);
            if by_case1 || by_stage_end {
                found.push(r);
            }
            r -= 1;
        }
        match found.as_slice() {
            [] => (0, None),
            [a] => (*a, Some(0)),
            [a, b, ..] => (*a, Some(*b)),
        }
    }

    fn node(&mut self, alpha: &str, s: u64) -> &mut Node {
        if !self.nodes.contains_key(alpha) {
            let inits = self.derive_inits(alpha, s);
            self.nodes
                .insert(alpha.to_string(), Node::new(inits, self.params.stages));
        }
        self.nodes.get_mut(alpha).expect("just inserted")
    }

    fn in_f(&self, x: u64, level: u64) -> bool {
        self.cut[x as usize] > level
    }

    fn remove(&mut self, x: u64, level: u64, s: u64, cause: Cause, node: &str) {
        let old = self.cut[x as usize];
        if level == 0 || level >= old {
            return;
        }
        self.cut[x as usize] = level;
        if x < self.params.window {
            for n in level..old.min(self.params.depth) {
                self.family.remove(x, n, s).expect("removal order is valid");
            }
        }
        self.removals.push(Removal {
            stage: s,
            x,
            level,
            cause,
            node: node.to_string(),
        });
    }

    fn enter(&mut self, alpha: &str, x: u64, s: u64) {
        let level = alpha.len() as u64 + 1;
        let flag = self.in_f(x, level);
        let node = self.node(alpha, s);
        debug_assert!(node.stream.last().map_or(true, |&y| y < x));
        node.stream.push(x);
        node.entered_in_f.push(flag);
        node.log.insert(x, s).expect("streams are d.c.e.");
    }

    fn initialize(&mut self, beta: &str, s: u64) {
        let level = beta.len() as u64 + 1;
        let node = self.nodes.get_mut(beta).expect("materialized");
        if node.inits.0 != s {
            node.inits = (s, Some(node.inits.0));
        }
        let purged = std::mem::take(&mut node.stream);
        for &x in &purged {
            node.log.remove(x, s).expect("streams are d.c.e.");
        }
        node.entered_in_f.clear();
        node.tilde.clear();
        node.m_done = 0;
        node.reserved = None;
        node.processed = false;
        node.last_reserved = None;
        node.cleared = [(0, 0), (0, 0)];
        for x in purged {
            self.remove(x, level, s, Cause::Initialization, beta);
        }
    }

    fn initialize_subtree(&mut self, root: &str, s: u64) {
        let keys: Vec<String> = self
            .nodes
            .range(root.to_string()..)
            .take_while(|(k, _)| k.starts_with(root))
            .map(|(k, _)| k.clone())
            .collect();
        for k in keys {
            self.initialize(&k, s);
        }
        self.case1_inits[s as usize].push(root.to_string());
    }

    fn m_step(&mut self, alpha: &str, s: u64) {
        let level = alpha.len() as u64 + 1;
        let node = self.nodes.get_mut(alpha).expect("materialized");
        let mut odd = Vec::new();
        for k in node.m_done..node.stream.len() {
            if k % 2 == 0 {
                node.tilde.push(node.stream[k]);
            } else {
                odd.push(node.stream[k]);
            }
        }
        node.m_done = node.stream.len();
        for x in odd {
            self.remove(x, level, s, Cause::Thinning, alpha);
        }
    }

    /// Removes from `F_{e+1}` the numbers in `(t, x)` outside `S_{α⌢k}`.
    fn clear_interval(&mut self, alpha: &str, k: u8, t: u64, x: u64, s: u64) {
        let level = alpha.len() as u64 + 1;
        let kid = child(alpha, k);
        let (t0, upto) = self.nodes[alpha].cleared[k as usize];
        let from = if t0 == t { upto.max(t + 1) } else { t + 1 };
        let keep: BTreeSet<u64> = self
            .nodes
            .get(&kid)
            .map(|n| n.stream.iter().copied().filter(|&y| y >= from && y < x).collect())
            .unwrap_or_default();
        let cause = if k == 0 { Cause::Case2 } else { Cause::Case3 };
        for y in from..x {
            if !keep.contains(&y) {
                self.remove(y, level, s, cause, alpha);
            }
        }
        let node = self.nodes.get_mut(alpha).expect("materialized");
        node.cleared[k as usize] = (t, x.max(from));
    }

    /// Runs `α: P_e` and returns the case taken, the outcome and the
    /// number involved.
    fn p_step(&mut self, alpha: &str, s: u64) -> (u8, u8, Option<u64>) {
        let e = alpha.len() as u64;
        let node = &self.nodes[alpha];
        let all_processed = node.reserved.is_none() || node.processed;
        if all_processed {
            let floor = node.last_reserved.map_or(0, |r| r + 1).max(node.inits.0 + 1);
            let pick = node.tilde.iter().copied().find(|&x| x >= floor);
            let Some(x) = pick else {
                return (1, 2, None);
            };
            let node = self.nodes.get_mut(alpha).expect("materialized");
            node.reserved = Some(x);
            node.processed = false;
            node.last_reserved = Some(x);
            let kid = child(alpha, 2);
            self.node(&kid, s);
            self.initialize_subtree(&kid, s);
            return (1, 2, Some(x));
        }
        let x = node.reserved.expect("unprocessed reservation");
        let defined = self.u.psi_dom_len(e, s, x + 1) > x;
        if defined {
            let k = self.u.psi_at(e, x, s).expect("defined on [0, x]");
            let t = match k {
                0 => node.init_before(s),
                _ => node.init_before(s).max(node.eligible[0].unwrap_or(0)),
            };
            let kid = child(alpha, k);
            self.enter(&kid, x, s);
            self.clear_interval(alpha, k, t, x, s);
            self.nodes.get_mut(alpha).expect("materialized").processed = true;
            return (2 + k, k, Some(x));
        }
        let t = node
            .init_before(s)
            .max(node.eligible[0].unwrap_or(0))
            .max(node.eligible[1].unwrap_or(0));
        let tilde: Vec<u64> = node
            .tilde
            .iter()
            .copied()
            .filter(|&y| y > t && y < s)
            .collect();
        let kid = child(alpha, 2);
        let kid_node = self.node(&kid, s);
        let floor = kid_node
            .stream
            .last()
            .map_or(0, |&y| y + 1)
            .max(kid_node.inits.0 + 1);
        for y in tilde.into_iter().filter(|&y| y >= floor) {
            self.enter(&kid, y, s);
        }
        (4, 2, Some(x))
    }

    fn snapshot(&self, s: u64) -> Snapshot {
        let nodes = self
            .nodes
            .iter()
            .filter(|(_, n)| !n.stream.is_empty())
            .map(|(k, n)| {
                (
                    k.clone(),
                    NodeSnapshot {
                        stream: n.stream.clone(),
                        entered_in_f: n.entered_in_f.clone(),
                        last_init: n.inits.0,
                    },
                )
            })
            .collect();
        Snapshot {
            stage: s,
            delta: self.deltas[s as usize].clone(),
            nodes,
        }
    }

    fn stage(&mut self, s: u64) {
        self.case1_inits.push(Vec::new());
        self.enter("", s - 1, s);
        let limit = s.min(self.params.depth);
        let mut delta = String::new();
        let mut alpha = String::new();
        for e in 0..limit {
            self.node(&alpha, s);
            if self.nodes[&alpha].stream.is_empty() {
                let rest = (limit - e) as usize;
                delta.extend(std::iter::repeat('2').take(rest));
                self.records.push(
                    TraceRecord::new(s, "tail", json!({ "from": e, "len": s })).at_node(e, &alpha),
                );
                break;
            }
            self.m_step(&alpha, s);
            let (case, k, x) = self.p_step(&alpha, s);
            if k < 2 {
                self.nodes.get_mut(&alpha).expect("materialized").eligible[k as usize] = Some(s);
            }
            self.records.push(
                TraceRecord::new(s, "substage", json!({ "case": case, "outcome": k, "x": x }))
                    .at_node(e, &alpha),
            );
            delta.push((b'0' + k) as char);
            alpha = child(&alpha, k);
        }
        let right: Vec<String> = self
            .nodes
            .keys()
            .filter(|b| is_left_of(&delta, b))
            .cloned()
            .collect();
        for b in &right {
            self.initialize(b, s);
        }
        self.deltas.push(delta);
    }
}

#[derive(Debug, Clone)]
pub struct CoceRun {
    pub params: CoceParams,
    /// `F`, removal events only.
    pub family: CodedFamily,
    /// `δ_s ↾ min(s, depth)`, indexed by `s`.
    pub deltas: Vec<String>,
    pub removals: Vec<Removal>,
    pub snapshots: BTreeMap<u64, Snapshot>,
    /// Final streams, by node.
    pub streams: BTreeMap<String, Vec<u64>>,
    /// Each node's stream history.
    pub stream_logs: BTreeMap<String, MembershipEventLog>,
    records: Vec<TraceRecord>,
}

impl CoceRun {
    pub fn stream(&self, alpha: &str) -> Column {
        self.streams
            .get(alpha)
            .map(|v| v.iter().copied().collect())
            .unwrap_or_default()
    }

    pub fn trace(&self) -> RunRecord {
        let p = self.params;
        let mut r = RunRecord::new(TraceHeader::new("coce-base", p.stages, p.depth, p.window));
        let mut removals = self.removals.iter().peekable();
        for rec in &self.records {
            while let Some(rm) = removals.next_if(|rm| rm.stage < rec.stage) {
                r.push(removal_record(rm));
            }
            r.push(rec.clone());
        }
        for rm in removals {
            r.push(removal_record(rm));
        }
        r.push_family("F", &self.family);
        r
    }
}

fn removal_record(rm: &Removal) -> TraceRecord {
    let mut rec = TraceRecord::new(
        rm.stage,
        "remove",
        json!({ "cause": rm.cause, "level": rm.level, "x": rm.x }),
    );
    rec.node = Some(rm.node.clone());
    rec
}

pub fn build_coce_base(u: &Universe, params: CoceParams) -> CoceRun {
    let levels = params.depth + 2;
    let mut b = Builder {
        u,
        params,
        levels,
        nodes: BTreeMap::new(),
        cut: vec![levels; params.stages as usize],
        family: CodedFamily::new(LogMode::Coce, params.stages, params.depth, params.window),
        removals: Vec::new(),
        deltas: vec![String::new()],
        case1_inits: vec![Vec::new()],
        records: Vec::new(),
    };
    b.node("", 0);
    let mut snapshots = BTreeMap::new();
    for s in 1..params.stages {
        b.stage(s);
        if params.snapshot_every.is_some_and(|k| k > 0 && s % k == 0) {
            snapshots.insert(s, b.snapshot(s));
        }
    }
    debug_assert!(b.cut.iter().all(|&c| c >= 1 && c <= b.levels));
    let streams = b
        .nodes
        .iter()
        .filter(|(_, n)| !n.stream.is_empty())
        .map(|(k, n)| (k.clone(), n.stream.clone()))
        .collect();
    let stream_logs = b
        .nodes
        .iter()
        .map(|(k, n)| (k.clone(), n.log.clone()))
        .collect();
    CoceRun {
        params,
        family: b.family,
        deltas: b.deltas,
        removals: b.removals,
        snapshots,
        streams,
        stream_logs,
        records: b.records,
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("no node at level {level} is visited {min_visits} times")]
    PathTooShallow { level: usize, min_visits: u64 },
}

/// Greedy leftmost path through nodes visited at least `min_visits` times.
pub fn apparent_true_path(
    deltas: &[String],
    depth: usize,
    min_visits: u64,
) -> Result<String, PathError> {
    let mut path = String::new();
    if deltas.iter().all(String::is_empty) {
        return Ok(path);
    }
    for level in 0..depth {
        let mut counts = [0u64; 3];
        for d in deltas {
            if d.len() > level && d.starts_with(path.as_str()) {
                counts[(d.as_bytes()[level] - b'0') as usize] += 1;
            }
        }
        let k = (0..3)
            .find(|&k| counts[k] >= min_visits)
            .ok_or(PathError::PathTooShallow { level, min_visits })?;
        path.push((b'0' + k as u8) as char);
    }
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditViolation {
    pub property: u8,
    pub node: String,
    pub element: Option<u64>,
    pub stage: u64,
}

fn comparable(a: &str, b: &str) -> bool {
    a.starts_with(b) || b.starts_with(a)
}

/// Streaming properties (1)-(5) on a snapshot; `previous` is the snapshot
/// (5) compares against.
pub fn audit_snapshot(snap: &Snapshot, previous: Option<&Snapshot>) -> Vec<AuditViolation> {
    let s = snap.stage;
    let mut out = Vec::new();
    let mut v = |property, node: &str, element| {
        out.push(AuditViolation {
            property,
            node: node.to_string(),
            element,
            stage: s,
        })
    };
    let root = snap.nodes.get("").map(|n| n.stream.as_slice()).unwrap_or(&[]);
    if !root.iter().copied().eq(0..s) {
        v(1, "", None);
    }
    let sets: BTreeMap<&str, BTreeSet<u64>> = snap
        .nodes
        .iter()
        .map(|(k, n)| (k.as_str(), n.stream.iter().copied().collect()))
        .collect();
    for (alpha, set) in &sets {
        if alpha.is_empty() {
            continue;
        }
        let parent = &alpha[..alpha.len() - 1];
        let empty = BTreeSet::new();
        let up = sets.get(parent).unwrap_or(&empty);
        if let Some(&x) = set.difference(up).next() {
            v(2, alpha, Some(x));
        }
    }
    let mut owners: BTreeMap<u64, Vec<&str>> = BTreeMap::new();
    for (alpha, set) in &sets {
        for &x in set {
            owners.entry(x).or_default().push(alpha);
        }
    }
    for (x, nodes) in owners {
        for (i, a) in nodes.iter().enumerate() {
            if let Some(b) = nodes[i + 1..].iter().find(|b| !comparable(a, b)) {
                v(3, &format!("{a}|{b}"), Some(x));
            }
        }
    }
    for (alpha, n) in &snap.nodes {
        for (i, &ok) in n.entered_in_f.iter().enumerate() {
            if !ok {
                v(4, alpha, n.stream.get(i).copied());
            }
        }
    }
    if let Some(prev) = previous {
        for e in 0..=snap.delta.len() {
            let alpha = &snap.delta[..e];
            let (Some(now), Some(before)) = (snap.nodes.get(alpha), prev.nodes.get(alpha)) else {
                continue;
            };
            if now.last_init <= prev.stage && now.stream.len() < before.stream.len() {
                v(5, alpha, None);
            }
        }
    }
    out
}

/// Audits the snapshot kept at stage `s`, or reports that none was kept.
pub fn streaming_audit(run: &CoceRun, s: u64) -> Option<Vec<AuditViolation>> {
    if s == 0 {
        return Some(Vec::new());
    }
    let snap = run.snapshots.get(&s)?;
    let prev = run.snapshots.range(..s).next_back().map(|(_, p)| p);
    Some(audit_snapshot(snap, prev))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Stability {
    Stable { threshold: u64 },
    Unstable,
}

/// For each `e <= |g|`, the least `m` with
/// `F_e ∩ [m, horizon) = S_{g↾e} ∩ [m, horizon)`.
pub fn claim56_check(run: &CoceRun, g: &str, horizon: u64) -> Vec<(usize, Stability)> {
    let cols = run.family.columns();
    (0..=g.len().min(run.params.depth.saturating_sub(1) as usize))
        .map(|e| {
            let f: Column = cols[e].range(..horizon).copied().collect();
            let s: Column = run.stream(&g[..e]).range(..horizon).copied().collect();
            let m = f.symmetric_difference(&s).max().map_or(0, |&x| x + 1);
            let status = if m >= horizon && horizon > 0 {
                Stability::Unstable
            } else {
                Stability::Stable { threshold: m }
            };
            (e, status)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::Polarity;
    use crate::universe::{PatternSchedule, Schedule};

    fn params(stages: u64) -> CoceParams {
        CoceParams {
            stages,
            depth: 4,
            window: stages,
            snapshot_every: Some(10),
        }
    }

    fn dead() -> Schedule {
        Schedule::Pattern(PatternSchedule::new(vec![0]).diverging_at([0]))
    }

    #[test]
    fn first_stage() {
        let u = Universe::new(vec![dead()]);
        let run = build_coce_base(&u, params(2));
        assert_eq!(run.deltas[1].len(), 1);
        assert_eq!(run.deltas[1], "2");
        assert!(run.removals.is_empty());
        assert_eq!(run.stream(""), [0].into_iter().collect());
    }

    #[test]
    fn all_divergent_goes_right() {
        let u = Universe::new(vec![dead(), dead(), dead(), dead()]);
        let run = build_coce_base(&u, params(60));
        assert!(run.deltas[5..].iter().all(|d| d.bytes().all(|c| c == b'2')));
        assert_eq!(apparent_true_path(&run.deltas, 3, 20).unwrap(), "222");
        assert!(run.family.log().events().iter().all(|e| e.polarity == Polarity::Remove));
        assert!(run.family.log().events().iter().all(|e| crate::encoding::unpair(e.element).1 != 0));
        for s in (10..60).step_by(10) {
            assert_eq!(streaming_audit(&run, s), Some(vec![]), "stage {s}");
        }
    }

    #[test]
    fn apparent_path_examples() {
        let d: Vec<String> = ["", "0", "01", "010", "012"].iter().map(|s| s.to_string()).collect();
        assert_eq!(apparent_true_path(&d, 2, 3).unwrap(), "01");
        let split: Vec<String> = (0..100).map(|i| if i < 60 { "0" } else { "1" }.to_string()).collect();
        assert_eq!(apparent_true_path(&split, 1, 50).unwrap(), "0");
        assert_eq!(apparent_true_path(&Vec::new(), 3, 5).unwrap(), "");
        assert!(apparent_true_path(&split, 2, 50).is_err());
    }

    #[test]
    fn audit_catches_incomparable_overlap() {
        let u = Universe::new(vec![Schedule::Pattern(PatternSchedule::new(vec![0, 1]))]);
        let run = build_coce_base(&u, params(40));
        let mut snap = run.snapshots[&30].clone();
        assert!(audit_snapshot(&snap, None).is_empty());
        let x = snap.nodes["0"].stream[0];
        let n = snap.nodes.entry("1".into()).or_default();
        n.stream.push(x);
        n.entered_in_f.push(true);
        let found = audit_snapshot(&snap, None);
        assert!(found.iter().any(|v| v.property == 3 && v.element == Some(x)));
    }
}
