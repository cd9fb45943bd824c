//! Window checks for towers, almost disjoint families, independent
//! families and ultrafilter bases. Every asymptotic property is read at a
//! finite window `[0, horizon)` with explicit witness counts and thresholds.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::encoding::{CodedFamily, Column};
use crate::universe::{LimitBehavior, Universe};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub kind: String,
    pub indices: Vec<u64>,
    pub elements: Vec<u64>,
    pub threshold: Option<u64>,
}

impl Witness {
    pub fn new(kind: &str, indices: Vec<u64>, elements: Vec<u64>, threshold: Option<u64>) -> Self {
        Witness {
            kind: kind.to_string(),
            indices,
            elements,
            threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub parameters: BTreeMap<String, u64>,
    /// Index into `witnesses` of the first non-passing witness.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<usize>,
}

impl CheckReport {
    pub fn new(check: &str, parameters: &[(&str, u64)]) -> Self {
        CheckReport {
            check: check.to_string(),
            verdict: Verdict::Pass,
            witnesses: Vec::new(),
            parameters: parameters.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            first_failure: None,
        }
    }

    pub fn fail(&mut self, w: Witness) {
        self.verdict = Verdict::Fail;
        self.flag(w);
    }

    pub fn inconclusive(&mut self, w: Witness) {
        if self.verdict == Verdict::Pass {
            self.verdict = Verdict::Inconclusive;
        }
        self.flag(w);
    }

    fn flag(&mut self, w: Witness) {
        self.first_failure.get_or_insert(self.witnesses.len());
        self.witnesses.push(w);
    }

    pub fn note(&mut self, w: Witness) {
        self.witnesses.push(w);
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn window(c: &Column, horizon: u64) -> Column {
    c.range(..horizon).copied().collect()
}

fn columns(f: &CodedFamily, count: u64, horizon: u64) -> Vec<Column> {
    (0..count)
        .map(|n| {
            f.column(n, f.horizon())
                .map(|c| window(&c, horizon))
                .unwrap_or_default()
        })
        .collect()
}

/// Least `m` with `A ∩ [m, horizon) ⊆ B`, or `None` if only `m = horizon`
/// works.
pub fn subset_star_witness(a: &Column, b: &Column, horizon: u64) -> Option<u64> {
    let m = a
        .range(..horizon)
        .rev()
        .find(|x| !b.contains(x))
        .map_or(0, |&x| x + 1);
    (m < horizon || horizon == 0).then_some(m)
}

/// A threshold counts as stable when it leaves at least half the window.
fn stable(m: Option<u64>, horizon: u64) -> Option<u64> {
    m.filter(|&m| 2 * m <= horizon)
}

/// `G_0 ⊇ [0, horizon)`, `G_{n+1} ⊆* G_n` and `|(G_n ∖ G_{n+1}) ∩ window| >= w`
/// for `n < depth`.
pub fn tower_check(g: &CodedFamily, depth: u64, horizon: u64, w: u64) -> CheckReport {
    let mut r = CheckReport::new(
        "tower",
        &[("depth", depth), ("horizon", horizon), ("witness", w)],
    );
    if w > horizon {
        r.inconclusive(Witness::new("window-too-small", vec![], vec![], None));
        return r;
    }
    let cols = columns(g, depth + 1, horizon);
    let missing: Vec<u64> = (0..horizon).filter(|x| !cols[0].contains(x)).collect();
    if !missing.is_empty() {
        r.fail(Witness::new("g0-missing", vec![0], missing, None));
    }
    for n in 0..depth as usize {
        let (upper, lower) = (&cols[n], &cols[n + 1]);
        match stable(subset_star_witness(lower, upper, horizon), horizon) {
            Some(m) => r.witnesses.push(Witness::new(
                "subset",
                vec![n as u64 + 1, n as u64],
                vec![],
                Some(m),
            )),
            None => {
                let escapees: Vec<u64> = lower.difference(upper).copied().collect();
                r.fail(Witness::new("escapees", vec![n as u64 + 1, n as u64], escapees, None));
            }
        }
        let diff: Vec<u64> = upper.difference(lower).copied().collect();
        if (diff.len() as u64) < w {
            r.inconclusive(Witness::new("thin-difference", vec![n as u64, n as u64 + 1], diff, None));
        }
    }
    r
}

/// Every column `n < depth` has at least `bound` elements in the window and
/// distinct columns share at most `bound`.
pub fn ad_check(f: &CodedFamily, depth: u64, horizon: u64, bound: u64) -> CheckReport {
    let mut r = CheckReport::new(
        "almost-disjoint",
        &[("bound", bound), ("depth", depth), ("horizon", horizon)],
    );
    let cols = columns(f, depth, horizon);
    for (n, c) in cols.iter().enumerate() {
        if (c.len() as u64) < bound {
            r.inconclusive(Witness::new("thin-column", vec![n as u64], c.iter().copied().collect(), None));
        }
    }
    for n in 0..cols.len() {
        for k in n + 1..cols.len() {
            let common: Vec<u64> = cols[n].intersection(&cols[k]).copied().collect();
            if common.len() as u64 > bound {
                r.fail(Witness::new("intersection", vec![n as u64, k as u64], common, None));
            }
        }
    }
    r
}

/// Sizes of `F_σ ∩ [0, horizon)` for every `σ` with `|σ| <= depth`, keyed by
/// the string `σ`.
pub fn sigma_counts(cols: &[Column], depth: usize, horizon: u64) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    let mut codes: Vec<Vec<u64>> = (0..=depth).map(|len| vec![0; 1 << len]).collect();
    for x in 0..horizon {
        let mut code = 0usize;
        codes[0][0] += 1;
        for (i, c) in cols.iter().take(depth).enumerate() {
            if c.contains(&x) {
                code |= 1 << i;
            }
            codes[i + 1][code] += 1;
        }
    }
    for (len, v) in codes.iter().enumerate() {
        for (code, &n) in v.iter().enumerate() {
            let sigma: String = (0..len)
                .map(|i| if code >> i & 1 == 1 { '1' } else { '0' })
                .collect();
            counts.insert(sigma, n);
        }
    }
    counts
}

/// `|F_σ ∩ [0, horizon)| >= w` for every `σ` with `|σ| <= depth`.
pub fn independence_check(f: &CodedFamily, depth: u64, horizon: u64, w: u64) -> CheckReport {
    let mut r = CheckReport::new(
        "independence",
        &[("depth", depth), ("horizon", horizon), ("witness", w)],
    );
    let cols = columns(f, depth, horizon);
    let counts = sigma_counts(&cols, depth as usize, horizon);
    for (sigma, &n) in &counts {
        if n < w {
            let bits = sigma.bytes().map(|b| (b - b'0') as u64).collect();
            let mut wit = Witness::new("thin-sigma", bits, vec![], None);
            wit.kind = format!("thin-sigma:{sigma}:{n}");
            r.fail(wit);
        }
    }
    r
}

/// `V_{e,side}` in the limit on the window.
pub fn v_window(u: &Universe, e: u64, side: u8, horizon: u64) -> Column {
    u.v_limit(e, side, horizon)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum UfDecision {
    /// `F_n ⊆ V_{e,side}` on `[threshold, horizon)`, where `F_n` still has
    /// `tail` elements.
    Decided {
        side: u8,
        n: u64,
        threshold: u64,
        tail: u64,
    },
    Undecided,
}

/// Least `(n, side)` with `F_n ⊆* V_{e,side}` on the window, `n <= depth`,
/// by a stable threshold beyond which `F_n` is nonempty.
pub fn uf_decision_check(
    f: &CodedFamily,
    u: &Universe,
    e: u64,
    depth: u64,
    horizon: u64,
) -> UfDecision {
    let count = (depth + 1).min(f.depth());
    let cols = columns(f, count, horizon);
    let sides = [v_window(u, e, 0, horizon), v_window(u, e, 1, horizon)];
    for (n, c) in cols.iter().enumerate() {
        for side in 0..2u8 {
            let m = stable(subset_star_witness(c, &sides[side as usize], horizon), horizon);
            if let Some(m) = m.filter(|&m| c.range(m..).next().is_some()) {
                return UfDecision::Decided {
                    side,
                    n: n as u64,
                    threshold: m,
                    tail: c.range(m..).count() as u64,
                };
            }
        }
    }
    UfDecision::Undecided
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TauDecision {
    /// `F_τ ⊆ V_{e,0}` beyond the threshold.
    Inside { threshold: u64 },
    /// `F_τ ∩ V_{e,0} = ∅` beyond the threshold.
    Outside { threshold: u64 },
    Undecided,
}

/// For each `τ` of length `e + 1`, whether `F_τ ⊆* V_{e,0}` or
/// `F_τ ∩ V_{e,0} =* ∅` on the window, with the smaller threshold.
pub fn claim45_check(
    f: &CodedFamily,
    u: &Universe,
    e: u64,
    horizon: u64,
) -> BTreeMap<String, TauDecision> {
    let cols = columns(f, e + 1, horizon);
    let v0 = v_window(u, e, 0, horizon);
    let v1: Column = (0..horizon).filter(|x| !v0.contains(x)).collect();
    let mut out = BTreeMap::new();
    for code in 0..1u64 << (e + 1) {
        let tau: String = (0..=e)
            .map(|i| if code >> i & 1 == 1 { '1' } else { '0' })
            .collect();
        let ft: Column = (0..horizon)
            .filter(|x| {
                cols.iter()
                    .enumerate()
                    .all(|(i, c)| c.contains(x) == (code >> i & 1 == 1))
            })
            .collect();
        let inside = stable(subset_star_witness(&ft, &v0, horizon), horizon);
        let outside = stable(subset_star_witness(&ft, &v1, horizon), horizon);
        let d = match (inside, outside) {
            (Some(a), Some(b)) if b < a => TauDecision::Outside { threshold: b },
            (Some(a), _) => TauDecision::Inside { threshold: a },
            (None, Some(b)) => TauDecision::Outside { threshold: b },
            (None, None) => TauDecision::Undecided,
        };
        out.insert(tau, d);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Probe {
    Escaped { n: u64, count: u64 },
    NotEscaped,
}

fn v0_infinite(u: &Universe, e: u64) -> bool {
    match u.limit(e) {
        LimitBehavior::Total { period, .. } => period.iter().any(|v| v % 2 == 0),
        _ => false,
    }
}

/// For each total `e` with `V_{e,0}` declared infinite, the least `n <= depth`
/// with `|(V_{e,0} ∖ G_n) ∩ window| >= w`.
pub fn maximality_probe(
    g: &CodedFamily,
    u: &Universe,
    depth: u64,
    horizon: u64,
    w: u64,
) -> Vec<(u64, Probe)> {
    let count = (depth + 1).min(g.depth());
    let cols = columns(g, count, horizon);
    u.total_indices()
        .into_iter()
        .filter(|&e| v0_infinite(u, e))
        .map(|e| {
            let v0 = v_window(u, e, 0, horizon);
            let probe = cols
                .iter()
                .enumerate()
                .find_map(|(n, c)| {
                    let count = v0.difference(c).count() as u64;
                    (count >= w).then_some(Probe::Escaped { n: n as u64, count })
                })
                .unwrap_or(Probe::NotEscaped);
            (e, probe)
        })
        .collect()
}

/// `σ` of length `e` with at least `w` elements of `F_σ` in each of
/// `V_{e,0}` and `V_{e,1}` on the window.
pub fn de_classify(u: &Universe, f: &CodedFamily, e: u64, horizon: u64, w: u64) -> BTreeSet<String> {
    let cols = columns(f, e, horizon);
    let v0 = v_window(u, e, 0, horizon);
    let v1 = v_window(u, e, 1, horizon);
    let mut tally: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    for x in 0..horizon {
        let code = cols
            .iter()
            .enumerate()
            .filter(|(_, c)| c.contains(&x))
            .fold(0u64, |acc, (i, _)| acc | 1 << i);
        let t = tally.entry(code).or_default();
        if v0.contains(&x) {
            t.0 += 1;
        } else if v1.contains(&x) {
            t.1 += 1;
        }
    }
    tally
        .into_iter()
        .filter(|&(_, (a, b))| a >= w && b >= w)
        .map(|(code, _)| {
            (0..e)
                .map(|i| if code >> i & 1 == 1 { '1' } else { '0' })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::universe::{PatternSchedule, Schedule};

    fn set(it: impl IntoIterator<Item = u64>) -> Column {
        it.into_iter().collect()
    }

    fn fam(cols: &[Column], horizon: u64) -> CodedFamily {
        CodedFamily::from_columns(cols, horizon)
    }

    #[test]
    fn subset_star_examples() {
        let evens = set((0..100).step_by(2));
        let mut a = evens.clone();
        a.insert(1);
        assert_eq!(subset_star_witness(&a, &evens, 100), Some(2));
        assert_eq!(subset_star_witness(&evens, &evens, 100), Some(0));
        let odds = set((1..100).step_by(2));
        assert_eq!(subset_star_witness(&odds, &evens, 100), None);
    }

    #[test]
    fn tower_examples() {
        let g = fam(&[set(0..100), set((0..100).step_by(2)), set((0..100).step_by(4))], 100);
        assert!(tower_check(&g, 2, 100, 10).passed());
        let bad = fam(&[set(0..100), set((1..100).step_by(2)), set((1..100).step_by(4))], 100);
        let bad = fam(&[set(0..100), set((0..100).step_by(2)), bad.columns()[2].clone()], 100);
        let r = tower_check(&bad, 2, 100, 10);
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.witnesses.iter().any(|w| w.kind == "escapees" && w.elements.len() > 10));
        assert_eq!(tower_check(&g, 2, 100, 1000).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn ad_examples() {
        let cols: Vec<Column> = (0..8).map(|r| set((r..400).step_by(8))).collect();
        assert!(ad_check(&fam(&cols, 400), 8, 400, 5).passed());
        let same = fam(&[set((0..400).step_by(2)), set((0..400).step_by(2))], 400);
        assert_eq!(ad_check(&same, 2, 400, 5).verdict, Verdict::Fail);
    }

    #[test]
    fn independence_examples() {
        let cols: Vec<Column> = (0..3).map(|n| set((0..256).filter(|x| x >> n & 1 == 1))).collect();
        assert!(independence_check(&fam(&cols, 256), 3, 256, 8).passed());
        let dup = fam(&[cols[0].clone(), cols[0].clone()], 256);
        let r = independence_check(&dup, 2, 256, 8);
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.witnesses.iter().any(|w| w.kind.starts_with("thin-sigma:10:")));
        assert!(independence_check(&fam(&[], 10), 0, 10, 10).passed());
    }

    #[test]
    fn uf_decision_examples() {
        let u = Universe::new(vec![Schedule::Pattern(PatternSchedule::new(vec![0, 1]))]);
        let f = fam(&[set(0..100), set((0..100).step_by(2))], 100);
        assert_eq!(
            uf_decision_check(&f, &u, 0, 1, 100),
            UfDecision::Decided { side: 0, n: 1, threshold: 0, tail: 50 }
        );
        let mixed = fam(&[set(0..100), set((0..100).filter(|x| x % 4 < 2))], 100);
        assert_eq!(uf_decision_check(&mixed, &u, 0, 1, 100), UfDecision::Undecided);
    }

    #[test]
    fn probe_and_classify() {
        let u = Universe::new(vec![Schedule::Pattern(PatternSchedule::new(vec![0, 1]))]);
        let omega = fam(&[set(0..64), set(0..64)], 64);
        assert_eq!(maximality_probe(&omega, &u, 1, 64, 5), vec![(0, Probe::NotEscaped)]);
        assert_eq!(maximality_probe(&omega, &u, 1, 64, 0), vec![(0, Probe::Escaped { n: 0, count: 0 })]);
        let u2 = Universe::new(vec![
            Schedule::Pattern(PatternSchedule::new(vec![0])),
            Schedule::Pattern(PatternSchedule::new(vec![0, 0, 1, 1])),
        ]);
        let f = fam(&[set((0..64).step_by(2))], 64);
        assert_eq!(de_classify(&u2, &f, 1, 64, 4), set_s(&["0", "1"]));
        let inside = fam(&[set((0..64).filter(|x| x % 4 < 2))], 64);
        assert_eq!(de_classify(&u2, &inside, 1, 64, 4), BTreeSet::new());
        assert_eq!(de_classify(&u2, &f, 1, 64, 1000), BTreeSet::new());
    }

    fn set_s(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn claim45_parity() {
        let u = Universe::new(vec![Schedule::Pattern(PatternSchedule::new(vec![0, 1]))]);
        let f = fam(&[set((0..100).step_by(2))], 100);
        let d = claim45_check(&f, &u, 0, 100);
        assert_eq!(d["1"], TauDecision::Inside { threshold: 0 });
        assert_eq!(d["0"], TauDecision::Outside { threshold: 0 });
    }
}
