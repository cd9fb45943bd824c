//! Exact leftmost infinite path through the stream tree, by arithmetic on
//! eventually periodic sets.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::encoding::Column;
use crate::universe::{LimitBehavior, Universe};

use super::OracleError;

/// `x ∈ S` iff `head[x]` for `x < head.len()`, and
/// `period[(x - head.len()) % period.len()]` above.
#[derive(Clone, PartialEq, Eq)]
pub struct EpSet {
    head: Vec<bool>,
    period: Vec<bool>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl EpSet {
    pub fn new(head: Vec<bool>, period: Vec<bool>) -> Self {
        assert!(!period.is_empty(), "period must be nonempty");
        EpSet { head, period }
    }

    pub fn omega() -> Self {
        EpSet::new(Vec::new(), vec![true])
    }

    pub fn empty() -> Self {
        EpSet::new(Vec::new(), vec![false])
    }

    fn from_fn(start: usize, period: usize, f: impl Fn(u64) -> bool) -> Self {
        EpSet {
            head: (0..start as u64).map(&f).collect(),
            period: (start..start + period).map(|x| f(x as u64)).collect(),
        }
    }

    pub fn start(&self) -> u64 {
        self.head.len() as u64
    }

    pub fn period_len(&self) -> u64 {
        self.period.len() as u64
    }

    pub fn contains(&self, x: u64) -> bool {
        match self.head.get(x as usize) {
            Some(&b) => b,
            None => {
                let off = (x - self.start()) % self.period_len();
                self.period[off as usize]
            }
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.period.contains(&true)
    }

    /// Members per period.
    pub fn density(&self) -> (u64, u64) {
        (
            self.period.iter().filter(|&&b| b).count() as u64,
            self.period_len(),
        )
    }

    pub fn intersect(&self, other: &EpSet) -> EpSet {
        let start = self.head.len().max(other.head.len());
        let (p, q) = (self.period.len(), other.period.len());
        let len = p / gcd(p, q) * q;
        EpSet::from_fn(start, len, |x| self.contains(x) && other.contains(x))
    }

    /// The members at even positions `r_0, r_2, r_4, ...`.
    pub fn every_other(&self) -> EpSet {
        let below = self.head.iter().filter(|&&b| b).count();
        let (per, p) = self.density();
        let len = if per % 2 == 0 { p } else { 2 * p } as usize;
        let start = self.head.len();
        let mut head = Vec::with_capacity(start);
        let mut idx = 0usize;
        for &b in &self.head {
            head.push(b && idx % 2 == 0);
            idx += b as usize;
        }
        debug_assert_eq!(idx, below);
        let mut period = Vec::with_capacity(len);
        for off in 0..len {
            let b = self.period[off % self.period.len()];
            period.push(b && idx % 2 == 0);
            idx += b as usize;
        }
        EpSet { head, period }
    }

    pub fn members_below(&self, bound: u64) -> Column {
        (0..bound).filter(|&x| self.contains(x)).collect()
    }
}

impl fmt::Debug for EpSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits = |v: &[bool]| v.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
        write!(f, "EpSet({} | {})", bits(&self.head), bits(&self.period))
    }
}

/// `V_{e,k}` in the limit, from the declared behavior of `ψ_e`.
pub fn v_set(u: &Universe, e: u64, k: u8) -> Result<EpSet, OracleError> {
    match u.limit(e) {
        LimitBehavior::Total { prefix, period } => {
            let start = prefix.len();
            let per = period.len();
            Ok(EpSet::from_fn(start, per, |x| {
                let v = match prefix.get(x as usize) {
                    Some(&v) => v,
                    None => period[(x % per as u64) as usize],
                };
                v == k
            }))
        }
        LimitBehavior::Partial { domain_len } => Ok(EpSet::from_fn(
            domain_len as usize,
            1,
            |x| x < domain_len && u.psi_limit(e, x) == Some(k),
        )),
        LimitBehavior::Undeclared => Err(OracleError::UniverseNotDecidable(e)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alphabet {
    /// Children `0, 1` split `S̃_α` by `V_{e,0}, V_{e,1}`; `2` is `S̃_α`.
    Ternary,
    /// Only the two splitting children.
    Binary,
}

impl Alphabet {
    pub fn arity(self) -> u8 {
        match self {
            Alphabet::Ternary => 3,
            Alphabet::Binary => 2,
        }
    }
}

/// `S_{α⌢k}` from `S_α` in the limit.
pub fn child_stream(
    u: &Universe,
    parent: &EpSet,
    e: u64,
    k: u8,
) -> Result<EpSet, OracleError> {
    let thinned = parent.every_other();
    if k == 2 {
        Ok(thinned)
    } else {
        Ok(thinned.intersect(&v_set(u, e, k)?))
    }
}

/// `S_α` in the limit.
pub fn stream_of(u: &Universe, alpha: &str) -> Result<EpSet, OracleError> {
    let mut s = EpSet::omega();
    for (e, c) in alpha.bytes().enumerate() {
        s = child_stream(u, &s, e as u64, c - b'0')?;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeftmostPath {
    pub path: String,
    /// `S_{g↾e}` for `e <= depth`.
    pub streams: Vec<EpSet>,
}

/// The leftmost `g` of length `depth` with every `S_{g↾e}` infinite.
pub fn leftmost_path(
    u: &Universe,
    depth: usize,
    alphabet: Alphabet,
) -> Result<LeftmostPath, OracleError> {
    let mut path = String::with_capacity(depth);
    let mut streams = vec![EpSet::omega()];
    for e in 0..depth {
        let cur = streams.last().expect("root stream");
        let mut next = None;
        for k in 0..alphabet.arity() {
            let s = child_stream(u, cur, e as u64, k)?;
            if s.is_infinite() {
                next = Some((k, s));
                break;
            }
        }
        let (k, s) = next.ok_or(OracleError::NoInfinitePath(e))?;
        path.push((b'0' + k) as char);
        streams.push(s);
    }
    Ok(LeftmostPath { path, streams })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::universe::{PatternSchedule, Schedule};

    fn brute_every_other(s: &Column) -> Column {
        s.iter().step_by(2).copied().collect()
    }

    #[test]
    fn every_other_matches_brute_force() {
        let cases = [
            EpSet::omega(),
            EpSet::new(vec![true, false, true], vec![true, true, false]),
            EpSet::new(vec![false; 5], vec![true, false, false, true, true]),
            EpSet::new(vec![true, true], vec![false]),
        ];
        for s in cases {
            let bound = 400;
            let got = s.every_other().members_below(bound);
            assert_eq!(got, brute_every_other(&s.members_below(bound)), "{s:?}");
        }
    }

    #[test]
    fn intersection_matches_brute_force() {
        let a = EpSet::new(vec![true, true, false], vec![true, false]);
        let b = EpSet::new(vec![], vec![false, true, true]);
        let both: Column = a.members_below(300).intersection(&b.members_below(300)).copied().collect();
        assert_eq!(a.intersect(&b).members_below(300), both);
    }

    fn pattern(p: Vec<u64>) -> Schedule {
        Schedule::Pattern(PatternSchedule::new(p))
    }

    #[test]
    fn examples() {
        let parity = Universe::new(vec![pattern(vec![0, 1])]);
        assert_eq!(leftmost_path(&parity, 0, Alphabet::Ternary).unwrap().path, "");
        assert!(leftmost_path(&parity, 1, Alphabet::Ternary).unwrap().path.starts_with('0'));
        let dead = Universe::new(vec![
            Schedule::Pattern(PatternSchedule::new(vec![0]).diverging_at([3])),
            Schedule::Pattern(PatternSchedule::new(vec![0]).diverging_at([0])),
        ]);
        let g = leftmost_path(&dead, 4, Alphabet::Ternary).unwrap();
        assert_eq!(g.path, "2222");
        assert_eq!(g.streams[3].members_below(64), (0..64).filter(|x| x % 8 == 0).collect());
        assert_eq!(
            leftmost_path(&dead, 1, Alphabet::Binary),
            Err(OracleError::NoInfinitePath(0))
        );
    }

    #[test]
    fn thinning_after_a_split() {
        let u = Universe::new(vec![pattern(vec![1, 1, 0])]);
        let s = stream_of(&u, "0").unwrap();
        assert_eq!(s.members_below(30), [2, 8, 14, 20, 26].into_iter().collect());
        let t = stream_of(&u, "1").unwrap();
        assert_eq!(t.members_below(30), [0, 4, 6, 10, 12, 16, 18, 22, 24, 28].into_iter().collect());
        let tt = stream_of(&u, "12").unwrap();
        assert_eq!(tt.members_below(30), [0, 6, 12, 18, 24].into_iter().collect());
    }
}
