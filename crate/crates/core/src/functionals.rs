//! The explicitly defined functionals: associated functions, `Diff` and
//! `Cp`, the E-set, the `Ĝ` speedup, the jump tower `Θ`, and the splitting
//! search behind index guessing.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{
    pair, BitString, CodedFamily, Column, EncodingError, LogMode, MembershipEventLog,
};
use crate::universe::{
    run_with_oracle, JumpScenario, MachineProgram, Oracle, Phi, RunOutcome, Schedule, Universe,
    UniverseError,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FunctionalError {
    #[error("no value for p({0}) below the horizon")]
    Exhausted(usize),
    #[error("f({n}) = {value} is not above its argument")]
    NonIncreasing { n: u64, value: u64 },
    #[error("index {0} is not a machine program")]
    NotMachine(u64),
    #[error("splittings found above every prefix up to length {0}")]
    NotGuessable(usize),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Universe(#[from] UniverseError),
}

/// A prefix of the function associated with a tower.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociatedFunction {
    pub values: Vec<u64>,
}

impl AssociatedFunction {
    pub fn get(&self, n: usize) -> Option<u64> {
        self.values.get(n).copied()
    }
}

/// `p(0) = min G_0`, `p(k+1)` the least element of `G_0 ∩ ... ∩ G_{k+1}`
/// above `p(k)`, for `k < n`, searching below `horizon`.
pub fn assoc(
    g: &CodedFamily,
    n: usize,
    horizon: u64,
) -> Result<AssociatedFunction, FunctionalError> {
    let mut meet: Option<Column> = None;
    let mut values: Vec<u64> = Vec::with_capacity(n);
    for k in 0..n {
        let col: Column = g.column(k as u64, g.horizon())?.range(..horizon).copied().collect();
        let cur = match meet {
            None => col,
            Some(m) => m.intersection(&col).copied().collect(),
        };
        let floor = values.last().map_or(0, |&p| p + 1);
        let next = cur
            .range(floor..)
            .next()
            .copied()
            .ok_or(FunctionalError::Exhausted(k))?;
        values.push(next);
        meet = Some(cur);
    }
    Ok(AssociatedFunction { values })
}

fn change_stages(g: &CodedFamily, codes: &[u64]) -> BTreeSet<u64> {
    codes
        .iter()
        .flat_map(|&c| g.log().history_of(c).iter().map(|&(t, _)| t))
        .collect()
}

/// `Diff(G)_n = G_n \ G_{n+1}`, as a d.c.e. family with one column fewer.
pub fn diff(g: &CodedFamily) -> Result<CodedFamily, FunctionalError> {
    if g.mode() == LogMode::Dce {
        return Err(EncodingError::UnsupportedMode(LogMode::Dce).into());
    }
    let depth = g.depth().saturating_sub(1);
    let mut out = CodedFamily::new(LogMode::Dce, g.horizon(), depth, g.window());
    for n in 0..depth {
        for u in 0..g.window() {
            let here = pair(u, n)?;
            let next = pair(u, n + 1)?;
            let mut inside = false;
            for t in change_stages(g, &[here, next]) {
                let now = g.contains(u, n, t)? && !g.contains(u, n + 1, t)?;
                if now != inside {
                    out.record(
                        u,
                        n,
                        t,
                        if now {
                            crate::encoding::Polarity::Insert
                        } else {
                            crate::encoding::Polarity::Remove
                        },
                    )?;
                    inside = now;
                }
            }
        }
    }
    Ok(out)
}

/// `Cp(F)_n = {x : x ∉ F_i for all i < n}`, with one column more than `F`.
/// Co-c.e. input yields a c.e. family and conversely.
pub fn cp(f: &CodedFamily) -> Result<CodedFamily, FunctionalError> {
    let depth = f.depth() + 1;
    let window = f.window();
    match f.mode() {
        LogMode::Coce => {
            let mut out = CodedFamily::new(LogMode::Ce, f.horizon(), depth, window);
            for u in 0..window {
                // stage by which u has left every F_i, i < n
                let mut gone_by = Some(0u64);
                for n in 0..depth {
                    if let Some(t) = gone_by {
                        out.insert(u, n, t)?;
                    }
                    if n < f.depth() {
                        let left = f.log().history_of(pair(u, n)?).first().map(|&(t, _)| t);
                        gone_by = match (gone_by, left) {
                            (Some(a), Some(b)) => Some(a.max(b)),
                            _ => None,
                        };
                    }
                }
            }
            Ok(out)
        }
        LogMode::Ce => {
            let mut out = CodedFamily::new(LogMode::Coce, f.horizon(), depth, window);
            for u in 0..window {
                // stage at which u first entered some F_i, i < n
                let mut hit: Option<u64> = None;
                for n in 0..depth {
                    if let Some(t) = hit {
                        out.remove(u, n, t)?;
                    }
                    if n < f.depth() {
                        if let Some(&(t, _)) = f.log().history_of(pair(u, n)?).first() {
                            hit = Some(hit.map_or(t, |h| h.min(t)));
                        }
                    }
                }
            }
            Ok(out)
        }
        LogMode::Dce => Err(EncodingError::UnsupportedMode(LogMode::Dce).into()),
    }
}

/// The set `E = ⋃_i [n_{2i}, n_{2i+1})` cut to a horizon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ESet {
    /// `n_0 = 0, n_{k+1} = f(n_k) + 1`, up to the first value past the horizon.
    pub breakpoints: Vec<u64>,
    pub horizon: u64,
}

impl ESet {
    pub fn contains(&self, x: u64) -> bool {
        if x >= self.horizon {
            return false;
        }
        let k = self.breakpoints.partition_point(|&n| n <= x);
        // x lies in [n_{k-1}, n_k)
        k % 2 == 1
    }

    pub fn members(&self) -> Column {
        (0..self.horizon).filter(|&x| self.contains(x)).collect()
    }

    pub fn to_log(&self) -> MembershipEventLog {
        let mut log = MembershipEventLog::new(LogMode::Ce, 0);
        for x in self.members() {
            log.insert(x, 0).expect("fresh element");
        }
        log
    }
}

pub fn eset(f: impl Fn(u64) -> u64, horizon: u64) -> Result<ESet, FunctionalError> {
    let mut breakpoints = vec![0u64];
    while *breakpoints.last().expect("nonempty") < horizon {
        let n = *breakpoints.last().expect("nonempty");
        let value = f(n);
        if value < n {
            return Err(FunctionalError::NonIncreasing { n, value });
        }
        breakpoints.push(value.saturating_add(1));
    }
    if horizon > 0 && breakpoints.len() < 3 {
        return Err(FunctionalError::Exhausted(breakpoints.len()));
    }
    Ok(ESet {
        breakpoints,
        horizon,
    })
}

/// Elements of each column inside and outside `E` on the window.
pub fn crossing_counts(
    fam: &CodedFamily,
    e: &ESet,
    columns: u64,
) -> Result<Vec<(usize, usize)>, FunctionalError> {
    (0..columns.min(fam.depth()))
        .map(|n| {
            let col = fam.column(n, fam.horizon())?;
            let inside = col.iter().filter(|&&x| e.contains(x)).count();
            let outside = col.iter().filter(|&&x| x < e.horizon).count() - inside;
            Ok((inside, outside))
        })
        .collect()
}

/// A scripted limit approximation `(n, s) -> index`: for each `n`, the
/// index in force from each listed stage on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitApprox {
    pub rows: Vec<Vec<(u64, u64)>>,
}

impl LimitApprox {
    pub fn constant(indices: &[u64]) -> Self {
        LimitApprox {
            rows: indices.iter().map(|&i| vec![(0, i)]).collect(),
        }
    }

    pub fn at(&self, n: usize, s: u64) -> Option<u64> {
        let row = self.rows.get(n)?;
        row.iter().rev().find(|&&(from, _)| from <= s).map(|&(_, i)| i)
    }

    pub fn settling(&self, n: usize) -> u64 {
        self.rows
            .get(n)
            .and_then(|r| r.last())
            .map_or(0, |&(from, _)| from)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HatG {
    pub family: CodedFamily,
    /// Cells `(n, x)` whose search found no convergence by the cap.
    pub pending: BTreeSet<(u64, u64)>,
}

/// For each `n` and `x`, take the least `s > x` (up to `search_cap`) with
/// `φ_{f(n,s),s}(x)` converged and put `x` into `Ĝ_n` iff the output is
/// not 0.
pub fn hat_g(f: &LimitApprox, u: &Universe, horizon: u64, search_cap: u64) -> HatG {
    let depth = f.rows.len() as u64;
    let mut family = CodedFamily::new(LogMode::Ce, search_cap, depth, horizon);
    let mut pending = BTreeSet::new();
    for n in 0..depth {
        for x in 0..horizon {
            let found = (x + 1..=search_cap).find_map(|s| {
                let idx = f.at(n as usize, s)?;
                match u.phi_at(idx, x, s) {
                    Ok(Phi::Converged(v)) => Some((s, v)),
                    _ => None,
                }
            });
            match found {
                Some((s, v)) if v != 0 => family.insert(x, n, s).expect("fresh cell"),
                Some(_) => {}
                None => {
                    pending.insert((n, x));
                }
            }
        }
    }
    HatG { family, pending }
}

/// `Θ^Z`: `G_n = {x : n <= |x| and Z'_{|x|} ↾ n = x ↾ n}` over strings of
/// length at most `max_len`, coded as numbers via the leading 1.
pub fn jump_tower(j: &JumpScenario, depth: usize, max_len: usize) -> CodedFamily {
    let window = 1u64 << (max_len + 1);
    let mut fam = CodedFamily::new(LogMode::Ce, 0, depth as u64, window);
    for len in 0..=max_len {
        let z: Vec<BitString> = (0..depth.min(len) + 1)
            .map(|n| j.jump_at(n, len as u64))
            .collect();
        for x in BitString::all_of_length(len) {
            let code = x.to_number().expect("short strings fit");
            for (n, zn) in z.iter().enumerate().take(depth) {
                if zn.is_prefix_of(&x) {
                    fam.insert(code, n as u64, 0).expect("fresh code");
                }
            }
        }
    }
    fam
}

/// `Z'(k)` read off the longest members of `R` (string codes): the bit at
/// position `k` if the last `min_witnesses` members longer than `k` agree.
pub fn recover_jump(r: &Column, k: usize, min_witnesses: usize) -> Option<bool> {
    let tail: Vec<BitString> = r
        .iter()
        .rev()
        .filter_map(|&c| BitString::from_number(c).ok())
        .filter(|x| x.len() > k)
        .take(min_witnesses)
        .collect();
    if min_witnesses == 0 || tail.len() < min_witnesses {
        return None;
    }
    let b = tail[0].bit(k)?;
    tail.iter().all(|x| x.bit(k) == Some(b)).then_some(b)
}

/// `Φ_e^{τ1}(p) != Φ_e^{τ2}(p)` with both computations converging.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplittingWitness {
    pub p: u64,
    pub tau1: BitString,
    pub tau2: BitString,
    pub out1: u64,
    pub out2: u64,
}

fn functional(u: &Universe, e: u64) -> Result<&MachineProgram, FunctionalError> {
    match u.schedule(e) {
        Some(Schedule::Machine(m)) => Ok(m.program()),
        Some(_) => Err(FunctionalError::NotMachine(e)),
        None => Err(UniverseError::IndexOutOfRange { e, len: u.len() }.into()),
    }
}

/// Searches inputs `p < max_len` and pairs of extensions of `σ` of length
/// at most `max_len`, in length-lexicographic order, for the first pair
/// with different converged outputs.
pub fn find_splitting(
    u: &Universe,
    e: u64,
    sigma: &BitString,
    max_len: usize,
    fuel: u64,
) -> Result<Option<SplittingWitness>, FunctionalError> {
    let prog = functional(u, e)?;
    let taus = sigma.extensions_up_to(max_len);
    for p in 0..max_len as u64 {
        let outs: Vec<Option<u64>> = taus
            .iter()
            .map(|t| run_with_oracle(prog, p, fuel, Oracle::Prefix(t)).value())
            .collect();
        for (i, a) in outs.iter().enumerate() {
            let Some(a) = *a else { continue };
            if let Some(j) = (i + 1..outs.len()).find(|&j| outs[j].is_some_and(|b| b != a)) {
                return Ok(Some(SplittingWitness {
                    p,
                    tau1: taus[i].clone(),
                    tau2: taus[j].clone(),
                    out1: a,
                    out2: outs[j].expect("checked"),
                }));
            }
        }
    }
    Ok(None)
}

/// The index produced by guessing: evaluate `Φ_e` on some extension of the
/// stored prefix of `L` on which it converges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuessedIndex {
    pub e: u64,
    pub k: usize,
    pub prefix: BitString,
}

impl GuessedIndex {
    /// Depth-first over the oracle bits the computation asks for, 0 before
    /// 1, padding unasked positions with 0, up to strings of length
    /// `max_len`.
    pub fn eval(
        &self,
        u: &Universe,
        p: u64,
        max_len: usize,
        fuel: u64,
    ) -> Result<Option<u64>, FunctionalError> {
        let prog = functional(u, self.e)?;
        Ok(search_extension(prog, p, &self.prefix, max_len, fuel))
    }
}

fn search_extension(
    prog: &MachineProgram,
    p: u64,
    tau: &BitString,
    max_len: usize,
    fuel: u64,
) -> Option<u64> {
    match run_with_oracle(prog, p, fuel, Oracle::Prefix(tau)) {
        RunOutcome::Halt { value, .. } => Some(value),
        RunOutcome::OutOfFuel => None,
        RunOutcome::BeyondPrefix { position, .. } => {
            let position = usize::try_from(position).ok()?;
            if position >= max_len {
                return None;
            }
            let mut padded = tau.clone();
            while padded.len() < position {
                padded.push(false);
            }
            [false, true]
                .into_iter()
                .find_map(|b| search_extension(prog, p, &padded.child(b), max_len, fuel))
        }
    }
}

/// Finds the least `k` below `min(max_len, |L|)` with no splitting of
/// `Φ_e` above `L ↾ k` at the given bounds.
pub fn guess_index(
    u: &Universe,
    e: u64,
    l: &BitString,
    max_len: usize,
    fuel: u64,
) -> Result<GuessedIndex, FunctionalError> {
    for k in 0..max_len.min(l.len()) {
        let sigma = l.prefix(k);
        if find_splitting(u, e, &sigma, max_len, fuel)?.is_none() {
            return Ok(GuessedIndex {
                e,
                k,
                prefix: sigma,
            });
        }
    }
    Err(FunctionalError::NotGuessable(max_len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::Polarity;
    use crate::universe::{JumpBit, LimitBehavior, MachineSchedule, PatternSchedule};

    fn cols(sets: &[Vec<u64>]) -> Vec<Column> {
        sets.iter().map(|s| s.iter().copied().collect()).collect()
    }

    fn mult_tower(window: u64) -> CodedFamily {
        let g = cols(&[
            (0..window).collect(),
            (0..window).filter(|x| x % 2 == 0).collect(),
            (0..window).filter(|x| x % 4 == 0).collect(),
        ]);
        CodedFamily::from_columns(&g, window)
    }

    #[test]
    fn assoc_on_multiples() {
        let g = mult_tower(100);
        assert_eq!(assoc(&g, 3, 100).unwrap().values, vec![0, 2, 4]);
        assert_eq!(assoc(&g, 1, 100).unwrap().values, vec![0]);
        assert_eq!(assoc(&g, 3, 4), Err(FunctionalError::Exhausted(2)));
    }

    #[test]
    fn diff_of_multiples() {
        let f = diff(&mult_tower(64)).unwrap();
        assert_eq!(f.mode(), LogMode::Dce);
        assert_eq!(f.depth(), 2);
        let odds: Column = (0..64).filter(|x| x % 2 == 1).collect();
        let two_mod_four: Column = (0..64).filter(|x| x % 4 == 2).collect();
        assert_eq!(f.columns(), vec![odds, two_mod_four]);
        let constant = CodedFamily::from_columns(&cols(&[(0..30).collect(), (0..30).collect()]), 30);
        assert!(diff(&constant).unwrap().columns().iter().all(Column::is_empty));
    }

    #[test]
    fn diff_of_coce_tower_alternates_at_most_once() {
        let mut g = CodedFamily::new(LogMode::Coce, 10, 3, 8);
        g.remove(3, 1, 2).unwrap();
        g.remove(3, 2, 2).unwrap();
        g.remove(5, 2, 1).unwrap();
        g.remove(5, 1, 4).unwrap();
        let f = diff(&g).unwrap();
        assert_eq!(f.log().history_of(pair(5, 1).unwrap()), &[(1, Polarity::Insert), (4, Polarity::Remove)]);
        assert_eq!(f.log().history_of(pair(5, 0).unwrap()), &[(4, Polarity::Insert)]);
        // removed from G_1 and G_2 together: never in F_1
        assert!(f.log().history_of(pair(3, 1).unwrap()).is_empty());
    }

    #[test]
    fn cp_builds_complement_chain() {
        let f = CodedFamily::from_columns(
            &cols(&[(0..20).filter(|x| x % 2 == 0).collect(), vec![1, 3]]),
            20,
        );
        let g = cp(&f).unwrap();
        assert_eq!(g.mode(), LogMode::Coce);
        let cs = g.columns();
        assert_eq!(cs[0], (0..20).collect());
        assert_eq!(cs[1], (0..20).filter(|x| x % 2 == 1).collect());
        assert_eq!(cs[2], (5..20).filter(|x| x % 2 == 1).collect());
        let empty = CodedFamily::new(LogMode::Ce, 0, 3, 10);
        assert!(cp(&empty).unwrap().columns().iter().all(|c| *c == (0..10).collect()));
    }

    #[test]
    fn cp_turns_coce_into_ce() {
        let mut f = CodedFamily::new(LogMode::Coce, 9, 2, 6);
        for u in 0..6 {
            f.remove(u, 0, u + 1).unwrap();
            if u % 2 == 0 {
                f.remove(u, 1, 8).unwrap();
            }
        }
        let g = cp(&f).unwrap();
        assert_eq!(g.mode(), LogMode::Ce);
        assert!(g.log().events().iter().all(|ev| ev.polarity == Polarity::Insert));
        assert_eq!(g.column(1, 3).unwrap(), (0..3).collect());
        assert_eq!(g.column(2, 9).unwrap(), [0, 2, 4].into_iter().collect());
        for s in 0..=9 {
            let cs = g.columns_at(s).unwrap();
            assert!(cs.windows(2).all(|w| w[1].is_subset(&w[0])));
        }
        let dce = CodedFamily::new(LogMode::Dce, 0, 1, 1);
        assert!(cp(&dce).is_err());
    }

    #[test]
    fn eset_recurrences() {
        let e = eset(|n| 2 * n + 2, 100).unwrap();
        assert_eq!(&e.breakpoints[..5], &[0, 3, 9, 21, 45]);
        assert!(e.contains(0) && e.contains(2) && !e.contains(3) && e.contains(9));
        assert!(e.contains(20) && !e.contains(21) && e.contains(45));
        let e = eset(|n| n + 1, 10).unwrap();
        assert_eq!(e.members(), [0, 1, 4, 5, 8, 9].into_iter().collect());
        assert!(eset(|n| n + 1, 0).unwrap().members().is_empty());
        assert!(matches!(eset(|n| n + 50, 20), Err(FunctionalError::Exhausted(_))));
        assert!(matches!(eset(|_| 0, 20), Err(FunctionalError::NonIncreasing { .. })));
    }

    #[test]
    fn hat_g_cases() {
        let evens = Schedule::Pattern(PatternSchedule::new(vec![1, 0]));
        let odds = Schedule::Pattern(PatternSchedule::new(vec![0, 1]));
        let never = Schedule::Pattern(PatternSchedule::new(vec![0]).diverging_at(0..1000));
        let u = Universe::new(vec![evens, odds, never]);

        let settled = hat_g(&LimitApprox::constant(&[0]), &u, 40, 200);
        assert!(settled.pending.is_empty());
        assert_eq!(settled.family.column(0, 200).unwrap(), (0..40).filter(|x| x % 2 == 0).collect());

        let flip = LimitApprox {
            rows: vec![vec![(0, 1), (10, 0)]],
        };
        let got = hat_g(&flip, &u, 40, 200).family.column(0, 200).unwrap();
        let target: Column = (0..40).filter(|x| x % 2 == 0).collect();
        let wrong: Vec<u64> = got.symmetric_difference(&target).copied().collect();
        assert!(!wrong.is_empty() && wrong.iter().all(|&x| x < 10));

        let dead = hat_g(&LimitApprox::constant(&[2]), &u, 10, 50);
        assert_eq!(dead.pending.len(), 10);
        assert!(dead.family.column(0, 50).unwrap().is_empty());
    }

    fn scenario_10() -> JumpScenario {
        JumpScenario::new(vec![
            JumpBit { initial: 0, flips: vec![2], settling: 5 },
            JumpBit { initial: 1, flips: vec![3], settling: 5 },
        ])
        .unwrap()
    }

    #[test]
    fn jump_tower_examples() {
        let j = scenario_10();
        let g = jump_tower(&j, 3, 6);
        let cs = g.columns();
        assert_eq!(cs[0].len(), (1 << 7) - 1);
        let len6: Vec<BitString> = cs[2]
            .iter()
            .map(|&c| BitString::from_number(c).unwrap())
            .filter(|x| x.len() == 6)
            .collect();
        assert_eq!(len6.len(), 16);
        assert!(len6.iter().all(|x| x.to_string().starts_with("10")));
        for n in 0..2 {
            assert!(cs[n + 1].is_subset(&cs[n]));
        }
    }

    #[test]
    fn recover_jump_cases() {
        let j = scenario_10();
        let g = jump_tower(&j, 3, 10);
        let cs = g.columns();
        assert_eq!(recover_jump(&cs[1], 0, 10), Some(true));
        assert_eq!(recover_jump(&cs[2], 1, 10), Some(false));
        let alternating: Column = ["1010", "1011"]
            .iter()
            .map(|s| s.parse::<BitString>().unwrap().to_number().unwrap())
            .collect();
        assert_eq!(recover_jump(&alternating, 3, 2), None);
        assert_eq!(recover_jump(&alternating, 0, 3), None);
    }

    fn machine(text: &str) -> Schedule {
        Schedule::Machine(MachineSchedule::new(text.parse().unwrap(), LimitBehavior::Undeclared))
    }

    #[test]
    fn splitting_examples() {
        let u = Universe::new(vec![
            // Φ^τ(p) = τ(0)
            machine("ORC 2 1\nHALT"),
            // constant 0
            machine("HALT"),
            // Φ^τ(p) = τ(2)
            machine("INC 2\nINC 2\nORC 2 1\nHALT"),
        ]);
        let eps = BitString::empty();
        let w = find_splitting(&u, 0, &eps, 6, 100).unwrap().unwrap();
        assert_eq!((w.p, w.tau1.to_string(), w.tau2.to_string()), (0, "0".into(), "1".into()));
        for bound in 1..8 {
            assert_eq!(find_splitting(&u, 1, &eps, bound, 100).unwrap(), None);
        }
        let w = find_splitting(&u, 2, &eps, 6, 100).unwrap().unwrap();
        assert_eq!((w.tau1.to_string(), w.tau2.to_string()), ("000".into(), "001".into()));
        assert_eq!(find_splitting(&u, 2, &eps, 6, 100).unwrap(), Some(w));
        let table = Universe::new(vec![Schedule::Pattern(PatternSchedule::new(vec![0]))]);
        assert_eq!(find_splitting(&table, 0, &eps, 3, 10), Err(FunctionalError::NotMachine(0)));
    }

    #[test]
    fn guess_index_cases() {
        let u = Universe::new(vec![machine("HALT"), machine("ORC 0 1\nHALT")]);
        let l: BitString = "0110100110010110".parse().unwrap();
        let g = guess_index(&u, 0, &l, 8, 100).unwrap();
        assert_eq!(g.k, 0);
        for p in 0..20 {
            assert_eq!(g.eval(&u, p, 8, 100).unwrap(), Some(0));
        }
        assert_eq!(guess_index(&u, 1, &l, 8, 1000), Err(FunctionalError::NotGuessable(8)));
    }
}
