//! Pairing, column coding, the string/number identification, and the
//! event-log representation of stagewise set approximations.
//!
//! Every set that evolves over stages is kept as a [`MembershipEventLog`]:
//! "the set at stage `s`" is always computed from the log, so polarity
//! claims (only inserts, only removals, one alternation) are properties of
//! the log that can be asserted directly.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A finite window of a column or stream.
pub type Column = BTreeSet<u64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("pair code for ({0}, {1}) does not fit in 64 bits")]
    Overflow(u64, u64),
    #[error("no bit string is identified with 0")]
    ZeroHasNoString,
    #[error("bit string of length {0} does not fit in a 64-bit code")]
    StringTooLong(usize),
    #[error("invalid bit string {0:?}")]
    BadBitString(String),
    #[error("stage {stage} is beyond the log horizon {horizon}")]
    BeyondHorizon { stage: u64, horizon: u64 },
    #[error("column {column} out of range (family depth {depth})")]
    ColumnOutOfRange { column: u64, depth: u64 },
    #[error("invalid event for element {element} at stage {stage}: {reason}")]
    InvalidEvent {
        element: u64,
        stage: u64,
        reason: &'static str,
    },
    #[error("{0:?} input is not supported by this transform")]
    UnsupportedMode(LogMode),
}

/// Cantor pairing `<x, n> = (x+n)(x+n+1)/2 + n`.
pub fn pair(x: u64, n: u64) -> Result<u64, EncodingError> {
    let overflow = || EncodingError::Overflow(x, n);
    let sum = x.checked_add(n).ok_or_else(overflow)?;
    let succ = sum.checked_add(1).ok_or_else(overflow)?;
    let tri = if sum % 2 == 0 {
        (sum / 2).checked_mul(succ)
    } else {
        sum.checked_mul(succ / 2)
    }
    .ok_or_else(overflow)?;
    tri.checked_add(n).ok_or_else(overflow)
}

/// Inverse of [`pair`].
pub fn unpair(code: u64) -> (u64, u64) {
    let c = code as u128;
    let w = ((8 * c + 1).isqrt() - 1) / 2;
    let tri = w * (w + 1) / 2;
    let n = c - tri;
    let x = w - n;
    (x as u64, n as u64)
}

/// Code of a pair `<x, n>`; `x` is the element and `n` the column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PairCode(pub u64);

impl PairCode {
    pub fn new(x: u64, n: u64) -> Result<Self, EncodingError> {
        pair(x, n).map(PairCode)
    }

    pub fn element(self) -> u64 {
        unpair(self.0).0
    }

    pub fn column(self) -> u64 {
        unpair(self.0).1
    }
}

/// A finite binary string, most significant bit first.
///
/// Ordered by length and then lexicographically, which is the order of the
/// numbers the strings are identified with.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn empty() -> Self {
        BitString(Vec::new())
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: usize) -> Option<bool> {
        self.0.get(i).copied()
    }

    pub fn prefix(&self, n: usize) -> BitString {
        BitString(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn child(&self, bit: bool) -> BitString {
        let mut out = self.clone();
        out.push(bit);
        out
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.0.starts_with(&self.0)
    }

    /// The number whose binary expansion is `1` followed by the string.
    pub fn to_number(&self) -> Result<u64, EncodingError> {
        if self.0.len() > 63 {
            return Err(EncodingError::StringTooLong(self.0.len()));
        }
        Ok(self
            .0
            .iter()
            .fold(1u64, |acc, &b| (acc << 1) | u64::from(b)))
    }

    /// Inverse of [`BitString::to_number`]; 0 has no string.
    pub fn from_number(v: u64) -> Result<Self, EncodingError> {
        if v == 0 {
            return Err(EncodingError::ZeroHasNoString);
        }
        let width = 63 - v.leading_zeros() as usize;
        let bits = (0..width).rev().map(|i| (v >> i) & 1 == 1).collect();
        Ok(BitString(bits))
    }

    /// All strings of length `len` in lexicographic order.
    pub fn all_of_length(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len < 63, "string length {len} too large to enumerate");
        let start = 1u64 << len;
        (start..start << 1).map(|v| BitString::from_number(v).expect("v >= 1"))
    }

    /// Strings extending `self` with length at most `max_len`, shortest
    /// first and lexicographic within a length.
    pub fn extensions_up_to(&self, max_len: usize) -> Vec<BitString> {
        let mut out = Vec::new();
        for len in self.len()..=max_len {
            let extra = len - self.len();
            for tail in BitString::all_of_length(extra) {
                let mut s = self.clone();
                s.0.extend_from_slice(&tail.0);
                out.push(s);
            }
        }
        out
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(EncodingError::BadBitString(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Insert,
    Remove,
}

/// Which membership changes a log may contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogMode {
    /// Starts empty; inserts only.
    Ce,
    /// Starts as all of omega; removals only.
    Coce,
    /// Starts empty; at most one insert followed by at most one removal.
    Dce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MembershipEvent {
    pub element: u64,
    pub stage: u64,
    pub polarity: Polarity,
}

/// Time-stamped membership changes. Membership at stage `s` reflects every
/// event with stage `<= s`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLog", into = "RawLog")]
pub struct MembershipEventLog {
    mode: LogMode,
    horizon: u64,
    history: BTreeMap<u64, Vec<(u64, Polarity)>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLog {
    mode: LogMode,
    horizon: u64,
    events: Vec<MembershipEvent>,
}

impl TryFrom<RawLog> for MembershipEventLog {
    type Error = EncodingError;

    fn try_from(raw: RawLog) -> Result<Self, Self::Error> {
        MembershipEventLog::from_events(raw.mode, raw.horizon, raw.events)
    }
}

impl From<MembershipEventLog> for RawLog {
    fn from(log: MembershipEventLog) -> Self {
        RawLog {
            mode: log.mode,
            horizon: log.horizon,
            events: log.events(),
        }
    }
}

impl MembershipEventLog {
    pub fn new(mode: LogMode, horizon: u64) -> Self {
        MembershipEventLog {
            mode,
            horizon,
            history: BTreeMap::new(),
        }
    }

    /// Builds a log from events in the given order, validating each one.
    pub fn from_events(
        mode: LogMode,
        horizon: u64,
        events: impl IntoIterator<Item = MembershipEvent>,
    ) -> Result<Self, EncodingError> {
        let mut log = MembershipEventLog::new(mode, horizon);
        for ev in events {
            log.record(ev.element, ev.stage, ev.polarity)?;
        }
        Ok(log)
    }

    pub fn mode(&self) -> LogMode {
        self.mode
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Moves the horizon forward; horizons never shrink.
    pub fn extend_horizon(&mut self, horizon: u64) {
        self.horizon = self.horizon.max(horizon);
    }

    pub fn initially_present(&self) -> bool {
        self.mode == LogMode::Coce
    }

    pub fn record(
        &mut self,
        element: u64,
        stage: u64,
        polarity: Polarity,
    ) -> Result<(), EncodingError> {
        let bad = |reason| EncodingError::InvalidEvent {
            element,
            stage,
            reason,
        };
        if stage > self.horizon {
            return Err(EncodingError::BeyondHorizon {
                stage,
                horizon: self.horizon,
            });
        }
        let hist = self.history.get(&element).map(Vec::as_slice).unwrap_or(&[]);
        if let Some(&(last_stage, last_pol)) = hist.last() {
            if stage <= last_stage {
                return Err(bad("stages must strictly increase per element"));
            }
            if last_pol == polarity {
                return Err(bad("polarity must alternate per element"));
            }
        }
        match self.mode {
            LogMode::Ce if polarity == Polarity::Remove => {
                return Err(bad("c.e. logs admit no removals"))
            }
            LogMode::Coce if polarity == Polarity::Insert => {
                return Err(bad("co-c.e. logs admit no insertions"))
            }
            LogMode::Dce if hist.is_empty() && polarity == Polarity::Remove => {
                return Err(bad("d.c.e. logs must insert before removing"))
            }
            LogMode::Dce if hist.len() >= 2 => {
                return Err(bad("d.c.e. logs admit one insert and one removal"))
            }
            _ => {}
        }
        self.history
            .entry(element)
            .or_default()
            .push((stage, polarity));
        Ok(())
    }

    pub fn insert(&mut self, element: u64, stage: u64) -> Result<(), EncodingError> {
        self.record(element, stage, Polarity::Insert)
    }

    pub fn remove(&mut self, element: u64, stage: u64) -> Result<(), EncodingError> {
        self.record(element, stage, Polarity::Remove)
    }

    /// All events, ordered by stage, then element.
    pub fn events(&self) -> Vec<MembershipEvent> {
        let mut out: Vec<MembershipEvent> = self
            .history
            .iter()
            .flat_map(|(&element, hist)| {
                hist.iter().map(move |&(stage, polarity)| MembershipEvent {
                    element,
                    stage,
                    polarity,
                })
            })
            .collect();
        out.sort_by_key(|e| (e.stage, e.element));
        out
    }

    pub fn event_count(&self) -> usize {
        self.history.values().map(Vec::len).sum()
    }

    /// Elements that have at least one event.
    pub fn touched(&self) -> impl Iterator<Item = u64> + '_ {
        self.history.keys().copied()
    }

    pub fn history_of(&self, element: u64) -> &[(u64, Polarity)] {
        self.history.get(&element).map(Vec::as_slice).unwrap_or(&[])
    }

    fn check_stage(&self, stage: u64) -> Result<(), EncodingError> {
        if stage > self.horizon {
            Err(EncodingError::BeyondHorizon {
                stage,
                horizon: self.horizon,
            })
        } else {
            Ok(())
        }
    }

    fn member_unchecked(&self, element: u64, stage: u64) -> bool {
        let mut present = self.initially_present();
        for &(t, pol) in self.history_of(element) {
            if t > stage {
                break;
            }
            present = pol == Polarity::Insert;
        }
        present
    }

    pub fn contains_at(&self, element: u64, stage: u64) -> Result<bool, EncodingError> {
        self.check_stage(stage)?;
        Ok(self.member_unchecked(element, stage))
    }

    /// Members below `bound` at `stage`.
    pub fn members_at(&self, stage: u64, bound: u64) -> Result<Column, EncodingError> {
        self.check_stage(stage)?;
        Ok(match self.mode {
            LogMode::Coce => (0..bound)
                .filter(|&x| self.member_unchecked(x, stage))
                .collect(),
            LogMode::Ce | LogMode::Dce => self
                .history
                .range(..bound)
                .filter(|(&x, _)| self.member_unchecked(x, stage))
                .map(|(&x, _)| x)
                .collect(),
        })
    }
}

/// A sequence of sets coded as the columns of one set of pair codes.
///
/// Only columns `< depth` are represented, and columns are materialized on
/// the element window `[0, window)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodedFamily {
    log: MembershipEventLog,
    depth: u64,
    window: u64,
}

impl CodedFamily {
    pub fn new(mode: LogMode, horizon: u64, depth: u64, window: u64) -> Self {
        CodedFamily {
            log: MembershipEventLog::new(mode, horizon),
            depth,
            window,
        }
    }

    pub fn from_log(log: MembershipEventLog, depth: u64, window: u64) -> Self {
        CodedFamily { log, depth, window }
    }

    /// A family whose columns are fixed from stage 0 on.
    pub fn from_columns(columns: &[Column], window: u64) -> Self {
        let mut fam = CodedFamily::new(LogMode::Ce, 0, columns.len() as u64, window);
        for (n, col) in columns.iter().enumerate() {
            for &u in col.range(..window) {
                fam.insert(u, n as u64, 0).expect("fresh insert");
            }
        }
        fam
    }

    pub fn log(&self) -> &MembershipEventLog {
        &self.log
    }

    pub fn mode(&self) -> LogMode {
        self.log.mode()
    }

    pub fn depth(&self) -> u64 {
        self.depth
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn horizon(&self) -> u64 {
        self.log.horizon()
    }

    pub fn extend_horizon(&mut self, horizon: u64) {
        self.log.extend_horizon(horizon);
    }

    fn code(&self, u: u64, n: u64) -> Result<u64, EncodingError> {
        if n >= self.depth {
            return Err(EncodingError::ColumnOutOfRange {
                column: n,
                depth: self.depth,
            });
        }
        pair(u, n)
    }

    pub fn record(
        &mut self,
        u: u64,
        n: u64,
        stage: u64,
        polarity: Polarity,
    ) -> Result<(), EncodingError> {
        let code = self.code(u, n)?;
        self.log.record(code, stage, polarity)
    }

    pub fn insert(&mut self, u: u64, n: u64, stage: u64) -> Result<(), EncodingError> {
        self.record(u, n, stage, Polarity::Insert)
    }

    pub fn remove(&mut self, u: u64, n: u64, stage: u64) -> Result<(), EncodingError> {
        self.record(u, n, stage, Polarity::Remove)
    }

    pub fn contains(&self, u: u64, n: u64, stage: u64) -> Result<bool, EncodingError> {
        let code = self.code(u, n)?;
        self.log.contains_at(code, stage)
    }

    /// `{u < window : <u, n> is a member at stage s}`.
    pub fn column(&self, n: u64, stage: u64) -> Result<Column, EncodingError> {
        if n >= self.depth {
            return Err(EncodingError::ColumnOutOfRange {
                column: n,
                depth: self.depth,
            });
        }
        self.log.check_stage(stage)?;
        Ok(match self.log.mode() {
            LogMode::Coce => (0..self.window)
                .filter(|&u| self.log.member_unchecked(pair(u, n).expect("window fits"), stage))
                .collect(),
            LogMode::Ce | LogMode::Dce => self
                .log
                .touched()
                .filter(|&c| {
                    let (u, col) = unpair(c);
                    col == n && u < self.window && self.log.member_unchecked(c, stage)
                })
                .map(|c| unpair(c).0)
                .collect(),
        })
    }

    /// Every column at the horizon.
    pub fn columns(&self) -> Vec<Column> {
        self.columns_at(self.horizon()).expect("horizon is in range")
    }

    pub fn columns_at(&self, stage: u64) -> Result<Vec<Column>, EncodingError> {
        (0..self.depth).map(|n| self.column(n, stage)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pair_examples() {
        assert_eq!(pair(0, 0), Ok(0));
        assert_eq!(pair(1, 0), Ok(1));
        assert_eq!(pair(2, 3), Ok(18));
        assert_eq!(unpair(0), (0, 0));
        assert_eq!(unpair(18), (2, 3));
    }

    #[test]
    fn pair_overflow_is_reported() {
        assert_eq!(pair(u64::MAX, 1), Err(EncodingError::Overflow(u64::MAX, 1)));
        assert!(pair(1 << 32, 1 << 32).is_err());
        let (x, n) = unpair(u64::MAX);
        assert_eq!(pair(x, n), Ok(u64::MAX));
    }

    #[test]
    fn unpair_round_trips_first_million() {
        for c in 0..1_000_000u64 {
            let (x, n) = unpair(c);
            assert_eq!(pair(x, n).unwrap(), c);
        }
    }

    #[test]
    fn string_number_examples() {
        assert_eq!("000".parse::<BitString>().unwrap().to_number(), Ok(8));
        assert_eq!(BitString::empty().to_number(), Ok(1));
        assert_eq!("10".parse::<BitString>().unwrap().to_number(), Ok(6));
        assert_eq!(BitString::from_number(0), Err(EncodingError::ZeroHasNoString));
        assert_eq!(BitString::from_number(8).unwrap().to_string(), "000");
    }

    #[test]
    fn bitstring_order_matches_number_order() {
        let strings: Vec<BitString> = (1..200).map(|v| BitString::from_number(v).unwrap()).collect();
        assert!(strings.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn extensions_are_length_lexicographic() {
        let root: BitString = "1".parse().unwrap();
        let ext: Vec<String> = root.extensions_up_to(3).iter().map(ToString::to_string).collect();
        assert_eq!(ext, ["1", "10", "11", "100", "101", "110", "111"]);
    }

    #[test]
    fn log_rejects_corruptions() {
        let ev = |element, stage, polarity| MembershipEvent {
            element,
            stage,
            polarity,
        };
        use Polarity::*;
        // stage order
        assert!(MembershipEventLog::from_events(
            LogMode::Dce,
            10,
            [ev(1, 5, Insert), ev(1, 3, Remove)]
        )
        .is_err());
        // alternation
        assert!(MembershipEventLog::from_events(
            LogMode::Dce,
            10,
            [ev(1, 1, Insert), ev(1, 3, Insert)]
        )
        .is_err());
        assert!(MembershipEventLog::from_events(LogMode::Ce, 10, [ev(1, 1, Remove)]).is_err());
        assert!(MembershipEventLog::from_events(LogMode::Coce, 10, [ev(1, 1, Insert)]).is_err());
        assert!(MembershipEventLog::from_events(LogMode::Dce, 10, [ev(1, 1, Remove)]).is_err());
        assert!(MembershipEventLog::from_events(
            LogMode::Dce,
            10,
            [ev(1, 1, Insert), ev(1, 2, Remove), ev(1, 3, Insert)]
        )
        .is_err());
        assert!(matches!(
            MembershipEventLog::from_events(LogMode::Ce, 10, [ev(1, 11, Insert)]),
            Err(EncodingError::BeyondHorizon { .. })
        ));
    }

    #[test]
    fn queries_beyond_horizon_fail() {
        let log = MembershipEventLog::new(LogMode::Ce, 4);
        assert!(log.contains_at(0, 5).is_err());
        assert!(log.members_at(5, 10).is_err());
    }

    #[test]
    fn column_examples() {
        let mut fam = CodedFamily::new(LogMode::Ce, 3, 4, 100);
        fam.insert(5, 2, 1).unwrap();
        assert_eq!(fam.column(2, 3).unwrap(), Column::from([5]));
        assert_eq!(fam.column(2, 0).unwrap(), Column::new());
        assert_eq!(fam.column(1, 3).unwrap(), Column::new());
        assert!(matches!(
            fam.column(4, 0),
            Err(EncodingError::ColumnOutOfRange { .. })
        ));
        assert!(fam.column(0, 4).is_err());

        let empty = CodedFamily::new(LogMode::Ce, 0, 3, 50);
        assert!(empty.columns().iter().all(BTreeSet::is_empty));
        let full = CodedFamily::new(LogMode::Coce, 0, 2, 50);
        assert_eq!(full.column(1, 0).unwrap().len(), 50);
    }

    #[test]
    fn log_serde_revalidates() {
        let mut log = MembershipEventLog::new(LogMode::Dce, 9);
        log.insert(3, 1).unwrap();
        log.remove(3, 4).unwrap();
        let text = serde_json::to_string(&log).unwrap();
        let back: MembershipEventLog = serde_json::from_str(&text).unwrap();
        assert_eq!(back, log);
        let corrupt = text.replace("\"stage\":4", "\"stage\":0");
        assert!(serde_json::from_str::<MembershipEventLog>(&corrupt).is_err());
    }

    fn arb_log(mode: LogMode) -> impl Strategy<Value = MembershipEventLog> {
        prop::collection::vec((0u64..40, 0u64..30, 0u64..30), 0..60).prop_map(move |raw| {
            let mut log = MembershipEventLog::new(mode, 60);
            for (x, a, b) in raw {
                let (first, second) = (a.min(b), a.max(b) + 1);
                let _ = match mode {
                    LogMode::Ce => log.insert(x, first),
                    LogMode::Coce => log.remove(x, first),
                    LogMode::Dce => log.insert(x, first).and_then(|_| log.remove(x, second)),
                };
            }
            log
        })
    }

    proptest! {
        #[test]
        fn pair_is_bijective_and_dominates(x in 0u64..1 << 31, n in 0u64..1 << 31) {
            let c = pair(x, n).unwrap();
            prop_assert_eq!(unpair(c), (x, n));
            prop_assert!(c >= x.max(n));
        }

        #[test]
        fn number_string_round_trip(v in 1u64..u64::MAX) {
            let s = BitString::from_number(v).unwrap();
            prop_assert_eq!(s.to_number().unwrap(), v);
        }

        #[test]
        fn ce_logs_grow(log in arb_log(LogMode::Ce), s in 0u64..60, d in 0u64..60) {
            let t = (s + d).min(60);
            let early = log.members_at(s, 50).unwrap();
            let late = log.members_at(t, 50).unwrap();
            prop_assert!(early.is_subset(&late));
        }

        #[test]
        fn coce_logs_shrink(log in arb_log(LogMode::Coce), s in 0u64..60, d in 0u64..60) {
            let t = (s + d).min(60);
            let early = log.members_at(s, 50).unwrap();
            let late = log.members_at(t, 50).unwrap();
            prop_assert!(late.is_subset(&early));
        }

        #[test]
        fn dce_logs_alternate_at_most_once(log in arb_log(LogMode::Dce)) {
            for x in log.touched().collect::<Vec<_>>() {
                let h = log.history_of(x);
                prop_assert!(h.len() <= 2);
                prop_assert_eq!(h[0].1, Polarity::Insert);
            }
        }
    }
}
