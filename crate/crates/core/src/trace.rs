//! Line-delimited JSON run traces: a header line, then one record per line.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::encoding::{unpair, CodedFamily, EncodingError, LogMode, Polarity};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace is empty")]
    Empty,
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("record {index}: malformed family event")]
    BadEvent { index: usize },
    #[error("record {index}: {source}")]
    Replay {
        index: usize,
        source: EncodingError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub construction: String,
    pub stages: u64,
    pub depth: u64,
    pub window: u64,
    #[serde(default)]
    pub params: BTreeMap<String, u64>,
}

impl TraceHeader {
    pub fn new(construction: &str, stages: u64, depth: u64, window: u64) -> Self {
        TraceHeader {
            construction: construction.to_string(),
            stages,
            depth,
            window,
            params: BTreeMap::new(),
        }
    }

    pub fn param(mut self, key: &str, value: u64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub stage: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substage: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub payload: Value,
}

impl TraceRecord {
    pub fn new(stage: u64, kind: &str, payload: Value) -> Self {
        TraceRecord {
            stage,
            substage: None,
            node: None,
            kind: kind.to_string(),
            payload,
        }
    }

    pub fn at_node(mut self, substage: u64, node: &str) -> Self {
        self.substage = Some(substage);
        self.node = Some(node.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRecord {
    pub header: TraceHeader,
    pub records: Vec<TraceRecord>,
}

impl RunRecord {
    pub fn new(header: TraceHeader) -> Self {
        RunRecord {
            header,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    /// Appends the events of `fam` as `insert`/`remove` records tagged with
    /// `label`.
    pub fn push_family(&mut self, label: &str, fam: &CodedFamily) {
        for ev in fam.log().events() {
            let (u, n) = unpair(ev.element);
            let kind = match ev.polarity {
                Polarity::Insert => "insert",
                Polarity::Remove => "remove",
            };
            self.push(TraceRecord::new(
                ev.stage,
                kind,
                json!({ "family": label, "n": n, "u": u }),
            ));
        }
    }

    /// Rebuilds the family tagged `label` from its `insert`/`remove` records.
    pub fn replay_family(
        &self,
        label: &str,
        mode: LogMode,
        depth: u64,
        window: u64,
    ) -> Result<CodedFamily, TraceError> {
        let mut fam = CodedFamily::new(mode, self.header.stages, depth, window);
        for (i, r) in self.records.iter().enumerate() {
            let index = i + 1;
            if r.kind != "insert" && r.kind != "remove" {
                continue;
            }
            if r.payload.get("family").and_then(Value::as_str) != Some(label) {
                continue;
            }
            let field = |k: &str| r.payload.get(k).and_then(Value::as_u64);
            let (Some(n), Some(u)) = (field("n"), field("u")) else {
                return Err(TraceError::BadEvent { index });
            };
            let done = if r.kind == "insert" {
                fam.insert(u, n, r.stage)
            } else {
                fam.remove(u, n, r.stage)
            };
            done.map_err(|source| TraceError::Replay { index, source })?;
        }
        Ok(fam)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TraceError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(TraceError::Empty)?;
        let header = serde_json::from_str(first)
            .map_err(|source| TraceError::Json { line: 1, source })?;
        let records = lines
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|source| TraceError::Json {
                    line: i + 1,
                    source,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(RunRecord { header, records })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Comparison {
    Pass,
    /// Line index (0 is the header) of the first differing record.
    FirstDivergence { index: usize },
}

/// Record-by-record byte comparison.
pub fn compare_golden(trace: &str, golden: &str) -> Comparison {
    let mut a = trace.lines();
    let mut b = golden.lines();
    let mut index = 0;
    loop {
        match (a.next(), b.next()) {
            (None, None) => return Comparison::Pass,
            (x, y) if x == y => index += 1,
            _ => return Comparison::FirstDivergence { index },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunRecord {
        let mut r = RunRecord::new(TraceHeader::new("demo", 3, 2, 10).param("seed", 7));
        r.push(TraceRecord::new(0, "start", Value::Null));
        r.push(TraceRecord::new(1, "case", json!({"case": 2, "x": 5})).at_node(0, "01"));
        let mut fam = CodedFamily::new(LogMode::Coce, 3, 2, 10);
        fam.remove(4, 1, 2).unwrap();
        r.push_family("F", &fam);
        r
    }

    #[test]
    fn round_trip() {
        let r = sample();
        let text = r.to_jsonl();
        assert_eq!(RunRecord::from_jsonl(&text).unwrap(), r);
        assert_eq!(RunRecord::from_jsonl(&text).unwrap().to_jsonl(), text);
        assert!(text.lines().nth(2).unwrap().starts_with(r#"{"stage":1,"substage":0,"node":"01","kind":"case""#));
    }

    #[test]
    fn golden_comparison() {
        let text = sample().to_jsonl();
        assert_eq!(compare_golden(&text, &text), Comparison::Pass);
        let altered = text.replacen("\"x\":5", "\"x\":6", 1);
        assert_eq!(compare_golden(&text, &altered), Comparison::FirstDivergence { index: 2 });
        let shorter: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
        assert_eq!(compare_golden(&text, &shorter), Comparison::FirstDivergence { index: 2 });
    }

    #[test]
    fn replay_rebuilds_family() {
        let r = sample();
        let fam = r.replay_family("F", LogMode::Coce, 2, 10).unwrap();
        assert_eq!(fam.columns()[1], (0..10).filter(|&x| x != 4).collect());
        assert_eq!(fam.columns()[0], (0..10).collect());
        let mut bad = r.clone();
        bad.records.push(TraceRecord::new(3, "remove", json!({ "family": "F", "n": 1 })));
        assert!(matches!(bad.replay_family("F", LogMode::Coce, 2, 10), Err(TraceError::BadEvent { index: 4 })));
    }

    #[test]
    fn bad_lines_report_position() {
        let err = RunRecord::from_jsonl("{\"construction\":\"x\",\"stages\":1,\"depth\":0,\"window\":0}\n{oops}\n")
            .unwrap_err();
        assert!(matches!(err, TraceError::Json { line: 2, .. }));
        assert!(matches!(RunRecord::from_jsonl(""), Err(TraceError::Empty)));
    }
}
