//! JSON universe scripts.

use std::collections::BTreeMap;

use serde::Deserialize;

use super::{
    CeEnumeration, DominatingOracle, Insertion, JumpBit, JumpScenario, LimitBehavior,
    MachineProgram, MachineSchedule, PatternSchedule, Schedule, TableSchedule, Universe,
    UniverseError,
};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UniverseScript {
    indices: Vec<IndexScript>,
    #[serde(default)]
    jump: Option<JumpScript>,
    #[serde(default)]
    dominating: Option<DominatingOracle>,
    #[serde(default)]
    ce_set: Option<CeScript>,
    #[serde(default)]
    fuel_per_stage: Option<u64>,
    #[serde(default)]
    limit_stage: Option<u64>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum IndexScript {
    Table {
        e: u64,
        entries: Vec<EntryScript>,
        #[serde(default, rename = "default")]
        _default: DefaultScript,
    },
    Machine {
        e: u64,
        program: String,
        #[serde(default)]
        limit: Option<LimitScript>,
    },
    Pattern {
        e: u64,
        pattern: Vec<u64>,
        #[serde(default)]
        prefix: Vec<u64>,
        #[serde(default)]
        delay: Option<DelayScript>,
        #[serde(default)]
        diverge_at: Vec<u64>,
    },
}

impl IndexScript {
    fn e(&self) -> u64 {
        match self {
            IndexScript::Table { e, .. }
            | IndexScript::Machine { e, .. }
            | IndexScript::Pattern { e, .. } => *e,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryScript {
    x: u64,
    value: u64,
    stage: u64,
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "lowercase")]
enum DefaultScript {
    #[default]
    Divergent,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum LimitScript {
    DivergentAt(u64),
    Pattern(Vec<u64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DelayScript {
    a: u64,
    b: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JumpScript {
    bits: Vec<JumpBit>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CeScript {
    insertions: Vec<Insertion>,
}

pub(super) fn load(text: &str) -> Result<Universe, UniverseError> {
    let script: UniverseScript =
        serde_json::from_str(text).map_err(|err| UniverseError::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        })?;

    let mut by_index = BTreeMap::new();
    for idx in script.indices {
        let e = idx.e();
        if by_index.insert(e, idx).is_some() {
            return Err(UniverseError::DuplicateIndex(e));
        }
    }
    let len = by_index.len() as u64;
    if let Some(missing) = (0..len).find(|e| !by_index.contains_key(e)) {
        return Err(UniverseError::MissingIndex { missing, len });
    }

    let mut indices = Vec::with_capacity(by_index.len());
    for (e, idx) in by_index {
        indices.push(build_schedule(e, idx)?);
    }
    let mut u = Universe::new(indices);
    if let Some(j) = script.jump {
        u = u.with_jump(JumpScenario::new(j.bits)?);
    }
    if let Some(h) = script.dominating {
        u = u.with_dominating(h);
    }
    if let Some(a) = script.ce_set {
        u = u.with_ce_set(CeEnumeration::new(&a.insertions)?);
    }
    if let Some(f) = script.fuel_per_stage {
        u = u.with_fuel_per_stage(f);
    }
    if let Some(s) = script.limit_stage {
        u = u.with_limit_stage(s);
    }
    Ok(u)
}

fn build_schedule(e: u64, idx: IndexScript) -> Result<Schedule, UniverseError> {
    Ok(match idx {
        IndexScript::Table { entries, .. } => {
            let triples: Vec<_> = entries.iter().map(|t| (t.x, t.value, t.stage)).collect();
            Schedule::Table(TableSchedule::new(e, &triples)?)
        }
        IndexScript::Machine { program, limit, .. } => {
            let program: MachineProgram = program
                .parse()
                .map_err(|source| UniverseError::Program { e, source })?;
            let limit = match limit {
                None => LimitBehavior::Undeclared,
                Some(LimitScript::DivergentAt(n)) => LimitBehavior::Partial { domain_len: n },
                Some(LimitScript::Pattern(p)) if p.is_empty() => {
                    return Err(UniverseError::BadSchedule {
                        e,
                        reason: "declared limit pattern is empty".into(),
                    })
                }
                Some(LimitScript::Pattern(p)) => LimitBehavior::Total {
                    prefix: Vec::new(),
                    period: p.iter().map(|v| (v % 2) as u8).collect(),
                },
            };
            Schedule::Machine(MachineSchedule::new(program, limit))
        }
        IndexScript::Pattern {
            pattern,
            prefix,
            delay,
            diverge_at,
            ..
        } => {
            if pattern.is_empty() {
                return Err(UniverseError::BadSchedule {
                    e,
                    reason: "pattern is empty".into(),
                });
            }
            let (a, b) = delay.map_or((0, 0), |d| (d.a, d.b));
            Schedule::Pattern(
                PatternSchedule::new(pattern)
                    .with_prefix(prefix)
                    .with_delay(a, b)
                    .diverging_at(diverge_at),
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::super::Phi;
    use super::*;

    #[test]
    fn loads_the_documented_shape() {
        let u = Universe::from_json(
            r#"{
              "indices": [
                {"e": 0, "kind": "table", "entries": [{"x": 0, "value": 1, "stage": 0}], "default": "divergent"},
                {"e": 1, "kind": "machine", "program": "INC 1\nHALT"},
                {"e": 2, "kind": "pattern", "pattern": [0, 1], "delay": {"a": 1, "b": 0}, "diverge_at": [3]}
              ],
              "jump": {"bits": [{"initial": 0, "flips": [2], "settling": 5}]},
              "dominating": {"kind": "affine", "a": 2, "b": 5}
            }"#,
        )
        .unwrap();
        assert_eq!(u.len(), 3);
        assert_eq!(u.phi_at(0, 0, 0), Ok(Phi::Converged(1)));
        assert_eq!(u.phi_at(0, 1, 99), Ok(Phi::Pending));
        assert_eq!(u.phi_at(1, 9, 1), Ok(Phi::Converged(1)));
        assert_eq!(u.phi_at(2, 3, 1000), Ok(Phi::Pending));
        assert_eq!(u.dominating().unwrap().value(3), 11);
        assert_eq!(u.jump().unwrap().jump_at(1, 7).to_string(), "1");
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = Universe::from_json("{\n  \"indices\": [\n    {\"e\": 0,, }\n  ]\n}").unwrap_err();
        assert!(matches!(err, UniverseError::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        for text in [
            r#"{"indices": [], "extra": 1}"#,
            r#"{"indices": [{"e": 0, "kind": "pattern", "pattern": [0], "colour": 2}]}"#,
            r#"{"indices": [{"e": 0, "kind": "table", "entries": [{"x": 0, "value": 1, "stage": 0, "y": 1}]}]}"#,
        ] {
            assert!(
                matches!(Universe::from_json(text), Err(UniverseError::Parse { .. })),
                "{text}"
            );
        }
    }

    #[test]
    fn structural_errors() {
        let dup = r#"{"indices": [{"e": 0, "kind": "pattern", "pattern": [0]}, {"e": 0, "kind": "pattern", "pattern": [1]}]}"#;
        assert_eq!(Universe::from_json(dup), Err(UniverseError::DuplicateIndex(0)));
        let gap = r#"{"indices": [{"e": 1, "kind": "pattern", "pattern": [0]}]}"#;
        assert!(matches!(
            Universe::from_json(gap),
            Err(UniverseError::MissingIndex { missing: 0, .. })
        ));
        let twice = r#"{"indices": [{"e": 0, "kind": "table", "entries": [{"x": 2, "value": 1, "stage": 0}, {"x": 2, "value": 0, "stage": 4}]}]}"#;
        assert_eq!(
            Universe::from_json(twice),
            Err(UniverseError::NonMonotone { e: 0, x: 2 })
        );
        let bad_prog = r#"{"indices": [{"e": 0, "kind": "machine", "program": "DECJZ 0 7"}]}"#;
        assert!(matches!(
            Universe::from_json(bad_prog),
            Err(UniverseError::Program { e: 0, .. })
        ));
    }
}
