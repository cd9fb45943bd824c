use std::path::PathBuf;

use towerlab::encoding::{CodedFamily, LogMode};
use towerlab::madce::build_mad;
use towerlab::oracle_constructions::{build_uf_base, UfBaseParams};
use towerlab::trace::{compare_golden, Comparison, RunRecord};
use towerlab::treebase::{build_coce_base, CoceParams};
use towerlab::universe::Universe;

fn universe(name: &str) -> Universe {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/universes").join(name);
    Universe::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn round_trip(trace: &RunRecord, label: &str, mode: LogMode, family: &CodedFamily) {
    let text = trace.to_jsonl();
    let back = RunRecord::from_jsonl(&text).unwrap();
    assert_eq!(compare_golden(&back.to_jsonl(), &text), Comparison::Pass);
    let h = &back.header;
    let fam = back.replay_family(label, mode, family.depth(), family.window()).unwrap();
    assert_eq!(h.stages, trace.header.stages);
    assert_eq!(fam.columns(), family.columns());
    assert_eq!(fam.log().events(), family.log().events());
}

#[test]
fn uf_base_trace_replays() {
    let u = universe("tower-base.json");
    let h = u.dominating().unwrap().clone();
    let run = build_uf_base(&u, &h, UfBaseParams { stages: 500, depth: 4, window: 500 });
    round_trip(&run.trace(), "F", LogMode::Ce, &run.family);
}

#[test]
fn mad_trace_replays() {
    let u = universe("mad-permit.json");
    let run = build_mad(&u, u.ce_set().unwrap(), 300);
    round_trip(&run.trace(), "H", LogMode::Ce, &run.h);
}

#[test]
fn coce_trace_replays() {
    let u = universe("coce-pairs.json");
    let run = build_coce_base(&u, CoceParams { stages: 400, depth: 4, window: 400, snapshot_every: None });
    round_trip(&run.trace(), "F", LogMode::Coce, &run.family);
}

#[test]
fn truncated_trace_diverges_at_the_cut() {
    let u = universe("coce-pairs.json");
    let run = build_coce_base(&u, CoceParams { stages: 200, depth: 3, window: 200, snapshot_every: None });
    let text = run.trace().to_jsonl();
    let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
    assert_eq!(compare_golden(&cut, &text), Comparison::FirstDivergence { index: 5 });
}
