use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use towerlab::checker::{
    claim45_check, independence_check, tower_check, uf_decision_check, CheckReport, TauDecision,
    UfDecision, Verdict, Witness,
};
use towerlab::encoding::{pair, CodedFamily, Column, LogMode, Polarity};
use towerlab::functionals::{cp, jump_tower, recover_jump, FunctionalError};
use towerlab::madce::{build_mad, MadRun};
use towerlab::oracle_constructions::{
    build_indep_family, build_uf_base, f_sigma_of, leftmost_path, Alphabet, IndepParams,
    IndepRun, LeftmostPath, OracleError, UfBaseParams,
};
use towerlab::trace::{RunRecord, TraceHeader};
use towerlab::treebase::{
    apparent_true_path, build_coce_base, claim56_check, streaming_audit, CoceParams, Stability,
};
use towerlab::universe::{DominatingOracle, JumpScenario, Universe};

use crate::scenario::{Construction, Params};

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("{0} needs a universe with {1}")]
    Missing(Construction, &'static str),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Trace(#[from] towerlab::trace::TraceError),
    #[error("trace header names unknown construction {0:?}")]
    UnknownConstruction(String),
}

pub struct Outcome {
    pub trace: RunRecord,
    pub reports: Vec<CheckReport>,
    pub oracle: Option<OracleReport>,
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub path: String,
    pub streams: Vec<Value>,
}

fn report(check: &str, p: &Params, extra: &[(&str, u64)]) -> CheckReport {
    let mut params = vec![("horizon", p.horizon), ("witness", p.witness)];
    params.extend_from_slice(extra);
    CheckReport::new(check, &params)
}

fn cols(f: &CodedFamily, horizon: u64) -> Vec<Column> {
    f.columns()
        .into_iter()
        .map(|c| c.range(..horizon).copied().collect())
        .collect()
}

fn dominating(u: &Universe, c: Construction) -> Result<DominatingOracle, SuiteError> {
    u.dominating()
        .cloned()
        .ok_or(SuiteError::Missing(c, "a dominating function"))
}

fn jump(u: &Universe) -> Result<&JumpScenario, SuiteError> {
    u.jump()
        .ok_or(SuiteError::Missing(Construction::JumpTower, "a jump script"))
}

pub fn run(c: Construction, u: &Universe, p: &Params) -> Result<Outcome, SuiteError> {
    match c {
        Construction::JumpTower => run_jump(u, p),
        Construction::UfBase => run_uf(u, p),
        Construction::IndepFamily => run_indep(u, p),
        Construction::MadCe => run_mad(u, p),
        Construction::CoceBase => run_coce(u, p),
    }
}

/// Family-level checks on a family read back from a trace.
pub fn check_trace(trace: &RunRecord, u: &Universe, p: &Params) -> Result<Vec<CheckReport>, SuiteError> {
    let h = &trace.header;
    let c: Construction = h
        .construction
        .parse()
        .map_err(|_| SuiteError::UnknownConstruction(h.construction.clone()))?;
    let (label, mode) = match c {
        Construction::JumpTower => ("G", LogMode::Ce),
        Construction::MadCe => ("H", LogMode::Ce),
        Construction::CoceBase => ("F", LogMode::Coce),
        _ => ("F", LogMode::Ce),
    };
    let fam = trace.replay_family(label, mode, h.depth, h.window)?;
    let covered = h.params.get("covered").copied().unwrap_or(h.window);
    let p = Params {
        horizon: p.horizon.min(covered),
        ..*p
    };
    Ok(match c {
        Construction::JumpTower => vec![jump_nesting(&fam, &p)],
        Construction::UfBase => {
            let mut r = vec![tower_check(&fam, fam.depth() - 1, p.horizon, p.witness)];
            r.push(uf_decisions(&fam, u, &p));
            r
        }
        Construction::IndepFamily => {
            let depth = fam.depth().min(p.depth);
            vec![
                independence_check(&fam, depth, p.horizon, p.witness),
                free_generation(&fam, u, depth, p.horizon),
            ]
        }
        Construction::MadCe => vec![mad_intersections(&fam, &p)],
        Construction::CoceBase => vec![
            coce_polarity(&fam),
            tower_check(&fam, fam.depth() - 1, p.horizon, p.witness),
            uf_decisions(&fam, u, &p),
        ],
    })
}

fn oracle_path(u: &Universe, depth: usize) -> Result<LeftmostPath, SuiteError> {
    Ok(leftmost_path(u, depth, Alphabet::Ternary)?)
}

pub fn oracle(u: &Universe, depth: usize, horizon: u64) -> Result<OracleReport, SuiteError> {
    Ok(describe(oracle_path(u, depth)?, horizon))
}

fn describe(g: LeftmostPath, horizon: u64) -> OracleReport {
    let streams = g
        .streams
        .iter()
        .enumerate()
        .map(|(e, s)| {
            let (num, den) = s.density();
            let first: Vec<u64> = s.members_below(horizon.min(256)).into_iter().take(16).collect();
            json!({
                "alpha": &g.path[..e],
                "density": [num, den],
                "period": s.period_len(),
                "first": first,
                "start": s.start(),
            })
        })
        .collect();
    OracleReport {
        path: g.path,
        streams,
    }
}

fn jump_nesting(g: &CodedFamily, p: &Params) -> CheckReport {
    let mut r = report("jump-nesting", p, &[("depth", g.depth())]);
    let cols = cols(g, p.horizon);
    for n in 0..cols.len().saturating_sub(1) {
        let escapees: Vec<u64> = cols[n + 1].difference(&cols[n]).copied().collect();
        if !escapees.is_empty() {
            r.fail(Witness::new("escapees", vec![n as u64 + 1, n as u64], escapees, None));
        }
        let diff = cols[n].difference(&cols[n + 1]).count() as u64;
        if diff < p.witness {
            r.fail(Witness::new("thin-difference", vec![n as u64, n as u64 + 1], vec![diff], None));
        }
    }
    r
}

fn run_jump(u: &Universe, p: &Params) -> Result<Outcome, SuiteError> {
    let j = jump(u)?;
    let g = jump_tower(j, p.depth as usize, p.max_len as usize);
    let mut trace = RunRecord::new(
        TraceHeader::new("jump-tower", 0, p.depth, g.window()).param("max_len", p.max_len),
    );
    trace.push_family("G", &g);
    let params = Params {
        horizon: p.horizon.min(g.window()),
        ..*p
    };
    let mut recovery = report("jump-recovery", &params, &[("depth", p.depth)]);
    let cols = cols(&g, params.horizon);
    for k in 0..p.depth.saturating_sub(1) as usize {
        let got = recover_jump(&cols[k + 1], k, p.witness as usize);
        let want = j.limit_bit(k);
        let w = Witness::new(
            &format!("bit:{}", got.map_or("none".to_string(), |b| (b as u8).to_string())),
            vec![k as u64],
            vec![want as u64],
            None,
        );
        if got == Some(want) {
            recovery.note(w);
        } else {
            recovery.fail(w);
        }
    }
    Ok(Outcome {
        trace,
        reports: vec![jump_nesting(&g, &params), recovery],
        oracle: None,
    })
}

fn uf_decisions(f: &CodedFamily, u: &Universe, p: &Params) -> CheckReport {
    let mut r = report("uf-decisions", p, &[("depth", f.depth())]);
    for e in u.total_indices() {
        if e + 1 >= f.depth() {
            continue;
        }
        match uf_decision_check(f, u, e, f.depth() - 1, p.horizon) {
            UfDecision::Decided {
                side,
                n,
                threshold,
                tail,
            } => r.note(Witness::new(
                &format!("decided:{side}"),
                vec![e, n],
                vec![tail],
                Some(threshold),
            )),
            UfDecision::Undecided => r.fail(Witness::new("undecided", vec![e], vec![], None)),
        }
    }
    r
}

/// `F_e` against `S_{g↾e}` from the exact oracle, for `e < depth`.
fn stabilization(f: &CodedFamily, g: &LeftmostPath, p: &Params) -> CheckReport {
    let mut r = report("stabilization", p, &[("depth", f.depth())]);
    for (e, col) in cols(f, p.horizon).iter().enumerate() {
        let target = g.streams[e].members_below(p.horizon);
        let m = col.symmetric_difference(&target).max().map_or(0, |&x| x + 1);
        let w = Witness::new(&format!("alpha:{}", &g.path[..e]), vec![e as u64], vec![], Some(m));
        if 2 * m <= p.horizon {
            r.note(w);
        } else {
            r.fail(w);
        }
    }
    r
}

fn run_uf(u: &Universe, p: &Params) -> Result<Outcome, SuiteError> {
    let h = dominating(u, Construction::UfBase)?;
    let run = build_uf_base(
        u,
        &h,
        UfBaseParams {
            stages: p.stages,
            depth: p.depth,
            window: p.window,
        },
    );
    let mut reports = vec![
        tower_check(&run.family, p.depth - 1, p.horizon, p.witness),
        uf_decisions(&run.family, u, p),
    ];
    let mut mono = report("gamma-monotone", p, &[("stages", p.stages)]);
    for (e, a) in run.a.iter().enumerate() {
        if let Some(s) = (1..a.len()).find(|&s| a[s] < a[s - 1]) {
            mono.fail(Witness::new("decrease", vec![e as u64, s as u64], vec![a[s - 1], a[s]], None));
        }
    }
    reports.push(mono);
    let mut oracle = None;
    if p.oracle {
        let g = oracle_path(u, p.depth as usize - 1)?;
        reports.push(stabilization(&run.family, &g, p));
        oracle = Some(describe(g, p.horizon));
    }
    Ok(Outcome {
        trace: run.trace(),
        reports,
        oracle,
    })
}

/// Every `F_τ` on the window is decided against `V_{e,0}`.
fn free_generation(f: &CodedFamily, u: &Universe, depth: u64, horizon: u64) -> CheckReport {
    let mut r = CheckReport::new("free-generation", &[("depth", depth), ("horizon", horizon)]);
    for e in u.total_indices().into_iter().filter(|&e| e < depth) {
        for (tau, d) in claim45_check(f, u, e, horizon) {
            let bits: Vec<u64> = tau.bytes().map(|b| (b - b'0') as u64).collect();
            match d {
                TauDecision::Inside { threshold } => {
                    r.note(Witness::new(&format!("inside:{tau}"), vec![e], bits, Some(threshold)))
                }
                TauDecision::Outside { threshold } => {
                    r.note(Witness::new(&format!("outside:{tau}"), vec![e], bits, Some(threshold)))
                }
                TauDecision::Undecided => {
                    r.fail(Witness::new(&format!("undecided:{tau}"), vec![e], bits, None))
                }
            }
        }
    }
    r
}

/// Every interval holds two elements of each `F_σ`, `|σ| = e`.
fn interval_condition(run: &IndepRun) -> CheckReport {
    let full = run.params.horizon;
    let mut r = CheckReport::new("interval-condition", &[("covered", run.covered()), ("inputs", full)]);
    let wide = CodedFamily::from_log(run.family.log().clone(), run.family.depth(), full);
    let cols = cols(&wide, full);
    for ph in &run.phases {
        let e = ph.e as usize;
        let classes: Vec<Column> = (0..1usize << e)
            .map(|code| {
                let sigma = (0..e).map(|i| code >> i & 1 == 1).collect();
                f_sigma_of(&cols, &towerlab::encoding::BitString::from_bits(sigma), full)
            })
            .collect();
        for iv in &ph.intervals {
            if let Some(i) = classes
                .iter()
                .position(|c| c.range(iv.start..iv.end).count() < 2)
            {
                r.fail(Witness::new("short-interval", vec![ph.e, i as u64], vec![iv.start, iv.end], None));
            }
        }
    }
    r
}

fn run_indep(u: &Universe, p: &Params) -> Result<Outcome, SuiteError> {
    let h = dominating(u, Construction::IndepFamily)?;
    let run = build_indep_family(
        u,
        &h,
        IndepParams {
            horizon: p.window,
            depth: p.depth,
        },
    );
    let horizon = p.horizon.min(run.covered());
    let depth = run.family.depth();
    let mut reports = vec![
        independence_check(&run.family, depth, horizon, p.witness),
        free_generation(&run.family, u, depth, horizon),
        interval_condition(&run),
    ];
    if let Some(e) = run.stalled {
        let mut r = CheckReport::new("phases", &[("depth", p.depth)]);
        r.fail(Witness::new("stalled", vec![e], vec![], None));
        reports.push(r);
    }
    Ok(Outcome {
        trace: run.trace(),
        reports,
        oracle: None,
    })
}

fn mad_intersections(h: &CodedFamily, p: &Params) -> CheckReport {
    let top = (2 * p.depth).min(h.depth());
    let mut r = report("mad-intersections", p, &[("columns", top)]);
    let cols = cols(h, p.horizon);
    for m in 0..top as usize {
        for e in 0..m {
            let common: Vec<u64> = cols[e].intersection(&cols[m]).copied().collect();
            if common.len() > m {
                r.fail(Witness::new("intersection", vec![e as u64, m as u64], common, None));
            }
        }
    }
    r
}

fn mad_requirements(run: &MadRun, u: &Universe, p: &Params) -> CheckReport {
    let mut r = report("mad-requirements", p, &[("stages", p.stages)]);
    let a = u.ce_set().expect("checked by the caller");
    let mut seen = BTreeMap::new();
    for act in &run.actions {
        if seen.insert(act.n, act.stage).is_some() {
            r.fail(Witness::new("acted-twice", vec![act.n], vec![act.stage], None));
        }
        let entered = a.contains_at(act.permit, act.stage)
            && (act.stage == 0 || !a.contains_at(act.permit, act.stage - 1));
        if !entered || act.permit >= act.x || pair(act.e, act.k).ok() != Some(act.n) {
            r.fail(Witness::new("bad-permit", vec![act.n], vec![act.x, act.permit, act.stage], None));
        }
    }
    let mut union: Vec<u64> = run.actions.iter().map(|a| a.x).collect();
    union.sort_unstable();
    union.dedup();
    for n in 1..=p.horizon / 2 {
        let below = union.partition_point(|&x| x < 2 * n) as u64;
        if below > n {
            r.fail(Witness::new("dense", vec![n], vec![below], None));
            break;
        }
    }
    r
}

fn run_mad(u: &Universe, p: &Params) -> Result<Outcome, SuiteError> {
    let a = u
        .ce_set()
        .ok_or(SuiteError::Missing(Construction::MadCe, "a c.e. set enumeration"))?;
    let run = build_mad(u, a, p.stages);
    let g = cp(&run.f_family(p.depth))?;
    let mut tower = tower_check(&g, p.depth - 1, p.horizon, p.witness);
    tower.check = "composed-tower".into();
    Ok(Outcome {
        trace: run.trace(),
        reports: vec![
            mad_requirements(&run, u, p),
            mad_intersections(&run.h, p),
            tower,
        ],
        oracle: None,
    })
}

fn coce_polarity(f: &CodedFamily) -> CheckReport {
    let mut r = CheckReport::new("removal-only", &[("depth", f.depth())]);
    for ev in f.log().events() {
        let (x, n) = towerlab::encoding::unpair(ev.element);
        if ev.polarity != Polarity::Remove || n == 0 {
            r.fail(Witness::new("event", vec![n], vec![x, ev.stage], None));
        }
    }
    r
}

fn run_coce(u: &Universe, p: &Params) -> Result<Outcome, SuiteError> {
    let run = build_coce_base(
        u,
        CoceParams {
            stages: p.stages,
            depth: p.depth,
            window: p.window,
            snapshot_every: Some(p.audit_every),
        },
    );
    let mut audit = CheckReport::new("streaming-audit", &[("every", p.audit_every), ("stages", p.stages)]);
    for &s in run.snapshots.keys() {
        for v in streaming_audit(&run, s).unwrap_or_default() {
            audit.fail(Witness::new(
                &format!("property:{}:{}", v.property, v.node),
                vec![v.stage],
                v.element.into_iter().collect(),
                None,
            ));
        }
    }
    let mut reports = vec![coce_polarity(&run.family), audit];
    let mut diffs = report("difference-counts", p, &[("depth", p.depth)]);
    let cols = cols(&run.family, p.horizon);
    for e in 0..cols.len().saturating_sub(1) {
        let n = cols[e].difference(&cols[e + 1]).count() as u64;
        let w = Witness::new("difference", vec![e as u64], vec![n], None);
        if n >= p.witness {
            diffs.note(w);
        } else {
            diffs.fail(w);
        }
    }
    reports.push(diffs);
    reports.push(uf_decisions(&run.family, u, p));
    let mut oracle = None;
    if p.oracle {
        let g = oracle_path(u, p.depth as usize - 1)?;
        let mut r = report("claim56", p, &[("depth", p.depth)]);
        for (e, st) in claim56_check(&run, &g.path, p.horizon) {
            match st {
                Stability::Stable { threshold } => {
                    r.note(Witness::new("stable", vec![e as u64], vec![], Some(threshold)))
                }
                Stability::Unstable => r.fail(Witness::new("unstable", vec![e as u64], vec![], None)),
            }
        }
        let apparent = apparent_true_path(&run.deltas, g.path.len(), p.min_visits)
            .unwrap_or_else(|err| format!("error: {err}"));
        r.note(Witness::new(&format!("paths:{}:{}", g.path, apparent), vec![], vec![], None));
        reports.push(r);
        oracle = Some(describe(g, p.horizon));
    }
    Ok(Outcome {
        trace: run.trace(),
        reports,
        oracle,
    })
}

pub fn overall(reports: &[CheckReport]) -> Verdict {
    if reports.iter().all(CheckReport::passed) {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

pub fn summary_line(r: &CheckReport) -> String {
    let params: Vec<String> = r.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let verdict = match r.verdict {
        Verdict::Pass => "pass",
        Verdict::Fail => "FAIL",
        Verdict::Inconclusive => "inconclusive",
    };
    format!("{} [{}]: {verdict}", r.check, params.join(" "))
}
