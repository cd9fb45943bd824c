use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use towerlab::universe::{
    CeEnumeration, DominatingOracle, Insertion, JumpBit, JumpScenario, PatternSchedule, Schedule,
    Universe, UniverseError,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Universe {
        path: PathBuf,
        source: UniverseError,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    JumpTower,
    UfBase,
    IndepFamily,
    MadCe,
    CoceBase,
}

impl Construction {
    pub const ALL: [Construction; 5] = [
        Construction::JumpTower,
        Construction::UfBase,
        Construction::IndepFamily,
        Construction::MadCe,
        Construction::CoceBase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Construction::JumpTower => "jump-tower",
            Construction::UfBase => "uf-base",
            Construction::IndepFamily => "indep-family",
            Construction::MadCe => "mad-ce",
            Construction::CoceBase => "coce-base",
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Construction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Construction::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown construction {s:?}"))
    }
}

/// A scenario file. Paths are relative to the file.
#[derive(Debug, Clone, PartialEq, Eq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub universe: Option<PathBuf>,
    pub construction: Option<Construction>,
    pub stages: Option<u64>,
    pub depth: Option<u64>,
    pub window: Option<u64>,
    pub horizon: Option<u64>,
    pub witness: Option<u64>,
    pub min_visits: Option<u64>,
    pub max_len: Option<u64>,
    pub audit_every: Option<u64>,
    pub oracle: Option<bool>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub construction: Option<Construction>,
    pub universe: Option<PathBuf>,
    pub stages: Option<u64>,
    pub depth: Option<u64>,
    pub horizon: Option<u64>,
    pub witness: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Params {
    pub stages: u64,
    pub depth: u64,
    pub window: u64,
    pub horizon: u64,
    pub witness: u64,
    pub min_visits: u64,
    pub max_len: u64,
    pub audit_every: u64,
    pub oracle: bool,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub construction: Construction,
    pub universe_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub params: Params,
}

pub fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_file(path: &Path) -> Result<ScenarioFile, ScenarioError> {
    let text = read(path)?;
    let mut file: ScenarioFile =
        serde_json::from_str(&text).map_err(|err| ScenarioError::Parse {
            path: path.to_path_buf(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        })?;
    if let Some(u) = &file.universe {
        if u.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            file.universe = Some(base.join(u));
        }
    }
    Ok(file)
}

impl Scenario {
    /// Merges the file and the overrides, fills defaults and validates.
    pub fn resolve(file: ScenarioFile, over: Overrides) -> Result<Self, ScenarioError> {
        let construction = over
            .construction
            .or(file.construction)
            .ok_or_else(|| ScenarioError::Invalid("no construction given".into()))?;
        let universe_path = over.universe.or(file.universe);
        if universe_path.is_none() && over.seed.is_none() {
            return Err(ScenarioError::Invalid(
                "no universe given (use --universe or --seed)".into(),
            ));
        }
        let stages = over.stages.or(file.stages).unwrap_or(1000);
        let depth = over.depth.or(file.depth).unwrap_or(match construction {
            Construction::JumpTower => 9,
            _ => 4,
        });
        let max_len = file.max_len.unwrap_or(16);
        let window = file.window.unwrap_or(match construction {
            Construction::JumpTower => 1 << (max_len + 1),
            _ => stages,
        });
        let horizon = over.horizon.or(file.horizon).unwrap_or(window);
        let params = Params {
            stages,
            depth,
            window,
            horizon,
            witness: over.witness.or(file.witness).unwrap_or(10),
            min_visits: file.min_visits.unwrap_or(50),
            max_len,
            audit_every: file.audit_every.unwrap_or(100),
            oracle: file.oracle.unwrap_or(true),
        };
        let s = Scenario {
            construction,
            universe_path,
            seed: over.seed,
            params,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let p = &self.params;
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if p.depth == 0 {
            return bad("depth must be positive".into());
        }
        if p.depth > 16 {
            return bad(format!("depth {} exceeds 16", p.depth));
        }
        if self.construction == Construction::JumpTower && p.max_len > 20 {
            return bad(format!("max_len {} exceeds 20", p.max_len));
        }
        if self.construction != Construction::JumpTower && p.window > p.stages.max(1) * 1000 {
            return bad(format!("window {} is out of scale with {} stages", p.window, p.stages));
        }
        if p.horizon > p.window {
            return bad(format!("horizon {} exceeds window {}", p.horizon, p.window));
        }
        if p.audit_every == 0 {
            return bad("audit_every must be positive".into());
        }
        Ok(())
    }

    pub fn universe(&self) -> Result<Universe, ScenarioError> {
        let mut u = match &self.universe_path {
            Some(path) => {
                let text = read(path)?;
                Universe::from_json(&text).map_err(|source| ScenarioError::Universe {
                    path: path.clone(),
                    source,
                })?
            }
            None => fuzz_universe(self.seed.unwrap_or(0), self.construction, self.params.stages),
        };
        if let Ok(v) = std::env::var("TOWERLAB_FUEL") {
            let fuel = v
                .parse()
                .map_err(|_| ScenarioError::Invalid(format!("TOWERLAB_FUEL={v:?} is not a number")))?;
            u = u.with_fuel_per_stage(fuel);
        }
        Ok(u)
    }
}

/// A random pattern universe carrying whatever oracle the construction
/// consumes.
pub fn fuzz_universe(seed: u64, construction: Construction, stages: u64) -> Universe {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=6);
    let indices = (0..n)
        .map(|_| {
            let len = rng.gen_range(1..=8);
            let pattern = (0..len).map(|_| rng.gen_range(0..2)).collect();
            let mut p = PatternSchedule::new(pattern);
            if rng.gen_bool(0.3) {
                p = p.diverging_at([rng.gen_range(0..200)]);
            }
            if rng.gen_bool(0.5) {
                p = p.with_delay(rng.gen_range(0..3), rng.gen_range(0..50));
            }
            Schedule::Pattern(p)
        })
        .collect();
    let u = Universe::new(indices);
    match construction {
        Construction::JumpTower => {
            let bits = (0..12)
                .map(|_| {
                    let mut flips: Vec<u64> = (0..rng.gen_range(0..4)).map(|_| rng.gen_range(1..16)).collect();
                    flips.sort_unstable();
                    flips.dedup();
                    JumpBit {
                        initial: rng.gen_range(0..2),
                        settling: flips.last().copied().unwrap_or(0),
                        flips,
                    }
                })
                .collect();
            u.with_jump(JumpScenario::new(bits).expect("generated bits are valid"))
        }
        Construction::UfBase | Construction::IndepFamily => {
            u.with_dominating(DominatingOracle::Affine { a: 300, b: 5000 })
        }
        Construction::MadCe => {
            let ins: Vec<Insertion> = (1..stages)
                .map(|s| Insertion {
                    stage: s,
                    element: if s % 2 == 0 { s / 2 } else { stages + s },
                })
                .collect();
            u.with_ce_set(CeEnumeration::new(&ins).expect("fresh elements"))
        }
        Construction::CoceBase => u,
    }
}
