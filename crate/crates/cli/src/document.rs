use std::fmt;

use convtile::cost::{dv_multilevel, EvalOptions, LoopOrder, TripMode};
use convtile::model::{CostReport, DimVec, MachineSpec, Permutation, ProblemSpec, TileConfig};
use convtile::optimizer::Schedule;
use convtile::pruning::ClassId;
use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Tiles keyed by level name, kept in machine order (innermost first).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTiles(pub Vec<(String, DimVec)>);

impl Serialize for LevelTiles {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (name, t) in &self.0 {
            map.serialize_entry(name, t)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for LevelTiles {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = LevelTiles;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from level name to tile")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut a: A) -> Result<LevelTiles, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = a.next_entry::<String, DimVec>()? {
                    out.push((k, v));
                }
                Ok(LevelTiles(out))
            }
        }
        d.deserialize_map(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverRecord {
    pub seed: u64,
    pub starts: usize,
    pub tol: f64,
    pub combinations: usize,
    pub nlp_evaluations: u64,
    /// Only filled with `--timing` so that reruns stay byte-identical.
    pub wall_ms: Option<u64>,
}

/// Output of `optimize`: everything needed to re-evaluate the schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDocument {
    pub problem: Value,
    pub machine: String,
    pub machine_digest: String,
    pub mode: String,
    pub parallel: bool,
    pub cores: u64,
    pub line_size_words: u64,
    pub class_per_level: Vec<ClassId>,
    pub representative_permutations: Vec<Permutation>,
    pub tiles: LevelTiles,
    pub parallel_chunks: Option<DimVec>,
    pub cost: CostReport,
    pub solver: SolverRecord,
}

/// SHA-256 of the machine's canonical JSON (fixed key order, defaults explicit).
pub fn machine_digest(machine: &MachineSpec) -> String {
    let text = serde_json::to_string(&machine.to_json()).expect("machine JSON serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl ScheduleDocument {
    pub fn new(
        schedule: &Schedule,
        problem: &ProblemSpec,
        machine: &MachineSpec,
        line: u64,
        tol: f64,
        wall_ms: Option<u64>,
    ) -> Self {
        let names = machine.levels.iter().map(|l| l.name.clone());
        ScheduleDocument {
            problem: problem.to_json(),
            machine: machine.name.clone(),
            machine_digest: machine_digest(machine),
            mode: schedule.info.mode.name().to_string(),
            parallel: schedule.info.parallel,
            cores: machine.cores,
            line_size_words: line,
            class_per_level: schedule.classes.clone(),
            representative_permutations: schedule.classes.iter().map(|c| c.representative()).collect(),
            tiles: LevelTiles(names.zip(schedule.tiles.levels.iter().copied()).collect()),
            parallel_chunks: schedule.tiles.parallel_chunks,
            cost: schedule.cost.clone(),
            solver: SolverRecord {
                seed: schedule.info.seed,
                starts: schedule.info.starts,
                tol,
                combinations: schedule.info.combinations,
                nlp_evaluations: schedule.info.nlp_evaluations,
                wall_ms,
            },
        }
    }

    pub fn problem_spec(&self) -> CliResult<ProblemSpec> {
        ProblemSpec::from_json(&self.problem).map_err(|e| CliError::input("schedule.problem", e))
    }

    /// Tile configuration in `machine`'s level order; level names must match.
    pub fn tile_config(&self, machine: &MachineSpec) -> CliResult<TileConfig> {
        let names: Vec<&str> = machine.levels[..machine.tile_levels()]
            .iter()
            .map(|l| l.name.as_str())
            .collect();
        let stored: Vec<&str> = self.tiles.0.iter().map(|(n, _)| n.as_str()).collect();
        if names != stored {
            return Err(CliError::input(
                "schedule.tiles",
                format!("levels {stored:?} do not match the machine's {names:?}"),
            ));
        }
        Ok(TileConfig {
            levels: self.tiles.0.iter().map(|(_, t)| *t).collect(),
            parallel_chunks: self.parallel_chunks,
        })
    }

    pub fn orders(&self) -> Vec<LoopOrder> {
        self.class_per_level.iter().map(|&c| LoopOrder::Class(c)).collect()
    }

    /// Recomputes the cost from the stored classes and tiles.
    pub fn evaluate(&self, problem: &ProblemSpec, machine: &MachineSpec) -> CliResult<CostReport> {
        let cfg = self.tile_config(machine)?;
        let opts = EvalOptions {
            trips: TripMode::Ceil,
            line: Some(self.line_size_words),
            parallel: self.parallel,
        };
        Ok(dv_multilevel(&self.orders(), &cfg, problem, machine, opts)?)
    }
}
