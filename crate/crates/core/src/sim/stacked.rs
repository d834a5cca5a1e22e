use serde::Serialize;

use super::{simulate, SimConfig, SimResult};
use crate::cost::{ceil_div, LoopOrder};
use crate::error::{Error, Result};
use crate::model::{DimVec, DvBreakdown, MachineSpec, ProblemSpec, TileConfig};

/// Simulated traffic across one boundary of a multi-level configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSim {
    pub level: String,
    pub capacity_words: u64,
    /// Times the level's nest runs: the number of enclosing tiles.
    pub executions: f64,
    /// One execution of the level's nest.
    pub single: SimResult,
    /// `single` scaled by `executions`.
    pub movement: DvBreakdown,
}

/// Serial multi-level validation by stacking single-level simulations.
///
/// Level `l` is simulated with its own capacity on a sub-problem whose
/// extents are the level-`l+1` tile, and the result is multiplied by the
/// number of level-`l+1` tiles. This mirrors how the model composes levels;
/// it is not an inclusive hierarchy simulation.
pub fn simulate_levels(
    orders: &[LoopOrder],
    cfg: &TileConfig,
    problem: &ProblemSpec,
    machine: &MachineSpec,
    budget: u128,
) -> Result<Vec<LevelSim>> {
    let nl = machine.tile_levels();
    if cfg.levels.len() != nl || orders.len() != nl {
        return Err(Error::invalid(
            "simulation",
            format!("need {nl} tile levels and loop orders"),
        ));
    }
    if !cfg.is_integral() {
        return Err(Error::invalid("simulation", "tile sizes must be integers"));
    }
    cfg.check_nesting(problem, None)?;

    let mut out = Vec::with_capacity(nl);
    let mut executions = 1.0;
    for l in (0..nl).rev() {
        let outer = cfg.outer(l, problem);
        if l + 1 < nl {
            let up_outer = cfg.outer(l + 1, problem);
            let up = &cfg.levels[l + 1];
            executions *= DimVec::from_fn(|d| ceil_div(up_outer[d], up[d])).product();
        }
        let sub = sub_problem(problem, &outer)?;
        let cap = machine.levels[l].capacity_words.ok_or_else(|| {
            Error::invalid("simulation", format!("level {} has no capacity", machine.levels[l].name))
        })?;
        let mut sc = SimConfig::new(sub, orders[l].permutation(), cfg.levels[l], cap);
        sc.budget = budget;
        let single = simulate(&sc)?;
        out.push(LevelSim {
            level: machine.levels[l].name.clone(),
            capacity_words: cap,
            executions,
            movement: single.movement().scale(executions),
            single,
        });
    }
    out.reverse();
    Ok(out)
}

fn sub_problem(problem: &ProblemSpec, outer: &DimVec) -> Result<ProblemSpec> {
    let e = outer.0.map(|x| x as u64);
    ProblemSpec::cnn_strided(e[0], e[1], e[2], e[3], e[4], e[5], e[6], problem.strides)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MemLevel, Microkernel};
    use crate::pruning::ClassId;

    fn level(name: &str, cap: Option<u64>) -> MemLevel {
        MemLevel {
            name: name.into(),
            capacity_words: cap,
            bw_to_inner: 1.0,
            bw_to_inner_parallel: 1.0,
            shared: false,
            register: false,
        }
    }

    #[test]
    fn outer_level_runs_once_and_inner_scales() {
        let machine = MachineSpec {
            name: "toy".into(),
            levels: vec![level("L1", Some(64)), level("L2", Some(1024)), level("Mem", None)],
            cores: 1,
            microkernel: Microkernel::default(),
            line_size_words: 1,
            occupancy: 1.0,
        };
        let p = ProblemSpec::cnn(1, 8, 4, 1, 1, 8, 8).unwrap();
        let t0 = DimVec([1.0, 2.0, 2.0, 1.0, 1.0, 2.0, 2.0]);
        let t1 = DimVec([1.0, 4.0, 4.0, 1.0, 1.0, 4.0, 8.0]);
        let cfg = TileConfig::new(vec![t0, t1]);
        let orders = vec![LoopOrder::Class(ClassId::C1); 2];
        let r = simulate_levels(&orders, &cfg, &p, &machine, 1 << 30).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[1].executions, 1.0);
        assert_eq!(r[0].executions, 2.0 * 2.0);
        assert_eq!(r[0].movement.total(), 4.0 * r[0].single.total_movement as f64);
    }
}
