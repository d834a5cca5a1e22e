use serde::Serialize;

use crate::cost::{capacity_lhs_lines, level_volumes, CostParams, LoopOrder};
use crate::error::{Error, Result};
use crate::model::{Dim, DimVec, DvBreakdown, MachineSpec, ProblemSpec, TileConfig};
use crate::pruning::ClassId;

/// Best serial schedule found by brute force.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustiveResult {
    pub class: ClassId,
    pub tiles: Vec<DimVec>,
    /// Largest bandwidth-scaled level cost.
    pub cost: f64,
    pub evaluated: u128,
}

/// Integer tiles `1..=N_d` per dim that fit level `l`.
fn fitting_tiles(n: &DimVec, cap: f64, params: &CostParams) -> Vec<DimVec> {
    let mut out = Vec::new();
    let mut t = DimVec::ONES;
    loop {
        if !cap.is_finite() || capacity_lhs_lines(&t, params) <= cap {
            out.push(t);
        }
        let mut i = 0;
        loop {
            let d = Dim::ALL[i];
            t[d] += 1.0;
            if t[d] <= n[d] {
                break;
            }
            t[d] = 1.0;
            i += 1;
            if i == 7 {
                return out;
            }
        }
    }
}

/// Minimizes the bottleneck cost over every nested integer tile assignment
/// and every uniform class, with rounded-up trip counts. Refuses when more
/// than `budget` class evaluations would be needed.
pub fn exhaustive_schedule(problem: &ProblemSpec, machine: &MachineSpec, budget: u128) -> Result<ExhaustiveResult> {
    let nl = machine.tile_levels();
    let n = problem.extents();
    let params = CostParams::new(problem.strides).with_line(machine.line_size_words);
    let per_level: Vec<Vec<DimVec>> = (0..nl)
        .map(|l| fitting_tiles(&n, machine.effective_capacity(l), &params))
        .collect();
    let bound: u128 = per_level.iter().map(|v| v.len() as u128).product::<u128>() * 8;
    if bound > budget {
        return Err(Error::Budget {
            what: "exhaustive schedule search",
            required: bound,
            budget,
        });
    }
    let bw: Vec<f64> = (0..nl).map(|l| machine.boundary_bw(l, false)).collect();
    let mut best: Option<ExhaustiveResult> = None;
    let mut evaluated = 0u128;
    let mut levels = vec![DimVec::ONES; nl];
    let mut dvs = vec![DvBreakdown::default(); nl];
    let orders: Vec<Vec<LoopOrder>> = ClassId::ALL.iter().map(|&c| vec![LoopOrder::Class(c); nl]).collect();

    // odometer over one tile index per level, outermost level slowest
    let mut idx = vec![0usize; nl];
    'outer: loop {
        for l in 0..nl {
            levels[l] = per_level[l][idx[l]];
        }
        let nested = (1..nl).all(|l| levels[l - 1].le(&levels[l]));
        if nested {
            for (ci, ord) in orders.iter().enumerate() {
                level_volumes(ord, &levels, None, &n, &params, None, &mut dvs);
                let cost = dvs
                    .iter()
                    .zip(&bw)
                    .map(|(dv, b)| dv.total() / b)
                    .fold(0.0, f64::max);
                evaluated += 1;
                if best.as_ref().is_none_or(|b| cost < b.cost) {
                    best = Some(ExhaustiveResult {
                        class: ClassId::ALL[ci],
                        tiles: levels.clone(),
                        cost,
                        evaluated: 0,
                    });
                }
            }
        }
        let mut l = 0;
        loop {
            idx[l] += 1;
            if idx[l] < per_level[l].len() {
                break;
            }
            idx[l] = 0;
            l += 1;
            if l == nl {
                break 'outer;
            }
        }
    }
    let mut best = best.ok_or_else(|| Error::Infeasible("no nested integer tiles fit every level".into()))?;
    best.evaluated = evaluated;
    Ok(best)
}

impl ExhaustiveResult {
    pub fn config(&self) -> TileConfig {
        TileConfig::new(self.tiles.clone())
    }
}
