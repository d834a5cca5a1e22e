use rayon::prelude::*;
use serde::Serialize;

use super::ClassId;
use crate::cost::{capacity_lhs, CostParams, PreparedTile};
use crate::error::{Error, Result};
use crate::model::{Dim, DimVec, Permutation, ProblemSpec};

/// Candidate tile sizes per dimension; the grid is their Cartesian product.
#[derive(Debug, Clone, PartialEq)]
pub struct TileGrid {
    pub values: [Vec<f64>; 7],
}

impl TileGrid {
    /// All divisors of each extent.
    pub fn divisors(problem: &ProblemSpec) -> Self {
        TileGrid {
            values: Dim::ALL.map(|d| {
                let n = problem.extent(d);
                (1..=n).filter(|t| n % t == 0).map(|t| t as f64).collect()
            }),
        }
    }

    /// `1, 1 + k, 1 + 2k, ...` plus the extent itself.
    pub fn stepped(problem: &ProblemSpec, step: u64) -> Self {
        let step = step.max(1);
        TileGrid {
            values: Dim::ALL.map(|d| {
                let n = problem.extent(d);
                let mut v: Vec<f64> = (0..)
                    .map(|i| 1 + i * step)
                    .take_while(|&t| t <= n)
                    .map(|t| t as f64)
                    .collect();
                if v.last() != Some(&(n as f64)) {
                    v.push(n as f64);
                }
                v
            }),
        }
    }

    /// Only the full problem as a tile.
    pub fn single_tile(problem: &ProblemSpec) -> Self {
        TileGrid {
            values: Dim::ALL.map(|d| vec![problem.extent(d) as f64]),
        }
    }

    pub fn len(&self) -> u128 {
        self.values.iter().map(|v| v.len() as u128).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `i`-th tile in row-major order (last dimension fastest).
    pub fn tile(&self, mut i: usize) -> DimVec {
        let mut t = DimVec::ONES;
        for d in Dim::ALL.iter().rev() {
            let vals = &self.values[d.index()];
            t[*d] = vals[i % vals.len()];
            i /= vals.len();
        }
        t
    }

    pub fn tiles(&self) -> impl Iterator<Item = DimVec> + '_ {
        (0..self.len() as usize).map(|i| self.tile(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermGap {
    pub perm: Permutation,
    pub class: Option<ClassId>,
    /// Best volume this order reaches on the grid.
    pub min: f64,
    /// `min - best class minimum`; negative would falsify the pruning.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub perm: Permutation,
    pub tile: DimVec,
    pub cost: f64,
    pub best_class_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub tiles_evaluated: usize,
    pub global_min: f64,
    pub global_argmin: Permutation,
    pub global_tile: DimVec,
    pub class_min: f64,
    pub class_argmin: ClassId,
    pub class_tile: DimVec,
    /// The minimum over all orders equals the minimum over the eight classes.
    pub holds: bool,
    /// Largest `min over representatives - min over all orders` at a single
    /// tile. Zero means the classes win tile by tile, not only at the optimum.
    pub max_pointwise_gap: f64,
    /// Largest cost difference between two members of one class at one tile.
    pub max_intra_class_spread: f64,
    pub counterexample: Option<Counterexample>,
    pub per_perm: Vec<PermGap>,
}

struct Acc {
    /// per permutation: (min cost, tile index)
    best: Vec<(f64, usize)>,
    pointwise: f64,
    spread: f64,
}

impl Acc {
    fn new(n: usize) -> Self {
        Acc {
            best: vec![(f64::INFINITY, usize::MAX); n],
            pointwise: 0.0,
            spread: 0.0,
        }
    }

    fn merge(mut self, other: Acc) -> Acc {
        for (a, b) in self.best.iter_mut().zip(other.best) {
            if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                *a = b;
            }
        }
        self.pointwise = self.pointwise.max(other.pointwise);
        self.spread = self.spread.max(other.spread);
        self
    }
}

/// Evaluates every one of the 5040 orders on every grid tile (optionally only
/// tiles fitting `capacity`) and compares the best order with the best of the
/// eight class representatives.
pub fn verify_dominance(
    problem: &ProblemSpec,
    grid: &TileGrid,
    capacity: Option<f64>,
) -> Result<DominanceReport> {
    let n = problem.extents();
    let params = CostParams::new(problem.strides);
    let perms = Permutation::all();
    let class_of: Vec<Option<ClassId>> = perms.iter().map(ClassId::of).collect();
    let reps: Vec<usize> = ClassId::ALL
        .iter()
        .map(|c| perms.iter().position(|p| *p == c.representative()).unwrap())
        .collect();

    let tiles: Vec<DimVec> = grid
        .tiles()
        .filter(|t| capacity.is_none_or(|c| capacity_lhs(t, problem.strides) <= c))
        .collect();
    if tiles.is_empty() {
        return Err(Error::Infeasible("tile grid is empty after the capacity filter".into()));
    }

    let acc = tiles
        .par_iter()
        .enumerate()
        .fold(
            || Acc::new(perms.len()),
            |mut acc, (ti, t)| {
                let prep = PreparedTile::new(t, &n, &params);
                let mut lo = [f64::INFINITY; 8];
                let mut hi = [f64::NEG_INFINITY; 8];
                let mut all_min = f64::INFINITY;
                let mut costs = vec![0.0; perms.len()];
                for (pi, perm) in perms.iter().enumerate() {
                    let v = prep.dv(perm).total();
                    costs[pi] = v;
                    all_min = all_min.min(v);
                    if let Some(c) = class_of[pi] {
                        lo[c as usize] = lo[c as usize].min(v);
                        hi[c as usize] = hi[c as usize].max(v);
                    }
                    let b = &mut acc.best[pi];
                    if v < b.0 || (v == b.0 && ti < b.1) {
                        *b = (v, ti);
                    }
                }
                let rep_min = reps.iter().map(|&r| costs[r]).fold(f64::INFINITY, f64::min);
                acc.pointwise = acc.pointwise.max(rep_min - all_min);
                for c in 0..8 {
                    acc.spread = acc.spread.max(hi[c] - lo[c]);
                }
                acc
            },
        )
        .reduce(|| Acc::new(perms.len()), Acc::merge);

    let (global_idx, &(global_min, global_ti)) = acc
        .best
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)))
        .unwrap();
    let (class_pos, class_min, class_ti) = reps
        .iter()
        .enumerate()
        .map(|(ci, &r)| (ci, acc.best[r].0, acc.best[r].1))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .unwrap();

    let per_perm: Vec<PermGap> = perms
        .iter()
        .zip(&acc.best)
        .zip(&class_of)
        .map(|((p, &(min, _)), &class)| PermGap {
            perm: *p,
            class,
            min,
            gap: min - class_min,
        })
        .collect();
    let counterexample = per_perm
        .iter()
        .enumerate()
        .filter(|(_, g)| g.gap < 0.0)
        .min_by(|a, b| a.1.min.total_cmp(&b.1.min))
        .map(|(pi, g)| Counterexample {
            perm: g.perm,
            tile: tiles[acc.best[pi].1],
            cost: g.min,
            best_class_cost: class_min,
        });

    Ok(DominanceReport {
        tiles_evaluated: tiles.len(),
        global_min,
        global_argmin: perms[global_idx],
        global_tile: tiles[global_ti],
        class_min,
        class_argmin: ClassId::ALL[class_pos],
        class_tile: tiles[class_ti],
        holds: global_min == class_min,
        max_pointwise_gap: acc.pointwise,
        max_intra_class_spread: acc.spread,
        counterexample,
        per_perm,
    })
}
