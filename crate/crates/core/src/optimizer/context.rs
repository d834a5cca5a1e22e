use crate::cost::{capacity_lhs_lines, level_volumes, CostParams, LoopOrder, ParallelCtx, TripMode};
use crate::error::{Error, Result};
use crate::model::{Dim, DimVec, DvBreakdown, MachineSpec, ProblemSpec};

/// Most tile levels the optimizer handles; keeps per-evaluation buffers on
/// the stack.
pub(crate) const MAX_LEVELS: usize = 12;

/// Bandwidth ratios are rounded to this many parts so that rescaling every
/// bandwidth by a constant yields bit-identical normalized costs.
const BW_QUANTUM: f64 = 1e12;

/// Everything a cost evaluation needs besides tile sizes.
pub(crate) struct Ctx<'a> {
    pub n: DimVec,
    pub orders: &'a [LoopOrder],
    /// Boundary bandwidths divided by the largest one.
    pub bw: Vec<f64>,
    /// Occupancy-scaled capacity per tile level (infinite if unbounded).
    pub caps: Vec<f64>,
    pub parallel: Option<ParallelCtx>,
    pub relaxed: CostParams,
    pub exact: CostParams,
}

impl<'a> Ctx<'a> {
    pub fn new(
        problem: &ProblemSpec,
        machine: &MachineSpec,
        orders: &'a [LoopOrder],
        parallel: bool,
        line: Option<u64>,
    ) -> Result<Self> {
        let nl = machine.tile_levels();
        if nl > MAX_LEVELS {
            return Err(Error::invalid(
                "machine",
                format!("at most {MAX_LEVELS} tile levels are supported, got {nl}"),
            ));
        }
        let raw: Vec<f64> = (0..nl).map(|l| machine.boundary_bw(l, parallel)).collect();
        let max = raw.iter().copied().fold(0.0, f64::max);
        let bw = raw
            .iter()
            .map(|b| ((b / max) * BW_QUANTUM).round() / BW_QUANTUM)
            .collect();
        let parallel = if parallel {
            let shared = machine.shared_split().ok_or_else(|| {
                Error::invalid(
                    "machine",
                    "parallel mode needs a shared level with a private level inside it",
                )
            })?;
            Some(ParallelCtx {
                shared,
                cores: machine.cores as f64,
            })
        } else {
            None
        };
        let line = line.unwrap_or(machine.line_size_words);
        let exact = CostParams::new(problem.strides).with_line(line);
        Ok(Ctx {
            n: problem.extents(),
            orders,
            bw,
            caps: (0..nl).map(|l| machine.effective_capacity(l)).collect(),
            parallel,
            relaxed: exact.with_trips(TripMode::Relaxed),
            exact,
        })
    }

    pub fn levels(&self) -> usize {
        self.caps.len()
    }

    /// Normalized scaled cost of every level.
    pub fn costs(&self, levels: &[DimVec], pt: Option<&DimVec>, params: &CostParams, out: &mut [f64]) {
        let nl = levels.len();
        let mut dvs = [DvBreakdown::default(); MAX_LEVELS];
        level_volumes(
            self.orders,
            levels,
            pt,
            &self.n,
            params,
            self.parallel,
            &mut dvs[..nl],
        );
        for l in 0..nl {
            out[l] = dvs[l].total() / self.bw[l];
        }
    }

    pub fn capacity_lhs(&self, t: &DimVec, params: &CostParams) -> f64 {
        capacity_lhs_lines(t, params)
    }

    /// Comparison key of an integer configuration: the bottleneck cost, then
    /// the sum of level costs to break plateaus of the max.
    pub fn key(&self, levels: &[DimVec], pt: Option<&DimVec>) -> (f64, f64) {
        let mut c = [0.0; MAX_LEVELS];
        let c = &mut c[..levels.len()];
        self.costs(levels, pt, &self.exact, c);
        (c.iter().copied().fold(0.0, f64::max), c.iter().sum())
    }

    pub fn fits(&self, l: usize, t: &DimVec) -> bool {
        !self.caps[l].is_finite() || self.capacity_lhs(t, &self.exact) <= self.caps[l]
    }
}

/// Chunk sizes of the parallel band; reduction dims always equal the shared
/// tile.
pub(crate) fn complete_chunks(pt: &DimVec, shared_tile: &DimVec) -> DimVec {
    DimVec::from_fn(|d| if d.is_reduction() { shared_tile[d] } else { pt[d] })
}

/// Product of the extents along the dims that may be split across cores.
pub(crate) fn parallel_room(n: &DimVec) -> f64 {
    Dim::PARALLEL.iter().map(|&d| n[d]).product()
}

pub(crate) fn key_less(a: (f64, f64), b: (f64, f64)) -> bool {
    const REL: f64 = 1e-12;
    if a.0 < b.0 * (1.0 - REL) {
        return true;
    }
    if a.0 > b.0 * (1.0 + REL) {
        return false;
    }
    a.1 < b.1 * (1.0 - REL)
}
