use super::{dv_class, dv_general, trip_counts, CostParams, TripMode};
use crate::error::{Error, Result};
use crate::model::{
    chunk_count, CostReport, Dim, DimVec, DvBreakdown, LevelCost, MachineSpec, Permutation,
    ProblemSpec, TileConfig,
};
use crate::pruning::ClassId;

/// Tile-loop order of one level: a pruned class or an explicit permutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopOrder {
    Class(ClassId),
    Perm(Permutation),
}

impl LoopOrder {
    pub fn dv(&self, t: &DimVec, outer: &DimVec, params: &CostParams) -> DvBreakdown {
        match self {
            LoopOrder::Class(c) => dv_class(*c, t, outer, params),
            LoopOrder::Perm(p) => dv_general(p, t, outer, params),
        }
    }

    pub fn permutation(&self) -> Permutation {
        match self {
            LoopOrder::Class(c) => c.representative(),
            LoopOrder::Perm(p) => *p,
        }
    }
}

/// Where the per-core chunk sits and how many cores share the work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParallelCtx {
    /// Index of the first shared tile level; chunks sit just inside it.
    pub shared: usize,
    pub cores: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub trips: TripMode,
    /// Overrides the machine's line size when set.
    pub line: Option<u64>,
    pub parallel: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            trips: TripMode::Ceil,
            line: None,
            parallel: false,
        }
    }
}

/// Total words crossing each boundary, one entry per tile level.
///
/// Level `l` tiles the extent of level `l + 1` (or the problem), and that
/// whole nest runs once per level-`l+1` tile, so its single-level volume is
/// multiplied by the number of outer tiles. In parallel mode the level just
/// inside the shared one tiles a per-core chunk instead, and every level at or
/// inside it reports the volume of one core.
pub fn level_volumes(
    orders: &[LoopOrder],
    levels: &[DimVec],
    chunks: Option<&DimVec>,
    extents: &DimVec,
    params: &CostParams,
    parallel: Option<ParallelCtx>,
    out: &mut [DvBreakdown],
) {
    let nl = levels.len();
    let mut executions = 1.0;
    // tile and outer extent of the level just processed (one further out)
    let mut above: Option<(DimVec, DimVec)> = None;
    for l in (0..nl).rev() {
        let chunk_level = parallel.filter(|p| p.shared == l + 1).and(chunks);
        if let Some((t_up, outer_up)) = &above {
            executions *= trip_counts(t_up, outer_up, params.trips).product();
            if let (Some(p), Some(pt)) = (parallel, chunk_level) {
                let relaxed = params.trips == TripMode::Relaxed;
                let q = chunk_count(t_up, pt, relaxed);
                executions *= if relaxed { q / p.cores } else { (q / p.cores).ceil() };
            }
        }
        let outer = match (chunk_level, levels.get(l + 1)) {
            (Some(pt), _) => *pt,
            (None, Some(t)) => *t,
            (None, None) => *extents,
        };
        out[l] = orders[l].dv(&levels[l], &outer, params).scale(executions);
        above = Some((levels[l], outer));
    }
}

/// Microkernel-shaped register tile: `k_lanes` output channels by
/// `hw_points` output pixels, everything else 1, clamped to the problem.
pub fn register_tile(problem: &ProblemSpec, machine: &MachineSpec) -> DimVec {
    let n = problem.extents();
    let mk = machine.microkernel;
    let mut t = DimVec::ONES;
    t[Dim::K] = (mk.k_lanes as f64).min(n[Dim::K]);
    t[Dim::W] = (mk.hw_points as f64).min(n[Dim::W]);
    t[Dim::H] = ((mk.hw_points as f64 / t[Dim::W]).floor().max(1.0)).min(n[Dim::H]);
    t
}

/// Full cost report of a multi-level configuration.
pub fn dv_multilevel(
    orders: &[LoopOrder],
    cfg: &TileConfig,
    problem: &ProblemSpec,
    machine: &MachineSpec,
    opts: EvalOptions,
) -> Result<CostReport> {
    let nl = machine.tile_levels();
    if cfg.levels.len() != nl {
        return Err(Error::invalid(
            "tiles",
            format!("machine has {nl} tile levels, configuration has {}", cfg.levels.len()),
        ));
    }
    if orders.len() != nl {
        return Err(Error::invalid(
            "tiles",
            format!("need one loop order per tile level ({nl}), got {}", orders.len()),
        ));
    }
    let parallel = if opts.parallel {
        let shared = machine.shared_split().ok_or_else(|| {
            Error::invalid("machine", "parallel mode needs a shared level with a private level inside it")
        })?;
        if cfg.parallel_chunks.is_none() {
            return Err(Error::invalid("tiles", "parallel mode needs parallel_chunks"));
        }
        Some(ParallelCtx {
            shared,
            cores: machine.cores as f64,
        })
    } else {
        None
    };
    cfg.check_nesting(problem, parallel.map(|p| p.shared))?;
    let params = CostParams::new(problem.strides)
        .with_trips(opts.trips)
        .with_line(opts.line.unwrap_or(machine.line_size_words));
    let mut dvs = vec![DvBreakdown::default(); nl];
    level_volumes(
        orders,
        &cfg.levels,
        cfg.parallel_chunks.as_ref(),
        &problem.extents(),
        &params,
        parallel,
        &mut dvs,
    );
    let per_level = dvs
        .into_iter()
        .enumerate()
        .map(|(l, dv)| {
            let bw = machine.boundary_bw(l, opts.parallel);
            let words = dv.total();
            LevelCost {
                level: machine.levels[l].name.clone(),
                from: machine.levels[l + 1].name.clone(),
                dv_words: words,
                bandwidth: bw,
                scaled: words / bw,
                per_tensor: dv,
            }
        })
        .collect();
    Ok(CostReport::from_levels(per_level))
}
