//! Tile-size and loop-order search.
//!
//! For each assignment of loop-order classes to tile levels, the levels are
//! fixed one at a time: every round solves one min-max region problem per
//! unvisited level and fixes the level whose region minimum is smallest.
//! Continuous tiles are then floored, repaired to fit, load balanced across
//! cores and polished by integer coordinate descent. The best assignment by
//! final integer cost wins.

mod context;
mod exhaustive;
mod greedy;
mod integer;
mod minmax;
mod single;

pub use exhaustive::{exhaustive_schedule, ExhaustiveResult};
pub use integer::{idle_fraction, BALANCE_WINDOW};
pub use minmax::{solve_min_max, LevelEvaluator, MinMaxProblem, MinMaxSolution, REGION_SLACK};
pub use single::{optimize_single_level, SingleLevel};

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::cost::{ceil_div, dv_multilevel, register_tile, EvalOptions, LoopOrder, TripMode};
use crate::error::{Error, Result};
use crate::model::{CostReport, Dim, DimVec, MachineSpec, ProblemSpec, TileConfig};
use crate::nlp::NlpOptions;
use crate::pruning::ClassId;
use context::{complete_chunks, key_less, parallel_room, Ctx};
use greedy::State;
use integer::IntConfig;

/// Default number of class combinations tried in cross-class mode.
pub const DEFAULT_CROSS_BUDGET: usize = 128;
/// Largest number of class combinations ranked in cross-class mode.
const MAX_COMBINATIONS: usize = 1 << 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// The same class at every level.
    UniformClass,
    /// Per-level classes, best-first up to `budget` combinations.
    CrossClass { budget: usize },
}

impl SearchMode {
    pub fn name(self) -> &'static str {
        match self {
            SearchMode::UniformClass => "uniform-class",
            SearchMode::CrossClass { .. } => "cross-class",
        }
    }
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SearchMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-class" | "uniform" => Ok(SearchMode::UniformClass),
            "cross-class" | "cross" => Ok(SearchMode::CrossClass {
                budget: DEFAULT_CROSS_BUDGET,
            }),
            _ => Err(Error::invalid(
                "mode",
                format!("expected uniform-class or cross-class, got {s:?}"),
            )),
        }
    }
}

impl Serialize for SearchMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub mode: SearchMode,
    pub parallel: bool,
    pub nlp: NlpOptions,
    /// Keep the register tile at the microkernel shape instead of searching it.
    pub fix_register: bool,
    /// Overrides the machine's line size.
    pub line: Option<u64>,
}

/// Multistart settings for the min-max rounds: fewer starts and a looser
/// tolerance than the generic solver defaults, which measured no loss on the
/// fixture layers at about half the runtime.
pub fn default_nlp() -> NlpOptions {
    NlpOptions {
        starts: 12,
        tol: 1e-5,
        ..NlpOptions::default()
    }
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            mode: SearchMode::UniformClass,
            parallel: false,
            nlp: default_nlp(),
            fix_register: true,
            line: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveInfo {
    pub seed: u64,
    pub starts: usize,
    pub mode: SearchMode,
    pub parallel: bool,
    /// Class combinations solved.
    pub combinations: usize,
    pub nlp_evaluations: u64,
}

/// Integer schedule: one class per tile level, tiles and optional chunks,
/// and the cost of exactly these integers.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub classes: Vec<ClassId>,
    pub tiles: TileConfig,
    pub cost: CostReport,
    pub info: SolveInfo,
}

impl Schedule {
    pub fn orders(&self) -> Vec<LoopOrder> {
        self.classes.iter().map(|&c| LoopOrder::Class(c)).collect()
    }
}

struct Candidate {
    classes: Vec<ClassId>,
    cfg: IntConfig,
    key: (f64, f64),
    evaluations: u64,
}

fn cmp_candidates(a: &Candidate, b: &Candidate) -> Ordering {
    if key_less(a.key, b.key) {
        Ordering::Less
    } else if key_less(b.key, a.key) {
        Ordering::Greater
    } else {
        a.classes.cmp(&b.classes)
    }
}

fn check_inputs(problem: &ProblemSpec, machine: &MachineSpec, opts: &OptimizerOptions) -> Result<()> {
    machine.validate()?;
    let orders = vec![LoopOrder::Class(ClassId::C1); machine.tile_levels()];
    let ctx = Ctx::new(problem, machine, &orders, opts.parallel, opts.line)?;
    for l in 0..ctx.levels() {
        if !ctx.fits(l, &DimVec::ONES) {
            return Err(Error::Infeasible(format!(
                "unit tile needs {} words, level {} holds {}",
                ctx.capacity_lhs(&DimVec::ONES, &ctx.exact),
                machine.levels[l].name,
                ctx.caps[l]
            )));
        }
    }
    if let Some(p) = ctx.parallel {
        let room = parallel_room(&ctx.n);
        if room < p.cores {
            return Err(Error::Parallelism {
                cores: machine.cores,
                available: room as u64,
            });
        }
    }
    Ok(())
}

fn preset_levels(
    ctx: &Ctx<'_>,
    problem: &ProblemSpec,
    machine: &MachineSpec,
    opts: &OptimizerOptions,
) -> Result<Vec<(usize, DimVec)>> {
    if opts.fix_register && machine.has_register_level() {
        let t = integer::shrink_to_fit(ctx, 0, register_tile(problem, machine))?;
        Ok(vec![(0, t)])
    } else {
        Ok(Vec::new())
    }
}

fn solve_combination(
    classes: &[ClassId],
    problem: &ProblemSpec,
    machine: &MachineSpec,
    opts: &OptimizerOptions,
) -> Result<Candidate> {
    let orders: Vec<LoopOrder> = classes.iter().map(|&c| LoopOrder::Class(c)).collect();
    let ctx = Ctx::new(problem, machine, &orders, opts.parallel, opts.line)?;
    let preset = preset_levels(&ctx, problem, machine, opts)?;
    let state = greedy::greedy(&ctx, State::new(&ctx, &preset), &opts.nlp)?;
    let mut frozen = vec![false; state.levels.len()];
    for &(l, _) in &preset {
        frozen[l] = true;
    }
    let levels = integer::floor_and_repair(&ctx, &state.levels, &frozen, true)?;
    let pt = match ctx.parallel {
        Some(_) => Some(integer::balance(&ctx, &levels, &state.pt, BALANCE_WINDOW)?),
        None => None,
    };
    let mut cfg = integer::polish(&ctx, IntConfig { levels, pt }, &frozen);
    if let Some(pt) = cfg.pt {
        cfg.pt = Some(integer::balance(&ctx, &cfg.levels, &pt, BALANCE_WINDOW)?);
    }
    Ok(Candidate {
        classes: classes.to_vec(),
        key: ctx.key(&cfg.levels, cfg.pt.as_ref()),
        cfg,
        evaluations: state.evaluations,
    })
}

fn solve_all(
    combos: Vec<Vec<ClassId>>,
    problem: &ProblemSpec,
    machine: &MachineSpec,
    opts: &OptimizerOptions,
) -> Result<Vec<Candidate>> {
    let results: Vec<Result<Candidate>> = combos
        .par_iter()
        .map(|c| solve_combination(c, problem, machine, opts))
        .collect();
    let mut out = Vec::new();
    let mut first_err = None;
    for r in results {
        match r {
            Ok(c) => out.push(c),
            Err(e) if e.is_infeasible() => {
                first_err.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    if out.is_empty() {
        return Err(first_err.unwrap_or_else(|| Error::Infeasible("no class combination".into())));
    }
    Ok(out)
}

/// Per-level costs of a candidate, used to rank cross-class combinations.
fn level_scores(c: &Candidate, problem: &ProblemSpec, machine: &MachineSpec, opts: &OptimizerOptions) -> Result<Vec<f64>> {
    let orders: Vec<LoopOrder> = c.classes.iter().map(|&k| LoopOrder::Class(k)).collect();
    let ctx = Ctx::new(problem, machine, &orders, opts.parallel, opts.line)?;
    let mut out = vec![0.0; ctx.levels()];
    ctx.costs(&c.cfg.levels, c.cfg.pt.as_ref(), &ctx.exact, &mut out);
    Ok(out)
}

fn cross_combinations(
    scores: &[(ClassId, Vec<f64>)],
    levels: usize,
    budget: usize,
) -> Result<Vec<Vec<ClassId>>> {
    let total = 8usize.checked_pow(levels as u32).filter(|&t| t <= MAX_COMBINATIONS);
    let Some(total) = total else {
        return Err(Error::Budget {
            what: "cross-class combinations",
            required: 8u128.pow(levels as u32),
            budget: MAX_COMBINATIONS as u128,
        });
    };
    let mut all: Vec<(f64, f64, Vec<ClassId>)> = Vec::with_capacity(total);
    for i in 0..total {
        let mut rest = i;
        let mut combo = Vec::with_capacity(levels);
        let (mut max, mut sum) = (0.0f64, 0.0);
        for l in 0..levels {
            let (c, s) = &scores[rest % 8];
            rest /= 8;
            combo.push(*c);
            max = max.max(s[l]);
            sum += s[l];
        }
        // uniform combinations were solved already
        if combo.iter().all(|&c| c == combo[0]) {
            continue;
        }
        all.push((max, sum, combo));
    }
    all.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then_with(|| a.2.cmp(&b.2))
    });
    all.truncate(budget);
    Ok(all.into_iter().map(|x| x.2).collect())
}

/// Searches loop-order classes and tile sizes for every tile level.
pub fn algorithm1(problem: &ProblemSpec, machine: &MachineSpec, opts: &OptimizerOptions) -> Result<Schedule> {
    check_inputs(problem, machine, opts)?;
    let nl = machine.tile_levels();
    let uniform: Vec<Vec<ClassId>> = ClassId::ALL.iter().map(|&c| vec![c; nl]).collect();
    let mut cands = solve_all(uniform, problem, machine, opts)?;
    if let SearchMode::CrossClass { budget } = opts.mode {
        let mut scores = Vec::with_capacity(8);
        for c in &cands {
            scores.push((c.classes[0], level_scores(c, problem, machine, opts)?));
        }
        if scores.len() == 8 {
            let combos = cross_combinations(&scores, nl, budget)?;
            if !combos.is_empty() {
                // infeasible extra combinations are simply not candidates
                if let Ok(more) = solve_all(combos, problem, machine, opts) {
                    cands.extend(more);
                }
            }
        }
    }
    let combinations = cands.len();
    let nlp_evaluations = cands.iter().map(|c| c.evaluations).sum();
    let best = cands.into_iter().min_by(cmp_candidates).unwrap();
    let tiles = TileConfig {
        levels: best.cfg.levels,
        parallel_chunks: best.cfg.pt,
    };
    finish(problem, machine, opts, best.classes, tiles, SolveInfo {
        seed: opts.nlp.seed,
        starts: opts.nlp.starts,
        mode: opts.mode,
        parallel: opts.parallel,
        combinations,
        nlp_evaluations,
    })
}

fn finish(
    problem: &ProblemSpec,
    machine: &MachineSpec,
    opts: &OptimizerOptions,
    classes: Vec<ClassId>,
    tiles: TileConfig,
    info: SolveInfo,
) -> Result<Schedule> {
    let orders: Vec<LoopOrder> = classes.iter().map(|&c| LoopOrder::Class(c)).collect();
    let violations = check_config(problem, machine, &tiles, opts.parallel, opts.line);
    if !violations.is_empty() {
        return Err(Error::Infeasible(violations.join("; ")));
    }
    let cost = dv_multilevel(&orders, &tiles, problem, machine, eval_options(opts))?;
    Ok(Schedule {
        classes,
        tiles,
        cost,
        info,
    })
}

fn eval_options(opts: &OptimizerOptions) -> EvalOptions {
    EvalOptions {
        trips: TripMode::Ceil,
        line: opts.line,
        parallel: opts.parallel,
    }
}

/// Every constraint an integer configuration breaks: capacity per level,
/// nesting, and in parallel mode the chunk bounds and the core count.
pub fn check_config(
    problem: &ProblemSpec,
    machine: &MachineSpec,
    cfg: &TileConfig,
    parallel: bool,
    line: Option<u64>,
) -> Vec<String> {
    let mut out = Vec::new();
    if cfg.levels.len() != machine.tile_levels() {
        out.push(format!(
            "expected {} tile levels, got {}",
            machine.tile_levels(),
            cfg.levels.len()
        ));
        return out;
    }
    let shared = if parallel { machine.shared_split() } else { None };
    if parallel && shared.is_none() {
        out.push("parallel mode needs a shared level with a private level inside it".into());
    }
    if let Err(e) = cfg.check_nesting(problem, shared) {
        out.push(e.to_string());
    }
    let orders = vec![LoopOrder::Class(ClassId::C1); cfg.levels.len()];
    if let Ok(ctx) = Ctx::new(problem, machine, &orders, false, line) {
        for (l, t) in cfg.levels.iter().enumerate() {
            if !t.is_integral() {
                out.push(format!("level {} has non-integer tiles", machine.levels[l].name));
            }
            if !ctx.fits(l, t) {
                out.push(format!(
                    "capacity exceeded at {}: footprint {} > {}",
                    machine.levels[l].name,
                    ctx.capacity_lhs(t, &ctx.exact),
                    ctx.caps[l]
                ));
            }
        }
    }
    if let Some(p) = shared {
        match &cfg.parallel_chunks {
            None => out.push("parallel mode needs parallel_chunks".into()),
            Some(pt) => {
                let st = &cfg.levels[p];
                let chunks: f64 = Dim::PARALLEL.iter().map(|&d| ceil_div(st[d], pt[d])).product();
                if chunks < machine.cores as f64 {
                    out.push(format!(
                        "only {chunks} parallel chunks for {} cores",
                        machine.cores
                    ));
                }
            }
        }
    }
    out
}

/// Floors a continuous configuration, repairs capacity and, with chunks,
/// balances them across cores. Integer feasible input comes back unchanged
/// apart from the chunk balancing.
pub fn integerize_and_balance(
    problem: &ProblemSpec,
    machine: &MachineSpec,
    classes: &[ClassId],
    cfg: &TileConfig,
    parallel: bool,
    line: Option<u64>,
) -> Result<TileConfig> {
    let orders: Vec<LoopOrder> = classes.iter().map(|&c| LoopOrder::Class(c)).collect();
    let ctx = Ctx::new(problem, machine, &orders, parallel, line)?;
    let levels = integer::floor_and_repair(&ctx, &cfg.levels, &[], false)?;
    let pt = match (ctx.parallel, &cfg.parallel_chunks) {
        (Some(p), Some(target)) => Some(integer::balance(
            &ctx,
            &levels,
            &complete_chunks(target, &levels[p.shared]),
            BALANCE_WINDOW,
        )?),
        (Some(p), None) => Some(integer::balance(&ctx, &levels, &levels[p.shared], 1.0)?),
        (None, _) => None,
    };
    Ok(TileConfig {
        levels,
        parallel_chunks: pt,
    })
}

/// Adds per-core chunks to a serial schedule: chunk counts over `n, k, h, w`
/// multiply to exactly the core count when some factorization allows it,
/// else to the smallest achievable product above it; ties go to the lower
/// modeled parallel cost.
pub fn parallelize(
    schedule: &Schedule,
    problem: &ProblemSpec,
    machine: &MachineSpec,
    line: Option<u64>,
) -> Result<Schedule> {
    let orders = schedule.orders();
    let ctx = Ctx::new(problem, machine, &orders, true, line)?;
    let p = ctx.parallel.unwrap();
    let levels = &schedule.tiles.levels;
    let shared = levels[p.shared];
    let private = levels[p.shared - 1];
    let cores = machine.cores;
    let avail: Vec<u64> = Dim::PARALLEL
        .iter()
        .map(|&d| ceil_div(shared[d], private[d]) as u64)
        .collect();
    let room: u128 = avail.iter().map(|&a| a as u128).product();
    if room < cores as u128 {
        return Err(Error::Parallelism {
            cores,
            available: room.min(u64::MAX as u128) as u64,
        });
    }
    let lim: Vec<u64> = avail.iter().map(|&a| a.min(cores)).collect();
    // (product, key, pt)
    let mut best: Option<(u64, (f64, f64), DimVec)> = None;
    let mut q = [1u64; 4];
    loop {
        let mut pt = shared;
        for (i, &d) in Dim::PARALLEL.iter().enumerate() {
            pt[d] = ceil_div(shared[d], q[i] as f64).max(private[d]);
        }
        let actual: u64 = Dim::PARALLEL
            .iter()
            .map(|&d| ceil_div(shared[d], pt[d]) as u64)
            .product();
        if actual >= cores {
            let key = ctx.key(levels, Some(&pt));
            let better = match &best {
                None => true,
                Some((bp, bk, _)) => actual < *bp || (actual == *bp && key_less(key, *bk)),
            };
            if better {
                best = Some((actual, key, pt));
            }
        }
        let mut i = 0;
        loop {
            q[i] += 1;
            if q[i] <= lim[i] {
                break;
            }
            q[i] = 1;
            i += 1;
            if i == 4 {
                break;
            }
        }
        if i == 4 {
            break;
        }
    }
    let (_, _, pt) = best.ok_or(Error::Parallelism {
        cores,
        available: room.min(u64::MAX as u128) as u64,
    })?;
    let tiles = TileConfig {
        levels: levels.clone(),
        parallel_chunks: Some(pt),
    };
    let opts = OptimizerOptions {
        parallel: true,
        line,
        ..Default::default()
    };
    let mut info = schedule.info.clone();
    info.parallel = true;
    finish(problem, machine, &opts, schedule.classes.clone(), tiles, info)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedConfig {
    /// Position in the input list.
    pub index: usize,
    /// `None` when the configuration is infeasible.
    pub cost: Option<CostReport>,
    pub violations: Vec<String>,
}

/// Orders configurations by predicted bottleneck cost. Infeasible ones are
/// kept and ranked last; ties keep input order.
pub fn rank_configs(
    problem: &ProblemSpec,
    machine: &MachineSpec,
    configs: &[(Vec<LoopOrder>, TileConfig)],
    opts: EvalOptions,
) -> Vec<RankedConfig> {
    let mut out: Vec<RankedConfig> = configs
        .iter()
        .enumerate()
        .map(|(index, (orders, cfg))| {
            let violations = check_config(problem, machine, cfg, opts.parallel, opts.line);
            let cost = if violations.is_empty() {
                dv_multilevel(orders, cfg, problem, machine, opts).ok()
            } else {
                None
            };
            RankedConfig {
                index,
                cost,
                violations,
            }
        })
        .collect();
    out.sort_by(|a, b| match (&a.cost, &b.cost) {
        (Some(x), Some(y)) => x.total.total_cmp(&y.total),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    });
    out
}
