use super::context::{complete_chunks, Ctx, MAX_LEVELS};
use super::minmax::{solve_min_max, MinMaxProblem};
use crate::error::Result;
use crate::model::{Dim, DimVec};
use crate::nlp::NlpOptions;

/// A slot in the nesting chain of one dim: a tile level or the per-core
/// chunk between the last private and first shared level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Level(usize),
    Chunk,
}

/// Continuous tiles while the greedy search fixes levels one at a time.
#[derive(Debug, Clone)]
pub(crate) struct State {
    pub levels: Vec<DimVec>,
    pub fixed: Vec<bool>,
    pub pt: DimVec,
    pub pt_fixed: bool,
    pub evaluations: u64,
}

impl State {
    /// Geometric interpolation between 1 and the extents, with `preset`
    /// levels fixed to the given tiles.
    pub fn new(ctx: &Ctx<'_>, preset: &[(usize, DimVec)]) -> Self {
        let nl = ctx.levels();
        let mut levels: Vec<DimVec> = (0..nl)
            .map(|l| DimVec::from_fn(|d| ctx.n[d].powf((l + 1) as f64 / (nl + 1) as f64)))
            .collect();
        let mut fixed = vec![false; nl];
        for &(l, t) in preset {
            levels[l] = t;
            fixed[l] = true;
        }
        // keep the guess nested around the preset levels
        for l in 1..nl {
            levels[l] = DimVec::from_fn(|d| levels[l][d].max(levels[l - 1][d]));
        }
        let pt = match ctx.parallel {
            Some(p) => DimVec::from_fn(|d| (levels[p.shared - 1][d] * levels[p.shared][d]).sqrt()),
            None => DimVec::ONES,
        };
        State {
            levels,
            fixed,
            pt,
            pt_fixed: ctx.parallel.is_none(),
            evaluations: 0,
        }
    }

    fn get(&self, s: Slot, d: Dim) -> f64 {
        match s {
            Slot::Level(l) => self.levels[l][d],
            Slot::Chunk => self.pt[d],
        }
    }

    fn set(&mut self, s: Slot, d: Dim, v: f64) {
        match s {
            Slot::Level(l) => self.levels[l][d] = v,
            Slot::Chunk => self.pt[d] = v,
        }
    }

    fn is_fixed(&self, s: Slot) -> bool {
        match s {
            Slot::Level(l) => self.fixed[l],
            Slot::Chunk => self.pt_fixed,
        }
    }
}

fn chain(ctx: &Ctx<'_>, d: Dim) -> Vec<Slot> {
    let mut out = Vec::with_capacity(ctx.levels() + 1);
    for l in 0..ctx.levels() {
        if let Some(p) = ctx.parallel {
            if l == p.shared && !d.is_reduction() {
                out.push(Slot::Chunk);
            }
        }
        out.push(Slot::Level(l));
    }
    out
}

/// Variable layout of one round of the greedy search.
struct Layout {
    vars: Vec<(Slot, Dim)>,
    bounds: Vec<(f64, f64)>,
    /// Pairs of variable indices with `x[a] <= x[b]`.
    nesting: Vec<(usize, usize)>,
    /// Levels with at least one variable and a finite capacity.
    capacity: Vec<usize>,
    product: bool,
}

impl Layout {
    fn n_constraints(&self) -> usize {
        self.capacity.len() + self.nesting.len() + self.product as usize
    }
}

/// Free slots become variables bounded by their nearest fixed neighbours in
/// the chain; slots whose bounds coincide are pinned in `state`.
fn layout(ctx: &Ctx<'_>, state: &mut State) -> Layout {
    let mut vars = Vec::new();
    let mut bounds = Vec::new();
    let mut nesting = Vec::new();
    let mut level_has_var = vec![false; ctx.levels()];
    let mut chunk_has_var = false;
    for d in Dim::ALL {
        let c = chain(ctx, d);
        let mut prev_var: Option<usize> = None;
        for (i, &s) in c.iter().enumerate() {
            if state.is_fixed(s) {
                prev_var = None;
                continue;
            }
            let lo = c[..i]
                .iter()
                .rev()
                .find(|&&x| state.is_fixed(x))
                .map_or(1.0, |&x| state.get(x, d));
            let hi = c[i + 1..]
                .iter()
                .find(|&&x| state.is_fixed(x))
                .map_or(ctx.n[d], |&x| state.get(x, d));
            let hi = hi.max(lo);
            if hi <= lo * (1.0 + 1e-12) {
                state.set(s, d, lo);
                prev_var = None;
                continue;
            }
            let idx = vars.len();
            vars.push((s, d));
            bounds.push((lo, hi));
            if let Some(p) = prev_var {
                nesting.push((p, idx));
            }
            prev_var = Some(idx);
            match s {
                Slot::Level(l) => level_has_var[l] = true,
                Slot::Chunk => chunk_has_var = true,
            }
        }
    }
    let capacity = (0..ctx.levels())
        .filter(|&l| level_has_var[l] && ctx.caps[l].is_finite())
        .collect();
    let product = match ctx.parallel {
        Some(p) => p.cores > 1.0 && (chunk_has_var || level_has_var[p.shared]),
        None => false,
    };
    Layout {
        vars,
        bounds,
        nesting,
        capacity,
        product,
    }
}

fn materialize(
    ctx: &Ctx<'_>,
    state: &State,
    lay: &Layout,
    x: &[f64],
    levels: &mut [DimVec],
    pt: &mut DimVec,
) {
    levels.copy_from_slice(&state.levels);
    *pt = state.pt;
    for (&(s, d), &v) in lay.vars.iter().zip(x) {
        match s {
            Slot::Level(l) => levels[l][d] = v,
            Slot::Chunk => pt[d] = v,
        }
    }
    if let Some(p) = ctx.parallel {
        *pt = complete_chunks(pt, &levels[p.shared]);
    }
}

/// Whether the cost of fixed level `l` still moves with free tiles: its
/// outer extent and execution count come from the levels (and chunks)
/// outside it.
fn depends_on_free(ctx: &Ctx<'_>, state: &State, l: usize) -> bool {
    let above = (l + 1..ctx.levels()).any(|k| !state.fixed[k]);
    let chunks = ctx.parallel.is_some_and(|p| !state.pt_fixed && l < p.shared);
    above || chunks
}

/// Runs the greedy most-constrained-level search for one assignment of loop
/// orders, returning continuous tiles for every level.
pub(crate) fn greedy(ctx: &Ctx<'_>, mut state: State, opts: &NlpOptions) -> Result<State> {
    let nl = ctx.levels();
    loop {
        let unvisited: Vec<usize> = (0..nl).filter(|&l| !state.fixed[l]).collect();
        if unvisited.is_empty() {
            break;
        }
        let lay = layout(ctx, &mut state);
        if lay.vars.is_empty() {
            for l in unvisited {
                state.fixed[l] = true;
            }
            state.pt_fixed = true;
            break;
        }
        let m = lay.n_constraints();
        let eval = |x: &[f64], costs: &mut [f64], g: &mut [f64]| {
            let mut levels = [DimVec::ONES; MAX_LEVELS];
            let levels = &mut levels[..nl];
            let mut pt = DimVec::ONES;
            materialize(ctx, &state, &lay, x, levels, &mut pt);
            let pt_ref = ctx.parallel.map(|_| &pt);
            ctx.costs(levels, pt_ref, &ctx.relaxed, costs);
            let mut i = 0;
            for &l in &lay.capacity {
                g[i] = ctx.capacity_lhs(&levels[l], &ctx.relaxed).ln() - ctx.caps[l].ln();
                i += 1;
            }
            for &(a, b) in &lay.nesting {
                g[i] = x[a].ln() - x[b].ln();
                i += 1;
            }
            if lay.product {
                let p = ctx.parallel.unwrap();
                let split: f64 = Dim::PARALLEL
                    .iter()
                    .map(|&d| levels[p.shared][d].ln() - pt[d].ln())
                    .sum();
                g[i] = p.cores.ln() - split;
            }
        };
        let warm: Vec<f64> = lay.vars.iter().map(|&(s, d)| state.get(s, d)).collect();
        let problem = MinMaxProblem {
            bounds: lay.bounds.clone(),
            n_levels: nl,
            n_constraints: m,
            eval: &eval,
            initial: vec![warm],
        };
        // fixed levels still compete while their cost depends on free tiles
        let candidates: Vec<usize> = (0..nl)
            .filter(|&l| !state.fixed[l] || depends_on_free(ctx, &state, l))
            .collect();
        let sol = solve_min_max(&problem, &candidates, opts)?;
        let chosen = if state.fixed[sol.level] {
            // the bottleneck is already fixed: fix the costliest free level
            let mut costs = [0.0; MAX_LEVELS];
            let mut g = vec![0.0; m];
            eval(&sol.x, &mut costs[..nl], &mut g);
            let mut best = unvisited[0];
            for &l in &unvisited {
                if costs[l] > costs[best] {
                    best = l;
                }
            }
            best
        } else {
            sol.level
        };
        drop(problem);
        state.evaluations += sol.evaluations;
        // every free slot keeps the winning point as its next warm start
        for (&(s, d), &v) in lay.vars.iter().zip(&sol.x) {
            state.set(s, d, v);
        }
        state.fixed[chosen] = true;
        if let Some(p) = ctx.parallel {
            if chosen + 1 == p.shared || state.fixed.iter().all(|&f| f) {
                state.pt_fixed = true;
            }
        }
    }
    if let Some(p) = ctx.parallel {
        state.pt = complete_chunks(&state.pt, &state.levels[p.shared]);
    }
    Ok(state)
}
