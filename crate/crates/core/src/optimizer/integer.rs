use super::context::{complete_chunks, key_less, Ctx};
use crate::cost::ceil_div;
use crate::error::{Error, Result};
use crate::model::{Dim, DimVec};

/// Slack when flooring, so values like `2.9999999999` become 3.
const FLOOR_EPS: f64 = 1e-9;
/// Chunk sizes considered by the balancer lie within this fraction of the
/// continuous value.
pub const BALANCE_WINDOW: f64 = 0.25;
const MAX_POLISH_PASSES: usize = 64;
/// Below this range size every value is a polish candidate.
const DENSE_RANGE: f64 = 48.0;

/// Integer tiles (and chunks) under construction.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct IntConfig {
    pub levels: Vec<DimVec>,
    pub pt: Option<DimVec>,
}

/// Largest tile with the same trip count: `ceil(O / ceil(O / T))`.
pub(crate) fn align(t: f64, outer: f64) -> f64 {
    ceil_div(outer, ceil_div(outer, t)).min(t)
}

/// Shrinks `t` one unit at a time along the dim whose decrement frees the
/// most words until it fits level `l`.
pub(crate) fn shrink_to_fit(ctx: &Ctx<'_>, l: usize, mut t: DimVec) -> Result<DimVec> {
    while !ctx.fits(l, &t) {
        let base = ctx.capacity_lhs(&t, &ctx.exact);
        let mut best: Option<(Dim, f64)> = None;
        for d in Dim::ALL {
            if t[d] <= 1.0 {
                continue;
            }
            let mut s = t;
            s[d] -= 1.0;
            let gain = base - ctx.capacity_lhs(&s, &ctx.exact);
            if best.is_none_or(|b| gain > b.1) {
                best = Some((d, gain));
            }
        }
        let Some((d, _)) = best else {
            return Err(Error::Infeasible(format!(
                "unit tile does not fit tile level {l} (capacity {})",
                ctx.caps[l]
            )));
        };
        t[d] -= 1.0;
    }
    Ok(t)
}

/// Floors every level and restores capacity with [`shrink_to_fit`],
/// outermost level first so inner levels can be clamped into it. With
/// `align`, each tile also shrinks to the smallest size with the same trip
/// count, which never raises the cost.
pub(crate) fn floor_and_repair(
    ctx: &Ctx<'_>,
    levels: &[DimVec],
    frozen: &[bool],
    align_tiles: bool,
) -> Result<Vec<DimVec>> {
    let nl = levels.len();
    let mut out: Vec<DimVec> = levels
        .iter()
        .map(|t| DimVec::from_fn(|d| (t[d] + FLOOR_EPS).floor().clamp(1.0, ctx.n[d])))
        .collect();
    let is_frozen = |l: usize| frozen.get(l) == Some(&true);
    for l in (0..nl).rev() {
        let outer = if l + 1 < nl { out[l + 1] } else { ctx.n };
        let t = shrink_to_fit(ctx, l, DimVec::from_fn(|d| out[l][d].min(outer[d])))?;
        out[l] = if align_tiles && !is_frozen(l) {
            // never align below a frozen inner tile
            let floor = (0..l)
                .filter(|&i| is_frozen(i))
                .fold(DimVec::ONES, |m, i| DimVec::from_fn(|d| m[d].max(out[i][d])));
            DimVec::from_fn(|d| {
                let a = align(t[d], outer[d]);
                if a < floor[d] { t[d] } else { a }
            })
        } else {
            t
        };
    }
    Ok(out)
}

/// Idle share of the cores when `chunks` chunks are spread over `cores`.
pub fn idle_fraction(chunks: f64, cores: f64) -> f64 {
    1.0 - chunks / ((chunks / cores).ceil() * cores)
}

fn chunk_total(shared: &DimVec, pt: &DimVec) -> f64 {
    Dim::PARALLEL
        .iter()
        .map(|&d| ceil_div(shared[d], pt[d]))
        .product()
}

/// Candidate chunk sizes along one dim: the smallest size for each distinct
/// chunk count, from sizes in `[lo, hi]`.
fn chunk_candidates(shared: f64, lo: f64, hi: f64) -> Vec<f64> {
    let lo = lo.max(1.0).ceil();
    let hi = hi.min(shared).floor().max(lo);
    let mut out: Vec<f64> = Vec::new();
    let mut v = lo;
    while v <= hi {
        let q = ceil_div(shared, v);
        // the aligned size for this count, unless the lower bound forbids it
        let size = ceil_div(shared, q).max(lo);
        if out.last() != Some(&size) {
            out.push(size);
        }
        // jump to the next size that changes the count
        let next_q = q - 1.0;
        v = if next_q < 1.0 { hi + 1.0 } else { ceil_div(shared, next_q).max(v + 1.0) };
    }
    if out.is_empty() {
        out.push(hi);
    }
    out
}

/// Picks per-core chunk sizes whose total chunk count is at least the core
/// count with the least idle fraction, breaking ties by modeled cost.
/// Candidates come from `window` around `target`; when none reaches the core
/// count, every admissible size is considered.
pub(crate) fn balance(ctx: &Ctx<'_>, levels: &[DimVec], target: &DimVec, window: f64) -> Result<DimVec> {
    let p = ctx.parallel.expect("balance needs a parallel context");
    let shared = levels[p.shared];
    let private = levels[p.shared - 1];
    let try_with = |narrow: bool| -> Option<DimVec> {
        let cands: Vec<Vec<f64>> = Dim::PARALLEL
            .iter()
            .map(|&d| {
                let (lo, hi) = if narrow {
                    (
                        (target[d] * (1.0 - window)).max(private[d]),
                        (target[d] * (1.0 + window)).min(shared[d]),
                    )
                } else {
                    (private[d], shared[d])
                };
                chunk_candidates(shared[d], lo.min(shared[d]), hi.max(private[d]))
            })
            .collect();
        let mut best: Option<(f64, (f64, f64), DimVec)> = None;
        let mut idx = [0usize; 4];
        loop {
            let mut pt = shared;
            for (i, &d) in Dim::PARALLEL.iter().enumerate() {
                pt[d] = cands[i][idx[i]];
            }
            let chunks = chunk_total(&shared, &pt);
            if chunks >= p.cores {
                let idle = idle_fraction(chunks, p.cores);
                let key = ctx.key(levels, Some(&pt));
                let better = match &best {
                    None => true,
                    Some((bi, bk, _)) => {
                        idle < bi - 1e-12 || (idle <= bi + 1e-12 && key_less(key, *bk))
                    }
                };
                if better {
                    best = Some((idle, key, pt));
                }
            }
            let mut i = 0;
            loop {
                idx[i] += 1;
                if idx[i] < cands[i].len() {
                    break;
                }
                idx[i] = 0;
                i += 1;
                if i == 4 {
                    return best.map(|b| b.2);
                }
            }
        }
    };
    if let Some(pt) = try_with(true).or_else(|| try_with(false)) {
        return Ok(complete_chunks(&pt, &shared));
    }
    let available: f64 = Dim::PARALLEL
        .iter()
        .map(|&d| ceil_div(shared[d], private[d]))
        .product();
    Err(Error::Parallelism {
        cores: p.cores as u64,
        available: available as u64,
    })
}

fn feasible(ctx: &Ctx<'_>, cfg: &IntConfig, changed: usize) -> bool {
    let nl = cfg.levels.len();
    if changed < nl && !ctx.fits(changed, &cfg.levels[changed]) {
        return false;
    }
    for l in 0..nl {
        let outer = if l + 1 < nl { cfg.levels[l + 1] } else { ctx.n };
        if !cfg.levels[l].le(&outer) {
            return false;
        }
    }
    if let (Some(p), Some(pt)) = (ctx.parallel, &cfg.pt) {
        let shared = &cfg.levels[p.shared];
        let private = &cfg.levels[p.shared - 1];
        for &d in &Dim::PARALLEL {
            if pt[d] < private[d] || pt[d] > shared[d] {
                return false;
            }
        }
        if chunk_total(shared, pt) < p.cores {
            return false;
        }
    }
    true
}

fn candidate_values(v: f64, lo: f64, hi: f64, outer: f64) -> Vec<f64> {
    let mut c: Vec<f64> = if hi - lo <= DENSE_RANGE {
        (lo as u64..=hi as u64).map(|x| x as f64).collect()
    } else {
        let q = ceil_div(outer, v);
        let mut c = vec![v - 1.0, v + 1.0, v - 2.0, v + 2.0, lo, hi];
        for dq in -3i64..=3 {
            let qq = q + dq as f64;
            if qq >= 1.0 {
                c.push(ceil_div(outer, qq));
            }
        }
        c
    };
    c.retain(|&x| x >= lo && x <= hi && x != v);
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

/// Integer coordinate descent on the bottleneck cost (ties broken by the
/// sum of level costs). Levels in `frozen` are left untouched; with chunks,
/// their sizes are coordinates too.
pub(crate) fn polish(ctx: &Ctx<'_>, mut cfg: IntConfig, frozen: &[bool]) -> IntConfig {
    let nl = cfg.levels.len();
    let mut key = ctx.key(&cfg.levels, cfg.pt.as_ref());
    for _ in 0..MAX_POLISH_PASSES {
        let mut improved = false;
        for slot in 0..=nl {
            if slot < nl && frozen[slot] {
                continue;
            }
            if slot == nl && cfg.pt.is_none() {
                continue;
            }
            for d in Dim::ALL {
                let (v, lo, hi, outer) = if slot < nl {
                    let outer = if slot + 1 < nl { cfg.levels[slot + 1][d] } else { ctx.n[d] };
                    let lo = if slot > 0 { cfg.levels[slot - 1][d] } else { 1.0 };
                    (cfg.levels[slot][d], lo, outer, outer)
                } else {
                    if d.is_reduction() {
                        continue;
                    }
                    let p = ctx.parallel.unwrap();
                    let shared = cfg.levels[p.shared][d];
                    (cfg.pt.unwrap()[d], cfg.levels[p.shared - 1][d], shared, shared)
                };
                let mut best: Option<(f64, (f64, f64))> = None;
                for c in candidate_values(v, lo, hi, outer) {
                    let mut trial = cfg.clone();
                    set(ctx, &mut trial, slot, d, c);
                    if !feasible(ctx, &trial, slot) {
                        continue;
                    }
                    let k = ctx.key(&trial.levels, trial.pt.as_ref());
                    if key_less(k, best.map_or(key, |b| b.1)) {
                        best = Some((c, k));
                    }
                }
                if let Some((c, k)) = best {
                    set(ctx, &mut cfg, slot, d, c);
                    key = k;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    cfg
}

fn set(ctx: &Ctx<'_>, cfg: &mut IntConfig, slot: usize, d: Dim, v: f64) {
    let nl = cfg.levels.len();
    if slot < nl {
        cfg.levels[slot][d] = v;
        if let (Some(p), Some(pt)) = (ctx.parallel, cfg.pt.as_mut()) {
            if slot == p.shared {
                *pt = complete_chunks(pt, &cfg.levels[slot]);
                pt[d] = pt[d].min(v);
            }
        }
    } else if let Some(pt) = cfg.pt.as_mut() {
        pt[d] = v;
    }
}
