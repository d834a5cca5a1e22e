use crate::error::{Error, Result};
use crate::nlp::{minimize, NlpOptions, NlpProblem};

/// Relative slack on the "this level dominates" constraints, so the solver
/// does not stall on the manifold where two levels tie.
pub const REGION_SLACK: f64 = 1e-9;

/// Per-level positive costs and extra constraints over a shared variable
/// vector. Writes one cost per level into `costs` and every extra
/// constraint value (feasible when `<= 0`) into `g`.
pub type LevelEvaluator<'a> = dyn Fn(&[f64], &mut [f64], &mut [f64]) + Sync + 'a;

pub struct MinMaxProblem<'a> {
    pub bounds: Vec<(f64, f64)>,
    pub n_levels: usize,
    pub n_constraints: usize,
    pub eval: &'a LevelEvaluator<'a>,
    /// Extra starting points for every region solve.
    pub initial: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxSolution {
    /// Level whose region holds the smallest minimum.
    pub level: usize,
    pub x: Vec<f64>,
    /// Cost of `level` at `x`.
    pub value: f64,
    /// Minimum found for each candidate region, `None` if infeasible.
    pub region_values: Vec<Option<f64>>,
    pub evaluations: u64,
}

/// Minimizes `max_k cost_k` over the candidate levels by region
/// decomposition: for each candidate `j`, minimize `cost_j` subject to
/// `cost_k <= cost_j` for every other candidate `k`, then keep the region
/// with the smallest minimum (ties go to the lower level index).
pub fn solve_min_max(
    p: &MinMaxProblem<'_>,
    candidates: &[usize],
    opts: &NlpOptions,
) -> Result<MinMaxSolution> {
    if candidates.is_empty() {
        return Err(Error::invalid("min-max", "no candidate levels"));
    }
    let mut region_values = vec![None; p.n_levels];
    let mut best: Option<(usize, Vec<f64>, f64)> = None;
    let mut evaluations = 0;
    for &j in candidates {
        let others: Vec<usize> = candidates.iter().copied().filter(|&k| k != j).collect();
        let m = p.n_constraints + others.len();
        let eval = |x: &[f64], g: &mut [f64]| -> f64 {
            let mut costs = [0.0f64; 16];
            let costs = &mut costs[..p.n_levels];
            let (extra, region) = g.split_at_mut(p.n_constraints);
            (p.eval)(x, costs, extra);
            let cj = costs[j].ln();
            for (slot, &k) in region.iter_mut().zip(&others) {
                *slot = costs[k].ln() - cj - REGION_SLACK;
            }
            cj
        };
        let mut nlp = NlpProblem::new(p.bounds.clone(), m, &eval);
        nlp.initial = p.initial.clone();
        let r = minimize(&nlp, opts)?;
        evaluations += r.evaluations;
        if !r.feasible {
            continue;
        }
        let value = r.f.exp();
        region_values[j] = Some(value);
        if best.as_ref().is_none_or(|b| value < b.2) {
            best = Some((j, r.x, value));
        }
    }
    let Some((level, x, value)) = best else {
        return Err(Error::Infeasible(
            "every min-max region subproblem is infeasible".into(),
        ));
    };
    Ok(MinMaxSolution {
        level,
        x,
        value,
        region_values,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_min(f: impl Fn(f64) -> f64) -> f64 {
        (0..=200_000)
            .map(|i| 0.1 * (100.0f64).powf(i as f64 / 200_000.0))
            .map(f)
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn symmetric_crossing() {
        let eval = |x: &[f64], c: &mut [f64], _: &mut [f64]| {
            c[0] = 1.0 / x[0];
            c[1] = x[0];
        };
        let p = MinMaxProblem {
            bounds: vec![(0.1, 10.0)],
            n_levels: 2,
            n_constraints: 0,
            eval: &eval,
            initial: vec![],
        };
        let s = solve_min_max(&p, &[0, 1], &NlpOptions::default()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-4, "{s:?}");
        assert!((s.x[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn asymmetric_crossing_matches_dense_sampling() {
        let eval = |x: &[f64], c: &mut [f64], _: &mut [f64]| {
            c[0] = 2.0 / x[0];
            c[1] = x[0];
        };
        let p = MinMaxProblem {
            bounds: vec![(0.1, 10.0)],
            n_levels: 2,
            n_constraints: 0,
            eval: &eval,
            initial: vec![],
        };
        let s = solve_min_max(&p, &[0, 1], &NlpOptions::default()).unwrap();
        let dense = dense_min(|x| (2.0 / x).max(x));
        assert!((s.value - dense).abs() / dense < 0.01);
        assert!((s.value - 2f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn single_level_is_plain_minimization() {
        let eval = |x: &[f64], c: &mut [f64], g: &mut [f64]| {
            c[0] = 1.0 / x[0];
            g[0] = x[0] - 3.0;
        };
        let p = MinMaxProblem {
            bounds: vec![(1.0, 10.0)],
            n_levels: 1,
            n_constraints: 1,
            eval: &eval,
            initial: vec![],
        };
        let s = solve_min_max(&p, &[0], &NlpOptions::default()).unwrap();
        assert!((s.x[0] - 3.0).abs() < 1e-3, "{s:?}");
    }
}
