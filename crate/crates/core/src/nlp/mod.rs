//! Multi-start constrained minimization over positive box-bounded variables.
//!
//! Variables are optimized in log space (`x = e^u`), inequality constraints
//! are handled by a Powell-Hestenes-Rockafellar augmented Lagrangian, and each
//! inner problem is solved by spectral projected gradient with a nonmonotone
//! line search. Gradients come from central finite differences. Starting
//! points are a scrambled Halton sequence over the log box, so a run is fully
//! determined by the problem and the seed.

mod halton;
pub mod library;
mod local;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub use halton::ScrambledHalton;

/// Combined evaluator: returns the objective at `x` and writes every
/// constraint value `g_i(x)` (feasible when `<= 0`) into the slice.
pub type Evaluator<'a> = dyn Fn(&[f64], &mut [f64]) -> f64 + Sync + 'a;

pub struct NlpProblem<'a> {
    /// `(lo, hi)` per variable, `0 < lo <= hi`.
    pub bounds: Vec<(f64, f64)>,
    pub n_constraints: usize,
    pub eval: &'a Evaluator<'a>,
    /// Extra starting points tried before the low-discrepancy ones.
    pub initial: Vec<Vec<f64>>,
}

impl<'a> NlpProblem<'a> {
    pub fn new(bounds: Vec<(f64, f64)>, n_constraints: usize, eval: &'a Evaluator<'a>) -> Self {
        NlpProblem {
            bounds,
            n_constraints,
            eval,
            initial: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlpOptions {
    /// Number of low-discrepancy starting points.
    pub starts: usize,
    pub seed: u64,
    /// Relative convergence tolerance on the objective and projected gradient.
    pub tol: f64,
    /// Maximum allowed constraint value at a returned feasible point.
    pub feas_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Central-difference step in log space.
    pub fd_step: f64,
}

impl Default for NlpOptions {
    fn default() -> Self {
        NlpOptions {
            starts: 16,
            seed: 0,
            tol: 1e-6,
            feas_tol: 1e-6,
            max_outer: 40,
            max_inner: 400,
            fd_step: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NlpResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub feasible: bool,
    pub max_violation: f64,
    pub evaluations: u64,
}

/// Best point over all starts: the lowest objective among feasible ones,
/// ties broken by the lexicographically smallest `x`; when nothing is feasible,
/// the least violating point is returned with `feasible == false`.
pub fn minimize(p: &NlpProblem<'_>, opts: &NlpOptions) -> Result<NlpResult> {
    for (i, &(lo, hi)) in p.bounds.iter().enumerate() {
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::invalid(
                "nlp",
                format!("variable {i}: bounds must satisfy 0 < lo <= hi < inf, got [{lo}, {hi}]"),
            ));
        }
    }
    let lo: Vec<f64> = p.bounds.iter().map(|b| b.0.ln()).collect();
    let hi: Vec<f64> = p.bounds.iter().map(|b| b.1.ln()).collect();

    let mut starts: Vec<Vec<f64>> = p
        .initial
        .iter()
        .map(|x| {
            x.iter()
                .zip(lo.iter().zip(&hi))
                .map(|(v, (l, h))| v.max(1e-300).ln().clamp(*l, *h))
                .collect()
        })
        .collect();
    let mut seq = ScrambledHalton::new(p.bounds.len(), opts.seed);
    for _ in 0..opts.starts {
        let s = seq.next_point();
        starts.push(
            s.iter()
                .zip(lo.iter().zip(&hi))
                .map(|(v, (l, h))| l + v * (h - l))
                .collect(),
        );
    }
    if starts.is_empty() {
        return Err(Error::invalid("nlp", "no starting points"));
    }

    let results: Vec<Result<local::Local>> = starts
        .into_par_iter()
        .map(|u0| local::solve(p, &lo, &hi, u0, opts))
        .collect();
    let mut locals = Vec::with_capacity(results.len());
    for r in results {
        locals.push(r?);
    }
    let evaluations = locals.iter().map(|l| l.evaluations).sum();

    let best = locals
        .into_iter()
        .min_by(|a, b| {
            let fa = a.violation <= opts.feas_tol;
            let fb = b.violation <= opts.feas_tol;
            fb.cmp(&fa)
                .then_with(|| {
                    if fa {
                        a.f.total_cmp(&b.f)
                    } else {
                        a.violation.total_cmp(&b.violation)
                    }
                })
                .then_with(|| lex_cmp(&a.u, &b.u))
        })
        .unwrap();
    Ok(NlpResult {
        x: best.u.iter().map(|u| u.exp()).collect(),
        f: best.f,
        feasible: best.violation <= opts.feas_tol,
        max_violation: best.violation,
        evaluations,
    })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.total_cmp(y);
        if o.is_ne() {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x_plus_inverse() {
        let f = |x: &[f64], _: &mut [f64]| x[0] + 1.0 / x[0];
        let p = NlpProblem::new(vec![(0.1, 10.0)], 0, &f);
        let r = minimize(&p, &NlpOptions::default()).unwrap();
        assert!(r.feasible);
        assert!((r.x[0] - 1.0).abs() < 1e-3, "{:?}", r.x);
        assert!((r.f - 2.0).abs() < 1e-6);
    }

    #[test]
    fn empty_feasible_set() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = x[0] - 0.5;
            x[0]
        };
        let p = NlpProblem::new(vec![(1.0, 4.0)], 1, &f);
        let r = minimize(&p, &NlpOptions::default()).unwrap();
        assert!(!r.feasible);
        assert!(r.max_violation >= 0.5 - 1e-9);
    }

    #[test]
    fn nan_is_an_error() {
        let f = |_: &[f64], _: &mut [f64]| f64::NAN;
        let p = NlpProblem::new(vec![(1.0, 2.0)], 0, &f);
        assert!(matches!(
            minimize(&p, &NlpOptions::default()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = (x[0] * x[1]).ln() - 3.0f64.ln();
            1.0 / x[0] + 2.0 / x[1]
        };
        let p = NlpProblem::new(vec![(1.0, 10.0), (1.0, 10.0)], 1, &f);
        let opts = NlpOptions {
            seed: 9,
            ..Default::default()
        };
        let a = minimize(&p, &opts).unwrap();
        let b = minimize(&p, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.feasible);
        // optimum on x*y = 3 at y = 2x
        let x = (1.5f64).sqrt();
        assert!((a.x[0] - x).abs() < 1e-3, "{:?}", a.x);
    }
}
