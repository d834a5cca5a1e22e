use super::{NlpOptions, NlpProblem};
use crate::error::{Error, Result};

pub(super) struct Local {
    pub u: Vec<f64>,
    pub f: f64,
    pub violation: f64,
    pub evaluations: u64,
}

/// Objective and constraint evaluation in log space with reusable buffers.
struct Oracle<'p, 'a> {
    p: &'p NlpProblem<'a>,
    x: Vec<f64>,
    g: Vec<f64>,
    evaluations: u64,
}

impl Oracle<'_, '_> {
    fn eval(&mut self, u: &[f64]) -> Result<f64> {
        for (x, u) in self.x.iter_mut().zip(u) {
            *x = u.exp();
        }
        self.evaluations += 1;
        let f = (self.p.eval)(&self.x, &mut self.g);
        if !f.is_finite() {
            return Err(Error::NonFinite(format!("objective at x = {:?}", self.x)));
        }
        if let Some(i) = self.g.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("constraint {i} at x = {:?}", self.x)));
        }
        Ok(f)
    }

    /// Augmented Lagrangian `f + (ρ/2) Σ max(0, g + λ/ρ)^2 - Σ λ^2 / (2ρ)`.
    fn merit(&mut self, u: &[f64], lambda: &[f64], rho: f64) -> Result<f64> {
        let f = self.eval(u)?;
        let mut pen = 0.0;
        for (g, l) in self.g.iter().zip(lambda) {
            let s = (g + l / rho).max(0.0);
            pen += s * s - (l / rho) * (l / rho);
        }
        Ok(f + 0.5 * rho * pen)
    }

    fn violation(&self) -> f64 {
        self.g.iter().fold(0.0f64, |m, &g| m.max(g))
    }
}

pub(super) fn solve(
    p: &NlpProblem<'_>,
    lo: &[f64],
    hi: &[f64],
    u0: Vec<f64>,
    opts: &NlpOptions,
) -> Result<Local> {
    let n = lo.len();
    let m = p.n_constraints;
    let mut oracle = Oracle {
        p,
        x: vec![0.0; n],
        g: vec![0.0; m],
        evaluations: 0,
    };
    let mut u = project(u0, lo, hi);
    let mut lambda = vec![0.0; m];
    let mut rho = 10.0;
    let mut prev_viol = f64::INFINITY;
    let mut prev_f = f64::INFINITY;
    let mut f = oracle.eval(&u)?;
    let mut viol = oracle.violation();

    for outer in 0..opts.max_outer.max(1) {
        let eps = opts.tol.max(10f64.powi(-(outer as i32) - 2));
        u = spg(&mut oracle, u, lo, hi, &lambda, rho, eps, opts)?;
        f = oracle.eval(&u)?;
        viol = oracle.violation();
        for (l, g) in lambda.iter_mut().zip(&oracle.g) {
            *l = (*l + rho * g).max(0.0);
        }
        if m == 0 {
            break;
        }
        let settled = (f - prev_f).abs() <= opts.tol * (1.0 + f.abs());
        if viol <= opts.feas_tol && settled && eps <= opts.tol {
            break;
        }
        if viol > 0.25 * prev_viol {
            rho = (rho * 10.0).min(1e12);
        }
        prev_viol = viol;
        prev_f = f;
    }
    Ok(Local {
        u,
        f,
        violation: viol,
        evaluations: oracle.evaluations,
    })
}

fn project(mut u: Vec<f64>, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    for ((v, l), h) in u.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
    u
}

fn gradient(
    oracle: &mut Oracle<'_, '_>,
    u: &[f64],
    lo: &[f64],
    hi: &[f64],
    lambda: &[f64],
    rho: f64,
    h: f64,
) -> Result<Vec<f64>> {
    let mut probe = u.to_vec();
    let mut grad = vec![0.0; u.len()];
    for i in 0..u.len() {
        if lo[i] == hi[i] {
            continue;
        }
        let step = h * u[i].abs().max(1.0);
        probe[i] = u[i] + step;
        let fp = oracle.merit(&probe, lambda, rho)?;
        probe[i] = u[i] - step;
        let fm = oracle.merit(&probe, lambda, rho)?;
        probe[i] = u[i];
        grad[i] = (fp - fm) / (2.0 * step);
    }
    Ok(grad)
}

/// Spectral projected gradient on the box, nonmonotone Armijo search.
#[allow(clippy::too_many_arguments)]
fn spg(
    oracle: &mut Oracle<'_, '_>,
    mut u: Vec<f64>,
    lo: &[f64],
    hi: &[f64],
    lambda: &[f64],
    rho: f64,
    eps: f64,
    opts: &NlpOptions,
) -> Result<Vec<f64>> {
    const MEMORY: usize = 10;
    const ALPHA_MIN: f64 = 1e-10;
    const ALPHA_MAX: f64 = 1e4;
    let n = u.len();
    let mut f = oracle.merit(&u, lambda, rho)?;
    let mut g = gradient(oracle, &u, lo, hi, lambda, rho, opts.fd_step)?;
    let mut history = vec![f];
    let pg_norm = |u: &[f64], g: &[f64]| -> f64 {
        (0..n)
            .map(|i| ((u[i] - g[i]).clamp(lo[i], hi[i]) - u[i]).abs())
            .fold(0.0, f64::max)
    };
    let mut alpha = (1.0 / pg_norm(&u, &g).max(1e-10)).clamp(ALPHA_MIN, ALPHA_MAX);
    let mut trial = vec![0.0; n];

    for _ in 0..opts.max_inner {
        if pg_norm(&u, &g) <= eps {
            break;
        }
        let d: Vec<f64> = (0..n)
            .map(|i| (u[i] - alpha * g[i]).clamp(lo[i], hi[i]) - u[i])
            .collect();
        let gd: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        if gd >= 0.0 {
            break;
        }
        let f_ref = history.iter().rev().take(MEMORY).fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let mut lam = 1.0;
        let f_new = loop {
            for i in 0..n {
                trial[i] = (u[i] + lam * d[i]).clamp(lo[i], hi[i]);
            }
            let ft = oracle.merit(&trial, lambda, rho)?;
            if ft <= f_ref + 1e-4 * lam * gd {
                break Some(ft);
            }
            if lam < 1e-12 {
                break None;
            }
            let denom = ft - f - lam * gd;
            let lt = if denom > 0.0 { -0.5 * lam * lam * gd / denom } else { 0.5 * lam };
            lam = if lt >= 0.1 * lam && lt <= 0.9 * lam { lt } else { 0.5 * lam };
        };
        let Some(f_new) = f_new else { break };
        let g_new = gradient(oracle, &trial, lo, hi, lambda, rho, opts.fd_step)?;
        let mut sy = 0.0;
        let mut ss = 0.0;
        for i in 0..n {
            let s = trial[i] - u[i];
            sy += s * (g_new[i] - g[i]);
            ss += s * s;
        }
        alpha = if sy > 0.0 {
            (ss / sy).clamp(ALPHA_MIN, ALPHA_MAX)
        } else {
            ALPHA_MAX
        };
        u.copy_from_slice(&trial);
        f = f_new;
        g = g_new;
        history.push(f);
        if ss.sqrt() <= 1e-14 {
            break;
        }
    }
    Ok(u)
}
