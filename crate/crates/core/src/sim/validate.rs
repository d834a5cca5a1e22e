use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{check_assumption, simulate, SimConfig, SimResult};
use crate::cost::{capacity_lhs, dv_general, CostParams};
use crate::model::{Dim, DimVec, DvBreakdown, Permutation, ProblemSpec};

/// Upper edges of the relative-error histogram buckets; the last bucket is
/// open-ended.
pub const ERROR_BUCKETS: [f64; 6] = [0.01, 0.02, 0.05, 0.10, 0.20, 0.50];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationEntry {
    pub perm: Permutation,
    pub tiles: DimVec,
    pub model: DvBreakdown,
    /// `None` when the simulation was refused (budget or invalid tiles).
    pub sim: Option<SimResult>,
    pub skipped: Option<String>,
    pub assumption_ok: bool,
    /// `|model - sim| / sim` per tensor, then the total.
    pub rel_error: Option<RelError>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelError {
    #[serde(rename = "in")]
    pub input: f64,
    #[serde(rename = "out")]
    pub output: f64,
    #[serde(rename = "ker")]
    pub kernel: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub capacity_words: u64,
    pub entries: Vec<ValidationEntry>,
    pub simulated: usize,
    /// Simulated configurations that satisfy the adjacent-tile assumption.
    pub assumption_ok: usize,
    /// Among those, the fraction whose total error is at most 10%.
    pub within_10pct: f64,
    /// Among those, how many match the model exactly for Out and Ker.
    pub out_ker_exact: usize,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    /// Rank correlation of model and simulated totals over assumption-ok configs.
    pub spearman: Option<f64>,
    /// Same over every simulated configuration.
    pub spearman_all: Option<f64>,
    /// `(k, loss)`: relative excess of the best simulated movement among the
    /// model's top `k` over the best simulated movement overall.
    pub top_k_loss: Vec<(usize, f64)>,
    /// Counts per [`ERROR_BUCKETS`] bucket (assumption-ok configs), plus overflow.
    pub error_histogram: Vec<usize>,
}

fn rel(model: f64, sim: f64) -> f64 {
    if sim == 0.0 {
        if model == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (model - sim).abs() / sim
    }
}

/// Compares the single-level model against the simulator on each
/// configuration. Simulations run in parallel; results keep input order.
pub fn validate_model(
    problem: &ProblemSpec,
    capacity_words: u64,
    configs: &[(Permutation, DimVec)],
    budget: u128,
) -> ValidationReport {
    let params = CostParams::new(problem.strides);
    let n = problem.extents();
    let entries: Vec<ValidationEntry> = configs
        .par_iter()
        .map(|(perm, t)| {
            let model = dv_general(perm, t, &n, &params);
            let assumption_ok = check_assumption(problem, perm, t, capacity_words as f64).ok;
            let mut cfg = SimConfig::new(problem.clone(), *perm, *t, capacity_words);
            cfg.budget = budget;
            match simulate(&cfg) {
                Ok(sim) => {
                    let m = sim.movement();
                    let rel_error = Some(RelError {
                        input: rel(model.input, m.input),
                        output: rel(model.output, m.output),
                        kernel: rel(model.kernel, m.kernel),
                        total: rel(model.total(), m.total()),
                    });
                    ValidationEntry {
                        perm: *perm,
                        tiles: *t,
                        model,
                        sim: Some(sim),
                        skipped: None,
                        assumption_ok,
                        rel_error,
                    }
                }
                Err(e) => ValidationEntry {
                    perm: *perm,
                    tiles: *t,
                    model,
                    sim: None,
                    skipped: Some(e.to_string()),
                    assumption_ok,
                    rel_error: None,
                },
            }
        })
        .collect();
    summarize(capacity_words, entries)
}

fn summarize(capacity_words: u64, entries: Vec<ValidationEntry>) -> ValidationReport {
    let simulated: Vec<&ValidationEntry> = entries.iter().filter(|e| e.sim.is_some()).collect();
    let ok: Vec<&ValidationEntry> = simulated.iter().copied().filter(|e| e.assumption_ok).collect();
    let errs: Vec<f64> = ok.iter().map(|e| e.rel_error.unwrap().total).collect();
    let within = errs.iter().filter(|&&x| x <= 0.10).count();
    let out_ker_exact = ok
        .iter()
        .filter(|e| {
            let m = e.sim.as_ref().unwrap().movement();
            m.output == e.model.output && m.kernel == e.model.kernel
        })
        .count();
    let mut hist = vec![0; ERROR_BUCKETS.len() + 1];
    for &x in &errs {
        let b = ERROR_BUCKETS.iter().position(|&edge| x <= edge).unwrap_or(ERROR_BUCKETS.len());
        hist[b] += 1;
    }
    let totals = |v: &[&ValidationEntry]| -> (Vec<f64>, Vec<f64>) {
        v.iter()
            .map(|e| (e.model.total(), e.sim.as_ref().unwrap().total_movement as f64))
            .unzip()
    };
    let (m_ok, s_ok) = totals(&ok);
    let (m_all, s_all) = totals(&simulated);
    let top_k_loss = [1, 2, 5]
        .into_iter()
        .filter(|&k| k <= m_all.len())
        .map(|k| (k, top_k_loss(&m_all, &s_all, k)))
        .collect();

    ValidationReport {
        capacity_words,
        simulated: simulated.len(),
        assumption_ok: ok.len(),
        within_10pct: if ok.is_empty() { 0.0 } else { within as f64 / ok.len() as f64 },
        out_ker_exact,
        max_rel_error: errs.iter().copied().fold(0.0, f64::max),
        mean_rel_error: if errs.is_empty() {
            0.0
        } else {
            errs.iter().sum::<f64>() / errs.len() as f64
        },
        spearman: spearman(&m_ok, &s_ok),
        spearman_all: spearman(&m_all, &s_all),
        top_k_loss,
        error_histogram: hist,
        entries,
    }
}

fn top_k_loss(model: &[f64], sim: &[f64], k: usize) -> f64 {
    let mut idx: Vec<usize> = (0..model.len()).collect();
    idx.sort_by(|&a, &b| model[a].total_cmp(&model[b]).then(a.cmp(&b)));
    let best = sim.iter().copied().fold(f64::INFINITY, f64::min);
    let picked = idx[..k].iter().map(|&i| sim[i]).fold(f64::INFINITY, f64::min);
    if best > 0.0 {
        (picked - best) / best
    } else {
        0.0
    }
}

/// Ranks starting at 1, ties sharing their average rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson on average ranks). `None` with fewer
/// than two points or when either side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len());
    if a.len() < 2 {
        return None;
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

/// Draws up to `count` distinct configurations with tiles from the divisors
/// of each extent and loop orders from `perms`, keeping only tiles that fit
/// `capacity` and, when `require_assumption` is set, satisfy the adjacent-tile
/// assumption there. Deterministic in `seed`; gives up after `max_tries` draws.
pub fn sample_configs(
    problem: &ProblemSpec,
    capacity: u64,
    perms: &[Permutation],
    count: usize,
    seed: u64,
    require_assumption: bool,
    max_tries: usize,
) -> Vec<(Permutation, DimVec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let divisors: Vec<Vec<f64>> = Dim::ALL
        .iter()
        .map(|&d| {
            let e = problem.extent(d);
            (1..=e).filter(|x| e % x == 0).map(|x| x as f64).collect()
        })
        .collect();
    let mut out: Vec<(Permutation, DimVec)> = Vec::with_capacity(count);
    if perms.is_empty() {
        return out;
    }
    for _ in 0..max_tries {
        if out.len() >= count {
            break;
        }
        let perm = *perms.choose(&mut rng).unwrap();
        let t = DimVec::from_fn(|d| {
            let c = &divisors[d.index()];
            c[rng.gen_range(0..c.len())]
        });
        if capacity_lhs(&t, problem.strides) > capacity as f64 {
            continue;
        }
        if require_assumption && !check_assumption(problem, &perm, &t, capacity as f64).ok {
            continue;
        }
        if out.iter().any(|(p, x)| *p == perm && *x == t) {
            continue;
        }
        out.push((perm, t));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
        assert_eq!(ranks(&[5.0, 1.0, 5.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn top_k() {
        let model = [1.0, 2.0, 3.0];
        let sim = [12.0, 10.0, 11.0];
        assert!((top_k_loss(&model, &sim, 1) - 0.2).abs() < 1e-12);
        assert_eq!(top_k_loss(&model, &sim, 2), 0.0);
    }
}
