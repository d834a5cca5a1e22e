//! Ground-truth cache simulation of tiled loop nests.
//!
//! The simulator replays the full element trace of a tiled convolution
//! through an idealized fully-associative LRU cache and counts misses and
//! dirty write-backs per tensor. It shares no code with the analytical
//! model beyond the problem and permutation types.

mod assumption;
mod lru;
mod stacked;
mod validate;

pub use assumption::{check_assumption, AssumptionCheck, EVICTION_MARGIN};
pub use stacked::{simulate_levels, LevelSim};
pub use validate::{
    sample_configs, spearman, validate_model, RelError, ValidationEntry, ValidationReport, ERROR_BUCKETS,
};

use serde::Serialize;

use crate::cost::Tensor;
use crate::error::{Error, Result};
use crate::model::{Dim, DimVec, DvBreakdown, Permutation, ProblemSpec};
use lru::{Access, Lru};

/// Default cap on simulated accesses.
pub const DEFAULT_TRACE_BUDGET: u128 = 200_000_000;

/// Order of the loops inside one tile, outermost first. The tile-loop order
/// is what the model reasons about; this one only affects recency within a
/// tile.
pub const INTRA_TILE_ORDER: [Dim; 7] = Dim::ALL;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub problem: ProblemSpec,
    pub perm: Permutation,
    pub tiles: DimVec,
    pub capacity_words: u64,
    pub line_size_words: u64,
    pub budget: u128,
    /// Tensors in order of increasing base address.
    pub layout: [Tensor; 3],
    /// Unused lines left before each tensor's base.
    pub gap_lines: u64,
}

impl SimConfig {
    pub fn new(problem: ProblemSpec, perm: Permutation, tiles: DimVec, capacity_words: u64) -> Self {
        SimConfig {
            problem,
            perm,
            tiles,
            capacity_words,
            line_size_words: 1,
            budget: DEFAULT_TRACE_BUDGET,
            layout: [Tensor::In, Tensor::Ker, Tensor::Out],
            gap_lines: 0,
        }
    }

    /// Accesses the replay performs: three per iteration of the loop nest.
    pub fn trace_length(&self) -> u128 {
        3 * self.problem.iterations()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct TensorTraffic {
    /// Words brought in (line fills times line size).
    pub misses: u64,
    /// Words written back (only ever non-zero for Out).
    pub writebacks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    #[serde(rename = "in")]
    pub input: TensorTraffic,
    #[serde(rename = "out")]
    pub output: TensorTraffic,
    #[serde(rename = "ker")]
    pub kernel: TensorTraffic,
    pub total_movement: u64,
    pub accesses: u64,
    pub assumption_ok: bool,
}

impl SimResult {
    /// Movement per tensor in the model's terms (Out includes write-backs).
    pub fn movement(&self) -> DvBreakdown {
        DvBreakdown {
            input: (self.input.misses + self.input.writebacks) as f64,
            output: (self.output.misses + self.output.writebacks) as f64,
            kernel: (self.kernel.misses + self.kernel.writebacks) as f64,
        }
    }
}

fn to_u64(x: f64, what: &str) -> Result<u64> {
    if x >= 1.0 && x.fract() == 0.0 && x < 9.0e15 {
        Ok(x as u64)
    } else {
        Err(Error::invalid("simulation", format!("{what} must be a positive integer, got {x}")))
    }
}

/// Replays the tiled loop nest and counts traffic per tensor.
pub fn simulate(cfg: &SimConfig) -> Result<SimResult> {
    let need = cfg.trace_length();
    if need > cfg.budget {
        return Err(Error::Budget {
            what: "simulation trace",
            required: need,
            budget: cfg.budget,
        });
    }
    if cfg.capacity_words == 0 {
        return Err(Error::invalid("simulation", "capacity must be ≥ 1"));
    }
    let p = &cfg.problem;
    let mut t = [0u64; 7];
    let mut n = [0u64; 7];
    for d in Dim::ALL {
        n[d.index()] = p.extent(d);
        t[d.index()] = to_u64(cfg.tiles[d], "tile size")?;
        if t[d.index()] > n[d.index()] {
            return Err(Error::invalid(
                "simulation",
                format!("tile {d} = {} exceeds extent {}", t[d.index()], n[d.index()]),
            ));
        }
    }
    let mut placed = cfg.layout;
    placed.sort_by_key(|t| *t as u8);
    if placed != [Tensor::In, Tensor::Out, Tensor::Ker] {
        return Err(Error::invalid("simulation", "layout must list each tensor once"));
    }
    let [nn, nk, nc, nr, ns, nh, nw] = n;
    let (sh, sw) = (p.strides.h, p.strides.w);
    let (hin, win) = p.input_hw();
    let line = cfg.line_size_words.max(1);
    let lines_of = |words: u64| words.div_ceil(line);

    let in_lines = lines_of(nn * nc * hin * win);
    let ker_lines = lines_of(nk * nc * nr * ns);
    let out_lines = lines_of(nn * nk * nh * nw);
    let total_lines = in_lines + ker_lines + out_lines + 3 * cfg.gap_lines;
    if total_lines >= u32::MAX as u64 {
        return Err(Error::Budget {
            what: "simulated address space",
            required: total_lines as u128,
            budget: u32::MAX as u128,
        });
    }
    // each tensor starts on its own line so lines never mix tensors
    let mut base = [0u64; 3];
    let mut next = 0;
    for tensor in cfg.layout {
        let (slot, lines) = match tensor {
            Tensor::In => (0, in_lines),
            Tensor::Out => (1, out_lines),
            Tensor::Ker => (2, ker_lines),
        };
        next += cfg.gap_lines;
        base[slot] = next * line;
        next += lines;
    }
    let [in_base, out_base, ker_base] = base;

    let mut cache = Lru::new(total_lines as usize, (cfg.capacity_words / line) as usize);
    let mut misses = [0u64; 3];
    let mut writebacks = 0u64;
    let mut accesses = 0u64;

    let order = cfg.perm.outer_to_inner();
    let mut idx = [0u64; 7]; // tile index per dim
    let trips: [u64; 7] = std::array::from_fn(|i| n[i].div_ceil(t[i]));

    let mut touch = |addr: u64, tensor: usize, write: bool| {
        match cache.access((addr / line) as u32, write) {
            Access::Hit => {}
            Access::Miss { dirty_eviction } => {
                misses[tensor] += 1;
                writebacks += dirty_eviction as u64;
            }
        }
    };

    'tiles: loop {
        let lo: [u64; 7] = std::array::from_fn(|i| idx[i] * t[i]);
        let hi: [u64; 7] = std::array::from_fn(|i| (lo[i] + t[i]).min(n[i]));
        for bn in lo[0]..hi[0] {
            for bk in lo[1]..hi[1] {
                for bc in lo[2]..hi[2] {
                    for br in lo[3]..hi[3] {
                        for bs in lo[4]..hi[4] {
                            for bh in lo[5]..hi[5] {
                                let in_row = in_base + ((bn * nc + bc) * hin + sh * bh + br) * win + bs;
                                let ker = ker_base + ((bk * nc + bc) * nr + br) * ns + bs;
                                let out_row = out_base + ((bn * nk + bk) * nh + bh) * nw;
                                for bw in lo[6]..hi[6] {
                                    touch(in_row + sw * bw, 0, false);
                                    touch(ker, 2, false);
                                    touch(out_row + bw, 1, true);
                                }
                                accesses += 3 * (hi[6] - lo[6]);
                            }
                        }
                    }
                }
            }
        }
        // advance the tile odometer, innermost tile loop fastest
        let mut pos = 6;
        loop {
            let d = order[pos].index();
            idx[d] += 1;
            if idx[d] < trips[d] {
                break;
            }
            idx[d] = 0;
            if pos == 0 {
                break 'tiles;
            }
            pos -= 1;
        }
    }
    writebacks += cache.dirty_resident();

    let words = |lines: u64| lines * line;
    let input = TensorTraffic {
        misses: words(misses[0]),
        writebacks: 0,
    };
    let output = TensorTraffic {
        misses: words(misses[1]),
        writebacks: words(writebacks),
    };
    let kernel = TensorTraffic {
        misses: words(misses[2]),
        writebacks: 0,
    };
    let assumption_ok = check_assumption(p, &cfg.perm, &cfg.tiles, cfg.capacity_words as f64).ok;
    Ok(SimResult {
        total_movement: input.misses + output.misses + output.writebacks + kernel.misses,
        input,
        output,
        kernel,
        accesses,
        assumption_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matmul_sim(c: u64) -> SimResult {
        let p = ProblemSpec::matmul(4, 4, 4).unwrap();
        // (i, j, k) -> (n, k, c); loop order it, jt, kt
        let perm: Permutation = "nt,kt,ct,rt,st,ht,wt".parse().unwrap();
        let t = DimVec([2.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1.0]);
        simulate(&SimConfig::new(p, perm, t, c)).unwrap()
    }

    #[test]
    fn matmul_everything_fits() {
        let r = matmul_sim(48);
        assert_eq!(r.input.misses + r.kernel.misses + r.output.misses, 48);
        assert_eq!(r.output.writebacks, 16);
        assert_eq!(r.total_movement, 64);
    }

    #[test]
    fn matmul_sixteen_words() {
        let r = matmul_sim(16);
        assert_eq!(r.input.misses, 32);
        assert_eq!(r.kernel.misses, 32);
        assert_eq!(r.output.misses, 16);
        assert_eq!(r.output.writebacks, 16);
        assert_eq!(r.total_movement, 96);
    }

    #[test]
    fn budget_refusal() {
        let p = ProblemSpec::cnn(1, 8, 8, 3, 3, 8, 8).unwrap();
        let mut cfg = SimConfig::new(p, ClassIdRep::rep(), DimVec::ONES, 64);
        cfg.budget = 100;
        match simulate(&cfg) {
            Err(Error::Budget { required, .. }) => assert_eq!(required, 3 * 8 * 8 * 9 * 64),
            other => panic!("{other:?}"),
        }
    }

    struct ClassIdRep;
    impl ClassIdRep {
        fn rep() -> Permutation {
            crate::pruning::ClassId::C1.representative()
        }
    }
}
