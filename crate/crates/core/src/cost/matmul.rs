use serde::{Deserialize, Serialize};

use super::ceil_div;
use crate::error::{Error, Result};

/// Tile loop of `C[i][j] += A[i][k] * B[k][j]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatmulLoop {
    I,
    J,
    K,
}

impl MatmulLoop {
    fn idx(self) -> usize {
        self as usize
    }

    /// Parses `it,jt,kt` (or `ijk`) into an outermost-first order.
    pub fn parse_order(s: &str) -> Result<[MatmulLoop; 3]> {
        let letters: Vec<char> = s
            .chars()
            .filter(|c| !matches!(c, 't' | ',' | ' ' | '⟨' | '⟩'))
            .collect();
        let mut out = Vec::with_capacity(3);
        for c in letters {
            out.push(match c {
                'i' => MatmulLoop::I,
                'j' => MatmulLoop::J,
                'k' => MatmulLoop::K,
                _ => return Err(Error::invalid("permutation", format!("unknown matmul loop '{c}'"))),
            });
        }
        let order: [MatmulLoop; 3] = out
            .try_into()
            .map_err(|_| Error::invalid("permutation", "matmul order needs i, j and k"))?;
        let mut seen = [false; 3];
        for l in order {
            if std::mem::replace(&mut seen[l.idx()], true) {
                return Err(Error::invalid("permutation", "matmul loop repeated"));
            }
        }
        Ok(order)
    }
}

/// Data volume of tiled matmul for a tile-loop order given outermost first.
///
/// `A[i][k]` lacks `j`, `B[k][j]` lacks `i`, `C[i][j]` lacks `k` and is
/// counted twice (read and write-back). Each matrix is reloaded once per
/// iteration of the innermost loop that indexes it and of all loops outside.
pub fn dv_matmul(order: [MatmulLoop; 3], t: [f64; 3], n: [f64; 3]) -> f64 {
    let trips = [ceil_div(n[0], t[0]), ceil_div(n[1], t[1]), ceil_div(n[2], t[2])];
    let (ti, tj, tk) = (t[0], t[1], t[2]);
    let mats: [(&[MatmulLoop], f64, f64); 3] = [
        (&[MatmulLoop::I, MatmulLoop::K], ti * tk, 1.0),
        (&[MatmulLoop::K, MatmulLoop::J], tk * tj, 1.0),
        (&[MatmulLoop::I, MatmulLoop::J], ti * tj, 2.0),
    ];
    let mut total = 0.0;
    for (present, footprint, factor) in mats {
        // innermost-first scan for the first loop that indexes this matrix
        let r = (0..3)
            .rev()
            .find(|&p| present.contains(&order[p]))
            .unwrap();
        let reloads: f64 = order[..=r].iter().map(|l| trips[l.idx()]).product();
        total += factor * reloads * footprint;
    }
    total
}

/// `T_i T_k + T_j T_k + T_i T_j`.
pub fn matmul_capacity_lhs(t: [f64; 3]) -> f64 {
    t[0] * t[2] + t[1] * t[2] + t[0] * t[1]
}
