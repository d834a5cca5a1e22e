use serde_json::{Map, Value};

use super::dims::{Dim, DimVec};
use super::json::{field_u64, reject_unknown};
use crate::error::{Error, Result};

/// Output-plane strides of a convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Strides {
    pub h: u64,
    pub w: u64,
}

impl Default for Strides {
    fn default() -> Self {
        Strides { h: 1, w: 1 }
    }
}

impl Strides {
    pub fn is_unit(&self) -> bool {
        self.h == 1 && self.w == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Cnn,
    /// `C[i][j] += A[i][k] * B[k][j]`, modeled as a convolution with
    /// `n = i`, `k = j`, `c = k` and unit `r, s, h, w`.
    Matmul,
}

/// Extents of the loop nest being tiled.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    extents: [u64; 7],
    pub strides: Strides,
}

impl ProblemSpec {
    /// A convolution layer. Extents are `(n, k, c, r, s, h, w)` with `h, w`
    /// the output-plane extents.
    pub fn cnn(n: u64, k: u64, c: u64, r: u64, s: u64, h: u64, w: u64) -> Result<Self> {
        Self::cnn_strided(n, k, c, r, s, h, w, Strides::default())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn cnn_strided(
        n: u64,
        k: u64,
        c: u64,
        r: u64,
        s: u64,
        h: u64,
        w: u64,
        strides: Strides,
    ) -> Result<Self> {
        let extents = [n, k, c, r, s, h, w];
        for (d, &e) in Dim::ALL.iter().zip(extents.iter()) {
            if e == 0 {
                return Err(Error::invalid("problem", format!("extent {d} must be ≥ 1")));
            }
        }
        if strides.h == 0 || strides.w == 0 {
            return Err(Error::invalid("problem", "stride must be ≥ 1"));
        }
        Ok(ProblemSpec {
            kind: ProblemKind::Cnn,
            extents,
            strides,
        })
    }

    pub fn matmul(i: u64, j: u64, k: u64) -> Result<Self> {
        for (name, e) in [("i", i), ("j", j), ("k", k)] {
            if e == 0 {
                return Err(Error::invalid("problem", format!("extent {name} must be ≥ 1")));
            }
        }
        Ok(ProblemSpec {
            kind: ProblemKind::Matmul,
            extents: [i, j, k, 1, 1, 1, 1],
            strides: Strides::default(),
        })
    }

    pub fn extent(&self, d: Dim) -> u64 {
        self.extents[d.index()]
    }

    pub fn extents(&self) -> DimVec {
        DimVec::from_fn(|d| self.extent(d) as f64)
    }

    /// `(i, j, k)` of a matmul problem.
    pub fn matmul_extents(&self) -> Option<(u64, u64, u64)> {
        match self.kind {
            ProblemKind::Matmul => Some((self.extents[0], self.extents[1], self.extents[2])),
            ProblemKind::Cnn => None,
        }
    }

    /// Input-plane extents `(σ_h(N_h-1)+N_r, σ_w(N_w-1)+N_s)`.
    pub fn input_hw(&self) -> (u64, u64) {
        let h = self.strides.h * (self.extent(Dim::H) - 1) + self.extent(Dim::R);
        let w = self.strides.w * (self.extent(Dim::W) - 1) + self.extent(Dim::S);
        (h, w)
    }

    /// Number of multiply-accumulate iterations of the full loop nest.
    pub fn iterations(&self) -> u128 {
        self.extents.iter().map(|&e| e as u128).product()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::parse("$", e.to_string()))?;
        Self::from_json(&value)
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::parse("$", "expected an object"))?;
        let kind = obj
            .get("kind")
            .ok_or_else(|| Error::parse("$.kind", "missing field"))?
            .as_str()
            .ok_or_else(|| Error::parse("$.kind", "expected a string"))?;
        match kind {
            "cnn" => {
                reject_unknown(
                    obj,
                    "$",
                    &[
                        "kind", "n", "k", "c", "h", "w", "r", "s", "stride_h", "stride_w", "name",
                        "comment",
                    ],
                )?;
                let get = |name: &str| extent_field(obj, name);
                let n = match obj.get("n") {
                    // batch defaults to 1
                    None => 1,
                    Some(_) => get("n")?,
                };
                let strides = Strides {
                    h: stride_field(obj, "stride_h")?,
                    w: stride_field(obj, "stride_w")?,
                };
                Self::cnn_strided(
                    n,
                    get("k")?,
                    get("c")?,
                    get("r")?,
                    get("s")?,
                    get("h")?,
                    get("w")?,
                    strides,
                )
            }
            "matmul" => {
                reject_unknown(obj, "$", &["kind", "i", "j", "k", "name", "comment"])?;
                Self::matmul(
                    extent_field(obj, "i")?,
                    extent_field(obj, "j")?,
                    extent_field(obj, "k")?,
                )
            }
            other => Err(Error::parse(
                "$.kind",
                format!("unknown kind '{other}' (expected \"cnn\" or \"matmul\")"),
            )),
        }
    }

    /// Canonical JSON form with all defaults written out.
    pub fn to_json(&self) -> Value {
        match self.kind {
            ProblemKind::Cnn => serde_json::json!({
                "kind": "cnn",
                "n": self.extent(Dim::N),
                "k": self.extent(Dim::K),
                "c": self.extent(Dim::C),
                "h": self.extent(Dim::H),
                "w": self.extent(Dim::W),
                "r": self.extent(Dim::R),
                "s": self.extent(Dim::S),
                "stride_h": self.strides.h,
                "stride_w": self.strides.w,
            }),
            ProblemKind::Matmul => {
                let (i, j, k) = self.matmul_extents().unwrap();
                serde_json::json!({ "kind": "matmul", "i": i, "j": j, "k": k })
            }
        }
    }
}

fn extent_field(obj: &Map<String, Value>, name: &str) -> Result<u64> {
    let path = format!("$.{name}");
    let v = field_u64(obj, name, &path)?;
    if v < 1 {
        return Err(Error::parse(path, "extent must be ≥ 1"));
    }
    Ok(v)
}

fn stride_field(obj: &Map<String, Value>, name: &str) -> Result<u64> {
    if !obj.contains_key(name) {
        return Ok(1);
    }
    let path = format!("$.{name}");
    let v = field_u64(obj, name, &path)?;
    if v < 1 {
        return Err(Error::parse(path, "stride must be ≥ 1"));
    }
    Ok(v)
}
