use serde_json::{Map, Value};

use super::json::{as_u64, field_f64, reject_unknown};
use crate::error::{Error, Result};

/// One level of the memory hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct MemLevel {
    pub name: String,
    /// Capacity in words. `None` means unbounded (main memory, or an
    /// idealized last-level cache).
    pub capacity_words: Option<u64>,
    /// Bandwidth between this level and the next inner one, relative units.
    /// Unused (and optional) for the innermost level.
    pub bw_to_inner: f64,
    /// Bandwidth used for this boundary in the parallel cost model: aggregate
    /// for memory, per-core for a shared cache.
    pub bw_to_inner_parallel: f64,
    pub shared: bool,
    /// Marks the register file. Only the innermost level may carry it.
    pub register: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Microkernel {
    /// Output channels held across vector lanes (`T_k` of the register tile).
    pub k_lanes: u64,
    /// Output points (`T_h * T_w`) broadcast per outer product.
    pub hw_points: u64,
}

impl Default for Microkernel {
    fn default() -> Self {
        Microkernel {
            k_lanes: 16,
            hw_points: 6,
        }
    }
}

/// Machine model: memory levels ordered inner to outer, the last one being
/// main memory.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineSpec {
    pub name: String,
    pub levels: Vec<MemLevel>,
    pub cores: u64,
    pub microkernel: Microkernel,
    pub line_size_words: u64,
    pub occupancy: f64,
}

impl MachineSpec {
    /// Number of tile levels, one per non-memory level.
    pub fn tile_levels(&self) -> usize {
        self.levels.len() - 1
    }

    /// Usable capacity of tile level `l` (occupancy applied); infinite if unbounded.
    pub fn effective_capacity(&self, l: usize) -> f64 {
        match self.levels[l].capacity_words {
            Some(c) => self.occupancy * c as f64,
            None => f64::INFINITY,
        }
    }

    /// Bandwidth of the boundary between tile level `l` and the level outside it.
    pub fn boundary_bw(&self, l: usize, parallel: bool) -> f64 {
        let outer = &self.levels[l + 1];
        if parallel && self.is_parallel_shared_boundary(l) {
            outer.bw_to_inner_parallel
        } else {
            outer.bw_to_inner
        }
    }

    fn is_parallel_shared_boundary(&self, l: usize) -> bool {
        match self.shared_split() {
            Some(p) => l + 1 >= p,
            None => false,
        }
    }

    /// Index of the innermost shared tile level (the "L3" of the parallel
    /// model), provided a private tile level sits inside it.
    pub fn shared_split(&self) -> Option<usize> {
        let p = (0..self.tile_levels()).find(|&l| self.levels[l].shared)?;
        (p >= 1).then_some(p)
    }

    pub fn has_register_level(&self) -> bool {
        self.levels.first().map(|l| l.register).unwrap_or(false)
    }

    /// Same machine with every bandwidth multiplied by `factor`.
    pub fn scale_bandwidths(&self, factor: f64) -> MachineSpec {
        let mut m = self.clone();
        for l in &mut m.levels {
            l.bw_to_inner *= factor;
            l.bw_to_inner_parallel *= factor;
        }
        m
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.len() < 2 {
            return Err(Error::invalid(
                "machine",
                "need at least one cache level and a memory level",
            ));
        }
        if self.cores < 1 {
            return Err(Error::invalid("machine", "cores must be ≥ 1"));
        }
        if !(self.occupancy > 0.0 && self.occupancy <= 1.0) {
            return Err(Error::invalid("machine", "occupancy in (0,1]"));
        }
        if self.line_size_words < 1 {
            return Err(Error::invalid("machine", "line_size_words must be ≥ 1"));
        }
        if self.microkernel.k_lanes < 1 || self.microkernel.hw_points < 1 {
            return Err(Error::invalid("machine", "microkernel geometry must be ≥ 1"));
        }
        let mut prev: Option<u64> = None;
        let mut unbounded_seen = false;
        for (i, level) in self.levels.iter().enumerate() {
            if level.register && i != 0 {
                return Err(Error::invalid(
                    "machine",
                    format!("level '{}': only the innermost level can be the register file", level.name),
                ));
            }
            if i > 0 && !(level.bw_to_inner > 0.0 && level.bw_to_inner.is_finite()) {
                return Err(Error::invalid(
                    "machine",
                    format!("level '{}': bandwidth must be positive", level.name),
                ));
            }
            if i > 0 && !(level.bw_to_inner_parallel > 0.0 && level.bw_to_inner_parallel.is_finite())
            {
                return Err(Error::invalid(
                    "machine",
                    format!("level '{}': parallel bandwidth must be positive", level.name),
                ));
            }
            let is_memory = i == self.levels.len() - 1;
            match level.capacity_words {
                Some(c) => {
                    if unbounded_seen {
                        return Err(Error::invalid(
                            "machine",
                            "capacities must increase (bounded level outside an unbounded one)",
                        ));
                    }
                    if c == 0 {
                        return Err(Error::invalid("machine", "capacity must be ≥ 1"));
                    }
                    if let Some(p) = prev {
                        if c <= p {
                            return Err(Error::invalid(
                                "machine",
                                format!(
                                    "capacities must increase: '{}' ({c}) after {p}",
                                    level.name
                                ),
                            ));
                        }
                    }
                    prev = Some(c);
                }
                None if !is_memory => unbounded_seen = true,
                None => {}
            }
        }
        Ok(())
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
        reject_unknown(
            obj,
            "$",
            &[
                "name",
                "levels",
                "cores",
                "microkernel",
                "line_size_words",
                "occupancy",
                "element_bytes",
                "comment",
            ],
        )?;
        let element_bytes = match obj.get("element_bytes") {
            None => None,
            Some(v) => {
                let b = as_u64(v, "$.element_bytes")?;
                if b == 0 {
                    return Err(Error::parse("$.element_bytes", "must be ≥ 1"));
                }
                Some(b)
            }
        };
        let name = obj
            .get("name")
            .and_then(Value::as_str)
            .unwrap_or("machine")
            .to_string();
        let cores = match obj.get("cores") {
            None => return Err(Error::parse("$.cores", "missing field")),
            Some(v) => {
                let c = v
                    .as_i64()
                    .ok_or_else(|| Error::parse("$.cores", "expected an integer"))?;
                if c < 1 {
                    return Err(Error::parse("$.cores", "cores must be ≥ 1"));
                }
                c as u64
            }
        };
        let microkernel = match obj.get("microkernel") {
            None => Microkernel::default(),
            Some(Value::Object(mk)) => {
                reject_unknown(mk, "$.microkernel", &["k_lanes", "hw_points"])?;
                let dflt = Microkernel::default();
                Microkernel {
                    k_lanes: opt_u64(mk, "k_lanes", "$.microkernel.k_lanes")?.unwrap_or(dflt.k_lanes),
                    hw_points: opt_u64(mk, "hw_points", "$.microkernel.hw_points")?
                        .unwrap_or(dflt.hw_points),
                }
            }
            Some(_) => return Err(Error::parse("$.microkernel", "expected an object")),
        };
        let line_size_words = opt_u64(obj, "line_size_words", "$.line_size_words")?.unwrap_or(1);
        let occupancy = field_f64(obj, "occupancy", "$.occupancy")?.unwrap_or(1.0);
        if !(occupancy > 0.0 && occupancy <= 1.0) {
            return Err(Error::parse("$.occupancy", "occupancy in (0,1]"));
        }

        let levels_v = obj
            .get("levels")
            .ok_or_else(|| Error::parse("$.levels", "missing field"))?
            .as_array()
            .ok_or_else(|| Error::parse("$.levels", "expected an array"))?;
        let mut levels = Vec::with_capacity(levels_v.len());
        for (i, lv) in levels_v.iter().enumerate() {
            let base = format!("$.levels[{i}]");
            let lo = lv
                .as_object()
                .ok_or_else(|| Error::parse(&base, "expected an object"))?;
            reject_unknown(
                lo,
                &base,
                &[
                    "name",
                    "capacity_words",
                    "capacity_bytes",
                    "bw_to_inner",
                    "bw_to_inner_parallel",
                    "shared",
                    "register",
                ],
            )?;
            let lname = lo
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::parse(format!("{base}.name"), "missing field"))?
                .to_string();
            let words = opt_u64(lo, "capacity_words", &format!("{base}.capacity_words"))?;
            let bytes = opt_u64(lo, "capacity_bytes", &format!("{base}.capacity_bytes"))?;
            let capacity_words = match (words, bytes) {
                (Some(_), Some(_)) => {
                    return Err(Error::parse(
                        format!("{base}.capacity_bytes"),
                        "give capacity_words or capacity_bytes, not both",
                    ))
                }
                (Some(w), None) => Some(w),
                (None, Some(b)) => {
                    let eb = element_bytes.ok_or_else(|| {
                        Error::parse(
                            format!("{base}.capacity_bytes"),
                            "capacity_bytes requires element_bytes",
                        )
                    })?;
                    Some(b / eb)
                }
                (None, None) => None,
            };
            let is_memory = i + 1 == levels_v.len();
            if capacity_words.is_none() && !is_memory && i + 2 != levels_v.len() {
                return Err(Error::parse(
                    format!("{base}.capacity_words"),
                    "missing field (only the outermost cache and memory may be unbounded)",
                ));
            }
            let bw_path = format!("{base}.bw_to_inner");
            let bw = field_f64(lo, "bw_to_inner", &bw_path)?;
            let bw_to_inner = match (i, bw) {
                (0, None) => 1.0,
                (_, None) => return Err(Error::parse(bw_path, "missing bandwidth")),
                (_, Some(b)) if !(b > 0.0) => {
                    return Err(Error::parse(bw_path, "bandwidth must be positive"))
                }
                (_, Some(b)) => b,
            };
            let bwp_path = format!("{base}.bw_to_inner_parallel");
            let bw_to_inner_parallel = match field_f64(lo, "bw_to_inner_parallel", &bwp_path)? {
                None => bw_to_inner,
                Some(b) if !(b > 0.0) => {
                    return Err(Error::parse(bwp_path, "bandwidth must be positive"))
                }
                Some(b) => b,
            };
            let flag = |key: &str| -> Result<bool> {
                match lo.get(key) {
                    None => Ok(false),
                    Some(Value::Bool(b)) => Ok(*b),
                    Some(_) => Err(Error::parse(format!("{base}.{key}"), "expected a boolean")),
                }
            };
            levels.push(MemLevel {
                name: lname,
                capacity_words,
                bw_to_inner,
                bw_to_inner_parallel,
                shared: flag("shared")?,
                register: flag("register")?,
            });
        }
        let m = MachineSpec {
            name,
            levels,
            cores,
            microkernel,
            line_size_words,
            occupancy,
        };
        m.validate()?;
        Ok(m)
    }

    /// Canonical JSON form (capacities in words, all defaults explicit).
    pub fn to_json(&self) -> Value {
        let levels: Vec<Value> = self
            .levels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let mut o = Map::new();
                o.insert("name".into(), Value::from(l.name.clone()));
                if let Some(c) = l.capacity_words {
                    o.insert("capacity_words".into(), Value::from(c));
                }
                if i > 0 {
                    o.insert("bw_to_inner".into(), Value::from(l.bw_to_inner));
                    o.insert(
                        "bw_to_inner_parallel".into(),
                        Value::from(l.bw_to_inner_parallel),
                    );
                }
                o.insert("shared".into(), Value::from(l.shared));
                if l.register {
                    o.insert("register".into(), Value::from(true));
                }
                Value::Object(o)
            })
            .collect();
        serde_json::json!({
            "name": self.name,
            "levels": levels,
            "cores": self.cores,
            "microkernel": {
                "k_lanes": self.microkernel.k_lanes,
                "hw_points": self.microkernel.hw_points,
            },
            "line_size_words": self.line_size_words,
            "occupancy": self.occupancy,
        })
    }
}

fn opt_u64(obj: &Map<String, Value>, name: &str, path: &str) -> Result<Option<u64>> {
    match obj.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => {
            let u = as_u64(v, path)?;
            if u == 0 {
                return Err(Error::parse(path, "must be ≥ 1"));
            }
            Ok(Some(u))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const I7: &str = r#"{
        "name": "i7-like",
        "cores": 8,
        "levels": [
            {"name": "L1", "capacity_words": 8192},
            {"name": "L2", "capacity_words": 65536, "bw_to_inner": 32},
            {"name": "L3", "capacity_words": 3145728, "bw_to_inner": 16, "shared": true},
            {"name": "Mem", "bw_to_inner": 4, "bw_to_inner_parallel": 8}
        ]
    }"#;

    #[test]
    fn accepts_i7_like() {
        let m = MachineSpec::from_json_str(I7).unwrap();
        assert_eq!(m.tile_levels(), 3);
        assert_eq!(m.cores, 8);
        assert_eq!(m.levels[2].capacity_words, Some(3_145_728));
        assert_eq!(m.shared_split(), Some(2));
        assert_eq!(m.boundary_bw(2, true), 8.0);
        assert_eq!(m.boundary_bw(2, false), 4.0);
        assert_eq!(m.boundary_bw(0, true), 32.0);
        assert_eq!(m.microkernel, Microkernel::default());
    }

    #[test]
    fn converts_bytes() {
        let m = MachineSpec::from_json_str(
            r#"{"cores":1,"element_bytes":4,"levels":[
                {"name":"L1","capacity_bytes":32768},
                {"name":"Mem","bw_to_inner":1}]}"#,
        )
        .unwrap();
        assert_eq!(m.levels[0].capacity_words, Some(8192));
    }

    #[test]
    fn rejects_decreasing_capacity() {
        let err = MachineSpec::from_json_str(
            r#"{"cores":1,"levels":[
                {"name":"L1","capacity_words":8192},
                {"name":"L2","capacity_words":4096,"bw_to_inner":2},
                {"name":"Mem","bw_to_inner":1}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("capacities must increase"), "{err}");
    }

    #[test]
    fn rejects_bad_occupancy_cores_bandwidth() {
        let base = |extra: &str| {
            format!(
                r#"{{"levels":[{{"name":"L1","capacity_words":64}},{{"name":"Mem","bw_to_inner":1}}]{extra}}}"#
            )
        };
        let err = MachineSpec::from_json_str(&base(r#","cores":1,"occupancy":0"#)).unwrap_err();
        assert!(err.to_string().contains("occupancy in (0,1]"));
        let err = MachineSpec::from_json_str(&base(r#","cores":0"#)).unwrap_err();
        assert!(err.to_string().contains("cores"));
        let err = MachineSpec::from_json_str(
            r#"{"cores":1,"levels":[{"name":"L1","capacity_words":64},{"name":"Mem"}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("missing bandwidth"));
    }

    #[test]
    fn json_round_trip() {
        let m = MachineSpec::from_json_str(I7).unwrap();
        let again = MachineSpec::from_json(&m.to_json()).unwrap();
        assert_eq!(m, again);
    }
}
