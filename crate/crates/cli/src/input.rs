use std::path::Path;

use convtile::cost::LoopOrder;
use convtile::model::{Dim, DimVec, MachineSpec, Permutation, ProblemSpec};
use convtile::pruning::ClassId;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

pub fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::input(path.display().to_string(), e))
}

pub fn load_problem(path: &Path) -> CliResult<ProblemSpec> {
    ProblemSpec::from_json(&read_json(path)?)
        .map_err(|e| CliError::input(path.display().to_string(), e))
}

pub fn load_machine(path: &Path) -> CliResult<MachineSpec> {
    MachineSpec::from_json(&read_json(path)?)
        .map_err(|e| CliError::input(path.display().to_string(), e))
}

/// `None` for `inf`, otherwise a positive word count.
pub fn parse_capacity(s: &str) -> CliResult<Option<u64>> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
        return Ok(None);
    }
    match s.parse::<u64>() {
        Ok(c) if c > 0 => Ok(Some(c)),
        _ => Err(CliError::usage(format!(
            "capacity must be a positive integer or `inf`, got {s:?}"
        ))),
    }
}

/// One cache level of `capacity` words above unit-bandwidth memory.
pub fn single_level_machine(capacity: Option<u64>) -> CliResult<MachineSpec> {
    let mut cache = json!({ "name": "Cache" });
    if let Some(c) = capacity {
        cache["capacity_words"] = json!(c);
    }
    let v = json!({
        "name": "single-level",
        "cores": 1,
        "levels": [cache, { "name": "Mem", "bw_to_inner": 1.0 }],
    });
    Ok(MachineSpec::from_json(&v)?)
}

/// Capacity of level `name` (default: innermost) in words, occupancy applied.
pub fn machine_capacity(machine: &MachineSpec, name: Option<&str>) -> CliResult<Option<u64>> {
    let l = match name {
        None => 0,
        Some(n) => machine.levels[..machine.tile_levels()]
            .iter()
            .position(|l| l.name == n)
            .ok_or_else(|| CliError::usage(format!("machine has no tile level named {n:?}")))?,
    };
    let c = machine.effective_capacity(l);
    Ok(c.is_finite().then(|| c.floor() as u64))
}

fn parse_dimvec_text(s: &str) -> CliResult<DimVec> {
    let vals: Vec<&str> = s.split(',').map(str::trim).collect();
    if vals.len() != 7 {
        return Err(CliError::usage(format!(
            "a tile needs 7 values n,k,c,r,s,h,w, got {:?}",
            s
        )));
    }
    let mut t = DimVec::ONES;
    for (d, v) in Dim::ALL.into_iter().zip(vals) {
        t[d] = v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite() && *x >= 1.0)
            .ok_or_else(|| CliError::usage(format!("tile value {v:?} for {d} is not a number >= 1")))?;
    }
    Ok(t)
}

/// Tiles per level, innermost first: `n,k,c,r,s,h,w;...` or JSON.
pub fn parse_tiles(s: &str) -> CliResult<Vec<DimVec>> {
    let s = s.trim();
    if s.starts_with('{') || s.starts_with('[') {
        let v: Value = serde_json::from_str(s).map_err(|e| CliError::usage(format!("--tiles: {e}")))?;
        let list = match v {
            Value::Array(items) => items,
            other => vec![other],
        };
        return list
            .into_iter()
            .map(|item| {
                serde_json::from_value::<DimVec>(item).map_err(|e| CliError::usage(format!("--tiles: {e}")))
            })
            .collect();
    }
    s.split(';')
        .filter(|l| !l.trim().is_empty())
        .map(parse_dimvec_text)
        .collect()
}

pub fn parse_tile(s: &str) -> CliResult<DimVec> {
    let mut levels = parse_tiles(s)?;
    if levels.len() != 1 {
        return Err(CliError::usage(format!(
            "expected a single tile, got {} levels",
            levels.len()
        )));
    }
    Ok(levels.remove(0))
}

pub fn parse_perm(s: &str) -> CliResult<Permutation> {
    s.parse::<Permutation>().map_err(|e| CliError::usage(e.to_string()))
}

pub fn parse_class(s: &str) -> CliResult<ClassId> {
    s.parse::<ClassId>().map_err(|e| CliError::usage(e.to_string()))
}

/// One loop order per level from repeated `--perm` or `--class` flags; a
/// single value is used at every level.
pub fn parse_orders(perms: &[String], classes: &[String], levels: usize) -> CliResult<Vec<LoopOrder>> {
    let orders: Vec<LoopOrder> = if !perms.is_empty() {
        perms
            .iter()
            .map(|p| parse_perm(p).map(LoopOrder::Perm))
            .collect::<CliResult<_>>()?
    } else if !classes.is_empty() {
        classes
            .iter()
            .map(|c| parse_class(c).map(LoopOrder::Class))
            .collect::<CliResult<_>>()?
    } else {
        return Err(CliError::usage("give a loop order with --perm or --class"));
    };
    match orders.len() {
        1 => Ok(vec![orders[0]; levels]),
        n if n == levels => Ok(orders),
        n => Err(CliError::usage(format!(
            "got {n} loop orders for {levels} tile levels"
        ))),
    }
}

/// `classes` or `all`.
pub fn parse_perm_set(s: &str) -> CliResult<Vec<Permutation>> {
    match s {
        "classes" => Ok(ClassId::ALL.iter().map(|c| c.representative()).collect()),
        "all" => Ok(Permutation::all()),
        other => Err(CliError::usage(format!(
            "--perms must be `classes` or `all`, got {other:?}"
        ))),
    }
}
