use std::time::Instant;

use convtile::cost::{capacity_lhs_lines, dv_general, dv_multilevel, CostParams, EvalOptions, TripMode};
use convtile::model::{CostReport, DimVec, DvBreakdown, MachineSpec, Permutation, ProblemSpec, TileConfig};
use convtile::optimizer::{algorithm1, check_config, default_nlp, OptimizerOptions, SearchMode};
use convtile::pruning::{classes, verify_dominance, ClassId, DominanceReport, PermClass, TileGrid};
use convtile::sim::{
    check_assumption, sample_configs, simulate, simulate_levels, validate_model, AssumptionCheck, LevelSim,
    SimConfig, SimResult, ValidationReport, DEFAULT_TRACE_BUDGET,
};
use convtile::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::{CostArgs, EnumerateArgs, OptimizeArgs, SimulateArgs, ValidateArgs};
use crate::document::{machine_digest, ScheduleDocument};
use crate::error::{CliError, CliResult};
use crate::input::{
    load_machine, load_problem, machine_capacity, parse_capacity, parse_orders, parse_perm, parse_perm_set,
    parse_tile, parse_tiles, read_json, single_level_machine,
};

fn override_cores(machine: &mut MachineSpec, cores: Option<u64>) -> CliResult<()> {
    if let Some(c) = cores {
        if c == 0 {
            return Err(CliError::usage("--cores must be at least 1"));
        }
        machine.cores = c;
    }
    Ok(())
}

pub fn optimize(a: &OptimizeArgs) -> CliResult<ScheduleDocument> {
    let problem = load_problem(&a.problem)?;
    let mut machine = load_machine(&a.machine)?;
    override_cores(&mut machine, a.cores)?;
    let mut mode: SearchMode = a.mode.parse().map_err(|e: Error| CliError::usage(e.to_string()))?;
    if let (SearchMode::CrossClass { .. }, Some(budget)) = (mode, a.budget) {
        mode = SearchMode::CrossClass { budget };
    }
    let mut nlp = default_nlp();
    nlp.seed = a.seed;
    if let Some(s) = a.starts {
        if s == 0 {
            return Err(CliError::usage("--starts must be at least 1"));
        }
        nlp.starts = s;
    }
    if let Some(t) = a.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::usage("--tol must be positive"));
        }
        nlp.tol = t;
    }
    if a.line_size == Some(0) {
        return Err(CliError::usage("--line-size must be at least 1"));
    }
    let opts = OptimizerOptions {
        mode,
        parallel: a.parallel || a.cores.is_some(),
        nlp,
        fix_register: !a.search_register,
        line: a.line_size,
    };
    let start = Instant::now();
    let schedule = algorithm1(&problem, &machine, &opts)?;
    let wall_ms = a.timing.then(|| start.elapsed().as_millis() as u64);
    let line = a.line_size.unwrap_or(machine.line_size_words);
    Ok(ScheduleDocument::new(&schedule, &problem, &machine, line, nlp.tol, wall_ms))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostOutput {
    pub machine: String,
    pub orders: Vec<Permutation>,
    /// Class of each level's order.
    pub classes: Vec<Option<ClassId>>,
    pub trips: &'static str,
    pub parallel: bool,
    pub cost: CostReport,
    /// Set when re-evaluating a schedule document: whether the stored cost
    /// was reproduced exactly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matches_stored: Option<bool>,
}

fn cost_output(
    machine: &MachineSpec,
    orders: &[convtile::cost::LoopOrder],
    opts: EvalOptions,
    cost: CostReport,
    matches_stored: Option<bool>,
) -> CostOutput {
    let perms: Vec<Permutation> = orders.iter().map(|o| o.permutation()).collect();
    CostOutput {
        machine: machine.name.clone(),
        classes: perms.iter().map(ClassId::of).collect(),
        orders: perms,
        trips: match opts.trips {
            TripMode::Ceil => "ceil",
            TripMode::Relaxed => "relaxed",
        },
        parallel: opts.parallel,
        cost,
        matches_stored,
    }
}

pub fn cost(a: &CostArgs) -> CliResult<CostOutput> {
    if let Some(path) = &a.schedule {
        let doc: ScheduleDocument = serde_json::from_value(read_json(path)?)
            .map_err(|e| CliError::input(path.display().to_string(), e))?;
        let mpath = a
            .machine
            .as_ref()
            .ok_or_else(|| CliError::usage("--schedule needs the machine it was optimized for (-m)"))?;
        let mut machine = load_machine(mpath)?;
        machine.cores = doc.cores;
        if machine_digest(&machine) != doc.machine_digest {
            return Err(CliError::input(
                mpath.display().to_string(),
                "machine does not match the schedule's machine_digest",
            ));
        }
        let problem = match &a.problem {
            Some(p) => load_problem(p)?,
            None => doc.problem_spec()?,
        };
        let cfg = doc.tile_config(&machine)?;
        let violations = check_config(&problem, &machine, &cfg, doc.parallel, Some(doc.line_size_words));
        if !violations.is_empty() {
            return Err(CliError::Violations { violations });
        }
        let report = doc.evaluate(&problem, &machine)?;
        let opts = EvalOptions {
            trips: TripMode::Ceil,
            line: Some(doc.line_size_words),
            parallel: doc.parallel,
        };
        let same = report == doc.cost;
        return Ok(cost_output(&machine, &doc.orders(), opts, report, Some(same)));
    }

    let problem = load_problem(
        a.problem
            .as_ref()
            .ok_or_else(|| CliError::usage("cost needs a problem (-p)"))?,
    )?;
    let mut machine = match (&a.machine, &a.capacity) {
        (Some(m), _) => load_machine(m)?,
        (None, Some(c)) => single_level_machine(parse_capacity(c)?)?,
        (None, None) => return Err(CliError::usage("cost needs -m or --capacity")),
    };
    override_cores(&mut machine, a.cores)?;
    let nl = machine.tile_levels();
    let orders = parse_orders(&a.perm, &a.class, nl)?;
    let tiles = parse_tiles(
        a.tiles
            .as_deref()
            .ok_or_else(|| CliError::usage("cost needs --tiles"))?,
    )?;
    let chunks = a.chunks.as_deref().map(parse_tile).transpose()?;
    let parallel = a.parallel || a.cores.is_some();
    let cfg = TileConfig {
        levels: tiles,
        parallel_chunks: chunks,
    };
    let mut violations = check_config(&problem, &machine, &cfg, parallel, a.line_size);
    if a.relaxed {
        // fractional tiles are the point of relaxed evaluation
        violations.retain(|v| !v.contains("non-integer"));
    }
    if !violations.is_empty() {
        return Err(CliError::Violations { violations });
    }
    let opts = EvalOptions {
        trips: if a.relaxed { TripMode::Relaxed } else { TripMode::Ceil },
        line: a.line_size,
        parallel,
    };
    let report = dv_multilevel(&orders, &cfg, &problem, &machine, opts)?;
    Ok(cost_output(&machine, &orders, opts, report, None))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassCatalog {
    pub count: usize,
    pub total_members: usize,
    pub classes: Vec<PermClass>,
}

pub fn catalog() -> ClassCatalog {
    let classes = classes();
    ClassCatalog {
        count: classes.len(),
        total_members: classes.iter().map(|c| c.members).sum(),
        classes,
    }
}

/// One evaluated (order, tile) pair; also the input format of `validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub perm: Permutation,
    #[serde(default)]
    pub class: Option<ClassId>,
    pub tiles: DimVec,
    #[serde(default)]
    pub dv: Option<DvBreakdown>,
    #[serde(default)]
    pub total: Option<f64>,
}

impl GridEntry {
    fn eval(perm: Permutation, tiles: DimVec, n: &DimVec, params: &CostParams) -> Self {
        let dv = dv_general(&perm, &tiles, n, params);
        GridEntry {
            perm,
            class: ClassId::of(&perm),
            tiles,
            dv: Some(dv),
            total: Some(dv.total()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerateOutput {
    pub problem: Value,
    pub grid: String,
    pub perms: String,
    pub capacity_words: Option<u64>,
    pub line_size_words: u64,
    pub grid_tiles: u128,
    pub feasible_tiles: usize,
    pub evaluated: u128,
    pub best: GridEntry,
    /// Best tile per order (all eight representatives, or per class when
    /// every order was swept).
    pub per_class: Vec<GridEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<GridEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dominance: Option<DominanceReport>,
}

fn parse_grid(s: &str, problem: &ProblemSpec) -> CliResult<TileGrid> {
    if s == "divisors" {
        return Ok(TileGrid::divisors(problem));
    }
    if let Some(k) = s.strip_prefix("step:") {
        return match k.parse::<u64>() {
            Ok(k) if k >= 1 => Ok(TileGrid::stepped(problem, k)),
            _ => Err(CliError::usage(format!("bad grid step in {s:?}"))),
        };
    }
    Err(CliError::usage(format!("--grid must be `divisors` or `step:K`, got {s:?}")))
}

fn level_capacity(
    machine: Option<&std::path::Path>,
    level: Option<&str>,
    capacity: Option<&str>,
) -> CliResult<(Option<u64>, Option<MachineSpec>)> {
    match (machine, capacity) {
        (Some(m), _) => {
            let machine = load_machine(m)?;
            Ok((machine_capacity(&machine, level)?, Some(machine)))
        }
        (None, Some(c)) => Ok((parse_capacity(c)?, None)),
        (None, None) => Ok((None, None)),
    }
}

pub fn enumerate(a: &EnumerateArgs) -> CliResult<EnumerateOutput> {
    let problem = load_problem(&a.problem)?;
    let (capacity, machine) = level_capacity(a.machine.as_deref(), a.level.as_deref(), a.capacity.as_deref())?;
    let line = a
        .line_size
        .or(machine.as_ref().map(|m| m.line_size_words))
        .unwrap_or(1);
    if line == 0 {
        return Err(CliError::usage("--line-size must be at least 1"));
    }
    let grid = parse_grid(&a.grid, &problem)?;
    let perms = parse_perm_set(&a.perms)?;
    let params = CostParams::new(problem.strides).with_line(line);
    let n = problem.extents();
    if grid.len() > a.max_evals {
        return Err(Error::Budget {
            what: "tile grid",
            required: grid.len(),
            budget: a.max_evals,
        }
        .into());
    }
    let tiles: Vec<DimVec> = grid
        .tiles()
        .filter(|t| capacity.is_none_or(|c| capacity_lhs_lines(t, &params) <= c as f64))
        .collect();
    if tiles.is_empty() {
        return Err(Error::Infeasible(format!(
            "no tile of the {} grid fits capacity {}",
            a.grid,
            capacity.map_or("inf".to_string(), |c| c.to_string())
        ))
        .into());
    }
    let pairs = perms.len() as u128 * tiles.len() as u128;
    let mut out = EnumerateOutput {
        problem: problem.to_json(),
        grid: a.grid.clone(),
        perms: a.perms.clone(),
        capacity_words: capacity,
        line_size_words: line,
        grid_tiles: grid.len(),
        feasible_tiles: tiles.len(),
        evaluated: 0,
        best: GridEntry::eval(perms[0], tiles[0], &n, &params),
        per_class: Vec::new(),
        entries: None,
        dominance: None,
    };

    if let Some(count) = a.samples {
        if count == 0 {
            return Err(CliError::usage("--samples must be at least 1"));
        }
        let total = pairs as usize;
        let mut picks: Vec<usize> = if count >= total {
            (0..total).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            rand::seq::index::sample(&mut rng, total, count).into_vec()
        };
        picks.sort_unstable();
        let entries: Vec<GridEntry> = picks
            .iter()
            .map(|&i| GridEntry::eval(perms[i / tiles.len()], tiles[i % tiles.len()], &n, &params))
            .collect();
        out.evaluated = entries.len() as u128;
        out.best = best_entry(&entries).clone();
        out.per_class = per_class_best(&entries);
        out.entries = Some(entries);
        return Ok(out);
    }

    if pairs > a.max_evals {
        return Err(Error::Budget {
            what: "enumeration",
            required: pairs,
            budget: a.max_evals,
        }
        .into());
    }
    out.evaluated = pairs;
    if a.perms == "all" {
        if line != 1 {
            return Err(CliError::usage("the full-order sweep models unit cache lines; drop --line-size"));
        }
        let report = verify_dominance(&problem, &grid, capacity.map(|c| c as f64))?;
        // on ties report the class representative rather than an arbitrary member
        out.best = if report.holds {
            GridEntry::eval(report.class_argmin.representative(), report.class_tile, &n, &params)
        } else {
            GridEntry::eval(report.global_argmin, report.global_tile, &n, &params)
        };
        out.per_class = ClassId::ALL
            .iter()
            .filter_map(|c| {
                report
                    .per_perm
                    .iter()
                    .filter(|g| g.class == Some(*c))
                    .min_by(|x, y| x.min.total_cmp(&y.min))
                    .map(|g| (g.perm, g.min))
            })
            .map(|(perm, _)| best_tile_for(perm, &tiles, &n, &params))
            .collect();
        out.dominance = Some(report);
    } else {
        out.per_class = perms
            .iter()
            .map(|&p| best_tile_for(p, &tiles, &n, &params))
            .collect();
        out.best = best_entry(&out.per_class).clone();
    }
    Ok(out)
}

fn best_entry(entries: &[GridEntry]) -> &GridEntry {
    // first minimum, so ties keep enumeration order
    let mut best = &entries[0];
    for e in entries {
        if e.total.unwrap() < best.total.unwrap() {
            best = e;
        }
    }
    best
}

fn best_tile_for(perm: Permutation, tiles: &[DimVec], n: &DimVec, params: &CostParams) -> GridEntry {
    let mut best = GridEntry::eval(perm, tiles[0], n, params);
    for t in &tiles[1..] {
        let total = dv_general(&perm, t, n, params).total();
        if total < best.total.unwrap() {
            best = GridEntry::eval(perm, *t, n, params);
        }
    }
    best
}

fn per_class_best(entries: &[GridEntry]) -> Vec<GridEntry> {
    ClassId::ALL
        .iter()
        .filter_map(|c| {
            let members: Vec<GridEntry> = entries.iter().filter(|e| e.class == Some(*c)).cloned().collect();
            (!members.is_empty()).then(|| best_entry(&members).clone())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateOutput {
    pub problem: Value,
    #[serde(flatten)]
    pub report: ValidationReport,
}

pub fn validate(a: &ValidateArgs) -> CliResult<ValidateOutput> {
    let problem = load_problem(&a.problem)?;
    let (mut capacity, _) = level_capacity(a.machine.as_deref(), a.level.as_deref(), a.capacity.as_deref())?;
    let configs: Vec<(Permutation, DimVec)> = if let Some(path) = &a.from_enumerate {
        let v = read_json(path)?;
        if a.capacity.is_none() && a.machine.is_none() {
            capacity = v.get("capacity_words").and_then(Value::as_u64);
        }
        let entries = v
            .get("entries")
            .cloned()
            .ok_or_else(|| CliError::input(path.display().to_string(), "no `entries`; run enumerate with --samples"))?;
        parse_entries(entries, &path.display().to_string())?
    } else if let Some(path) = &a.configs {
        parse_entries(read_json(path)?, &path.display().to_string())?
    } else if let Some(count) = a.samples {
        let cap = capacity.ok_or_else(|| CliError::usage("--samples needs a finite capacity"))?;
        let perms = parse_perm_set(&a.perms)?;
        sample_configs(&problem, cap, &perms, count, a.seed, a.require_assumption, count.saturating_mul(1000))
    } else {
        return Err(CliError::usage("give --from-enumerate, --configs or --samples"));
    };
    if configs.is_empty() {
        return Err(Error::Infeasible("no configurations to validate".into()).into());
    }
    let capacity = capacity.unwrap_or(u64::MAX);
    let budget = a.budget.unwrap_or(DEFAULT_TRACE_BUDGET);
    Ok(ValidateOutput {
        problem: problem.to_json(),
        report: validate_model(&problem, capacity, &configs, budget),
    })
}

fn parse_entries(v: Value, path: &str) -> CliResult<Vec<(Permutation, DimVec)>> {
    let entries: Vec<GridEntry> = serde_json::from_value(v).map_err(|e| CliError::input(path, e))?;
    Ok(entries.into_iter().map(|e| (e.perm, e.tiles)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SimulateOutput {
    Single {
        perm: Permutation,
        tiles: DimVec,
        capacity_words: Option<u64>,
        model: DvBreakdown,
        sim: SimResult,
        assumption: AssumptionCheck,
    },
    Levels {
        model: CostReport,
        levels: Vec<LevelSim>,
    },
}

pub fn simulate_cmd(a: &SimulateArgs) -> CliResult<SimulateOutput> {
    let budget = a.budget.unwrap_or(DEFAULT_TRACE_BUDGET);
    if let Some(path) = &a.schedule {
        let doc: ScheduleDocument = serde_json::from_value(read_json(path)?)
            .map_err(|e| CliError::input(path.display().to_string(), e))?;
        let mut machine = load_machine(a.machine.as_ref().expect("clap requires --machine"))?;
        machine.cores = doc.cores;
        let problem = match &a.problem {
            Some(p) => load_problem(p)?,
            None => doc.problem_spec()?,
        };
        if doc.parallel {
            return Err(CliError::usage("only serial schedules can be simulated"));
        }
        let cfg = doc.tile_config(&machine)?;
        let levels = simulate_levels(&doc.orders(), &cfg, &problem, &machine, budget)?;
        return Ok(SimulateOutput::Levels {
            model: doc.cost,
            levels,
        });
    }
    let problem = load_problem(
        a.problem
            .as_ref()
            .ok_or_else(|| CliError::usage("simulate needs a problem (-p)"))?,
    )?;
    let perm = parse_perm(a.perm.as_deref().ok_or_else(|| CliError::usage("simulate needs --perm"))?)?;
    let tiles = parse_tile(a.tiles.as_deref().ok_or_else(|| CliError::usage("simulate needs --tiles"))?)?;
    let capacity = parse_capacity(
        a.capacity
            .as_deref()
            .ok_or_else(|| CliError::usage("simulate needs --capacity"))?,
    )?;
    let cap_words = capacity.unwrap_or(u64::MAX);
    let mut cfg = SimConfig::new(problem.clone(), perm, tiles, cap_words);
    cfg.budget = budget;
    let sim = simulate(&cfg)?;
    let params = CostParams::new(problem.strides);
    Ok(SimulateOutput::Single {
        perm,
        tiles,
        capacity_words: capacity,
        model: dv_general(&perm, &tiles, &problem.extents(), &params),
        assumption: check_assumption(&problem, &perm, &tiles, cap_words as f64),
        sim,
    })
}
