//! Subcommand implementations. Each returns an [`Outcome`]; errors map to
//! exit code 1.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use ma_core::geometry::{intersect_constraints, rasterize_area_oracle, seed_box};
use ma_core::measure::{discretize_measure, weak_convergence_report};
use ma_core::operators::{self, OperatorKind, Stencil};
use ma_core::solver::{solve, solve_mixed};
use ma_core::{BoundaryData, LatticeDomain, MeshFunction, SlabConstraint, SolveReport};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{load_json, ProblemConfig, Scheme, StudyConfig, SweepConfig};
use crate::error::{CliError, Result};
use crate::output::{ensure_dir, fmt_f64, write_json, Table};

/// Successful command result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    NotConverged,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Done => 0,
            Outcome::NotConverged => 2,
        }
    }
}

pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) => o.exit_code(),
        Err(_) => 1,
    }
}

/// A solved problem with its lattice and discretized data.
pub struct Solved {
    pub domain: Arc<LatticeDomain>,
    pub report: SolveReport,
    pub warnings: Vec<String>,
    pub runtime_s: f64,
}

pub fn solve_problem(cfg: &ProblemConfig) -> Result<Solved> {
    let d = cfg.lattice()?;
    let src = discretize_measure(&cfg.measure, &d)?;
    let start = Instant::now();
    let report = match cfg.scheme {
        Scheme::Standard => solve(&d, &src, &cfg.boundary, &cfg.solver)?,
        Scheme::Mixed => solve_mixed(&d, &src.dirac_points, &src, &cfg.boundary, &cfg.solver)?,
    };
    Ok(Solved {
        domain: d,
        report,
        warnings: src.warnings,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

fn outcome(converged: bool) -> Outcome {
    if converged {
        Outcome::Done
    } else {
        Outcome::NotConverged
    }
}

/// `solve`: writes `solution.csv`, `measures.csv` and `report.json`.
pub fn cmd_solve(config: &Path, out: &Path) -> Result<Outcome> {
    let cfg = ProblemConfig::load(config)?;
    let solved = solve_problem(&cfg)?;
    ensure_dir(out)?;
    let d = &solved.domain;
    let v = &solved.report.solution;

    let mut table = Table::create(out.join("solution.csv"), &["x", "y", "u"])?;
    for i in 0..d.len() {
        let c = d.coords(i);
        table.row([fmt_f64(c[0]), fmt_f64(c[1]), fmt_f64(v.value(i))])?;
    }
    table.finish()?;

    let op = solved.report.config.operator;
    let stencil = Stencil::new(d.clone(), solved.report.config.policy)?;
    let values = stencil.evaluate_all(op, v, solved.report.config.angle_refinement);
    let mut table = Table::create(out.join("measures.csv"), &["x", "y", "m"])?;
    for (&i, m) in d.interior().iter().zip(values) {
        let c = d.coords(i);
        table.row([fmt_f64(c[0]), fmt_f64(c[1]), fmt_f64(m)])?;
    }
    table.finish()?;

    let mut echo = cfg.at_h(d.h());
    echo.solver = solved.report.config.clone();
    let report = json!({
        "config": echo,
        "versions": versions(),
        "h": d.h(),
        "interior_points": d.interior().len(),
        "measure_operator": op,
        "discretization_warnings": solved.warnings,
        "report": solved.report,
    });
    write_json(&out.join("report.json"), &report)?;
    Ok(outcome(solved.report.converged))
}

fn versions() -> serde_json::Value {
    json!({ "ma-core": ma_core::VERSION, "ma-cli": env!("CARGO_PKG_VERSION") })
}

/// One row of `convergence.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub h: f64,
    pub max_err_k: f64,
    pub measure_gap: f64,
    pub iters: usize,
    pub runtime_s: f64,
    pub converged: bool,
}

/// Runs every mesh of a study and returns its rows.
pub fn run_study(cfg: &StudyConfig) -> Result<Vec<StudyRow>> {
    let expected = cfg.base.measure.total_mass(&cfg.base.domain.shape());
    let mut rows = Vec::with_capacity(cfg.h_list.len());
    for &h in &cfg.h_list {
        let solved = solve_problem(&cfg.problem_at(h))?;
        rows.push(StudyRow {
            h,
            max_err_k: error_on(&solved.report.solution, &cfg.reference, &cfg.compact_subset),
            measure_gap: (solved.report.measure_total - expected).abs(),
            iters: solved.report.iterations,
            runtime_s: solved.runtime_s,
            converged: solved.report.converged,
        });
    }
    Ok(rows)
}

/// `max |v - r_h(u)|` over lattice points in the closed box.
pub fn error_on(v: &MeshFunction, reference: &BoundaryData, k: &ma_core::BorelBox) -> f64 {
    let d = v.domain();
    (0..d.len())
        .filter(|&i| k.contains(d.coords(i)))
        .map(|i| (v.value(i) - reference.eval(d.coords(i))).abs())
        .fold(0.0, f64::max)
}

/// `study`: writes `convergence.csv`.
pub fn cmd_study(config: &Path, out: &Path) -> Result<Outcome> {
    let cfg = StudyConfig::load(config)?;
    let rows = run_study(&cfg)?;
    ensure_dir(out)?;
    let mut table = Table::create(
        out.join("convergence.csv"),
        &["h", "max_err_K", "measure_gap", "iters", "runtime_s"],
    )?;
    for r in &rows {
        table.row([
            fmt_f64(r.h),
            fmt_f64(r.max_err_k),
            fmt_f64(r.measure_gap),
            r.iters.to_string(),
            fmt_f64(r.runtime_s),
        ])?;
    }
    table.finish()?;
    Ok(outcome(rows.iter().all(|r| r.converged)))
}

/// Values printed by `operator`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorRecord {
    pub point: [i64; 2],
    pub x: [f64; 2],
    pub ma0: Option<f64>,
    pub ma1: Option<f64>,
    pub ma2: Option<f64>,
    pub ma3: Option<f64>,
    /// `None` when the 9-point stencil is incomplete.
    pub nine_point_product: Option<f64>,
    pub lambda1: Option<f64>,
}

/// Parses a catalog function: a bare name (`cone`) or a JSON object.
pub fn parse_function(spec: &str) -> Result<BoundaryData> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        json!({ "name": spec }).to_string()
    };
    let g: BoundaryData =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("function `{spec}`: {e}")))?;
    g.validate()?;
    Ok(g)
}

/// Evaluates the operators at lattice point `point` for the restriction of
/// `function` (the config's boundary function when `None`). `only` limits the
/// record to one operator.
pub fn operator_record(
    cfg: &ProblemConfig,
    function: Option<&BoundaryData>,
    point: [i64; 2],
    only: Option<OperatorKind>,
) -> Result<OperatorRecord> {
    let d = cfg.lattice()?;
    let g = function.unwrap_or(&cfg.boundary);
    let v = g.restrict(&d);
    let idx = d.interior_index(point)?;
    let policy = cfg.solver.policy;
    let want = |k: OperatorKind| only.map_or(true, |o| o == k);
    let pick = |k: OperatorKind, f: &dyn Fn() -> ma_core::Result<f64>| -> Result<Option<f64>> {
        if want(k) {
            Ok(Some(f()?))
        } else {
            Ok(None)
        }
    };
    let nine = if want(OperatorKind::NinePointProduct) {
        operators::nine_point_product(&v, point).ok()
    } else {
        None
    };
    Ok(OperatorRecord {
        point,
        x: d.coords(idx),
        ma0: pick(OperatorKind::Ma0, &|| operators::ma0(&v, point, policy))?,
        ma1: pick(OperatorKind::Ma1, &|| operators::ma1(&v, point, policy))?,
        ma2: pick(OperatorKind::Ma2, &|| operators::ma2(&v, point, policy))?,
        ma3: pick(OperatorKind::Ma3, &|| {
            operators::ma3(&v, point, policy, cfg.solver.angle_refinement)
        })?,
        nine_point_product: nine,
        lambda1: if only.is_none() {
            Some(operators::lambda1(&v, point, policy)?)
        } else {
            None
        },
    })
}

/// `operator`: prints the JSON record to stdout.
pub fn cmd_operator(
    config: &Path,
    function: Option<&str>,
    only: Option<OperatorKind>,
    point: [i64; 2],
) -> Result<Outcome> {
    let cfg = ProblemConfig::load(config)?;
    let g = function.map(parse_function).transpose()?;
    let record = operator_record(&cfg, g.as_ref(), point, only)?;
    println!("{}", serde_json::to_string_pretty(&record).expect("record serializes"));
    Ok(Outcome::Done)
}

/// `measure-check`: solves every mesh of the sweep and writes
/// `weak_convergence.csv`.
pub fn cmd_measure_check(config: &Path, out: &Path) -> Result<Outcome> {
    let sweep = SweepConfig::load(config)?;
    let base = sweep.base();
    if base.boxes.is_empty() {
        return Err(CliError::Config("boxes: measure-check needs at least one box".into()));
    }
    base.measure.check_boxes(&base.boxes)?;
    let mut solutions = Vec::new();
    let mut converged = true;
    for p in sweep.problems()? {
        let solved = solve_problem(&p)?;
        converged &= solved.report.converged;
        solutions.push((solved.domain.h(), solved.report.solution));
    }
    let rows = weak_convergence_report(
        &solutions,
        &base.measure,
        &base.boxes,
        OperatorKind::Ma2,
        base.solver.policy,
    )?;
    ensure_dir(out)?;
    let mut table = Table::create(
        out.join("weak_convergence.csv"),
        &["h", "box", "measured", "expected", "gap"],
    )?;
    for r in &rows {
        table.row([
            fmt_f64(r.h),
            r.bx.label(),
            fmt_f64(r.measured),
            fmt_f64(r.expected),
            fmt_f64(r.gap),
        ])?;
    }
    table.finish()?;
    Ok(outcome(converged))
}

/// Slab `lower <= p·e <= upper` as read from JSON.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlabSpec {
    pub e: [f64; 2],
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaComparison {
    pub exact: f64,
    pub oracle: f64,
    pub resolution: usize,
    pub bounds: [[f64; 2]; 2],
}

pub fn compare_areas(slabs: &[SlabSpec], resolution: usize) -> Result<AreaComparison> {
    if let Some(s) = slabs.iter().find(|s| s.e == [0.0, 0.0] || s.e.iter().any(|x| !x.is_finite())) {
        return Err(CliError::Config(format!("constraints: invalid direction e = {:?}", s.e)));
    }
    let cs: Vec<SlabConstraint> = slabs
        .iter()
        .map(|s| SlabConstraint::new(s.e, s.lower, s.upper))
        .collect();
    let seed = seed_box(&cs, 1.5).ok_or_else(|| {
        CliError::Config("constraints: need slabs along both axes (e = [a, 0] and [0, b])".into())
    })?;
    let bounds = seed.bounds().ok_or_else(|| CliError::Config("constraints are infeasible".into()))?;
    let exact = intersect_constraints(&cs, &seed)?.area();
    Ok(AreaComparison {
        exact,
        oracle: rasterize_area_oracle(&cs, bounds, resolution),
        resolution,
        bounds: [bounds.0, bounds.1],
    })
}

/// `oracle-area`: prints exact and rasterized areas of a slab set.
pub fn cmd_oracle_area(constraints: &Path, resolution: usize) -> Result<Outcome> {
    let slabs: Vec<SlabSpec> = load_json(constraints)?;
    let cmp = compare_areas(&slabs, resolution)?;
    println!("{}", serde_json::to_string_pretty(&cmp).expect("record serializes"));
    Ok(Outcome::Done)
}
