//! `solve`, `verify` and `sweep`: config in, artifacts out.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use obstacle_core::coeff::{make_coefficients, CoefficientFamily, CoefficientField, ForcingFamily};
use obstacle_core::experiments::{
    alternative_suite, blowup_suite, dyadic_radii, log_log_slope, measure_stability_suite, nondegeneracy_report,
    optimal_regularity_report, reifenberg_suite, sample_free_boundary, Cell, ExperimentReport, MuPolicy,
    StabilitySetup, SupTable, Table,
};
use obstacle_core::fb::{default_threshold, extract_geometry, hausdorff_distance, FreeBoundaryGeometry};
use obstacle_core::fixtures::{interpolant_max_error, BoundaryProfile};
use obstacle_core::grid::{point, Grid, Point, ScalarField};
use obstacle_core::solver::{equivalence_check, solve_obstacle, EquivalenceReport, Method, ObstacleProblemSpec, SolveResult};
use obstacle_core::Error as CoreError;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::artifacts::RunDir;
use crate::config::{RunConfig, SuiteConfig};
use crate::error::{io_error, CliError};

/// Random feasible competitors probed by the minimality check.
const EQUIVALENCE_COMPETITORS: usize = 8;

pub fn build_grid(cfg: &RunConfig) -> Result<Grid, CliError> {
    Grid::new(cfg.grid.n, cfg.grid.half_width, cfg.grid.nodes_per_axis).map_err(|e| CliError::from_core("grid", e))
}

pub fn build_coefficients(cfg: &RunConfig, grid: Grid) -> Result<CoefficientField, CliError> {
    make_coefficients(grid, &cfg.coefficients, &cfg.f).map_err(|e| {
        let block = if matches!(e, CoreError::NonPositiveForcing { .. }) { "f" } else { "coefficients" };
        CliError::from_core(block, e)
    })
}

/// Full-length boundary values from the configured profile.
pub fn boundary_values(cfg: &RunConfig, grid: &Grid) -> Result<Vec<f64>, CliError> {
    let dim = grid.dim();
    if let BoundaryProfile::File { path } = &cfg.boundary {
        let file = File::open(path).map_err(|e| CliError::Config(format!("boundary: cannot read {path}: {e}")))?;
        let field = ScalarField::read_text(BufReader::new(file)).map_err(|e| CliError::from_core("boundary", e))?;
        let g = field.grid();
        if g.dim() != dim || g.nodes_per_axis() != grid.nodes_per_axis() || (g.h() - grid.h()).abs() > 1e-12 * grid.h() {
            return Err(CliError::Config(format!(
                "boundary: field file grid ({}D, {} nodes, h = {}) does not match the grid block",
                g.dim(),
                g.nodes_per_axis(),
                g.h()
            )));
        }
        return Ok(field.into_values());
    }
    Ok((0..grid.node_count())
        .map(|i| {
            if grid.is_boundary(i) {
                cfg.boundary.value(&grid.coords(i), dim).unwrap_or(0.0)
            } else {
                0.0
            }
        })
        .collect())
}

pub fn build_spec(cfg: &RunConfig) -> Result<ObstacleProblemSpec, CliError> {
    let grid = build_grid(cfg)?;
    let coeffs = build_coefficients(cfg, grid)?;
    let psi = boundary_values(cfg, &grid)?;
    ObstacleProblemSpec::new(coeffs, psi, cfg.solver.tol, cfg.solver.max_iter).map_err(|e| {
        let block = if matches!(e, CoreError::NegativeBoundary { .. }) { "boundary" } else { "solver" };
        CliError::from_core(block, e)
    })
}

/// Closed-form solution when the configuration has one (`a = I`, `f = 1`).
fn exact_profile(cfg: &RunConfig, grid: &Grid) -> Option<BoundaryProfile> {
    let unit = cfg.coefficients == CoefficientFamily::Identity && cfg.f == ForcingFamily::Constant { value: 1.0 };
    (unit && cfg.boundary.exact_solution(grid).is_some()).then(|| cfg.boundary.clone())
}

/// Machine-readable solve summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub converged: bool,
    pub method: Method,
    pub h: f64,
    pub iterations: usize,
    pub inner_iterations: usize,
    pub residual: f64,
    pub energy: f64,
    pub active_count: usize,
    pub positive_count: usize,
    pub free_boundary_nodes: usize,
    pub w_max: f64,
    /// Max interpolant error against the closed form, when one exists.
    pub exact_error: Option<f64>,
    pub equivalence: Option<EquivalenceReport>,
}

fn summarize(cfg: &RunConfig, spec: &ObstacleProblemSpec, result: &SolveResult, converged: bool) -> Result<RunSummary, CliError> {
    let grid = *spec.grid();
    let geom = extract_geometry(&result.solution, default_threshold(&grid));
    let exact_error = exact_profile(cfg, &grid).map(|profile| {
        interpolant_max_error(&result.solution, |p| profile.value(p, grid.dim()).unwrap_or(0.0))
    });
    let equivalence = if converged {
        Some(equivalence_check(result, spec, EQUIVALENCE_COMPETITORS, cfg.seed)?)
    } else {
        None
    };
    Ok(RunSummary {
        converged,
        method: result.method,
        h: grid.h(),
        iterations: result.iterations,
        inner_iterations: result.inner_iterations,
        residual: result.residual,
        energy: result.energy,
        active_count: result.active.len(),
        positive_count: result.positive.len(),
        free_boundary_nodes: geom.free_boundary.len(),
        w_max: result.solution.max_abs(),
        exact_error,
        equivalence,
    })
}

/// Solution, summary, free-boundary CSV. Nonconvergence still writes the
/// last iterate and its summary before reporting exit status 3.
fn solve_into(cfg: &RunConfig, dir: &mut RunDir) -> Result<(RunSummary, SolveResult), CliError> {
    let spec = build_spec(cfg)?;
    let (result, failure) = match solve_obstacle(&spec, cfg.solver.method) {
        Ok(r) => (r, None),
        Err(CoreError::NotConverged { partial, .. }) => {
            let msg = format!(
                "{} did not converge: residual {:.3e} after {} iterations",
                partial.method, partial.residual, partial.iterations
            );
            (*partial, Some(CliError::NotConverged(msg)))
        }
        Err(e) => return Err(CliError::from_core("solver", e)),
    };
    let summary = summarize(cfg, &spec, &result, failure.is_none())?;
    dir.write_with("solution.txt", |out| result.solution.write_text(out))?;
    dir.write_json("summary.json", &summary)?;
    let geom = extract_geometry(&result.solution, default_threshold(spec.grid()));
    dir.write_with("free_boundary.csv", |out| geom.write_free_boundary_csv(out))?;
    match failure {
        None => Ok((summary, result)),
        Some(e) => Err(e),
    }
}

fn status_of(e: Option<&CliError>) -> &'static str {
    match e.map(CliError::exit_code) {
        None | Some(0) => "ok",
        Some(2) => "config_error",
        Some(3) => "not_converged",
        Some(4) => "suites_failed",
        Some(_) => "error",
    }
}

/// Seals the directory and passes the run outcome through.
fn seal<T>(dir: RunDir, command: &str, outcome: Result<T, CliError>, timings: serde_json::Value) -> Result<T, CliError> {
    let code = outcome.as_ref().err().map_or(0, CliError::exit_code);
    let status = status_of(outcome.as_ref().err());
    dir.seal(command, status, code, timings)?;
    outcome
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    solve_run(cfg).map(|(s, _)| s)
}

fn solve_run(cfg: &RunConfig) -> Result<(RunSummary, SolveResult), CliError> {
    if cfg.synthetic.is_some() {
        return Err(CliError::Config("synthetic: synthetic fields are analyzed by `verify`, not solved".into()));
    }
    let mut dir = RunDir::create(&cfg.output_dir)?;
    let outcome = solve_into(cfg, &mut dir);
    seal(dir, "solve", outcome, json!({}))
}

/// Per-suite verdicts written to `verify.json`.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteVerdict {
    pub name: String,
    pub asserted: bool,
    pub passed: bool,
    pub aborted: Option<String>,
    pub report: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutcome {
    pub solve: Option<RunSummary>,
    pub suites: Vec<SuiteVerdict>,
    pub failed: usize,
}

fn radii_for(grid: &Grid, explicit: &Option<Vec<f64>>, r_max: Option<f64>, r_min_cells: Option<f64>, defaults: (f64, f64)) -> Vec<f64> {
    match explicit {
        Some(r) => r.clone(),
        None => dyadic_radii(r_max.unwrap_or(defaults.0), r_min_cells.unwrap_or(defaults.1) * grid.h()),
    }
}

fn to_point(coords: &[f64], dim: usize) -> Result<Point, CoreError> {
    if coords.len() != dim {
        return Err(CoreError::InvalidParameter {
            name: "x0".into(),
            reason: format!("expected {dim} coordinates, got {}", coords.len()),
        });
    }
    Ok(point(coords))
}

/// Free-boundary node nearest to the requested point (default: the origin).
fn free_boundary_point(geom: &FreeBoundaryGeometry, x0: &Option<Vec<f64>>) -> Result<Point, CoreError> {
    let dim = geom.grid().dim();
    let target = match x0 {
        Some(c) => to_point(c, dim)?,
        None => [0.0; 3],
    };
    geom.nearest_free_boundary_node(&target)
        .map(|n| geom.grid().coords(n))
        .ok_or(CoreError::EmptyPointSet)
}

struct Field<'a> {
    w: &'a ScalarField,
    geom: &'a FreeBoundaryGeometry,
    coeffs: &'a CoefficientField,
    boundary: &'a [f64],
}

fn sup_key(x0: &Point, radii: &[f64]) -> String {
    format!("{x0:?}|{radii:?}")
}

fn run_suite(cfg: &RunConfig, suite: &SuiteConfig, field: &Field, sup_tables: &BTreeMap<String, SupTable>) -> Result<ExperimentReport, CoreError> {
    let grid = *field.w.grid();
    let growth_table = |x0: &Option<Vec<f64>>, radii: &Option<Vec<f64>>, r_max, cells| -> Result<&SupTable, CoreError> {
        let x = free_boundary_point(field.geom, x0)?;
        let radii = radii_for(&grid, radii, r_max, cells, (0.25, 8.0));
        Ok(&sup_tables[&sup_key(&x, &radii)])
    };
    let mut rep = match suite {
        SuiteConfig::OptimalRegularity { x0, radii, r_max, r_min_cells, .. } => {
            optimal_regularity_report(growth_table(x0, radii, *r_max, *r_min_cells)?)
        }
        SuiteConfig::Nondegeneracy { x0, radii, r_max, r_min_cells, .. } => {
            nondegeneracy_report(growth_table(x0, radii, *r_max, *r_min_cells)?)
        }
        SuiteConfig::Alternative { points, samples, radii, r_max, r_min_cells, .. } => {
            let radii = radii_for(&grid, radii, *r_max, *r_min_cells, (0.25, 8.0));
            let reach = radii.iter().copied().fold(0.0, f64::max);
            let pts = match points {
                Some(p) => p.iter().map(|c| to_point(c, grid.dim())).collect::<Result<Vec<_>, _>>()?,
                None => sample_free_boundary(field.geom, samples.unwrap_or(12), reach, None),
            };
            alternative_suite(field.w, &pts, &radii)?
        }
        SuiteConfig::MeasureStability { perturbation, levels, mu, .. } => measure_stability_suite(&StabilitySetup {
            grid,
            boundary: field.boundary.to_vec(),
            perturbation: *perturbation,
            levels: levels.clone(),
            mu: mu.unwrap_or(MuPolicy::Fixed { value: 1.0 }),
            method: cfg.solver.method,
            tol: cfg.solver.tol,
            max_iter: cfg.solver.max_iter,
        })?,
        SuiteConfig::Blowup { x0, eps, r_max, r_min_cells, .. } => {
            let x = free_boundary_point(field.geom, x0)?;
            let eps = radii_for(&grid, eps, *r_max, *r_min_cells, (1.0 / 16.0, 16.0));
            blowup_suite(field.w, field.coeffs, &x, &eps)?
        }
        SuiteConfig::Reifenberg { samples, reach, region, radii, r_max, r_min_cells, .. } => {
            let radii = radii_for(&grid, radii, *r_max, *r_min_cells, (0.125, 16.0));
            let r_top = radii.iter().copied().fold(0.0, f64::max);
            let region = region.map(|r| ([0.0; 3], r));
            let pts = sample_free_boundary(field.geom, samples.unwrap_or(16), reach.unwrap_or(r_top), region);
            reifenberg_suite(field.w, &pts, &radii)?
        }
    };
    rep.param("seed", cfg.seed);
    Ok(rep)
}

/// Precomputes the sup tables shared by growth suites with equal `(x0, radii)`.
fn shared_sup_tables(suites: &[SuiteConfig], field: &Field) -> BTreeMap<String, SupTable> {
    let grid = *field.w.grid();
    let mut tables = BTreeMap::new();
    for suite in suites {
        let (x0, radii, r_max, cells) = match suite {
            SuiteConfig::OptimalRegularity { x0, radii, r_max, r_min_cells, .. }
            | SuiteConfig::Nondegeneracy { x0, radii, r_max, r_min_cells, .. } => (x0, radii, *r_max, *r_min_cells),
            _ => continue,
        };
        let Ok(x) = free_boundary_point(field.geom, x0) else { continue };
        let radii = radii_for(&grid, radii, r_max, cells, (0.25, 8.0));
        if let std::collections::btree_map::Entry::Vacant(slot) = tables.entry(sup_key(&x, &radii)) {
            if let Ok(t) = SupTable::compute(field.w, &x, &radii) {
                slot.insert(t);
            }
        }
    }
    tables
}

fn aborted_report(name: &str, grid: &Grid, e: &CoreError) -> ExperimentReport {
    let mut rep = ExperimentReport::new(name, grid);
    rep.aborted = Some(e.to_string());
    rep
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<VerifyOutcome, CliError> {
    if cfg.suites.is_empty() {
        return Err(CliError::Config("suites: verify needs at least one suite".into()));
    }
    let mut dir = RunDir::create(&cfg.output_dir)?;
    let mut timings = serde_json::Map::new();
    let outcome = verify_into(cfg, &mut dir, &mut timings);
    seal(dir, "verify", outcome, serde_json::Value::Object(timings))
}

fn verify_into(cfg: &RunConfig, dir: &mut RunDir, timings: &mut serde_json::Map<String, serde_json::Value>) -> Result<VerifyOutcome, CliError> {
    let grid = build_grid(cfg)?;
    let coeffs = build_coefficients(cfg, grid)?;
    let (w, boundary, solve) = match cfg.synthetic {
        Some(kind) => {
            let w = kind.build(&grid);
            dir.write_with("solution.txt", |out| w.write_text(out))?;
            (w, boundary_values(cfg, &grid)?, None)
        }
        None => {
            let (summary, result) = solve_into(cfg, dir)?;
            (result.solution, boundary_values(cfg, &grid)?, Some(summary))
        }
    };
    let geom = extract_geometry(&w, default_threshold(&grid));
    let field = Field {
        w: &w,
        geom: &geom,
        coeffs: &coeffs,
        boundary: &boundary,
    };
    let sup_tables = shared_sup_tables(&cfg.suites, &field);
    let reports: Vec<ExperimentReport> = cfg
        .suites
        .par_iter()
        .map(|suite| {
            let rep = run_suite(cfg, suite, &field, &sup_tables).unwrap_or_else(|e| aborted_report(suite.name(), &grid, &e));
            if suite.negative_control() {
                rep.negative_control()
            } else {
                rep
            }
        })
        .collect();

    let mut suites = Vec::new();
    for (i, rep) in reports.iter().enumerate() {
        let stem = format!("reports/{i:02}_{}", rep.name);
        let mut json_text = rep.to_json()?;
        json_text.push('\n');
        dir.write(&format!("{stem}.json"), json_text)?;
        dir.write(&format!("{stem}.txt"), rep.to_text())?;
        for t in &rep.tables {
            dir.write_with(&format!("{stem}_{}.csv", t.name), |out| t.write_csv(out))?;
        }
        print!("{}", rep.to_text());
        timings.insert(format!("{i:02}_{}", rep.name), json!(rep.wall_clock.as_secs_f64()));
        suites.push(SuiteVerdict {
            name: rep.name.clone(),
            asserted: rep.asserted,
            passed: rep.passed,
            aborted: rep.aborted.clone(),
            report: format!("{stem}.json"),
        });
    }
    let failed = suites.iter().filter(|s| s.asserted && !s.passed).count();
    let outcome = VerifyOutcome { solve, suites, failed };
    dir.write_json("verify.json", &outcome)?;
    if failed > 0 {
        return Err(CliError::SuitesFailed(failed));
    }
    Ok(outcome)
}

/// One merged-table row per swept value.
#[derive(Debug, Clone)]
struct SweepRow {
    value: f64,
    dir: String,
    status: &'static str,
    exit_code: u8,
    message: String,
    summary: Option<RunSummary>,
    suites_passed: Option<bool>,
    /// `(sym_diff, sup_diff, hausdorff_fb)` against the unperturbed companion.
    companion: Option<(f64, f64, Option<f64>)>,
}

/// True for families that perturb `a = I, f = 1`.
fn is_perturbation(cfg: &RunConfig) -> bool {
    matches!(
        cfg.coefficients,
        CoefficientFamily::SmoothOscillation { .. } | CoefficientFamily::LogOscillation { .. } | CoefficientFamily::Checkerboard { .. }
    ) || matches!(cfg.f, ForcingFamily::Cosine { .. })
}

/// Deviation of a solution from the `a = I, f = 1` solution with the same
/// boundary data: contact-set symmetric difference, sup over the central
/// `3/4` box, and free-boundary Hausdorff distance.
fn companion_diff(cfg: &RunConfig, w: &ScalarField) -> Result<(f64, f64, Option<f64>), CliError> {
    let mut unit = cfg.clone();
    unit.coefficients = CoefficientFamily::Identity;
    unit.f = ForcingFamily::default();
    let spec = build_spec(&unit)?;
    let u = solve_obstacle(&spec, cfg.solver.method).map_err(|e| CliError::from_core("solver", e))?;
    let grid = *w.grid();
    let threshold = default_threshold(&grid);
    let gw = extract_geometry(w, threshold);
    let gu = extract_geometry(&u.solution, threshold);
    let differ: Vec<usize> = grid.interior_nodes().into_iter().filter(|&i| gw.is_contact(i) != gu.is_contact(i)).collect();
    let inner = 0.75 * grid.half_width();
    let sup = (0..grid.node_count())
        .filter(|&i| grid.coords(i)[..grid.dim()].iter().all(|c| c.abs() <= inner + 1e-12))
        .map(|i| (w.values()[i] - u.w()[i]).abs())
        .fold(0.0, f64::max);
    let dh = hausdorff_distance(&gw.free_boundary_points(), &gu.free_boundary_points());
    Ok((grid.measure(&differ), sup, dh))
}

fn sweep_one(cfg: &RunConfig, param: &str, value: f64, dir: &str) -> SweepRow {
    let mut row = SweepRow {
        value,
        dir: dir.to_string(),
        status: "ok",
        exit_code: 0,
        message: String::new(),
        summary: None,
        suites_passed: None,
        companion: None,
    };
    let run = cfg.with_param(param, value).and_then(|mut c| {
        c.output_dir = cfg.output_dir.join(dir);
        if c.suites.is_empty() {
            let (summary, result) = solve_run(&c)?;
            if is_perturbation(&c) {
                row.companion = Some(companion_diff(&c, &result.solution)?);
            }
            row.summary = Some(summary);
            Ok(())
        } else {
            let outcome = cmd_verify(&c);
            if let Ok(o) = &outcome {
                row.summary = o.solve.clone();
            }
            row.suites_passed = Some(outcome.is_ok());
            outcome.map(|_| ())
        }
    });
    if let Err(e) = run {
        row.exit_code = e.exit_code();
        row.status = status_of(Some(&e));
        row.message = e.to_string();
    }
    row
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub param: String,
    pub rows: usize,
    pub succeeded: usize,
    /// Log-log slope of the Hausdorff gap against the sup deviation.
    pub sqrt_law_slope: Option<f64>,
}

pub fn cmd_sweep(cfg: &RunConfig, param: &str, values: &[f64], workers: Option<usize>) -> Result<SweepOutcome, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep: empty value list".into()));
    }
    cfg.param_value(param)?;
    let mut dir = RunDir::create(&cfg.output_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("workers: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(i, &v)| sweep_one(cfg, param, v, &format!("run_{i:03}")))
            .collect()
    });
    let table = sweep_table(param, &rows);
    let outcome = SweepOutcome {
        param: param.to_string(),
        rows: rows.len(),
        succeeded: rows.iter().filter(|r| r.exit_code == 0).count(),
        sqrt_law_slope: log_log_slope(
            &rows
                .iter()
                .filter_map(|r| r.companion.and_then(|(_, sup, dh)| dh.map(|d| (sup, d))))
                .collect::<Vec<_>>(),
        ),
    };
    let written = (|| {
        dir.write_with("sweep.csv", |out| table.write_csv(out))?;
        dir.write("sweep.txt", {
            let mut s = String::new();
            table.render(&mut s);
            s
        })?;
        dir.write_json("sweep.json", &outcome)
    })();
    let result = written.and_then(|_| {
        if outcome.succeeded > 0 {
            Ok(outcome)
        } else {
            let code = rows.first().map_or(1, |r| r.exit_code);
            Err(match code {
                2 => CliError::Config(format!("sweep: every run failed: {}", rows[0].message)),
                3 => CliError::NotConverged(format!("every run failed: {}", rows[0].message)),
                4 => CliError::SuitesFailed(rows.len()),
                _ => CliError::Io {
                    context: "sweep".into(),
                    source: std::io::Error::other(rows[0].message.clone()),
                },
            })
        }
    });
    let dirs: Vec<&str> = rows.iter().map(|r| r.dir.as_str()).collect();
    seal(dir, "sweep", result, json!({ "runs": dirs }))
}

fn sweep_table(param: &str, rows: &[SweepRow]) -> Table {
    let mut table = Table::new(
        "sweep",
        &[
            param,
            "status",
            "exit_code",
            "h",
            "iterations",
            "residual",
            "energy",
            "active_count",
            "free_boundary_nodes",
            "w_max",
            "exact_error",
            "order",
            "suites_passed",
            "sym_diff",
            "sup_diff",
            "hausdorff_fb",
            "run_dir",
        ],
    );
    let blank = || Cell::from("");
    let mut prev: Option<(f64, f64)> = None;
    for r in rows {
        let s = r.summary.as_ref();
        let err = s.and_then(|s| s.exact_error.map(|e| (s.h, e)));
        let order = match (prev, err) {
            (Some((h0, e0)), Some((h1, e1))) if h0 != h1 && e0 > 0.0 && e1 > 0.0 => Cell::from((e0 / e1).ln() / (h0 / h1).ln()),
            _ => blank(),
        };
        if err.is_some() {
            prev = err;
        }
        let num = |v: Option<f64>| v.map_or_else(blank, Cell::from);
        table.push(vec![
            r.value.into(),
            r.status.into(),
            (r.exit_code as usize).into(),
            num(s.map(|s| s.h)),
            s.map_or_else(blank, |s| s.iterations.into()),
            num(s.map(|s| s.residual)),
            num(s.map(|s| s.energy)),
            s.map_or_else(blank, |s| s.active_count.into()),
            s.map_or_else(blank, |s| s.free_boundary_nodes.into()),
            num(s.map(|s| s.w_max)),
            num(err.map(|e| e.1)),
            order,
            r.suites_passed.map_or_else(blank, |p| Cell::from(if p { "true" } else { "false" })),
            num(r.companion.map(|c| c.0)),
            num(r.companion.map(|c| c.1)),
            r.companion.map_or_else(blank, |c| c.2.map_or_else(|| Cell::from("undefined"), Cell::from)),
            r.dir.as_str().into(),
        ]);
    }
    table
}

/// Reads a run manifest, for callers checking that a run completed.
pub fn read_manifest(dir: &Path) -> Result<serde_json::Value, CliError> {
    let path = dir.join(crate::artifacts::MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(io_error(format!("reading {}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Core(e.into()))
}
