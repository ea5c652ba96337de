use std::fs;
use std::path::Path;

use mfs_core::grid::{grid_csv_string, read_grid_csv, DiscreteSpace, GridFunction, ModularKind, LUXEMBURG_TOL};
use mfs_core::nfunc::{ConjugateTable, DEFAULT_CONJUGATE_DEPTH};
use mfs_core::numeric::log_grid;
use mfs_core::solver::{condition_audit, convex_solve, mountain_pass, unit_bump, AuditConfig, Problem};
use mfs_core::verify::{resolve_suites, run_suite, summary_csv, PropertyReport, Verdict, VerifyContext};
use mfs_core::{MfsError, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{CommonArgs, Resolved, Resolver};
use crate::{AuditArgs, ConvexArgs, ExportArgs, SolveArgs, TableArgs, VerifyArgs};

/// What a command produced: the JSON report, extra files for the run
/// directory and one-line summaries.
struct Outcome {
    report: Value,
    files: Vec<(String, String)>,
    lines: Vec<String>,
    pass: bool,
}

fn to_json<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| MfsError::Io(e.to_string()))
}

fn pretty(v: &Value) -> Result<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| MfsError::Io(e.to_string()))
}

fn init_threads(args: &CommonArgs) -> Result<()> {
    let n = match args.threads {
        Some(n) => Some(n),
        None => match std::env::var("MFS_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| MfsError::Config(format!("MFS_THREADS must be a positive integer, got '{v}'")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(MfsError::Config("thread count must be positive".into()));
        }
        // A pool may already exist when several commands run in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn emit(config: &Resolved, out: Outcome) -> Result<bool> {
    let report = json!({ "config": config, "pass": out.pass, "result": out.report });
    match &config.output {
        Some(dir) => {
            write_file(dir, "report.json", &pretty(&report)?)?;
            for (name, body) in &out.files {
                write_file(dir, name, body)?;
            }
            for l in &out.lines {
                println!("{l}");
            }
        }
        None => {
            print!("{}", pretty(&report)?);
            for l in &out.lines {
                eprintln!("{l}");
            }
        }
    }
    Ok(out.pass)
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<()> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, body)?;
    Ok(())
}

fn space_for(config: &Resolved) -> Result<DiscreteSpace> {
    let fam = config.family.as_ref().ok_or_else(|| MfsError::Config("a family is required".into()))?.build()?;
    DiscreteSpace::new(config.domain.build()?, config.s, fam)
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::NotApplicable => "not-applicable",
    }
}

pub fn verify(args: VerifyArgs) -> Result<bool> {
    init_threads(&args.common)?;
    let r = Resolver::new(args.common)?;
    let suites = resolve_suites(&args.suite)?;
    let spec = r.family(None)?;
    let mut config = r.base("verify", Some(spec.clone()))?;
    let mut ctx = VerifyContext::new(spec.build()?, config.domain.clone(), config.s, config.seed);
    ctx.samples = args.samples.or(r.file.samples).unwrap_or(ctx.samples);
    ctx.fields = args.fields.or(r.file.fields).unwrap_or(ctx.fields);
    ctx.depth = args.depth.or(r.file.depth).unwrap_or(DEFAULT_CONJUGATE_DEPTH);
    if r.args.r.is_some() || r.file.nonlinearity.is_some() {
        ctx.nonlinearity = Some(r.nonlinearity(None)?);
    }
    config.samples = Some(ctx.samples);
    config.fields = Some(ctx.fields);
    config.depth = Some(ctx.depth);
    config.nonlinearity = ctx.nonlinearity;

    let reports: Vec<PropertyReport> = suites.par_iter().map(|s| run_suite(s, &ctx)).collect::<Result<_>>()?;
    let pass = reports.iter().all(PropertyReport::passed);
    let mut files = vec![("summary.csv".to_string(), summary_csv(&reports)?)];
    for rep in &reports {
        let doc = json!({ "config": &config, "report": rep });
        files.push((format!("suites/{}.json", rep.suite), pretty(&doc)?));
    }
    let lines = reports
        .iter()
        .map(|r| {
            format!(
                "{:<18} {:<15} worst={:e} tol={:e}",
                r.suite,
                verdict_name(r.verdict),
                r.worst_violation,
                r.tolerance
            )
        })
        .collect();
    let report = json!({ "suites": to_json(&reports)? });
    emit(&config, Outcome { report, files, lines, pass })
}

pub fn solve(args: SolveArgs) -> Result<bool> {
    init_threads(&args.common)?;
    let r = Resolver::new(args.common)?;
    let (kind, preset, r0) = Resolver::preset_for(args.problem);
    let spec = r.family(Some((kind, preset)))?;
    let mut config = r.base("solve", Some(spec))?;
    let nl = r.nonlinearity(Some(r0))?;
    let mut cfg = r.solver()?;
    if let Some(n) = args.max_iterations {
        cfg.max_iterations = n;
    }
    cfg.validate()?;
    config.nonlinearity = Some(nl);
    config.solver = Some(cfg.clone());

    let space = space_for(&config)?;
    let audit = condition_audit(&nl, &space, &AuditConfig { seed: config.seed, ..AuditConfig::default() });
    let problem = Problem::new(space, nl);
    let rep = mountain_pass(&problem, &cfg)?;
    let pass = rep.converged && rep.nontrivial && rep.level_dominates && rep.weak_identity.holds;
    let csv = grid_csv_string(problem.space().domain(), &rep.solution)?;
    let lines = vec![format!(
        "{} level={:.6e} alpha={:.3e} residual={:.2e} cerami={:.2e} morse={:?} stopped_by={} -> {}",
        rep.family,
        rep.level,
        rep.geometry.alpha,
        rep.residual,
        rep.cerami,
        rep.morse_index,
        rep.stopped_by,
        if pass { "pass" } else { "fail" }
    )];
    let report = json!({ "solution": to_json(&rep)?, "audit": to_json(&audit)? });
    emit(&config, Outcome { report, files: vec![("solution.csv".into(), csv)], lines, pass })
}

pub fn convex(args: ConvexArgs) -> Result<bool> {
    init_threads(&args.common)?;
    let r = Resolver::new(args.common)?;
    let spec = r.family(None)?;
    let mut config = r.base("convex-solve", Some(spec))?;
    let mut cfg = r.solver()?;
    if let Some(n) = args.restarts {
        cfg.restarts = n;
    }
    cfg.validate()?;
    config.solver = Some(cfg.clone());
    let space = space_for(&config)?;
    let file = fs::File::open(&args.source).map_err(|e| MfsError::Config(format!("{}: {e}", args.source.display())))?;
    let source = read_grid_csv(space.domain(), file)?;
    let rep = convex_solve(&space, &source, &cfg)?;
    let csv = grid_csv_string(space.domain(), &rep.solution)?;
    let lines = vec![format!(
        "{} energy={:.6e} residual={:.2e} max_distance={:.2e} -> {}",
        rep.family,
        rep.energy,
        rep.residual,
        rep.max_pairwise_distance,
        if rep.converged { "pass" } else { "fail" }
    )];
    let pass = rep.converged;
    let mut report = to_json(&rep)?;
    report["source"] = json!(args.source.display().to_string());
    emit(&config, Outcome { report, files: vec![("solution.csv".into(), csv)], lines, pass })
}

pub fn audit(args: AuditArgs) -> Result<bool> {
    init_threads(&args.common)?;
    let r = Resolver::new(args.common)?;
    let spec = r.family(None)?;
    let mut config = r.base("audit", Some(spec))?;
    let nl = r.nonlinearity(None)?;
    let mut acfg = r.file.audit.clone().unwrap_or_default();
    acfg.seed = config.seed;
    if args.radius.is_some() {
        acfg.radius = args.radius;
    }
    if args.gamma.is_some() {
        acfg.gamma = args.gamma;
    }
    config.nonlinearity = Some(nl);
    config.audit = Some(acfg.clone());
    let space = space_for(&config)?;
    let rep = condition_audit(&nl, &space, &acfg);
    let mut lines: Vec<String> = rep
        .checks
        .iter()
        .map(|c| {
            format!("{:<4} {:<5} margin={:e} {}", c.name, if c.pass { "pass" } else { "fail" }, c.margin, c.detail)
        })
        .collect();
    lines.extend(rep.warnings.iter().map(|w| format!("warning: {w}")));
    let pass = rep.pass;
    emit(&config, Outcome { report: to_json(&rep)?, files: Vec::new(), lines, pass })
}

fn point(v: &Option<Vec<f64>>) -> Option<[f64; 2]> {
    v.as_ref().map(|v| [v[0], v.get(1).copied().unwrap_or(0.0)])
}

pub fn conjugate_table(args: TableArgs) -> Result<bool> {
    init_threads(&args.common)?;
    let r = Resolver::new(args.common)?;
    let spec = r.family(None)?;
    let mut config = r.base("conjugate-table", Some(spec.clone()))?;
    let depth = args.depth.or(r.file.depth).unwrap_or(DEFAULT_CONJUGATE_DEPTH);
    config.depth = Some(depth);
    if !(args.t_min > 0.0 && args.t_max > args.t_min && args.per_decade > 0) {
        return Err(MfsError::Config("need 0 < t-min < t-max and per-decade >= 1".into()));
    }
    let x = point(&args.x).unwrap_or_else(|| config.domain.build().map(|d| d.centroid()).unwrap_or([0.0, 0.0]));
    let y = point(&args.y).unwrap_or(x);
    let ts = log_grid(args.t_min, args.t_max, args.per_decade);
    let table = ConjugateTable::build(&spec.build()?, &[(x, y)], &ts, depth)?;
    let shape = table.shape_violation();
    let worst_accuracy =
        table.values[0].iter().zip(&table.accuracy[0]).map(|(v, a)| a / v.max(1.0)).fold(0.0f64, f64::max);
    let pass = shape <= 0.0 && worst_accuracy <= 1e-6;
    let lines = vec![format!(
        "{} points, shape violation {shape:e}, worst relative accuracy {worst_accuracy:e} -> {}",
        ts.len(),
        if pass { "pass" } else { "fail" }
    )];
    let report = json!({
        "x": x, "y": y, "depth": depth, "shape_violation": shape, "worst_relative_accuracy": worst_accuracy,
        "t": &table.t_grid, "value": &table.values[0], "accuracy": &table.accuracy[0],
    });
    emit(&config, Outcome { report, files: vec![("conjugate.csv".into(), table.to_csv(0))], lines, pass })
}

pub fn export(args: ExportArgs) -> Result<bool> {
    init_threads(&args.common)?;
    let r = Resolver::new(args.common)?;
    let spec = r.family(None)?;
    let config = r.base("export", Some(spec.clone()))?;
    let space = space_for(&config)?;
    let d = space.domain();
    let fam = space.family();
    let scale = GridFunction::from_fn(d, |p| fam.local_hat(p).phi(1.0));
    let u0 = unit_bump(&space)?;
    let mut files = vec![
        ("phi_hat.csv".to_string(), grid_csv_string(d, &scale)?),
        ("u0.csv".to_string(), grid_csv_string(d, &u0)?),
    ];
    let mut report = json!({
        "h": d.h(), "interior_nodes": d.n_interior(), "nodes": d.n_nodes(), "pairs": space.quad().pairs().len(),
        "phi_hat_one": { "min": scale.values().iter().copied().fold(f64::INFINITY, f64::min),
                         "max": scale.values().iter().copied().fold(f64::NEG_INFINITY, f64::max) },
    });
    let mut lines = vec![format!("{} interior nodes, h={:e}", d.n_interior(), d.h())];
    if let Some(path) = &args.input {
        let file = fs::File::open(path).map_err(|e| MfsError::Config(format!("{}: {e}", path.display())))?;
        let u = read_grid_csv(d, file)?;
        let mut m = serde_json::Map::new();
        for (name, kind) in [
            ("gagliardo", ModularKind::Gagliardo),
            ("hat", ModularKind::Hat),
            ("conjugate_hat", ModularKind::ConjugateHat),
        ] {
            let norm = if u.is_zero() { 0.0 } else { space.luxemburg(kind, &u, LUXEMBURG_TOL)? };
            m.insert(name.into(), json!({ "modular": space.modular(kind, &u), "norm": norm }));
        }
        lines.push(format!("input {}: J={:e}", path.display(), space.gagliardo(&u)));
        report["input"] = Value::Object(m);
        files.push(("input.csv".into(), grid_csv_string(d, &u)?));
    }
    emit(&config, Outcome { report, files, lines, pass: true })
}
