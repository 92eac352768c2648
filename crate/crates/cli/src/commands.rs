use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fraclap_core::dirichlet::{assemble_dirichlet, eigen_dirichlet_with, solve_dirichlet_with};
use fraclap_core::fracop::FracParams;
use fraclap_core::grid::io::{read_csv, write_csv, GridMetadata};
use fraclap_core::regularity::{local_regularity_probe, Localization, ProbeLevel, ProbeSettings, RegularityReport};
use fraclap_core::{make_domain, DomainMask, Grid, GridFunction, Shape};
use serde::Serialize;

use crate::checks;
use crate::config::{Config, Record, Source, Subject};
use crate::manifest::{record_input, verify, FileRecord, RunDir};
use crate::{CliError, Outcome};

fn grid_for(cfg: &Config, level: u32) -> Result<Grid, CliError> {
    Ok(if cfg.dim == 1 { Grid::centered_1d(cfg.half_width, level)? } else { Grid::centered_2d(cfg.half_width, level)? })
}

fn mask_for(cfg: &Config, level: u32) -> Result<DomainMask, CliError> {
    Ok(make_domain(&grid_for(cfg, level)?, cfg.shape.clone())?)
}

fn source_on(cfg: &Config, mask: &DomainMask) -> Result<GridFunction, CliError> {
    let grid = mask.grid();
    match &cfg.source {
        Source::Constant(c) => Ok(GridFunction::from_fn(grid, |_| *c).restricted_to(mask)),
        Source::File(path) => {
            let file = std::fs::File::open(path)
                .map_err(|e| CliError::Io(format!("source file {}: {e}", path.display())))?;
            let meta = GridMetadata {
                dim: grid.dim(),
                h: grid.h(),
                origin: grid.origin().to_vec(),
                extent: grid.extent().to_vec(),
                support: None,
            };
            let f = read_csv(&meta, std::io::BufReader::new(file))
                .map_err(|e| CliError::Io(format!("source file {}: {e}", path.display())))?;
            Ok(f.restricted_to(mask))
        }
    }
}

fn inputs(config_path: &Path, cfg: &Config) -> Result<Vec<FileRecord>, CliError> {
    let mut v = vec![record_input(config_path)?];
    if let Source::File(p) = &cfg.source {
        v.push(record_input(p)?);
    }
    Ok(v)
}

fn single_level(cfg: &Config, verb: &str) -> Result<u32, CliError> {
    match cfg.levels[..] {
        [l] => Ok(l),
        _ => Err(CliError::Usage(format!("{verb} takes exactly one grid level, got {:?}", cfg.levels))),
    }
}

fn csv_bytes(f: &GridFunction) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    write_csv(f, &mut out)?;
    Ok(out)
}

fn save_function(run: &mut RunDir, stem: &str, f: &GridFunction) -> Result<(), CliError> {
    run.write(&format!("{stem}.csv"), &csv_bytes(f)?)?;
    run.write_json(&format!("{stem}.json"), &GridMetadata::of(f))?;
    Ok(())
}

fn out_dir(out: Option<&Path>, default: &str) -> PathBuf {
    out.map(Path::to_path_buf).unwrap_or_else(|| Path::new("runs").join(default))
}

#[derive(Serialize)]
struct SolveDiagnostics {
    s: f64,
    h: f64,
    dim: usize,
    method: String,
    rows: usize,
    iterations: usize,
    relative_residual: f64,
    max_abs: f64,
    l2_norm: f64,
}

/// Solves `(−Δ)^s u = f` in Ω with u = 0 outside; writes u.csv, u.json,
/// diagnostics.json and the manifest.
pub fn cmd_solve(config_path: &Path, out: Option<&Path>) -> Result<Outcome, CliError> {
    let cfg = Config::load(config_path)?;
    let level = single_level(&cfg, "solve")?;
    let mask = mask_for(&cfg, level)?;
    let f = source_on(&cfg, &mask)?;
    let inputs = inputs(config_path, &cfg)?;
    let op = assemble_dirichlet(&mask, &FracParams::new(cfg.dim, cfg.s)?)?;
    let (u, report) = solve_dirichlet_with(&op, &f)?;
    let dir = out_dir(out, &cfg.id);
    let mut run = RunDir::create(&dir)?;
    save_function(&mut run, "u", &u)?;
    run.write_json(
        "diagnostics.json",
        &SolveDiagnostics {
            s: cfg.s,
            h: mask.grid().h(),
            dim: cfg.dim,
            method: report.method,
            rows: report.rows,
            iterations: report.iterations,
            relative_residual: report.relative_residual,
            max_abs: u.max_abs(),
            l2_norm: u.norm_l2(),
        },
    )?;
    let files = run.finish(&cfg.id, "solve", cfg.record.clone(), cfg.resolved("solve"), inputs)?;
    Ok(Outcome { dir, passed: true, files })
}

/// Smallest Dirichlet eigenpairs; writes eigen.json and eigenvector_k.csv.
pub fn cmd_eigen(config_path: &Path, out: Option<&Path>) -> Result<Outcome, CliError> {
    let cfg = Config::load(config_path)?;
    let level = single_level(&cfg, "eigen")?;
    let mask = mask_for(&cfg, level)?;
    let op = assemble_dirichlet(&mask, &FracParams::new(cfg.dim, cfg.s)?)?;
    let (pairs, report) = eigen_dirichlet_with(&op, cfg.eigen_count, 1e-9)?;
    let dir = out_dir(out, &cfg.id);
    let mut run = RunDir::create(&dir)?;
    for (k, pair) in pairs.iter().enumerate() {
        save_function(&mut run, &format!("eigenvector_{}", k + 1), &pair.vec)?;
    }
    run.write_json("eigen.json", &report)?;
    let files = run.finish(&cfg.id, "eigen", cfg.record.clone(), cfg.resolved("eigen"), inputs(config_path, &cfg)?)?;
    Ok(Outcome { dir, passed: true, files })
}

/// `(∏ distance-to-edge factors)^β`, a smooth defining function of Ω to
/// the power β.
fn cusp(shape: &Shape, beta: f64, x: [f64; 2]) -> f64 {
    let base = match shape {
        Shape::Interval { a, b } => {
            let half = 0.5 * (b - a);
            (x[0] - a) * (b - x[0]) / (half * half)
        }
        Shape::Ball { center, radius } => {
            let r2: f64 = center.iter().zip(x).map(|(c, xi)| (xi - c).powi(2)).sum();
            1.0 - r2 / (radius * radius)
        }
        Shape::Rect { lo, hi } => (0..2)
            .map(|a| {
                let half = 0.5 * (hi[a] - lo[a]);
                (x[a] - lo[a]) * (hi[a] - x[a]) / (half * half)
            })
            .filter(|v| *v > 0.0)
            .product::<f64>(),
        _ => 0.0,
    };
    base.max(0.0).powf(beta)
}

fn subject_on(cfg: &Config, mask: &DomainMask) -> Result<GridFunction, CliError> {
    match cfg.probe.subject {
        Subject::Cusp(beta) => Ok(GridFunction::from_fn(mask.grid(), |x| cusp(&cfg.shape, beta, x)).restricted_to(mask)),
        Subject::Solution => {
            let op = assemble_dirichlet(mask, &FracParams::new(cfg.dim, cfg.s)?)?;
            Ok(solve_dirichlet_with(&op, &source_on(cfg, mask)?)?.0)
        }
        Subject::Eigenfunction => {
            let op = assemble_dirichlet(mask, &FracParams::new(cfg.dim, cfg.s)?)?;
            let mut pairs = eigen_dirichlet_with(&op, 1, 1e-9)?.0;
            Ok(pairs.remove(0).vec)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub property: String,
    pub value: f64,
    pub expected: String,
    pub pass: bool,
}

#[derive(Serialize)]
struct ProbeOutput<'a> {
    report: &'a RegularityReport,
    verdicts: &'a [Verdict],
    passed: bool,
}

/// Regularity probe over the configured ladder; writes report.json,
/// norms.csv and fit.csv. Fails (exit 1) when an [expect] entry is missed.
pub fn cmd_probe(config_path: &Path, out: Option<&Path>) -> Result<Outcome, CliError> {
    let cfg = Config::load(config_path)?;
    if cfg.levels.len() < 3 {
        return Err(CliError::Usage(format!("probe needs at least three grid levels, got {:?}", cfg.levels)));
    }
    let masks: Vec<DomainMask> = cfg.levels.iter().map(|&l| mask_for(&cfg, l)).collect::<Result<_, _>>()?;
    let us: Vec<GridFunction> = masks.iter().map(|m| subject_on(&cfg, m)).collect::<Result<_, _>>()?;
    let levels: Vec<ProbeLevel> = us.iter().zip(&masks).map(|(u, mask)| ProbeLevel { u, mask }).collect();
    let mut locs = Vec::new();
    if cfg.probe.global {
        locs.push(Localization::Global);
    }
    for c in &cfg.probe.cutoffs {
        locs.push(Localization::Cutoff { id: c.id.clone(), inner: c.inner.clone(), outer: c.outer.clone(), moll: c.moll });
    }
    if locs.is_empty() {
        return Err(CliError::Usage("probe has neither global = true nor a [cutoff.*] section".into()));
    }
    let settings = ProbeSettings {
        p: cfg.probe.p,
        sigma_scan: cfg.probe.sigma.clone(),
        potential_s: cfg.probe.potential.then_some(cfg.s),
    };
    let report = local_regularity_probe(&levels, &locs, &settings)?;
    let mut verdicts = Vec::new();
    for (id, want) in &cfg.probe.expect {
        let t = report.threshold(id).expect("expectations name probed localizations");
        let (expected, pass) = match want {
            Some(v) => (format!("{v} ± {}", cfg.probe.tolerance), t.detected && (t.sigma_hat - v).abs() <= cfg.probe.tolerance),
            None => (format!("none below {}", report.ceiling), !t.detected),
        };
        verdicts.push(Verdict { property: format!("threshold.{id}"), value: t.sigma_hat, expected, pass });
    }
    let passed = verdicts.iter().all(|v| v.pass);
    let dir = out_dir(out, &cfg.id);
    let mut run = RunDir::create(&dir)?;
    run.write_json("report.json", &ProbeOutput { report: &report, verdicts: &verdicts, passed })?;
    run.write("norms.csv", report.norms_csv().as_bytes())?;
    run.write("fit.csv", report.fit_csv().as_bytes())?;
    let files = run.finish(&cfg.id, "probe", cfg.record.clone(), cfg.resolved("probe"), inputs(config_path, &cfg)?)?;
    Ok(Outcome { dir, passed, files })
}

/// Runs a built-in property suite; writes check.json.
pub fn cmd_check(suite: &str, out: Option<&Path>) -> Result<Outcome, CliError> {
    let verdicts = checks::run_suite(suite)?;
    let passed = verdicts.iter().all(|v| v.pass);
    let dir = out_dir(out, &format!("check-{suite}"));
    let mut run = RunDir::create(&dir)?;
    #[derive(Serialize)]
    struct CheckOutput<'a> {
        suite: &'a str,
        verdicts: &'a [Verdict],
        passed: bool,
    }
    run.write_json("check.json", &CheckOutput { suite, verdicts: &verdicts, passed })?;
    let mut params = Record::new();
    params.entry("check".into()).or_default().insert("suite".into(), suite.to_string());
    let files = run.finish(&format!("check-{suite}"), "check", params, serde_json::Value::Null, Vec::new())?;
    Ok(Outcome { dir, passed, files })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportKind {
    Fit,
    Norms,
    Solution,
}

impl std::str::FromStr for ExportKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "fit" => Ok(ExportKind::Fit),
            "norms" => Ok(ExportKind::Norms),
            "solution" => Ok(ExportKind::Solution),
            _ => Err(CliError::Usage(format!("unknown export {s:?}; expected fit, norms or solution"))),
        }
    }
}

/// Flat CSVs for plotting, each headed by a `# columns:` comment line;
/// written to `out` or `<run>/export`.
pub fn cmd_export(run_dir: &Path, what: ExportKind, out: Option<&Path>) -> Result<Outcome, CliError> {
    let manifest = verify(run_dir)?;
    let has = |name: &str| manifest.outputs.iter().any(|o| o.path == name);
    let read = |name: &str| {
        std::fs::read_to_string(run_dir.join(name)).map_err(|e| CliError::Io(format!("{name}: {e}")))
    };
    let (name, body) = match what {
        ExportKind::Fit | ExportKind::Norms => {
            let name = if what == ExportKind::Fit { "fit.csv" } else { "norms.csv" };
            if !has(name) {
                return Err(CliError::Usage(format!("run {} has no {name}; export it from a probe run", run_dir.display())));
            }
            let text = read(name)?;
            let header = text.lines().next().unwrap_or_default().to_string();
            (name.to_string(), format!("# columns: {header}\n{text}"))
        }
        ExportKind::Solution => {
            let stem = ["u", "eigenvector_1"]
                .into_iter()
                .find(|s| has(&format!("{s}.csv")))
                .ok_or_else(|| CliError::Usage(format!("run {} holds no solution", run_dir.display())))?;
            let meta: GridMetadata = serde_json::from_str(&read(&format!("{stem}.json"))?)
                .map_err(|e| CliError::Io(format!("{stem}.json: {e}")))?;
            let f = read_csv(&meta, std::io::Cursor::new(read(&format!("{stem}.csv"))?))?;
            let g = *f.grid();
            let cols = if g.dim() == 1 { "x,value" } else { "x,y,value" };
            let mut body = format!("# columns: {cols}\n{cols}\n");
            for (k, v) in f.values().iter().enumerate() {
                let p = g.coord(k);
                if g.dim() == 1 {
                    let _ = writeln!(body, "{},{v}", p[0]);
                } else {
                    let _ = writeln!(body, "{},{},{v}", p[0], p[1]);
                }
            }
            ("solution.csv".to_string(), body)
        }
    };
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| run_dir.join("export"));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(Outcome { dir, passed: true, files: vec![path] })
}
