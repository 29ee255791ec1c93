use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ellipsum::exec::Strategy;
use ellipsum::geometry::{Ellipsoid, Exponent, PSumSet};
use ellipsum::linalg::{Matrix, SpdMatrix, Vector};
use ellipsum::metrics::{hausdorff_sampled_on, report, SphereSampler};
use ellipsum::oracle::{check_containment_on, minkowski_mvee_reference, KHACHIYAN_TOL};
use ellipsum::outer::{fold_psum_outer, Criterion, FixedPointConfig};
use ellipsum::reach::{outer_of_blocks, propagate_blocks, reach_tube, ReachTube, TubeConfig};
use ellipsum::scenarios::{ELLIPSOIDAL_MVOE_VOLUMES, MIXED_MVOE_VOLUMES};
use serde::Serialize;

use crate::error::CliError;
use crate::output::{self, OuterRecord, StepLog, StepRow};
use crate::scenario::{Built, CriterionChoice, OutputFormat, ScenarioFile};
use crate::{Options, Table};

/// Worst support margin `verify` accepts.
pub const MARGIN_TOL: f64 = 1e-8;
/// Relative error `repro` accepts against a published volume.
pub const REPRO_TOL: f64 = 1e-3;
const DEFAULT_BOUNDARY_POINTS: usize = 720;
const DEFAULT_REFERENCE_DIRS: usize = 90;

/// Flags merged over a scenario file.
#[derive(Debug, Clone)]
pub struct Settings {
    pub criteria: Vec<Criterion>,
    pub fixed_point: FixedPointConfig,
    pub samples: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub boundary_points: usize,
    pub reference_dirs: usize,
}

impl Settings {
    pub fn resolve(opts: &Options, file: Option<&ScenarioFile>) -> Result<Self, CliError> {
        let mut fp = file.map(ScenarioFile::fixed_point).unwrap_or_default();
        if let Some(t) = opts.tol {
            fp.tolerance = t;
        }
        if let Some(n) = opts.max_iter {
            fp.max_iterations = n;
        }
        if let Some(r) = opts.recursion {
            fp.exponent = r.into();
        }
        fp.validate()?;
        let choice = opts.criterion.or(file.map(|f| f.criterion)).unwrap_or_default();
        let criteria = match choice {
            CriterionChoice::Volume => vec![Criterion::MinVolume],
            CriterionChoice::Trace => vec![Criterion::MinTrace],
            CriterionChoice::Both => vec![Criterion::MinVolume, Criterion::MinTrace],
        };
        let boundary_points = opts
            .boundary_points
            .or(file.and_then(|f| f.output.boundary_points))
            .unwrap_or(DEFAULT_BOUNDARY_POINTS);
        if boundary_points < 3 {
            return Err(CliError::Input(format!("boundary points must be at least 3, got {boundary_points}")));
        }
        let samples = opts.samples.or(file.and_then(|f| f.sampler.samples));
        if samples == Some(0) {
            return Err(CliError::Input("samples must be positive".into()));
        }
        Ok(Self {
            criteria,
            fixed_point: fp,
            samples,
            seed: opts.seed.or(file.and_then(|f| f.sampler.seed)).unwrap_or(0),
            out: opts.out.clone().or(file.and_then(|f| f.output.dir.as_ref().map(PathBuf::from))),
            format: opts.format.or(file.and_then(|f| f.output.format)).unwrap_or_default(),
            boundary_points,
            reference_dirs: opts.reference_dirs.unwrap_or(DEFAULT_REFERENCE_DIRS),
        })
    }

    pub fn sampler(&self, dim: usize) -> SphereSampler {
        let s = SphereSampler::default_for(dim);
        let s = match self.samples {
            Some(n) => s.with_count(n),
            None => s,
        };
        SphereSampler { seed: self.seed, ..s }
    }

    fn out_dir(&self) -> Result<Option<&Path>, CliError> {
        match &self.out {
            None => Ok(None),
            Some(d) => {
                fs::create_dir_all(d).map_err(|e| CliError::Input(format!("cannot create {}: {e}", d.display())))?;
                Ok(Some(d.as_path()))
            }
        }
    }
}

fn numbers(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("{what}: cannot parse {:?} as a number", s.trim())))
        })
        .collect()
}

/// Parses `"a,b;c,d"` into a square symmetric positive definite matrix.
pub fn parse_shape(text: &str) -> Result<SpdMatrix, CliError> {
    let what = format!("--shape {text:?}");
    let rows = text
        .split(';')
        .map(|r| numbers(r, &what))
        .collect::<Result<Vec<_>, _>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Input(format!("{what}: expected {n} entries in every row")));
    }
    SpdMatrix::new(Matrix::from_fn(n, n, |r, c| rows[r][c])).map_err(|e| CliError::Input(format!("{what}: {e}")))
}

fn horizon_of(opts: &Options, file: &ScenarioFile) -> usize {
    opts.horizon.unwrap_or(file.horizon)
}

fn scenario_arg(opts: &Options) -> Result<ScenarioFile, CliError> {
    match &opts.scenario {
        Some(s) => ScenarioFile::resolve(s),
        None => Err(CliError::Input("--scenario is required".into())),
    }
}

/// First step whose outer bounds fail, for error context.
fn failing_step(built: &Built, horizon: usize, cfg: &FixedPointConfig) -> Option<usize> {
    let blocks = propagate_blocks(&built.system, &built.model, horizon).ok()?;
    blocks.iter().position(|b| {
        [Criterion::MinVolume, Criterion::MinTrace]
            .into_iter()
            .any(|c| outer_of_blocks(b, c, cfg).is_err())
    })
}

fn tube(built: &Built, horizon: usize, s: &Settings) -> Result<ReachTube, CliError> {
    let cfg = TubeConfig {
        fixed_point: s.fixed_point,
        ..Default::default()
    };
    reach_tube(&built.system, &built.model, horizon, &cfg).map_err(|e| {
        let e = CliError::from(e);
        match failing_step(built, horizon, &s.fixed_point) {
            Some(t) => e.context(format!("step {t}")),
            None => e,
        }
    })
}

pub fn psum_outer(opts: &Options, p: Option<&str>, shapes: &[String], center: Option<&str>) -> Result<(), CliError> {
    let set = if shapes.is_empty() {
        if p.is_some() || center.is_some() {
            return Err(CliError::Input("--p and --center need at least one --shape".into()));
        }
        let file = scenario_arg(opts).map_err(|_| CliError::Input("give --shape matrices or a --scenario".into()))?;
        file.build()?.model.initial
    } else {
        let p: Exponent = p
            .ok_or_else(|| CliError::Input("--p is required with --shape".into()))?
            .parse()?;
        let shapes = shapes.iter().map(|s| parse_shape(s)).collect::<Result<Vec<_>, _>>()?;
        let d = shapes[0].dim();
        let c = match center {
            Some(c) => Vector::from_vec(numbers(c, "--center")?),
            None => Vector::zeros(d),
        };
        PSumSet::new(p, c, shapes)?
    };
    let file = opts.scenario.as_deref().map(ScenarioFile::resolve).transpose()?;
    let settings = Settings::resolve(opts, file.as_ref())?;
    let mut records = Vec::new();
    for &c in &settings.criteria {
        let start = Instant::now();
        let r = fold_psum_outer(&set, c, &settings.fixed_point)?;
        let seconds = start.elapsed().as_secs_f64();
        records.push(OuterRecord::new(&r, set.p().to_string(), seconds));
    }
    for r in &records {
        println!("{}", serde_json::to_string(r)?);
    }
    if let Some(dir) = settings.out_dir()? {
        output::write_log(&dir.join("psum_outer.jsonl"), &records)?;
    }
    Ok(())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"))
}

fn print_table(rows: &[StepRow]) {
    println!(
        "{:>4} {:>9} {:>14} {:>14} {:>13} {:>5} {:>13} {:>13} {:>13} {:>11}",
        "t", "criterion", "volume", "trace", "beta", "iter", "foc_residual", "hausdorff_ub", "hausdorff", "seconds"
    );
    for r in rows {
        println!(
            "{:>4} {:>9} {:>14.6} {:>14.6} {:>13} {:>5} {:>13} {:>13.6e} {:>13.6e} {:>11.3e}",
            r.t,
            r.criterion,
            r.volume,
            r.trace,
            fmt_opt(r.beta),
            r.iterations,
            fmt_opt(r.foc_residual),
            r.hausdorff_bound,
            r.hausdorff_sampled,
            r.seconds
        );
    }
}

pub fn reach(opts: &Options) -> Result<(), CliError> {
    let file = scenario_arg(opts)?;
    let settings = Settings::resolve(opts, Some(&file))?;
    let built = file.build()?;
    let horizon = horizon_of(opts, &file);
    let tube = tube(&built, horizon, &settings)?;
    let reports = report(&tube)?;
    let dim = file.state_dim;
    let dirs = settings.sampler(dim).directions()?;

    let mut rows = Vec::new();
    let mut shapes = Vec::new();
    for (st, rep) in tube.steps.iter().zip(&reports) {
        for &c in &settings.criteria {
            let res = st.result(c);
            let sampled = hausdorff_sampled_on(&res.ellipsoid(), |y| st.support(y), &dirs, Strategy::default())
                .map_err(|e| CliError::from(e).context(format!("step {}", st.t)))?;
            rows.push(StepRow::new(st.t, c, rep.record(c), rep.bound_kind, sampled));
            shapes.push((st.blocks.blocks().len(), res));
        }
    }
    print_table(&rows);

    let Some(dir) = settings.out_dir()? else {
        return Ok(());
    };
    // The scenario as run, so the output directory can be replayed.
    fs::write(dir.join("scenario.toml"), file.to_toml()?)?;
    if output::wants_table(settings.format) {
        output::write_table(&dir.join("steps.csv"), &rows)?;
    }
    if output::wants_log(settings.format) {
        let logs: Vec<StepLog> = rows
            .iter()
            .zip(&shapes)
            .map(|(row, (blocks, res))| StepLog {
                row,
                blocks: *blocks,
                tightness: output::tightness_name(res.tightness),
                center: res.center.iter().copied().collect(),
                shape: output::spd_rows(&res.shape),
            })
            .collect();
        output::write_log(&dir.join("steps.jsonl"), &logs)?;
    }
    if dim == 2 {
        let n = settings.boundary_points;
        let poly = dir.join("polylines");
        fs::create_dir_all(&poly)?;
        for st in &tube.steps {
            let mut curves = vec![("exact", output::exact_polyline(&st.blocks, n)?)];
            for &c in &settings.criteria {
                let label = match c {
                    Criterion::MinVolume => "mvoe",
                    Criterion::MinTrace => "mtoe",
                };
                curves.push((label, output::ellipse_polyline(&st.result(c).ellipsoid(), n)));
            }
            output::write_polylines(&poly.join(format!("step_{:03}.txt", st.t)), &curves)?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ReproRow {
    t: usize,
    computed: f64,
    published: f64,
    rel_error: f64,
}

pub fn repro(opts: &Options, name: Table) -> Result<(), CliError> {
    let (file, published): (_, &[f64]) = match name {
        Table::Table1 => (ScenarioFile::resolve("table1")?, &ELLIPSOIDAL_MVOE_VOLUMES),
        Table::Table2 => (ScenarioFile::resolve("table2")?, &MIXED_MVOE_VOLUMES),
    };
    let settings = Settings::resolve(opts, Some(&file))?;
    let built = file.build()?;
    let start = Instant::now();
    let tube = tube(&built, published.len(), &settings)?;
    let elapsed = start.elapsed().as_secs_f64();

    println!("{}: minimum-volume outer ellipsoid volumes", file.name);
    println!("{:>4} {:>14} {:>14} {:>12}", "t", "computed", "published", "rel_error");
    let mut rows = Vec::new();
    for (st, &want) in tube.steps[1..].iter().zip(published) {
        let got = st.mvoe.volume();
        let rel = (got - want).abs() / want;
        let mark = if rel <= REPRO_TOL { "ok" } else { "MISMATCH" };
        println!("{:>4} {:>14.4} {:>14.4} {:>12.3e} {mark}", st.t, got, want, rel);
        rows.push(ReproRow {
            t: st.t,
            computed: got,
            published: want,
            rel_error: rel,
        });
    }
    let matched = rows.iter().filter(|r| r.rel_error <= REPRO_TOL).count();
    println!("{matched}/{} within {REPRO_TOL:e} relative ({elapsed:.3} s)", rows.len());
    if let Some(dir) = settings.out_dir()? {
        let mut w = csv::Writer::from_path(dir.join(format!("repro_{}.csv", file.name)))?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    if matched == rows.len() {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "{} of {} volumes differ from the published values by more than {REPRO_TOL:e}",
            rows.len() - matched,
            rows.len()
        )))
    }
}

#[derive(Debug, Serialize)]
struct ContainmentRecord {
    t: usize,
    criterion: &'static str,
    directions: usize,
    min_margin: f64,
    worst_direction: Vec<f64>,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct ReferenceRecord {
    t: usize,
    reference_volume: f64,
    mvoe_volume: f64,
    ratio: f64,
    passed: bool,
}

pub fn verify(opts: &Options) -> Result<(), CliError> {
    let file = scenario_arg(opts)?;
    let settings = Settings::resolve(opts, Some(&file))?;
    let built = file.build()?;
    let tube = tube(&built, horizon_of(opts, &file), &settings)?;
    let dirs = settings.sampler(file.state_dim).directions()?;
    let scale = opts.scale_outer.unwrap_or(1.0);

    let mut containment = Vec::new();
    for st in &tube.steps {
        for &c in &settings.criteria {
            let r = st.result(c);
            let outer = Ellipsoid::new(r.center.clone(), r.shape.scaled(scale)?)?;
            let rep = check_containment_on(&outer, |y| st.support(y), &dirs, MARGIN_TOL, Strategy::default())?;
            println!(
                "containment t={:<3} {:<6} min margin {:>12.4e} over {} directions  {}",
                st.t,
                output::criterion_name(c),
                rep.min_margin,
                rep.directions_tested,
                if rep.passed() { "pass" } else { "FAIL" }
            );
            containment.push(ContainmentRecord {
                t: st.t,
                criterion: output::criterion_name(c),
                directions: rep.directions_tested,
                min_margin: rep.min_margin,
                worst_direction: rep.worst_direction.iter().copied().collect(),
                passed: rep.passed(),
            });
        }
    }

    let mut references = Vec::new();
    if settings.reference_dirs > 0 {
        for st in &tube.steps {
            let reference = minkowski_mvee_reference(&st.blocks, settings.reference_dirs, KHACHIYAN_TOL)
                .map_err(|e| CliError::from(e).context(format!("reference at step {}", st.t)))?;
            let (rv, mv) = (reference.volume(), st.mvoe.volume());
            let passed = rv <= mv;
            println!(
                "reference   t={:<3} volume {:>12.4} vs mvoe {:>12.4} (ratio {:.5})  {}",
                st.t,
                rv,
                mv,
                rv / mv,
                if passed { "pass" } else { "FAIL" }
            );
            references.push(ReferenceRecord {
                t: st.t,
                reference_volume: rv,
                mvoe_volume: mv,
                ratio: rv / mv,
                passed,
            });
        }
    }

    if let Some(dir) = settings.out_dir()? {
        output::write_log(&dir.join("containment.jsonl"), &containment)?;
        if !references.is_empty() {
            output::write_log(&dir.join("reference.jsonl"), &references)?;
        }
    }

    let bad_c = containment.iter().filter(|r| !r.passed).count();
    let bad_r = references.iter().filter(|r| !r.passed).count();
    println!(
        "{} of {} containment checks passed, {} of {} reference checks passed",
        containment.len() - bad_c,
        containment.len(),
        references.len() - bad_r,
        references.len()
    );
    if bad_c + bad_r == 0 {
        return Ok(());
    }
    let worst = containment.iter().map(|r| r.min_margin).fold(f64::INFINITY, f64::min);
    Err(CliError::Verification(format!(
        "{bad_c} containment and {bad_r} reference checks failed (worst margin {worst:e})"
    )))
}
