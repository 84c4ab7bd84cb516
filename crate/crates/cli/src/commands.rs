//! One function per subcommand. Each writes its artifacts and returns the
//! summary that is also printed to stdout.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use randbill_core::circle::{
    caustic_of_set, caustic_of_trajectory, dense_orbit_discrepancy, min_chord_distance, simulate as circle_run,
};
use randbill_core::export::{write_circle_svg, write_pipeline_csv, write_trajectory_csv, write_tv_csv, SvgScene};
use randbill_core::feres::branch_probabilities_raw;
use randbill_core::measure::{
    invariant_family_check, kernel_pushforward, knudsen_trace, liouville_residual_one, total_variation,
    InvariantIntervalFamily,
};
use randbill_core::pipeline::{pipeline_lyapunov, pipeline_simulate};
use randbill_core::reachable::{
    is_aperiodic, is_irreducible, period, reachable_angles, stationary_distribution, stationary_residual,
    transition_matrix, ReachableSet,
};
use randbill_core::{AngleDensity, AngleSpec, BaseAngle, PhasePoint, PipelineState, Reference, SymbolicAngle, Wall};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Table};
use crate::error::CliError;

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Arc bins for the equidistribution estimate.
const DISCREPANCY_BINS: usize = 20;

/// Tolerance on the chord-distance lower bound.
const CHORD_TOL: f64 = 1e-9;

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_with<F>(dir: &Path, name: &str, body: F) -> Result<String, CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    create_dir(dir)?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut out = BufWriter::new(file);
    body(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(&path, e))?;
    Ok(name.to_string())
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<String, CliError> {
    write_with(dir, name, |out| {
        serde_json::to_writer_pretty(&mut *out, value)?;
        writeln!(out)
    })
}

/// Fields common to every summary: the resolved config and the version.
fn stamp(cfg: &ExperimentConfig, command: &str, mut body: Value) -> Value {
    body["command"] = json!(command);
    body["alpha"] = json!(cfg.base);
    body["mode"] = json!(cfg.mode());
    body["config"] = json!(cfg);
    body["version"] = json!(VERSION);
    body
}

/// `θ₀ + 2α`, `−θ₀ + 2π − 4α`, ...
fn label(a: &SymbolicAngle) -> String {
    let mut s = String::from(if a.sign < 0 { "-θ" } else { "θ" });
    if a.j != 0 {
        let sign = if a.j < 0 { '-' } else { '+' };
        match a.j.abs() {
            1 => s.push_str(&format!(" {sign} π")),
            j => s.push_str(&format!(" {sign} {j}π")),
        }
    }
    if a.k != 0 {
        let sign = if a.k < 0 { '-' } else { '+' };
        match a.k.abs() {
            1 => s.push_str(&format!(" {sign} α")),
            k => s.push_str(&format!(" {sign} {k}α")),
        }
    }
    s
}

fn state_records(set: &ReachableSet) -> Vec<Value> {
    let ratios = set.pi_ratios();
    set.states()
        .iter()
        .zip(set.values())
        .enumerate()
        .map(|(i, (a, &value))| {
            json!({
                "label": label(a),
                "sign": a.sign,
                "j": a.j,
                "k": a.k,
                "value": value,
                "pi_ratio": ratios.as_ref().map(|r| r[i].to_string()),
            })
        })
        .collect()
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Value, CliError> {
    let dir = &cfg.output_dir;
    let traj = circle_run(PhasePoint::new(cfg.s0, cfg.theta0()), cfg.steps, &cfg.base, cfg.seed)?;
    let caustic = caustic_of_trajectory(&traj);
    let discrepancy = dense_orbit_discrepancy(&traj, DISCREPANCY_BINS).ok();
    let lyapunov = if traj.is_empty() {
        None
    } else {
        Some(traj.jacobian().lyapunov((cfg.direction[0], cfg.direction[1]))?)
    };
    let min_chord = (!traj.is_empty()).then(|| min_chord_distance(&traj));

    let mut files = vec![write_with(dir, "trajectory.csv", |out| write_trajectory_csv(&traj, out))?];
    let scene = SvgScene {
        trajectory: Some(&traj),
        max_chords: cfg.max_chords,
        circles: Vec::new(),
        caustic: (!caustic.degenerate).then_some(caustic.radius),
        title: format!("circle orbit, α = {}, θ₀ = {}", cfg.base, cfg.theta0),
    };
    files.push(write_with(dir, "trajectory.svg", |out| write_circle_svg(&scene, out))?);

    let mut summary = stamp(
        cfg,
        "simulate",
        json!({
            "seed": cfg.seed,
            "n": traj.len(),
            "caustic_radius": caustic.radius,
            "degenerate": caustic.degenerate,
            "attaining_angle": caustic.attaining_angle,
            "min_chord_distance": min_chord,
            "discrepancy": discrepancy,
            "lyapunov": lyapunov,
        }),
    );
    files.push("summary.json".into());
    summary["files"] = json!(files);
    write_json(dir, "summary.json", &summary)?;
    Ok(summary)
}

pub fn markov(cfg: &ExperimentConfig) -> Result<Value, CliError> {
    let dir = &cfg.output_dir;
    let set = reachable_angles(cfg.theta0_spec, &cfg.base, None)?;
    let p = transition_matrix(&set, false)?;
    let irreducible = is_irreducible(&p);
    let complete = !set.truncated();
    let (stationary, residual) = if irreducible && complete {
        let pi = stationary_distribution(&p)?;
        let r = stationary_residual(&p, &pi);
        (Some(pi), Some(r))
    } else {
        (None, None)
    };
    let summary = stamp(
        cfg,
        "markov",
        json!({
            "theta0": cfg.theta0,
            "n_states": set.len(),
            "truncated": set.truncated(),
            "depth": set.depth(),
            "states": state_records(&set),
            "matrix": p.rows(),
            "substochastic": p.is_substochastic(),
            "irreducible": irreducible,
            "period": if irreducible { period(&p).ok() } else { None },
            "aperiodic": if irreducible { is_aperiodic(&p).ok() } else { None },
            "stationary": stationary,
            "stationary_residual": residual,
            "contains_right_angle": set.contains_right_angle(),
            "files": ["markov.json"],
        }),
    );
    write_json(dir, "markov.json", &summary)?;
    Ok(summary)
}

fn parse_pair(text: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Config(format!("expected two angles `a,b`, got {text:?}"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    let a: AngleSpec = a.parse().map_err(|_| bad())?;
    let b: AngleSpec = b.parse().map_err(|_| bad())?;
    let (a, b) = (a.radians(), b.radians());
    if !(0.0 <= a && a < b && b <= PI) {
        return Err(CliError::Config(format!("interval {text:?} must satisfy 0 ≤ a < b ≤ π")));
    }
    Ok((a, b))
}

fn family_interval(base: &BaseAngle, j: usize) -> Result<(f64, f64), CliError> {
    let fam = InvariantIntervalFamily::new(base)
        .map_err(|_| CliError::Config("interval:Ij needs a rational α = mπ/n".into()))?;
    let (l, r) = fam.intervals.get(j.wrapping_sub(1)).copied().ok_or_else(|| {
        CliError::Config(format!(
            "interval I{j} does not exist; the family has I1..I{}",
            fam.intervals.len()
        ))
    })?;
    Ok((
        *l.numer() as f64 / *l.denom() as f64 * PI,
        *r.numer() as f64 / *r.denom() as f64 * PI,
    ))
}

/// `mu`, `mu:a,b`, `interval:Ij`, `interval:a,b` or `file:path`.
fn initial_density(cfg: &ExperimentConfig, reference: Reference) -> Result<AngleDensity, CliError> {
    let spec = cfg.initial.trim();
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let d = match kind {
        "mu" if arg.is_empty() => AngleDensity::mu(cfg.bins, reference),
        "mu" => {
            let (a, b) = parse_pair(arg)?;
            AngleDensity::mu_on(a, b, cfg.bins, reference)?
        }
        "interval" => {
            let (a, b) = match arg.strip_prefix('I') {
                Some(j) => {
                    let j: usize = j
                        .parse()
                        .map_err(|_| CliError::Config(format!("bad interval index in {spec:?}")))?;
                    family_interval(&cfg.base, j)?
                }
                None => parse_pair(arg)?,
            };
            AngleDensity::uniform_on(a, b, cfg.bins, reference)?
        }
        "file" => {
            let path = Path::new(arg);
            let f = File::open(path).map_err(|e| CliError::io(path, e))?;
            let d = AngleDensity::read_csv(BufReader::new(f), reference)?;
            if d.bins() != cfg.bins {
                return Err(CliError::Config(format!(
                    "{arg} has {} bins but --bins is {}",
                    d.bins(),
                    cfg.bins
                )));
            }
            d
        }
        _ => {
            return Err(CliError::Config(format!(
                "unknown --initial {spec:?}; use mu, mu:a,b, interval:Ij, interval:a,b or file:path"
            )))
        }
    };
    Ok(d)
}

pub fn knudsen(cfg: &ExperimentConfig) -> Result<Value, CliError> {
    let dir = &cfg.output_dir;
    let reference: Reference = cfg.reference.into();
    let init = initial_density(cfg, reference)?;
    let family = InvariantIntervalFamily::new(&cfg.base).ok();
    let cover = family.as_ref().map(|f| f.covering_cells(cfg.bins));
    let mut confined = cover.is_some();
    let mut last = init.clone();
    let tv = knudsen_trace(&init, &cfg.base, cfg.steps, |_, d| {
        if let Some(c) = &cover {
            confined &= d.support().into_iter().all(|k| c[k]);
        }
        last = d.clone();
    });

    let files = vec![
        write_with(dir, "knudsen.csv", |out| write_tv_csv(&tv, out))?,
        write_with(dir, "density_initial.csv", |out| init.write_csv(out))?,
        write_with(dir, "density_final.csv", |out| last.write_csv(out))?,
        "knudsen.json".to_string(),
    ];
    let family_json = family.as_ref().map(|f| {
        let floor = 1.0 - f.mu_mass() - 2.0 / cfg.bins as f64;
        json!({
            "intervals": f.intervals.len(),
            "mu_mass": f.mu_mass(),
            "aligned": f.aligned_with(cfg.bins),
            "confined": confined,
            "tv_floor": floor,
            "floor_respected": tv.iter().all(|&d| d >= floor),
        })
    });
    let summary = stamp(
        cfg,
        "knudsen",
        json!({
            "bins": cfg.bins,
            "reference": cfg.reference,
            "initial": cfg.initial,
            "steps": cfg.steps,
            "tv_initial": tv[0],
            "tv_final": tv[tv.len() - 1],
            "tv_min": tv.iter().copied().fold(f64::INFINITY, f64::min),
            "family": family_json,
            "files": files,
        }),
    );
    write_json(dir, "knudsen.json", &summary)?;
    Ok(summary)
}

pub fn caustic(cfg: &ExperimentConfig) -> Result<Value, CliError> {
    let dir = &cfg.output_dir;
    let set = reachable_angles(cfg.theta0_spec, &cfg.base, None)?;
    let c = caustic_of_set(&set);
    let traj = circle_run(PhasePoint::new(cfg.s0, cfg.theta0()), cfg.steps, &cfg.base, cfg.seed)?;
    let min_chord = (!traj.is_empty()).then(|| min_chord_distance(&traj));
    let mut radii: Vec<f64> = set.values().iter().map(|t| t.cos().abs()).collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let scene = SvgScene {
        trajectory: Some(&traj),
        max_chords: cfg.max_chords,
        circles: radii.clone(),
        caustic: (!c.degenerate).then_some(c.radius),
        title: format!("caustic, α = {}, θ₀ = {}", cfg.base, cfg.theta0),
    };
    let files = vec![
        write_with(dir, "caustic.svg", |out| write_circle_svg(&scene, out))?,
        "caustic.json".to_string(),
    ];
    let summary = stamp(
        cfg,
        "caustic",
        json!({
            "radius": c.radius,
            "degenerate": c.degenerate,
            "attaining_angle": c.attaining_angle,
            "n_states": set.len(),
            "truncated": set.truncated(),
            "circle_radii": radii,
            "steps": traj.len(),
            "min_chord_distance": min_chord,
            "bound_respected": min_chord.map(|m| m >= c.radius - CHORD_TOL),
            "files": files,
        }),
    );
    write_json(dir, "caustic.json", &summary)?;
    Ok(summary)
}

pub fn lyapunov(cfg: &ExperimentConfig) -> Result<Value, CliError> {
    let dir = &cfg.output_dir;
    let v = (cfg.direction[0], cfg.direction[1]);
    let (body, files) = match cfg.table {
        Table::Circle => {
            let traj = circle_run(PhasePoint::new(cfg.s0, cfg.theta0()), cfg.steps, &cfg.base, cfg.seed)?;
            let j = traj.jacobian();
            let estimate = j.lyapunov(v)?;
            (
                json!({ "estimate": estimate, "jacobian": j }),
                vec!["lyapunov.json".to_string()],
            )
        }
        Table::Pipeline => {
            if cfg.strict && !cfg.base.is_rational() {
                return Err(CliError::Config(format!(
                    "the pipeline zero-exponent bound holds only for α = mπ/n, got α = {}; pass --allow-irrational to run anyway",
                    cfg.base
                )));
            }
            let start = PipelineState {
                s: cfg.s0,
                wall: Wall::Bottom,
                theta: cfg.theta0(),
            };
            let r = pipeline_lyapunov(start, cfg.theta0_spec, &cfg.base, cfg.steps, cfg.seed, v, cfg.strict)?;
            let traj = pipeline_simulate(start, cfg.steps, &cfg.base, cfg.seed)?;
            let csv = write_with(dir, "pipeline.csv", |out| write_pipeline_csv(&traj, out))?;
            (
                json!({ "estimate": r.estimate, "bound": r, "jacobian": traj.jacobian() }),
                vec![csv, "lyapunov.json".to_string()],
            )
        }
    };
    let mut summary = stamp(cfg, "lyapunov", body);
    summary["table"] = json!(cfg.table);
    summary["direction"] = json!(cfg.direction);
    summary["steps"] = json!(cfg.steps);
    summary["files"] = json!(files);
    write_json(dir, "lyapunov.json", &summary)?;
    Ok(summary)
}

#[derive(Serialize)]
struct CheckItem {
    name: String,
    value: f64,
    threshold: f64,
    passed: bool,
}

impl CheckItem {
    fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        CheckItem {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }

    fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        CheckItem {
            name: name.into(),
            value,
            threshold,
            passed: value >= threshold,
        }
    }
}

const GRID: usize = 10_000;

pub fn check(cfg: &ExperimentConfig) -> Result<Value, CliError> {
    let dir = &cfg.output_dir;
    let alpha = &cfg.base;
    let mut items = Vec::new();

    let bp = alpha.breakpoints();
    let (mut sum_err, mut min_p) = (0.0f64, f64::INFINITY);
    for i in 1..=GRID {
        let t = i as f64 * PI / (GRID + 1) as f64;
        if bp.iter().any(|b| (t - b).abs() <= 1e-9) {
            continue;
        }
        let p = branch_probabilities_raw(t, alpha);
        sum_err = sum_err.max((p.iter().sum::<f64>() - 1.0).abs());
        min_p = p.iter().copied().fold(min_p, f64::min);
    }
    items.push(CheckItem::at_most("normalization", sum_err, 1e-10));
    items.push(CheckItem::at_least("min_probability", min_p, -1e-12));

    let tests: [(&str, fn(f64) -> f64); 5] = [
        ("1", |_| 1.0),
        ("theta", |t| t),
        ("theta^2", |t| t * t),
        ("sin", f64::sin),
        ("cos3theta", |t| (3.0 * t).cos()),
    ];
    for (name, f) in tests {
        let r = liouville_residual_one(alpha, f)?;
        items.push(CheckItem::at_most(format!("liouville[{name}]"), r, 1e-8));
    }

    let mu = AngleDensity::mu(cfg.bins, Reference::Mu);
    let drift = total_variation(&kernel_pushforward(&mu, alpha), &mu)?;
    items.push(CheckItem::at_most("discrete_fixed_point", drift, 1e-12));

    let family = if alpha.is_rational() {
        let report = invariant_family_check(alpha)?;
        items.push(CheckItem {
            name: "interval_family".into(),
            value: report.violations.len() as f64,
            threshold: 0.0,
            passed: report.passed(),
        });
        Some(report)
    } else {
        None
    };

    let set = reachable_angles(cfg.theta0_spec, alpha, None)?;
    if !set.truncated() {
        let p = transition_matrix(&set, true)?;
        if is_irreducible(&p) {
            let pi = stationary_distribution(&p)?;
            items.push(CheckItem::at_most("stationary_residual", stationary_residual(&p, &pi), 1e-12));
        }
    }

    let failed: Vec<String> = items.iter().filter(|i| !i.passed).map(|i| i.name.clone()).collect();
    let summary = stamp(
        cfg,
        "check",
        json!({
            "passed": failed.is_empty(),
            "checks": items,
            "interval_family": family,
            "files": ["check.json"],
        }),
    );
    write_json(dir, "check.json", &summary)?;
    if failed.is_empty() {
        Ok(summary)
    } else {
        Err(CliError::CheckFailed(failed))
    }
}
