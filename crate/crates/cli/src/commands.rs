use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use lshoot_core::geometry::{complete_curve, flip};
use lshoot_core::io::{events_json, write_obj, write_profile_csv, write_sweep_csv, write_trajectory_csv, SearchReport};
use lshoot_core::search::label_transitions;
use lshoot_core::{
    convexity_check, curvature_profile, find_cylinder_delta, find_torus_deltas, integrate, lambda_threshold_scan,
    reflect_close, revolve_mesh, sweep, Error, Params, ProfileCurve, Scan, SearchResult,
};
use serde_json::{json, Value};

use crate::cli::{Command, Common};
use crate::config::{ConfigFile, RunConfig};

pub const DEFAULT_CYLINDER_TOL: f64 = 5e-11;
pub const DEFAULT_TORUS_TOL: f64 = 1e-12;
pub const DEFAULT_SEGMENTS: usize = 64;
pub const DEFAULT_MESH_POINTS: usize = 512;
pub const DEFAULT_GRID: usize = 50;
pub const DEFAULT_LAMBDAS: &[f64] = &[-0.4, -0.3, -0.24, -0.1, -0.05];

/// Files produced by a run, keyed by name so the manifest order is fixed.
#[derive(Default)]
pub struct Outputs {
    files: BTreeMap<String, Vec<u8>>,
    pub summary: Vec<String>,
}

impl Outputs {
    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.insert(name.to_string(), bytes);
    }

    fn add_json(&mut self, name: &str, v: &Value) {
        let mut bytes = serde_json::to_vec_pretty(v).expect("json values serialize");
        bytes.push(b'\n');
        self.add(name, bytes);
    }

    /// Write all files and the manifest under `dir`.
    pub fn write(mut self, dir: &Path, command: &str, config: Value) -> anyhow::Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let names: Vec<&String> = self.files.keys().collect();
        let manifest = json!({
            "tool": "lshoot",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": config,
            "files": names,
        });
        self.add_json("manifest.json", &manifest);
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

/// The outcome of a command: files to write, plus an error to report after writing them.
pub struct Run {
    pub name: &'static str,
    pub out: std::path::PathBuf,
    pub config: Value,
    pub outputs: Outputs,
    pub deferred: Option<Error>,
}

fn load_file(common: &Common) -> Result<ConfigFile, Error> {
    common
        .config
        .as_deref()
        .map_or_else(|| Ok(ConfigFile::default()), ConfigFile::load)
}

fn csv(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}

fn profile_bytes(curve: &ProfileCurve, params: &Params, flipped: bool) -> Result<Vec<u8>, Error> {
    let k = curvature_profile(curve, params)?;
    let k = if flipped { flip(&k) } else { k };
    Ok(csv(|w| write_profile_csv(w, curve, &k)))
}

fn report_json(r: &SearchResult, cfg: &RunConfig) -> Value {
    let mut v = serde_json::to_value(SearchReport::from(r)).expect("report serializes");
    v["lambda"] = json!(cfg.reported_lambda());
    v["normal"] = json!(if cfg.report_flipped { "flipped" } else { "as-integrated" });
    v["lo_label"] = json!(r.lo_label.label.as_str());
    v["hi_label"] = json!(r.hi_label.label.as_str());
    v["width"] = json!(r.width());
    v
}

fn negate_lambdas(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for (k, x) in map.iter_mut() {
                if k == "lambda" {
                    if let Some(l) = x.as_f64() {
                        *x = json!(-l);
                    }
                } else {
                    negate_lambdas(x);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(negate_lambdas),
        _ => {}
    }
}

pub fn run(command: Command) -> Result<Run, Error> {
    match command {
        Command::Shoot { common, delta } => shoot(common, delta),
        Command::FindCylinder { common, search } => {
            let file = load_file(&common)?;
            let cfg = RunConfig::resolve(&common, &file, Scan::S1)?;
            let tol = file.pick(search.tol, "tol")?.unwrap_or(DEFAULT_CYLINDER_TOL);
            find_cylinder(common, cfg, tol)
        }
        Command::FindTorus { common, search } => {
            let file = load_file(&common)?;
            let cfg = RunConfig::resolve(&common, &file, Scan::S1)?;
            let tol = file.pick(search.tol, "tol")?.unwrap_or(DEFAULT_TORUS_TOL);
            let segments = file.pick(search.segments, "segments")?.unwrap_or(DEFAULT_SEGMENTS);
            let mesh_points = file
                .pick(search.mesh_points, "mesh_points")?
                .unwrap_or(DEFAULT_MESH_POINTS);
            find_torus(common, cfg, tol, segments, mesh_points)
        }
        Command::Sweep { common, grid, from, to } => {
            let file = load_file(&common)?;
            let cfg = RunConfig::resolve(&common, &file, Scan::S1)?;
            let grid = file.pick(grid, "grid")?.unwrap_or(DEFAULT_GRID);
            let from = file.pick(from, "from")?.unwrap_or(0.02);
            let to = file.pick(to, "to")?.unwrap_or(0.99);
            run_sweep(common, cfg, grid, from, to)
        }
        Command::Scan { common, lambdas } => {
            let file = load_file(&common)?;
            let mut common = common;
            // lambda is per-row here; the single value is only a placeholder for validation
            common.lambda = common.lambda.or(Some(0.0));
            let cfg = RunConfig::resolve(&common, &file, Scan::S1)?;
            let lambdas = file
                .pick_list(lambdas, "lambdas")?
                .unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec());
            scan(common, cfg, lambdas)
        }
    }
}

fn shoot(common: Common, delta: Option<f64>) -> Result<Run, Error> {
    let file = load_file(&common)?;
    let cfg = RunConfig::resolve(&common, &file, Scan::S1)?;
    let delta = file
        .pick(delta, "delta")?
        .ok_or_else(|| Error::Config("delta is required (flag --delta or config key)".into()))?;
    let params = cfg.params()?;
    let traj = integrate(delta, &params, &cfg.controls)?;

    let mut outputs = Outputs::default();
    outputs.add("trajectory.csv", csv(|w| write_trajectory_csv(w, &traj.samples)));
    outputs.add_json(
        "events.json",
        &json!({
            "delta": delta,
            "termination": traj.termination,
            "steps": traj.steps,
            "events": events_json(&traj),
        }),
    );
    outputs.summary.push(format!(
        "shot delta={delta} ended by {} after {} samples",
        traj.termination.as_str(),
        traj.samples.len()
    ));
    let deferred = traj.termination.is_failure().then(|| {
        let last = traj.last().state;
        Error::StepFailure(format!("shot stopped at s = {}, r = {}", last.s, last.r))
    });
    let mut config = serde_json::to_value(&cfg).expect("config serializes");
    config["delta"] = json!(delta);
    Ok(Run {
        name: "shoot",
        out: common.out,
        config,
        outputs,
        deferred,
    })
}

fn find_cylinder(common: Common, cfg: RunConfig, tol: f64) -> Result<Run, Error> {
    let params = cfg.params()?;
    let r = find_cylinder_delta(&params, tol, &cfg.controls)?;
    let traj = r.trajectory.as_ref().expect("search keeps the converged shot");
    let curve = complete_curve(traj);
    let k = curvature_profile(&curve, &params)?;
    let k = if cfg.report_flipped { flip(&k) } else { k };
    let convexity = convexity_check(&k);

    let mut report = report_json(&r, &cfg);
    report["escape"] = serde_json::to_value(r.signature).expect("signature serializes");
    report["convexity"] = serde_json::to_value(&convexity).expect("convexity serializes");

    let mut outputs = Outputs::default();
    outputs.add_json("cylinder.json", &report);
    outputs.add(
        "cylinder_profile.csv",
        profile_bytes(&curve, &params, cfg.report_flipped)?,
    );
    outputs.summary.push(format!(
        "cylinder delta* = {:.15e} (bracket width {:.3e})",
        r.delta_star,
        r.width()
    ));

    let mut config = serde_json::to_value(&cfg).expect("config serializes");
    config["tol"] = json!(tol);
    Ok(Run {
        name: "find-cylinder",
        out: common.out,
        config,
        outputs,
        deferred: None,
    })
}

fn find_torus(common: Common, cfg: RunConfig, tol: f64, segments: usize, mesh_points: usize) -> Result<Run, Error> {
    let params = cfg.params()?;
    let (lo, hi) = find_torus_deltas(&params, tol, &cfg.controls)?;
    let mut outputs = Outputs::default();
    for (name, r) in [("torus_lower", &lo), ("torus_upper", &hi)] {
        let traj = r.trajectory.as_ref().expect("search keeps the converged shot");
        let curve = reflect_close(traj)?;
        let mut report = report_json(r, &cfg);
        report["curve"] = serde_json::to_value(curve.stats()).expect("stats serialize");
        outputs.add(
            &format!("{name}_profile.csv"),
            profile_bytes(&curve, &params, cfg.report_flipped)?,
        );
        if params.n == 2 {
            let mesh = revolve_mesh(&curve.decimated(mesh_points), segments)?;
            report["mesh"] = json!({
                "vertices": mesh.vertices.len(),
                "faces": mesh.faces.len(),
                "watertight": mesh.is_watertight(),
                "euler_characteristic": mesh.euler_characteristic(),
            });
            outputs.add(&format!("{name}.obj"), csv(|w| write_obj(w, &mesh)));
        }
        outputs.add_json(&format!("{name}.json"), &report);
        outputs.summary.push(format!(
            "{name} delta* = {:.15e} (closure error {:.3e})",
            r.delta_star,
            r.closure_error.unwrap_or(f64::NAN)
        ));
    }
    let mut config = serde_json::to_value(&cfg).expect("config serializes");
    config["tol"] = json!(tol);
    config["segments"] = json!(segments);
    config["mesh_points"] = json!(mesh_points);
    Ok(Run {
        name: "find-torus",
        out: common.out,
        config,
        outputs,
        deferred: None,
    })
}

fn run_sweep(common: Common, cfg: RunConfig, grid: usize, from: f64, to: f64) -> Result<Run, Error> {
    let params = cfg.params()?;
    if grid == 0 || !(0.0 < from && from <= to) {
        return Err(Error::Config(format!(
            "need grid > 0 and 0 < from <= to; got {grid}, {from}, {to}"
        )));
    }
    let radius = params.cylinder_radius();
    let deltas: Vec<f64> = (0..grid)
        .map(|k| {
            let t = if grid == 1 { 0.0 } else { k as f64 / (grid - 1) as f64 };
            radius * (from + (to - from) * t)
        })
        .collect();
    let rows = sweep(&params, &deltas, &cfg.controls);
    let transitions: Vec<Value> = label_transitions(&rows)
        .iter()
        .map(|(a, b, la, lb)| json!({"between": [a, b], "from": la.as_str(), "to": lb.as_str()}))
        .collect();

    let mut outputs = Outputs::default();
    outputs.add("sweep.csv", csv(|w| write_sweep_csv(w, &rows)));
    outputs.add_json("transitions.json", &Value::Array(transitions.clone()));
    let failed = rows.iter().filter(|r| r.label.is_none()).count();
    outputs.summary.push(format!(
        "swept {grid} launch radii: {} transitions, {failed} failures",
        transitions.len()
    ));

    let mut config = serde_json::to_value(&cfg).expect("config serializes");
    config["grid"] = json!(grid);
    config["from"] = json!(from);
    config["to"] = json!(to);
    Ok(Run {
        name: "sweep",
        out: common.out,
        config,
        outputs,
        deferred: None,
    })
}

fn scan(common: Common, cfg: RunConfig, lambdas: Vec<f64>) -> Result<Run, Error> {
    let result = lambda_threshold_scan(cfg.n, &lambdas, &cfg.controls)?;
    let mut v = serde_json::to_value(&result).expect("scan serializes");
    if cfg.report_flipped {
        negate_lambdas(&mut v);
    }
    v["note"] = json!("c1_estimate and c2_estimate are numerical estimates on this grid, not bounds");

    let mut outputs = Outputs::default();
    outputs.add_json("scan.json", &v);
    outputs.summary.push(format!(
        "scanned {} lambda values: c1 estimate {:?}, c2 estimate {:?}",
        lambdas.len(),
        result.c1_estimate,
        result.c2_estimate
    ));

    let mut config = serde_json::to_value(&cfg).expect("config serializes");
    if let Some(map) = config.as_object_mut() {
        map.remove("lambda");
    }
    config["lambdas"] = json!(lambdas);
    Ok(Run {
        name: "scan",
        out: common.out,
        config,
        outputs,
        deferred: None,
    })
}
