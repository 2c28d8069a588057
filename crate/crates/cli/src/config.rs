//! Run configuration: flags override a `key=value` file, which overrides defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use lshoot_core::{Error, IntegratorControls, Params, Scan};
use serde::Serialize;

use crate::cli::Common;

/// Keys a config file may set. Hyphens and underscores are interchangeable.
pub const KEYS: &[&str] = &[
    "n",
    "lambda",
    "delta",
    "tol",
    "rel_tol",
    "abs_tol",
    "s_max",
    "r_max",
    "x_max",
    "event_tol",
    "max_steps",
    "max_step",
    "degeneracy_margin",
    "scan",
    "report_flipped",
    "segments",
    "mesh_points",
    "grid",
    "from",
    "to",
    "lambdas",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile(BTreeMap<String, String>);

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {raw:?}", i + 1)))?;
            let key = k.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("line {}: unknown key {key:?}", i + 1)));
            }
            if map.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {key:?}", i + 1)));
            }
        }
        Ok(Self(map))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Flag value if given, else the parsed file value, else `None`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, Error> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.0
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Config(format!("bad value for {key}: {v:?}")))
            })
            .transpose()
    }

    pub fn pick_list(&self, flag: Option<Vec<f64>>, key: &str) -> Result<Option<Vec<f64>>, Error> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.0
            .get(key)
            .map(|v| {
                v.split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| Error::Config(format!("bad value for {key}: {v:?}")))
            })
            .transpose()
    }
}

fn parse_scan(v: &str) -> Result<Scan, Error> {
    match v {
        "s1" => Ok(Scan::S1),
        "s2" => Ok(Scan::S2),
        "s3" => Ok(Scan::S3),
        "s4" => Ok(Scan::S4),
        "full" => Ok(Scan::Full),
        _ => Err(Error::Config(format!(
            "scan must be one of s1, s2, s3, s4, full; got {v:?}"
        ))),
    }
}

fn parse_r_max(v: &str) -> Result<Option<f64>, Error> {
    if v == "auto" {
        return Ok(None);
    }
    v.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Config(format!("r_max must be a number or auto; got {v:?}")))
}

/// Settings shared by every subcommand, after merging flags, file and defaults.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub n: u32,
    pub lambda: f64,
    pub controls: IntegratorControls,
    pub report_flipped: bool,
}

impl RunConfig {
    pub fn resolve(common: &Common, file: &ConfigFile, default_scan: Scan) -> Result<Self, Error> {
        let d = IntegratorControls::default();
        let n = file.pick(common.n, "n")?.unwrap_or(2);
        let lambda = file
            .pick(common.lambda, "lambda")?
            .ok_or_else(|| Error::Config("lambda is required (flag --lambda or config key)".into()))?;
        let scan = match file.pick(common.scan.clone(), "scan")? {
            Some(s) => parse_scan(&s)?,
            None => default_scan,
        };
        let r_max = match file.pick(common.r_max.clone(), "r_max")? {
            Some(v) => parse_r_max(&v)?,
            None => d.r_max,
        };
        let controls = IntegratorControls {
            rel_tol: file.pick(common.rel_tol, "rel_tol")?.unwrap_or(d.rel_tol),
            abs_tol: file.pick(common.abs_tol, "abs_tol")?.unwrap_or(d.abs_tol),
            s_max: file.pick(common.s_max, "s_max")?.unwrap_or(d.s_max),
            r_max,
            x_max: file.pick(common.x_max, "x_max")?.unwrap_or(d.x_max),
            event_tol: file.pick(common.event_tol, "event_tol")?.unwrap_or(d.event_tol),
            max_steps: file.pick(common.max_steps, "max_steps")?.unwrap_or(d.max_steps),
            max_step: file.pick(common.max_step, "max_step")?.unwrap_or(d.max_step),
            degeneracy_margin: file
                .pick(common.degeneracy_margin, "degeneracy_margin")?
                .unwrap_or(d.degeneracy_margin),
            scan,
        };
        let report_flipped = common.report_flipped || file.pick(None::<bool>, "report_flipped")?.unwrap_or(false);
        let cfg = Self {
            n,
            lambda,
            controls,
            report_flipped,
        };
        cfg.params()?;
        cfg.controls.validate()?;
        Ok(cfg)
    }

    pub fn params(&self) -> Result<Params, Error> {
        Params::new(self.n, self.lambda)
    }

    /// Lambda as written to reports.
    pub fn reported_lambda(&self) -> f64 {
        if self.report_flipped {
            -self.lambda
        } else {
            self.lambda
        }
    }
}
