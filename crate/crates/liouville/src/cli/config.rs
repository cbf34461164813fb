//! Run configuration: defaults, INI-style config files, and flag overrides
//! (flags win over file values, file values over defaults).

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use crate::assembly::{Pairing, SpacetimeGrid};
use crate::expr::Params;
use crate::pipeline::PipelineSettings;

/// Tolerance knobs, all strictly positive.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub wronskian_drift: f64,
    pub residual: f64,
    pub newton: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            wronskian_drift: 1e-6,
            residual: 1e-5,
            newton: 1e-10,
        }
    }
}

/// Fully resolved configuration of a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub mass: f64,
    pub phi: Option<String>,
    pub pi: Option<String>,
    pub data_file: Option<PathBuf>,
    pub x0: f64,
    pub h: f64,
    pub grid: SpacetimeGrid<f64>,
    /// Half-width of the working interval for closed-form data.
    pub window: f64,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub eps: Vec<f64>,
    /// Include wall-clock timings in the manifest (off by default so that
    /// repeated runs produce bit-identical artifacts).
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mass: 1.0,
            phi: None,
            pi: None,
            data_file: None,
            x0: 0.0,
            h: 1e-3,
            grid: SpacetimeGrid::new(-2.0, 2.0, 41, -4.0, 4.0, 81),
            window: 8.0,
            tolerances: Tolerances::default(),
            seed: 0,
            out_dir: PathBuf::from("out"),
            eps: vec![1e-1, 1e-2, 1e-3],
            timings: false,
        }
    }
}

impl RunConfig {
    /// Expression parameters available in phi/pi/eta texts: the mass is
    /// bound to `m`.
    pub fn params(&self) -> Params<f64> {
        let mut p = Params::new();
        p.insert("m".to_string(), self.mass);
        p
    }

    pub fn pipeline_settings(&self, pairing: Pairing) -> PipelineSettings<f64> {
        let mut s = PipelineSettings::new(self.mass);
        s.x0 = self.x0;
        s.step = self.h;
        s.drift_tol = self.tolerances.wronskian_drift;
        s.window = self.window;
        s.pairing = pairing;
        s
    }

    /// Structural validation shared by all commands.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.mass > 0.0) {
            return Err("mass must be positive".into());
        }
        if !(self.h > 0.0) {
            return Err("ode step h must be positive".into());
        }
        for (name, v) in [
            ("wronskian_drift", self.tolerances.wronskian_drift),
            ("residual", self.tolerances.residual),
            ("newton", self.tolerances.newton),
        ] {
            if !(v > 0.0) {
                return Err(format!("tolerance `{name}` must be positive"));
            }
        }
        if !(self.window > 0.0) {
            return Err("window must be positive".into());
        }
        self.grid.validate().map_err(|e| e.to_string())?;
        Ok(())
    }
}

/// `lo:hi:n`
pub fn parse_range_spec(text: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected `lo:hi:n`, got `{text}`"));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| format!("bad number `{}`", parts[0]))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| format!("bad number `{}`", parts[1]))?;
    let n: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| format!("bad count `{}`", parts[2]))?;
    Ok((lo, hi, n))
}

/// `tmin:tmax:nt,xmin:xmax:nx`
pub fn parse_grid_spec(text: &str) -> Result<SpacetimeGrid<f64>, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(format!(
            "expected `tmin:tmax:nt,xmin:xmax:nx`, got `{text}`"
        ));
    }
    let (t_min, t_max, nt) = parse_range_spec(parts[0])?;
    let (x_min, x_max, nx) = parse_range_spec(parts[1])?;
    Ok(SpacetimeGrid::new(t_min, t_max, nt, x_min, x_max, nx))
}

/// `a,b,c` as floats
pub fn parse_eps_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad eps value `{s}`"))
        })
        .collect()
}

/// Flat key-value INI: `[section]` headers, `key = value` lines, `#`
/// comments. Unknown keys are rejected so typos do not silently fall back
/// to defaults.
pub fn apply_config_file(cfg: &mut RunConfig, text: &str) -> Result<(), String> {
    let mut section = String::new();
    let mut entries: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(format!("line {}: malformed section header", lineno + 1));
            }
            section = line[1..line.len() - 1].trim().to_lowercase();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected `key = value`", lineno + 1));
        };
        let full = if section.is_empty() {
            key.trim().to_lowercase()
        } else {
            format!("{section}.{}", key.trim().to_lowercase())
        };
        entries.insert(full, value.trim().to_string());
    }

    for (key, value) in entries {
        let fnum = || -> Result<f64, String> {
            value
                .parse()
                .map_err(|_| format!("`{key}`: bad number `{value}`"))
        };
        match key.as_str() {
            "data.m" => cfg.mass = fnum()?,
            "data.phi" => cfg.phi = Some(value),
            "data.pi" => cfg.pi = Some(value),
            "data.file" => cfg.data_file = Some(PathBuf::from(value)),
            "data.x0" => cfg.x0 = fnum()?,
            "grid.t" => {
                let (lo, hi, n) = parse_range_spec(&value)?;
                cfg.grid.t_min = lo;
                cfg.grid.t_max = hi;
                cfg.grid.nt = n;
            }
            "grid.x" => {
                let (lo, hi, n) = parse_range_spec(&value)?;
                cfg.grid.x_min = lo;
                cfg.grid.x_max = hi;
                cfg.grid.nx = n;
            }
            "run.h" => cfg.h = fnum()?,
            "run.window" => cfg.window = fnum()?,
            "run.seed" => {
                cfg.seed = value
                    .parse()
                    .map_err(|_| format!("`{key}`: bad integer `{value}`"))?
            }
            "run.out" => cfg.out_dir = PathBuf::from(value),
            "run.eps" => cfg.eps = parse_eps_list(&value)?,
            "tolerances.wronskian_drift" => cfg.tolerances.wronskian_drift = fnum()?,
            "tolerances.residual" => cfg.tolerances.residual = fnum()?,
            "tolerances.newton" => cfg.tolerances.newton = fnum()?,
            other => return Err(format!("unknown config key `{other}`")),
        }
    }
    Ok(())
}
