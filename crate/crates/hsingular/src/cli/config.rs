//! Flat `key = value` run configuration.
//!
//! The format is intentionally structure-free: one assignment per line,
//! sections carried by dotted key prefixes, full-line `#` comments, and
//! every key optional. Unknown keys are rejected with their line number.
//! An empty file is the bundled default instance.

use crate::heisenberg::{GroupPoint, ModelParams};
use crate::mesh::DomainSpec;
use crate::solver::{doubling_schedule, SolveConfig, SolveMethod};
use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("config constraint: {0}")]
    Constraint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Solve,
    Extremal,
    Verify,
    Exponents,
    MeshInfo,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "solve" => Ok(Mode::Solve),
            "extremal" => Ok(Mode::Extremal),
            "verify" => Ok(Mode::Verify),
            "exponents" => Ok(Mode::Exponents),
            "mesh-info" => Ok(Mode::MeshInfo),
            other => Err(format!(
                "unknown mode '{other}' (solve|extremal|verify|exponents|mesh-info)"
            )),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Solve => "solve",
            Mode::Extremal => "extremal",
            Mode::Verify => "verify",
            Mode::Exponents => "exponents",
            Mode::MeshInfo => "mesh-info",
        };
        f.write_str(s)
    }
}

/// How a nodal coefficient field is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Constant(f64),
    /// `base + slope * rho`, with `rho` the Korányi distance from the
    /// domain center.
    Radial {
        base: f64,
        slope: f64,
    },
    /// Values re-ingested from a solution CSV over the same mesh.
    Grid(PathBuf),
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Constant(v) => write!(f, "constant {v}"),
            FieldSpec::Radial { base, slope } => write!(f, "radial {base} + {slope} rho"),
            FieldSpec::Grid(p) => write!(f, "grid {}", p.display()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub domain: DomainSpec,
    pub h: f64,
    pub collar_width: f64,
    pub max_nodes: usize,
    pub params: ModelParams,
    pub delta_spec: FieldSpec,
    pub delta_epsilon: f64,
    pub delta_star: f64,
    pub source_spec: FieldSpec,
    pub source_m: f64,
    pub solve: SolveConfig,
    pub seed: u64,
    pub write_solution_csv: bool,
    pub write_radial_profile: bool,
    pub verify_samples: usize,
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

struct RawConfig {
    entries: HashMap<String, (usize, String)>,
}

impl RawConfig {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn take_parsed<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((line, value)) => value
                .parse::<T>()
                .map(Some)
                .map_err(|e| ConfigError::Parse {
                    line,
                    message: format!("invalid value '{value}' for {key}: {e}"),
                }),
        }
    }

    fn reject_leftovers(&self) -> Result<(), ConfigError> {
        if let Some((key, (line, _))) = self
            .entries
            .iter()
            .min_by_key(|(_, (line, _))| *line)
            .map(|(k, v)| (k.clone(), v.clone()))
        {
            return Err(ConfigError::Parse {
                line,
                message: format!("unknown key '{key}'"),
            });
        }
        Ok(())
    }
}

fn split_raw(text: &str) -> Result<RawConfig, ConfigError> {
    let mut entries = HashMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ConfigError::Parse {
                line,
                message: format!("expected 'key = value', got '{trimmed}'"),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::Parse {
                line,
                message: "empty key".into(),
            });
        }
        if let Some((first, _)) = entries.insert(key.clone(), (line, value)) {
            return Err(ConfigError::Parse {
                line,
                message: format!("duplicate key '{key}' (first set on line {first})"),
            });
        }
    }
    Ok(RawConfig { entries })
}

fn parse_f64_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|s| {
            s.trim().parse::<f64>().map_err(|e| ConfigError::Parse {
                line,
                message: format!("invalid number '{}' in {key}: {e}", s.trim()),
            })
        })
        .collect()
}

fn parse_schedule(line: usize, value: &str) -> Result<Vec<u64>, ConfigError> {
    if let Some(rest) = value.strip_prefix("doubling:") {
        let max_n: u64 = rest.trim().parse().map_err(|e| ConfigError::Parse {
            line,
            message: format!("invalid doubling bound '{rest}': {e}"),
        })?;
        if max_n == 0 {
            return Err(ConfigError::Parse {
                line,
                message: "doubling bound must be at least 1".into(),
            });
        }
        return Ok(doubling_schedule(max_n));
    }
    value
        .split(',')
        .map(|s| {
            s.trim().parse::<u64>().map_err(|e| ConfigError::Parse {
                line,
                message: format!("invalid level '{}': {e}", s.trim()),
            })
        })
        .collect()
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let mut raw = split_raw(text)?;

    let mode = match raw.take("mode") {
        None => Mode::Solve,
        Some((line, v)) => {
            Mode::from_str(&v).map_err(|message| ConfigError::Parse { line, message })?
        }
    };

    let n: usize = raw.take_parsed("params.n")?.unwrap_or(1);
    let s: f64 = raw.take_parsed("params.s")?.unwrap_or(0.5);
    let p: f64 = raw.take_parsed("params.p")?.unwrap_or(2.0);
    let params = ModelParams::new(n, s, p).map_err(|e| ConfigError::Constraint(e.to_string()))?;
    let dims = 2 * n + 1;

    let shape = raw.take("domain.shape").unwrap_or((0, "box".into()));
    let domain = match shape.1.as_str() {
        "box" => {
            if let Some((line, _)) = raw.take("domain.radius") {
                return Err(ConfigError::Parse {
                    line,
                    message: "domain.radius does not apply to a box domain".into(),
                });
            }
            if let Some((line, _)) = raw.take("domain.center") {
                return Err(ConfigError::Parse {
                    line,
                    message: "domain.center does not apply to a box domain".into(),
                });
            }
            let bounds = match raw.take("domain.bounds") {
                None => vec![(-1.0, 1.0); dims],
                Some((line, v)) => {
                    let flat = parse_f64_list(line, "domain.bounds", &v)?;
                    if flat.len() != 2 * dims {
                        return Err(ConfigError::Parse {
                            line,
                            message: format!(
                                "domain.bounds needs {} numbers (lo,hi per axis), got {}",
                                2 * dims,
                                flat.len()
                            ),
                        });
                    }
                    flat.chunks(2).map(|c| (c[0], c[1])).collect()
                }
            };
            DomainSpec::CoordinateBox { bounds }
        }
        "ball" => {
            if let Some((line, _)) = raw.take("domain.bounds") {
                return Err(ConfigError::Parse {
                    line,
                    message: "domain.bounds does not apply to a ball domain".into(),
                });
            }
            let radius: f64 = raw.take_parsed("domain.radius")?.unwrap_or(1.0);
            let center = match raw.take("domain.center") {
                None => GroupPoint::origin(n),
                Some((line, v)) => {
                    let c = parse_f64_list(line, "domain.center", &v)?;
                    if c.len() != dims {
                        return Err(ConfigError::Parse {
                            line,
                            message: format!(
                                "domain.center needs {dims} coordinates, got {}",
                                c.len()
                            ),
                        });
                    }
                    GroupPoint::new(c[..n].to_vec(), c[n..2 * n].to_vec(), c[2 * n])
                }
            };
            DomainSpec::KoranyiBall { radius, center }
        }
        other => {
            return Err(ConfigError::Parse {
                line: shape.0,
                message: format!("unknown domain.shape '{other}' (box|ball)"),
            })
        }
    };
    domain
        .validate()
        .map_err(|e| ConfigError::Constraint(e.to_string()))?;

    let h: f64 = raw.take_parsed("mesh.h")?.unwrap_or(0.4);
    let collar_width: f64 = raw.take_parsed("mesh.collar_width")?.unwrap_or(1.0);
    let max_nodes: usize = raw.take_parsed("mesh.max_nodes")?.unwrap_or(40_000);
    if !(h > 0.0) {
        return Err(ConfigError::Constraint(format!(
            "mesh.h must be positive, got {h}"
        )));
    }
    if !(collar_width > 0.0) {
        return Err(ConfigError::Constraint(format!(
            "mesh.collar_width must be positive, got {collar_width}"
        )));
    }

    let delta_spec = parse_field_spec(&mut raw, "delta", 0.5)?;
    if let FieldSpec::Constant(v) = delta_spec {
        if !(v > 0.0) {
            return Err(ConfigError::Constraint(format!(
                "delta must be positive, got {v}"
            )));
        }
    }
    let delta_epsilon: f64 = raw.take_parsed("delta.epsilon")?.unwrap_or(0.25);
    let default_star = match delta_spec {
        FieldSpec::Constant(v) => v.max(1.0),
        _ => 1.0,
    };
    let delta_star: f64 = raw.take_parsed("delta.delta_star")?.unwrap_or(default_star);
    if !(delta_epsilon > 0.0) {
        return Err(ConfigError::Constraint(format!(
            "delta.epsilon must be positive, got {delta_epsilon}"
        )));
    }
    if !(delta_star >= 1.0) {
        return Err(ConfigError::Constraint(format!(
            "delta.delta_star must be at least 1, got {delta_star}"
        )));
    }

    let source_spec = parse_field_spec(&mut raw, "source", 1.0)?;
    if let FieldSpec::Constant(v) = source_spec {
        if !(v > 0.0) {
            return Err(ConfigError::Constraint(format!(
                "a constant source must be positive (f >= 0, f not identically 0), got {v}"
            )));
        }
    }
    let source_m: f64 = raw.take_parsed("source.m")?.unwrap_or(2.0);
    if !(source_m >= 1.0) {
        return Err(ConfigError::Constraint(format!(
            "source.m must be at least 1, got {source_m}"
        )));
    }

    let mut solve = SolveConfig::default();
    if let Some((line, v)) = raw.take("solver.schedule") {
        solve.n_schedule = parse_schedule(line, &v)?;
    }
    let inner_tol = match raw.take("solver.inner_tol") {
        None => None,
        Some((_, v)) if v == "auto" => None,
        Some((line, v)) => Some(v.parse::<f64>().map_err(|e| ConfigError::Parse {
            line,
            message: format!("invalid solver.inner_tol '{v}': {e}"),
        })?),
    };
    if let Some(v) = raw.take_parsed("solver.outer_tol")? {
        solve.outer_tol = v;
    }
    if let Some(v) = raw.take_parsed("solver.max_inner_iters")? {
        solve.max_inner_iters = v;
    }
    if let Some(v) = raw.take_parsed("solver.armijo_c1")? {
        solve.armijo_c1 = v;
    }
    if let Some(v) = raw.take_parsed("solver.armijo_backtrack")? {
        solve.armijo_backtrack = v;
    }
    if let Some(v) = raw.take_parsed("solver.armijo_init_step")? {
        solve.armijo_init_step = v;
    }
    if let Some(v) = raw.take_parsed("solver.monotonicity_slack")? {
        solve.monotonicity_slack = v;
    }
    if let Some(v) = raw.take_parsed("solver.norm_slack")? {
        solve.norm_slack = v;
    }
    solve.method = match raw.take("solver.method") {
        None => SolveMethod::Auto,
        Some((line, v)) => match v.as_str() {
            "auto" => SolveMethod::Auto,
            "gradient" => SolveMethod::Gradient,
            "newton" => SolveMethod::Newton,
            other => {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("unknown solver.method '{other}' (auto|gradient|newton)"),
                })
            }
        },
    };
    solve.inner_tol = inner_tol.unwrap_or(if p == 2.0 { 1e-8 } else { 1e-6 });
    if matches!(solve.method, SolveMethod::Newton) && p != 2.0 {
        return Err(ConfigError::Constraint(format!(
            "solver.method = newton requires params.p = 2, got {p}"
        )));
    }
    solve
        .validate()
        .map_err(|e| ConfigError::Constraint(e.to_string()))?;

    let seed: u64 = raw.take_parsed("seed")?.unwrap_or(0);
    let write_solution_csv: bool = raw.take_parsed("output.solution_csv")?.unwrap_or(true);
    let write_radial_profile: bool = raw.take_parsed("output.radial_profile")?.unwrap_or(true);
    let verify_samples: usize = raw.take_parsed("verify.samples")?.unwrap_or(10_000);
    if verify_samples == 0 {
        return Err(ConfigError::Constraint(
            "verify.samples must be positive".into(),
        ));
    }

    raw.reject_leftovers()?;

    Ok(RunConfig {
        mode,
        domain,
        h,
        collar_width,
        max_nodes,
        params,
        delta_spec,
        delta_epsilon,
        delta_star,
        source_spec,
        source_m,
        solve,
        seed,
        write_solution_csv,
        write_radial_profile,
        verify_samples,
    })
}

fn parse_field_spec(
    raw: &mut RawConfig,
    section: &str,
    default_constant: f64,
) -> Result<FieldSpec, ConfigError> {
    let kind = raw
        .take(&format!("{section}.kind"))
        .unwrap_or((0, "constant".into()));
    let value_key = format!("{section}.value");
    let radial_key = format!("{section}.radial");
    let grid_key = format!("{section}.grid");
    let reject = |raw: &mut RawConfig, key: &str| -> Result<(), ConfigError> {
        if let Some((line, _)) = raw.take(key) {
            return Err(ConfigError::Parse {
                line,
                message: format!("{key} does not apply to {section}.kind = {}", kind.1),
            });
        }
        Ok(())
    };
    match kind.1.as_str() {
        "constant" => {
            reject(raw, &radial_key)?;
            reject(raw, &grid_key)?;
            let v: f64 = raw.take_parsed(&value_key)?.unwrap_or(default_constant);
            Ok(FieldSpec::Constant(v))
        }
        "radial" => {
            reject(raw, &value_key)?;
            reject(raw, &grid_key)?;
            let (line, v) = raw.take(&radial_key).ok_or_else(|| {
                ConfigError::Constraint(format!(
                    "{section}.kind = radial requires {radial_key} = base,slope"
                ))
            })?;
            let coeffs = parse_f64_list(line, &radial_key, &v)?;
            if coeffs.len() != 2 {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("{radial_key} needs exactly base,slope"),
                });
            }
            Ok(FieldSpec::Radial {
                base: coeffs[0],
                slope: coeffs[1],
            })
        }
        "grid" => {
            reject(raw, &value_key)?;
            reject(raw, &radial_key)?;
            let (_, v) = raw.take(&grid_key).ok_or_else(|| {
                ConfigError::Constraint(format!(
                    "{section}.kind = grid requires {grid_key} = <path>"
                ))
            })?;
            Ok(FieldSpec::Grid(PathBuf::from(v)))
        }
        other => Err(ConfigError::Parse {
            line: kind.0,
            message: format!("unknown {section}.kind '{other}' (constant|radial|grid)"),
        }),
    }
}

impl RunConfig {
    /// All effective settings as ordered `key = value` pairs, defaults
    /// included, for the summary echo.
    pub fn effective_entries(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        push("mode", self.mode.to_string());
        match &self.domain {
            DomainSpec::CoordinateBox { bounds } => {
                push("domain.shape", "box".into());
                let flat: Vec<String> = bounds
                    .iter()
                    .flat_map(|(lo, hi)| [lo.to_string(), hi.to_string()])
                    .collect();
                push("domain.bounds", flat.join(","));
            }
            DomainSpec::KoranyiBall { radius, center } => {
                push("domain.shape", "ball".into());
                push("domain.radius", radius.to_string());
                let mut c: Vec<String> = center.x.iter().map(|v| v.to_string()).collect();
                c.extend(center.y.iter().map(|v| v.to_string()));
                c.push(center.t.to_string());
                push("domain.center", c.join(","));
            }
        }
        push("mesh.h", self.h.to_string());
        push("mesh.collar_width", self.collar_width.to_string());
        push("mesh.max_nodes", self.max_nodes.to_string());
        push("params.n", self.params.n().to_string());
        push("params.s", self.params.s().to_string());
        push("params.p", self.params.p().to_string());
        push("delta.spec", self.delta_spec.to_string());
        push("delta.epsilon", self.delta_epsilon.to_string());
        push("delta.delta_star", self.delta_star.to_string());
        push("source.spec", self.source_spec.to_string());
        push("source.m", self.source_m.to_string());
        let schedule: Vec<String> = self.solve.n_schedule.iter().map(u64::to_string).collect();
        push("solver.schedule", schedule.join(","));
        push("solver.inner_tol", format!("{:e}", self.solve.inner_tol));
        push("solver.outer_tol", format!("{:e}", self.solve.outer_tol));
        push(
            "solver.max_inner_iters",
            self.solve.max_inner_iters.to_string(),
        );
        push("solver.armijo_c1", format!("{:e}", self.solve.armijo_c1));
        push(
            "solver.armijo_backtrack",
            self.solve.armijo_backtrack.to_string(),
        );
        push(
            "solver.armijo_init_step",
            self.solve.armijo_init_step.to_string(),
        );
        push(
            "solver.monotonicity_slack",
            format!("{:e}", self.solve.monotonicity_slack),
        );
        push("solver.norm_slack", format!("{:e}", self.solve.norm_slack));
        push(
            "solver.method",
            match self.solve.method {
                SolveMethod::Auto => "auto",
                SolveMethod::Gradient => "gradient",
                SolveMethod::Newton => "newton",
            }
            .to_string(),
        );
        push("seed", self.seed.to_string());
        push("output.solution_csv", self.write_solution_csv.to_string());
        push(
            "output.radial_profile",
            self.write_radial_profile.to_string(),
        );
        push("verify.samples", self.verify_samples.to_string());
        out
    }
}
