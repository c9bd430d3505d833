//! Run configuration in a flat `section.key = value` line format.
//!
//! `#` starts a comment, blank lines are skipped, keys are
//! `section.name` pairs and may appear at most once. Parsing fails on the
//! first offending line; every numeric constraint of the underlying types
//! is re-checked here so a bad config never reaches a solver.
//!
//! The grammar of the right-hand sides, including the profile
//! mini-language (`constant <level>`, `bump <base> <amp> <center>
//! <width>`, `sin <base> <amp> <freq>`), is documented in the README
//! together with the defaults filled for missing keys.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::forward::{Bounds, ModelConfig};
use crate::grid::Grid;
use crate::inverse::InverseConfig;
use crate::twin::{Profile, TwinSpec};

/// Configuration file diagnostics.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("syntax error: duplicate key `{key}` at lines {first} and {second}")]
    DuplicateKey {
        key: String,
        first: usize,
        second: usize,
    },
    #[error("invalid value for `{key}`{}: {constraint}", fmt_line(.line))]
    Validation {
        key: String,
        line: Option<usize>,
        constraint: String,
    },
}

fn fmt_line(line: &Option<usize>) -> String {
    match line {
        Some(l) => format!(" (line {l})"),
        None => String::new(),
    }
}

/// Paths to observation fields used instead of a synthetic twin.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationFiles {
    pub s_file: String,
    pub i_file: String,
}

/// Fully resolved run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub grid: Grid,
    pub model: ModelConfig,
    pub bounds: Bounds,
    pub s0: Profile,
    pub i0: Profile,
    pub twin: Option<TwinSpec>,
    pub observations: Option<ObservationFiles>,
    pub inverse: InverseConfig,
    /// Optimizer start overrides; box midpoints when absent.
    pub beta0: Option<Profile>,
    pub gamma0: Option<Profile>,
    pub sweep_deltas: Vec<f64>,
    pub sweep_seeds: Vec<u64>,
    pub output_dir: String,
}

impl RunConfig {
    /// The full key/value set after defaulting, in stable order. Embedded
    /// in every report so a run is reproducible from its artifacts.
    pub fn resolved_entries(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        push("grid.dim", self.grid.dim().to_string());
        push("grid.nx", self.grid.nx().to_string());
        push("grid.lx", self.grid.lx().to_string());
        if self.grid.dim() == 2 {
            push("grid.ny", self.grid.ny().to_string());
            push("grid.ly", self.grid.ly().to_string());
        }
        push("model.m", self.model.m().to_string());
        push("model.n", self.model.n().to_string());
        push("model.t", self.model.t_final().to_string());
        push("model.dt", self.model.dt().to_string());
        push("model.floor", self.model.floor().to_string());
        push("bounds.beta_min", self.bounds.beta_lo.to_string());
        push("bounds.beta_max", self.bounds.beta_hi.to_string());
        push("bounds.gamma_min", self.bounds.gamma_lo.to_string());
        push("bounds.gamma_max", self.bounds.gamma_hi.to_string());
        push("initial.s0", profile_to_string(&self.s0));
        push("initial.i0", profile_to_string(&self.i0));
        if let Some(t) = &self.twin {
            push("twin.beta", profile_to_string(&t.beta));
            push("twin.gamma", profile_to_string(&t.gamma));
            push("twin.noise", t.noise.to_string());
            push("twin.seed", t.seed.to_string());
        }
        if let Some(o) = &self.observations {
            push("observations.s_file", o.s_file.clone());
            push("observations.i_file", o.i_file.clone());
        }
        push("inverse.delta", self.inverse.delta.to_string());
        push("inverse.max_iters", self.inverse.max_iters.to_string());
        push("inverse.grad_tol", self.inverse.grad_tol.to_string());
        push("inverse.step0", self.inverse.step0.to_string());
        push("inverse.armijo_c", self.inverse.armijo_c.to_string());
        push("inverse.backtrack", self.inverse.backtrack.to_string());
        push(
            "inverse.sobolev_smoothing",
            if self.inverse.sobolev_smoothing {
                "on"
            } else {
                "off"
            }
            .to_string(),
        );
        push("inverse.sobolev_mu", self.inverse.sobolev_mu.to_string());
        if let Some(p) = &self.beta0 {
            push("inverse.beta0", profile_to_string(p));
        }
        if let Some(p) = &self.gamma0 {
            push("inverse.gamma0", profile_to_string(p));
        }
        push(
            "sweep.deltas",
            self.sweep_deltas
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        );
        push(
            "sweep.seeds",
            self.sweep_seeds
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        );
        push("output.dir", self.output_dir.clone());
        out
    }
}

fn profile_to_string(p: &Profile) -> String {
    match p {
        Profile::Constant { level } => format!("constant {level}"),
        Profile::GaussianBump {
            base,
            amplitude,
            center,
            width,
        } => {
            format!("bump {base} {amplitude} {center} {width}")
        }
        Profile::Sinusoidal {
            base,
            amplitude,
            frequency,
        } => {
            format!("sin {base} {amplitude} {frequency}")
        }
    }
}

/// Raw key/value table with line provenance.
struct Table {
    entries: BTreeMap<String, (usize, String)>,
}

impl Table {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                message: format!("expected `section.key = value`, got {line:?}"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.split('.').count() != 2 || key.split('.').any(str::is_empty) {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    message: format!("key must look like `section.name`, got {key:?}"),
                });
            }
            if value.is_empty() {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    message: format!("key `{key}` has an empty value"),
                });
            }
            if let Some((first, _)) = entries.insert(key.to_string(), (line_no, value.to_string()))
            {
                return Err(ConfigError::DuplicateKey {
                    key: key.to_string(),
                    first,
                    second: line_no,
                });
            }
        }
        Ok(Self { entries })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn parse_num<T: std::str::FromStr>(
        &mut self,
        key: &str,
        what: &str,
    ) -> Result<Option<(usize, T)>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, value)) => {
                let parsed = value.parse::<T>().map_err(|_| ConfigError::Validation {
                    key: key.to_string(),
                    line: Some(line),
                    constraint: format!("expected {what}, got {value:?}"),
                })?;
                Ok(Some((line, parsed)))
            }
        }
    }

    fn profile(&mut self, key: &str) -> Result<Option<(usize, Profile)>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, value)) => {
                let p = parse_profile(&value).map_err(|constraint| ConfigError::Validation {
                    key: key.to_string(),
                    line: Some(line),
                    constraint,
                })?;
                Ok(Some((line, p)))
            }
        }
    }
}

fn parse_profile(text: &str) -> Result<Profile, String> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let num = |tok: &str| -> Result<f64, String> {
        tok.parse::<f64>()
            .map_err(|_| format!("expected a number, got {tok:?}"))
    };
    match tokens.as_slice() {
        ["constant", level] => Ok(Profile::Constant { level: num(level)? }),
        ["bump", base, amp, center, width] => Ok(Profile::GaussianBump {
            base: num(base)?,
            amplitude: num(amp)?,
            center: num(center)?,
            width: num(width)?,
        }),
        ["sin", base, amp, freq] => Ok(Profile::Sinusoidal {
            base: num(base)?,
            amplitude: num(amp)?,
            frequency: freq
                .parse::<u32>()
                .map_err(|_| format!("expected an integer frequency, got {freq:?}"))?,
        }),
        _ => Err(format!(
            "profile must be `constant <level>`, `bump <base> <amp> <center> <width>` \
             or `sin <base> <amp> <freq>`, got {text:?}"
        )),
    }
}

fn validation(key: &str, line: Option<usize>, constraint: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        key: key.to_string(),
        line,
        constraint: constraint.into(),
    }
}

/// Parse and validate a configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut table = Table::parse(text)?;

    // Grid block: dim, nx, lx are required; ny, ly only in 2D.
    let (dim_line, dim) = table
        .parse_num::<usize>("grid.dim", "an integer")?
        .ok_or_else(|| validation("grid.dim", None, "required key is missing"))?;
    if dim != 1 && dim != 2 {
        return Err(validation("grid.dim", Some(dim_line), "must be 1 or 2"));
    }
    let (nx_line, nx) = table
        .parse_num::<usize>("grid.nx", "an integer")?
        .ok_or_else(|| validation("grid.nx", None, "required key is missing"))?;
    let (lx_line, lx) = table
        .parse_num::<f64>("grid.lx", "a number")?
        .ok_or_else(|| validation("grid.lx", None, "required key is missing"))?;
    let grid = if dim == 1 {
        for stale in ["grid.ny", "grid.ly"] {
            if let Some((line, _)) = table.take(stale) {
                return Err(validation(
                    stale,
                    Some(line),
                    "only meaningful when grid.dim = 2",
                ));
            }
        }
        Grid::line(nx, lx).map_err(|e| map_constant_err(e, nx_line.min(lx_line)))?
    } else {
        let (ny_line, ny) = table
            .parse_num::<usize>("grid.ny", "an integer")?
            .ok_or_else(|| validation("grid.ny", None, "required when grid.dim = 2"))?;
        let (ly_line, ly) = table
            .parse_num::<f64>("grid.ly", "a number")?
            .ok_or_else(|| validation("grid.ly", None, "required when grid.dim = 2"))?;
        Grid::rectangle(nx, ny, lx, ly)
            .map_err(|e| map_constant_err(e, nx_line.min(ny_line).min(lx_line).min(ly_line)))?
    };

    // Model block, all defaulted.
    let m = table.parse_num::<f64>("model.m", "a number")?;
    let n = table.parse_num::<f64>("model.n", "a number")?;
    let t = table.parse_num::<f64>("model.t", "a number")?;
    let t_value = t.map(|(_, v)| v).unwrap_or(1.0);
    let dt = table.parse_num::<f64>("model.dt", "a number")?;
    let floor = table.parse_num::<f64>("model.floor", "a number")?;
    let model_line = [&m, &n, &t, &dt]
        .iter()
        .filter_map(|o| o.map(|(l, _)| l))
        .min();
    let model = ModelConfig::new(
        m.map(|(_, v)| v).unwrap_or(0.5),
        n.map(|(_, v)| v).unwrap_or(0.5),
        t_value,
        dt.map(|(_, v)| v).unwrap_or(t_value / 64.0),
    )
    .and_then(|cfg| cfg.with_floor(floor.map(|(_, v)| v).unwrap_or(ModelConfig::DEFAULT_FLOOR)))
    .map_err(|e| map_constant_err(e, model_line.unwrap_or(0)))?;

    // Bounds block, defaulted to [0.1, 0.9] for both rates.
    let b_lo = table.parse_num::<f64>("bounds.beta_min", "a number")?;
    let b_hi = table.parse_num::<f64>("bounds.beta_max", "a number")?;
    let g_lo = table.parse_num::<f64>("bounds.gamma_min", "a number")?;
    let g_hi = table.parse_num::<f64>("bounds.gamma_max", "a number")?;
    let bounds_line = [&b_lo, &b_hi, &g_lo, &g_hi]
        .iter()
        .filter_map(|o| o.map(|(l, _)| l))
        .min();
    let bounds = Bounds::new(
        b_lo.map(|(_, v)| v).unwrap_or(0.1),
        b_hi.map(|(_, v)| v).unwrap_or(0.9),
        g_lo.map(|(_, v)| v).unwrap_or(0.1),
        g_hi.map(|(_, v)| v).unwrap_or(0.9),
    )
    .map_err(|e| match e {
        crate::error::Error::InvalidBounds { which, lo, hi } => validation(
            if which == "beta" {
                "bounds.beta_min/beta_max"
            } else {
                "bounds.gamma_min/gamma_max"
            },
            bounds_line,
            format!("require 0 < {lo} <= {hi} < 1"),
        ),
        other => map_constant_err(other, bounds_line.unwrap_or(0)),
    })?;

    // Initial data profiles.
    let s0 = table
        .profile("initial.s0")?
        .map(|(_, p)| p)
        .unwrap_or(Profile::Constant { level: 0.8 });
    let i0 = table
        .profile("initial.i0")?
        .map(|(_, p)| p)
        .unwrap_or(Profile::Constant { level: 0.2 });

    // Twin block: both profiles or neither.
    let twin_beta = table.profile("twin.beta")?;
    let twin_gamma = table.profile("twin.gamma")?;
    let twin_noise = table.parse_num::<f64>("twin.noise", "a number")?;
    let twin_seed = table.parse_num::<u64>("twin.seed", "an unsigned integer")?;
    let twin = match (twin_beta, twin_gamma) {
        (Some((_, beta)), Some((_, gamma))) => {
            let noise = twin_noise.map(|(_, v)| v).unwrap_or(0.0);
            if noise < 0.0 {
                return Err(validation("twin.noise", None, "must be nonnegative"));
            }
            Some(TwinSpec {
                beta,
                gamma,
                noise,
                seed: twin_seed.map(|(_, v)| v).unwrap_or(0),
            })
        }
        (None, None) => {
            if let Some((line, _)) = twin_noise {
                return Err(validation(
                    "twin.noise",
                    Some(line),
                    "twin.beta and twin.gamma must be set for a twin block",
                ));
            }
            None
        }
        (Some((line, _)), None) => {
            return Err(validation(
                "twin.gamma",
                Some(line),
                "twin.beta is set, twin.gamma is required too",
            ))
        }
        (None, Some((line, _))) => {
            return Err(validation(
                "twin.beta",
                Some(line),
                "twin.gamma is set, twin.beta is required too",
            ))
        }
    };

    // Observation files: both or neither.
    let s_file = table.take("observations.s_file");
    let i_file = table.take("observations.i_file");
    let observations = match (s_file, i_file) {
        (Some((_, s)), Some((_, i))) => Some(ObservationFiles {
            s_file: s,
            i_file: i,
        }),
        (None, None) => None,
        (Some((line, _)), None) => {
            return Err(validation(
                "observations.i_file",
                Some(line),
                "observations.s_file is set, observations.i_file is required too",
            ))
        }
        (None, Some((line, _))) => {
            return Err(validation(
                "observations.s_file",
                Some(line),
                "observations.i_file is set, observations.s_file is required too",
            ))
        }
    };

    // Inverse block.
    let mut inverse = InverseConfig::default();
    if let Some((_, v)) = table.parse_num::<f64>("inverse.delta", "a number")? {
        inverse.delta = v;
    }
    if let Some((_, v)) = table.parse_num::<usize>("inverse.max_iters", "an integer")? {
        inverse.max_iters = v;
    }
    if let Some((_, v)) = table.parse_num::<f64>("inverse.grad_tol", "a number")? {
        inverse.grad_tol = v;
    }
    if let Some((_, v)) = table.parse_num::<f64>("inverse.step0", "a number")? {
        inverse.step0 = v;
    }
    if let Some((_, v)) = table.parse_num::<f64>("inverse.armijo_c", "a number")? {
        inverse.armijo_c = v;
    }
    if let Some((_, v)) = table.parse_num::<f64>("inverse.backtrack", "a number")? {
        inverse.backtrack = v;
    }
    if let Some((line, v)) = table.take("inverse.sobolev_smoothing") {
        inverse.sobolev_smoothing = match v.as_str() {
            "on" | "true" => true,
            "off" | "false" => false,
            other => {
                return Err(validation(
                    "inverse.sobolev_smoothing",
                    Some(line),
                    format!("expected on/off, got {other:?}"),
                ))
            }
        };
    }
    if let Some((_, v)) = table.parse_num::<f64>("inverse.sobolev_mu", "a number")? {
        inverse.sobolev_mu = v;
    }
    inverse.validate().map_err(|e| map_constant_err(e, 0))?;
    let beta0 = table.profile("inverse.beta0")?.map(|(_, p)| p);
    let gamma0 = table.profile("inverse.gamma0")?.map(|(_, p)| p);

    // Sweep block.
    let sweep_deltas = match table.take("sweep.deltas") {
        None => vec![1e-6, 1e-4, 1e-2, 1.0],
        Some((line, v)) => {
            parse_list::<f64>(&v).map_err(|msg| validation("sweep.deltas", Some(line), msg))?
        }
    };
    if sweep_deltas.is_empty() || sweep_deltas.iter().any(|d| *d < 0.0 || !d.is_finite()) {
        return Err(validation(
            "sweep.deltas",
            None,
            "must be a nonempty list of nonnegative numbers",
        ));
    }
    let sweep_seeds = match table.take("sweep.seeds") {
        None => vec![1, 2],
        Some((line, v)) => {
            parse_list::<u64>(&v).map_err(|msg| validation("sweep.seeds", Some(line), msg))?
        }
    };

    let output_dir = table
        .take("output.dir")
        .map(|(_, v)| v)
        .unwrap_or_else(|| "out".to_string());

    // Anything left over is a typo.
    if let Some((key, (line, _))) = table.entries.iter().next() {
        return Err(validation(key, Some(*line), "unknown configuration key"));
    }

    Ok(RunConfig {
        grid,
        model,
        bounds,
        s0,
        i0,
        twin,
        observations,
        inverse,
        beta0,
        gamma0,
        sweep_deltas,
        sweep_seeds,
        output_dir,
    })
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, String> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<T>()
                .map_err(|_| format!("bad list entry {tok:?}"))
        })
        .collect()
}

fn map_constant_err(e: crate::error::Error, line: usize) -> ConfigError {
    match e {
        crate::error::Error::InvalidModelConstant {
            name, constraint, ..
        } => ConfigError::Validation {
            key: name.to_string(),
            line: if line > 0 { Some(line) } else { None },
            constraint: constraint.to_string(),
        },
        other => ConfigError::Validation {
            key: "config".to_string(),
            line: if line > 0 { Some(line) } else { None },
            constraint: other.to_string(),
        },
    }
}
