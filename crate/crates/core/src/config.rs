//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Later assignments override
//! earlier ones, which is how command-line overrides are layered on top of a
//! file. Floats are echoed with 17 significant digits so that re-parsing the
//! echo reproduces the configuration bit for bit.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::bath::{BathParams, DEFAULT_TRUNCATION};
use crate::dynamics::{IntegratorConfig, Scheme};
use crate::error::{Error, Result};
use crate::spectrum::ChainParams;

/// Marker lines framing the config echo inside a CSV header.
pub const ECHO_BEGIN: &str = "config begin";
pub const ECHO_END: &str = "config end";

/// Line number used for values that did not come from a file.
pub const COMMAND_LINE: usize = 0;

/// Fig. 1 setup: `N = 5`, `h = 1`, `j = 2`, `σ = 2.5`, `β = 0.8`, `λ = 0.4`.
pub const BASELINE: &str = "N = 5\nj = 2\nh = 1\nlambda = 0.4\nbeta_bath = 0.8\nsigma = 2.5\nt_max = 60\n";

const REQUIRED: [&str; 7] = ["N", "j", "h", "lambda", "beta_bath", "sigma", "t_max"];

pub const KEYS: [&str; 16] = [
    "N", "j", "h", "lambda", "beta_bath", "sigma", "n_trunc", "beta_sys0", "scheme", "t_max", "t_switch",
    "rel_tol", "abs_tol", "sample_dt", "max_step", "output",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeChoice {
    Concatenation,
    /// Closed-form rate-equation solution.
    Secular,
    SecularDelta,
    Reference,
    /// Concatenation and closed-form secular, written side by side.
    Both,
}

impl SchemeChoice {
    /// Integrated scheme, if any.
    pub fn integrated(self) -> Option<Scheme> {
        match self {
            SchemeChoice::Concatenation | SchemeChoice::Both => Some(Scheme::Concatenation),
            SchemeChoice::SecularDelta => Some(Scheme::SecularDelta),
            SchemeChoice::Reference => Some(Scheme::Reference),
            SchemeChoice::Secular => None,
        }
    }
}

impl fmt::Display for SchemeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeChoice::Concatenation => "concatenation",
            SchemeChoice::Secular => "secular",
            SchemeChoice::SecularDelta => "secular-delta",
            SchemeChoice::Reference => "reference",
            SchemeChoice::Both => "both",
        })
    }
}

impl FromStr for SchemeChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "concatenation" => SchemeChoice::Concatenation,
            "secular" => SchemeChoice::Secular,
            "secular-delta" | "secular_delta" => SchemeChoice::SecularDelta,
            "reference" => SchemeChoice::Reference,
            "both" => SchemeChoice::Both,
            other => return Err(format!("unknown scheme `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub chain: ChainParams,
    pub bath: BathParams,
    pub integrator: IntegratorConfig,
    /// Inverse temperature of the initial canonical state (0: maximally mixed).
    pub beta_sys0: f64,
    pub scheme: SchemeChoice,
    /// `-` writes to standard output.
    pub output_path: String,
}

impl RunConfig {
    pub fn baseline() -> Self {
        parse_config(BASELINE).expect("built-in defaults are valid")
    }

    /// Resolved configuration as `key = value` lines, parseable by [`parse_config`].
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.value_of(key));
        }
        out
    }

    fn value_of(&self, key: &str) -> String {
        let i = &self.integrator;
        match key {
            "N" => self.chain.n.to_string(),
            "j" => fmt_float(self.chain.j),
            "h" => fmt_float(self.chain.h),
            "lambda" => fmt_float(self.bath.lambda),
            "beta_bath" => fmt_float(self.bath.beta),
            "sigma" => fmt_float(self.bath.sigma),
            "n_trunc" => self.bath.n_trunc.to_string(),
            "beta_sys0" => fmt_float(self.beta_sys0),
            "scheme" => self.scheme.to_string(),
            "t_max" => fmt_float(i.t_max),
            "t_switch" => fmt_float(i.t_switch),
            "rel_tol" => fmt_float(i.rel_tol),
            "abs_tol" => fmt_float(i.abs_tol),
            "sample_dt" => fmt_float(i.sample_dt),
            "max_step" => fmt_float(i.max_step),
            "output" => self.output_path.clone(),
            _ => unreachable!("echo only walks KEYS"),
        }
    }
}

/// 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone)]
struct Slot<T> {
    value: Option<T>,
    line: usize,
}

impl<T> Default for Slot<T> {
    fn default() -> Self {
        Slot { value: None, line: COMMAND_LINE }
    }
}

impl<T: Copy> Slot<T> {
    fn get(&self) -> Option<(T, usize)> {
        self.value.map(|v| (v, self.line))
    }
}

/// Accumulates assignments from a file and from overrides, then validates.
#[derive(Debug, Clone, Default)]
pub struct ConfigBuilder {
    n: Slot<usize>,
    j: Slot<f64>,
    h: Slot<f64>,
    lambda: Slot<f64>,
    beta_bath: Slot<f64>,
    sigma: Slot<f64>,
    n_trunc: Slot<usize>,
    beta_sys0: Slot<f64>,
    scheme: Slot<SchemeChoice>,
    t_max: Slot<f64>,
    t_switch: Slot<f64>,
    rel_tol: Slot<f64>,
    abs_tol: Slot<f64>,
    sample_dt: Slot<f64>,
    max_step: Slot<f64>,
    output: Option<(String, usize)>,
}

fn config_err(key: &str, line: usize, reason: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), line, reason: reason.into() }
}

fn parse_value<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<T> {
    raw.parse::<T>().map_err(|_| config_err(key, line, format!("cannot parse `{raw}`")))
}

fn store<T: FromStr>(slot: &mut Slot<T>, key: &str, raw: &str, line: usize) -> Result<()> {
    slot.value = Some(parse_value(key, raw, line)?);
    slot.line = line;
    Ok(())
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Seeds every key from an existing configuration.
    pub fn from_config(cfg: &RunConfig) -> Self {
        let mut b = Self::new();
        for key in KEYS {
            b.set(key, &cfg.value_of(key), COMMAND_LINE).expect("echo of a valid config parses");
        }
        b
    }

    pub fn set(&mut self, key: &str, raw: &str, line: usize) -> Result<()> {
        let raw = raw.trim();
        match key {
            "N" => store(&mut self.n, key, raw, line),
            "j" => store(&mut self.j, key, raw, line),
            "h" => store(&mut self.h, key, raw, line),
            "lambda" => store(&mut self.lambda, key, raw, line),
            "beta_bath" => store(&mut self.beta_bath, key, raw, line),
            "sigma" => store(&mut self.sigma, key, raw, line),
            "n_trunc" => store(&mut self.n_trunc, key, raw, line),
            "beta_sys0" => store(&mut self.beta_sys0, key, raw, line),
            "t_max" => store(&mut self.t_max, key, raw, line),
            "t_switch" => store(&mut self.t_switch, key, raw, line),
            "rel_tol" => store(&mut self.rel_tol, key, raw, line),
            "abs_tol" => store(&mut self.abs_tol, key, raw, line),
            "sample_dt" => store(&mut self.sample_dt, key, raw, line),
            "max_step" => store(&mut self.max_step, key, raw, line),
            "scheme" => {
                let s = raw.parse().map_err(|e: String| config_err(key, line, e))?;
                self.scheme = Slot { value: Some(s), line };
                Ok(())
            }
            "output" => {
                if raw.is_empty() {
                    return Err(config_err(key, line, "empty output path"));
                }
                self.output = Some((raw.to_string(), line));
                Ok(())
            }
            other => Err(config_err(other, line, "unknown key")),
        }
    }

    /// Applies every assignment in `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| config_err(body, line, "expected `key = value`"))?;
            self.set(key.trim(), value, line)?;
        }
        Ok(())
    }

    pub fn build(&self) -> Result<RunConfig> {
        for key in REQUIRED {
            if !self.has(key) {
                return Err(config_err(key, COMMAND_LINE, "required key missing"));
            }
        }
        let (n, n_line) = self.n.get().expect("required");
        let (j, _) = self.j.get().expect("required");
        let (h, h_line) = self.h.get().expect("required");
        let chain = ChainParams::new(n, j, h).map_err(|e| config_err("N", n_line.max(h_line), strip(e)))?;

        let (lambda, l_line) = self.lambda.get().expect("required");
        let (beta, b_line) = self.beta_bath.get().expect("required");
        let (sigma, s_line) = self.sigma.get().expect("required");
        let (n_trunc, t_line) = self.n_trunc.get().unwrap_or((DEFAULT_TRUNCATION, COMMAND_LINE));
        if n_trunc == 0 || n_trunc > crate::bath::MAX_TRUNCATION {
            return Err(config_err("n_trunc", t_line, "must lie in 1..=4"));
        }
        let bath = BathParams::new(lambda, beta, sigma, n_trunc).map_err(|e| {
            let (key, line) = if !(lambda >= 0.0) || !lambda.is_finite() {
                ("lambda", l_line)
            } else if !beta.is_finite() {
                ("beta_bath", b_line)
            } else {
                ("sigma", s_line)
            };
            config_err(key, line, strip(e))
        })?;

        let (t_max, tm_line) = self.t_max.get().expect("required");
        let mut integrator = IntegratorConfig::new(t_max, sigma);
        let checks: [(&str, &Slot<f64>, &mut f64); 5] = [
            ("t_switch", &self.t_switch, &mut integrator.t_switch),
            ("rel_tol", &self.rel_tol, &mut integrator.rel_tol),
            ("abs_tol", &self.abs_tol, &mut integrator.abs_tol),
            ("sample_dt", &self.sample_dt, &mut integrator.sample_dt),
            ("max_step", &self.max_step, &mut integrator.max_step),
        ];
        for (_, slot, target) in checks {
            if let Some((v, _)) = slot.get() {
                *target = v;
            }
        }
        if let Err(e) = integrator.validate() {
            let culprit = [
                ("t_max", self.t_max.get().map(|x| x.1), !(t_max >= 0.0 && t_max.is_finite())),
                ("t_switch", self.t_switch.get().map(|x| x.1), !(0.0..=t_max).contains(&integrator.t_switch)),
                ("rel_tol", self.rel_tol.get().map(|x| x.1), !(integrator.rel_tol > 0.0)),
                ("abs_tol", self.abs_tol.get().map(|x| x.1), !(integrator.abs_tol > 0.0)),
                ("sample_dt", self.sample_dt.get().map(|x| x.1), !(integrator.sample_dt > 0.0)),
                ("max_step", self.max_step.get().map(|x| x.1), !(integrator.max_step > 0.0)),
            ]
            .into_iter()
            .find(|c| c.2)
            .map(|(k, l, _)| (k, l.unwrap_or(tm_line)))
            .unwrap_or(("t_max", tm_line));
            return Err(config_err(culprit.0, culprit.1, strip(e)));
        }

        let (beta_sys0, bs_line) = self.beta_sys0.get().unwrap_or((0.0, COMMAND_LINE));
        if !beta_sys0.is_finite() {
            return Err(config_err("beta_sys0", bs_line, "must be finite"));
        }
        Ok(RunConfig {
            chain,
            bath,
            integrator,
            beta_sys0,
            scheme: self.scheme.get().map(|s| s.0).unwrap_or(SchemeChoice::Concatenation),
            output_path: self.output.as_ref().map(|o| o.0.clone()).unwrap_or_else(|| "-".to_string()),
        })
    }

    fn has(&self, key: &str) -> bool {
        match key {
            "N" => self.n.value.is_some(),
            "j" => self.j.value.is_some(),
            "h" => self.h.value.is_some(),
            "lambda" => self.lambda.value.is_some(),
            "beta_bath" => self.beta_bath.value.is_some(),
            "sigma" => self.sigma.value.is_some(),
            "t_max" => self.t_max.value.is_some(),
            _ => false,
        }
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Argument(s) => s,
        other => other.to_string(),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut b = ConfigBuilder::new();
    b.apply_text(text)?;
    b.build()
}

/// Recovers the configuration echoed between the marker lines of a CSV header.
pub fn parse_echo(csv: &str) -> Result<RunConfig> {
    let mut inside = false;
    let mut body = String::new();
    for line in csv.lines() {
        let Some(comment) = line.strip_prefix('#') else { break };
        let comment = comment.trim();
        if comment == ECHO_BEGIN {
            inside = true;
        } else if comment == ECHO_END {
            return parse_config(&body);
        } else if inside {
            body.push_str(comment);
            body.push('\n');
        }
    }
    Err(config_err("header", COMMAND_LINE, "no config echo found"))
}
