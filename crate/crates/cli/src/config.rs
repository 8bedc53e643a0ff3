//! Flat TOML scenario configuration.
//!
//! A config file is a flat list of `key = value` pairs. Every key is typed,
//! unknown keys are rejected, and so are keys that the chosen scenario does
//! not use. Missing keys take the scenario default. The resolved config is
//! written back as `meta.toml`, which parses to the same config.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nhdyn::operator::{DampingSpec, HamiltonianSpec, OscillatorSpec, SpinQuantumNumber, SpinSpec};
use nhdyn::verification::CRITERIA;
use toml::{Table, Value};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}` is not used by scenario `{scenario}`")]
    Irrelevant { key: String, scenario: Scenario },
    #[error("key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("no scenario given: set `scenario` in the config or pass --scenario")]
    MissingScenario,
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    DampedHo,
    DrivenHo,
    CatState,
    Anharmonic,
    Revival,
    Bloch,
    Husimi,
    FixedPoints,
    Verify,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Self::DampedHo,
        Self::DrivenHo,
        Self::CatState,
        Self::Anharmonic,
        Self::Revival,
        Self::Bloch,
        Self::Husimi,
        Self::FixedPoints,
        Self::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::DampedHo => "damped_ho",
            Self::DrivenHo => "driven_ho",
            Self::CatState => "cat_state",
            Self::Anharmonic => "anharmonic",
            Self::Revival => "revival",
            Self::Bloch => "bloch",
            Self::Husimi => "husimi",
            Self::FixedPoints => "fixed_points",
            Self::Verify => "verify",
        }
    }

    /// Figure whose parameters the defaults reproduce.
    pub fn figure(self) -> &'static str {
        match self {
            Self::DampedHo => "Fig. 1, solid curve",
            Self::DrivenHo | Self::Husimi => "Fig. 2",
            Self::CatState => "Fig. 1, dashed curve",
            Self::Anharmonic => "Fig. 4",
            Self::Revival => "Fig. 3",
            Self::Bloch | Self::FixedPoints => "Fig. 5",
            Self::Verify => "none",
        }
    }

    /// Keys the scenario reads, in the order they are echoed.
    pub fn keys(self) -> &'static [&'static str] {
        const OSCILLATOR: &[&str] = &[
            "scenario",
            "figure",
            "out_dir",
            "tol",
            "dim",
            "t_end",
            "n_steps",
            "m",
            "omega",
            "hbar",
            "gamma",
            "damping",
            "omega_prime",
            "beta",
            "f0",
            "drive_omega",
            "q0",
            "p0",
        ];
        match self {
            Self::DampedHo | Self::DrivenHo | Self::CatState | Self::Revival => OSCILLATOR,
            Self::Anharmonic => &[
                "scenario",
                "figure",
                "out_dir",
                "tol",
                "dim",
                "t_end",
                "n_steps",
                "m",
                "omega",
                "hbar",
                "gamma",
                "damping",
                "omega_prime",
                "betas",
                "f0",
                "drive_omega",
                "q0",
                "p0",
            ],
            Self::Husimi => &[
                "scenario",
                "figure",
                "out_dir",
                "tol",
                "dim",
                "t_end",
                "n_steps",
                "m",
                "omega",
                "hbar",
                "gamma",
                "f0",
                "drive_omega",
                "q0",
                "p0",
                "husimi_q_min",
                "husimi_q_max",
                "husimi_p_min",
                "husimi_p_max",
                "husimi_n_q",
                "husimi_n_p",
                "husimi_samples",
            ],
            Self::Bloch => &[
                "scenario", "figure", "out_dir", "tol", "t_end", "n_steps", "eps", "v", "g",
                "gamma", "l", "theta0", "phi0",
            ],
            Self::FixedPoints => &["scenario", "figure", "out_dir", "eps", "v", "g", "gamma"],
            Self::Verify => &["scenario", "figure", "out_dir", "criteria"],
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Self::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|sc| sc.name()).collect();
                invalid(
                    "scenario",
                    format!(
                        "unknown scenario `{s}`; expected one of {}",
                        names.join(", ")
                    ),
                )
            })
    }
}

/// How the anti-Hermitian part of the oscillator is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Damping {
    /// `Γ̂ = (γ/ω)(p̂²/2m + mω²q̂²/2)`
    Proportional,
    /// `Γ̂ = (γ/ω) p̂²/2m`
    Kinetic,
}

impl Damping {
    fn name(self) -> &'static str {
        match self {
            Self::Proportional => "proportional",
            Self::Kinetic => "kinetic",
        }
    }
}

const ALL_KEYS: &[&str] = &[
    "scenario",
    "figure",
    "out_dir",
    "tol",
    "dim",
    "t_end",
    "n_steps",
    "m",
    "omega",
    "hbar",
    "gamma",
    "damping",
    "omega_prime",
    "beta",
    "betas",
    "f0",
    "drive_omega",
    "q0",
    "p0",
    "eps",
    "v",
    "g",
    "l",
    "theta0",
    "phi0",
    "husimi_q_min",
    "husimi_q_max",
    "husimi_p_min",
    "husimi_p_max",
    "husimi_n_q",
    "husimi_n_p",
    "husimi_samples",
    "criteria",
];

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub out_dir: PathBuf,
    pub tol: f64,
    pub dim: usize,
    pub t_end: f64,
    pub n_steps: usize,
    pub m: f64,
    pub omega: f64,
    pub hbar: f64,
    pub gamma: f64,
    pub damping: Damping,
    /// Frequency of the coherent states used for the classical limit.
    pub omega_prime: Option<f64>,
    pub beta: f64,
    pub betas: Vec<f64>,
    pub f0: f64,
    pub drive_omega: f64,
    pub q0: f64,
    pub p0: f64,
    pub eps: f64,
    pub v: f64,
    pub g: f64,
    pub l: f64,
    pub theta0: f64,
    pub phi0: f64,
    pub husimi_q: (f64, f64),
    pub husimi_p: (f64, f64),
    pub husimi_n_q: usize,
    pub husimi_n_p: usize,
    pub husimi_samples: usize,
    pub criteria: Vec<usize>,
}

impl ScenarioConfig {
    pub fn defaults(scenario: Scenario) -> Self {
        let mut c = Self {
            scenario,
            out_dir: PathBuf::from("out").join(scenario.name()),
            tol: 1e-12,
            dim: 128,
            t_end: 60.0,
            n_steps: 1200,
            m: 1.0,
            omega: 1.0,
            hbar: 1.0,
            gamma: 0.1,
            damping: Damping::Proportional,
            omega_prime: None,
            beta: 0.0,
            betas: vec![0.0, 0.2, 0.4, 1.0],
            f0: 0.1,
            drive_omega: 1.0,
            q0: 2.0,
            p0: 0.0,
            eps: 0.0,
            v: 1.0,
            g: 1.5,
            l: 40.0,
            theta0: 0.1,
            phi0: 0.0,
            husimi_q: (-10.0, 10.0),
            husimi_p: (-10.0, 10.0),
            husimi_n_q: 201,
            husimi_n_p: 201,
            husimi_samples: 64,
            criteria: (1..=CRITERIA).collect(),
        };
        match scenario {
            Scenario::DrivenHo => {
                c.f0 = 1.0;
                (c.t_end, c.n_steps) = (30.0, 600);
            }
            Scenario::CatState => (c.t_end, c.n_steps) = (150.0, 3000),
            Scenario::Anharmonic => {
                c.f0 = 0.0;
                (c.t_end, c.n_steps) = (30.0, 600);
            }
            Scenario::Revival => {
                c.f0 = 0.0;
                c.beta = 0.4;
                c.gamma = 0.01;
                (c.t_end, c.n_steps) = (80.0, 4000);
            }
            Scenario::Bloch => (c.t_end, c.n_steps) = (25.0, 500),
            Scenario::Husimi => {
                c.f0 = 1.0;
                (c.t_end, c.n_steps) = (100.0, 2000);
            }
            _ => {}
        }
        c
    }

    fn set(&mut self, key: &str, value: Value) -> Result<(), ConfigError> {
        fn string(key: &str, value: Value) -> Result<String, ConfigError> {
            match value {
                Value::String(s) => Ok(s),
                other => Err(invalid(key, format!("expected a string, found {other}"))),
            }
        }
        fn float(key: &str, value: Value) -> Result<f64, ConfigError> {
            match value {
                Value::Integer(i) => Ok(i as f64),
                Value::Float(x) => Ok(x),
                other => Err(invalid(key, format!("expected a number, found {other}"))),
            }
        }
        fn count(key: &str, value: Value) -> Result<usize, ConfigError> {
            match value {
                Value::Integer(i) => usize::try_from(i).map_err(|_| {
                    invalid(key, format!("expected a non-negative integer, found {i}"))
                }),
                other => Err(invalid(key, format!("expected an integer, found {other}"))),
            }
        }
        match key {
            "scenario" => self.scenario = string(key, value)?.parse()?,
            "figure" => {
                string(key, value)?;
            }
            "out_dir" => self.out_dir = PathBuf::from(string(key, value)?),
            "tol" => self.tol = float(key, value)?,
            "dim" => self.dim = count(key, value)?,
            "t_end" => self.t_end = float(key, value)?,
            "n_steps" => self.n_steps = count(key, value)?,
            "m" => self.m = float(key, value)?,
            "omega" => self.omega = float(key, value)?,
            "hbar" => self.hbar = float(key, value)?,
            "gamma" => self.gamma = float(key, value)?,
            "damping" => {
                self.damping = match string(key, value)?.as_str() {
                    "proportional" => Damping::Proportional,
                    "kinetic" => Damping::Kinetic,
                    other => {
                        return Err(invalid(
                            key,
                            format!("unknown damping `{other}`; expected proportional or kinetic"),
                        ))
                    }
                }
            }
            "omega_prime" => self.omega_prime = Some(float(key, value)?),
            "beta" => self.beta = float(key, value)?,
            "betas" => {
                let Value::Array(items) = value else {
                    return Err(invalid(key, "expected an array of numbers"));
                };
                self.betas = items
                    .into_iter()
                    .map(|v| float(key, v))
                    .collect::<Result<_, _>>()?;
            }
            "f0" => self.f0 = float(key, value)?,
            "drive_omega" => self.drive_omega = float(key, value)?,
            "q0" => self.q0 = float(key, value)?,
            "p0" => self.p0 = float(key, value)?,
            "eps" => self.eps = float(key, value)?,
            "v" => self.v = float(key, value)?,
            "g" => self.g = float(key, value)?,
            "l" => self.l = float(key, value)?,
            "theta0" => self.theta0 = float(key, value)?,
            "phi0" => self.phi0 = float(key, value)?,
            "husimi_q_min" => self.husimi_q.0 = float(key, value)?,
            "husimi_q_max" => self.husimi_q.1 = float(key, value)?,
            "husimi_p_min" => self.husimi_p.0 = float(key, value)?,
            "husimi_p_max" => self.husimi_p.1 = float(key, value)?,
            "husimi_n_q" => self.husimi_n_q = count(key, value)?,
            "husimi_n_p" => self.husimi_n_p = count(key, value)?,
            "husimi_samples" => self.husimi_samples = count(key, value)?,
            "criteria" => {
                let Value::Array(items) = value else {
                    return Err(invalid(key, "expected an array of criterion numbers"));
                };
                self.criteria = items
                    .into_iter()
                    .map(|v| count(key, v))
                    .collect::<Result<_, _>>()?;
            }
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Value of a key as it is echoed; `None` for unset optional keys.
    pub fn value(&self, key: &str) -> Option<Value> {
        let float = |x: f64| Some(Value::Float(x));
        let int = |n: usize| Some(Value::Integer(n as i64));
        match key {
            "scenario" => Some(Value::String(self.scenario.name().into())),
            "figure" => Some(Value::String(self.scenario.figure().into())),
            "out_dir" => Some(Value::String(self.out_dir.display().to_string())),
            "tol" => float(self.tol),
            "dim" => int(self.dim),
            "t_end" => float(self.t_end),
            "n_steps" => int(self.n_steps),
            "m" => float(self.m),
            "omega" => float(self.omega),
            "hbar" => float(self.hbar),
            "gamma" => float(self.gamma),
            "damping" => Some(Value::String(self.damping.name().into())),
            "omega_prime" => self.omega_prime.map(Value::Float),
            "beta" => float(self.beta),
            "betas" => Some(Value::Array(
                self.betas.iter().map(|&b| Value::Float(b)).collect(),
            )),
            "f0" => float(self.f0),
            "drive_omega" => float(self.drive_omega),
            "q0" => float(self.q0),
            "p0" => float(self.p0),
            "eps" => float(self.eps),
            "v" => float(self.v),
            "g" => float(self.g),
            "l" => float(self.l),
            "theta0" => float(self.theta0),
            "phi0" => float(self.phi0),
            "husimi_q_min" => float(self.husimi_q.0),
            "husimi_q_max" => float(self.husimi_q.1),
            "husimi_p_min" => float(self.husimi_p.0),
            "husimi_p_max" => float(self.husimi_p.1),
            "husimi_n_q" => int(self.husimi_n_q),
            "husimi_n_p" => int(self.husimi_n_p),
            "husimi_samples" => int(self.husimi_samples),
            "criteria" => Some(Value::Array(
                self.criteria
                    .iter()
                    .map(|&c| Value::Integer(c as i64))
                    .collect(),
            )),
            _ => None,
        }
    }

    /// The resolved config as a TOML document that parses back to `self`.
    pub fn to_toml(&self) -> String {
        self.scenario
            .keys()
            .iter()
            .filter_map(|&k| self.value(k).map(|v| format!("{k} = {}\n", render(&v))))
            .collect()
    }

    fn uses(&self, key: &str) -> bool {
        self.scenario.keys().contains(&key)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite = |key: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(invalid(key, format!("must be finite, got {x}")))
            }
        };
        let positive = |key: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(invalid(key, format!("must be positive, got {x}")))
            }
        };
        for key in self.scenario.keys() {
            match *key {
                "tol" | "t_end" | "m" | "omega" | "hbar" => positive(
                    key,
                    self.value(key)
                        .and_then(|v| v.as_float())
                        .unwrap_or(f64::NAN),
                )?,
                "gamma" => {
                    finite(key, self.gamma)?;
                    if self.gamma < 0.0 {
                        return Err(invalid(
                            key,
                            format!("must be non-negative, got {}", self.gamma),
                        ));
                    }
                }
                "dim" if self.dim < 2 => {
                    return Err(invalid(
                        key,
                        format!("must be at least 2, got {}", self.dim),
                    ))
                }
                "n_steps" if self.n_steps < 1 => return Err(invalid(key, "must be at least 1")),
                "omega_prime" => {
                    if let Some(w) = self.omega_prime {
                        positive(key, w)?;
                        if self.damping == Damping::Kinetic {
                            return Err(invalid(key, "applies to proportional damping only"));
                        }
                    }
                }
                "beta" | "f0" | "q0" | "p0" | "eps" | "v" | "g" | "phi0" | "husimi_q_min"
                | "husimi_q_max" | "husimi_p_min" | "husimi_p_max" => finite(
                    key,
                    self.value(key)
                        .and_then(|v| v.as_float())
                        .unwrap_or(f64::NAN),
                )?,
                "drive_omega" => {
                    finite(key, self.drive_omega)?;
                    if self.scenario == Scenario::Husimi {
                        positive(key, self.drive_omega)?;
                    }
                }
                "betas" => {
                    if self.betas.is_empty() {
                        return Err(invalid(key, "must list at least one value"));
                    }
                    for &b in &self.betas {
                        finite(key, b)?;
                    }
                }
                "l" => {
                    SpinQuantumNumber::new(self.l).map_err(|e| invalid(key, e.to_string()))?;
                }
                "theta0" => {
                    if !(0.0..=std::f64::consts::PI).contains(&self.theta0) {
                        return Err(invalid(
                            key,
                            format!("must lie in [0, pi], got {}", self.theta0),
                        ));
                    }
                }
                "husimi_n_q" | "husimi_n_p" => {
                    let n = if *key == "husimi_n_q" {
                        self.husimi_n_q
                    } else {
                        self.husimi_n_p
                    };
                    if n < 2 {
                        return Err(invalid(key, format!("must be at least 2, got {n}")));
                    }
                }
                "husimi_samples" if self.husimi_samples < 1 => {
                    return Err(invalid(key, "must be at least 1"))
                }
                "criteria" => {
                    if self.criteria.is_empty() {
                        return Err(invalid(key, "must list at least one criterion"));
                    }
                    if let Some(c) = self
                        .criteria
                        .iter()
                        .find(|&&c| !(1..=CRITERIA).contains(&c))
                    {
                        return Err(invalid(
                            key,
                            format!("no criterion {c}; valid are 1 to {CRITERIA}"),
                        ));
                    }
                }
                _ => {}
            }
        }
        if self.uses("husimi_q_min") {
            if self.husimi_q.0 >= self.husimi_q.1 {
                return Err(invalid("husimi_q_max", "must exceed husimi_q_min"));
            }
            if self.husimi_p.0 >= self.husimi_p.1 {
                return Err(invalid("husimi_p_max", "must exceed husimi_p_min"));
            }
            if self.f0 == 0.0 {
                return Err(invalid("f0", "the limit cycle needs a nonzero drive"));
            }
        }
        for beta in self.beta_values() {
            if self.uses("dim") {
                self.oscillator_spec(beta)
                    .validate()
                    .map_err(|e| invalid("scenario", e.to_string()))?;
            }
        }
        if self.uses("l") {
            self.spin_spec()?
                .validate()
                .map_err(|e| invalid("scenario", e.to_string()))?;
        }
        Ok(())
    }

    /// Quartic coefficients of the oscillator runs this config describes.
    pub fn beta_values(&self) -> Vec<f64> {
        if self.uses("betas") {
            self.betas.clone()
        } else if self.uses("beta") {
            vec![self.beta]
        } else {
            vec![0.0]
        }
    }

    pub fn oscillator_spec(&self, beta: f64) -> OscillatorSpec {
        let k = self.gamma / self.omega;
        let mut damping = match self.damping {
            Damping::Proportional => DampingSpec::proportional(k),
            Damping::Kinetic => DampingSpec::kinetic(k),
        };
        damping.omega_prime = self.omega_prime;
        let spec = OscillatorSpec {
            damping,
            ..OscillatorSpec::damped(self.m, self.omega, self.hbar, self.gamma)
        }
        .with_beta(beta);
        if self.f0 != 0.0 {
            spec.with_drive(self.f0, self.drive_omega)
        } else {
            spec
        }
    }

    pub fn spin_spec(&self) -> Result<SpinSpec, ConfigError> {
        let l = SpinQuantumNumber::new(self.l).map_err(|e| invalid("l", e.to_string()))?;
        Ok(SpinSpec::from_classical(
            self.eps, self.v, self.g, self.gamma, l,
        ))
    }

    pub fn hamiltonian(&self, beta: f64) -> HamiltonianSpec {
        HamiltonianSpec::Oscillator(self.oscillator_spec(beta))
    }
}

/// TOML text of a value, with floats in shortest round-trip form.
fn render(value: &Value) -> String {
    match value {
        Value::Float(x) => format!("{x:?}"),
        Value::Array(items) => {
            let items: Vec<String> = items.iter().map(render).collect();
            format!("[{}]", items.join(", "))
        }
        other => other.to_string(),
    }
}

/// Command-line adjustments applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub scenario: Option<String>,
    pub out_dir: Option<PathBuf>,
    /// `key=value` pairs; the value is read as TOML, or as a bare string if
    /// it does not parse.
    pub set: Vec<String>,
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, overrides)
}

pub fn parse_config(text: &str, overrides: &Overrides) -> Result<ScenarioConfig, ConfigError> {
    let mut table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    for item in &overrides.set {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax(format!("--set expects key=value, got `{item}`")))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = format!("v = {raw}")
            .parse::<Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.to_string()));
        table.insert(key.to_string(), value);
    }
    if let Some((key, _)) = table.iter().find(|(k, _)| !ALL_KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(key.clone()));
    }
    let scenario: Scenario = match (&overrides.scenario, table.remove("scenario")) {
        (Some(name), _) => name.parse()?,
        (None, Some(Value::String(name))) => name.parse()?,
        (None, Some(other)) => {
            return Err(invalid(
                "scenario",
                format!("expected a string, found {other}"),
            ))
        }
        (None, None) => return Err(ConfigError::MissingScenario),
    };
    let mut config = ScenarioConfig::defaults(scenario);
    for (key, value) in table {
        if !config.uses(&key) {
            return Err(ConfigError::Irrelevant { key, scenario });
        }
        config.set(&key, value)?;
    }
    if let Some(dir) = &overrides.out_dir {
        config.out_dir = dir.clone();
    }
    config.validate()?;
    Ok(config)
}
