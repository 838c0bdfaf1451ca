//! Experiment configuration: a flat `key = value` text format plus
//! command-line flags that mirror the same keys. Both routes funnel into one
//! list of `(key, value, origin)` settings so every validation message can
//! point at the config line or flag that caused it.

use std::fmt;
use std::path::PathBuf;

use gkreg::{Method, NoiseKind, NoiseSpec, ReorthMode, DEFAULT_PHOTON_COUNT};

/// What the experiment runs on.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Shaw { n: usize },
    Phillips { n: usize },
    Gravity { n: usize },
    Foxgood { n: usize },
    Paralleltomo { nx: usize, angles: (f64, f64, f64), nrays: usize },
    /// Operator and data loaded from Matrix Market files; `x_true` and the
    /// noise vector are known only if supplied.
    Mtx { matrix: PathBuf, rhs: PathBuf, x_true: Option<PathBuf> },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Shaw { .. } => "shaw",
            ProblemSpec::Phillips { .. } => "phillips",
            ProblemSpec::Gravity { .. } => "gravity",
            ProblemSpec::Foxgood { .. } => "foxgood",
            ProblemSpec::Paralleltomo { .. } => "paralleltomo",
            ProblemSpec::Mtx { .. } => "mtx",
        }
    }
}

/// Noise requested by the config; `None` on the experiment means the exact
/// right-hand side is used unperturbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSetting {
    White { level: f64 },
    Colored { level: f64, exponent: f64 },
    Poisson { level: f64 },
    Photon { n0: f64 },
}

impl NoiseSetting {
    pub fn to_spec(self, seed: u64) -> NoiseSpec {
        match self {
            NoiseSetting::White { level } => NoiseSpec { kind: NoiseKind::White, level, seed },
            NoiseSetting::Colored { level, exponent } => {
                NoiseSpec { kind: NoiseKind::Colored { exponent }, level, seed }
            }
            NoiseSetting::Poisson { level } => NoiseSpec { kind: NoiseKind::Poisson, level, seed },
            NoiseSetting::Photon { n0 } => {
                NoiseSpec { kind: NoiseKind::TomoPhoton { n0 }, level: 0.0, seed }
            }
        }
    }

    pub fn describe(self) -> String {
        match self {
            NoiseSetting::White { level } => format!("white level {level:e}"),
            NoiseSetting::Colored { level, exponent } => {
                format!("colored exponent {exponent:e} level {level:e}")
            }
            NoiseSetting::Poisson { level } => format!("poisson level {level:e}"),
            NoiseSetting::Photon { n0 } => format!("photon n0 {n0:e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub noise: Option<NoiseSetting>,
    pub seed: u64,
    pub reorth: ReorthMode,
    pub kmax: usize,
    /// Requested methods in canonical order (craig, lsqr, lsmr).
    pub methods: Vec<Method>,
    pub outputs: Option<PathBuf>,
}

/// A configuration problem: the message always names the config line or flag
/// it came from.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Where a setting came from, for error messages.
#[derive(Debug, Clone)]
pub enum Origin {
    Line(usize),
    Flag(&'static str),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "config line {n}"),
            Origin::Flag(name) => write!(f, "flag {name}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Setting {
    pub key: String,
    pub value: String,
    pub origin: Origin,
}

/// Splits config text into settings. Blank lines and `#` comments are
/// skipped; everything else must be `key = value`.
pub fn parse_assignments(text: &str) -> Result<Vec<Setting>, ConfigError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError(format!(
                "config line {}: expected 'key = value', got '{line}'",
                idx + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError(format!(
                "config line {}: empty {} in '{line}'",
                idx + 1,
                if key.is_empty() { "key" } else { "value" }
            )));
        }
        out.push(Setting {
            key: key.to_string(),
            value: value.to_string(),
            origin: Origin::Line(idx + 1),
        });
    }
    Ok(out)
}

const KNOWN_KEYS: &[&str] = &[
    "problem.name",
    "problem.n",
    "problem.nx",
    "problem.angles",
    "problem.nrays",
    "problem.matrix",
    "problem.rhs",
    "problem.x_true",
    "noise.kind",
    "noise.level",
    "noise.exponent",
    "noise.n0",
    "seed",
    "reorth",
    "kmax",
    "methods",
    "outputs",
];

/// Raw option values gathered from file and flags; later settings override
/// earlier ones key by key.
#[derive(Debug, Default)]
struct Gathered {
    values: Vec<(String, String, Origin)>,
}

impl Gathered {
    fn absorb(&mut self, settings: Vec<Setting>) -> Result<(), ConfigError> {
        for s in settings {
            if !KNOWN_KEYS.contains(&s.key.as_str()) {
                return Err(ConfigError(format!("{}: unknown key '{}'", s.origin, s.key)));
            }
            self.values.retain(|(k, _, _)| *k != s.key);
            self.values.push((s.key, s.value, s.origin));
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<(&str, &Origin)> {
        self.values
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, o)| (v.as_str(), o))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some((v, origin)) => v.parse::<T>().map(Some).map_err(|_| {
                ConfigError(format!("{origin}: '{key}' must be {what}, got '{v}'"))
            }),
        }
    }

    fn require<T>(&self, key: &str, value: Option<T>) -> Result<T, ConfigError> {
        value.ok_or_else(|| {
            ConfigError(format!(
                "missing required key '{key}' (set it in the config file or pass --{})",
                key.rsplit('.').next().unwrap_or(key).replace('_', "-")
            ))
        })
    }
}

/// Builds the validated configuration from an optional config file's text
/// plus flag-provided settings (which override the file).
pub fn build_config(
    file_text: Option<&str>,
    flag_settings: Vec<Setting>,
) -> Result<ExperimentConfig, ConfigError> {
    let mut g = Gathered::default();
    if let Some(text) = file_text {
        g.absorb(parse_assignments(text)?)?;
    }
    g.absorb(flag_settings)?;

    let problem = build_problem(&g)?;
    let noise = build_noise(&g)?;
    let seed = g.parsed::<u64>("seed", "a nonnegative integer")?.unwrap_or(0);

    let reorth = match g.get("reorth") {
        None => ReorthMode::FullDouble,
        Some(("full", _)) => ReorthMode::FullDouble,
        Some(("none", _)) => ReorthMode::None,
        Some((v, origin)) => {
            return Err(ConfigError(format!(
                "{origin}: 'reorth' must be 'full' or 'none', got '{v}'"
            )))
        }
    };

    let kmax = g.parsed::<usize>("kmax", "a positive integer")?;
    let kmax = g.require("kmax", kmax)?;
    if kmax == 0 {
        let (_, origin) = g.get("kmax").expect("kmax present");
        return Err(ConfigError(format!("{origin}: 'kmax' must be at least 1")));
    }

    let methods = match g.get("methods") {
        None => vec![Method::Craig, Method::Lsqr, Method::Lsmr],
        Some((v, origin)) => parse_methods(v, origin)?,
    };

    let outputs = g.get("outputs").map(|(v, _)| PathBuf::from(v));

    Ok(ExperimentConfig { problem, noise, seed, reorth, kmax, methods, outputs })
}

fn build_problem(g: &Gathered) -> Result<ProblemSpec, ConfigError> {
    let name = g.require("problem.name", g.get("problem.name"))?;
    let (name, origin) = name;
    match name {
        "shaw" | "phillips" | "gravity" | "foxgood" => {
            let n = g.parsed::<usize>("problem.n", "a positive integer")?;
            let n = g.require("problem.n", n)?;
            Ok(match name {
                "shaw" => ProblemSpec::Shaw { n },
                "phillips" => ProblemSpec::Phillips { n },
                "gravity" => ProblemSpec::Gravity { n },
                _ => ProblemSpec::Foxgood { n },
            })
        }
        "paralleltomo" => {
            let nx = g.parsed::<usize>("problem.nx", "a positive integer")?;
            let nx = g.require("problem.nx", nx)?;
            let nrays = g.parsed::<usize>("problem.nrays", "a positive integer")?;
            let nrays = g.require("problem.nrays", nrays)?;
            let angles = g.require("problem.angles", g.get("problem.angles"))?;
            let angles = parse_angles(angles.0, angles.1)?;
            Ok(ProblemSpec::Paralleltomo { nx, angles, nrays })
        }
        "mtx" => {
            let matrix = g.require("problem.matrix", g.get("problem.matrix"))?;
            let rhs = g.require("problem.rhs", g.get("problem.rhs"))?;
            Ok(ProblemSpec::Mtx {
                matrix: PathBuf::from(matrix.0),
                rhs: PathBuf::from(rhs.0),
                x_true: g.get("problem.x_true").map(|(v, _)| PathBuf::from(v)),
            })
        }
        other => Err(ConfigError(format!(
            "{origin}: unknown problem '{other}' (expected shaw, phillips, gravity, \
             foxgood, paralleltomo, or mtx)"
        ))),
    }
}

/// `start:step:stop` in degrees, e.g. `0:4:176`.
fn parse_angles(v: &str, origin: &Origin) -> Result<(f64, f64, f64), ConfigError> {
    let parts: Vec<&str> = v.split(':').collect();
    let bad = || {
        ConfigError(format!(
            "{origin}: 'problem.angles' must be 'start:step:stop' in degrees, got '{v}'"
        ))
    };
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    Ok((nums[0], nums[1], nums[2]))
}

fn build_noise(g: &Gathered) -> Result<Option<NoiseSetting>, ConfigError> {
    let level = g.parsed::<f64>("noise.level", "a number")?;
    let exponent = g.parsed::<f64>("noise.exponent", "a number")?;
    let n0 = g.parsed::<f64>("noise.n0", "a number")?;
    let kind = match g.get("noise.kind") {
        None => {
            // Level without a kind reads as white noise at that level.
            return Ok(level.map(|level| NoiseSetting::White { level }));
        }
        Some(kv) => kv,
    };
    let (kind, origin) = kind;
    let need_level = |what: &str| {
        level.ok_or_else(|| {
            ConfigError(format!("{origin}: noise kind '{what}' needs 'noise.level'"))
        })
    };
    match kind {
        "none" => Ok(None),
        "white" => Ok(Some(NoiseSetting::White { level: need_level("white")? })),
        "colored" => {
            let exponent = exponent.ok_or_else(|| {
                ConfigError(format!("{origin}: noise kind 'colored' needs 'noise.exponent'"))
            })?;
            Ok(Some(NoiseSetting::Colored { level: need_level("colored")?, exponent }))
        }
        "poisson" => Ok(Some(NoiseSetting::Poisson { level: need_level("poisson")? })),
        "photon" => Ok(Some(NoiseSetting::Photon { n0: n0.unwrap_or(DEFAULT_PHOTON_COUNT) })),
        other => Err(ConfigError(format!(
            "{origin}: unknown noise kind '{other}' (expected none, white, colored, \
             poisson, or photon)"
        ))),
    }
}

fn parse_methods(v: &str, origin: &Origin) -> Result<Vec<Method>, ConfigError> {
    let mut want = [false; 3];
    for part in v.split(',') {
        match part.trim() {
            "craig" => want[0] = true,
            "lsqr" => want[1] = true,
            "lsmr" => want[2] = true,
            "" => {}
            other => {
                return Err(ConfigError(format!(
                    "{origin}: unknown method '{other}' (expected craig, lsqr, lsmr)"
                )))
            }
        }
    }
    let methods: Vec<Method> = [Method::Craig, Method::Lsqr, Method::Lsmr]
        .into_iter()
        .zip(want)
        .filter_map(|(m, w)| w.then_some(m))
        .collect();
    if methods.is_empty() {
        return Err(ConfigError(format!("{origin}: 'methods' must name at least one method")));
    }
    Ok(methods)
}
