//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [lattice]
//! N = 16
//! [velocity]
//! beta = -2.5
//! law = two_point
//! varsigma = 3
//! ```
//!
//! Keys may also be written with their section prefix (`velocity.beta = -2.5`)
//! outside any section. Lists are comma separated. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use bhtlab::spectral::WaveVector;
use bhtlab::synthesis::{CircularLaw, CorrelationKind, CorrelationModel, SourceSpec, VelocityParams};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Synth,
    Static,
    Time,
    Verify,
    Sweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Synth => "synth",
            Mode::Static => "static",
            Mode::Time => "time",
            Mode::Verify => "verify",
            Mode::Sweep => "sweep",
        }
    }

    /// Whether the mode evaluates dyadic shells (and so the `κ ≥ 4κ_g²` hypothesis applies).
    pub fn uses_dyads(self) -> bool {
        matches!(self, Mode::Verify | Mode::Sweep)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    Unit,
    TwoPoint,
    TruncatedRayleigh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSection {
    #[serde(rename = "N")]
    pub n: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocitySection {
    pub beta: f64,
    #[serde(rename = "Ue")]
    pub ue: f64,
    #[serde(rename = "Uf")]
    pub uf: f64,
    pub law: LawKind,
    /// `E|Z|^4` for the two-point law.
    pub varsigma: f64,
    /// `cap / σ` for the truncated Rayleigh law.
    pub rayleigh_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSection {
    /// `(k, γ_k)` entries written as `kx ky kz re im`.
    pub modes: Vec<(WaveVector, Complex64)>,
    /// Fill every half-space mode with `|j|² <= ball` (0 disables).
    pub ball: i64,
    pub ball_exponent: f64,
    pub cg: f64,
    pub alpha: f64,
    pub kappa_g: f64,
    pub randomized: bool,
    /// `E|Z|^4` of the source multipliers when randomized.
    pub varrho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSection {
    pub kind: CorrelationKind,
    pub chi_coeff: f64,
    pub chi_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub mode: Mode,
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
    /// Stopping tolerance relative to `‖Δ^{-1}g‖`.
    pub tol: f64,
    pub max_iter: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub dt: f64,
    /// Dyad lower edges; empty means all dyads with `2κ <= N`.
    pub kappas: Vec<f64>,
    pub full_solve: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSection {
    pub u_scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsSection {
    pub c_alpha_beta: f64,
    pub c_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    pub dir: String,
    pub formats: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub lattice: LatticeSection,
    pub velocity: VelocitySection,
    pub source: SourceSection,
    pub correlation: CorrelationSection,
    pub run: RunSection,
    pub sweep: SweepSection,
    pub bounds: BoundsSection,
    pub output: OutputSection,
    /// Keys that were not given and took their default value.
    pub defaulted: Vec<String>,
}

const KEYS: &[(&str, &[&str])] = &[
    ("lattice", &["N"]),
    ("velocity", &["beta", "Ue", "Uf", "law", "varsigma", "rayleigh_cap"]),
    ("source", &["modes", "ball", "ball_exponent", "cg", "alpha", "kappa_g", "randomized", "varrho"]),
    ("correlation", &["kind", "chi_coeff", "chi_power"]),
    ("run", &["mode", "M", "seed", "tol", "max_iter", "T", "dt", "kappas", "full_solve"]),
    ("sweep", &["u_scales"]),
    ("bounds", &["c_alpha_beta", "c_beta"]),
    ("output", &["dir", "formats"]),
];

/// Raw `section.key -> (value, line)` pairs.
#[derive(Debug, Default)]
struct Raw {
    entries: BTreeMap<String, (String, usize)>,
}

fn parse_raw(text: &str) -> Result<Raw, ConfigError> {
    let mut raw = Raw::default();
    let mut section: Option<String> = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Parse { line: lineno, message: format!("malformed section header {line:?}") })?
                .trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError::Parse { line: lineno, message: format!("unknown section [{name}]") });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse { line: lineno, message: format!("expected key = value, got {line:?}") })?;
        let (key, value) = (key.trim(), value.trim());
        let full = match (&section, key.split_once('.')) {
            (Some(s), None) => format!("{s}.{key}"),
            (None, Some(_)) => key.to_string(),
            (Some(s), Some(_)) => {
                return Err(ConfigError::Parse {
                    line: lineno,
                    message: format!("dotted key {key:?} inside section [{s}]"),
                })
            }
            (None, None) => {
                return Err(ConfigError::Parse { line: lineno, message: format!("key {key:?} outside any section") })
            }
        };
        let (s, k) = full.split_once('.').expect("dotted");
        let known = KEYS.iter().find(|(name, _)| *name == s).map(|(_, keys)| keys.contains(&k)).unwrap_or(false);
        if !known {
            return Err(ConfigError::Parse { line: lineno, message: format!("unknown key {full}") });
        }
        if let Some((_, prev)) = raw.entries.get(&full) {
            return Err(ConfigError::Parse { line: lineno, message: format!("{full} already set on line {prev}") });
        }
        raw.entries.insert(full, (value.to_string(), lineno));
    }
    Ok(raw)
}

struct Reader {
    raw: Raw,
    defaulted: Vec<String>,
}

impl Reader {
    fn get<T>(&mut self, key: &str, default: T, parse: impl Fn(&str) -> Result<T, String>) -> Result<T, ConfigError> {
        match self.raw.entries.get(key) {
            Some((v, line)) => parse(v).map_err(|m| ConfigError::Parse { line: *line, message: format!("{key}: {m}") }),
            None => {
                self.defaulted.push(key.to_string());
                Ok(default)
            }
        }
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.get(key, default, parse_f64)
    }

    fn given(&self, key: &str) -> bool {
        self.raw.entries.contains_key(key)
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("expected a number, got {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

fn parse_int<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("expected an integer, got {s:?}"))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got {s:?}")),
    }
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(item).collect()
}

fn parse_modes(s: &str) -> Result<Vec<(WaveVector, Complex64)>, String> {
    parse_list(s, |entry| {
        let parts: Vec<&str> = entry.split_whitespace().collect();
        if parts.len() != 5 {
            return Err(format!("source mode {entry:?} must be `kx ky kz re im`"));
        }
        let k = WaveVector::nonzero(parse_int(parts[0])?, parse_int(parts[1])?, parse_int(parts[2])?)
            .map_err(|e| e.to_string())?;
        Ok((k, Complex64::new(parse_f64(parts[3])?, parse_f64(parts[4])?)))
    })
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "synth" => Ok(Mode::Synth),
        "static" => Ok(Mode::Static),
        "time" => Ok(Mode::Time),
        "verify" => Ok(Mode::Verify),
        "sweep" => Ok(Mode::Sweep),
        _ => Err(format!("unknown mode {s:?} (synth, static, time, verify, sweep)")),
    }
}

fn parse_law(s: &str) -> Result<LawKind, String> {
    match s {
        "unit" => Ok(LawKind::Unit),
        "two_point" => Ok(LawKind::TwoPoint),
        "truncated_rayleigh" => Ok(LawKind::TruncatedRayleigh),
        _ => Err(format!("unknown law {s:?} (unit, two_point, truncated_rayleigh)")),
    }
}

fn parse_kind(s: &str) -> Result<CorrelationKind, String> {
    match s {
        "frozen" => Ok(CorrelationKind::Frozen),
        "gaussian" | "gaussian_phase_drift" => Ok(CorrelationKind::GaussianPhaseDrift),
        "telegraph" | "exponential" => Ok(CorrelationKind::Telegraph),
        _ => Err(format!("unknown correlation {s:?} (frozen, gaussian, telegraph)")),
    }
}

/// Default `α`: one unit inside the decay hypothesis for the given `β`.
pub fn default_alpha(beta: f64) -> f64 {
    2.0 * beta.min(-3.0) - 2.0
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut r = Reader { raw: parse_raw(text)?, defaulted: Vec::new() };
        let lattice = LatticeSection { n: r.get("lattice.N", 16, parse_int)? };
        let beta = r.f64("velocity.beta", -2.5)?;
        let velocity = VelocitySection {
            beta,
            ue: r.f64("velocity.Ue", 1.0)?,
            uf: r.f64("velocity.Uf", 1.0)?,
            law: r.get("velocity.law", LawKind::Unit, parse_law)?,
            varsigma: r.f64("velocity.varsigma", 1.0)?,
            rayleigh_cap: r.f64("velocity.rayleigh_cap", 2.0)?,
        };
        let source = SourceSection {
            modes: r.get("source.modes", Vec::new(), parse_modes)?,
            ball: r.get("source.ball", 0, parse_int)?,
            ball_exponent: r.f64("source.ball_exponent", -3.0)?,
            cg: r.f64("source.cg", 0.0)?,
            alpha: r.f64("source.alpha", default_alpha(beta))?,
            kappa_g: r.f64("source.kappa_g", 16.0)?,
            randomized: r.get("source.randomized", false, parse_bool)?,
            varrho: r.f64("source.varrho", 1.0)?,
        };
        let correlation = CorrelationSection {
            kind: r.get("correlation.kind", CorrelationKind::Frozen, parse_kind)?,
            chi_coeff: r.f64("correlation.chi_coeff", 0.0)?,
            chi_power: r.f64("correlation.chi_power", 0.0)?,
        };
        let run = RunSection {
            mode: r.get("run.mode", Mode::Static, parse_mode)?,
            m: r.get("run.M", 100, parse_int)?,
            seed: r.get("run.seed", 0, parse_int)?,
            tol: r.f64("run.tol", 1e-12)?,
            max_iter: r.get("run.max_iter", bhtlab::static_solver::DEFAULT_MAX_ITER, parse_int)?,
            t: r.f64("run.T", 1.0)?,
            dt: r.f64("run.dt", 0.0)?,
            kappas: r.get("run.kappas", Vec::new(), |s| parse_list(s, parse_f64))?,
            full_solve: r.get("run.full_solve", false, parse_bool)?,
        };
        let sweep = SweepSection { u_scales: r.get("sweep.u_scales", vec![1.0, 0.5, 0.25], |s| parse_list(s, parse_f64))? };
        let bounds = BoundsSection {
            c_alpha_beta: r.f64("bounds.c_alpha_beta", 1.0)?,
            c_beta: r.f64("bounds.c_beta", 1.0)?,
        };
        let output = OutputSection {
            dir: r.get("output.dir", "out".to_string(), |s| Ok(s.to_string()))?,
            formats: r.get("output.formats", vec!["csv".to_string(), "json".to_string()], |s| {
                parse_list(s, |f| match f {
                    "csv" | "json" => Ok(f.to_string()),
                    _ => Err(format!("unknown format {f:?} (csv, json)")),
                })
            })?,
        };
        if r.given("source.ball") && r.given("source.modes") {
            let line = r.raw.entries["source.ball"].1;
            return Err(ConfigError::Parse { line, message: "source.ball and source.modes are exclusive".into() });
        }
        let cfg = RunConfig {
            lattice,
            velocity,
            source,
            correlation,
            run,
            sweep,
            bounds,
            output,
            defaulted: r.defaulted,
        };
        cfg.check_structure()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        RunConfig::parse(&text)
    }

    /// Checks that make a run impossible regardless of `--exploratory`.
    fn check_structure(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.lattice.n == 0 {
            return bad("lattice.N must be at least 1".into());
        }
        if self.run.m < 2 && self.run.mode.uses_dyads() {
            return bad("run.M must be at least 2".into());
        }
        if !(self.run.tol > 0.0) {
            return bad("run.tol must be positive".into());
        }
        if self.run.mode == Mode::Time && !(self.run.t > 0.0) {
            return bad("run.T must be positive".into());
        }
        if !(self.run.dt >= 0.0) {
            return bad("run.dt must be non-negative (0 selects the largest stable step)".into());
        }
        if self.sweep.u_scales.iter().any(|&s| !(s > 0.0)) {
            return bad("sweep.u_scales must be positive".into());
        }
        if self.source.ball < 0 {
            return bad("source.ball must be non-negative".into());
        }
        self.velocity_params().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.source_spec().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.correlation_model().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.correlation.kind != CorrelationKind::Frozen && self.velocity.law != LawKind::Unit {
            return bad("time-dependent correlation models require velocity.law = unit".into());
        }
        Ok(())
    }

    pub fn law(&self) -> bhtlab::Result<CircularLaw> {
        match self.velocity.law {
            LawKind::Unit => Ok(CircularLaw::unit()),
            LawKind::TwoPoint => CircularLaw::with_fourth_moment(self.velocity.varsigma),
            LawKind::TruncatedRayleigh => CircularLaw::truncated_rayleigh(1.0, self.velocity.rayleigh_cap),
        }
    }

    pub fn velocity_params(&self) -> bhtlab::Result<VelocityParams> {
        let p = VelocityParams { beta: self.velocity.beta, ue: self.velocity.ue, uf: self.velocity.uf, law: self.law()? };
        p.validate()?;
        Ok(p)
    }

    pub fn source_spec(&self) -> bhtlab::Result<SourceSpec> {
        let mut spec = if self.source.ball > 0 {
            SourceSpec::ball(self.source.ball, self.source.ball_exponent, self.source.kappa_g)?
        } else {
            SourceSpec::finite(self.source.modes.clone(), self.source.kappa_g)
        };
        spec.c_g = self.source.cg;
        spec.alpha = self.source.alpha;
        spec.randomized = self.source.randomized;
        spec.law = CircularLaw::with_fourth_moment(self.source.varrho)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn correlation_model(&self) -> bhtlab::Result<CorrelationModel> {
        if self.correlation.kind == CorrelationKind::Frozen {
            return Ok(CorrelationModel::frozen());
        }
        CorrelationModel::new(self.correlation.kind, self.correlation.chi_coeff, self.correlation.chi_power)
    }

    /// Dyads evaluated by `verify` and `sweep`.
    pub fn dyads(&self) -> Vec<f64> {
        if self.run.kappas.is_empty() {
            bhtlab::spectral::Lattice::new(self.lattice.n).map(|l| l.dyads()).unwrap_or_default()
        } else {
            self.run.kappas.clone()
        }
    }

    /// Hypotheses of the asymptotic theorems that this configuration violates.
    pub fn hypothesis_violations(&self, mode: Mode) -> Vec<String> {
        let mut out = Vec::new();
        let beta = self.velocity.beta;
        if !(beta < -2.0) {
            out.push(format!("β < -2 fails: velocity.beta = {beta}"));
        }
        let bound = 2.0 * beta.min(-3.0) - 1.0;
        if !(self.source.alpha < bound) {
            out.push(format!("α < 2min{{β,-d}}-1 fails: source.alpha = {} needs < {bound}", self.source.alpha));
        }
        let kg = self.source.kappa_g;
        if !(kg >= 16.0) {
            out.push(format!("κ_g ≥ 16 fails: source.kappa_g = {kg}"));
        }
        if mode.uses_dyads() {
            let smallest = self.dyads().into_iter().fold(f64::INFINITY, f64::min);
            if smallest.is_finite() && !(4.0 * kg * kg <= smallest) {
                out.push(format!("κ ≥ 4κ_g² fails: smallest κ = {smallest} < {}", 4.0 * kg * kg));
            }
        }
        out
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }
}
