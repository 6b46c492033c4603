//! Experiment configuration.
//!
//! Settings come from four layers, later ones winning: built-in defaults,
//! a subcommand preset (the two figures), a `key = value` file, and
//! command-line flags. Every setting remembers where it came from so a bad
//! value can be reported as `file:line: field ...` or `--flag: ...`.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use exlab::optimizer::SearchOptions;
use exlab::protocol::rate_grid;
use exlab::thresholds::Class;
use exlab::typespace::parse_value;
use exlab::{Channel, InputDistribution, Model};

/// Recognized keys with their defaults, in header order.
pub const KEYS: &[(&str, &str)] = &[
    ("channel", "w1"),
    ("metric", "truth"),
    ("px", "uniform"),
    ("T", "0.05"),
    ("target_ee", "matched"),
    ("rates", "0:max:21"),
    ("class", "optimal,psi,lambda1,lambda2"),
    ("delta0", "0.02"),
    ("delta1", "1e-5"),
    ("t_grid", "none"),
    ("marginal_points", "11"),
    ("blocklengths", "2,3,4"),
    ("sim_rate", "0.35"),
    ("decoder", "forney"),
    ("mode", "exact"),
    ("trials", "100000"),
    ("seed", "1"),
    ("budget", "2e7"),
    ("dominance", "false"),
    ("bits", "false"),
    ("out", "-"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Default,
    Preset(&'static str),
    File { path: PathBuf, line: usize },
    Flag(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => write!(f, "default"),
            Origin::Preset(p) => write!(f, "preset {p}"),
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Flag(name) => write!(f, "--{name}"),
        }
    }
}

#[derive(Debug, Clone)]
struct Setting {
    value: String,
    origin: Origin,
}

/// Raw settings, one per key of [`KEYS`].
#[derive(Debug, Clone)]
pub struct Settings {
    values: Vec<Setting>,
}

impl Default for Settings {
    fn default() -> Self {
        let values = KEYS
            .iter()
            .map(|(_, d)| Setting { value: d.to_string(), origin: Origin::Default })
            .collect();
        Self { values }
    }
}

fn key_index(key: &str) -> Option<usize> {
    KEYS.iter().position(|(k, _)| k.eq_ignore_ascii_case(key))
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<()> {
        let i = key_index(key).ok_or_else(|| anyhow!("{origin}: unknown field `{key}`"))?;
        self.values[i] = Setting { value: value.trim().to_string(), origin };
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        &self.values[key_index(key).expect("known key")].value
    }

    fn origin(&self, key: &str) -> &Origin {
        &self.values[key_index(key).expect("known key")].origin
    }

    /// Parse `key = value` lines. `#` starts a comment.
    pub fn merge_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let origin = Origin::File { path: path.to_path_buf(), line: i + 1 };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{origin}: expected `key = value`, got {line:?}"))?;
            self.set(k.trim(), v, origin)?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        self.merge_text(&text, path)
    }

    /// `(key, value)` pairs in header order.
    pub fn pairs(&self) -> impl Iterator<Item = (&'static str, &str)> {
        KEYS.iter().zip(&self.values).map(|((k, _), s)| (*k, s.value.as_str()))
    }

    fn field_error(&self, key: &str, msg: impl fmt::Display) -> anyhow::Error {
        anyhow!("{}: field `{key}` = {:?}: {msg}", self.origin(key), self.get(key))
    }

    fn number(&self, key: &str) -> Result<f64> {
        parse_value(self.get(key)).map_err(|_| self.field_error(key, "not a number"))
    }

    fn finite(&self, key: &str) -> Result<f64> {
        let v = self.number(key)?;
        if !v.is_finite() {
            return Err(self.field_error(key, "must be finite"));
        }
        Ok(v)
    }

    fn integer<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key).parse().map_err(|_| self.field_error(key, "not a nonnegative integer"))
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.get(key).to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" | "on" => Ok(true),
            "false" | "no" | "0" | "off" => Ok(false),
            _ => Err(self.field_error(key, "expected true or false")),
        }
    }

    pub fn resolve(&self) -> Result<Config> {
        let truth = parse_channel(self.get("channel")).map_err(|e| self.field_error("channel", e))?;
        let px = match self.get("px") {
            "uniform" => InputDistribution::uniform(truth.input_size()).map_err(|e| self.field_error("px", e))?,
            text => InputDistribution::parse(text).map_err(|e| self.field_error("px", e))?,
        };
        let mut model = Model::new(truth, px).map_err(|e| self.field_error("px", e))?;
        if self.get("metric") != "truth" {
            let metric = parse_channel(self.get("metric")).map_err(|e| self.field_error("metric", e))?;
            model = model.with_metric(metric).map_err(|e| self.field_error("metric", e))?;
        }
        let imax = model.max_rate();

        let t = self.finite("T")?;
        let target = match self.get("target_ee") {
            "matched" => Target::Matched,
            _ => Target::Fixed(self.finite("target_ee")?),
        };
        let rates = self.grid("rates", Some(imax))?;
        if let Some(&hi) = rates.last() {
            if hi > imax + 1e-9 {
                return Err(self.field_error("rates", format!("exceeds I(P_X x W) = {imax}")));
            }
        }
        let classes = parse_classes(self.get("class")).map_err(|e| self.field_error("class", e))?;

        let opts = SearchOptions::with_resolution(self.finite("delta0")?, self.finite("delta1")?);
        opts.validate().map_err(|e| self.field_error("delta1", e))?;

        let t_grid = match self.get("t_grid") {
            "none" => None,
            _ => Some(self.grid("t_grid", None)?),
        };
        let marginal_points: usize = self.integer("marginal_points")?;
        if marginal_points < 2 {
            return Err(self.field_error("marginal_points", "need at least 2"));
        }

        let blocklengths = self
            .get("blocklengths")
            .split(',')
            .map(|s| s.trim().parse::<usize>().ok().filter(|&n| n > 0))
            .collect::<Option<Vec<_>>>()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| self.field_error("blocklengths", "expected a comma-separated list of positive integers"))?;
        let sim_rate = self.finite("sim_rate")?;
        if sim_rate < 0.0 {
            return Err(self.field_error("sim_rate", "must be nonnegative"));
        }
        let decoders = self
            .get("decoder")
            .split(',')
            .map(|s| DecoderChoice::parse(s.trim()))
            .collect::<Result<Vec<_>, String>>()
            .map_err(|e| self.field_error("decoder", e))?;
        let mode = match self.get("mode") {
            "exact" => SimMode::Exact,
            "mc" | "monte_carlo" => SimMode::MonteCarlo,
            _ => return Err(self.field_error("mode", "expected exact or mc")),
        };
        let trials: usize = self.integer("trials")?;
        if trials == 0 {
            return Err(self.field_error("trials", "need at least one trial"));
        }
        let budget = self.finite("budget")?;
        if budget <= 0.0 {
            return Err(self.field_error("budget", "must be positive"));
        }
        let out = match self.get("out") {
            "-" => None,
            p => Some(PathBuf::from(p)),
        };

        Ok(Config {
            model,
            t,
            target,
            rates,
            classes,
            opts,
            t_grid,
            marginal_points,
            blocklengths,
            sim_rate,
            decoders,
            mode,
            trials,
            seed: self.integer("seed")?,
            budget,
            dominance: self.flag("dominance")?,
            bits: self.flag("bits")?,
            out,
        })
    }

    /// `lo:hi:n`; `hi` may be `max` when `max` is given.
    fn grid(&self, key: &str, max: Option<f64>) -> Result<Vec<f64>> {
        let text = self.get(key);
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(self.field_error(key, "expected lo:hi:n"));
        }
        let bound = |s: &str| -> Result<f64> {
            match (s, max) {
                ("max", Some(m)) => Ok(m),
                _ => parse_value(s)
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| self.field_error(key, format!("bad bound {s:?}"))),
            }
        };
        let (lo, hi) = (bound(parts[0])?, bound(parts[1])?);
        let n: usize = parts[2].parse().map_err(|_| self.field_error(key, "bad point count"))?;
        if max.is_none() {
            if n == 0 || hi < lo {
                return Err(self.field_error(key, "empty grid"));
            }
            return Ok(if n == 1 { vec![lo] } else { (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect() });
        }
        rate_grid(lo, hi, n).map_err(|e| self.field_error(key, e))
    }
}

/// How the target error exponent is chosen at each rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// `E = E_e*(R, T)` of the optimal decoder at the same rate.
    Matched,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    Exact,
    MonteCarlo,
}

/// A decoder named in the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderChoice {
    Forney,
    TypeBased,
    /// Output-only rule with the optimal threshold for the target.
    Lambda1,
    /// Scaled ML with offset `T`.
    Lambda2,
    /// General rule with the optimal threshold for the target.
    Psi,
}

impl DecoderChoice {
    fn parse(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "forney" | "optimal" => DecoderChoice::Forney,
            "typebased" | "type_based" => DecoderChoice::TypeBased,
            "lambda1" => DecoderChoice::Lambda1,
            "lambda2" => DecoderChoice::Lambda2,
            "psi" => DecoderChoice::Psi,
            _ => return Err(format!("unknown decoder {s:?}")),
        })
    }
}

/// Requested decoder families; `optimal` is the likelihood-ratio rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassChoice {
    Optimal,
    Family(Class),
}

impl ClassChoice {
    pub fn name(self) -> &'static str {
        match self {
            ClassChoice::Optimal => "optimal",
            ClassChoice::Family(Class::Psi) => "psi",
            ClassChoice::Family(Class::Lambda1) => "lambda1",
            ClassChoice::Family(Class::Lambda2) => "lambda2",
        }
    }
}

fn parse_classes(text: &str) -> std::result::Result<Vec<ClassChoice>, String> {
    let mut out = Vec::new();
    for s in text.split(',').map(str::trim) {
        let c = match s {
            "optimal" => ClassChoice::Optimal,
            "psi" => ClassChoice::Family(Class::Psi),
            "lambda1" => ClassChoice::Family(Class::Lambda1),
            "lambda2" => ClassChoice::Family(Class::Lambda2),
            _ => return Err(format!("unknown class {s:?}")),
        };
        if !out.contains(&c) {
            out.push(c);
        }
    }
    Ok(out)
}

/// Channel from a preset name, `bsc:p`, `binary:a,b` (`a = W(1|0)`,
/// `b = W(0|1)`), an inline matrix with rows separated by `;`, or a file
/// (`file:path` or any existing path).
pub fn parse_channel(spec: &str) -> std::result::Result<Channel, String> {
    let spec = spec.trim();
    let err = |e: exlab::Error| e.to_string();
    match spec {
        "w1" => return Ok(Channel::w1()),
        "w2" => return Ok(Channel::w2()),
        _ => {}
    }
    if let Some(p) = spec.strip_prefix("bsc:") {
        let p: f64 = p.trim().parse().map_err(|_| format!("bad crossover {p:?}"))?;
        return Channel::bsc(p).map_err(err);
    }
    if let Some(ab) = spec.strip_prefix("binary:") {
        let v: Vec<f64> = ab
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| format!("bad probability {s:?}")))
            .collect::<std::result::Result<_, _>>()?;
        if v.len() != 2 {
            return Err("binary:a,b takes two probabilities".into());
        }
        return Channel::binary(v[0], v[1]).map_err(err);
    }
    if spec.contains(';') {
        let text = spec.replace(';', "\n").replace(',', " ");
        return Channel::parse(&text).map_err(err);
    }
    let path = spec.strip_prefix("file:").unwrap_or(spec);
    if Path::new(path).is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
        return Channel::parse(&text).map_err(|e| format!("{path}: {e}"));
    }
    Err("expected w1, w2, bsc:p, binary:a,b, an inline matrix such as \"0.9 0.1; 0.2 0.8\", or a file".into())
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub model: Model,
    pub t: f64,
    pub target: Target,
    pub rates: Vec<f64>,
    pub classes: Vec<ClassChoice>,
    pub opts: SearchOptions,
    pub t_grid: Option<Vec<f64>>,
    pub marginal_points: usize,
    pub blocklengths: Vec<usize>,
    pub sim_rate: f64,
    pub decoders: Vec<DecoderChoice>,
    pub mode: SimMode,
    pub trials: usize,
    pub seed: u64,
    pub budget: f64,
    pub dominance: bool,
    pub bits: bool,
    pub out: Option<PathBuf>,
}
