//! Experiment configuration: a flat `key = value` file, then overrides from
//! the command line. Keys accept `-` or `_` and are case-insensitive.
//!
//! Defaults follow the published experimental setup: `delta = 1e-4`,
//! `gamma = 0.9`, `residual_threshold = 1e-2`, 60 repetitions, training
//! counts 2 to 9.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gfda::classify::Rule;
use gfda::fisher::{Method, DEFAULT_REG_DELTA};
use gfda::subspace::DimRule;
use gfda::synth::{AxisProfile, MixtureMode};

use crate::error::{config_err, Result};

/// How many basis vectors each class subspace keeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubspaceDim {
    /// Numerical rank of the class samples, i.e. the training count for
    /// generic data.
    Full,
    Fixed(usize),
    Energy(f64),
}

impl SubspaceDim {
    pub fn rule(self) -> DimRule {
        match self {
            SubspaceDim::Full => DimRule::Full,
            SubspaceDim::Fixed(k) => DimRule::Fixed(k),
            SubspaceDim::Energy(t) => DimRule::Energy(t),
        }
    }
}

impl FromStr for SubspaceDim {
    type Err = crate::error::CliError;
    fn from_str(s: &str) -> Result<Self> {
        if s == "full" || s == "n" {
            return Ok(SubspaceDim::Full);
        }
        if let Some(t) = s.strip_prefix("energy:") {
            return t
                .parse()
                .map(SubspaceDim::Energy)
                .map_err(|_| config_err(format!("bad energy threshold {t}")));
        }
        s.parse()
            .map(SubspaceDim::Fixed)
            .map_err(|_| config_err(format!("subspace_dim must be full, energy:T or an integer, got {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scope {
    Spectrum,
    Duality,
    Ds,
    Decomposition,
    Power,
    Gap,
    Heuristic,
}

impl Scope {
    pub const ALL: [Scope; 7] = [
        Scope::Spectrum,
        Scope::Duality,
        Scope::Ds,
        Scope::Decomposition,
        Scope::Power,
        Scope::Gap,
        Scope::Heuristic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scope::Spectrum => "spectrum",
            Scope::Duality => "duality",
            Scope::Ds => "ds",
            Scope::Decomposition => "decomposition",
            Scope::Power => "power",
            Scope::Gap => "gap",
            Scope::Heuristic => "heuristic",
        }
    }
}

fn parse_scopes(s: &str) -> Result<Vec<Scope>> {
    let mut out = BTreeSet::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part == "all" {
            out.extend(Scope::ALL);
            continue;
        }
        let scope = Scope::ALL
            .into_iter()
            .find(|sc| sc.name() == part)
            .ok_or_else(|| config_err(format!("unknown invariant scope {part}")))?;
        out.insert(scope);
    }
    if out.is_empty() {
        return Err(config_err("empty invariant scope"));
    }
    Ok(out.into_iter().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Gaussian,
    Mixture,
    Subspace,
}

impl FromStr for SynthKind {
    type Err = crate::error::CliError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "gaussian_class" => Ok(SynthKind::Gaussian),
            "mixture" | "convex_mixture" => Ok(SynthKind::Mixture),
            "subspace" | "subspace_config" => Ok(SynthKind::Subspace),
            _ => Err(config_err(format!("unknown synth kind {s}"))),
        }
    }
}

/// `2..9`, `2..=9` (both inclusive) or a comma list.
pub fn parse_counts(s: &str) -> Result<Vec<usize>> {
    let bad = || config_err(format!("bad count list {s}"));
    let v: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if v.is_empty() || v.contains(&0) {
        return Err(bad());
    }
    Ok(v)
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(config_err(format!("{key}: expected a boolean, got {v}"))),
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| config_err(format!("{key}: cannot parse {v}")))
}

fn parse_profile(v: &str) -> Result<AxisProfile> {
    if v == "isotropic" {
        return Ok(AxisProfile::Isotropic);
    }
    match v.strip_prefix("geometric:").map(str::parse::<f64>) {
        Some(Ok(r)) => Ok(AxisProfile::Geometric(r)),
        _ => Err(config_err(format!("profile must be isotropic or geometric:R, got {v}"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub method: Method,
    pub normalize: bool,
    pub ref_normalization: bool,
    pub delta: f64,
    pub residual_threshold: f64,
    pub gamma: f64,
    pub subspace_dim: SubspaceDim,
    pub rule: Rule,

    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,

    pub n_train: Option<usize>,
    pub n_values: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,

    pub scope: Vec<Scope>,

    pub classes: usize,
    pub dim: usize,
    pub ambient: usize,
    pub separation: f64,

    pub kind: SynthKind,
    pub samples: usize,
    pub mean_norm: f64,
    pub sigma_max: f64,
    pub profile: AxisProfile,
    pub mode: MixtureMode,
    pub basis_seed: Option<u64>,
    pub vectors_per_class: usize,

    explicit: BTreeSet<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            method: Method::GfdaLinear,
            normalize: false,
            ref_normalization: true,
            delta: DEFAULT_REG_DELTA,
            residual_threshold: 1e-2,
            gamma: 0.9,
            subspace_dim: SubspaceDim::Full,
            rule: Rule::NearestMean,
            train: None,
            test: None,
            data: None,
            model: None,
            out: None,
            report: None,
            n_train: None,
            n_values: (2..=9).collect(),
            repetitions: 60,
            seed: 0,
            scope: Scope::ALL.to_vec(),
            classes: 3,
            dim: 3,
            ambient: 30,
            separation: 1.0,
            kind: SynthKind::Gaussian,
            samples: 20,
            mean_norm: 2.0,
            sigma_max: 1.0,
            profile: AxisProfile::Isotropic,
            mode: MixtureMode::Set1,
            basis_seed: None,
            vectors_per_class: 9,
            explicit: BTreeSet::new(),
        }
    }
}

fn normalize_key(k: &str) -> String {
    k.trim().to_ascii_lowercase().replace('-', "_")
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {}: expected key = value", i + 1)))?;
        out.push((normalize_key(k), v.trim().to_string()));
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Defaults, then the config file, then `overrides` in order.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| config_err(format!("{}: {e}", p.display())))?;
            for (k, v) in parse_kv(&text)? {
                cfg.set(&k, &v)?;
            }
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = normalize_key(key);
        let v = value.trim();
        let path = || Some(PathBuf::from(v));
        match key.as_str() {
            "method" => self.method = v.parse()?,
            "normalize" => self.normalize = parse_bool(&key, v)?,
            "ref_normalization" => self.ref_normalization = parse_bool(&key, v)?,
            "delta" => self.delta = parse_num(&key, v)?,
            "residual_threshold" => self.residual_threshold = parse_num(&key, v)?,
            "gamma" => self.gamma = parse_num(&key, v)?,
            "subspace_dim" => self.subspace_dim = v.parse()?,
            "rule" => self.rule = v.parse()?,
            "train" => self.train = path(),
            "test" => self.test = path(),
            "data" => self.data = path(),
            "model" => self.model = path(),
            "out" => self.out = path(),
            "report" => self.report = path(),
            "n_train" => self.n_train = Some(parse_num(&key, v)?),
            "n_values" => self.n_values = parse_counts(v)?,
            "repetitions" => self.repetitions = parse_num(&key, v)?,
            "seed" => self.seed = parse_num(&key, v)?,
            "scope" => self.scope = parse_scopes(v)?,
            "classes" => self.classes = parse_num(&key, v)?,
            "dim" => self.dim = parse_num(&key, v)?,
            "ambient" => self.ambient = parse_num(&key, v)?,
            "separation" => self.separation = parse_num(&key, v)?,
            "kind" => self.kind = v.parse()?,
            "samples" => self.samples = parse_num(&key, v)?,
            "mean_norm" => self.mean_norm = parse_num(&key, v)?,
            "sigma_max" => self.sigma_max = parse_num(&key, v)?,
            "profile" => self.profile = parse_profile(v)?,
            "mode" => self.mode = v.parse()?,
            "basis_seed" => self.basis_seed = Some(parse_num(&key, v)?),
            "vectors_per_class" => self.vectors_per_class = parse_num(&key, v)?,
            _ => return Err(config_err(format!("unknown key {key}"))),
        }
        self.explicit.insert(key);
        Ok(())
    }

    /// Rejects parameters that do not belong to the chosen method and values
    /// out of range.
    pub fn validate(&self) -> Result<()> {
        let owner = [
            ("gamma", Method::Gds),
            ("delta", Method::RegLda),
            ("residual_threshold", Method::PcaLda),
        ];
        for (key, method) in owner {
            if self.is_explicit(key) && self.method != method {
                return Err(config_err(format!(
                    "{key} applies only to method {method}, not {}",
                    self.method
                )));
            }
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(config_err(format!("gamma {} not in (0, 1]", self.gamma)));
        }
        if !(self.delta > 0.0) {
            return Err(config_err(format!("delta {} must be positive", self.delta)));
        }
        if !(0.0..1.0).contains(&self.residual_threshold) {
            return Err(config_err(format!(
                "residual_threshold {} not in [0, 1)",
                self.residual_threshold
            )));
        }
        if self.repetitions == 0 {
            return Err(config_err("repetitions must be at least 1"));
        }
        if self.n_train == Some(0) {
            return Err(config_err("n_train must be at least 1"));
        }
        Ok(())
    }

    /// Seed of repetition `i`.
    pub fn repetition_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }
}
