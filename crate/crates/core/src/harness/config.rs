//! Flat `key = value` experiment configuration. Every key is listed in
//! `docs/config.md`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::SplitSpec;
use crate::features::{ClassLabel, EncodeOptions};
use crate::learners::{ForestConfig, Kernel, MlpConfig, ModelSpec, SvmConfig};

use super::synth::SynthSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Baseline,
    Compare,
    Longitudinal,
    Ablate,
    Explain,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Baseline => "baseline",
            ExperimentKind::Compare => "compare",
            ExperimentKind::Longitudinal => "longitudinal",
            ExperimentKind::Ablate => "ablate",
            ExperimentKind::Explain => "explain",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "baseline" => ExperimentKind::Baseline,
            "compare" => ExperimentKind::Compare,
            "longitudinal" => ExperimentKind::Longitudinal,
            "ablate" => ExperimentKind::Ablate,
            "explain" => ExperimentKind::Explain,
            _ => return Err(Error::Config(format!("unknown experiment `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    Majority,
    Forest,
    Svm,
    Mlp,
}

impl FromStr for ModelChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "majority" => ModelChoice::Majority,
            "forest" | "random_forest" => ModelChoice::Forest,
            "svm" | "smo" => ModelChoice::Svm,
            "mlp" => ModelChoice::Mlp,
            _ => return Err(Error::Config(format!("unknown model `{s}`"))),
        })
    }
}

/// Which class score the explain experiment attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplainTarget {
    Predicted,
    Class(ClassLabel),
    /// Every class, ranked with class-prevalence weights.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplainMethod {
    /// Exact for forests, sampling otherwise.
    Auto,
    Sampling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplainOptions {
    /// Leading test rows explained; 0 means all.
    pub instances: usize,
    pub target: ExplainTarget,
    pub method: ExplainMethod,
    pub samples: usize,
    pub background: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub codebook: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub train_fraction: f64,
    pub group_by_individual: bool,
    /// `None` disables correlation pruning.
    pub prune_threshold: Option<f64>,
    pub keep: Vec<String>,
    pub exclude: Vec<String>,
    pub encode: EncodeOptions,
    pub recode_files: BTreeMap<String, PathBuf>,
    pub model: ModelChoice,
    pub models: Vec<ModelChoice>,
    pub forest: ForestConfig,
    pub svm: SvmConfig,
    pub mlp: MlpConfig,
    pub latest_year: Option<u16>,
    pub explain: ExplainOptions,
    /// Display names for variables in reports.
    pub labels: BTreeMap<String, String>,
    pub synth: SynthSpec,
    /// Resolved settings, for hashing and echoing into reports.
    entries: BTreeMap<String, String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            codebook: None,
            data: None,
            out: PathBuf::from("reports"),
            seed: None,
            train_fraction: 0.8,
            group_by_individual: false,
            prune_threshold: Some(0.8),
            keep: Vec::new(),
            exclude: Vec::new(),
            encode: EncodeOptions::default(),
            recode_files: BTreeMap::new(),
            model: ModelChoice::Forest,
            models: vec![ModelChoice::Mlp, ModelChoice::Svm, ModelChoice::Forest],
            forest: ForestConfig::default(),
            svm: SvmConfig::default(),
            mlp: MlpConfig::default(),
            latest_year: None,
            explain: ExplainOptions {
                instances: 200,
                target: ExplainTarget::Predicted,
                method: ExplainMethod::Auto,
                samples: 128,
                background: 100,
            },
            labels: BTreeMap::new(),
            synth: SynthSpec::default(),
            entries: BTreeMap::new(),
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true or false, got `{v}`"))),
    }
}

fn parse_optional<T: FromStr>(key: &str, v: &str) -> Result<Option<T>> {
    if matches!(v, "none" | "auto") { Ok(None) } else { parse(key, v).map(Some) }
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

/// Splits `key = value` lines; `#` starts a comment at line start or after whitespace.
pub fn parse_pairs(text: &str, source: &Path) -> Result<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(0) => "",
            Some(p) if raw[..p].ends_with(char::is_whitespace) => &raw[..p],
            _ => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(source, n + 1, "expected `key = value`"))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::parse(source, n + 1, "empty key"));
        }
        out.push((k.to_string(), v.trim().to_string(), n + 1));
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn from_str_with_source(text: &str, source: &Path) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        let mut seen = BTreeMap::new();
        for (k, v, line) in parse_pairs(text, source)? {
            if seen.insert(k.clone(), line).is_some() {
                return Err(Error::parse(source, line, format!("duplicate key `{k}`")));
            }
            c.set(&k, &v).map_err(|e| Error::parse(source, line, e.to_string()))?;
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut c = Self::from_str_with_source(&text, path)?;
        // relative paths in a config file are relative to that file
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        c.codebook.as_mut().map(fix);
        c.data.as_mut().map(fix);
        c.recode_files.values_mut().for_each(fix);
        Ok(c)
    }

    /// Applies one setting, validating the value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = Some(v.parse()?),
            "codebook" => self.codebook = Some(PathBuf::from(v)),
            "data" => self.data = Some(PathBuf::from(v)),
            "out" => self.out = PathBuf::from(v),
            "seed" => self.seed = Some(parse(key, v)?),
            "split.train_fraction" => {
                self.train_fraction = parse(key, v)?;
                SplitSpec::new(self.train_fraction, 0)?;
            }
            "split.group_by_individual" => self.group_by_individual = parse_bool(key, v)?,
            "prune.threshold" => self.prune_threshold = parse_optional(key, v)?,
            "prune.keep" => self.keep = list(v),
            "features.exclude" => self.exclude = list(v),
            "encode.one_hot" => self.encode.one_hot = parse_bool(key, v)?,
            "encode.missing_level" => self.encode.missing_level = parse_bool(key, v)?,
            "model" => self.model = v.parse()?,
            "models" => {
                self.models = list(v).iter().map(|m| m.parse()).collect::<Result<_>>()?;
                if self.models.is_empty() {
                    return Err(Error::Config("`models` lists no model".into()));
                }
            }
            "forest.trees" => self.forest.trees = parse(key, v)?,
            "forest.mtry" => self.forest.mtry = parse_optional(key, v)?,
            "forest.min_leaf" => self.forest.min_leaf = parse(key, v)?,
            "forest.max_depth" => self.forest.max_depth = parse_optional(key, v)?,
            "forest.bootstrap" => self.forest.bootstrap = parse_bool(key, v)?,
            "svm.c" => self.svm.smo.c = parse(key, v)?,
            "svm.tol" => self.svm.smo.tol = parse(key, v)?,
            "svm.max_iter" => self.svm.smo.max_iter = parse_optional(key, v)?,
            "svm.kernel" => {
                self.svm.kernel = match v {
                    "linear" => Kernel::Linear,
                    "rbf" => match self.svm.kernel {
                        k @ Kernel::Rbf { .. } => k,
                        Kernel::Linear => Kernel::Rbf { gamma: 0.1 },
                    },
                    _ => return Err(Error::Config(format!("unknown kernel `{v}`"))),
                }
            }
            "svm.gamma" => {
                let g: f64 = parse(key, v)?;
                self.svm.kernel = Kernel::Rbf { gamma: g };
            }
            "svm.scale" => self.svm.scale = parse_bool(key, v)?,
            "mlp.hidden" => self.mlp.hidden = parse_optional(key, v)?,
            "mlp.rate" => self.mlp.rate = parse(key, v)?,
            "mlp.momentum" => self.mlp.momentum = parse(key, v)?,
            "mlp.epochs" => self.mlp.epochs = parse(key, v)?,
            "mlp.batch_size" => self.mlp.batch_size = parse(key, v)?,
            "mlp.scale" => self.mlp.scale = parse_bool(key, v)?,
            "longitudinal.latest_year" => self.latest_year = parse_optional(key, v)?,
            "explain.instances" => self.explain.instances = parse(key, v)?,
            "explain.target" => {
                self.explain.target = match v {
                    "predicted" => ExplainTarget::Predicted,
                    "all" => ExplainTarget::All,
                    c => ExplainTarget::Class(
                        parse::<u8>(key, c)
                            .ok()
                            .and_then(ClassLabel::new)
                            .ok_or_else(|| Error::Config(format!("`{key}`: expected predicted, all or 1-3")))?,
                    ),
                }
            }
            "explain.method" => {
                self.explain.method = match v {
                    "auto" | "tree" => ExplainMethod::Auto,
                    "sampling" => ExplainMethod::Sampling,
                    _ => return Err(Error::Config(format!("`{key}`: expected auto or sampling"))),
                }
            }
            "explain.samples" => self.explain.samples = parse(key, v)?,
            "explain.background" => self.explain.background = parse(key, v)?,
            _ => {
                if let Some(var) = key.strip_prefix("recode.") {
                    self.recode_files.insert(var.to_string(), PathBuf::from(v));
                } else if let Some(var) = key.strip_prefix("label.") {
                    self.labels.insert(var.to_string(), v.to_string());
                } else if let Some(rest) = key.strip_prefix("synth.") {
                    self.synth.set(rest, v)?;
                } else {
                    return Err(Error::Config(format!("unknown key `{key}`")));
                }
            }
        }
        self.entries.insert(key.to_string(), v.to_string());
        Ok(())
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("a seed is required (`seed = N` or --seed)".into()))
    }

    pub fn split_spec(&self) -> Result<SplitSpec> {
        Ok(SplitSpec::new(self.train_fraction, self.seed()?)?.grouped(self.group_by_individual))
    }

    pub fn model_spec(&self, choice: ModelChoice) -> ModelSpec {
        match choice {
            ModelChoice::Majority => ModelSpec::Majority,
            ModelChoice::Forest => ModelSpec::Forest(self.forest),
            ModelChoice::Svm => ModelSpec::Svm(self.svm),
            ModelChoice::Mlp => ModelSpec::Mlp(self.mlp),
        }
    }

    pub fn label<'a>(&'a self, variable: &'a str) -> &'a str {
        self.labels.get(variable).map_or(variable, String::as_str)
    }

    /// Settings that shape results, excluding file locations.
    pub fn resolved_entries(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .filter(|(k, _)| !matches!(k.as_str(), "codebook" | "data" | "out"))
            .filter(|(k, _)| !k.starts_with("recode."))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
