//! Experiment configuration: a flat TOML document with dotted keys.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Morris,
    Treg,
    Ising,
    Potts,
    CompareBaselines,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Morris => "morris",
            ExperimentKind::Treg => "treg",
            ExperimentKind::Ising => "ising",
            ExperimentKind::Potts => "potts",
            ExperimentKind::CompareBaselines => "compare-baselines",
        }
    }

    pub fn allowed_kernels(self) -> &'static [KernelChoice] {
        use KernelChoice::*;
        match self {
            ExperimentKind::Morris | ExperimentKind::CompareBaselines => &[Da],
            ExperimentKind::Treg => &[Augmented, Metropolis],
            ExperimentKind::Ising | ExperimentKind::Potts => &[Metropolis, Gibbs, SwendsenWang],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelChoice {
    /// Data augmentation with a population of `m` values.
    Da,
    /// Gamma-mixture collective move for the t-regression.
    Augmented,
    Metropolis,
    Gibbs,
    SwendsenWang,
}

impl KernelChoice {
    pub fn name(self) -> &'static str {
        match self {
            KernelChoice::Da => "da",
            KernelChoice::Augmented => "augmented",
            KernelChoice::Metropolis => "metropolis",
            KernelChoice::Gibbs => "gibbs",
            KernelChoice::SwendsenWang => "swendsen-wang",
        }
    }

    /// Stream id used for this kernel's chain, so kernels never share
    /// random numbers.
    pub fn stream(self) -> u64 {
        self as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Design {
    /// Two centred columns with a fixed sample correlation.
    Collinear,
    /// Responses and design read from `model.data`.
    Data,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeInit {
    /// All sites take value 0.
    Cold,
    /// Independent uniform values.
    Hot,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Delimited data file, relative to the config file.
    pub data: Option<PathBuf>,
    pub y: Option<Vec<f64>>,
    pub v: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub q: Option<f64>,
    pub nu: Option<f64>,
    pub design: Option<Design>,
    pub n: Option<usize>,
    pub correlation: Option<f64>,
    pub beta_true: Option<Vec<f64>>,
    pub data_seed: Option<u64>,
    /// Multiplier on the component-wise Metropolis step sizes.
    pub step_scale: Option<f64>,
    pub side: Option<usize>,
    pub beta: Option<f64>,
    pub states: Option<u8>,
    pub init: Option<LatticeInit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    pub gh_degree: usize,
    pub gh_iters: usize,
    pub is_draws: usize,
    pub is_rounds: usize,
    pub is_dof: f64,
    pub sir_draws: usize,
    pub sir_keep: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            gh_degree: 20,
            gh_iters: 20,
            is_draws: 20_000,
            is_rounds: 5,
            is_dof: 5.0,
            sir_draws: 50_000,
            sir_keep: 2_000,
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seeds: Vec<u64>,
    pub n_burn: usize,
    pub n_keep: usize,
    #[serde(default = "one")]
    pub thin: usize,
    #[serde(default = "one")]
    pub m: usize,
    #[serde(default)]
    pub kernels: Vec<KernelChoice>,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub baselines: BaselineConfig,
}

/// A config problem, anchored to a line of the source when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: Option<PathBuf>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let file = self
            .file
            .as_ref()
            .map_or_else(|| String::from("<config>"), |p| p.display().to_string());
        match self.line {
            Some(line) => write!(f, "{file}:{line}: {}", self.message),
            None => write!(f, "{file}: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line of a byte offset.
fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Line on which `key` (a dotted name) is assigned, if any.
pub fn key_line(src: &str, key: &str) -> Option<usize> {
    let (table, leaf) = match key.rsplit_once('.') {
        Some((t, l)) => (t, l),
        None => ("", key),
    };
    let mut section = String::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else {
            continue;
        };
        let lhs: String = lhs.split('.').map(str::trim).collect::<Vec<_>>().join(".");
        let full = if section.is_empty() {
            lhs
        } else {
            format!("{section}.{lhs}")
        };
        let wanted = if table.is_empty() {
            leaf.to_string()
        } else {
            format!("{table}.{leaf}")
        };
        if full == wanted {
            return Some(i + 1);
        }
    }
    None
}

impl ExperimentConfig {
    pub fn parse(src: &str, file: Option<&Path>) -> Result<Self, ConfigError> {
        let err = |line, message| ConfigError {
            file: file.map(Path::to_path_buf),
            line,
            message,
        };
        let cfg: ExperimentConfig = toml::from_str(src).map_err(|e| {
            let line = e.span().map(|s| line_of(src, s.start));
            err(line, e.message().trim().to_string())
        })?;
        cfg.validate()
            .map_err(|(key, message)| err(key_line(src, key), format!("{key}: {message}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|e| ConfigError {
            file: Some(path.to_path_buf()),
            line: None,
            message: format!("cannot read config: {e}"),
        })?;
        let mut cfg = Self::parse(&src, Some(path))?;
        // data and output paths are relative to the config file
        if let Some(dir) = path.parent() {
            for p in [&mut cfg.model.data, &mut cfg.output].into_iter().flatten() {
                if p.is_relative() {
                    let joined = dir.join(&*p);
                    *p = std::path::absolute(&joined).unwrap_or(joined);
                }
            }
        }
        Ok(cfg)
    }

    /// Built-in config used when no file is given.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let mut model = ModelConfig::default();
        let (seeds, n_keep) = match kind {
            ExperimentKind::Morris | ExperimentKind::CompareBaselines => (vec![1990], 100_000),
            ExperimentKind::Treg => {
                model.nu = Some(4.0);
                model.design = Some(Design::Collinear);
                model.n = Some(50);
                model.correlation = Some(0.999);
                model.beta_true = Some(vec![1.0, 1.0]);
                model.data_seed = Some(4);
                (vec![1], 200_000)
            }
            ExperimentKind::Ising => {
                model.side = Some(16);
                model.beta = Some(0.44);
                model.init = Some(LatticeInit::Cold);
                (vec![1], 100_000)
            }
            ExperimentKind::Potts => {
                model.side = Some(16);
                model.states = Some(3);
                model.beta = Some((1.0 + 3f64.sqrt()).ln());
                model.init = Some(LatticeInit::Cold);
                (vec![1], 20_000)
            }
        };
        ExperimentConfig {
            experiment: kind,
            seeds,
            n_burn: 1000,
            n_keep,
            thin: 1,
            m: 1,
            kernels: Vec::new(),
            output: None,
            model,
            baselines: BaselineConfig::default(),
        }
    }

    /// Kernels to run: the configured ones or the experiment's full set.
    pub fn kernel_list(&self) -> Vec<KernelChoice> {
        if self.kernels.is_empty() {
            self.experiment.allowed_kernels().to_vec()
        } else {
            self.kernels.clone()
        }
    }

    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let positive = |key: &'static str, v: usize| {
            if v == 0 {
                Err((key, String::from("must be positive")))
            } else {
                Ok(())
            }
        };
        if self.seeds.is_empty() {
            return Err(("seeds", String::from("at least one seed required")));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(("seeds", String::from("seeds must be distinct")));
        }
        positive("n_keep", self.n_keep)?;
        positive("thin", self.thin)?;
        positive("m", self.m)?;
        if self.n_keep < 100 && self.experiment != ExperimentKind::CompareBaselines {
            return Err(("n_keep", String::from("at least 100 kept states needed for IACT")));
        }
        let allowed = self.experiment.allowed_kernels();
        for k in &self.kernels {
            if !allowed.contains(k) {
                return Err((
                    "kernels",
                    format!("kernel `{}` not available for {}", k.name(), self.experiment.name()),
                ));
            }
        }
        let mut ks = self.kernels.clone();
        ks.sort_unstable();
        ks.dedup();
        if ks.len() != self.kernels.len() {
            return Err(("kernels", String::from("kernels must be distinct")));
        }
        if self.m > 1 && self.experiment != ExperimentKind::Morris {
            return Err(("m", String::from("populations are only used by the morris experiment")));
        }
        let b = &self.baselines;
        positive("baselines.gh_iters", b.gh_iters)?;
        positive("baselines.is_rounds", b.is_rounds)?;
        if b.gh_degree < 3 {
            return Err(("baselines.gh_degree", String::from("must be at least 3")));
        }
        if !(b.is_dof > 2.0) {
            return Err(("baselines.is_dof", String::from("must exceed 2")));
        }
        if b.is_draws < 2 {
            return Err(("baselines.is_draws", String::from("must be at least 2")));
        }
        if b.sir_keep == 0 || b.sir_keep >= b.sir_draws {
            return Err(("baselines.sir_keep", String::from("must be in 1..sir_draws")));
        }
        let md = &self.model;
        if let Some(s) = md.step_scale {
            if !(s > 0.0) {
                return Err(("model.step_scale", String::from("must be positive")));
            }
        }
        match self.experiment {
            ExperimentKind::Ising | ExperimentKind::Potts => {
                if md.side.is_none() {
                    return Err(("model.side", String::from("lattice side length required")));
                }
                if md.beta.is_none() {
                    return Err(("model.beta", String::from("inverse temperature required")));
                }
                if self.experiment == ExperimentKind::Potts && md.states.is_none() {
                    return Err(("model.states", String::from("number of Potts states required")));
                }
            }
            ExperimentKind::Treg => {
                if md.nu.is_none() {
                    return Err(("model.nu", String::from("degrees of freedom required")));
                }
                match md.design {
                    Some(Design::Data) if md.data.is_none() => {
                        return Err(("model.data", String::from("data file required")));
                    }
                    None => return Err(("model.design", String::from("`collinear` or `data`"))),
                    _ => {}
                }
            }
            ExperimentKind::Morris | ExperimentKind::CompareBaselines => {
                if md.data.is_some() && (md.y.is_some() || md.v.is_some()) {
                    return Err(("model.data", String::from("give either a data file or y and v")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MORRIS: &str = "\
experiment = \"morris\"
seeds = [1, 2]
n_burn = 100
n_keep = 1000
model.y = [1.0, -1.0, 2.0, 0.0]
model.v = [1.0, 1.0, 1.0, 1.0]
model.lambda = 1.0
model.q = 1.0
";

    #[test]
    fn parses_dotted_keys() {
        let c = ExperimentConfig::parse(MORRIS, None).unwrap();
        assert_eq!(c.experiment, ExperimentKind::Morris);
        assert_eq!(c.model.lambda, Some(1.0));
        assert_eq!((c.thin, c.m), (1, 1));
        assert_eq!(c.kernel_list(), vec![KernelChoice::Da]);
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let src = MORRIS.replace("model.q = 1.0", "model.qq = 1.0");
        let e = ExperimentConfig::parse(&src, None).unwrap_err();
        assert_eq!(e.line, Some(8));
        assert!(e.message.contains("qq"), "{e}");
    }

    #[test]
    fn zero_count_rejected_with_line() {
        let src = MORRIS.replace("n_keep = 1000", "n_keep = 0");
        let e = ExperimentConfig::parse(&src, None).unwrap_err();
        assert_eq!(e.line, Some(4));
        assert!(e.to_string().starts_with("<config>:4: n_keep"), "{e}");
    }

    #[test]
    fn empty_seeds_rejected() {
        let src = MORRIS.replace("seeds = [1, 2]", "seeds = []");
        assert_eq!(ExperimentConfig::parse(&src, None).unwrap_err().line, Some(2));
    }

    #[test]
    fn section_keys_located() {
        let src = "a = 1\n[model]\nbeta = 2\n";
        assert_eq!(key_line(src, "model.beta"), Some(3));
        assert_eq!(key_line(src, "beta"), None);
    }

    #[test]
    fn defaults_are_valid() {
        use ExperimentKind::*;
        for k in [Morris, Treg, Ising, Potts, CompareBaselines] {
            let c = ExperimentConfig::default_for(k);
            assert!(c.validate().is_ok(), "{k:?}");
            let text = toml::to_string(&c).unwrap();
            assert_eq!(ExperimentConfig::parse(&text, None).unwrap(), c);
        }
    }

    #[test]
    fn wrong_kernel_rejected() {
        let src = format!("{MORRIS}kernels = [\"swendsen-wang\"]\n");
        let e = ExperimentConfig::parse(&src, None).unwrap_err();
        assert_eq!(e.line, Some(9));
    }
}
