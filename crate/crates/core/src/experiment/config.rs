//! Plain-text experiment configuration.
//!
//! The format is sectioned key-value text:
//!
//! ```text
//! # comment
//! [section]
//! key = value
//! list_key = a, b, c
//! ```
//!
//! Sections: `[dataset]`, `[model]`, `[normalization]`, `[federation]`,
//! `[local]`, `[attack]`, `[defense]`, `[run]`. Every key is optional except
//! `dataset.kind` and the file paths it implies; unknown sections, unknown
//! keys, and duplicate keys are rejected by name.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::attack::TrojanSpec;
use crate::datasets::SynthImageConfig;
use crate::error::{Error, Result};
use crate::flcore::{Defense, PlateauRule, ServerConfig};
use crate::model::{AdamConfig, LocalTrainConfig, ModelArch};

/// Where the image or vector corpus comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetKind {
    /// IDX-format image/label file pairs.
    FashionMnist {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
    },
    /// CIFAR-10 binary batches.
    Cifar10 {
        train_files: Vec<PathBuf>,
        test_file: PathBuf,
    },
    /// Gaussian class clusters (plain feature vectors, no images, so no
    /// trojan support).
    Synthetic {
        num_classes: usize,
        train_per_class: usize,
        test_per_class: usize,
        dim: usize,
        separation: f64,
    },
    /// Procedurally drawn 28x28 grayscale shape classes; supports the full
    /// image pipeline including the trojan.
    SyntheticImages { config: SynthImageConfig },
}

impl DatasetKind {
    /// Whether samples are raw images (required for the pixel trojan).
    pub fn is_image_backed(&self) -> bool {
        !matches!(self, DatasetKind::Synthetic { .. })
    }
}

/// Model family; instantiated against the dataset's dimensions at load time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchKind {
    Softmax,
    Mlp { hidden_dim: usize },
}

impl ArchKind {
    pub fn instantiate(&self, input_dim: usize, num_classes: usize) -> ModelArch {
        match *self {
            ArchKind::Softmax => ModelArch::SoftmaxRegression {
                input_dim,
                num_classes,
            },
            ArchKind::Mlp { hidden_dim } => ModelArch::Mlp {
                input_dim,
                hidden_dim,
                num_classes,
            },
        }
    }
}

/// Adversary settings; present only when the attack is enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackConfig {
    pub trojan: TrojanSpec,
    /// Number of training-pool samples the adversary draws (uniformly,
    /// without replacement) as its local dataset.
    pub adversary_samples: usize,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            trojan: TrojanSpec::default(),
            adversary_samples: 1000,
        }
    }
}

/// Defense choice plus the RLR threshold (kept even when the defense is off
/// so table sweeps can switch the defense on without re-stating theta).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DefenseConfig {
    pub enabled: bool,
    pub theta: usize,
}

impl Default for DefenseConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            theta: 4,
        }
    }
}

impl DefenseConfig {
    pub fn to_defense(self) -> Defense {
        if self.enabled {
            Defense::Rlr { theta: self.theta }
        } else {
            Defense::None
        }
    }
}

/// Fully resolved experiment description: dataset, model, federation
/// schedule, optional attack and defense, and the run plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    /// Class-balanced subset of the train pool (None = use everything).
    pub train_subset: Option<usize>,
    pub test_subset: Option<usize>,
    /// Uniform per-channel normalization (mean, std).
    pub normalization: (f64, f64),
    pub arch: ArchKind,
    pub num_agents: usize,
    pub alphas: Vec<f64>,
    pub participation: f64,
    pub server_lr: f64,
    pub rounds: u32,
    pub plateau: Option<PlateauRule>,
    pub local: LocalTrainConfig,
    pub attack: Option<AttackConfig>,
    pub defense: DefenseConfig,
    pub num_runs: usize,
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetKind::SyntheticImages {
                config: SynthImageConfig::default(),
            },
            train_subset: None,
            test_subset: None,
            normalization: (0.5, 0.5),
            arch: ArchKind::Mlp { hidden_dim: 128 },
            num_agents: 10,
            alphas: vec![1.0, 0.5, 0.25],
            participation: 1.0,
            server_lr: 1.0,
            rounds: 50,
            plateau: Some(PlateauRule::default()),
            local: LocalTrainConfig::default(),
            attack: None,
            defense: DefenseConfig::default(),
            num_runs: 5,
            master_seed: 42,
        }
    }
}

impl ExperimentConfig {
    /// The server configuration for a given defense choice.
    pub fn server(&self, defense: Defense) -> ServerConfig {
        ServerConfig {
            num_agents: self.num_agents,
            participation: self.participation,
            server_lr: self.server_lr,
            rounds: self.rounds,
            defense,
            local: self.local,
            plateau: self.plateau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::config("federation.alpha must list at least one value"));
        }
        if let Some(bad) = self.alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::config(format!(
                "federation.alpha values must be positive, got {bad}"
            )));
        }
        if self.num_runs == 0 {
            return Err(Error::config("run.num_runs must be at least 1"));
        }
        let (_, std) = self.normalization;
        if !(std > 0.0 && std.is_finite()) {
            return Err(Error::config(format!(
                "normalization.std must be positive, got {std}"
            )));
        }
        if let ArchKind::Mlp { hidden_dim } = self.arch {
            if hidden_dim == 0 {
                return Err(Error::config("model.hidden_dim must be at least 1"));
            }
        }
        if self.attack.is_some() && !self.dataset.is_image_backed() {
            return Err(Error::config(
                "attack requires an image-backed dataset kind (the trojan is a pixel pattern)",
            ));
        }
        if self.attack.is_some() && self.num_agents < 2 {
            return Err(Error::config(
                "attack needs at least 2 agents (one adversary plus honest agents)",
            ));
        }
        match &self.dataset {
            DatasetKind::Synthetic {
                num_classes,
                train_per_class,
                test_per_class,
                dim,
                ..
            } => {
                if *num_classes < 2 || *train_per_class == 0 || *test_per_class == 0 || *dim == 0 {
                    return Err(Error::config(
                        "synthetic dataset needs num_classes >= 2 and nonzero sizes",
                    ));
                }
            }
            DatasetKind::SyntheticImages { config } => {
                if config.train_per_class == 0 || config.test_per_class == 0 {
                    return Err(Error::config("synthetic_images sizes must be nonzero"));
                }
            }
            _ => {}
        }
        // Generated corpora are already sized exactly; a second subsampling
        // knob would silently fight with train_per_class / test_per_class.
        if !matches!(
            self.dataset,
            DatasetKind::FashionMnist { .. } | DatasetKind::Cifar10 { .. }
        ) && (self.train_subset.is_some() || self.test_subset.is_some())
        {
            return Err(Error::config(
                "train_subset/test_subset only apply to file-backed datasets; \
                 size generated corpora via train_per_class and test_per_class",
            ));
        }
        // Exercise the downstream validators so config errors surface at
        // parse time, not rounds into a sweep.
        self.server(self.defense.to_defense()).validate()?;
        Ok(())
    }
}

/// Parse and validate a config file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

/// Raw parsed key-value store with consume-and-report-leftovers semantics.
struct KeyStore {
    entries: BTreeMap<(String, String), (String, usize)>,
}

impl KeyStore {
    fn parse(text: &str) -> Result<Self> {
        const SECTIONS: &[&str] = &[
            "dataset",
            "model",
            "normalization",
            "federation",
            "local",
            "attack",
            "defense",
            "run",
        ];
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(Error::config(format!(
                        "line {line_no}: unknown section [{name}]; expected one of {}",
                        SECTIONS.join(", ")
                    )));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(format!(
                    "line {line_no}: expected `key = value` or a [section] header, got `{line}`"
                )));
            };
            let Some(section) = section.clone() else {
                return Err(Error::config(format!(
                    "line {line_no}: key `{}` appears before any [section] header",
                    key.trim()
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if entries
                .insert((section.clone(), key.clone()), (value, line_no))
                .is_some()
            {
                return Err(Error::config(format!(
                    "line {line_no}: duplicate key `{key}` in section [{section}]"
                )));
            }
        }
        Ok(Self { entries })
    }

    fn take(&mut self, section: &str, key: &str) -> Option<String> {
        self.entries
            .remove(&(section.to_string(), key.to_string()))
            .map(|(v, _)| v)
    }

    fn finish(self) -> Result<()> {
        if let Some(((section, key), (_, line_no))) = self.entries.into_iter().next() {
            return Err(Error::config(format!(
                "line {line_no}: unknown key `{key}` in section [{section}]"
            )));
        }
        Ok(())
    }
}

fn parse_value<T: std::str::FromStr>(section: &str, key: &str, value: &str, form: &str) -> Result<T> {
    value.parse::<T>().map_err(|_| {
        Error::config(format!(
            "{section}.{key}: expected {form}, got `{value}`"
        ))
    })
}

fn take_parsed<T: std::str::FromStr>(
    store: &mut KeyStore,
    section: &str,
    key: &str,
    form: &str,
    default: T,
) -> Result<T> {
    match store.take(section, key) {
        Some(v) => parse_value(section, key, &v, form),
        None => Ok(default),
    }
}

fn take_bool(store: &mut KeyStore, section: &str, key: &str, default: bool) -> Result<bool> {
    match store.take(section, key) {
        None => Ok(default),
        Some(v) => match v.as_str() {
            "true" | "on" | "yes" => Ok(true),
            "false" | "off" | "no" => Ok(false),
            other => Err(Error::config(format!(
                "{section}.{key}: expected true/false, got `{other}`"
            ))),
        },
    }
}

fn required(store: &mut KeyStore, section: &str, key: &str) -> Result<String> {
    store.take(section, key).ok_or_else(|| {
        Error::config(format!(
            "missing required key `{key}` in section [{section}]"
        ))
    })
}

fn parse_dataset(store: &mut KeyStore) -> Result<DatasetKind> {
    let kind = required(store, "dataset", "kind")?;
    match kind.as_str() {
        "fashion_mnist" => Ok(DatasetKind::FashionMnist {
            train_images: PathBuf::from(required(store, "dataset", "train_images")?),
            train_labels: PathBuf::from(required(store, "dataset", "train_labels")?),
            test_images: PathBuf::from(required(store, "dataset", "test_images")?),
            test_labels: PathBuf::from(required(store, "dataset", "test_labels")?),
        }),
        "cifar10" => {
            let files = required(store, "dataset", "train_files")?;
            let train_files: Vec<PathBuf> = files
                .split(',')
                .map(|s| PathBuf::from(s.trim()))
                .filter(|p| !p.as_os_str().is_empty())
                .collect();
            if train_files.is_empty() {
                return Err(Error::config("dataset.train_files lists no paths"));
            }
            Ok(DatasetKind::Cifar10 {
                train_files,
                test_file: PathBuf::from(required(store, "dataset", "test_file")?),
            })
        }
        "synthetic" => Ok(DatasetKind::Synthetic {
            num_classes: take_parsed(store, "dataset", "num_classes", "a count", 10usize)?,
            train_per_class: take_parsed(store, "dataset", "train_per_class", "a count", 1000usize)?,
            test_per_class: take_parsed(store, "dataset", "test_per_class", "a count", 200usize)?,
            dim: take_parsed(store, "dataset", "dim", "a count", 32usize)?,
            separation: take_parsed(store, "dataset", "separation", "a real", 3.0f64)?,
        }),
        "synthetic_images" => {
            let d = SynthImageConfig::default();
            Ok(DatasetKind::SyntheticImages {
                config: SynthImageConfig {
                    num_classes: take_parsed(
                        store,
                        "dataset",
                        "num_classes",
                        "a count",
                        d.num_classes,
                    )?,
                    train_per_class: take_parsed(
                        store,
                        "dataset",
                        "train_per_class",
                        "a count",
                        d.train_per_class,
                    )?,
                    test_per_class: take_parsed(
                        store,
                        "dataset",
                        "test_per_class",
                        "a count",
                        d.test_per_class,
                    )?,
                    noise: take_parsed(store, "dataset", "noise", "a real", d.noise)?,
                    jitter: take_parsed(store, "dataset", "jitter", "a real", d.jitter)?,
                },
            })
        }
        other => Err(Error::config(format!(
            "dataset.kind: expected fashion_mnist, cifar10, synthetic, or synthetic_images, got `{other}`"
        ))),
    }
}

fn parse_alpha_list(value: &str) -> Result<Vec<f64>> {
    let alphas: Result<Vec<f64>> = value
        .split(',')
        .map(|s| parse_value("federation", "alpha", s.trim(), "a comma-separated list of reals"))
        .collect();
    alphas
}

fn parse_plateau(value: &str) -> Result<Option<PlateauRule>> {
    if value == "off" {
        return Ok(None);
    }
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::config(format!(
            "federation.plateau: expected `off` or `window, min_delta_pp`, got `{value}`"
        )));
    }
    Ok(Some(PlateauRule {
        window: parse_value("federation", "plateau", parts[0], "a count")?,
        min_delta_pp: parse_value("federation", "plateau", parts[1], "a real")?,
    }))
}

/// Parse a config from text. See the module docs for the grammar.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let mut store = KeyStore::parse(text)?;
    let defaults = ExperimentConfig::default();

    let dataset = parse_dataset(&mut store)?;
    let train_subset = match store.take("dataset", "train_subset") {
        Some(v) => Some(parse_value("dataset", "train_subset", &v, "a count")?),
        None => None,
    };
    let test_subset = match store.take("dataset", "test_subset") {
        Some(v) => Some(parse_value("dataset", "test_subset", &v, "a count")?),
        None => None,
    };

    let arch = match store.take("model", "arch") {
        None => defaults.arch,
        Some(v) => match v.as_str() {
            "softmax" => ArchKind::Softmax,
            "mlp" => ArchKind::Mlp {
                hidden_dim: take_parsed(&mut store, "model", "hidden_dim", "a count", 128usize)?,
            },
            other => {
                return Err(Error::config(format!(
                    "model.arch: expected softmax or mlp, got `{other}`"
                )))
            }
        },
    };
    if arch == ArchKind::Softmax {
        // hidden_dim is meaningless for softmax; reject rather than ignore.
        if store.take("model", "hidden_dim").is_some() {
            return Err(Error::config(
                "model.hidden_dim is only valid with model.arch = mlp",
            ));
        }
    }

    let normalization = (
        take_parsed(&mut store, "normalization", "mean", "a real", defaults.normalization.0)?,
        take_parsed(&mut store, "normalization", "std", "a real", defaults.normalization.1)?,
    );

    let num_agents = take_parsed(&mut store, "federation", "num_agents", "a count", defaults.num_agents)?;
    let alphas = match store.take("federation", "alpha") {
        Some(v) => parse_alpha_list(&v)?,
        None => defaults.alphas.clone(),
    };
    let participation = take_parsed(
        &mut store,
        "federation",
        "participation",
        "a real in (0, 1]",
        defaults.participation,
    )?;
    let server_lr = take_parsed(&mut store, "federation", "server_lr", "a real", defaults.server_lr)?;
    let rounds = take_parsed(&mut store, "federation", "rounds", "a count", defaults.rounds)?;
    let plateau = match store.take("federation", "plateau") {
        Some(v) => parse_plateau(&v)?,
        None => defaults.plateau,
    };

    let local = LocalTrainConfig {
        epochs: take_parsed(&mut store, "local", "epochs", "a count", defaults.local.epochs)?,
        batch_size: take_parsed(
            &mut store,
            "local",
            "batch_size",
            "a count",
            defaults.local.batch_size,
        )?,
        adam: AdamConfig {
            learning_rate: take_parsed(
                &mut store,
                "local",
                "learning_rate",
                "a real",
                defaults.local.adam.learning_rate,
            )?,
            beta1: take_parsed(&mut store, "local", "beta1", "a real", defaults.local.adam.beta1)?,
            beta2: take_parsed(&mut store, "local", "beta2", "a real", defaults.local.adam.beta2)?,
            epsilon: take_parsed(&mut store, "local", "epsilon", "a real", defaults.local.adam.epsilon)?,
        },
    };

    let attack_enabled = take_bool(&mut store, "attack", "enabled", false)?;
    let attack_defaults = AttackConfig::default();
    let attack_cfg = AttackConfig {
        adversary_samples: take_parsed(
            &mut store,
            "attack",
            "adversary_samples",
            "a count",
            attack_defaults.adversary_samples,
        )?,
        trojan: TrojanSpec {
            anchor_row: take_parsed(
                &mut store,
                "attack",
                "anchor_row",
                "a count",
                attack_defaults.trojan.anchor_row,
            )?,
            anchor_col: take_parsed(
                &mut store,
                "attack",
                "anchor_col",
                "a count",
                attack_defaults.trojan.anchor_col,
            )?,
            intensity: take_parsed(
                &mut store,
                "attack",
                "intensity",
                "an integer in 0..=255",
                attack_defaults.trojan.intensity,
            )?,
            target_class: take_parsed(
                &mut store,
                "attack",
                "target_class",
                "a class id",
                attack_defaults.trojan.target_class,
            )?,
        },
    };
    let attack = if attack_enabled { Some(attack_cfg) } else { None };

    let defense = {
        let enabled = match store.take("defense", "kind") {
            None => false,
            Some(v) => match v.as_str() {
                "none" => false,
                "rlr" => true,
                other => {
                    return Err(Error::config(format!(
                        "defense.kind: expected none or rlr, got `{other}`"
                    )))
                }
            },
        };
        DefenseConfig {
            enabled,
            theta: take_parsed(&mut store, "defense", "theta", "a count", 4usize)?,
        }
    };

    let num_runs = take_parsed(&mut store, "run", "num_runs", "a count", defaults.num_runs)?;
    let master_seed = take_parsed(&mut store, "run", "master_seed", "a seed", defaults.master_seed)?;

    store.finish()?;

    let config = ExperimentConfig {
        dataset,
        train_subset,
        test_subset,
        normalization,
        arch,
        num_agents,
        alphas,
        participation,
        server_lr,
        rounds,
        plateau,
        local,
        attack,
        defense,
        num_runs,
        master_seed,
    };
    config.validate()?;
    Ok(config)
}
