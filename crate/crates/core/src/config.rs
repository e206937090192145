//! Declarative experiment configuration (versioned JSON, unknown keys rejected).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::{DatasetSpec, LabeledDataset, DEFAULT_SINUSOID_NORM};
use crate::models::{CheckpointSchedule, Loss, ShapeSpec, TrainConfig};
use crate::theory::{InitSpec, SgdCheckConfig, Theorem1Config};
use crate::{derive_seed, Error, Result};

pub const CONFIG_VERSION: u32 = 1;

/// Environment variable naming the default root for dataset files.
pub const DATA_DIR_ENV: &str = "PHASEPROBE_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskConfig {
    Sinusoid {
        d: usize,
        #[serde(default = "default_norm")]
        w_prime_norm: f64,
        task_seed: u64,
    },
    GaussianLinear {
        d: usize,
        noise_rate: f64,
        task_seed: u64,
    },
    DiskSinusoid {
        amplitude: f64,
        frequency: f64,
        noise_rate: f64,
    },
    /// IDX files; relative paths resolve against `PHASEPROBE_DATA_DIR`.
    Mnist {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
    },
}

fn default_norm() -> f64 {
    DEFAULT_SINUSOID_NORM
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
}

/// Training hyperparameters shared by every seed (the seed comes from the seed list).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub steps: u64,
    #[serde(default)]
    pub checkpoint_schedule: CheckpointSchedule,
}

impl TrainSettings {
    pub fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            loss: Loss::Bce,
            steps: self.steps,
            checkpoint_schedule: self.checkpoint_schedule.clone(),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Linear model trained on ground-truth labels.
    Direct,
    /// Linear model distilled from the network at `T0` (located with a directly trained probe).
    DistillAtT0,
    /// Students of increasing depth distilled from the final network.
    Ladder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimpleModelConfig {
    pub protocol: Protocol,
    pub train: TrainSettings,
    /// Hidden widths per ladder rung (ladder protocol only).
    #[serde(default)]
    pub rungs: Vec<Vec<usize>>,
}

/// Parameter grid for the sparse-noise theory sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryGrid {
    pub n: Vec<usize>,
    pub d: Vec<usize>,
    pub p: Vec<f64>,
    pub init: Vec<InitSpec>,
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    #[serde(default = "default_eps")]
    pub epsilon: f64,
    #[serde(default)]
    pub sgd: Option<SgdCheckConfig>,
}

fn default_mc() -> usize {
    100_000
}

fn default_eps() -> f64 {
    0.05
}

impl Default for TheoryGrid {
    fn default() -> Self {
        Self {
            n: vec![20],
            d: vec![2000],
            p: vec![0.0, 0.1, 0.2, 0.3],
            init: vec![InitSpec::Simplest],
            mc_samples: default_mc(),
            epsilon: default_eps(),
            sgd: Some(SgdCheckConfig::default()),
        }
    }
}

impl TheoryGrid {
    /// One theorem configuration per grid point, all sharing `seeds`.
    pub fn expand(&self, seeds: &[u64]) -> Vec<Theorem1Config> {
        let mut out = Vec::new();
        for &n in &self.n {
            for &d in &self.d {
                for &p in &self.p {
                    for init in &self.init {
                        out.push(Theorem1Config {
                            n,
                            d,
                            p,
                            init: init.clone(),
                            seeds: seeds.to_vec(),
                            mc_samples: self.mc_samples,
                            epsilon: self.epsilon,
                            sgd: self.sgd.clone(),
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub task: TaskConfig,
    pub n_train: usize,
    pub n_test: usize,
    pub model: ModelConfig,
    pub train: TrainSettings,
    pub simple_model: SimpleModelConfig,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub theory: Option<TheoryGrid>,
}

impl ExperimentConfig {
    /// The high-dimensional sinusoid experiment at desk scale.
    pub fn sinusoid_default() -> Self {
        Self {
            version: CONFIG_VERSION,
            task: TaskConfig::Sinusoid {
                d: 100,
                w_prime_norm: DEFAULT_SINUSOID_NORM,
                task_seed: 7,
            },
            n_train: 10_000,
            n_test: 10_000,
            model: ModelConfig {
                hidden: vec![256, 256],
            },
            train: TrainSettings {
                batch_size: 32,
                learning_rate: 0.01,
                steps: 20_000,
                checkpoint_schedule: CheckpointSchedule::LogGrid { per_decade: 10 },
            },
            simple_model: SimpleModelConfig {
                protocol: Protocol::Direct,
                train: TrainSettings {
                    batch_size: 32,
                    learning_rate: 0.01,
                    steps: 20_000,
                    checkpoint_schedule: CheckpointSchedule::Explicit { steps: vec![] },
                },
                rungs: vec![],
            },
            seeds: vec![0, 1, 2, 3, 4],
            output_dir: PathBuf::from("out/sinusoid"),
            theory: None,
        }
    }

    /// Parse and validate, resolving dataset paths against `data_dir`.
    pub fn from_json(text: &str, data_dir: Option<&Path>) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text)?;
        cfg.resolve_paths(data_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let data_dir = std::env::var_os(DATA_DIR_ENV).map(PathBuf::from);
        Self::from_json(&text, data_dir.as_deref())
    }

    fn resolve_paths(&mut self, data_dir: Option<&Path>) {
        if let (
            TaskConfig::Mnist {
                train_images,
                train_labels,
                test_images,
                test_labels,
            },
            Some(root),
        ) = (&mut self.task, data_dir)
        {
            for p in [train_images, train_labels, test_images, test_labels] {
                if p.is_relative() {
                    *p = root.join(&*p);
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::UnsupportedVersion(self.version));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter("seed list is empty".into()));
        }
        if let TaskConfig::Mnist {
            train_images,
            train_labels,
            test_images,
            test_labels,
        } = &self.task
        {
            for p in [train_images, train_labels, test_images, test_labels] {
                if !p.exists() {
                    return Err(Error::InvalidParameter(format!(
                        "dataset file {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        if self.simple_model.protocol == Protocol::Ladder && self.simple_model.rungs.len() < 2 {
            return Err(Error::InvalidParameter(
                "ladder protocol needs at least two rungs".into(),
            ));
        }
        self.train.with_seed(0).validate()?;
        self.simple_model.train.with_seed(0).validate()
    }

    pub fn input_dim(&self) -> usize {
        match &self.task {
            TaskConfig::Sinusoid { d, .. } | TaskConfig::GaussianLinear { d, .. } => *d,
            TaskConfig::DiskSinusoid { .. } => 2,
            TaskConfig::Mnist { .. } => 784,
        }
    }

    pub fn network_shape(&self) -> ShapeSpec {
        ShapeSpec::mlp(self.input_dim(), &self.model.hidden)
    }

    /// Whether datasets differ between seeds (false for fixed on-disk data).
    pub fn seeded_data(&self) -> bool {
        !matches!(self.task, TaskConfig::Mnist { .. })
    }

    /// Train and test splits for one experiment seed.
    pub fn datasets(&self, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
        match &self.task {
            TaskConfig::Mnist {
                train_images,
                train_labels,
                test_images,
                test_labels,
            } => {
                let train = crate::datagen::load_binary_mnist(train_images, train_labels)?;
                let test = crate::datagen::load_binary_mnist(test_images, test_labels)?;
                let cap = |ds: LabeledDataset, n: usize| {
                    if n > 0 && n < ds.n {
                        ds.slice(0..n)
                    } else {
                        Ok(ds)
                    }
                };
                Ok((cap(train, self.n_train)?, cap(test, self.n_test)?))
            }
            _ => {
                let spec = self.task_spec()?;
                Ok((
                    spec.sample(self.n_train, derive_seed(seed, 101))?,
                    spec.sample(self.n_test, derive_seed(seed, 202))?,
                ))
            }
        }
    }

    /// Generator spec for synthetic tasks (shared fixed parameters across seeds).
    pub fn task_spec(&self) -> Result<DatasetSpec> {
        match &self.task {
            TaskConfig::Sinusoid {
                d,
                w_prime_norm,
                task_seed,
            } => DatasetSpec::sinusoid(*d, *w_prime_norm, *task_seed),
            TaskConfig::GaussianLinear {
                d,
                noise_rate,
                task_seed,
            } => DatasetSpec::gaussian_linear(*d, *noise_rate, *task_seed),
            TaskConfig::DiskSinusoid {
                amplitude,
                frequency,
                noise_rate,
            } => DatasetSpec::disk_sinusoid(*amplitude, *frequency, *noise_rate),
            TaskConfig::Mnist {
                train_images,
                train_labels,
                ..
            } => Ok(DatasetSpec::Mnist {
                images: train_images.clone(),
                labels: train_labels.clone(),
            }),
        }
    }
}
