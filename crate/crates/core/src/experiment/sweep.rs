//! Sweep execution: load data once, run every (cell x run) pair, aggregate
//! final-round metrics into one result row per cell.
//!
//! Seed discipline: per-run seeds depend only on `(master_seed, run_index,
//! namespace)`, never on the cell, so two cells that differ only in defense
//! see bit-identical data for each run index. That makes paired comparisons
//! (defense off vs on) exact rather than statistical.

use crate::attack::{build_poisoned_test, poison_dataset};
use crate::datasets::{
    class_balanced_subset, load_cifar_binary, load_idx, normalize, synth_dataset,
    synth_image_corpus, Dataset, ImageSet, Normalization,
};
use crate::digest::fnv1a64;
use crate::error::{Error, Result};
use crate::experiment::config::{DatasetKind, ExperimentConfig};
use crate::flcore::{run_training, Defense, FlDataset};
use crate::metrics::{aggregate_runs, MeanStd, MetricsRecord};
use crate::model::ModelArch;
use crate::partition::{dirichlet_partition, sample_adversary_dataset};
use crate::seeds::{
    derive_seed, rng_from, NS_ADVERSARY, NS_DATASET, NS_PARTITION, NS_RUN, RUN_SHARED,
};

/// The four reported tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    /// Clean training: accuracy and bias across heterogeneity levels.
    Fairness,
    /// Backdoored training, no defense.
    Robustness,
    /// Backdoored training with the robust learning rate on.
    Rlr,
    /// Backdoored training with the defense off and on, side by side.
    Interplay,
}

impl std::fmt::Display for TableKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            TableKind::Fairness => "fairness",
            TableKind::Robustness => "robustness",
            TableKind::Rlr => "rlr",
            TableKind::Interplay => "interplay",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for TableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fairness" => Ok(TableKind::Fairness),
            "robustness" => Ok(TableKind::Robustness),
            "rlr" => Ok(TableKind::Rlr),
            "interplay" => Ok(TableKind::Interplay),
            other => Err(Error::config(format!(
                "unknown table {other:?}, expected fairness, robustness, rlr or interplay"
            ))),
        }
    }
}

/// One grid cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSpec {
    pub alpha: f64,
    pub attack: bool,
    pub defense: Defense,
}

/// Aggregated final-round metrics for one cell, across all its runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub alpha: f64,
    pub attack: bool,
    pub defense: Defense,
    pub num_runs: usize,
    pub accuracy: MeanStd,
    pub bias: MeanStd,
    pub backdoor_accuracy: Option<MeanStd>,
}

/// One evaluated round of one run, as written to the detail CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailRow {
    pub run_id: usize,
    pub seed: u64,
    pub alpha: f64,
    pub defense: Defense,
    pub round: u32,
    pub accuracy: f64,
    pub bias: f64,
    pub backdoor_accuracy: Option<f64>,
    pub classwise: Vec<f64>,
}

/// A cell that errored; the rest of the sweep still completes.
#[derive(Debug)]
pub struct CellFailure {
    pub cell: CellSpec,
    pub error: Error,
}

#[derive(Debug)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub details: Vec<DetailRow>,
    pub failures: Vec<CellFailure>,
    /// Class count of the corpus; fixes the detail CSV's per-class columns.
    pub num_classes: usize,
}

/// The cells a named table runs over the config's alpha list. Attack tables
/// require an `[attack]` section. The interplay table is defense-major: all
/// defense-off cells first, then all defense-on cells.
pub fn table_cells(kind: TableKind, config: &ExperimentConfig) -> Result<Vec<CellSpec>> {
    if kind != TableKind::Fairness && config.attack.is_none() {
        return Err(Error::config(format!(
            "table {kind} needs an [attack] section in the config"
        )));
    }
    let rlr = Defense::Rlr {
        theta: config.defense.theta,
    };
    let over = |attack: bool, defense: Defense| -> Vec<CellSpec> {
        config
            .alphas
            .iter()
            .map(|&alpha| CellSpec {
                alpha,
                attack,
                defense,
            })
            .collect()
    };
    Ok(match kind {
        TableKind::Fairness => over(false, Defense::None),
        TableKind::Robustness => over(true, Defense::None),
        TableKind::Rlr => over(true, rlr),
        TableKind::Interplay => {
            let mut cells = over(true, Defense::None);
            cells.extend(over(true, rlr));
            cells
        }
    })
}

/// Cells implied by the config alone: one per alpha, with the configured
/// attack and defense settings.
pub fn config_cells(config: &ExperimentConfig) -> Vec<CellSpec> {
    let defense = config.defense.to_defense();
    config
        .alphas
        .iter()
        .map(|&alpha| CellSpec {
            alpha,
            attack: config.attack.is_some(),
            defense,
        })
        .collect()
}

/// Datasets shared by every run of a sweep: the train pool (raw images where
/// applicable, plus normalized features), the clean test set, and the
/// poisoned test set when an attack is configured.
#[derive(Debug)]
pub struct SweepData {
    pub arch: ModelArch,
    /// Normalized train pool; agent datasets are row subsets of this.
    pub train: Dataset,
    /// Raw train pool for image-backed kinds; the trojan is stamped on raw
    /// pixels, so the adversary poisons from here, not from `train`.
    pub train_images: Option<ImageSet>,
    pub clean_test: Dataset,
    /// Trojaned copies of all non-target-class test samples; present iff the
    /// config has an attack section.
    pub poisoned_test: Option<Dataset>,
    pub norm: Option<Normalization>,
}

/// Load or generate the corpus for a sweep. Generated corpora are seeded
/// from the master seed alone (not the run index), so all runs share them.
pub fn load_data(config: &ExperimentConfig) -> Result<SweepData> {
    config.validate()?;
    let gen_seed = derive_seed(config.master_seed, RUN_SHARED, NS_DATASET, 0);

    if let DatasetKind::Synthetic {
        num_classes,
        train_per_class,
        test_per_class,
        dim,
        separation,
    } = &config.dataset
    {
        // One draw so train and test share class means; samples are
        // class-major, so each class's block splits into train then test.
        let per_class = train_per_class + test_per_class;
        let all = synth_dataset(*num_classes, per_class, *dim, *separation, gen_seed)?;
        let mut train_idx = Vec::new();
        let mut test_idx = Vec::new();
        for c in 0..*num_classes {
            let base = c * per_class;
            train_idx.extend(base..base + train_per_class);
            test_idx.extend(base + train_per_class..base + per_class);
        }
        let train = all.subset(&train_idx)?;
        let clean_test = all.subset(&test_idx)?;
        let arch = config.arch.instantiate(train.feature_dim(), train.num_classes());
        return Ok(SweepData {
            arch,
            train,
            train_images: None,
            clean_test,
            poisoned_test: None,
            norm: None,
        });
    }

    let (mut train_images, mut test_images) = match &config.dataset {
        DatasetKind::FashionMnist {
            train_images,
            train_labels,
            test_images,
            test_labels,
        } => (
            load_idx(train_images, train_labels)?,
            load_idx(test_images, test_labels)?,
        ),
        DatasetKind::Cifar10 {
            train_files,
            test_file,
        } => (
            load_cifar_binary(train_files)?,
            load_cifar_binary(std::slice::from_ref(test_file))?,
        ),
        DatasetKind::SyntheticImages { config: c } => synth_image_corpus(c, gen_seed)?,
        DatasetKind::Synthetic { .. } => unreachable!("handled above"),
    };
    if let Some(n) = config.train_subset {
        let mut rng = rng_from(derive_seed(config.master_seed, RUN_SHARED, NS_DATASET, 1));
        train_images = class_balanced_subset(&train_images, n, &mut rng)?;
    }
    if let Some(n) = config.test_subset {
        let mut rng = rng_from(derive_seed(config.master_seed, RUN_SHARED, NS_DATASET, 2));
        test_images = class_balanced_subset(&test_images, n, &mut rng)?;
    }
    let (mean, std) = config.normalization;
    let norm = Normalization::uniform(mean, std, train_images.shape.channels)?;
    let train = normalize(&train_images, &norm)?;
    let clean_test = normalize(&test_images, &norm)?;
    let poisoned_test = match &config.attack {
        Some(attack) => Some(build_poisoned_test(&test_images, &attack.trojan, &norm)?),
        None => None,
    };
    let arch = config.arch.instantiate(train.feature_dim(), train.num_classes());
    Ok(SweepData {
        arch,
        train,
        train_images: Some(train_images),
        clean_test,
        poisoned_test,
        norm: Some(norm),
    })
}

/// The per-run seed recorded in result files. It is shared by every cell for
/// a given run index, so paired comparisons line up by seed column.
pub fn run_seed(master_seed: u64, run_index: u32) -> u64 {
    derive_seed(master_seed, run_index, NS_RUN, 0)
}

/// Assemble one run's federated dataset for one cell.
///
/// Clean cells Dirichlet-partition the whole train pool over all agents.
/// Attack cells first draw the adversary's samples uniformly (agent 0 gets
/// them trojaned and relabeled), then partition the complement over the
/// remaining agents. The adversary draw uses its own namespace, so honest
/// data placement is comparable across attack and clean cells.
pub fn build_run_datasets<'a>(
    config: &ExperimentConfig,
    data: &'a SweepData,
    cell: &CellSpec,
    run_index: u32,
) -> Result<FlDataset<'a>> {
    let seed = config.master_seed;
    let mut partition_rng = rng_from(derive_seed(seed, run_index, NS_PARTITION, 0));
    let pool_labels = data.train.labels();
    let mut agents: Vec<Dataset> = Vec::with_capacity(config.num_agents);
    if cell.attack {
        let attack = config.attack.as_ref().ok_or_else(|| {
            Error::config("attack cell in a sweep whose config has no [attack] section")
        })?;
        let images = data.train_images.as_ref().ok_or_else(|| {
            Error::config("attack cell needs raw images; vector datasets cannot carry the trojan")
        })?;
        let norm = data
            .norm
            .as_ref()
            .expect("image-backed sweep data always carries a normalization");
        let mut adv_rng = rng_from(derive_seed(seed, run_index, NS_ADVERSARY, 0));
        let adv = sample_adversary_dataset(images.len(), attack.adversary_samples, &mut adv_rng)?;
        agents.push(poison_dataset(images, &adv, &attack.trojan, norm)?);

        let mut taken = vec![false; images.len()];
        for &i in &adv {
            taken[i] = true;
        }
        let rest: Vec<usize> = (0..images.len()).filter(|&i| !taken[i]).collect();
        let rest_labels: Vec<usize> = rest.iter().map(|&i| pool_labels[i]).collect();
        let spec = dirichlet_partition(
            &rest_labels,
            config.num_agents - 1,
            cell.alpha,
            &mut partition_rng,
        )?;
        for assignment in &spec.assignments {
            let idx: Vec<usize> = assignment.iter().map(|&j| rest[j]).collect();
            agents.push(data.train.subset(&idx)?);
        }
    } else {
        let spec =
            dirichlet_partition(pool_labels, config.num_agents, cell.alpha, &mut partition_rng)?;
        for assignment in &spec.assignments {
            agents.push(data.train.subset(assignment)?);
        }
    }
    Ok(FlDataset {
        agents,
        clean_test: &data.clean_test,
        poisoned_test: if cell.attack {
            data.poisoned_test.as_ref()
        } else {
            None
        },
    })
}

/// Run every cell `config.num_runs` times. A failing cell is recorded in
/// `failures` and the rest of the sweep still completes; errors in the
/// config or the shared data load abort the whole sweep.
pub fn run_sweep(config: &ExperimentConfig, cells: &[CellSpec]) -> Result<SweepOutput> {
    config.validate()?;
    if cells.is_empty() {
        return Err(Error::config("sweep needs at least one cell"));
    }
    for cell in cells {
        if cell.attack && config.attack.is_none() {
            return Err(Error::config(
                "sweep has attack cells but the config has no [attack] section",
            ));
        }
        if !(cell.alpha > 0.0 && cell.alpha.is_finite()) {
            return Err(Error::config(format!(
                "cell alpha must be a positive real, got {}",
                cell.alpha
            )));
        }
    }
    let data = load_data(config)?;
    let mut rows = Vec::with_capacity(cells.len());
    let mut details = Vec::new();
    let mut failures = Vec::new();
    for (cell_idx, cell) in cells.iter().enumerate() {
        match run_cell(config, &data, cell, cell_idx) {
            Ok((row, cell_details)) => {
                rows.push(row);
                details.extend(cell_details);
            }
            Err(error) => failures.push(CellFailure { cell: *cell, error }),
        }
    }
    Ok(SweepOutput {
        rows,
        details,
        failures,
        num_classes: data.train.num_classes(),
    })
}

fn run_cell(
    config: &ExperimentConfig,
    data: &SweepData,
    cell: &CellSpec,
    cell_idx: usize,
) -> Result<(ResultRow, Vec<DetailRow>)> {
    let server = config.server(cell.defense);
    let mut details = Vec::new();
    let mut finals: Vec<(u64, MetricsRecord)> = Vec::with_capacity(config.num_runs);
    for run_index in 0..config.num_runs {
        let run_id = cell_idx * config.num_runs + run_index;
        let seed = run_seed(config.master_seed, run_index as u32);
        let fl_data = build_run_datasets(config, data, cell, run_index as u32)?;
        let history = run_training(
            &data.arch,
            &server,
            &fl_data,
            config.master_seed,
            run_index as u32,
        )?;
        for record in &history.records {
            details.push(DetailRow {
                run_id,
                seed,
                alpha: cell.alpha,
                defense: cell.defense,
                round: record.round,
                accuracy: record.metrics.accuracy,
                bias: record.metrics.bias,
                backdoor_accuracy: record.metrics.backdoor_accuracy,
                classwise: record.metrics.classwise.clone(),
            });
        }
        let last = history
            .final_metrics()
            .ok_or_else(|| Error::config("sweep needs at least one round to aggregate metrics"))?;
        finals.push((seed, last.clone()));
    }
    let summary = aggregate_runs(&finals, cell_digest(config, cell))?;
    Ok((
        ResultRow {
            alpha: cell.alpha,
            attack: cell.attack,
            defense: cell.defense,
            num_runs: config.num_runs,
            accuracy: summary.accuracy,
            bias: summary.bias,
            backdoor_accuracy: summary.backdoor_accuracy,
        },
        details,
    ))
}

fn cell_digest(config: &ExperimentConfig, cell: &CellSpec) -> u64 {
    let defense = match cell.defense {
        Defense::None => "none".to_string(),
        Defense::Rlr { theta } => format!("rlr:{theta}"),
    };
    let text = format!(
        "alpha={};attack={};defense={};seed={};runs={}",
        cell.alpha, cell.attack, defense, config.master_seed, config.num_runs
    );
    fnv1a64(text.as_bytes())
}
