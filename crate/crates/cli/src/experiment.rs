use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use cil_core::cil::{incremental_train, mean_activation, ExpansionBuffer, IncrementalSettings, OversamplingMode};
use cil_core::data::{generate_synthetic, ClassId, DatasetFormat, EmbeddingDataset, TaskSplit};
use cil_core::metrics::{task_accuracy, MetricsReport, TaskTimer};
use cil_core::{Classifier, TrainStats};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::{DatasetSource, RunConfig, SeedStreams};
use crate::error::{CliError, CliResult};
use crate::model_dump;

/// Train and test embeddings for one seed.
#[derive(Clone, Debug)]
pub struct DataPair {
    pub train: EmbeddingDataset,
    pub test: EmbeddingDataset,
}

pub fn load_data(source: &DatasetSource, streams: SeedStreams) -> CliResult<DataPair> {
    match source {
        DatasetSource::Synthetic { .. } => {
            let spec = source.synthetic_spec(streams.data).expect("synthetic source");
            let (train, test) = generate_synthetic(&spec)?;
            Ok(DataPair { train, test })
        }
        DatasetSource::Files { train, test, format } => {
            let load = |path: &PathBuf| {
                let fmt = format.unwrap_or_else(|| DatasetFormat::from_path(path));
                EmbeddingDataset::load(path, fmt).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
            };
            let pair = DataPair { train: load(train)?, test: load(test)? };
            if pair.train.dim() != pair.test.dim() {
                return Err(CliError::Data(format!(
                    "train dimension {} differs from test dimension {}",
                    pair.train.dim(),
                    pair.test.dim()
                )));
            }
            Ok(pair)
        }
    }
}

/// Everything produced by one seed of one configuration.
#[derive(Debug)]
pub struct SeedRun {
    pub report: MetricsReport,
    pub classifier: Classifier,
    pub split: TaskSplit,
    /// Mean output of the second task's neurons on the first task's test
    /// inputs, measured right after the second task. `None` with one task.
    pub second_task_activation_on_first: Option<f64>,
}

pub fn run_seed(cfg: &RunConfig, seed: u64) -> CliResult<SeedRun> {
    cfg.validate()?;
    let streams = SeedStreams::derive(seed);
    let data = load_data(&cfg.dataset, streams)?;
    run_on_data(cfg, seed, streams, &data)
}

/// Runs the incremental loop on already loaded data.
pub fn run_on_data(cfg: &RunConfig, seed: u64, streams: SeedStreams, data: &DataPair) -> CliResult<SeedRun> {
    let classes: Vec<ClassId> = data.train.classes().collect();
    let split = TaskSplit::plan(&classes, cfg.increment, streams.split, cfg.max_classes)?;
    let train_tasks = split.partition(&data.train);
    let test_tasks = split.partition(&data.test);
    let groups = split.groups();

    let dim = data.train.dim();
    let mut classifier = Classifier::new(dim, cfg.lambda, cfg.activation())?;
    let mut buffer = ExpansionBuffer::new(dim, cfg.effective_buffer(), streams.buffer)?;
    let settings = IncrementalSettings {
        oversampling: if cfg.disable_oversampling { OversamplingMode::Off } else { OversamplingMode::Temporal },
    };

    let mut timer = TaskTimer::new();
    let mut seen_test = EmbeddingDataset::new(dim)?;
    let mut accuracies = Vec::with_capacity(train_tasks.len());
    let mut classes_seen = Vec::with_capacity(train_tasks.len());
    let mut operations = TrainStats::default();
    let mut calibration = None;

    for (k, task) in train_tasks.iter().enumerate() {
        let outcome = timer.time_task(|| incremental_train(task, &mut classifier, &mut buffer, &settings))?;
        operations += outcome.stats;
        seen_test.extend_from(&test_tasks[k])?;

        let cumulative: Vec<ClassId> = groups[..=k].iter().flatten().copied().collect();
        let mut present: Vec<ClassId> = classifier.classes().collect();
        present.sort_unstable();
        assert_eq!(present, cumulative, "classifier must cover exactly the classes seen so far");
        if seen_test.is_empty() {
            return Err(CliError::Data(format!("no test samples for the classes seen up to task {}", k + 1)));
        }
        assert!(seen_test.classes().all(|c| cumulative.binary_search(&c).is_ok()));

        let prediction = classifier.predict(&seen_test.to_matrix::<f64>())?;
        accuracies.push(task_accuracy(&prediction.labels, seen_test.labels())?);
        classes_seen.push(cumulative.len());

        if k == 1 && !test_tasks[0].is_empty() {
            let x: DMatrix<f64> = test_tasks[0].to_matrix();
            calibration = Some(mean_activation(&classifier, &groups[1], &x)?);
        }
    }

    let report = MetricsReport::new(
        seed,
        accuracies,
        timer.per_task_ms(),
        classes_seen,
        buffer.bytes(),
        operations,
        cfg.echo(),
    )?;
    Ok(SeedRun { report, classifier, split, second_task_activation_on_first: calibration })
}

/// Multi-seed digest written next to the per-seed reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub average_accuracy: Vec<f64>,
    pub final_accuracy: Vec<f64>,
    pub mean_average_accuracy: f64,
    pub mean_final_accuracy: f64,
}

impl RunSummary {
    pub fn new(config_hash: String, reports: &[MetricsReport]) -> Self {
        let avg: Vec<f64> = reports.iter().map(|r| r.average_accuracy).collect();
        let fin: Vec<f64> = reports.iter().map(|r| r.final_accuracy).collect();
        Self {
            config_hash,
            seeds: reports.iter().map(|r| r.seed).collect(),
            mean_average_accuracy: mean(&avg),
            mean_final_accuracy: mean(&fin),
            average_accuracy: avg,
            final_accuracy: fin,
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn report_json_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("report-seed-{seed}.json"))
}

pub fn report_csv_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("report-seed-{seed}.csv"))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::output(&path.display().to_string(), e))
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::output(&dir.display().to_string(), e))
}

/// Trains every configured seed and writes `report-seed-<s>.{json,csv}`,
/// plus `summary.json` for multi-seed runs and optional model dumps.
pub fn cmd_train(cfg: &RunConfig, dump_model: bool) -> CliResult<Vec<MetricsReport>> {
    cfg.validate()?;
    ensure_dir(&cfg.output_dir)?;
    let mut reports = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let run = run_seed(cfg, seed)?;
        write_file(&report_json_path(&cfg.output_dir, seed), run.report.to_json().as_bytes())?;
        let mut csv = Vec::new();
        run.report.write_csv(&mut csv).expect("writing to memory");
        write_file(&report_csv_path(&cfg.output_dir, seed), &csv)?;
        if dump_model {
            let path = cfg.output_dir.join(format!("model-seed-{seed}.bin"));
            model_dump::save(&run.classifier, &path)?;
        }
        reports.push(run.report);
    }
    if reports.len() > 1 {
        let summary = RunSummary::new(cfg.hash(), &reports);
        let mut text = serde_json::to_string_pretty(&summary).expect("summary serialises");
        text.push('\n');
        write_file(&cfg.output_dir.join("summary.json"), text.as_bytes())?;
    }
    Ok(reports)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Full,
    NoOversampling,
    NoBuffer,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Full, Variant::NoOversampling, Variant::NoBuffer];

    pub fn apply(self, cfg: &RunConfig) -> RunConfig {
        let mut out = cfg.clone();
        match self {
            Variant::Full => {
                out.disable_buffer = false;
                out.disable_oversampling = false;
            }
            Variant::NoOversampling => {
                out.disable_buffer = false;
                out.disable_oversampling = true;
            }
            Variant::NoBuffer => {
                out.disable_buffer = true;
                out.disable_oversampling = false;
            }
        }
        out
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoOversampling => "no-oversampling",
            Variant::NoBuffer => "no-buffer",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub variant: Variant,
    /// `(seed, Ā, A_K)` per seed.
    pub per_seed: Vec<(u64, f64, f64)>,
    pub mean_average: f64,
    pub mean_final: f64,
}

/// The three-variant comparison. Variants share data, split and buffer
/// seeds so they differ only in the ablated component.
#[derive(Clone, Debug, PartialEq)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn row(&self, variant: Variant) -> &AblationRow {
        self.rows.iter().find(|r| r.variant == variant).expect("every variant is present")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,average_accuracy,final_accuracy\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.variant, r.mean_average, r.mean_final));
        }
        out
    }

    pub fn seeds_csv(&self) -> String {
        let mut out = String::from("variant,seed,average_accuracy,final_accuracy\n");
        for r in &self.rows {
            for (seed, avg, fin) in &r.per_seed {
                out.push_str(&format!("{},{seed},{avg},{fin}\n", r.variant));
            }
        }
        out
    }

    pub fn render(&self) -> String {
        let mut out = format!("{:<18}{:>10}{:>10}\n", "variant", "avg acc", "final acc");
        for r in &self.rows {
            out.push_str(&format!(
                "{:<18}{:>9.2}%{:>9.2}%\n",
                r.variant.name(),
                100.0 * r.mean_average,
                100.0 * r.mean_final
            ));
        }
        out
    }
}

pub fn ablation_table(cfg: &RunConfig) -> CliResult<AblationTable> {
    cfg.validate()?;
    let mut per_variant: Vec<Vec<(u64, f64, f64)>> = vec![Vec::new(); Variant::ALL.len()];
    for &seed in &cfg.seeds {
        let streams = SeedStreams::derive(seed);
        let data = load_data(&cfg.dataset, streams)?;
        for (slot, variant) in per_variant.iter_mut().zip(Variant::ALL) {
            let run = run_on_data(&variant.apply(cfg), seed, streams, &data)?;
            slot.push((seed, run.report.average_accuracy, run.report.final_accuracy));
        }
    }
    let rows = Variant::ALL
        .into_iter()
        .zip(per_variant)
        .map(|(variant, per_seed)| {
            let avg: Vec<f64> = per_seed.iter().map(|r| r.1).collect();
            let fin: Vec<f64> = per_seed.iter().map(|r| r.2).collect();
            AblationRow { variant, mean_average: mean(&avg), mean_final: mean(&fin), per_seed }
        })
        .collect();
    Ok(AblationTable { rows })
}

/// Runs the ablation and writes `ablation.csv` and `ablation-seeds.csv`.
pub fn cmd_ablate(cfg: &RunConfig) -> CliResult<AblationTable> {
    let table = ablation_table(cfg)?;
    ensure_dir(&cfg.output_dir)?;
    write_file(&cfg.output_dir.join("ablation.csv"), table.to_csv().as_bytes())?;
    write_file(&cfg.output_dir.join("ablation-seeds.csv"), table.seeds_csv().as_bytes())?;
    Ok(table)
}
