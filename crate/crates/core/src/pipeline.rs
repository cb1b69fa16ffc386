//! End-to-end runs: load → quantise → generate filters → preprocess → train →
//! evaluate, with a manifest that pins every seed and artifact hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circuit::{
    henderson_processing, higher_order_encoder, integrated_circuit, rotational_encoder, rotational_henderson,
    threshold_encoder, CircuitSpec, Family, MappingKind,
};
use crate::data::{load_dataset, synth_dataset, Dataset, Format, LoadOptions, Split, SynthConfig};
use crate::layer::{preprocess_dataset, FeatureSet, LayerConfig, Padding, PreprocessReport, Provenance};
use crate::nn::{evaluate, train, AdamConfig, Model, ModelSpec, RunFile, TrainConfig};
use crate::quantize::{quantize_all, MemoTable, Rounding};
use crate::sim::DecodeMode;
use crate::{seed, Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    File {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<Format>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<PathBuf>,
        #[serde(default = "default_divisor")]
        csv_divisor: f64,
    },
    Synthetic {
        n_classes: usize,
        count: usize,
        #[serde(default = "default_size")]
        size: usize,
    },
}

fn default_divisor() -> f64 {
    255.0
}

fn default_size() -> usize {
    30
}

impl DataSource {
    fn load(&self, split: Split, seed: u64, n_classes: usize) -> Result<Dataset> {
        match self {
            DataSource::File {
                path,
                format,
                labels,
                csv_divisor,
            } => load_dataset(
                path,
                &LoadOptions {
                    format: *format,
                    labels: labels.clone(),
                    n_classes: Some(n_classes),
                    csv_divisor: *csv_divisor,
                    split,
                },
            ),
            DataSource::Synthetic { n_classes, count, size } => synth_dataset(
                &SynthConfig {
                    n_classes: *n_classes,
                    count: *count,
                    size: *size,
                    seed,
                },
                split,
            ),
        }
    }

    fn check(&self) -> Result<()> {
        if let DataSource::File { path, labels, .. } = self {
            for p in std::iter::once(path).chain(labels) {
                if !p.exists() {
                    return Err(Error::Config(format!("dataset file {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }
}

/// The quanvolutional layer of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSettings {
    pub family: Family,
    pub k: usize,
    #[serde(default = "default_filters")]
    pub filters: usize,
    /// Integrated family only.
    #[serde(default = "default_qubits")]
    pub n_qubits: usize,
    /// Integrated family only: gate count `L`.
    #[serde(default)]
    pub gates: usize,
    #[serde(default)]
    pub alpha: MappingKind,
    /// Henderson families only: connection probability.
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub decode: DecodeMode,
    #[serde(default)]
    pub padding: Padding,
}

fn default_filters() -> usize {
    8
}

fn default_qubits() -> usize {
    4
}

impl LayerSettings {
    pub fn build_filter(&self, seed: u64) -> Result<CircuitSpec> {
        match self.family {
            Family::Rotational => rotational_encoder(self.k),
            Family::Threshold => threshold_encoder(self.k),
            Family::HigherOrder => higher_order_encoder(self.k),
            Family::HendersonProcessing => henderson_processing(self.k, self.p, seed),
            Family::RotationalHenderson => rotational_henderson(self.k, self.p, seed),
            Family::Integrated => integrated_circuit(self.k, self.n_qubits, self.gates, self.alpha, seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// Defaults to 10, or 100 for RNDLIN layers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    #[serde(default = "default_epochs")]
    pub max_epochs: usize,
    #[serde(default)]
    pub output_relu: bool,
}

fn default_lr() -> f64 {
    3e-4
}

fn default_batch() -> usize {
    16
}

fn default_epochs() -> usize {
    100
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            lr: default_lr(),
            batch_size: default_batch(),
            patience: None,
            max_epochs: default_epochs(),
            output_relu: false,
        }
    }
}

/// A complete run description, loadable from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub train: DataSource,
    pub test: DataSource,
    pub n_classes: usize,
    #[serde(default = "default_image_size")]
    pub image_size: [usize; 2],
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub rounding: Rounding,
    /// `None` runs the classical CNN baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<LayerSettings>,
    #[serde(default)]
    pub training: TrainSettings,
}

fn default_image_size() -> [usize; 2] {
    [30, 30]
}

fn default_levels() -> usize {
    50
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("run config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.check()?;
        self.test.check()?;
        if self.n_classes < 2 {
            return Err(Error::Config("n_classes must be at least 2".into()));
        }
        if self.layer.is_some() && !(2..=crate::quantize::MAX_LEVELS).contains(&self.levels) {
            return Err(Error::Config(format!("levels must be in 2..=65536, got {}", self.levels)));
        }
        if let Some(l) = &self.layer {
            if l.filters == 0 {
                return Err(Error::Config("a quanvolutional layer needs at least one filter".into()));
            }
            l.build_filter(0).map_err(|e| Error::Config(e.to_string()))?;
        }
        self.train_config().validate()
    }

    pub fn train_config(&self) -> TrainConfig {
        let rndlin = self
            .layer
            .as_ref()
            .is_some_and(|l| l.family == Family::Integrated && l.alpha == MappingKind::RndLin);
        TrainConfig {
            adam: AdamConfig {
                lr: self.training.lr,
                ..AdamConfig::default()
            },
            batch_size: self.training.batch_size,
            patience: self.training.patience.unwrap_or(if rndlin { 100 } else { 10 }),
            max_epochs: self.training.max_epochs,
            seed: seed::derive(self.seed, "train"),
        }
    }

    pub fn seeds(&self) -> Seeds {
        let filters = self.layer.as_ref().map_or(0, |l| l.filters);
        Seeds {
            master: self.seed,
            data: seed::derive(self.seed, "data"),
            filters: (0..filters).map(|i| seed::derive(self.seed, &format!("filter/{i}"))).collect(),
            decode: seed::derive(self.seed, "decode"),
            model_init: seed::derive(self.seed, "model/init"),
            train: seed::derive(self.seed, "train"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    pub data: u64,
    pub filters: Vec<u64>,
    pub decode: u64,
    pub model_init: u64,
    pub train: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, with `/` separators.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub epochs: usize,
    pub final_loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocess: Option<PreprocessCounts>,
}

/// Deterministic part of the preprocessing report (no timings).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessCounts {
    pub total_patches: u64,
    pub unique_patches: u64,
    pub evaluator_calls: u64,
    pub lookups: u64,
    pub hits: u64,
    pub hit_rate: f64,
}

/// Everything needed to reproduce a run byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub config: RunConfig,
    pub seeds: Seeds,
    pub artifacts: Vec<Artifact>,
    pub results: Results,
}

impl Manifest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Config(format!("manifest: {e}")))?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Config(format!("unsupported manifest version {}", m.version)));
        }
        Ok(m)
    }

    pub fn artifact(&self, path: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.path == path)
    }

    /// Errors unless `other` reproduced every artifact hash of `self`.
    pub fn check_reproduced(&self, other: &Manifest) -> Result<()> {
        for a in &self.artifacts {
            match other.artifact(&a.path) {
                Some(b) if b.sha256 == a.sha256 => {}
                Some(_) => return Err(Error::Numeric(format!("artifact {} differs on rerun", a.path))),
                None => return Err(Error::Numeric(format!("artifact {} missing on rerun", a.path))),
            }
        }
        if other.artifacts.len() != self.artifacts.len() {
            return Err(Error::Numeric("rerun produced a different artifact set".into()));
        }
        Ok(())
    }
}

/// Outcome of [`run_pipeline`], including timings that the manifest omits.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub preprocess: Option<PreprocessReport>,
}

struct Writer<'a> {
    dir: &'a Path,
    artifacts: Vec<Artifact>,
}

impl Writer<'_> {
    fn put(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.artifacts.push(Artifact {
            path: rel.to_string(),
            sha256: seed::sha256_hex(bytes),
        });
        Ok(())
    }
}

fn flatten(images: &[crate::image::Image]) -> Vec<Vec<f64>> {
    images.iter().map(|i| i.data.clone()).collect()
}

/// Runs every stage and writes artifacts plus `manifest.json` into `out_dir`.
pub fn run_pipeline(cfg: &RunConfig, out_dir: impl AsRef<Path>) -> Result<RunOutcome> {
    let out_dir = out_dir.as_ref();
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let seeds = cfg.seeds();
    let mut w = Writer {
        dir: out_dir,
        artifacts: Vec::new(),
    };

    let [h, wd] = cfg.image_size;
    let load = |src: &DataSource, split| -> Result<Dataset> {
        let ds = src.load(split, seeds.data, cfg.n_classes)?;
        ds.check_labels(cfg.n_classes)?;
        if ds.is_empty() {
            return Err(Error::Data(format!("dataset `{}` is empty", ds.name)));
        }
        ds.normalized(Some((h, wd)))
    };
    let train_ds = load(&cfg.train, Split::Train).map_err(|e| e.in_stage("load"))?;
    let test_ds = load(&cfg.test, Split::Test).map_err(|e| e.in_stage("load"))?;

    let (train_x, test_x, in_channels, preprocess) = match &cfg.layer {
        None => (flatten(&train_ds.images), flatten(&test_ds.images), 1, None),
        Some(layer) => {
            let filters = seeds
                .filters
                .iter()
                .map(|&s| layer.build_filter(s))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.in_stage("filters"))?;
            for (i, f) in filters.iter().enumerate() {
                w.put(&format!("filters/f{i}.json"), f.to_json().as_bytes())?;
            }

            let quantize = |ds: &Dataset| quantize_all(&ds.images, cfg.levels, cfg.rounding);
            let train_q = quantize(&train_ds).map_err(|e| e.in_stage("quantize"))?;
            let test_q = quantize(&test_ds).map_err(|e| e.in_stage("quantize"))?;

            let mut lc = LayerConfig::new(filters, layer.decode, seeds.decode).map_err(|e| e.in_stage("preprocess"))?;
            lc.padding = layer.padding;
            let memo = MemoTable::new(layer.k, cfg.levels)?;
            let (train_maps, mut report) =
                preprocess_dataset(&train_q, &lc, &memo).map_err(|e| e.in_stage("preprocess"))?;
            let (test_maps, test_report) =
                preprocess_dataset(&test_q, &lc, &memo).map_err(|e| e.in_stage("preprocess"))?;
            report.images += test_report.images;
            report.total_patches += test_report.total_patches;
            report.evaluator_calls += test_report.evaluator_calls;
            report.lookups += test_report.lookups;
            report.hits += test_report.hits;
            report.wall_seconds += test_report.wall_seconds;
            report.unique_patches = memo.len(&lc.filter_ids()[0]) as u64;

            let provenance = Provenance {
                filter_hashes: lc.filter_ids().to_vec(),
                levels: cfg.levels,
                seed: seeds.decode,
                decode: layer.decode,
            };
            let channels = lc.channels();
            let to_x = |maps: &[crate::layer::FeatureMap]| maps.iter().map(|m| m.data.clone()).collect::<Vec<_>>();
            let (train_x, test_x) = (to_x(&train_maps), to_x(&test_maps));
            for (name, maps, labels) in [
                ("features/train.bin", train_maps, &train_ds.labels),
                ("features/test.bin", test_maps, &test_ds.labels),
            ] {
                let set = FeatureSet {
                    maps,
                    labels: Some(labels.clone()),
                    provenance: Some(provenance.clone()),
                };
                w.put(name, &set.to_bytes()?)?;
            }
            w.put("memo.bin", &memo.to_bytes())?;
            (train_x, test_x, channels, Some(report))
        }
    };

    let (oh, ow) = match &cfg.layer {
        Some(l) => (l.padding.positions(h, l.k), l.padding.positions(wd, l.k)),
        None => (h, wd),
    };
    let mut spec = ModelSpec::new(in_channels, cfg.n_classes).with_input(oh, ow);
    spec.output_relu = cfg.training.output_relu;
    let train_cfg = cfg.train_config();
    let model = Model::init(spec, seeds.model_init).map_err(|e| e.in_stage("train"))?;
    let (model, history) = train(model, &train_x, &train_ds.labels, &train_cfg).map_err(|e| e.in_stage("train"))?;
    let train_accuracy = evaluate(&model, &train_x, &train_ds.labels).map_err(|e| e.in_stage("eval"))?;
    let test_accuracy = evaluate(&model, &test_x, &test_ds.labels).map_err(|e| e.in_stage("eval"))?;

    let results = Results {
        train_accuracy,
        test_accuracy,
        epochs: history.epochs(),
        final_loss: history.loss.last().copied().unwrap_or(f64::NAN),
        preprocess: preprocess.as_ref().map(|r| PreprocessCounts {
            total_patches: r.total_patches,
            unique_patches: r.unique_patches,
            evaluator_calls: r.evaluator_calls,
            lookups: r.lookups,
            hits: r.hits,
            hit_rate: r.hit_rate(),
        }),
    };
    let run = RunFile {
        model,
        train: train_cfg,
        history,
        test_accuracy: Some(test_accuracy),
    };
    w.put("model.json", run.to_json()?.as_bytes())?;

    let manifest = Manifest {
        version: MANIFEST_VERSION,
        config: cfg.clone(),
        seeds,
        artifacts: w.artifacts,
        results,
    };
    let path = out_dir.join("manifest.json");
    std::fs::write(&path, manifest.to_json()?).map_err(|e| Error::io(&path, e))?;
    Ok(RunOutcome { manifest, preprocess })
}

/// Reruns the configuration stored in a manifest and checks every artifact hash.
pub fn rerun(manifest: &Manifest, out_dir: impl AsRef<Path>) -> Result<RunOutcome> {
    let outcome = run_pipeline(&manifest.config, out_dir)?;
    manifest.check_reproduced(&outcome.manifest)?;
    Ok(outcome)
}
