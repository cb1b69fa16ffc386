use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Adam, AdamConfig, Mode, Model, Tensor};
use crate::{seed, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    /// Epochs without a strict improvement of the training loss before halting.
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            adam: AdamConfig::default(),
            batch_size: 16,
            patience: 10,
            max_epochs: 200,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patience == 0 || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("patience, batch size and max epochs must be positive".into()));
        }
        if !(self.adam.lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.adam.lr)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    /// Mean training loss of each completed epoch.
    pub loss: Vec<f64>,
    pub best_loss: f64,
    pub stopped_early: bool,
}

impl History {
    pub fn epochs(&self) -> usize {
        self.loss.len()
    }
}

fn check_data(model: &Model, inputs: &[Vec<f64>], labels: &[usize]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }
    if inputs.len() != labels.len() {
        return Err(Error::Data(format!("{} inputs but {} labels", inputs.len(), labels.len())));
    }
    let per = model.spec.input_len();
    if let Some(x) = inputs.iter().find(|x| x.len() != per) {
        return Err(Error::Data(format!("input has {} values, model expects {per}", x.len())));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= model.spec.n_classes) {
        return Err(Error::Data(format!("label {l} out of range for {} classes", model.spec.n_classes)));
    }
    Ok(())
}

fn batch_of(model: &Model, inputs: &[Vec<f64>], idx: &[usize]) -> Result<Tensor> {
    let s = &model.spec;
    let refs: Vec<&[f64]> = idx.iter().map(|&i| inputs[i].as_slice()).collect();
    Tensor::stack(&refs, s.in_channels, s.height, s.width)
}

/// Mini-batch Adam until the training loss has not improved for `patience`
/// epochs or `max_epochs` is reached. Returns the model as of the halt epoch.
pub fn train(mut model: Model, inputs: &[Vec<f64>], labels: &[usize], cfg: &TrainConfig) -> Result<(Model, History)> {
    cfg.validate()?;
    model.validate()?;
    check_data(&model, inputs, labels)?;
    let mut adam = Adam::new(&model.params, cfg.adam)?;
    let mut order_rng = seed::rng(seed::derive(cfg.seed, "train/shuffle"));
    let dropout_seed = seed::derive(cfg.seed, "train/dropout");
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut history = History {
        best_loss: f64::INFINITY,
        ..Default::default()
    };
    let mut stale = 0;
    for _ in 0..cfg.max_epochs {
        order.shuffle(&mut order_rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = batch_of(&model, inputs, chunk)?;
            let targets: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let (_, cache) = model.forward(&batch, Mode::Train, seed::mix(dropout_seed, adam.steps()))?;
            total += model.loss(&cache, &targets)? * chunk.len() as f64;
            let grads = model.backward(&cache, &targets)?;
            adam.step(model.params_mut(), &grads)?;
        }
        let loss = total / inputs.len() as f64;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("training loss diverged at epoch {}", history.epochs() + 1)));
        }
        history.loss.push(loss);
        if loss < history.best_loss {
            history.best_loss = loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                history.stopped_early = true;
                break;
            }
        }
    }
    Ok((model, history))
}

/// Argmax class per input; ties go to the lowest class index.
pub fn predict(model: &Model, inputs: &[Vec<f64>]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(inputs.len());
    let idx: Vec<usize> = (0..inputs.len()).collect();
    for chunk in idx.chunks(64) {
        let (logp, _) = model.forward(&batch_of(model, inputs, chunk)?, Mode::Eval, 0)?;
        for row in logp.data().chunks(model.spec.n_classes) {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            out.push(best);
        }
    }
    Ok(out)
}

pub fn evaluate(model: &Model, inputs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    check_data(model, inputs, labels)?;
    let hits = predict(model, inputs)?.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / inputs.len() as f64)
}

/// Contents of a `run.json`: the trained weights with their configuration and
/// loss history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub model: Model,
    pub train: TrainConfig,
    pub history: History,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_accuracy: Option<f64>,
}

impl RunFile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let run: RunFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("run file: {e}")))?;
        run.model.validate()?;
        Ok(run)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}
