use std::io::Write;

use rand::seq::SliceRandom;

use super::model::{cross_entropy, Gradients, LayerState, SparseModel};
use super::optim::{update_step, Optimizer, TrainConfig};
use crate::datasets::Dataset;
use crate::rng::seeded;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-sample loss seen during the epoch, before each sample's update.
    pub train_loss: f64,
    pub val_acc: f64,
    pub test_acc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub records: Vec<EpochRecord>,
    /// Set when training stopped early on a non-finite loss or update.
    pub diverged: Option<String>,
}

impl History {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }
}

fn check_dataset(model: &SparseModel, ds: &Dataset) -> Result<()> {
    let sizes = model.layer_sizes();
    if ds.n_features() != sizes[0] {
        return Err(Error::Config(format!(
            "{} dataset has {} features, network input has {}",
            ds.split,
            ds.n_features(),
            sizes[0]
        )));
    }
    if ds.class_count() > sizes[sizes.len() - 1] {
        return Err(Error::Config(format!(
            "{} dataset has {} classes, network output has {}",
            ds.split,
            ds.class_count(),
            sizes[sizes.len() - 1]
        )));
    }
    Ok(())
}

/// Trains in place. Samples are reshuffled every epoch from `cfg.seed`; with batch size 1
/// the model is updated after every sample, otherwise gradients are averaged per batch.
pub fn train(
    model: &mut SparseModel,
    train_set: &Dataset,
    val: &Dataset,
    test: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<History> {
    train_with(model, train_set, val, test, cfg, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with(
    model: &mut SparseModel,
    train_set: &Dataset,
    val: &Dataset,
    test: Option<&Dataset>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<History> {
    cfg.validate()?;
    check_dataset(model, train_set)?;
    check_dataset(model, val)?;
    if let Some(t) = test {
        check_dataset(model, t)?;
    }
    let l = model.num_junctions();
    let mut opt = Optimizer::new(model, cfg);
    let mut rng = seeded(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut state = LayerState::new(model.layer_sizes());
    let mut grads = Gradients::zeros(model);
    let mut history = History::default();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            for &i in batch {
                model.forward_into(train_set.sample(i), &mut state)?;
                let loss = cross_entropy(&state.h[l], train_set.label(i));
                if !loss.is_finite() {
                    history.diverged =
                        Some(format!("epoch {epoch}: non-finite loss on sample {i}"));
                    return Ok(history);
                }
                total += loss;
                model.backward_into(&mut state, train_set.label(i), &mut grads, batch.len() > 1)?;
            }
            if batch.len() > 1 {
                grads.scale(1.0 / batch.len() as f64);
            }
            if let Err(e) = update_step(model, &grads, &mut opt) {
                history.diverged = Some(format!("epoch {epoch}: {e}"));
                return Ok(history);
            }
            if batch.len() > 1 {
                grads.fill_zero();
            }
        }
        let rec = EpochRecord {
            epoch,
            train_loss: total / train_set.len() as f64,
            val_acc: evaluate(model, val, 1)?,
            test_acc: test.map(|t| evaluate(model, t, 1)).transpose()?,
        };
        log::info!(
            "epoch {epoch}: loss {:.5} val {:.4}{}",
            rec.train_loss,
            rec.val_acc,
            rec.test_acc
                .map(|t| format!(" test {t:.4}"))
                .unwrap_or_default()
        );
        on_epoch(&rec);
        history.records.push(rec);
    }
    Ok(history)
}

/// Fraction of samples whose label ranks below `k` by output score. Equal scores rank
/// the lower class index first.
pub fn evaluate(model: &SparseModel, ds: &Dataset, k: usize) -> Result<f64> {
    check_dataset(model, ds)?;
    let n_out = model.layer_sizes()[model.num_junctions()];
    if k == 0 || k > n_out {
        return Err(Error::Config(format!(
            "top-k needs 1 <= k <= {n_out}, got {k}"
        )));
    }
    let mut state = LayerState::new(model.layer_sizes());
    let mut correct = 0usize;
    for i in 0..ds.len() {
        model.forward_into(ds.sample(i), &mut state)?;
        let out = state.output();
        let label = ds.label(i);
        let s = out[label];
        let rank = out
            .iter()
            .enumerate()
            .filter(|&(c, &v)| v > s || (v == s && c < label))
            .count();
        if rank < k {
            correct += 1;
        }
    }
    Ok(correct as f64 / ds.len() as f64)
}

pub fn write_history_csv(history: &History, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["epoch", "train_loss", "val_acc", "test_acc"])
        .map_err(csv_err)?;
    for r in &history.records {
        out.write_record([
            r.epoch.to_string(),
            r.train_loss.to_string(),
            r.val_acc.to_string(),
            r.test_acc.map(|t| t.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}
