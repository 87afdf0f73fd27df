use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{
    adam_step, backward_batch, forward_batch, AdamState, HiddenActivation, UnfoldingParams,
};
use crate::error::dim_err;
use crate::seed::Rng;
use crate::{Error, RMatrix, Result};

/// Mini-batch schedule: the learning rate is `learning_rate` for the first
/// `decay_after_epochs` epochs and `learning_rate · decay_factor` afterwards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSchedule {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub decay_after_epochs: usize,
    pub decay_factor: f64,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 64,
            learning_rate: 1e-3,
            decay_after_epochs: 20,
            decay_factor: 0.5,
        }
    }
}

impl TrainSchedule {
    /// Learning rate of the 1-based `epoch`.
    pub fn learning_rate_for_epoch(&self, epoch: usize) -> f64 {
        if epoch <= self.decay_after_epochs {
            self.learning_rate
        } else {
            self.learning_rate * self.decay_factor
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "epochs and batch_size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite())
            || !(self.decay_factor > 0.0)
        {
            return Err(Error::Config(
                "learning_rate and decay_factor must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Training samples sharing one Gram matrix; one sample per column.
#[derive(Clone, Copy, Debug)]
pub struct TrainingSet<'a> {
    pub gram: &'a RMatrix,
    pub stats: &'a RMatrix,
    pub truths: &'a RMatrix,
}

impl TrainingSet<'_> {
    pub fn len(&self) -> usize {
        self.stats.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Mean per-sample NMSE seen during the epoch (before each update).
    pub mean_nmse: f64,
}

fn gather(src: &RMatrix, idx: &[usize]) -> RMatrix {
    let mut out = RMatrix::zeros(src.nrows(), idx.len());
    for (j, &i) in idx.iter().enumerate() {
        out.set_column(j, &src.column(i));
    }
    out
}

/// Mini-batch Adam on the mean NMSE, reshuffling with `rng` every epoch.
/// The final batch of an epoch may be short.
pub fn train(
    mut params: UnfoldingParams,
    data: TrainingSet<'_>,
    schedule: &TrainSchedule,
    rng: &mut Rng,
) -> Result<(UnfoldingParams, Vec<EpochStats>)> {
    schedule.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let d = params.dim();
    if data.stats.nrows() != d
        || data.truths.shape() != data.stats.shape()
        || data.gram.shape() != (d, d)
    {
        return Err(dim_err("training set does not match the network dimension"));
    }
    if data.truths.column_iter().any(|c| c.norm_squared() == 0.0) {
        return Err(Error::ZeroNormTruth);
    }

    let mut state = AdamState::new(&params, schedule.learning_rate);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(schedule.epochs);

    for epoch in 1..=schedule.epochs {
        state.learning_rate = schedule.learning_rate_for_epoch(epoch);
        order.shuffle(rng);
        let mut loss_sum = 0.0;
        for idx in order.chunks(schedule.batch_size) {
            let stats = gather(data.stats, idx);
            let truths = gather(data.truths, idx);
            let cache = forward_batch(&params, HiddenActivation::Relu, data.gram, &stats, None)?;
            let (loss, grads) = backward_batch(&params, &cache, data.gram, &stats, &truths)?;
            if !loss.is_finite() || !grads.all_finite() {
                return Err(Error::Divergence {
                    method: "unfolding training",
                    iteration: epoch,
                });
            }
            loss_sum += loss * idx.len() as f64;
            adam_step(&mut params, &grads, &mut state)?;
        }
        history.push(EpochStats {
            epoch,
            learning_rate: state.learning_rate,
            mean_nmse: loss_sum / data.len() as f64,
        });
    }
    Ok((params, history))
}
