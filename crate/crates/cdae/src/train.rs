use std::time::Instant;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use qmf_core::{MarginalSet, TwoChannelTensor};
use qmf_nn::{adam_step, AdamConfig, AdamState, Real, Tensor4};

use crate::checkpoint::{Checkpoint, TrainingMeta};
use crate::data::TrainingData;
use crate::error::{CdaeError, Result};
use crate::loss::{channels_from_matrix, matrix_from_channels, reconstruction_loss, LossTerms, LossVariant};
use crate::network::{Gradients, Network};
use crate::spec::NUM_PARAM_LAYERS;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub variant: LossVariant,
    /// One flag per parameterized layer; frozen layers are never updated.
    pub frozen: Vec<bool>,
    /// Emit a checkpoint event every this many epochs.
    pub checkpoint_every: Option<usize>,
    /// Recorded in the checkpoint when the weights came from a smaller model.
    pub transferred_from: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            batch_size: 100,
            epochs: 1,
            seed: 0,
            variant: LossVariant::Model1,
            frozen: vec![false; NUM_PARAM_LAYERS],
            checkpoint_every: None,
            transferred_from: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(CdaeError::InvalidConfig("batch size must be at least 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(CdaeError::InvalidConfig(format!("learning rate {} must be positive", self.lr)));
        }
        if self.frozen.len() != NUM_PARAM_LAYERS {
            return Err(CdaeError::InvalidConfig(format!(
                "freeze mask has {} entries, expected {NUM_PARAM_LAYERS}",
                self.frozen.len()
            )));
        }
        if self.checkpoint_every == Some(0) {
            return Err(CdaeError::InvalidConfig("checkpoint cadence must be positive".into()));
        }
        Ok(())
    }

    fn trainable(&self) -> Vec<bool> {
        self.frozen.iter().map(|f| !f).collect()
    }
}

/// Mean loss over one epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    pub mean_loss: f64,
    pub terms: LossTerms,
    pub seconds: f64,
}

pub enum TrainEvent<'a> {
    Epoch(&'a EpochStats),
    Checkpoint { epoch: usize, checkpoint: &'a Checkpoint },
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub loss_curve: Vec<EpochStats>,
}

/// Stacks two-channel samples into a `(B, 2, d, d)` tensor.
pub fn stack_inputs<T: Real>(inputs: &[&TwoChannelTensor]) -> Result<Tensor4<T>> {
    let Some(first) = inputs.first() else {
        return Err(CdaeError::Mismatch("empty batch".into()));
    };
    let d = first.side();
    let mut data = Vec::with_capacity(inputs.len() * 2 * d * d);
    for x in inputs {
        if x.side() != d {
            return Err(CdaeError::Mismatch(format!("mixed sample sides {d} and {}", x.side())));
        }
        data.extend(x.as_slice().iter().map(|&v| T::of(v)));
    }
    Ok(Tensor4::from_vec([inputs.len(), 2, d, d], data)?)
}

/// Mean loss over a batch and the parameter gradients of the layers marked
/// in `wanted`.
pub fn batch_loss_and_grad<T: Real>(
    net: &Network<T>,
    x: &Tensor4<T>,
    targets: &[&MarginalSet],
    variant: LossVariant,
    wanted: &[bool],
) -> Result<(LossTerms, Gradients<T>)> {
    let batch = x.batch();
    if targets.len() != batch {
        return Err(CdaeError::Mismatch(format!("{} target sets for a batch of {batch}", targets.len())));
    }
    let cache = net.forward_cached(x)?;
    let out = cache.output();
    let d = net.spec().side();
    let scale = 1.0 / batch as f64;
    let mut grad = Tensor4::zeros(out.shape());
    let mut terms = LossTerms::default();
    let per = 2 * d * d;
    for (b, t) in targets.iter().enumerate() {
        let z = matrix_from_channels(out.item(b), d);
        let (lt, gz) = reconstruction_loss(&z, t, variant)?;
        terms.add(&lt);
        channels_from_matrix(&gz, scale, &mut grad.as_mut_slice()[b * per..(b + 1) * per]);
    }
    let grads = net.backward(&cache, &grad, wanted)?;
    Ok((terms.scaled(scale), grads))
}

/// Mean loss of `net` over a whole data set, without gradients.
pub fn evaluate_loss<D: TrainingData + ?Sized>(
    net: &Network<f32>,
    data: &D,
    variant: LossVariant,
    batch_size: usize,
) -> Result<LossTerms> {
    let mut sum = LossTerms::default();
    let idx: Vec<usize> = (0..data.len()).collect();
    for chunk in idx.chunks(batch_size.max(1)) {
        let inputs: Vec<&TwoChannelTensor> = chunk.iter().map(|&i| data.input(i)).collect();
        let x = stack_inputs::<f32>(&inputs)?;
        let out = net.forward(&x)?;
        for (b, &i) in chunk.iter().enumerate() {
            let z = matrix_from_channels(out.item(b), net.spec().side());
            sum.add(&reconstruction_loss(&z, data.targets(i), variant)?.0);
        }
    }
    Ok(sum.scaled(1.0 / data.len().max(1) as f64))
}

/// Adam training with seeded per-epoch shuffling. Deterministic for a fixed
/// seed: the loop is single-threaded with a fixed reduction order.
pub fn train<D: TrainingData + ?Sized>(
    net: &mut Network<f32>,
    data: &D,
    cfg: &TrainConfig,
    sink: &mut dyn FnMut(TrainEvent<'_>),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(CdaeError::InvalidConfig("empty training set".into()));
    }
    if data.num_qubits() != net.spec().num_qubits {
        return Err(CdaeError::Mismatch(format!(
            "data set has {} qubits, network expects {}",
            data.num_qubits(),
            net.spec().num_qubits
        )));
    }
    let adam = AdamConfig { lr: cfg.lr, ..AdamConfig::default() };
    let trainable = cfg.trainable();
    let mut states: Vec<(AdamState<f32>, AdamState<f32>)> =
        net.params().iter().map(|p| (AdamState::new(p.weight.len()), AdamState::new(p.bias.len()))).collect();
    let meta = |epochs: usize, final_loss: Option<f64>| TrainingMeta {
        epochs,
        lr: cfg.lr,
        batch_size: cfg.batch_size,
        seed: cfg.seed,
        samples: data.len(),
        dataset_digest: data.digest(),
        frozen: cfg.frozen.clone(),
        transferred_from: cfg.transferred_from,
        final_loss,
    };

    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = Vec::with_capacity(data.len());
    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64);
        order.clear();
        order.extend(0..data.len());
        order.shuffle(&mut rng);

        let mut sum = LossTerms::default();
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let inputs: Vec<&TwoChannelTensor> = chunk.iter().map(|&i| data.input(i)).collect();
            let targets: Vec<&MarginalSet> = chunk.iter().map(|&i| data.targets(i)).collect();
            let x = stack_inputs::<f32>(&inputs)?;
            let (terms, grads) = batch_loss_and_grad(net, &x, &targets, cfg.variant, &trainable)?;
            let loss = terms.total();
            if !loss.is_finite() {
                return Err(CdaeError::NonFinite { epoch, batch: bi, loss });
            }
            sum.add(&terms.scaled(chunk.len() as f64));
            for ((p, g), (sw, sb)) in net.params_mut().iter_mut().zip(grads.layers).zip(states.iter_mut()) {
                if let Some(g) = g {
                    adam_step(&mut p.weight, &g.weight, sw, &adam);
                    adam_step(&mut p.bias, &g.bias, sb, &adam);
                }
            }
        }
        let terms = sum.scaled(1.0 / data.len() as f64);
        let stats = EpochStats { epoch, mean_loss: terms.total(), terms, seconds: start.elapsed().as_secs_f64() };
        info!(
            "epoch {epoch}/{}: loss {:.6e} (re {:.3e}, im {:.3e}, marginal {:.3e}) in {:.1}s",
            cfg.epochs, stats.mean_loss, terms.unitary_real, terms.unitary_imag, terms.marginal, stats.seconds
        );
        sink(TrainEvent::Epoch(&stats));
        curve.push(stats);
        if cfg.checkpoint_every.is_some_and(|k| epoch % k == 0) && epoch != cfg.epochs {
            let ck = Checkpoint::new(net.clone(), cfg.variant, Some(meta(epoch, curve.last().map(|s| s.mean_loss))));
            sink(TrainEvent::Checkpoint { epoch, checkpoint: &ck });
        }
    }
    let checkpoint =
        Checkpoint::new(net.clone(), cfg.variant, Some(meta(cfg.epochs, curve.last().map(|s| s.mean_loss))));
    if cfg.checkpoint_every.is_some() {
        sink(TrainEvent::Checkpoint { epoch: cfg.epochs, checkpoint: &checkpoint });
    }
    Ok(TrainOutcome { checkpoint, loss_curve: curve })
}
