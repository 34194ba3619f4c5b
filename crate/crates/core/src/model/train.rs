//! Mini-batch SGD training and fine-tuning.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::layers::optim::{lr_schedule, OptimizerConfig};
use crate::model::checkpoint::Checkpoint;
use crate::model::net::{ActionNet, LossBreakdown, Target};
use crate::rng;
use crate::tensor::Tensor;

/// Random-access training data. `sample(i)` returns one clip of shape
/// `(C, T, H, W)` and its supervision.
pub trait SampleSource {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn sample(&self, index: usize) -> Result<(Tensor, Target)>;
}

/// One optimizer step, as reported to the observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// Zero-based index of the step just taken.
    pub iteration: usize,
    pub lr: f64,
    pub loss: LossBreakdown,
}

impl StepRecord {
    pub const CSV_HEADER: &'static str = "iteration,lr,l_cat,l_h1,l_h2,l_bbox,total";

    pub fn csv_line(&self) -> String {
        let l = &self.loss;
        format!(
            "{},{:e},{:.9},{:.9},{:.9},{:.9},{:.9}",
            self.iteration, self.lr, l.cat, l.h1, l.h2, l.bbox, l.total
        )
    }
}

/// Hooks invoked during training. Both default to doing nothing.
pub trait TrainObserver {
    fn on_step(&mut self, _record: &StepRecord) -> Result<()> {
        Ok(())
    }

    fn on_checkpoint(&mut self, _checkpoint: &Checkpoint) -> Result<()> {
        Ok(())
    }
}

impl TrainObserver for () {}

/// Collects every step record in memory.
#[derive(Debug, Default)]
pub struct LossLog(pub Vec<StepRecord>);

impl TrainObserver for LossLog {
    fn on_step(&mut self, record: &StepRecord) -> Result<()> {
        self.0.push(*record);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    /// Emit a checkpoint every this many steps (and always at the end).
    pub checkpoint_every: Option<usize>,
}

/// Indices of the samples in the batch used at `iteration`.
///
/// The data is visited epoch by epoch in a seeded permutation; the batch is
/// a pure function of the iteration number, so a resumed run sees exactly
/// the batches an uninterrupted one would.
pub fn batch_indices(len: usize, batch_size: usize, seed: u64, iteration: usize) -> Vec<usize> {
    let start = iteration * batch_size;
    let mut cached_epoch = usize::MAX;
    let mut perm: Vec<usize> = Vec::new();
    (start..start + batch_size)
        .map(|pos| {
            let epoch = pos / len;
            if epoch != cached_epoch {
                perm = (0..len).collect();
                perm.shuffle(&mut rng::stream(seed, rng::stream_id("epoch", epoch as u64)));
                cached_epoch = epoch;
            }
            perm[pos % len]
        })
        .collect()
}

/// Stacks samples into an `(N, C, T, H, W)` batch.
pub fn assemble_batch(data: &dyn SampleSource, indices: &[usize]) -> Result<(Tensor, Vec<Target>)> {
    let mut values = Vec::new();
    let mut targets = Vec::with_capacity(indices.len());
    let mut dims: Option<Vec<usize>> = None;
    for &i in indices {
        let (clip, target) = data.sample(i)?;
        match &dims {
            None => dims = Some(clip.dims().to_vec()),
            Some(d) if d != clip.dims() => {
                return Err(Error::Data(format!("sample {i} has shape {}, expected {d:?}", clip.shape())));
            }
            Some(_) => {}
        }
        values.extend_from_slice(clip.data());
        targets.push(target);
    }
    let mut full = vec![indices.len()];
    full.extend(dims.ok_or_else(|| Error::arg("empty batch"))?);
    Ok((Tensor::from_vec(&full, values)?, targets))
}

/// Continues training `state` until `state.optimizer.max_iterations` steps
/// have been taken, and returns the final checkpoint.
pub fn train(
    mut state: Checkpoint,
    data: &dyn SampleSource,
    options: &TrainOptions,
    observer: &mut dyn TrainObserver,
) -> Result<Checkpoint> {
    state.optimizer.validate()?;
    if data.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    let opt = state.optimizer.clone();
    while state.iteration < opt.max_iterations {
        let it = state.iteration;
        let idx = batch_indices(data.len(), opt.batch_size, state.seed, it);
        let (batch, targets) = assemble_batch(data, &idx)?;
        let (loss, _) = state.model.accumulate_gradients(&batch, &targets)?;
        if !loss.total.is_finite() {
            return Err(Error::Numeric(format!(
                "loss diverged at iteration {it}: cat {} h1 {} h2 {} bbox {}",
                loss.cat, loss.h1, loss.h2, loss.bbox
            )));
        }
        let lr = lr_schedule(&opt, it);
        state.model.sgd_step(&opt, lr);
        state.iteration += 1;
        observer.on_step(&StepRecord {
            iteration: it,
            lr,
            loss,
        })?;
        if let Some(every) = options.checkpoint_every {
            if every > 0 && state.iteration.is_multiple_of(every) && state.iteration < opt.max_iterations {
                observer.on_checkpoint(&state)?;
            }
        }
    }
    observer.on_checkpoint(&state)?;
    Ok(state)
}

/// Warm-starts from `pretrained`: a fresh class head of width
/// `num_categories (+1)`, zeroed momentum, and the fine-tuning schedule
/// counted from iteration zero.
pub fn prepare_finetune(
    pretrained: &Checkpoint,
    num_categories: usize,
    include_background: bool,
    optimizer: OptimizerConfig,
    seed: u64,
) -> Result<Checkpoint> {
    let mut model = pretrained.model.clone();
    model.reinit_class_head(num_categories, include_background, seed)?;
    for (_, p) in model.named_params_mut() {
        let (mw, mb) = p.momentum_mut();
        mw.fill(0.0);
        mb.fill(0.0);
        p.zero_grad();
    }
    Ok(Checkpoint {
        model,
        optimizer,
        iteration: 0,
        seed,
    })
}

/// Checks that a data source matches a model's input geometry and head
/// widths.
pub fn check_compatible(model: &ActionNet, data: &dyn SampleSource) -> Result<()> {
    let (clip, target) = data.sample(0)?;
    let cfg = model.config();
    if clip.dims() != cfg.input_shape {
        return Err(Error::Config(format!(
            "data clips are {} but the model expects {:?}",
            clip.shape(),
            cfg.input_shape
        )));
    }
    if target.h1.len() != cfg.num_h1 || target.h2.len() != cfg.num_h2 {
        return Err(Error::Config("attribute counts differ between data and model".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::ModelConfig;

    /// Two separable classes: bright clips versus dark clips.
    struct TwoBlobs {
        n: usize,
    }

    impl SampleSource for TwoBlobs {
        fn len(&self) -> usize {
            self.n
        }

        fn sample(&self, i: usize) -> Result<(Tensor, Target)> {
            let class = i % 2;
            let noise = Tensor::random_uniform(&[3, 4, 8, 8], 0.0, 0.3, 1000 + i as u64)?;
            let clip = noise.map(|v| v + if class == 1 { 0.6 } else { 0.0 });
            Ok((
                clip,
                Target {
                    category: class,
                    h1: (0..19).map(|k| (k + class) % 2 == 0).collect(),
                    h2: (0..14).map(|k| k % 3 == class).collect(),
                    loc: [0.1 * class as f32, -0.1],
                },
            ))
        }
    }

    fn start(max_iterations: usize, lr: f64) -> Checkpoint {
        Checkpoint {
            model: ActionNet::build(ModelConfig::tiny(), 5).unwrap(),
            optimizer: OptimizerConfig {
                learning_rate: lr,
                batch_size: 4,
                max_iterations,
                ..OptimizerConfig::pretrain()
            },
            iteration: 0,
            seed: 5,
        }
    }

    #[test]
    fn batches_cover_each_epoch_once() {
        let mut seen: Vec<usize> = (0..5).flat_map(|it| batch_indices(20, 4, 3, it)).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..20).collect::<Vec<_>>());
        assert_eq!(batch_indices(20, 4, 3, 7), batch_indices(20, 4, 3, 7));
    }

    #[test]
    fn zero_learning_rate_freezes_weights() {
        let ck = start(6, 0.0);
        let before = ck.model.clone();
        let after = train(ck, &TwoBlobs { n: 16 }, &TrainOptions { checkpoint_every: None }, &mut ()).unwrap();
        for ((_, a), (_, b)) in after.model.named_params().iter().zip(before.named_params()) {
            assert_eq!(a.weights(), b.weights());
            assert_eq!(a.bias(), b.bias());
        }
    }

    #[test]
    fn loss_decreases() {
        let mut log = LossLog::default();
        train(start(150, 0.01), &TwoBlobs { n: 32 }, &TrainOptions { checkpoint_every: None }, &mut log).unwrap();
        let head: f64 = log.0[..10].iter().map(|r| r.loss.total).sum::<f64>() / 10.0;
        let tail: f64 = log.0[140..].iter().map(|r| r.loss.total).sum::<f64>() / 10.0;
        assert!(tail < 0.5 * head, "{head} -> {tail}");
    }

    #[test]
    fn resume_reproduces_trajectory() {
        let data = TwoBlobs { n: 12 };
        let opts = TrainOptions { checkpoint_every: Some(5) };
        let mut full = LossLog::default();
        train(start(12, 0.01), &data, &opts, &mut full).unwrap();

        struct Grab(Option<Checkpoint>);
        impl TrainObserver for Grab {
            fn on_checkpoint(&mut self, c: &Checkpoint) -> Result<()> {
                if c.iteration == 5 {
                    self.0 = Some(c.clone());
                }
                Ok(())
            }
        }
        let mut grab = Grab(None);
        train(start(12, 0.01), &data, &opts, &mut grab).unwrap();
        let mut bytes = Vec::new();
        grab.0.unwrap().write_to(&mut bytes).unwrap();
        let resumed_from = Checkpoint::read_from(&bytes[..]).unwrap();
        let mut tail = LossLog::default();
        train(resumed_from, &data, &opts, &mut tail).unwrap();
        assert_eq!(tail.0, full.0[5..]);
    }

    #[test]
    fn finetune_reinitializes_only_the_class_head() {
        let pre = start(0, 0.01);
        let ft = prepare_finetune(&pre, 20, true, OptimizerConfig::finetune(), 9).unwrap();
        assert_eq!(ft.model.config().num_classes(), 21);
        for ((na, a), (_, b)) in ft.model.named_params().iter().zip(pre.model.named_params()) {
            if na != "head_cls" {
                assert_eq!(a.weights(), b.weights());
            }
        }
        assert_eq!(ft.optimizer.learning_rate, 0.001);
    }

    #[test]
    fn csv_line_format() {
        let r = StepRecord {
            iteration: 3,
            lr: 0.005,
            loss: LossBreakdown {
                cat: 1.0,
                h1: 0.5,
                h2: 0.25,
                bbox: 0.125,
                total: 1.4375,
            },
        };
        assert_eq!(r.csv_line(), "3,5e-3,1.000000000,0.500000000,0.250000000,0.125000000,1.437500000");
    }
}
