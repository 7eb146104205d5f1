//! Minibatch training with dropout and Adam, and tile-wise restoration.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::par;
use crate::rng::{self, SeededRng};
use crate::tiling::{self, SubpatternPair};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::network::{accumulate_gradients, forward, DropoutMask};
use super::params::{init_params, AeParams};

/// Samples per gradient work unit. Partial sums are combined in a fixed
/// order, so the batch gradient does not depend on the thread count.
const GRAD_CHUNK: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Fraction of hidden units disabled per sample during training.
    pub dropout_rate: f64,
    pub epochs: usize,
    pub n_hidden: usize,
    /// When set, each epoch performs only this many minibatch updates
    /// (drawn from a fresh shuffle) instead of a full pass.
    pub updates_per_epoch: Option<usize>,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 100,
            dropout_rate: 0.8,
            epochs: 40,
            n_hidden: 50,
            updates_per_epoch: None,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.n_hidden == 0 {
            return Err(Error::Config("n_hidden must be >= 1".into()));
        }
        if self.updates_per_epoch == Some(0) {
            return Err(Error::Config("updates_per_epoch must be >= 1".into()));
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: AeParams,
    /// Mean per-sample loss of each epoch, as seen during training.
    pub loss_history: Vec<f64>,
}

/// Initialises a network from `config.seed` and trains it on `pairs`.
pub fn train(pairs: &[SubpatternPair], config: &TrainConfig) -> Result<TrainOutcome> {
    let n_in = pairs
        .first()
        .map(|p| p.x.len())
        .ok_or_else(|| Error::InvalidValue("training set is empty".into()))?;
    let params = init_params(n_in, config.n_hidden, rng::derive_seed(config.seed, 0))?;
    train_from(params, pairs, config)
}

/// Trains starting from `params`. Shuffles and dropout masks come from a
/// single stream derived from `config.seed`.
pub fn train_from(
    mut params: AeParams,
    pairs: &[SubpatternPair],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(Error::InvalidValue("training set is empty".into()));
    }
    if config.n_hidden != params.n_hidden() {
        return Err(Error::Dimension(format!(
            "config asks for {} hidden units, parameters have {}",
            config.n_hidden,
            params.n_hidden()
        )));
    }
    if let Some(k) = pairs.iter().position(|p| {
        p.x.len() != params.n_in() || p.x_target.len() != params.n_in()
    }) {
        return Err(Error::Dimension(format!(
            "pair {k} does not match the {}-unit input layer",
            params.n_in()
        )));
    }

    let mut rng = rng::seeded(rng::derive_seed(config.seed, 1));
    let mut state = AdamState::new(&params);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let batches = order.chunks(config.batch_size);
        let batch_count = config
            .updates_per_epoch
            .unwrap_or(usize::MAX)
            .min(batches.len());
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for batch in batches.take(batch_count) {
            let masks = draw_masks(&mut rng, batch.len(), params.n_hidden(), config.dropout_rate)?;
            let (mut grads, batch_loss) = batch_gradient(&params, pairs, batch, &masks)?;
            if !batch_loss.is_finite() {
                return Err(Error::Divergence(format!(
                    "non-finite loss in epoch {epoch}"
                )));
            }
            grads.scale(1.0 / batch.len() as f64);
            adam_step(&mut params, &grads, &mut state, &config.adam)?;
            loss_sum += batch_loss;
            seen += batch.len();
        }
        history.push(loss_sum / seen as f64);
    }
    Ok(TrainOutcome {
        params,
        loss_history: history,
    })
}

fn draw_masks(
    rng: &mut SeededRng,
    count: usize,
    n_hidden: usize,
    rate: f64,
) -> Result<Vec<Option<DropoutMask>>> {
    if rate == 0.0 {
        return Ok(vec![None; count]);
    }
    (0..count)
        .map(|_| {
            let keep = (0..n_hidden).map(|_| rng.gen::<f64>() >= rate).collect();
            DropoutMask::new(keep, rate).map(Some)
        })
        .collect()
}

/// Summed gradient and summed loss over the samples `batch` indexes.
fn batch_gradient(
    params: &AeParams,
    pairs: &[SubpatternPair],
    batch: &[usize],
    masks: &[Option<DropoutMask>],
) -> Result<(AeParams, f64)> {
    let chunks = batch.len().div_ceil(GRAD_CHUNK);
    let partials = par::map_range(chunks, |c| -> Result<(AeParams, f64)> {
        let lo = c * GRAD_CHUNK;
        let hi = (lo + GRAD_CHUNK).min(batch.len());
        let mut grads = AeParams::zeros(params.n_in(), params.n_hidden());
        let mut loss = 0.0;
        for s in lo..hi {
            let pair = &pairs[batch[s]];
            loss += accumulate_gradients(params, &pair.x, &pair.x_target, masks[s].as_ref(), &mut grads)?;
        }
        Ok((grads, loss))
    });
    let mut total = AeParams::zeros(params.n_in(), params.n_hidden());
    let mut loss = 0.0;
    for partial in partials {
        let (g, l) = partial?;
        total.add_assign(&g);
        loss += l;
    }
    Ok((total, loss))
}

/// Runs every `tile_px` tile of `image` through the network (no dropout),
/// clamps outputs to `[0, 1]`, and reassembles the image.
pub fn restore(params: &AeParams, image: &Image, tile_px: usize) -> Result<Image> {
    if tile_px * tile_px != params.n_in() {
        return Err(Error::Dimension(format!(
            "{tile_px}x{tile_px} tiles do not fit a {}-unit input layer",
            params.n_in()
        )));
    }
    let batch = tiling::tile(image, tile_px)?;
    let outputs = par::map_collect(batch.vectors(), |x| {
        forward(params, x, None).map(|a| a.o.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
    });
    let outputs = outputs.into_iter().collect::<Result<Vec<Vec<f64>>>>()?;
    tiling::untile(&batch.with_vectors(outputs)?)
}

/// Mean per-sample loss of the network (inference mode) over `pairs`.
pub fn mean_loss(params: &AeParams, pairs: &[SubpatternPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidValue("no pairs to evaluate".into()));
    }
    let losses = par::map_collect(pairs, |p| {
        forward(params, &p.x, None).and_then(|a| super::network::loss(&a.o, &p.x_target))
    });
    let total = losses.into_iter().sum::<Result<f64>>()?;
    Ok(total / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_pairs(n: usize) -> Vec<SubpatternPair> {
        let x = vec![0.2, 0.9, 0.5, 0.7];
        vec![SubpatternPair::new(x.clone(), x).unwrap(); n]
    }

    fn toy_config(epochs: usize) -> TrainConfig {
        TrainConfig {
            batch_size: 10,
            dropout_rate: 0.0,
            epochs,
            n_hidden: 4,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn toy_target_is_exactly_attainable() {
        // Known zero-loss solution: identity encoder and decoder.
        let mut eye = vec![0.0; 16];
        (0..4).for_each(|i| eye[i * 5] = 1.0);
        let exact =
            AeParams::from_parts(4, 4, eye.clone(), vec![0.0; 4], eye, vec![0.0; 4]).unwrap();
        assert_eq!(mean_loss(&exact, &toy_pairs(1)).unwrap(), 0.0);
    }

    #[test]
    fn toy_loss_collapses_within_200_epochs() {
        // A ReLU output that starts negative on the only input never
        // receives gradient, so start from a seed with every output live.
        let pairs = toy_pairs(100);
        let mut cfg = toy_config(200);
        cfg.seed = (0..)
            .find(|&s| {
                let p = init_params(4, 4, rng::derive_seed(s, 0)).unwrap();
                forward(&p, &pairs[0].x, None).unwrap().out_pre.iter().all(|&v| v > 0.0)
            })
            .unwrap();
        let out = train(&pairs, &cfg).unwrap();
        let first = out.loss_history[0];
        let last = *out.loss_history.last().unwrap();
        assert_eq!(out.loss_history.len(), 200);
        assert!(last < 1e-3 * first, "first {first} last {last}");
    }

    #[test]
    fn deterministic_per_seed() {
        let mut cfg = toy_config(5);
        cfg.dropout_rate = 0.5;
        let a = train(&toy_pairs(37), &cfg).unwrap();
        let b = train(&toy_pairs(37), &cfg).unwrap();
        assert_eq!(a, b);
        cfg.seed += 1;
        assert_ne!(a, train(&toy_pairs(37), &cfg).unwrap());
    }

    #[test]
    fn single_thread_matches_default_pool() {
        let mut cfg = toy_config(3);
        cfg.dropout_rate = 0.3;
        let pairs = toy_pairs(45);
        let a = train(&pairs, &cfg).unwrap();
        let b = par::sequentially(|| train(&pairs, &cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn config_and_data_errors() {
        assert!(train(&[], &toy_config(1)).is_err());
        assert!(train(&toy_pairs(1), &toy_config(0)).is_err());
        let mut cfg = toy_config(1);
        cfg.dropout_rate = 1.0;
        assert!(train(&toy_pairs(1), &cfg).is_err());
        cfg = toy_config(1);
        cfg.batch_size = 0;
        assert!(train(&toy_pairs(1), &cfg).is_err());

        let mut mixed = toy_pairs(2);
        mixed.push(SubpatternPair::new(vec![0.0; 3], vec![0.0; 3]).unwrap());
        assert!(matches!(
            train(&mixed, &toy_config(1)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let mut cfg = toy_config(3);
        cfg.adam.alpha = 1e300;
        let pairs = vec![SubpatternPair::new(vec![1e200; 4], vec![1.0; 4]).unwrap(); 4];
        assert!(matches!(train(&pairs, &cfg), Err(Error::Divergence(_))));
    }

    #[test]
    fn updates_per_epoch_limits_steps() {
        let mut cfg = toy_config(4);
        cfg.updates_per_epoch = Some(1);
        let out = train(&toy_pairs(100), &cfg).unwrap();
        assert_eq!(out.loss_history.len(), 4);
    }

    #[test]
    fn restore_contract() {
        let zero = AeParams::zeros(4, 3);
        let img = Image::filled(4, 6, 0.0).unwrap();
        assert_eq!(restore(&zero, &img, 2).unwrap(), img);

        let p = init_params(4, 3, 9).unwrap();
        let noisy = Image::new(4, 2, vec![0.1, 0.9, 3.0, 0.2, 0.5, 0.5, 0.0, 1.0]).unwrap();
        let a = restore(&p, &noisy, 2).unwrap();
        assert_eq!(a, restore(&p, &noisy, 2).unwrap());
        assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(restore(&p, &noisy, 1).is_err());
        assert!(restore(&p, &Image::filled(3, 3, 0.0).unwrap(), 2).is_err());
    }
}
