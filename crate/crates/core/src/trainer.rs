//! Toy linear encoders trained with the contrastive loss.
//!
//! The smallest model that exercises the loss end to end: two bias-free
//! linear maps from a shared latent space into the embedding space, trained
//! by mini-batch gradient descent. Enough to show the loss drives retrieval
//! well above chance on synthetic pairs.

use crate::loss::{nt_xent_value_and_gradient, LossConfig, PairBatch};
use crate::matrix::Matrix;
use crate::rng;
use crate::{Error, Result};
use alloc::vec::Vec;

/// Paired raw inputs: row i of `ground` matches row i of `aerial`.
#[derive(Debug, Clone)]
pub struct ToyPairs {
    pub ground: Matrix,
    pub aerial: Matrix,
}

impl ToyPairs {
    pub fn len(&self) -> usize {
        self.ground.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.ground.cols()
    }
}

/// Identity-recoverable synthetic pairs: the aerial input is the ground
/// input plus Gaussian noise of scale `noise_sigma`.
pub fn gen_toy_pairs(seed: u64, count: usize, input_dim: usize, noise_sigma: f64) -> ToyPairs {
    let mut ground = Matrix::zeros(count, input_dim);
    let mut aerial = Matrix::zeros(count, input_dim);
    for i in 0..count {
        let mut rng = rng::stream(seed, &alloc::format!("pair:{i}"));
        let g = ground.row_mut(i);
        for v in g.iter_mut() {
            *v = rng::standard_normal(&mut rng);
        }
        let norm = crate::math::sqrt(g.iter().map(|v| v * v).sum());
        for v in g.iter_mut() {
            *v /= norm;
        }
        for (a, &gv) in aerial.row_mut(i).iter_mut().zip(ground.row(i)) {
            *a = gv + noise_sigma * rng::standard_normal(&mut rng);
        }
    }
    ToyPairs { ground, aerial }
}

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub loss: LossConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            lr: 0.5,
            batch_size: 64,
            seed: 0,
            loss: LossConfig::default(),
        }
    }
}

/// Trained projections plus the per-epoch mean loss.
#[derive(Debug, Clone)]
pub struct TrainedEncoders {
    pub w_ground: Matrix,
    pub w_aerial: Matrix,
    pub loss_history: Vec<f64>,
}

impl TrainedEncoders {
    /// Projects raw inputs through a weight matrix (rows = inputs).
    pub fn encode(inputs: &Matrix, weights: &Matrix) -> Result<Matrix> {
        inputs.matmul(weights)
    }
}

/// Seeded Gaussian init for a `d_in x d_out` projection.
pub fn init_projection(seed: u64, tag: &str, d_in: usize, d_out: usize) -> Matrix {
    let mut rng = rng::stream(seed, tag);
    let scale = 1.0 / crate::math::sqrt(d_in as f64);
    let mut w = Matrix::zeros(d_in, d_out);
    for i in 0..d_in {
        for v in w.row_mut(i) {
            *v = scale * rng::standard_normal(&mut rng);
        }
    }
    w
}

/// Mini-batch gradient descent of the contrastive loss over two linear
/// encoders. Pairs are shuffled once at start, so the batch partition is
/// fixed across epochs and `lr = 0` leaves the loss history constant.
pub fn train_toy_encoders(
    pairs: &ToyPairs,
    out_dim: usize,
    cfg: &TrainConfig,
) -> Result<TrainedEncoders> {
    if pairs.len() < 64 {
        return Err(Error::InvalidParameter("need at least 64 training pairs"));
    }
    if out_dim > pairs.input_dim() {
        return Err(Error::InvalidParameter(
            "output dimension exceeds input dimension",
        ));
    }
    if cfg.batch_size < 2 {
        return Err(Error::InvalidParameter("batch size must be >= 2"));
    }
    if !(cfg.lr.is_finite() && cfg.lr >= 0.0) {
        return Err(Error::InvalidParameter("learning rate must be >= 0"));
    }

    let d_in = pairs.input_dim();
    let mut w_ground = init_projection(cfg.seed, "init:ground", d_in, out_dim);
    let mut w_aerial = init_projection(cfg.seed, "init:aerial", d_in, out_dim);

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut shuffle_rng = rng::stream(cfg.seed, "order");
    rng::shuffle(&mut shuffle_rng, &mut order);

    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            if chunk.len() < 2 {
                continue; // a trailing singleton has no negatives
            }
            let take = |m: &Matrix| {
                let mut data = Vec::with_capacity(chunk.len() * d_in);
                for &i in chunk {
                    data.extend_from_slice(m.row(i));
                }
                Matrix::from_flat(chunk.len(), d_in, data).expect("chunk rows")
            };
            let inputs_g = take(&pairs.ground);
            let inputs_a = take(&pairs.aerial);
            let raw_g = inputs_g.matmul(&w_ground)?;
            let raw_a = inputs_a.matmul(&w_aerial)?;
            if !raw_g.is_finite() || !raw_a.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            let batch = PairBatch::new(raw_g, raw_a)?;
            let (loss, grads) = match nt_xent_value_and_gradient(&batch, &cfg.loss) {
                Ok(out) => out,
                // leaving the representable domain is divergence, not misuse
                Err(Error::DegenerateEmbedding { .. }) | Err(Error::NonFinite { .. }) => {
                    return Err(Error::Divergence { epoch })
                }
                Err(other) => return Err(other),
            };
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            epoch_loss += loss;
            batches += 1;

            // dL/dW = inputs^T . dL/d(raw rows)
            let dw_g = inputs_g.transpose_matmul(&grads.ground)?;
            let dw_a = inputs_a.transpose_matmul(&grads.aerial)?;
            w_ground.scale_add(&dw_g, -cfg.lr)?;
            w_aerial.scale_add(&dw_a, -cfg.lr)?;
            if !w_ground.is_finite() || !w_aerial.is_finite() {
                return Err(Error::Divergence { epoch });
            }
        }
        history.push(epoch_loss / batches as f64);
    }

    Ok(TrainedEncoders {
        w_ground,
        w_aerial,
        loss_history: history,
    })
}
