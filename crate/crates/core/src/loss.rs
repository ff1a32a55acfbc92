//! The image-video contrastive loss and its analytic gradient.
//!
//! For anchor `g_i` with positive `a_i`, the per-anchor loss is
//!
//! ```text
//! l_i = -log( exp(sim(g_i, a_i)/tau)
//!           / ( sum_{k != i} exp(sim(g_i, g_k)/tau)
//!             + sum_{k != i} exp(sim(g_i, a_k)/tau) ) )
//! ```
//!
//! Note the positive pair is *excluded* from the denominator, so the loss can
//! go negative. `LossConfig::positive_in_denominator` switches to the common
//! variant that keeps the positive cross-modal term in the denominator.
//! When symmetrized, the losses of both anchor directions are averaged over
//! all `2N` anchors.
//!
//! Similarities are cosines: rows are normalized internally, and gradients
//! are taken with respect to the raw (pre-normalization) rows, including the
//! normalization Jacobian.

use crate::math;
use crate::matrix::Matrix;
use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;

/// Loss hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    /// Temperature; must be positive.
    pub tau: f64,
    /// Average the ground->aerial and aerial->ground directions.
    pub symmetrized: bool,
    /// Include the positive cross-modal term in the denominator.
    pub positive_in_denominator: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            tau: 0.1,
            symmetrized: true,
            positive_in_denominator: false,
        }
    }
}

impl LossConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidParameter("tau must be finite and > 0"));
        }
        Ok(())
    }
}

/// A batch of N aligned (ground clip, aerial image) embedding rows.
///
/// Row i of `ground` and row i of `aerial` form the positive pair; rows may
/// be raw (unnormalized) — see the individual loss entry points.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBatch {
    ground: Matrix,
    aerial: Matrix,
}

impl PairBatch {
    pub fn new(ground: Matrix, aerial: Matrix) -> Result<Self> {
        if ground.rows() != aerial.rows() || ground.cols() != aerial.cols() {
            return Err(Error::DimensionMismatch {
                expected: ground.rows() * ground.cols(),
                got: aerial.rows() * aerial.cols(),
            });
        }
        if ground.rows() < 2 {
            return Err(Error::BatchTooSmall {
                rows: ground.rows(),
            });
        }
        if !ground.is_finite() || !aerial.is_finite() {
            return Err(Error::NonFinite {
                context: "pair batch",
            });
        }
        Ok(Self { ground, aerial })
    }

    pub fn rows(&self) -> usize {
        self.ground.rows()
    }

    pub fn dim(&self) -> usize {
        self.ground.cols()
    }

    pub fn ground(&self) -> &Matrix {
        &self.ground
    }

    pub fn aerial(&self) -> &Matrix {
        &self.aerial
    }

    /// Copy of the batch with every row scaled to unit norm.
    pub fn l2_normalized(&self) -> Result<PairBatch> {
        let (g, _) = unit_rows(&self.ground)?;
        let (a, _) = unit_rows(&self.aerial)?;
        Ok(PairBatch { ground: g, aerial: a })
    }
}

/// Gradients of the loss with respect to the raw batch rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradients {
    pub ground: Matrix,
    pub aerial: Matrix,
}

/// Loss on a batch whose rows are already unit vectors (within 1e-4).
pub fn nt_xent_cross_modal(batch: &PairBatch, cfg: &LossConfig) -> Result<f64> {
    check_normalized(&batch.ground)?;
    check_normalized(&batch.aerial)?;
    nt_xent_from_raw(batch, cfg)
}

/// Loss on raw rows; normalization is applied internally, making the value
/// invariant to positive rescaling of any input row.
pub fn nt_xent_from_raw(batch: &PairBatch, cfg: &LossConfig) -> Result<f64> {
    cfg.validate()?;
    let (g, _) = unit_rows(&batch.ground)?;
    let (a, _) = unit_rows(&batch.aerial)?;
    let eval = Evaluation::compute(&g, &a, cfg);
    Ok(eval.mean_loss)
}

/// Analytic gradient (and only the gradient) of [`nt_xent_from_raw`].
pub fn nt_xent_gradient(batch: &PairBatch, cfg: &LossConfig) -> Result<LossGradients> {
    Ok(nt_xent_value_and_gradient(batch, cfg)?.1)
}

/// Loss value together with its gradient; one pass over the batch.
pub fn nt_xent_value_and_gradient(
    batch: &PairBatch,
    cfg: &LossConfig,
) -> Result<(f64, LossGradients)> {
    cfg.validate()?;
    let n = batch.rows();
    let d = batch.dim();
    let (g, g_norms) = unit_rows(&batch.ground)?;
    let (a, a_norms) = unit_rows(&batch.aerial)?;
    let eval = Evaluation::compute(&g, &a, cfg);

    let weight = if cfg.symmetrized {
        1.0 / (2.0 * n as f64)
    } else {
        1.0 / n as f64
    };
    let inv_tau = 1.0 / cfg.tau;
    let mut grad_g = Matrix::zeros(n, d);
    let mut grad_a = Matrix::zeros(n, d);

    // ground -> aerial direction
    for i in 0..n {
        let w = weight * inv_tau;
        axpy(grad_a.row_mut(i), g.row(i), -w);
        for k in 0..n {
            if k == i {
                if cfg.positive_in_denominator {
                    let p = eval.p_cross[i][k];
                    axpy(grad_g.row_mut(i), a.row(k), w * p);
                    axpy(grad_a.row_mut(i), g.row(i), w * p);
                }
                continue;
            }
            let p_same = eval.p_same[i][k];
            let p_cross = eval.p_cross[i][k];
            axpy(grad_g.row_mut(i), g.row(k), w * p_same);
            axpy(grad_g.row_mut(i), a.row(k), w * p_cross);
            axpy(grad_g.row_mut(k), g.row(i), w * p_same);
            axpy(grad_a.row_mut(k), g.row(i), w * p_cross);
        }
        axpy(grad_g.row_mut(i), a.row(i), -w);
    }

    if cfg.symmetrized {
        // aerial -> ground direction
        for i in 0..n {
            let w = weight * inv_tau;
            axpy(grad_g.row_mut(i), a.row(i), -w);
            for k in 0..n {
                if k == i {
                    if cfg.positive_in_denominator {
                        let q = eval.q_cross[i][k];
                        axpy(grad_a.row_mut(i), g.row(k), w * q);
                        axpy(grad_g.row_mut(i), a.row(i), w * q);
                    }
                    continue;
                }
                let q_same = eval.q_same[i][k];
                let q_cross = eval.q_cross[i][k];
                axpy(grad_a.row_mut(i), a.row(k), w * q_same);
                axpy(grad_a.row_mut(i), g.row(k), w * q_cross);
                axpy(grad_a.row_mut(k), a.row(i), w * q_same);
                axpy(grad_g.row_mut(k), a.row(i), w * q_cross);
            }
            axpy(grad_a.row_mut(i), g.row(i), -w);
        }
    }

    // chain through normalization: raw = (unit_grad - (unit_grad . u) u) / norm
    project_through_normalization(&mut grad_g, &g, &g_norms);
    project_through_normalization(&mut grad_a, &a, &a_norms);

    Ok((
        eval.mean_loss,
        LossGradients {
            ground: grad_g,
            aerial: grad_a,
        },
    ))
}

struct Evaluation {
    mean_loss: f64,
    /// ground-anchor softmax over same-modality negatives
    p_same: Vec<Vec<f64>>,
    /// ground-anchor softmax over cross-modality terms
    p_cross: Vec<Vec<f64>>,
    /// aerial-anchor counterparts
    q_same: Vec<Vec<f64>>,
    q_cross: Vec<Vec<f64>>,
}

impl Evaluation {
    fn compute(g: &Matrix, a: &Matrix, cfg: &LossConfig) -> Evaluation {
        let n = g.rows();
        let s_gg = gram(g, g);
        let s_ga = gram(g, a);
        let s_aa = gram(a, a);

        let mut p_same = vec![vec![0.0; n]; n];
        let mut p_cross = vec![vec![0.0; n]; n];
        let mut q_same = vec![vec![0.0; n]; n];
        let mut q_cross = vec![vec![0.0; n]; n];
        let mut total = 0.0;

        for i in 0..n {
            // anchor g_i: negatives g_k and a_k (k != i), positive optional
            let log_z = log_sum_exp_row(
                i,
                n,
                cfg,
                |k| s_gg.row(i)[k] / cfg.tau,
                |k| s_ga.row(i)[k] / cfg.tau,
                &mut p_same[i],
                &mut p_cross[i],
            );
            total += -s_ga.row(i)[i] / cfg.tau + log_z;

            if cfg.symmetrized {
                // anchor a_i: negatives a_k and g_k; sim(a_i, g_k) = s_ga[k][i]
                let log_z = log_sum_exp_row(
                    i,
                    n,
                    cfg,
                    |k| s_aa.row(i)[k] / cfg.tau,
                    |k| s_ga.row(k)[i] / cfg.tau,
                    &mut q_same[i],
                    &mut q_cross[i],
                );
                total += -s_ga.row(i)[i] / cfg.tau + log_z;
            }
        }

        let anchors = if cfg.symmetrized { 2 * n } else { n };
        Evaluation {
            mean_loss: total / anchors as f64,
            p_same,
            p_cross,
            q_same,
            q_cross,
        }
    }
}

/// Max-shifted log-sum-exp over a denominator row; fills the softmax weights.
fn log_sum_exp_row(
    i: usize,
    n: usize,
    cfg: &LossConfig,
    same_logit: impl Fn(usize) -> f64,
    cross_logit: impl Fn(usize) -> f64,
    same_out: &mut [f64],
    cross_out: &mut [f64],
) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for k in 0..n {
        if k != i {
            max = max.max(same_logit(k));
            max = max.max(cross_logit(k));
        } else if cfg.positive_in_denominator {
            max = max.max(cross_logit(k));
        }
    }
    let mut sum = 0.0;
    for k in 0..n {
        if k != i {
            same_out[k] = math::exp(same_logit(k) - max);
            cross_out[k] = math::exp(cross_logit(k) - max);
            sum += same_out[k] + cross_out[k];
        } else if cfg.positive_in_denominator {
            cross_out[k] = math::exp(cross_logit(k) - max);
            sum += cross_out[k];
        }
    }
    for k in 0..n {
        if k != i || cfg.positive_in_denominator {
            same_out[k] /= sum;
            cross_out[k] /= sum;
        }
        if k == i && !cfg.positive_in_denominator {
            same_out[k] = 0.0;
            cross_out[k] = 0.0;
        }
    }
    same_out[i] = 0.0; // same-modality self term never participates
    max + math::ln(sum)
}

fn gram(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.rows();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        let ra = a.row(i);
        let dst = out.row_mut(i);
        for (k, slot) in dst.iter_mut().enumerate() {
            *slot = dot(ra, b.row(k));
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(dst: &mut [f64], src: &[f64], factor: f64) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += factor * s;
    }
}

fn unit_rows(m: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let mut unit = m.clone();
    let mut norms = Vec::with_capacity(m.rows());
    for i in 0..m.rows() {
        let row = unit.row_mut(i);
        let norm = math::sqrt(dot(row, row));
        if !(norm.is_finite() && norm > 1e-12) {
            return Err(Error::DegenerateEmbedding {
                id: alloc::format!("batch row {i}"),
            });
        }
        for v in row {
            *v /= norm;
        }
        norms.push(norm);
    }
    Ok((unit, norms))
}

fn check_normalized(m: &Matrix) -> Result<()> {
    for i in 0..m.rows() {
        let row = m.row(i);
        let norm = math::sqrt(dot(row, row));
        if math::abs(norm - 1.0) > 1e-4 {
            return Err(Error::RowNotNormalized { row: i, norm });
        }
    }
    Ok(())
}

fn project_through_normalization(grad: &mut Matrix, unit: &Matrix, norms: &[f64]) {
    for (i, &norm) in norms.iter().enumerate() {
        let u = unit.row(i);
        let g = grad.row_mut(i);
        let radial = dot(g, u);
        for (gv, &uv) in g.iter_mut().zip(u) {
            *gv = (*gv - radial * uv) / norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch_from_rows(ground: &[&[f64]], aerial: &[&[f64]]) -> PairBatch {
        let d = ground[0].len();
        let flat = |rows: &[&[f64]]| {
            Matrix::from_flat(
                rows.len(),
                d,
                rows.iter().flat_map(|r| r.iter().copied()).collect(),
            )
            .unwrap()
        };
        PairBatch::new(flat(ground), flat(aerial)).unwrap()
    }

    fn random_batch(seed: u64, n: usize, d: usize) -> PairBatch {
        let mut state = seed;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let g = Matrix::from_flat(n, d, (0..n * d).map(|_| next()).collect()).unwrap();
        let a = Matrix::from_flat(n, d, (0..n * d).map(|_| next()).collect()).unwrap();
        PairBatch::new(g, a).unwrap()
    }

    /// Literal double-loop transcription of the loss, no max shift.
    fn naive_loss(batch: &PairBatch, cfg: &LossConfig) -> f64 {
        let g = batch.ground();
        let a = batch.aerial();
        let n = g.rows();
        let unit = |row: &[f64]| {
            let norm = dot(row, row).sqrt();
            row.iter().map(|v| v / norm).collect::<alloc::vec::Vec<f64>>()
        };
        let gu: alloc::vec::Vec<_> = (0..n).map(|i| unit(g.row(i))).collect();
        let au: alloc::vec::Vec<_> = (0..n).map(|i| unit(a.row(i))).collect();
        let sim = |x: &[f64], y: &[f64]| dot(x, y);

        let mut total = 0.0;
        let mut anchors = 0usize;
        for i in 0..n {
            let mut denom = 0.0;
            for k in 0..n {
                if k != i {
                    denom += (sim(&gu[i], &gu[k]) / cfg.tau).exp();
                    denom += (sim(&gu[i], &au[k]) / cfg.tau).exp();
                } else if cfg.positive_in_denominator {
                    denom += (sim(&gu[i], &au[k]) / cfg.tau).exp();
                }
            }
            total += -((sim(&gu[i], &au[i]) / cfg.tau).exp() / denom).ln();
            anchors += 1;
            if cfg.symmetrized {
                let mut denom = 0.0;
                for k in 0..n {
                    if k != i {
                        denom += (sim(&au[i], &au[k]) / cfg.tau).exp();
                        denom += (sim(&au[i], &gu[k]) / cfg.tau).exp();
                    } else if cfg.positive_in_denominator {
                        denom += (sim(&au[i], &gu[k]) / cfg.tau).exp();
                    }
                }
                total += -((sim(&au[i], &gu[i]) / cfg.tau).exp() / denom).ln();
                anchors += 1;
            }
        }
        total / anchors as f64
    }

    #[test]
    fn identical_batch_gives_log_two_per_anchor() {
        let u = [0.6f64, 0.8, 0.0];
        let batch = batch_from_rows(&[&u, &u], &[&u, &u]);
        for tau in [0.05, 0.1, 0.5, 1.0] {
            let cfg = LossConfig {
                tau,
                ..LossConfig::default()
            };
            let loss = nt_xent_cross_modal(&batch, &cfg).unwrap();
            assert!(
                (loss - core::f64::consts::LN_2).abs() < 1e-9,
                "tau {tau}: {loss}"
            );
        }
    }

    #[test]
    fn orthogonal_negatives_closed_form() {
        // c1 = a1 = u, c2 = a2 = v, u orthogonal to v
        let u = [1.0f64, 0.0];
        let v = [0.0f64, 1.0];
        let batch = batch_from_rows(&[&u, &v], &[&u, &v]);
        let cfg = LossConfig {
            tau: 0.5,
            ..LossConfig::default()
        };
        let loss = nt_xent_cross_modal(&batch, &cfg).unwrap();
        let expected = core::f64::consts::LN_2 - 2.0; // log 2 - 1/tau
        assert!((loss - expected).abs() < 1e-9, "{loss}");
        assert!(loss < 0.0); // positive excluded from denominator
    }

    #[test]
    fn positive_in_denominator_variant() {
        let u = [0.0f64, 1.0, 0.0];
        let batch = batch_from_rows(&[&u, &u], &[&u, &u]);
        let cfg = LossConfig {
            positive_in_denominator: true,
            ..LossConfig::default()
        };
        // denominator picks up a third identical term
        let loss = nt_xent_cross_modal(&batch, &cfg).unwrap();
        assert!((loss - 3.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn vectorized_matches_naive_double_loop() {
        for seed in 0..10u64 {
            let batch = random_batch(seed + 1, 8, 16);
            for cfg in [
                LossConfig::default(),
                LossConfig {
                    tau: 0.3,
                    symmetrized: false,
                    positive_in_denominator: false,
                },
                LossConfig {
                    tau: 0.7,
                    symmetrized: true,
                    positive_in_denominator: true,
                },
            ] {
                let fast = nt_xent_from_raw(&batch, &cfg).unwrap();
                let slow = naive_loss(&batch, &cfg);
                assert!((fast - slow).abs() < 1e-10, "{fast} vs {slow}");
            }
        }
    }

    fn finite_difference(batch: &PairBatch, cfg: &LossConfig) -> LossGradients {
        let h = 1e-5;
        let mut fd_g = Matrix::zeros(batch.rows(), batch.dim());
        let mut fd_a = Matrix::zeros(batch.rows(), batch.dim());
        for m in 0..2 {
            for i in 0..batch.rows() {
                for j in 0..batch.dim() {
                    let mut plus = batch.clone();
                    let mut minus = batch.clone();
                    {
                        let target = if m == 0 { &mut plus.ground } else { &mut plus.aerial };
                        target.row_mut(i)[j] += h;
                    }
                    {
                        let target = if m == 0 {
                            &mut minus.ground
                        } else {
                            &mut minus.aerial
                        };
                        target.row_mut(i)[j] -= h;
                    }
                    let df = (nt_xent_from_raw(&plus, cfg).unwrap()
                        - nt_xent_from_raw(&minus, cfg).unwrap())
                        / (2.0 * h);
                    if m == 0 {
                        fd_g.row_mut(i)[j] = df;
                    } else {
                        fd_a.row_mut(i)[j] = df;
                    }
                }
            }
        }
        LossGradients {
            ground: fd_g,
            aerial: fd_a,
        }
    }

    fn max_rel_error(analytic: &Matrix, fd: &Matrix) -> f64 {
        let scale = fd
            .data()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-8);
        analytic
            .data()
            .iter()
            .zip(fd.data())
            .fold(0.0f64, |m, (a, f)| m.max((a - f).abs()))
            / scale
    }

    #[test]
    fn gradient_matches_central_differences() {
        for (seed, n, d, tau, sym, pos) in [
            (1u64, 4usize, 8usize, 0.1, true, false),
            (2, 3, 5, 0.5, false, false),
            (3, 6, 4, 0.2, true, true),
        ] {
            let batch = random_batch(seed, n, d);
            let cfg = LossConfig {
                tau,
                symmetrized: sym,
                positive_in_denominator: pos,
            };
            let grads = nt_xent_gradient(&batch, &cfg).unwrap();
            let fd = finite_difference(&batch, &cfg);
            assert!(
                max_rel_error(&grads.ground, &fd.ground) < 1e-4,
                "ground grads off for seed {seed}"
            );
            assert!(
                max_rel_error(&grads.aerial, &fd.aerial) < 1e-4,
                "aerial grads off for seed {seed}"
            );
        }
    }

    #[test]
    fn gradient_has_no_radial_component() {
        let u = [0.6f64, 0.0, 0.8];
        let batch = batch_from_rows(&[&u, &u], &[&u, &u]);
        let grads = nt_xent_gradient(&batch, &LossConfig::default()).unwrap();
        for i in 0..2 {
            let radial = dot(grads.ground.row(i), &u);
            assert!(radial.abs() < 1e-12);
        }
    }

    #[test]
    fn loss_invariant_to_row_permutation() {
        let batch = random_batch(5, 6, 8);
        let cfg = LossConfig::default();
        let base = nt_xent_from_raw(&batch, &cfg).unwrap();

        let perm = [3usize, 0, 5, 1, 4, 2];
        let permute = |m: &Matrix| {
            let mut data = alloc::vec::Vec::new();
            for &i in &perm {
                data.extend_from_slice(m.row(i));
            }
            Matrix::from_flat(6, 8, data).unwrap()
        };
        let permuted =
            PairBatch::new(permute(batch.ground()), permute(batch.aerial())).unwrap();
        let shuffled = nt_xent_from_raw(&permuted, &cfg).unwrap();
        assert!((base - shuffled).abs() < 1e-12);
    }

    #[test]
    fn loss_invariant_to_row_rescaling() {
        let batch = random_batch(8, 4, 6);
        let cfg = LossConfig::default();
        let base = nt_xent_from_raw(&batch, &cfg).unwrap();
        let base_grad = nt_xent_gradient(&batch, &cfg).unwrap();

        let mut scaled = batch.clone();
        for v in scaled.ground.row_mut(1) {
            *v *= 2.0;
        }
        let loss = nt_xent_from_raw(&scaled, &cfg).unwrap();
        assert!((base - loss).abs() < 1e-12);

        // gradient direction of the scaled row is unchanged; magnitude halves
        let scaled_grad = nt_xent_gradient(&scaled, &cfg).unwrap();
        let g0 = base_grad.ground.row(1);
        let g1 = scaled_grad.ground.row(1);
        let cosine = dot(g0, g1) / (dot(g0, g0).sqrt() * dot(g1, g1).sqrt());
        assert!((cosine - 1.0).abs() < 1e-9);
        let ratio = dot(g1, g1).sqrt() / dot(g0, g0).sqrt();
        assert!((ratio - 0.5).abs() < 1e-9);
    }

    #[test]
    fn small_temperature_stays_finite() {
        let batch = random_batch(13, 8, 16).l2_normalized().unwrap();
        let cfg = LossConfig {
            tau: 0.01,
            ..LossConfig::default()
        };
        let loss = nt_xent_cross_modal(&batch, &cfg).unwrap();
        assert!(loss.is_finite());
    }

    #[test]
    fn parameter_and_batch_validation() {
        let u = [1.0f64, 0.0];
        assert!(matches!(
            PairBatch::new(
                Matrix::from_flat(1, 2, alloc::vec![1.0, 0.0]).unwrap(),
                Matrix::from_flat(1, 2, alloc::vec![1.0, 0.0]).unwrap(),
            ),
            Err(Error::BatchTooSmall { rows: 1 })
        ));

        let batch = batch_from_rows(&[&u, &u], &[&u, &u]);
        let bad_tau = LossConfig {
            tau: 0.0,
            ..LossConfig::default()
        };
        assert!(matches!(
            nt_xent_cross_modal(&batch, &bad_tau),
            Err(Error::InvalidParameter(_))
        ));

        let long = [2.0f64, 0.0];
        let unnormalized = batch_from_rows(&[&long, &u], &[&u, &u]);
        assert!(matches!(
            nt_xent_cross_modal(&unnormalized, &LossConfig::default()),
            Err(Error::RowNotNormalized { row: 0, .. })
        ));
        // the raw entry point accepts any scale
        assert!(nt_xent_from_raw(&unnormalized, &LossConfig::default()).is_ok());
    }
}
