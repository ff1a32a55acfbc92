//! `loss-check`: self-verification battery for the contrastive loss.
//!
//! Runs closed-form identities, a naive double-loop comparison, and a
//! central-finite-difference gradient check, then prints one JSON report.
//! Exits non-zero if any check fails.

use super::print_summary;
use crate::config::{pick, FileConfig};
use crate::error::{CliError, Result};
use crossview_core::loss::{
    nt_xent_cross_modal, nt_xent_from_raw, nt_xent_gradient, LossConfig, PairBatch,
};
use crossview_core::matrix::Matrix;
use crossview_core::rng;
use serde_json::json;

#[derive(Debug, clap::Args)]
pub struct LossCheckArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Temperature used by the randomized checks.
    #[arg(long)]
    pub tau: Option<f64>,
}

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.value.is_finite() && self.value <= self.tolerance
    }
}

fn random_batch(seed: u64, tag: &str, n: usize, d: usize) -> PairBatch {
    let mut rng = rng::stream(seed, tag);
    let mut fill = |count: usize| -> Vec<f64> {
        (0..count).map(|_| rng::standard_normal(&mut rng)).collect()
    };
    PairBatch::new(
        Matrix::from_flat(n, d, fill(n * d)).expect("shape"),
        Matrix::from_flat(n, d, fill(n * d)).expect("shape"),
    )
    .expect("valid batch")
}

/// Literal transcription of the loss definition, no shifting, no reuse.
fn naive_loss(batch: &PairBatch, cfg: &LossConfig) -> f64 {
    let n = batch.rows();
    let unit = |m: &Matrix, i: usize| -> Vec<f64> {
        let row = m.row(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        row.iter().map(|v| v / norm).collect()
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let g: Vec<Vec<f64>> = (0..n).map(|i| unit(batch.ground(), i)).collect();
    let a: Vec<Vec<f64>> = (0..n).map(|i| unit(batch.aerial(), i)).collect();

    let direction = |anchors: &[Vec<f64>], positives: &[Vec<f64>]| -> f64 {
        let mut total = 0.0;
        for i in 0..n {
            let mut denom = 0.0;
            for k in 0..n {
                if k != i {
                    denom += (dot(&anchors[i], &anchors[k]) / cfg.tau).exp();
                    denom += (dot(&anchors[i], &positives[k]) / cfg.tau).exp();
                } else if cfg.positive_in_denominator {
                    denom += (dot(&anchors[i], &positives[k]) / cfg.tau).exp();
                }
            }
            let numer = (dot(&anchors[i], &positives[i]) / cfg.tau).exp();
            total += -(numer / denom).ln();
        }
        total
    };

    let forward = direction(&g, &a);
    if cfg.symmetrized {
        (forward + direction(&a, &g)) / (2.0 * n as f64)
    } else {
        forward / n as f64
    }
}

fn fd_gradient_error(batch: &PairBatch, cfg: &LossConfig) -> f64 {
    let h = 1e-5;
    let grads = nt_xent_gradient(batch, cfg).expect("gradient");
    let mut worst: f64 = 0.0;
    for side in 0..2 {
        let analytic = if side == 0 { &grads.ground } else { &grads.aerial };
        let mut scale: f64 = 1e-8;
        let mut max_abs: f64 = 0.0;
        for i in 0..batch.rows() {
            for j in 0..batch.dim() {
                let perturb = |delta: f64| -> f64 {
                    let mut ground = batch.ground().clone();
                    let mut aerial = batch.aerial().clone();
                    if side == 0 {
                        ground.row_mut(i)[j] += delta;
                    } else {
                        aerial.row_mut(i)[j] += delta;
                    }
                    let moved = PairBatch::new(ground, aerial).expect("batch");
                    nt_xent_from_raw(&moved, cfg).expect("loss")
                };
                let fd = (perturb(h) - perturb(-h)) / (2.0 * h);
                scale = scale.max(fd.abs());
                max_abs = max_abs.max((analytic.row(i)[j] - fd).abs());
            }
        }
        worst = worst.max(max_abs / scale);
    }
    worst
}

pub fn run(args: &LossCheckArgs, cfg: &FileConfig) -> Result<()> {
    let seed = pick(args.seed, cfg.seed, 0);
    let tau = pick(args.tau, cfg.tau, 0.1);
    let base = LossConfig {
        tau,
        ..LossConfig::default()
    };

    let mut checks = Vec::new();

    // identical batch: per-anchor loss is exactly log 2
    let row = [0.6f64, 0.8, 0.0];
    let same = PairBatch::new(
        Matrix::from_flat(2, 3, vec![row[0], row[1], row[2], row[0], row[1], row[2]]).unwrap(),
        Matrix::from_flat(2, 3, vec![row[0], row[1], row[2], row[0], row[1], row[2]]).unwrap(),
    )
    .unwrap();
    let loss = nt_xent_cross_modal(&same, &base)?;
    checks.push(Check {
        name: "identical_batch_log2",
        value: (loss - std::f64::consts::LN_2).abs(),
        tolerance: 1e-9,
    });

    // orthogonal negatives at tau = 0.5: loss is log 2 - 2
    let ortho = PairBatch::new(
        Matrix::from_flat(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
        Matrix::from_flat(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
    )
    .unwrap();
    let cfg_half = LossConfig {
        tau: 0.5,
        ..LossConfig::default()
    };
    let loss = nt_xent_cross_modal(&ortho, &cfg_half)?;
    checks.push(Check {
        name: "orthogonal_negatives_closed_form",
        value: (loss - (std::f64::consts::LN_2 - 2.0)).abs(),
        tolerance: 1e-9,
    });

    // vectorized vs naive double loop
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let n = 2 + (i as usize * 3) % 10;
        let d = 4 + (i as usize * 7) % 24;
        let batch = random_batch(seed, &format!("naive:{i}"), n, d);
        let fast = nt_xent_from_raw(&batch, &base)?;
        let slow = naive_loss(&batch, &base);
        worst = worst.max((fast - slow).abs());
    }
    checks.push(Check {
        name: "naive_double_loop_agreement",
        value: worst,
        tolerance: 1e-10,
    });

    // analytic gradient vs central differences
    let mut worst = 0.0f64;
    for (i, (n, d)) in [(3usize, 6usize), (5, 8), (8, 12)].iter().enumerate() {
        let batch = random_batch(seed, &format!("fd:{i}"), *n, *d);
        worst = worst.max(fd_gradient_error(&batch, &base));
    }
    checks.push(Check {
        name: "gradient_finite_difference",
        value: worst,
        tolerance: 1e-4,
    });

    let all_pass = checks.iter().all(Check::pass);
    print_summary(&json!({
        "command": "loss-check",
        "seed": seed,
        "tau": tau,
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "value": c.value,
            "tolerance": c.tolerance,
            "pass": c.pass(),
        })).collect::<Vec<_>>(),
        "all_pass": all_pass,
    }));
    if all_pass {
        Ok(())
    } else {
        Err(CliError::data("loss checks failed"))
    }
}
