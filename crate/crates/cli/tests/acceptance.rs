//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `--nocapture`). Criteria are serialized through a global
//! lock so the timed ones see the whole machine.

use crossview_cli::batch::top_k_batch;
use crossview_core::dataset::{tile_grid, REGION_SIDE_PX, REGION_ZOOM, TILE_SIDE_PX};
use crossview_core::gallery::{EmbeddingRecord, Gallery};
use crossview_core::geodesy::{
    accept_video, global_pixel_to_gps, gps_to_global_pixel, world_pixels, GeoPoint, PixelCoord,
    MU_LOWER_DEGREES, MU_UPPER_DEGREES,
};
use crossview_core::hierarchical::{
    reduce_gallery, run_pipeline, ClipQuery, PipelineConfig, ReductionPolicy,
};
use crossview_core::loss::{
    nt_xent_from_raw, nt_xent_gradient, LossConfig, PairBatch,
};
use crossview_core::matrix::Matrix;
use crossview_core::metrics::{
    percent_k, recall_at_k, top1_at_threshold, EvalMode, Prediction, PredictionRecord,
    PredictionSet, CN_MATCH_MILES,
};
use crossview_core::synth::{gen_trajectory, generate_dataset, SynthConfig};
use crossview_core::trainer::{gen_toy_pairs, init_projection, train_toy_encoders, TrainConfig};
use std::sync::Mutex;
use std::time::Instant;

static GATE: Mutex<()> = Mutex::new(());

fn serialize() -> std::sync::MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

struct XorShift(u64);

impl XorShift {
    fn new(seed: u64) -> Self {
        Self(seed | 1)
    }

    fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn centered_f32(&mut self) -> f32 {
        (self.unit() - 0.5) as f32
    }
}

// --- criterion 1: loss fidelity ---------------------------------------------

/// Literal double-loop transcription of the loss definition.
fn oracle_loss(ground: &[Vec<f64>], aerial: &[Vec<f64>], tau: f64, symmetrized: bool) -> f64 {
    let unit = |v: &[f64]| -> Vec<f64> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect()
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let g: Vec<Vec<f64>> = ground.iter().map(|r| unit(r)).collect();
    let a: Vec<Vec<f64>> = aerial.iter().map(|r| unit(r)).collect();
    let n = g.len();
    let one_side = |anchors: &[Vec<f64>], others: &[Vec<f64>]| -> f64 {
        let mut total = 0.0;
        for i in 0..n {
            let mut denom = 0.0;
            for k in 0..n {
                if k != i {
                    denom += (dot(&anchors[i], &anchors[k]) / tau).exp();
                    denom += (dot(&anchors[i], &others[k]) / tau).exp();
                }
            }
            total += -((dot(&anchors[i], &others[i]) / tau).exp() / denom).ln();
        }
        total
    };
    if symmetrized {
        (one_side(&g, &a) + one_side(&a, &g)) / (2.0 * n as f64)
    } else {
        one_side(&g, &a) / n as f64
    }
}

fn random_rows(rng: &mut XorShift, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.unit() - 0.5).collect())
        .collect()
}

fn batch_of(rows_g: &[Vec<f64>], rows_a: &[Vec<f64>]) -> PairBatch {
    let n = rows_g.len();
    let d = rows_g[0].len();
    let flat = |rows: &[Vec<f64>]| {
        Matrix::from_flat(n, d, rows.iter().flatten().copied().collect()).unwrap()
    };
    PairBatch::new(flat(rows_g), flat(rows_a)).unwrap()
}

#[test]
fn criterion_01_loss_fidelity() {
    let _gate = serialize();
    let started = Instant::now();
    let mut rng = XorShift::new(0xC1);

    let mut worst_loss_diff = 0.0f64;
    for _ in 0..100 {
        let n = 2 + (rng.next_u64() % 15) as usize;
        let d = 4 + (rng.next_u64() % 61) as usize;
        let tau = 0.05 + rng.unit() * 0.95;
        let g = random_rows(&mut rng, n, d);
        let a = random_rows(&mut rng, n, d);
        let cfg = LossConfig {
            tau,
            ..LossConfig::default()
        };
        let fast = nt_xent_from_raw(&batch_of(&g, &a), &cfg).unwrap();
        let slow = oracle_loss(&g, &a, tau, cfg.symmetrized);
        worst_loss_diff = worst_loss_diff.max((fast - slow).abs());
    }
    assert!(
        worst_loss_diff <= 1e-10,
        "loss vs naive oracle: {worst_loss_diff:e}"
    );

    let mut worst_grad_rel = 0.0f64;
    let h = 1e-5;
    for _ in 0..100 {
        let n = 2 + (rng.next_u64() % 15) as usize;
        let d = 4 + (rng.next_u64() % 61) as usize;
        let tau = 0.05 + rng.unit() * 0.95;
        let cfg = LossConfig {
            tau,
            ..LossConfig::default()
        };
        let g = random_rows(&mut rng, n, d);
        let a = random_rows(&mut rng, n, d);
        let grads = nt_xent_gradient(&batch_of(&g, &a), &cfg).unwrap();

        let mut scale = 1e-8f64;
        let mut max_abs = 0.0f64;
        for side in 0..2 {
            let analytic = if side == 0 { &grads.ground } else { &grads.aerial };
            for i in 0..n {
                for j in 0..d {
                    let eval = |delta: f64| -> f64 {
                        let mut g2 = g.clone();
                        let mut a2 = a.clone();
                        if side == 0 {
                            g2[i][j] += delta;
                        } else {
                            a2[i][j] += delta;
                        }
                        nt_xent_from_raw(&batch_of(&g2, &a2), &cfg).unwrap()
                    };
                    let fd = (eval(h) - eval(-h)) / (2.0 * h);
                    scale = scale.max(fd.abs());
                    max_abs = max_abs.max((analytic.row(i)[j] - fd).abs());
                }
            }
        }
        worst_grad_rel = worst_grad_rel.max(max_abs / scale);
    }
    assert!(
        worst_grad_rel < 1e-4,
        "gradient vs finite differences: {worst_grad_rel:e}"
    );

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "PASS criterion 1 (loss fidelity): loss_diff={worst_loss_diff:.2e} grad_rel={worst_grad_rel:.2e} elapsed={elapsed:.2?}"
    );
}

#[test]
fn criterion_02_closed_forms() {
    let _gate = serialize();
    // identical batch: per-anchor loss is log 2 for any tau
    let u = vec![0.28f64, -0.96, 0.0];
    let mut worst = 0.0f64;
    for tau in [0.05, 0.1, 0.31, 1.0] {
        let cfg = LossConfig {
            tau,
            ..LossConfig::default()
        };
        let loss = nt_xent_from_raw(&batch_of(&[u.clone(), u.clone()], &[u.clone(), u.clone()]), &cfg)
            .unwrap();
        worst = worst.max((loss - std::f64::consts::LN_2).abs());
    }
    assert!(worst <= 1e-9, "identical-batch deviation {worst:e}");

    // orthogonal negatives at N = 2: loss is log 2 - 1/tau
    let e1 = vec![1.0f64, 0.0];
    let e2 = vec![0.0f64, 1.0];
    let mut worst_ortho = 0.0f64;
    for tau in [0.25, 0.5, 1.0] {
        let cfg = LossConfig {
            tau,
            ..LossConfig::default()
        };
        let loss = nt_xent_from_raw(
            &batch_of(&[e1.clone(), e2.clone()], &[e1.clone(), e2.clone()]),
            &cfg,
        )
        .unwrap();
        let expected = std::f64::consts::LN_2 - 1.0 / tau;
        worst_ortho = worst_ortho.max((loss - expected).abs());
    }
    assert!(worst_ortho <= 1e-9, "orthogonal deviation {worst_ortho:e}");
    println!(
        "PASS criterion 2 (closed forms): identical={worst:.2e} orthogonal={worst_ortho:.2e}"
    );
}

#[test]
fn criterion_03_end_to_end_learnability() {
    let _gate = serialize();
    let started = Instant::now();

    let train = gen_toy_pairs(11, 2000, 32, 0.05);
    let held = gen_toy_pairs(12, 500, 32, 0.05);

    let recall_at_1 = |w_ground: &Matrix, w_aerial: &Matrix| -> f64 {
        let ground = held.ground.matmul(w_ground).unwrap();
        let aerial = held.aerial.matmul(w_aerial).unwrap();
        let to_records = |m: &Matrix| -> Vec<EmbeddingRecord> {
            (0..m.rows())
                .map(|i| {
                    EmbeddingRecord::new(
                        format!("pair-{i:04}"),
                        m.row(i).iter().map(|&v| v as f32).collect(),
                    )
                })
                .collect()
        };
        let gallery = Gallery::build(to_records(&aerial)).unwrap();
        let queries: Vec<Vec<f32>> = to_records(&ground).into_iter().map(|r| r.vector).collect();
        let results = gallery.top_k_many(&queries, 1).unwrap();
        let records: Vec<PredictionRecord> = results
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let anywhere = GeoPoint::new(0.0, 0.0).unwrap();
                PredictionRecord::new(
                    format!("pair-{i:04}"),
                    format!("pair-{i:04}"),
                    anywhere,
                    r.ranked
                        .into_iter()
                        .map(|s| Prediction {
                            id: s.id,
                            point: None,
                        })
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        let set = PredictionSet::new(records).unwrap();
        recall_at_k(&set, 1, EvalMode::Ucn, CN_MATCH_MILES).unwrap()
    };

    let untrained = recall_at_1(
        &init_projection(77, "init:ground", 32, 16),
        &init_projection(77, "init:aerial", 32, 16),
    );
    assert!(untrained <= 0.02, "random-init recall {untrained}");

    let cfg = TrainConfig {
        epochs: 40,
        lr: 0.5,
        batch_size: 64,
        seed: 13,
        loss: LossConfig::default(),
    };
    let out = train_toy_encoders(&train, 16, &cfg).unwrap();
    assert!(
        out.loss_history.last().unwrap() < out.loss_history.first().unwrap(),
        "loss did not descend: {:?}",
        out.loss_history
    );
    let trained = recall_at_1(&out.w_ground, &out.w_aerial);
    assert!(trained >= 0.9, "trained recall {trained}");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "PASS criterion 3 (learnability): recall untrained={untrained:.3} trained={trained:.3} elapsed={elapsed:.2?}"
    );
}

// --- criterion 4: retrieval exactness ---------------------------------------

/// Independent selection oracle: full scan, full ordering by
/// (score desc, id asc), via nth-element partition plus prefix sort.
fn oracle_top_k(gallery: &Gallery, query: &[f32], k: usize) -> Vec<(String, f64)> {
    let norm = query.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
    let q64: Vec<f64> = query.iter().map(|&x| x as f64 / norm).collect();
    let mut scored: Vec<(f64, u32)> = (0..gallery.len())
        .map(|row| {
            let score: f64 = gallery
                .vector_at(row)
                .iter()
                .zip(&q64)
                .map(|(&v, q)| v as f64 * q)
                .sum();
            (score.clamp(-1.0, 1.0), row as u32)
        })
        .collect();
    let better = |a: &(f64, u32), b: &(f64, u32)| -> std::cmp::Ordering {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then_with(|| gallery.id_at(a.1 as usize).cmp(gallery.id_at(b.1 as usize)))
    };
    if k < scored.len() {
        scored.select_nth_unstable_by(k, better);
        scored.truncate(k);
    }
    scored.sort_unstable_by(better);
    scored
        .into_iter()
        .map(|(score, row)| (gallery.id_at(row as usize).to_string(), score))
        .collect()
}

#[test]
fn criterion_04_retrieval_exactness() {
    let _gate = serialize();
    let started = Instant::now();
    let n = 100_000usize;
    let nq = 10_000usize;
    let dim = 16usize;
    let k = 10usize;

    let mut rng = XorShift::new(0xC4);
    let records: Vec<EmbeddingRecord> = (0..n)
        .map(|i| {
            EmbeddingRecord::new(
                format!("g{i:06}"),
                (0..dim).map(|_| rng.centered_f32()).collect(),
            )
        })
        .collect();
    let gallery = Gallery::build(records).unwrap();
    let queries: Vec<Vec<f32>> = (0..nq)
        .map(|_| (0..dim).map(|_| rng.centered_f32()).collect())
        .collect();

    let serial = gallery.top_k_many(&queries, k).unwrap();
    let mut worst_score_diff = 0.0f64;
    for (query, result) in queries.iter().zip(&serial) {
        let expected = oracle_top_k(&gallery, query, k);
        assert_eq!(expected.len(), result.ranked.len());
        for (want, got) in expected.iter().zip(&result.ranked) {
            assert_eq!(want.0, got.id, "oracle and implementation diverge");
            worst_score_diff = worst_score_diff.max((want.1 - got.score).abs());
        }
    }
    assert!(worst_score_diff <= 1e-12, "score drift {worst_score_diff:e}");

    for workers in [2usize, 4, 8] {
        let parallel = top_k_batch(&gallery, &queries, k, workers).unwrap();
        assert_eq!(serial.len(), parallel.len());
        for (a, b) in serial.iter().zip(&parallel) {
            assert_eq!(a.ranked.len(), b.ranked.len());
            for (x, y) in a.ranked.iter().zip(&b.ranked) {
                assert_eq!(x.id, y.id);
                assert_eq!(
                    x.score.to_bits(),
                    y.score.to_bits(),
                    "parallel score differs from serial"
                );
            }
        }
    }

    println!(
        "PASS criterion 4 (retrieval exactness): {nq}x{n} ids exact, score_diff<={worst_score_diff:.1e}, workers 2/4/8 bitwise, elapsed={:.2?}",
        started.elapsed()
    );
}

// --- criterion 5: metric oracle ----------------------------------------------

fn random_prediction_set(rng: &mut XorShift, queries: usize) -> PredictionSet {
    let records: Vec<PredictionRecord> = (0..queries)
        .map(|q| {
            let gt_point = GeoPoint::new(
                29.0 + rng.unit() * 4.0,
                -101.0 + rng.unit() * 4.0,
            )
            .unwrap();
            let len = 1 + (rng.next_u64() % 12) as usize;
            let gt_rank = rng.next_u64() % (len as u64 + 2);
            let ranked: Vec<Prediction> = (0..len)
                .map(|r| {
                    let id = if r as u64 == gt_rank {
                        "gt".to_string()
                    } else {
                        format!("d{r}")
                    };
                    // up to ~1.4 miles of scatter around the truth
                    let point = GeoPoint::new(
                        gt_point.lat() + (rng.unit() - 0.5) * 0.04,
                        gt_point.lon() + (rng.unit() - 0.5) * 0.04,
                    )
                    .unwrap();
                    Prediction {
                        id,
                        point: Some(point),
                    }
                })
                .collect();
            PredictionRecord::new(format!("q{q}"), "gt".into(), gt_point, ranked).unwrap()
        })
        .collect();
    PredictionSet::new(records).unwrap()
}

#[test]
fn criterion_05_metric_oracle() {
    let _gate = serialize();
    let mut rng = XorShift::new(0xC5);
    let thresholds = [0.1, 0.2, 0.5, 1.0];

    for round in 0..100 {
        let queries = 1 + (rng.next_u64() % 40) as usize;
        let set = random_prediction_set(&mut rng, queries);
        let total = set.len() as f64;

        for k in 1..=12usize {
            // UCN oracle: linear scan for the ground-truth id in the prefix
            let mut ucn_hits = 0usize;
            let mut cn_hits = 0usize;
            for rec in set.records() {
                let prefix = &rec.ranked[..k.min(rec.ranked.len())];
                if prefix.iter().any(|p| p.id == rec.gt_id) {
                    ucn_hits += 1;
                }
                if prefix.iter().any(|p| {
                    crossview_core::geodesy::haversine_miles(&p.point.unwrap(), &rec.gt_point)
                        <= CN_MATCH_MILES
                }) {
                    cn_hits += 1;
                }
            }
            let ucn = recall_at_k(&set, k, EvalMode::Ucn, CN_MATCH_MILES).unwrap();
            let cn = recall_at_k(&set, k, EvalMode::Cn, CN_MATCH_MILES).unwrap();
            assert_eq!(ucn, ucn_hits as f64 / total, "round {round} k {k}");
            assert_eq!(cn, cn_hits as f64 / total, "round {round} k {k}");
        }

        // recall@1% delegates to recall@ceil(pct/100 * gallery)
        for gallery_size in [37usize, 100, 243_000] {
            let k = percent_k(gallery_size, 1.0).unwrap();
            assert_eq!(k, (gallery_size as f64 / 100.0).ceil().max(1.0) as usize);
            let direct = recall_at_k(&set, k, EvalMode::Ucn, CN_MATCH_MILES).unwrap();
            let via_pct = crossview_core::metrics::recall_at_percent(
                &set,
                gallery_size,
                1.0,
                EvalMode::Ucn,
                CN_MATCH_MILES,
            )
            .unwrap();
            assert_eq!(direct, via_pct);
        }

        let mut last = 0.0;
        for t in thresholds {
            let mut hits = 0usize;
            for rec in set.records() {
                let top = rec.ranked[0].point.unwrap();
                if crossview_core::geodesy::haversine_miles(&top, &rec.gt_point) <= t {
                    hits += 1;
                }
            }
            let got = top1_at_threshold(&set, t).unwrap();
            assert_eq!(got, hits as f64 / total, "round {round} t {t}");
            assert!(got >= last, "top1@t not monotone");
            last = got;
        }

        // monotonicity in k on every set
        let mut last = 0.0;
        for k in 1..=12usize {
            let r = recall_at_k(&set, k, EvalMode::Ucn, CN_MATCH_MILES).unwrap();
            assert!(r >= last);
            last = r;
        }
    }
    println!("PASS criterion 5 (metric oracle): 100 randomized sets match brute force exactly");
}

// --- criterion 6: hierarchical property --------------------------------------

#[test]
fn criterion_06_hierarchical_improvement() {
    let _gate = serialize();
    let started = Instant::now();
    // dim 8 keeps region signatures overlapping enough that step-1 errors
    // cross region boundaries, the failure mode gallery reduction repairs
    let cfg = SynthConfig {
        seed: 6,
        n_videos: 1000,
        clips_per_video: 16,
        n_regions: 100,
        dim: 8,
        noise_sigma: 0.15,
        region_signature_strength: 0.8,
        ..SynthConfig::default()
    };
    let ds = generate_dataset(&cfg).unwrap();
    let tiles = Gallery::build(ds.tile_embeddings.clone()).unwrap();
    let regions = Gallery::build(ds.region_embeddings.clone()).unwrap();

    let queries: Vec<ClipQuery> = ds
        .clip_embeddings
        .iter()
        .map(|rec| ClipQuery {
            clip_id: rec.id.clone(),
            video_id: rec.id.rsplit_once(':').unwrap().0.to_string(),
            vector: rec.vector.clone(),
            gt_tile_id: Some(ds.clip_gt[&rec.id].clone()),
        })
        .collect();

    let policy = ReductionPolicy::TopPercent(1.0);
    let pipe_cfg = PipelineConfig {
        clip_k: 10,
        screen_k: 10,
        sequence_limit: None,
        policy,
    };
    let result = run_pipeline(&queries, &tiles, &regions, &ds.region_to_tiles, &pipe_cfg).unwrap();

    // screening accuracy at desk scale (strength 0.8, sigma 0.15)
    let screened_right = result
        .videos
        .iter()
        .filter(|v| v.ranked_regions.ranked[0].id == ds.video_region[&v.video_id])
        .count();
    let screening_accuracy = screened_right as f64 / result.videos.len() as f64;
    assert!(
        screening_accuracy >= 0.9,
        "screening accuracy {screening_accuracy}"
    );

    let mut step1_hits = 0usize;
    let mut step4_hits = 0usize;
    let mut clips = 0usize;
    let mut retained = 0usize;
    let mut rank_violations = 0usize;
    for video in &result.videos {
        let reduced = reduce_gallery(&video.ranked_regions, policy, &ds.region_to_tiles, &tiles)
            .unwrap();
        for clip in &video.clips {
            clips += 1;
            let gt = &ds.clip_gt[&clip.clip_id];
            if clip.step1.ranked[0].id == *gt {
                step1_hits += 1;
            }
            if clip.step4.ranked[0].id == *gt {
                step4_hits += 1;
            }
            if clip.retained_gt == Some(true) {
                retained += 1;
                let q = queries.iter().find(|q| q.clip_id == clip.clip_id).unwrap();
                let r1 = tiles.rank_of(&q.vector, gt).unwrap();
                let r4 = reduced.rank_of(&q.vector, gt).unwrap();
                if r4 > r1 {
                    rank_violations += 1;
                }
            }
        }
    }
    let step1_recall = step1_hits as f64 / clips as f64;
    let step4_recall = step4_hits as f64 / clips as f64;
    assert_eq!(rank_violations, 0, "rank must never worsen when GT retained");
    assert!(
        step4_recall > step1_recall,
        "step4 {step4_recall} !> step1 {step1_recall}"
    );

    // retained-GT fraction grows as the policy loosens
    let mut last_fraction = -1.0f64;
    for policy in [
        ReductionPolicy::TopPercent(1.0),
        ReductionPolicy::TopN(10),
        ReductionPolicy::TopPercent(10.0),
        ReductionPolicy::TopPercent(100.0),
    ] {
        let cfg = PipelineConfig {
            policy,
            ..pipe_cfg.clone()
        };
        let out = run_pipeline(&queries, &tiles, &regions, &ds.region_to_tiles, &cfg).unwrap();
        let mut kept = 0usize;
        let mut total = 0usize;
        for video in &out.videos {
            for clip in &video.clips {
                total += 1;
                if clip.retained_gt == Some(true) {
                    kept += 1;
                }
            }
        }
        let fraction = kept as f64 / total as f64;
        assert!(
            fraction + 1e-12 >= last_fraction,
            "retention dropped when loosening: {fraction} < {last_fraction}"
        );
        last_fraction = fraction;
    }

    println!(
        "PASS criterion 6 (hierarchical): step1 R@1={step1_recall:.3} step4 R@1={step4_recall:.3} screening={screening_accuracy:.3} retained={}/{} elapsed={:.2?}",
        retained, clips, started.elapsed()
    );
}

// --- criterion 7: geometry ----------------------------------------------------

#[test]
fn criterion_07_geometry() {
    let _gate = serialize();
    let mut rng = XorShift::new(0xC7);

    // Mercator roundtrip within one pixel, 10k points over zooms 1..=19
    for _ in 0..10_000 {
        let zoom = 1 + (rng.next_u64() % 19) as u8;
        let world = world_pixels(zoom);
        let px = PixelCoord::new(rng.next_u64() % world, rng.next_u64() % world, zoom).unwrap();
        let back = gps_to_global_pixel(&global_pixel_to_gps(&px), zoom).unwrap();
        assert!(px.x().abs_diff(back.x()) <= 1 && px.y().abs_diff(back.y()) <= 1);
    }

    // 1000 random regions: exact 49-tile partition
    let world = world_pixels(REGION_ZOOM);
    for _ in 0..1000 {
        let origin = PixelCoord::new(
            rng.next_u64() % (world - REGION_SIDE_PX),
            rng.next_u64() % (world - REGION_SIDE_PX),
            REGION_ZOOM,
        )
        .unwrap();
        let region = crossview_core::dataset::LargeAerialRegion::new("r".into(), origin).unwrap();
        let tiles = tile_grid(&region);
        assert_eq!(tiles.len(), 49);
        let mut origins: Vec<(u64, u64)> =
            tiles.iter().map(|t| (t.origin().x(), t.origin().y())).collect();
        origins.sort_unstable();
        origins.dedup();
        assert_eq!(origins.len(), 49, "tiles overlap");
        for t in &tiles {
            let (row, col) = t.grid_rc.unwrap();
            assert_eq!(t.origin().x(), origin.x() + col as u64 * TILE_SIDE_PX);
            assert_eq!(t.origin().y(), origin.y() + row as u64 * TILE_SIDE_PX);
        }
        let area: u64 = tiles.iter().map(|t| t.side_px() * t.side_px()).sum();
        assert_eq!(area, REGION_SIDE_PX * REGION_SIDE_PX);
    }

    // CN crops centered in the interior, clamped at the edges; every clip
    // label falls in exactly one grid tile
    let cfg = SynthConfig {
        seed: 7,
        n_videos: 100,
        clips_per_video: 12,
        n_regions: 10,
        dim: 8,
        ..SynthConfig::default()
    };
    let ds = generate_dataset(&cfg).unwrap();
    let mut interior = 0usize;
    let mut clamped = 0usize;
    for clip in &ds.clips {
        let region_id = &ds.video_region[&clip.video_id];
        let region = ds.regions.iter().find(|r| &r.region_id == region_id).unwrap();
        let px = gps_to_global_pixel(&clip.label, REGION_ZOOM).unwrap();

        let grid = tile_grid(region);
        let containing = grid
            .iter()
            .filter(|t| {
                px.x() >= t.origin().x()
                    && px.x() < t.origin().x() + TILE_SIDE_PX
                    && px.y() >= t.origin().y()
                    && px.y() < t.origin().y() + TILE_SIDE_PX
            })
            .count();
        assert_eq!(containing, 1, "label must land in exactly one grid tile");

        let crop = crossview_core::dataset::centered_crop(region, &clip.label, &clip.clip_id)
            .unwrap();
        let half = TILE_SIDE_PX / 2;
        let inside_x = px.x() >= region.origin().x() + half
            && px.x() + half < region.origin().x() + REGION_SIDE_PX;
        let inside_y = px.y() >= region.origin().y() + half
            && px.y() + half < region.origin().y() + REGION_SIDE_PX;
        if inside_x && inside_y {
            interior += 1;
            assert_eq!(crop.origin().x() + half, px.x());
            assert_eq!(crop.origin().y() + half, px.y());
        } else {
            clamped += 1;
            let on_x_edge = crop.origin().x() == region.origin().x()
                || crop.origin().x() + TILE_SIDE_PX == region.origin().x() + REGION_SIDE_PX;
            let on_y_edge = crop.origin().y() == region.origin().y()
                || crop.origin().y() + TILE_SIDE_PX == region.origin().y() + REGION_SIDE_PX;
            assert!(on_x_edge || on_y_edge);
        }
        // the crop never leaves the region
        assert!(crop.origin().x() >= region.origin().x());
        assert!(crop.origin().x() + TILE_SIDE_PX <= region.origin().x() + REGION_SIDE_PX);
    }
    println!(
        "PASS criterion 7 (geometry): roundtrips, 1000 partitions, crops interior={interior} clamped={clamped}"
    );
}

#[test]
fn criterion_08_filter_fidelity() {
    let _gate = serialize();
    // trajectories spanning stationary to too-fast
    let cfg = SynthConfig {
        seed: 8,
        n_videos: 1000,
        clips_per_video: 20,
        mu_target: (0.0, 0.006),
        ..SynthConfig::default()
    };
    let mut disagreements = 0usize;
    for index in 0..cfg.n_videos {
        let video = gen_trajectory(&cfg, index).unwrap();
        // independent ground truth: plain min/max scan
        let points = video.points();
        let (mut lat_lo, mut lat_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lon_lo, mut lon_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &points {
            lat_lo = lat_lo.min(p.lat());
            lat_hi = lat_hi.max(p.lat());
            lon_lo = lon_lo.min(p.lon());
            lon_hi = lon_hi.max(p.lon());
        }
        let mu = (lat_hi - lat_lo).max(lon_hi - lon_lo);
        let expected = (MU_LOWER_DEGREES..=MU_UPPER_DEGREES).contains(&mu);
        let got = accept_video(&points, MU_LOWER_DEGREES, MU_UPPER_DEGREES).unwrap();
        if expected != got {
            disagreements += 1;
        }
    }
    assert_eq!(disagreements, 0, "filter disagreed with generator truth");

    // every trajectory targeted inside the range passes
    let cfg = SynthConfig {
        seed: 88,
        n_videos: 1000,
        clips_per_video: 20,
        mu_target: (0.001, 0.004),
        ..SynthConfig::default()
    };
    let accepted = (0..cfg.n_videos)
        .filter(|&i| {
            let video = gen_trajectory(&cfg, i).unwrap();
            accept_video(&video.points(), MU_LOWER_DEGREES, MU_UPPER_DEGREES).unwrap()
        })
        .count();
    assert_eq!(accepted, 1000, "in-range trajectories must all pass");
    println!("PASS criterion 8 (filter fidelity): 1000 mixed + 1000 in-range, 100% agreement");
}

// --- criteria 9 and 10: performance and determinism ---------------------------

fn bin() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_crossview"))
}

fn run_ok(args: &[&str]) {
    let out = bin().args(args).output().expect("spawn crossview");
    assert!(
        out.status.success(),
        "crossview {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn criterion_09_performance() {
    let _gate = serialize();

    // 1k queries, 100k x 512 gallery, top-10, 4 workers, under 10 seconds
    let mut rng = XorShift::new(0xC9);
    let records: Vec<EmbeddingRecord> = (0..100_000)
        .map(|i| {
            EmbeddingRecord::new(
                format!("g{i:06}"),
                (0..512).map(|_| rng.centered_f32()).collect(),
            )
        })
        .collect();
    let gallery = Gallery::build(records).unwrap();
    let queries: Vec<Vec<f32>> = (0..1000)
        .map(|_| (0..512).map(|_| rng.centered_f32()).collect())
        .collect();

    let started = Instant::now();
    let results = top_k_batch(&gallery, &queries, 10, 4).unwrap();
    let query_time = started.elapsed();
    assert_eq!(results.len(), 1000);
    assert!(
        query_time.as_secs_f64() < 10.0,
        "1k x 100k x 512 top-10 took {query_time:?}"
    );
    drop(gallery);

    // full synthetic end-to-end run, 1k videos, under 5 minutes
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let p = |name: &str| dir.join(name).display().to_string();
    let started = Instant::now();
    run_ok(&[
        "synth",
        "--out-dir",
        &dir.display().to_string(),
        "--seed",
        "9",
        "--videos",
        "1000",
        "--clips-per-video",
        "16",
        "--regions",
        "100",
        "--dim",
        "32",
        "--noise-sigma",
        "0.15",
        "--strength",
        "0.8",
    ]);
    run_ok(&[
        "pipeline",
        "--clip-embeddings",
        &p("clips.bin"),
        "--tile-embeddings",
        &p("tiles.bin"),
        "--region-embeddings",
        &p("regions.bin"),
        "--manifest",
        &p("dataset.jsonl"),
        "--ground-truth",
        &p("ground_truth.jsonl"),
        "--k",
        "10",
        "--policy",
        "top-pct:1",
        "--workers",
        "4",
        "--output",
        &p("pipeline.jsonl"),
    ]);
    run_ok(&[
        "retrieve",
        "--gallery",
        &p("tiles.bin"),
        "--queries",
        &p("clips.bin"),
        "--k",
        "10",
        "--workers",
        "4",
        "--output",
        &p("step1.jsonl"),
    ]);
    run_ok(&[
        "evaluate",
        "--retrievals",
        &p("step1.jsonl"),
        "--manifest",
        &p("dataset.jsonl"),
        "--ground-truth",
        &p("ground_truth.jsonl"),
        "--mode",
        "ucn",
        "--output",
        &p("report.json"),
    ]);
    let e2e = started.elapsed();
    assert!(e2e.as_secs_f64() < 300.0, "end-to-end took {e2e:?}");
    println!(
        "PASS criterion 9 (performance): top-10 batch {query_time:.2?}, end-to-end {e2e:.2?}"
    );
}

#[test]
fn criterion_10_determinism() {
    let _gate = serialize();
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = |name: &str, workers: &str| -> std::path::PathBuf {
        let dir = tmp.path().join(name);
        let p = |file: &str| dir.join(file).display().to_string();
        run_ok(&[
            "synth",
            "--out-dir",
            &dir.display().to_string(),
            "--seed",
            "10",
            "--videos",
            "200",
            "--clips-per-video",
            "8",
            "--regions",
            "50",
            "--dim",
            "32",
            "--noise-sigma",
            "0.15",
            "--strength",
            "0.8",
        ]);
        run_ok(&[
            "retrieve",
            "--gallery",
            &p("tiles.bin"),
            "--queries",
            &p("clips.bin"),
            "--k",
            "10",
            "--workers",
            workers,
            "--output",
            &p("step1.jsonl"),
        ]);
        run_ok(&[
            "screen",
            "--retrievals",
            &p("step1.jsonl"),
            "--tile-embeddings",
            &p("tiles.bin"),
            "--region-embeddings",
            &p("regions.bin"),
            "--k",
            "10",
            "--output",
            &p("screened.jsonl"),
        ]);
        run_ok(&[
            "pipeline",
            "--clip-embeddings",
            &p("clips.bin"),
            "--tile-embeddings",
            &p("tiles.bin"),
            "--region-embeddings",
            &p("regions.bin"),
            "--manifest",
            &p("dataset.jsonl"),
            "--ground-truth",
            &p("ground_truth.jsonl"),
            "--k",
            "10",
            "--policy",
            "top-pct:2",
            "--workers",
            workers,
            "--output",
            &p("pipeline.jsonl"),
        ]);
        run_ok(&[
            "evaluate",
            "--retrievals",
            &p("step1.jsonl"),
            "--manifest",
            &p("dataset.jsonl"),
            "--ground-truth",
            &p("ground_truth.jsonl"),
            "--mode",
            "cn",
            "--output",
            &p("report.json"),
        ]);
        dir
    };

    let a = run_dir("a", "1");
    let b = run_dir("b", "8");
    for name in [
        "videos.jsonl",
        "dataset.jsonl",
        "clips.bin",
        "tiles.bin",
        "regions.bin",
        "ground_truth.jsonl",
        "step1.jsonl",
        "screened.jsonl",
        "pipeline.jsonl",
        "report.json",
    ] {
        let left = std::fs::read(a.join(name)).unwrap();
        let right = std::fs::read(b.join(name)).unwrap();
        assert_eq!(left, right, "{name} differs between runs (workers 1 vs 8)");
    }
    println!("PASS criterion 10 (determinism): all outputs byte-identical across worker counts");
}
