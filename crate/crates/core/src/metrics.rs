//! Retrieval evaluation: recall@k, recall@top-1%, and top-1@distance.
//!
//! Two correctness modes mirror the two aerial tile sets. In UCN mode a
//! prediction is correct iff its id equals the ground-truth id. In CN mode
//! the tiles overlap, so any prediction whose center lies within 0.05 mile
//! of the ground-truth GPS counts.

use crate::geodesy::{haversine_miles, GeoPoint};
use crate::{Error, Result};
use alloc::string::String;
use alloc::vec::Vec;

/// Distance within which a CN prediction counts as correct, in miles.
pub const CN_MATCH_MILES: f64 = 0.05;

/// Default distance thresholds (miles) for the top-1@t metric.
pub const DEFAULT_THRESHOLDS_MILES: [f64; 4] = [0.1, 0.2, 0.5, 1.0];

/// Correctness rule for recall metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum EvalMode {
    Ucn,
    Cn,
}

/// One ranked prediction; the GPS point is the retrieved tile's center.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: String,
    pub point: Option<GeoPoint>,
}

/// Ranked predictions for one query with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub query_id: String,
    pub gt_id: String,
    pub gt_point: GeoPoint,
    pub ranked: Vec<Prediction>,
}

impl PredictionRecord {
    pub fn new(
        query_id: String,
        gt_id: String,
        gt_point: GeoPoint,
        ranked: Vec<Prediction>,
    ) -> Result<Self> {
        if ranked.is_empty() {
            return Err(Error::EmptyPredictions);
        }
        for (i, p) in ranked.iter().enumerate() {
            if ranked[..i].iter().any(|q| q.id == p.id) {
                return Err(Error::DuplicateId(p.id.clone()));
            }
        }
        Ok(Self {
            query_id,
            gt_id,
            gt_point,
            ranked,
        })
    }
}

/// A nonempty set of per-query prediction records.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    records: Vec<PredictionRecord>,
}

impl PredictionSet {
    pub fn new(records: Vec<PredictionRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyPredictions);
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn record_hit(rec: &PredictionRecord, k: usize, mode: EvalMode, cn_miles: f64) -> Result<bool> {
    let prefix = &rec.ranked[..k.min(rec.ranked.len())];
    match mode {
        EvalMode::Ucn => Ok(prefix.iter().any(|p| p.id == rec.gt_id)),
        EvalMode::Cn => {
            for p in prefix {
                let point = p.point.ok_or_else(|| Error::MissingPredictionPoint {
                    query_id: rec.query_id.clone(),
                })?;
                if haversine_miles(&point, &rec.gt_point) <= cn_miles {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

/// Fraction of queries whose first `k` predictions are correct under `mode`.
/// Queries with fewer than `k` predictions are evaluated on what they have.
pub fn recall_at_k(set: &PredictionSet, k: usize, mode: EvalMode, cn_miles: f64) -> Result<f64> {
    if k < 1 {
        return Err(Error::KOutOfRange { k, len: usize::MAX });
    }
    let mut hits = 0usize;
    for rec in set.records() {
        if record_hit(rec, k, mode, cn_miles)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / set.len() as f64)
}

/// `recall@k` with `k = ceil(pct/100 * gallery_size)`.
pub fn recall_at_percent(
    set: &PredictionSet,
    gallery_size: usize,
    pct: f64,
    mode: EvalMode,
    cn_miles: f64,
) -> Result<f64> {
    let k = percent_k(gallery_size, pct)?;
    recall_at_k(set, k, mode, cn_miles)
}

/// The k used by [`recall_at_percent`]; ceiling keeps it at least 1.
pub fn percent_k(gallery_size: usize, pct: f64) -> Result<usize> {
    if gallery_size < 1 {
        return Err(Error::InvalidParameter("gallery_size must be >= 1"));
    }
    if !(pct.is_finite() && pct > 0.0) {
        return Err(Error::InvalidParameter("pct must be > 0"));
    }
    let k = crate::math::ceil(pct / 100.0 * gallery_size as f64) as usize;
    Ok(k.max(1))
}

/// Fraction of queries whose top-1 prediction lies within `t_miles` of the
/// ground truth.
pub fn top1_at_threshold(set: &PredictionSet, t_miles: f64) -> Result<f64> {
    if !(t_miles.is_finite() && t_miles > 0.0) {
        return Err(Error::InvalidParameter("threshold must be > 0 miles"));
    }
    let mut hits = 0usize;
    for rec in set.records() {
        let top = &rec.ranked[0];
        let point = top.point.ok_or_else(|| Error::MissingPredictionPoint {
            query_id: rec.query_id.clone(),
        })?;
        if haversine_miles(&point, &rec.gt_point) <= t_miles {
            hits += 1;
        }
    }
    Ok(hits as f64 / set.len() as f64)
}

/// Evaluation request for [`evaluate`].
#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub mode: EvalMode,
    pub ks: Vec<usize>,
    pub thresholds_miles: Vec<f64>,
    /// Size of the gallery the predictions were retrieved from.
    pub gallery_size: usize,
    /// Size of the unreduced gallery; recall@1% is computed against this and
    /// reported as null when the current gallery cannot reach 1% of it.
    pub full_gallery_size: Option<usize>,
    pub cn_match_miles: f64,
    pub recall_percent: f64,
}

impl EvalConfig {
    pub fn new(mode: EvalMode, gallery_size: usize) -> Self {
        Self {
            mode,
            ks: alloc::vec![1, 5, 10],
            thresholds_miles: DEFAULT_THRESHOLDS_MILES.to_vec(),
            gallery_size,
            full_gallery_size: None,
            cn_match_miles: CN_MATCH_MILES,
            recall_percent: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecallEntry {
    pub k: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThresholdEntry {
    pub miles: f64,
    pub fraction: f64,
}

/// All metrics of one evaluation run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub mode: EvalMode,
    pub gallery_size: usize,
    pub queries: usize,
    pub recall_at: Vec<RecallEntry>,
    /// Null when the gallery is smaller than 1% of the full gallery.
    pub recall_at_1pct: Option<f64>,
    /// The k that recall_at_1pct used, when it was computed.
    pub recall_1pct_k: Option<usize>,
    pub top1_at_threshold: Vec<ThresholdEntry>,
    /// Queries whose ranking was shorter than the largest requested k.
    pub short_rankings: usize,
}

/// Runs the full protocol over one prediction set.
pub fn evaluate(set: &PredictionSet, cfg: &EvalConfig) -> Result<MetricsReport> {
    let mut recall_at = Vec::with_capacity(cfg.ks.len());
    for &k in &cfg.ks {
        recall_at.push(RecallEntry {
            k,
            fraction: recall_at_k(set, k, cfg.mode, cfg.cn_match_miles)?,
        });
    }

    let reference = cfg.full_gallery_size.unwrap_or(cfg.gallery_size);
    let pct_k = percent_k(reference, cfg.recall_percent)?;
    let (recall_at_1pct, recall_1pct_k) = if cfg.gallery_size < pct_k {
        (None, None)
    } else {
        (
            Some(recall_at_k(set, pct_k, cfg.mode, cfg.cn_match_miles)?),
            Some(pct_k),
        )
    };

    let mut top1 = Vec::with_capacity(cfg.thresholds_miles.len());
    for &t in &cfg.thresholds_miles {
        top1.push(ThresholdEntry {
            miles: t,
            fraction: top1_at_threshold(set, t)?,
        });
    }

    let max_k = cfg.ks.iter().copied().max().unwrap_or(1).max(pct_k);
    let short_rankings = set
        .records()
        .iter()
        .filter(|r| r.ranked.len() < max_k.min(cfg.gallery_size))
        .count();

    Ok(MetricsReport {
        mode: cfg.mode,
        gallery_size: cfg.gallery_size,
        queries: set.len(),
        recall_at,
        recall_at_1pct,
        recall_1pct_k,
        top1_at_threshold: top1,
        short_rankings,
    })
}
