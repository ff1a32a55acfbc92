//! The four-step hierarchical pipeline.
//!
//! Step 1 retrieves a tile per clip from the full gallery. Step 2 averages
//! the predicted tile embeddings of a video and matches the result against
//! large-region embeddings (the screening step). Step 3 keeps only the tiles
//! of the top-ranked regions as a per-video reduced gallery. Step 4 re-runs
//! clip retrieval against that reduced gallery.

use crate::gallery::{Gallery, QueryResult};
use crate::math;
use crate::{Error, Result};
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Region ids to the tile ids they contain.
pub type RegionToTiles = BTreeMap<String, Vec<String>>;

/// Ordered tile embeddings predicted for one video's clips.
#[derive(Debug, Clone)]
pub struct AerialSequence {
    pub video_id: String,
    tile_vectors: Vec<Vec<f32>>,
}

impl AerialSequence {
    pub fn new(video_id: String, tile_vectors: Vec<Vec<f32>>) -> Result<Self> {
        let first = tile_vectors.first().ok_or(Error::EmptyPredictions)?;
        let dim = first.len();
        if tile_vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: tile_vectors.iter().map(|v| v.len()).find(|&l| l != dim).unwrap_or(dim),
            });
        }
        Ok(Self {
            video_id,
            tile_vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.tile_vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tile_vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f32>] {
        &self.tile_vectors
    }

    /// Copy truncated to the first `limit` entries (all, if shorter).
    pub fn truncated(&self, limit: usize) -> Result<AerialSequence> {
        if limit == 0 {
            return Err(Error::InvalidParameter("sequence limit must be >= 1"));
        }
        AerialSequence::new(
            self.video_id.clone(),
            self.tile_vectors.iter().take(limit).cloned().collect(),
        )
    }
}

/// Mean of the sequence vectors, re-normalized to unit length. Order never
/// matters; opposite vectors that cancel are an error.
pub fn aggregate_sequence(seq: &AerialSequence) -> Result<Vec<f32>> {
    let dim = seq.tile_vectors[0].len();
    let mut mean = alloc::vec![0.0f64; dim];
    for v in &seq.tile_vectors {
        for (m, &x) in mean.iter_mut().zip(v) {
            *m += x as f64;
        }
    }
    let n = seq.len() as f64;
    for m in mean.iter_mut() {
        *m /= n;
    }
    let norm = math::sqrt(mean.iter().map(|m| m * m).sum());
    if norm < 1e-12 {
        return Err(Error::DegenerateSequence);
    }
    Ok(mean.iter().map(|&m| (m / norm) as f32).collect())
}

/// Step 2: rank large regions against the aggregated sequence.
pub fn screen_regions(
    seq: &AerialSequence,
    region_gallery: &Gallery,
    k: usize,
) -> Result<QueryResult> {
    let aggregate = aggregate_sequence(seq)?;
    region_gallery.top_k(&aggregate, k)
}

/// How many top regions survive step 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReductionPolicy {
    /// Keep the N best regions.
    TopN(usize),
    /// Keep `ceil(pct/100 * region_count)` regions.
    TopPercent(f64),
}

impl ReductionPolicy {
    /// Regions retained out of `region_count`; always in [1, region_count].
    pub fn regions_kept(&self, region_count: usize) -> Result<usize> {
        if region_count == 0 {
            return Err(Error::EmptyGallery);
        }
        let kept = match *self {
            ReductionPolicy::TopN(n) => {
                if n < 1 {
                    return Err(Error::InvalidParameter("TopN needs n >= 1"));
                }
                n.min(region_count)
            }
            ReductionPolicy::TopPercent(pct) => {
                if !(pct.is_finite() && pct > 0.0) {
                    return Err(Error::InvalidParameter("TopPercent needs pct > 0"));
                }
                (math::ceil(pct / 100.0 * region_count as f64) as usize).min(region_count)
            }
        };
        Ok(kept.max(1))
    }
}

/// Step 3: the union of the selected regions' tiles as a new gallery,
/// preserving full-gallery record order.
pub fn reduce_gallery(
    ranked_regions: &QueryResult,
    policy: ReductionPolicy,
    region_to_tiles: &RegionToTiles,
    full_tiles: &Gallery,
) -> Result<Gallery> {
    let kept = policy.regions_kept(region_to_tiles.len())?;
    let mut tile_ids: Vec<&str> = Vec::new();
    for scored in ranked_regions.ranked.iter().take(kept) {
        let tiles = region_to_tiles
            .get(&scored.id)
            .ok_or_else(|| Error::UnknownId(scored.id.clone()))?;
        tile_ids.extend(tiles.iter().map(|t| t.as_str()));
    }
    full_tiles.subset(tile_ids)
}

/// One query clip: its embedding plus optional ground-truth tile id.
#[derive(Debug, Clone)]
pub struct ClipQuery {
    pub clip_id: String,
    pub video_id: String,
    pub vector: Vec<f32>,
    pub gt_tile_id: Option<String>,
}

/// Per-clip outcome of the pipeline.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ClipOutcome {
    pub clip_id: String,
    /// Retrieval against the full tile gallery.
    pub step1: QueryResult,
    /// Retrieval against the per-video reduced gallery.
    pub step4: QueryResult,
    /// Whether the ground-truth tile survived the reduction (when known).
    pub retained_gt: Option<bool>,
}

/// Per-video outcome: the screening ranking plus per-clip results.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VideoOutcome {
    pub video_id: String,
    pub ranked_regions: QueryResult,
    pub clips: Vec<ClipOutcome>,
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PipelineResult {
    pub videos: Vec<VideoOutcome>,
}

/// Pipeline knobs.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// k for the per-clip retrievals (clamped to gallery size).
    pub clip_k: usize,
    /// Regions to rank in step 2; raised to the policy's requirement.
    pub screen_k: usize,
    /// Optional truncation of the step-2 sequence (e.g. 8 or 32).
    pub sequence_limit: Option<usize>,
    pub policy: ReductionPolicy,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            clip_k: 10,
            screen_k: 10,
            sequence_limit: None,
            policy: ReductionPolicy::TopPercent(1.0),
        }
    }
}

/// Runs steps 1-4 for every video present in `clip_queries`.
///
/// Clips group by `video_id` in first-appearance order; clip order within a
/// video is input order. Deterministic for fixed inputs and config.
pub fn run_pipeline(
    clip_queries: &[ClipQuery],
    tile_gallery: &Gallery,
    region_gallery: &Gallery,
    region_to_tiles: &RegionToTiles,
    cfg: &PipelineConfig,
) -> Result<PipelineResult> {
    if clip_queries.is_empty() {
        return Err(Error::EmptyPredictions);
    }
    if cfg.clip_k < 1 {
        return Err(Error::InvalidParameter("clip_k must be >= 1"));
    }

    let mut order: Vec<&str> = Vec::new();
    let mut by_video: BTreeMap<&str, Vec<&ClipQuery>> = BTreeMap::new();
    for q in clip_queries {
        let entry = by_video.entry(q.video_id.as_str()).or_default();
        if entry.is_empty() {
            order.push(q.video_id.as_str());
        }
        entry.push(q);
    }

    let k1 = cfg.clip_k.min(tile_gallery.len());
    let mut videos = Vec::with_capacity(order.len());
    for video_id in order {
        let clips = &by_video[video_id];

        // Step 1: clip retrieval on the full gallery
        let queries: Vec<&[f32]> = clips.iter().map(|c| c.vector.as_slice()).collect();
        let step1 = tile_gallery.top_k_many(&queries, k1)?;

        // Step 2: screening by the averaged predicted-tile embeddings
        let predicted: Vec<Vec<f32>> = step1
            .iter()
            .map(|r| {
                let top = &r.ranked[0];
                tile_gallery
                    .vector_by_id(&top.id)
                    .expect("step-1 ids come from the gallery")
                    .to_vec()
            })
            .collect();
        let mut sequence = AerialSequence::new(video_id.to_string(), predicted)?;
        if let Some(limit) = cfg.sequence_limit {
            sequence = sequence.truncated(limit)?;
        }
        let needed = cfg.policy.regions_kept(region_to_tiles.len())?;
        let screen_k = cfg.screen_k.max(needed).min(region_gallery.len());
        let ranked_regions = screen_regions(&sequence, region_gallery, screen_k)?;

        // Step 3: reduced per-video gallery
        let reduced = reduce_gallery(&ranked_regions, cfg.policy, region_to_tiles, tile_gallery)?;

        // Step 4: re-retrieval against the reduced gallery
        let k4 = cfg.clip_k.min(reduced.len());
        let step4 = reduced.top_k_many(&queries, k4)?;

        let clips_out = clips
            .iter()
            .zip(step1)
            .zip(step4)
            .map(|((clip, s1), s4)| ClipOutcome {
                clip_id: clip.clip_id.clone(),
                retained_gt: clip
                    .gt_tile_id
                    .as_deref()
                    .map(|gt| reduced.position(gt).is_some()),
                step1: s1,
                step4: s4,
            })
            .collect();

        videos.push(VideoOutcome {
            video_id: video_id.to_string(),
            ranked_regions,
            clips: clips_out,
        });
    }

    Ok(PipelineResult { videos })
}
