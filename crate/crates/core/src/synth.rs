//! Seeded synthetic data: GPS trajectories, shared region layouts, and
//! noise-controlled paired embeddings.
//!
//! Every entity draws from its own derived random stream, so output is a
//! pure function of the config regardless of generation order. Embeddings
//! follow a region-signature model: tiles blend their region's signature
//! with per-tile randomness, clips are noisy copies of their ground-truth
//! tile, and region vectors are the normalized mean of their tiles.

use crate::dataset::{
    centered_crop, locate_tile, segment_clips, tile_grid, ucn_tile_id, AerialTile,
    ClipRecord, LargeAerialRegion, VideoRecord, GRID_DIM, REGION_SIDE_PX, REGION_ZOOM,
};
use crate::gallery::EmbeddingRecord;
use crate::geodesy::{gps_to_global_pixel, world_pixels, GeoPoint};
use crate::hierarchical::RegionToTiles;
use crate::math;
use crate::rng;
use crate::{Error, Result};
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand_chacha::ChaCha8Rng;

/// Generator parameters; identical configs produce identical output.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_videos: usize,
    pub clips_per_video: usize,
    pub n_regions: usize,
    pub dim: usize,
    /// Per-coordinate Gaussian noise added to a clip's tile vector.
    pub noise_sigma: f64,
    /// Blend weight of the region signature in tile vectors, in [0, 1].
    pub region_signature_strength: f64,
    /// Latitude band (degrees) for region centers.
    pub lat_band: (f64, f64),
    /// Longitude band (degrees) for region centers.
    pub lon_band: (f64, f64),
    /// Range the per-video target mu is drawn from.
    pub mu_target: (f64, f64),
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_videos: 100,
            clips_per_video: 20,
            n_regions: 10,
            dim: 64,
            noise_sigma: 0.1,
            region_signature_strength: 0.8,
            lat_band: (25.0, 33.0),
            lon_band: (-118.0, -80.0),
            mu_target: (0.0012, 0.0038),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_videos == 0 || self.clips_per_video == 0 || self.n_regions == 0 {
            return Err(Error::InvalidParameter("counts must be >= 1"));
        }
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dim must be >= 1"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidParameter("noise_sigma must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.region_signature_strength) {
            return Err(Error::InvalidParameter("strength must be in [0, 1]"));
        }
        let (lat_lo, lat_hi) = self.lat_band;
        let (lon_lo, lon_hi) = self.lon_band;
        if !(lat_lo <= lat_hi && lon_lo <= lon_hi) {
            return Err(Error::InvalidParameter("bands must be ordered"));
        }
        let (mu_lo, mu_hi) = self.mu_target;
        if !(0.0 <= mu_lo && mu_lo <= mu_hi) {
            return Err(Error::InvalidParameter("mu_target must be ordered and >= 0"));
        }
        Ok(())
    }

    /// Dataset generation additionally requires that the whole mu span fits
    /// a region box at the worst band latitude.
    fn validate_region_fit(&self) -> Result<()> {
        let (lat_lo, lat_hi) = self.lat_band;
        let mu_hi = self.mu_target.1;
        let worst_lat = math::abs(lat_lo).max(math::abs(lat_hi)) + mu_hi;
        let px_per_deg = world_pixels(REGION_ZOOM) as f64 / 360.0;
        let worst_span = mu_hi * px_per_deg / math::cos(worst_lat.to_radians());
        if worst_span > (REGION_SIDE_PX - 8) as f64 {
            return Err(Error::InvalidParameter(
                "latitude band too high for the requested mu range",
            ));
        }
        Ok(())
    }
}

pub fn video_id(index: usize) -> String {
    format!("video-{index:05}")
}

pub fn region_id(index: usize) -> String {
    format!("region-{index:04}")
}

/// A bounded random walk rescaled to an exact target mu, one label per
/// second, centered at `center`.
fn trajectory_at(
    cfg: &SynthConfig,
    id: String,
    center: GeoPoint,
    target_mu: f64,
) -> Result<VideoRecord> {
    let mut rng = rng::stream(cfg.seed, &format!("traj:{id}"));
    let n = cfg.clips_per_video;
    let mut lat_off = Vec::with_capacity(n);
    let mut lon_off = Vec::with_capacity(n);
    let (mut lat, mut lon) = (0.0f64, 0.0f64);
    for _ in 0..n {
        lat_off.push(lat);
        lon_off.push(lon);
        lat += rng::uniform(&mut rng) - 0.5;
        lon += rng::uniform(&mut rng) - 0.5;
    }
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (lat_lo, lat_hi) = span(&lat_off);
    let (lon_lo, lon_hi) = span(&lon_off);
    let raw_mu = (lat_hi - lat_lo).max(lon_hi - lon_lo);
    let scale = if raw_mu > 0.0 && target_mu > 0.0 {
        target_mu / raw_mu
    } else {
        0.0
    };
    let (lat_mid, lon_mid) = ((lat_lo + lat_hi) / 2.0, (lon_lo + lon_hi) / 2.0);
    let labels = lat_off
        .iter()
        .zip(&lon_off)
        .enumerate()
        .map(|(sec, (&la, &lo))| {
            let point = GeoPoint::new(
                center.lat() + (la - lat_mid) * scale,
                center.lon() + (lo - lon_mid) * scale,
            )?;
            Ok((sec as u32, point))
        })
        .collect::<Result<Vec<_>>>()?;
    VideoRecord::new(id, labels, None)
}

/// One standalone trajectory; the center and target mu come from the
/// video's own derived streams.
pub fn gen_trajectory(cfg: &SynthConfig, index: usize) -> Result<VideoRecord> {
    cfg.validate()?;
    let id = video_id(index);
    let mut rng = rng::stream(cfg.seed, &format!("place:{id}"));
    let center = GeoPoint::new(
        rng::uniform_in(&mut rng, cfg.lat_band.0, cfg.lat_band.1),
        rng::uniform_in(&mut rng, cfg.lon_band.0, cfg.lon_band.1),
    )?;
    let target = rng::uniform_in(&mut rng, cfg.mu_target.0, cfg.mu_target.1);
    trajectory_at(cfg, id, center, target)
}

fn unit_random(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng::standard_normal(rng)).collect();
        let norm = math::sqrt(v.iter().map(|x| x * x).sum());
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn to_f32_unit(v: &[f64]) -> Result<Vec<f32>> {
    let norm = math::sqrt(v.iter().map(|x| x * x).sum());
    if norm <= 1e-12 {
        return Err(Error::DegenerateEmbedding {
            id: String::from("synthetic vector"),
        });
    }
    Ok(v.iter().map(|&x| (x / norm) as f32).collect())
}

/// Everything one desk-scale experiment needs, geometry and embeddings
/// aligned by id.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub videos: Vec<VideoRecord>,
    pub clips: Vec<ClipRecord>,
    pub regions: Vec<LargeAerialRegion>,
    /// All 49 UCN tiles per region followed by one CN tile per clip.
    pub tiles: Vec<AerialTile>,
    /// clip id -> ground-truth UCN tile id.
    pub clip_gt: BTreeMap<String, String>,
    /// video id -> the region its trajectory lives in.
    pub video_region: BTreeMap<String, String>,
    pub region_to_tiles: RegionToTiles,
    pub clip_embeddings: Vec<EmbeddingRecord>,
    pub tile_embeddings: Vec<EmbeddingRecord>,
    pub region_embeddings: Vec<EmbeddingRecord>,
}

/// Generates the full synthetic world: shared regions, trajectories inside
/// them, clip segmentation, tile geometry, and paired embeddings.
pub fn generate_dataset(cfg: &SynthConfig) -> Result<SynthDataset> {
    cfg.validate()?;
    cfg.validate_region_fit()?;

    // region placement
    let mut regions = Vec::with_capacity(cfg.n_regions);
    let mut region_centers = Vec::with_capacity(cfg.n_regions);
    for r in 0..cfg.n_regions {
        let rid = region_id(r);
        let mut rng = rng::stream(cfg.seed, &format!("center:{rid}"));
        let center = GeoPoint::new(
            rng::uniform_in(&mut rng, cfg.lat_band.0, cfg.lat_band.1),
            rng::uniform_in(&mut rng, cfg.lon_band.0, cfg.lon_band.1),
        )?;
        let center_px = gps_to_global_pixel(&center, REGION_ZOOM)?;
        let world = world_pixels(REGION_ZOOM);
        let half = REGION_SIDE_PX / 2;
        let origin_x = center_px.x().saturating_sub(half).min(world - REGION_SIDE_PX);
        let origin_y = center_px.y().saturating_sub(half).min(world - REGION_SIDE_PX);
        let origin = crate::geodesy::PixelCoord::new(origin_x, origin_y, REGION_ZOOM)?;
        regions.push(LargeAerialRegion::new(rid, origin)?);
        region_centers.push(center);
    }

    // trajectories, clips, and ground-truth tiles
    let mut videos = Vec::with_capacity(cfg.n_videos);
    let mut clips = Vec::new();
    let mut clip_gt = BTreeMap::new();
    let mut video_region = BTreeMap::new();
    for v in 0..cfg.n_videos {
        let vid = video_id(v);
        let region_idx = v % cfg.n_regions;
        let region = &regions[region_idx];
        let mut rng = rng::stream(cfg.seed, &format!("mu:{vid}"));
        let target = rng::uniform_in(&mut rng, cfg.mu_target.0, cfg.mu_target.1);
        let video = trajectory_at(cfg, vid.clone(), region_centers[region_idx], target)?;
        let video_clips = segment_clips(&video);
        for clip in &video_clips {
            let (row, col) = locate_tile(region, &clip.label)?;
            clip_gt.insert(
                clip.clip_id.clone(),
                ucn_tile_id(&region.region_id, row, col),
            );
        }
        video_region.insert(vid, region.region_id.clone());
        clips.extend(video_clips);
        videos.push(video);
    }

    // tile geometry: the UCN grid plus one CN crop per clip
    let mut tiles = Vec::new();
    let mut region_to_tiles = RegionToTiles::new();
    for region in &regions {
        let grid = tile_grid(region);
        region_to_tiles.insert(
            region.region_id.clone(),
            grid.iter().map(|t| t.tile_id.clone()).collect(),
        );
        tiles.extend(grid);
    }
    for clip in &clips {
        let rid = &video_region[&clip.video_id];
        let region = regions
            .iter()
            .find(|r| &r.region_id == rid)
            .expect("region exists");
        tiles.push(centered_crop(region, &clip.label, &clip.clip_id)?);
    }

    // embeddings: signature -> tiles -> clips, regions as tile means
    let strength = cfg.region_signature_strength;
    let mut tile_embeddings = Vec::new();
    let mut region_embeddings = Vec::with_capacity(cfg.n_regions);
    let mut tile_vectors: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for region in &regions {
        let mut sig_rng = rng::stream(cfg.seed, &format!("sig:{}", region.region_id));
        let signature = unit_random(&mut sig_rng, cfg.dim);
        let mut mean = alloc::vec![0.0f64; cfg.dim];
        for row in 0..GRID_DIM {
            for col in 0..GRID_DIM {
                let tid = ucn_tile_id(&region.region_id, row, col);
                let mut tile_rng = rng::stream(cfg.seed, &format!("tile:{tid}"));
                let noise = unit_random(&mut tile_rng, cfg.dim);
                let blended: Vec<f64> = signature
                    .iter()
                    .zip(&noise)
                    .map(|(s, n)| strength * s + (1.0 - strength) * n)
                    .collect();
                let unit = to_f32_unit(&blended)?;
                let unit64: Vec<f64> = unit.iter().map(|&x| x as f64).collect();
                for (m, u) in mean.iter_mut().zip(&unit64) {
                    *m += u;
                }
                tile_vectors.insert(tid.clone(), unit64);
                tile_embeddings.push(EmbeddingRecord::new(tid, unit));
            }
        }
        region_embeddings.push(EmbeddingRecord::new(
            region.region_id.clone(),
            to_f32_unit(&mean)?,
        ));
    }

    let mut clip_embeddings = Vec::with_capacity(clips.len());
    for clip in &clips {
        let gt_tile = &clip_gt[&clip.clip_id];
        let base = &tile_vectors[gt_tile];
        let mut noise_rng = rng::stream(cfg.seed, &format!("noise:{}", clip.clip_id));
        let noisy: Vec<f64> = base
            .iter()
            .map(|&x| x + cfg.noise_sigma * rng::standard_normal(&mut noise_rng))
            .collect();
        clip_embeddings.push(EmbeddingRecord::new(clip.clip_id.clone(), to_f32_unit(&noisy)?));
    }

    Ok(SynthDataset {
        videos,
        clips,
        regions,
        tiles,
        clip_gt,
        video_region,
        region_to_tiles,
        clip_embeddings,
        tile_embeddings,
        region_embeddings,
    })
}
