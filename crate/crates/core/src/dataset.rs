//! Clip segmentation and aerial gallery geometry: 1792x1792 large regions,
//! the 7x7 grid of uncentered (UCN) tiles, and centered (CN) crops.

use crate::geodesy::{
    global_pixel_to_gps, gps_to_global_pixel, world_pixels, GeoPoint, PixelCoord,
};
use crate::math;
use crate::{Error, Result};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// Zoom level of all aerial imagery.
pub const REGION_ZOOM: u8 = 19;

/// Side of a large aerial region in pixels.
pub const REGION_SIDE_PX: u64 = 1792;

/// Side of a small aerial tile in pixels.
pub const TILE_SIDE_PX: u64 = 256;

/// Tiles per region side; `GRID_DIM^2 = 49` UCN tiles per region.
pub const GRID_DIM: u8 = 7;

/// Frames per clip, fixed by the dataset construction.
pub const CLIP_FRAME_COUNT: u8 = 8;

/// Frame skip rate within a clip, fixed by the dataset construction.
pub const CLIP_FRAME_SKIP: u8 = 1;

/// A ground video with one GPS label per (some) seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoRecord {
    pub video_id: String,
    gps_labels: Vec<(u32, GeoPoint)>,
    pub day_flag: Option<bool>,
}

impl VideoRecord {
    /// Requires at least one label and strictly increasing second indices.
    pub fn new(
        video_id: String,
        gps_labels: Vec<(u32, GeoPoint)>,
        day_flag: Option<bool>,
    ) -> Result<Self> {
        if gps_labels.is_empty() {
            return Err(Error::NoGpsLabels);
        }
        if gps_labels.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::NonIncreasingSeconds { video_id });
        }
        Ok(Self {
            video_id,
            gps_labels,
            day_flag,
        })
    }

    pub fn gps_labels(&self) -> &[(u32, GeoPoint)] {
        &self.gps_labels
    }

    pub fn points(&self) -> Vec<GeoPoint> {
        self.gps_labels.iter().map(|(_, p)| *p).collect()
    }
}

/// A one-second clip cut from a video at a labeled second.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipRecord {
    pub clip_id: String,
    pub video_id: String,
    pub second_index: u32,
    pub frame_count: u8,
    pub frame_skip: u8,
    pub label: GeoPoint,
}

/// Kind of a small aerial tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum TileKind {
    /// Uncentered: one of the 49 grid tiles of a region.
    Ucn,
    /// Centered: a 256x256 crop around a clip's GPS label.
    Cn,
}

/// A 1792x1792 aerial region at zoom 19.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeAerialRegion {
    pub region_id: String,
    origin: PixelCoord,
}

impl LargeAerialRegion {
    /// Builds a region from its top-left pixel; the box must fit the world.
    pub fn new(region_id: String, origin: PixelCoord) -> Result<Self> {
        let world = world_pixels(origin.zoom());
        if origin.x() + REGION_SIDE_PX > world || origin.y() + REGION_SIDE_PX > world {
            return Err(Error::BoxOutOfBounds);
        }
        Ok(Self { region_id, origin })
    }

    pub fn origin(&self) -> PixelCoord {
        self.origin
    }

    pub fn side_px(&self) -> u64 {
        REGION_SIDE_PX
    }

    /// True iff the pixel lies inside the region box.
    pub fn contains(&self, px: &PixelCoord) -> bool {
        px.zoom() == self.origin.zoom()
            && px.x() >= self.origin.x()
            && px.x() < self.origin.x() + REGION_SIDE_PX
            && px.y() >= self.origin.y()
            && px.y() < self.origin.y() + REGION_SIDE_PX
    }

    pub fn center_gps(&self) -> GeoPoint {
        let c = PixelCoord::new(
            self.origin.x() + REGION_SIDE_PX / 2,
            self.origin.y() + REGION_SIDE_PX / 2,
            self.origin.zoom(),
        )
        .expect("region box validated at construction");
        global_pixel_to_gps(&c)
    }
}

/// A 256x256 aerial tile, either a grid cell (UCN) or a centered crop (CN).
#[derive(Debug, Clone, PartialEq)]
pub struct AerialTile {
    pub tile_id: String,
    pub kind: TileKind,
    pub region_id: String,
    origin: PixelCoord,
    pub grid_rc: Option<(u8, u8)>,
    pub center_gps: GeoPoint,
}

impl AerialTile {
    /// Rebuilds a tile from its stored geometry; the center GPS is always
    /// recomputed from the box.
    pub fn new(
        tile_id: String,
        kind: TileKind,
        region_id: String,
        origin: PixelCoord,
        grid_rc: Option<(u8, u8)>,
    ) -> Result<Self> {
        let world = world_pixels(origin.zoom());
        if origin.x() + TILE_SIDE_PX > world || origin.y() + TILE_SIDE_PX > world {
            return Err(Error::BoxOutOfBounds);
        }
        if let Some((row, col)) = grid_rc {
            if row >= GRID_DIM || col >= GRID_DIM {
                return Err(Error::InvalidParameter("grid cell outside the 7x7 grid"));
            }
        }
        Ok(Self::from_origin(tile_id, kind, region_id, origin, grid_rc))
    }

    fn from_origin(
        tile_id: String,
        kind: TileKind,
        region_id: String,
        origin: PixelCoord,
        grid_rc: Option<(u8, u8)>,
    ) -> Self {
        let center = PixelCoord::new(
            origin.x() + TILE_SIDE_PX / 2,
            origin.y() + TILE_SIDE_PX / 2,
            origin.zoom(),
        )
        .expect("tile box inside region inside world");
        Self {
            tile_id,
            kind,
            region_id,
            origin,
            grid_rc,
            center_gps: global_pixel_to_gps(&center),
        }
    }

    pub fn origin(&self) -> PixelCoord {
        self.origin
    }

    pub fn side_px(&self) -> u64 {
        TILE_SIDE_PX
    }
}

/// Deterministic, join-friendly id schemes shared by the tiling and
/// synthetic generators.
pub fn clip_id(video_id: &str, second_index: u32) -> String {
    format!("{video_id}:{second_index}")
}

pub fn ucn_tile_id(region_id: &str, row: u8, col: u8) -> String {
    format!("{region_id}:r{row}c{col}")
}

pub fn cn_tile_id(clip_id: &str) -> String {
    format!("{clip_id}:cn")
}

pub fn region_id_for_video(video_id: &str) -> String {
    format!("{video_id}:region")
}

/// Cuts one clip per GPS-labeled second, in label order. Seconds without a
/// label produce no clip.
pub fn segment_clips(video: &VideoRecord) -> Vec<ClipRecord> {
    video
        .gps_labels()
        .iter()
        .map(|&(second, label)| ClipRecord {
            clip_id: clip_id(&video.video_id, second),
            video_id: video.video_id.clone(),
            second_index: second,
            frame_count: CLIP_FRAME_COUNT,
            frame_skip: CLIP_FRAME_SKIP,
            label,
        })
        .collect()
}

/// Places the 1792x1792 region for an accepted video.
///
/// The box is centered on the pixel centroid of the labels, then nudged the
/// minimal amount needed to contain every label and stay inside the world.
/// Labels spanning 1792 px or more in either axis overflow.
pub fn region_for_video(video: &VideoRecord) -> Result<LargeAerialRegion> {
    let pixels: Vec<PixelCoord> = video
        .points()
        .iter()
        .map(|p| gps_to_global_pixel(p, REGION_ZOOM))
        .collect::<Result<_>>()?;

    let min_x = pixels.iter().map(|p| p.x()).min().expect("nonempty");
    let max_x = pixels.iter().map(|p| p.x()).max().expect("nonempty");
    let min_y = pixels.iter().map(|p| p.y()).min().expect("nonempty");
    let max_y = pixels.iter().map(|p| p.y()).max().expect("nonempty");

    let (span_x, span_y) = (max_x - min_x, max_y - min_y);
    if span_x >= REGION_SIDE_PX || span_y >= REGION_SIDE_PX {
        return Err(Error::RegionOverflow { span_x, span_y });
    }

    let world = world_pixels(REGION_ZOOM) as i64;
    let half = (REGION_SIDE_PX / 2) as i64;
    let side = REGION_SIDE_PX as i64;
    let place = |lo: u64, hi: u64, centroid: f64| -> i64 {
        let ideal = math::round(centroid) as i64 - half;
        // containment window: [hi - (side-1), lo]
        let ideal = ideal.clamp(hi as i64 - (side - 1), lo as i64);
        ideal.clamp(0, world - side)
    };
    let cx = pixels.iter().map(|p| p.x() as f64).sum::<f64>() / pixels.len() as f64;
    let cy = pixels.iter().map(|p| p.y() as f64).sum::<f64>() / pixels.len() as f64;

    let origin = PixelCoord::new(
        place(min_x, max_x, cx) as u64,
        place(min_y, max_y, cy) as u64,
        REGION_ZOOM,
    )?;
    LargeAerialRegion::new(region_id_for_video(&video.video_id), origin)
}

/// The 49 uncentered tiles of a region, row-major.
pub fn tile_grid(region: &LargeAerialRegion) -> Vec<AerialTile> {
    let mut tiles = Vec::with_capacity((GRID_DIM as usize) * (GRID_DIM as usize));
    for row in 0..GRID_DIM {
        for col in 0..GRID_DIM {
            let origin = PixelCoord::new(
                region.origin().x() + col as u64 * TILE_SIDE_PX,
                region.origin().y() + row as u64 * TILE_SIDE_PX,
                region.origin().zoom(),
            )
            .expect("grid tile inside region");
            tiles.push(AerialTile::from_origin(
                ucn_tile_id(&region.region_id, row, col),
                TileKind::Ucn,
                region.region_id.clone(),
                origin,
                Some((row, col)),
            ));
        }
    }
    tiles
}

/// Grid cell `(row, col)` containing a point, or an error if the point maps
/// outside the region.
pub fn locate_tile(region: &LargeAerialRegion, p: &GeoPoint) -> Result<(u8, u8)> {
    let px = gps_to_global_pixel(p, region.origin().zoom())?;
    if !region.contains(&px) {
        return Err(Error::PointOutsideRegion {
            region_id: region.region_id.clone(),
        });
    }
    let row = (px.y() - region.origin().y()) / TILE_SIDE_PX;
    let col = (px.x() - region.origin().x()) / TILE_SIDE_PX;
    Ok((row as u8, col as u8))
}

/// A 256x256 crop centered on the point's pixel, translated minimally to
/// stay inside the region. `clip_id` names the resulting CN tile.
pub fn centered_crop(
    region: &LargeAerialRegion,
    p: &GeoPoint,
    clip_id: &str,
) -> Result<AerialTile> {
    let px = gps_to_global_pixel(p, region.origin().zoom())?;
    if !region.contains(&px) {
        return Err(Error::PointOutsideRegion {
            region_id: region.region_id.clone(),
        });
    }
    let half = TILE_SIDE_PX / 2;
    let clamp_axis = |center: u64, region_lo: u64| -> u64 {
        let lo = region_lo;
        let hi = region_lo + REGION_SIDE_PX - TILE_SIDE_PX;
        center.saturating_sub(half).clamp(lo, hi)
    };
    let origin = PixelCoord::new(
        clamp_axis(px.x(), region.origin().x()),
        clamp_axis(px.y(), region.origin().y()),
        region.origin().zoom(),
    )?;
    Ok(AerialTile::from_origin(
        cn_tile_id(clip_id),
        TileKind::Cn,
        region.region_id.clone(),
        origin,
        None,
    ))
}
