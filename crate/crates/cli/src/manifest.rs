//! Line-delimited JSON manifests.
//!
//! One record per line with a `kind` field in {video, clip, region, tile}.
//! GPS coordinates are written as decimal degrees with at least six
//! fractional digits (padding the shortest exact representation, so the
//! roundtrip stays lossless). Unknown fields are preserved verbatim and
//! re-emitted on write.

use crate::error::{CliError, Result};
use crate::fsio;
use crossview_core::dataset::{
    AerialTile, ClipRecord, LargeAerialRegion, TileKind, VideoRecord, CLIP_FRAME_COUNT,
    CLIP_FRAME_SKIP, REGION_SIDE_PX, TILE_SIDE_PX,
};
use crossview_core::geodesy::{GeoPoint, PixelCoord};
use serde_json::{Map, Number, Value};
use std::io::Write;
use std::path::Path;

pub type Extras = Map<String, Value>;

/// One manifest line: the typed record plus any unknown fields found next
/// to it.
#[derive(Debug, Clone, PartialEq)]
pub enum ManifestRecord {
    Video(VideoRecord, Extras),
    Clip(ClipRecord, Extras),
    Region(LargeAerialRegion, Extras),
    Tile(AerialTile, Extras),
}

impl ManifestRecord {
    pub fn kind(&self) -> &'static str {
        match self {
            ManifestRecord::Video(..) => "video",
            ManifestRecord::Clip(..) => "clip",
            ManifestRecord::Region(..) => "region",
            ManifestRecord::Tile(..) => "tile",
        }
    }
}

/// Formats a coordinate losslessly with at least six fractional digits.
fn gps_literal(value: f64) -> String {
    let mut s = format!("{value}");
    let digits = match s.find('.') {
        Some(dot) => s.len() - dot - 1,
        None => {
            s.push('.');
            0
        }
    };
    for _ in digits..6 {
        s.push('0');
    }
    s
}

fn gps_number(value: f64) -> Number {
    gps_literal(value)
        .parse()
        .expect("fixed-point literal is a valid JSON number")
}

fn gps_object(p: &GeoPoint) -> Value {
    let mut m = Map::new();
    m.insert("lat".into(), Value::Number(gps_number(p.lat())));
    m.insert("lon".into(), Value::Number(gps_number(p.lon())));
    Value::Object(m)
}

fn pixel_object(px: &PixelCoord) -> Value {
    let mut m = Map::new();
    m.insert("x".into(), Value::Number(px.x().into()));
    m.insert("y".into(), Value::Number(px.y().into()));
    m.insert("zoom".into(), Value::Number(u64::from(px.zoom()).into()));
    Value::Object(m)
}

/// Serializes one record to its JSON line (no trailing newline).
pub fn record_to_line(record: &ManifestRecord) -> String {
    let mut obj = match record {
        ManifestRecord::Video(_, extras)
        | ManifestRecord::Clip(_, extras)
        | ManifestRecord::Region(_, extras)
        | ManifestRecord::Tile(_, extras) => extras.clone(),
    };
    obj.insert("kind".into(), Value::String(record.kind().into()));
    match record {
        ManifestRecord::Video(v, _) => {
            obj.insert("video_id".into(), Value::String(v.video_id.clone()));
            let labels: Vec<Value> = v
                .gps_labels()
                .iter()
                .map(|(second, point)| {
                    let mut m = Map::new();
                    m.insert("second".into(), Value::Number(u64::from(*second).into()));
                    m.insert("lat".into(), Value::Number(gps_number(point.lat())));
                    m.insert("lon".into(), Value::Number(gps_number(point.lon())));
                    Value::Object(m)
                })
                .collect();
            obj.insert("gps_labels".into(), Value::Array(labels));
            if let Some(day) = v.day_flag {
                obj.insert("day_flag".into(), Value::Bool(day));
            }
        }
        ManifestRecord::Clip(c, _) => {
            obj.insert("clip_id".into(), Value::String(c.clip_id.clone()));
            obj.insert("video_id".into(), Value::String(c.video_id.clone()));
            obj.insert(
                "second_index".into(),
                Value::Number(u64::from(c.second_index).into()),
            );
            obj.insert(
                "frame_count".into(),
                Value::Number(u64::from(c.frame_count).into()),
            );
            obj.insert(
                "frame_skip".into(),
                Value::Number(u64::from(c.frame_skip).into()),
            );
            obj.insert("label".into(), gps_object(&c.label));
        }
        ManifestRecord::Region(r, _) => {
            obj.insert("region_id".into(), Value::String(r.region_id.clone()));
            obj.insert("origin".into(), pixel_object(&r.origin()));
            obj.insert("side_px".into(), Value::Number(REGION_SIDE_PX.into()));
        }
        ManifestRecord::Tile(t, _) => {
            obj.insert("tile_id".into(), Value::String(t.tile_id.clone()));
            obj.insert(
                "tile_kind".into(),
                Value::String(
                    match t.kind {
                        TileKind::Ucn => "ucn",
                        TileKind::Cn => "cn",
                    }
                    .into(),
                ),
            );
            obj.insert("region_id".into(), Value::String(t.region_id.clone()));
            obj.insert("origin".into(), pixel_object(&t.origin()));
            obj.insert("side_px".into(), Value::Number(TILE_SIDE_PX.into()));
            if let Some((row, col)) = t.grid_rc {
                let mut m = Map::new();
                m.insert("row".into(), Value::Number(u64::from(row).into()));
                m.insert("col".into(), Value::Number(u64::from(col).into()));
                obj.insert("grid".into(), Value::Object(m));
            }
            obj.insert("center".into(), gps_object(&t.center_gps));
        }
    }
    Value::Object(obj).to_string()
}

struct FieldReader<'a> {
    obj: Map<String, Value>,
    line: usize,
    kind: &'a str,
}

impl<'a> FieldReader<'a> {
    fn bad(&self, msg: impl std::fmt::Display) -> CliError {
        CliError::Data(format!("line {}: {} record: {msg}", self.line, self.kind))
    }

    fn take(&mut self, key: &str) -> Result<Value> {
        self.obj
            .remove(key)
            .ok_or_else(|| self.bad(format_args!("missing field `{key}`")))
    }

    fn string(&mut self, key: &str) -> Result<String> {
        match self.take(key)? {
            Value::String(s) => Ok(s),
            other => Err(self.bad(format_args!("field `{key}` is not a string: {other}"))),
        }
    }

    fn u64_of(&self, key: &str, v: &Value) -> Result<u64> {
        v.as_u64()
            .ok_or_else(|| self.bad(format_args!("field `{key}` is not an unsigned integer")))
    }

    fn u64(&mut self, key: &str) -> Result<u64> {
        let v = self.take(key)?;
        self.u64_of(key, &v)
    }

    fn f64_of(&self, key: &str, v: &Value) -> Result<f64> {
        v.as_f64()
            .ok_or_else(|| self.bad(format_args!("field `{key}` is not a number")))
    }

    fn gps_of(&self, v: &Value) -> Result<GeoPoint> {
        let lat = self.f64_of("lat", v.get("lat").ok_or_else(|| self.bad("missing `lat`"))?)?;
        let lon = self.f64_of("lon", v.get("lon").ok_or_else(|| self.bad("missing `lon`"))?)?;
        GeoPoint::new(lat, lon).map_err(|e| self.bad(e))
    }

    fn pixel(&mut self, key: &str) -> Result<PixelCoord> {
        let v = self.take(key)?;
        let x = self.u64_of("x", v.get("x").ok_or_else(|| self.bad("missing `x`"))?)?;
        let y = self.u64_of("y", v.get("y").ok_or_else(|| self.bad("missing `y`"))?)?;
        let zoom = self.u64_of("zoom", v.get("zoom").ok_or_else(|| self.bad("missing `zoom`"))?)?;
        let zoom = u8::try_from(zoom).map_err(|_| self.bad("zoom out of range"))?;
        PixelCoord::new(x, y, zoom).map_err(|e| self.bad(e))
    }
}

/// Parses one manifest line; `line_no` is 1-based and appears in errors.
pub fn parse_line(line: &str, line_no: usize) -> Result<ManifestRecord> {
    let value: Value = serde_json::from_str(line)
        .map_err(|e| CliError::Data(format!("line {line_no}: malformed JSON: {e}")))?;
    let Value::Object(obj) = value else {
        return Err(CliError::Data(format!(
            "line {line_no}: expected a JSON object"
        )));
    };
    let kind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::Data(format!("line {line_no}: missing `kind`")))?
        .to_string();

    let mut fields = FieldReader {
        obj,
        line: line_no,
        kind: &kind,
    };
    fields.obj.remove("kind");

    match kind.as_str() {
        "video" => {
            let video_id = fields.string("video_id")?;
            let labels_value = fields.take("gps_labels")?;
            let Value::Array(items) = labels_value else {
                return Err(fields.bad("`gps_labels` is not an array"));
            };
            let mut labels = Vec::with_capacity(items.len());
            for item in &items {
                let second = fields.u64_of(
                    "second",
                    item.get("second")
                        .ok_or_else(|| fields.bad("label missing `second`"))?,
                )?;
                let second =
                    u32::try_from(second).map_err(|_| fields.bad("label second out of range"))?;
                labels.push((second, fields.gps_of(item)?));
            }
            let day_flag = match fields.obj.remove("day_flag") {
                None | Some(Value::Null) => None,
                Some(Value::Bool(b)) => Some(b),
                Some(other) => {
                    return Err(fields.bad(format_args!("`day_flag` is not a boolean: {other}")))
                }
            };
            let record = VideoRecord::new(video_id, labels, day_flag)
                .map_err(|e| fields.bad(e))?;
            Ok(ManifestRecord::Video(record, fields.obj))
        }
        "clip" => {
            let clip_id = fields.string("clip_id")?;
            let video_id = fields.string("video_id")?;
            let second = fields.u64("second_index")?;
            let second = u32::try_from(second).map_err(|_| fields.bad("second out of range"))?;
            let frame_count = fields.u64("frame_count")?;
            let frame_skip = fields.u64("frame_skip")?;
            if frame_count != u64::from(CLIP_FRAME_COUNT) || frame_skip != u64::from(CLIP_FRAME_SKIP)
            {
                return Err(fields.bad(format_args!(
                    "clips are fixed at frame_count {CLIP_FRAME_COUNT}, frame_skip {CLIP_FRAME_SKIP}"
                )));
            }
            let label_value = fields.take("label")?;
            let label = fields.gps_of(&label_value)?;
            Ok(ManifestRecord::Clip(
                ClipRecord {
                    clip_id,
                    video_id,
                    second_index: second,
                    frame_count: CLIP_FRAME_COUNT,
                    frame_skip: CLIP_FRAME_SKIP,
                    label,
                },
                fields.obj,
            ))
        }
        "region" => {
            let region_id = fields.string("region_id")?;
            let origin = fields.pixel("origin")?;
            let side = fields.u64("side_px")?;
            if side != REGION_SIDE_PX {
                return Err(fields.bad(format_args!("regions are fixed at {REGION_SIDE_PX} px")));
            }
            let record =
                LargeAerialRegion::new(region_id, origin).map_err(|e| fields.bad(e))?;
            Ok(ManifestRecord::Region(record, fields.obj))
        }
        "tile" => {
            let tile_id = fields.string("tile_id")?;
            let tile_kind = match fields.string("tile_kind")?.as_str() {
                "ucn" => TileKind::Ucn,
                "cn" => TileKind::Cn,
                other => {
                    return Err(fields.bad(format_args!("unknown tile_kind `{other}`")));
                }
            };
            let region_id = fields.string("region_id")?;
            let origin = fields.pixel("origin")?;
            let side = fields.u64("side_px")?;
            if side != TILE_SIDE_PX {
                return Err(fields.bad(format_args!("tiles are fixed at {TILE_SIDE_PX} px")));
            }
            let grid = match fields.obj.remove("grid") {
                None | Some(Value::Null) => None,
                Some(v) => {
                    let row = fields
                        .u64_of("row", v.get("row").ok_or_else(|| fields.bad("grid missing `row`"))?)?;
                    let col = fields
                        .u64_of("col", v.get("col").ok_or_else(|| fields.bad("grid missing `col`"))?)?;
                    Some((
                        u8::try_from(row).map_err(|_| fields.bad("grid row out of range"))?,
                        u8::try_from(col).map_err(|_| fields.bad("grid col out of range"))?,
                    ))
                }
            };
            // the stored center is advisory; geometry is authoritative
            fields.obj.remove("center");
            let record = AerialTile::new(tile_id, tile_kind, region_id, origin, grid)
                .map_err(|e| fields.bad(e))?;
            Ok(ManifestRecord::Tile(record, fields.obj))
        }
        other => Err(CliError::Data(format!(
            "line {line_no}: unknown record kind `{other}`"
        ))),
    }
}

/// Reads a whole manifest file.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let mut records = Vec::new();
    for entry in fsio::read_lines(path)? {
        let (line_no, line) = entry?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_line(&line, line_no)?);
    }
    Ok(records)
}

/// Writes records as one JSON object per line, atomically.
pub fn write_manifest<'a, I>(records: I, path: &Path) -> Result<()>
where
    I: IntoIterator<Item = &'a ManifestRecord>,
{
    let lines: Vec<String> = records.into_iter().map(record_to_line).collect();
    fsio::atomic_write(path, |w| {
        for line in &lines {
            writeln!(w, "{line}")?;
        }
        Ok(())
    })
}
