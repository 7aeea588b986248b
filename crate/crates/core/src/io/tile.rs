use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{convex_intersect, ConvexPolygon, Point2};
use crate::Point;

use super::DotaRecord;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TileSpec {
    pub patch: f64,
    pub stride: f64,
    /// Minimum fraction of a box's area that must fall inside a tile.
    pub min_coverage: f64,
}

impl Default for TileSpec {
    fn default() -> Self {
        Self {
            patch: 1024.0,
            stride: 824.0,
            min_coverage: 0.3,
        }
    }
}

impl TileSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.patch > 0.0 && self.stride > 0.0 && self.stride <= self.patch) {
            return Err(Error::InvalidArgument(format!(
                "tile stride {} must lie in (0, patch = {}]",
                self.stride, self.patch
            )));
        }
        if !(0.0..=1.0).contains(&self.min_coverage) {
            return Err(Error::InvalidArgument(
                "min_coverage must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Tile starts along one axis: multiples of `stride` while the tile fits,
/// then a last tile flush with the border.
pub fn tile_starts(len: f64, patch: f64, stride: f64) -> Vec<f64> {
    if len <= patch {
        return vec![0.0];
    }
    let mut out = Vec::new();
    let mut x = 0.0;
    while x + patch < len {
        out.push(x);
        x += stride;
    }
    out.push(len - patch);
    out.dedup();
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiledRecord {
    /// Index into the input records.
    pub source: usize,
    /// Unclipped record in tile-local coordinates.
    pub record: DotaRecord,
    /// Part of the box inside the tile, tile-local.
    pub clipped: Vec<Point>,
    /// Clipped area over full area.
    pub coverage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    pub records: Vec<TiledRecord>,
    /// Boxes that intersect the tile but fall below `min_coverage`.
    pub truncated: Vec<TiledRecord>,
}

fn window(x: f64, y: f64, w: f64, h: f64) -> Result<ConvexPolygon<f64>> {
    ConvexPolygon::new(vec![
        Point2::new(x, y),
        Point2::new(x + w, y),
        Point2::new(x + w, y + h),
        Point2::new(x, y + h),
    ])
}

/// Lays tiles over a `width x height` image and distributes the records.
/// Tiles are ordered row by row.
pub fn tile_annotations(
    records: &[DotaRecord],
    width: f64,
    height: f64,
    tiling: &TileSpec,
) -> Result<Vec<Tile>> {
    tiling.validate()?;
    if !(width > 0.0 && height > 0.0) {
        return Err(Error::InvalidArgument(
            "image extent must be positive".into(),
        ));
    }
    let polys = records
        .iter()
        .map(|r| r.to_quad().map(|q| q.to_polygon()))
        .collect::<Result<Vec<_>>>()?;
    let mut tiles = Vec::new();
    for &y in &tile_starts(height, tiling.patch, tiling.stride) {
        for &x in &tile_starts(width, tiling.patch, tiling.stride) {
            let (w, h) = (tiling.patch.min(width), tiling.patch.min(height));
            let win = window(x, y, w, h)?;
            let mut tile = Tile {
                x,
                y,
                width: w,
                height: h,
                records: Vec::new(),
                truncated: Vec::new(),
            };
            for (i, (rec, poly)) in records.iter().zip(&polys).enumerate() {
                let Some(part) = convex_intersect(poly, &win) else {
                    continue;
                };
                let coverage = (part.area() / poly.area()).min(1.0);
                let local = TiledRecord {
                    source: i,
                    record: rec.shifted(x, y),
                    clipped: part
                        .vertices()
                        .iter()
                        .map(|p| Point2::new(p.x - x, p.y - y))
                        .collect(),
                    coverage,
                };
                if coverage >= tiling.min_coverage {
                    tile.records.push(local);
                } else {
                    tile.truncated.push(local);
                }
            }
            tiles.push(tile);
        }
    }
    Ok(tiles)
}
