//! Co-registered planar TSDF and traversability grids.
//!
//! Cell `(i, j)` is centered at `origin + (i, j) * resolution` and covers the
//! half-open square of side `resolution` around that center. Layers are
//! stored row-major with row 0 at the origin. Queries are nearest-cell: a
//! point on the border between two cells belongs to the cell with the larger
//! index.

use std::fs;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Traversability value marking cells without an estimate.
pub const UNKNOWN_TRAVERSABILITY: f64 = -1.0;

const MAP_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridHeader {
    pub resolution: f64,
    pub origin: [f64; 2],
    pub width: usize,
    pub height: usize,
}

impl GridHeader {
    pub fn new(resolution: f64, origin: [f64; 2], width: usize, height: usize) -> Result<Self> {
        let header = Self {
            resolution,
            origin,
            width,
            height,
        };
        header.validate()?;
        Ok(header)
    }

    fn validate(&self) -> Result<()> {
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(Error::map_field("resolution", "must be a finite value > 0"));
        }
        if !(self.origin[0].is_finite() && self.origin[1].is_finite()) {
            return Err(Error::map_field("origin", "must be finite"));
        }
        if self.width == 0 {
            return Err(Error::map_field("width", "must be > 0"));
        }
        if self.height == 0 {
            return Err(Error::map_field("height", "must be > 0"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index of the cell containing `p`, or `None` outside the grid.
    pub fn cell_of(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let fx = ((p[0] - self.origin[0]) / self.resolution + 0.5).floor();
        let fy = ((p[1] - self.origin[1]) / self.resolution + 0.5).floor();
        if !(fx >= 0.0 && fy >= 0.0) || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    #[inline]
    pub fn linear_index(&self, i: usize, j: usize) -> usize {
        j * self.width + i
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.resolution,
            self.origin[1] + j as f64 * self.resolution,
        ]
    }

    /// World extent covered by the grid as `(xmin, xmax, ymin, ymax)`.
    pub fn bounds(&self) -> Bounds {
        let half = 0.5 * self.resolution;
        Bounds {
            xmin: self.origin[0] - half,
            xmax: self.origin[0] + (self.width as f64 - 0.5) * self.resolution,
            ymin: self.origin[1] - half,
            ymax: self.origin[1] + (self.height as f64 - 0.5) * self.resolution,
        }
    }
}

/// Axis-aligned world rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Bounds {
    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.xmin && p[0] <= self.xmax && p[1] >= self.ymin && p[1] <= self.ymax
    }

    pub fn is_empty(&self) -> bool {
        !(self.xmax > self.xmin && self.ymax > self.ymin)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsdfGrid {
    header: GridHeader,
    truncation: f64,
    values: Vec<f64>,
}

impl TsdfGrid {
    pub fn new(header: GridHeader, truncation: f64, values: Vec<f64>) -> Result<Self> {
        header.validate()?;
        if !(truncation.is_finite() && truncation > 0.0) {
            return Err(Error::map_field("truncation", "must be a finite value > 0"));
        }
        if values.len() != header.len() {
            return Err(Error::map_field(
                "tsdf",
                format!(
                    "layer length mismatch: expected {} values, found {}",
                    header.len(),
                    values.len()
                ),
            ));
        }
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && v.abs() <= truncation))
        {
            return Err(Error::map_field(
                "tsdf",
                format!("value out of range at index {k}: {v} (truncation {truncation})"),
            ));
        }
        Ok(Self {
            header,
            truncation,
            values,
        })
    }

    pub fn header(&self) -> &GridHeader {
        &self.header
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.header.linear_index(i, j)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraversabilityGrid {
    header: GridHeader,
    values: Vec<f64>,
}

impl TraversabilityGrid {
    pub fn new(header: GridHeader, values: Vec<f64>) -> Result<Self> {
        header.validate()?;
        if values.len() != header.len() {
            return Err(Error::map_field(
                "traversability",
                format!(
                    "layer length mismatch: expected {} values, found {}",
                    header.len(),
                    values.len()
                ),
            ));
        }
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v == UNKNOWN_TRAVERSABILITY || (0.0..=1.0).contains(&v)))
        {
            return Err(Error::map_field(
                "traversability",
                format!("value out of range at index {k}: {v}"),
            ));
        }
        Ok(Self { header, values })
    }

    pub fn header(&self) -> &GridHeader {
        &self.header
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.header.linear_index(i, j)]
    }
}

/// A TSDF layer and a traversability layer sharing one grid geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct MapBundle {
    tsdf: TsdfGrid,
    traversability: TraversabilityGrid,
}

impl MapBundle {
    pub fn new(tsdf: TsdfGrid, traversability: TraversabilityGrid) -> Result<Self> {
        if tsdf.header != traversability.header {
            return Err(Error::map_field(
                "traversability",
                "layers are not co-registered (grid headers differ)",
            ));
        }
        Ok(Self {
            tsdf,
            traversability,
        })
    }

    pub fn header(&self) -> &GridHeader {
        &self.tsdf.header
    }

    pub fn bounds(&self) -> Bounds {
        self.tsdf.header.bounds()
    }

    pub fn tsdf(&self) -> &TsdfGrid {
        &self.tsdf
    }

    pub fn traversability(&self) -> &TraversabilityGrid {
        &self.traversability
    }

    /// Stored signed distance of the cell containing `p`; `None` outside the map.
    pub fn query_tsdf(&self, p: [f64; 2]) -> Option<f64> {
        let (i, j) = self.tsdf.header.cell_of(p)?;
        Some(self.tsdf.at(i, j))
    }

    /// Traversability of the cell containing `p`; `None` outside the map or
    /// for cells carrying the unknown sentinel.
    pub fn query_traversability(&self, p: [f64; 2]) -> Option<f64> {
        let (i, j) = self.tsdf.header.cell_of(p)?;
        let v = self.traversability.at(i, j);
        (v != UNKNOWN_TRAVERSABILITY).then_some(v)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MapFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MapFile = serde_json::from_str(text)?;
        file.try_into()
    }
}

/// On-disk representation of a [`MapBundle`].
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    version: u32,
    resolution: f64,
    origin: [f64; 2],
    width: usize,
    height: usize,
    truncation: f64,
    tsdf: Vec<f64>,
    traversability: Vec<f64>,
}

impl From<&MapBundle> for MapFile {
    fn from(m: &MapBundle) -> Self {
        let h = m.header();
        MapFile {
            version: MAP_FORMAT_VERSION,
            resolution: h.resolution,
            origin: h.origin,
            width: h.width,
            height: h.height,
            truncation: m.tsdf.truncation,
            tsdf: m.tsdf.values.clone(),
            traversability: m.traversability.values.clone(),
        }
    }
}

impl TryFrom<MapFile> for MapBundle {
    type Error = Error;

    fn try_from(f: MapFile) -> Result<Self> {
        if f.version != MAP_FORMAT_VERSION {
            return Err(Error::map_field(
                "version",
                format!("unsupported version {}", f.version),
            ));
        }
        let header = GridHeader::new(f.resolution, f.origin, f.width, f.height)?;
        let tsdf = TsdfGrid::new(header, f.truncation, f.tsdf)?;
        let trav = TraversabilityGrid::new(header, f.traversability)?;
        MapBundle::new(tsdf, trav)
    }
}

pub fn load_map(path: impl AsRef<FsPath>) -> Result<MapBundle> {
    let text = fs::read_to_string(path)?;
    MapBundle::from_json(&text)
}

pub fn save_map(map: &MapBundle, path: impl AsRef<FsPath>) -> Result<()> {
    fs::write(path, map.to_json()?)?;
    Ok(())
}
