//! Synthetic environments built from analytic shapes.

use std::fs;
use std::path::Path as FsPath;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridmap::{Bounds, GridHeader, MapBundle, TraversabilityGrid, TsdfGrid};

/// Primitive shape in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    Disc { center: [f64; 2], radius: f64 },
    Rect { center: [f64; 2], half_extents: [f64; 2] },
}

impl Shape {
    /// Exact signed distance to the boundary, negative inside.
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        match *self {
            Shape::Disc { center, radius } => {
                (p[0] - center[0]).hypot(p[1] - center[1]) - radius
            }
            Shape::Rect {
                center,
                half_extents,
            } => {
                let qx = (p[0] - center[0]).abs() - half_extents[0];
                let qy = (p[1] - center[1]).abs() - half_extents[1];
                let outside = qx.max(0.0).hypot(qy.max(0.0));
                let inside = qx.max(qy).min(0.0);
                outside + inside
            }
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.signed_distance(p) <= 0.0
    }

    fn aabb(&self) -> Bounds {
        let (c, h) = match *self {
            Shape::Disc { center, radius } => (center, [radius, radius]),
            Shape::Rect {
                center,
                half_extents,
            } => (center, half_extents),
        };
        Bounds {
            xmin: c[0] - h[0],
            xmax: c[0] + h[0],
            ymin: c[1] - h[1],
            ymax: c[1] + h[1],
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Disc { center, radius } => {
                center.iter().all(|v| v.is_finite()) && radius.is_finite() && radius > 0.0
            }
            Shape::Rect {
                center,
                half_extents,
            } => center
                .iter()
                .chain(half_extents.iter())
                .all(|v| v.is_finite())
                && half_extents.iter().all(|&h| h > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::EnvSpec(format!("degenerate shape {self:?}")))
        }
    }
}

/// Traversability override painted over the base value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraversabilityRegion {
    #[serde(flatten)]
    pub shape: Shape,
    pub value: f64,
}

/// Seeded scatter of extra disc obstacles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RockScatter {
    pub count: usize,
    pub min_radius: f64,
    pub max_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    /// `[xmin, xmax, ymin, ymax]` in meters.
    pub bounds: [f64; 4],
    #[serde(default)]
    pub obstacles: Vec<Shape>,
    #[serde(default)]
    pub traversability_regions: Vec<TraversabilityRegion>,
    pub base_traversability: f64,
    pub truncation: f64,
    pub resolution: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_rocks: Option<RockScatter>,
}

impl EnvSpec {
    pub fn bounds(&self) -> Bounds {
        Bounds {
            xmin: self.bounds[0],
            xmax: self.bounds[1],
            ymin: self.bounds[2],
            ymax: self.bounds[3],
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        let b = self.bounds();
        if !self.bounds.iter().all(|v| v.is_finite()) || b.is_empty() {
            return Err(Error::EnvSpec(format!("empty or non-finite bounds {:?}", self.bounds)));
        }
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(Error::EnvSpec("resolution must be > 0".into()));
        }
        if !(self.truncation.is_finite() && self.truncation > 0.0) {
            return Err(Error::EnvSpec("truncation must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.base_traversability) {
            return Err(Error::EnvSpec(format!(
                "base_traversability {} outside [0, 1]",
                self.base_traversability
            )));
        }
        for (k, obstacle) in self.obstacles.iter().enumerate() {
            obstacle.validate()?;
            let bb = obstacle.aabb();
            if bb.xmin < b.xmin || bb.xmax > b.xmax || bb.ymin < b.ymin || bb.ymax > b.ymax {
                return Err(Error::EnvSpec(format!(
                    "obstacle {k} lies outside bounds {:?}",
                    self.bounds
                )));
            }
        }
        for (k, region) in self.traversability_regions.iter().enumerate() {
            region.shape.validate()?;
            if !(0.0..=1.0).contains(&region.value) {
                return Err(Error::EnvSpec(format!(
                    "traversability region {k} value {} outside [0, 1]",
                    region.value
                )));
            }
        }
        if let Some(rocks) = &self.random_rocks {
            let max_fit = 0.5 * b.width().min(b.height());
            if !(rocks.min_radius > 0.0
                && rocks.min_radius <= rocks.max_radius
                && rocks.max_radius < max_fit)
            {
                return Err(Error::EnvSpec(format!("invalid random_rocks {rocks:?}")));
            }
        }
        Ok(())
    }

    /// Explicit obstacles followed by the seeded random rocks.
    pub fn resolved_obstacles(&self, seed: u64) -> Vec<Shape> {
        let mut out = self.obstacles.clone();
        if let Some(rocks) = &self.random_rocks {
            let b = self.bounds();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..rocks.count {
                let radius = if rocks.max_radius > rocks.min_radius {
                    rng.gen_range(rocks.min_radius..rocks.max_radius)
                } else {
                    rocks.min_radius
                };
                let x = rng.gen_range(b.xmin + radius..b.xmax - radius);
                let y = rng.gen_range(b.ymin + radius..b.ymax - radius);
                out.push(Shape::Disc {
                    center: [x, y],
                    radius,
                });
            }
        }
        out
    }
}

/// Union signed distance of a set of shapes (`+inf` for an empty set).
pub fn union_signed_distance(shapes: &[Shape], p: [f64; 2]) -> f64 {
    shapes
        .iter()
        .map(|s| s.signed_distance(p))
        .fold(f64::INFINITY, f64::min)
}

/// Rasterizes an environment description into a [`MapBundle`].
///
/// Cell centers sit on `xmin + i * resolution`, `ymin + j * resolution`.
/// TSDF cells store the union signed distance clamped to the truncation;
/// traversability is the base value, overridden by painted regions in
/// order, and forced to 0 inside obstacles.
pub fn generate_synthetic_env(spec: &EnvSpec, seed: u64) -> Result<MapBundle> {
    spec.validate()?;
    let b = spec.bounds();
    let width = (b.width() / spec.resolution).round() as usize + 1;
    let height = (b.height() / spec.resolution).round() as usize + 1;
    let header = GridHeader::new(spec.resolution, [b.xmin, b.ymin], width, height)?;
    let obstacles = spec.resolved_obstacles(seed);

    let mut tsdf = Vec::with_capacity(header.len());
    let mut trav = Vec::with_capacity(header.len());
    for j in 0..height {
        for i in 0..width {
            let p = header.cell_center(i, j);
            let sdf = union_signed_distance(&obstacles, p);
            tsdf.push(sdf.clamp(-spec.truncation, spec.truncation));
            let value = if sdf <= 0.0 {
                0.0
            } else {
                spec.traversability_regions
                    .iter()
                    .rev()
                    .find(|r| r.shape.contains(p))
                    .map_or(spec.base_traversability, |r| r.value)
            };
            trav.push(value);
        }
    }
    MapBundle::new(
        TsdfGrid::new(header, spec.truncation, tsdf)?,
        TraversabilityGrid::new(header, trav)?,
    )
}
