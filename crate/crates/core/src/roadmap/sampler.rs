//! Uniform and informed state sampling.
//!
//! Once a path of cost `c_best` between `s1` and `s2` is known, a state `s`
//! can only shorten it if `c(s1, s) + c(s, s2) < c_best`. The rotational part
//! of that sum is at least `w_r * d(yaw1, yaw2)`, so only positions inside
//! `w_t * (|p - p1| + |p - p2|) < c_best - w_r * d(yaw1, yaw2)` are useful:
//! an ellipse with foci at the two endpoint positions.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{angle_diff, CostExponent, CostWeights, SE2State};
use crate::gridmap::Bounds;

const MAX_REJECTIONS: usize = 10_000;

/// Position region that can still improve a known solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InformedRegion {
    /// Open ellipse: `|p - f1| + |p - f2| < major`.
    Ellipse {
        focus1: [f64; 2],
        focus2: [f64; 2],
        major: f64,
    },
    /// Open disc, the region for the squared-norm cost.
    Disc { center: [f64; 2], radius: f64 },
}

impl InformedRegion {
    /// Region for endpoints `s1`, `s2` and incumbent cost `best_cost`.
    pub fn new(s1: &SE2State, s2: &SE2State, best_cost: f64, w: &CostWeights) -> Result<Self> {
        let rot = w.rotational() * angle_diff(s1.yaw(), s2.yaw());
        let budget = (best_cost - rot) / w.translational();
        let dist = s1.distance_xy(s2);
        match w.exponent() {
            CostExponent::Linear => {
                if !(budget > dist) {
                    return Err(Error::RegionEmpty);
                }
                Ok(InformedRegion::Ellipse {
                    focus1: s1.position(),
                    focus2: s2.position(),
                    major: budget,
                })
            }
            CostExponent::Squared => {
                // |p-f1|^2 + |p-f2|^2 = 2 |p-m|^2 + dist^2 / 2
                let r2 = 0.5 * (budget - 0.5 * dist * dist);
                if !(r2 > 0.0) {
                    return Err(Error::RegionEmpty);
                }
                Ok(InformedRegion::Disc {
                    center: [
                        0.5 * (s1.x() + s2.x()),
                        0.5 * (s1.y() + s2.y()),
                    ],
                    radius: r2.sqrt(),
                })
            }
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        match *self {
            InformedRegion::Ellipse {
                focus1,
                focus2,
                major,
            } => {
                (p[0] - focus1[0]).hypot(p[1] - focus1[1])
                    + (p[0] - focus2[0]).hypot(p[1] - focus2[1])
                    < major
            }
            InformedRegion::Disc { center, radius } => {
                (p[0] - center[0]).hypot(p[1] - center[1]) < radius
            }
        }
    }

    /// Semi-axes `(a, b)`, center and orientation of the region.
    fn geometry(&self) -> ([f64; 2], f64, f64, f64) {
        match *self {
            InformedRegion::Ellipse {
                focus1,
                focus2,
                major,
            } => {
                let center = [
                    0.5 * (focus1[0] + focus2[0]),
                    0.5 * (focus1[1] + focus2[1]),
                ];
                let a = 0.5 * major;
                let c = 0.5 * (focus2[0] - focus1[0]).hypot(focus2[1] - focus1[1]);
                let b = (a * a - c * c).max(0.0).sqrt();
                let theta = (focus2[1] - focus1[1]).atan2(focus2[0] - focus1[0]);
                (center, a, b, theta)
            }
            InformedRegion::Disc { center, radius } => (center, radius, radius, 0.0),
        }
    }

    pub fn area(&self) -> f64 {
        let (_, a, b, _) = self.geometry();
        PI * a * b
    }

    fn aabb(&self) -> Bounds {
        let (c, a, b, theta) = self.geometry();
        let (ct, st) = (theta.cos(), theta.sin());
        let hx = ((a * ct).powi(2) + (b * st).powi(2)).sqrt();
        let hy = ((a * st).powi(2) + (b * ct).powi(2)).sqrt();
        Bounds {
            xmin: c[0] - hx,
            xmax: c[0] + hx,
            ymin: c[1] - hy,
            ymax: c[1] + hy,
        }
    }

    /// Uniform sample via the unit disc mapped by the region's affine transform.
    fn sample_direct<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let (c, a, b, theta) = self.geometry();
        let r = rng.gen::<f64>().sqrt();
        let phi = rng.gen_range(-PI..PI);
        let (u, v) = (a * r * phi.cos(), b * r * phi.sin());
        let (ct, st) = (theta.cos(), theta.sin());
        [c[0] + ct * u - st * v, c[1] + st * u + ct * v]
    }

    /// Uniform position inside the region intersected with `bounds`.
    pub fn sample_position<R: Rng + ?Sized>(&self, bounds: &Bounds, rng: &mut R) -> Result<[f64; 2]> {
        let bb = self.aabb();
        let clipped = Bounds {
            xmin: bb.xmin.max(bounds.xmin),
            xmax: bb.xmax.min(bounds.xmax),
            ymin: bb.ymin.max(bounds.ymin),
            ymax: bb.ymax.min(bounds.ymax),
        };
        if clipped.is_empty() {
            return Err(Error::RegionEmpty);
        }
        let direct = self.area() <= clipped.width() * clipped.height();
        for _ in 0..MAX_REJECTIONS {
            let p = if direct {
                self.sample_direct(rng)
            } else {
                [
                    rng.gen_range(clipped.xmin..clipped.xmax),
                    rng.gen_range(clipped.ymin..clipped.ymax),
                ]
            };
            if self.contains(p) && bounds.contains(p) {
                return Ok(p);
            }
        }
        Err(Error::RegionEmpty)
    }
}

pub fn sample_uniform<R: Rng + ?Sized>(bounds: &Bounds, rng: &mut R) -> SE2State {
    let x = rng.gen_range(bounds.xmin..bounds.xmax);
    let y = rng.gen_range(bounds.ymin..bounds.ymax);
    SE2State::new(x, y, rng.gen_range(-PI..PI))
}

/// Draws a state: uniform in `bounds` without an incumbent, otherwise
/// uniform in the informed region. The yaw is always uniform.
pub fn sample<R: Rng + ?Sized>(
    s1: &SE2State,
    s2: &SE2State,
    best_cost: Option<f64>,
    bounds: &Bounds,
    w: &CostWeights,
    rng: &mut R,
) -> Result<SE2State> {
    match best_cost {
        None => Ok(sample_uniform(bounds, rng)),
        Some(c) => {
            let region = InformedRegion::new(s1, s2, c, w)?;
            let p = region.sample_position(bounds, rng)?;
            Ok(SE2State::new(p[0], p[1], rng.gen_range(-PI..PI)))
        }
    }
}
