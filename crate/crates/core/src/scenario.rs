//! Randomized lunar-like test site: stones to inspect, boulders, craters and slopes.
//!
//! Every obstacle is wrapped in a band of intermediate traversability wider
//! than the robot's outer radius, so a state accepted by the traversability
//! layer alone is also geometrically free.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::envgen::{generate_synthetic_env, EnvSpec, Shape, TraversabilityRegion};
use crate::error::{Error, Result};
use crate::geometry::SE2State;
use crate::gridmap::MapBundle;
use crate::mission::{Mission, Toi};
use crate::validity::{CheckStats, CheckerConfig, RobotFootprint, StateChecker};

const BAND_MARGIN: f64 = 1.0;
const BAND_TRAVERSABILITY: f64 = 0.5;
const CRATER_TRAVERSABILITY: f64 = 0.15;
const SLOPE_TRAVERSABILITY: f64 = 0.6;
const MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LunarParams {
    pub width: f64,
    pub height: f64,
    pub resolution: f64,
    pub stones: usize,
    pub pois_per_stone: usize,
    pub stone_radius: (f64, f64),
    /// Distance of PoIs from the stone center.
    pub poi_distance: (f64, f64),
    /// Minimum center distance between stones.
    pub stone_spacing: f64,
    pub boulders: usize,
    pub craters: usize,
    pub slopes: usize,
    pub start: SE2State,
}

impl Default for LunarParams {
    fn default() -> Self {
        Self {
            width: 30.0,
            height: 29.0,
            resolution: 0.1,
            stones: 13,
            pois_per_stone: 10,
            stone_radius: (0.3, 0.6),
            poi_distance: (1.2, 2.0),
            stone_spacing: 4.0,
            boulders: 2,
            craters: 2,
            slopes: 2,
            start: SE2State::new(2.0, 2.0, 0.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LunarScenario {
    pub spec: EnvSpec,
    pub map: MapBundle,
    pub mission: Mission,
}

/// Keeps placed features apart: `(center, radius)` exclusion discs.
struct Layout {
    taken: Vec<([f64; 2], f64)>,
}

impl Layout {
    fn clear(&self, c: [f64; 2], r: f64) -> bool {
        self.taken
            .iter()
            .all(|(o, ro)| (c[0] - o[0]).hypot(c[1] - o[1]) >= r + ro)
    }

    fn place(
        &mut self,
        rng: &mut ChaCha8Rng,
        p: &LunarParams,
        margin: f64,
        keep_out: f64,
        what: &str,
    ) -> Result<[f64; 2]> {
        for _ in 0..MAX_ATTEMPTS {
            let c = [
                rng.gen_range(margin..p.width - margin),
                rng.gen_range(margin..p.height - margin),
            ];
            if self.clear(c, keep_out) {
                self.taken.push((c, keep_out));
                return Ok(c);
            }
        }
        Err(Error::EnvSpec(format!("no room left to place {what}")))
    }
}

fn band(shape: &Shape) -> Shape {
    match *shape {
        Shape::Disc { center, radius } => Shape::Disc {
            center,
            radius: radius + BAND_MARGIN,
        },
        Shape::Rect {
            center,
            half_extents,
        } => Shape::Rect {
            center,
            half_extents: [half_extents[0] + BAND_MARGIN, half_extents[1] + BAND_MARGIN],
        },
    }
}

/// Generates the map and a mission with one ToI per stone.
///
/// PoIs face their stone and are kept only if they pass `checker_config`
/// with `footprint`.
pub fn lunar_scenario(
    params: &LunarParams,
    seed: u64,
    footprint: RobotFootprint,
    checker_config: CheckerConfig,
) -> Result<LunarScenario> {
    let p = params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layout = Layout {
        taken: vec![(p.start.position(), 3.0)],
    };
    let mut obstacles = Vec::new();
    let mut low = Vec::new();
    let mut bands = Vec::new();

    for k in 0..p.boulders {
        let half: [f64; 2] = [rng.gen_range(1.0..2.0), rng.gen_range(0.4..0.8)];
        let (hx, hy) = if rng.gen::<bool>() { (half[0], half[1]) } else { (half[1], half[0]) };
        let keep = hx.hypot(hy) + BAND_MARGIN + 1.5;
        let c = layout.place(&mut rng, p, keep.min(4.0), keep, &format!("boulder {k}"))?;
        let shape = Shape::Rect {
            center: c,
            half_extents: [hx, hy],
        };
        bands.push(band(&shape));
        obstacles.push(shape);
    }
    for k in 0..p.craters {
        let radius = rng.gen_range(1.0..1.4);
        let c = layout.place(&mut rng, p, 3.0, radius + 1.5, &format!("crater {k}"))?;
        low.push(TraversabilityRegion {
            shape: Shape::Disc { center: c, radius },
            value: CRATER_TRAVERSABILITY,
        });
    }
    let mut stones = Vec::new();
    for k in 0..p.stones {
        let radius = rng.gen_range(p.stone_radius.0..p.stone_radius.1);
        let c = layout.place(&mut rng, p, 2.5, 0.5 * p.stone_spacing, &format!("stone {k}"))?;
        let shape = Shape::Disc { center: c, radius };
        bands.push(band(&shape));
        obstacles.push(shape);
        stones.push((c, radius));
    }

    let mut regions = Vec::new();
    for _ in 0..p.slopes {
        let center = [rng.gen_range(3.0..p.width - 3.0), rng.gen_range(3.0..p.height - 3.0)];
        regions.push(TraversabilityRegion {
            shape: Shape::Rect {
                center,
                half_extents: [rng.gen_range(1.0..2.0), rng.gen_range(1.0..2.0)],
            },
            value: SLOPE_TRAVERSABILITY,
        });
    }
    regions.extend(low);
    regions.extend(bands.into_iter().map(|shape| TraversabilityRegion {
        shape,
        value: BAND_TRAVERSABILITY,
    }));

    let spec = EnvSpec {
        bounds: [0.0, p.width, 0.0, p.height],
        obstacles,
        traversability_regions: regions,
        base_traversability: 0.9,
        truncation: 2.0,
        resolution: p.resolution,
        random_rocks: None,
    };
    let map = generate_synthetic_env(&spec, seed)?;
    let checker = StateChecker::new(&map, footprint, checker_config);
    let mut stats = CheckStats::default();
    if !checker.check_state(&p.start, &mut stats) {
        return Err(Error::EnvSpec("start pose is not valid on the generated map".into()));
    }

    let mut tois = Vec::with_capacity(stones.len());
    for (k, (c, _)) in stones.iter().enumerate() {
        let mut pois = Vec::with_capacity(p.pois_per_stone);
        for _ in 0..MAX_ATTEMPTS {
            if pois.len() == p.pois_per_stone {
                break;
            }
            let phi = rng.gen_range(-PI..PI);
            let d = rng.gen_range(p.poi_distance.0..p.poi_distance.1);
            let x = c[0] + d * phi.cos();
            let y = c[1] + d * phi.sin();
            // facing the stone
            let poi = SE2State::new(x, y, phi + PI);
            if checker.check_state(&poi, &mut stats) {
                pois.push(poi);
            }
        }
        if pois.len() < p.pois_per_stone {
            return Err(Error::EnvSpec(format!("stone {k} has room for only {} PoIs", pois.len())));
        }
        tois.push(Toi {
            id: format!("stone{k:02}"),
            pose: SE2State::new(c[0], c[1], 0.0),
            pois,
        });
    }
    let mission = Mission::new(p.start, tois)?;
    Ok(LunarScenario { spec, map, mission })
}
