//! Hierarchical state validity: traversability thresholds first, recursive
//! box-versus-TSDF checking only for states in the intermediate band.

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_diff, interpolate_unchecked, SE2State};
use crate::gridmap::MapBundle;

/// Rectangular robot base. `length` runs along the heading unless the
/// footprint was built with width > length, in which case the dimensions are
/// swapped and the long axis is perpendicular to the heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotFootprint {
    length: f64,
    width: f64,
    long_axis_across: bool,
}

impl RobotFootprint {
    pub fn new(length: f64, width: f64) -> Result<Self> {
        if !(length.is_finite() && width.is_finite() && length > 0.0 && width > 0.0) {
            return Err(Error::Config(format!(
                "footprint dimensions must be > 0, got {length} x {width}"
            )));
        }
        Ok(if length >= width {
            Self {
                length,
                width,
                long_axis_across: false,
            }
        } else {
            Self {
                length: width,
                width: length,
                long_axis_across: true,
            }
        })
    }

    /// Parses `LxW`, e.g. `0.8x0.6`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::Config(format!("footprint must look like LxW, got `{text}`"));
        let (l, w) = text.split_once(['x', 'X']).ok_or_else(bad)?;
        let l: f64 = l.trim().parse().map_err(|_| bad())?;
        let w: f64 = w.trim().parse().map_err(|_| bad())?;
        Self::new(l, w)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn outer_radius(&self) -> f64 {
        (0.5 * self.length).hypot(0.5 * self.width)
    }

    pub fn inner_radius(&self) -> f64 {
        0.5 * self.width
    }

    /// Direction of the long axis for a robot heading `yaw`.
    pub fn long_axis_yaw(&self, yaw: f64) -> f64 {
        if self.long_axis_across {
            yaw + std::f64::consts::FRAC_PI_2
        } else {
            yaw
        }
    }
}

impl Default for RobotFootprint {
    fn default() -> Self {
        Self {
            length: 0.8,
            width: 0.6,
            long_axis_across: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckerConfig {
    t_low: f64,
    t_high: f64,
    max_depth: u32,
    motion_step: f64,
}

impl CheckerConfig {
    pub fn new(t_low: f64, t_high: f64, max_depth: u32, motion_step: f64) -> Result<Self> {
        if !(0.0 <= t_low && t_low <= t_high && t_high <= 1.0) {
            return Err(Error::Config(format!(
                "thresholds must satisfy 0 <= t_low <= t_high <= 1, got t_low={t_low}, t_high={t_high}"
            )));
        }
        if !(motion_step.is_finite() && motion_step > 0.0) {
            return Err(Error::Config(format!("motion_step must be > 0, got {motion_step}")));
        }
        Ok(Self {
            t_low,
            t_high,
            max_depth,
            motion_step,
        })
    }

    /// Thresholds that send every known state to the volumetric check.
    pub fn full_collision_checking() -> Self {
        Self {
            t_low: 0.0,
            t_high: 1.0,
            ..Self::default()
        }
    }

    pub fn with_thresholds(self, t_low: f64, t_high: f64) -> Result<Self> {
        Self::new(t_low, t_high, self.max_depth, self.motion_step)
    }

    pub fn t_low(&self) -> f64 {
        self.t_low
    }

    pub fn t_high(&self) -> f64 {
        self.t_high
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn motion_step(&self) -> f64 {
        self.motion_step
    }
}

impl Default for CheckerConfig {
    fn default() -> Self {
        Self {
            t_low: 0.3,
            t_high: 0.8,
            max_depth: 2,
            motion_step: 0.1,
        }
    }
}

/// Query counters accumulated over a planning session.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckStats {
    pub traversability_queries: u64,
    pub tsdf_queries: u64,
    pub states_accepted_by_traversability: u64,
    pub states_rejected_by_traversability: u64,
    pub states_sent_to_volumetric: u64,
    pub motions_checked: u64,
}

impl AddAssign for CheckStats {
    fn add_assign(&mut self, rhs: Self) {
        self.traversability_queries += rhs.traversability_queries;
        self.tsdf_queries += rhs.tsdf_queries;
        self.states_accepted_by_traversability += rhs.states_accepted_by_traversability;
        self.states_rejected_by_traversability += rhs.states_rejected_by_traversability;
        self.states_sent_to_volumetric += rhs.states_sent_to_volumetric;
        self.motions_checked += rhs.motions_checked;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxCheck {
    Free,
    Collision,
}

/// Read-only validity checker over a map. Counters live in a caller-owned
/// [`CheckStats`], so one checker can serve many sessions concurrently.
#[derive(Debug, Clone, Copy)]
pub struct StateChecker<'m> {
    map: &'m MapBundle,
    footprint: RobotFootprint,
    config: CheckerConfig,
}

impl<'m> StateChecker<'m> {
    pub fn new(map: &'m MapBundle, footprint: RobotFootprint, config: CheckerConfig) -> Self {
        Self {
            map,
            footprint,
            config,
        }
    }

    pub fn map(&self) -> &'m MapBundle {
        self.map
    }

    pub fn footprint(&self) -> &RobotFootprint {
        &self.footprint
    }

    pub fn config(&self) -> &CheckerConfig {
        &self.config
    }

    pub fn check_state(&self, s: &SE2State, stats: &mut CheckStats) -> bool {
        stats.traversability_queries += 1;
        let Some(trav) = self.map.query_traversability(s.position()) else {
            stats.states_rejected_by_traversability += 1;
            return false;
        };
        if trav < self.config.t_low {
            stats.states_rejected_by_traversability += 1;
            return false;
        }
        if trav > self.config.t_high {
            stats.states_accepted_by_traversability += 1;
            return true;
        }
        stats.states_sent_to_volumetric += 1;
        self.check_footprint(s, stats) == BoxCheck::Free
    }

    /// Volumetric check of the whole footprint at `s`, ignoring traversability.
    pub fn check_footprint(&self, s: &SE2State, stats: &mut CheckStats) -> BoxCheck {
        self.check_box_collision(
            s.position(),
            0.5 * self.footprint.length,
            0.5 * self.footprint.width,
            self.footprint.long_axis_yaw(s.yaw()),
            0,
            stats,
        )
    }

    /// Recursive inner/outer circle test of an oriented box against the TSDF.
    ///
    /// `yaw` is the direction of the `half_len` axis and `half_len >= half_wid`
    /// is expected at the root; sub-boxes are always split along their
    /// currently longer side.
    pub fn check_box_collision(
        &self,
        center: [f64; 2],
        half_len: f64,
        half_wid: f64,
        yaw: f64,
        depth: u32,
        stats: &mut CheckStats,
    ) -> BoxCheck {
        stats.tsdf_queries += 1;
        let Some(d) = self.map.query_tsdf(center) else {
            return BoxCheck::Collision;
        };
        let r_in = half_len.min(half_wid);
        let r_out = half_len.hypot(half_wid);
        if d < r_in {
            return BoxCheck::Collision;
        }
        if d > r_out {
            return BoxCheck::Free;
        }
        if depth >= self.config.max_depth {
            // only the outer circle is evaluated at the leaf
            return BoxCheck::Collision;
        }
        let (c, s) = (yaw.cos(), yaw.sin());
        let (offset, len, wid) = if half_len >= half_wid {
            let h = 0.5 * half_len;
            ([c * h, s * h], h, half_wid)
        } else {
            let h = 0.5 * half_wid;
            ([-s * h, c * h], half_len, h)
        };
        for sign in [1.0, -1.0] {
            let sub = [center[0] + sign * offset[0], center[1] + sign * offset[1]];
            if self.check_box_collision(sub, len, wid, yaw, depth + 1, stats)
                == BoxCheck::Collision
            {
                return BoxCheck::Collision;
            }
        }
        BoxCheck::Free
    }

    /// Number of interpolation intervals used to discretize a motion.
    pub fn motion_intervals(&self, s1: &SE2State, s2: &SE2State) -> usize {
        let step = self.config.motion_step;
        let trans = (s1.distance_xy(s2) / step).ceil();
        let rot = (angle_diff(s1.yaw(), s2.yaw()) / step).ceil();
        trans.max(rot) as usize
    }

    /// Checks both endpoints and the interpolated states between them.
    ///
    /// States are spaced at most `motion_step` apart in position and in yaw
    /// (one meter of travel is traded for one radian of rotation). Samples are
    /// generated from the lexicographically smaller endpoint so the result
    /// does not depend on the direction of travel.
    pub fn check_motion(&self, s1: &SE2State, s2: &SE2State, stats: &mut CheckStats) -> bool {
        stats.motions_checked += 1;
        let (a, b) = canonical_pair(s1, s2);
        let n = self.motion_intervals(a, b);
        if !self.check_state(a, stats) {
            return false;
        }
        if n == 0 {
            return true;
        }
        if !self.check_state(b, stats) {
            return false;
        }
        self.check_interior(a, b, n, stats)
    }

    /// Like [`StateChecker::check_motion`] but trusts the endpoints.
    pub(crate) fn check_motion_interior(
        &self,
        s1: &SE2State,
        s2: &SE2State,
        stats: &mut CheckStats,
    ) -> bool {
        stats.motions_checked += 1;
        let (a, b) = canonical_pair(s1, s2);
        let n = self.motion_intervals(a, b);
        self.check_interior(a, b, n, stats)
    }

    fn check_interior(&self, a: &SE2State, b: &SE2State, n: usize, stats: &mut CheckStats) -> bool {
        (1..n).all(|k| {
            let s = interpolate_unchecked(a, b, k as f64 / n as f64);
            self.check_state(&s, stats)
        })
    }
}

fn canonical_pair<'a>(s1: &'a SE2State, s2: &'a SE2State) -> (&'a SE2State, &'a SE2State) {
    if s2.lexicographic_cmp(s1).is_lt() {
        (s2, s1)
    } else {
        (s1, s2)
    }
}
