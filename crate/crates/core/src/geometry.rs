//! SE(2) states, the path cost model and heading post-processing.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Wraps an angle into `[-π, π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let wrapped = (theta + PI).rem_euclid(TWO_PI) - PI;
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if wrapped >= PI {
        wrapped - TWO_PI
    } else {
        wrapped
    }
}

/// Shortest unsigned distance between two normalized angles, in `[0, π]`.
pub fn angle_diff(psi1: f64, psi2: f64) -> f64 {
    let d = (psi1 - psi2).abs();
    d.min(TWO_PI - d)
}

/// Planar robot pose. The yaw is kept in `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SE2State {
    x: f64,
    y: f64,
    yaw: f64,
}

impl SE2State {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            yaw: normalize_angle(yaw),
        }
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    #[inline]
    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn set_yaw(&mut self, yaw: f64) {
        self.yaw = normalize_angle(yaw);
    }

    pub fn with_yaw(mut self, yaw: f64) -> Self {
        self.set_yaw(yaw);
        self
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// Euclidean distance between the positions of two states.
    pub fn distance_xy(&self, other: &SE2State) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.x, self.y, self.yaw]
    }

    /// Total order used wherever a canonical orientation of a pair is needed.
    pub(crate) fn lexicographic_cmp(&self, other: &SE2State) -> std::cmp::Ordering {
        self.x
            .total_cmp(&other.x)
            .then(self.y.total_cmp(&other.y))
            .then(self.yaw.total_cmp(&other.yaw))
    }
}

impl fmt::Display for SE2State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3}, {:.3}, {:.3})", self.x, self.y, self.yaw)
    }
}

impl Serialize for SE2State {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_array().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SE2State {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [x, y, yaw] = <[f64; 3]>::deserialize(deserializer)?;
        if !(x.is_finite() && y.is_finite() && yaw.is_finite()) {
            return Err(serde::de::Error::custom("pose components must be finite"));
        }
        Ok(SE2State::new(x, y, yaw))
    }
}

/// Exponent applied to the translational norm in [`segment_cost`].
///
/// `Linear` is the metric form; every optimality guarantee in this crate
/// (admissible A* heuristic, informed-region soundness, lower bounds in
/// PoI selection) is stated for it. `Squared` is kept for comparison runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostExponent {
    #[default]
    Linear,
    Squared,
}

impl CostExponent {
    pub fn from_int(e: u8) -> Result<Self> {
        match e {
            1 => Ok(CostExponent::Linear),
            2 => Ok(CostExponent::Squared),
            other => Err(Error::Weights(format!(
                "cost exponent must be 1 or 2, got {other}"
            ))),
        }
    }
}

/// Weights of the translational and rotational part of the segment cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    translational: f64,
    rotational: f64,
    #[serde(default)]
    exponent: CostExponent,
}

impl CostWeights {
    /// Both weights must be strictly positive.
    pub fn new(translational: f64, rotational: f64) -> Result<Self> {
        Self::validate(translational, rotational)?;
        Ok(Self {
            translational,
            rotational,
            exponent: CostExponent::Linear,
        })
    }

    /// Like [`CostWeights::new`] but allows a zero rotational weight, which
    /// turns the cost into a pure position metric. Used for free-space
    /// optimality checks where the yaw of intermediate states is irrelevant.
    pub fn translational_only(translational: f64) -> Result<Self> {
        if !(translational.is_finite() && translational > 0.0) {
            return Err(Error::Weights(format!(
                "translational weight must be > 0, got {translational}"
            )));
        }
        Ok(Self {
            translational,
            rotational: 0.0,
            exponent: CostExponent::Linear,
        })
    }

    fn validate(translational: f64, rotational: f64) -> Result<()> {
        if !(translational.is_finite() && translational > 0.0) {
            return Err(Error::Weights(format!(
                "translational weight must be > 0, got {translational}"
            )));
        }
        if !(rotational.is_finite() && rotational > 0.0) {
            return Err(Error::Weights(format!(
                "rotational weight must be > 0, got {rotational}"
            )));
        }
        Ok(())
    }

    pub fn with_exponent(mut self, exponent: CostExponent) -> Self {
        self.exponent = exponent;
        self
    }

    pub fn translational(&self) -> f64 {
        self.translational
    }

    pub fn rotational(&self) -> f64 {
        self.rotational
    }

    pub fn exponent(&self) -> CostExponent {
        self.exponent
    }
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            translational: 1.0,
            rotational: 1.0,
            exponent: CostExponent::Linear,
        }
    }
}

/// Cost of moving along the straight segment between two states.
pub fn segment_cost(s1: &SE2State, s2: &SE2State, w: &CostWeights) -> f64 {
    let dist = s1.distance_xy(s2);
    let trans = match w.exponent {
        CostExponent::Linear => dist,
        CostExponent::Squared => dist * dist,
    };
    w.translational * trans + w.rotational * angle_diff(s1.yaw, s2.yaw)
}

/// Sum of segment costs over consecutive waypoints.
pub fn path_cost(waypoints: &[SE2State], w: &CostWeights) -> Result<f64> {
    if waypoints.is_empty() {
        return Err(Error::EmptyPath);
    }
    Ok(waypoints
        .windows(2)
        .map(|pair| segment_cost(&pair[0], &pair[1], w))
        .sum())
}

/// Linear interpolation of the position, shortest-arc interpolation of the yaw.
pub fn interpolate(s1: &SE2State, s2: &SE2State, t: f64) -> Result<SE2State> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InterpolationParameter(t));
    }
    Ok(interpolate_unchecked(s1, s2, t))
}

pub(crate) fn interpolate_unchecked(s1: &SE2State, s2: &SE2State, t: f64) -> SE2State {
    if t == 0.0 {
        return *s1;
    }
    if t == 1.0 {
        return *s2;
    }
    let dyaw = normalize_angle(s2.yaw - s1.yaw);
    SE2State::new(
        s1.x + t * (s2.x - s1.x),
        s1.y + t * (s2.y - s1.y),
        s1.yaw + t * dyaw,
    )
}

/// An ordered, non-empty list of waypoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SE2State>", into = "Vec<SE2State>")]
pub struct Path {
    waypoints: Vec<SE2State>,
}

impl Path {
    pub fn new(waypoints: Vec<SE2State>) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::EmptyPath);
        }
        Ok(Self { waypoints })
    }

    pub fn single(state: SE2State) -> Self {
        Self {
            waypoints: vec![state],
        }
    }

    pub fn waypoints(&self) -> &[SE2State] {
        &self.waypoints
    }

    pub fn into_waypoints(self) -> Vec<SE2State> {
        self.waypoints
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> &SE2State {
        &self.waypoints[0]
    }

    pub fn last(&self) -> &SE2State {
        &self.waypoints[self.waypoints.len() - 1]
    }

    pub fn cost(&self, w: &CostWeights) -> f64 {
        self.waypoints
            .windows(2)
            .map(|pair| segment_cost(&pair[0], &pair[1], w))
            .sum()
    }

    pub fn reversed(&self) -> Path {
        let mut waypoints = self.waypoints.clone();
        waypoints.reverse();
        Path { waypoints }
    }
}

impl TryFrom<Vec<SE2State>> for Path {
    type Error = Error;

    fn try_from(waypoints: Vec<SE2State>) -> Result<Self> {
        Path::new(waypoints)
    }
}

impl From<Path> for Vec<SE2State> {
    fn from(path: Path) -> Self {
        path.waypoints
    }
}

/// Points every free waypoint along the direction of travel.
///
/// A free waypoint faces its successor; the last free waypoint of the path
/// faces away from its predecessor. Zero-length displacements copy the yaw
/// already assigned to the previous waypoint. Waypoints listed in `fixed`
/// keep their yaw, and positions are never touched.
pub fn align_headings(path: &Path, fixed: &[usize]) -> Path {
    let n = path.len();
    let mut is_fixed = vec![false; n];
    for &i in fixed {
        if i < n {
            is_fixed[i] = true;
        }
    }
    let src = path.waypoints();
    let mut out = src.to_vec();
    for i in 0..n {
        if is_fixed[i] {
            continue;
        }
        let (from, to) = if i + 1 < n {
            (&src[i], &src[i + 1])
        } else if i > 0 {
            (&src[i - 1], &src[i])
        } else {
            continue;
        };
        let dx = to.x - from.x;
        let dy = to.y - from.y;
        if dx == 0.0 && dy == 0.0 {
            if i > 0 {
                let prev = out[i - 1].yaw;
                out[i].set_yaw(prev);
            }
        } else {
            out[i].set_yaw(dy.atan2(dx));
        }
    }
    Path { waypoints: out }
}
