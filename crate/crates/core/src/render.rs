//! Deterministic SVG rendering of maps, missions and plans.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::SE2State;
use crate::gridmap::MapBundle;
use crate::mission::{Mission, Plan};

const PX_PER_M: f64 = 20.0;
const RAMP_LEVELS: f64 = 10.0;

/// Traversability color: red (0) through yellow to green (1).
fn ramp(t: f64) -> String {
    let level = (t * RAMP_LEVELS).round() / RAMP_LEVELS;
    let (r, g) = if level < 0.5 {
        (255.0, 510.0 * level)
    } else {
        (510.0 * (1.0 - level), 255.0)
    };
    format!("#{:02x}{:02x}50", r.round() as u8, g.round() as u8)
}

struct Canvas {
    xmin: f64,
    ymax: f64,
    res: f64,
}

impl Canvas {
    fn x(&self, x: f64) -> f64 {
        (x - self.xmin) * PX_PER_M
    }

    fn y(&self, y: f64) -> f64 {
        (self.ymax - y) * PX_PER_M
    }

    fn point(&self, s: &SE2State) -> String {
        format!("{:.2},{:.2}", self.x(s.x()), self.y(s.y()))
    }
}

/// Renders the map, optionally with mission PoIs and a plan path.
pub fn render_svg(map: &MapBundle, mission: Option<&Mission>, plan: Option<&Plan>) -> Result<String> {
    let h = *map.header();
    let b = map.bounds();
    // cell edges, not centers, frame the picture
    let half = 0.5 * h.resolution;
    let c = Canvas {
        xmin: b.xmin - half,
        ymax: b.ymax + half,
        res: h.resolution,
    };
    let width = (b.width() + h.resolution) * PX_PER_M;
    let height = (b.height() + h.resolution) * PX_PER_M;

    let in_map = |s: &SE2State| b.contains(s.position());
    if let Some(p) = plan {
        if let Some(s) = p.waypoints.waypoints().iter().find(|s| !in_map(s)) {
            return Err(Error::InvalidPlan(format!("waypoint {s} lies outside the map bounds")));
        }
    }
    if let Some(m) = mission {
        let outside = std::iter::once(&m.start).chain(m.tois.iter().flat_map(|t| t.pois.iter())).find(|s| !in_map(s));
        if let Some(s) = outside {
            return Err(Error::Mission(format!("pose {s} lies outside the map bounds")));
        }
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.2} {height:.2}">"#
    );

    // traversability, run-length encoded per row
    let _ = writeln!(out, r#"<g id="traversability" shape-rendering="crispEdges">"#);
    let cell = c.res * PX_PER_M;
    for j in 0..h.height {
        let y = c.y(h.cell_center(0, j)[1] + half);
        let mut i = 0;
        while i < h.width {
            let color = match map.traversability().at(i, j) {
                t if t < 0.0 => "#808080".to_string(),
                t => ramp(t),
            };
            let mut end = i + 1;
            while end < h.width {
                let t = map.traversability().at(end, j);
                let next = if t < 0.0 { "#808080".to_string() } else { ramp(t) };
                if next != color {
                    break;
                }
                end += 1;
            }
            let x = c.x(h.cell_center(i, j)[0] - half);
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{cell:.2}" fill="{color}"/>"#,
                (end - i) as f64 * cell
            );
            i = end;
        }
    }
    let _ = writeln!(out, "</g>");

    // obstacle outlines: edges between occupied and free cells
    let occupied = |i: isize, j: isize| {
        i >= 0
            && j >= 0
            && (i as usize) < h.width
            && (j as usize) < h.height
            && map.tsdf().at(i as usize, j as usize) <= 0.0
    };
    let mut d = String::new();
    for j in 0..h.height as isize {
        for i in 0..h.width as isize {
            if !occupied(i, j) {
                continue;
            }
            let ctr = h.cell_center(i as usize, j as usize);
            let (x0, x1) = (c.x(ctr[0] - half), c.x(ctr[0] + half));
            let (y0, y1) = (c.y(ctr[1] - half), c.y(ctr[1] + half));
            if !occupied(i - 1, j) {
                let _ = write!(d, "M{x0:.2} {y0:.2}V{y1:.2}");
            }
            if !occupied(i + 1, j) {
                let _ = write!(d, "M{x1:.2} {y0:.2}V{y1:.2}");
            }
            if !occupied(i, j - 1) {
                let _ = write!(d, "M{x0:.2} {y0:.2}H{x1:.2}");
            }
            if !occupied(i, j + 1) {
                let _ = write!(d, "M{x0:.2} {y1:.2}H{x1:.2}");
            }
        }
    }
    if !d.is_empty() {
        let _ = writeln!(out, r#"<path id="obstacles" d="{d}" stroke="black" stroke-width="1.5" fill="none"/>"#);
    }

    if let Some(m) = mission {
        let _ = writeln!(out, r##"<g id="pois" fill="#1f3fbf">"##);
        for t in &m.tois {
            for p in &t.pois {
                let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5"/>"#, c.x(p.x()), c.y(p.y()));
            }
        }
        let _ = writeln!(out, "</g>");
    }

    if let Some(p) = plan {
        let pts: Vec<String> = p.waypoints.waypoints().iter().map(|s| c.point(s)).collect();
        let _ = writeln!(
            out,
            r##"<polyline id="path" points="{}" stroke="#d00090" stroke-width="2" fill="none"/>"##,
            pts.join(" ")
        );
    }

    let start = plan
        .map(|p| *p.waypoints.first())
        .or_else(|| mission.map(|m| m.start));
    if let Some(s) = start {
        let _ = writeln!(
            out,
            r#"<rect id="start" x="{:.2}" y="{:.2}" width="10" height="10" fill="white" stroke="black" stroke-width="2"/>"#,
            c.x(s.x()) - 5.0,
            c.y(s.y()) - 5.0
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
