//! SVG rendering of a physical trajectory.

use std::fmt::Write;

use redirect_core::environment::SpaceMap;
use redirect_core::geometry::{Polygon, Vec2};
use redirect_core::simulation::Trace;

/// Pixels per metre.
const SCALE: f64 = 100.0;
const MARGIN: f64 = 0.5;

fn color(curvature_sign: i8) -> &'static str {
    match curvature_sign {
        1 => "#d95f02",
        -1 => "#1b9e77",
        _ => "#7570b3",
    }
}

fn class(curvature_sign: i8) -> &'static str {
    match curvature_sign {
        1 => "path steer-left",
        -1 => "path steer-right",
        _ => "path steer-none",
    }
}

struct Frame {
    lo: Vec2,
    hi: Vec2,
}

impl Frame {
    /// Screen coordinates, y pointing down.
    fn map(&self, p: Vec2) -> (f64, f64) {
        (
            (p.x - self.lo.x + MARGIN) * SCALE,
            (self.hi.y - p.y + MARGIN) * SCALE,
        )
    }

    fn points(&self, pts: impl Iterator<Item = Vec2>) -> String {
        let mut s = String::new();
        for p in pts {
            let (x, y) = self.map(p);
            if !s.is_empty() {
                s.push(' ');
            }
            write!(s, "{x:.1},{y:.1}").unwrap();
        }
        s
    }

    fn polygon(&self, poly: &Polygon) -> String {
        self.points(poly.vertices().iter().copied())
    }
}

/// Draws the physical space, the walked path colored by curvature direction,
/// reset markers and, when `show_future` is set, the overlaid forecast points.
pub fn render_svg(physical: &SpaceMap, trace: &Trace, title: &str, show_future: bool) -> String {
    let (lo, hi) = physical.boundary().bounds();
    let f = Frame { lo, hi };
    let width = (hi.x - lo.x + 2.0 * MARGIN) * SCALE;
    let height = (hi.y - lo.y + 2.0 * MARGIN) * SCALE;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    )
    .unwrap();
    writeln!(svg, "<title>{}</title>", escape(title)).unwrap();
    writeln!(
        svg,
        r##"<polygon class="boundary" points="{}" fill="#ffffff" stroke="#000000" stroke-width="3"/>"##,
        f.polygon(physical.boundary())
    )
    .unwrap();
    for o in physical.obstacles() {
        writeln!(
            svg,
            r##"<polygon class="obstacle" points="{}" fill="#999999" stroke="#000000" stroke-width="2"/>"##,
            f.polygon(o)
        )
        .unwrap();
    }

    // one polyline per run of frames with the same curvature direction; runs
    // share their end points so the path stays connected
    let frames = &trace.frames;
    let mut start = 0;
    while start < frames.len() {
        let sign = frames[start].curvature_sign;
        let mut end = start + 1;
        while end < frames.len() && frames[end].curvature_sign == sign {
            end += 1;
        }
        let last = end.min(frames.len() - 1);
        writeln!(
            svg,
            r#"<polyline class="{}" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            class(sign),
            f.points(frames[start..=last].iter().map(|fr| fr.physical_position)),
            color(sign)
        )
        .unwrap();
        start = end;
    }

    if show_future {
        for p in frames.iter().filter_map(|fr| fr.future_physical) {
            let (x, y) = f.map(p);
            writeln!(
                svg,
                r##"<circle class="future" cx="{x:.1}" cy="{y:.1}" r="2" fill="#e7298a"/>"##
            )
            .unwrap();
        }
    }

    for r in &trace.resets {
        let (x, y) = f.map(r.physical_position);
        writeln!(
            svg,
            r##"<circle class="reset" cx="{x:.1}" cy="{y:.1}" r="8" fill="none" stroke="#e41a1c" stroke-width="3"/>"##
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
