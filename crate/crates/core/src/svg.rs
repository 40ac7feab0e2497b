//! Self-contained deterministic SVG scatter plots of the instance space,
//! with optional boundary-hull and footprint overlays.

use std::fmt::Write;

use crate::analysis::InstanceSpace;
use crate::boundary::BoundaryHull;
use crate::dataset::TestSuite;
use crate::footprints::Footprint;
use crate::geometry::Point;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 520.0;
const MARGIN: f64 = 48.0;
const FAIL_COLOR: &str = "#1f77b4";
const SAFE_COLOR: &str = "#d62728";
const RAMP_LOW: [u8; 3] = [0x44, 0x01, 0x54];
const RAMP_HIGH: [u8; 3] = [0xfd, 0xe7, 0x25];

/// How the scatter points are colored.
pub enum Coloring<'a> {
    /// Two fixed colors with a fail/safe legend.
    Outcome(&'a [u8]),
    /// Monotone color ramp over the raw feature values, with min/max labels.
    Feature { name: &'a str, values: &'a [f64] },
}

struct Viewport {
    lo: [f64; 2],
    scale: f64,
    offset: [f64; 2],
}

impl Viewport {
    fn fit(points: &[Point], extra: &[Point]) -> Self {
        let (mut lo, mut hi) = crate::geometry::bounding_box(points);
        for p in extra {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let span_x = (hi[0] - lo[0]).max(1e-9);
        let span_y = (hi[1] - lo[1]).max(1e-9);
        let usable_w = WIDTH - 2.0 * MARGIN;
        let usable_h = HEIGHT - 2.0 * MARGIN;
        let scale = (usable_w / span_x).min(usable_h / span_y);
        let offset = [
            MARGIN + (usable_w - span_x * scale) / 2.0,
            MARGIN + (usable_h - span_y * scale) / 2.0,
        ];
        Self { lo, scale, offset }
    }

    fn map(&self, p: Point) -> (f64, f64) {
        let x = self.offset[0] + (p[0] - self.lo[0]) * self.scale;
        let y = HEIGHT - (self.offset[1] + (p[1] - self.lo[1]) * self.scale);
        (x, y)
    }
}

fn ramp_color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let mix = |a: u8, b: u8| (f64::from(a) + t * (f64::from(b) - f64::from(a))).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(RAMP_LOW[0], RAMP_HIGH[0]),
        mix(RAMP_LOW[1], RAMP_HIGH[1]),
        mix(RAMP_LOW[2], RAMP_HIGH[2])
    )
}

fn path_elements<F: Fn(Point) -> (f64, f64)>(fp: &Footprint, map: F, fill: &str) -> String {
    let mut out = String::new();
    for lp in &fp.polygons {
        if lp.len() < 3 {
            continue;
        }
        let mut d = String::new();
        for (i, p) in lp.iter().enumerate() {
            let (x, y) = map(*p);
            let _ = write!(d, "{}{x:.2} {y:.2}", if i == 0 { "M" } else { "L" });
        }
        d.push('Z');
        let _ = writeln!(
            out,
            "  <path d=\"{d}\" fill=\"{fill}\" fill-rule=\"evenodd\" fill-opacity=\"0.15\" stroke=\"{fill}\" stroke-width=\"1\"/>"
        );
    }
    out
}

/// Footprint boundary loops as standalone `<path>` elements in raw
/// instance-space coordinates, even-odd fill so holes render as holes.
pub fn footprint_paths(fp: &Footprint) -> String {
    path_elements(fp, |p| (p[0], p[1]), "#555555")
}

/// Render a scatter plot of instance-space coordinates. The hull overlay is
/// a single outlined polygon; footprints render as translucent paths.
/// Output bytes are deterministic for identical input.
pub fn scatter_svg(
    coords: &[Point],
    coloring: &Coloring<'_>,
    hull: Option<&BoundaryHull>,
    footprint: Option<&Footprint>,
    title: &str,
) -> String {
    let hull_points: Vec<Point> = hull.map(|h| h.vertices_2d.clone()).unwrap_or_default();
    let view = Viewport::fit(coords, &hull_points);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>"
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{:.2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        xml_escape(title)
    );

    if let Some(fp) = footprint {
        svg.push_str(&path_elements(fp, |p| view.map(p), "#555555"));
    }

    match coloring {
        Coloring::Outcome(outcomes) => {
            for (p, &y) in coords.iter().zip(outcomes.iter()) {
                let (cx, cy) = view.map(*p);
                let color = if y == 1 { FAIL_COLOR } else { SAFE_COLOR };
                let _ = writeln!(
                    svg,
                    "  <circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"2.5\" fill=\"{color}\" fill-opacity=\"0.75\"/>"
                );
            }
            // legend swatches are rects so point circles stay countable
            let _ = writeln!(
                svg,
                "  <rect x=\"{x:.2}\" y=\"38\" width=\"12\" height=\"12\" fill=\"{FAIL_COLOR}\"/>",
                x = WIDTH - 150.0
            );
            let _ = writeln!(
                svg,
                "  <text x=\"{x:.2}\" y=\"48\" font-family=\"sans-serif\" font-size=\"12\">fail</text>",
                x = WIDTH - 134.0
            );
            let _ = writeln!(
                svg,
                "  <rect x=\"{x:.2}\" y=\"56\" width=\"12\" height=\"12\" fill=\"{SAFE_COLOR}\"/>",
                x = WIDTH - 150.0
            );
            let _ = writeln!(
                svg,
                "  <text x=\"{x:.2}\" y=\"66\" font-family=\"sans-serif\" font-size=\"12\">pass</text>",
                x = WIDTH - 134.0
            );
        }
        Coloring::Feature { name, values } => {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &v in *values {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let span = (hi - lo).max(1e-300);
            for (p, &v) in coords.iter().zip(values.iter()) {
                let (cx, cy) = view.map(*p);
                let color = ramp_color((v - lo) / span);
                let _ = writeln!(
                    svg,
                    "  <circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"2.5\" fill=\"{color}\" fill-opacity=\"0.8\"/>"
                );
            }
            // color ramp with min/max labels
            let x = WIDTH - 160.0;
            for step in 0..20 {
                let t = step as f64 / 19.0;
                let _ = writeln!(
                    svg,
                    "  <rect x=\"{:.2}\" y=\"40\" width=\"6\" height=\"10\" fill=\"{}\"/>",
                    x + step as f64 * 6.0,
                    ramp_color(t)
                );
            }
            let _ = writeln!(
                svg,
                "  <text x=\"{x:.2}\" y=\"64\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
                format_value(lo)
            );
            let _ = writeln!(
                svg,
                "  <text x=\"{:.2}\" y=\"64\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>",
                x + 120.0,
                format_value(hi)
            );
            let _ = writeln!(
                svg,
                "  <text x=\"{x:.2}\" y=\"34\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
                xml_escape(name)
            );
        }
    }

    if let Some(h) = hull {
        let mut pts = String::new();
        for (i, p) in h.vertices_2d.iter().enumerate() {
            let (x, y) = view.map(*p);
            if i > 0 {
                pts.push(' ');
            }
            let _ = write!(pts, "{x:.2},{y:.2}");
        }
        let _ = writeln!(
            svg,
            "  <polygon points=\"{pts}\" fill=\"none\" stroke=\"#222222\" stroke-width=\"1.5\" stroke-dasharray=\"6 3\"/>"
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_value(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 0.01 && v.abs() < 10000.0) {
        format!("{v:.3}")
    } else {
        format!("{v:.3e}")
    }
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

/// The standard plot set for one analysis: outcome distribution, one
/// value-colored plot per selected feature, and the boundary overlay.
pub fn render_standard_plots(suite: &TestSuite, space: &InstanceSpace) -> Vec<(String, String)> {
    let mut plots = Vec::new();
    plots.push((
        "instance_space_outcome.svg".to_string(),
        scatter_svg(
            &space.coords,
            &Coloring::Outcome(suite.outcomes()),
            None,
            Some(&space.bug_area.bug_footprint),
            "Scenario outcome distribution",
        ),
    ));
    for (slot, &feature) in space.selected.iter().enumerate() {
        let name = &space.selected_names[slot];
        let values = suite.column(feature);
        plots.push((
            format!("instance_space_feature_{}.svg", sanitize(name)),
            scatter_svg(
                &space.coords,
                &Coloring::Feature {
                    name,
                    values: &values,
                },
                None,
                None,
                &format!("Feature distribution: {name}"),
            ),
        ));
    }
    plots.push((
        "instance_space_boundary.svg".to_string(),
        scatter_svg(
            &space.coords,
            &Coloring::Outcome(suite.outcomes()),
            Some(&space.hull),
            None,
            "Instance space boundary",
        ),
    ));
    plots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_two_circles_and_legend() {
        let coords = vec![[0.0, 0.0], [1.0, 1.0]];
        let svg = scatter_svg(&coords, &Coloring::Outcome(&[1, 0]), None, None, "t");
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("fail"));
        assert!(svg.contains("pass"));
        assert_eq!(svg.matches("<polygon").count(), 0);
    }

    #[test]
    fn hull_overlay_is_one_polygon() {
        let coords = vec![[0.0, 0.0], [1.0, 1.0], [0.5, 0.2]];
        let hull = BoundaryHull {
            vertices_2d: vec![[-1.0, -1.0], [2.0, -1.0], [2.0, 2.0], [-1.0, 2.0]],
            area_bound: 9.0,
            kept_vertex_count: 4,
            pruned_vertex_count: 0,
        };
        let svg = scatter_svg(
            &coords,
            &Coloring::Outcome(&[1, 0, 0]),
            Some(&hull),
            None,
            "t",
        );
        assert_eq!(svg.matches("<polygon").count(), 1);
    }

    #[test]
    fn identical_input_identical_bytes() {
        let coords = vec![[0.25, -3.0], [1.5, 2.0], [7.0, 0.1]];
        let values = vec![0.1, 5.5, -2.0];
        let render = || {
            scatter_svg(
                &coords,
                &Coloring::Feature {
                    name: "speed",
                    values: &values,
                },
                None,
                None,
                "feature",
            )
        };
        assert_eq!(render(), render());
    }

    #[test]
    fn feature_plot_labels_min_max() {
        let coords = vec![[0.0, 0.0], [1.0, 1.0]];
        let values = vec![-1.5, 4.25];
        let svg = scatter_svg(
            &coords,
            &Coloring::Feature {
                name: "angle",
                values: &values,
            },
            None,
            None,
            "t",
        );
        assert!(svg.contains("-1.500"));
        assert!(svg.contains("4.250"));
        assert!(svg.contains("angle"));
    }
}
