//! SVG and CSV output for traces.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::Point2;
use crate::trace::{Sample, Trace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderStyle {
    /// Stroke width in px.
    pub stroke_width: f64,
    pub palette: Vec<String>,
    /// Blank border around the joint bounding box, px.
    pub margin: f64,
    /// Flip so +y points up on screen.
    pub flip_y: bool,
    /// px per cm.
    pub scale: f64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            stroke_width: 1.0,
            palette: ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]
                .into_iter()
                .map(String::from)
                .collect(),
            margin: 10.0,
            flip_y: true,
            scale: 10.0,
        }
    }
}

impl RenderStyle {
    fn validate(&self) -> Result<()> {
        if self.stroke_width.is_nan() || self.stroke_width <= 0.0 {
            return Err(Error::InvalidValue("stroke width must be positive".into()));
        }
        if self.palette.is_empty() {
            return Err(Error::Empty("palette"));
        }
        if self.scale.is_nan() || self.scale <= 0.0 || self.margin.is_nan() || self.margin < 0.0 {
            return Err(Error::InvalidValue("scale must be positive and margin non-negative".into()));
        }
        Ok(())
    }

    fn project(&self, p: Point2) -> (f64, f64) {
        let y = if self.flip_y { -p.y } else { p.y };
        (p.x * self.scale, y * self.scale)
    }
}

/// Coordinates are written with 4 decimals.
fn coord(value: f64) -> String {
    let rounded = format!("{value:.4}");
    // avoid "-0.0000"
    if rounded.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0.0000".to_string()
    } else {
        rounded
    }
}

/// SVG path data for a polyline: `M x y L x y ...`, with `Z` when closed.
pub fn path_data(points: &[Point2], closed: bool, style: &RenderStyle) -> String {
    let mut d = String::new();
    for (i, p) in points.iter().enumerate() {
        let (x, y) = style.project(*p);
        let cmd = if i == 0 { 'M' } else { 'L' };
        if i > 0 {
            d.push(' ');
        }
        let _ = write!(d, "{cmd}{} {}", coord(x), coord(y));
    }
    if closed && !points.is_empty() {
        d.push_str(" Z");
    }
    d
}

/// One `<path>` per polyline, colored from the palette in order.
pub fn polylines_to_svg(polylines: &[(Vec<Point2>, bool)], style: &RenderStyle) -> Result<String> {
    style.validate()?;
    let mut min = (f64::INFINITY, f64::INFINITY);
    let mut max = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in polylines.iter().flat_map(|(pts, _)| pts) {
        let (x, y) = style.project(*p);
        min = (min.0.min(x), min.1.min(y));
        max = (max.0.max(x), max.1.max(y));
    }
    if !min.0.is_finite() {
        min = (0.0, 0.0);
        max = (0.0, 0.0);
    }
    let x0 = min.0 - style.margin;
    let y0 = min.1 - style.margin;
    let width = (max.0 - min.0) + 2.0 * style.margin;
    let height = (max.1 - min.1) + 2.0 * style.margin;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"{} {} {} {}\">",
        coord(width),
        coord(height),
        coord(x0),
        coord(y0),
        coord(width),
        coord(height)
    );
    let _ = writeln!(
        out,
        "<g fill=\"none\" stroke-width=\"{}\" stroke-linejoin=\"round\">",
        style.stroke_width
    );
    for (i, (points, closed)) in polylines.iter().enumerate() {
        let color = &style.palette[i % style.palette.len()];
        let _ = writeln!(
            out,
            "<path stroke=\"{}\" d=\"{}\"/>",
            xml_escape(color),
            path_data(points, *closed, style)
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('"', "&quot;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Render traces that share a frame into one document.
pub fn to_svg(traces: &[Trace], style: &RenderStyle) -> Result<String> {
    let first = traces.first().ok_or(Error::Empty("trace list"))?;
    if traces.iter().any(|t| t.frame() != first.frame()) {
        return Err(Error::MixedFrames);
    }
    let polylines: Vec<_> = traces
        .iter()
        .map(|t| {
            let mut points: Vec<Point2> = t.points().collect();
            // the closing sample repeats the first; Z draws that segment
            if t.is_closed() && points.len() > 1 {
                points.pop();
            }
            (points, t.is_closed())
        })
        .collect();
    polylines_to_svg(&polylines, style)
}

/// Header `t,x,y`, one row per sample, shortest round-trip decimals.
pub fn to_csv(trace: &Trace) -> String {
    let mut out = String::with_capacity(trace.len() * 48 + 8);
    out.push_str("t,x,y\n");
    for s in trace.samples() {
        let _ = writeln!(out, "{},{},{}", s.t, s.p.x, s.p.y);
    }
    out
}

/// Inverse of [`to_csv`] for the sample rows.
pub fn read_csv_samples(text: &str) -> Result<Vec<Sample>> {
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("t,x,y") => {}
        other => return Err(Error::Csv(format!("expected header \"t,x,y\", got {other:?}"))),
    }
    lines
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Csv(format!("row {}: {e}", i + 2)))
            };
            match fields.as_slice() {
                [t, x, y] => Ok(Sample {
                    t: parse(t)?,
                    p: Point2::new(parse(x)?, parse(y)?),
                }),
                _ => Err(Error::Csv(format!("row {}: expected 3 fields", i + 2))),
            }
        })
        .collect()
}

/// Sidecar JSON describing the rig and frame of a CSV trace.
pub fn metadata_json(trace: &Trace) -> String {
    serde_json::to_string_pretty(&trace.meta()).expect("trace metadata serializes")
}
