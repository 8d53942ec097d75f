//! Deterministic SVG drawings in the Poincaré disk, and line charts.

use horolab::geometry::{PlanePoint, ORIGIN};
use horolab::group::{enumerate_words, SchottkyGroup};
use std::fmt::Write as _;

const SIZE: f64 = 800.0;
const SCALE: f64 = 380.0;

/// Cayley map from the upper half-plane to the unit disk, sending `o = i` to 0.
fn cayley(x: f64, y: f64) -> (f64, f64) {
    // (z - i) / (z + i)
    let (nr, ni) = (x, y - 1.0);
    let (dr, di) = (x, y + 1.0);
    let den = dr * dr + di * di;
    ((nr * dr + ni * di) / den, (ni * dr - nr * di) / den)
}

fn boundary_to_disk(t: f64) -> (f64, f64) {
    cayley(t, 0.0)
}

fn screen(p: (f64, f64)) -> (f64, f64) {
    (0.5 * SIZE + SCALE * p.0, 0.5 * SIZE - SCALE * p.1)
}

/// Circle orthogonal to the unit circle through the images of the real points `a`, `b`.
/// `None` when the two images are antipodal and the geodesic is a diameter.
fn geodesic_circle(a: f64, b: f64) -> Option<((f64, f64), f64)> {
    let p = boundary_to_disk(a);
    let q = boundary_to_disk(b);
    let (sx, sy) = (p.0 + q.0, p.1 + q.1);
    let n2 = sx * sx + sy * sy;
    if n2 < 1e-12 {
        return None;
    }
    let r = ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt() / n2.sqrt();
    Some(((2.0 * sx / n2, 2.0 * sy / n2), r))
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
    );
    let _ = writeln!(out, "<title>{title}</title>");
}

fn unit_circle(out: &mut String, fill: &str) {
    let (cx, cy) = screen((0.0, 0.0));
    let _ = writeln!(
        out,
        "<circle class=\"boundary\" cx=\"{cx:.3}\" cy=\"{cy:.3}\" r=\"{SCALE:.3}\" fill=\"{fill}\" stroke=\"black\" stroke-width=\"1\"/>"
    );
}

fn interval_circle(out: &mut String, class: &str, a: f64, b: f64, style: &str) {
    match geodesic_circle(a, b) {
        Some((c, r)) => {
            let (cx, cy) = screen(c);
            let _ = writeln!(
                out,
                "<circle class=\"{class}\" cx=\"{cx:.3}\" cy=\"{cy:.3}\" r=\"{:.3}\" {style}/>",
                r * SCALE
            );
        }
        None => {
            let (x1, y1) = screen(boundary_to_disk(a));
            let (x2, y2) = screen(boundary_to_disk(b));
            let _ = writeln!(
                out,
                "<line class=\"{class}\" x1=\"{x1:.3}\" y1=\"{y1:.3}\" x2=\"{x2:.3}\" y2=\"{y2:.3}\" {style}/>"
            );
        }
    }
}

/// Nested disks of the limit set down to `depth`; the first level has one disk per letter,
/// tagged `disk d1`.
pub fn limit_set(group: &SchottkyGroup, depth: usize) -> String {
    let mut out = String::new();
    header(&mut out, "limit set: nested Schottky disks");
    unit_circle(&mut out, "white");
    for w in enumerate_words(group, depth) {
        if w.is_empty() {
            continue;
        }
        let Ok((lo, hi)) = group.cylinder_interval(&w) else {
            continue;
        };
        let n = w.len();
        let shade = 40 + 180 * (n - 1) / depth.max(1);
        let style = format!("fill=\"none\" stroke=\"rgb({shade},{shade},{})\" stroke-width=\"1\"", 255 - shade / 2);
        interval_circle(&mut out, &format!("disk d{n}"), lo, hi, &style);
    }
    out.push_str("</svg>\n");
    out
}

/// Orbit points `g o` for `|g| <= max_len`, colored by word length.
pub fn orbit(group: &SchottkyGroup, max_len: usize) -> String {
    let mut out = String::new();
    header(&mut out, "orbit of o colored by word length");
    unit_circle(&mut out, "white");
    for w in enumerate_words(group, max_len) {
        let p: PlanePoint = w.matrix.apply_point(ORIGIN);
        let (cx, cy) = screen(cayley(p.x, p.y));
        let n = w.len();
        let hue = (n * 300) / max_len.max(1);
        let r = 4.0 / (1.0 + n as f64);
        let _ = writeln!(
            out,
            "<circle class=\"orbit l{n}\" cx=\"{cx:.3}\" cy=\"{cy:.3}\" r=\"{r:.3}\" fill=\"hsl({hue},70%,45%)\"/>"
        );
    }
    out.push_str("</svg>\n");
    out
}

/// The fundamental domain: the disk minus the half-disks bounded by the sides.
pub fn domain(group: &SchottkyGroup) -> String {
    let mut out = String::new();
    header(&mut out, "fundamental domain F");
    unit_circle(&mut out, "rgb(200,215,235)");
    for d in group.disks() {
        let (lo, hi) = d.interval();
        interval_circle(&mut out, "side", lo, hi, "fill=\"white\" stroke=\"rgb(30,60,120)\" stroke-width=\"1.5\"");
    }
    let (cx, cy) = screen((0.0, 0.0));
    let _ = writeln!(out, "<circle class=\"origin\" cx=\"{cx:.3}\" cy=\"{cy:.3}\" r=\"3\" fill=\"black\"/>");
    out.push_str("</svg>\n");
    out
}

/// One named curve of a chart.
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Line chart with optional logarithmic axes. Non-positive values are dropped on log axes.
pub fn chart(title: &str, x_label: &str, y_label: &str, series: &[Series], log_x: bool, log_y: bool) -> String {
    let (w, h) = (720.0, 480.0);
    let (left, right, top, bottom) = (80.0, 200.0, 40.0, 60.0);
    let tx = |x: f64| if log_x { x.ln() } else { x };
    let ty = |y: f64| if log_y { y.ln() } else { y };
    let keep = |&(x, y): &(f64, f64)| (!log_x || x > 0.0) && (!log_y || y > 0.0) && x.is_finite() && y.is_finite();
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.points.iter().filter(|p| keep(p)).map(|&(x, y)| (tx(x), ty(y))).collect())
        .collect();
    let all: Vec<(f64, f64)> = pts.iter().flatten().cloned().collect();
    let (mut x0, mut x1, mut y0, mut y1) = all.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if all.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(
        out,
        "<rect x=\"{left}\" y=\"{top}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        w - left - right,
        h - top - bottom
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        0.5 * (left + w - right),
        h - 15.0,
        escape(&axis_label(x_label, log_x))
    );
    let _ = writeln!(
        out,
        "<text x=\"15\" y=\"{:.1}\" font-size=\"14\" transform=\"rotate(-90 15 {:.1})\" text-anchor=\"middle\">{}</text>",
        0.5 * (top + h - bottom),
        0.5 * (top + h - bottom),
        escape(&axis_label(y_label, log_y))
    );
    for (k, (lo, hi, horizontal)) in [(x0, x1, true), (y0, y1, false)].into_iter().enumerate() {
        for j in 0..=4 {
            let v = lo + (hi - lo) * j as f64 / 4.0;
            let shown = if (k == 0 && log_x) || (k == 1 && log_y) { v.exp() } else { v };
            let label = format!("{shown:.3e}");
            if horizontal {
                let _ = writeln!(
                    out,
                    "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\">{label}</text>",
                    px(v),
                    h - bottom + 15.0
                );
            } else {
                let _ = writeln!(
                    out,
                    "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"end\">{label}</text>",
                    left - 5.0,
                    py(v) + 3.0
                );
            }
        }
    }
    for (k, (s, p)) in series.iter().zip(&pts).enumerate() {
        let hue = (k * 360) / series.len().max(1);
        let color = format!("hsl({hue},65%,40%)");
        let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            out,
            "<polyline class=\"series\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            path.join(" ")
        );
        for &(x, y) in p {
            let _ = writeln!(out, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>", px(x), py(y));
        }
        let ly = top + 15.0 + 18.0 * k as f64;
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{ly:.1}\" font-size=\"11\" fill=\"{color}\">{}</text>",
            w - right + 10.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn axis_label(label: &str, log: bool) -> String {
    if log {
        format!("{label} (log scale)")
    } else {
        label.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geodesic_circle_is_orthogonal_to_the_boundary() {
        let ((cx, cy), r) = geodesic_circle(1.0, 3.0).unwrap();
        assert!((cx * cx + cy * cy - 1.0 - r * r).abs() < 1e-12);
        let p = boundary_to_disk(3.0);
        assert!((((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt() - r).abs() < 1e-12);
    }

    #[test]
    fn cayley_sends_o_to_the_center() {
        let (x, y) = cayley(0.0, 1.0);
        assert!(x.abs() < 1e-15 && y.abs() < 1e-15);
    }
}
