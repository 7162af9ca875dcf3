//! SVG output for planar direction sets and amoebas.

use std::fmt::Write;

use loglimit::amoeba::PointCloud;
use loglimit::sphere::DirectionCloud;

const SIZE: f64 = 400.0;
const MARGIN: f64 = 20.0;

fn header(out: &mut String) {
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

/// Unit circle with one ray per direction. `None` unless the cloud is
/// planar.
pub fn directions(cloud: &DirectionCloud) -> Option<String> {
    if cloud.dim != 2 {
        return None;
    }
    let c = SIZE / 2.0;
    let r = c - MARGIN;
    let mut out = String::new();
    header(&mut out);
    let _ = writeln!(out, r#"<circle cx="{c}" cy="{c}" r="{r}" fill="none" stroke="gray"/>"#);
    for d in &cloud.directions {
        let (x, y) = (c + r * d[0], c - r * d[1]);
        let _ = writeln!(out, r#"<line x1="{c}" y1="{c}" x2="{x:.3}" y2="{y:.3}" stroke="black"/>"#);
        let _ = writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="2" fill="red"/>"#);
    }
    if cloud.origin_member {
        let _ = writeln!(out, r#"<circle cx="{c}" cy="{c}" r="3" fill="black"/>"#);
    }
    out.push_str("</svg>\n");
    Some(out)
}

/// Scatter plot scaled to the bounding box of the points.
pub fn scatter(cloud: &PointCloud) -> Option<String> {
    if cloud.dim != 2 {
        return None;
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in &cloud.points {
        for i in 0..2 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let span = (0..2).map(|i| (hi[i] - lo[i]).max(1e-12)).fold(0.0, f64::max);
    let k = (SIZE - 2.0 * MARGIN) / span;
    let mut out = String::new();
    header(&mut out);
    for p in &cloud.points {
        let x = MARGIN + (p[0] - lo[0]) * k;
        let y = SIZE - MARGIN - (p[1] - lo[1]) * k;
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1" fill="black"/>"#);
    }
    out.push_str("</svg>\n");
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use loglimit::amoeba::Space;

    #[test]
    fn rays_and_origin() {
        let cloud = DirectionCloud { dim: 2, directions: vec![vec![-1.0, 0.0], vec![0.0, -1.0]], origin_member: true };
        let s = directions(&cloud).unwrap();
        assert_eq!(s.matches("<line").count(), 2);
        assert!(s.contains(r#"x2="20.000" y2="200.000""#));
        assert!(directions(&DirectionCloud::empty(3, true)).is_none());
    }

    #[test]
    fn scatter_counts_points() {
        let cloud = PointCloud::new(2, vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![-1.0, 0.5]], Space::Log).unwrap();
        assert_eq!(scatter(&cloud).unwrap().matches("<circle").count(), 3);
    }
}
