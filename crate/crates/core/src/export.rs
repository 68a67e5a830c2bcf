//! Plain-text renderings of intermediates: CSV tables, ASCII PGM images
//! and SVG charts.

use std::fmt::Write;

use nalgebra::DMatrix;

use crate::classify::{ConfidenceEllipse, DiagnosisLabel, Rect, SymptomDomainPartition};
use crate::embed::EuclideanCloud;
use crate::features::{CurvatureHistogram, CurvatureSequence, DispersionPoint};
use crate::local_stats::SpdCloud;

/// One row per point, columns `c0 … c{d-1}`.
pub fn cloud_csv(cloud: &EuclideanCloud) -> String {
    let d = cloud.dim();
    let mut out = (0..d).map(|i| format!("c{i}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for p in cloud.points() {
        out.push_str(&p.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// Means and upper-triangular covariance entries, one row per point.
pub fn spd_cloud_csv(cloud: &SpdCloud) -> String {
    let Some(first) = cloud.points().first() else {
        return String::new();
    };
    let d = first.mean.len();
    let mut cols: Vec<String> = (0..d).map(|i| format!("mu{i}")).collect();
    for i in 0..d {
        for j in i..d {
            cols.push(format!("s{i}{j}"));
        }
    }
    let mut out = cols.join(",");
    out.push('\n');
    for g in cloud.points() {
        let m = g.covariance.matrix();
        let mut row: Vec<String> = g.mean.iter().map(f64::to_string).collect();
        for i in 0..d {
            for j in i..d {
                row.push(m[(i, j)].to_string());
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn curvature_csv(w: &CurvatureSequence) -> String {
    let mut out = String::from("index,curvature\n");
    for (i, v) in w.values().iter().enumerate() {
        let _ = writeln!(out, "{i},{v}");
    }
    out
}

pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        out.push_str(&m.row(r).iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// Plain (P2) grey-scale image, min-max scaled so the smallest entry is black.
pub fn matrix_pgm(m: &DMatrix<f64>) -> String {
    let (lo, hi) = m.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let span = hi - lo;
    let mut out = format!("P2\n{} {}\n255\n", m.ncols(), m.nrows());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|c| {
                let g = if span > 0.0 {
                    ((m[(r, c)] - lo) / span * 255.0).round()
                } else {
                    0.0
                };
                (g as u8).to_string()
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// `bin,lo,hi,count` with a final `overflow` row.
pub fn histogram_csv(h: &CurvatureHistogram) -> String {
    let mut out = String::from("bin,lo,hi,count\n");
    for (j, c) in h.counts.iter().enumerate() {
        let (lo, hi) = h.bin_range(j);
        let _ = writeln!(out, "{j},{lo},{hi},{c}");
    }
    let _ = writeln!(
        out,
        "overflow,{},inf,{}",
        h.bin_range(h.counts.len() - 1).1,
        h.overflow_count
    );
    out
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 48.0;

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        W / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn axes(out: &mut String, xmax: f64, ymax: f64, xlabel: &str, ylabel: &str) {
    let (x0, y0, x1, y1) = (PAD, H - PAD, W - PAD / 2.0, PAD / 2.0 + 8.0);
    let _ = writeln!(
        out,
        "<path d=\"M{x0} {y1} L{x0} {y0} L{x1} {y0}\" stroke=\"black\" fill=\"none\"/>"
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let x = x0 + f * (x1 - x0);
        let y = y0 - f * (y0 - y1);
        let _ = writeln!(
            out,
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            y0 + 14.0,
            tick(f * xmax)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{y:.1}\" text-anchor=\"end\">{}</text>",
            x0 - 4.0,
            tick(f * ymax)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        H - 8.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        "<text x=\"12\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 12 {:.1})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v == v.round() {
        format!("{v:.0}")
    } else {
        format!("{v:.1}")
    }
}

struct Frame {
    xmax: f64,
    ymax: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        PAD + (v / self.xmax).clamp(0.0, 1.0) * (W - 1.5 * PAD)
    }
    fn y(&self, v: f64) -> f64 {
        (H - PAD) - (v / self.ymax).clamp(0.0, 1.0) * (H - 1.5 * PAD - 8.0)
    }
}

/// Bar chart of bin heights.
pub fn histogram_svg(h: &CurvatureHistogram, title: &str) -> String {
    let xmax = h.bin_range(h.counts.len() - 1).1;
    let ymax = h.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let f = Frame { xmax, ymax };
    let mut out = svg_open(title);
    axes(&mut out, xmax, ymax, "scalar curvature", "count");
    for (j, &c) in h.counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let (lo, hi) = h.bin_range(j);
        let (xa, xb, ya) = (f.x(lo), f.x(hi), f.y(c as f64));
        let _ = writeln!(
            out,
            "<rect x=\"{xa:.2}\" y=\"{ya:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"steelblue\"/>",
            (xb - xa).max(0.5),
            f.y(0.0) - ya
        );
    }
    if h.overflow_count > 0 {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"40\" text-anchor=\"end\">{} above {}</text>",
            W - PAD / 2.0,
            h.overflow_count,
            tick(xmax)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn label_colour(label: DiagnosisLabel) -> &'static str {
    match label {
        DiagnosisLabel::Normal => "#2a9d8f",
        DiagnosisLabel::AtrialPremature => "#e9c46a",
        DiagnosisLabel::VentricularFlutter => "#e76f51",
        DiagnosisLabel::FusionVentricularNormal => "#f4a261",
        DiagnosisLabel::PrematureVentricular => "#d62828",
        DiagnosisLabel::VentricularAbnormal => "#9d0208",
        DiagnosisLabel::LeftBundleBranchBlock => "#264653",
        DiagnosisLabel::RightBundleBranchBlock => "#457b9d",
        DiagnosisLabel::BundleBranchBlock => "#1d3557",
        DiagnosisLabel::Unclassified => "#888888",
    }
}

/// Dispersion points over the domain rectangles, with optional ellipses.
pub fn scatter_svg(
    points: &[(DispersionPoint, DiagnosisLabel)],
    partition: &SymptomDomainPartition,
    ellipses: &[ConfidenceEllipse],
    title: &str,
) -> String {
    let xmax = points
        .iter()
        .map(|(p, _)| p.cur1)
        .fold(partition.upper_bound(), f64::max)
        .max(1.0);
    let ymax = points.iter().map(|(p, _)| p.cur2 * 1.05).fold(160.0, f64::max);
    let f = Frame { xmax, ymax };
    let mut out = svg_open(title);
    let rects: [(&str, Rect, &str); 4] = [
        ("D0", partition.d0, "#2a9d8f"),
        ("D1", partition.d1, "#e9c46a"),
        ("D2", partition.d2, "#e76f51"),
        ("D3", partition.d3, "#457b9d"),
    ];
    for (name, r, colour) in rects {
        let (xa, xb) = (f.x(r.cur1.lo), f.x(r.cur1.hi.min(xmax)));
        let (ya, yb) = (f.y(r.cur2.hi.min(ymax)), f.y(r.cur2.lo));
        let _ = writeln!(
            out,
            "<rect x=\"{xa:.2}\" y=\"{ya:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{colour}\" fill-opacity=\"0.12\" stroke=\"{colour}\"/>",
            xb - xa,
            yb - ya
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{colour}\">{name}</text>",
            xa + 3.0,
            ya + 12.0
        );
    }
    for band in [(partition.d22, "D22"), (partition.d32, "D32")] {
        let r = band.0;
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-dasharray=\"3 3\"/>",
            f.x(r.cur1.lo),
            f.y(r.cur2.lo),
            f.x(r.cur1.hi),
            f.y(r.cur2.lo)
        );
    }
    axes(
        &mut out,
        xmax,
        ymax,
        "cur1 (transverse dispersion)",
        "cur2 (longitudinal dispersion)",
    );
    for e in ellipses {
        let sx = (W - 1.5 * PAD) / xmax;
        let sy = (H - 1.5 * PAD - 8.0) / ymax;
        let n = 72;
        let mut d = String::new();
        for i in 0..=n {
            let t = i as f64 / n as f64 * std::f64::consts::TAU;
            let (u, v) = (e.semi_axes[0] * t.cos(), e.semi_axes[1] * t.sin());
            let (c, s) = (e.orientation.cos(), e.orientation.sin());
            let (px, py) = (e.center[0] + c * u - s * v, e.center[1] + s * u + c * v);
            let _ = write!(
                d,
                "{}{:.2} {:.2} ",
                if i == 0 { "M" } else { "L" },
                PAD + px * sx,
                (H - PAD) - py * sy
            );
        }
        let _ = writeln!(
            out,
            "<path d=\"{}Z\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"><title>{}</title></path>",
            d,
            escape(&e.label)
        );
    }
    for (p, label) in points {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\"><title>{} ({:.3}, {:.3})</title></circle>",
            f.x(p.cur1),
            f.y(p.cur2),
            label_colour(*label),
            label,
            p.cur1,
            p.cur2
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::histogram;

    #[test]
    fn pgm_is_min_max_scaled() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]);
        assert_eq!(matrix_pgm(&m), "P2\n2 2\n255\n0 255\n255 0\n");
        let flat = DMatrix::from_element(1, 2, 3.0);
        assert_eq!(matrix_pgm(&flat), "P2\n2 1\n255\n0 0\n");
    }

    #[test]
    fn histogram_outputs() {
        let w = CurvatureSequence::new(vec![0.5, 1.5, 1.7, 9.0]).unwrap();
        let h = histogram(&w, 1.0, 3.0).unwrap();
        let csv = histogram_csv(&h);
        assert!(csv.starts_with("bin,lo,hi,count\n0,0,1,1\n1,1,2,2\n"));
        assert!(csv.ends_with("overflow,4,inf,1\n"));
        let svg = histogram_svg(&h, "beat <1>");
        assert!(svg.contains("beat &lt;1&gt;"));
        assert_eq!(svg.matches("fill=\"steelblue\"").count(), 2);
    }

    #[test]
    fn scatter_has_rectangles_and_points() {
        let pts = vec![
            (DispersionPoint::new(40.0, 5.0), DiagnosisLabel::Normal),
            (DispersionPoint::new(5.0, 300.0), DiagnosisLabel::RightBundleBranchBlock),
        ];
        let svg = scatter_svg(&pts, &SymptomDomainPartition::default(), &[], "x");
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains(">D3<"));
    }
}
