//! SVG figure of a report: components of `Z`, tangency points, trajectories
//! colored by control value and accessible boundaries.

use std::fmt::Write as _;

use crate::geometry::Vec2;
use crate::pipeline::AnalysisReport;
use crate::simulate::Trajectory;
use crate::system::Window;

const STYLE: &str = "\
.frame{fill:#fff;stroke:#999}\
.direct{fill:none;stroke:#1f6fb4;stroke-width:2}\
.inverse{fill:none;stroke:#c4302b;stroke-width:2}\
.unclassified{fill:none;stroke:#777;stroke-width:2;stroke-dasharray:4 3}\
.tangency{fill:#f0a500;stroke:#000;stroke-width:0.5}\
.u1{fill:none;stroke:#2a9d4a;stroke-width:1}\
.u0{fill:none;stroke:#7b3fa0;stroke-width:1}\
.umix{fill:none;stroke:#555;stroke-width:1}\
.boundary{fill:#f4e9c8;fill-opacity:0.5;stroke:#8a6d1a;stroke-width:1.5}\
.origin{fill:#000}";

fn pt(p: Vec2) -> String {
    format!("{:.6},{:.6}", p.x, -p.y)
}

fn polyline(out: &mut String, class: &str, pts: &[Vec2], closed: bool) {
    if pts.len() < 2 {
        return;
    }
    let tag = if closed { "polygon" } else { "polyline" };
    let coords: Vec<String> = pts.iter().map(|&p| pt(p)).collect();
    let _ = writeln!(
        out,
        "<{tag} class=\"{class}\" vector-effect=\"non-scaling-stroke\" points=\"{}\"/>",
        coords.join(" ")
    );
}

fn trajectory(out: &mut String, t: &Trajectory, stride: usize) {
    let s = &t.samples;
    let mut start = 0;
    while start + 1 < s.len() {
        let u = s[start].u;
        let mut end = start + 1;
        while end + 1 < s.len() && s[end].u == u {
            end += 1;
        }
        let mut pts: Vec<Vec2> = s[start..=end].iter().step_by(stride).map(|x| x.p).collect();
        if pts.last() != Some(&s[end].p) {
            pts.push(s[end].p);
        }
        let class = if u == 1.0 {
            "u1"
        } else if u == 0.0 {
            "u0"
        } else {
            "umix"
        };
        polyline(out, class, &pts, false);
        start = end;
    }
}

/// Render the figure with the view box equal to the window.
pub fn render(report: &AnalysisReport, w: &Window) -> String {
    let (width, height) = (w.xmax - w.xmin, w.ymax - w.ymin);
    let scale = 800.0 / width.max(height);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\">",
        width * scale,
        height * scale,
        w.xmin,
        -w.ymax,
        width,
        height
    );
    let _ = writeln!(out, "<title>{}</title>", report.system.name);
    let _ = writeln!(out, "<style>{STYLE}</style>");
    let _ = writeln!(
        out,
        "<rect class=\"frame\" vector-effect=\"non-scaling-stroke\" x=\"{:.6}\" y=\"{:.6}\" width=\"{:.6}\" height=\"{:.6}\"/>",
        w.xmin, -w.ymax, width, height
    );
    let a = &report.artifacts;
    for r in &a.regions {
        polyline(&mut out, "boundary", &r.boundary, true);
    }
    for t in a.trajectories.iter().chain(&a.tracks) {
        let stride = (t.samples.len() / 5000).max(1);
        trajectory(&mut out, t, stride);
    }
    let marker = 4.0 / scale;
    if let Some(z) = &a.zset {
        for c in &z.components {
            let class = match c.orientation {
                Some(crate::collinearity::Orientation::Direct) => "direct",
                Some(crate::collinearity::Orientation::Inverse) => "inverse",
                None => "unclassified",
            };
            polyline(&mut out, class, &c.polyline, c.closed);
        }
        for c in &z.components {
            for &t in &c.tangencies {
                let _ = writeln!(
                    out,
                    "<circle class=\"tangency\" vector-effect=\"non-scaling-stroke\" cx=\"{:.6}\" cy=\"{:.6}\" r=\"{:.6}\"/>",
                    t.x, -t.y, marker
                );
            }
        }
    }
    let _ = writeln!(out, "<circle class=\"origin\" cx=\"0\" cy=\"0\" r=\"{:.6}\"/>", marker * 0.5);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{builtins, pipeline};

    #[test]
    fn figure_has_all_layers() {
        let cfg = builtins::config("offset_circle_tangency").unwrap();
        let r = pipeline::run(&cfg).unwrap();
        let svg = render(&r, &cfg.window);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("viewBox=\"-4.000000 -4.000000 8.000000 8.000000\""));
        assert!(svg.contains("class=\"direct\""));
        assert_eq!(svg.matches("class=\"tangency\"").count(), 2);
        assert!(svg.contains("class=\"u1\"") || svg.contains("class=\"u0\""));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
