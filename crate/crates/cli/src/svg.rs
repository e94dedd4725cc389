//! SVG rendering of a planar grid: shaded exclusion squares, dashed cover
//! boxes, cut lines whose stroke shrinks with the local spacing, and charge
//! markers.

use std::fmt::Write;

use equilibria_core::grid::{AxisBox, Polytope};
use equilibria_core::potential::Charge;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 20.0;

pub struct Scene<'a> {
    pub domain: &'a Polytope,
    pub cuts: &'a [Vec<f64>],
    pub exclusion: &'a [AxisBox],
    pub covers: &'a [AxisBox],
    pub charges: &'a [Charge],
}

struct View {
    lo: [f64; 2],
    scale: f64,
    height: f64,
}

impl View {
    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.lo[0]) * self.scale
    }
    fn y(&self, v: f64) -> f64 {
        MARGIN + self.height - (v - self.lo[1]) * self.scale
    }
}

/// Stroke width from the spacing around a cut: one step thinner per halving.
fn stroke(gap: f64, widest: f64) -> f64 {
    let halvings = (widest / gap.max(1e-300)).log2().max(0.0);
    (1.2 - 0.12 * halvings).max(0.05)
}

fn spacing(cuts: &[f64], i: usize) -> f64 {
    let left = if i > 0 { cuts[i] - cuts[i - 1] } else { f64::INFINITY };
    let right = if i + 1 < cuts.len() { cuts[i + 1] - cuts[i] } else { f64::INFINITY };
    left.min(right)
}

pub fn render(scene: &Scene) -> String {
    let bb = scene.domain.bounding_box();
    let (w, h) = (bb.width(0), bb.width(1));
    let scale = SIZE / w.max(h);
    let view = View { lo: [bb.lo[0], bb.lo[1]], scale, height: h * scale };
    let (pw, ph) = (w * scale + 2.0 * MARGIN, h * scale + 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{pw:.1}" height="{ph:.1}" viewBox="0 0 {pw:.1} {ph:.1}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{pw:.1}" height="{ph:.1}" fill="white"/>"#);
    let _ = writeln!(s, r#"<defs><clipPath id="domain"><rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}"/></clipPath></defs>"#,
        view.x(bb.lo[0]), view.y(bb.hi[1]), w * scale, h * scale);
    let _ = writeln!(s, r#"<g clip-path="url(#domain)">"#);
    let _ = writeln!(s, r##"<g id="exclusion" fill="#888888" fill-opacity="0.45" stroke="none">"##);
    for b in scene.exclusion {
        rect(&mut s, &view, b, "");
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r##"<g id="covers" fill="none" stroke="#3a6ea5" stroke-width="0.6" stroke-dasharray="4 3">"##);
    for b in scene.covers {
        rect(&mut s, &view, b, "");
    }
    let _ = writeln!(s, "</g>");
    let widest = [0, 1].iter().map(|&j| bb.width(j)).fold(0.0, f64::max);
    let _ = writeln!(s, r##"<g id="cuts" stroke="#222222">"##);
    for (i, &c) in scene.cuts[0].iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<line x1="{x:.3}" y1="{:.3}" x2="{x:.3}" y2="{:.3}" stroke-width="{:.3}"/>"#,
            view.y(bb.lo[1]),
            view.y(bb.hi[1]),
            stroke(spacing(&scene.cuts[0], i), widest),
            x = view.x(c)
        );
    }
    for (i, &c) in scene.cuts[1].iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<line x1="{:.3}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke-width="{:.3}"/>"#,
            view.x(bb.lo[0]),
            view.x(bb.hi[0]),
            stroke(spacing(&scene.cuts[1], i), widest),
            y = view.y(c)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</g>");
    if !scene.domain.is_box() {
        let _ = writeln!(s, r##"<g id="domain-rows" stroke="#aa3300" stroke-width="1.5">"##);
        for r in scene.domain.rows() {
            if let Some((a, b)) = clip_line(&r.normal, r.offset, bb) {
                let _ = writeln!(
                    s,
                    r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
                    view.x(a[0]),
                    view.y(a[1]),
                    view.x(b[0]),
                    view.y(b[1])
                );
            }
        }
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(s, r#"<g id="charges">"#);
    for c in scene.charges {
        let color = if c.q > 0.0 { "#c0392b" } else { "#2e86c1" };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.3}" cy="{:.3}" r="4" fill="{color}"/>"#,
            view.x(c.position[0]),
            view.y(c.position[1])
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    s
}

fn rect(s: &mut String, view: &View, b: &AxisBox, extra: &str) {
    let _ = writeln!(
        s,
        r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}"{extra}/>"#,
        view.x(b.lo[0]),
        view.y(b.hi[1]),
        b.width(0) * view.scale,
        b.width(1) * view.scale
    );
}

/// The segment of `normal · x = offset` inside the box.
fn clip_line(normal: &[f64], offset: f64, bb: &AxisBox) -> Option<([f64; 2], [f64; 2])> {
    let mut pts: Vec<[f64; 2]> = Vec::new();
    let (a, b) = (normal[0], normal[1]);
    if b != 0.0 {
        for x in [bb.lo[0], bb.hi[0]] {
            let y = (offset - a * x) / b;
            if y >= bb.lo[1] && y <= bb.hi[1] {
                pts.push([x, y]);
            }
        }
    }
    if a != 0.0 {
        for y in [bb.lo[1], bb.hi[1]] {
            let x = (offset - b * y) / a;
            if x >= bb.lo[0] && x <= bb.hi[0] {
                pts.push([x, y]);
            }
        }
    }
    if pts.len() < 2 {
        return None;
    }
    Some((pts[0], pts[pts.len() - 1]))
}
