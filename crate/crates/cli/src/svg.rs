//! Space-time diagrams: edges laid out left to right, time running upward.

use std::fmt::{Display, Write};

use graph_eikonal::hydra::Segment;
use graph_eikonal::partition::SigmaPartition;
use graph_eikonal::rational::{to_f64, Rational};
use graph_eikonal::MetricGraph;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 40.0;
const GAP: f64 = 30.0;
const PALETTE: [&str; 6] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"];

struct Frame {
    starts: Vec<f64>,
    scale: f64,
    tscale: f64,
}

impl Frame {
    fn new(g: &MetricGraph, horizon: &Rational) -> Self {
        let total: f64 = g.edges().iter().map(|e| to_f64(&e.length)).sum();
        let gaps = GAP * (g.edges().len().saturating_sub(1)) as f64;
        let scale = (WIDTH - 2.0 * MARGIN - gaps) / total;
        let mut starts = Vec::new();
        let mut x = MARGIN;
        for e in g.edges() {
            starts.push(x);
            x += to_f64(&e.length) * scale + GAP;
        }
        Frame {
            starts,
            scale,
            tscale: (HEIGHT - 2.0 * MARGIN) / to_f64(horizon).max(f64::MIN_POSITIVE),
        }
    }

    fn x(&self, edge: usize, o: &Rational) -> f64 {
        self.starts[edge] + to_f64(o) * self.scale
    }

    fn y(&self, t: &Rational) -> f64 {
        HEIGHT - MARGIN - to_f64(t) * self.tscale
    }
}

/// Text label with a typographic minus sign.
pub fn label(s: &str) -> String {
    match s.strip_prefix('-') {
        Some(rest) => format!("\u{2212}{rest}"),
        None => s.to_string(),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, g: &MetricGraph, f: &Frame, horizon: &Rational) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let base = f.y(&Rational::from_integer(0.into()));
    for (i, e) in g.edges().iter().enumerate() {
        let x0 = f.x(i, &Rational::from_integer(0.into()));
        let x1 = f.x(i, &e.length);
        let _ = writeln!(
            out,
            r#"<line x1="{x0:.2}" y1="{base:.2}" x2="{x1:.2}" y2="{base:.2}" stroke="black" stroke-width="1.5"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{} ({} → {})</text>"#,
            (x0 + x1) / 2.0,
            base + 16.0,
            escape(&e.id),
            escape(&g.vertex(e.from).id),
            escape(&g.vertex(e.to).id)
        );
    }
    let top = f.y(horizon);
    let _ = writeln!(
        out,
        r#"<line x1="{:.2}" y1="{top:.2}" x2="{:.2}" y2="{top:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        MARGIN - 10.0,
        WIDTH - MARGIN + 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}">T = {}</text>"#,
        MARGIN - 10.0,
        top - 6.0,
        escape(&horizon.to_string())
    );
}

fn draw_segments<V: Display>(out: &mut String, f: &Frame, segs: &[Segment<V>], color: &str, labels: bool) {
    for s in segs {
        let (x0, y0) = (f.x(s.edge, &s.o0), f.y(&s.t0));
        let (x1, y1) = (f.x(s.edge, &s.o1), f.y(&s.t1));
        let _ = writeln!(
            out,
            r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}" stroke="{color}" stroke-width="1.5"/>"#
        );
        if labels {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" fill="{color}">{}</text>"#,
                (x0 + x1) / 2.0 + 3.0,
                (y0 + y1) / 2.0,
                escape(&label(&s.value.to_string()))
            );
        }
    }
}

/// Hydras of several sources, one color each, amplitudes at segment midpoints.
pub fn hydra_svg<V: Display>(g: &MetricGraph, horizon: &Rational, hydras: &[&[Segment<V>]]) -> String {
    let f = Frame::new(g, horizon);
    let mut out = String::new();
    header(&mut out, g, &f, horizon);
    for (i, segs) in hydras.iter().enumerate() {
        draw_segments(&mut out, &f, segs, PALETTE[i % PALETTE.len()], true);
    }
    out.push_str("</svg>\n");
    out
}

/// Hydras in gray with the multi-source cells marked on the edges and numbered by family.
pub fn partition_svg<V: Display>(
    g: &MetricGraph,
    sigma: &SigmaPartition,
    hydras: &[&[Segment<V>]],
) -> String {
    let f = Frame::new(g, &sigma.horizon);
    let mut out = String::new();
    header(&mut out, g, &f, &sigma.horizon);
    for segs in hydras {
        draw_segments(&mut out, &f, segs, "#bbbbbb", false);
    }
    let base = f.y(&Rational::from_integer(0.into()));
    for (k, fam) in sigma.families.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for c in &fam.cells {
            let (x0, x1) = (f.x(c.edge, &c.lo), f.x(c.edge, &c.hi));
            let _ = writeln!(
                out,
                r#"<line x1="{x0:.2}" y1="{:.2}" x2="{x1:.2}" y2="{:.2}" stroke="{color}" stroke-width="5"/>"#,
                base - 4.0,
                base - 4.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" fill="{color}">{}</text>"#,
                (x0 + x1) / 2.0,
                base - 10.0,
                k + 1
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use graph_eikonal::graph::star;
    use graph_eikonal::hydra::propagate;
    use graph_eikonal::rational::{frac, int};

    #[test]
    fn single_segment() {
        let g = star(&[int(1)]).unwrap();
        let h = propagate(&g, 1, &frac(1, 2)).unwrap();
        let s = hydra_svg(&g, &h.horizon, &[&h.segments]);
        assert_eq!(s.matches("stroke-width=\"1.5\"/>").count(), 2);
        assert!(s.contains(">1</text>"));
    }

    #[test]
    fn minus_labels_and_determinism() {
        let g = star(&[int(2), int(3), int(10)]).unwrap();
        let h = propagate(&g, 1, &frac(9, 4)).unwrap();
        let a = hydra_svg(&g, &h.horizon, &[&h.segments]);
        let b = hydra_svg(&g, &h.horizon, &[&h.segments]);
        assert_eq!(a, b);
        assert!(a.contains("\u{2212}1/3"));
        assert!(a.contains(">2/3</text>"));
    }
}
