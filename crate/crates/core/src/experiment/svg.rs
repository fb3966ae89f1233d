//! Standalone SVG figures.

use std::fmt::Write;

use crate::analysis::{convex_boundary_curve, finite_time_bound, nonconvex_boundary_curve};

use super::envelope::EnvelopeResult;
use super::grid::GridResult;

const PANEL: f64 = 260.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Axis {
    lo: f64,
    hi: f64,
    start: f64,
    len: f64,
    flip: bool,
}

impl Axis {
    fn map(&self, v: f64) -> f64 {
        let t = (v - self.lo) / (self.hi - self.lo);
        if self.flip {
            self.start + self.len * (1.0 - t)
        } else {
            self.start + self.len * t
        }
    }
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
}

fn polyline(out: &mut String, points: &[(f64, f64)], color: &str, dash: bool) {
    if points.len() < 2 {
        return;
    }
    let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let dash = if dash { r#" stroke-dasharray="5,3""# } else { "" };
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
        pts.join(" ")
    );
}

/// One recovery heatmap per solver (white is recovery in every trial) over
/// `log N` and `p`, with the two boundary curves.
pub(crate) fn phase_grid_svg(result: &GridResult) -> String {
    let spec = &result.spec;
    let mut labels: Vec<&str> = Vec::new();
    for c in &result.cells {
        if !labels.contains(&c.solver.as_str()) {
            labels.push(&c.solver);
        }
    }
    let ln: Vec<f64> = spec.n_values.iter().map(|&n| (n as f64).ln()).collect();
    let (nmin, nmax) = ln.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let half_w = if ln.len() > 1 { (nmax - nmin) / (ln.len() - 1) as f64 / 2.0 } else { 0.5 };
    let ps = &spec.p_values;
    let half_h = if ps.len() > 1 {
        ps.windows(2).map(|w| (w[1] - w[0]).abs()).fold(f64::INFINITY, f64::min) / 2.0
    } else {
        0.05
    };

    let width = labels.len() as f64 * (PANEL + MARGIN) + MARGIN;
    let height = PANEL + 2.0 * MARGIN;
    let mut out = String::new();
    header(&mut out, width, height);
    for (k, label) in labels.iter().enumerate() {
        let x0 = MARGIN + k as f64 * (PANEL + MARGIN);
        let xa = Axis { lo: nmin - half_w, hi: nmax + half_w, start: x0, len: PANEL, flip: false };
        let ya = Axis { lo: 0.0, hi: 1.0, start: MARGIN, len: PANEL, flip: true };
        for c in result.cells.iter().filter(|c| c.solver == *label) {
            let x = (c.n as f64).ln();
            let (xl, xr) = (xa.map(x - half_w), xa.map(x + half_w));
            let (yt, yb) = (ya.map((c.p + half_h).min(1.0)), ya.map((c.p - half_h).max(0.0)));
            let shade = (255.0 * c.recovery_rate()).round() as u8;
            let _ = writeln!(
                out,
                r#"<rect x="{xl:.2}" y="{yt:.2}" width="{:.2}" height="{:.2}" fill="rgb({shade},{shade},{shade})"/>"#,
                xr - xl,
                yb - yt
            );
        }
        let samples: Vec<f64> = (0..=100).map(|i| nmin - half_w + (nmax - nmin + 2.0 * half_w) * i as f64 / 100.0).collect();
        let curve = |f: &dyn Fn(usize) -> f64| -> Vec<(f64, f64)> {
            samples
                .iter()
                .map(|&l| (l, f(l.exp().round().max(2.0) as usize)))
                .filter(|&(_, p)| (0.0..=1.0).contains(&p))
                .map(|(l, p)| (xa.map(l), ya.map(p)))
                .collect()
        };
        polyline(&mut out, &curve(&|n| convex_boundary_curve(spec.dim, n, spec.overlay_c)), COLORS[1], false);
        polyline(&mut out, &curve(&|n| nonconvex_boundary_curve(n, spec.overlay_c)), COLORS[0], true);
        let _ = writeln!(
            out,
            r#"<rect x="{x0}" y="{MARGIN}" width="{PANEL}" height="{PANEL}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#, x0 + PANEL / 2.0, MARGIN - 10.0);
        for &n in &spec.n_values {
            let x = xa.map((n as f64).ln());
            let _ = writeln!(out, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="9">{n}</text>"#, MARGIN + PANEL + 14.0);
        }
        for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="9">{p}</text>"#, x0 - 4.0, ya.map(p) + 3.0);
        }
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">N</text>"#, x0 + PANEL / 2.0, height - 10.0);
    }
    out.push_str("</svg>\n");
    out
}

/// Convergence time against initial angle, one color per sample size, with
/// `T(s)` and its factor-2 envelope for the largest sample size.
pub(crate) fn envelope_svg(result: &EnvelopeResult) -> String {
    let spec = &result.spec;
    let (d, p) = (spec.dim, spec.p_values[0]);
    let tmax = result
        .records
        .iter()
        .filter_map(|r| r.t_cvg)
        .fold(1.0f64, f64::max)
        * 1.1;
    let width = PANEL * 2.0 + 2.0 * MARGIN;
    let height = PANEL + 2.0 * MARGIN;
    let xa = Axis { lo: 0.0, hi: std::f64::consts::PI, start: MARGIN, len: 2.0 * PANEL, flip: false };
    let ya = Axis { lo: 0.0, hi: tmax, start: MARGIN, len: PANEL, flip: true };
    let mut out = String::new();
    header(&mut out, width, height);
    for (k, &n) in spec.n_values.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        for r in result.records_for(n) {
            let (x, y) = match r.t_cvg.filter(|_| r.converged) {
                Some(t) => (xa.map(r.initial_angle), ya.map(t.min(tmax))),
                None => (xa.map(r.initial_angle), ya.map(tmax)),
            };
            let fill = if r.converged { color } else { "none" };
            let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{fill}" stroke="{color}"/>"#);
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">N = {n}</text>"#,
            MARGIN + 8.0,
            MARGIN + 14.0 * (k + 1) as f64
        );
    }
    if let Some(&n) = spec.n_values.iter().max() {
        let offset = result.fit(n, 2.0).offset;
        let curve = |scale: f64, shift: f64| -> Vec<(f64, f64)> {
            (0..400)
                .map(|i| std::f64::consts::PI * i as f64 / 400.0)
                .filter_map(|s| finite_time_bound(d, p, s).ok().map(|t| (s, scale * t + shift)))
                .filter(|&(_, t)| t <= tmax)
                .map(|(s, t)| (xa.map(s), ya.map(t)))
                .collect()
        };
        polyline(&mut out, &curve(1.0, 0.0), "black", false);
        polyline(&mut out, &curve(2.0, offset), "black", true);
    }
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{PANEL}" fill="none" stroke="black"/>"#,
        2.0 * PANEL
    );
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">initial angle</text>"#, MARGIN + PANEL, height - 10.0);
    let _ = writeln!(out, r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">flow time</text>"#, MARGIN + PANEL / 2.0, MARGIN + PANEL / 2.0);
    out.push_str("</svg>\n");
    out
}
