//! Equatorial x–z Bloch plot of the blocks of a qubit assemblage. Each block
//! `σ_bc|yz` is drawn along the Bloch direction of its normalized state, at
//! distance `tr σ_bc|yz` from the origin.

use std::fmt::Write;

use postq_core::linalg::{pauli_x, pauli_z};
use postq_core::Assemblage;
use serde::Serialize;

use crate::error::CliError;

const SIZE: f64 = 480.0;
const RADIUS: f64 = 200.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlochPoint {
    pub b: usize,
    pub c: usize,
    pub y: usize,
    pub z: usize,
    /// `tr σ_bc|yz`.
    pub probability: f64,
    /// Bloch vector of the normalized block, `(⟨X⟩, ⟨Z⟩)`.
    pub x: f64,
    pub zc: f64,
    /// Dropped `⟨Y⟩` component.
    pub y_component: f64,
}

impl BlochPoint {
    /// Plot coordinates: unit direction scaled by the probability.
    pub fn position(&self) -> (f64, f64) {
        let r = self.x.hypot(self.zc);
        if r <= 1e-12 {
            (0.0, 0.0)
        } else {
            (self.probability * self.x / r, self.probability * self.zc / r)
        }
    }
}

pub fn bloch_points(asm: &Assemblage) -> Result<Vec<BlochPoint>, CliError> {
    if asm.scenario().dim_a != 2 {
        return Err(CliError::Input("Bloch plots need a qubit trusted party".into()));
    }
    let (px, pz) = (pauli_x(), pauli_z());
    let py_of = |m: &postq_core::HermitianMatrix| 2.0 * m.get(1, 0).im;
    Ok(asm
        .iter()
        .map(|(cell, m)| {
            let p = m.trace();
            let norm = if p > 0.0 { p } else { 1.0 };
            BlochPoint {
                b: cell.b,
                c: cell.c,
                y: cell.y,
                z: cell.z,
                probability: p,
                x: m.hs_inner(&px) / norm,
                zc: m.hs_inner(&pz) / norm,
                y_component: py_of(m) / norm,
            }
        })
        .collect())
}

pub fn render_svg(points: &[BlochPoint]) -> String {
    let c = SIZE / 2.0;
    // largest probability sets the scale so every point is visible
    let pmax = points.iter().map(|p| p.probability).fold(0.0, f64::max).max(1e-12);
    let scale = RADIUS / pmax;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r##"<circle cx="{c}" cy="{c}" r="{RADIUS}" fill="none" stroke="#999"/>"##);
    let _ = writeln!(s, r##"<line x1="{}" y1="{c}" x2="{}" y2="{c}" stroke="#ccc"/>"##, c - RADIUS, c + RADIUS);
    let _ = writeln!(s, r##"<line x1="{c}" y1="{}" x2="{c}" y2="{}" stroke="#ccc"/>"##, c - RADIUS, c + RADIUS);
    let _ = writeln!(s, r#"<text x="{}" y="{}">x</text>"#, c + RADIUS + 6.0, c + 4.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}">z</text>"#, c - 3.0, c - RADIUS - 6.0);
    let _ = writeln!(s, r#"<text x="8" y="16">radius = {pmax:.4} (distance from origin = tr σ)</text>"#);
    for p in points {
        let (x, z) = p.position();
        let (px, py) = (c + scale * x, c - scale * z);
        let color = COLORS[(p.y * 2 + p.z) % COLORS.len()];
        let _ = writeln!(s, r#"<line x1="{c}" y1="{c}" x2="{px:.2}" y2="{py:.2}" stroke="{color}" stroke-opacity="0.5"/>"#);
        let _ = writeln!(
            s,
            r#"<circle cx="{px:.2}" cy="{py:.2}" r="4" fill="{color}"><title>b={} c={} y={} z={} p={:.4}</title></circle>"#,
            p.b, p.c, p.y, p.z, p.probability
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" fill="{color}">{}{}|{}{}</text>"#, px + 5.0, py - 5.0, p.b, p.c, p.y, p.z);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use postq_core::fixtures;

    #[test]
    fn distance_from_origin_is_the_probability() {
        let pts = bloch_points(&fixtures::example_assemblage()).unwrap();
        assert_eq!(pts.len(), 16);
        for p in &pts {
            let (x, z) = p.position();
            assert!((x.hypot(z) - p.probability).abs() < 1e-12);
            assert!(p.y_component.abs() < 1e-15);
        }
        let total: f64 = pts.iter().filter(|p| p.y == 0 && p.z == 0).map(|p| p.probability).sum();
        assert!((total - 1.0).abs() < 1e-3);
    }

    #[test]
    fn svg_has_one_marker_per_block() {
        let svg = render_svg(&bloch_points(&fixtures::example_assemblage()).unwrap());
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle cx=").count(), 17);
    }
}
