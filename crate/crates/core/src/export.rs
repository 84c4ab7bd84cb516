//! Text outputs: trajectory CSVs and an SVG picture of circle orbits.
//!
//! Floats are written with Rust's shortest round-trip formatting, so the files
//! are byte-for-byte reproducible and parse back to the same values.

use std::io::{self, Write};

use crate::circle::Trajectory;
use crate::pipeline::PipelineTrajectory;

/// `step,s,theta,branch`; the start row has an empty branch.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    writeln!(out, "step,s,theta,branch")?;
    for (k, p) in traj.points.iter().enumerate() {
        let branch = match k {
            0 => String::new(),
            _ => traj.branches[k - 1].to_string(),
        };
        writeln!(out, "{k},{},{},{branch}", p.s, p.theta)?;
    }
    Ok(())
}

/// `step,s,wall,theta,flight_length`; the start row has flight length 0.
pub fn write_pipeline_csv<W: Write>(traj: &PipelineTrajectory, mut out: W) -> io::Result<()> {
    writeln!(out, "step,s,wall,theta,flight_length")?;
    for (k, st) in traj.states.iter().enumerate() {
        let l = if k == 0 { 0.0 } else { traj.flights[k - 1] };
        writeln!(out, "{k},{},{},{},{l}", st.s, st.wall, st.theta)?;
    }
    Ok(())
}

/// `step,tv_distance`.
pub fn write_tv_csv<W: Write>(tv: &[f64], mut out: W) -> io::Result<()> {
    writeln!(out, "step,tv_distance")?;
    for (k, d) in tv.iter().enumerate() {
        writeln!(out, "{k},{d}")?;
    }
    Ok(())
}

/// What to draw in [`write_circle_svg`].
#[derive(Debug, Clone)]
pub struct SvgScene<'a> {
    pub trajectory: Option<&'a Trajectory>,
    /// Draw at most this many chords, from the start of the orbit.
    pub max_chords: usize,
    /// Radii of circles to draw, e.g. `|cos θ′|` for every reachable angle.
    pub circles: Vec<f64>,
    /// Radius of the caustic, drawn emphasised.
    pub caustic: Option<f64>,
    pub title: String,
}

const SIZE: f64 = 640.0;
const MARGIN: f64 = 20.0;

fn to_px(x: f64, y: f64) -> (f64, f64) {
    let r = SIZE / 2.0 - MARGIN;
    (SIZE / 2.0 + r * x, SIZE / 2.0 - r * y)
}

/// Unit circle, chords of the orbit and concentric circles.
pub fn write_circle_svg<W: Write>(scene: &SvgScene<'_>, mut out: W) -> io::Result<()> {
    let r = SIZE / 2.0 - MARGIN;
    let c = SIZE / 2.0;
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )?;
    writeln!(out, "<title>{}</title>", escape(&scene.title))?;
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    if let Some(traj) = scene.trajectory {
        writeln!(out, r##"<g stroke="#1f5fa8" stroke-width="0.4" stroke-opacity="0.5">"##)?;
        for (a, b, _) in traj.chords().take(scene.max_chords) {
            let (x1, y1) = to_px(a.cos(), a.sin());
            let (x2, y2) = to_px(b.cos(), b.sin());
            writeln!(out, r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#)?;
        }
        writeln!(out, "</g>")?;
    }
    writeln!(out, r##"<g fill="none" stroke="#888888" stroke-width="0.8" stroke-dasharray="4 3">"##)?;
    for &rad in &scene.circles {
        writeln!(out, r#"<circle cx="{c}" cy="{c}" r="{:.3}"/>"#, rad * r)?;
    }
    writeln!(out, "</g>")?;
    if let Some(rad) = scene.caustic {
        writeln!(
            out,
            r##"<circle cx="{c}" cy="{c}" r="{:.3}" fill="none" stroke="#c0392b" stroke-width="1.6"/>"##,
            rad * r
        )?;
    }
    writeln!(
        out,
        r#"<circle cx="{c}" cy="{c}" r="{r}" fill="none" stroke="black" stroke-width="1.5"/>"#
    )?;
    writeln!(out, "</svg>")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
