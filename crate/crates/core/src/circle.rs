//! The random billiard map on the unit circle.
//!
//! A state `(s, θ)` is a boundary point at arc length `s` together with the
//! angle θ of the chord that arrived there. One step reflects θ to `T_i(θ)`
//! and follows the new chord, so `(s, θ) ↦ (s + 2T_i(θ) mod 2π, T_i(θ))`.
//! A chord leaving with angle θ stays at distance `|cos θ|` from the centre.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::BaseAngle;
use crate::error::{Error, Result};
use crate::feres::{apply_branch, branch_probabilities, sample_step, BranchId};
use crate::reachable::ReachableSet;
use crate::rng::stream_rng;
use crate::stats::{histogram, sup_deviation};

/// Phase-space point: boundary position `s ∈ [0, 2π)` and angle `θ ∈ (0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub s: f64,
    pub theta: f64,
}

impl PhasePoint {
    /// Builds a point, reducing `s` modulo 2π.
    pub fn new(s: f64, theta: f64) -> Self {
        PhasePoint {
            s: reduce_arc(s),
            theta,
        }
    }
}

/// `s mod 2π` in `[0, 2π)`.
pub fn reduce_arc(s: f64) -> f64 {
    let r = s.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// A realised orbit with the branch word that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub alpha: BaseAngle,
    pub seed: Option<u64>,
    pub points: Vec<PhasePoint>,
    pub branches: Vec<BranchId>,
}

impl Trajectory {
    /// Number of steps taken.
    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn last(&self) -> PhasePoint {
        *self.points.last().expect("trajectory holds its start point")
    }

    /// Chords in order: `(s_k, s_{k+1}, θ_{k+1})`.
    pub fn chords(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.points.windows(2).map(|w| (w[0].s, w[1].s, w[1].theta))
    }

    /// Jacobian of the whole orbit.
    pub fn jacobian(&self) -> JacobianAccumulator {
        self.branches
            .iter()
            .fold(JacobianAccumulator::default(), |acc, &b| acc.step(b))
    }
}

/// One step along branch `i`; the branch must be admissible at `p.theta`.
pub fn circle_step(p: PhasePoint, branch: BranchId, alpha: &BaseAngle) -> Result<PhasePoint> {
    if branch_probabilities(p.theta, alpha).get(branch) <= 0.0 {
        return Err(Error::Inadmissible {
            index: 0,
            branch,
            theta: p.theta,
        });
    }
    let theta = apply_branch(branch, p.theta, alpha)?;
    Ok(PhasePoint::new(p.s + 2.0 * theta, theta))
}

/// `n` random steps from `start`, driven by stream 0 of `seed`.
pub fn simulate(start: PhasePoint, n: usize, alpha: &BaseAngle, seed: u64) -> Result<Trajectory> {
    let mut rng = stream_rng(seed, 0);
    let mut traj = simulate_with(start, n, alpha, &mut rng)?;
    traj.seed = Some(seed);
    Ok(traj)
}

/// `n` random steps using a caller-supplied generator.
pub fn simulate_with<R: Rng + ?Sized>(
    start: PhasePoint,
    n: usize,
    alpha: &BaseAngle,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut points = Vec::with_capacity(n + 1);
    let mut branches = Vec::with_capacity(n);
    let mut p = PhasePoint::new(start.s, start.theta);
    points.push(p);
    for _ in 0..n {
        let (b, theta) = sample_step(p.theta, alpha, rng)?;
        p = PhasePoint::new(p.s + 2.0 * theta, theta);
        points.push(p);
        branches.push(b);
    }
    Ok(Trajectory {
        alpha: *alpha,
        seed: None,
        points,
        branches,
    })
}

/// The orbit of `start` under a fixed branch word. The error names the first
/// position at which the word is not admissible.
pub fn prescribed_orbit(start: PhasePoint, word: &[BranchId], alpha: &BaseAngle) -> Result<Trajectory> {
    let mut points = Vec::with_capacity(word.len() + 1);
    let mut p = PhasePoint::new(start.s, start.theta);
    points.push(p);
    for (index, &b) in word.iter().enumerate() {
        p = circle_step(p, b, alpha).map_err(|e| match e {
            Error::Inadmissible { branch, theta, .. } => Error::Inadmissible {
                index,
                branch,
                theta,
            },
            other => other,
        })?;
        points.push(p);
    }
    Ok(Trajectory {
        alpha: *alpha,
        seed: None,
        points,
        branches: word.to_vec(),
    })
}

/// `bins · max_k |fraction of s in bin k − 1/bins|` over all visited points.
pub fn dense_orbit_discrepancy(traj: &Trajectory, bins: usize) -> Result<f64> {
    if bins == 0 || traj.points.len() < bins {
        return Err(Error::Precondition(format!(
            "{} points cannot be spread over {bins} bins",
            traj.points.len()
        )));
    }
    Ok(arc_discrepancy(traj.points.iter().map(|p| p.s), bins))
}

/// The same statistic for an arbitrary sequence of arc positions.
pub fn arc_discrepancy(s: impl IntoIterator<Item = f64>, bins: usize) -> f64 {
    sup_deviation(&histogram(s.into_iter().map(reduce_arc), 0.0, TAU, bins))
}

/// Radius of the random caustic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CausticEstimate {
    pub radius: f64,
    pub degenerate: bool,
    pub attaining_angle: Option<f64>,
}

fn caustic_of_angles(angles: impl IntoIterator<Item = f64>) -> CausticEstimate {
    let mut best: Option<(f64, f64)> = None;
    for theta in angles {
        let r = theta.cos().abs();
        if best.is_none_or(|(b, _)| r < b) {
            best = Some((r, theta));
        }
    }
    match best {
        Some((radius, theta)) => CausticEstimate {
            radius,
            degenerate: radius <= 1e-12,
            attaining_angle: Some(theta),
        },
        None => CausticEstimate {
            radius: 1.0,
            degenerate: false,
            attaining_angle: None,
        },
    }
}

/// Smallest `|cos θ|` over the angles visited by a trajectory.
pub fn caustic_of_trajectory(traj: &Trajectory) -> CausticEstimate {
    caustic_of_angles(traj.points.iter().map(|p| p.theta))
}

/// Smallest `|cos θ|` over a reachable set; π/2 in the set forces degeneracy.
pub fn caustic_of_set(set: &ReachableSet) -> CausticEstimate {
    let mut c = caustic_of_angles(set.values().iter().copied());
    if set.contains_right_angle() {
        c.degenerate = true;
        c.radius = 0.0;
        c.attaining_angle = Some(PI / 2.0);
    }
    c
}

fn on_circle(s: f64) -> (f64, f64) {
    (s.cos(), s.sin())
}

/// Distance from the origin to the line through two boundary points.
pub fn chord_line_distance(s0: f64, s1: f64) -> f64 {
    let (px, py) = on_circle(s0);
    let (qx, qy) = on_circle(s1);
    let cross = px * qy - py * qx;
    let len = (qx - px).hypot(qy - py);
    cross.abs() / len
}

/// Largest `| distance(origin, chord line) − |cos θ| |` over all chords.
pub fn chord_distance_check(traj: &Trajectory) -> f64 {
    traj.chords()
        .map(|(a, b, theta)| (chord_line_distance(a, b) - theta.cos().abs()).abs())
        .fold(0.0, f64::max)
}

/// Smallest chord-to-centre distance along a trajectory.
pub fn min_chord_distance(traj: &Trajectory) -> f64 {
    traj.chords()
        .map(|(a, b, _)| chord_line_distance(a, b))
        .fold(f64::INFINITY, f64::min)
}

/// Fraction of polar cells of the annulus `caustic.radius ≤ r ≤ 1` crossed by
/// at least one chord; a degenerate caustic means the whole disc.
///
/// Each chord is cut exactly at its crossings with the radial and angular cell
/// boundaries and every piece is assigned to the cell containing its midpoint.
pub fn ring_coverage(
    traj: &Trajectory,
    caustic: &CausticEstimate,
    radial_cells: usize,
    angular_cells: usize,
) -> f64 {
    let mut grid = CoverageGrid::new(
        if caustic.degenerate { 0.0 } else { caustic.radius },
        radial_cells,
        angular_cells,
    );
    for (a, b, _) in traj.chords() {
        grid.mark_segment(on_circle(a), on_circle(b));
    }
    grid.fraction()
}

/// Polar cell grid over an annulus.
#[derive(Debug, Clone)]
pub struct CoverageGrid {
    inner: f64,
    radial: usize,
    angular: usize,
    hit: Vec<bool>,
    // scratch for segment parameters
    cuts: Vec<f64>,
}

impl CoverageGrid {
    pub fn new(inner: f64, radial: usize, angular: usize) -> Self {
        assert!(radial > 0 && angular > 0 && (0.0..1.0).contains(&inner));
        CoverageGrid {
            inner,
            radial,
            angular,
            hit: vec![false; radial * angular],
            cuts: Vec::new(),
        }
    }

    pub fn fraction(&self) -> f64 {
        self.hit.iter().filter(|&&h| h).count() as f64 / self.hit.len() as f64
    }

    pub fn covered(&self) -> usize {
        self.hit.iter().filter(|&&h| h).count()
    }

    /// Marks every cell the segment P→Q passes through.
    pub fn mark_segment(&mut self, p: (f64, f64), q: (f64, f64)) {
        let (dx, dy) = (q.0 - p.0, q.1 - p.1);
        let dd = dx * dx + dy * dy;
        if dd == 0.0 {
            return;
        }
        self.cuts.clear();
        self.cuts.push(0.0);
        self.cuts.push(1.0);
        let pd = p.0 * dx + p.1 * dy;
        let pp = p.0 * p.0 + p.1 * p.1;
        let dr = (1.0 - self.inner) / self.radial as f64;
        for i in 0..=self.radial {
            let r = self.inner + dr * i as f64;
            // |P + tD|² = r²
            let disc = pd * pd - dd * (pp - r * r);
            if disc > 0.0 {
                let root = disc.sqrt();
                for t in [(-pd - root) / dd, (-pd + root) / dd] {
                    if t > 0.0 && t < 1.0 {
                        self.cuts.push(t);
                    }
                }
            }
        }
        for j in 0..self.angular {
            let phi = TAU * j as f64 / self.angular as f64;
            let (ux, uy) = (phi.cos(), phi.sin());
            // (P + tD) × u = 0
            let denom = dx * uy - dy * ux;
            if denom != 0.0 {
                let t = -(p.0 * uy - p.1 * ux) / denom;
                if t > 0.0 && t < 1.0 {
                    self.cuts.push(t);
                }
            }
        }
        self.cuts.sort_by(f64::total_cmp);
        for w in 1..self.cuts.len() {
            let (t0, t1) = (self.cuts[w - 1], self.cuts[w]);
            if t1 <= t0 {
                continue;
            }
            let tm = 0.5 * (t0 + t1);
            let (x, y) = (p.0 + tm * dx, p.1 + tm * dy);
            if let Some(cell) = self.cell_of(x, y) {
                self.hit[cell] = true;
            }
        }
    }

    fn cell_of(&self, x: f64, y: f64) -> Option<usize> {
        let r = x.hypot(y);
        if r < self.inner || r > 1.0 {
            return None;
        }
        let dr = (1.0 - self.inner) / self.radial as f64;
        let i = (((r - self.inner) / dr) as usize).min(self.radial - 1);
        let phi = reduce_arc(y.atan2(x));
        let j = ((phi / TAU * self.angular as f64) as usize).min(self.angular - 1);
        Some(i * self.angular + j)
    }
}

/// Tangent map of an orbit, `[[1, a], [0, b]]` with `a` an even integer and
/// `b = ±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct JacobianAccumulator {
    pub a: i64,
    pub b: i8,
    pub n: u64,
}

impl Default for JacobianAccumulator {
    fn default() -> Self {
        Self::identity()
    }
}

impl JacobianAccumulator {
    pub fn identity() -> Self {
        JacobianAccumulator { a: 0, b: 1, n: 0 }
    }

    /// Composes one step `[[1, 2t], [0, t]]`, `t = T_i′`, on the left.
    pub fn step(self, branch: BranchId) -> Self {
        let b = self.b;
        let t = branch.derivative_sign();
        JacobianAccumulator {
            a: self.a + 2 * t * i64::from(b),
            b: (t * i64::from(b)) as i8,
            n: self.n + 1,
        }
    }

    /// `J·v`.
    pub fn apply(&self, v: (f64, f64)) -> (f64, f64) {
        let b = self.b;
        (v.0 + self.a as f64 * v.1, f64::from(b) * v.1)
    }

    /// `(1/n) log ‖J·v‖`.
    pub fn lyapunov(&self, v: (f64, f64)) -> Result<f64> {
        if v.0 == 0.0 && v.1 == 0.0 {
            return Err(Error::ZeroVector);
        }
        if self.n == 0 {
            return Err(Error::Precondition("Lyapunov estimate needs at least one step".into()));
        }
        let (x, y) = self.apply(v);
        Ok(x.hypot(y).ln() / self.n as f64)
    }
}

/// `(1/n) log ‖D F̄⁽ⁿ⁾ v‖` along a trajectory's branch word.
pub fn lyapunov_estimate(traj: &Trajectory, v: (f64, f64)) -> Result<f64> {
    traj.jacobian().lyapunov(v)
}
