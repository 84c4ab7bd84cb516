//! The random billiard in an infinite pipeline.
//!
//! The pipeline is the strip `0 ≤ y ≤ 1` bounded by two straight walls, and
//! `s` is the x coordinate of the current collision. After reflecting to
//! θ′ = T_i(θ) the particle crosses to the opposite wall, travelling
//! `l = 1/sin θ′` and moving `cot θ′` along x when leaving the bottom wall,
//! `−cot θ′` when leaving the top wall.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::{AngleSpec, BaseAngle};
use crate::error::{Error, Result};
use crate::feres::{apply_branch, branch_probabilities, sample_step, BranchId};
use crate::reachable::reachable_angles;
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wall {
    Bottom,
    Top,
}

impl Wall {
    pub fn opposite(self) -> Wall {
        match self {
            Wall::Bottom => Wall::Top,
            Wall::Top => Wall::Bottom,
        }
    }

    /// +1 leaving the bottom wall, −1 leaving the top.
    fn direction(self) -> f64 {
        match self {
            Wall::Bottom => 1.0,
            Wall::Top => -1.0,
        }
    }
}

impl fmt::Display for Wall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Wall::Bottom => "bottom",
            Wall::Top => "top",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineState {
    pub s: f64,
    pub wall: Wall,
    pub theta: f64,
}

/// Flight across the strip at angle θ′: `(length, x advance from the bottom)`.
pub fn crossing(theta: f64) -> (f64, f64) {
    let sin = theta.sin();
    (1.0 / sin, theta.cos() / sin)
}

/// Reflect along branch `i`, then fly to the opposite wall. Returns the new
/// state and the flight length.
pub fn pipeline_step(st: PipelineState, branch: BranchId, alpha: &BaseAngle) -> Result<(PipelineState, f64)> {
    if branch_probabilities(st.theta, alpha).get(branch) <= 0.0 {
        return Err(Error::Inadmissible {
            index: 0,
            branch,
            theta: st.theta,
        });
    }
    let theta = apply_branch(branch, st.theta, alpha)?;
    Ok(fly(st, theta))
}

fn fly(st: PipelineState, theta: f64) -> (PipelineState, f64) {
    let (l, dx) = crossing(theta);
    (
        PipelineState {
            s: st.s + st.wall.direction() * dx,
            wall: st.wall.opposite(),
            theta,
        },
        l,
    )
}

/// Tangent map `[[p, c], [0, p]]` with `p = (−1)ⁿ` and `c` the signed sum of
/// `l_k / sin θ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineJacobian {
    pub offdiag: f64,
    pub parity: i8,
    pub n: u64,
}

impl Default for PipelineJacobian {
    fn default() -> Self {
        PipelineJacobian {
            offdiag: 0.0,
            parity: 1,
            n: 0,
        }
    }
}

impl PipelineJacobian {
    /// Adds `branch_sign · l / sin θ′` to the off-diagonal and flips parity.
    /// The sign is the derivative sign of the branch used at this step.
    pub fn step(self, theta_new: f64, l: f64, branch_sign: i64) -> Self {
        PipelineJacobian {
            offdiag: self.offdiag + branch_sign as f64 * l / theta_new.sin(),
            parity: -self.parity,
            n: self.n + 1,
        }
    }

    pub fn apply(&self, v: (f64, f64)) -> (f64, f64) {
        let p = f64::from(self.parity);
        (p * v.0 + self.offdiag * v.1, p * v.1)
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

/// A seeded pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineTrajectory {
    pub alpha: BaseAngle,
    pub seed: Option<u64>,
    pub states: Vec<PipelineState>,
    pub branches: Vec<BranchId>,
    /// Length of the flight that ended at `states[k + 1]`.
    pub flights: Vec<f64>,
}

impl PipelineTrajectory {
    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Jacobian after every step, starting with the identity.
    pub fn jacobians(&self) -> impl Iterator<Item = PipelineJacobian> + '_ {
        let mut acc = PipelineJacobian::default();
        std::iter::once(acc).chain(self.branches.iter().enumerate().map(move |(k, b)| {
            acc = acc.step(self.states[k + 1].theta, self.flights[k], b.derivative_sign());
            acc
        }))
    }

    pub fn jacobian(&self) -> PipelineJacobian {
        self.jacobians().last().unwrap_or_default()
    }
}

/// `n` random steps driven by stream 0 of `seed`, so the angle sequence is the
/// one a circle run with the same seed sees.
pub fn pipeline_simulate(start: PipelineState, n: usize, alpha: &BaseAngle, seed: u64) -> Result<PipelineTrajectory> {
    let mut rng = stream_rng(seed, 0);
    let mut t = pipeline_simulate_with(start, n, alpha, &mut rng)?;
    t.seed = Some(seed);
    Ok(t)
}

pub fn pipeline_simulate_with<R: Rng + ?Sized>(
    start: PipelineState,
    n: usize,
    alpha: &BaseAngle,
    rng: &mut R,
) -> Result<PipelineTrajectory> {
    let mut states = Vec::with_capacity(n + 1);
    let mut branches = Vec::with_capacity(n);
    let mut flights = Vec::with_capacity(n);
    let mut st = start;
    states.push(st);
    for _ in 0..n {
        let (b, theta) = sample_step(st.theta, alpha, rng)?;
        let (next, l) = fly(st, theta);
        st = next;
        states.push(st);
        branches.push(b);
        flights.push(l);
    }
    Ok(PipelineTrajectory {
        alpha: *alpha,
        seed: None,
        states,
        branches,
        flights,
    })
}

/// Lyapunov estimate with the off-diagonal growth bound it rests on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineLyapunov {
    pub estimate: f64,
    pub n: u64,
    /// Smallest distance from a reachable angle to {0, π}.
    pub theta_min: f64,
    /// Longest possible flight, `1/sin θ_min`.
    pub max_flight: f64,
    /// Largest `|offdiag_k| / (k L / sin θ_min)` over the run.
    pub worst_bound_ratio: f64,
    pub bound_respected: bool,
}

/// Runs `n` seeded steps and returns `(1/n) log ‖J·v‖`, checking at every step
/// that `|offdiag_k| ≤ k L / sin θ_min` with `L` and θ_min taken over C(θ₀).
///
/// With `strict` set, irrational α is refused.
pub fn pipeline_lyapunov(
    start: PipelineState,
    theta0: AngleSpec,
    alpha: &BaseAngle,
    n: usize,
    seed: u64,
    v: (f64, f64),
    strict: bool,
) -> Result<PipelineLyapunov> {
    if strict && !alpha.is_rational() {
        return Err(Error::Precondition(
            "the zero-exponent bound is established only for α = mπ/n; pass strict = false to run anyway"
                .into(),
        ));
    }
    if v.0 == 0.0 && v.1 == 0.0 {
        return Err(Error::ZeroVector);
    }
    if (theta0.radians() - start.theta).abs() > 1e-12 {
        return Err(Error::Precondition("θ₀ does not match the start state".into()));
    }
    let set = reachable_angles(theta0, alpha, None)?;
    let theta_min = set
        .values()
        .iter()
        .map(|&t| t.min(PI - t))
        .fold(f64::INFINITY, f64::min);
    let max_flight = 1.0 / theta_min.sin();
    let traj = pipeline_simulate(start, n, alpha, seed)?;
    let mut worst: f64 = 0.0;
    let mut last = PipelineJacobian::default();
    for j in traj.jacobians().skip(1) {
        let bound = j.n as f64 * max_flight / theta_min.sin();
        worst = worst.max(j.offdiag.abs() / bound);
        last = j;
    }
    Ok(PipelineLyapunov {
        estimate: last.lyapunov(v)?,
        n: last.n,
        theta_min,
        max_flight,
        worst_bound_ratio: worst,
        bound_respected: worst <= 1.0 + 1e-9,
    })
}
