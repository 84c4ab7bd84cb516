//! The four-branch random reflection map on [0, π].
//!
//! A particle leaving the wall at angle θ is reflected by one of four affine
//! branches
//!
//! ```text
//! T1(θ) = θ + 2α     T2(θ) = −θ + 2π − 4α
//! T3(θ) = θ − 2α     T4(θ) = −θ + 4α
//! ```
//!
//! chosen with piecewise probabilities p1..p4 built from
//! `u_a(θ) = ½(1 + tan a / tan θ)`.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::BaseAngle;
use crate::error::{Error, Result};

/// Index of a branch map, 1 through 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct BranchId(u8);

impl BranchId {
    pub const T1: BranchId = BranchId(1);
    pub const T2: BranchId = BranchId(2);
    pub const T3: BranchId = BranchId(3);
    pub const T4: BranchId = BranchId(4);
    pub const ALL: [BranchId; 4] = [Self::T1, Self::T2, Self::T3, Self::T4];

    pub fn new(index: u8) -> Option<Self> {
        (1..=4).contains(&index).then_some(BranchId(index))
    }

    /// The branch number, 1..=4.
    pub fn number(self) -> u8 {
        self.0
    }

    /// Zero-based slot, for indexing probability vectors.
    pub fn slot(self) -> usize {
        usize::from(self.0 - 1)
    }

    /// Derivative of the branch map: +1 for the translations T1, T3 and
    /// −1 for the reflections T2, T4.
    pub fn derivative_sign(self) -> i64 {
        match self.0 {
            1 | 3 => 1,
            _ => -1,
        }
    }

    /// The branch that undoes this one (T1↔T3, T2 and T4 are involutions).
    pub fn inverse(self) -> BranchId {
        match self.0 {
            1 => Self::T3,
            3 => Self::T1,
            k => BranchId(k),
        }
    }
}

impl TryFrom<u8> for BranchId {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        BranchId::new(v).ok_or_else(|| format!("branch index {v} not in 1..=4"))
    }
}

impl From<BranchId> for u8 {
    fn from(b: BranchId) -> u8 {
        b.0
    }
}

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The probability vector (p1, p2, p3, p4) at one angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchProbabilities(pub [f64; 4]);

impl BranchProbabilities {
    pub fn get(&self, branch: BranchId) -> f64 {
        self.0[branch.slot()]
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Branches with strictly positive probability.
    pub fn support(&self) -> impl Iterator<Item = BranchId> + '_ {
        BranchId::ALL.into_iter().filter(|b| self.get(*b) > 0.0)
    }
}

/// `u_a(θ) = ½(1 + tan a · cos θ / sin θ)`.
///
/// Written with cos/sin so θ = π/2 evaluates to ½ instead of going through an
/// infinite tangent.
pub fn u(a: f64, theta: f64) -> Result<f64> {
    if theta <= 0.0 || theta >= PI {
        return Err(Error::SingularAngle(theta));
    }
    Ok(0.5 * (1.0 + a.tan() * theta.cos() / theta.sin()))
}

/// Image of θ under a branch, without any range check.
#[inline]
pub(crate) fn branch_image(branch: BranchId, theta: f64, alpha: f64) -> f64 {
    match branch.0 {
        1 => theta + 2.0 * alpha,
        2 => -theta + 2.0 * PI - 4.0 * alpha,
        3 => theta - 2.0 * alpha,
        _ => -theta + 4.0 * alpha,
    }
}

/// Applies branch `T_i`. No reduction modulo π is done, so an image outside
/// [0, π] means an inadmissible branch was applied and is reported as an error.
pub fn apply_branch(branch: BranchId, theta: f64, alpha: &BaseAngle) -> Result<f64> {
    let image = branch_image(branch, theta, alpha.value());
    if !(0.0..=PI).contains(&image) {
        return Err(Error::OutOfRange {
            value: image,
            context: "branch image",
        });
    }
    Ok(image)
}

/// Index of the probability piece containing θ, with the left-closed,
/// right-open convention: 0 = [0,α), 1 = [α,2α), 2 = [2α,3α), 3 = [3α,π−3α),
/// 4 = [π−3α,π−2α), 5 = [π−2α,π−α), 6 = [π−α,π].
#[inline]
pub(crate) fn piece_index(theta: f64, breakpoints: &[f64; 6]) -> usize {
    breakpoints.iter().take_while(|&&b| theta >= b).count()
}

/// The piecewise probabilities before clamping.
///
/// Each piece is evaluated in a sine-difference form algebraically equal to the
/// tangent expressions, e.g. `u_α(−θ) = sin(θ−α) / (2 cos α sin θ)` and
/// `u_α(θ) − 2cos 2α·u_2α(θ) = sin(θ − (π−3α)) / (2 cos α sin θ)`. Every
/// probability that vanishes at a piece boundary then evaluates to exactly 0
/// there.
pub fn branch_probabilities_raw(theta: f64, alpha: &BaseAngle) -> [f64; 4] {
    let bp = alpha.breakpoints();
    let [a1, a2, a3, b3, b2, b1] = bp;
    let piece = piece_index(theta, &bp);
    if piece == 0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    if piece == 6 {
        return [0.0, 0.0, 1.0, 0.0];
    }
    let s = theta.sin();
    let d = 2.0 * alpha.cos() * s;
    // u_α(θ) and u_α(−θ)
    let u_plus = (theta + a1).sin() / d;
    let u_minus = (theta - a1).sin() / d;
    match piece {
        1 => [u_plus, 0.0, 0.0, u_minus],
        2 => [u_plus, 0.0, (theta - a2).sin() / s, (a3 - theta).sin() / d],
        3 => [u_plus, 0.0, u_minus, 0.0],
        4 => [(b2 - theta).sin() / s, (theta - b3).sin() / d, u_minus, 0.0],
        _ => [0.0, (b1 - theta).sin() / d, u_minus, 0.0],
    }
}

/// Branch probabilities at θ ∈ [0, π].
///
/// Round-off negatives are clamped to zero and the vector is renormalised when
/// its sum is off by more than 1e−12.
pub fn branch_probabilities(theta: f64, alpha: &BaseAngle) -> BranchProbabilities {
    let mut p = branch_probabilities_raw(theta, alpha);
    for v in p.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-12 {
                log::warn!("probability {v:e} at θ = {theta} clamped to 0");
            }
            *v = 0.0;
        }
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        if (total - 1.0).abs() > 1e-9 {
            log::warn!("probabilities at θ = {theta} sum to {total}; renormalising");
        }
        for v in p.iter_mut() {
            *v /= total;
        }
    }
    BranchProbabilities(p)
}

/// Branches with strictly positive probability at θ.
pub fn admissible_branches(theta: f64, alpha: &BaseAngle) -> Vec<BranchId> {
    branch_probabilities(theta, alpha).support().collect()
}

/// Picks the branch whose cumulative-probability cell
/// `[Σ_{i<k} p_i, Σ_{i≤k} p_i)` contains `x ∈ [0, 1)`.
pub fn select_branch(probs: &BranchProbabilities, x: f64) -> BranchId {
    let mut lower = 0.0;
    let mut last = BranchId::T1;
    for b in BranchId::ALL {
        let p = probs.get(b);
        if p > 0.0 {
            if x < lower + p {
                return b;
            }
            last = b;
        }
        lower += p;
    }
    // x fell past a cumulative sum that rounded below 1.
    last
}

/// Draws one step of the random map from θ ∈ (0, π).
pub fn sample_step<R: Rng + ?Sized>(
    theta: f64,
    alpha: &BaseAngle,
    rng: &mut R,
) -> Result<(BranchId, f64)> {
    if theta <= 0.0 || theta >= PI {
        return Err(Error::SingularAngle(theta));
    }
    let probs = branch_probabilities(theta, alpha);
    let x: f64 = rng.random();
    let branch = select_branch(&probs, x);
    Ok((branch, branch_image(branch, theta, alpha.value())))
}
