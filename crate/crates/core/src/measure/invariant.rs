//! The interval family that blocks convergence to μ when α = mπ/n.
//!
//! In units of π, `I_j = ((2j−1)/2n − 1/4n, (2j−1)/2n + 1/4n)` for
//! j = 1..=n. Each `I_j` sits strictly inside `((j−1)/n, j/n)`, so no
//! probability breakpoint (all multiples of 1/n) cuts it, and every branch
//! that is possible on `I_j` is an isometry onto another member.

use num_rational::Ratio;
use serde::Serialize;

use crate::angle::BaseAngle;
use crate::error::{Error, Result};
use crate::feres::BranchId;

type Q = Ratio<i64>;

/// The `n` intervals `I_j`, endpoints as exact multiples of π.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantIntervalFamily {
    pub m: i64,
    pub n: i64,
    /// `(left, right)` of each open interval, divided by π.
    pub intervals: Vec<(Q, Q)>,
}

impl InvariantIntervalFamily {
    pub fn new(alpha: &BaseAngle) -> Result<Self> {
        let (m, n) = alpha.as_rational().ok_or_else(|| {
            Error::Precondition("the invariant family exists only for α = mπ/n".into())
        })?;
        let eps = Q::new(1, 4 * n);
        let intervals = (1..=n)
            .map(|j| {
                let c = Self::center_of(n, j);
                (c - eps, c + eps)
            })
            .collect();
        Ok(InvariantIntervalFamily { m, n, intervals })
    }

    fn center_of(n: i64, j: i64) -> Q {
        Q::new(2 * j - 1, 2 * n)
    }

    /// `(2j−1)/2n`, in units of π.
    pub fn center(&self, j: i64) -> Q {
        Self::center_of(self.n, j)
    }

    /// Half-width `1/4n`, in units of π.
    pub fn epsilon(&self) -> Q {
        Q::new(1, 4 * self.n)
    }

    /// Total length of the union in units of π.
    pub fn total_length(&self) -> Q {
        self.intervals.iter().map(|(l, r)| r - l).sum()
    }

    /// μ(∪ I_j) evaluated from the cell formula `½(cos a − cos b)`.
    pub fn mu_mass(&self) -> f64 {
        self.intervals
            .iter()
            .map(|(l, r)| super::mu_measure(to_radians(*l), to_radians(*r)))
            .sum()
    }

    /// Member index (1-based) whose interval is exactly `(l, r)`.
    pub fn find(&self, l: Q, r: Q) -> Option<i64> {
        self.intervals
            .iter()
            .position(|&(a, b)| a == l && b == r)
            .map(|i| i as i64 + 1)
    }

    /// Cells of an N-cell grid on [0, π] that meet some `I_j` in a set of
    /// positive length.
    pub fn covering_cells(&self, bins: usize) -> Vec<bool> {
        let mut hit = vec![false; bins];
        for (l, r) in &self.intervals {
            // cell k is [k/N, (k+1)/N) in units of π
            let lo = (*l * bins as i64).floor().to_integer();
            let hi = (*r * bins as i64).ceil().to_integer();
            for k in lo.max(0)..hi.min(bins as i64) {
                hit[k as usize] = true;
            }
        }
        hit
    }

    /// Whether the grid edges include every interval endpoint.
    pub fn aligned_with(&self, bins: usize) -> bool {
        self.intervals
            .iter()
            .all(|(l, r)| (*l * bins as i64).is_integer() && (*r * bins as i64).is_integer())
    }
}

fn to_radians(q: Q) -> f64 {
    *q.numer() as f64 * std::f64::consts::PI / *q.denom() as f64
}

/// Exact image of a point under a branch, in units of π.
fn image(b: BranchId, x: Q, a: Q) -> Q {
    let two = Q::from_integer(2);
    match b.number() {
        1 => x + a * 2,
        2 => two - x - a * 4,
        3 => x - a * 2,
        _ => a * 4 - x,
    }
}

/// Open set, in units of π, on which `p_b > 0`.
fn positivity(b: BranchId, a: Q) -> (Q, Q) {
    let one = Q::from_integer(1);
    match b.number() {
        1 => (Q::from_integer(-1), one - a * 2),
        2 => (one - a * 3, one - a),
        3 => (a * 2, Q::from_integer(2)),
        _ => (a, a * 3),
    }
}

/// A member interval whose image is not a member, or a center whose image is
/// not a center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyViolation {
    pub j: i64,
    pub branch: BranchId,
    pub image: (String, String),
}

/// Result of the exact check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    pub n: i64,
    /// `(j, branch, l)` for every applicable pair, with `T_branch(I_j) = I_l`.
    pub mappings: Vec<(i64, BranchId, i64)>,
    pub violations: Vec<FamilyViolation>,
    pub total_length_is_half: bool,
    pub centers_invariant: bool,
}

impl FamilyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.total_length_is_half && self.centers_invariant
    }
}

/// Checks in exact arithmetic that every branch possible somewhere on `I_j`
/// maps it onto some `I_l`, that the centers are carried to centers, and that
/// the union has length π/2.
pub fn invariant_family_check(alpha: &BaseAngle) -> Result<FamilyReport> {
    let fam = InvariantIntervalFamily::new(alpha)?;
    let a = alpha.pi_ratio().expect("rational");
    let mut mappings = Vec::new();
    let mut violations = Vec::new();
    let mut centers_invariant = true;
    let centers: Vec<Q> = (1..=fam.n).map(|j| fam.center(j)).collect();
    for (idx, &(l, r)) in fam.intervals.iter().enumerate() {
        let j = idx as i64 + 1;
        for b in BranchId::ALL {
            let (pl, pr) = positivity(b, a);
            // applicable when the open sets overlap in positive length
            if l.max(pl) >= r.min(pr) {
                continue;
            }
            let (u, v) = (image(b, l, a), image(b, r, a));
            let (il, ir) = (u.min(v), u.max(v));
            match fam.find(il, ir) {
                Some(target) => mappings.push((j, b, target)),
                None => violations.push(FamilyViolation {
                    j,
                    branch: b,
                    image: (il.to_string(), ir.to_string()),
                }),
            }
            if !centers.contains(&image(b, fam.center(j), a)) {
                centers_invariant = false;
            }
        }
    }
    Ok(FamilyReport {
        n: fam.n,
        mappings,
        violations,
        total_length_is_half: fam.total_length() == Q::new(1, 2),
        centers_invariant,
    })
}
