//! The transition kernel `K(x, A) = Σ p_i(x) 1_A(T_i x)` acting on cell
//! densities.
//!
//! Mass inside a cell is spread with the density's reference weight (1 or
//! sin θ). Each cell is cut at the probability breakpoints and at the
//! preimages of grid edges under every branch, so each piece lands in a single
//! target cell, and the piece carries `∫ p_i w / ∫ w` of the cell's mass.
//! Pieces narrower than 1e−9 of a cell are rounding slivers of aligned edges
//! and are dropped.

use std::f64::consts::PI;

use crate::angle::BaseAngle;
use crate::error::Result;
use crate::feres::{branch_image, branch_probabilities, BranchId};
use crate::quadrature::GaussLegendre;

use super::{total_variation, AngleDensity, Reference};

/// Quadrature nodes per piece.
pub const DEFAULT_NODES: usize = 8;

const SLIVER: f64 = 1e-9;

/// The kernel on a fixed grid, as a sparse column-stochastic map.
#[derive(Debug, Clone)]
pub struct KernelOperator {
    bins: usize,
    reference: Reference,
    // per source cell: (target cell, fraction of the source mass)
    rows: Vec<Vec<(usize, f64)>>,
}

impl KernelOperator {
    pub fn new(alpha: &BaseAngle, bins: usize, reference: Reference, nodes: usize) -> Self {
        let rule = GaussLegendre::new(nodes);
        let h = PI / bins as f64;
        let a = alpha.value();
        let bp = alpha.breakpoints();
        let mut rows = Vec::with_capacity(bins);
        let mut cuts = Vec::new();
        for k in 0..bins {
            let (lo, hi) = (k as f64 * h, if k + 1 == bins { PI } else { (k + 1) as f64 * h });
            let mut row: Vec<(usize, f64)> = Vec::new();
            for b in BranchId::ALL {
                cuts.clear();
                cuts.extend([lo, hi]);
                cuts.extend(bp.iter().copied().filter(|&x| x > lo && x < hi));
                let (ilo, ihi) = {
                    let (u, v) = (branch_image(b, lo, a), branch_image(b, hi, a));
                    (u.min(v), u.max(v))
                };
                let first = (ilo / h).floor() as i64 + 1;
                let last = (ihi / h).ceil() as i64 - 1;
                for e in first..=last {
                    let pre = branch_image(b.inverse(), e as f64 * h, a);
                    if pre > lo && pre < hi {
                        cuts.push(pre);
                    }
                }
                cuts.sort_by(f64::total_cmp);
                for w in cuts.windows(2) {
                    let (x0, x1) = (w[0], w[1]);
                    if x1 - x0 < SLIVER * h {
                        continue;
                    }
                    let mid = 0.5 * (x0 + x1);
                    if branch_probabilities(mid, alpha).get(b) <= 0.0 {
                        continue;
                    }
                    let mass = rule.integrate(
                        |x| branch_probabilities(x, alpha).get(b) * reference.weight(x),
                        x0,
                        x1,
                    );
                    if mass <= 0.0 {
                        continue;
                    }
                    let image = branch_image(b, mid, a);
                    let target = ((image / h).floor().max(0.0) as usize).min(bins - 1);
                    match row.iter_mut().find(|(t, _)| *t == target) {
                        Some(entry) => entry.1 += mass,
                        None => row.push((target, mass)),
                    }
                }
            }
            let total: f64 = row.iter().map(|(_, m)| m).sum();
            for entry in row.iter_mut() {
                entry.1 /= total;
            }
            row.sort_by_key(|(t, _)| *t);
            rows.push(row);
        }
        KernelOperator {
            bins,
            reference,
            rows,
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn reference(&self) -> Reference {
        self.reference
    }

    /// Target cells and mass fractions leaving cell `k`.
    pub fn row(&self, k: usize) -> &[(usize, f64)] {
        &self.rows[k]
    }

    /// One kernel step. The grid and reference must match the operator's.
    pub fn apply(&self, d: &AngleDensity) -> Result<AngleDensity> {
        if d.bins() != self.bins || d.reference() != self.reference {
            return Err(crate::error::Error::GridMismatch(format!(
                "operator built for {} {:?} bins, density has {} {:?}",
                self.bins,
                self.reference,
                d.bins(),
                d.reference()
            )));
        }
        let mut out = vec![0.0; self.bins];
        for (k, &m) in d.masses().iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for &(t, f) in &self.rows[k] {
                out[t] += m * f;
            }
        }
        Ok(AngleDensity::from_raw(out, self.reference))
    }
}

/// One kernel step with the default quadrature.
pub fn kernel_pushforward(d: &AngleDensity, alpha: &BaseAngle) -> AngleDensity {
    KernelOperator::new(alpha, d.bins(), d.reference(), DEFAULT_NODES)
        .apply(d)
        .expect("operator matches the density grid")
}

/// `TV(ν⁽ᵏ⁾, μ)` for k = 0..=n_steps, with μ discretised on the same grid.
pub fn knudsen_run(initial: &AngleDensity, alpha: &BaseAngle, n_steps: usize) -> Vec<f64> {
    knudsen_trace(initial, alpha, n_steps, |_, _| {})
}

/// As [`knudsen_run`], also handing every iterate to `visit`.
pub fn knudsen_trace<F: FnMut(usize, &AngleDensity)>(
    initial: &AngleDensity,
    alpha: &BaseAngle,
    n_steps: usize,
    mut visit: F,
) -> Vec<f64> {
    let op = KernelOperator::new(alpha, initial.bins(), initial.reference(), DEFAULT_NODES);
    let mu = AngleDensity::mu(initial.bins(), initial.reference());
    let mut d = initial.clone();
    let mut tv = Vec::with_capacity(n_steps + 1);
    for k in 0..=n_steps {
        if k > 0 {
            d = op.apply(&d).expect("same grid");
        }
        visit(k, &d);
        tv.push(total_variation(&d, &mu).expect("same grid"));
    }
    tv
}
