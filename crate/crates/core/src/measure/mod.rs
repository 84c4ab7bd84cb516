//! Angle distributions and their evolution under the random map.

mod ensemble;
mod invariant;
mod kernel;
mod liouville;

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ensemble::{ensemble_step, sample_mu, skew_step, Ensemble, SkewState};
pub use invariant::{invariant_family_check, FamilyReport, FamilyViolation, InvariantIntervalFamily};
pub use kernel::{kernel_pushforward, knudsen_run, knudsen_trace, KernelOperator, DEFAULT_NODES};
pub use liouville::{
    liouville_residual, liouville_residual_one, product_measure_evolution, ProductEvolution,
    ProductOptions,
};

/// Measure that fixes the shape of the mass inside each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    /// Mass spread uniformly over the cell.
    Lebesgue,
    /// Mass spread in proportion to `sin θ`, i.e. piecewise constant
    /// with respect to μ. Discretised μ is then an exact fixed point of the
    /// kernel.
    #[default]
    Mu,
}

impl Reference {
    pub(crate) fn weight(self, theta: f64) -> f64 {
        match self {
            Reference::Lebesgue => 1.0,
            Reference::Mu => theta.sin(),
        }
    }
}

/// `μ([a, b]) = ½(cos a − cos b)`, in a form without cancellation.
pub fn mu_measure(a: f64, b: f64) -> f64 {
    (0.5 * (a + b)).sin() * (0.5 * (b - a)).sin()
}

/// A probability distribution on [0, π] held as masses of equal-width cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleDensity {
    masses: Vec<f64>,
    reference: Reference,
}

impl AngleDensity {
    /// Normalises nonnegative cell masses to total one.
    pub fn new(masses: Vec<f64>, reference: Reference) -> Result<Self> {
        if masses.len() < 2 {
            return Err(Error::Precondition("a density needs at least two bins".into()));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::Precondition("cell masses must be finite and nonnegative".into()));
        }
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            return Err(Error::Precondition("cell masses sum to zero".into()));
        }
        Ok(AngleDensity {
            masses: masses.into_iter().map(|m| m / total).collect(),
            reference,
        })
    }

    /// Cell masses `cell_mass(left, right)`, normalised.
    pub fn from_cells<F: Fn(f64, f64) -> f64>(bins: usize, reference: Reference, cell_mass: F) -> Result<Self> {
        let h = PI / bins as f64;
        let masses = (0..bins)
            .map(|k| cell_mass(k as f64 * h, if k + 1 == bins { PI } else { (k + 1) as f64 * h }))
            .collect();
        Self::new(masses, reference)
    }

    /// μ(dθ) = ½ sin θ dθ on the grid.
    pub fn mu(bins: usize, reference: Reference) -> Self {
        Self::from_cells(bins, reference, mu_measure).expect("μ has positive mass")
    }

    /// Normalised Lebesgue measure on `[a, b]`.
    pub fn uniform_on(a: f64, b: f64, bins: usize, reference: Reference) -> Result<Self> {
        Self::from_cells(bins, reference, |l, r| (r.min(b) - l.max(a)).max(0.0))
    }

    /// μ restricted to `[a, b]` and normalised.
    pub fn mu_on(a: f64, b: f64, bins: usize, reference: Reference) -> Result<Self> {
        Self::from_cells(bins, reference, |l, r| {
            let (lo, hi) = (l.max(a), r.min(b));
            if hi > lo {
                mu_measure(lo, hi)
            } else {
                0.0
            }
        })
    }

    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    pub fn width(&self) -> f64 {
        PI / self.bins() as f64
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn reference(&self) -> Reference {
        self.reference
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// `[left, right)` of cell `k`.
    pub fn cell(&self, k: usize) -> (f64, f64) {
        let h = self.width();
        (k as f64 * h, if k + 1 == self.bins() { PI } else { (k + 1) as f64 * h })
    }

    /// Indices of cells carrying positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.bins()).filter(|&k| self.masses[k] > 0.0).collect()
    }

    pub(crate) fn from_raw(masses: Vec<f64>, reference: Reference) -> Self {
        AngleDensity { masses, reference }
    }

    /// CSV with header `bin_left,bin_right,mass`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_left,bin_right,mass")?;
        for (k, m) in self.masses.iter().enumerate() {
            let (l, r) = self.cell(k);
            writeln!(out, "{l},{r},{m}")?;
        }
        Ok(())
    }

    /// Reads the CSV written by [`write_csv`](Self::write_csv). Bins must be
    /// the equal-width grid of [0, π].
    pub fn read_csv<R: BufRead>(input: R, reference: Reference) -> Result<Self> {
        let mut masses = Vec::new();
        let mut edges = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Precondition(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("bin_left")) {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Precondition(format!("line {}: bad number {s:?}", lineno + 1)))
            };
            if cols.len() != 3 {
                return Err(Error::Precondition(format!(
                    "line {}: expected bin_left,bin_right,mass",
                    lineno + 1
                )));
            }
            edges.push((parse(cols[0])?, parse(cols[1])?));
            masses.push(parse(cols[2])?);
        }
        let d = Self::new(masses, reference)?;
        for (k, &(l, r)) in edges.iter().enumerate() {
            let (el, er) = d.cell(k);
            if (l - el).abs() > 1e-9 || (r - er).abs() > 1e-9 {
                return Err(Error::GridMismatch(format!(
                    "bin {k} is [{l}, {r}], expected [{el}, {er}]"
                )));
            }
        }
        Ok(d)
    }
}

/// `½ Σ |m₁ − m₂|`.
pub fn total_variation(d1: &AngleDensity, d2: &AngleDensity) -> Result<f64> {
    if d1.bins() != d2.bins() || d1.reference != d2.reference {
        return Err(Error::GridMismatch(format!(
            "{} {:?} bins vs {} {:?} bins",
            d1.bins(),
            d1.reference,
            d2.bins(),
            d2.reference
        )));
    }
    Ok(0.5
        * d1.masses
            .iter()
            .zip(&d2.masses)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}
