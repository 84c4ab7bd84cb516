//! Histograms and chi-square tests used by the statistical diagnostics.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Outcome of a chi-square test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquare {
    fn from_statistic(statistic: f64, dof: usize) -> Self {
        let p_value = if dof == 0 {
            1.0
        } else {
            ChiSquared::new(dof as f64)
                .map(|d| d.sf(statistic))
                .unwrap_or(f64::NAN)
        };
        ChiSquare {
            statistic,
            dof,
            p_value,
        }
    }

    /// True when the null hypothesis survives at level `alpha`.
    pub fn accepts(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

/// Counts of `values` in `bins` equal cells of `[lo, hi)`; values outside are
/// clamped into the end cells.
pub fn histogram(values: impl IntoIterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins];
    let scale = bins as f64 / (hi - lo);
    for v in values {
        let idx = ((v - lo) * scale).floor();
        let idx = if idx < 0.0 { 0 } else { (idx as usize).min(bins - 1) };
        counts[idx] += 1;
    }
    counts
}

/// Goodness of fit of `observed` counts to cell probabilities `expected`.
///
/// Adjacent cells are pooled left to right until each pooled cell expects at
/// least five counts.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), expected.len());
    let total: u64 = observed.iter().sum();
    let norm: f64 = expected.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&ob, &ex) in observed.iter().zip(expected) {
        o += ob as f64;
        e += ex / norm * total as f64;
        if e >= 5.0 {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => cells.push((o, e)),
        }
    }
    let statistic = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    ChiSquare::from_statistic(statistic, cells.len().saturating_sub(1))
}

/// Two-sample homogeneity test on paired histograms. Cells empty in both
/// samples are dropped.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> ChiSquare {
    assert_eq!(a.len(), b.len());
    let na: f64 = a.iter().sum::<u64>() as f64;
    let nb: f64 = b.iter().sum::<u64>() as f64;
    let n = na + nb;
    let mut statistic = 0.0;
    let mut used = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        used += 1;
        let ea = col * na / n;
        let eb = col * nb / n;
        statistic += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    ChiSquare::from_statistic(statistic, used.saturating_sub(1))
}

/// Normalised sup deviation `bins · max_k |count_k/total − 1/bins|`.
pub fn sup_deviation(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let bins = counts.len() as f64;
    counts
        .iter()
        .map(|&c| (c as f64 / total as f64 - 1.0 / bins).abs() * bins)
        .fold(0.0, f64::max)
}
