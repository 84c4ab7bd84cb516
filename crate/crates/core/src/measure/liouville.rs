//! Invariance of μ and of λ × μ.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::Serialize;

use crate::angle::BaseAngle;
use crate::circle::reduce_arc;
use crate::error::{Error, Result};
use crate::feres::{branch_image, branch_probabilities, sample_step, BranchId};
use crate::quadrature::GaussLegendre;
use crate::rng::stream_rng;
use crate::stats::{chi_square_gof, histogram};

use super::kernel::{KernelOperator, DEFAULT_NODES};
use super::{total_variation, AngleDensity, Reference};

const LIOUVILLE_TOL: f64 = 1e-13;

/// `|∫ Σ p_i(θ) f(T_i θ) dμ − ∫ f dμ|` for a single test function.
///
/// The integrand is smooth between the six probability breakpoints, so the
/// integral is taken piece by piece with panel-doubling Gauss–Legendre.
pub fn liouville_residual_one<F: Fn(f64) -> f64>(alpha: &BaseAngle, f: F) -> Result<f64> {
    let rule = GaussLegendre::new(10);
    let mut edges = vec![0.0];
    edges.extend(alpha.breakpoints());
    edges.push(PI);
    let a = alpha.value();
    let g = |theta: f64| {
        let p = branch_probabilities(theta, alpha);
        let pushed: f64 = BranchId::ALL
            .into_iter()
            .filter(|b| p.get(*b) > 0.0)
            .map(|b| p.get(b) * f(branch_image(b, theta, a)))
            .sum();
        0.5 * theta.sin() * (pushed - f(theta))
    };
    let mut total = 0.0;
    for w in edges.windows(2) {
        total += rule.integrate_adaptive(&g, w[0], w[1], LIOUVILLE_TOL)?;
    }
    Ok(total.abs())
}

/// Largest single-function residual over `test_functions`.
pub fn liouville_residual(alpha: &BaseAngle, test_functions: &[&dyn Fn(f64) -> f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for f in test_functions {
        worst = worst.max(liouville_residual_one(alpha, f)?);
    }
    Ok(worst)
}

/// Monte Carlo settings for the s-marginal certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductOptions {
    pub particles: usize,
    /// Test the s-marginal every this many steps (and at the last step).
    pub check_every: usize,
    pub s_bins: usize,
    pub seed: u64,
}

impl Default for ProductOptions {
    fn default() -> Self {
        ProductOptions {
            particles: 20_000,
            check_every: 100,
            s_bins: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductEvolution {
    /// `TV(ν₂⁽ᵏ⁾, μ)` for k = 0..=n.
    pub tv: Vec<f64>,
    /// `(step, p-value)` of the chi-square uniformity test on s.
    pub s_checks: Vec<(usize, f64)>,
}

impl ProductEvolution {
    /// Smallest p-value seen by the uniformity checks.
    pub fn min_p_value(&self) -> f64 {
        self.s_checks.iter().map(|c| c.1).fold(1.0, f64::min)
    }
}

/// Evolves `λ × ν₂` under the circle map.
///
/// The angle marginal is pushed forward by the kernel. The s-marginal is
/// followed with a particle cloud on the full map and tested for uniformity at
/// regular steps. Only a uniform first marginal is accepted.
pub fn product_measure_evolution(
    s_uniform: bool,
    nu2: &AngleDensity,
    alpha: &BaseAngle,
    n: usize,
    opts: &ProductOptions,
) -> Result<ProductEvolution> {
    if !s_uniform {
        return Err(Error::Precondition(
            "product evolution needs the uniform distribution on [0, 2π) as first marginal".into(),
        ));
    }
    let op = KernelOperator::new(alpha, nu2.bins(), nu2.reference(), DEFAULT_NODES);
    let mu = AngleDensity::mu(nu2.bins(), nu2.reference());
    let mut d = nu2.clone();
    let mut tv = vec![total_variation(&d, &mu)?];
    for _ in 0..n {
        d = op.apply(&d)?;
        tv.push(total_variation(&d, &mu)?);
    }

    let mut rng = stream_rng(opts.seed, 0);
    let mut cloud: Vec<(f64, f64)> = (0..opts.particles)
        .map(|_| (rng.random::<f64>() * TAU, sample_density(nu2, &mut rng)))
        .collect();
    let uniform = vec![1.0; opts.s_bins];
    let mut s_checks = Vec::new();
    let mut check = |step: usize, cloud: &[(f64, f64)]| {
        let h = histogram(cloud.iter().map(|c| c.0), 0.0, TAU, opts.s_bins);
        s_checks.push((step, chi_square_gof(&h, &uniform).p_value));
    };
    check(0, &cloud);
    for step in 1..=n {
        for (s, theta) in cloud.iter_mut() {
            let (_, t) = sample_step(*theta, alpha, &mut rng)?;
            *theta = t;
            *s = reduce_arc(*s + 2.0 * t);
        }
        if step % opts.check_every.max(1) == 0 || step == n {
            check(step, &cloud);
        }
    }
    Ok(ProductEvolution { tv, s_checks })
}

/// A draw from a cell density, spread inside the cell by its reference weight.
pub(crate) fn sample_density<R: Rng + ?Sized>(d: &AngleDensity, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut cell = d.bins() - 1;
    for (k, m) in d.masses().iter().enumerate() {
        acc += m;
        if u < acc {
            cell = k;
            break;
        }
    }
    while d.masses()[cell] == 0.0 && cell > 0 {
        cell -= 1;
    }
    let (l, r) = d.cell(cell);
    let v: f64 = rng.random();
    let theta = match d.reference() {
        Reference::Lebesgue => l + v * (r - l),
        // invert the sin-weighted CDF on the cell
        Reference::Mu => {
            let (cl, cr) = (l.cos(), r.cos());
            (cl - v * (cl - cr)).acos()
        }
    };
    theta.clamp(1e-300, PI - 1e-16)
}
