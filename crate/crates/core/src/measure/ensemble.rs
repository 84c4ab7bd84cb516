//! Particle ensembles and the skew-product representation of the random map.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::angle::BaseAngle;
use crate::error::{Error, Result};
use crate::feres::{branch_image, branch_probabilities, sample_step, select_branch};
use crate::rng::{stream_rng, SimRng};

/// A draw from μ(dθ) = ½ sin θ dθ by inverting its CDF `(1 − cos θ)/2`.
pub fn sample_mu<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    (1.0 - 2.0 * u).acos()
}

/// One independent step of every particle; particle `i` draws from stream `i`.
pub fn ensemble_step(particles: &[f64], alpha: &BaseAngle, seed: u64) -> Result<Vec<f64>> {
    particles
        .par_iter()
        .enumerate()
        .map(|(i, &theta)| {
            let mut rng = stream_rng(seed, i as u64);
            sample_step(theta, alpha, &mut rng).map(|(_, t)| t)
        })
        .collect()
}

/// Particles that keep their own generator across steps.
#[derive(Debug, Clone)]
pub struct Ensemble {
    alpha: BaseAngle,
    angles: Vec<f64>,
    rngs: Vec<SimRng>,
}

impl Ensemble {
    /// Particle `i` draws from stream `i` of `seed` for its whole life.
    pub fn new(angles: Vec<f64>, alpha: &BaseAngle, seed: u64) -> Self {
        let rngs = (0..angles.len() as u64).map(|i| stream_rng(seed, i)).collect();
        Ensemble {
            alpha: *alpha,
            angles,
            rngs,
        }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn step(&mut self) -> Result<()> {
        let alpha = self.alpha;
        self.angles
            .par_iter_mut()
            .zip(self.rngs.par_iter_mut())
            .try_for_each(|(theta, rng)| {
                *theta = sample_step(*theta, &alpha, rng)?.1;
                Ok(())
            })
    }
}

/// A point `(x, θ)` of the skew product on `[0, 1] × [0, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkewState {
    pub x: f64,
    pub theta: f64,
}

/// `S(x, θ) = (φ_k(x, θ), T_k(θ))` where `x` lies in the cell
/// `J_k = [Σ_{i<k} p_i, Σ_{i≤k} p_i)` and `φ_k` rescales `J_k` onto [0, 1].
pub fn skew_step(st: SkewState, alpha: &BaseAngle) -> Result<SkewState> {
    if st.theta <= 0.0 || st.theta >= PI {
        return Err(Error::SingularAngle(st.theta));
    }
    if !(0.0..=1.0).contains(&st.x) {
        return Err(Error::OutOfRange {
            value: st.x,
            context: "skew coordinate",
        });
    }
    let probs = branch_probabilities(st.theta, alpha);
    let k = select_branch(&probs, st.x);
    let below: f64 = probs.0[..k.slot()].iter().sum();
    let x = ((st.x - below) / probs.get(k)).clamp(0.0, 1.0);
    Ok(SkewState {
        x,
        theta: branch_image(k, st.theta, alpha.value()),
    })
}
