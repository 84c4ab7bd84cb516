use std::f64::consts::PI;

use rand::Rng;
use randbill_core::feres::{branch_probabilities, branch_probabilities_raw, BranchId};
use randbill_core::measure::{
    ensemble_step, invariant_family_check, kernel_pushforward, knudsen_run, knudsen_trace,
    liouville_residual, liouville_residual_one, mu_measure, product_measure_evolution, sample_mu,
    skew_step, total_variation, Ensemble, InvariantIntervalFamily, KernelOperator, ProductOptions,
};
use randbill_core::rng::stream_rng;
use randbill_core::stats::{chi_square_gof, chi_square_homogeneity, histogram};
use randbill_core::{AngleDensity, BaseAngle, Reference, SkewState};

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn mu_cells_oracle(bins: usize) -> Vec<f64> {
    let h = PI / bins as f64;
    (0..bins)
        .map(|k| simpson(|t| 0.5 * t.sin(), k as f64 * h, (k + 1) as f64 * h, 64))
        .collect()
}

#[test]
fn tv_of_uniform_against_mu() {
    let n = 256;
    let uni = AngleDensity::uniform_on(0.0, PI, n, Reference::Lebesgue).unwrap();
    let mu = AngleDensity::mu(n, Reference::Lebesgue);
    let oracle: f64 = 0.5 * mu_cells_oracle(n).iter().map(|m| (1.0 / n as f64 - m).abs()).sum::<f64>();
    assert!((total_variation(&uni, &mu).unwrap() - oracle).abs() < 1e-12);
}

#[test]
fn mass_is_conserved_every_step() {
    let alpha = BaseAngle::real(0.5).unwrap();
    for reference in [Reference::Lebesgue, Reference::Mu] {
        let op = KernelOperator::new(&alpha, 256, reference, 8);
        let mut d = AngleDensity::uniform_on(0.3, 2.9, 256, reference).unwrap();
        for _ in 0..2000 {
            d = op.apply(&d).unwrap();
            assert!((d.total() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn mu_is_a_fixed_point_up_to_grid_error() {
    for alpha in [BaseAngle::real(0.5).unwrap(), BaseAngle::rational(1, 7).unwrap()] {
        let mut previous = f64::INFINITY;
        for n in [256, 1024, 2048] {
            let mu = AngleDensity::mu(n, Reference::Lebesgue);
            let err = total_variation(&kernel_pushforward(&mu, &alpha), &mu).unwrap();
            assert!(err * (n * n) as f64 <= 2.0, "α={alpha} N={n}: {err}");
            assert!(err <= previous);
            previous = err;

            let mu = AngleDensity::mu(n, Reference::Mu);
            let err = total_variation(&kernel_pushforward(&mu, &alpha), &mu).unwrap();
            assert!(err <= 1e-12, "α={alpha} N={n}: {err}");
        }
    }
}

#[test]
fn low_angles_are_translated() {
    let alpha = BaseAngle::real(0.5).unwrap();
    let d = AngleDensity::uniform_on(0.1, 0.3, 512, Reference::Lebesgue).unwrap();
    let e = kernel_pushforward(&d, &alpha);
    let h = PI / 512.0;
    for k in e.support() {
        let (l, r) = e.cell(k);
        // partial source cells at either end widen the image by up to one cell
        assert!(l >= 1.1 - 2.0 * h && r <= 1.3 + 2.0 * h, "cell {k}");
    }
    assert!((e.total() - 1.0).abs() < 1e-14);
}

#[test]
fn right_angle_splits_evenly() {
    let alpha = BaseAngle::rational(1, 7).unwrap();
    let n = 255;
    let h = PI / n as f64;
    let centre = (PI / 2.0 / h) as usize;
    let mut masses = vec![0.0; n];
    masses[centre] = 1.0;
    let d = AngleDensity::new(masses, Reference::Lebesgue).unwrap();
    let e = kernel_pushforward(&d, &alpha);
    let near = |target: f64| -> f64 {
        e.support()
            .into_iter()
            .filter(|&k| (e.cell(k).0 + 0.5 * h - target).abs() <= 1.5 * h)
            .map(|k| e.masses()[k])
            .sum()
    };
    let up = near(PI / 2.0 + 2.0 * alpha.value());
    let down = near(PI / 2.0 - 2.0 * alpha.value());
    assert!((up - 0.5).abs() < 0.01 && (down - 0.5).abs() < 0.01, "{up} {down}");
    assert!((up + down - 1.0).abs() < 1e-12);
}

#[test]
fn knudsen_converges_for_irrational_ratio() {
    let alpha = BaseAngle::real(0.5).unwrap();
    for reference in [Reference::Mu, Reference::Lebesgue] {
        let init = AngleDensity::mu_on(0.2, 0.6, 256, reference).unwrap();
        let tv = knudsen_run(&init, &alpha, 2000);
        assert_eq!(tv.len(), 2001);
        assert!(tv[2000] < 0.05, "{:?}: {}", reference, tv[2000]);
        assert!(tv[2000] < tv[50]);
    }
}

#[test]
fn knudsen_starting_at_mu_stays_put() {
    let alpha = BaseAngle::real(0.5).unwrap();
    let tv = knudsen_run(&AngleDensity::mu(256, Reference::Mu), &alpha, 100);
    assert!(tv.iter().all(|&d| d <= 1e-12));
}

#[test]
fn union_mass_matches_quadrature() {
    for (m, n) in [(1, 7), (1, 9), (2, 13)] {
        let fam = InvariantIntervalFamily::new(&BaseAngle::rational(m, n).unwrap()).unwrap();
        let oracle: f64 = fam
            .intervals
            .iter()
            .map(|(l, r)| {
                let (a, b) = (
                    *l.numer() as f64 / *l.denom() as f64 * PI,
                    *r.numer() as f64 / *r.denom() as f64 * PI,
                );
                simpson(|t| 0.5 * t.sin(), a, b, 2000)
            })
            .sum();
        assert!((fam.mu_mass() - oracle).abs() < 1e-12);
        let closed = 1.0 / (2.0 * (PI / (4.0 * n as f64)).cos());
        assert!((fam.mu_mass() - closed).abs() < 1e-12);
    }
}

#[test]
fn knudsen_fails_for_rational_ratio() {
    let alpha = BaseAngle::rational(1, 7).unwrap();
    let fam = InvariantIntervalFamily::new(&alpha).unwrap();
    let n = 252;
    assert!(fam.aligned_with(n));
    let cover = fam.covering_cells(n);
    let (l, r) = fam.intervals[0];
    let to_rad = |q: num_rational::Ratio<i64>| *q.numer() as f64 / *q.denom() as f64 * PI;
    for reference in [Reference::Lebesgue, Reference::Mu] {
        let init = AngleDensity::uniform_on(to_rad(l), to_rad(r), n, reference).unwrap();
        let mut confined = true;
        let tv = knudsen_trace(&init, &alpha, 2000, |_, d| {
            confined &= d.support().into_iter().all(|k| cover[k]);
        });
        assert!(confined);
        let floor = 1.0 - fam.mu_mass() - 2.0 / n as f64;
        assert!(tv.iter().all(|&d| d >= floor), "{reference:?}");
    }
}

#[test]
fn invariant_families_check_exactly() {
    for (m, n) in [(1, 7), (1, 9), (2, 13)] {
        let report = invariant_family_check(&BaseAngle::rational(m, n).unwrap()).unwrap();
        assert!(report.passed(), "{m}π/{n}: {report:?}");
        assert!(!report.mappings.is_empty());
    }
}

#[test]
fn liouville_residuals_small_and_match_dense_oracle() {
    let fs: [(&str, &dyn Fn(f64) -> f64); 5] = [
        ("1", &|_| 1.0),
        ("θ", &|t| t),
        ("θ²", &|t| t * t),
        ("sin", &|t: f64| t.sin()),
        ("cos3", &|t: f64| (3.0 * t).cos()),
    ];
    for alpha in [BaseAngle::rational(1, 7).unwrap(), BaseAngle::real(0.5).unwrap()] {
        let all: Vec<&dyn Fn(f64) -> f64> = fs.iter().map(|f| f.1).collect();
        assert!(liouville_residual(&alpha, &all).unwrap() <= 1e-8);
        for (name, f) in fs.iter().skip(1).take(1).chain(fs.iter().skip(4)) {
            // 10⁶-point midpoint rule on the raw probability formulas
            let n = 1_000_000;
            let h = PI / n as f64;
            let a = alpha.value();
            let mut acc = 0.0;
            for i in 0..n {
                let t = (i as f64 + 0.5) * h;
                let p = branch_probabilities_raw(t, &alpha);
                let images = [t + 2.0 * a, -t + 2.0 * PI - 4.0 * a, t - 2.0 * a, -t + 4.0 * a];
                let pushed: f64 = (0..4).filter(|&k| p[k] > 0.0).map(|k| p[k] * f(images[k])).sum();
                acc += 0.5 * t.sin() * (pushed - f(t)) * h;
            }
            assert!(acc.abs() <= 1e-8, "oracle {name} α={alpha}: {acc}");
            let lib = liouville_residual_one(&alpha, f).unwrap();
            assert!((lib - acc.abs()).abs() <= 1e-8);
        }
    }
}

#[test]
fn ensemble_from_mu_stays_mu() {
    let alpha = BaseAngle::real(0.5).unwrap();
    let mut rng = stream_rng(3, 0);
    let particles: Vec<f64> = (0..100_000).map(|_| sample_mu(&mut rng)).collect();
    let stepped = ensemble_step(&particles, &alpha, 4).unwrap();
    let bins = 40;
    let expected: Vec<f64> = (0..bins)
        .map(|k| mu_measure(k as f64 * PI / bins as f64, (k + 1) as f64 * PI / bins as f64))
        .collect();
    assert!(chi_square_gof(&histogram(stepped, 0.0, PI, bins), &expected).p_value > 0.001);
}

#[test]
fn ensemble_step_is_deterministic() {
    let alpha = BaseAngle::rational(2, 13).unwrap();
    let particles: Vec<f64> = (1..500).map(|i| i as f64 * PI / 500.0).collect();
    assert_eq!(
        ensemble_step(&particles, &alpha, 8).unwrap(),
        ensemble_step(&particles, &alpha, 8).unwrap()
    );
}

#[test]
fn skew_branch_frequencies_follow_probabilities() {
    let alpha = BaseAngle::real(0.5).unwrap();
    let samples = 100_000;
    for g in 1..=20 {
        let theta = g as f64 * PI / 21.0;
        let p = branch_probabilities(theta, &alpha);
        let mut counts = [0u64; 4];
        let mut rng = stream_rng(5, g);
        for _ in 0..samples {
            let x: f64 = rng.random();
            let next = skew_step(SkewState { x, theta }, &alpha).unwrap();
            let b = BranchId::ALL
                .into_iter()
                .filter(|b| p.get(*b) > 0.0)
                .min_by(|a, b| {
                    let ia = randbill_core::feres::apply_branch(*a, theta, &alpha).unwrap();
                    let ib = randbill_core::feres::apply_branch(*b, theta, &alpha).unwrap();
                    (ia - next.theta).abs().total_cmp(&(ib - next.theta).abs())
                })
                .unwrap();
            counts[b.slot()] += 1;
        }
        for k in 0..4 {
            let q = p.0[k];
            let sd = (samples as f64 * q * (1.0 - q)).sqrt();
            assert!((counts[k] as f64 - q * samples as f64).abs() <= 3.0 * sd.max(1e-9), "θ={theta} k={k}");
        }
    }
}

#[test]
fn skew_orbits_match_ensemble_in_law() {
    let alpha = BaseAngle::real(0.5).unwrap();
    let theta0 = 1.3;
    let particles = 20_000;
    let mut rng = stream_rng(6, 0);
    let mut skew: Vec<SkewState> = (0..particles)
        .map(|_| SkewState { x: rng.random(), theta: theta0 })
        .collect();
    let mut ens = Ensemble::new(vec![theta0; particles], &alpha, 7);
    let bins = 24;
    for step in 1..=50 {
        for s in skew.iter_mut() {
            *s = skew_step(*s, &alpha).unwrap();
        }
        ens.step().unwrap();
        let a = histogram(skew.iter().map(|s| s.theta), 0.0, PI, bins);
        let b = histogram(ens.angles().iter().copied(), 0.0, PI, bins);
        let test = chi_square_homogeneity(&a, &b);
        assert!(test.p_value > 0.001, "step {step}: {test:?}");
    }
}

#[test]
fn product_measure_keeps_uniform_arc_marginal() {
    let alpha = BaseAngle::real(0.5).unwrap();
    let nu2 = AngleDensity::mu_on(0.2, 0.6, 256, Reference::Mu).unwrap();
    let opts = ProductOptions {
        particles: 20_000,
        check_every: 100,
        s_bins: 20,
        seed: 2,
    };
    let run = product_measure_evolution(true, &nu2, &alpha, 2000, &opts).unwrap();
    assert!(run.tv[2000] < 0.05);
    assert_eq!(run.s_checks.len(), 21);
    assert!(run.min_p_value() > 0.001, "{:?}", run.s_checks);

    let at_mu = product_measure_evolution(true, &AngleDensity::mu(128, Reference::Mu), &alpha, 50, &opts).unwrap();
    assert!(at_mu.tv.iter().all(|&d| d < 1e-12));
    assert!(at_mu.min_p_value() > 0.001);
}
