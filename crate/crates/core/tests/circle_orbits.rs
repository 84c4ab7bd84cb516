use std::f64::consts::{PI, TAU};

use num_rational::Ratio;
use rand::Rng;
use randbill_core::circle::{
    arc_discrepancy, caustic_of_set, caustic_of_trajectory, chord_distance_check, chord_line_distance,
    dense_orbit_discrepancy, lyapunov_estimate, min_chord_distance, prescribed_orbit, reduce_arc,
    ring_coverage, simulate, simulate_with, CoverageGrid,
};
use randbill_core::feres::branch_probabilities;
use randbill_core::measure::{mu_measure, sample_mu};
use randbill_core::reachable::reachable_angles;
use randbill_core::rng::stream_rng;
use randbill_core::stats::{chi_square_gof, histogram};
use randbill_core::{AngleSpec, BaseAngle, BranchId, JacobianAccumulator, PhasePoint};

fn arc_distance(x: f64, y: f64) -> f64 {
    let d = reduce_arc(x - y);
    d.min(TAU - d)
}

#[test]
fn translation_pairs_rotate_by_four_theta_plus_alpha() {
    let mut rng = stream_rng(4, 0);
    let word: Vec<BranchId> = [BranchId::T1, BranchId::T3].repeat(50);
    let mut checked = 0;
    while checked < 100 {
        let alpha = BaseAngle::real(rng.random_range(0.01..0.5)).unwrap();
        // T1 then T3 needs p₁(θ) > 0 and p₃(θ + 2α) > 0, i.e. θ < π − 2α
        let theta = rng.random_range(0.01..(PI - 2.0 * alpha.value() - 0.01));
        let s0 = rng.random_range(0.0..TAU);
        let orbit = prescribed_orbit(PhasePoint::new(s0, theta), &word, &alpha).unwrap();
        let end = orbit.last();
        let expect = s0 + 4.0 * 50.0 * (theta + alpha.value());
        assert!(arc_distance(end.s, expect) <= 1e-9);
        assert!((end.theta - theta).abs() <= 1e-9);
        checked += 1;
    }
}

#[test]
fn involution_words_fix_the_angle() {
    let alpha = BaseAngle::rational(1, 7).unwrap();
    let theta = PI - 2.5 * alpha.value();
    assert!(branch_probabilities(theta, &alpha).get(BranchId::T2) > 0.0);
    let orbit = prescribed_orbit(PhasePoint::new(0.3, theta), &[BranchId::T2, BranchId::T2], &alpha).unwrap();
    assert!((orbit.last().theta - theta).abs() < 1e-14);
}

#[test]
fn equal_seeds_give_identical_runs() {
    let alpha = BaseAngle::real(0.5).unwrap();
    let a = simulate(PhasePoint::new(0.1, 1.0), 5000, &alpha, 99).unwrap();
    let b = simulate(PhasePoint::new(0.1, 1.0), 5000, &alpha, 99).unwrap();
    assert_eq!(a, b);
    let c = simulate(PhasePoint::new(0.1, 1.0), 5000, &alpha, 100).unwrap();
    assert_ne!(a.branches, c.branches);
}

#[test]
fn orbit_points_follow_the_step_rule() {
    let alpha = BaseAngle::rational(2, 13).unwrap();
    let t = simulate(PhasePoint::new(2.0, 0.8), 2000, &alpha, 5).unwrap();
    for (k, w) in t.points.windows(2).enumerate() {
        let step = prescribed_orbit(w[0], &[t.branches[k]], &alpha).unwrap();
        assert_eq!(step.last(), w[1]);
    }
}

/// Rotation by an angle that is a golden-ratio fraction of the circle; its
/// discrepancy at n = 2·10⁵ is well below 0.01 by the three-distance theorem.
#[test]
fn rotation_orbit_is_equidistributed() {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let step = TAU * golden;
    let n = 200_000;
    let d = arc_discrepancy((0..n).map(|k| k as f64 * step), 20);
    assert!(d < 0.01, "{d}");
}

#[test]
fn discrepancy_requires_enough_points() {
    let alpha = BaseAngle::real(0.5).unwrap();
    let t = simulate(PhasePoint::new(0.0, 1.0), 5, &alpha, 1).unwrap();
    assert!(dense_orbit_discrepancy(&t, 20).is_err());
}

#[test]
fn random_orbit_equidistributes_in_s() {
    let alpha = BaseAngle::real(0.5).unwrap();
    let t = simulate(PhasePoint::new(0.0, 0.9), 200_000, &alpha, 7).unwrap();
    let d = dense_orbit_discrepancy(&t, 20).unwrap();
    assert!(d < 0.05, "{d}");
    let h = histogram(t.points.iter().map(|p| p.s), 0.0, TAU, 20);
    assert!(chi_square_gof(&h, &[1.0; 20]).p_value > 0.001);
}

#[test]
fn chord_geometry() {
    assert!(chord_line_distance(1.0, 1.0 + PI) < 1e-15);
    assert!((chord_line_distance(0.0, TAU / 3.0) - 0.5).abs() < 1e-15);
    let alpha = BaseAngle::real(0.37).unwrap();
    let t = simulate(PhasePoint::new(0.0, 1.1), 10_000, &alpha, 3).unwrap();
    assert!(chord_distance_check(&t) <= 1e-9);
}

#[test]
fn pi_over_seven_caustic() {
    let alpha = BaseAngle::rational(1, 7).unwrap();
    let set = reachable_angles(AngleSpec::PiRatio(Ratio::new(1, 20)), &alpha, None).unwrap();
    let c = caustic_of_set(&set);
    // brute force over the seven listed angles
    let (t, a) = (PI / 20.0, PI / 7.0);
    let listed = [t, t + 2.0 * a, t + 4.0 * a, t + 6.0 * a, -t + 2.0 * a, -t + 4.0 * a, -t + 6.0 * a];
    let brute = listed.iter().map(|x| x.cos().abs()).fold(f64::INFINITY, f64::min);
    assert!((c.radius - brute).abs() <= 1e-12);
    assert!(!c.degenerate);

    let traj = simulate(PhasePoint::new(0.0, t), 50_000, &alpha, 8).unwrap();
    assert!(min_chord_distance(&traj) >= c.radius - 1e-9);
    let seen = caustic_of_trajectory(&traj);
    assert!((seen.radius - c.radius).abs() < 1e-12);
}

#[test]
fn right_angle_caustic_degenerates() {
    let alpha = BaseAngle::rational(1, 7).unwrap();
    let set = reachable_angles(AngleSpec::PiRatio(Ratio::new(1, 2)), &alpha, None).unwrap();
    let c = caustic_of_set(&set);
    assert!(c.degenerate);
    assert_eq!(c.radius, 0.0);
}

#[test]
fn single_point_caustic() {
    let alpha = BaseAngle::real(0.4).unwrap();
    let t = simulate(PhasePoint::new(0.0, 1.2), 0, &alpha, 0).unwrap();
    assert_eq!(caustic_of_trajectory(&t).radius, 1.2f64.cos().abs());
}

#[test]
fn coverage_edge_cases_and_long_run() {
    let alpha = BaseAngle::rational(1, 7).unwrap();
    let set = reachable_angles(AngleSpec::PiRatio(Ratio::new(1, 20)), &alpha, None).unwrap();
    let c = caustic_of_set(&set);
    let empty = simulate(PhasePoint::new(0.0, PI / 20.0), 0, &alpha, 1).unwrap();
    assert_eq!(ring_coverage(&empty, &c, 20, 60), 0.0);

    // one chord: compare with a dense sampling of the same segment
    let one = simulate(PhasePoint::new(0.4, PI / 20.0), 1, &alpha, 1).unwrap();
    let (a, b, _) = one.chords().next().unwrap();
    let (p, q) = ((a.cos(), a.sin()), (b.cos(), b.sin()));
    let mut dense = std::collections::BTreeSet::new();
    let dr = (1.0 - c.radius) / 20.0;
    for i in 0..=1_000_000 {
        let t = i as f64 / 1e6;
        let (x, y) = (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1));
        let r = x.hypot(y);
        if r >= c.radius && r <= 1.0 {
            let ri = (((r - c.radius) / dr) as usize).min(19);
            let ai = ((reduce_arc(y.atan2(x)) / TAU * 60.0) as usize).min(59);
            dense.insert(ri * 60 + ai);
        }
    }
    let mut grid = CoverageGrid::new(c.radius, 20, 60);
    grid.mark_segment(p, q);
    assert_eq!(grid.covered(), dense.len());

    let long = simulate(PhasePoint::new(0.0, PI / 20.0), 100_000, &alpha, 7).unwrap();
    assert!(ring_coverage(&long, &c, 20, 60) >= 0.99);
}

#[test]
fn jacobian_structure_along_random_run() {
    let alpha = BaseAngle::real(0.5).unwrap();
    let t = simulate(PhasePoint::new(0.0, 1.0), 100_000, &alpha, 12).unwrap();
    let mut acc = JacobianAccumulator::identity();
    let mut reflections = 0u32;
    for &b in &t.branches {
        acc = acc.step(b);
        if b.derivative_sign() < 0 {
            reflections += 1;
        }
        assert!(acc.b == 1 || acc.b == -1);
        assert_eq!(acc.a % 2, 0);
        assert!(acc.a.unsigned_abs() <= 2 * acc.n);
        assert_eq!(acc.b, if reflections % 2 == 0 { 1 } else { -1 });
    }
    assert_eq!(acc, t.jacobian());
    for v in [(1.0, 0.0), (0.0, 1.0), (0.6, -0.8)] {
        assert!(lyapunov_estimate(&t, v).unwrap().abs() < 1e-3);
    }
    assert_eq!(lyapunov_estimate(&t, (1.0, 0.0)).unwrap(), 0.0);
}

#[test]
fn translation_word_lyapunov_closed_form() {
    let n = 100_000u64;
    let mut acc = JacobianAccumulator::identity();
    for _ in 0..n / 2 {
        acc = acc.step(BranchId::T1).step(BranchId::T3);
    }
    assert_eq!(acc.a, 2 * n as i64);
    let got = acc.lyapunov((0.0, 1.0)).unwrap();
    let closed = (4.0 * (n as f64).powi(2) + 1.0).sqrt().ln() / n as f64;
    assert!((got - closed).abs() < 1e-15);
    assert!(got < 1.3e-4);
}

/// Starting from μ, the angle after any number of steps is again μ-distributed.
#[test]
fn angle_marginal_stays_mu() {
    let alpha = BaseAngle::real(0.5).unwrap();
    let particles = 20_000;
    let bins = 30;
    let mut finals = Vec::with_capacity(particles);
    for i in 0..particles {
        let mut rng = stream_rng(77, i as u64);
        let theta = sample_mu(&mut rng);
        let t = simulate_with(PhasePoint::new(0.0, theta), 200, &alpha, &mut rng).unwrap();
        finals.push(t.last().theta);
    }
    let h = histogram(finals, 0.0, PI, bins);
    let expected: Vec<f64> = (0..bins)
        .map(|k| mu_measure(k as f64 * PI / bins as f64, (k + 1) as f64 * PI / bins as f64))
        .collect();
    assert!(chi_square_gof(&h, &expected).p_value > 0.001);
}
