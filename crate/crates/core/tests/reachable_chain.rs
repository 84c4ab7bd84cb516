use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::PI;

use num_integer::Integer;
use num_rational::Ratio;
use randbill_core::feres::{apply_branch, branch_probabilities, sample_step};
use randbill_core::reachable::{
    is_aperiodic, is_irreducible, reachable_angles, reaches_interval, stationary_distribution,
    stationary_residual, transition_matrix,
};
use randbill_core::rng::stream_rng;
use randbill_core::{AngleSpec, BaseAngle, BranchId, ReachableSet};

type Q = Ratio<i64>;

/// Reachable values (in units of π) by breadth-first search over exact
/// rationals, with admissibility read directly off the positivity sets of
/// the four probability tables.
fn oracle_closure(theta0: Q, a: Q) -> BTreeSet<Q> {
    let one = Q::from_integer(1);
    let zero = Q::from_integer(0);
    let admissible = |x: Q| -> Vec<Q> {
        let mut out = Vec::new();
        if x >= zero && x < one - a * 2 {
            out.push(x + a * 2);
        }
        if x > one - a * 3 && x < one - a {
            out.push(Q::from_integer(2) - x - a * 4);
        }
        if x > a * 2 && x <= one {
            out.push(x - a * 2);
        }
        if x > a && x < a * 3 {
            out.push(a * 4 - x);
        }
        out
    };
    let mut seen = BTreeSet::from([theta0]);
    let mut queue = VecDeque::from([theta0]);
    while let Some(x) = queue.pop_front() {
        for y in admissible(x) {
            if seen.insert(y) {
                queue.push_back(y);
            }
        }
    }
    seen
}

fn exact_set(theta0: Q, m: i64, n: i64) -> ReachableSet {
    reachable_angles(AngleSpec::PiRatio(theta0), &BaseAngle::rational(m, n).unwrap(), None).unwrap()
}

fn ratios(set: &ReachableSet) -> BTreeSet<Q> {
    set.pi_ratios().unwrap().into_iter().collect()
}

#[test]
fn pi_over_seven_chain_states_and_matrix() {
    let (t, a) = (Q::new(1, 20), Q::new(1, 7));
    let set = exact_set(t, 1, 7);
    assert!(!set.truncated());
    let names: Vec<(&str, Q)> = vec![
        ("θ", t),
        ("θ+2α", t + a * 2),
        ("θ+4α", t + a * 4),
        ("θ+6α", t + a * 6),
        ("−θ+2α", -t + a * 2),
        ("−θ+4α", -t + a * 4),
        ("−θ+6α", -t + a * 6),
    ];
    let got = ratios(&set);
    let want: BTreeSet<Q> = names.iter().map(|n| n.1).collect();
    assert_eq!(got, want);

    let idx = |name: &str| {
        let q = names.iter().find(|n| n.0 == name).unwrap().1;
        set.pi_ratios().unwrap().iter().position(|&r| r == q).unwrap()
    };
    // nonzero entries of the transition matrix, row by row
    let pattern: Vec<(&str, &str, usize)> = vec![
        ("θ", "θ+2α", 1),
        ("θ+2α", "θ", 3),
        ("θ+2α", "θ+4α", 1),
        ("θ+2α", "−θ+2α", 4),
        ("θ+4α", "θ+2α", 3),
        ("θ+4α", "θ+6α", 1),
        ("θ+4α", "−θ+6α", 2),
        ("θ+6α", "θ+4α", 3),
        ("−θ+2α", "θ+2α", 4),
        ("−θ+2α", "−θ+4α", 1),
        ("−θ+4α", "−θ+2α", 3),
        ("−θ+4α", "−θ+6α", 1),
        ("−θ+6α", "θ+4α", 2),
        ("−θ+6α", "−θ+4α", 3),
    ];
    let alpha = BaseAngle::rational(1, 7).unwrap();
    let p = transition_matrix(&set, true).unwrap();
    let mut expected = vec![vec![0.0; 7]; 7];
    for (from, to, branch) in &pattern {
        let i = idx(from);
        let prob = branch_probabilities(set.values()[i], &alpha).get(BranchId::new(*branch as u8).unwrap());
        expected[i][idx(to)] = prob;
    }
    for i in 0..7 {
        for j in 0..7 {
            assert_eq!(p.get(i, j) > 0.0, expected[i][j] > 0.0, "entry ({i},{j})");
            assert!((p.get(i, j) - expected[i][j]).abs() < 1e-15);
        }
        let row: f64 = (0..7).map(|j| p.get(i, j)).sum();
        assert!((row - 1.0).abs() < 1e-12);
    }
    assert!(is_irreducible(&p));
}

#[test]
fn stationary_vector_is_sine_weighted() {
    let set = exact_set(Q::new(1, 20), 1, 7);
    let p = transition_matrix(&set, true).unwrap();
    let pi = stationary_distribution(&p).unwrap();
    assert!(stationary_residual(&p, &pi) <= 1e-12);
    let total: f64 = set.values().iter().map(|v| v.sin()).sum();
    for (w, v) in pi.iter().zip(set.values()) {
        assert!((w - v.sin() / total).abs() <= 1e-12);
    }
}

/// gcd of the return times to state 0, from the boolean powers of the
/// adjacency pattern up to n².
fn oracle_period(adj: &[Vec<bool>]) -> u64 {
    let n = adj.len();
    let mut reach = adj.to_vec();
    let mut g = 0u64;
    for len in 1..=(n * n) as u64 {
        if reach[0][0] {
            g = g.gcd(&len);
        }
        let mut next = vec![vec![false; n]; n];
        for i in 0..n {
            for k in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        next[i][j] |= adj[k][j];
                    }
                }
            }
        }
        reach = next;
    }
    g
}

#[test]
fn aperiodicity_agrees_with_cycle_enumeration() {
    for (t, m, n) in [(Q::new(1, 20), 1, 7), (Q::new(1, 3), 1, 9), (Q::new(2, 11), 2, 13)] {
        let set = exact_set(t, m, n);
        let p = transition_matrix(&set, true).unwrap();
        let adj: Vec<Vec<bool>> = (0..p.dim())
            .map(|i| (0..p.dim()).map(|j| p.get(i, j) > 0.0).collect())
            .collect();
        let period = oracle_period(&adj);
        assert_eq!(is_aperiodic(&p).unwrap(), period == 1, "θ₀={t} α={m}π/{n}");
    }
}

#[test]
fn closure_matches_exact_oracle() {
    let cases = [
        (Q::new(1, 20), 1, 7),
        (Q::new(1, 2), 1, 7),
        (Q::new(3, 14), 1, 7),
        (Q::new(1, 3), 1, 9),
        (Q::new(2, 5), 2, 13),
        (Q::new(7, 10), 3, 20),
        (Q::new(1, 100), 1, 11),
    ];
    for (t, m, n) in cases {
        let set = exact_set(t, m, n);
        assert_eq!(ratios(&set), oracle_closure(t, Q::new(m, n)), "θ₀={t}π α={m}π/{n}");
    }
}

#[test]
fn right_angle_orbit_collapses_reflected_states() {
    let set = exact_set(Q::new(1, 2), 1, 7);
    assert!(set.contains_right_angle());
    // −π/2 + π and π/2 are one state
    let count = set.pi_ratios().unwrap().iter().filter(|&&r| r == Q::new(1, 2)).count();
    assert_eq!(count, 1);
    assert!(!exact_set(Q::new(1, 20), 1, 7).contains_right_angle());
}

#[test]
fn cardinality_bounded_by_denominator() {
    for (m, n) in [(1, 7), (1, 9), (2, 13), (3, 20), (1, 25)] {
        let alpha = BaseAngle::rational(m, n).unwrap();
        for i in 1..40 {
            let theta = i as f64 * PI / 40.0 + 0.0123;
            let set = reachable_angles(AngleSpec::Radians(theta), &alpha, None).unwrap();
            assert!(set.len() <= n as usize, "α={m}π/{n} θ={theta}: {}", set.len());
            assert!(!set.truncated());
        }
    }
    let generic = reachable_angles(AngleSpec::Radians(0.3), &BaseAngle::rational(1, 7).unwrap(), None).unwrap();
    assert_eq!(generic.len(), 7);
}

#[test]
fn classes_coincide_from_every_member() {
    for (t, m, n) in [(Q::new(1, 20), 1, 7), (Q::new(2, 5), 2, 13)] {
        let base = exact_set(t, m, n);
        for r in base.pi_ratios().unwrap() {
            if r == Q::from_integer(0) || r == Q::from_integer(1) {
                continue;
            }
            assert_eq!(ratios(&exact_set(r, m, n)), ratios(&base));
        }
    }
}

#[test]
fn real_alpha_is_truncated_with_distinct_values() {
    let alpha = BaseAngle::real(0.5).unwrap();
    let set = reachable_angles(AngleSpec::Radians(0.3), &alpha, None).unwrap();
    assert!(set.truncated());
    assert_eq!(set.depth(), 12);
    assert!(set.coincident_pairs(1e-12).is_empty());
    let p = transition_matrix(&set, false).unwrap();
    assert!(p.is_substochastic());
    assert!(transition_matrix(&set, true).is_err());
    for i in 0..p.dim() {
        let row: f64 = (0..p.dim()).map(|j| p.get(i, j)).sum();
        assert!(row <= 1.0 + 1e-12);
    }
}

#[test]
fn rows_stochastic_for_float_base_angles() {
    let alpha = BaseAngle::rational(2, 13).unwrap();
    let set = reachable_angles(AngleSpec::Radians(1.234), &alpha, None).unwrap();
    let p = transition_matrix(&set, true).unwrap();
    for i in 0..p.dim() {
        let row: f64 = (0..p.dim()).map(|j| p.get(i, j)).sum();
        assert!((row - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn sampler_transitions_match_matrix_rows() {
    let set = exact_set(Q::new(1, 20), 1, 7);
    let alpha = *set.alpha();
    let p = transition_matrix(&set, true).unwrap();
    let draws = 100_000;
    for (i, &v) in set.values().iter().enumerate() {
        let mut counts = vec![0u64; set.len()];
        let mut rng = stream_rng(21, i as u64);
        for _ in 0..draws {
            let (_, t) = sample_step(v, &alpha, &mut rng).unwrap();
            let j = set
                .values()
                .iter()
                .position(|w| (w - t).abs() < 1e-9)
                .expect("image is a state");
            counts[j] += 1;
        }
        for (j, &c) in counts.iter().enumerate() {
            let q = p.get(i, j);
            let sd = (draws as f64 * q * (1.0 - q)).sqrt();
            assert!((c as f64 - q * draws as f64).abs() <= 3.0 * sd.max(1e-9), "row {i} col {j}");
        }
    }
}

/// Shortest admissible word into (0, α) by breadth-first search on floats.
fn oracle_word_exists(theta0: f64, alpha: &BaseAngle, max_len: usize) -> bool {
    let mut frontier = vec![theta0];
    for _ in 0..=max_len {
        if frontier.iter().any(|&t| t > 0.0 && t < alpha.value()) {
            return true;
        }
        let mut next = Vec::new();
        for &t in &frontier {
            for b in branch_probabilities(t, alpha).support() {
                next.push(apply_branch(b, t, alpha).unwrap());
            }
        }
        next.sort_by(f64::total_cmp);
        next.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
        frontier = next;
    }
    false
}

#[test]
fn constructed_words_reach_bottom_interval() {
    let alpha = BaseAngle::rational(1, 7).unwrap();
    let a = alpha.value();
    let bound = 2 * (PI / a).ceil() as usize;
    let theta0 = PI - a / 2.0;
    let word = reaches_interval(theta0, &alpha).unwrap();
    assert_eq!(word, vec![BranchId::T3; 3]);
    assert!(oracle_word_exists(theta0, &alpha, bound));

    for i in 1..200 {
        let theta0 = i as f64 * PI / 200.0 + 1e-4;
        let word = reaches_interval(theta0, &alpha).unwrap();
        assert!(word.len() <= bound);
        let mut t = theta0;
        for &b in &word {
            assert!(branch_probabilities(t, &alpha).get(b) > 0.0);
            t = apply_branch(b, t, &alpha).unwrap();
        }
        assert!(t > 0.0 && t < a, "θ₀={theta0} ends at {t}");
        assert!(oracle_word_exists(theta0, &alpha, bound));
    }
}
