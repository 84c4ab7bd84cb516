//! Reachable angles C(θ₀) and the finite Markov chain they carry.
//!
//! Every angle reachable from θ₀ has the form `σθ₀ + jπ + kα` with σ = ±1 and
//! even j, k. States are kept in that symbolic form so the closure is built
//! with exact identity tests:
//!
//! * α = mπ/n and θ₀ = qπ with q rational: states are identified by the exact
//!   rational `value/π`;
//! * α = mπ/n and θ₀ a float: by `(σ, jn + km)`, since `2nα = 2mπ`;
//! * α real: by the raw triple `(σ, j, k)`, and the search is depth-limited.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_integer::Integer;
use num_rational::Ratio;
use serde::Serialize;

use crate::angle::{AngleSpec, BaseAngle};
use crate::error::{Error, Result};
use crate::feres::{branch_probabilities, BranchId};

/// Depth limit used for real α when the caller gives none.
pub const DEFAULT_MAX_DEPTH: usize = 12;

/// The angle `sign·θ₀ + j·π + k·α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SymbolicAngle {
    pub sign: i8,
    pub j: i64,
    pub k: i64,
}

impl SymbolicAngle {
    /// θ₀ itself.
    pub const BASE: SymbolicAngle = SymbolicAngle { sign: 1, j: 0, k: 0 };

    pub fn new(sign: i8, j: i64, k: i64) -> Self {
        debug_assert!(sign == 1 || sign == -1);
        SymbolicAngle { sign, j, k }
    }

    /// Symbolic image under a branch.
    pub fn apply(self, branch: BranchId) -> Self {
        let SymbolicAngle { sign, j, k } = self;
        match branch.number() {
            1 => SymbolicAngle::new(sign, j, k + 2),
            2 => SymbolicAngle::new(-sign, 2 - j, -k - 4),
            3 => SymbolicAngle::new(sign, j, k - 2),
            _ => SymbolicAngle::new(-sign, -j, -k + 4),
        }
    }

    /// Radians, without any range check.
    pub fn radians(&self, theta0: f64, alpha: &BaseAngle) -> f64 {
        f64::from(self.sign) * theta0 + self.j as f64 * PI + self.k as f64 * alpha.value()
    }

    /// `value/π` as an exact fraction when θ₀ and α both are exact.
    pub fn pi_ratio(&self, theta0: Ratio<i64>, alpha: Ratio<i64>) -> Ratio<i64> {
        theta0 * i64::from(self.sign) + Ratio::from_integer(self.j) + alpha * self.k
    }
}

/// `sign·θ₀ + jπ + kα` in radians; outside [0, π] is an error.
pub fn symbolic_value(a: SymbolicAngle, theta0: f64, alpha: &BaseAngle) -> Result<f64> {
    let v = a.radians(theta0, alpha);
    if !(-1e-12..=PI + 1e-12).contains(&v) {
        return Err(Error::OutOfRange {
            value: v,
            context: "symbolic angle",
        });
    }
    Ok(v.clamp(0.0, PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum StateKey {
    Exact(Ratio<i64>),
    Lattice(i8, i64),
    Raw(SymbolicAngle),
}

/// How states are identified; fixed by the forms of θ₀ and α.
#[derive(Debug, Clone, Copy)]
enum Identity {
    Exact { theta0: Ratio<i64>, alpha: Ratio<i64> },
    Lattice { m: i64, n: i64 },
    Raw,
}

impl Identity {
    fn key(&self, a: SymbolicAngle) -> StateKey {
        match *self {
            Identity::Exact { theta0, alpha } => StateKey::Exact(a.pi_ratio(theta0, alpha)),
            Identity::Lattice { m, n } => StateKey::Lattice(a.sign, a.j * n + a.k * m),
            Identity::Raw => StateKey::Raw(a),
        }
    }

    /// Representative with k reduced into [0, 2n); j absorbs the change and
    /// stays even.
    fn canonical(&self, a: SymbolicAngle) -> SymbolicAngle {
        let n = match *self {
            Identity::Exact { alpha, .. } => *alpha.denom(),
            Identity::Lattice { n, .. } => n,
            Identity::Raw => return a,
        };
        let m = match *self {
            Identity::Exact { alpha, .. } => *alpha.numer(),
            Identity::Lattice { m, .. } => m,
            Identity::Raw => unreachable!(),
        };
        let k = a.k.rem_euclid(2 * n);
        let j = a.j + (a.k - k) / n * m;
        SymbolicAngle::new(a.sign, j, k)
    }
}

/// The reachable set of θ₀ under admissible branch words.
#[derive(Debug, Clone)]
pub struct ReachableSet {
    theta0: AngleSpec,
    alpha: BaseAngle,
    identity: Identity,
    states: Vec<SymbolicAngle>,
    values: Vec<f64>,
    index: HashMap<StateKey, usize>,
    truncated: bool,
    depth: usize,
}

/// Breadth-first closure of θ₀ under admissible branches.
///
/// For α = mπ/n the closure always terminates with at most n states. For real
/// α, `max_depth` (default [`DEFAULT_MAX_DEPTH`]) bounds the word length and
/// `truncated` records whether anything was cut off. A `max_depth` given with
/// rational α is honoured too.
pub fn reachable_angles(
    theta0: AngleSpec,
    alpha: &BaseAngle,
    max_depth: Option<usize>,
) -> Result<ReachableSet> {
    let t0 = theta0.radians();
    if !(t0 > 0.0 && t0 < PI) {
        return Err(Error::SingularAngle(t0));
    }
    let identity = match (alpha.as_rational(), theta0.pi_ratio()) {
        (Some((m, n)), Some(q)) => Identity::Exact {
            theta0: q,
            alpha: Ratio::new(m, n),
        },
        (Some((m, n)), None) => Identity::Lattice { m, n },
        (None, _) => Identity::Raw,
    };
    let limit = match (alpha.is_rational(), max_depth) {
        (_, Some(d)) => d,
        (true, None) => usize::MAX,
        (false, None) => DEFAULT_MAX_DEPTH,
    };

    let mut set = ReachableSet {
        theta0,
        alpha: *alpha,
        identity,
        states: Vec::new(),
        values: Vec::new(),
        index: HashMap::new(),
        truncated: false,
        depth: 0,
    };
    set.insert(SymbolicAngle::BASE);
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    while let Some((i, d)) = queue.pop_front() {
        set.depth = set.depth.max(d);
        let here = set.states[i];
        let probs = branch_probabilities(set.values[i], alpha);
        for b in probs.support() {
            let next = here.apply(b);
            if set.index.contains_key(&identity.key(next)) {
                continue;
            }
            if d >= limit {
                set.truncated = true;
                continue;
            }
            let j = set.insert(next);
            queue.push_back((j, d + 1));
        }
    }
    Ok(set)
}

impl ReachableSet {
    fn insert(&mut self, a: SymbolicAngle) -> usize {
        let a = self.identity.canonical(a);
        let value = self.evaluate(a);
        let id = self.states.len();
        self.index.insert(self.identity.key(a), id);
        self.states.push(a);
        self.values.push(value);
        id
    }

    /// Radians of a state. Exact states that land on a piece boundary (or on
    /// 0, π) are snapped to the floating boundary so probabilities vanish
    /// exactly where they should.
    fn evaluate(&self, a: SymbolicAngle) -> f64 {
        match self.identity {
            Identity::Exact { theta0, alpha } => {
                let r = a.pi_ratio(theta0, alpha);
                let mut boundaries = vec![(Ratio::from_integer(0), 0.0), (Ratio::from_integer(1), PI)];
                let one = Ratio::from_integer(1);
                let bp = self.alpha.breakpoints();
                for (i, mult) in [1, 2, 3].into_iter().enumerate() {
                    boundaries.push((alpha * mult, bp[i]));
                    boundaries.push((one - alpha * mult, bp[5 - i]));
                }
                if let Some(&(_, v)) = boundaries.iter().find(|(q, _)| *q == r) {
                    return v;
                }
                *r.numer() as f64 * PI / *r.denom() as f64
            }
            Identity::Lattice { n, m } => {
                let c = a.j * n + a.k * m;
                f64::from(a.sign) * self.theta0.radians() + c as f64 * PI / n as f64
            }
            Identity::Raw => a.radians(self.theta0.radians(), &self.alpha),
        }
        .clamp(0.0, PI)
    }

    pub fn theta0(&self) -> AngleSpec {
        self.theta0
    }

    pub fn alpha(&self) -> &BaseAngle {
        &self.alpha
    }

    /// States in discovery order; the first is θ₀.
    pub fn states(&self) -> &[SymbolicAngle] {
        &self.states
    }

    /// Radian values aligned with [`states`](Self::states).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Longest word length needed to reach a state.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Position of a state, matched up to the exact identity in use.
    pub fn position(&self, a: SymbolicAngle) -> Option<usize> {
        self.index.get(&self.identity.key(a)).copied()
    }

    /// `value/π` of every state, when θ₀ and α are both exact.
    pub fn pi_ratios(&self) -> Option<Vec<Ratio<i64>>> {
        match self.identity {
            Identity::Exact { theta0, alpha } => {
                Some(self.states.iter().map(|a| a.pi_ratio(theta0, alpha)).collect())
            }
            _ => None,
        }
    }

    /// Whether π/2 is a state. Decided exactly when θ₀ and α are exact;
    /// otherwise a state within 1e−12 of π/2 counts.
    pub fn contains_right_angle(&self) -> bool {
        match self.pi_ratios() {
            Some(rs) => rs.contains(&Ratio::new(1, 2)),
            None => self.values.iter().any(|v| (v - PI / 2.0).abs() <= 1e-12),
        }
    }

    /// Pairs of distinct symbolic states whose values agree within `tol`.
    /// Only meaningful for real α, where distinct triples should have distinct
    /// values.
    pub fn coincident_pairs(&self, tol: f64) -> Vec<(usize, usize)> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        order
            .windows(2)
            .filter(|w| (self.values[w[1]] - self.values[w[0]]).abs() <= tol)
            .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
            .collect()
    }
}

/// One state in the serialised form `{sign, j, k, value}`.
#[derive(Debug, Clone, Serialize)]
pub struct StateRecord {
    pub sign: i8,
    pub j: i64,
    pub k: i64,
    pub value: f64,
}

impl ReachableSet {
    pub fn records(&self) -> Vec<StateRecord> {
        self.states
            .iter()
            .zip(&self.values)
            .map(|(a, &value)| StateRecord {
                sign: a.sign,
                j: a.j,
                k: a.k,
                value,
            })
            .collect()
    }
}

/// Row-stochastic transition matrix over a reachable set.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    p: DMatrix<f64>,
    substochastic: bool,
}

/// `P[a][b] = Σ_{i : T_i(a) = b} p_i(a)`.
///
/// Rows of a truncated set lose the mass that leaves the set; `strict` turns
/// that into an error instead of a flagged sub-stochastic matrix.
pub fn transition_matrix(set: &ReachableSet, strict: bool) -> Result<TransitionMatrix> {
    if set.truncated && strict {
        return Err(Error::Truncated { depth: set.depth });
    }
    let n = set.len();
    let mut p = DMatrix::zeros(n, n);
    let mut substochastic = false;
    for (i, (&a, &v)) in set.states.iter().zip(&set.values).enumerate() {
        let probs = branch_probabilities(v, &set.alpha);
        for b in probs.support() {
            match set.position(a.apply(b)) {
                Some(j) => p[(i, j)] += probs.get(b),
                None => substochastic = true,
            }
        }
    }
    Ok(TransitionMatrix { p, substochastic })
}

impl TransitionMatrix {
    /// Wraps a square row-stochastic matrix given as rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Precondition("transition matrix must be square".into()));
        }
        let p = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let substochastic = rows.iter().any(|r| (r.iter().sum::<f64>() - 1.0).abs() > 1e-12);
        Ok(TransitionMatrix { p, substochastic })
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// True when some row lost mass to truncation.
    pub fn is_substochastic(&self) -> bool {
        self.substochastic
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.p.row(i).iter().copied().collect())
            .collect()
    }

    fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim()).filter(move |&j| self.p[(i, j)] > 0.0)
    }

    fn reach(&self, from: usize, forward: bool) -> Vec<bool> {
        let n = self.dim();
        let mut seen = vec![false; n];
        seen[from] = true;
        let mut stack = vec![from];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let edge = if forward { self.p[(i, j)] } else { self.p[(j, i)] };
                if edge > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }
}

/// Strong connectivity of the nonzero pattern.
pub fn is_irreducible(p: &TransitionMatrix) -> bool {
    if p.dim() == 0 {
        return false;
    }
    p.reach(0, true).into_iter().all(|x| x) && p.reach(0, false).into_iter().all(|x| x)
}

/// Period of an irreducible chain: the gcd of `level(u) + 1 − level(v)` over
/// all edges u → v, with BFS levels from state 0.
pub fn period(p: &TransitionMatrix) -> Result<u64> {
    if !is_irreducible(p) {
        return Err(Error::Precondition("period requires an irreducible chain".into()));
    }
    let n = p.dim();
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = VecDeque::from([0]);
    while let Some(i) = queue.pop_front() {
        for j in p.successors(i) {
            if level[j] == usize::MAX {
                level[j] = level[i] + 1;
                queue.push_back(j);
            }
        }
    }
    let mut g = 0u64;
    for i in 0..n {
        for j in p.successors(i) {
            let diff = (level[i] as i64 + 1 - level[j] as i64).unsigned_abs();
            g = g.gcd(&diff);
        }
    }
    Ok(g)
}

pub fn is_aperiodic(p: &TransitionMatrix) -> Result<bool> {
    period(p).map(|d| d == 1)
}

/// The stationary row vector π with πP = π and Σπ = 1.
///
/// Solves `(Pᵀ − I)π = 0` with the last equation replaced by normalisation,
/// then applies one step of iterative refinement.
pub fn stationary_distribution(p: &TransitionMatrix) -> Result<Vec<f64>> {
    if !is_irreducible(p) {
        return Err(Error::Precondition(
            "stationary distribution requires an irreducible chain".into(),
        ));
    }
    let n = p.dim();
    let mut a = p.p.transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let lu = a.clone().lu();
    let mut x = lu.solve(&rhs).ok_or(Error::Numerical {
        message: "singular stationary system".into(),
        residual: f64::NAN,
    })?;
    if let Some(dx) = lu.solve(&(&rhs - &a * &x)) {
        x += dx;
    }
    let total: f64 = x.iter().sum();
    x /= total;
    let pi: Vec<f64> = x.iter().copied().collect();
    let residual = stationary_residual(p, &pi);
    if residual > 1e-12 || pi.iter().any(|&v| v <= 0.0) {
        return Err(Error::Numerical {
            message: "stationary solve did not reach tolerance".into(),
            residual,
        });
    }
    Ok(pi)
}

/// `‖πP − π‖∞`.
pub fn stationary_residual(p: &TransitionMatrix, pi: &[f64]) -> f64 {
    let n = p.dim();
    (0..n)
        .map(|j| {
            let s: f64 = (0..n).map(|i| pi[i] * p.p[(i, j)]).sum();
            (s - pi[j]).abs()
        })
        .fold(0.0, f64::max)
}

/// A branch word taking θ₀ into (0, α), built by applying T3 while it is
/// admissible and finishing with (4, 3) when the descent stops in (α, 2α).
pub fn reaches_interval(theta0: f64, alpha: &BaseAngle) -> Result<Vec<BranchId>> {
    let a = alpha.value();
    if !(theta0 > 0.0 && theta0 < PI) {
        return Err(Error::SingularAngle(theta0));
    }
    let ratio = theta0 / a;
    if (ratio - ratio.round()).abs() <= 1e-12 * ratio.max(1.0) {
        return Err(Error::ExcludedInput(format!(
            "θ₀ = {theta0} is an integer multiple of α"
        )));
    }
    let mut word = Vec::new();
    let mut theta = theta0;
    loop {
        if theta < a {
            return Ok(word);
        }
        let step = if theta < 2.0 * a {
            BranchId::T4
        } else {
            BranchId::T3
        };
        if branch_probabilities(theta, alpha).get(step) <= 0.0 {
            return Err(Error::Inadmissible {
                index: word.len(),
                branch: step,
                theta,
            });
        }
        theta = crate::feres::apply_branch(step, theta, alpha)?;
        word.push(step);
    }
}
