//! Mixed strategies over choice space, expected utility, regret, and the
//! equilibrium solvers.
//!
//! Everything here is generic over [`Scalar`] so the same code runs on exact
//! rationals (two-player path, fixtures) and on `f64` (numeric paths).

mod pure;
mod replicator;
mod support;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

pub use pure::solve_pure;
pub use replicator::{replicator_dynamics, ReplicatorOptions};
pub use support::{solve_support_enumeration, solve_support_exact, solve_support_numeric, NumericOptions, NumericSolve, SupportSolution};

use crate::error::{Error, Result};
use crate::game::{Game, InducedGame};
use crate::mechanism::{apply_checked, Mechanism};
use crate::num::{Rational, Scalar};
use crate::partitions::CoalitionStructure;

/// Default regret bar for verification.
pub const VERIFY_EPS: f64 = 1e-9;
/// Default regret bar for replicator dynamics.
pub const REPLICATOR_EPS: f64 = 1e-6;
const SUM_TOLERANCE: f64 = 1e-12;

/// One probability vector per player over that player's choice set.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedProfile<T> {
    probs: Vec<Vec<T>>,
}

impl<T: Scalar> MixedProfile<T> {
    pub fn new(probs: Vec<Vec<T>>) -> Self {
        MixedProfile { probs }
    }

    pub fn pure(counts: &[usize], digits: &[usize]) -> Self {
        let probs = counts
            .iter()
            .zip(digits)
            .map(|(&c, &d)| (0..c).map(|a| if a == d { T::one() } else { T::zero() }).collect())
            .collect();
        MixedProfile { probs }
    }

    pub fn uniform(counts: &[usize]) -> Self {
        let probs = counts
            .iter()
            .map(|&c| vec![T::one() / T::from_usize(c); c])
            .collect();
        MixedProfile { probs }
    }

    pub fn player(&self, i: usize) -> &[T] {
        &self.probs[i]
    }

    pub fn players(&self) -> &[Vec<T>] {
        &self.probs
    }

    pub fn n_players(&self) -> usize {
        self.probs.len()
    }

    /// Indices with positive probability for player index `i` (0-based).
    pub fn support(&self, i: usize) -> Vec<usize> {
        self.probs[i].iter().enumerate().filter(|(_, p)| **p > T::zero()).map(|(a, _)| a).collect()
    }

    pub fn supports(&self) -> Vec<Vec<usize>> {
        (0..self.probs.len()).map(|i| self.support(i)).collect()
    }

    pub fn to_f64(&self) -> MixedProfile<f64> {
        MixedProfile { probs: self.probs.iter().map(|v| v.iter().map(Scalar::to_f64).collect()).collect() }
    }

    /// Checks dimensions, signs and normalisation against `g`.
    pub fn validate(&self, g: &InducedGame) -> Result<()> {
        let counts = g.choice_counts();
        if self.probs.len() != counts.len() {
            return Err(Error::DimensionMismatch(format!("{} strategies for {} players", self.probs.len(), counts.len())));
        }
        for (i, (v, &c)) in self.probs.iter().zip(counts).enumerate() {
            if v.len() != c {
                return Err(Error::DimensionMismatch(format!("player {} has {} weights for {c} choices", i + 1, v.len())));
            }
            if v.iter().any(|p| !(*p >= T::zero())) {
                return Err(Error::InvalidMixture { player: i + 1, reason: "negative or NaN weight".into() });
            }
            let total = v.iter().fold(T::zero(), |a, b| a + b.clone());
            let ok = if T::EXACT { total == T::one() } else { (total.to_f64() - 1.0).abs() <= SUM_TOLERANCE };
            if !ok {
                return Err(Error::InvalidMixture { player: i + 1, reason: format!("weights sum to {}", total.render()) });
            }
        }
        Ok(())
    }
}

impl MixedProfile<Rational> {
    pub fn from_f64_exact(p: &MixedProfile<f64>) -> Self {
        MixedProfile { probs: p.probs.iter().map(|v| v.iter().map(|&x| Rational::from_f64(x)).collect()).collect() }
    }
}

/// Visits every profile (by flat index and digits) whose probability under
/// `p`, ignoring player `skip`, is non-zero; passes that probability along.
pub(crate) fn for_each_weighted<T: Scalar>(
    g: &InducedGame,
    p: &MixedProfile<T>,
    skip: Option<usize>,
    mut visit: impl FnMut(usize, &[usize], &T),
) {
    let counts = g.choice_counts();
    let n = counts.len();
    let strides: Vec<usize> = (0..n).map(|i| counts[i + 1..].iter().product()).collect();
    // Depth-first over players, pruning zero-probability branches.
    fn rec<T: Scalar>(
        depth: usize,
        counts: &[usize],
        strides: &[usize],
        p: &MixedProfile<T>,
        skip: Option<usize>,
        index: usize,
        weight: T,
        digits: &mut Vec<usize>,
        visit: &mut dyn FnMut(usize, &[usize], &T),
    ) {
        if depth == counts.len() {
            visit(index, digits, &weight);
            return;
        }
        for a in 0..counts[depth] {
            let w = if Some(depth) == skip {
                weight.clone()
            } else {
                let pa = &p.probs[depth][a];
                if pa.is_zero() {
                    continue;
                }
                weight.clone() * pa.clone()
            };
            digits.push(a);
            rec(depth + 1, counts, strides, p, skip, index + a * strides[depth], w, digits, visit);
            digits.pop();
        }
    }
    let mut digits = Vec::with_capacity(n);
    rec(0, counts, &strides, p, skip, 0, T::one(), &mut digits, &mut visit);
}

/// Expected payoff of each choice of player index `i` against the others' mixtures.
pub fn choice_payoffs<T: Scalar>(g: &InducedGame, i: usize, p: &MixedProfile<T>) -> Vec<T> {
    let n = g.n_players();
    let u = T::utilities(g);
    let mut out = vec![T::zero(); g.choice_counts()[i]];
    for_each_weighted(g, p, Some(i), |idx, digits, w| {
        let slot = &mut out[digits[i]];
        *slot = slot.clone() + w.clone() * u[idx * n + i].clone();
    });
    out
}

/// `EU_i` for every player: the finite sum over choice profiles.
pub fn expected_utility<T: Scalar>(g: &InducedGame, p: &MixedProfile<T>) -> Result<Vec<T>> {
    p.validate(g)?;
    Ok(expected_utility_unchecked(g, p))
}

pub(crate) fn expected_utility_unchecked<T: Scalar>(g: &InducedGame, p: &MixedProfile<T>) -> Vec<T> {
    let n = g.n_players();
    let u = T::utilities(g);
    let mut out = vec![T::zero(); n];
    for_each_weighted(g, p, None, |idx, _, w| {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = slot.clone() + w.clone() * u[idx * n + i].clone();
        }
    });
    out
}

/// Best pure reply of `player` (1-based) to the others' part of `p`.
///
/// Returns the value and the lowest-index choice attaining it. Player
/// `player`'s own entry in `p` is ignored.
pub fn best_response<T: Scalar>(g: &InducedGame, player: usize, p: &MixedProfile<T>) -> Result<(T, usize)> {
    if player == 0 || player > g.n_players() {
        return Err(Error::UnknownPlayer(player));
    }
    let i = player - 1;
    for (j, (v, &c)) in p.probs.iter().zip(g.choice_counts()).enumerate() {
        if j != i && v.len() != c {
            return Err(Error::DimensionMismatch(format!("player {} has {} weights for {c} choices", j + 1, v.len())));
        }
    }
    let values = choice_payoffs(g, i, p);
    let mut best = 0;
    for (a, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = a;
        }
    }
    Ok((values[best].clone(), best))
}

pub fn best_response_value<T: Scalar>(g: &InducedGame, player: usize, p: &MixedProfile<T>) -> Result<T> {
    best_response(g, player, p).map(|(v, _)| v)
}

/// Per-player regret `max_a EU_i(a, p_-i) - EU_i(p)`; the profile is an
/// equilibrium at tolerance `eps` iff every regret is at most `eps`.
pub fn verify_equilibrium<T: Scalar>(g: &InducedGame, p: &MixedProfile<T>, eps: f64) -> Result<(bool, Vec<T>)> {
    p.validate(g)?;
    let regrets = regrets_unchecked(g, p);
    let bar = T::from_f64(eps);
    let ok = regrets.iter().all(|r| *r <= bar);
    Ok((ok, regrets))
}

pub(crate) fn regrets_unchecked<T: Scalar>(g: &InducedGame, p: &MixedProfile<T>) -> Vec<T> {
    (0..g.n_players())
        .map(|i| {
            let values = choice_payoffs(g, i, p);
            let eu = values.iter().zip(&p.probs[i]).fold(T::zero(), |acc, (v, w)| acc + v.clone() * w.clone());
            let best = values.into_iter().reduce(T::max_of).expect("non-empty choice set");
            let r = best - eu;
            if r < T::zero() {
                T::zero()
            } else {
                r
            }
        })
        .collect()
}

/// Pushforward of the product distribution `p` through the mechanism cached in `g`.
pub fn pushforward<T: Scalar>(g: &InducedGame, p: &MixedProfile<T>) -> BTreeMap<CoalitionStructure, T> {
    let mut out: BTreeMap<CoalitionStructure, T> = BTreeMap::new();
    for_each_weighted(g, p, None, |idx, _, w| {
        let slot = out.entry(g.outcome(idx).structure.clone()).or_insert_with(T::zero);
        *slot = slot.clone() + w.clone();
    });
    out
}

/// Distribution over final coalition structures when players mix by `p` and
/// `m` resolves each realised profile.
pub fn structure_distribution<T: Scalar>(
    game: &Game,
    m: &dyn Mechanism,
    p: &MixedProfile<T>,
) -> Result<BTreeMap<CoalitionStructure, T>> {
    let counts = game.space().counts();
    if p.probs.len() != counts.len() || p.probs.iter().zip(counts).any(|(v, &c)| v.len() != c) {
        return Err(Error::DimensionMismatch("profile does not match the game's choice sets".into()));
    }
    let mut out: BTreeMap<CoalitionStructure, T> = BTreeMap::new();
    for digits in game.space().iter() {
        let weight = digits
            .iter()
            .enumerate()
            .fold(T::one(), |acc, (i, &d)| acc * p.probs[i][d].clone());
        if weight.is_zero() {
            continue;
        }
        let outcome = apply_checked(m, game, &game.profile_choices(&digits))?;
        let slot = out.entry(outcome.structure).or_insert_with(T::zero);
        *slot = slot.clone() + weight;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pure,
    SupportExact,
    SupportNumeric,
    Replicator,
    Degenerate,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Pure => "pure",
            Method::SupportExact => "support-exact",
            Method::SupportNumeric => "support-numeric",
            Method::Replicator => "replicator",
            Method::Degenerate => "degenerate",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Flag {
    /// Every profile is an equilibrium (constant payoffs).
    Degenerate,
    /// Representative (barycenter) of a convex set of equilibria spanned by
    /// this many extreme equilibria with interchangeable strategies.
    Component { extreme_points: usize },
    Converged { steps: usize },
    /// Replicator orbit did not settle; the indifference system on the
    /// support of its time average was solved instead.
    Polished { steps: usize },
    Unconverged { steps: usize },
}

/// A verified candidate equilibrium with everything a report needs.
#[derive(Clone, Debug)]
pub struct EquilibriumResult<T> {
    pub profile: MixedProfile<T>,
    pub payoffs: Vec<T>,
    pub regret: Vec<T>,
    pub structure_distribution: BTreeMap<CoalitionStructure, T>,
    pub method: Method,
    pub flags: Vec<Flag>,
}

impl<T: Scalar> EquilibriumResult<T> {
    /// Evaluates payoffs, regrets and the structure distribution of `profile`.
    pub fn evaluate(g: &InducedGame, profile: MixedProfile<T>, method: Method) -> Result<Self> {
        profile.validate(g)?;
        Ok(Self::evaluate_unchecked(g, profile, method))
    }

    pub(crate) fn evaluate_unchecked(g: &InducedGame, profile: MixedProfile<T>, method: Method) -> Self {
        let payoffs = expected_utility_unchecked(g, &profile);
        let regret = regrets_unchecked(g, &profile);
        let structure_distribution = pushforward(g, &profile);
        EquilibriumResult { profile, payoffs, regret, structure_distribution, method, flags: Vec::new() }
    }

    pub fn max_regret(&self) -> T {
        self.regret.iter().cloned().reduce(T::max_of).unwrap_or_else(T::zero)
    }

    pub fn is_verified(&self, eps: f64) -> bool {
        self.max_regret() <= T::from_f64(eps)
    }

    pub fn supports(&self) -> Vec<Vec<usize>> {
        self.profile.supports()
    }

    pub fn total_payoff(&self) -> T {
        self.payoffs.iter().fold(T::zero(), |a, b| a + b.clone())
    }
}

/// The uniform profile of a constant-payoff game, flagged degenerate.
pub fn degenerate_result<T: Scalar>(g: &InducedGame) -> EquilibriumResult<T> {
    let mut r = EquilibriumResult::evaluate_unchecked(g, MixedProfile::uniform(g.choice_counts()), Method::Degenerate);
    r.flags.push(Flag::Degenerate);
    r
}

/// Groups extreme equilibria into convex components and returns one
/// barycentric representative per component.
///
/// Two equilibria join the same component when every mix-and-match profile
/// (each player taking either one's strategy) is still an equilibrium; the
/// barycenter of the group is re-verified before it is accepted.
pub fn components<T: Scalar>(g: &InducedGame, extreme: &[EquilibriumResult<T>], eps: f64) -> Vec<EquilibriumResult<T>> {
    let bar = T::from_f64(eps);
    let is_eq = |p: &MixedProfile<T>| regrets_unchecked(g, p).iter().all(|r| *r <= bar);
    let n = g.n_players();
    let interchangeable = |a: &MixedProfile<T>, b: &MixedProfile<T>| {
        (0u32..(1 << n)).all(|mask| {
            let mixed = MixedProfile {
                probs: (0..n).map(|i| if mask & (1 << i) != 0 { b.probs[i].clone() } else { a.probs[i].clone() }).collect(),
            };
            is_eq(&mixed)
        })
    };
    let barycenter = |members: &[usize]| {
        let count = T::from_usize(members.len());
        let probs = (0..n)
            .map(|i| {
                (0..g.choice_counts()[i])
                    .map(|a| {
                        members.iter().fold(T::zero(), |acc, &m| acc + extreme[m].profile.probs[i][a].clone()) / count.clone()
                    })
                    .collect()
            })
            .collect();
        MixedProfile { probs }
    };

    let mut groups: Vec<Vec<usize>> = Vec::new();
    'next: for (idx, e) in extreme.iter().enumerate() {
        for group in groups.iter_mut() {
            if group.iter().all(|&m| interchangeable(&extreme[m].profile, &e.profile)) {
                let mut candidate = group.clone();
                candidate.push(idx);
                if is_eq(&barycenter(&candidate)) {
                    *group = candidate;
                    continue 'next;
                }
            }
        }
        groups.push(vec![idx]);
    }

    groups
        .into_iter()
        .map(|group| {
            if group.len() == 1 {
                return extreme[group[0]].clone();
            }
            let method = extreme[group[0]].method;
            let mut r = EquilibriumResult::evaluate_unchecked(g, barycenter(&group), method);
            r.flags.push(Flag::Component { extreme_points: group.len() });
            r
        })
        .collect()
}

/// Index of the payoff-dominant result (largest total expected payoff, first on ties).
pub fn select_payoff_dominant<T: Scalar>(results: &[EquilibriumResult<T>]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, r) in results.iter().enumerate() {
        let total = r.total_payoff();
        if best.as_ref().map_or(true, |(_, b)| total > *b) {
            best = Some((i, total));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub max_support: usize,
    pub eps: f64,
    pub numeric: NumericOptions,
    pub replicator: ReplicatorOptions,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            max_support: usize::MAX,
            eps: VERIFY_EPS,
            numeric: NumericOptions::default(),
            replicator: ReplicatorOptions::default(),
        }
    }
}

/// Exact solver suite for games with at most two players: all extreme
/// equilibria grouped into components.
pub fn solve_exact_suite(g: &InducedGame, max_support: usize) -> Result<Vec<EquilibriumResult<Rational>>> {
    if g.is_constant() {
        return Ok(vec![degenerate_result(g)]);
    }
    let extreme = solve_support_exact(g, max_support)?;
    Ok(components(g, &extreme, 0.0))
}

/// Numeric solver suite for any number of players: pure equilibria, then
/// numeric support enumeration, then replicator dynamics from the uniform
/// profile if nothing was found. Results are grouped into components.
pub fn solve_numeric_suite(g: &InducedGame, options: &SuiteOptions) -> Result<NumericSolve> {
    if g.is_constant() {
        return Ok(NumericSolve { equilibria: vec![degenerate_result(g)], nonconvergent: Vec::new() });
    }
    let mut solve = solve_support_numeric(g, &options.numeric)?;
    if solve.equilibria.is_empty() {
        let start = MixedProfile::uniform(g.choice_counts());
        let candidate = replicator_dynamics(g, &start, &options.replicator)?;
        if candidate.is_verified(options.replicator.eps) {
            solve.equilibria.push(candidate);
        }
    }
    solve.equilibria = components(g, &solve.equilibria, options.eps.max(options.numeric.eps));
    Ok(solve)
}
