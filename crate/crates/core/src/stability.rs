//! Stability criteria over a nested family {Γ(K) : K = 1..N}.
//!
//! Every criterion compares a player's equilibrium payoff in Γ(K) with the
//! best payoff they could get by deviating inside another game Γ(K1) while
//! the others play an equilibrium of Γ(K1). When Γ(K1) has several stored
//! equilibria, [`Mode`] decides whether the inequality must hold against all
//! of them or against at least one.

use std::fmt;

use serde::Serialize;

use crate::equilibrium::{best_response, select_payoff_dominant, solve_exact_suite, solve_numeric_suite, EquilibriumResult, SuiteOptions};
use crate::error::{Error, Result};
use crate::game::{build_game_with, induced_normal_form, BuildOptions, Choice, Game, GameSpec, InducedGame};
use crate::num::{Rational, Scalar};
use crate::partitions::CoalitionStructure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    ForAll,
    Exists,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::ForAll => "forall",
            Mode::Exists => "exists",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Local,
    Global,
    Strong,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Local => "local",
            Criterion::Global => "global",
            Criterion::Strong => "strong",
        })
    }
}

/// Γ(K) with its stored equilibria; `selected` is the one whose payoffs are
/// defended.
pub struct FamilyMember<T> {
    pub k: usize,
    pub game: Game,
    pub induced: InducedGame,
    pub equilibria: Vec<EquilibriumResult<T>>,
    pub selected: usize,
}

/// One entry of the cross-K table.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison<T> {
    pub player: usize,
    pub k: usize,
    pub k1: usize,
    /// Index of the equilibrium of Γ(K1) the others play.
    pub equilibrium: usize,
    pub equilibrium_payoff: T,
    pub deviation_payoff: T,
    pub deviation: Choice,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Witness<T> {
    Deviation(Comparison<T>),
    /// Equilibrium mass on a structure other than the grand coalition.
    StructureMass { structure: CoalitionStructure, mass: T },
}

impl<T: Scalar> fmt::Display for Witness<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Deviation(c) => write!(
                f,
                "player {} gets {} at K={} but {} by playing {} in K={} (equilibrium #{})",
                c.player,
                c.equilibrium_payoff.render(),
                c.k,
                c.deviation_payoff.render(),
                c.deviation,
                c.k1,
                c.equilibrium
            ),
            Witness::StructureMass { structure, mass } => {
                write!(f, "structure distribution mass {} on {}", mass.render(), structure)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Verdict<T> {
    pub criterion: Criterion,
    pub k: usize,
    pub mode: Mode,
    pub stable: bool,
    pub comparisons: Vec<Comparison<T>>,
    pub witnesses: Vec<Witness<T>>,
}

pub struct FamilyAnalysis<T> {
    members: Vec<FamilyMember<T>>,
    eps: f64,
}

impl<T: Scalar> FamilyAnalysis<T> {
    /// Checks the family covers K = 1..N, every game has the same players and
    /// every stored equilibrium has regret at most `eps`.
    pub fn new(mut members: Vec<FamilyMember<T>>, eps: f64) -> Result<Self> {
        members.sort_by_key(|m| m.k);
        let Some(first) = members.first() else {
            return Err(Error::InvalidFamily("empty family".into()));
        };
        let n = first.game.n_players();
        if members.len() != n {
            return Err(Error::InvalidFamily(format!("{} games for {n} players; need K = 1..{n}", members.len())));
        }
        for (idx, m) in members.iter().enumerate() {
            if m.k != idx + 1 || m.game.max_coalition_size() != m.k {
                return Err(Error::InvalidFamily(format!("K values are not contiguous from 1 (found K={})", m.k)));
            }
            if m.game.n_players() != n {
                return Err(Error::InvalidFamily(format!("Γ({}) has {} players, expected {n}", m.k, m.game.n_players())));
            }
            if !m.equilibria.is_empty() && m.selected >= m.equilibria.len() {
                return Err(Error::InvalidFamily(format!("selected equilibrium {} out of range at K={}", m.selected, m.k)));
            }
            if let Some(bad) = m.equilibria.iter().position(|e| !e.is_verified(eps)) {
                return Err(Error::InvalidFamily(format!("equilibrium #{bad} of Γ({}) fails verification", m.k)));
            }
        }
        Ok(FamilyAnalysis { members, eps })
    }

    pub fn n_players(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[FamilyMember<T>] {
        &self.members
    }

    pub fn member(&self, k: usize) -> Result<&FamilyMember<T>> {
        k.checked_sub(1)
            .and_then(|i| self.members.get(i))
            .ok_or(Error::InvalidBounds { n: self.members.len(), k })
    }

    fn selected(&self, k: usize) -> Result<&EquilibriumResult<T>> {
        let m = self.member(k)?;
        m.equilibria.get(m.selected).ok_or(Error::MissingEquilibrium(k))
    }

    /// Compares the selected equilibrium of Γ(K) with player `player`'s best
    /// deviation in Γ(K1) against equilibrium `j` of Γ(K1).
    pub fn compare(&self, player: usize, k: usize, k1: usize, j: usize) -> Result<Comparison<T>> {
        let lhs = self.selected(k)?.payoffs.get(player - 1).cloned().ok_or(Error::UnknownPlayer(player))?;
        let target = self.member(k1)?;
        let eq = target.equilibria.get(j).ok_or(Error::MissingEquilibrium(k1))?;
        let (rhs, choice) = best_response(&target.induced, player, &eq.profile)?;
        let holds = if T::EXACT { lhs >= rhs } else { lhs.to_f64() >= rhs.to_f64() - self.eps };
        Ok(Comparison {
            player,
            k,
            k1,
            equilibrium: j,
            equilibrium_payoff: lhs,
            deviation_payoff: rhs,
            deviation: target.induced.choice_sets()[player - 1][choice].clone(),
            holds,
        })
    }

    fn aggregate(&self, criterion: Criterion, k: usize, others: &[usize], mode: Mode) -> Result<Verdict<T>> {
        self.selected(k)?;
        let n = self.n_players();
        let mut comparisons = Vec::new();
        let mut witnesses = Vec::new();
        let mut stable = true;
        for &k1 in others {
            let count = self.member(k1)?.equilibria.len();
            if count == 0 {
                return Err(Error::MissingEquilibrium(k1));
            }
            let mut per_eq: Vec<Vec<Comparison<T>>> = Vec::with_capacity(count);
            for j in 0..count {
                per_eq.push((1..=n).map(|i| self.compare(i, k, k1, j)).collect::<Result<_>>()?);
            }
            let holds_for = |cs: &Vec<Comparison<T>>| cs.iter().all(|c| c.holds);
            let ok = match mode {
                Mode::ForAll => per_eq.iter().all(holds_for),
                Mode::Exists => per_eq.iter().any(holds_for),
            };
            let failing = per_eq.iter().flatten().filter(|c| !c.holds).cloned();
            match mode {
                Mode::ForAll => witnesses.extend(failing.map(Witness::Deviation)),
                Mode::Exists if !ok => witnesses.extend(failing.map(Witness::Deviation)),
                Mode::Exists => {}
            }
            stable &= ok;
            comparisons.extend(per_eq.into_iter().flatten());
        }
        Ok(Verdict { criterion, k, mode, stable, comparisons, witnesses })
    }

    /// Neighbours K-1 and K+1, clamped to 1..N.
    pub fn local_stability(&self, k: usize, mode: Mode) -> Result<Verdict<T>> {
        let n = self.n_players();
        self.member(k)?;
        let mut others = Vec::new();
        if k > 1 {
            others.push(k - 1);
        }
        if k < n {
            others.push(k + 1);
        }
        self.aggregate(Criterion::Local, k, &others, mode)
    }

    /// Every other K1.
    pub fn global_stability(&self, k: usize, mode: Mode) -> Result<Verdict<T>> {
        self.member(k)?;
        let others: Vec<usize> = (1..=self.n_players()).filter(|&k1| k1 != k).collect();
        let verdict = self.aggregate(Criterion::Global, k, &others, mode)?;
        let local = self.local_stability(k, mode)?;
        assert!(!verdict.stable || local.stable, "global stability at K={k} must imply local stability");
        Ok(verdict)
    }

    /// Global stability at K = N plus a point mass on the grand coalition.
    pub fn strong_nash_criterion(&self, mode: Mode) -> Result<Verdict<T>> {
        let n = self.n_players();
        let mut verdict = self.global_stability(n, mode)?;
        verdict.criterion = Criterion::Strong;
        let grand = CoalitionStructure::grand_coalition(n);
        let bar = T::from_f64(if T::EXACT { 0.0 } else { self.eps });
        for (structure, mass) in &self.selected(n)?.structure_distribution {
            if *structure != grand && *mass > bar {
                verdict.stable = false;
                verdict.witnesses.push(Witness::StructureMass { structure: structure.clone(), mass: mass.clone() });
            }
        }
        Ok(verdict)
    }

    /// Every (player, K, K1, equilibrium of Γ(K1)) comparison with K1 != K.
    pub fn comparison_table(&self) -> Result<Vec<Comparison<T>>> {
        let n = self.n_players();
        let mut out = Vec::new();
        for k in 1..=n {
            if self.member(k)?.equilibria.is_empty() {
                continue;
            }
            for k1 in (1..=n).filter(|&k1| k1 != k) {
                for j in 0..self.member(k1)?.equilibria.len() {
                    for i in 1..=n {
                        out.push(self.compare(i, k, k1, j)?);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Γ(1), ..., Γ(N) obtained by restricting a spec with maximum coalition size N.
pub fn nested_family(spec: &GameSpec) -> Result<Vec<GameSpec>> {
    let n = spec.n_players();
    if spec.max_coalition_size != n {
        return Err(Error::InvalidFamily(format!(
            "a spec with K={} cannot generate the family up to K=N={n}",
            spec.max_coalition_size
        )));
    }
    (1..=n).map(|k| spec.restrict(k)).collect()
}

fn build_members<T: Scalar>(
    specs: Vec<GameSpec>,
    build: BuildOptions,
    mut solve: impl FnMut(&InducedGame) -> Result<Vec<EquilibriumResult<T>>>,
) -> Result<Vec<FamilyMember<T>>> {
    specs
        .into_iter()
        .map(|spec| {
            let k = spec.max_coalition_size;
            let game = build_game_with(spec, build)?;
            let induced = induced_normal_form(&game, game.mechanism())?;
            let equilibria = solve(&induced)?;
            let selected = select_payoff_dominant(&equilibria).unwrap_or(0);
            Ok(FamilyMember { k, game, induced, equilibria, selected })
        })
        .collect()
}

/// Exact analysis for two-player families; stores component representatives
/// and selects the payoff-dominant one in each game.
pub fn analyze_exact(specs: Vec<GameSpec>, build: BuildOptions, max_support: usize) -> Result<FamilyAnalysis<Rational>> {
    let members = build_members(specs, build, |g| solve_exact_suite(g, max_support))?;
    FamilyAnalysis::new(members, 0.0)
}

/// Numeric analysis for any number of players.
pub fn analyze_numeric(specs: Vec<GameSpec>, build: BuildOptions, options: &SuiteOptions) -> Result<FamilyAnalysis<f64>> {
    let members = build_members(specs, build, |g| solve_numeric_suite(g, options).map(|s| s.equilibria))?;
    FamilyAnalysis::new(members, options.eps.max(options.replicator.eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{generate_pd, raised_joint_pd};
    use crate::num::parse_rational;

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn pd_family() -> FamilyAnalysis<Rational> {
        let spec = generate_pd(q("0"), q("-5"), q("3"), q("-2"));
        analyze_exact(nested_family(&spec).unwrap(), BuildOptions::default(), usize::MAX).unwrap()
    }

    #[test]
    fn pd_local_and_global() {
        let fam = pd_family();
        for mode in [Mode::ForAll, Mode::Exists] {
            let local = fam.local_stability(2, mode).unwrap();
            let global = fam.global_stability(2, mode).unwrap();
            assert!(local.stable && global.stable);
            assert_eq!(local.comparisons, global.comparisons);
            for c in &local.comparisons {
                assert_eq!(c.equilibrium_payoff, q("-2"));
                assert_eq!(c.deviation_payoff, q("-2"));
            }
        }
        assert!(fam.local_stability(1, Mode::ForAll).unwrap().stable);
    }

    #[test]
    fn pd_strong_fails_on_mass() {
        let fam = pd_family();
        let v = fam.strong_nash_criterion(Mode::ForAll).unwrap();
        assert!(!v.stable);
        assert_eq!(v.witnesses.len(), 1);
        assert_eq!(v.witnesses[0].to_string(), "structure distribution mass 3/4 on 1|2");
    }

    #[test]
    fn raised_joint_passes_strong() {
        let spec = raised_joint_pd();
        let fam = analyze_exact(nested_family(&spec).unwrap(), BuildOptions::default(), usize::MAX).unwrap();
        let v = fam.strong_nash_criterion(Mode::ForAll).unwrap();
        assert!(v.stable, "{:?}", v.witnesses);
        // K = 1 is beaten by joining at K = 2
        let low = fam.local_stability(1, Mode::ForAll).unwrap();
        assert!(!low.stable);
        for w in &low.witnesses {
            let Witness::Deviation(c) = w else { panic!("expected deviation witness") };
            // replay the deviation
            let target = fam.member(c.k1).unwrap();
            let eq = &target.equilibria[c.equilibrium];
            let idx = target.induced.choice_sets()[c.player - 1].iter().position(|x| *x == c.deviation).unwrap();
            let mut probs = eq.profile.players().to_vec();
            probs[c.player - 1] = (0..probs[c.player - 1].len()).map(|a| if a == idx { q("1") } else { q("0") }).collect();
            let replay = crate::equilibrium::expected_utility(&target.induced, &crate::equilibrium::MixedProfile::new(probs)).unwrap();
            assert_eq!(replay[c.player - 1], c.deviation_payoff);
        }
    }

    #[test]
    fn one_player_family() {
        let spec = GameSpec::normal_form(vec!["solo".into()], vec![vec!["a".into(), "b".into()]], |d| vec![q(if d[0] == 0 { "1" } else { "2" })]);
        let fam = analyze_exact(vec![spec], BuildOptions::default(), usize::MAX).unwrap();
        assert!(fam.local_stability(1, Mode::ForAll).unwrap().stable);
        assert!(fam.global_stability(1, Mode::ForAll).unwrap().stable);
        assert!(fam.strong_nash_criterion(Mode::ForAll).unwrap().stable);
    }

    #[test]
    fn family_must_be_contiguous() {
        let spec = generate_pd(q("0"), q("-5"), q("3"), q("-2"));
        let only_two = vec![spec.clone()];
        assert!(matches!(analyze_exact(only_two, BuildOptions::default(), usize::MAX), Err(Error::InvalidFamily(_))));
        let low = spec.restrict(1).unwrap();
        assert!(matches!(nested_family(&low), Err(Error::InvalidFamily(_))));
    }

    #[test]
    fn comparisons_are_reproducible() {
        let fam = pd_family();
        let a = fam.comparison_table().unwrap();
        let b = fam.comparison_table().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2 * 2); // two K's, one equilibrium each, two players
    }
}
