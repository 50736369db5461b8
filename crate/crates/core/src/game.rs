//! Game specifications, validated games and the induced normal form over
//! choice space.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{self, Mechanism, MechanismSpec, Outcome};
use crate::num::{format_rational, Rational};
use crate::partitions::{enumerate_structures, CoalitionStructure};

/// Default ceiling on the number of choice profiles a game may have.
pub const DEFAULT_MAX_PROFILES: u128 = 1_000_000;

/// A player's pick: a coalition structure and a strategy label valid there.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Choice {
    pub structure: CoalitionStructure,
    pub label: String,
}

impl Choice {
    pub fn new(structure: CoalitionStructure, label: impl Into<String>) -> Self {
        Choice { structure, label: label.into() }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.label, self.structure)
    }
}

/// Explicit image of a label when a player's chosen structure is not the final one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectionRow {
    pub player: usize,
    pub from: CoalitionStructure,
    pub label: String,
    pub to: CoalitionStructure,
    pub image: String,
}

/// Unvalidated description of a game Γ(K).
///
/// `strategies` maps `(player, structure)` to the labels the player may use in
/// that structure; a player can only choose structures listed for them.
/// `payoffs` maps `(structure, label profile)` to one payoff per player.
#[derive(Clone, Debug, PartialEq)]
pub struct GameSpec {
    pub players: Vec<String>,
    pub max_coalition_size: usize,
    pub strategies: BTreeMap<(usize, CoalitionStructure), Vec<String>>,
    pub payoffs: BTreeMap<(CoalitionStructure, Vec<String>), Vec<Rational>>,
    pub mechanism: MechanismSpec,
    pub projection: Vec<ProjectionRow>,
}

impl GameSpec {
    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    /// A classic normal-form game: everybody alone, `labels[i]` for player `i + 1`.
    pub fn normal_form<F>(players: Vec<String>, labels: Vec<Vec<String>>, mut payoff: F) -> Self
    where
        F: FnMut(&[usize]) -> Vec<Rational>,
    {
        let n = players.len();
        let singles = CoalitionStructure::singletons(n);
        let strategies = labels
            .iter()
            .enumerate()
            .map(|(i, ls)| ((i + 1, singles.clone()), ls.clone()))
            .collect();
        let counts: Vec<usize> = labels.iter().map(Vec::len).collect();
        let payoffs = ProfileSpace::new(counts)
            .iter()
            .map(|digits| {
                let profile = digits.iter().enumerate().map(|(i, &d)| labels[i][d].clone()).collect();
                ((singles.clone(), profile), payoff(&digits))
            })
            .collect();
        GameSpec {
            players,
            max_coalition_size: 1,
            strategies,
            payoffs,
            mechanism: MechanismSpec::SingletonIdentity,
            projection: Vec::new(),
        }
    }

    /// The member of the nested family with maximum coalition size `k`: every
    /// structure with a block larger than `k` is dropped.
    pub fn restrict(&self, k: usize) -> Result<GameSpec> {
        let n = self.n_players();
        if k < 1 || k > self.max_coalition_size {
            return Err(Error::InvalidBounds { n, k });
        }
        let fits = |s: &CoalitionStructure| s.max_block() <= k;
        let mechanism = match &self.mechanism {
            MechanismSpec::Table(rows) => MechanismSpec::Table(
                rows.iter()
                    .filter(|r| r.choices.iter().all(|c| fits(&c.structure)))
                    .cloned()
                    .collect(),
            ),
            other => other.clone(),
        };
        Ok(GameSpec {
            players: self.players.clone(),
            max_coalition_size: k,
            strategies: self.strategies.iter().filter(|((_, s), _)| fits(s)).map(|(a, b)| (a.clone(), b.clone())).collect(),
            payoffs: self.payoffs.iter().filter(|((s, _), _)| fits(s)).map(|(a, b)| (a.clone(), b.clone())).collect(),
            mechanism,
            projection: self.projection.iter().filter(|r| fits(&r.from) && fits(&r.to)).cloned().collect(),
        })
    }
}

/// Mixed-radix indexing of choice profiles; player 1 is the most significant digit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileSpace {
    counts: Vec<usize>,
    total: usize,
}

impl ProfileSpace {
    pub fn new(counts: Vec<usize>) -> Self {
        let total = counts.iter().product();
        ProfileSpace { counts, total }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.counts.len()];
        for (d, &c) in digits.iter_mut().zip(&self.counts).rev() {
            *d = index % c;
            index /= c;
        }
        digits
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.counts).fold(0, |acc, (&d, &c)| acc * c + d)
    }

    /// All profiles in index order.
    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let mut next = if self.total == 0 { None } else { Some(vec![0; self.counts.len()]) };
        std::iter::from_fn(move || {
            let current = next.take()?;
            let mut succ = current.clone();
            for pos in (0..succ.len()).rev() {
                succ[pos] += 1;
                if succ[pos] < self.counts[pos] {
                    next = Some(succ);
                    break;
                }
                succ[pos] = 0;
            }
            Some(current)
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    pub max_profiles: u128,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { max_profiles: DEFAULT_MAX_PROFILES }
    }
}

/// A validated game Γ(K) with its mechanism.
pub struct Game {
    spec: GameSpec,
    choice_sets: Vec<Vec<Choice>>,
    payoffs: HashMap<(CoalitionStructure, Vec<String>), Vec<Rational>>,
    projection: HashMap<(usize, CoalitionStructure, String, CoalitionStructure), String>,
    mechanism: Box<dyn Mechanism>,
    space: ProfileSpace,
}

impl fmt::Debug for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Game")
            .field("players", &self.spec.players)
            .field("k", &self.spec.max_coalition_size)
            .field("mechanism", &self.mechanism.name())
            .field("choices", &self.space.counts())
            .finish()
    }
}

pub fn build_game(spec: GameSpec) -> Result<Game> {
    build_game_with(spec, BuildOptions::default())
}

pub fn build_game_with(spec: GameSpec, options: BuildOptions) -> Result<Game> {
    let n = spec.n_players();
    let k = spec.max_coalition_size;
    if n == 0 || k == 0 || k > n {
        return Err(Error::InvalidBounds { n, k });
    }
    let check_structure = |s: &CoalitionStructure| {
        if s.fits(n, k) {
            Ok(())
        } else {
            Err(Error::StructureOutOfBounds { structure: s.to_string(), n, k })
        }
    };

    for ((player, structure), labels) in &spec.strategies {
        if *player == 0 || *player > n {
            return Err(Error::UnknownPlayer(*player));
        }
        check_structure(structure)?;
        if labels.is_empty() {
            return Err(Error::EmptyLabels { player: *player, structure: structure.to_string() });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::DuplicateLabel {
                    player: *player,
                    structure: structure.to_string(),
                    label: l.clone(),
                });
            }
        }
    }
    let declared = |player: usize, structure: &CoalitionStructure, label: &str| -> Result<()> {
        match spec.strategies.get(&(player, structure.clone())) {
            Some(ls) if ls.iter().any(|l| l == label) => Ok(()),
            _ => Err(Error::UndeclaredLabel {
                player,
                structure: structure.to_string(),
                label: label.to_string(),
            }),
        }
    };

    for ((structure, profile), values) in &spec.payoffs {
        check_structure(structure)?;
        if profile.len() != n {
            return Err(Error::PayoffArity { structure: structure.to_string(), expected: n, found: profile.len() });
        }
        if values.len() != n {
            return Err(Error::PayoffArity { structure: structure.to_string(), expected: n, found: values.len() });
        }
        for (i, label) in profile.iter().enumerate() {
            declared(i + 1, structure, label)?;
        }
    }

    let mut projection = HashMap::new();
    for row in &spec.projection {
        if row.player == 0 || row.player > n {
            return Err(Error::UnknownPlayer(row.player));
        }
        check_structure(&row.from)?;
        check_structure(&row.to)?;
        declared(row.player, &row.from, &row.label)?;
        declared(row.player, &row.to, &row.image)?;
        projection.insert((row.player, row.from.clone(), row.label.clone(), row.to.clone()), row.image.clone());
    }

    // Choice sets follow the structure enumeration order, then declared label order.
    let structures = enumerate_structures(n, k)?;
    let mut choice_sets = Vec::with_capacity(n);
    for player in 1..=n {
        let mut choices = Vec::new();
        for s in &structures {
            if let Some(labels) = spec.strategies.get(&(player, s.clone())) {
                choices.extend(labels.iter().map(|l| Choice::new(s.clone(), l.clone())));
            }
        }
        if choices.is_empty() {
            return Err(Error::NoChoices(player));
        }
        choice_sets.push(choices);
    }

    let profiles: u128 = choice_sets.iter().map(|c| c.len() as u128).product();
    if profiles > options.max_profiles {
        return Err(Error::ScaleExceeded { profiles, limit: options.max_profiles });
    }
    let space = ProfileSpace::new(choice_sets.iter().map(Vec::len).collect());
    let mechanism = mechanism::from_spec(&spec.mechanism, &choice_sets)?;
    let payoffs = spec.payoffs.iter().map(|(key, v)| (key.clone(), v.clone())).collect();

    let game = Game { spec, choice_sets, payoffs, projection, mechanism, space };

    // Payoffs must cover the mechanism's image.
    for digits in game.space.iter() {
        let profile = game.profile_choices(&digits);
        let outcome = mechanism::apply_checked(game.mechanism.as_ref(), &game, &profile)?;
        if game.payoff(&outcome).is_none() {
            return Err(Error::MissingPayoff {
                structure: outcome.structure.to_string(),
                profile: outcome.labels.join(","),
            });
        }
    }
    Ok(game)
}

impl Game {
    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn n_players(&self) -> usize {
        self.spec.n_players()
    }

    pub fn max_coalition_size(&self) -> usize {
        self.spec.max_coalition_size
    }

    pub fn player_names(&self) -> &[String] {
        &self.spec.players
    }

    pub fn mechanism(&self) -> &dyn Mechanism {
        self.mechanism.as_ref()
    }

    pub fn space(&self) -> &ProfileSpace {
        &self.space
    }

    pub fn choice_sets(&self) -> &[Vec<Choice>] {
        &self.choice_sets
    }

    /// Choices of player `player` (1-based).
    pub fn choice_set(&self, player: usize) -> Result<&[Choice]> {
        if player == 0 || player > self.n_players() {
            return Err(Error::UnknownPlayer(player));
        }
        Ok(&self.choice_sets[player - 1])
    }

    pub fn labels(&self, player: usize, structure: &CoalitionStructure) -> Option<&[String]> {
        self.spec.strategies.get(&(player, structure.clone())).map(Vec::as_slice)
    }

    pub fn payoff(&self, outcome: &Outcome) -> Option<&[Rational]> {
        self.payoffs
            .get(&(outcome.structure.clone(), outcome.labels.clone()))
            .map(Vec::as_slice)
    }

    pub fn profile_choices(&self, digits: &[usize]) -> Vec<&Choice> {
        digits.iter().enumerate().map(|(i, &d)| &self.choice_sets[i][d]).collect()
    }

    /// Label of `player` in `target` after choosing `choice`.
    ///
    /// Unchanged when the structure did not change; otherwise an explicit
    /// projection row wins, then a same-name label declared in `target`.
    pub fn project(&self, player: usize, choice: &Choice, target: &CoalitionStructure) -> Result<String> {
        if &choice.structure == target {
            return Ok(choice.label.clone());
        }
        let key = (player, choice.structure.clone(), choice.label.clone(), target.clone());
        if let Some(image) = self.projection.get(&key) {
            return Ok(image.clone());
        }
        match self.labels(player, target) {
            Some(ls) if ls.contains(&choice.label) => Ok(choice.label.clone()),
            _ => Err(Error::ProjectionUndefined {
                player,
                label: choice.label.clone(),
                from: choice.structure.to_string(),
                to: target.to_string(),
            }),
        }
    }
}

/// The finite normal-form game over choice space, with payoffs composed
/// through a mechanism.
#[derive(Clone, Debug)]
pub struct InducedGame {
    players: Vec<String>,
    choice_sets: Vec<Vec<Choice>>,
    space: ProfileSpace,
    outcomes: Vec<Outcome>,
    exact: Vec<Rational>,
    float: Vec<f64>,
    mechanism: String,
}

/// Composes `game` with `m`: the utility of a choice profile is the payoff of
/// the mechanism's outcome.
pub fn induced_normal_form(game: &Game, m: &dyn Mechanism) -> Result<InducedGame> {
    let n = game.n_players();
    let space = game.space.clone();
    let mut outcomes = Vec::with_capacity(space.len());
    let mut exact = Vec::with_capacity(space.len() * n);
    for digits in space.iter() {
        let profile = game.profile_choices(&digits);
        let outcome = mechanism::apply_checked(m, game, &profile)?;
        let Some(values) = game.payoff(&outcome) else {
            return Err(Error::ImageUncovered {
                mechanism: m.name().to_string(),
                structure: outcome.structure.to_string(),
                profile: profile.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
            });
        };
        exact.extend(values.iter().cloned());
        outcomes.push(outcome);
    }
    let float = exact.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    Ok(InducedGame {
        players: game.player_names().to_vec(),
        choice_sets: game.choice_sets.clone(),
        space,
        outcomes,
        exact,
        float,
        mechanism: m.name().to_string(),
    })
}

impl InducedGame {
    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    pub fn player_names(&self) -> &[String] {
        &self.players
    }

    pub fn mechanism_name(&self) -> &str {
        &self.mechanism
    }

    pub fn choice_sets(&self) -> &[Vec<Choice>] {
        &self.choice_sets
    }

    pub fn choice_counts(&self) -> &[usize] {
        self.space.counts()
    }

    pub fn space(&self) -> &ProfileSpace {
        &self.space
    }

    pub fn outcome(&self, index: usize) -> &Outcome {
        &self.outcomes[index]
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    /// Payoff vector at a profile given by choice indices.
    pub fn utility(&self, digits: &[usize]) -> &[Rational] {
        let n = self.n_players();
        let idx = self.space.encode(digits);
        &self.exact[idx * n..(idx + 1) * n]
    }

    pub fn exact_utilities(&self) -> &[Rational] {
        &self.exact
    }

    pub fn float_utilities(&self) -> &[f64] {
        &self.float
    }

    /// Every player's payoff is the same at every profile.
    pub fn is_constant(&self) -> bool {
        let n = self.n_players();
        (0..n).all(|i| {
            let first = &self.exact[i];
            self.exact.iter().skip(i).step_by(n).all(|x| x == first)
        })
    }

    /// Renders the payoff table row by row (used in reports).
    pub fn rows(&self) -> Vec<(Vec<&Choice>, &Outcome, Vec<String>)> {
        let n = self.n_players();
        self.space
            .iter()
            .enumerate()
            .map(|(idx, digits)| {
                let choices = digits.iter().enumerate().map(|(i, &d)| &self.choice_sets[i][d]).collect();
                let values = self.exact[idx * n..(idx + 1) * n].iter().map(format_rational).collect();
                (choices, &self.outcomes[idx], values)
            })
            .collect()
    }
}
