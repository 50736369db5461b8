//! Coalition-structure formation mechanisms: total, deterministic maps from
//! choice profiles to a final structure plus final labels.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Choice, Game};
use crate::partitions::CoalitionStructure;

/// Final coalition structure and one label per player valid in it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outcome {
    pub structure: CoalitionStructure,
    pub labels: Vec<String>,
}

/// One row of an extensional mechanism: a full choice profile and its outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableRow {
    pub choices: Vec<Choice>,
    pub outcome: Outcome,
}

/// Which mechanism a game uses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MechanismSpec {
    /// A coalition of two or more forms only if all of its members chose it.
    Unanimity,
    /// Everybody ends up alone; the natural rule for K = 1.
    SingletonIdentity,
    /// Explicit mapping, one row per choice profile.
    Table(Vec<TableRow>),
}

impl MechanismSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MechanismSpec::Unanimity => "unanimity",
            MechanismSpec::SingletonIdentity => "singleton-identity",
            MechanismSpec::Table(_) => "table",
        }
    }
}

pub trait Mechanism: Send + Sync {
    fn name(&self) -> &str;

    /// Resolves a complete choice profile (one choice per player, in player order).
    fn apply(&self, game: &Game, profile: &[&Choice]) -> Result<Outcome>;
}

/// Structure formed by the unanimity rule.
///
/// Each player endorses exactly one own-coalition, so agreed coalitions are
/// pairwise disjoint; everyone outside them is a singleton.
pub fn unanimous_structure(profile: &[&Choice]) -> CoalitionStructure {
    let n = profile.len();
    let own = |p: usize| profile[p - 1].structure.block_of(p).unwrap_or(&[]);
    let mut seated = vec![false; n + 1];
    let mut blocks = Vec::new();
    for p in 1..=n {
        if seated[p] {
            continue;
        }
        let block = own(p);
        let agreed = block.len() >= 2 && block.iter().all(|&q| q <= n && own(q) == block);
        if agreed {
            for &q in block {
                seated[q] = true;
            }
            blocks.push(block.to_vec());
        } else {
            seated[p] = true;
            blocks.push(vec![p]);
        }
    }
    CoalitionStructure::new(blocks).expect("agreed coalitions are disjoint")
}

fn project_all(game: &Game, profile: &[&Choice], structure: CoalitionStructure) -> Result<Outcome> {
    let labels = profile
        .iter()
        .enumerate()
        .map(|(i, c)| game.project(i + 1, c, &structure))
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome { structure, labels })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Unanimity;

impl Mechanism for Unanimity {
    fn name(&self) -> &str {
        "unanimity"
    }

    fn apply(&self, game: &Game, profile: &[&Choice]) -> Result<Outcome> {
        project_all(game, profile, unanimous_structure(profile))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SingletonIdentity;

impl Mechanism for SingletonIdentity {
    fn name(&self) -> &str {
        "singleton-identity"
    }

    fn apply(&self, game: &Game, profile: &[&Choice]) -> Result<Outcome> {
        project_all(game, profile, CoalitionStructure::singletons(profile.len()))
    }
}

#[derive(Clone, Debug, Default)]
pub struct TableMechanism {
    rows: HashMap<Vec<Choice>, Outcome>,
}

impl TableMechanism {
    pub fn new(rows: &[TableRow]) -> Result<Self> {
        let mut map = HashMap::with_capacity(rows.len());
        for row in rows {
            if let Some(prev) = map.insert(row.choices.clone(), row.outcome.clone()) {
                if prev != row.outcome {
                    return Err(Error::InvalidOutcome {
                        mechanism: "table".into(),
                        reason: format!("conflicting rows for profile {}", render_profile(&row.choices.iter().collect::<Vec<_>>())),
                    });
                }
            }
        }
        Ok(TableMechanism { rows: map })
    }
}

impl Mechanism for TableMechanism {
    fn name(&self) -> &str {
        "table"
    }

    fn apply(&self, _game: &Game, profile: &[&Choice]) -> Result<Outcome> {
        let key: Vec<Choice> = profile.iter().map(|c| (*c).clone()).collect();
        self.rows.get(&key).cloned().ok_or_else(|| Error::MechanismNotTotal {
            mechanism: self.name().to_string(),
            profile: render_profile(profile),
        })
    }
}

pub(crate) fn render_profile(profile: &[&Choice]) -> String {
    let parts: Vec<String> = profile.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(", "))
}

pub(crate) fn from_spec(spec: &MechanismSpec, choice_sets: &[Vec<Choice>]) -> Result<Box<dyn Mechanism>> {
    Ok(match spec {
        MechanismSpec::Unanimity => Box::new(Unanimity),
        MechanismSpec::SingletonIdentity => Box::new(SingletonIdentity),
        MechanismSpec::Table(rows) => {
            for row in rows {
                let known = row.choices.len() == choice_sets.len()
                    && row.choices.iter().zip(choice_sets).all(|(c, set)| set.contains(c));
                if !known {
                    return Err(Error::InvalidOutcome {
                        mechanism: "table".into(),
                        reason: format!("row {} is not a choice profile", render_profile(&row.choices.iter().collect::<Vec<_>>())),
                    });
                }
            }
            Box::new(TableMechanism::new(rows)?)
        }
    })
}

/// Applies `m` and checks the outcome is a well-formed element of P(K) with
/// labels declared for every player.
pub fn apply_checked(m: &dyn Mechanism, game: &Game, profile: &[&Choice]) -> Result<Outcome> {
    let outcome = m.apply(game, profile)?;
    let n = game.n_players();
    let k = game.max_coalition_size();
    let invalid = |reason: String| Error::InvalidOutcome { mechanism: m.name().to_string(), reason };
    if !outcome.structure.fits(n, k) {
        return Err(invalid(format!("structure {} outside P(K={k})", outcome.structure)));
    }
    if outcome.labels.len() != n {
        return Err(invalid(format!("{} labels for {n} players", outcome.labels.len())));
    }
    for (i, label) in outcome.labels.iter().enumerate() {
        let ok = game.labels(i + 1, &outcome.structure).is_some_and(|ls| ls.contains(label));
        if !ok {
            return Err(invalid(format!("label `{label}` not declared for player {} at {}", i + 1, outcome.structure)));
        }
    }
    Ok(outcome)
}

/// The exact image `{ apply(c).structure }` over every choice profile.
pub fn implementable_structures(m: &dyn Mechanism, game: &Game) -> Result<BTreeSet<CoalitionStructure>> {
    let space = game.space();
    (0..space.len())
        .into_par_iter()
        .map(|idx| {
            let digits = space.decode(idx);
            apply_checked(m, game, &game.profile_choices(&digits)).map(|o| o.structure)
        })
        .collect()
}

/// Number of choice profiles that `m` maps to `target`.
pub fn preimage_count(m: &dyn Mechanism, game: &Game, target: &CoalitionStructure) -> Result<u128> {
    let space = game.space();
    let hits = (0..space.len())
        .into_par_iter()
        .map(|idx| {
            let digits = space.decode(idx);
            apply_checked(m, game, &game.profile_choices(&digits)).map(|o| u128::from(&o.structure == target))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    if hits == 0 {
        return Err(Error::StructureNotImplementable(target.to_string()));
    }
    Ok(hits)
}

/// Checks the nested-rules property: on every profile of the smaller game the
/// two mechanisms give the same outcome.
pub fn agrees_on_restriction(low: &Game, m_low: &dyn Mechanism, high: &Game, m_high: &dyn Mechanism) -> Result<bool> {
    for digits in low.space().iter() {
        let profile = low.profile_choices(&digits);
        if profile.iter().enumerate().any(|(i, c)| !high.choice_sets()[i].contains(c)) {
            return Ok(false);
        }
        if apply_checked(m_low, low, &profile)? != apply_checked(m_high, high, &profile)? {
            return Ok(false);
        }
    }
    Ok(true)
}
