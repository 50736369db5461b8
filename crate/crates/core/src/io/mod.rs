//! Spec documents, fixture generators and reports.

mod report;
mod spec_doc;

pub use report::*;
pub use spec_doc::{parse_spec, serialize_spec};

use std::collections::BTreeMap;

use crate::game::GameSpec;
use crate::mechanism::MechanismSpec;
use crate::num::{parse_rational, Rational};
use crate::partitions::CoalitionStructure;

/// The two-player cooperation game shipped with the crate.
pub const BUNDLED_PD: &str = include_str!("../../data/pd.json");

/// A three-player spec with K = 2 and two labels per structure.
pub const THREE_PLAYER: &str = include_str!("../../data/three_player.json");

/// Two players, K = 2, labels `L` and `H` in both `1|2` and `1,2`, and the
/// same payoff pattern in both structures:
/// (L,L) = (r,r), (L,H) = (s,t), (H,L) = (t,s), (H,H) = (p,p).
pub fn generate_pd(reward: Rational, sucker: Rational, temptation: Rational, punishment: Rational) -> GameSpec {
    let labels = vec!["L".to_string(), "H".to_string()];
    let structures = [CoalitionStructure::singletons(2), CoalitionStructure::grand_coalition(2)];
    let mut strategies = BTreeMap::new();
    let mut payoffs = BTreeMap::new();
    for s in &structures {
        for p in 1..=2 {
            strategies.insert((p, s.clone()), labels.clone());
        }
        let cells = [
            (["L", "L"], [&reward, &reward]),
            (["L", "H"], [&sucker, &temptation]),
            (["H", "L"], [&temptation, &sucker]),
            (["H", "H"], [&punishment, &punishment]),
        ];
        for (profile, values) in cells {
            payoffs.insert(
                (s.clone(), profile.iter().map(|l| l.to_string()).collect()),
                values.iter().map(|v| (*v).clone()).collect(),
            );
        }
    }
    GameSpec {
        players: vec!["1".into(), "2".into()],
        max_coalition_size: 2,
        strategies,
        payoffs,
        mechanism: MechanismSpec::Unanimity,
        projection: Vec::new(),
    }
}

/// The default instance (0, -5, 3, -2).
pub fn default_pd() -> GameSpec {
    let q = |s| parse_rational(s).expect("literal");
    generate_pd(q("0"), q("-5"), q("3"), q("-2"))
}

/// [`default_pd`] with the joint `(H,H)` cell raised to (1,1), which makes
/// agreeing to cooperate-in-coalition attractive.
pub fn raised_joint_pd() -> GameSpec {
    let mut spec = default_pd();
    let key = (CoalitionStructure::grand_coalition(2), vec!["H".to_string(), "H".to_string()]);
    let one = Rational::from_integer(1.into());
    spec.payoffs.insert(key, vec![one.clone(), one]);
    spec
}

/// Matching pennies as a K = 1 game.
pub fn matching_pennies() -> GameSpec {
    let labels = vec![vec!["heads".to_string(), "tails".to_string()]; 2];
    GameSpec::normal_form(vec!["1".into(), "2".into()], labels, |d| {
        let v: i64 = if d[0] == d[1] { 1 } else { -1 };
        vec![Rational::from_integer(v.into()), Rational::from_integer((-v).into())]
    })
}
