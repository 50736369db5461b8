//! JSON game-spec documents.
//!
//! ```json
//! {
//!   "players": ["1", "2"],
//!   "max_coalition_size": 2,
//!   "strategies": ["L", "H"],
//!   "payoffs": [{"structure": "1|2", "profile": ["L", "L"], "payoffs": ["0", "0"]}],
//!   "mechanism": "unanimity"
//! }
//! ```
//!
//! `strategies` is a label list shared by every player in every structure,
//! `{"shared": [...], "structures": [...]}` to limit the shared list to some
//! structures, or `{"per_player": {name: {structure: [...]}}}`. Structure ids
//! use block notation with 1-based player numbers or player names.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Choice, GameSpec, ProjectionRow};
use crate::mechanism::{MechanismSpec, Outcome, TableRow};
use crate::num::{format_decimal, parse_rational};
use crate::partitions::{enumerate_structures, CoalitionStructure};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    players: Vec<String>,
    max_coalition_size: usize,
    strategies: Strategies,
    payoffs: Vec<PayoffRow>,
    #[serde(default = "default_mechanism")]
    mechanism: MechanismDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    projection: Vec<ProjectionDoc>,
}

fn default_mechanism() -> MechanismDoc {
    MechanismDoc::Name("unanimity".into())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Strategies {
    Shared(Vec<String>),
    SharedOn { shared: Vec<String>, structures: Vec<String> },
    PerPlayer { per_player: BTreeMap<String, BTreeMap<String, Vec<String>>> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PayoffRow {
    structure: String,
    profile: Vec<String>,
    payoffs: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum MechanismDoc {
    Name(String),
    Table { table: Vec<TableRowDoc> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRowDoc {
    choices: Vec<(String, String)>,
    structure: String,
    labels: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectionDoc {
    player: String,
    from: String,
    label: String,
    to: String,
    image: String,
}

struct Resolver<'a> {
    players: &'a [String],
    known: BTreeSet<CoalitionStructure>,
}

impl Resolver<'_> {
    fn player(&self, token: &str, path: &str) -> Result<usize> {
        let token = token.trim();
        if let Some(i) = self.players.iter().position(|p| p == token) {
            return Ok(i + 1);
        }
        match token.parse::<usize>() {
            Ok(i) if i >= 1 && i <= self.players.len() => Ok(i),
            _ => Err(Error::spec(path, format!("unknown player '{token}'"))),
        }
    }

    fn structure(&self, id: &str, path: &str) -> Result<CoalitionStructure> {
        let blocks = id
            .split('|')
            .map(|b| b.split(',').map(|t| self.player(t, path)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let s = CoalitionStructure::new(blocks).map_err(|e| Error::spec(path, format!("unknown structure id '{id}': {e}")))?;
        if !self.known.contains(&s) {
            return Err(Error::spec(path, format!("unknown structure id '{id}' for this player set and coalition bound")));
        }
        Ok(s)
    }
}

fn syntax(e: &serde_json::Error) -> Error {
    Error::Syntax { line: e.line(), column: e.column(), message: e.to_string() }
}

/// Parses and validates a spec document. Errors carry a line/column for
/// malformed JSON and a field path otherwise.
pub fn parse_spec(text: &str) -> Result<GameSpec> {
    let mut de = serde_json::Deserializer::from_str(text);
    let doc: Document = match serde_path_to_error::deserialize(&mut de) {
        Ok(d) => d,
        Err(e) => {
            let path = e.path().to_string();
            let inner = e.into_inner();
            return Err(if inner.is_syntax() || inner.is_eof() {
                syntax(&inner)
            } else {
                Error::spec(path, inner.to_string())
            });
        }
    };
    de.end().map_err(|e| syntax(&e))?;
    from_document(doc)
}

fn from_document(doc: Document) -> Result<GameSpec> {
    let n = doc.players.len();
    if n == 0 {
        return Err(Error::spec("players", "at least one player is required"));
    }
    for (i, p) in doc.players.iter().enumerate() {
        if p.trim().is_empty() || p.contains([',', '|']) {
            return Err(Error::spec(format!("players[{i}]"), format!("invalid player name '{p}'")));
        }
        if doc.players[..i].contains(p) {
            return Err(Error::spec(format!("players[{i}]"), format!("duplicate player name '{p}'")));
        }
    }
    let k = doc.max_coalition_size;
    let known = enumerate_structures(n, k).map_err(|e| Error::spec("max_coalition_size", e.to_string()))?;
    let res = Resolver { players: &doc.players, known: known.iter().cloned().collect() };

    let mut strategies = BTreeMap::new();
    match &doc.strategies {
        Strategies::Shared(labels) => {
            for s in &known {
                for p in 1..=n {
                    strategies.insert((p, s.clone()), labels.clone());
                }
            }
        }
        Strategies::SharedOn { shared, structures } => {
            for (i, id) in structures.iter().enumerate() {
                let s = res.structure(id, &format!("strategies.structures[{i}]"))?;
                for p in 1..=n {
                    strategies.insert((p, s.clone()), shared.clone());
                }
            }
        }
        Strategies::PerPlayer { per_player } => {
            for (name, per_structure) in per_player {
                let path = format!("strategies.per_player.{name}");
                let p = res.player(name, &path)?;
                for (id, labels) in per_structure {
                    let s = res.structure(id, &format!("{path}.{id}"))?;
                    strategies.insert((p, s), labels.clone());
                }
            }
        }
    }
    for ((p, s), labels) in &strategies {
        let path = format!("strategies ({}, {})", doc.players[p - 1], s);
        if labels.is_empty() {
            return Err(Error::spec(path, "empty label list"));
        }
        if let Some(dup) = labels.iter().enumerate().find(|(i, l)| labels[..*i].contains(l)) {
            return Err(Error::spec(path, format!("duplicate label '{}'", dup.1)));
        }
    }
    let declared = |p: usize, s: &CoalitionStructure, label: &str, path: &str| -> Result<()> {
        match strategies.get(&(p, s.clone())) {
            Some(ls) if ls.iter().any(|l| l == label) => Ok(()),
            _ => Err(Error::spec(path, format!("label '{label}' is not declared for player {} in {s}", doc.players[p - 1]))),
        }
    };

    let mut payoffs = BTreeMap::new();
    for (r, row) in doc.payoffs.iter().enumerate() {
        let path = format!("payoffs[{r}]");
        let s = res.structure(&row.structure, &format!("{path}.structure"))?;
        if row.profile.len() != n {
            return Err(Error::spec(format!("{path}.profile"), format!("expected {n} labels, found {}", row.profile.len())));
        }
        if row.payoffs.len() != n {
            return Err(Error::spec(format!("{path}.payoffs"), format!("expected {n} payoffs, found {}", row.payoffs.len())));
        }
        for (i, label) in row.profile.iter().enumerate() {
            declared(i + 1, &s, label, &format!("{path}.profile[{i}]"))?;
        }
        let values = row
            .payoffs
            .iter()
            .enumerate()
            .map(|(i, v)| parse_rational(v).ok_or_else(|| Error::spec(format!("{path}.payoffs[{i}]"), format!("'{v}' is not an exact decimal"))))
            .collect::<Result<Vec<_>>>()?;
        if payoffs.insert((s, row.profile.clone()), values).is_some() {
            return Err(Error::spec(path, "duplicate payoff row"));
        }
    }

    let mechanism = match &doc.mechanism {
        MechanismDoc::Name(name) => match name.as_str() {
            "unanimity" => MechanismSpec::Unanimity,
            "singleton-identity" => MechanismSpec::SingletonIdentity,
            other => return Err(Error::spec("mechanism", format!("unknown mechanism '{other}'"))),
        },
        MechanismDoc::Table { table } => {
            let mut rows = Vec::with_capacity(table.len());
            for (r, row) in table.iter().enumerate() {
                let path = format!("mechanism.table[{r}]");
                if row.choices.len() != n {
                    return Err(Error::spec(format!("{path}.choices"), format!("expected {n} choices, found {}", row.choices.len())));
                }
                let choices = row
                    .choices
                    .iter()
                    .enumerate()
                    .map(|(i, (id, label))| {
                        let cp = format!("{path}.choices[{i}]");
                        let s = res.structure(id, &cp)?;
                        declared(i + 1, &s, label, &cp)?;
                        Ok(Choice::new(s, label.clone()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let structure = res.structure(&row.structure, &format!("{path}.structure"))?;
                if row.labels.len() != n {
                    return Err(Error::spec(format!("{path}.labels"), format!("expected {n} labels, found {}", row.labels.len())));
                }
                for (i, label) in row.labels.iter().enumerate() {
                    declared(i + 1, &structure, label, &format!("{path}.labels[{i}]"))?;
                }
                rows.push(TableRow { choices, outcome: Outcome { structure, labels: row.labels.clone() } });
            }
            MechanismSpec::Table(rows)
        }
    };

    let mut projection = Vec::with_capacity(doc.projection.len());
    for (r, row) in doc.projection.iter().enumerate() {
        let path = format!("projection[{r}]");
        let player = res.player(&row.player, &format!("{path}.player"))?;
        let from = res.structure(&row.from, &format!("{path}.from"))?;
        let to = res.structure(&row.to, &format!("{path}.to"))?;
        declared(player, &from, &row.label, &format!("{path}.label"))?;
        declared(player, &to, &row.image, &format!("{path}.image"))?;
        projection.push(ProjectionRow { player, from, label: row.label.clone(), to, image: row.image.clone() });
    }

    Ok(GameSpec { players: doc.players, max_coalition_size: k, strategies, payoffs, mechanism, projection })
}

fn to_document(spec: &GameSpec) -> Document {
    let name = |p: usize| spec.players[p - 1].clone();
    let mut per_player: BTreeMap<String, BTreeMap<String, Vec<String>>> = BTreeMap::new();
    for ((p, s), labels) in &spec.strategies {
        per_player.entry(name(*p)).or_default().insert(s.to_string(), labels.clone());
    }
    let payoffs = spec
        .payoffs
        .iter()
        .map(|((s, profile), values)| PayoffRow {
            structure: s.to_string(),
            profile: profile.clone(),
            payoffs: values.iter().map(format_decimal).collect(),
        })
        .collect();
    let mechanism = match &spec.mechanism {
        MechanismSpec::Table(rows) => MechanismDoc::Table {
            table: rows
                .iter()
                .map(|r| TableRowDoc {
                    choices: r.choices.iter().map(|c| (c.structure.to_string(), c.label.clone())).collect(),
                    structure: r.outcome.structure.to_string(),
                    labels: r.outcome.labels.clone(),
                })
                .collect(),
        },
        other => MechanismDoc::Name(other.name().to_string()),
    };
    let projection = spec
        .projection
        .iter()
        .map(|r| ProjectionDoc {
            player: name(r.player),
            from: r.from.to_string(),
            label: r.label.clone(),
            to: r.to.to_string(),
            image: r.image.clone(),
        })
        .collect();
    Document {
        players: spec.players.clone(),
        max_coalition_size: spec.max_coalition_size,
        strategies: Strategies::PerPlayer { per_player },
        payoffs,
        mechanism,
        projection,
    }
}

/// Canonical document for `spec` (per-player strategies, numeric structure ids).
pub fn serialize_spec(spec: &GameSpec) -> String {
    let mut out = serde_json::to_string_pretty(&to_document(spec)).expect("spec documents always serialize");
    out.push('\n');
    out
}
