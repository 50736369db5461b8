//! Human-readable tables and JSON reports. Every value is carried as a
//! string (`p/q` for rationals), so the table and the JSON agree exactly.

use std::fmt::Write as _;

use serde::Serialize;

use crate::equilibrium::{EquilibriumResult, Flag};
use crate::error::Result;
use crate::game::InducedGame;
use crate::num::Scalar;
use crate::partitions::{count_structures, enumerate_diagrams, enumerate_structures};
use crate::stability::{FamilyAnalysis, Verdict, Witness};

pub const SCHEMA_VERSION: &str = "1";

/// JSON schema for [`Report::to_json`].
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub schema_version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enumeration: Option<EnumerationReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub games: Vec<GameReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<VerdictReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnumerationReport {
    pub players: usize,
    pub max_coalition_size: usize,
    pub count: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagrams: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structures: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GameReport {
    pub players: Vec<String>,
    pub max_coalition_size: usize,
    pub mechanism: String,
    pub choices: Vec<Vec<String>>,
    pub cells: Vec<CellReport>,
    pub equilibria: Vec<EquilibriumReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected: Option<usize>,
    /// Supports (as choice lists per player) where the numeric solver failed.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub nonconvergent: Vec<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellReport {
    pub profile: Vec<String>,
    pub structure: String,
    pub labels: Vec<String>,
    pub payoffs: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbabilityReport {
    pub choice: String,
    pub probability: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct MassReport {
    pub structure: String,
    pub probability: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquilibriumReport {
    pub method: String,
    pub flags: Vec<String>,
    /// Per player, the choices played with positive probability.
    pub profile: Vec<Vec<ProbabilityReport>>,
    pub payoffs: Vec<String>,
    pub regret: Vec<String>,
    pub structure_distribution: Vec<MassReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub player: String,
    pub k: usize,
    pub k1: usize,
    pub equilibrium: usize,
    pub equilibrium_payoff: String,
    pub deviation_payoff: String,
    pub deviation: String,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub kind: String,
    pub description: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictReport {
    pub criterion: String,
    pub k: usize,
    pub mode: String,
    pub stable: bool,
    pub comparisons: Vec<ComparisonReport>,
    pub witnesses: Vec<WitnessReport>,
}

fn flag_text(f: &Flag) -> String {
    match f {
        Flag::Degenerate => "degenerate".into(),
        Flag::Component { extreme_points } => format!("component of {extreme_points} extreme equilibria"),
        Flag::Converged { steps } => format!("converged after {steps} steps"),
        Flag::Polished { steps } => format!("polished after {steps} steps"),
        Flag::Unconverged { steps } => format!("not converged after {steps} steps"),
    }
}

impl EnumerationReport {
    pub fn new(n: usize, k: usize, diagrams: bool, structures: bool) -> Result<Self> {
        Ok(EnumerationReport {
            players: n,
            max_coalition_size: k,
            count: count_structures(n, k)?.to_string(),
            diagrams: if diagrams { Some(enumerate_diagrams(n, k)?.iter().map(ToString::to_string).collect()) } else { None },
            structures: if structures { Some(enumerate_structures(n, k)?.iter().map(ToString::to_string).collect()) } else { None },
        })
    }
}

impl EquilibriumReport {
    pub fn new<T: Scalar>(g: &InducedGame, r: &EquilibriumResult<T>) -> Self {
        let profile = r
            .profile
            .players()
            .iter()
            .enumerate()
            .map(|(i, probs)| {
                probs
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > T::zero())
                    .map(|(a, p)| ProbabilityReport { choice: g.choice_sets()[i][a].to_string(), probability: p.render() })
                    .collect()
            })
            .collect();
        EquilibriumReport {
            method: r.method.to_string(),
            flags: r.flags.iter().map(flag_text).collect(),
            profile,
            payoffs: r.payoffs.iter().map(Scalar::render).collect(),
            regret: r.regret.iter().map(Scalar::render).collect(),
            structure_distribution: r
                .structure_distribution
                .iter()
                .map(|(s, p)| MassReport { structure: s.to_string(), probability: p.render() })
                .collect(),
        }
    }
}

impl GameReport {
    pub fn new<T: Scalar>(g: &InducedGame, k: usize, equilibria: &[EquilibriumResult<T>]) -> Self {
        let cells = g
            .rows()
            .into_iter()
            .map(|(choices, outcome, payoffs)| CellReport {
                profile: choices.iter().map(ToString::to_string).collect(),
                structure: outcome.structure.to_string(),
                labels: outcome.labels.clone(),
                payoffs,
            })
            .collect();
        GameReport {
            players: g.player_names().to_vec(),
            max_coalition_size: k,
            mechanism: g.mechanism_name().to_string(),
            choices: g.choice_sets().iter().map(|cs| cs.iter().map(ToString::to_string).collect()).collect(),
            cells,
            equilibria: equilibria.iter().map(|r| EquilibriumReport::new(g, r)).collect(),
            selected: None,
            nonconvergent: Vec::new(),
        }
    }

    pub fn with_nonconvergent(mut self, g: &InducedGame, supports: &[Vec<Vec<usize>>]) -> Self {
        self.nonconvergent = supports
            .iter()
            .map(|s| s.iter().enumerate().map(|(i, sup)| sup.iter().map(|&a| g.choice_sets()[i][a].to_string()).collect()).collect())
            .collect();
        self
    }
}

impl VerdictReport {
    pub fn new<T: Scalar>(family: &FamilyAnalysis<T>, v: &Verdict<T>) -> Self {
        let names = family.members()[0].game.player_names();
        VerdictReport {
            criterion: v.criterion.to_string(),
            k: v.k,
            mode: v.mode.to_string(),
            stable: v.stable,
            comparisons: v
                .comparisons
                .iter()
                .map(|c| ComparisonReport {
                    player: names[c.player - 1].clone(),
                    k: c.k,
                    k1: c.k1,
                    equilibrium: c.equilibrium,
                    equilibrium_payoff: c.equilibrium_payoff.render(),
                    deviation_payoff: c.deviation_payoff.render(),
                    deviation: c.deviation.to_string(),
                    holds: c.holds,
                })
                .collect(),
            witnesses: v
                .witnesses
                .iter()
                .map(|w| WitnessReport {
                    kind: match w {
                        Witness::Deviation(_) => "deviation".into(),
                        Witness::StructureMass { .. } => "structure-mass".into(),
                    },
                    description: w.to_string(),
                })
                .collect(),
        }
    }
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report { schema_version: SCHEMA_VERSION.into(), command: command.into(), ..Default::default() }
    }

    /// Pretty JSON with a trailing newline; field and list order are fixed.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("reports always serialize");
        out.push('\n');
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        if let Some(e) = &self.enumeration {
            let _ = writeln!(out, "players {}  max coalition size {}  structures {}", e.players, e.max_coalition_size, e.count);
            if let Some(d) = &e.diagrams {
                let _ = writeln!(out, "\ndiagrams ({})", d.len());
                for x in d {
                    let _ = writeln!(out, "  {x}");
                }
            }
            if let Some(s) = &e.structures {
                let _ = writeln!(out, "\nstructures ({})", s.len());
                for x in s {
                    let _ = writeln!(out, "  {x}");
                }
            }
        }
        for (gi, g) in self.games.iter().enumerate() {
            if gi > 0 {
                out.push('\n');
            }
            render_game(&mut out, g);
        }
        for v in &self.verdicts {
            out.push('\n');
            render_verdict(&mut out, v);
        }
        out
    }
}

fn render_game(out: &mut String, g: &GameReport) {
    let _ = writeln!(out, "game K={}  players {}  mechanism {}", g.max_coalition_size, g.players.join(" "), g.mechanism);
    let mut header: Vec<String> = g.players.iter().map(|p| format!("choice {p}")).collect();
    header.push("structure".into());
    header.push("labels".into());
    header.extend(g.players.iter().map(|p| format!("u {p}")));
    let rows: Vec<Vec<String>> = g
        .cells
        .iter()
        .map(|c| {
            let mut r = c.profile.clone();
            r.push(c.structure.clone());
            r.push(c.labels.join(","));
            r.extend(c.payoffs.iter().cloned());
            r
        })
        .collect();
    out.push_str(&table(&header, &rows));
    let _ = writeln!(out, "\nequilibria ({})", g.equilibria.len());
    for (i, e) in g.equilibria.iter().enumerate() {
        let mark = if g.selected == Some(i) { " (selected)" } else { "" };
        let _ = write!(out, "#{i} [{}]{mark}", e.method);
        if !e.flags.is_empty() {
            let _ = write!(out, " {}", e.flags.join("; "));
        }
        out.push('\n');
        for (p, probs) in g.players.iter().zip(&e.profile) {
            let parts: Vec<String> = probs.iter().map(|x| format!("{} {}", x.choice, x.probability)).collect();
            let _ = writeln!(out, "  {p}: {}", parts.join(", "));
        }
        let _ = writeln!(out, "  payoffs: {}", e.payoffs.join(" "));
        let _ = writeln!(out, "  regret: {}", e.regret.join(" "));
        let dist: Vec<String> = e.structure_distribution.iter().map(|m| format!("{} {}", m.structure, m.probability)).collect();
        let _ = writeln!(out, "  structures: {}", dist.join(", "));
    }
    for s in &g.nonconvergent {
        let parts: Vec<String> = s.iter().map(|x| format!("{{{}}}", x.join(","))).collect();
        let _ = writeln!(out, "nonconvergent support: {}", parts.join(" "));
    }
}

fn render_verdict(out: &mut String, v: &VerdictReport) {
    let _ = writeln!(
        out,
        "{} stability at K={} ({}): {}",
        v.criterion,
        v.k,
        v.mode,
        if v.stable { "stable" } else { "not stable" }
    );
    let header: Vec<String> = ["player", "K1", "eq", "payoff at K", "best in K1", "deviation", "holds"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = v
        .comparisons
        .iter()
        .map(|c| {
            vec![
                c.player.clone(),
                c.k1.to_string(),
                c.equilibrium.to_string(),
                c.equilibrium_payoff.clone(),
                c.deviation_payoff.clone(),
                c.deviation.clone(),
                if c.holds { "yes" } else { "no" }.to_string(),
            ]
        })
        .collect();
    if !rows.is_empty() {
        out.push_str(&table(&header, &rows));
    }
    for w in &v.witnesses {
        let _ = writeln!(out, "witness: {}", w.description);
    }
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        format!("{}\n", padded.join("  ").trim_end())
    };
    let mut out = line(header);
    out.push_str(&line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
    for r in rows {
        out.push_str(&line(r));
    }
    out
}
