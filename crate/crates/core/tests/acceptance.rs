//! Acceptance suite. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use coalform::equilibrium::{
    replicator_dynamics, solve_exact_suite, solve_numeric_suite, solve_pure, solve_support_exact, solve_support_numeric,
    structure_distribution, verify_equilibrium, Flag, MixedProfile, NumericOptions, ReplicatorOptions, SuiteOptions,
};
use coalform::io::{default_pd, matching_pennies, parse_spec, raised_joint_pd, BUNDLED_PD, THREE_PLAYER};
use coalform::partitions::{count_structures, enumerate_structures};
use coalform::stability::{analyze_exact, nested_family, Mode, Witness};
use coalform::{build_game, induced_normal_form, BuildOptions, CoalitionStructure, InducedGame, Rational};
use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    check(t <= limit, || format!("took {t:?}, limit {limit:?}"))
}

fn cs(s: &str) -> CoalitionStructure {
    s.parse().unwrap()
}

const SEP: &str = "1|2";
const JOINT: &str = "1,2";

/// Rows of the published mechanism table: chosen (structure, label) for each
/// player, then the final structure. Final labels always equal the chosen ones.
/// The fourth row is printed as (H sep, H joint) under "no conflict"; the only
/// conflict-free H/H profile missing from the table is (H sep, H sep).
const MECHANISM_TABLE: [((&str, &str), (&str, &str), &str); 16] = [
    ((SEP, "L"), (SEP, "L"), SEP),
    ((SEP, "L"), (SEP, "H"), SEP),
    ((SEP, "H"), (SEP, "L"), SEP),
    ((SEP, "H"), (SEP, "H"), SEP),
    ((SEP, "L"), (JOINT, "L"), SEP),
    ((SEP, "H"), (JOINT, "L"), SEP),
    ((SEP, "L"), (JOINT, "H"), SEP),
    ((SEP, "H"), (JOINT, "H"), SEP),
    ((JOINT, "L"), (SEP, "L"), SEP),
    ((JOINT, "H"), (SEP, "L"), SEP),
    ((JOINT, "L"), (SEP, "H"), SEP),
    ((JOINT, "H"), (SEP, "H"), SEP),
    ((JOINT, "L"), (JOINT, "L"), JOINT),
    ((JOINT, "L"), (JOINT, "H"), JOINT),
    ((JOINT, "H"), (JOINT, "L"), JOINT),
    ((JOINT, "H"), (JOINT, "H"), JOINT),
];

/// Published induced payoff table, rows = player 1 choice, columns = player 2
/// choice, both in the order L sep, H sep, L joint, H joint.
const PAYOFF_TABLE: [[((i64, i64), &str); 4]; 4] = [
    [((0, 0), SEP), ((-5, 3), SEP), ((0, 0), SEP), ((-5, 3), SEP)],
    [((3, -5), SEP), ((-2, -2), SEP), ((3, -5), SEP), ((-2, -2), SEP)],
    [((0, 0), SEP), ((-5, 3), SEP), ((0, 0), JOINT), ((-5, 3), JOINT)],
    [((3, -5), SEP), ((-2, -2), SEP), ((3, -5), JOINT), ((-2, -2), JOINT)],
];

fn pd_game() -> (coalform::Game, InducedGame) {
    let game = build_game(parse_spec(BUNDLED_PD).unwrap()).unwrap();
    let g = induced_normal_form(&game, game.mechanism()).unwrap();
    (game, g)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (game, _) = pd_game();
    let m = game.mechanism();
    let mut joint = 0;
    let mut separ = 0;
    for ((s1, l1), (s2, l2), fin) in MECHANISM_TABLE {
        let c1 = game.choice_set(1).unwrap().iter().find(|c| c.structure == cs(s1) && c.label == l1).unwrap();
        let c2 = game.choice_set(2).unwrap().iter().find(|c| c.structure == cs(s2) && c.label == l2).unwrap();
        let out = m.apply(&game, &[c1, c2]).map_err(|e| e.to_string())?;
        check(out.structure == cs(fin) && out.labels == [l1, l2], || format!("{c1}, {c2} -> {} {:?}", out.structure, out.labels))?;
    }
    let distinct: BTreeSet<_> = MECHANISM_TABLE.iter().map(|(a, b, _)| (*a, *b)).collect();
    check(distinct.len() == 16 && game.space().len() == 16, || "table does not cover the 16 profiles".into())?;
    for digits in game.space().iter() {
        let out = m.apply(&game, &game.profile_choices(&digits)).map_err(|e| e.to_string())?;
        if out.structure == cs(JOINT) {
            joint += 1
        } else if out.structure == cs(SEP) {
            separ += 1
        }
    }
    check(joint == 4 && separ == 12, || format!("joint {joint}, separated {separ}"))?;
    within(Duration::from_secs(1), start)?;
    Ok(format!("16 rows match; joint {joint}, separated {separ}; {:?}", start.elapsed()))
}

fn criterion_2() -> Outcome {
    let (_, g) = pd_game();
    for (r, row) in PAYOFF_TABLE.iter().enumerate() {
        for (c, ((u1, u2), fin)) in row.iter().enumerate() {
            let idx = g.space().encode(&[r, c]);
            let got = g.utility(&[r, c]);
            check(got == [int(*u1), int(*u2)], || format!("cell ({r},{c}) payoff {got:?}"))?;
            check(g.outcome(idx).structure == cs(fin), || format!("cell ({r},{c}) structure {}", g.outcome(idx).structure))?;
        }
    }
    Ok("16 cells, payoffs and final structures exact".into())
}

fn criterion_3() -> Outcome {
    let (_, g) = pd_game();
    let eq = solve_pure(&g);
    let want = vec![vec![1, 1], vec![1, 3], vec![3, 1], vec![3, 3]];
    check(eq == want, || format!("got {eq:?}"))?;
    for d in &eq {
        check(g.utility(d) == [int(-2), int(-2)], || format!("{d:?} pays {:?}", g.utility(d)))?;
        for (i, &c) in d.iter().enumerate() {
            check(g.choice_sets()[i][c].label == "H", || format!("{d:?} is not an H profile"))?;
        }
    }
    Ok("exactly the four H x H profiles, each paying (-2,-2)".into())
}

fn criterion_4() -> Outcome {
    let (game, g) = pd_game();
    let half = q("1/2");
    let v = vec![int(0), half.clone(), int(0), half];
    let p = MixedProfile::new(vec![v.clone(), v]);
    let (ok, regret) = verify_equilibrium(&g, &p, 0.0).map_err(|e| e.to_string())?;
    check(ok && regret == [int(0), int(0)], || format!("regret {regret:?}"))?;
    let dist = structure_distribution(&game, game.mechanism(), &p).map_err(|e| e.to_string())?;
    check(dist.len() == 2 && dist[&cs(SEP)] == q("3/4") && dist[&cs(JOINT)] == q("1/4"), || format!("{dist:?}"))?;
    Ok("regret (0,0); separated 3/4, joint 1/4".into())
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    for n in 1..=6 {
        let all = brute_partitions(n);
        for k in 1..=n {
            let oracle: BTreeSet<Vec<Vec<usize>>> = all.iter().filter(|p| p.iter().all(|b| b.len() <= k)).cloned().collect();
            let ours = enumerate_structures(n, k).map_err(|e| e.to_string())?;
            let mine: BTreeSet<Vec<Vec<usize>>> = ours.iter().map(|s| s.blocks().to_vec()).collect();
            check(mine.len() == ours.len(), || format!("duplicates at n={n}, k={k}"))?;
            check(mine == oracle, || format!("n={n}, k={k}: {} vs oracle {}", mine.len(), oracle.len()))?;
            let count = count_structures(n, k).map_err(|e| e.to_string())?;
            check(count == oracle.len() as u128, || format!("count_structures({n},{k}) = {count}"))?;
        }
    }
    let small: Vec<u128> = (1..=3).map(|k| count_structures(3, k).unwrap()).collect();
    check(small == [1, 4, 5], || format!("N=3 counts {small:?}"))?;
    check(count_structures(4, 2).unwrap() == 10, || "N=4, K=2".into())?;
    let bell = bell_triangle(8);
    for n in 1..=8 {
        let c = count_structures(n, n).map_err(|e| e.to_string())?;
        check(c == bell[n], || format!("Bell({n}) = {} but count {c}", bell[n]))?;
    }
    within(Duration::from_secs(10), start)?;
    Ok(format!("N <= 6 all K match the brute-force oracle; Bell(1..8) match; {:?}", start.elapsed()))
}

fn criterion_6() -> Outcome {
    let spec = matching_pennies();
    check(spec.max_coalition_size == 1, || "not a K = 1 game".into())?;
    let g = induce(spec);
    let exact = solve_exact_suite(&g, usize::MAX).map_err(|e| e.to_string())?;
    let half = q("1/2");
    check(exact.len() == 1, || format!("{} exact equilibria", exact.len()))?;
    check(exact[0].profile.players().iter().all(|v| v == &[half.clone(), half.clone()]), || format!("{:?}", exact[0].profile))?;
    let numeric = solve_numeric_suite(&g, &SuiteOptions::default()).map_err(|e| e.to_string())?;
    check(numeric.equilibria.len() == 1, || format!("{} numeric equilibria", numeric.equilibria.len()))?;
    let worst = numeric.equilibria[0].profile.players().iter().flatten().map(|p| (p - 0.5).abs()).fold(0.0, f64::max);
    check(worst <= 1e-9, || format!("numeric deviation {worst:e}"))?;
    Ok(format!("exact (1/2,1/2) per player; numeric within {worst:e}"))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240607);
    let corpus: Vec<Bimatrix> = (0..120).map(|_| Bimatrix::random(&mut rng, 4)).collect();
    let numeric_opts = NumericOptions { max_support: 4, ..NumericOptions::default() };
    let mut compared = 0;
    let mut skipped = 0;
    let mut plain = 0;
    let mut reached = 0;
    for (gi, bm) in corpus.iter().enumerate() {
        let g = bm.induced();
        let exact = solve_support_exact(&g, usize::MAX).map_err(|e| e.to_string())?;
        let numeric = solve_support_numeric(&g, &numeric_opts).map_err(|e| e.to_string())?;
        check(!exact.is_empty(), || format!("game {gi}: no equilibrium"))?;
        for e in &exact {
            let (ok, _) = verify_equilibrium(&g, &e.profile, 0.0).map_err(|e| e.to_string())?;
            check(ok, || format!("game {gi}: exact equilibrium fails verification"))?;
        }
        for e in &numeric.equilibria {
            let (ok, r) = verify_equilibrium(&g, &e.profile, 1e-9).map_err(|e| e.to_string())?;
            check(ok, || format!("game {gi}: numeric regret {r:?}"))?;
        }
        match vertex_enumeration_supports(bm) {
            Some(oracle) => {
                compared += 1;
                let mine: BTreeSet<(Vec<usize>, Vec<usize>)> =
                    exact.iter().map(|e| (e.profile.support(0), e.profile.support(1))).collect();
                check(mine == oracle, || format!("game {gi}: exact supports {mine:?} vs oracle {oracle:?}"))?;
                let num: BTreeSet<(Vec<usize>, Vec<usize>)> =
                    numeric.equilibria.iter().map(|e| (e.profile.support(0), e.profile.support(1))).collect();
                check(num == oracle, || format!("game {gi}: numeric supports {num:?} vs oracle {oracle:?}"))?;
            }
            None => skipped += 1,
        }
        let r = replicator_dynamics(&g, &MixedProfile::uniform(g.choice_counts()), &ReplicatorOptions::default()).map_err(|e| e.to_string())?;
        if r.is_verified(1e-6) {
            reached += 1;
            if matches!(r.flags[0], Flag::Converged { .. }) {
                plain += 1;
            }
        }
    }
    check(compared >= 100, || format!("only {compared} nondegenerate games compared"))?;
    // zero-sum subset against the LP value
    for gi in 0..20 {
        let bm = Bimatrix::zero_sum(&mut rng, 3, 3);
        let g = bm.induced();
        let value = zero_sum_value(&bm.a);
        for e in solve_support_exact(&g, usize::MAX).map_err(|e| e.to_string())? {
            let v: f64 = coalform::Scalar::to_f64(&e.payoffs[0]);
            check((v - value).abs() <= 1e-9, || format!("zero-sum game {gi}: payoff {v} vs LP value {value}"))?;
        }
    }
    let rate = reached as f64 / corpus.len() as f64;
    check(rate >= 0.9, || format!("replicator reached 1e-6 on {reached}/{}", corpus.len()))?;
    within(Duration::from_secs(60), start)?;
    Ok(format!(
        "{} games; supports match the vertex oracle on {compared} ({skipped} degenerate skipped); 20 zero-sum values match LP; replicator {reached}/{} ({plain} without polish); {:?}",
        corpus.len(),
        corpus.len(),
        start.elapsed()
    ))
}

fn criterion_8() -> Outcome {
    let mut fixtures = vec![
        ("pd".to_string(), default_pd()),
        ("raised-joint".to_string(), raised_joint_pd()),
        ("matching-pennies".to_string(), matching_pennies()),
        ("three-player".to_string(), parse_spec(THREE_PLAYER).unwrap()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in 1..=3 {
        for rep in 0..6 {
            let labels = if n == 3 { 1 + rep % 2 } else { 1 + rep % 3 };
            fixtures.push((format!("random n={n} #{rep}"), random_unanimity_spec(&mut rng, n, n, labels)));
        }
    }
    let options = SuiteOptions {
        numeric: NumericOptions { max_support: 2, stop_at_first: true, ..NumericOptions::default() },
        ..SuiteOptions::default()
    };
    let mut games = 0;
    for (name, spec) in &fixtures {
        let family: Vec<_> = if spec.max_coalition_size == spec.n_players() {
            nested_family(spec).map_err(|e| format!("{name}: {e}"))?
        } else {
            (1..=spec.max_coalition_size).map(|k| spec.restrict(k).unwrap()).collect()
        };
        for member in family {
            let k = member.max_coalition_size;
            let g = induce(member);
            games += 1;
            let found = if g.n_players() <= 2 {
                let eq = solve_exact_suite(&g, usize::MAX).map_err(|e| format!("{name} K={k}: {e}"))?;
                eq.iter().filter(|e| e.is_verified(0.0)).count()
            } else {
                let eq = solve_numeric_suite(&g, &options).map_err(|e| format!("{name} K={k}: {e}"))?;
                eq.equilibria.iter().filter(|e| e.is_verified(1e-6)).count()
            };
            check(found > 0, || format!("{name} K={k}: no verified equilibrium"))?;
        }
    }
    Ok(format!("{games} games across {} fixtures each have a verified equilibrium", fixtures.len()))
}

fn criterion_9() -> Outcome {
    let fam = analyze_exact(nested_family(&default_pd()).unwrap(), BuildOptions::default(), usize::MAX).map_err(|e| e.to_string())?;
    let local = fam.local_stability(2, Mode::ForAll).map_err(|e| e.to_string())?;
    let global = fam.global_stability(2, Mode::ForAll).map_err(|e| e.to_string())?;
    check(local.stable && global.stable, || format!("local {} global {}", local.stable, global.stable))?;
    check(local.comparisons == global.comparisons, || "local and global compare different games".into())?;
    for c in &global.comparisons {
        check(c.equilibrium_payoff == int(-2) && c.deviation_payoff == int(-2), || format!("{c:?}"))?;
    }
    for k in 1..=2 {
        let l = fam.local_stability(k, Mode::ForAll).map_err(|e| e.to_string())?.stable;
        let g = fam.global_stability(k, Mode::ForAll).map_err(|e| e.to_string())?.stable;
        check(l == g, || format!("verdicts differ at K={k}"))?;
    }
    let strong = fam.strong_nash_criterion(Mode::ForAll).map_err(|e| e.to_string())?;
    check(!strong.stable, || "strong criterion passed on the PD".into())?;
    let masses: Vec<_> = strong
        .witnesses
        .iter()
        .filter_map(|w| match w {
            Witness::StructureMass { structure, mass } => Some((structure.clone(), mass.clone())),
            _ => None,
        })
        .collect();
    check(masses == [(cs(SEP), q("3/4"))], || format!("witnesses {masses:?}"))?;
    let text = strong.witnesses.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("; ");

    let raised = analyze_exact(nested_family(&raised_joint_pd()).unwrap(), BuildOptions::default(), usize::MAX).map_err(|e| e.to_string())?;
    let ok: Rational = int(1);
    let v = raised.strong_nash_criterion(Mode::ForAll).map_err(|e| e.to_string())?;
    check(v.stable, || format!("raised-joint strong criterion failed: {:?}", v.witnesses))?;
    let sel = &raised.members()[1];
    check(sel.equilibria[sel.selected].payoffs == [ok.clone(), ok], || "raised-joint selected payoffs".into())?;
    Ok(format!("PD K=2 stable with -2 on both sides; strong fails ({text}); raised-joint strong passes"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("mechanism fidelity", criterion_1),
        ("induced payoffs", criterion_2),
        ("pure equilibria", criterion_3),
        ("equilibrium structure distribution", criterion_4),
        ("enumeration oracle", criterion_5),
        ("nash reduction", criterion_6),
        ("solver cross-validation", criterion_7),
        ("existence property", criterion_8),
        ("stability harness", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL - {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
