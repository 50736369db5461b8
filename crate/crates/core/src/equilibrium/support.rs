//! Support enumeration.
//!
//! Two players: exact. Each player's candidate strategies are the vertices of
//! the region where a chosen set of opponent replies are tied best, found by
//! solving the indifference system for every pair (own support, tied set) of
//! equal size over the rationals. Every pair of vertices that satisfies the
//! complementarity conditions is an extreme equilibrium; this also covers
//! degenerate games, where supports of the two players may differ in size.
//!
//! Three or more players: numeric. For each support profile the indifference
//! equations are solved by damped Gauss-Newton from several starts, and every
//! candidate is re-verified against the whole game.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{choice_payoffs, regrets_unchecked, EquilibriumResult, Method, MixedProfile, VERIFY_EPS};
use crate::error::{Error, Result};
use crate::game::InducedGame;
use crate::num::Rational;

/// Ceiling on the number of linear systems the exact path may solve.
const MAX_EXACT_SYSTEMS: u128 = 10_000_000;
/// Ceiling on support profiles the numeric path may visit.
const MAX_NUMERIC_SUPPORTS: u128 = 5_000_000;

/// Output of [`solve_support_enumeration`]: exact for two players, numeric otherwise.
#[derive(Clone, Debug)]
pub enum SupportSolution {
    Exact(Vec<EquilibriumResult<Rational>>),
    Numeric(NumericSolve),
}

/// Exact for at most two players, numeric (verified at `eps`) for more.
pub fn solve_support_enumeration(g: &InducedGame, max_support: usize, eps: f64) -> Result<SupportSolution> {
    if g.n_players() <= 2 {
        return solve_support_exact(g, max_support).map(SupportSolution::Exact);
    }
    let options = NumericOptions { max_support, eps, ..NumericOptions::default() };
    let solve = solve_support_numeric(g, &options)?;
    if solve.equilibria.is_empty() {
        return Err(Error::NumericNonconvergence(format!(
            "no verified equilibrium; {} support profiles did not converge",
            solve.nonconvergent.len()
        )));
    }
    Ok(SupportSolution::Numeric(solve))
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Gaussian elimination over the rationals; `Some` only for a unique solution.
fn solve_unique(mut rows: Vec<Vec<Rational>>, unknowns: usize) -> Option<Vec<Rational>> {
    let m = rows.len();
    let mut pivot_row = 0;
    for col in 0..unknowns {
        let pr = (pivot_row..m).find(|&r| !rows[r][col].is_zero())?;
        rows.swap(pivot_row, pr);
        let inv = Rational::from_integer(1.into()) / rows[pivot_row][col].clone();
        for v in rows[pivot_row].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        for r in 0..m {
            if r != pivot_row && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for c in col..=unknowns {
                    let delta = factor.clone() * rows[pivot_row][c].clone();
                    rows[r][c] = rows[r][c].clone() - delta;
                }
            }
        }
        pivot_row += 1;
    }
    // Leftover rows must read 0 = 0.
    if rows[pivot_row..].iter().any(|r| !r[unknowns].is_zero()) {
        return None;
    }
    Some((0..unknowns).map(|c| rows[c][unknowns].clone()).collect())
}

fn subsets(n: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u64..(1u64 << n))
        .filter(|m| (m.count_ones() as usize) <= max_size)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Vertices of `{x in simplex : a chosen set of opponent replies tie}` for the
/// player whose choices index the rows of `opp` (the opponent's payoffs).
fn vertices(opp: &[Vec<Rational>], max_support: usize) -> BTreeSet<Vec<Rational>> {
    let own = opp.len();
    let theirs = opp[0].len();
    let cap = max_support.min(own).min(theirs);
    let own_sets = subsets(own, cap);
    let their_sets = subsets(theirs, cap);
    let one = Rational::from_integer(1.into());
    let found: Vec<Vec<Rational>> = own_sets
        .par_iter()
        .flat_map_iter(|support| {
            their_sets.iter().filter(|t| t.len() == support.len()).filter_map(|tied| {
                let unknowns = support.len() + 1;
                let mut rows = Vec::with_capacity(tied.len() + 1);
                let mut sum = vec![one.clone(); support.len()];
                sum.push(Rational::zero());
                sum.push(one.clone());
                rows.push(sum);
                for &j in tied.iter() {
                    let mut row: Vec<Rational> = support.iter().map(|&i| opp[i][j].clone()).collect();
                    row.push(-one.clone());
                    row.push(Rational::zero());
                    rows.push(row);
                }
                let sol = solve_unique(rows, unknowns)?;
                if sol[..support.len()].iter().any(Signed::is_negative) {
                    return None;
                }
                let mut x = vec![Rational::zero(); own];
                for (&i, v) in support.iter().zip(&sol) {
                    x[i] = v.clone();
                }
                Some(x)
            })
        })
        .collect();
    found.into_iter().collect()
}

fn argmax_set(values: &[Rational]) -> Vec<usize> {
    let best = values.iter().max().expect("non-empty");
    values.iter().enumerate().filter(|(_, v)| *v == best).map(|(i, _)| i).collect()
}

/// All extreme equilibria of a game with at most two players, exactly.
///
/// `max_support` bounds the support size searched per player. Results are
/// sorted by support signature and all have zero regret.
pub fn solve_support_exact(g: &InducedGame, max_support: usize) -> Result<Vec<EquilibriumResult<Rational>>> {
    let n = g.n_players();
    let counts = g.choice_counts().to_vec();
    if n == 1 {
        let values: Vec<Rational> = (0..counts[0]).map(|a| g.utility(&[a])[0].clone()).collect();
        return Ok(argmax_set(&values)
            .into_iter()
            .map(|a| EquilibriumResult::evaluate_unchecked(g, MixedProfile::pure(&counts, &[a]), Method::SupportExact))
            .collect());
    }
    if n != 2 {
        return Err(Error::DimensionMismatch(format!("exact support enumeration needs 2 players, got {n}")));
    }
    let cap = max_support.max(1);
    let systems: u128 = (1..=cap.min(counts[0]).min(counts[1]))
        .map(|s| binomial(counts[0], s) * binomial(counts[1], s))
        .sum::<u128>()
        * 2;
    if systems > MAX_EXACT_SYSTEMS || counts.iter().any(|&c| c > 63) {
        return Err(Error::ScaleExceeded { profiles: systems, limit: MAX_EXACT_SYSTEMS });
    }

    // a[r][c]: row player's payoff, b[r][c]: column player's payoff
    let a: Vec<Vec<Rational>> = (0..counts[0]).map(|r| (0..counts[1]).map(|c| g.utility(&[r, c])[0].clone()).collect()).collect();
    let b: Vec<Vec<Rational>> = (0..counts[0]).map(|r| (0..counts[1]).map(|c| g.utility(&[r, c])[1].clone()).collect()).collect();
    let b_t: Vec<Vec<Rational>> = (0..counts[1]).map(|c| (0..counts[0]).map(|r| b[r][c].clone()).collect()).collect();
    let a_t: Vec<Vec<Rational>> = (0..counts[1]).map(|c| (0..counts[0]).map(|r| a[r][c].clone()).collect()).collect();

    // Row vertices use the column player's payoffs (rows index own choices).
    let xs = vertices(&b, cap);
    let ys = vertices(&a_t, cap);

    let dot = |m: &[Vec<Rational>], v: &[Rational]| -> Vec<Rational> {
        m.iter()
            .map(|row| row.iter().zip(v).fold(Rational::zero(), |acc, (p, q)| acc + p.clone() * q.clone()))
            .collect()
    };
    let support = |v: &[Rational]| -> Vec<usize> { v.iter().enumerate().filter(|(_, p)| !p.is_zero()).map(|(i, _)| i).collect() };

    let xs: Vec<(Vec<Rational>, Vec<usize>, Vec<usize>)> = xs
        .into_iter()
        .map(|x| {
            let br2 = argmax_set(&dot(&b_t, &x));
            let s = support(&x);
            (x, s, br2)
        })
        .collect();
    let ys: Vec<(Vec<Rational>, Vec<usize>, Vec<usize>)> = ys
        .into_iter()
        .map(|y| {
            let br1 = argmax_set(&dot(&a, &y));
            let s = support(&y);
            (y, s, br1)
        })
        .collect();

    let mut out: Vec<EquilibriumResult<Rational>> = Vec::new();
    for (x, sx, br2) in &xs {
        for (y, sy, br1) in &ys {
            if sx.iter().all(|i| br1.contains(i)) && sy.iter().all(|j| br2.contains(j)) {
                let profile = MixedProfile::new(vec![x.clone(), y.clone()]);
                out.push(EquilibriumResult::evaluate_unchecked(g, profile, Method::SupportExact));
            }
        }
    }
    out.sort_by(|p, q| {
        p.supports()
            .cmp(&q.supports())
            .then_with(|| p.profile.players().partial_cmp(q.profile.players()).unwrap_or(std::cmp::Ordering::Equal))
    });
    debug_assert!(out.iter().all(|r| r.regret.iter().all(Zero::is_zero)));
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct NumericOptions {
    /// Largest support considered for any single player.
    pub max_support: usize,
    /// Regret bar every reported equilibrium must meet.
    pub eps: f64,
    /// Random restarts per support in addition to the uniform start.
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
    /// Stop as soon as one verified equilibrium is found.
    pub stop_at_first: bool,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions { max_support: 3, eps: VERIFY_EPS, restarts: 4, max_iterations: 60, seed: 0x5eed, stop_at_first: false }
    }
}

/// Verified equilibria plus every support profile on which Newton failed.
#[derive(Clone, Debug, Default)]
pub struct NumericSolve {
    pub equilibria: Vec<EquilibriumResult<f64>>,
    pub nonconvergent: Vec<Vec<Vec<usize>>>,
}

enum SupportOutcome {
    Found(MixedProfile<f64>),
    NotEquilibrium,
    NonConvergent,
}

/// Numeric support enumeration for any number of players.
pub fn solve_support_numeric(g: &InducedGame, options: &NumericOptions) -> Result<NumericSolve> {
    let counts = g.choice_counts().to_vec();
    let cap = options.max_support.max(1);
    let per_player: Vec<Vec<Vec<usize>>> = counts
        .iter()
        .map(|&c| {
            if c > 63 {
                return Vec::new();
            }
            subsets(c, cap)
        })
        .collect();
    let total: u128 = per_player.iter().map(|s| s.len() as u128).product();
    if total > MAX_NUMERIC_SUPPORTS || per_player.iter().any(Vec::is_empty) {
        return Err(Error::ScaleExceeded { profiles: total, limit: MAX_NUMERIC_SUPPORTS });
    }

    // Support profiles ordered by total size, then lexicographically.
    let space = crate::game::ProfileSpace::new(per_player.iter().map(Vec::len).collect());
    let mut profiles: Vec<Vec<usize>> = space.iter().collect();
    profiles.sort_by_key(|d| (d.iter().enumerate().map(|(i, &s)| per_player[i][s].len()).sum::<usize>(), d.clone()));

    let mut solve = NumericSolve::default();
    // Batches of equal total size keep the output deterministic while still
    // allowing early exit.
    let mut start = 0;
    while start < profiles.len() {
        let size_of = |d: &Vec<usize>| d.iter().enumerate().map(|(i, &s)| per_player[i][s].len()).sum::<usize>();
        let size = size_of(&profiles[start]);
        let end = profiles[start..].iter().position(|d| size_of(d) != size).map_or(profiles.len(), |p| start + p);
        let batch: Vec<(Vec<Vec<usize>>, SupportOutcome)> = profiles[start..end]
            .par_iter()
            .map(|d| {
                let supports: Vec<Vec<usize>> = d.iter().enumerate().map(|(i, &s)| per_player[i][s].clone()).collect();
                let outcome = solve_one_support(g, &supports, options);
                (supports, outcome)
            })
            .collect();
        for (supports, outcome) in batch {
            match outcome {
                SupportOutcome::Found(p) => {
                    let duplicate = solve.equilibria.iter().any(|e| close(&e.profile, &p, 1e-9));
                    if !duplicate {
                        solve.equilibria.push(EquilibriumResult::evaluate_unchecked(g, p, Method::SupportNumeric));
                    }
                }
                SupportOutcome::NonConvergent => solve.nonconvergent.push(supports),
                SupportOutcome::NotEquilibrium => {}
            }
        }
        if options.stop_at_first && !solve.equilibria.is_empty() {
            break;
        }
        start = end;
    }
    Ok(solve)
}

fn close(a: &MixedProfile<f64>, b: &MixedProfile<f64>, tol: f64) -> bool {
    a.players().iter().zip(b.players()).all(|(x, y)| x.iter().zip(y).all(|(p, q)| (p - q).abs() <= tol))
}

/// Residuals and Jacobian of the indifference system on `supports` at `z`
/// (probabilities on supports, then one value per player).
fn system(g: &InducedGame, supports: &[Vec<usize>], z: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let n = supports.len();
    let offsets: Vec<usize> = supports.iter().scan(0, |acc, s| { let o = *acc; *acc += s.len(); Some(o) }).collect();
    let nprob: usize = supports.iter().map(Vec::len).sum();
    let dim = nprob + n;
    let mut f = DVector::zeros(dim);
    let mut jac = DMatrix::zeros(dim, dim);
    let u = g.float_utilities();
    let space = g.space();

    // Residual rows: (player i, k-th support choice) -> offsets[i] + k; sum rows -> nprob + i.
    let sub = crate::game::ProfileSpace::new(supports.iter().map(Vec::len).collect());
    let mut digits = vec![0usize; n];
    for local in sub.iter() {
        for (i, &k) in local.iter().enumerate() {
            digits[i] = supports[i][k];
        }
        let idx = space.encode(&digits);
        let probs: Vec<f64> = local.iter().enumerate().map(|(i, &k)| z[offsets[i] + k]).collect();
        for i in 0..n {
            let payoff = u[idx * n + i];
            let row = offsets[i] + local[i];
            let mut w = 1.0;
            for (j, &p) in probs.iter().enumerate() {
                if j != i {
                    w *= p;
                }
            }
            f[row] += w * payoff;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let mut wj = 1.0;
                for (l, &p) in probs.iter().enumerate() {
                    if l != i && l != j {
                        wj *= p;
                    }
                }
                jac[(row, offsets[j] + local[j])] += wj * payoff;
            }
        }
    }
    for i in 0..n {
        for k in 0..supports[i].len() {
            let row = offsets[i] + k;
            f[row] -= z[nprob + i];
            jac[(row, nprob + i)] = -1.0;
        }
        let srow = nprob + i;
        f[srow] = supports[i].iter().enumerate().map(|(k, _)| z[offsets[i] + k]).sum::<f64>() - 1.0;
        for k in 0..supports[i].len() {
            jac[(srow, offsets[i] + k)] = 1.0;
        }
    }
    (f, jac)
}

fn newton(g: &InducedGame, supports: &[Vec<usize>], mut z: Vec<f64>, max_iterations: usize, scale: f64) -> Option<Vec<f64>> {
    let tol = 1e-13 * scale.max(1.0);
    let (mut f, mut jac) = system(g, supports, &z);
    let mut norm = f.amax();
    for _ in 0..max_iterations {
        if norm <= tol {
            return Some(z);
        }
        let step = jac.clone().lu().solve(&(-&f)).filter(|s| s.iter().all(|v| v.is_finite())).or_else(|| {
            jac.clone().svd(true, true).solve(&(-&f), 1e-12).ok()
        })?;
        // Backtracking on the max-norm of the residual.
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
            let (tf, tj) = system(g, supports, &trial);
            let tn = tf.amax();
            if t < 1e-4 && tn >= norm {
                // stalled: no step length reduces the residual
                return None;
            }
            if tn < norm {
                z = trial;
                f = tf;
                jac = tj;
                norm = tn;
                break;
            }
            t *= 0.5;
        }
    }
    (norm <= tol).then_some(z)
}

fn solve_one_support(g: &InducedGame, supports: &[Vec<usize>], options: &NumericOptions) -> SupportOutcome {
    let counts = g.choice_counts();
    let n = supports.len();
    let scale = g.float_utilities().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let nprob: usize = supports.iter().map(Vec::len).sum();

    // Pure supports need no solve.
    if nprob == n {
        let digits: Vec<usize> = supports.iter().map(|s| s[0]).collect();
        let p = MixedProfile::<f64>::pure(counts, &digits);
        return if regrets_unchecked(g, &p).iter().all(|r| *r <= options.eps) {
            SupportOutcome::Found(p)
        } else {
            SupportOutcome::NotEquilibrium
        };
    }

    let seed = supports.iter().flatten().fold(options.seed, |h, &v| h.wrapping_mul(0x100000001b3).wrapping_add(v as u64 + 1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut converged_any = false;
    for attempt in 0..=options.restarts {
        let mut z = Vec::with_capacity(nprob + n);
        for s in supports {
            let raw: Vec<f64> = if attempt == 0 { vec![1.0; s.len()] } else { (0..s.len()).map(|_| rng.gen_range(0.05..1.0)).collect() };
            let total: f64 = raw.iter().sum();
            z.extend(raw.iter().map(|v| v / total));
        }
        z.extend(std::iter::repeat(0.0).take(n));
        // Start each value at the payoff of the first support choice.
        let start_profile = to_profile(counts, supports, &z);
        for i in 0..n {
            z[nprob + i] = choice_payoffs(g, i, &start_profile)[supports[i][0]];
        }
        let Some(sol) = newton(g, supports, z, options.max_iterations, scale) else {
            continue;
        };
        converged_any = true;
        if sol[..nprob].iter().any(|&p| p < -1e-10) {
            continue;
        }
        let mut clipped: Vec<f64> = sol.iter().map(|&p| p.max(0.0)).collect();
        let mut offset = 0;
        for s in supports {
            let total: f64 = clipped[offset..offset + s.len()].iter().sum();
            for v in &mut clipped[offset..offset + s.len()] {
                *v /= total;
            }
            offset += s.len();
        }
        let p = to_profile(counts, supports, &clipped);
        if regrets_unchecked(g, &p).iter().all(|r| *r <= options.eps) {
            return SupportOutcome::Found(p);
        }
    }
    if converged_any {
        SupportOutcome::NotEquilibrium
    } else {
        SupportOutcome::NonConvergent
    }
}

/// Newton on the indifference system over the choices `start` plays with
/// probability above `threshold`, warm-started at `start`. Returns the
/// solution only if it is a profile with every regret at most `eps`.
pub(crate) fn polish(g: &InducedGame, start: &MixedProfile<f64>, threshold: f64, max_iterations: usize, eps: f64) -> Option<MixedProfile<f64>> {
    let counts = g.choice_counts();
    let n = counts.len();
    let supports: Vec<Vec<usize>> = start.players().iter().map(|v| (0..v.len()).filter(|&a| v[a] > threshold).collect()).collect();
    if supports.iter().any(Vec::is_empty) {
        return None;
    }
    let mut z = Vec::new();
    for (i, s) in supports.iter().enumerate() {
        let total: f64 = s.iter().map(|&a| start.player(i)[a]).sum();
        z.extend(s.iter().map(|&a| start.player(i)[a] / total));
    }
    let nprob = z.len();
    let warm = to_profile(counts, &supports, &z);
    for i in 0..n {
        let payoffs = choice_payoffs(g, i, &warm);
        z.push(supports[i].iter().map(|&a| payoffs[a] * warm.player(i)[a]).sum());
    }
    let scale = g.float_utilities().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sol = newton(g, &supports, z, max_iterations, scale)?;
    if sol[..nprob].iter().any(|&p| p < -1e-10) {
        return None;
    }
    let mut probs = to_profile(counts, &supports, &sol).players().to_vec();
    for v in &mut probs {
        v.iter_mut().for_each(|p| *p = p.max(0.0));
        let total: f64 = v.iter().sum();
        v.iter_mut().for_each(|p| *p /= total);
    }
    let p = MixedProfile::new(probs);
    regrets_unchecked(g, &p).iter().all(|r| *r <= eps).then_some(p)
}

fn to_profile(counts: &[usize], supports: &[Vec<usize>], z: &[f64]) -> MixedProfile<f64> {
    let mut offset = 0;
    let probs = supports
        .iter()
        .zip(counts)
        .map(|(s, &c)| {
            let mut v = vec![0.0; c];
            for (k, &a) in s.iter().enumerate() {
                v[a] = z[offset + k];
            }
            offset += s.len();
            v
        })
        .collect();
    MixedProfile::new(probs)
}
