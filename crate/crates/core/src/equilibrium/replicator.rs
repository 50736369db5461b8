use super::support::polish;
use super::{choice_payoffs, EquilibriumResult, Flag, Method, MixedProfile, REPLICATOR_EPS};
use crate::error::{Error, Result};
use crate::game::InducedGame;

#[derive(Clone, Debug)]
pub struct ReplicatorOptions {
    pub steps: usize,
    /// Step relative to each player's payoff span; must lie in (0, 1).
    pub step_size: f64,
    pub eps: f64,
    /// When the orbit does not settle, solve the indifference system on the
    /// support of its time average (or of the last iterate).
    pub polish: bool,
}

impl Default for ReplicatorOptions {
    fn default() -> Self {
        ReplicatorOptions { steps: 100_000, step_size: 0.5, eps: REPLICATOR_EPS, polish: true }
    }
}

/// Discrete replicator dynamics from an interior profile.
///
/// Each step moves every player at once:
/// `x_a <- x_a * (1 + h_i * (u_a - u_bar))` with `h_i = step_size / span_i`,
/// where `span_i` is the range of player `i`'s payoffs, so weights stay
/// positive. Stops when every regret is at most `eps` or the budget runs
/// out. Orbits that cycle around a mixed equilibrium are handled by the
/// optional polish step, which is tagged separately. The result is always
/// regret-evaluated.
pub fn replicator_dynamics(g: &InducedGame, init: &MixedProfile<f64>, options: &ReplicatorOptions) -> Result<EquilibriumResult<f64>> {
    init.validate(g)?;
    for (i, v) in init.players().iter().enumerate() {
        if v.iter().any(|&p| p <= 0.0) {
            return Err(Error::InvalidInit(i + 1));
        }
    }
    if !(options.step_size > 0.0 && options.step_size < 1.0) {
        return Err(Error::InvalidMixture { player: 0, reason: format!("step size {} outside (0, 1)", options.step_size) });
    }
    let n = g.n_players();
    let u = g.float_utilities();
    let rates: Vec<f64> = (0..n)
        .map(|i| {
            let (lo, hi) = u.iter().skip(i).step_by(n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            let span = hi - lo;
            if span > 0.0 {
                options.step_size / span
            } else {
                0.0
            }
        })
        .collect();

    let mut probs: Vec<Vec<f64>> = init.players().to_vec();
    let mut average: Vec<Vec<f64>> = probs.iter().map(|v| vec![0.0; v.len()]).collect();
    let mut steps = 0;
    let converged = loop {
        let profile = MixedProfile::new(probs.clone());
        let payoffs: Vec<Vec<f64>> = (0..n).map(|i| choice_payoffs(g, i, &profile)).collect();
        let mut worst = 0.0f64;
        for i in 0..n {
            let avg: f64 = payoffs[i].iter().zip(&probs[i]).map(|(v, p)| v * p).sum();
            let best = payoffs[i].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max(best - avg);
        }
        if worst <= options.eps {
            break true;
        }
        if steps == options.steps {
            break false;
        }
        for (acc, v) in average.iter_mut().zip(&probs) {
            acc.iter_mut().zip(v).for_each(|(a, p)| *a += p);
        }
        for i in 0..n {
            let avg: f64 = payoffs[i].iter().zip(&probs[i]).map(|(v, p)| v * p).sum();
            for (p, v) in probs[i].iter_mut().zip(&payoffs[i]) {
                *p *= 1.0 + rates[i] * (v - avg);
            }
            let total: f64 = probs[i].iter().sum();
            for p in probs[i].iter_mut() {
                *p /= total;
            }
        }
        steps += 1;
    };

    if !converged && options.polish && steps > 0 {
        let average = MixedProfile::new(average.into_iter().map(|v| v.into_iter().map(|a| a / steps as f64).collect()).collect());
        let last = MixedProfile::new(probs.clone());
        for start in [&average, &last] {
            for threshold in [1e-2, 1e-3, 1e-4] {
                if let Some(p) = polish(g, start, threshold, 50, options.eps) {
                    let mut result = EquilibriumResult::evaluate_unchecked(g, p, Method::Replicator);
                    result.flags.push(Flag::Polished { steps });
                    return Ok(result);
                }
            }
        }
    }
    let mut result = EquilibriumResult::evaluate_unchecked(g, MixedProfile::new(probs), Method::Replicator);
    result.flags.push(if converged { Flag::Converged { steps } } else { Flag::Unconverged { steps } });
    Ok(result)
}
