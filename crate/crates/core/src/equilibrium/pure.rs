use crate::game::InducedGame;

/// All pure profiles (as choice indices) where no player gains by a
/// unilateral deviation. Exhaustive and exact.
pub fn solve_pure(g: &InducedGame) -> Vec<Vec<usize>> {
    let n = g.n_players();
    let space = g.space();
    let counts = space.counts();
    let u = g.exact_utilities();

    // best[i][idx] : player i's best payoff over own choices with the others fixed as in idx
    let mut stable = vec![true; space.len()];
    for i in 0..n {
        let stride: usize = counts[i + 1..].iter().product();
        for idx in 0..space.len() {
            if !stable[idx] {
                continue;
            }
            let own = (idx / stride) % counts[i];
            let base = idx - own * stride;
            let mine = &u[idx * n + i];
            let beaten = (0..counts[i]).any(|a| u[(base + a * stride) * n + i] > *mine);
            if beaten {
                stable[idx] = false;
            }
        }
    }
    stable
        .iter()
        .enumerate()
        .filter(|(_, s)| **s)
        .map(|(idx, _)| space.decode(idx))
        .collect()
}
