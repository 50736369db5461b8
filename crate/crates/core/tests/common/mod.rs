//! Oracles shared by the integration tests. None of them call into the
//! solvers they are used to check.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use coalform::partitions::enumerate_structures;
use coalform::{build_game, induced_normal_form, GameSpec, InducedGame, MechanismSpec, Rational};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn q(s: &str) -> Rational {
    coalform::num::parse_rational(s).unwrap()
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(v.into())
}

pub fn induce(spec: GameSpec) -> InducedGame {
    let game = build_game(spec).unwrap();
    induced_normal_form(&game, game.mechanism()).unwrap()
}

/// Bimatrix game with payoffs drawn from {-10.00, ..., 10.00}.
pub struct Bimatrix {
    pub a: Vec<Vec<i64>>,
    pub b: Vec<Vec<i64>>,
}

impl Bimatrix {
    pub fn random(rng: &mut ChaCha8Rng, max_choices: usize) -> Self {
        let m = rng.gen_range(2..=max_choices);
        let n = rng.gen_range(2..=max_choices);
        let mut draw = || (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1000..=1000)).collect()).collect::<Vec<Vec<i64>>>();
        let a = draw();
        let b = draw();
        Bimatrix { a, b }
    }

    pub fn zero_sum(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Self {
        let a: Vec<Vec<i64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1000..=1000)).collect()).collect();
        let b = a.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        Bimatrix { a, b }
    }

    pub fn rows(&self) -> usize {
        self.a.len()
    }

    pub fn cols(&self) -> usize {
        self.a[0].len()
    }

    pub fn spec(&self) -> GameSpec {
        let labels = vec![
            (0..self.rows()).map(|i| format!("r{i}")).collect(),
            (0..self.cols()).map(|j| format!("c{j}")).collect(),
        ];
        GameSpec::normal_form(vec!["row".into(), "col".into()], labels, |d| {
            vec![Rational::new(self.a[d[0]][d[1]].into(), 100.into()), Rational::new(self.b[d[0]][d[1]].into(), 100.into())]
        })
    }

    pub fn induced(&self) -> InducedGame {
        induce(self.spec())
    }
}

fn solve_dense(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-12 {
            return None;
        }
        m.swap(c, p);
        rhs.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..n {
                    m[r][k] -= f * m[c][k];
                }
                rhs[r] -= f * rhs[c];
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

/// Vertices of `{z >= 0, M z <= 1}` in dimension `d` (M has `r` rows) with
/// their tight-constraint labels. Label `l < d` means `z_l = 0`; label
/// `d + k` means row `k` of `M` is tight. Returns `None` if some vertex has
/// more than `d` tight constraints (degenerate).
fn polytope_vertices(mat: &[Vec<f64>], d: usize, label_of_zero: impl Fn(usize) -> usize, label_of_row: impl Fn(usize) -> usize) -> Option<Vec<(Vec<f64>, BTreeSet<usize>)>> {
    let r = mat.len();
    let total = d + r;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != d {
            continue;
        }
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for c in 0..total {
            if mask & (1 << c) == 0 {
                continue;
            }
            if c < d {
                let mut e = vec![0.0; d];
                e[c] = 1.0;
                rows.push(e);
                rhs.push(0.0);
            } else {
                rows.push(mat[c - d].clone());
                rhs.push(1.0);
            }
        }
        let Some(z) = solve_dense(rows, rhs) else { continue };
        let feasible = z.iter().all(|&v| v >= -1e-9) && mat.iter().all(|row| row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() <= 1.0 + 1e-9);
        if !feasible {
            continue;
        }
        let mut labels = BTreeSet::new();
        for (l, &v) in z.iter().enumerate() {
            if v.abs() <= 1e-9 {
                labels.insert(label_of_zero(l));
            }
        }
        for (k, row) in mat.iter().enumerate() {
            if (row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() - 1.0).abs() <= 1e-9 {
                labels.insert(label_of_row(k));
            }
        }
        if labels.len() > d {
            return None;
        }
        let key: Vec<i64> = z.iter().map(|v| (v * 1e9).round() as i64).collect();
        if seen.insert(key) {
            out.push((z, labels));
        }
    }
    Some(out)
}

/// Equilibrium support pairs of a nondegenerate bimatrix game by vertex
/// enumeration of the two best-response polytopes. `None` when the game is
/// degenerate.
pub fn vertex_enumeration_supports(g: &Bimatrix) -> Option<BTreeSet<(Vec<usize>, Vec<usize>)>> {
    let (m, n) = (g.rows(), g.cols());
    let shift = |t: &Vec<Vec<i64>>| {
        let lo = t.iter().flatten().min().copied().unwrap();
        t.iter().map(|r| r.iter().map(|&v| (v - lo + 1) as f64).collect::<Vec<f64>>()).collect::<Vec<_>>()
    };
    let a = shift(&g.a);
    let b = shift(&g.b);
    // P = {x : x >= 0, B^T x <= 1}; labels 0..m for x_i = 0, m + j for tight column j.
    let bt: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| b[i][j]).collect()).collect();
    let p = polytope_vertices(&bt, m, |i| i, |j| m + j)?;
    // Q = {y : A y <= 1, y >= 0}; labels i for tight row i, m + j for y_j = 0.
    let qv = polytope_vertices(&a, n, |j| m + j, |i| i)?;
    let mut out = BTreeSet::new();
    for (x, lx) in &p {
        if x.iter().all(|v| v.abs() < 1e-12) {
            continue;
        }
        for (y, ly) in &qv {
            if y.iter().all(|v| v.abs() < 1e-12) {
                continue;
            }
            if lx.union(ly).count() == m + n {
                let sx = (0..m).filter(|&i| x[i] > 1e-9).collect();
                let sy = (0..n).filter(|&j| y[j] > 1e-9).collect();
                out.insert((sx, sy));
            }
        }
    }
    Some(out)
}

/// Value of the zero-sum game with row payoffs `a` (in hundredths) by LP.
pub fn zero_sum_value(a: &[Vec<i64>]) -> f64 {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let v = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let x: Vec<_> = (0..a.len()).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    for j in 0..a[0].len() {
        let mut expr: Vec<_> = x.iter().enumerate().map(|(i, &xi)| (xi, a[i][j] as f64 / 100.0)).collect();
        expr.push((v, -1.0));
        lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, 0.0);
    }
    let ones: Vec<_> = x.iter().map(|&xi| (xi, 1.0)).collect();
    lp.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
    lp.solve().unwrap().objective()
}

/// Every set partition of {1..n}, as canonical sorted block lists, found by
/// mapping players to labels in every possible way.
pub fn brute_partitions(n: usize) -> HashSet<Vec<Vec<usize>>> {
    let mut out = HashSet::new();
    let total = n.pow(n as u32);
    for mut code in 0..total {
        let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for p in 1..=n {
            blocks.entry(code % n).or_default().push(p);
            code /= n;
        }
        let mut bl: Vec<Vec<usize>> = blocks.into_values().collect();
        bl.sort();
        out.insert(bl);
    }
    out
}

/// Bell numbers B(0..=n) from the Bell triangle.
pub fn bell_triangle(n: usize) -> Vec<u128> {
    let mut bell = vec![1u128];
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        bell.push(next[0]);
        row = next;
    }
    bell.truncate(n + 1);
    bell
}

/// A unanimity game on `n` players with maximum coalition size `k`, a shared
/// alphabet of `labels` strategies and integer payoffs in [-5, 5].
pub fn random_unanimity_spec(rng: &mut ChaCha8Rng, n: usize, k: usize, labels: usize) -> GameSpec {
    let alphabet: Vec<String> = (0..labels).map(|i| format!("s{i}")).collect();
    let structures = enumerate_structures(n, k).unwrap();
    let mut strategies = BTreeMap::new();
    let mut payoffs = BTreeMap::new();
    for s in &structures {
        for p in 1..=n {
            strategies.insert((p, s.clone()), alphabet.clone());
        }
        let space = coalform::game::ProfileSpace::new(vec![labels; n]);
        for digits in space.iter() {
            let profile = digits.iter().map(|&d| alphabet[d].clone()).collect();
            let values = (0..n).map(|_| int(rng.gen_range(-5..=5))).collect();
            payoffs.insert((s.clone(), profile), values);
        }
    }
    GameSpec {
        players: (1..=n).map(|i| i.to_string()).collect(),
        max_coalition_size: k,
        strategies,
        payoffs,
        mechanism: MechanismSpec::Unanimity,
        projection: Vec::new(),
    }
}
