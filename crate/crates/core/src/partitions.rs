//! Young diagrams and labeled coalition structures over players `1..=n`.
//!
//! A [`YoungDiagram`] only records coalition sizes; a [`CoalitionStructure`]
//! records which players sit together. Enumeration order is deterministic:
//! diagrams are listed lexicographically descending, structures from the
//! finest (most blocks) to the coarsest, ties broken by restricted growth
//! string.

use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An integer partition of `n` into coalition sizes, kept non-increasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct YoungDiagram {
    parts: Vec<usize>,
}

impl YoungDiagram {
    /// Builds a diagram from arbitrary positive parts; the parts are sorted.
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() || parts.iter().any(|&p| p == 0) {
            return Err(Error::MalformedStructure(format!("diagram {parts:?}")));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(YoungDiagram { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn size(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Longest ribbon, i.e. the largest coalition.
    pub fn max_part(&self) -> usize {
        self.parts[0]
    }
}

impl fmt::Display for YoungDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "]")
    }
}

/// A partition of a player set into disjoint non-empty coalitions.
///
/// Members are ascending inside each block and blocks are ordered by their
/// smallest member, so structural equality is set-partition equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoalitionStructure {
    blocks: Vec<Vec<usize>>,
}

impl CoalitionStructure {
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut blocks = blocks;
        for b in &mut blocks {
            if b.is_empty() {
                return Err(Error::MalformedStructure("empty coalition".into()));
            }
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        let mut all: Vec<usize> = blocks.iter().flatten().copied().collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::MalformedStructure(format!(
                "player listed twice in {}",
                render(&blocks)
            )));
        }
        Ok(CoalitionStructure { blocks })
    }

    /// Everybody alone.
    pub fn singletons(n: usize) -> Self {
        CoalitionStructure { blocks: (1..=n).map(|p| vec![p]).collect() }
    }

    /// Everybody together.
    pub fn grand_coalition(n: usize) -> Self {
        CoalitionStructure { blocks: vec![(1..=n).collect()] }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Sorted list of all players covered.
    pub fn players(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.blocks.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    pub fn block_of(&self, player: usize) -> Option<&[usize]> {
        self.blocks.iter().find(|b| b.contains(&player)).map(Vec::as_slice)
    }

    pub fn max_block(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn diagram(&self) -> YoungDiagram {
        YoungDiagram::new(self.blocks.iter().map(Vec::len).collect())
            .expect("blocks are non-empty")
    }

    pub fn is_singletons(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 1)
    }

    pub fn is_grand_coalition(&self) -> bool {
        self.blocks.len() == 1
    }

    /// True iff the structure partitions exactly `1..=n` with blocks of size at most `k`.
    pub fn fits(&self, n: usize, k: usize) -> bool {
        self.max_block() <= k && self.players() == (1..=n).collect::<Vec<_>>()
    }

    /// Restricted growth string: entry `j` is the block index of the `j`-th smallest player.
    pub fn growth_string(&self) -> Vec<usize> {
        self.players()
            .iter()
            .map(|p| self.blocks.iter().position(|b| b.contains(p)).unwrap())
            .collect()
    }

    /// Renders with player names substituted for ids (1-based).
    pub fn display_with(&self, names: &[String]) -> String {
        self.blocks
            .iter()
            .map(|b| {
                b.iter()
                    .map(|&p| names.get(p - 1).cloned().unwrap_or_else(|| p.to_string()))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("|")
    }
}

fn render(blocks: &[Vec<usize>]) -> String {
    blocks
        .iter()
        .map(|b| b.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("|")
}

impl fmt::Display for CoalitionStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(&self.blocks))
    }
}

/// Parses block notation such as `1,2|3`.
impl FromStr for CoalitionStructure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let malformed = || Error::MalformedStructure(s.to_string());
        let blocks = s
            .split('|')
            .map(|b| {
                b.split(',')
                    .map(|t| t.trim().parse::<usize>().ok().filter(|&p| p > 0).ok_or_else(malformed))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        CoalitionStructure::new(blocks)
    }
}

impl Serialize for CoalitionStructure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CoalitionStructure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn check_bounds(n: usize, k: usize) -> Result<()> {
    if n < 1 || k < 1 || k > n {
        return Err(Error::InvalidBounds { n, k });
    }
    Ok(())
}

/// All integer partitions of `n` with parts at most `k`, lexicographically descending.
pub fn enumerate_diagrams(n: usize, k: usize) -> Result<Vec<YoungDiagram>> {
    check_bounds(n, k)?;
    fn rec(rest: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<YoungDiagram>) {
        if rest == 0 {
            out.push(YoungDiagram { parts: prefix.clone() });
            return;
        }
        for part in (1..=max.min(rest)).rev() {
            prefix.push(part);
            rec(rest - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, &mut Vec::new(), &mut out);
    Ok(out)
}

/// All set partitions of `1..=n` with every block of size at most `k`.
pub fn enumerate_structures(n: usize, k: usize) -> Result<Vec<CoalitionStructure>> {
    check_bounds(n, k)?;
    // Restricted growth strings are produced in lexicographic order.
    fn rec(player: usize, n: usize, k: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<CoalitionStructure>) {
        if player > n {
            out.push(CoalitionStructure { blocks: blocks.clone() });
            return;
        }
        for b in 0..blocks.len() {
            if blocks[b].len() < k {
                blocks[b].push(player);
                rec(player + 1, n, k, blocks, out);
                blocks[b].pop();
            }
        }
        blocks.push(vec![player]);
        rec(player + 1, n, k, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    rec(1, n, k, &mut Vec::new(), &mut out);
    out.sort_by_key(|s| Reverse(s.num_blocks()));
    Ok(out)
}

/// Every way to seat `players` into coalitions whose sizes are the parts of `diagram`.
pub fn allocations_of_diagram(diagram: &YoungDiagram, players: &[usize]) -> Result<Vec<CoalitionStructure>> {
    if diagram.size() != players.len() {
        return Err(Error::SizeMismatch { diagram: diagram.size(), players: players.len() });
    }
    let mut pool = players.to_vec();
    pool.sort_unstable();
    if pool.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::MalformedStructure(format!("repeated player in {players:?}")));
    }

    // The smallest unseated player picks the size of its own coalition among the
    // distinct remaining sizes, then its partners; equal-size blocks are never
    // generated twice because each block is anchored at its smallest member.
    fn rec(pool: &[usize], sizes: &mut Vec<usize>, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<CoalitionStructure>) {
        let Some((&anchor, rest)) = pool.split_first() else {
            out.push(CoalitionStructure::new(blocks.clone()).expect("disjoint by construction"));
            return;
        };
        let mut distinct = sizes.clone();
        distinct.dedup();
        for size in distinct {
            let pos = sizes.iter().position(|&s| s == size).unwrap();
            sizes.remove(pos);
            for partners in combinations(rest, size - 1) {
                let mut block = vec![anchor];
                block.extend(&partners);
                let remaining: Vec<usize> = rest.iter().copied().filter(|p| !partners.contains(p)).collect();
                blocks.push(block);
                rec(&remaining, sizes, blocks, out);
                blocks.pop();
            }
            sizes.insert(pos, size);
        }
    }

    let mut out = Vec::new();
    rec(&pool, &mut diagram.parts.clone(), &mut Vec::new(), &mut out);
    out.sort_by_key(|s| s.growth_string());
    Ok(out)
}

fn combinations(items: &[usize], r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![Vec::new()];
    }
    if items.len() < r {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        for mut tail in combinations(&items[i + 1..], r - 1) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// Number of set partitions of `n` players with blocks of size at most `k`.
///
/// Counted with `a(m) = sum_{j=1..min(k,m)} C(m-1, j-1) a(m-j)`: the block
/// holding the last player has `j` members.
pub fn count_structures(n: usize, k: usize) -> Result<u128> {
    check_bounds(n, k)?;
    let overflow = || Error::CountOverflow { n, k };
    let mut binom = vec![vec![0u128; n + 1]; n + 1];
    for m in 0..=n {
        binom[m][0] = 1;
        for j in 1..=m {
            binom[m][j] = binom[m - 1][j - 1].checked_add(binom[m - 1][j]).ok_or_else(overflow)?;
        }
    }
    let mut a = vec![0u128; n + 1];
    a[0] = 1;
    for m in 1..=n {
        let mut total = 0u128;
        for j in 1..=k.min(m) {
            let term = binom[m - 1][j - 1].checked_mul(a[m - j]).ok_or_else(overflow)?;
            total = total.checked_add(term).ok_or_else(overflow)?;
        }
        a[m] = total;
    }
    Ok(a[n])
}

/// Checks that diagrams and structures grow monotonically with the size cap.
pub fn check_nesting(n: usize) -> bool {
    if n == 0 {
        return false;
    }
    (1..n).all(|k| {
        let (Ok(d_lo), Ok(d_hi)) = (enumerate_diagrams(n, k), enumerate_diagrams(n, k + 1)) else {
            return false;
        };
        let (Ok(s_lo), Ok(s_hi)) = (enumerate_structures(n, k), enumerate_structures(n, k + 1)) else {
            return false;
        };
        d_lo.iter().all(|d| d_hi.contains(d)) && s_lo.iter().all(|s| s_hi.contains(s))
    })
}
