//! Compatible abelianization trees.
//!
//! Trees are stored combinatorially: a tripod is the ccw-ordered triple of
//! asymptotic directions it ends on (rotated so the smallest index comes
//! first, which for three indices is ascending order), the single hexapod of
//! the three-zero example is stored as its ccw leaf cycle.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AbelTree {
    Tripod([usize; 3]),
    /// Leaf cycle in ccw order; legs are paired as (c0,c1), (c2,c3), (c4,c5).
    Hexapod(Vec<usize>),
}

impl AbelTree {
    /// Tripod ending on l_p, l_q, l_r (any order).
    pub fn tripod(p: usize, q: usize, r: usize) -> Self {
        let mut t = [p, q, r];
        t.sort_unstable();
        AbelTree::Tripod(t)
    }

    pub fn hexapod(cycle: &[usize]) -> Self {
        AbelTree::Hexapod(cycle.to_vec())
    }

    /// Tripod with indices reduced cyclically into [1, n].
    pub fn tripod_mod(p: i64, q: i64, r: i64, n: usize) -> Self {
        let f = |a: i64| ((a - 1).rem_euclid(n as i64) + 1) as usize;
        Self::tripod(f(p), f(q), f(r))
    }

    pub fn indices(&self) -> Vec<usize> {
        match self {
            AbelTree::Tripod(t) => t.to_vec(),
            AbelTree::Hexapod(c) => c.clone(),
        }
    }

    /// Frozen trees are the consecutive tripods T_{k,k+1,k+2} (indices mod n).
    pub fn is_frozen(&self, n: usize) -> bool {
        match self {
            AbelTree::Tripod(t) => {
                (1..=n).any(|k| *self == Self::tripod_mod(k as i64, k as i64 + 1, k as i64 + 2, n) && t[0] > 0)
            }
            AbelTree::Hexapod(_) => false,
        }
    }

    /// Relabel l_k -> l_{k+s} (indices mod n).
    pub fn shift(&self, s: i64, n: usize) -> Self {
        let f = |a: usize| ((a as i64 - 1 + s).rem_euclid(n as i64) + 1) as usize;
        match self {
            AbelTree::Tripod(t) => Self::tripod(f(t[0]), f(t[1]), f(t[2])),
            AbelTree::Hexapod(c) => AbelTree::Hexapod(c.iter().map(|&a| f(a)).collect()),
        }
    }

    pub fn short_name(&self) -> String {
        let idx = self.indices();
        let sep = if idx.iter().any(|&a| a >= 10) { "," } else { "" };
        format!("T{}", idx.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(sep))
    }
}

impl fmt::Display for AbelTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx = self.indices();
        write!(f, "T_{{{}}}", idx.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Ccw,
    Cw,
}

impl Direction {
    pub fn sign(self) -> i64 {
        match self {
            Direction::Ccw => 1,
            Direction::Cw => -1,
        }
    }
    pub fn reverse(self) -> Self {
        match self {
            Direction::Ccw => Direction::Cw,
            Direction::Cw => Direction::Ccw,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossing {
    pub pair: usize,
    pub direction: Direction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeCollection {
    /// Degree of the differential; trees end on l_1..l_{m+3}.
    pub m: usize,
    pub trees: BTreeSet<AbelTree>,
    /// Signed wall crossings from the reference chamber.
    pub chamber: Vec<Crossing>,
}

impl TreeCollection {
    pub fn n(&self) -> usize {
        self.m + 3
    }

    pub fn frozen(&self) -> Vec<AbelTree> {
        let n = self.n();
        self.trees.iter().filter(|t| t.is_frozen(n)).cloned().collect()
    }

    pub fn mutable_part(&self) -> Vec<AbelTree> {
        let n = self.n();
        self.trees.iter().filter(|t| !t.is_frozen(n)).cloned().collect()
    }

    pub fn contains(&self, t: &AbelTree) -> bool {
        self.trees.contains(t)
    }

    /// Set-wise comparison of the mutable parts.
    pub fn same_trees(&self, other: &TreeCollection) -> bool {
        self.m == other.m && self.trees == other.trees
    }

    pub fn shift(&self, s: i64) -> TreeCollection {
        let n = self.n();
        TreeCollection { m: self.m, trees: self.trees.iter().map(|t| t.shift(s, n)).collect(), chamber: self.chamber.clone() }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let n = self.n();
        let tripods: Vec<Vec<usize>> = self
            .trees
            .iter()
            .filter_map(|t| match t {
                AbelTree::Tripod(x) => Some(x.to_vec()),
                _ => None,
            })
            .collect();
        let hexapods: Vec<Vec<usize>> = self
            .trees
            .iter()
            .filter_map(|t| match t {
                AbelTree::Hexapod(c) => Some(c.clone()),
                _ => None,
            })
            .collect();
        let frozen: Vec<Vec<usize>> = self.trees.iter().filter(|t| t.is_frozen(n)).map(|t| t.indices()).collect();
        serde_json::json!({ "m": self.m, "trees": tripods, "hexapods": hexapods, "frozen": frozen })
    }
}

/// All frozen trees T_{k,k+1,k+2}, k = 1..n.
pub fn frozen_fan(n: usize) -> Vec<AbelTree> {
    (1..=n).map(|k| AbelTree::tripod_mod(k as i64, k as i64 + 1, k as i64 + 2, n)).collect()
}

/// The reference chamber: collinear zeros with l_1 placed as in the
/// reference labelling. Closed-form lists for even and odd m.
pub fn reference_collection(m: usize) -> Result<TreeCollection> {
    if m < 2 {
        return Err(Error::InvalidInput(format!("degree must be >= 2, got {m}")));
    }
    let n = m + 3;
    let h = (m / 2) as i64;
    let mi = m as i64;
    let mut trees: BTreeSet<AbelTree> = frozen_fan(n).into_iter().collect();
    let t = |p: i64, q: i64, r: i64| AbelTree::tripod_mod(p, q, r, n);
    trees.insert(t(1, 2, mi + 2));
    trees.insert(t(2, mi + 2, mi + 3));
    let ks: Vec<i64> = if m % 2 == 0 {
        (2..=h).chain(h + 3..=mi + 1).collect()
    } else {
        trees.insert(t(h + 1, h + 2, h + 4));
        trees.insert(t(h + 1, h + 3, h + 4));
        (2..=h).chain(h + 4..=mi + 1).collect()
    };
    for k in ks {
        trees.insert(t(k, k + 1, mi + 3 - k));
        trees.insert(t(k, k + 1, mi + 4 - k));
    }
    Ok(TreeCollection { m, trees, chamber: vec![] })
}

/// The pair of trees attached to the adjacent zeros (z_i, z_{i+1}) in the
/// reference chamber, and the first counterclockwise crossing of that pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairCase {
    pub case_id: u8,
    pub kept: AbelTree,
    /// Tree replaced by the first ccw crossing.
    pub old: AbelTree,
    pub new: AbelTree,
}

pub fn reference_case(m: usize, i: usize) -> Result<PairCase> {
    if m < 2 || i == 0 || i >= m {
        return Err(Error::InvalidInput(format!("pair index {i} out of range for m = {m}")));
    }
    let n = m + 3;
    let h = (m / 2) as i64;
    let mi = m as i64;
    let t = |p: i64, q: i64, r: i64| AbelTree::tripod_mod(p, q, r, n);
    let (case_id, kept, old, new) = if m % 2 == 0 {
        if i == 1 {
            (1, t(h, h + 1, h + 3), t(h + 1, h + 3, h + 4), t(h, h + 2, h + 3))
        } else if i == m - 1 {
            (2, t(1, 2, mi + 2), t(2, mi + 2, mi + 3), t(1, mi + 1, mi + 2))
        } else if i % 2 == 0 {
            let k = (i / 2) as i64;
            (3, t(h + 1 - k, h + 2 + k, h + 3 + k), t(h + 1 - k, h + 2 - k, h + 3 + k), t(h - k, h + 1 - k, h + 2 + k))
        } else {
            let k = (i as i64 + 1) / 2;
            (4, t(h + 1 - k, h + 2 - k, h + 2 + k), t(h + 2 - k, h + 2 + k, h + 3 + k), t(h + 1 - k, h + 1 + k, h + 2 + k))
        }
    } else if i == 1 {
        (5, t(h + 1, h + 3, h + 4), t(h + 1, h + 2, h + 4), t(h, h + 1, h + 3))
    } else if i == m - 1 {
        (6, t(1, 2, mi + 2), t(2, mi + 2, mi + 3), t(1, mi + 1, mi + 2))
    } else if i % 2 == 0 {
        let k = (i / 2) as i64;
        (7, t(h + 1 - k, h + 2 - k, h + 3 + k), t(h + 2 - k, h + 3 + k, h + 4 + k), t(h + 1 - k, h + 2 + k, h + 3 + k))
    } else {
        let k = (i as i64 + 1) / 2;
        (8, t(h + 2 - k, h + 2 + k, h + 3 + k), t(h + 2 - k, h + 3 - k, h + 3 + k), t(h + 1 - k, h + 2 - k, h + 2 + k))
    };
    Ok(PairCase { case_id, kept, old, new })
}

/// Trees of pair i after `state` net ccw crossings of that pair's walls.
///
/// Two crossings per pair rotate the whole picture by one asymptotic
/// direction (θ ↦ θ + 2π/3 relabels l_k ↦ l_{k-1}), so the state space is
/// ref -> first-crossing -> ref shifted by -1 -> ...
pub fn pair_trees(m: usize, i: usize, state: i64) -> Result<[AbelTree; 2]> {
    let c = reference_case(m, i)?;
    let n = m + 3;
    let q = state.div_euclid(2);
    let (a, b) = if state.rem_euclid(2) == 0 { (c.kept, c.old) } else { (c.kept, c.new) };
    Ok([a.shift(-q, n), b.shift(-q, n)])
}

/// Per-pair crossing counts relative to the reference chamber.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChamberState {
    pub m: usize,
    pub states: Vec<i64>,
}

impl ChamberState {
    pub fn reference(m: usize) -> Self {
        ChamberState { m, states: vec![0; m.saturating_sub(1)] }
    }

    /// Between two walls of one pair every other pair crosses exactly once,
    /// so reachable states differ by at most one.
    pub fn is_reachable(&self) -> bool {
        match (self.states.iter().max(), self.states.iter().min()) {
            (Some(a), Some(b)) => a - b <= 1,
            _ => true,
        }
    }

    pub fn collection(&self) -> Result<TreeCollection> {
        if !self.is_reachable() {
            return Err(Error::UnsupportedChamber(format!("crossing counts {:?} are not reachable", self.states)));
        }
        let n = self.m + 3;
        let mut trees: BTreeSet<AbelTree> = frozen_fan(n).into_iter().collect();
        for (k, &s) in self.states.iter().enumerate() {
            for t in pair_trees(self.m, k + 1, s)? {
                trees.insert(t);
            }
        }
        Ok(TreeCollection { m: self.m, trees, chamber: self.word() })
    }

    /// Round-robin crossing word from the reference chamber to this one.
    /// Within a round, pairs that end further along cross first: their walls
    /// precede the others' in every sweep reaching this state.
    pub fn word(&self) -> Vec<Crossing> {
        let mut done = vec![0i64; self.states.len()];
        let mut out = vec![];
        let mut order: Vec<usize> = (0..self.states.len()).collect();
        order.sort_by_key(|&i| -self.states[i].abs());
        loop {
            let mut moved = false;
            for &i in &order {
                let s = self.states[i];
                if done[i] != s {
                    let direction = if s > done[i] { Direction::Ccw } else { Direction::Cw };
                    done[i] += direction.sign();
                    out.push(Crossing { pair: i + 1, direction });
                    moved = true;
                }
            }
            if !moved {
                return out;
            }
        }
    }

    /// Net crossing counts along a word.
    pub fn from_word(m: usize, word: &[Crossing]) -> Self {
        let mut states = vec![0; m.saturating_sub(1)];
        for c in word {
            states[c.pair - 1] += c.direction.sign();
        }
        ChamberState { m, states }
    }
}

/// Locate the crossing state of pair i inside a collection. The recorded
/// crossing word wins: after a half turn the pairs can trade tree sets
/// (m = 3 is symmetric under a shift by 3), so membership alone is ambiguous.
pub fn pair_state(collection: &TreeCollection, i: usize) -> Result<i64> {
    let period = 2 * (collection.m as i64 + 3);
    if i >= 1 && i < collection.m {
        let s = ChamberState::from_word(collection.m, &collection.chamber).states[i - 1];
        let p = pair_trees(collection.m, i, s)?;
        if collection.contains(&p[0]) && collection.contains(&p[1]) {
            return Ok(s.rem_euclid(period));
        }
    }
    for s in 0..period {
        let p = pair_trees(collection.m, i, s)?;
        if collection.contains(&p[0]) && collection.contains(&p[1]) {
            return Ok(s);
        }
    }
    Err(Error::CaseMismatch(format!("no tree pair of zeros ({i},{}) found in the collection", i + 1)))
}

/// Cross the wall of pair (z_i, z_{i+1}) adjacent to the current chamber.
/// Exactly one tree of the pair is replaced.
pub fn wall_cross(collection: &TreeCollection, i: usize, direction: Direction) -> Result<TreeCollection> {
    let mut word = collection.chamber.clone();
    word.push(Crossing { pair: i, direction });
    if !ChamberState::from_word(collection.m, &word).is_reachable() {
        return Err(Error::UnsupportedChamber(format!("pair {i} cannot be crossed twice before its neighbours")));
    }
    let s = pair_state(collection, i)?;
    let before = pair_trees(collection.m, i, s)?;
    let after = pair_trees(collection.m, i, s + direction.sign())?;
    let mut trees = collection.trees.clone();
    for t in before.iter() {
        if !after.contains(t) {
            trees.remove(t);
        }
    }
    for t in after.iter() {
        if !before.contains(t) {
            if trees.contains(t) {
                return Err(Error::CaseMismatch(format!("crossing would duplicate {t}")));
            }
            trees.insert(t.clone());
        }
    }
    let mut chamber = collection.chamber.clone();
    chamber.push(Crossing { pair: i, direction });
    Ok(TreeCollection { m: collection.m, trees, chamber })
}

/// The tree removed and the tree added by a crossing.
pub fn crossing_delta(collection: &TreeCollection, i: usize, direction: Direction) -> Result<(AbelTree, AbelTree)> {
    let s = pair_state(collection, i)?;
    let before = pair_trees(collection.m, i, s)?;
    let after = pair_trees(collection.m, i, s + direction.sign())?;
    let gone: Vec<_> = before.iter().filter(|t| !after.contains(t)).cloned().collect();
    let came: Vec<_> = after.iter().filter(|t| !before.contains(t)).cloned().collect();
    if gone.len() != 1 || came.len() != 1 {
        return Err(Error::CaseMismatch(format!("pair {i} crossing changes {} trees", gone.len())));
    }
    Ok((gone[0].clone(), came[0].clone()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Color {
    Black,
    White,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Node {
    /// Boundary node sitting on asymptotic direction l_k.
    Boundary(usize),
    Interior(usize),
}

/// Node/edge structure of a tree together with a proper 2-colouring.
#[derive(Clone, Debug, Serialize)]
pub struct Bipartition {
    pub nodes: Vec<Node>,
    pub edges: Vec<(usize, usize)>,
    pub coloring: Vec<Color>,
}

impl Bipartition {
    pub fn is_proper(&self) -> bool {
        self.edges.iter().all(|&(a, b)| self.coloring[a] != self.coloring[b])
    }
}

pub fn bipartify(tree: &AbelTree) -> Bipartition {
    match tree {
        AbelTree::Tripod(t) => {
            // junction white, the three leaves black
            let nodes = vec![Node::Interior(0), Node::Boundary(t[0]), Node::Boundary(t[1]), Node::Boundary(t[2])];
            Bipartition {
                nodes,
                edges: vec![(0, 1), (0, 2), (0, 3)],
                coloring: vec![Color::White, Color::Black, Color::Black, Color::Black],
            }
        }
        AbelTree::Hexapod(c) => {
            // black centre, three white junctions each carrying two black legs
            let mut nodes = vec![Node::Interior(0), Node::Interior(1), Node::Interior(2), Node::Interior(3)];
            let mut coloring = vec![Color::Black, Color::White, Color::White, Color::White];
            let mut edges = vec![(0, 1), (0, 2), (0, 3)];
            for (k, &leaf) in c.iter().enumerate() {
                nodes.push(Node::Boundary(leaf));
                coloring.push(Color::Black);
                edges.push((1 + k / 2, nodes.len() - 1));
            }
            Bipartition { nodes, edges, coloring }
        }
    }
}

/// Mutable parts of the first six chambers of the three-zero example,
/// ccw from θ_0.
pub fn example_rows() -> Vec<Vec<AbelTree>> {
    let t = AbelTree::tripod;
    let hex = AbelTree::hexapod(&[2, 3, 4, 5, 6, 1]);
    vec![
        vec![hex.clone(), t(1, 3, 6), t(2, 3, 6), t(1, 4, 6)],
        vec![hex, t(2, 4, 5), t(2, 3, 6), t(1, 4, 6)],
        vec![t(2, 4, 6), t(2, 4, 5), t(2, 3, 6), t(1, 4, 6)],
        vec![t(2, 4, 6), t(2, 4, 5), t(2, 3, 6), t(2, 5, 6)],
        vec![t(2, 4, 6), t(3, 4, 6), t(2, 3, 6), t(2, 5, 6)],
        vec![t(2, 4, 6), t(3, 4, 6), t(1, 2, 4), t(2, 5, 6)],
    ]
}

pub fn example_sequence() -> Vec<TreeCollection> {
    example_rows()
        .into_iter()
        .map(|row| {
            let mut trees: BTreeSet<AbelTree> = frozen_fan(6).into_iter().collect();
            trees.extend(row);
            TreeCollection { m: 3, trees, chamber: vec![] }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[[usize; 3]]) -> BTreeSet<AbelTree> {
        v.iter().map(|t| AbelTree::tripod(t[0], t[1], t[2])).collect()
    }

    #[test]
    fn reference_lists_small_m() {
        let c2 = reference_collection(2).unwrap();
        assert_eq!(c2.mutable_part().into_iter().collect::<BTreeSet<_>>(), set(&[[2, 4, 5], [1, 2, 4]]));
        let c3 = reference_collection(3).unwrap();
        assert_eq!(
            c3.mutable_part().into_iter().collect::<BTreeSet<_>>(),
            set(&[[1, 2, 5], [2, 5, 6], [2, 3, 5], [2, 4, 5]])
        );
        for m in 2..=9 {
            let c = reference_collection(m).unwrap();
            assert_eq!(c.trees.len(), 3 * m + 1);
            assert_eq!(c.mutable_part().len(), 2 * m - 2);
            assert_eq!(c.frozen().len(), m + 3);
        }
    }

    #[test]
    fn pairs_partition_the_reference_cluster() {
        for m in 2..=9 {
            let c = reference_collection(m).unwrap();
            let mut seen = BTreeSet::new();
            for i in 1..m {
                let p = reference_case(m, i).unwrap();
                assert!(c.contains(&p.kept) && c.contains(&p.old), "m={m} i={i}");
                assert!(!c.contains(&p.new));
                seen.insert(p.kept);
                seen.insert(p.old);
            }
            assert_eq!(seen.len(), 2 * m - 2);
        }
    }

    #[test]
    fn jumping_example_m2() {
        let c = reference_collection(2).unwrap();
        let d = wall_cross(&c, 1, Direction::Ccw).unwrap();
        assert_eq!(d.mutable_part().into_iter().collect::<BTreeSet<_>>(), set(&[[1, 2, 4], [1, 3, 4]]));
        let back = wall_cross(&d, 1, Direction::Cw).unwrap();
        assert!(back.same_trees(&c));
    }

    #[test]
    fn m3_list_after_one_crossing_per_pair() {
        let s = ChamberState { m: 3, states: vec![1, 1] };
        let c = s.collection().unwrap();
        assert_eq!(c.mutable_part().into_iter().collect::<BTreeSet<_>>(), set(&[[1, 2, 4], [2, 4, 5], [1, 2, 5], [1, 4, 5]]));
    }

    #[test]
    fn case5_m3() {
        let p = reference_case(3, 1).unwrap();
        assert_eq!(p.case_id, 5);
        assert_eq!(p.old, AbelTree::tripod(2, 3, 5));
        assert_eq!(p.kept, AbelTree::tripod(2, 4, 5));
        assert_eq!(p.new, AbelTree::tripod(1, 2, 4));
    }

    #[test]
    fn two_crossings_rotate() {
        for m in 2..=8 {
            let mut c = reference_collection(m).unwrap();
            for _ in 0..2 {
                for i in 1..m {
                    c = wall_cross(&c, i, Direction::Ccw).unwrap();
                }
            }
            assert!(c.same_trees(&reference_collection(m).unwrap().shift(-1)));
        }
    }

    #[test]
    fn full_turn_walk_matches_direct_states() {
        for m in 2..=5 {
            let mut c = reference_collection(m).unwrap();
            let mut st = ChamberState::reference(m);
            for _ in 0..8 {
                for i in 1..m {
                    c = wall_cross(&c, i, Direction::Ccw).unwrap();
                    st.states[i - 1] += 1;
                    assert!(c.same_trees(&st.collection().unwrap()), "m={m} {:?}", st.states);
                }
            }
        }
    }

    #[test]
    fn bipartitions_are_proper() {
        assert!(bipartify(&AbelTree::tripod(1, 2, 4)).is_proper());
        let h = bipartify(&AbelTree::hexapod(&[2, 3, 4, 5, 6, 1]));
        assert!(h.is_proper());
        for (node, col) in h.nodes.iter().zip(&h.coloring) {
            if let Node::Boundary(_) = node {
                assert_eq!(*col, Color::Black);
            }
        }
    }

    #[test]
    fn table_rows_differ_by_one() {
        let rows = example_sequence();
        for w in rows.windows(2) {
            assert_eq!(w[0].trees.difference(&w[1].trees).count(), 1);
        }
    }
}
