//! Quivers with frozen vertices, mutation, and the quivers Q(φ,θ) attached
//! to tree collections.
//!
//! A quiver is stored as a skew-symmetric integer matrix `b` with
//! `b[i][j]` = (#arrows i→j) − (#arrows j→i). Vertices carry the tree that
//! labels them, so two quivers are compared by their labelled arrow multisets.

use crate::error::{Error, Result};
use crate::trees::{self, AbelTree, TreeCollection};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Quiver {
    pub vertices: Vec<AbelTree>,
    pub frozen: Vec<bool>,
    pub b: Vec<Vec<i64>>,
}

impl Quiver {
    pub fn new(vertices: Vec<AbelTree>, frozen: Vec<bool>) -> Self {
        let n = vertices.len();
        Quiver { vertices, frozen, b: vec![vec![0; n]; n] }
    }

    /// Build from an arrow list. Opposite arrows cancel; loops are rejected.
    pub fn from_arrows(vertices: Vec<AbelTree>, frozen: Vec<bool>, arrows: &[(usize, usize)]) -> Result<Self> {
        let mut q = Quiver::new(vertices, frozen);
        for &(s, t) in arrows {
            q.add_arrow(s, t)?;
        }
        Ok(q)
    }

    pub fn add_arrow(&mut self, s: usize, t: usize) -> Result<()> {
        if s == t {
            return Err(Error::InvalidInput(format!("loop at {}", self.vertices[s])));
        }
        self.b[s][t] += 1;
        self.b[t][s] -= 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn index_of(&self, t: &AbelTree) -> Option<usize> {
        self.vertices.iter().position(|v| v == t)
    }

    pub fn mutable_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.frozen[i]).collect()
    }

    /// Arrows into k with multiplicity.
    pub fn in_arrows(&self, k: usize) -> Vec<(usize, i64)> {
        (0..self.len()).filter(|&j| self.b[j][k] > 0).map(|j| (j, self.b[j][k])).collect()
    }

    pub fn out_arrows(&self, k: usize) -> Vec<(usize, i64)> {
        (0..self.len()).filter(|&j| self.b[k][j] > 0).map(|j| (j, self.b[k][j])).collect()
    }

    /// Labelled arrow multiset: (source tree, target tree) -> multiplicity.
    pub fn arrow_multiset(&self) -> BTreeMap<(AbelTree, AbelTree), i64> {
        let mut out = BTreeMap::new();
        for i in 0..self.len() {
            for j in 0..self.len() {
                if self.b[i][j] > 0 {
                    out.insert((self.vertices[i].clone(), self.vertices[j].clone()), self.b[i][j]);
                }
            }
        }
        out
    }

    /// Quiver mutation at k: complete paths i→k→j, reverse arrows at k,
    /// cancel 2-cycles. Arrows between two frozen vertices are dropped.
    pub fn mutate(&self, k: usize) -> Result<Quiver> {
        if self.frozen[k] {
            return Err(Error::FrozenVertex(self.vertices[k].to_string()));
        }
        let n = self.len();
        let b = &self.b;
        let mut nb = vec![vec![0i64; n]; n];
        for i in 0..n {
            for j in 0..n {
                nb[i][j] = if i == k || j == k {
                    -b[i][j]
                } else {
                    b[i][j] + (b[i][k].abs() * b[k][j] + b[i][k] * b[k][j].abs()) / 2
                };
                if self.frozen[i] && self.frozen[j] {
                    nb[i][j] = 0;
                }
            }
        }
        Ok(Quiver { vertices: self.vertices.clone(), frozen: self.frozen.clone(), b: nb })
    }

    /// Seed mutation: mutate the quiver and relabel vertex k by `new_var`.
    pub fn mutate_seed(&self, k: usize, new_var: AbelTree) -> Result<Quiver> {
        let mut q = self.mutate(k)?;
        q.vertices[k] = new_var;
        Ok(q)
    }

    pub fn mutable_subquiver(&self) -> Quiver {
        let idx = self.mutable_indices();
        Quiver {
            vertices: idx.iter().map(|&i| self.vertices[i].clone()).collect(),
            frozen: vec![false; idx.len()],
            b: idx.iter().map(|&i| idx.iter().map(|&j| self.b[i][j]).collect()).collect(),
        }
    }

    /// Skew-symmetry, no loops, no arrows between frozen vertices.
    pub fn is_well_formed(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            self.b[i][i] == 0
                && (0..n).all(|j| self.b[i][j] == -self.b[j][i] && !(self.frozen[i] && self.frozen[j] && self.b[i][j] != 0))
        })
    }

    /// Mutable vertices whose in- and out-arrows carry the same multiset of
    /// asymptotic indices (needed for X_T to be scale invariant).
    pub fn unbalanced_vertices(&self) -> Vec<AbelTree> {
        let mut bad = vec![];
        for k in self.mutable_indices() {
            let mut count: BTreeMap<usize, i64> = BTreeMap::new();
            for (j, mult) in self.in_arrows(k) {
                for a in self.vertices[j].indices() {
                    *count.entry(a).or_default() += mult;
                }
            }
            for (j, mult) in self.out_arrows(k) {
                for a in self.vertices[j].indices() {
                    *count.entry(a).or_default() -= mult;
                }
            }
            if count.values().any(|&c| c != 0) {
                bad.push(self.vertices[k].clone());
            }
        }
        bad
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph Q {\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let shape = if self.frozen[i] { "box" } else { "ellipse" };
            let _ = writeln!(s, "  \"{}\" [shape={shape}];", v.short_name());
        }
        for ((a, b), m) in self.arrow_multiset() {
            for _ in 0..m {
                let _ = writeln!(s, "  \"{}\" -> \"{}\";", a.short_name(), b.short_name());
            }
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let arrows: Vec<_> = self
            .arrow_multiset()
            .into_iter()
            .map(|((a, b), m)| serde_json::json!({"from": a.short_name(), "to": b.short_name(), "mult": m}))
            .collect();
        let vertices: Vec<_> = self
            .vertices
            .iter()
            .zip(&self.frozen)
            .map(|(v, f)| serde_json::json!({"tree": v.short_name(), "frozen": f}))
            .collect();
        serde_json::json!({ "vertices": vertices, "arrows": arrows })
    }
}

/// zz' = ∏_{y→z} y + ∏_{z→y} y, kept symbolic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExchangeRelation {
    pub old: AbelTree,
    pub new: Option<AbelTree>,
    /// Sources of arrows into the vertex, with multiplicity.
    pub incoming: Vec<(AbelTree, i64)>,
    pub outgoing: Vec<(AbelTree, i64)>,
}

impl std::fmt::Display for ExchangeRelation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mono = |v: &[(AbelTree, i64)]| {
            v.iter()
                .map(|(t, m)| if *m == 1 { t.to_string() } else { format!("{t}^{m}") })
                .collect::<Vec<_>>()
                .join("·")
        };
        let new = self.new.as_ref().map(|t| t.to_string()).unwrap_or_else(|| "?".into());
        write!(f, "{}·{} = {} + {}", self.old, new, mono(&self.incoming), mono(&self.outgoing))
    }
}

pub fn exchange_relation(q: &Quiver, k: usize, new: Option<AbelTree>) -> Result<ExchangeRelation> {
    if q.frozen[k] {
        return Err(Error::FrozenVertex(q.vertices[k].to_string()));
    }
    let lab = |v: Vec<(usize, i64)>| v.into_iter().map(|(j, m)| (q.vertices[j].clone(), m)).collect::<Vec<_>>();
    Ok(ExchangeRelation { old: q.vertices[k].clone(), new, incoming: lab(q.in_arrows(k)), outgoing: lab(q.out_arrows(k)) })
}

/// Closed form X_T = A_{num0}A_{num1} / (A_{den0}A_{den1}) of a reference
/// tree, as listed per adjacent-zero case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct XForm {
    pub case_id: u8,
    pub pair: usize,
    pub tree: AbelTree,
    pub num: [AbelTree; 2],
    pub den: [AbelTree; 2],
}

/// The closed-form spectral coordinates of the reference chamber, two per
/// adjacent pair of zeros, transcribed case by case.
pub fn reference_x_forms(m: usize) -> Result<Vec<XForm>> {
    if m < 2 {
        return Err(Error::InvalidInput(format!("degree must be >= 2, got {m}")));
    }
    let nn = m + 3;
    let mi = m as i64;
    let h = (m / 2) as i64;
    let t = |p: i64, q: i64, r: i64| AbelTree::tripod_mod(p, q, r, nn);
    let mut out = vec![];
    for i in 1..m {
        let case = trees::reference_case(m, i)?.case_id;
        let n = h;
        let forms: Vec<(AbelTree, [AbelTree; 2], [AbelTree; 2])> = match case {
            1 => vec![
                (t(n, n + 1, n + 3), [t(n, n + 1, n + 2), t(n + 1, n + 3, n + 4)], [t(n, n + 1, n + 4), t(n + 1, n + 2, n + 3)]),
                (t(n + 1, n + 3, n + 4), [t(n, n + 3, n + 4), t(n + 1, n + 2, n + 3)], [t(n, n + 1, n + 3), t(n + 2, n + 3, n + 4)]),
            ],
            2 | 6 => vec![
                (t(1, 2, mi + 2), [t(1, 2, 3), t(2, mi + 2, mi + 3)], [t(2, 3, mi + 2), t(1, 2, mi + 3)]),
                (t(2, mi + 2, mi + 3), [t(2, mi + 1, mi + 2), t(1, mi + 2, mi + 3)], [t(1, 2, mi + 2), t(mi + 1, mi + 2, mi + 3)]),
            ],
            3 => {
                let k = (i / 2) as i64;
                vec![
                    (
                        t(n + 1 - k, n + 2 + k, n + 3 + k),
                        [t(n + 1 - k, n + 2 - k, n + 3 + k), t(n + 2 + k, n + 3 + k, n + 4 + k)],
                        [t(n + 1 - k, n + 3 + k, n + 4 + k), t(n + 2 - k, n + 2 + k, n + 3 + k)],
                    ),
                    (
                        t(n + 1 - k, n + 2 - k, n + 3 + k),
                        [t(n + 1 - k, n + 2 - k, n + 2 + k), t(n - k, n + 1 - k, n + 3 + k)],
                        [t(n + 1 - k, n + 2 + k, n + 3 + k), t(n - k, n + 1 - k, n + 2 - k)],
                    ),
                ]
            }
            4 => {
                let k = ((i + 1) / 2) as i64;
                vec![
                    (
                        t(n + 1 - k, n + 2 - k, n + 2 + k),
                        [t(n + 1 - k, n + 2 - k, n + 3 - k), t(n + 2 - k, n + 2 + k, n + 3 + k)],
                        [t(n + 2 - k, n + 3 - k, n + 2 + k), t(n + 1 - k, n + 2 - k, n + 3 + k)],
                    ),
                    (
                        t(n + 2 - k, n + 2 + k, n + 3 + k),
                        [t(n + 1 + k, n + 2 + k, n + 3 + k), t(n + 1 - k, n + 2 - k, n + 2 + k)],
                        [t(n + 2 - k, n + 1 + k, n + 2 + k), t(n + 1 - k, n + 2 + k, n + 3 + k)],
                    ),
                ]
            }
            5 => vec![
                (t(n + 1, n + 3, n + 4), [t(n + 1, n + 2, n + 4), t(n + 3, n + 4, n + 5)], [t(n + 1, n + 4, n + 5), t(n + 2, n + 3, n + 4)]),
                (t(n + 1, n + 2, n + 4), [t(n, n + 1, n + 4), t(n + 1, n + 2, n + 3)], [t(n, n + 1, n + 2), t(n + 1, n + 3, n + 4)]),
            ],
            7 => {
                let k = (i / 2) as i64;
                vec![
                    (
                        t(n + 1 - k, n + 2 - k, n + 3 + k),
                        [t(n + 1 - k, n + 2 - k, n + 3 - k), t(n + 2 - k, n + 3 + k, n + 4 + k)],
                        [t(n + 2 - k, n + 3 - k, n + 3 + k), t(n + 1 - k, n + 2 - k, n + 4 + k)],
                    ),
                    (
                        t(n + 2 - k, n + 3 + k, n + 4 + k),
                        [t(n + 1 - k, n + 3 + k, n + 4 + k), t(n + 2 - k, n + 2 + k, n + 3 + k)],
                        [t(n + 1 - k, n + 2 - k, n + 3 + k), t(n + 2 + k, n + 3 + k, n + 4 + k)],
                    ),
                ]
            }
            8 => {
                let k = ((i + 1) / 2) as i64;
                vec![
                    (
                        t(n + 2 - k, n + 2 + k, n + 3 + k),
                        [t(n + 2 - k, n + 3 + k, n + 4 + k), t(n + 3 - k, n + 2 + k, n + 3 + k)],
                        [t(n + 2 + k, n + 3 + k, n + 4 + k), t(n + 2 - k, n + 3 - k, n + 3 + k)],
                    ),
                    (
                        t(n + 2 - k, n + 3 - k, n + 3 + k),
                        [t(n + 1 - k, n + 3 + k, n + 4 + k), t(n + 2 - k, n + 2 + k, n + 3 + k)],
                        [t(n + 2 + k, n + 3 + k, n + 4 + k), t(n + 1 - k, n + 2 - k, n + 3 + k)],
                    ),
                ]
            }
            _ => unreachable!(),
        };
        for (tree, num, den) in forms {
            out.push(XForm { case_id: case, pair: i, tree, num, den });
        }
    }
    Ok(out)
}

/// Three-term Plücker relations A_T·A_T' = A_{S1}A_{S2} + A_{S3}A_{S4} in which
/// every tree on the right lies in the collection and T' does not.
/// Returns (T', {S1,S2}, {S3,S4}).
pub fn plucker_exchanges(collection: &TreeCollection, t: &AbelTree) -> Vec<(AbelTree, [AbelTree; 2], [AbelTree; 2])> {
    let n = collection.n();
    let idx = match t {
        AbelTree::Tripod(x) => *x,
        _ => return vec![],
    };
    // cyclic position strictly between a and c going up from a
    let between = |a: usize, c: usize, x: usize| {
        let d = |u: usize| (u + n - a) % n;
        d(x) > 0 && d(x) < d(c)
    };
    let mut out: Vec<(AbelTree, [AbelTree; 2], [AbelTree; 2])> = vec![];
    for si in 0..3 {
        let s = idx[si];
        let (a, c) = match si {
            0 => (idx[1], idx[2]),
            1 => (idx[0], idx[2]),
            _ => (idx[0], idx[1]),
        };
        for b in 1..=n {
            for d in (b + 1)..=n {
                if idx.contains(&b) || idx.contains(&d) {
                    continue;
                }
                if between(a, c, b) == between(a, c, d) {
                    continue;
                }
                let tt = AbelTree::tripod;
                let tp = tt(s, b, d);
                if collection.contains(&tp) {
                    continue;
                }
                let m1 = [tt(s, a, b), tt(s, c, d)];
                let m2 = [tt(s, a, d), tt(s, b, c)];
                if m1.iter().chain(m2.iter()).all(|x| collection.contains(x)) {
                    out.push((tp, m1, m2));
                }
            }
        }
    }
    out
}

/// Arrows at each mutable vertex read off from its exchange relation; the
/// orientation of each connected mutable component is fixed by propagating
/// consistency from a seed arrow.
fn orient_relations(
    collection: &TreeCollection,
    relations: &BTreeMap<AbelTree, ([AbelTree; 2], [AbelTree; 2])>,
    seed_arrow: (&AbelTree, &AbelTree),
) -> Result<Quiver> {
    let vertices: Vec<AbelTree> = collection.trees.iter().cloned().collect();
    let n = collection.n();
    let frozen: Vec<bool> = vertices.iter().map(|v| v.is_frozen(n)).collect();
    // orientation[T] = true means the first monomial is the incoming one
    let mut orient: BTreeMap<AbelTree, bool> = BTreeMap::new();
    let mut stack: Vec<AbelTree> = vec![];
    let (src, dst) = seed_arrow;
    for (t, (m1, m2)) in relations {
        if t == dst && m1.contains(src) {
            orient.insert(t.clone(), true);
        } else if t == dst && m2.contains(src) {
            orient.insert(t.clone(), false);
        } else if t == src && m1.contains(dst) {
            orient.insert(t.clone(), false);
        } else if t == src && m2.contains(dst) {
            orient.insert(t.clone(), true);
        } else {
            continue;
        }
        stack.push(t.clone());
    }
    if stack.is_empty() {
        return Err(Error::OrientationAmbiguous(format!("no relation contains the arrow {src} -> {dst}")));
    }
    while let Some(t) = stack.pop() {
        let (m1, m2) = &relations[&t];
        let (inc, outg) = if orient[&t] { (m1, m2) } else { (m2, m1) };
        for (u, u_is_source) in inc.iter().map(|u| (u, true)).chain(outg.iter().map(|u| (u, false))) {
            let Some((u1, u2)) = relations.get(u) else { continue };
            // arrow u -> t (u_is_source) means t is in u's outgoing monomial
            let t_in_first = if u1.contains(&t) {
                true
            } else if u2.contains(&t) {
                false
            } else {
                return Err(Error::OrientationAmbiguous(format!("{u} is adjacent to {t} but not conversely")));
            };
            let want = if u_is_source { !t_in_first } else { t_in_first };
            match orient.get(u) {
                Some(&o) if o != want => {
                    return Err(Error::OrientationAmbiguous(format!("conflicting orientation at {u}")));
                }
                Some(_) => {}
                None => {
                    orient.insert(u.clone(), want);
                    stack.push(u.clone());
                }
            }
        }
    }
    let mut q = Quiver::new(vertices, frozen);
    for (t, (m1, m2)) in relations {
        let Some(&o) = orient.get(t) else {
            return Err(Error::OrientationAmbiguous(format!("component of {t} not reached from the convention arrow")));
        };
        let (inc, outg) = if o { (m1, m2) } else { (m2, m1) };
        let k = q.index_of(t).unwrap();
        for u in inc {
            let j = q.index_of(u).ok_or_else(|| Error::CaseMismatch(format!("{u} missing")))?;
            // mutable-mutable arrows are recorded from the target side only
            if q.frozen[j] || q.b[j][k] == 0 {
                q.b[j][k] = 1;
                q.b[k][j] = -1;
            }
        }
        for u in outg {
            let j = q.index_of(u).ok_or_else(|| Error::CaseMismatch(format!("{u} missing")))?;
            if q.frozen[j] || q.b[k][j] == 0 {
                q.b[k][j] = 1;
                q.b[j][k] = -1;
            }
        }
    }
    Ok(q)
}

/// Q(φ_m,θ) in the reference chamber. Each mutable tree's arrows come from
/// its unique three-term Plücker exchange inside the collection; the global
/// orientation is fixed by the convention arrow T_{1,2,3} → T_{1,2,m+2}.
pub fn reference_quiver(m: usize) -> Result<Quiver> {
    let c = trees::reference_collection(m)?;
    let mut rel = BTreeMap::new();
    for t in c.mutable_part() {
        let e = plucker_exchanges(&c, &t);
        if e.len() != 1 {
            return Err(Error::OrientationAmbiguous(format!("{t} has {} exchange candidates", e.len())));
        }
        let (_, m1, m2) = e.into_iter().next().unwrap();
        rel.insert(t, (m1, m2));
    }
    let a = AbelTree::tripod(1, 2, 3);
    let b = AbelTree::tripod(1, 2, m + 2);
    orient_relations(&c, &rel, (&a, &b))
}

/// Quiver of an arbitrary chamber: the reference quiver transported by the
/// seed mutations of the recorded crossing word.
pub fn build_quiver(collection: &TreeCollection) -> Result<Quiver> {
    let m = collection.m;
    let mut c = trees::reference_collection(m)?;
    let mut q = reference_quiver(m)?;
    for cr in &collection.chamber {
        let (gone, came) = trees::crossing_delta(&c, cr.pair, cr.direction)?;
        let k = q.index_of(&gone).ok_or_else(|| Error::CaseMismatch(format!("{gone} not a vertex")))?;
        q = q.mutate_seed(k, came)?;
        c = trees::wall_cross(&c, cr.pair, cr.direction)?;
    }
    let verts: BTreeSet<AbelTree> = q.vertices.iter().cloned().collect();
    if verts != collection.trees {
        return Err(Error::CaseMismatch("crossing word does not reproduce the collection".into()));
    }
    Ok(q)
}

/// Quiver for a chamber given by per-pair crossing counts.
pub fn quiver_for_state(state: &trees::ChamberState) -> Result<(TreeCollection, Quiver)> {
    let c = state.collection()?;
    let q = build_quiver(&c)?;
    Ok((c, q))
}

/// Number of mutation-equivalent quivers up to relabelling, by brute-force
/// canonical forms. Returns None if the class exceeds `cap` (not finite type
/// or too large to enumerate).
pub fn mutation_class_size(q: &Quiver, cap: usize) -> Option<usize> {
    let n = q.len();
    if n > 7 {
        return None;
    }
    let perms = permutations(n);
    let canon = |b: &Vec<Vec<i64>>| -> Vec<i64> {
        perms
            .iter()
            .map(|p| {
                let mut v = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        v.push(b[p[i]][p[j]]);
                    }
                }
                v
            })
            .min()
            .unwrap_or_default()
    };
    let start = Quiver { vertices: q.vertices.clone(), frozen: vec![false; n], b: q.b.clone() };
    let mut seen = BTreeSet::new();
    seen.insert(canon(&start.b));
    let mut stack = vec![start];
    while let Some(cur) = stack.pop() {
        for k in 0..n {
            let next = cur.mutate(k).ok()?;
            if next.b.iter().flatten().any(|x| x.abs() > 2) {
                return None;
            }
            if seen.insert(canon(&next.b)) {
                if seen.len() > cap {
                    return None;
                }
                stack.push(next);
            }
        }
    }
    Some(seen.len())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = vec![];
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn labelled(vertices: &[AbelTree], n: usize, arrows: &[(AbelTree, AbelTree)]) -> Quiver {
    let frozen = vertices.iter().map(|v| v.is_frozen(n)).collect();
    let mut q = Quiver::new(vertices.to_vec(), frozen);
    for (a, b) in arrows {
        let i = q.index_of(a).expect("vertex");
        let j = q.index_of(b).expect("vertex");
        q.b[i][j] = 1;
        q.b[j][i] = -1;
    }
    q
}

/// The arrows of the m = 2 reference quiver, hand-transcribed.
pub fn drawn_m2_arrows() -> Vec<(AbelTree, AbelTree)> {
    let t = AbelTree::tripod;
    vec![
        (t(1, 2, 3), t(1, 2, 4)),
        (t(1, 2, 4), t(2, 3, 4)),
        (t(2, 3, 4), t(2, 4, 5)),
        (t(2, 4, 5), t(1, 2, 4)),
        (t(1, 4, 5), t(2, 4, 5)),
        (t(2, 4, 5), t(3, 4, 5)),
        (t(1, 2, 4), t(1, 2, 5)),
    ]
}

/// Q(φ,θ_2) of the three-zero example. The drawing repeats the arrow
/// T_{1,4,6} → T_{2,4,6}; it is kept once (the exchange relation at T_{1,4,6}
/// has a single factor T_{2,4,6}).
pub fn drawn_quiver_theta2() -> Quiver {
    let t = AbelTree::tripod;
    let verts: Vec<AbelTree> = trees::example_sequence()[2].trees.iter().cloned().collect();
    let arrows = vec![
        (t(1, 2, 6), t(1, 4, 6)),
        (t(2, 4, 6), t(1, 2, 6)),
        (t(2, 4, 5), t(2, 4, 6)),
        (t(1, 2, 6), t(2, 3, 6)),
        (t(1, 4, 6), t(1, 5, 6)),
        (t(2, 3, 4), t(2, 3, 6)),
        (t(2, 3, 6), t(2, 4, 6)),
        (t(1, 4, 6), t(2, 4, 6)),
        (t(2, 4, 6), t(4, 5, 6)),
        (t(2, 3, 4), t(2, 4, 5)),
        (t(2, 3, 6), t(1, 2, 3)),
        (t(4, 5, 6), t(1, 4, 6)),
        (t(2, 4, 6), t(2, 3, 4)),
        (t(2, 4, 5), t(3, 4, 5)),
        (t(4, 5, 6), t(2, 4, 5)),
    ];
    labelled(&verts, 6, &arrows)
}

/// Q(φ,θ_0) of the three-zero example, as drawn.
pub fn drawn_quiver_theta0() -> Quiver {
    let t = AbelTree::tripod;
    let hex = AbelTree::hexapod(&[2, 3, 4, 5, 6, 1]);
    let verts: Vec<AbelTree> = trees::example_sequence()[0].trees.iter().cloned().collect();
    let arrows = vec![
        (t(3, 4, 5), t(1, 3, 6)),
        (hex.clone(), t(3, 4, 5)),
        (hex.clone(), t(1, 4, 6)),
        (t(1, 2, 6), t(1, 3, 6)),
        (t(2, 3, 6), t(4, 5, 6)),
        (hex.clone(), t(2, 3, 6)),
        (t(2, 3, 4), hex.clone()),
        (t(1, 3, 6), hex.clone()),
        (t(2, 3, 6), t(1, 2, 3)),
        (t(4, 5, 6), hex.clone()),
        (t(1, 4, 6), t(1, 5, 6)),
        (t(1, 4, 6), t(2, 3, 4)),
    ];
    labelled(&verts, 6, &arrows)
}

/// Quivers of the six chambers θ_0..θ_5, all obtained from Q(φ,θ_2) by
/// seed mutation along the table.
pub fn example_quivers() -> Result<Vec<Quiver>> {
    let rows = trees::example_sequence();
    let q2 = drawn_quiver_theta2();
    let step = |q: &Quiver, from: usize, to: usize| -> Result<Quiver> {
        let gone: Vec<_> = rows[from].trees.difference(&rows[to].trees).cloned().collect();
        let came: Vec<_> = rows[to].trees.difference(&rows[from].trees).cloned().collect();
        if gone.len() != 1 || came.len() != 1 {
            return Err(Error::CaseMismatch(format!("rows {from} and {to} differ in more than one tree")));
        }
        let k = q.index_of(&gone[0]).ok_or_else(|| Error::CaseMismatch(format!("{} missing", gone[0])))?;
        q.mutate_seed(k, came[0].clone())
    };
    let q1 = step(&q2, 2, 1)?;
    let q0 = step(&q1, 1, 0)?;
    let q3 = step(&q2, 2, 3)?;
    let q4 = step(&q3, 3, 4)?;
    let q5 = step(&q4, 4, 5)?;
    Ok(vec![q0, q1, q2, q3, q4, q5])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::Direction;

    #[test]
    fn drawn_m2_quiver_reproduced() {
        let q = reference_quiver(2).unwrap();
        let want: BTreeMap<_, _> = drawn_m2_arrows().into_iter().map(|a| (a, 1)).collect();
        assert_eq!(q.arrow_multiset(), want);
    }

    #[test]
    fn reference_quivers_are_balanced_and_contain_convention_arrow() {
        for m in 2..=9 {
            let q = reference_quiver(m).unwrap();
            assert!(q.is_well_formed());
            assert!(q.unbalanced_vertices().is_empty(), "m={m}");
            let a = q.index_of(&AbelTree::tripod(1, 2, 3)).unwrap();
            let b = q.index_of(&AbelTree::tripod(1, 2, m + 2)).unwrap();
            assert_eq!(q.b[a][b], 1);
            for k in q.mutable_indices() {
                let din: i64 = q.in_arrows(k).iter().map(|x| x.1).sum();
                let dout: i64 = q.out_arrows(k).iter().map(|x| x.1).sum();
                assert_eq!(din, dout);
            }
        }
    }

    #[test]
    fn old_tree_relations_match_the_cases() {
        for m in 2..=9 {
            let q = reference_quiver(m).unwrap();
            let c = trees::reference_collection(m).unwrap();
            for i in 1..m {
                let case = trees::reference_case(m, i).unwrap();
                let e = plucker_exchanges(&c, &case.old);
                assert_eq!(e[0].0, case.new, "m={m} i={i}");
                let k = q.index_of(&case.old).unwrap();
                let r = exchange_relation(&q, k, Some(case.new.clone())).unwrap();
                assert_eq!(r.incoming.len() + r.outgoing.len(), 4);
            }
        }
    }

    #[test]
    fn crossing_order_does_not_matter() {
        for m in 3..=6 {
            let mut a = trees::reference_collection(m).unwrap();
            let mut b = a.clone();
            for i in 1..m {
                a = trees::wall_cross(&a, i, Direction::Ccw).unwrap();
                b = trees::wall_cross(&b, m - i, Direction::Ccw).unwrap();
            }
            assert!(a.same_trees(&b));
            assert_eq!(build_quiver(&a).unwrap().arrow_multiset(), build_quiver(&b).unwrap().arrow_multiset());
        }
    }

    #[test]
    fn example_quivers_match_figures() {
        let qs = example_quivers().unwrap();
        assert_eq!(qs[0].arrow_multiset(), drawn_quiver_theta0().arrow_multiset());
        for q in &qs {
            assert!(q.is_well_formed());
        }
    }

    #[test]
    fn mutable_parts_have_dynkin_mutation_class() {
        let t = AbelTree::tripod;
        let v: Vec<AbelTree> = (0..6).map(|i| t(1, 2, 3 + i)).collect();
        let a2 = Quiver::from_arrows(v[..2].to_vec(), vec![false; 2], &[(0, 1)]).unwrap();
        let d4 = Quiver::from_arrows(v[..4].to_vec(), vec![false; 4], &[(0, 1), (1, 2), (1, 3)]).unwrap();
        let e6 = Quiver::from_arrows(v.clone(), vec![false; 6], &[(0, 1), (1, 2), (2, 3), (3, 4), (2, 5)]).unwrap();
        for (m, dynkin) in [(2, a2), (3, d4), (4, e6)] {
            let q = reference_quiver(m).unwrap().mutable_subquiver();
            let got = mutation_class_size(&q, 1000);
            assert!(got.is_some());
            assert_eq!(got, mutation_class_size(&dynkin, 1000), "m={m}");
        }
    }

    #[test]
    fn a2_mutation() {
        let t = AbelTree::tripod;
        let q = Quiver::from_arrows(vec![t(1, 2, 3), t(1, 2, 4)], vec![false, false], &[(0, 1)]).unwrap();
        let p = q.mutate(0).unwrap();
        assert_eq!(p.b[1][0], 1);
    }
}
