//! Dynamical type of a tree automorphism.
//!
//! Every automorphism either fixes a vertex (elliptic), swaps the ends of a
//! geometric edge (inversion) or translates a bi-infinite axis by its
//! translation length (hyperbolic). All three are read off the geodesic from
//! `o` to `o^a`: its midpoint lies in the minimal displacement set.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::automorphism::TreeAut;
use crate::error::{Error, Result};
use crate::tree::{distance, geodesic, walk_toward, DirectedEdge, Vertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Kind {
    Elliptic,
    Inversion,
    Hyperbolic,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Elliptic => "Elliptic",
            Kind::Inversion => "Inversion",
            Kind::Hyperbolic => "Hyperbolic",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the minimal displacement is attained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// A fixed vertex, or a vertex on the axis.
    Vertex(Vertex),
    /// The inverted geometric edge, as the positive edge between its ends.
    Edge(DirectedEdge),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Vertex(v) => write!(f, "{v}"),
            Witness::Edge(e) => write!(f, "{e}"),
        }
    }
}

impl Serialize for Witness {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ElementClass {
    pub kind: Kind,
    pub delta: usize,
    pub witness: Witness,
}

impl ElementClass {
    pub fn witness_vertex(&self) -> Option<&Vertex> {
        match &self.witness {
            Witness::Vertex(v) => Some(v),
            Witness::Edge(_) => None,
        }
    }
}

pub fn displacement(a: &TreeAut, x: &Vertex) -> usize {
    distance(x, &a.image_vertex(x))
}

/// Classifies `a` using the geodesic from `o` to `o^a` only.
pub fn classify(a: &TreeAut) -> ElementClass {
    let o = Vertex::root();
    let t = a.target().clone();
    let k = t.depth();
    if k == 0 {
        return ElementClass {
            kind: Kind::Elliptic,
            delta: 0,
            witness: Witness::Vertex(o),
        };
    }
    if k.is_multiple_of(2) {
        let m = walk_toward(&o, &t, k / 2);
        let mm = a.image_vertex(&m);
        if mm == m {
            ElementClass {
                kind: Kind::Elliptic,
                delta: 0,
                witness: Witness::Vertex(m),
            }
        } else {
            ElementClass {
                kind: Kind::Hyperbolic,
                delta: distance(&m, &mm),
                witness: Witness::Vertex(m),
            }
        }
    } else {
        let m1 = walk_toward(&o, &t, k / 2);
        let m2 = walk_toward(&o, &t, k / 2 + 1);
        let i1 = a.image_vertex(&m1);
        if i1 == m2 && a.image_vertex(&m2) == m1 {
            let e = if m2.depth() > m1.depth() {
                DirectedEdge::into_vertex(&m2).unwrap()
            } else {
                DirectedEdge::into_vertex(&m1).unwrap()
            };
            ElementClass {
                kind: Kind::Inversion,
                delta: 0,
                witness: Witness::Edge(e),
            }
        } else {
            ElementClass {
                kind: Kind::Hyperbolic,
                delta: distance(&m1, &i1),
                witness: Witness::Vertex(m1),
            }
        }
    }
}

fn require(cls: &ElementClass, kind: Kind) -> Result<()> {
    if cls.kind == kind {
        Ok(())
    } else {
        Err(Error::WrongClass {
            expected: kind.name(),
            got: cls.kind.name(),
        })
    }
}

/// The part of the axis of a hyperbolic `a` inside the ball of radius
/// `depth` about `o`, ordered in the direction of translation.
pub fn axis_segment(a: &TreeAut, depth: usize) -> Result<Vec<Vertex>> {
    let cls = classify(a);
    require(&cls, Kind::Hyperbolic)?;
    let m = cls.witness_vertex().unwrap().clone();
    let inv = a.inverse();

    // Depth along the axis is V-shaped; stop once it exceeds the radius and
    // is increasing.
    let run = |f: &TreeAut| {
        let mut pts = vec![m.clone()];
        loop {
            let next = f.image_vertex(pts.last().unwrap());
            let prev_depth = pts.last().unwrap().depth();
            let nd = next.depth();
            pts.push(next);
            if nd > depth && nd > prev_depth {
                break;
            }
        }
        pts
    };
    let forward = run(a);
    let mut backward = run(&inv);
    backward.reverse();
    backward.pop();
    let mut anchors = backward;
    anchors.extend(forward);

    let mut line = vec![anchors[0].clone()];
    for w in anchors.windows(2) {
        line.extend(geodesic(&w[0], &w[1]).into_iter().skip(1));
    }
    Ok(line.into_iter().filter(|x| x.depth() <= depth).collect())
}

/// Fixed vertices of an elliptic element within a bounded region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedTree {
    /// The fixed vertex the tree is grown from.
    pub root: Vertex,
    pub members: BTreeSet<Vertex>,
    pub truncation_depth: usize,
    /// Some member sits at distance exactly `truncation_depth` from the root.
    pub hit_boundary: bool,
}

#[derive(Serialize)]
struct FixedTreeJson<'a> {
    witness: &'a Vertex,
    depth: usize,
    fixed: Vec<&'a Vertex>,
    hit_boundary: bool,
}

impl FixedTree {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Largest distance from the root reached by a member.
    pub fn height(&self) -> usize {
        self.members
            .iter()
            .map(|v| distance(&self.root, v))
            .max()
            .unwrap_or(0)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(FixedTreeJson {
            witness: &self.root,
            depth: self.truncation_depth,
            fixed: self.members.iter().collect(),
            hit_boundary: self.hit_boundary,
        })
        .unwrap()
    }
}

/// Grows the fixed set of `a` from a fixed vertex `root`, visiting only
/// vertices accepted by `within`. The fixed set is a subtree, so a search
/// along fixed edges finds all of it inside any convex region.
pub fn explore_fixed<F>(a: &TreeAut, root: &Vertex, within: F) -> BTreeSet<Vertex>
where
    F: Fn(&Vertex) -> bool,
{
    let mut members = BTreeSet::new();
    if a.image_vertex(root) != *root || !within(root) {
        return members;
    }
    members.insert(root.clone());
    let mut queue = VecDeque::from([root.clone()]);
    while let Some(u) = queue.pop_front() {
        let perm = a.local_perm(&u);
        for c in 0..a.degree() {
            if perm.apply(c) != c {
                continue;
            }
            let n = u.step(c);
            if !members.contains(&n) && within(&n) {
                members.insert(n.clone());
                queue.push_back(n);
            }
        }
    }
    members
}

/// The fixed tree of an elliptic element, truncated at distance `depth` from
/// its witness.
pub fn fixed_tree(a: &TreeAut, depth: usize) -> Result<FixedTree> {
    let cls = classify(a);
    require(&cls, Kind::Elliptic)?;
    let root = cls.witness_vertex().unwrap().clone();
    Ok(fixed_tree_from(a, &root, depth))
}

/// Fixed tree grown from a known fixed vertex.
pub fn fixed_tree_from(a: &TreeAut, root: &Vertex, depth: usize) -> FixedTree {
    let members = explore_fixed(a, root, |x| distance(root, x) <= depth);
    let hit_boundary = members.iter().any(|x| distance(root, x) == depth);
    FixedTree {
        root: root.clone(),
        members,
        truncation_depth: depth,
        hit_boundary,
    }
}

/// Branching statistics of a fixed tree grown from its root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OffspringStats {
    /// `counts[k]`: internal non-root fixed vertices with `k` fixed children.
    pub counts: Vec<u64>,
    /// Number of fixed neighbors of the root.
    pub root_children: usize,
}

impl OffspringStats {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &OffspringStats) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

pub fn offspring_stats(ft: &FixedTree, d: u8) -> OffspringStats {
    let mut counts = vec![0u64; d as usize];
    let mut root_children = 0;
    for u in &ft.members {
        let du = distance(&ft.root, u);
        if du >= ft.truncation_depth {
            continue;
        }
        let kids = (0..d)
            .map(|c| u.step(c))
            .filter(|n| distance(&ft.root, n) == du + 1 && ft.members.contains(n))
            .count();
        if du == 0 {
            root_children = kids;
        } else {
            counts[kids] += 1;
        }
    }
    OffspringStats {
        counts,
        root_children,
    }
}
