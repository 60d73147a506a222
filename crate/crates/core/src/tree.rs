//! Coordinates on the d-regular tree.
//!
//! The coloring is fixed once and for all: the edge from `w` to its child
//! `w.i` carries color `i`, and every edge pointing back toward the base
//! vertex carries color `0`. The base vertex therefore has children
//! `0..d`, every other vertex has children `1..d` and reaches its parent
//! through color `0`. A vertex is identified with the color string read along
//! the geodesic from the base vertex.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub const MIN_DEGREE: usize = 3;
pub const MAX_DEGREE: usize = 32;

/// A vertex, addressed by its color path from the base vertex `o`.
///
/// Ordering is breadth-first: by depth, then lexicographically by digits.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Vertex(SmallVec<[u8; 24]>);

impl Vertex {
    pub fn root() -> Self {
        Vertex(SmallVec::new())
    }

    /// Builds a vertex from digits without checking them against a degree.
    pub fn from_digits(digits: &[u8]) -> Self {
        Vertex(SmallVec::from_slice(digits))
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parent(&self) -> Option<Vertex> {
        if self.0.is_empty() {
            None
        } else {
            Some(Vertex(SmallVec::from_slice(&self.0[..self.0.len() - 1])))
        }
    }

    pub fn last_digit(&self) -> Option<u8> {
        self.0.last().copied()
    }

    pub fn child(&self, color: u8) -> Vertex {
        let mut digits = self.0.clone();
        digits.push(color);
        Vertex(digits)
    }

    pub fn push(&mut self, color: u8) {
        self.0.push(color);
    }

    pub fn pop(&mut self) -> Option<u8> {
        self.0.pop()
    }

    /// The neighbor reached through the edge of the given color.
    pub fn step(&self, color: u8) -> Vertex {
        if color == 0 && !self.is_root() {
            self.parent().unwrap()
        } else {
            self.child(color)
        }
    }

    pub fn prefix(&self, len: usize) -> Vertex {
        Vertex(SmallVec::from_slice(&self.0[..len]))
    }

    pub fn is_prefix_of(&self, other: &Vertex) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn common_prefix_len(&self, other: &Vertex) -> usize {
        self.0
            .iter()
            .zip(other.0.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }

    /// Parses an address literal, checking syntax and the structural rule that
    /// non-leading digits are nonzero. Use [`Tree::parse_addr`] to also check
    /// the digit range against a degree.
    pub fn parse(text: &str) -> Result<Vertex> {
        let text = text.trim();
        let mut parts = text.split('.');
        if parts.next() != Some("o") {
            return Err(Error::AddressSyntax(text.to_string()));
        }
        let mut digits = SmallVec::new();
        for (pos, part) in parts.enumerate() {
            if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(Error::AddressSyntax(text.to_string()));
            }
            let digit: usize = part
                .parse()
                .map_err(|_| Error::AddressSyntax(text.to_string()))?;
            if digit >= MAX_DEGREE || (pos > 0 && digit == 0) {
                return Err(Error::AddressDigit {
                    addr: text.to_string(),
                    pos,
                    digit,
                    d: MAX_DEGREE as u8,
                });
            }
            digits.push(digit as u8);
        }
        Ok(Vertex(digits))
    }
}

impl Ord for Vertex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Vertex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("o")?;
        for d in &self.0 {
            write!(f, ".{d}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Vertex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Vertex::parse(s)
    }
}

impl Serialize for Vertex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Vertex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Vertex::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Length of the geodesic between two vertices.
pub fn distance(u: &Vertex, v: &Vertex) -> usize {
    let l = u.common_prefix_len(v);
    u.depth() + v.depth() - 2 * l
}

/// The geodesic from `u` to `v`, endpoints included.
pub fn geodesic(u: &Vertex, v: &Vertex) -> Vec<Vertex> {
    let l = u.common_prefix_len(v);
    let mut path = Vec::with_capacity(u.depth() + v.depth() - 2 * l + 1);
    let mut cur = u.clone();
    path.push(cur.clone());
    while cur.depth() > l {
        cur.pop();
        path.push(cur.clone());
    }
    for &c in &v.digits()[l..] {
        cur.push(c);
        path.push(cur.clone());
    }
    path
}

/// Colors read along the geodesic from `u` to `v` (one per step).
pub fn geodesic_colors(u: &Vertex, v: &Vertex) -> Vec<u8> {
    let l = u.common_prefix_len(v);
    let mut colors = vec![0u8; u.depth() - l];
    colors.extend_from_slice(&v.digits()[l..]);
    colors
}

/// The vertex at distance `k` from `u` on the geodesic toward `v`.
pub fn walk_toward(u: &Vertex, v: &Vertex, k: usize) -> Vertex {
    let l = u.common_prefix_len(v);
    let up = u.depth() - l;
    if k <= up {
        u.prefix(u.depth() - k)
    } else {
        v.prefix(l + (k - up))
    }
}

/// The smallest subtree containing every given vertex.
pub fn convex_hull<'a, I>(vs: I) -> Result<BTreeSet<Vertex>>
where
    I: IntoIterator<Item = &'a Vertex>,
{
    let vs: Vec<&Vertex> = vs.into_iter().collect();
    let first = vs.first().ok_or(Error::Empty)?;
    // In a tree the hull is the union of geodesics from one member to all others.
    let mut hull = BTreeSet::new();
    for v in &vs {
        hull.extend(geodesic(first, v));
    }
    Ok(hull)
}

/// Largest pairwise distance in a finite vertex set.
pub fn diameter(vs: &[Vertex]) -> usize {
    let mut best = 0;
    for (i, u) in vs.iter().enumerate() {
        for v in &vs[i + 1..] {
            best = best.max(distance(u, v));
        }
    }
    best
}

/// A directed edge, identified by its origin and its color there.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DirectedEdge {
    pub origin: Vertex,
    pub color: u8,
}

impl DirectedEdge {
    pub fn new(origin: Vertex, color: u8) -> Self {
        DirectedEdge { origin, color }
    }

    /// The positive edge whose terminus is `v`; `None` for the base vertex.
    pub fn into_vertex(v: &Vertex) -> Option<DirectedEdge> {
        let parent = v.parent()?;
        Some(DirectedEdge::new(parent, v.last_digit().unwrap()))
    }

    /// Points away from the base vertex.
    pub fn is_positive(&self) -> bool {
        self.origin.is_root() || self.color != 0
    }

    pub fn terminus(&self) -> Vertex {
        self.origin.step(self.color)
    }

    pub fn endpoints(&self) -> (Vertex, Vertex) {
        (self.origin.clone(), self.terminus())
    }

    pub fn reverse(&self) -> DirectedEdge {
        if self.is_positive() {
            DirectedEdge::new(self.origin.child(self.color), 0)
        } else {
            let color = self.origin.last_digit().unwrap();
            DirectedEdge::new(self.origin.parent().unwrap(), color)
        }
    }

    /// Membership in the shadow of a positive edge: the terminus lies on the
    /// geodesic from the origin to `v`.
    pub fn shadow_contains(&self, v: &Vertex) -> Result<bool> {
        if !self.is_positive() {
            return Err(Error::NegativeEdge(self.to_string()));
        }
        Ok(self.terminus().is_prefix_of(v))
    }

    pub fn parse(text: &str) -> Result<DirectedEdge> {
        let (addr, color) = text
            .trim()
            .rsplit_once(':')
            .ok_or_else(|| Error::EdgeSyntax(text.to_string()))?;
        let origin = Vertex::parse(addr)?;
        let color: u8 = color
            .parse()
            .map_err(|_| Error::EdgeSyntax(text.to_string()))?;
        if color as usize >= MAX_DEGREE {
            return Err(Error::EdgeSyntax(text.to_string()));
        }
        Ok(DirectedEdge::new(origin, color))
    }
}

impl fmt::Display for DirectedEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.origin, self.color)
    }
}

impl fmt::Debug for DirectedEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for DirectedEdge {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        DirectedEdge::parse(s)
    }
}

impl Serialize for DirectedEdge {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DirectedEdge {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        DirectedEdge::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// The d-regular tree with its fixed coloring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Tree {
    d: u8,
}

impl Tree {
    pub fn new(d: usize) -> Result<Tree> {
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&d) {
            return Err(Error::Degree(d));
        }
        Ok(Tree { d: d as u8 })
    }

    pub fn degree(&self) -> u8 {
        self.d
    }

    pub fn check_vertex(&self, v: &Vertex) -> Result<()> {
        for (pos, &digit) in v.digits().iter().enumerate() {
            if digit >= self.d || (pos > 0 && digit == 0) {
                return Err(Error::AddressDigit {
                    addr: v.to_string(),
                    pos,
                    digit: digit as usize,
                    d: self.d,
                });
            }
        }
        Ok(())
    }

    pub fn check_edge(&self, e: &DirectedEdge) -> Result<()> {
        self.check_vertex(&e.origin)?;
        if e.color >= self.d {
            return Err(Error::EdgeSyntax(e.to_string()));
        }
        Ok(())
    }

    pub fn parse_addr(&self, text: &str) -> Result<Vertex> {
        let v = Vertex::parse(text)?;
        self.check_vertex(&v)?;
        Ok(v)
    }

    pub fn parse_edge(&self, text: &str) -> Result<DirectedEdge> {
        let e = DirectedEdge::parse(text)?;
        self.check_edge(&e)?;
        Ok(e)
    }

    /// Colors of the children of `v`.
    pub fn child_colors(&self, v: &Vertex) -> std::ops::Range<u8> {
        if v.is_root() {
            0..self.d
        } else {
            1..self.d
        }
    }

    pub fn children(&self, v: &Vertex) -> impl Iterator<Item = Vertex> + '_ {
        let v = v.clone();
        self.child_colors(&v).map(move |c| v.child(c))
    }

    /// The d edges leaving `v`, by color.
    pub fn star(&self, v: &Vertex) -> Vec<DirectedEdge> {
        (0..self.d).map(|c| DirectedEdge::new(v.clone(), c)).collect()
    }

    pub fn sphere_size(&self, level: usize) -> usize {
        if level == 0 {
            1
        } else {
            let d = self.d as usize;
            d * (d - 1).pow(level as u32 - 1)
        }
    }

    pub fn ball_size(&self, radius: usize) -> usize {
        (0..=radius).map(|l| self.sphere_size(l)).sum()
    }

    /// Vertices at exactly the given depth, in lexicographic order.
    pub fn vertex_sphere(&self, level: usize) -> Vec<Vertex> {
        let mut layer = vec![Vertex::root()];
        for _ in 0..level {
            layer = layer.iter().flat_map(|v| self.children(v)).collect();
        }
        layer
    }

    /// Breadth-first listing of the ball of the given radius around `o`.
    pub fn ball_vertices(&self, radius: usize) -> Vec<Vertex> {
        let mut out = Vec::with_capacity(self.ball_size(radius));
        let mut layer = vec![Vertex::root()];
        for level in 0..=radius {
            out.extend(layer.iter().cloned());
            if level < radius {
                layer = layer.iter().flat_map(|v| self.children(v)).collect();
            }
        }
        out
    }

    /// Position of `v` in [`Tree::ball_vertices`] order.
    pub fn ball_index(&self, v: &Vertex) -> usize {
        let depth = v.depth();
        if depth == 0 {
            return 0;
        }
        let d = self.d as usize;
        let mut rank = v.digits()[0] as usize;
        for &c in &v.digits()[1..] {
            rank = rank * (d - 1) + (c as usize - 1);
        }
        self.ball_size(depth - 1) + rank
    }

    /// All positive edges whose origin is at distance `radius` from `o`.
    pub fn edge_sphere(&self, radius: usize) -> Vec<DirectedEdge> {
        self.vertex_sphere(radius)
            .into_iter()
            .flat_map(|v| {
                self.child_colors(&v)
                    .map(move |c| DirectedEdge::new(v.clone(), c))
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    /// Breadth-first listing of a positive edge's shadow, down to the given
    /// depth below its terminus. The first vertex is the terminus.
    pub fn shadow_vertices(&self, e: &DirectedEdge, depth: usize) -> Result<Vec<Vertex>> {
        if !e.is_positive() {
            return Err(Error::NegativeEdge(e.to_string()));
        }
        let mut out = vec![e.terminus()];
        let mut start = 0;
        for _ in 0..depth {
            let end = out.len();
            for i in start..end {
                let v = out[i].clone();
                out.extend((1..self.d).map(|c| v.child(c)));
            }
            start = end;
        }
        Ok(out)
    }

    /// The first `count` vertices of the shadow of `e` in breadth-first order,
    /// lexicographic within levels; the first is the terminus.
    pub fn shadow_order(&self, e: &DirectedEdge, count: usize) -> Result<Vec<Vertex>> {
        if !e.is_positive() {
            return Err(Error::NegativeEdge(e.to_string()));
        }
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return Ok(out);
        }
        out.push(e.terminus());
        let mut i = 0;
        while out.len() < count {
            let v = out[i].clone();
            for c in 1..self.d {
                if out.len() == count {
                    break;
                }
                out.push(v.child(c));
            }
            i += 1;
        }
        Ok(out)
    }
}
