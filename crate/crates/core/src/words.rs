//! Words in the free product of a generated group with an infinite cyclic
//! group, evaluated at a tree automorphism.
//!
//! A word is a product of letters `g<k>^±1` (generators of the group the
//! assignment supplies) and `t^±1`. Its canonical form groups consecutive
//! generator letters into one block, so blocks alternate between group
//! elements and single `t^±1` letters, and never contains adjacent inverse
//! pairs. Evaluation sends `t` to the sampled automorphism and multiplies
//! left to right, with the right action convention of [`TreeAut::compose`].
//!
//! On top of evaluation this module implements traces of vertices and edges
//! under the successive blocks, the radius beyond which traces are simple
//! and positive, the special index of a closed edge trace, the embedding
//! `eta` of color-0-fixing permutations, the resulting action on the fiber,
//! and the splitting of the local permutation of a word into the factors
//! contributed by its blocks.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::hash::Hash;
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};

use crate::automorphism::{haar_at, FinitaryPortrait, RootedAut, TreeAut};
use crate::dynamics::{classify, explore_fixed, Kind};
use crate::error::{Error, Result};
use crate::perm::LocalPerm;
use crate::tree::{convex_hull, diameter, geodesic, DirectedEdge, Tree, Vertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    Gen { index: usize, power: i8 },
    T(i8),
}

impl Letter {
    pub fn gen(index: usize) -> Letter {
        Letter::Gen { index, power: 1 }
    }

    pub fn inverse(self) -> Letter {
        match self {
            Letter::Gen { index, power } => Letter::Gen {
                index,
                power: -power,
            },
            Letter::T(p) => Letter::T(-p),
        }
    }

    pub fn is_t(&self) -> bool {
        matches!(self, Letter::T(_))
    }

    pub fn parse(token: &str) -> Result<Letter> {
        let (base, power) = match token.split_once('^') {
            None => (token, 1),
            Some((b, "-1")) => (b, -1),
            Some((b, "1")) => (b, 1),
            Some(_) => return Err(Error::WordSyntax(format!("bad exponent in {token:?}"))),
        };
        if base == "t" {
            return Ok(Letter::T(power));
        }
        let index = base
            .strip_prefix('g')
            .filter(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::WordSyntax(format!("unknown letter {token:?}")))?;
        Ok(Letter::Gen { index, power })
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (name, power) = match self {
            Letter::Gen { index, power } => (format!("g{index}"), *power),
            Letter::T(p) => ("t".to_string(), *p),
        };
        if power < 0 {
            write!(f, "{name}^-1")
        } else {
            f.write_str(&name)
        }
    }
}

/// One factor of the canonical form: a group element, given as a nonempty
/// freely reduced product of generator letters, or `t^±1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Block {
    Gamma(Vec<Letter>),
    T(i8),
}

impl Block {
    pub fn is_t(&self) -> bool {
        matches!(self, Block::T(1))
    }

    pub fn is_t_inverse(&self) -> bool {
        matches!(self, Block::T(-1))
    }

    pub fn letters(&self) -> Vec<Letter> {
        match self {
            Block::Gamma(ls) => ls.clone(),
            Block::T(p) => vec![Letter::T(*p)],
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Block::Gamma(ls) if ls.len() > 1 => {
                let parts: Vec<String> = ls.iter().map(|l| l.to_string()).collect();
                write!(f, "({})", parts.join(" "))
            }
            Block::Gamma(ls) => write!(f, "{}", ls[0]),
            Block::T(p) => write!(f, "{}", Letter::T(*p)),
        }
    }
}

/// A word in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    blocks: Vec<Block>,
}

impl Word {
    /// Canonical form of a product of letters: adjacent inverse pairs
    /// cancel, then consecutive generator letters merge into one block.
    pub fn normalize(letters: &[Letter]) -> Word {
        let mut stack: Vec<Letter> = Vec::with_capacity(letters.len());
        for &l in letters {
            if stack.last() == Some(&l.inverse()) {
                stack.pop();
            } else {
                stack.push(l);
            }
        }
        Word::group(&stack)
    }

    fn group(reduced: &[Letter]) -> Word {
        let mut blocks = Vec::new();
        let mut current: Vec<Letter> = Vec::new();
        for &l in reduced {
            match l {
                Letter::T(p) => {
                    if !current.is_empty() {
                        blocks.push(Block::Gamma(std::mem::take(&mut current)));
                    }
                    blocks.push(Block::T(p));
                }
                g => current.push(g),
            }
        }
        if !current.is_empty() {
            blocks.push(Block::Gamma(current));
        }
        Word { blocks }
    }

    pub fn parse(text: &str) -> Result<Word> {
        let letters = text
            .split_whitespace()
            .filter(|tok| *tok != "1")
            .map(Letter::parse)
            .collect::<Result<Vec<_>>>()?;
        Ok(Word::normalize(&letters))
    }

    pub fn identity() -> Word {
        Word { blocks: Vec::new() }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Number of blocks, `n + 1` for a word `w_0 ... w_n`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn letters(&self) -> Vec<Letter> {
        self.blocks.iter().flat_map(Block::letters).collect()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut ls = self.letters();
        ls.extend(other.letters());
        Word::normalize(&ls)
    }

    pub fn inverse(&self) -> Word {
        let ls: Vec<Letter> = self.letters().into_iter().rev().map(Letter::inverse).collect();
        Word::normalize(&ls)
    }

    pub fn contains_t(&self) -> bool {
        self.blocks.iter().any(|b| matches!(b, Block::T(_)))
    }

    /// Largest generator index used, plus one.
    pub fn generator_count(&self) -> usize {
        self.letters()
            .iter()
            .filter_map(|l| match l {
                Letter::Gen { index, .. } => Some(index + 1),
                Letter::T(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// A cyclically reduced conjugate: inverse letters at the two ends
    /// cancel, and a trailing group block is moved to the front to merge
    /// with a leading one.
    pub fn cyclic_reduce(&self) -> Word {
        let mut ls = self.letters();
        loop {
            while ls.len() >= 2 && ls[0] == ls[ls.len() - 1].inverse() {
                ls.pop();
                ls.remove(0);
            }
            let w = Word::group(&ls);
            let n = w.blocks.len();
            if n >= 2 && !w.blocks[0].is_t_like() && !w.blocks[n - 1].is_t_like() {
                let tail = w.blocks[n - 1].letters();
                let k = tail.len();
                ls.truncate(ls.len() - k);
                let mut rotated = tail;
                rotated.extend(ls);
                ls = Word::normalize(&rotated).letters();
                continue;
            }
            return w;
        }
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.cyclic_reduce().len() == self.len()
    }

    /// The cyclic subword `w_i w_(i+1) ... w_(i+k)` with indices mod `n + 1`.
    pub fn cyclic_subword(&self, start: usize, len: usize) -> Word {
        let n = self.blocks.len();
        let blocks = (0..len).map(|k| self.blocks[(start + k) % n].clone()).collect();
        Word { blocks }
    }

    /// Block positions `i` eligible for the special index: `w_i = t`, or
    /// `w_(i-1) = t^-1`. Position `n + 1` stands for the closing item of a
    /// closed trace and is eligible when `w_n = t^-1`.
    pub fn eligible_indices(&self) -> Vec<usize> {
        let n1 = self.blocks.len();
        (0..=n1)
            .filter(|&i| {
                (i < n1 && self.blocks[i].is_t()) || (i >= 1 && self.blocks[i - 1].is_t_inverse())
            })
            .collect()
    }

    /// Block form with parenthesized group blocks, e.g. `(g0 g1) t`.
    pub fn block_string(&self) -> String {
        let parts: Vec<String> = self.blocks.iter().map(|b| b.to_string()).collect();
        parts.join(" ")
    }
}

impl Block {
    fn is_t_like(&self) -> bool {
        matches!(self, Block::T(_))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.blocks.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self.letters().iter().map(|l| l.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Values of the generators and of `t`.
#[derive(Clone, Debug)]
pub struct Assignment {
    d: u8,
    gens: Vec<TreeAut>,
    gen_inverses: Vec<TreeAut>,
    t: TreeAut,
    t_inverse: TreeAut,
}

impl Assignment {
    pub fn new(gens: Vec<TreeAut>, t: TreeAut) -> Result<Self> {
        let d = t.degree();
        if let Some(g) = gens.iter().find(|g| g.degree() != d) {
            return Err(Error::DegreeMismatch(d, g.degree()));
        }
        Ok(Assignment {
            d,
            gen_inverses: gens.iter().map(TreeAut::inverse).collect(),
            gens,
            t_inverse: t.inverse(),
            t,
        })
    }

    pub fn degree(&self) -> u8 {
        self.d
    }

    pub fn tree(&self) -> Tree {
        Tree::new(self.d as usize).unwrap()
    }

    pub fn gens(&self) -> &[TreeAut] {
        &self.gens
    }

    pub fn t_value(&self) -> &TreeAut {
        &self.t
    }

    /// Same generators, another value of `t`.
    pub fn with_t(&self, t: TreeAut) -> Result<Self> {
        Assignment::new(self.gens.clone(), t)
    }

    fn letter(&self, l: &Letter) -> Result<&TreeAut> {
        match *l {
            Letter::T(p) => Ok(if p > 0 { &self.t } else { &self.t_inverse }),
            Letter::Gen { index, power } => {
                let table = if power > 0 { &self.gens } else { &self.gen_inverses };
                table.get(index).ok_or(Error::GeneratorIndex {
                    index,
                    count: self.gens.len(),
                })
            }
        }
    }

    pub fn check_word(&self, w: &Word) -> Result<()> {
        for l in w.letters() {
            self.letter(&l)?;
        }
        Ok(())
    }

    pub fn evaluate_block(&self, b: &Block) -> Result<TreeAut> {
        let mut out = TreeAut::identity(self.d as usize);
        for l in b.letters() {
            out = out.compose(self.letter(&l)?);
        }
        Ok(out)
    }

    /// `w(a)`: the product of the block values, left to right.
    pub fn evaluate(&self, w: &Word) -> Result<TreeAut> {
        let mut out = TreeAut::identity(self.d as usize);
        for l in w.letters() {
            out = out.compose(self.letter(&l)?);
        }
        Ok(out)
    }

    /// Block values `w_0(a), ..., w_n(a)`.
    pub fn evaluate_blocks(&self, w: &Word) -> Result<Vec<TreeAut>> {
        w.blocks().iter().map(|b| self.evaluate_block(b)).collect()
    }

    pub fn from_spec(spec: &AssignmentSpec, base_dir: &Path) -> Result<Self> {
        let tree = Tree::new(spec.d)?;
        let gens = spec
            .generators
            .iter()
            .map(|g| g.build(&tree, base_dir))
            .collect::<Result<Vec<_>>>()?;
        let t = spec.t.build(&tree, base_dir)?;
        Assignment::new(gens, t)
    }

    /// Reads an assignment file; portrait paths are relative to its folder.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let spec: AssignmentSpec = serde_json::from_str(&text)?;
        Assignment::from_spec(&spec, path.parent().unwrap_or(Path::new(".")))
    }
}

/// One element of an assignment file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ElementSpec {
    Portrait { portrait: String },
    HaarAt { haar_at: String, seed: u64 },
}

impl ElementSpec {
    pub fn build(&self, tree: &Tree, base_dir: &Path) -> Result<TreeAut> {
        let d = tree.degree() as usize;
        match self {
            ElementSpec::Portrait { portrait } => {
                let path = base_dir.join(portrait);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                let p = FinitaryPortrait::from_json(&text)?;
                if p.degree() as usize != d {
                    return Err(Error::DegreeMismatch(tree.degree(), p.degree()));
                }
                Ok(RootedAut::from_portrait(p).into_aut())
            }
            ElementSpec::HaarAt { haar_at: v, seed } => haar_at(d, &tree.parse_addr(v)?, *seed),
        }
    }
}

/// Contents of an assignment file:
/// `{"d":3,"generators":[{"portrait":"gen0.json"},{"haar_at":"o.1","seed":7}],"t":{"haar_at":"o","seed":9}}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentSpec {
    pub d: usize,
    pub generators: Vec<ElementSpec>,
    pub t: ElementSpec,
}

/// `o^(w(a)) = o`.
pub fn in_omega(w: &Word, asg: &Assignment) -> Result<bool> {
    Ok(asg.evaluate(w)?.image_vertex(&Vertex::root()).is_root())
}

/// The orbit `l_0, ..., l_(n+1)` of a vertex or edge under the successive
/// blocks of a word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace<T> {
    pub items: Vec<T>,
}

impl<T: Eq + Hash + Clone> Trace<T> {
    pub fn closed(&self) -> bool {
        self.items.first() == self.items.last()
    }

    /// Distinct items, except possibly the first and last.
    pub fn is_simple(&self) -> bool {
        let n = self.items.len();
        if n <= 1 {
            return true;
        }
        let inner = &self.items[..n - 1];
        let distinct: HashSet<&T> = inner.iter().collect();
        if distinct.len() != inner.len() {
            return false;
        }
        self.items[n - 1] == self.items[0] || !distinct.contains(&self.items[n - 1])
    }

    pub fn last(&self) -> &T {
        self.items.last().expect("traces are nonempty")
    }
}

impl<T: fmt::Display> Serialize for Trace<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.items.iter().map(|x| x.to_string()))
    }
}

pub fn trace_vertex_with(blocks: &[TreeAut], y: &Vertex) -> Trace<Vertex> {
    let mut items = Vec::with_capacity(blocks.len() + 1);
    items.push(y.clone());
    for b in blocks {
        let next = b.image_vertex(items.last().unwrap());
        items.push(next);
    }
    Trace { items }
}

pub fn trace_edge_with(blocks: &[TreeAut], e: &DirectedEdge) -> Trace<DirectedEdge> {
    let mut items = Vec::with_capacity(blocks.len() + 1);
    items.push(e.clone());
    for b in blocks {
        let next = b.image_edge(items.last().unwrap());
        items.push(next);
    }
    Trace { items }
}

pub fn trace_vertex(w: &Word, asg: &Assignment, y: &Vertex) -> Result<Trace<Vertex>> {
    Ok(trace_vertex_with(&asg.evaluate_blocks(w)?, y))
}

pub fn trace_edge(w: &Word, asg: &Assignment, e: &DirectedEdge) -> Result<Trace<DirectedEdge>> {
    Ok(trace_edge_with(&asg.evaluate_blocks(w)?, e))
}

/// `Shadow[e]` and `Shadow[f]` for positive edges: strictly nested or
/// disjoint unless equal.
fn shadow_within(inner: &DirectedEdge, outer: &DirectedEdge) -> bool {
    outer.terminus().is_prefix_of(&inner.terminus())
}

fn shadows_disjoint(e: &DirectedEdge, f: &DirectedEdge) -> bool {
    !shadow_within(e, f) && !shadow_within(f, e)
}

/// Outcome of the search for the radius beyond which traces are simple and
/// positive.
#[derive(Clone, Debug, Serialize)]
pub struct RadiusM {
    pub m: usize,
    /// The value given by the fixed sets of the cyclic subwords and the hull
    /// of the base vertex trace, before the postcondition check.
    pub initial_m: usize,
    /// Every subword fixed set was seen in full and both trace properties
    /// hold on the checked annulus.
    pub certified: bool,
    pub max_fixed_depth: Option<usize>,
    pub hull_diameter: usize,
    pub checked_depth: usize,
    /// Cyclic subwords whose fixed set reaches the truncation depth.
    pub deep_subwords: Vec<String>,
}

/// Fixed vertices of `a` in the ball of radius `depth`, and whether the
/// fixed set may continue beyond it.
fn fixed_in_ball(a: &TreeAut, depth: usize) -> (Vec<Vertex>, bool) {
    let cls = classify(a);
    if cls.kind != Kind::Elliptic {
        return (Vec::new(), false);
    }
    let w = cls.witness_vertex().unwrap();
    // the first fixed vertex on the way from o to the witness is the
    // projection of o onto the fixed subtree
    let near = geodesic(&Vertex::root(), w)
        .into_iter()
        .find(|x| a.image_vertex(x) == *x)
        .expect("the witness is fixed");
    if near.depth() > depth {
        return (Vec::new(), true);
    }
    let members: Vec<Vertex> = explore_fixed(a, &near, |x| x.depth() <= depth)
        .into_iter()
        .collect();
    let open = members.iter().any(|x| x.depth() == depth);
    (members, open)
}

/// Checks simplicity of vertex traces and positivity of edge traces for
/// vertices and positive edges at distance `m..=depth` from `o`. Returns the
/// largest distance at which a check failed.
fn annulus_violation(blocks: &[TreeAut], tree: &Tree, m: usize, depth: usize) -> Option<usize> {
    let mut worst = None;
    for level in m..=depth {
        for y in tree.vertex_sphere(level) {
            if !trace_vertex_with(blocks, &y).is_simple() {
                worst = Some(level);
            }
            if level < depth {
                for c in tree.child_colors(&y) {
                    let tr = trace_edge_with(blocks, &DirectedEdge::new(y.clone(), c));
                    if !tr.items.iter().all(DirectedEdge::is_positive) {
                        worst = Some(level);
                    }
                }
            }
        }
    }
    worst
}

/// The radius `M`: at least one more than the depth of every fixed vertex of
/// every proper cyclic subword, and at least `diam C + 2` where `C` is the
/// hull of the trace of `o`. The fixed sets are explored inside the ball of
/// radius `depth`; the two trace properties are then checked on the annulus
/// up to `depth`, and `M` is increased past any violation found.
pub fn radius_m(w: &Word, asg: &Assignment, depth: usize) -> Result<RadiusM> {
    if w.is_empty() {
        return Err(Error::Empty);
    }
    let blocks = asg.evaluate_blocks(w)?;
    let tree = asg.tree();
    let n1 = w.len();

    let mut max_fixed: Option<usize> = None;
    let mut certified = true;
    let mut deep = Vec::new();
    for len in 1..n1 {
        for start in 0..n1 {
            let sub = w.cyclic_subword(start, len);
            let a = asg.evaluate(&sub)?;
            let (members, open) = fixed_in_ball(&a, depth);
            if open {
                certified = false;
                deep.push(sub.block_string());
            }
            if let Some(m) = members.iter().map(Vertex::depth).max() {
                max_fixed = Some(max_fixed.map_or(m, |x: usize| x.max(m)));
            }
        }
    }
    let o_trace = trace_vertex_with(&blocks, &Vertex::root());
    let hull: Vec<Vertex> = convex_hull(o_trace.items.iter())?.into_iter().collect();
    let hull_diameter = diameter(&hull);
    let initial_m = max_fixed.map_or(0, |m| m + 1).max(hull_diameter + 2);

    let mut m = initial_m;
    if m <= depth {
        if let Some(bad) = annulus_violation(&blocks, &tree, m, depth) {
            m = bad + 1;
            certified = false;
        }
    } else {
        certified = false;
    }
    deep.sort();
    deep.dedup();
    Ok(RadiusM {
        m,
        initial_m,
        certified,
        max_fixed_depth: max_fixed,
        hull_diameter,
        checked_depth: depth,
        deep_subwords: deep,
    })
}

/// Edge traces over the sphere of positive edges with origin at distance
/// `m`, with the checks that apply to them.
#[derive(Clone, Debug, Serialize)]
pub struct SphereTraces {
    pub m: usize,
    pub traces: Vec<(DirectedEdge, Trace<DirectedEdge>)>,
    /// Closed traces containing a negative edge.
    pub negative_closed: Vec<DirectedEdge>,
    /// Open traces whose shadow contains a fixed vertex of `w(a)`.
    pub fixed_in_open: Vec<DirectedEdge>,
    /// Closed traces with two shadows neither disjoint nor strictly nested.
    pub nesting_failures: Vec<DirectedEdge>,
    pub checked_depth: usize,
}

impl SphereTraces {
    pub fn closed_edges(&self) -> impl Iterator<Item = &(DirectedEdge, Trace<DirectedEdge>)> {
        self.traces.iter().filter(|(_, t)| t.closed())
    }

    pub fn all_checks_pass(&self) -> bool {
        self.negative_closed.is_empty()
            && self.fixed_in_open.is_empty()
            && self.nesting_failures.is_empty()
    }
}

pub fn edge_sphere_traces(w: &Word, asg: &Assignment, m: usize, depth: usize) -> Result<SphereTraces> {
    let blocks = asg.evaluate_blocks(w)?;
    let total = asg.evaluate(w)?;
    let tree = asg.tree();
    let mut out = SphereTraces {
        m,
        traces: Vec::new(),
        negative_closed: Vec::new(),
        fixed_in_open: Vec::new(),
        nesting_failures: Vec::new(),
        checked_depth: depth,
    };
    for e in tree.edge_sphere(m) {
        let tr = trace_edge_with(&blocks, &e);
        if tr.closed() {
            if !tr.items.iter().all(DirectedEdge::is_positive) {
                out.negative_closed.push(e.clone());
            } else {
                let inner = &tr.items[..tr.items.len() - 1];
                let nested = inner.iter().enumerate().all(|(i, a)| {
                    inner[i + 1..].iter().all(|b| {
                        shadows_disjoint(a, b)
                            || (a != b && (shadow_within(a, b) || shadow_within(b, a)))
                    })
                });
                if !nested {
                    out.nesting_failures.push(e.clone());
                }
            }
        } else if depth > m {
            let below = depth - m - 1;
            let fixed = tree
                .shadow_vertices(&e, below)?
                .iter()
                .any(|x| total.image_vertex(x) == *x);
            if fixed {
                out.fixed_in_open.push(e.clone());
            }
        }
        out.traces.push((e, tr));
    }
    Ok(out)
}

/// The special index of a closed, simple, positive edge trace: an eligible
/// position whose shadow is disjoint from, or strictly inside, the shadow
/// of every other eligible position. Among several, the smallest.
pub fn special_index(trace: &Trace<DirectedEdge>, w: &Word) -> Result<usize> {
    if trace.items.len() != w.len() + 1 {
        return Err(Error::TraceMismatch(format!(
            "{} items for a word of {} blocks",
            trace.items.len(),
            w.len()
        )));
    }
    if !trace.closed() || !trace.is_simple() {
        return Err(Error::TraceMismatch("trace is not closed and simple".into()));
    }
    if let Some(e) = trace.items.iter().find(|e| !e.is_positive()) {
        return Err(Error::NegativeEdge(e.to_string()));
    }
    let eligible = w.eligible_indices();
    eligible
        .iter()
        .copied()
        .find(|&big_i| {
            let ei = &trace.items[big_i];
            eligible.iter().all(|&i| {
                let e = &trace.items[i];
                e == ei || shadows_disjoint(e, ei) || shadow_within(ei, e)
            })
        })
        .ok_or(Error::NoSpecialIndex)
}

/// `x^0, x^1, ...`: the shadow of `e` breadth-first, starting at its
/// terminus.
pub fn shadow_vertex_ordering(tree: &Tree, e: &DirectedEdge, count: usize) -> Result<Vec<Vertex>> {
    tree.shadow_order(e, count)
}

/// A word together with a closed edge trace it is conditioned on.
#[derive(Clone, Debug, Serialize)]
pub struct TraceContext {
    pub word: Word,
    pub edge: DirectedEdge,
    pub edge_trace: Trace<DirectedEdge>,
    pub index: usize,
    pub shadow: Vec<Vertex>,
}

impl TraceContext {
    /// Builds the context of `e` under `w(a)`, listing `count` shadow
    /// vertices. Fails unless the trace of `e` is closed, simple and
    /// positive.
    pub fn new(w: &Word, asg: &Assignment, e: &DirectedEdge, count: usize) -> Result<Self> {
        if !e.is_positive() {
            return Err(Error::NegativeEdge(e.to_string()));
        }
        let edge_trace = trace_edge(w, asg, e)?;
        let index = special_index(&edge_trace, w)?;
        Ok(TraceContext {
            word: w.clone(),
            edge: e.clone(),
            edge_trace,
            index,
            shadow: shadow_vertex_ordering(&asg.tree(), e, count)?,
        })
    }

    /// `w_I = t` (as opposed to `w_(I-1) = t^-1`).
    pub fn forward(&self) -> bool {
        self.index < self.word.len() && self.word.blocks()[self.index].is_t()
    }

    /// The trace edge `e_I`.
    pub fn special_edge(&self) -> &DirectedEdge {
        &self.edge_trace.items[self.index]
    }

    pub fn matches(&self, asg: &Assignment) -> Result<bool> {
        Ok(trace_edge(&self.word, asg, &self.edge)? == self.edge_trace)
    }

    fn shadow_vertex(&self, j: usize) -> Result<&Vertex> {
        self.shadow.get(j).ok_or_else(|| {
            Error::Config(format!(
                "shadow index {j} beyond the {} listed vertices",
                self.shadow.len()
            ))
        })
    }

    /// `x^j_I`: the trace of the `j`-th shadow vertex at the special index.
    pub fn special_vertex(&self, j: usize, asg: &Assignment) -> Result<Vertex> {
        let tr = trace_vertex(&self.word, asg, self.shadow_vertex(j)?)?;
        Ok(tr.items[self.index].clone())
    }
}

fn require_trace(tc: &TraceContext, asg: &Assignment) -> Result<()> {
    if tc.matches(asg)? {
        Ok(())
    } else {
        Err(Error::TraceMismatch(format!(
            "assignment does not reproduce the trace of {}",
            tc.edge
        )))
    }
}

/// `eta^j sigma`: the rooted automorphism with local permutation `sigma` at
/// `x^j_I` and the identity elsewhere. It fixes everything outside the
/// shadow of the edge entering `x^j_I`.
pub fn eta_embed(j: usize, sigma: &LocalPerm, tc: &TraceContext, asg: &Assignment) -> Result<TreeAut> {
    let x = tc.special_vertex(j, asg)?;
    if !sigma.fixes_zero() {
        return Err(Error::MovesZero(x.to_string()));
    }
    Ok(RootedAut::from_entries(asg.degree() as usize, [(x, *sigma)])?.into_aut())
}

/// `sigma *^j a = (eta^j sigma) a`, as a new assignment.
pub fn star_action(sigma: &LocalPerm, j: usize, tc: &TraceContext, asg: &Assignment) -> Result<Assignment> {
    require_trace(tc, asg)?;
    let eta = eta_embed(j, sigma, tc, asg)?;
    asg.with_t(eta.compose(asg.t_value()))
}

/// The factors `lp(w_i(a), x_i)` of the local permutation of `w(a)` at `x`,
/// and their split `A Xi B` around the special index.
#[derive(Clone, Debug, Serialize)]
pub struct XiSplit {
    pub factors: Vec<LocalPerm>,
    pub a: LocalPerm,
    pub xi: LocalPerm,
    pub b: LocalPerm,
}

fn product(d: u8, ps: &[LocalPerm]) -> LocalPerm {
    ps.iter().fold(LocalPerm::identity(d), |acc, p| acc.then(p))
}

pub fn xi_factors(w: &Word, asg: &Assignment, x: &Vertex, tc: &TraceContext) -> Result<XiSplit> {
    let blocks = asg.evaluate_blocks(w)?;
    let tr = trace_vertex_with(&blocks, x);
    let factors: Vec<LocalPerm> = blocks
        .iter()
        .zip(&tr.items)
        .map(|(b, xi)| b.local_perm(xi))
        .collect();
    let d = asg.degree();
    let special = if tc.forward() { tc.index } else { tc.index - 1 };
    Ok(XiSplit {
        a: product(d, &factors[..special]),
        xi: factors[special],
        b: product(d, &factors[special + 1..]),
        factors,
    })
}

/// Result of checking how `sigma *^j` changes the cocycle values along the
/// traces of the first shadow vertices.
#[derive(Clone, Debug, Serialize)]
pub struct ActionReport {
    pub j: usize,
    pub checked_k: usize,
    /// The trace of the conditioning edge is unchanged.
    pub omega_invariant: bool,
    pub table_checks: usize,
    pub table_failures: Vec<String>,
    /// Number of pairs `(k, i)` in `D` with `x^k_i = x^j_I`.
    pub multiplicity: usize,
}

impl ActionReport {
    pub fn ok(&self) -> bool {
        self.omega_invariant && self.table_failures.is_empty() && self.multiplicity == 1
    }
}

/// For every `k <= min(j, bound)` and block `i`, compares `lp(w_i(sigma *^j
/// a), x^k_i)` with `lp(w_i(a), x^k_i)`: left multiplication by `sigma` at
/// `(j, I)` when `w_I = t`, right multiplication by `sigma^-1` at
/// `(j, I-1)` when `w_(I-1) = t^-1`, no change elsewhere. The traces
/// `x^k_i` are those under `a`.
pub fn verify_action_properties(
    tc: &TraceContext,
    asg: &Assignment,
    sigma: &LocalPerm,
    j: usize,
    bound: usize,
) -> Result<ActionReport> {
    require_trace(tc, asg)?;
    let moved = star_action(sigma, j, tc, asg)?;
    let before = asg.evaluate_blocks(&tc.word)?;
    let after = moved.evaluate_blocks(&tc.word)?;
    let top = j.min(bound);
    let n1 = tc.word.len();
    let special_block = if tc.forward() { tc.index } else { tc.index - 1 };
    let x_special = tc.special_vertex(j, asg)?;
    let eligible = tc.word.eligible_indices();

    let mut report = ActionReport {
        j,
        checked_k: top,
        omega_invariant: trace_edge_with(&after, &tc.edge) == tc.edge_trace,
        table_checks: 0,
        table_failures: Vec::new(),
        multiplicity: 0,
    };
    for k in 0..=top {
        let tr = trace_vertex_with(&before, tc.shadow_vertex(k)?);
        for i in 0..n1 {
            let old = before[i].local_perm(&tr.items[i]);
            let new = after[i].local_perm(&tr.items[i]);
            let expected = if k == j && i == special_block {
                if tc.forward() {
                    sigma.then(&old)
                } else {
                    old.then(&sigma.inverse())
                }
            } else {
                old
            };
            report.table_checks += 1;
            if new != expected {
                report.table_failures.push(format!(
                    "k={k} i={i} at {}: got {new}, expected {expected}",
                    tr.items[i]
                ));
            }
        }
        report.multiplicity += eligible
            .iter()
            .filter(|&&i| tr.items[i] == x_special)
            .count();
    }
    Ok(report)
}

/// Empirical frequencies of local permutations, keyed by image strings.
pub fn perm_histogram<'a, I>(perms: I) -> BTreeMap<String, u64>
where
    I: IntoIterator<Item = &'a LocalPerm>,
{
    let mut out = BTreeMap::new();
    for p in perms {
        *out.entry(p.to_string()).or_insert(0) += 1;
    }
    out
}
