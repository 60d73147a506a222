//! Automorphisms of the d-regular tree.
//!
//! Actions are written on the right: `x^(ab) = (x^a)^b`, and [`TreeAut::compose`]
//! builds `ab` from `a` and `b`. A rooted automorphism (one fixing `o`) is
//! determined by its portrait, the local permutation it induces at every
//! vertex; off the base vertex these permutations fix color 0. A general
//! automorphism is a rooted one followed by the canonical section `m_v`
//! carrying `o` to `v`.
//!
//! Elements are lazy expression trees over three kinds of leaves (finitary
//! portraits, seeded Haar portraits, sections). Images and local
//! permutations of products and inverses are computed through the cocycle
//! identity `lp(ab, v) = lp(a, v).then(lp(b, v^a))`, so no infinite data is
//! ever materialized.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::LocalPerm;
use crate::prf;
use crate::tree::{geodesic_colors, DirectedEdge, Tree, Vertex};

/// Finite portrait: local permutations at finitely many vertices, identity
/// elsewhere.
#[derive(Clone, PartialEq, Eq)]
pub struct FinitaryPortrait {
    d: u8,
    entries: BTreeMap<Vertex, LocalPerm>,
}

impl FinitaryPortrait {
    pub fn new(d: usize, entries: BTreeMap<Vertex, LocalPerm>) -> Result<Self> {
        let tree = Tree::new(d)?;
        let mut kept = BTreeMap::new();
        for (v, p) in entries {
            tree.check_vertex(&v)?;
            if p.degree() as usize != d {
                return Err(Error::Permutation(
                    p.images().iter().map(|&x| x as usize).collect(),
                ));
            }
            if !v.is_root() && !p.fixes_zero() {
                return Err(Error::MovesZero(v.to_string()));
            }
            if !p.is_identity() {
                kept.insert(v, p);
            }
        }
        Ok(FinitaryPortrait {
            d: d as u8,
            entries: kept,
        })
    }

    pub fn degree(&self) -> u8 {
        self.d
    }

    pub fn entries(&self) -> &BTreeMap<Vertex, LocalPerm> {
        &self.entries
    }

    pub fn get(&self, v: &Vertex) -> LocalPerm {
        self.entries
            .get(v)
            .copied()
            .unwrap_or_else(|| LocalPerm::identity(self.d))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PortraitFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PortraitFile::from(self)).expect("portrait serializes")
    }
}

impl fmt::Debug for FinitaryPortrait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter()).finish()
    }
}

/// On-disk portrait: `{"d": 3, "entries": {"o": [1,0,2], "o.1": [0,2,1]}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PortraitFile {
    pub d: usize,
    pub entries: BTreeMap<String, Vec<usize>>,
}

impl TryFrom<PortraitFile> for FinitaryPortrait {
    type Error = Error;
    fn try_from(file: PortraitFile) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (addr, images) in file.entries {
            let v = Vertex::parse(&addr)?;
            if images.len() != file.d {
                return Err(Error::Permutation(images));
            }
            entries.insert(v, LocalPerm::from_images(&images)?);
        }
        FinitaryPortrait::new(file.d, entries)
    }
}

impl From<&FinitaryPortrait> for PortraitFile {
    fn from(p: &FinitaryPortrait) -> Self {
        PortraitFile {
            d: p.d as usize,
            entries: p
                .entries
                .iter()
                .map(|(v, perm)| {
                    (
                        v.to_string(),
                        perm.images().iter().map(|&x| x as usize).collect(),
                    )
                })
                .collect(),
        }
    }
}

/// Where a rooted element's portrait comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PortraitKind {
    Identity,
    Finitary,
    Seeded,
    Derived,
}

#[derive(Clone)]
enum Leaf {
    Finitary(Arc<FinitaryPortrait>),
    Seeded(u64),
    /// A shadow automorphism extended by the identity off the shadow.
    Extended { root: Vertex, shadow: ShadowAut },
}

#[derive(Clone)]
enum Node {
    Identity,
    Rooted(Leaf),
    Section(Vertex),
    Compose(Arc<Node>, Arc<Node>),
    /// Only ever wraps `Rooted` or `Section`.
    Inverse(Arc<Node>),
}

/// Walks a leaf automorphism along a path that moves away from `o` in the
/// source, tracking the image vertex and the local permutation at the
/// current source vertex.
struct Cursor<'a> {
    d: u8,
    node: &'a Node,
    src: Vertex,
    img: Vertex,
    key: u64,
    perm: LocalPerm,
}

impl<'a> Cursor<'a> {
    fn new(d: u8, node: &'a Node) -> Self {
        let src = Vertex::root();
        let (img, key, perm) = match node {
            Node::Rooted(Leaf::Seeded(seed)) => {
                let key = prf::root_key(*seed);
                (Vertex::root(), key, prf::perm_from_key(key, d, false))
            }
            Node::Rooted(leaf) => (Vertex::root(), 0, leaf_perm(d, leaf, &src)),
            Node::Section(t) => (t.clone(), 0, LocalPerm::identity(d)),
            _ => unreachable!("cursor over a non-leaf node"),
        };
        Cursor {
            d,
            node,
            src,
            img,
            key,
            perm,
        }
    }

    /// Moves the source one step through `color`, which must lead away
    /// from `o`.
    fn advance(&mut self, color: u8) {
        debug_assert!(self.src.is_root() || color != 0);
        let k = self.perm.apply(color);
        match self.node {
            Node::Section(_) => {
                let back = if k == 0 && !self.img.is_root() {
                    self.img.last_digit().unwrap()
                } else {
                    0
                };
                self.img = self.img.step(k);
                self.src.push(color);
                self.perm = LocalPerm::zero_to(self.d, back);
            }
            Node::Rooted(Leaf::Seeded(_)) => {
                self.img.push(k);
                self.src.push(color);
                self.key = prf::child_key(self.key, color);
                self.perm = prf::perm_from_key(self.key, self.d, true);
            }
            Node::Rooted(leaf) => {
                self.img.push(k);
                self.src.push(color);
                self.perm = leaf_perm(self.d, leaf, &self.src);
            }
            _ => unreachable!(),
        }
    }
}

fn leaf_perm(d: u8, leaf: &Leaf, v: &Vertex) -> LocalPerm {
    match leaf {
        Leaf::Finitary(p) => p.get(v),
        Leaf::Seeded(seed) => {
            prf::perm_from_key(prf::vertex_key(*seed, v), d, !v.is_root())
        }
        Leaf::Extended { root, shadow } => {
            if root.is_prefix_of(v) {
                shadow.local_perm(&Vertex::from_digits(&v.digits()[root.depth()..]))
            } else {
                LocalPerm::identity(d)
            }
        }
    }
}

fn leaf_target(node: &Node) -> Vertex {
    match node {
        Node::Section(t) => t.clone(),
        _ => Vertex::root(),
    }
}

impl Node {
    /// Image of `v` and the local permutation at `v`.
    fn eval(&self, d: u8, v: &Vertex) -> (Vertex, LocalPerm) {
        match self {
            Node::Identity => (v.clone(), LocalPerm::identity(d)),
            Node::Rooted(_) | Node::Section(_) => {
                let mut cur = Cursor::new(d, self);
                for &c in v.digits() {
                    cur.advance(c);
                }
                (cur.img, cur.perm)
            }
            Node::Compose(a, b) => {
                let (ia, pa) = a.eval(d, v);
                let (ib, pb) = b.eval(d, &ia);
                (ib, pa.then(&pb))
            }
            Node::Inverse(x) => {
                let cur = x.pull_back(d, v);
                (cur.src, cur.perm.inverse())
            }
        }
    }

    fn image(&self, d: u8, v: &Vertex) -> Vertex {
        match self {
            Node::Identity => v.clone(),
            Node::Compose(a, b) => b.image(d, &a.image(d, v)),
            Node::Inverse(x) => x.pull_back(d, v).src,
            _ => self.eval(d, v).0,
        }
    }

    fn preimage(&self, d: u8, v: &Vertex) -> Vertex {
        match self {
            Node::Identity => v.clone(),
            Node::Compose(a, b) => a.preimage(d, &b.preimage(d, v)),
            Node::Inverse(x) => x.image(d, v),
            _ => self.pull_back(d, v).src,
        }
    }

    /// Cursor positioned at the preimage of `v` (leaves only). The preimage
    /// of the geodesic from the target to `v` is a geodesic leaving `o`.
    fn pull_back(&self, d: u8, v: &Vertex) -> Cursor<'_> {
        let mut cur = Cursor::new(d, self);
        for k in geodesic_colors(&leaf_target(self), v) {
            let c = cur.perm.preimage(k);
            cur.advance(c);
        }
        cur
    }

    fn is_leaf(&self) -> bool {
        matches!(self, Node::Rooted(_) | Node::Section(_))
    }
}

fn compose_nodes(a: &Arc<Node>, b: &Arc<Node>) -> Arc<Node> {
    match (a.as_ref(), b.as_ref()) {
        (Node::Identity, _) => b.clone(),
        (_, Node::Identity) => a.clone(),
        _ => Arc::new(Node::Compose(a.clone(), b.clone())),
    }
}

fn invert_node(n: &Arc<Node>) -> Arc<Node> {
    match n.as_ref() {
        Node::Identity => n.clone(),
        Node::Compose(a, b) => compose_nodes(&invert_node(b), &invert_node(a)),
        Node::Inverse(x) => x.clone(),
        _ => {
            debug_assert!(n.is_leaf());
            Arc::new(Node::Inverse(n.clone()))
        }
    }
}

/// An automorphism of the d-regular tree.
#[derive(Clone)]
pub struct TreeAut {
    d: u8,
    node: Arc<Node>,
    target: Vertex,
}

impl TreeAut {
    pub fn identity(d: usize) -> Self {
        let tree = Tree::new(d).expect("degree in range");
        TreeAut {
            d: tree.degree(),
            node: Arc::new(Node::Identity),
            target: Vertex::root(),
        }
    }

    /// The canonical coset representative `m_v` with `o^(m_v) = v`.
    ///
    /// Built breadth-first from `o`: the star of `o` is matched to the star
    /// of `v` color for color; at every later vertex the edge back toward
    /// `o` goes wherever it is forced to, and the remaining colors are
    /// relabeled onto the remaining colors in increasing order.
    pub fn section(d: usize, v: &Vertex) -> Result<Self> {
        let tree = Tree::new(d)?;
        tree.check_vertex(v)?;
        if v.is_root() {
            return Ok(Self::identity(d));
        }
        Ok(TreeAut {
            d: tree.degree(),
            node: Arc::new(Node::Section(v.clone())),
            target: v.clone(),
        })
    }

    pub fn degree(&self) -> u8 {
        self.d
    }

    pub fn tree(&self) -> Tree {
        Tree::new(self.d as usize).unwrap()
    }

    /// The image of the base vertex.
    pub fn target(&self) -> &Vertex {
        &self.target
    }

    pub fn is_rooted(&self) -> bool {
        self.target.is_root()
    }

    pub fn image_vertex(&self, v: &Vertex) -> Vertex {
        self.node.image(self.d, v)
    }

    pub fn preimage_vertex(&self, v: &Vertex) -> Vertex {
        self.node.preimage(self.d, v)
    }

    pub fn image_edge(&self, e: &DirectedEdge) -> DirectedEdge {
        let (img, perm) = self.node.eval(self.d, &e.origin);
        DirectedEdge::new(img, perm.apply(e.color))
    }

    /// The local permutation cocycle at `v`: color `i` at `v` goes to color
    /// `local_perm(v)(i)` at `v^a`.
    pub fn local_perm(&self, v: &Vertex) -> LocalPerm {
        self.node.eval(self.d, v).1
    }

    /// Image of `v` together with the local permutation at `v`.
    pub fn image_and_perm(&self, v: &Vertex) -> (Vertex, LocalPerm) {
        self.node.eval(self.d, v)
    }

    /// `self` first, then `other`.
    pub fn compose(&self, other: &TreeAut) -> TreeAut {
        assert_eq!(self.d, other.d, "degree mismatch");
        TreeAut {
            d: self.d,
            node: compose_nodes(&self.node, &other.node),
            target: other.image_vertex(&self.target),
        }
    }

    pub fn try_compose(&self, other: &TreeAut) -> Result<TreeAut> {
        if self.d != other.d {
            return Err(Error::DegreeMismatch(self.d, other.d));
        }
        Ok(self.compose(other))
    }

    pub fn inverse(&self) -> TreeAut {
        TreeAut {
            d: self.d,
            node: invert_node(&self.node),
            target: self.preimage_vertex(&Vertex::root()),
        }
    }

    /// `self` raised to an integer power.
    pub fn pow(&self, k: i64) -> TreeAut {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = TreeAut::identity(self.d as usize);
        for _ in 0..k.unsigned_abs() {
            out = out.compose(&base);
        }
        out
    }

    /// Splits `a` as `(o^a, b)` with `a = b m_(o^a)` and `b` rooted.
    pub fn decompose(&self) -> (Vertex, RootedAut) {
        let t = self.target.clone();
        if t.is_root() {
            return (t, RootedAut(self.clone()));
        }
        // b m_t m_t^-1 simplifies to b
        if let Node::Compose(b, last) = self.node.as_ref() {
            if matches!(last.as_ref(), Node::Section(s) if *s == t) {
                let rooted = TreeAut {
                    d: self.d,
                    node: b.clone(),
                    target: Vertex::root(),
                };
                return (t, RootedAut(rooted));
            }
        }
        let m = TreeAut::section(self.d as usize, &t).unwrap();
        (t, RootedAut(self.compose(&m.inverse())))
    }

    /// Recomposes `(v, b)` into `b m_v`.
    pub fn recompose(v: &Vertex, b: &RootedAut) -> Result<TreeAut> {
        let m = TreeAut::section(b.degree() as usize, v)?;
        Ok(b.as_aut().compose(&m))
    }

    /// Agreement of the two actions on the ball of radius `depth`.
    pub fn equals_to_depth(&self, other: &TreeAut, depth: usize) -> bool {
        if self.d != other.d {
            return false;
        }
        self.tree()
            .ball_vertices(depth)
            .iter()
            .all(|v| self.image_vertex(v) == other.image_vertex(v))
    }

    /// First vertex of the ball (in breadth-first order) moved by `self`.
    pub fn first_moved(&self, depth: usize) -> Option<Vertex> {
        self.tree()
            .ball_vertices(depth)
            .into_iter()
            .find(|v| self.image_vertex(v) != *v)
    }

    pub fn is_identity_to_depth(&self, depth: usize) -> bool {
        self.first_moved(depth).is_none()
    }

    /// Portrait kind when the element fixes `o`.
    pub fn portrait_kind(&self) -> PortraitKind {
        match self.node.as_ref() {
            Node::Identity => PortraitKind::Identity,
            Node::Rooted(Leaf::Finitary(_)) => PortraitKind::Finitary,
            Node::Rooted(Leaf::Seeded(_)) => PortraitKind::Seeded,
            _ => PortraitKind::Derived,
        }
    }
}

impl fmt::Debug for TreeAut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TreeAut(d={}, o -> {}, {:?})", self.d, self.target, self.portrait_kind())
    }
}

/// An automorphism fixing the base vertex.
#[derive(Clone, Debug)]
pub struct RootedAut(TreeAut);

impl RootedAut {
    pub fn identity(d: usize) -> Self {
        RootedAut(TreeAut::identity(d))
    }

    pub fn from_portrait(p: FinitaryPortrait) -> Self {
        let d = p.d;
        if p.entries.is_empty() {
            return RootedAut::identity(d as usize);
        }
        RootedAut(TreeAut {
            d,
            node: Arc::new(Node::Rooted(Leaf::Finitary(Arc::new(p)))),
            target: Vertex::root(),
        })
    }

    pub fn from_entries<I>(d: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vertex, LocalPerm)>,
    {
        Ok(Self::from_portrait(FinitaryPortrait::new(
            d,
            entries.into_iter().collect(),
        )?))
    }

    /// Haar-random element of the vertex stabilizer: independent uniform
    /// local permutations (all of `Sym(d)` at `o`, the stabilizer of color 0
    /// elsewhere), each a pure function of `(seed, vertex)`.
    pub fn haar(d: usize, seed: u64) -> Self {
        let tree = Tree::new(d).expect("degree in range");
        RootedAut(TreeAut {
            d: tree.degree(),
            node: Arc::new(Node::Rooted(Leaf::Seeded(seed))),
            target: Vertex::root(),
        })
    }

    pub fn try_from_aut(a: TreeAut) -> Result<Self> {
        if a.is_rooted() {
            Ok(RootedAut(a))
        } else {
            Err(Error::NotRooted)
        }
    }

    pub fn as_aut(&self) -> &TreeAut {
        &self.0
    }

    pub fn into_aut(self) -> TreeAut {
        self.0
    }

    pub fn degree(&self) -> u8 {
        self.0.d
    }

    pub fn kind(&self) -> PortraitKind {
        self.0.portrait_kind()
    }

    pub fn compose(&self, other: &RootedAut) -> RootedAut {
        RootedAut(self.0.compose(&other.0))
    }

    pub fn inverse(&self) -> RootedAut {
        RootedAut(self.0.inverse())
    }

    /// The non-identity portrait entries on the ball of the given radius.
    pub fn portrait(&self, depth: usize) -> BTreeMap<Vertex, LocalPerm> {
        self.0
            .tree()
            .ball_vertices(depth)
            .into_iter()
            .filter_map(|v| {
                let p = self.0.local_perm(&v);
                (!p.is_identity()).then_some((v, p))
            })
            .collect()
    }

    /// Finitary element agreeing with `self` on the ball of radius
    /// `depth + 1`.
    pub fn flatten(&self, depth: usize) -> RootedAut {
        let entries = self.portrait(depth);
        RootedAut::from_portrait(
            FinitaryPortrait::new(self.degree() as usize, entries).expect("portrait is valid"),
        )
    }
}

impl std::ops::Deref for RootedAut {
    type Target = TreeAut;
    fn deref(&self) -> &TreeAut {
        &self.0
    }
}

impl From<RootedAut> for TreeAut {
    fn from(r: RootedAut) -> TreeAut {
        r.0
    }
}

/// `haar_rooted(seed) m_v`: a Haar-random element of the fiber of
/// automorphisms sending `o` to `v`.
pub fn haar_at(d: usize, v: &Vertex, seed: u64) -> Result<TreeAut> {
    let m = TreeAut::section(d, v)?;
    Ok(RootedAut::haar(d, seed).as_aut().compose(&m))
}

#[derive(Clone)]
enum ShadowKind {
    Identity,
    Finitary(Arc<BTreeMap<Vertex, LocalPerm>>),
    Seeded(u64),
    Restricted { aut: TreeAut, root: Vertex },
}

/// Automorphism of the shadow of a positive edge, viewed as a rooted
/// (d-1)-ary tree. Vertices are addressed relative to the shadow root, with
/// digits in `1..d`; local permutations fix color 0, which is how
/// `Sym({1, .., d-1})` is identified inside `Sym(d)`.
#[derive(Clone)]
pub struct ShadowAut {
    d: u8,
    kind: ShadowKind,
}

impl ShadowAut {
    pub fn identity(d: usize) -> Self {
        ShadowAut {
            d: Tree::new(d).expect("degree in range").degree(),
            kind: ShadowKind::Identity,
        }
    }

    pub fn haar(d: usize, seed: u64) -> Self {
        ShadowAut {
            d: Tree::new(d).expect("degree in range").degree(),
            kind: ShadowKind::Seeded(seed),
        }
    }

    pub fn from_entries(d: usize, entries: BTreeMap<Vertex, LocalPerm>) -> Result<Self> {
        let dd = Tree::new(d)?.degree();
        for (v, p) in &entries {
            if v.digits().iter().any(|&c| c == 0 || c >= dd) {
                return Err(Error::AddressDigit {
                    addr: v.to_string(),
                    pos: 0,
                    digit: 0,
                    d: dd,
                });
            }
            if p.degree() != dd || !p.fixes_zero() {
                return Err(Error::MovesZero(v.to_string()));
            }
        }
        Ok(ShadowAut {
            d: dd,
            kind: ShadowKind::Finitary(Arc::new(entries)),
        })
    }

    pub fn degree(&self) -> u8 {
        self.d
    }

    /// Local permutation at a relative address.
    pub fn local_perm(&self, rel: &Vertex) -> LocalPerm {
        match &self.kind {
            ShadowKind::Identity => LocalPerm::identity(self.d),
            ShadowKind::Finitary(m) => m
                .get(rel)
                .copied()
                .unwrap_or_else(|| LocalPerm::identity(self.d)),
            ShadowKind::Seeded(seed) => {
                prf::perm_from_key(prf::vertex_key(*seed, rel), self.d, true)
            }
            ShadowKind::Restricted { aut, root } => {
                let mut v = root.clone();
                for &c in rel.digits() {
                    v.push(c);
                }
                aut.local_perm(&v)
            }
        }
    }

    pub fn image(&self, rel: &Vertex) -> Vertex {
        let mut prefix = Vertex::root();
        let mut out = Vertex::root();
        for &c in rel.digits() {
            out.push(self.local_perm(&prefix).apply(c));
            prefix.push(c);
        }
        out
    }

    /// Relative addresses of the shadow down to the given depth,
    /// breadth-first.
    pub fn relative_ball(&self, depth: usize) -> Vec<Vertex> {
        let mut out = vec![Vertex::root()];
        let mut start = 0;
        for _ in 0..depth {
            let end = out.len();
            for i in start..end {
                let v = out[i].clone();
                out.extend((1..self.d).map(|c| v.child(c)));
            }
            start = end;
        }
        out
    }

    pub fn equals_to_depth(&self, other: &ShadowAut, depth: usize) -> bool {
        self.d == other.d
            && self
                .relative_ball(depth)
                .iter()
                .all(|v| self.local_perm(v) == other.local_perm(v))
    }
}

impl fmt::Debug for ShadowAut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ShadowAut(d={})", self.d)
    }
}

/// Restriction of `a` to the shadow of `e`; requires `e^a = e`.
pub fn restrict_to_shadow(a: &TreeAut, e: &DirectedEdge) -> Result<ShadowAut> {
    if !e.is_positive() {
        return Err(Error::NegativeEdge(e.to_string()));
    }
    if a.image_edge(e) != *e {
        return Err(Error::NotStabilized(e.to_string()));
    }
    Ok(ShadowAut {
        d: a.d,
        kind: ShadowKind::Restricted {
            aut: a.clone(),
            root: e.terminus(),
        },
    })
}

/// The automorphism acting as `y` on the shadow of `e` and fixing every
/// other vertex.
pub fn extend_by_identity(y: &ShadowAut, e: &DirectedEdge) -> Result<TreeAut> {
    if !e.is_positive() {
        return Err(Error::NegativeEdge(e.to_string()));
    }
    Tree::new(y.d as usize)?.check_edge(e)?;
    Ok(TreeAut {
        d: y.d,
        node: Arc::new(Node::Rooted(Leaf::Extended {
            root: e.terminus(),
            shadow: y.clone(),
        })),
        target: Vertex::root(),
    })
}

/// The color-preserving identification of `Shadow[e]` with `Shadow[f]`:
/// swap the terminus prefix, keep the remaining digits. Returns `None` when
/// `x` is not in `Shadow[e]`.
pub fn shadow_transport(e: &DirectedEdge, f: &DirectedEdge, x: &Vertex) -> Result<Option<Vertex>> {
    if !e.is_positive() {
        return Err(Error::NegativeEdge(e.to_string()));
    }
    if !f.is_positive() {
        return Err(Error::NegativeEdge(f.to_string()));
    }
    let te = e.terminus();
    if !te.is_prefix_of(x) {
        return Ok(None);
    }
    let mut out = f.terminus();
    for &c in &x.digits()[te.depth()..] {
        out.push(c);
    }
    Ok(Some(out))
}

/// The transport map on the shadow down to relative depth `depth`.
pub fn shadow_transport_map(
    tree: &Tree,
    e: &DirectedEdge,
    f: &DirectedEdge,
    depth: usize,
) -> Result<Vec<(Vertex, Vertex)>> {
    tree.shadow_vertices(e, depth)?
        .into_iter()
        .map(|x| {
            let y = shadow_transport(e, f, &x)?.expect("x lies in the shadow");
            Ok((x, y))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Vertex {
        Vertex::parse(s).unwrap()
    }

    fn perm(images: &[usize]) -> LocalPerm {
        LocalPerm::from_images(images).unwrap()
    }

    #[test]
    fn portrait_examples() {
        let id = RootedAut::identity(3);
        assert_eq!(id.image_vertex(&v("o.1.2")), v("o.1.2"));

        let a = RootedAut::from_entries(3, [(v("o"), perm(&[1, 0, 2]))]).unwrap();
        assert_eq!(a.image_vertex(&v("o.0.2")), v("o.1.2"));

        let b = RootedAut::from_entries(3, [(v("o"), perm(&[0, 1, 2])), (v("o.1"), perm(&[0, 2, 1]))])
            .unwrap();
        assert_eq!(b.image_vertex(&v("o.1.1")), v("o.1.2"));
    }

    #[test]
    fn portrait_validation() {
        assert_eq!(
            RootedAut::from_entries(3, [(v("o.1"), perm(&[1, 0, 2]))]).unwrap_err(),
            Error::MovesZero("o.1".into())
        );
        assert!(RootedAut::from_entries(3, [(v("o.3"), perm(&[0, 1, 2]))]).is_err());
        assert!(RootedAut::from_entries(3, [(v("o"), perm(&[0, 1, 2, 3]))]).is_err());
    }

    #[test]
    fn portrait_json_roundtrip() {
        let text = r#"{"d": 3, "entries": {"o": [1,0,2], "o.1": [0,2,1]}}"#;
        let p = FinitaryPortrait::from_json(text).unwrap();
        assert_eq!(p.get(&v("o")).images(), &[1, 0, 2]);
        assert_eq!(FinitaryPortrait::from_json(&p.to_json()).unwrap(), p);
        let bad = r#"{"d": 3, "entries": {"o.1": [1,0,2]}}"#;
        assert!(FinitaryPortrait::from_json(bad).is_err());
    }

    #[test]
    fn sections() {
        let m = TreeAut::section(3, &v("o.1")).unwrap();
        assert_eq!(m.image_vertex(&Vertex::root()), v("o.1"));
        assert_eq!(m.image_vertex(&v("o.1")), v("o.1.1"));
        assert_eq!(m.image_vertex(&v("o.0")), Vertex::root());
        assert_eq!(m.image_vertex(&v("o.0.1")), v("o.0"));
        assert_eq!(m.image_vertex(&v("o.2")), v("o.1.2"));

        let m0 = TreeAut::section(3, &v("o.0")).unwrap();
        assert_eq!(m0.image_vertex(&Vertex::root()), v("o.0"));
        assert_eq!(m0.image_vertex(&v("o.0")), Vertex::root());

        assert_eq!(TreeAut::section(3, &Vertex::root()).unwrap().portrait_kind(), PortraitKind::Identity);
    }

    #[test]
    fn cocycle_root_example() {
        let a = RootedAut::from_entries(3, [(v("o"), LocalPerm::transposition(3, 0, 1))]).unwrap();
        let b = RootedAut::from_entries(3, [(v("o"), LocalPerm::transposition(3, 1, 2))]).unwrap();
        assert_eq!(a.compose(&b).local_perm(&Vertex::root()).images(), &[2, 0, 1]);
    }

    #[test]
    fn inverse_of_section_and_haar() {
        let tree = Tree::new(3).unwrap();
        for seed in 0..20 {
            let a = haar_at(3, &v("o.1.2"), seed).unwrap();
            let ai = a.inverse();
            for x in tree.ball_vertices(5) {
                assert_eq!(ai.image_vertex(&a.image_vertex(&x)), x);
                assert_eq!(a.preimage_vertex(&x), ai.image_vertex(&x));
            }
            assert!(a.compose(&ai).is_identity_to_depth(6));
        }
    }

    #[test]
    fn decompose_examples() {
        let (t, b) = TreeAut::identity(3).decompose();
        assert!(t.is_root());
        assert!(b.is_identity_to_depth(4));

        let m = TreeAut::section(3, &v("o.2.1")).unwrap();
        let (t, b) = m.decompose();
        assert_eq!(t, v("o.2.1"));
        assert!(b.is_identity_to_depth(5));
    }

    #[test]
    fn haar_is_pure_in_seed() {
        let a = RootedAut::haar(4, 11);
        let b = RootedAut::haar(4, 11);
        assert!(a.equals_to_depth(&b, 4));
        let x = v("o.3.2.1");
        assert_eq!(a.local_perm(&x), b.local_perm(&x));
        assert_eq!(a.image_vertex(&x), b.image_vertex(&x));
        assert_eq!(a.kind(), PortraitKind::Seeded);
    }

    #[test]
    fn flatten_agrees_on_ball() {
        let a = RootedAut::haar(3, 5).compose(&RootedAut::haar(3, 6));
        let f = a.flatten(4);
        assert_eq!(f.kind(), PortraitKind::Finitary);
        assert!(a.equals_to_depth(&f, 5));
    }

    #[test]
    fn shadow_roundtrip() {
        let e = DirectedEdge::new(v("o.2"), 1);
        let y = ShadowAut::haar(4, 99);
        let a = extend_by_identity(&y, &e).unwrap();
        assert!(a.is_rooted());
        let back = restrict_to_shadow(&a, &e).unwrap();
        assert!(back.equals_to_depth(&y, 4));
        assert!(restrict_to_shadow(&TreeAut::section(4, &v("o.1")).unwrap(), &e).is_err());
    }

    #[test]
    fn transport_examples() {
        let e = DirectedEdge::new(Vertex::root(), 1);
        let f = DirectedEdge::new(Vertex::root(), 2);
        assert_eq!(shadow_transport(&e, &f, &v("o.1.2.1")).unwrap(), Some(v("o.2.2.1")));
        assert_eq!(shadow_transport(&e, &e, &v("o.1.2.1")).unwrap(), Some(v("o.1.2.1")));
        assert_eq!(shadow_transport(&e, &f, &v("o.2")).unwrap(), None);
        assert!(shadow_transport(&DirectedEdge::new(v("o.1"), 0), &f, &v("o")).is_err());
    }
}
