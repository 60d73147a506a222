//! Brute-force reference semantics.
//!
//! A [`DenseAut`] is the action of a rooted automorphism on a finite ball,
//! stored as an explicit image table. Everything here is computed directly
//! from digit strings and tables, never through the lazy evaluation paths it
//! is used to check.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::automorphism::TreeAut;
use crate::dynamics::Kind;
use crate::error::{Error, Result};
use crate::perm::LocalPerm;
use crate::tree::{distance, Tree, Vertex};

pub const ENUMERATION_GUARD: u128 = 1_000_000;

/// Image table of a rooted automorphism on the ball of radius `depth`,
/// indexed in breadth-first order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DenseAut {
    d: u8,
    depth: usize,
    images: Vec<u32>,
}

#[derive(Serialize)]
struct DenseJson {
    d: u8,
    depth: usize,
    images: Vec<(String, String)>,
}

impl DenseAut {
    pub fn identity(tree: &Tree, depth: usize) -> Self {
        DenseAut {
            d: tree.degree(),
            depth,
            images: (0..tree.ball_size(depth) as u32).collect(),
        }
    }

    pub fn degree(&self) -> u8 {
        self.d
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn tree(&self) -> Tree {
        Tree::new(self.d as usize).unwrap()
    }

    pub fn image_index(&self, i: usize) -> usize {
        self.images[i] as usize
    }

    pub fn image(&self, v: &Vertex) -> Vertex {
        let tree = self.tree();
        let ball = tree.ball_vertices(self.depth);
        ball[self.images[tree.ball_index(v)] as usize].clone()
    }

    /// The table as `(vertex, image)` pairs.
    pub fn pairs(&self) -> Vec<(Vertex, Vertex)> {
        let ball = self.tree().ball_vertices(self.depth);
        self.images
            .iter()
            .enumerate()
            .map(|(i, &j)| (ball[i].clone(), ball[j as usize].clone()))
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let images = self
            .pairs()
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        serde_json::to_value(DenseJson {
            d: self.d,
            depth: self.depth,
            images,
        })
        .unwrap()
    }

    /// Checks the table is an automorphism of the truncated rooted tree:
    /// fixes `o`, is bijective, preserves levels and the parent relation.
    pub fn is_valid(&self) -> bool {
        let ball = self.tree().ball_vertices(self.depth);
        if self.images.first() != Some(&0) {
            return false;
        }
        let mut seen = vec![false; ball.len()];
        for (i, &j) in self.images.iter().enumerate() {
            let j = j as usize;
            if seen[j] || ball[i].depth() != ball[j].depth() {
                return false;
            }
            seen[j] = true;
            if let Some(p) = ball[i].parent() {
                let tree = self.tree();
                let pi = self.images[tree.ball_index(&p)] as usize;
                if ball[j].parent().as_ref() != Some(&ball[pi]) {
                    return false;
                }
            }
        }
        true
    }
}

fn check_pair(a: &DenseAut, b: &DenseAut) -> Result<()> {
    if a.d != b.d {
        return Err(Error::DegreeMismatch(a.d, b.d));
    }
    if a.depth != b.depth {
        return Err(Error::Config(format!(
            "truncation depths differ: {} vs {}",
            a.depth, b.depth
        )));
    }
    Ok(())
}

/// Table of a rooted automorphism on the ball of radius `depth`.
pub fn densify(a: &TreeAut, depth: usize) -> Result<DenseAut> {
    if !a.is_rooted() {
        return Err(Error::NotRooted);
    }
    let tree = a.tree();
    let images = tree
        .ball_vertices(depth)
        .iter()
        .map(|v| tree.ball_index(&a.image_vertex(v)) as u32)
        .collect();
    Ok(DenseAut {
        d: tree.degree(),
        depth,
        images,
    })
}

/// `a` first, then `b`.
pub fn dense_compose(a: &DenseAut, b: &DenseAut) -> Result<DenseAut> {
    check_pair(a, b)?;
    Ok(DenseAut {
        d: a.d,
        depth: a.depth,
        images: a.images.iter().map(|&i| b.images[i as usize]).collect(),
    })
}

pub fn dense_inverse(a: &DenseAut) -> DenseAut {
    let mut images = vec![0u32; a.images.len()];
    for (i, &j) in a.images.iter().enumerate() {
        images[j as usize] = i as u32;
    }
    DenseAut {
        d: a.d,
        depth: a.depth,
        images,
    }
}

pub fn dense_fixed_points(a: &DenseAut) -> BTreeSet<Vertex> {
    let ball = a.tree().ball_vertices(a.depth);
    a.images
        .iter()
        .enumerate()
        .filter(|(i, &j)| *i == j as usize)
        .map(|(i, _)| ball[i].clone())
        .collect()
}

/// Type and translation length by exhaustive displacement minimization over
/// the ball. Meaningful when the minimal set meets the ball.
pub fn dense_classify_on_ball(a: &DenseAut) -> (Kind, usize) {
    let ball = a.tree().ball_vertices(a.depth);
    let min = a
        .images
        .iter()
        .enumerate()
        .map(|(i, &j)| distance(&ball[i], &ball[j as usize]))
        .min()
        .unwrap_or(0);
    if min > 0 {
        return (Kind::Hyperbolic, min);
    }
    if a.images.iter().enumerate().any(|(i, &j)| i == j as usize) {
        (Kind::Elliptic, 0)
    } else {
        (Kind::Inversion, 0)
    }
}

/// Same as [`dense_classify_on_ball`] for an arbitrary automorphism, by
/// scanning the ball with `image_vertex` directly.
pub fn brute_classify(a: &TreeAut, depth: usize) -> (Kind, usize) {
    let ball = a.tree().ball_vertices(depth);
    let mut min = usize::MAX;
    let mut inverted = false;
    for x in &ball {
        let y = a.image_vertex(x);
        let dxy = distance(x, &y);
        min = min.min(dxy);
        if dxy == 1 && a.image_vertex(&y) == *x {
            inverted = true;
        }
    }
    if min > 0 && inverted {
        (Kind::Inversion, 0)
    } else if min > 0 {
        (Kind::Hyperbolic, min)
    } else {
        (Kind::Elliptic, 0)
    }
}

/// Color of the edge from `x` to the adjacent vertex `y`.
fn edge_color(x: &Vertex, y: &Vertex) -> u8 {
    if y.depth() > x.depth() {
        y.last_digit().unwrap()
    } else {
        0
    }
}

/// Local permutation at `v` read off the vertex action alone: color `i` at
/// `v` goes to the color of the edge from `v^a` to the image of the
/// neighbor through `i`.
pub fn local_perm_by_images(a: &TreeAut, v: &Vertex) -> LocalPerm {
    let img = a.image_vertex(v);
    let images: Vec<usize> = (0..a.degree())
        .map(|c| edge_color(&img, &a.image_vertex(&v.step(c))) as usize)
        .collect();
    LocalPerm::from_images(&images).expect("vertex action is locally bijective")
}

fn group_order(d: u8, depth: usize) -> u128 {
    if depth == 0 {
        return 1;
    }
    let tree = Tree::new(d as usize).unwrap();
    let fact = |n: u8| (1..=n as u128).product::<u128>();
    let inner = tree.ball_size(depth - 1) as u32 - 1;
    fact(d).saturating_mul(fact(d - 1).saturating_pow(inner))
}

/// All automorphisms of the rooted ball of radius `depth`, without
/// repetition: every choice of a permutation of all colors at `o` and of a
/// color-0-fixing permutation at each other vertex of radius `depth - 1`.
pub fn enumerate_group(d: usize, depth: usize) -> Result<Vec<DenseAut>> {
    let tree = Tree::new(d)?;
    let dd = tree.degree();
    let order = group_order(dd, depth);
    if order > ENUMERATION_GUARD {
        return Err(Error::TooLarge(order.to_string()));
    }
    if depth == 0 {
        return Ok(vec![DenseAut::identity(&tree, 0)]);
    }
    let inner = tree.ball_vertices(depth - 1);
    let ball = tree.ball_vertices(depth);
    let root_perms = LocalPerm::all(dd);
    let other_perms = LocalPerm::all_fixing_zero(dd);
    let radices: Vec<usize> = inner
        .iter()
        .map(|v| {
            if v.is_root() {
                root_perms.len()
            } else {
                other_perms.len()
            }
        })
        .collect();

    let mut out = Vec::with_capacity(order as usize);
    let mut counter = vec![0usize; inner.len()];
    loop {
        let perm_at = |i: usize| {
            if i == 0 {
                root_perms[counter[0]]
            } else {
                other_perms[counter[i]]
            }
        };
        // digit rule: image digit i is the portrait entry at the source
        // prefix of length i - 1 applied to source digit i
        let images = ball
            .iter()
            .map(|v| {
                let mut img = Vec::with_capacity(v.depth());
                for k in 0..v.depth() {
                    let src_prefix = v.prefix(k);
                    img.push(perm_at(tree.ball_index(&src_prefix)).apply(v.digits()[k]));
                }
                tree.ball_index(&Vertex::from_digits(&img)) as u32
            })
            .collect();
        out.push(DenseAut {
            d: dd,
            depth,
            images,
        });

        let mut pos = 0;
        loop {
            if pos == counter.len() {
                return Ok(out);
            }
            counter[pos] += 1;
            if counter[pos] < radices[pos] {
                break;
            }
            counter[pos] = 0;
            pos += 1;
        }
    }
}
