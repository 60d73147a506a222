//! Element generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use arbor_core::automorphism::extend_by_identity;
use arbor_core::prf::{below, derive_seed, perm_from_key, stream};
use arbor_core::{haar_at, DirectedEdge, LocalPerm, RootedAut, ShadowAut, Tree, TreeAut, Vertex};

/// Uniform vertex of the ball of radius `depth`.
pub fn random_vertex(tree: &Tree, depth: usize, seed: u64) -> Vertex {
    let n = tree.ball_size(depth) as u64;
    let i = below(stream(seed, 0), n) as usize;
    tree.ball_vertices(depth).swap_remove(i)
}

/// Finitary rooted element with random local permutations on the ball of
/// radius `depth`.
pub fn random_finitary(d: usize, depth: usize, seed: u64) -> RootedAut {
    let tree = Tree::new(d).unwrap();
    let entries: BTreeMap<Vertex, LocalPerm> = tree
        .ball_vertices(depth)
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let key = derive_seed(seed, i as u64);
            let p = perm_from_key(key, d as u8, !v.is_root());
            (v, p)
        })
        .collect();
    RootedAut::from_entries(d, entries).unwrap()
}

/// Haar element of a random shadow, extended by the identity.
pub fn random_extended(d: usize, seed: u64) -> TreeAut {
    let tree = Tree::new(d).unwrap();
    let v = random_vertex(&tree, 2, seed);
    let e = if v.is_root() {
        DirectedEdge::new(v, 1)
    } else {
        DirectedEdge::new(v, (d - 1) as u8)
    };
    extend_by_identity(&ShadowAut::haar(d, seed ^ 0x55), &e).unwrap()
}

/// An element of one of several kinds, chosen by `kind % 5`: seeded Haar,
/// finitary, Haar on a random fiber, extended shadow, or a product.
pub fn element(d: usize, kind: u64, seed: u64) -> TreeAut {
    let tree = Tree::new(d).unwrap();
    match kind % 5 {
        0 => RootedAut::haar(d, seed).into_aut(),
        1 => random_finitary(d, 3, seed).into_aut(),
        2 => haar_at(d, &random_vertex(&tree, 3, seed), seed).unwrap(),
        3 => random_extended(d, seed),
        _ => {
            let a = haar_at(d, &random_vertex(&tree, 2, seed), seed).unwrap();
            let b = random_finitary(d, 2, seed ^ 1).into_aut();
            a.compose(&b).inverse()
        }
    }
}

/// Image of `v` under the rooted element with the given portrait, by the
/// digit rule applied directly to the portrait table.
pub fn image_by_portrait(portrait: &BTreeMap<Vertex, LocalPerm>, d: u8, v: &Vertex) -> Vertex {
    let mut prefix = Vertex::root();
    let mut out = Vertex::root();
    for &c in v.digits() {
        let p = portrait.get(&prefix).copied().unwrap_or_else(|| LocalPerm::identity(d));
        out.push(p.apply(c));
        prefix.push(c);
    }
    out
}
