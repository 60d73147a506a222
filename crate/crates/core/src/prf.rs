//! A keyed, counter-based pseudo-random function over vertex addresses.
//!
//! Every seeded object in the crate is a pure function of `(seed, address)`:
//! the key of a vertex is obtained by folding its digits into the key of the
//! seed, and the random words used at that vertex are read from a counter
//! stream derived from the key. Nothing depends on evaluation order, so
//! samples can be generated in any order and on any number of threads.
//!
//! The mixing function is the SplitMix64 finalizer. Distinct salts separate
//! the digit-folding chain from the per-vertex output stream.

use crate::perm::LocalPerm;
use crate::tree::{Vertex, MAX_DEGREE};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const SEED_SALT: u64 = 0x5851_F42D_4C95_7F2D;
const CHILD_SALT: u64 = 0x1405_7B7E_F767_814F;
const STREAM_SALT: u64 = 0xD1B5_4A32_D192_ED03;
const DERIVE_SALT: u64 = 0xA076_1D64_78BD_642F;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key of the base vertex for a seed.
#[inline]
pub fn root_key(seed: u64) -> u64 {
    mix64(mix64(seed ^ SEED_SALT).wrapping_add(GOLDEN))
}

/// Key of the child reached through `digit` from a vertex with key `key`.
#[inline]
pub fn child_key(key: u64, digit: u8) -> u64 {
    mix64((key ^ CHILD_SALT).wrapping_add(GOLDEN.wrapping_mul(digit as u64 + 1)))
}

pub fn vertex_key(seed: u64, v: &Vertex) -> u64 {
    v.digits()
        .iter()
        .fold(root_key(seed), |k, &digit| child_key(k, digit))
}

/// The `i`-th output word attached to a key.
#[inline]
pub fn stream(key: u64, i: u64) -> u64 {
    mix64((key ^ STREAM_SALT).wrapping_add(GOLDEN.wrapping_mul(i + 1)))
}

/// Uniform integer in `0..bound` by multiply-shift. The bias is below
/// `bound / 2^64`.
#[inline]
pub fn below(word: u64, bound: u64) -> u64 {
    ((word as u128 * bound as u128) >> 64) as u64
}

/// Independent sub-seed for sample `index` of a run with base seed `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix64(mix64(base ^ DERIVE_SALT).wrapping_add(GOLDEN.wrapping_mul(index + 1)))
}

/// Uniform permutation of `0..n` (when `fix_zero` is false) or of `1..n`
/// with 0 fixed, driven by the output stream of `key` through Fisher-Yates.
pub fn perm_from_key(key: u64, n: u8, fix_zero: bool) -> LocalPerm {
    let mut images = [0u8; MAX_DEGREE];
    for (i, x) in images.iter_mut().enumerate().take(n as usize) {
        *x = i as u8;
    }
    let lo = fix_zero as usize;
    let slice = &mut images[lo..n as usize];
    let m = slice.len();
    for i in (1..m).rev() {
        let j = below(stream(key, i as u64), i as u64 + 1) as usize;
        slice.swap(i, j);
    }
    LocalPerm::from_raw(n, images)
}
