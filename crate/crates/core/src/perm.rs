//! Permutations of the color set `{0, .., d-1}`.
//!
//! Composition is left to right: `p.then(q)` applies `p` first. With this
//! convention the local permutation cocycle satisfies
//! `lp(ab, v) = lp(a, v).then(lp(b, v^a))`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tree::MAX_DEGREE;

/// A permutation in one-line notation: `images[i]` is the image of color `i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalPerm {
    len: u8,
    images: [u8; MAX_DEGREE],
}

impl LocalPerm {
    pub fn identity(n: u8) -> Self {
        let mut images = [0u8; MAX_DEGREE];
        for (i, x) in images.iter_mut().enumerate().take(n as usize) {
            *x = i as u8;
        }
        LocalPerm { len: n, images }
    }

    pub fn from_images(images: &[usize]) -> Result<Self> {
        let n = images.len();
        if n == 0 || n > MAX_DEGREE {
            return Err(Error::Permutation(images.to_vec()));
        }
        let mut seen = [false; MAX_DEGREE];
        let mut out = [0u8; MAX_DEGREE];
        for (i, &x) in images.iter().enumerate() {
            if x >= n || seen[x] {
                return Err(Error::Permutation(images.to_vec()));
            }
            seen[x] = true;
            out[i] = x as u8;
        }
        Ok(LocalPerm {
            len: n as u8,
            images: out,
        })
    }

    /// The transposition of `a` and `b` on `n` letters.
    pub fn transposition(n: u8, a: u8, b: u8) -> Self {
        let mut p = Self::identity(n);
        p.images.swap(a as usize, b as usize);
        p
    }

    /// Sends `0` to `c` and relabels `1..n` onto the remaining colors in
    /// increasing order.
    pub fn zero_to(n: u8, c: u8) -> Self {
        let mut images = [0u8; MAX_DEGREE];
        images[0] = c;
        let mut next = 0u8;
        for slot in images.iter_mut().take(n as usize).skip(1) {
            if next == c {
                next += 1;
            }
            *slot = next;
            next += 1;
        }
        LocalPerm { len: n, images }
    }

    pub(crate) fn from_raw(len: u8, images: [u8; MAX_DEGREE]) -> Self {
        LocalPerm { len, images }
    }

    pub fn degree(&self) -> u8 {
        self.len
    }

    pub fn images(&self) -> &[u8] {
        &self.images[..self.len as usize]
    }

    #[inline]
    pub fn apply(&self, i: u8) -> u8 {
        self.images[i as usize]
    }

    /// Left-to-right product: `self` first, then `other`.
    pub fn then(&self, other: &LocalPerm) -> LocalPerm {
        debug_assert_eq!(self.len, other.len);
        let mut images = [0u8; MAX_DEGREE];
        for (i, slot) in images.iter_mut().enumerate().take(self.len as usize) {
            *slot = other.images[self.images[i] as usize];
        }
        LocalPerm {
            len: self.len,
            images,
        }
    }

    pub fn inverse(&self) -> LocalPerm {
        let mut images = [0u8; MAX_DEGREE];
        for i in 0..self.len as usize {
            images[self.images[i] as usize] = i as u8;
        }
        LocalPerm {
            len: self.len,
            images,
        }
    }

    #[inline]
    pub fn preimage(&self, j: u8) -> u8 {
        self.images()
            .iter()
            .position(|&x| x == j)
            .expect("color out of range") as u8
    }

    pub fn is_identity(&self) -> bool {
        self.images().iter().enumerate().all(|(i, &x)| i == x as usize)
    }

    /// Member of the stabilizer of color 0.
    pub fn fixes_zero(&self) -> bool {
        self.images[0] == 0
    }

    pub fn fixed_points(&self) -> usize {
        self.images()
            .iter()
            .enumerate()
            .filter(|(i, &x)| *i == x as usize)
            .count()
    }

    /// Rank in the lexicographic order of all permutations of `len` letters.
    pub fn lehmer_rank(&self) -> usize {
        let n = self.len as usize;
        let mut rank = 0usize;
        for i in 0..n {
            let smaller = self.images[i + 1..n]
                .iter()
                .filter(|&&x| x < self.images[i])
                .count();
            rank = rank * (n - i) + smaller;
        }
        rank
    }

    /// Every permutation of `n` letters, in lexicographic order.
    pub fn all(n: u8) -> Vec<LocalPerm> {
        let mut out = Vec::new();
        let mut cur = Self::identity(n);
        loop {
            out.push(cur);
            // next lexicographic permutation
            let a = &mut cur.images[..n as usize];
            let Some(i) = (0..a.len().saturating_sub(1)).rev().find(|&i| a[i] < a[i + 1]) else {
                break;
            };
            let j = (i + 1..a.len()).rev().find(|&j| a[j] > a[i]).unwrap();
            a.swap(i, j);
            a[i + 1..].reverse();
        }
        out
    }

    /// Every permutation of `n` letters fixing 0, in lexicographic order.
    pub fn all_fixing_zero(n: u8) -> Vec<LocalPerm> {
        Self::all(n).into_iter().filter(|p| p.fixes_zero()).collect()
    }
}

impl fmt::Debug for LocalPerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.images())
    }
}

impl fmt::Display for LocalPerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.images())
    }
}

impl Serialize for LocalPerm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.images().serialize(s)
    }
}

impl<'de> Deserialize<'de> for LocalPerm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let images = Vec::<usize>::deserialize(d)?;
        LocalPerm::from_images(&images).map_err(serde::de::Error::custom)
    }
}
