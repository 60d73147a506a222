//! Exact computation in the automorphism group of the d-regular tree.
//!
//! Vertices are addressed by color strings under a fixed legal coloring
//! (`o`, `o.2`, `o.2.1`, ...). Automorphisms are lazy: a rooted element is a
//! portrait of local permutations, a general element is a rooted element
//! followed by a canonical coset representative, and products and inverses
//! are evaluated on demand through the local permutation cocycle.
//!
//! Module map:
//! - [`tree`]: addresses, directed edges, metric, balls, shadows.
//! - [`perm`]: local permutations of the color set.
//! - [`prf`]: counter-based pseudo-random function used for seeded portraits.
//! - [`automorphism`]: rooted and general automorphisms, Haar sampling,
//!   sections, shadow restriction.
//! - [`dynamics`]: elliptic / inversion / hyperbolic classification, axes,
//!   fixed-point trees.
//! - [`words`]: the free product with an infinite cyclic group, traces and the
//!   cocycle factorization machinery.
//! - [`oracle`]: dense truncations used as ground truth.
//! - [`stats`]: exact reference laws and goodness-of-fit statistics.
//! - [`experiment`]: Monte Carlo experiments shared by the CLI and tests.

pub mod automorphism;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod perm;
pub mod prf;
pub mod stats;
pub mod tree;
pub mod words;

pub use automorphism::{haar_at, FinitaryPortrait, PortraitKind, RootedAut, ShadowAut, TreeAut};
pub use dynamics::{classify, displacement, ElementClass, FixedTree, Kind, OffspringStats};
pub use error::{Error, Result};
pub use perm::LocalPerm;
pub use tree::{DirectedEdge, Tree, Vertex};
pub use words::{Assignment, Letter, Trace, TraceContext, Word};
