//! Graph isomorphism testing through continuous optimization.
//!
//! The library decides whether two weighted undirected graphs are isomorphic
//! by relaxing the problem to the doubly stochastic polytope, restricting the
//! search to the null space of the commutation operator built from the two
//! adjacency matrices, and minimizing a concave penalty with a Frank-Wolfe
//! solver. A positive answer always comes with a permutation certificate that
//! is re-verified exactly; a negative answer is backed by a spectral, sign, or
//! LP feasibility proof. Anything else is reported as inconclusive.
//!
//! Module map:
//! - [`graph`]: graph representation, named generators, permutations, file I/O
//! - [`spectral`]: grouped eigendecomposition and eigenvector classification
//! - [`relaxation`]: the commutation operator, its null space, and sign fixing
//! - [`simplex`]: the dense LP engine used as the linear minimization oracle
//! - [`solver`]: the full decision pipeline with restarts and certificates

pub mod assignment;
pub mod graph;
pub mod relaxation;
pub mod simplex;
pub mod solver;
pub mod spectral;
pub mod vectorize;


pub use graph::{Permutation, WeightedGraph};
pub use solver::{check, IsoVerdict, SolverConfig};
