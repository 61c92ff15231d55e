//! Divisibility probabilities `P{d | S_n + u}` for sums of i.i.d. lattice-valued
//! random variables.
//!
//! The crate computes these probabilities exactly (cyclic convolution on residue
//! vectors, character sums, brute-force enumeration), builds the theta-function
//! approximants for Bernoulli sums and their extension to general lattice laws
//! through the Bernoulli-part coupling `X = V + eps * D * L`, and measures the
//! discrepancy between the two at desk scale.
//!
//! ```
//! use semilocal_core::{exactprob, lattice::LatticeLaw, DivisibilityQuery};
//!
//! let coin = LatticeLaw::bernoulli();
//! let q = DivisibilityQuery::new(4, 3, 0).unwrap();
//! let p = exactprob::prob_divisible_convolution_exact(&coin, &q);
//! assert_eq!(p.to_string(), "5/16");
//! ```
//!
//! Grid sweeps take an [`Exec`] argument. With the `parallel` feature (on by
//! default) [`Exec::Parallel`] fans work out over rayon; results always come
//! back in input order, so output does not depend on the worker count.

pub mod bounds;
pub mod coupling;
pub mod divisorsets;
mod error;
mod exec;
pub mod exactprob;
pub mod format;
pub mod lattice;
pub mod rational;
pub mod semilocal;
pub mod theta;

pub use error::{Error, InfeasibleReason, Result};
pub use exactprob::DivisibilityQuery;
pub use exec::Exec;
