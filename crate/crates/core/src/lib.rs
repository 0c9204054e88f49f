//! Bayesian domain randomization.
//!
//! A bilevel optimizer that adapts the distribution a physics simulator draws
//! its parameters from. The lower level trains a policy in simulators sampled
//! from that distribution; the upper level is a Gaussian-process Bayesian
//! optimizer that picks the next distribution so the trained policy scores
//! well on a held-out target domain.
//!
//! The crate is `no_std` (with `alloc`). All file formats, configuration and
//! the command line live in the `bayrn-lab` companion crate.
//!
//! Layout:
//!
//! - [`furuta`], [`ballcup`]: the two simulators.
//! - [`domains`]: parameter specs, sampling distributions and the search box.
//! - [`policy`]: RBF movement primitive and energy/balance feedback policy.
//! - [`task`]: glue that turns (policy, domain) into rollouts and returns.
//! - [`polopt`]: PoWER and CEM episodic policy optimizers.
//! - [`gp`]: Matérn 5/2 Gaussian process, expected improvement, acquisition search.
//! - [`bayrn`]: the outer loop plus the UDR and nominal baselines.

#![no_std]
// When std is linked into the build its inherent float methods shadow
// `num_traits::Float`, leaving those imports unused.
#![allow(unused_imports)]

extern crate alloc;

pub mod ballcup;
pub mod bayrn;
pub mod domains;
pub mod error;
pub mod furuta;
pub mod gp;
pub mod policy;
pub mod polopt;
pub mod rng;
pub mod task;

pub use error::{Error, Result};
