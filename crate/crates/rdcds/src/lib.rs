//! Robust dynamic coded distributed storage for clusters where some servers
//! can hold only a fraction of the message.
//!
//! The library builds two-layer staircase-coded storage over a prime field,
//! plans and executes dropout-tolerant reads and collusion-resistant additive
//! updates, and audits every measured communication cost against converse
//! bounds computed twice: in closed form and as exact rational linear
//! programs. A scenario simulator, machine verifiers for the scheme's
//! structural and information-theoretic guarantees, and a CLI sit on top.
//!
//! Layout:
//! - [`field`], [`rational`]: exact arithmetic (prime field, big rationals).
//! - [`params`]: parameter tuples, feasibility cases, derived layer geometry.
//! - [`codec`]: staircase layers, re-encoding passes, the Cauchy code.
//! - [`storage`]: cluster state, shares, consistency checks.
//! - [`read`], [`update`]: protocol planning, execution, and decoding.
//! - [`simplex`], [`bounds`]: exact LP solver and the converse bounds.
//! - [`verify`]: security, recoverability, and structure verifiers.
//! - [`sim`]: JSON scenarios, audited runs, reports.

pub mod bounds;
pub mod codec;
pub mod error;
pub mod field;
pub mod params;
pub mod rational;
pub mod read;
pub mod sim;
pub mod simplex;
pub mod storage;
pub mod update;
pub mod verify;

pub use error::{Error, Result};
pub use params::{DerivedParams, DropoutSet, SystemParams};
pub use rational::Rat;
pub use storage::{ClusterState, Scheme};
