//! Arrival-time equilibria for a single-server bottleneck queue whose
//! customers disagree about the service speed.
//!
//! Two beliefs share one queue: type [`Belief::A`] customers think the server
//! is slow, type [`Belief::B`] customers think it is fast. The crate covers
//!
//! * integer service laws and compound-Poisson work ([`dists`]),
//! * the noisy-signal mechanism that produces the two beliefs ([`signal`]),
//! * closed-form equilibria of the deterministic fluid game ([`fluid`]),
//! * the slotted stochastic game: workload recursion ([`workload`]) and the
//!   iterated best-response solver ([`solver`]),
//! * a learning agent-based simulation and the pathwise coupling check
//!   ([`abm`]),
//! * small helpers for comparing arrival distributions ([`compare`]).
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![warn(missing_docs)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod abm;
pub mod compare;
pub mod dists;
mod error;
pub mod fluid;
pub mod signal;
pub mod solver;
pub mod workload;

pub use error::{Error, Result};

/// One of the two customer beliefs (equivalently, server modes or signals).
///
/// `A` is the pessimistic belief (slow service, larger mean), `B` the
/// optimistic one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Belief {
    /// Slow mode / pessimistic customers.
    A,
    /// Fast mode / optimistic customers.
    B,
}

impl Belief {
    /// Both beliefs in index order.
    pub const BOTH: [Belief; 2] = [Belief::A, Belief::B];

    /// Array index (`A` = 0, `B` = 1).
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Belief::A => 0,
            Belief::B => 1,
        }
    }

    /// The other belief.
    #[inline]
    pub fn other(self) -> Belief {
        match self {
            Belief::A => Belief::B,
            Belief::B => Belief::A,
        }
    }

    /// Lower-case label used in tables.
    pub fn label(self) -> &'static str {
        match self {
            Belief::A => "a",
            Belief::B => "b",
        }
    }
}

impl core::fmt::Display for Belief {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}
