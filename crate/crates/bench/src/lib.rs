//! Shared fixtures for the criterion benches.

use vcslab_core::disc::{sample_uniform, DiscTuple};

/// One deterministic interior tuple per n.
pub fn fixture_tuple(n: usize) -> DiscTuple {
    sample_uniform(n, 1, 4242).pop().expect("one sample")
}
