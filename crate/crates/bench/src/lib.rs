//! Shared fixtures for the criterion benchmarks.

use sbmlab_core::BernsteinSpec;

pub fn stable() -> BernsteinSpec {
    BernsteinSpec::stable(0.4).unwrap()
}

pub fn mixture() -> BernsteinSpec {
    BernsteinSpec::mixture(&[(0.5, 0.3), (0.5, 0.45)]).unwrap()
}
