//! Shared fixtures for the benchmarks.

use nipso_core::{CoefficientDistribution as D, CpsoParams, InformerProcess as Z, NipsoSpec};

pub const CPSO: CpsoParams = CpsoParams {
    w: 0.7,
    c1: 1.4,
    c2: 1.4,
};

/// A spec with `n` scaled-uniform informers and a Gaussian inertia term.
pub fn wide_spec(n: usize) -> NipsoSpec {
    NipsoSpec::new(
        D::gaussian(0.5, 0.01),
        (0..n).map(|i| {
            (
                D::scaled_uniform(2.0 / n as f64),
                Z::gaussian(i as f64, 0.1),
            )
        }),
    )
    .expect("valid spec")
}
