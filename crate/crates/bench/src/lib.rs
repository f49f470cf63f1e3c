//! Shared fixtures for the benchmarks.

use appraise_core::{Family, GeneratorSpec};

/// The two-period project with a stochastic inflow at `t = 1`.
pub fn skewed_project(n: usize, right: bool) -> GeneratorSpec {
    let (mean, skew) = if right { (350.0, 2.7) } else { (355.0, -2.8) };
    GeneratorSpec {
        family: if right {
            Family::ShiftedLognormal
        } else {
            Family::MirroredShiftedLognormal
        },
        mean,
        std: 40.0,
        skew,
        template: vec![Some(-200.0), None, Some(-100.0)],
        n,
        seed: 42,
    }
}
