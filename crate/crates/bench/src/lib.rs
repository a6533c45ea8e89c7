//! Fixtures shared by the benchmarks.

use mgfnorm::sampling::sample;
use mgfnorm::{scaled_residuals, AlternativeSpec, ResidualSet, SeededStream};

/// Scaled residuals of a reproducible `N_d(0, I)` sample of size `n`.
pub fn normal_residuals(n: usize, d: usize) -> ResidualSet {
    let x = sample(&AlternativeSpec::std_normal(d), n, SeededStream::new(0xbe7c, 0)).expect("valid size");
    scaled_residuals(&x).expect("full rank")
}
