//! Benchmark fixtures shared by the criterion targets.

use cylfield_core::FreeMeasureSpec;

/// Small two-level spec used by every benchmark.
pub fn bench_spec() -> FreeMeasureSpec {
    FreeMeasureSpec::new(1, 2.0, 3).expect("valid spec")
}
