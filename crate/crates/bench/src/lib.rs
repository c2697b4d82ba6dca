//! Fixed workloads shared by the benchmarks.

use resonant_wigner::{CoefficientFn, FourierState, LatticePoint, Symbol, TimeWindow};

pub use num_complex::Complex64;

/// A random state with `count` modes in `[-64, 64]^2`.
pub fn random_state(count: usize) -> FourierState {
    FourierState::random(2, count, 64, 42)
}

/// A real zero-mean observable with three conjugate pairs of Gaussian modes.
pub fn observable() -> Symbol {
    let g = |re: f64, cx: f64| CoefficientFn::gaussian(Complex64::new(re, 0.3), vec![cx, 0.0], 0.8);
    Symbol::hermitian_from_half(
        2,
        [
            (LatticePoint::from([1, 0]), g(1.0, 0.2)),
            (LatticePoint::from([0, 1]), g(0.5, -0.4)),
            (LatticePoint::from([1, -2]), g(0.25, 0.0)),
        ],
    )
    .expect("valid symbol")
}

pub fn window() -> TimeWindow {
    TimeWindow::new(1.0, 1.0, 0.25).expect("valid window")
}
