//! Fixtures shared by the benchmarks.

use shadowtrace::construct::fig1_circle;
use shadowtrace::measure::{periodic_orbit_measure, EmpiricalMeasure};
use shadowtrace::rational::rat;
use shadowtrace::{SymbolicPoint, SymbolicSystem, System, SystemPoint};

pub fn sigma2() -> System {
    SymbolicSystem::full_shift(2).expect("full shift").into()
}

pub fn circle(n: usize) -> System {
    fig1_circle(n).expect("circle net").into()
}

pub fn periodic(w: &[u8]) -> SystemPoint {
    SystemPoint::Symbolic(SymbolicPoint::periodic(2, w).expect("periodic point"))
}

/// Half the fixed point `0^∞`, half the orbit of `(01)^∞`.
pub fn mixture(system: &System) -> EmpiricalMeasure {
    let a = periodic_orbit_measure(system, &periodic(&[0])).expect("orbit measure");
    let b = periodic_orbit_measure(system, &periodic(&[0, 1])).expect("orbit measure");
    EmpiricalMeasure::combine(&[(rat(1, 2), a), (rat(1, 2), b)]).expect("mixture")
}
