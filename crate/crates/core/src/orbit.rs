//! δ-pseudo-orbits: validation, concatenation, repetition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::space::{System, SystemPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitKind {
    Segment,
    Loop,
}

/// A finite sequence `x_0, …, x_n` with `d(f(x_i), x_{i+1}) <= delta`.
/// Lengths are step counts: `n` points minus one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PseudoOrbit {
    points: Vec<SystemPoint>,
    #[serde(with = "rational::serde_rat")]
    delta: Rational,
    kind: OrbitKind,
}

/// `d(f(x), y)`.
pub fn step_error(system: &System, x: &SystemPoint, y: &SystemPoint) -> Result<Rational> {
    system.distance_shifted(x, 1, y, 0)
}

impl PseudoOrbit {
    /// Certifies `points` as a δ-pseudo-orbit segment; reports the first
    /// violating step otherwise.
    pub fn validate(system: &System, points: Vec<SystemPoint>, delta: Rational) -> Result<Self> {
        let po = PseudoOrbit { points, delta, kind: OrbitKind::Segment };
        po.check(system)?;
        Ok(po)
    }

    /// As [`PseudoOrbit::validate`], additionally requiring `x_0 = x_n` and at
    /// least one step.
    pub fn validate_loop(system: &System, points: Vec<SystemPoint>, delta: Rational) -> Result<Self> {
        if points.len() < 2 || points.first() != points.last() {
            return Err(Error::NotALoop);
        }
        let po = PseudoOrbit { points, delta, kind: OrbitKind::Loop };
        po.check(system)?;
        Ok(po)
    }

    /// The true orbit segment `x, f(x), …, f^n(x)`, certified at δ = 0.
    pub fn orbit(system: &System, x: &SystemPoint, n: usize) -> Result<Self> {
        system.check_point(x)?;
        let mut pts = vec![x.clone()];
        for _ in 0..n {
            let next = system.image(pts.last().unwrap())?;
            pts.push(next);
        }
        Ok(PseudoOrbit { points: pts, delta: rational::int(0), kind: OrbitKind::Segment })
    }

    /// Re-verifies every step and the loop condition.
    pub fn check(&self, system: &System) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidArgument("pseudo-orbit needs at least one point".into()));
        }
        if self.delta < rational::int(0) {
            return Err(Error::InvalidArgument("delta must be nonnegative".into()));
        }
        if self.kind == OrbitKind::Loop && (self.points.len() < 2 || self.points.first() != self.points.last()) {
            return Err(Error::NotALoop);
        }
        for p in &self.points {
            system.check_point(p)?;
        }
        let errors = self.step_errors(system)?;
        let worst = errors.iter().enumerate().max_by(|a, b| a.1.cmp(b.1));
        if let Some(step) = errors.iter().position(|e| *e > self.delta) {
            let (_, w) = worst.unwrap();
            return Err(Error::StepViolation {
                step,
                error: format!("{} (worst {})", rational::fmt(&errors[step]), rational::fmt(w)),
                delta: rational::fmt(&self.delta),
            });
        }
        Ok(())
    }

    pub fn step_errors(&self, system: &System) -> Result<Vec<Rational>> {
        self.points.windows(2).map(|w| step_error(system, &w[0], &w[1])).collect()
    }

    pub fn max_step_error(&self, system: &System) -> Result<Rational> {
        Ok(self.step_errors(system)?.into_iter().max().unwrap_or_else(|| rational::int(0)))
    }

    pub fn points(&self) -> &[SystemPoint] {
        &self.points
    }

    pub fn into_points(self) -> Vec<SystemPoint> {
        self.points
    }

    pub fn delta(&self) -> &Rational {
        &self.delta
    }

    pub fn kind(&self) -> OrbitKind {
        self.kind
    }

    pub fn is_loop(&self) -> bool {
        self.kind == OrbitKind::Loop
    }

    pub fn step_count(&self) -> usize {
        self.points.len() - 1
    }

    pub fn first(&self) -> &SystemPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &SystemPoint {
        self.points.last().unwrap()
    }

    /// `XY`: requires `X` to end where `Y` begins; the junction point is kept
    /// once and delta is the larger of the two.
    pub fn concatenate(&self, other: &PseudoOrbit, system: &System) -> Result<PseudoOrbit> {
        if self.last() != other.first() {
            return Err(Error::EndpointMismatch);
        }
        let mut points = self.points.clone();
        points.extend(other.points[1..].iter().cloned());
        let kind = if self.is_loop() && other.is_loop() { OrbitKind::Loop } else { OrbitKind::Segment };
        let po = PseudoOrbit { points, delta: self.delta.clone().max(other.delta.clone()), kind };
        po.check(system)?;
        Ok(po)
    }

    /// `L L ⋯ L` (`t` copies).
    pub fn repeat(&self, t: usize) -> Result<PseudoOrbit> {
        if !self.is_loop() {
            return Err(Error::NotALoop);
        }
        if t == 0 {
            return Err(Error::InvalidArgument("repeat count must be positive".into()));
        }
        let n = self.step_count();
        let points = (0..=t * n).map(|i| self.points[i % n].clone()).collect();
        Ok(PseudoOrbit { points, delta: self.delta.clone(), kind: OrbitKind::Loop })
    }

    /// The infinite pseudo-orbit `x_{i mod n}` of a loop.
    pub fn periodic_extension(&self) -> Result<impl Iterator<Item = SystemPoint> + '_> {
        if !self.is_loop() {
            return Err(Error::NotALoop);
        }
        let n = self.step_count();
        Ok((0..).map(move |i| self.points[i % n].clone()))
    }

    /// Relabels a segment whose endpoints coincide as a loop.
    pub fn close(mut self) -> Result<PseudoOrbit> {
        if self.points.len() < 2 || self.first() != self.last() {
            return Err(Error::NotALoop);
        }
        self.kind = OrbitKind::Loop;
        Ok(self)
    }

    /// Sub-segment `x_lo ..= x_hi`.
    pub fn slice(&self, lo: usize, hi: usize) -> Result<PseudoOrbit> {
        if lo > hi || hi >= self.points.len() {
            return Err(Error::InvalidArgument(format!("slice {lo}..={hi} out of range")));
        }
        Ok(PseudoOrbit {
            points: self.points[lo..=hi].to_vec(),
            delta: self.delta.clone(),
            kind: OrbitKind::Segment,
        })
    }

    /// Builds without checking; callers must run [`PseudoOrbit::check`].
    pub(crate) fn from_parts(points: Vec<SystemPoint>, delta: Rational, kind: OrbitKind) -> Self {
        PseudoOrbit { points, delta, kind }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::space::{SymbolicPoint, SymbolicSystem};

    fn sigma2() -> System {
        System::Symbolic(SymbolicSystem::full_shift(2).unwrap())
    }

    fn sp(p: SymbolicPoint) -> SystemPoint {
        p.into()
    }

    #[test]
    fn shifted_spike_is_a_quarter_step() {
        let sys = sigma2();
        let zero = sp(SymbolicPoint::constant(2, 0).unwrap());
        // zero except for a single 1 at coordinate 3
        let p = sp(SymbolicPoint::new(2, 3, vec![1], vec![0], 0).unwrap());
        assert_eq!(p.as_symbolic().unwrap().coord(3), 1);
        assert!(PseudoOrbit::validate(&sys, vec![zero.clone(), p.clone()], rat(1, 4)).is_ok());
        match PseudoOrbit::validate(&sys, vec![zero, p], rat(1, 16)) {
            Err(Error::StepViolation { step, .. }) => assert_eq!(step, 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn loops_concatenate_and_repeat() {
        let sys = sigma2();
        let x = sp(SymbolicPoint::periodic(2, &[0, 1, 1]).unwrap());
        let l = PseudoOrbit::orbit(&sys, &x, 3).unwrap().close().unwrap();
        let l2 = l.concatenate(&l, &sys).unwrap();
        assert_eq!(l2, l.repeat(2).unwrap());
        assert_eq!(l.repeat(3).unwrap().step_count(), 9);
        assert!(l.repeat(0).is_err());
        let g: Vec<_> = l.periodic_extension().unwrap().take(4).collect();
        assert_eq!(g, l.points());
    }

    #[test]
    fn endpoint_mismatch() {
        let sys = sigma2();
        let a = PseudoOrbit::orbit(&sys, &sp(SymbolicPoint::constant(2, 0).unwrap()), 2).unwrap();
        let b = PseudoOrbit::orbit(&sys, &sp(SymbolicPoint::constant(2, 1).unwrap()), 2).unwrap();
        assert!(matches!(a.concatenate(&b, &sys), Err(Error::EndpointMismatch)));
    }

    #[test]
    fn json_roundtrip() {
        let sys = sigma2();
        let x = sp(SymbolicPoint::periodic(2, &[0, 1]).unwrap());
        let l = PseudoOrbit::orbit(&sys, &x, 4).unwrap();
        let s = serde_json::to_string(&l).unwrap();
        let back: PseudoOrbit = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
        back.check(&sys).unwrap();
    }
}
