//! Periodic piecewise-linear travel-time functions.
//!
//! A function is a list of `(time-of-day, cost)` breakpoints. Between two
//! breakpoints the cost is interpolated linearly; after the last breakpoint the
//! function wraps to `(b_0 + T, c_0)`. FIFO holds iff no segment (wrap segment
//! included) has slope below `-1`.

use serde::{Deserialize, Serialize};

use crate::clock::{Clock, DAY, EPS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub at: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelTimeFunction {
    points: Vec<Breakpoint>,
    period: f64,
}

/// The first FIFO-violating segment of a function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FifoViolation {
    pub segment: usize,
    pub slope: f64,
}

impl TravelTimeFunction {
    /// Builds a function and checks every invariant, FIFO included.
    pub fn new(points: Vec<(f64, f64)>, period: f64) -> Result<Self> {
        let f = Self::new_unchecked_fifo(points, period)?;
        if let Err(v) = f.validate_fifo() {
            return Err(Error::FifoViolation { segment: v.segment, slope: v.slope });
        }
        Ok(f)
    }

    /// Builds a function checking ordering, range and finiteness but not FIFO.
    /// Used by importers and generators that repair or report violations.
    pub fn new_unchecked_fifo(points: Vec<(f64, f64)>, period: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidFunction(format!("period must be positive, got {period}")));
        }
        if points.is_empty() {
            return Err(Error::InvalidFunction("no breakpoints".into()));
        }
        let mut prev = f64::NEG_INFINITY;
        for &(at, cost) in &points {
            if !(0.0..period).contains(&at) {
                return Err(Error::InvalidFunction(format!("breakpoint {at} outside [0, {period})")));
            }
            if at <= prev {
                return Err(Error::InvalidFunction("breakpoint times not strictly increasing".into()));
            }
            // Zero-cost edges are admitted for sink modelling; negative or non-finite never.
            if !(cost.is_finite() && cost >= 0.0) {
                return Err(Error::InvalidFunction(format!("invalid cost {cost}")));
            }
            prev = at;
        }
        Ok(Self {
            points: points.into_iter().map(|(at, cost)| Breakpoint { at, cost }).collect(),
            period,
        })
    }

    pub fn constant(cost: f64) -> Self {
        Self::constant_with_period(cost, DAY)
    }

    pub fn constant_with_period(cost: f64, period: f64) -> Self {
        assert!(cost.is_finite() && cost >= 0.0, "invalid constant cost {cost}");
        Self { points: vec![Breakpoint { at: 0.0, cost }], period }
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.points
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn is_constant(&self) -> bool {
        self.points.windows(2).all(|w| w[0].cost == w[1].cost)
    }

    /// Cost of departing at `depart`.
    pub fn eval(&self, depart: Clock) -> f64 {
        self.eval_at(depart.minutes())
    }

    /// Cost at a raw minute value, reduced into the period first.
    pub fn eval_at(&self, t: f64) -> f64 {
        let pts = &self.points;
        if pts.len() == 1 {
            return pts[0].cost;
        }
        let t = Clock::new(t, self.period).minutes();
        // index of the last breakpoint at or before t
        let idx = pts.partition_point(|b| b.at <= t);
        let (left, right, t) = if idx == 0 {
            let last = pts[pts.len() - 1];
            (last, Breakpoint { at: pts[0].at + self.period, cost: pts[0].cost }, t + self.period)
        } else if idx == pts.len() {
            let last = pts[idx - 1];
            (last, Breakpoint { at: pts[0].at + self.period, cost: pts[0].cost }, t)
        } else {
            (pts[idx - 1], pts[idx], t)
        };
        let span = right.at - left.at;
        let w = (t - left.at) / span;
        left.cost + w * (right.cost - left.cost)
    }

    /// Segment `k` runs from breakpoint `k` to breakpoint `k + 1`, the last one wrapping.
    fn segment(&self, k: usize) -> (Breakpoint, Breakpoint) {
        let n = self.points.len();
        let a = self.points[k];
        let b = if k + 1 == n {
            Breakpoint { at: self.points[0].at + self.period, cost: self.points[0].cost }
        } else {
            self.points[k + 1]
        };
        (a, b)
    }

    pub fn validate_fifo(&self) -> std::result::Result<(), FifoViolation> {
        if self.points.len() == 1 {
            return Ok(());
        }
        for k in 0..self.points.len() {
            let (a, b) = self.segment(k);
            let slope = (b.cost - a.cost) / (b.at - a.at);
            if slope < -1.0 - EPS {
                return Err(FifoViolation { segment: k, slope });
            }
        }
        Ok(())
    }

    pub fn min_cost(&self) -> f64 {
        self.points.iter().map(|b| b.cost).fold(f64::INFINITY, f64::min)
    }

    pub fn max_cost(&self) -> f64 {
        self.points.iter().map(|b| b.cost).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest absolute slope over all segments.
    pub fn max_abs_slope(&self) -> f64 {
        if self.points.len() == 1 {
            return 0.0;
        }
        (0..self.points.len())
            .map(|k| {
                let (a, b) = self.segment(k);
                ((b.cost - a.cost) / (b.at - a.at)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Raises breakpoint costs just enough that every slope is at least `-1`.
    ///
    /// Each violation `c_{k+1} < c_k - Δ` is fixed by lifting `c_{k+1}` to
    /// `c_k - Δ`; sweeps repeat around the wrap until nothing changes. Returns
    /// the number of breakpoints modified.
    pub fn repair_fifo(&mut self) -> usize {
        let n = self.points.len();
        if n == 1 {
            return 0;
        }
        let mut touched = vec![false; n];
        loop {
            let mut changed = false;
            for k in 0..n {
                let (a, b) = self.segment(k);
                let floor = a.cost - (b.at - a.at);
                if b.cost < floor {
                    let next = (k + 1) % n;
                    self.points[next].cost = floor;
                    touched[next] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        touched.iter().filter(|&&t| t).count()
    }

    /// Pointwise minimum of two functions with the same period.
    ///
    /// The result has breakpoints at the union of both breakpoint sets plus
    /// every crossing point, so it is exact.
    pub fn pointwise_min(&self, other: &Self) -> Self {
        assert!((self.period - other.period).abs() <= EPS, "period mismatch");
        let mut times: Vec<f64> = self
            .points
            .iter()
            .chain(other.points.iter())
            .map(|b| b.at)
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() <= EPS);
        // crossings inside each elementary interval, wrap interval included
        let mut all = times.clone();
        for i in 0..times.len() {
            let t0 = times[i];
            let t1 = if i + 1 < times.len() { times[i + 1] } else { times[0] + self.period };
            let d0 = self.eval_at(t0) - other.eval_at(t0);
            let d1 = self.eval_at(t1) - other.eval_at(t1);
            if (d0 < -EPS && d1 > EPS) || (d0 > EPS && d1 < -EPS) {
                let x = t0 + (t1 - t0) * d0 / (d0 - d1);
                all.push(Clock::new(x, self.period).minutes());
            }
        }
        all.sort_by(f64::total_cmp);
        all.dedup_by(|a, b| (*a - *b).abs() <= EPS);
        let points: Vec<Breakpoint> = all
            .into_iter()
            .map(|at| Breakpoint { at, cost: self.eval_at(at).min(other.eval_at(at)) })
            .collect();
        let mut out = Self { points, period: self.period };
        out.simplify();
        out
    }

    /// Drops breakpoints that lie on the line through their neighbours.
    fn simplify(&mut self) {
        if self.points.len() <= 2 {
            if self.is_constant() {
                self.points.truncate(1);
            }
            return;
        }
        if self.is_constant() {
            self.points.truncate(1);
            return;
        }
        let mut keep: Vec<Breakpoint> = Vec::with_capacity(self.points.len());
        let n = self.points.len();
        for k in 0..n {
            let prev = if k == 0 {
                Breakpoint { at: self.points[n - 1].at - self.period, cost: self.points[n - 1].cost }
            } else {
                self.points[k - 1]
            };
            let cur = self.points[k];
            let (_, next) = self.segment(k);
            let interp = prev.cost + (next.cost - prev.cost) * (cur.at - prev.at) / (next.at - prev.at);
            if (interp - cur.cost).abs() > 1e-12 {
                keep.push(cur);
            }
        }
        if keep.is_empty() {
            keep.push(self.points[0]);
        }
        self.points = keep;
    }

    /// Whether `self(t) <= other(t)` at every breakpoint of either function.
    /// For piecewise-linear functions this is equivalent to holding everywhere.
    pub fn dominated_by(&self, other: &Self) -> bool {
        self.points
            .iter()
            .chain(other.points.iter())
            .all(|b| self.eval_at(b.at) <= other.eval_at(b.at) + EPS)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(points: &[(f64, f64)]) -> TravelTimeFunction {
        TravelTimeFunction::new(points.to_vec(), DAY).unwrap()
    }

    #[test]
    fn eval_examples() {
        let c = f(&[(0.0, 5.0)]);
        assert_eq!(c.eval(Clock::new(0.0, DAY)), 5.0);
        assert_eq!(c.eval(Clock::new(1234.5, DAY)), 5.0);

        let g = f(&[(0.0, 10.0), (720.0, 30.0)]);
        assert!((g.eval(Clock::new(360.0, DAY)) - 20.0).abs() < 1e-12);
        assert!((g.eval(Clock::new(1080.0, DAY)) - 20.0).abs() < 1e-12);
        assert_eq!(g.eval(Clock::new(720.0, DAY)), 30.0);
    }

    #[test]
    fn eval_before_first_breakpoint_uses_wrap_segment() {
        let g = f(&[(60.0, 10.0), (720.0, 30.0)]);
        // wrap segment runs from (720, 30) to (1500, 10); t = 0 maps to 1440
        let expect = 30.0 + (1440.0 - 720.0) / (1500.0 - 720.0) * (10.0 - 30.0);
        assert!((g.eval(Clock::new(0.0, DAY)) - expect).abs() < 1e-12);
    }

    #[test]
    fn fifo_examples() {
        let bad = TravelTimeFunction::new_unchecked_fifo(vec![(0.0, 100.0), (60.0, 10.0)], DAY).unwrap();
        let v = bad.validate_fifo().unwrap_err();
        assert_eq!(v.segment, 0);
        assert!((v.slope + 1.5).abs() < 1e-12);
        assert!(f(&[(0.0, 10.0), (60.0, 100.0)]).validate_fifo().is_ok());
        assert!(f(&[(0.0, 7.0)]).validate_fifo().is_ok());
        assert!(TravelTimeFunction::new(vec![(0.0, 100.0), (60.0, 10.0)], DAY).is_err());
    }

    #[test]
    fn rejects_malformed() {
        assert!(TravelTimeFunction::new(vec![], DAY).is_err());
        assert!(TravelTimeFunction::new(vec![(10.0, 1.0), (5.0, 1.0)], DAY).is_err());
        assert!(TravelTimeFunction::new(vec![(1440.0, 1.0)], DAY).is_err());
        assert!(TravelTimeFunction::new(vec![(0.0, -1.0)], DAY).is_err());
        assert!(TravelTimeFunction::new(vec![(0.0, f64::NAN)], DAY).is_err());
    }

    #[test]
    fn repair_makes_fifo() {
        let mut g = TravelTimeFunction::new_unchecked_fifo(
            vec![(0.0, 5.0), (60.0, 200.0), (120.0, 10.0), (1380.0, 300.0)],
            DAY,
        )
        .unwrap();
        assert!(g.validate_fifo().is_err());
        let before = g.clone();
        assert!(g.repair_fifo() > 0);
        assert!(g.validate_fifo().is_ok());
        // repair only ever raises costs
        for (a, b) in before.breakpoints().iter().zip(g.breakpoints()) {
            assert!(b.cost >= a.cost);
        }
        // (60, 200) -> (120, 10) violates; minimal fix is 200 - 60 = 140
        assert_eq!(g.breakpoints()[2].cost, 140.0);
        // wrap (1380, 300) -> (1440, 5) needs 240
        assert_eq!(g.breakpoints()[0].cost, 240.0);
    }

    #[test]
    fn pointwise_min_with_crossing() {
        let a = f(&[(0.0, 10.0), (720.0, 30.0)]);
        let b = f(&[(0.0, 20.0)]);
        let m = a.pointwise_min(&b);
        for t in (0..1440).step_by(7) {
            let t = t as f64;
            let want = a.eval_at(t).min(b.eval_at(t));
            assert!((m.eval_at(t) - want).abs() < 1e-9, "t={t}");
        }
        assert!(m.validate_fifo().is_ok());
        let same = a.pointwise_min(&f(&[(0.0, 40.0)]));
        assert_eq!(same, a);
    }
}
