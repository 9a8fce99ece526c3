//! Piecewise-constant parameter curves on a shared breakpoint grid.

use crate::error::{Error, Result};

/// A right-continuous step function on `[breakpoints[0], breakpoints[last]]`.
///
/// `values[k]` applies on `[breakpoints[k], breakpoints[k+1])`; the final
/// value also applies at the right endpoint. Breakpoints must be finite,
/// strictly increasing, and start at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterCurve<V> {
    breakpoints: Vec<f64>,
    values: Vec<V>,
}

impl<V> ParameterCurve<V> {
    pub fn new(breakpoints: Vec<f64>, values: Vec<V>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::BadBreakpoints(format!(
                "need at least two breakpoints, got {}",
                breakpoints.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::BadBreakpoints("non-finite breakpoint".into()));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::BadBreakpoints(format!(
                "first breakpoint must be 0, got {}",
                breakpoints[0]
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadBreakpoints(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if values.len() + 1 != breakpoints.len() {
            return Err(Error::BadDimensions(format!(
                "{} breakpoints require {} interval values, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                values.len()
            )));
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    /// A single interval covering `[0, end]`.
    pub fn constant(end: f64, value: V) -> Result<Self> {
        Self::new(vec![0.0, end], vec![value])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn n_intervals(&self) -> usize {
        self.values.len()
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Index of the interval containing `t` (right-continuous; the right
    /// endpoint of the domain maps to the last interval).
    pub fn interval_index(&self, t: f64) -> Result<usize> {
        let end = self.end();
        if !t.is_finite() || t < 0.0 || t > end {
            return Err(Error::OutOfHorizon { t, horizon: end });
        }
        if t == end {
            return Ok(self.values.len() - 1);
        }
        // Last k with breakpoints[k] <= t.
        Ok(self.breakpoints.partition_point(|b| *b <= t) - 1)
    }

    pub fn value_at(&self, t: f64) -> Result<&V> {
        Ok(&self.values[self.interval_index(t)?])
    }

    /// Iterate `(t0, t1, value)` over the intervals.
    pub fn iter_intervals(&self) -> impl Iterator<Item = (f64, f64, &V)> {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| (w[0], w[1], v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_grids() {
        assert!(matches!(
            ParameterCurve::new(vec![0.0], vec![] as Vec<f64>),
            Err(Error::BadBreakpoints(_))
        ));
        assert!(matches!(
            ParameterCurve::new(vec![0.5, 1.0], vec![1.0]),
            Err(Error::BadBreakpoints(_))
        ));
        assert!(matches!(
            ParameterCurve::new(vec![0.0, 1.0, 1.0], vec![1.0, 2.0]),
            Err(Error::BadBreakpoints(_))
        ));
        assert!(matches!(
            ParameterCurve::new(vec![0.0, 1.0, 2.0], vec![1.0]),
            Err(Error::BadDimensions(_))
        ));
    }

    #[test]
    fn evaluation_is_right_continuous() {
        let c = ParameterCurve::new(vec![0.0, 1.0, 2.0], vec![10.0, 20.0]).unwrap();
        assert_eq!(*c.value_at(0.0).unwrap(), 10.0);
        assert_eq!(*c.value_at(0.999).unwrap(), 10.0);
        assert_eq!(*c.value_at(1.0).unwrap(), 20.0, "right-continuous at jump");
        assert_eq!(*c.value_at(2.0).unwrap(), 20.0, "right endpoint included");
        assert!(matches!(
            c.value_at(2.0000001),
            Err(Error::OutOfHorizon { .. })
        ));
        assert!(matches!(c.value_at(-0.1), Err(Error::OutOfHorizon { .. })));
    }

    #[test]
    fn interval_iteration_matches_grid() {
        let c = ParameterCurve::new(vec![0.0, 0.5, 2.0], vec![1, 2]).unwrap();
        let spans: Vec<_> = c.iter_intervals().collect();
        assert_eq!(spans, vec![(0.0, 0.5, &1), (0.5, 2.0, &2)]);
    }
}
