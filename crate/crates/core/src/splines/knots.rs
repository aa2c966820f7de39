use serde::{Deserialize, Serialize};

use crate::error::{Result, VcsError};

pub const DEGREE: usize = 3;

/// How the ends of a uniform knot vector are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnotKind {
    /// End knots repeated `DEGREE + 1` times; the curve interpolates its end coefficients.
    Clamped,
    /// Knots continue past the domain with the same spacing and coefficients wrap around.
    Periodic,
}

/// Uniform cubic knot vector over a closed interval.
///
/// `count` is the number of distinct, uniformly spaced knots covering `[lo, hi]`
/// (endpoints included), so the domain is split into `count - 1` spans.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    count: usize,
    lo: f64,
    hi: f64,
    kind: KnotKind,
    knots: Vec<f64>,
}

impl KnotVector {
    pub fn new(count: usize, lo: f64, hi: f64, kind: KnotKind) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(VcsError::Parameter(format!("empty knot domain [{lo}, {hi}]")));
        }
        let min = match kind {
            KnotKind::Clamped => 2,
            KnotKind::Periodic => 4,
        };
        if count < min {
            return Err(VcsError::Parameter(format!(
                "{kind:?} knot vector needs at least {min} knots, got {count}"
            )));
        }
        let spans = count - 1;
        let h = (hi - lo) / spans as f64;
        let at = |k: usize| if k == spans { hi } else { lo + k as f64 * h };
        let knots = match kind {
            KnotKind::Clamped => {
                let mut v = vec![lo; DEGREE];
                v.extend((0..=spans).map(at));
                v.extend(std::iter::repeat_n(hi, DEGREE));
                v
            }
            KnotKind::Periodic => (0..spans + 2 * DEGREE + 1)
                .map(|k| lo + (k as f64 - DEGREE as f64) * h)
                .collect(),
        };
        Ok(Self { count, lo, hi, kind, knots })
    }

    pub fn clamped_unit(count: usize) -> Result<Self> {
        Self::new(count, 0.0, 1.0, KnotKind::Clamped)
    }

    pub fn periodic_angle(count: usize) -> Result<Self> {
        Self::new(count, 0.0, std::f64::consts::TAU, KnotKind::Periodic)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn kind(&self) -> KnotKind {
        self.kind
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn spans(&self) -> usize {
        self.count - 1
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.spans() as f64
    }

    /// Full knot sequence including repeated (clamped) or extended (periodic) end knots.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of independent coefficients.
    pub fn n_coefficients(&self) -> usize {
        match self.kind {
            KnotKind::Clamped => self.spans() + DEGREE,
            KnotKind::Periodic => self.spans(),
        }
    }

    /// Number of basis functions defined by the full knot sequence, before periodic wrapping.
    pub(crate) fn n_extended(&self) -> usize {
        self.spans() + DEGREE
    }

    /// Maps an extended basis index to its coefficient slot.
    #[inline]
    pub(crate) fn coefficient_index(&self, extended: usize) -> usize {
        match self.kind {
            KnotKind::Clamped => extended,
            KnotKind::Periodic => extended % self.spans(),
        }
    }

    /// Checks `t` against the domain, absorbing round-off at the ends.
    pub fn check(&self, t: f64) -> Result<f64> {
        let tol = 1e-12 * (self.hi - self.lo);
        if !t.is_finite() || t < self.lo - tol || t > self.hi + tol {
            return Err(VcsError::Domain { value: t, lo: self.lo, hi: self.hi });
        }
        Ok(t.clamp(self.lo, self.hi))
    }

    /// Index `s` of the span `[lo + s h, lo + (s+1) h]` holding `t` (already in domain).
    /// Nonzero basis functions on span `s` have extended indices `s..=s+3`.
    #[inline]
    pub(crate) fn span(&self, t: f64) -> usize {
        let s = ((t - self.lo) / self.spacing()).floor();
        if s <= 0.0 {
            0
        } else {
            (s as usize).min(self.spans() - 1)
        }
    }
}
