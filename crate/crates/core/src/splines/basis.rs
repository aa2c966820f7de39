//! Cubic B-spline basis functions.
//!
//! Two routes are provided: a literal Cox–de Boor recursion for single basis
//! functions, and the triangular scheme that produces the four nonzero basis
//! values of a span together with their derivatives. Evaluation code uses the
//! latter; the former is kept as the reference definition.

use super::knots::{KnotKind, KnotVector, DEGREE};
use crate::error::Result;

/// Nonzero basis values on one span, with first and second derivatives.
#[derive(Debug, Clone, Copy)]
pub struct SpanBasis {
    /// Extended index of the first nonzero function; the others follow consecutively.
    pub first: usize,
    /// `values[d][k]` is the `d`-th derivative of basis function `first + k`.
    pub values: [[f64; DEGREE + 1]; 3],
}

/// Value of basis function `i` at `t` via the Cox–de Boor recursion.
///
/// For periodic knots, `i` names a coefficient slot and the result sums every
/// extended function that wraps onto it.
pub fn eval_basis(knots: &KnotVector, i: usize, t: f64) -> Result<f64> {
    let t = knots.check(t)?;
    let n = knots.n_coefficients();
    if i >= n {
        return Ok(0.0);
    }
    let u = knots.knots();
    // extended periodic knots continue past `hi`, so only the clamped end needs closing
    let last = match knots.kind() {
        KnotKind::Clamped => last_nonempty_interval(u, knots.domain().1),
        KnotKind::Periodic => usize::MAX,
    };
    let value = match knots.kind() {
        KnotKind::Clamped => cox_de_boor(u, i, DEGREE, t, last),
        KnotKind::Periodic => (0..knots.n_extended())
            .filter(|e| e % n == i)
            .map(|e| cox_de_boor(u, e, DEGREE, t, last))
            .sum(),
    };
    Ok(value)
}

fn last_nonempty_interval(u: &[f64], hi: f64) -> usize {
    (0..u.len() - 1)
        .rev()
        .find(|&k| u[k] < u[k + 1] && u[k + 1] <= hi)
        .unwrap_or(0)
}

fn cox_de_boor(u: &[f64], i: usize, p: usize, t: f64, last: usize) -> f64 {
    if p == 0 {
        let inside = u[i] <= t && t < u[i + 1];
        // the closed right end belongs to the last nonempty interval
        let at_end = i == last && t == u[i + 1];
        return if inside || at_end { 1.0 } else { 0.0 };
    }
    let mut value = 0.0;
    let left = u[i + p] - u[i];
    if left > 0.0 {
        value += (t - u[i]) / left * cox_de_boor(u, i, p - 1, t, last);
    }
    let right = u[i + p + 1] - u[i + 1];
    if right > 0.0 {
        value += (u[i + p + 1] - t) / right * cox_de_boor(u, i + 1, p - 1, t, last);
    }
    value
}

/// Nonzero basis values and derivatives (up to order 2) at `t`, which must
/// already lie in the knot domain.
pub(crate) fn span_basis(knots: &KnotVector, t: f64) -> SpanBasis {
    let s = knots.span(t);
    let u = knots.knots();
    let span = s + DEGREE;
    const P: usize = DEGREE;

    let mut ndu = [[0.0; P + 1]; P + 1];
    let mut left = [0.0; P + 1];
    let mut right = [0.0; P + 1];
    ndu[0][0] = 1.0;
    for j in 1..=P {
        left[j] = t - u[span + 1 - j];
        right[j] = u[span + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let mut ders = [[0.0; P + 1]; 3];
    for j in 0..=P {
        ders[0][j] = ndu[j][P];
    }
    let mut a = [[0.0; P + 1]; 2];
    for r in 0..=P {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=2 {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = P - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { P - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = P as f64;
    for k in 1..=2 {
        for v in ders[k].iter_mut() {
            *v *= factor;
        }
        factor *= (P - k) as f64;
    }
    SpanBasis { first: s, values: ders }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_basis_matches_recursion() {
        for kind in [KnotKind::Clamped, KnotKind::Periodic] {
            let (lo, hi) = (0.0, 2.0);
            let kv = KnotVector::new(6, lo, hi, kind).unwrap();
            for step in 0..=200 {
                let t = lo + (hi - lo) * step as f64 / 200.0;
                let sb = span_basis(&kv, t);
                let mut dense = vec![0.0; kv.n_coefficients()];
                for k in 0..4 {
                    dense[kv.coefficient_index(sb.first + k)] += sb.values[0][k];
                }
                for (i, v) in dense.iter().enumerate() {
                    let r = eval_basis(&kv, i, t).unwrap();
                    assert!((r - v).abs() < 1e-13, "{kind:?} t={t} i={i}: {r} vs {v}");
                }
            }
        }
    }

    #[test]
    fn derivative_rows_sum_to_zero() {
        let kv = KnotVector::clamped_unit(7).unwrap();
        for step in 0..50 {
            let t = step as f64 / 49.0;
            let sb = span_basis(&kv, t);
            assert!(sb.values[1].iter().sum::<f64>().abs() < 1e-10);
            assert!(sb.values[2].iter().sum::<f64>().abs() < 1e-8);
        }
    }

    #[test]
    fn outside_domain_is_an_error() {
        let kv = KnotVector::clamped_unit(5).unwrap();
        assert!(eval_basis(&kv, 0, 1.5).is_err());
        assert!(eval_basis(&kv, 0, -0.1).is_err());
        assert!(eval_basis(&kv, 0, f64::NAN).is_err());
    }
}
