//! Closed-form capacities, bounds and comparison rates.

use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{pow, ToPrimitive};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::plan::{rational_rate, spectral_rate, stage_counts};
use crate::scalar::Scalar;
use crate::Rational;

fn check(m: usize, p: usize, n: usize) -> Result<()> {
    if p == 0 || p > m || n < 2 {
        return Err(Error::DomainError(format!("(M,P,N) = ({m},{p},{n})")));
    }
    Ok(())
}

fn count<S: Scalar>(v: usize) -> S {
    S::from_count(v as u64)
}

/// `PN / (PN + M - P)`, the sum capacity when `2P >= M`.
pub fn capacity_high<S: Scalar>(m: usize, p: usize, n: usize) -> Result<S> {
    check(m, p, n)?;
    if 2 * p < m {
        return Err(Error::DomainError(format!("2P < M for (M,P,N) = ({m},{p},{n})")));
    }
    Ok(count::<S>(p * n) / count::<S>(p * n + m - p))
}

/// Single-message capacity `(1 - 1/N) / (1 - N^-M)`.
pub fn single_capacity<S: Scalar>(m: usize, n: usize) -> S {
    (S::one() - S::ratio(1, n as u64)) / (S::one() - S::inv_pow(n as u64, m))
}

/// Sum capacity when `P` divides `M`.
pub fn capacity_int<S: Scalar>(m: usize, p: usize, n: usize) -> Result<S> {
    check(m, p, n)?;
    if m % p != 0 {
        return Err(Error::DomainError(format!("P = {p} does not divide M = {m}")));
    }
    Ok(single_capacity(m / p, n))
}

/// `1 / (sum_{i < f} N^-i + (M/P - f) N^-f)` with `f = floor(M/P)`.
pub fn upper_bound<S: Scalar>(m: usize, p: usize, n: usize) -> Result<S> {
    check(m, p, n)?;
    let f = m / p;
    let mut den = S::zero();
    for i in 0..f {
        den = den + S::inv_pow(n as u64, i);
    }
    den = den + S::ratio((m - f * p) as u64, p as u64) * S::inv_pow(n as u64, f);
    Ok(S::one() / den)
}

/// Rate of running the single-message scheme once and keeping the extra
/// desired symbols it reveals: `(N-1)(N^(M-1) + P - 1) / (N^M - 1)`.
pub fn repetition_rate<S: Scalar>(m: usize, p: usize, n: usize) -> Result<S> {
    check(m, p, n)?;
    let nn = count::<S>(n);
    let num = (nn.clone() - S::one()) * (pow(nn.clone(), m - 1) + count::<S>(p) - S::one());
    Ok(num / (pow(nn, m) - S::one()))
}

/// Extra rate `(P-1)(N-1) / (N^M - 1)` of the repetition scheme over one message.
pub fn delta<S: Scalar>(m: usize, p: usize, n: usize) -> Result<S> {
    check(m, p, n)?;
    let nn = count::<S>(n);
    Ok(count::<S>((p - 1) * (n - 1)) / (pow(nn, m) - S::one()))
}

/// Corner points of the achievable rate region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionCorners<S> {
    pub c: S,
    pub delta: S,
    pub symmetric: S,
    pub corners: Vec<Vec<S>>,
}

/// The `P` rotations of `(C, delta, ..., delta)` and, when `2P >= M`, the
/// symmetric point `(C^P, ..., C^P)`; duplicates removed.
pub fn region_corners<S: Scalar>(m: usize, p: usize, n: usize) -> Result<RegionCorners<S>> {
    check(m, p, n)?;
    let c: S = single_capacity(m, n);
    let nn = count::<S>(n);
    let d = (nn.clone() - S::one()) / (pow(nn, m) - S::one());
    let symmetric = count::<S>(n) / count::<S>(p * n + m - p);
    let mut corners: Vec<Vec<S>> = Vec::new();
    for j in 0..p {
        let pt: Vec<S> = (0..p).map(|i| if i == j { c.clone() } else { d.clone() }).collect();
        if !corners.contains(&pt) {
            corners.push(pt);
        }
    }
    if 2 * p >= m {
        let pt = vec![symmetric.clone(); p];
        if !corners.contains(&pt) {
            corners.push(pt);
        }
    }
    Ok(RegionCorners {
        c,
        delta: d,
        symmetric,
        corners,
    })
}

/// Best achievable rate from either scheme: the capacity when `2P >= M`,
/// otherwise the multi-round rate.
pub fn lower_exact(m: usize, p: usize, n: usize) -> Result<Rational> {
    if 2 * p >= m {
        capacity_high(m, p, n)
    } else {
        Ok(rational_rate(&stage_counts(m, p, n)?))
    }
}

/// As [`lower_exact`], with the multi-round rate taken from the root formula.
pub fn lower_spectral(m: usize, p: usize, n: usize) -> Result<f64> {
    if 2 * p >= m {
        capacity_high::<f64>(m, p, n)
    } else {
        spectral_rate(m, p, n)
    }
}

#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub messages: usize,
    pub desired: usize,
    pub databases: usize,
    pub capacity_high: Option<Rational>,
    pub capacity_int: Option<Rational>,
    pub upper: Rational,
    pub lower: f64,
    pub lower_exact: Rational,
    pub repetition: Rational,
    pub delta: Rational,
    pub corners: RegionCorners<Rational>,
    pub gap: f64,
    pub gap_exact: Rational,
    pub beta: BigInt,
}

pub fn bounds_report(m: usize, p: usize, n: usize) -> Result<BoundsReport> {
    check(m, p, n)?;
    let upper: Rational = upper_bound(m, p, n)?;
    let lower = lower_spectral(m, p, n)?;
    let lower_exact = lower_exact(m, p, n)?;
    Ok(BoundsReport {
        messages: m,
        desired: p,
        databases: n,
        capacity_high: capacity_high(m, p, n).ok(),
        capacity_int: capacity_int(m, p, n).ok(),
        gap: upper.to_f64().unwrap_or(f64::NAN) - lower,
        gap_exact: &upper - &lower_exact,
        upper,
        lower,
        lower_exact,
        repetition: repetition_rate(m, p, n)?,
        delta: delta(m, p, n)?,
        corners: region_corners(m, p, n)?,
        beta: binomial(BigInt::from(m), BigInt::from(p)),
    })
}

/// One `(M, P, N)` point of a bound sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub messages: usize,
    pub desired: usize,
    pub databases: usize,
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
}

/// Lower and upper bounds over a grid, skipping `P > M`.
pub fn gap_surface(
    m_range: impl IntoIterator<Item = usize>,
    p_range: impl IntoIterator<Item = usize> + Clone,
    n_range: impl IntoIterator<Item = usize> + Clone,
) -> Result<Vec<GapRow>> {
    let mut grid = Vec::new();
    for m in m_range {
        for p in p_range.clone() {
            if p == 0 || p > m {
                continue;
            }
            for n in n_range.clone() {
                grid.push((m, p, n));
            }
        }
    }
    grid.par_iter()
        .map(|&(m, p, n)| {
            let upper: f64 = upper_bound(m, p, n)?;
            let lower = lower_spectral(m, p, n)?;
            Ok(GapRow {
                messages: m,
                desired: p,
                databases: n,
                lower,
                upper,
                gap: upper - lower,
            })
        })
        .collect()
}

pub fn gap_csv(rows: &[GapRow]) -> String {
    let mut out = String::from("M,P,N,lower,upper,gap\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.12},{:.12},{:.12}\n",
            r.messages, r.desired, r.databases, r.lower, r.upper, r.gap
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    fn q(a: i64, b: i64) -> Rational {
        rational(a, b)
    }

    #[test]
    fn capacity_examples() {
        assert_eq!(capacity_high::<Rational>(3, 2, 2).unwrap(), q(4, 5));
        for n in 2..6 {
            assert_eq!(capacity_high::<Rational>(2, 1, n).unwrap(), q(n as i64, n as i64 + 1));
        }
        assert_eq!(capacity_high::<Rational>(4, 4, 3).unwrap(), q(1, 1));
        assert!(matches!(capacity_high::<Rational>(5, 2, 2), Err(Error::DomainError(_))));
    }

    #[test]
    fn upper_examples() {
        assert_eq!(upper_bound::<Rational>(5, 2, 2).unwrap(), q(8, 13));
        assert_eq!(upper_bound::<Rational>(7, 3, 3).unwrap(), q(27, 37));
        assert_eq!(upper_bound::<Rational>(5, 2, 3).unwrap(), q(18, 25));
        assert_eq!(upper_bound::<Rational>(6, 3, 2).unwrap(), q(2, 3));
    }

    #[test]
    fn repetition_examples() {
        assert_eq!(repetition_rate::<Rational>(3, 2, 2).unwrap(), q(5, 7));
        assert_eq!(repetition_rate::<Rational>(5, 3, 2).unwrap(), q(18, 31));
        assert_eq!(repetition_rate::<Rational>(4, 2, 3).unwrap(), q(7, 10));
        assert_eq!(repetition_rate::<Rational>(4, 2, 2).unwrap(), q(3, 5));
    }

    #[test]
    fn repetition_is_single_capacity_plus_delta() {
        for m in 1..=8 {
            for p in 1..=m {
                for n in 2..=5 {
                    let lhs: Rational = repetition_rate(m, p, n).unwrap();
                    let rhs = single_capacity::<Rational>(m, n) + delta::<Rational>(m, p, n).unwrap();
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn corners_for_three_two_two() {
        let r = region_corners::<Rational>(3, 2, 2).unwrap();
        assert_eq!(r.corners, vec![vec![q(4, 7), q(1, 7)], vec![q(1, 7), q(4, 7)], vec![q(2, 5), q(2, 5)]]);
        let r = region_corners::<Rational>(2, 1, 2).unwrap();
        assert_eq!(r.c, q(2, 3));
        assert_eq!(r.corners, vec![vec![q(2, 3)]]);
        let r = region_corners::<Rational>(4, 2, 2).unwrap();
        assert_eq!(r.symmetric * q(2, 1), capacity_high::<Rational>(4, 2, 2).unwrap());
    }

    #[test]
    fn float_and_exact_agree() {
        for (m, p, n) in [(5, 2, 2), (7, 3, 3), (9, 4, 7)] {
            let e: Rational = upper_bound(m, p, n).unwrap();
            let f: f64 = upper_bound(m, p, n).unwrap();
            assert!((e.to_f64().unwrap() - f).abs() < 1e-14);
        }
    }

    #[test]
    fn gaps() {
        assert_eq!(bounds_report(5, 2, 2).unwrap().gap_exact, q(3, 364));
        assert_eq!(bounds_report(5, 2, 3).unwrap().gap_exact, q(12, 1475));
        assert_eq!(bounds_report(7, 3, 3).unwrap().gap_exact, q(166, 22385));
        let r = bounds_report(5, 2, 2).unwrap();
        assert!((r.gap - 3.0 / 364.0).abs() < 1e-9);
        assert_eq!(r.beta, BigInt::from(10));
    }

    #[test]
    fn gap_vanishes_at_capacity() {
        for m in 2..=8 {
            for p in 1..=m {
                for n in 2..=5 {
                    if 2 * p >= m || m % p == 0 {
                        assert_eq!(bounds_report(m, p, n).unwrap().gap_exact, q(0, 1), "({m},{p},{n})");
                    }
                }
            }
        }
    }

    #[test]
    fn integer_ratio_capacity_matches_upper() {
        for (m, p) in [(4, 2), (6, 3), (6, 2), (8, 2), (9, 3)] {
            for n in 2..=6 {
                let c: Rational = capacity_int(m, p, n).unwrap();
                assert_eq!(c, upper_bound(m, p, n).unwrap());
                assert!((c.to_f64().unwrap() - spectral_rate(m, p, n).unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gap_decreases_in_n() {
        let rows = gap_surface(2..=8, 1..=8, 2..=20).unwrap();
        for w in rows.windows(2) {
            if (w[0].messages, w[0].desired) == (w[1].messages, w[1].desired) {
                assert!(w[1].gap <= w[0].gap + 1e-12, "{:?} -> {:?}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn csv_has_header() {
        let rows = gap_surface([5], [2], [2]).unwrap();
        let csv = gap_csv(&rows);
        assert!(csv.starts_with("M,P,N,lower,upper,gap\n5,2,2,"));
    }
}
