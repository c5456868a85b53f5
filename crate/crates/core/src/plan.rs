//! Stage counts for the multi-round scheme.
//!
//! Round `k` holds `alpha_k` stages, each covering every `k`-subset of the
//! messages once. The counts follow the backward recurrence
//! `alpha_k = (1 / (N-1)) * sum_{i=1..P} C(P, i) * alpha_{k+i}` from
//! `alpha_M = (N-1)^(M-P)`, with `alpha_{M-P+1..M-1} = 0`.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::{binomial, Integer};
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::Rational;

fn check(m: usize, p: usize, n: usize) -> Result<()> {
    if p == 0 || p > m || n < 2 {
        return Err(Error::InvalidParams(format!("need 1 <= P <= M and N >= 2, got ({m},{p},{n})")));
    }
    Ok(())
}

/// The recurrence evaluated in any scalar type; entry `k - 1` is `alpha_k`.
pub fn stage_recurrence<S: Scalar>(m: usize, p: usize, n: usize) -> Vec<S> {
    let mut alpha = vec![S::zero(); m + 1];
    alpha[m] = num_traits::pow(S::from_count(n as u64 - 1), m - p);
    let scale = S::ratio(1, n as u64 - 1);
    for k in (1..=m - p).rev() {
        let mut acc = S::zero();
        for i in 1..=p.min(m - k) {
            acc = acc + S::from_count(binomial(p as u64, i as u64)) * alpha[k + i].clone();
        }
        alpha[k] = acc * scale.clone();
    }
    alpha.remove(0);
    alpha
}

/// Integral stage counts with their download totals.
///
/// `d_db` and `u_db` count one database's queries and undesired-only queries
/// for the base counts `alpha`. When `N (D - U)` does not split evenly over
/// the `P` desired messages, the realized table repeats every round `scale`
/// times; rates are unaffected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagePlan {
    pub messages: usize,
    pub desired: usize,
    pub databases: usize,
    pub alpha: Vec<u128>,
    pub d_db: u128,
    pub u_db: u128,
    pub scale: u128,
    pub message_len: u128,
}

impl StagePlan {
    /// `alpha_k`, 1-based.
    pub fn alpha(&self, k: usize) -> u128 {
        self.alpha[k - 1]
    }

    /// Stage counts actually emitted, `scale * alpha`.
    pub fn realized_alpha(&self) -> Vec<u128> {
        self.alpha.iter().map(|a| a * self.scale).collect()
    }

    pub fn desired_total(&self) -> u128 {
        self.databases as u128 * (self.d_db - self.u_db)
    }

    pub fn download_total(&self) -> u128 {
        self.databases as u128 * self.d_db
    }
}

fn to_u128(r: &Rational, round: usize) -> Result<u128> {
    if !r.is_integer() {
        return Err(Error::NonIntegerStageCount {
            round,
            value: r.to_string(),
        });
    }
    r.numer().to_u128().ok_or(Error::Overflow("stage count"))
}

pub fn stage_counts(m: usize, p: usize, n: usize) -> Result<StagePlan> {
    check(m, p, n)?;
    let exact: Vec<Rational> = stage_recurrence(m, p, n);
    let alpha = exact.iter().enumerate().map(|(i, a)| to_u128(a, i + 1)).collect::<Result<Vec<_>>>()?;
    StagePlan::from_alpha(m, p, n, alpha)
}

impl StagePlan {
    /// Totals, scale and message length for given stage counts.
    pub fn from_alpha(m: usize, p: usize, n: usize, alpha: Vec<u128>) -> Result<Self> {
        check(m, p, n)?;
        if alpha.len() != m {
            return Err(Error::DimensionMismatch(format!("need {m} stage counts, got {}", alpha.len())));
        }
        let mut d_db = 0u128;
        let mut u_db = 0u128;
        for (i, &a) in alpha.iter().enumerate() {
            let k = i as u128 + 1;
            let add = |acc: u128, total: u128| {
                a.checked_mul(binomial(total, k))
                    .and_then(|v| acc.checked_add(v))
                    .ok_or(Error::Overflow("download total"))
            };
            d_db = add(d_db, m as u128)?;
            if k <= (m - p) as u128 {
                u_db = add(u_db, (m - p) as u128)?;
            }
        }
        let fresh = n as u128 * (d_db - u_db);
        let scale = p as u128 / fresh.gcd(&(p as u128));
        Ok(StagePlan {
            messages: m,
            desired: p,
            databases: n,
            alpha,
            d_db,
            u_db,
            scale,
            message_len: scale * fresh / p as u128,
        })
    }
}

/// `(D - U) / D` in lowest terms.
pub fn rational_rate(plan: &StagePlan) -> Rational {
    Rational::new(BigInt::from(plan.d_db - plan.u_db), BigInt::from(plan.d_db))
}

/// Closed-form solution `y[n] = sum_i gamma_i r_i^n` of the recurrence, with
/// `alpha_k = y[M - P - k]`.
#[derive(Debug, Clone)]
pub struct SpectralPlan {
    pub messages: usize,
    pub desired: usize,
    pub databases: usize,
    pub unit_roots: Vec<Complex64>,
    pub roots: Vec<Complex64>,
    pub gamma: Vec<Complex64>,
    pub residual: f64,
}

const RESIDUAL_LIMIT: f64 = 1e-8;

impl SpectralPlan {
    pub fn y(&self, idx: i64) -> Complex64 {
        self.gamma.iter().zip(&self.roots).map(|(g, r)| g * r.powi(idx as i32)).sum()
    }

    /// `alpha_k` reconstructed from the roots.
    pub fn alpha(&self, k: usize) -> Complex64 {
        self.y(self.messages as i64 - self.desired as i64 - k as i64)
    }

    pub fn rate(&self) -> f64 {
        let (m, p) = (self.messages as i32, self.desired as i32);
        let mut num = Complex64::zero();
        let mut den = Complex64::zero();
        for (g, r) in self.gamma.iter().zip(&self.roots) {
            let base = g * r.powi(m - p);
            let z = Complex64::new(1.0, 0.0) + r.inv();
            num += base * (z.powi(m) - z.powi(m - p));
            den += base * (z.powi(m) - 1.0);
        }
        (num / den).re
    }
}

pub fn spectral_plan(m: usize, p: usize, n: usize) -> Result<SpectralPlan> {
    check(m, p, n)?;
    let root_n = (n as f64).powf(1.0 / p as f64);
    let unit_roots: Vec<Complex64> = (0..p)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / p as f64))
        .collect();
    let roots: Vec<Complex64> = unit_roots.iter().map(|t| t / (root_n - t)).collect();
    let a = DMatrix::from_fn(p, p, |row, col| roots[col].powi(-((p - row) as i32)));
    let mut b = DMatrix::zeros(p, 1);
    b[(0, 0)] = Complex64::new(1.0, 0.0);
    let sol = a
        .clone()
        .lu()
        .solve(&b)
        .ok_or(Error::IllConditioned { residual: f64::INFINITY })?;
    let residual = (&a * &sol - &b).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if !residual.is_finite() || residual > RESIDUAL_LIMIT {
        return Err(Error::IllConditioned { residual });
    }
    let scale = ((n - 1) as f64).powi((m - p) as i32);
    Ok(SpectralPlan {
        messages: m,
        desired: p,
        databases: n,
        unit_roots,
        roots,
        gamma: sol.iter().map(|g| g * scale).collect(),
        residual,
    })
}

pub fn spectral_rate(m: usize, p: usize, n: usize) -> Result<f64> {
    Ok(spectral_plan(m, p, n)?.rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    fn alphas(m: usize, p: usize, n: usize) -> Vec<u128> {
        stage_counts(m, p, n).unwrap().alpha
    }

    #[test]
    fn known_stage_counts() {
        assert_eq!(alphas(5, 2, 2), vec![5, 2, 1, 0, 1]);
        assert_eq!(alphas(4, 2, 2), vec![2, 1, 0, 1]);
        assert_eq!(alphas(5, 2, 3), vec![6, 4, 4, 0, 8]);
        assert_eq!(alphas(7, 3, 3), vec![67, 30, 12, 8, 0, 0, 16]);
    }

    #[test]
    fn single_desired_message_is_geometric() {
        for m in 1..=7 {
            for n in 2..=5u128 {
                let want: Vec<u128> = (0..m as u32).map(|k| (n - 1).pow(k)).collect();
                assert_eq!(alphas(m, 1, n as usize), want);
            }
        }
    }

    #[test]
    fn totals_and_lengths() {
        let p = stage_counts(5, 2, 2).unwrap();
        assert_eq!((p.d_db, p.u_db, p.message_len, p.scale), (56, 22, 34, 1));
        let p = stage_counts(7, 3, 3).unwrap();
        assert_eq!((p.d_db, p.u_db, p.message_len), (1815, 504, 1311));
        assert_eq!(p.download_total(), 5445);
        let p = stage_counts(5, 2, 3).unwrap();
        assert_eq!((p.d_db, p.download_total()), (118, 354));
    }

    #[test]
    fn uneven_split_is_scaled() {
        let p = stage_counts(6, 3, 2).unwrap();
        assert!(p.scale > 1);
        assert_eq!(p.message_len * p.desired as u128, p.scale * p.desired_total());
    }

    #[test]
    fn rates() {
        let r = |m, p, n| rational_rate(&stage_counts(m, p, n).unwrap());
        assert_eq!(r(5, 2, 2), rational(17, 28));
        assert_eq!(r(4, 2, 2), rational(2, 3));
        assert_eq!(r(5, 2, 3), rational(42, 59));
        assert_eq!(r(7, 3, 3), rational(437, 605));
        assert_eq!(r(2, 1, 2), rational(2, 3));
        assert_eq!(r(3, 1, 2), rational(4, 7));
    }

    #[test]
    fn float_recurrence_tracks_exact() {
        let f: Vec<f64> = stage_recurrence(7, 3, 3);
        let e = alphas(7, 3, 3);
        for (a, b) in f.iter().zip(&e) {
            assert!((a - *b as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn supply_meets_demand() {
        for m in 2..=9 {
            for p in 1..=m / 2 {
                for n in 2..=4 {
                    let a = alphas(m, p, n);
                    for r in 1..=m - p {
                        let demand: u128 = (1..=p.min(m - r))
                            .map(|k| binomial(p as u128, k as u128) * a[r + k - 1])
                            .sum();
                        assert_eq!(demand, (n as u128 - 1) * a[r - 1], "({m},{p},{n}) round {r}");
                    }
                }
            }
        }
    }

    #[test]
    fn roots_satisfy_characteristic_equation() {
        for (m, p, n) in [(5, 2, 2), (7, 3, 3), (9, 4, 5)] {
            let s = spectral_plan(m, p, n).unwrap();
            for r in &s.roots {
                let lhs = r.powi(p as i32) * n as f64;
                let rhs = (r + 1.0).powi(p as i32);
                assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
            }
            for k in 1..=m {
                let y = s.alpha(k);
                assert!(y.im.abs() < 1e-9 * (1.0 + y.re.abs()));
                let exact = stage_counts(m, p, n).unwrap().alpha(k) as f64;
                assert!((y.re - exact).abs() < 1e-6 * (1.0 + exact));
            }
        }
    }

    #[test]
    fn spectral_examples() {
        assert!((spectral_rate(5, 2, 2).unwrap() - 17.0 / 28.0).abs() < 1e-12);
        assert!((spectral_rate(4, 2, 2).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((spectral_rate(6, 3, 2).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let s = spectral_plan(3, 1, 3).unwrap();
        assert!((s.roots[0].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bad_params() {
        assert!(stage_counts(3, 0, 2).is_err());
        assert!(stage_counts(3, 4, 2).is_err());
        assert!(spectral_rate(3, 1, 1).is_err());
    }
}
