//! Expected contention-period length and rate bounds.
//!
//! `S(L)` is the expected number of slots needed to resolve `L` active users
//! with uniform binary splitting. It is tabulated exactly in rationals; all
//! other quantities are floating point.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::signature_code::signature_bits_for;

/// Binomial tails below this are dropped from averaged rate sums.
pub const TAIL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("x = {0} outside [0, 1]")]
    XOutOfRange(f64),
    #[error("beta parameters must be positive, got a = {a}, b = {b}")]
    ShapeOutOfRange { a: f64, b: f64 },
    #[error("p = {0} must lie in (0, 1)")]
    Probability(f64),
    #[error("K = {k} must satisfy 1 <= K < M = {m}")]
    Threshold { k: usize, m: u64 },
    #[error("table for K = {k} only reaches L = {len}")]
    TableTooShort { k: usize, len: usize },
    #[error("continued fraction did not converge for x = {x}, a = {a}, b = {b}")]
    NoConvergence { x: f64, a: f64, b: f64 },
}

/// Exact `S(0..=l_max)` for one threshold `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotCountTable {
    k: usize,
    values: Vec<BigRational>,
}

impl SlotCountTable {
    pub fn new(k: usize, l_max: usize) -> Self {
        let mut values: Vec<BigRational> = Vec::with_capacity(l_max + 1);
        values.push(BigRational::one());
        for l in 1..=l_max {
            if l <= k {
                values.push(BigRational::from_integer(BigInt::from(l)));
                continue;
            }
            // S(L) = 1 + 2^{1-L} sum_j C(L,j) S(j); the j = 0 and j = L terms
            // contain S(L) itself and are moved to the left.
            let mut binom = BigInt::one();
            let mut acc = BigRational::zero();
            for (j, s) in values.iter().enumerate().take(l).skip(1) {
                binom = binom * BigInt::from(l - j + 1) / BigInt::from(j);
                acc += s * BigRational::from_integer(binom.clone());
            }
            let half = BigInt::one() << (l - 1);
            let num = acc + BigRational::from_integer(&half + BigInt::one());
            values.push(num / BigRational::from_integer(half - BigInt::one()));
        }
        Self { k, values }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, l: usize) -> Option<&BigRational> {
        self.values.get(l)
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    pub fn get_f64(&self, l: usize) -> Option<f64> {
        self.get(l).map(ratio_to_f64)
    }
}

pub fn expected_slots(l: usize, k: usize) -> BigRational {
    SlotCountTable::new(k, l)
        .values
        .pop()
        .expect("table is never empty")
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn alpha_star(k: usize) -> BigRational {
    BigRational::one() + BigRational::new(BigInt::one(), BigInt::from(k))
}

pub fn beta_star(k: usize) -> BigRational {
    let k1 = BigInt::from(k + 1);
    let mersenne = (BigInt::one() << k) - BigInt::one();
    BigRational::one()
        + BigRational::new(BigInt::one(), &k1 * mersenne)
        + BigRational::new(BigInt::from(2), k1)
        + BigRational::new(BigInt::one(), BigInt::from(k))
}

pub fn alpha_star_f64(k: usize) -> f64 {
    ratio_to_f64(&alpha_star(k))
}

pub fn beta_star_f64(k: usize) -> f64 {
    ratio_to_f64(&beta_star(k))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub l: usize,
    pub exact: f64,
    pub lower: f64,
    pub upper: f64,
    /// `S(L) - (alpha* L - 1)`
    pub lower_margin: f64,
    /// `(beta* L - 1) - S(L)`
    pub upper_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub k: usize,
    pub rows: Vec<BoundRow>,
    /// Values of `L` where the exact comparison failed.
    pub violations: Vec<usize>,
}

impl BoundsReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Compares the table against `alpha* L - 1 <= S(L) <= beta* L - 1` for
/// every `K < L <= l_max`, exactly.
pub fn check_bounds(table: &SlotCountTable, l_max: usize) -> Result<BoundsReport, AnalysisError> {
    if table.l_max() < l_max {
        return Err(AnalysisError::TableTooShort {
            k: table.k,
            len: table.l_max(),
        });
    }
    let (alpha, beta) = (alpha_star(table.k), beta_star(table.k));
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for l in table.k + 1..=l_max {
        let ll = BigRational::from_integer(BigInt::from(l));
        let lower = &alpha * &ll - BigRational::one();
        let upper = &beta * &ll - BigRational::one();
        let s = &table.values[l];
        if !(lower <= *s && *s <= upper) {
            violations.push(l);
        }
        rows.push(BoundRow {
            l,
            exact: ratio_to_f64(s),
            lower: ratio_to_f64(&lower),
            upper: ratio_to_f64(&upper),
            lower_margin: ratio_to_f64(&(s - &lower)),
            upper_margin: ratio_to_f64(&(&upper - s)),
        });
    }
    Ok(BoundsReport {
        k: table.k,
        rows,
        violations,
    })
}

/// `ln C(n, k)` as a sum of logs, exact enough for `n` in the thousands.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

/// `q(L) = C(M, L) p^L (1-p)^{M-L}`.
pub fn q_dist(m: u64, p: f64, l: u64) -> f64 {
    if l > m {
        return 0.0;
    }
    let ln = ln_choose(m, l) + l as f64 * p.ln() + (m - l) as f64 * (-p).ln_1p();
    ln.exp()
}

/// `q(L)` conditioned on at least one active user.
pub fn q_hat(m: u64, p: f64, l: u64) -> f64 {
    if l == 0 {
        return 0.0;
    }
    q_dist(m, p, l) / prob_any_active(m, p)
}

/// `1 - q_0` without cancellation for small `p`.
pub fn prob_any_active(m: u64, p: f64) -> f64 {
    -(m as f64 * (-p).ln_1p()).exp_m1()
}

fn check_beta_args(x: f64, a: f64, b: f64) -> Result<(), AnalysisError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(AnalysisError::XOutOfRange(x));
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(AnalysisError::ShapeOutOfRange { a, b });
    }
    Ok(())
}

/// Regularized incomplete beta function `I_x(a, b)`.
///
/// Integer shapes use `I_x(a, b) = sum_{j=a}^{n} C(n, j) x^j (1-x)^{n-j}`
/// with `n = a + b - 1`; anything else goes to the continued fraction.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64, AnalysisError> {
    check_beta_args(x, a, b)?;
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let integral = a.fract() == 0.0 && b.fract() == 0.0 && a + b < 1e7;
    if integral {
        Ok(reg_inc_beta_int(x, a as u64, b as u64))
    } else {
        reg_inc_beta_cf(x, a, b)
    }
}

fn reg_inc_beta_int(x: f64, a: u64, b: u64) -> f64 {
    let n = a + b - 1;
    let (lx, l1x) = (x.ln(), (-x).ln_1p());
    (a..=n)
        .map(|j| (ln_choose(n, j) + j as f64 * lx + (n - j) as f64 * l1x).exp())
        .sum::<f64>()
        .min(1.0)
}

/// Continued-fraction evaluation (modified Lentz), valid for any positive
/// real shapes.
pub fn reg_inc_beta_cf(x: f64, a: f64, b: f64) -> Result<f64, AnalysisError> {
    check_beta_args(x, a, b)?;
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        return reg_inc_beta_cf(1.0 - x, b, a).map(|v| 1.0 - v);
    }
    let ln_front =
        libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * x.ln() + b * (-x).ln_1p();
    let front = ln_front.exp() / a;

    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        for num in [
            m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m)),
            -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0)),
        ] {
            d = 1.0 + num * d;
            if d.abs() < TINY {
                d = TINY;
            }
            c = 1.0 + num / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            h *= d * c;
        }
        if (d * c - 1.0).abs() < EPS {
            return Ok(front * h);
        }
    }
    Err(AnalysisError::NoConvergence { x, a, b })
}

fn check_mpk(m: u64, p: f64, k: usize) -> Result<(), AnalysisError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(AnalysisError::Probability(p));
    }
    if k < 1 || k as u64 >= m {
        return Err(AnalysisError::Threshold { k, m });
    }
    Ok(())
}

/// Lower bound on the average resolution rate, evaluated as
/// `(b I_{1-p}(M-K, K+1) + I_p(K+1, M-K) - q0 b) / ((1 - q0) b)` with
/// `b = beta*`, clamped at zero.
pub fn avg_res_rate_bound(m: u64, p: f64, k: usize) -> Result<f64, AnalysisError> {
    check_mpk(m, p, k)?;
    let beta = beta_star_f64(k);
    let (mf, kf) = (m as f64, k as f64);
    let head = reg_inc_beta(1.0 - p, mf - kf, kf + 1.0)?;
    let tail = reg_inc_beta(p, kf + 1.0, mf - kf)?;
    let q0 = (mf * (-p).ln_1p()).exp();
    let bound = (beta * head + tail - q0 * beta) / (prob_any_active(m, p) * beta);
    Ok(bound.max(0.0))
}

/// Binomial weights `q(0..=l_max)` where the mass above `l_max` is below
/// `tol`, together with that residual mass.
pub fn truncated_weights(m: u64, p: f64, tol: f64) -> (Vec<f64>, f64) {
    let q: Vec<f64> = (0..=m).map(|l| q_dist(m, p, l)).collect();
    let mut tail = 0.0;
    let mut l_max = m as usize;
    // tail[l] = sum_{j > l} q(j), accumulated from the small end upward
    while l_max > 0 && tail + q[l_max] < tol {
        tail += q[l_max];
        l_max -= 1;
    }
    (q[..=l_max].to_vec(), tail)
}

/// Exact average resolution rate `sum_L q_hat(L) L / S(L)`, truncated at
/// [`TAIL_TOLERANCE`].
pub fn avg_res_rate_exact(m: u64, p: f64, k: usize) -> Result<f64, AnalysisError> {
    check_mpk(m, p, k)?;
    let (q, _) = truncated_weights(m, p, TAIL_TOLERANCE);
    let table = SlotCountTable::new(k, q.len() - 1);
    let any = prob_any_active(m, p);
    Ok(q.iter()
        .enumerate()
        .skip(1)
        .map(|(l, w)| w / any * l as f64 / table.get_f64(l).unwrap())
        .sum())
}

/// Expected contention-period length given at least one active user,
/// `sum_L q_hat(L) S(L)`, truncated at [`TAIL_TOLERANCE`].
pub fn avg_slots_exact(m: u64, p: f64, k: usize) -> Result<f64, AnalysisError> {
    check_mpk(m, p, k)?;
    let (q, _) = truncated_weights(m, p, TAIL_TOLERANCE);
    let table = SlotCountTable::new(k, q.len() - 1);
    let any = prob_any_active(m, p);
    Ok(q.iter()
        .enumerate()
        .skip(1)
        .map(|(l, w)| w / any * table.get_f64(l).unwrap())
        .sum())
}

/// Achievable computation rate `1/2 log2+ P`.
pub fn r_plnc(power: f64) -> f64 {
    if power >= 1.0 {
        0.5 * power.log2()
    } else {
        0.0
    }
}

/// Fraction of a slot's symbols that carry payload when the signature costs
/// `(K+2) log2 M` bits.
pub fn payload_fraction(m: u64, k: usize, d_bits: f64) -> f64 {
    d_bits / ((k as f64 + 2.0) * (m as f64).log2() + d_bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NetRateBounds {
    /// Per-`L` weight 1 for `L <= K` and `L / (beta* L - 1)` above.
    pub lower: f64,
    /// Weight `L / (beta* L - 1)` for every `L >= 1`. Can exceed `upper`.
    pub lower_as_printed: f64,
    pub upper: f64,
    /// `lower` with the payload fraction set to one.
    pub limit: f64,
    pub r_plnc: f64,
    /// Largest `L` kept in the sums.
    pub l_max: usize,
    /// Probability mass dropped above `l_max`.
    pub tail_mass: f64,
}

pub fn net_rate_bounds(
    m: u64,
    p: f64,
    k: usize,
    power: f64,
    d_bits: f64,
) -> Result<NetRateBounds, AnalysisError> {
    check_mpk(m, p, k)?;
    let (q, tail_mass) = truncated_weights(m, p, TAIL_TOLERANCE);
    let beta = beta_star_f64(k);
    let rate = r_plnc(power);
    let (mut tight, mut printed, mut upper) = (0.0, 0.0, 0.0);
    for (l, w) in q.iter().enumerate().skip(1) {
        let lf = l as f64;
        let ratio = lf / (beta * lf - 1.0);
        printed += w * ratio;
        tight += w * if l <= k { 1.0 } else { ratio };
        upper += w * 0.5 * (1.0 + lf * power).log2();
    }
    let frac = payload_fraction(m, k, d_bits);
    Ok(NetRateBounds {
        lower: tight * rate * frac,
        lower_as_printed: printed * rate * frac,
        upper,
        limit: tight * rate,
        r_plnc: rate,
        l_max: q.len() - 1,
        tail_mass,
    })
}

/// `per_decade` log-spaced points per decade from `lo` to `hi`, both
/// included. Points are computed from integer exponents so decade ends are
/// exact.
pub fn log_grid(lo: f64, hi: f64, per_decade: u32) -> Vec<f64> {
    let start = (lo.log10() * per_decade as f64).round() as i64;
    let end = (hi.log10() * per_decade as f64).round() as i64;
    (start..=end)
        .map(|i| {
            if i % per_decade as i64 == 0 {
                10f64.powi((i / per_decade as i64) as i32)
            } else {
                10f64.powf(i as f64 / per_decade as f64)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerLRates {
    pub l: usize,
    pub slots: f64,
    pub r_res: f64,
    pub r_net: f64,
}

/// Per-`L` and averaged rates for one operating point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub k: usize,
    pub r_plnc: f64,
    /// Signature length in bits for the chosen alphabet.
    pub signature_bits: f64,
    /// Channel uses per slot, `(N_w + D) / R_plnc`; infinite when `P <= 1`.
    pub channel_uses: f64,
    pub per_l: Vec<PerLRates>,
    pub avg_res_bound: f64,
    pub avg_res_exact: f64,
    pub net: NetRateBounds,
}

pub fn rate_report(
    m: u64,
    k: usize,
    q: u64,
    p: f64,
    power: f64,
    d_bits: f64,
    l_max: usize,
) -> Result<RateReport, AnalysisError> {
    check_mpk(m, p, k)?;
    let rate = r_plnc(power);
    let signature_bits = signature_bits_for(m, k, q);
    let channel_uses = (signature_bits + d_bits) / rate;
    let table = SlotCountTable::new(k, l_max);
    let per_l = (1..=l_max)
        .map(|l| {
            let slots = table.get_f64(l).unwrap();
            let r_res = l as f64 / slots;
            PerLRates {
                l,
                slots,
                r_res,
                r_net: r_res * d_bits / channel_uses,
            }
        })
        .collect();
    Ok(RateReport {
        k,
        r_plnc: rate,
        signature_bits,
        channel_uses,
        per_l,
        avg_res_bound: avg_res_rate_bound(m, p, k)?,
        avg_res_exact: avg_res_rate_exact(m, p, k)?,
        net: net_rate_bounds(m, p, k, power, d_bits)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn small_recursion_values() {
        assert_eq!(expected_slots(0, 1), rat(1, 1));
        assert_eq!(expected_slots(1, 1), rat(1, 1));
        assert_eq!(expected_slots(2, 1), rat(5, 1));
        assert_eq!(expected_slots(3, 1), rat(23, 3));
        assert_eq!(expected_slots(4, 4), rat(4, 1));
        // K = 2, L = 3: S(3)(1 - 1/4) = 1 + (1 + 3*1 + 3*2)/4
        assert_eq!(expected_slots(3, 2), rat(14, 3));
    }

    // Direct evaluation of the unrearranged recursion in f64.
    fn naive(l: usize, k: usize, memo: &mut Vec<f64>) -> f64 {
        for n in memo.len()..=l {
            let v = if n == 0 {
                1.0
            } else if n <= k {
                n as f64
            } else {
                let w = 0.5f64.powi(n as i32);
                let mut binom = 1.0;
                let mut rest = 0.0;
                for j in 1..n {
                    binom = binom * (n - j + 1) as f64 / j as f64;
                    rest += binom * w * (memo[j] + memo[n - j]);
                }
                // x = 1 + 2w(1 + x) + rest
                (1.0 + 2.0 * w + rest) / (1.0 - 2.0 * w)
            };
            memo.push(v);
        }
        memo[l]
    }

    #[test]
    fn table_matches_float_recursion() {
        for k in [1, 2, 3, 4, 8] {
            let table = SlotCountTable::new(k, 40);
            let mut memo = Vec::new();
            for l in 0..=40 {
                let a = table.get_f64(l).unwrap();
                let b = naive(l, k, &mut memo);
                assert!((a - b).abs() <= 1e-10 * b, "K={k} L={l}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn table_is_strictly_increasing() {
        for k in [1, 4, 16] {
            let t = SlotCountTable::new(k, 50);
            assert_eq!(t.get(0), Some(&BigRational::one()));
            for l in 2..=50 {
                assert!(t.values()[l] > t.values()[l - 1], "K={k} L={l}");
            }
        }
    }

    #[test]
    fn starred_constants() {
        assert_eq!(alpha_star(1), rat(2, 1));
        assert_eq!(beta_star(1), rat(7, 2));
        assert_eq!(alpha_star(4), rat(5, 4));
        let mut prev = (alpha_star_f64(1), beta_star_f64(1));
        for k in 2..=60 {
            let cur = (alpha_star_f64(k), beta_star_f64(k));
            assert!(cur.0 < prev.0 && cur.1 < prev.1);
            assert!(cur.0 > 1.0 && cur.1 > 1.0);
            prev = cur;
        }
        assert!(prev.0 - 1.0 < 0.02 && prev.1 - 1.0 < 0.06);
    }

    #[test]
    fn sandwich_examples() {
        let t = SlotCountTable::new(1, 3);
        let r = check_bounds(&t, 3).unwrap();
        assert!(r.passed());
        assert_eq!(
            (r.rows[0].lower, r.rows[0].exact, r.rows[0].upper),
            (3.0, 5.0, 6.0)
        );
        assert_eq!((r.rows[1].lower, r.rows[1].upper), (5.0, 9.5));
        let t4 = SlotCountTable::new(4, 4);
        assert!(check_bounds(&t4, 4).unwrap().rows.is_empty());
        assert!(check_bounds(&t4, 5).is_err());
    }

    #[test]
    fn binomial_weights_normalize() {
        for (m, p) in [(31u64, 0.1), (1031, 3.0 / 1031.0), (1031, 0.5), (7, 0.9)] {
            let total: f64 = (0..=m).map(|l| q_dist(m, p, l)).sum();
            assert!((total - 1.0).abs() < 1e-12, "M={m} p={p}: {total}");
            let hat: f64 = (1..=m).map(|l| q_hat(m, p, l)).sum();
            assert!((hat - 1.0).abs() < 1e-12);
            let q0 = (1.0 - p).powi(m as i32);
            assert!((q_dist(m, p, 0) - q0).abs() <= 1e-12 * q0);
        }
    }

    #[test]
    fn binomial_recurrence_oracle() {
        let (m, p) = (200u64, 0.03f64);
        let mut q = (1.0 - p).powi(m as i32);
        for l in 0..60 {
            let got = q_dist(m, p, l);
            assert!((got - q).abs() <= 1e-12 * q.max(1e-300), "L={l}");
            q *= (m - l) as f64 / (l + 1) as f64 * p / (1.0 - p);
        }
    }

    #[test]
    fn incomplete_beta_endpoints_and_symmetry() {
        assert_eq!(reg_inc_beta(0.0, 3.0, 4.0).unwrap(), 0.0);
        assert_eq!(reg_inc_beta(1.0, 3.0, 4.0).unwrap(), 1.0);
        for &(a, b) in &[
            (1.0, 1.0),
            (2.0, 5.0),
            (17.0, 1015.0),
            (2.5, 0.7),
            (30.0, 30.0),
        ] {
            for i in 1..20 {
                let x = i as f64 / 20.0;
                let s = reg_inc_beta(x, a, b).unwrap() + reg_inc_beta(1.0 - x, b, a).unwrap();
                assert!((s - 1.0).abs() < 1e-12, "a={a} b={b} x={x}: {s}");
            }
        }
        assert!((reg_inc_beta(0.3, 1.0, 1.0).unwrap() - 0.3).abs() < 1e-15);
        // I_x(a, 1) = x^a
        assert!((reg_inc_beta_cf(0.6, 2.5, 1.0).unwrap() - 0.6f64.powf(2.5)).abs() < 1e-13);
        assert!(reg_inc_beta(1.5, 1.0, 1.0).is_err());
        assert!(reg_inc_beta(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn integer_path_matches_continued_fraction() {
        for &(a, b) in &[(3u64, 4u64), (1028, 4), (17, 1015), (50, 60)] {
            for i in 1..10 {
                let x = i as f64 / 10.0;
                let int = reg_inc_beta(x, a as f64, b as f64).unwrap();
                let cf = reg_inc_beta_cf(x, a as f64, b as f64).unwrap();
                assert!(
                    (int - cf).abs() <= 1e-10 * int.max(1e-200) + 1e-300,
                    "{a},{b},{x}"
                );
            }
        }
    }

    #[test]
    fn binomial_head_identity() {
        let (m, k, p) = (31u64, 3usize, 0.1);
        let direct: f64 = (0..=k as u64).map(|l| q_dist(m, p, l)).sum();
        let beta = reg_inc_beta(1.0 - p, (m - k as u64) as f64, k as f64 + 1.0).unwrap();
        assert!((direct - beta).abs() <= 1e-12 * direct);
    }

    #[test]
    fn resolution_bound_limits_and_shape() {
        assert!((avg_res_rate_bound(31, 1e-7, 3).unwrap() - 1.0).abs() < 1e-5);
        let m = 1031;
        let p = 3.0 / m as f64;
        let vals: Vec<f64> = (1..=20)
            .map(|k| avg_res_rate_bound(m, p, k).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
        assert!(vals[15] > 0.95);
        assert!(vals.iter().all(|&v| v > 0.0 && v <= 1.0));
        assert!(avg_res_rate_bound(7, 0.5, 7).is_err());
        assert!(avg_res_rate_bound(7, 0.0, 2).is_err());
    }

    #[test]
    fn exact_mixture_dominates_bound() {
        for (m, p) in [(7u64, 0.3), (11, 0.2), (31, 0.1), (31, 0.4)] {
            for k in 1..(m as usize).min(6) {
                let exact = avg_res_rate_exact(m, p, k).unwrap();
                let beta = beta_star_f64(k);
                // S(L) = L up to K, beta* L - 1 above
                let proxy: f64 = (1..=m)
                    .map(|l| {
                        let lf = l as f64;
                        let s = if l as usize <= k { lf } else { beta * lf - 1.0 };
                        q_hat(m, p, l) * lf / s
                    })
                    .sum();
                let bound = avg_res_rate_bound(m, p, k).unwrap();
                assert!(exact + 1e-12 >= proxy, "M={m} K={k}");
                assert!(proxy + 1e-12 >= bound, "M={m} K={k}: {proxy} < {bound}");
            }
        }
    }

    #[test]
    fn slot_mixture_small_case() {
        // M = 3, K = 1: weights 3pq^2, 3p^2q, p^3 over S = 1, 5, 23/3
        let (p, q) = (0.3f64, 0.7f64);
        let any = 1.0 - q.powi(3);
        let want = (3.0 * p * q * q + 5.0 * 3.0 * p * p * q + 23.0 / 3.0 * p.powi(3)) / any;
        assert!((avg_slots_exact(3, p, 1).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn computation_rate() {
        assert!((r_plnc(100.0) - std::f64::consts::LOG2_10).abs() < 1e-12);
        assert_eq!(r_plnc(1.0), 0.0);
        assert_eq!(r_plnc(0.5), 0.0);
    }

    #[test]
    fn net_rate_shape() {
        let m = 1031;
        let p = 3.0 / m as f64;
        for k in [3, 8, 16] {
            let mut prev = 0.0;
            for e in 1..=5 {
                let nb = net_rate_bounds(m, p, k, 100.0, 10f64.powi(e)).unwrap();
                assert!(nb.lower <= nb.upper);
                assert!(nb.lower > prev);
                assert!(nb.tail_mass < TAIL_TOLERANCE);
                prev = nb.lower;
            }
            let nb = net_rate_bounds(m, p, k, 100.0, 1e5).unwrap();
            assert!((nb.limit - nb.lower) / nb.limit < 0.05);
            // the D -> infinity limit dominates the unconditioned resolution bound
            let res = avg_res_rate_bound(m, p, k).unwrap();
            assert!(nb.limit + 1e-12 >= res * prob_any_active(m, p) * nb.r_plnc);
        }
        let flat = net_rate_bounds(m, p, 8, 1.0, 1000.0).unwrap();
        assert_eq!((flat.lower, flat.lower_as_printed), (0.0, 0.0));
    }

    #[test]
    fn uniform_weight_exceeds_upper_bound() {
        let m = 1031;
        let nb = net_rate_bounds(m, 3.0 / m as f64, 16, 100.0, 1e5).unwrap();
        assert!(nb.lower_as_printed > nb.upper);
        assert!(nb.lower < nb.upper);
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(10.0, 1e5, 10);
        assert_eq!(g.len(), 41);
        assert_eq!((g[0], g[10], g[40]), (10.0, 100.0, 1e5));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn report_consistency() {
        let r = rate_report(31, 3, 2, 0.1, 100.0, 64.0, 10).unwrap();
        assert_eq!(r.per_l.len(), 10);
        assert!((r.per_l[2].r_res - 1.0).abs() < 1e-15);
        assert!(r.per_l[5].r_res < 1.0);
        assert!(r.avg_res_exact >= r.avg_res_bound);
        let n = r.channel_uses;
        assert!((r.per_l[0].r_net - 64.0 / n).abs() < 1e-12);
    }
}
