//! Exact arithmetic in a prime field `F_M` and in its extension `F_{M^K}`.
//!
//! Extension elements are kept in the power basis `{1, a, ..., a^{K-1}}` where
//! `a` is the residue class of the indeterminate modulo a primitive minimal
//! polynomial. Every constructed [`ExtField`] therefore has `a` as a generator
//! of its multiplicative group, which is what the signature construction needs.
//!
//! Group orders must stay below `2^64` so that `M^K - 1` can be factored;
//! exponents are accepted as [`BigUint`].

use std::collections::HashMap;

use num_bigint::BigUint;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{self, inv_mod, mul_mod};

/// Largest baby-step table built by a single discrete-log call.
const MAX_BSGS_TABLE: u64 = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is outside the supported range (must be below 2^32)")]
    ModulusTooLarge(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("group order {modulus}^{degree} - 1 does not fit in 64 bits")]
    OrderTooLarge { modulus: u64, degree: usize },
    #[error(
        "minimal polynomial must be monic of degree {degree} with coefficients below {modulus}"
    )]
    MalformedPolynomial { modulus: u64, degree: usize },
    #[error("polynomial is not primitive over F_{0}")]
    NotPrimitive(u64),
    #[error("no primitive polynomial of degree {degree} over F_{modulus} was found")]
    SearchExhausted { modulus: u64, degree: usize },
    #[error("element does not belong to this field")]
    ForeignElement,
    #[error("zero has no discrete logarithm")]
    LogOfZero,
    #[error("discrete log would need a table of {0} entries")]
    TableTooLarge(u64),
}

/// The prime field `F_M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    modulus: u64,
}

impl PrimeField {
    pub fn new(modulus: u64) -> Result<Self, FieldError> {
        if modulus >= 1 << 32 {
            return Err(FieldError::ModulusTooLarge(modulus));
        }
        if !arith::is_prime(modulus) {
            return Err(FieldError::NotPrime(modulus));
        }
        Ok(Self { modulus })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.modulus
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.modulus - b) % self.modulus
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        (self.modulus - a % self.modulus) % self.modulus
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.modulus
    }

    pub fn inv(&self, a: u64) -> Option<u64> {
        inv_mod(a % self.modulus, self.modulus)
    }

    /// Evaluates `poly` (coefficients low to high) at `x` by Horner's rule.
    pub fn eval(&self, poly: &[u64], x: u64) -> u64 {
        poly.iter()
            .rev()
            .fold(0, |acc, &c| self.add(self.mul(acc, x), c))
    }
}

/// An element of `F_{M^K}` in power-basis coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExtElement {
    coeffs: Vec<u64>,
}

impl ExtElement {
    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
}

/// `F_{M^K}` presented as `F_M[x] / (m(x))` with `m` primitive.
#[derive(Debug, Clone)]
pub struct ExtField {
    base: PrimeField,
    degree: usize,
    min_poly: Vec<u64>,
    group_order: u64,
    order_factors: Vec<(u64, u32)>,
}

impl PartialEq for ExtField {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.min_poly == other.min_poly
    }
}

impl Eq for ExtField {}

/// Plain-data form of an [`ExtField`]; coefficients low to high.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtFieldRecord {
    pub m: u64,
    pub k: usize,
    pub min_poly: Vec<u64>,
}

fn group_order(modulus: u64, degree: usize) -> Result<u64, FieldError> {
    let too_large = FieldError::OrderTooLarge { modulus, degree };
    let exp = u32::try_from(degree).map_err(|_| too_large.clone())?;
    modulus.checked_pow(exp).map(|q| q - 1).ok_or(too_large)
}

/// Finds the first primitive monic polynomial of degree `k` over `F_m`.
///
/// Candidates are visited by an index whose base-`m` digits are the negated
/// coefficients `c_0, ..., c_{k-1}`, least significant first. For `k = 1` this
/// visits `x - 1, x - 2, ...`, so the result is `x - g` for the smallest
/// primitive root `g`.
pub fn find_primitive_extension(m: u64, k: usize) -> Result<ExtField, FieldError> {
    let base = PrimeField::new(m)?;
    if k == 0 {
        return Err(FieldError::ZeroDegree);
    }
    let order = group_order(m, k)?;
    let factors = arith::factorize(order.max(1));
    let mut digits = vec![0u64; k];
    loop {
        let mut candidate: Vec<u64> = digits.iter().map(|&d| base.neg(d)).collect();
        candidate.push(1);
        if candidate[0] != 0 && is_irreducible(&base, &candidate) {
            let field = ExtField {
                base,
                degree: k,
                min_poly: candidate,
                group_order: order,
                order_factors: factors.clone(),
            };
            if field.generator_is_primitive() {
                return Ok(field);
            }
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == k {
                return Err(FieldError::SearchExhausted {
                    modulus: m,
                    degree: k,
                });
            }
            digits[i] += 1;
            if digits[i] < m {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Rabin's test: `f` of degree `k` is irreducible iff `x^{M^k} = x (mod f)` and
/// `gcd(x^{M^{k/r}} - x, f) = 1` for every prime `r | k`.
fn is_irreducible(base: &PrimeField, f: &[u64]) -> bool {
    let k = f.len() - 1;
    if k == 1 {
        return true;
    }
    let x = vec![0, 1];
    // frob[j] = x^{M^j} mod f
    let mut frob = Vec::with_capacity(k + 1);
    let mut h = poly::rem(base, &x, f);
    frob.push(h.clone());
    for _ in 0..k {
        h = poly::pow_mod(base, &h, base.modulus(), f);
        frob.push(h.clone());
    }
    if !poly::trim(poly::sub(base, &frob[k], &x)).is_empty() {
        return false;
    }
    for (r, _) in arith::factorize(k as u64) {
        let j = k / r as usize;
        let diff = poly::trim(poly::sub(base, &frob[j], &x));
        let g = poly::gcd(base, &diff, f);
        if g.len() != 1 {
            return false;
        }
    }
    true
}

impl ExtField {
    /// Wraps a caller-supplied minimal polynomial after checking that it is
    /// monic, irreducible and primitive.
    pub fn from_min_poly(m: u64, min_poly: Vec<u64>) -> Result<Self, FieldError> {
        let base = PrimeField::new(m)?;
        if min_poly.len() < 2 {
            return Err(FieldError::ZeroDegree);
        }
        let degree = min_poly.len() - 1;
        if min_poly[degree] != 1 || min_poly.iter().any(|&c| c >= m) {
            return Err(FieldError::MalformedPolynomial { modulus: m, degree });
        }
        let order = group_order(m, degree)?;
        if min_poly[0] == 0 || !is_irreducible(&base, &min_poly) {
            return Err(FieldError::NotPrimitive(m));
        }
        let field = ExtField {
            base,
            degree,
            min_poly,
            group_order: order,
            order_factors: arith::factorize(order.max(1)),
        };
        if !field.generator_is_primitive() {
            return Err(FieldError::NotPrimitive(m));
        }
        Ok(field)
    }

    fn generator_is_primitive(&self) -> bool {
        let a = self.generator();
        let one = self.one();
        if self.pow_u64(&a, self.group_order) != one {
            return false;
        }
        self.order_factors
            .iter()
            .all(|&(r, _)| self.pow_u64(&a, self.group_order / r) != one)
    }

    pub fn base(&self) -> &PrimeField {
        &self.base
    }

    pub fn characteristic(&self) -> u64 {
        self.base.modulus
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Minimal polynomial of the generator, coefficients low to high.
    pub fn min_poly(&self) -> &[u64] {
        &self.min_poly
    }

    /// `M^K - 1`.
    pub fn group_order(&self) -> BigUint {
        BigUint::from(self.group_order)
    }

    pub fn group_order_u64(&self) -> u64 {
        self.group_order
    }

    pub fn order_factors(&self) -> &[(u64, u32)] {
        &self.order_factors
    }

    pub fn to_record(&self) -> ExtFieldRecord {
        ExtFieldRecord {
            m: self.base.modulus,
            k: self.degree,
            min_poly: self.min_poly.clone(),
        }
    }

    pub fn zero(&self) -> ExtElement {
        ExtElement {
            coeffs: vec![0; self.degree],
        }
    }

    pub fn one(&self) -> ExtElement {
        self.from_base(1)
    }

    /// Embeds `b` in `F_M` into the extension.
    pub fn from_base(&self, b: u64) -> ExtElement {
        let mut coeffs = vec![0; self.degree];
        coeffs[0] = b % self.base.modulus;
        ExtElement { coeffs }
    }

    /// The primitive element `a`, i.e. the residue class of `x`.
    pub fn generator(&self) -> ExtElement {
        let mut coeffs = vec![0; self.degree];
        if self.degree == 1 {
            // x = -c_0 mod (x + c_0)
            coeffs[0] = self.base.neg(self.min_poly[0]);
        } else {
            coeffs[1] = 1;
        }
        ExtElement { coeffs }
    }

    /// Builds an element from power-basis coordinates.
    pub fn element(&self, coeffs: Vec<u64>) -> Result<ExtElement, FieldError> {
        let e = ExtElement { coeffs };
        self.check(&e)?;
        Ok(e)
    }

    pub fn contains(&self, e: &ExtElement) -> bool {
        e.coeffs.len() == self.degree && e.coeffs.iter().all(|&c| c < self.base.modulus)
    }

    fn check(&self, e: &ExtElement) -> Result<(), FieldError> {
        if self.contains(e) {
            Ok(())
        } else {
            Err(FieldError::ForeignElement)
        }
    }

    pub fn add(&self, a: &ExtElement, b: &ExtElement) -> Result<ExtElement, FieldError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.add_raw(a, b))
    }

    pub fn mul(&self, a: &ExtElement, b: &ExtElement) -> Result<ExtElement, FieldError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul_raw(a, b))
    }

    /// Square-and-multiply exponentiation; `0^0` is taken to be one.
    pub fn pow(&self, a: &ExtElement, exp: &BigUint) -> Result<ExtElement, FieldError> {
        self.check(a)?;
        let mut acc = self.one();
        for i in (0..exp.bits()).rev() {
            acc = self.mul_raw(&acc, &acc);
            if exp.bit(i) {
                acc = self.mul_raw(&acc, a);
            }
        }
        Ok(acc)
    }

    pub(crate) fn add_raw(&self, a: &ExtElement, b: &ExtElement) -> ExtElement {
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(&x, &y)| self.base.add(x, y))
            .collect();
        ExtElement { coeffs }
    }

    pub(crate) fn mul_raw(&self, a: &ExtElement, b: &ExtElement) -> ExtElement {
        let m = self.base.modulus;
        let k = self.degree;
        let mut prod = vec![0u64; 2 * k - 1];
        for (i, &x) in a.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.coeffs.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % m;
            }
        }
        // reduce with the monic modulus, highest degree first
        for top in (k..prod.len()).rev() {
            let c = prod[top];
            if c == 0 {
                continue;
            }
            prod[top] = 0;
            for j in 0..k {
                let sub = self.base.mul(c, self.min_poly[j]);
                prod[top - k + j] = self.base.sub(prod[top - k + j], sub);
            }
        }
        prod.truncate(k);
        ExtElement { coeffs: prod }
    }

    pub(crate) fn pow_u64(&self, a: &ExtElement, mut exp: u64) -> ExtElement {
        let mut acc = self.one();
        let mut sq = a.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul_raw(&acc, &sq);
            }
            sq = self.mul_raw(&sq, &sq);
            exp >>= 1;
        }
        acc
    }

    /// Discrete logarithm to the base `a`: the unique `s` in `[0, M^K - 1)`
    /// with `a^s = target`.
    ///
    /// Pohlig-Hellman over the factorization of `M^K - 1`, solving each
    /// prime-order digit with baby-step/giant-step.
    pub fn discrete_log(&self, target: &ExtElement) -> Result<BigUint, FieldError> {
        self.check(target)?;
        if target.is_zero() {
            return Err(FieldError::LogOfZero);
        }
        let n = self.group_order;
        let a = self.generator();
        let mut residue: u64 = 0;
        let mut modulus: u64 = 1;
        for &(r, e) in &self.order_factors {
            let re = r.pow(e);
            let cofactor = n / re;
            let g = self.pow_u64(&a, cofactor);
            let h = self.pow_u64(target, cofactor);
            // gamma has order r
            let gamma = self.pow_u64(&g, re / r);
            let g_inv = self.pow_u64(&g, re - 1);
            let mut x: u64 = 0;
            let mut r_pow: u64 = 1;
            for step in 0..e {
                let shifted = self.mul_raw(&h, &self.pow_u64(&g_inv, x));
                let probe = self.pow_u64(&shifted, re / (r_pow * r));
                let digit = self
                    .bsgs(&gamma, &probe, r)?
                    .expect("element of the order-r subgroup has a logarithm");
                x += digit * r_pow;
                if step + 1 < e {
                    r_pow *= r;
                }
            }
            // CRT merge of (residue mod modulus) with (x mod re)
            let m_inv = inv_mod(modulus % re, re).expect("coprime prime powers");
            let diff = (x + re - residue % re) % re;
            residue += modulus * mul_mod(diff, m_inv, re);
            modulus *= re;
        }
        Ok(BigUint::from(residue % n.max(1)))
    }

    /// Baby-step/giant-step over the full multiplicative group, without
    /// using the factorization of its order.
    pub fn discrete_log_bsgs(&self, target: &ExtElement) -> Result<BigUint, FieldError> {
        self.check(target)?;
        if target.is_zero() {
            return Err(FieldError::LogOfZero);
        }
        let s = self
            .bsgs(&self.generator(), target, self.group_order)?
            .expect("every nonzero element is a power of a primitive element");
        Ok(BigUint::from(s))
    }

    /// Solves `base^x = target` for `x` in `[0, order)`, where `order` is the
    /// order of `base`.
    fn bsgs(
        &self,
        base: &ExtElement,
        target: &ExtElement,
        order: u64,
    ) -> Result<Option<u64>, FieldError> {
        if order <= 1 {
            return Ok((*target == self.one()).then_some(0));
        }
        let m = (order as f64).sqrt().ceil() as u64;
        let m = if m.saturating_mul(m) < order {
            m + 1
        } else {
            m
        };
        if m > MAX_BSGS_TABLE {
            return Err(FieldError::TableTooLarge(m));
        }
        let mut table = HashMap::with_capacity(m as usize);
        let mut cur = self.one();
        for j in 0..m {
            table.entry(cur.clone()).or_insert(j);
            cur = self.mul_raw(&cur, base);
        }
        // base^{-m} = base^{order - m mod order}
        let giant = self.pow_u64(base, (order - m % order) % order);
        let mut gamma = target.clone();
        for i in 0..m {
            if let Some(&j) = table.get(&gamma) {
                let x = (i as u128 * m as u128 + j as u128) % order as u128;
                return Ok(Some(x as u64));
            }
            gamma = self.mul_raw(&gamma, &giant);
        }
        Ok(None)
    }

    /// Coefficients of the power-basis representative as a polynomial over
    /// `F_M`, trimmed of trailing zeros.
    pub fn to_poly(&self, e: &ExtElement) -> Vec<u64> {
        poly::trim(e.coeffs.clone())
    }

    /// All roots of `poly` in `F_M`, see [`roots_in_base_field`].
    pub fn roots_in_base_field(&self, poly: &[u64]) -> Vec<u64> {
        roots_in_base_field(&self.base, poly)
    }
}

impl TryFrom<ExtFieldRecord> for ExtField {
    type Error = FieldError;

    fn try_from(record: ExtFieldRecord) -> Result<Self, Self::Error> {
        if record.min_poly.len() != record.k + 1 {
            return Err(FieldError::MalformedPolynomial {
                modulus: record.m,
                degree: record.k,
            });
        }
        ExtField::from_min_poly(record.m, record.min_poly)
    }
}

/// Roots in `F_M` of a nonzero polynomial (coefficients low to high), with
/// multiplicity, in ascending order.
///
/// Exhaustive scan over the base field; each root is divided out with
/// synthetic division as long as it keeps vanishing.
pub fn roots_in_base_field(base: &PrimeField, poly: &[u64]) -> Vec<u64> {
    let mut p = poly::trim(poly.iter().map(|&c| c % base.modulus).collect());
    let mut roots = Vec::new();
    if p.len() < 2 {
        return roots;
    }
    for r in 0..base.modulus {
        while p.len() >= 2 && base.eval(&p, r) == 0 {
            p = poly::div_linear(base, &p, r);
            roots.push(r);
        }
        if p.len() < 2 {
            break;
        }
    }
    roots
}

/// Expands `prod (x - r)` over `F_M`, coefficients low to high.
pub fn poly_from_roots(base: &PrimeField, roots: &[u64]) -> Vec<u64> {
    let mut p = vec![1u64];
    for &r in roots {
        p = poly::mul(base, &p, &[base.neg(r), 1]);
    }
    p
}

pub(crate) mod poly {
    //! Dense polynomials over `F_M`, coefficients low to high. The zero
    //! polynomial is the empty vector once trimmed.

    use super::PrimeField;

    pub fn trim(mut p: Vec<u64>) -> Vec<u64> {
        while p.last() == Some(&0) {
            p.pop();
        }
        p
    }

    pub fn sub(f: &PrimeField, a: &[u64], b: &[u64]) -> Vec<u64> {
        let n = a.len().max(b.len());
        (0..n)
            .map(|i| f.sub(*a.get(i).unwrap_or(&0), *b.get(i).unwrap_or(&0)))
            .collect()
    }

    pub fn mul(f: &PrimeField, a: &[u64], b: &[u64]) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = f.add(out[i + j], f.mul(x, y));
            }
        }
        trim(out)
    }

    /// Remainder of `a` modulo nonzero `m`.
    pub fn rem(f: &PrimeField, a: &[u64], m: &[u64]) -> Vec<u64> {
        let m = trim(m.to_vec());
        let mut r = trim(a.to_vec());
        let dm = m.len() - 1;
        let lead_inv = f.inv(m[dm]).expect("nonzero leading coefficient");
        while r.len() > dm {
            let top = r.len() - 1;
            let c = f.mul(r[top], lead_inv);
            let shift = top - dm;
            for (j, &mj) in m.iter().enumerate() {
                r[shift + j] = f.sub(r[shift + j], f.mul(c, mj));
            }
            r = trim(r);
        }
        r
    }

    pub fn gcd(f: &PrimeField, a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut a = trim(a.to_vec());
        let mut b = trim(b.to_vec());
        while !b.is_empty() {
            let r = rem(f, &a, &b);
            a = b;
            b = r;
        }
        // normalize to monic
        if let Some(&lead) = a.last() {
            let inv = f.inv(lead).expect("nonzero");
            a.iter_mut().for_each(|c| *c = f.mul(*c, inv));
        }
        a
    }

    pub fn pow_mod(f: &PrimeField, base: &[u64], mut exp: u64, m: &[u64]) -> Vec<u64> {
        let mut acc = rem(f, &[1], m);
        let mut sq = rem(f, base, m);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = rem(f, &mul(f, &acc, &sq), m);
            }
            sq = rem(f, &mul(f, &sq, &sq), m);
            exp >>= 1;
        }
        acc
    }

    /// Quotient of `p` by `(x - r)`; the remainder is discarded.
    pub fn div_linear(f: &PrimeField, p: &[u64], r: u64) -> Vec<u64> {
        let n = p.len();
        let mut q = vec![0u64; n - 1];
        let mut carry = 0u64;
        for i in (1..n).rev() {
            carry = f.add(p[i], f.mul(carry, r));
            q[i - 1] = carry;
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};

    // Multiplicative order by repeated multiplication; test oracle only.
    fn brute_order(field: &ExtField, e: &ExtElement) -> u64 {
        let one = field.one();
        let mut cur = e.clone();
        let mut k = 1;
        while cur != one {
            cur = field.mul_raw(&cur, e);
            k += 1;
        }
        k
    }

    #[test]
    fn smallest_primitive_root_for_degree_one() {
        let f = find_primitive_extension(5, 1).unwrap();
        // x - 2 = x + 3 over F_5
        assert_eq!(f.min_poly(), &[3, 1]);
        assert_eq!(f.generator().coeffs(), &[2]);
        // exhaustive: 1 has order 1, 2 has order 4 mod 5
        assert_eq!(brute_order(&f, &f.generator()), 4);

        let f2 = find_primitive_extension(2, 1).unwrap();
        assert_eq!(f2.min_poly(), &[1, 1]);
        assert_eq!(f2.generator().coeffs(), &[1]);
    }

    #[test]
    fn degree_two_over_f5_has_order_24() {
        let f = find_primitive_extension(5, 2).unwrap();
        let a = f.generator();
        assert_eq!(f.pow_u64(&a, 24), f.one());
        for d in [1u64, 2, 3, 4, 6, 8, 12] {
            assert_ne!(f.pow_u64(&a, d), f.one(), "a^{d} = 1");
        }
        assert_eq!(brute_order(&f, &a), 24);
    }

    #[test]
    fn exhaustive_generator_order_small_fields() {
        for (m, k) in [
            (2, 2),
            (2, 5),
            (3, 3),
            (5, 2),
            (7, 2),
            (7, 3),
            (11, 2),
            (13, 3),
            (31, 2),
        ] {
            let f = find_primitive_extension(m, k).unwrap();
            let expected = m.pow(k as u32) - 1;
            assert_eq!(brute_order(&f, &f.generator()), expected, "M={m} K={k}");
        }
    }

    #[test]
    fn divisor_check_larger_fields() {
        for (m, k) in [(31, 4), (1031, 2), (101, 3), (2, 20)] {
            let f = find_primitive_extension(m, k).unwrap();
            let n = f.group_order_u64();
            let a = f.generator();
            assert_eq!(f.pow_u64(&a, n), f.one());
            for &(r, _) in f.order_factors() {
                assert_ne!(f.pow_u64(&a, n / r), f.one());
            }
        }
    }

    #[test]
    fn construction_errors() {
        assert_eq!(find_primitive_extension(6, 2), Err(FieldError::NotPrime(6)));
        assert_eq!(find_primitive_extension(5, 0), Err(FieldError::ZeroDegree));
        assert!(matches!(
            find_primitive_extension(1031, 16),
            Err(FieldError::OrderTooLarge { .. })
        ));
        // x^2 + 1 is reducible over F_5 (2^2 = -1)
        assert_eq!(
            ExtField::from_min_poly(5, vec![1, 0, 1]),
            Err(FieldError::NotPrimitive(5))
        );
        // x^2 + 1 is irreducible over F_7 but x has order 4, not 48
        assert_eq!(
            ExtField::from_min_poly(7, vec![1, 0, 1]),
            Err(FieldError::NotPrimitive(7))
        );
        assert!(matches!(
            ExtField::from_min_poly(7, vec![1, 0, 2]),
            Err(FieldError::MalformedPolynomial { .. })
        ));
    }

    #[test]
    fn irreducibility_matches_root_scan_for_quadratics() {
        // a quadratic is irreducible iff it has no roots
        let base = PrimeField::new(7).unwrap();
        for c0 in 0..7 {
            for c1 in 0..7 {
                let p = vec![c0, c1, 1];
                let rootless = (0..7).all(|x| base.eval(&p, x) != 0);
                assert_eq!(is_irreducible(&base, &p), rootless, "{p:?}");
            }
        }
    }

    #[test]
    fn arithmetic_identities() {
        let f = find_primitive_extension(5, 2).unwrap();
        let a = f.generator();
        assert_eq!(f.pow(&a, &BigUint::zero()).unwrap(), f.one());
        assert_eq!(f.pow(&a, &BigUint::from(24u32)).unwrap(), f.one());
        for i in 0..25u64 {
            let e = f.element(vec![i % 5, i / 5]).unwrap();
            assert_eq!(f.mul(&e, &f.one()).unwrap(), e);
            assert_eq!(f.add(&e, &f.zero()).unwrap(), e);
        }
        let other = find_primitive_extension(7, 2).unwrap();
        assert_eq!(
            f.mul(&a, &other.from_base(6)),
            Err(FieldError::ForeignElement)
        );
        assert_eq!(f.element(vec![5, 0]), Err(FieldError::ForeignElement));
    }

    #[test]
    fn pow_big_exponent_reduces_by_group_order() {
        let f = find_primitive_extension(7, 3).unwrap();
        let a = f.generator();
        let n = f.group_order();
        let e = &n * BigUint::from(1u64 << 40) + BigUint::from(17u32);
        assert_eq!(f.pow(&a, &e).unwrap(), f.pow_u64(&a, 17));
    }

    #[test]
    fn discrete_log_basics() {
        let f = find_primitive_extension(5, 2).unwrap();
        let a = f.generator();
        assert_eq!(f.discrete_log(&a).unwrap(), BigUint::one());
        assert_eq!(f.discrete_log(&f.one()).unwrap(), BigUint::zero());
        assert_eq!(f.discrete_log(&f.zero()), Err(FieldError::LogOfZero));
        let target = f.add(&a, &f.from_base(3)).unwrap();
        let s = f.discrete_log(&target).unwrap();
        assert!(s < f.group_order());
        assert_eq!(f.pow(&a, &s).unwrap(), target);
    }

    #[test]
    fn discrete_log_routes_agree_exhaustively() {
        for (m, k) in [(5, 2), (7, 3), (2, 6), (3, 4)] {
            let f = find_primitive_extension(m, k).unwrap();
            let a = f.generator();
            let mut e = f.one();
            for s in 0..f.group_order_u64() {
                assert_eq!(f.discrete_log(&e).unwrap(), BigUint::from(s));
                assert_eq!(f.discrete_log_bsgs(&e).unwrap(), BigUint::from(s));
                e = f.mul_raw(&e, &a);
            }
        }
    }

    #[test]
    fn roots_examples() {
        let f5 = PrimeField::new(5).unwrap();
        assert_eq!(roots_in_base_field(&f5, &[f5.neg(3), 1]), vec![3]);
        let f7 = PrimeField::new(7).unwrap();
        let p = poly_from_roots(&f7, &[1, 2]);
        assert_eq!(p, vec![2, 4, 1]);
        assert_eq!(roots_in_base_field(&f7, &p), vec![1, 2]);
        assert!(roots_in_base_field(&f7, &[1, 0, 1]).is_empty());
        // multiplicities
        let p = poly_from_roots(&f7, &[3, 3, 5]);
        assert_eq!(roots_in_base_field(&f7, &p), vec![3, 3, 5]);
    }

    #[test]
    fn record_round_trip_revalidates() {
        let f = find_primitive_extension(7, 3).unwrap();
        let json = serde_json::to_string(&f.to_record()).unwrap();
        let back: ExtFieldRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(ExtField::try_from(back).unwrap(), f);
        let bad = ExtFieldRecord {
            m: 7,
            k: 2,
            min_poly: vec![1, 0, 1],
        };
        assert!(ExtField::try_from(bad).is_err());
    }
}
