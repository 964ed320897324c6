//! Lindström K-out-of-M signature codes for the integer adder channel.
//!
//! User `i` (ids `1..=M`) is mapped to `b_i = i - 1` in `F_M` and receives the
//! integer `s_i = log_a(a + b_i)` where `a` generates `F_{M^K}^*`. The integer
//! sum of any at most `K` of these logarithms identifies the subset: raising
//! `a` to the sum gives `prod (a + b_i)`, a degree-`L` polynomial in `a` whose
//! roots in `F_M` are the `-b_i`.
//!
//! A signature word is a leading count symbol `1` followed by the `q`-ary
//! digits of `s_i`, most significant first, zero padded to a fixed length.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::is_prime;
use crate::finite_field::{find_primitive_extension, ExtField, ExtFieldRecord, FieldError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("alphabet size {0} is not prime")]
    AlphabetNotPrime(u64),
    #[error("alphabet size {q} exceeds the number of users {m}")]
    AlphabetTooLarge { q: u64, m: u64 },
    #[error("user {0} has no signature in this codebook")]
    UnknownUser(u64),
    #[error("{0} subsets exceed the enumeration cap of {1}")]
    TooManySubsets(u128, u128),
    #[error("invalid codebook record: {0}")]
    InvalidRecord(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("column sums have length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no user contributed to these sums")]
    Empty,
    #[error("{count} users exceed the decodability threshold K = {k}")]
    Overloaded { count: u64, k: usize },
    #[error("column sums are not the sum of distinct signatures: {0}")]
    Malformed(&'static str),
    #[error("no subset of users matches the column sums")]
    NoMatch,
    #[error("{0} subsets match the column sums")]
    Ambiguous(usize),
}

/// One user's signature, `sig_len` symbols in `[0, q)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignatureWord {
    symbols: Vec<u64>,
}

impl SignatureWord {
    pub fn symbols(&self) -> &[u64] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// The integer carried by the digit positions (everything after the
    /// count symbol).
    pub fn value(&self, q: u64) -> BigUint {
        digits_value(&self.symbols[1..], q)
    }
}

/// Symbol-wise integer sums of a set of signature words.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnSums {
    sums: Vec<u64>,
}

impl ColumnSums {
    pub fn zero(len: usize) -> Self {
        Self { sums: vec![0; len] }
    }

    pub fn from_words<'a, I>(len: usize, words: I) -> Self
    where
        I: IntoIterator<Item = &'a SignatureWord>,
    {
        let mut out = Self::zero(len);
        for w in words {
            out.add(w);
        }
        out
    }

    pub fn from_vec(sums: Vec<u64>) -> Self {
        Self { sums }
    }

    /// Adds `word` column by column. Panics on a length mismatch.
    pub fn add(&mut self, word: &SignatureWord) {
        assert_eq!(word.len(), self.sums.len(), "signature length mismatch");
        for (s, &w) in self.sums.iter_mut().zip(&word.symbols) {
            *s += w;
        }
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.sums
    }

    pub fn len(&self) -> usize {
        self.sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }
}

/// Number of contributing users, read from the count symbol.
pub fn decode_count(sums: &ColumnSums) -> u64 {
    sums.sums.first().copied().unwrap_or(0)
}

fn digits_value(digits: &[u64], q: u64) -> BigUint {
    digits
        .iter()
        .fold(BigUint::zero(), |acc, &d| acc * q + BigUint::from(d))
}

/// Symbols per signature: `ceil(log_q(M^K - 1)) + 1`.
pub fn signature_len(m: u64, k: usize, q: u64) -> usize {
    let n = BigUint::from(m).pow(k as u32) - 1u32;
    let mut digits = 0;
    let mut reach = BigUint::from(1u32);
    while reach < n {
        reach *= q;
        digits += 1;
    }
    digits + 1
}

/// Bit-equivalent signature length `N_w = sig_len * log2 q`.
pub fn signature_bits_for(m: u64, k: usize, q: u64) -> f64 {
    signature_len(m, k, q) as f64 * (q as f64).log2()
}

/// The length guarantee `(K + 2) log2 M`.
pub fn signature_bits_bound(m: u64, k: usize) -> f64 {
    (k as f64 + 2.0) * (m as f64).log2()
}

/// `sum_{l=1}^{k} C(n, l)`, the number of nonempty subsets of size at most `k`.
pub fn subset_count(n: usize, k: usize) -> u128 {
    let mut total = 0u128;
    let mut c = 1u128;
    for l in 1..=k.min(n) {
        c = c * (n - l + 1) as u128 / l as u128;
        total += c;
    }
    total
}

/// Outcome of an exhaustive check of all subsets of size `1..=K`.
///
/// Integer sums `sum s_i` are only unique among subsets of equal size: a
/// `K`-subset product can coincide with a smaller one modulo the minimal
/// polynomial. The count symbol keeps such pairs apart, so cross-size
/// collisions are reported but do not fail the check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UniquenessReport {
    pub subsets: u128,
    pub distinct_column_sums: u128,
    pub same_size_sum_collisions: u128,
    pub cross_size_sum_collisions: u128,
    pub decode_failures: u128,
}

impl UniquenessReport {
    pub fn passed(&self) -> bool {
        self.distinct_column_sums == self.subsets
            && self.same_size_sum_collisions == 0
            && self.decode_failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureCodebook {
    field: ExtField,
    q: u64,
    sig_len: usize,
    logs: BTreeMap<u64, BigUint>,
}

impl SignatureCodebook {
    /// Builds the codebook for `M` users, threshold `K` and alphabet `q`.
    ///
    /// Requires `M` discrete logarithms in a group of order `M^K - 1`. For
    /// `K = 1` the user with `b_i = -a` has no logarithm and is left out.
    pub fn build(m: u64, k: usize, q: u64) -> Result<Self, CodeError> {
        if !is_prime(q) {
            return Err(CodeError::AlphabetNotPrime(q));
        }
        if q > m {
            return Err(CodeError::AlphabetTooLarge { q, m });
        }
        let field = find_primitive_extension(m, k)?;
        let a = field.generator();
        let mut logs = BTreeMap::new();
        for user in 1..=m {
            let target = field.add(&a, &field.from_base(user - 1))?;
            if target.is_zero() {
                continue;
            }
            logs.insert(user, field.discrete_log(&target)?);
        }
        Ok(Self {
            sig_len: signature_len(m, k, q),
            field,
            q,
            logs,
        })
    }

    pub fn field(&self) -> &ExtField {
        &self.field
    }

    pub fn m(&self) -> u64 {
        self.field.characteristic()
    }

    pub fn k(&self) -> usize {
        self.field.degree()
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn sig_len(&self) -> usize {
        self.sig_len
    }

    /// Users that own a signature, ascending.
    pub fn users(&self) -> impl Iterator<Item = u64> + '_ {
        self.logs.keys().copied()
    }

    pub fn s(&self, user: u64) -> Option<&BigUint> {
        self.logs.get(&user)
    }

    pub fn signature_bits(&self) -> f64 {
        self.sig_len as f64 * (self.q as f64).log2()
    }

    pub fn encode_signature(&self, user: u64) -> Result<SignatureWord, CodeError> {
        let s = self.logs.get(&user).ok_or(CodeError::UnknownUser(user))?;
        let mut symbols = vec![0u64; self.sig_len];
        symbols[0] = 1;
        let mut rest = s.clone();
        for slot in symbols[1..].iter_mut().rev() {
            let digit = &rest % self.q;
            *slot = digit.to_u64().expect("digit below q");
            rest /= self.q;
        }
        debug_assert!(rest.is_zero());
        Ok(SignatureWord { symbols })
    }

    fn check_len(&self, sums: &ColumnSums) -> Result<(), DecodeError> {
        if sums.len() != self.sig_len {
            return Err(DecodeError::LengthMismatch {
                expected: self.sig_len,
                got: sums.len(),
            });
        }
        Ok(())
    }

    /// `T = sum_j sums[j] * q^{d_j}` over the digit positions. Column sums are
    /// linear, so `T` equals the integer sum of the contributing `s_i`.
    pub fn exponent_sum(&self, sums: &ColumnSums) -> BigUint {
        digits_value(&sums.sums[1..], self.q)
    }

    /// Recovers the set of contributing users from the column sums of at most
    /// `K` distinct signatures.
    pub fn decode_active_set(&self, sums: &ColumnSums) -> Result<BTreeSet<u64>, DecodeError> {
        self.check_len(sums)?;
        let count = decode_count(sums);
        let k = self.k();
        if count == 0 {
            return Err(DecodeError::Empty);
        }
        if count > k as u64 {
            return Err(DecodeError::Overloaded { count, k });
        }
        let l = count as usize;
        let field = &self.field;
        let t = self.exponent_sum(sums);
        let e = field
            .pow(&field.generator(), &t)
            .expect("generator belongs to its field");
        // p(x) = prod (x + b_i), monic of degree L, with p(a) = e
        let coords = e.coeffs();
        let p: Vec<u64> = if l < k {
            if coords[l] != 1 || coords[l + 1..].iter().any(|&c| c != 0) {
                return Err(DecodeError::Malformed("product is not monic of degree L"));
            }
            coords[..=l].to_vec()
        } else {
            let base = field.base();
            let mut p = field.min_poly().to_vec();
            for (c, &x) in p.iter_mut().zip(coords) {
                *c = base.add(*c, x);
            }
            p
        };
        let roots = field.roots_in_base_field(&p);
        if roots.len() != l {
            return Err(DecodeError::Malformed("product does not split over F_M"));
        }
        let base = field.base();
        let mut users = BTreeSet::new();
        for r in roots {
            let user = base.neg(r) + 1;
            if !self.logs.contains_key(&user) || !users.insert(user) {
                return Err(DecodeError::Malformed("repeated or unassigned factor"));
            }
        }
        Ok(users)
    }

    /// Exhaustive decoder: scans every subset of size `L` and returns the
    /// unique one whose column sums match.
    pub fn brute_force_decode(&self, sums: &ColumnSums) -> Result<BTreeSet<u64>, DecodeError> {
        self.check_len(sums)?;
        let count = decode_count(sums);
        let k = self.k();
        if count > k as u64 {
            return Err(DecodeError::Overloaded { count, k });
        }
        let words: Vec<(u64, SignatureWord)> = self
            .users()
            .map(|u| (u, self.encode_signature(u).expect("listed user")))
            .collect();
        let mut matches = Vec::new();
        for combo in words.iter().combinations(count as usize) {
            let candidate = ColumnSums::from_words(self.sig_len, combo.iter().map(|(_, w)| w));
            if candidate == *sums {
                matches.push(combo.iter().map(|(u, _)| *u).collect::<BTreeSet<_>>());
            }
        }
        match matches.len() {
            0 => Err(DecodeError::NoMatch),
            1 => Ok(matches.pop().expect("one match")),
            n => Err(DecodeError::Ambiguous(n)),
        }
    }

    /// Enumerates every subset of size `1..=K`, checking that column sums and
    /// exponent sums are pairwise distinct and that the algebraic decoder
    /// returns each subset. Refuses when there are more than `cap` subsets.
    pub fn verify_uniqueness(&self, cap: u128) -> Result<UniquenessReport, CodeError> {
        let users: Vec<u64> = self.users().collect();
        let words: Vec<SignatureWord> = users
            .iter()
            .map(|&u| self.encode_signature(u).expect("listed user"))
            .collect();
        let total = subset_count(users.len(), self.k());
        if total > cap {
            return Err(CodeError::TooManySubsets(total, cap));
        }
        let mut seen_sums = HashSet::new();
        let mut seen_exps: HashMap<BigUint, usize> = HashMap::new();
        let (mut same_size, mut cross_size) = (0u128, 0u128);
        let mut failures = 0u128;
        for l in 1..=self.k().min(users.len()) {
            for idx in (0..users.len()).combinations(l) {
                let sums = ColumnSums::from_words(self.sig_len, idx.iter().map(|&i| &words[i]));
                let exp: BigUint = idx.iter().map(|&i| &self.logs[&users[i]]).sum();
                let expected: BTreeSet<u64> = idx.iter().map(|&i| users[i]).collect();
                if self.decode_active_set(&sums).ok() != Some(expected) {
                    failures += 1;
                }
                seen_sums.insert(sums);
                match seen_exps.insert(exp, l) {
                    Some(prev) if prev == l => same_size += 1,
                    Some(_) => cross_size += 1,
                    None => {}
                }
            }
        }
        Ok(UniquenessReport {
            subsets: total,
            distinct_column_sums: seen_sums.len() as u128,
            same_size_sum_collisions: same_size,
            cross_size_sum_collisions: cross_size,
            decode_failures: failures,
        })
    }

    /// Checks `a^{s_i} = a + b_i`, `s_i < M^K - 1`, `s_i > 0` for `K >= 2`, and
    /// distinctness of the `s_i`.
    pub fn check_invariants(&self) -> Result<(), CodeError> {
        let field = &self.field;
        let a = field.generator();
        let order = field.group_order();
        let mut distinct = HashSet::new();
        for (&user, s) in &self.logs {
            let bad = |why: &str| CodeError::InvalidRecord(format!("user {user}: {why}"));
            if user == 0 || user > self.m() {
                return Err(bad("id outside 1..=M"));
            }
            if *s >= order {
                return Err(bad("s_i not below M^K - 1"));
            }
            if self.k() >= 2 && s.is_zero() {
                return Err(bad("s_i = 0"));
            }
            let lhs = field.pow(&a, s)?;
            let rhs = field.add(&a, &field.from_base(user - 1))?;
            if lhs != rhs {
                return Err(bad("a^s_i != a + b_i"));
            }
            if !distinct.insert(s.clone()) {
                return Err(bad("duplicate s_i"));
            }
        }
        Ok(())
    }

    pub fn to_record(&self) -> CodebookRecord {
        let field = self.field.to_record();
        CodebookRecord {
            m: field.m,
            k: field.k,
            q: self.q,
            min_poly: field.min_poly,
            sig_len: self.sig_len,
            users: self
                .logs
                .iter()
                .map(|(&user, s)| UserEntry {
                    user,
                    s: s.to_str_radix(10),
                })
                .collect(),
        }
    }

    /// Rebuilds a codebook from its record, re-validating the field and
    /// every `a^{s_i} = a + b_i`.
    pub fn from_record(record: CodebookRecord) -> Result<Self, CodeError> {
        if !is_prime(record.q) {
            return Err(CodeError::AlphabetNotPrime(record.q));
        }
        if record.q > record.m {
            return Err(CodeError::AlphabetTooLarge {
                q: record.q,
                m: record.m,
            });
        }
        let field = ExtField::try_from(ExtFieldRecord {
            m: record.m,
            k: record.k,
            min_poly: record.min_poly,
        })?;
        let expected_len = signature_len(record.m, record.k, record.q);
        if record.sig_len != expected_len {
            return Err(CodeError::InvalidRecord(format!(
                "sig_len {} should be {expected_len}",
                record.sig_len
            )));
        }
        let mut logs = BTreeMap::new();
        for entry in record.users {
            let s = BigUint::parse_bytes(entry.s.as_bytes(), 10).ok_or_else(|| {
                CodeError::InvalidRecord(format!("user {}: s is not a decimal integer", entry.user))
            })?;
            if logs.insert(entry.user, s).is_some() {
                return Err(CodeError::InvalidRecord(format!(
                    "user {} listed twice",
                    entry.user
                )));
            }
        }
        let cb = Self {
            field,
            q: record.q,
            sig_len: expected_len,
            logs,
        };
        cb.check_invariants()?;
        Ok(cb)
    }
}

/// Serialized codebook; `s` values are decimal strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodebookRecord {
    pub m: u64,
    pub k: usize,
    pub q: u64,
    pub min_poly: Vec<u64>,
    pub sig_len: usize,
    pub users: Vec<UserEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserEntry {
    pub user: u64,
    pub s: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::IteratorRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sum_of(cb: &SignatureCodebook, users: &[u64]) -> ColumnSums {
        let words: Vec<_> = users
            .iter()
            .map(|&u| cb.encode_signature(u).unwrap())
            .collect();
        ColumnSums::from_words(cb.sig_len(), &words)
    }

    #[test]
    fn lengths_and_bits() {
        // ceil(log2 48) + 1 = 7
        assert_eq!(signature_len(7, 2, 2), 7);
        assert_eq!(signature_bits_for(7, 2, 2), 7.0);
        assert!(signature_bits_for(7, 2, 2) <= signature_bits_bound(7, 2));
        // ceil(log5 24) + 1 = 3
        assert_eq!(signature_len(5, 2, 5), 3);
        assert!((signature_bits_for(5, 2, 5) - 3.0 * 5f64.log2()).abs() < 1e-12);
        // ceil(log5 4) + 1 = 2
        assert_eq!(signature_len(5, 1, 5), 2);
        // exact power: 2^3 - 1 = 7 values fit in 3 bits
        assert_eq!(signature_len(2, 3, 2), 4);
        assert_eq!(subset_count(7, 3), 63);
        assert_eq!(subset_count(11, 2), 66);
    }

    #[test]
    fn codebook_m7_k2() {
        let cb = SignatureCodebook::build(7, 2, 2).unwrap();
        assert_eq!(cb.sig_len(), 7);
        assert_eq!(cb.users().count(), 7);
        cb.check_invariants().unwrap();
        assert!(cb.signature_bits() <= signature_bits_bound(7, 2));
    }

    #[test]
    fn degree_one_drops_one_user() {
        let cb = SignatureCodebook::build(5, 1, 2).unwrap();
        assert_eq!(cb.users().count(), 4);
        let s: HashSet<_> = cb.users().map(|u| cb.s(u).unwrap().clone()).collect();
        assert_eq!(s.len(), 4);
        // a = 2, so user with b = -2 = 3 (id 4) is missing
        assert!(cb.s(4).is_none());
        cb.check_invariants().unwrap();
        for u in cb.users() {
            assert_eq!(
                cb.decode_active_set(&sum_of(&cb, &[u])).unwrap(),
                BTreeSet::from([u])
            );
        }
    }

    #[test]
    fn word_layout() {
        let cb = SignatureCodebook::build(7, 3, 2).unwrap();
        for u in cb.users() {
            let w = cb.encode_signature(u).unwrap();
            assert_eq!(w.symbols()[0], 1);
            assert_eq!(w.len(), cb.sig_len());
            assert!(w.symbols().iter().all(|&d| d < 2));
            assert_eq!(&w.value(2), cb.s(u).unwrap());
        }
        assert_eq!(cb.encode_signature(8), Err(CodeError::UnknownUser(8)));
    }

    #[test]
    fn digit_expansion_msd_first() {
        // fabricate a codebook entry with s = 0b0101 and sig_len 5
        let mut cb = SignatureCodebook::build(5, 2, 2).unwrap();
        cb.sig_len = 5;
        cb.logs.insert(1, BigUint::from(5u32));
        assert_eq!(cb.encode_signature(1).unwrap().symbols(), &[1, 0, 1, 0, 1]);
    }

    #[test]
    fn count_symbol() {
        let cb = SignatureCodebook::build(7, 3, 2).unwrap();
        assert_eq!(decode_count(&ColumnSums::zero(cb.sig_len())), 0);
        assert_eq!(decode_count(&sum_of(&cb, &[4])), 1);
        let five = sum_of(&cb, &[1, 2, 3, 5, 7]);
        assert_eq!(decode_count(&five), 5);
        assert_eq!(
            cb.decode_active_set(&five),
            Err(DecodeError::Overloaded { count: 5, k: 3 })
        );
        assert_eq!(
            cb.decode_active_set(&ColumnSums::zero(cb.sig_len())),
            Err(DecodeError::Empty)
        );
        assert!(matches!(
            cb.decode_active_set(&ColumnSums::zero(3)),
            Err(DecodeError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn exhaustive_m7_k3() {
        let cb = SignatureCodebook::build(7, 3, 2).unwrap();
        let report = cb.verify_uniqueness(1_000).unwrap();
        assert_eq!(report.subsets, 63);
        assert!(report.passed(), "{report:?}");
        // e.g. s_2 + s_6 = s_1 + s_3 + s_7 for the first primitive cubic over F_7
        assert_eq!(report.cross_size_sum_collisions, 3);
        for l in 1..=3 {
            for combo in (1..=7u64).combinations(l) {
                let sums = sum_of(&cb, &combo);
                let expected: BTreeSet<u64> = combo.iter().copied().collect();
                assert_eq!(cb.brute_force_decode(&sums).unwrap(), expected);
                assert_eq!(cb.decode_active_set(&sums).unwrap(), expected);
            }
        }
    }

    #[test]
    fn algebraic_matches_brute_force_m31() {
        let cb = SignatureCodebook::build(31, 3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..1000 {
            let l = 1 + trial % 3;
            let users: Vec<u64> = (1..=31u64).choose_multiple(&mut rng, l);
            let sums = sum_of(&cb, &users);
            let fast = cb.decode_active_set(&sums).unwrap();
            assert_eq!(fast, users.iter().copied().collect());
            assert_eq!(cb.brute_force_decode(&sums).unwrap(), fast);
        }
    }

    #[test]
    fn brute_force_rejects_tampered_count() {
        let cb = SignatureCodebook::build(7, 3, 2).unwrap();
        let mut sums = sum_of(&cb, &[1, 4]).as_slice().to_vec();
        sums[0] = 3;
        let sums = ColumnSums::from_vec(sums);
        assert_eq!(cb.brute_force_decode(&sums), Err(DecodeError::NoMatch));
        assert!(cb.decode_active_set(&sums).is_err());
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            SignatureCodebook::build(7, 2, 4),
            Err(CodeError::AlphabetNotPrime(4))
        );
        assert_eq!(
            SignatureCodebook::build(7, 2, 11),
            Err(CodeError::AlphabetTooLarge { q: 11, m: 7 })
        );
        assert_eq!(
            SignatureCodebook::build(6, 2, 2),
            Err(CodeError::Field(FieldError::NotPrime(6)))
        );
    }

    #[test]
    fn record_round_trip() {
        let cb = SignatureCodebook::build(11, 2, 3).unwrap();
        let json = serde_json::to_string(&cb.to_record()).unwrap();
        let back = SignatureCodebook::from_record(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, cb);

        let mut rec = cb.to_record();
        rec.users[0].s = "2".into();
        assert!(SignatureCodebook::from_record(rec).is_err());
        let mut rec = cb.to_record();
        rec.sig_len += 1;
        assert!(SignatureCodebook::from_record(rec).is_err());
    }

    #[test]
    fn larger_alphabet_and_cap() {
        let cb = SignatureCodebook::build(13, 2, 5).unwrap();
        assert!(cb.verify_uniqueness(10_000).unwrap().passed());
        assert_eq!(
            cb.verify_uniqueness(10),
            Err(CodeError::TooManySubsets(subset_count(13, 2), 10))
        );
    }
}
