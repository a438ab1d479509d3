//! Prime indexing and the "specific number" arithmetic that decides which
//! description lengths activate the matrix case of the halting decompressor.
//!
//! An odd `m = p*k` with `p` prime and `k < p` is *specific*; `p` is then
//! necessarily the largest prime factor of `m` (every factor of `k` is below
//! `p`), so the parse is unique.

use std::sync::OnceLock;

use crate::bits::Nat;
use crate::error::{Error, Result};

/// Default value bound for the precomputed sieve.
pub const DEFAULT_SIEVE_LIMIT: u64 = 1_000_000;

/// The unique decomposition of a specific number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpecificParse {
    /// The specific number itself.
    pub m: Nat,
    /// Its large prime divider.
    pub p: Nat,
    /// Cofactor, `m = p * k` with `k < p`.
    pub k: Nat,
    /// Prime index of `p` (`p` is the `l`-th prime, `p_1 = 2`).
    pub l: Nat,
    /// `n = p - 1`.
    pub n: Nat,
}

/// Immutable prime table; concurrent reads are fine after construction.
pub struct Sieve {
    limit: u64,
    primes: Vec<u64>,
}

impl Sieve {
    pub fn new(limit: u64) -> Sieve {
        let limit = limit.max(2);
        let mut composite = vec![false; (limit + 1) as usize];
        let mut primes = Vec::new();
        for i in 2..=limit {
            if !composite[i as usize] {
                primes.push(i);
                let mut j = i * i;
                while j <= limit {
                    composite[j as usize] = true;
                    j += i;
                }
            }
        }
        Sieve { limit, primes }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// The `l`-th prime, 1-based: `nth_prime(1) = 2`.
    pub fn nth_prime(&self, l: Nat) -> Result<Nat> {
        if l == 0 || l > self.primes.len() as u64 {
            return Err(Error::PrimeIndexRange(l));
        }
        Ok(self.primes[(l - 1) as usize])
    }

    /// Inverse of [`nth_prime`](Self::nth_prime).
    pub fn prime_index(&self, p: Nat) -> Result<Nat> {
        if p > self.limit {
            return Err(Error::PrimeIndexRange(p));
        }
        match self.primes.binary_search(&p) {
            Ok(i) => Ok(i as u64 + 1),
            Err(_) => Err(Error::NotPrime(p)),
        }
    }

    pub fn is_prime(&self, m: Nat) -> Result<bool> {
        if m > self.limit {
            return Err(Error::FactorRange(m));
        }
        Ok(self.primes.binary_search(&m).is_ok())
    }

    /// Largest prime factor, by trial division over the sieve's primes.
    /// Sound for `m <= limit^2`.
    pub fn largest_prime_factor(&self, m: Nat) -> Result<Nat> {
        if m < 2 {
            return Err(Error::Precondition(format!("{m} has no prime factor")));
        }
        if m > self.limit.saturating_mul(self.limit) {
            return Err(Error::FactorRange(m));
        }
        let mut rest = m;
        let mut largest = 0;
        for &p in &self.primes {
            if p * p > rest {
                break;
            }
            while rest.is_multiple_of(p) {
                largest = largest.max(p);
                rest /= p;
            }
        }
        if rest > 1 {
            largest = largest.max(rest);
        }
        Ok(largest)
    }

    /// The unique specific parse of `m`, or `None` when `m` is not specific.
    /// Absence is a value, not an error.
    pub fn parse_specific(&self, m: Nat) -> Result<Option<SpecificParse>> {
        if m < 3 || m.is_multiple_of(2) {
            return Ok(None);
        }
        let p = self.largest_prime_factor(m)?;
        let k = m / p;
        if k >= p {
            return Ok(None);
        }
        let l = self.prime_index(p)?;
        Ok(Some(SpecificParse {
            m,
            p,
            k,
            l,
            n: p - 1,
        }))
    }
}

/// Shared sieve at the default limit, built on first use.
pub fn default_sieve() -> &'static Sieve {
    static SIEVE: OnceLock<Sieve> = OnceLock::new();
    SIEVE.get_or_init(|| Sieve::new(DEFAULT_SIEVE_LIMIT))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nth_prime_examples() {
        let s = Sieve::new(100);
        assert_eq!(s.nth_prime(1).unwrap(), 2);
        assert_eq!(s.nth_prime(3).unwrap(), 5);
        assert_eq!(s.nth_prime(7).unwrap(), 17);
        assert!(s.nth_prime(0).is_err());
        assert!(s.nth_prime(10_000).is_err());
    }

    #[test]
    fn prime_index_examples() {
        let s = default_sieve();
        assert_eq!(s.prime_index(2).unwrap(), 1);
        assert_eq!(s.prime_index(17).unwrap(), 7);
        assert_eq!(s.prime_index(5).unwrap(), 3);
        assert!(matches!(s.prime_index(9), Err(Error::NotPrime(9))));
        for l in 1..200 {
            let p = s.nth_prime(l).unwrap();
            assert_eq!(s.prime_index(p).unwrap(), l);
        }
    }

    #[test]
    fn parse_specific_examples() {
        let s = default_sieve();
        assert_eq!(
            s.parse_specific(15).unwrap(),
            Some(SpecificParse {
                m: 15,
                p: 5,
                k: 3,
                l: 3,
                n: 4
            })
        );
        assert_eq!(s.parse_specific(9).unwrap(), None); // 9 = 3*3 needs k < p
        assert_eq!(s.parse_specific(45).unwrap(), None); // 5^2 = 25 < 45
        // 255 = 17 * 15; verified against the naive factorizer below
        let parse = s.parse_specific(255).unwrap().unwrap();
        assert_eq!((parse.p, parse.k, parse.l, parse.n), (17, 15, 7, 16));
        assert_eq!(naive_largest_prime_factor(255), 17);
        assert_eq!(s.parse_specific(1).unwrap(), None);
        assert_eq!(s.parse_specific(2).unwrap(), None);
    }

    /// Independent factorizer: trial division by every integer.
    fn naive_largest_prime_factor(mut m: u64) -> u64 {
        let mut largest = 0;
        let mut d = 2;
        while d * d <= m {
            while m.is_multiple_of(d) {
                largest = d;
                m /= d;
            }
            d += 1;
        }
        if m > 1 {
            largest = m;
        }
        largest
    }

    #[test]
    fn specific_iff_largest_factor_squared_exceeds() {
        let s = default_sieve();
        for m in (3..100_000u64).step_by(2) {
            let p = naive_largest_prime_factor(m);
            let expect = p * p > m;
            let got = s.parse_specific(m).unwrap();
            assert_eq!(got.is_some(), expect, "m = {m}");
            if let Some(parse) = got {
                assert_eq!(parse.p, p);
                assert_eq!(parse.p * parse.k, m);
                assert!(parse.k < parse.p);
                assert_eq!(s.nth_prime(parse.l).unwrap(), parse.p);
                assert_eq!(parse.n, parse.p - 1);
            }
        }
    }

    #[test]
    fn parse_is_unique() {
        let s = default_sieve();
        for m in (3..100_000u64).step_by(2) {
            let mut parses = 0;
            for &p in &s.primes {
                if p > m {
                    break;
                }
                if m % p == 0 && m / p < p {
                    parses += 1;
                }
            }
            assert!(parses <= 1, "m = {m} has {parses} parses");
            assert_eq!(parses == 1, s.parse_specific(m).unwrap().is_some());
        }
    }

    #[test]
    fn every_reduction_length_parses() {
        // p * k is specific for every odd prime p and odd k < p; the
        // reduction's query lengths always land on this form. (p = 2 never
        // appears: its k range is empty.)
        let s = default_sieve();
        for &p in s.primes.iter().take_while(|&&p| p <= 1000) {
            if p == 2 {
                continue;
            }
            for k in (1..p).step_by(2) {
                let parse = s.parse_specific(p * k).unwrap();
                assert_eq!(parse.map(|sp| (sp.p, sp.k)), Some((p, k)), "p={p} k={k}");
            }
        }
    }
}
