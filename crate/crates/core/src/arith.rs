//! Number-theoretic helpers: primes, `LCM([k])`, binary digits, the Chinese
//! remainder representation (CRR) and the parity characterisation of
//! divisibility by powers of two used by the divisibility formulas.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("LCM is only defined for a non-empty range, got k = 0")]
    EmptyLcm,
    #[error("{value} is outside the CRR range [0, {modulus})")]
    OutOfRange { value: BigUint, modulus: BigUint },
    #[error("prime list must be non-empty")]
    NoPrimes,
}

/// The first `m` primes in ascending order.
pub fn primes_first(m: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(m);
    let mut candidate = 2u64;
    while primes.len() < m {
        if primes
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| !candidate.is_multiple_of(p))
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// `LCM({1, ..., k})`.
pub fn lcm_upto(k: u64) -> Result<BigUint, ArithError> {
    if k == 0 {
        return Err(ArithError::EmptyLcm);
    }
    Ok((1..=k).fold(BigUint::one(), |acc, i| acc.lcm(&BigUint::from(i))))
}

pub fn primorial(primes: &[u64]) -> BigUint {
    primes.iter().fold(BigUint::one(), |acc, &p| acc * p)
}

/// `bit_i(n)` for `i >= 1`, i.e. bit `i - 1` of the binary expansion.
///
/// # Panics
/// If `i == 0`.
pub fn bit(i: u64, n: &BigUint) -> bool {
    assert!(i >= 1, "bit positions start at 1");
    n.bit(i - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: &BigUint) -> Parity {
        if n.is_odd() {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

/// Parity of `|{n' in [1, n] : 2^(i-1) divides n'}|`, which is the parity of
/// `floor(n / 2^(i-1))`.
pub fn parity_divisible_count(i: u64, n: &BigUint) -> Parity {
    assert!(i >= 1, "bit positions start at 1");
    Parity::of(&(n >> (i - 1) as usize))
}

/// One-hot Chinese remainder representation of a number: `x(i, r)` is set
/// exactly when the number is congruent to `r` modulo the `i`-th prime.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CrrAssignment {
    primes: Vec<u64>,
    residues: Vec<u64>,
}

impl CrrAssignment {
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    /// The variable `x_{i,r}`, with `i` counted from 1.
    pub fn x(&self, i: usize, r: u64) -> bool {
        assert!(i >= 1 && i <= self.primes.len(), "prime index {i} out of range");
        assert!(r < self.primes[i - 1], "residue {r} out of range");
        self.residues[i - 1] == r
    }

    /// Recovers the represented number by the Chinese remainder theorem.
    pub fn reconstruct(&self) -> BigUint {
        let modulus = primorial(&self.primes);
        let mut acc = BigUint::zero();
        for (&p, &r) in self.primes.iter().zip(&self.residues) {
            let rest = &modulus / p;
            // p is prime and does not divide `rest`, so Fermat gives the inverse.
            let rest_mod = (&rest % p).to_u64().expect("residue fits");
            let inv = mod_pow(rest_mod, p - 2, p);
            acc += &rest * (r * inv % p);
        }
        acc % modulus
    }
}

fn mod_pow(mut base: u64, mut exp: u64, modulus: u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    let mut result = 1u64;
    base %= modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * base % modulus;
        }
        base = base * base % modulus;
        exp >>= 1;
    }
    result
}

/// `CRR(M)` with respect to `primes`; requires `0 <= M < prod(primes)`.
pub fn crr(primes: &[u64], value: &BigUint) -> Result<CrrAssignment, ArithError> {
    if primes.is_empty() {
        return Err(ArithError::NoPrimes);
    }
    let modulus = primorial(primes);
    if value >= &modulus {
        return Err(ArithError::OutOfRange {
            value: value.clone(),
            modulus,
        });
    }
    Ok(crr_unchecked(primes, value))
}

/// Residues of `value` modulo every prime, without the range check. Gadgets
/// read counters of any size this way.
pub fn crr_unchecked(primes: &[u64], value: &BigUint) -> CrrAssignment {
    let residues = primes
        .iter()
        .map(|&p| (value % p).to_u64().expect("residue fits"))
        .collect();
    CrrAssignment {
        primes: primes.to_vec(),
        residues,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn first_primes() {
        assert_eq!(primes_first(1), vec![2]);
        assert_eq!(primes_first(3), vec![2, 3, 5]);
        assert_eq!(primes_first(5), vec![2, 3, 5, 7, 11]);
    }

    #[test]
    fn lcm_small_values() {
        assert_eq!(lcm_upto(0), Err(ArithError::EmptyLcm));
        assert_eq!(lcm_upto(1).unwrap(), big(1));
        assert_eq!(lcm_upto(4).unwrap(), big(12));
        assert_eq!(lcm_upto(13).unwrap(), big(360360));
    }

    #[test]
    fn crr_examples() {
        let a = crr(&[2, 3], &big(3)).unwrap();
        assert!(a.x(1, 1) && a.x(2, 0));
        assert!(!a.x(1, 0));
        assert!(crr(&[2], &big(0)).unwrap().x(1, 0));
        assert_eq!(crr(&[2, 3, 5], &big(29)).unwrap().residues(), &[1, 2, 4]);
        assert!(matches!(
            crr(&[2, 3], &big(6)),
            Err(ArithError::OutOfRange { .. })
        ));
        assert_eq!(crr(&[], &big(0)), Err(ArithError::NoPrimes));
    }

    #[test]
    fn bits() {
        assert!(bit(1, &big(1)));
        assert!(bit(3, &big(4)));
        assert!(!bit(2, &big(5)));
    }

    #[test]
    fn parity_examples() {
        assert_eq!(parity_divisible_count(1, &big(3)), Parity::Odd);
        assert_eq!(parity_divisible_count(2, &big(4)), Parity::Even);
        assert_eq!(parity_divisible_count(3, &big(12)), Parity::Odd);
        assert_eq!(parity_divisible_count(4, &big(0)), Parity::Even);
    }

    proptest! {
        #[test]
        fn crr_round_trips(m in 1usize..6, seed in any::<u64>()) {
            let primes = primes_first(m);
            let modulus = primorial(&primes).to_u64().unwrap();
            let value = big(seed % modulus);
            let a = crr(&primes, &value).unwrap();
            for (i, &p) in primes.iter().enumerate() {
                prop_assert_eq!((0..p).filter(|&r| a.x(i + 1, r)).count(), 1);
            }
            prop_assert_eq!(a.reconstruct(), value);
        }

        #[test]
        fn parity_matches_enumeration(i in 1u64..8, n in 0u64..2000) {
            let step = 1u64 << (i - 1);
            let count = (1..=n).filter(|k| k % step == 0).count();
            let expected = if count % 2 == 0 { Parity::Even } else { Parity::Odd };
            prop_assert_eq!(parity_divisible_count(i, &big(n)), expected);
        }
    }
}
