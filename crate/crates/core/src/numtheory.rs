//! Modular arithmetic helpers shared by the counting formulas and invariants.

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumError {
    #[error("{a} is not invertible modulo {m}")]
    NotInvertible { a: i128, m: i128 },
    #[error("modulus must be positive, got {0}")]
    BadModulus(i128),
    #[error("3 does not divide {0}")]
    ThreeDoesNotDivide(i128),
    #[error("{n} does not divide {r}")]
    NotADivisor { n: i128, r: i128 },
    #[error("gcd({k}, {n}) != 1")]
    NotCoprime { k: i128, n: i128 },
}

/// An element of Z/m with its canonical representative in `[0, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Residue {
    pub value: i128,
    pub modulus: i128,
}

impl Residue {
    pub fn new(x: i128, m: i128) -> Self {
        assert!(m > 0, "modulus must be positive");
        Residue {
            value: x.mod_floor(&m),
            modulus: m,
        }
    }
}

/// `base + shift * modulus`, with the shift chosen to land in `[0, modulus)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxInteger {
    pub base: i128,
    pub shift: i128,
    pub modulus: i128,
}

impl AuxInteger {
    pub fn value(&self) -> i128 {
        self.base + self.shift * self.modulus
    }
}

pub fn gcd(a: i128, b: i128) -> i128 {
    a.gcd(&b)
}

pub fn mod_inverse(a: i128, m: i128) -> Result<Residue, NumError> {
    if m <= 0 {
        return Err(NumError::BadModulus(m));
    }
    let e = a.mod_floor(&m).extended_gcd(&m);
    if e.gcd != 1 {
        return Err(NumError::NotInvertible { a, m });
    }
    Ok(Residue::new(e.x, m))
}

pub fn canonical_shift(x: i128, m: i128) -> Result<AuxInteger, NumError> {
    if m <= 0 {
        return Err(NumError::BadModulus(m));
    }
    Ok(AuxInteger {
        base: x,
        shift: -Integer::div_floor(&x, &m),
        modulus: m,
    })
}

pub fn units_group(n: i128) -> Result<Vec<Residue>, NumError> {
    if n <= 0 {
        return Err(NumError::BadModulus(n));
    }
    Ok((0..n)
        .filter(|&k| gcd(k, n) == 1)
        .map(|k| Residue::new(k, n))
        .collect())
}

/// Distinct prime factors in increasing order, by trial division.
pub fn prime_factors(mut n: i128) -> Vec<i128> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn euler_phi(n: i128) -> i128 {
    prime_factors(n)
        .into_iter()
        .fold(n, |acc, p| acc / p * (p - 1))
}

pub fn divisors(n: i128) -> Vec<i128> {
    (1..=n).filter(|d| n % d == 0).collect()
}

/// Lifts a unit of Z/n to an integer coprime to `r` in the same class mod n.
///
/// Uses `n * p + k` where p multiplies the primes of r dividing neither k nor n.
pub fn coprime_lift(k: i128, n: i128, r: i128) -> Result<i128, NumError> {
    if n <= 0 || r <= 0 {
        return Err(NumError::BadModulus(n.min(r)));
    }
    if r % n != 0 {
        return Err(NumError::NotADivisor { n, r });
    }
    if gcd(k, n) != 1 {
        return Err(NumError::NotCoprime { k, n });
    }
    let p: i128 = prime_factors(r)
        .into_iter()
        .filter(|q| k % q != 0 && n % q != 0)
        .product();
    Ok(n * p + k)
}

/// Moves `m` to a different class mod 3 without changing it modulo `r / 3^d`.
///
/// When `m` is prime to 3 the candidate that stays prime to 3 is returned.
pub fn three_adic_adjust(m: i128, r: i128) -> Result<i128, NumError> {
    if r <= 0 || r % 3 != 0 {
        return Err(NumError::ThreeDoesNotDivide(r));
    }
    let mut c = r;
    while c % 3 == 0 {
        c /= 3;
    }
    let res = |x: i128| x.mod_floor(&3);
    let first = m + c;
    if res(m) == 0 || res(first) != 0 {
        Ok(first)
    } else {
        Ok(m + 2 * c)
    }
}
