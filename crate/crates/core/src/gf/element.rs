use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Smallest prime strictly greater than `n`.
pub fn next_prime_above(n: u64) -> u64 {
    let mut c = n + 1;
    while !is_prime(c) {
        c += 1;
    }
    c
}

/// Raw residue arithmetic modulo a prime `q`.
///
/// Hot loops (answer evaluation, elimination) work on `u64` residues through
/// this type instead of paying for a modulus per element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    q: u64,
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        // keeps a*b inside u64 for unreduced operands below q
        if q > u32::MAX as u64 {
            return Err(Error::InvalidParams(format!("modulus {q} exceeds 32 bits")));
        }
        Ok(Self { q })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.q
    }

    #[inline]
    pub fn reduce(&self, v: u64) -> u64 {
        v % self.q
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        (a * b) % self.q
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.q;
        base %= self.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Inverse by Fermat's little theorem.
    pub fn inv(&self, a: u64) -> Result<u64> {
        let a = a % self.q;
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(a, self.q - 2))
    }

    pub fn element(&self, v: u64) -> FieldElement {
        FieldElement {
            value: v % self.q,
            modulus: self.q,
        }
    }
}

/// An element of GF(q) tagged with its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    modulus: u64,
}

impl FieldElement {
    pub fn new(value: u64, modulus: u64) -> Result<Self> {
        Ok(PrimeField::new(modulus)?.element(value))
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn field(&self) -> PrimeField {
        PrimeField { q: self.modulus }
    }

    fn same_field(&self, other: &Self) {
        assert_eq!(self.modulus, other.modulus, "mixed field moduli");
    }

    pub fn inv(&self) -> Result<Self> {
        field_inv(*self)
    }
}

/// Multiplicative inverse in GF(q).
pub fn field_inv(a: FieldElement) -> Result<FieldElement> {
    let f = a.field();
    Ok(f.element(f.inv(a.value)?))
}

impl Add for FieldElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.same_field(&rhs);
        self.field().element(self.field().add(self.value, rhs.value))
    }
}

impl Sub for FieldElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.same_field(&rhs);
        self.field().element(self.field().sub(self.value, rhs.value))
    }
}

impl Mul for FieldElement {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.same_field(&rhs);
        self.field().element(self.field().mul(self.value, rhs.value))
    }
}

impl Neg for FieldElement {
    type Output = Self;
    fn neg(self) -> Self {
        self.field().element(self.field().neg(self.value))
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}
