//! Shamir threshold sharing over a prime field.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShareError {
    #[error("invalid parameters: need 1 <= t <= n < p (t={t}, n={n})")]
    Parameters { n: usize, t: usize },
    #[error("value is not an element of the field")]
    OutOfField,
    #[error("need at least {needed} shares, got {got}")]
    InsufficientShares { needed: usize, got: usize },
    #[error("degenerate share set: x = {x} appears more than once or is zero")]
    DegenerateShares { x: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeField {
    modulus: BigUint,
}

impl PrimeField {
    /// 2^256 - 189, the largest prime below 2^256.
    pub fn production() -> Self {
        Self { modulus: (BigUint::one() << 256u32) - 189u32 }
    }

    pub fn new(modulus: BigUint) -> Self {
        Self { modulus }
    }

    pub fn small(modulus: u64) -> Self {
        Self { modulus: BigUint::from(modulus) }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn element(&self, value: BigUint) -> Result<FieldElement, ShareError> {
        if value < self.modulus {
            Ok(FieldElement(value))
        } else {
            Err(ShareError::OutOfField)
        }
    }

    pub fn element_u64(&self, value: u64) -> Result<FieldElement, ShareError> {
        self.element(BigUint::from(value))
    }

    /// Uniform element by rejection sampling on `bits(p)`-bit candidates.
    pub fn random(&self, rng: &mut impl RngCore) -> FieldElement {
        let bits = self.modulus.bits();
        let nbytes = bits.div_ceil(8) as usize;
        let excess = nbytes as u64 * 8 - bits;
        let mut buf = vec![0u8; nbytes];
        loop {
            rng.fill_bytes(&mut buf);
            buf[0] &= 0xff >> excess;
            let v = BigUint::from_bytes_be(&buf);
            if v < self.modulus {
                return FieldElement(v);
            }
        }
    }

    fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a + b) % &self.modulus
    }

    fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a + &self.modulus - b) % &self.modulus
    }

    fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.modulus
    }

    fn inv(&self, a: &BigUint) -> BigUint {
        a.modpow(&(&self.modulus - 2u32), &self.modulus)
    }

    /// Horner evaluation of `coeffs[0] + coeffs[1] x + ...`.
    fn eval(&self, coeffs: &[BigUint], x: &BigUint) -> BigUint {
        coeffs.iter().rev().fold(BigUint::zero(), |acc, c| self.add(&self.mul(&acc, x), c))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldElement(BigUint);

impl FieldElement {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_value(self) -> BigUint {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Share {
    pub x: FieldElement,
    pub y: FieldElement,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterSecret(pub FieldElement);

impl MasterSecret {
    /// Big-endian value padded to `width` bytes.
    pub fn to_bytes(&self, width: usize) -> Vec<u8> {
        crate::sign::fixed_be(self.0.value(), width)
    }
}

/// Shares at x = 1..=n of a random degree-(t-1) polynomial with f(0) = secret.
pub fn split(field: &PrimeField, secret: &MasterSecret, n: usize, t: usize, seed: u64) -> Result<Vec<Share>, ShareError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    split_with_rng(field, secret, n, t, &mut rng)
}

pub fn split_with_rng(
    field: &PrimeField,
    secret: &MasterSecret,
    n: usize,
    t: usize,
    rng: &mut impl RngCore,
) -> Result<Vec<Share>, ShareError> {
    if t == 0 || t > n || BigUint::from(n) >= field.modulus {
        return Err(ShareError::Parameters { n, t });
    }
    if secret.0 .0 >= field.modulus {
        return Err(ShareError::OutOfField);
    }
    let mut coeffs = vec![secret.0 .0.clone()];
    coeffs.extend((1..t).map(|_| field.random(rng).0));
    Ok((1..=n)
        .map(|i| {
            let x = BigUint::from(i);
            let y = field.eval(&coeffs, &x);
            Share { x: FieldElement(x), y: FieldElement(y) }
        })
        .collect())
}

/// Lagrange interpolation at zero over the first `t` shares.
pub fn reconstruct(field: &PrimeField, shares: &[Share], t: usize) -> Result<MasterSecret, ShareError> {
    if shares.len() < t || t == 0 {
        return Err(ShareError::InsufficientShares { needed: t.max(1), got: shares.len() });
    }
    let mut seen = BTreeSet::new();
    for s in shares {
        if s.x.0.is_zero() || !seen.insert(&s.x.0) {
            return Err(ShareError::DegenerateShares { x: s.x.0.to_string() });
        }
    }
    let used = &shares[..t];
    let mut acc = BigUint::zero();
    for (j, sj) in used.iter().enumerate() {
        let mut num = BigUint::one();
        let mut den = BigUint::one();
        for (m, sm) in used.iter().enumerate() {
            if m == j {
                continue;
            }
            num = field.mul(&num, &sm.x.0);
            den = field.mul(&den, &field.sub(&sm.x.0, &sj.x.0));
        }
        let basis = field.mul(&num, &field.inv(&den));
        acc = field.add(&acc, &field.mul(&sj.y.0, &basis));
    }
    Ok(MasterSecret(FieldElement(acc)))
}
