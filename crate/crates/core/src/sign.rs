//! ECDSA over a short Weierstrass curve with a selectable digest.
//!
//! `EC_SHA` and `EC_LLW` in the protocol are this module with
//! [`HashAlg::Sha1`] and [`HashAlg::Llw256`]. Nonces are derived from the
//! private key and the message digest, so signing is repeatable.
//!
//! Curve parameters are read from a small `key = hex` text format; the
//! bundled P-256 constants use it, and tests load toy curves the same way.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::hash::{llw_hash_parts, HashAlg, HashError};

const P256_TEXT: &str = include_str!("curves/p256.txt");

/// Wire width of each signature scalar.
pub const SCALAR_BYTES: usize = 32;
pub const SIGNATURE_BYTES: usize = 2 * SCALAR_BYTES;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SignError {
    #[error("public key is not a point on {curve}")]
    MalformedKey { curve: String },
    #[error("private scalar is outside [1, q-1]")]
    InvalidPrivateKey,
    #[error("key-generation seed is all zero")]
    ZeroSeed,
    #[error("curve parameters: {0}")]
    CurveFormat(String),
    #[error("point encoding: {0}")]
    PointEncoding(String),
    #[error(transparent)]
    Hash(#[from] HashError),
}

#[derive(Clone, PartialEq, Eq)]
pub enum Point {
    Infinity,
    Affine { x: BigUint, y: BigUint },
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Infinity => f.write_str("Infinity"),
            Point::Affine { x, y } => write!(f, "({x:x}, {y:x})"),
        }
    }
}

impl Point {
    pub fn affine(x: BigUint, y: BigUint) -> Self {
        Point::Affine { x, y }
    }

    pub fn x(&self) -> Option<&BigUint> {
        match self {
            Point::Affine { x, .. } => Some(x),
            Point::Infinity => None,
        }
    }

    /// `04 || x || y`, each coordinate left-padded to `width` bytes.
    pub fn to_uncompressed(&self, width: usize) -> Vec<u8> {
        match self {
            Point::Infinity => vec![0],
            Point::Affine { x, y } => {
                let mut out = Vec::with_capacity(1 + 2 * width);
                out.push(4);
                out.extend(fixed_be(x, width));
                out.extend(fixed_be(y, width));
                out
            }
        }
    }

    pub fn from_uncompressed(bytes: &[u8]) -> Result<Self, SignError> {
        match bytes {
            [0] => Ok(Point::Infinity),
            [4, rest @ ..] if !rest.is_empty() && rest.len() % 2 == 0 => {
                let (x, y) = rest.split_at(rest.len() / 2);
                Ok(Point::Affine { x: BigUint::from_bytes_be(x), y: BigUint::from_bytes_be(y) })
            }
            _ => Err(SignError::PointEncoding(format!("unexpected {}-byte encoding", bytes.len()))),
        }
    }
}

pub(crate) fn fixed_be(v: &BigUint, width: usize) -> Vec<u8> {
    let raw = v.to_bytes_be();
    let mut out = vec![0u8; width.saturating_sub(raw.len())];
    out.extend_from_slice(&raw[raw.len().saturating_sub(width)..]);
    out
}

#[derive(Clone, PartialEq, Eq)]
pub struct CurveParams {
    pub name: String,
    pub p: BigUint,
    pub a: BigUint,
    pub b: BigUint,
    pub g: Point,
    pub q: BigUint,
    pub cofactor: u32,
}

impl fmt::Debug for CurveParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CurveParams").field("name", &self.name).finish_non_exhaustive()
    }
}

/// Jacobian coordinates; `z == 0` is the point at infinity.
#[derive(Clone)]
struct Jacobian {
    x: BigUint,
    y: BigUint,
    z: BigUint,
}

impl CurveParams {
    pub fn p256() -> Self {
        Self::parse(P256_TEXT).expect("bundled P-256 parameters parse")
    }

    /// Parses `key = hex` lines (`name`, `p`, `a`, `b`, `gx`, `gy`, `q`,
    /// `cofactor`); `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, SignError> {
        let mut fields = std::collections::BTreeMap::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| SignError::CurveFormat(format!("expected key = value, got {line:?}")))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        let take = |k: &str| -> Result<&String, SignError> {
            fields.get(k).ok_or_else(|| SignError::CurveFormat(format!("missing {k}")))
        };
        let num = |k: &str| -> Result<BigUint, SignError> {
            BigUint::parse_bytes(take(k)?.as_bytes(), 16)
                .ok_or_else(|| SignError::CurveFormat(format!("{k} is not hex")))
        };
        let curve = CurveParams {
            name: take("name")?.clone(),
            p: num("p")?,
            a: num("a")?,
            b: num("b")?,
            g: Point::Affine { x: num("gx")?, y: num("gy")? },
            q: num("q")?,
            cofactor: take("cofactor")?
                .parse()
                .map_err(|_| SignError::CurveFormat("cofactor is not an integer".into()))?,
        };
        if !curve.contains(&curve.g) {
            return Err(SignError::CurveFormat("base point is not on the curve".into()));
        }
        Ok(curve)
    }

    /// Bytes needed for one coordinate.
    pub fn field_bytes(&self) -> usize {
        (self.p.bits() as usize).div_ceil(8)
    }

    pub fn contains(&self, point: &Point) -> bool {
        match point {
            Point::Infinity => true,
            Point::Affine { x, y } => {
                if x >= &self.p || y >= &self.p {
                    return false;
                }
                let lhs = (y * y) % &self.p;
                let rhs = (x * x * x + &self.a * x + &self.b) % &self.p;
                lhs == rhs
            }
        }
    }

    fn fsub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            &self.p - (b - a)
        }
    }

    fn fmul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.p
    }

    fn finv(&self, a: &BigUint) -> BigUint {
        a.modpow(&(&self.p - 2u32), &self.p)
    }

    fn to_jacobian(&self, p: &Point) -> Jacobian {
        match p {
            Point::Infinity => Jacobian { x: BigUint::one(), y: BigUint::one(), z: BigUint::zero() },
            Point::Affine { x, y } => Jacobian { x: x.clone(), y: y.clone(), z: BigUint::one() },
        }
    }

    fn to_affine(&self, j: &Jacobian) -> Point {
        if j.z.is_zero() {
            return Point::Infinity;
        }
        let zinv = self.finv(&j.z);
        let zinv2 = self.fmul(&zinv, &zinv);
        let zinv3 = self.fmul(&zinv2, &zinv);
        Point::Affine { x: self.fmul(&j.x, &zinv2), y: self.fmul(&j.y, &zinv3) }
    }

    fn jdouble(&self, pt: &Jacobian) -> Jacobian {
        if pt.z.is_zero() || pt.y.is_zero() {
            return Jacobian { x: BigUint::one(), y: BigUint::one(), z: BigUint::zero() };
        }
        let xx = self.fmul(&pt.x, &pt.x);
        let yy = self.fmul(&pt.y, &pt.y);
        let yyyy = self.fmul(&yy, &yy);
        let zz = self.fmul(&pt.z, &pt.z);
        let s = (self.fmul(&pt.x, &yy) * 4u32) % &self.p;
        let m = (xx * 3u32 + self.fmul(&self.a, &self.fmul(&zz, &zz))) % &self.p;
        let x3 = self.fsub(&self.fmul(&m, &m), &((&s * 2u32) % &self.p));
        let y3 = self.fsub(&self.fmul(&m, &self.fsub(&s, &x3)), &((yyyy * 8u32) % &self.p));
        let z3 = (self.fmul(&pt.y, &pt.z) * 2u32) % &self.p;
        Jacobian { x: x3, y: y3, z: z3 }
    }

    fn jadd(&self, p1: &Jacobian, p2: &Jacobian) -> Jacobian {
        if p1.z.is_zero() {
            return p2.clone();
        }
        if p2.z.is_zero() {
            return p1.clone();
        }
        let z1z1 = self.fmul(&p1.z, &p1.z);
        let z2z2 = self.fmul(&p2.z, &p2.z);
        let u1 = self.fmul(&p1.x, &z2z2);
        let u2 = self.fmul(&p2.x, &z1z1);
        let s1 = self.fmul(&p1.y, &self.fmul(&p2.z, &z2z2));
        let s2 = self.fmul(&p2.y, &self.fmul(&p1.z, &z1z1));
        if u1 == u2 {
            return if s1 == s2 {
                self.jdouble(p1)
            } else {
                Jacobian { x: BigUint::one(), y: BigUint::one(), z: BigUint::zero() }
            };
        }
        let h = self.fsub(&u2, &u1);
        let r = self.fsub(&s2, &s1);
        let hh = self.fmul(&h, &h);
        let hhh = self.fmul(&hh, &h);
        let v = self.fmul(&u1, &hh);
        let x3 = self.fsub(&self.fsub(&self.fmul(&r, &r), &hhh), &((&v * 2u32) % &self.p));
        let y3 = self.fsub(&self.fmul(&r, &self.fsub(&v, &x3)), &self.fmul(&s1, &hhh));
        let z3 = self.fmul(&h, &self.fmul(&p1.z, &p2.z));
        Jacobian { x: x3, y: y3, z: z3 }
    }

    pub fn add(&self, a: &Point, b: &Point) -> Point {
        self.to_affine(&self.jadd(&self.to_jacobian(a), &self.to_jacobian(b)))
    }

    pub fn double(&self, a: &Point) -> Point {
        self.to_affine(&self.jdouble(&self.to_jacobian(a)))
    }

    fn mul_jacobian(&self, k: &BigUint, point: &Point) -> Jacobian {
        // 4-bit fixed window, most significant nibble first
        let base = self.to_jacobian(point);
        let mut table = Vec::with_capacity(16);
        table.push(Jacobian { x: BigUint::one(), y: BigUint::one(), z: BigUint::zero() });
        table.push(base.clone());
        for i in 2..16 {
            let next = self.jadd(&table[i - 1], &base);
            table.push(next);
        }
        let mut acc = Jacobian { x: BigUint::one(), y: BigUint::one(), z: BigUint::zero() };
        let bytes = k.to_bytes_be();
        for byte in bytes {
            for nibble in [byte >> 4, byte & 0x0f] {
                for _ in 0..4 {
                    acc = self.jdouble(&acc);
                }
                if nibble != 0 {
                    acc = self.jadd(&acc, &table[nibble as usize]);
                }
            }
        }
        acc
    }

    pub fn mul(&self, k: &BigUint, point: &Point) -> Point {
        self.to_affine(&self.mul_jacobian(k, point))
    }

    pub fn mul_base(&self, k: &BigUint) -> Point {
        self.mul(k, &self.g)
    }

    /// `a*G + b*P` with a single final inversion.
    fn mul_add(&self, a: &BigUint, b: &BigUint, point: &Point) -> Point {
        let lhs = self.mul_jacobian(a, &self.g);
        let rhs = self.mul_jacobian(b, point);
        self.to_affine(&self.jadd(&lhs, &rhs))
    }

    fn scalar_inv(&self, k: &BigUint) -> BigUint {
        k.modpow(&(&self.q - 2u32), &self.q)
    }

    /// Digest bytes read big-endian and reduced mod q; SHA-1 output is
    /// implicitly zero-extended on the left.
    pub fn digest_to_scalar(&self, digest: &[u8]) -> BigUint {
        BigUint::from_bytes_be(&digest[..digest.len().min(SCALAR_BYTES)]) % &self.q
    }
}

pub struct KeyPair {
    pub private: BigUint,
    pub public: Point,
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair").field("public", &self.public).finish_non_exhaustive()
    }
}

impl Clone for KeyPair {
    fn clone(&self) -> Self {
        KeyPair { private: self.private.clone(), public: self.public.clone() }
    }
}

impl KeyPair {
    pub fn from_private(curve: &CurveParams, private: BigUint) -> Result<Self, SignError> {
        if private.is_zero() || private >= curve.q {
            return Err(SignError::InvalidPrivateKey);
        }
        let public = curve.mul_base(&private);
        Ok(KeyPair { private, public })
    }
}

/// Private scalar from `llw_hash("keygen" || seed || counter) mod q`,
/// bumping the counter until the scalar is nonzero.
pub fn keygen(curve: &CurveParams, seed: &[u8; 32]) -> Result<KeyPair, SignError> {
    if seed.iter().all(|&b| b == 0) {
        return Err(SignError::ZeroSeed);
    }
    for counter in 0u32.. {
        let d = llw_hash_parts(&[b"keygen", seed, &counter.to_be_bytes()])?;
        let scalar = BigUint::from_bytes_be(&d.0) % &curve.q;
        if !scalar.is_zero() {
            return KeyPair::from_private(curve, scalar);
        }
    }
    unreachable!("counter space exhausted")
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SignatureRS {
    pub r: BigUint,
    pub s: BigUint,
}

impl fmt::Debug for SignatureRS {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignatureRS {{ r: {:x}, s: {:x} }}", self.r, self.s)
    }
}

impl SignatureRS {
    pub fn to_bytes(&self) -> [u8; SIGNATURE_BYTES] {
        let mut out = [0u8; SIGNATURE_BYTES];
        out[..SCALAR_BYTES].copy_from_slice(&fixed_be(&self.r, SCALAR_BYTES));
        out[SCALAR_BYTES..].copy_from_slice(&fixed_be(&self.s, SCALAR_BYTES));
        out
    }

    pub fn from_bytes(bytes: &[u8; SIGNATURE_BYTES]) -> Self {
        SignatureRS {
            r: BigUint::from_bytes_be(&bytes[..SCALAR_BYTES]),
            s: BigUint::from_bytes_be(&bytes[SCALAR_BYTES..]),
        }
    }
}

/// Candidate nonce for signing attempt `counter`; may be zero, callers
/// skip zero values.
pub fn derive_nonce(curve: &CurveParams, private: &BigUint, digest: &[u8], counter: u32) -> Result<BigUint, SignError> {
    let key_bytes = fixed_be(private, SCALAR_BYTES);
    let h = llw_hash_parts(&[b"nonce", &key_bytes, digest, &counter.to_be_bytes()])?;
    Ok(BigUint::from_bytes_be(&h.0) % &curve.q)
}

/// One ECDSA attempt with an explicit nonce. `None` on r = 0 or s = 0.
pub fn sign_with_nonce(curve: &CurveParams, private: &BigUint, e: &BigUint, k: &BigUint) -> Option<SignatureRS> {
    if k.is_zero() {
        return None;
    }
    let r = curve.mul_base(k).x()?.mod_floor(&curve.q);
    if r.is_zero() {
        return None;
    }
    let s = (curve.scalar_inv(k) * ((e + &r * private) % &curve.q)) % &curve.q;
    if s.is_zero() {
        return None;
    }
    Some(SignatureRS { r, s })
}

pub fn sign(curve: &CurveParams, private: &BigUint, message: &[u8], alg: HashAlg) -> Result<SignatureRS, SignError> {
    let digest = alg.digest(message)?;
    sign_digest(curve, private, &digest)
}

pub fn sign_digest(curve: &CurveParams, private: &BigUint, digest: &[u8]) -> Result<SignatureRS, SignError> {
    if private.is_zero() || private >= &curve.q {
        return Err(SignError::InvalidPrivateKey);
    }
    let e = curve.digest_to_scalar(digest);
    for counter in 0u32.. {
        let k = derive_nonce(curve, private, digest, counter)?;
        if let Some(sig) = sign_with_nonce(curve, private, &e, &k) {
            return Ok(sig);
        }
    }
    unreachable!("counter space exhausted")
}

pub fn verify(curve: &CurveParams, public: &Point, message: &[u8], sig: &SignatureRS, alg: HashAlg) -> Result<bool, SignError> {
    let digest = alg.digest(message)?;
    verify_digest(curve, public, &digest, sig)
}

pub fn verify_digest(curve: &CurveParams, public: &Point, digest: &[u8], sig: &SignatureRS) -> Result<bool, SignError> {
    if matches!(public, Point::Infinity) || !curve.contains(public) {
        return Err(SignError::MalformedKey { curve: curve.name.clone() });
    }
    let in_range = |v: &BigUint| !v.is_zero() && v < &curve.q;
    if !in_range(&sig.r) || !in_range(&sig.s) {
        return Ok(false);
    }
    let e = curve.digest_to_scalar(digest);
    let w = curve.scalar_inv(&sig.s);
    let u1 = (&e * &w) % &curve.q;
    let u2 = (&sig.r * &w) % &curve.q;
    match curve.mul_add(&u1, &u2, public) {
        Point::Infinity => Ok(false),
        Point::Affine { x, .. } => Ok(x % &curve.q == sig.r),
    }
}
